use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use pressqubo::bench::{
    compute_metrics, export_report, load_report, select_best_penalty, sweep, write_best_csv, ExportOptions,
    SolverConfig, SweepPlan,
};
use pressqubo::lrqaoa::{circuit_stats, write_stats_csv, DEFAULT_LAYERS};
use pressqubo::model::{generate_instance, sanitize_instance, Instance};
use pressqubo::qubo::{build_qubo, decode, read_qubo, write_qubo, Evaluator, VariantSpec};
use pressqubo::scalar::parse_rational;
use pressqubo::{Error, ExactQubo, Scalar};

#[derive(Parser)]
#[command(name = "pressqubo", version, about = "Toolkit-to-machine assignment as QUBO: build, solve, benchmark")]
struct Cli {
    /// Print machine-readable JSON summaries instead of text.
    #[arg(long, global = true)]
    json: bool,

    /// Default directory for outputs when no explicit path is given.
    #[arg(long, global = true, env = "PRESSQUBO_OUT", default_value = ".")]
    out_dir: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random feasible instance.
    Gen(GenArgs),
    /// Compile an instance into a QUBO file plus variable-map sidecar.
    Build(BuildArgs),
    /// Sample a QUBO file and write a sample-set CSV.
    Solve(SolveArgs),
    /// Run a sweep plan and write runs.csv, metrics.csv and report.json.
    Sweep(SweepArgs),
    /// Summarize a report directory.
    Report(ReportArgs),
    /// Logical LR-QAOA circuit statistics for a QUBO file.
    Stats(StatsArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    toolkits: usize,
    #[arg(long)]
    machines: usize,
    #[arg(long)]
    capacity_bits: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantKind {
    Raw,
    Scaled,
    Rounded,
}

#[derive(Args)]
struct BuildArgs {
    instance: PathBuf,
    #[arg(long, value_enum)]
    variant: VariantKind,
    /// Capacity penalty for raw.
    #[arg(long, default_value = "1e3")]
    lm: String,
    /// Assignment penalty for raw.
    #[arg(long, default_value = "1e7")]
    lt: String,
    /// Exactly-once multiplier for scaled.
    #[arg(long, default_value = "1")]
    ls: String,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverKind {
    Sa,
    Random,
    Lrqaoa,
    Brute,
}

#[derive(Args)]
struct SolveArgs {
    qubo: PathBuf,
    #[arg(long, value_enum)]
    solver: SolverKind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    steps: Option<u64>,
    #[arg(long)]
    restarts: Option<u64>,
    #[arg(long)]
    t_start: Option<f64>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    shots: Option<u64>,
    #[arg(long)]
    p: Option<u64>,
    #[arg(long)]
    delta_gamma: Option<f64>,
    #[arg(long)]
    delta_beta: Option<f64>,
    /// Apply single-bit-flip descent to every sample.
    #[arg(long)]
    postprocess: bool,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    plan: PathBuf,
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Add per-run wall time to the reports (breaks byte-for-byte reruns).
    #[arg(long)]
    timings: bool,
}

#[derive(Args)]
struct ReportArgs {
    dir: PathBuf,
    /// Print the best penalty setting per toolkit count, formulation and
    /// solver, and write it to best.csv.
    #[arg(long)]
    select_best: bool,
    /// The stored best-cost ratios are lowest/optimum rather than
    /// optimum/lowest.
    #[arg(long)]
    inverse_ratio: bool,
}

#[derive(Args)]
struct StatsArgs {
    qubo: PathBuf,
    #[arg(long, value_delimiter = ',')]
    p: Vec<usize>,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Input(_) | Error::Json(_) => 2,
        Error::TooLarge { .. } | Error::Overflow(_) => 3,
        Error::Infeasible | Error::Undefined(_) | Error::GenerationFailed { .. } => 4,
        Error::Io(_) | Error::Csv(_) => 5,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Gen(a) => cmd_gen(&cli, a),
        Command::Build(a) => cmd_build(&cli, a),
        Command::Solve(a) => cmd_solve(&cli, a),
        Command::Sweep(a) => cmd_sweep(&cli, a),
        Command::Report(a) => cmd_report(&cli, a),
        Command::Stats(a) => cmd_stats(&cli, a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn emit(cli: &Cli, summary: Value, text: impl FnOnce() -> String) {
    if cli.json {
        println!("{summary}");
    } else {
        println!("{}", text());
    }
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into())
}

fn default_output(cli: &Cli, given: &Option<PathBuf>, name: String) -> pressqubo::Result<PathBuf> {
    match given {
        Some(p) => Ok(p.clone()),
        None => {
            std::fs::create_dir_all(&cli.out_dir)?;
            Ok(cli.out_dir.join(name))
        }
    }
}

fn cmd_gen(cli: &Cli, a: &GenArgs) -> pressqubo::Result<()> {
    let inst = sanitize_instance(&generate_instance(a.toolkits, a.machines, a.capacity_bits, a.seed)?);
    inst.save(&a.output)?;
    let q: ExactQubo = build_qubo(&inst, &VariantSpec::Rounded)?;
    emit(
        cli,
        json!({"output": a.output, "id": inst.id, "toolkits": a.toolkits, "machines": a.machines, "qubits": q.n}),
        || {
            format!(
                "wrote {} ({} toolkits, {} machines, {} QUBO variables)",
                a.output.display(),
                a.toolkits,
                a.machines,
                q.n
            )
        },
    );
    Ok(())
}

fn cmd_build(cli: &Cli, a: &BuildArgs) -> pressqubo::Result<()> {
    let inst = sanitize_instance(&Instance::load(&a.instance)?);
    let variant = match a.variant {
        VariantKind::Raw => VariantSpec::Raw {
            lambda_m: parse_rational(&a.lm)?,
            lambda_t: parse_rational(&a.lt)?,
        },
        VariantKind::Scaled => VariantSpec::scaled(parse_rational(&a.ls)?),
        VariantKind::Rounded => VariantSpec::Rounded,
    };
    if !variant.on_default_grid() {
        eprintln!("warning: {variant} is off the default penalty grid");
    }
    let q: ExactQubo = build_qubo(&inst, &variant)?;
    let out = default_output(cli, &a.output, format!("{}.{}.coo", stem(&a.instance), variant.kind()))?;
    write_qubo(&q, &out)?;
    emit(
        cli,
        json!({"output": out, "variant": variant, "qubits": q.n, "terms": q.coeffs.len()}),
        || format!("wrote {} ({variant}, {} variables, {} terms)", out.display(), q.n, q.coeffs.len()),
    );
    Ok(())
}

fn solver_config(a: &SolveArgs) -> pressqubo::Result<SolverConfig> {
    let mut params: BTreeMap<String, Value> = BTreeMap::new();
    let counts = [("steps", a.steps), ("restarts", a.restarts), ("shots", a.shots), ("p", a.p)];
    for (k, v) in counts {
        if let Some(v) = v {
            params.insert(k.into(), v.into());
        }
    }
    let reals = [
        ("t_start", a.t_start),
        ("t_end", a.t_end),
        ("delta_gamma", a.delta_gamma),
        ("delta_beta", a.delta_beta),
    ];
    for (k, v) in reals {
        if let Some(v) = v {
            params.insert(k.into(), v.into());
        }
    }
    let name = match a.solver {
        SolverKind::Sa => "sa",
        SolverKind::Random => "random",
        SolverKind::Lrqaoa => "lrqaoa",
        SolverKind::Brute => "brute",
    };
    SolverConfig::from_params(name, &params)
}

fn cmd_solve(cli: &Cli, a: &SolveArgs) -> pressqubo::Result<()> {
    let config = solver_config(a)?;
    let q: ExactQubo = read_qubo(&a.qubo)?;
    let mut samples = config.run(&q, a.seed)?;
    if a.postprocess {
        samples = samples.postprocessed(&Evaluator::new(&q));
    }
    let out = default_output(cli, &a.output, format!("{}.{}.csv", stem(&a.qubo), config.name()))?;
    samples.save(&out)?;
    let best = samples.best().expect("solvers return at least one sample");
    let assignment = match &q.varmap {
        Some(map) => decode(&q, &best.bits)?
            .candidate
            .machines
            .iter()
            .zip(&map.toolkits)
            .map(|(ms, t)| {
                let names: Vec<&str> = ms.iter().map(|&m| map.machines[m].as_str()).collect();
                (t.clone(), names.join("+"))
            })
            .collect::<BTreeMap<_, _>>(),
        None => BTreeMap::new(),
    };
    emit(
        cli,
        json!({
            "output": out,
            "solver": config.label(),
            "shots": samples.total_shots(),
            "distinct": samples.entries.len(),
            "best_energy": best.energy.render(),
            "best_bits": best.bits.to_string(),
            "best_assignment": assignment,
        }),
        || {
            let mut s = format!(
                "wrote {} ({}, {} shots, {} distinct)\nbest energy {} at {}",
                out.display(),
                config.label(),
                samples.total_shots(),
                samples.entries.len(),
                best.energy.render(),
                best.bits
            );
            for (t, m) in &assignment {
                s.push_str(&format!("\n  {t} -> {}", if m.is_empty() { "-" } else { m }));
            }
            s
        },
    );
    Ok(())
}

fn cmd_sweep(cli: &Cli, a: &SweepArgs) -> pressqubo::Result<()> {
    let plan = SweepPlan::load(&a.plan)?;
    let records = sweep(&plan, a.workers)?;
    let metrics = compute_metrics(&records);
    let dir = a.output.clone().unwrap_or_else(|| cli.out_dir.clone());
    export_report(
        &dir,
        &records,
        &metrics,
        ExportOptions {
            include_timings: a.timings,
        },
    )?;
    let failed = records.iter().filter(|r| r.error.is_some()).count();
    for r in records.iter().filter(|r| r.error.is_some()) {
        eprintln!(
            "warning: {} {} {} seed {}: {}",
            r.instance_id,
            r.variant,
            r.solver_label(),
            r.seed,
            r.error.as_deref().unwrap_or_default()
        );
    }
    emit(
        cli,
        json!({"output": dir, "runs": records.len(), "failed": failed, "groups": metrics.groups.len()}),
        || {
            format!(
                "wrote {} ({} runs, {failed} failed, {} groups)",
                dir.display(),
                records.len(),
                metrics.groups.len()
            )
        },
    );
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or("-".into(), |x| format!("{x:.4}"))
}

fn cmd_report(cli: &Cli, a: &ReportArgs) -> pressqubo::Result<()> {
    let report = load_report(&a.dir, a.inverse_ratio)?;
    if a.select_best {
        let (best, warnings) = select_best_penalty(&report.metrics.groups);
        for w in &warnings {
            eprintln!("warning: {w}");
        }
        if a.dir.is_dir() {
            let f = std::fs::File::create(a.dir.join("best.csv"))?;
            write_best_csv(&best, std::io::BufWriter::new(f))?;
        }
        if cli.json {
            println!("{}", serde_json::to_string(&best)?);
        } else {
            write_best_csv(&best, std::io::stdout().lock())?;
        }
        return Ok(());
    }
    if cli.json {
        println!("{}", serde_json::to_string(&report.metrics)?);
        return Ok(());
    }
    let mut out = std::io::stdout().lock();
    writeln!(out, "{} runs, {} groups", report.records.len(), report.metrics.groups.len())?;
    for g in &report.metrics.groups {
        writeln!(
            out,
            "{}  {}  {}  valid {}  near-opt {}  ratio {}",
            g.instance_id,
            g.variant,
            g.solver,
            fmt_opt(g.percent_valid),
            fmt_opt(g.percent_near_opt),
            fmt_opt(g.best_cost_ratio)
        )?;
    }
    for c in &report.metrics.correlations {
        writeln!(
            out,
            "pearson {} {} vs {} ({} points): {}",
            c.variant_kind,
            c.solver_a,
            c.solver_b,
            c.points,
            fmt_opt(c.r)
        )?;
    }
    Ok(())
}

fn cmd_stats(cli: &Cli, a: &StatsArgs) -> pressqubo::Result<()> {
    let q: ExactQubo = read_qubo(&a.qubo)?;
    let layers = if a.p.is_empty() { DEFAULT_LAYERS.to_vec() } else { a.p.clone() };
    let rows: Vec<_> = layers.iter().map(|&p| circuit_stats(&q, p)).collect();
    if cli.json {
        println!("{}", serde_json::to_string(&rows)?);
    } else {
        write_stats_csv(&rows, std::io::stdout().lock())?;
    }
    Ok(())
}
