//! Experiment grid runner, solution-quality metrics and report files.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::lrqaoa::{lr_schedule, run_lrqaoa, DEFAULT_DELTA_BETA, DEFAULT_DELTA_GAMMA, DEFAULT_SHOTS};
use crate::model::{exact_solve, sanitize_instance, Instance, IntegerTables};
use crate::qubo::{build_qubo, decode, ExactQubo, Qubo, VariantSpec};
use crate::scalar::{parse_rational, ratio, Rational, Scalar};
use crate::solvers::{
    brute_force_qubo, random_sample, simulated_anneal, SaConfig, SampleEntry, SampleMeta, SampleSet,
    DEFAULT_RANDOM_SHOTS, DEFAULT_SA_RESTARTS, DEFAULT_SA_STEPS,
};

/// Default relative tolerance for "near optimal".
pub fn default_tolerance() -> Rational {
    ratio(1, 100)
}

/// Shot counts of one sample set, split by validity and closeness to the
/// optimum.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub shots: u64,
    pub valid: u64,
    pub near_opt: u64,
    #[serde(with = "opt_rational")]
    pub best_valid_cost: Option<Rational>,
}

impl Tally {
    pub fn merge(&mut self, other: &Tally) {
        self.shots += other.shots;
        self.valid += other.valid;
        self.near_opt += other.near_opt;
        if let Some(c) = &other.best_valid_cost {
            if self.best_valid_cost.as_ref().is_none_or(|b| c < b) {
                self.best_valid_cost = Some(c.clone());
            }
        }
    }

    pub fn percent_valid(&self) -> Option<Rational> {
        (self.shots > 0).then(|| frac(self.valid, self.shots))
    }

    pub fn percent_near_opt(&self) -> Option<Rational> {
        (self.valid > 0).then(|| frac(self.near_opt, self.valid))
    }

    /// `opt / lowest valid cost`; 1 when both are zero.
    pub fn best_cost_ratio(&self, opt: &Rational) -> Option<Rational> {
        let best = self.best_valid_cost.as_ref()?;
        Some(if best.is_zero() {
            Rational::one()
        } else {
            opt / best
        })
    }
}

fn frac(a: u64, b: u64) -> Rational {
    Rational::new(a.into(), b.into())
}

/// Decodes every entry and counts multiplicity-weighted valid and
/// near-optimal samples. `opt` may be absent, in which case nothing counts as
/// near-optimal.
pub fn tally<S: Scalar>(
    samples: &SampleSet<S>,
    inst: &Instance,
    q: &Qubo<S>,
    opt: Option<&Rational>,
    tol: &Rational,
) -> Result<Tally> {
    let map = q
        .varmap
        .as_ref()
        .ok_or_else(|| Error::input("QUBO has no variable map to decode against"))?;
    if map.toolkits.len() != inst.n_toolkits() || map.machines.len() != inst.n_machines() {
        return Err(Error::input("QUBO variable map does not match the instance shape"));
    }
    let tables = IntegerTables::new(inst)?;
    let bound = opt.map(|o| o * (Rational::one() + tol));
    let mut out = Tally::default();
    for e in &samples.entries {
        out.shots += e.multiplicity;
        let Some(a) = decode(q, &e.bits)?.candidate.to_assignment() else {
            continue;
        };
        if !tables.fits(&a) {
            continue;
        }
        out.valid += e.multiplicity;
        let cost = tables.cost_of(&a);
        if bound.as_ref().is_some_and(|b| &cost <= b) {
            out.near_opt += e.multiplicity;
        }
        if out.best_valid_cost.as_ref().is_none_or(|b| &cost < b) {
            out.best_valid_cost = Some(cost);
        }
    }
    Ok(out)
}

/// Multiplicity-weighted share of samples that decode to a feasible total
/// assignment.
pub fn percent_valid<S: Scalar>(samples: &SampleSet<S>, inst: &Instance, q: &Qubo<S>) -> Result<Rational> {
    if samples.total_shots() == 0 {
        return Err(Error::input("empty sample set"));
    }
    let t = tally(samples, inst, q, None, &Rational::zero())?;
    Ok(t.percent_valid().expect("non-empty"))
}

/// Share of valid samples with cost at most `(1 + tol)·opt_cost`; `None`
/// without valid samples.
pub fn percent_near_opt<S: Scalar>(
    samples: &SampleSet<S>,
    inst: &Instance,
    q: &Qubo<S>,
    opt_cost: &Rational,
    tol: &Rational,
) -> Result<Option<Rational>> {
    Ok(tally(samples, inst, q, Some(opt_cost), tol)?.percent_near_opt())
}

/// `opt_cost / lowest valid cost`; `None` without valid samples.
pub fn best_cost_ratio<S: Scalar>(
    samples: &SampleSet<S>,
    inst: &Instance,
    q: &Qubo<S>,
    opt_cost: &Rational,
) -> Result<Option<Rational>> {
    Ok(tally(samples, inst, q, Some(opt_cost), &Rational::zero())?.best_cost_ratio(opt_cost))
}

/// Product-moment correlation coefficient.
pub fn pearson_r(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::input(format!("series lengths differ: {} vs {}", xs.len(), ys.len())));
    }
    if xs.len() < 2 {
        return Err(Error::input("correlation needs at least two points"));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Undefined("zero variance".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// A fully specified solver with its parameters.
#[derive(Clone, Debug, PartialEq)]
pub enum SolverConfig {
    Sa {
        steps: usize,
        restarts: usize,
        t_start: Option<f64>,
        t_end: Option<f64>,
    },
    Random {
        shots: usize,
    },
    Lrqaoa {
        p: usize,
        shots: usize,
        delta_gamma: f64,
        delta_beta: f64,
    },
    Brute,
}

impl SolverConfig {
    pub fn name(&self) -> &'static str {
        match self {
            SolverConfig::Sa { .. } => "sa",
            SolverConfig::Random { .. } => "random",
            SolverConfig::Lrqaoa { .. } => "lrqaoa",
            SolverConfig::Brute => "brute",
        }
    }

    /// Builds a config from scalar JSON parameters, filling paper defaults.
    pub fn from_params(name: &str, params: &BTreeMap<String, Value>) -> Result<Self> {
        let allowed: &[&str] = match name {
            "sa" => &["steps", "restarts", "t_start", "t_end"],
            "random" => &["shots"],
            "lrqaoa" => &["p", "shots", "delta_gamma", "delta_beta"],
            "brute" => &[],
            _ => return Err(Error::input(format!("unknown solver {name:?}"))),
        };
        if let Some(k) = params.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(Error::input(format!("solver {name} has no parameter {k:?}")));
        }
        let count = |k: &str, default: usize| -> Result<usize> {
            params.get(k).map_or(Ok(default), |v| {
                v.as_u64()
                    .and_then(|x| usize::try_from(x).ok())
                    .ok_or_else(|| Error::input(format!("{name}.{k} must be a non-negative integer, got {v}")))
            })
        };
        let real = |k: &str| -> Result<Option<f64>> {
            params.get(k).map_or(Ok(None), |v| {
                v.as_f64()
                    .map(Some)
                    .ok_or_else(|| Error::input(format!("{name}.{k} must be a number, got {v}")))
            })
        };
        Ok(match name {
            "sa" => SolverConfig::Sa {
                steps: count("steps", DEFAULT_SA_STEPS)?,
                restarts: count("restarts", DEFAULT_SA_RESTARTS)?,
                t_start: real("t_start")?,
                t_end: real("t_end")?,
            },
            "random" => SolverConfig::Random {
                shots: count("shots", DEFAULT_RANDOM_SHOTS)?,
            },
            "lrqaoa" => SolverConfig::Lrqaoa {
                p: count("p", 1)?,
                shots: count("shots", DEFAULT_SHOTS)?,
                delta_gamma: real("delta_gamma")?.unwrap_or(DEFAULT_DELTA_GAMMA),
                delta_beta: real("delta_beta")?.unwrap_or(DEFAULT_DELTA_BETA),
            },
            _ => SolverConfig::Brute,
        })
    }

    /// Parameters as display strings, in key order.
    pub fn params(&self) -> BTreeMap<String, String> {
        let mut out = BTreeMap::new();
        match self {
            SolverConfig::Sa {
                steps,
                restarts,
                t_start,
                t_end,
            } => {
                out.insert("steps".into(), steps.to_string());
                out.insert("restarts".into(), restarts.to_string());
                if let Some(t) = t_start {
                    out.insert("t_start".into(), t.to_string());
                }
                if let Some(t) = t_end {
                    out.insert("t_end".into(), t.to_string());
                }
            }
            SolverConfig::Random { shots } => {
                out.insert("shots".into(), shots.to_string());
            }
            SolverConfig::Lrqaoa {
                p,
                shots,
                delta_gamma,
                delta_beta,
            } => {
                out.insert("p".into(), p.to_string());
                out.insert("shots".into(), shots.to_string());
                out.insert("delta_gamma".into(), delta_gamma.to_string());
                out.insert("delta_beta".into(), delta_beta.to_string());
            }
            SolverConfig::Brute => {}
        }
        out
    }

    /// `name` or `name[k=v;k=v]`.
    pub fn label(&self) -> String {
        let params = self.params();
        if params.is_empty() {
            return self.name().to_string();
        }
        let inner: Vec<String> = params.iter().map(|(k, v)| format!("{k}={v}")).collect();
        format!("{}[{}]", self.name(), inner.join(";"))
    }

    pub fn run<S: Scalar>(&self, q: &Qubo<S>, seed: u64) -> Result<SampleSet<S>> {
        match *self {
            SolverConfig::Sa {
                steps,
                restarts,
                t_start,
                t_end,
            } => simulated_anneal(
                q,
                &SaConfig {
                    steps,
                    restarts,
                    t_start,
                    t_end,
                    seed,
                },
            ),
            SolverConfig::Random { shots } => random_sample(q, shots, seed),
            SolverConfig::Lrqaoa {
                p,
                shots,
                delta_gamma,
                delta_beta,
            } => run_lrqaoa(q, &lr_schedule(p, delta_gamma, delta_beta)?, shots, seed),
            SolverConfig::Brute => {
                let (bits, energy) = brute_force_qubo(q)?;
                let meta = SampleMeta {
                    solver: "brute".into(),
                    params: BTreeMap::new(),
                    seed,
                };
                Ok(SampleSet::from_entries(
                    vec![SampleEntry {
                        bits,
                        energy,
                        multiplicity: 1,
                    }],
                    meta,
                ))
            }
        }
    }
}

/// Variant selector in a plan: a grid name (`raw`, `scaled`, `rounded`,
/// `all`) or an explicit spec.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum VariantEntry {
    Grid(String),
    Spec(VariantSpec),
}

impl VariantEntry {
    pub fn expand(&self) -> Result<Vec<VariantSpec>> {
        match self {
            VariantEntry::Spec(v) => Ok(vec![v.clone()]),
            VariantEntry::Grid(name) => match name.as_str() {
                "raw" => Ok(VariantSpec::raw_grid()),
                "scaled" => Ok(VariantSpec::scaled_grid()),
                "rounded" => Ok(vec![VariantSpec::Rounded]),
                "all" => Ok(VariantSpec::full_grid()),
                _ => Err(Error::input(format!("unknown variant grid {name:?}"))),
            },
        }
    }
}

/// Solver entry in a plan. Array-valued parameters expand to their cartesian
/// product.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverEntry {
    pub name: String,
    #[serde(default)]
    pub params: BTreeMap<String, Value>,
}

impl SolverEntry {
    pub fn expand(&self) -> Result<Vec<SolverConfig>> {
        let mut combos: Vec<BTreeMap<String, Value>> = vec![BTreeMap::new()];
        for (k, v) in &self.params {
            let options = match v {
                Value::Array(items) if items.is_empty() => {
                    return Err(Error::input(format!("{}.{k} has no values", self.name)))
                }
                Value::Array(items) => items.clone(),
                other => vec![other.clone()],
            };
            combos = combos
                .into_iter()
                .flat_map(|base| {
                    options.iter().map(move |o| {
                        let mut next = base.clone();
                        next.insert(k.clone(), o.clone());
                        next
                    })
                })
                .collect();
        }
        combos
            .iter()
            .map(|p| SolverConfig::from_params(&self.name, p))
            .collect()
    }
}

fn default_variants() -> Vec<VariantEntry> {
    vec![VariantEntry::Grid("all".into())]
}

fn default_solvers() -> Vec<SolverEntry> {
    vec![SolverEntry {
        name: "sa".into(),
        params: BTreeMap::new(),
    }]
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

fn yes() -> bool {
    true
}

/// Sweep description. Relative instance paths resolve against the plan
/// file's directory when loaded with [`SweepPlan::load`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepPlan {
    pub instances: Vec<PathBuf>,
    #[serde(default = "default_variants")]
    pub variants: Vec<VariantEntry>,
    #[serde(default = "default_solvers")]
    pub solvers: Vec<SolverEntry>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    /// Apply single-bit-flip descent to every sample before scoring.
    #[serde(default = "yes")]
    pub postprocess: bool,
    /// Relative near-optimality tolerance as decimal or `p/q` text.
    #[serde(default)]
    pub tolerance: Option<String>,
}

impl SweepPlan {
    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::input(format!("bad sweep plan: {e}")))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut plan = Self::from_json_str(&std::fs::read_to_string(path)?)?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in &mut plan.instances {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(plan)
    }

    pub fn tolerance(&self) -> Result<Rational> {
        match &self.tolerance {
            None => Ok(default_tolerance()),
            Some(t) => {
                let v = parse_rational(t)?;
                if v < Rational::zero() {
                    return Err(Error::input("tolerance must be non-negative"));
                }
                Ok(v)
            }
        }
    }
}

/// One executed grid cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub instance_id: String,
    pub toolkits: usize,
    pub machines: usize,
    pub qubits: Option<usize>,
    pub variant: VariantSpec,
    pub solver: String,
    pub solver_params: BTreeMap<String, String>,
    pub seed: u64,
    pub postprocessed: bool,
    #[serde(with = "opt_rational")]
    pub opt_cost: Option<Rational>,
    pub distinct: Option<usize>,
    #[serde(with = "opt_rational")]
    pub best_energy: Option<Rational>,
    pub tally: Option<Tally>,
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time: Option<f64>,
}

impl RunRecord {
    pub fn solver_label(&self) -> String {
        if self.solver_params.is_empty() {
            return self.solver.clone();
        }
        let inner: Vec<String> = self.solver_params.iter().map(|(k, v)| format!("{k}={v}")).collect();
        format!("{}[{}]", self.solver, inner.join(";"))
    }

    pub fn percent_valid(&self) -> Option<Rational> {
        self.tally.as_ref()?.percent_valid()
    }

    pub fn percent_near_opt(&self) -> Option<Rational> {
        self.opt_cost.as_ref()?;
        self.tally.as_ref()?.percent_near_opt()
    }

    pub fn best_cost_ratio(&self) -> Option<Rational> {
        self.tally.as_ref()?.best_cost_ratio(self.opt_cost.as_ref()?)
    }
}

struct PreparedInstance {
    inst: Instance,
    opt: Option<Rational>,
}

struct Cell<'a> {
    prepared: &'a PreparedInstance,
    variant: &'a VariantSpec,
    qubo: &'a Result<ExactQubo>,
    solver: &'a SolverConfig,
    seed: u64,
}

/// Runs every (instance, variant, solver config, seed) cell. Records come
/// back in grid order regardless of `workers`; a failing cell is recorded
/// with its error and the sweep continues. `workers == 0` uses all cores.
pub fn sweep(plan: &SweepPlan, workers: usize) -> Result<Vec<RunRecord>> {
    let tol = plan.tolerance()?;
    let variants: Vec<VariantSpec> = plan
        .variants
        .iter()
        .map(VariantEntry::expand)
        .collect::<Result<Vec<_>>>()?
        .concat();
    let solvers: Vec<SolverConfig> = plan
        .solvers
        .iter()
        .map(SolverEntry::expand)
        .collect::<Result<Vec<_>>>()?
        .concat();
    let prepared: Vec<PreparedInstance> = plan
        .instances
        .iter()
        .map(|path| {
            let inst = sanitize_instance(&Instance::load(path)?);
            let opt = exact_solve(&inst).ok().map(|s| s.cost);
            Ok(PreparedInstance { inst, opt })
        })
        .collect::<Result<_>>()?;
    let qubos: Vec<Vec<Result<ExactQubo>>> = prepared
        .iter()
        .map(|p| variants.iter().map(|v| build_qubo(&p.inst, v)).collect())
        .collect();

    let mut cells = Vec::new();
    for (i, p) in prepared.iter().enumerate() {
        for (v, variant) in variants.iter().enumerate() {
            for solver in &solvers {
                for &seed in &plan.seeds {
                    cells.push(Cell {
                        prepared: p,
                        variant,
                        qubo: &qubos[i][v],
                        solver,
                        seed,
                    });
                }
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::input(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| {
        cells
            .par_iter()
            .map(|c| run_cell(c, plan.postprocess, &tol))
            .collect()
    }))
}

fn run_cell(cell: &Cell<'_>, postprocess: bool, tol: &Rational) -> RunRecord {
    let inst = &cell.prepared.inst;
    let mut record = RunRecord {
        instance_id: inst.id.clone(),
        toolkits: inst.n_toolkits(),
        machines: inst.n_machines(),
        qubits: cell.qubo.as_ref().ok().map(|q| q.n),
        variant: cell.variant.clone(),
        solver: cell.solver.name().to_string(),
        solver_params: cell.solver.params(),
        seed: cell.seed,
        postprocessed: postprocess,
        opt_cost: cell.prepared.opt.clone(),
        distinct: None,
        best_energy: None,
        tally: None,
        error: None,
        wall_time: None,
    };
    let start = Instant::now();
    let outcome = cell.qubo.as_ref().map_err(|e| e.to_string()).and_then(|q| {
        let mut samples = cell.solver.run(q, cell.seed).map_err(|e| e.to_string())?;
        if postprocess {
            samples = samples.postprocessed(&crate::qubo::Evaluator::new(q));
        }
        let t = tally(&samples, inst, q, cell.prepared.opt.as_ref(), tol).map_err(|e| e.to_string())?;
        Ok((samples, t))
    });
    record.wall_time = Some(start.elapsed().as_secs_f64());
    match outcome {
        Ok((samples, t)) => {
            record.distinct = Some(samples.entries.len());
            record.best_energy = samples.best().map(|e| e.energy.clone());
            record.tally = Some(t);
        }
        Err(e) => record.error = Some(e),
    }
    record
}

/// Aggregate over all seeds of one (instance, variant, solver config).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupMetrics {
    pub instance_id: String,
    pub toolkits: usize,
    pub qubits: Option<usize>,
    pub variant: VariantSpec,
    pub solver: String,
    pub runs: usize,
    pub failed_runs: usize,
    pub tally: Tally,
    #[serde(with = "opt_rational")]
    pub opt_cost: Option<Rational>,
    pub percent_valid: Option<f64>,
    pub percent_near_opt: Option<f64>,
    pub best_cost_ratio: Option<f64>,
}

/// Correlation of one metric between two solvers across the (instance,
/// penalty) points of one formulation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub variant_kind: String,
    pub metric: String,
    pub solver_a: String,
    pub solver_b: String,
    pub points: usize,
    pub r: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub groups: Vec<GroupMetrics>,
    pub correlations: Vec<Correlation>,
}

fn to_f64(r: Option<Rational>) -> Option<f64> {
    r.and_then(|r| r.to_f64())
}

pub fn compute_metrics(records: &[RunRecord]) -> MetricsReport {
    let mut groups: BTreeMap<(String, VariantSpec, String), GroupMetrics> = BTreeMap::new();
    for r in records {
        let key = (r.instance_id.clone(), r.variant.clone(), r.solver_label());
        let g = groups.entry(key).or_insert_with(|| GroupMetrics {
            instance_id: r.instance_id.clone(),
            toolkits: r.toolkits,
            qubits: r.qubits,
            variant: r.variant.clone(),
            solver: r.solver_label(),
            runs: 0,
            failed_runs: 0,
            tally: Tally::default(),
            opt_cost: r.opt_cost.clone(),
            percent_valid: None,
            percent_near_opt: None,
            best_cost_ratio: None,
        });
        g.runs += 1;
        match &r.tally {
            Some(t) => g.tally.merge(t),
            None => g.failed_runs += 1,
        }
    }
    let groups: Vec<GroupMetrics> = groups
        .into_values()
        .map(|mut g| {
            g.percent_valid = to_f64(g.tally.percent_valid());
            if let Some(opt) = &g.opt_cost {
                g.percent_near_opt = to_f64(g.tally.percent_near_opt());
                g.best_cost_ratio = to_f64(g.tally.best_cost_ratio(opt));
            }
            g
        })
        .collect();
    let correlations = correlations(&groups);
    MetricsReport { groups, correlations }
}

fn correlations(groups: &[GroupMetrics]) -> Vec<Correlation> {
    type Points<'a> = BTreeMap<(&'a str, &'a VariantSpec), f64>;
    let mut series: BTreeMap<(&str, &str), Points> = BTreeMap::new();
    for g in groups {
        if let Some(pv) = g.percent_valid {
            series
                .entry((g.variant.kind(), g.solver.as_str()))
                .or_default()
                .insert((g.instance_id.as_str(), &g.variant), pv);
        }
    }
    let mut out = Vec::new();
    for kind in ["raw", "scaled", "rounded"] {
        let solvers: Vec<&str> = series.keys().filter(|(k, _)| *k == kind).map(|(_, s)| *s).collect();
        for (i, a) in solvers.iter().enumerate() {
            for b in &solvers[i + 1..] {
                let sa = &series[&(kind, *a)];
                let sb = &series[&(kind, *b)];
                let (xs, ys): (Vec<f64>, Vec<f64>) =
                    sa.iter().filter_map(|(k, x)| sb.get(k).map(|y| (*x, *y))).unzip();
                out.push(Correlation {
                    variant_kind: kind.to_string(),
                    metric: "percent_valid".into(),
                    solver_a: a.to_string(),
                    solver_b: b.to_string(),
                    points: xs.len(),
                    r: pearson_r(&xs, &ys).ok(),
                });
            }
        }
    }
    out
}

/// Winner of one (toolkit count, formulation, solver config) group.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BestPenalty {
    pub toolkits: usize,
    pub variant_kind: String,
    pub solver: String,
    pub variant: VariantSpec,
    pub percent_valid: f64,
    pub best_cost_ratio: Option<f64>,
}

/// Picks the best penalty setting per (toolkit count, formulation, solver):
/// highest percent_valid, then highest best_cost_ratio, then the
/// lexicographically smallest penalty parameters. Groups without any scored
/// run are skipped and reported in the returned warnings.
pub fn select_best_penalty(groups: &[GroupMetrics]) -> (Vec<BestPenalty>, Vec<String>) {
    type Key = (usize, String, String);
    type Scores = BTreeMap<VariantSpec, (Option<f64>, Option<f64>)>;
    let mut by_key: BTreeMap<Key, Scores> = BTreeMap::new();
    for g in groups {
        let key = (g.toolkits, g.variant.kind().to_string(), g.solver.clone());
        let slot = by_key.entry(key).or_default().entry(g.variant.clone()).or_insert((None, None));
        // Several instances with the same toolkit count: keep the worst case.
        slot.0 = min_opt(slot.0, g.percent_valid);
        slot.1 = min_opt(slot.1, g.best_cost_ratio);
    }
    let mut best = Vec::new();
    let mut warnings = Vec::new();
    for ((toolkits, kind, solver), candidates) in by_key {
        let winner = candidates
            .iter()
            .filter_map(|(v, (pv, r))| pv.map(|pv| (v, pv, *r)))
            .max_by(|a, b| {
                a.1.total_cmp(&b.1)
                    .then_with(|| cmp_ratio(a.2, b.2))
                    .then_with(|| b.0.penalty_params().cmp(&a.0.penalty_params()))
            });
        match winner {
            Some((v, pv, r)) => best.push(BestPenalty {
                toolkits,
                variant_kind: kind,
                solver,
                variant: v.clone(),
                percent_valid: pv,
                best_cost_ratio: r,
            }),
            None => warnings.push(format!(
                "no scored runs for {toolkits} toolkits, {kind}, {solver}; skipped"
            )),
        }
    }
    (best, warnings)
}

fn min_opt(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

fn cmp_ratio(a: Option<f64>, b: Option<f64>) -> std::cmp::Ordering {
    match (a, b) {
        (Some(x), Some(y)) => x.total_cmp(&y),
        (Some(_), None) => std::cmp::Ordering::Greater,
        (None, Some(_)) => std::cmp::Ordering::Less,
        (None, None) => std::cmp::Ordering::Equal,
    }
}

/// Everything written to `report.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub records: Vec<RunRecord>,
    pub metrics: MetricsReport,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ExportOptions {
    /// Include per-run wall time (makes the files non-reproducible).
    pub include_timings: bool,
}

pub const RUNS_COLUMNS: [&str; 23] = [
    "instance_id",
    "toolkits",
    "machines",
    "qubits",
    "variant",
    "lambda_m",
    "lambda_t",
    "lambda_s",
    "solver",
    "solver_params",
    "seed",
    "postprocessed",
    "shots",
    "distinct",
    "valid_shots",
    "near_opt_shots",
    "best_energy",
    "best_valid_cost",
    "opt_cost",
    "percent_valid",
    "percent_near_opt",
    "best_cost_ratio",
    "error",
];

pub const METRICS_COLUMNS: [&str; 18] = [
    "instance_id",
    "toolkits",
    "qubits",
    "variant",
    "lambda_m",
    "lambda_t",
    "lambda_s",
    "solver",
    "runs",
    "failed_runs",
    "shots",
    "valid_shots",
    "near_opt_shots",
    "best_valid_cost",
    "opt_cost",
    "percent_valid",
    "percent_near_opt",
    "best_cost_ratio",
];

fn penalty_cells(v: &VariantSpec) -> [String; 3] {
    match v {
        VariantSpec::Raw { lambda_m, lambda_t } => [lambda_m.render(), lambda_t.render(), String::new()],
        VariantSpec::Scaled { lambda_s } => [String::new(), String::new(), lambda_s.render()],
        VariantSpec::Rounded => Default::default(),
    }
}

fn cell<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn rational_cell(v: Option<&Rational>) -> String {
    v.map(Scalar::render).unwrap_or_default()
}

/// Writes `runs.csv`, `metrics.csv` and `report.json` into `dir`, creating
/// it if needed. Undefined values are empty cells (CSV) or `null` (JSON).
pub fn export_report(dir: impl AsRef<Path>, records: &[RunRecord], metrics: &MetricsReport, opts: ExportOptions) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;

    let mut runs = csv::Writer::from_path(dir.join("runs.csv"))?;
    let mut header: Vec<&str> = RUNS_COLUMNS.to_vec();
    if opts.include_timings {
        header.push("wall_time");
    }
    runs.write_record(&header)?;
    for r in records {
        let t = r.tally.as_ref();
        let params: Vec<String> = r.solver_params.iter().map(|(k, v)| format!("{k}={v}")).collect();
        let mut row = vec![r.instance_id.clone(), r.toolkits.to_string(), r.machines.to_string(), cell(r.qubits), r.variant.kind().to_string()];
        row.extend(penalty_cells(&r.variant));
        row.extend([
            r.solver.clone(),
            params.join(";"),
            r.seed.to_string(),
            r.postprocessed.to_string(),
            cell(t.map(|t| t.shots)),
            cell(r.distinct),
            cell(t.map(|t| t.valid)),
            cell(t.map(|t| t.near_opt)),
            rational_cell(r.best_energy.as_ref()),
            rational_cell(t.and_then(|t| t.best_valid_cost.as_ref())),
            rational_cell(r.opt_cost.as_ref()),
            cell(to_f64(r.percent_valid())),
            cell(to_f64(r.percent_near_opt())),
            cell(to_f64(r.best_cost_ratio())),
            r.error.clone().unwrap_or_default(),
        ]);
        if opts.include_timings {
            row.push(cell(r.wall_time));
        }
        runs.write_record(&row)?;
    }
    runs.flush()?;

    let mut out = csv::Writer::from_path(dir.join("metrics.csv"))?;
    out.write_record(METRICS_COLUMNS)?;
    for g in &metrics.groups {
        let mut row = vec![g.instance_id.clone(), g.toolkits.to_string(), cell(g.qubits), g.variant.kind().to_string()];
        row.extend(penalty_cells(&g.variant));
        row.extend([
            g.solver.clone(),
            g.runs.to_string(),
            g.failed_runs.to_string(),
            g.tally.shots.to_string(),
            g.tally.valid.to_string(),
            g.tally.near_opt.to_string(),
            rational_cell(g.tally.best_valid_cost.as_ref()),
            rational_cell(g.opt_cost.as_ref()),
            cell(g.percent_valid),
            cell(g.percent_near_opt),
            cell(g.best_cost_ratio),
        ]);
        out.write_record(&row)?;
    }
    out.flush()?;

    let report = Report {
        records: records
            .iter()
            .map(|r| RunRecord {
                wall_time: if opts.include_timings { r.wall_time } else { None },
                ..r.clone()
            })
            .collect(),
        metrics: metrics.clone(),
    };
    let mut json = serde_json::to_string_pretty(&report)?;
    json.push('\n');
    std::fs::write(dir.join("report.json"), json)?;
    Ok(())
}

/// Reads `report.json` from a report directory (or the file itself). With
/// `inverse_ratio`, stored best-cost ratios are taken as lowest/optimum and
/// flipped to optimum/lowest.
pub fn load_report(path: impl AsRef<Path>, inverse_ratio: bool) -> Result<Report> {
    let path = path.as_ref();
    let file = if path.is_dir() { path.join("report.json") } else { path.to_path_buf() };
    let mut report: Report = serde_json::from_str(&std::fs::read_to_string(file)?)?;
    if inverse_ratio {
        for g in &mut report.metrics.groups {
            g.best_cost_ratio = g.best_cost_ratio.map(|r| 1.0 / r);
        }
    }
    Ok(report)
}

/// `toolkits,variant,solver,lambda_m,lambda_t,lambda_s,percent_valid,best_cost_ratio`.
pub fn write_best_csv<W: std::io::Write>(rows: &[BestPenalty], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "toolkits",
        "variant",
        "solver",
        "lambda_m",
        "lambda_t",
        "lambda_s",
        "percent_valid",
        "best_cost_ratio",
    ])?;
    for b in rows {
        let mut row = vec![b.toolkits.to_string(), b.variant_kind.clone(), b.solver.clone()];
        row.extend(penalty_cells(&b.variant));
        row.push(b.percent_valid.to_string());
        row.push(cell(b.best_cost_ratio));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

mod opt_rational {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::scalar::{parse_rational, Rational, Scalar};

    pub fn serialize<S: Serializer>(v: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(r) => s.serialize_some(&r.render()),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rational>, D::Error> {
        Option::<String>::deserialize(d)?
            .map(|t| parse_rational(&t).map_err(serde::de::Error::custom))
            .transpose()
    }
}

#[cfg(test)]
mod tests;
