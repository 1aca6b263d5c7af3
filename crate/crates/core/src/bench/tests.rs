use super::*;
use crate::model::generate_instance;
use crate::qubo::{encode, Bits};
use crate::scalar::rat;
use proptest::prelude::*;

fn tiny_a() -> Instance {
    Instance::from_integers("A", &[vec![1, 2], vec![2, 1]], &[vec![1, 1], vec![1, 1]], &[1, 1]).unwrap()
}

fn tiny_q() -> ExactQubo {
    build_qubo(&tiny_a(), &VariantSpec::raw(1_000, 10_000_000)).unwrap()
}

fn set(q: &ExactQubo, draws: Vec<Bits>) -> SampleSet<Rational> {
    SampleSet::from_draws(draws, &crate::qubo::Evaluator::new(q), SampleMeta::default())
}

fn assignment_bits(q: &ExactQubo, choice: &[usize]) -> Bits {
    encode(q.varmap.as_ref().unwrap(), choice, None).unwrap()
}

#[test]
fn percent_valid_examples() {
    let (inst, q) = (tiny_a(), tiny_q());
    let opt = assignment_bits(&q, &[0, 1]);
    assert_eq!(percent_valid(&set(&q, vec![opt.clone(); 3]), &inst, &q).unwrap(), rat(1));
    assert_eq!(percent_valid(&set(&q, vec![Bits::zeros(q.n); 2]), &inst, &q).unwrap(), rat(0));
    let mixed = set(&q, vec![opt, Bits::zeros(q.n)]);
    assert_eq!(percent_valid(&mixed, &inst, &q).unwrap(), ratio(1, 2));
    let empty = SampleSet::<Rational>::from_entries(vec![], SampleMeta::default());
    assert!(percent_valid(&empty, &inst, &q).is_err());
    // Both toolkits on m1 violates capacity.
    let overloaded = set(&q, vec![assignment_bits(&q, &[0, 0])]);
    assert_eq!(percent_valid(&overloaded, &inst, &q).unwrap(), rat(0));
}

#[test]
fn near_opt_and_ratio_examples() {
    let (inst, q) = (tiny_a(), tiny_q());
    let opt_cost = exact_solve(&inst).unwrap().cost;
    assert_eq!(opt_cost, rat(2));
    let tol = default_tolerance();
    let best = assignment_bits(&q, &[0, 1]);
    let worse = assignment_bits(&q, &[1, 0]);
    let all_opt = set(&q, vec![best.clone(); 4]);
    assert_eq!(percent_near_opt(&all_opt, &inst, &q, &opt_cost, &tol).unwrap(), Some(rat(1)));
    assert_eq!(best_cost_ratio(&all_opt, &inst, &q, &opt_cost).unwrap(), Some(rat(1)));

    let invalid = set(&q, vec![Bits::zeros(q.n)]);
    assert_eq!(percent_near_opt(&invalid, &inst, &q, &opt_cost, &tol).unwrap(), None);
    assert_eq!(best_cost_ratio(&invalid, &inst, &q, &opt_cost).unwrap(), None);

    let two = set(&q, vec![best, worse.clone()]);
    assert_eq!(percent_near_opt(&two, &inst, &q, &opt_cost, &tol).unwrap(), Some(ratio(1, 2)));
    let only_worse = set(&q, vec![worse]);
    assert_eq!(best_cost_ratio(&only_worse, &inst, &q, &opt_cost).unwrap(), Some(ratio(1, 2)));
}

#[test]
fn metrics_need_a_matching_variable_map() {
    let inst = tiny_a();
    let mut q = tiny_q();
    let s = set(&q, vec![Bits::zeros(q.n)]);
    q.varmap = None;
    assert!(percent_valid(&s, &inst, &q).is_err());
    let other = generate_instance(3, 2, 2, 1).unwrap();
    let q = tiny_q();
    assert!(percent_valid(&s, &other, &q).is_err());
}

#[test]
fn pearson_examples() {
    let xs = [1.0, 2.0, 3.0, 4.5];
    let up: Vec<f64> = xs.iter().map(|x| 2.0 * x + 1.0).collect();
    let down: Vec<f64> = xs.iter().map(|x| -x).collect();
    assert!((pearson_r(&xs, &up).unwrap() - 1.0).abs() < 1e-12);
    assert!((pearson_r(&xs, &down).unwrap() + 1.0).abs() < 1e-12);
    assert!((pearson_r(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]).unwrap() - 0.5).abs() < 1e-12);
    assert!(matches!(pearson_r(&[1.0, 1.0], &[2.0, 3.0]), Err(Error::Undefined(_))));
    assert!(pearson_r(&[1.0], &[2.0]).is_err());
    assert!(pearson_r(&[1.0, 2.0], &[2.0]).is_err());
}

proptest! {
    #[test]
    fn pearson_of_affine_map_is_its_sign(
        xs in prop::collection::vec(-1e3f64..1e3, 2..40),
        a in prop_oneof![-1e3f64..-1e-3, 1e-3f64..1e3],
        b in -1e3f64..1e3,
    ) {
        let spread = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - xs.iter().cloned().fold(f64::INFINITY, f64::min);
        prop_assume!(spread > 1e-3);
        let ys: Vec<f64> = xs.iter().map(|x| a * x + b).collect();
        let r = pearson_r(&xs, &ys).unwrap();
        prop_assert!((r - a.signum()).abs() < 1e-12, "r = {}", r);
    }

    #[test]
    fn multiplication_identity_and_permutation_invariance(
        draws in prop::collection::vec((0u64..64, 1u64..5), 1..30),
        tol_pct in 0i64..150,
    ) {
        let (inst, q) = (tiny_a(), tiny_q());
        let opt = rat(2);
        let tol = ratio(tol_pct, 100);
        let ev = crate::qubo::Evaluator::new(&q);
        let entries: Vec<SampleEntry<Rational>> = draws
            .iter()
            .map(|&(k, m)| {
                let bits = Bits::from_index(k, q.n);
                SampleEntry { energy: ev.energy(&bits), bits, multiplicity: m }
            })
            .collect();
        let samples = SampleSet::from_entries(entries, SampleMeta::default());
        let t = tally(&samples, &inst, &q, Some(&opt), &tol).unwrap();

        let mut direct = 0u64;
        let mut total = 0u64;
        for e in &samples.entries {
            total += e.multiplicity;
            if let Some(a) = decode(&q, &e.bits).unwrap().candidate.to_assignment() {
                let report = crate::model::validate_assignment(&inst, &a.to_candidate()).unwrap();
                let cost = crate::model::solution_cost(&inst, &a).unwrap();
                if report.feasible && cost <= &opt * (Rational::one() + &tol) {
                    direct += e.multiplicity;
                }
            }
        }
        let pv = percent_valid(&samples, &inst, &q).unwrap();
        match percent_near_opt(&samples, &inst, &q, &opt, &tol).unwrap() {
            Some(pn) => prop_assert_eq!(pv * pn, frac(direct, total)),
            None => prop_assert_eq!(direct, 0),
        }

        let mut reversed = samples.clone();
        reversed.entries.reverse();
        prop_assert_eq!(tally(&reversed, &inst, &q, Some(&opt), &tol).unwrap(), t);
    }
}

fn metrics_row(kind: VariantSpec, pv: Option<f64>, ratio: Option<f64>) -> GroupMetrics {
    GroupMetrics {
        instance_id: "i".into(),
        toolkits: 3,
        qubits: Some(22),
        variant: kind,
        solver: "sa".into(),
        runs: 1,
        failed_runs: 0,
        tally: Tally::default(),
        opt_cost: Some(rat(1)),
        percent_valid: pv,
        percent_near_opt: None,
        best_cost_ratio: ratio,
    }
}

#[test]
fn select_best_examples() {
    let (best, warnings) = select_best_penalty(&[metrics_row(VariantSpec::Rounded, Some(0.3), None)]);
    assert!(warnings.is_empty());
    assert_eq!(best.len(), 1);
    assert_eq!(best[0].variant, VariantSpec::Rounded);

    let a = VariantSpec::raw(1_000, 10_000_000);
    let b = VariantSpec::raw(10_000, 10_000_000);
    let (best, _) = select_best_penalty(&[
        metrics_row(a.clone(), Some(0.2), Some(1.0)),
        metrics_row(b.clone(), Some(0.9), Some(0.5)),
    ]);
    assert_eq!(best[0].variant, b);

    let (best, _) = select_best_penalty(&[
        metrics_row(a.clone(), Some(0.5), Some(0.95)),
        metrics_row(b.clone(), Some(0.5), Some(0.99)),
    ]);
    assert_eq!(best[0].variant, b);

    let (best, _) = select_best_penalty(&[
        metrics_row(b.clone(), Some(0.5), Some(0.99)),
        metrics_row(a.clone(), Some(0.5), Some(0.99)),
    ]);
    assert_eq!(best[0].variant, a);

    let (best, warnings) = select_best_penalty(&[metrics_row(a, None, None)]);
    assert!(best.is_empty());
    assert_eq!(warnings.len(), 1);
}

#[test]
fn solver_entries_expand_and_validate() {
    let entry: SolverEntry =
        serde_json::from_str(r#"{"name": "lrqaoa", "params": {"p": [1, 2, 5, 10], "shots": 1000}}"#).unwrap();
    let configs = entry.expand().unwrap();
    assert_eq!(configs.len(), 4);
    assert_eq!(configs[3].label(), "lrqaoa[delta_beta=0.6;delta_gamma=0.9;p=10;shots=1000]");
    let sa = SolverConfig::from_params("sa", &BTreeMap::new()).unwrap();
    assert_eq!(
        sa,
        SolverConfig::Sa {
            steps: 1280,
            restarts: 500,
            t_start: None,
            t_end: None
        }
    );
    assert!(SolverConfig::from_params("qa", &BTreeMap::new()).is_err());
    let bad = BTreeMap::from([("depth".to_string(), Value::from(3))]);
    assert!(SolverConfig::from_params("sa", &bad).is_err());
    let neg = BTreeMap::from([("steps".to_string(), Value::from(-3))]);
    assert!(SolverConfig::from_params("sa", &neg).is_err());
}

#[test]
fn plan_schema_errors() {
    assert!(SweepPlan::from_json_str(r#"{"instances": [], "bogus": 1}"#).is_err());
    assert!(SweepPlan::from_json_str(r#"{"variants": ["raw"]}"#).is_err());
    let plan = SweepPlan::from_json_str(r#"{"instances": [], "variants": ["nonsense"]}"#).unwrap();
    assert!(sweep(&plan, 1).is_err());
    let plan = SweepPlan::from_json_str(r#"{"instances": []}"#).unwrap();
    assert_eq!(plan.variants, default_variants());
    assert_eq!(plan.seeds, vec![0]);
    assert!(plan.postprocess);
    assert_eq!(plan.tolerance().unwrap(), ratio(1, 100));
}

fn plan_for(dir: &Path, inst: &Instance, variants: &str, solvers: &str) -> SweepPlan {
    let path = dir.join(format!("{}.json", inst.id));
    inst.save(&path).unwrap();
    let text = format!(
        r#"{{"instances": ["{}.json"], "variants": {variants}, "solvers": {solvers}, "seeds": [3]}}"#,
        inst.id
    );
    let plan_path = dir.join("plan.json");
    std::fs::write(&plan_path, text).unwrap();
    SweepPlan::load(&plan_path).unwrap()
}

const QUICK_SA: &str = r#"[{"name": "sa", "params": {"steps": 200, "restarts": 20}}]"#;

#[test]
fn sweep_grid_shapes() {
    let dir = tempfile::tempdir().unwrap();
    let inst = tiny_a();
    let count = |variants: &str, solvers: &str| sweep(&plan_for(dir.path(), &inst, variants, solvers), 0).unwrap().len();
    assert_eq!(count(r#"["raw"]"#, QUICK_SA), 9);
    assert_eq!(count(r#"["scaled"]"#, QUICK_SA), 2);
    assert_eq!(count(r#"["rounded"]"#, QUICK_SA), 1);
    assert_eq!(count(r#"["all"]"#, QUICK_SA), 12);
    assert_eq!(count(r#"["all"]"#, "[]"), 0);
    assert_eq!(count(r#"[{"kind": "scaled", "lambda_s": "0.3"}]"#, QUICK_SA), 1);
}

#[test]
fn sweep_records_are_ordered_scored_and_worker_independent() {
    let dir = tempfile::tempdir().unwrap();
    let plan = plan_for(
        dir.path(),
        &tiny_a(),
        r#"["raw", "rounded"]"#,
        r#"[{"name": "sa", "params": {"steps": 200, "restarts": 20}}, {"name": "random", "params": {"shots": 50}}]"#,
    );
    let strip = |mut rs: Vec<RunRecord>| {
        rs.iter_mut().for_each(|r| r.wall_time = None);
        rs
    };
    let one = strip(sweep(&plan, 1).unwrap());
    let many = strip(sweep(&plan, 4).unwrap());
    assert_eq!(one, many);
    assert_eq!(one.len(), 20);
    assert_eq!(one[0].solver, "sa");
    assert_eq!(one[1].solver, "random");
    assert_eq!(one[19].variant, VariantSpec::Rounded);
    for r in &one {
        assert!(r.error.is_none());
        assert_eq!(r.opt_cost, Some(rat(2)));
        let t = r.tally.as_ref().unwrap();
        assert!(t.valid <= t.shots && t.near_opt <= t.valid);
    }
    // Post-processed SA on a 6-variable QUBO finds the optimum.
    assert_eq!(one[0].best_cost_ratio(), Some(rat(1)));
}

#[test]
fn failing_cells_are_recorded_not_fatal() {
    let dir = tempfile::tempdir().unwrap();
    let big = generate_instance(3, 2, 12, 5).unwrap();
    let plan = plan_for(
        dir.path(),
        &big,
        r#"["rounded"]"#,
        r#"[{"name": "lrqaoa"}, {"name": "random", "params": {"shots": 10}}]"#,
    );
    let records = sweep(&plan, 0).unwrap();
    assert_eq!(records.len(), 2);
    assert!(records[0].error.as_deref().unwrap().contains("too large"));
    assert!(records[0].tally.is_none());
    assert!(records[1].error.is_none());
    let metrics = compute_metrics(&records);
    let failed = metrics.groups.iter().find(|g| g.solver.starts_with("lrqaoa")).unwrap();
    assert_eq!((failed.runs, failed.failed_runs, failed.percent_valid), (1, 1, None));
}

#[test]
fn export_shapes_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty");
    export_report(&empty, &[], &compute_metrics(&[]), ExportOptions::default()).unwrap();
    let runs = std::fs::read_to_string(empty.join("runs.csv")).unwrap();
    assert_eq!(runs, RUNS_COLUMNS.join(",") + "\n");
    let metrics = std::fs::read_to_string(empty.join("metrics.csv")).unwrap();
    assert_eq!(metrics, METRICS_COLUMNS.join(",") + "\n");

    let plan = plan_for(dir.path(), &tiny_a(), r#"["raw"]"#, QUICK_SA);
    let records = sweep(&plan, 0).unwrap();
    let m = compute_metrics(&records);
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    export_report(&out_a, &records, &m, ExportOptions::default()).unwrap();
    let again = sweep(&plan, 2).unwrap();
    export_report(&out_b, &again, &compute_metrics(&again), ExportOptions::default()).unwrap();
    for f in ["runs.csv", "metrics.csv", "report.json"] {
        assert_eq!(
            std::fs::read(out_a.join(f)).unwrap(),
            std::fs::read(out_b.join(f)).unwrap(),
            "{f} differs"
        );
    }
    let runs = std::fs::read_to_string(out_a.join("runs.csv")).unwrap();
    assert_eq!(runs.lines().count(), 10);
    assert!(!runs.contains("wall_time"));

    let loaded = load_report(&out_a, false).unwrap();
    let stripped: Vec<RunRecord> = records.iter().map(|r| RunRecord { wall_time: None, ..r.clone() }).collect();
    assert_eq!(loaded.records, stripped);
    assert_eq!(loaded.metrics, m);

    let timed = dir.path().join("timed");
    export_report(&timed, &records, &m, ExportOptions { include_timings: true }).unwrap();
    let header = std::fs::read_to_string(timed.join("runs.csv")).unwrap();
    assert!(header.lines().next().unwrap().ends_with(",wall_time"));
}

#[test]
fn undefined_metrics_are_empty_cells() {
    let dir = tempfile::tempdir().unwrap();
    let plan = plan_for(
        dir.path(),
        &tiny_a(),
        r#"["rounded"]"#,
        r#"[{"name": "random", "params": {"shots": 1}}]"#,
    );
    let mut plan = plan;
    plan.postprocess = false;
    // Seed chosen so the single random draw is invalid.
    let records: Vec<RunRecord> = (0..20)
        .map(|s| {
            plan.seeds = vec![s];
            sweep(&plan, 1).unwrap().remove(0)
        })
        .filter(|r| r.tally.as_ref().unwrap().valid == 0)
        .take(1)
        .collect();
    assert_eq!(records.len(), 1);
    let m = compute_metrics(&records);
    assert_eq!(m.groups[0].percent_valid, Some(0.0));
    assert_eq!(m.groups[0].percent_near_opt, None);
    let out = dir.path().join("out");
    export_report(&out, &records, &m, ExportOptions::default()).unwrap();
    let metrics = std::fs::read_to_string(out.join("metrics.csv")).unwrap();
    let row = metrics.lines().nth(1).unwrap();
    assert!(row.ends_with(",0,,"), "{row}");
}

#[test]
fn inverse_ratio_import() {
    let dir = tempfile::tempdir().unwrap();
    let mut g = metrics_row(VariantSpec::Rounded, Some(1.0), Some(2.0));
    g.tally.best_valid_cost = Some(rat(2));
    let report = MetricsReport {
        groups: vec![g],
        correlations: vec![],
    };
    export_report(dir.path(), &[], &report, ExportOptions::default()).unwrap();
    assert_eq!(load_report(dir.path(), false).unwrap().metrics.groups[0].best_cost_ratio, Some(2.0));
    assert_eq!(load_report(dir.path(), true).unwrap().metrics.groups[0].best_cost_ratio, Some(0.5));
}

#[test]
fn correlations_pair_solvers_within_a_formulation() {
    let mut rows = Vec::new();
    for (i, pv) in [0.1, 0.4, 0.8].iter().enumerate() {
        let variant = VariantSpec::raw(1_000 * 10i64.pow(i as u32), 10_000_000);
        let mut a = metrics_row(variant.clone(), Some(*pv), None);
        a.solver = "sa".into();
        let mut b = metrics_row(variant, Some(pv * 0.5 + 0.1), None);
        b.solver = "lrqaoa[p=1]".into();
        rows.push(a);
        rows.push(b);
    }
    let c = correlations(&rows);
    assert_eq!(c.len(), 1);
    assert_eq!(c[0].points, 3);
    assert!((c[0].r.unwrap() - 1.0).abs() < 1e-12);
}
