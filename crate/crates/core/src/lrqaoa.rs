//! Noiseless statevector simulation of linear-ramp QAOA, and logical circuit
//! shape statistics.
//!
//! Amplitude index `k` encodes the bitstring with variable 0 as the least
//! significant bit. The cost layer uses the normalized QUBO (largest absolute
//! coefficient 1); reported sample energies use the original QUBO.

use std::collections::BTreeMap;
use std::io::Write;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::qubo::{normalize_qubo, Bits, Evaluator, Qubo};
use crate::scalar::Scalar;
use crate::solvers::{all_energies_f64, stream_rng, SampleMeta, SampleSet, BRUTE_FORCE_LIMIT};

pub const DEFAULT_DELTA_GAMMA: f64 = 0.9;
pub const DEFAULT_DELTA_BETA: f64 = 0.6;
pub const DEFAULT_SHOTS: usize = 1000;
/// Layer counts of the default sweep.
pub const DEFAULT_LAYERS: [usize; 4] = [1, 2, 5, 10];

/// Sign applied to each `β_i` when the circuit is assembled. With the cost
/// phase `exp(-iγd)` and positive ramps, rotating by `-β` (RX(-2β)) steers
/// amplitude toward low energies; `+1.0` would steer toward high ones.
pub const MIXER_DIRECTION: f64 = -1.0;

#[derive(Clone, Debug, PartialEq)]
pub struct RampSchedule {
    pub p: usize,
    pub delta_gamma: f64,
    pub delta_beta: f64,
    pub gammas: Vec<f64>,
    pub betas: Vec<f64>,
}

impl RampSchedule {
    /// Arbitrary angle lists; no ramp invariants are enforced. Used for
    /// identity circuits and other diagnostics.
    pub fn from_angles(gammas: Vec<f64>, betas: Vec<f64>) -> Result<Self> {
        if gammas.len() != betas.len() {
            return Err(Error::input("gamma and beta lists differ in length"));
        }
        Ok(RampSchedule {
            p: gammas.len(),
            delta_gamma: gammas.last().copied().unwrap_or(0.0),
            delta_beta: betas.first().copied().unwrap_or(0.0),
            gammas,
            betas,
        })
    }
}

/// Linear ramp: `γ_i = (i/p)·Δγ` rising to `Δγ`, `β_i = ((p-i+1)/p)·Δβ`
/// falling from `Δβ`, for `i = 1..=p`.
pub fn lr_schedule(p: usize, delta_gamma: f64, delta_beta: f64) -> Result<RampSchedule> {
    if p == 0 {
        return Err(Error::input("LR-QAOA needs at least one layer"));
    }
    if !(delta_gamma > 0.0 && delta_beta > 0.0) {
        return Err(Error::input("ramp slopes must be positive"));
    }
    let pf = p as f64;
    Ok(RampSchedule {
        p,
        delta_gamma,
        delta_beta,
        gammas: (1..=p).map(|i| i as f64 / pf * delta_gamma).collect(),
        betas: (1..=p).map(|i| (p - i + 1) as f64 / pf * delta_beta).collect(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    pub n: usize,
    pub amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// `|+⟩^⊗n`.
    pub fn uniform(n: usize) -> Self {
        let dim = 1usize << n;
        let a = Complex64::new(1.0 / (dim as f64).sqrt(), 0.0);
        StateVector {
            n,
            amplitudes: vec![a; dim],
        }
    }

    /// Computational basis state `|k⟩`.
    pub fn basis(n: usize, k: usize) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1usize << n];
        amplitudes[k] = Complex64::new(1.0, 0.0);
        StateVector { n, amplitudes }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.par_iter().map(|a| a.norm_sqr()).collect()
    }
}

/// Normalized energy of every basis state.
pub fn precompute_diagonal<S: Scalar>(q: &Qubo<S>) -> Result<Vec<f64>> {
    guard(q.n)?;
    let normalized = normalize_qubo(q)?;
    Ok(all_energies_f64(&Evaluator::new(&normalized)))
}

fn guard(n: usize) -> Result<()> {
    if n > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge {
            what: "statevector",
            size: n as u64,
            limit: BRUTE_FORCE_LIMIT as u64,
        });
    }
    Ok(())
}

/// `a_k ← exp(-i·γ·d_k)·a_k`.
pub fn apply_cost_layer(state: &mut StateVector, diag: &[f64], gamma: f64) -> Result<()> {
    if diag.len() != state.amplitudes.len() {
        return Err(Error::input(format!(
            "diagonal has {} entries, state has {}",
            diag.len(),
            state.amplitudes.len()
        )));
    }
    state
        .amplitudes
        .par_iter_mut()
        .zip(diag.par_iter())
        .for_each(|(a, &d)| *a *= Complex64::from_polar(1.0, -gamma * d));
    Ok(())
}

/// `exp(-i·β·X)` on every qubit: `(a₀, a₁) ← (cos β·a₀ − i sin β·a₁, −i sin β·a₀ + cos β·a₁)`.
pub fn apply_mixer_layer(state: &mut StateVector, beta: f64) {
    let (s, c) = beta.sin_cos();
    let cos = Complex64::new(c, 0.0);
    let misin = Complex64::new(0.0, -s);
    for qubit in 0..state.n {
        let half = 1usize << qubit;
        state
            .amplitudes
            .par_chunks_mut(2 * half)
            .for_each(|block| {
                let (lo, hi) = block.split_at_mut(half);
                lo.par_iter_mut().zip(hi.par_iter_mut()).for_each(|(a0, a1)| {
                    let (x, y) = (*a0, *a1);
                    *a0 = cos * x + misin * y;
                    *a1 = misin * x + cos * y;
                });
            });
    }
}

/// State after the full circuit on `|+⟩^⊗n`.
pub fn final_state<S: Scalar>(q: &Qubo<S>, sched: &RampSchedule) -> Result<StateVector> {
    let diag = precompute_diagonal(q)?;
    Ok(evolve(q.n, &diag, sched))
}

fn evolve(n: usize, diag: &[f64], sched: &RampSchedule) -> StateVector {
    let mut state = StateVector::uniform(n);
    for (&g, &b) in sched.gammas.iter().zip(&sched.betas) {
        apply_cost_layer(&mut state, diag, g).expect("diagonal matches state");
        apply_mixer_layer(&mut state, MIXER_DIRECTION * b);
    }
    state
}

/// Draws `shots` basis indices from the probability vector, sequentially
/// from a single seeded stream.
pub fn sample_indices(probs: &[f64], shots: usize, seed: u64) -> Vec<u64> {
    let mut cumulative = Vec::with_capacity(probs.len());
    let mut acc = 0.0f64;
    for &p in probs {
        acc += p;
        cumulative.push(acc);
    }
    let mut rng = stream_rng(seed, 0);
    (0..shots)
        .map(|_| {
            let u = rng.gen::<f64>() * acc;
            let k = cumulative.partition_point(|&c| c <= u);
            k.min(probs.len() - 1) as u64
        })
        .collect()
}

pub fn run_lrqaoa<S: Scalar>(
    q: &Qubo<S>,
    sched: &RampSchedule,
    shots: usize,
    seed: u64,
) -> Result<SampleSet<S>> {
    if shots == 0 {
        return Err(Error::input("LR-QAOA needs at least one shot"));
    }
    let state = final_state(q, sched)?;
    let draws = sample_indices(&state.probabilities(), shots, seed)
        .into_iter()
        .map(|k| Bits::from_index(k, q.n))
        .collect();
    let meta = SampleMeta {
        solver: "lrqaoa".into(),
        params: BTreeMap::from([
            ("p".into(), sched.p.to_string()),
            ("delta_gamma".into(), sched.delta_gamma.to_string()),
            ("delta_beta".into(), sched.delta_beta.to_string()),
            ("shots".into(), shots.to_string()),
        ]),
        seed,
    };
    Ok(SampleSet::from_draws(draws, &Evaluator::new(q), meta))
}

/// Total probability on the given basis states.
pub fn probability_of(state: &StateVector, states: &[Bits]) -> f64 {
    states
        .iter()
        .map(|b| state.amplitudes[b.to_index() as usize].norm_sqr())
        .sum()
}

/// Logical two-qubit interaction graph of a QUBO.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InteractionGraph {
    pub vertices: usize,
    /// `(i, j)` with `i < j`, sorted, no duplicates.
    pub edges: Vec<(usize, usize)>,
}

impl InteractionGraph {
    pub fn new(vertices: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut out: Vec<(usize, usize)> = Vec::new();
        for (i, j) in edges {
            if i == j || i >= vertices || j >= vertices {
                return Err(Error::input(format!("bad edge ({i}, {j})")));
            }
            out.push((i.min(j), i.max(j)));
        }
        out.sort_unstable();
        out.dedup();
        Ok(InteractionGraph {
            vertices,
            edges: out,
        })
    }

    pub fn from_qubo<S: Scalar>(q: &Qubo<S>) -> Self {
        InteractionGraph::new(q.n, q.interactions()).expect("QUBO keys are in range")
    }

    pub fn max_degree(&self) -> usize {
        let mut deg = vec![0usize; self.vertices];
        for &(i, j) in &self.edges {
            deg[i] += 1;
            deg[j] += 1;
        }
        deg.into_iter().max().unwrap_or(0)
    }
}

/// Greedy proper edge coloring in edge order; `colors[e]` is the color of
/// `g.edges[e]`. Uses at most `2Δ − 1` colors.
pub fn edge_coloring(g: &InteractionGraph) -> Vec<usize> {
    let mut used: Vec<Vec<bool>> = vec![Vec::new(); g.vertices];
    g.edges
        .iter()
        .map(|&(i, j)| {
            let color = (0..)
                .find(|&c| !used[i].get(c).copied().unwrap_or(false) && !used[j].get(c).copied().unwrap_or(false))
                .expect("unbounded search");
            for v in [i, j] {
                if used[v].len() <= color {
                    used[v].resize(color + 1, false);
                }
                used[v][color] = true;
            }
            color
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CircuitStats {
    pub qubits: usize,
    pub edges: usize,
    pub colors: usize,
    pub p: usize,
    pub two_qubit_interactions: usize,
    pub cost_layer_depth: usize,
}

pub fn circuit_stats<S: Scalar>(q: &Qubo<S>, p: usize) -> CircuitStats {
    let g = InteractionGraph::from_qubo(q);
    let colors = edge_coloring(&g).into_iter().max().map_or(0, |c| c + 1);
    CircuitStats {
        qubits: q.n,
        edges: g.edges.len(),
        colors,
        p,
        two_qubit_interactions: p * g.edges.len(),
        cost_layer_depth: p * colors,
    }
}

/// `qubits,edges,colors,p,two_qubit_interactions,cost_layer_depth` rows.
pub fn write_stats_csv<W: Write>(rows: &[CircuitStats], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "qubits",
        "edges",
        "colors",
        "p",
        "two_qubit_interactions",
        "cost_layer_depth",
    ])?;
    for r in rows {
        w.serialize((
            r.qubits,
            r.edges,
            r.colors,
            r.p,
            r.two_qubit_interactions,
            r.cost_layer_depth,
        ))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{generate_instance, Instance};
    use crate::qubo::{build_qubo, qubo_energy, ExactQubo, VariantSpec};
    use crate::scalar::{rat, Rational};
    use crate::solvers::{brute_force_qubo, ground_states};
    use rand::SeedableRng;

    fn tiny_a_raw() -> ExactQubo {
        let inst = Instance::from_integers(
            "A",
            &[vec![1, 2], vec![2, 1]],
            &[vec![1, 1], vec![1, 1]],
            &[1, 1],
        )
        .unwrap();
        build_qubo(&inst, &VariantSpec::raw(1_000, 10_000_000)).unwrap()
    }

    fn random_state(n: usize, seed: u64) -> StateVector {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut amps: Vec<Complex64> = (0..1 << n)
            .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        amps.iter_mut().for_each(|a| *a /= norm);
        StateVector { n, amplitudes: amps }
    }

    fn close(a: &StateVector, b: &StateVector, tol: f64) -> bool {
        a.amplitudes.iter().zip(&b.amplitudes).all(|(x, y)| (x - y).norm() < tol)
    }

    #[test]
    fn schedule_examples() {
        let s = lr_schedule(1, 0.9, 0.6).unwrap();
        assert_eq!((s.gammas.clone(), s.betas.clone()), (vec![0.9], vec![0.6]));
        let s = lr_schedule(2, 0.9, 0.6).unwrap();
        assert!((s.gammas[0] - 0.45).abs() < 1e-15 && (s.gammas[1] - 0.9).abs() < 1e-15);
        assert!((s.betas[0] - 0.6).abs() < 1e-15 && (s.betas[1] - 0.3).abs() < 1e-15);
        for p in [1, 3, 10, 100] {
            let s = lr_schedule(p, 0.9, 0.6).unwrap();
            assert_eq!(s.gammas[p - 1], 0.9);
            assert_eq!(s.betas[0], 0.6);
            assert!(s.gammas.windows(2).all(|w| w[0] < w[1]));
            assert!(s.betas.windows(2).all(|w| w[0] > w[1]));
            assert!(s.gammas.iter().all(|&g| g > 0.0 && g <= 0.9));
            assert!(s.betas.iter().all(|&b| b > 0.0 && b <= 0.6));
        }
        assert!(lr_schedule(0, 0.9, 0.6).is_err());
        assert!(lr_schedule(1, 0.0, 0.6).is_err());
    }

    #[test]
    fn diagonal_examples() {
        let zero = ExactQubo::from_terms(2, [], rat(1)).unwrap();
        assert!(precompute_diagonal(&zero).is_err());
        let one = ExactQubo::from_terms(1, [((0, 0), rat(1))], rat(0)).unwrap();
        assert_eq!(precompute_diagonal(&one).unwrap(), vec![0.0, 1.0]);
        let shifted = ExactQubo::from_terms(1, [((0, 0), rat(1))], rat(3)).unwrap();
        assert_eq!(precompute_diagonal(&shifted).unwrap(), vec![3.0, 4.0]);

        let q = tiny_a_raw();
        let diag = precompute_diagonal(&q).unwrap();
        let argmin = (0..diag.len()).min_by(|&a, &b| diag[a].partial_cmp(&diag[b]).unwrap()).unwrap();
        let (bits, _) = brute_force_qubo(&q).unwrap();
        assert_eq!(argmin as u64, bits.to_index());
        let nq = normalize_qubo(&q).unwrap();
        for (k, d) in diag.iter().enumerate() {
            let exact = qubo_energy(&nq, &Bits::from_index(k as u64, 6)).unwrap();
            assert!((d - exact.to_f64_lossy()).abs() < 1e-12);
        }
    }

    #[test]
    fn cost_layer_properties() {
        let s = random_state(5, 1);
        let diag: Vec<f64> = (0..32).map(|k| (k as f64 * 0.37).sin()).collect();
        let mut t = s.clone();
        apply_cost_layer(&mut t, &diag, 0.0).unwrap();
        assert_eq!(t, s);

        let mut t = s.clone();
        apply_cost_layer(&mut t, &[0.7; 32], 1.3).unwrap();
        let phase = Complex64::from_polar(1.0, -1.3 * 0.7);
        let expected = StateVector {
            n: 5,
            amplitudes: s.amplitudes.iter().map(|a| a * phase).collect(),
        };
        assert!(close(&t, &expected, 1e-14));
        for (a, b) in t.probabilities().iter().zip(s.probabilities()) {
            assert!((a - b).abs() < 1e-15);
        }

        let mut t = s.clone();
        apply_cost_layer(&mut t, &diag, 2.1).unwrap();
        assert!((t.norm_sqr() - 1.0).abs() < 1e-12);
        assert!(apply_cost_layer(&mut t, &diag[..3], 1.0).is_err());
    }

    #[test]
    fn mixer_layer_properties() {
        let s = random_state(4, 2);
        let mut t = s.clone();
        apply_mixer_layer(&mut t, 0.0);
        assert_eq!(t, s);

        let mut t = StateVector::basis(1, 0);
        apply_mixer_layer(&mut t, std::f64::consts::FRAC_PI_2);
        assert!((t.amplitudes[0]).norm() < 1e-15);
        assert!((t.amplitudes[1] - Complex64::new(0.0, -1.0)).norm() < 1e-15);

        let mut t = s.clone();
        apply_mixer_layer(&mut t, std::f64::consts::PI);
        let sign = if s.n.is_multiple_of(2) { 1.0 } else { -1.0 };
        let expected = StateVector {
            n: 4,
            amplitudes: s.amplitudes.iter().map(|a| a * sign).collect(),
        };
        assert!(close(&t, &expected, 1e-12));

        let mut t = s.clone();
        apply_mixer_layer(&mut t, 0.77);
        assert!((t.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mixer_matches_dense_single_qubit_matrices() {
        // Apply exp(-iβX) qubit by qubit with an explicit 2x2 matrix on the
        // index pairs (k, k ^ 2^q).
        let s = random_state(3, 5);
        let beta = 0.41f64;
        let mut expected = s.amplitudes.clone();
        for q in 0..3 {
            let mut next = expected.clone();
            for (k, slot) in next.iter_mut().enumerate() {
                let partner = k ^ (1 << q);
                *slot = Complex64::new(beta.cos(), 0.0) * expected[k]
                    + Complex64::new(0.0, -beta.sin()) * expected[partner];
            }
            expected = next;
        }
        let mut t = s;
        apply_mixer_layer(&mut t, beta);
        assert!(close(&t, &StateVector { n: 3, amplitudes: expected }, 1e-14));
    }

    #[test]
    fn norm_survives_one_hundred_layers() {
        let inst = generate_instance(2, 2, 4, 3).unwrap();
        let q: ExactQubo = build_qubo(&inst, &VariantSpec::Rounded).unwrap();
        let diag = precompute_diagonal(&q).unwrap();
        let sched = lr_schedule(100, 0.9, 0.6).unwrap();
        let mut state = StateVector::uniform(q.n);
        for (&g, &b) in sched.gammas.iter().zip(&sched.betas) {
            apply_cost_layer(&mut state, &diag, g).unwrap();
            assert!((state.norm_sqr() - 1.0).abs() < 1e-9);
            apply_mixer_layer(&mut state, b);
            assert!((state.norm_sqr() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn identity_circuit_samples_uniformly() {
        let q = tiny_a_raw();
        let sched = RampSchedule::from_angles(vec![0.0; 3], vec![0.0; 3]).unwrap();
        let state = final_state(&q, &sched).unwrap();
        for p in state.probabilities() {
            assert!((p - 1.0 / 64.0).abs() < 1e-15);
        }
        let empty = RampSchedule::from_angles(vec![], vec![]).unwrap();
        let shots = 10_000;
        let s = run_lrqaoa(&q, &empty, shots, 4).unwrap();
        assert_eq!(s.total_shots(), shots as u64);
        // Chi-square against uniform over 64 cells; 63 dof, 0.999 quantile ≈ 103.4.
        let mut counts = [0u64; 64];
        for e in &s.entries {
            counts[e.bits.to_index() as usize] += e.multiplicity;
        }
        let expected = shots as f64 / 64.0;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        assert!(chi2 < 103.4, "chi2 = {chi2}");
    }

    #[test]
    fn runs_are_reproducible_and_report_original_energies() {
        let q = tiny_a_raw();
        let sched = lr_schedule(3, 0.9, 0.6).unwrap();
        let a = run_lrqaoa(&q, &sched, 500, 7).unwrap();
        assert_eq!(a, run_lrqaoa(&q, &sched, 500, 7).unwrap());
        for e in &a.entries {
            assert_eq!(e.energy, qubo_energy(&q, &e.bits).unwrap());
        }
        assert!(run_lrqaoa(&q, &sched, 0, 7).is_err());
        let big = Qubo::<Rational>::from_terms(27, [((0, 0), rat(1))], rat(0)).unwrap();
        assert!(matches!(run_lrqaoa(&big, &sched, 1, 1), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn probabilities_independent_of_thread_count() {
        let inst = generate_instance(3, 2, 4, 1).unwrap();
        let q: ExactQubo = build_qubo(&inst, &VariantSpec::Rounded).unwrap();
        let sched = lr_schedule(10, 0.9, 0.6).unwrap();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| final_state(&q, &sched).unwrap())
        };
        let one = run(1);
        let four = run(4);
        assert!(one
            .amplitudes
            .iter()
            .zip(&four.amplitudes)
            .all(|(a, b)| a.re.to_bits() == b.re.to_bits() && a.im.to_bits() == b.im.to_bits()));
    }

    #[test]
    fn probability_on_ground_states() {
        // x0 - x0 x1 is minimized by 11 only; adding an idle variable doubles the set.
        let q = ExactQubo::from_terms(3, [((0, 0), rat(1)), ((0, 1), rat(-2))], rat(0)).unwrap();
        let gs = ground_states(&q).unwrap();
        assert_eq!(gs, vec![Bits(vec![true, true, false]), Bits(vec![true, true, true])]);
        let uniform = StateVector::uniform(3);
        assert!((probability_of(&uniform, &gs) - 0.25).abs() < 1e-15);
        let tuned = final_state(&q, &lr_schedule(10, 0.9, 0.6).unwrap()).unwrap();
        assert!(probability_of(&tuned, &gs) > 0.25);
    }

    #[test]
    fn coloring_examples() {
        let tri = InteractionGraph::new(3, [(0, 1), (1, 2), (0, 2)]).unwrap();
        let c = edge_coloring(&tri);
        assert_eq!(c.iter().max().unwrap() + 1, 3);
        let matching = InteractionGraph::new(6, [(0, 1), (2, 3), (4, 5)]).unwrap();
        assert!(edge_coloring(&matching).iter().all(|&c| c == 0));
        let star = InteractionGraph::new(4, [(0, 1), (0, 2), (0, 3)]).unwrap();
        assert_eq!(edge_coloring(&star).iter().max().unwrap() + 1, 3);
        assert!(InteractionGraph::new(3, [(1, 1)]).is_err());
    }

    #[test]
    fn greedy_coloring_is_proper_on_random_graphs() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for _ in 0..200 {
            let n = rng.gen_range(2..=60);
            let density: f64 = rng.gen();
            let mut edges = Vec::new();
            for i in 0..n {
                for j in i + 1..n {
                    if rng.gen::<f64>() < density {
                        edges.push((i, j));
                    }
                }
            }
            let g = InteractionGraph::new(n, edges).unwrap();
            let colors = edge_coloring(&g);
            for (a, &(i, j)) in g.edges.iter().enumerate() {
                for (b, &(k, l)) in g.edges.iter().enumerate().skip(a + 1) {
                    if i == k || i == l || j == k || j == l {
                        assert_ne!(colors[a], colors[b]);
                    }
                }
            }
            let used = colors.iter().max().map_or(0, |c| c + 1);
            assert!(used <= (2 * g.max_degree()).saturating_sub(1).max(used.min(1)));
        }
    }

    #[test]
    fn circuit_stats_scale_linearly() {
        let tri = ExactQubo::from_terms(3, [((0, 1), rat(1)), ((1, 2), rat(1)), ((0, 2), rat(1))], rat(0))
            .unwrap();
        let s = circuit_stats(&tri, 2);
        assert_eq!((s.two_qubit_interactions, s.cost_layer_depth, s.qubits), (6, 6, 3));
        let q = tiny_a_raw();
        let one = circuit_stats(&q, 1);
        let ten = circuit_stats(&q, 10);
        assert_eq!(ten.two_qubit_interactions, 10 * one.two_qubit_interactions);
        let diag_only = ExactQubo::from_terms(4, [((0, 0), rat(1))], rat(0)).unwrap();
        assert_eq!(circuit_stats(&diag_only, 5).two_qubit_interactions, 0);

        let mut buf = Vec::new();
        write_stats_csv(&[s], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "qubits,edges,colors,p,two_qubit_interactions,cost_layer_depth\n3,3,3,2,6,6\n"
        );
    }
}
