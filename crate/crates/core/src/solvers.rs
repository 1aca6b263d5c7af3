//! Classical samplers over a [`Qubo`]: simulated annealing, a uniform random
//! baseline, exhaustive search, and single-bit-flip post-processing.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::ops::{Add, Neg, Sub};
use std::path::Path;

use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qubo::{qubo_energy, Bits, Evaluator, Kernel, Qubo};
use crate::scalar::Scalar;

/// Largest variable count accepted by exhaustive search and the statevector
/// simulator.
pub const BRUTE_FORCE_LIMIT: usize = 26;

pub const DEFAULT_SA_STEPS: usize = 1280;
pub const DEFAULT_SA_RESTARTS: usize = 500;
pub const DEFAULT_RANDOM_SHOTS: usize = 1000;

#[derive(Clone, Debug, PartialEq)]
pub struct SampleEntry<S> {
    pub bits: Bits,
    pub energy: S,
    pub multiplicity: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleMeta {
    pub solver: String,
    pub params: BTreeMap<String, String>,
    pub seed: u64,
}

/// Multiset of evaluated bitstrings, sorted by `(energy, bits)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleSet<S> {
    pub entries: Vec<SampleEntry<S>>,
    pub meta: SampleMeta,
}

impl<S: Scalar> SampleSet<S> {
    /// Aggregates raw draws, evaluating each distinct bitstring once.
    pub fn from_draws(draws: Vec<Bits>, ev: &Evaluator<S>, meta: SampleMeta) -> Self {
        let mut counts: BTreeMap<Bits, u64> = BTreeMap::new();
        for b in draws {
            *counts.entry(b).or_insert(0) += 1;
        }
        let entries = counts
            .into_iter()
            .map(|(bits, multiplicity)| SampleEntry {
                energy: ev.energy(&bits),
                bits,
                multiplicity,
            })
            .collect();
        SampleSet::from_entries(entries, meta)
    }

    /// Merges duplicate bitstrings and sorts.
    pub fn from_entries(entries: Vec<SampleEntry<S>>, meta: SampleMeta) -> Self {
        let mut merged: BTreeMap<Bits, SampleEntry<S>> = BTreeMap::new();
        for e in entries {
            match merged.get_mut(&e.bits) {
                Some(existing) => existing.multiplicity += e.multiplicity,
                None => {
                    merged.insert(e.bits.clone(), e);
                }
            }
        }
        let mut entries: Vec<_> = merged.into_values().collect();
        entries.sort_by(|a, b| {
            a.energy
                .partial_cmp(&b.energy)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| a.bits.cmp(&b.bits))
        });
        SampleSet { entries, meta }
    }

    pub fn total_shots(&self) -> u64 {
        self.entries.iter().map(|e| e.multiplicity).sum()
    }

    pub fn best(&self) -> Option<&SampleEntry<S>> {
        self.entries.first()
    }

    /// Applies [`bitflip_pass`] to every entry and re-aggregates.
    pub fn postprocessed(&self, ev: &Evaluator<S>) -> Self {
        let entries = self
            .entries
            .iter()
            .map(|e| {
                let bits = bitflip_pass(ev, &e.bits);
                SampleEntry {
                    energy: ev.energy(&bits),
                    bits,
                    multiplicity: e.multiplicity,
                }
            })
            .collect();
        let mut meta = self.meta.clone();
        meta.params.insert("postprocess".into(), "bitflip".into());
        SampleSet::from_entries(entries, meta)
    }

    /// CSV with a one-line `# {json meta}` header block.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# {}", serde_json::to_string(&self.meta)?)?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["bits", "energy", "multiplicity"])?;
        for e in &self.entries {
            w.write_record([
                e.bits.to_string(),
                e.energy.render(),
                e.multiplicity.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: BufRead>(mut input: R) -> Result<Self> {
        let mut first = String::new();
        input.read_line(&mut first)?;
        let meta_json = first
            .trim()
            .strip_prefix('#')
            .ok_or_else(|| Error::input("sample file is missing its `#` meta line"))?;
        let meta: SampleMeta = serde_json::from_str(meta_json.trim())?;
        let mut r = csv::Reader::from_reader(input);
        let headers = r.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["bits", "energy", "multiplicity"] {
            return Err(Error::input(format!("unexpected sample columns {headers:?}")));
        }
        let mut entries = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            entries.push(SampleEntry {
                bits: rec[0].parse()?,
                energy: S::parse_text(&rec[1])?,
                multiplicity: rec[2]
                    .parse()
                    .map_err(|_| Error::input(format!("bad multiplicity {:?}", &rec[2])))?,
            });
        }
        Ok(SampleSet::from_entries(entries, meta))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_csv(f)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        SampleSet::read_csv(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SaConfig {
    pub steps: usize,
    /// Defaults to the largest absolute coefficient.
    pub t_start: Option<f64>,
    /// Defaults to `1e-3 * t_start`.
    pub t_end: Option<f64>,
    pub seed: u64,
    pub restarts: usize,
}

impl Default for SaConfig {
    fn default() -> Self {
        SaConfig {
            steps: DEFAULT_SA_STEPS,
            t_start: None,
            t_end: None,
            seed: 0,
            restarts: DEFAULT_SA_RESTARTS,
        }
    }
}

impl SaConfig {
    fn temperatures<S: Scalar>(&self, q: &Qubo<S>) -> Result<(f64, f64)> {
        if self.steps == 0 || self.restarts == 0 {
            return Err(Error::input("SA needs at least one step and one restart"));
        }
        let t_start = match self.t_start {
            Some(t) => t,
            None => {
                let m = q.max_abs_coeff().to_f64_lossy();
                if m > 0.0 {
                    m
                } else {
                    1.0
                }
            }
        };
        let t_end = self.t_end.unwrap_or(1e-3 * t_start);
        if !(t_end > 0.0 && t_start >= t_end && t_start.is_finite()) {
            return Err(Error::input(format!(
                "need t_start >= t_end > 0, got t_start = {t_start}, t_end = {t_end}"
            )));
        }
        Ok((t_start, t_end))
    }
}

/// `T_i = t_start · (t_end / t_start)^((i-1)/(steps-1))`, `i = 1..=steps`.
pub fn geometric_schedule(t_start: f64, t_end: f64, steps: usize) -> Vec<f64> {
    if steps == 1 {
        return vec![t_start];
    }
    let ratio = t_end / t_start;
    (0..steps)
        .map(|i| t_start * ratio.powf(i as f64 / (steps - 1) as f64))
        .collect()
}

/// Per-restart RNG stream derived from `(seed, index)`.
pub(crate) fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn random_bits(rng: &mut impl Rng, n: usize) -> Bits {
    Bits((0..n).map(|_| rng.gen::<bool>()).collect())
}

/// Metropolis walk: flip a uniformly random bit each step; downhill and
/// level moves are always taken, uphill moves with probability
/// `exp(-ΔE / T_i)`.
fn anneal_chain<T>(
    kernel: &Kernel<T>,
    to_energy: impl Fn(T) -> f64,
    schedule: &[f64],
    rng: &mut ChaCha8Rng,
) -> Bits
where
    T: Copy + Zero + Add<Output = T> + Sub<Output = T> + Neg<Output = T> + PartialOrd,
{
    let n = kernel.n;
    let mut bits = random_bits(rng, n);
    for &temp in schedule {
        let k = rng.gen_range(0..n);
        let delta = kernel.flip_delta(&bits, k);
        let accept = delta <= T::zero() || rng.gen::<f64>() < (-to_energy(delta) / temp).exp();
        if accept {
            bits.0[k] = !bits.0[k];
        }
    }
    bits
}

pub fn simulated_anneal<S: Scalar>(q: &Qubo<S>, cfg: &SaConfig) -> Result<SampleSet<S>> {
    if q.n == 0 {
        return Err(Error::input("SA needs at least one variable"));
    }
    let (t_start, t_end) = cfg.temperatures(q)?;
    let schedule = geometric_schedule(t_start, t_end, cfg.steps);
    let ev = Evaluator::new(q);
    let draws: Vec<Bits> = (0..cfg.restarts as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(cfg.seed, r);
            match &ev.exact {
                Some((kernel, den)) => {
                    let den = den.to_f64_lossy();
                    anneal_chain(kernel, |d: i128| d as f64 / den, &schedule, &mut rng)
                }
                None => anneal_chain(&ev.approx, |d| d, &schedule, &mut rng),
            }
        })
        .collect();
    let meta = SampleMeta {
        solver: "sa".into(),
        params: BTreeMap::from([
            ("steps".into(), cfg.steps.to_string()),
            ("restarts".into(), cfg.restarts.to_string()),
            ("t_start".into(), t_start.to_string()),
            ("t_end".into(), t_end.to_string()),
        ]),
        seed: cfg.seed,
    };
    Ok(SampleSet::from_draws(draws, &ev, meta))
}

pub fn random_sample<S: Scalar>(q: &Qubo<S>, shots: usize, seed: u64) -> Result<SampleSet<S>> {
    if shots == 0 {
        return Err(Error::input("random baseline needs at least one shot"));
    }
    let ev = Evaluator::new(q);
    let mut rng = stream_rng(seed, 0);
    let draws = (0..shots).map(|_| random_bits(&mut rng, q.n)).collect();
    let meta = SampleMeta {
        solver: "random".into(),
        params: BTreeMap::from([("shots".into(), shots.to_string())]),
        seed,
    };
    Ok(SampleSet::from_draws(draws, &ev, meta))
}

/// One left-to-right pass; bit `i` is flipped iff that strictly lowers the
/// energy of the current (already partially updated) string.
pub fn bitflip_postprocess<S: Scalar>(q: &Qubo<S>, bits: &Bits) -> Result<Bits> {
    if bits.len() != q.n {
        return Err(Error::input(format!(
            "bitstring has {} bits, QUBO has {} variables",
            bits.len(),
            q.n
        )));
    }
    Ok(bitflip_pass(&Evaluator::new(q), bits))
}

pub fn bitflip_pass<S: Scalar>(ev: &Evaluator<S>, bits: &Bits) -> Bits {
    let mut out = bits.clone();
    for i in 0..out.len() {
        if ev.flip_improves(&out, i) {
            out.0[i] = !out.0[i];
        }
    }
    out
}

/// `a` precedes `b` as a `0`/`1` string with variable 0 first.
fn lex_less(a: u64, b: u64) -> bool {
    a != b && a >> (a ^ b).trailing_zeros() & 1 == 0
}

fn better<T: PartialOrd>(cand: (T, u64), best: &(T, u64)) -> bool {
    cand.0 < best.0 || (cand.0 == best.0 && lex_less(cand.1, best.1))
}

/// Global minimum by exhaustive enumeration (Gray-code order, partitioned
/// across threads by the high bits). Ties go to the lexicographically
/// smallest bitstring.
pub fn brute_force_qubo<S: Scalar>(q: &Qubo<S>) -> Result<(Bits, S)> {
    if q.n > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge {
            what: "QUBO for brute force",
            size: q.n as u64,
            limit: BRUTE_FORCE_LIMIT as u64,
        });
    }
    let ev = Evaluator::new(q);
    let index = match &ev.exact {
        Some((kernel, _)) => min_index(kernel),
        None if S::EXACT => {
            let mut best: Option<(S, u64)> = None;
            for k in 0..1u64 << q.n {
                let e = qubo_energy(q, &Bits::from_index(k, q.n))?;
                if best.as_ref().is_none_or(|b| better((e.clone(), k), b)) {
                    best = Some((e, k));
                }
            }
            best.expect("at least one bitstring").1
        }
        None => min_index(&ev.approx),
    };
    let bits = Bits::from_index(index, q.n);
    let energy = ev.energy(&bits);
    Ok((bits, energy))
}

/// Every bitstring attaining the global minimum, in index order.
pub fn ground_states<S: Scalar>(q: &Qubo<S>) -> Result<Vec<Bits>> {
    let (best, energy) = brute_force_qubo(q)?;
    let ev = Evaluator::new(q);
    let indices = match &ev.exact {
        Some((kernel, _)) => indices_at(kernel, kernel.energy(&best)),
        None if S::EXACT => (0..1u64 << q.n)
            .filter(|&k| ev.energy(&Bits::from_index(k, q.n)) == energy)
            .collect(),
        None => {
            let target = ev.approx.energy(&best);
            (0..1u64 << q.n)
                .into_par_iter()
                .filter(|&k| ev.approx.energy(&Bits::from_index(k, q.n)) == target)
                .collect()
        }
    };
    Ok(indices.into_iter().map(|k| Bits::from_index(k, q.n)).collect())
}

fn indices_at<T>(kernel: &Kernel<T>, target: T) -> Vec<u64>
where
    T: Copy + Zero + Add<Output = T> + Sub<Output = T> + Neg<Output = T> + PartialOrd + Send + Sync,
{
    let high = kernel.n.min(6);
    let low = kernel.n - high;
    let mut found: Vec<u64> = (0..1u64 << high)
        .into_par_iter()
        .flat_map_iter(|prefix| {
            let mut hits = Vec::new();
            kernel.gray_walk(prefix << low, low, |idx, e| {
                if e == target {
                    hits.push(idx);
                }
            });
            hits
        })
        .collect();
    found.sort_unstable();
    found
}

fn min_index<T>(kernel: &Kernel<T>) -> u64
where
    T: Copy + Zero + Add<Output = T> + Sub<Output = T> + Neg<Output = T> + PartialOrd + Send + Sync,
{
    let n = kernel.n;
    let high = n.min(6);
    let low = n - high;
    (0..1u64 << high)
        .into_par_iter()
        .map(|prefix| {
            let mut best: Option<(T, u64)> = None;
            kernel.gray_walk(prefix << low, low, |idx, e| {
                if best.as_ref().is_none_or(|b| better((e, idx), b)) {
                    best = Some((e, idx));
                }
            });
            best.expect("non-empty walk")
        })
        .reduce_with(|a, b| if better((b.0, b.1), &a) { b } else { a })
        .expect("non-empty search space")
        .1
}

/// Exact energy of every bitstring, indexed with variable 0 as the least
/// significant bit.
pub(crate) fn all_energies_f64<S: Scalar>(ev: &Evaluator<S>) -> Vec<f64> {
    let n = ev.n();
    let high = n.min(6);
    let low = n - high;
    let mut out = vec![0.0f64; 1usize << n];
    match &ev.exact {
        Some((kernel, den)) => {
            let den = den.to_f64_lossy();
            out.par_chunks_mut(1usize << low)
                .enumerate()
                .for_each(|(prefix, chunk)| {
                    let base = (prefix as u64) << low;
                    kernel.gray_walk(base, low, |idx, e| {
                        chunk[(idx - base) as usize] = e.to_f64().unwrap_or(f64::NAN) / den;
                    });
                });
        }
        None => {
            out.par_iter_mut().enumerate().for_each(|(k, slot)| {
                *slot = ev.energy(&Bits::from_index(k as u64, n)).to_f64_lossy();
            });
        }
    }
    out
}
