//! Flat adjacency form of a QUBO for the inner loops (energy, single-flip
//! deltas, Gray-code enumeration).

use std::ops::{Add, Neg, Sub};

use num_traits::Zero;

use super::{qubo_energy, Qubo};
use crate::scalar::Scalar;

#[derive(Clone, Debug)]
pub struct Kernel<T> {
    pub n: usize,
    pub linear: Vec<T>,
    /// Symmetric: `(j, q)` in `neighbors[i]` iff `(i, q)` in `neighbors[j]`.
    pub neighbors: Vec<Vec<(usize, T)>>,
    pub offset: T,
}

impl<T> Kernel<T>
where
    T: Copy + Zero + Add<Output = T> + Sub<Output = T> + Neg<Output = T> + PartialOrd,
{
    pub fn new(n: usize, entries: impl IntoIterator<Item = ((usize, usize), T)>, offset: T) -> Self {
        let mut linear = vec![T::zero(); n];
        let mut neighbors = vec![Vec::new(); n];
        for ((i, j), v) in entries {
            if i == j {
                linear[i] = linear[i] + v;
            } else {
                neighbors[i].push((j, v));
                neighbors[j].push((i, v));
            }
        }
        Kernel {
            n,
            linear,
            neighbors,
            offset,
        }
    }

    pub fn energy(&self, bits: &[bool]) -> T {
        let mut e = self.offset;
        for i in 0..self.n {
            if !bits[i] {
                continue;
            }
            e = e + self.linear[i];
            for &(j, q) in &self.neighbors[i] {
                if j > i && bits[j] {
                    e = e + q;
                }
            }
        }
        e
    }

    /// Energy change from flipping bit `k`.
    pub fn flip_delta(&self, bits: &[bool], k: usize) -> T {
        let field = self.neighbors[k]
            .iter()
            .filter(|(j, _)| bits[*j])
            .fold(self.linear[k], |acc, &(_, q)| acc + q);
        if bits[k] {
            -field
        } else {
            field
        }
    }

    /// Visits every assignment of the low `free` bits in Gray-code order
    /// while the remaining bits stay as in `start`. The callback receives
    /// the index (bit `i` = variable `i`) and its energy.
    pub fn gray_walk(&self, start: u64, free: usize, mut visit: impl FnMut(u64, T)) {
        let mut bits: Vec<bool> = (0..self.n).map(|i| start >> i & 1 == 1).collect();
        let mut index = start;
        let mut e = self.energy(&bits);
        visit(index, e);
        for step in 1u64..(1u64 << free) {
            let k = step.trailing_zeros() as usize;
            e = e + self.flip_delta(&bits, k);
            bits[k] = !bits[k];
            index ^= 1 << k;
            visit(index, e);
        }
    }
}

/// Energy evaluator for a `Qubo<S>`: exact `i128` arithmetic over a common
/// denominator when the scalar is exact and the values fit, plus an `f64`
/// copy for heuristics that only need approximate deltas.
#[derive(Clone, Debug)]
pub struct Evaluator<S> {
    pub approx: Kernel<f64>,
    pub exact: Option<(Kernel<i128>, S)>,
    source: Qubo<S>,
}

impl<S: Scalar> Evaluator<S> {
    pub fn new(q: &Qubo<S>) -> Self {
        let approx = Kernel::new(
            q.n,
            q.coeffs.iter().map(|(&k, v)| (k, v.to_f64_lossy())),
            q.offset.to_f64_lossy(),
        );
        let mut values: Vec<S> = q.coeffs.values().cloned().collect();
        values.push(q.offset.clone());
        let exact = S::integer_form(&values).map(|form| {
            let (offset, coeffs) = form.numerators.split_last().expect("offset present");
            let kernel = Kernel::new(q.n, q.coeffs.keys().copied().zip(coeffs.iter().copied()), *offset);
            (kernel, form.denominator)
        });
        Evaluator {
            approx,
            exact,
            source: q.clone(),
        }
    }

    pub fn n(&self) -> usize {
        self.approx.n
    }

    pub fn qubo(&self) -> &Qubo<S> {
        &self.source
    }

    /// Energy in the QUBO's scalar type; exact whenever `S` is.
    pub fn energy(&self, bits: &[bool]) -> S {
        match &self.exact {
            Some((k, den)) => S::from_int(k.energy(bits)) / den.clone(),
            None if S::EXACT => qubo_energy(&self.source, bits).expect("length checked by caller"),
            None => S::from_f64(self.approx.energy(bits)).unwrap_or_else(S::zero),
        }
    }

    /// Exact integer energy numerator when available.
    pub fn energy_numerator(&self, bits: &[bool]) -> Option<i128> {
        self.exact.as_ref().map(|(k, _)| k.energy(bits))
    }

    /// Whether flipping bit `k` strictly lowers the energy.
    pub fn flip_improves(&self, bits: &[bool], k: usize) -> bool {
        match &self.exact {
            Some((kernel, _)) => kernel.flip_delta(bits, k) < 0,
            None if S::EXACT => {
                let mut flipped = bits.to_vec();
                flipped[k] = !flipped[k];
                let before = qubo_energy(&self.source, bits).expect("length checked");
                let after = qubo_energy(&self.source, &flipped).expect("length checked");
                after < before
            }
            None => self.approx.flip_delta(bits, k) < 0.0,
        }
    }
}
