use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};

use super::{Qubo, VariableMap, VariantSpec};
use crate::error::{Error, Result};
use crate::model::Instance;
use crate::scalar::{Rational, Scalar};

/// Number of binary slack variables for capacity `h`: 0 for `h = 0`,
/// otherwise `floor(log2 h) + 1`.
pub fn slack_bit_count(h: u64) -> usize {
    if h == 0 {
        0
    } else {
        64 - h.leading_zeros() as usize
    }
}

/// Weights `[1, 2, …, 2^(r-1), h - 2^r + 1]` with `r = floor(log2 h)`.
/// Empty for `h = 0`.
pub fn slack_coefficients(h: u64) -> Vec<u64> {
    if h == 0 {
        return Vec::new();
    }
    let r = slack_bit_count(h) - 1;
    let mut out: Vec<u64> = (0..r).map(|j| 1u64 << j).collect();
    out.push(h - (1u64 << r) + 1);
    out
}

/// Upper minus lower bound of `Σ aᵢ xᵢ` over the binary hypercube, i.e. the
/// sum of the absolute coefficients. Constants do not contribute.
pub fn value_range<S: Scalar>(coefficients: &[S]) -> S {
    coefficients
        .iter()
        .fold(S::zero(), |acc, c| acc + c.abs())
}

/// Affine expression `Σ aᵢ xᵢ + c` over QUBO variables.
#[derive(Clone, Debug)]
struct Affine<S> {
    terms: Vec<(usize, S)>,
    constant: S,
}

impl<S: Scalar> Affine<S> {
    fn range(&self) -> S {
        let coeffs: Vec<S> = self.terms.iter().map(|(_, a)| a.clone()).collect();
        value_range(&coeffs)
    }

    fn scale(&mut self, k: &S) {
        for (_, a) in &mut self.terms {
            *a = a.clone() * k.clone();
        }
        self.constant = self.constant.clone() * k.clone();
    }

    /// Multiplies by `target / range` when the range is nonzero.
    fn rescale_to(&mut self, target: &S) {
        let v = self.range();
        if !v.is_zero() {
            self.scale(&(target.clone() / v));
        }
    }
}

impl<S: Scalar> Qubo<S> {
    fn add_linear(&mut self, e: &Affine<S>) {
        for (i, a) in &e.terms {
            self.add(*i, *i, a.clone());
        }
        self.offset = self.offset.clone() + e.constant.clone();
    }

    /// Adds `weight · (Σ aᵢ xᵢ + c)²` expanded with `x² = x`.
    fn add_squared(&mut self, e: &Affine<S>, weight: &S) {
        let two = S::one() + S::one();
        let c = &e.constant;
        for (k, (i, a)) in e.terms.iter().enumerate() {
            let diag = a.clone() * a.clone() + two.clone() * a.clone() * c.clone();
            self.add(*i, *i, weight.clone() * diag);
            for (j, b) in &e.terms[k + 1..] {
                self.add(*i, *j, weight.clone() * two.clone() * a.clone() * b.clone());
            }
        }
        self.offset = self.offset.clone() + weight.clone() * c.clone() * c.clone();
    }
}

/// Compiles a sanitized instance into one of the three QUBO variants.
pub fn build_qubo<S: Scalar>(inst: &Instance, variant: &VariantSpec) -> Result<Qubo<S>> {
    variant.check()?;
    if !inst.is_sanitized() {
        return Err(Error::input(
            "instance must be sanitized (integral workloads and capacities)",
        ));
    }
    let capacities: Vec<i128> = inst
        .capacity
        .iter()
        .map(|h| h.to_integer().to_i128().ok_or(Error::Overflow("capacity")))
        .collect::<Result<_>>()?;
    if capacities.iter().any(|&h| h > u64::MAX as i128) {
        return Err(Error::Overflow("capacity"));
    }
    let varmap = VariableMap::new(inst.toolkits.clone(), inst.machines.clone(), &capacities);
    let (nt, nm) = (inst.n_toolkits(), inst.n_machines());

    let costs: Vec<Vec<Rational>> = match variant {
        VariantSpec::Rounded => rounded_costs(inst)?,
        _ => inst.cost.clone(),
    };
    let sc = |r: &Rational| S::from_rational(r);

    let objective = Affine {
        terms: (0..nt)
            .flat_map(|t| (0..nm).map(move |m| (t, m)))
            .map(|(t, m)| (varmap.decision_index(t, m), sc(&costs[t][m])))
            .filter(|(_, c)| !c.is_zero())
            .collect(),
        constant: S::zero(),
    };
    let mut assign: Vec<Affine<S>> = (0..nt)
        .map(|t| Affine {
            terms: (0..nm).map(|m| (varmap.decision_index(t, m), S::one())).collect(),
            constant: -S::one(),
        })
        .collect();
    let mut capacity: Vec<Affine<S>> = (0..nm)
        .map(|m| {
            let mut terms: Vec<(usize, S)> = (0..nt)
                .map(|t| (varmap.decision_index(t, m), sc(&inst.workload[t][m])))
                .filter(|(_, w)| !w.is_zero())
                .collect();
            terms.extend(
                varmap.slack[m]
                    .iter()
                    .zip(&varmap.slack_coefficients[m])
                    .map(|(&i, &k)| (i, S::from_int(k))),
            );
            Affine {
                terms,
                constant: -sc(&inst.capacity[m]),
            }
        })
        .collect();

    let mut q = Qubo {
        n: varmap.n,
        coeffs: Default::default(),
        offset: S::zero(),
        varmap: Some(varmap),
        variant: Some(variant.clone()),
    };

    match variant {
        VariantSpec::Raw { lambda_m, lambda_t } => {
            q.add_linear(&objective);
            let (lt, lm) = (sc(lambda_t), sc(lambda_m));
            for e in &assign {
                q.add_squared(e, &lt);
            }
            for e in &capacity {
                q.add_squared(e, &lm);
            }
        }
        VariantSpec::Scaled { .. } | VariantSpec::Rounded => {
            let lambda_s = match variant {
                VariantSpec::Scaled { lambda_s } => sc(lambda_s),
                _ => S::one(),
            };
            for e in &mut assign {
                e.scale(&lambda_s);
            }
            let v_max = std::iter::once(objective.range())
                .chain(assign.iter().map(Affine::range))
                .chain(capacity.iter().map(Affine::range))
                .fold(S::zero(), |a, b| if b > a { b } else { a });
            let mut objective = objective;
            objective.rescale_to(&v_max);
            for e in assign.iter_mut().chain(capacity.iter_mut()) {
                e.rescale_to(&v_max);
            }
            q.add_linear(&objective);
            for e in assign.iter().chain(&capacity) {
                q.add_squared(e, &S::one());
            }
        }
    }
    Ok(q)
}

/// `c div c_min` for every positive cost; zero costs stay zero.
fn rounded_costs(inst: &Instance) -> Result<Vec<Vec<Rational>>> {
    let c_min = inst
        .cost
        .iter()
        .flatten()
        .filter(|c| c.is_positive())
        .min()
        .cloned()
        .ok_or_else(|| Error::input("rounded variant needs at least one positive cost"))?;
    Ok(inst
        .cost
        .iter()
        .map(|row| {
            row.iter()
                .map(|c| {
                    if c.is_zero() {
                        Rational::zero()
                    } else {
                        // Integer division of the exact values.
                        let q = (c.numer() * c_min.denom()).div_floor(&(c.denom() * c_min.numer()));
                        Rational::from_integer(q)
                    }
                })
                .collect()
        })
        .collect())
}
