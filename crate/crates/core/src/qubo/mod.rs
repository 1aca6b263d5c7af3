//! QUBO representation, compilation from an [`Instance`](crate::model::Instance),
//! energy evaluation, normalization and decoding.
//!
//! Variable layout is fixed: decision variable `x[t][m]` sits at
//! `t * |M| + m` (toolkit-major), followed by the slack bits of machine 0 in
//! ascending bit order, then machine 1, and so on.

mod build;
mod io;
mod kernel;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Candidate;
use crate::scalar::{parse_rational, Rational, Scalar};

pub use build::{build_qubo, slack_bit_count, slack_coefficients, value_range};
pub use io::{read_qubo, read_qubo_text, write_qubo, write_qubo_text, QuboSidecar};
pub use kernel::{Evaluator, Kernel};

/// A bitstring; position `i` is variable `i`. Displays as `0`/`1` characters
/// with variable 0 first.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Bits(pub Vec<bool>);

impl Bits {
    pub fn zeros(n: usize) -> Self {
        Bits(vec![false; n])
    }

    /// Bit `i` of `index` becomes variable `i` (statevector layout).
    pub fn from_index(index: u64, n: usize) -> Self {
        Bits((0..n).map(|i| index >> i & 1 == 1).collect())
    }

    pub fn to_index(&self) -> u64 {
        self.0
            .iter()
            .enumerate()
            .fold(0, |acc, (i, &b)| acc | (u64::from(b) << i))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl std::ops::Deref for Bits {
    type Target = [bool];
    fn deref(&self) -> &[bool] {
        &self.0
    }
}

impl fmt::Display for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for Bits {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(Error::input(format!("bad bit {c:?} in {s:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Bits)
    }
}

/// Where each decision and slack variable lives in the bitstring.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableMap {
    pub n: usize,
    pub toolkits: Vec<String>,
    pub machines: Vec<String>,
    /// `decision[t][m]` is the index of `x[t][m]`.
    pub decision: Vec<Vec<usize>>,
    /// `slack[m][j]` is the index of slack bit `j` of machine `m`.
    pub slack: Vec<Vec<usize>>,
    /// Weight of each slack bit in `S_m`.
    pub slack_coefficients: Vec<Vec<i128>>,
}

impl VariableMap {
    /// Lays out variables for the given ids and integral capacities.
    pub fn new(toolkits: Vec<String>, machines: Vec<String>, capacities: &[i128]) -> Self {
        let (nt, nm) = (toolkits.len(), machines.len());
        let decision = (0..nt)
            .map(|t| (0..nm).map(|m| t * nm + m).collect())
            .collect();
        let mut next = nt * nm;
        let mut slack = Vec::with_capacity(nm);
        let mut slack_coefficients = Vec::with_capacity(nm);
        for &h in capacities {
            let coeffs = slack_coefficients_i128(h);
            slack.push((next..next + coeffs.len()).collect());
            next += coeffs.len();
            slack_coefficients.push(coeffs);
        }
        VariableMap {
            n: next,
            toolkits,
            machines,
            decision,
            slack,
            slack_coefficients,
        }
    }

    pub fn decision_index(&self, t: usize, m: usize) -> usize {
        self.decision[t][m]
    }

    pub fn slack_index(&self, m: usize, j: usize) -> usize {
        self.slack[m][j]
    }

    /// Checks that the indices are exactly `0..n` and shapes agree.
    pub fn check(&self) -> Result<()> {
        let nm = self.machines.len();
        if self.decision.len() != self.toolkits.len()
            || self.decision.iter().any(|r| r.len() != nm)
            || self.slack.len() != nm
            || self.slack_coefficients.len() != nm
            || self
                .slack
                .iter()
                .zip(&self.slack_coefficients)
                .any(|(s, c)| s.len() != c.len())
        {
            return Err(Error::input("variable map shapes disagree"));
        }
        let mut seen = vec![false; self.n];
        for &i in self.decision.iter().flatten().chain(self.slack.iter().flatten()) {
            if i >= self.n || std::mem::replace(&mut seen[i], true) {
                return Err(Error::input(format!("variable index {i} duplicated or out of range")));
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::input("variable map does not cover every index"));
        }
        Ok(())
    }
}

fn slack_coefficients_i128(h: i128) -> Vec<i128> {
    if h <= 0 {
        return Vec::new();
    }
    let r = 127 - h.leading_zeros() as usize;
    let mut out: Vec<i128> = (0..r).map(|j| 1i128 << j).collect();
    out.push(h - (1i128 << r) + 1);
    out
}

/// Which of the three constructions produced a QUBO.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VariantSpec {
    /// Unprocessed data with hand-picked penalty factors.
    Raw { lambda_m: Rational, lambda_t: Rational },
    /// Range-balanced constraints; `lambda_s` pre-multiplies exactly-once.
    Scaled { lambda_s: Rational },
    /// Costs integer-divided by the smallest positive cost, then scaled with
    /// `lambda_s = 1`.
    Rounded,
}

impl VariantSpec {
    pub fn raw(lambda_m: i64, lambda_t: i64) -> Self {
        VariantSpec::Raw {
            lambda_m: Rational::from_integer(lambda_m.into()),
            lambda_t: Rational::from_integer(lambda_t.into()),
        }
    }

    pub fn scaled(lambda_s: Rational) -> Self {
        VariantSpec::Scaled { lambda_s }
    }

    /// λ_m ∈ {10³, 10⁴, 10⁵} × λ_t ∈ {10⁷, 10⁸, 10⁹}, λ_m outermost.
    pub fn raw_grid() -> Vec<Self> {
        let mut out = Vec::with_capacity(9);
        for lm in [1_000, 10_000, 100_000] {
            for lt in [10_000_000, 100_000_000, 1_000_000_000] {
                out.push(VariantSpec::raw(lm, lt));
            }
        }
        out
    }

    /// λ_s ∈ {0.1, 1}.
    pub fn scaled_grid() -> Vec<Self> {
        vec![
            VariantSpec::scaled(Rational::new(1.into(), 10.into())),
            VariantSpec::scaled(Rational::from_integer(1.into())),
        ]
    }

    /// All twelve default combinations: raw, scaled, rounded.
    pub fn full_grid() -> Vec<Self> {
        let mut v = Self::raw_grid();
        v.extend(Self::scaled_grid());
        v.push(VariantSpec::Rounded);
        v
    }

    pub fn kind(&self) -> &'static str {
        match self {
            VariantSpec::Raw { .. } => "raw",
            VariantSpec::Scaled { .. } => "scaled",
            VariantSpec::Rounded => "rounded",
        }
    }

    /// Penalty parameters in a fixed order, used for tie-breaking.
    pub fn penalty_params(&self) -> Vec<Rational> {
        match self {
            VariantSpec::Raw { lambda_m, lambda_t } => vec![lambda_m.clone(), lambda_t.clone()],
            VariantSpec::Scaled { lambda_s } => vec![lambda_s.clone()],
            VariantSpec::Rounded => Vec::new(),
        }
    }

    /// True when the parameters are on the default grid.
    pub fn on_default_grid(&self) -> bool {
        match self {
            VariantSpec::Rounded => true,
            VariantSpec::Raw { .. } => Self::raw_grid().contains(self),
            VariantSpec::Scaled { .. } => Self::scaled_grid().contains(self),
        }
    }

    pub fn label(&self) -> String {
        match self {
            VariantSpec::Raw { lambda_m, lambda_t } => {
                format!("raw(lm={},lt={})", lambda_m.render(), lambda_t.render())
            }
            VariantSpec::Scaled { lambda_s } => format!("scaled(ls={})", lambda_s.render()),
            VariantSpec::Rounded => "rounded".to_string(),
        }
    }

    pub(crate) fn check(&self) -> Result<()> {
        let positive = |name: &str, v: &Rational| {
            if v > &Rational::zero() {
                Ok(())
            } else {
                Err(Error::input(format!("{name} must be positive, got {}", v.render())))
            }
        };
        match self {
            VariantSpec::Raw { lambda_m, lambda_t } => {
                positive("lambda_m", lambda_m)?;
                positive("lambda_t", lambda_t)
            }
            VariantSpec::Scaled { lambda_s } => positive("lambda_s", lambda_s),
            VariantSpec::Rounded => Ok(()),
        }
    }
}

impl fmt::Display for VariantSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum VariantRepr {
    Raw { lambda_m: String, lambda_t: String },
    Scaled { lambda_s: String },
    Rounded,
}

impl Serialize for VariantSpec {
    fn serialize<Se: serde::Serializer>(&self, s: Se) -> std::result::Result<Se::Ok, Se::Error> {
        match self {
            VariantSpec::Raw { lambda_m, lambda_t } => VariantRepr::Raw {
                lambda_m: lambda_m.render(),
                lambda_t: lambda_t.render(),
            },
            VariantSpec::Scaled { lambda_s } => VariantRepr::Scaled {
                lambda_s: lambda_s.render(),
            },
            VariantSpec::Rounded => VariantRepr::Rounded,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for VariantSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let parse = |s: &str| parse_rational(s).map_err(D::Error::custom);
        Ok(match VariantRepr::deserialize(d)? {
            VariantRepr::Raw { lambda_m, lambda_t } => VariantSpec::Raw {
                lambda_m: parse(&lambda_m)?,
                lambda_t: parse(&lambda_t)?,
            },
            VariantRepr::Scaled { lambda_s } => VariantSpec::Scaled {
                lambda_s: parse(&lambda_s)?,
            },
            VariantRepr::Rounded => VariantSpec::Rounded,
        })
    }
}

/// `min xᵀQx + offset` over `x ∈ {0,1}ⁿ`, stored upper-triangular. Diagonal
/// entries carry the linear terms.
#[derive(Clone, Debug, PartialEq)]
pub struct Qubo<S> {
    pub n: usize,
    pub coeffs: BTreeMap<(usize, usize), S>,
    pub offset: S,
    pub varmap: Option<VariableMap>,
    pub variant: Option<VariantSpec>,
}

impl<S: Scalar> Qubo<S> {
    /// Unstructured QUBO (no variable map). Keys are normalized to `i <= j`,
    /// duplicates summed, zeros dropped.
    pub fn from_terms(
        n: usize,
        terms: impl IntoIterator<Item = ((usize, usize), S)>,
        offset: S,
    ) -> Result<Self> {
        let mut q = Qubo {
            n,
            coeffs: BTreeMap::new(),
            offset,
            varmap: None,
            variant: None,
        };
        for ((i, j), v) in terms {
            if i >= n || j >= n {
                return Err(Error::input(format!("term ({i}, {j}) out of range for n = {n}")));
            }
            q.add(i, j, v);
        }
        Ok(q)
    }

    pub(crate) fn add(&mut self, i: usize, j: usize, v: S) {
        let key = if i <= j { (i, j) } else { (j, i) };
        let entry = self.coeffs.entry(key).or_insert_with(S::zero);
        *entry = entry.clone() + v;
        if entry.is_zero() {
            self.coeffs.remove(&key);
        }
    }

    pub fn get(&self, i: usize, j: usize) -> S {
        let key = if i <= j { (i, j) } else { (j, i) };
        self.coeffs.get(&key).cloned().unwrap_or_else(S::zero)
    }

    pub fn max_abs_coeff(&self) -> S {
        self.coeffs
            .values()
            .map(|v| v.abs())
            .fold(S::zero(), |a, b| if b > a { b } else { a })
    }

    /// Same QUBO in another scalar type.
    pub fn convert<T: Scalar>(&self) -> Qubo<T> {
        let conv = |v: &S| -> T {
            match v.to_rational() {
                Some(r) => T::from_rational(&r),
                None => T::from_f64(v.to_f64_lossy()).unwrap_or_else(T::zero),
            }
        };
        Qubo {
            n: self.n,
            coeffs: self
                .coeffs
                .iter()
                .map(|(&k, v)| (k, conv(v)))
                .filter(|(_, v)| !v.is_zero())
                .collect(),
            offset: conv(&self.offset),
            varmap: self.varmap.clone(),
            variant: self.variant.clone(),
        }
    }

    fn check_len(&self, bits: &[bool]) -> Result<()> {
        if bits.len() != self.n {
            return Err(Error::input(format!(
                "bitstring has {} bits, QUBO has {} variables",
                bits.len(),
                self.n
            )));
        }
        Ok(())
    }

    /// Off-diagonal interaction pairs `(i, j)`, `i < j`.
    pub fn interactions(&self) -> Vec<(usize, usize)> {
        self.coeffs.keys().copied().filter(|(i, j)| i != j).collect()
    }
}

/// `xᵀQx + C`, evaluated term by term in the QUBO's own scalar type.
pub fn qubo_energy<S: Scalar>(q: &Qubo<S>, bits: &[bool]) -> Result<S> {
    q.check_len(bits)?;
    Ok(q.coeffs
        .iter()
        .filter(|(&(i, j), _)| bits[i] && bits[j])
        .fold(q.offset.clone(), |acc, (_, v)| acc + v.clone()))
}

/// Divides every coefficient and the offset by the largest absolute
/// coefficient.
pub fn normalize_qubo<S: Scalar>(q: &Qubo<S>) -> Result<Qubo<S>> {
    let scale = q.max_abs_coeff();
    if scale.is_zero() {
        return Err(Error::input("cannot normalize an all-zero QUBO"));
    }
    Ok(Qubo {
        n: q.n,
        coeffs: q
            .coeffs
            .iter()
            .map(|(&k, v)| (k, v.clone() / scale.clone()))
            .collect(),
        offset: q.offset.clone() / scale,
        varmap: q.varmap.clone(),
        variant: q.variant.clone(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecodedSample {
    pub candidate: Candidate,
    /// Integer slack value `S_m` per machine.
    pub slack: Vec<i128>,
    pub raw_bits: Bits,
}

pub fn decode<S: Scalar>(q: &Qubo<S>, bits: &Bits) -> Result<DecodedSample> {
    q.check_len(bits)?;
    let map = q
        .varmap
        .as_ref()
        .ok_or_else(|| Error::input("QUBO has no variable map to decode against"))?;
    Ok(decode_with(map, bits))
}

pub(crate) fn decode_with(map: &VariableMap, bits: &Bits) -> DecodedSample {
    let machines = map
        .decision
        .iter()
        .map(|row| (0..row.len()).filter(|&m| bits[row[m]]).collect())
        .collect();
    let slack = map
        .slack
        .iter()
        .zip(&map.slack_coefficients)
        .map(|(idx, coeff)| {
            idx.iter()
                .zip(coeff)
                .filter(|(&i, _)| bits[i])
                .map(|(_, &c)| c)
                .sum()
        })
        .collect();
    DecodedSample {
        candidate: Candidate { machines },
        slack,
        raw_bits: bits.clone(),
    }
}

/// Bitstring of a total assignment; the slack bits are chosen greedily
/// (largest weight first) to represent `slack[m]`, or left zero when `None`.
pub fn encode(map: &VariableMap, choice: &[usize], slack: Option<&[i128]>) -> Result<Bits> {
    if choice.len() != map.decision.len() {
        return Err(Error::input("assignment length does not match variable map"));
    }
    let mut bits = Bits::zeros(map.n);
    for (t, &m) in choice.iter().enumerate() {
        bits.0[map.decision[t][m]] = true;
    }
    if let Some(slack) = slack {
        for (m, &target) in slack.iter().enumerate() {
            let mut left = target;
            // Weights sorted descending; subset sums of the binary-split weights
            // cover 0..=h, and greedy from the largest weight always succeeds.
            let mut order: Vec<usize> = (0..map.slack_coefficients[m].len()).collect();
            order.sort_by_key(|&j| std::cmp::Reverse(map.slack_coefficients[m][j]));
            for j in order {
                let c = map.slack_coefficients[m][j];
                if c <= left {
                    left -= c;
                    bits.0[map.slack[m][j]] = true;
                }
            }
            if left != 0 {
                return Err(Error::input(format!("slack {target} not representable on machine {m}")));
            }
        }
    }
    Ok(bits)
}

/// Shorthand used throughout the tests and the CLI.
pub type ExactQubo = Qubo<Rational>;
