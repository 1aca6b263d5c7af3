//! The toolkit-to-machine assignment problem: instance data, feasibility,
//! objective, the enumeration oracle, and the synthetic instance generator.

use std::collections::BTreeMap;
use std::path::Path;

use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{parse_rational, rational_to_decimal, Rational, Scalar};

/// Largest `|machines|^|toolkits|` that [`exact_solve`] will enumerate.
pub const EXACT_SOLVE_LIMIT: u64 = 1 << 26;

const GENERATOR_ATTEMPTS: usize = 64;

/// Problem data. Rows of `cost` and `workload` follow toolkit order, columns
/// follow machine order.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    pub id: String,
    pub toolkits: Vec<String>,
    pub machines: Vec<String>,
    pub cost: Vec<Vec<Rational>>,
    pub workload: Vec<Vec<Rational>>,
    pub capacity: Vec<Rational>,
}

impl Instance {
    pub fn new(
        id: impl Into<String>,
        toolkits: Vec<String>,
        machines: Vec<String>,
        cost: Vec<Vec<Rational>>,
        workload: Vec<Vec<Rational>>,
        capacity: Vec<Rational>,
    ) -> Result<Self> {
        let inst = Instance {
            id: id.into(),
            toolkits,
            machines,
            cost,
            workload,
            capacity,
        };
        inst.check()?;
        Ok(inst)
    }

    /// Builds an instance from integer tables, naming toolkits `t1..` and
    /// machines `m1..`.
    pub fn from_integers(
        id: impl Into<String>,
        cost: &[Vec<i64>],
        workload: &[Vec<i64>],
        capacity: &[i64],
    ) -> Result<Self> {
        let to_rows = |rows: &[Vec<i64>]| -> Vec<Vec<Rational>> {
            rows.iter()
                .map(|r| r.iter().map(|&v| Rational::from_integer(v.into())).collect())
                .collect()
        };
        Instance::new(
            id,
            (1..=cost.len()).map(|i| format!("t{i}")).collect(),
            (1..=capacity.len()).map(|i| format!("m{i}")).collect(),
            to_rows(cost),
            to_rows(workload),
            capacity.iter().map(|&v| Rational::from_integer(v.into())).collect(),
        )
    }

    pub fn n_toolkits(&self) -> usize {
        self.toolkits.len()
    }

    pub fn n_machines(&self) -> usize {
        self.machines.len()
    }

    pub fn toolkit_index(&self, id: &str) -> Option<usize> {
        self.toolkits.iter().position(|t| t == id)
    }

    pub fn machine_index(&self, id: &str) -> Option<usize> {
        self.machines.iter().position(|m| m == id)
    }

    /// Integral workloads and capacities.
    pub fn is_sanitized(&self) -> bool {
        self.capacity.iter().all(|h| h.is_integer())
            && self.workload.iter().flatten().all(|w| w.is_integer())
    }

    fn check(&self) -> Result<()> {
        let (nt, nm) = (self.n_toolkits(), self.n_machines());
        if nt == 0 || nm == 0 {
            return Err(Error::input("instance needs at least one toolkit and one machine"));
        }
        for (what, ids) in [("toolkit", &self.toolkits), ("machine", &self.machines)] {
            let mut seen = std::collections::BTreeSet::new();
            for id in ids {
                if !seen.insert(id) {
                    return Err(Error::input(format!("duplicate {what} id {id:?}")));
                }
            }
        }
        for (name, table) in [("cost", &self.cost), ("workload", &self.workload)] {
            if table.len() != nt {
                return Err(Error::input(format!(
                    "{name} has {} rows, expected {nt}",
                    table.len()
                )));
            }
            for (t, row) in table.iter().enumerate() {
                if row.len() != nm {
                    return Err(Error::input(format!(
                        "{name} row {t} has {} entries, expected {nm}",
                        row.len()
                    )));
                }
                if let Some(v) = row.iter().find(|v| v.is_negative()) {
                    return Err(Error::input(format!("negative {name} {v} in row {t}")));
                }
            }
        }
        if self.capacity.len() != nm {
            return Err(Error::input(format!(
                "capacity has {} entries, expected {nm}",
                self.capacity.len()
            )));
        }
        if let Some(v) = self.capacity.iter().find(|v| v.is_negative()) {
            return Err(Error::input(format!("negative capacity {v}")));
        }
        Ok(())
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: InstanceFile = serde_json::from_str(text)?;
        let rows = |name: &str, rows: Vec<Vec<serde_json::Value>>| -> Result<Vec<Vec<Rational>>> {
            rows.into_iter()
                .map(|r| r.iter().map(|v| json_rational(name, v)).collect())
                .collect()
        };
        Instance::new(
            file.id,
            file.toolkits,
            file.machines,
            rows("cost", file.cost)?,
            rows("workload", file.workload)?,
            file.capacity
                .iter()
                .map(|v| json_rational("capacity", v))
                .collect::<Result<_>>()?,
        )
    }

    /// Pretty JSON; terminating rationals become JSON numbers, anything else
    /// a `"p/q"` string.
    pub fn to_json_string(&self) -> String {
        let rows = |t: &[Vec<Rational>]| -> Vec<Vec<serde_json::Value>> {
            t.iter().map(|r| r.iter().map(rational_json).collect()).collect()
        };
        let file = InstanceFile {
            id: self.id.clone(),
            toolkits: self.toolkits.clone(),
            machines: self.machines.clone(),
            cost: rows(&self.cost),
            workload: rows(&self.workload),
            capacity: self.capacity.iter().map(rational_json).collect(),
        };
        let mut out = serde_json::to_string_pretty(&file).expect("instance serializes");
        out.push('\n');
        out
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Instance::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json_string())?;
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct InstanceFile {
    id: String,
    toolkits: Vec<String>,
    machines: Vec<String>,
    cost: Vec<Vec<serde_json::Value>>,
    workload: Vec<Vec<serde_json::Value>>,
    capacity: Vec<serde_json::Value>,
}

fn json_rational(field: &str, v: &serde_json::Value) -> Result<Rational> {
    match v {
        serde_json::Value::Number(n) => parse_rational(&n.to_string()),
        serde_json::Value::String(s) => parse_rational(s),
        other => Err(Error::input(format!("{field}: expected number, got {other}"))),
    }
}

fn rational_json(r: &Rational) -> serde_json::Value {
    match rational_to_decimal(r) {
        Some(text) => serde_json::Value::Number(text.parse().expect("decimal is a JSON number")),
        None => serde_json::Value::String(r.render()),
    }
}

/// A total choice of machine (by index) for every toolkit.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Assignment {
    pub choice: Vec<usize>,
}

impl Assignment {
    pub fn new(choice: Vec<usize>) -> Self {
        Assignment { choice }
    }

    /// Resolves `(toolkit id, machine id)` pairs; every toolkit must appear
    /// exactly once.
    pub fn from_ids(inst: &Instance, pairs: &[(&str, &str)]) -> Result<Self> {
        let cand = Candidate::from_ids(inst, pairs)?;
        cand.to_assignment()
            .ok_or_else(|| Error::input("assignment is not total over the toolkits"))
    }

    pub fn to_candidate(&self) -> Candidate {
        Candidate {
            machines: self.choice.iter().map(|&m| vec![m]).collect(),
        }
    }
}

/// A possibly partial or multi-valued toolkit → machines relation, as decoded
/// from an arbitrary bitstring.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Candidate {
    /// Sorted machine indices per toolkit.
    pub machines: Vec<Vec<usize>>,
}

impl Candidate {
    pub fn from_ids(inst: &Instance, pairs: &[(&str, &str)]) -> Result<Self> {
        let mut machines = vec![Vec::new(); inst.n_toolkits()];
        for &(t, m) in pairs {
            let ti = inst
                .toolkit_index(t)
                .ok_or_else(|| Error::input(format!("unknown toolkit {t:?}")))?;
            let mi = inst
                .machine_index(m)
                .ok_or_else(|| Error::input(format!("unknown machine {m:?}")))?;
            if !machines[ti].contains(&mi) {
                machines[ti].push(mi);
            }
        }
        machines.iter_mut().for_each(|v| v.sort_unstable());
        Ok(Candidate { machines })
    }

    /// `Some` iff every toolkit has exactly one machine.
    pub fn to_assignment(&self) -> Option<Assignment> {
        self.machines
            .iter()
            .map(|ms| (ms.len() == 1).then(|| ms[0]))
            .collect::<Option<Vec<_>>>()
            .map(Assignment::new)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FeasibilityReport {
    pub feasible: bool,
    /// machine index → overload in hours.
    pub capacity_violations: BTreeMap<usize, Rational>,
    /// toolkit index → number of machines it is assigned to (≠ 1).
    pub assignment_violations: BTreeMap<usize, usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    pub assignment: Assignment,
    pub cost: Rational,
    pub optimal: bool,
}

/// Floors capacities and ceils workloads; costs are untouched.
pub fn sanitize_instance(raw: &Instance) -> Instance {
    Instance {
        capacity: raw.capacity.iter().map(|h| h.floor()).collect(),
        workload: raw
            .workload
            .iter()
            .map(|row| row.iter().map(|w| w.ceil()).collect())
            .collect(),
        ..raw.clone()
    }
}

pub fn validate_assignment(inst: &Instance, cand: &Candidate) -> Result<FeasibilityReport> {
    if cand.machines.len() != inst.n_toolkits() {
        return Err(Error::input(format!(
            "candidate covers {} toolkits, instance has {}",
            cand.machines.len(),
            inst.n_toolkits()
        )));
    }
    let mut load = vec![Rational::zero(); inst.n_machines()];
    let mut assignment_violations = BTreeMap::new();
    for (t, ms) in cand.machines.iter().enumerate() {
        if ms.len() != 1 {
            assignment_violations.insert(t, ms.len());
        }
        for &m in ms {
            if m >= inst.n_machines() {
                return Err(Error::input(format!("machine index {m} out of range")));
            }
            load[m] += &inst.workload[t][m];
        }
    }
    let capacity_violations: BTreeMap<usize, Rational> = load
        .into_iter()
        .zip(&inst.capacity)
        .enumerate()
        .filter_map(|(m, (l, h))| (&l > h).then(|| (m, l - h)))
        .collect();
    Ok(FeasibilityReport {
        feasible: capacity_violations.is_empty() && assignment_violations.is_empty(),
        capacity_violations,
        assignment_violations,
    })
}

pub fn solution_cost(inst: &Instance, a: &Assignment) -> Result<Rational> {
    check_assignment(inst, a)?;
    Ok(a.choice
        .iter()
        .enumerate()
        .map(|(t, &m)| &inst.cost[t][m])
        .sum())
}

fn check_assignment(inst: &Instance, a: &Assignment) -> Result<()> {
    if a.choice.len() != inst.n_toolkits() {
        return Err(Error::input(format!(
            "partial assignment: {} of {} toolkits",
            a.choice.len(),
            inst.n_toolkits()
        )));
    }
    if let Some(&m) = a.choice.iter().find(|&&m| m >= inst.n_machines()) {
        return Err(Error::input(format!("machine index {m} out of range")));
    }
    Ok(())
}

/// Integer images of an instance's tables over shared denominators, used by
/// the hot loops (enumeration, metric evaluation).
#[derive(Clone, Debug)]
pub struct IntegerTables {
    pub cost: Vec<Vec<i128>>,
    pub cost_denominator: Rational,
    pub workload: Vec<Vec<i128>>,
    pub capacity: Vec<i128>,
}

impl IntegerTables {
    pub fn new(inst: &Instance) -> Result<Self> {
        let (nt, nm) = (inst.n_toolkits(), inst.n_machines());
        let costs: Vec<Rational> = inst.cost.iter().flatten().cloned().collect();
        let cost = Rational::integer_form(&costs).ok_or(Error::Overflow("cost table"))?;
        let mut resources: Vec<Rational> = inst.workload.iter().flatten().cloned().collect();
        resources.extend(inst.capacity.iter().cloned());
        let res = Rational::integer_form(&resources).ok_or(Error::Overflow("workload table"))?;
        Ok(IntegerTables {
            cost: cost.numerators.chunks(nm).map(<[i128]>::to_vec).collect(),
            cost_denominator: cost.denominator,
            workload: res.numerators[..nt * nm].chunks(nm).map(<[i128]>::to_vec).collect(),
            capacity: res.numerators[nt * nm..].to_vec(),
        })
    }

    /// Capacity-feasible total assignment (exactly-once holds by type).
    pub fn fits(&self, a: &Assignment) -> bool {
        let mut load = vec![0i128; self.capacity.len()];
        for (t, &m) in a.choice.iter().enumerate() {
            load[m] += self.workload[t][m];
        }
        load.iter().zip(&self.capacity).all(|(l, h)| l <= h)
    }

    pub fn cost_numerator(&self, a: &Assignment) -> i128 {
        a.choice.iter().enumerate().map(|(t, &m)| self.cost[t][m]).sum()
    }

    pub fn cost_of(&self, a: &Assignment) -> Rational {
        Rational::from_int(self.cost_numerator(a)) / &self.cost_denominator
    }
}

/// Minimum-cost feasible assignment by exhaustive depth-first enumeration.
///
/// Branches are visited in lexicographic order of the machine vector and the
/// incumbent is only replaced on a strict improvement, so among equal-cost
/// optima the lexicographically smallest is returned. Capacity and cost-bound
/// pruning never discard a candidate that could replace the incumbent.
pub fn exact_solve(inst: &Instance) -> Result<Solution> {
    let (nt, nm) = (inst.n_toolkits(), inst.n_machines());
    let space = (nm as u64)
        .checked_pow(nt as u32)
        .filter(|&s| s <= EXACT_SOLVE_LIMIT);
    let Some(_) = space else {
        return Err(Error::TooLarge {
            what: "assignment space",
            size: (nm as u64).checked_pow(nt as u32).unwrap_or(u64::MAX),
            limit: EXACT_SOLVE_LIMIT,
        });
    };
    let tables = IntegerTables::new(inst)?;
    // Cheapest completion of toolkits t.. ignoring capacity.
    let mut rest = vec![0i128; nt + 1];
    for t in (0..nt).rev() {
        rest[t] = rest[t + 1] + tables.cost[t].iter().copied().min().unwrap_or(0);
    }
    let mut search = Search {
        tables: &tables,
        rest,
        load: vec![0; nm],
        current: vec![0; nt],
        best: None,
    };
    search.descend(0, 0);
    let (cost, choice) = search.best.ok_or(Error::Infeasible)?;
    Ok(Solution {
        assignment: Assignment::new(choice),
        cost: Rational::from_int(cost) / &tables.cost_denominator,
        optimal: true,
    })
}

struct Search<'a> {
    tables: &'a IntegerTables,
    rest: Vec<i128>,
    load: Vec<i128>,
    current: Vec<usize>,
    best: Option<(i128, Vec<usize>)>,
}

impl Search<'_> {
    fn descend(&mut self, t: usize, cost: i128) {
        if t == self.current.len() {
            if self.best.as_ref().is_none_or(|(b, _)| cost < *b) {
                self.best = Some((cost, self.current.clone()));
            }
            return;
        }
        for m in 0..self.load.len() {
            let w = self.tables.workload[t][m];
            if self.load[m] + w > self.tables.capacity[m] {
                continue;
            }
            let next = cost + self.tables.cost[t][m];
            if let Some((b, _)) = &self.best {
                if next + self.rest[t + 1] >= *b {
                    continue;
                }
            }
            self.load[m] += w;
            self.current[t] = m;
            self.descend(t + 1, next);
            self.load[m] -= w;
        }
    }
}

/// Seeded synthetic instance with Table-I-like shape.
///
/// Capacities are drawn from `[2^(bits-1), 2^bits - 1]` so each machine needs
/// exactly `bits` slack variables. Costs are log-uniform integers in
/// `[10, ~3200]` with at least a 100x spread. Workloads are drawn so that the
/// expected planned load sits below capacity; an attempt is kept only when a
/// cheapest-fit greedy pass finds a feasible assignment.
pub fn generate_instance(
    n_toolkits: usize,
    n_machines: usize,
    capacity_bits: u32,
    seed: u64,
) -> Result<Instance> {
    if n_toolkits == 0 || n_machines == 0 || capacity_bits == 0 {
        return Err(Error::input("toolkits, machines and capacity bits must be >= 1"));
    }
    if capacity_bits > 40 {
        return Err(Error::input("capacity bits above 40 are not supported"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..GENERATOR_ATTEMPTS {
        let lo = 1i64 << (capacity_bits - 1);
        let hi = (1i64 << capacity_bits) - 1;
        let capacity: Vec<i64> = (0..n_machines).map(|_| rng.gen_range(lo..=hi)).collect();

        let mut cost: Vec<Vec<i64>> = (0..n_toolkits)
            .map(|_| {
                (0..n_machines)
                    .map(|_| 10f64.powf(1.0 + 2.5 * rng.gen::<f64>()).round() as i64)
                    .collect()
            })
            .collect();
        if n_toolkits * n_machines > 1 {
            let min = cost.iter().flatten().copied().min().unwrap_or(10);
            let max = cost.iter().flatten().copied().max().unwrap_or(10);
            if max < 100 * min {
                let (t, m) = loop {
                    let t = rng.gen_range(0..n_toolkits);
                    let m = rng.gen_range(0..n_machines);
                    if cost[t][m] != min {
                        break (t, m);
                    }
                };
                cost[t][m] = 100 * min;
            }
        }

        let workload: Vec<Vec<i64>> = (0..n_toolkits)
            .map(|_| {
                capacity
                    .iter()
                    .map(|&h| {
                        let cap = (3 * h * n_machines as i64 / (2 * n_toolkits as i64)).clamp(1, h);
                        rng.gen_range(1..=cap)
                    })
                    .collect()
            })
            .collect();

        if greedy_fits(&cost, &workload, &capacity) {
            let id = format!("gen-t{n_toolkits}-m{n_machines}-b{capacity_bits}-s{seed}");
            return Instance::from_integers(id, &cost, &workload, &capacity);
        }
    }
    Err(Error::GenerationFailed {
        attempts: GENERATOR_ATTEMPTS,
    })
}

/// Each toolkit in order goes to the cheapest machine with room left.
fn greedy_fits(cost: &[Vec<i64>], workload: &[Vec<i64>], capacity: &[i64]) -> bool {
    let mut free = capacity.to_vec();
    for (t, row) in cost.iter().enumerate() {
        let pick = (0..free.len())
            .filter(|&m| workload[t][m] <= free[m])
            .min_by_key(|&m| (row[m], m));
        match pick {
            Some(m) => free[m] -= workload[t][m],
            None => return false,
        }
    }
    true
}

/// Assignment whose machine vector is the base-`nm` digits of `code`, most
/// significant digit first (so numeric order is lexicographic order).
pub fn decode_mixed_radix(mut code: u64, nt: usize, nm: usize) -> Assignment {
    let mut choice = vec![0; nt];
    for slot in choice.iter_mut().rev() {
        *slot = (code % nm as u64) as usize;
        code /= nm as u64;
    }
    Assignment::new(choice)
}

/// Instances shipped with the crate: six two-machine instances of 22 to 60
/// QUBO variables and a 16-variable one small enough for full statevector
/// runs, as `(name, JSON)`.
pub const BUNDLED: [(&str, &str); 7] = [
    ("t03-m2-q16", include_str!("../data/instances/t03-m2-q16.json")),
    ("t03-m2-q22", include_str!("../data/instances/t03-m2-q22.json")),
    ("t09-m2-q36", include_str!("../data/instances/t09-m2-q36.json")),
    ("t13-m2-q46", include_str!("../data/instances/t13-m2-q46.json")),
    ("t16-m2-q54", include_str!("../data/instances/t16-m2-q54.json")),
    ("t18-m2-q58", include_str!("../data/instances/t18-m2-q58.json")),
    ("t19-m2-q60", include_str!("../data/instances/t19-m2-q60.json")),
];

pub fn bundled_instance(name: &str) -> Result<Instance> {
    let (_, json) = BUNDLED
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| Error::input(format!("no bundled instance {name:?}")))?;
    Instance::from_json_str(json)
}
