//! Deterministic information bottleneck over groupings of a model's cells.
//!
//! Maximize `I(U;Y)` subject to `H(U) <= B` where `U` is a grouping of the
//! positive-probability cells. Two solvers: exhaustive set-partition
//! enumeration for small alphabets, and agglomerative greedy merging.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::infocalc::{cell_joint, mutual_information, plogp};
use crate::io::write_csv_atomic;
use crate::model::{CellIndex, HistogramModel};
use crate::units::InfoBits;

/// Largest alphabet the exhaustive solver accepts (Bell(10) = 115975).
pub const EXHAUSTIVE_LIMIT: usize = 10;
/// Slack on the entropy budget.
pub const FEASIBILITY_TOL: f64 = 1e-9;
const TIE_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    Greedy,
    Exhaustive,
}

impl fmt::Display for Solver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Solver::Greedy => "greedy",
            Solver::Exhaustive => "exhaustive",
        })
    }
}

impl std::str::FromStr for Solver {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "greedy" => Ok(Solver::Greedy),
            "exhaustive" => Ok(Solver::Exhaustive),
            other => Err(Error::InvalidConfig(format!("unknown solver {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IBPoint {
    pub b_bits: f64,
    pub h_u: InfoBits,
    pub i_uy: InfoBits,
    /// `I(X;Y) - I(U;Y)`.
    pub loss: InfoBits,
    /// Group label (0-based, in order of first cell) for every support cell.
    pub grouping: BTreeMap<CellIndex, usize>,
}

impl IBPoint {
    pub fn num_groups(&self) -> usize {
        self.grouping.values().max().map_or(0, |g| g + 1)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IBCurve {
    pub solver: Solver,
    pub points: Vec<IBPoint>,
}

/// Support cells and their class masses, the common input of both solvers.
struct Alphabet {
    cells: Vec<CellIndex>,
    mass: Vec<Vec<f64>>,
    py: Vec<f64>,
    ix: f64,
}

impl Alphabet {
    fn new(model: &HistogramModel) -> Self {
        let joint = cell_joint(model);
        Alphabet {
            cells: joint.symbols().to_vec(),
            mass: joint.rows().map(|(_, r)| r.to_vec()).collect(),
            py: joint.marginal_y(),
            ix: mutual_information(model).bits(),
        }
    }

    /// `(h, i)` contribution of a group with class masses `q`.
    fn contribution(&self, q: &[f64]) -> (f64, f64) {
        let pu: f64 = q.iter().sum();
        let mut i = 0.0;
        for (&v, &p) in q.iter().zip(&self.py) {
            if v > 0.0 {
                i += v * (v / (pu * p)).log2();
            }
        }
        (plogp(pu), i)
    }

    fn point(&self, b: f64, labels: &[usize], h: f64, i: f64) -> IBPoint {
        IBPoint {
            b_bits: b,
            h_u: InfoBits(h),
            i_uy: InfoBits(i),
            loss: InfoBits(self.ix - i),
            grouping: self.cells.iter().cloned().zip(labels.iter().copied()).collect(),
        }
    }
}

fn check_budget(b: f64) -> Result<()> {
    if !(b >= 0.0) {
        return Err(Error::InvalidConfig(format!("budget {b} must be a nonnegative number")));
    }
    Ok(())
}

/// Globally optimal groupings for several budgets in one enumeration.
fn exhaustive_many(model: &HistogramModel, budgets: &[f64]) -> Result<Vec<IBPoint>> {
    for &b in budgets {
        check_budget(b)?;
    }
    let a = Alphabet::new(model);
    let n = a.cells.len();
    if n > EXHAUSTIVE_LIMIT {
        return Err(Error::TooLarge {
            cells: n,
            limit: EXHAUSTIVE_LIMIT,
        });
    }
    let m = a.py.len();
    // best (i, groups, labels) per budget; enumeration is in lexicographic
    // order of restricted growth strings, so the first of equals is kept
    let mut best: Vec<Option<(f64, f64, usize, Vec<usize>)>> = vec![None; budgets.len()];
    let mut rgs = vec![0usize; n];
    let mut maxes = vec![0usize; n];
    let mut group_mass = vec![vec![0.0; m]; n];
    loop {
        let k = rgs.iter().max().map_or(0, |g| g + 1);
        for g in group_mass.iter_mut().take(k) {
            g.iter_mut().for_each(|v| *v = 0.0);
        }
        for (c, &g) in rgs.iter().enumerate() {
            for (acc, v) in group_mass[g].iter_mut().zip(&a.mass[c]) {
                *acc += v;
            }
        }
        let (mut h, mut i) = (0.0, 0.0);
        for g in group_mass.iter().take(k) {
            let (dh, di) = a.contribution(g);
            h += dh;
            i += di;
        }
        for (slot, &b) in best.iter_mut().zip(budgets) {
            if h > b + FEASIBILITY_TOL {
                continue;
            }
            let better = match slot {
                None => true,
                Some((bi, _, bk, _)) => i > *bi + TIE_TOL || ((i - *bi).abs() <= TIE_TOL && k < *bk),
            };
            if better {
                *slot = Some((i, h, k, rgs.clone()));
            }
        }
        // next restricted growth string
        let mut pos = n;
        loop {
            if pos <= 1 {
                return Ok(best
                    .into_iter()
                    .zip(budgets)
                    .map(|(s, &b)| {
                        let (i, h, _, labels) = s.expect("the single group is always feasible");
                        a.point(b, &labels, h, i)
                    })
                    .collect());
            }
            pos -= 1;
            if rgs[pos] <= maxes[pos - 1] {
                rgs[pos] += 1;
                maxes[pos] = maxes[pos - 1].max(rgs[pos]);
                for j in pos + 1..n {
                    rgs[j] = 0;
                    maxes[j] = maxes[pos];
                }
                break;
            }
        }
    }
}

pub fn ib_exhaustive(model: &HistogramModel, b: f64) -> Result<IBPoint> {
    Ok(exhaustive_many(model, &[b])?.remove(0))
}

/// One state of the agglomerative path.
#[derive(Clone, Debug, PartialEq)]
pub struct GreedyStep {
    pub h_u: f64,
    pub i_uy: f64,
    /// `I(U;Y)` change of the merge that produced this state (0 for the start).
    pub delta_i: f64,
    pub labels: Vec<usize>,
}

/// The full agglomerative path from the cell partition down to one group.
///
/// Each step merges the pair with the largest `dI` (smallest information
/// loss); ties go to the smaller `dH`, then to the lowest label pair.
pub fn greedy_path(model: &HistogramModel) -> Vec<GreedyStep> {
    let a = Alphabet::new(model);
    greedy_path_on(&a)
}

fn greedy_path_on(a: &Alphabet) -> Vec<GreedyStep> {
    let n = a.cells.len();
    let mut members: Vec<Vec<usize>> = (0..n).map(|c| vec![c]).collect();
    let mut mass = a.mass.clone();
    let mut contrib: Vec<(f64, f64)> = mass.iter().map(|q| a.contribution(q)).collect();
    let labels_of = |members: &[Vec<usize>]| {
        let mut l = vec![0; n];
        for (g, cs) in members.iter().enumerate() {
            for &c in cs {
                l[c] = g;
            }
        }
        l
    };
    let total = |contrib: &[(f64, f64)]| {
        contrib
            .iter()
            .fold((0.0, 0.0), |(h, i), (dh, di)| (h + dh, i + di))
    };
    let (h0, i0) = total(&contrib);
    let mut path = vec![GreedyStep {
        h_u: h0,
        i_uy: i0,
        delta_i: 0.0,
        labels: labels_of(&members),
    }];
    while members.len() > 1 {
        let mut best: Option<(f64, f64, usize, usize, Vec<f64>, (f64, f64))> = None;
        for x in 0..members.len() {
            for y in x + 1..members.len() {
                let q: Vec<f64> = mass[x].iter().zip(&mass[y]).map(|(u, v)| u + v).collect();
                let c = a.contribution(&q);
                let di = c.1 - contrib[x].1 - contrib[y].1;
                let dh = c.0 - contrib[x].0 - contrib[y].0;
                let better = match &best {
                    None => true,
                    Some((bi, bh, ..)) => di > bi + TIE_TOL || ((di - bi).abs() <= TIE_TOL && dh < bh - TIE_TOL),
                };
                if better {
                    best = Some((di, dh, x, y, q, c));
                }
            }
        }
        let (di, _, x, y, q, c) = best.expect("at least one pair");
        let moved = members.remove(y);
        members[x].extend(moved);
        members[x].sort_unstable();
        mass.remove(y);
        mass[x] = q;
        contrib.remove(y);
        contrib[x] = c;
        let (h, i) = total(&contrib);
        path.push(GreedyStep {
            h_u: h,
            i_uy: i,
            delta_i: di,
            labels: labels_of(&members),
        });
    }
    path
}

fn greedy_pick(a: &Alphabet, path: &[GreedyStep], b: f64) -> IBPoint {
    let step = path
        .iter()
        .find(|s| s.h_u <= b + FEASIBILITY_TOL)
        .unwrap_or_else(|| path.last().expect("non-empty path"));
    a.point(b, &step.labels, step.h_u, step.i_uy)
}

pub fn ib_greedy(model: &HistogramModel, b: f64) -> Result<IBPoint> {
    check_budget(b)?;
    let a = Alphabet::new(model);
    let path = greedy_path_on(&a);
    Ok(greedy_pick(&a, &path, b))
}

/// One point per budget, sorted by budget.
pub fn ib_curve(model: &HistogramModel, budgets: &[f64], solver: Solver) -> Result<IBCurve> {
    if budgets.is_empty() {
        return Err(Error::InvalidConfig("the budget list is empty".into()));
    }
    let mut bs = budgets.to_vec();
    bs.sort_by(f64::total_cmp);
    let points = match solver {
        Solver::Exhaustive => exhaustive_many(model, &bs)?,
        Solver::Greedy => {
            for &b in &bs {
                check_budget(b)?;
            }
            let a = Alphabet::new(model);
            let path = greedy_path_on(&a);
            bs.iter().map(|&b| greedy_pick(&a, &path, b)).collect()
        }
    };
    Ok(IBCurve { solver, points })
}

/// `H(I)`, the entropy of the cell index: the budget at which the full
/// cell partition becomes feasible.
pub fn cell_entropy(model: &HistogramModel) -> InfoBits {
    cell_joint(model).entropy_u()
}

/// `count + 1` budgets evenly spaced on `[0, H(I)]`.
pub fn budget_grid(model: &HistogramModel, count: usize) -> Vec<f64> {
    let h = cell_entropy(model).bits();
    let count = count.max(1);
    (0..=count).map(|k| h * k as f64 / count as f64).collect()
}

pub const CSV_HEADER: [&str; 7] = [
    "B_bits",
    "H_U_bits",
    "I_UY_bits",
    "loss_bits",
    "solver",
    "groups",
    "model",
];

/// Writes `(model id, curve)` pairs to one CSV.
pub fn write_curves_csv(path: &Path, curves: &[(String, IBCurve)]) -> Result<()> {
    write_csv_atomic(path, |w| {
        w.write_record(CSV_HEADER)?;
        for (id, curve) in curves {
            for p in &curve.points {
                w.write_record([
                    p.b_bits.to_string(),
                    p.h_u.bits().to_string(),
                    p.i_uy.bits().to_string(),
                    p.loss.bits().to_string(),
                    curve.solver.to_string(),
                    p.num_groups().to_string(),
                    id.clone(),
                ])?;
            }
        }
        Ok(())
    })
}
