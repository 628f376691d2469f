use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::grid::CellIndex;

/// Tolerance on user-supplied probability vectors.
pub const INPUT_TOL: f64 = 1e-12;
/// Tolerance on probabilities produced by arithmetic inside the crate.
pub const DERIVED_TOL: f64 = 1e-10;

/// The discrete part of a histogram model: `p_y` and `p_{i|y}`.
///
/// Only cells with positive mass under some class are stored; every other
/// `p_{i|y}` is zero.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteJoint {
    counts: Vec<usize>,
    prior: Vec<f64>,
    cells: BTreeMap<CellIndex, Vec<f64>>,
}

impl DiscreteJoint {
    /// `cells` maps a cell index to its per-class conditional probabilities.
    pub fn new(
        counts: Vec<usize>,
        prior: Vec<f64>,
        cells: BTreeMap<CellIndex, Vec<f64>>,
        tol: f64,
    ) -> Result<Self> {
        let m = prior.len();
        if m == 0 {
            return Err(Error::InvalidConfig("at least one class is required".into()));
        }
        for (y, &p) in prior.iter().enumerate() {
            if !(p >= 0.0) || !p.is_finite() {
                return Err(Error::NegativeProbability {
                    what: format!("prior[{y}]"),
                    value: p,
                });
            }
        }
        let s: f64 = prior.iter().sum();
        if (s - 1.0).abs() > tol {
            return Err(Error::ProbabilityNotNormalized {
                what: "class prior".into(),
                sum: s,
            });
        }
        let mut sums = vec![0.0; m];
        let mut kept = BTreeMap::new();
        for (idx, probs) in cells {
            if idx.len() != counts.len() || idx.iter().zip(&counts).any(|(&i, &n)| i >= n) {
                return Err(Error::IndexOutOfRange(format!(
                    "cell {idx:?} outside grid with counts {counts:?}"
                )));
            }
            if probs.len() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    got: probs.len(),
                });
            }
            for (y, &p) in probs.iter().enumerate() {
                if !(p >= 0.0) || !p.is_finite() {
                    return Err(Error::NegativeProbability {
                        what: format!("p(cell {idx:?} | class {y})"),
                        value: p,
                    });
                }
                sums[y] += p;
            }
            if probs.iter().any(|&p| p > 0.0) {
                kept.insert(idx, probs);
            }
        }
        for (y, &s) in sums.iter().enumerate() {
            if (s - 1.0).abs() > tol {
                return Err(Error::ProbabilityNotNormalized {
                    what: format!("cell pmf of class {y}"),
                    sum: s,
                });
            }
        }
        Ok(DiscreteJoint {
            counts,
            prior,
            cells: kept,
        })
    }

    pub fn classes(&self) -> usize {
        self.prior.len()
    }

    pub fn dim(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    /// `p_{i|y}`; zero for unlisted cells.
    pub fn conditional(&self, idx: &[usize], y: usize) -> f64 {
        self.cells.get(idx).map_or(0.0, |p| p[y])
    }

    /// Cells with positive mass, with their per-class conditionals.
    pub fn cells(&self) -> impl Iterator<Item = (&CellIndex, &[f64])> {
        self.cells.iter().map(|(k, v)| (k, v.as_slice()))
    }

    pub fn num_support_cells(&self) -> usize {
        self.cells.len()
    }

    /// Joint masses `p_y * p_{i|y}` of one cell.
    pub fn cell_mass(&self, idx: &[usize]) -> Vec<f64> {
        match self.cells.get(idx) {
            Some(p) => p.iter().zip(&self.prior).map(|(a, b)| a * b).collect(),
            None => vec![0.0; self.classes()],
        }
    }

    /// The joint table of (cell, class) masses, support cells only.
    pub fn joint_rows(&self) -> Vec<(CellIndex, Vec<f64>)> {
        self.cells
            .iter()
            .map(|(k, p)| (k.clone(), p.iter().zip(&self.prior).map(|(a, b)| a * b).collect()))
            .collect()
    }
}
