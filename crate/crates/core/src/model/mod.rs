//! Histogram-structured joint models `mu_{X,Y}`.
//!
//! `X | Y = y` has density `sum_i p_{i|y} 1_{A_i}(x) / vol(A_i)` on the grid
//! cells `A_i`, optionally observed through an orthonormal rotation
//! `x = U z`. The posterior `mu_{Y|X}` is constant on every cell, which makes
//! the cell quantizer information sufficient.

mod grid;
mod joint;
pub mod presets;
mod rotation;
pub(crate) mod sample;
mod spec;

use std::collections::{BTreeMap, BTreeSet};

pub use grid::{BoundaryGrid, CellIndex};
pub(crate) use grid::{locate_on_axis, product_indices};
pub use joint::{DiscreteJoint, DERIVED_TOL, INPUT_TOL};
pub use rotation::{Rotation, ORTHONORMAL_TOL};
pub use sample::Dataset;
pub use spec::{CellEntry, ModelSpec, NoiseDimSpec, NoiseSpecJson};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct HistogramModel {
    grid: BoundaryGrid,
    joint: DiscreteJoint,
    rotation: Option<Rotation>,
    masked: BTreeSet<usize>,
}

/// One Y-independent noise coordinate: its boundary array and cell pmf.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseDim {
    pub boundaries: Vec<f64>,
    pub pmf: Vec<f64>,
}

impl NoiseDim {
    /// Uniform on `[0, 1)`, a single cell.
    pub fn unit() -> Self {
        NoiseDim {
            boundaries: vec![0.0, 1.0],
            pmf: vec![1.0],
        }
    }
}

/// Noise coordinates and the 0-based positions they take in the output.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseSpec {
    pub dims: Vec<NoiseDim>,
    pub positions: Vec<usize>,
}

impl NoiseSpec {
    /// `positions.len()` unit-uniform coordinates.
    pub fn unit(positions: Vec<usize>) -> Self {
        NoiseSpec {
            dims: vec![NoiseDim::unit(); positions.len()],
            positions,
        }
    }
}

impl HistogramModel {
    pub fn new(grid: BoundaryGrid, joint: DiscreteJoint) -> Result<Self> {
        if grid.counts() != joint.counts() {
            return Err(Error::ShapeMismatch(format!(
                "grid has counts {:?} but the joint is indexed by {:?}",
                grid.counts(),
                joint.counts()
            )));
        }
        Ok(HistogramModel {
            grid,
            joint,
            rotation: None,
            masked: BTreeSet::new(),
        })
    }

    /// Build from boundary arrays, a prior, and the nonzero `p_{i|y}` entries
    /// as `(cell, class, p)` triples (0-based).
    pub fn from_entries(
        axes: Vec<Vec<f64>>,
        prior: Vec<f64>,
        entries: &[(CellIndex, usize, f64)],
    ) -> Result<Self> {
        let grid = BoundaryGrid::new(axes)?;
        let m = prior.len();
        let mut cells: BTreeMap<CellIndex, Vec<f64>> = BTreeMap::new();
        for (idx, y, p) in entries {
            if *y >= m {
                return Err(Error::IndexOutOfRange(format!("class {y} with {m} classes")));
            }
            if !grid.contains_index(idx) {
                return Err(Error::IndexOutOfRange(format!(
                    "cell {idx:?} outside grid with counts {:?}",
                    grid.counts()
                )));
            }
            let row = cells.entry(idx.clone()).or_insert_with(|| vec![0.0; m]);
            if row[*y] != 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "duplicate entry for cell {idx:?}, class {y}"
                )));
            }
            row[*y] = *p;
        }
        let joint = DiscreteJoint::new(grid.counts(), prior, cells, INPUT_TOL)?;
        HistogramModel::new(grid, joint)
    }

    pub fn grid(&self) -> &BoundaryGrid {
        &self.grid
    }

    pub fn joint(&self) -> &DiscreteJoint {
        &self.joint
    }

    pub fn rotation(&self) -> Option<&Rotation> {
        self.rotation.as_ref()
    }

    /// Coordinates that have been masked (0-based).
    pub fn masked(&self) -> &BTreeSet<usize> {
        &self.masked
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn classes(&self) -> usize {
        self.joint.classes()
    }

    pub fn prior(&self) -> &[f64] {
        self.joint.prior()
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Grid coordinates of an observation (`U^T x`, or `x` when unrotated).
    pub fn to_latent(&self, x: &[f64]) -> Vec<f64> {
        match &self.rotation {
            Some(u) => u.apply_transpose(x),
            None => x.to_vec(),
        }
    }

    /// Latent cell of an observation, `None` outside the support box.
    pub fn cell_of(&self, x: &[f64]) -> Result<Option<CellIndex>> {
        self.check_dim(x)?;
        Ok(self.grid.locate(&self.to_latent(x)))
    }

    /// Class-conditional density `f_{X|Y}(x|y)`.
    pub fn pdf(&self, x: &[f64], y: usize) -> Result<f64> {
        if y >= self.classes() {
            return Err(Error::IndexOutOfRange(format!("class {y}")));
        }
        Ok(match self.cell_of(x)? {
            Some(idx) => self.joint.conditional(&idx, y) / self.grid.cell_volume(&idx),
            None => 0.0,
        })
    }

    /// `mu_{Y|X}(. | x)`; constant on each cell.
    pub fn true_posterior(&self, x: &[f64]) -> Result<Vec<f64>> {
        let idx = self.cell_of(x)?.ok_or(Error::OutsideSupport)?;
        self.cell_posterior(&idx)
    }

    pub fn cell_posterior(&self, idx: &[usize]) -> Result<Vec<f64>> {
        let mass = self.joint.cell_mass(idx);
        let total: f64 = mass.iter().sum();
        if total <= 0.0 {
            return Err(Error::OutsideSupport);
        }
        Ok(mass.into_iter().map(|v| v / total).collect())
    }

    /// Replace each coordinate in `coords` (0-based) by an independent copy
    /// of its pooled marginal, removing every dependence on `Y` and on the
    /// other coordinates.
    pub fn mask(&self, coords: &BTreeSet<usize>) -> Result<HistogramModel> {
        let d = self.dim();
        if let Some(&bad) = coords.iter().find(|&&k| k >= d) {
            return Err(Error::IndexOutOfRange(format!("mask coordinate {bad} with d = {d}")));
        }
        if coords.is_empty() {
            return Ok(self.clone());
        }
        let m = self.classes();
        let counts = self.grid.counts();
        let prior = self.prior();

        let mut marginals: BTreeMap<usize, Vec<f64>> = coords
            .iter()
            .map(|&k| (k, vec![0.0; counts[k]]))
            .collect();
        // p_{(s|y)} over the unmasked coordinates, masked slots zeroed.
        let mut kept: BTreeMap<CellIndex, Vec<f64>> = BTreeMap::new();
        for (idx, probs) in self.joint.cells() {
            let w: f64 = probs.iter().zip(prior).map(|(p, q)| p * q).sum();
            for (&k, marg) in marginals.iter_mut() {
                marg[idx[k]] += w;
            }
            let mut key = idx.clone();
            for &k in coords {
                key[k] = 0;
            }
            let row = kept.entry(key).or_insert_with(|| vec![0.0; m]);
            for (r, p) in row.iter_mut().zip(probs) {
                *r += p;
            }
        }

        let masked_axes: Vec<usize> = coords.iter().copied().collect();
        let mut cells: BTreeMap<CellIndex, Vec<f64>> = BTreeMap::new();
        let combos: Vec<Vec<usize>> =
            product_indices(masked_axes.iter().map(|&k| counts[k]).collect()).collect();
        for (key, probs) in &kept {
            for combo in &combos {
                let mut w = 1.0;
                let mut idx = key.clone();
                for (&k, &v) in masked_axes.iter().zip(combo) {
                    w *= marginals[&k][v];
                    idx[k] = v;
                }
                if w > 0.0 {
                    cells.insert(idx, probs.iter().map(|p| p * w).collect());
                }
            }
        }
        let joint = DiscreteJoint::new(counts, prior.to_vec(), cells, DERIVED_TOL)?;
        let mut masked = self.masked.clone();
        masked.extend(coords.iter().copied());
        Ok(HistogramModel {
            grid: self.grid.clone(),
            joint,
            rotation: self.rotation.clone(),
            masked,
        })
    }

    /// Insert `Y`-independent noise coordinates at the given output positions.
    pub fn sparsify(&self, noise: &NoiseSpec) -> Result<HistogramModel> {
        let nu = noise.positions.len();
        if nu == 0 {
            return Err(Error::InvalidCount("at least one noise coordinate is required".into()));
        }
        if noise.dims.len() != nu {
            return Err(Error::ShapeMismatch(format!(
                "{} noise dims for {nu} positions",
                noise.dims.len()
            )));
        }
        if self.rotation.is_some() {
            return Err(Error::InvalidConfig(
                "sparsify the latent model before rotating it".into(),
            ));
        }
        let total = self.dim() + nu;
        let mut is_noise = vec![None; total];
        for (l, &p) in noise.positions.iter().enumerate() {
            if p >= total {
                return Err(Error::PositionConflict(format!(
                    "position {p} outside 0..{total}"
                )));
            }
            if is_noise[p].is_some() {
                return Err(Error::PositionConflict(format!("position {p} used twice")));
            }
            is_noise[p] = Some(l);
        }
        let mut noise_axes = Vec::with_capacity(nu);
        for (l, nd) in noise.dims.iter().enumerate() {
            let g = BoundaryGrid::new(vec![nd.boundaries.clone()])
                .map_err(|_| Error::NonMonotoneBoundaries { axis: noise.positions[l] })?;
            if nd.pmf.len() != g.counts()[0] {
                return Err(Error::ShapeMismatch(format!(
                    "noise coordinate {l}: pmf has {} entries for {} cells",
                    nd.pmf.len(),
                    g.counts()[0]
                )));
            }
            if let Some(&v) = nd.pmf.iter().find(|&&v| !(v >= 0.0)) {
                return Err(Error::NegativeProbability {
                    what: format!("noise coordinate {l}"),
                    value: v,
                });
            }
            let s: f64 = nd.pmf.iter().sum();
            if (s - 1.0).abs() > INPUT_TOL {
                return Err(Error::ProbabilityNotNormalized {
                    what: format!("noise coordinate {l} pmf"),
                    sum: s,
                });
            }
            noise_axes.push(nd.boundaries.clone());
        }

        // Original coordinate k lands at the k-th non-noise position.
        let orig_pos: Vec<usize> = (0..total).filter(|p| is_noise[*p].is_none()).collect();
        let mut axes = vec![Vec::new(); total];
        for (k, &p) in orig_pos.iter().enumerate() {
            axes[p] = self.grid.axis(k).to_vec();
        }
        for (l, &p) in noise.positions.iter().enumerate() {
            axes[p] = noise_axes[l].clone();
        }
        let grid = BoundaryGrid::new(axes)?;

        let noise_combos: Vec<(Vec<usize>, f64)> =
            product_indices(noise.dims.iter().map(|d| d.pmf.len()).collect())
                .map(|c| {
                    let w = c.iter().zip(&noise.dims).map(|(&v, d)| d.pmf[v]).product();
                    (c, w)
                })
                .filter(|(_, w)| *w > 0.0)
                .collect();
        let mut cells = BTreeMap::new();
        for (idx, probs) in self.joint.cells() {
            for (combo, w) in &noise_combos {
                let mut out = vec![0usize; total];
                for (k, &p) in orig_pos.iter().enumerate() {
                    out[p] = idx[k];
                }
                for (l, &p) in noise.positions.iter().enumerate() {
                    out[p] = combo[l];
                }
                cells.insert(out, probs.iter().map(|v| v * w).collect());
            }
        }
        let joint = DiscreteJoint::new(grid.counts(), self.prior().to_vec(), cells, DERIVED_TOL)?;
        let masked = self.masked.iter().map(|&k| orig_pos[k]).collect();
        Ok(HistogramModel {
            grid,
            joint,
            rotation: None,
            masked,
        })
    }

    /// Observe the model through `u`: samples become `u * x_old`.
    pub fn rotate(&self, u: &Rotation) -> Result<HistogramModel> {
        if u.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: u.dim(),
            });
        }
        let dev = u.orthonormality_error();
        if !(dev <= ORTHONORMAL_TOL) {
            return Err(Error::NotOrthonormal { deviation: dev });
        }
        let combined = match &self.rotation {
            Some(r) => u.compose(r),
            None => u.clone(),
        };
        let mut out = self.clone();
        out.rotation = if combined.is_identity(1e-15) {
            None
        } else {
            Some(combined)
        };
        Ok(out)
    }

    /// The law of `(X_j, Y)` for strictly increasing coordinates `j`, as a
    /// model on the selected axes.
    pub fn marginal(&self, coords: &[usize]) -> Result<HistogramModel> {
        let d = self.dim();
        if coords.is_empty()
            || coords.windows(2).any(|w| w[0] >= w[1])
            || coords.iter().any(|&k| k >= d)
        {
            return Err(Error::InvalidCoordinates(format!(
                "{coords:?} must be non-empty and strictly increasing within 0..{d}"
            )));
        }
        if self.rotation.is_some() {
            return Err(Error::NotExactlyComputable(
                "coordinate marginal of a rotated model".into(),
            ));
        }
        let m = self.classes();
        let mut cells: BTreeMap<CellIndex, Vec<f64>> = BTreeMap::new();
        for (idx, probs) in self.joint.cells() {
            let key: CellIndex = coords.iter().map(|&k| idx[k]).collect();
            let row = cells.entry(key).or_insert_with(|| vec![0.0; m]);
            for (r, p) in row.iter_mut().zip(probs) {
                *r += p;
            }
        }
        let grid = BoundaryGrid::new(coords.iter().map(|&k| self.grid.axis(k).to_vec()).collect())?;
        let joint = DiscreteJoint::new(grid.counts(), self.prior().to_vec(), cells, DERIVED_TOL)?;
        let masked = coords
            .iter()
            .enumerate()
            .filter(|(_, k)| self.masked.contains(k))
            .map(|(i, _)| i)
            .collect();
        Ok(HistogramModel {
            grid,
            joint,
            rotation: None,
            masked,
        })
    }

    /// Average `p_{i|y}` over the orbit of `i` under coordinate permutations.
    pub fn symmetrize(&self) -> Result<HistogramModel> {
        if !self.grid.is_homogeneous() {
            return Err(Error::HeterogeneousGrids);
        }
        let m = self.classes();
        let mut orbit_mass: BTreeMap<Vec<usize>, Vec<f64>> = BTreeMap::new();
        for (idx, probs) in self.joint.cells() {
            let mut key = idx.clone();
            key.sort_unstable();
            let row = orbit_mass.entry(key).or_insert_with(|| vec![0.0; m]);
            for (r, p) in row.iter_mut().zip(probs) {
                *r += p;
            }
        }
        let mut cells = BTreeMap::new();
        for (key, mass) in orbit_mass {
            let members = distinct_permutations(&key);
            let n = members.len() as f64;
            for idx in members {
                cells.insert(idx, mass.iter().map(|v| v / n).collect());
            }
        }
        let joint =
            DiscreteJoint::new(self.grid.counts(), self.prior().to_vec(), cells, DERIVED_TOL)?;
        Ok(HistogramModel {
            joint,
            ..self.clone()
        })
    }
}

/// All distinct orderings of a sorted multiset.
pub(crate) fn distinct_permutations(sorted: &[usize]) -> Vec<Vec<usize>> {
    let mut cur = sorted.to_vec();
    let mut out = vec![cur.clone()];
    // next lexicographic permutation
    loop {
        let n = cur.len();
        let Some(i) = (0..n.saturating_sub(1)).rev().find(|&i| cur[i] < cur[i + 1]) else {
            return out;
        };
        let j = (i + 1..n).rev().find(|&j| cur[j] > cur[i]).unwrap();
        cur.swap(i, j);
        cur[i + 1..].reverse();
        out.push(cur.clone());
    }
}
