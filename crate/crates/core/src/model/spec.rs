//! JSON model specification files.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{HistogramModel, NoiseDim, NoiseSpec, Rotation};

fn one() -> usize {
    1
}

/// A model file.
///
/// Cell indices and class labels are counted from `index_base` (default 1).
/// Coordinate lists (`mask`, `noise.positions`) are 1-based. Transforms are
/// applied in the order noise, mask, rotation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub dims: Vec<Vec<f64>>,
    pub classes: usize,
    pub prior: Vec<f64>,
    pub cells: Vec<CellEntry>,
    #[serde(default = "one")]
    pub index_base: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseSpecJson>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub mask: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation: Option<Vec<Vec<f64>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellEntry {
    pub index: Vec<usize>,
    pub class: usize,
    pub p: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpecJson {
    /// 1-based positions in the output vector.
    pub positions: Vec<usize>,
    /// Per-position noise laws; empty means unit-uniform everywhere.
    #[serde(default)]
    pub dims: Vec<NoiseDimSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseDimSpec {
    pub boundaries: Vec<f64>,
    pub pmf: Vec<f64>,
}

fn one_based(list: &[usize], what: &str) -> Result<Vec<usize>> {
    list.iter()
        .map(|&c| {
            c.checked_sub(1)
                .ok_or_else(|| Error::IndexOutOfRange(format!("{what}: coordinates are 1-based")))
        })
        .collect()
}

impl ModelSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn build(&self) -> Result<HistogramModel> {
        if self.prior.len() != self.classes {
            return Err(Error::DimensionMismatch {
                expected: self.classes,
                got: self.prior.len(),
            });
        }
        let base = self.index_base;
        let mut entries = Vec::with_capacity(self.cells.len());
        for c in &self.cells {
            let index = c
                .index
                .iter()
                .map(|&i| i.checked_sub(base))
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| {
                    Error::IndexOutOfRange(format!("cell {:?} below index_base {base}", c.index))
                })?;
            let class = c.class.checked_sub(base).ok_or_else(|| {
                Error::IndexOutOfRange(format!("class {} below index_base {base}", c.class))
            })?;
            entries.push((index, class, c.p));
        }
        let mut model = HistogramModel::from_entries(self.dims.clone(), self.prior.clone(), &entries)?;
        if let Some(noise) = &self.noise {
            let positions = one_based(&noise.positions, "noise positions")?;
            let dims = if noise.dims.is_empty() {
                vec![NoiseDim::unit(); positions.len()]
            } else {
                noise
                    .dims
                    .iter()
                    .map(|d| NoiseDim {
                        boundaries: d.boundaries.clone(),
                        pmf: d.pmf.clone(),
                    })
                    .collect()
            };
            model = model.sparsify(&NoiseSpec { dims, positions })?;
        }
        if !self.mask.is_empty() {
            let coords: BTreeSet<usize> = one_based(&self.mask, "mask")?.into_iter().collect();
            model = model.mask(&coords)?;
        }
        if let Some(rows) = &self.rotation {
            model = model.rotate(&Rotation::new(rows.clone())?)?;
        }
        Ok(model)
    }

    /// Flatten a model into a spec (no noise block; masks already applied).
    pub fn from_model(model: &HistogramModel, id: Option<String>) -> Self {
        let mut cells = Vec::new();
        for (idx, probs) in model.joint().cells() {
            for (y, &p) in probs.iter().enumerate() {
                if p > 0.0 {
                    cells.push(CellEntry {
                        index: idx.iter().map(|i| i + 1).collect(),
                        class: y + 1,
                        p,
                    });
                }
            }
        }
        ModelSpec {
            id,
            dims: model.grid().axes().to_vec(),
            classes: model.classes(),
            prior: model.prior().to_vec(),
            cells,
            index_base: 1,
            noise: None,
            mask: Vec::new(),
            rotation: model.rotation().map(|r| r.rows()),
        }
    }
}
