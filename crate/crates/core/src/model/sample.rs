use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{CellIndex, HistogramModel};

/// i.i.d. draws `(x, y)` from a model, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    dim: usize,
    classes: usize,
    seed: u64,
    features: Vec<f64>,
    labels: Vec<usize>,
}

impl Dataset {
    pub fn from_parts(
        dim: usize,
        classes: usize,
        seed: u64,
        features: Vec<f64>,
        labels: Vec<usize>,
    ) -> Result<Self> {
        if features.len() != dim * labels.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} feature values for {} rows of dimension {dim}",
                features.len(),
                labels.len()
            )));
        }
        if let Some(&y) = labels.iter().find(|&&y| y >= classes) {
            return Err(Error::IndexOutOfRange(format!("label {y} with {classes} classes")));
        }
        Ok(Dataset {
            dim,
            classes,
            seed,
            features,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn x(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn y(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], usize)> {
        self.features
            .chunks(self.dim.max(1))
            .zip(self.labels.iter().copied())
    }

    /// CSV with header `x1,...,xd,y`; labels are 0-based.
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        self.write_rows(&mut w)?;
        w.into_inner()
            .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        crate::io::write_csv_atomic(path, |w| self.write_rows(w))
    }

    fn write_rows<W: std::io::Write>(&self, w: &mut csv::Writer<W>) -> Result<()> {
        let mut header: Vec<String> = (1..=self.dim).map(|k| format!("x{k}")).collect();
        header.push("y".into());
        w.write_record(&header)?;
        for (x, y) in self.iter() {
            let mut rec: Vec<String> = x.iter().map(|v| v.to_string()).collect();
            rec.push(y.to_string());
            w.write_record(&rec)?;
        }
        Ok(())
    }
}

/// Per-class samplers over the support cells.
pub(crate) struct CellSampler<'a> {
    model: &'a HistogramModel,
    prior: WeightedIndex<f64>,
    cells: Vec<&'a CellIndex>,
    per_class: Vec<WeightedIndex<f64>>,
}

impl<'a> CellSampler<'a> {
    pub(crate) fn new(model: &'a HistogramModel) -> Result<Self> {
        let prior = WeightedIndex::new(model.prior().iter().copied())
            .map_err(|e| Error::InvalidConfig(format!("prior: {e}")))?;
        let cells: Vec<&CellIndex> = model.joint().cells().map(|(k, _)| k).collect();
        let mut per_class = Vec::with_capacity(model.classes());
        for y in 0..model.classes() {
            let w: Vec<f64> = model.joint().cells().map(|(_, p)| p[y]).collect();
            // a zero-prior class may carry an all-zero row; it is never drawn
            let dist = WeightedIndex::new(if w.iter().any(|&v| v > 0.0) {
                w
            } else {
                vec![1.0; cells.len()]
            })
            .map_err(|e| Error::InvalidConfig(format!("class {y}: {e}")))?;
            per_class.push(dist);
        }
        Ok(CellSampler {
            model,
            prior,
            cells,
            per_class,
        })
    }

    /// Draw one `(x, y, cell)`; `x` is written into `out`.
    pub(crate) fn draw<R: Rng>(&self, rng: &mut R, out: &mut Vec<f64>) -> (usize, &'a CellIndex) {
        let y = self.prior.sample(rng);
        let cell = self.cells[self.per_class[y].sample(rng)];
        let grid = self.model.grid();
        out.clear();
        for (k, &i) in cell.iter().enumerate() {
            let a = grid.axis(k);
            let (lo, hi) = (a[i], a[i + 1]);
            let mut v = lo + rng.random::<f64>() * (hi - lo);
            if v >= hi {
                v = hi.next_down();
            }
            out.push(v);
        }
        if let Some(u) = self.model.rotation() {
            let x = u.apply(out);
            *out = x;
        }
        (y, cell)
    }
}

impl HistogramModel {
    /// `n` i.i.d. draws: `Y ~ p_y`, cell `I | Y ~ p_{.|y}`, `X | I` uniform on
    /// the cell, then the model rotation. Deterministic in `seed`.
    pub fn sample(&self, seed: u64, n: usize) -> Result<Dataset> {
        if n == 0 {
            return Err(Error::InvalidCount("sample size must be at least 1".into()));
        }
        let sampler = CellSampler::new(self)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = self.dim();
        let mut features = Vec::with_capacity(n * d);
        let mut labels = Vec::with_capacity(n);
        let mut buf = Vec::with_capacity(d);
        for _ in 0..n {
            let (y, _) = sampler.draw(&mut rng, &mut buf);
            features.extend_from_slice(&buf);
            labels.push(y);
        }
        Dataset::from_parts(d, self.classes(), seed, features, labels)
    }
}
