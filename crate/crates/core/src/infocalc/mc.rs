use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{kl_raw, DecoderTable};
use crate::encoders::{symbol_of, Encoder};
use crate::error::{Error, Result};
use crate::model::sample::CellSampler;
use crate::model::HistogramModel;
use crate::units::InfoBits;

const CHUNK: usize = 8192;

/// Anything that maps an observation to a pmf over the classes.
pub trait Predictor: Sync {
    fn predict(&self, x: &[f64]) -> Result<Vec<f64>>;

    /// Predicts every row of the row-major `xs` (`dim` columns), appending
    /// one pmf per row to `out`.
    fn predict_batch(&self, xs: &[f64], dim: usize, out: &mut Vec<f64>) -> Result<()> {
        for x in xs.chunks(dim) {
            out.extend(self.predict(x)?);
        }
        Ok(())
    }
}

impl<F> Predictor for F
where
    F: Fn(&[f64]) -> Vec<f64> + Sync,
{
    fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self(x))
    }
}

/// The Bayes posterior `mu_{Y|X}` of a model.
pub struct TruePosterior<'a>(pub &'a HistogramModel);

impl Predictor for TruePosterior<'_> {
    fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.0.true_posterior(x)
    }
}

pub struct UniformPredictor {
    pub classes: usize,
}

impl Predictor for UniformPredictor {
    fn predict(&self, _x: &[f64]) -> Result<Vec<f64>> {
        Ok(vec![1.0 / self.classes as f64; self.classes])
    }
}

/// An exact encoder followed by a decoder table.
pub struct TablePredictor<'a> {
    pub model: &'a HistogramModel,
    pub encoder: &'a Encoder,
    pub decoder: &'a DecoderTable,
}

impl Predictor for TablePredictor<'_> {
    fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        let s = symbol_of(self.model, self.encoder, x)?;
        self.decoder
            .get(&s)
            .map(|r| r.to_vec())
            .ok_or_else(|| Error::MissingDecoderRow(s.to_string()))
    }
}

/// A Monte-Carlo mean in bits with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub value: InfoBits,
    pub stderr: f64,
    pub n: usize,
}

#[derive(Default)]
struct Welford {
    n: usize,
    mean: f64,
    m2: f64,
    infinite: bool,
}

impl Welford {
    fn push(&mut self, v: f64) {
        if v.is_infinite() {
            self.infinite = true;
        }
        self.n += 1;
        let d = v - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (v - self.mean);
    }

    fn finish(self) -> McEstimate {
        if self.infinite {
            return McEstimate {
                value: InfoBits::INFINITY,
                stderr: f64::INFINITY,
                n: self.n,
            };
        }
        let var = if self.n > 1 {
            self.m2 / (self.n - 1) as f64
        } else {
            0.0
        };
        McEstimate {
            value: InfoBits(self.mean),
            stderr: (var / self.n as f64).sqrt(),
            n: self.n,
        }
    }
}

/// Draws `n` fresh samples (the same stream as `model.sample(seed, n)`) and
/// feeds `(x, y, true posterior, predicted pmf)` to `f`.
fn for_each_prediction(
    model: &HistogramModel,
    predictor: &dyn Predictor,
    n: usize,
    seed: u64,
    mut f: impl FnMut(usize, &[f64], &[f64]),
) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidCount("Monte-Carlo size must be at least 1".into()));
    }
    let sampler = CellSampler::new(model)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = model.dim();
    let m = model.classes();
    let mut buf = Vec::with_capacity(d);
    let mut xs = Vec::with_capacity(CHUNK * d);
    let mut ys = Vec::with_capacity(CHUNK);
    let mut posts: Vec<Vec<f64>> = Vec::with_capacity(CHUNK);
    let mut out = Vec::with_capacity(CHUNK * m);
    let mut left = n;
    while left > 0 {
        let k = left.min(CHUNK);
        xs.clear();
        ys.clear();
        posts.clear();
        out.clear();
        for _ in 0..k {
            let (y, cell) = sampler.draw(&mut rng, &mut buf);
            xs.extend_from_slice(&buf);
            ys.push(y);
            posts.push(model.cell_posterior(cell)?);
        }
        predictor.predict_batch(&xs, d, &mut out)?;
        if out.len() != k * m {
            return Err(Error::ShapeMismatch(format!(
                "predictor returned {} values for {k} rows of {m} classes",
                out.len()
            )));
        }
        for i in 0..k {
            f(ys[i], &posts[i], &out[i * m..(i + 1) * m]);
        }
        left -= k;
    }
    Ok(())
}

/// Empirical cross-entropy risk `-(1/n) sum log2 v(y_i | x_i)` on fresh
/// samples.
pub fn mc_risk(model: &HistogramModel, predictor: &dyn Predictor, n: usize, seed: u64) -> Result<McEstimate> {
    let mut acc = Welford::default();
    for_each_prediction(model, predictor, n, seed, |y, _, v| {
        acc.push(if v[y] > 0.0 { -v[y].log2() } else { f64::INFINITY })
    })?;
    Ok(acc.finish())
}

/// Monte-Carlo estimate of `E_X[D(mu_{Y|X} || v)]`, the excess risk over
/// `H(Y|X)`. Uses the same samples as [`mc_risk`] for equal seeds.
pub fn mc_gap(model: &HistogramModel, predictor: &dyn Predictor, n: usize, seed: u64) -> Result<McEstimate> {
    let mut acc = Welford::default();
    for_each_prediction(model, predictor, n, seed, |_, post, v| acc.push(kl_raw(post, v)))?;
    Ok(acc.finish())
}
