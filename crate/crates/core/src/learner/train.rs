use std::path::Path;

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::net::{MLPArch, MLPParams};
use crate::encoders::{Encoder, Representation};
use crate::error::{Error, Result};
use crate::infocalc::{mc_gap, mc_risk, mil, McEstimate, Predictor};
use crate::io::write_csv_atomic;
use crate::model::{Dataset, HistogramModel};
use crate::units::InfoBits;

/// `(training length, batch size)` pairs of the study.
pub const BATCH_SCHEDULE: [(usize, usize); 5] = [
    (2_800, 44),
    (22_000, 344),
    (60_000, 512),
    (460_000, 512),
    (1_300_000, 1024),
];

/// Batch size of the schedule entry nearest to `n` on a log scale.
pub fn batch_size_for(n: usize) -> usize {
    let ln = (n.max(1) as f64).ln();
    BATCH_SCHEDULE
        .iter()
        .min_by(|a, b| {
            let da = ((a.0 as f64).ln() - ln).abs();
            let db = ((b.0 as f64).ln() - ln).abs();
            da.total_cmp(&db)
        })
        .map(|&(_, b)| b)
        .expect("non-empty schedule")
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    /// `None` follows [`BATCH_SCHEDULE`].
    pub batch_size: Option<usize>,
    pub epochs: usize,
    pub seed: u64,
    /// Held-out sample size for the per-epoch validation risk.
    pub val_size: usize,
    /// Applied to every input before the network; must produce vectors.
    pub pre_encoder: Option<Encoder>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-2,
            momentum: 0.97,
            batch_size: None,
            epochs: 30,
            seed: 0,
            val_size: 100_000,
            pre_encoder: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::InvalidConfig("learning rate must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::InvalidConfig("momentum must lie in [0, 1)".into()));
        }
        if self.batch_size == Some(0) || self.epochs == 0 || self.val_size == 0 {
            return Err(Error::InvalidConfig(
                "batch size, epochs and validation size must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// Network input dimension for `model` after the pre-encoder.
    pub fn input_dim(&self, model: &HistogramModel) -> Result<usize> {
        match &self.pre_encoder {
            None => Ok(model.dim()),
            Some(e) => {
                let probe = vec![0.0; model.dim()];
                match e.apply_vector(&probe)? {
                    Representation::Vector(v) => Ok(v.len()),
                    Representation::Label(_) => Err(pre_encoder_error()),
                }
            }
        }
    }
}

fn pre_encoder_error() -> Error {
    Error::InvalidEncoder("a pre-encoder must produce real vectors".into())
}

/// Applies an optional pre-encoder to row-major inputs.
fn encode_rows(pre: Option<&Encoder>, xs: &[f64], dim: usize) -> Result<(Vec<f64>, usize)> {
    match pre {
        None => Ok((xs.to_vec(), dim)),
        Some(Encoder::Selector(c)) => {
            if c.last().is_some_and(|&k| k >= dim) {
                return Err(Error::DimensionMismatch {
                    expected: c.last().unwrap() + 1,
                    got: dim,
                });
            }
            let mut out = Vec::with_capacity(xs.len() / dim.max(1) * c.len());
            for x in xs.chunks(dim) {
                out.extend(c.iter().map(|&k| x[k]));
            }
            Ok((out, c.len()))
        }
        Some(e) => {
            let mut out = Vec::new();
            let mut width = None;
            for x in xs.chunks(dim) {
                match e.apply_vector(x)? {
                    Representation::Vector(v) => {
                        width.get_or_insert(v.len());
                        out.extend(v);
                    }
                    Representation::Label(_) => return Err(pre_encoder_error()),
                }
            }
            Ok((out, width.unwrap_or(0)))
        }
    }
}

fn to_matrix(data: Vec<f64>, cols: usize) -> Result<Array2<f64>> {
    let rows = if cols == 0 { 0 } else { data.len() / cols };
    Array2::from_shape_vec((rows, cols), data).map_err(|e| Error::ShapeMismatch(e.to_string()))
}

fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.next_u64()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub train_loss_bits: f64,
    pub val_risk_bits: f64,
    pub val_se_bits: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainHistory {
    pub arch: MLPArch,
    pub n: usize,
    pub seed: u64,
    pub batch_size: usize,
    pub pre_encoder: Option<String>,
    pub records: Vec<EpochRecord>,
    pub params: MLPParams,
}

impl TrainHistory {
    pub fn final_record(&self) -> &EpochRecord {
        self.records.last().expect("at least one epoch")
    }
}

/// Mean and standard error of `-log2 v(y|x)` over a labelled matrix.
fn risk_bits(params: &MLPParams, x: &Array2<f64>, y: &[usize]) -> Result<(f64, f64)> {
    const CHUNK: usize = 4096;
    let mut sum = 0.0;
    let mut sq = 0.0;
    for (start, xb) in (0..).step_by(CHUNK).zip(x.axis_chunks_iter(Axis(0), CHUNK)) {
        let p = params.forward_batch(xb)?;
        for (row, &c) in p.rows().into_iter().zip(&y[start..]) {
            let l = -row[c].log2();
            sum += l;
            sq += l * l;
        }
    }
    let n = y.len() as f64;
    let mean = sum / n;
    let var = if y.len() > 1 {
        ((sq - n * mean * mean) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok((mean, (var / n).sqrt()))
}

fn prepared(data: &Dataset, pre: Option<&Encoder>) -> Result<Array2<f64>> {
    let (xs, cols) = encode_rows(pre, data.features(), data.dim())?;
    to_matrix(xs, cols)
}

/// Trains `arch` on `n` samples drawn from `model` with `config.seed`.
///
/// Per-epoch validation risk is measured on an independent sample of
/// `config.val_size` points. Deterministic given the configuration.
pub fn train(model: &HistogramModel, n: usize, arch: &MLPArch, config: &TrainConfig) -> Result<TrainHistory> {
    config.validate()?;
    let input = config.input_dim(model)?;
    if arch.input != input || arch.classes != model.classes() {
        return Err(Error::ShapeMismatch(format!(
            "architecture {} -> {} does not fit inputs of width {input} and {} classes",
            arch.input,
            arch.classes,
            model.classes()
        )));
    }
    let pre = config.pre_encoder.as_ref();
    let train_set = model.sample(config.seed, n)?;
    let val_set = model.sample(derive_seed(config.seed, 1), config.val_size)?;
    let x = prepared(&train_set, pre)?;
    let y = train_set.labels();
    let xv = prepared(&val_set, pre)?;
    let yv = val_set.labels();

    let batch = config.batch_size.unwrap_or_else(|| batch_size_for(n)).min(n);
    let mut params = MLPParams::init(arch, derive_seed(config.seed, 2));
    let mut velocity = MLPParams::zeros(arch);
    let mut order: Vec<usize> = (0..n).collect();
    let mut records = Vec::with_capacity(config.epochs);
    let (lr, mu) = (config.learning_rate, config.momentum);
    for epoch in 1..=config.epochs {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, 100 + epoch as u64));
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut yb = Vec::with_capacity(batch);
        for idx in order.chunks(batch) {
            let xb = x.select(Axis(0), idx);
            yb.clear();
            yb.extend(idx.iter().map(|&i| y[i]));
            let (loss, grads) = params.loss_and_grad(xb.view(), &yb)?;
            loss_sum += loss * idx.len() as f64;
            for ((w, v), g) in params.weights.iter_mut().zip(&mut velocity.weights).zip(&grads.weights) {
                v.zip_mut_with(g, |v, &g| *v = mu * *v + g);
                w.scaled_add(-lr, v);
            }
            for ((b, v), g) in params.biases.iter_mut().zip(&mut velocity.biases).zip(&grads.biases) {
                v.zip_mut_with(g, |v, &g| *v = mu * *v + g);
                b.scaled_add(-lr, v);
            }
        }
        let (val, se) = risk_bits(&params, &xv, yv)?;
        records.push(EpochRecord {
            epoch,
            train_loss_bits: InfoBits::from_nats(loss_sum / n as f64).bits(),
            val_risk_bits: val,
            val_se_bits: se,
        });
    }
    Ok(TrainHistory {
        arch: arch.clone(),
        n,
        seed: config.seed,
        batch_size: batch,
        pre_encoder: pre.map(|e| e.describe()),
        records,
        params,
    })
}

/// A trained network behind an optional pre-encoder.
pub struct NetPredictor<'a> {
    pub params: &'a MLPParams,
    pub pre_encoder: Option<&'a Encoder>,
}

impl Predictor for NetPredictor<'_> {
    fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = Vec::new();
        self.predict_batch(x, x.len(), &mut out)?;
        Ok(out)
    }

    fn predict_batch(&self, xs: &[f64], dim: usize, out: &mut Vec<f64>) -> Result<()> {
        let (enc, cols) = encode_rows(self.pre_encoder, xs, dim)?;
        let m = to_matrix(enc, cols)?;
        let p = self.params.forward_batch(m.view())?;
        out.extend(p.iter());
        Ok(())
    }
}

/// Excess risk of a trained predictor over `H(Y|X)`.
///
/// With an exactly computable pre-encoder the encoder effect is its mutual
/// information loss and the remainder of the gap is attributed to the
/// decoder; for an end-to-end network only the total gap is reported.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub risk: McEstimate,
    pub gap: McEstimate,
    pub encoder_effect: Option<InfoBits>,
    pub decoder_effect: Option<InfoBits>,
}

pub fn evaluate_gap(
    model: &HistogramModel,
    params: &MLPParams,
    pre_encoder: Option<&Encoder>,
    n_mc: usize,
    seed: u64,
) -> Result<GapReport> {
    let p = NetPredictor {
        params,
        pre_encoder,
    };
    let risk = mc_risk(model, &p, n_mc, seed)?;
    let gap = mc_gap(model, &p, n_mc, seed)?;
    let encoder_effect = match pre_encoder {
        Some(e) => Some(mil(model, e)?),
        None => None,
    };
    Ok(GapReport {
        risk,
        gap,
        encoder_effect,
        decoder_effect: encoder_effect.map(|e| gap.value - e),
    })
}

/// Writes `(model id, history)` pairs, one row per epoch.
pub fn write_history_csv(path: &Path, runs: &[(String, &TrainHistory)]) -> Result<()> {
    write_csv_atomic(path, |w| {
        w.write_record([
            "model_id",
            "arch",
            "n",
            "pre_encoder",
            "seed",
            "epoch",
            "train_loss_bits",
            "val_risk_bits",
            "val_se_bits",
        ])?;
        for (id, h) in runs {
            for r in &h.records {
                w.write_record([
                    id.clone(),
                    h.arch.label(),
                    h.n.to_string(),
                    h.pre_encoder.clone().unwrap_or_else(|| "none".into()),
                    h.seed.to_string(),
                    r.epoch.to_string(),
                    r.train_loss_bits.to_string(),
                    r.val_risk_bits.to_string(),
                    r.val_se_bits.to_string(),
                ])?;
            }
        }
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::presets;

    #[test]
    fn batch_schedule_nearest() {
        assert_eq!(batch_size_for(2_780), 44);
        assert_eq!(batch_size_for(21_500), 344);
        assert_eq!(batch_size_for(59_900), 512);
        assert_eq!(batch_size_for(464_000), 512);
        assert_eq!(batch_size_for(1_290_000), 1024);
        assert_eq!(batch_size_for(10), 44);
    }

    #[test]
    fn config_validation() {
        let mut c = TrainConfig::default();
        c.momentum = 1.0;
        assert!(c.validate().is_err());
        c.momentum = 0.5;
        c.learning_rate = 0.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn training_is_deterministic() {
        let m = presets::demonstration_2d();
        let arch = MLPArch::mlp32(2, 3);
        let cfg = TrainConfig {
            epochs: 2,
            seed: 4,
            val_size: 500,
            ..TrainConfig::default()
        };
        let a = train(&m, 300, &arch, &cfg).unwrap();
        let b = train(&m, 300, &arch, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.records.len(), 2);
    }

    #[test]
    fn selector_pre_encoder_shrinks_input() {
        let m = presets::demonstration_3d();
        let cfg = TrainConfig {
            epochs: 1,
            val_size: 200,
            pre_encoder: Some(Encoder::selector(vec![0, 2]).unwrap()),
            ..TrainConfig::default()
        };
        assert_eq!(cfg.input_dim(&m).unwrap(), 2);
        assert!(train(&m, 100, &MLPArch::mlp32(3, 3), &cfg).is_err());
        let h = train(&m, 100, &MLPArch::mlp32(2, 3), &cfg).unwrap();
        let g = evaluate_gap(&m, &h.params, cfg.pre_encoder.as_ref(), 2000, 1).unwrap();
        assert!(g.encoder_effect.unwrap().bits() > 0.0);
    }
}
