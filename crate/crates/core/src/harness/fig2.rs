use std::path::Path;

use rayon::prelude::*;

use super::{resolve_model, study_pre_encoder, thread_pool, ExperimentSpec};
use crate::error::Result;
use crate::infocalc::conditional_entropy;
use crate::io::write_csv_atomic;
use crate::learner::{train, MLPArch, TrainConfig, TrainHistory};

pub const FIG2_HEADER: [&str; 9] = [
    "model",
    "arch",
    "n",
    "pre_encoder",
    "seed_avg",
    "epoch",
    "val_risk_bits",
    "href_bits",
    "val_se_bits",
];

/// One training run of the matrix.
#[derive(Clone, Debug)]
pub struct RunResult {
    pub model: String,
    pub arch: String,
    pub n: usize,
    pub pre_encoder: bool,
    pub seed: u64,
    pub href_bits: f64,
    pub history: TrainHistory,
}

/// A seed-averaged point of a learning curve.
#[derive(Clone, Debug, PartialEq)]
pub struct Fig2Row {
    pub model: String,
    pub arch: String,
    pub n: usize,
    pub pre_encoder: String,
    /// Number of seeds averaged.
    pub seed_avg: usize,
    pub epoch: usize,
    pub val_risk_bits: f64,
    pub href_bits: f64,
    /// Monte-Carlo standard error of the seed average.
    pub val_se_bits: f64,
}

#[derive(Clone, Debug)]
pub struct Fig2Output {
    pub rows: Vec<Fig2Row>,
    pub runs: Vec<RunResult>,
}

fn pre_label(pre: bool) -> String {
    if pre {
        study_pre_encoder().describe()
    } else {
        "none".into()
    }
}

/// Runs every `(model, arch, n, pre-encoder, seed)` cell of `spec`, up to
/// `spec.workers` at a time, and averages the curves over seeds.
///
/// `progress` is called after each finished run. Output order does not
/// depend on the worker count.
pub fn run_fig2(spec: &ExperimentSpec, progress: Option<&(dyn Fn(&RunResult) + Sync)>) -> Result<Fig2Output> {
    spec.validate()?;
    let mut models = Vec::new();
    for name in &spec.models {
        let (_, m) = resolve_model(name)?;
        let href = conditional_entropy(&m).bits();
        models.push((name.clone(), m, href));
    }
    let mut cells = Vec::new();
    for (mi, _) in models.iter().enumerate() {
        for arch in &spec.archs {
            for &n in &spec.ns {
                for &pre in &spec.pre_encoder {
                    for &seed in &spec.seeds {
                        cells.push((mi, arch.clone(), n, pre, seed));
                    }
                }
            }
        }
    }
    let pool = thread_pool(spec.workers)?;
    let runs: Vec<RunResult> = pool.install(|| {
        cells
            .par_iter()
            .map(|(mi, arch, n, pre, seed)| {
                let (name, model, href) = &models[*mi];
                let cfg = TrainConfig {
                    epochs: spec.epochs,
                    seed: *seed,
                    val_size: spec.val_size,
                    pre_encoder: pre.then(study_pre_encoder),
                    ..TrainConfig::default()
                };
                let a = MLPArch::preset(arch, cfg.input_dim(model)?, model.classes())?;
                let history = train(model, *n, &a, &cfg)?;
                let run = RunResult {
                    model: name.clone(),
                    arch: arch.to_ascii_lowercase(),
                    n: *n,
                    pre_encoder: *pre,
                    seed: *seed,
                    href_bits: *href,
                    history,
                };
                if let Some(p) = progress {
                    p(&run);
                }
                Ok(run)
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let k = spec.seeds.len();
    let mut rows = Vec::new();
    for group in runs.chunks(k) {
        let first = &group[0];
        for e in 0..spec.epochs {
            let risks: Vec<f64> = group.iter().map(|r| r.history.records[e].val_risk_bits).collect();
            let se2: f64 = group.iter().map(|r| r.history.records[e].val_se_bits.powi(2)).sum();
            rows.push(Fig2Row {
                model: first.model.clone(),
                arch: first.arch.clone(),
                n: first.n,
                pre_encoder: pre_label(first.pre_encoder),
                seed_avg: k,
                epoch: e + 1,
                val_risk_bits: risks.iter().sum::<f64>() / k as f64,
                href_bits: first.href_bits,
                val_se_bits: se2.sqrt() / k as f64,
            });
        }
    }
    Ok(Fig2Output { rows, runs })
}

pub fn write_fig2_csv(path: &Path, rows: &[Fig2Row]) -> Result<()> {
    write_csv_atomic(path, |w| {
        w.write_record(FIG2_HEADER)?;
        for r in rows {
            w.write_record([
                r.model.clone(),
                r.arch.clone(),
                r.n.to_string(),
                r.pre_encoder.clone(),
                r.seed_avg.to_string(),
                r.epoch.to_string(),
                r.val_risk_bits.to_string(),
                r.href_bits.to_string(),
                r.val_se_bits.to_string(),
            ])?;
        }
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ExperimentSpec {
        ExperimentSpec {
            models: vec!["study-bar".into()],
            archs: vec!["mlp32".into()],
            ns: vec![200],
            pre_encoder: vec![false, true],
            seeds: vec![0, 1],
            epochs: 2,
            val_size: 500,
            workers: 2,
        }
    }

    #[test]
    fn one_row_per_config_and_epoch() {
        let out = run_fig2(&tiny(), None).unwrap();
        assert_eq!(out.runs.len(), 4);
        assert_eq!(out.rows.len(), 2 * 2);
        assert!(out.rows.iter().all(|r| r.seed_avg == 2));
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let a = run_fig2(&tiny(), None).unwrap();
        let b = run_fig2(
            &ExperimentSpec {
                workers: 1,
                ..tiny()
            },
            None,
        )
        .unwrap();
        assert_eq!(a.rows, b.rows);
    }
}
