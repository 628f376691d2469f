//! Experiment orchestration: the study models and their self-checks, the
//! training matrix, and the expressiveness sweeps.

mod fig2;
mod sweeps;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use fig2::{run_fig2, write_fig2_csv, Fig2Output, Fig2Row, RunResult, FIG2_HEADER};
pub use sweeps::{
    dyadic_sweep, ib_sweep, measure_records, run_expressiveness_sweeps, write_dyadic_csv,
    write_measures_csv, DyadicRow, SweepOutput,
};

use crate::encoders::Encoder;
use crate::error::{Error, Result};
use crate::infocalc::{conditional_entropy, entropy_y, mil, mutual_information};
use crate::model::{presets, HistogramModel, ModelSpec};

/// Reference values of the study models, in bits.
pub const STUDY_MI: [f64; 3] = [1.182, 0.532, 0.0];
pub const STUDY_EQUIVOCATION: [f64; 3] = [0.303532, 0.952762, 1.485475];
pub const STUDY_H_Y: f64 = 1.485475;
pub const STUDY_MODEL_IDS: [&str; 3] = ["study", "study-tilde", "study-bar"];

/// A named preset, or a path to a JSON model file.
pub fn resolve_model(name_or_path: &str) -> Result<(String, HistogramModel)> {
    if let Some(m) = presets::by_name(name_or_path) {
        return Ok((name_or_path.to_string(), m));
    }
    let path = Path::new(name_or_path);
    if !path.exists() {
        return Err(Error::InvalidConfig(format!(
            "{name_or_path:?} is neither a preset ({}) nor an existing file",
            presets::PRESET_NAMES.join(", ")
        )));
    }
    let spec = ModelSpec::load(path)?;
    let id = spec.id.clone().unwrap_or_else(|| {
        path.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| name_or_path.to_string())
    });
    Ok((id, spec.build()?))
}

/// The informative-prefix selector `eta_{1..5}` of the study.
pub fn study_pre_encoder() -> Encoder {
    Encoder::Selector(vec![0, 1, 2, 3, 4])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelfCheck {
    pub quantity: String,
    pub expected: f64,
    pub computed: f64,
    pub tolerance: f64,
}

impl SelfCheck {
    pub fn passed(&self) -> bool {
        (self.computed - self.expected).abs() <= self.tolerance
    }
}

#[derive(Clone, Debug)]
pub struct StudyModels {
    pub full: HistogramModel,
    pub tilde: HistogramModel,
    pub bar: HistogramModel,
    pub checks: Vec<SelfCheck>,
}

impl StudyModels {
    pub fn iter(&self) -> impl Iterator<Item = (&'static str, &HistogramModel)> {
        STUDY_MODEL_IDS.into_iter().zip([&self.full, &self.tilde, &self.bar])
    }
}

/// Builds the 15-dimensional study model and its two masked variants and
/// verifies their information values; any drift fails with
/// [`Error::SelfCheckFailed`].
pub fn build_study_models() -> Result<StudyModels> {
    let full = presets::study();
    let tilde = full.mask(&[0].into_iter().collect())?;
    let bar = full.mask(&[0, 2, 4].into_iter().collect())?;
    let mut checks = Vec::new();
    let models = [&full, &tilde, &bar];
    for ((id, m), (&mi, &h)) in STUDY_MODEL_IDS
        .iter()
        .zip(models)
        .zip(STUDY_MI.iter().zip(&STUDY_EQUIVOCATION))
    {
        checks.push(SelfCheck {
            quantity: format!("I(X;Y) [{id}]"),
            expected: mi,
            computed: mutual_information(m).bits(),
            tolerance: 1e-3,
        });
        checks.push(SelfCheck {
            quantity: format!("H(Y|X) [{id}]"),
            expected: h,
            computed: conditional_entropy(m).bits(),
            tolerance: 1e-3,
        });
    }
    checks.push(SelfCheck {
        quantity: "H(Y)".into(),
        expected: STUDY_H_Y,
        computed: entropy_y(&full).bits(),
        tolerance: 1e-4,
    });
    checks.push(SelfCheck {
        quantity: "MIL of selector 1..5 [study]".into(),
        expected: 0.0,
        computed: mil(&full, &study_pre_encoder())?.bits(),
        tolerance: 1e-12,
    });
    if let Some(c) = checks.iter().find(|c| !c.passed()) {
        return Err(Error::SelfCheckFailed {
            quantity: c.quantity.clone(),
            expected: c.expected,
            computed: c.computed,
        });
    }
    Ok(StudyModels {
        full,
        tilde,
        bar,
        checks,
    })
}

fn default_archs() -> Vec<String> {
    vec!["mlp32".into(), "mlp256".into(), "mlp1024".into()]
}

fn default_models() -> Vec<String> {
    STUDY_MODEL_IDS.iter().map(|s| s.to_string()).collect()
}

fn default_seeds() -> Vec<u64> {
    vec![0, 1, 2]
}

fn default_epochs() -> usize {
    30
}

fn default_val_size() -> usize {
    100_000
}

fn default_workers() -> usize {
    1
}

fn default_pre() -> Vec<bool> {
    vec![false, true]
}

fn default_m_max() -> u32 {
    4
}

fn default_ib_points() -> usize {
    16
}

fn default_sweep_models() -> Vec<String> {
    vec!["2d-singular".into(), "2d-demo".into(), "3d-demo".into()]
}

/// Data lengths of the study.
pub const FULL_NS: [usize; 5] = [2_780, 21_500, 59_900, 464_000, 1_290_000];
/// The desk-scale subset.
pub const DESK_NS: [usize; 3] = [2_780, 21_500, 59_900];

/// Configuration of the training matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    /// Study model ids (`study`, `study-tilde`, `study-bar`) or other
    /// presets / model files.
    #[serde(default = "default_models")]
    pub models: Vec<String>,
    #[serde(default = "default_archs")]
    pub archs: Vec<String>,
    pub ns: Vec<usize>,
    /// Which variants to run: without (`false`) and with (`true`) the
    /// `eta_{1..5}` pre-encoder.
    #[serde(default = "default_pre")]
    pub pre_encoder: Vec<bool>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_val_size")]
    pub val_size: usize,
    #[serde(default = "default_workers")]
    pub workers: usize,
}

impl ExperimentSpec {
    pub fn desk() -> Self {
        ExperimentSpec {
            models: default_models(),
            archs: default_archs(),
            ns: DESK_NS.to_vec(),
            pre_encoder: default_pre(),
            seeds: default_seeds(),
            epochs: default_epochs(),
            val_size: default_val_size(),
            workers: default_workers(),
        }
    }

    pub fn full() -> Self {
        ExperimentSpec {
            ns: FULL_NS.to_vec(),
            val_size: 800_000,
            ..Self::desk()
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let empty = |what: &str| Err(Error::InvalidConfig(format!("{what} list is empty")));
        if self.seeds.is_empty() {
            return empty("seed");
        }
        if self.models.is_empty() {
            return empty("model");
        }
        if self.archs.is_empty() {
            return empty("architecture");
        }
        if self.ns.is_empty() {
            return empty("data-length");
        }
        if self.pre_encoder.is_empty() {
            return empty("pre-encoder variant");
        }
        if self.ns.contains(&0) || self.epochs == 0 || self.val_size == 0 || self.workers == 0 {
            return Err(Error::InvalidConfig(
                "n, epochs, validation size and workers must be positive".into(),
            ));
        }
        for a in &self.archs {
            crate::learner::MLPArch::preset(a, 1, 2)?;
        }
        for m in &self.models {
            resolve_model(m)?;
        }
        Ok(())
    }
}

/// Configuration of the dyadic and IB sweeps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default = "default_sweep_models")]
    pub models: Vec<String>,
    #[serde(default = "default_m_max")]
    pub m_max: u32,
    /// Budgets per IB curve (evenly spaced on `[0, H(I)]`, endpoints included).
    #[serde(default = "default_ib_points")]
    pub ib_points: usize,
    #[serde(default = "default_workers")]
    pub workers: usize,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            models: default_sweep_models(),
            m_max: default_m_max(),
            ib_points: default_ib_points(),
            workers: default_workers(),
        }
    }
}

/// Output file names under a results directory.
pub fn output_path(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}

pub(crate) fn thread_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))
}
