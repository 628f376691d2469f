use serde::{Deserialize, Serialize};

/// One exported measurement. Infinite values serialize as `null`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureRecord {
    pub measure: String,
    pub value_bits: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stderr: Option<f64>,
    pub model_id: String,
    pub encoder_id: String,
}

impl MeasureRecord {
    pub fn new(measure: &str, value_bits: f64, model_id: &str, encoder_id: &str) -> Self {
        MeasureRecord {
            measure: measure.into(),
            value_bits,
            stderr: None,
            model_id: model_id.into(),
            encoder_id: encoder_id.into(),
        }
    }

    pub fn with_stderr(mut self, se: f64) -> Self {
        self.stderr = Some(se);
        self
    }
}
