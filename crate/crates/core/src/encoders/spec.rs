//! JSON encoder specifications.
//!
//! Coordinate lists are 1-based. Cell indices in `groups` are counted from
//! `index_base` (default 1). Grids, orbit boundaries and dyadic dimensions
//! default to those of the model the encoder is built for.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CellQuantizer, Encoder};
use crate::error::{Error, Result};
use crate::model::{BoundaryGrid, HistogramModel, Rotation};

fn one() -> i64 {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupEntry {
    pub index: Vec<i64>,
    pub group: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum EncoderSpec {
    Selector {
        coords: Vec<usize>,
    },
    Mask {
        coords: Vec<usize>,
    },
    Cells {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        grid: Option<Vec<Vec<f64>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        groups: Option<Vec<GroupEntry>>,
        /// Act on discrete labels instead of vectors.
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        relabel: bool,
        #[serde(default = "one")]
        index_base: i64,
    },
    Dyadic {
        m: u32,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dim: Option<usize>,
    },
    Orbit {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        boundaries: Option<Vec<f64>>,
    },
    Transform {
        /// Defaults to the model's rotation.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rotation: Option<Vec<Vec<f64>>>,
        coords: Vec<usize>,
    },
    Chain {
        layers: Vec<EncoderSpec>,
    },
}

fn zero_based(coords: &[usize]) -> Result<Vec<usize>> {
    coords
        .iter()
        .map(|&c| {
            c.checked_sub(1)
                .ok_or_else(|| Error::InvalidCoordinates("encoder coordinates are 1-based".into()))
        })
        .collect()
}

fn need_model<'a>(model: Option<&'a HistogramModel>, what: &str) -> Result<&'a HistogramModel> {
    model.ok_or_else(|| Error::InvalidEncoder(format!("{what} needs a model to fill in defaults")))
}

impl EncoderSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Parses inline JSON, or reads the file at `arg` when it is not JSON.
    pub fn from_arg(arg: &str) -> Result<Self> {
        let trimmed = arg.trim_start();
        if trimmed.starts_with('{') {
            Self::from_json(arg)
        } else {
            Self::from_json(&std::fs::read_to_string(Path::new(arg))?)
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn build(&self, model: Option<&HistogramModel>) -> Result<Encoder> {
        match self {
            EncoderSpec::Selector { coords } => Encoder::selector(zero_based(coords)?),
            EncoderSpec::Mask { coords } => Ok(Encoder::mask(zero_based(coords)?)),
            EncoderSpec::Cells {
                grid,
                groups,
                relabel,
                index_base,
            } => {
                let groups: Option<BTreeMap<Vec<i64>, i64>> = match groups {
                    None => None,
                    Some(list) => {
                        let mut map = BTreeMap::new();
                        for e in list {
                            let key: Vec<i64> = e.index.iter().map(|i| i - index_base).collect();
                            if map.insert(key, e.group).is_some() {
                                return Err(Error::InvalidEncoder(format!(
                                    "duplicate group entry for {:?}",
                                    e.index
                                )));
                            }
                        }
                        Some(map)
                    }
                };
                if *relabel {
                    if grid.is_some() {
                        return Err(Error::InvalidEncoder("a relabeling quantizer takes no grid".into()));
                    }
                    let groups = groups.ok_or_else(|| {
                        Error::InvalidEncoder("a relabeling quantizer needs groups".into())
                    })?;
                    return Ok(Encoder::Cells(CellQuantizer::relabel(groups)));
                }
                let grid = match grid {
                    Some(axes) => BoundaryGrid::new(axes.clone())?,
                    None => need_model(model, "a cell quantizer")?.grid().clone(),
                };
                match groups {
                    None => Ok(Encoder::Cells(CellQuantizer::identity(grid))),
                    Some(g) => {
                        let mut map = BTreeMap::new();
                        for (k, v) in g {
                            if k.iter().any(|&i| i < 0) {
                                return Err(Error::IndexOutOfRange(format!(
                                    "group cell index {k:?} below index_base"
                                )));
                            }
                            map.insert(k.into_iter().map(|i| i as usize).collect(), v);
                        }
                        Ok(Encoder::Cells(CellQuantizer::grouped(grid, map)?))
                    }
                }
            }
            EncoderSpec::Dyadic { m, dim } => {
                let dim = match dim {
                    Some(d) => *d,
                    None => need_model(model, "a dyadic quantizer")?.dim(),
                };
                Encoder::dyadic(*m, dim)
            }
            EncoderSpec::Orbit { boundaries } => match boundaries {
                Some(b) => Encoder::orbit(b.clone()),
                None => super::orbit_encoder(need_model(model, "an orbit encoder")?),
            },
            EncoderSpec::Transform { rotation, coords } => {
                let u = match rotation {
                    Some(rows) => Rotation::new(rows.clone())?,
                    None => {
                        let m = need_model(model, "a transform selector")?;
                        m.rotation()
                            .cloned()
                            .unwrap_or_else(|| Rotation::identity(m.dim()))
                    }
                };
                Encoder::transform(u, zero_based(coords)?)
            }
            EncoderSpec::Chain { layers } => {
                let built = layers.iter().map(|l| l.build(model)).collect::<Result<Vec<_>>>()?;
                Encoder::compose(built)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::presets;

    #[test]
    fn parses_mask() {
        let s = EncoderSpec::from_json(r#"{"type":"mask","coords":[1]}"#).unwrap();
        assert_eq!(s.build(None).unwrap(), Encoder::mask([0]));
    }

    #[test]
    fn chain_with_relabel() {
        let text = r#"{"type":"chain","layers":[
            {"type":"cells"},
            {"type":"cells","relabel":true,"index_base":0,"groups":[
                {"index":[0,0],"group":0},{"index":[1,1],"group":0},
                {"index":[0,1],"group":1},{"index":[1,0],"group":1}]},
            {"type":"selector","coords":[]}]}"#;
        let m = presets::singular_2d();
        let e = EncoderSpec::from_json(text).unwrap().build(Some(&m)).unwrap();
        assert_eq!(e.layers().len(), 3);
    }

    #[test]
    fn rejects_zero_coordinate() {
        let s = EncoderSpec::from_json(r#"{"type":"selector","coords":[0]}"#).unwrap();
        assert!(matches!(s.build(None), Err(Error::InvalidCoordinates(_))));
    }

    #[test]
    fn defaults_need_model() {
        let s = EncoderSpec::from_json(r#"{"type":"dyadic","m":2}"#).unwrap();
        assert!(s.build(None).is_err());
        let m = presets::singular_2d();
        assert_eq!(s.build(Some(&m)).unwrap(), Encoder::dyadic(2, 2).unwrap());
    }
}
