use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{kl_raw, JointPmf};
use crate::encoders::{pushforward_rows, trace_rows, Encoder, Symbol};
use crate::error::{Error, Result};
use crate::model::{CellIndex, HistogramModel, DERIVED_TOL};
use crate::units::InfoBits;

/// The joint table of `(cell, Y)` over the support cells.
pub fn cell_joint(model: &HistogramModel) -> JointPmf<CellIndex> {
    let joint = model.joint();
    let rows: Vec<(CellIndex, Vec<f64>)> = joint
        .cells()
        .map(|(idx, _)| (idx.clone(), joint.cell_mass(idx)))
        .collect();
    JointPmf::new(rows).expect("validated models have a normalized cell table")
}

/// `I(X;Y)`. The posterior is constant on cells, so this equals `I(cell; Y)`.
pub fn mutual_information(model: &HistogramModel) -> InfoBits {
    cell_joint(model).mi()
}

pub fn entropy_y(model: &HistogramModel) -> InfoBits {
    InfoBits(model.prior().iter().map(|&p| super::plogp(p)).sum())
}

/// `H(Y|X)`, the equivocation.
pub fn conditional_entropy(model: &HistogramModel) -> InfoBits {
    cell_joint(model).conditional_entropy()
}

/// Exact joint table of `(enc(X), Y)`.
pub fn pushforward(model: &HistogramModel, enc: &Encoder) -> Result<JointPmf> {
    JointPmf::new(pushforward_rows(model, enc)?)
}

/// `I(X_j; Y)` for a coordinate selector, by marginalizing `p_{i|y}` onto the
/// selected axes.
pub fn mi_selector(model: &HistogramModel, j: &[usize]) -> Result<InfoBits> {
    let d = model.dim();
    if j.windows(2).any(|w| w[0] >= w[1]) || j.iter().any(|&k| k >= d) {
        return Err(Error::InvalidCoordinates(format!(
            "{j:?} must be strictly increasing within 0..{d}"
        )));
    }
    if j.is_empty() {
        return Ok(InfoBits::ZERO);
    }
    if j.len() == d {
        return Ok(mutual_information(model));
    }
    if model.rotation().is_some() {
        return Err(Error::NotExactlyComputable(
            "coordinate selector on a rotated model".into(),
        ));
    }
    let m = model.classes();
    let prior = model.prior();
    let mut marg: BTreeMap<Vec<usize>, Vec<f64>> = BTreeMap::new();
    for (idx, p) in model.joint().cells() {
        let key: Vec<usize> = j.iter().map(|&k| idx[k]).collect();
        let acc = marg.entry(key).or_insert_with(|| vec![0.0; m]);
        for (a, b) in acc.iter_mut().zip(p) {
            *a += b;
        }
    }
    let mut mi = 0.0;
    for cond in marg.values() {
        let ps: f64 = cond.iter().zip(prior).map(|(c, p)| c * p).sum();
        for (y, &c) in cond.iter().enumerate() {
            if c > 0.0 && prior[y] > 0.0 {
                mi += prior[y] * c * (c / ps).log2();
            }
        }
    }
    Ok(InfoBits(mi))
}

/// Mutual information loss `I(X;Y) - I(enc(X);Y) = I(X;Y|U)`.
pub fn mil(model: &HistogramModel, enc: &Encoder) -> Result<InfoBits> {
    Ok(mutual_information(model) - pushforward(model, enc)?.mi())
}

/// Information-projection error of the class of models for which `enc` is
/// sufficient. Equals the mutual information loss.
pub fn ip_error(model: &HistogramModel, enc: &Encoder) -> Result<InfoBits> {
    mil(model, enc)
}

/// A stochastic decoder: one predictive pmf per representation symbol.
#[derive(Clone, Debug, PartialEq)]
pub struct DecoderTable {
    classes: usize,
    rows: BTreeMap<Symbol, Vec<f64>>,
}

impl DecoderTable {
    pub fn new(classes: usize, rows: BTreeMap<Symbol, Vec<f64>>) -> Result<Self> {
        let mut t = DecoderTable {
            classes,
            rows: BTreeMap::new(),
        };
        for (s, r) in rows {
            t.insert(s, r)?;
        }
        Ok(t)
    }

    pub fn insert(&mut self, symbol: Symbol, row: Vec<f64>) -> Result<()> {
        if row.len() != self.classes {
            return Err(Error::DimensionMismatch {
                expected: self.classes,
                got: row.len(),
            });
        }
        if let Some(&v) = row.iter().find(|v| !(**v >= 0.0)) {
            return Err(Error::NegativeProbability {
                what: format!("decoder row {symbol}"),
                value: v,
            });
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > DERIVED_TOL {
            return Err(Error::NotNormalized { sum });
        }
        self.rows.insert(symbol, row);
        Ok(())
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn get(&self, symbol: &Symbol) -> Option<&[f64]> {
        self.rows.get(symbol).map(|r| r.as_slice())
    }

    pub fn rows(&self) -> impl Iterator<Item = (&Symbol, &[f64])> {
        self.rows.iter().map(|(s, r)| (s, r.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// `mu_{Y|U}` read off the pushforward table.
pub fn optimal_decoder(model: &HistogramModel, enc: &Encoder) -> Result<DecoderTable> {
    let joint = pushforward(model, enc)?;
    let mut rows = BTreeMap::new();
    for (k, s) in joint.symbols().iter().enumerate() {
        if let Some(p) = joint.posterior(k) {
            rows.insert(s.clone(), p);
        }
    }
    DecoderTable::new(joint.classes(), rows)
}

/// Exact cross-entropy risk of an encoder-decoder pair and its split.
///
/// `total` is computed directly as `E[-log2 v(Y|U)]`; the three terms are
/// computed independently, so `residual()` measures the identity's slack.
/// A decoder that zeroes a positive-mass `(u, y)` gives `+inf` in `total`
/// and `decoder_effect`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RiskDecomposition {
    pub total: InfoBits,
    pub conditional_entropy: InfoBits,
    pub encoder_effect: InfoBits,
    pub decoder_effect: InfoBits,
}

impl RiskDecomposition {
    pub fn residual(&self) -> f64 {
        self.total.bits()
            - (self.conditional_entropy.bits() + self.encoder_effect.bits() + self.decoder_effect.bits())
    }

    pub fn is_infinite(&self) -> bool {
        self.total.is_infinite()
    }
}

pub fn risk_exact(model: &HistogramModel, enc: &Encoder, dec: &DecoderTable) -> Result<RiskDecomposition> {
    let joint = pushforward(model, enc)?;
    if dec.classes() != joint.classes() {
        return Err(Error::DimensionMismatch {
            expected: joint.classes(),
            got: dec.classes(),
        });
    }
    let mut total = 0.0;
    let mut dec_effect = 0.0;
    for (k, (u, row)) in joint.rows().enumerate() {
        let Some(post) = joint.posterior(k) else { continue };
        let pu: f64 = row.iter().sum();
        let v = dec
            .get(u)
            .ok_or_else(|| Error::MissingDecoderRow(u.to_string()))?;
        for (&q, &vy) in row.iter().zip(v) {
            if q > 0.0 {
                total += if vy > 0.0 { -q * vy.log2() } else { f64::INFINITY };
            }
        }
        dec_effect += pu * kl_raw(&post, v);
    }
    let ix = mutual_information(model);
    Ok(RiskDecomposition {
        total: InfoBits(total),
        conditional_entropy: conditional_entropy(model),
        encoder_effect: ix - joint.mi(),
        decoder_effect: InfoBits(dec_effect),
    })
}

/// Per-layer losses `(I(X;Y|U_1), I(U_1;Y|U_2), ..., I(U_{K-1};Y|U_K))` of a
/// layered encoder, where layer `k` acts on the output of layer `k-1`.
///
/// The symbol paths of the exact trace are checked for coarsening: every
/// discrete symbol of layer `k-1` must map to a single symbol of layer `k`.
pub fn layer_losses(model: &HistogramModel, layers: &[Encoder]) -> Result<Vec<InfoBits>> {
    let rows = trace_rows(model, layers)?;
    for j in 1..layers.len() {
        let mut image: BTreeMap<&Symbol, &Symbol> = BTreeMap::new();
        for (path, _) in &rows {
            if let Symbol::Label(_) = path[j - 1] {
                if let Some(prev) = image.insert(&path[j - 1], &path[j]) {
                    if prev != &path[j] {
                        return Err(Error::NotACoarsening { layer: j + 1 });
                    }
                }
            }
        }
    }
    let joint = JointPmf::new(rows)?;
    let mut prev = mutual_information(model);
    let mut out = Vec::with_capacity(layers.len());
    for j in 0..layers.len() {
        let cur = joint.coarsen(|path| path[j].clone()).mi();
        out.push(prev - cur);
        prev = cur;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoders::CellQuantizer;
    use crate::model::presets;

    #[test]
    fn singular_measures() {
        let m = presets::singular_2d();
        assert!((mutual_information(&m).bits() - 1.0).abs() < 1e-12);
        assert!(mi_selector(&m, &[0]).unwrap().bits().abs() < 1e-12);
        assert!(mil(&m, &Encoder::full_grid(&m)).unwrap().bits().abs() < 1e-12);
        assert!((mil(&m, &Encoder::constant()).unwrap().bits() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn optimal_decoder_rows() {
        let m = presets::singular_2d();
        let dec = optimal_decoder(&m, &Encoder::full_grid(&m)).unwrap();
        let u = Symbol::Label(crate::encoders::Label::Index(vec![0, 0]));
        assert_eq!(dec.get(&u).unwrap(), &[1.0, 0.0]);
    }

    #[test]
    fn risk_with_zeroed_row_is_infinite() {
        let m = presets::singular_2d();
        let enc = Encoder::constant();
        let mut dec = optimal_decoder(&m, &enc).unwrap();
        let u = dec.rows().next().unwrap().0.clone();
        dec.insert(u, vec![1.0, 0.0]).unwrap();
        let r = risk_exact(&m, &enc, &dec).unwrap();
        assert!(r.is_infinite());
        assert!(r.decoder_effect.is_infinite());
    }

    #[test]
    fn missing_row_reported() {
        let m = presets::singular_2d();
        let dec = DecoderTable::new(2, BTreeMap::new()).unwrap();
        assert!(matches!(
            risk_exact(&m, &Encoder::constant(), &dec),
            Err(Error::MissingDecoderRow(_))
        ));
    }

    #[test]
    fn grid_merge_constant_chain() {
        let m = presets::singular_2d();
        let xor: BTreeMap<Vec<i64>, i64> = [
            (vec![0, 0], 0),
            (vec![1, 1], 0),
            (vec![0, 1], 1),
            (vec![1, 0], 1),
        ]
        .into_iter()
        .collect();
        let layers = vec![
            Encoder::full_grid(&m),
            Encoder::Cells(CellQuantizer::relabel(xor)),
            Encoder::constant(),
        ];
        let l = layer_losses(&m, &layers).unwrap();
        let want = [0.0, 0.0, 1.0];
        for (a, b) in l.iter().zip(want) {
            assert!((a.bits() - b).abs() < 1e-12, "{l:?}");
        }
        let rows: BTreeMap<Vec<i64>, i64> = [
            (vec![0, 0], 0),
            (vec![0, 1], 0),
            (vec![1, 0], 1),
            (vec![1, 1], 1),
        ]
        .into_iter()
        .collect();
        let layers = vec![
            Encoder::full_grid(&m),
            Encoder::Cells(CellQuantizer::relabel(rows)),
            Encoder::constant(),
        ];
        let l = layer_losses(&m, &layers).unwrap();
        let want = [0.0, 1.0, 0.0];
        for (a, b) in l.iter().zip(want) {
            assert!((a.bits() - b).abs() < 1e-12, "{l:?}");
        }
    }
}
