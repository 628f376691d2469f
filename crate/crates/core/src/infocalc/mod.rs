//! Exact information measures on finite tables, and Monte-Carlo risk
//! estimates for arbitrary predictors. All values are in bits.

mod exact;
mod mc;
mod report;

pub use exact::{
    cell_joint, conditional_entropy, entropy_y, ip_error, layer_losses, mi_selector, mil,
    mutual_information, optimal_decoder, pushforward, risk_exact, DecoderTable, RiskDecomposition,
};
pub use mc::{mc_gap, mc_risk, McEstimate, Predictor, TablePredictor, TruePosterior, UniformPredictor};
pub use report::MeasureRecord;

use crate::error::{Error, Result};
use crate::model::DERIVED_TOL;
use crate::units::InfoBits;

/// `-p log2 p` with `0 log 0 = 0`.
pub fn plogp(p: f64) -> f64 {
    if p > 0.0 {
        -p * p.log2()
    } else {
        0.0
    }
}

fn check_pmf(p: &[f64]) -> Result<()> {
    if let Some(&v) = p.iter().find(|v| !(**v >= 0.0)) {
        return Err(Error::NegativeProbability {
            what: "pmf".into(),
            value: v,
        });
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > DERIVED_TOL {
        return Err(Error::NotNormalized { sum });
    }
    Ok(())
}

/// Shannon entropy `-sum p log2 p`.
pub fn entropy(p: &[f64]) -> Result<InfoBits> {
    check_pmf(p)?;
    Ok(InfoBits(p.iter().map(|&v| plogp(v)).sum::<f64>().max(0.0)))
}

/// `D(p || q) = sum p log2(p / q)`; `+inf` when `p` is not absolutely
/// continuous with respect to `q`.
pub fn kl(p: &[f64], q: &[f64]) -> Result<InfoBits> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            got: q.len(),
        });
    }
    Ok(InfoBits(kl_raw(p, q)))
}

pub(crate) fn kl_raw(p: &[f64], q: &[f64]) -> f64 {
    let mut d = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a > 0.0 {
            if b <= 0.0 {
                return f64::INFINITY;
            }
            d += a * (a / b).log2();
        }
    }
    d
}

/// A finite joint table `q(u, y)` over representation symbols and classes.
#[derive(Clone, Debug, PartialEq)]
pub struct JointPmf<S = crate::encoders::Symbol> {
    symbols: Vec<S>,
    classes: usize,
    table: Vec<Vec<f64>>,
}

impl<S> JointPmf<S> {
    /// Rows are `(u, q(u, .))`. The total mass must be 1 within `1e-10`.
    pub fn new(rows: Vec<(S, Vec<f64>)>) -> Result<Self> {
        let classes = rows
            .first()
            .map(|r| r.1.len())
            .ok_or(Error::NotNormalized { sum: 0.0 })?;
        let mut symbols = Vec::with_capacity(rows.len());
        let mut table = Vec::with_capacity(rows.len());
        let mut sum = 0.0;
        for (s, row) in rows {
            if row.len() != classes {
                return Err(Error::DimensionMismatch {
                    expected: classes,
                    got: row.len(),
                });
            }
            if let Some(&v) = row.iter().find(|v| !(**v >= 0.0)) {
                return Err(Error::NegativeProbability {
                    what: "joint table".into(),
                    value: v,
                });
            }
            sum += row.iter().sum::<f64>();
            symbols.push(s);
            table.push(row);
        }
        if (sum - 1.0).abs() > DERIVED_TOL {
            return Err(Error::NotNormalized { sum });
        }
        Ok(JointPmf {
            symbols,
            classes,
            table,
        })
    }

    pub fn symbols(&self) -> &[S] {
        &self.symbols
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn rows(&self) -> impl Iterator<Item = (&S, &[f64])> {
        self.symbols.iter().zip(self.table.iter().map(|r| r.as_slice()))
    }

    pub fn marginal_u(&self) -> Vec<f64> {
        self.table.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn marginal_y(&self) -> Vec<f64> {
        let mut p = vec![0.0; self.classes];
        for row in &self.table {
            for (a, b) in p.iter_mut().zip(row) {
                *a += b;
            }
        }
        p
    }

    /// `mu_{Y|U}(. | u)` for row `k`; `None` when the row has no mass.
    pub fn posterior(&self, k: usize) -> Option<Vec<f64>> {
        let row = &self.table[k];
        let s: f64 = row.iter().sum();
        (s > 0.0).then(|| row.iter().map(|v| v / s).collect())
    }

    pub fn entropy_u(&self) -> InfoBits {
        InfoBits(self.marginal_u().into_iter().map(plogp).sum::<f64>().max(0.0))
    }

    pub fn entropy_y(&self) -> InfoBits {
        InfoBits(self.marginal_y().into_iter().map(plogp).sum::<f64>().max(0.0))
    }

    /// `H(Y|U) = sum_{u,y} q(u,y) log2(q(u) / q(u,y))`.
    pub fn conditional_entropy(&self) -> InfoBits {
        let mut h = 0.0;
        for row in &self.table {
            let pu: f64 = row.iter().sum();
            for &q in row {
                if q > 0.0 {
                    h += q * (pu / q).log2();
                }
            }
        }
        InfoBits(h.max(0.0))
    }

    /// `I(U;Y) = H(Y) - H(Y|U)`.
    pub fn mi(&self) -> InfoBits {
        self.entropy_y() - self.conditional_entropy()
    }

    /// Merges rows through a relabeling `u -> f(u)`.
    pub fn coarsen<T: Ord + Clone>(&self, f: impl Fn(&S) -> T) -> JointPmf<T> {
        let mut merged: std::collections::BTreeMap<T, Vec<f64>> = Default::default();
        for (s, row) in self.symbols.iter().zip(&self.table) {
            let acc = merged.entry(f(s)).or_insert_with(|| vec![0.0; self.classes]);
            for (a, b) in acc.iter_mut().zip(row) {
                *a += b;
            }
        }
        let (symbols, table) = merged.into_iter().unzip();
        JointPmf {
            symbols,
            classes: self.classes,
            table,
        }
    }
}

/// `I(U;Y)` of a joint table.
pub fn mi<S>(joint: &JointPmf<S>) -> InfoBits {
    joint.mi()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entropy_examples() {
        assert!((entropy(&[0.2, 0.5, 0.3]).unwrap().bits() - 1.485_475).abs() < 1e-6);
        assert_eq!(entropy(&[1.0, 0.0, 0.0]).unwrap().bits(), 0.0);
        let u = 1.0 / 3.0;
        assert!((entropy(&[u, u, u]).unwrap().bits() - 3f64.log2()).abs() < 1e-12);
        assert!(matches!(entropy(&[0.5, 0.6]), Err(Error::NotNormalized { .. })));
    }

    #[test]
    fn kl_examples() {
        assert_eq!(kl(&[0.3, 0.7], &[0.3, 0.7]).unwrap().bits(), 0.0);
        assert_eq!(kl(&[1.0, 0.0], &[0.5, 0.5]).unwrap().bits(), 1.0);
        assert!(kl(&[0.5, 0.5], &[1.0, 0.0]).unwrap().is_infinite());
    }

    #[test]
    fn product_table_has_zero_mi() {
        let pu = [0.1, 0.6, 0.3];
        let py = [0.25, 0.75];
        let rows: Vec<(usize, Vec<f64>)> = pu
            .iter()
            .enumerate()
            .map(|(k, a)| (k, py.iter().map(|b| a * b).collect()))
            .collect();
        let j = JointPmf::new(rows).unwrap();
        assert!(j.mi().bits().abs() < 1e-15);
    }

    #[test]
    fn coarsen_to_one_symbol() {
        let j = JointPmf::new(vec![(0, vec![0.5, 0.0]), (1, vec![0.0, 0.5])]).unwrap();
        assert!((j.mi().bits() - 1.0).abs() < 1e-15);
        let c = j.coarsen(|_| ());
        assert_eq!(c.len(), 1);
        assert_eq!(c.mi().bits(), 0.0);
    }
}
