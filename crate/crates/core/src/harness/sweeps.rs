use std::path::Path;

use rayon::prelude::*;

use super::{resolve_model, thread_pool, SweepSpec};
use crate::encoders::{Encoder, Label, Symbol};
use crate::error::{Error, Result};
use crate::ib::{budget_grid, cell_entropy, ib_curve, write_curves_csv, IBCurve, Solver, EXHAUSTIVE_LIMIT};
use crate::infocalc::{
    conditional_entropy, entropy_y, mi_selector, mil, mutual_information, pushforward, MeasureRecord,
};
use crate::io::write_csv_atomic;
use crate::model::HistogramModel;

/// Refuse dyadic levels whose exact pushforward would track more states.
const DYADIC_STATE_BUDGET: f64 = 2e7;

#[derive(Clone, Debug, PartialEq)]
pub struct DyadicRow {
    pub model: String,
    pub m: u32,
    pub alphabet_size: f64,
    pub mi_bits: f64,
    pub ix_bits: f64,
    pub loss_bits: f64,
    /// Probability mass inside `[-m, m)^d`.
    pub coverage: f64,
}

fn dyadic_state_estimate(model: &HistogramModel, m: u32) -> f64 {
    let s = (m as f64).exp2();
    model
        .joint()
        .cells()
        .map(|(idx, _)| {
            model
                .grid()
                .cell_bounds(idx)
                .iter()
                .map(|(lo, hi)| (hi - lo) * s + 2.0)
                .product::<f64>()
        })
        .sum()
}

/// `I(eta_m(X); Y)` for `m = 1..=m_max` with the in-box coverage.
pub fn dyadic_sweep(id: &str, model: &HistogramModel, m_max: u32) -> Result<Vec<DyadicRow>> {
    let ix = mutual_information(model).bits();
    let mut rows = Vec::new();
    for enc in crate::encoders::dyadic_family(model.dim(), m_max)? {
        let Encoder::Dyadic(q) = &enc else { unreachable!() };
        let est = dyadic_state_estimate(model, q.m);
        if est > DYADIC_STATE_BUDGET {
            return Err(Error::TooLarge {
                cells: est as usize,
                limit: DYADIC_STATE_BUDGET as usize,
            });
        }
        let joint = pushforward(model, &enc)?;
        let outer: f64 = joint
            .rows()
            .filter(|(s, _)| **s == Symbol::Label(Label::Outer))
            .map(|(_, r)| r.iter().sum::<f64>())
            .sum();
        let mi = joint.mi().bits();
        rows.push(DyadicRow {
            model: id.to_string(),
            m: q.m,
            alphabet_size: q.alphabet_size(),
            mi_bits: mi,
            ix_bits: ix,
            loss_bits: ix - mi,
            coverage: 1.0 - outer,
        });
    }
    Ok(rows)
}

/// IB curves on `points + 1` budgets over `[0, H(I)]`: exhaustive and greedy
/// when the alphabet is small enough, greedy only otherwise.
pub fn ib_sweep(model: &HistogramModel, points: usize) -> Result<Vec<IBCurve>> {
    let budgets = budget_grid(model, points);
    let mut curves = Vec::new();
    if model.joint().num_support_cells() <= EXHAUSTIVE_LIMIT {
        curves.push(ib_curve(model, &budgets, Solver::Exhaustive)?);
    }
    curves.push(ib_curve(model, &budgets, Solver::Greedy)?);
    Ok(curves)
}

#[derive(Clone, Debug)]
pub struct SweepOutput {
    pub dyadic: Vec<DyadicRow>,
    pub ib: Vec<(String, IBCurve)>,
}

/// Runs both sweeps for every model of `spec` and writes `dyadic.csv` and
/// `ib.csv` under `out_dir`.
pub fn run_expressiveness_sweeps(spec: &SweepSpec, out_dir: &Path) -> Result<SweepOutput> {
    let models = spec
        .models
        .iter()
        .map(|m| resolve_model(m))
        .collect::<Result<Vec<_>>>()?;
    let pool = thread_pool(spec.workers)?;
    let per_model: Vec<(Vec<DyadicRow>, Vec<(String, IBCurve)>)> = pool.install(|| {
        models
            .par_iter()
            .map(|(id, m)| {
                let d = dyadic_sweep(id, m, spec.m_max)?;
                let ib = ib_sweep(m, spec.ib_points)?
                    .into_iter()
                    .map(|c| (id.clone(), c))
                    .collect();
                Ok((d, ib))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mut out = SweepOutput {
        dyadic: Vec::new(),
        ib: Vec::new(),
    };
    for (d, ib) in per_model {
        out.dyadic.extend(d);
        out.ib.extend(ib);
    }
    write_dyadic_csv(&out_dir.join("dyadic.csv"), &out.dyadic)?;
    write_curves_csv(&out_dir.join("ib.csv"), &out.ib)?;
    Ok(out)
}

pub fn write_dyadic_csv(path: &Path, rows: &[DyadicRow]) -> Result<()> {
    write_csv_atomic(path, |w| {
        w.write_record([
            "model",
            "m",
            "alphabet_size",
            "I_UY_bits",
            "I_XY_bits",
            "loss_bits",
            "coverage",
        ])?;
        for r in rows {
            w.write_record([
                r.model.clone(),
                r.m.to_string(),
                r.alphabet_size.to_string(),
                r.mi_bits.to_string(),
                r.ix_bits.to_string(),
                r.loss_bits.to_string(),
                r.coverage.to_string(),
            ])?;
        }
        Ok(())
    })
}

/// Standard measures of a model: `I(X;Y)`, `H(Y)`, `H(Y|X)`, `H(I)`, the
/// MI of every coordinate subset for `d <= 3`, and the losses of the
/// first-coordinate mask and (for `d >= 5`) the `1..5` selector.
pub fn measure_records(id: &str, model: &HistogramModel) -> Result<Vec<MeasureRecord>> {
    let mut out = vec![
        MeasureRecord::new("I(X;Y)", mutual_information(model).bits(), id, "identity"),
        MeasureRecord::new("H(Y)", entropy_y(model).bits(), id, "identity"),
        MeasureRecord::new("H(Y|X)", conditional_entropy(model).bits(), id, "identity"),
        MeasureRecord::new("H(I)", cell_entropy(model).bits(), id, "cells"),
    ];
    let d = model.dim();
    if d <= 3 && model.rotation().is_none() {
        for bits in 1..(1usize << d) - 1 {
            let coords: Vec<usize> = (0..d).filter(|k| bits >> k & 1 == 1).collect();
            let enc = Encoder::Selector(coords.clone());
            out.push(MeasureRecord::new(
                "I(U;Y)",
                mi_selector(model, &coords)?.bits(),
                id,
                &enc.describe(),
            ));
        }
    }
    if model.rotation().is_none() {
        let mask = Encoder::mask([0]);
        out.push(MeasureRecord::new("MIL", mil(model, &mask)?.bits(), id, &mask.describe()));
        if d >= 5 {
            let sel = Encoder::Selector((0..5).collect());
            out.push(MeasureRecord::new("MIL", mil(model, &sel)?.bits(), id, &sel.describe()));
        }
    }
    Ok(out)
}

pub fn write_measures_csv(path: &Path, records: &[MeasureRecord]) -> Result<()> {
    write_csv_atomic(path, |w| {
        w.write_record(["measure", "value_bits", "stderr", "model_id", "encoder_id"])?;
        for r in records {
            w.write_record([
                r.measure.clone(),
                r.value_bits.to_string(),
                r.stderr.map(|s| s.to_string()).unwrap_or_default(),
                r.model_id.clone(),
                r.encoder_id.clone(),
            ])?;
        }
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::presets;

    #[test]
    fn singular_dyadic_exact_from_level_one() {
        let rows = dyadic_sweep("s", &presets::singular_2d(), 3).unwrap();
        for r in rows {
            assert!((r.mi_bits - 1.0).abs() < 1e-12);
            assert_eq!(r.coverage, 1.0);
        }
    }

    #[test]
    fn demo_dyadic_reaches_full_information() {
        let m = presets::demonstration_2d();
        let rows = dyadic_sweep("d", &m, 4).unwrap();
        assert!(rows.windows(2).all(|w| w[1].mi_bits >= w[0].mi_bits - 1e-12));
        let last = rows.last().unwrap();
        assert!(last.loss_bits.abs() < 1e-12, "{last:?}");
    }

    #[test]
    fn sweeps_write_files() {
        let dir = tempfile::tempdir().unwrap();
        let spec = SweepSpec {
            models: vec!["2d-singular".into()],
            m_max: 2,
            ib_points: 4,
            workers: 1,
        };
        let out = run_expressiveness_sweeps(&spec, dir.path()).unwrap();
        assert_eq!(out.dyadic.len(), 2);
        assert_eq!(out.ib.len(), 2);
        let text = std::fs::read_to_string(dir.path().join("ib.csv")).unwrap();
        assert!(text.starts_with("B_bits,H_U_bits,I_UY_bits,loss_bits,solver,groups,model"));
    }

    #[test]
    fn study_measures() {
        let recs = measure_records("study", &presets::study()).unwrap();
        let mask = recs.iter().find(|r| r.encoder_id == "mask(1)").unwrap();
        assert!((mask.value_bits - 0.650).abs() < 1e-3);
    }
}
