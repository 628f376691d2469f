#![allow(dead_code)]

use std::collections::BTreeMap;

use infolab::encoders::CellQuantizer;
use infolab::infocalc::DecoderTable;
use infolab::model::{CellIndex, HistogramModel};
use infolab::Encoder;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Clone, Copy, Debug)]
pub struct Shape {
    pub min_dim: usize,
    pub max_dim: usize,
    pub min_cells_per_axis: usize,
    pub max_cells_per_axis: usize,
    pub max_classes: usize,
    /// All axes share one boundary array.
    pub homogeneous: bool,
    /// Boundaries on the `1/4` lattice inside `[-2, 2]`.
    pub dyadic_boundaries: bool,
    /// Probability that a `p_{i|y}` entry is forced to zero.
    pub sparsity: f64,
}

impl Default for Shape {
    fn default() -> Self {
        Shape {
            min_dim: 1,
            max_dim: 3,
            min_cells_per_axis: 1,
            max_cells_per_axis: 3,
            max_classes: 3,
            homogeneous: false,
            dyadic_boundaries: false,
            sparsity: 0.3,
        }
    }
}

fn boundaries(rng: &mut ChaCha8Rng, cells: usize, dyadic: bool) -> Vec<f64> {
    if dyadic {
        // distinct points of {-8..8}/4, sorted
        let mut pts: Vec<i32> = (-8..=8).collect();
        for i in (1..pts.len()).rev() {
            let j = rng.random_range(0..=i);
            pts.swap(i, j);
        }
        let mut b: Vec<i32> = pts[..cells + 1].to_vec();
        b.sort_unstable();
        b.into_iter().map(|v| v as f64 / 4.0).collect()
    } else {
        let mut x = rng.random_range(-2.0..1.0);
        let mut b = vec![x];
        for _ in 0..cells {
            x += rng.random_range(0.1..1.5);
            b.push(x);
        }
        b
    }
}

pub fn random_pmf(rng: &mut ChaCha8Rng, n: usize, sparsity: f64) -> Vec<f64> {
    let mut w: Vec<f64> = (0..n)
        .map(|_| if rng.random_bool(sparsity) { 0.0 } else { rng.random_range(0.05..1.0) })
        .collect();
    if w.iter().all(|&v| v == 0.0) {
        w[rng.random_range(0..n)] = 1.0;
    }
    let s: f64 = w.iter().sum();
    w.iter().map(|v| v / s).collect()
}

pub fn random_model(rng: &mut ChaCha8Rng, shape: Shape) -> HistogramModel {
    let d = rng.random_range(shape.min_dim..=shape.max_dim);
    let m = rng.random_range(2..=shape.max_classes.max(2));
    let axes: Vec<Vec<f64>> = if shape.homogeneous {
        let k = rng.random_range(shape.min_cells_per_axis..=shape.max_cells_per_axis);
        let b = boundaries(rng, k, shape.dyadic_boundaries);
        vec![b; d]
    } else {
        (0..d)
            .map(|_| {
                let k = rng.random_range(shape.min_cells_per_axis..=shape.max_cells_per_axis);
                boundaries(rng, k, shape.dyadic_boundaries)
            })
            .collect()
    };
    let counts: Vec<usize> = axes.iter().map(|a| a.len() - 1).collect();
    let cells = all_indices(&counts);
    let prior = random_pmf(rng, m, 0.0);
    let mut entries = Vec::new();
    for y in 0..m {
        let p = random_pmf(rng, cells.len(), shape.sparsity);
        for (idx, v) in cells.iter().zip(p) {
            if v > 0.0 {
                entries.push((idx.clone(), y, v));
            }
        }
    }
    HistogramModel::from_entries(axes, prior, &entries).expect("valid random model")
}

pub fn all_indices(counts: &[usize]) -> Vec<CellIndex> {
    let mut out = vec![Vec::new()];
    for &n in counts {
        out = out
            .into_iter()
            .flat_map(|p: Vec<usize>| {
                (0..n).map(move |i| {
                    let mut q = p.clone();
                    q.push(i);
                    q
                })
            })
            .collect();
    }
    out
}

/// A uniformly drawn map from the model's grid cells to `0..groups`.
pub fn random_grouping(rng: &mut ChaCha8Rng, model: &HistogramModel, groups: usize) -> BTreeMap<Vec<usize>, i64> {
    model
        .grid()
        .indices()
        .map(|idx| (idx, rng.random_range(0..groups) as i64))
        .collect()
}

pub fn grouped_encoder(model: &HistogramModel, groups: BTreeMap<Vec<usize>, i64>) -> Encoder {
    Encoder::Cells(CellQuantizer::grouped(model.grid().clone(), groups).unwrap())
}

/// A random map `0..from -> 0..to`, as a relabeling layer.
pub fn random_relabel(rng: &mut ChaCha8Rng, from: usize, to: usize) -> Encoder {
    let map = (0..from as i64).map(|g| (vec![g], rng.random_range(0..to) as i64)).collect();
    Encoder::Cells(CellQuantizer::relabel(map))
}

/// A random encoder from the exactly computable taxonomy of an unrotated model.
pub fn random_encoder(rng: &mut ChaCha8Rng, model: &HistogramModel) -> Encoder {
    let d = model.dim();
    match rng.random_range(0..4) {
        0 => {
            let coords: Vec<usize> = (0..d).filter(|_| rng.random_bool(0.5)).collect();
            Encoder::Selector(coords)
        }
        1 => Encoder::mask((0..d).filter(|_| rng.random_bool(0.5))),
        2 => {
            let k = rng.random_range(1..=model.grid().num_cells());
            let g = random_grouping(rng, model, k);
            grouped_encoder(model, g)
        }
        _ => Encoder::dyadic(rng.random_range(1..=2), d).unwrap(),
    }
}

/// A decoder with strictly positive random rows on every symbol of `base`.
pub fn random_decoder(rng: &mut ChaCha8Rng, base: &DecoderTable) -> DecoderTable {
    let m = base.classes();
    let rows = base
        .rows()
        .map(|(s, _)| (s.clone(), random_pmf(rng, m, 0.0)))
        .collect();
    DecoderTable::new(m, rows).unwrap()
}

/// `base` mixed with a random positive pmf on one positive-mass symbol.
pub fn perturbed_decoder(rng: &mut ChaCha8Rng, base: &DecoderTable, eps: f64) -> DecoderTable {
    let m = base.classes();
    let n = base.len();
    let target = rng.random_range(0..n);
    let rows = base
        .rows()
        .enumerate()
        .map(|(k, (s, r))| {
            let row = if k == target {
                let q = random_pmf(rng, m, 0.0);
                r.iter().zip(&q).map(|(a, b)| (1.0 - eps) * a + eps * b).collect()
            } else {
                r.to_vec()
            };
            (s.clone(), row)
        })
        .collect();
    DecoderTable::new(m, rows).unwrap()
}

/// Fixed-seed proptest configuration so suites are reproducible.
pub fn config(cases: u32) -> proptest::test_runner::Config {
    proptest::test_runner::Config {
        cases,
        rng_seed: proptest::test_runner::RngSeed::Fixed(0x1f0_1ab),
        failure_persistence: None,
        ..Default::default()
    }
}
