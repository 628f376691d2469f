//! The encoder taxonomy.
//!
//! Every encoder is a deterministic map on representations. Vector-valued
//! encoders (selectors, masks, transform selectors) keep a real vector;
//! quantizers (cell groupings, dyadic grids, orbit labels) emit a discrete
//! [`Label`]. Chains apply their layers left to right. All variants support
//! an exact pushforward of histogram models (see [`exact`]).

pub mod exact;
mod spec;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

pub use exact::{pushforward_rows, symbol_of, trace_rows, Symbol};
pub use spec::EncoderSpec;

use crate::error::{Error, Result};
use crate::model::{locate_on_axis, BoundaryGrid, HistogramModel, Rotation, ORTHONORMAL_TOL};

/// A discrete representation symbol.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    Index(Vec<i64>),
    /// The unbounded outer cell of a quantizer.
    Outer,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Index(v) => {
                let parts: Vec<String> = v.iter().map(|i| i.to_string()).collect();
                write!(f, "({})", parts.join(","))
            }
            Label::Outer => f.write_str("outer"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Representation {
    Vector(Vec<f64>),
    Label(Label),
}

impl Representation {
    pub fn as_vector(&self) -> Option<&[f64]> {
        match self {
            Representation::Vector(v) => Some(v),
            Representation::Label(_) => None,
        }
    }
}

/// Quantizer by model-style grid cells, optionally followed by a grouping.
///
/// Without a grid the quantizer acts on discrete labels and is a pure
/// relabeling; this is how coarsening layers of a chain are expressed.
#[derive(Clone, Debug, PartialEq)]
pub struct CellQuantizer {
    grid: Option<BoundaryGrid>,
    groups: Option<BTreeMap<Vec<i64>, i64>>,
}

impl CellQuantizer {
    /// One symbol per grid cell.
    pub fn identity(grid: BoundaryGrid) -> Self {
        CellQuantizer {
            grid: Some(grid),
            groups: None,
        }
    }

    /// Grid cells merged into groups; the grouping must cover every cell.
    pub fn grouped(grid: BoundaryGrid, groups: BTreeMap<Vec<usize>, i64>) -> Result<Self> {
        for idx in grid.indices() {
            if !groups.contains_key(&idx) {
                return Err(Error::InvalidEncoder(format!("grouping misses cell {idx:?}")));
            }
        }
        if let Some(bad) = groups.keys().find(|k| !grid.contains_index(k)) {
            return Err(Error::InvalidEncoder(format!("grouping names unknown cell {bad:?}")));
        }
        let groups = groups
            .into_iter()
            .map(|(k, g)| (k.into_iter().map(|i| i as i64).collect(), g))
            .collect();
        Ok(CellQuantizer {
            grid: Some(grid),
            groups: Some(groups),
        })
    }

    /// A relabeling of discrete symbols `Index(key) -> Index([group])`.
    pub fn relabel(groups: BTreeMap<Vec<i64>, i64>) -> Self {
        CellQuantizer {
            grid: None,
            groups: Some(groups),
        }
    }

    pub fn grid(&self) -> Option<&BoundaryGrid> {
        self.grid.as_ref()
    }

    pub fn groups(&self) -> Option<&BTreeMap<Vec<i64>, i64>> {
        self.groups.as_ref()
    }

    fn map_index(&self, idx: Vec<i64>) -> Result<Label> {
        match &self.groups {
            None => Ok(Label::Index(idx)),
            Some(g) => g
                .get(&idx)
                .map(|&v| Label::Index(vec![v]))
                .ok_or_else(|| Error::InvalidEncoder(format!("grouping has no entry for {idx:?}"))),
        }
    }

    fn map_label(&self, label: &Label) -> Result<Label> {
        match label {
            Label::Outer => Ok(Label::Outer),
            Label::Index(v) => self.map_index(v.clone()),
        }
    }
}

/// Level-`m` dyadic partition of `R^d`: cubes of side `2^-m` tiling
/// `[-m, m)^d`, plus the complement as a single outer cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DyadicQuantizer {
    pub m: u32,
    pub dim: usize,
}

impl DyadicQuantizer {
    pub fn scale(&self) -> f64 {
        (self.m as f64).exp2()
    }

    /// Cells per axis inside `[-m, m)`: `m 2^{m+1}`.
    pub fn cells_per_axis(&self) -> u64 {
        (self.m as u64) << (self.m + 1)
    }

    /// `(m 2^{m+1})^d + 1`, including the outer cell.
    pub fn alphabet_size(&self) -> f64 {
        (self.cells_per_axis() as f64).powi(self.dim as i32) + 1.0
    }

    fn index_range(&self) -> (i64, i64) {
        let half = (self.cells_per_axis() / 2) as i64;
        (-half, half - 1)
    }
}

/// Maximal invariant for coordinate permutations: the multiset of per-axis
/// cell indices on a common boundary array, as a sorted tuple.
#[derive(Clone, Debug, PartialEq)]
pub struct OrbitEncoder {
    pub boundaries: Vec<f64>,
}

/// `x -> (U^T x)_coords`.
#[derive(Clone, Debug, PartialEq)]
pub struct TransformSelector {
    pub rotation: Rotation,
    pub coords: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Encoder {
    /// Keep the listed coordinates (0-based, strictly increasing). The empty
    /// selector is the constant encoder.
    Selector(Vec<usize>),
    /// Set the listed coordinates to zero.
    Mask(BTreeSet<usize>),
    Cells(CellQuantizer),
    Dyadic(DyadicQuantizer),
    Orbit(OrbitEncoder),
    Transform(TransformSelector),
    Chain(Vec<Encoder>),
}

/// Static shape of a representation, used to validate chains.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Shape {
    Vector(Option<usize>),
    Label,
}

fn strictly_increasing(coords: &[usize]) -> bool {
    coords.windows(2).all(|w| w[0] < w[1])
}

impl Encoder {
    pub fn selector(coords: Vec<usize>) -> Result<Self> {
        if !strictly_increasing(&coords) {
            return Err(Error::InvalidCoordinates(format!(
                "selector coordinates {coords:?} are not strictly increasing"
            )));
        }
        Ok(Encoder::Selector(coords))
    }

    /// Maps every input to the same symbol.
    pub fn constant() -> Self {
        Encoder::Selector(Vec::new())
    }

    pub fn mask(coords: impl IntoIterator<Item = usize>) -> Self {
        Encoder::Mask(coords.into_iter().collect())
    }

    /// Identity quantizer on a model's own cells.
    pub fn full_grid(model: &HistogramModel) -> Self {
        Encoder::Cells(CellQuantizer::identity(model.grid().clone()))
    }

    pub fn dyadic(m: u32, dim: usize) -> Result<Self> {
        if m == 0 || m > 20 {
            return Err(Error::InvalidEncoder(format!("dyadic level {m} outside 1..=20")));
        }
        Ok(Encoder::Dyadic(DyadicQuantizer { m, dim }))
    }

    pub fn orbit(boundaries: Vec<f64>) -> Result<Self> {
        BoundaryGrid::new(vec![boundaries.clone()])?;
        Ok(Encoder::Orbit(OrbitEncoder { boundaries }))
    }

    pub fn transform(rotation: Rotation, coords: Vec<usize>) -> Result<Self> {
        if !strictly_increasing(&coords) || coords.iter().any(|&c| c >= rotation.dim()) {
            return Err(Error::InvalidCoordinates(format!(
                "transform coordinates {coords:?} for dimension {}",
                rotation.dim()
            )));
        }
        let dev = rotation.orthonormality_error();
        if !(dev <= ORTHONORMAL_TOL) {
            return Err(Error::NotOrthonormal { deviation: dev });
        }
        Ok(Encoder::Transform(TransformSelector { rotation, coords }))
    }

    /// Function composition, first layer applied first.
    pub fn compose(layers: Vec<Encoder>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::ShapeMismatch("a chain needs at least one layer".into()));
        }
        let enc = Encoder::Chain(layers);
        enc.output_shape(Shape::Vector(None))?;
        Ok(enc)
    }

    /// Layers of a chain, or the encoder itself as a one-layer chain.
    pub fn layers(&self) -> Vec<Encoder> {
        match self {
            Encoder::Chain(l) => l.clone(),
            other => vec![other.clone()],
        }
    }

    /// A short human-readable identifier (1-based coordinates).
    pub fn describe(&self) -> String {
        let one_based = |c: &mut dyn Iterator<Item = usize>| {
            c.map(|v| (v + 1).to_string()).collect::<Vec<_>>().join(",")
        };
        match self {
            Encoder::Selector(c) if c.is_empty() => "constant".into(),
            Encoder::Selector(c) => format!("selector({})", one_based(&mut c.iter().copied())),
            Encoder::Mask(c) => format!("mask({})", one_based(&mut c.iter().copied())),
            Encoder::Cells(q) => match (&q.grid, &q.groups) {
                (Some(_), None) => "cells".into(),
                (Some(_), Some(g)) => format!("cells(groups={})", g.values().collect::<BTreeSet<_>>().len()),
                (None, Some(g)) => format!("relabel(groups={})", g.values().collect::<BTreeSet<_>>().len()),
                (None, None) => "relabel(identity)".into(),
            },
            Encoder::Dyadic(q) => format!("dyadic(m={})", q.m),
            Encoder::Orbit(_) => "orbit".into(),
            Encoder::Transform(t) => format!("transform({})", one_based(&mut t.coords.iter().copied())),
            Encoder::Chain(l) => {
                let parts: Vec<String> = l.iter().map(|e| e.describe()).collect();
                format!("chain[{}]", parts.join(" > "))
            }
        }
    }

    pub fn output_shape(&self, input: Shape) -> Result<Shape> {
        let need_vector = |what: &str| {
            Error::ShapeMismatch(format!("{what} needs a vector input, got a discrete label"))
        };
        let check_dim = |expected: usize| -> Result<()> {
            match input {
                Shape::Vector(Some(d)) if d != expected => Err(Error::DimensionMismatch {
                    expected,
                    got: d,
                }),
                _ => Ok(()),
            }
        };
        match self {
            Encoder::Selector(c) => {
                if !strictly_increasing(c) {
                    return Err(Error::InvalidCoordinates(format!("{c:?} not strictly increasing")));
                }
                match input {
                    Shape::Label => Ok(Shape::Label),
                    Shape::Vector(d) => {
                        if let (Some(d), Some(&last)) = (d, c.last()) {
                            if last >= d {
                                return Err(Error::InvalidCoordinates(format!(
                                    "coordinate {} exceeds dimension {d}",
                                    last + 1
                                )));
                            }
                        }
                        Ok(Shape::Vector(Some(c.len())))
                    }
                }
            }
            Encoder::Mask(c) => match input {
                Shape::Label => Err(need_vector("mask")),
                Shape::Vector(d) => {
                    if let (Some(d), Some(&last)) = (d, c.iter().next_back()) {
                        if last >= d {
                            return Err(Error::InvalidCoordinates(format!(
                                "mask coordinate {} exceeds dimension {d}",
                                last + 1
                            )));
                        }
                    }
                    Ok(input)
                }
            },
            Encoder::Cells(q) => match (&q.grid, input) {
                (Some(g), Shape::Vector(_)) => {
                    check_dim(g.dim())?;
                    Ok(Shape::Label)
                }
                (Some(_), Shape::Label) => Err(need_vector("grid quantizer")),
                (None, Shape::Label) => Ok(Shape::Label),
                (None, Shape::Vector(_)) => Err(Error::ShapeMismatch(
                    "a relabeling quantizer needs a discrete label input".into(),
                )),
            },
            Encoder::Dyadic(q) => match input {
                Shape::Label => Err(need_vector("dyadic quantizer")),
                Shape::Vector(_) => {
                    check_dim(q.dim)?;
                    Ok(Shape::Label)
                }
            },
            Encoder::Orbit(_) => Ok(Shape::Label),
            Encoder::Transform(t) => match input {
                Shape::Label => Err(need_vector("transform selector")),
                Shape::Vector(_) => {
                    check_dim(t.rotation.dim())?;
                    Ok(Shape::Vector(Some(t.coords.len())))
                }
            },
            Encoder::Chain(layers) => layers.iter().try_fold(input, |s, l| l.output_shape(s)),
        }
    }

    pub fn apply_vector(&self, x: &[f64]) -> Result<Representation> {
        self.apply(&Representation::Vector(x.to_vec()))
    }

    pub fn apply(&self, x: &Representation) -> Result<Representation> {
        use Representation::{Label as L, Vector as V};
        let mismatch = |what: &str| Error::ShapeMismatch(format!("{what} cannot act on this input"));
        match (self, x) {
            (Encoder::Selector(c), V(v)) => {
                if let Some(&last) = c.last() {
                    if last >= v.len() {
                        return Err(Error::DimensionMismatch {
                            expected: last + 1,
                            got: v.len(),
                        });
                    }
                }
                Ok(V(c.iter().map(|&k| v[k]).collect()))
            }
            (Encoder::Selector(c), L(Label::Index(v))) => {
                if c.last().is_some_and(|&last| last >= v.len()) {
                    return Err(mismatch("selector"));
                }
                Ok(L(Label::Index(c.iter().map(|&k| v[k]).collect())))
            }
            (Encoder::Selector(_), L(Label::Outer)) => Ok(L(Label::Outer)),
            (Encoder::Mask(c), V(v)) => {
                if let Some(&last) = c.iter().next_back() {
                    if last >= v.len() {
                        return Err(Error::DimensionMismatch {
                            expected: last + 1,
                            got: v.len(),
                        });
                    }
                }
                let mut out = v.clone();
                for &k in c {
                    out[k] = 0.0;
                }
                Ok(V(out))
            }
            (Encoder::Cells(q), V(v)) => {
                let g = q.grid.as_ref().ok_or_else(|| mismatch("relabeling quantizer"))?;
                if v.len() != g.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: g.dim(),
                        got: v.len(),
                    });
                }
                match g.locate(v) {
                    None => Ok(L(Label::Outer)),
                    Some(idx) => Ok(L(q.map_index(idx.into_iter().map(|i| i as i64).collect())?)),
                }
            }
            (Encoder::Cells(q), L(l)) => {
                if q.grid.is_some() {
                    return Err(mismatch("grid quantizer"));
                }
                Ok(L(q.map_label(l)?))
            }
            (Encoder::Dyadic(q), V(v)) => {
                if v.len() != q.dim {
                    return Err(Error::DimensionMismatch {
                        expected: q.dim,
                        got: v.len(),
                    });
                }
                let bound = q.m as f64;
                if v.iter().any(|&c| !(c >= -bound && c < bound)) {
                    return Ok(L(Label::Outer));
                }
                let s = q.scale();
                Ok(L(Label::Index(v.iter().map(|&c| (c * s).floor() as i64).collect())))
            }
            (Encoder::Orbit(o), V(v)) => {
                let idx: Option<Vec<i64>> = v
                    .iter()
                    .map(|&c| locate_on_axis(&o.boundaries, c).map(|i| i as i64))
                    .collect();
                Ok(L(match idx {
                    None => Label::Outer,
                    Some(mut idx) => {
                        idx.sort_unstable();
                        Label::Index(idx)
                    }
                }))
            }
            (Encoder::Orbit(_), L(Label::Index(v))) => {
                let mut v = v.clone();
                v.sort_unstable();
                Ok(L(Label::Index(v)))
            }
            (Encoder::Orbit(_), L(Label::Outer)) => Ok(L(Label::Outer)),
            (Encoder::Transform(t), V(v)) => {
                if v.len() != t.rotation.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: t.rotation.dim(),
                        got: v.len(),
                    });
                }
                let z = t.rotation.apply_transpose(v);
                Ok(V(t.coords.iter().map(|&k| z[k]).collect()))
            }
            (Encoder::Chain(layers), x) => {
                let mut cur = x.clone();
                for l in layers {
                    cur = l.apply(&cur)?;
                }
                Ok(cur)
            }
            (Encoder::Mask(_), L(_)) => Err(mismatch("mask")),
            (Encoder::Dyadic(_), L(_)) => Err(mismatch("dyadic quantizer")),
            (Encoder::Transform(_), L(_)) => Err(mismatch("transform selector")),
        }
    }
}

/// Dyadic quantizers of levels `1..=m_max`, each refining the previous.
pub fn dyadic_family(dim: usize, m_max: u32) -> Result<Vec<Encoder>> {
    if m_max == 0 {
        return Err(Error::InvalidCount("m_max must be at least 1".into()));
    }
    (1..=m_max).map(|m| Encoder::dyadic(m, dim)).collect()
}

/// The permutation-orbit encoder on a model's common boundary array.
pub fn orbit_encoder(model: &HistogramModel) -> Result<Encoder> {
    if !model.grid().is_homogeneous() {
        return Err(Error::HeterogeneousGrids);
    }
    Encoder::orbit(model.grid().axis(0).to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::presets;

    fn label(v: &[i64]) -> Representation {
        Representation::Label(Label::Index(v.to_vec()))
    }

    #[test]
    fn selector_projects() {
        let x: Vec<f64> = (1..=15).map(f64::from).collect();
        let e = Encoder::selector(vec![0, 2, 4]).unwrap();
        assert_eq!(e.apply_vector(&x).unwrap(), Representation::Vector(vec![1.0, 3.0, 5.0]));
        assert!(Encoder::selector(vec![2, 1]).is_err());
        assert!(matches!(
            e.apply_vector(&[1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn dyadic_labels() {
        let e = Encoder::dyadic(1, 2).unwrap();
        // [0, 0.5) x [-1, -0.5)
        assert_eq!(e.apply_vector(&[0.25, -0.75]).unwrap(), label(&[0, -2]));
        assert_eq!(
            e.apply_vector(&[5.0, 5.0]).unwrap(),
            Representation::Label(Label::Outer)
        );
        assert_eq!(
            e.apply_vector(&[1.0, 0.0]).unwrap(),
            Representation::Label(Label::Outer)
        );
    }

    #[test]
    fn dyadic_alphabet_sizes() {
        let fam = dyadic_family(2, 3).unwrap();
        let sizes: Vec<f64> = fam
            .iter()
            .map(|e| match e {
                Encoder::Dyadic(q) => q.alphabet_size(),
                _ => unreachable!(),
            })
            .collect();
        assert_eq!(sizes, vec![17.0, 257.0, 2305.0]);
    }

    #[test]
    fn orbit_identifies_permutations() {
        let e = orbit_encoder(&presets::singular_2d()).unwrap();
        let a = e.apply_vector(&[-0.5, 0.5]).unwrap();
        let b = e.apply_vector(&[0.5, -0.5]).unwrap();
        assert_eq!(a, b);
        assert_eq!(e.apply(&label(&[2, 1])).unwrap(), label(&[1, 2]));
        assert!(matches!(
            orbit_encoder(&presets::demonstration_2d()),
            Err(Error::HeterogeneousGrids)
        ));
    }

    #[test]
    fn chains_validate_shapes() {
        let m = presets::singular_2d();
        let ok = Encoder::compose(vec![
            Encoder::full_grid(&m),
            Encoder::Cells(CellQuantizer::relabel(
                [(vec![0, 0], 0), (vec![0, 1], 0), (vec![1, 0], 0), (vec![1, 1], 0)]
                    .into_iter()
                    .collect(),
            )),
        ]);
        assert!(ok.is_ok());
        let bad = Encoder::compose(vec![Encoder::full_grid(&m), Encoder::dyadic(1, 2).unwrap()]);
        assert!(matches!(bad, Err(Error::ShapeMismatch(_))));
        let bad = Encoder::compose(vec![
            Encoder::selector(vec![0]).unwrap(),
            Encoder::dyadic(1, 2).unwrap(),
        ]);
        assert!(matches!(bad, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn single_layer_chain_matches_layer() {
        let e = Encoder::selector(vec![1]).unwrap();
        let c = Encoder::compose(vec![e.clone()]).unwrap();
        let x = [0.1, 0.7, 0.3];
        assert_eq!(e.apply_vector(&x).unwrap(), c.apply_vector(&x).unwrap());
    }

    #[test]
    fn transform_undoes_rotation() {
        let u = Rotation::givens(2, 0, 1, 0.4);
        let e = Encoder::transform(u.clone(), vec![0, 1]).unwrap();
        let z = [0.3, -0.2];
        match e.apply_vector(&u.apply(&z)).unwrap() {
            Representation::Vector(v) => {
                assert!((v[0] - z[0]).abs() < 1e-15 && (v[1] - z[1]).abs() < 1e-15)
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn mask_zeroes() {
        let e = Encoder::mask([0, 2]);
        assert_eq!(
            e.apply_vector(&[1.0, 2.0, 3.0]).unwrap(),
            Representation::Vector(vec![0.0, 2.0, 0.0])
        );
    }
}
