//! Exact pushforward of histogram models through encoders.
//!
//! Conditionally on its cell, `X` is uniform on a box. Every encoder in the
//! taxonomy maps such a box either to another (possibly degenerate) box or
//! splits it into finitely many pieces with known volume fractions. Tracking
//! boxes and labels with per-class masses therefore gives the joint law of
//! `(U, Y)` exactly.
//!
//! Distinct box symbols are assumed to be disjoint or identical, which holds
//! for boxes produced from grid cells by selectors, masks and matching
//! transforms.

use std::collections::BTreeMap;
use std::fmt;

use ordered_float::OrderedFloat;

use super::{DyadicQuantizer, Encoder, Label};
use crate::error::{Error, Result};
use crate::model::{locate_on_axis, HistogramModel, Rotation, ORTHONORMAL_TOL};

/// A representation symbol of an exactly computed pushforward: either a
/// product of intervals (a vector-valued representation restricted to one
/// cell piece) or a discrete label.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Symbol {
    Region(Vec<(OrderedFloat<f64>, OrderedFloat<f64>)>),
    Label(Label),
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Symbol::Label(l) => l.fmt(f),
            Symbol::Region(b) if b.is_empty() => f.write_str("*"),
            Symbol::Region(b) => {
                let parts: Vec<String> = b
                    .iter()
                    .map(|(lo, hi)| {
                        if lo == hi {
                            format!("{{{}}}", lo.0)
                        } else {
                            format!("[{},{})", lo.0, hi.0)
                        }
                    })
                    .collect();
                f.write_str(&parts.join("x"))
            }
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) enum ExactState<'a> {
    /// `x = U z` with `z` uniform on the box `bounds` (degenerate intervals
    /// are point masses). `frame = None` means `U = I`.
    Region {
        frame: Option<&'a Rotation>,
        bounds: Vec<(f64, f64)>,
    },
    Label(Label),
}

impl ExactState<'_> {
    fn symbol(&self) -> Symbol {
        match self {
            ExactState::Region { bounds, .. } => Symbol::Region(
                bounds
                    .iter()
                    .map(|&(a, b)| (OrderedFloat(a), OrderedFloat(b)))
                    .collect(),
            ),
            ExactState::Label(l) => Symbol::Label(l.clone()),
        }
    }
}

struct AxisPieces {
    inside: Vec<(i64, f64)>,
    outside: f64,
}

fn grid_pieces(lo: f64, hi: f64, a: &[f64]) -> AxisPieces {
    let n = a.len() - 1;
    if lo == hi {
        return match locate_on_axis(a, lo) {
            Some(k) => AxisPieces {
                inside: vec![(k as i64, 1.0)],
                outside: 0.0,
            },
            None => AxisPieces {
                inside: Vec::new(),
                outside: 1.0,
            },
        };
    }
    let len = hi - lo;
    let mut inside = Vec::new();
    let first = a[1..].partition_point(|&b| b <= lo);
    for k in first..n {
        if a[k] >= hi {
            break;
        }
        let ov = hi.min(a[k + 1]) - lo.max(a[k]);
        if ov > 0.0 {
            inside.push((k as i64, if ov == len { 1.0 } else { ov / len }));
        }
    }
    let outside = if lo >= a[0] && hi <= a[n] {
        0.0
    } else {
        let covered = (hi.min(a[n]) - lo.max(a[0])).max(0.0);
        (len - covered) / len
    };
    AxisPieces { inside, outside }
}

fn dyadic_pieces(lo: f64, hi: f64, q: &DyadicQuantizer) -> AxisPieces {
    let bound = q.m as f64;
    let s = q.scale();
    let (kmin, kmax) = q.index_range();
    if lo == hi {
        return if lo >= -bound && lo < bound {
            AxisPieces {
                inside: vec![((lo * s).floor() as i64, 1.0)],
                outside: 0.0,
            }
        } else {
            AxisPieces {
                inside: Vec::new(),
                outside: 1.0,
            }
        };
    }
    let len = hi - lo;
    let a = lo.max(-bound);
    let b = hi.min(bound);
    let mut inside = Vec::new();
    if a < b {
        let k0 = ((a * s).floor() as i64).max(kmin);
        let k1 = ((b * s).ceil() as i64 - 1).min(kmax);
        for k in k0..=k1 {
            let cl = k as f64 / s;
            let ch = (k + 1) as f64 / s;
            let ov = hi.min(ch) - lo.max(cl);
            if ov > 0.0 {
                inside.push((k, if ov == len { 1.0 } else { ov / len }));
            }
        }
    }
    let outside = if lo >= -bound && hi <= bound {
        0.0
    } else {
        (len - (b - a).max(0.0)) / len
    };
    AxisPieces { inside, outside }
}

/// Emits every combination of inside pieces and returns the mass fraction
/// of the complement (the outer piece).
fn product_pieces(axes: &[AxisPieces], mut emit: impl FnMut(Vec<i64>, f64)) -> f64 {
    let prod_in: f64 = axes.iter().map(|p| 1.0 - p.outside).product();
    let outer = 1.0 - prod_in;
    if axes.iter().any(|p| p.inside.is_empty()) {
        return outer;
    }
    let mut pos = vec![0usize; axes.len()];
    loop {
        let mut idx = Vec::with_capacity(axes.len());
        let mut w = 1.0;
        for (p, &k) in axes.iter().zip(&pos) {
            let (i, f) = p.inside[k];
            idx.push(i);
            w *= f;
        }
        emit(idx, w);
        let mut ax = axes.len();
        loop {
            if ax == 0 {
                return outer;
            }
            ax -= 1;
            pos[ax] += 1;
            if pos[ax] < axes[ax].inside.len() {
                break;
            }
            pos[ax] = 0;
        }
    }
}

fn push_outer(out: &mut Vec<(f64, ExactState<'_>)>, w: f64) {
    if w > 0.0 {
        out.push((w, ExactState::Label(Label::Outer)));
    }
}

fn not_exact(what: &str) -> Error {
    Error::NotExactlyComputable(format!("{what} on a rotated model"))
}

fn check_len(bounds: &[(f64, f64)], expected: usize) -> Result<()> {
    if bounds.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            got: bounds.len(),
        });
    }
    Ok(())
}

/// One non-chain layer applied to one state.
fn exact_step<'a>(enc: &Encoder, state: &ExactState<'a>) -> Result<Vec<(f64, ExactState<'a>)>> {
    let mismatch = |what: &str| Error::ShapeMismatch(format!("{what} cannot act on this input"));
    let one = |s: ExactState<'a>| Ok(vec![(1.0, s)]);
    match (enc, state) {
        (Encoder::Chain(_), _) => unreachable!("chains are flattened before stepping"),
        (Encoder::Selector(c), ExactState::Region { frame, bounds }) => {
            if c.is_empty() {
                return one(ExactState::Region {
                    frame: None,
                    bounds: Vec::new(),
                });
            }
            if c.len() == bounds.len() && c.last().is_some_and(|&k| k < bounds.len()) {
                return one(state.clone());
            }
            if frame.is_some() {
                return Err(not_exact("a selector"));
            }
            let last = *c.last().unwrap_or(&0);
            if last >= bounds.len() {
                return Err(Error::DimensionMismatch {
                    expected: last + 1,
                    got: bounds.len(),
                });
            }
            one(ExactState::Region {
                frame: None,
                bounds: c.iter().map(|&k| bounds[k]).collect(),
            })
        }
        (Encoder::Selector(c), ExactState::Label(l)) => match l {
            Label::Outer => one(ExactState::Label(Label::Outer)),
            Label::Index(v) => {
                if c.last().is_some_and(|&k| k >= v.len()) {
                    return Err(mismatch("selector"));
                }
                one(ExactState::Label(Label::Index(c.iter().map(|&k| v[k]).collect())))
            }
        },
        (Encoder::Mask(c), ExactState::Region { frame, bounds }) => {
            if c.is_empty() {
                return one(state.clone());
            }
            if frame.is_some() {
                return Err(not_exact("a mask"));
            }
            if let Some(&last) = c.iter().next_back() {
                if last >= bounds.len() {
                    return Err(Error::DimensionMismatch {
                        expected: last + 1,
                        got: bounds.len(),
                    });
                }
            }
            let mut b = bounds.clone();
            for &k in c {
                b[k] = (0.0, 0.0);
            }
            one(ExactState::Region { frame: None, bounds: b })
        }
        (Encoder::Cells(q), ExactState::Region { frame, bounds }) => {
            let g = q.grid().ok_or_else(|| mismatch("relabeling quantizer"))?;
            if frame.is_some() {
                return Err(not_exact("a cell quantizer"));
            }
            check_len(bounds, g.dim())?;
            let axes: Vec<AxisPieces> = bounds
                .iter()
                .zip(g.axes())
                .map(|(&(lo, hi), a)| grid_pieces(lo, hi, a))
                .collect();
            let mut out = Vec::new();
            let mut err = None;
            let outer = product_pieces(&axes, |idx, w| match q.map_index(idx) {
                Ok(l) => out.push((w, ExactState::Label(l))),
                Err(e) => err = Some(e),
            });
            push_outer(&mut out, outer);
            match err {
                Some(e) => Err(e),
                None => Ok(out),
            }
        }
        (Encoder::Cells(q), ExactState::Label(l)) => {
            if q.grid().is_some() {
                return Err(mismatch("grid quantizer"));
            }
            one(ExactState::Label(q.map_label(l)?))
        }
        (Encoder::Dyadic(q), ExactState::Region { frame, bounds }) => {
            if frame.is_some() {
                return Err(not_exact("a dyadic quantizer"));
            }
            check_len(bounds, q.dim)?;
            let axes: Vec<AxisPieces> = bounds.iter().map(|&(lo, hi)| dyadic_pieces(lo, hi, q)).collect();
            let mut out = Vec::new();
            let outer = product_pieces(&axes, |idx, w| {
                out.push((w, ExactState::Label(Label::Index(idx))))
            });
            push_outer(&mut out, outer);
            Ok(out)
        }
        (Encoder::Orbit(o), ExactState::Region { frame, bounds }) => {
            if frame.is_some() {
                return Err(not_exact("an orbit encoder"));
            }
            let axes: Vec<AxisPieces> = bounds
                .iter()
                .map(|&(lo, hi)| grid_pieces(lo, hi, &o.boundaries))
                .collect();
            let mut out = Vec::new();
            let outer = product_pieces(&axes, |mut idx, w| {
                idx.sort_unstable();
                out.push((w, ExactState::Label(Label::Index(idx))))
            });
            push_outer(&mut out, outer);
            Ok(out)
        }
        (Encoder::Orbit(_), ExactState::Label(l)) => one(ExactState::Label(match l {
            Label::Outer => Label::Outer,
            Label::Index(v) => {
                let mut v = v.clone();
                v.sort_unstable();
                Label::Index(v)
            }
        })),
        (Encoder::Transform(t), ExactState::Region { frame, bounds }) => {
            check_len(bounds, t.rotation.dim())?;
            let matches = match frame {
                Some(u) => u.approx_eq(&t.rotation, ORTHONORMAL_TOL),
                None => t.rotation.is_identity(ORTHONORMAL_TOL),
            };
            if !matches {
                return Err(Error::NotExactlyComputable(
                    "transform selector whose rotation differs from the model frame".into(),
                ));
            }
            one(ExactState::Region {
                frame: None,
                bounds: t.coords.iter().map(|&k| bounds[k]).collect(),
            })
        }
        (Encoder::Mask(_), ExactState::Label(_)) => Err(mismatch("mask")),
        (Encoder::Dyadic(_), ExactState::Label(_)) => Err(mismatch("dyadic quantizer")),
        (Encoder::Transform(_), ExactState::Label(_)) => Err(mismatch("transform selector")),
    }
}

fn flatten<'e>(enc: &'e Encoder, out: &mut Vec<&'e Encoder>) {
    match enc {
        Encoder::Chain(layers) => layers.iter().for_each(|l| flatten(l, out)),
        other => out.push(other),
    }
}

struct Node<'a> {
    history: Vec<Symbol>,
    mass: Vec<f64>,
    state: ExactState<'a>,
}

fn initial_nodes(model: &HistogramModel) -> Vec<Node<'_>> {
    let joint = model.joint();
    joint
        .cells()
        .map(|(idx, _)| Node {
            history: Vec::new(),
            mass: joint.cell_mass(idx),
            state: ExactState::Region {
                frame: model.rotation(),
                bounds: model.grid().cell_bounds(idx),
            },
        })
        .collect()
}

/// Applies one encoder (flattening chains) to every node, merging nodes that
/// end in the same state with the same history.
fn advance<'a>(nodes: Vec<Node<'a>>, enc: &Encoder) -> Result<Vec<Node<'a>>> {
    let mut layers = Vec::new();
    flatten(enc, &mut layers);
    let mut nodes = nodes;
    for layer in layers {
        let mut merged: BTreeMap<(Vec<Symbol>, Symbol), Node<'a>> = BTreeMap::new();
        for node in nodes {
            for (frac, state) in exact_step(layer, &node.state)? {
                if frac <= 0.0 {
                    continue;
                }
                let key = (node.history.clone(), state.symbol());
                match merged.get_mut(&key) {
                    Some(existing) => {
                        for (e, m) in existing.mass.iter_mut().zip(&node.mass) {
                            *e += m * frac;
                        }
                    }
                    None => {
                        let mass = node.mass.iter().map(|m| m * frac).collect();
                        merged.insert(
                            key,
                            Node {
                                history: node.history.clone(),
                                mass,
                                state,
                            },
                        );
                    }
                }
            }
        }
        nodes = merged.into_values().collect();
    }
    Ok(nodes)
}

/// Exact joint masses `q(u, y)` of `(enc(X), Y)`, one row per symbol with
/// positive mass, sorted by symbol.
pub fn pushforward_rows(model: &HistogramModel, enc: &Encoder) -> Result<Vec<(Symbol, Vec<f64>)>> {
    enc.output_shape(super::Shape::Vector(Some(model.dim())))?;
    let nodes = advance(initial_nodes(model), enc)?;
    Ok(nodes.into_iter().map(|n| (n.state.symbol(), n.mass)).collect())
}

/// Exact joint masses of `(U_1, ..., U_K, Y)` for the successive outputs of
/// `layers`, one row per distinct symbol path.
pub fn trace_rows(model: &HistogramModel, layers: &[Encoder]) -> Result<Vec<(Vec<Symbol>, Vec<f64>)>> {
    let chain = Encoder::compose(layers.to_vec())?;
    chain.output_shape(super::Shape::Vector(Some(model.dim())))?;
    let mut nodes = initial_nodes(model);
    for layer in layers {
        nodes = advance(nodes, layer)?;
        for n in &mut nodes {
            n.history.push(n.state.symbol());
        }
    }
    Ok(nodes.into_iter().map(|n| (n.history, n.mass)).collect())
}

/// The pushforward symbol of a single observation `x`: the image of its
/// cell for vector-valued encoders, its label for quantizers.
pub fn symbol_of(model: &HistogramModel, enc: &Encoder, x: &[f64]) -> Result<Symbol> {
    let idx = model.cell_of(x)?.ok_or(Error::OutsideSupport)?;
    let z = model.to_latent(x);
    let frame = model.rotation();
    let mut cell = ExactState::Region {
        frame,
        bounds: model.grid().cell_bounds(&idx),
    };
    let mut point = ExactState::Region {
        frame,
        bounds: z.iter().map(|&v| (v, v)).collect(),
    };
    let mut layers = Vec::new();
    flatten(enc, &mut layers);
    for layer in layers {
        let p = exact_step(layer, &point)?
            .into_iter()
            .next()
            .map(|(_, s)| s)
            .ok_or(Error::OutsideSupport)?;
        cell = match (&cell, &p) {
            (ExactState::Region { .. }, ExactState::Region { .. }) => exact_step(layer, &cell)?
                .into_iter()
                .next()
                .map(|(_, s)| s)
                .ok_or(Error::OutsideSupport)?,
            _ => p.clone(),
        };
        point = p;
    }
    Ok(cell.symbol())
}
