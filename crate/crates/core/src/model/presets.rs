//! The worked example models and the 15-dimensional study model.
//!
//! Indices here are 0-based; the cell tables are transcribed from the
//! 1-based tables of the original construction.

use std::collections::BTreeMap;

use crate::model::{BoundaryGrid, DiscreteJoint, HistogramModel, NoiseSpec, INPUT_TOL};

/// Two classes in an XOR pattern on the 2x2 grid over `[-1, 1)^2`.
pub fn singular_2d() -> HistogramModel {
    HistogramModel::from_entries(
        vec![vec![-1.0, 0.0, 1.0]; 2],
        vec![0.5, 0.5],
        &[
            (vec![0, 0], 0, 0.5),
            (vec![1, 1], 0, 0.5),
            (vec![0, 1], 1, 0.5),
            (vec![1, 0], 1, 0.5),
        ],
    )
    .expect("2D-Singular is valid")
}

/// Eight equiprobable classes, one per octant cell of `[-1, 1)^3`.
pub fn equiprobable_3d() -> HistogramModel {
    let entries: Vec<_> = (0..8)
        .map(|y| (vec![(y >> 2) & 1, (y >> 1) & 1, y & 1], y, 1.0))
        .collect();
    HistogramModel::from_entries(vec![vec![-1.0, 0.0, 1.0]; 3], vec![0.125; 8], &entries)
        .expect("3D-Equiprobable is valid")
}

const DEMO_PRIOR: [f64; 3] = [0.2, 0.5, 0.3];

/// `(i, j, y, p)` in 1-based indices.
const DEMO_2D_TABLE: [(usize, usize, usize, f64); 11] = [
    (1, 1, 1, 0.4),
    (1, 2, 1, 0.05),
    (2, 1, 1, 0.3),
    (3, 1, 1, 0.2),
    (4, 1, 1, 0.05),
    (1, 2, 2, 0.2),
    (2, 2, 2, 0.3),
    (3, 1, 2, 0.3),
    (4, 1, 2, 0.2),
    (3, 2, 3, 0.7),
    (4, 1, 3, 0.3),
];

fn demo_axis_1() -> Vec<f64> {
    vec![-0.5, 0.5, 1.5, 2.0, 3.5]
}

fn demo_axis_last() -> Vec<f64> {
    vec![1.0, 1.5, 2.5]
}

/// Three classes on a 4x2 grid.
pub fn demonstration_2d() -> HistogramModel {
    let entries: Vec<_> = DEMO_2D_TABLE
        .iter()
        .map(|&(i, j, y, p)| (vec![i - 1, j - 1], y - 1, p))
        .collect();
    HistogramModel::from_entries(
        vec![demo_axis_1(), demo_axis_last()],
        DEMO_PRIOR.to_vec(),
        &entries,
    )
    .expect("2D-Demonstration is valid")
}

/// 2D-Demonstration with a middle coordinate of four cells: given `y`, the
/// middle index is uniform over three of them, class `y` (1-based) excluding
/// index `y + 1`.
pub fn demonstration_3d() -> HistogramModel {
    let mut cells: BTreeMap<Vec<usize>, Vec<f64>> = BTreeMap::new();
    for &(i, j, y, p) in &DEMO_2D_TABLE {
        for l in 1..=4usize {
            if l == y + 1 {
                continue;
            }
            cells.entry(vec![i - 1, l - 1, j - 1]).or_insert_with(|| vec![0.0; 3])[y - 1] = p / 3.0;
        }
    }
    let grid = BoundaryGrid::new(vec![
        demo_axis_1(),
        vec![-1.0, 0.0, 0.3, 1.0, 3.0],
        demo_axis_last(),
    ])
    .expect("valid grid");
    let joint = DiscreteJoint::new(grid.counts(), DEMO_PRIOR.to_vec(), cells, INPUT_TOL)
        .expect("3D-Demonstration is valid");
    HistogramModel::new(grid, joint).expect("shapes agree")
}

/// 0-based output positions of the 12 noise coordinates in the study model:
/// `X = (X1, V1, X2, V2, X3, V3, ..., V12)`.
pub const STUDY_NOISE_POSITIONS: [usize; 12] = [1, 3, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14];

/// The 15-dimensional study model: 3D-Demonstration interleaved with twelve
/// unit-uniform noise coordinates.
pub fn study() -> HistogramModel {
    demonstration_3d()
        .sparsify(&NoiseSpec::unit(STUDY_NOISE_POSITIONS.to_vec()))
        .expect("study model is valid")
}

/// Named presets accepted by the CLI and harness.
pub fn by_name(name: &str) -> Option<HistogramModel> {
    let m = match name {
        "2d-singular" => singular_2d(),
        "3d-equiprobable" => equiprobable_3d(),
        "2d-demo" => demonstration_2d(),
        "3d-demo" => demonstration_3d(),
        "study" => study(),
        "study-tilde" => study().mask(&[0].into_iter().collect()).ok()?,
        "study-bar" => study().mask(&[0, 2, 4].into_iter().collect()).ok()?,
        _ => return None,
    };
    Some(m)
}

pub const PRESET_NAMES: [&str; 7] = [
    "2d-singular",
    "3d-equiprobable",
    "2d-demo",
    "3d-demo",
    "study",
    "study-tilde",
    "study-bar",
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_build() {
        for name in PRESET_NAMES {
            assert!(by_name(name).is_some(), "{name}");
        }
        assert!(by_name("nope").is_none());
    }

    #[test]
    fn demo_3d_exclusions() {
        let m = demonstration_3d();
        // (l, y) = (2, 1) in 1-based notation is excluded
        assert_eq!(m.joint().conditional(&[0, 1, 0], 0), 0.0);
        assert!((m.joint().conditional(&[0, 0, 0], 0) - 0.4 / 3.0).abs() < 1e-15);
        assert!((m.joint().conditional(&[1, 0, 0], 0) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn study_shape() {
        let m = study();
        assert_eq!(m.dim(), 15);
        assert_eq!(m.grid().counts()[..5], [4, 1, 4, 1, 2]);
    }
}
