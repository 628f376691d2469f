use crate::error::{Error, Result};

/// A 0-based multi-index into the cell grid, one entry per axis.
pub type CellIndex = Vec<usize>;

/// Per-axis boundary arrays `a_k = (a_{k,0} < ... < a_{k,n_k})`.
///
/// Cell `i` is the half-open box `prod_k [a_{k,i_k}, a_{k,i_k+1})` and the
/// union of all cells is the support box `prod_k [a_{k,0}, a_{k,n_k})`.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryGrid {
    axes: Vec<Vec<f64>>,
}

impl BoundaryGrid {
    pub fn new(axes: Vec<Vec<f64>>) -> Result<Self> {
        for (k, a) in axes.iter().enumerate() {
            let ok = a.len() >= 2
                && a.iter().all(|v| v.is_finite())
                && a.windows(2).all(|w| w[0] < w[1]);
            if !ok {
                return Err(Error::NonMonotoneBoundaries { axis: k });
            }
        }
        Ok(BoundaryGrid { axes })
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Vec<f64>] {
        &self.axes
    }

    pub fn axis(&self, k: usize) -> &[f64] {
        &self.axes[k]
    }

    /// Number of cells along each axis.
    pub fn counts(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.len() - 1).collect()
    }

    pub fn num_cells(&self) -> usize {
        self.axes.iter().map(|a| a.len() - 1).product()
    }

    pub fn contains_index(&self, idx: &[usize]) -> bool {
        idx.len() == self.dim() && idx.iter().zip(&self.axes).all(|(&i, a)| i + 1 < a.len())
    }

    /// Cell containing `x`, or `None` outside the support box.
    pub fn locate(&self, x: &[f64]) -> Option<CellIndex> {
        debug_assert_eq!(x.len(), self.dim());
        x.iter()
            .zip(&self.axes)
            .map(|(&v, a)| locate_on_axis(a, v))
            .collect()
    }

    pub fn cell_bounds(&self, idx: &[usize]) -> Vec<(f64, f64)> {
        idx.iter()
            .zip(&self.axes)
            .map(|(&i, a)| (a[i], a[i + 1]))
            .collect()
    }

    /// Lebesgue measure of a cell.
    pub fn cell_volume(&self, idx: &[usize]) -> f64 {
        idx.iter()
            .zip(&self.axes)
            .map(|(&i, a)| a[i + 1] - a[i])
            .product()
    }

    /// True when every axis carries the same boundary array.
    pub fn is_homogeneous(&self) -> bool {
        self.axes.windows(2).all(|w| w[0] == w[1])
    }

    /// All cell indices in lexicographic order.
    pub fn indices(&self) -> impl Iterator<Item = CellIndex> + '_ {
        product_indices(self.counts())
    }
}

/// Position of `v` on one axis: `Some(l)` when `a[l] <= v < a[l+1]`.
pub(crate) fn locate_on_axis(a: &[f64], v: f64) -> Option<usize> {
    if !(v >= a[0] && v < a[a.len() - 1]) {
        return None;
    }
    Some(a.partition_point(|&b| b <= v) - 1)
}

/// Lexicographic enumeration of `prod_k [0, counts[k])`.
pub(crate) fn product_indices(counts: Vec<usize>) -> impl Iterator<Item = Vec<usize>> {
    let total: usize = counts.iter().product();
    let mut cur = vec![0usize; counts.len()];
    let mut emitted = 0usize;
    std::iter::from_fn(move || {
        if emitted == total {
            return None;
        }
        let out = cur.clone();
        emitted += 1;
        for k in (0..counts.len()).rev() {
            cur[k] += 1;
            if cur[k] < counts[k] {
                break;
            }
            cur[k] = 0;
        }
        Some(out)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_monotone() {
        assert!(matches!(
            BoundaryGrid::new(vec![vec![0.0, 0.0, 1.0]]),
            Err(Error::NonMonotoneBoundaries { axis: 0 })
        ));
        assert!(BoundaryGrid::new(vec![vec![0.0]]).is_err());
        assert!(BoundaryGrid::new(vec![vec![0.0, f64::NAN]]).is_err());
    }

    #[test]
    fn locate_is_half_open() {
        let g = BoundaryGrid::new(vec![vec![-1.0, 0.0, 1.0], vec![0.0, 2.0]]).unwrap();
        assert_eq!(g.locate(&[-1.0, 0.0]), Some(vec![0, 0]));
        assert_eq!(g.locate(&[0.0, 1.9]), Some(vec![1, 0]));
        assert_eq!(g.locate(&[1.0, 1.0]), None);
        assert_eq!(g.locate(&[0.5, -0.1]), None);
        assert_eq!(g.cell_volume(&[1, 0]), 2.0);
    }

    #[test]
    fn enumerates_all_indices() {
        let idx: Vec<_> = product_indices(vec![2, 3]).collect();
        assert_eq!(idx.len(), 6);
        assert_eq!(idx[0], vec![0, 0]);
        assert_eq!(idx[5], vec![1, 2]);
        assert_eq!(product_indices(vec![]).count(), 1);
    }
}
