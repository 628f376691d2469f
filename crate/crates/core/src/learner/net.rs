use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Layer widths of a feed-forward classifier.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MLPArch {
    pub input: usize,
    pub hidden: Vec<usize>,
    pub classes: usize,
}

impl MLPArch {
    pub fn new(input: usize, hidden: Vec<usize>, classes: usize) -> Result<Self> {
        if input == 0 || classes < 2 || hidden.iter().any(|&w| w == 0) {
            return Err(Error::InvalidConfig(format!(
                "invalid architecture {input} -> {hidden:?} -> {classes}"
            )));
        }
        Ok(MLPArch {
            input,
            hidden,
            classes,
        })
    }

    /// One hidden layer of 32 units.
    pub fn mlp32(input: usize, classes: usize) -> Self {
        MLPArch {
            input,
            hidden: vec![32],
            classes,
        }
    }

    /// Two hidden layers of 256 units.
    pub fn mlp256(input: usize, classes: usize) -> Self {
        MLPArch {
            input,
            hidden: vec![256, 256],
            classes,
        }
    }

    /// Two hidden layers of 1024 units.
    pub fn mlp1024(input: usize, classes: usize) -> Self {
        MLPArch {
            input,
            hidden: vec![1024, 1024],
            classes,
        }
    }

    /// `mlp32`, `mlp256` or `mlp1024` (case-insensitive).
    pub fn preset(name: &str, input: usize, classes: usize) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "mlp32" => Ok(Self::mlp32(input, classes)),
            "mlp256" => Ok(Self::mlp256(input, classes)),
            "mlp1024" => Ok(Self::mlp1024(input, classes)),
            other => Err(Error::InvalidConfig(format!("unknown architecture {other:?}"))),
        }
    }

    /// `(fan_in, fan_out)` of every layer.
    pub fn layer_shapes(&self) -> Vec<(usize, usize)> {
        let mut sizes = vec![self.input];
        sizes.extend(&self.hidden);
        sizes.push(self.classes);
        sizes.windows(2).map(|w| (w[0], w[1])).collect()
    }

    /// `mlp32`/`mlp256`/`mlp1024` for the presets, else `mlp[w1-w2-...]`.
    pub fn label(&self) -> String {
        match self.hidden.as_slice() {
            [32] => "mlp32".into(),
            [256, 256] => "mlp256".into(),
            [1024, 1024] => "mlp1024".into(),
            h => format!(
                "mlp[{}]",
                h.iter().map(|w| w.to_string()).collect::<Vec<_>>().join("-")
            ),
        }
    }

    pub fn num_params(&self) -> usize {
        self.layer_shapes().iter().map(|(a, b)| a * b + b).sum()
    }
}

/// Weights `W_l` (fan_in x fan_out) and biases `b_l`; layer `l` maps `a` to
/// `a W_l + b_l`.
#[derive(Clone, Debug, PartialEq)]
pub struct MLPParams {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

/// Gradients with the same shapes as [`MLPParams`].
pub type Gradients = MLPParams;

/// Hidden pre-activations closer than this to zero are treated as kinks by
/// [`grad_check`].
pub const KINK_MARGIN: f64 = 1e-3;

impl MLPParams {
    pub fn zeros(arch: &MLPArch) -> Self {
        let shapes = arch.layer_shapes();
        MLPParams {
            weights: shapes.iter().map(|&(a, b)| Array2::zeros((a, b))).collect(),
            biases: shapes.iter().map(|&(_, b)| Array1::zeros(b)).collect(),
        }
    }

    /// He-uniform weights `U(-sqrt(6/fan_in), sqrt(6/fan_in))`, zero biases.
    pub fn init(arch: &MLPArch, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = Self::zeros(arch);
        for w in &mut p.weights {
            let limit = (6.0 / w.nrows() as f64).sqrt();
            w.mapv_inplace(|_| rng.random_range(-limit..limit));
        }
        p
    }

    pub fn arch(&self) -> MLPArch {
        MLPArch {
            input: self.weights[0].nrows(),
            hidden: self.weights[..self.weights.len() - 1].iter().map(|w| w.ncols()).collect(),
            classes: self.weights.last().map_or(0, |w| w.ncols()),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.weights[0].nrows()
    }

    pub fn classes(&self) -> usize {
        self.weights.last().map_or(0, |w| w.ncols())
    }

    fn check_input(&self, cols: usize) -> Result<()> {
        if cols != self.input_dim() {
            return Err(Error::ShapeMismatch(format!(
                "network expects {} inputs, got {cols}",
                self.input_dim()
            )));
        }
        Ok(())
    }

    /// Pre-activations of every layer (the last one are the logits).
    fn pre_activations(&self, x: ArrayView2<f64>) -> Vec<Array2<f64>> {
        let mut zs: Vec<Array2<f64>> = Vec::with_capacity(self.weights.len());
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let mut z = if l == 0 {
                x.dot(w)
            } else {
                zs[l - 1].mapv(relu).dot(w)
            };
            z += b;
            zs.push(z);
        }
        zs
    }

    /// Row-wise class pmfs.
    pub fn forward_batch(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_input(x.ncols())?;
        let mut logits = self.pre_activations(x).pop().expect("at least one layer");
        softmax_rows(&mut logits);
        Ok(logits)
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        let view = ArrayView2::from_shape((1, x.len()), x).map_err(|e| Error::ShapeMismatch(e.to_string()))?;
        Ok(self.forward_batch(view)?.into_raw_vec_and_offset().0)
    }

    /// Mean cross-entropy in nats over the batch.
    pub fn loss(&self, x: ArrayView2<f64>, y: &[usize]) -> Result<f64> {
        self.check_input(x.ncols())?;
        let logits = self.pre_activations(x).pop().expect("at least one layer");
        Ok(mean_nll(&logits, y))
    }

    /// Mean cross-entropy (nats) and its gradient.
    pub fn loss_and_grad(&self, x: ArrayView2<f64>, y: &[usize]) -> Result<(f64, Gradients)> {
        self.check_input(x.ncols())?;
        if x.nrows() != y.len() || y.is_empty() {
            return Err(Error::ShapeMismatch(format!(
                "{} rows but {} labels",
                x.nrows(),
                y.len()
            )));
        }
        let zs = self.pre_activations(x);
        let logits = zs.last().expect("at least one layer");
        let loss = mean_nll(logits, y);
        let mut delta = logits.clone();
        softmax_rows(&mut delta);
        let inv = 1.0 / y.len() as f64;
        for (mut row, &c) in delta.rows_mut().into_iter().zip(y) {
            row[c] -= 1.0;
            row *= inv;
        }
        let layers = self.weights.len();
        let mut gw: Vec<Array2<f64>> = Vec::with_capacity(layers);
        let mut gb: Vec<Array1<f64>> = Vec::with_capacity(layers);
        for l in (0..layers).rev() {
            let input = if l == 0 { x.to_owned() } else { zs[l - 1].mapv(relu) };
            // `dot` may pick a column-major result for degenerate shapes
            gw.push(input.t().dot(&delta).as_standard_layout().into_owned());
            gb.push(delta.sum_axis(Axis(0)));
            if l > 0 {
                let mut back = delta.dot(&self.weights[l].t());
                ndarray::Zip::from(&mut back)
                    .and(&zs[l - 1])
                    .for_each(|d, &z| {
                        if z <= 0.0 {
                            *d = 0.0
                        }
                    });
                delta = back;
            }
        }
        gw.reverse();
        gb.reverse();
        Ok((
            loss,
            MLPParams {
                weights: gw,
                biases: gb,
            },
        ))
    }

    /// Whether any hidden pre-activation of row `i` is within `margin` of 0.
    fn near_kink(&self, x: ArrayView2<f64>, margin: f64) -> Vec<bool> {
        let zs = self.pre_activations(x);
        let mut out = vec![false; x.nrows()];
        for z in &zs[..zs.len() - 1] {
            for (o, row) in out.iter_mut().zip(z.rows()) {
                if row.iter().any(|v| v.abs() < margin) {
                    *o = true;
                }
            }
        }
        out
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        for (w, b) in self.weights.iter_mut().zip(self.biases.iter_mut()) {
            out.push(w.as_slice_mut().expect("standard layout"));
            out.push(b.as_slice_mut().expect("standard layout"));
        }
        out
    }

    fn tensors(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.push(w.as_slice().expect("standard layout"));
            out.push(b.as_slice().expect("standard layout"));
        }
        out
    }
}

fn relu(v: f64) -> f64 {
    v.max(0.0)
}

fn softmax_rows(z: &mut Array2<f64>) {
    for mut row in z.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        row.mapv_inplace(|v| (v - max).exp());
        let s = row.sum();
        row /= s;
    }
}

fn mean_nll(logits: &Array2<f64>, y: &[usize]) -> f64 {
    let mut total = 0.0;
    for (row, &c) in logits.rows().into_iter().zip(y) {
        let max = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        total += lse - row[c];
    }
    total / y.len() as f64
}

/// Largest relative error `|a - f| / max(|a| + |f|, 1e-6)` between analytic
/// gradients and central finite differences (step `1e-5`), over up to 64
/// evenly spaced entries of every weight and bias tensor.
///
/// Rows with a hidden pre-activation within [`KINK_MARGIN`] of zero are
/// dropped first, since the loss is not differentiable there.
pub fn grad_check(params: &MLPParams, x: ArrayView2<f64>, y: &[usize]) -> Result<f64> {
    const STEP: f64 = 1e-5;
    const PER_TENSOR: usize = 64;
    params.check_input(x.ncols())?;
    let keep: Vec<usize> = params
        .near_kink(x, KINK_MARGIN)
        .iter()
        .enumerate()
        .filter(|(_, k)| !**k)
        .map(|(i, _)| i)
        .collect();
    if keep.is_empty() {
        return Err(Error::InvalidCount("no rows left after the kink filter".into()));
    }
    let xs = x.select(Axis(0), &keep);
    let ys: Vec<usize> = keep.iter().map(|&i| y[i]).collect();
    let (_, grads) = params.loss_and_grad(xs.view(), &ys)?;
    let analytic: Vec<Vec<f64>> = grads.tensors().iter().map(|t| t.to_vec()).collect();
    let mut probe = params.clone();
    let mut worst: f64 = 0.0;
    for (t, a) in analytic.iter().enumerate() {
        let len = a.len();
        let stride = (len / PER_TENSOR).max(1);
        for k in (0..len).step_by(stride) {
            let orig = probe.tensors()[t][k];
            probe.tensors_mut()[t][k] = orig + STEP;
            let up = probe.loss(xs.view(), &ys)?;
            probe.tensors_mut()[t][k] = orig - STEP;
            let down = probe.loss(xs.view(), &ys)?;
            probe.tensors_mut()[t][k] = orig;
            let fd = (up - down) / (2.0 * STEP);
            let rel = (a[k] - fd).abs() / (a[k].abs() + fd.abs()).max(1e-6);
            worst = worst.max(rel);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn zero_params_give_uniform() {
        let arch = MLPArch::mlp32(15, 3);
        let p = MLPParams::zeros(&arch);
        let out = p.forward(&[0.3; 15]).unwrap();
        for v in out {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
        let x = Array2::from_elem((4, 15), 0.7);
        let l = p.loss(x.view(), &[0, 1, 2, 0]).unwrap();
        assert!((l / std::f64::consts::LN_2 - 3f64.log2()).abs() < 1e-12);
    }

    #[test]
    fn hand_computed_forward() {
        // 2 -> 2 -> 2 network
        let p = MLPParams {
            weights: vec![array![[1.0, -1.0], [0.5, 2.0]], array![[1.0, 0.0], [0.0, -1.0]]],
            biases: vec![array![0.0, 0.5], array![0.1, 0.2]],
        };
        // x = (1, 2): z1 = (1 + 1, -1 + 4 + 0.5) = (2, 3.5); logits = (2.1, -3.3)
        let out = p.forward(&[1.0, 2.0]).unwrap();
        let e = (-5.4f64).exp();
        assert!((out[0] - 1.0 / (1.0 + e)).abs() < 1e-15);
        assert!((out[1] - e / (1.0 + e)).abs() < 1e-15);
    }

    #[test]
    fn shape_mismatch() {
        let p = MLPParams::zeros(&MLPArch::mlp32(3, 2));
        assert!(matches!(p.forward(&[1.0]), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn gradients_match_finite_differences() {
        let arch = MLPArch::new(4, vec![8, 6], 3).unwrap();
        let p = MLPParams::init(&arch, 11);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = Array2::from_shape_fn((16, 4), |_| rng.random_range(-1.0..1.0));
        let y: Vec<usize> = (0..16).map(|i| i % 3).collect();
        let err = grad_check(&p, x.view(), &y).unwrap();
        assert!(err < 1e-4, "{err}");
    }

    #[test]
    fn arch_round_trip() {
        let a = MLPArch::mlp256(5, 3);
        assert_eq!(MLPParams::zeros(&a).arch(), a);
        assert_eq!(a.num_params(), 5 * 256 + 256 + 256 * 256 + 256 + 256 * 3 + 3);
    }
}
