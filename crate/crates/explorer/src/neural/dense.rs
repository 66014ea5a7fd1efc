//! Fully-connected layer with a fixed activation.

use super::tensor::{matvec_acc, matvec_t, outer_acc, Mat};
use crate::rng::Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Linear,
    Relu,
    Tanh,
    /// Numerically stabilized softmax (max-subtracted exponentials).
    Softmax,
}

/// `y = act(x·W + b)` with `W: [input, output]`, `b: [1, output]`.
#[derive(Clone, Debug)]
pub struct Dense {
    pub w: Mat,
    pub b: Mat,
    pub act: Activation,
}

/// Values captured by the forward pass that backward needs.
#[derive(Clone, Debug)]
pub struct DenseCache {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl Dense {
    pub fn new(input: usize, output: usize, act: Activation, rng: &mut Rng) -> Self {
        Dense {
            w: Mat::xavier(input, output, rng),
            b: Mat::zeros(1, output),
            act,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w.rows
    }

    pub fn output_dim(&self) -> usize {
        self.w.cols
    }

    pub fn forward(&self, x: &[f64]) -> (Vec<f64>, DenseCache) {
        assert_eq!(
            x.len(),
            self.w.rows,
            "dense layer fed {} inputs, expects {}",
            x.len(),
            self.w.rows
        );
        let mut y = self.b.data.clone();
        matvec_acc(&self.w, x, &mut y);
        match self.act {
            Activation::Linear => {}
            Activation::Relu => y.iter_mut().for_each(|v| *v = v.max(0.0)),
            Activation::Tanh => y.iter_mut().for_each(|v| *v = v.tanh()),
            Activation::Softmax => softmax_in_place(&mut y),
        }
        let cache = DenseCache { x: x.to_vec(), y: y.clone() };
        (y, cache)
    }

    /// Propagates `dy` through the activation, accumulates parameter
    /// gradients into `dw`/`db`, and returns the gradient wrt the input.
    pub fn backward(&self, cache: &DenseCache, dy: &[f64], dw: &mut Mat, db: &mut Mat) -> Vec<f64> {
        let dz = self.act_backward(cache, dy);
        outer_acc(dw, &cache.x, &dz);
        for (g, d) in db.data.iter_mut().zip(&dz) {
            *g += d;
        }
        let mut dx = vec![0.0; self.w.rows];
        matvec_t(&self.w, &dz, &mut dx);
        dx
    }

    /// Same as [`Dense::backward`] but skips the input gradient; used for
    /// layers that sit directly on raw inputs.
    pub fn backward_params_only(&self, cache: &DenseCache, dy: &[f64], dw: &mut Mat, db: &mut Mat) {
        let dz = self.act_backward(cache, dy);
        outer_acc(dw, &cache.x, &dz);
        for (g, d) in db.data.iter_mut().zip(&dz) {
            *g += d;
        }
    }

    fn act_backward(&self, cache: &DenseCache, dy: &[f64]) -> Vec<f64> {
        assert_eq!(dy.len(), self.w.cols, "dense backward width mismatch");
        match self.act {
            Activation::Linear => dy.to_vec(),
            // y = max(z, 0), so y > 0 exactly where the unit is active.
            Activation::Relu => cache
                .y
                .iter()
                .zip(dy)
                .map(|(&y, &d)| if y > 0.0 { d } else { 0.0 })
                .collect(),
            Activation::Tanh => cache
                .y
                .iter()
                .zip(dy)
                .map(|(&y, &d)| d * (1.0 - y * y))
                .collect(),
            // Full softmax Jacobian: dz_j = p_j (dy_j − Σ_k dy_k p_k).
            Activation::Softmax => {
                let inner: f64 = cache.y.iter().zip(dy).map(|(&p, &d)| p * d).sum();
                cache.y.iter().zip(dy).map(|(&p, &d)| p * (d - inner)).collect()
            }
        }
    }
}

/// Stable softmax: subtracts the max before exponentiating so arbitrary
/// logits (including very large ones) cannot overflow.
pub fn softmax_in_place(z: &mut [f64]) {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - m).exp();
        sum += *v;
    }
    for v in z.iter_mut() {
        *v /= sum;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layer(w: Mat, b: Vec<f64>, act: Activation) -> Dense {
        let cols = w.cols;
        Dense {
            w,
            b: Mat { rows: 1, cols, data: b },
            act,
        }
    }

    #[test]
    fn zero_parameters_relu_gives_zero() {
        let d = layer(Mat::zeros(3, 4), vec![0.0; 4], Activation::Relu);
        let (y, _) = d.forward(&[1.0, -2.0, 0.5]);
        assert_eq!(y, vec![0.0; 4]);
    }

    #[test]
    fn identity_linear_passes_through() {
        let mut w = Mat::zeros(3, 3);
        for i in 0..3 {
            w.set(i, i, 1.0);
        }
        let d = layer(w, vec![0.0; 3], Activation::Linear);
        let x = [0.25, -1.5, 3.0];
        let (y, _) = d.forward(&x);
        assert_eq!(y, x.to_vec());
    }

    #[test]
    fn hand_computed_linear_example() {
        let d = layer(
            Mat::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]),
            vec![0.5, -0.5],
            Activation::Linear,
        );
        let (y, _) = d.forward(&[1.0, 1.0]);
        assert_eq!(y, vec![4.5, 5.5]);
    }

    #[test]
    fn softmax_sums_to_one_under_extreme_logits() {
        for logits in [
            vec![0.0, 0.0, 0.0],
            vec![1000.0, -1000.0, 0.0],
            vec![700.0, 710.0, 705.0],
            vec![-745.0, -750.0, -760.0],
        ] {
            let mut p = logits.clone();
            softmax_in_place(&mut p);
            let sum: f64 = p.iter().sum();
            assert!((sum - 1.0).abs() < 1e-9, "sum {sum} for {logits:?}");
            assert!(p.iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
    }

    #[test]
    fn cache_reproduces_forward_inputs() {
        let mut rng = Rng::new(1);
        let d = Dense::new(4, 3, Activation::Tanh, &mut rng);
        let x = [0.1, -0.2, 0.3, 0.7];
        let (y, cache) = d.forward(&x);
        assert_eq!(cache.x, x.to_vec());
        assert_eq!(cache.y, y);
    }
}
