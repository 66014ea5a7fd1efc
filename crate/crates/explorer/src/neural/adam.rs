//! Adam optimizer with bias correction, plus global-norm gradient clipping.

use super::tensor::Mat;
use crate::error::{Error, Result};

/// Per-parameter first/second moment estimates and the shared step counter.
#[derive(Clone, Debug)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub t: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    /// Standard hyperparameters (β₁=0.9, β₂=0.999, ε=1e-8) with moments
    /// shaped to match `shapes` (flattened parameter lengths, in the same
    /// order used for gradients).
    pub fn new(lr: f64, shapes: &[usize]) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            v: shapes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    /// Applies one bias-corrected Adam step.
    ///
    /// If any gradient entry is non-finite, no parameter (and no optimizer
    /// state) is touched and an error is returned.
    pub fn step(&mut self, params: Vec<&mut Mat>, grads: &[Mat]) -> Result<()> {
        assert_eq!(params.len(), grads.len(), "param/grad count mismatch");
        assert_eq!(params.len(), self.m.len(), "optimizer state size mismatch");
        for (k, g) in grads.iter().enumerate() {
            if !g.data.iter().all(|v| v.is_finite()) {
                return Err(Error::invalid(format!(
                    "non-finite gradient in parameter block {k}; step skipped"
                )));
            }
        }

        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for (k, (p, g)) in params.into_iter().zip(grads).enumerate() {
            assert_eq!(p.len(), g.len(), "param/grad shape mismatch in block {k}");
            let m = &mut self.m[k];
            let v = &mut self.v[k];
            for j in 0..g.data.len() {
                let gj = g.data[j];
                m[j] = self.beta1 * m[j] + (1.0 - self.beta1) * gj;
                v[j] = self.beta2 * v[j] + (1.0 - self.beta2) * gj * gj;
                let m_hat = m[j] / bc1;
                let v_hat = v[j] / bc2;
                p.data[j] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
        Ok(())
    }
}

/// Scales all gradients so their joint L2 norm is at most `max_norm`.
/// Returns the pre-clip norm.
pub fn clip_global_norm(grads: &mut [Mat], max_norm: f64) -> f64 {
    let sq: f64 = grads
        .iter()
        .flat_map(|g| g.data.iter())
        .map(|&v| v * v)
        .sum();
    let norm = sq.sqrt();
    if norm > max_norm && norm > 0.0 {
        let scale = max_norm / norm;
        for g in grads.iter_mut() {
            g.data.iter_mut().for_each(|v| *v *= scale);
        }
    }
    norm
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_matches_closed_form() {
        // From m = v = 0 at t = 1, bias correction cancels the (1−β) factors
        // and the update is −lr·g / (|g| + ε).
        let lr = 0.01;
        let mut adam = Adam::new(lr, &[3]);
        let mut p = Mat {
            rows: 1,
            cols: 3,
            data: vec![1.0, -2.0, 0.5],
        };
        let g = Mat {
            rows: 1,
            cols: 3,
            data: vec![0.3, -0.7, 0.0],
        };
        adam.step(vec![&mut p], std::slice::from_ref(&g)).unwrap();
        for (j, (&before, &gj)) in [1.0, -2.0, 0.5].iter().zip(&g.data).enumerate() {
            let expected = before - lr * gj / (gj.abs() + 1e-8);
            assert!(
                (p.data[j] - expected).abs() < 1e-12,
                "entry {j}: got {}, want {expected}",
                p.data[j]
            );
        }
    }

    #[test]
    fn zero_gradient_leaves_parameters_unchanged() {
        let mut adam = Adam::new(0.1, &[4]);
        let mut p = Mat {
            rows: 2,
            cols: 2,
            data: vec![1.0, 2.0, 3.0, 4.0],
        };
        let g = Mat::zeros(2, 2);
        adam.step(vec![&mut p], std::slice::from_ref(&g)).unwrap();
        assert_eq!(p.data, vec![1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn non_finite_gradient_is_rejected_without_touching_params() {
        let mut adam = Adam::new(0.1, &[2]);
        let mut p = Mat {
            rows: 1,
            cols: 2,
            data: vec![1.0, 2.0],
        };
        let g = Mat {
            rows: 1,
            cols: 2,
            data: vec![0.1, f64::NAN],
        };
        assert!(adam.step(vec![&mut p], std::slice::from_ref(&g)).is_err());
        assert_eq!(p.data, vec![1.0, 2.0]);
        assert_eq!(adam.t, 0);
    }

    #[test]
    fn clipping_preserves_direction_and_caps_norm() {
        let mut grads = vec![
            Mat {
                rows: 1,
                cols: 2,
                data: vec![3.0, 0.0],
            },
            Mat {
                rows: 1,
                cols: 1,
                data: vec![4.0],
            },
        ];
        let pre = clip_global_norm(&mut grads, 1.0);
        assert!((pre - 5.0).abs() < 1e-12);
        assert!((grads[0].data[0] - 0.6).abs() < 1e-12);
        assert!((grads[1].data[0] - 0.8).abs() < 1e-12);
        // Below the cap nothing changes.
        let pre2 = clip_global_norm(&mut grads, 10.0);
        assert!((pre2 - 1.0).abs() < 1e-12);
        assert!((grads[0].data[0] - 0.6).abs() < 1e-12);
    }
}
