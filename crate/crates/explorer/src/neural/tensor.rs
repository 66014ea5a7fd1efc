//! Minimal row-major matrix type used by the network layers.
//!
//! Weight matrices are stored `[input, output]` so that the forward pass
//! accumulates over contiguous rows (`y += x[i] * w.row(i)`), which the
//! compiler autovectorizes. Bias vectors are represented as `[1, n]`
//! matrices so every parameter of a network is the same type.

use crate::rng::Rng;

/// Dense row-major matrix of `f64`.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Uniform Xavier/Glorot initialization: entries drawn from
    /// U(−L, L) with L = √(6 / (rows + cols)).
    pub fn xavier(rows: usize, cols: usize, rng: &mut Rng) -> Self {
        let limit = (6.0 / (rows + cols) as f64).sqrt();
        let data = (0..rows * cols)
            .map(|_| rng.uniform(-limit, limit))
            .collect();
        Mat { rows, cols, data }
    }

    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows in Mat::from_rows");
            data.extend_from_slice(row);
        }
        Mat { rows: r, cols: c, data }
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn fill(&mut self, v: f64) {
        self.data.iter_mut().for_each(|x| *x = v);
    }
}

/// y += x·W for a row-major `[in, out]` weight matrix. Skips zero inputs,
/// which are common (zero-padded histories, post-ReLU activations).
#[inline]
pub fn matvec_acc(w: &Mat, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(w.rows, x.len());
    debug_assert_eq!(w.cols, y.len());
    for (i, &xi) in x.iter().enumerate() {
        if xi == 0.0 {
            continue;
        }
        let row = w.row(i);
        for (yo, &wo) in y.iter_mut().zip(row) {
            *yo += xi * wo;
        }
    }
}

/// dx = W·dy (gradient through the same `[in, out]` matrix).
#[inline]
pub fn matvec_t(w: &Mat, dy: &[f64], dx: &mut [f64]) {
    debug_assert_eq!(w.rows, dx.len());
    debug_assert_eq!(w.cols, dy.len());
    for (i, dxi) in dx.iter_mut().enumerate() {
        let row = w.row(i);
        let mut acc = 0.0;
        for (&wo, &dyo) in row.iter().zip(dy) {
            acc += wo * dyo;
        }
        *dxi += acc;
    }
}

/// dW += x ⊗ dy (outer-product gradient accumulation).
#[inline]
pub fn outer_acc(dw: &mut Mat, x: &[f64], dy: &[f64]) {
    debug_assert_eq!(dw.rows, x.len());
    debug_assert_eq!(dw.cols, dy.len());
    for (i, &xi) in x.iter().enumerate() {
        if xi == 0.0 {
            continue;
        }
        let row = dw.row_mut(i);
        for (go, &dyo) in row.iter_mut().zip(dy) {
            *go += xi * dyo;
        }
    }
}
