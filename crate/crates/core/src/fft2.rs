//! Two-dimensional complex FFT over row-major buffers, built on `rustfft`.

use std::sync::{Arc, Mutex};

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::real::Real;

/// Planned 2D transform of a `rows x cols` row-major array.
///
/// Transforms are unnormalized in both directions.
pub(crate) struct Fft2<T: Real> {
    rows: usize,
    cols: usize,
    row_fwd: Arc<dyn Fft<T>>,
    row_inv: Arc<dyn Fft<T>>,
    col_fwd: Arc<dyn Fft<T>>,
    col_inv: Arc<dyn Fft<T>>,
    // transpose buffer followed by FFT scratch, reused across calls
    work: Mutex<Vec<Complex<T>>>,
}

impl<T: Real> Clone for Fft2<T> {
    fn clone(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            row_fwd: Arc::clone(&self.row_fwd),
            row_inv: Arc::clone(&self.row_inv),
            col_fwd: Arc::clone(&self.col_fwd),
            col_inv: Arc::clone(&self.col_inv),
            work: Mutex::new(Vec::new()),
        }
    }
}

impl<T: Real> Fft2<T> {
    pub(crate) fn new(rows: usize, cols: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            rows,
            cols,
            row_fwd: planner.plan_fft_forward(cols),
            row_inv: planner.plan_fft_inverse(cols),
            col_fwd: planner.plan_fft_forward(rows),
            col_inv: planner.plan_fft_inverse(rows),
            work: Mutex::new(Vec::new()),
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub(crate) fn forward(&self, data: &mut [Complex<T>]) {
        self.run(data, &self.row_fwd, &self.col_fwd);
    }

    pub(crate) fn inverse(&self, data: &mut [Complex<T>]) {
        self.run(data, &self.row_inv, &self.col_inv);
    }

    fn run(&self, data: &mut [Complex<T>], row: &Arc<dyn Fft<T>>, col: &Arc<dyn Fft<T>>) {
        assert_eq!(data.len(), self.len());
        let scratch_len = row.get_inplace_scratch_len().max(col.get_inplace_scratch_len());
        let mut work = self.work.lock().unwrap_or_else(|e| e.into_inner());
        if work.len() < data.len() + scratch_len {
            work.resize(data.len() + scratch_len, Complex::new(T::zero(), T::zero()));
        }
        let (t, scratch) = work.split_at_mut(data.len());
        let scratch = &mut scratch[..scratch_len];
        row.process_with_scratch(data, scratch);
        transpose(data, t, self.rows, self.cols);
        col.process_with_scratch(t, scratch);
        transpose(t, data, self.cols, self.rows);
    }
}

/// Writes the transpose of the `rows x cols` array `src` into `dst`.
fn transpose<T: Copy>(src: &[T], dst: &mut [T], rows: usize, cols: usize) {
    const B: usize = 32;
    for r0 in (0..rows).step_by(B) {
        for c0 in (0..cols).step_by(B) {
            for r in r0..(r0 + B).min(rows) {
                for c in c0..(c0 + B).min(cols) {
                    dst[c * rows + r] = src[r * cols + c];
                }
            }
        }
    }
}
