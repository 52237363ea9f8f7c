//! Contiguous `B x C x H x W` tensor, the carrier for all layer math.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::nn::{single_threaded, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor4<S> {
    shape: [usize; 4],
    data: Vec<S>,
}

impl<S: Scalar> Tensor4<S> {
    pub fn zeros(shape: [usize; 4]) -> Self {
        let n = shape.iter().product();
        Tensor4 {
            shape,
            data: vec![S::ZERO; n],
        }
    }

    pub fn from_vec(shape: [usize; 4], data: Vec<S>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if data.len() != n {
            return Err(Error::Shape(format!(
                "tensor data length {} does not match shape {:?}",
                data.len(),
                shape
            )));
        }
        Ok(Tensor4 { shape, data })
    }

    pub fn from_fn(shape: [usize; 4], mut f: impl FnMut() -> S) -> Self {
        let n = shape.iter().product();
        Tensor4 {
            shape,
            data: (0..n).map(|_| f()).collect(),
        }
    }

    #[inline]
    pub fn shape(&self) -> [usize; 4] {
        self.shape
    }

    #[inline]
    pub fn batch(&self) -> usize {
        self.shape[0]
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.shape[1]
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.shape[2]
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.shape[3]
    }

    #[inline]
    pub fn numel(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn plane_len(&self) -> usize {
        self.shape[2] * self.shape[3]
    }

    #[inline]
    pub fn data(&self) -> &[S] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [S] {
        &mut self.data
    }

    /// The `H x W` slice for one (batch, channel) pair.
    #[inline]
    pub fn plane(&self, b: usize, c: usize) -> &[S] {
        let p = self.plane_len();
        let off = (b * self.shape[1] + c) * p;
        &self.data[off..off + p]
    }

    /// One row `x[b, c, h, ..]`.
    #[inline]
    pub fn row(&self, b: usize, c: usize, h: usize) -> &[S] {
        let w = self.shape[3];
        let off = ((b * self.shape[1] + c) * self.shape[2] + h) * w;
        &self.data[off..off + w]
    }

    #[inline]
    pub fn at(&self, b: usize, c: usize, h: usize, w: usize) -> S {
        self.data[((b * self.shape[1] + c) * self.shape[2] + h) * self.shape[3] + w]
    }

    #[inline]
    pub fn at_mut(&mut self, b: usize, c: usize, h: usize, w: usize) -> &mut S {
        &mut self.data[((b * self.shape[1] + c) * self.shape[2] + h) * self.shape[3] + w]
    }

    pub fn map(&self, f: impl Fn(S) -> S) -> Self {
        Tensor4 {
            shape: self.shape,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Runs `f(plane_index, plane)` over all (batch, channel) planes,
    /// in parallel unless single-threaded mode is forced. Planes are
    /// disjoint and every reduction stays inside one plane, so the result
    /// is bit-identical in both modes.
    pub fn for_each_plane_mut(&mut self, f: impl Fn(usize, &mut [S]) + Send + Sync) {
        let plane = self.plane_len();
        if plane == 0 {
            return;
        }
        if single_threaded() {
            self.data
                .chunks_mut(plane)
                .enumerate()
                .for_each(|(i, p)| f(i, p));
        } else {
            self.data
                .par_chunks_mut(plane)
                .enumerate()
                .for_each(|(i, p)| f(i, p));
        }
    }

    /// Converts element type (used when loading f32 checkpoints into f64
    /// gradient-check models and vice versa).
    pub fn cast<T: Scalar>(&self) -> Tensor4<T> {
        Tensor4 {
            shape: self.shape,
            data: self.data.iter().map(|v| T::from_f64(v.to_f64())).collect(),
        }
    }
}

/// Splits a mutable slice into equal chunks and runs `f(chunk_index, chunk)`,
/// parallel unless single-threaded mode is forced.
pub(crate) fn for_each_chunk_mut<S: Send>(
    data: &mut [S],
    chunk: usize,
    f: impl Fn(usize, &mut [S]) + Send + Sync,
) {
    if chunk == 0 || data.is_empty() {
        return;
    }
    if single_threaded() {
        data.chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
    } else {
        data.par_chunks_mut(chunk)
            .enumerate()
            .for_each(|(i, c)| f(i, c));
    }
}

/// Dot product with four independent accumulators so the reduction
/// vectorizes. The summation order is fixed (identical across runs and
/// thread counts); it intentionally differs from a naive left fold.
#[inline]
pub(crate) fn dot_unrolled<S: Scalar>(a: &[S], b: &[S]) -> S {
    let n = a.len().min(b.len());
    let (mut s0, mut s1, mut s2, mut s3) = (S::ZERO, S::ZERO, S::ZERO, S::ZERO);
    let chunks = n / 4;
    for i in 0..chunks {
        let j = 4 * i;
        s0 += a[j] * b[j];
        s1 += a[j + 1] * b[j + 1];
        s2 += a[j + 2] * b[j + 2];
        s3 += a[j + 3] * b[j + 3];
    }
    let mut tail = S::ZERO;
    for j in 4 * chunks..n {
        tail += a[j] * b[j];
    }
    ((s0 + s1) + (s2 + s3)) + tail
}

/// Slice sum with four independent accumulators (same ordering notes as
/// [`dot_unrolled`]).
#[inline]
pub(crate) fn sum_unrolled<S: Scalar>(a: &[S]) -> S {
    let n = a.len();
    let (mut s0, mut s1, mut s2, mut s3) = (S::ZERO, S::ZERO, S::ZERO, S::ZERO);
    let chunks = n / 4;
    for i in 0..chunks {
        let j = 4 * i;
        s0 += a[j];
        s1 += a[j + 1];
        s2 += a[j + 2];
        s3 += a[j + 3];
    }
    let mut tail = S::ZERO;
    for j in 4 * chunks..n {
        tail += a[j];
    }
    ((s0 + s1) + (s2 + s3)) + tail
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indexing_is_row_major_w_fastest() {
        let t = Tensor4::from_vec([2, 3, 4, 5], (0..120).map(|i| i as f64).collect()).unwrap();
        assert_eq!(t.at(0, 0, 0, 0), 0.0);
        assert_eq!(t.at(0, 0, 0, 4), 4.0);
        assert_eq!(t.at(0, 0, 1, 0), 5.0);
        assert_eq!(t.at(0, 1, 0, 0), 20.0);
        assert_eq!(t.at(1, 0, 0, 0), 60.0);
        assert_eq!(t.row(1, 2, 3), &[115.0, 116.0, 117.0, 118.0, 119.0]);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        assert!(Tensor4::<f32>::from_vec([1, 1, 2, 2], vec![0.0; 5]).is_err());
    }

    #[test]
    fn plane_iteration_covers_all_planes_once() {
        let mut t = Tensor4::<f64>::zeros([3, 2, 2, 2]);
        t.for_each_plane_mut(|i, p| p.iter_mut().for_each(|v| *v = i as f64));
        for b in 0..3 {
            for c in 0..2 {
                let want = (b * 2 + c) as f64;
                assert!(t.plane(b, c).iter().all(|&v| v == want));
            }
        }
    }
}
