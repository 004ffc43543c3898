//! Axis-wise multidimensional FFTs on row-major buffers.

use crate::par;
use num_complex::Complex64 as C64;
use rustfft::Fft;
use std::sync::Arc;

const TARGET_CHUNK: usize = 1 << 14;

/// In-place unnormalized transform of `data` (shape `dims`, row-major) along `axis`.
pub(crate) fn fft_axis(data: &mut [C64], dims: &[usize], axis: usize, plan: &Arc<dyn Fft<f64>>) {
    let len = dims[axis];
    if len == 1 {
        return;
    }
    let inner: usize = dims[axis + 1..].iter().product();
    let lines_per_chunk = (TARGET_CHUNK / len).max(1);
    if inner == 1 {
        par::for_each_chunk(data, len * lines_per_chunk, |_, chunk| plan.process(chunk));
        return;
    }
    let mut lines = vec![C64::new(0.0, 0.0); data.len()];
    {
        let src: &[C64] = data;
        par::for_each_chunk(&mut lines, len, |li, line| {
            let o = li / inner;
            let i = li % inner;
            let base = o * len * inner + i;
            for (k, v) in line.iter_mut().enumerate() {
                *v = src[base + k * inner];
            }
        });
    }
    par::for_each_chunk(&mut lines, len * lines_per_chunk, |_, chunk| plan.process(chunk));
    let lines: &[C64] = &lines;
    par::for_each_chunk(data, len * inner, |o, block| {
        for k in 0..len {
            for i in 0..inner {
                block[k * inner + i] = lines[(o * inner + i) * len + k];
            }
        }
    });
}

/// Transform along every axis listed in `axes`.
pub(crate) fn fft_axes(data: &mut [C64], dims: &[usize], axes: &[usize], plans: &[Arc<dyn Fft<f64>>]) {
    for (&ax, plan) in axes.iter().zip(plans) {
        fft_axis(data, dims, ax, plan);
    }
}
