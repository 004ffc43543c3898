//! Periodic space(-time) grids, fields on them and Fourier multipliers.
//!
//! Fields are expanded as u(t, x) = Σ û(τ, ξ) e^{i(x·ξ + tτ)}, so the stored
//! Fourier coefficients are the DFT divided by the number of points and
//! ∂ₜ, ∂ⱼ act as iτ, iξⱼ. The discrete L² norm is the Riemann sum over the
//! periodic cell, which equals (cell volume · Σ|û|²)^{1/2} exactly.

pub mod bump;
pub mod caps;
pub mod dealias;
pub mod envelope;
pub(crate) mod fft;
pub mod field;
pub mod io;
pub mod multiplier;

pub use caps::{BoxFamily, CapSet};
pub use dealias::Dealiaser;
pub use envelope::{envelope_from_field, FrequencyEnvelope, ShellNorm};
pub use field::{Domain, Field, Kind, Mode, Repr};
pub use multiplier::{ModSign, Multiplier};

use crate::error::{Error, Result};
use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};
use std::f64::consts::PI;
use std::sync::Arc;

/// Periodic time axis of a space-time block.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeAxis {
    pub nt: usize,
    pub period: f64,
}

/// Uniform periodic lattice with n points per axis on [0, L)^d.
pub struct Grid {
    pub d: usize,
    pub n: usize,
    pub length: f64,
    pub time: Option<TimeAxis>,
    xi: Vec<f64>,
    abs: Vec<f64>,
    nyquist: Vec<bool>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    time_plans: Option<(Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>)>,
    dealias: std::sync::OnceLock<Dealiaser>,
}

impl std::fmt::Debug for Grid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Grid")
            .field("d", &self.d)
            .field("n", &self.n)
            .field("length", &self.length)
            .field("time", &self.time)
            .finish()
    }
}

/// Signed wave number of DFT index i on an n-point axis (Nyquist maps to -n/2).
#[inline]
pub fn wavenumber(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

impl Grid {
    pub fn new(d: usize, n: usize, length: f64) -> Result<Arc<Grid>> {
        Self::build(d, n, length, None)
    }

    pub fn with_time(d: usize, n: usize, length: f64, nt: usize, period: f64) -> Result<Arc<Grid>> {
        Self::build(d, n, length, Some(TimeAxis { nt, period }))
    }

    fn build(d: usize, n: usize, length: f64, time: Option<TimeAxis>) -> Result<Arc<Grid>> {
        if !(1..=4).contains(&d) {
            return Err(Error::UnsupportedDimension(d));
        }
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!("n = {n} must be a power of two ≥ 2")));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidGrid(format!("period L = {length}")));
        }
        if let Some(ta) = time {
            if ta.nt < 2 || !(ta.period > 0.0) {
                return Err(Error::InvalidGrid(format!("time axis {ta:?}")));
            }
        }
        let nsp = n.pow(d as u32);
        let dk = 2.0 * PI / length;
        let mut xi = vec![0.0; nsp * d];
        let mut abs = vec![0.0; nsp];
        let mut nyquist = vec![false; nsp];
        for idx in 0..nsp {
            let mut rem = idx;
            let mut s = 0.0;
            for a in (0..d).rev() {
                let i = rem % n;
                rem /= n;
                let k = wavenumber(i, n) as f64 * dk;
                xi[idx * d + a] = k;
                s += k * k;
                if i == n / 2 {
                    nyquist[idx] = true;
                }
            }
            abs[idx] = s.sqrt();
        }
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let time_plans = time.map(|ta| (planner.plan_fft_forward(ta.nt), planner.plan_fft_inverse(ta.nt)));
        Ok(Arc::new(Grid { d, n, length, time, xi, abs, nyquist, fwd, inv, time_plans, dealias: std::sync::OnceLock::new() }))
    }

    /// Same lattice with the given time axis attached.
    pub fn attach_time(&self, nt: usize, period: f64) -> Result<Arc<Grid>> {
        Self::with_time(self.d, self.n, self.length, nt, period)
    }

    /// Shared 3/2-padded product engine for this lattice.
    pub fn dealiaser(&self) -> &Dealiaser {
        self.dealias.get_or_init(|| Dealiaser::new(self, true))
    }

    /// Number of spatial points n^d.
    #[inline]
    pub fn nsp(&self) -> usize {
        self.xi.len() / self.d
    }

    pub fn time_axis(&self) -> Result<TimeAxis> {
        self.time.ok_or(Error::NoTimeAxis)
    }

    /// Lattice spacing of the dual lattice, 2π/L.
    #[inline]
    pub fn dk(&self) -> f64 {
        2.0 * PI / self.length
    }

    #[inline]
    pub fn dx(&self) -> f64 {
        self.length / self.n as f64
    }

    /// Largest representable |ξᵢ| = πn/L.
    pub fn nyquist_frequency(&self) -> f64 {
        PI * self.n as f64 / self.length
    }

    /// Cell volume L^d.
    pub fn volume(&self) -> f64 {
        self.length.powi(self.d as i32)
    }

    #[inline]
    pub fn xi(&self, idx: usize) -> &[f64] {
        &self.xi[idx * self.d..(idx + 1) * self.d]
    }

    #[inline]
    pub fn abs_xi(&self, idx: usize) -> f64 {
        self.abs[idx]
    }

    /// True if any component of the mode sits on the Nyquist index.
    #[inline]
    pub fn is_nyquist(&self, idx: usize) -> bool {
        self.nyquist[idx]
    }

    /// Time frequency τ of time index j on the attached axis.
    #[inline]
    pub fn tau(&self, j: usize) -> f64 {
        let ta = self.time.expect("grid has no time axis");
        wavenumber(j, ta.nt) as f64 * 2.0 * PI / ta.period
    }

    /// Sample time of index j.
    pub fn time_at(&self, j: usize) -> f64 {
        let ta = self.time.expect("grid has no time axis");
        j as f64 * ta.period / ta.nt as f64
    }

    /// Physical coordinates of spatial index idx.
    pub fn x(&self, idx: usize) -> [f64; 4] {
        let mut out = [0.0; 4];
        let mut rem = idx;
        for a in (0..self.d).rev() {
            out[a] = (rem % self.n) as f64 * self.dx();
            rem /= self.n;
        }
        out
    }

    /// Spatial index of a signed wave-number vector, if representable.
    pub fn index_of(&self, m: &[i64]) -> Option<usize> {
        let n = self.n as i64;
        let mut idx = 0usize;
        for &k in m {
            if k < -n / 2 || k >= n / 2 {
                return None;
            }
            idx = idx * self.n + k.rem_euclid(n) as usize;
        }
        Some(idx)
    }

    /// Signed wave-number vector of a spatial index.
    pub fn wavenumbers_of(&self, idx: usize) -> Vec<i64> {
        let mut out = vec![0; self.d];
        let mut rem = idx;
        for a in (0..self.d).rev() {
            out[a] = wavenumber(rem % self.n, self.n);
            rem /= self.n;
        }
        out
    }

    /// Index of -ξ for spatial index idx (Nyquist components map to themselves).
    pub fn negate_index(&self, idx: usize) -> usize {
        let m: Vec<i64> = self.wavenumbers_of(idx).iter().map(|k| -k).collect();
        let n = self.n as i64;
        m.iter().fold(0usize, |acc, &k| acc * self.n + k.rem_euclid(n) as usize)
    }

    /// Smallest and largest dyadic shell index that can meet the lattice.
    pub fn shell_range(&self) -> (i32, i32) {
        let lo = self.dk().log2().floor() as i32 - 1;
        let hi = (self.nyquist_frequency() * (self.d as f64).sqrt()).log2().ceil() as i32 + 1;
        (lo, hi)
    }

    fn spatial_dims(&self) -> Vec<usize> {
        vec![self.n; self.d]
    }

    /// In-place spatial transform of every length-n^d block of `data`.
    /// Forward transforms are normalized by 1/n^d.
    pub(crate) fn fft_space(&self, data: &mut [C64], forward: bool) {
        let nsp = self.nsp();
        let dims = self.spatial_dims();
        let axes: Vec<usize> = (0..self.d).collect();
        let plan = if forward { &self.fwd } else { &self.inv };
        let plans = vec![plan.clone(); self.d];
        let nblocks = data.len() / nsp;
        // treat the blocks as a leading axis of length nblocks
        let mut all_dims = vec![nblocks];
        all_dims.extend(dims);
        let shifted: Vec<usize> = axes.iter().map(|a| a + 1).collect();
        fft::fft_axes(data, &all_dims, &shifted, &plans);
        if forward {
            let s = 1.0 / nsp as f64;
            crate::par::for_each_chunk(data, 1 << 14, |_, c| c.iter_mut().for_each(|v| *v *= s));
        }
    }

    /// In-place transform along the time axis of an nt × n^d buffer.
    pub(crate) fn fft_time(&self, data: &mut [C64], forward: bool) -> Result<()> {
        let ta = self.time_axis()?;
        let (f, i) = self.time_plans.as_ref().unwrap();
        let plan = if forward { f } else { i };
        fft::fft_axis(data, &[ta.nt, self.nsp()], 0, plan);
        if forward {
            let s = 1.0 / ta.nt as f64;
            crate::par::for_each_chunk(data, 1 << 14, |_, c| c.iter_mut().for_each(|v| *v *= s));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_sizes() {
        assert!(Grid::new(2, 12, 1.0).is_err());
        assert!(Grid::new(5, 8, 1.0).is_err());
        assert!(Grid::new(2, 8, -1.0).is_err());
    }

    #[test]
    fn lattice_is_dft_dual() {
        let g = Grid::new(2, 8, 4.0 * PI).unwrap();
        assert_eq!(g.nsp(), 64);
        let idx = g.index_of(&[3, -2]).unwrap();
        assert_eq!(g.xi(idx), &[1.5, -1.0]);
        assert_eq!(g.wavenumbers_of(idx), vec![3, -2]);
        assert!(g.is_nyquist(g.index_of(&[-4, 0]).unwrap()));
        assert!(g.index_of(&[4, 0]).is_none());
        let neg = g.negate_index(idx);
        assert_eq!(g.wavenumbers_of(neg), vec![-3, 2]);
    }
}
