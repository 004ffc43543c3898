//! Pointwise products on a 3/2 zero-padded lattice.
//!
//! Inputs are band-limited to |kᵢ| ≤ n/2, so quadratic products live in
//! |kᵢ| ≤ n. On a lattice with m ≥ 3n/2 points the aliased copies of those
//! modes fall outside the retained band and truncation removes them exactly.
//! Outputs have their Nyquist modes zeroed.

use super::fft;
use super::field::{Domain, Field, Kind, Repr};
use super::{wavenumber, Grid};
use crate::error::{Error, Result};
use crate::par;
use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

const ZERO: C64 = C64::new(0.0, 0.0);
/// Upper bound on input (and output) components of one product call.
pub const MAX_COMPONENTS: usize = 32;

pub struct Dealiaser {
    d: usize,
    n: usize,
    m: usize,
    /// Padded index of each retained lattice index.
    embed: Vec<usize>,
    keep: Vec<bool>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Dealiaser {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Dealiaser(d={}, n={} -> m={})", self.d, self.n, self.m)
    }
}

impl Dealiaser {
    /// `padded` = false gives plain collocation products on the n-lattice.
    pub fn new(grid: &Grid, padded: bool) -> Dealiaser {
        let (d, n) = (grid.d, grid.n);
        let m = if padded { (3 * n).div_ceil(2) } else { n };
        let nsp = grid.nsp();
        let mut embed = vec![0; nsp];
        let mut keep = vec![true; nsp];
        for (idx, e) in embed.iter_mut().enumerate() {
            let mut rem = idx;
            let mut stride = 1;
            let mut out = 0;
            for _ in 0..d {
                let i = rem % n;
                rem /= n;
                let k = wavenumber(i, n);
                out += k.rem_euclid(m as i64) as usize * stride;
                stride *= m;
            }
            *e = out;
            keep[idx] = !grid.is_nyquist(idx);
        }
        let mut planner = FftPlanner::new();
        Dealiaser { d, n, m, embed, keep, fwd: planner.plan_fft_forward(m), inv: planner.plan_fft_inverse(m) }
    }

    pub fn padded_size(&self) -> usize {
        self.m
    }

    fn transform(&self, data: &mut [C64], forward: bool) {
        let dims = vec![self.m; self.d];
        let axes: Vec<usize> = (0..self.d).collect();
        let plan = if forward { &self.fwd } else { &self.inv };
        fft::fft_axes(data, &dims, &axes, &vec![plan.clone(); self.d]);
    }

    /// Pointwise map of several spatial Fourier slices: `f(inputs, outputs)`
    /// receives the concatenated input components at one padded point.
    /// Returns `nout` Fourier slices on the unpadded lattice.
    pub fn product_slices<F>(&self, inputs: &[&[C64]], nout: usize, f: &F) -> Vec<Vec<C64>>
    where
        F: Fn(&[C64], &mut [C64]) + Sync + Send,
    {
        let mp = self.m.pow(self.d as u32);
        let nin = inputs.len();
        assert!(nin <= MAX_COMPONENTS && nout <= MAX_COMPONENTS);
        let padded: Vec<Vec<C64>> = par::map_slice(inputs, |src| {
            let mut buf = vec![ZERO; mp];
            for (i, v) in src.iter().enumerate() {
                buf[self.embed[i]] = *v;
            }
            self.transform(&mut buf, false);
            buf
        });
        let mut outs = vec![vec![ZERO; mp]; nout];
        {
            let vals = par::map_range(mp, |p| {
                let mut inp = [ZERO; MAX_COMPONENTS];
                for c in 0..nin {
                    inp[c] = padded[c][p];
                }
                let mut o = [ZERO; MAX_COMPONENTS];
                f(&inp[..nin], &mut o[..nout]);
                o
            });
            for (p, o) in vals.iter().enumerate() {
                for c in 0..nout {
                    outs[c][p] = o[c];
                }
            }
        }
        let scale = 1.0 / mp as f64;
        par::map_slice(&outs, |buf| {
            let mut buf = buf.clone();
            self.transform(&mut buf, true);
            self.embed.iter().zip(&self.keep).map(|(&e, &k)| if k { buf[e] * scale } else { ZERO }).collect()
        })
    }

    /// Dealiased pointwise map of fields on the same grid. Returns a field in
    /// Fourier (spatial) or Mixed (space-time) representation.
    pub fn product<F>(&self, inputs: &[&Field], kind: Kind, nout: usize, f: F) -> Result<Field>
    where
        F: Fn(&[C64], &mut [C64]) + Sync + Send,
    {
        let first = inputs.first().ok_or_else(|| Error::Shape("no inputs".into()))?;
        if first.grid.n != self.n || first.grid.d != self.d {
            return Err(Error::Shape("dealiaser built for another lattice".into()));
        }
        let work = if first.domain == Domain::SpaceTime { Repr::Mixed } else { Repr::Fourier };
        let conv: Vec<Field> = inputs
            .iter()
            .map(|x| {
                if x.domain != first.domain || x.block_len() != first.block_len() {
                    Err(Error::Shape(format!("{x:?} vs {first:?}")))
                } else {
                    Ok(x.to_repr(work))
                }
            })
            .collect::<Result<_>>()?;
        let nsp = first.grid.nsp();
        let mut out = Field::zeros(&first.grid, kind, nout, first.domain, work);
        for t in 0..first.nt() {
            let slices: Vec<&[C64]> = conv.iter().flat_map(|x| x.comps.iter().map(move |c| &c[t * nsp..(t + 1) * nsp])).collect();
            let res = self.product_slices(&slices, nout, &f);
            for (c, r) in res.into_iter().enumerate() {
                out.comps[c][t * nsp..(t + 1) * nsp].copy_from_slice(&r);
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn product_of_high_modes_is_not_aliased() {
        let g = Grid::new(1, 16, 2.0 * PI).unwrap();
        // e^{6ix}·e^{5ix} = e^{11ix} lies outside the band and must vanish;
        // plain collocation would alias it to k = -5.
        let a = Field::from_fn(&g, Kind::Scalar, 1, Domain::Space, |x, _| vec![C64::from_polar(1.0, 6.0 * x[0])]);
        let b = Field::from_fn(&g, Kind::Scalar, 1, Domain::Space, |x, _| vec![C64::from_polar(1.0, 5.0 * x[0])]);
        let mul = |i: &[C64], o: &mut [C64]| o[0] = i[0] * i[1];
        let pad = Dealiaser::new(&g, true).product(&[&a, &b], Kind::Scalar, 1, mul).unwrap();
        assert!(pad.norm_l2() < 1e-14);
        let raw = Dealiaser::new(&g, false).product(&[&a, &b], Kind::Scalar, 1, mul).unwrap();
        assert!((raw.norm_l2() - a.norm_l2()).abs() < 1e-12);
    }

    #[test]
    fn band_limited_product_is_exact() {
        let g = Grid::new(2, 16, 2.0 * PI).unwrap();
        let a = Field::from_fn(&g, Kind::Scalar, 1, Domain::Space, |x, _| vec![C64::new((2.0 * x[0]).cos(), x[1].sin())]);
        let b = Field::from_fn(&g, Kind::Scalar, 1, Domain::Space, |x, _| vec![C64::new((3.0 * x[1]).sin(), 0.0)]);
        let want = Field::from_fn(&g, Kind::Scalar, 1, Domain::Space, |x, _| vec![C64::new((2.0 * x[0]).cos(), x[1].sin()) * (3.0 * x[1]).sin()]);
        let got = Dealiaser::new(&g, true).product(&[&a, &b], Kind::Scalar, 1, |i, o| o[0] = i[0] * i[1]).unwrap();
        assert!(got.rel_dist(&want).unwrap() < 1e-13);
    }
}
