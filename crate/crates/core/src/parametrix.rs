//! Renormalized parametrix for the paradifferential covariant wave and
//! half-wave operators driven by a low-frequency free potential.
//!
//! Everything lives on a spatial grid; time enters analytically. The free
//! potential is stored as a finite sum of plane waves e^{i(x·η ± t|η|)}, so the
//! phase Ψ_s(t, x, ξ) and its time derivatives are exact trigonometric sums.
//! The pseudodifferential operators e^{±iΨ}(t, x, D) and e^{±iΨ}(D, y, s) are
//! applied by direct summation over the retained modes 2⁻² ≤ |ξ| ≤ 2².
//!
//! Operators at unit frequency use P̃₀ = Σ_{|k|≤2} P_k, which is the identity on
//! the retained annulus.

use crate::error::{Error, Result};
use crate::grid::{bump, Domain, Field, Grid, Kind, Repr};
use crate::par;
use crate::spinor::Sign;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

const ZERO: C64 = C64::new(0.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// Inner and outer radius of the retained annulus.
pub const ANNULUS: (f64, f64) = (0.25, 4.0);

/// Largest Q⁺ modulation accepted by the half-wave construction.
pub const MAX_MODULATION: f64 = 1.0 / 16.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseParams {
    /// Angular cutoff exponent: shell k keeps angles ≳ 2^{σk} from ±ω.
    pub sigma: f64,
    /// Only potential shells k < −C enter.
    pub c: i32,
}

impl Default for PhaseParams {
    fn default() -> Self {
        PhaseParams { sigma: 0.1, c: 2 }
    }
}

/// P̃₀ symbol.
fn unit_band(abs: f64) -> f64 {
    (-2..=2).map(|k| bump::shell(abs, k)).sum()
}

/// One plane-wave pair of the free potential.
#[derive(Clone, Debug)]
pub struct LowMode {
    pub idx: usize,
    pub eta: Vec<f64>,
    pub abs: f64,
    /// P_{<−C} symbol at η.
    pub low: f64,
    /// Vector amplitudes of e^{i(x·η + t|η|)} and e^{i(x·η − t|η|)}.
    pub amp: [Vec<C64>; 2],
}

/// Divergence-free free wave restricted to the frequencies seen by P_{<−C}.
#[derive(Clone, Debug)]
pub struct LowFreeWave {
    pub grid: Arc<Grid>,
    pub c: i32,
    pub modes: Vec<LowMode>,
}

impl LowFreeWave {
    /// Splits data (A, ∂ₜA) into forward and backward waves per mode.
    pub fn from_data(ax: &Field, ax_dot: &Field, c: i32) -> Result<LowFreeWave> {
        let grid = ax.grid.clone();
        let d = grid.d;
        if ax.ncomp() != d || ax_dot.ncomp() != d {
            return Err(Error::Shape("free potential needs d components".into()));
        }
        let a = ax.to_repr(Repr::Fourier);
        let ad = ax_dot.to_repr(Repr::Fourier);
        let size = a.max_abs().max(ad.max_abs()).max(f64::MIN_POSITIVE);
        let mean = (0..d).map(|j| a.comps[j][0].norm() + ad.comps[j][0].norm()).fold(0.0, f64::max);
        if mean > 1e-12 * size {
            return Err(Error::NonzeroMean { op: "free potential", mean });
        }
        let mut modes = Vec::new();
        for idx in 1..grid.nsp() {
            let abs = grid.abs_xi(idx);
            let low = bump::below(abs, -c);
            if low == 0.0 || grid.is_nyquist(idx) {
                continue;
            }
            let eta = grid.xi(idx).to_vec();
            let mut plus = vec![ZERO; d];
            let mut minus = vec![ZERO; d];
            for j in 0..d {
                let v = ad.comps[j][idx] / C64::new(0.0, abs);
                plus[j] = 0.5 * (a.comps[j][idx] + v);
                minus[j] = 0.5 * (a.comps[j][idx] - v);
            }
            let div: f64 = (0..d).map(|j| eta[j] * a.comps[j][idx]).sum::<C64>().norm() + (0..d).map(|j| eta[j] * ad.comps[j][idx]).sum::<C64>().norm();
            if div > 1e-10 * abs * size {
                return Err(Error::Config(format!("free potential is not divergence free at mode {idx}")));
            }
            if plus.iter().chain(&minus).all(|z| *z == ZERO) {
                continue;
            }
            modes.push(LowMode { idx, eta, abs, low, amp: [plus, minus] });
        }
        Ok(LowFreeWave { grid, c, modes })
    }

    /// Random real Coulomb free wave on the modes 0 < |η| < 2^{−C}, scaled so
    /// that max |A(0)| = ε.
    pub fn random(grid: &Arc<Grid>, eps: f64, c: i32, seed: u64) -> Result<LowFreeWave> {
        let d = grid.d;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut a = Field::vector(grid, Domain::Space, Repr::Fourier);
        let mut ad = Field::vector(grid, Domain::Space, Repr::Fourier);
        for idx in 1..grid.nsp() {
            let neg = grid.negate_index(idx);
            if neg < idx || grid.is_nyquist(idx) || bump::below(grid.abs_xi(idx), -c) == 0.0 {
                continue;
            }
            let eta = grid.xi(idx);
            let abs = grid.abs_xi(idx);
            for (field, scale) in [(&mut a, 1.0), (&mut ad, abs)] {
                let mut v: Vec<C64> = (0..d).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
                let dot: C64 = (0..d).map(|j| v[j] * eta[j]).sum::<C64>() / (abs * abs);
                for j in 0..d {
                    v[j] = (v[j] - dot * eta[j]) * scale;
                    field.comps[j][idx] = v[j];
                    field.comps[j][neg] = v[j].conj();
                }
            }
        }
        let m = a.max_abs();
        if m == 0.0 {
            return Err(Error::Unresolvable(format!("no lattice modes below 2^{}", -c)));
        }
        LowFreeWave::from_data(&a.scale_re(eps / m), &ad.scale_re(eps / m), c)
    }

    pub fn zero(grid: &Arc<Grid>, c: i32) -> LowFreeWave {
        LowFreeWave { grid: grid.clone(), c, modes: Vec::new() }
    }

    pub fn scaled(&self, f: f64) -> LowFreeWave {
        let mut out = self.clone();
        for m in out.modes.iter_mut() {
            for a in m.amp.iter_mut() {
                a.iter_mut().for_each(|z| *z *= f);
            }
        }
        out
    }

    pub fn negated(&self) -> LowFreeWave {
        self.scaled(-1.0)
    }

    /// P_{<−C}A(t) as a spatial Fourier field.
    pub fn low_at(&self, t: f64) -> Field {
        let mut f = Field::vector(&self.grid, Domain::Space, Repr::Fourier);
        for m in &self.modes {
            let ep = C64::from_polar(1.0, t * m.abs);
            for j in 0..self.grid.d {
                f.comps[j][m.idx] += m.low * (m.amp[0][j] * ep + m.amp[1][j] * ep.conj());
            }
        }
        f
    }

    /// A(t) restricted to the stored modes, without the P_{<−C} weight.
    pub fn at(&self, t: f64) -> Field {
        let mut f = Field::vector(&self.grid, Domain::Space, Repr::Fourier);
        for m in &self.modes {
            let ep = C64::from_polar(1.0, t * m.abs);
            for j in 0..self.grid.d {
                f.comps[j][m.idx] += m.amp[0][j] * ep + m.amp[1][j] * ep.conj();
            }
        }
        f
    }
}

/// Direct-summation quantizer on the retained annulus.
pub struct Quantizer {
    pub grid: Arc<Grid>,
    /// Spatial indices of the retained modes.
    pub retained: Vec<usize>,
    abs: Vec<f64>,
    dirs: Vec<Vec<f64>>,
    /// Per retained mode, the DFT index along each axis.
    axis_idx: Vec<[usize; 4]>,
    /// e^{2πi·j·k/n} at [j·n + k].
    tab: Vec<C64>,
}

impl Quantizer {
    pub fn new(grid: &Arc<Grid>) -> Quantizer {
        let n = grid.n;
        let mut retained = Vec::new();
        for idx in 0..grid.nsp() {
            let a = grid.abs_xi(idx);
            if a >= ANNULUS.0 && a <= ANNULUS.1 && !grid.is_nyquist(idx) {
                retained.push(idx);
            }
        }
        let abs = retained.iter().map(|&i| grid.abs_xi(i)).collect();
        let dirs = retained.iter().map(|&i| grid.xi(i).iter().map(|x| x / grid.abs_xi(i)).collect()).collect();
        let axis_idx = retained
            .iter()
            .map(|&i| {
                let mut out = [0usize; 4];
                let mut rem = i;
                for a in (0..grid.d).rev() {
                    out[a] = rem % n;
                    rem /= n;
                }
                out
            })
            .collect();
        let tab = (0..n * n).map(|jk| C64::from_polar(1.0, 2.0 * std::f64::consts::PI * ((jk / n) * (jk % n)) as f64 / n as f64)).collect();
        Quantizer { grid: grid.clone(), retained, abs, dirs, axis_idx, tab }
    }

    pub fn len(&self) -> usize {
        self.retained.len()
    }

    pub fn is_empty(&self) -> bool {
        self.retained.is_empty()
    }

    /// e^{ix·ξ_r} at spatial point p.
    #[inline]
    fn plane(&self, p: &[usize; 4], r: usize) -> C64 {
        let n = self.grid.n;
        let k = &self.axis_idx[r];
        let mut z = self.tab[p[0] * n + k[0]];
        for a in 1..self.grid.d {
            z *= self.tab[p[a] * n + k[a]];
        }
        z
    }

    fn point_axes(&self, x: usize) -> [usize; 4] {
        let n = self.grid.n;
        let mut out = [0usize; 4];
        let mut rem = x;
        for a in (0..self.grid.d).rev() {
            out[a] = rem % n;
            rem /= n;
        }
        out
    }

    /// Coefficients of a spatial field on the retained modes. Energy outside the
    /// annulus above `tol` (relative) is an error.
    pub fn restrict(&self, f: &Field, tol: f64) -> Result<Vec<C64>> {
        if f.ncomp() != 1 || f.domain != Domain::Space {
            return Err(Error::Shape("quantizer acts on scalar spatial fields".into()));
        }
        let g = f.to_repr(Repr::Fourier);
        let total: f64 = g.comps[0].iter().map(|z| z.norm_sqr()).sum();
        let kept: Vec<C64> = self.retained.iter().map(|&i| g.comps[0][i]).collect();
        let inside: f64 = kept.iter().map(|z| z.norm_sqr()).sum();
        if total > 0.0 {
            let fraction = ((total - inside).max(0.0) / total).sqrt();
            if fraction > tol {
                return Err(Error::OutsideAnnulus { fraction });
            }
        }
        Ok(kept)
    }

    /// Spatial Fourier field from retained coefficients.
    pub fn extend(&self, coeffs: &[C64]) -> Field {
        let mut f = Field::scalar(&self.grid, Domain::Space, Repr::Fourier);
        for (&i, &c) in self.retained.iter().zip(coeffs) {
            f.comps[0][i] = c;
        }
        f
    }

    fn physical_field(&self, values: Vec<C64>) -> Field {
        let mut f = Field::scalar(&self.grid, Domain::Space, Repr::Physical);
        f.comps[0] = values;
        f.into_repr(Repr::Fourier)
    }

    /// Left quantization and its first two time derivatives:
    /// o₀ = Op(e)v₀, o₁ = Op(e)v₁ + Op(∂ₜe)v₀, o₂ = Op(e)v₂ + 2Op(∂ₜe)v₁ + Op(∂ₜ²e)v₀
    /// with e = e^{iκΨ(t,x,ξ)}. Missing inputs count as zero; `order` limits
    /// the outputs computed.
    fn left_jet(&self, ph: &Phase, t: f64, kappa: f64, v: [&[C64]; 3], order: usize) -> Vec<Vec<C64>> {
        let ev = ph.eval(t, order);
        let m = ph.table_width();
        let rows = par::map_range(self.grid.nsp(), |x| {
            let p = self.point_axes(x);
            let low = &ph.low_table[x * m..(x + 1) * m];
            let mut o = [ZERO; 3];
            for r in 0..self.len() {
                let (psi, psi_t, psi_tt) = ev.at(r, low, order);
                let e = self.plane(&p, r) * C64::from_polar(1.0, kappa * psi);
                o[0] += e * v[0][r];
                if order >= 1 {
                    let d1 = I * kappa * psi_t;
                    o[1] += e * (v[1][r] + d1 * v[0][r]);
                    if order >= 2 {
                        let d2 = I * kappa * psi_tt - psi_t * psi_t;
                        o[2] += e * (v[2][r] + 2.0 * d1 * v[1][r] + d2 * v[0][r]);
                    }
                }
            }
            o
        });
        (0..=order).map(|k| rows.iter().map(|o| o[k]).collect()).collect()
    }

    /// Right quantization (Op u)^(ξ) = N⁻¹ Σ_y e^{−iy·ξ} e^{iκΨ(t,y,ξ)} u(y) on
    /// the retained modes, with the time derivative when `du` is given.
    fn right_jet(&self, ph: &Phase, t: f64, kappa: f64, u: &[C64], du: Option<&[C64]>) -> (Vec<C64>, Option<Vec<C64>>) {
        let order = usize::from(du.is_some());
        let ev = ph.eval(t, order);
        let m = ph.table_width();
        let npts = self.grid.nsp();
        let scale = 1.0 / npts as f64;
        let axes: Vec<[usize; 4]> = (0..npts).map(|x| self.point_axes(x)).collect();
        let vals = par::map_range(self.len(), |r| {
            let mut o0 = ZERO;
            let mut o1 = ZERO;
            for y in 0..npts {
                let low = &ph.low_table[y * m..(y + 1) * m];
                let (psi, psi_t, _) = ev.at(r, low, order);
                let e = self.plane(&axes[y], r).conj() * C64::from_polar(1.0, kappa * psi);
                o0 += e * u[y];
                if let Some(du) = du {
                    o1 += e * (du[y] + I * kappa * psi_t * u[y]);
                }
            }
            (o0 * scale, o1 * scale)
        });
        let g = vals.iter().map(|v| v.0).collect();
        let dg = du.map(|_| vals.iter().map(|v| v.1).collect());
        (g, dg)
    }

    /// e^{iκΨ}(t, x, D) f.
    pub fn quantize_left(&self, ph: &Phase, t: f64, kappa: f64, f: &Field) -> Result<Field> {
        let v = self.restrict(f, 1e-10)?;
        let zero = vec![ZERO; self.len()];
        let out = self.left_jet(ph, t, kappa, [&v, &zero, &zero], 0);
        Ok(self.physical_field(out.into_iter().next().unwrap()))
    }

    /// ∂ₜ(e^{iκΨ})(t, x, D) f, the commutator of ∂ₜ with the left quantization.
    pub fn quantize_left_dt(&self, ph: &Phase, t: f64, kappa: f64, f: &Field) -> Result<Field> {
        let v = self.restrict(f, 1e-10)?;
        let zero = vec![ZERO; self.len()];
        let out = self.left_jet(ph, t, kappa, [&v, &zero, &zero], 1);
        Ok(self.physical_field(out[1].clone()))
    }

    /// e^{iκΨ}(D, y, t) f, restricted to the retained modes.
    pub fn quantize_right(&self, ph: &Phase, t: f64, kappa: f64, f: &Field) -> Result<Field> {
        if f.ncomp() != 1 || f.domain != Domain::Space {
            return Err(Error::Shape("quantizer acts on scalar spatial fields".into()));
        }
        let u = f.physical().comps.swap_remove(0);
        let (g, _) = self.right_jet(ph, t, kappa, &u, None);
        Ok(self.extend(&g))
    }
}

/// Phase Ψ_s(t, x, ξ) = Σ_{k<−C} L^ω_s Δ⁻¹_{ω⊥}(Π^ω_{>σk} P_k(ω·A)) for every retained
/// direction, stored as plane-wave coefficients.
pub struct Phase {
    pub sign: Sign,
    pub params: PhaseParams,
    /// coef[(r·M + m)·2 + σ] multiplies e^{i(x·η_m + σ|η_m|t)}.
    coef: Vec<C64>,
    freqs: Vec<f64>,
    /// e^{ix·η_m} at [x·M + m].
    low_table: Vec<C64>,
    /// The symbol of the transport operator −L^ω_{−s}, per coefficient, for
    /// the transport identity check.
    transport: Vec<C64>,
    /// Cutoff-filtered ω·a per coefficient.
    target: Vec<C64>,
    /// Modes inside the cutoff region whose denominator was too small.
    pub guarded: usize,
}

/// Phase coefficients evaluated at one time.
struct PhaseAt {
    m: usize,
    c0: Vec<C64>,
    c1: Vec<C64>,
    c2: Vec<C64>,
}

impl PhaseAt {
    /// (Ψ, ∂ₜΨ, ∂ₜ²Ψ) at retained mode r and the point whose low table is `low`.
    #[inline]
    fn at(&self, r: usize, low: &[C64], order: usize) -> (f64, f64, f64) {
        if self.m == 0 {
            return (0.0, 0.0, 0.0);
        }
        let base = r * self.m;
        let mut p = 0.0;
        let mut p1 = 0.0;
        let mut p2 = 0.0;
        for k in 0..self.m {
            let e = low[k];
            p += (self.c0[base + k] * e).re;
            if order >= 1 {
                p1 += (self.c1[base + k] * e).re;
            }
            if order >= 2 {
                p2 += (self.c2[base + k] * e).re;
            }
        }
        (p, p1, p2)
    }
}

/// Angle between η and the line through ω.
fn line_angle(eta: &[f64], abs: f64, omega: &[f64]) -> f64 {
    let c: f64 = eta.iter().zip(omega).map(|(a, b)| a * b).sum::<f64>().abs() / abs;
    c.min(1.0).acos()
}

impl Phase {
    pub fn build(q: &Quantizer, a: &LowFreeWave, sign: Sign, params: PhaseParams) -> Result<Phase> {
        if !(params.sigma > 0.0) {
            return Err(Error::Config(format!("σ = {} must be positive", params.sigma)));
        }
        let s = sign.value();
        let m = a.modes.len();
        let r_count = q.len();
        let mut coef = vec![ZERO; r_count * m * 2];
        let mut transport = vec![ZERO; r_count * m * 2];
        let mut target = vec![ZERO; r_count * m * 2];
        let mut guarded = 0;
        let per_dir = par::map_range(r_count, |r| {
            let omega = &q.dirs[r];
            let mut out = Vec::with_capacity(m * 2);
            let mut guards = 0;
            for md in &a.modes {
                let od: f64 = omega.iter().zip(&md.eta).map(|(w, e)| w * e).sum();
                let theta = line_angle(&md.eta, md.abs, omega);
                // Σ_{k<−C} χ_k(|η|)·(angular cutoff at 2^{σk})
                let mut w = 0.0;
                let k_top = -params.c - 1;
                let k_lo = md.abs.log2().floor() as i32 - 1;
                for k in k_lo..=k_top {
                    let sh = bump::shell(md.abs, k);
                    if sh > 0.0 {
                        w += sh * bump::angular_outside(theta, 2f64.powf(params.sigma * k as f64));
                    }
                }
                // space-time "<0" localization of the phase; Q_{<−2} is 1 on the cone
                w *= bump::below(md.abs, -2);
                let denom = md.abs * md.abs - od * od;
                for sg in 0..2 {
                    let tau = if sg == 0 { md.abs } else { -md.abs };
                    let wa: C64 = omega.iter().zip(&md.amp[sg]).map(|(o, z)| z * o).sum::<C64>() * w;
                    let l_s = I * (s * tau + od);
                    let minus_l_other = -I * (-s * tau + od);
                    let c = if w == 0.0 {
                        ZERO
                    } else if denom < 1e-8 * md.abs * md.abs {
                        guards += 1;
                        ZERO
                    } else {
                        l_s * (-1.0 / denom) * wa
                    };
                    out.push((c, minus_l_other, wa));
                }
            }
            (out, guards)
        });
        for (r, (vals, g)) in per_dir.into_iter().enumerate() {
            guarded += g;
            for (k, (c, t, w)) in vals.into_iter().enumerate() {
                coef[r * m * 2 + k] = c;
                transport[r * m * 2 + k] = t;
                target[r * m * 2 + k] = w;
            }
        }
        if guarded > 0 {
            return Err(Error::Identity(format!("{guarded} phase modes fell inside the angular cutoff")));
        }
        let npts = q.grid.nsp();
        let mut low_table = vec![ZERO; npts * m];
        for x in 0..npts {
            let p = q.grid.x(x);
            for (k, md) in a.modes.iter().enumerate() {
                let ph: f64 = md.eta.iter().zip(&p).map(|(e, y)| e * y).sum();
                low_table[x * m + k] = C64::from_polar(1.0, ph);
            }
        }
        let freqs = a.modes.iter().map(|md| md.abs).collect();
        let out = Phase { sign, params, coef, freqs, low_table, transport, target, guarded };
        let bound = out.max_abs();
        if !bound.is_finite() {
            return Err(Error::NonFinite { t: 0.0, what: "phase symbol".into() });
        }
        Ok(out)
    }

    fn table_width(&self) -> usize {
        self.freqs.len()
    }

    fn eval(&self, t: f64, order: usize) -> PhaseAt {
        let m = self.freqs.len();
        let rc = if m == 0 { 0 } else { self.coef.len() / (2 * m) };
        let mut c0 = vec![ZERO; rc * m];
        let mut c1 = vec![ZERO; if order >= 1 { rc * m } else { 0 }];
        let mut c2 = vec![ZERO; if order >= 2 { rc * m } else { 0 }];
        let rot: Vec<[C64; 2]> = self.freqs.iter().map(|&w| [C64::from_polar(1.0, w * t), C64::from_polar(1.0, -w * t)]).collect();
        for r in 0..rc {
            for k in 0..m {
                let base = (r * m + k) * 2;
                let mut z0 = ZERO;
                let mut z1 = ZERO;
                let mut z2 = ZERO;
                for sg in 0..2 {
                    let tau = if sg == 0 { self.freqs[k] } else { -self.freqs[k] };
                    let v = self.coef[base + sg] * rot[k][sg];
                    z0 += v;
                    z1 += v * I * tau;
                    z2 -= v * tau * tau;
                }
                c0[r * m + k] = z0;
                if order >= 1 {
                    c1[r * m + k] = z1;
                }
                if order >= 2 {
                    c2[r * m + k] = z2;
                }
            }
        }
        PhaseAt { m, c0, c1, c2 }
    }

    /// Crude bound Σ|coef| over all modes, maximized over directions.
    pub fn max_abs(&self) -> f64 {
        let m = self.freqs.len();
        if m == 0 {
            return 0.0;
        }
        self.coef.chunks(2 * m).map(|c| c.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
    }

    /// Sup over sampled (t, x, ξ) of |Ψ|.
    pub fn sup_sampled(&self, times: &[f64]) -> f64 {
        let m = self.freqs.len();
        if m == 0 {
            return 0.0;
        }
        let npts = self.low_table.len() / m;
        let mut best = 0.0f64;
        for &t in times {
            let ev = self.eval(t, 0);
            let rc = ev.c0.len() / m;
            for x in 0..npts {
                let low = &self.low_table[x * m..(x + 1) * m];
                for r in 0..rc {
                    best = best.max(ev.at(r, low, 0).0.abs());
                }
            }
        }
        best
    }

    /// max |−L^ω_{−s}Ψ_s − Π^ω P(ω·A)| over coefficients, relative to the
    /// largest filtered coefficient. Exact for free waves.
    pub fn transport_defect(&self) -> f64 {
        let scale = self.target.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let worst = self.coef.iter().zip(&self.transport).zip(&self.target).map(|((c, l), w)| (l * c - w).norm()).fold(0.0, f64::max);
        if scale > 0.0 {
            worst / scale
        } else {
            worst
        }
    }
}

/// Forcing term F(t) of the parametrix problems.
pub trait Forcing: Sync {
    /// F(t) and ∂ₜF(t) as spatial Fourier fields.
    fn eval(&self, t: f64) -> (Field, Field);
    /// Bound on |τ − |ξ|| over the space-time support, when known.
    fn modulation(&self) -> Option<f64>;
    fn is_zero(&self) -> bool {
        false
    }
}

pub struct NoForcing {
    pub grid: Arc<Grid>,
}

impl Forcing for NoForcing {
    fn eval(&self, _t: f64) -> (Field, Field) {
        let z = Field::scalar(&self.grid, Domain::Space, Repr::Fourier);
        (z.clone(), z)
    }
    fn modulation(&self) -> Option<f64> {
        Some(0.0)
    }
    fn is_zero(&self) -> bool {
        true
    }
}

/// F(t) = e^{iμt} e^{it|D|} F₀, at Q⁺ modulation |μ|.
pub struct ModulatedWave {
    pub f0: Field,
    pub mu: f64,
}

impl Forcing for ModulatedWave {
    fn eval(&self, t: f64) -> (Field, Field) {
        let mu = self.mu;
        let f = self.f0.to_repr(Repr::Fourier).apply_symbol(|m| C64::from_polar(1.0, t * (m.abs + mu)));
        let df = f.apply_symbol(|m| C64::new(0.0, m.abs + mu));
        (f, df)
    }
    fn modulation(&self) -> Option<f64> {
        Some(self.mu.abs())
    }
}

/// Forcing known at uniform nodes, interpolated by cubic Lagrange polynomials
/// in the frame e^{−it|D|}.
pub struct Sampled {
    times: Vec<f64>,
    frames: Vec<Field>,
}

impl Sampled {
    pub fn new(times: Vec<f64>, values: &[Field]) -> Sampled {
        let frames = times.iter().zip(values).map(|(&t, v)| v.to_repr(Repr::Fourier).apply_symbol(|m| C64::from_polar(1.0, -t * m.abs))).collect();
        Sampled { times, frames }
    }
}

impl Forcing for Sampled {
    fn eval(&self, t: f64) -> (Field, Field) {
        let n = self.times.len();
        let h = self.times[1] - self.times[0];
        let j = (((t - self.times[0]) / h).floor() as isize - 1).clamp(0, n as isize - 4) as usize;
        let nodes = &self.times[j..j + 4];
        let mut w = [0.0; 4];
        let mut dw = [0.0; 4];
        for a in 0..4 {
            let mut num = 1.0;
            let mut den = 1.0;
            let mut dnum = 0.0;
            for b in 0..4 {
                if b == a {
                    continue;
                }
                den *= nodes[a] - nodes[b];
                // derivative of the product by the product rule
                dnum = dnum * (t - nodes[b]) + num;
                num *= t - nodes[b];
            }
            w[a] = num / den;
            dw[a] = dnum / den;
        }
        let mut g = self.frames[j].scale_re(w[0]);
        let mut dg = self.frames[j].scale_re(dw[0]);
        for a in 1..4 {
            g = g.axpy(C64::new(w[a], 0.0), &self.frames[j + a]).unwrap();
            dg = dg.axpy(C64::new(dw[a], 0.0), &self.frames[j + a]).unwrap();
        }
        let f = g.apply_symbol(|m| C64::from_polar(1.0, t * m.abs));
        let df = dg.apply_symbol(|m| C64::from_polar(1.0, t * m.abs)).add(&f.apply_symbol(|m| C64::new(0.0, m.abs))).unwrap();
        (f, df)
    }
    fn modulation(&self) -> Option<f64> {
        None
    }
}

/// Time window and Duhamel quadrature.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Window {
    pub t_final: f64,
    /// Number of output intervals; outputs at t_j = j·T/intervals.
    pub intervals: usize,
    /// Gauss–Legendre points per interval.
    pub gauss: usize,
}

impl Default for Window {
    fn default() -> Self {
        Window { t_final: 4.0, intervals: 16, gauss: 4 }
    }
}

impl Window {
    pub fn times(&self) -> Vec<f64> {
        (0..=self.intervals).map(|j| self.t_final * j as f64 / self.intervals as f64).collect()
    }
}

/// Gauss–Legendre nodes and weights on [−1, 1].
pub fn gauss_legendre(q: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; q];
    let mut w = vec![0.0; q];
    for i in 0..q {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (q as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(q, z);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(q, z);
        x[i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

/// P_q(z) and P_q'(z) by the three-term recurrence.
fn legendre(q: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if q == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=q {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    (p1, q as f64 * (z * p1 - p0) / (z * z - 1.0))
}

/// A field and its first two time derivatives at the output nodes.
#[derive(Clone, Debug)]
pub struct Jet {
    pub times: Vec<f64>,
    pub value: Vec<Field>,
    pub dt: Vec<Field>,
    pub dtt: Vec<Field>,
}

/// φ_app = ½(T⁺ + T⁻ + S⁺ + S⁻) for □^p_{A<0}φ = F, φ[0] = (g, h).
pub fn approx_box_solution(q: &Quantizer, a: &LowFreeWave, g: &Field, h: &Field, forcing: &dyn Forcing, params: PhaseParams, win: &Window) -> Result<Jet> {
    let times = win.times();
    let zero_field = Field::scalar(&q.grid, Domain::Space, Repr::Fourier);
    let mut value = vec![zero_field.clone(); times.len()];
    let mut dt = value.clone();
    let mut dtt = value.clone();
    let absd = &q.abs;
    let rlen = q.len();
    let (gx, gw) = gauss_legendre(win.gauss.max(1));
    let gc = q.restrict(g, 1e-10)?;
    let hc = q.restrict(h, 1e-10)?;
    if !forcing.is_zero() {
        q.restrict(&forcing.eval(0.0).0, 1e-10)?;
    }
    let phys = |f: &Field, s: C64| -> Vec<C64> { f.scale(s).physical().comps.swap_remove(0) };
    let over_i = C64::new(0.0, -1.0);
    for sign in Sign::BOTH {
        let s = sign.value();
        let ph = Phase::build(q, a, sign, params)?;
        // |D|g + s·h/i
        let data: Vec<C64> = (0..rlen).map(|r| absd[r] * gc[r] + s * over_i * hc[r]).collect();
        let (w0, _) = q.right_jet(&ph, 0.0, 1.0, &phys(&q.extend(&data), C64::new(1.0, 0.0)), None);
        let mut k_acc = vec![ZERO; rlen];
        for (j, &t) in times.iter().enumerate() {
            if j > 0 && !forcing.is_zero() {
                let t0 = times[j - 1];
                let len = t - t0;
                let step: Vec<C64> = absd.iter().map(|&w| C64::from_polar(1.0, s * len * w)).collect();
                for r in 0..rlen {
                    k_acc[r] *= step[r];
                }
                for (x, wq) in gx.iter().zip(&gw) {
                    let rq = t0 + 0.5 * len * (x + 1.0);
                    let (f, _) = forcing.eval(rq);
                    let (gq, _) = q.right_jet(&ph, rq, 1.0, &phys(&f, over_i), None);
                    for r in 0..rlen {
                        k_acc[r] += 0.5 * len * wq * C64::from_polar(1.0, s * (t - rq) * absd[r]) * gq[r];
                    }
                }
            }
            let (gn, dgn) = if forcing.is_zero() {
                (vec![ZERO; rlen], vec![ZERO; rlen])
            } else {
                let (f, df) = forcing.eval(t);
                let (a0, a1) = q.right_jet(&ph, t, 1.0, &phys(&f, over_i), Some(&phys(&df, over_i)));
                (a0, a1.unwrap())
            };
            let mut v0 = vec![ZERO; rlen];
            let mut v1 = vec![ZERO; rlen];
            let mut v2 = vec![ZERO; rlen];
            for r in 0..rlen {
                let isd = C64::new(0.0, s * absd[r]);
                let u = C64::from_polar(1.0, s * t * absd[r]) * w0[r] - s * k_acc[r];
                let ut = isd * u - s * gn[r];
                let utt = isd * ut - s * dgn[r];
                v0[r] = u / absd[r];
                v1[r] = ut / absd[r];
                v2[r] = utt / absd[r];
            }
            let out = q.left_jet(&ph, t, -1.0, [&v0, &v1, &v2], 2);
            let mut it = out.into_iter().map(|o| q.physical_field(o).scale_re(0.5));
            value[j] = value[j].add(&it.next().unwrap())?;
            dt[j] = dt[j].add(&it.next().unwrap())?;
            dtt[j] = dtt[j].add(&it.next().unwrap())?;
        }
    }
    Ok(Jet { times, value, dt, dtt })
}

/// Time-integrated norms of a residual sampled at the output nodes.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct Residual {
    /// L²ₜL²ₓ by the trapezoid rule.
    pub l2: f64,
    /// L¹ₜL²ₓ by the trapezoid rule.
    pub l1: f64,
    /// sup over nodes of the L²ₓ norm.
    pub sup: f64,
}

fn time_norms(times: &[f64], norms: &[f64]) -> Residual {
    let mut l1 = 0.0;
    let mut l2 = 0.0;
    for j in 1..times.len() {
        let h = times[j] - times[j - 1];
        l1 += 0.5 * h * (norms[j] + norms[j - 1]);
        l2 += 0.5 * h * (norms[j].powi(2) + norms[j - 1].powi(2));
    }
    Residual { l2: l2.sqrt(), l1, sup: norms.iter().cloned().fold(0.0, f64::max) }
}

/// Σ_j P_{<−C}A^j · X_j with X a vector field, dealiased.
fn contract(alow: &Field, x: &Field) -> Result<Field> {
    let d = alow.grid.d;
    alow.grid.dealiaser().product(&[alow, x], Kind::Scalar, 1, |v, out| {
        out[0] = (0..d).map(|j| v[j] * v[d + j]).sum();
    })
}

/// Vector field (m_j(ξ) P̃₀ f)_j for a per-component symbol.
fn vector_symbol(f: &Field, sym: impl Fn(&[f64], f64, usize) -> C64 + Sync + Send) -> Result<Field> {
    let d = f.grid.d;
    let parts: Vec<Field> = (0..d).map(|j| f.apply_symbol(|m| if m.abs == 0.0 { ZERO } else { sym(m.xi, m.abs, j) * unit_band(m.abs) })).collect();
    Field::from_components(Kind::Vector, &parts)
}

/// □^p_{A<0}φ − F = −∂ₜ²φ + Δφ − 2i P_{<−C}A^j P̃₀∂ⱼφ − F at every node.
pub fn box_residual(a: &LowFreeWave, jet: &Jet, forcing: &dyn Forcing) -> Result<Vec<Field>> {
    let mut out = Vec::with_capacity(jet.times.len());
    for (j, &t) in jet.times.iter().enumerate() {
        let phi = &jet.value[j];
        let lap = phi.apply_symbol(|m| C64::new(-m.abs * m.abs, 0.0));
        let grad = vector_symbol(phi, |xi, _, c| C64::new(0.0, xi[c]))?;
        let para = contract(&a.low_at(t), &grad)?.scale(C64::new(0.0, -2.0));
        let (f, _) = forcing.eval(t);
        out.push(lap.sub(&jet.dtt[j])?.add(&para)?.sub(&f)?);
    }
    Ok(out)
}

/// Quality of a box parametrix.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct BoxReport {
    /// ‖φ(0) − g‖ + ‖∂ₜφ(0) − h‖
    pub data_defect: f64,
    pub residual: Residual,
}

pub fn box_report(a: &LowFreeWave, jet: &Jet, g: &Field, h: &Field, forcing: &dyn Forcing) -> Result<BoxReport> {
    let data_defect = jet.value[0].sub(&g.to_repr(Repr::Fourier))?.norm_l2() + jet.dt[0].sub(&h.to_repr(Repr::Fourier))?.norm_l2();
    let res = box_residual(a, jet, forcing)?;
    let norms: Vec<f64> = res.iter().map(|r| r.norm_l2()).collect();
    Ok(BoxReport { data_defect, residual: time_norms(&jet.times, &norms) })
}

/// (i∂ₜ + |D|)^p_{A<0}ψ − F with ψ and ∂ₜψ given at the nodes.
pub fn halfwave_residual(a: &LowFreeWave, times: &[f64], psi: &[Field], psi_t: &[Field], forcing: &dyn Forcing) -> Result<Vec<Field>> {
    let mut out = Vec::with_capacity(times.len());
    for (j, &t) in times.iter().enumerate() {
        let lin = psi_t[j].scale(I).add(&psi[j].apply_symbol(|m| C64::new(m.abs, 0.0)))?;
        let riesz = vector_symbol(&psi[j], |xi, abs, c| C64::new(0.0, xi[c] / abs))?;
        let para = contract(&a.low_at(t), &riesz)?.scale(-I);
        let (f, _) = forcing.eval(t);
        out.push(lin.add(&para)?.sub(&f)?);
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct HalfwaveSolution {
    pub times: Vec<f64>,
    pub psi: Vec<Field>,
    pub psi_t: Vec<Field>,
    /// ‖ψ(0) − f‖
    pub init_defect: f64,
    pub residual: Residual,
}

fn halfwave_core(q: &Quantizer, a: &LowFreeWave, f: &Field, forcing: &dyn Forcing, params: PhaseParams, win: &Window) -> Result<HalfwaveSolution> {
    let f = f.to_repr(Repr::Fourier);
    // ih + |D|g = 0 and ih − |D|g = f
    let g = f.apply_symbol(|m| if m.abs == 0.0 { ZERO } else { C64::new(-0.5 / m.abs, 0.0) });
    let h = f.scale(C64::new(0.0, -0.5));
    let jet = approx_box_solution(q, &a.negated(), &g, &h, forcing, params, win)?;
    let absd = |x: &Field| x.apply_symbol(|m| C64::new(m.abs, 0.0));
    let mut psi = Vec::with_capacity(jet.times.len());
    let mut psi_t = Vec::with_capacity(jet.times.len());
    for j in 0..jet.times.len() {
        psi.push(jet.dt[j].scale(I).sub(&absd(&jet.value[j]))?);
        psi_t.push(jet.dtt[j].scale(I).sub(&absd(&jet.dt[j]))?);
    }
    let init_defect = psi[0].sub(&f)?.norm_l2();
    let res = halfwave_residual(a, &jet.times, &psi, &psi_t, forcing)?;
    let norms: Vec<f64> = res.iter().map(|r| r.norm_l2()).collect();
    Ok(HalfwaveSolution { residual: time_norms(&jet.times, &norms), times: jet.times, psi, psi_t, init_defect })
}

/// ψ¹ = (i∂ₜ − |D|)φ with φ the box parametrix for (F, g, h) and potential −A,
/// where ih + |D|g = 0 and ih − |D|g = f.
pub fn halfwave_parametrix(q: &Quantizer, a: &LowFreeWave, f: &Field, forcing: &dyn Forcing, params: PhaseParams, win: &Window) -> Result<HalfwaveSolution> {
    match forcing.modulation() {
        Some(m) if m > MAX_MODULATION => return Err(Error::Modulation { measured: m, allowed: MAX_MODULATION }),
        _ => {}
    }
    halfwave_core(q, a, f, forcing, params, win)
}

#[derive(Clone, Debug, Serialize)]
pub struct IterateReport {
    /// ‖ψ^{≤n}(0) − f‖ + ‖(i∂ₜ+|D|)^p ψ^{≤n} − F‖_{L²L²}, normalized by the same
    /// quantity for ψ = 0.
    pub residuals: Vec<f64>,
    pub ratios: Vec<f64>,
    pub norm: &'static str,
}

/// ψ = Σ ψⁿ with ψⁿ the parametrix applied to the data and forcing defects of
/// ψ^{≤n−1}. Later forcings are sampled at the nodes and interpolated.
pub fn iterate_to_solution(q: &Quantizer, a: &LowFreeWave, f: &Field, forcing: &dyn Forcing, params: PhaseParams, win: &Window, tol: f64, max_iter: usize) -> Result<IterateReport> {
    let times = win.times();
    let f = f.to_repr(Repr::Fourier);
    let forcing_norms: Vec<f64> = times.iter().map(|&t| forcing.eval(t).0.norm_l2()).collect();
    let r0 = f.norm_l2() + time_norms(&times, &forcing_norms).l2;
    let mut psi = vec![Field::scalar(&q.grid, Domain::Space, Repr::Fourier); times.len()];
    let mut psi_t = psi.clone();
    let mut residuals = Vec::new();
    let mut next_forcing: Option<Sampled> = None;
    for n in 0..max_iter {
        let data = f.sub(&psi[0])?;
        let data = q.extend(&q.restrict(&data, 1.0)?);
        let sol = match &next_forcing {
            None => halfwave_parametrix(q, a, &data, forcing, params, win)?,
            Some(s) => halfwave_core(q, a, &data, s, params, win)?,
        };
        for j in 0..times.len() {
            psi[j] = psi[j].add(&sol.psi[j])?;
            psi_t[j] = psi_t[j].add(&sol.psi_t[j])?;
        }
        let res = halfwave_residual(a, &times, &psi, &psi_t, forcing)?;
        let norms: Vec<f64> = res.iter().map(|r| r.norm_l2()).collect();
        let r = (psi[0].sub(&f)?.norm_l2() + time_norms(&times, &norms).l2) / r0;
        residuals.push(r);
        if n >= 1 {
            let ratio = r / residuals[n - 1];
            if ratio >= 1.0 && r > tol {
                return Err(Error::Diverged { ratio });
            }
        }
        if r <= tol {
            break;
        }
        // tails leaving the annulus are dropped
        let defect: Vec<Field> = res.iter().map(|x| Ok(q.extend(&q.restrict(&x.scale_re(-1.0), 1.0)?))).collect::<Result<_>>()?;
        next_forcing = Some(Sampled::new(times.clone(), &defect));
    }
    let ratios = residuals.windows(2).map(|w| w[1] / w[0]).collect();
    Ok(IterateReport { residuals, ratios, norm: "L2 data defect + L2_t L2_x residual, relative" })
}

/// Operator-norm proxies of the renormalization at one time.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct RenormReport {
    /// ‖e^{−iΨ}(t,x,D) e^{iΨ}(D,y,t) f − f‖ / ‖f‖
    pub composition: f64,
    /// ‖e^{iΨ}(t,x,D) e^{−iΨ}(t,x,D) f − f‖ / ‖f‖
    pub left_left: f64,
    /// ‖e^{iΨ}(t,x,D) f‖ / ‖f‖
    pub unitarity: f64,
    /// ‖∂ₜ(e^{iΨ})(t,x,D) f‖ / ‖f‖
    pub dt_commutator: f64,
}

pub fn renormalization_report(q: &Quantizer, ph: &Phase, t: f64, f: &Field) -> Result<RenormReport> {
    let nf = f.norm_l2();
    let comp = q.quantize_left(ph, t, -1.0, &q.quantize_right(ph, t, 1.0, f)?)?;
    let inner = q.quantize_left(ph, t, -1.0, f)?;
    let inner_r = q.extend(&q.restrict(&inner, 1.0)?);
    let ll = q.quantize_left(ph, t, 1.0, &inner_r)?;
    let fr = f.to_repr(Repr::Fourier);
    Ok(RenormReport {
        composition: comp.sub(&fr)?.norm_l2() / nf,
        left_left: ll.sub(&fr)?.norm_l2() / nf,
        unitarity: q.quantize_left(ph, t, 1.0, f)?.norm_l2() / nf,
        dt_commutator: q.quantize_left_dt(ph, t, 1.0, f)?.norm_l2() / nf,
    })
}

/// Relative defect of
/// (i∂ₜ+|D|)^p_{A<0}(i∂ₜ−|D|)φ = □^p_{−A<0}φ − i P_{<−C}A^ℓ(∂ℓ/|D|)(i∂ₜ+|D|)P̃₀φ
/// on a space-time block; `a` is any vector field on the block.
pub fn covopreduction_defect(a: &Field, phi: &Field, c: i32) -> Result<f64> {
    if a.domain != Domain::SpaceTime || phi.domain != Domain::SpaceTime {
        return Err(Error::NoTimeAxis);
    }
    let d = a.grid.d;
    let alow = a.to_repr(Repr::Fourier).apply_symbol(|m| C64::new(bump::below(m.abs, -c), 0.0));
    let phi = phi.to_repr(Repr::Fourier);
    let tau = |m: &crate::grid::Mode| m.tau.unwrap();
    // (i∂ₜ ± |D|) has symbol −τ ± |ξ|
    let hw = |f: &Field, s: f64| f.apply_symbol(|m| C64::new(-tau(m) + s * m.abs, 0.0));
    let band = |f: &Field| f.apply_symbol(|m| C64::new(unit_band(m.abs), 0.0));
    let riesz_i = |f: &Field| -> Result<Field> {
        let parts: Vec<Field> = (0..d).map(|j| f.apply_symbol(|m| if m.abs == 0.0 { ZERO } else { C64::new(0.0, m.xi[j] / m.abs) })).collect();
        Field::from_components(Kind::Vector, &parts)
    };
    let grad = |f: &Field| -> Result<Field> {
        let parts: Vec<Field> = (0..d).map(|j| f.apply_symbol(|m| C64::new(0.0, m.xi[j]))).collect();
        Field::from_components(Kind::Vector, &parts)
    };
    let dot = |x: &Field| -> Field {
        let xa = x.physical();
        let aa = alow.physical();
        let mut out = Field::scalar(&a.grid, Domain::SpaceTime, Repr::Physical);
        for i in 0..out.comps[0].len() {
            out.comps[0][i] = (0..d).map(|j| aa.comps[j][i] * xa.comps[j][i]).sum();
        }
        out.into_repr(Repr::Fourier)
    };
    let boxed = |f: &Field| f.apply_symbol(|m| C64::new(tau(m) * tau(m) - m.abs * m.abs, 0.0));
    let u = hw(&phi, -1.0);
    let lhs = hw(&u, 1.0).sub(&dot(&riesz_i(&band(&u))?).scale(I))?;
    let box_minus = boxed(&phi).add(&dot(&grad(&band(&phi))?).scale(C64::new(0.0, 2.0)))?;
    let rhs = box_minus.sub(&dot(&riesz_i(&hw(&band(&phi), 1.0))?).scale(I))?;
    Ok(lhs.sub(&rhs)?.norm_l2() / lhs.norm_l2().max(f64::MIN_POSITIVE))
}

/// Smooth radial bump supported in 1/2 ≤ |ξ| ≤ 3/2, centered at x₀.
pub fn unit_packet(grid: &Arc<Grid>, center: &[f64]) -> Field {
    let mut f = Field::scalar(grid, Domain::Space, Repr::Fourier);
    for i in 0..grid.nsp() {
        if grid.is_nyquist(i) {
            continue;
        }
        let a = grid.abs_xi(i);
        let b = bump::phi((a - 1.0).abs() / 0.25);
        if b > 0.0 {
            let ph: f64 = grid.xi(i).iter().zip(center).map(|(x, c)| -x * c).sum();
            f.comps[0][i] = C64::from_polar(b, ph);
        }
    }
    let n = f.norm_l2();
    f.scale_re(1.0 / n)
}

/// Default lattice for the parametrix experiments: d = 2, n = 32, L = 16π, so
/// the potential has lattice modes below 2^{−C} and the unit annulus is resolved.
pub fn default_grid() -> Result<Arc<Grid>> {
    Grid::new(2, 32, 16.0 * std::f64::consts::PI)
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub eps: f64,
    pub sigma: f64,
    pub composition: f64,
    pub box_data: f64,
    pub box_residual_l2: f64,
    pub box_residual_l1: f64,
    pub halfwave_init: f64,
    pub halfwave_residual_l2: f64,
    pub halfwave_residual_l1: f64,
    pub transport_defect: f64,
    pub covopreduction_defect: f64,
    pub phase_sup: f64,
}

/// One sweep point: builds the potential at size ε and measures every defect.
pub fn sweep_point(q: &Quantizer, eps: f64, params: PhaseParams, win: &Window, seed: u64) -> Result<SweepRow> {
    let grid = q.grid.clone();
    let a = LowFreeWave::random(&grid, eps, params.c, seed)?;
    let center = vec![grid.length / 2.0; grid.d];
    let f = unit_packet(&grid, &center);
    let mut other = center.clone();
    other[0] -= grid.length / 8.0;
    let g = unit_packet(&grid, &other).apply_symbol(|m| C64::new(1.0 / m.abs.max(1e-300), 0.0));
    let h = unit_packet(&grid, &other).scale(C64::new(0.3, 0.4));
    let forcing = ModulatedWave { f0: unit_packet(&grid, &other).scale_re(0.5), mu: 1.0 / 32.0 };
    let ph = Phase::build(q, &a, Sign::Plus, params)?;
    let comp = renormalization_report(q, &ph, 0.0, &f)?.composition;
    let jet = approx_box_solution(q, &a, &g, &h, &forcing, params, win)?;
    let br = box_report(&a, &jet, &g, &h, &forcing)?;
    let hw = halfwave_parametrix(q, &a, &f, &forcing, params, win)?;
    // the identity is checked on a space-time block carrying the same potential
    let st = Grid::with_time(grid.d, grid.n, grid.length, 16, win.t_final)?;
    let avec = a.at(0.0).on_grid(&grid)?;
    let a_st = Field::from_slices(&st, &vec![avec; 16])?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0x77);
    let mut phi_st = Field::scalar(&st, Domain::SpaceTime, Repr::Fourier);
    for v in phi_st.comps[0].iter_mut() {
        *v = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    }
    Ok(SweepRow {
        eps,
        sigma: params.sigma,
        composition: comp,
        box_data: br.data_defect,
        box_residual_l2: br.residual.l2,
        box_residual_l1: br.residual.l1,
        halfwave_init: hw.init_defect,
        halfwave_residual_l2: hw.residual.l2,
        halfwave_residual_l1: hw.residual.l1,
        transport_defect: ph.transport_defect(),
        covopreduction_defect: covopreduction_defect(&a_st, &phi_st, params.c)?,
        phase_sup: ph.sup_sampled(&[0.0, win.t_final]),
    })
}

/// Least-squares slope of log₂(value) against log₂(ε).
pub fn fitted_rate(eps: &[f64], values: &[f64]) -> f64 {
    let xs: Vec<f64> = eps.iter().map(|e| e.log2()).collect();
    let ys: Vec<f64> = values.iter().map(|v| v.log2()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(5);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(8)).sum();
        assert!((s - 2.0 / 9.0).abs() < 1e-14);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn zero_potential_gives_zero_phase_and_identity() {
        let g = Grid::new(2, 16, 8.0 * std::f64::consts::PI).unwrap();
        let q = Quantizer::new(&g);
        let a = LowFreeWave::zero(&g, 2);
        let ph = Phase::build(&q, &a, Sign::Plus, PhaseParams::default()).unwrap();
        assert_eq!(ph.max_abs(), 0.0);
        let f = unit_packet(&g, &[3.0, 4.0]);
        let out = q.quantize_left(&ph, 0.7, 1.0, &f).unwrap();
        assert!(out.rel_dist(&f).unwrap() < 1e-13);
        let back = q.quantize_right(&ph, 0.7, 1.0, &f).unwrap();
        assert!(back.rel_dist(&f).unwrap() < 1e-13);
    }

    #[test]
    fn rejects_input_outside_annulus() {
        let g = Grid::new(2, 16, 8.0 * std::f64::consts::PI).unwrap();
        let q = Quantizer::new(&g);
        let mut f = Field::scalar(&g, Domain::Space, Repr::Fourier);
        // the mean is below the annulus
        f.comps[0][0] = C64::new(1.0, 0.0);
        assert!(matches!(q.restrict(&f, 1e-10), Err(Error::OutsideAnnulus { .. })));
    }

    #[test]
    fn sampled_forcing_reproduces_cubic_frames() {
        let g = Grid::new(1, 8, 2.0 * std::f64::consts::PI).unwrap();
        let times: Vec<f64> = (0..6).map(|j| j as f64 * 0.5).collect();
        let frame = |t: f64| {
            let mut f = Field::scalar(&g, Domain::Space, Repr::Fourier);
            f.comps[0][1] = C64::new(1.0 + t * t * t, t);
            f.apply_symbol(|m| C64::from_polar(1.0, t * m.abs))
        };
        let vals: Vec<Field> = times.iter().map(|&t| frame(t)).collect();
        let s = Sampled::new(times, &vals);
        let (f, _) = s.eval(1.3);
        assert!(f.rel_dist(&frame(1.3)).unwrap() < 1e-13);
    }
}
