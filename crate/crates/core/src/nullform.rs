//! Cone geometry, the resonance function, the Knapp example and empirical
//! angle gains of bilinear null forms.

use crate::clifford::{self, GammaRep};
use crate::error::{Error, Result};
use crate::grid::fft;
use crate::par;
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::f64::consts::PI;

const ZERO: C64 = C64::new(0.0, 0.0);

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Radical inverse of `index` in base `base`.
pub fn halton(mut index: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while index > 0 {
        f /= base as f64;
        r += f * (index % base) as f64;
        index /= base;
    }
    r
}

const PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// Point `index` of the Halton sequence in [0, 1)^dim, skipping the first
/// `offset` points. Supports dim ≤ 12.
pub fn halton_point(index: u64, dim: usize, offset: u64) -> Vec<f64> {
    (0..dim).map(|a| halton(index + offset + 1, PRIMES[a])).collect()
}

/// Inverse standard normal CDF (Acklam's rational approximation, refined by
/// one Halley step).
fn probit(p: f64) -> f64 {
    let p = p.clamp(1e-300, 1.0 - 1e-16);
    const A: [f64; 6] = [-3.969683028665376e1, 2.209460984245205e2, -2.759285104469687e2, 1.383577518672690e2, -3.066479806614716e1, 2.506628277459239];
    const B: [f64; 5] = [-5.447609879822406e1, 1.615858368580409e2, -1.556989798598866e2, 6.680131188771972e1, -1.328068155288572e1];
    const C: [f64; 6] = [-7.784894002430293e-3, -3.223964580411365e-1, -2.400758277161838, -2.549732539343734, 4.374664141464968, 2.938163982698783];
    const D: [f64; 4] = [7.784695709041462e-3, 3.224671290700398e-1, 2.445134137142996, 3.754408661907416];
    let lo = 0.02425;
    let x = if p < lo {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5]) / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - lo {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5]) / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    let e = 0.5 * erfc(-x / std::f64::consts::SQRT_2) - p;
    let u = e * (2.0 * PI).sqrt() * (x * x / 2.0).exp();
    x - u / (1.0 + x * u / 2.0)
}

/// Complementary error function (Numerical Recipes erfcc, |rel err| < 1.2e-7).
fn erfc(x: f64) -> f64 {
    let z = x.abs();
    let t = 1.0 / (1.0 + 0.5 * z);
    let r = t * (-z * z - 1.26551223
        + t * (1.00002368 + t * (0.37409196 + t * (0.09678418 + t * (-0.18628806 + t * (0.27886807 + t * (-1.13520398 + t * (1.48851587 + t * (-0.82215223 + t * 0.17087277)))))))))
        .exp();
    if x >= 0.0 {
        r
    } else {
        2.0 - r
    }
}

/// Quasi-random direction on S^{d-1} from a point of [0, 1)^d.
fn direction(u: &[f64]) -> Vec<f64> {
    let v: Vec<f64> = u.iter().map(|&p| probit(p)).collect();
    let n = norm(&v);
    v.into_iter().map(|x| x / n).collect()
}

/// Frequencies ξ⁰ + ξ¹ + ξ² = 0 with signs; ξ⁰ is computed, not sampled.
#[derive(Clone, Debug)]
pub struct FreqTriple {
    pub xi: [Vec<f64>; 3],
    pub signs: [f64; 3],
}

impl FreqTriple {
    pub fn new(xi1: Vec<f64>, xi2: Vec<f64>, signs: [f64; 3]) -> FreqTriple {
        let xi0 = xi1.iter().zip(&xi2).map(|(a, b)| -a - b).collect();
        FreqTriple { xi: [xi0, xi1, xi2], signs }
    }

    pub fn abs(&self) -> [f64; 3] {
        [norm(&self.xi[0]), norm(&self.xi[1]), norm(&self.xi[2])]
    }

    /// Dyadic shells ⌊log₂|ξⁱ|⌉ sorted as (min, med, max).
    pub fn shells(&self) -> (i32, i32, i32) {
        let mut k: Vec<i32> = self.abs().iter().map(|a| a.log2().round() as i32).collect();
        k.sort();
        (k[0], k[1], k[2])
    }
}

/// H = s₀|ξ⁰| + s₁|ξ¹| + s₂|ξ²|.
pub fn resonance_h(t: &FreqTriple) -> f64 {
    let a = t.abs();
    t.signs[0] * a[0] + t.signs[1] * a[1] + t.signs[2] * a[2]
}

/// −2(ξ¹·ξ² − |ξ¹||ξ²|)/(|ξ⁰|+|ξ¹|+|ξ²|), equal to H for signs (−,+,+).
/// Well conditioned when ξ² is the shortest of the three.
pub fn h_via_inner(t: &FreqTriple) -> f64 {
    let a = t.abs();
    -2.0 * (dot(&t.xi[1], &t.xi[2]) - a[1] * a[2]) / (a[0] + a[1] + a[2])
}

/// −2((−ξ⁰)·ξ² − |ξ⁰||ξ²|)/(|ξ⁰|+|ξ¹|−|ξ²|), equal to H for signs (−,+,+).
pub fn h_via_outer(t: &FreqTriple) -> f64 {
    let a = t.abs();
    -2.0 * (-dot(&t.xi[0], &t.xi[2]) - a[0] * a[2]) / (a[0] + a[1] - a[2])
}

#[derive(Clone, Debug, Serialize)]
pub struct ResonanceReport {
    pub samples: usize,
    /// max |H − inner form| / max|ξⁱ| over (−,+,+) triples
    pub inner_defect: f64,
    /// max |H − outer form| / max|ξⁱ| over (−,+,+) triples
    pub outer_defect: f64,
    /// min |H| / max|ξⁱ| over equal-sign triples
    pub same_sign_min: f64,
    /// |H| for a collinear same-direction (−,+,+) triple
    pub collinear: f64,
}

/// Relabels a triple so that ξ² is the shortest frequency, keeping the signs.
pub fn shortest_last(mut t: FreqTriple) -> FreqTriple {
    let a = t.abs();
    let i = (0..3).min_by(|&x, &y| a[x].total_cmp(&a[y])).unwrap();
    t.xi.swap(i, 2);
    t
}

/// Samples triples with |ξ¹|, |ξ²| log-uniform over [2⁻⁶, 2⁶] and quasi-random
/// directions; a quarter of them are nearly collinear. The (−,+,+) triples are
/// relabeled so that ξ² is the shortest.
pub fn resonance_scan(d: usize, samples: usize, offset: u64) -> ResonanceReport {
    let rows = par::map_range(samples, |i| {
        let u = halton_point(i as u64, 2 * d + 3, offset);
        let r1 = 2f64.powf(12.0 * u[0] - 6.0);
        let r2 = 2f64.powf(12.0 * u[1] - 6.0);
        let w1 = direction(&u[3..3 + d]);
        let mut w2 = direction(&u[3 + d..3 + 2 * d]);
        if u[2] < 0.25 {
            // tilt w2 to within ~1e-4 of w1
            let eps = 1e-4 * u[2] * 4.0;
            w2 = w1.iter().zip(&w2).map(|(a, b)| a + eps * b).collect();
            let n = norm(&w2);
            w2.iter_mut().for_each(|x| *x /= n);
        }
        let xi1: Vec<f64> = w1.iter().map(|x| r1 * x).collect();
        let xi2: Vec<f64> = w2.iter().map(|x| r2 * x).collect();
        let t = shortest_last(FreqTriple::new(xi1.clone(), xi2.clone(), [-1.0, 1.0, 1.0]));
        let scale = t.abs().iter().cloned().fold(0.0, f64::max);
        let h = resonance_h(&t);
        let a = (h - h_via_inner(&t)).abs() / scale;
        let b = (h - h_via_outer(&t)).abs() / scale;
        let s = if u[2] < 0.5 { 1.0 } else { -1.0 };
        let same = FreqTriple::new(xi1, xi2, [s; 3]);
        let m = resonance_h(&same).abs() / same.abs().iter().cloned().fold(0.0, f64::max);
        (a, b, m)
    });
    let mut e1 = vec![0.0; d];
    e1[0] = 1.0;
    let col = FreqTriple::new(e1.iter().map(|x| 3.0 * x).collect(), e1.clone(), [-1.0, 1.0, 1.0]);
    ResonanceReport {
        samples,
        inner_defect: rows.iter().map(|r| r.0).fold(0.0, f64::max),
        outer_defect: rows.iter().map(|r| r.1).fold(0.0, f64::max),
        same_sign_min: rows.iter().map(|r| r.2).fold(f64::INFINITY, f64::min),
        collinear: resonance_h(&col).abs(),
    }
}

/// Dyadic and modulation localization of a cone-geometry check.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConeQuery {
    pub k: [i32; 3],
    pub j: [i32; 3],
    pub signs: [f64; 3],
}

#[derive(Clone, Debug, Serialize)]
pub struct ConeReport {
    pub admissible: usize,
    pub tried: usize,
    /// max over admissible samples and pairs of angle / (2^{k_min − min(kᵢ,kᵢ')} 2^ℓ)
    pub max_ratio: f64,
    /// No admissible triple was found.
    pub vacuous: bool,
}

fn in_shell(r: f64, k: i32) -> bool {
    let x = r / 2f64.powi(k);
    (0.5..2.0).contains(&x)
}

fn in_mod(dist: f64, j: i32) -> bool {
    dist < 2f64.powi(j + 1)
}

/// Rejection sampling of Ξ⁰ + Ξ¹ + Ξ² = 0 with |ξⁱ| ≈ 2^{kᵢ} and
/// |τⁱ − sᵢ|ξⁱ|| ≲ 2^{jᵢ}.
pub fn cone_angle_check(q: &ConeQuery, d: usize, n_samples: usize, offset: u64) -> Result<ConeReport> {
    let mut ks = q.k;
    ks.sort();
    if ks[2] - ks[1] > 5 {
        return Err(Error::Config("|k_med − k_max| must be at most 5".into()));
    }
    let kmin = ks[0];
    let jmax = *q.j.iter().max().unwrap();
    let ell = 0.5 * ((jmax - kmin) as f64).min(0.0);
    let rows = par::map_range(n_samples, |i| {
        let u = halton_point(i as u64, 2 * d + 4, offset);
        let r1 = 2f64.powf(q.k[1] as f64 - 1.0 + 2.0 * u[0]);
        let r2 = 2f64.powf(q.k[2] as f64 - 1.0 + 2.0 * u[1]);
        let xi1: Vec<f64> = direction(&u[4..4 + d]).iter().map(|x| r1 * x).collect();
        let xi2: Vec<f64> = direction(&u[4 + d..4 + 2 * d]).iter().map(|x| r2 * x).collect();
        let t = FreqTriple::new(xi1, xi2, q.signs);
        let a = t.abs();
        if !in_shell(a[0], q.k[0]) {
            return None;
        }
        let tau1 = q.signs[1] * a[1] + (2.0 * u[2] - 1.0) * 2f64.powi(q.j[1]);
        let tau2 = q.signs[2] * a[2] + (2.0 * u[3] - 1.0) * 2f64.powi(q.j[2]);
        let tau0 = -tau1 - tau2;
        if !in_mod((tau0 - q.signs[0] * a[0]).abs(), q.j[0]) {
            return None;
        }
        let mut worst: f64 = 0.0;
        for (i, ip) in [(0, 1), (0, 2), (1, 2)] {
            let v: Vec<f64> = t.xi[i].iter().map(|x| q.signs[i] * x).collect();
            let w: Vec<f64> = t.xi[ip].iter().map(|x| q.signs[ip] * x).collect();
            let bound = 2f64.powi(kmin - q.k[i].min(q.k[ip])) * 2f64.powf(ell);
            worst = worst.max(clifford::angle(&v, &w) / bound);
        }
        Some(worst)
    });
    let hits: Vec<f64> = rows.into_iter().flatten().collect();
    Ok(ConeReport { admissible: hits.len(), tried: n_samples, max_ratio: hits.iter().cloned().fold(0.0, f64::max), vacuous: hits.is_empty() })
}

/// Spinor null ratio ‖Π(ξ)Π(−η)‖/θ on quasi-random pairs, and on pairs at
/// prescribed small angles.
#[derive(Clone, Debug, Serialize)]
pub struct SpinorRatioReport {
    pub samples: usize,
    pub max_ratio: f64,
    pub all_finite: bool,
    /// (min, max) of the ratio over pairs with θ ≤ 0.05
    pub small_angle: (f64, f64),
}

/// Rotates ω towards the unit vector orthogonal to ω in the plane of (ω, v).
fn rotate_towards(omega: &[f64], v: &[f64], theta: f64) -> Vec<f64> {
    let c = dot(omega, v);
    let mut p: Vec<f64> = v.iter().zip(omega).map(|(a, b)| a - c * b).collect();
    let n = norm(&p);
    p.iter_mut().for_each(|x| *x /= n);
    omega.iter().zip(&p).map(|(a, b)| theta.cos() * a + theta.sin() * b).collect()
}

pub fn spinor_ratio_scan(rep: &GammaRep, samples: usize, offset: u64) -> Result<SpinorRatioReport> {
    let d = rep.d;
    let thetas = [0.05, 0.025, 0.0125];
    let rows = par::map_range(samples, |i| -> Result<(f64, Option<f64>)> {
        let u = halton_point(i as u64, 2 * d + 2, offset);
        let s1 = 2f64.powf(8.0 * u[0] - 4.0);
        let s2 = 2f64.powf(8.0 * u[1] - 4.0);
        let w = direction(&u[2..2 + d]);
        let v = direction(&u[2 + d..2 + 2 * d]);
        let xi: Vec<f64> = w.iter().map(|x| s1 * x).collect();
        let eta: Vec<f64> = v.iter().map(|x| s2 * x).collect();
        let r = clifford::spinor_null_ratio(rep, &xi, &eta)?;
        // every eighth sample also probes a fixed small angle
        let small = if i % 8 == 0 {
            let th = thetas[(i / 8) % 3];
            let eta2: Vec<f64> = rotate_towards(&w, &v, th).iter().map(|x| s2 * x).collect();
            Some(clifford::spinor_null_ratio(rep, &xi, &eta2)?)
        } else {
            None
        };
        Ok((r, small))
    });
    let rows: Vec<(f64, Option<f64>)> = rows.into_iter().collect::<Result<_>>()?;
    let small: Vec<f64> = rows.iter().filter_map(|r| r.1).collect();
    Ok(SpinorRatioReport {
        samples,
        max_ratio: rows.iter().map(|r| r.0).fold(0.0, f64::max),
        all_finite: rows.iter().all(|r| r.0.is_finite()) && small.iter().all(|x| x.is_finite()),
        small_angle: (small.iter().cloned().fold(f64::INFINITY, f64::min), small.iter().cloned().fold(0.0, f64::max)),
    })
}

/// Knapp example on a frequency lattice of spacing `dk`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct KnappConfig {
    pub d: usize,
    pub k: i32,
    pub k_prime: i32,
    pub ell_prime: i32,
    /// Lattice spacing of the frequency box.
    pub dk: f64,
    /// Largest representable |ξᵢ|.
    pub nyquist: f64,
    /// T = 2^k 2^{−2(k'+ℓ')} / time_constant.
    pub time_constant: f64,
    /// Slab |x₁ + t| ≤ slab·2^{−k'}, |xᵢ| ≤ slab·2^{−k'−ℓ'}.
    pub slab: f64,
    /// Sample points per slab axis, and per time interval [0, T].
    pub points: usize,
}

impl Default for KnappConfig {
    fn default() -> Self {
        KnappConfig { d: 4, k: 4, k_prime: 2, ell_prime: -1, dk: 0.25, nyquist: 32.0, time_constant: KNAPP_TIME_CONSTANT, slab: 1.0, points: 5 }
    }
}

/// Calibrated by [`knapp_calibrate`] on the default configuration.
pub const KNAPP_TIME_CONSTANT: f64 = 0.125;

/// Lattice points of C = {|ξ₁ − 2^k| ≤ 2^{k'}/2, |ξᵢ| ≤ 2^{k'+ℓ'}/2}.
pub fn knapp_box(cfg: &KnappConfig) -> Result<Vec<Vec<f64>>> {
    let center = 2f64.powi(cfg.k);
    let hr = 2f64.powi(cfg.k_prime) / 2.0;
    let ht = 2f64.powi(cfg.k_prime + cfg.ell_prime) / 2.0;
    if ht > hr {
        return Err(Error::Config("ℓ' must be ≤ 0".into()));
    }
    let nr = (hr / cfg.dk + 1e-9).floor() as i64;
    let nt = (ht / cfg.dk + 1e-9).floor() as i64;
    if nt < 1 {
        return Err(Error::Unresolvable(format!("transverse half-width {ht} is below the lattice spacing {}", cfg.dk)));
    }
    if center + hr > cfg.nyquist || ht > cfg.nyquist {
        return Err(Error::Unresolvable(format!("box reaches {} beyond the Nyquist frequency {}", center + hr, cfg.nyquist)));
    }
    let c0 = (center / cfg.dk).round() as i64;
    let side_t = (2 * nt + 1) as usize;
    let count = (2 * nr + 1) as usize * side_t.pow(cfg.d as u32 - 1);
    let mut out = Vec::with_capacity(count);
    for idx in 0..count {
        let mut rem = idx;
        let mut v = vec![0.0; cfg.d];
        for a in (1..cfg.d).rev() {
            v[a] = ((rem % side_t) as i64 - nt) as f64 * cfg.dk;
            rem /= side_t;
        }
        v[0] = (c0 + rem as i64 - nr) as f64 * cfg.dk;
        out.push(v);
    }
    Ok(out)
}

/// u(t, x) = (#C)⁻¹ Σ_{ξ∈C} e^{i(x·ξ + t|ξ|)}.
pub fn knapp_eval(modes: &[Vec<f64>], t: f64, x: &[f64]) -> C64 {
    let mut s = ZERO;
    for xi in modes {
        s += C64::from_polar(1.0, dot(x, xi) + t * norm(xi));
    }
    s / modes.len() as f64
}

#[derive(Clone, Debug, Serialize)]
pub struct KnappReport {
    pub modes: usize,
    pub t_scale: f64,
    /// min |u| over the slab for |t| ≤ T
    pub slab_min: f64,
    /// max |u| over the slab at t = 0
    pub max_initial: f64,
    /// max |u| over the slab at |t| = 8T
    pub max_late: f64,
    /// (t, min over slab, max over slab) per sampled time
    pub profile: Vec<(f64, f64, f64)>,
}

fn slab_points(cfg: &KnappConfig) -> Vec<Vec<f64>> {
    let m = cfg.points.max(2);
    let r = cfg.slab * 2f64.powi(-cfg.k_prime);
    let w = cfg.slab * 2f64.powi(-cfg.k_prime - cfg.ell_prime);
    let total = m.pow(cfg.d as u32);
    (0..total)
        .map(|idx| {
            let mut rem = idx;
            let mut p = vec![0.0; cfg.d];
            for a in (0..cfg.d).rev() {
                let s = -1.0 + 2.0 * (rem % m) as f64 / (m - 1) as f64;
                p[a] = s * if a == 0 { r } else { w };
                rem /= m;
            }
            p
        })
        .collect()
}

/// (min, max) of |u| over the slab moved to x₁ + t = 0.
fn slab_range(modes: &[Vec<f64>], pts: &[Vec<f64>], t: f64) -> (f64, f64) {
    let vals = par::map_slice(pts, |p| {
        let mut x = p.clone();
        x[0] -= t;
        knapp_eval(modes, t, &x).norm()
    });
    (vals.iter().cloned().fold(f64::INFINITY, f64::min), vals.iter().cloned().fold(0.0, f64::max))
}

pub fn knapp_run(cfg: &KnappConfig) -> Result<KnappReport> {
    let modes = knapp_box(cfg)?;
    let t_scale = 2f64.powi(cfg.k - 2 * (cfg.k_prime + cfg.ell_prime)) / cfg.time_constant;
    let pts = slab_points(cfg);
    let m = cfg.points.max(2);
    let mut profile = Vec::new();
    let mut slab_min = f64::INFINITY;
    for i in 0..(2 * m - 1) {
        let t = t_scale * (-1.0 + i as f64 / (m - 1) as f64);
        let (lo, hi) = slab_range(&modes, &pts, t);
        slab_min = slab_min.min(lo);
        profile.push((t, lo, hi));
    }
    let max_initial = slab_range(&modes, &pts, 0.0).1;
    let late_p = slab_range(&modes, &pts, 8.0 * t_scale).1;
    let late_m = slab_range(&modes, &pts, -8.0 * t_scale).1;
    profile.push((8.0 * t_scale, f64::NAN, late_p));
    profile.push((-8.0 * t_scale, f64::NAN, late_m));
    Ok(KnappReport { modes: modes.len(), t_scale, slab_min, max_initial, max_late: late_p.max(late_m), profile })
}

/// Smallest constant of the ladder 2^{−j}, j = 0..8, that keeps |u| ≥ ½ on the
/// slab for |t| ≤ T. Returns `None` when even the largest constant fails.
pub fn knapp_calibrate(base: &KnappConfig) -> Result<Option<f64>> {
    let mut best = None;
    for j in 0..=8 {
        let c = 2f64.powi(-j);
        let cfg = KnappConfig { time_constant: c, ..base.clone() };
        if knapp_run(&cfg)?.slab_min >= 0.5 {
            best = Some(c);
        } else {
            break;
        }
    }
    Ok(best)
}

/// Symbol of a bilinear form N(f, g)^(ζ) = Σ_{ξ+η=ζ} m(ξ, η) f̂(ξ)ĝ(η).
#[derive(Clone, Debug)]
pub enum NullSymbol {
    /// (ξ₁η₂ − ξ₂η₁)/(|ξ||η|)
    Model,
    /// Π₊(ξ)Π₊(−η), matrix valued, Frobenius norm
    Spinorial(GammaRep),
    /// m ≡ 1
    Trivial,
}

impl NullSymbol {
    pub fn name(&self) -> &'static str {
        match self {
            NullSymbol::Model => "model",
            NullSymbol::Spinorial(_) => "spinorial",
            NullSymbol::Trivial => "trivial",
        }
    }

    fn width(&self) -> usize {
        match self {
            NullSymbol::Spinorial(r) => r.n * r.n,
            _ => 1,
        }
    }

    fn eval(&self, xi: &[f64], eta: &[f64], out: &mut [C64]) {
        match self {
            NullSymbol::Model => out[0] = C64::new((xi[0] * eta[1] - xi[1] * eta[0]) / (norm(xi) * norm(eta)), 0.0),
            NullSymbol::Trivial => out[0] = C64::new(1.0, 0.0),
            NullSymbol::Spinorial(rep) => {
                let neg: Vec<f64> = eta.iter().map(|x| -x).collect();
                let a = pi_matrix(rep, xi);
                let b = pi_matrix(rep, &neg);
                let m = a * b;
                for r in 0..rep.n {
                    for c in 0..rep.n {
                        out[r * rep.n + c] = m[(r, c)];
                    }
                }
            }
        }
    }
}

fn pi_matrix(rep: &GammaRep, xi: &[f64]) -> DMatrix<C64> {
    let n = rep.n;
    let mut m = DMatrix::zeros(n, n);
    let mut e = vec![ZERO; n];
    let mut col = vec![ZERO; n];
    for c in 0..n {
        e.iter_mut().for_each(|z| *z = ZERO);
        e[c] = C64::new(1.0, 0.0);
        rep.apply_pi(xi, 1.0, &e, &mut col);
        for r in 0..n {
            m[(r, c)] = col[r];
        }
    }
    m
}

/// Two lattice packets of radius `radius` (integer frequencies) centered at
/// `carrier`·ω₁ and `carrier`·ω₂ with ∠(ω₁, ω₂) ≈ θ.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct PacketParams {
    pub d: usize,
    pub carrier: f64,
    pub radius: i64,
}

impl Default for PacketParams {
    fn default() -> Self {
        PacketParams { d: 2, carrier: 480.0, radius: 3 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GainRow {
    pub symbol: &'static str,
    /// requested and realized separation
    pub theta: f64,
    pub angle: f64,
    pub gain: f64,
    pub gain_over_theta: f64,
}

fn packet(center: &[i64], radius: i64) -> Vec<(Vec<f64>, f64)> {
    let d = center.len();
    let side = (2 * radius + 1) as usize;
    (0..side.pow(d as u32))
        .filter_map(|idx| {
            let mut rem = idx;
            let mut v = vec![0.0; d];
            let mut w = 1.0;
            for a in (0..d).rev() {
                let off = (rem % side) as i64 - radius;
                rem /= side;
                v[a] = (center[a] + off) as f64;
                let u = off as f64 / (radius + 1) as f64;
                w *= (0.5 * PI * u).cos().powi(2);
            }
            (w > 0.0).then_some((v, w))
        })
        .collect()
}

/// R(θ) = ‖N(f₁, f₂)‖₂ / (‖f₁‖₂‖f₂‖_∞) for each θ. The coefficients are
/// nonnegative, so ‖f₂‖_∞ = Σ ĝ is attained at the origin.
pub fn angle_gain_scan(sym: &NullSymbol, thetas: &[f64], p: &PacketParams) -> Result<Vec<GainRow>> {
    if p.d < 2 {
        return Err(Error::UnsupportedDimension(p.d));
    }
    let mut out = Vec::new();
    for &theta in thetas {
        let mut c1 = vec![0i64; p.d];
        c1[0] = p.carrier.round() as i64;
        let mut c2 = vec![0i64; p.d];
        c2[0] = (p.carrier * theta.cos()).round() as i64;
        c2[1] = (p.carrier * theta.sin()).round() as i64;
        let f1 = packet(&c1, p.radius);
        let f2 = packet(&c2, p.radius);
        let angle = clifford::angle(&c1.iter().map(|&x| x as f64).collect::<Vec<_>>(), &c2.iter().map(|&x| x as f64).collect::<Vec<_>>());
        if angle <= 2.0 * (p.radius as f64 * (p.d as f64).sqrt()) / p.carrier {
            return Err(Error::Separation(format!("θ = {theta} is not resolved by packets of radius {}", p.radius)));
        }
        let w = sym.width();
        let mut acc: HashMap<Vec<i64>, Vec<C64>> = HashMap::new();
        let mut buf = vec![ZERO; w];
        for (xi, a) in &f1 {
            for (eta, b) in &f2 {
                sym.eval(xi, eta, &mut buf);
                let key: Vec<i64> = xi.iter().zip(eta).map(|(x, y)| (x + y).round() as i64).collect();
                let e = acc.entry(key).or_insert_with(|| vec![ZERO; w]);
                for (z, m) in e.iter_mut().zip(&buf) {
                    *z += m * (a * b);
                }
            }
        }
        let vol = (2.0 * PI).powi(p.d as i32);
        let n_out: f64 = acc.values().flat_map(|v| v.iter()).map(|z| z.norm_sqr()).sum::<f64>() * vol;
        let n1: f64 = f1.iter().map(|(_, a)| a * a).sum::<f64>() * vol;
        let sup2: f64 = f2.iter().map(|(_, b)| b).sum();
        let gain = n_out.sqrt() / (n1.sqrt() * sup2);
        out.push(GainRow { symbol: sym.name(), theta, angle, gain, gain_over_theta: gain / angle });
    }
    Ok(out)
}

/// Summary of a gain scan against a band [lo, hi] for R(θ)/θ.
#[derive(Clone, Debug, Serialize)]
pub struct GainVerdict {
    pub symbol: &'static str,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub in_band: bool,
    /// R(θ_min)/R(θ_max)
    pub decay: f64,
    /// decay ≤ 2 θ_min/θ_max
    pub decays: bool,
}

/// Factor-two band about the small-angle constant of the model symbol on
/// the default packets.
pub const MODEL_GAIN_BAND: (f64, f64) = (0.35, 1.4);
/// The spinorial constant carries the extra factor ‖Π(ξ)Π(−η)‖/θ → ½.
pub const SPINORIAL_GAIN_BAND: (f64, f64) = (0.175, 0.7);

pub fn gain_verdict(rows: &[GainRow], band: (f64, f64)) -> GainVerdict {
    let lo = rows.iter().map(|r| r.gain_over_theta).fold(f64::INFINITY, f64::min);
    let hi = rows.iter().map(|r| r.gain_over_theta).fold(0.0, f64::max);
    let big = rows.iter().max_by(|a, b| a.angle.total_cmp(&b.angle)).unwrap();
    let small = rows.iter().min_by(|a, b| a.angle.total_cmp(&b.angle)).unwrap();
    let decay = small.gain / big.gain;
    GainVerdict {
        symbol: rows[0].symbol,
        min_ratio: lo,
        max_ratio: hi,
        in_band: lo >= band.0 && hi <= band.1,
        decay,
        decays: decay <= 2.0 * small.angle / big.angle,
    }
}

/// Transversal free waves in boxes C_{k'}(ℓ') at angle 2^{ℓ̃}.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct BilinearConfig {
    pub d: usize,
    pub k: i32,
    pub k_prime: i32,
    pub ell_prime: i32,
    pub ell_tilde: i32,
    /// Lattice points per transverse half-width.
    pub resolution: usize,
    /// Time samples of the trapezoid rule.
    pub time_points: usize,
}

impl Default for BilinearConfig {
    fn default() -> Self {
        BilinearConfig { d: 3, k: 6, k_prime: 2, ell_prime: -3, ell_tilde: -1, resolution: 8, time_points: 48 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BilinearRow {
    pub ell_tilde: i32,
    pub k_prime: i32,
    pub ell_prime: i32,
    /// ‖φψ‖_{L²L²} / (‖φ[0]‖‖ψ[0]‖)
    pub constant: f64,
    /// 2^{−ℓ̃} 2^{(d−1)/2 (k'+ℓ')}
    pub predicted: f64,
    /// product at the window edge relative to its peak
    pub tail: f64,
    pub grid: Vec<usize>,
}

/// Box amplitude: cos² in every box coordinate.
fn box_amplitude(local: &[f64], half: &[f64]) -> f64 {
    let mut w = 1.0;
    for (x, h) in local.iter().zip(half) {
        let u = x / h;
        if u.abs() >= 1.0 {
            return 0.0;
        }
        w *= (0.5 * PI * u).cos().powi(2);
    }
    w
}

struct LatticeBox {
    /// integer offsets from `center`
    offsets: Vec<Vec<i64>>,
    freqs: Vec<Vec<f64>>,
    amp: Vec<f64>,
}

fn lattice_box(d: usize, dk: f64, radius: f64, omega: &[f64], half: &[f64]) -> LatticeBox {
    // orthonormal frame (ω, ω⊥ in the 1-2 plane, e₃, …)
    let mut frame = vec![omega.to_vec(), vec![0.0; d]];
    frame[1][0] = -omega[1];
    frame[1][1] = omega[0];
    for a in 2..d {
        let mut e = vec![0.0; d];
        e[a] = 1.0;
        frame.push(e);
    }
    let center: Vec<i64> = omega.iter().map(|w| (radius * w / dk).round() as i64).collect();
    let reach: Vec<i64> = (0..d).map(|a| (frame.iter().zip(half).map(|(f, h)| (f[a] * h).abs()).sum::<f64>() / dk).ceil() as i64 + 1).collect();
    let sides: Vec<usize> = reach.iter().map(|r| (2 * r + 1) as usize).collect();
    let total: usize = sides.iter().product();
    let mut b = LatticeBox { offsets: Vec::new(), freqs: Vec::new(), amp: Vec::new() };
    for idx in 0..total {
        let mut rem = idx;
        let mut off = vec![0i64; d];
        for a in (0..d).rev() {
            off[a] = (rem % sides[a]) as i64 - reach[a];
            rem /= sides[a];
        }
        let xi: Vec<f64> = (0..d).map(|a| (center[a] + off[a]) as f64 * dk).collect();
        let rel: Vec<f64> = (0..d).map(|a| xi[a] - radius * omega[a]).collect();
        let local: Vec<f64> = frame.iter().map(|f| dot(f, &rel)).collect();
        let w = box_amplitude(&local, half);
        if w > 0.0 {
            b.offsets.push(off);
            b.freqs.push(xi);
            b.amp.push(w);
        }
    }
    b
}

/// Measures ‖φψ‖_{L²_{t,x}} for free waves φ = e^{it|D|}φ₀, ψ = e^{it|D|}ψ₀
/// with Fourier supports in boxes of radial side 2^{k'} and transverse side
/// 2^{k'+ℓ'} at |ξ| ≈ 2^k, separated by the angle 2^{ℓ̃}.
///
/// Both waves live on the torus of the frequency lattice. Carriers are
/// removed, and |φψ|² is integrated exactly on the smallest grid resolving
/// the envelope spectra.
pub fn transversal_bilinear_l2(cfg: &BilinearConfig) -> Result<BilinearRow> {
    let d = cfg.d;
    if d < 2 {
        return Err(Error::UnsupportedDimension(d));
    }
    let theta = 2f64.powi(cfg.ell_tilde);
    let width = 2f64.powi(cfg.k_prime + cfg.ell_prime - cfg.k);
    if theta < 4.0 * width || cfg.ell_tilde < cfg.ell_prime {
        return Err(Error::Separation(format!("angle 2^{} is not transversal to boxes of angular width {width:.3e}", cfg.ell_tilde)));
    }
    let hr = 2f64.powi(cfg.k_prime) / 2.0;
    let ht = 2f64.powi(cfg.k_prime + cfg.ell_prime) / 2.0;
    let dk = ht / cfg.resolution as f64;
    let radius = 2f64.powi(cfg.k);
    let mut half = vec![ht; d];
    half[0] = hr;
    let mut w1 = vec![0.0; d];
    w1[0] = 1.0;
    let mut w2 = vec![0.0; d];
    w2[0] = theta.cos();
    w2[1] = theta.sin();
    let b1 = lattice_box(d, dk, radius, &w1, &half);
    let b2 = lattice_box(d, dk, radius, &w2, &half);
    // envelope grid: spans of the two offset sets, plus one
    let mut dims = vec![0usize; d];
    let mut lo1 = vec![0i64; d];
    let mut lo2 = vec![0i64; d];
    for a in 0..d {
        let (l1, h1) = b1.offsets.iter().fold((i64::MAX, i64::MIN), |(l, h), o| (l.min(o[a]), h.max(o[a])));
        let (l2, h2) = b2.offsets.iter().fold((i64::MAX, i64::MIN), |(l, h), o| (l.min(o[a]), h.max(o[a])));
        lo1[a] = l1;
        lo2[a] = l2;
        dims[a] = ((h1 - l1 + h2 - l2 + 1) as usize).next_power_of_two();
    }
    let npts: usize = dims.iter().product();
    let mut planner = FftPlanner::new();
    let plans: Vec<_> = dims.iter().map(|&n| planner.plan_fft_inverse(n)).collect();
    let axes: Vec<usize> = (0..d).collect();
    let place = |b: &LatticeBox, lo: &[i64], t: f64| -> Vec<C64> {
        let mut buf = vec![ZERO; npts];
        for ((off, xi), a) in b.offsets.iter().zip(&b.freqs).zip(&b.amp) {
            let mut idx = 0usize;
            for ax in 0..d {
                idx = idx * dims[ax] + (off[ax] - lo[ax]) as usize;
            }
            buf[idx] = C64::from_polar(*a, t * norm(xi));
        }
        fft::fft_axes(&mut buf, &dims, &axes, &plans);
        buf
    };
    let period = 2.0 * PI / dk;
    let cell = period.powi(d as i32) / npts as f64;
    let product_norm2 = |t: f64| -> f64 {
        let p = place(&b1, &lo1, t);
        let q = place(&b2, &lo2, t);
        p.iter().zip(&q).map(|(x, y)| (x * y).norm_sqr()).sum::<f64>() * cell
    };
    // packets of transverse size ~2π/ht separate at relative speed ~θ; stop
    // well before the relative displacement wraps around the period
    let t_edge = 0.35 * period / theta;
    let nt = cfg.time_points.max(4);
    let ht_step = 2.0 * t_edge / (nt - 1) as f64;
    let times: Vec<f64> = (0..nt).map(|i| -t_edge + i as f64 * ht_step).collect();
    let vals: Vec<f64> = times.iter().map(|&t| product_norm2(t)).collect();
    let integral: f64 = vals.iter().enumerate().map(|(i, v)| if i == 0 || i == nt - 1 { 0.5 * v } else { *v }).sum::<f64>() * ht_step;
    let peak = vals.iter().cloned().fold(0.0, f64::max);
    let tail = vals[0].max(vals[nt - 1]) / peak;
    let vol = period.powi(d as i32);
    let n1 = (2.0 * vol * b1.amp.iter().map(|a| a * a).sum::<f64>()).sqrt();
    let n2 = (2.0 * vol * b2.amp.iter().map(|a| a * a).sum::<f64>()).sqrt();
    let predicted = 2f64.powi(-cfg.ell_tilde) * 2f64.powf((d as f64 - 1.0) / 2.0 * (cfg.k_prime + cfg.ell_prime) as f64);
    Ok(BilinearRow { ell_tilde: cfg.ell_tilde, k_prime: cfg.k_prime, ell_prime: cfg.ell_prime, constant: integral.sqrt() / (n1 * n2), predicted, tail, grid: dims })
}

/// Measured constants divided by the predicted scaling, normalized to the
/// first row; tracking holds when every entry lies in [½, 2].
pub fn tracking(rows: &[BilinearRow]) -> Vec<f64> {
    let r0 = rows[0].constant / rows[0].predicted;
    rows.iter().map(|r| r.constant / r.predicted / r0).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halton_base_two() {
        assert_eq!(halton(1, 2), 0.5);
        assert_eq!(halton(3, 2), 0.75);
        assert!((halton(5, 3) - 7.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn probit_inverts_normal_cdf() {
        for p in [1e-6, 0.01, 0.3, 0.5, 0.9, 0.999] {
            let x = probit(p);
            assert!((0.5 * erfc(-x / std::f64::consts::SQRT_2) - p).abs() < 1e-6 * p.max(1e-3));
        }
    }

    #[test]
    fn collinear_triple_is_resonant() {
        let t = FreqTriple::new(vec![2.0, 0.0, 0.0], vec![1.0, 0.0, 0.0], [-1.0, 1.0, 1.0]);
        assert_eq!(resonance_h(&t), 0.0);
        assert_eq!(t.xi[0], vec![-3.0, 0.0, 0.0]);
    }

    #[test]
    fn single_mode_knapp_is_unimodular() {
        let modes = vec![vec![4.0, 0.5]];
        for t in [0.0, 1.0, 7.0] {
            assert!((knapp_eval(&modes, t, &[0.3, -2.0]).norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn unresolvable_box_is_rejected() {
        let cfg = KnappConfig { dk: 2.0, ..Default::default() };
        assert!(matches!(knapp_box(&cfg), Err(Error::Unresolvable(_))));
    }

    #[test]
    fn trivial_symbol_gain_is_angle_independent() {
        let rows = angle_gain_scan(&NullSymbol::Trivial, &[0.4, 0.1], &PacketParams::default()).unwrap();
        assert!((rows[0].gain / rows[1].gain - 1.0).abs() < 1e-12);
    }
}
