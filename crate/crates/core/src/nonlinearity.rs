//! Bilinear Maxwell and Dirac nonlinearities, their paradifferential
//! splitting, and the operators that build A₀ and A_x from spinor pairs.
//!
//! ⟨a, b⟩ = Σ_c conj(a_c) b_c is conjugate-linear in the first slot. All
//! products are dealiased and returned in Fourier (spatial fields) or Mixed
//! (space-time blocks) representation.

use crate::clifford::GammaRep;
use crate::error::{Error, Result};
use crate::grid::multiplier::{inv_laplacian, leray, Multiplier};
use crate::grid::{Domain, Field, Kind, Repr};
use crate::spinor::{apply_pi, Sign};
use num_complex::Complex64 as C64;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Default shell gap of the low-high splitting.
pub const PARA_GAP: i32 = 10;
/// Default shell gap of the paradifferential covariant half-wave operator.
pub const PARA_GAP_FREE: i32 = 5;

fn spinor_check(rep: &GammaRep, f: &Field) -> Result<()> {
    if f.ncomp() != rep.n {
        return Err(Error::Shape(format!("expected a rank-{} spinor, got {} components", rep.n, f.ncomp())));
    }
    Ok(())
}

/// Pointwise ⟨a, b_q⟩ for each spinor b_q in `bs`, one scalar component per q.
fn pair_many(a: &Field, bs: &[Field], kind: Kind) -> Result<Field> {
    let n = a.ncomp();
    let mut inputs = vec![a];
    inputs.extend(bs.iter());
    let nq = bs.len();
    a.grid.dealiaser().product(&inputs, kind, nq, |v, out| {
        for q in 0..nq {
            let mut s = ZERO;
            for c in 0..n {
                s += v[c].conj() * v[n + q * n + c];
            }
            out[q] = s;
        }
    })
}

/// Pointwise ⟨φ¹, φ²⟩.
pub fn inner(phi1: &Field, phi2: &Field) -> Result<Field> {
    pair_many(phi1, std::slice::from_ref(phi2), Kind::Scalar)
}

/// Jᵘ = ⟨ψ, αᵘψ⟩.
pub fn current(rep: &GammaRep, psi: &Field, mu: usize) -> Result<Field> {
    spinor_check(rep, psi)?;
    pair_many(psi, &[crate::spinor::apply_alpha(rep, psi, mu)?], Kind::Scalar)
}

/// All components (J⁰, J¹, …, Jᵈ) of the current in one dealiased product:
/// returns J⁰ as a scalar and J_x as a vector field.
pub fn currents(rep: &GammaRep, psi: &Field) -> Result<(Field, Field)> {
    spinor_check(rep, psi)?;
    let n = rep.n;
    let d = rep.d;
    let all = psi.grid.dealiaser().product(&[psi], Kind::Vector, d + 1, |v, out| {
        let mut tmp = [ZERO; 4];
        out[0] = v[..n].iter().map(|z| z.norm_sqr()).sum::<f64>().into();
        for j in 1..=d {
            rep.apply_alpha(j, v, &mut tmp[..n]);
            out[j] = (0..n).map(|c| v[c].conj() * tmp[c]).sum();
        }
    })?;
    let j0 = all.component(0);
    let parts: Vec<Field> = (1..=d).map(|j| all.component(j)).collect();
    Ok((j0, Field::from_components(Kind::Vector, &parts)?))
}

/// Spatial current (⟨ψ, α¹φ⟩, …, ⟨ψ, αᵈφ⟩) before Leray projection.
pub fn spatial_pairing(rep: &GammaRep, psi: &Field, phi: &Field) -> Result<Field> {
    spinor_check(rep, phi)?;
    let bs: Vec<Field> = (1..=rep.d).map(|j| crate::spinor::apply_alpha(rep, phi, j)).collect::<Result<_>>()?;
    pair_many(psi, &bs, Kind::Vector)
}

/// N^E(φ¹, φ²) = −⟨φ¹, φ²⟩.
pub fn maxwell_e(phi1: &Field, phi2: &Field) -> Result<Field> {
    Ok(inner(phi1, phi2)?.scale_re(-1.0))
}

/// ∂ₜN^E(φ¹, φ²) = ∂ˡ⟨φ¹, α_ℓφ²⟩.
pub fn maxwell_dt_e(rep: &GammaRep, phi1: &Field, phi2: &Field) -> Result<Field> {
    crate::grid::multiplier::divergence(&spatial_pairing(rep, phi1, phi2)?)
}

/// 𝒫_j⟨φ¹, α_xφ²⟩, the full Maxwell source.
pub fn maxwell_x(rep: &GammaRep, phi1: &Field, phi2: &Field) -> Result<Field> {
    leray(&spatial_pairing(rep, phi1, phi2)?)
}

/// N^R_j(φ¹, φ²) = 𝒫_j⟨φ¹, R_xφ²⟩, all j at once.
pub fn maxwell_r(phi1: &Field, phi2: &Field) -> Result<Field> {
    let d = phi1.grid.d;
    let bs: Vec<Field> = (1..=d).map(|j| Multiplier::Riesz(j).apply(phi2)).collect::<Result<_>>()?;
    leray(&pair_many(phi1, &bs, Kind::Vector)?)
}

/// N^S_{j,s}(φ¹, φ²) = 𝒫_j⟨φ¹, Π₋ₛα_xφ²⟩.
pub fn maxwell_s(rep: &GammaRep, phi1: &Field, phi2: &Field, s: Sign) -> Result<Field> {
    spinor_check(rep, phi2)?;
    let bs: Vec<Field> = (1..=rep.d)
        .map(|j| apply_pi(rep, &crate::spinor::apply_alpha(rep, phi2, j)?, s.flip()))
        .collect::<Result<_>>()?;
    leray(&pair_many(phi1, &bs, Kind::Vector)?)
}

/// Σⱼ aⱼ·bⱼ for scalars aⱼ (components of `a`) and spinors bⱼ.
fn scalar_spinor_sum(a: &Field, bs: &[Field]) -> Result<Field> {
    let n = bs[0].ncomp();
    let na = a.ncomp();
    let comps: Vec<Field> = (0..na).map(|j| a.component(j)).collect();
    let mut inputs: Vec<&Field> = comps.iter().collect();
    inputs.extend(bs.iter());
    a.grid.dealiaser().product(&inputs, Kind::Spinor, n, |v, out| {
        for r in 0..n {
            let mut s = ZERO;
            for j in 0..na {
                s += v[j] * v[na + j * n + r];
            }
            out[r] = s;
        }
    })
}

/// ND^E(A₀, φ) = A₀φ.
pub fn dirac_e(a0: &Field, phi: &Field) -> Result<Field> {
    scalar_spinor_sum(a0, std::slice::from_ref(phi))
}

/// ND^R(A_x, φ) = (𝒫ⱼA_x)(Rʲφ).
pub fn dirac_r(ax: &Field, phi: &Field) -> Result<Field> {
    let d = ax.grid.d;
    let a = leray(ax)?;
    let bs: Vec<Field> = (1..=d).map(|j| Multiplier::Riesz(j).apply(phi)).collect::<Result<_>>()?;
    scalar_spinor_sum(&a, &bs)
}

/// ND^S_s(A_x, φ) = Aⱼ Π₋ₛ(αʲφ) with Aⱼ = 𝒫ⱼA_x.
pub fn dirac_s(rep: &GammaRep, ax: &Field, phi: &Field, s: Sign) -> Result<Field> {
    let a = leray(ax)?;
    let bs: Vec<Field> = (1..=rep.d)
        .map(|j| apply_pi(rep, &crate::spinor::apply_alpha(rep, phi, j)?, s.flip()))
        .collect::<Result<_>>()?;
    scalar_spinor_sum(&a, &bs)
}

/// αᵘAᵤψ = A₀ψ + Aⱼαʲψ, evaluated pointwise without any Riesz splitting.
pub fn potential_times(rep: &GammaRep, a0: &Field, ax: &Field, psi: &Field) -> Result<Field> {
    spinor_check(rep, psi)?;
    let n = rep.n;
    let d = rep.d;
    let comps: Vec<Field> = std::iter::once(a0.component(0)).chain((0..d).map(|j| ax.component(j))).collect();
    let mut inputs: Vec<&Field> = comps.iter().collect();
    inputs.push(psi);
    a0.grid.dealiaser().product(&inputs, Kind::Spinor, n, |v, out| {
        let p = &v[d + 1..d + 1 + n];
        let mut tmp = [ZERO; 4];
        for r in 0..n {
            out[r] = v[0] * p[r];
        }
        for j in 1..=d {
            rep.apply_alpha(j, p, &mut tmp[..n]);
            for r in 0..n {
                out[r] += v[j] * tmp[r];
            }
        }
    })
}

/// Which Dirac nonlinearity a paradifferential split refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParaKind {
    E,
    R,
    S(Sign),
}

fn apply_kind(rep: &GammaRep, kind: ParaKind, a: &Field, phi: &Field) -> Result<Field> {
    match kind {
        ParaKind::E => dirac_e(a, phi),
        ParaKind::R => dirac_r(a, phi),
        ParaKind::S(s) => dirac_s(rep, a, phi, s),
    }
}

fn zero_mode(phi: &Field) -> Field {
    let mut rest = phi.clone();
    rest.remove_mean();
    phi.sub(&rest).unwrap()
}

/// π[A]φ = Σₖ N(P_{<k−gap}A, Pₖφ) and the remainder
/// Σₖ N(P_{≥k−gap}A, Pₖφ) + N(A, φ̂(0)). Their sum is N(A, φ).
pub fn para_split(rep: &GammaRep, kind: ParaKind, a: &Field, phi: &Field, gap: i32) -> Result<(Field, Field)> {
    let (lo, hi) = phi.grid.shell_range();
    let mut low: Option<Field> = None;
    let mut rem = apply_kind(rep, kind, a, &zero_mode(phi))?;
    for k in lo..=hi {
        let pk = Multiplier::Shell(k).apply(phi)?;
        if pk.norm_l2() == 0.0 {
            continue;
        }
        let a_low = Multiplier::Below(k - gap).apply(a)?;
        let a_high = Multiplier::AtLeast(k - gap).apply(a)?;
        let t = apply_kind(rep, kind, &a_low, &pk)?;
        low = Some(match low {
            None => t,
            Some(l) => l.add(&t)?,
        });
        rem = rem.add(&apply_kind(rep, kind, &a_high, &pk)?)?;
    }
    let low = match low {
        Some(l) => l,
        None => rem.zeros_like(),
    };
    Ok((low, rem))
}

pub fn para_lowhigh(rep: &GammaRep, kind: ParaKind, a: &Field, phi: &Field, gap: i32) -> Result<Field> {
    Ok(para_split(rep, kind, a, phi, gap)?.0)
}

pub fn remainder(rep: &GammaRep, kind: ParaKind, a: &Field, phi: &Field, gap: i32) -> Result<Field> {
    Ok(para_split(rep, kind, a, phi, gap)?.1)
}

/// 𝐀₀(φ¹, φ²) = Δ⁻¹N^E(φ¹, φ²). The source must have zero spatial mean.
pub fn build_a0(phi1: &Field, phi2: &Field) -> Result<Field> {
    let src = maxwell_e(phi1, phi2)?;
    let mean = src.max_spatial_mean();
    if mean > 1e-12 * src.rms() && mean > 1e-300 {
        return Err(Error::ChargeObstruction { mean });
    }
    inv_laplacian(&src)
}

/// Charge-neutralized 𝐀₀: the spatial mean of N^E is subtracted first and
/// returned alongside (one value per time slice).
pub fn build_a0_neutral(phi1: &Field, phi2: &Field) -> Result<(Field, Vec<C64>)> {
    let mut src = maxwell_e(phi1, phi2)?;
    let work = if src.domain == Domain::SpaceTime { Repr::Mixed } else { Repr::Fourier };
    src.set_repr(work);
    let nsp = src.grid.nsp();
    let means: Vec<C64> = (0..src.nt()).map(|t| src.comps[0][t * nsp]).collect();
    src.remove_mean();
    Ok((inv_laplacian(&src)?, means))
}

/// Exact per-mode coefficients of one step of Â'' + ω²Â = F with F linear
/// in time over the step.
#[derive(Clone, Copy, Debug)]
pub struct WaveStep {
    pub cos: f64,
    /// sin(ωh)/ω
    pub sinc: f64,
    /// ω sin(ωh)
    pub wsin: f64,
    /// ∫₀ʰ sin(ω(h−s))/ω ds = ∫₀ʰ s cos(ω(h−s)) ds
    pub i0: f64,
    /// ∫₀ʰ s sin(ω(h−s))/ω ds
    pub i1: f64,
}

impl WaveStep {
    pub fn new(omega: f64, h: f64) -> WaveStep {
        let x = omega * h;
        if x.abs() < 0.1 {
            // alternating series; x ≤ 0.1 makes eight terms exact to rounding
            let x2 = x * x;
            let series = |start: u32| {
                let mut term = 1.0;
                for k in 1..=start {
                    term /= k as f64;
                }
                let mut sum = 0.0;
                let mut kf = start as f64;
                for _ in 0..8 {
                    sum += term;
                    term *= -x2 / ((kf + 1.0) * (kf + 2.0));
                    kf += 2.0;
                }
                sum
            };
            let sinc = h * series(1);
            WaveStep { cos: x.cos(), sinc, wsin: omega * omega * sinc, i0: h * h * series(2), i1: h * h * h * series(3) }
        } else {
            let (s, c) = x.sin_cos();
            let w2 = omega * omega;
            WaveStep { cos: c, sinc: s / omega, wsin: omega * s, i0: (1.0 - c) / w2, i1: (x - s) / (w2 * omega) }
        }
    }

    /// Advances (a, a') by h with forcing F(s) = f0 + (f1 − f0)s/h.
    #[inline]
    pub fn apply(&self, h: f64, a: C64, ad: C64, f0: C64, f1: C64) -> (C64, C64) {
        let slope = (f1 - f0) / h;
        let a_new = a * self.cos + ad * self.sinc + f0 * self.i0 + slope * self.i1;
        let ad_new = -a * self.wsin + ad * self.cos + f0 * self.sinc + slope * self.i0;
        (a_new, ad_new)
    }
}

/// Per-mode step tables indexed by spatial Fourier index.
pub fn wave_tables(grid: &crate::grid::Grid, h: f64) -> Vec<WaveStep> {
    (0..grid.nsp()).map(|i| WaveStep::new(grid.abs_xi(i), h)).collect()
}

/// Advances a spatial-Fourier vector potential (A, ∂ₜA) under □A = S with
/// S interpolated linearly from `s0` to `s1` over the step.
pub fn wave_advance(a: &mut Field, adot: &mut Field, s0: &Field, s1: &Field, h: f64, table: &[WaveStep]) -> Result<()> {
    if a.repr != Repr::Fourier || adot.repr != Repr::Fourier || a.domain != Domain::Space {
        return Err(Error::Representation("spatial Fourier"));
    }
    let s0 = s0.to_repr(Repr::Fourier);
    let s1 = s1.to_repr(Repr::Fourier);
    for c in 0..a.ncomp() {
        let (ac, adc) = (&mut a.comps[c], &mut adot.comps[c]);
        for i in 0..ac.len() {
            // □ = −∂ₜ² + Δ, so Â'' + |ξ|²Â = −Ŝ
            let (x, y) = table[i].apply(h, ac[i], adc[i], -s0.comps[c][i], -s1.comps[c][i]);
            ac[i] = x;
            adc[i] = y;
        }
    }
    Ok(())
}

/// 𝐀_x(ψ, φ) = □⁻¹𝒫⟨ψ, α_xφ⟩ with zero data, sampled at uniform times
/// t_n = n·h. The source is interpolated linearly between samples and
/// integrated exactly against the wave kernel.
pub fn build_ax(rep: &GammaRep, psi: &[Field], phi: &[Field], h: f64) -> Result<Vec<Field>> {
    if psi.len() != phi.len() || psi.is_empty() {
        return Err(Error::Shape("need matching nonempty time series".into()));
    }
    let sources: Vec<Field> = psi.iter().zip(phi).map(|(a, b)| maxwell_x(rep, a, b).map(|f| f.into_repr(Repr::Fourier))).collect::<Result<_>>()?;
    build_ax_from_sources(&sources, h)
}

/// □⁻¹ of a sampled Leray-projected source with zero data.
pub fn build_ax_from_sources(sources: &[Field], h: f64) -> Result<Vec<Field>> {
    let grid = sources[0].grid.clone();
    let table = wave_tables(&grid, h);
    let mut a = Field::vector(&grid, Domain::Space, Repr::Fourier);
    let mut ad = a.clone();
    let mut out = vec![a.clone()];
    for w in sources.windows(2) {
        wave_advance(&mut a, &mut ad, &w[0], &w[1], h, &table)?;
        out.push(a.clone());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clifford::build_gamma_rep;
    use crate::grid::Grid;

    #[test]
    fn wave_step_series_matches_closed_form() {
        for &w in &[0.05, 0.099, 0.101, 0.5] {
            let h = 1.0;
            let a = WaveStep::new(w, h);
            let x = w * h;
            let i0 = (1.0 - x.cos()) / (w * w);
            let i1 = (x - x.sin()) / (w * w * w);
            assert!((a.i0 - i0).abs() < 1e-12 * i0, "{w}");
            assert!((a.i1 - i1).abs() < 1e-10 * i1, "{w}");
            assert!((a.sinc - x.sin() / w).abs() < 1e-14);
        }
        let z = WaveStep::new(0.0, 0.3);
        assert_eq!(z.cos, 1.0);
        assert!((z.i0 - 0.045).abs() < 1e-16);
        assert!((z.i1 - 0.0045).abs() < 1e-16);
    }

    #[test]
    fn forced_oscillator_is_exact_for_linear_forcing() {
        // a'' + 4a = t has a(t) = t/4 − sin(2t)/8 with zero data
        let w: f64 = 2.0;
        let h = 0.37;
        let st = WaveStep::new(w, h);
        let (mut a, mut ad) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
        for n in 0..10 {
            let t0 = n as f64 * h;
            (a, ad) = st.apply(h, a, ad, C64::new(t0, 0.0), C64::new(t0 + h, 0.0));
        }
        let t = 10.0 * h;
        assert!((a.re - (t / 4.0 - (2.0 * t).sin() / 8.0)).abs() < 1e-14);
        assert!((ad.re - (0.25 - (2.0 * t).cos() / 4.0)).abs() < 1e-14);
    }

    #[test]
    fn constant_potential_and_gradients() {
        let rep = build_gamma_rep(2).unwrap();
        let g = Grid::new(2, 8, 2.0 * std::f64::consts::PI).unwrap();
        let phi = Field::from_fn(&g, Kind::Spinor, 2, Domain::Space, |x, _| vec![C64::new(x[0].sin(), 1.0), C64::new(0.0, x[1].cos())]);
        let one = Field::from_fn(&g, Kind::Scalar, 1, Domain::Space, |_, _| vec![C64::new(1.0, 0.0)]);
        assert!(dirac_e(&one, &phi).unwrap().rel_dist(&phi).unwrap() < 1e-14);
        let s = Field::from_fn(&g, Kind::Scalar, 1, Domain::Space, |x, _| vec![C64::new((x[0] + x[1]).cos(), 0.0)]);
        let grad = crate::grid::multiplier::gradient(&s).unwrap();
        assert!(dirac_r(&grad, &phi).unwrap().norm_l2() < 1e-14);
        let _ = rep;
    }
}
