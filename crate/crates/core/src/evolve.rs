//! Time integration of the coupled system in half-wave form, run
//! diagnostics, and the Picard-type outer iteration.
//!
//! The half-waves obey (i∂ₜ + s|D|)ψ_s = Π_s(αᵘAᵤψ) with ψ = ψ₊ + ψ₋,
//! the potentials ΔA₀ = −|ψ|² (charge-neutralized) and □A_x = 𝒫⟨ψ, α_xψ⟩.
//! The linear half-wave flow and the free wave flow are applied exactly
//! per Fourier mode; the coupling enters through an explicit exponential
//! midpoint rule.

use crate::clifford::GammaRep;
use crate::error::{Error, Result};
use crate::grid::multiplier::{divergence, gradient, inv_laplacian, leray, Multiplier};
use crate::grid::{Domain, Field, Grid, Kind, Repr};
use crate::nonlinearity::{build_ax_from_sources, currents, potential_times, wave_advance, wave_tables, WaveStep};
use crate::spinor::{apply_pi, Sign};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

const MINUS_I: C64 = C64::new(0.0, -1.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataFamily {
    Zero,
    /// ψ = 0 with a free Coulomb wave for A.
    FreeWave,
    /// Smooth spinor packet plus a free Coulomb wave, both of size ε.
    Packet,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DataParams {
    pub family: DataFamily,
    pub eps: f64,
    /// Spatial width of the packets.
    pub width: f64,
    /// Carrier wave number of the spinor packet along x₁.
    pub carrier: f64,
    pub seed: u64,
}

impl Default for DataParams {
    fn default() -> Self {
        DataParams { family: DataFamily::Packet, eps: 1e-2, width: 1.2, carrier: 1.5, seed: 7 }
    }
}

/// Initial data (ψ(0), A_x(0), ∂ₜA_x(0)), all in spatial Fourier representation.
#[derive(Clone, Debug)]
pub struct InitialData {
    pub psi: Field,
    pub ax: Field,
    pub ax_dot: Field,
}

/// Band-limited periodic Gaussian with the given spectral center and
/// spatial center, normalized to unit sup norm.
fn gaussian_profile(grid: &Arc<Grid>, width: f64, center: &[f64], carrier: &[f64]) -> Field {
    let mut f = Field::scalar(grid, Domain::Space, Repr::Fourier);
    for i in 0..grid.nsp() {
        if grid.is_nyquist(i) {
            continue;
        }
        let xi = grid.xi(i);
        let mut r2 = 0.0;
        let mut phase = 0.0;
        for a in 0..grid.d {
            r2 += (xi[a] - carrier[a]).powi(2);
            phase -= xi[a] * center[a];
        }
        f.comps[0][i] = C64::from_polar((-0.5 * r2 * width * width).exp(), phase);
    }
    let m = f.max_abs();
    f.scale_re(1.0 / m)
}

/// Replaces a field by its real part in physical space.
fn real_part(f: &Field) -> Field {
    let mut p = f.physical();
    for c in p.comps.iter_mut() {
        for z in c.iter_mut() {
            z.im = 0.0;
        }
    }
    p.into_repr(f.repr)
}

/// Smooth free-wave data of size ε in Coulomb gauge, built from packets
/// centered at `center` (random centers when `None`).
pub fn free_wave_data(grid: &Arc<Grid>, eps: f64, width: f64, seed: u64, center: Option<&[f64]>) -> Result<(Field, Field)> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0xa5a5);
    let d = grid.d;
    let make = |rng: &mut rand_chacha::ChaCha8Rng| -> Result<Field> {
        let parts: Vec<Field> = (0..d)
            .map(|_| {
                let c: Vec<f64> = (0..d).map(|_| rng.random_range(0.3..0.7) * grid.length).collect();
                let carrier: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
                real_part(&gaussian_profile(grid, width, center.unwrap_or(&c), &carrier))
            })
            .collect();
        let mut v = Field::from_components(Kind::Vector, &parts)?;
        v.remove_mean();
        let v = leray(&v)?;
        let m = v.max_abs();
        Ok(v.scale_re(eps / m))
    };
    let a = make(&mut rng)?;
    let ad = make(&mut rng)?;
    Ok((a, ad))
}

pub fn make_data(rep: &GammaRep, grid: &Arc<Grid>, p: &DataParams) -> Result<InitialData> {
    let zero_psi = Field::spinor(grid, rep.n, Domain::Space, Repr::Fourier);
    let zero_a = Field::vector(grid, Domain::Space, Repr::Fourier);
    match p.family {
        DataFamily::Zero => Ok(InitialData { psi: zero_psi, ax: zero_a.clone(), ax_dot: zero_a }),
        DataFamily::FreeWave => {
            let (ax, ax_dot) = free_wave_data(grid, p.eps, p.width, p.seed, None)?;
            Ok(InitialData { psi: zero_psi, ax, ax_dot })
        }
        DataFamily::Packet => {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(p.seed);
            let center = vec![grid.length / 2.0; grid.d];
            let mut carrier = vec![0.0; grid.d];
            carrier[0] = p.carrier;
            let g = gaussian_profile(grid, p.width, &center, &carrier);
            let v: Vec<C64> = (0..rep.n).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
            let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let parts: Vec<Field> = v.iter().map(|c| g.scale(c * (p.eps / norm))).collect();
            let mut psi = Field::from_components(Kind::Spinor, &parts)?;
            psi.remove_mean();
            let psi = psi.scale_re(p.eps / psi.max_abs());
            let (ax, ax_dot) = free_wave_data(grid, p.eps, p.width, p.seed, Some(&center))?;
            Ok(InitialData { psi, ax, ax_dot })
        }
    }
}

/// Coulomb gauge transform of (A, ∂ₜA): Ã = A − ∇χ with Δχ = div A.
#[derive(Clone, Debug)]
pub struct Coulombized {
    pub ax: Field,
    pub ax_dot: Field,
    pub chi: Field,
    pub chi_dot: Field,
}

pub fn coulombize(ax: &Field, ax_dot: &Field) -> Result<Coulombized> {
    let one = |a: &Field| -> Result<(Field, Field)> {
        // the divergence of a periodic field has zero mean
        let mut div = divergence(a)?;
        div.remove_mean();
        let chi = inv_laplacian(&div)?;
        let out = a.sub(&gradient(&chi)?)?;
        Ok((out, chi))
    };
    let (a, chi) = one(ax)?;
    let (ad, chi_dot) = one(ax_dot)?;
    Ok(Coulombized { ax: a, ax_dot: ad, chi, chi_dot })
}

/// Data of the same problem viewed at scale λ: (λ^{-3/2}ψ, λ^{-1}A, λ^{-2}∂ₜA)(x/λ),
/// placed on `grid`, whose period must be λ times the original.
pub fn rescale_data(data: &InitialData, grid: &Arc<Grid>, lambda: f64) -> Result<InitialData> {
    let move_to = |f: &Field, s: f64| -> Result<Field> {
        if grid.n != f.grid.n || grid.d != f.grid.d || ((grid.length / f.grid.length) - lambda).abs() > 1e-12 * lambda {
            return Err(Error::Shape("rescaled grid must have the same n and period λL".into()));
        }
        let mut g = f.to_repr(Repr::Fourier).scale_re(s);
        g.grid = grid.clone();
        Ok(g)
    };
    Ok(InitialData {
        psi: move_to(&data.psi, lambda.powf(-1.5))?,
        ax: move_to(&data.ax, 1.0 / lambda)?,
        ax_dot: move_to(&data.ax_dot, lambda.powi(-2))?,
    })
}

/// Whether the potential couples back to the spinor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Coupling {
    Full,
    /// A ≡ 0 in the Dirac equation; free half-waves and free A.
    Off,
}

/// Full state at one time; all fields in spatial Fourier representation.
#[derive(Clone, Debug)]
pub struct MdState {
    pub t: f64,
    pub plus: Field,
    pub minus: Field,
    pub a0: Field,
    pub ax: Field,
    pub ax_dot: Field,
    pub free_ax: Field,
    pub free_ax_dot: Field,
    /// 𝒫⟨ψ, α_xψ⟩ at this time.
    pub source: Field,
    /// J⁰ = |ψ|² at this time.
    pub density: Field,
    /// Spatial mean removed from the elliptic source.
    pub neutralized: f64,
}

impl MdState {
    pub fn psi(&self) -> Field {
        self.plus.add(&self.minus).unwrap()
    }

    /// Q = ∫|ψ|² = ‖ψ₊‖² + ‖ψ₋‖².
    pub fn charge(&self) -> f64 {
        self.psi().norm_l2().powi(2)
    }
}

/// A₀ from J⁰ with the mean removed; returns (A₀, removed mean).
fn a0_from_density(j0: &Field) -> Result<(Field, f64)> {
    let mut src = j0.to_repr(Repr::Fourier).scale_re(-1.0);
    let mean = src.comps[0][0].re;
    src.remove_mean();
    Ok((inv_laplacian(&src)?, mean))
}

/// Per-step tables for one step size.
struct StepTables {
    h: f64,
    /// e^{i h|ξ|} and e^{i h|ξ|/2}
    full: Vec<C64>,
    half: Vec<C64>,
    wave_full: Vec<WaveStep>,
    wave_half: Vec<WaveStep>,
}

impl StepTables {
    fn new(grid: &Grid, h: f64) -> StepTables {
        let phases = |t: f64| (0..grid.nsp()).map(|i| C64::from_polar(1.0, t * grid.abs_xi(i))).collect();
        StepTables { h, full: phases(h), half: phases(h / 2.0), wave_full: wave_tables(grid, h), wave_half: wave_tables(grid, h / 2.0) }
    }
}

/// e^{i s t|D|} from a phase table for t; `inverse` uses −t.
fn propagate(f: &Field, phases: &[C64], s: Sign, inverse: bool) -> Field {
    let mut out = f.clone();
    let flip = (s == Sign::Minus) != inverse;
    for c in out.comps.iter_mut() {
        for (v, p) in c.iter_mut().zip(phases) {
            *v *= if flip { p.conj() } else { *p };
        }
    }
    out
}

pub struct Integrator {
    pub rep: GammaRep,
    pub grid: Arc<Grid>,
    pub coupling: Coupling,
    tables: std::sync::Mutex<Option<Arc<StepTables>>>,
}

impl Integrator {
    pub fn new(rep: GammaRep, grid: Arc<Grid>, coupling: Coupling) -> Integrator {
        Integrator { rep, grid, coupling, tables: std::sync::Mutex::new(None) }
    }

    fn tables(&self, h: f64) -> Arc<StepTables> {
        let mut guard = self.tables.lock().unwrap();
        match guard.as_ref() {
            Some(t) if t.h == h => t.clone(),
            _ => {
                let t = Arc::new(StepTables::new(&self.grid, h));
                *guard = Some(t.clone());
                t
            }
        }
    }

    /// Coupled state from data; the spinor is split as ψ_s = Π_sψ.
    pub fn initial_state(&self, data: &InitialData) -> Result<MdState> {
        let psi = data.psi.to_repr(Repr::Fourier);
        let plus = apply_pi(&self.rep, &psi, Sign::Plus)?;
        let minus = apply_pi(&self.rep, &psi, Sign::Minus)?;
        let c = coulombize(&data.ax.to_repr(Repr::Fourier), &data.ax_dot.to_repr(Repr::Fourier))?;
        let mut st = MdState {
            t: 0.0,
            plus,
            minus,
            a0: Field::scalar(&self.grid, Domain::Space, Repr::Fourier),
            ax: c.ax.clone(),
            ax_dot: c.ax_dot.clone(),
            free_ax: c.ax,
            free_ax_dot: c.ax_dot,
            source: Field::vector(&self.grid, Domain::Space, Repr::Fourier),
            density: Field::scalar(&self.grid, Domain::Space, Repr::Fourier),
            neutralized: 0.0,
        };
        self.refresh(&mut st)?;
        Ok(st)
    }

    /// Recomputes A₀, J⁰ and the Maxwell source from the current spinor.
    fn refresh(&self, st: &mut MdState) -> Result<()> {
        let (j0, jx) = currents(&self.rep, &st.psi())?;
        let (a0, mean) = a0_from_density(&j0)?;
        st.a0 = a0;
        st.neutralized = mean;
        st.density = j0.into_repr(Repr::Fourier);
        st.source = leray(&jx)?.into_repr(Repr::Fourier);
        Ok(())
    }

    /// −iΠ_s(αᵘAᵤψ) for both signs.
    fn forcing(&self, a0: &Field, ax: &Field, psi: &Field) -> Result<[Field; 2]> {
        let w = potential_times(&self.rep, a0, ax, psi)?;
        Ok([apply_pi(&self.rep, &w, Sign::Plus)?.scale(MINUS_I), apply_pi(&self.rep, &w, Sign::Minus)?.scale(MINUS_I)])
    }

    /// One explicit exponential midpoint step of size h.
    pub fn step(&self, st: &MdState, h: f64) -> Result<MdState> {
        let tb = self.tables(h);
        let mut free_ax = st.free_ax.clone();
        let mut free_ax_dot = st.free_ax_dot.clone();
        let zero = Field::vector(&self.grid, Domain::Space, Repr::Fourier);
        wave_advance(&mut free_ax, &mut free_ax_dot, &zero, &zero, h, &tb.wave_full)?;
        let pair = [&st.plus, &st.minus];
        if self.coupling == Coupling::Off {
            return Ok(MdState {
                t: st.t + h,
                plus: propagate(&st.plus, &tb.full, Sign::Plus, false),
                minus: propagate(&st.minus, &tb.full, Sign::Minus, false),
                a0: st.a0.clone(),
                ax: free_ax.clone(),
                ax_dot: free_ax_dot.clone(),
                free_ax,
                free_ax_dot,
                source: st.source.clone(),
                density: st.density.clone(),
                neutralized: st.neutralized,
            });
        }
        let psi = st.psi();
        let f0 = self.forcing(&st.a0, &st.ax, &psi)?;
        let mut star = Vec::with_capacity(2);
        for (k, s) in Sign::BOTH.into_iter().enumerate() {
            star.push(propagate(&pair[k].axpy(C64::new(h / 2.0, 0.0), &f0[k])?, &tb.half, s, false));
        }
        let mut ax_star = st.ax.clone();
        let mut ax_dot_star = st.ax_dot.clone();
        wave_advance(&mut ax_star, &mut ax_dot_star, &st.source, &st.source, h / 2.0, &tb.wave_half)?;
        let psi_star = star[0].add(&star[1])?;
        let (j0s, jxs) = currents(&self.rep, &psi_star)?;
        let (a0_star, _) = a0_from_density(&j0s)?;
        let src_star = leray(&jxs)?.into_repr(Repr::Fourier);
        let f1 = self.forcing(&a0_star, &ax_star, &psi_star)?;
        let mut next = Vec::with_capacity(2);
        for (k, s) in Sign::BOTH.into_iter().enumerate() {
            let lin = propagate(pair[k], &tb.full, s, false);
            let kick = propagate(&f1[k], &tb.half, s, false);
            next.push(lin.axpy(C64::new(h, 0.0), &kick)?);
        }
        let mut ax = st.ax.clone();
        let mut ax_dot = st.ax_dot.clone();
        wave_advance(&mut ax, &mut ax_dot, &src_star, &src_star, h, &tb.wave_full)?;
        let minus = next.pop().unwrap();
        let plus = next.pop().unwrap();
        let mut out = MdState {
            t: st.t + h,
            plus,
            minus,
            a0: a0_star,
            ax,
            ax_dot,
            free_ax,
            free_ax_dot,
            source: src_star,
            density: j0s.into_repr(Repr::Fourier),
            neutralized: 0.0,
        };
        if !(out.plus.is_finite() && out.minus.is_finite() && out.ax.is_finite()) {
            return Err(Error::NonFinite { t: out.t, what: "state after step".into() });
        }
        self.refresh(&mut out)?;
        Ok(out)
    }

    /// Residual of the implicit midpoint relation on one completed step,
    /// ‖(ψ₁ − E(h)ψ₀)/h − E(h/2)F(mid)‖ summed over both half-waves, where
    /// the midpoint state is the interaction-picture average.
    pub fn midpoint_residual(&self, prev: &MdState, next: &MdState) -> Result<f64> {
        if self.coupling == Coupling::Off {
            return Ok(0.0);
        }
        let h = next.t - prev.t;
        let tb = self.tables(h);
        let mut mids = Vec::new();
        for (a, b, s) in [(&prev.plus, &next.plus, Sign::Plus), (&prev.minus, &next.minus, Sign::Minus)] {
            let m = propagate(a, &tb.half, s, false).add(&propagate(b, &tb.half, s, true))?.scale_re(0.5);
            mids.push(m);
        }
        let psi_mid = mids[0].add(&mids[1])?;
        let a0_mid = prev.a0.add(&next.a0)?.scale_re(0.5);
        let ax_mid = prev.ax.add(&next.ax)?.scale_re(0.5);
        let f = self.forcing(&a0_mid, &ax_mid, &psi_mid)?;
        let mut r2 = 0.0;
        for (k, (a, b, s)) in [(&prev.plus, &next.plus, Sign::Plus), (&prev.minus, &next.minus, Sign::Minus)].into_iter().enumerate() {
            let lhs = b.sub(&propagate(a, &tb.full, s, false))?.scale_re(1.0 / h);
            let rhs = propagate(&f[k], &tb.half, s, false);
            r2 += lhs.sub(&rhs)?.norm_l2().powi(2);
        }
        Ok(r2.sqrt())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunConfig {
    pub dt: f64,
    pub t_final: f64,
    pub report_every: usize,
    pub coupling: Coupling,
    /// Data sup norm above which the run is flagged as outside the small-data regime.
    pub warn_threshold: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig { dt: 0.1, t_final: 2.0, report_every: 5, coupling: Coupling::Full, warn_threshold: 0.1 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ReportRow {
    pub step: usize,
    pub t: f64,
    pub charge: f64,
    pub charge_drift: f64,
    /// max |div A_x| / max |A_x|
    pub coulomb: f64,
    pub ax_max: f64,
    /// ‖ΔA₀ + |ψ|² − mean‖ / ‖|ψ|²‖
    pub gauss_residual: f64,
    pub dirac_residual: f64,
    pub dt: f64,
    pub shell_norms: Vec<(i32, f64)>,
    pub wall_clock: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub rows: Vec<ReportRow>,
    pub warnings: Vec<String>,
    /// Norm used for the per-shell columns.
    pub shell_norm: &'static str,
    pub max_charge_drift: f64,
    pub max_coulomb: f64,
}

fn row(it: &Integrator, st: &MdState, q0: f64, step: usize, dt: f64, residual: f64, start: &std::time::Instant) -> Result<ReportRow> {
    let q = st.charge();
    let ax_max = st.ax.max_abs();
    let div = divergence(&st.ax)?.max_abs();
    let coulomb = if ax_max > 0.0 { div / ax_max } else { div };
    let lap = Multiplier::Laplacian.apply(&st.a0)?;
    let mut dens = st.density.clone();
    dens.remove_mean();
    let gauss = lap.add(&dens)?.norm_l2() / st.density.norm_l2().max(f64::MIN_POSITIVE);
    let psi = st.psi();
    let (lo, hi) = it.grid.shell_range();
    let shell_norms = (lo..=hi).map(|k| Ok((k, Multiplier::Shell(k).apply(&psi)?.norm_l2()))).collect::<Result<_>>()?;
    Ok(ReportRow {
        step,
        t: st.t,
        charge: q,
        charge_drift: if q0 > 0.0 { (q - q0).abs() / q0 } else { (q - q0).abs() },
        coulomb,
        ax_max,
        gauss_residual: if st.density.norm_l2() > 0.0 { gauss } else { 0.0 },
        dirac_residual: residual,
        dt,
        shell_norms,
        wall_clock: start.elapsed().as_secs_f64(),
    })
}

/// Integrates on [0, t_final] and reports every `report_every` steps.
pub fn run(rep: &GammaRep, data: &InitialData, cfg: &RunConfig) -> Result<(RunReport, MdState)> {
    if !(cfg.dt > 0.0 && cfg.t_final >= 0.0) {
        return Err(Error::Config(format!("dt = {}, T = {}", cfg.dt, cfg.t_final)));
    }
    let grid = data.psi.grid.clone();
    let it = Integrator::new(rep.clone(), grid, cfg.coupling);
    let start = std::time::Instant::now();
    let mut warnings = Vec::new();
    let size = data.psi.max_abs().max(data.ax.max_abs());
    if size > cfg.warn_threshold {
        warnings.push(format!("data size {size:.3e} exceeds the small-data threshold {:.3e}", cfg.warn_threshold));
    }
    let mut st = it.initial_state(data)?;
    let q0 = st.charge();
    let steps = (cfg.t_final / cfg.dt).round() as usize;
    let every = cfg.report_every.max(1);
    let mut rows = vec![row(&it, &st, q0, 0, cfg.dt, 0.0, &start)?];
    for n in 1..=steps {
        let next = it.step(&st, cfg.dt)?;
        if n % every == 0 || n == steps {
            let r = it.midpoint_residual(&st, &next)?;
            rows.push(row(&it, &next, q0, n, cfg.dt, r, &start)?);
        }
        st = next;
    }
    let max_charge_drift = rows.iter().map(|r| r.charge_drift).fold(0.0, f64::max);
    let max_coulomb = rows.iter().map(|r| r.coulomb).fold(0.0, f64::max);
    Ok((RunReport { rows, warnings, shell_norm: "L2 of P_k psi", max_charge_drift, max_coulomb }, st))
}

/// Largest per-mode deviation of the uncoupled run from e^{istT|D|}ψ_s(0),
/// relative to the largest data coefficient.
pub fn free_flow_defect(rep: &GammaRep, data: &InitialData, dt: f64, steps: usize) -> Result<f64> {
    let it = Integrator::new(rep.clone(), data.psi.grid.clone(), Coupling::Off);
    let st0 = it.initial_state(data)?;
    let mut st = st0.clone();
    for _ in 0..steps {
        st = it.step(&st, dt)?;
    }
    let t = st.t;
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for (a, b, s) in [(&st0.plus, &st.plus, 1.0), (&st0.minus, &st.minus, -1.0)] {
        for c in 0..a.ncomp() {
            for i in 0..a.comps[c].len() {
                let want = a.comps[c][i] * C64::from_polar(1.0, s * t * it.grid.abs_xi(i));
                worst = worst.max((b.comps[c][i] - want).norm());
                scale = scale.max(a.comps[c][i].norm());
            }
        }
    }
    Ok(if scale > 0.0 { worst / scale } else { worst })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PicardConfig {
    pub dt: f64,
    pub t_final: f64,
    pub iterations: usize,
    /// Relative fixed-point tolerance of the inner implicit step.
    pub inner_tol: f64,
    pub max_inner: usize,
    /// Stop early once dₙ falls below this multiple of the data norm.
    pub floor: f64,
}

impl Default for PicardConfig {
    fn default() -> Self {
        PicardConfig { dt: 0.1, t_final: 2.0, iterations: 3, inner_tol: 1e-10, max_inner: 50, floor: 1e-13 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PicardReport {
    /// dₙ = sup_t (Σ_s ‖ψ_s^{n+1}(t) − ψ_sⁿ(t)‖²)^{1/2}
    pub distances: Vec<f64>,
    pub ratios: Vec<f64>,
    pub inner_iterations: Vec<usize>,
    pub norm: &'static str,
}

/// A half-wave pair sampled at the time nodes.
type Trajectory = Vec<[Field; 2]>;

/// Solves the linear covariant half-wave system with potentials given at
/// the nodes, by the implicit exponential midpoint rule.
fn solve_linear(it: &Integrator, start: &[Field; 2], a0: &[Field], ax: &[Field], cfg: &PicardConfig) -> Result<(Trajectory, usize)> {
    let h = cfg.dt;
    let tb = it.tables(h);
    let mut traj: Trajectory = vec![start.clone()];
    let mut total = 0;
    for m in 0..a0.len() - 1 {
        let cur = traj[m].clone();
        let a0_mid = a0[m].add(&a0[m + 1])?.scale_re(0.5);
        let ax_mid = ax[m].add(&ax[m + 1])?.scale_re(0.5);
        let lin: Vec<Field> = Sign::BOTH.iter().enumerate().map(|(k, &s)| propagate(&cur[k], &tb.full, s, false)).collect();
        let fwd_half: Vec<Field> = Sign::BOTH.iter().enumerate().map(|(k, &s)| propagate(&cur[k], &tb.half, s, false)).collect();
        let mut next = [lin[0].clone(), lin[1].clone()];
        let mut trace = Vec::new();
        let mut done = false;
        for _ in 0..cfg.max_inner {
            total += 1;
            let mut mid = Vec::with_capacity(2);
            for (k, s) in Sign::BOTH.into_iter().enumerate() {
                mid.push(fwd_half[k].add(&propagate(&next[k], &tb.half, s, true))?.scale_re(0.5));
            }
            let f = it.forcing(&a0_mid, &ax_mid, &mid[0].add(&mid[1])?)?;
            let mut cand = Vec::with_capacity(2);
            for (k, s) in Sign::BOTH.into_iter().enumerate() {
                cand.push(lin[k].axpy(C64::new(h, 0.0), &propagate(&f[k], &tb.half, s, false))?);
            }
            let mut diff = 0.0;
            let mut size = 0.0;
            for k in 0..2 {
                diff += cand[k].sub(&next[k])?.norm_l2().powi(2);
                size += cand[k].norm_l2().powi(2);
            }
            let rel = if size > 0.0 { (diff / size).sqrt() } else { diff.sqrt() };
            trace.push(rel);
            next = [cand[0].clone(), cand[1].clone()];
            if rel <= cfg.inner_tol {
                done = true;
                break;
            }
        }
        if !done {
            return Err(Error::InnerSolve { step: m, trace });
        }
        traj.push(next);
    }
    Ok((traj, total))
}

/// Picard-type outer iteration: Aⁿ⁺¹ = A^free + 𝐀(ψⁿ, ψⁿ) and ψⁿ⁺¹ solves
/// the linear covariant equation with potential Aⁿ⁺¹, starting from ψ⁰ = 0.
pub fn picard_outer(rep: &GammaRep, data: &InitialData, cfg: &PicardConfig) -> Result<PicardReport> {
    let grid = data.psi.grid.clone();
    let it = Integrator::new(rep.clone(), grid.clone(), Coupling::Full);
    let st0 = it.initial_state(data)?;
    let steps = (cfg.t_final / cfg.dt).round() as usize;
    let h = cfg.dt;
    let tb = it.tables(h);
    // free potential at the nodes
    let mut free = vec![st0.free_ax.clone()];
    let (mut a, mut ad) = (st0.free_ax.clone(), st0.free_ax_dot.clone());
    let zero = Field::vector(&grid, Domain::Space, Repr::Fourier);
    for _ in 0..steps {
        wave_advance(&mut a, &mut ad, &zero, &zero, h, &tb.wave_full)?;
        free.push(a.clone());
    }
    // the zeroth iterate vanishes, so A¹ = A^free
    let zero_psi = Field::spinor(&grid, rep.n, Domain::Space, Repr::Fourier);
    let mut psi: Trajectory = vec![[zero_psi.clone(), zero_psi]; steps + 1];
    let start = [st0.plus.clone(), st0.minus.clone()];
    let data_norm = st0.psi().norm_l2();
    let mut distances = Vec::new();
    let mut inner_iterations = Vec::new();
    for _ in 0..cfg.iterations {
        let mut a0 = Vec::with_capacity(psi.len());
        let mut sources = Vec::with_capacity(psi.len());
        for pair in &psi {
            let (j0, jx) = currents(rep, &pair[0].add(&pair[1])?)?;
            a0.push(a0_from_density(&j0)?.0);
            sources.push(leray(&jx)?.into_repr(Repr::Fourier));
        }
        let nl = build_ax_from_sources(&sources, h)?;
        let ax: Vec<Field> = free.iter().zip(&nl).map(|(f, n)| f.add(n)).collect::<Result<_>>()?;
        let (next, count) = solve_linear(&it, &start, &a0, &ax, cfg)?;
        inner_iterations.push(count);
        let mut dist = 0.0f64;
        for (x, y) in next.iter().zip(&psi) {
            let d2 = x[0].sub(&y[0])?.norm_l2().powi(2) + x[1].sub(&y[1])?.norm_l2().powi(2);
            dist = dist.max(d2.sqrt());
        }
        distances.push(dist);
        psi = next;
        if dist <= cfg.floor * data_norm {
            break;
        }
    }
    let ratios = distances.windows(2).map(|w| w[1] / w[0]).collect();
    Ok(PicardReport { distances, ratios, inner_iterations, norm: "sup_t L2_x of (Pi_+ psi, Pi_- psi)" })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clifford::build_gamma_rep;
    use std::f64::consts::PI;

    #[test]
    fn zero_data_stays_zero() {
        let rep = build_gamma_rep(2).unwrap();
        let g = Grid::new(2, 8, 2.0 * PI).unwrap();
        let data = make_data(&rep, &g, &DataParams { family: DataFamily::Zero, ..Default::default() }).unwrap();
        let (rep_out, st) = run(&rep, &data, &RunConfig { dt: 0.1, t_final: 0.5, report_every: 1, ..Default::default() }).unwrap();
        assert_eq!(st.charge(), 0.0);
        assert!(rep_out.rows.iter().all(|r| r.charge == 0.0 && r.ax_max == 0.0));
    }

    #[test]
    fn coulombize_kills_gradients() {
        let g = Grid::new(3, 8, 2.0 * PI).unwrap();
        let s = Field::from_fn(&g, Kind::Scalar, 1, Domain::Space, |x, _| vec![C64::new((x[0] + x[1]).sin() + x[2].cos(), 0.0)]);
        let grad = gradient(&s).unwrap();
        let c = coulombize(&grad, &grad).unwrap();
        assert!(c.ax.norm_l2() < 1e-13 * grad.norm_l2());
        assert!(gradient(&c.chi).unwrap().rel_dist(&grad).unwrap() < 1e-13);
    }

    #[test]
    fn free_flow_is_exact() {
        let rep = build_gamma_rep(2).unwrap();
        let g = Grid::new(2, 16, 4.0 * PI).unwrap();
        let data = make_data(&rep, &g, &DataParams::default()).unwrap();
        assert!(free_flow_defect(&rep, &data, 0.1, 20).unwrap() < 1e-12);
    }
}
