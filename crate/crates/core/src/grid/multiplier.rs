//! Fourier multipliers: dyadic shells, modulation, caps, boxes, Riesz
//! transforms and the elliptic operators.

use super::bump;
use super::caps::{BoxFamily, CapSet};
use super::field::{Domain, Field, Kind, Mode, Repr};
use crate::error::{Error, Result};
use num_complex::Complex64 as C64;
use std::sync::Arc;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Which cone sheet a modulation multiplier measures distance to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModSign {
    /// |τ - |ξ||
    Plus,
    /// |-τ - |ξ||
    Minus,
    /// ||τ| - |ξ||
    TwoSided,
}

impl ModSign {
    pub fn distance(self, tau: f64, abs: f64) -> f64 {
        match self {
            ModSign::Plus => (tau - abs).abs(),
            ModSign::Minus => (-tau - abs).abs(),
            ModSign::TwoSided => (tau.abs() - abs).abs(),
        }
    }
}

/// Scalar Fourier multiplier together with its support descriptor.
#[derive(Clone, Debug)]
pub enum Multiplier {
    /// P_k: χ(|ξ|/2^k)
    Shell(i32),
    /// P_{<k}
    Below(i32),
    /// P_{≥k} = I - P_{<k}
    AtLeast(i32),
    /// Q_j (or Q_{<j} when `below`) on space-time blocks.
    Modulation { j: i32, sign: ModSign, below: bool },
    /// R_μ = D_μ/|D|; μ = 0 uses τ on space-time blocks.
    Riesz(usize),
    AbsD,
    AbsDInv,
    /// Δ⁻¹ with symbol -1/|ξ|².
    InvLaplacian,
    Laplacian,
    /// ∂ⱼ (symbol iξⱼ), j = 1..d.
    Partial(usize),
    /// ∂ₜ (symbol iτ) on space-time blocks.
    PartialT,
    Cap { caps: Arc<CapSet>, index: usize },
    Box { family: Arc<BoxFamily>, index: usize },
    Product(Vec<Multiplier>),
}

impl Multiplier {
    /// True for operators whose symbol is singular at ξ = 0.
    pub fn is_inverse(&self) -> bool {
        match self {
            Multiplier::AbsDInv | Multiplier::InvLaplacian => true,
            Multiplier::Product(v) => v.iter().any(|m| m.is_inverse()),
            _ => false,
        }
    }

    /// Symbol value at a mode.
    pub fn symbol(&self, m: &Mode) -> C64 {
        let re = |x: f64| C64::new(x, 0.0);
        match self {
            Multiplier::Shell(k) => re(if m.abs == 0.0 { 0.0 } else { bump::shell(m.abs, *k) }),
            Multiplier::Below(k) => re(bump::below(m.abs, *k)),
            Multiplier::AtLeast(k) => re(1.0 - bump::below(m.abs, *k)),
            Multiplier::Modulation { j, sign, below } => {
                let tau = m.tau.expect("modulation multipliers need a fully transformed space-time field");
                let dist = sign.distance(tau, m.abs);
                re(if *below {
                    bump::below(dist, *j)
                } else if dist == 0.0 {
                    0.0
                } else {
                    bump::shell(dist, *j)
                })
            }
            Multiplier::Riesz(mu) => {
                if m.abs == 0.0 {
                    ZERO
                } else if *mu == 0 {
                    re(m.tau.expect("R_0 needs a fully transformed space-time field") / m.abs)
                } else {
                    re(m.xi[mu - 1] / m.abs)
                }
            }
            Multiplier::AbsD => re(m.abs),
            Multiplier::AbsDInv => re(if m.abs == 0.0 { 0.0 } else { 1.0 / m.abs }),
            Multiplier::InvLaplacian => re(if m.abs == 0.0 { 0.0 } else { -1.0 / (m.abs * m.abs) }),
            Multiplier::Laplacian => re(-m.abs * m.abs),
            Multiplier::Partial(j) => C64::new(0.0, m.xi[j - 1]),
            Multiplier::PartialT => C64::new(0.0, m.tau.expect("∂t needs a fully transformed space-time field")),
            Multiplier::Cap { caps, index } => {
                if m.abs == 0.0 {
                    ZERO
                } else {
                    re(caps.weight(*index, m.xi, m.abs))
                }
            }
            Multiplier::Box { family, index } => re(family.symbol(*index, m.xi, m.abs)),
            Multiplier::Product(v) => v.iter().fold(C64::new(1.0, 0.0), |acc, x| acc * x.symbol(m)),
        }
    }

    fn needs_tau(&self) -> bool {
        match self {
            Multiplier::Modulation { .. } | Multiplier::PartialT => true,
            Multiplier::Riesz(0) => true,
            Multiplier::Product(v) => v.iter().any(|m| m.needs_tau()),
            _ => false,
        }
    }

    /// Applies the multiplier, returning a field in the input's representation.
    pub fn apply(&self, f: &Field) -> Result<Field> {
        if self.needs_tau() && f.domain != Domain::SpaceTime {
            return Err(Error::NoTimeAxis);
        }
        if self.is_inverse() {
            f.require_mean_zero("inverse multiplier")?;
        }
        let work = if self.needs_tau() || f.domain == Domain::Space || f.repr == Repr::Fourier {
            Repr::Fourier
        } else {
            Repr::Mixed
        };
        let g = f.to_repr(work);
        Ok(g.apply_symbol(|m| self.symbol(m)).into_repr(f.repr))
    }
}

pub fn lp_project(f: &Field, k: i32) -> Result<Field> {
    Multiplier::Shell(k).apply(f)
}

pub fn riesz(f: &Field, mu: usize) -> Result<Field> {
    Multiplier::Riesz(mu).apply(f)
}

pub fn abs_d(f: &Field) -> Result<Field> {
    Multiplier::AbsD.apply(f)
}

pub fn abs_d_inv(f: &Field) -> Result<Field> {
    Multiplier::AbsDInv.apply(f)
}

pub fn inv_laplacian(f: &Field) -> Result<Field> {
    Multiplier::InvLaplacian.apply(f)
}

pub fn modulation_project(f: &Field, j: i32, sign: ModSign, below: bool) -> Result<Field> {
    Multiplier::Modulation { j, sign, below }.apply(f)
}

fn spatial_work(f: &Field) -> Repr {
    match (f.domain, f.repr) {
        (Domain::Space, _) => Repr::Fourier,
        (_, Repr::Fourier) => Repr::Fourier,
        _ => Repr::Mixed,
    }
}

/// Leray projection P_{jl} = δ_{jl} - ξⱼξₗ/|ξ|², identity on the zero mode.
pub fn leray(v: &Field) -> Result<Field> {
    let d = v.grid.d;
    if v.ncomp() != d {
        return Err(Error::Shape(format!("Leray needs {d} components, got {}", v.ncomp())));
    }
    let g = v.to_repr(spatial_work(v));
    let out = g.map_modes(Kind::Vector, d, |m, inp, out| {
        if m.abs == 0.0 {
            out.copy_from_slice(inp);
            return;
        }
        let mut dot = ZERO;
        for l in 0..d {
            dot += inp[l] * m.xi[l];
        }
        let s = dot / (m.abs * m.abs);
        for j in 0..d {
            out[j] = inp[j] - s * m.xi[j];
        }
    });
    Ok(out.into_repr(v.repr))
}

/// div v = Σ ∂ⱼvⱼ.
pub fn divergence(v: &Field) -> Result<Field> {
    let d = v.grid.d;
    if v.ncomp() != d {
        return Err(Error::Shape(format!("divergence needs {d} components")));
    }
    let g = v.to_repr(spatial_work(v));
    let out = g.map_modes(Kind::Scalar, 1, |m, inp, out| {
        let mut s = ZERO;
        for j in 0..d {
            s += inp[j] * C64::new(0.0, m.xi[j]);
        }
        out[0] = s;
    });
    Ok(out.into_repr(v.repr))
}

/// ∇g as a vector field.
pub fn gradient(g: &Field) -> Result<Field> {
    let d = g.grid.d;
    let w = g.to_repr(spatial_work(g));
    let out = w.map_modes(Kind::Vector, d, |m, inp, out| {
        for j in 0..d {
            out[j] = inp[0] * C64::new(0.0, m.xi[j]);
        }
    });
    Ok(out.into_repr(g.repr))
}

/// Applies a spatial scalar symbol to a field of any kind.
pub fn apply_spatial<F>(f: &Field, sym: F) -> Field
where
    F: Fn(&Mode) -> C64 + Sync + Send,
{
    let w = f.to_repr(spatial_work(f));
    w.apply_symbol(sym).into_repr(f.repr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use std::f64::consts::PI;

    #[test]
    fn shell_keeps_plane_wave_at_center() {
        let g = Grid::new(2, 32, 2.0 * PI).unwrap();
        let f = Field::from_fn(&g, Kind::Scalar, 1, Domain::Space, |x, _| vec![C64::from_polar(1.0, 4.0 * x[0])]);
        let p = lp_project(&f, 2).unwrap();
        assert!(p.rel_dist(&f).unwrap() < 1e-14);
        let far = lp_project(&f, -1).unwrap();
        assert!(far.norm_l2() < 1e-14);
    }

    #[test]
    fn modulation_passes_forward_wave() {
        let g = Grid::with_time(1, 16, 2.0 * PI, 16, 2.0 * PI).unwrap();
        let f = Field::from_fn(&g, Kind::Scalar, 1, Domain::SpaceTime, |x, t| vec![C64::from_polar(1.0, 3.0 * x[0] + 3.0 * t)]);
        let q = modulation_project(&f, -2, ModSign::Plus, true).unwrap();
        assert!(q.rel_dist(&f).unwrap() < 1e-13);
        // |−τ − |ξ|| = 6 on this wave, so only Q⁻_j with 2^j ≈ 6 sees it.
        assert!(modulation_project(&f, 0, ModSign::Minus, false).unwrap().norm_l2() < 1e-14);
        let hit: f64 = (1..5).map(|j| modulation_project(&f, j, ModSign::Minus, false).unwrap().norm_l2()).sum();
        assert!((hit - f.norm_l2()).abs() < 1e-12);
    }

    #[test]
    fn gradient_is_killed_by_leray() {
        let g = Grid::new(3, 8, 2.0 * PI).unwrap();
        let s = Field::from_fn(&g, Kind::Scalar, 1, Domain::Space, |x, _| vec![C64::new((x[0] + 2.0 * x[2]).sin() * x[1].cos(), 0.0)]);
        let gr = gradient(&s).unwrap();
        assert!(gr.norm_l2() > 1.0);
        assert!(leray(&gr).unwrap().norm_l2() < 1e-13 * gr.norm_l2());
    }

    #[test]
    fn inverse_needs_mean_zero() {
        let g = Grid::new(1, 8, 1.0).unwrap();
        let f = Field::from_fn(&g, Kind::Scalar, 1, Domain::Space, |_, _| vec![C64::new(1.0, 0.0)]);
        assert!(matches!(abs_d_inv(&f), Err(Error::NonzeroMean { .. })));
        assert!(abs_d(&f).is_ok());
    }
}
