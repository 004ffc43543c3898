//! Spinor fields: half-wave projections, free half-wave flows and the
//! exact space-time identities of the diagonalized Dirac operator.

use crate::clifford::GammaRep;
use crate::error::{Error, Result};
use crate::grid::{Domain, Field, Kind, Repr};
use num_complex::Complex64 as C64;

const ZERO: C64 = C64::new(0.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// Sign of a half-wave, ±1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub const BOTH: [Sign; 2] = [Sign::Plus, Sign::Minus];

    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

fn check_spinor(rep: &GammaRep, f: &Field) -> Result<()> {
    if f.ncomp() != rep.n {
        return Err(Error::Shape(format!("spinor field has {} components, representation has rank {}", f.ncomp(), rep.n)));
    }
    if f.grid.d != rep.d {
        return Err(Error::Shape(format!("grid dimension {} vs representation dimension {}", f.grid.d, rep.d)));
    }
    Ok(())
}

/// Representation in which spatial symbols can be applied.
fn spatial_work(f: &Field) -> Repr {
    match (f.domain, f.repr) {
        (Domain::Space, _) | (_, Repr::Fourier) => Repr::Fourier,
        _ => Repr::Mixed,
    }
}

/// Π_s(D)ψ. The zero mode, where the symbol is undefined, is mapped to zero.
pub fn apply_pi(rep: &GammaRep, f: &Field, s: Sign) -> Result<Field> {
    check_spinor(rep, f)?;
    let g = f.to_repr(spatial_work(f));
    let sv = s.value();
    Ok(g
        .map_modes(Kind::Spinor, rep.n, |m, inp, out| {
            if m.abs == 0.0 {
                out.fill(ZERO);
            } else {
                rep.apply_pi(m.xi, sv, inp, out);
            }
        })
        .into_repr(f.repr))
}

/// Pointwise αʲψ for j = 0..d.
pub fn apply_alpha(rep: &GammaRep, f: &Field, j: usize) -> Result<Field> {
    check_spinor(rep, f)?;
    let work = if f.repr == Repr::Physical { Repr::Physical } else { f.repr };
    let g = f.to_repr(work);
    let mut out = g.zeros_like();
    let len = g.block_len();
    let mut v = [ZERO; 4];
    let mut o = [ZERO; 4];
    for i in 0..len {
        for c in 0..rep.n {
            v[c] = g.comps[c][i];
        }
        rep.apply_alpha(j, &v[..rep.n], &mut o[..rep.n]);
        for c in 0..rep.n {
            out.comps[c][i] = o[c];
        }
    }
    Ok(out)
}

/// Free half-wave flow e^{i s t |D|} applied to a spatial field.
pub fn free_halfwave(f: &Field, s: Sign, t: f64) -> Field {
    let g = f.to_repr(Repr::Fourier);
    let sv = s.value();
    g.apply_symbol(|m| C64::from_polar(1.0, sv * t * m.abs)).into_repr(f.repr)
}

/// Discrete L² norm of αᵘ∂ᵤψ + i((i∂t + |D|)Π₊ + (i∂t − |D|)Π₋)ψ on a
/// space-time block. Both terms are formed separately from the spectral
/// data and subtracted.
pub fn halfwave_split_defect(rep: &GammaRep, psi: &Field) -> Result<f64> {
    check_spinor(rep, psi)?;
    if psi.domain != Domain::SpaceTime {
        return Err(Error::NoTimeAxis);
    }
    psi.require_mean_zero("half-wave split")?;
    let f = psi.fourier();
    let n = rep.n;
    let out = f.map_modes(Kind::Spinor, n, |m, inp, out| {
        let tau = m.tau.unwrap();
        // αᵘ∂ᵤψ: α⁰ iτ + αʲ iξⱼ
        let mut dirac = [ZERO; 4];
        let mut tmp = [ZERO; 4];
        for j in 1..=rep.d {
            rep.apply_alpha(j, inp, &mut tmp[..n]);
            for r in 0..n {
                dirac[r] += tmp[r] * I * m.xi[j - 1];
            }
        }
        for r in 0..n {
            dirac[r] += inp[r] * I * tau;
        }
        let mut split = [ZERO; 4];
        if m.abs > 0.0 {
            for (sv, wave) in [(1.0, -tau + m.abs), (-1.0, -tau - m.abs)] {
                rep.apply_pi(m.xi, sv, inp, &mut tmp[..n]);
                for r in 0..n {
                    split[r] += I * wave * tmp[r];
                }
            }
        }
        for r in 0..n {
            out[r] = dirac[r] + split[r];
        }
    });
    Ok(out.norm_l2())
}

/// Defect of α⁰ψ = (−sR⁰ + s(i∂t + s|D|)/|D|)ψ on a mean-zero space-time
/// block. The raised-index Riesz symbol is R⁰ = −τ/|ξ|.
pub fn alpha0_identity_defect(psi: &Field, s: Sign) -> Result<f64> {
    if psi.domain != Domain::SpaceTime {
        return Err(Error::NoTimeAxis);
    }
    psi.require_mean_zero("alpha0 identity")?;
    let sv = s.value();
    let f = psi.fourier();
    let rhs = f.apply_symbol(|m| {
        if m.abs == 0.0 {
            return ZERO;
        }
        let tau = m.tau.unwrap();
        let r0 = -tau / m.abs;
        C64::new(-sv * r0 + sv * (-tau + sv * m.abs) / m.abs, 0.0)
    });
    Ok(rhs.sub(&f)?.norm_l2())
}

/// Σ_s Π_sψ_s.
pub fn synthesize(rep: &GammaRep, plus: &Field, minus: &Field) -> Result<Field> {
    apply_pi(rep, plus, Sign::Plus)?.add(&apply_pi(rep, minus, Sign::Minus)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clifford::build_gamma_rep;
    use crate::grid::Grid;
    use std::f64::consts::PI;

    #[test]
    fn projections_split_mean_zero_fields() {
        let rep = build_gamma_rep(3).unwrap();
        let g = Grid::new(3, 8, 2.0 * PI).unwrap();
        let mut psi = Field::from_fn(&g, Kind::Spinor, 4, Domain::Space, |x, _| {
            (0..4).map(|c| C64::new((x[0] + c as f64).sin() * x[1].cos(), (x[2] * 2.0).cos())).collect()
        });
        psi.remove_mean();
        let p = apply_pi(&rep, &psi, Sign::Plus).unwrap();
        let m = apply_pi(&rep, &psi, Sign::Minus).unwrap();
        assert!(p.add(&m).unwrap().rel_dist(&psi).unwrap() < 1e-14);
        assert!(apply_pi(&rep, &p, Sign::Minus).unwrap().norm_l2() < 1e-14 * psi.norm_l2());
        assert!(p.inner(&m).unwrap().norm() < 1e-13);
    }

    #[test]
    fn free_halfwave_solves_dirac() {
        let rep = build_gamma_rep(2).unwrap();
        let g = Grid::with_time(2, 8, 2.0 * PI, 16, 2.0 * PI).unwrap();
        let mut data = Field::from_fn(&g, Kind::Spinor, 2, Domain::Space, |x, _| vec![C64::new(x[0].sin(), 0.0), C64::new(0.0, (x[1] - x[0]).cos())]);
        data.remove_mean();
        let plus = apply_pi(&rep, &data, Sign::Plus).unwrap();
        let slices: Vec<Field> = (0..16).map(|j| free_halfwave(&plus, Sign::Plus, g.time_at(j)).fourier()).collect();
        let psi = Field::from_slices(&g, &slices).unwrap();
        assert!(halfwave_split_defect(&rep, &psi).unwrap() < 1e-12 * psi.norm_l2());
        assert!(alpha0_identity_defect(&psi, Sign::Plus).unwrap() < 1e-12 * psi.norm_l2());
    }
}
