//! Exact identity suites shared by the CLI and the acceptance tests.

use crate::clifford::{build_gamma_rep, commutation_defect, max_abs, pi_projector, CMat, GammaRep, IdentityCheck};
use crate::error::Result;
use crate::grid::multiplier::{divergence, leray};
use crate::grid::{CapSet, Domain, Field, Grid, Kind, Multiplier, Repr};
use crate::nonlinearity::{dirac_e, dirac_r, dirac_s, potential_times};
use crate::spinor::{alpha0_identity_defect, apply_pi, halfwave_split_defect, Sign};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::sync::Arc;

pub const SPLIT_TOL: f64 = 1e-12;
pub const SYNTHESIS_TOL: f64 = 1e-10;
pub const COVOP_TOL: f64 = 1e-9;
pub const PARTITION_TOL: f64 = 1e-10;
/// Π identities involve one division by |ξ|, so they hold to rounding only.
pub const PROJECTOR_TOL: f64 = 1e-14;

fn random_field(grid: &Arc<Grid>, kind: Kind, ncomp: usize, domain: Domain, rng: &mut ChaCha8Rng) -> Field {
    let mut f = Field::zeros(grid, kind, ncomp, domain, Repr::Fourier);
    for c in f.comps.iter_mut() {
        for z in c.iter_mut() {
            *z = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        }
    }
    // Nyquist modes are not represented
    let nsp = grid.nsp();
    for c in f.comps.iter_mut() {
        for (i, z) in c.iter_mut().enumerate() {
            if grid.is_nyquist(i % nsp) {
                *z = C64::new(0.0, 0.0);
            }
        }
    }
    f.remove_mean();
    f
}

/// Real-valued random vector field (a real potential).
fn random_real_vector(grid: &Arc<Grid>, rng: &mut ChaCha8Rng) -> Field {
    let mut p = random_field(grid, Kind::Vector, grid.d, Domain::Space, rng).physical();
    for c in p.comps.iter_mut() {
        for z in c.iter_mut() {
            z.im = 0.0;
        }
    }
    p.into_repr(Repr::Fourier)
}

fn random_direction(d: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        if v.iter().map(|x| x * x).sum::<f64>() > 1e-4 {
            return v;
        }
    }
}

fn projector_checks(rep: &GammaRep, rng: &mut ChaCha8Rng, samples: usize) -> Result<Vec<IdentityCheck>> {
    let n = rep.n;
    let id = CMat::identity(n, n);
    let (mut idem, mut sum, mut ortho, mut herm, mut comm) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..samples {
        let xi = random_direction(rep.d, rng);
        let p = pi_projector(rep, &xi, 1.0)?.matrix;
        let m = pi_projector(rep, &xi, -1.0)?.matrix;
        idem = idem.max(max_abs(&(&p * &p - &p))).max(max_abs(&(&m * &m - &m)));
        sum = sum.max(max_abs(&(&p + &m - &id)));
        ortho = ortho.max(max_abs(&(&p * &m)));
        herm = herm.max(max_abs(&(p.adjoint() - &p)));
        for j in 1..=rep.d {
            for s in [1.0, -1.0] {
                comm = comm.max(max_abs(&commutation_defect(rep, &xi, j, s)?));
            }
        }
    }
    Ok(vec![
        IdentityCheck::new("Pi_s^2 = Pi_s", idem, PROJECTOR_TOL),
        IdentityCheck::new("Pi_+ + Pi_- = I", sum, PROJECTOR_TOL),
        IdentityCheck::new("Pi_+ Pi_- = 0", ortho, PROJECTOR_TOL),
        IdentityCheck::new("Pi_s Hermitian", herm, PROJECTOR_TOL),
        IdentityCheck::new("commutation_defect", comm, 0.0),
    ])
}

/// Small grid sizes keep the d = 4 suite fast.
fn suite_sizes(d: usize) -> (usize, usize) {
    match d {
        4 => (8, 8),
        3 => (16, 8),
        _ => (16, 16),
    }
}

/// Every exact algebraic identity of the spinor calculus in dimension d.
pub fn algebra_suite(d: usize, seed: u64) -> Result<Vec<IdentityCheck>> {
    let rep = build_gamma_rep(d)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = rep.check_invariants();
    out.extend(projector_checks(&rep, &mut rng, 256)?);

    let (n, nt) = suite_sizes(d);
    let st = Grid::with_time(d, n, 2.0 * PI, nt, 2.0 * PI)?;
    let psi_st = random_field(&st, Kind::Spinor, rep.n, Domain::SpaceTime, &mut rng);
    let scale = psi_st.norm_l2();
    out.push(IdentityCheck::new("half-wave split", halfwave_split_defect(&rep, &psi_st)? / scale, SPLIT_TOL));
    // α⁰ = I acting on a single half-wave
    let mut a0_defect = 0.0f64;
    for s in Sign::BOTH {
        let half = apply_pi(&rep, &psi_st, s)?;
        a0_defect = a0_defect.max(alpha0_identity_defect(&half, s)? / scale);
    }
    out.push(IdentityCheck::new("alpha^0 via R^0 and half-wave operator", a0_defect, SPLIT_TOL));

    let g = Grid::new(d, n, 2.0 * PI)?;
    let psi = random_field(&g, Kind::Spinor, rep.n, Domain::Space, &mut rng);
    let ax = leray(&random_real_vector(&g, &mut rng))?;
    let a0 = random_field(&g, Kind::Scalar, 1, Domain::Space, &mut rng);
    let halves: Vec<Field> = Sign::BOTH.iter().map(|&s| apply_pi(&rep, &psi, s)).collect::<Result<_>>()?;
    let mut local = 0.0f64;
    for (k, &s) in Sign::BOTH.iter().enumerate() {
        let lhs = dirac_r(&ax, &halves[k])?.scale_re(-s.value()).add(&dirac_s(&rep, &ax, &halves[k], s)?)?;
        let rhs = potential_times(&rep, &a0.zeros_like(), &ax, &halves[k])?;
        local = local.max(lhs.rel_dist(&rhs)?);
    }
    out.push(IdentityCheck::new("-s' N^R + N^S_s' = A_j alpha^j psi_s'", local, SYNTHESIS_TOL));
    let full = potential_times(&rep, &a0, &ax, &psi)?;
    let mut synth = 0.0f64;
    for s in Sign::BOTH {
        let mut acc: Option<Field> = None;
        for (k, &sp) in Sign::BOTH.iter().enumerate() {
            let term = dirac_e(&a0, &halves[k])?
                .add(&dirac_r(&ax, &halves[k])?.scale_re(-sp.value()))?
                .add(&dirac_s(&rep, &ax, &halves[k], sp)?)?;
            acc = Some(match acc {
                None => term,
                Some(a) => a.add(&term)?,
            });
        }
        let lhs = apply_pi(&rep, &acc.unwrap(), s)?;
        let rhs = apply_pi(&rep, &full, s)?;
        synth = synth.max(lhs.rel_dist(&rhs)?);
    }
    out.push(IdentityCheck::new("sum over s' re-synthesizes Pi_s(alpha^mu A_mu psi)", synth, SYNTHESIS_TOL));

    // the frequency-localized potential needs lattice modes below 2^{-C}
    let cst = Grid::with_time(d, n.min(8), 16.0 * PI, 8, 2.0 * PI)?;
    let a_st = random_field(&cst, Kind::Vector, d, Domain::SpaceTime, &mut rng);
    let phi_st = random_field(&cst, Kind::Scalar, 1, Domain::SpaceTime, &mut rng);
    let c = crate::parametrix::PhaseParams::default().c;
    out.push(IdentityCheck::new("covariant operator reduction", crate::parametrix::covopreduction_defect(&a_st, &phi_st, c)?, COVOP_TOL));
    Ok(out)
}

/// Partitions of unity and projector identities on an n^d lattice.
pub fn partition_suite(d: usize, n: usize, seed: u64) -> Result<Vec<IdentityCheck>> {
    let g = Grid::new(d, n, 2.0 * PI)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f = random_field(&g, Kind::Scalar, 1, Domain::Space, &mut rng);
    let (lo, hi) = g.shell_range();
    let mut sum = f.zeros_like();
    for k in lo..=hi {
        sum = sum.add(&Multiplier::Shell(k).apply(&f)?)?;
    }
    let mut out = vec![IdentityCheck::new("sum_k P_k = I", sum.rel_dist(&f)?, PARTITION_TOL)];

    let mut caps_defect = 0.0f64;
    for ell in [-1, -2] {
        let caps = CapSet::new(d, ell);
        let worst = crate::par::map_range(g.nsp(), |i| {
            let a = g.abs_xi(i);
            if a == 0.0 || g.is_nyquist(i) {
                return 0.0;
            }
            (caps.weights(g.xi(i), a).iter().sum::<f64>() - 1.0).abs()
        });
        caps_defect = worst.into_iter().fold(caps_defect, f64::max);
    }
    out.push(IdentityCheck::new("sum caps = I", caps_defect, PARTITION_TOL));

    let v = random_field(&g, Kind::Vector, d, Domain::Space, &mut rng);
    let div = divergence(&leray(&v)?)?.norm_l2() / v.norm_l2();
    out.push(IdentityCheck::new("div Leray = 0", div, PARTITION_TOL));

    let mut rr = f.zeros_like();
    for j in 1..=d {
        rr = rr.add(&Multiplier::Riesz(j).apply(&Multiplier::Riesz(j).apply(&f)?)?)?;
    }
    out.push(IdentityCheck::new("sum_j R_j^2 = I", rr.rel_dist(&f)?, PARTITION_TOL));
    Ok(out)
}

pub fn all_passed(checks: &[IdentityCheck]) -> bool {
    checks.iter().all(|c| c.passed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suites_pass_in_two_dimensions() {
        let a = algebra_suite(2, 1).unwrap();
        for c in &a {
            assert!(c.passed, "{c:?}");
        }
        let p = partition_suite(2, 16, 1).unwrap();
        for c in &p {
            assert!(c.passed, "{c:?}");
        }
    }

    #[test]
    fn corrupted_representation_fails() {
        let rep = build_gamma_rep(3).unwrap().with_corrupted_gamma();
        assert!(!all_passed(&rep.check_invariants()));
    }
}
