//! Gamma and alpha matrices, half-wave projectors and the pointwise spinor
//! identities they satisfy.
//!
//! Metric signature is (-, +, ..., +). The representation is built from
//! Hermitian anticommuting generators e_0..e_d (tensor products of Pauli
//! matrices) by γ⁰ = e_0 and γʲ = i e_j, so that
//! ½(γᵘγᵛ + γᵛγᵘ) = -ηᵘᵛ I and (γᵘ)† = γ⁰γᵘγ⁰.

use crate::error::{Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::Serialize;

pub type CMat = DMatrix<C64>;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

fn pauli(k: usize) -> CMat {
    match k {
        1 => CMat::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
        2 => CMat::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]),
        3 => CMat::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]),
        _ => CMat::identity(2, 2),
    }
}

fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// 2p+1 Hermitian, pairwise anticommuting 2^p × 2^p matrices.
///
/// S(1) = [σ1, σ2, σ3]; S(p+1) = [σ2 ⊗ s for s in S(p)] ++ [σ1 ⊗ I, σ3 ⊗ I].
fn euclidean_generators(p: usize) -> Vec<CMat> {
    if p == 1 {
        return vec![pauli(1), pauli(2), pauli(3)];
    }
    let inner = euclidean_generators(p - 1);
    let id = CMat::identity(inner[0].nrows(), inner[0].ncols());
    let mut out: Vec<CMat> = inner.iter().map(|s| kron(&pauli(2), s)).collect();
    out.push(kron(&pauli(1), &id));
    out.push(kron(&pauli(3), &id));
    out
}

/// A concrete representation of the Dirac matrices in spatial dimension d.
#[derive(Clone, Debug)]
pub struct GammaRep {
    pub d: usize,
    pub n: usize,
    /// γ⁰..γᵈ
    pub gamma: Vec<CMat>,
    /// αᵘ = γ⁰γᵘ, so α⁰ = I.
    pub alpha: Vec<CMat>,
    alpha_flat: Vec<Vec<C64>>,
}

/// Result of one named identity check.
#[derive(Clone, Debug, Serialize)]
pub struct IdentityCheck {
    pub name: String,
    pub defect: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl IdentityCheck {
    pub fn new(name: impl Into<String>, defect: f64, tolerance: f64) -> Self {
        IdentityCheck {
            name: name.into(),
            defect,
            tolerance,
            passed: defect.is_finite() && defect <= tolerance,
        }
    }
}

/// Entrywise max-abs norm.
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Operator norm (largest singular value).
pub fn op_norm(m: &CMat) -> f64 {
    m.clone().singular_values().iter().cloned().fold(0.0, f64::max)
}

pub fn build_gamma_rep(d: usize) -> Result<GammaRep> {
    if !(1..=4).contains(&d) {
        return Err(Error::UnsupportedDimension(d));
    }
    let p = d.div_ceil(2);
    let gens = euclidean_generators(p);
    let e0 = gens.last().unwrap().clone();
    let mut gamma = vec![e0];
    for g in gens.iter().take(d) {
        gamma.push(g * I);
    }
    Ok(GammaRep::from_gamma(d, gamma))
}

impl GammaRep {
    fn from_gamma(d: usize, gamma: Vec<CMat>) -> Self {
        let n = gamma[0].nrows();
        let alpha: Vec<CMat> = gamma.iter().map(|g| &gamma[0] * g).collect();
        let alpha_flat = alpha
            .iter()
            .map(|a| {
                let mut v = Vec::with_capacity(n * n);
                for r in 0..n {
                    for c in 0..n {
                        v.push(a[(r, c)]);
                    }
                }
                v
            })
            .collect();
        GammaRep { d, n, gamma, alpha, alpha_flat }
    }

    /// Copy with the sign of one nonzero entry of γ¹ flipped. Used as a
    /// negative control for the identity suite.
    pub fn with_corrupted_gamma(&self) -> Self {
        let mut gamma = self.gamma.clone();
        let g = &mut gamma[1];
        let pos = g.iter().position(|z| z.norm() > 0.5).unwrap();
        g[pos] = -g[pos];
        GammaRep::from_gamma(self.d, gamma)
    }

    /// Minkowski metric entry ηᵘᵛ.
    pub fn eta(mu: usize, nu: usize) -> f64 {
        match (mu, nu) {
            (0, 0) => -1.0,
            (a, b) if a == b => 1.0,
            _ => 0.0,
        }
    }

    /// out = αʲ v.
    #[inline]
    pub fn apply_alpha(&self, j: usize, v: &[C64], out: &mut [C64]) {
        let a = &self.alpha_flat[j];
        let n = self.n;
        for r in 0..n {
            let mut acc = ZERO;
            for c in 0..n {
                acc += a[r * n + c] * v[c];
            }
            out[r] = acc;
        }
    }

    /// out = (Σⱼ cⱼ αʲ) v for real coefficients c (j = 1..d).
    #[inline]
    pub fn apply_alpha_dot(&self, c: &[f64], v: &[C64], out: &mut [C64]) {
        let n = self.n;
        for o in out.iter_mut().take(n) {
            *o = ZERO;
        }
        for (j, &cj) in c.iter().enumerate() {
            if cj == 0.0 {
                continue;
            }
            let a = &self.alpha_flat[j + 1];
            for r in 0..n {
                let mut acc = ZERO;
                for col in 0..n {
                    acc += a[r * n + col] * v[col];
                }
                out[r] += acc * cj;
            }
        }
    }

    /// out = Π_s(ξ) v = ½(v - s αʲξⱼ/|ξ| v). ξ must be nonzero.
    #[inline]
    pub fn apply_pi(&self, xi: &[f64], s: f64, v: &[C64], out: &mut [C64]) {
        let norm = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
        let mut unit = [0.0; 4];
        for (u, x) in unit.iter_mut().zip(xi) {
            *u = x / norm;
        }
        let mut tmp = [ZERO; 4];
        self.apply_alpha_dot(&unit[..xi.len()], v, &mut tmp);
        for r in 0..self.n {
            out[r] = (v[r] - tmp[r] * s) * 0.5;
        }
    }

    /// Runs every exact identity on the representation itself.
    pub fn check_invariants(&self) -> Vec<IdentityCheck> {
        let n = self.n;
        let id = CMat::identity(n, n);
        let expected_n = 1usize << self.d.div_ceil(2);
        let mut out = vec![IdentityCheck::new(
            "spinor rank N = 2^floor((d+1)/2)",
            (n as f64 - expected_n as f64).abs(),
            0.0,
        )];
        let mut anti = 0.0f64;
        let mut conj = 0.0f64;
        let mut alpha_anti = 0.0f64;
        let mut herm = 0.0f64;
        for mu in 0..=self.d {
            for nu in 0..=self.d {
                let s = (&self.gamma[mu] * &self.gamma[nu] + &self.gamma[nu] * &self.gamma[mu]) * C64::new(0.5, 0.0);
                anti = anti.max(max_abs(&(s + &id * C64::new(Self::eta(mu, nu), 0.0))));
                if mu > 0 && nu > 0 {
                    let a = (&self.alpha[mu] * &self.alpha[nu] + &self.alpha[nu] * &self.alpha[mu]) * C64::new(0.5, 0.0);
                    let delta = if mu == nu { 1.0 } else { 0.0 };
                    alpha_anti = alpha_anti.max(max_abs(&(a - &id * C64::new(delta, 0.0))));
                }
            }
            let c = &self.gamma[0] * &self.gamma[mu] * &self.gamma[0];
            conj = conj.max(max_abs(&(self.gamma[mu].adjoint() - c)));
            herm = herm.max(max_abs(&(self.alpha[mu].adjoint() - &self.alpha[mu])));
        }
        out.push(IdentityCheck::new("gamma anticommutation", anti, 0.0));
        out.push(IdentityCheck::new("gamma conjugation", conj, 0.0));
        out.push(IdentityCheck::new("alpha^0 = I", max_abs(&(&self.alpha[0] - &id)), 0.0));
        out.push(IdentityCheck::new("alpha Hermitian", herm, 0.0));
        out.push(IdentityCheck::new("alpha anticommutation", alpha_anti, 0.0));
        out
    }

    /// Exact printable table of all γᵘ (entries 0, ±1, ±i).
    pub fn to_table(&self) -> String {
        let fmt = |z: &C64| -> String {
            match (z.re.round() as i64, z.im.round() as i64) {
                (0, 0) => "0".into(),
                (r, 0) => format!("{r}"),
                (0, 1) => "i".into(),
                (0, -1) => "-i".into(),
                (r, m) => format!("{r}{m:+}i"),
            }
        };
        let mut s = String::new();
        for (mu, g) in self.gamma.iter().enumerate() {
            s.push_str(&format!("gamma^{mu} =\n"));
            for r in 0..self.n {
                let row: Vec<String> = (0..self.n).map(|c| format!("{:>3}", fmt(&g[(r, c)]))).collect();
                s.push_str(&format!("  [{} ]\n", row.join("")));
            }
        }
        s
    }
}

/// Half-wave projector Π_s(ξ) = Π(sξ) with its defining data.
#[derive(Clone, Debug)]
pub struct Projector {
    pub matrix: CMat,
    pub direction: Vec<f64>,
    pub sign: f64,
}

/// Π_s(ξ) = ½(I - s αʲξⱼ/|ξ|).
pub fn pi_projector(rep: &GammaRep, xi: &[f64], s: f64) -> Result<Projector> {
    let norm = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::ZeroFrequency);
    }
    if xi.len() != rep.d {
        return Err(Error::Shape(format!("frequency has {} components, rep has d = {}", xi.len(), rep.d)));
    }
    let direction: Vec<f64> = xi.iter().map(|x| x / norm).collect();
    let mut m = CMat::identity(rep.n, rep.n);
    for (j, w) in direction.iter().enumerate() {
        m -= &rep.alpha[j + 1] * C64::new(s * w, 0.0);
    }
    Ok(Projector { matrix: m * C64::new(0.5, 0.0), direction, sign: s })
}

/// αʲΠ_s(ξ) + s(ξⱼ/|ξ|)I - Π_{-s}(ξ)αʲ, which vanishes identically.
pub fn commutation_defect(rep: &GammaRep, xi: &[f64], j: usize, s: f64) -> Result<CMat> {
    riesz_signed_defect(rep, xi, j, s, s)
}

/// Same as [`commutation_defect`] but with an independent sign on the Riesz
/// term; `riesz_sign = -s` gives the nonzero sanity variant.
pub fn riesz_signed_defect(rep: &GammaRep, xi: &[f64], j: usize, s: f64, riesz_sign: f64) -> Result<CMat> {
    let p = pi_projector(rep, xi, s)?;
    let m = pi_projector(rep, xi, -s)?;
    let id = CMat::identity(rep.n, rep.n);
    let aj = &rep.alpha[j];
    Ok(aj * &p.matrix + id * C64::new(riesz_sign * p.direction[j - 1], 0.0) - &m.matrix * aj)
}

/// Unsigned angle between two nonzero vectors, accurate for small angles.
pub fn angle(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    // |a ∧ b|² = Σ_{i<j} (a_i b_j - a_j b_i)²
    let mut wedge2 = 0.0;
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            let w = a[i] * b[j] - a[j] * b[i];
            wedge2 += w * w;
        }
    }
    wedge2.sqrt().atan2(dot)
}

/// ‖Π(ξ)Π(-η)‖_op / ∠(ξ, η).
pub fn spinor_null_ratio(rep: &GammaRep, xi: &[f64], eta: &[f64]) -> Result<f64> {
    let theta = angle(xi, eta);
    if theta == 0.0 {
        return Err(Error::ZeroFrequency);
    }
    Ok(spinor_null_norm(rep, xi, eta)? / theta)
}

/// ‖Π(ξ)Π(-η)‖_op.
pub fn spinor_null_norm(rep: &GammaRep, xi: &[f64], eta: &[f64]) -> Result<f64> {
    let neg: Vec<f64> = eta.iter().map(|x| -x).collect();
    let a = pi_projector(rep, xi, 1.0)?;
    let b = pi_projector(rep, &neg, 1.0)?;
    Ok(op_norm(&(a.matrix * b.matrix)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranks_match_formula() {
        for (d, n) in [(1, 2), (2, 2), (3, 4), (4, 4)] {
            assert_eq!(build_gamma_rep(d).unwrap().n, n);
        }
        assert!(build_gamma_rep(5).is_err());
        assert!(build_gamma_rep(0).is_err());
    }

    #[test]
    fn invariants_exact() {
        for d in 1..=4 {
            let rep = build_gamma_rep(d).unwrap();
            for c in rep.check_invariants() {
                assert!(c.passed, "d={d} {}: {}", c.name, c.defect);
            }
        }
    }

    #[test]
    fn corrupted_rep_is_caught() {
        let rep = build_gamma_rep(4).unwrap().with_corrupted_gamma();
        let failed: Vec<_> = rep.check_invariants().into_iter().filter(|c| !c.passed).collect();
        assert!(failed.iter().any(|c| c.name == "gamma anticommutation"));
    }

    #[test]
    fn dirac_representation_in_three_dimensions() {
        let rep = build_gamma_rep(3).unwrap();
        // γ⁰ = diag(1, 1, -1, -1)
        for r in 0..4 {
            let want = if r < 2 { 1.0 } else { -1.0 };
            assert_eq!(rep.gamma[0][(r, r)], C64::new(want, 0.0));
        }
        // γ¹γ² + γ²γ¹ = 0
        let s = &rep.gamma[1] * &rep.gamma[2] + &rep.gamma[2] * &rep.gamma[1];
        assert_eq!(max_abs(&s), 0.0);
    }

    #[test]
    fn projector_spectrum_on_axis() {
        for d in 1..=4 {
            let rep = build_gamma_rep(d).unwrap();
            let mut e1 = vec![0.0; d];
            e1[0] = 1.0;
            let p = pi_projector(&rep, &e1, 1.0).unwrap();
            let eig = p.matrix.clone().symmetric_eigen().eigenvalues;
            let mut ev: Vec<f64> = eig.iter().cloned().collect();
            ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for (i, e) in ev.iter().enumerate() {
                let want = if i < rep.n / 2 { 0.0 } else { 1.0 };
                assert!((e - want).abs() < 1e-14, "d={d}: {ev:?}");
            }
        }
    }

    #[test]
    fn zero_frequency_rejected() {
        let rep = build_gamma_rep(2).unwrap();
        assert!(matches!(pi_projector(&rep, &[0.0, 0.0], 1.0), Err(Error::ZeroFrequency)));
    }

    #[test]
    fn flipped_riesz_sign_gives_nonzero_defect() {
        let rep = build_gamma_rep(3).unwrap();
        let xi = [0.3, -1.2, 0.7];
        let norm = (0.09f64 + 1.44 + 0.49).sqrt();
        for j in 1..=3 {
            let m = riesz_signed_defect(&rep, &xi, j, 1.0, -1.0).unwrap();
            let want = 2.0 * xi[j - 1].abs() / norm;
            assert!((op_norm(&m) - want).abs() < 1e-13);
        }
    }

    #[test]
    fn fast_projector_matches_dense() {
        let rep = build_gamma_rep(4).unwrap();
        let xi = [0.4, -0.1, 2.0, 0.3];
        let v = [C64::new(1.0, 0.5), C64::new(-0.2, 0.1), C64::new(0.0, 1.0), C64::new(0.7, -0.3)];
        for s in [1.0, -1.0] {
            let p = pi_projector(&rep, &xi, s).unwrap();
            let mut out = [ZERO; 4];
            rep.apply_pi(&xi, s, &v, &mut out);
            let dense = &p.matrix * nalgebra::DVector::from_row_slice(&v);
            for r in 0..4 {
                assert!((dense[r] - out[r]).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn parallel_inputs_have_zero_null_norm() {
        let rep = build_gamma_rep(4).unwrap();
        let xi = [1.0, 2.0, -0.5, 0.25];
        let eta: Vec<f64> = xi.iter().map(|x| 3.0 * x).collect();
        assert!(spinor_null_norm(&rep, &xi, &eta).unwrap() < 1e-15);
    }

    #[test]
    fn table_is_exact() {
        let t = build_gamma_rep(2).unwrap().to_table();
        assert!(t.contains("gamma^2"));
        assert!(t.contains('i'));
    }
}
