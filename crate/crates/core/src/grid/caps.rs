//! Angular caps on the unit sphere and the rectangular boxes C_{k'}(ℓ').

use super::bump;
use crate::par;
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use std::f64::consts::PI;

const MESH_SEED: u64 = 0x5eed_ca95;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn arc(a: &[f64], b: &[f64]) -> f64 {
    dot(a, b).clamp(-1.0, 1.0).acos()
}

/// Deterministic quasi-uniform mesh on S^{d-1}.
fn sphere_mesh(d: usize, count: usize) -> Vec<Vec<f64>> {
    match d {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..count)
            .map(|i| {
                let a = 2.0 * PI * i as f64 / count as f64;
                vec![a.cos(), a.sin()]
            })
            .collect(),
        3 => {
            // Fibonacci lattice, starting at the north pole
            let golden = PI * (3.0 - 5f64.sqrt());
            (0..count)
                .map(|i| {
                    let z = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
                    let r = (1.0 - z * z).sqrt();
                    let a = golden * i as f64;
                    vec![z, r * a.cos(), r * a.sin()]
                })
                .collect()
        }
        _ => {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(MESH_SEED);
            (0..count)
                .map(|_| {
                    let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
                    let n = dot(&v, &v).sqrt();
                    v.into_iter().map(|x| x / n).collect()
                })
                .collect()
        }
    }
}

/// Greedy farthest-point subset of `mesh` with separation about `sep`.
fn farthest_points(mesh: &[Vec<f64>], sep: f64) -> Vec<Vec<f64>> {
    let mut centers = vec![mesh[0].clone()];
    let mut dist: Vec<f64> = mesh.iter().map(|p| arc(p, &mesh[0])).collect();
    loop {
        let (far, &dmax) = dist.iter().enumerate().fold((0, &0.0), |acc, (i, d)| if *d > *acc.1 { (i, d) } else { acc });
        if dmax < sep {
            break;
        }
        let c = mesh[far].clone();
        for (d, p) in dist.iter_mut().zip(mesh) {
            *d = d.min(arc(p, &c));
        }
        centers.push(c);
    }
    centers
}

/// Smooth partition of unity on S^{d-1} subordinate to caps of radius ~2^ℓ.
#[derive(Clone, Debug)]
pub struct CapSet {
    pub d: usize,
    pub ell: i32,
    pub centers: Vec<Vec<f64>>,
    /// Raw weights equal 1 within `radius` of a center and vanish beyond 2·radius.
    pub radius: f64,
}

impl CapSet {
    /// Caps at scale ℓ ≤ 0. ℓ = 0 gives the single trivial cap.
    pub fn new(d: usize, ell: i32) -> CapSet {
        let radius = 2f64.powi(ell);
        if ell >= 0 {
            let mut c = vec![0.0; d];
            c[0] = 1.0;
            return CapSet { d, ell, centers: vec![c], radius: 2.0 * PI };
        }
        let centers = if d == 1 {
            sphere_mesh(1, 2)
        } else {
            // the mesh must be much finer than the cap radius
            let count = match d {
                2 => ((2.0 * PI / radius) * 64.0) as usize,
                3 => ((4.0 * PI / (radius * radius)) * 40.0) as usize,
                _ => ((2.0 * PI * PI / radius.powi(3)) * 12.0).min(400_000.0) as usize,
            }
            .max(512);
            farthest_points(&sphere_mesh(d, count), 0.9 * radius)
        };
        CapSet { d, ell, centers, radius }
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    fn raw(&self, i: usize, unit: &[f64]) -> f64 {
        if self.centers.len() == 1 {
            return 1.0;
        }
        if self.d == 1 {
            return if (unit[0] - self.centers[i][0]).abs() < 1e-12 { 1.0 } else { 0.0 };
        }
        bump::phi(arc(unit, &self.centers[i]) / self.radius)
    }

    /// m_i(ξ/|ξ|); Σ_i m_i = 1 for every nonzero ξ.
    pub fn weight(&self, i: usize, xi: &[f64], abs: f64) -> f64 {
        let unit: Vec<f64> = xi.iter().map(|x| x / abs).collect();
        let w = self.raw(i, &unit);
        if w == 0.0 {
            return 0.0;
        }
        let total: f64 = (0..self.len()).map(|j| self.raw(j, &unit)).sum();
        w / total
    }

    /// All weights at once, for batch projections.
    pub fn weights(&self, xi: &[f64], abs: f64) -> Vec<f64> {
        let unit: Vec<f64> = xi.iter().map(|x| x / abs).collect();
        let raw: Vec<f64> = (0..self.len()).map(|j| self.raw(j, &unit)).collect();
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|w| w / total).collect()
    }

    /// Index of the cap whose center is closest to the direction ω.
    pub fn nearest(&self, omega: &[f64]) -> usize {
        let n = dot(omega, omega).sqrt();
        let unit: Vec<f64> = omega.iter().map(|x| x / n).collect();
        let d = par::map_slice(&self.centers, |c| arc(c, &unit));
        d.iter().enumerate().fold((0, f64::INFINITY), |a, (i, &v)| if v < a.1 { (i, v) } else { a }).0
    }
}

/// Family of smooth boxes of radial side ~2^{k'} and transverse side
/// ~2^{k'+ℓ'} covering the shell |ξ| ≈ 2^k. The symbol of box (r, c) is
/// χ(|ξ|/2^k)·ρ_r(|ξ|)·m_c(ξ/|ξ|) where ρ_r is a smooth radial partition of
/// width 2^{k'} and m_c the caps at angular scale k'+ℓ'-k. For k' = k the
/// radial factor is 1, so the boxes coincide with P_k P^ω_ℓ.
#[derive(Clone, Debug)]
pub struct BoxFamily {
    pub k: i32,
    pub k_prime: i32,
    pub ell_prime: i32,
    pub caps: CapSet,
    /// Radial break points r_0 < r_1 < ... (empty when k' = k).
    pub radial: Vec<f64>,
    pub width: f64,
}

impl BoxFamily {
    pub fn new(d: usize, k: i32, k_prime: i32, ell_prime: i32) -> BoxFamily {
        let ang = (k_prime + ell_prime - k).min(0);
        let caps = CapSet::new(d, ang);
        let width = 2f64.powi(k_prime);
        let radial = if k_prime >= k {
            Vec::new()
        } else {
            let lo = 2f64.powi(k - 1) - width;
            let hi = 2f64.powi(k + 1) + width;
            let count = ((hi - lo) / width).ceil() as usize + 1;
            (0..=count).map(|i| lo + i as f64 * width).collect()
        };
        BoxFamily { k, k_prime, ell_prime, caps, radial, width }
    }

    fn n_radial(&self) -> usize {
        if self.radial.is_empty() {
            1
        } else {
            self.radial.len() - 1
        }
    }

    pub fn len(&self) -> usize {
        self.n_radial() * self.caps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// (radial index, cap index) of a box.
    pub fn split(&self, index: usize) -> (usize, usize) {
        (index / self.caps.len(), index % self.caps.len())
    }

    fn rho(&self, r_index: usize, r: f64) -> f64 {
        if self.radial.is_empty() {
            return 1.0;
        }
        let a = self.radial[r_index];
        let b = self.radial[r_index + 1];
        bump::smooth_step((r - a) / self.width + 0.5) - bump::smooth_step((r - b) / self.width + 0.5)
    }

    pub fn symbol(&self, index: usize, xi: &[f64], abs: f64) -> f64 {
        if abs == 0.0 {
            return 0.0;
        }
        let (ri, ci) = self.split(index);
        let s = bump::shell(abs, self.k);
        if s == 0.0 {
            return 0.0;
        }
        let rho = self.rho(ri, abs);
        if rho == 0.0 {
            return 0.0;
        }
        s * rho * self.caps.weight(ci, xi, abs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn caps_partition_unity() {
        for d in 2..=3 {
            let caps = CapSet::new(d, -2);
            assert!(caps.len() > 4);
            for i in 0..50 {
                let a = i as f64 * 0.37;
                let xi: Vec<f64> = if d == 2 { vec![a.cos(), a.sin()] } else { vec![a.cos(), a.sin() * 0.6, a.sin() * 0.8] };
                let s: f64 = caps.weights(&xi, 1.0).iter().sum();
                assert!((s - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn centers_are_separated() {
        let caps = CapSet::new(3, -2);
        for i in 0..caps.len() {
            for j in 0..i {
                assert!(arc(&caps.centers[i], &caps.centers[j]) >= 0.9 * 0.25 - 1e-12);
            }
        }
    }

    #[test]
    fn trivial_cap() {
        let caps = CapSet::new(3, 0);
        assert_eq!(caps.len(), 1);
        assert_eq!(caps.weight(0, &[0.1, 0.2, 0.3], 0.37), 1.0);
    }

    #[test]
    fn radial_partition() {
        let b = BoxFamily::new(2, 4, 2, -1);
        for i in 0..100 {
            let r = 8.0 + 24.0 * i as f64 / 99.0;
            let s: f64 = (0..b.n_radial()).map(|ri| b.rho(ri, r)).sum();
            assert!((s - 1.0).abs() < 1e-14, "r={r}");
        }
    }
}
