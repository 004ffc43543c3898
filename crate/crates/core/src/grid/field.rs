use super::Grid;
use crate::error::{Error, Result};
use crate::par;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Storage representation of a field.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Repr {
    Physical,
    /// Transformed in every axis (space, and time for space-time blocks).
    Fourier,
    /// Space-time block transformed in space only.
    Mixed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Domain {
    Space,
    SpaceTime,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Kind {
    Scalar,
    Spinor,
    Vector,
}

/// A Fourier mode as seen by multiplier closures.
pub struct Mode<'a> {
    /// Spatial index.
    pub sp: usize,
    /// Time index (0 for spatial fields).
    pub t: usize,
    pub xi: &'a [f64],
    pub abs: f64,
    /// Time frequency, present only for fully transformed space-time blocks.
    pub tau: Option<f64>,
}

/// Scalar, spinor or vector field on a grid, stored component-major.
#[derive(Clone)]
pub struct Field {
    pub grid: Arc<Grid>,
    pub kind: Kind,
    pub domain: Domain,
    pub repr: Repr,
    pub comps: Vec<Vec<C64>>,
}

impl std::fmt::Debug for Field {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Field")
            .field("kind", &self.kind)
            .field("domain", &self.domain)
            .field("repr", &self.repr)
            .field("ncomp", &self.comps.len())
            .finish()
    }
}

impl Field {
    pub fn zeros(grid: &Arc<Grid>, kind: Kind, ncomp: usize, domain: Domain, repr: Repr) -> Field {
        let nt = match domain {
            Domain::Space => 1,
            Domain::SpaceTime => grid.time.expect("space-time field needs a time axis").nt,
        };
        let len = grid.nsp() * nt;
        Field { grid: grid.clone(), kind, domain, repr, comps: vec![vec![ZERO; len]; ncomp] }
    }

    pub fn scalar(grid: &Arc<Grid>, domain: Domain, repr: Repr) -> Field {
        Self::zeros(grid, Kind::Scalar, 1, domain, repr)
    }

    pub fn spinor(grid: &Arc<Grid>, n: usize, domain: Domain, repr: Repr) -> Field {
        Self::zeros(grid, Kind::Spinor, n, domain, repr)
    }

    pub fn vector(grid: &Arc<Grid>, domain: Domain, repr: Repr) -> Field {
        Self::zeros(grid, Kind::Vector, grid.d, domain, repr)
    }

    /// Zero field with the same layout as `self`.
    pub fn zeros_like(&self) -> Field {
        Field::zeros(&self.grid, self.kind, self.comps.len(), self.domain, self.repr)
    }

    /// Physical-space field from pointwise values f(x, t) (t = 0 for spatial fields).
    pub fn from_fn<F>(grid: &Arc<Grid>, kind: Kind, ncomp: usize, domain: Domain, f: F) -> Field
    where
        F: Fn(&[f64], f64) -> Vec<C64> + Sync + Send,
    {
        let mut out = Field::zeros(grid, kind, ncomp, domain, Repr::Physical);
        let nsp = grid.nsp();
        let vals = par::map_range(out.block_len(), |i| {
            let t = if domain == Domain::SpaceTime { grid.time_at(i / nsp) } else { 0.0 };
            let x = grid.x(i % nsp);
            f(&x[..grid.d], t)
        });
        for (i, v) in vals.into_iter().enumerate() {
            for c in 0..ncomp {
                out.comps[c][i] = v[c];
            }
        }
        out
    }

    pub fn ncomp(&self) -> usize {
        self.comps.len()
    }

    /// Number of time samples (1 for spatial fields).
    pub fn nt(&self) -> usize {
        match self.domain {
            Domain::Space => 1,
            Domain::SpaceTime => self.grid.time.unwrap().nt,
        }
    }

    pub fn block_len(&self) -> usize {
        self.grid.nsp() * self.nt()
    }

    pub fn require_shape(&self, other: &Field) -> Result<()> {
        if self.comps.len() != other.comps.len() || self.domain != other.domain || self.block_len() != other.block_len() {
            return Err(Error::Shape(format!("{self:?} vs {other:?}")));
        }
        Ok(())
    }

    /// Converts to the requested representation.
    pub fn to_repr(&self, target: Repr) -> Field {
        let mut out = self.clone();
        out.set_repr(target);
        out
    }

    pub fn set_repr(&mut self, target: Repr) {
        if self.repr == target {
            return;
        }
        let grid = self.grid.clone();
        let st = self.domain == Domain::SpaceTime;
        if self.domain == Domain::Space && target == Repr::Mixed {
            panic!("mixed representation needs a space-time field");
        }
        for c in self.comps.iter_mut() {
            match (self.repr, target) {
                (Repr::Physical, Repr::Fourier) => {
                    grid.fft_space(c, true);
                    if st {
                        grid.fft_time(c, true).unwrap();
                    }
                }
                (Repr::Physical, Repr::Mixed) => grid.fft_space(c, true),
                (Repr::Mixed, Repr::Fourier) => grid.fft_time(c, true).unwrap(),
                (Repr::Mixed, Repr::Physical) => grid.fft_space(c, false),
                (Repr::Fourier, Repr::Mixed) => grid.fft_time(c, false).unwrap(),
                (Repr::Fourier, Repr::Physical) => {
                    if st {
                        grid.fft_time(c, false).unwrap();
                    }
                    grid.fft_space(c, false);
                }
                _ => unreachable!(),
            }
        }
        self.repr = target;
    }

    pub fn fourier(&self) -> Field {
        self.to_repr(Repr::Fourier)
    }

    pub fn physical(&self) -> Field {
        self.to_repr(Repr::Physical)
    }

    pub fn into_repr(mut self, target: Repr) -> Field {
        self.set_repr(target);
        self
    }

    fn cell_weight(&self) -> f64 {
        let vol = self.grid.volume();
        let period = match self.domain {
            Domain::Space => 1.0,
            Domain::SpaceTime => self.grid.time.unwrap().period,
        };
        match self.repr {
            Repr::Physical => vol * period / self.block_len() as f64,
            Repr::Fourier => vol * period,
            Repr::Mixed => vol * period / self.nt() as f64,
        }
    }

    /// Discrete L² norm over the periodic cell (and time window).
    pub fn norm_l2(&self) -> f64 {
        let s: f64 = self.comps.iter().map(|c| c.iter().map(|z| z.norm_sqr()).sum::<f64>()).sum();
        (s * self.cell_weight()).sqrt()
    }

    /// ⟨f, g⟩ = ∫ Σ_c f_c conj(g_c); both fields in the same representation.
    pub fn inner(&self, other: &Field) -> Result<C64> {
        self.require_shape(other)?;
        if self.repr != other.repr {
            return Err(Error::Representation("same"));
        }
        let mut s = ZERO;
        for (a, b) in self.comps.iter().zip(&other.comps) {
            for (x, y) in a.iter().zip(b) {
                s += x * y.conj();
            }
        }
        Ok(s * self.cell_weight())
    }

    /// Largest pointwise magnitude of any component in physical space.
    pub fn max_abs(&self) -> f64 {
        let p = if self.repr == Repr::Physical { std::borrow::Cow::Borrowed(self) } else { std::borrow::Cow::Owned(self.physical()) };
        p.comps.iter().flat_map(|c| c.iter()).fold(0.0, |m, z| m.max(z.norm()))
    }

    /// Largest imaginary part in physical space.
    pub fn max_imag(&self) -> f64 {
        let p = self.physical();
        p.comps.iter().flat_map(|c| c.iter()).fold(0.0, |m, z| m.max(z.im.abs()))
    }

    /// Largest magnitude of the spatial mean over components and time slices.
    pub fn max_spatial_mean(&self) -> f64 {
        let f = match self.repr {
            Repr::Physical => self.to_repr(if self.domain == Domain::SpaceTime { Repr::Mixed } else { Repr::Fourier }),
            Repr::Fourier if self.domain == Domain::SpaceTime => self.to_repr(Repr::Mixed),
            _ => self.clone(),
        };
        let nsp = self.grid.nsp();
        let mut m = 0.0f64;
        for c in &f.comps {
            for t in 0..self.nt() {
                m = m.max(c[t * nsp].norm());
            }
        }
        m
    }

    /// Root-mean-square amplitude, the scale used by mean-zero checks.
    pub fn rms(&self) -> f64 {
        let p = match self.domain {
            Domain::Space => self.grid.volume(),
            Domain::SpaceTime => self.grid.volume() * self.grid.time.unwrap().period,
        };
        self.norm_l2() / p.sqrt()
    }

    /// Errors unless the spatial mean vanishes (relative 1e-12).
    pub fn require_mean_zero(&self, op: &'static str) -> Result<()> {
        let mean = self.max_spatial_mean();
        let scale = self.rms().max(f64::MIN_POSITIVE);
        if mean > 1e-12 * scale && mean > 1e-300 {
            return Err(Error::NonzeroMean { op, mean });
        }
        Ok(())
    }

    /// Sets the spatial zero mode to zero (Fourier or Mixed representation).
    pub fn remove_mean(&mut self) {
        let was = self.repr;
        let work = if self.domain == Domain::SpaceTime { Repr::Mixed } else { Repr::Fourier };
        self.set_repr(work);
        let nsp = self.grid.nsp();
        let nt = self.nt();
        for c in self.comps.iter_mut() {
            for t in 0..nt {
                c[t * nsp] = ZERO;
            }
        }
        self.set_repr(was);
    }

    fn zip_with(&self, other: &Field, f: impl Fn(C64, C64) -> C64 + Sync + Send) -> Result<Field> {
        self.require_shape(other)?;
        let other = other.to_repr(self.repr);
        let mut out = self.clone();
        for (a, b) in out.comps.iter_mut().zip(&other.comps) {
            par::for_each_chunk(a, 1 << 14, |ci, chunk| {
                let base = ci << 14;
                for (k, v) in chunk.iter_mut().enumerate() {
                    *v = f(*v, b[base + k]);
                }
            });
        }
        Ok(out)
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a - b)
    }

    /// self + s·other
    pub fn axpy(&self, s: C64, other: &Field) -> Result<Field> {
        self.zip_with(other, move |a, b| a + s * b)
    }

    pub fn scale(&self, s: C64) -> Field {
        let mut out = self.clone();
        for c in out.comps.iter_mut() {
            par::for_each_chunk(c, 1 << 14, |_, chunk| chunk.iter_mut().for_each(|v| *v *= s));
        }
        out
    }

    pub fn scale_re(&self, s: f64) -> Field {
        self.scale(C64::new(s, 0.0))
    }

    /// Relative L² distance ‖self - other‖ / max(‖other‖, tiny).
    pub fn rel_dist(&self, other: &Field) -> Result<f64> {
        let d = self.sub(other)?.norm_l2();
        Ok(d / other.norm_l2().max(f64::MIN_POSITIVE))
    }

    /// Mode descriptor for flat index i in a Fourier or Mixed field.
    fn mode(&self, i: usize) -> Mode<'_> {
        let nsp = self.grid.nsp();
        let sp = i % nsp;
        let t = i / nsp;
        let tau = if self.domain == Domain::SpaceTime && self.repr == Repr::Fourier { Some(self.grid.tau(t)) } else { None };
        Mode { sp, t, xi: self.grid.xi(sp), abs: self.grid.abs_xi(sp), tau }
    }

    /// Multiplies every component by the scalar symbol m(mode). The field
    /// must be in Fourier (or Mixed, for purely spatial symbols) representation.
    pub fn apply_symbol<F>(&self, m: F) -> Field
    where
        F: Fn(&Mode) -> C64 + Sync + Send,
    {
        assert!(self.repr != Repr::Physical, "apply_symbol needs a transformed field");
        let symbols = par::map_range(self.block_len(), |i| m(&self.mode(i)));
        let mut out = self.clone();
        for c in out.comps.iter_mut() {
            for (v, s) in c.iter_mut().zip(&symbols) {
                *v *= s;
            }
        }
        out
    }

    /// General mode-wise linear map: `f(mode, input comps, output comps)`.
    pub fn map_modes<F>(&self, kind: Kind, nout: usize, f: F) -> Field
    where
        F: Fn(&Mode, &[C64], &mut [C64]) + Sync + Send,
    {
        assert!(self.repr != Repr::Physical, "map_modes needs a transformed field");
        assert!(nout <= 4 && self.comps.len() <= 4);
        let nin = self.comps.len();
        let vals = par::map_range(self.block_len(), |i| {
            let mut input = [ZERO; 4];
            for c in 0..nin {
                input[c] = self.comps[c][i];
            }
            let mut o = [ZERO; 4];
            f(&self.mode(i), &input[..nin], &mut o[..nout]);
            o
        });
        let mut out = Field::zeros(&self.grid, kind, nout, self.domain, self.repr);
        for (i, v) in vals.iter().enumerate() {
            for c in 0..nout {
                out.comps[c][i] = v[c];
            }
        }
        out
    }

    /// Pointwise map in physical space: `f(point, input comps, output comps)`.
    pub fn map_points<F>(&self, kind: Kind, nout: usize, f: F) -> Field
    where
        F: Fn(usize, &[C64], &mut [C64]) + Sync + Send,
    {
        let p = self.physical();
        let nin = p.comps.len();
        assert!(nout <= 4 && nin <= 4);
        let vals = par::map_range(p.block_len(), |i| {
            let mut input = [ZERO; 4];
            for c in 0..nin {
                input[c] = p.comps[c][i];
            }
            let mut o = [ZERO; 4];
            f(i, &input[..nin], &mut o[..nout]);
            o
        });
        let mut out = Field::zeros(&self.grid, kind, nout, self.domain, Repr::Physical);
        for (i, v) in vals.iter().enumerate() {
            for c in 0..nout {
                out.comps[c][i] = v[c];
            }
        }
        out
    }

    /// One component as a scalar field.
    pub fn component(&self, c: usize) -> Field {
        Field {
            grid: self.grid.clone(),
            kind: Kind::Scalar,
            domain: self.domain,
            repr: self.repr,
            comps: vec![self.comps[c].clone()],
        }
    }

    /// Stacks scalar fields of identical layout into one multi-component field.
    pub fn from_components(kind: Kind, parts: &[Field]) -> Result<Field> {
        let first = parts.first().ok_or_else(|| Error::Shape("no components".into()))?;
        let mut comps = Vec::with_capacity(parts.len());
        for p in parts {
            first.component(0).require_shape(&p.component(0))?;
            comps.push(p.to_repr(first.repr).comps[0].clone());
        }
        Ok(Field { grid: first.grid.clone(), kind, domain: first.domain, repr: first.repr, comps })
    }

    /// Spatial field at time index j of a Physical or Mixed space-time block.
    pub fn time_slice(&self, j: usize) -> Field {
        assert_eq!(self.domain, Domain::SpaceTime);
        let src = if self.repr == Repr::Fourier { std::borrow::Cow::Owned(self.to_repr(Repr::Mixed)) } else { std::borrow::Cow::Borrowed(self) };
        let nsp = self.grid.nsp();
        Field {
            grid: self.grid.clone(),
            kind: self.kind,
            domain: Domain::Space,
            repr: if src.repr == Repr::Mixed { Repr::Fourier } else { Repr::Physical },
            comps: src.comps.iter().map(|c| c[j * nsp..(j + 1) * nsp].to_vec()).collect(),
        }
    }

    /// Space-time block from nt spatial slices (all in the same representation).
    pub fn from_slices(grid: &Arc<Grid>, slices: &[Field]) -> Result<Field> {
        let ta = grid.time_axis()?;
        if slices.len() != ta.nt {
            return Err(Error::Shape(format!("{} slices for nt = {}", slices.len(), ta.nt)));
        }
        let first = &slices[0];
        let repr = if first.repr == Repr::Fourier { Repr::Mixed } else { Repr::Physical };
        let mut out = Field::zeros(grid, first.kind, first.ncomp(), Domain::SpaceTime, repr);
        let nsp = grid.nsp();
        for (j, s) in slices.iter().enumerate() {
            if s.repr != first.repr || s.ncomp() != first.ncomp() || s.domain != Domain::Space {
                return Err(Error::Shape("inconsistent slices".into()));
            }
            for c in 0..first.ncomp() {
                out.comps[c][j * nsp..(j + 1) * nsp].copy_from_slice(&s.comps[c]);
            }
        }
        Ok(out)
    }

    /// Same data viewed on another grid object with an identical spatial lattice.
    pub fn on_grid(&self, grid: &Arc<Grid>) -> Result<Field> {
        if grid.d != self.grid.d || grid.n != self.grid.n || grid.length != self.grid.length {
            return Err(Error::Shape("different spatial lattice".into()));
        }
        if self.domain == Domain::SpaceTime && grid.time != self.grid.time {
            return Err(Error::Shape("different time axis".into()));
        }
        let mut out = self.clone();
        out.grid = grid.clone();
        Ok(out)
    }

    pub fn is_finite(&self) -> bool {
        self.comps.iter().all(|c| c.iter().all(|z| z.re.is_finite() && z.im.is_finite()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    fn random_field(grid: &Arc<Grid>, ncomp: usize, domain: Domain, seed: u64) -> Field {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut f = Field::zeros(grid, Kind::Spinor, ncomp, domain, Repr::Physical);
        for c in f.comps.iter_mut() {
            for v in c.iter_mut() {
                *v = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            }
        }
        f
    }

    #[test]
    fn roundtrip_and_parseval() {
        for d in 1..=3 {
            let g = Grid::with_time(d, 8, 3.0, 4, 2.0).unwrap();
            for dom in [Domain::Space, Domain::SpaceTime] {
                let f = random_field(&g, 2, dom, 7);
                let fh = f.fourier();
                assert!((fh.norm_l2() - f.norm_l2()).abs() < 1e-12 * f.norm_l2());
                let back = fh.physical();
                assert!(back.rel_dist(&f).unwrap() < 1e-13);
                if dom == Domain::SpaceTime {
                    let m = f.to_repr(Repr::Mixed);
                    assert!((m.norm_l2() - f.norm_l2()).abs() < 1e-12 * f.norm_l2());
                    assert!(m.fourier().rel_dist(&fh).unwrap() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn plane_wave_lands_on_one_mode() {
        let g = Grid::new(2, 16, 2.0 * PI).unwrap();
        let f = Field::from_fn(&g, Kind::Scalar, 1, Domain::Space, |x, _| vec![C64::from_polar(1.0, 3.0 * x[0] - 2.0 * x[1])]);
        let fh = f.fourier();
        let idx = g.index_of(&[3, -2]).unwrap();
        assert!((fh.comps[0][idx] - 1.0).norm() < 1e-13);
        let rest: f64 = fh.comps[0].iter().enumerate().filter(|(i, _)| *i != idx).map(|(_, z)| z.norm()).sum();
        assert!(rest < 1e-12);
    }

    #[test]
    fn mean_checks() {
        let g = Grid::new(2, 8, 1.0).unwrap();
        let mut f = random_field(&g, 1, Domain::Space, 3);
        assert!(f.require_mean_zero("test").is_err());
        f.remove_mean();
        assert!(f.require_mean_zero("test").is_ok());
    }
}
