//! Raw little-endian field checkpoints with a JSON sidecar header.

use super::field::{Domain, Field, Kind, Repr};
use super::Grid;
use crate::error::{Error, Result};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Precision {
    Complex64,
    Complex128,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldHeader {
    pub d: usize,
    pub n: usize,
    #[serde(rename = "L")]
    pub length: f64,
    pub nt: Option<usize>,
    pub period: Option<f64>,
    pub representation: Repr,
    pub domain: Domain,
    pub kind: Kind,
    pub components: usize,
    pub precision: Precision,
}

/// Writes `<base>.bin` (components back to back, interleaved re/im) and `<base>.json`.
pub fn write_field(base: &Path, f: &Field, precision: Precision) -> Result<()> {
    let header = FieldHeader {
        d: f.grid.d,
        n: f.grid.n,
        length: f.grid.length,
        nt: f.grid.time.map(|t| t.nt),
        period: f.grid.time.map(|t| t.period),
        representation: f.repr,
        domain: f.domain,
        kind: f.kind,
        components: f.ncomp(),
        precision,
    };
    std::fs::write(base.with_extension("json"), serde_json::to_string_pretty(&header)?)?;
    let mut out = std::io::BufWriter::new(std::fs::File::create(base.with_extension("bin"))?);
    for c in &f.comps {
        for z in c {
            match precision {
                Precision::Complex64 => {
                    out.write_all(&(z.re as f32).to_le_bytes())?;
                    out.write_all(&(z.im as f32).to_le_bytes())?;
                }
                Precision::Complex128 => {
                    out.write_all(&z.re.to_le_bytes())?;
                    out.write_all(&z.im.to_le_bytes())?;
                }
            }
        }
    }
    out.flush()?;
    Ok(())
}

pub fn read_field(base: &Path) -> Result<Field> {
    let header: FieldHeader = serde_json::from_str(&std::fs::read_to_string(base.with_extension("json"))?)?;
    let grid: Arc<Grid> = match (header.nt, header.period) {
        (Some(nt), Some(p)) => Grid::with_time(header.d, header.n, header.length, nt, p)?,
        _ => Grid::new(header.d, header.n, header.length)?,
    };
    let mut f = Field::zeros(&grid, header.kind, header.components, header.domain, header.representation);
    let mut bytes = Vec::new();
    std::fs::File::open(base.with_extension("bin"))?.read_to_end(&mut bytes)?;
    let width = match header.precision {
        Precision::Complex64 => 4,
        Precision::Complex128 => 8,
    };
    let expected = f.ncomp() * f.block_len() * 2 * width;
    if bytes.len() != expected {
        return Err(Error::Shape(format!("checkpoint has {} bytes, header implies {expected}", bytes.len())));
    }
    let mut it = bytes.chunks_exact(width).map(|b| match width {
        4 => f32::from_le_bytes(b.try_into().unwrap()) as f64,
        _ => f64::from_le_bytes(b.try_into().unwrap()),
    });
    for c in f.comps.iter_mut() {
        for z in c.iter_mut() {
            let re = it.next().unwrap();
            let im = it.next().unwrap();
            *z = C64::new(re, im);
        }
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_both_precisions() {
        let g = Grid::with_time(2, 4, 3.0, 2, 1.0).unwrap();
        let f = Field::from_fn(&g, Kind::Spinor, 2, Domain::SpaceTime, |x, t| vec![C64::new(x[0], t), C64::new(-x[1], 0.25)]);
        let dir = tempfile::tempdir().unwrap();
        let base = dir.path().join("psi");
        write_field(&base, &f, Precision::Complex128).unwrap();
        let back = read_field(&base).unwrap();
        assert_eq!(back.comps, f.comps);
        write_field(&base, &f, Precision::Complex64).unwrap();
        let back = read_field(&base).unwrap();
        assert!(back.rel_dist(&f).unwrap() < 1e-7);
        let header: FieldHeader = serde_json::from_str(&std::fs::read_to_string(base.with_extension("json")).unwrap()).unwrap();
        assert_eq!(header.components, 2);
        assert_eq!(header.n, 4);
    }
}
