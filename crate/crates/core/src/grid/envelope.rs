//! Dyadic frequency envelopes c_k = Σ_{k'} 2^{-δ|k-k'|} ‖P_{k'} f‖.

use super::field::{Domain, Field, Repr};
use super::multiplier::Multiplier;
use crate::error::Result;
use serde::Serialize;
use std::collections::BTreeMap;

/// Per-shell norm used to build an envelope.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShellNorm {
    /// Discrete L² over the whole field (space or space-time).
    L2,
    /// sup over time slices of the spatial L² norm.
    LinfL2,
}

#[derive(Clone, Debug, Serialize)]
pub struct FrequencyEnvelope {
    pub c: BTreeMap<i32, f64>,
    pub delta: f64,
    pub cc: f64,
}

impl FrequencyEnvelope {
    /// Envelope from explicit shell values.
    pub fn from_shell_norms(norms: &BTreeMap<i32, f64>, delta: f64) -> FrequencyEnvelope {
        let c = norms
            .keys()
            .map(|&k| {
                let v: f64 = norms.iter().map(|(&kp, &a)| 2f64.powf(-delta * (k - kp).abs() as f64) * a).sum();
                (k, v)
            })
            .collect();
        FrequencyEnvelope { c, delta, cc: 1.0 }
    }

    /// Largest value of |c_k/c_{k'}| · 2^{-δ|k-k'|} over all pairs.
    pub fn admissibility(&self) -> f64 {
        let mut worst = 0.0f64;
        for (&k, &a) in &self.c {
            for (&kp, &b) in &self.c {
                if a > 0.0 && b > 0.0 {
                    worst = worst.max(a / b * 2f64.powf(-self.delta * (k - kp).abs() as f64));
                }
            }
        }
        worst
    }

    /// Pointwise product envelope (bc)_k with exponent δ_b + δ_c.
    pub fn product(&self, other: &FrequencyEnvelope) -> FrequencyEnvelope {
        let c = self.c.iter().filter_map(|(k, a)| other.c.get(k).map(|b| (*k, a * b))).collect();
        FrequencyEnvelope { c, delta: self.delta + other.delta, cc: self.cc * other.cc }
    }

    pub fn sum_squares(&self) -> f64 {
        self.c.values().map(|x| x * x).sum()
    }
}

/// ‖P_k f‖ for every shell that meets the grid.
pub fn shell_norms(f: &Field, norm: ShellNorm) -> Result<BTreeMap<i32, f64>> {
    let (lo, hi) = f.grid.shell_range();
    let mut out = BTreeMap::new();
    for k in lo..=hi {
        let p = Multiplier::Shell(k).apply(f)?;
        let v = match (norm, f.domain) {
            (ShellNorm::LinfL2, Domain::SpaceTime) => {
                let p = p.to_repr(Repr::Mixed);
                (0..p.nt()).map(|j| p.time_slice(j).norm_l2()).fold(0.0, f64::max)
            }
            _ => p.norm_l2(),
        };
        out.insert(k, v);
    }
    Ok(out)
}

pub fn envelope_from_field(f: &Field, delta: f64, norm: ShellNorm) -> Result<FrequencyEnvelope> {
    Ok(FrequencyEnvelope::from_shell_norms(&shell_norms(f, norm)?, delta))
}
