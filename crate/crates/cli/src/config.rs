//! TOML configuration. Every section is optional; missing keys take the
//! defaults below, and command-line flags override both.

use mdlab::evolve::{Coupling, DataFamily};
use mdlab::nullform::{BilinearConfig, KnappConfig, PacketParams};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    #[serde(rename = "verify-algebra")]
    pub verify_algebra: VerifyConfig,
    pub evolve: EvolveConfig,
    pub picard: PicardCli,
    pub parametrix: ParametrixCli,
    pub knapp: KnappCli,
    pub nullform: NullformCli,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub dims: Vec<usize>,
    pub partition_n: Vec<usize>,
    pub seed: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig { dims: vec![2, 3, 4], partition_n: vec![16, 32], seed: 1 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolveConfig {
    pub d: usize,
    pub n: usize,
    pub length: f64,
    pub family: DataFamily,
    pub eps: f64,
    pub width: f64,
    pub carrier: f64,
    pub seed: u64,
    pub dt: f64,
    pub t_final: f64,
    pub report_every: usize,
    pub coupling: Coupling,
    pub warn_threshold: f64,
    /// Number of runs, each with half the previous step.
    pub dt_levels: usize,
    /// Write the final ψ and A_x as raw field files.
    pub write_fields: bool,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        EvolveConfig {
            d: 3,
            n: 32,
            length: 4.0 * PI,
            family: DataFamily::Packet,
            eps: 1e-2,
            width: 1.2,
            carrier: 1.5,
            seed: 7,
            dt: 0.05,
            t_final: 2.0,
            report_every: 5,
            coupling: Coupling::Full,
            warn_threshold: 0.1,
            dt_levels: 1,
            write_fields: false,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PicardCli {
    pub d: usize,
    pub n: usize,
    pub length: f64,
    pub eps: Vec<f64>,
    pub width: f64,
    pub carrier: f64,
    pub seed: u64,
    pub dt: f64,
    pub t_final: f64,
    pub iterations: usize,
    pub inner_tol: f64,
    pub max_inner: usize,
    pub floor: f64,
}

impl Default for PicardCli {
    fn default() -> Self {
        PicardCli {
            d: 3,
            n: 16,
            length: 4.0 * PI,
            eps: vec![1e-2, 5e-3],
            width: 1.2,
            carrier: 1.5,
            seed: 7,
            dt: 0.05,
            t_final: 1.0,
            iterations: 3,
            inner_tol: 1e-10,
            max_inner: 50,
            floor: 1e-13,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParametrixCli {
    pub d: usize,
    pub n: usize,
    pub length: f64,
    pub eps: Vec<f64>,
    pub sigma: Vec<f64>,
    pub c: i32,
    pub t_final: f64,
    pub intervals: usize,
    pub gauss: usize,
    pub seed: u64,
    /// Also run the iterative solver at the first ε.
    pub iterate: bool,
    pub iterate_tol: f64,
    pub iterate_max: usize,
}

impl Default for ParametrixCli {
    fn default() -> Self {
        ParametrixCli {
            d: 2,
            n: 32,
            length: 16.0 * PI,
            eps: vec![1e-2, 5e-3, 2.5e-3],
            sigma: vec![0.1],
            c: 2,
            t_final: 4.0,
            intervals: 16,
            gauss: 4,
            seed: 11,
            iterate: false,
            iterate_tol: 1e-5,
            iterate_max: 4,
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct KnappCli {
    #[serde(flatten)]
    pub knapp: KnappConfig,
    /// Re-derive the time constant on the dyadic ladder before the run.
    pub calibrate: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NullformCli {
    /// Dimension of the resonance and spinor-ratio scans.
    pub d: usize,
    pub samples: usize,
    pub offset: u64,
    pub thetas: Vec<f64>,
    pub packet: PacketParams,
    pub bilinear: BilinearConfig,
    pub ell_tilde: Vec<i32>,
    pub ell_prime: Vec<i32>,
}

impl Default for NullformCli {
    fn default() -> Self {
        NullformCli {
            d: 3,
            samples: 100_000,
            offset: 0,
            thetas: vec![0.4, 0.2, 0.1, 0.05],
            packet: PacketParams::default(),
            bilinear: BilinearConfig::default(),
            ell_tilde: vec![-1, -2, -3],
            ell_prime: vec![-1, -2, -3],
        }
    }
}
