use crate::config::{EvolveConfig, KnappCli, NullformCli, ParametrixCli, PicardCli, VerifyConfig};
use crate::output::{int, num, AnyResult, Output, Table};
use mdlab::checks::{algebra_suite, partition_suite};
use mdlab::clifford::{build_gamma_rep, IdentityCheck};
use mdlab::evolve::{self, DataFamily, DataParams, PicardConfig, RunConfig};
use mdlab::grid::io::{write_field, Precision};
use mdlab::grid::Grid;
use mdlab::nullform::{self, BilinearConfig, BilinearRow, NullSymbol};
use mdlab::parametrix::{self, PhaseParams, Quantizer, Window};
use serde_json::json;

/// Outcome of a command that ran to completion.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Ok,
    IdentityFailure,
}

impl Status {
    pub fn from_checks(checks: &[IdentityCheck]) -> Status {
        if checks.iter().all(|c| c.passed) {
            Status::Ok
        } else {
            Status::IdentityFailure
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::IdentityFailure => "identity-failure",
        }
    }
}

fn report(checks: &[IdentityCheck]) {
    for c in checks {
        println!("{} {:<56} {:>11.3e} (tol {:.0e})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.defect, c.tolerance);
    }
}

/// Pass/fail check on a quantity that must be at least `min`.
fn at_least(name: &str, value: f64, min: f64) -> IdentityCheck {
    IdentityCheck { name: name.into(), defect: value, tolerance: min, passed: value >= min }
}

fn flag(name: &str, ok: bool) -> IdentityCheck {
    IdentityCheck { name: name.into(), defect: if ok { 0.0 } else { 1.0 }, tolerance: 0.0, passed: ok }
}

pub fn verify_algebra(cfg: &VerifyConfig, out: &mut Output) -> AnyResult<Status> {
    let mut t = Table::new(&["suite", "d", "n", "check", "defect", "tolerance", "passed"]);
    let mut all = Vec::new();
    let mut tables = serde_json::Map::new();
    for &d in &cfg.dims {
        let checks = algebra_suite(d, cfg.seed)?;
        for c in &checks {
            t.push(out, vec!["algebra".into(), int(d), String::new(), c.name.clone(), num(c.defect), num(c.tolerance), int(c.passed)]);
        }
        println!("d = {d}: algebra");
        report(&checks);
        all.extend(checks);
        for &n in &cfg.partition_n {
            let checks = partition_suite(d, n, cfg.seed)?;
            for c in &checks {
                t.push(out, vec!["partition".into(), int(d), int(n), c.name.clone(), num(c.defect), num(c.tolerance), int(c.passed)]);
            }
            println!("d = {d}, n = {n}: partitions");
            report(&checks);
            all.extend(checks);
        }
        tables.insert(format!("d{d}"), json!(build_gamma_rep(d)?.to_table()));
    }
    let status = Status::from_checks(&all);
    out.write_table("verify-algebra.csv", &t)?;
    let failures: Vec<&str> = all.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    out.write_json("verify-algebra.json", &json!({ "passed": status == Status::Ok, "failures": failures, "gamma_tables": tables }))?;
    Ok(status)
}

/// Relative Coulomb-gauge tolerance of the evolution.
pub const COULOMB_TOL: f64 = 1e-10;

pub fn evolve(cfg: &EvolveConfig, out: &mut Output) -> AnyResult<Status> {
    let rep = build_gamma_rep(cfg.d)?;
    let grid = Grid::new(cfg.d, cfg.n, cfg.length)?;
    let data = evolve::make_data(&rep, &grid, &DataParams { family: cfg.family, eps: cfg.eps, width: cfg.width, carrier: cfg.carrier, seed: cfg.seed })?;
    let (lo, hi) = grid.shell_range();
    let mut cols: Vec<String> = ["level", "dt", "step", "t", "charge", "charge_drift", "coulomb", "ax_max", "gauss_residual", "dirac_residual"].iter().map(|s| s.to_string()).collect();
    cols.extend((lo..=hi).map(|k| format!("shell_{k}")));
    let col_refs: Vec<&str> = cols.iter().map(|s| s.as_str()).collect();
    let mut t = Table::new(&col_refs);
    let mut levels = Vec::new();
    let mut checks = Vec::new();
    for level in 0..cfg.dt_levels.max(1) {
        let dt = cfg.dt / 2f64.powi(level as i32);
        let rc = RunConfig { dt, t_final: cfg.t_final, report_every: cfg.report_every << level, coupling: cfg.coupling, warn_threshold: cfg.warn_threshold };
        let (rep_out, st) = evolve::run(&rep, &data, &rc)?;
        for w in &rep_out.warnings {
            eprintln!("warning: {w}");
        }
        for r in &rep_out.rows {
            let mut v = vec![int(level), num(r.dt), int(r.step), num(r.t), num(r.charge), num(r.charge_drift), num(r.coulomb), num(r.ax_max), num(r.gauss_residual), num(r.dirac_residual)];
            v.extend(r.shell_norms.iter().map(|(_, x)| num(*x)));
            t.push(out, v);
        }
        println!("dt = {dt:e}: max charge drift {:.3e}, max Coulomb residual {:.3e}", rep_out.max_charge_drift, rep_out.max_coulomb);
        checks.push(IdentityCheck::new(format!("Coulomb constraint (dt = {dt:e})"), rep_out.max_coulomb, COULOMB_TOL));
        if cfg.coupling == evolve::Coupling::Off {
            let steps = (cfg.t_final / dt).round() as usize;
            checks.push(IdentityCheck::new(format!("free flow per mode (dt = {dt:e})"), evolve::free_flow_defect(&rep, &data, dt, steps)?, 1e-12));
        }
        if cfg.write_fields && level + 1 == cfg.dt_levels.max(1) {
            write_field(&out.path("psi_final"), &st.psi(), Precision::Complex128)?;
            write_field(&out.path("ax_final"), &st.ax, Precision::Complex128)?;
        }
        levels.push(json!({ "dt": dt, "max_charge_drift": rep_out.max_charge_drift, "max_coulomb": rep_out.max_coulomb, "warnings": rep_out.warnings }));
    }
    let drifts: Vec<f64> = levels.iter().map(|l| l["max_charge_drift"].as_f64().unwrap_or(f64::NAN)).collect();
    let ratios: Vec<f64> = drifts.windows(2).map(|w| w[0] / w[1]).collect();
    report(&checks);
    out.write_table("evolve.csv", &t)?;
    out.write_json("evolve.json", &json!({ "levels": levels, "drift_ratios": ratios, "checks": checks }))?;
    Ok(Status::from_checks(&checks))
}

pub fn picard(cfg: &PicardCli, out: &mut Output) -> AnyResult<Status> {
    let rep = build_gamma_rep(cfg.d)?;
    let grid = Grid::new(cfg.d, cfg.n, cfg.length)?;
    let pc = PicardConfig { dt: cfg.dt, t_final: cfg.t_final, iterations: cfg.iterations, inner_tol: cfg.inner_tol, max_inner: cfg.max_inner, floor: cfg.floor };
    let mut t = Table::new(&["eps", "iteration", "distance", "ratio", "inner_iterations"]);
    let mut runs = Vec::new();
    let mut checks = Vec::new();
    for &eps in &cfg.eps {
        let data = evolve::make_data(&rep, &grid, &DataParams { family: DataFamily::Packet, eps, width: cfg.width, carrier: cfg.carrier, seed: cfg.seed })?;
        let r = evolve::picard_outer(&rep, &data, &pc)?;
        for (i, dist) in r.distances.iter().enumerate() {
            let ratio = if i == 0 { String::new() } else { num(r.ratios[i - 1]) };
            t.push(out, vec![num(eps), int(i + 1), num(*dist), ratio, int(r.inner_iterations.get(i).copied().unwrap_or(0))]);
        }
        let worst = r.ratios.iter().cloned().fold(0.0, f64::max);
        println!("eps = {eps:e}: distances {:?}, ratios {:?}", r.distances, r.ratios);
        checks.push(IdentityCheck { name: format!("contraction at eps = {eps:e}"), defect: worst, tolerance: 1.0, passed: worst < 1.0 });
        runs.push(json!({ "eps": eps, "report": r }));
    }
    let first: Vec<f64> = runs.iter().map(|r| r["report"]["ratios"][0].as_f64().unwrap_or(f64::NAN)).collect();
    let eps_factors: Vec<f64> = first.windows(2).map(|w| w[0] / w[1]).collect();
    report(&checks);
    out.write_table("picard.csv", &t)?;
    out.write_json("picard.json", &json!({ "runs": runs, "first_ratio_factors": eps_factors, "checks": checks }))?;
    Ok(Status::from_checks(&checks))
}

/// Tolerance of the exact parametrix identities (transport equation and
/// covariant operator reduction).
pub const PARAMETRIX_IDENTITY_TOL: f64 = 1e-9;

pub fn parametrix(cfg: &ParametrixCli, out: &mut Output) -> AnyResult<Status> {
    let grid = Grid::new(cfg.d, cfg.n, cfg.length)?;
    let q = Quantizer::new(&grid);
    let win = Window { t_final: cfg.t_final, intervals: cfg.intervals, gauss: cfg.gauss };
    let mut t = Table::new(&[
        "eps",
        "sigma",
        "composition",
        "box_data",
        "box_residual_l2",
        "box_residual_l1",
        "halfwave_init",
        "halfwave_residual_l2",
        "halfwave_residual_l1",
        "transport_defect",
        "covopreduction_defect",
        "phase_sup",
    ]);
    let mut checks = Vec::new();
    let mut rates = Vec::new();
    for &sigma in &cfg.sigma {
        let params = PhaseParams { sigma, c: cfg.c };
        let mut rows = Vec::new();
        for &eps in &cfg.eps {
            let r = parametrix::sweep_point(&q, eps, params, &win, cfg.seed)?;
            t.push(
                out,
                vec![
                    num(r.eps),
                    num(r.sigma),
                    num(r.composition),
                    num(r.box_data),
                    num(r.box_residual_l2),
                    num(r.box_residual_l1),
                    num(r.halfwave_init),
                    num(r.halfwave_residual_l2),
                    num(r.halfwave_residual_l1),
                    num(r.transport_defect),
                    num(r.covopreduction_defect),
                    num(r.phase_sup),
                ],
            );
            println!("sigma = {sigma}, eps = {eps:e}: composition {:.3e}, box residual {:.3e}, half-wave residual {:.3e}", r.composition, r.box_residual_l2, r.halfwave_residual_l2);
            checks.push(IdentityCheck::new(format!("transport equation (sigma {sigma}, eps {eps:e})"), r.transport_defect, PARAMETRIX_IDENTITY_TOL));
            checks.push(IdentityCheck::new(format!("covariant reduction (sigma {sigma}, eps {eps:e})"), r.covopreduction_defect, PARAMETRIX_IDENTITY_TOL));
            rows.push(r);
        }
        if rows.len() >= 2 {
            let eps: Vec<f64> = rows.iter().map(|r| r.eps).collect();
            let fit = |f: &dyn Fn(&parametrix::SweepRow) -> f64| parametrix::fitted_rate(&eps, &rows.iter().map(f).collect::<Vec<_>>());
            rates.push(json!({
                "sigma": sigma,
                "composition": fit(&|r| r.composition),
                "box_residual_l2": fit(&|r| r.box_residual_l2),
                "halfwave_residual_l2": fit(&|r| r.halfwave_residual_l2),
            }));
        }
    }
    let mut iterate = serde_json::Value::Null;
    if cfg.iterate {
        let eps = cfg.eps[0];
        let params = PhaseParams { sigma: cfg.sigma[0], c: cfg.c };
        let a = parametrix::LowFreeWave::random(&grid, eps, cfg.c, cfg.seed)?;
        let center = vec![grid.length / 2.0; grid.d];
        let f = parametrix::unit_packet(&grid, &center);
        let forcing = parametrix::NoForcing { grid: grid.clone() };
        let r = parametrix::iterate_to_solution(&q, &a, &f, &forcing, params, &win, cfg.iterate_tol, cfg.iterate_max)?;
        println!("iteration at eps = {eps:e}: residuals {:?}", r.residuals);
        iterate = serde_json::to_value(&r)?;
    }
    report(&checks);
    out.write_table("parametrix.csv", &t)?;
    out.write_json("parametrix.json", &json!({ "fitted_rates": rates, "iterate": iterate, "checks": checks }))?;
    Ok(Status::from_checks(&checks))
}

pub fn knapp(cfg: &KnappCli, out: &mut Output) -> AnyResult<Status> {
    let mut kc = cfg.knapp.clone();
    let mut calibrated = None;
    if cfg.calibrate {
        calibrated = nullform::knapp_calibrate(&kc)?;
        match calibrated {
            Some(c) => kc.time_constant = c,
            None => eprintln!("warning: no constant on the ladder keeps |u| >= 1/2; using {}", kc.time_constant),
        }
    }
    let r = nullform::knapp_run(&kc)?;
    let mut t = Table::new(&["t", "slab_min", "slab_max"]);
    for &(time, lo, hi) in &r.profile {
        t.push(out, vec![num(time), num(lo), num(hi)]);
    }
    let checks = vec![
        at_least("|u| >= 1/2 on the slab for |t| <= T", r.slab_min, 0.5),
        IdentityCheck { name: "slab max at |t| = 8T below half its t = 0 value".into(), defect: r.max_late / r.max_initial, tolerance: 0.5, passed: r.max_late < 0.5 * r.max_initial },
    ];
    println!("{} modes, T = {:.4e}, slab min {:.4}, max at 0 {:.4}, max at 8T {:.4}", r.modes, r.t_scale, r.slab_min, r.max_initial, r.max_late);
    report(&checks);
    out.write_table("knapp.csv", &t)?;
    out.write_json("knapp.json", &json!({ "config": kc, "calibrated_time_constant": calibrated, "report": r, "checks": checks }))?;
    Ok(Status::from_checks(&checks))
}

pub fn nullform(cfg: &NullformCli, out: &mut Output) -> AnyResult<Status> {
    let mut checks = Vec::new();
    let res = nullform::resonance_scan(cfg.d, cfg.samples, cfg.offset);
    checks.push(IdentityCheck::new("H via inner form", res.inner_defect, 1e-12));
    checks.push(IdentityCheck::new("H via outer form", res.outer_defect, 1e-12));
    checks.push(at_least("same-sign |H| / max|xi|", res.same_sign_min, 1.0 - 1e-12));
    let rep = build_gamma_rep(cfg.d)?;
    let spin = nullform::spinor_ratio_scan(&rep, cfg.samples, cfg.offset)?;
    checks.push(flag("spinor null ratio finite", spin.all_finite));
    checks.push(IdentityCheck {
        name: "spinor null ratio spread for theta <= 0.05".into(),
        defect: spin.small_angle.1 / spin.small_angle.0,
        tolerance: 2.0,
        passed: spin.small_angle.1 < 2.0 * spin.small_angle.0,
    });

    let mut gain = Table::new(&["symbol", "theta", "angle", "gain", "gain_over_theta"]);
    let mut verdicts = Vec::new();
    let symbols = [
        (NullSymbol::Model, nullform::MODEL_GAIN_BAND, true),
        (NullSymbol::Spinorial(build_gamma_rep(cfg.packet.d)?), nullform::SPINORIAL_GAIN_BAND, true),
        (NullSymbol::Trivial, nullform::MODEL_GAIN_BAND, false),
    ];
    for (sym, band, should_decay) in &symbols {
        let rows = nullform::angle_gain_scan(sym, &cfg.thetas, &cfg.packet)?;
        for r in &rows {
            gain.push(out, vec![r.symbol.into(), num(r.theta), num(r.angle), num(r.gain), num(r.gain_over_theta)]);
        }
        let v = nullform::gain_verdict(&rows, *band);
        if *should_decay {
            checks.push(flag(&format!("{} gain R/theta within band", v.symbol), v.in_band));
            checks.push(flag(&format!("{} gain decays with the angle", v.symbol), v.decays));
        } else {
            checks.push(flag(&format!("{} control fails the decay check", v.symbol), !v.decays));
        }
        verdicts.push(v);
    }

    let mut bil = Table::new(&["sweep", "ell_tilde", "k_prime", "ell_prime", "constant", "predicted", "tracking", "tail"]);
    let mut sweeps = serde_json::Map::new();
    let runs: [(&str, Vec<BilinearConfig>); 2] = [
        ("ell_tilde", cfg.ell_tilde.iter().map(|&l| BilinearConfig { ell_tilde: l, ..cfg.bilinear.clone() }).collect()),
        ("ell_prime", cfg.ell_prime.iter().map(|&l| BilinearConfig { ell_prime: l, ..cfg.bilinear.clone() }).collect()),
    ];
    for (name, configs) in runs {
        if configs.is_empty() {
            continue;
        }
        let rows: Vec<BilinearRow> = configs.iter().map(nullform::transversal_bilinear_l2).collect::<mdlab::Result<_>>()?;
        let track = nullform::tracking(&rows);
        for (r, tr) in rows.iter().zip(&track) {
            bil.push(out, vec![name.into(), int(r.ell_tilde), int(r.k_prime), int(r.ell_prime), num(r.constant), num(r.predicted), num(*tr), num(r.tail)]);
        }
        let ok = track.iter().all(|&x| (0.5..=2.0).contains(&x));
        println!("bilinear {name} sweep: tracking {track:?}");
        checks.push(flag(&format!("bilinear constants track the prediction ({name} sweep)"), ok));
        sweeps.insert(name.into(), json!({ "rows": rows, "tracking": track }));
    }

    report(&checks);
    out.write_table("nullform_gain.csv", &gain)?;
    out.write_table("nullform_bilinear.csv", &bil)?;
    out.write_json("nullform.json", &json!({ "resonance": res, "spinor_ratio": spin, "gain": verdicts, "bilinear": sweeps, "checks": checks }))?;
    Ok(Status::from_checks(&checks))
}
