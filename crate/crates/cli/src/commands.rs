//! One function per verb. Each returns a [`Report`]; writing is done by the caller.

use serde_json::{json, Value};

use isac_core::acf::{eisl_empirical, lag_agreement, monte_carlo_profile, pslr, AcfProfile};
use isac_core::closed_form::{expected_doppler, expected_profile};
use isac_core::constellation::{moment_matrix, SymbolSource};
use isac_core::optimality::{
    control_check, doppler_duality_check, eisl_neighborhood_scan, verify_local_optimality, FIRST_DERIVATIVE_TOL,
    SECOND_DERIVATIVE_TOL,
};
use isac_core::parse::{parse_basis, parse_constellation};
use isac_core::ranging::{rmse_sweep, RangingScenario};
use isac_core::AcfMode;

use crate::grid::{parse_real_grid, parse_sizes, parse_targets, split_descriptors};
use crate::output::{num, Cell, Report, Table};
use crate::{AcfArgs, CliError, DopplerArgs, EislArgs, ModeArg, MomentsArgs, OptimalityArgs, RangingArgs};

/// Fewer agreeing lags than this flags an `acf` run as inconsistent.
const MIN_AGREEMENT: f64 = 0.95;
/// Below this many trials the standard errors are too noisy to judge agreement.
const MIN_TRIALS_FOR_CHECK: usize = 100;

fn db(v: f64) -> f64 {
    10.0 * v.log10()
}

/// Closed form is defined only for zero pseudo-variance alphabets.
fn closed_form(basis: &isac_core::UnitaryBasis, src: &SymbolSource, mode: AcfMode) -> Option<AcfProfile> {
    (!src.pseudo_variance_nonzero()).then(|| expected_profile(basis, src.kurtosis(), mode).to_profile())
}

pub fn acf(a: &AcfArgs) -> Result<Report, CliError> {
    let src = parse_constellation(&a.constellation)?;
    let mode: AcfMode = a.mode.into();
    let mut report = Report::default();
    report.set("kurtosis", num(src.kurtosis()));
    report.set("constellation", src.label());
    if src.pseudo_variance_nonzero() {
        report.set("note", "closed form omitted: constellation has nonzero pseudo-variance");
    }
    if let Some(sweep) = &a.sweep_n {
        let mut t = Table::new(vec![
            "n",
            "scheme",
            "pslr_empirical_db",
            "pslr_closed_form_db",
            "eisl_empirical",
            "eisl_closed_form",
        ]);
        for n in parse_sizes(sweep)? {
            let basis = parse_basis(&a.scheme, n)?;
            let emp = monte_carlo_profile(&basis, &src, mode, a.trials, a.seed)?;
            let cf = closed_form(&basis, &src, mode);
            t.push(vec![
                n.into(),
                basis.scheme().to_string().into(),
                pslr(&emp).into(),
                cf.as_ref().map(pslr).into(),
                eisl_empirical(&emp).into(),
                cf.as_ref().map(eisl_empirical).into(),
            ]);
        }
        report.table = Some(t);
        return Ok(report);
    }

    let basis = parse_basis(&a.scheme, a.n)?;
    let emp = monte_carlo_profile(&basis, &src, mode, a.trials, a.seed)?;
    let cf = closed_form(&basis, &src, mode);
    let mut t = Table::new(vec![
        "lag",
        "empirical",
        "stderr",
        "closed_form",
        "empirical_db",
        "closed_form_db",
    ]);
    let n = a.n as i64;
    let lags: Vec<i64> = if a.two_sided { (1 - n..n).collect() } else { (0..n).collect() };
    for lag in lags {
        // |r_{−k}| = |r_k| for both periodic and aperiodic correlations
        let k = lag.unsigned_abs() as usize;
        let c = cf.as_ref().map(|p| p.mean_sq[k]);
        t.push(vec![
            lag.into(),
            emp.mean_sq[k].into(),
            emp.stderr[k].into(),
            c.into(),
            db(emp.mean_sq[k]).into(),
            c.map(db).into(),
        ]);
    }
    report.set("scheme", basis.scheme().to_string());
    report.set("eisl_empirical", num(eisl_empirical(&emp)));
    report.set("pslr_empirical_db", num(pslr(&emp)));
    if let Some(c) = &cf {
        let frac = lag_agreement(&emp, c, 3.0);
        report.set("eisl_closed_form", num(eisl_empirical(c)));
        report.set("pslr_closed_form_db", num(pslr(c)));
        report.set("fraction_within_3se", num(frac));
        if a.trials >= MIN_TRIALS_FOR_CHECK && frac < MIN_AGREEMENT {
            report.violation = Some(format!(
                "only {:.1}% of lags agree with the closed form within 3 standard errors",
                100.0 * frac
            ));
        }
    }
    report.table = Some(t);
    Ok(report)
}

pub fn eisl(a: &EislArgs) -> Result<Report, CliError> {
    let schemes = split_descriptors(&a.schemes);
    let sources: Vec<SymbolSource> = split_descriptors(&a.constellations)
        .iter()
        .map(|c| parse_constellation(c))
        .collect::<Result<_, _>>()?;
    if let Some(s) = sources.iter().find(|s| s.pseudo_variance_nonzero()) {
        return Err(CliError::Usage(format!(
            "`{}` has nonzero pseudo-variance; the closed form does not apply",
            s.label()
        )));
    }
    let modes = match a.mode {
        Some(ModeArg::Doppler) => vec![AcfMode::DopplerPeriodic],
        Some(m) => vec![m.into()],
        None => vec![AcfMode::Periodic, AcfMode::Aperiodic],
    };
    let mut t = Table::new(vec![
        "n",
        "scheme",
        "constellation",
        "kurtosis",
        "mode",
        "eisl",
        "pslr_db",
        "mainlobe",
        "l4_objective",
    ]);
    let mut worst_gap = 0.0f64;
    for n in parse_sizes(&a.n)? {
        for s in &schemes {
            let basis = parse_basis(s, n)?;
            for src in &sources {
                for &mode in &modes {
                    let r = expected_profile(&basis, src.kurtosis(), mode);
                    worst_gap = worst_gap.max((r.summed_sidelobes() - r.eisl).abs() / r.eisl.abs().max(1.0));
                    t.push(vec![
                        n.into(),
                        basis.scheme().to_string().into(),
                        src.label().into(),
                        src.kurtosis().into(),
                        mode.to_string().into(),
                        r.eisl.into(),
                        pslr(&r.to_profile()).into(),
                        r.mainlobe.into(),
                        r.l4_objective.into(),
                    ]);
                }
            }
        }
    }
    report_with(t, |r| {
        r.set("max_route_gap", num(worst_gap));
        if worst_gap > 1e-8 {
            r.violation = Some(format!("per-lag sum and ℓ4 EISL disagree by {worst_gap:e} (relative)"));
        }
    })
}

fn report_with(t: Table, f: impl FnOnce(&mut Report)) -> Result<Report, CliError> {
    let mut r = Report {
        table: Some(t),
        ..Default::default()
    };
    f(&mut r);
    Ok(r)
}

pub fn doppler(a: &DopplerArgs) -> Result<Report, CliError> {
    let src = parse_constellation(&a.constellation)?;
    if src.pseudo_variance_nonzero() {
        return Err(CliError::Usage(format!("`{}` has nonzero pseudo-variance", src.label())));
    }
    let r = doppler_duality_check(a.n, &src, a.trials, a.seed)?;
    let cf = expected_doppler(&parse_basis("sc", a.n)?, src.kurtosis());
    let mut t = Table::new(vec![
        "lag",
        "sc_doppler",
        "sc_doppler_stderr",
        "ofdm_periodic",
        "ofdm_periodic_stderr",
        "closed_form",
    ]);
    for k in 0..a.n {
        t.push(vec![
            k.into(),
            r.sc_doppler.mean_sq[k].into(),
            r.sc_doppler.stderr[k].into(),
            r.ofdm_periodic.mean_sq[k].into(),
            r.ofdm_periodic.stderr[k].into(),
            cf.per_lag[k].into(),
        ]);
    }
    report_with(t, |rep| {
        rep.set("constellation", r.constellation.clone());
        rep.set("fraction_within_3se", num(r.fraction_within));
        rep.set("sc_is_lowest", r.sc_is_lowest);
        let eisl: serde_json::Map<String, Value> = r.doppler_eisl.iter().map(|(k, v)| (k.clone(), num(*v))).collect();
        rep.set("doppler_eisl", Value::Object(eisl));
        rep.set("pass", r.pass);
        if !r.pass {
            rep.violation = Some("single-carrier Doppler sidelobes do not mirror the OFDM periodic ACF".into());
        }
    })
}

pub fn moments(a: &MomentsArgs) -> Result<Report, CliError> {
    let mut t = Table::new(vec![
        "constellation",
        "points",
        "kurtosis",
        "class",
        "power",
        "mean_abs",
        "pseudo_variance_abs",
    ]);
    let mut matrices = serde_json::Map::new();
    let mut bad = Vec::new();
    for desc in split_descriptors(&a.constellations) {
        let src = parse_constellation(&desc)?;
        let row = match &src {
            SymbolSource::Alphabet(c) => {
                if (c.power() - 1.0).abs() > 1e-12 || c.kurtosis() < 1.0 - 1e-12 {
                    bad.push(c.label().to_string());
                }
                if let Some(n) = a.matrix_n {
                    if let Ok(m) = moment_matrix(c, n) {
                        let rows: Vec<Vec<f64>> = m.entries().row_iter().map(|r| r.iter().copied().collect()).collect();
                        matrices.insert(c.label().to_string(), json!(rows));
                    }
                }
                vec![
                    c.label().into(),
                    c.len().into(),
                    c.kurtosis().into(),
                    c.classify().to_string().into(),
                    c.power().into(),
                    c.mean().norm().into(),
                    c.pseudo_variance().norm().into(),
                ]
            }
            SymbolSource::Gaussian => vec![
                "gaussian".into(),
                Cell::Text(String::new()),
                src.kurtosis().into(),
                src.classify().to_string().into(),
                1.0.into(),
                0.0.into(),
                0.0.into(),
            ],
        };
        t.push(row);
    }
    report_with(t, |r| {
        if let Some(n) = a.matrix_n {
            r.set("matrix_n", n);
            r.set("moment_matrices", Value::Object(matrices));
        }
        if !bad.is_empty() {
            r.violation = Some(format!("moment checks failed for {}", bad.join(", ")));
        }
    })
}

pub fn optimality(a: &OptimalityArgs) -> Result<Report, CliError> {
    let s = verify_local_optimality(a.n, a.directions, a.seed)?;
    let mut r = Report::default();
    let mut pass = s.pass;
    r.set("n", s.n);
    r.set("directions", s.directions);
    r.set("step", num(s.step));
    r.set("f_identity", num(s.f_identity));
    r.set("max_abs_first_derivative", num(s.max_abs_first));
    r.set("max_second_derivative", num(s.max_second));
    r.set("first_derivative_tol", num(FIRST_DERIVATIVE_TOL * s.f_identity));
    r.set("second_derivative_tol", num(SECOND_DERIVATIVE_TOL * s.f_identity));
    if a.control {
        let c = control_check(a.n, a.directions, a.seed)?;
        r.set(
            "control",
            json!({ "f_base": num(c.f_base), "nonstationary_directions": c.nonstationary, "directions": c.directions }),
        );
    }
    if a.scan_samples > 0 {
        let scan = eisl_neighborhood_scan(a.n, a.scan_eps, a.scan_samples, a.seed)?;
        pass &= scan.ofdm_attains_min;
        let named: serde_json::Map<String, Value> = scan.named_eisl.iter().map(|(k, v)| (k.clone(), num(*v))).collect();
        r.set(
            "scan",
            json!({
                "perturbation_scale": num(scan.perturbation_scale),
                "samples": scan.samples,
                "ofdm_eisl": num(scan.ofdm_eisl),
                "min_perturbed_eisl": num(scan.min_perturbed_eisl),
                "named_eisl": named,
                "ofdm_attains_min": scan.ofdm_attains_min,
            }),
        );
    }
    r.set("pass", pass);
    if !pass {
        r.violation = Some("OFDM failed the local optimality check".into());
    }
    Ok(r)
}

pub fn ranging(a: &RangingArgs) -> Result<Report, CliError> {
    let basis = parse_basis(&a.scheme, a.n)?;
    let src = parse_constellation(&a.constellation)?;
    let cp = !a.no_cp;
    let mut scenario = RangingScenario::new(
        basis,
        src,
        a.bandwidth_hz,
        parse_targets(&a.targets)?,
        parse_real_grid(&a.snr_db)?,
        cp,
        a.trials,
        a.seed,
    )?;
    scenario.min_separation = a.min_separation;
    let table = rmse_sweep(&scenario)?;
    let mut t = Table::new(vec![
        "snr_db",
        "target",
        "rmse_m",
        "trials",
        "scheme",
        "constellation",
        "cp",
        "range_m",
        "mse_stderr",
    ]);
    let mut invalid = 0;
    for row in &table.rows {
        invalid += !(row.rmse_m.is_finite() && row.rmse_m >= 0.0) as usize;
        t.push(vec![
            row.snr_db.into(),
            row.target.into(),
            row.rmse_m.into(),
            row.trials.into(),
            table.scheme.clone().into(),
            table.constellation.clone().into(),
            table.cp.into(),
            row.range_m.into(),
            row.mse_stderr.into(),
        ]);
    }
    report_with(t, |r| {
        r.set("bin_width_m", num(table.bin_width_m));
        r.set("window_span_m", num(scenario.window_span_m()));
        if invalid > 0 {
            r.violation = Some(format!("{invalid} RMSE values are not finite and non-negative"));
        }
    })
}
