//! One pipeline per subcommand: compute, write artifacts, return checks.

use lattice_waves::beale::{
    amplitude_scan_with, auto_modes, critical_ripple_frequency, far_field_window, nanopteron_solve_with,
    ripple_measurement, AmplitudeRow, FourierProfile, NewtonOptions, ScanOptions,
};
use lattice_waves::dispersion::{
    classify_origin, critical_frequency, lambda_dispersion, lambda_pm, spectral_report,
    supersonic_real_root, RootReport,
};
use lattice_waves::invariants::nondegen_report;
use lattice_waves::profiles::{
    assemble_nanopteron, nu_from_eps, truncated_normalform_check, uniform_grid, Coordinate, NormalFormConstants,
    Parity, ProfileSpec,
};
use lattice_waves::simulate::{diagnostics, init_from_profile, integrate, kdv_residual_scan_with, profile_tracking_error, KdvOptions};
use lattice_waves::state_space::functionals::projection_from_functionals;
use lattice_waves::state_space::resolvent::pi0;
use lattice_waves::state_space::{apply_l0, gen_eigvec_chain, random_state, symmetry_apply, SymmetryKind};
use lattice_waves::{DimerKind, DimerParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::config::{Command, RunConfig};
use crate::output::{check_rows, ArtifactWriter, Check, CHECK_HEADER};
use crate::{row, CliError};

/// Result of one analysis.
#[derive(Debug, Clone, Default, Serialize)]
pub struct PipelineOutput {
    /// Embedded invariant checks.
    pub checks: Vec<Check>,
    /// Key numbers for the summary table.
    pub headlines: Vec<(String, f64)>,
}

impl PipelineOutput {
    fn check(&mut self, c: Check) {
        self.checks.push(c);
    }

    fn headline(&mut self, name: impl Into<String>, value: f64) {
        self.headlines.push((name.into(), value));
    }
}

/// Name fragment for a parameter value, e.g. `0.25`.
fn tag(x: f64) -> String {
    format!("{x}")
}

/// Run one analysis (not `full-report`) into `out`.
///
/// # Errors
/// Configuration errors, numerical failures of the library and I/O errors.
pub fn run_analysis(command: Command, rc: &RunConfig, out: &mut ArtifactWriter) -> Result<PipelineOutput, CliError> {
    let result = match command {
        Command::Dispersion => dispersion(rc, out),
        Command::Spectral => spectral(rc, out),
        Command::Nondegeneracy => nondegeneracy(rc, out),
        Command::Profile => profile(rc, out),
        Command::Beale => beale(rc, out),
        Command::Simulate => simulate(rc, out),
        Command::FullReport => unreachable!("full-report is composed by the caller"),
    }?;
    out.csv("checks", &CHECK_HEADER, check_rows(&result.checks))?;
    Ok(result)
}

#[derive(Serialize)]
struct MultiplicityEntry {
    root: &'static str,
    speed: f64,
    speed_over_sound_speed: f64,
    location: f64,
    multiplicity: usize,
    residual: f64,
}

fn entry(root: &'static str, speed: f64, cs: f64, r: &RootReport) -> MultiplicityEntry {
    MultiplicityEntry {
        root,
        speed,
        speed_over_sound_speed: speed / cs,
        location: r.location,
        multiplicity: r.multiplicity,
        residual: r.residual,
    }
}

fn dispersion(rc: &RunConfig, out: &mut ArtifactWriter) -> Result<PipelineOutput, CliError> {
    let p = &rc.params;
    let cfg = &rc.config.dispersion;
    let mut res = PipelineOutput::default();
    let report = spectral_report(p)?;
    let cs = report.sound_speed;
    let c_super = (cs * cs + cfg.supersonic_offset).sqrt();
    let origin_sonic = classify_origin(p, cs);
    let origin_super = classify_origin(p, c_super);
    let mut table = vec![entry("origin", cs, cs, &origin_sonic), entry("origin", c_super, cs, &origin_super)];
    if p.is_diatomic() {
        table.push(entry("omega_star", cs, cs, &critical_frequency(p, cs)?));
        table.push(entry("supersonic_real_root", c_super, cs, &supersonic_real_root(p, c_super)?));
    }
    out.json(
        "spectral_report",
        &json!({
            "params": p,
            "sound_speed": cs,
            "omega_star": report.omega_star.location,
            "front_decay_rate": report.front_decay_rate,
            "taylor_at_zero": report.taylor_at_zero,
            "origin": report.origin,
            "omega_star_root": report.omega_star,
            "multiplicity_table": table,
        }),
    )?;
    out.csv(
        "multiplicity",
        &["root", "speed", "speed_over_sound_speed", "location", "multiplicity", "residual"],
        table.iter().map(|e| row![e.root, e.speed, e.speed_over_sound_speed, e.location, e.multiplicity, e.residual]),
    )?;
    let ks: Vec<f64> =
        (0..cfg.points).map(|i| std::f64::consts::PI * i as f64 / (cfg.points - 1) as f64).collect();
    out.csv(
        "branches",
        &["k", "lambda_minus", "lambda_plus", "dispersion_at_sound_speed"],
        ks.iter().map(|&k| {
            let (lm, lp) = lambda_pm(k, p);
            row![k, lm, lp, lambda_dispersion(k, p, cs)]
        }),
    )?;
    res.headline("sound_speed", cs);
    res.headline("omega_star", report.omega_star.location);
    res.check(Check::equals("origin_multiplicity_at_sound_speed", origin_sonic.multiplicity, 4));
    res.check(Check::equals("origin_multiplicity_supersonic", origin_super.multiplicity, 2));
    if p.is_diatomic() {
        res.check(Check::equals("omega_star_multiplicity", report.omega_star.multiplicity, 1));
        res.check(Check::above("omega_star_positive", report.omega_star.location, 0.0));
    }
    Ok(res)
}

fn symmetry_kind(p: &DimerParams) -> Option<SymmetryKind> {
    match p.kind() {
        DimerKind::Mass | DimerKind::Monatomic => Some(SymmetryKind::MassDimer),
        DimerKind::Spring => Some(SymmetryKind::SpringDimer),
        DimerKind::General => None,
    }
}

fn spectral(rc: &RunConfig, out: &mut ArtifactWriter) -> Result<PipelineOutput, CliError> {
    let p = &rc.params;
    let tol = rc.config.spectral.check_tol;
    let mut res = PipelineOutput::default();
    let chain = gen_eigvec_chain(p);
    let xs = chain.as_array();
    let mut chain_residual = apply_l0(p, xs[0])?.sup_norm();
    for k in 0..3 {
        chain_residual = chain_residual.max(apply_l0(p, xs[k + 1])?.sub(xs[k]).sup_norm());
    }
    let parity = symmetry_kind(p).map(|kind| {
        xs.iter()
            .enumerate()
            .map(|(k, x)| {
                let sign = if k % 2 == 0 { -1.0 } else { 1.0 };
                symmetry_apply(kind, x).sub(&x.scale(sign)).sup_norm()
            })
            .fold(0.0, f64::max)
    });
    out.json("jordan_chain", &json!({ "chi0": xs[0], "chi1": xs[1], "chi2": xs[2], "chi3": xs[3] }))?;

    let mut rng = ChaCha8Rng::seed_from_u64(rc.config.seed);
    let degree = lattice_waves::cheb::DEFAULT_DEGREE;
    let mut rows = Vec::new();
    for sample in 0..rc.config.spectral.samples {
        let u = random_state(&mut rng, degree);
        let pu = pi0(p, &u)?;
        let idempotence = pi0(p, &pu)?.sub(&pu).sup_norm();
        let commutation = pi0(p, &apply_l0(p, &u)?)?.sub(&apply_l0(p, &pu)?).sup_norm();
        let agreement = projection_from_functionals(p, &u).sub(&pu).sup_norm();
        rows.push((sample, idempotence, commutation, agreement));
    }
    out.csv(
        "projection_checks",
        &["sample", "idempotence", "commutation", "functionals_vs_contour"],
        rows.iter().map(|&(s, a, b, c)| row![s, a, b, c]),
    )?;
    let worst = |f: fn(&(usize, f64, f64, f64)) -> f64| rows.iter().map(f).fold(0.0, f64::max);
    let (idem, comm, agree) = (worst(|r| r.1), worst(|r| r.2), worst(|r| r.3));
    out.json(
        "spectral",
        &json!({
            "params": p,
            "seed": rc.config.seed,
            "samples": rows.len(),
            "chain_residual": chain_residual,
            "parity_defect": parity,
            "max_idempotence_defect": idem,
            "max_commutation_defect": comm,
            "max_functionals_vs_contour": agree,
        }),
    )?;
    res.headline("chain_residual", chain_residual);
    res.headline("max_functionals_vs_contour", agree);
    res.check(Check::below("jordan_chain_residual", chain_residual, tol));
    if let Some(d) = parity {
        res.check(Check::below("chain_parity_defect", d, tol));
    }
    res.check(Check::below("projection_idempotence", idem, tol));
    res.check(Check::below("projection_commutes_with_l0", comm, tol));
    res.check(Check::below("functionals_match_contour_projection", agree, tol));
    Ok(res)
}

fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

fn nondegeneracy(rc: &RunConfig, out: &mut ArtifactWriter) -> Result<PipelineOutput, CliError> {
    let p = &rc.params;
    let mut res = PipelineOutput::default();
    let r = nondegen_report(p)?;
    out.json("nondegeneracy", &r)?;
    let opt = |v: Option<f64>| v.unwrap_or(f64::NAN);
    out.csv(
        "nondegeneracy",
        &[
            "kappa",
            "beta",
            "w",
            "lfrak0_closed",
            "lfrak0_oracle",
            "qfrak0_closed",
            "qfrak0_oracle",
            "normalization_ratio",
            "chi2_nl0_closed",
            "chi2_nl0_oracle",
            "d2j_closed",
            "d2j_oracle",
            "core_amplitude_from_constants",
            "core_amplitude_closed_form",
        ],
        [row![
            p.kappa,
            p.beta,
            p.w,
            r.lfrak0_closed,
            r.lfrak0_oracle,
            r.qfrak0_closed,
            r.qfrak0_oracle,
            r.normalization_ratio,
            r.chi2_nl0_closed,
            r.chi2_nl0_oracle,
            r.d2j_closed,
            r.d2j_oracle,
            opt(r.core_amplitude_from_constants),
            opt(r.core_amplitude_closed_form),
        ]],
    )?;
    res.headline("lfrak0", r.lfrak0_oracle);
    res.headline("qfrak0", r.qfrak0_oracle);
    res.check(Check::above("lfrak0_positive", r.lfrak0_oracle, 0.0));
    res.check(Check::above("qfrak0_nonzero", r.qfrak0_oracle.abs(), 0.0));
    res.check(Check::below("d2j_closed_vs_oracle", rel_diff(r.d2j_closed, r.d2j_oracle), 1e-6));
    res.check(Check::below(
        "chi2_nl0_closed_vs_oracle",
        (r.chi2_nl0_closed - r.chi2_nl0_oracle).abs(),
        1e-6 * (1.0 + r.chi2_nl0_oracle.abs()),
    ));
    Ok(res)
}

fn profile(rc: &RunConfig, out: &mut ArtifactWriter) -> Result<PipelineOutput, CliError> {
    let p = &rc.params;
    let cfg = &rc.config.profile;
    let mut res = PipelineOutput::default();
    let constants = NormalFormConstants::for_params(p)?;
    let t_grid = uniform_grid(20.0, 4001);
    let grid = uniform_grid(cfg.half_length, cfg.points);
    let mut summary = Vec::new();
    for &eps in &cfg.eps_list {
        let spec = ProfileSpec::new(eps, cfg.alpha, p.clone(), Coordinate::RelativeDisplacement)?;
        let prof = assemble_nanopteron(&spec, cfg.theta, &grid)?;
        let name = format!("profile_eps{}", tag(eps));
        out.csv(
            &name,
            &["X", "value_odd", "value_even"],
            (0..grid.len()).map(|i| row![grid[i], prof.values_odd[i], prof.values_even[i]]),
        )?;
        out.json(&name, &prof.metadata)?;
        let nf = truncated_normalform_check(nu_from_eps(p, eps), &t_grid, &constants, 0.0)?;
        let finite = prof.values_odd.iter().chain(&prof.values_even).all(|v| v.is_finite());
        let m = &prof.metadata;
        summary.push(row![
            eps,
            m.wave_speed,
            m.core_amplitude,
            m.decay_rate,
            m.stegoton_factor,
            m.frequency,
            nf.max_residual
        ]);
        res.check(Check::holds(format!("eps{}/values_finite", tag(eps)), finite));
        res.check(Check::below(format!("eps{}/normal_form_residual", tag(eps)), nf.max_residual, cfg.check_tol));
    }
    out.csv(
        "profiles",
        &["epsilon", "wave_speed", "core_amplitude", "decay_rate", "stegoton_factor", "ripple_frequency", "normal_form_residual"],
        summary,
    )?;
    // Amplitude and parity ratio of the core do not depend on eps.
    let spec = ProfileSpec::new(cfg.eps_list[0], cfg.alpha, p.clone(), Coordinate::RelativeDisplacement)?;
    res.headline("core_amplitude", spec.core_amplitude());
    res.headline("stegoton_factor", spec.stegoton_factor());
    Ok(res)
}

fn newton_options(rc: &RunConfig) -> NewtonOptions {
    NewtonOptions { tol: rc.config.tol, ..NewtonOptions::default() }
}

/// Solve on a single domain; the grid is chosen automatically unless given.
fn solve(nu: f64, l: f64, modes: Option<usize>, rc: &RunConfig) -> Result<FourierProfile, CliError> {
    let p = &rc.params;
    let modes = match modes {
        Some(m) => m,
        None => auto_modes(nu, l, p)?,
    };
    Ok(nanopteron_solve_with(nu, l, modes, p, &newton_options(rc))?)
}

fn write_profile(out: &mut ArtifactWriter, name: &str, prof: &FourierProfile, extra: serde_json::Value) -> Result<(), CliError> {
    let (x, r1, r2) = (prof.grid(), prof.values(Parity::Odd), prof.values(Parity::Even));
    out.csv(name, &["x", "rho1", "rho2"], (0..x.len()).map(|i| row![x[i], r1[i], r2[i]]))?;
    out.json(name, &extra)
}

fn beale(rc: &RunConfig, out: &mut ArtifactWriter) -> Result<PipelineOutput, CliError> {
    let p = &rc.params;
    let cfg = &rc.config.beale;
    let tol = rc.config.tol;
    let mut res = PipelineOutput::default();
    let scan = if cfg.scan && cfg.nu_list.len() >= 2 {
        let opts = ScanOptions {
            length_factor: cfg.length_factor,
            domains: cfg.domains,
            modes: cfg.modes,
            newton: newton_options(rc),
        };
        Some(amplitude_scan_with(&cfg.nu_list, p, &opts)?)
    } else {
        None
    };
    let mut rows = Vec::new();
    for (i, &nu) in cfg.nu_list.iter().enumerate() {
        let l = cfg.domain_half_length.unwrap_or(cfg.length_factor / nu);
        let prof = solve(nu, l, cfg.modes, rc)?;
        // Rescaled frequency and the ripple wavenumber in the lattice variable.
        let big_omega = critical_ripple_frequency(nu, p)?;
        let omega = nu * big_omega;
        let ripple = ripple_measurement(&prof, far_field_window(&prof))?;
        let refined = prof.refined_residual(2)?;
        let symmetry = prof.symmetry_defect();
        let fit: Option<&AmplitudeRow> = scan.as_ref().map(|s| &s.rows[i]);
        let name = format!("nanopteron_nu{}", tag(nu));
        write_profile(
            out,
            &name,
            &prof,
            json!({
                "nu": nu,
                "L": l,
                "modes": prof.modes,
                "wave_speed": prof.wave_speed,
                "residual": prof.residual,
                "refined_residual": refined,
                "symmetry_defect": symmetry,
                "symmetry": prof.symmetry,
                "ripple_amplitude": ripple.amplitude,
                "ripple_wavenumber": ripple.wavenumber,
                "critical_wavenumber": omega,
                "critical_ripple_frequency_rescaled": big_omega,
                "fit_data": fit,
            }),
        )?;
        rows.push(row![
            nu,
            l,
            prof.modes,
            prof.wave_speed,
            prof.residual,
            refined,
            symmetry,
            ripple.amplitude,
            ripple.wavenumber,
            omega,
            fit.map_or(f64::NAN, |r| r.amplitude),
            fit.map_or(f64::NAN, |r| r.fit_consistency)
        ]);
        let t = tag(nu);
        res.check(Check::at_most(format!("nu{t}/residual"), prof.residual, tol));
        res.check(Check::below(format!("nu{t}/refined_residual"), refined, 1e3 * tol.max(1e-11)));
        res.check(Check::below(format!("nu{t}/symmetry_defect"), symmetry, cfg.check_tol));
        let resolution = 2.0 * std::f64::consts::PI / l;
        res.check(Check::below(format!("nu{t}/ripple_wavenumber_offset"), (ripple.wavenumber - omega).abs(), resolution));
        res.headline(format!("nu{t}/ripple_amplitude"), ripple.amplitude);
    }
    out.csv(
        "nanopterons",
        &[
            "nu",
            "half_length",
            "modes",
            "wave_speed",
            "residual",
            "refined_residual",
            "symmetry_defect",
            "ripple_amplitude",
            "ripple_wavenumber",
            "critical_wavenumber",
            "minimal_ripple_amplitude",
            "fit_consistency",
        ],
        rows,
    )?;
    if let Some(scan) = &scan {
        out.json("amplitude_scan", scan)?;
        out.csv(
            "amplitude_scan",
            &["nu", "wavenumber", "domains_used", "minimal_amplitude", "fit_consistency", "max_residual"],
            scan.rows.iter().map(|r| {
                row![
                    r.nu,
                    r.wavenumber,
                    r.amplitudes.len(),
                    r.amplitude,
                    r.fit_consistency,
                    r.residuals.iter().copied().fold(0.0, f64::max)
                ]
            }),
        )?;
        let amps: Vec<f64> = scan.rows.iter().map(|r| r.amplitude).collect();
        res.check(Check::holds("minimal_amplitude_decreases_with_nu", amps.windows(2).all(|w| w[1] < w[0])));
        if let Some(order) = scan.algebraic_order {
            res.headline("algebraic_order", order);
        }
        if let Some(slope) = scan.exponential_slope {
            res.headline("exponential_slope", slope);
        }
    }
    Ok(res)
}

fn simulate(rc: &RunConfig, out: &mut ArtifactWriter) -> Result<PipelineOutput, CliError> {
    let p = &rc.params;
    let cfg = &rc.config.simulate;
    let mut res = PipelineOutput::default();
    let l = cfg.domain_half_length;
    let prof = solve(cfg.nu, l, cfg.modes, rc)?;
    let c = prof.wave_speed;
    let sites = 2 * ((l.floor() as usize).max(2));
    let state = init_from_profile(&prof, c, sites, p)?;
    let t_end = cfg.t_end.unwrap_or(50.0 / c);
    let trace = integrate(&state, cfg.dt, t_end, cfg.stride)?;
    let diag = diagnostics(&trace, c)?;
    let tracking = profile_tracking_error(&trace, &prof, c)?;
    out.csv(
        "trace",
        &["t", "j", "value"],
        trace.snapshots.iter().flat_map(|s| {
            (0..s.len()).step_by(cfg.site_stride).map(move |i| row![s.t, s.index(i), s.values[i]])
        }),
    )?;
    out.csv(
        "energy",
        &["t", "energy", "relative_drift", "shape_error", "profile_error", "stegoton_ratio"],
        (0..diag.times.len()).map(|i| {
            row![
                diag.times[i],
                trace.energy[i].1,
                diag.energy_drift[i],
                diag.shape_error[i],
                tracking.errors[i],
                diag.stegoton_ratio[i]
            ]
        }),
    )?;
    let max_shape = diag.shape_error.iter().copied().fold(0.0, f64::max);
    out.json(
        "diagnostics",
        &json!({
            "nu": cfg.nu,
            "half_length": l,
            "sites": sites,
            "modes": prof.modes,
            "wave_speed": c,
            "profile_residual": prof.residual,
            "dt": cfg.dt,
            "t_end": t_end,
            "max_shape_error": max_shape,
            "max_profile_error": tracking.max_error,
            "profile_fitted_speed": tracking.fitted_speed,
            "diagnostics": diag,
        }),
    )?;
    let opts = KdvOptions { dt: cfg.kdv_dt, ..KdvOptions::default() };
    let kdv = kdv_residual_scan_with(&cfg.eps_list, p, cfg.t0, &opts)?;
    out.json("kdv_scan", &kdv)?;
    out.csv(
        "kdv_scan",
        &["epsilon", "sites", "t_end", "discrepancy", "discrepancy_over_eps2", "energy_drift"],
        kdv.iter().map(|r| row![r.epsilon, r.sites, r.t_end, r.discrepancy, r.ratio, r.energy_drift]),
    )?;
    res.headline("max_shape_error", max_shape);
    res.headline("max_profile_error", tracking.max_error);
    res.headline("fitted_speed", tracking.fitted_speed);
    res.check(Check::below("energy_drift", trace.max_energy_drift, cfg.energy_tol));
    res.check(Check::below("max_profile_error", tracking.max_error, cfg.shape_tol));
    res.check(Check::below("fitted_speed_offset", (tracking.fitted_speed - c).abs(), 1e-3 * c));
    let mut by_eps: Vec<(f64, f64)> = kdv.iter().map(|r| (r.epsilon, r.ratio)).collect();
    by_eps.sort_by(|a, b| a.0.total_cmp(&b.0));
    if by_eps.len() >= 2 {
        res.check(Check::holds("kdv_discrepancy_ordered_in_eps", by_eps.windows(2).all(|w| w[0].1 < w[1].1)));
    }
    Ok(res)
}

/// Analyses composed by `full-report`, in order.
pub const REPORT_ORDER: [Command; 6] = [
    Command::Dispersion,
    Command::Spectral,
    Command::Nondegeneracy,
    Command::Profile,
    Command::Beale,
    Command::Simulate,
];

/// Run every analysis into its own subdirectory and write a summary.
/// Numerical failures of one analysis are recorded as failed checks and do
/// not stop the others.
///
/// # Errors
/// Configuration and I/O errors.
pub fn full_report(rc: &RunConfig, out: &mut ArtifactWriter) -> Result<(PipelineOutput, Vec<String>), CliError> {
    let mut total = PipelineOutput::default();
    let mut failures = Vec::new();
    for command in REPORT_ORDER {
        let name = command.name();
        let mut sub = out.subdir(name)?;
        match run_analysis(command, rc, &mut sub) {
            Ok(r) => {
                total.checks.extend(r.checks.into_iter().map(|c| c.scoped(name)));
                total.headlines.extend(r.headlines.into_iter().map(|(k, v)| (format!("{name}/{k}"), v)));
            }
            Err(CliError::Numerical(msg)) => {
                total.checks.push(Check::holds("completed", false).scoped(name));
                failures.push(format!("{name}: {msg}"));
            }
            Err(e) => return Err(e),
        }
        out.absorb(sub);
    }
    out.csv(
        "summary",
        &["analysis", "quantity", "value"],
        total.headlines.iter().map(|(k, v)| {
            let (analysis, quantity) = k.split_once('/').unwrap_or(("", k));
            row![analysis, quantity, *v]
        }),
    )?;
    out.csv("checks", &CHECK_HEADER, check_rows(&total.checks))?;
    out.json("summary", &json!({ "headlines": total.headlines, "checks": total.checks, "failures": failures }))?;
    Ok((total, failures))
}
