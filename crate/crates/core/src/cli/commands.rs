use std::path::{Path, PathBuf};

use super::{
    Cli, CliError, Command, DecayModelChoice, FitCommand, GridChoice, NoiseArgs, OdmrArgs,
    ProtocolChoice, RunConfig, SimulateArgs, SplittingChoice, SweepArgs, SweepQuantity,
};
use crate::inference::{
    extract_rates, fit_decay, fit_power_law, fit_temperature_law, DecayModel, FitResult,
    PowerLawModel,
};
use crate::io::{self, InputDigest, Report};
use crate::noise::{
    build_spectrum_with_plateau_error, electric_noise, suppression, Susceptibility,
};
use crate::rate_dynamics::{t1_conventional, t1_full, RateParams, ReadoutModel, KHZ_US};
use crate::spin_model::{DefectParams, FieldConfig, SplittingConvention};
use crate::synth::{
    generate_curve, linear_tau_grid, log_tau_grid, paired_f1_f2, AcquisitionConfig, CurveModel,
    DecayCurve, DEFAULT_NOISE_SCALE,
};

pub(super) fn dispatch(cli: &Cli) -> Result<(), CliError> {
    let cfg = cli.config.as_deref();
    match &cli.command {
        Command::Simulate(a) => simulate(cfg, a),
        Command::Fit(FitCommand::Decay(a)) => fit_decay_cmd(
            cfg,
            flags(&[
                ("in", a.input.as_ref().map(path_str)),
                ("model", a.model.map(|m| enum_str(&m))),
                ("out", a.out.as_ref().map(path_str)),
            ]),
        ),
        Command::Fit(FitCommand::Pair(a)) => fit_pair_cmd(
            cfg,
            flags(&[
                ("f1", a.f1.as_ref().map(path_str)),
                ("f2", a.f2.as_ref().map(path_str)),
                ("out", a.out.as_ref().map(path_str)),
            ]),
        ),
        Command::Fit(FitCommand::Powerlaw(a)) => fit_powerlaw_cmd(
            cfg,
            flags(&[
                ("in", a.input.as_ref().map(path_str)),
                ("e_mhz", a.e_mhz.map(|v| v.to_string())),
                ("out", a.out.as_ref().map(path_str)),
            ]),
        ),
        Command::Fit(FitCommand::Templaw(a)) => fit_templaw_cmd(
            cfg,
            flags(&[
                ("in", a.input.as_ref().map(path_str)),
                ("out", a.out.as_ref().map(path_str)),
            ]),
        ),
        Command::Noise(a) => noise_cmd(cfg, a),
        Command::Odmr(a) => odmr_cmd(cfg, a),
        Command::Sweep(a) => sweep_cmd(cfg, a),
    }
}

fn flags(pairs: &[(&'static str, Option<String>)]) -> Vec<(&'static str, String)> {
    pairs
        .iter()
        .filter_map(|(k, v)| v.clone().map(|v| (*k, v)))
        .collect()
}

fn path_str(p: impl AsRef<Path>) -> String {
    p.as_ref().display().to_string()
}

fn enum_str<T: clap::ValueEnum>(v: &T) -> String {
    v.to_possible_value()
        .map(|p| p.get_name().to_string())
        .unwrap_or_default()
}

fn parse_enum<T: clap::ValueEnum>(cfg: &RunConfig, key: &str, default: T) -> Result<T, CliError> {
    match cfg.raw(key) {
        None => Ok(default),
        Some(v) => T::from_str(v, true).map_err(|_| {
            let names: Vec<String> = T::value_variants().iter().map(enum_str).collect();
            CliError::input_key(key, format!("`{v}` is not one of {}", names.join("|")))
        }),
    }
}

/// Writes `text` to `path`, or stdout without one.
fn emit(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => {
            io::write_atomic(p, text.as_bytes()).map_err(|e| CliError::internal(e.to_string()))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read_input(role: &str, path: &Path) -> Result<(String, InputDigest), CliError> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::input_key(role, format!("{}: {e}", path.display())))?;
    let digest = InputDigest::of_bytes(role, path, &bytes);
    let text = String::from_utf8(bytes)
        .map_err(|_| CliError::input_key(role, format!("{} is not UTF-8", path.display())))?;
    Ok((text, digest))
}

fn out_path(cfg: &RunConfig) -> Option<PathBuf> {
    cfg.raw("out").map(PathBuf::from)
}

fn fit_table(fit: &FitResult) -> toml::Table {
    let mut t = toml::Table::new();
    t.insert("converged".into(), fit.converged.into());
    t.insert("iterations".into(), (fit.iterations as i64).into());
    t.insert("message".into(), fit.message.clone().into());
    t.insert("chi2".into(), fit.chi2.into());
    t.insert("chi2_reduced".into(), fit.chi2_reduced.into());
    let mut values = toml::Table::new();
    let mut sigmas = toml::Table::new();
    for (i, name) in fit.names.iter().enumerate() {
        values.insert(name.clone(), fit.values[i].into());
        sigmas.insert(name.clone(), fit.sigmas[i].into());
    }
    t.insert("params".into(), values.into());
    t.insert("sigmas".into(), sigmas.into());
    t.insert(
        "parameter_order".into(),
        toml::Value::Array(fit.names.iter().map(|n| n.clone().into()).collect()),
    );
    let cov: Vec<toml::Value> = (0..fit.covariance.nrows())
        .map(|r| {
            toml::Value::Array(
                (0..fit.covariance.ncols())
                    .map(|c| fit.covariance[(r, c)].into())
                    .collect(),
            )
        })
        .collect();
    t.insert("covariance".into(), toml::Value::Array(cov));
    t
}

const SIMULATE_KEYS: &[&str] = &[
    "protocol",
    "omega_khz",
    "gamma_khz",
    "amplitude",
    "baseline",
    "pulse_fidelity",
    "noise_scale",
    "shots",
    "seed",
    "grid",
    "tau_min_us",
    "tau_max_us",
    "points",
    "out_prefix",
];

fn simulate(cfg_file: Option<&Path>, a: &SimulateArgs) -> Result<(), CliError> {
    let cfg = RunConfig::resolve(
        cfg_file,
        flags(&[
            ("protocol", a.protocol.map(|p| enum_str(&p))),
            ("omega_khz", a.omega_khz.map(|v| v.to_string())),
            ("gamma_khz", a.gamma_khz.map(|v| v.to_string())),
            ("amplitude", a.amplitude.map(|v| v.to_string())),
            ("baseline", a.baseline.map(|v| v.to_string())),
            ("pulse_fidelity", a.pulse_fidelity.map(|v| v.to_string())),
            ("noise_scale", a.noise_scale.map(|v| v.to_string())),
            ("shots", a.shots.map(|v| v.to_string())),
            ("seed", a.seed.map(|v| v.to_string())),
            ("grid", a.grid.map(|g| enum_str(&g))),
            ("tau_min_us", a.tau_min_us.map(|v| v.to_string())),
            ("tau_max_us", a.tau_max_us.map(|v| v.to_string())),
            ("points", a.points.map(|v| v.to_string())),
            ("out_prefix", a.out_prefix.clone()),
        ]),
        SIMULATE_KEYS,
    )?;

    let protocol = parse_enum(&cfg, "protocol", ProtocolChoice::Pair)?;
    let non_negative = |v: f64| v >= 0.0;
    let omega = cfg.float("omega_khz", None, non_negative, ">= 0")?;
    let gamma = cfg.float("gamma_khz", None, non_negative, ">= 0")?;
    let amplitude = cfg.float("amplitude", Some(1.0), |v| v > 0.0, "> 0")?;
    let baseline = cfg.float("baseline", Some(0.0), |_| true, "finite")?;
    let fidelity = cfg.float(
        "pulse_fidelity",
        Some(1.0),
        |v| (0.0..=1.0).contains(&v),
        "in [0, 1]",
    )?;
    let noise_scale = cfg.float(
        "noise_scale",
        Some(DEFAULT_NOISE_SCALE),
        non_negative,
        ">= 0",
    )?;
    let shots: u32 = cfg.get_or("shots", 1)?;
    if shots == 0 {
        return Err(CliError::input_key("shots", "must be >= 1"));
    }
    let seed: u64 = cfg.require("seed")?;
    let points: usize = cfg.get_or("points", 32)?;
    if points < 2 {
        return Err(CliError::input_key("points", "must be >= 2"));
    }
    let prefix = cfg.raw("out_prefix").unwrap_or("run").to_string();

    let rates = RateParams::new(omega, gamma)?;
    let readout = ReadoutModel::new(amplitude, baseline, fidelity)?;
    let slowest = match protocol {
        ProtocolChoice::F1 => rates.sq_mode_rate(),
        ProtocolChoice::F2 => rates.dq_mode_rate(),
        ProtocolChoice::Pair => rates.sq_mode_rate().min(rates.dq_mode_rate()),
        ProtocolChoice::Single => 3.0 * rates.omega + rates.gamma,
    };
    let grid = parse_enum(&cfg, "grid", GridChoice::Log)?;
    let tau_max = match cfg.optional_float("tau_max_us", |v| v > 0.0, "> 0")? {
        Some(v) => v,
        None if slowest > 0.0 => 5.0 / (slowest * KHZ_US),
        None => {
            return Err(CliError::input_key(
                "tau_max_us",
                "required when the decay rate is zero",
            ))
        }
    };
    let tau_grid = match grid {
        GridChoice::Log => {
            let lo = cfg.float(
                "tau_min_us",
                Some(0.1),
                |v| v > 0.0 && v < tau_max,
                "in (0, tau_max_us)",
            )?;
            log_tau_grid(lo, tau_max, points)?
        }
        GridChoice::Linear => {
            let lo = cfg.float(
                "tau_min_us",
                Some(0.0),
                |v| v >= 0.0 && v < tau_max,
                "in [0, tau_max_us)",
            )?;
            linear_tau_grid(lo, tau_max, points)?
        }
    };
    let acq = AcquisitionConfig {
        tau_grid,
        shots,
        noise_scale,
        seed,
    };

    let curves: Vec<(&str, DecayCurve)> = match protocol {
        ProtocolChoice::F1 => vec![(
            "f1",
            generate_curve(CurveModel::F1, &rates, &readout, &acq)?,
        )],
        ProtocolChoice::F2 => vec![(
            "f2",
            generate_curve(CurveModel::F2, &rates, &readout, &acq)?,
        )],
        ProtocolChoice::Single => vec![(
            "single",
            generate_curve(CurveModel::SingleExp, &rates, &readout, &acq)?,
        )],
        ProtocolChoice::Pair => {
            let (f1, f2) = paired_f1_f2(&rates, &readout, &acq)?;
            vec![("f1", f1), ("f2", f2)]
        }
    };

    let mut report = Report::new("simulate", cfg.entries().clone());
    let mut curve_meta = toml::Table::new();
    for (tag, curve) in &curves {
        let path = PathBuf::from(format!("{prefix}_{tag}.csv"));
        let text = io::write_decay_csv(curve);
        emit(Some(&path), &text)?;
        report
            .outputs
            .push(InputDigest::of_bytes(tag, &path, text.as_bytes()));
        curve_meta.insert((*tag).to_string(), curve.meta.clone().into());
        println!("{}", path.display());
    }
    report.section("curves", curve_meta);
    let mut truth = toml::Table::new();
    truth.insert("omega_khz".into(), omega.into());
    truth.insert("gamma_khz".into(), gamma.into());
    truth.insert("point_sigma".into(), acq.point_sigma().into());
    report.section("truth", truth);
    let report_path = PathBuf::from(format!("{prefix}_simulate.toml"));
    emit(Some(&report_path), &report.to_toml())?;
    println!("{}", report_path.display());
    Ok(())
}

fn fit_decay_cmd(
    cfg_file: Option<&Path>,
    flags: Vec<(&'static str, String)>,
) -> Result<(), CliError> {
    let cfg = RunConfig::resolve(cfg_file, flags, &["in", "model", "out"])?;
    let path: PathBuf = cfg.require("in")?;
    let model = match parse_enum(&cfg, "model", DecayModelChoice::Exp)? {
        DecayModelChoice::Exp => DecayModel::SingleExp,
        DecayModelChoice::ExpOffset => DecayModel::SingleExpOffset,
    };
    let (text, digest) = read_input("in", &path)?;
    let curve = io::parse_decay_csv(&text, &path.display().to_string())?;
    let fit = fit_decay(&curve, model)?;

    let mut report = Report::new("fit decay", cfg.entries().clone());
    report.inputs.push(digest);
    report.section("fit", fit_table(&fit));
    emit(out_path(&cfg).as_deref(), &report.to_toml())
}

fn fit_pair_cmd(
    cfg_file: Option<&Path>,
    flags: Vec<(&'static str, String)>,
) -> Result<(), CliError> {
    let cfg = RunConfig::resolve(cfg_file, flags, &["f1", "f2", "out"])?;
    let p1: PathBuf = cfg.require("f1")?;
    let p2: PathBuf = cfg.require("f2")?;
    let (t1, d1) = read_input("f1", &p1)?;
    let (t2, d2) = read_input("f2", &p2)?;
    let c1 = io::parse_decay_csv(&t1, &p1.display().to_string())?;
    let c2 = io::parse_decay_csv(&t2, &p2.display().to_string())?;
    let est = extract_rates(&c1, &c2)?;

    let mut rates = toml::Table::new();
    rates.insert("omega_khz".into(), est.omega.into());
    rates.insert("omega_sigma_khz".into(), est.omega_sigma.into());
    rates.insert("gamma_khz".into(), est.gamma.into());
    rates.insert("gamma_sigma_khz".into(), est.gamma_sigma.into());
    rates.insert("gamma_raw_khz".into(), est.gamma_raw.into());
    rates.insert("unphysical".into(), est.unphysical.into());
    rates.insert("converged".into(), est.converged().into());
    let physical = RateParams {
        omega: est.omega.max(0.0),
        gamma: est.gamma,
    };
    if let Ok(t) = t1_full(&physical) {
        rates.insert("t1_full_us".into(), t.into());
    }
    if let Ok(t) = t1_conventional(&physical) {
        rates.insert("t1_conventional_us".into(), t.into());
    }

    let mut report = Report::new("fit pair", cfg.entries().clone());
    report.inputs.extend([d1, d2]);
    report.section("rates", rates);
    report.section("f1_fit", fit_table(&est.f1_fit));
    report.section("f2_fit", fit_table(&est.f2_fit));
    emit(out_path(&cfg).as_deref(), &report.to_toml())
}

fn fit_powerlaw_cmd(
    cfg_file: Option<&Path>,
    flags: Vec<(&'static str, String)>,
) -> Result<(), CliError> {
    let cfg = RunConfig::resolve(cfg_file, flags, &["in", "e_mhz", "out"])?;
    let path: PathBuf = cfg.require("in")?;
    let e_mhz = cfg.float(
        "e_mhz",
        Some(DefectParams::DEFAULT_E_MHZ),
        |v| v >= 0.0,
        ">= 0",
    )?;
    let (text, digest) = read_input("in", &path)?;
    let rows = io::parse_gamma_csv(&text, &path.display().to_string())?;
    for (line, e) in &rows {
        if e.f <= 2.0 * e_mhz {
            return Err(CliError::input(format!(
                "{}: line {line}: f_mhz = {} is not above 2E = {} MHz",
                path.display(),
                e.f,
                2.0 * e_mhz
            )));
        }
    }
    let fit = fit_power_law(&io::gamma_entries_to_points(&rows), e_mhz)?;

    let mut t = toml::Table::new();
    t.insert("amplitude".into(), fit.amplitude.into());
    t.insert("amplitude_sigma".into(), fit.amplitude_sigma().into());
    t.insert("exponent".into(), fit.exponent.into());
    t.insert("exponent_sigma".into(), fit.exponent_sigma().into());
    t.insert("gamma_inf_khz".into(), fit.gamma_inf.into());
    t.insert("gamma_inf_sigma_khz".into(), fit.gamma_inf_sigma().into());
    t.insert("e_mhz".into(), fit.e_used.into());
    t.insert("near_degenerate".into(), fit.near_degenerate.into());
    let mut report = Report::new("fit powerlaw", cfg.entries().clone());
    report.inputs.push(digest);
    report.section("power_law", t);
    report.section("fit", fit_table(&fit.fit));
    emit(out_path(&cfg).as_deref(), &report.to_toml())
}

fn fit_templaw_cmd(
    cfg_file: Option<&Path>,
    flags: Vec<(&'static str, String)>,
) -> Result<(), CliError> {
    let cfg = RunConfig::resolve(cfg_file, flags, &["in", "out"])?;
    let path: PathBuf = cfg.require("in")?;
    let (text, digest) = read_input("in", &path)?;
    let points = io::parse_temperature_csv(&text, &path.display().to_string())?;
    let fit = fit_temperature_law(&points)?;

    let mut t = toml::Table::new();
    t.insert("exponent".into(), fit.exponent.into());
    t.insert("exponent_sigma".into(), fit.exponent_sigma.into());
    t.insert("log_prefactor".into(), fit.log_prefactor.into());
    t.insert("log_prefactor_sigma".into(), fit.log_prefactor_sigma.into());
    t.insert("n_points".into(), (fit.n_points as i64).into());
    let mut report = Report::new("fit templaw", cfg.entries().clone());
    report.inputs.push(digest);
    report.section("temperature_law", t);
    emit(out_path(&cfg).as_deref(), &report.to_toml())
}

const NOISE_KEYS: &[&str] = &[
    "in",
    "gamma_inf_khz",
    "e_mhz",
    "susceptibility",
    "include_plateau_error",
    "compare_raw",
    "compare_coated",
    "out",
    "report",
];

fn noise_cmd(cfg_file: Option<&Path>, a: &NoiseArgs) -> Result<(), CliError> {
    let (raw, coated) = match a.compare.as_deref() {
        Some([r, c]) => (Some(path_str(r)), Some(path_str(c))),
        _ => (None, None),
    };
    let cfg = RunConfig::resolve(
        cfg_file,
        flags(&[
            ("in", a.input.as_ref().map(path_str)),
            ("gamma_inf_khz", a.gamma_inf_khz.map(|v| v.to_string())),
            ("e_mhz", a.e_mhz.map(|v| v.to_string())),
            ("susceptibility", a.susceptibility.map(|v| v.to_string())),
            (
                "include_plateau_error",
                a.include_plateau_error.then(|| "true".to_string()),
            ),
            ("compare_raw", raw),
            ("compare_coated", coated),
            ("out", a.out.as_ref().map(path_str)),
            ("report", a.report.as_ref().map(path_str)),
        ]),
        NOISE_KEYS,
    )?;

    if let (Some(raw), Some(coated)) = (cfg.raw("compare_raw"), cfg.raw("compare_coated")) {
        let (raw_path, coated_path) = (PathBuf::from(raw), PathBuf::from(coated));
        let (rt, rd) = read_input("compare_raw", &raw_path)?;
        let (ct, cd) = read_input("compare_coated", &coated_path)?;
        let raw_spec = io::parse_spectrum_csv(&rt, raw)?;
        let coated_spec = io::parse_spectrum_csv(&ct, coated)?;
        let sup = suppression(&raw_spec, &coated_spec)?;
        emit(
            out_path(&cfg).as_deref(),
            &io::write_suppression_csv(&sup.per_point),
        )?;
        match sup.average {
            Some(avg) => eprintln!("average_suppression_pct = {avg}"),
            None => eprintln!("average_suppression_pct = undefined (all raw points zero)"),
        }

        let mut t = toml::Table::new();
        if let Some(avg) = sup.average {
            t.insert("average_pct".into(), avg.into());
        }
        t.insert("points".into(), (sup.per_point.len() as i64).into());
        t.insert(
            "excluded_f_mhz".into(),
            toml::Value::Array(sup.excluded.iter().map(|&f| f.into()).collect()),
        );
        let mut report = Report::new("noise compare", cfg.entries().clone());
        report.inputs.extend([rd, cd]);
        report.section("suppression", t);
        if let Some(p) = cfg.raw("report") {
            emit(Some(Path::new(p)), &report.to_toml())?;
        }
        return Ok(());
    }
    if cfg.raw("compare_raw").is_some() != cfg.raw("compare_coated").is_some() {
        return Err(CliError::input_key(
            "compare_raw",
            "compare needs both compare_raw and compare_coated",
        ));
    }

    let path: PathBuf = cfg.require("in")?;
    let sus = Susceptibility::new(cfg.float(
        "susceptibility",
        Some(Susceptibility::DEFAULT_HZ_M_PER_V),
        |v| v > 0.0,
        "> 0",
    )?)?;
    let with_plateau_error: bool = cfg.get_or("include_plateau_error", false)?;
    let (text, digest) = read_input("in", &path)?;
    let rows = io::parse_gamma_csv(&text, &path.display().to_string())?;
    if rows.is_empty() {
        return Err(CliError::input_key(
            "in",
            format!("{} has no data rows", path.display()),
        ));
    }

    let mut report = Report::new("noise", cfg.entries().clone());
    report.inputs.push(digest);
    let (gamma_inf, gamma_inf_sigma) =
        match cfg.optional_float("gamma_inf_khz", |_| true, "finite")? {
            Some(v) => (v, 0.0),
            None => {
                let e = cfg.get::<f64>("e_mhz")?.ok_or_else(|| {
                    CliError::input_key("gamma_inf_khz", "give gamma_inf_khz or e_mhz to fit it")
                })?;
                let fit = fit_power_law(&io::gamma_entries_to_points(&rows), e)?;
                let mut t = toml::Table::new();
                t.insert("amplitude".into(), fit.amplitude.into());
                t.insert("exponent".into(), fit.exponent.into());
                t.insert("gamma_inf_khz".into(), fit.gamma_inf.into());
                t.insert("gamma_inf_sigma_khz".into(), fit.gamma_inf_sigma().into());
                t.insert("near_degenerate".into(), fit.near_degenerate.into());
                report.section("power_law", t);
                (fit.gamma_inf, fit.gamma_inf_sigma())
            }
        };
    let entries: Vec<_> = rows.iter().map(|(_, e)| *e).collect();
    let plateau_sigma = if with_plateau_error {
        gamma_inf_sigma
    } else {
        0.0
    };
    let spectrum = build_spectrum_with_plateau_error(&entries, gamma_inf, plateau_sigma, &sus)?;
    emit(
        out_path(&cfg).as_deref(),
        &io::write_spectrum_csv(&spectrum),
    )?;

    let mut t = toml::Table::new();
    t.insert("gamma_inf_khz".into(), gamma_inf.into());
    t.insert("susceptibility_hz_m_per_v".into(), sus.d_perp_over_h.into());
    t.insert("points".into(), (spectrum.len() as i64).into());
    t.insert(
        "unphysical_f_mhz".into(),
        toml::Value::Array(spectrum.unphysical_points().map(|p| p.f.into()).collect()),
    );
    report.section("spectrum", t);
    if let Some(p) = cfg.raw("report") {
        emit(Some(Path::new(p)), &report.to_toml())?;
    }
    Ok(())
}

fn defect_from(cfg: &RunConfig) -> Result<DefectParams, CliError> {
    let d = cfg.float(
        "d_mhz",
        Some(DefectParams::DEFAULT_D_MHZ),
        |v| v > 0.0,
        "> 0",
    )?;
    let e = cfg.float(
        "e_mhz",
        Some(DefectParams::DEFAULT_E_MHZ),
        |v| v >= 0.0,
        ">= 0",
    )?;
    let g = cfg.float(
        "g_factor",
        Some(DefectParams::DEFAULT_G),
        |v| v > 0.0,
        "> 0",
    )?;
    Ok(DefectParams::new(d, e)?.with_g_factor(g)?)
}

fn odmr_cmd(cfg_file: Option<&Path>, a: &OdmrArgs) -> Result<(), CliError> {
    let cfg = RunConfig::resolve(
        cfg_file,
        flags(&[
            ("d_mhz", a.d_mhz.map(|v| v.to_string())),
            ("e_mhz", a.e_mhz.map(|v| v.to_string())),
            ("g_factor", a.g_factor.map(|v| v.to_string())),
            ("b_gauss", a.b_gauss.map(|v| v.to_string())),
            ("polar_deg", a.polar_deg.map(|v| v.to_string())),
            ("azimuth_deg", a.azimuth_deg.map(|v| v.to_string())),
        ]),
        &[
            "d_mhz",
            "e_mhz",
            "g_factor",
            "b_gauss",
            "polar_deg",
            "azimuth_deg",
        ],
    )?;
    let params = defect_from(&cfg)?;
    let b = cfg.float("b_gauss", Some(0.0), |v| v >= 0.0, ">= 0")?;
    let polar = cfg.float("polar_deg", Some(0.0), |_| true, "finite")?;
    let azimuth = cfg.float("azimuth_deg", Some(0.0), |_| true, "finite")?;
    let field = FieldConfig::new(b, polar.to_radians(), azimuth.to_radians())?;
    let lines = crate::spin_model::odmr_frequencies(&params, &field)?;
    let f = crate::spin_model::dq_splitting(&params, &field)?;
    let bare = crate::spin_model::zeeman_splitting(&params, &field)?;
    println!("nu_minus_mhz = {}", lines.nu_minus);
    println!("nu_plus_mhz = {}", lines.nu_plus);
    println!("splitting_mhz = {f}");
    println!("zeeman_splitting_mhz = {bare}");
    Ok(())
}

const SWEEP_KEYS: &[&str] = &[
    "quantity",
    "b_min_gauss",
    "b_max_gauss",
    "points",
    "d_mhz",
    "e_mhz",
    "g_factor",
    "splitting",
    "amplitude",
    "exponent",
    "gamma_inf_khz",
    "susceptibility",
    "out",
];

fn sweep_cmd(cfg_file: Option<&Path>, a: &SweepArgs) -> Result<(), CliError> {
    let cfg = RunConfig::resolve(
        cfg_file,
        flags(&[
            ("quantity", a.quantity.map(|q| enum_str(&q))),
            ("b_min_gauss", a.b_min_gauss.map(|v| v.to_string())),
            ("b_max_gauss", a.b_max_gauss.map(|v| v.to_string())),
            ("points", a.points.map(|v| v.to_string())),
            ("d_mhz", a.d_mhz.map(|v| v.to_string())),
            ("e_mhz", a.e_mhz.map(|v| v.to_string())),
            ("g_factor", a.g_factor.map(|v| v.to_string())),
            ("splitting", a.splitting.map(|s| enum_str(&s))),
            ("amplitude", a.amplitude.map(|v| v.to_string())),
            ("exponent", a.exponent.map(|v| v.to_string())),
            ("gamma_inf_khz", a.gamma_inf_khz.map(|v| v.to_string())),
            ("susceptibility", a.susceptibility.map(|v| v.to_string())),
            ("out", a.out.as_ref().map(path_str)),
        ]),
        SWEEP_KEYS,
    )?;
    let quantity = parse_enum(&cfg, "quantity", SweepQuantity::Gamma)?;
    let convention = match parse_enum(&cfg, "splitting", SplittingChoice::Odmr)? {
        SplittingChoice::Odmr => SplittingConvention::Odmr,
        SplittingChoice::Zeeman => SplittingConvention::Zeeman,
    };
    let params = defect_from(&cfg)?;
    let b_min = cfg.float("b_min_gauss", Some(5.0), |v| v >= 0.0, ">= 0")?;
    let b_max = cfg.float("b_max_gauss", Some(250.0), |v| v > b_min, "> b_min_gauss")?;
    let points: usize = cfg.get_or("points", 50)?;
    if points < 2 {
        return Err(CliError::input_key("points", "must be >= 2"));
    }
    let amplitude = cfg.float("amplitude", Some(1e5), |v| v > 0.0, "> 0")?;
    let exponent = cfg.float("exponent", Some(2.0), |_| true, "finite")?;
    let gamma_inf = cfg.float("gamma_inf_khz", Some(20.0), |v| v >= 0.0, ">= 0")?;
    let sus = Susceptibility::new(cfg.float(
        "susceptibility",
        Some(Susceptibility::DEFAULT_HZ_M_PER_V),
        |v| v > 0.0,
        "> 0",
    )?)?;
    let model = PowerLawModel { e_mhz: params.e_gs };

    let header: [&str; 3] = match quantity {
        SweepQuantity::Gamma => ["b_gauss", "f_mhz", "gamma_khz"],
        SweepQuantity::Noise => ["b_gauss", "f_mhz", "s_e_perp"],
    };
    let mut rows = Vec::with_capacity(points);
    for i in 0..points {
        let b = b_min + (b_max - b_min) * i as f64 / (points - 1) as f64;
        let f = convention.splitting(&params, &FieldConfig::axial(b)?)?;
        if f <= 2.0 * params.e_gs {
            return Err(CliError::input_key(
                "b_min_gauss",
                format!("splitting {f} MHz at {b} G is not above 2E; raise the field"),
            ));
        }
        let gamma = model.gamma(f, amplitude, exponent, gamma_inf);
        let y = match quantity {
            SweepQuantity::Gamma => gamma,
            SweepQuantity::Noise => electric_noise(gamma, gamma_inf, &sus),
        };
        rows.push(vec![b, f, y]);
    }
    emit(
        out_path(&cfg).as_deref(),
        &io::write_table(&header, rows.into_iter()),
    )
}
