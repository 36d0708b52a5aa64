//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

mod common;

use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use spinrelax::inference::{
    extract_rates, fit_power_law, fit_temperature_law, PowerLawModel, PowerLawPoint,
};
use spinrelax::io::verify_report;
use spinrelax::noise::{electric_noise, suppression, NoisePoint, NoiseSpectrum, Susceptibility};
use spinrelax::rate_dynamics::{
    evolve_analytic, evolve_numeric, f1_signal, f2_signal, rate_generator, simulate_protocol,
    InitPulse, Populations, Protocol, RateParams, ReadPulse, ReadoutModel,
};
use spinrelax::spin_model::{
    dq_splitting, dq_splitting_numeric, odmr_frequencies, odmr_frequencies_numeric, DefectParams,
    FieldConfig, PhysicalConstants,
};
use spinrelax::synth::{default_tau_grid, paired_f1_f2, AcquisitionConfig, DEFAULT_NOISE_SCALE};

// Tolerances and budgets.
const C1_ABS_TOL: f64 = 1e-9;
const C1_CASES: usize = 1000;
const C1_BUDGET: Duration = Duration::from_secs(5);
const C2_REL_TOL: f64 = 1e-9;
const C2_CASES: usize = 10_000;
const C2_BUDGET: Duration = Duration::from_secs(5);
const C3_OMEGA: f64 = 35.1;
const C3_GAMMA: f64 = 99.8;
const C3_SIGMA_OMEGA_REF: f64 = 2.7;
const C3_SIGMA_GAMMA_REF: f64 = 11.9;
const C3_SIGMA_BAND: f64 = 0.5;
const C3_SEEDS: u64 = 100;
const C3_MIN_COVERED: usize = 95;
const C3_BUDGET: Duration = Duration::from_secs(60);
const C4_SLOPE: f64 = 2.435;
const C4_TOL: f64 = 0.01;
const C4_BUDGET: Duration = Duration::from_secs(1);
const C5_EXPECTED: f64 = 3.125e5;
const C5_LINEAR_ULPS: f64 = 4.0;
const C6_TOL_MHZ: f64 = 1e-9;
const C6_GRID: usize = 100;
const C7_REL_TOL: f64 = 1e-4;
const C7_NOISE: f64 = 0.05;
const C7_SEEDS: u64 = 100;
const C7_MIN_COVERED: usize = 95;
const C7_BUDGET: Duration = Duration::from_secs(30);
const C8_TOL_PP: f64 = 0.1;
const C9_RK4_TOL: f64 = 1e-8;
const C9_EXPM_TOL: f64 = 1e-9;
const C9_CASES: usize = 500;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within_budget(elapsed: Duration, budget: Duration) -> Result<(), String> {
    check(elapsed <= budget, || {
        format!("took {elapsed:.2?}, budget {budget:.0?}")
    })
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..C1_CASES {
        let omega = rng.random_range(0.1..=1000.0);
        let gamma = rng.random_range(0.1..=1000.0);
        let tau = rng.random_range(0.0..=50.0);
        let r = rng.random_range(0.05..=2.0);
        let rates = RateParams::new(omega, gamma).map_err(err)?;
        let readout = ReadoutModel::new(r, rng.random_range(-0.5..=0.5), 1.0).map_err(err)?;
        let s = |i, rd| simulate_protocol(&Protocol::new(i, rd), &rates, &readout, tau);
        let f1 = s(InitPulse::PolarizeOnly, ReadPulse::Direct).map_err(err)?
            - s(InitPulse::PolarizeThenPiPlus, ReadPulse::Direct).map_err(err)?;
        let f2 = s(InitPulse::PolarizeThenPiPlus, ReadPulse::PiPlusThenRead).map_err(err)?
            - s(InitPulse::PolarizeThenPiPlus, ReadPulse::PiMinusThenRead).map_err(err)?;
        let e1 = r * (-3.0 * omega * tau * 1e-3).exp();
        let e2 = r * (-(2.0 * gamma + omega) * tau * 1e-3).exp();
        for (got, want) in [
            (f1, e1),
            (f2, e2),
            (f1_signal(&rates, &readout, tau).map_err(err)?, e1),
            (f2_signal(&rates, &readout, tau).map_err(err)?, e2),
        ] {
            worst = worst.max((got - want).abs());
        }
    }
    let elapsed = start.elapsed();
    check(worst <= C1_ABS_TOL, || format!("max deviation {worst:.3e}"))?;
    within_budget(elapsed, C1_BUDGET)?;
    Ok(format!(
        "{C1_CASES} cases, max |dev| {worst:.2e}, {elapsed:.2?}"
    ))
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha20Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..C2_CASES {
        let omega = rng.random_range(0.1..=1000.0);
        let gamma = rng.random_range(0.1..=1000.0);
        let g = rate_generator(&RateParams::new(omega, gamma).map_err(err)?);
        let m = [
            [g[(0, 0)], g[(0, 1)], g[(0, 2)]],
            [g[(1, 0)], g[(1, 1)], g[(1, 2)]],
            [g[(2, 0)], g[(2, 1)], g[(2, 2)]],
        ];
        let ev = common::jacobi3(&m);
        // ascending: two negative modes, then the zero mode
        let mut expected = [-3.0 * omega, -(omega + 2.0 * gamma)];
        expected.sort_by(f64::total_cmp);
        for k in 0..2 {
            worst = worst.max((ev[k] - expected[k]).abs() / expected[k].abs());
        }
        check(ev[2].abs() <= 1e-9 * (omega + gamma), || {
            format!("zero mode {}", ev[2])
        })?;
    }
    let elapsed = start.elapsed();
    check(worst <= C2_REL_TOL, || {
        format!("max relative deviation {worst:.3e}")
    })?;
    within_budget(elapsed, C2_BUDGET)?;
    Ok(format!(
        "{C2_CASES} pairs, max rel dev {worst:.2e}, {elapsed:.2?}"
    ))
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let rates = RateParams::new(C3_OMEGA, C3_GAMMA).map_err(err)?;
    let grid = default_tau_grid(rates.sq_mode_rate().min(rates.dq_mode_rate())).map_err(err)?;
    let mut covered = 0;
    let mut s_omega = Vec::new();
    let mut s_gamma = Vec::new();
    for seed in 0..C3_SEEDS {
        let acq = AcquisitionConfig {
            tau_grid: grid.clone(),
            shots: 1,
            noise_scale: DEFAULT_NOISE_SCALE,
            seed,
        };
        let (f1, f2) = paired_f1_f2(&rates, &ReadoutModel::default(), &acq).map_err(err)?;
        let est = extract_rates(&f1, &f2).map_err(err)?;
        if (est.omega - C3_OMEGA).abs() <= 3.0 * est.omega_sigma
            && (est.gamma - C3_GAMMA).abs() <= 3.0 * est.gamma_sigma
        {
            covered += 1;
        }
        s_omega.push(est.omega_sigma);
        s_gamma.push(est.gamma_sigma);
    }
    let median = |v: &mut Vec<f64>| {
        v.sort_by(f64::total_cmp);
        0.5 * (v[v.len() / 2 - 1] + v[v.len() / 2])
    };
    let (mo, mg) = (median(&mut s_omega), median(&mut s_gamma));
    let elapsed = start.elapsed();
    let in_band = |s: f64, r: f64| (s / r - 1.0).abs() <= C3_SIGMA_BAND;
    check(in_band(mo, C3_SIGMA_OMEGA_REF), || {
        format!("median sigma_Omega {mo:.2} kHz")
    })?;
    check(in_band(mg, C3_SIGMA_GAMMA_REF), || {
        format!("median sigma_gamma {mg:.2} kHz")
    })?;
    check(covered >= C3_MIN_COVERED, || {
        format!("{covered}/{C3_SEEDS} seeds within 3 sigma")
    })?;
    within_budget(elapsed, C3_BUDGET)?;
    Ok(format!(
        "median sigma (Omega, gamma) = ({mo:.2}, {mg:.2}) kHz, {covered}/{C3_SEEDS} within 3 sigma, {elapsed:.2?}"
    ))
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let inv_t1 = |omega: f64, gamma: f64| 3.0 * omega + gamma;
    let fit = fit_temperature_law(&[
        (296.0, inv_t1(40.73, 88.26)),
        (453.0, inv_t1(112.54, 255.6)),
    ])
    .map_err(err)?;
    let elapsed = start.elapsed();
    check((fit.exponent - C4_SLOPE).abs() <= C4_TOL, || {
        format!("exponent {}", fit.exponent)
    })?;
    within_budget(elapsed, C4_BUDGET)?;
    Ok(format!("exponent {:.4}, {elapsed:.2?}", fit.exponent))
}

fn criterion_5() -> Outcome {
    let sus = Susceptibility::new(0.4).map_err(err)?;
    let s = electric_noise(70.0, 20.0, &sus);
    check(s == C5_EXPECTED, || format!("S = {s:e}"))?;
    let double = electric_noise(120.0, 20.0, &sus);
    check(double == 2.0 * C5_EXPECTED, || {
        format!("2x excess gives {double:e}")
    })?;
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let x = rng.random_range(-100.0..1000.0);
        let a = rng.random_range(0.1..10.0);
        let one = electric_noise(x, 0.0, &sus);
        let scaled = electric_noise(a * x, 0.0, &sus);
        worst = worst.max((scaled - a * one).abs() / (a * one).abs());
    }
    check(worst <= C5_LINEAR_ULPS * f64::EPSILON, || {
        format!("linearity off by {worst:e} relative")
    })?;
    Ok(format!(
        "S(50 kHz) = {s:e} (V/m)^2/Hz, linearity {worst:.1e} relative"
    ))
}

fn criterion_6() -> Outcome {
    let params = DefectParams::default();
    let gmu = params.g_factor * PhysicalConstants::BOHR_MHZ_PER_GAUSS;
    let mut worst: f64 = 0.0;
    let mut worst_numeric: f64 = 0.0;
    for i in 0..C6_GRID {
        let b = 500.0 * i as f64 / (C6_GRID - 1) as f64;
        let field = FieldConfig::axial(b).map_err(err)?;
        let s = dq_splitting(&params, &field).map_err(err)?;
        worst = worst.max((s - 2.0 * params.e_gs.hypot(gmu * b)).abs());
        let sn = dq_splitting_numeric(&params, &field).map_err(err)?;
        let (a, n) = (
            odmr_frequencies(&params, &field).map_err(err)?,
            odmr_frequencies_numeric(&params, &field).map_err(err)?,
        );
        worst_numeric = worst_numeric
            .max((s - sn).abs())
            .max((a.nu_minus - n.nu_minus).abs())
            .max((a.nu_plus - n.nu_plus).abs());
    }
    let zero = dq_splitting(&params, &FieldConfig::axial(0.0).map_err(err)?).map_err(err)?;
    check(worst <= C6_TOL_MHZ, || {
        format!("closed form off by {worst:e} MHz")
    })?;
    check(worst_numeric <= C6_TOL_MHZ, || {
        format!("eigensolve off by {worst_numeric:e} MHz")
    })?;
    check(zero == 2.0 * params.e_gs, || format!("B = 0 gives {zero}"))?;
    Ok(format!(
        "{C6_GRID}-point grid, closed form {worst:.1e} MHz, eigensolve {worst_numeric:.1e} MHz, f(0) = 2E"
    ))
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let (a, p, g_inf, e) = (1e5, 2.0, 20.0, 48.0);
    let model = PowerLawModel { e_mhz: e };
    let freqs: Vec<f64> = (0..12).map(|i| 120.0 + 1080.0 * i as f64 / 11.0).collect();
    let clean: Vec<PowerLawPoint> = freqs
        .iter()
        .map(|&f| PowerLawPoint {
            f,
            gamma: model.gamma(f, a, p, g_inf),
            sigma: 0.0,
        })
        .collect();
    let fit = fit_power_law(&clean, e).map_err(err)?;
    let rel = [
        (fit.amplitude - a).abs() / a,
        (fit.exponent - p).abs() / p,
        (fit.gamma_inf - g_inf).abs() / g_inf,
    ];
    let worst = rel.iter().fold(0.0f64, |m, &x| m.max(x));
    check(worst <= C7_REL_TOL, || {
        format!("noiseless relative error {worst:e}")
    })?;

    let mut covered = [0usize; 3];
    for seed in 0..C7_SEEDS {
        let mut rng = ChaCha20Rng::seed_from_u64(7000 + seed);
        let pts: Vec<PowerLawPoint> = clean
            .iter()
            .map(|q| {
                let z: f64 = StandardNormal.sample(&mut rng);
                PowerLawPoint {
                    f: q.f,
                    gamma: q.gamma * (1.0 + C7_NOISE * z),
                    sigma: C7_NOISE * q.gamma,
                }
            })
            .collect();
        let fit = fit_power_law(&pts, e).map_err(err)?;
        let truth = [a, p, g_inf];
        for k in 0..3 {
            if (fit.fit.values[k] - truth[k]).abs() <= 3.0 * fit.fit.sigmas[k] {
                covered[k] += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    for (k, name) in ["A", "a", "gamma_inf"].iter().enumerate() {
        check(covered[k] >= C7_MIN_COVERED, || {
            format!("{name}: {}/{C7_SEEDS} within 3 sigma", covered[k])
        })?;
    }
    within_budget(elapsed, C7_BUDGET)?;
    Ok(format!(
        "noiseless rel err {worst:.1e}; 3 sigma coverage (A, a, gamma_inf) = {:?}/{C7_SEEDS}, {elapsed:.2?}",
        covered
    ))
}

fn criterion_8() -> Outcome {
    let freqs = [120.0, 180.0, 260.0, 400.0, 650.0, 1000.0];
    let raw = NoiseSpectrum::new(
        freqs
            .iter()
            .map(|&f| NoisePoint {
                f,
                s_e_perp: 3e7 / (f - 96.0).powf(1.7),
                sigma: 0.0,
            })
            .collect(),
        "raw",
    )
    .map_err(err)?;
    let mut parts = Vec::new();
    for (ratio, target) in [(0.533, 46.7), (0.682, 31.8)] {
        let rep = suppression(&raw, &raw.scaled(ratio)).map_err(err)?;
        let avg = rep.average.ok_or("no average")?;
        check((avg - target).abs() <= C8_TOL_PP, || {
            format!("ratio {ratio}: {avg}%")
        })?;
        parts.push(format!("{avg:.2}%"));
    }
    Ok(format!("averages {}", parts.join(", ")))
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(9);
    let (mut w_rk4, mut w_expm): (f64, f64) = (0.0, 0.0);
    for _ in 0..C9_CASES {
        let omega = rng.random_range(0.1..=1000.0);
        let gamma = rng.random_range(0.1..=1000.0);
        let tau = rng.random_range(0.01..=50.0);
        let raw: [f64; 3] = [rng.random(), rng.random(), rng.random()];
        let s: f64 = raw.iter().sum();
        let p = Populations::new(raw[0] / s, raw[1] / s, raw[2] / s).map_err(err)?;
        let rates = RateParams::new(omega, gamma).map_err(err)?;
        let a = evolve_analytic(&p, &rates, tau).map_err(err)?;
        let n = evolve_numeric(&p, &rates, tau, tau / 2000.0).map_err(err)?;
        let o = common::evolve_expm([p.p_minus, p.p_zero, p.p_plus], omega, gamma, tau);
        let av = [a.p_minus, a.p_zero, a.p_plus];
        let nv = [n.p_minus, n.p_zero, n.p_plus];
        for k in 0..3 {
            w_rk4 = w_rk4.max((av[k] - nv[k]).abs());
            w_expm = w_expm.max((av[k] - o[k]).abs());
        }
    }
    check(w_rk4 <= C9_RK4_TOL, || format!("RK4 off by {w_rk4:e}"))?;
    check(w_expm <= C9_EXPM_TOL, || {
        format!("matrix exponential off by {w_expm:e}")
    })?;
    Ok(format!(
        "{C9_CASES} cases, RK4 {w_rk4:.1e}, expm {w_expm:.1e}"
    ))
}

fn criterion_10() -> Outcome {
    let dir = std::env::temp_dir().join(format!("spinrelax-acceptance-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).map_err(err)?;
    let result = determinism_in(&dir);
    let _ = std::fs::remove_dir_all(&dir);
    result
}

fn determinism_in(dir: &PathBuf) -> Outcome {
    let run = |args: &[&str]| -> Result<(), String> {
        let out = Command::new(env!("CARGO_BIN_EXE_spinrelax"))
            .args(args)
            .current_dir(dir)
            .output()
            .map_err(err)?;
        check(out.status.success(), || {
            String::from_utf8_lossy(&out.stderr).into_owned()
        })
    };
    let read = |name: &str| std::fs::read(dir.join(name)).map_err(err);
    let sim = [
        "simulate",
        "--omega-khz",
        "35.1",
        "--gamma-khz",
        "99.8",
        "--seed",
        "1234",
        "--out-prefix",
        "run1",
    ];
    run(&sim)?;
    let first = (read("run1_f1.csv")?, read("run1_f2.csv")?);
    run(&sim)?;
    let second = (read("run1_f1.csv")?, read("run1_f2.csv")?);
    check(first == second, || "CSV differs between runs".into())?;

    run(&[
        "fit",
        "pair",
        "--f1",
        "run1_f1.csv",
        "--f2",
        "run1_f2.csv",
        "--out",
        "run1_fit.toml",
    ])?;
    let mut checked = 0;
    for report in ["run1_simulate.toml", "run1_fit.toml"] {
        let text = String::from_utf8(read(report)?).map_err(err)?;
        let checks = verify_report(&text, dir).map_err(err)?;
        check(!checks.is_empty(), || format!("{report} lists no digests"))?;
        for c in &checks {
            check(c.matches, || {
                format!("{report}: digest mismatch for {}", c.path)
            })?;
        }
        checked += checks.len();
    }
    Ok(format!(
        "byte-identical CSV over two runs, {checked} report digests verified"
    ))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("protocol identity", criterion_1),
        ("generator spectrum", criterion_2),
        ("rate round trip", criterion_3),
        ("temperature slope", criterion_4),
        ("electric noise arithmetic", criterion_5),
        ("ODMR closed form", criterion_6),
        ("power-law round trip", criterion_7),
        ("suppression targets", criterion_8),
        ("integrator cross-check", criterion_9),
        ("determinism", criterion_10),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
