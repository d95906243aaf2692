//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails. Built with `harness = false` so the lines
//! show up in plain `cargo test` output.

use std::process::{Command, ExitCode};
use std::time::Instant;

use mgspectral::diagnostics::{decay_envelope_check, dissipation_integral, kappa_sweep_compare, NormSeries};
use mgspectral::evolve::{mg_steady_profile, ForcingSpec, NormRecorder, SimState, Stepper, Tracked};
use mgspectral::mild::{mild_residual, picard_solve, PicardOptions};
use mgspectral::multiplier::{smoothing_profile, symbol};
use mgspectral::stability::{
    growth_rate_crosscheck, regime_scan, sigma_bounds, sigma_star, sigma_star_cf, sigma_star_matrix, truncation_change,
    CaseId, CfOutcome, StabilityProblem,
};
use mgspectral::{Grid, NormSpec, PhysicalParams, SpectralScalar};

type Outcome = mgspectral::Result<(bool, String)>;

fn bench(eps_nu: f64, eps_kappa: f64) -> PhysicalParams {
    PhysicalParams {
        n_squared: 1.0,
        eps_nu,
        eps_kappa,
        damping_c: 0.0,
        amplitude_a: 10.0,
        forcing_m: 1,
    }
}

fn symbols() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut zero_plane = true;
    for eps_nu in [0.0, 0.1, 1.0] {
        let p = bench(eps_nu, 0.0);
        for k1 in -16i64..=16 {
            for k2 in -16i64..=16 {
                for k3 in -16i64..=16 {
                    let m = symbol([k1, k2, k3], &p).as_array();
                    if k3 == 0 {
                        zero_plane &= m == [0.0; 3];
                        continue;
                    }
                    let terms = [k1 as f64 * m[0], k2 as f64 * m[1], k3 as f64 * m[2]];
                    let scale: f64 = terms.iter().map(|x| x.abs()).sum();
                    if scale > 0.0 {
                        worst = worst.max(terms.iter().sum::<f64>().abs() / scale);
                    }
                }
            }
        }
    }
    let b = symbol([1, 1, 1], &bench(1.0, 0.0)).as_array();
    let expect = [-7.0 / 103.0, -13.0 / 103.0, 20.0 / 103.0];
    let bench_err = b.iter().zip(expect).map(|(a, e)| (a - e).abs()).fold(0.0, f64::max);
    Ok((
        worst <= 1e-14 && zero_plane && bench_err <= 1e-15,
        format!("divergence {worst:.1e}, zero on k3 = 0: {zero_plane}, benchmark error {bench_err:.1e}"),
    ))
}

fn smoothing() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for eps_nu in [0.1, 1.0] {
        let prof = smoothing_profile(&bench(eps_nu, 0.0), 64)?;
        let at64 = prof.rows[63].axis_value;
        let monotone = prof.rows[15..].windows(2).all(|w| w[1].axis_value >= w[0].axis_value);
        ok &= (at64 - 1.0).abs() <= 0.1 && monotone;
        parts.push(format!("eps_nu {eps_nu}: {at64:.4} at K = 64, monotone {monotone}"));
    }
    let p = bench(0.0, 0.0);
    let m3 = |j: i64| symbol([j, (j as f64).sqrt().round() as i64, 1], &p).m3;
    let growth = m3(64) / m3(16);
    ok &= growth >= 1.5;
    parts.push(format!("inviscid growth {growth:.3}"));
    Ok((ok, parts.join("; ")))
}

fn steady() -> Outcome {
    let g = Grid::cubic(32)?;
    let p = bench(1.0, 0.1);
    let theta0 = mg_steady_profile(g, &p)?;
    let scale = theta0.l2_parseval();
    let mut st = SimState::new(theta0.clone(), p, ForcingSpec::MgSteady)?;
    let mut worst: f64 = 0.0;
    let mut obs = |_: f64, th: &mgspectral::SpectralScalar| -> mgspectral::Result<()> {
        worst = worst.max(th.sub(&theta0).l2_parseval() / scale);
        Ok(())
    };
    Stepper::for_state(&st)?.run(&mut st, 1.0, 1e-2, 1, &mut [&mut obs])?;
    Ok((worst <= 1e-12, format!("largest relative deviation over [0, 1]: {worst:.1e}")))
}

fn conservation() -> Outcome {
    let g = Grid::cubic(32)?;
    let theta0 = SpectralScalar::random_smooth(g, 13, 2.5, 20.0);
    let mut st = SimState::new(theta0.clone(), bench(0.1, 0.0), ForcingSpec::None)?;
    Stepper::for_state(&st)?.run(&mut st, 1.0, 1e-3, usize::MAX, &mut [])?;
    let drift = (st.theta.l2_parseval() - theta0.l2_parseval()).abs() / theta0.l2_parseval();
    let moved = st.theta.sub(&theta0).l2_parseval() / theta0.l2_parseval();

    let mut st = SimState::new(theta0, bench(0.1, 0.1), ForcingSpec::None)?;
    let mut rec = NormRecorder::new(vec![Tracked::Norm(NormSpec::lp(2.0)), Tracked::Norm(NormSpec::lp(3.0))]);
    Stepper::for_state(&st)?.run(&mut st, 1.0, 1e-2, 1, &mut [&mut rec])?;
    let rise = rec
        .series
        .iter()
        .flat_map(|s| s.values.windows(2).map(|w| (w[1] - w[0]) / w[0]))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok((
        drift <= 1e-6 && rise <= 0.0,
        format!(
            "L2 drift without diffusion {drift:.1e} (field moved {:.0}%); largest L2/L3 rise with diffusion {rise:.1e}",
            100.0 * moved
        ),
    ))
}

fn sandwich() -> Outcome {
    let prob = StabilityProblem::new(1, 1, bench(0.0, 0.0), 64)?;
    let b = sigma_bounds(&prob);
    let m = sigma_star_matrix(&prob)?;
    let CfOutcome::Root(r) = sigma_star_cf(&prob, b)? else {
        return Ok((false, "continued fraction found no root".into()));
    };
    let gap = (r.sigma - m.sigma).abs() / m.sigma;
    let change = truncation_change(&prob)?;
    Ok((
        gap <= 1e-6 && b.lower < r.sigma && r.sigma < b.upper && change <= 1e-8,
        format!(
            "sigma* = {:.10} in [{}, {}], matrix gap {gap:.1e}, truncation doubling {change:.1e}",
            r.sigma, b.lower, b.upper
        ),
    ))
}

fn regimes() -> Outcome {
    let t = bench(0.0, 0.0);
    let ii = regime_scan(CaseId::II, &t, &[1e-1, 1e-2, 1e-3, 1e-4], None, None)?;
    let iii = regime_scan(CaseId::III, &t, &[1e-2, 1e-3, 1e-4], None, None)?;
    let iv = regime_scan(CaseId::IV, &t, &[1e-2, 1e-3, 1e-4], Some(2.0), None)?;
    let mut ratios = Vec::new();
    for j in [4i64, 8, 16] {
        let s = |j: i64| -> mgspectral::Result<f64> {
            let k2 = (j as f64).sqrt().round() as i64;
            let prob = StabilityProblem::new(j, k2, t, 64)?;
            Ok(sigma_star(&prob)?.sigma().unwrap_or(f64::NAN))
        };
        ratios.push(s(2 * j)? / s(j)?);
    }
    let ok_ii = (ii.fitted_exponent + 1.0).abs() <= 0.15;
    let ok_iii = (iii.fitted_exponent + 1.0 / 3.0).abs() <= 0.07;
    let ok_iv = iv.sigma_lower.iter().all(|l| *l < 0.0);
    let ok_i = ratios.iter().all(|r| (1.5..=2.5).contains(r));
    Ok((
        ok_ii && ok_iii && ok_iv && ok_i,
        format!(
            "case ii {:.3}, case iii {:.3}, case iv max lower bound {:.2e}, case i ratios {:.2?}",
            ii.fitted_exponent,
            iii.fitted_exponent,
            iv.sigma_lower.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            ratios
        ),
    ))
}

fn growth_crosscheck() -> Outcome {
    let prob = StabilityProblem::new(1, 1, bench(0.01, 0.01), 64)?;
    let c = growth_rate_crosscheck(&prob, Grid::cubic(64)?, 0.01, [2.0, 5.0])?;
    Ok((
        c.relative_error <= 0.05,
        format!(
            "fitted {:.5} vs sigma* {:.5} ({:.2}%), window [{}, {:.2}]",
            c.fitted_rate,
            c.sigma_star,
            100.0 * c.relative_error,
            c.window[0],
            c.window[1]
        ),
    ))
}

fn mild_equivalence() -> Outcome {
    let g = Grid::cubic(32)?;
    let p = bench(1.0, 0.1);
    let theta0 = SpectralScalar::random_smooth(g, 21, 3.0, 1.0);
    let opts = PicardOptions::default();
    let sol = picard_solve(&theta0, 1.0, &p, &opts)?;
    let mut st = SimState::new(theta0.clone(), p, ForcingSpec::None)?;
    Stepper::for_state(&st)?.run(&mut st, sol.horizon_t, 1e-2, usize::MAX, &mut [])?;
    let gap = sol.final_field().sub(&st.theta).l2_parseval() / st.theta.l2_parseval();
    let residual = mild_residual(&sol, &theta0, &p)?;
    let single = picard_solve(&SpectralScalar::sine_mode(g, [0, 0, 1], 1.0)?, 1.0, &p, &opts)?;
    Ok((
        sol.horizon_t <= 1.0 && gap <= 1e-3 && residual <= 10.0 * opts.tol && single.iterations == 1,
        format!(
            "T = {}, gap {gap:.1e}, residual {residual:.1e}, single mode {} correction(s)",
            sol.horizon_t, single.iterations
        ),
    ))
}

fn envelopes() -> Outcome {
    let g = Grid::cubic(16)?;
    let theta0 = SpectralScalar::random_smooth(g, 5, 3.0, 5.0);
    let specs = [(0.0, 4.0), (0.5, 4.0), (0.9, 6.0)];
    let mut tracked = vec![Tracked::Norm(NormSpec::lp(f64::INFINITY))];
    tracked.extend(specs.iter().map(|&(s, p)| Tracked::Norm(NormSpec::homogeneous(s, p))));
    let mut rec = NormRecorder::new(tracked);
    let mut st = SimState::new(theta0, bench(1.0, 0.1), ForcingSpec::None)?;
    Stepper::for_state(&st)?.run(&mut st, 60.0, 0.05, 10, &mut [&mut rec])?;
    // the envelope describes large times, so start at t = 1
    let tail = |s: &NormSeries| -> mgspectral::Result<NormSeries> {
        let (t, v): (Vec<f64>, Vec<f64>) = s
            .times
            .iter()
            .zip(&s.values)
            .filter(|(t, _)| **t >= 1.0)
            .map(|(t, v)| (*t, *v))
            .unzip();
        NormSeries::new(t, v, s.spec, s.label.clone())
    };
    let linf = decay_envelope_check(&tail(&rec.series[0])?, -0.5)?;
    let mut ok = linf.bound.is_finite() && linf.monotone_tail;
    let mut parts = vec![format!(
        "Linf: bound {:.3e}, monotone tail {}",
        linf.bound, linf.monotone_tail
    )];
    for (series, (s, p)) in rec.series[1..].iter().zip(specs) {
        let r = decay_envelope_check(&tail(series)?, -(s / 2.0 + 0.5 - 1.5 / p))?;
        let decays = series.values.last().unwrap() < &(1e-2 * series.values[0]);
        ok &= r.bound.is_finite() && decays;
        parts.push(format!("({s}, {p}): bound {:.3e}, decays {decays}", r.bound));
    }
    Ok((ok, parts.join("; ")))
}

fn vanishing_diffusivity() -> Outcome {
    let g = Grid::cubic(32)?;
    let theta0 = SpectralScalar::random_smooth(g, 9, 3.0, 1.0);
    let kappas = [1e-1, 1e-2, 1e-3, 1e-4];
    let table = kappa_sweep_compare(&theta0, &bench(1.0, 0.0), &kappas, 1.0, 1e-2, &[0.5])?;
    let diss: Vec<f64> = table.dissipation.iter().map(|d| d.1).collect();
    let decreasing = diss.windows(2).all(|w| w[1] < w[0]) && diss.iter().all(|d| *d > 0.0);
    let distances: Vec<f64> = table.rows.iter().map(|r| r.distance).collect();
    let monotone = distances.windows(2).all(|w| w[1] <= w[0]);

    // e^{-εt} sin x3: ε ∫ e^{-2εt} ‖∇ sin x3‖² dt = (2π)³/2 (1 − e^{−2εT}) / 2
    let eps = 0.1;
    let times: Vec<f64> = (0..=256).map(|i| i as f64 / 256.0).collect();
    let half = (2.0 * std::f64::consts::PI).powi(3) / 2.0;
    let grad: Vec<f64> = times.iter().map(|t| (half * (-2.0 * eps * t).exp()).sqrt()).collect();
    let series = NormSeries::new(times, grad, NormSpec::homogeneous(1.0, 2.0), "grad_L2")?;
    let got = dissipation_integral(&series, eps, 1.0)?;
    let exact = half * (1.0 - (-2.0 * eps).exp()) / 2.0;
    let closed = (got - exact).abs() / exact;
    Ok((
        decreasing && monotone && closed <= 1e-6,
        format!(
            "dissipation {}, distances at t = 0.5 {}, closed-form error {closed:.1e}",
            sci(&diss),
            sci(&distances)
        ),
    ))
}

fn sci(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn check_binary() -> Outcome {
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_mgspectral")).arg("check").output()?;
    let secs = start.elapsed().as_secs_f64();
    let stdout = String::from_utf8_lossy(&out.stdout);
    let summary = stdout.lines().last().unwrap_or("").to_string();
    Ok((out.status.success() && secs < 120.0, format!("{summary} (wall {secs:.1} s)")))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("symbol correctness", symbols),
        ("two-order smoothing", smoothing),
        ("steady state", steady),
        ("conservation and monotonicity", conservation),
        ("eigenvalue sandwich", sandwich),
        ("regime scalings", regimes),
        ("linear vs nonlinear growth", growth_crosscheck),
        ("mild solution equivalence", mild_equivalence),
        ("decay envelopes", envelopes),
        ("vanishing diffusivity", vanishing_diffusivity),
        ("check subcommand", check_binary),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (ok, detail) = f().unwrap_or_else(|e| (false, format!("error: {e}")));
        if !ok {
            failed += 1;
        }
        println!(
            "[{:>2}] {} {name}: {detail} ({:.1} s)",
            i + 1,
            if ok { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
