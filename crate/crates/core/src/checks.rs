//! The invariant suite behind the `check` subcommand: small, fixed
//! instances of every module's core properties, each with a verdict.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::checkpoint::Checkpoint;
use crate::config::RunConfig;
use crate::error::Result;
use crate::evolve::{mg_steady_profile, ForcingSpec, NormRecorder, SimState, Stepper, Tracked};
use crate::mild::{mild_residual, picard_solve, PicardOptions};
use crate::multiplier::{smoothing_profile, symbol, PhysicalParams, SymbolTable};
use crate::spectral::{to_spectral, Grid, NormSpec, SpectralScalar};
use crate::stability::{
    sigma_bounds, sigma_star, sigma_star_cf, sigma_star_matrix, truncation_change, CfOutcome, StabilityProblem,
};

#[derive(Clone, Debug, Serialize)]
pub struct Verdict {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

type Outcome = Result<(bool, String)>;

/// `(name, check)` pairs in run order.
pub fn registry() -> Vec<(&'static str, fn() -> Outcome)> {
    vec![
        ("symbol: divergence-free, zero on k3 = 0, benchmark value", symbol_identities),
        ("symbol: two-order smoothing, inviscid growth", symbol_smoothing),
        ("spectral: transform round trip and Parseval", spectral_round_trip),
        ("multiplier: applied drift is divergence-free", drift_divergence),
        ("evolve: steady profile stays put", steady_state),
        ("evolve: L2 conserved without diffusion", l2_conservation),
        ("evolve: L2, L3, L6 non-increasing with diffusion", lp_monotone),
        ("evolve: damping alone gives exp(-ct)", damping_decay),
        ("evolve: fourth-order time convergence", time_order),
        ("stability: benchmark sandwich and truncation", eigen_sandwich),
        ("stability: continued fraction agrees with matrix", cf_vs_matrix),
        ("mild: Picard solve matches the time stepper", mild_vs_evolve),
        ("mild: single mode converges in one correction", mild_single_mode),
        ("io: config and checkpoint round trips", io_round_trips),
    ]
}

/// Runs every check, catching errors as failures.
pub fn run_all(mut progress: impl FnMut(&Verdict)) -> Vec<Verdict> {
    registry()
        .into_iter()
        .map(|(name, f)| {
            let start = Instant::now();
            let (passed, detail) = match f() {
                Ok(v) => v,
                Err(e) => (false, format!("error: {e}")),
            };
            let v = Verdict {
                name,
                passed,
                detail,
                seconds: start.elapsed().as_secs_f64(),
            };
            progress(&v);
            v
        })
        .collect()
}

/// Fixed-width verdict table.
pub fn format_table(verdicts: &[Verdict]) -> String {
    let width = verdicts.iter().map(|v| v.name.len()).max().unwrap_or(10);
    let mut s = format!("{:<width$}  {:<6}  {:>8}  detail\n", "check", "result", "seconds");
    for v in verdicts {
        s.push_str(&format!(
            "{:<width$}  {:<6}  {:>8.2}  {}\n",
            v.name,
            if v.passed { "PASS" } else { "FAIL" },
            v.seconds,
            v.detail
        ));
    }
    s
}

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

fn symbol_identities() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut k3_zero_ok = true;
    for eps_nu in [0.0, 0.1, 1.0] {
        let p = bench(eps_nu, 0.0);
        for k1 in -16i64..=16 {
            for k2 in -16i64..=16 {
                for k3 in -16i64..=16 {
                    let m = symbol([k1, k2, k3], &p).as_array();
                    if k3 == 0 {
                        k3_zero_ok &= m == [0.0; 3];
                        continue;
                    }
                    let dot = k1 as f64 * m[0] + k2 as f64 * m[1] + k3 as f64 * m[2];
                    let scale = ((k1 * k1 + k2 * k2 + k3 * k3) as f64).sqrt() * m.iter().map(|x| x * x).sum::<f64>().sqrt();
                    if scale > 0.0 {
                        worst = worst.max(dot.abs() / scale);
                    }
                }
            }
        }
    }
    let b = symbol([1, 1, 1], &bench(1.0, 0.0)).as_array();
    let expect = [-7.0 / 103.0, -13.0 / 103.0, 20.0 / 103.0];
    let bench_err = b.iter().zip(expect).map(|(a, e)| (a - e).abs()).fold(0.0, f64::max);
    Ok((
        worst <= 1e-14 && k3_zero_ok && bench_err <= 1e-15,
        format!("max |k·M|/(|k||M|) = {worst:.1e}, k3=0 zero: {k3_zero_ok}, benchmark error {bench_err:.1e}"),
    ))
}

fn symbol_smoothing() -> Outcome {
    let mut ok = true;
    let mut detail = Vec::new();
    for eps_nu in [0.1, 1.0] {
        let prof = smoothing_profile(&bench(eps_nu, 0.0), 64)?;
        let at64 = prof.rows[63].axis_value;
        let tail: Vec<f64> = prof.rows[15..].iter().map(|r| r.axis_value).collect();
        let monotone = tail.windows(2).all(|w| w[1] >= w[0]);
        ok &= (at64 - 1.0).abs() <= 0.1 && monotone;
        detail.push(format!("eps_nu={eps_nu}: value(64) = {at64:.4}, monotone {monotone}"));
    }
    let p = bench(0.0, 0.0);
    let m = |j: i64| symbol([j, (j as f64).sqrt().round() as i64, 1], &p).m3;
    let growth = m(64) / m(16);
    ok &= growth >= 1.5;
    detail.push(format!("inviscid growth 16→64: {growth:.3}"));
    Ok((ok, detail.join("; ")))
}

fn spectral_round_trip() -> Outcome {
    let g = Grid::new(16, 12, 20)?;
    let f = SpectralScalar::random_smooth(g, 5, 4.0, 1.0);
    let phys = f.to_physical();
    let back = to_spectral(&phys)?;
    let err = back.sub(&f).max_abs_coeff();
    let l2_phys = phys.lp_norm(2.0);
    let parseval = (l2_phys - f.l2_parseval()).abs() / f.l2_parseval();
    Ok((
        err <= 1e-15 && parseval <= 1e-13 && f.hermitian_defect() == 0.0,
        format!("round-trip error {err:.1e}, Parseval mismatch {parseval:.1e}"),
    ))
}

fn drift_divergence() -> Outcome {
    let g = Grid::cubic(16)?;
    let mut worst: f64 = 0.0;
    for eps_nu in [0.0, 0.5] {
        let table = SymbolTable::new(g, &bench(eps_nu, 0.1));
        let f = SpectralScalar::random_smooth(g, 11, 6.0, 1.0);
        worst = worst.max(table.apply(&f).divergence_defect());
    }
    Ok((worst <= 1e-13, format!("max |k·û| = {worst:.1e}")))
}

fn steady_state() -> Outcome {
    let g = Grid::cubic(32)?;
    let p = bench(1.0, 0.1);
    let theta0 = mg_steady_profile(g, &p)?;
    let mut st = SimState::new(theta0.clone(), p, ForcingSpec::MgSteady)?;
    let mut worst: f64 = 0.0;
    let mut obs = |_: f64, th: &SpectralScalar| -> Result<()> {
        worst = worst.max(th.sub(&theta0).max_abs_coeff());
        Ok(())
    };
    Stepper::for_state(&st)?.run(&mut st, 1.0, 0.01, 5, &mut [&mut obs])?;
    Ok((worst <= 1e-12, format!("max coefficient drift over [0, 1]: {worst:.1e}")))
}

fn l2_conservation() -> Outcome {
    let g = Grid::cubic(32)?;
    let p = bench(0.1, 0.0);
    let theta0 = SpectralScalar::random_smooth(g, 13, 2.5, 20.0);
    let mut st = SimState::new(theta0.clone(), p, ForcingSpec::None)?;
    Stepper::for_state(&st)?.run(&mut st, 1.0, 1e-3, 1000, &mut [])?;
    let rel = (st.theta.l2_parseval() - theta0.l2_parseval()).abs() / theta0.l2_parseval();
    Ok((rel <= 1e-6, format!("relative L2 change over unit time: {rel:.1e}")))
}

fn lp_monotone() -> Outcome {
    let g = Grid::cubic(32)?;
    let p = bench(1.0, 0.1);
    let theta0 = SpectralScalar::random_smooth(g, 4, 4.0, 1.0);
    let mut st = SimState::new(theta0, p, ForcingSpec::None)?;
    let mut rec = NormRecorder::new([2.0, 3.0, 6.0].map(|q| Tracked::Norm(NormSpec::lp(q))).to_vec());
    Stepper::for_state(&st)?.run(&mut st, 1.0, 0.01, 1, &mut [&mut rec])?;
    let mut worst: f64 = f64::NEG_INFINITY;
    for s in &rec.series {
        for w in s.values.windows(2) {
            worst = worst.max((w[1] - w[0]) / w[0]);
        }
    }
    Ok((
        worst <= 1e-9,
        format!("largest relative rise between samples: {worst:.1e} (100 samples, p = 2, 3, 6)"),
    ))
}

fn damping_decay() -> Outcome {
    let g = Grid::cubic(16)?;
    let p = PhysicalParams {
        damping_c: 0.7,
        ..bench(1.0, 0.0)
    };
    // a single mode is not advected by its own drift
    let theta0 = SpectralScalar::sine_mode(g, [1, 2, 3], 1.0)?;
    let mut st = SimState::new(theta0.clone(), p, ForcingSpec::None)?;
    Stepper::for_state(&st)?.run(&mut st, 1.0, 0.1, 10, &mut [])?;
    let expect = theta0.l2_parseval() * (-0.7f64).exp();
    let rel = (st.theta.l2_parseval() - expect).abs() / expect;
    Ok((rel <= 1e-12, format!("relative error against exp(-ct): {rel:.1e}")))
}

fn time_order() -> Outcome {
    let g = Grid::cubic(16)?;
    let p = bench(0.2, 0.05);
    let theta0 = SpectralScalar::random_smooth(g, 8, 3.0, 20.0);
    let solve = |dt: f64| -> Result<SpectralScalar> {
        let mut st = SimState::new(theta0.clone(), p, ForcingSpec::None)?;
        Stepper::for_state(&st)?.run(&mut st, 1.0, dt, usize::MAX, &mut [])?;
        Ok(st.theta)
    };
    let reference = solve(0.025 / 4.0)?;
    let e1 = solve(0.05)?.sub(&reference).l2_parseval();
    let e2 = solve(0.025)?.sub(&reference).l2_parseval();
    let ratio = e1 / e2;
    Ok((ratio >= 8.0, format!("error ratio on halving dt: {ratio:.2} (errors {e1:.1e}, {e2:.1e})")))
}

fn eigen_sandwich() -> Outcome {
    let prob = StabilityProblem::new(1, 1, bench(0.0, 0.0), 64)?;
    let b = sigma_bounds(&prob);
    let m = sigma_star_matrix(&prob)?;
    let CfOutcome::Root(r) = sigma_star_cf(&prob, b)? else {
        return Ok((false, "no unstable root found".into()));
    };
    let rel = (r.sigma - m.sigma).abs() / m.sigma;
    let change = truncation_change(&prob)?;
    let inside = b.lower < r.sigma && r.sigma < b.upper;
    let bounds_ok = (b.lower - 0.4).abs() < 1e-15 && (b.upper - 5.0).abs() < 1e-15;
    Ok((
        rel <= 1e-6 && inside && bounds_ok && change <= 1e-8,
        format!(
            "sigma* = {:.10} in [{}, {}], vs matrix {rel:.1e}, truncation doubling {change:.1e}",
            r.sigma, b.lower, b.upper
        ),
    ))
}

fn cf_vs_matrix() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut worst: f64 = 0.0;
    let mut agreed = 0;
    let n = 12;
    for _ in 0..n {
        let p = PhysicalParams {
            n_squared: rng.gen_range(0.5..2.0),
            eps_nu: rng.gen_range(0.0..0.5),
            eps_kappa: rng.gen_range(0.0..0.2),
            damping_c: 0.0,
            amplitude_a: rng.gen_range(1.0..20.0),
            forcing_m: 1,
        };
        let prob = StabilityProblem::new(rng.gen_range(1..6), rng.gen_range(1..6), p, 64)?;
        let m = sigma_star_matrix(&prob)?;
        match sigma_star(&prob)? {
            CfOutcome::Root(r) => {
                let rel = (r.sigma - m.sigma).abs() / m.sigma.abs();
                worst = worst.max(rel);
                if rel <= 1e-6 {
                    agreed += 1;
                }
            }
            CfOutcome::NoUnstableRoot => {
                if m.sigma <= 1e-8 {
                    agreed += 1;
                }
            }
        }
    }
    Ok((agreed == n, format!("{agreed}/{n} agree, worst relative gap {worst:.1e}")))
}

fn mild_data() -> Result<(SpectralScalar, PhysicalParams)> {
    let g = Grid::cubic(32)?;
    Ok((SpectralScalar::random_smooth(g, 21, 3.0, 1.0), bench(1.0, 0.1)))
}

fn mild_vs_evolve() -> Outcome {
    let (theta0, p) = mild_data()?;
    let opts = PicardOptions::default();
    let sol = picard_solve(&theta0, 1.0, &p, &opts)?;
    let mut st = SimState::new(theta0.clone(), p, ForcingSpec::None)?;
    Stepper::for_state(&st)?.run(&mut st, sol.horizon_t, 0.01, usize::MAX, &mut [])?;
    let rel = sol.final_field().sub(&st.theta).l2_parseval() / st.theta.l2_parseval();
    let residual = mild_residual(&sol, &theta0, &p)?;
    Ok((
        rel <= 1e-3 && residual <= 10.0 * opts.tol,
        format!(
            "T = {}, relative L2 gap {rel:.1e}, residual {residual:.1e}, {} iterations",
            sol.horizon_t, sol.iterations
        ),
    ))
}

fn mild_single_mode() -> Outcome {
    let g = Grid::cubic(16)?;
    let theta0 = SpectralScalar::sine_mode(g, [1, 0, 2], 1.0)?;
    let sol = picard_solve(&theta0, 1.0, &bench(1.0, 0.1), &PicardOptions::default())?;
    Ok((sol.iterations == 1, format!("{} iteration(s)", sol.iterations)))
}

fn io_round_trips() -> Outcome {
    let cfg = RunConfig::default();
    let config_ok = RunConfig::parse(&cfg.to_text())? == cfg;
    let c = Checkpoint {
        t: 0.25,
        params: bench(0.3, 0.01),
        theta: SpectralScalar::random_smooth(Grid::cubic(8)?, 2, 3.0, 1.0),
    };
    let back = Checkpoint::from_bytes(&c.to_bytes())?;
    let bits_ok = back
        .theta
        .coeffs
        .iter()
        .zip(&c.theta.coeffs)
        .all(|(a, b)| a.re.to_bits() == b.re.to_bits() && a.im.to_bits() == b.im.to_bits());
    Ok((
        config_ok && bits_ok && back.params == c.params,
        format!("config identical: {config_ok}, checkpoint bit-exact: {bits_ok}"),
    ))
}
