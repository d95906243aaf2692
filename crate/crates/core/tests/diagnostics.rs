use mgspectral::diagnostics::{decay_envelope_check, dissipation_integral, fit_growth_rate, kappa_sweep_compare, NormSeries};
use mgspectral::evolve::{run, ForcingSpec, SimState, Tracked};
use mgspectral::{Grid, NormSpec, PhysicalParams, SpectralScalar};
use proptest::prelude::*;
use std::f64::consts::PI;

fn sampled(f: impl Fn(f64) -> f64, t0: f64, t1: f64, n: usize) -> NormSeries {
    let times: Vec<f64> = (0..n).map(|i| t0 + (t1 - t0) * i as f64 / (n - 1) as f64).collect();
    let values = times.iter().map(|t| f(*t)).collect();
    NormSeries::new(times, values, NormSpec::lp(2.0), "sampled").unwrap()
}

#[test]
fn rate_of_a_pure_exponential() {
    let fit = fit_growth_rate(&sampled(|t| 2.0 * (0.4 * t).exp(), 0.0, 4.0, 41), [1.0, 3.0]).unwrap();
    assert!((fit.rate - 0.4).abs() < 1e-13);
    assert!((fit.intercept - 2f64.ln()).abs() < 1e-12);
    assert_eq!(fit.samples, 21);
}

#[test]
fn fit_needs_enough_positive_samples() {
    let s = sampled(|t| (t - 1.0).abs(), 0.0, 2.0, 21);
    assert!(fit_growth_rate(&s, [0.0, 2.0]).is_err());
    assert!(fit_growth_rate(&s, [1.2, 1.4]).is_err());
    assert!(fit_growth_rate(&s, [1.1, 2.0]).is_ok());
}

#[test]
fn dissipation_of_a_decaying_mode() {
    // ‖∇ sin x3‖² = |Ω|/2, decaying like e^{−2εt}
    let eps = 0.2;
    let half_volume = (2.0 * PI).powi(3) / 2.0;
    let s = sampled(|t| (half_volume * (-2.0 * eps * t).exp()).sqrt(), 0.0, 2.0, 256);
    let got = dissipation_integral(&s, eps, 2.0).unwrap();
    let exact = half_volume * (1.0 - (-2.0 * eps * 2.0f64).exp()) / 2.0;
    assert!((got - exact).abs() <= 1e-6 * exact, "{got} vs {exact}");
}

#[test]
fn dissipation_stops_at_the_horizon() {
    let s = sampled(|_| 1.0, 0.0, 1.0, 11);
    assert!((dissipation_integral(&s, 1.0, 0.55).unwrap() - 0.55).abs() < 1e-15);
    assert!((dissipation_integral(&s, 1.0, 5.0).unwrap() - 1.0).abs() < 1e-15);
}

#[test]
fn sweep_distance_for_a_single_mode() {
    let g = Grid::cubic(8).unwrap();
    let theta0 = SpectralScalar::sine_mode(g, [0, 0, 1], 1.0).unwrap();
    let kappas = [0.3, 0.1, 0.03];
    let table = kappa_sweep_compare(&theta0, &PhysicalParams::default(), &kappas, 1.0, 0.05, &[0.5, 1.0]).unwrap();
    let norm = theta0.norm(NormSpec::lp(2.0));
    for r in &table.rows {
        let exact = (1.0 - (-r.eps_kappa * r.t).exp()) * norm;
        assert!((r.distance - exact).abs() <= 1e-12 * norm, "{r:?}");
    }
    assert!(table.non_monotone_times.is_empty());
    let d: Vec<f64> = table.dissipation.iter().map(|x| x.1).collect();
    assert!(d[0] > d[1] && d[1] > d[2], "{d:?}");
}

#[test]
fn sweep_against_itself_is_zero() {
    let g = Grid::cubic(8).unwrap();
    let theta0 = SpectralScalar::random_smooth(g, 5, 3.0, 5.0);
    let p = PhysicalParams { eps_nu: 0.2, ..PhysicalParams::default() };
    let table = kappa_sweep_compare(&theta0, &p, &[0.0], 0.2, 0.02, &[0.2]).unwrap();
    assert_eq!(table.rows[0].distance, 0.0);
    assert_eq!(table.dissipation[0].1, 0.0);
}

#[test]
fn sweep_of_advected_data_is_monotone() {
    let g = Grid::cubic(16).unwrap();
    let theta0 = SpectralScalar::random_smooth(g, 3, 3.0, 10.0);
    let p = PhysicalParams { eps_nu: 0.1, ..PhysicalParams::default() };
    let table = kappa_sweep_compare(&theta0, &p, &[0.1, 0.01, 0.001], 0.5, 0.01, &[0.25, 0.5]).unwrap();
    assert!(table.non_monotone_times.is_empty(), "{table:?}");
    assert!(table.dissipation.iter().all(|d| d.1 > 0.0));
}

#[test]
fn sweep_rejects_unreachable_sample_times() {
    let g = Grid::cubic(8).unwrap();
    let theta0 = SpectralScalar::sine_mode(g, [0, 0, 1], 1.0).unwrap();
    let p = PhysicalParams::default();
    assert!(kappa_sweep_compare(&theta0, &p, &[0.1], 1.0, 0.1, &[2.0]).is_err());
    assert!(kappa_sweep_compare(&theta0, &p, &[0.1], 1.0, 0.1, &[0.55]).is_err());
    assert!(kappa_sweep_compare(&theta0, &p, &[], 1.0, 0.1, &[0.5]).is_err());
}

#[test]
fn envelope_of_inverse_square_root() {
    let r = decay_envelope_check(&sampled(|t| 3.0 / t.sqrt(), 0.05, 20.0, 400), -0.5).unwrap();
    assert!((r.bound - 3.0).abs() < 1e-12 && r.monotone_tail);
    // too slow a decay for the envelope
    let r = decay_envelope_check(&sampled(|t| t.powf(-0.25), 0.05, 20.0, 400), -0.5).unwrap();
    assert!(!r.monotone_tail);
}

#[test]
fn diffusive_run_respects_the_heat_envelope() {
    let g = Grid::cubic(16).unwrap();
    let p = PhysicalParams { eps_nu: 0.1, eps_kappa: 0.1, ..PhysicalParams::default() };
    let st = SimState::new(SpectralScalar::random_smooth(g, 7, 3.0, 5.0), p, ForcingSpec::None).unwrap();
    let (_, series) = run(&st, 20.0, 0.05, 4, vec![Tracked::Norm(NormSpec::lp(2.0))]).unwrap();
    let r = decay_envelope_check(&series[0], 0.0).unwrap();
    assert!(r.monotone_tail && r.bound <= 5.0 * (1.0 + 1e-9));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn dissipation_is_nonnegative_and_linear_in_eps(
        values in prop::collection::vec(0.0f64..10.0, 2..40),
        eps in 0.0f64..1.0,
    ) {
        let times: Vec<f64> = (0..values.len()).map(|i| 0.1 * i as f64).collect();
        let t_end = *times.last().unwrap();
        let s = NormSeries::new(times, values, NormSpec::homogeneous(1.0, 2.0), "grad").unwrap();
        let one = dissipation_integral(&s, 1.0, t_end).unwrap();
        let d = dissipation_integral(&s, eps, t_end).unwrap();
        prop_assert!(one >= 0.0);
        prop_assert!((d - eps * one).abs() <= 1e-14 * one.max(1.0));
    }

    #[test]
    fn fitted_rate_ignores_scale(rate in -2.0f64..2.0, scale in 1e-3f64..1e3) {
        let a = fit_growth_rate(&sampled(|t| (rate * t).exp(), 0.0, 3.0, 30), [0.0, 3.0]).unwrap();
        let b = fit_growth_rate(&sampled(|t| scale * (rate * t).exp(), 0.0, 3.0, 30), [0.0, 3.0]).unwrap();
        prop_assert!((a.rate - rate).abs() < 1e-12);
        prop_assert!((a.rate - b.rate).abs() < 1e-12);
    }
}
