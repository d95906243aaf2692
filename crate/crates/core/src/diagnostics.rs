//! Time-series analysis: log-linear rate fits, the dissipation integral,
//! diffusivity sweeps and decay-envelope checks.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::evolve::{ForcingSpec, SimState, Stepper, Observer};
use crate::multiplier::PhysicalParams;
use crate::spectral::{NormSpec, SpectralScalar};

/// A sampled norm history.
#[derive(Clone, Debug, PartialEq)]
pub struct NormSeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub spec: NormSpec,
    pub label: String,
}

impl NormSeries {
    pub fn new(times: Vec<f64>, values: Vec<f64>, spec: NormSpec, label: impl Into<String>) -> Result<Self> {
        let s = Self {
            times,
            values,
            spec,
            label: label.into(),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.times.len() != self.values.len() {
            return Err(Error::InvalidSeries(format!(
                "{} times vs {} values",
                self.times.len(),
                self.values.len()
            )));
        }
        if self.times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidSeries("times must be strictly increasing".into()));
        }
        if self.values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidSeries("values must be finite and nonnegative".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Result of a least-squares fit of `log v` against `t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GrowthFit {
    pub rate: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub samples: usize,
}

/// Least-squares line through `(x, y)`: slope, intercept, R².
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
        syy += (b - my) * (b - my);
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, my - slope * mx, r2)
}

/// Exponential growth rate over `window = [t_a, t_b]`.
pub fn fit_growth_rate(series: &NormSeries, window: [f64; 2]) -> Result<GrowthFit> {
    let (t, v): (Vec<f64>, Vec<f64>) = series
        .times
        .iter()
        .zip(&series.values)
        .filter(|(t, _)| **t >= window[0] && **t <= window[1])
        .map(|(t, v)| (*t, *v))
        .unzip();
    if t.len() < 8 {
        return Err(Error::InvalidSeries(format!(
            "{} samples in window [{}, {}], need at least 8",
            t.len(),
            window[0],
            window[1]
        )));
    }
    if v.iter().any(|x| !(*x > 0.0)) {
        return Err(Error::InvalidSeries("nonpositive value in fit window".into()));
    }
    let logs: Vec<f64> = v.iter().map(|x| x.ln()).collect();
    let (rate, intercept, r_squared) = linear_fit(&t, &logs);
    Ok(GrowthFit {
        rate,
        intercept,
        r_squared,
        samples: t.len(),
    })
}

/// Trapezoidal `∫₀ᵀ ε_κ ‖∇θ‖²_{L²} dt` from a series of `‖∇θ‖_{L²}`.
pub fn dissipation_integral(grad_l2: &NormSeries, eps_kappa: f64, t_end: f64) -> Result<f64> {
    grad_l2.validate()?;
    if grad_l2.is_empty() {
        return Ok(0.0);
    }
    let mut acc = 0.0;
    for i in 1..grad_l2.len() {
        let (t0, t1) = (grad_l2.times[i - 1], grad_l2.times[i]);
        if t0 >= t_end {
            break;
        }
        let (v0, v1) = (grad_l2.values[i - 1].powi(2), grad_l2.values[i].powi(2));
        if t1 <= t_end {
            acc += 0.5 * (t1 - t0) * (v0 + v1);
        } else {
            let f = (t_end - t0) / (t1 - t0);
            let vm = v0 + f * (v1 - v0);
            acc += 0.5 * (t_end - t0) * (v0 + vm);
        }
    }
    Ok(eps_kappa * acc)
}

/// One row of a diffusivity sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub eps_kappa: f64,
    pub t: f64,
    pub distance: f64,
    pub dissipation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    /// Dissipation integral per diffusivity, in input order.
    pub dissipation: Vec<(f64, f64)>,
    /// Sample times at which distances were not monotone in `ε_κ`.
    pub non_monotone_times: Vec<f64>,
}

struct Snapshots<'a> {
    times: &'a [f64],
    fields: Vec<SpectralScalar>,
    grad: Vec<(f64, f64)>,
}

impl Observer for Snapshots<'_> {
    fn observe(&mut self, t: f64, theta: &SpectralScalar) -> Result<()> {
        self.grad.push((t, theta.gradient_norm(2.0)));
        if self
            .times
            .iter()
            .any(|s| (s - t).abs() <= 1e-9 * s.abs().max(1.0))
        {
            self.fields.push(theta.clone());
        }
        Ok(())
    }
}

fn sweep_run(
    theta0: &SpectralScalar,
    params: &PhysicalParams,
    t_end: f64,
    dt: f64,
    sample_times: &[f64],
) -> Result<(Vec<SpectralScalar>, f64)> {
    let mut state = SimState::new(theta0.clone(), *params, ForcingSpec::None)?;
    let mut stepper = Stepper::for_state(&state)?;
    let mut snaps = Snapshots {
        times: sample_times,
        fields: Vec::new(),
        grad: Vec::new(),
    };
    stepper.run(&mut state, t_end, dt, 1, &mut [&mut snaps])?;
    if snaps.fields.len() != sample_times.len() {
        return Err(invalid("sample_times", "every sample time must be a multiple of dt"));
    }
    let (t, g): (Vec<f64>, Vec<f64>) = snaps.grad.into_iter().unzip();
    let series = NormSeries::new(t, g, NormSpec::homogeneous(1.0, 2.0), "grad_L2")?;
    let diss = dissipation_integral(&series, params.eps_kappa, t_end)?;
    Ok((snaps.fields, diss))
}

/// Runs every `ε_κ` in `kappa_list` plus the `ε_κ = 0` reference from the
/// same data and reports L² distances at `sample_times` and the dissipation
/// integral over `[0, t_end]`.
pub fn kappa_sweep_compare(
    theta0: &SpectralScalar,
    template: &PhysicalParams,
    kappa_list: &[f64],
    t_end: f64,
    dt: f64,
    sample_times: &[f64],
) -> Result<SweepTable> {
    if kappa_list.is_empty() {
        return Err(invalid("kappa_list", "empty"));
    }
    if sample_times.iter().any(|s| !(*s > 0.0 && *s <= t_end)) {
        return Err(invalid("sample_times", "must lie in (0, t_end]"));
    }
    let reference = PhysicalParams {
        eps_kappa: 0.0,
        ..*template
    };
    let (ref_fields, _) = sweep_run(theta0, &reference, t_end, dt, sample_times)?;
    let mut rows = Vec::new();
    let mut dissipation = Vec::new();
    for &eps in kappa_list {
        let params = PhysicalParams {
            eps_kappa: eps,
            ..*template
        };
        let (fields, diss) = sweep_run(theta0, &params, t_end, dt, sample_times)?;
        dissipation.push((eps, diss));
        for ((t, f), r) in sample_times.iter().zip(&fields).zip(&ref_fields) {
            rows.push(SweepRow {
                eps_kappa: eps,
                t: *t,
                distance: f.sub(r).norm(NormSpec::lp(2.0)),
                dissipation: diss,
            });
        }
    }
    let mut non_monotone_times = Vec::new();
    for &t in sample_times {
        let mut at: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| r.t == t)
            .map(|r| (r.eps_kappa, r.distance))
            .collect();
        at.sort_by(|a, b| a.0.total_cmp(&b.0));
        if at.windows(2).any(|w| w[1].1 < w[0].1) {
            non_monotone_times.push(t);
        }
    }
    Ok(SweepTable {
        rows,
        dissipation,
        non_monotone_times,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EnvelopeReport {
    /// `sup t^{−exponent} v(t)` over the tail.
    pub bound: f64,
    /// Whether `t^{−exponent} v(t)` is non-increasing over the tail.
    pub monotone_tail: bool,
}

/// Checks `v(t) ≲ t^{exponent}` on the tail `t ≥ √(t_first t_last)`.
///
/// The compensated series `t^{−exponent} v(t)` is allowed a relative
/// rise of `1e−9` per sample before the tail counts as non-monotone.
pub fn decay_envelope_check(series: &NormSeries, exponent: f64) -> Result<EnvelopeReport> {
    series.validate()?;
    let positive: Vec<(f64, f64)> = series
        .times
        .iter()
        .zip(&series.values)
        .filter(|(t, _)| **t > 0.0)
        .map(|(t, v)| (*t, *v))
        .collect();
    if positive.len() < 2 {
        return Err(Error::InvalidSeries("need at least two samples with t > 0".into()));
    }
    let (t0, t1) = (positive[0].0, positive[positive.len() - 1].0);
    if t1 < 10.0 * t0 {
        return Err(Error::InvalidSeries("series must cover at least one decade".into()));
    }
    let split = (t0 * t1).sqrt();
    let tail: Vec<f64> = positive
        .iter()
        .filter(|(t, _)| *t >= split)
        .map(|(t, v)| t.powf(-exponent) * v)
        .collect();
    let bound = tail.iter().cloned().fold(0.0, f64::max);
    let monotone_tail = tail.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9));
    Ok(EnvelopeReport { bound, monotone_tail })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Grid;
    use std::f64::consts::PI;

    fn series(f: impl Fn(f64) -> f64, t0: f64, t1: f64, n: usize) -> NormSeries {
        let times: Vec<f64> = (0..n).map(|i| t0 + (t1 - t0) * i as f64 / (n - 1) as f64).collect();
        let values = times.iter().map(|t| f(*t)).collect();
        NormSeries::new(times, values, NormSpec::lp(2.0), "test").unwrap()
    }

    #[test]
    fn exact_exponential_fit() {
        let s = series(|t| (0.4 * t).exp(), 0.0, 5.0, 50);
        let fit = fit_growth_rate(&s, [0.0, 5.0]).unwrap();
        assert!((fit.rate - 0.4).abs() < 1e-13);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        let scaled = series(|t| 7.5 * (0.4 * t).exp(), 0.0, 5.0, 50);
        assert!((fit_growth_rate(&scaled, [0.0, 5.0]).unwrap().rate - fit.rate).abs() < 1e-13);
    }

    #[test]
    fn constant_and_perturbed_fits() {
        let c = series(|_| 3.0, 0.0, 1.0, 20);
        assert_eq!(fit_growth_rate(&c, [0.0, 1.0]).unwrap().rate, 0.0);
        let p = series(|t| (0.4 * t).exp() * (1.0 + 0.01 * (10.0 * t).sin()), 0.0, 10.0, 400);
        assert!((fit_growth_rate(&p, [0.0, 10.0]).unwrap().rate - 0.4).abs() < 0.01);
    }

    #[test]
    fn fit_rejects_bad_input() {
        let s = series(|t| t, 0.0, 1.0, 20);
        assert!(fit_growth_rate(&s, [0.0, 1.0]).is_err());
        assert!(fit_growth_rate(&s, [0.5, 0.6]).is_err());
        assert!(NormSeries::new(vec![0.0, 0.0], vec![1.0, 1.0], NormSpec::lp(2.0), "x").is_err());
        assert!(NormSeries::new(vec![0.0], vec![1.0, 1.0], NormSpec::lp(2.0), "x").is_err());
    }

    #[test]
    fn dissipation_closed_form_single_mode() {
        let eps = 0.3;
        let t_end = 1.0;
        let l2 = (2.0 * PI).powf(1.5) / 2f64.sqrt();
        let s = series(|t| (-eps * t).exp() * l2, 0.0, t_end, 256);
        let got = dissipation_integral(&s, eps, t_end).unwrap();
        let exact = (2.0 * PI).powi(3) / 2.0 * (1.0 - (-2.0 * eps * t_end).exp()) / 2.0;
        assert!((got - exact).abs() <= 1e-6 * exact);
    }

    #[test]
    fn dissipation_additive_and_zero() {
        let s = series(|t| 1.0 + t * t, 0.0, 2.0, 41);
        let whole = dissipation_integral(&s, 0.5, 2.0).unwrap();
        let first = dissipation_integral(&s, 0.5, 1.0).unwrap();
        let tail = NormSeries::new(s.times[20..].to_vec(), s.values[20..].to_vec(), s.spec, "tail").unwrap();
        let second = dissipation_integral(&tail, 0.5, 2.0).unwrap();
        assert!((whole - first - second).abs() < 1e-12 * whole);
        let z = series(|_| 0.0, 0.0, 1.0, 64);
        assert_eq!(dissipation_integral(&z, 0.1, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn envelope_examples() {
        let s = series(|t| t.powf(-0.5), 0.1, 10.0, 200);
        let r = decay_envelope_check(&s, -0.5).unwrap();
        assert!((r.bound - 1.0).abs() < 1e-12 && r.monotone_tail);
        let e = series(|t| (-t).exp(), 0.1, 10.0, 200);
        let r = decay_envelope_check(&e, -0.5).unwrap();
        assert!(r.bound.is_finite() && r.monotone_tail);
        let short = series(|t| t, 1.0, 2.0, 10);
        assert!(decay_envelope_check(&short, -0.5).is_err());
    }

    #[test]
    fn sweep_single_mode_closed_form() {
        let g = Grid::cubic(8).unwrap();
        let theta0 = SpectralScalar::sine_mode(g, [0, 0, 1], 1.0).unwrap();
        let p = PhysicalParams::default();
        let table = kappa_sweep_compare(&theta0, &p, &[0.1, 0.01, 0.0], 0.5, 0.05, &[0.25, 0.5]).unwrap();
        let l2 = (2.0 * PI).powf(1.5) / 2f64.sqrt();
        for r in &table.rows {
            let exact = (1.0 - (-r.eps_kappa * r.t).exp()) * l2;
            assert!((r.distance - exact).abs() <= 1e-12 * l2, "{r:?}");
        }
        assert!(table.non_monotone_times.is_empty());
        assert_eq!(table.dissipation[2].1, 0.0);
    }
}
