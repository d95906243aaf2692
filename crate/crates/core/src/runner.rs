//! Subcommand drivers: each reads a [`RunConfig`], runs the experiment and
//! writes its artifacts (CSV, JSON, checkpoints) into an output directory.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::checkpoint::Checkpoint;
use crate::config::{fmt_f64, Forcing, InitialData, RunConfig};
use crate::diagnostics::kappa_sweep_compare;
use crate::error::{Error, Result};
use crate::evolve::{mg_steady_profile, steady_plus_perturbation, NormRecorder, Observer, SimState, Stepper};
use crate::mild::{mild_residual, picard_solve};
use crate::multiplier::PhysicalParams;
use crate::spectral::SpectralScalar;
use crate::stability::{
    case_params, sigma_bounds, sigma_star, sigma_star_matrix, upper_bound, CfOutcome, CaseId, StabilityProblem,
};

/// Text used in the `sigma_star` column when no positive root exists.
pub const NO_ROOT: &str = "no unstable real root";

/// Builds the initial field and start time for `cfg`.
pub fn initial_state(cfg: &RunConfig) -> Result<(SpectralScalar, f64)> {
    let grid = cfg.grid;
    let p = &cfg.params;
    Ok(match &cfg.initial {
        InitialData::SingleMode { mode, amplitude } => (SpectralScalar::sine_mode(grid, *mode, *amplitude)?, 0.0),
        InitialData::MgSteady => (mg_steady_profile(grid, p)?, 0.0),
        InitialData::MgSteadyPlusPerturbation { k1, k2 } => (steady_plus_perturbation(grid, p, *k1, *k2)?, 0.0),
        InitialData::RandomSmooth { seed, kmax, l2 } => (SpectralScalar::random_smooth(grid, *seed, *kmax, *l2), 0.0),
        InitialData::FromCheckpoint { path } => {
            let c = Checkpoint::load(path)?;
            if c.theta.grid != grid {
                return Err(Error::GridMismatch(format!(
                    "checkpoint {} is {:?}, config asks for {:?}",
                    path.display(),
                    c.theta.grid.dims(),
                    grid.dims()
                )));
            }
            (c.theta, c.t)
        }
    })
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        let cells: Vec<String> = r
            .iter()
            .map(|c| {
                if c.contains([',', '"', '\n']) {
                    format!("\"{}\"", c.replace('"', "\"\""))
                } else {
                    c.clone()
                }
            })
            .collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    std::fs::write(path, s)?;
    Ok(())
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.into()))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

fn params_json(p: &PhysicalParams) -> serde_json::Value {
    serde_json::to_value(p).expect("plain struct")
}

#[derive(Clone, Debug, Serialize)]
pub struct SimulateSummary {
    pub t_start: f64,
    pub t_final: f64,
    pub steps: usize,
    pub observations: usize,
    pub checkpoints: Vec<PathBuf>,
    pub cfl_warning: bool,
    pub wall_seconds: f64,
    /// Largest `|mean|` seen.
    pub mean_drift: f64,
    pub hermitian_defect: f64,
    /// `‖θ(T) − θ(0)‖ / ‖θ(0)‖` in L².
    pub relative_change: f64,
    /// L² never rose by more than `1e−9` relative between samples.
    pub l2_non_increasing: bool,
}

struct CheckpointWriter<'a> {
    dir: &'a Path,
    every: usize,
    seen: usize,
    params: PhysicalParams,
    written: Vec<PathBuf>,
    mean_drift: f64,
}

impl Observer for CheckpointWriter<'_> {
    fn observe(&mut self, t: f64, theta: &SpectralScalar) -> Result<()> {
        self.mean_drift = self.mean_drift.max(theta.mean().abs());
        if self.every > 0 && self.seen % self.every == 0 {
            let path = self.dir.join(format!("checkpoint_{:06}.mgsp", self.seen));
            Checkpoint {
                t,
                params: self.params,
                theta: theta.clone(),
            }
            .save(&path)?;
            self.written.push(path);
        }
        self.seen += 1;
        Ok(())
    }
}

/// `simulate`: norm series CSV, JSON summary, checkpoints. On a blow-up
/// the last finite state is saved as `last_finite.mgsp` before returning
/// the error.
pub fn simulate(cfg: &RunConfig, out: &Path) -> Result<SimulateSummary> {
    std::fs::create_dir_all(out)?;
    let start = Instant::now();
    let (theta0, t0) = initial_state(cfg)?;
    let mut state = SimState::new(theta0.clone(), cfg.params, cfg.run.forcing.spec())?;
    state.t = t0;
    let mut stepper = Stepper::for_state(&state)?;
    let mut rec = NormRecorder::new(cfg.run.track.clone());
    let mut ck = CheckpointWriter {
        dir: out,
        every: cfg.run.checkpoint_every,
        seen: 0,
        params: cfg.params,
        written: Vec::new(),
        mean_drift: 0.0,
    };
    let t_end = t0 + cfg.run.t_end;
    let outcome = stepper.run(&mut state, t_end, cfg.run.dt, cfg.run.every, &mut [&mut rec, &mut ck]);
    if let Err(e) = outcome {
        Checkpoint {
            t: state.t,
            params: cfg.params,
            theta: state.theta.clone(),
        }
        .save(&out.join("last_finite.mgsp"))?;
        return Err(e);
    }
    let final_path = out.join("final.mgsp");
    Checkpoint {
        t: state.t,
        params: cfg.params,
        theta: state.theta.clone(),
    }
    .save(&final_path)?;
    ck.written.push(final_path);

    let labels: Vec<String> = rec.series.iter().map(|s| s.label.clone()).collect();
    let mut header = vec!["t"];
    header.extend(labels.iter().map(String::as_str));
    let times = &rec.series[0].times;
    let rows: Vec<Vec<String>> = (0..times.len())
        .map(|i| {
            let mut r = vec![fmt_f64(times[i])];
            r.extend(rec.series.iter().map(|s| fmt_f64(s.values[i])));
            r
        })
        .collect();
    write_csv(&out.join("norms.csv"), &header, &rows)?;

    let l2_non_increasing = rec
        .series
        .iter()
        .find(|s| s.label == "norm_L2")
        .is_none_or(|s| s.values.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9)));
    let base = theta0.l2_parseval().max(f64::MIN_POSITIVE);
    let summary = SimulateSummary {
        t_start: t0,
        t_final: state.t,
        steps: ((cfg.run.t_end / cfg.run.dt) - 1e-9).ceil().max(1.0) as usize,
        observations: times.len(),
        checkpoints: ck.written.clone(),
        cfl_warning: state.cfl_warning,
        wall_seconds: start.elapsed().as_secs_f64(),
        mean_drift: ck.mean_drift,
        hermitian_defect: state.theta.hermitian_defect(),
        relative_change: state.theta.sub(&theta0).l2_parseval() / base,
        l2_non_increasing,
    };
    write_json(
        &out.join("summary.json"),
        &json!({
            "command": "simulate",
            "grid": cfg.grid.dims(),
            "params": params_json(&cfg.params),
            "preset": cfg.initial.preset_name(),
            "seed": match cfg.initial { InitialData::RandomSmooth { seed, .. } => Some(seed), _ => None },
            "forcing": match cfg.run.forcing { Forcing::None => "none", Forcing::MgSteady => "mg_steady" },
            "dt": cfg.run.dt,
            "t_end": cfg.run.t_end,
            "config": cfg.to_text(),
            "result": summary,
        }),
    )?;
    let mut axes = String::from("norms.csv: x = t (linear); y = each norm column (log scale).\n");
    // writing to a String cannot fail
    let _ = writeln!(axes, "columns: {}", header.join(", "));
    let _ = writeln!(axes, "growth or decay rates show as straight lines on the log axis.");
    std::fs::write(out.join("plot.txt"), axes)?;
    Ok(summary)
}

/// One line of the eigen/scan tables.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EigenRow {
    pub eps_nu: f64,
    pub eps_kappa: f64,
    pub k1: i64,
    pub k2: i64,
    pub sigma_lower: f64,
    /// `None` when there is no unstable real root.
    pub sigma_star: Option<f64>,
    pub sigma_upper: f64,
    pub n_max: usize,
    /// Galerkin residual of the truncated-matrix eigenpair.
    pub residual: f64,
}

pub const EIGEN_COLUMNS: [&str; 9] = [
    "eps_nu",
    "eps_kappa",
    "k1",
    "k2",
    "sigma_lower",
    "sigma_star",
    "sigma_upper",
    "n_max",
    "residual",
];

impl EigenRow {
    pub fn compute(k1: i64, k2: i64, params: PhysicalParams, n_max: usize) -> Result<Self> {
        let prob = StabilityProblem::new(k1, k2, params, n_max)?;
        let bounds = sigma_bounds(&prob);
        let sigma = match sigma_star(&prob)? {
            CfOutcome::Root(r) => Some(r.sigma),
            CfOutcome::NoUnstableRoot => None,
        };
        Ok(Self {
            eps_nu: params.eps_nu,
            eps_kappa: params.eps_kappa,
            k1,
            k2,
            sigma_lower: bounds.lower,
            sigma_star: sigma,
            sigma_upper: bounds.upper,
            n_max,
            residual: sigma_star_matrix(&prob)?.residual,
        })
    }

    fn cells(&self) -> Vec<String> {
        vec![
            fmt_f64(self.eps_nu),
            fmt_f64(self.eps_kappa),
            self.k1.to_string(),
            self.k2.to_string(),
            fmt_f64(self.sigma_lower),
            self.sigma_star.map_or(NO_ROOT.to_string(), fmt_f64),
            fmt_f64(self.sigma_upper),
            self.n_max.to_string(),
            fmt_f64(self.residual),
        ]
    }
}

/// `eigen`: one row for `(k1, k2)`, or the whole box sorted by `σ*`
/// (largest first, rows without a root last).
pub fn eigen(cfg: &RunConfig, out: &Path) -> Result<Vec<EigenRow>> {
    std::fs::create_dir_all(out)?;
    let e = &cfg.eigen;
    let pairs: Vec<(i64, i64)> = match (e.box_k1, e.box_k2) {
        (Some(a), Some(b)) => (a[0]..=a[1])
            .flat_map(|k1| (b[0]..=b[1]).map(move |k2| (k1, k2)))
            .filter(|&(k1, k2)| k1 != 0 || k2 != 0)
            .collect(),
        _ => vec![(e.k1, e.k2)],
    };
    let mut rows = pairs
        .par_iter()
        .map(|&(k1, k2)| EigenRow::compute(k1, k2, cfg.params, e.n_max))
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| {
        let key = |r: &EigenRow| r.sigma_star.unwrap_or(f64::NEG_INFINITY);
        key(b).total_cmp(&key(a)).then((a.k1, a.k2).cmp(&(b.k1, b.k2)))
    });
    let cells: Vec<Vec<String>> = rows.iter().map(EigenRow::cells).collect();
    write_csv(&out.join("eigen.csv"), &EIGEN_COLUMNS, &cells)?;
    Ok(rows)
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanSummary {
    pub case: String,
    pub alpha: Option<f64>,
    pub rows: Vec<EigenRow>,
    pub fitted_exponent: f64,
    pub warnings: Vec<String>,
}

/// `scan`: regime scan over `scan.eps`; one CSV row per `ε` at the
/// maximizer of the lower bound.
pub fn scan(cfg: &RunConfig, out: &Path) -> Result<ScanSummary> {
    std::fs::create_dir_all(out)?;
    let s = &cfg.scan;
    let alpha = (s.case == CaseId::IV).then_some(s.alpha);
    let r = crate::stability::regime_scan(s.case, &cfg.params, &s.eps, alpha, None)?;
    let n_max = 64.max(4 * cfg.params.forcing_m as usize);
    let mut rows = Vec::new();
    for (i, &eps) in s.eps.iter().enumerate() {
        let p = case_params(s.case, &cfg.params, eps, s.alpha);
        let (k1, k2) = r.argmax_k[i];
        let prob = StabilityProblem::new(k1, k2, p, n_max)?;
        rows.push(EigenRow {
            eps_nu: p.eps_nu,
            eps_kappa: p.eps_kappa,
            k1,
            k2,
            sigma_lower: r.sigma_lower[i],
            sigma_star: (r.sigma_star[i] > 0.0).then_some(r.sigma_star[i]),
            sigma_upper: upper_bound(k1 as f64, k2 as f64, &p),
            n_max,
            residual: sigma_star_matrix(&prob)?.residual,
        });
    }
    let cells: Vec<Vec<String>> = rows.iter().map(EigenRow::cells).collect();
    write_csv(&out.join("scan.csv"), &EIGEN_COLUMNS, &cells)?;
    let summary = ScanSummary {
        case: s.case.to_string(),
        alpha,
        rows,
        fitted_exponent: r.fitted_exponent,
        warnings: r.warnings,
    };
    write_json(
        &out.join("scan.json"),
        &json!({ "command": "scan", "params": params_json(&cfg.params), "result": summary }),
    )?;
    Ok(summary)
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepSummary {
    pub kappa: Vec<f64>,
    pub dissipation: Vec<f64>,
    pub dissipation_decreasing: bool,
    /// `(ε_κ, t, ‖θ_ε(t) − θ_0(t)‖)` rows.
    pub distances: Vec<(f64, f64, f64)>,
    pub non_monotone_times: Vec<f64>,
}

/// `kappa-sweep`: runs the initial data for every `ε_κ` in `sweep.kappa`
/// plus the `ε_κ = 0` reference.
pub fn kappa_sweep(cfg: &RunConfig, out: &Path) -> Result<SweepSummary> {
    std::fs::create_dir_all(out)?;
    let (theta0, _) = initial_state(cfg)?;
    let table = kappa_sweep_compare(
        &theta0,
        &cfg.params,
        &cfg.sweep.kappa,
        cfg.run.t_end,
        cfg.run.dt,
        &cfg.sweep.sample_times,
    )?;
    let dissipation: Vec<f64> = table.dissipation.iter().map(|d| d.1).collect();
    let mut order: Vec<usize> = (0..dissipation.len()).collect();
    order.sort_by(|&a, &b| table.dissipation[b].0.total_cmp(&table.dissipation[a].0));
    let summary = SweepSummary {
        kappa: table.dissipation.iter().map(|d| d.0).collect(),
        dissipation_decreasing: order.windows(2).all(|w| dissipation[w[1]] < dissipation[w[0]]),
        dissipation,
        distances: table.rows.iter().map(|r| (r.eps_kappa, r.t, r.distance)).collect(),
        non_monotone_times: table.non_monotone_times.clone(),
    };
    let rows: Vec<Vec<String>> = table
        .rows
        .iter()
        .map(|r| vec![fmt_f64(r.eps_kappa), fmt_f64(r.t), fmt_f64(r.distance), fmt_f64(r.dissipation)])
        .collect();
    write_csv(&out.join("kappa_sweep.csv"), &["eps_kappa", "t", "l2_distance", "dissipation"], &rows)?;
    write_json(
        &out.join("kappa_sweep.json"),
        &json!({
            "command": "kappa-sweep",
            "params": params_json(&cfg.params),
            "t_end": cfg.run.t_end,
            "dt": cfg.run.dt,
            "result": summary,
        }),
    )?;
    Ok(summary)
}

#[derive(Clone, Debug, Serialize)]
pub struct MildSummary {
    pub horizon: f64,
    pub iterations: usize,
    pub halvings: usize,
    pub weighted_norm: f64,
    pub heat_norm: f64,
    pub residual: f64,
    pub last_change: f64,
    pub message: String,
}

/// `mild-solve`: Picard iteration of the integral form from the initial
/// data; writes the field at the horizon as `mild_final.mgsp`.
pub fn mild_solve(cfg: &RunConfig, out: &Path) -> Result<MildSummary> {
    std::fs::create_dir_all(out)?;
    let (theta0, _) = initial_state(cfg)?;
    let sol = picard_solve(&theta0, cfg.mild.horizon, &cfg.params, &cfg.mild.options)?;
    let residual = mild_residual(&sol, &theta0, &cfg.params)?;
    let message = format!(
        "converged in {} iteration{}",
        sol.iterations,
        if sol.iterations == 1 { "" } else { "s" }
    );
    Checkpoint {
        t: sol.horizon_t,
        params: cfg.params,
        theta: sol.final_field().clone(),
    }
    .save(&out.join("mild_final.mgsp"))?;
    let summary = MildSummary {
        horizon: sol.horizon_t,
        iterations: sol.iterations,
        halvings: sol.halvings,
        weighted_norm: sol.weighted_norm,
        heat_norm: sol.heat_norm,
        residual,
        last_change: sol.last_change,
        message,
    };
    write_json(
        &out.join("mild.json"),
        &json!({ "command": "mild-solve", "params": params_json(&cfg.params), "result": summary }),
    )?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_quotes_text_cells() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.csv");
        write_csv(&p, &["a", "b"], &[vec!["1".into(), NO_ROOT.into()], vec!["x,y".into(), "q\"".into()]]).unwrap();
        let text = std::fs::read_to_string(p).unwrap();
        assert_eq!(text, "a,b\n1,no unstable real root\n\"x,y\",\"q\"\"\"\n");
    }

    #[test]
    fn benchmark_row() {
        let p = PhysicalParams {
            n_squared: 1.0,
            eps_nu: 0.0,
            eps_kappa: 0.0,
            damping_c: 0.0,
            amplitude_a: 10.0,
            forcing_m: 1,
        };
        let r = EigenRow::compute(1, 1, p, 64).unwrap();
        assert!((r.sigma_lower - 0.4).abs() < 1e-15 && (r.sigma_upper - 5.0).abs() < 1e-15);
        let s = r.sigma_star.unwrap();
        assert!(0.4 < s && s < 5.0);
        let r = EigenRow::compute(1, 1, PhysicalParams { amplitude_a: 0.0, ..p }, 64).unwrap();
        assert_eq!(r.sigma_star, None);
        assert_eq!(r.cells()[5], NO_ROOT);
    }
}
