//! Python access to the solver: fields, time stepping, the drift symbol,
//! growth rates and the integral-form solver.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use mgspectral::evolve::{self, ForcingSpec, SimState, Tracked};
use mgspectral::mild::{mild_residual, picard_solve, PicardOptions};
use mgspectral::multiplier::symbol as m_symbol;
use mgspectral::stability::{sigma_bounds, sigma_star as cf_sigma, sigma_star_matrix, StabilityProblem};
use mgspectral::{Grid, NormSpec, SpectralScalar};

fn err(e: mgspectral::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Physical constants. Keyword arguments default to the library defaults.
#[pyclass(name = "Params", from_py_object)]
#[derive(Clone)]
struct Params(mgspectral::PhysicalParams);

#[pymethods]
impl Params {
    #[new]
    #[pyo3(signature = (*, n_squared=1.0, eps_nu=1.0, eps_kappa=0.1, damping_c=0.0, amplitude_a=1.0, forcing_m=1))]
    fn new(n_squared: f64, eps_nu: f64, eps_kappa: f64, damping_c: f64, amplitude_a: f64, forcing_m: u32) -> PyResult<Self> {
        let p = mgspectral::PhysicalParams {
            n_squared,
            eps_nu,
            eps_kappa,
            damping_c,
            amplitude_a,
            forcing_m,
        };
        p.validate().map_err(err)?;
        Ok(Self(p))
    }

    #[getter]
    fn eps_nu(&self) -> f64 {
        self.0.eps_nu
    }

    #[getter]
    fn eps_kappa(&self) -> f64 {
        self.0.eps_kappa
    }

    #[getter]
    fn amplitude_a(&self) -> f64 {
        self.0.amplitude_a
    }

    fn __repr__(&self) -> String {
        let p = &self.0;
        format!(
            "Params(n_squared={}, eps_nu={}, eps_kappa={}, damping_c={}, amplitude_a={}, forcing_m={})",
            p.n_squared, p.eps_nu, p.eps_kappa, p.damping_c, p.amplitude_a, p.forcing_m
        )
    }
}

/// A real, mean-zero scalar stored by its Fourier coefficients.
#[pyclass(name = "Field", from_py_object)]
#[derive(Clone)]
struct Field(SpectralScalar);

fn grid(n: [usize; 3]) -> PyResult<Grid> {
    Grid::new(n[0], n[1], n[2]).map_err(err)
}

#[pymethods]
impl Field {
    #[staticmethod]
    fn zeros(n: [usize; 3]) -> PyResult<Self> {
        Ok(Self(SpectralScalar::zeros(grid(n)?)))
    }

    /// `amplitude · sin(k·x)`.
    #[staticmethod]
    #[pyo3(signature = (n, k, amplitude=1.0))]
    fn sine_mode(n: [usize; 3], k: [i64; 3], amplitude: f64) -> PyResult<Self> {
        SpectralScalar::sine_mode(grid(n)?, k, amplitude).map(Self).map_err(err)
    }

    /// Seeded random data supported in `|k| <= kmax`, scaled to L² norm `l2`.
    #[staticmethod]
    fn random_smooth(n: [usize; 3], seed: u64, kmax: f64, l2: f64) -> PyResult<Self> {
        Ok(Self(SpectralScalar::random_smooth(grid(n)?, seed, kmax, l2)))
    }

    /// The steady profile `A sin(m x3)`.
    #[staticmethod]
    fn mg_steady(n: [usize; 3], params: &Params) -> PyResult<Self> {
        evolve::mg_steady_profile(grid(n)?, &params.0).map(Self).map_err(err)
    }

    /// Physical samples in C order `(i1, i2, i3)`.
    #[staticmethod]
    fn from_samples(n: [usize; 3], samples: Vec<f64>) -> PyResult<Self> {
        let phys = mgspectral::PhysicalScalar::new(grid(n)?, samples).map_err(err)?;
        mgspectral::spectral::to_spectral(&phys).map(Self).map_err(err)
    }

    #[getter]
    fn shape(&self) -> [usize; 3] {
        self.0.grid.dims()
    }

    fn samples(&self) -> Vec<f64> {
        self.0.to_physical().samples
    }

    /// `‖θ‖` in `W^{s,p}`; `homogeneous` drops the low-frequency weight.
    #[pyo3(signature = (p=2.0, s=0.0, homogeneous=false))]
    fn norm(&self, p: f64, s: f64, homogeneous: bool) -> PyResult<f64> {
        Ok(self.0.norm(NormSpec::new(s, p, homogeneous).map_err(err)?))
    }

    fn gradient_norm(&self, p: f64) -> f64 {
        self.0.gradient_norm(p)
    }

    fn distance(&self, other: &Field) -> PyResult<f64> {
        if self.0.grid != other.0.grid {
            return Err(PyValueError::new_err("fields live on different grids"));
        }
        Ok(self.0.sub(&other.0).l2_parseval())
    }

    fn __repr__(&self) -> String {
        let [a, b, c] = self.0.grid.dims();
        format!("Field({a}x{b}x{c}, L2={:.6e})", self.0.l2_parseval())
    }
}

/// Drift symbol `(M̂1, M̂2, M̂3)` at wavevector `k`.
#[pyfunction]
fn symbol(k: [i64; 3], params: &Params) -> (f64, f64, f64) {
    let s = m_symbol(k, &params.0);
    (s.m1, s.m2, s.m3)
}

/// Advances `theta` to `t_end`. Returns the final field and a dict of
/// sampled series keyed by label, plus `"t"`.
#[pyfunction]
#[pyo3(signature = (theta, params, t_end, dt, every=1, forcing="none", track=vec!["L2".to_string()]))]
fn simulate(
    py: Python<'_>,
    theta: &Field,
    params: &Params,
    t_end: f64,
    dt: f64,
    every: usize,
    forcing: &str,
    track: Vec<String>,
) -> PyResult<(Field, Vec<(String, Vec<f64>)>)> {
    let forcing = match forcing {
        "none" => ForcingSpec::None,
        "mg_steady" => ForcingSpec::MgSteady,
        other => return Err(PyValueError::new_err(format!("unknown forcing {other:?}"))),
    };
    let tracked: Vec<Tracked> = track
        .iter()
        .map(|s| mgspectral::config::parse_tracked(s).map_err(PyValueError::new_err))
        .collect::<PyResult<_>>()?;
    let st = SimState::new(theta.0.clone(), params.0, forcing).map_err(err)?;
    let (end, series) = py.detach(|| evolve::run(&st, t_end, dt, every, tracked)).map_err(err)?;
    let mut out = vec![("t".to_string(), series[0].times.clone())];
    out.extend(series.into_iter().map(|s| (s.label, s.values)));
    Ok((Field(end.theta), out))
}

/// Growth rate of the most unstable mode with horizontal wavenumbers
/// `(k1, k2)`, or `None` when nothing grows. Also returns the bounds.
#[pyfunction]
#[pyo3(signature = (k1, k2, params, n_max=64))]
fn growth_rate(k1: i64, k2: i64, params: &Params, n_max: usize) -> PyResult<(Option<f64>, f64, f64)> {
    let prob = StabilityProblem::new(k1, k2, params.0, n_max).map_err(err)?;
    let b = sigma_bounds(&prob);
    Ok((cf_sigma(&prob).map_err(err)?.sigma(), b.lower, b.upper))
}

/// Largest real eigenvalue of the truncated ladder matrix.
#[pyfunction]
#[pyo3(signature = (k1, k2, params, n_max=64))]
fn growth_rate_matrix(k1: i64, k2: i64, params: &Params, n_max: usize) -> PyResult<f64> {
    let prob = StabilityProblem::new(k1, k2, params.0, n_max).map_err(err)?;
    Ok(sigma_star_matrix(&prob).map_err(err)?.sigma)
}

/// Picard iteration of the integral form. Returns the field at the
/// reached horizon, the horizon, the iteration count and the residual.
#[pyfunction]
#[pyo3(signature = (theta, params, horizon=1.0))]
fn mild_solve(py: Python<'_>, theta: &Field, params: &Params, horizon: f64) -> PyResult<(Field, f64, usize, f64)> {
    let (sol, res) = py
        .detach(|| {
            let sol = picard_solve(&theta.0, horizon, &params.0, &PicardOptions::default())?;
            let res = mild_residual(&sol, &theta.0, &params.0)?;
            Ok::<_, mgspectral::Error>((sol, res))
        })
        .map_err(err)?;
    Ok((Field(sol.final_field().clone()), sol.horizon_t, sol.iterations, res))
}

#[pymodule]
fn mgspectral_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Params>()?;
    m.add_class::<Field>()?;
    m.add_function(wrap_pyfunction!(symbol, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(growth_rate, m)?)?;
    m.add_function(wrap_pyfunction!(growth_rate_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(mild_solve, m)?)?;
    Ok(())
}
