//! Time integration of `∂_t θ + u·∇θ = ε_κ Δθ + S − cθ`, `u = M[θ]`.
//!
//! Advection is evaluated pseudospectrally in divergence form with the 2/3
//! rule. Diffusion and damping are integrated exactly by the integrating
//! factor `exp(−(ε_κ|k|² + c) dt)` inside a classical RK4 (Lawson) step.
//! A time-independent forcing is absorbed by shifting to the equilibrium
//! of the linear part, so forced steady states are reproduced exactly.
//!
//! [`transport_semilagrangian`] is an independent discretization for
//! `ε_κ = 0`: it tracks the inverse flow map along backward
//! characteristics and evaluates `θ₀` on it.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::multiplier::{PhysicalParams, SymbolTable};
use crate::spectral::{to_physical_pair, to_spectral, Grid, NormSpec, PhysicalScalar, SpectralScalar};

/// Source term `S` of the forced equation.
#[derive(Clone, Debug, PartialEq, Default)]
pub enum ForcingSpec {
    #[default]
    None,
    /// `S = ε_κ A m² sin(m x3)`, which holds `A sin(m x3)` steady.
    MgSteady,
    Custom(SpectralScalar),
}

impl ForcingSpec {
    pub fn field(&self, grid: Grid, params: &PhysicalParams) -> Result<Option<SpectralScalar>> {
        match self {
            ForcingSpec::None => Ok(None),
            ForcingSpec::MgSteady => {
                let m = params.forcing_m as f64;
                let amp = params.eps_kappa * params.amplitude_a * m * m;
                Ok(Some(SpectralScalar::sine_mode(
                    grid,
                    [0, 0, params.forcing_m as i64],
                    amp,
                )?))
            }
            ForcingSpec::Custom(s) => {
                if s.grid != grid {
                    return Err(Error::GridMismatch("custom forcing grid".into()));
                }
                if s.coeffs[0].norm() != 0.0 {
                    return Err(invalid("forcing", "custom forcing must have zero mean"));
                }
                Ok(Some(s.clone()))
            }
        }
    }
}

/// `A sin(m x3)`, the steady profile held by [`ForcingSpec::MgSteady`].
pub fn mg_steady_profile(grid: Grid, params: &PhysicalParams) -> Result<SpectralScalar> {
    SpectralScalar::sine_mode(grid, [0, 0, params.forcing_m as i64], params.amplitude_a)
}

/// State of one simulation.
#[derive(Clone, Debug)]
pub struct SimState {
    pub t: f64,
    pub theta: SpectralScalar,
    pub params: PhysicalParams,
    pub forcing: ForcingSpec,
    /// Set when some step exceeded the advisory CFL limit.
    pub cfl_warning: bool,
}

impl SimState {
    pub fn new(theta: SpectralScalar, params: PhysicalParams, forcing: ForcingSpec) -> Result<Self> {
        params.validate()?;
        if theta.coeffs[0].norm() > 1e-12 * theta.max_abs_coeff().max(1.0) {
            return Err(invalid("theta", "initial field must have zero mean"));
        }
        let mut theta = theta;
        theta.remove_mean();
        Ok(Self {
            t: 0.0,
            theta,
            params,
            forcing,
            cfl_warning: false,
        })
    }

    pub fn grid(&self) -> Grid {
        self.theta.grid
    }
}

/// Receives snapshots during [`Stepper::run`].
pub trait Observer {
    fn observe(&mut self, t: f64, theta: &SpectralScalar) -> Result<()>;
}

impl<F> Observer for F
where
    F: FnMut(f64, &SpectralScalar) -> Result<()>,
{
    fn observe(&mut self, t: f64, theta: &SpectralScalar) -> Result<()> {
        self(t, theta)
    }
}

/// Quantity sampled by a [`NormRecorder`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Tracked {
    Norm(NormSpec),
    /// `‖∇θ‖_{L^p}`.
    Gradient(f64),
}

impl Tracked {
    pub fn label(&self) -> String {
        match self {
            Tracked::Norm(s) => format!("norm_{}", s.label()),
            Tracked::Gradient(p) => format!("grad_L{p}"),
        }
    }

    pub fn evaluate(&self, theta: &SpectralScalar) -> f64 {
        match self {
            Tracked::Norm(s) => theta.norm(*s),
            Tracked::Gradient(p) => theta.gradient_norm(*p),
        }
    }
}

/// Records a set of norms at every observation.
#[derive(Clone, Debug, Default)]
pub struct NormRecorder {
    pub tracked: Vec<Tracked>,
    pub series: Vec<crate::diagnostics::NormSeries>,
}

impl NormRecorder {
    pub fn new(tracked: Vec<Tracked>) -> Self {
        let series = tracked
            .iter()
            .map(|t| crate::diagnostics::NormSeries {
                times: Vec::new(),
                values: Vec::new(),
                spec: match t {
                    Tracked::Norm(s) => *s,
                    Tracked::Gradient(p) => NormSpec::lp(*p),
                },
                label: t.label(),
            })
            .collect();
        Self { tracked, series }
    }
}

impl Observer for NormRecorder {
    fn observe(&mut self, t: f64, theta: &SpectralScalar) -> Result<()> {
        for (tr, s) in self.tracked.iter().zip(self.series.iter_mut()) {
            s.times.push(t);
            s.values.push(tr.evaluate(theta));
        }
        Ok(())
    }
}

/// Precomputed operators for one grid, parameter set and forcing.
pub struct Stepper {
    grid: Grid,
    params: PhysicalParams,
    symbols: SymbolTable,
    /// Linear rate `−(ε_κ|k|² + c)` per mode.
    rate: Vec<f64>,
    forcing: Option<SpectralScalar>,
    /// Equilibrium of the linear part, `−S/rate` where `rate ≠ 0`.
    equilibrium: Option<Vec<Complex64>>,
    /// Forcing left on modes with zero linear rate.
    residual_forcing: Option<Vec<Complex64>>,
    cached_dt: Option<(f64, Vec<f64>, Vec<f64>)>,
}

impl Stepper {
    pub fn new(grid: Grid, params: &PhysicalParams, forcing: &ForcingSpec) -> Result<Self> {
        params.validate()?;
        let rate: Vec<f64> = grid
            .k_squared()
            .into_iter()
            .map(|k2| -(params.eps_kappa * k2 + params.damping_c))
            .collect();
        let forcing = forcing.field(grid, params)?;
        let (equilibrium, residual_forcing) = match &forcing {
            None => (None, None),
            Some(s) => {
                let mut eq = vec![Complex64::default(); grid.len()];
                let mut rem = vec![Complex64::default(); grid.len()];
                let mut any_rem = false;
                for i in 0..grid.len() {
                    if rate[i] != 0.0 {
                        eq[i] = -s.coeffs[i] / rate[i];
                    } else if s.coeffs[i] != Complex64::default() {
                        rem[i] = s.coeffs[i];
                        any_rem = true;
                    }
                }
                (Some(eq), any_rem.then_some(rem))
            }
        };
        Ok(Self {
            grid,
            params: *params,
            symbols: SymbolTable::new(grid, params),
            rate,
            forcing,
            equilibrium,
            residual_forcing,
            cached_dt: None,
        })
    }

    pub fn for_state(state: &SimState) -> Result<Self> {
        Self::new(state.grid(), &state.params, &state.forcing)
    }

    pub fn symbols(&self) -> &SymbolTable {
        &self.symbols
    }

    /// Dealiased advection term `−P ∇·(u θ)` with `u = M[Pθ]`, plus the
    /// largest grid speed.
    pub fn advection(&self, theta: &SpectralScalar) -> (Vec<Complex64>, f64) {
        advective_flux(&self.symbols, theta, theta)
    }

    /// Full right-hand side `−P∇·(uθ) − ε_κ|k|²θ̂ + Ŝ − cθ̂`.
    pub fn rhs(&self, theta: &SpectralScalar) -> SpectralScalar {
        let (mut out, _) = self.advection(theta);
        for (i, o) in out.iter_mut().enumerate() {
            *o += self.rate[i] * theta.coeffs[i];
            if let Some(s) = &self.forcing {
                *o += s.coeffs[i];
            }
        }
        out[0] = Complex64::default();
        SpectralScalar {
            grid: self.grid,
            coeffs: out,
            zero_mean: true,
        }
    }

    fn nonlinear(&self, w: &[Complex64]) -> (Vec<Complex64>, f64) {
        let theta = SpectralScalar {
            grid: self.grid,
            coeffs: match &self.equilibrium {
                Some(eq) => w.iter().zip(eq).map(|(a, b)| a + b).collect(),
                None => w.to_vec(),
            },
            zero_mean: true,
        };
        let (mut n, umax) = self.advection(&theta);
        if let Some(rem) = &self.residual_forcing {
            for (a, b) in n.iter_mut().zip(rem) {
                *a += b;
            }
        }
        (n, umax)
    }

    fn factors(&mut self, dt: f64) -> (Vec<f64>, Vec<f64>) {
        if let Some((cdt, e, e2)) = &self.cached_dt {
            if *cdt == dt {
                return (e.clone(), e2.clone());
            }
        }
        let e: Vec<f64> = self.rate.iter().map(|r| (r * dt).exp()).collect();
        let e2: Vec<f64> = self.rate.iter().map(|r| (r * 0.5 * dt).exp()).collect();
        self.cached_dt = Some((dt, e.clone(), e2.clone()));
        (e, e2)
    }

    /// One integrating-factor RK4 step of size `dt`.
    pub fn step(&mut self, state: &mut SimState, dt: f64) -> Result<()> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(invalid("dt", format!("{dt} must be > 0")));
        }
        if state.grid() != self.grid {
            return Err(Error::GridMismatch("state grid differs from stepper grid".into()));
        }
        let (e, e2) = self.factors(dt);
        let n = self.grid.len();
        let w: Vec<Complex64> = match &self.equilibrium {
            Some(eq) => state.theta.coeffs.iter().zip(eq).map(|(a, b)| a - b).collect(),
            None => state.theta.coeffs.clone(),
        };
        let h = dt;
        let (k1, umax) = self.nonlinear(&w);
        let stage: Vec<Complex64> = (0..n).map(|i| e2[i] * (w[i] + 0.5 * h * k1[i])).collect();
        let (k2, _) = self.nonlinear(&stage);
        let stage: Vec<Complex64> = (0..n).map(|i| e2[i] * w[i] + 0.5 * h * k2[i]).collect();
        let (k3, _) = self.nonlinear(&stage);
        let stage: Vec<Complex64> = (0..n).map(|i| e[i] * w[i] + h * e2[i] * k3[i]).collect();
        let (k4, _) = self.nonlinear(&stage);
        let mut next: Vec<Complex64> = (0..n)
            .into_par_iter()
            .map(|i| {
                e[i] * w[i] + h / 6.0 * (e[i] * k1[i] + 2.0 * e2[i] * (k2[i] + k3[i]) + k4[i])
            })
            .collect();
        if let Some(eq) = &self.equilibrium {
            for (a, b) in next.iter_mut().zip(eq) {
                *a += b;
            }
        }
        next[0] = Complex64::default();
        if next.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::NonFinite(format!("theta at t = {}", state.t + dt)));
        }
        if umax * dt > self.grid.spacing() {
            state.cfl_warning = true;
        }
        state.theta.coeffs = next;
        state.theta.zero_mean = true;
        state.t += dt;
        Ok(())
    }

    /// Advances to `t_end`, shortening the last step; observers see the
    /// initial state, every `every`-th step and the final state.
    pub fn run(
        &mut self,
        state: &mut SimState,
        t_end: f64,
        dt: f64,
        every: usize,
        observers: &mut [&mut dyn Observer],
    ) -> Result<()> {
        if !(t_end > state.t) {
            return Err(invalid("t_end", format!("{t_end} <= current time {}", state.t)));
        }
        let every = every.max(1);
        for o in observers.iter_mut() {
            o.observe(state.t, &state.theta)?;
        }
        let t0 = state.t;
        let steps = ((t_end - t0) / dt - 1e-9).ceil().max(1.0) as usize;
        for s in 1..=steps {
            let target = if s == steps { t_end } else { t0 + s as f64 * dt };
            let h = target - state.t;
            self.step(state, h)?;
            state.t = target;
            if s % every == 0 || s == steps {
                for o in observers.iter_mut() {
                    o.observe(state.t, &state.theta)?;
                }
            }
        }
        Ok(())
    }

    pub fn params(&self) -> &PhysicalParams {
        &self.params
    }
}

/// `−P ∇·(M[Pφ] Pψ)` with `P` the 2/3 projection, and `max |M[Pφ]|` on
/// the grid. Bilinear in `(φ, ψ)`.
pub fn advective_flux(symbols: &SymbolTable, phi: &SpectralScalar, psi: &SpectralScalar) -> (Vec<Complex64>, f64) {
    let grid = symbols.grid;
    let n = grid.len();
    let keep = &symbols.keep;
    let [m1, m2, m3] = &symbols.m;
    let zero = Complex64::default();
    // exact zero when there is no drift or nothing to carry
    let no_drift = (0..n).into_par_iter().all(|i| {
        !keep[i] || phi.coeffs[i] == zero || (m1[i] == 0.0 && m2[i] == 0.0 && m3[i] == 0.0)
    });
    if no_drift || psi.max_abs_coeff() == 0.0 {
        return (vec![zero; n], 0.0);
    }

    // a = ψ + i u1, b = u2 + i u3, both dealiased; real fields ride in the
    // real and imaginary parts of one complex transform
    let i = Complex64::i();
    let mut a: Vec<Complex64> = Vec::with_capacity(n);
    let mut b: Vec<Complex64> = Vec::with_capacity(n);
    (0..n)
        .into_par_iter()
        .map(|j| {
            if !keep[j] {
                return (zero, zero);
            }
            let p = phi.coeffs[j];
            (psi.coeffs[j] + i * (p * m1[j]), p * m2[j] + i * (p * m3[j]))
        })
        .unzip_into_vecs(&mut a, &mut b);
    let plan = crate::fft::plan(grid);
    plan.inverse(&mut a);
    plan.inverse(&mut b);

    // a ← θu1 + i θu2, b ← θu3
    let umax = a
        .par_iter_mut()
        .zip(b.par_iter_mut())
        .map(|(x, y)| {
            let (th, u1, u2, u3) = (x.re, x.im, y.re, y.im);
            *x = Complex64::new(th * u1, th * u2);
            *y = Complex64::new(th * u3, 0.0);
            (u1 * u1 + u2 * u2 + u3 * u3).sqrt()
        })
        .reduce(|| 0.0, f64::max);
    plan.forward(&mut a);
    plan.forward(&mut b);

    let inv = 1.0 / n as f64;
    let out = (0..n)
        .into_par_iter()
        .map(|j| {
            if !keep[j] {
                return zero;
            }
            // unpack the two real spectra held in `a`
            let z = a[j];
            let zm = a[grid.mirror(j)].conj();
            let f1 = 0.5 * (z + zm);
            let f2 = Complex64::new(0.0, -0.5) * (z - zm);
            let f3 = 0.5 * (b[j] + b[grid.mirror(j)].conj());
            let k = grid.wavevector(j);
            let div = (f1 * k[0] as f64 + f2 * k[1] as f64 + f3 * k[2] as f64) * inv;
            // −i k·F
            Complex64::new(div.im, -div.re)
        })
        .collect();
    (out, umax)
}

/// Right-hand side for a single state.
pub fn rhs(state: &SimState) -> Result<SpectralScalar> {
    Ok(Stepper::for_state(state)?.rhs(&state.theta))
}

/// One step from `state`, returning the advanced state.
pub fn step(state: &SimState, dt: f64) -> Result<SimState> {
    let mut next = state.clone();
    Stepper::for_state(state)?.step(&mut next, dt)?;
    Ok(next)
}

/// Runs to `t_end` recording the tracked quantities every `every` steps.
pub fn run(
    state: &SimState,
    t_end: f64,
    dt: f64,
    every: usize,
    tracked: Vec<Tracked>,
) -> Result<(SimState, Vec<crate::diagnostics::NormSeries>)> {
    let mut st = state.clone();
    let mut rec = NormRecorder::new(tracked);
    Stepper::for_state(state)?.run(&mut st, t_end, dt, every, &mut [&mut rec])?;
    Ok((st, rec.series))
}

/// Initial condition `Θ₀ + δ sin(k1 x1) sin(k2 x2) sin(m x3)` with
/// `δ = 1e−6 A` (`1e−6` when `A = 0`) used for growth-rate runs.
pub fn steady_plus_perturbation(grid: Grid, params: &PhysicalParams, k1: i64, k2: i64) -> Result<SpectralScalar> {
    let mut theta = mg_steady_profile(grid, params)?;
    let delta = if params.amplitude_a == 0.0 { 1e-6 } else { 1e-6 * params.amplitude_a };
    let pert = SpectralScalar::sine_product(grid, [k1, k2, params.forcing_m as i64], delta)?;
    theta.axpy(1.0, &pert);
    Ok(theta)
}

/// Cubic Lagrange weights for fractional offset `f ∈ [0,1)` on nodes −1..=2.
#[inline]
fn cubic_weights(f: f64) -> [f64; 4] {
    [
        -f * (f - 1.0) * (f - 2.0) / 6.0,
        (f + 1.0) * (f - 1.0) * (f - 2.0) / 2.0,
        -(f + 1.0) * f * (f - 2.0) / 2.0,
        (f + 1.0) * f * (f - 1.0) / 6.0,
    ]
}

/// Periodic tricubic interpolation of grid samples at a physical point.
pub fn interpolate_cubic(field: &PhysicalScalar, x: [f64; 3]) -> f64 {
    let g = field.grid;
    let dims = g.dims();
    let mut base = [0i64; 3];
    let mut w = [[0.0; 4]; 3];
    for a in 0..3 {
        let mut s = x[a] / (2.0 * PI) * dims[a] as f64;
        // grid points must hit their sample exactly
        if (s - s.round()).abs() < 1e-10 {
            s = s.round();
        }
        let fl = s.floor();
        base[a] = fl as i64;
        w[a] = cubic_weights(s - fl);
    }
    let wrap = |i: i64, n: usize| i.rem_euclid(n as i64) as usize;
    let mut acc = 0.0;
    for (a, wa) in w[0].iter().enumerate() {
        if *wa == 0.0 {
            continue;
        }
        let i1 = wrap(base[0] + a as i64 - 1, dims[0]);
        for (b, wb) in w[1].iter().enumerate() {
            if *wb == 0.0 {
                continue;
            }
            let i2 = wrap(base[1] + b as i64 - 1, dims[1]);
            let row = (i1 * dims[1] + i2) * dims[2];
            for (c, wc) in w[2].iter().enumerate() {
                if *wc == 0.0 {
                    continue;
                }
                let i3 = wrap(base[2] + c as i64 - 1, dims[2]);
                acc += wa * wb * wc * field.samples[row + i3];
            }
        }
    }
    acc
}

/// Pure transport (`ε_κ = 0`) by backward characteristics: the inverse flow
/// map `X_t = ψ_t⁻¹` is composed step by step with `u = M[θ(t)]` frozen over
/// each step, and `θ(t) = θ₀ ∘ X_t` is evaluated by tricubic interpolation.
pub fn transport_semilagrangian(
    theta0: &PhysicalScalar,
    params: &PhysicalParams,
    t_end: f64,
    dt: f64,
) -> Result<PhysicalScalar> {
    params.validate()?;
    if params.eps_kappa != 0.0 {
        return Err(invalid("eps_kappa", "semi-Lagrangian transport requires eps_kappa = 0"));
    }
    if !(dt > 0.0) || !(t_end >= 0.0) {
        return Err(invalid("dt", "need dt > 0 and t_end >= 0"));
    }
    let grid = theta0.grid;
    let symbols = SymbolTable::new(grid, params);
    let n = grid.len();
    let points: Vec<[f64; 3]> = (0..n).map(|i| grid.point(i)).collect();
    // displacement X(x) − x, periodic
    let mut disp = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let mut current = theta0.clone();
    let mut t = 0.0;
    while t < t_end - 1e-12 {
        let h = dt.min(t_end - t);
        let mut spec = to_spectral(&current)?;
        spec.remove_mean();
        let vel = symbols.apply(&spec);
        let (u1, u2) = to_physical_pair(&vel.u[0], &vel.u[1]);
        let u3 = vel.u[2].to_physical();
        let u = [u1, u2, u3];
        let dfields = disp.clone().map(|d| PhysicalScalar { grid, samples: d });
        let new_disp: Vec<[f64; 3]> = (0..n)
            .into_par_iter()
            .map(|i| {
                let x = points[i];
                let ux = [u[0].samples[i], u[1].samples[i], u[2].samples[i]];
                let mid = [0, 1, 2].map(|a| x[a] - 0.5 * h * ux[a]);
                let umid = [0, 1, 2].map(|a| interpolate_cubic(&u[a], mid));
                let y = [0, 1, 2].map(|a| x[a] - h * umid[a]);
                [0, 1, 2].map(|a| y[a] - x[a] + interpolate_cubic(&dfields[a], y))
            })
            .collect();
        for a in 0..3 {
            for i in 0..n {
                disp[a][i] = new_disp[i][a];
            }
        }
        let samples = (0..n)
            .into_par_iter()
            .map(|i| {
                let x = points[i];
                interpolate_cubic(theta0, [x[0] + disp[0][i], x[1] + disp[1][i], x[2] + disp[2][i]])
            })
            .collect::<Vec<f64>>();
        current = PhysicalScalar::new(grid, samples)?;
        t += h;
    }
    Ok(current)
}
