//! Linear stability of the steady state `Θ₀ = A sin(m x3)`.
//!
//! Perturbations `e^{σt} sin(k1 x1) sin(k2 x2) Σ c_n sin(n x3)` satisfy the
//! ladder `σ c_j = −ε_κ K_j c_j − (Am/2)(ρ_{j−m} c_{j−m} + ρ_{j+m} c_{j+m})`
//! with `K_j = k1² + k2² + j²`, `ρ_n = M̂3(k1, k2, n)` and odd reflection
//! `sin(−nx) = −sin(nx)` for the indices that fall below zero. The ladder
//! only couples `j` with `j ± m`, so it splits into classes `j ≡ ±r (mod m)`;
//! the reflection is what ties residue `r` to `m − r`.
//! The growth rate `σ*` refers to the class `j ∈ mℕ`, which contains the
//! forcing mode itself; for `m = 1` that is the whole ladder.
//!
//! `σ*` is computed twice: from the eigenvalues of the truncated matrix and
//! by bisection on a continued fraction, whose pivots count the eigenvalues
//! above a trial `σ` (the class matrix is similar to a symmetric one).

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::diagnostics::{fit_growth_rate, linear_fit, NormSeries};
use crate::error::{invalid, Error, Result};
use crate::evolve::{steady_plus_perturbation, ForcingSpec, SimState, Stepper};
use crate::multiplier::PhysicalParams;
use crate::spectral::{Grid, NormSpec, SpectralScalar};

/// Eigenproblem for one horizontal wavevector.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StabilityProblem {
    pub k1: i64,
    pub k2: i64,
    pub params: PhysicalParams,
    pub n_max: usize,
}

impl StabilityProblem {
    pub fn new(k1: i64, k2: i64, params: PhysicalParams, n_max: usize) -> Result<Self> {
        params.validate()?;
        if k1 * k1 + k2 * k2 == 0 {
            return Err(invalid("k1", "k1² + k2² must be positive"));
        }
        let m = params.forcing_m as usize;
        if n_max < 16 || n_max < 4 * m {
            return Err(invalid("n_max", format!("{n_max} must be >= max(16, 4m)")));
        }
        Ok(Self { k1, k2, params, n_max })
    }

    fn horizontal(&self) -> f64 {
        (self.k1 * self.k1 + self.k2 * self.k2) as f64
    }

    fn half_amplitude(&self) -> f64 {
        self.params.amplitude_a * self.params.forcing_m as f64 / 2.0
    }

    fn with_n_max(&self, n_max: usize) -> Self {
        Self { n_max, ..*self }
    }
}

/// Ladder coefficient `ρ_n`; identical to `M̂3(k1, k2, n)`.
pub fn rho(n: i64, prob: &StabilityProblem) -> f64 {
    let p = &prob.params;
    let (k1, k2, k3) = (prob.k1 as f64, prob.k2 as f64, n as f64);
    // same operation order as the multiplier so the two agree bitwise
    let n2 = p.n_squared;
    let n4 = n2 * n2;
    let horizontal = k1 * k1 + k2 * k2;
    let ksq = horizontal + k3 * k3;
    let b = k2 * k2 + p.eps_nu * (ksq * ksq);
    let d = n4 * ksq * k3 * k3 + b * b;
    n2 * horizontal * b / d
}

/// Truncated ladder on `sin(j x3)`, `j = 1..=n_max` (row `j − 1`).
pub fn assemble_ladder(prob: &StabilityProblem) -> DMatrix<f64> {
    let n = prob.n_max;
    let m = prob.params.forcing_m as usize;
    let a = prob.half_amplitude();
    let h = prob.horizontal();
    let mut l = DMatrix::zeros(n, n);
    for j in 1..=n {
        l[(j - 1, j - 1)] = -prob.params.eps_kappa * (h + (j * j) as f64);
        if j + m <= n {
            l[(j - 1, j + m - 1)] -= a * rho((j + m) as i64, prob);
        }
        if j > m {
            l[(j - 1, j - m - 1)] -= a * rho((j - m) as i64, prob);
        }
        if j < m {
            l[(j - 1, m - j - 1)] += a * rho((m - j) as i64, prob);
        }
    }
    l
}

/// Leading eigenpair of the truncated ladder.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModeCoefficients {
    /// Largest real eigenvalue on the class `j ∈ mℕ`.
    pub sigma: f64,
    /// `c_1..c_{n_max}`, unit Euclidean norm, largest entry positive.
    pub c: Vec<f64>,
    /// `‖L c − σ c‖₂`.
    pub residual: f64,
    /// Largest real part over the whole ladder, all classes.
    pub sigma_all_classes: f64,
    /// Largest imaginary part magnitude in the spectrum.
    pub max_imag: f64,
}

/// Dense eigensolve of [`assemble_ladder`].
pub fn sigma_star_matrix(prob: &StabilityProblem) -> Result<ModeCoefficients> {
    let l = assemble_ladder(prob);
    let n = prob.n_max;
    let m = prob.params.forcing_m as usize;
    let all = l.clone().complex_eigenvalues();
    if all.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Eigensolve(format!(
            "non-finite eigenvalue for k = ({}, {}), n_max = {n}",
            prob.k1, prob.k2
        )));
    }
    let sigma_all_classes = all.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    let max_imag = all.iter().map(|z| z.im.abs()).fold(0.0, f64::max);

    let class: Vec<usize> = (m..=n).step_by(m).map(|j| j - 1).collect();
    let block = l.select_rows(&class).select_columns(&class);
    let sigma = block
        .clone()
        .complex_eigenvalues()
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max);

    // inverse iteration on the class block
    let size = class.len();
    let shift = sigma + 1e-10 * sigma.abs().max(1.0);
    let lu = (block.clone() - DMatrix::identity(size, size) * shift).lu();
    let mut v = DVector::from_element(size, 1.0 / (size as f64).sqrt());
    for _ in 0..4 {
        let w = lu.solve(&v).ok_or_else(|| {
            Error::Eigensolve(format!("singular shifted ladder at sigma = {sigma}"))
        })?;
        let norm = w.norm();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::Eigensolve("inverse iteration broke down".into()));
        }
        v = w / norm;
    }
    let mut c = vec![0.0; n];
    for (pos, j) in class.iter().enumerate() {
        c[*j] = v[pos];
    }
    let peak = c.iter().cloned().fold(0.0f64, |a, b| if b.abs() > a.abs() { b } else { a });
    if peak < 0.0 {
        c.iter_mut().for_each(|x| *x = -*x);
    }
    let cv = DVector::from_vec(c.clone());
    let residual = (&l * &cv - &cv * sigma).norm();
    Ok(ModeCoefficients {
        sigma,
        c,
        residual,
        sigma_all_classes,
        max_imag,
    })
}

/// `|σ*(2 n_max) − σ*(n_max)| / |σ*(n_max)|` from the matrix oracle.
pub fn truncation_change(prob: &StabilityProblem) -> Result<f64> {
    let a = sigma_star_matrix(prob)?.sigma;
    let b = sigma_star_matrix(&prob.with_n_max(2 * prob.n_max))?.sigma;
    Ok((b - a).abs() / a.abs().max(f64::MIN_POSITIVE))
}

/// Closed-form bracket for the leading growth rate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SigmaBounds {
    pub lower: f64,
    pub upper: f64,
}

impl SigmaBounds {
    pub fn contains(&self, sigma: f64) -> bool {
        self.lower <= sigma && sigma <= self.upper
    }
}

/// Lower bound on the leading real root, without allocating a problem.
pub fn lower_bound(k1: f64, k2: f64, p: &PhysicalParams) -> f64 {
    let m = p.forcing_m as f64;
    let (m2, n2) = (m * m, p.n_squared);
    let h = k1 * k1 + k2 * k2;
    let num = k2 * k2 + p.eps_nu * (h + m2) * (h + m2);
    let den_b = k2 * k2 + p.eps_nu * (h + 4.0 * m2) * (h + 4.0 * m2);
    let den = 4.0 * n2 * n2 * m2 * (h + 4.0 * m2) + den_b * den_b;
    p.amplitude_a * m * n2 / 2.0 * h * num / den - p.eps_kappa * (h + 4.0 * m2)
}

/// Upper bound on the leading real root.
pub fn upper_bound(k1: f64, k2: f64, p: &PhysicalParams) -> f64 {
    let m = p.forcing_m as f64;
    let (m2, n2) = (m * m, p.n_squared);
    let h = k1 * k1 + k2 * k2;
    let num = k2 * k2 + p.eps_nu * (h + 4.0 * m2) * (h + 4.0 * m2);
    let den_b = k2 * k2 + p.eps_nu * (h + m2) * (h + m2);
    let den = n2 * n2 * m2 * (h + m2) + den_b * den_b;
    p.amplitude_a * m * n2 * h * num / den - p.eps_kappa * (h + m2)
}

pub fn sigma_bounds(prob: &StabilityProblem) -> SigmaBounds {
    let (k1, k2) = (prob.k1 as f64, prob.k2 as f64);
    SigmaBounds {
        lower: lower_bound(k1, k2, &prob.params),
        upper: upper_bound(k1, k2, &prob.params),
    }
}

/// Root found by [`sigma_star_cf`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CfRoot {
    pub sigma: f64,
    /// Continued-fraction depth (number of class modes kept).
    pub depth: usize,
    /// Bisection steps used at the final depth.
    pub bisections: usize,
    /// Bracket actually used at the final depth.
    pub bracket: [f64; 2],
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum CfOutcome {
    Root(CfRoot),
    NoUnstableRoot,
}

impl CfOutcome {
    pub fn sigma(&self) -> Option<f64> {
        match self {
            CfOutcome::Root(r) => Some(r.sigma),
            CfOutcome::NoUnstableRoot => None,
        }
    }
}

struct Chain {
    alpha: Vec<f64>,
    beta2: Vec<f64>,
}

impl Chain {
    fn new(prob: &StabilityProblem, depth: usize) -> Self {
        let m = prob.params.forcing_m as i64;
        let h = prob.horizontal();
        let a = prob.half_amplitude();
        let rhos: Vec<f64> = (1..=depth as i64 + 1).map(|i| rho(i * m, prob)).collect();
        let alpha = (1..=depth as i64)
            .map(|i| prob.params.eps_kappa * (h + ((i * m) * (i * m)) as f64))
            .collect();
        let beta2 = (0..depth - 1).map(|i| a * a * rhos[i] * rhos[i + 1]).collect();
        Self { alpha, beta2 }
    }

    /// Continued fraction `g_1(σ)` evaluated from the tail, and the number
    /// of negative pivots, which equals the number of eigenvalues above `σ`.
    fn evaluate(&self, sigma: f64) -> (f64, usize) {
        let n = self.alpha.len();
        let mut g = sigma + self.alpha[n - 1];
        let mut negative = usize::from(g < 0.0);
        for i in (0..n - 1).rev() {
            if g == 0.0 {
                g = f64::EPSILON * (sigma.abs() + self.alpha[i + 1].abs()).max(f64::MIN_POSITIVE);
            }
            g = sigma + self.alpha[i] - self.beta2[i] / g;
            negative += usize::from(g < 0.0);
        }
        (g, negative)
    }

    fn above(&self, sigma: f64) -> usize {
        self.evaluate(sigma).1
    }

    fn largest_root(&self, bracket: SigmaBounds) -> Result<Option<CfRoot>> {
        let mut lo = bracket.lower.max(1e-8);
        if self.above(lo) == 0 {
            lo *= 0.5;
            if self.above(lo) == 0 {
                return Ok(None);
            }
        }
        let mut hi = bracket.upper.max(2.0 * lo);
        let mut widen = 0;
        while self.above(hi) > 0 {
            hi *= 1.5;
            widen += 1;
            if widen > 200 || !hi.is_finite() {
                return Err(Error::Eigensolve("could not bracket the leading root".into()));
            }
        }
        let used = [lo, hi];
        let mut steps = 0;
        loop {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.above(mid) > 0 {
                lo = mid;
            } else {
                hi = mid;
            }
            steps += 1;
        }
        Ok(Some(CfRoot {
            sigma: 0.5 * (lo + hi),
            depth: self.alpha.len(),
            bisections: steps,
            bracket: used,
        }))
    }
}

/// Leading real root on the class `j ∈ mℕ` by continued fractions. The
/// depth starts at the class size of `n_max` and doubles until the root
/// moves by at most `1e−10` (relative).
pub fn sigma_star_cf(prob: &StabilityProblem, bracket: SigmaBounds) -> Result<CfOutcome> {
    let m = prob.params.forcing_m as usize;
    let mut depth = (prob.n_max / m).max(16);
    let mut previous: Option<CfRoot> = None;
    loop {
        let chain = Chain::new(prob, depth);
        let root = match chain.largest_root(bracket)? {
            None => return Ok(CfOutcome::NoUnstableRoot),
            Some(r) => r,
        };
        if let Some(p) = previous {
            if (root.sigma - p.sigma).abs() <= 1e-10 * root.sigma.abs().max(1.0) {
                return Ok(CfOutcome::Root(root));
            }
        }
        if depth > 1 << 16 {
            return Err(Error::Eigensolve(format!("continued fraction did not settle by depth {depth}")));
        }
        previous = Some(root);
        depth *= 2;
    }
}

/// `σ*` via continued fractions bracketed by [`sigma_bounds`].
pub fn sigma_star(prob: &StabilityProblem) -> Result<CfOutcome> {
    sigma_star_cf(prob, sigma_bounds(prob))
}

/// Regime of the small parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CaseId {
    /// `ε_ν = ε_κ = 0`, along `k1 = j`, `k2 = round(√j)` with `ε = 1/j`.
    I,
    /// `ε_ν = 0`, `ε_κ = ε`.
    II,
    /// `ε_κ = 0`, `ε_ν = ε`.
    III,
    /// `ε_κ = ε`, `ε_ν = ε^α`.
    IV,
}

impl std::str::FromStr for CaseId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "i" | "1" => Ok(CaseId::I),
            "ii" | "2" => Ok(CaseId::II),
            "iii" | "3" => Ok(CaseId::III),
            "iv" | "4" => Ok(CaseId::IV),
            other => Err(invalid("case", format!("unknown case `{other}`"))),
        }
    }
}

impl std::fmt::Display for CaseId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CaseId::I => "i",
            CaseId::II => "ii",
            CaseId::III => "iii",
            CaseId::IV => "iv",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegimeScanResult {
    pub case_id: CaseId,
    pub epsilon_values: Vec<f64>,
    pub alpha: Option<f64>,
    /// Leading growth rate at the maximizer; negative values come from the
    /// matrix oracle when no unstable root exists.
    pub sigma_star: Vec<f64>,
    /// Maximum of the lower bound over the search set.
    pub sigma_lower: Vec<f64>,
    pub argmax_k: Vec<(i64, i64)>,
    /// Slope of `log σ*` against `log ε`; NaN unless every `σ*` is positive.
    pub fitted_exponent: f64,
    pub warnings: Vec<String>,
}

/// Parameters used for one `ε` of a scan.
pub fn case_params(case: CaseId, template: &PhysicalParams, eps: f64, alpha: f64) -> PhysicalParams {
    match case {
        CaseId::I => template.with_eps(0.0, 0.0),
        CaseId::II => template.with_eps(0.0, eps),
        CaseId::III => template.with_eps(eps, 0.0),
        CaseId::IV => template.with_eps(eps.powf(alpha), eps),
    }
}

/// Default search region per case: four times the predicted maximizer
/// (for case iv, the predicted window `[1/(2ε), 2/ε] × [1/(2√ε), 2/√ε]`).
pub fn default_box(case: CaseId, eps: f64) -> ([i64; 2], [i64; 2]) {
    match case {
        CaseId::I => {
            let j = (1.0 / eps).round() as i64;
            let k2 = (j as f64).sqrt().round() as i64;
            ([j, k2], [j, k2])
        }
        CaseId::II => ([1, 1], [(4.0 / eps) as i64, (4.0 / eps.sqrt()) as i64 + 2]),
        CaseId::III => ([1, 1], [(4.0 * eps.powf(-1.0 / 3.0)) as i64 + 4, (4.0 * eps.powf(-1.0 / 6.0)) as i64 + 4]),
        CaseId::IV => (
            [(0.5 / eps).ceil() as i64, (0.5 / eps.sqrt()).ceil() as i64],
            [(2.0 / eps).floor() as i64, (2.0 / eps.sqrt()).floor() as i64],
        ),
    }
}

fn maximize_lower(params: &PhysicalParams, lo: [i64; 2], hi: [i64; 2]) -> (f64, (i64, i64)) {
    (lo[0]..=hi[0])
        .into_par_iter()
        .map(|k1| {
            let mut best = (f64::NEG_INFINITY, (k1, lo[1]));
            for k2 in lo[1]..=hi[1] {
                let v = lower_bound(k1 as f64, k2 as f64, params);
                if v > best.0 {
                    best = (v, (k1, k2));
                }
            }
            best
        })
        .reduce(
            || (f64::NEG_INFINITY, (0, 0)),
            |a, b| if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a },
        )
}

/// Leading growth rate: continued fraction if unstable, else the matrix.
pub fn leading_sigma(prob: &StabilityProblem) -> Result<f64> {
    match sigma_star(prob)? {
        CfOutcome::Root(r) => Ok(r.sigma),
        CfOutcome::NoUnstableRoot => Ok(sigma_star_matrix(prob)?.sigma),
    }
}

/// For each `ε`, maximizes the lower bound over integer `(k1, k2)` in the
/// search box (or case default), solves for `σ*` at the maximizer and
/// fits the scaling exponent.
pub fn regime_scan(
    case: CaseId,
    template: &PhysicalParams,
    epsilon_values: &[f64],
    alpha: Option<f64>,
    k_box: Option<[i64; 2]>,
) -> Result<RegimeScanResult> {
    if epsilon_values.is_empty() {
        return Err(invalid("epsilon_values", "empty"));
    }
    if epsilon_values.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(invalid("epsilon_values", "must be strictly decreasing"));
    }
    if epsilon_values.iter().any(|e| !(*e > 0.0)) {
        return Err(invalid("epsilon_values", "must be positive"));
    }
    let alpha_value = match (case, alpha) {
        (CaseId::IV, Some(a)) if a > 0.0 => a,
        (CaseId::IV, _) => return Err(invalid("alpha", "case iv needs alpha > 0")),
        _ => 0.0,
    };
    let mut out = RegimeScanResult {
        case_id: case,
        epsilon_values: epsilon_values.to_vec(),
        alpha: (case == CaseId::IV).then_some(alpha_value),
        sigma_star: Vec::new(),
        sigma_lower: Vec::new(),
        argmax_k: Vec::new(),
        fitted_exponent: f64::NAN,
        warnings: Vec::new(),
    };
    for &eps in epsilon_values {
        let params = case_params(case, template, eps, alpha_value);
        let (lo, mut hi) = default_box(case, eps);
        if let (Some(b), CaseId::II | CaseId::III) = (k_box, case) {
            hi = b;
        }
        let (value, k) = maximize_lower(&params, lo, hi);
        if case != CaseId::I && (k.0 == hi[0] || k.1 == hi[1]) && case != CaseId::IV {
            out.warnings.push(format!(
                "eps = {eps}: maximizer ({}, {}) on the search-box boundary; enlarge the box",
                k.0, k.1
            ));
        }
        let prob = StabilityProblem::new(k.0, k.1, params, 64.max(4 * params.forcing_m as usize))?;
        out.sigma_star.push(leading_sigma(&prob)?);
        out.sigma_lower.push(value);
        out.argmax_k.push(k);
    }
    if out.sigma_star.iter().all(|s| *s > 0.0) && epsilon_values.len() >= 2 {
        let x: Vec<f64> = epsilon_values.iter().map(|e| e.ln()).collect();
        let y: Vec<f64> = out.sigma_star.iter().map(|s| s.ln()).collect();
        out.fitted_exponent = linear_fit(&x, &y).0;
    }
    Ok(out)
}

/// Nonlinear estimate of a growth rate and its comparison with `σ*`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CrossCheck {
    pub fitted_rate: f64,
    pub r_squared: f64,
    /// Leading linear rate (continued fraction or matrix).
    pub sigma_star: f64,
    pub relative_error: f64,
    /// Window actually used for the fit.
    pub window: [f64; 2],
    pub shortened: bool,
    /// Perturbation size at the end of the window relative to `A`.
    pub final_amplitude_ratio: f64,
}

/// `‖θ − Θ₀‖_{L²}` restricted to the seeded horizontal modes `(±k1, ±k2)`.
pub fn seeded_amplitude(theta: &SpectralScalar, base: &SpectralScalar, k1: i64, k2: i64) -> f64 {
    let g = theta.grid;
    let mut sum = 0.0;
    for i in 0..g.len() {
        let k = g.wavevector(i);
        if k[0].abs() == k1 && k[1].abs() == k2 {
            sum += (theta.coeffs[i] - base.coeffs[i]).norm_sqr();
        }
    }
    (sum * g.cell_volume() * g.len() as f64).sqrt()
}

/// Simulates `Θ₀ + 1e−6 A sin(k1 x1) sin(k2 x2) sin(m x3)` with the forcing
/// that holds `Θ₀` steady and fits the growth of the seeded horizontal
/// modes over `window`. The window ends early, at the last clean sample,
/// once the perturbation exceeds `1e−2 A` or once the part of it outside
/// the seeded modes reaches 1% of the seeded part.
pub fn growth_rate_crosscheck(prob: &StabilityProblem, grid: Grid, dt: f64, window: [f64; 2]) -> Result<CrossCheck> {
    let p = prob.params;
    if !(p.eps_kappa > 0.0) {
        return Err(invalid("eps_kappa", "the cross-check needs eps_kappa > 0"));
    }
    if !(window[1] > window[0] && window[0] >= 0.0) {
        return Err(invalid("window", "need 0 <= t_a < t_b"));
    }
    let base = crate::evolve::mg_steady_profile(grid, &p)?;
    let theta0 = steady_plus_perturbation(grid, &p, prob.k1, prob.k2)?;
    let mut state = SimState::new(theta0, p, ForcingSpec::MgSteady)?;
    let mut stepper = Stepper::for_state(&state)?;
    // L² norm of A sin(m x3); without a base state there is nothing to saturate
    let reference = p.amplitude_a.abs() * (2.0 * std::f64::consts::PI).powf(1.5) / 2f64.sqrt();
    let limit = if reference > 0.0 { 1e-2 * reference } else { f64::INFINITY };

    let mut times = vec![0.0];
    let mut values = vec![seeded_amplitude(&state.theta, &base, prob.k1, prob.k2)];
    let mut end = window[1];
    let mut shortened = false;
    let steps = (window[1] / dt - 1e-9).ceil() as usize;
    for s in 1..=steps {
        let target = (s as f64 * dt).min(window[1]);
        let h = target - state.t;
        stepper.step(&mut state, h)?;
        state.t = target;
        let seeded = seeded_amplitude(&state.theta, &base, prob.k1, prob.k2);
        let total = state.theta.sub(&base).l2_parseval();
        let stray = (total * total - seeded * seeded).max(0.0).sqrt();
        if target >= window[0] && (seeded > limit || stray >= 1e-2 * seeded) {
            shortened = true;
            end = times[times.len() - 1];
            break;
        }
        times.push(target);
        values.push(seeded);
    }
    let series = NormSeries::new(times.clone(), values.clone(), NormSpec::lp(2.0), "seeded")?;
    let fit = fit_growth_rate(&series, [window[0], end])?;
    let sigma_star = leading_sigma(prob)?;
    Ok(CrossCheck {
        fitted_rate: fit.rate,
        r_squared: fit.r_squared,
        sigma_star,
        relative_error: (fit.rate - sigma_star).abs() / sigma_star.abs().max(f64::MIN_POSITIVE),
        window: [window[0], end],
        shortened,
        final_amplitude_ratio: if reference > 0.0 { values[values.len() - 1] / reference } else { 0.0 },
    })
}
