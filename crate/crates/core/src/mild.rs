//! Duhamel form `θ(t) = G(t)θ₀ + B(θ,θ)(t)` and its Picard iteration.
//!
//! `B(φ,ψ)(t) = −∫₀ᵗ G(t−τ) ∇·(M[φ]ψ)(τ) dτ` is evaluated by product
//! integration: the flux is sampled at Gauss–Legendre nodes on panels
//! graded quadratically towards `τ = 0`, interpolated per panel, and
//! integrated against the exact heat factor `e^{−λ(t−τ)}` with
//! sub-intervals refined geometrically towards `τ = t`. The weights depend
//! on `k` only through `|k|²`, so they are tabulated once per shell.

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::evolve::advective_flux;
use crate::multiplier::{heat_multiplier, PhysicalParams, SymbolTable};
use crate::spectral::{Grid, NormSpec, SpectralScalar};

/// `G(t)θ₀`, the heat flow with diffusivity `ε_κ`.
pub fn heat_propagate(theta0: &SpectralScalar, t: f64, eps_kappa: f64) -> Result<SpectralScalar> {
    if t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    heat_multiplier([0, 0, 0], t, eps_kappa)?;
    Ok(theta0.apply_multiplier(|k| {
        let k2 = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64;
        (-eps_kappa * t * k2).exp()
    }))
}

/// Quadrature nodes on `(0, T]`.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeMesh {
    pub horizon: f64,
    /// Panel breakpoints `T (j/P)²`, `j = 0..=P`.
    pub breaks: Vec<f64>,
    pub order: usize,
    /// Gauss nodes, `order` per panel, increasing.
    pub nodes: Vec<f64>,
}

impl TimeMesh {
    pub fn graded(horizon: f64, panels: usize, order: usize) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(invalid("horizon", format!("{horizon} must be > 0")));
        }
        if panels == 0 || order == 0 {
            return Err(invalid("panels", "empty quadrature"));
        }
        let breaks: Vec<f64> = (0..=panels)
            .map(|j| horizon * (j as f64 / panels as f64).powi(2))
            .collect();
        let rule = gauss_rule(order);
        let mut nodes = Vec::with_capacity(panels * order);
        for w in breaks.windows(2) {
            for (x, _) in &rule {
                nodes.push(0.5 * (w[1] - w[0]) * (x + 1.0) + w[0]);
            }
        }
        Ok(Self {
            horizon,
            breaks,
            order,
            nodes,
        })
    }

    pub fn panels(&self) -> usize {
        self.breaks.len() - 1
    }

    /// Output times: every node followed by `T`.
    pub fn outputs(&self) -> Vec<f64> {
        let mut t = self.nodes.clone();
        t.push(self.horizon);
        t
    }
}

fn gauss_rule(n: usize) -> Vec<(f64, f64)> {
    let degree = NonZeroUsize::new(n).expect("positive order");
    let mut pairs = GaussLegendre::new(degree).as_node_weight_pairs().to_vec();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs
}

/// Heat and Duhamel weights for one grid, parameter set and mesh.
pub struct MildOperator {
    grid: Grid,
    mesh: TimeMesh,
    symbols: SymbolTable,
    shell: Vec<usize>,
    nshell: usize,
    /// `weights[i][node * nshell + s]`.
    weights: Vec<Vec<f64>>,
    /// `heat[i][s] = e^{−λ_s t_i}`.
    heat: Vec<Vec<f64>>,
    p: f64,
}

impl MildOperator {
    pub fn new(grid: Grid, params: &PhysicalParams, mesh: TimeMesh) -> Result<Self> {
        params.validate()?;
        let nshell = grid.max_k_squared() + 1;
        let shell: Vec<usize> = grid.k_squared().iter().map(|k| *k as usize).collect();
        let lambda: Vec<f64> = (0..nshell)
            .map(|s| params.eps_kappa * s as f64 + params.damping_c)
            .collect();
        let lmax = lambda.iter().cloned().fold(0.0, f64::max);
        let outputs = mesh.outputs();
        let fine = gauss_rule(12);
        let q = mesh.order;
        let weights: Vec<Vec<f64>> = outputs
            .par_iter()
            .map(|&t| {
                let mut w = vec![0.0; mesh.nodes.len() * nshell];
                for j in 0..mesh.panels() {
                    let (a, b) = (mesh.breaks[j], mesh.breaks[j + 1]);
                    if a >= t {
                        break;
                    }
                    let upper = b.min(t);
                    let len = upper - a;
                    let nodes = &mesh.nodes[j * q..(j + 1) * q];
                    let levels = (len * lmax).max(1.0).log2().ceil() as usize + 2;
                    let mut cuts = vec![a];
                    for l in 1..=levels {
                        cuts.push(upper - len / 2f64.powi(l as i32));
                    }
                    cuts.push(upper);
                    cuts.dedup();
                    for c in cuts.windows(2) {
                        let half = 0.5 * (c[1] - c[0]);
                        for (x, wq) in &fine {
                            let tau = half * (x + 1.0) + c[0];
                            let ell = lagrange(nodes, tau);
                            for s in 0..nshell {
                                let e = wq * half * (-lambda[s] * (t - tau)).exp();
                                for (a_idx, l) in ell.iter().enumerate() {
                                    w[(j * q + a_idx) * nshell + s] += e * l;
                                }
                            }
                        }
                    }
                }
                w
            })
            .collect();
        let heat = outputs
            .iter()
            .map(|t| lambda.iter().map(|l| (-l * t).exp()).collect())
            .collect();
        Ok(Self {
            grid,
            mesh,
            symbols: SymbolTable::new(grid, params),
            shell,
            nshell,
            weights,
            heat,
            p: 4.0,
        })
    }

    /// Changes the Lebesgue exponent of the weighted norm (`p > 3`).
    pub fn with_exponent(mut self, p: f64) -> Result<Self> {
        if !(p > 3.0) {
            return Err(invalid("p", format!("{p} must exceed 3")));
        }
        self.p = p;
        Ok(self)
    }

    pub fn mesh(&self) -> &TimeMesh {
        &self.mesh
    }

    pub fn exponent(&self) -> f64 {
        self.p
    }

    /// `G(t_i)θ₀` at every output.
    pub fn heat(&self, theta0: &SpectralScalar) -> Vec<SpectralScalar> {
        self.heat
            .iter()
            .map(|h| {
                let coeffs = theta0
                    .coeffs
                    .iter()
                    .zip(&self.shell)
                    .map(|(c, s)| c * h[*s])
                    .collect();
                SpectralScalar {
                    grid: self.grid,
                    coeffs,
                    zero_mean: theta0.zero_mean,
                }
            })
            .collect()
    }

    /// `B(φ,ψ)` at every output, from samples of `φ, ψ` at the mesh nodes.
    pub fn bilinear(&self, phi: &[SpectralScalar], psi: &[SpectralScalar]) -> Result<Vec<SpectralScalar>> {
        let n = self.mesh.nodes.len();
        if phi.len() < n || psi.len() < n {
            return Err(invalid("phi", format!("need samples at all {n} nodes")));
        }
        let flux: Vec<Vec<Complex64>> = (0..n)
            .map(|i| advective_flux(&self.symbols, &phi[i], &psi[i]).0)
            .collect();
        Ok(self.integrate(&flux))
    }

    fn integrate(&self, flux: &[Vec<Complex64>]) -> Vec<SpectralScalar> {
        let nshell = self.nshell;
        self.weights
            .iter()
            .map(|w| {
                let coeffs = (0..self.grid.len())
                    .into_par_iter()
                    .map(|k| {
                        let s = self.shell[k];
                        let mut acc = Complex64::default();
                        for (node, f) in flux.iter().enumerate() {
                            acc += f[k] * w[node * nshell + s];
                        }
                        acc
                    })
                    .collect();
                SpectralScalar {
                    grid: self.grid,
                    coeffs,
                    zero_mean: true,
                }
            })
            .collect()
    }

    /// `sup_i t_i^{1/2 − 3/(2p)} ‖f(t_i)‖_{L^p}` over the outputs.
    pub fn weighted_norm(&self, fields: &[SpectralScalar]) -> f64 {
        let e = 0.5 - 1.5 / self.p;
        self.mesh
            .outputs()
            .iter()
            .zip(fields)
            .map(|(t, f)| t.powf(e) * f.norm(NormSpec::lp(self.p)))
            .fold(0.0, f64::max)
    }
}

fn lagrange(nodes: &[f64], x: f64) -> Vec<f64> {
    (0..nodes.len())
        .map(|a| {
            nodes
                .iter()
                .enumerate()
                .filter(|(b, _)| *b != a)
                .map(|(_, xb)| (x - xb) / (nodes[a] - xb))
                .product()
        })
        .collect()
}

/// `B(φ,ψ)` on `mesh` for fields sampled at its nodes.
pub fn bilinear_b(
    mesh: &TimeMesh,
    phi: &[SpectralScalar],
    psi: &[SpectralScalar],
    params: &PhysicalParams,
) -> Result<Vec<SpectralScalar>> {
    let grid = phi
        .first()
        .ok_or_else(|| invalid("phi", "empty quadrature"))?
        .grid;
    MildOperator::new(grid, params, mesh.clone())?.bilinear(phi, psi)
}

/// Converged Picard iterate on the outputs of its mesh.
#[derive(Clone, Debug)]
pub struct MildIterate {
    pub horizon_t: f64,
    pub mesh: TimeMesh,
    pub time_nodes: Vec<f64>,
    pub fields: Vec<SpectralScalar>,
    pub weighted_norm: f64,
    /// Weighted norm of the heat flow `θ₁ = G(t)θ₀`.
    pub heat_norm: f64,
    pub p: f64,
    /// Number of `B` corrections applied.
    pub iterations: usize,
    pub halvings: usize,
    pub last_change: f64,
}

impl MildIterate {
    /// Field at the horizon.
    pub fn final_field(&self) -> &SpectralScalar {
        self.fields.last().expect("at least two outputs")
    }
}

/// Settings for [`picard_solve`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PicardOptions {
    pub max_iter: usize,
    pub tol: f64,
    pub panels: usize,
    pub order: usize,
    pub p: f64,
    pub max_halvings: usize,
}

impl Default for PicardOptions {
    fn default() -> Self {
        Self {
            max_iter: 50,
            tol: 1e-10,
            panels: 8,
            order: 6,
            p: 4.0,
            max_halvings: 4,
        }
    }
}

enum Attempt {
    Converged(MildIterate),
    Diverged(String),
}

fn picard_attempt(theta0: &SpectralScalar, horizon: f64, params: &PhysicalParams, opts: &PicardOptions) -> Result<Attempt> {
    let mesh = TimeMesh::graded(horizon, opts.panels, opts.order)?;
    let op = MildOperator::new(theta0.grid, params, mesh.clone())?.with_exponent(opts.p)?;
    let theta1 = op.heat(theta0);
    let heat_norm = op.weighted_norm(&theta1);
    let mut current = theta1.clone();
    let mut last = f64::INFINITY;
    let mut rises = 0;
    for it in 1..=opts.max_iter {
        let b = op.bilinear(&current, &current)?;
        let next: Vec<SpectralScalar> = theta1
            .iter()
            .zip(&b)
            .map(|(h, b)| {
                let mut f = h.clone();
                f.axpy(1.0, b);
                f
            })
            .collect();
        let diff: Vec<SpectralScalar> = next.iter().zip(&current).map(|(a, b)| a.sub(b)).collect();
        let change = op.weighted_norm(&diff);
        let size = op.weighted_norm(&next);
        if !change.is_finite() || !size.is_finite() || size > 1e6 * heat_norm.max(f64::MIN_POSITIVE) {
            return Ok(Attempt::Diverged(format!("iterate blew up at iteration {it}")));
        }
        rises = if change > last { rises + 1 } else { 0 };
        if rises >= 3 {
            return Ok(Attempt::Diverged(format!("corrections grew three times in a row by iteration {it}")));
        }
        last = change;
        current = next;
        if change <= opts.tol * heat_norm.max(1.0) {
            return Ok(Attempt::Converged(MildIterate {
                horizon_t: horizon,
                time_nodes: mesh.outputs(),
                mesh,
                weighted_norm: size,
                heat_norm,
                fields: current,
                p: opts.p,
                iterations: it,
                halvings: 0,
                last_change: change,
            }));
        }
    }
    Ok(Attempt::Diverged(format!("no convergence in {} iterations (last change {last:e})", opts.max_iter)))
}

/// Picard iteration `θ_{n+1} = G(t)θ₀ + B(θ_n, θ_n)` on `(0, T]`, halving
/// `T` on divergence.
pub fn picard_solve(theta0: &SpectralScalar, horizon: f64, params: &PhysicalParams, opts: &PicardOptions) -> Result<MildIterate> {
    params.validate()?;
    if !(params.eps_kappa > 0.0) {
        return Err(invalid("eps_kappa", "the mild formulation needs eps_kappa > 0"));
    }
    if theta0.coeffs[0].norm() > 0.0 {
        return Err(invalid("theta0", "initial field must have zero mean"));
    }
    let mut t = horizon;
    let mut why = String::new();
    for halvings in 0..=opts.max_halvings {
        match picard_attempt(theta0, t, params, opts)? {
            Attempt::Converged(mut sol) => {
                sol.halvings = halvings;
                return Ok(sol);
            }
            Attempt::Diverged(msg) => why = msg,
        }
        t *= 0.5;
    }
    Err(Error::Divergence(format!(
        "{why}; gave up after {} halvings of T = {horizon}",
        opts.max_halvings
    )))
}

/// `max_i ‖θ(t_i) − G(t_i)θ₀ − B(θ,θ)(t_i)‖_{L²}`.
pub fn mild_residual(sol: &MildIterate, theta0: &SpectralScalar, params: &PhysicalParams) -> Result<f64> {
    let op = MildOperator::new(theta0.grid, params, sol.mesh.clone())?;
    let heat = op.heat(theta0);
    let b = op.bilinear(&sol.fields, &sol.fields)?;
    Ok(sol
        .fields
        .iter()
        .zip(heat.iter().zip(&b))
        .map(|(f, (h, b))| {
            let mut r = f.sub(h);
            r.axpy(-1.0, b);
            r.norm(NormSpec::lp(2.0))
        })
        .fold(0.0, f64::max))
}

/// A-posteriori contraction evidence for a converged solve.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct ContractionCheck {
    /// `sup ‖B(φ,φ)‖/‖φ‖²` over the sampled `φ`.
    pub k_hat: f64,
    pub heat_norm: f64,
    /// `4 K̂ ‖θ₁‖`; below 1 means the fixed-point argument applies.
    pub product: f64,
}

/// Samples `φ(t) = G(t)φ₀` for `samples` random smooth `φ₀` of the same
/// `L²` size as `θ₀`.
pub fn contraction_check(
    sol: &MildIterate,
    theta0: &SpectralScalar,
    params: &PhysicalParams,
    samples: usize,
    seed: u64,
) -> Result<ContractionCheck> {
    let op = MildOperator::new(theta0.grid, params, sol.mesh.clone())?.with_exponent(sol.p)?;
    let size = theta0.norm(NormSpec::lp(2.0)).max(1e-3);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut k_hat: f64 = 0.0;
    for _ in 0..samples {
        let kmax = rng.gen_range(1.0..4.0);
        let phi0 = SpectralScalar::random_smooth(theta0.grid, rng.gen(), kmax, size);
        let phi = op.heat(&phi0);
        let b = op.bilinear(&phi, &phi)?;
        let n = op.weighted_norm(&phi);
        k_hat = k_hat.max(op.weighted_norm(&b) / (n * n));
    }
    Ok(ContractionCheck {
        k_hat,
        heat_norm: sol.heat_norm,
        product: 4.0 * k_hat * sol.heat_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> PhysicalParams {
        PhysicalParams {
            n_squared: 1.0,
            eps_nu: 1.0,
            eps_kappa: 0.5,
            damping_c: 0.0,
            amplitude_a: 1.0,
            forcing_m: 1,
        }
    }

    #[test]
    fn heat_examples() {
        let g = Grid::cubic(8).unwrap();
        let s = SpectralScalar::sine_mode(g, [0, 0, 1], 1.0).unwrap();
        let h = heat_propagate(&s, 1.0, 1.0).unwrap();
        assert!(h.sub(&s.scaled((-1f64).exp())).max_abs_coeff() < 1e-16);
        assert_eq!(heat_propagate(&s, 0.0, 1.0).unwrap(), s);
        assert!(heat_propagate(&s, -1.0, 1.0).is_err());
    }

    #[test]
    fn mesh_layout() {
        let m = TimeMesh::graded(1.0, 4, 3).unwrap();
        assert_eq!(m.nodes.len(), 12);
        assert_eq!(m.outputs().len(), 13);
        assert!(m.nodes.windows(2).all(|w| w[1] > w[0]));
        assert!(m.nodes[0] > 0.0 && *m.nodes.last().unwrap() < 1.0);
        assert!(TimeMesh::graded(1.0, 0, 3).is_err());
        assert!(TimeMesh::graded(0.0, 2, 3).is_err());
    }

    #[test]
    fn weights_integrate_heat_kernel_exactly() {
        // with unit flux on one shell, B equals ∫₀ᵗ e^{−λ(t−τ)} dτ
        let g = Grid::cubic(8).unwrap();
        let p = params();
        let op = MildOperator::new(g, &p, TimeMesh::graded(1.0, 4, 4).unwrap()).unwrap();
        let idx = g.index_of([1, 2, 0]).unwrap();
        let mut f = vec![Complex64::default(); g.len()];
        f[idx] = Complex64::new(1.0, 0.0);
        let flux = vec![f; op.mesh.nodes.len()];
        let out = op.integrate(&flux);
        let lambda = 0.5 * 5.0;
        for (t, o) in op.mesh.outputs().iter().zip(&out) {
            let exact = (1.0 - (-lambda * t).exp()) / lambda;
            assert!((o.coeffs[idx].re - exact).abs() < 1e-13, "{t}");
        }
    }

    #[test]
    fn bilinear_zero_cases() {
        let g = Grid::cubic(8).unwrap();
        let p = params();
        let mesh = TimeMesh::graded(0.5, 2, 3).unwrap();
        let z = vec![SpectralScalar::zeros(g); mesh.nodes.len()];
        let r: Vec<SpectralScalar> = (0..mesh.nodes.len())
            .map(|i| SpectralScalar::random_smooth(g, i as u64, 2.0, 1.0))
            .collect();
        for b in bilinear_b(&mesh, &z, &r, &p).unwrap().iter().chain(&bilinear_b(&mesh, &r, &z, &p).unwrap()) {
            assert_eq!(b.max_abs_coeff(), 0.0);
        }
        let s = SpectralScalar::sine_mode(g, [0, 0, 1], 1.0).unwrap();
        let heat: Vec<SpectralScalar> = mesh.nodes.iter().map(|t| heat_propagate(&s, *t, 0.5).unwrap()).collect();
        for b in bilinear_b(&mesh, &heat, &heat, &p).unwrap() {
            assert_eq!(b.max_abs_coeff(), 0.0);
        }
        assert!(bilinear_b(&mesh, &[], &[], &p).is_err());
    }

    #[test]
    fn picard_single_mode_and_zero() {
        let g = Grid::cubic(8).unwrap();
        let p = params();
        let s = SpectralScalar::sine_mode(g, [0, 0, 1], 1.0).unwrap();
        let sol = picard_solve(&s, 1.0, &p, &PicardOptions::default()).unwrap();
        assert_eq!(sol.iterations, 1);
        assert_eq!(sol.halvings, 0);
        let exact = s.scaled((-0.5f64).exp());
        assert!(sol.final_field().sub(&exact).max_abs_coeff() < 1e-15);
        assert!(mild_residual(&sol, &s, &p).unwrap() <= 1e-10);

        let z = SpectralScalar::zeros(g);
        let sol = picard_solve(&z, 1.0, &p, &PicardOptions::default()).unwrap();
        assert_eq!(sol.weighted_norm, 0.0);
        assert_eq!(mild_residual(&sol, &z, &p).unwrap(), 0.0);
    }

    #[test]
    fn picard_requires_diffusion() {
        let g = Grid::cubic(8).unwrap();
        let s = SpectralScalar::sine_mode(g, [0, 0, 1], 1.0).unwrap();
        let p = PhysicalParams { eps_kappa: 0.0, ..params() };
        assert!(picard_solve(&s, 1.0, &p, &PicardOptions::default()).is_err());
    }
}
