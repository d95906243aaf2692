//! The constitutive Fourier multiplier `u = M[θ]` of the magneto-geostrophic
//! model, the heat-semigroup multiplier, and scans of their structure.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::spectral::{Grid, SpectralScalar};

/// Model constants shared by every module.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    /// Inverse Elsasser number `N²`.
    pub n_squared: f64,
    /// Viscosity `ε_ν`.
    pub eps_nu: f64,
    /// Thermal diffusivity `ε_κ`.
    pub eps_kappa: f64,
    /// Linear damping rate `c`.
    pub damping_c: f64,
    /// Amplitude `A` of the steady profile `A sin(m x3)`.
    pub amplitude_a: f64,
    /// Vertical wavenumber `m` of the steady profile.
    pub forcing_m: u32,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self {
            n_squared: 1.0,
            eps_nu: 1.0,
            eps_kappa: 0.1,
            damping_c: 0.0,
            amplitude_a: 1.0,
            forcing_m: 1,
        }
    }
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.n_squared > 0.0) || !self.n_squared.is_finite() {
            return Err(invalid("n_squared", format!("{} must be > 0", self.n_squared)));
        }
        for (name, v) in [
            ("eps_nu", self.eps_nu),
            ("eps_kappa", self.eps_kappa),
            ("damping_c", self.damping_c),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(invalid(name, format!("{v} must be finite and >= 0")));
            }
        }
        if !self.amplitude_a.is_finite() {
            return Err(invalid("amplitude_a", "must be finite"));
        }
        if self.forcing_m < 1 {
            return Err(invalid("forcing_m", "must be >= 1"));
        }
        Ok(())
    }

    pub fn with_eps(mut self, eps_nu: f64, eps_kappa: f64) -> Self {
        self.eps_nu = eps_nu;
        self.eps_kappa = eps_kappa;
        self
    }
}

/// The three components `M̂_j(k)`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct SymbolValue {
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
}

impl SymbolValue {
    pub fn max_abs(&self) -> f64 {
        self.m1.abs().max(self.m2.abs()).max(self.m3.abs())
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.m1, self.m2, self.m3]
    }
}

/// Evaluates the symbol at an integer wavevector. The `k3 = 0` plane
/// (including `k = 0`) maps to zero.
pub fn symbol(k: [i64; 3], params: &PhysicalParams) -> SymbolValue {
    if k[2] == 0 {
        return SymbolValue::default();
    }
    symbol_real([k[0] as f64, k[1] as f64, k[2] as f64], params)
}

fn symbol_real(k: [f64; 3], params: &PhysicalParams) -> SymbolValue {
    let [k1, k2, k3] = k;
    let n2 = params.n_squared;
    let n4 = n2 * n2;
    let horizontal = k1 * k1 + k2 * k2;
    let ksq = horizontal + k3 * k3;
    let b = k2 * k2 + params.eps_nu * (ksq * ksq);
    // D(k) >= N⁴ k3² > 0 off the k3 = 0 plane
    let d = n4 * ksq * k3 * k3 + b * b;
    SymbolValue {
        m1: (n4 * k2 * k3 * ksq - n2 * k1 * k3 * b) / d,
        m2: (-n4 * k1 * k3 * ksq - n2 * k2 * k3 * b) / d,
        m3: n2 * horizontal * b / d,
    }
}

/// `exp(-ε_κ t |k|²)`.
pub fn heat_multiplier(k: [i64; 3], t: f64, eps_kappa: f64) -> Result<f64> {
    if t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    let k2 = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64;
    Ok((-eps_kappa * t * k2).exp())
}

/// Symbol values tabulated in FFT order for one grid and parameter set.
#[derive(Clone, Debug)]
pub struct SymbolTable {
    pub grid: Grid,
    pub params: PhysicalParams,
    pub m: [Vec<f64>; 3],
    /// 2/3-rule mask, cached for the advection kernel.
    pub(crate) keep: Vec<bool>,
}

impl SymbolTable {
    pub fn new(grid: Grid, params: &PhysicalParams) -> Self {
        let values: Vec<SymbolValue> = (0..grid.len())
            .into_par_iter()
            .map(|i| symbol(grid.wavevector(i), params))
            .collect();
        let m = [
            values.iter().map(|v| v.m1).collect(),
            values.iter().map(|v| v.m2).collect(),
            values.iter().map(|v| v.m3).collect(),
        ];
        let keep = (0..grid.len()).into_par_iter().map(|i| grid.retained(i)).collect();
        Self {
            grid,
            params: *params,
            m,
            keep,
        }
    }

    /// `û_j(k) = M̂_j(k) θ̂(k)`.
    pub fn apply(&self, theta: &SpectralScalar) -> SpectralVelocity {
        assert_eq!(theta.grid, self.grid, "symbol table built for another grid");
        let u = [0, 1, 2].map(|j| {
            let coeffs: Vec<Complex64> = theta
                .coeffs
                .par_iter()
                .zip(self.m[j].par_iter())
                .map(|(c, m)| c * m)
                .collect();
            SpectralScalar {
                grid: self.grid,
                coeffs,
                zero_mean: true,
            }
        });
        SpectralVelocity { u }
    }
}

/// Drift velocity in Fourier representation.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralVelocity {
    pub u: [SpectralScalar; 3],
}

impl SpectralVelocity {
    /// Largest `|Σ_j k_j û_j(k)|` over all modes.
    pub fn divergence_defect(&self) -> f64 {
        let grid = self.u[0].grid;
        (0..grid.len())
            .map(|i| {
                let k = grid.wavevector(i);
                (0..3)
                    .map(|j| self.u[j].coeffs[i] * k[j] as f64)
                    .sum::<Complex64>()
                    .norm()
            })
            .fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.u
            .iter()
            .all(|c| c.coeffs.iter().all(|z| *z == Complex64::default()))
    }
}

/// `u = M[θ]` for a single field (builds a symbol table on the fly).
pub fn apply_m(theta: &SpectralScalar, params: &PhysicalParams) -> SpectralVelocity {
    SymbolTable::new(theta.grid, params).apply(theta)
}

/// One row of the smoothing/growth scan.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SmoothingRow {
    /// Shell index `K` (the wavevector magnitude scale).
    pub shell: usize,
    /// Viscous: `ε_ν |k|² M̂₃(K,0,1)`. Inviscid: `M̂₃(K, round(√K), 1)`.
    pub axis_value: f64,
    /// `sup_{K <= |k| < K+1} max_j |M̂_j(k)|`, scaled by `ε_ν |k|²` when viscous.
    pub shell_sup: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SmoothingProfile {
    pub viscous: bool,
    pub rows: Vec<SmoothingRow>,
}

/// Tabulates how the symbol behaves at large `|k|`: bounded decay like
/// `1/(ε_ν |k|²)` when viscous, unbounded growth along the parabola
/// `k2 ≈ √k1` when inviscid.
pub fn smoothing_profile(params: &PhysicalParams, kmax: usize) -> Result<SmoothingProfile> {
    if kmax < 8 {
        return Err(invalid("kmax", format!("{kmax} < 8")));
    }
    let viscous = params.eps_nu > 0.0;
    let r = kmax as i64 + 1;
    // shell sups over the ball |k| < kmax + 1
    let sups: Vec<f64> = (-r..=r)
        .into_par_iter()
        .map(|k1| {
            let mut local = vec![0.0f64; kmax + 1];
            for k2 in -r..=r {
                for k3 in -r..=r {
                    let k2sum = (k1 * k1 + k2 * k2 + k3 * k3) as f64;
                    let mag = k2sum.sqrt();
                    let shell = mag.floor() as usize;
                    if shell == 0 || shell > kmax {
                        continue;
                    }
                    let v = symbol([k1, k2, k3], params).max_abs();
                    let v = if viscous { v * params.eps_nu * k2sum } else { v };
                    local[shell] = local[shell].max(v);
                }
            }
            local
        })
        .reduce(
            || vec![0.0; kmax + 1],
            |a, b| a.iter().zip(&b).map(|(x, y)| x.max(*y)).collect(),
        );
    let rows = (1..=kmax)
        .map(|shell| {
            let kk = shell as i64;
            let axis_value = if viscous {
                let k2sum = (kk * kk + 1) as f64;
                params.eps_nu * k2sum * symbol([kk, 0, 1], params).m3
            } else {
                let k2 = (shell as f64).sqrt().round() as i64;
                symbol([kk, k2, 1], params).m3
            };
            SmoothingRow {
                shell,
                axis_value,
                shell_sup: sups[shell],
            }
        })
        .collect();
    Ok(SmoothingProfile { viscous, rows })
}

/// `sup_{2ⁿ <= |k| < 2ⁿ⁺¹} max_j |M̂_j(k)| |k|²` for `n = 0..levels`.
pub fn dyadic_smoothing_sups(params: &PhysicalParams, levels: u32) -> Vec<f64> {
    let r = 1i64 << levels;
    (-r..=r)
        .into_par_iter()
        .map(|k1| {
            let mut local = vec![0.0f64; levels as usize];
            for k2 in -r..=r {
                for k3 in -r..=r {
                    let k2sum = (k1 * k1 + k2 * k2 + k3 * k3) as f64;
                    if k2sum < 1.0 {
                        continue;
                    }
                    let level = k2sum.sqrt().log2().floor() as usize;
                    if level >= levels as usize {
                        continue;
                    }
                    let v = symbol([k1, k2, k3], params).max_abs() * k2sum;
                    local[level] = local[level].max(v);
                }
            }
            local
        })
        .reduce(
            || vec![0.0; levels as usize],
            |a, b| a.iter().zip(&b).map(|(x, y)| x.max(*y)).collect(),
        )
}
