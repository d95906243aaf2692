//! Real scalar fields on the periodic box `[0, 2π]³` in grid and Fourier
//! representation, together with the transforms, the 2/3 dealiasing rule,
//! spectral differentiation and the Lebesgue/Sobolev norms.
//!
//! Coefficients are stored in FFT order: index `(i1 * n2 + i2) * n3 + i3`
//! holds the wavevector whose component on each axis is `i` for
//! `i < n/2` and `i - n` otherwise. The forward transform carries the
//! factor `1/(n1 n2 n3)`, so a coefficient equals the Fourier coefficient
//! of the trigonometric interpolant: `sin(x3)` has `-i/2` at `k = (0,0,1)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fft;

/// Uniform periodic grid with `n_i` points (and modes) per axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Grid {
    pub n1: usize,
    pub n2: usize,
    pub n3: usize,
}

impl Grid {
    pub fn new(n1: usize, n2: usize, n3: usize) -> Result<Self> {
        for (axis, n) in [n1, n2, n3].into_iter().enumerate() {
            if n < 8 || n % 2 != 0 {
                return Err(Error::InvalidGrid(format!(
                    "axis {} has {} points; need an even count >= 8",
                    axis + 1,
                    n
                )));
            }
        }
        Ok(Self { n1, n2, n3 })
    }

    pub fn cubic(n: usize) -> Result<Self> {
        Self::new(n, n, n)
    }

    pub fn dims(&self) -> [usize; 3] {
        [self.n1, self.n2, self.n3]
    }

    pub fn len(&self) -> usize {
        self.n1 * self.n2 * self.n3
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Quadrature weight of one cell, `(2π)³ / (n1 n2 n3)`.
    pub fn cell_volume(&self) -> f64 {
        (2.0 * PI).powi(3) / self.len() as f64
    }

    /// Smallest grid spacing.
    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.n1.max(self.n2).max(self.n3) as f64
    }

    #[inline]
    pub fn index(&self, i1: usize, i2: usize, i3: usize) -> usize {
        (i1 * self.n2 + i2) * self.n3 + i3
    }

    #[inline]
    pub fn unravel(&self, idx: usize) -> [usize; 3] {
        let i3 = idx % self.n3;
        let rest = idx / self.n3;
        [rest / self.n2, rest % self.n2, i3]
    }

    /// Wavevector stored at flat index `idx`.
    #[inline]
    pub fn wavevector(&self, idx: usize) -> [i64; 3] {
        let [i1, i2, i3] = self.unravel(idx);
        [
            wavenumber(i1, self.n1),
            wavenumber(i2, self.n2),
            wavenumber(i3, self.n3),
        ]
    }

    /// Flat index of wavevector `k`, if it is representable on the grid.
    pub fn index_of(&self, k: [i64; 3]) -> Option<usize> {
        let mut out = [0usize; 3];
        for (axis, n) in self.dims().into_iter().enumerate() {
            let half = (n / 2) as i64;
            if k[axis] < -half || k[axis] >= half {
                return None;
            }
            out[axis] = k[axis].rem_euclid(n as i64) as usize;
        }
        Some(self.index(out[0], out[1], out[2]))
    }

    /// Flat index of `-k` for the wavevector stored at `idx`.
    #[inline]
    pub fn mirror(&self, idx: usize) -> usize {
        let [i1, i2, i3] = self.unravel(idx);
        self.index(
            (self.n1 - i1) % self.n1,
            (self.n2 - i2) % self.n2,
            (self.n3 - i3) % self.n3,
        )
    }

    /// True when `k_i` sits on the Nyquist plane of some axis.
    #[inline]
    pub fn is_nyquist(&self, idx: usize) -> bool {
        let [i1, i2, i3] = self.unravel(idx);
        i1 == self.n1 / 2 || i2 == self.n2 / 2 || i3 == self.n3 / 2
    }

    /// Physical coordinates of grid point `idx`.
    pub fn point(&self, idx: usize) -> [f64; 3] {
        let [i1, i2, i3] = self.unravel(idx);
        [
            2.0 * PI * i1 as f64 / self.n1 as f64,
            2.0 * PI * i2 as f64 / self.n2 as f64,
            2.0 * PI * i3 as f64 / self.n3 as f64,
        ]
    }

    /// `|k|²` at every flat index.
    pub fn k_squared(&self) -> Vec<f64> {
        (0..self.len())
            .map(|i| {
                let k = self.wavevector(i);
                (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64
            })
            .collect()
    }

    /// Largest integer `|k|²` present on the grid.
    pub fn max_k_squared(&self) -> usize {
        self.dims().iter().map(|n| (n / 2) * (n / 2)).sum()
    }

    /// Mask of modes kept by the 2/3 rule: `|k_i| <= n_i / 3` on every axis.
    pub fn retained(&self, idx: usize) -> bool {
        let k = self.wavevector(idx);
        self.dims()
            .iter()
            .zip(k)
            .all(|(&n, ki)| 3 * ki.unsigned_abs() as usize <= n)
    }
}

#[inline]
fn wavenumber(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// Derivative order `s` and integrability `p` of a Sobolev norm.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct NormSpec {
    pub s: f64,
    pub p: f64,
    pub homogeneous: bool,
}

impl NormSpec {
    pub fn new(s: f64, p: f64, homogeneous: bool) -> Result<Self> {
        if !(s >= 0.0) {
            return Err(crate::error::invalid("s", format!("{s} < 0")));
        }
        if !(p >= 1.0) {
            return Err(crate::error::invalid("p", format!("{p} < 1")));
        }
        Ok(Self { s, p, homogeneous })
    }

    /// Plain `L^p`.
    pub fn lp(p: f64) -> Self {
        Self {
            s: 0.0,
            p,
            homogeneous: false,
        }
    }

    /// Homogeneous `Ẇ^{s,p}` (Riesz multiplier `|k|^s`, mean excluded).
    pub fn homogeneous(s: f64, p: f64) -> Self {
        Self {
            s,
            p,
            homogeneous: true,
        }
    }

    /// Inhomogeneous `W^{s,p}` (Bessel multiplier `(1+|k|²)^{s/2}`).
    pub fn sobolev(s: f64, p: f64) -> Self {
        Self {
            s,
            p,
            homogeneous: false,
        }
    }

    pub fn label(&self) -> String {
        let p = if self.p.is_infinite() {
            "inf".to_string()
        } else {
            format!("{}", self.p)
        };
        if self.s == 0.0 && !self.homogeneous {
            format!("L{p}")
        } else if self.homogeneous {
            format!("Wdot{}_{}", self.s, p)
        } else {
            format!("W{}_{}", self.s, p)
        }
    }
}

/// Result of a norm evaluation; `mean_excluded` flags a homogeneous norm
/// applied to a field with nonzero mean.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormReport {
    pub value: f64,
    pub mean_excluded: bool,
}

/// Real field sampled on the uniform grid.
#[derive(Clone, Debug, PartialEq)]
pub struct PhysicalScalar {
    pub grid: Grid,
    pub samples: Vec<f64>,
}

impl PhysicalScalar {
    pub fn new(grid: Grid, samples: Vec<f64>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} samples for a grid of {}",
                samples.len(),
                grid.len()
            )));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("physical samples".into()));
        }
        Ok(Self { grid, samples })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            samples: vec![0.0; grid.len()],
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn([f64; 3]) -> f64 + Sync) -> Self {
        let samples = (0..grid.len())
            .into_par_iter()
            .map(|i| f(grid.point(i)))
            .collect();
        Self { grid, samples }
    }

    /// Riemann-sum `L^p` norm; `p = ∞` is the grid maximum.
    pub fn lp_norm(&self, p: f64) -> f64 {
        lp_of_samples(&self.samples, p, self.grid.cell_volume())
    }

    pub fn max(&self) -> f64 {
        self.samples.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.samples.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

pub(crate) fn lp_of_samples(samples: &[f64], p: f64, weight: f64) -> f64 {
    if p.is_infinite() {
        return samples.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    }
    if p == 2.0 {
        let s: f64 = samples.iter().map(|v| v * v).sum();
        return (s * weight).sqrt();
    }
    let s: f64 = samples.iter().map(|v| v.abs().powf(p)).sum();
    (s * weight).powf(1.0 / p)
}

/// Real field in Fourier representation.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralScalar {
    pub grid: Grid,
    pub coeffs: Vec<Complex64>,
    pub zero_mean: bool,
}

impl SpectralScalar {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            coeffs: vec![Complex64::default(); grid.len()],
            zero_mean: true,
        }
    }

    /// Wraps raw coefficients after enforcing Hermitian symmetry.
    pub fn from_coeffs(grid: Grid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} coefficients for a grid of {}",
                coeffs.len(),
                grid.len()
            )));
        }
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::NonFinite("spectral coefficients".into()));
        }
        let mut out = Self {
            grid,
            coeffs,
            zero_mean: false,
        };
        out.symmetrize();
        out.zero_mean = out.coeffs[0] == Complex64::default();
        Ok(out)
    }

    /// `amplitude * sin(k·x)` for a single wavevector `k`.
    pub fn sine_mode(grid: Grid, k: [i64; 3], amplitude: f64) -> Result<Self> {
        let mut out = Self::zeros(grid);
        out.add_sine(k, amplitude)?;
        Ok(out)
    }

    /// `amplitude * cos(k·x)` for a single nonzero wavevector `k`.
    pub fn cosine_mode(grid: Grid, k: [i64; 3], amplitude: f64) -> Result<Self> {
        let mut out = Self::zeros(grid);
        let (pos, neg) = out.mode_pair(k)?;
        out.coeffs[pos] += Complex64::new(0.5 * amplitude, 0.0);
        out.coeffs[neg] += Complex64::new(0.5 * amplitude, 0.0);
        Ok(out)
    }

    /// Adds `amplitude * sin(k·x)`.
    pub fn add_sine(&mut self, k: [i64; 3], amplitude: f64) -> Result<()> {
        let (pos, neg) = self.mode_pair(k)?;
        self.coeffs[pos] += Complex64::new(0.0, -0.5 * amplitude);
        self.coeffs[neg] += Complex64::new(0.0, 0.5 * amplitude);
        Ok(())
    }

    fn mode_pair(&self, k: [i64; 3]) -> Result<(usize, usize)> {
        let mk = [-k[0], -k[1], -k[2]];
        match (self.grid.index_of(k), self.grid.index_of(mk)) {
            (Some(a), Some(b)) if k != [0, 0, 0] && a != b => Ok((a, b)),
            _ => Err(crate::error::invalid(
                "k",
                format!("wavevector {k:?} is not a resolvable nonzero mode"),
            )),
        }
    }

    /// `amplitude * sin(k1 x1) sin(k2 x2) sin(k3 x3)`.
    pub fn sine_product(grid: Grid, k: [i64; 3], amplitude: f64) -> Result<Self> {
        // product of three sines = sum over sign patterns of exponentials
        let mut out = Self::zeros(grid);
        let factor = Complex64::new(0.0, -0.5).powu(3) * amplitude;
        for s1 in [1i64, -1] {
            for s2 in [1i64, -1] {
                for s3 in [1i64, -1] {
                    let kk = [s1 * k[0], s2 * k[1], s3 * k[2]];
                    let idx = grid.index_of(kk).ok_or_else(|| {
                        crate::error::invalid("k", format!("{kk:?} not on grid"))
                    })?;
                    let sign = (s1 * s2 * s3) as f64;
                    out.coeffs[idx] += factor * sign;
                }
            }
        }
        out.zero_mean = out.coeffs[0] == Complex64::default();
        Ok(out)
    }

    /// Random smooth mean-zero field with Gaussian coefficients on
    /// `0 < |k| <= kmax`, decaying like `exp(-|k|²/kmax)`, scaled to the
    /// requested `L²` norm.
    pub fn random_smooth(grid: Grid, seed: u64, kmax: f64, l2_norm: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut coeffs = vec![Complex64::default(); grid.len()];
        for (idx, c) in coeffs.iter_mut().enumerate() {
            let k = grid.wavevector(idx);
            let k2 = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64;
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            if k2 > 0.0 && k2 <= kmax * kmax && !grid.is_nyquist(idx) {
                *c = Complex64::new(re, im) * (-k2 / kmax).exp();
            }
        }
        let mut out = Self {
            grid,
            coeffs,
            zero_mean: true,
        };
        out.symmetrize();
        out.coeffs[0] = Complex64::default();
        let norm = out.l2_parseval();
        if norm > 0.0 {
            out.scale(l2_norm / norm);
        }
        out
    }

    /// Replaces `c(k)` by `(c(k) + conj c(-k)) / 2`.
    pub fn symmetrize(&mut self) {
        let grid = self.grid;
        let src = self.coeffs.clone();
        self.coeffs
            .par_iter_mut()
            .enumerate()
            .for_each(|(i, c)| *c = 0.5 * (src[i] + src[grid.mirror(i)].conj()));
    }

    /// Largest `|c(k) - conj c(-k)|`.
    pub fn hermitian_defect(&self) -> f64 {
        (0..self.coeffs.len())
            .map(|i| (self.coeffs[i] - self.coeffs[self.grid.mirror(i)].conj()).norm())
            .fold(0.0, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.coeffs[0].re
    }

    /// Sets the `k = 0` coefficient to zero.
    pub fn remove_mean(&mut self) {
        self.coeffs[0] = Complex64::default();
        self.zero_mean = true;
    }

    pub fn scale(&mut self, a: f64) {
        self.coeffs.par_iter_mut().for_each(|c| *c *= a);
    }

    pub fn scaled(&self, a: f64) -> Self {
        let mut out = self.clone();
        out.scale(a);
        out
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: f64, other: &SpectralScalar) {
        debug_assert_eq!(self.grid, other.grid);
        self.coeffs
            .par_iter_mut()
            .zip(other.coeffs.par_iter())
            .for_each(|(c, o)| *c += a * o);
        self.zero_mean = self.zero_mean && other.zero_mean;
    }

    pub fn sub(&self, other: &SpectralScalar) -> Self {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out.zero_mean = self.coeffs[0] == other.coeffs[0];
        out
    }

    /// Spectral `ℓ²` norm scaled to match `‖f‖_{L²(T³)}`.
    pub fn l2_parseval(&self) -> f64 {
        let s: f64 = self.coeffs.iter().map(|c| c.norm_sqr()).sum();
        (s * (2.0 * PI).powi(3)).sqrt()
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Multiplies every coefficient by `f(k)`.
    pub fn apply_multiplier(&self, f: impl Fn([i64; 3]) -> f64 + Sync) -> Self {
        let grid = self.grid;
        let coeffs = self
            .coeffs
            .par_iter()
            .enumerate()
            .map(|(i, c)| c * f(grid.wavevector(i)))
            .collect();
        Self {
            grid,
            coeffs,
            zero_mean: self.zero_mean,
        }
    }

    /// Zeroes every mode with `|k_i| > n_i / 3` on some axis.
    pub fn dealias(&self) -> Self {
        let mut out = self.clone();
        out.dealias_in_place();
        out
    }

    pub fn dealias_in_place(&mut self) {
        let grid = self.grid;
        self.coeffs.par_iter_mut().enumerate().for_each(|(i, c)| {
            if !grid.retained(i) {
                *c = Complex64::default();
            }
        });
    }

    /// Partial derivative along `axis` (0-based); Nyquist modes map to 0.
    pub fn derivative(&self, axis: usize) -> Self {
        let grid = self.grid;
        let coeffs = self
            .coeffs
            .par_iter()
            .enumerate()
            .map(|(i, c)| {
                if grid.is_nyquist(i) {
                    Complex64::default()
                } else {
                    c * Complex64::new(0.0, grid.wavevector(i)[axis] as f64)
                }
            })
            .collect();
        Self {
            grid,
            coeffs,
            zero_mean: true,
        }
    }

    /// Discrete Sobolev norm: multiplier in Fourier space, then the
    /// Riemann-sum `L^p` norm of the resulting grid function.
    pub fn norm(&self, spec: NormSpec) -> f64 {
        self.norm_report(spec).value
    }

    pub fn norm_report(&self, spec: NormSpec) -> NormReport {
        let mean_excluded = spec.homogeneous && self.coeffs[0].norm() > 0.0;
        let field = if spec.s == 0.0 && !spec.homogeneous {
            self.clone()
        } else if spec.homogeneous {
            let s = spec.s;
            self.apply_multiplier(move |k| {
                let k2 = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64;
                if k2 == 0.0 {
                    0.0
                } else {
                    k2.powf(0.5 * s)
                }
            })
        } else {
            let s = spec.s;
            self.apply_multiplier(move |k| {
                let k2 = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64;
                (1.0 + k2).powf(0.5 * s)
            })
        };
        let phys = field.to_physical();
        NormReport {
            value: phys.lp_norm(spec.p),
            mean_excluded,
        }
    }

    /// `‖ |∇f| ‖_{L^p}` with the Euclidean length of the gradient.
    pub fn gradient_norm(&self, p: f64) -> f64 {
        let [g1, g2, g3] = [0, 1, 2].map(|a| self.derivative(a));
        let (a, b) = to_physical_pair(&g1, &g2);
        let c = g3.to_physical();
        let mag: Vec<f64> = a
            .samples
            .iter()
            .zip(&b.samples)
            .zip(&c.samples)
            .map(|((x, y), z)| (x * x + y * y + z * z).sqrt())
            .collect();
        lp_of_samples(&mag, p, self.grid.cell_volume())
    }

    /// Smooth radial low-pass at scale `n`: multiplier `φ(|k|/n)` with
    /// `φ = 1` on `[0, 1/2]`, `φ = 0` on `[1, ∞)` and a C^∞ transition.
    pub fn mollify(&self, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(crate::error::invalid("n", "mollifier scale must be >= 1"));
        }
        let scale = n as f64;
        Ok(self.apply_multiplier(move |k| {
            let r = ((k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64).sqrt() / scale;
            cutoff_profile(r)
        }))
    }

    /// Inverse transform to grid samples (real part).
    pub fn to_physical(&self) -> PhysicalScalar {
        let mut data = self.coeffs.clone();
        fft::plan(self.grid).inverse(&mut data);
        PhysicalScalar {
            grid: self.grid,
            samples: data.into_iter().map(|c| c.re).collect(),
        }
    }

    /// Largest imaginary part produced by the inverse transform.
    pub fn imaginary_residue(&self) -> f64 {
        let mut data = self.coeffs.clone();
        fft::plan(self.grid).inverse(&mut data);
        data.iter().map(|c| c.im.abs()).fold(0.0, f64::max)
    }
}

/// Smooth cutoff profile used by [`SpectralScalar::mollify`].
pub fn cutoff_profile(r: f64) -> f64 {
    fn psi(x: f64) -> f64 {
        if x > 0.0 {
            (-1.0 / x).exp()
        } else {
            0.0
        }
    }
    if r <= 0.5 {
        return 1.0;
    }
    if r >= 1.0 {
        return 0.0;
    }
    let a = psi(2.0 - 2.0 * r);
    let b = psi(2.0 * r - 1.0);
    a / (a + b)
}

/// Forward transform with Hermitian symmetry enforced on the output.
pub fn to_spectral(f: &PhysicalScalar) -> Result<SpectralScalar> {
    if f.samples.len() != f.grid.len() {
        return Err(Error::GridMismatch("sample count".into()));
    }
    if f.samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("physical samples".into()));
    }
    let mut data: Vec<Complex64> = f.samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft::plan(f.grid).forward(&mut data);
    let inv = 1.0 / f.grid.len() as f64;
    data.par_iter_mut().for_each(|c| *c *= inv);
    let mut out = SpectralScalar {
        grid: f.grid,
        coeffs: data,
        zero_mean: false,
    };
    out.symmetrize();
    Ok(out)
}

pub fn to_physical(g: &SpectralScalar) -> PhysicalScalar {
    g.to_physical()
}

/// Inverse-transforms two real fields with one complex FFT.
pub fn to_physical_pair(a: &SpectralScalar, b: &SpectralScalar) -> (PhysicalScalar, PhysicalScalar) {
    let grid = a.grid;
    let mut data: Vec<Complex64> = a
        .coeffs
        .par_iter()
        .zip(b.coeffs.par_iter())
        .map(|(x, y)| x + Complex64::i() * y)
        .collect();
    fft::plan(grid).inverse(&mut data);
    let re = data.iter().map(|c| c.re).collect();
    let im = data.iter().map(|c| c.im).collect();
    (
        PhysicalScalar { grid, samples: re },
        PhysicalScalar { grid, samples: im },
    )
}
