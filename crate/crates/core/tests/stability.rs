use mgspectral::multiplier::symbol;
use mgspectral::stability::{
    assemble_ladder, growth_rate_crosscheck, lower_bound, regime_scan, rho, sigma_bounds, sigma_star, sigma_star_cf,
    sigma_star_matrix, truncation_change, CaseId, CfOutcome, StabilityProblem,
};
use mgspectral::{Grid, PhysicalParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn bench() -> PhysicalParams {
    PhysicalParams {
        n_squared: 1.0,
        eps_nu: 0.0,
        eps_kappa: 0.0,
        damping_c: 0.0,
        amplitude_a: 10.0,
        forcing_m: 1,
    }
}

/// `(σ + ε_κ(h + j²)) c_j + P_j[A m cos(m x3) Σ ρ_n c_n sin(n x3)]` for
/// `j = 1..=n`, with the sine projection done by an exact trapezoid sum.
fn galerkin_residual(prob: &StabilityProblem, sigma: f64, c: &[f64]) -> f64 {
    let p = &prob.params;
    let m = p.forcing_m as f64;
    let h = (prob.k1 * prob.k1 + prob.k2 * prob.k2) as f64;
    let n = c.len();
    let samples = 4 * (n + p.forcing_m as usize + 2);
    let xs: Vec<f64> = (0..samples).map(|i| 2.0 * std::f64::consts::PI * i as f64 / samples as f64).collect();
    let f: Vec<f64> = xs
        .iter()
        .map(|x| {
            let series: f64 = (1..=n).map(|k| rho(k as i64, prob) * c[k - 1] * (k as f64 * x).sin()).sum();
            p.amplitude_a * m * (m * x).cos() * series
        })
        .collect();
    (1..=n)
        .map(|j| {
            let proj: f64 = xs.iter().zip(&f).map(|(x, v)| v * (j as f64 * x).sin()).sum::<f64>() * 2.0 / samples as f64;
            ((sigma + p.eps_kappa * (h + (j * j) as f64)) * c[j - 1] + proj).abs()
        })
        .fold(0.0, f64::max)
}

#[test]
fn eigenpairs_satisfy_the_sine_series_equation() {
    for (m, k1, k2, eps_nu, eps_kappa) in [(1, 1, 1, 0.0, 0.0), (1, 3, 2, 0.05, 0.02), (2, 2, 1, 0.01, 0.01), (3, 1, 2, 0.0, 0.1)]
    {
        let p = PhysicalParams {
            eps_nu,
            eps_kappa,
            forcing_m: m,
            ..bench()
        };
        let prob = StabilityProblem::new(k1, k2, p, 16).unwrap();
        let pair = sigma_star_matrix(&prob).unwrap();
        let r = galerkin_residual(&prob, pair.sigma, &pair.c);
        assert!(r <= 1e-12 * pair.sigma.abs().max(1.0), "m = {m}: residual {r:e}");
    }
}

#[test]
fn rho_is_the_vertical_symbol() {
    for eps_nu in [0.0, 0.2] {
        let p = PhysicalParams { eps_nu, ..bench() };
        let prob = StabilityProblem::new(3, 2, p, 64).unwrap();
        for n in 1..=64 {
            assert_eq!(rho(n, &prob), symbol([3, 2, n], &p).m3);
        }
    }
    let prob = StabilityProblem::new(1, 1, bench(), 16).unwrap();
    assert_eq!(rho(1, &prob), 0.5);
}

#[test]
fn degenerate_wavevector_and_short_ladder_are_rejected() {
    assert!(StabilityProblem::new(0, 0, bench(), 64).is_err());
    assert!(StabilityProblem::new(1, 1, bench(), 8).is_err());
    let m5 = PhysicalParams { forcing_m: 5, ..bench() };
    assert!(StabilityProblem::new(1, 1, m5, 16).is_err());
}

#[test]
fn ladder_classes_never_mix() {
    for m in 1..=3u32 {
        let p = PhysicalParams { forcing_m: m, eps_kappa: 0.1, eps_nu: 0.1, ..bench() };
        let l = assemble_ladder(&StabilityProblem::new(2, 1, p, 24).unwrap());
        for i in 0..24 {
            for j in 0..24 {
                // reflection at j <= 0 pairs residue r with m − r
                let class = |n: usize| {
                    let r = n % m as usize;
                    r.min(m as usize - r)
                };
                if class(i + 1) != class(j + 1) {
                    assert_eq!(l[(i, j)], 0.0, "m = {m}: ({i}, {j})");
                }
            }
        }
    }
}

#[test]
fn benchmark_bounds_and_bisection_count() {
    let prob = StabilityProblem::new(1, 1, bench(), 64).unwrap();
    let b = sigma_bounds(&prob);
    assert_eq!((b.lower, b.upper), (0.4, 5.0));
    let CfOutcome::Root(r) = sigma_star_cf(&prob, b).unwrap() else {
        panic!("no root")
    };
    assert!(r.bisections <= 60, "{} bisections", r.bisections);
    assert!(b.lower < r.sigma && r.sigma < b.upper);
}

#[test]
fn zero_amplitude_has_no_unstable_root() {
    let p = PhysicalParams { amplitude_a: 0.0, eps_kappa: 0.1, ..bench() };
    let prob = StabilityProblem::new(1, 1, p, 64).unwrap();
    assert_eq!(sigma_star(&prob).unwrap(), CfOutcome::NoUnstableRoot);
    let b = sigma_bounds(&prob);
    assert!((b.lower + 0.1 * 6.0).abs() < 1e-15 && (b.upper + 0.1 * 3.0).abs() < 1e-15);
    assert!((sigma_star_matrix(&prob).unwrap().sigma + 0.3).abs() < 1e-14);
}

#[test]
fn inviscid_lower_bound_on_the_parabola() {
    let p = PhysicalParams { forcing_m: 2, n_squared: 1.5, ..bench() };
    for j in [2i64, 5, 9, 30] {
        let (k1, k2) = (j as f64, (j as f64).sqrt());
        let (a, m, n2) = (p.amplitude_a, 2.0, p.n_squared);
        let h = k1 * k1 + k2 * k2;
        let want = a * m * n2 / 2.0 * h * k2 * k2 / (4.0 * n2 * n2 * m * m * (h + 4.0 * m * m) + k2.powi(4));
        assert!((lower_bound(k1, k2, &p) - want).abs() <= 1e-14 * want);
    }
}

#[test]
fn random_sample_cf_matrix_and_sandwich() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut tested = 0;
    let mut worst_gap: f64 = 0.0;
    let mut worst_trunc: f64 = 0.0;
    while tested < 50 {
        let p = PhysicalParams {
            n_squared: rng.gen_range(0.5..2.0),
            eps_nu: if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(0.0..0.1) },
            eps_kappa: rng.gen_range(0.0..0.05),
            damping_c: 0.0,
            amplitude_a: rng.gen_range(1.0..50.0),
            forcing_m: rng.gen_range(1..=3),
        };
        let prob = StabilityProblem::new(rng.gen_range(1..8), rng.gen_range(1..8), p, 64).unwrap();
        let b = sigma_bounds(&prob);
        if b.lower <= 0.0 {
            continue;
        }
        tested += 1;
        let matrix = sigma_star_matrix(&prob).unwrap().sigma;
        let cf = sigma_star(&prob).unwrap().sigma().expect("positive lower bound implies a root");
        worst_gap = worst_gap.max((cf - matrix).abs() / matrix);
        assert!(b.lower < cf && cf < b.upper, "{prob:?}: {cf} outside [{}, {}]", b.lower, b.upper);
        worst_trunc = worst_trunc.max(truncation_change(&prob).unwrap());
    }
    assert!(worst_gap <= 1e-6, "worst gap {worst_gap:e}");
    assert!(worst_trunc <= 1e-8, "worst truncation change {worst_trunc:e}");
}

#[test]
fn inviscid_growth_is_linear_in_j() {
    let s = |j: i64| {
        let k2 = (j as f64).sqrt().round() as i64;
        sigma_star(&StabilityProblem::new(j, k2, bench(), 64).unwrap()).unwrap().sigma().unwrap()
    };
    for j in [4, 8, 16] {
        let ratio = s(2 * j) / s(j);
        assert!((1.5..=2.5).contains(&ratio), "j = {j}: {ratio}");
    }
}

#[test]
fn scan_flags_a_box_that_is_too_small() {
    let r = regime_scan(CaseId::II, &bench(), &[1e-2], None, Some([5, 3])).unwrap();
    assert_eq!(r.warnings.len(), 1);
    let r = regime_scan(CaseId::II, &bench(), &[1e-1, 1e-2], None, None).unwrap();
    assert!(r.warnings.is_empty());
    assert_eq!(r.argmax_k.len(), 2);
    assert!(regime_scan(CaseId::II, &bench(), &[1e-2, 1e-1], None, None).is_err());
    assert!(regime_scan(CaseId::IV, &bench(), &[1e-2], None, None).is_err());
}

#[test]
fn case_iv_quadratic_viscosity_stays_stable() {
    let r = regime_scan(CaseId::IV, &bench(), &[1e-2, 1e-3, 1e-4], Some(2.0), None).unwrap();
    assert!(r.sigma_lower.iter().all(|l| *l < 0.0), "{:?}", r.sigma_lower);
}

#[test]
fn heat_decay_without_forcing_amplitude() {
    let p = PhysicalParams { amplitude_a: 0.0, eps_nu: 0.1, eps_kappa: 0.1, ..bench() };
    let prob = StabilityProblem::new(2, 1, p, 16).unwrap();
    let c = growth_rate_crosscheck(&prob, Grid::cubic(16).unwrap(), 0.01, [0.5, 3.0]).unwrap();
    let want = -0.1 * (4.0 + 1.0 + 1.0);
    assert!((c.fitted_rate - want).abs() <= 0.02 * want.abs(), "{c:?}");
    assert!(!c.shortened);
}

#[test]
fn crosscheck_needs_diffusion() {
    let prob = StabilityProblem::new(1, 1, bench(), 16).unwrap();
    assert!(growth_rate_crosscheck(&prob, Grid::cubic(16).unwrap(), 0.01, [0.5, 1.0]).is_err());
}
