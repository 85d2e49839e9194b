mod common;

use common::{fgn_corr, mean_se, tanh_sinh, var_se};
use fracvol::rng::{fill_standard_normal, stream_rng};
use fracvol::{
    fbm_covariance, fbm_via_kernel, fractional_noise, generate_fbm, kernel_k, FbmGenerator,
    FbmGrid, FbmMethod, KernelSpec, VolterraKernel,
};

#[test]
fn covariance_examples() {
    for h in [0.3, 0.5, 0.83] {
        assert!((fbm_covariance(1.0_f64, 1.0, h).unwrap() - 1.0).abs() < 1e-15);
    }
    assert!((fbm_covariance(1.0_f64, 2.0, 0.5).unwrap() - 1.0).abs() < 1e-15);
    // ½·2^{1.66}, evaluated at 50 digits
    let want = 1.580_082_623_726_754_f64;
    assert!((fbm_covariance(1.0, 2.0, 0.83).unwrap() - want).abs() < 1e-14);
    assert_eq!(
        fbm_covariance(2.0, 1.0, 0.83).unwrap(),
        fbm_covariance(1.0, 2.0, 0.83).unwrap()
    );
    assert!(fbm_covariance(-1.0, 1.0, 0.5).is_err());
    assert!(fbm_covariance(1.0, 1.0, 1.0).is_err());
}

#[test]
fn marginal_variance_matches_power_law() {
    let grid = FbmGrid::new(1024, 1.0).unwrap();
    let gen = FbmGenerator::new(grid, 0.83, FbmMethod::Auto).unwrap();
    let paths = gen.sample_batch(101, 10_000);
    for t in [1usize, 256, 1024] {
        let x: Vec<f64> = paths.iter().map(|p| p.values()[t]).collect();
        // zero-mean estimator: E[X²] with SE from the sample of X²
        let sq: Vec<f64> = x.iter().map(|v| v * v).collect();
        let (m, se) = mean_se(&sq);
        let want = (t as f64).powf(1.66);
        assert!(
            (m - want).abs() < 3.0 * se,
            "t={t}: {m} vs {want} (se {se})"
        );
    }
}

#[test]
fn brownian_increments_are_uncorrelated() {
    let grid = FbmGrid::new(256, 1.0).unwrap();
    let gen = FbmGenerator::new(grid, 0.5, FbmMethod::Auto).unwrap();
    let paths = gen.sample_batch(102, 10_000);
    // lag-1 correlation of increments, one pair per path at a fixed position
    let pairs: Vec<f64> = paths
        .iter()
        .map(|p| {
            let v = p.values();
            (v[101] - v[100]) * (v[102] - v[101])
        })
        .collect();
    let (m, _) = mean_se(&pairs);
    assert!(m.abs() < 3.0 / (pairs.len() as f64).sqrt(), "{m}");
}

#[test]
fn fractional_noise_variance_and_stationarity() {
    let grid = FbmGrid::new(64, 1.0).unwrap();
    let gen = FbmGenerator::new(grid, 0.83, FbmMethod::Auto).unwrap();
    let paths = gen.sample_batch(103, 10_000);
    for delta in [1.0, 2.0] {
        let noise: Vec<Vec<f64>> = paths
            .iter()
            .map(|p| fractional_noise(p, delta).unwrap())
            .collect();
        let want = f64::powf(delta, 1.66);
        for idx in [0usize, 20, noise[0].len() - 1] {
            let x: Vec<f64> = noise.iter().map(|n| n[idx]).collect();
            let (v, se) = var_se(&x);
            assert!(
                (v - want).abs() < 3.0 * se,
                "δ={delta} i={idx}: {v} vs {want}"
            );
        }
    }
    // positive lag-1 autocorrelation of unit-lag noise (long memory)
    let prod: Vec<f64> = paths
        .iter()
        .map(|p| {
            let n = fractional_noise(p, 1.0).unwrap();
            n[30] * n[31]
        })
        .collect();
    let (m, se) = mean_se(&prod);
    assert!(m > 3.0 * se);
    assert!((m - fgn_corr(1.0, 0.83)).abs() < 3.0 * se);
}

#[test]
fn fractional_noise_edge_cases() {
    let grid = FbmGrid::new(8, 0.5).unwrap();
    let p = generate_fbm(grid, 0.7, 1).unwrap();
    let whole = fractional_noise(&p, 4.0).unwrap();
    assert_eq!(whole, vec![p.values()[8]]);
    assert!(fractional_noise(&p, 0.75).is_err());
    assert!(fractional_noise(&p, 4.5).is_err());
}

#[test]
fn generation_is_bit_reproducible() {
    let grid = FbmGrid::new(333, 0.1).unwrap();
    for method in [FbmMethod::Circulant, FbmMethod::Hosking] {
        let gen = FbmGenerator::new(grid, 0.83, method).unwrap();
        let a = gen.sample(&mut stream_rng(5, 3));
        let b = gen.sample(&mut stream_rng(5, 3));
        assert_eq!(a, b);
    }
}

#[test]
fn hosking_and_circulant_agree_in_law() {
    let grid = FbmGrid::new(8, 1.0).unwrap();
    let c = FbmGenerator::new(grid, 0.7, FbmMethod::Circulant)
        .unwrap()
        .sample_batch(7, 20_000);
    let h = FbmGenerator::new(grid, 0.7, FbmMethod::Hosking)
        .unwrap()
        .sample_batch(8, 20_000);
    for (i, j) in [(8usize, 8usize), (3, 8), (1, 2)] {
        let want = fbm_covariance(i as f64, j as f64, 0.7).unwrap();
        for batch in [&c, &h] {
            let x: Vec<f64> = batch
                .iter()
                .map(|p| p.values()[i] * p.values()[j])
                .collect();
            let (m, se) = mean_se(&x);
            assert!((m - want).abs() < 4.0 * se, "({i},{j}): {m} vs {want}");
        }
    }
}

fn kernel_oracle(t: f64, s: f64, h: f64) -> f64 {
    let a = h - 0.5;
    // ∫_0^{t−s} v^{a−1} (s+v)^a dv, singular at v = 0
    let inner = tanh_sinh(|v| v.powf(a - 1.0) * (s + v).powf(a), 0.0, t - s, 1e-13);
    s.powf(-a) * inner
}

#[test]
fn kernel_matches_independent_quadrature() {
    for (t, s, h) in [
        (2.0, 1.0, 0.83),
        (1.0, 0.5, 0.6),
        (5.0, 0.01, 0.7),
        (1.0, 0.999, 0.95),
        (3.0, 1e-6, 0.55),
    ] {
        let spec = KernelSpec::new(h).unwrap();
        let got = kernel_k(t, s, &spec).unwrap() / spec.normalization();
        let want = kernel_oracle(t, s, h);
        assert!(got > 0.0);
        assert!(
            (got / want - 1.0).abs() < 1e-8,
            "K({t},{s}; H={h}): {got} vs {want}"
        );
    }
}

#[test]
fn kernel_self_similarity() {
    let spec = KernelSpec::new(0.6).unwrap();
    let base = kernel_k(1.0, 0.5, &spec).unwrap();
    for lambda in [0.01, 3.0, 250.0] {
        let scaled = kernel_k(lambda, 0.5 * lambda, &spec).unwrap();
        let want = f64::powf(lambda, 0.1) * base;
        assert!((scaled / want - 1.0).abs() < 1e-8);
    }
}

#[test]
fn kernel_synthesis_variance_at_fine_grid() {
    let n = 512;
    let grid = FbmGrid::new(n, 1.0 / n as f64).unwrap();
    let spec = KernelSpec::new(0.83).unwrap();
    let kernel = VolterraKernel::new(grid, spec).unwrap();
    let sqdt = grid.dt().sqrt();
    let ends: Vec<f64> = (0..10_000u64)
        .map(|p| {
            let mut dw = vec![0.0; n];
            fill_standard_normal(&mut stream_rng(104, p), &mut dw);
            dw.iter_mut().for_each(|x| *x *= sqdt);
            kernel.synthesize(&dw).unwrap().values()[n]
        })
        .collect();
    let sq: Vec<f64> = ends.iter().map(|v| v * v).collect();
    let (m, _) = mean_se(&sq);
    assert!((m - 1.0).abs() < 0.02, "Var(B_H(1)) = {m}");
    // exact covariance of the scheme is closer still
    assert!((kernel.discrete_covariance(n, n) - 1.0).abs() < 0.005);
}

#[test]
fn kernel_synthesis_tracks_brownian_path_near_half() {
    let n = 256;
    let grid = FbmGrid::new(n, 1.0 / n as f64).unwrap();
    let spec = KernelSpec::new(0.5001).unwrap();
    let mut dw = vec![0.0; n];
    fill_standard_normal(&mut stream_rng(105, 0), &mut dw);
    let sqdt = grid.dt().sqrt();
    dw.iter_mut().for_each(|x| *x *= sqdt);
    let b = fbm_via_kernel(grid, &spec, &dw).unwrap();
    let mut w = 0.0;
    let mut worst = 0.0_f64;
    for i in 1..=n {
        w += dw[i - 1];
        worst = worst.max((b.values()[i] - w).abs());
    }
    assert!(worst < 0.01, "max deviation {worst}");
}
