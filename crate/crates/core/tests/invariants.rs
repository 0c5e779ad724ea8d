use std::f64::consts::PI;

use proptest::prelude::*;
use subwave::dislocation::{
    midgap_interval, midgap_summary, removed_roots_with, toeplitz_blocks, ZoneSampler,
};
use subwave::spectra::{band_gap, band_structure, finite_spectrum};
use subwave::stability::{midgap_branches, stability_experiment, SIGMA_GRID};
use subwave::{build_finite_chain, finite_capacitance, ChainParams, Error, FiniteChain};

fn dilute(sep: f64) -> ChainParams {
    ChainParams::unit_sphere(9.0, sep, 0.1, 1e-4).unwrap()
}

fn array_params() -> ChainParams {
    ChainParams::unit_sphere(9.0, 6.0, 1.0, 1.0 / 7000.0).unwrap()
}

#[test]
fn truncated_spectrum_lies_within_bands() {
    let p = dilute(6.0);
    let b = band_structure(&p, 512).unwrap();
    let lo = b.omega1.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = b.omega2.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let s = finite_spectrum(&build_finite_chain(&p, 10, 0.0).unwrap()).unwrap();
    for w in s.frequencies {
        assert!(w >= lo * 0.95 && w <= hi * 1.05, "{w} outside [{lo}, {hi}]");
    }
}

#[test]
fn bands_are_even_in_alpha() {
    let b = band_structure(&dilute(6.0), 200).unwrap();
    let n = b.alphas.len();
    for i in 0..n / 2 {
        let j = n - 2 - i;
        assert_eq!(b.alphas[i], -b.alphas[j]);
        assert!((b.omega1[i] - b.omega1[j]).abs() < 1e-14);
        assert!((b.omega2[i] - b.omega2[j]).abs() < 1e-14);
    }
}

#[test]
fn band_csv_row_count() {
    let b = band_structure(&dilute(6.0), 1024).unwrap();
    let mut buf = vec![];
    b.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), 1024);
}

#[test]
fn toeplitz_structure_up_to_eight_blocks() {
    let p = dilute(6.0);
    let (lo, hi) = band_gap(&p).unwrap();
    for k in 1..4 {
        let w = lo + (hi - lo) * k as f64 / 4.0;
        let t = toeplitz_blocks(&p, w, 8).unwrap();
        assert!(t.hermitian_residual() < 1e-10);
        assert!(t.centrosymmetry_residual() < 1e-10);
        assert!(t.block_symmetry_residual() < 1e-10);
    }
}

#[test]
fn limit_frequency_sits_in_every_bracket() {
    let p = dilute(6.0);
    let s = ZoneSampler::new(&p).unwrap();
    let r = midgap_summary(&s, 5).unwrap();
    for &(_, a, b) in &r.brackets {
        assert!(a < r.omega_inf && r.omega_inf < b);
    }
    let (a, b) = midgap_interval(&p).unwrap();
    assert_eq!((a, b), r.interval);
    assert!(r.gap.0 < a && b < r.gap.1);
}

#[test]
fn no_midgap_below_half_filling() {
    let p = dilute(3.0);
    let s = ZoneSampler::new(&p).unwrap();
    assert!(matches!(
        removed_roots_with(&s, 1),
        Err(Error::NoMidGap { .. })
    ));
}

#[test]
fn hybridized_pair_approaches_as_dislocation_grows() {
    let p = array_params();
    let (a, b) = midgap_branches(42);
    let split = |d: f64| {
        let s = finite_spectrum(&build_finite_chain(&p, 10, d).unwrap()).unwrap();
        s.frequencies[b] - s.frequencies[a]
    };
    let mut prev = split(2.0);
    for d in [4.0, 8.0, 16.0, 30.0] {
        let cur = split(d);
        assert!(cur < prev);
        prev = cur;
    }
}

#[test]
fn variance_grows_with_disorder() {
    let p = array_params();
    let sigmas = [SIGMA_GRID[0], SIGMA_GRID[1], SIGMA_GRID[2], SIGMA_GRID[4]];
    let reports: Vec<_> = sigmas
        .iter()
        .map(|&s| stability_experiment(&p, 1, 10.0, s, 500, 99).unwrap())
        .collect();
    for w in reports.windows(2) {
        for (x, y) in w[0].per_branch.iter().zip(&w[1].per_branch) {
            assert!(y.variance + 2.0 * x.stderr.max(y.stderr) >= x.variance);
        }
    }
}

#[test]
fn off_block_entries_decay_like_inverse_distance() {
    let p = array_params();
    let k = p.cap().powi(2) / (4.0 * PI);
    for d in [10.0, 100.0, 1000.0] {
        let c = finite_capacitance(&build_finite_chain(&p, 1, d).unwrap());
        let mut worst = 0.0f64;
        for i in 0..3 {
            for j in 3..6 {
                worst = worst.max(c.get(i, j).abs());
            }
        }
        assert!(worst <= k / d);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn spectrum_is_reflection_and_translation_invariant(
        gaps in prop::collection::vec(2.5f64..20.0, 2..10),
        shift in -50.0f64..50.0,
    ) {
        let p = array_params();
        let mut z = vec![0.0];
        for g in &gaps {
            z.push(z.last().unwrap() + g);
        }
        let base = finite_spectrum(&FiniteChain::from_centers(p, z.clone()).unwrap()).unwrap();
        let moved: Vec<f64> = z.iter().map(|x| x + shift).collect();
        let mirrored: Vec<f64> = z.iter().rev().map(|x| -x).collect();
        for other in [moved, mirrored] {
            let s = finite_spectrum(&FiniteChain::from_centers(p, other).unwrap()).unwrap();
            for (a, b) in base.matrix_eigvals.iter().zip(&s.matrix_eigvals) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn stability_is_a_pure_function(seed in any::<u64>(), d in 0.0f64..20.0) {
        let a = stability_experiment(&array_params(), 1, d, 0.1, 20, seed).unwrap();
        let b = stability_experiment(&array_params(), 1, d, 0.1, 20, seed).unwrap();
        for (x, y) in a.per_branch.iter().zip(&b.per_branch) {
            prop_assert_eq!(x.variance.to_bits(), y.variance.to_bits());
            prop_assert_eq!(x.stderr.to_bits(), y.stderr.to_bits());
        }
        prop_assert_eq!(a.rejections, b.rejections);
    }
}
