mod common;

use uniprod::expr::Algebra;
use uniprod::matrix_lab::{estimate_phi1, estimate_phi2, sample_matrix, EnsembleSpec};

#[test]
fn same_seed_same_bits() {
    let spec = EnsembleSpec::gue(12);
    let a = sample_matrix(&spec, Algebra::new('a'), 9, 3).unwrap();
    let b = sample_matrix(&spec, Algebra::new('a'), 9, 3).unwrap();
    assert!(a.iter().zip(b.iter()).all(|(x, y)| x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits()));
    let w = common::spelled("abab");
    let e1 = estimate_phi1(&w, &spec, 50, 4).unwrap();
    let e2 = estimate_phi1(&w, &spec, 50, 4).unwrap();
    assert_eq!(e1.value.to_bits(), e2.value.to_bits());
    assert_eq!(e1.standard_error.to_bits(), e2.standard_error.to_bits());
}

#[test]
fn samples_are_hermitian_and_seeds_differ() {
    let spec = EnsembleSpec::gue(10);
    let m = sample_matrix(&spec, Algebra::new('b'), 1, 0).unwrap();
    for i in 0..10 {
        for j in 0..10 {
            assert_eq!(m[[i, j]], m[[j, i]].conj());
        }
    }
    assert_ne!(m, sample_matrix(&spec, Algebra::new('b'), 2, 0).unwrap());
    assert_ne!(m, sample_matrix(&spec, Algebra::new('a'), 1, 0).unwrap());
}

#[test]
fn stderr_scales_as_inverse_root_samples() {
    let spec = EnsembleSpec::gue(16);
    let w = common::spelled("aa");
    let counts = [500usize, 2000, 8000];
    let pts: Vec<(f64, f64)> = counts
        .iter()
        .map(|&s| {
            let e = estimate_phi2(&w, &w, &spec, s, 11).unwrap();
            ((s as f64).ln(), e.standard_error.ln())
        })
        .collect();
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / 3.0;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / 3.0;
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    assert!((slope + 0.5).abs() < 0.1, "slope {slope}");
}

#[test]
fn trace_variance_is_one_at_every_size() {
    let a = common::spelled("a");
    for n in [50, 100, 200] {
        let e = estimate_phi2(&a, &a, &EnsembleSpec::gue(n), 1500, 3).unwrap();
        assert!((e.value - 1.0).abs() < 4.0 * e.standard_error, "n = {n}: {e}");
    }
}

#[test]
fn finite_size_bias_shrinks() {
    let w = common::spelled("aa");
    let bias = |n| {
        let e = estimate_phi2(&w, &w, &EnsembleSpec::gue(n), 1500, 17).unwrap();
        ((e.value - 2.0).abs(), e.standard_error)
    };
    let (small, s_err) = bias(50);
    let (large, l_err) = bias(200);
    assert!(large <= small || (small < 2.0 * s_err && large < 2.0 * l_err), "{small} ± {s_err} vs {large} ± {l_err}");
}

#[test]
fn distinct_algebras_are_uncorrelated() {
    let spec = EnsembleSpec::gue(60);
    let e = estimate_phi2(&common::spelled("a"), &common::spelled("b"), &spec, 1500, 23).unwrap();
    assert!(e.value.abs() < 4.0 * e.standard_error, "{e}");
    let m = estimate_phi1(&common::spelled("abab"), &spec, 400, 23).unwrap();
    assert!(m.value.abs() < 4.0 * m.standard_error + 0.05, "{m}");
}
