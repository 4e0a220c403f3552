use blindsr2d::estimation::shift_error;
use blindsr2d::linalg;
use blindsr2d::localization::{
    build_dual_polynomial, default_suppression_radius, scan_all, scan_peaks, scan_peaks_input,
    verify_certificate, CertificateTolerances, DEFAULT_THRESHOLD,
};
use blindsr2d::model::{
    build_atom, build_lifted_dictionary, chi_adjoint, generate_random_instance, Dimensions,
    ShiftPair,
};
use blindsr2d::sdp::assemble_dual_sdp;
use blindsr2d::solver::{solve_sdp, SolveStatus, SolverConfig};
use blindsr2d::C64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_q(l: usize, seed: u64) -> Vec<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..l)
        .map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn coefficient_evaluation_matches_operator(
        n in 1usize..6, k in 1usize..4, seed in 0u64..5000, tau in 0.0f64..1.0, nu in 0.0f64..1.0
    ) {
        let d = Dimensions::new(n, vec![k, 1], 1).unwrap();
        let inst = generate_random_instance(&d, seed, 0.0).unwrap();
        let q = random_q(d.l(), seed + 1);
        let poly = build_dual_polynomial(&q, &inst.bases, &d).unwrap();
        let op = chi_adjoint(&q, &build_lifted_dictionary(&inst.bases, &d).unwrap()).unwrap();
        let s = ShiftPair::new(tau, nu);
        let a = build_atom(&s, &d);
        for j in 0..2 {
            let want = linalg::mat_vec(op.parts[j].as_ref(), &a);
            let got = poly.evaluate(j, &s);
            for (x, y) in want.iter().zip(&got) {
                prop_assert!((x - y).norm() <= 1e-10);
            }
        }
    }

    #[test]
    fn coefficient_form_is_exactly_periodic(n in 1usize..5, seed in 0u64..5000, tau in 0.0f64..1.0, nu in 0.0f64..1.0) {
        let d = Dimensions::new(n, vec![2], 1).unwrap();
        let inst = generate_random_instance(&d, seed, 0.0).unwrap();
        let poly = build_dual_polynomial(&random_q(d.l(), seed), &inst.bases, &d).unwrap();
        let base = poly.evaluate_at(0, tau, nu);
        for (t, v) in [(tau + 1.0, nu), (tau, nu + 1.0)] {
            for (x, y) in base.iter().zip(poly.evaluate_at(0, t, v)) {
                prop_assert!((x - y).norm() <= 1e-11);
            }
        }
    }
}

#[test]
fn transform_grid_matches_direct_sums() {
    let d = Dimensions::new(7, vec![1, 2], 1).unwrap();
    let inst = generate_random_instance(&d, 21, 0.0).unwrap();
    let poly = build_dual_polynomial(&random_q(15, 9), &inst.bases, &d).unwrap();
    let g = 512;
    let surfaces: Vec<Vec<f64>> = (0..2).map(|j| poly.norm_surface(j, g).unwrap()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..25 {
        let (r, c) = (rng.gen_range(0..g), rng.gen_range(0..g));
        for (j, surf) in surfaces.iter().enumerate() {
            let want = poly.norm_at(j, r as f64 / g as f64, c as f64 / g as f64);
            assert!((surf[r * g + c] - want).abs() <= 1e-10);
        }
    }
}

#[test]
fn combined_scan_matches_individual_scans() {
    let d = Dimensions::new(3, vec![1, 1], 1).unwrap();
    let inst = generate_random_instance(&d, 2, 0.0).unwrap();
    let mut q = random_q(7, 3);
    // scale so that some peaks clear a low threshold
    let top = build_dual_polynomial(&q, &inst.bases, &d)
        .unwrap()
        .max_surface(64)
        .unwrap()
        .into_iter()
        .fold(0.0, f64::max);
    q.iter_mut().for_each(|v| *v /= top);
    let poly = build_dual_polynomial(&q, &inst.bases, &d).unwrap();
    let all = scan_all(&poly, 64, 0.5, 0.1).unwrap();
    assert_eq!(all.combined, scan_peaks(&poly, 64, 0.5, 0.1).unwrap());
    for j in 0..2 {
        assert_eq!(
            all.per_input[j],
            scan_peaks_input(&poly, j, 64, 0.5, 0.1).unwrap()
        );
    }
    assert!(all.combined.s_hat >= 1);
    for (a, b) in all
        .combined
        .peaks
        .iter()
        .zip(all.combined.peaks.iter().skip(1))
    {
        assert!(a.shift.wrap_dist(&b.shift) > 0.1);
    }
}

#[test]
fn solved_instances_localize_every_shift() {
    // draws for which the relaxation is tight; small L with several inputs
    // or large K often is not
    let cases = [
        (Dimensions::new(3, vec![1], 1).unwrap(), 0u64, 0.0),
        (Dimensions::new(4, vec![2], 1).unwrap(), 0, 0.0),
        (Dimensions::new(6, vec![1], 2).unwrap(), 2, 0.4),
    ];
    for (d, seed, sep) in cases {
        let inst = generate_random_instance(&d, seed, sep).unwrap();
        let sdp = assemble_dual_sdp(&inst.y, &inst.bases, &d).unwrap();
        let rep = solve_sdp(&sdp, &SolverConfig::default()).unwrap();
        assert_eq!(rep.status, SolveStatus::Optimal);
        let poly = build_dual_polynomial(rep.q().unwrap(), &inst.bases, &d).unwrap();
        let radius = default_suppression_radius(d.n());
        let peaks = scan_peaks(&poly, 1024, DEFAULT_THRESHOLD, radius).unwrap();
        assert_eq!(peaks.s_hat, d.s(), "seed {seed}: {:?}", peaks.shifts());
        let err = shift_error(&inst.shifts, &peaks.shifts(), &d).unwrap();
        assert_eq!(err.matched, d.s());
        for truth in &inst.shifts {
            let best = peaks
                .shifts()
                .iter()
                .map(|s| s.wrap_dist(truth))
                .fold(f64::INFINITY, f64::min);
            assert!(best <= 1e-3, "seed {seed}: {best}");
        }
        let tol = CertificateTolerances {
            grid: 512,
            ..CertificateTolerances::for_dims(&d)
        };
        let cert = verify_certificate(&poly, &inst, &tol).unwrap();
        assert!(
            cert.interp_pass && cert.bound_pass && cert.rank_pass,
            "{cert:?}"
        );
    }
}
