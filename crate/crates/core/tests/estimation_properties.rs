use blindsr2d::estimation::{
    orientation_estimates, reconstruct_inputs, recover, shift_error, split_magnitudes,
    UNMATCHED_COST,
};
use blindsr2d::model::{build_lifted_dictionary, generate_random_instance, Dimensions, ShiftPair};
use blindsr2d::C64;
use proptest::prelude::*;

fn shift() -> impl Strategy<Value = ShiftPair> {
    (0.0f64..1.0, 0.0f64..1.0).prop_map(|(t, v)| ShiftPair::new(t, v))
}

/// Minimum over all assignments of the true shifts to distinct estimates.
fn brute_force_error(truth: &[ShiftPair], est: &[ShiftPair], l: usize) -> f64 {
    fn go(truth: &[ShiftPair], est: &[ShiftPair], used: &mut Vec<bool>) -> f64 {
        let Some((first, rest)) = truth.split_first() else {
            return used.iter().filter(|u| !**u).count() as f64 * UNMATCHED_COST;
        };
        let mut best = UNMATCHED_COST + go(rest, est, used);
        for i in 0..est.len() {
            if !used[i] {
                used[i] = true;
                best = best.min(first.wrap_dist(&est[i]) + go(rest, est, used));
                used[i] = false;
            }
        }
        best
    }
    l as f64 / truth.len() as f64 * go(truth, est, &mut vec![false; est.len()])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn matching_is_optimal_and_order_free(
        truth in prop::collection::vec(shift(), 1..4),
        est in prop::collection::vec(shift(), 0..5),
    ) {
        let d = Dimensions::new(6, vec![1], truth.len()).unwrap();
        let e = shift_error(&truth, &est, &d).unwrap();
        prop_assert!((e.error - brute_force_error(&truth, &est, 13)).abs() < 1e-12);
        let mut rev = est.clone();
        rev.reverse();
        prop_assert!((shift_error(&truth, &rev, &d).unwrap().error - e.error).abs() < 1e-12);
        prop_assert_eq!(e.matched, truth.len().min(est.len()));
    }

    #[test]
    fn whole_period_offsets_cost_nothing(t in 0.0f64..1.0, v in 0.0f64..1.0) {
        let d = Dimensions::new(3, vec![1], 1).unwrap();
        let truth = [ShiftPair { tau: t, nu: v }];
        let moved = [ShiftPair { tau: t + 1.0, nu: v - 1.0 }];
        prop_assert!(shift_error(&truth, &moved, &d).unwrap().error < 1e-12);
    }

    #[test]
    fn split_ignores_phase_exchange(phi in 0.0f64..6.3, seed in 0u64..500) {
        let d = Dimensions::new(3, vec![2, 1], 1).unwrap();
        let inst = generate_random_instance(&d, seed, 0.0).unwrap();
        let b = inst.amplitudes[0] * 1.7;
        let rot = C64::from_polar(1.0, phi);
        let coeffs = |b: C64, hs: &[Vec<C64>]| -> Vec<Vec<Vec<C64>>> {
            vec![hs.iter().map(|h| h.iter().map(|x| b * x).collect()).collect()]
        };
        let plain = split_magnitudes(&coeffs(b, &inst.orientations), &[1.0, 1.0]).unwrap();
        let turned: Vec<Vec<C64>> = inst.orientations.iter().map(|h| h.iter().map(|x| x / rot).collect()).collect();
        let other = split_magnitudes(&coeffs(b * rot, &turned), &[1.0, 1.0]).unwrap();
        prop_assert!((plain.b_abs[0] - other.b_abs[0]).abs() < 1e-12);
        prop_assert!((plain.b_abs[0] - 1.7).abs() < 1e-12);
        for (x, y) in plain.h_abs.iter().flatten().zip(other.h_abs.iter().flatten()) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn oracle_shift_round_trip(seed in 0u64..1000, n in 4usize..8, s in 1usize..3) {
        let d = Dimensions::new(n, vec![1, 2], s).unwrap();
        let inst = generate_random_instance(&d, seed, 0.25).unwrap();
        let dict = build_lifted_dictionary(&inst.bases, &d).unwrap();
        let r = recover(&inst.shifts, &dict, &inst.bases, &inst.y, &[1.0, 1.0], Some(&inst)).unwrap();
        prop_assume!(!r.rank_deficient);
        let m = r.metrics.unwrap();
        for e in m.input_errors {
            prop_assert!(e <= 1e-8, "{}", e);
        }
    }
}

#[test]
fn swapped_peak_order_scores_the_same() {
    let d = Dimensions::new(5, vec![1], 2).unwrap();
    let truth = [ShiftPair::new(0.1, 0.2), ShiftPair::new(0.6, 0.7)];
    let est = [ShiftPair::new(0.61, 0.7), ShiftPair::new(0.1, 0.18)];
    let a = shift_error(&truth, &est, &d).unwrap();
    let b = shift_error(&truth, &[est[1], est[0]], &d).unwrap();
    assert_eq!(a, b);
    assert!((a.error - 5.5 * (0.01 + 0.02)).abs() < 1e-12);
}

#[test]
fn reconstruction_uses_the_strongest_shift() {
    let d = Dimensions::new(4, vec![1], 2).unwrap();
    let inst = generate_random_instance(&d, 3, 0.3).unwrap();
    let dict = build_lifted_dictionary(&inst.bases, &d).unwrap();
    let r = recover(
        &inst.shifts,
        &dict,
        &inst.bases,
        &inst.y,
        &[1.0],
        Some(&inst),
    )
    .unwrap();
    let h = orientation_estimates(&r.lifted_coeffs, &r.b_abs);
    assert!(h[0][0].im.abs() < 1e-14 && h[0][0].re > 0.0);
    let x = reconstruct_inputs(&inst.bases, &h).unwrap();
    assert_eq!(x, r.x_abs);
}
