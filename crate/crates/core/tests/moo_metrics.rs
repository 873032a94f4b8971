mod common;

use common::{brute_force_rank0, mc_hypervolume, random_front, rng};
use mfosemo::benchmarks::{make_problem, zdt3_analytic_front, ProblemName, ZDT3_FRONT_SEGMENTS};
use mfosemo::metrics::{
    hypervolume, hypervolume_auto, hypervolume_recursive, phv_difference, phv_difference_monte_carlo,
    HypervolumeMethod,
};
use mfosemo::moo::{crowding_distance, fast_non_dominated_sort, non_dominated_indices, ParetoFrontSample};
use proptest::prelude::*;
use rand::Rng;

fn random_population(r: &mut rand_chacha::ChaCha8Rng, n: usize, k: usize) -> Vec<Vec<f64>> {
    // Coarse values so ties and duplicates actually occur.
    (0..n)
        .map(|_| (0..k).map(|_| r.random_range(0..12) as f64 / 4.0).collect())
        .collect()
}

#[test]
fn rank_zero_matches_brute_force() {
    let mut r = rng(1);
    for trial in 0..100 {
        let k = [2, 3, 4][trial % 3];
        let pts = random_population(&mut r, 100, k);
        let mut got = fast_non_dominated_sort(&pts)[0].clone();
        got.sort_unstable();
        assert_eq!(got, brute_force_rank0(&pts), "trial {trial}");
        let mut nd = non_dominated_indices(&pts);
        nd.sort_unstable();
        assert_eq!(nd, got);
    }
}

#[test]
fn later_fronts_are_rank_zero_of_the_remainder() {
    let mut r = rng(2);
    let pts = random_population(&mut r, 60, 3);
    let fronts = fast_non_dominated_sort(&pts);
    let mut remaining: Vec<usize> = (0..pts.len()).collect();
    for front in fronts {
        let sub: Vec<Vec<f64>> = remaining.iter().map(|&i| pts[i].clone()).collect();
        let expect: Vec<usize> = brute_force_rank0(&sub).into_iter().map(|i| remaining[i]).collect();
        let mut got = front.clone();
        got.sort_unstable();
        assert_eq!(got, expect);
        remaining.retain(|i| !front.contains(i));
    }
    assert!(remaining.is_empty());
}

#[test]
fn crowding_distance_of_a_line() {
    let pts = vec![vec![0.0, 4.0], vec![1.0, 3.0], vec![3.0, 1.0], vec![4.0, 0.0]];
    let d = crowding_distance(&pts, &[0, 1, 2, 3]);
    assert!(d[0].is_infinite() && d[3].is_infinite());
    // Neighbour gaps divided by the range, summed over both objectives.
    assert!((d[1] - (3.0 / 4.0 + 3.0 / 4.0)).abs() < 1e-12);
    assert!((d[2] - (3.0 / 4.0 + 3.0 / 4.0)).abs() < 1e-12);
}

#[test]
fn exact_hypervolume_matches_monte_carlo() {
    let mut r = rng(3);
    for &(k, n) in &[(2, 30), (3, 25), (6, 10)] {
        for _ in 0..3 {
            let front = random_front(k, n, &mut r);
            let reference = vec![1.1; k];
            let exact = hypervolume(&front, &reference).unwrap().value;
            let lo = vec![0.0; k];
            let mc = mc_hypervolume(&front, &reference, &lo, 400_000, &mut r);
            assert!((exact - mc).abs() <= 0.01 * mc, "k={k}: exact {exact} mc {mc}");
        }
    }
}

#[test]
fn sweep_and_recursive_agree_in_two_dimensions() {
    let mut r = rng(4);
    for _ in 0..50 {
        let front = random_front(2, 40, &mut r);
        let res = hypervolume(&front, &[1.2, 1.3]).unwrap();
        assert_eq!(res.method, HypervolumeMethod::ExactSweep2d);
        let rec = hypervolume_recursive(&front, &[1.2, 1.3]).unwrap();
        assert!((res.value - rec).abs() <= 1e-10);
    }
}

#[test]
fn hypervolume_hand_examples() {
    assert_eq!(hypervolume(&[vec![1.0, 2.0]], &[3.0, 3.0]).unwrap().value, 2.0);
    let staircase = vec![vec![0.0, 2.0], vec![1.0, 1.0], vec![2.0, 0.0]];
    assert_eq!(hypervolume(&staircase, &[3.0, 3.0]).unwrap().value, 6.0);
    let res = hypervolume(&[vec![4.0, 0.0], vec![1.0, 1.0]], &[3.0, 3.0]).unwrap();
    assert_eq!(res.excluded, 1);
    assert_eq!(res.value, 4.0);
    let cube = hypervolume(&[vec![0.5, 0.5, 0.5]], &[1.0, 1.0, 1.0]).unwrap().value;
    assert!((cube - 0.125).abs() < 1e-15);
}

#[test]
fn phv_difference_of_the_reference_front_is_zero() {
    let mut r = rng(5);
    let front = random_front(2, 20, &mut r);
    assert_eq!(phv_difference(&front, &front, &[1.1, 1.1]).unwrap(), 0.0);
    let d = phv_difference_monte_carlo(&front, &front, &[1.1, 1.1], 1000, 7).unwrap();
    assert_eq!(d, 0.0);
}

#[test]
fn auto_hypervolume_switches_to_monte_carlo_above_three_objectives() {
    let mut r = rng(6);
    let front = random_front(6, 12, &mut r);
    let reference = vec![1.1; 6];
    let exact = hypervolume_recursive(&front, &reference).unwrap();
    let auto = hypervolume_auto(&front, &reference, 1).unwrap();
    assert!((auto - exact).abs() <= 0.03 * exact, "{auto} vs {exact}");
}

#[test]
fn front_sample_keeps_one_copy_of_duplicates() {
    let pts = vec![vec![1.0, 2.0], vec![1.0, 2.0], vec![2.0, 1.0], vec![3.0, 3.0]];
    let f = ParetoFrontSample::from_points(pts, vec![]).unwrap();
    assert_eq!(f.points, vec![vec![1.0, 2.0], vec![2.0, 1.0]]);
    assert_eq!(f.per_dim_max, vec![2.0, 2.0]);
    assert_eq!(f.per_dim_min, vec![1.0, 1.0]);
}

#[test]
fn zdt3_reference_front_is_close_to_analytic() {
    let zdt3 = make_problem(ProblemName::Zdt3);
    let front = zdt3.reference_front(20_000, 0).unwrap();
    let reference = zdt3.reference_point(20_000, 0).unwrap();
    let analytic = zdt3_analytic_front(2000);
    let hv_ref = hypervolume(&front, &reference).unwrap().value;
    let hv_true = hypervolume(&analytic, &reference).unwrap().value;
    assert!((hv_ref - hv_true).abs() <= 0.005 * hv_true, "{hv_ref} vs {hv_true}");
    // Every point falls in one of the disconnected segments.
    let tol = 0.02;
    for p in front.iter() {
        assert!(
            ZDT3_FRONT_SEGMENTS.iter().any(|&(a, b)| p[0] >= a - tol && p[0] <= b + tol),
            "f1 = {} outside the segments",
            p[0]
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn adding_a_point_never_lowers_hypervolume(
        pts in prop::collection::vec(prop::collection::vec(0.0..1.0f64, 3), 1..15),
        extra in prop::collection::vec(0.0..1.0f64, 3),
    ) {
        let reference = [1.0, 1.0, 1.0];
        let before = hypervolume(&pts, &reference).unwrap().value;
        let mut more = pts.clone();
        more.push(extra);
        let after = hypervolume(&more, &reference).unwrap().value;
        prop_assert!(after >= before - 1e-12);
        prop_assert!(after <= 1.0 + 1e-12);
    }

    #[test]
    fn hypervolume_is_translation_invariant(
        pts in prop::collection::vec(prop::collection::vec(0.0..1.0f64, 2), 1..20),
        shift in prop::collection::vec(-5.0..5.0f64, 2),
    ) {
        let reference = [1.0, 1.0];
        let a = hypervolume(&pts, &reference).unwrap().value;
        let moved: Vec<Vec<f64>> = pts.iter().map(|p| vec![p[0] + shift[0], p[1] + shift[1]]).collect();
        let b = hypervolume(&moved, &[1.0 + shift[0], 1.0 + shift[1]]).unwrap().value;
        prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a));
    }

    #[test]
    fn dominated_points_do_not_change_hypervolume(
        pts in prop::collection::vec(prop::collection::vec(0.0..1.0f64, 2), 1..20),
    ) {
        let reference = [1.0, 1.0];
        let nd: Vec<Vec<f64>> = non_dominated_indices(&pts).into_iter().map(|i| pts[i].clone()).collect();
        let a = hypervolume(&pts, &reference).unwrap().value;
        let b = hypervolume(&nd, &reference).unwrap().value;
        prop_assert!((a - b).abs() <= 1e-12);
    }
}
