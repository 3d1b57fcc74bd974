use std::f64::consts::PI;

use polychain::geometry::{gen_arc_chain, gen_bent, gen_packed_block, gen_straight, ChainArray, Dim};
use polychain::lattice::threshold_kappa;
use polychain::roots::{bisect, Tolerance};
use polychain::solver::{
    convergence_study, find_bound_states, find_bound_states_with, finite_array_spectrum, SolveOptions,
};
use polychain::Execution;

#[test]
fn two_point_branches_match_scalar_equations() {
    // symmetric branch: alpha + (kappa - e^-kappa)/4pi, antisymmetric: alpha + (kappa + e^-kappa)/4pi
    let alpha = -0.2;
    let chain = ChainArray::new(Dim::Three, 1.0, 0, vec![[0.0; 3], [1.0, 0.0, 0.0]]).unwrap();
    let levels = finite_array_spectrum(&chain, alpha).unwrap();
    assert_eq!(levels.len(), 2);
    let tol = Tolerance::new(1e-15, 0.0);
    let sym = bisect(|k| alpha + (k - (-k).exp()) / (4.0 * PI), 1e-4, 10.0, tol).unwrap();
    let anti = bisect(|k| alpha + (k + (-k).exp()) / (4.0 * PI), 1e-4, 10.0, tol).unwrap();
    assert!((levels[0].kappa - sym).abs() < 1e-10);
    assert!((levels[1].kappa - anti).abs() < 1e-10);
}

#[test]
fn bent_convergence_study() {
    let chain = gen_bent(400, 1.0, Dim::Three, PI / 2.0).unwrap();
    let study = convergence_study(&chain, 0.0, &[50, 100, 200, 400], 4.0).unwrap();
    assert!(study.increments_decreasing, "{study:?}");
    let last = study.rows.last().unwrap();
    assert!(last.increment.unwrap() < 1e-4);
    let kt = threshold_kappa(Dim::Three, 0.0, 1.0).unwrap();
    assert!(study.rows.iter().all(|r| r.kappa0.unwrap() > kt));
}

#[test]
fn packed_block_convergence_study() {
    let chain = gen_packed_block(1, 80, 1.0, Dim::Three).unwrap();
    let study = convergence_study(&chain, 0.0, &[10, 20, 40, 80], 4.0).unwrap();
    assert!(study.rows.iter().all(|r| r.kappa0.is_some()));
    assert!(study.increments_decreasing, "{study:?}");
}

#[test]
fn larger_block_binds_at_least_as_many_states() {
    let small = gen_packed_block(1, 60, 1.0, Dim::Three).unwrap();
    let large = gen_packed_block(2, 60, 1.0, Dim::Three).unwrap();
    let a = find_bound_states(&small, 0.0, 50, 4.0).unwrap();
    let b = find_bound_states(&large, 0.0, 50, 4.0).unwrap();
    let count = |s: &[polychain::BoundState]| s.iter().map(|x| x.multiplicity).sum::<usize>();
    assert!(!a.is_empty());
    assert!(count(&b) >= count(&a), "{} < {}", count(&b), count(&a));
}

#[test]
fn two_dimensional_bent_chain_binds() {
    let chain = gen_bent(80, 1.0, Dim::Two, PI / 2.0).unwrap();
    let kt = threshold_kappa(Dim::Two, 0.0, 1.0).unwrap();
    let states = find_bound_states(&chain, 0.0, 80, 2.0 * kt).unwrap();
    assert!(!states.is_empty());
    assert!(states.iter().all(|s| s.below_threshold && s.kappa0 > kt));
}

#[test]
fn two_dimensional_straight_chain_is_empty() {
    let chain = gen_straight(150, 1.0, Dim::Two).unwrap();
    for alpha in [-0.3, 0.0, 0.4] {
        let kt = threshold_kappa(Dim::Two, alpha, 1.0).unwrap();
        assert!(find_bound_states(&chain, alpha, 150, 2.0 * kt).unwrap().is_empty());
    }
}

#[test]
fn smooth_arc_binds() {
    let chain = gen_arc_chain(60, 1.0, Dim::Three, 4, PI / 3.0).unwrap();
    let states = find_bound_states(&chain, 0.0, 60, 4.0).unwrap();
    assert!(!states.is_empty());
}

#[test]
fn sharper_bend_binds_more_strongly() {
    let k0 = |angle: f64| {
        let c = gen_bent(60, 1.0, Dim::Three, angle).unwrap();
        find_bound_states(&c, 0.0, 60, 4.0).unwrap()[0].kappa0
    };
    let (wide, right, sharp) = (k0(2.0 * PI / 3.0), k0(PI / 2.0), k0(PI / 3.0));
    assert!(wide < right && right < sharp);
}

#[test]
fn execution_policy_does_not_change_roots() {
    let chain = gen_bent(40, 1.0, Dim::Three, PI / 3.0).unwrap();
    let seq = SolveOptions { exec: Execution::Sequential, ..SolveOptions::default() };
    let par = SolveOptions { exec: Execution::Parallel, ..SolveOptions::default() };
    let a = find_bound_states_with(&chain, 0.0, 40, 4.0, &seq).unwrap();
    let b = find_bound_states_with(&chain, 0.0, 40, 4.0, &par).unwrap();
    assert_eq!(a, b);
}
