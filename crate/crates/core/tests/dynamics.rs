mod common;

use common::*;
use corrproj::evolution::*;
use corrproj::generator::*;
use corrproj::operator::*;
use corrproj::state::{aux_block, ComponentState};
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

fn total_trace_rhs(gen: &GeneralizedLindblad, state: &ComponentState) -> Complex64 {
    gen.rhs(state).unwrap().components().iter().map(|k| k.trace()).sum()
}

#[test]
fn rhs_is_trace_free() {
    let mut r = rng(20);
    for k in 0..30 {
        let (n, d) = instance_shape(k);
        let gen = random_generator(&mut r, n, d);
        let state = random_operator_state(&mut r, n, d);
        assert!(total_trace_rhs(&gen, &state).norm() <= 1e-12);
    }
}

#[test]
fn rhs_is_linear_and_hermiticity_preserving() {
    let mut r = rng(21);
    let gen = random_generator(&mut r, 3, 3);
    let x = random_operator_state(&mut r, 3, 3);
    let y = random_operator_state(&mut r, 3, 3);
    let combo = x.scale(0.7).add_scaled(&y, -1.3);
    let lhs = gen.rhs(&combo).unwrap();
    let rhs = gen.rhs(&x).unwrap().scale(0.7).add_scaled(&gen.rhs(&y).unwrap(), -1.3);
    assert!(lhs.max_diff(&rhs) <= 1e-12);

    let rho = random_components(&mut r, 3, 3);
    for k in gen.rhs(&rho).unwrap().components() {
        assert!(hermiticity_defect(k) <= 1e-13);
    }
}

#[test]
fn embedding_forward() {
    let mut r = rng(22);
    for k in 0..30 {
        let (n, d) = instance_shape(k);
        let gen = random_generator(&mut r, n, d);
        let ext = gen.embed();
        for _ in 0..5 {
            let state = random_operator_state(&mut r, n, d);
            assert!(ext.block_defect(&state).unwrap() <= 1e-12);
            let image = ext.apply(&state.to_extended()).unwrap();
            for i in 0..n {
                let expected = gen.apply_k(i, &state).unwrap();
                assert!(max_diff(&aux_block(&image, d, n, i, i), &expected) <= 1e-12);
            }
        }
    }
}

#[test]
fn liouvillian_matches_apply() {
    let mut r = rng(23);
    let gen = random_generator(&mut r, 2, 3);
    let ext = gen.embed();
    let x = random_square(&mut r, 6);
    let direct = ext.apply(&x).unwrap();
    let via_l = unvectorize(&(ext.liouvillian() * vectorize(&x)), 6).unwrap();
    assert!(max_diff(&direct, &via_l) <= 1e-12);
}

#[test]
fn embedding_converse() {
    let mut r = rng(24);
    for k in 0..12 {
        let (n, d) = instance_shape(k);
        let gen = random_generator(&mut r, n, d);
        let back = gen.embed().to_generalized().unwrap();
        let state = random_operator_state(&mut r, n, d);
        assert!(gen.rhs(&state).unwrap().max_diff(&back.rhs(&state).unwrap()) <= 1e-12);
    }
}

#[test]
fn off_diagonal_hamiltonian_leaks_out_of_block_form() {
    let coupling = unit(2, 0, 1) + unit(2, 1, 0);
    let h = kron(&qubit::sigma_x(), &coupling).unwrap();
    let ext = ExtendedLindblad::new(2, 2, h, vec![]).unwrap();
    let mut r = rng(25);
    let state = random_components(&mut r, 2, 2);
    assert!(ext.block_defect(&state).unwrap() > 1e-3);
}

#[test]
fn rk_and_expm_agree() {
    let mut r = rng(26);
    for k in 0..6 {
        let (n, d) = instance_shape(k);
        let gen = random_generator(&mut r, n, d);
        let init = random_components(&mut r, n, d);
        let t = 2.0;
        let steps = gen.suggested_steps(t).max(400);
        let rk = evolve_rk(&gen, &init, t, steps, &[]).unwrap();
        let ex = evolve_expm(&gen, &init, t, DEFAULT_SIZE_CAP).unwrap();
        assert!(rk.final_state().max_diff(&ex) <= 1e-7, "{}", rk.final_state().max_diff(&ex));
        let grid = evolve_expm_grid(&gen, &init, t, 10, &[], DEFAULT_SIZE_CAP).unwrap();
        assert!(grid.final_state().max_diff(&ex) <= 1e-10);
    }
}

#[test]
fn semigroup_composition() {
    let mut r = rng(27);
    let gen = random_generator(&mut r, 3, 2);
    let init = random_components(&mut r, 3, 2);
    let direct = evolve_expm(&gen, &init, 1.7, DEFAULT_SIZE_CAP).unwrap();
    let mid = evolve_expm(&gen, &init, 0.6, DEFAULT_SIZE_CAP).unwrap();
    let composed = evolve_expm(&gen, &mid, 1.1, DEFAULT_SIZE_CAP).unwrap();
    assert!(direct.max_diff(&composed) <= 1e-11);
}

#[test]
fn trajectories_stay_physical() {
    let mut r = rng(28);
    let gen = random_generator(&mut r, 4, 2);
    let init = random_components(&mut r, 4, 2);
    let ones = RelevantConservedSet::new(vec![identity(2); 4]).unwrap();
    assert!(gen.conservation_defect(&ones).unwrap() <= 1e-12);
    let traj = evolve_expm_grid(&gen, &init, 5.0, 50, &[ones], DEFAULT_SIZE_CAP).unwrap();
    assert!(!traj.any_flagged());
    assert!(traj.min_eigenvalue() >= -1e-9);
    assert!(traj.trace_drift() <= 1e-9);
    for d in traj.diagnostics() {
        assert!((d.conserved[0] - 1.0).abs() <= 1e-9);
    }
}

#[test]
fn single_component_is_ordinary_lindblad() {
    let gamma: f64 = 0.35;
    let gen = GeneralizedLindblad::new(
        2,
        vec![qubit::sigma_z().scale(0.5)],
        vec![(JumpIndex::new(0, 0, 0), qubit::sigma_minus().scale(gamma.sqrt()))],
    )
    .unwrap();
    let init = ComponentState::new(vec![qubit::excited()]).unwrap();
    let traj = evolve_rk(&gen, &init, 10.0, 2000, &[]).unwrap();
    for (t, p) in traj.times().iter().zip(traj.excited_population().unwrap()) {
        assert!((p - (-gamma * t).exp()).abs() <= 1e-8);
    }
}

#[test]
fn uncoupled_components_do_not_talk() {
    let mut r = rng(29);
    let locals: Vec<LocalLindblad> = (0..3)
        .map(|_| LocalLindblad { h: random_hermitian(&mut r, 2), jumps: vec![random_square(&mut r, 2)] })
        .collect();
    let gen = GeneralizedLindblad::uncoupled(&locals).unwrap();
    let base = random_operator_state(&mut r, 3, 2);
    let k_base = gen.rhs(&base).unwrap();
    for j in 0..3 {
        let mut comps = base.components().to_vec();
        comps[j] += random_square(&mut r, 2);
        let k = gen.rhs(&ComponentState::new(comps).unwrap()).unwrap();
        for i in (0..3).filter(|&i| i != j) {
            assert!(max_diff(k.component(i), k_base.component(i)) <= 1e-13);
        }
    }
}

#[test]
fn energy_resolved_reproduces_two_band_rhs() {
    let (g1, g2) = (0.37, 0.81);
    let table1 = DMatrix::from_row_slice(2, 2, &[0.0, g1, 0.0, 0.0]);
    let table2 = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, g2, 0.0]);
    let gen = GeneralizedLindblad::energy_resolved(&table1, &table2, vec![ComplexMatrix::zeros(2, 2); 2]).unwrap();
    let mut r = rng(30);
    let state = random_components(&mut r, 2, 2);
    let k = gen.rhs(&state).unwrap();
    // two-band equations written out by hand
    let (sp, sm) = (qubit::sigma_plus(), qubit::sigma_minus());
    let (r1, r2) = (state.component(0), state.component(1));
    let k1 = (&sp * r2 * &sm).scale(g1) - anticommutator(&(&sp * &sm), r1).scale(0.5 * g2);
    let k2 = (&sm * r1 * &sp).scale(g2) - anticommutator(&(&sm * &sp), r2).scale(0.5 * g1);
    assert!(max_diff(k.component(0), &k1) <= 1e-15);
    assert!(max_diff(k.component(1), &k2) <= 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn prop_trace_identity(seed in any::<u64>(), n in 1usize..5, d in 1usize..4) {
        let mut r = rng(seed);
        let gen = random_generator(&mut r, n, d);
        let state = random_operator_state(&mut r, n, d);
        prop_assert!(total_trace_rhs(&gen, &state).norm() <= 1e-11);
    }

    #[test]
    fn prop_expm_keeps_components_physical(seed in any::<u64>(), n in 1usize..4, d in 2usize..4, t in 0.0f64..4.0) {
        let mut r = rng(seed);
        let gen = random_generator(&mut r, n, d);
        let init = random_components(&mut r, n, d);
        let out = evolve_expm(&gen, &init, t, DEFAULT_SIZE_CAP).unwrap();
        let diag = out.check(1e-9);
        prop_assert!(!diag.violation, "{:?}", diag);
    }

    #[test]
    fn prop_block_structure_preserved(seed in any::<u64>(), n in 1usize..4, d in 1usize..4) {
        let mut r = rng(seed);
        let gen = random_generator(&mut r, n, d);
        let state = random_operator_state(&mut r, n, d);
        prop_assert!(gen.embed().block_defect(&state).unwrap() <= 1e-12);
    }
}
