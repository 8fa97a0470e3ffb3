use mfanneal_core::flow::{mean_field_energy, on_shell_residual};
use mfanneal_core::*;
use proptest::prelude::*;

fn instance(n: usize, seed: u64) -> IsingInstance {
    generate_instance(n, seed, CouplingDistribution::default(), ZRule::default()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn flow_invariants(n in 2usize..8, seed in any::<u64>()) {
        let inst = instance(n, seed);
        let out = integrate(&inst, &SolverConfig::default()).unwrap();
        let trace = out.trace();
        for w in trace.samples.windows(2) {
            prop_assert!(w[1].state.s > w[0].state.s);
        }
        for sample in &trace.samples {
            for (sz, sx) in sample.state.sz.iter().zip(&sample.diagnostics.sx) {
                prop_assert!((sx * sx + sz * sz - 0.25).abs() <= 1e-10);
            }
        }
        if let SolveOutcome::Converged { spins, e0, trace } = &out {
            prop_assert!(is_one_flip_local_min(&inst, spins).unwrap());
            prop_assert_eq!(*e0, classical_energy(&inst, spins).unwrap());
            for sample in &trace.samples {
                prop_assert!(on_shell_residual(&inst, &sample.state) <= 1e-6);
            }
            // transverse term vanishes at s = 1
            let e_one = mean_field_energy(&inst, 1.0, &spins.values(), &vec![0.0; n]);
            prop_assert!((e_one - e0).abs() <= 1e-12);
        }
        if let Some(s) = out.s_sing() {
            prop_assert!(s > 0.0 && s < 1.0);
        }
    }

    #[test]
    fn start_signs_follow_fields(n in 2usize..8, seed in any::<u64>()) {
        let inst = instance(n, seed);
        let out = integrate(&inst, &SolverConfig::default()).unwrap();
        let start = &out.trace().samples[0].state.sz;
        for (h, sz) in inst.fields().iter().zip(start) {
            prop_assert_eq!(h.signum(), sz.signum());
        }
    }

    #[test]
    fn exact_ground_at_one_is_classical(n in 1usize..8, seed in any::<u64>()) {
        let inst = instance(n, seed);
        let (p, _) = lowest_two(&inst, 1.0).unwrap();
        prop_assert_eq!(p.e0, brute_force_ground(&inst).unwrap().energy);
    }

    #[test]
    fn product_state_bounds_exact(n in 2usize..6, seed in any::<u64>()) {
        let inst = instance(n, seed);
        let out = integrate(&inst, &SolverConfig::default()).unwrap();
        for sample in out.trace().samples.iter().step_by(7) {
            let (p, _) = lowest_two(&inst, sample.state.s).unwrap();
            prop_assert!(p.e0 <= sample.diagnostics.e_mf + 1e-12);
        }
    }

    #[test]
    fn hamiltonian_symmetric(n in 1usize..6, seed in any::<u64>(), s in 0.0f64..=1.0) {
        let h = build_hamiltonian(&instance(n, seed), s).unwrap();
        for i in 0..h.dim {
            for j in 0..i {
                prop_assert_eq!(h.get(i, j), h.get(j, i));
            }
        }
    }
}

#[test]
fn gap_refinement_is_stable_on_pair_grid() {
    for (j1, j2) in [(-0.9, 3.0), (3.0, 3.0), (2.0, -3.0), (-1.8, 0.6)] {
        let inst = IsingInstance::new(
            2,
            1,
            vec![j1, j2],
            vec![Coupling {
                i: 0,
                j: 1,
                value: 1.0,
            }],
        )
        .unwrap();
        let a = gap_scan(&inst, 200).unwrap();
        let b = gap_scan(&inst, 400).unwrap();
        assert!((a.min_gap - b.min_gap).abs() < 1e-3, "({j1}, {j2})");
        assert!(a.min_gap > 0.0);
    }
}
