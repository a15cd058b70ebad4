use evospread::bounds::{corollary1_upper, corollary4_lower};
use evospread::coupled::{simulate_coupled_ordered, simulate_coupled_seeded};
use evospread::oracle::solve_exact;
use evospread::rng::stream;
use evospread::{simulate, ControlPolicy, ControlVector, Graph, SimOptions, TargetRule};
use proptest::prelude::*;

fn er(n: usize, p: f64, seed: u64) -> Graph {
    Graph::erdos_renyi(n, p, 1.0, &mut stream(seed, 0)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn simulation_keeps_invariants(
        n in 3usize..30,
        p in 0.2f64..0.9,
        beta in 0.55f64..=1.0,
        rate in 0.1f64..3.0,
        seed in any::<u64>(),
        feedback in any::<bool>(),
    ) {
        let g = er(n, p, seed);
        let policy = if feedback {
            ControlPolicy::feedback(rate, TargetRule::MaxContact).unwrap()
        } else {
            ControlPolicy::constant(ControlVector::delta(seed as usize % n, rate).unwrap())
        };
        let r = simulate(&g, beta, &policy, &vec![false; n], &mut stream(seed, 1), SimOptions::checked()).unwrap();
        prop_assert!(r.complete);
        prop_assert!(r.final_state.is_absorbed());
        // up jumps minus down jumps is the number of nodes converted
        prop_assert_eq!(r.jump_count - 2 * r.down_jumps, n as u64);
        prop_assert!(r.control_events <= r.jump_count - r.down_jumps);
        prop_assert!(r.control_events >= 1);
        if !feedback {
            prop_assert!((r.control_cost - rate * r.spreading_time).abs() <= 1e-9 * r.control_cost.max(1.0));
        }
        if beta == 1.0 {
            prop_assert_eq!(r.down_jumps, 0);
        }
    }

    #[test]
    fn profiles_are_ordered_and_symmetric(n in 2usize..10, p in 0.3f64..1.0, seed in any::<u64>()) {
        let g = er(n, p, seed);
        let pr = g.profiles_exact(12).unwrap();
        for a in 1..n {
            prop_assert!(pr.phi(a) <= pr.eta(a) + 1e-12);
            prop_assert!((pr.phi(a) - pr.phi(n - a)).abs() <= 1e-12);
            prop_assert!((pr.eta(a) - pr.eta(n - a)).abs() <= 1e-12);
            prop_assert!(pr.phi(a) > 0.0);
        }
        let back = Graph::from_edge_list(&g.to_edge_list()).unwrap();
        prop_assert_eq!(back.edges(), g.edges());
    }

    #[test]
    fn exact_time_is_sandwiched(n in 2usize..7, p in 0.3f64..1.0, beta in 0.55f64..=1.0, seed in any::<u64>()) {
        let g = er(n, p, seed);
        let policy = ControlPolicy::constant(ControlVector::delta(0, 1.0).unwrap());
        let t = solve_exact(&g, beta, &policy).unwrap().from_zero().0;
        let pr = g.profiles_exact(12).unwrap();
        let upper = corollary1_upper(&pr.phi, beta, 1.0).unwrap().value;
        let lower = corollary4_lower(&pr.eta, 1, 1.0).unwrap().value;
        prop_assert!(lower <= t + 1e-9 && t <= upper + 1e-9, "{} <= {} <= {}", lower, t, upper);
    }

    #[test]
    fn coupled_processes_stay_ordered(
        n in 2usize..20,
        p in 0.2f64..0.9,
        beta in 0.55f64..0.95,
        gap in 0.0f64..0.4,
        seed in any::<u64>(),
    ) {
        let g = er(n, p, seed);
        let gamma = (beta + gap).min(1.0);
        let policy = ControlPolicy::constant(ControlVector::delta(0, 1.0).unwrap());
        let mut y0 = vec![false; n];
        y0[n - 1] = true;
        let out = simulate_coupled_ordered(&g, beta, gamma, &policy, &vec![false; n], &y0, &mut stream(seed, 2)).unwrap();
        prop_assert!(out.dominated);
        let out = simulate_coupled_seeded(&g, &policy, &vec![false; n], &[0], &mut stream(seed, 3)).unwrap();
        prop_assert!(out.dominated);
    }
}
