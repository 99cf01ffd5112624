//! Invariants over random inputs, checked against small independent oracles.

use circuit_sched::gen;
use circuit_sched::greedy::{best_configuration, greedy_picks, greedy_schedule, truncate_picks};
use circuit_sched::hybrid::{branch, hybrid_schedule, Branch};
use circuit_sched::lp::{round_solution, solve_configuration_lp, solve_configuration_lp_exhaustive, DurationProfile};
use circuit_sched::matching::{all_matchings, max_weight_matching, WeightMatrix};
use circuit_sched::online::{online_blocked, online_no_delay, OfflineSolver, Trace};
use circuit_sched::oracle::optimal_schedule_integer;
use circuit_sched::rational::int;
use circuit_sched::{evaluate_throughput, io, residual, shrink_schedule, DemandMatrix, Instance, Rational};
use num_traits::Zero;
use proptest::prelude::*;

fn matrix(max_side: usize, max_value: i64) -> impl Strategy<Value = DemandMatrix> {
    (1..=max_side, 1..=max_side).prop_flat_map(move |(n, m)| {
        prop::collection::vec(0..=max_value, n * m).prop_map(move |v| {
            let rows: Vec<Vec<i64>> = v.chunks(m).map(<[i64]>::to_vec).collect();
            DemandMatrix::from_int_rows(&rows).unwrap()
        })
    })
}

/// Brute-force maximum weight over every matching.
fn brute_max_weight(w: &WeightMatrix) -> Rational {
    all_matchings(w.dims(), |_, _| true)
        .iter()
        .map(|m| m.edges().iter().map(|&(s, r)| w.get(s, r)).sum::<Rational>())
        .max()
        .unwrap_or_else(Rational::zero)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hungarian_matches_brute_force(d in matrix(4, 9)) {
        let w = WeightMatrix::new(d.senders(), d.receivers(), d.values().to_vec());
        let (m, value) = max_weight_matching(&w);
        prop_assert_eq!(value, brute_max_weight(&w));
        let recomputed: Rational = m.edges().iter().map(|&(s, r)| w.get(s, r)).sum();
        prop_assert_eq!(recomputed, value);
    }

    #[test]
    fn greedy_is_feasible_and_accounts(d in matrix(3, 5), delta in 0i128..3, extra in 1i128..10) {
        let inst = Instance::new(d.clone(), int(delta), int(delta + extra)).unwrap();
        let s = greedy_schedule(&inst);
        prop_assert!(s.is_feasible());
        let f = evaluate_throughput(&s, &d).unwrap();
        prop_assert_eq!(f + residual(&d, &s).unwrap().total(), d.total());
        prop_assert!(f <= d.total());
    }

    #[test]
    fn truncated_picks_equal_direct_greedy(d in matrix(3, 4), delta in 1i128..3, w in 1i128..9) {
        let picks = greedy_picks(&d, int(delta), int(8));
        let inst = Instance::new(d.clone(), int(delta), int(w)).unwrap();
        let direct = greedy_schedule(&inst);
        let truncated = truncate_picks(&picks, int(delta), int(w));
        prop_assert_eq!(evaluate_throughput(&direct, &d).unwrap(), evaluate_throughput(&truncated, &d).unwrap());
    }

    #[test]
    fn best_configuration_beats_every_matching_at_breakpoints(d in matrix(3, 4), delta in 0i128..3) {
        let Some(pick) = best_configuration(&d, int(delta)) else {
            prop_assert!(d.is_zero());
            return Ok(());
        };
        let ratio = |m: &circuit_sched::Matching, a: Rational| {
            let gain: Rational = m.edges().iter().map(|&(s, r)| d.get(s, r).min(a)).sum();
            gain / (a + int(delta))
        };
        let best = ratio(&pick.matching, pick.alpha);
        prop_assert_eq!(best, pick.ratio);
        for m in all_matchings(d.dims(), |_, _| true) {
            for a in 1..=4i128 {
                prop_assert!(ratio(&m, int(a)) <= best);
            }
        }
    }

    #[test]
    fn greedy_not_above_oracle(d in matrix(2, 3), delta in 1i128..3, extra in 0i128..5) {
        let inst = Instance::new(d.clone(), int(delta), int(delta + 1 + extra)).unwrap();
        let (opt_s, opt) = optimal_schedule_integer(&inst, None).unwrap();
        prop_assert!(opt_s.is_feasible());
        prop_assert_eq!(evaluate_throughput(&opt_s, &d).unwrap(), opt);
        let g = evaluate_throughput(&greedy_schedule(&inst), &d).unwrap();
        // Integer demands keep every greedy breakpoint integral, so greedy's
        // schedule is in the oracle's search space.
        prop_assert!(g <= opt);
    }

    #[test]
    fn shrink_respects_time_and_ratio(seed in any::<u64>(), w4 in 1i128..40) {
        let delta = int(1);
        let window = int(2) + Rational::new(w4, 4);
        let s = gen::random_schedule((2, 3), 4, 4, 2, delta, window, seed, 0);
        prop_assume!(s.is_feasible());
        let shape = gen::MatrixShape { senders: 2, receivers: 3, max_demand: 5, density: (3, 4) };
        let d = gen::random_matrix(&shape, seed, 1);
        let shrunk = shrink_schedule(&s, &d).unwrap();
        prop_assert!(shrunk.time_used() <= window - delta);
        let f = evaluate_throughput(&s, &d).unwrap();
        let g = evaluate_throughput(&shrunk, &d).unwrap();
        prop_assert!(g >= (int(1) - int(2) / window) * f);
    }

    #[test]
    fn column_generation_matches_exhaustive(d in matrix(3, 3), a in 1i128..4, b in 0i128..4) {
        let p = DurationProfile::new(vec![int(a), int(b)], int(1), int(a + b + 2)).unwrap();
        let cg = solve_configuration_lp(&d, &p).unwrap();
        cg.check(&d, &p).unwrap();
        prop_assert_eq!(cg.objective, solve_configuration_lp_exhaustive(&d, &p).unwrap().objective);
    }

    #[test]
    fn rounding_stays_within_profile(d in matrix(3, 3), seed in any::<u64>()) {
        let p = DurationProfile::new(vec![int(2), int(1)], int(1), int(5)).unwrap();
        let sol = solve_configuration_lp(&d, &p).unwrap();
        let s = round_solution(&sol, &p, seed).unwrap();
        prop_assert!(s.is_feasible());
        prop_assert!(s.len() <= 2);
        prop_assert!(evaluate_throughput(&s, &d).unwrap() <= d.total());
    }

    #[test]
    fn hybrid_is_feasible(d in matrix(3, 3), delta in 1i128..4, w in 1i128..12, eps_n in 1i128..6, seed in any::<u64>()) {
        let inst = Instance::new(d, int(delta), int(w)).unwrap();
        let eps = Rational::new(eps_n, 10);
        let s = hybrid_schedule(&inst, eps, seed).unwrap();
        prop_assert!(s.is_feasible());
        if let Branch::Lp { k } = branch(&inst, eps).unwrap() {
            prop_assert!(s.len() <= k);
        }
    }

    #[test]
    fn no_delay_run_accounts(seed in any::<u64>(), horizon in 1usize..8) {
        let shape = gen::MatrixShape { senders: 2, receivers: 3, max_demand: 2, density: (1, 2) };
        let trace = gen::random_trace(&shape, horizon, (1, 2), seed, 0);
        let run = online_no_delay(&trace).unwrap();
        run.check_accounting(int(0)).unwrap();
        prop_assert!(run.total <= trace.total().total());
    }

    #[test]
    fn blocked_run_accounts(seed in any::<u64>(), horizon in 1usize..10, k in 3usize..5) {
        let shape = gen::MatrixShape { senders: 2, receivers: 2, max_demand: 2, density: (1, 2) };
        let trace = gen::random_trace(&shape, horizon, (1, 2), seed, 0);
        let run = online_blocked(&trace, int(1), k, &OfflineSolver::Greedy, seed).unwrap();
        run.check_accounting(int(1)).unwrap();
        prop_assert!(run.total <= trace.total().total());
        prop_assert_eq!(run.total, run.sent.iter().copied().sum::<Rational>());
        for block in &run.blocks {
            prop_assert!(block.is_feasible());
        }
    }

    #[test]
    fn instance_json_round_trips(d in matrix(3, 9), dn in 0i128..5, dd in 1i128..4, w in 0i128..20) {
        let inst = Instance::new(d, Rational::new(dn, dd), int(w)).unwrap();
        let back = io::parse_instance_str(&io::write_instance(&inst), "mem").unwrap();
        prop_assert_eq!(back, inst);
    }

    #[test]
    fn trace_json_round_trips(seed in any::<u64>(), horizon in 0usize..6) {
        let shape = gen::MatrixShape { senders: 2, receivers: 3, max_demand: 3, density: (1, 2) };
        let trace: Trace = gen::random_trace(&shape, horizon, (1, 2), seed, 0);
        let back = io::parse_trace_str(&io::write_trace(&trace), "mem").unwrap();
        prop_assert_eq!(back, trace);
    }
}
