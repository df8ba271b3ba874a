use proptest::prelude::*;

use gapsched::harness::{
    approximation_ratio, run_instances, summarize, BenchInstance, ProblemClass, ResultRecord,
};
use gapsched::optimize::{optimize_instance, qaoa_objective, CurveSet, Method, ObjectiveSpec};
use gapsched::problems::{
    brute_force_extrema, diagonal_energies, gen_random_qubo, gen_regular_graph, maxcut_to_ising, qubo_to_ising,
    rescale_ising, GraphInstance, IsingModel, QuboInstance,
};
use gapsched::schedule::{derive_angles, fit_bezier_unchecked, AngleSchedule, BezierGapCurve};
use gapsched::simulator::{init_plus, LayeredCircuit};
use gapsched::spectrum::{
    gap_at, gap_profile, two_lowest_eigenvalues_with, uniform_grid, EigenMethod, SpectrumOptions,
};

fn model(n: usize, seed: u64) -> IsingModel {
    qubo_to_ising(&gen_random_qubo(n, -1.0, 1.0, seed).unwrap())
}

fn curve_strategy() -> impl Strategy<Value = BezierGapCurve> {
    prop::collection::vec(0.05f64..3.0, 2..=9).prop_map(|y| BezierGapCurve::new(y).unwrap())
}

fn angles_strategy(max_p: usize) -> impl Strategy<Value = AngleSchedule> {
    (1..=max_p).prop_flat_map(|p| {
        (
            prop::collection::vec(-3.0f64..3.0, p),
            prop::collection::vec(-1.6f64..1.6, p),
        )
            .prop_map(|(g, b)| AngleSchedule::free(g, b).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn qubo_ising_equivalence(n in 1usize..=10, lo in -5.0f64..0.0, width in 0.1f64..10.0, seed in any::<u64>()) {
        let q = gen_random_qubo(n, lo, lo + width, seed).unwrap();
        let m = qubo_to_ising(&q);
        let e = diagonal_energies(&m).unwrap();
        for x in 0..1u64 << n {
            prop_assert!((q.value(x) - (e[x as usize] + m.offset())).abs() <= 1e-12 * (1.0 + width * (n * n) as f64));
        }
    }

    #[test]
    fn rescaling_covariance(n in 1usize..=8, seed in any::<u64>(), half in 0.5f64..200.0) {
        let m = qubo_to_ising(&gen_random_qubo(n, -half, half, seed).unwrap());
        let r = rescale_ising(&m, -half, half).unwrap();
        let alpha = 1.0 / half;
        let (e, er) = (diagonal_energies(&m).unwrap(), diagonal_energies(&r).unwrap());
        for (a, b) in e.iter().zip(&er) {
            prop_assert!((b - alpha * a).abs() <= 1e-12 * (1.0 + a.abs() * alpha));
        }
        let (x, xr) = (brute_force_extrema(&m).unwrap(), brute_force_extrema(&r).unwrap());
        prop_assert_eq!(x.argmin, xr.argmin);
    }

    #[test]
    fn maxcut_energies(half_n in 2usize..=6, seed in any::<u64>(), weighted in any::<bool>()) {
        let n = 2 * half_n;
        let g = gen_regular_graph(n, 3, weighted.then_some((0.0, 10.0)), seed).unwrap();
        prop_assert!(g.degrees().iter().all(|&d| d == 3));
        let m = maxcut_to_ising(&g).unwrap();
        let e = diagonal_energies(&m).unwrap();
        let full = (1u64 << n) - 1;
        for x in 0..=full {
            let cut = e[x as usize] + m.offset();
            prop_assert!(cut >= -1e-12 && cut <= g.total_weight() + 1e-12);
            prop_assert!((cut - g.cut_value(x)).abs() <= 1e-12);
            prop_assert_eq!(g.cut_value(x), g.cut_value(full ^ x));
        }
    }

    #[test]
    fn generators_are_deterministic(n in 1usize..=12, seed in any::<u64>()) {
        prop_assert_eq!(gen_random_qubo(n, -1.0, 1.0, seed).unwrap(), gen_random_qubo(n, -1.0, 1.0, seed).unwrap());
        let m = 2 * n.max(2);
        prop_assert_eq!(gen_regular_graph(m, 3, Some((0.0, 10.0)), seed).unwrap(), gen_regular_graph(m, 3, Some((0.0, 10.0)), seed).unwrap());
    }

    #[test]
    fn instance_documents_round_trip_bit_exact(n in 1usize..=8, seed in any::<u64>()) {
        let q = gen_random_qubo(n, -100.0, 100.0, seed).unwrap();
        let back: QuboInstance = serde_json::from_str(&serde_json::to_string(&q).unwrap()).unwrap();
        prop_assert_eq!(&back, &q);
        let g = gen_regular_graph(2 * n.max(2), 3, Some((0.0, 10.0)), seed).unwrap();
        let back: GraphInstance = serde_json::from_str(&serde_json::to_string(&g).unwrap()).unwrap();
        prop_assert_eq!(back, g);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn gap_endpoints(n in 1usize..=9, seed in any::<u64>()) {
        let m = model(n, seed);
        let mut e = diagonal_energies(&m).unwrap();
        e.sort_by(f64::total_cmp);
        prop_assert!((gap_at(&m, 0.0).unwrap() - 2.0).abs() <= 1e-9);
        if n > 1 || e.len() > 1 {
            prop_assert!((gap_at(&m, 1.0).unwrap() - (e[1] - e[0])).abs() <= 1e-9);
        }
    }

    #[test]
    fn gap_invariant_under_relabeling_and_offset(n in 2usize..=7, seed in any::<u64>(), s in 0.0f64..=1.0, rot in 1usize..7) {
        let m = model(n, seed);
        let perm: Vec<usize> = (0..n).map(|i| (i + rot) % n).collect();
        let p = m.permuted(&perm).unwrap();
        let shifted = IsingModel::new(m.h().to_vec(), m.couplings().iter().map(|c| (c.i, c.j, c.value)), m.offset() + 3.5, m.sense()).unwrap();
        let g = gap_at(&m, s).unwrap();
        prop_assert!((gap_at(&p, s).unwrap() - g).abs() <= 1e-9);
        prop_assert!((gap_at(&shifted, s).unwrap() - g).abs() <= 1e-9);
    }

    #[test]
    fn lanczos_matches_dense(n in 2usize..=6, seed in any::<u64>()) {
        let m = model(n, seed);
        let dense = SpectrumOptions { method: EigenMethod::Dense, ..SpectrumOptions::default() };
        let lanczos = SpectrumOptions { method: EigenMethod::Lanczos, ..SpectrumOptions::default() };
        for k in 0..11 {
            let s = k as f64 / 10.0;
            let (a0, a1) = two_lowest_eigenvalues_with(&m, s, &dense).unwrap();
            let (b0, b1) = two_lowest_eigenvalues_with(&m, s, &lanczos).unwrap();
            prop_assert!((a0 - b0).abs() <= 1e-9 * a0.abs().max(1.0), "s={} {} {}", s, a0, b0);
            prop_assert!((a1 - b1).abs() <= 1e-9 * a1.abs().max(1.0), "s={} {} {}", s, a1, b1);
        }
    }

    #[test]
    fn fits_pin_endpoints_and_higher_degree_fits_better(n in 2usize..=6, seed in any::<u64>()) {
        let profile = gap_profile(&model(n, seed), &uniform_grid(41)).unwrap();
        let c3 = fit_bezier_unchecked(&profile, 3).unwrap();
        let c7 = fit_bezier_unchecked(&profile, 7).unwrap();
        for c in [&c3, &c7] {
            prop_assert_eq!(c.eval(0.0), profile.gaps[0]);
            prop_assert_eq!(c.eval(1.0), profile.final_gap());
        }
        prop_assert!(c7.rms_residual <= c3.rms_residual + 1e-12);
    }

    #[test]
    fn evaluators_agree(curve in curve_strategy()) {
        for j in 0..=1000 {
            let s = j as f64 / 1000.0;
            prop_assert!((curve.eval(s) - curve.eval_bernstein(s)).abs() <= 1e-12);
        }
    }

    #[test]
    fn angle_identities(p in 1usize..=64, kappa in 0.01f64..50.0, q in 0.0f64..3.0, curve in curve_strategy()) {
        let a = derive_angles(p, kappa, q, &curve).unwrap();
        let unit = derive_angles(p, 1.0, q, &curve).unwrap();
        prop_assert_eq!(a.gammas.len(), p);
        prop_assert_eq!(a.betas[p - 1], 0.0);
        for k in 0..p {
            prop_assert!((a.gammas[k] - unit.gammas[k] / kappa).abs() <= 1e-12 * a.gammas[k].abs());
            prop_assert!((a.betas[k] - unit.betas[k] / kappa).abs() <= 1e-12 * a.betas[k].abs().max(f64::MIN_POSITIVE));
        }
    }

    #[test]
    fn angles_shrink_like_one_over_p(kappa in 0.1f64..5.0, q in 0.0f64..3.0, curve in curve_strategy()) {
        // a Bezier curve never drops below its smallest ordinate
        let lower = curve.y.iter().copied().fold(f64::INFINITY, f64::min);
        let bound = |p: usize| 1.0 / (p as f64 * kappa * lower.powf(q));
        for p in [10, 40, 160] {
            let a = derive_angles(p, kappa, q, &curve).unwrap();
            let max = a.gammas.iter().copied().fold(0.0, f64::max);
            prop_assert!(max <= bound(p) * (1.0 + 1e-12));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn circuits_preserve_norm_and_bracket_energy(n in 1usize..=10, seed in any::<u64>(), sched in angles_strategy(10)) {
        let m = model(n, seed);
        let ext = brute_force_extrema(&m).unwrap();
        let circuit = LayeredCircuit::new(&m).unwrap();
        let state = circuit.run(&sched).unwrap();
        prop_assert!((state.norm_sqr() - 1.0).abs() <= 1e-10);
        let e = state.expectation_diag(circuit.energies()).unwrap();
        prop_assert!(e >= ext.e_min - 1e-9 && e <= ext.e_max + 1e-9);
    }

    #[test]
    fn layers_compose(n in 1usize..=8, seed in any::<u64>(), g1 in -2.0f64..2.0, g2 in -2.0f64..2.0, b1 in -1.0f64..1.0, b2 in -1.0f64..1.0) {
        let energies = diagonal_energies(&model(n, seed)).unwrap();
        let mut a = init_plus(n).unwrap();
        a.apply_mixer(0.3);
        let mut b = a.clone();
        a.apply_phases(g1, &energies).unwrap();
        a.apply_phases(g2, &energies).unwrap();
        b.apply_phases(g1 + g2, &energies).unwrap();
        a.apply_mixer(b1);
        a.apply_mixer(b2);
        b.apply_mixer(b1 + b2);
        for (x, y) in a.amplitudes().iter().zip(b.amplitudes()) {
            prop_assert!((x - y).norm() <= 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn optimizer_never_regresses_and_is_seeded(n in 2usize..=6, p in 1usize..=4, seed in any::<u64>(), opt_seed in any::<u64>()) {
        let spec = ObjectiveSpec::new(model(n, seed), p, 40).unwrap();
        let curves = CurveSet { mean: Some(BezierGapCurve::new(vec![2.0, 1.0, 0.5, 0.4]).unwrap()), median: None };
        for method in [Method::HeuristicMean, Method::VanillaQaoa] {
            let r = optimize_instance(&spec, method, &curves, opt_seed).unwrap();
            prop_assert_eq!(r.best_params.len(), method.dimension(p));
            prop_assert!(r.best_value <= r.trace[0].value);
            prop_assert!(r.evaluations_used <= 40);
            prop_assert_eq!(r.best_value, r.trace.iter().map(|t| t.value).fold(f64::INFINITY, f64::min));
            prop_assert_eq!(&r, &optimize_instance(&spec, method, &curves, opt_seed).unwrap());
        }
        let zeros = vec![0.0; 2 * p];
        prop_assert!(qaoa_objective(&zeros, &spec).unwrap().abs() <= 1e-12);
    }

    #[test]
    fn ratios_stay_in_unit_interval_and_summaries_ignore_order(n in 2usize..=6, seed in any::<u64>(), rot in 0usize..12) {
        let instances: Vec<_> = (0..2)
            .map(|id| Ok(BenchInstance::new(ProblemClass::QuboRandom, id, &model(n, seed.wrapping_add(id as u64)), None).unwrap()))
            .collect();
        let curves = CurveSet { mean: Some(BezierGapCurve::new(vec![2.0, 1.0, 0.5, 0.4]).unwrap()), median: None };
        let records = run_instances(&instances, ProblemClass::QuboRandom, &[Method::HeuristicMean, Method::VanillaQaoa], 1..=3, 30, seed, &curves);
        for r in &records {
            let ratio = r.ratio.unwrap();
            prop_assert!((-1e-9..=1.0 + 1e-9).contains(&ratio));
        }
        let mut shuffled: Vec<ResultRecord> = records.clone();
        shuffled.rotate_left(rot % records.len());
        shuffled.reverse();
        prop_assert_eq!(summarize(&records), summarize(&shuffled));
    }
}

#[test]
fn zero_model_gap_profile_is_linear() {
    let profile = gap_profile(&IsingModel::zero(3).unwrap(), &uniform_grid(11)).unwrap();
    for (s, g) in profile.grid.iter().zip(&profile.gaps) {
        assert!((g - 2.0 * (1.0 - s)).abs() <= 1e-9);
    }
}

#[test]
fn approximation_ratio_of_uniform_state() {
    let m = IsingModel::new(vec![-1.0, -1.0], [(0, 1, 1.0)], 0.0, gapsched::problems::Sense::Minimize).unwrap();
    let ext = brute_force_extrema(&m).unwrap();
    assert_eq!(approximation_ratio(0.0, ext.e_min, ext.e_max).unwrap(), 0.75);
}
