use gapsched::harness::{generate_instance, run_instances, BenchInstance, BenchmarkConfig, ProblemClass};
use gapsched::optimize::{CurveSet, Method};
use gapsched::problems::{gen_random_qubo, qubo_to_ising};
use gapsched::schedule::{derive_angles, BezierGapCurve};
use gapsched::simulator::{init_plus, StateVector};

#[test]
fn curve_json_round_trips_bit_exact() {
    let mut c = BezierGapCurve::new(vec![2.0, 1.0 / 3.0, 0.1 + 0.2, 0.27823627747332796]).unwrap();
    c.source_profile_id = "mean_n8_x500".into();
    c.rms_residual = 0.0021987;
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.json");
    std::fs::write(&path, serde_json::to_string_pretty(&c).unwrap()).unwrap();
    assert_eq!(BezierGapCurve::from_json_file(&path).unwrap(), c);
}

#[test]
fn statevector_dump_round_trips() {
    let mut s = init_plus(5).unwrap();
    s.apply_mixer(0.41);
    s.apply_phases(0.7, &(0..32).map(|x| x as f64 * 0.1).collect::<Vec<_>>()).unwrap();
    let mut buf = Vec::new();
    s.write_binary(&mut buf).unwrap();
    assert_eq!(&buf[..4], b"GSQV");
    assert_eq!(buf.len(), 16 + 32 * 16);
    assert_eq!(StateVector::read_binary(buf.as_slice()).unwrap(), s);
    let mut csv = Vec::new();
    s.write_probabilities_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert!(text.starts_with("index,bitstring,probability\n"));
    assert_eq!(text.lines().count(), 33);
}

#[test]
fn schedule_csv_header() {
    let sched = derive_angles(2, 1.0, 1.0, &gapsched::schedule::ConstantGap(1.0)).unwrap();
    assert_eq!(sched.gammas, vec![0.25, 0.5]);
    assert_eq!(sched.betas, vec![0.25, 0.0]);
    let mut buf = Vec::new();
    sched.write_csv(&mut buf).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap(), "k,s_k,gamma,beta\n1,0.5,0.25,0.25\n2,1,0.5,0\n");
}

/// A QUBO drawn on [-128, 128] and its copy divided by 128 before
/// conversion compile to the same circuit, so sweeps agree exactly.
#[test]
fn rescaling_is_transparent_to_the_benchmark() {
    let curves = CurveSet {
        mean: Some(BezierGapCurve::new(vec![2.0, 1.1, 0.3, 0.28]).unwrap()),
        median: None,
    };
    let methods = [Method::HeuristicMean, Method::VanillaQaoa];
    let half = 128.0;
    let q = gen_random_qubo(7, -half, half, 77).unwrap();
    let small = q.scaled(1.0 / half).unwrap();
    let big = BenchInstance::new(ProblemClass::QuboRandom, 0, &qubo_to_ising(&q), Some((-half, half))).unwrap();
    let pre = BenchInstance::new(ProblemClass::QuboRandom, 0, &qubo_to_ising(&small), Some((-1.0, 1.0))).unwrap();
    let a = run_instances(&[Ok(big)], ProblemClass::QuboRandom, &methods, 1..=3, 60, 5, &curves);
    let b = run_instances(&[Ok(pre)], ProblemClass::QuboRandom, &methods, 1..=3, 60, 5, &curves);
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.ratio.unwrap().to_bits(), y.ratio.unwrap().to_bits());
        assert_eq!(x.best_params, y.best_params);
    }
}

#[test]
fn benchmark_instances_follow_the_configured_seeds() {
    let cfg = BenchmarkConfig {
        problem_class: ProblemClass::MaxCutWeighted,
        n: 8,
        instances: 3,
        p_range: (1, 1),
        methods: vec![Method::VanillaQaoa],
        budget: 10,
        seed: 40,
        coeff_range: (-100.0, 100.0),
        weight_range: (0.0, 10.0),
    };
    let a = generate_instance(&cfg, 2).unwrap();
    let b = generate_instance(&BenchmarkConfig { seed: 41, ..cfg.clone() }, 1).unwrap();
    assert_eq!(a.model, b.model);
    // weights on [0, 10] are scaled by 2 / 10
    let raw = gapsched::problems::maxcut_to_ising(&gapsched::problems::gen_regular_graph(8, 3, Some((0.0, 10.0)), 42).unwrap()).unwrap();
    assert!((a.model.offset() - 0.2 * raw.offset()).abs() < 1e-12);
}
