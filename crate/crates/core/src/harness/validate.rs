//! Self-checks behind the `validate` subcommand: exhaustive brute-force
//! identities, dense-matrix circuit oracles and ODE-versus-circuit agreement
//! on small fixed instances.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

use crate::error::Result;
use crate::problems::{
    brute_force_extrema, diagonal_energies, gen_random_qubo, gen_regular_graph, maxcut_to_ising, qubo_to_ising,
    rescale_ising, seeded_rng, IsingModel,
};
use crate::schedule::{derive_angles, AngleSchedule, BezierGapCurve, ProfileGap};
use crate::simulator::{ode_evolve, LayeredCircuit, DEFAULT_ODE_STEPS};
use crate::spectrum::{gap_at, gap_profile, uniform_grid};

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, body: impl FnOnce() -> Result<(bool, String)>) -> Check {
    match body() {
        Ok((passed, detail)) => Check { name, passed, detail },
        Err(e) => Check {
            name,
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

fn qubo_model(n: usize, seed: u64) -> Result<IsingModel> {
    Ok(qubo_to_ising(&gen_random_qubo(n, -1.0, 1.0, seed)?))
}

fn qubo_ising_exact() -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for k in 0..30u64 {
        let n = 2 + (k as usize % 7);
        let q = gen_random_qubo(n, -1.0, 1.0, 100 + k)?;
        let m = qubo_to_ising(&q);
        for x in 0..1u64 << n {
            worst = worst.max((q.value(x) - m.energy(x) - m.offset()).abs());
        }
    }
    Ok((worst <= 1e-12, format!("max |f_Q - E - offset| = {worst:e}")))
}

fn rescale_covariance() -> Result<(bool, String)> {
    let mut ok = true;
    for seed in 0..5 {
        let q = gen_random_qubo(6, -100.0, 100.0, 200 + seed)?;
        let m = qubo_to_ising(&q);
        let r = rescale_ising(&m, -100.0, 100.0)?;
        let (e, er) = (brute_force_extrema(&m)?, brute_force_extrema(&r)?);
        ok &= e.argmin == er.argmin;
        ok &= (er.e_min - e.e_min / 100.0).abs() <= 1e-12 * e.e_min.abs().max(1.0);
        ok &= (er.e_max - e.e_max / 100.0).abs() <= 1e-12 * e.e_max.abs().max(1.0);
    }
    Ok((ok, "extrema scale by alpha, argmin unchanged".into()))
}

fn maxcut_symmetry() -> Result<(bool, String)> {
    let mut ok = true;
    for (seed, weights) in [(1, None), (2, Some((0.0, 10.0)))] {
        let g = gen_regular_graph(10, 3, weights, seed)?;
        let m = maxcut_to_ising(&g)?;
        let full = (1u64 << 10) - 1;
        for x in 0..=full {
            let cut = m.energy(x) + m.offset();
            ok &= (cut - g.cut_value(x)).abs() <= 1e-12;
            ok &= g.cut_value(x) == g.cut_value(full ^ x);
            ok &= cut >= -1e-12 && cut <= g.total_weight() + 1e-12;
        }
    }
    Ok((ok, "cut energies match, complement symmetric, bounded".into()))
}

fn random_schedule(p: usize, seed: u64) -> Result<AngleSchedule> {
    let mut rng = seeded_rng(seed);
    let gammas = (0..p).map(|_| rng.random_range(-3.0..3.0)).collect();
    let betas = (0..p).map(|_| rng.random_range(-1.5..1.5)).collect();
    AngleSchedule::free(gammas, betas)
}

/// `prod_k exp(-i beta_k H0) exp(-i gamma_k H1) |+>` by dense matrix
/// exponentials.
fn dense_circuit(m: &IsingModel, sched: &AngleSchedule) -> Vec<Complex64> {
    let dim = 1usize << m.n();
    let zero = Complex64::new(0.0, 0.0);
    let h0 = DMatrix::from_fn(dim, dim, |r, c| {
        if (r ^ c).count_ones() == 1 {
            Complex64::new(-1.0, 0.0)
        } else {
            zero
        }
    });
    let h1 = DMatrix::from_fn(dim, dim, |r, c| if r == c { Complex64::new(m.energy(r as u64), 0.0) } else { zero });
    let mut v = DVector::from_element(dim, Complex64::new((dim as f64).sqrt().recip(), 0.0));
    for (&g, &b) in sched.gammas.iter().zip(&sched.betas) {
        let uc = (&h1 * Complex64::new(0.0, -g)).exp();
        let um = (&h0 * Complex64::new(0.0, -b)).exp();
        v = um * (uc * v);
    }
    v.iter().copied().collect()
}

fn dense_oracle() -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for n in 1..=4 {
        for p in [1, 3, 5] {
            let seed = (10 * n + p) as u64;
            let m = qubo_model(n, seed)?;
            let sched = random_schedule(p, seed)?;
            let got = LayeredCircuit::new(&m)?.run(&sched)?;
            let want = dense_circuit(&m, &sched);
            for (a, b) in got.amplitudes().iter().zip(&want) {
                worst = worst.max((a - b).norm());
            }
        }
    }
    Ok((worst <= 1e-10, format!("max amplitude deviation {worst:e}")))
}

fn norm_and_bounds() -> Result<(bool, String)> {
    let m = qubo_model(16, 5)?;
    let ext = brute_force_extrema(&m)?;
    let circuit = LayeredCircuit::new(&m)?;
    let mut worst = 0.0f64;
    let mut bracketed = true;
    for p in [1, 4, 10] {
        let state = circuit.run(&random_schedule(p, p as u64)?)?;
        worst = worst.max((state.norm_sqr() - 1.0).abs());
        let e = state.expectation_diag(circuit.energies())?;
        bracketed &= e >= ext.e_min - 1e-9 && e <= ext.e_max + 1e-9;
    }
    Ok((worst <= 1e-10 && bracketed, format!("n = 16 norm drift {worst:e}, energies bracketed: {bracketed}")))
}

fn gap_endpoints() -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for seed in 0..5 {
        let m = qubo_model(6, 300 + seed)?;
        let mut e = diagonal_energies(&m)?;
        e.sort_by(f64::total_cmp);
        worst = worst.max((gap_at(&m, 0.0)? - 2.0).abs());
        worst = worst.max((gap_at(&m, 1.0)? - (e[1] - e[0])).abs());
    }
    Ok((worst <= 1e-9, format!("max endpoint deviation {worst:e}")))
}

fn ode_versus_circuit() -> Result<(bool, String)> {
    let curve = BezierGapCurve::new(vec![2.0, 1.2, 0.6, 0.35])?;
    let mut ok = true;
    let mut finals = Vec::new();
    for seed in 0..2 {
        let m = qubo_model(6, 400 + seed)?;
        let ode = ode_evolve(&m, 0.5, 1.0, &curve, DEFAULT_ODE_STEPS)?.state;
        let circuit = LayeredCircuit::new(&m)?;
        let mut last = 0.0;
        for p in [25, 50, 100, 200, 400] {
            let f = ode.fidelity(&circuit.run(&derive_angles(p, 0.5, 1.0, &curve)?)?);
            ok &= f >= last;
            last = f;
        }
        ok &= last >= 0.99;
        finals.push(last);
    }
    Ok((ok, format!("fidelity at p = 400: {finals:?}")))
}

/// Slow evolution ends in the ground state. Instances whose minimum gap is
/// below 0.1 are skipped: at `kappa = 0.01, q = 1` they are not adiabatic.
fn adiabatic_limit() -> Result<(bool, String)> {
    let mut worst = 1.0f64;
    let mut used = Vec::new();
    for seed in 500..520 {
        if used.len() == 3 {
            break;
        }
        let m = qubo_model(4, seed)?;
        let profile = gap_profile(&m, &uniform_grid(101))?;
        if profile.gaps.iter().any(|&g| g < 0.1) {
            continue;
        }
        let state = ode_evolve(&m, 0.01, 1.0, &ProfileGap(&profile), DEFAULT_ODE_STEPS)?.state;
        let probs = state.probabilities();
        let overlap: f64 = brute_force_extrema(&m)?.argmin.iter().map(|&x| probs[x as usize]).sum();
        worst = worst.min(overlap);
        used.push(seed);
    }
    Ok((worst >= 0.95 && used.len() == 3, format!("min ground-state overlap {worst:.4} on seeds {used:?}")))
}

/// Runs every suite; the CLI exits nonzero if any check fails.
pub fn run_all() -> Vec<Check> {
    vec![
        check("qubo_ising_exact", qubo_ising_exact),
        check("rescale_covariance", rescale_covariance),
        check("maxcut_symmetry", maxcut_symmetry),
        check("dense_oracle", dense_oracle),
        check("norm_and_bounds", norm_and_bounds),
        check("gap_endpoints", gap_endpoints),
        check("ode_versus_circuit", ode_versus_circuit),
        check("adiabatic_limit", adiabatic_limit),
    ]
}

#[cfg(test)]
mod tests {
    #[test]
    fn all_suites_pass() {
        for c in super::run_all() {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }
}
