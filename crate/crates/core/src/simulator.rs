//! Statevector evolution under the layered circuit and under the continuous
//! schedule.
//!
//! The cost layer `exp(-i gamma H1)` is one diagonal phase pass over the
//! precomputed energies. Since `H1` is diagonal this equals the RZ / RZZ gate
//! product exactly. The mixer `exp(-i beta H0)` with `H0 = -sum X` is
//! `exp(+i beta X)` on every qubit, i.e. `RX(-2 beta)`.

use std::io::{Read, Write};

use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;

use crate::error::{Error, Result};
use crate::problems::{bitstring, diagonal_energies, seeded_rng, IsingModel};
use crate::schedule::{AngleSchedule, GapFunction, GAP_FLOOR};

pub const DEFAULT_SIM_CAP: usize = 24;
pub const DEFAULT_ODE_CAP: usize = 12;
pub const DEFAULT_ODE_STEPS: usize = 10_000;
pub const PROBABILITY_CSV_CAP: usize = 16;

const DUMP_MAGIC: &[u8; 4] = b"GSQV";
const DUMP_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// Computational basis state `|x>`.
    pub fn basis(n: usize, x: u64) -> Result<Self> {
        check_sim_cap(n)?;
        if x >> n != 0 {
            return Err(Error::invalid(format!("basis index {x} out of range for n = {n}")));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        amps[x as usize] = Complex64::new(1.0, 0.0);
        Ok(Self { n, amps })
    }

    pub fn from_amplitudes(n: usize, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != 1usize << n {
            return Err(Error::DimensionMismatch {
                expected: 1 << n,
                got: amps.len(),
            });
        }
        Ok(Self { n, amps })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn inner(&self, other: &Self) -> Complex64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    /// `|<self|other>|^2`.
    pub fn fidelity(&self, other: &Self) -> f64 {
        self.inner(other).norm_sqr()
    }

    /// Applies `exp(+i beta X)` to every qubit.
    pub fn apply_mixer(&mut self, beta: f64) {
        if beta == 0.0 {
            return;
        }
        let (s, c) = beta.sin_cos();
        let is = Complex64::new(0.0, s);
        let dim = self.amps.len();
        for q in 0..self.n {
            let stride = 1usize << q;
            for base in (0..dim).step_by(2 * stride) {
                let (lo, hi) = self.amps[base..base + 2 * stride].split_at_mut(stride);
                for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                    let (x, y) = (*a, *b);
                    *a = x * c + is * y;
                    *b = is * x + y * c;
                }
            }
        }
    }

    /// Multiplies the amplitude at `x` by `exp(-i gamma E(x))`.
    pub fn apply_phases(&mut self, gamma: f64, energies: &[f64]) -> Result<()> {
        if energies.len() != self.amps.len() {
            return Err(Error::DimensionMismatch {
                expected: self.amps.len(),
                got: energies.len(),
            });
        }
        if gamma == 0.0 {
            return Ok(());
        }
        for (a, &e) in self.amps.iter_mut().zip(energies) {
            *a *= Complex64::from_polar(1.0, -gamma * e);
        }
        Ok(())
    }

    /// `sum_x |a_x|^2 E(x)`.
    pub fn expectation_diag(&self, energies: &[f64]) -> Result<f64> {
        if energies.len() != self.amps.len() {
            return Err(Error::DimensionMismatch {
                expected: self.amps.len(),
                got: energies.len(),
            });
        }
        Ok(self.amps.iter().zip(energies).map(|(a, e)| a.norm_sqr() * e).sum())
    }

    /// Binary dump: `"GSQV"`, version, `n` and a reserved word (all `u32`
    /// little-endian, 16 bytes), then `2^n` `(re, im)` `f64` LE pairs.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(DUMP_MAGIC)?;
        w.write_all(&DUMP_VERSION.to_le_bytes())?;
        w.write_all(&(self.n as u32).to_le_bytes())?;
        w.write_all(&0u32.to_le_bytes())?;
        for a in &self.amps {
            w.write_all(&a.re.to_le_bytes())?;
            w.write_all(&a.im.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut header = [0u8; 16];
        r.read_exact(&mut header)?;
        if &header[..4] != DUMP_MAGIC {
            return Err(Error::invalid("not a statevector dump (bad magic)"));
        }
        let word = |k: usize| u32::from_le_bytes(header[k..k + 4].try_into().expect("4 bytes"));
        if word(4) != DUMP_VERSION {
            return Err(Error::invalid(format!("unsupported dump version {}", word(4))));
        }
        let n = word(8) as usize;
        check_sim_cap(n)?;
        let mut amps = Vec::with_capacity(1 << n);
        let mut buf = [0u8; 16];
        for _ in 0..1usize << n {
            r.read_exact(&mut buf)?;
            let re = f64::from_le_bytes(buf[..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(buf[8..].try_into().expect("8 bytes"));
            amps.push(Complex64::new(re, im));
        }
        Ok(Self { n, amps })
    }

    /// CSV `index,bitstring,probability`, only for `n <= 16`.
    pub fn write_probabilities_csv<W: Write>(&self, w: W) -> Result<()> {
        if self.n > PROBABILITY_CSV_CAP {
            return Err(Error::CapExceeded {
                what: "probability export",
                n: self.n,
                cap: PROBABILITY_CSV_CAP,
            });
        }
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["index", "bitstring", "probability"])?;
        for (x, a) in self.amps.iter().enumerate() {
            out.write_record([x.to_string(), bitstring(x as u64, self.n), a.norm_sqr().to_string()])?;
        }
        out.flush()?;
        Ok(())
    }
}

fn check_sim_cap(n: usize) -> Result<()> {
    if n < 1 || n > DEFAULT_SIM_CAP {
        return Err(Error::CapExceeded {
            what: "statevector",
            n,
            cap: DEFAULT_SIM_CAP,
        });
    }
    Ok(())
}

/// `|+>^n`.
pub fn init_plus(n: usize) -> Result<StateVector> {
    check_sim_cap(n)?;
    let amp = Complex64::new((0.5f64).powf(n as f64 / 2.0), 0.0);
    Ok(StateVector {
        n,
        amps: vec![amp; 1 << n],
    })
}

pub fn apply_mixer(state: &mut StateVector, beta: f64) {
    state.apply_mixer(beta);
}

pub fn apply_cost(state: &mut StateVector, gamma: f64, m: &IsingModel) -> Result<()> {
    if m.n() != state.n() {
        return Err(Error::DimensionMismatch {
            expected: state.n(),
            got: m.n(),
        });
    }
    state.apply_phases(gamma, &diagonal_energies(m)?)
}

pub fn expectation(state: &StateVector, m: &IsingModel) -> Result<f64> {
    if m.n() != state.n() {
        return Err(Error::DimensionMismatch {
            expected: state.n(),
            got: m.n(),
        });
    }
    state.expectation_diag(&diagonal_energies(m)?)
}

/// A model's diagonal, prepared once and reused across circuit runs.
#[derive(Clone, Debug)]
pub struct LayeredCircuit {
    n: usize,
    energies: Vec<f64>,
}

impl LayeredCircuit {
    pub fn new(m: &IsingModel) -> Result<Self> {
        check_sim_cap(m.n())?;
        Ok(Self {
            n: m.n(),
            energies: diagonal_energies(m)?,
        })
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// `|+>^n`, then for `k = 1..=p`: cost layer `gamma_k`, mixer layer `beta_k`.
    pub fn run(&self, schedule: &AngleSchedule) -> Result<StateVector> {
        if schedule.gammas.len() != schedule.betas.len() {
            return Err(Error::DimensionMismatch {
                expected: schedule.gammas.len(),
                got: schedule.betas.len(),
            });
        }
        let mut state = init_plus(self.n)?;
        for (&g, &b) in schedule.gammas.iter().zip(&schedule.betas) {
            state.apply_phases(g, &self.energies)?;
            state.apply_mixer(b);
        }
        Ok(state)
    }

    pub fn expectation(&self, schedule: &AngleSchedule) -> Result<f64> {
        self.run(schedule)?.expectation_diag(&self.energies)
    }
}

pub fn run_layered_circuit(m: &IsingModel, schedule: &AngleSchedule) -> Result<StateVector> {
    LayeredCircuit::new(m)?.run(schedule)
}

#[derive(Clone, Debug)]
pub struct OdeResult {
    pub state: StateVector,
    /// `| ||psi||^2 - 1 |` at `s = 1`; the state is not renormalized.
    pub norm_drift: f64,
}

/// `out = -i H(s) v / (kappa g(s)^q)`.
fn schrodinger_rhs(
    n: usize,
    energies: &[f64],
    s: f64,
    rate: f64,
    v: &[Complex64],
    out: &mut [Complex64],
) {
    let t = 1.0 - s;
    for (x, o) in out.iter_mut().enumerate() {
        let mut flips = Complex64::new(0.0, 0.0);
        for i in 0..n {
            flips += v[x ^ (1 << i)];
        }
        let hv = v[x] * (s * energies[x]) - flips * t;
        // -i * hv / rate
        *o = Complex64::new(hv.im, -hv.re) / rate;
    }
}

/// Largest `h ||H(s)|| / (kappa g^q)` taken in one RK4 substep.
pub const ODE_STIFFNESS_STEP: f64 = 0.05;
/// Substep budget; exceeding it reports a step-size underflow.
pub const ODE_MAX_SUBSTEPS: usize = 200_000_000;

/// Integrates `i kappa g(s)^q d/ds |psi> = H(s) |psi>` from `|+>^n` at
/// `s = 0` to `s = 1` with RK4 on `steps` uniform intervals.
///
/// An interval is split into equal substeps wherever the local rate
/// `||H(s)|| / (kappa g(s)^q)` would make a single RK4 step inaccurate, so
/// small gaps cost time rather than accuracy.
pub fn ode_evolve(
    m: &IsingModel,
    kappa: f64,
    q: f64,
    gap: &dyn GapFunction,
    steps: usize,
) -> Result<OdeResult> {
    if m.n() > DEFAULT_ODE_CAP {
        return Err(Error::CapExceeded {
            what: "ODE integration",
            n: m.n(),
            cap: DEFAULT_ODE_CAP,
        });
    }
    if !(kappa > 0.0) {
        return Err(Error::invalid(format!("kappa must be positive, got {kappa}")));
    }
    if steps < 1 {
        return Err(Error::invalid("at least one integration step is required"));
    }
    let n = m.n();
    let energies = diagonal_energies(m)?;
    let e_abs = energies.iter().fold(0.0f64, |a, e| a.max(e.abs()));
    let mut psi = init_plus(n)?.amps;
    let dim = psi.len();
    let h = 1.0 / steps as f64;
    let rate = |s: f64| -> Result<f64> {
        let g = gap.gap(s);
        if !(g >= GAP_FLOOR) {
            return Err(Error::StepUnderflow { at: s });
        }
        Ok(kappa * g.powf(q))
    };
    // ||H(s)|| <= (1 - s) n + s max|E|
    let stiffness = |s: f64, r: f64| ((1.0 - s) * n as f64 + s * e_abs) / r;
    let zero = Complex64::new(0.0, 0.0);
    let (mut k1, mut k2, mut k3, mut k4) = (vec![zero; dim], vec![zero; dim], vec![zero; dim], vec![zero; dim]);
    let mut tmp = vec![zero; dim];
    let mut substeps_used = 0usize;
    for step in 0..steps {
        let a = step as f64 * h;
        let b = if step + 1 == steps { 1.0 } else { a + h };
        let (ra, rm, rb) = (rate(a)?, rate(0.5 * (a + b))?, rate(b)?);
        let worst = stiffness(a, ra).max(stiffness(0.5 * (a + b), rm)).max(stiffness(b, rb));
        let sub = ((b - a) * worst / ODE_STIFFNESS_STEP).ceil().max(1.0);
        substeps_used = substeps_used.saturating_add(sub as usize);
        if !(sub.is_finite()) || substeps_used > ODE_MAX_SUBSTEPS {
            return Err(Error::StepUnderflow { at: a });
        }
        let sub = sub as usize;
        let hs = (b - a) / sub as f64;
        for j in 0..sub {
            let s0 = a + j as f64 * hs;
            let s1 = if j + 1 == sub { b } else { s0 + hs };
            let s_mid = 0.5 * (s0 + s1);
            let (r0, r_mid, r1) = if sub == 1 {
                (ra, rm, rb)
            } else {
                (rate(s0)?, rate(s_mid)?, rate(s1)?)
            };
            schrodinger_rhs(n, &energies, s0, r0, &psi, &mut k1);
            tmp.iter_mut().zip(&psi).zip(&k1).for_each(|((t, p), k)| *t = p + k * (0.5 * hs));
            schrodinger_rhs(n, &energies, s_mid, r_mid, &tmp, &mut k2);
            tmp.iter_mut().zip(&psi).zip(&k2).for_each(|((t, p), k)| *t = p + k * (0.5 * hs));
            schrodinger_rhs(n, &energies, s_mid, r_mid, &tmp, &mut k3);
            tmp.iter_mut().zip(&psi).zip(&k3).for_each(|((t, p), k)| *t = p + k * hs);
            schrodinger_rhs(n, &energies, s1, r1, &tmp, &mut k4);
            for (i, p) in psi.iter_mut().enumerate() {
                *p += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (hs / 6.0);
            }
        }
    }
    let state = StateVector { n, amps: psi };
    let norm_drift = (state.norm_sqr() - 1.0).abs();
    Ok(OdeResult { state, norm_drift })
}

/// `shots` i.i.d. basis-state draws from `|a_x|^2`.
pub fn sample_bitstrings(state: &StateVector, shots: usize, seed: u64) -> Result<Vec<u64>> {
    if shots < 1 {
        return Err(Error::invalid("shots must be at least 1"));
    }
    let dist = WeightedIndex::new(state.probabilities())
        .map_err(|e| Error::invalid(format!("cannot sample from state: {e}")))?;
    let mut rng = seeded_rng(seed);
    Ok((0..shots).map(|_| dist.sample(&mut rng) as u64).collect())
}
