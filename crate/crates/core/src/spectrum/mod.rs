//! Instantaneous spectral gaps of `H(s) = (1 - s) H0 + s H1`, with
//! `H0 = -sum_i X_i` and `H1` the diagonal Ising Hamiltonian.
//!
//! The matrix is never formed on the iterative path: `H0` couples basis
//! states at Hamming distance one, so a matvec is a diagonal scale plus `n`
//! bit-flip gathers.

mod lanczos;

use std::io::Write;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problems::{diagonal_energies, gen_random_qubo, qubo_to_ising, IsingModel};

/// Default cap on `n` for diagonalization (dimension 16384).
pub const DEFAULT_DIAG_CAP: usize = 14;
/// Dense matrices are never built above this size.
pub const DENSE_CAP: usize = 12;
pub const DEFAULT_GRID_POINTS: usize = 101;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum EigenMethod {
    /// Dense for tiny systems, Lanczos otherwise.
    #[default]
    Auto,
    Dense,
    Lanczos,
}

#[derive(Clone, Copy, Debug)]
pub struct SpectrumOptions {
    pub cap: usize,
    pub method: EigenMethod,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self {
            cap: DEFAULT_DIAG_CAP,
            method: EigenMethod::Auto,
        }
    }
}

/// `H(s)` realized over a precomputed diagonal of `H1`.
pub struct InterpolatingHamiltonian<'a> {
    n: usize,
    energies: &'a [f64],
    s: f64,
}

impl<'a> InterpolatingHamiltonian<'a> {
    pub fn new(n: usize, energies: &'a [f64], s: f64) -> Result<Self> {
        if energies.len() != 1usize << n {
            return Err(Error::DimensionMismatch {
                expected: 1 << n,
                got: energies.len(),
            });
        }
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::invalid(format!("s = {s} outside [0, 1]")));
        }
        Ok(Self { n, energies, s })
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    /// `out = H(s) v`.
    pub fn apply(&self, v: &[f64], out: &mut [f64]) {
        let t = 1.0 - self.s;
        for (x, o) in out.iter_mut().enumerate() {
            let flips: f64 = (0..self.n).map(|i| v[x ^ (1 << i)]).sum();
            *o = self.s * self.energies[x] * v[x] - t * flips;
        }
    }

    /// Gershgorin bound on the spectral radius.
    pub fn scale(&self) -> f64 {
        let emax = self.energies.iter().fold(0.0f64, |a, e| a.max(e.abs()));
        self.s * emax + (1.0 - self.s) * self.n as f64
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let dim = self.dim();
        let t = 1.0 - self.s;
        DMatrix::from_fn(dim, dim, |r, c| {
            if r == c {
                self.s * self.energies[r]
            } else if (r ^ c).count_ones() == 1 {
                -t
            } else {
                0.0
            }
        })
    }
}

fn two_smallest(values: impl IntoIterator<Item = f64>) -> (f64, f64) {
    values
        .into_iter()
        .fold((f64::INFINITY, f64::INFINITY), |(a, b), v| {
            if v < a {
                (v, a)
            } else if v < b {
                (a, v)
            } else {
                (a, b)
            }
        })
}

fn lowest_pair(ham: &InterpolatingHamiltonian<'_>, opts: &SpectrumOptions) -> Result<(f64, f64)> {
    if ham.s == 1.0 {
        return Ok(two_smallest(ham.energies.iter().copied()));
    }
    let method = match opts.method {
        EigenMethod::Auto if ham.n <= 4 => EigenMethod::Dense,
        EigenMethod::Auto => EigenMethod::Lanczos,
        m => m,
    };
    match method {
        EigenMethod::Dense => {
            if ham.n > DENSE_CAP {
                return Err(Error::CapExceeded {
                    what: "dense diagonalization",
                    n: ham.n,
                    cap: DENSE_CAP,
                });
            }
            Ok(two_smallest(ham.to_dense().symmetric_eigenvalues().iter().copied()))
        }
        _ => lanczos::two_lowest(ham.dim(), ham.scale(), &Default::default(), |v, out| {
            ham.apply(v, out)
        }),
    }
}

fn check_diag_cap(n: usize, opts: &SpectrumOptions) -> Result<()> {
    if n > opts.cap {
        return Err(Error::CapExceeded {
            what: "diagonalization",
            n,
            cap: opts.cap,
        });
    }
    Ok(())
}

/// Ground and first excited energies `(E0, E1)` of `H(s)`, `E0 <= E1`.
pub fn two_lowest_eigenvalues(m: &IsingModel, s: f64) -> Result<(f64, f64)> {
    two_lowest_eigenvalues_with(m, s, &SpectrumOptions::default())
}

pub fn two_lowest_eigenvalues_with(m: &IsingModel, s: f64, opts: &SpectrumOptions) -> Result<(f64, f64)> {
    check_diag_cap(m.n(), opts)?;
    let energies = diagonal_energies(m)?;
    lowest_pair(&InterpolatingHamiltonian::new(m.n(), &energies, s)?, opts)
}

/// `g(s) = E1(s) - E0(s)`. A degenerate ground level gives zero.
pub fn gap_at(m: &IsingModel, s: f64) -> Result<f64> {
    let (e0, e1) = two_lowest_eigenvalues(m, s)?;
    Ok((e1 - e0).max(0.0))
}

/// `points` uniformly spaced values on `[0, 1]`, endpoints exact.
pub fn uniform_grid(points: usize) -> Vec<f64> {
    assert!(points >= 2, "a grid needs both endpoints");
    let last = (points - 1) as f64;
    (0..points).map(|j| j as f64 / last).collect()
}

fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 2 || grid[0] != 0.0 || grid[grid.len() - 1] != 1.0 {
        return Err(Error::invalid("grid must start at 0, end at 1 and have at least two points"));
    }
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::invalid("grid must be strictly increasing"));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    Raw,
    Mean,
    Median,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileMeta {
    pub n: usize,
    pub coeff_range: Option<(f64, f64)>,
    pub instances: usize,
    pub kind: Aggregation,
}

/// Gap values on a common grid of `s` values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapProfile {
    pub grid: Vec<f64>,
    pub gaps: Vec<f64>,
    pub meta: ProfileMeta,
}

impl GapProfile {
    pub fn new(grid: Vec<f64>, gaps: Vec<f64>, meta: ProfileMeta) -> Result<Self> {
        validate_grid(&grid)?;
        if grid.len() != gaps.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                got: gaps.len(),
            });
        }
        if gaps.iter().any(|g| !(*g >= 0.0)) {
            return Err(Error::invalid("gaps must be nonnegative"));
        }
        Ok(Self { grid, gaps, meta })
    }

    pub fn final_gap(&self) -> f64 {
        self.gaps[self.gaps.len() - 1]
    }
}

pub fn gap_profile(m: &IsingModel, grid: &[f64]) -> Result<GapProfile> {
    gap_profile_with(m, grid, &SpectrumOptions::default())
}

pub fn gap_profile_with(m: &IsingModel, grid: &[f64], opts: &SpectrumOptions) -> Result<GapProfile> {
    validate_grid(grid)?;
    check_diag_cap(m.n(), opts)?;
    let energies = diagonal_energies(m)?;
    let gaps = grid
        .iter()
        .map(|&s| {
            let (e0, e1) = lowest_pair(&InterpolatingHamiltonian::new(m.n(), &energies, s)?, opts)?;
            Ok((e1 - e0).max(0.0))
        })
        .collect::<Result<Vec<_>>>()?;
    GapProfile::new(
        grid.to_vec(),
        gaps,
        ProfileMeta {
            n: m.n(),
            coeff_range: None,
            instances: 1,
            kind: Aggregation::Raw,
        },
    )
}

/// Random QUBO ensemble: instance `i` is drawn with seed `seed_base + i`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub n: usize,
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    pub seed_base: u64,
}

impl EnsembleSpec {
    pub fn instance(&self, index: usize) -> Result<IsingModel> {
        let q = gen_random_qubo(self.n, self.lo, self.hi, self.seed_base.wrapping_add(index as u64))?;
        let m = qubo_to_ising(&q);
        // normalized to the width of [-1, 1]; a degenerate range is left alone
        if self.hi > self.lo {
            crate::problems::rescale_ising(&m, self.lo, self.hi)
        } else {
            Ok(m)
        }
    }
}

/// One raw profile per ensemble instance, in instance order.
pub fn sample_ensemble_gaps(spec: &EnsembleSpec, grid: &[f64]) -> Result<Vec<GapProfile>> {
    if spec.count < 1 {
        return Err(Error::invalid("ensemble needs at least one instance"));
    }
    validate_grid(grid)?;
    (0..spec.count)
        .into_par_iter()
        .map(|i| {
            let mut p = spec
                .instance(i)
                .and_then(|m| gap_profile(&m, grid))
                .map_err(|e| e.at_instance(i))?;
            p.meta.coeff_range = Some((spec.lo, spec.hi));
            Ok(p)
        })
        .collect()
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let k = values.len();
    if k % 2 == 1 {
        values[k / 2]
    } else {
        0.5 * (values[k / 2 - 1] + values[k / 2])
    }
}

/// Pointwise mean or median across profiles sharing one grid.
pub fn aggregate_profiles(profiles: &[GapProfile], kind: Aggregation) -> Result<GapProfile> {
    let first = profiles
        .first()
        .ok_or_else(|| Error::invalid("no profiles to aggregate"))?;
    if let Some(i) = profiles.iter().position(|p| p.grid != first.grid) {
        return Err(Error::invalid(format!("profile {i} uses a different grid")));
    }
    let count = profiles.len();
    let mut column = vec![0.0; count];
    let gaps = (0..first.grid.len())
        .map(|j| {
            column.iter_mut().zip(profiles).for_each(|(c, p)| *c = p.gaps[j]);
            match kind {
                Aggregation::Mean => column.iter().sum::<f64>() / count as f64,
                Aggregation::Median => median(&mut column),
                Aggregation::Raw => first.gaps[j],
            }
        })
        .collect();
    if kind == Aggregation::Raw && count > 1 {
        return Err(Error::invalid("raw aggregation of several profiles"));
    }
    GapProfile::new(
        first.grid.clone(),
        gaps,
        ProfileMeta {
            instances: profiles.iter().map(|p| p.meta.instances).sum(),
            kind,
            ..first.meta.clone()
        },
    )
}

/// Gap at `s = 1` for every profile.
pub fn final_gap_distribution(profiles: &[GapProfile]) -> Vec<f64> {
    profiles.iter().map(GapProfile::final_gap).collect()
}

pub fn write_profile_csv<W: Write>(w: W, profile: &GapProfile) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["s", "gap"])?;
    for (s, g) in profile.grid.iter().zip(&profile.gaps) {
        out.write_record([s.to_string(), g.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_paired_csv<W: Write>(w: W, mean: &GapProfile, median: &GapProfile) -> Result<()> {
    if mean.grid != median.grid {
        return Err(Error::invalid("mean and median profiles use different grids"));
    }
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["s", "mean", "median"])?;
    for ((s, a), b) in mean.grid.iter().zip(&mean.gaps).zip(&median.gaps) {
        out.write_record([s.to_string(), a.to_string(), b.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_ensemble_csv<W: Write>(w: W, profiles: &[GapProfile]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["instance_id", "s", "gap"])?;
    for (i, p) in profiles.iter().enumerate() {
        for (s, g) in p.grid.iter().zip(&p.gaps) {
            out.write_record([i.to_string(), s.to_string(), g.to_string()])?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn write_final_gaps_csv<W: Write>(w: W, profiles: &[GapProfile]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["instance_id", "final_gap"])?;
    for (i, g) in final_gap_distribution(profiles).iter().enumerate() {
        out.write_record([i.to_string(), g.to_string()])?;
    }
    out.flush()?;
    Ok(())
}
