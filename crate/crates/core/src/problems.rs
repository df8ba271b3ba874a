//! Problem instances and their Ising form.
//!
//! QUBO coefficients are stored upper-triangular (`i <= j`). Converting to
//! spins uses `x_i = (1 - z_i) / 2`, and the constant dropped by the Ising
//! Hamiltonian is kept in [`IsingModel::offset`] so that QUBO objective
//! values and cut values can be recovered exactly.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest `n` for which full `2^n` energy tables are built.
pub const DEFAULT_ENERGY_CAP: usize = 24;

/// Retry budget for the pairing-model rejection loop.
pub const REGULAR_GRAPH_RETRIES: usize = 1000;

/// Builds the seeded generator used by every instance generator in the crate.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Spin value of qubit `i` in basis index `x`: bit 0 is `+1`, bit 1 is `-1`.
#[inline]
pub fn spin(x: u64, i: usize) -> f64 {
    if (x >> i) & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Formats a basis index as a bitstring with qubit 0 leftmost.
pub fn bitstring(x: u64, n: usize) -> String {
    (0..n)
        .map(|i| if (x >> i) & 1 == 1 { '1' } else { '0' })
        .collect()
}

/// A QUBO instance `f(x) = sum_i Q_ii x_i + sum_{i<j} Q_ij x_i x_j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "QuboDoc", into = "QuboDoc")]
pub struct QuboInstance {
    n: usize,
    coeffs: BTreeMap<(usize, usize), f64>,
    bounds_hint: Option<(f64, f64)>,
}

#[derive(Serialize, Deserialize)]
struct QuboDoc {
    n: usize,
    coeffs: Vec<(usize, usize, f64)>,
    #[serde(default)]
    bounds_hint: Option<(f64, f64)>,
}

impl TryFrom<QuboDoc> for QuboInstance {
    type Error = Error;

    fn try_from(doc: QuboDoc) -> Result<Self> {
        QuboInstance::new(doc.n, doc.coeffs, doc.bounds_hint)
    }
}

impl From<QuboInstance> for QuboDoc {
    fn from(q: QuboInstance) -> Self {
        QuboDoc {
            n: q.n,
            coeffs: q.coeffs.into_iter().map(|((i, j), v)| (i, j, v)).collect(),
            bounds_hint: q.bounds_hint,
        }
    }
}

impl QuboInstance {
    /// Builds an instance from `(i, j, Q_ij)` triples. A pair given as
    /// `(j, i)` with `j > i` is stored as `(i, j)`; repeated pairs add up.
    pub fn new(
        n: usize,
        coeffs: impl IntoIterator<Item = (usize, usize, f64)>,
        bounds_hint: Option<(f64, f64)>,
    ) -> Result<Self> {
        if n < 1 {
            return Err(Error::invalid("QUBO needs at least one variable"));
        }
        if let Some((lo, hi)) = bounds_hint {
            if !(lo <= hi) {
                return Err(Error::invalid(format!("bad bounds hint ({lo}, {hi})")));
            }
        }
        let mut map = BTreeMap::new();
        for (a, b, v) in coeffs {
            let (i, j) = if a <= b { (a, b) } else { (b, a) };
            if j >= n {
                return Err(Error::invalid(format!("coefficient ({a}, {b}) out of range for n = {n}")));
            }
            if !v.is_finite() {
                return Err(Error::invalid(format!("non-finite coefficient at ({a}, {b})")));
            }
            *map.entry((i, j)).or_insert(0.0) += v;
        }
        if let Some((lo, hi)) = bounds_hint {
            if let Some((&(i, j), &v)) = map.iter().find(|(_, &v)| v < lo || v > hi) {
                return Err(Error::invalid(format!(
                    "Q[{i},{j}] = {v} lies outside bounds hint [{lo}, {hi}]"
                )));
            }
        }
        Ok(Self {
            n,
            coeffs: map,
            bounds_hint,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coeffs(&self) -> &BTreeMap<(usize, usize), f64> {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize, j: usize) -> f64 {
        let key = if i <= j { (i, j) } else { (j, i) };
        self.coeffs.get(&key).copied().unwrap_or(0.0)
    }

    pub fn bounds_hint(&self) -> Option<(f64, f64)> {
        self.bounds_hint
    }

    /// Returns a copy with every coefficient multiplied by `factor` (and the
    /// bounds hint mapped accordingly).
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let hint = self.bounds_hint.map(|(lo, hi)| {
            let (a, b) = (lo * factor, hi * factor);
            (a.min(b), a.max(b))
        });
        Self::new(
            self.n,
            self.coeffs.iter().map(|(&(i, j), &v)| (i, j, v * factor)),
            hint,
        )
    }

    /// QUBO objective of the bit assignment encoded in `x` (bit `i` is `x_i`).
    pub fn value(&self, x: u64) -> f64 {
        self.coeffs
            .iter()
            .filter(|(&(i, j), _)| (x >> i) & 1 == 1 && (x >> j) & 1 == 1)
            .map(|(_, &v)| v)
            .sum()
    }
}

/// Whether the harness minimizes the Hamiltonian or its negative.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sense {
    #[default]
    Minimize,
    /// MaxCut: the cut Hamiltonian is maximized, i.e. `-H` is minimized.
    Maximize,
}

impl Sense {
    pub fn sign(self) -> f64 {
        match self {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    pub i: usize,
    pub j: usize,
    pub value: f64,
}

/// Diagonal Ising Hamiltonian `sum_i h_i Z_i + sum_{i<j} J_ij Z_i Z_j`.
///
/// `offset` is not part of the Hamiltonian spectrum; it is added back only
/// when reconstructing objective values ([`objective_values`]).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsingModel {
    n: usize,
    h: Vec<f64>,
    couplings: Vec<Coupling>,
    offset: f64,
    sense: Sense,
}

impl IsingModel {
    /// Couplings for the same pair are summed; zero couplings are dropped.
    pub fn new(
        h: Vec<f64>,
        couplings: impl IntoIterator<Item = (usize, usize, f64)>,
        offset: f64,
        sense: Sense,
    ) -> Result<Self> {
        let n = h.len();
        if n < 1 {
            return Err(Error::invalid("Ising model needs at least one spin"));
        }
        if h.iter().any(|v| !v.is_finite()) || !offset.is_finite() {
            return Err(Error::invalid("non-finite field or offset"));
        }
        let mut map: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (a, b, v) in couplings {
            if a == b || a.max(b) >= n {
                return Err(Error::invalid(format!("bad coupling ({a}, {b}) for n = {n}")));
            }
            if !v.is_finite() {
                return Err(Error::invalid(format!("non-finite coupling ({a}, {b})")));
            }
            *map.entry((a.min(b), a.max(b))).or_insert(0.0) += v;
        }
        let couplings = map
            .into_iter()
            .filter(|&(_, v)| v != 0.0)
            .map(|((i, j), value)| Coupling { i, j, value })
            .collect();
        Ok(Self {
            n,
            h,
            couplings,
            offset,
            sense,
        })
    }

    /// The all-zero model on `n` spins.
    pub fn zero(n: usize) -> Result<Self> {
        Self::new(vec![0.0; n], [], 0.0, Sense::Minimize)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> &[f64] {
        &self.h
    }

    pub fn couplings(&self) -> &[Coupling] {
        &self.couplings
    }

    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (i.min(j), i.max(j));
        self.couplings
            .iter()
            .find(|c| c.i == a && c.j == b)
            .map_or(0.0, |c| c.value)
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    /// Energy of a spin configuration given as a basis index, offset excluded.
    pub fn energy(&self, x: u64) -> f64 {
        let field: f64 = self.h.iter().enumerate().map(|(i, h)| h * spin(x, i)).sum();
        let pair: f64 = self
            .couplings
            .iter()
            .map(|c| c.value * spin(x, c.i) * spin(x, c.j))
            .sum();
        field + pair
    }

    /// Multiplies fields, couplings and offset by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            n: self.n,
            h: self.h.iter().map(|v| v * factor).collect(),
            couplings: self
                .couplings
                .iter()
                .map(|c| Coupling {
                    value: c.value * factor,
                    ..*c
                })
                .collect(),
            offset: self.offset * factor,
            sense: self.sense,
        }
    }

    /// The Hamiltonian whose ground state encodes the solution: the model
    /// itself when minimizing, its negation when maximizing.
    pub fn to_minimization(&self) -> Self {
        match self.sense {
            Sense::Minimize => self.clone(),
            Sense::Maximize => Self {
                sense: Sense::Minimize,
                ..self.scaled(-1.0)
            },
        }
    }

    /// Returns the model with spins relabeled: old spin `i` becomes `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: perm.len(),
            });
        }
        let mut h = vec![0.0; self.n];
        for (i, &p) in perm.iter().enumerate() {
            h[p] = self.h[i];
        }
        Self::new(
            h,
            self.couplings.iter().map(|c| (perm[c.i], perm[c.j], c.value)),
            self.offset,
            self.sense,
        )
    }

    fn coupling_matrix(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.n * self.n];
        for c in &self.couplings {
            m[c.i * self.n + c.j] = c.value;
            m[c.j * self.n + c.i] = c.value;
        }
        m
    }
}

/// An undirected weighted edge with `i < j`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub w: f64,
}

/// A simple graph with nonnegative edge weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GraphDoc", into = "GraphDoc")]
pub struct GraphInstance {
    n: usize,
    edges: Vec<Edge>,
}

#[derive(Serialize, Deserialize)]
struct GraphDoc {
    n: usize,
    edges: Vec<(usize, usize, f64)>,
}

impl TryFrom<GraphDoc> for GraphInstance {
    type Error = Error;

    fn try_from(doc: GraphDoc) -> Result<Self> {
        GraphInstance::new(doc.n, doc.edges)
    }
}

impl From<GraphInstance> for GraphDoc {
    fn from(g: GraphInstance) -> Self {
        GraphDoc {
            n: g.n,
            edges: g.edges.into_iter().map(|e| (e.i, e.j, e.w)).collect(),
        }
    }
}

impl GraphInstance {
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        if n < 1 {
            return Err(Error::invalid("graph needs at least one vertex"));
        }
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for (a, b, w) in edges {
            if a == b {
                return Err(Error::invalid(format!("self-loop at {a}")));
            }
            if a.max(b) >= n {
                return Err(Error::invalid(format!("edge ({a}, {b}) out of range for n = {n}")));
            }
            if !w.is_finite() {
                return Err(Error::invalid(format!("non-finite weight on ({a}, {b})")));
            }
            let (i, j) = (a.min(b), a.max(b));
            if !seen.insert((i, j)) {
                return Err(Error::invalid(format!("duplicate edge ({i}, {j})")));
            }
            out.push(Edge { i, j, w });
        }
        out.sort_by_key(|e| (e.i, e.j));
        Ok(Self { n, edges: out })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for e in &self.edges {
            deg[e.i] += 1;
            deg[e.j] += 1;
        }
        deg
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.w).sum()
    }

    /// Cut value `sum w_ij (x_i xor x_j)` of the partition encoded in `x`.
    pub fn cut_value(&self, x: u64) -> f64 {
        self.edges
            .iter()
            .filter(|e| ((x >> e.i) ^ (x >> e.j)) & 1 == 1)
            .map(|e| e.w)
            .sum()
    }
}

/// Draws every `Q_ij` (`i <= j`) independently and uniformly from `[lo, hi]`.
pub fn gen_random_qubo(n: usize, lo: f64, hi: f64, seed: u64) -> Result<QuboInstance> {
    if n < 1 {
        return Err(Error::invalid("n must be at least 1"));
    }
    if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::invalid(format!("bad coefficient range [{lo}, {hi}]")));
    }
    let mut rng = seeded_rng(seed);
    let mut coeffs = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        for j in i..n {
            coeffs.push((i, j, rng.random_range(lo..=hi)));
        }
    }
    QuboInstance::new(n, coeffs, Some((lo, hi)))
}

/// Random simple `d`-regular graph from the pairing (configuration) model,
/// rejecting pairings with self-loops or repeated edges.
pub fn gen_regular_graph(
    n: usize,
    d: usize,
    weight_range: Option<(f64, f64)>,
    seed: u64,
) -> Result<GraphInstance> {
    if n < 1 || d >= n || (n * d) % 2 != 0 {
        return Err(Error::invalid(format!("no simple {d}-regular graph on {n} vertices")));
    }
    if let Some((lo, hi)) = weight_range {
        if !(0.0 <= lo && lo <= hi && hi.is_finite()) {
            return Err(Error::invalid(format!("bad weight range [{lo}, {hi}]")));
        }
    }
    let mut rng = seeded_rng(seed);
    let mut stubs: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, d)).collect();
    for _ in 0..REGULAR_GRAPH_RETRIES {
        stubs.shuffle(&mut rng);
        let mut pairs = BTreeSet::new();
        let simple = stubs.chunks_exact(2).all(|p| {
            let (a, b) = (p[0].min(p[1]), p[0].max(p[1]));
            a != b && pairs.insert((a, b))
        });
        if !simple {
            continue;
        }
        let edges: Vec<_> = pairs
            .into_iter()
            .map(|(i, j)| {
                let w = match weight_range {
                    Some((lo, hi)) => rng.random_range(lo..=hi),
                    None => 1.0,
                };
                (i, j, w)
            })
            .collect();
        return GraphInstance::new(n, edges);
    }
    Err(Error::GraphGeneration {
        n,
        d,
        attempts: REGULAR_GRAPH_RETRIES,
    })
}

/// Maps a QUBO to spins with `x_i = (1 - z_i) / 2`.
///
/// The off-diagonal sum in the local field runs over both `Q_ij` (`j > i`)
/// and `Q_ji` (`j < i`), so that `f(x) = energy(z(x)) + offset` holds
/// exactly for the upper-triangular storage.
pub fn qubo_to_ising(q: &QuboInstance) -> IsingModel {
    let n = q.n();
    let mut h = vec![0.0; n];
    let mut couplings = Vec::new();
    let mut diag = 0.0;
    let mut off = 0.0;
    for (&(i, j), &v) in q.coeffs() {
        if i == j {
            h[i] -= v / 2.0;
            diag += v;
        } else {
            h[i] -= v / 4.0;
            h[j] -= v / 4.0;
            couplings.push((i, j, v / 4.0));
            off += v;
        }
    }
    IsingModel::new(h, couplings, diag / 2.0 + off / 4.0, Sense::Minimize)
        .expect("QUBO instance already validated")
}

/// Cut Hamiltonian `sum w_ij (1 - Z_i Z_j) / 2`, flagged for maximization.
pub fn maxcut_to_ising(g: &GraphInstance) -> Result<IsingModel> {
    if let Some(e) = g.edges().iter().find(|e| e.w < 0.0) {
        return Err(Error::invalid(format!("negative weight {} on ({}, {})", e.w, e.i, e.j)));
    }
    IsingModel::new(
        vec![0.0; g.n()],
        g.edges().iter().map(|e| (e.i, e.j, -e.w / 2.0)),
        g.total_weight() / 2.0,
        Sense::Maximize,
    )
}

/// Scale factor `2 / (q_max - q_min)` mapping a coefficient range onto the
/// width of the `[-1, 1]` learning ensemble.
pub fn rescale_factor(q_min: f64, q_max: f64) -> Result<f64> {
    if !(q_max > q_min) || !(q_max - q_min).is_finite() {
        return Err(Error::invalid(format!("bad rescale range [{q_min}, {q_max}]")));
    }
    Ok(2.0 / (q_max - q_min))
}

pub fn rescale_ising(m: &IsingModel, q_min: f64, q_max: f64) -> Result<IsingModel> {
    let alpha = rescale_factor(q_min, q_max)?;
    if alpha == 1.0 {
        return Ok(m.clone());
    }
    Ok(m.scaled(alpha))
}

fn check_cap(n: usize, cap: usize) -> Result<()> {
    if n > cap {
        return Err(Error::CapExceeded {
            what: "energy table",
            n,
            cap,
        });
    }
    Ok(())
}

/// Diagonal of the Ising Hamiltonian over all `2^n` basis states.
///
/// Built incrementally: the state with top set bit `k` differs from the
/// state without it by one spin flip, so each entry costs `O(k)`.
pub fn diagonal_energies(m: &IsingModel) -> Result<Vec<f64>> {
    diagonal_energies_capped(m, DEFAULT_ENERGY_CAP)
}

pub fn diagonal_energies_capped(m: &IsingModel, cap: usize) -> Result<Vec<f64>> {
    let n = m.n();
    check_cap(n, cap)?;
    let jm = m.coupling_matrix();
    let mut out = vec![0.0; 1usize << n];
    out[0] = m.h().iter().sum::<f64>() + m.couplings().iter().map(|c| c.value).sum::<f64>();
    for k in 0..n {
        let row = &jm[k * n..(k + 1) * n];
        // field on spin k with every spin above k at +1
        let base = m.h()[k] + row[k + 1..].iter().sum::<f64>();
        let half = 1usize << k;
        let (lower, upper) = out.split_at_mut(half);
        for (y, (e, d)) in lower.iter().zip(upper[..half].iter_mut()).enumerate() {
            let y = y as u64;
            let local: f64 = row[..k].iter().enumerate().map(|(j, &jv)| jv * spin(y, j)).sum();
            *d = e - 2.0 * (base + local);
        }
    }
    Ok(out)
}

/// Objective values (QUBO value or cut value): diagonal energies plus offset.
pub fn objective_values(m: &IsingModel) -> Result<Vec<f64>> {
    let off = m.offset();
    let mut e = diagonal_energies(m)?;
    e.iter_mut().for_each(|v| *v += off);
    Ok(e)
}

/// Exact spectrum extremes of a diagonal Hamiltonian.
#[derive(Clone, Debug, PartialEq)]
pub struct Extrema {
    pub e_min: f64,
    pub e_max: f64,
    /// Every basis index whose energy is within [`Extrema::TIE_TOL`]
    /// (relative to the energy scale) of `e_min`.
    pub argmin: Vec<u64>,
}

impl Extrema {
    pub const TIE_TOL: f64 = 1e-9;

    pub fn from_energies(energies: &[f64]) -> Self {
        let (e_min, e_max) = energies
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &e| (lo.min(e), hi.max(e)));
        let tol = Self::TIE_TOL * e_min.abs().max(e_max.abs()).max(1.0);
        let argmin = energies
            .iter()
            .enumerate()
            .filter(|(_, &e)| e <= e_min + tol)
            .map(|(x, _)| x as u64)
            .collect();
        Self { e_min, e_max, argmin }
    }
}

pub fn brute_force_extrema(m: &IsingModel) -> Result<Extrema> {
    Ok(Extrema::from_energies(&diagonal_energies(m)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_spin() -> IsingModel {
        IsingModel::new(vec![-1.0, -1.0], [(0, 1, 1.0)], 0.0, Sense::Minimize).unwrap()
    }

    #[test]
    fn random_qubo_is_deterministic_and_in_range() {
        let a = gen_random_qubo(10, -1.0, 1.0, 42).unwrap();
        let b = gen_random_qubo(10, -1.0, 1.0, 42).unwrap();
        let c = gen_random_qubo(10, -1.0, 1.0, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.coeffs().len(), 55);
        assert!(a.coeffs().values().all(|v| (-1.0..=1.0).contains(v)));
        assert_eq!(a.bounds_hint(), Some((-1.0, 1.0)));
    }

    #[test]
    fn random_qubo_degenerate_range() {
        let q = gen_random_qubo(1, 0.0, 0.0, 9).unwrap();
        assert_eq!(q.coeff(0, 0), 0.0);
        assert!(gen_random_qubo(0, -1.0, 1.0, 0).is_err());
        assert!(gen_random_qubo(3, 1.0, -1.0, 0).is_err());
    }

    #[test]
    fn k4_is_the_only_cubic_graph_on_four_vertices() {
        let g = gen_regular_graph(4, 3, None, 5).unwrap();
        assert_eq!(g.edges().len(), 6);
        assert!(g.edges().iter().all(|e| e.w == 1.0));
        assert_eq!(g.degrees(), vec![3; 4]);
    }

    #[test]
    fn weighted_cubic_graph_on_twenty_vertices() {
        let g = gen_regular_graph(20, 3, Some((0.0, 10.0)), 11).unwrap();
        assert_eq!(g.edges().len(), 30);
        assert!(g.degrees().iter().all(|&d| d == 3));
        assert!(g.edges().iter().all(|e| (0.0..=10.0).contains(&e.w)));
        assert_eq!(g, gen_regular_graph(20, 3, Some((0.0, 10.0)), 11).unwrap());
    }

    #[test]
    fn infeasible_regular_graphs_rejected() {
        assert!(gen_regular_graph(5, 3, None, 0).is_err());
        assert!(gen_regular_graph(3, 3, None, 0).is_err());
    }

    #[test]
    fn graph_validation() {
        assert!(GraphInstance::new(3, [(0, 0, 1.0)]).is_err());
        assert!(GraphInstance::new(3, [(0, 1, 1.0), (1, 0, 2.0)]).is_err());
        assert!(GraphInstance::new(3, [(0, 3, 1.0)]).is_err());
        let g = GraphInstance::new(2, [(0, 1, -1.0)]).unwrap();
        assert!(maxcut_to_ising(&g).is_err());
    }

    #[test]
    fn qubo_to_ising_single_variable() {
        let q = QuboInstance::new(1, [(0, 0, 2.0)], None).unwrap();
        let m = qubo_to_ising(&q);
        assert_eq!(m.h(), &[-1.0]);
        assert!(m.couplings().is_empty());
        assert_eq!(m.offset(), 1.0);
        // x = 0 is z = +1
        assert_eq!(m.energy(0) + m.offset(), q.value(0));
    }

    #[test]
    fn qubo_to_ising_two_variables() {
        let q = QuboInstance::new(2, [(0, 1, 4.0)], None).unwrap();
        let m = qubo_to_ising(&q);
        assert_eq!(m.h(), &[-1.0, -1.0]);
        assert_eq!(m.coupling(0, 1), 1.0);
        assert_eq!(m.offset(), 1.0);
        let vals: Vec<f64> = (0..4).map(|x| m.energy(x) + m.offset()).collect();
        assert_eq!(vals, vec![0.0, 0.0, 0.0, 4.0]);
        assert_eq!(objective_values(&m).unwrap(), vals);
    }

    #[test]
    fn zero_qubo_gives_zero_model() {
        let q = QuboInstance::new(3, [(0, 0, 0.0), (1, 2, 0.0)], None).unwrap();
        let m = qubo_to_ising(&q);
        assert!(m.h().iter().all(|&v| v == 0.0));
        assert!(m.couplings().is_empty());
        assert_eq!(m.offset(), 0.0);
    }

    #[test]
    fn maxcut_single_edge_energies() {
        let g = GraphInstance::new(2, [(0, 1, 1.0)]).unwrap();
        let m = maxcut_to_ising(&g).unwrap();
        assert_eq!(m.sense(), Sense::Maximize);
        assert_eq!(objective_values(&m).unwrap(), vec![0.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn maxcut_k4() {
        let g = gen_regular_graph(4, 3, None, 0).unwrap();
        let m = maxcut_to_ising(&g).unwrap();
        let vals = objective_values(&m).unwrap();
        assert_eq!(vals.iter().cloned().fold(f64::MIN, f64::max), 4.0);
        let ext = brute_force_extrema(&m.to_minimization()).unwrap();
        assert_eq!(ext.e_min - m.offset(), -4.0);
        // balanced bipartitions: exactly two ones
        assert_eq!(ext.argmin.len(), 6);
        assert!(ext.argmin.iter().all(|x| x.count_ones() == 2));
    }

    #[test]
    fn maxcut_empty_graph() {
        let g = GraphInstance::new(3, []).unwrap();
        let m = maxcut_to_ising(&g).unwrap();
        assert!(objective_values(&m).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rescale_examples() {
        let q = gen_random_qubo(5, -100.0, 100.0, 3).unwrap();
        let m = qubo_to_ising(&q);
        assert_eq!(rescale_ising(&m, -1.0, 1.0).unwrap(), m);
        let r = rescale_ising(&m, -100.0, 100.0).unwrap();
        for (a, b) in r.h().iter().zip(m.h()) {
            assert!((a - b / 100.0).abs() <= 1e-15 * b.abs().max(1.0));
        }
        assert!(rescale_ising(&m, 1.0, 1.0).is_err());
        let e = diagonal_energies(&m).unwrap();
        let er = diagonal_energies(&r).unwrap();
        let alpha = rescale_factor(-100.0, 100.0).unwrap();
        for (a, b) in e.iter().zip(&er) {
            assert!((a * alpha - b).abs() < 1e-12);
        }
        assert_eq!(
            brute_force_extrema(&m).unwrap().argmin,
            brute_force_extrema(&r).unwrap().argmin
        );
    }

    #[test]
    fn diagonal_energies_small_model() {
        let e = diagonal_energies(&two_spin()).unwrap();
        assert_eq!(e, vec![-1.0, -1.0, -1.0, 3.0]);
        assert!(diagonal_energies(&IsingModel::zero(4).unwrap()).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn diagonal_energies_match_direct_sum() {
        let m = qubo_to_ising(&gen_random_qubo(9, -1.0, 1.0, 17).unwrap());
        let e = diagonal_energies(&m).unwrap();
        for (x, v) in e.iter().enumerate() {
            assert!((v - m.energy(x as u64)).abs() < 1e-12);
        }
        assert!(e.iter().sum::<f64>().abs() < 1e-9);
    }

    #[test]
    fn energy_cap() {
        let m = IsingModel::zero(25).unwrap();
        assert!(matches!(diagonal_energies(&m), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn brute_force_examples() {
        let ext = brute_force_extrema(&two_spin()).unwrap();
        assert_eq!((ext.e_min, ext.e_max), (-1.0, 3.0));
        assert_eq!(ext.argmin, vec![0, 1, 2]);
        let z = brute_force_extrema(&IsingModel::zero(3).unwrap()).unwrap();
        assert_eq!((z.e_min, z.e_max), (0.0, 0.0));
        assert_eq!(z.argmin.len(), 8);
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let q = gen_random_qubo(6, -100.0, 100.0, 8).unwrap();
        let s = serde_json::to_string(&q).unwrap();
        let back: QuboInstance = serde_json::from_str(&s).unwrap();
        assert_eq!(q, back);
        for (a, b) in q.coeffs().values().zip(back.coeffs().values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        let g = gen_regular_graph(8, 3, Some((0.0, 10.0)), 1).unwrap();
        let back: GraphInstance = serde_json::from_str(&serde_json::to_string(&g).unwrap()).unwrap();
        assert_eq!(g, back);
    }

    #[test]
    fn json_document_shape() {
        let q = QuboInstance::new(2, [(0, 1, 0.5)], Some((-1.0, 1.0))).unwrap();
        let v: serde_json::Value = serde_json::to_value(&q).unwrap();
        assert_eq!(v["n"], 2);
        assert_eq!(v["coeffs"][0], serde_json::json!([0, 1, 0.5]));
        assert_eq!(v["bounds_hint"], serde_json::json!([-1.0, 1.0]));
        let bad = r#"{"n": 2, "coeffs": [[0, 5, 1.0]], "bounds_hint": null}"#;
        assert!(serde_json::from_str::<QuboInstance>(bad).is_err());
    }
}
