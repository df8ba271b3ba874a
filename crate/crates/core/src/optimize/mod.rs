//! Classical outer loop: the two-parameter gap-schedule objective and the
//! `2p`-parameter vanilla QAOA objective, both minimized with the bounded
//! linear-model optimizer in [`cobyla`].

pub mod cobyla;

use std::f64::consts::PI;
use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problems::{seeded_rng, IsingModel, Sense};
use crate::schedule::{derive_angles, AngleSchedule, BezierGapCurve, GapFunction};
use crate::simulator::LayeredCircuit;

pub use cobyla::{minimize, CobylaSettings};

/// Evaluation budget matching 200 optimizer iterations.
pub const DEFAULT_BUDGET: usize = 200;
pub const HEURISTIC_START: [f64; 2] = [1.0, 1.5];
pub const KAPPA_BOUNDS: (f64, f64) = (1e-3, 50.0);
pub const Q_BOUNDS: (f64, f64) = (0.0, 3.0);
/// Vanilla QAOA angles start i.i.d. uniform on `[0, 0.1]`.
pub const QAOA_INIT_MAX: f64 = 0.1;
pub const GAMMA_BOUNDS: (f64, f64) = (-PI, PI);
pub const BETA_BOUNDS: (f64, f64) = (-PI / 2.0, PI / 2.0);

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TracePoint {
    pub eval_index: usize,
    pub value: f64,
    pub params: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OptResult {
    pub best_params: Vec<f64>,
    pub best_value: f64,
    pub trace: Vec<TracePoint>,
    pub evaluations_used: usize,
    pub method: Option<Method>,
}

impl OptResult {
    pub(crate) fn empty(dim: usize) -> Self {
        Self {
            best_params: vec![f64::NAN; dim],
            best_value: f64::INFINITY,
            trace: Vec::new(),
            evaluations_used: 0,
            method: None,
        }
    }

    pub(crate) fn record(&mut self, x: &[f64], value: f64) {
        self.trace.push(TracePoint {
            eval_index: self.evaluations_used,
            value,
            params: x.to_vec(),
        });
        self.evaluations_used += 1;
        if value < self.best_value {
            self.best_value = value;
            self.best_params = x.to_vec();
        }
    }

    /// CSV `eval_index,value,param_0,...,param_{d-1}`.
    pub fn write_trace_csv<W: Write>(&self, w: W) -> Result<()> {
        let dim = self.best_params.len();
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["eval_index".to_string(), "value".to_string()];
        header.extend((0..dim).map(|i| format!("param_{i}")));
        out.write_record(&header)?;
        for t in &self.trace {
            let mut row = vec![t.eval_index.to_string(), t.value.to_string()];
            row.extend(t.params.iter().map(f64::to_string));
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    HeuristicMean,
    HeuristicMedian,
    VanillaQaoa,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::HeuristicMean, Method::HeuristicMedian, Method::VanillaQaoa];

    pub fn name(self) -> &'static str {
        match self {
            Method::HeuristicMean => "heuristic_mean",
            Method::HeuristicMedian => "heuristic_median",
            Method::VanillaQaoa => "vanilla_qaoa",
        }
    }

    pub fn is_heuristic(self) -> bool {
        !matches!(self, Method::VanillaQaoa)
    }

    /// Search dimension at depth `p`.
    pub fn dimension(self, p: usize) -> usize {
        if self.is_heuristic() {
            2
        } else {
            2 * p
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown method {s:?}")))
    }
}

/// Which sign of the energy is minimized.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    MinimizeEnergy,
    /// MaxCut: maximize the cut, i.e. minimize `-E`.
    MinimizeNegEnergy,
}

/// A depth-`p` optimization problem on one model.
///
/// Circuits are built from the minimization form of the model, so the
/// objective value is always the energy of the Hamiltonian whose ground state
/// encodes the solution (`E` or `-E`).
#[derive(Clone, Debug)]
pub struct ObjectiveSpec {
    model: IsingModel,
    circuit: LayeredCircuit,
    p: usize,
    budget: usize,
}

impl ObjectiveSpec {
    pub fn new(model: IsingModel, p: usize, budget: usize) -> Result<Self> {
        if p < 1 {
            return Err(Error::invalid("p must be at least 1"));
        }
        if budget < 1 {
            return Err(Error::invalid("budget must be at least 1"));
        }
        let circuit = LayeredCircuit::new(&model.to_minimization())?;
        Ok(Self {
            model,
            circuit,
            p,
            budget,
        })
    }

    pub fn model(&self) -> &IsingModel {
        &self.model
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn direction(&self) -> Direction {
        match self.model.sense() {
            Sense::Minimize => Direction::MinimizeEnergy,
            Sense::Maximize => Direction::MinimizeNegEnergy,
        }
    }

    /// Diagonal of the minimized Hamiltonian.
    pub fn energies(&self) -> &[f64] {
        self.circuit.energies()
    }

    pub fn evaluate(&self, schedule: &AngleSchedule) -> Result<f64> {
        self.circuit.expectation(schedule)
    }
}

/// Gap-schedule objective at `(kappa, q)`.
pub fn heuristic_objective(kappa: f64, q: f64, spec: &ObjectiveSpec, gap: &dyn GapFunction) -> Result<f64> {
    spec.evaluate(&derive_angles(spec.p, kappa, q, gap)?)
}

/// Vanilla QAOA objective at `[gamma_1..gamma_p, beta_1..beta_p]`.
pub fn qaoa_objective(angles: &[f64], spec: &ObjectiveSpec) -> Result<f64> {
    if angles.len() != 2 * spec.p {
        return Err(Error::DimensionMismatch {
            expected: 2 * spec.p,
            got: angles.len(),
        });
    }
    spec.evaluate(&AngleSchedule::from_flat(angles)?)
}

/// Gap curves available to the heuristic methods.
#[derive(Clone, Debug, Default)]
pub struct CurveSet {
    pub mean: Option<BezierGapCurve>,
    pub median: Option<BezierGapCurve>,
}

impl CurveSet {
    pub fn for_method(&self, method: Method) -> Result<Option<&BezierGapCurve>> {
        let curve = match method {
            Method::HeuristicMean => self.mean.as_ref(),
            Method::HeuristicMedian => self.median.as_ref(),
            Method::VanillaQaoa => return Ok(None),
        };
        curve
            .map(Some)
            .ok_or_else(|| Error::invalid(format!("{method} needs a fitted gap curve")))
    }
}

/// Starting point and box for `method` at depth `p`.
pub fn initial_point(method: Method, p: usize, seed: u64) -> (Vec<f64>, Vec<(f64, f64)>) {
    if method.is_heuristic() {
        (HEURISTIC_START.to_vec(), vec![KAPPA_BOUNDS, Q_BOUNDS])
    } else {
        let mut rng = seeded_rng(seed);
        let x0 = (0..2 * p).map(|_| rng.random_range(0.0..=QAOA_INIT_MAX)).collect();
        let bounds = std::iter::repeat_n(GAMMA_BOUNDS, p)
            .chain(std::iter::repeat_n(BETA_BOUNDS, p))
            .collect();
        (x0, bounds)
    }
}

/// Runs one method on one spec with the default optimizer settings.
pub fn optimize_instance(spec: &ObjectiveSpec, method: Method, curves: &CurveSet, seed: u64) -> Result<OptResult> {
    let (x0, bounds) = initial_point(method, spec.p, seed);
    let mut result = match curves.for_method(method)? {
        Some(curve) => minimize(
            &mut |x| heuristic_objective(x[0], x[1], spec, curve),
            &x0,
            &bounds,
            spec.budget,
            CobylaSettings::default(),
        )?,
        None => minimize(
            &mut |x| qaoa_objective(x, spec),
            &x0,
            &bounds,
            spec.budget,
            CobylaSettings::default(),
        )?,
    };
    result.method = Some(method);
    Ok(result)
}
