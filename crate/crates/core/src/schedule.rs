//! Bezier gap curves and the closed-form angle schedule.
//!
//! A learned gap curve `g(s)` and two hyperparameters `(kappa, q)` define the
//! schedule law `ds/dt = kappa * g(s)^q`. Discretizing `s` into `p` steps and
//! splitting each step into a cost and a mixer exponential gives
//!
//! ```text
//! gamma_k = s_k ds / (kappa g(s_k)^q),   beta_k = (1 - s_k) ds / (kappa g(s_k)^q)
//! ```
//!
//! with `ds = 1/p` and `s_k = k ds`, `k = 1..=p`.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrum::GapProfile;

/// Lower bound applied to `g` in the angle denominator.
pub const GAP_FLOOR: f64 = 1e-9;
/// Number of points on which fitted curves are checked for positivity.
pub const POSITIVITY_CHECK_POINTS: usize = 1001;

/// Anything that can be evaluated as a gap function on `[0, 1]`.
pub trait GapFunction {
    fn gap(&self, s: f64) -> f64;

    fn id(&self) -> String {
        "anonymous".to_string()
    }
}

/// `g(s) = c`.
#[derive(Clone, Copy, Debug)]
pub struct ConstantGap(pub f64);

impl GapFunction for ConstantGap {
    fn gap(&self, _s: f64) -> f64 {
        self.0
    }

    fn id(&self) -> String {
        format!("constant_{}", self.0)
    }
}

/// Adapts a closure.
pub struct FnGap<F>(pub F);

impl<F: Fn(f64) -> f64> GapFunction for FnGap<F> {
    fn gap(&self, s: f64) -> f64 {
        (self.0)(s)
    }
}

/// Piecewise-linear interpolation of a sampled profile.
pub struct ProfileGap<'a>(pub &'a GapProfile);

impl GapFunction for ProfileGap<'_> {
    fn gap(&self, s: f64) -> f64 {
        let grid = &self.0.grid;
        let gaps = &self.0.gaps;
        let s = s.clamp(0.0, 1.0);
        let j = grid.partition_point(|&x| x <= s).clamp(1, grid.len() - 1);
        let (x0, x1) = (grid[j - 1], grid[j]);
        let w = (s - x0) / (x1 - x0);
        gaps[j - 1] * (1.0 - w) + gaps[j] * w
    }

    fn id(&self) -> String {
        format!("profile_{:?}", self.0.meta.kind).to_lowercase()
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Bernstein basis polynomial `C(d, i) (1-t)^(d-i) t^i`.
pub fn bernstein(degree: usize, i: usize, t: f64) -> f64 {
    binomial(degree, i) * (1.0 - t).powi((degree - i) as i32) * t.powi(i as i32)
}

/// Gap curve `g(s) = sum_i C(d, i) (1-s)^(d-i) s^i y_i`; the Bezier
/// parameter is identified with `s`, so only ordinates are stored.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BezierGapCurve {
    pub degree: usize,
    pub y: Vec<f64>,
    #[serde(default)]
    pub source_profile_id: String,
    #[serde(default)]
    pub rms_residual: f64,
}

impl BezierGapCurve {
    pub fn new(y: Vec<f64>) -> Result<Self> {
        if y.len() < 2 {
            return Err(Error::invalid("a Bezier curve needs at least two control ordinates"));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite control ordinate"));
        }
        Ok(Self {
            degree: y.len() - 1,
            y,
            source_profile_id: String::new(),
            rms_residual: 0.0,
        })
    }

    /// de Casteljau evaluation.
    pub fn eval(&self, s: f64) -> f64 {
        let mut b = self.y.clone();
        for r in 1..=self.degree {
            for i in 0..=self.degree - r {
                b[i] = (1.0 - s) * b[i] + s * b[i + 1];
            }
        }
        b[0]
    }

    /// Direct Bernstein sum, kept as an independent evaluator.
    pub fn eval_bernstein(&self, s: f64) -> f64 {
        self.y
            .iter()
            .enumerate()
            .map(|(i, y)| bernstein(self.degree, i, s) * y)
            .sum()
    }

    /// Smallest value over a uniform check grid, with its location.
    pub fn min_on_grid(&self, points: usize) -> (f64, f64) {
        (0..points)
            .map(|j| j as f64 / (points - 1) as f64)
            .map(|s| (self.eval(s), s))
            .fold((f64::INFINITY, 0.0), |a, b| if b.0 < a.0 { b } else { a })
    }

    pub fn check_positive(&self) -> Result<()> {
        let (min_value, at) = self.min_on_grid(POSITIVITY_CHECK_POINTS);
        if !(min_value > 0.0) {
            return Err(Error::NonPositiveCurve { min_value, at });
        }
        Ok(())
    }

    pub fn rms_against(&self, profile: &GapProfile) -> f64 {
        let sq: f64 = profile
            .grid
            .iter()
            .zip(&profile.gaps)
            .map(|(&s, &g)| (self.eval(s) - g).powi(2))
            .sum();
        (sq / profile.grid.len() as f64).sqrt()
    }

    pub fn from_json_file(path: &std::path::Path) -> Result<Self> {
        let curve: Self = serde_json::from_reader(std::io::BufReader::new(std::fs::File::open(path)?))?;
        if curve.y.len() != curve.degree + 1 {
            return Err(Error::invalid(format!(
                "{}: degree {} needs {} ordinates, found {}",
                path.display(),
                curve.degree,
                curve.degree + 1,
                curve.y.len()
            )));
        }
        Ok(curve)
    }
}

impl GapFunction for BezierGapCurve {
    fn gap(&self, s: f64) -> f64 {
        self.eval(s)
    }

    fn id(&self) -> String {
        if self.source_profile_id.is_empty() {
            format!("bezier_{}", self.degree)
        } else {
            format!("bezier_{}_{}", self.degree, self.source_profile_id)
        }
    }
}

pub fn eval_curve(curve: &BezierGapCurve, s: f64) -> f64 {
    curve.eval(s)
}

/// Least-squares Bezier fit with both end ordinates pinned to the profile's
/// end values; the interior ordinates solve the Bernstein design system.
pub fn fit_bezier(profile: &GapProfile, degree: usize) -> Result<BezierGapCurve> {
    let curve = fit_bezier_unchecked(profile, degree)?;
    curve.check_positive()?;
    Ok(curve)
}

/// As [`fit_bezier`] without the positivity requirement.
pub fn fit_bezier_unchecked(profile: &GapProfile, degree: usize) -> Result<BezierGapCurve> {
    let points = profile.grid.len();
    if degree < 1 {
        return Err(Error::invalid("Bezier degree must be at least 1"));
    }
    if points < degree + 1 {
        return Err(Error::RankDeficient { degree, points });
    }
    let first = profile.gaps[0];
    let last = profile.gaps[points - 1];
    let mut y = vec![0.0; degree + 1];
    y[0] = first;
    y[degree] = last;
    if degree > 1 {
        let free = degree - 1;
        let design = DMatrix::from_fn(points, free, |j, c| bernstein(degree, c + 1, profile.grid[j]));
        let rhs = DVector::from_fn(points, |j, _| {
            let s = profile.grid[j];
            profile.gaps[j] - first * bernstein(degree, 0, s) - last * bernstein(degree, degree, s)
        });
        let svd = design.svd(true, true);
        let sv = &svd.singular_values;
        let (smax, smin) = (sv.max(), sv.min());
        if !(smin > 1e-12 * smax) {
            return Err(Error::RankDeficient { degree, points });
        }
        let interior = svd
            .solve(&rhs, 0.0)
            .map_err(|_| Error::RankDeficient { degree, points })?;
        y[1..degree].copy_from_slice(interior.as_slice());
    }
    let mut curve = BezierGapCurve::new(y)?;
    curve.source_profile_id = format!(
        "{}_n{}_x{}",
        format!("{:?}", profile.meta.kind).to_lowercase(),
        profile.meta.n,
        profile.meta.instances
    );
    curve.rms_residual = curve.rms_against(profile);
    Ok(curve)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Derived {
        kappa: f64,
        q: f64,
        curve: String,
        /// Whether any `g(s_k)` fell below [`GAP_FLOOR`].
        floor_engaged: bool,
    },
    /// Free angles (vanilla QAOA).
    Free,
}

/// Per-layer QAOA angles; layer `k` applies `exp(-i gamma_k H1)` then
/// `exp(-i beta_k H0)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AngleSchedule {
    pub gammas: Vec<f64>,
    pub betas: Vec<f64>,
    pub provenance: Provenance,
}

impl AngleSchedule {
    pub fn free(gammas: Vec<f64>, betas: Vec<f64>) -> Result<Self> {
        if gammas.len() != betas.len() {
            return Err(Error::DimensionMismatch {
                expected: gammas.len(),
                got: betas.len(),
            });
        }
        Ok(Self {
            gammas,
            betas,
            provenance: Provenance::Free,
        })
    }

    /// Splits `[gamma_1..gamma_p, beta_1..beta_p]`.
    pub fn from_flat(params: &[f64]) -> Result<Self> {
        if params.len() % 2 != 0 {
            return Err(Error::invalid(format!("{} angles is not 2p", params.len())));
        }
        let p = params.len() / 2;
        Self::free(params[..p].to_vec(), params[p..].to_vec())
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.gammas.iter().chain(&self.betas).copied().collect()
    }

    pub fn p(&self) -> usize {
        self.gammas.len()
    }

    /// `s_k = k / p` for `k = 1..=p`.
    pub fn s_points(&self) -> Vec<f64> {
        let p = self.p();
        (1..=p).map(|k| k as f64 / p as f64).collect()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["k", "s_k", "gamma", "beta"])?;
        for (k, ((g, b), s)) in self.gammas.iter().zip(&self.betas).zip(self.s_points()).enumerate() {
            out.write_record([(k + 1).to_string(), s.to_string(), g.to_string(), b.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Closed-form angles for `p` layers from `(kappa, q)` and a gap function.
pub fn derive_angles(p: usize, kappa: f64, q: f64, gap: &dyn GapFunction) -> Result<AngleSchedule> {
    if p < 1 {
        return Err(Error::invalid("p must be at least 1"));
    }
    if !(kappa > 0.0) || !kappa.is_finite() {
        return Err(Error::invalid(format!("kappa must be positive, got {kappa}")));
    }
    if !q.is_finite() {
        return Err(Error::invalid(format!("q must be finite, got {q}")));
    }
    let ds = 1.0 / p as f64;
    let mut floor_engaged = false;
    let (gammas, betas) = (1..=p)
        .map(|k| {
            let s = k as f64 / p as f64;
            let g = gap.gap(s);
            if !(g >= GAP_FLOOR) {
                floor_engaged = true;
            }
            let denom = kappa * g.max(GAP_FLOOR).powf(q);
            (s * ds / denom, (1.0 - s) * ds / denom)
        })
        .unzip();
    Ok(AngleSchedule {
        gammas,
        betas,
        provenance: Provenance::Derived {
            kappa,
            q,
            curve: gap.id(),
            floor_engaged,
        },
    })
}

/// Total evolution time `T = int_0^1 ds / (kappa g(s)^q)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScheduleTime {
    pub total_time: f64,
    pub floor_engaged: bool,
}

/// Composite Simpson quadrature of `1 / (kappa g^q)` with `resolution`
/// subintervals (rounded up to even).
pub fn continuous_schedule_time(
    kappa: f64,
    q: f64,
    gap: &dyn GapFunction,
    resolution: usize,
) -> Result<ScheduleTime> {
    if !(kappa > 0.0) {
        return Err(Error::invalid(format!("kappa must be positive, got {kappa}")));
    }
    let m = (resolution.max(2) + 1) & !1;
    let h = 1.0 / m as f64;
    let mut floor_engaged = false;
    let mut f = |j: usize| {
        let g = gap.gap(j as f64 * h);
        if !(g >= GAP_FLOOR) {
            floor_engaged = true;
        }
        1.0 / (kappa * g.max(GAP_FLOOR).powf(q))
    };
    let mut acc = f(0) + f(m);
    for j in 1..m {
        acc += if j % 2 == 1 { 4.0 } else { 2.0 } * f(j);
    }
    Ok(ScheduleTime {
        total_time: acc * h / 3.0,
        floor_engaged,
    })
}
