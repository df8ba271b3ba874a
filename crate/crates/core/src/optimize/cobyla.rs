//! Bound-constrained derivative-free minimization with linear models on a
//! simplex, in the style of Powell's COBYLA.
//!
//! The `n + 1` simplex vertices interpolate a linear model of the objective.
//! Each iteration minimizes the model over the intersection of the trust
//! ball of radius `rho` with the box, evaluates the trial point and swaps it
//! into the simplex. The trust radius `delta` grows after steps that agree
//! with the model and shrinks otherwise, but never below the resolution
//! `rho`. When steps fail at `delta == rho` the resolution is halved, after
//! first repairing the simplex geometry if it has degenerated.
//! Every iterate stays inside the bounds.

use nalgebra::{DMatrix, DVector};

use super::OptResult;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CobylaSettings {
    pub rho_begin: f64,
    pub rho_end: f64,
}

impl Default for CobylaSettings {
    fn default() -> Self {
        Self {
            rho_begin: 0.5,
            rho_end: 1e-6,
        }
    }
}

/// Counts evaluations, records the trace and the best point seen.
struct Tracker<'f> {
    f: &'f mut dyn FnMut(&[f64]) -> Result<f64>,
    budget: usize,
    result: OptResult,
}

impl Tracker<'_> {
    fn exhausted(&self) -> bool {
        self.result.evaluations_used >= self.budget
    }

    /// `None` once the budget is spent.
    fn eval(&mut self, x: &[f64]) -> Result<Option<f64>> {
        if self.exhausted() {
            return Ok(None);
        }
        let value = (self.f)(x)?;
        if !value.is_finite() {
            return Err(Error::NonFiniteObjective {
                value,
                params: x.to_vec(),
            });
        }
        self.result.record(x, value);
        Ok(Some(value))
    }
}

/// Minimizer of the linear function `g . s` over `|s| <= rho`,
/// `lo <= s <= hi`: `s(t) = clip(-t g, lo, hi)` with `t` chosen by bisection
/// so that `|s(t)| = rho`.
fn trust_step(g: &[f64], rho: f64, lo: &[f64], hi: &[f64]) -> Vec<f64> {
    let clip = |t: f64| -> Vec<f64> {
        g.iter()
            .zip(lo.iter().zip(hi))
            .map(|(gi, (l, h))| (-t * gi).clamp(*l, *h))
            .collect()
    };
    let norm = |s: &[f64]| s.iter().map(|v| v * v).sum::<f64>().sqrt();
    let gnorm = norm(g);
    if gnorm == 0.0 {
        return vec![0.0; g.len()];
    }
    let mut t_hi = rho / gnorm;
    let free = clip(t_hi);
    if norm(&free) >= rho * (1.0 - 1e-12) {
        return free;
    }
    // bounds cut the ball; grow t until |s| reaches rho or saturates
    let mut t_lo = t_hi;
    for _ in 0..60 {
        t_hi *= 2.0;
        if norm(&clip(t_hi)) >= rho {
            break;
        }
        t_lo = t_hi;
    }
    if norm(&clip(t_hi)) < rho {
        return clip(t_hi);
    }
    for _ in 0..100 {
        let mid = 0.5 * (t_lo + t_hi);
        if norm(&clip(mid)) > rho {
            t_hi = mid;
        } else {
            t_lo = mid;
        }
    }
    clip(t_lo)
}

/// Minimizes `f` from `x0` inside `bounds` using at most `budget`
/// evaluations. Stops early only when the trust radius reaches `rho_end`.
pub fn minimize(
    f: &mut dyn FnMut(&[f64]) -> Result<f64>,
    x0: &[f64],
    bounds: &[(f64, f64)],
    budget: usize,
    settings: CobylaSettings,
) -> Result<OptResult> {
    let n = x0.len();
    if n == 0 {
        return Err(Error::invalid("nothing to optimize"));
    }
    if bounds.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: bounds.len(),
        });
    }
    if let Some(i) = (0..n).find(|&i| !(bounds[i].0 < bounds[i].1) || !(bounds[i].0..=bounds[i].1).contains(&x0[i])) {
        return Err(Error::invalid(format!(
            "x0[{i}] = {} not inside bounds [{}, {}]",
            x0[i], bounds[i].0, bounds[i].1
        )));
    }
    if budget < 1 {
        return Err(Error::invalid("budget must be at least 1"));
    }
    if !(settings.rho_begin > 0.0 && settings.rho_end > 0.0 && settings.rho_end <= settings.rho_begin) {
        return Err(Error::invalid("need 0 < rho_end <= rho_begin"));
    }

    let mut tr = Tracker {
        f,
        budget,
        result: OptResult::empty(n),
    };
    let mut rho = settings.rho_begin;

    let mut pts = vec![x0.to_vec()];
    let mut vals = match tr.eval(x0)? {
        Some(v) => vec![v],
        None => unreachable!("budget checked above"),
    };
    for i in 0..n {
        let (lo, hi) = bounds[i];
        let mut x = x0.to_vec();
        x[i] = if x0[i] + rho <= hi {
            x0[i] + rho
        } else if x0[i] - rho >= lo {
            x0[i] - rho
        } else if hi - x0[i] >= x0[i] - lo {
            hi
        } else {
            lo
        };
        match tr.eval(&x)? {
            Some(v) => {
                pts.push(x);
                vals.push(v);
            }
            None => return Ok(tr.result),
        }
    }

    let width = bounds.iter().map(|(l, h)| h - l).fold(0.0, f64::max);
    let mut delta = rho;
    let mut need_geometry = false;
    while !tr.exhausted() {
        let best = (0..=n).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).expect("non-empty simplex");
        let xb = pts[best].clone();
        let fb = vals[best];
        let others: Vec<usize> = (0..=n).filter(|&j| j != best).collect();

        let d = DMatrix::from_fn(n, n, |r, c| pts[others[r]][c] - xb[c]);
        let df = DVector::from_fn(n, |r, _| vals[others[r]] - fb);
        let dinv = d.clone().try_inverse();

        // veta: edge lengths; vsig: distance of each vertex from the face
        // spanned by the other edges
        let veta: Vec<f64> = (0..n).map(|r| d.row(r).norm()).collect();
        let vsig: Vec<f64> = match &dinv {
            Some(inv) => (0..n).map(|r| 1.0 / inv.column(r).norm()).collect(),
            None => vec![0.0; n],
        };
        let bad_geometry = veta.iter().any(|&e| e > 2.1 * delta) || vsig.iter().any(|&s| s < 0.25 * delta);

        if need_geometry && bad_geometry || dinv.is_none() {
            need_geometry = false;
            let far = (0..n).max_by(|&a, &b| veta[a].total_cmp(&veta[b])).expect("n >= 1");
            let r = if veta[far] > 2.1 * delta {
                far
            } else {
                (0..n).min_by(|&a, &b| vsig[a].total_cmp(&vsig[b])).expect("n >= 1")
            };
            let mut dir: Vec<f64> = match &dinv {
                Some(inv) => inv.column(r).iter().copied().collect(),
                None => (0..n).map(|c| if c == r % n { 1.0 } else { 0.0 }).collect(),
            };
            let len = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
            let target = (0.5 * delta).max(rho);
            dir.iter_mut().for_each(|v| *v *= target / len);
            // prefer the side the model says is downhill
            if let Some(inv) = &dinv {
                let g = inv * &df;
                if g.iter().zip(&dir).map(|(a, b)| a * b).sum::<f64>() > 0.0 {
                    dir.iter_mut().for_each(|v| *v = -*v);
                }
            }
            let candidate = |sign: f64| -> (Vec<f64>, bool) {
                let mut inside = true;
                let x = (0..n)
                    .map(|c| {
                        let v = xb[c] + sign * dir[c];
                        if v < bounds[c].0 || v > bounds[c].1 {
                            inside = false;
                        }
                        v.clamp(bounds[c].0, bounds[c].1)
                    })
                    .collect();
                (x, inside)
            };
            let (x, inside) = candidate(1.0);
            let x = if inside { x } else { candidate(-1.0).0 };
            match tr.eval(&x)? {
                Some(v) => {
                    pts[others[r]] = x;
                    vals[others[r]] = v;
                }
                None => break,
            }
            continue;
        }

        let inv = dinv.expect("checked above");
        let g = &inv * &df;
        let lo: Vec<f64> = (0..n).map(|c| bounds[c].0 - xb[c]).collect();
        let hi: Vec<f64> = (0..n).map(|c| bounds[c].1 - xb[c]).collect();
        let step = trust_step(g.as_slice(), delta, &lo, &hi);
        let step_len = step.iter().map(|v| v * v).sum::<f64>().sqrt();

        if step_len < 0.5 * delta {
            if delta > rho {
                delta = settle(0.5 * delta, rho);
                continue;
            }
            if bad_geometry {
                need_geometry = true;
                continue;
            }
            if rho <= settings.rho_end {
                break;
            }
            rho = shrink(rho, settings.rho_end);
            delta = rho;
            continue;
        }

        let x: Vec<f64> = (0..n).map(|c| (xb[c] + step[c]).clamp(bounds[c].0, bounds[c].1)).collect();
        let fx = match tr.eval(&x)? {
            Some(v) => v,
            None => break,
        };
        let predicted = -g.iter().zip(&step).map(|(a, b)| a * b).sum::<f64>();
        let ratio = (fb - fx) / predicted;

        // drop the vertex whose replacement keeps the simplex volume largest
        let s = DVector::from_column_slice(&step);
        let lambda = inv.transpose() * s;
        let r = (0..n)
            .max_by(|&a, &b| {
                let wa = lambda[a].abs() * (veta[a] / delta).max(1.0);
                let wb = lambda[b].abs() * (veta[b] / delta).max(1.0);
                wa.total_cmp(&wb)
            })
            .expect("n >= 1");
        pts[others[r]] = x;
        vals[others[r]] = fx;

        let at_floor = delta <= rho;
        delta = if !(ratio > 0.1) {
            0.5 * delta
        } else if ratio <= 0.7 {
            (0.5 * delta).max(step_len)
        } else {
            (0.5 * delta).max(2.0 * step_len).min(width)
        };
        delta = settle(delta, rho);

        if !(ratio > 0.1) && at_floor {
            if bad_geometry {
                need_geometry = true;
            } else if rho <= settings.rho_end {
                break;
            } else {
                rho = shrink(rho, settings.rho_end);
                delta = rho;
            }
        }
    }
    Ok(tr.result)
}

/// Trust radius snaps to the resolution once within a factor of 1.5.
fn settle(delta: f64, rho: f64) -> f64 {
    if delta <= 1.5 * rho {
        rho
    } else {
        delta
    }
}

fn shrink(rho: f64, rho_end: f64) -> f64 {
    let next = 0.5 * rho;
    if next <= 1.5 * rho_end {
        rho_end
    } else {
        next
    }
}
