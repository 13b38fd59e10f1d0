//! Limited-memory BFGS ascent with a backtracking line search.
//!
//! Only improving steps are accepted, so the recorded best value never
//! decreases. Optional box bounds are enforced by clamping the trial point.

use std::collections::VecDeque;

/// Settings for [`maximize`].
#[derive(Clone, Debug, PartialEq)]
pub struct AscentOptions {
    pub max_iterations: usize,
    /// Length (in parameter units) of the first trial step along the
    /// normalized gradient.
    pub initial_step: f64,
    /// Number of curvature pairs kept.
    pub memory: usize,
    /// Stop once the objective reaches this value.
    pub goal: Option<f64>,
    /// Stop once the gradient norm falls below this value.
    pub gradient_tolerance: f64,
    /// Symmetric box `[-b, b]` on every coordinate.
    pub bound: Option<f64>,
}

impl Default for AscentOptions {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            initial_step: 0.1,
            memory: 12,
            goal: None,
            gradient_tolerance: 1e-10,
            bound: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AscentRecord {
    pub iteration: usize,
    pub value: f64,
    pub gradient_norm: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    GoalReached,
    SmallGradient,
    MaxIterations,
    LineSearchFailed,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AscentResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub log: Vec<AscentRecord>,
    pub stop: StopReason,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Maximizes `f`, which returns the value and gradient at a point.
pub fn maximize<F>(x0: Vec<f64>, mut f: F, opts: &AscentOptions) -> AscentResult
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let clamp = |v: f64| match opts.bound {
        Some(b) => v.clamp(-b, b),
        None => v,
    };
    let mut x: Vec<f64> = x0.into_iter().map(clamp).collect();
    let (mut value, mut grad) = f(&x);
    let mut log = vec![AscentRecord {
        iteration: 0,
        value,
        gradient_norm: norm(&grad),
    }];
    let reached = |v: f64| opts.goal.is_some_and(|g| v >= g);
    if reached(value) {
        return AscentResult { x, value, log, stop: StopReason::GoalReached };
    }
    // Curvature pairs (s, y, 1/(y·s)) for the minimization of -f.
    let mut memory: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut stop = StopReason::MaxIterations;

    for iteration in 1..=opts.max_iterations {
        if norm(&grad) < opts.gradient_tolerance {
            stop = StopReason::SmallGradient;
            break;
        }
        let mut accepted = None;
        for attempt in 0..2 {
            if attempt == 1 {
                if memory.is_empty() {
                    break;
                }
                memory.clear();
            }
            let direction = two_loop(&grad, &memory);
            let slope = dot(&direction, &grad);
            let (direction, slope) = if slope > 0.0 {
                (direction, slope)
            } else {
                memory.clear();
                (grad.clone(), dot(&grad, &grad))
            };
            let mut step = if memory.is_empty() {
                opts.initial_step / norm(&direction).max(f64::MIN_POSITIVE)
            } else {
                1.0
            };
            for _ in 0..40 {
                let trial: Vec<f64> = x.iter().zip(&direction).map(|(a, d)| clamp(a + step * d)).collect();
                let moved: Vec<f64> = trial.iter().zip(&x).map(|(t, a)| t - a).collect();
                let predicted = dot(&grad, &moved).max(0.0);
                let (v, g) = f(&trial);
                if v.is_finite() && v > value + 1e-4 * predicted.min(step * slope) && v > value {
                    accepted = Some((trial, v, g));
                    break;
                }
                step *= 0.5;
            }
            if accepted.is_some() {
                break;
            }
        }
        let Some((trial, v, g)) = accepted else {
            stop = StopReason::LineSearchFailed;
            break;
        };
        let s: Vec<f64> = trial.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = grad.iter().zip(&g).map(|(a, b)| a - b).collect();
        let ys = dot(&y, &s);
        if ys > 1e-12 * norm(&y) * norm(&s) && ys > 0.0 {
            memory.push_back((s, y, 1.0 / ys));
            if memory.len() > opts.memory {
                memory.pop_front();
            }
        }
        x = trial;
        value = v;
        grad = g;
        log.push(AscentRecord {
            iteration,
            value,
            gradient_norm: norm(&grad),
        });
        if reached(value) {
            stop = StopReason::GoalReached;
            break;
        }
    }
    AscentResult { x, value, log, stop }
}

/// Two-loop recursion returning an ascent direction `H·∇f`.
fn two_loop(grad: &[f64], memory: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = grad.to_vec();
    let mut alphas = Vec::with_capacity(memory.len());
    for (s, y, rho) in memory.iter().rev() {
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    if let Some((s, y, _)) = memory.back() {
        let gamma = dot(s, y) / dot(y, y);
        for qi in q.iter_mut() {
            *qi *= gamma;
        }
    }
    for ((s, y, rho), a) in memory.iter().zip(alphas.into_iter().rev()) {
        let b = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maximizes_concave_quadratic() {
        let f = |x: &[f64]| {
            let v = -(x[0] - 1.0).powi(2) - 10.0 * (x[1] + 2.0).powi(2);
            (v, vec![-2.0 * (x[0] - 1.0), -20.0 * (x[1] + 2.0)])
        };
        let r = maximize(vec![0.0, 0.0], f, &AscentOptions::default());
        assert!((r.x[0] - 1.0).abs() < 1e-6 && (r.x[1] + 2.0).abs() < 1e-6);
        assert!(r.log.windows(2).all(|w| w[1].value >= w[0].value));
    }

    #[test]
    fn rosenbrock_converges() {
        let f = |x: &[f64]| {
            let (a, b) = (x[0], x[1]);
            let v = -((1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2));
            let ga = 2.0 * (1.0 - a) + 400.0 * a * (b - a * a);
            let gb = -200.0 * (b - a * a);
            (v, vec![ga, gb])
        };
        let opts = AscentOptions {
            max_iterations: 2000,
            ..Default::default()
        };
        let r = maximize(vec![-1.2, 1.0], f, &opts);
        assert!(r.value > -1e-10, "{:?}", r.stop);
    }

    #[test]
    fn respects_bounds_and_goal() {
        let f = |x: &[f64]| (x[0], vec![1.0]);
        let opts = AscentOptions {
            bound: Some(2.0),
            goal: Some(1.5),
            ..Default::default()
        };
        let r = maximize(vec![0.0], f, &opts);
        assert!(r.x[0] <= 2.0);
        assert_eq!(r.stop, StopReason::GoalReached);
    }
}
