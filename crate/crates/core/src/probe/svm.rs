//! Linear soft-margin SVM.
//!
//! Minimises `0.5 |w|^2 + C * sum_k max(0, 1 - y_k (w.x_k + b))` with an
//! unregularised bias. For a fixed bias the problem is solved by dual
//! coordinate descent with shrinking; an outer search moves the bias until
//! the dual equality constraint holds. After each bias step the primal
//! objective is evaluated with the optimal bias for the current weights,
//! and the best model so far is retained.

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use super::ProbeError;

/// Projected-gradient spread for the first fixed-bias solve; halved after
/// every bias step once the bias is bracketed, down to `kkt_tol`.
const INITIAL_EPS: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmConfig {
    pub c: f64,
    pub max_epochs: usize,
    /// Relative duality gap at which training stops.
    pub gap_tol: f64,
    /// Relative objective improvement over a bias step below which training
    /// stops, once the bias is bracketed and the solves are at `kkt_tol`.
    pub improvement_tol: f64,
    /// Projected-gradient spread at which a fixed-bias solve stops.
    pub kkt_tol: f64,
    pub seed: u64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            max_epochs: 1000,
            gap_tol: 1e-6,
            improvement_tol: 1e-6,
            kkt_tol: 1e-3,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub c: f64,
}

impl LinearModel {
    pub fn score(&self, x: &[f64]) -> f64 {
        dot(&self.weights, x) + self.bias
    }

    /// `true` means "same roles".
    pub fn predict(&self, x: &[f64]) -> bool {
        self.score(x) > 0.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrainReport {
    pub model: LinearModel,
    /// Coordinate updates divided by the number of rows, rounded up.
    pub epochs: usize,
    pub converged: bool,
    /// Primal objective of the retained model after each bias step.
    pub objective_trace: Vec<f64>,
    pub duality_gap: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Rows of a row-major feature matrix, restricted to a subset.
pub struct TrainingView<'a> {
    pub features: &'a [f64],
    pub dim: usize,
    pub labels: &'a [bool],
    pub rows: &'a [usize],
}

impl TrainingView<'_> {
    fn x(&self, k: usize) -> &[f64] {
        let r = self.rows[k];
        &self.features[r * self.dim..(r + 1) * self.dim]
    }

    fn y(&self, k: usize) -> f64 {
        if self.labels[self.rows[k]] {
            1.0
        } else {
            -1.0
        }
    }
}

struct Solver<'a> {
    view: &'a TrainingView<'a>,
    c: f64,
    alpha: Vec<f64>,
    w: Vec<f64>,
    y: Vec<f64>,
    sq_norm: Vec<f64>,
    order: Vec<usize>,
}

impl Solver<'_> {
    fn score(&self, k: usize) -> f64 {
        dot(&self.w, self.view.x(k))
    }

    fn h(&self) -> f64 {
        self.alpha.iter().zip(&self.y).map(|(a, y)| a * y).sum()
    }

    /// Dual coordinate descent for the bias-free problem at fixed `b`,
    /// with shrinking, until `eps` or `budget` coordinate visits. Returns
    /// the visits spent.
    fn solve_fixed_bias(&mut self, b: f64, eps: f64, budget: usize, rng: &mut Xoshiro256PlusPlus) -> usize {
        let n = self.alpha.len();
        let mut active = n;
        let mut pg_max_old = f64::INFINITY;
        let mut pg_min_old = f64::NEG_INFINITY;
        let mut visits = 0;
        while visits + active <= budget {
            visits += active;
            for i in 0..active {
                let j = rng.random_range(i..active);
                self.order.swap(i, j);
            }
            let mut pg_max = f64::NEG_INFINITY;
            let mut pg_min = f64::INFINITY;
            let mut s = 0;
            while s < active {
                let k = self.order[s];
                let g = self.y[k] * (self.score(k) + b) - 1.0;
                let a = self.alpha[k];
                let pg = if a <= 0.0 {
                    if g > pg_max_old {
                        active -= 1;
                        self.order.swap(s, active);
                        continue;
                    }
                    g.min(0.0)
                } else if a >= self.c {
                    if g < pg_min_old {
                        active -= 1;
                        self.order.swap(s, active);
                        continue;
                    }
                    g.max(0.0)
                } else {
                    g
                };
                pg_max = pg_max.max(pg);
                pg_min = pg_min.min(pg);
                if pg.abs() > 1e-14 {
                    let next = if self.sq_norm[k] > 0.0 {
                        (a - g / self.sq_norm[k]).clamp(0.0, self.c)
                    } else if g < 0.0 {
                        self.c
                    } else {
                        0.0
                    };
                    let delta = (next - a) * self.y[k];
                    if delta != 0.0 {
                        self.alpha[k] = next;
                        for (w, x) in self.w.iter_mut().zip(self.view.x(k)) {
                            *w += delta * x;
                        }
                    }
                }
                s += 1;
            }
            if pg_max - pg_min <= eps {
                if active == n {
                    break;
                }
                active = n;
                pg_max_old = f64::INFINITY;
                pg_min_old = f64::NEG_INFINITY;
                continue;
            }
            pg_max_old = if pg_max <= 0.0 { f64::INFINITY } else { pg_max };
            pg_min_old = if pg_min >= 0.0 { f64::NEG_INFINITY } else { pg_min };
        }
        visits
    }

    /// Primal objective at the optimal bias for the current weights, and
    /// that bias.
    fn evaluate(&self) -> (f64, f64) {
        let n = self.alpha.len();
        let f: Vec<f64> = (0..n).map(|k| self.y[k] - self.score(k)).collect();
        let n_pos = self.y.iter().filter(|&&y| y > 0.0).count();
        // hinge sum in b is piecewise linear with breakpoints at F_k and
        // zero slope between the n_pos-th and (n_pos+1)-th smallest
        let mut sorted = f.clone();
        sorted.sort_by(f64::total_cmp);
        let lo = sorted[n_pos - 1];
        let hi = if n_pos < n { sorted[n_pos] } else { lo };
        let b = 0.5 * (lo + hi);
        // y (s + b) = y (y - F + b) = 1 - y (F - b)
        let hinge: f64 = f.iter().zip(&self.y).map(|(fk, yk)| (yk * (fk - b)).max(0.0)).sum();
        (0.5 * dot(&self.w, &self.w) + self.c * hinge, b)
    }

    /// Dual objective of the fixed-bias problem.
    fn dual(&self, b: f64) -> f64 {
        self.alpha.iter().sum::<f64>() - b * self.h() - 0.5 * dot(&self.w, &self.w)
    }
}

pub fn train_view(view: &TrainingView<'_>, config: &SvmConfig) -> Result<TrainReport, ProbeError> {
    if !(config.c > 0.0 && config.c.is_finite()) {
        return Err(ProbeError::InvalidConfig(format!("C must be positive, got {}", config.c)));
    }
    if config.max_epochs == 0 {
        return Err(ProbeError::InvalidConfig("max_epochs must be at least 1".into()));
    }
    let n = view.rows.len();
    let y: Vec<f64> = (0..n).map(|k| view.y(k)).collect();
    let n_pos = y.iter().filter(|&&v| v > 0.0).count();
    if n_pos == 0 || n_pos == n {
        return Err(ProbeError::SingleClass);
    }
    let sq_norm = (0..n).map(|k| dot(view.x(k), view.x(k))).collect();
    let mut solver = Solver {
        view,
        c: config.c,
        alpha: vec![0.0; n],
        w: vec![0.0; view.dim],
        y,
        sq_norm,
        order: (0..n).collect(),
    };
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(config.seed);
    let mut best: Option<LinearModel> = None;
    let mut best_obj = f64::INFINITY;
    let mut trace = Vec::new();
    let mut gap = f64::INFINITY;
    let mut converged = false;
    let mut visits = 0;
    let budget = config.max_epochs.saturating_mul(n);

    // The optimal value at fixed bias is convex in b with derivative
    // -sum(alpha y), so b is found by bracketing that sum's root.
    let mut b = 0.0;
    let mut lo: Option<(f64, f64)> = None;
    let mut hi: Option<(f64, f64)> = None;
    let mut step = 1.0;
    let mut last_side = 0i8;
    let mut eps = config.kkt_tol.max(INITIAL_EPS);
    while visits < budget {
        let spent = solver.solve_fixed_bias(b, eps, budget - visits, &mut rng);
        if spent == 0 {
            break;
        }
        visits += spent;
        let h = solver.h();
        let (primal, bias) = solver.evaluate();
        let previous = best_obj;
        if primal < best_obj {
            best_obj = primal;
            best = Some(LinearModel {
                weights: solver.w.clone(),
                bias,
                c: config.c,
            });
        }
        trace.push(best_obj);

        // an inexact solve can report a sign that contradicts the bracket;
        // the contradicted end is then dropped and re-expanded
        let side = if h > 0.0 {
            1
        } else if h < 0.0 {
            -1
        } else {
            0
        };
        if side > 0 {
            if hi.is_some_and(|(u, _)| u <= b) {
                hi = None;
            }
            lo = Some((b, h));
            if side == last_side {
                hi = hi.map(|(u, hu)| (u, 0.5 * hu));
            }
        } else if side < 0 {
            if lo.is_some_and(|(l, _)| l >= b) {
                lo = None;
            }
            hi = Some((b, h));
            if side == last_side {
                lo = lo.map(|(l, hl)| (l, 0.5 * hl));
            }
        }
        last_side = side;
        let width = match (lo, hi) {
            (Some((l, _)), Some((u, _))) => u - l,
            _ => f64::INFINITY,
        };
        let scale = best_obj.abs().max(1.0);
        // convexity bounds the optimum below by the fixed-bias dual minus
        // the slope times the distance to the far end of the bracket
        let lower = if side == 0 { solver.dual(b) } else { solver.dual(b) - h.abs() * width };
        gap = ((best_obj - lower) / scale).max(0.0);
        let improvement = (previous - best_obj) / scale;
        // a bias step may legitimately not improve, so stalling only counts
        // once the remaining gain from moving the bias is also negligible
        let settled = eps <= config.kkt_tol && h.abs() * width <= config.improvement_tol * scale;
        if gap <= config.gap_tol || (settled && improvement < config.improvement_tol) || width <= 1e-12 * b.abs().max(1.0) {
            converged = true;
            break;
        }
        if width.is_finite() {
            eps = (eps * 0.5).max(config.kkt_tol);
        }
        b = match (lo, hi) {
            (Some((l, hl)), Some((u, hu))) => {
                // Illinois regula falsi
                let t = l + (u - l) * hl / (hl - hu);
                if t > l && t < u {
                    t
                } else {
                    0.5 * (l + u)
                }
            }
            (Some(_), None) => {
                step *= 2.0;
                b + step
            }
            (None, Some(_)) => {
                step *= 2.0;
                b - step
            }
            (None, None) => unreachable!("a zero slope stops training"),
        };
    }
    Ok(TrainReport {
        model: best.expect("at least one epoch runs"),
        epochs: visits.div_ceil(n),
        converged,
        objective_trace: trace,
        duality_gap: gap,
    })
}

/// Trains on a full row-major matrix (`labels[k]` is the class of row k).
pub fn train_linear_svm(
    features: &[f64],
    dim: usize,
    labels: &[bool],
    config: &SvmConfig,
) -> Result<TrainReport, ProbeError> {
    if dim == 0 || features.len() != labels.len() * dim {
        return Err(ProbeError::Shape(format!(
            "{} feature values for {} rows of width {dim}",
            features.len(),
            labels.len()
        )));
    }
    let rows: Vec<usize> = (0..labels.len()).collect();
    train_view(
        &TrainingView {
            features,
            dim,
            labels,
            rows: &rows,
        },
        config,
    )
}

/// Primal objective of `model` on a dataset.
pub fn primal_objective(model: &LinearModel, features: &[f64], dim: usize, labels: &[bool]) -> f64 {
    let hinge: f64 = features
        .chunks_exact(dim)
        .zip(labels)
        .map(|(x, &l)| {
            let y = if l { 1.0 } else { -1.0 };
            (1.0 - y * model.score(x)).max(0.0)
        })
        .sum();
    0.5 * dot(&model.weights, &model.weights) + model.c * hinge
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separable_blobs() {
        let pts = [
            (2.0, 2.0, true),
            (3.0, 2.5, true),
            (2.5, 3.5, true),
            (-2.0, -1.0, false),
            (-3.0, -2.0, false),
            (-1.5, -3.0, false),
        ];
        let x: Vec<f64> = pts.iter().flat_map(|p| [p.0, p.1]).collect();
        let y: Vec<bool> = pts.iter().map(|p| p.2).collect();
        let report = train_linear_svm(&x, 2, &y, &SvmConfig::default()).unwrap();
        assert!(report.converged);
        for (row, &label) in x.chunks(2).zip(&y) {
            assert_eq!(report.model.predict(row), label);
        }
    }

    #[test]
    fn trace_never_increases() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(3);
        let n = 200;
        let x: Vec<f64> = (0..n * 5).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        let y: Vec<bool> = x.chunks(5).map(|r| r[0] + 0.3 * r[1] + 0.2 * (rng.random::<f64>() - 0.5) > 0.0).collect();
        let report = train_linear_svm(&x, 5, &y, &SvmConfig { c: 10.0, ..Default::default() }).unwrap();
        assert!(report.objective_trace.windows(2).all(|w| w[1] <= w[0]));
        let obj = primal_objective(&report.model, &x, 5, &y);
        assert!((obj - report.objective_trace.last().unwrap()).abs() < 1e-6 * obj.max(1.0));
    }

    #[test]
    fn single_class_rejected() {
        let err = train_linear_svm(&[1.0, 2.0], 1, &[true, true], &SvmConfig::default()).unwrap_err();
        assert!(matches!(err, ProbeError::SingleClass));
        let cfg = SvmConfig { c: 0.0, ..Default::default() };
        assert!(train_linear_svm(&[1.0, 2.0], 1, &[true, false], &cfg).is_err());
    }
}
