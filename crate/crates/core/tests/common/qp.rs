//! Exact soft-margin SVM solution for tiny problems by active-set
//! enumeration of the dual: each multiplier is at 0, at C, or free, and
//! the free ones satisfy the margin equalities.

#![allow(dead_code, clippy::needless_range_loop)]

pub struct QpSolution {
    pub w: Vec<f64>,
    pub b: f64,
    pub alpha: Vec<f64>,
    pub objective: f64,
}

fn solve_linear(mut a: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let n = rhs.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, pivot);
        rhs.swap(col, pivot);
        for row in 0..n {
            if row != col {
                let factor = a[row][col] / a[col][col];
                for k in col..n {
                    a[row][k] -= factor * a[col][k];
                }
                rhs[row] -= factor * rhs[col];
            }
        }
    }
    Some((0..n).map(|i| rhs[i] / a[i][i]).collect())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Requires at least one free multiplier at the optimum (true for the
/// problems used in tests); panics otherwise.
pub fn solve(points: &[Vec<f64>], labels: &[bool], c: f64) -> QpSolution {
    let n = points.len();
    let y: Vec<f64> = labels.iter().map(|&l| if l { 1.0 } else { -1.0 }).collect();
    let tol = 1e-9;
    let mut best: Option<QpSolution> = None;
    for code in 0..3usize.pow(n as u32) {
        // state: 0 = at zero, 1 = at C, 2 = free
        let state: Vec<usize> = (0..n).map(|i| code / 3usize.pow(i as u32) % 3).collect();
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == 2).collect();
        if free.is_empty() {
            continue;
        }
        let upper: Vec<usize> = (0..n).filter(|&i| state[i] == 1).collect();
        let m = free.len();
        // unknowns: alpha_free (m) then b
        let mut a = vec![vec![0.0; m + 1]; m + 1];
        let mut rhs = vec![0.0; m + 1];
        for (r, &i) in free.iter().enumerate() {
            for (col, &j) in free.iter().enumerate() {
                a[r][col] = y[i] * y[j] * dot(&points[i], &points[j]);
            }
            a[r][m] = y[i];
            rhs[r] = 1.0 - upper.iter().map(|&j| c * y[i] * y[j] * dot(&points[i], &points[j])).sum::<f64>();
        }
        for (col, &j) in free.iter().enumerate() {
            a[m][col] = y[j];
        }
        rhs[m] = -upper.iter().map(|&j| c * y[j]).sum::<f64>();
        let Some(sol) = solve_linear(a, rhs) else { continue };
        let mut alpha = vec![0.0; n];
        for &j in &upper {
            alpha[j] = c;
        }
        for (col, &j) in free.iter().enumerate() {
            alpha[j] = sol[col];
        }
        if alpha.iter().any(|&v| v < -tol || v > c + tol) {
            continue;
        }
        let b = sol[m];
        let dim = points[0].len();
        let w: Vec<f64> = (0..dim)
            .map(|d| (0..n).map(|i| alpha[i] * y[i] * points[i][d]).sum())
            .collect();
        let kkt = (0..n).all(|i| {
            let margin = y[i] * (dot(&w, &points[i]) + b);
            match state[i] {
                0 => margin >= 1.0 - 1e-7,
                1 => margin <= 1.0 + 1e-7,
                _ => true,
            }
        });
        if !kkt {
            continue;
        }
        let hinge: f64 = (0..n).map(|i| (1.0 - y[i] * (dot(&w, &points[i]) + b)).max(0.0)).sum();
        let objective = 0.5 * dot(&w, &w) + c * hinge;
        if best.as_ref().is_none_or(|s| objective < s.objective) {
            best = Some(QpSolution { w, b, alpha, objective });
        }
    }
    best.expect("problem has a KKT point with a free multiplier")
}

/// Four overlapping points at C = 1: (0, 0) and (2.2, 0.5) negative,
/// (2, 0) and (2.5, 1.5) positive. Two multipliers end at C.
pub fn four_point_problem() -> (Vec<Vec<f64>>, Vec<bool>, f64) {
    (
        vec![vec![0.0, 0.0], vec![2.2, 0.5], vec![2.0, 0.0], vec![2.5, 1.5]],
        vec![false, false, true, true],
        1.0,
    )
}
