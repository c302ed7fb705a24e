//! Ordinary least squares through a Householder QR decomposition.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::dist::{f_sf, normal_two_sided_p, student_t_two_sided_p};
use super::{check_finite, Df, PRoute, SampleSize, StatError, StatResult, StatisticName};

/// |R_jj| below this fraction of the largest diagonal marks column j as a
/// linear combination of earlier columns.
const RANK_TOL: f64 = 1e-10;

#[derive(Clone, Debug, Serialize)]
pub struct OlsFit {
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub t_values: Vec<f64>,
    /// Two-tailed p values of the t statistics on `residual_df`.
    pub p_values: Vec<f64>,
    pub n: usize,
    pub residual_df: usize,
    pub sigma2: f64,
    pub r_squared: f64,
    pub adj_r_squared: f64,
    /// Overall F against the intercept-only model; `None` when the design
    /// has a single column.
    pub f_test: Option<StatResult>,
    #[serde(skip)]
    pub residuals: Vec<f64>,
    #[serde(skip)]
    covariance: DMatrix<f64>,
}

impl OlsFit {
    pub fn covariance(&self, i: usize, j: usize) -> f64 {
        self.covariance[(i, j)]
    }

    /// Wald z for the linear combination `c . beta`, with a normal p value.
    pub fn contrast(&self, c: &[f64]) -> Result<StatResult, StatError> {
        let p = self.coefficients.len();
        if c.len() != p {
            return Err(StatError::Dimension(format!(
                "contrast has {} weights for {p} coefficients",
                c.len()
            )));
        }
        let cv = DVector::from_column_slice(c);
        let estimate = cv.dot(&DVector::from_column_slice(&self.coefficients));
        let var = (cv.transpose() * &self.covariance * &cv)[(0, 0)];
        let (z, degenerate) = if var > 0.0 {
            (estimate / var.sqrt(), false)
        } else {
            (0.0, true)
        };
        let mut r = StatResult::new(
            StatisticName::WaldZ,
            z,
            if degenerate { 1.0 } else { normal_two_sided_p(z) },
            None,
            SampleSize::One(self.n),
            PRoute::Asymptotic,
        );
        r.raw_statistic = Some(estimate);
        r.degenerate = degenerate;
        Ok(r)
    }
}

pub fn ols_fit(x: &[Vec<f64>], y: &[f64]) -> Result<OlsFit, StatError> {
    let p = x.first().map_or(0, Vec::len);
    let names: Vec<String> = (0..p).map(|j| format!("x{j}")).collect();
    ols_fit_named(x, y, &names)
}

/// Fits `y = X beta + e`. `x` holds rows of the design matrix, which is
/// expected to contain an intercept column for R-squared and F to have
/// their usual meaning.
pub fn ols_fit_named(x: &[Vec<f64>], y: &[f64], names: &[String]) -> Result<OlsFit, StatError> {
    let n = x.len();
    let p = names.len();
    if y.len() != n {
        return Err(StatError::Dimension(format!("{n} design rows but {} responses", y.len())));
    }
    if p == 0 || x.iter().any(|row| row.len() != p) {
        return Err(StatError::Dimension(format!("every design row must have {p} columns")));
    }
    if n <= p {
        return Err(StatError::TooFew {
            what: "least squares (rows beyond columns)",
            need: p + 1,
            got: n,
        });
    }
    check_finite(y)?;
    for row in x {
        check_finite(row)?;
    }
    let xm = DMatrix::from_fn(n, p, |i, j| x[i][j]);
    let yv = DVector::from_column_slice(y);
    let qr = xm.clone().qr();
    let r = qr.r();
    let max_diag = (0..p).map(|j| r[(j, j)].abs()).fold(0.0, f64::max);
    let dependent: Vec<String> = (0..p)
        .filter(|&j| r[(j, j)].abs() <= RANK_TOL * max_diag.max(f64::MIN_POSITIVE))
        .map(|j| names[j].clone())
        .collect();
    if !dependent.is_empty() {
        return Err(StatError::RankDeficient { columns: dependent });
    }
    let qty = qr.q().transpose() * &yv;
    let beta = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| StatError::RankDeficient { columns: names.to_vec() })?;
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(p, p))
        .ok_or_else(|| StatError::RankDeficient { columns: names.to_vec() })?;
    let xtx_inv = &r_inv * r_inv.transpose();

    let fitted = &xm * &beta;
    let residuals: Vec<f64> = (0..n).map(|i| y[i] - fitted[i]).collect();
    let sse: f64 = residuals.iter().map(|e| e * e).sum();
    let y_mean = y.iter().sum::<f64>() / n as f64;
    let sst: f64 = y.iter().map(|v| (v - y_mean).powi(2)).sum();
    if sst == 0.0 {
        return Err(StatError::Degenerate("response is constant".into()));
    }
    let df_resid = n - p;
    let sigma2 = sse / df_resid as f64;
    let covariance = xtx_inv * sigma2;

    let coefficients: Vec<f64> = beta.iter().copied().collect();
    let std_errors: Vec<f64> = (0..p).map(|j| covariance[(j, j)].max(0.0).sqrt()).collect();
    let t_values: Vec<f64> = coefficients
        .iter()
        .zip(&std_errors)
        .map(|(b, se)| if *se > 0.0 { b / se } else { b.signum() * f64::INFINITY })
        .collect();
    let p_values = t_values
        .iter()
        .map(|&t| if t.is_nan() { 1.0 } else { student_t_two_sided_p(t, df_resid as f64) })
        .collect();

    let r_squared = 1.0 - sse / sst;
    let adj_r_squared = 1.0 - (1.0 - r_squared) * (n as f64 - 1.0) / df_resid as f64;
    let f_test = (p > 1).then(|| {
        let d1 = (p - 1) as f64;
        let d2 = df_resid as f64;
        let f = if sse > 0.0 { ((sst - sse) / d1) / (sse / d2) } else { f64::INFINITY };
        StatResult::new(
            StatisticName::F,
            f,
            f_sf(f, d1, d2),
            Some(Df::Two(d1, d2)),
            SampleSize::One(n),
            PRoute::Asymptotic,
        )
    });

    Ok(OlsFit {
        names: names.to_vec(),
        coefficients,
        std_errors,
        t_values,
        p_values,
        n,
        residual_df: df_resid,
        sigma2,
        r_squared,
        adj_r_squared,
        f_test,
        residuals,
        covariance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let x: Vec<Vec<f64>> = (0..6).map(|i| vec![1.0, i as f64]).collect();
        let y: Vec<f64> = (0..6).map(|i| 2.0 * i as f64).collect();
        let fit = ols_fit(&x, &y).unwrap();
        assert!(fit.coefficients[0].abs() < 1e-12);
        assert!((fit.coefficients[1] - 2.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert!(fit.residuals.iter().all(|e| e.abs() < 1e-12));
    }

    #[test]
    fn dummy_equals_group_difference() {
        let groups = [(0.0, 1.0), (0.0, 2.0), (0.0, 3.0), (1.0, 7.0), (1.0, 9.0)];
        let x: Vec<Vec<f64>> = groups.iter().map(|&(d, _)| vec![1.0, d]).collect();
        let y: Vec<f64> = groups.iter().map(|&(_, v)| v).collect();
        let fit = ols_fit(&x, &y).unwrap();
        assert!((fit.coefficients[0] - 2.0).abs() < 1e-12);
        assert!((fit.coefficients[1] - 6.0).abs() < 1e-12);
        // with one dummy, F equals t squared
        let f = fit.f_test.as_ref().unwrap().statistic;
        assert!((f - fit.t_values[1].powi(2)).abs() < 1e-9);
        let c = fit.contrast(&[0.0, 1.0]).unwrap();
        assert!((c.statistic - fit.t_values[1]).abs() < 1e-12);
    }

    #[test]
    fn rank_deficiency_names_column() {
        let x: Vec<Vec<f64>> = (0..5)
            .map(|i| {
                let a = (i % 2) as f64;
                let b = (i / 2) as f64;
                vec![1.0, a, b, a + b]
            })
            .collect();
        let names: Vec<String> = ["intercept", "a", "b", "a_plus_b"].map(String::from).to_vec();
        let err = ols_fit_named(&x, &[1.0, 2.0, 3.0, 4.0, 6.0], &names).unwrap_err();
        assert_eq!(err, StatError::RankDeficient { columns: vec!["a_plus_b".into()] });
    }
}
