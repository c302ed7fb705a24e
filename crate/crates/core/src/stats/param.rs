use super::dist::{normal_two_sided_p, student_t_two_sided_p};
use super::{check_finite, mean, sample_sd, Df, PRoute, SampleSize, StatError, StatResult, StatisticName};

/// One-sample t test of the mean against `mu0`, two-tailed.
pub fn one_sample_t(xs: &[f64], mu0: f64) -> Result<StatResult, StatError> {
    check_finite(xs)?;
    let n = xs.len();
    if n < 2 {
        return Err(StatError::TooFew {
            what: "one-sample t test",
            need: 2,
            got: n,
        });
    }
    let sd = sample_sd(xs);
    if sd == 0.0 {
        return Err(StatError::Degenerate("sample has zero variance".into()));
    }
    let df = (n - 1) as f64;
    let t = (mean(xs) - mu0) / (sd / (n as f64).sqrt());
    Ok(StatResult::new(
        StatisticName::T,
        t,
        student_t_two_sided_p(t, df),
        Some(Df::One(df)),
        SampleSize::One(n),
        PRoute::Asymptotic,
    ))
}

/// Pooled two-proportion z test, two-tailed. A pooled proportion of 0 or 1
/// yields z = 0, p = 1 with the degenerate flag set.
pub fn two_proportion_z(k1: u64, n1: u64, k2: u64, n2: u64) -> Result<StatResult, StatError> {
    if n1 == 0 || n2 == 0 {
        return Err(StatError::TooFew {
            what: "two-proportion z test (each group)",
            need: 1,
            got: 0,
        });
    }
    if k1 > n1 || k2 > n2 {
        return Err(StatError::InvalidArgument(format!(
            "successes exceed trials ({k1}/{n1}, {k2}/{n2})"
        )));
    }
    let (p1, p2) = (k1 as f64 / n1 as f64, k2 as f64 / n2 as f64);
    let pooled = (k1 + k2) as f64 / (n1 + n2) as f64;
    let size = SampleSize::Two(n1 as usize, n2 as usize);
    if pooled == 0.0 || pooled == 1.0 {
        let mut r = StatResult::new(StatisticName::PropZ, 0.0, 1.0, None, size, PRoute::Asymptotic);
        r.degenerate = true;
        return Ok(r);
    }
    let se = (pooled * (1.0 - pooled) * (1.0 / n1 as f64 + 1.0 / n2 as f64)).sqrt();
    let z = (p1 - p2) / se;
    Ok(StatResult::new(
        StatisticName::PropZ,
        z,
        normal_two_sided_p(z),
        None,
        size,
        PRoute::Asymptotic,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn t_examples() {
        let r = one_sample_t(&[0.4, 0.6], 0.5).unwrap();
        assert!(r.statistic.abs() < 1e-12);
        assert!((r.p_raw - 1.0).abs() < 1e-12);
        let r = one_sample_t(&[1.0, 2.0, 3.0, 4.0, 5.0], 0.0).unwrap();
        assert!((r.statistic - 18f64.sqrt()).abs() < 1e-12);
        assert!((r.p_raw - 0.013235599564943767).abs() < 1e-9);
        assert_eq!(r.df, Some(Df::One(4.0)));
        assert!(matches!(one_sample_t(&[2.0, 2.0, 2.0], 0.0), Err(StatError::Degenerate(_))));
        assert!(one_sample_t(&[1.0], 0.0).is_err());
    }

    #[test]
    fn proportion_examples() {
        let r = two_proportion_z(5, 10, 5, 10).unwrap();
        assert_eq!((r.statistic, r.p_raw), (0.0, 1.0));
        let r = two_proportion_z(9, 10, 1, 10).unwrap();
        assert!((r.statistic - 0.8 / 0.05f64.sqrt()).abs() < 1e-12);
        assert!((r.statistic - 3.578).abs() < 1e-3);
        assert!((r.p_raw - 0.000346).abs() < 1e-5);
        let r = two_proportion_z(0, 10, 0, 10).unwrap();
        assert!(r.degenerate);
        assert_eq!((r.statistic, r.p_raw), (0.0, 1.0));
        assert!(two_proportion_z(11, 10, 0, 10).is_err());
        assert!(two_proportion_z(0, 0, 0, 10).is_err());
    }
}
