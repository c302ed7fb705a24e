//! Friedman, Wilcoxon signed-rank and Mann-Whitney rank-sum tests.
//!
//! Ranks are handled internally as doubled integers (an average rank of
//! 2.5 becomes 5) so exact null distributions can be counted without
//! floating-point error.

use std::collections::BTreeMap;

use super::dist::{chi2_sf, normal_two_sided_p};
use super::{check_finite, Df, PMethod, PRoute, SampleSize, StatError, StatResult, StatisticName};

/// Largest number of non-zero differences for which `Auto` uses the exact
/// signed-rank distribution.
pub const EXACT_WILCOXON_MAX_N: usize = 25;
/// Largest combined sample size for which `Auto` uses the exact rank-sum
/// distribution.
pub const EXACT_RANKSUM_MAX_N: usize = 30;
/// `Auto` uses the exact Friedman distribution when n and k are both
/// within these limits.
pub const EXACT_FRIEDMAN_MAX_N: usize = 10;
pub const EXACT_FRIEDMAN_MAX_K: usize = 4;

// Hard limits for an explicit `PMethod::Exact` request.
const EXACT_LIMIT_SIGNED: usize = 100;
const EXACT_LIMIT_RANKSUM: usize = 60;
const EXACT_LIMIT_FRIEDMAN_CELLS: usize = 60;

/// Doubled average ranks (1-based) and the sizes of tie groups larger
/// than one.
fn doubled_ranks(values: &[f64]) -> (Vec<u64>, Vec<u64>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0u64; values.len()];
    let mut ties = Vec::new();
    let mut start = 0;
    while start < order.len() {
        let mut end = start;
        while end + 1 < order.len() && values[order[end + 1]] == values[order[start]] {
            end += 1;
        }
        let doubled = (start + end + 2) as u64;
        for &idx in &order[start..=end] {
            ranks[idx] = doubled;
        }
        if end > start {
            ties.push((end - start + 1) as u64);
        }
        start = end + 1;
    }
    (ranks, ties)
}

/// Average ranks (1-based), ties sharing the mean of their positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    doubled_ranks(values)
        .0
        .into_iter()
        .map(|r| r as f64 / 2.0)
        .collect()
}

fn tie_sum(ties: &[u64]) -> f64 {
    ties.iter().map(|&t| (t * t * t - t) as f64).sum()
}

/// z with continuity correction toward zero.
fn corrected_z(deviation: f64, sd: f64) -> f64 {
    if sd <= 0.0 {
        return 0.0;
    }
    deviation.signum() * (deviation.abs() - 0.5).max(0.0) / sd
}

fn ratio(hits: u128, total: u128) -> f64 {
    (hits as f64 / total as f64).min(1.0)
}

pub fn wilcoxon_signed_rank(diffs: &[f64]) -> Result<StatResult, StatError> {
    wilcoxon_signed_rank_with(diffs, PMethod::Auto)
}

/// Two-tailed signed-rank test. Zero differences are dropped before
/// ranking. `raw_statistic` is W+, the sum of ranks of positive
/// differences, and z > 0 when positive differences dominate.
pub fn wilcoxon_signed_rank_with(diffs: &[f64], method: PMethod) -> Result<StatResult, StatError> {
    check_finite(diffs)?;
    let nonzero: Vec<f64> = diffs.iter().copied().filter(|&d| d != 0.0).collect();
    let n = nonzero.len();
    if n == 0 {
        return Err(StatError::AllZero);
    }
    let abs: Vec<f64> = nonzero.iter().map(|d| d.abs()).collect();
    let (ranks, ties) = doubled_ranks(&abs);
    let w2: u64 = ranks
        .iter()
        .zip(&nonzero)
        .filter(|(_, &d)| d > 0.0)
        .map(|(&r, _)| r)
        .sum();
    let total2: u64 = ranks.iter().sum();
    let w = w2 as f64 / 2.0;

    let nf = n as f64;
    let mu = nf * (nf + 1.0) / 4.0;
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_sum(&ties) / 48.0;
    let z = corrected_z(w - mu, var.sqrt());

    let route = choose(method, n <= EXACT_WILCOXON_MAX_N, n <= EXACT_LIMIT_SIGNED, "signed-rank")?;
    let p = match route {
        PRoute::Asymptotic => normal_two_sided_p(z),
        PRoute::Exact => {
            // counts[s] = number of sign assignments with doubled W+ = s
            let mut counts = vec![0u128; total2 as usize + 1];
            counts[0] = 1;
            let mut reach = 0usize;
            for &r in &ranks {
                let r = r as usize;
                for s in (0..=reach).rev() {
                    let c = counts[s];
                    if c > 0 {
                        counts[s + r] += c;
                    }
                }
                reach += r;
            }
            let observed = (2 * w2 as i128 - total2 as i128).abs();
            let hits: u128 = counts
                .iter()
                .enumerate()
                .filter(|(s, _)| (2 * *s as i128 - total2 as i128).abs() >= observed)
                .map(|(_, &c)| c)
                .sum();
            ratio(hits, 1u128 << n)
        }
    };
    let mut result = StatResult::new(
        StatisticName::WilcoxonZ,
        z,
        p,
        None,
        SampleSize::One(n),
        route,
    );
    result.raw_statistic = Some(w);
    Ok(result)
}

fn choose(method: PMethod, auto_exact: bool, feasible: bool, what: &str) -> Result<PRoute, StatError> {
    match method {
        PMethod::Asymptotic => Ok(PRoute::Asymptotic),
        PMethod::Auto if auto_exact => Ok(PRoute::Exact),
        PMethod::Auto => Ok(PRoute::Asymptotic),
        PMethod::Exact if feasible => Ok(PRoute::Exact),
        PMethod::Exact => Err(StatError::InvalidArgument(format!(
            "sample too large for the exact {what} distribution"
        ))),
    }
}

pub fn rank_sum(a: &[f64], b: &[f64]) -> Result<StatResult, StatError> {
    rank_sum_with(a, b, PMethod::Auto)
}

/// Two-tailed Mann-Whitney test. `raw_statistic` is U for `a`; z > 0 when
/// values in `a` tend to exceed values in `b`.
pub fn rank_sum_with(a: &[f64], b: &[f64], method: PMethod) -> Result<StatResult, StatError> {
    check_finite(a)?;
    check_finite(b)?;
    if a.is_empty() || b.is_empty() {
        return Err(StatError::TooFew {
            what: "rank-sum test (each sample)",
            need: 1,
            got: 0,
        });
    }
    let (n1, n2) = (a.len(), b.len());
    let big_n = n1 + n2;
    let combined: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, ties) = doubled_ranks(&combined);
    let s2: u64 = ranks[..n1].iter().sum();
    let (n1f, n2f, nf) = (n1 as f64, n2 as f64, big_n as f64);
    let u = s2 as f64 / 2.0 - n1f * (n1f + 1.0) / 2.0;
    let mu = n1f * n2f / 2.0;
    let var = n1f * n2f / 12.0 * ((nf + 1.0) - tie_sum(&ties) / (nf * (nf - 1.0)));
    let degenerate = var <= 0.0;
    let z = corrected_z(u - mu, var.max(0.0).sqrt());

    let route = choose(method, big_n <= EXACT_RANKSUM_MAX_N, big_n <= EXACT_LIMIT_RANKSUM, "rank-sum")?;
    let p = if degenerate {
        1.0
    } else {
        match route {
            PRoute::Asymptotic => normal_two_sided_p(z),
            PRoute::Exact => {
                let total2: u64 = ranks.iter().sum();
                // dp[j][s]: subsets of size j with doubled rank sum s
                let mut dp = vec![vec![0u128; total2 as usize + 1]; n1 + 1];
                dp[0][0] = 1;
                for &r in &ranks {
                    let r = r as usize;
                    for j in (1..=n1).rev() {
                        let (lo, hi) = dp.split_at_mut(j);
                        let (prev, cur) = (&lo[j - 1], &mut hi[0]);
                        for s in (r..cur.len()).rev() {
                            cur[s] += prev[s - r];
                        }
                    }
                }
                let centre = (n1 * (big_n + 1)) as i128;
                let observed = (s2 as i128 - centre).abs();
                let mut hits = 0u128;
                let mut total = 0u128;
                for (s, &c) in dp[n1].iter().enumerate() {
                    total += c;
                    if (s as i128 - centre).abs() >= observed {
                        hits += c;
                    }
                }
                ratio(hits, total)
            }
        }
    };
    let mut result = StatResult::new(
        StatisticName::RanksumZ,
        z,
        p,
        None,
        SampleSize::Two(n1, n2),
        route,
    );
    result.raw_statistic = Some(u);
    result.degenerate = degenerate;
    Ok(result)
}

pub fn friedman_test(data: &[Vec<f64>]) -> Result<StatResult, StatError> {
    friedman_test_with(data, PMethod::Auto)
}

/// Friedman test over an n x k matrix (rows are subjects, columns are
/// conditions), with the usual correction for within-row ties.
pub fn friedman_test_with(data: &[Vec<f64>], method: PMethod) -> Result<StatResult, StatError> {
    let n = data.len();
    if n < 2 {
        return Err(StatError::TooFew {
            what: "Friedman test (rows)",
            need: 2,
            got: n,
        });
    }
    let k = data[0].len();
    if k < 2 {
        return Err(StatError::TooFew {
            what: "Friedman test (columns)",
            need: 2,
            got: k,
        });
    }
    let mut row_ranks = Vec::with_capacity(n);
    let mut ties_total = 0.0;
    let mut col2 = vec![0u64; k];
    for row in data {
        if row.len() != k {
            return Err(StatError::Dimension(format!(
                "Friedman rows must all have {k} columns"
            )));
        }
        check_finite(row)?;
        let (ranks, ties) = doubled_ranks(row);
        ties_total += tie_sum(&ties);
        for (c, r) in col2.iter_mut().zip(&ranks) {
            *c += r;
        }
        row_ranks.push(ranks);
    }
    let (nf, kf) = (n as f64, k as f64);
    let sum_sq: f64 = col2.iter().map(|&r| (r as f64 / 2.0).powi(2)).sum();
    let raw = 12.0 / (nf * kf * (kf + 1.0)) * sum_sq - 3.0 * nf * (kf + 1.0);
    let denom = 1.0 - ties_total / (nf * (kf * kf * kf - kf));
    let degenerate = denom <= 1e-12;
    let chi2 = if degenerate { 0.0 } else { (raw / denom).max(0.0) };

    let auto_exact = n <= EXACT_FRIEDMAN_MAX_N && k <= EXACT_FRIEDMAN_MAX_K;
    let feasible = k <= 5 && n * k <= EXACT_LIMIT_FRIEDMAN_CELLS;
    let route = choose(method, auto_exact, feasible, "Friedman")?;
    let p = if degenerate {
        1.0
    } else {
        match route {
            PRoute::Asymptotic => chi2_sf(chi2, kf - 1.0),
            PRoute::Exact => friedman_exact_p(&row_ranks, &col2),
        }
    };
    let mut result = StatResult::new(
        StatisticName::FriedmanChi2,
        chi2,
        p,
        Some(Df::One(kf - 1.0)),
        SampleSize::Grid { rows: n, cols: k },
        route,
    );
    result.degenerate = degenerate;
    Ok(result)
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, k - 1);
            out.push(q);
        }
    }
    out
}

/// P(sum of squared column rank sums >= observed) when each row's ranks
/// are independently and uniformly permuted. Column sums are exchangeable,
/// so states are kept sorted.
fn friedman_exact_p(row_ranks: &[Vec<u64>], col2: &[u64]) -> f64 {
    let k = col2.len();
    let perms = permutations(k);
    let mut states: BTreeMap<Vec<u64>, u128> = BTreeMap::new();
    states.insert(vec![0; k], 1);
    for ranks in row_ranks {
        let mut arrangements: BTreeMap<Vec<u64>, u128> = BTreeMap::new();
        for p in &perms {
            let v: Vec<u64> = p.iter().map(|&i| ranks[i]).collect();
            *arrangements.entry(v).or_default() += 1;
        }
        let mut next: BTreeMap<Vec<u64>, u128> = BTreeMap::new();
        for (state, &count) in &states {
            for (arr, &mult) in &arrangements {
                let mut s: Vec<u64> = state.iter().zip(arr).map(|(a, b)| a + b).collect();
                s.sort_unstable();
                *next.entry(s).or_default() += count * mult;
            }
        }
        states = next;
    }
    let observed: u64 = col2.iter().map(|r| r * r).sum();
    let mut hits = 0u128;
    let mut total = 0u128;
    for (state, &count) in &states {
        total += count;
        if state.iter().map(|r| r * r).sum::<u64>() >= observed {
            hits += count;
        }
    }
    ratio(hits, total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranks_average_ties() {
        assert_eq!(average_ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn wilcoxon_all_positive_five() {
        let r = wilcoxon_signed_rank(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!(r.raw_statistic, Some(15.0));
        assert!((r.p_raw - 0.0625).abs() < 1e-12);
        assert_eq!(r.method, PRoute::Exact);
        let approx = wilcoxon_signed_rank_with(&[1.0, 2.0, 3.0, 4.0, 5.0], PMethod::Asymptotic).unwrap();
        assert!((approx.p_raw - 0.0625).abs() < 0.03);
        assert!(approx.statistic > 0.0);
    }

    #[test]
    fn wilcoxon_symmetric_and_zero() {
        let r = wilcoxon_signed_rank(&[1.0, -1.0, 2.0, -2.0, 0.0]).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_raw, 1.0);
        assert_eq!(r.n, SampleSize::One(4));
        assert_eq!(wilcoxon_signed_rank(&[0.0, 0.0]).unwrap_err(), StatError::AllZero);
    }

    #[test]
    fn rank_sum_separated() {
        let r = rank_sum(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap();
        assert_eq!(r.raw_statistic, Some(0.0));
        assert!((r.p_raw - 0.1).abs() < 1e-12);
        assert!(r.statistic < 0.0);
        let approx = rank_sum_with(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0], PMethod::Asymptotic).unwrap();
        assert!((approx.p_raw - 0.1).abs() < 0.05);
        let same = rank_sum(&[1.0, 2.0, 2.0], &[2.0, 1.0, 2.0]).unwrap();
        assert_eq!(same.statistic, 0.0);
        assert_eq!(same.p_raw, 1.0);
        assert!(rank_sum(&[], &[1.0]).is_err());
    }

    #[test]
    fn rank_sum_all_tied_is_degenerate() {
        let r = rank_sum(&[1.0, 1.0], &[1.0]).unwrap();
        assert!(r.degenerate);
        assert_eq!((r.statistic, r.p_raw), (0.0, 1.0));
    }

    #[test]
    fn friedman_examples() {
        let ordered = vec![vec![1.0, 2.0, 3.0]; 3];
        let r = friedman_test_with(&ordered, PMethod::Asymptotic).unwrap();
        assert!((r.statistic - 6.0).abs() < 1e-12);
        assert!((r.p_raw - (-3.0f64).exp()).abs() < 1e-12);
        // exact: 6 of the 216 arrangements put all three rows in the same order
        let exact = friedman_test(&ordered).unwrap();
        assert!((exact.p_raw - 6.0 / 216.0).abs() < 1e-12);

        let tied = vec![vec![4.0, 4.0, 4.0]; 5];
        let r = friedman_test(&tied).unwrap();
        assert_eq!((r.statistic, r.p_raw), (0.0, 1.0));
        assert!(r.degenerate);
        assert!(friedman_test(&[vec![1.0, 2.0]]).is_err());
        assert!(friedman_test(&[vec![1.0], vec![2.0]]).is_err());
    }

    #[test]
    fn permutation_count() {
        assert_eq!(permutations(4).len(), 24);
    }
}
