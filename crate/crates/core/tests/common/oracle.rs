//! Brute-force permutation oracles for the rank tests. Written
//! independently of the engine: quadratic ranking, floating-point
//! statistics, full enumeration where affordable.

#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

const SLACK: f64 = 1e-9;

pub fn ranks(xs: &[f64]) -> Vec<f64> {
    xs.iter()
        .map(|&x| {
            let less = xs.iter().filter(|&&y| y < x).count() as f64;
            let equal = xs.iter().filter(|&&y| y == x).count() as f64;
            less + (equal + 1.0) / 2.0
        })
        .collect()
}

/// Exact two-sided signed-rank p over all 2^n sign flips.
pub fn wilcoxon_exact(diffs: &[f64]) -> f64 {
    let d: Vec<f64> = diffs.iter().copied().filter(|&x| x != 0.0).collect();
    let n = d.len();
    let abs: Vec<f64> = d.iter().map(|x| x.abs()).collect();
    let r = ranks(&abs);
    let total: f64 = r.iter().sum();
    let centre = total / 2.0;
    let observed: f64 = r.iter().zip(&d).filter(|(_, &x)| x > 0.0).map(|(r, _)| r).sum();
    let dev = (observed - centre).abs();
    let mut hits = 0u64;
    for mask in 0u64..(1 << n) {
        let w: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| r[i]).sum();
        if (w - centre).abs() >= dev - SLACK {
            hits += 1;
        }
    }
    hits as f64 / (1u64 << n) as f64
}

fn combinations(n: usize, k: usize, start: usize, current: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
    if current.len() == k {
        f(current);
        return;
    }
    for i in start..n {
        if n - i < k - current.len() {
            break;
        }
        current.push(i);
        combinations(n, k, i + 1, current, f);
        current.pop();
    }
}

/// Exact two-sided rank-sum p over all C(n1 + n2, n1) group assignments.
pub fn rank_sum_exact(a: &[f64], b: &[f64]) -> f64 {
    let all: Vec<f64> = a.iter().chain(b).copied().collect();
    let r = ranks(&all);
    let n1 = a.len();
    let centre = n1 as f64 * (all.len() as f64 + 1.0) / 2.0;
    let observed: f64 = r[..n1].iter().sum();
    let dev = (observed - centre).abs();
    let (mut hits, mut total) = (0u64, 0u64);
    combinations(all.len(), n1, 0, &mut Vec::new(), &mut |idx| {
        let s: f64 = idx.iter().map(|&i| r[i]).sum();
        total += 1;
        if (s - centre).abs() >= dev - SLACK {
            hits += 1;
        }
    });
    hits as f64 / total as f64
}

fn friedman_ss(rows: &[Vec<f64>]) -> f64 {
    let k = rows[0].len();
    (0..k)
        .map(|j| rows.iter().map(|r| r[j]).sum::<f64>().powi(2))
        .sum()
}

fn all_perms(v: &[f64]) -> Vec<Vec<f64>> {
    if v.len() <= 1 {
        return vec![v.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..v.len() {
        let mut rest = v.to_vec();
        let head = rest.remove(i);
        for mut tail in all_perms(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

/// Permutation p of the Friedman statistic, permuting ranks within rows.
/// The first row is held fixed (column sums are exchangeable). Enumerates
/// every arrangement when there are at most `enumerate_limit`, otherwise
/// samples `mc_draws` seeded arrangements.
pub fn friedman_permutation(data: &[Vec<f64>], enumerate_limit: u64, mc_draws: usize, seed: u64) -> f64 {
    let rows: Vec<Vec<f64>> = data.iter().map(|r| ranks(r)).collect();
    let observed = friedman_ss(&rows);
    let k = rows[0].len();
    let fact: u64 = (1..=k as u64).product();
    let arrangements = fact.checked_pow(rows.len() as u32 - 1);
    if arrangements.is_some_and(|a| a <= enumerate_limit) {
        let perms: Vec<Vec<Vec<f64>>> = rows.iter().map(|r| all_perms(r)).collect();
        let mut idx = vec![0usize; rows.len()];
        let (mut hits, mut total) = (0u64, 0u64);
        loop {
            let current: Vec<Vec<f64>> = std::iter::once(rows[0].clone())
                .chain((1..rows.len()).map(|i| perms[i][idx[i]].clone()))
                .collect();
            total += 1;
            if friedman_ss(&current) >= observed - SLACK {
                hits += 1;
            }
            let mut pos = 1;
            loop {
                if pos == rows.len() {
                    return hits as f64 / total as f64;
                }
                idx[pos] += 1;
                if idx[pos] < perms[pos].len() {
                    break;
                }
                idx[pos] = 0;
                pos += 1;
            }
        }
    }
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let mut work = rows.clone();
    let mut hits = 0usize;
    for _ in 0..mc_draws {
        for row in work.iter_mut().skip(1) {
            row.shuffle(&mut rng);
        }
        if friedman_ss(&work) >= observed - SLACK {
            hits += 1;
        }
    }
    hits as f64 / mc_draws as f64
}

/// Random sample: tie-heavy small integers or continuous values.
pub fn sample(rng: &mut impl Rng, n: usize, shift: f64) -> Vec<f64> {
    let ties = rng.random_bool(0.4);
    (0..n)
        .map(|_| {
            if ties {
                rng.random_range(-3i32..=4) as f64 + shift.round()
            } else {
                rng.random::<f64>() * 4.0 - 2.0 + shift
            }
        })
        .collect()
}
