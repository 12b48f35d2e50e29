//! Exact coefficients of the absorbed random walk that sums the moment
//! expansion of `eta`.
//!
//! Walkers start at `n = 2`, step left or right with weight `-1/2` each and
//! are absorbed at `n = 1`:
//!
//! ```text
//! 2 a(1,k) + a(2,k-1)               = 0
//! 2 a(2,k) + a(3,k-1)               = 0
//! 2 a(n,k) + a(n-1,k-1) + a(n+1,k-1) = 0   (n >= 3)
//! ```
//!
//! with `a(2,0) = 1` and `a(n,0) = 0` otherwise.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AlphaError {
    #[error("n = {n} and k = {k} have different parity")]
    ParityMismatch { n: usize, k: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// `alpha(n, k)` for `1 <= n <= n_max`, `0 <= k <= k_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaTable {
    n_max: usize,
    k_max: usize,
    // rows[n - 1][k]
    rows: Vec<Vec<BigRational>>,
}

impl AlphaTable {
    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn get(&self, n: usize, k: usize) -> Option<&BigRational> {
        if n == 0 || n > self.n_max || k > self.k_max {
            return None;
        }
        Some(&self.rows[n - 1][k])
    }

    /// `sum_n |alpha(n, k)|`.
    pub fn column_abs_sum(&self, k: usize) -> BigRational {
        (1..=self.n_max)
            .filter_map(|n| self.get(n, k))
            .fold(BigRational::zero(), |acc, v| acc + v.abs())
    }
}

/// Fills the table by increasing `k` in exact rational arithmetic.
pub fn alpha_recursion(n_max: usize, k_max: usize) -> Result<AlphaTable, AlphaError> {
    if n_max < 2 {
        return Err(AlphaError::InvalidArgument("n_max must be >= 2".into()));
    }
    // The walk started at n = 2 never passes n = k + 2, so this many rows
    // make the truncated boundary exact.
    let rows_needed = n_max.max(k_max + 3);
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let mut cols: Vec<Vec<BigRational>> = Vec::with_capacity(k_max + 1);
    let mut first = vec![BigRational::zero(); rows_needed + 1];
    first[1] = BigRational::one();
    cols.push(first);
    for k in 1..=k_max {
        let prev = &cols[k - 1];
        let mut col = vec![BigRational::zero(); rows_needed + 1];
        for idx in 0..=rows_needed {
            let n = idx + 1;
            let sum = match n {
                1 => prev[1].clone(),
                2 => prev[2].clone(),
                _ => {
                    let right = prev.get(idx + 1).cloned().unwrap_or_else(BigRational::zero);
                    &prev[idx - 1] + right
                }
            };
            col[idx] = -(sum * &half);
        }
        cols.push(col);
    }
    let rows = (0..n_max)
        .map(|idx| (0..=k_max).map(|k| cols[k][idx].clone()).collect())
        .collect();
    Ok(AlphaTable { n_max, k_max, rows })
}

fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, i| acc * BigInt::from(i))
}

/// Closed form of `alpha(n, k)` for same-parity `n`, `k`.
///
/// For `n >= 2`: `(-1)^n (n-1) k! / (2^k ((k+n)/2)! ((k-n)/2 + 1)!)`, which
/// vanishes when `(k-n)/2 + 1 < 0`. For `n = 1`, `k = 2p + 1`:
/// `-(2p)! / (2^(2p+1) p! (p+1)!)`.
pub fn alpha_closed_form(n: usize, k: usize) -> Result<BigRational, AlphaError> {
    if n == 0 {
        return Err(AlphaError::InvalidArgument("n must be >= 1".into()));
    }
    if n % 2 != k % 2 {
        return Err(AlphaError::ParityMismatch { n, k });
    }
    let two_pow = |e: usize| BigInt::one() << e;
    if n == 1 {
        let p = (k - 1) / 2;
        let num = factorial(2 * p);
        let den = two_pow(2 * p + 1) * factorial(p) * factorial(p + 1);
        return Ok(-BigRational::new(num, den));
    }
    let upper = (k + n) / 2;
    let lower = k as i64 - n as i64;
    let lower = lower / 2 + 1;
    if lower < 0 {
        return Ok(BigRational::zero());
    }
    let sign = if n % 2 == 0 { BigInt::one() } else { -BigInt::one() };
    let num = sign * BigInt::from(n - 1) * factorial(k);
    let den = two_pow(k) * factorial(upper) * factorial(lower as usize);
    Ok(BigRational::new(num, den))
}
