//! Richardson extrapolation of sequences with power-law corrections.
//!
//! The model is `s_n = L + sum_j e_j n^(-p_j)`. Stage `j` of the table
//! fits `L` and the first `j` corrections exactly through `j + 1`
//! consecutive samples, which works for arbitrary index spacing. For
//! geometric spacing this reproduces the classic elimination weights.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

/// Largest admissible magnitude of an elimination weight.
pub const MAX_WEIGHT: f64 = 1e12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExtrapolationError {
    #[error("elimination weights reach {max_weight:e}")]
    IllConditioned { max_weight: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtrapolationResult {
    pub limit: f64,
    /// Number of eliminated correction terms.
    pub stages: usize,
    pub exponents: Vec<f64>,
    /// `table[j][i]`: stage-`j` estimate using samples `i..=i + j`.
    pub table: Vec<Vec<f64>>,
    /// `|table[stages].last - table[stages - 1].last|`.
    pub error_estimate: f64,
}

/// Integer correction exponents `1, 2, ..., stages`.
pub fn integer_exponents(stages: usize) -> Vec<f64> {
    (1..=stages).map(|p| p as f64).collect()
}

/// Weights `w` with `L = sum_i w_i s_i` for the model with `exponents`
/// through the points `indices`.
pub fn elimination_weights(indices: &[f64], exponents: &[f64]) -> Result<Vec<f64>, ExtrapolationError> {
    let k = indices.len();
    if k != exponents.len() + 1 {
        return Err(ExtrapolationError::InvalidInput(format!(
            "{k} points cannot eliminate {} terms",
            exponents.len()
        )));
    }
    // Row i of V: [1, n_i^-p_1, ..., n_i^-p_j]; L = e_0^T V^-1 s, so the
    // weights solve V^T w = e_0.
    let v = DMatrix::from_fn(k, k, |i, j| {
        if j == 0 {
            1.0
        } else {
            indices[i].powf(-exponents[j - 1])
        }
    });
    let mut e0 = DVector::zeros(k);
    e0[0] = 1.0;
    let w = v
        .transpose()
        .lu()
        .solve(&e0)
        .ok_or(ExtrapolationError::IllConditioned { max_weight: f64::INFINITY })?;
    let max_weight = w.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if !max_weight.is_finite() || max_weight > MAX_WEIGHT {
        return Err(ExtrapolationError::IllConditioned { max_weight });
    }
    Ok(w.iter().copied().collect())
}

/// Extrapolates `values[i]` sampled at `indices[i]` (strictly increasing,
/// positive) eliminating `exponents[..stages]`.
pub fn richardson(
    indices: &[f64],
    values: &[f64],
    exponents: &[f64],
    stages: usize,
) -> Result<ExtrapolationResult, ExtrapolationError> {
    if indices.len() != values.len() {
        return Err(ExtrapolationError::InvalidInput("length mismatch".into()));
    }
    if indices.len() < stages + 1 {
        return Err(ExtrapolationError::InvalidInput(format!(
            "{} samples are too few for {stages} stages",
            indices.len()
        )));
    }
    if exponents.len() < stages {
        return Err(ExtrapolationError::InvalidInput("not enough exponents".into()));
    }
    if indices.iter().any(|&n| !(n > 0.0)) || indices.windows(2).any(|w| w[1] <= w[0]) {
        return Err(ExtrapolationError::InvalidInput(
            "indices must be positive and increasing".into(),
        ));
    }
    let mut table = vec![values.to_vec()];
    for j in 1..=stages {
        let mut row = Vec::with_capacity(values.len() - j);
        for i in 0..values.len() - j {
            let w = elimination_weights(&indices[i..=i + j], &exponents[..j])?;
            row.push(w.iter().zip(&values[i..=i + j]).map(|(w, s)| w * s).sum());
        }
        table.push(row);
    }
    let last = |j: usize| *table[j].last().expect("nonempty stage");
    let limit = last(stages);
    let error_estimate = if stages == 0 {
        let v = &table[0];
        if v.len() > 1 {
            (v[v.len() - 1] - v[v.len() - 2]).abs()
        } else {
            0.0
        }
    } else {
        (limit - last(stages - 1)).abs()
    };
    Ok(ExtrapolationResult {
        limit,
        stages,
        exponents: exponents[..stages].to_vec(),
        table,
        error_estimate,
    })
}

/// Local estimate of the leading correction exponent from three samples at
/// geometrically spaced indices `n, r n, r^2 n`:
/// `p = log_r((s_1 - s_2) / (s_2 - s_3))`.
pub fn fit_leading_exponent(values: [f64; 3], ratio: f64) -> f64 {
    ((values[0] - values[1]) / (values[1] - values[2])).ln() / ratio.ln()
}
