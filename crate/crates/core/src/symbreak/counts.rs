//! Combinatorics of the minimal symmetry-breaking model.

use serde::Serialize;

use crate::error::{out_of_range, Result};
use crate::rep::{binomial, Dim};

/// chi(p) = (-1)^p sum_{j <= p} (-1)^j C(k, j).
pub fn chi(k: Dim, p: usize) -> i128 {
    let s: i128 = (0..=p.min(k.k()))
        .map(|j| {
            let c = binomial(k.k(), j) as i128;
            if j % 2 == 0 {
                c
            } else {
                -c
            }
        })
        .sum();
    if p % 2 == 0 {
        s
    } else {
        -s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PredictedCounts {
    pub crossings: u128,
    pub folds: u128,
}

/// Crossing curves C(k-1, floor(k/2)) and folds 2^{k-1} - C(k-1, floor(k/2)).
pub fn predicted_counts(k: Dim) -> Result<PredictedCounts> {
    let kk = k.k();
    if kk > 128 {
        return out_of_range("k", kk as f64, "[3, 128]");
    }
    let crossings = binomial(kk - 1, kk / 2);
    Ok(PredictedCounts { crossings, folds: (1u128 << (kk - 1)) - crossings })
}
