use num::bigint::BigInt;
use num::{Signed, ToPrimitive};
use serde::Serialize;

use crate::error::{Error, Result};

/// `ln⟨k⟩ = ½ ln(1 + k²)`, also for integers beyond `f64` range.
pub fn log_bracket(k: &BigInt) -> f64 {
    let a = k.abs();
    let bits = a.bits();
    if bits < 1000 {
        let x = a.to_f64().expect("finite below 2^1000");
        return x.hypot(1.0).ln();
    }
    let shift = bits - 64;
    let top = (&a >> shift).to_f64().expect("64-bit head");
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// One summand `(1 ∧ ⟨k⟩⁴/⟨j⟩ ∧ ⟨j⟩⁴/⟨k⟩) ∨ 1/⟨j⟩`, in log form.
fn log_term(lk: f64, lj: f64) -> f64 {
    0f64.min(4.0 * lk - lj).min(4.0 * lj - lk).max(-lj)
}

pub fn validate_sequence(seq: &[BigInt]) -> Result<()> {
    if seq.is_empty() {
        return Err(Error::InvalidArgument("sparsity set must be nonempty".into()));
    }
    for w in seq.windows(2) {
        if w[1].abs() <= w[0].abs() {
            return Err(Error::InvalidArgument(format!("absolute values must increase strictly: {} then {}", w[0], w[1])));
        }
    }
    Ok(())
}

/// `sup_k Σ_j (1 ∧ ⟨k⟩⁴/⟨j⟩ ∧ ⟨j⟩⁴/⟨k⟩) ∨ 1/⟨j⟩` over the given finite set.
pub fn sparsity_functional(seq: &[BigInt]) -> Result<f64> {
    validate_sequence(seq)?;
    let logs: Vec<f64> = seq.iter().map(log_bracket).collect();
    Ok(sup_sum(&logs))
}

fn sup_sum(logs: &[f64]) -> f64 {
    logs.iter()
        .map(|&lk| logs.iter().map(|&lj| log_term(lk, lj).exp()).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max)
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SparsityTrend {
    /// Value at truncation length `P = 1, 2, …`.
    pub values: Vec<f64>,
    pub increments: Vec<f64>,
}

impl SparsityTrend {
    pub fn increments_shrink(&self) -> bool {
        self.increments.windows(2).all(|w| w[1] <= w[0] + 1e-12)
    }
}

pub fn sparsity_trend(seq: &[BigInt]) -> Result<SparsityTrend> {
    validate_sequence(seq)?;
    let logs: Vec<f64> = seq.iter().map(log_bracket).collect();
    let values: Vec<f64> = (1..=logs.len()).map(|p| sup_sum(&logs[..p])).collect();
    let increments = values.windows(2).map(|w| w[1] - w[0]).collect();
    Ok(SparsityTrend { values, increments })
}

/// `k_p = 2^{2^p}`, `p = 1..=count`.
pub fn doubly_exponential(count: u32) -> Vec<BigInt> {
    (1..=count).map(|p| BigInt::from(1) << (1usize << p)).collect()
}

/// One integer per line; blank lines and `#` comments are skipped.
pub fn parse_sequence(text: &str) -> Result<Vec<BigInt>> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.parse::<BigInt>().map_err(|e| Error::Parse(format!("bad integer {l:?}: {e}"))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn singleton() {
        let v = sparsity_functional(&[BigInt::from(1)]).unwrap();
        // ⟨1⟩ = √2: min(1, 2^{3/2}, 2^{3/2}) = 1.
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn huge_brackets() {
        let k = BigInt::from(1) << 2048usize;
        assert!((log_bracket(&k) - 2048.0 * std::f64::consts::LN_2).abs() < 1e-9);
        let k = BigInt::from(1) << 256usize;
        assert!((log_bracket(&k) - 256.0 * std::f64::consts::LN_2).abs() < 1e-9);
    }

    #[test]
    fn rejects_non_increasing() {
        assert!(sparsity_functional(&[BigInt::from(3), BigInt::from(-3)]).is_err());
        assert!(sparsity_functional(&[]).is_err());
    }
}
