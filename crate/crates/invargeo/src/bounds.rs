//! Margin-based generalization-error bounds for stable classifiers and
//! the ratio between the invariant and non-invariant variants.

use serde::Serialize;

use crate::error::{Error, Result};

/// Scalar inputs of the bound: class count, sample count, confidence, margin.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GeBoundParams {
    pub n_classes: usize,
    pub m: usize,
    pub delta: f64,
    pub margin: f64,
}

impl GeBoundParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_classes < 2 {
            return Err(Error::InvalidParams(format!(
                "n_classes must be >= 2, got {}",
                self.n_classes
            )));
        }
        if self.m < 1 {
            return Err(Error::InvalidParams("m must be >= 1".into()));
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(Error::InvalidParams(format!(
                "delta must be in (0, 1], got {}",
                self.delta
            )));
        }
        if self.margin <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "margin must be positive, got {}",
                self.margin
            )));
        }
        Ok(())
    }
}

/// The two additive terms of the bound.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GeBound {
    pub value: f64,
    pub covering_term: f64,
    pub confidence_term: f64,
}

/// sqrt(2 ln2 * n_classes * covering / m) + sqrt(2 ln(1/delta) / m).
///
/// The caller supplies the covering number of the full input space for the
/// non-invariant bound, or of the base space for the invariant bound, both
/// at radius margin/2.
pub fn ge_bound(params: &GeBoundParams, covering: usize) -> Result<GeBound> {
    params.validate()?;
    if covering < 1 {
        return Err(Error::InvalidParams("covering must be >= 1".into()));
    }
    let m = params.m as f64;
    let covering_term =
        (2.0 * 2.0f64.ln() * params.n_classes as f64 * covering as f64 / m).sqrt();
    let confidence_term = (2.0 * (1.0 / params.delta).ln() / m).sqrt();
    Ok(GeBound {
        value: covering_term + confidence_term,
        covering_term,
        confidence_term,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct BoundPair {
    pub invariant_bound: f64,
    pub noninvariant_bound: f64,
    /// sqrt(n_base / n_product), the covering ratio R.
    pub first_term_ratio: f64,
}

/// Evaluates both bounds from the two covering numbers.
pub fn bound_pair(params: &GeBoundParams, n_base: usize, n_product: usize) -> Result<BoundPair> {
    if n_base > n_product {
        return Err(Error::InvalidParams(format!(
            "base covering {n_base} exceeds product covering {n_product}"
        )));
    }
    let invariant = ge_bound(params, n_base)?;
    let noninvariant = ge_bound(params, n_product)?;
    Ok(BoundPair {
        invariant_bound: invariant.value,
        noninvariant_bound: noninvariant.value,
        first_term_ratio: (n_base as f64 / n_product as f64).sqrt(),
    })
}
