//! Factorizes an input space into base space x transformation set, checks
//! the sufficient conditions for a covering-ratio gain, and computes the
//! ratio R = sqrt(N(base) / N(product)).

use serde::Serialize;

use crate::covering::{self, CoverResult};
use crate::error::{Error, Result};
use crate::geometry::{distance, PointSet};
use crate::transforms::{apply, Transform, TransformSet};

/// Which covering solver to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoverMethod {
    Exact { budget: u64 },
    Greedy,
}

/// Full record of one factorization analysis.
#[derive(Debug, Clone, Serialize)]
pub struct FactorizationReport {
    pub base_size: usize,
    pub product_size: usize,
    /// Largest eps for which the separation condition holds strictly.
    pub separation_threshold: f64,
    pub isometry_ok: bool,
    pub degenerate: bool,
    pub epsilon: f64,
    pub n_base: CoverSummary,
    pub n_product: CoverSummary,
    pub ratio: f64,
    /// True iff eps < min(separation_threshold, 1) and the isometry holds.
    pub ratio_bound_applicable: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CoverSummary {
    pub size: usize,
    pub certified_exact: bool,
    pub lower_bound: usize,
}

impl From<&CoverResult> for CoverSummary {
    fn from(r: &CoverResult) -> Self {
        CoverSummary {
            size: r.size,
            certified_exact: r.certified_exact,
            lower_bound: r.lower_bound,
        }
    }
}

/// The product space {t(x) : t in ts, x in base}, deduplicated.
pub fn product_space(ts: &TransformSet, base: &PointSet) -> Result<PointSet> {
    let mut images = Vec::with_capacity(ts.len() * base.len());
    for t in ts.iter() {
        for x in base.iter() {
            images.push(apply(t, x)?);
        }
    }
    PointSet::deduplicated(images, 0.0)
}

/// Half the smallest distance d(t(x), t'(x')) over distinct transform
/// pairs; the separation condition holds exactly for every eps below the
/// returned value.
pub fn separation_threshold(ts: &TransformSet, base: &PointSet) -> Result<f64> {
    if ts.len() < 2 {
        return Err(Error::TransformSetTooSmall(ts.len()));
    }
    let mut min = f64::INFINITY;
    // d(t(x), t'(x')) for permutations equals d(x, (t^-1 t')(x')), but the
    // direct scan keeps this correct for any isometry-checked set
    let images: Vec<Vec<_>> = ts
        .iter()
        .map(|t| {
            base.iter()
                .map(|x| apply(t, x))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    for i in 0..ts.len() {
        for j in (i + 1)..ts.len() {
            for a in &images[i] {
                for b in &images[j] {
                    let d = distance(a, b)?;
                    if d < min {
                        min = d;
                    }
                }
            }
        }
    }
    Ok(min / 2.0)
}

/// Worst transform/pair witness when the isometry condition fails.
#[derive(Debug, Clone)]
pub struct IsometryWitness {
    pub transform: String,
    pub pair: (usize, usize),
    pub original_distance: f64,
    pub transformed_distance: f64,
}

/// Checks d(t(x), t(x')) >= d(x, x') for every transform and base pair.
pub fn check_isometry(
    ts: &TransformSet,
    base: &PointSet,
) -> Result<(bool, Option<IsometryWitness>)> {
    let mut worst: Option<IsometryWitness> = None;
    for t in ts.iter() {
        for i in 0..base.len() {
            for j in (i + 1)..base.len() {
                let d0 = distance(base.point(i), base.point(j))?;
                let dt = distance(&apply(t, base.point(i))?, &apply(t, base.point(j))?)?;
                if dt < d0 {
                    let deficit = d0 - dt;
                    let replace = worst
                        .as_ref()
                        .map(|w| deficit > w.original_distance - w.transformed_distance)
                        .unwrap_or(true);
                    if replace {
                        worst = Some(IsometryWitness {
                            transform: t.name().to_string(),
                            pair: (i, j),
                            original_distance: d0,
                            transformed_distance: dt,
                        });
                    }
                }
            }
        }
    }
    Ok((worst.is_none(), worst))
}

/// True iff every base point is fixed by every transform, i.e. all orbits
/// are singletons and the product space collapses onto the base.
pub fn check_degenerate(ts: &TransformSet, base: &PointSet) -> Result<bool> {
    if ts.len() < 2 {
        return Err(Error::TransformSetTooSmall(ts.len()));
    }
    for x in base.iter() {
        for t in ts.iter() {
            if &apply(t, x)? != x {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Runs the full analysis at one epsilon.
pub fn analyze(
    ts: &TransformSet,
    base: &PointSet,
    eps: f64,
    method: CoverMethod,
) -> Result<FactorizationReport> {
    if base.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    if eps <= 0.0 {
        return Err(Error::NonPositiveEpsilon(eps));
    }
    let product = product_space(ts, base)?;
    let sep = if ts.len() >= 2 {
        separation_threshold(ts, base)?
    } else {
        0.0
    };
    let (isometry_ok, _) = check_isometry(ts, base)?;
    let degenerate = ts.len() >= 2 && check_degenerate(ts, base)?;

    let cover = |ps: &PointSet| -> Result<CoverResult> {
        match method {
            CoverMethod::Exact { budget } => covering::exact_cover(ps, eps, budget),
            CoverMethod::Greedy => covering::greedy_cover(ps, eps),
        }
    };
    let n_base = cover(base)?;
    let n_product = cover(&product)?;

    let ratio = (n_base.size as f64 / n_product.size as f64).sqrt();
    let ratio_bound_applicable = isometry_ok && eps < sep.min(1.0);

    if ratio_bound_applicable && n_base.certified_exact && n_product.certified_exact {
        let limit = 1.0 / (ts.len() as f64).sqrt();
        assert!(
            ratio <= limit + 1e-12,
            "ratio {ratio} exceeds 1/sqrt(T) = {limit} despite separation and isometry holding"
        );
    }
    if degenerate {
        assert_eq!(ratio, 1.0, "degenerate factorization must have R = 1");
    }

    Ok(FactorizationReport {
        base_size: base.len(),
        product_size: product.len(),
        separation_threshold: sep,
        isometry_ok,
        degenerate,
        epsilon: eps,
        n_base: CoverSummary::from(&n_base),
        n_product: CoverSummary::from(&n_product),
        ratio,
        ratio_bound_applicable,
    })
}

/// Lifts an internal cover of the base space to the product space: each
/// base center's class becomes {t(y) : t in ts, y within eps of center}.
/// Returns true when the lifted family covers the whole product space.
pub fn lifted_cover_covers_product(
    ts: &TransformSet,
    base: &PointSet,
    centers: &[usize],
    eps: f64,
) -> Result<bool> {
    let product = product_space(ts, base)?;
    // membership: x in T x K_i iff some t^-1(x) lies within eps of center i
    let inverses: Vec<Transform> = ts.iter().map(|t| t.inverse()).collect();
    for x in product.iter() {
        let mut covered = false;
        'outer: for &c in centers {
            for inv in &inverses {
                let back = apply(inv, x)?;
                if distance(&back, base.point(c))? <= eps {
                    covered = true;
                    break 'outer;
                }
            }
        }
        if !covered {
            return Ok(false);
        }
    }
    Ok(true)
}

/// When the separation condition holds at radius eps, no eps-ball centered
/// at a product-space point may intersect two distinct transformed copies
/// of the base. Verifies that directly.
pub fn balls_intersect_one_copy(ts: &TransformSet, base: &PointSet, eps: f64) -> Result<bool> {
    let copies: Vec<Vec<_>> = ts
        .iter()
        .map(|t| {
            base.iter()
                .map(|x| apply(t, x))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let product = product_space(ts, base)?;
    for center in product.iter() {
        let mut touched = 0usize;
        for copy in &copies {
            let hits = copy
                .iter()
                .map(|p| distance(center, p))
                .collect::<Result<Vec<_>>>()?
                .iter()
                .any(|&d| d <= eps);
            if hits {
                touched += 1;
            }
        }
        if touched > 1 {
            return Ok(false);
        }
    }
    Ok(true)
}
