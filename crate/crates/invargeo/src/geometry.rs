//! Euclidean metric primitives on signals and finite point sets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A real vector of fixed dimension, e.g. a flattened W x H image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Signal {
    values: Vec<f64>,
}

impl Signal {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Signal { values })
    }

    pub fn dimension(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Scales to unit l2 norm. A zero signal is left unchanged.
    pub fn normalized(&self) -> Signal {
        let n = self.norm();
        if n == 0.0 {
            return self.clone();
        }
        Signal {
            values: self.values.iter().map(|v| v / n).collect(),
        }
    }
}

/// Euclidean distance between two signals of equal dimension.
///
/// Squared differences are accumulated in sorted order, which makes the
/// result bit-identical under any permutation of coordinates: coordinate
/// permutations are exact isometries, not just isometries up to rounding.
pub fn distance(a: &Signal, b: &Signal) -> Result<f64> {
    if a.dimension() != b.dimension() {
        return Err(Error::DimensionMismatch {
            expected: a.dimension(),
            got: b.dimension(),
        });
    }
    let mut sq: Vec<f64> = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| (x - y) * (x - y))
        .collect();
    sq.sort_unstable_by(|p, q| p.partial_cmp(q).expect("squares are finite"));
    Ok(sq.iter().sum::<f64>().sqrt())
}

/// A deduplicated finite collection of signals with optional class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    points: Vec<Signal>,
    labels: Option<Vec<usize>>,
    dedup_tolerance: f64,
}

impl PointSet {
    /// Builds a set without deduplication.
    pub fn new(points: Vec<Signal>) -> Result<Self> {
        check_dims(&points)?;
        Ok(PointSet {
            points,
            labels: None,
            dedup_tolerance: 0.0,
        })
    }

    pub fn with_labels(points: Vec<Signal>, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != points.len() {
            return Err(Error::BadLabels);
        }
        check_dims(&points)?;
        Ok(PointSet {
            points,
            labels: Some(labels),
            dedup_tolerance: 0.0,
        })
    }

    /// Builds a set keeping only the first of any group of points within
    /// `tolerance` of each other. Order of first occurrences is preserved.
    pub fn deduplicated(points: Vec<Signal>, tolerance: f64) -> Result<Self> {
        check_dims(&points)?;
        let mut kept: Vec<Signal> = Vec::new();
        for p in points {
            let dup = kept
                .iter()
                .any(|q| distance(q, &p).map(|d| d <= tolerance).unwrap_or(false));
            if !dup {
                kept.push(p);
            }
        }
        Ok(PointSet {
            points: kept,
            labels: None,
            dedup_tolerance: tolerance,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> &Signal {
        &self.points[i]
    }

    pub fn points(&self) -> &[Signal] {
        &self.points
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn dimension(&self) -> usize {
        self.points.first().map(|p| p.dimension()).unwrap_or(0)
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Signal> {
        self.points.iter()
    }

    /// Largest pairwise distance; 0 for sets of size < 2.
    pub fn diameter(&self) -> f64 {
        let mut max = 0.0f64;
        for i in 0..self.points.len() {
            for j in (i + 1)..self.points.len() {
                let d = distance(&self.points[i], &self.points[j]).expect("uniform dims");
                if d > max {
                    max = d;
                }
            }
        }
        max
    }

    /// True if the sets contain the same points (within `tol`) regardless of order.
    pub fn same_points(&self, other: &PointSet, tol: f64) -> bool {
        self.len() == other.len()
            && self.iter().all(|p| {
                other
                    .iter()
                    .any(|q| distance(p, q).map(|d| d <= tol).unwrap_or(false))
            })
    }
}

fn check_dims(points: &[Signal]) -> Result<()> {
    if let Some(first) = points.first() {
        let dim = first.dimension();
        for p in points {
            if p.dimension() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: p.dimension(),
                });
            }
        }
    }
    Ok(())
}

/// Symmetric pairwise distance matrix with zero diagonal.
#[derive(Debug, Clone)]
pub struct DistanceMatrix {
    entries: Vec<Vec<f64>>,
}

impl DistanceMatrix {
    pub fn size(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i][j]
    }
}

pub fn distance_matrix(ps: &PointSet) -> Result<DistanceMatrix> {
    if ps.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    let n = ps.len();
    let mut entries = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = distance(ps.point(i), ps.point(j))?;
            entries[i][j] = d;
            entries[j][i] = d;
        }
    }
    Ok(DistanceMatrix { entries })
}

/// Minimum over i != j of entries[i][j]. Requires at least 2 points.
pub fn min_offdiagonal(dm: &DistanceMatrix) -> Result<f64> {
    let n = dm.size();
    if n < 2 {
        return Err(Error::TooFewPoints { need: 2, have: n });
    }
    let mut min = f64::INFINITY;
    for i in 0..n {
        for j in (i + 1)..n {
            if dm.entries[i][j] < min {
                min = dm.entries[i][j];
            }
        }
    }
    Ok(min)
}
