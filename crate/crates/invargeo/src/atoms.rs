//! Procedural generator for the toy atoms (cross, circle, corner, curve)
//! and sampled datasets with controlled transformation structure.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::geometry::{PointSet, Signal};
use crate::transforms::{apply, TransformSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AtomKind {
    Cross,
    Circle,
    Corner,
    Curve,
}

impl AtomKind {
    pub const ALL: [AtomKind; 4] = [
        AtomKind::Cross,
        AtomKind::Circle,
        AtomKind::Corner,
        AtomKind::Curve,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            AtomKind::Cross => "cross",
            AtomKind::Circle => "circle",
            AtomKind::Corner => "corner",
            AtomKind::Curve => "curve",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "cross" => Ok(AtomKind::Cross),
            "circle" => Ok(AtomKind::Circle),
            "corner" => Ok(AtomKind::Corner),
            "curve" => Ok(AtomKind::Curve),
            other => Err(Error::UnknownAtomKind(other.to_string())),
        }
    }
}

#[derive(Debug, Clone)]
pub struct AtomSpec {
    pub kind: AtomKind,
    pub width: usize,
    pub height: usize,
    /// Scale to unit l2 norm.
    pub normalize: bool,
}

impl AtomSpec {
    /// The canonical 16x16 normalized atom.
    pub fn canonical(kind: AtomKind) -> Self {
        AtomSpec {
            kind,
            width: 16,
            height: 16,
            normalize: true,
        }
    }
}

fn annulus_radii(w: usize) -> (f64, f64) {
    (w as f64 * 0.25, w as f64 * 0.34375)
}

/// Generates a deterministic binary atom image.
///
/// On the canonical 16x16 grid: cross and circle are exact fixed points of
/// the 90-degree rotation, corner and curve have rotation orbits of size 4.
pub fn gen_atom(spec: &AtomSpec) -> Result<Signal> {
    let (w, h) = (spec.width, spec.height);
    let mut img = vec![0.0f64; w * h];
    let cy = (h as f64 - 1.0) / 2.0;
    let cx = (w as f64 - 1.0) / 2.0;
    let mut put = |r: usize, c: usize| img[r * w + c] = 1.0;
    match spec.kind {
        AtomKind::Cross => {
            // the two center rows and the two center columns
            let lo = h / 2 - 1;
            let hi = h / 2;
            for c in 0..w {
                put(lo, c);
                put(hi, c);
            }
            for r in 0..h {
                put(r, w / 2 - 1);
                put(r, w / 2);
            }
        }
        AtomKind::Circle => {
            // annulus around the grid center, 4-fold symmetric;
            // radii 4.0..5.5 on the canonical 16x16 grid
            let (inner, outer) = annulus_radii(w);
            for r in 0..h {
                for c in 0..w {
                    let d = ((r as f64 - cy).powi(2) + (c as f64 - cx).powi(2)).sqrt();
                    if (inner..=outer).contains(&d) {
                        put(r, c);
                    }
                }
            }
        }
        AtomKind::Corner => {
            // L in the top-left area; on the canonical grid: arms along
            // row 3 and column 3, length 8, thickness 2
            let r0 = 3 * h / 16;
            let len = (h / 2).max(2);
            let thick = (h / 8).max(1);
            for k in r0..(r0 + len).min(h) {
                for t in 0..thick {
                    put(r0 + t, k);
                    put(k, r0 + t);
                }
            }
        }
        AtomKind::Curve => {
            // quarter of the circle annulus restricted to the upper-right
            // quadrant, plus a one-pixel tail breaking rotational symmetry
            let (inner, outer) = annulus_radii(w);
            for r in 0..h {
                for c in 0..w {
                    let d = ((r as f64 - cy).powi(2) + (c as f64 - cx).powi(2)).sqrt();
                    if (inner..=outer).contains(&d) && (r as f64) < cy && (c as f64) > cx {
                        put(r, c);
                    }
                }
            }
            put(1, w - 3);
        }
    }
    let signal = Signal::new(img)?;
    Ok(if spec.normalize {
        signal.normalized()
    } else {
        signal
    })
}

/// The four canonical atoms as a labeled point set (labels 0..4).
pub fn canonical_atoms() -> PointSet {
    let points = AtomKind::ALL
        .iter()
        .map(|&k| gen_atom(&AtomSpec::canonical(k)).expect("canonical atoms are valid"))
        .collect();
    PointSet::with_labels(points, vec![0, 1, 2, 3]).expect("labels match")
}

/// Samples `per_class` points per atom: a uniform transform from `ts`
/// applied to the atom, plus optional Gaussian pixel noise. Labels follow
/// the atom index, never the transform.
pub fn gen_dataset(
    atoms: &[AtomSpec],
    ts: &TransformSet,
    per_class: usize,
    noise_sigma: f64,
    seed: u64,
) -> Result<PointSet> {
    if atoms.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    if per_class == 0 {
        return Err(Error::InvalidConfig("per_class must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, noise_sigma.max(0.0))
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let mut points = Vec::with_capacity(atoms.len() * per_class);
    let mut labels = Vec::with_capacity(atoms.len() * per_class);
    for (label, spec) in atoms.iter().enumerate() {
        let atom = gen_atom(spec)?;
        for _ in 0..per_class {
            let t = ts.element(rng.gen_range(0..ts.len()));
            let mut x = apply(t, &atom)?;
            if noise_sigma > 0.0 {
                let noisy: Vec<f64> = x
                    .values()
                    .iter()
                    .map(|v| v + normal.sample(&mut rng))
                    .collect();
                x = Signal::new(noisy)?;
            }
            points.push(x);
            labels.push(label);
        }
    }
    PointSet::with_labels(points, labels)
}
