//! Discrete transformation sets as coordinate permutations: cyclic
//! translations, 90-degree rotations, and their products.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::geometry::{PointSet, Signal};

/// A coordinate permutation on signals of a fixed dimension.
///
/// Applying a transform reads `output[i] = x[permutation[i]]`, so the
/// permutation maps destination index to source index.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Transform {
    permutation: Vec<usize>,
    name: String,
}

impl Transform {
    pub fn new(permutation: Vec<usize>, name: impl Into<String>) -> Result<Self> {
        let n = permutation.len();
        let mut seen = vec![false; n];
        for &p in &permutation {
            if p >= n || seen[p] {
                return Err(Error::NotAPermutation(p));
            }
            seen[p] = true;
        }
        Ok(Transform {
            permutation,
            name: name.into(),
        })
    }

    pub fn identity(dim: usize) -> Self {
        Transform {
            permutation: (0..dim).collect(),
            name: "id".to_string(),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.permutation.iter().enumerate().all(|(i, &p)| i == p)
    }

    pub fn dimension(&self) -> usize {
        self.permutation.len()
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }

    /// `self` after `other`: (self . other)(x) = self(other(x)).
    pub fn compose(&self, other: &Transform) -> Result<Transform> {
        if self.dimension() != other.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                got: other.dimension(),
            });
        }
        // out[i] = other_applied[self.perm[i]] = x[other.perm[self.perm[i]]]
        let permutation = self
            .permutation
            .iter()
            .map(|&i| other.permutation[i])
            .collect();
        Transform::new(permutation, format!("{}∘{}", self.name, other.name))
    }

    pub fn inverse(&self) -> Transform {
        let mut inv = vec![0; self.permutation.len()];
        for (i, &p) in self.permutation.iter().enumerate() {
            inv[p] = i;
        }
        Transform {
            permutation: inv,
            name: format!("{}⁻¹", self.name),
        }
    }
}

/// Applies the permutation to a signal's coordinates. Norm-preserving.
pub fn apply(t: &Transform, x: &Signal) -> Result<Signal> {
    if t.dimension() != x.dimension() {
        return Err(Error::DimensionMismatch {
            expected: t.dimension(),
            got: x.dimension(),
        });
    }
    let values = t.permutation.iter().map(|&i| x.values()[i]).collect();
    Signal::new(values)
}

/// A finite ordered set of transforms; the first element is the identity.
#[derive(Debug, Clone)]
pub struct TransformSet {
    elements: Vec<Transform>,
}

impl TransformSet {
    /// Builds a set from elements, deduplicating and moving the identity first.
    pub fn new(elements: Vec<Transform>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::TransformSetTooSmall(0));
        }
        let dim = elements[0].dimension();
        let mut seen: HashSet<Vec<usize>> = HashSet::new();
        let mut out = vec![Transform::identity(dim)];
        seen.insert(out[0].permutation.clone());
        for t in elements {
            if t.dimension() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: t.dimension(),
                });
            }
            if seen.insert(t.permutation.clone()) {
                out.push(t);
            }
        }
        Ok(TransformSet { elements: out })
    }

    pub fn identity_only(dim: usize) -> Self {
        TransformSet {
            elements: vec![Transform::identity(dim)],
        }
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn element(&self, i: usize) -> &Transform {
        &self.elements[i]
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Transform> {
        self.elements.iter()
    }

    pub fn dimension(&self) -> usize {
        self.elements[0].dimension()
    }
}

fn pixel(r: usize, c: usize, w: usize) -> usize {
    r * w + c
}

/// All w*h pixel-wise cyclic translations of a w x h grid, identity first.
pub fn translation_group(w: usize, h: usize) -> TransformSet {
    let mut elements = Vec::with_capacity(w * h);
    for dy in 0..h {
        for dx in 0..w {
            // content at (r, c) moves to ((r+dy) mod h, (c+dx) mod w)
            let mut perm = vec![0; w * h];
            for r in 0..h {
                for c in 0..w {
                    let src_r = (r + h - dy) % h;
                    let src_c = (c + w - dx) % w;
                    perm[pixel(r, c, w)] = pixel(src_r, src_c, w);
                }
            }
            elements.push(Transform::new(perm, format!("shift({dx},{dy})")).expect("bijection"));
        }
    }
    TransformSet::new(elements).expect("nonempty")
}

/// The four 90-degree rotations of a square w x w grid.
pub fn rotation_group(w: usize, h: usize) -> Result<TransformSet> {
    if w != h {
        return Err(Error::NonSquareGrid { w, h });
    }
    // generator: content at (r, c) moves to (c, w-1-r)
    let mut perm = vec![0; w * w];
    for r in 0..w {
        for c in 0..w {
            perm[pixel(c, w - 1 - r, w)] = pixel(r, c, w);
        }
    }
    let gen = Transform::new(perm, "rot90")?;
    let r2 = gen.compose(&gen)?;
    let r3 = r2.compose(&gen)?;
    TransformSet::new(vec![Transform::identity(w * w), gen, r2, r3])
}

/// All compositions b ∘ a (elements of `a` applied first), deduplicated.
pub fn product_set(a: &TransformSet, b: &TransformSet) -> Result<TransformSet> {
    if a.dimension() != b.dimension() {
        return Err(Error::DimensionMismatch {
            expected: a.dimension(),
            got: b.dimension(),
        });
    }
    let mut elements = Vec::with_capacity(a.len() * b.len());
    for ta in a.iter() {
        for tb in b.iter() {
            elements.push(tb.compose(ta)?);
        }
    }
    TransformSet::new(elements)
}

/// True iff the set contains the identity and is closed under composition
/// and inverse.
pub fn is_group(ts: &TransformSet) -> bool {
    let perms: HashSet<&[usize]> = ts.iter().map(|t| t.permutation()).collect();
    if !ts.element(0).is_identity() {
        return false;
    }
    for t in ts.iter() {
        if !perms.contains(t.inverse().permutation()) {
            return false;
        }
        for u in ts.iter() {
            let c = t.compose(u).expect("same dim");
            if !perms.contains(c.permutation()) {
                return false;
            }
        }
    }
    true
}

/// The deduplicated orbit {t(x) : t in ts}.
pub fn orbit(ts: &TransformSet, x: &Signal) -> Result<PointSet> {
    let mut images = Vec::with_capacity(ts.len());
    for t in ts.iter() {
        images.push(apply(t, x)?);
    }
    PointSet::deduplicated(images, 0.0)
}
