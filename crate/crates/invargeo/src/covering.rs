//! Epsilon-covering numbers of finite point sets: a greedy approximation,
//! a packing lower bound, and an exact branch-and-bound search over the
//! set-cover reduction. Covers are internal: centers are drawn from the
//! point set itself.

use crate::error::{Error, Result};
use crate::geometry::{distance, PointSet};

pub const DEFAULT_NODE_BUDGET: u64 = 10_000_000;

/// A certified epsilon-cover of a point set.
#[derive(Debug, Clone)]
pub struct CoverResult {
    /// Indices into the input point set.
    pub centers: Vec<usize>,
    pub size: usize,
    pub epsilon: f64,
    /// True when the size is provably minimal over internal covers.
    pub certified_exact: bool,
    /// Packing-based lower bound on the internal covering number.
    pub lower_bound: usize,
}

/// Fixed-width bitset over point indices.
#[derive(Clone, PartialEq, Eq)]
struct BitSet {
    words: Vec<u64>,
}

impl BitSet {
    fn empty(n: usize) -> Self {
        BitSet {
            words: vec![0; n.div_ceil(64)],
        }
    }

    fn set(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    fn get(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    fn union_with(&mut self, other: &BitSet) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    /// |other \ self|
    fn uncovered_count(&self, other: &BitSet) -> usize {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (b & !a).count_ones() as usize)
            .sum()
    }

    fn is_subset(&self, other: &BitSet) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    fn covers(&self, n: usize) -> bool {
        self.count() == n
    }
}

/// Balls[i] = indices within eps of point i.
fn balls(ps: &PointSet, eps: f64) -> Result<Vec<BitSet>> {
    if ps.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    if eps <= 0.0 {
        return Err(Error::NonPositiveEpsilon(eps));
    }
    let n = ps.len();
    let mut balls: Vec<BitSet> = (0..n).map(|_| BitSet::empty(n)).collect();
    for i in 0..n {
        balls[i].set(i);
        for j in (i + 1)..n {
            if distance(ps.point(i), ps.point(j))? <= eps {
                balls[i].set(j);
                balls[j].set(i);
            }
        }
    }
    Ok(balls)
}

/// Greedy internal cover: repeatedly picks the ball covering the most
/// uncovered points, ties broken by lowest point index.
pub fn greedy_cover(ps: &PointSet, eps: f64) -> Result<CoverResult> {
    let balls = balls(ps, eps)?;
    let n = ps.len();
    let lower = packing_from_balls(ps, eps)?;
    let centers = greedy_from_balls(&balls, n);
    let size = centers.len();
    Ok(CoverResult {
        centers,
        size,
        epsilon: eps,
        certified_exact: size == lower,
        lower_bound: lower,
    })
}

fn greedy_from_balls(balls: &[BitSet], n: usize) -> Vec<usize> {
    let mut covered = BitSet::empty(n);
    let mut centers = Vec::new();
    while !covered.covers(n) {
        let mut best = 0usize;
        let mut best_gain = 0usize;
        for (i, b) in balls.iter().enumerate() {
            let gain = covered.uncovered_count(b);
            if gain > best_gain {
                best_gain = gain;
                best = i;
            }
        }
        covered.union_with(&balls[best]);
        centers.push(best);
    }
    centers
}

/// Size of a greedily built subset whose points are pairwise more than
/// 2*eps apart. Any eps-ball contains at most one such point, so this
/// lower-bounds the eps-covering number.
pub fn packing_lower_bound(ps: &PointSet, eps: f64) -> Result<usize> {
    if ps.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    if eps <= 0.0 {
        return Err(Error::NonPositiveEpsilon(eps));
    }
    packing_from_balls(ps, eps)
}

fn packing_from_balls(ps: &PointSet, eps: f64) -> Result<usize> {
    let mut kept: Vec<usize> = Vec::new();
    for i in 0..ps.len() {
        let mut separated = true;
        for &j in &kept {
            if distance(ps.point(i), ps.point(j))? <= 2.0 * eps {
                separated = false;
                break;
            }
        }
        if separated {
            kept.push(i);
        }
    }
    Ok(kept.len())
}

/// Minimal internal eps-cover via branch and bound. On node-budget
/// exhaustion returns the best cover found with `certified_exact` false.
pub fn exact_cover(ps: &PointSet, eps: f64, budget: u64) -> Result<CoverResult> {
    let balls = balls(ps, eps)?;
    let n = ps.len();
    let lower = packing_from_balls(ps, eps)?;

    // greedy incumbent
    let mut best_centers = greedy_from_balls(&balls, n);
    if best_centers.len() == lower {
        let size = best_centers.len();
        return Ok(CoverResult {
            centers: best_centers,
            size,
            epsilon: eps,
            certified_exact: true,
            lower_bound: lower,
        });
    }

    // dominated-ball elimination: a ball strictly contained in another is
    // never needed as a center (ties keep the lower index)
    let mut candidates: Vec<usize> = Vec::new();
    for i in 0..n {
        let dominated = (0..n).any(|j| {
            j != i
                && balls[i].is_subset(&balls[j])
                && (balls[i] != balls[j] || j < i)
        });
        if !dominated {
            candidates.push(i);
        }
    }

    let mut search = Search {
        balls: &balls,
        candidates: &candidates,
        n,
        best_size: best_centers.len(),
        best_centers: &mut best_centers,
        nodes: 0,
        budget,
        exhausted: false,
    };
    let mut chosen = Vec::new();
    search.recurse(BitSet::empty(n), &mut chosen);
    let exhausted = search.exhausted;

    let size = best_centers.len();
    Ok(CoverResult {
        centers: best_centers,
        size,
        epsilon: eps,
        certified_exact: !exhausted,
        lower_bound: lower,
    })
}

struct Search<'a> {
    balls: &'a [BitSet],
    candidates: &'a [usize],
    n: usize,
    best_size: usize,
    best_centers: &'a mut Vec<usize>,
    nodes: u64,
    budget: u64,
    exhausted: bool,
}

impl Search<'_> {
    fn recurse(&mut self, covered: BitSet, chosen: &mut Vec<usize>) {
        self.nodes += 1;
        if self.nodes > self.budget {
            self.exhausted = true;
            return;
        }
        if covered.covers(self.n) {
            if chosen.len() < self.best_size {
                self.best_size = chosen.len();
                *self.best_centers = chosen.clone();
            }
            return;
        }
        if chosen.len() + 1 >= self.best_size {
            return;
        }
        // bound: ceil(uncovered / largest residual ball)
        let uncovered = self.n - covered.count();
        let max_gain = self
            .candidates
            .iter()
            .map(|&i| covered.uncovered_count(&self.balls[i]))
            .max()
            .unwrap_or(0);
        if max_gain == 0 {
            return;
        }
        if chosen.len() + uncovered.div_ceil(max_gain) >= self.best_size {
            return;
        }
        // branch on the uncovered point with the fewest candidate balls
        let mut pivot = usize::MAX;
        let mut pivot_count = usize::MAX;
        for p in 0..self.n {
            if covered.get(p) {
                continue;
            }
            let count = self
                .candidates
                .iter()
                .filter(|&&i| self.balls[i].get(p))
                .count();
            if count < pivot_count {
                pivot_count = count;
                pivot = p;
            }
        }
        let mut options: Vec<usize> = self
            .candidates
            .iter()
            .copied()
            .filter(|&i| self.balls[i].get(pivot))
            .collect();
        options.sort_by_key(|&i| std::cmp::Reverse(covered.uncovered_count(&self.balls[i])));
        for i in options {
            let mut next = covered.clone();
            next.union_with(&self.balls[i]);
            chosen.push(i);
            self.recurse(next, chosen);
            chosen.pop();
            if self.exhausted {
                return;
            }
        }
    }
}

/// Checks that every point lies within eps of some center (exactly).
pub fn is_valid_cover(ps: &PointSet, centers: &[usize], eps: f64) -> bool {
    ps.iter().all(|p| {
        centers
            .iter()
            .any(|&c| distance(p, ps.point(c)).map(|d| d <= eps).unwrap_or(false))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Signal;
    use rand::prelude::*;

    fn sig(v: &[f64]) -> Signal {
        Signal::new(v.to_vec()).unwrap()
    }

    fn line(xs: &[f64]) -> PointSet {
        PointSet::new(xs.iter().map(|&x| sig(&[x])).collect()).unwrap()
    }

    /// Exhaustive minimal internal cover over subsets ordered by size.
    fn exhaustive_cover_size(ps: &PointSet, eps: f64) -> usize {
        let n = ps.len();
        assert!(n <= 16);
        for k in 1..=n {
            for mask in 0u32..(1 << n) {
                if mask.count_ones() as usize != k {
                    continue;
                }
                let centers: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
                if is_valid_cover(ps, &centers, eps) {
                    return k;
                }
            }
        }
        unreachable!()
    }

    #[test]
    fn one_ball_covers_all() {
        let ps = line(&[0.0, 1.0, 2.0]);
        let r = greedy_cover(&ps, 2.0).unwrap();
        assert_eq!(r.size, 1);
        assert!(is_valid_cover(&ps, &r.centers, 2.0));
    }

    #[test]
    fn isolated_points_need_own_ball() {
        let ps = line(&[0.0, 10.0, 20.0, 30.0]);
        let r = greedy_cover(&ps, 0.5).unwrap();
        assert_eq!(r.size, 4);
        assert!(r.certified_exact); // greedy == packing bound
        let e = exact_cover(&ps, 0.5, DEFAULT_NODE_BUDGET).unwrap();
        assert_eq!(e.size, 4);
        assert!(e.certified_exact);
    }

    #[test]
    fn collinear_middle_point_covers() {
        let eps = 1.0;
        let ps = line(&[0.0, 1.0, 2.0]);
        let r = exact_cover(&ps, eps, DEFAULT_NODE_BUDGET).unwrap();
        assert_eq!(r.size, 1);
        assert!(r.certified_exact);
    }

    #[test]
    fn rejects_bad_inputs() {
        let ps = line(&[0.0]);
        assert!(greedy_cover(&ps, 0.0).is_err());
        assert!(exact_cover(&ps, -1.0, 100).is_err());
        assert!(packing_lower_bound(&ps, 0.0).is_err());
        let empty = PointSet::new(vec![]).unwrap();
        assert!(greedy_cover(&empty, 1.0).is_err());
    }

    #[test]
    fn packing_trivials() {
        let single = line(&[3.0]);
        assert_eq!(packing_lower_bound(&single, 1.0).unwrap(), 1);
        let spread = line(&[0.0, 10.0, 20.0]);
        assert_eq!(packing_lower_bound(&spread, 1.0).unwrap(), 3);
    }

    #[test]
    fn exact_matches_exhaustive_oracle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for trial in 0..50 {
            let n = rng.gen_range(2..=12);
            let dim = rng.gen_range(1..=3);
            let pts: Vec<Signal> = (0..n)
                .map(|_| sig(&(0..dim).map(|_| rng.gen::<f64>()).collect::<Vec<_>>()))
                .collect();
            let ps = PointSet::new(pts).unwrap();
            let eps = rng.gen_range(0.05..0.8);
            let expected = exhaustive_cover_size(&ps, eps);
            let r = exact_cover(&ps, eps, DEFAULT_NODE_BUDGET).unwrap();
            assert!(r.certified_exact, "trial {trial} exhausted budget");
            assert_eq!(r.size, expected, "trial {trial}");
            assert!(is_valid_cover(&ps, &r.centers, eps));
            let g = greedy_cover(&ps, eps).unwrap();
            let lb = packing_lower_bound(&ps, eps).unwrap();
            assert!(lb <= r.size && r.size <= g.size, "sandwich failed, trial {trial}");
        }
    }

    #[test]
    fn monotone_in_epsilon() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let pts: Vec<Signal> = (0..10)
            .map(|_| sig(&[rng.gen::<f64>(), rng.gen::<f64>()]))
            .collect();
        let ps = PointSet::new(pts).unwrap();
        let mut prev = usize::MAX;
        for k in 1..=10 {
            let eps = 0.05 * k as f64;
            let r = exact_cover(&ps, eps, DEFAULT_NODE_BUDGET).unwrap();
            assert!(r.size <= prev);
            prev = r.size;
        }
    }

    #[test]
    fn budget_exhaustion_reported() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let pts: Vec<Signal> = (0..14)
            .map(|_| sig(&[rng.gen::<f64>(), rng.gen::<f64>()]))
            .collect();
        let ps = PointSet::new(pts).unwrap();
        let r = exact_cover(&ps, 0.3, 1).unwrap();
        assert!(!r.certified_exact);
        assert!(is_valid_cover(&ps, &r.centers, 0.3));
    }

    #[test]
    fn isometry_leaves_covering_number_unchanged() {
        use crate::transforms::{apply, translation_group};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let pts: Vec<Signal> = (0..8)
            .map(|_| sig(&(0..9).map(|_| rng.gen::<f64>()).collect::<Vec<_>>()))
            .collect();
        let ps = PointSet::new(pts).unwrap();
        let eps = 0.6;
        let base = exact_cover(&ps, eps, DEFAULT_NODE_BUDGET).unwrap();
        let g = translation_group(3, 3);
        for t in g.iter().take(4) {
            let moved = PointSet::new(
                ps.iter().map(|p| apply(t, p).unwrap()).collect(),
            )
            .unwrap();
            let r = exact_cover(&moved, eps, DEFAULT_NODE_BUDGET).unwrap();
            assert_eq!(r.size, base.size);
        }
    }
}
