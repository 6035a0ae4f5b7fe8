//! Desk-scale stable classifier: a linear multiclass score map with a
//! spectral-norm stability projection, margin score, invariance
//! regularizer, orbit-averaging invariant wrapper, and a deterministic
//! full-batch gradient-descent trainer.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{PointSet, Signal};
use crate::transforms::{apply, is_group, TransformSet};

/// Linear score map f(x) = Wx + b. The Jacobian is the constant W, so
/// stability reduces to a spectral-norm constraint on W.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    weights: Vec<f64>, // n_classes x dim, row-major
    bias: Vec<f64>,
    n_classes: usize,
    dim: usize,
}

impl Model {
    pub fn new(n_classes: usize, dim: usize, weights: Vec<f64>, bias: Vec<f64>) -> Result<Self> {
        if weights.len() != n_classes * dim || bias.len() != n_classes {
            return Err(Error::InvalidConfig(format!(
                "weights/bias shape mismatch for {n_classes} classes x {dim} dims"
            )));
        }
        if let Some(i) = weights.iter().chain(&bias).position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Model {
            weights,
            bias,
            n_classes,
            dim,
        })
    }

    pub fn zeros(n_classes: usize, dim: usize) -> Self {
        Model {
            weights: vec![0.0; n_classes * dim],
            bias: vec![0.0; n_classes],
            n_classes,
            dim,
        }
    }

    /// Small random initialization, deterministic per seed.
    pub fn random_init(n_classes: usize, dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale = 0.5;
        Model {
            weights: (0..n_classes * dim)
                .map(|_| scale * (rng.gen::<f64>() * 2.0 - 1.0))
                .collect(),
            bias: vec![0.0; n_classes],
            n_classes,
            dim,
        }
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }
}

/// Wire format for model files.
#[derive(Debug, Serialize, Deserialize)]
struct ModelWire {
    n_classes: usize,
    dim: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl Model {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ModelWire {
            n_classes: self.n_classes,
            dim: self.dim,
            weights: self.weights.clone(),
            bias: self.bias.clone(),
        })
        .expect("model serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let wire: ModelWire = serde_json::from_str(s)
            .map_err(|e| Error::InvalidConfig(format!("model parse: {e}")))?;
        Model::new(wire.n_classes, wire.dim, wire.weights, wire.bias)
    }
}

/// Wx + b.
pub fn forward(model: &Model, x: &Signal) -> Result<Vec<f64>> {
    if x.dimension() != model.dim {
        return Err(Error::DimensionMismatch {
            expected: model.dim,
            got: x.dimension(),
        });
    }
    let mut scores = model.bias.clone();
    for (i, score) in scores.iter_mut().enumerate() {
        let row = &model.weights[i * model.dim..(i + 1) * model.dim];
        *score += row.iter().zip(x.values()).map(|(w, v)| w * v).sum::<f64>();
    }
    Ok(scores)
}

/// Index of the maximal score; ties go to the lowest index.
pub fn predict(model: &Model, x: &Signal) -> Result<usize> {
    Ok(argmax(&forward(model, x)?))
}

fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone)]
pub struct LabeledSample {
    pub x: Signal,
    pub y: usize,
}

/// sqrt(2) times the smallest gap between the true-class score and any
/// competitor; positive iff correctly classified with strict margin.
pub fn score_margin(model: &Model, sample: &LabeledSample) -> Result<f64> {
    if model.n_classes < 2 {
        return Err(Error::InvalidParams("need at least 2 classes".into()));
    }
    if sample.y >= model.n_classes {
        return Err(Error::LabelOutOfRange {
            label: sample.y,
            n_classes: model.n_classes,
        });
    }
    let scores = forward(model, &sample.x)?;
    let own = scores[sample.y];
    let gap = scores
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != sample.y)
        .map(|(_, &s)| own - s)
        .fold(f64::INFINITY, f64::min);
    Ok(2.0f64.sqrt() * gap)
}

const POWER_ITERATION_CAP: usize = 1_000_000;

/// Largest singular value of W via power iteration on W^T W.
pub fn spectral_norm(model: &Model) -> Result<f64> {
    let (nc, dim) = (model.n_classes, model.dim);
    let matvec = |v: &[f64]| -> Vec<f64> {
        // W^T (W v)
        let mut wv = vec![0.0; nc];
        for i in 0..nc {
            let row = &model.weights[i * dim..(i + 1) * dim];
            wv[i] = row.iter().zip(v).map(|(w, x)| w * x).sum();
        }
        let mut out = vec![0.0; dim];
        for i in 0..nc {
            let row = &model.weights[i * dim..(i + 1) * dim];
            for (o, w) in out.iter_mut().zip(row) {
                *o += wv[i] * w;
            }
        }
        out
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut v: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>() - 0.5).collect();
    normalize(&mut v);
    for _ in 0..POWER_ITERATION_CAP {
        let mut gv = matvec(&v);
        let lambda: f64 = v.iter().zip(&gv).map(|(a, b)| a * b).sum();
        if lambda <= 0.0 {
            // W^T W is PSD; a nonpositive Rayleigh quotient means W = 0
            // within rounding
            return Ok(0.0);
        }
        // residual ||Gv - lambda v||
        let resid: f64 = gv
            .iter()
            .zip(&v)
            .map(|(g, x)| (g - lambda * x) * (g - lambda * x))
            .sum::<f64>()
            .sqrt();
        normalize(&mut gv);
        v = gv;
        if resid <= 1e-12 * lambda {
            return Ok(lambda.sqrt());
        }
    }
    Err(Error::NoConvergence(POWER_ITERATION_CAP))
}

fn normalize(v: &mut [f64]) {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        for x in v.iter_mut() {
            *x /= n;
        }
    }
}

/// Projects onto the stable set: scales W (and b, to keep every argmax
/// unchanged) by 1/max(1, spectral_norm).
pub fn stabilize(model: &Model) -> Result<Model> {
    let norm = spectral_norm(model)?;
    if norm <= 1.0 {
        return Ok(model.clone());
    }
    let s = 1.0 / norm;
    Ok(Model {
        weights: model.weights.iter().map(|w| w * s).collect(),
        bias: model.bias.iter().map(|b| b * s).collect(),
        n_classes: model.n_classes,
        dim: model.dim,
    })
}

/// Sum over transforms of ||f(x) - f(t(x))||^2.
pub fn invariance_penalty(model: &Model, x: &Signal, ts: &TransformSet) -> Result<f64> {
    let fx = forward(model, x)?;
    let mut total = 0.0;
    for t in ts.iter() {
        let ftx = forward(model, &apply(t, x)?)?;
        total += fx
            .iter()
            .zip(&ftx)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>();
    }
    Ok(total)
}

/// A model made exactly invariant by averaging scores over a group orbit:
/// f_inv(x) = (1/T) sum_t f(t(x)).
#[derive(Debug, Clone)]
pub struct InvariantModel {
    base: Model,
    transforms: TransformSet,
}

impl InvariantModel {
    pub fn base(&self) -> &Model {
        &self.base
    }

    pub fn transforms(&self) -> &TransformSet {
        &self.transforms
    }

    pub fn forward(&self, x: &Signal) -> Result<Vec<f64>> {
        let mut acc = vec![0.0; self.base.n_classes];
        for t in self.transforms.iter() {
            let s = forward(&self.base, &apply(t, x)?)?;
            for (a, v) in acc.iter_mut().zip(&s) {
                *a += v;
            }
        }
        let t = self.transforms.len() as f64;
        for a in acc.iter_mut() {
            *a /= t;
        }
        Ok(acc)
    }

    pub fn predict(&self, x: &Signal) -> Result<usize> {
        Ok(argmax(&self.forward(x)?))
    }
}

/// Wraps a model with score averaging over the group. Rejects transform
/// sets that are not groups, since averaging over a non-group is not
/// invariant.
pub fn orbit_average(model: &Model, ts: &TransformSet) -> Result<InvariantModel> {
    if !is_group(ts) {
        return Err(Error::NotAGroup);
    }
    Ok(InvariantModel {
        base: model.clone(),
        transforms: ts.clone(),
    })
}

/// Mean of x over its group orbit, as a signal. The orbit-averaged linear
/// model is exactly the base model evaluated on this mean.
pub fn orbit_mean(ts: &TransformSet, x: &Signal) -> Result<Signal> {
    let mut acc = vec![0.0; x.dimension()];
    for t in ts.iter() {
        let tx = apply(t, x)?;
        for (a, v) in acc.iter_mut().zip(tx.values()) {
            *a += v;
        }
    }
    let n = ts.len() as f64;
    Signal::new(acc.into_iter().map(|v| v / n).collect())
}

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub invariance_weight: f64,
    pub seed: u64,
    /// None means full batch.
    pub batch_size: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 200,
            learning_rate: 0.5,
            weight_decay: 1e-4,
            invariance_weight: 0.0,
            seed: 0,
            batch_size: None,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if self.learning_rate <= 0.0 {
            return Err(Error::InvalidConfig("learning_rate must be positive".into()));
        }
        if self.weight_decay < 0.0 || self.invariance_weight < 0.0 {
            return Err(Error::InvalidConfig("weights must be nonnegative".into()));
        }
        if self.batch_size == Some(0) {
            return Err(Error::InvalidConfig("batch_size must be >= 1".into()));
        }
        Ok(())
    }
}

fn samples_of(data: &PointSet) -> Result<(Vec<LabeledSample>, usize)> {
    let labels = data.labels().ok_or(Error::BadLabels)?;
    if data.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    let n_classes = labels.iter().max().copied().unwrap_or(0) + 1;
    let samples = data
        .iter()
        .zip(labels)
        .map(|(x, &y)| LabeledSample { x: x.clone(), y })
        .collect();
    Ok((samples, n_classes.max(2)))
}

fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Mean softmax cross-entropy plus the scaled invariance penalty over a
/// batch. This is the objective the trainer descends (plus weight decay).
pub fn objective(
    model: &Model,
    batch: &[LabeledSample],
    ts: Option<&TransformSet>,
    invariance_weight: f64,
) -> Result<f64> {
    let m = batch.len() as f64;
    let mut total = 0.0;
    for s in batch {
        let scores = forward(model, &s.x)?;
        let p = softmax(&scores);
        total += -p[s.y].max(1e-300).ln();
        if let Some(ts) = ts {
            if invariance_weight > 0.0 {
                total += invariance_weight * invariance_penalty(model, &s.x, ts)?;
            }
        }
    }
    Ok(total / m)
}

fn gradient(
    model: &Model,
    batch: &[LabeledSample],
    transformed: Option<&Vec<Vec<Signal>>>, // per sample, per transform
    invariance_weight: f64,
    weight_decay: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let (nc, dim) = (model.n_classes, model.dim);
    let m = batch.len() as f64;
    let mut gw = vec![0.0; nc * dim];
    let mut gb = vec![0.0; nc];
    for (si, s) in batch.iter().enumerate() {
        let scores = forward(model, &s.x)?;
        let p = softmax(&scores);
        for i in 0..nc {
            let residual = p[i] - if i == s.y { 1.0 } else { 0.0 };
            gb[i] += residual / m;
            let row = &mut gw[i * dim..(i + 1) * dim];
            for (g, v) in row.iter_mut().zip(s.x.values()) {
                *g += residual * v / m;
            }
        }
        if let Some(transformed) = transformed {
            // d/dW sum_t ||W(x - tx)||^2 = 2 sum_t W(x - tx)(x - tx)^T
            for tx in &transformed[si] {
                let diff: Vec<f64> = s
                    .x
                    .values()
                    .iter()
                    .zip(tx.values())
                    .map(|(a, b)| a - b)
                    .collect();
                let mut wdiff = vec![0.0; nc];
                for i in 0..nc {
                    let row = &model.weights[i * dim..(i + 1) * dim];
                    wdiff[i] = row.iter().zip(&diff).map(|(w, d)| w * d).sum();
                }
                let scale = 2.0 * invariance_weight / m;
                for i in 0..nc {
                    let row = &mut gw[i * dim..(i + 1) * dim];
                    for (g, d) in row.iter_mut().zip(&diff) {
                        *g += scale * wdiff[i] * d;
                    }
                }
            }
        }
    }
    if weight_decay > 0.0 {
        for (g, w) in gw.iter_mut().zip(&model.weights) {
            *g += 2.0 * weight_decay * w;
        }
    }
    Ok((gw, gb))
}

/// Gradient descent on softmax cross-entropy plus the invariance
/// regularizer and weight decay; deterministic given the seed. The
/// returned model is stabilized.
pub fn train(data: &PointSet, cfg: &TrainConfig, ts: Option<&TransformSet>) -> Result<Model> {
    cfg.validate()?;
    let (samples, n_classes) = samples_of(data)?;
    let dim = data.dimension();
    let mut model = Model::random_init(n_classes, dim, cfg.seed);
    // precompute t(x) once per sample; identity is a zero contribution but
    // harmless
    let transformed: Option<Vec<Vec<Signal>>> = match (ts, cfg.invariance_weight > 0.0) {
        (Some(ts), true) => Some(
            samples
                .iter()
                .map(|s| ts.iter().map(|t| apply(t, &s.x)).collect::<Result<Vec<_>>>())
                .collect::<Result<Vec<_>>>()?,
        ),
        _ => None,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1));
    for _ in 0..cfg.epochs {
        let (batch_idx, batch): (Vec<usize>, Vec<LabeledSample>) = match cfg.batch_size {
            Some(b) if b < samples.len() => {
                let mut idx: Vec<usize> = (0..samples.len()).collect();
                idx.shuffle(&mut rng);
                idx.truncate(b);
                let chosen = idx.iter().map(|&i| samples[i].clone()).collect();
                (idx, chosen)
            }
            _ => ((0..samples.len()).collect(), samples.clone()),
        };
        let batch_transformed: Option<Vec<Vec<Signal>>> = transformed
            .as_ref()
            .map(|all| batch_idx.iter().map(|&i| all[i].clone()).collect());
        let (gw, gb) = gradient(
            &model,
            &batch,
            batch_transformed.as_ref(),
            cfg.invariance_weight,
            cfg.weight_decay,
        )?;
        for (w, g) in model.weights.iter_mut().zip(&gw) {
            *w -= cfg.learning_rate * g;
        }
        for (b, g) in model.bias.iter_mut().zip(&gb) {
            *b -= cfg.learning_rate * g;
        }
    }
    stabilize(&model)
}

/// Central finite-difference check of the analytic gradient of the
/// cross-entropy + invariance objective. Returns the maximum relative
/// error over all weight and bias coordinates.
pub fn gradient_check(
    model: &Model,
    batch: &[LabeledSample],
    ts: Option<&TransformSet>,
    invariance_weight: f64,
    h: f64,
) -> Result<f64> {
    if h <= 0.0 {
        return Err(Error::InvalidConfig("step must be positive".into()));
    }
    let transformed: Option<Vec<Vec<Signal>>> = match ts {
        Some(ts) if invariance_weight > 0.0 => Some(
            batch
                .iter()
                .map(|s| ts.iter().map(|t| apply(t, &s.x)).collect::<Result<Vec<_>>>())
                .collect::<Result<Vec<_>>>()?,
        ),
        _ => None,
    };
    let (gw, gb) = gradient(model, batch, transformed.as_ref(), invariance_weight, 0.0)?;
    let mut max_rel = 0.0f64;
    let mut probe = |perturb: &dyn Fn(&Model, f64) -> Model, analytic: f64| -> Result<()> {
        let plus = objective(&perturb(model, h), batch, ts, invariance_weight)?;
        let minus = objective(&perturb(model, -h), batch, ts, invariance_weight)?;
        let fd = (plus - minus) / (2.0 * h);
        let rel = (analytic - fd).abs() / (analytic.abs() + fd.abs()).max(1e-6);
        if rel > max_rel {
            max_rel = rel;
        }
        Ok(())
    };
    for k in 0..model.weights.len() {
        probe(
            &|m: &Model, d: f64| {
                let mut w = m.weights.clone();
                w[k] += d;
                Model {
                    weights: w,
                    bias: m.bias.clone(),
                    n_classes: m.n_classes,
                    dim: m.dim,
                }
            },
            gw[k],
        )?;
    }
    for k in 0..model.bias.len() {
        probe(
            &|m: &Model, d: f64| {
                let mut b = m.bias.clone();
                b[k] += d;
                Model {
                    weights: m.weights.clone(),
                    bias: b,
                    n_classes: m.n_classes,
                    dim: m.dim,
                }
            },
            gb[k],
        )?;
    }
    Ok(max_rel)
}

/// 0-1 error of a scoring function on a labeled set.
pub fn zero_one_error<F>(mut predict_fn: F, data: &PointSet) -> Result<f64>
where
    F: FnMut(&Signal) -> Result<usize>,
{
    let labels = data.labels().ok_or(Error::BadLabels)?;
    if data.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    let mut wrong = 0usize;
    for (x, &y) in data.iter().zip(labels) {
        if predict_fn(x)? != y {
            wrong += 1;
        }
    }
    Ok(wrong as f64 / data.len() as f64)
}

/// |train 0-1 error - test 0-1 error|, the empirical generalization gap.
pub fn empirical_ge<F>(mut predict_fn: F, train: &PointSet, test: &PointSet) -> Result<f64>
where
    F: FnMut(&Signal) -> Result<usize>,
{
    let tr = zero_one_error(&mut predict_fn, train)?;
    let te = zero_one_error(&mut predict_fn, test)?;
    Ok((tr - te).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atoms::{gen_atom, AtomKind, AtomSpec};
    use crate::transforms::rotation_group;

    fn sig(v: &[f64]) -> Signal {
        Signal::new(v.to_vec()).unwrap()
    }

    #[test]
    fn forward_trivials() {
        let zero = Model::zeros(3, 2);
        assert_eq!(forward(&zero, &sig(&[1.0, 2.0])).unwrap(), vec![0.0; 3]);

        let eye = Model::new(2, 2, vec![1.0, 0.0, 0.0, 1.0], vec![0.0, 0.0]).unwrap();
        assert_eq!(forward(&eye, &sig(&[1.0, 0.0])).unwrap(), vec![1.0, 0.0]);
    }

    #[test]
    fn forward_matches_elementwise_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (nc, dim) = (3, 7);
        let w: Vec<f64> = (0..nc * dim).map(|_| rng.gen::<f64>() - 0.5).collect();
        let b: Vec<f64> = (0..nc).map(|_| rng.gen::<f64>()).collect();
        let model = Model::new(nc, dim, w.clone(), b.clone()).unwrap();
        let x: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>()).collect();
        let scores = forward(&model, &sig(&x)).unwrap();
        for i in 0..nc {
            let mut expected = b[i];
            for j in 0..dim {
                expected += w[i * dim + j] * x[j];
            }
            assert!((scores[i] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn predict_tie_breaks_low() {
        let model = Model::new(3, 1, vec![0.0, 0.0, 0.0], vec![1.0, 1.0, 1.0]).unwrap();
        assert_eq!(predict(&model, &sig(&[0.0])).unwrap(), 0);
        let model = Model::new(3, 1, vec![0.0, 0.0, 0.0], vec![2.0, 1.0, 0.0]).unwrap();
        assert_eq!(predict(&model, &sig(&[0.0])).unwrap(), 0);
    }

    #[test]
    fn score_margin_values() {
        let model = Model::new(3, 1, vec![0.0; 3], vec![2.0, 1.0, 0.0]).unwrap();
        let s = LabeledSample {
            x: sig(&[0.0]),
            y: 0,
        };
        let m = score_margin(&model, &s).unwrap();
        assert!((m - 2.0f64.sqrt()).abs() < 1e-12);

        let tied = Model::new(2, 1, vec![0.0; 2], vec![1.0, 1.0]).unwrap();
        assert_eq!(
            score_margin(&tied, &LabeledSample { x: sig(&[0.0]), y: 0 }).unwrap(),
            0.0
        );

        let wrong = Model::new(3, 1, vec![0.0; 3], vec![0.0, 2.0, 0.0]).unwrap();
        let m = score_margin(&wrong, &LabeledSample { x: sig(&[0.0]), y: 0 }).unwrap();
        assert!((m + 2.0 * 2.0f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn spectral_norm_trivials() {
        let eye = Model::new(2, 2, vec![1.0, 0.0, 0.0, 1.0], vec![0.0; 2]).unwrap();
        assert!((spectral_norm(&eye).unwrap() - 1.0).abs() < 1e-9);
        let diag = Model::new(2, 2, vec![3.0, 0.0, 0.0, 1.0], vec![0.0; 2]).unwrap();
        assert!((spectral_norm(&diag).unwrap() - 3.0).abs() < 1e-9);
        assert_eq!(spectral_norm(&Model::zeros(2, 4)).unwrap(), 0.0);
    }

    #[test]
    fn spectral_norm_matches_svd_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..5 {
            let (nc, dim) = (4, 64);
            let w: Vec<f64> = (0..nc * dim).map(|_| rng.gen::<f64>() - 0.5).collect();
            let model = Model::new(nc, dim, w.clone(), vec![0.0; nc]).unwrap();
            let got = spectral_norm(&model).unwrap();
            let mat = nalgebra::DMatrix::from_row_slice(nc, dim, &w);
            let expected = mat.svd(false, false).singular_values[0];
            assert!((got - expected).abs() / expected < 1e-8);
        }
    }

    #[test]
    fn stabilize_behaviour() {
        let small = Model::new(2, 2, vec![0.3, 0.0, 0.0, 0.2], vec![1.0, 2.0]).unwrap();
        assert_eq!(stabilize(&small).unwrap(), small);

        let big = Model::new(2, 2, vec![2.0, 0.0, 0.0, 1.0], vec![0.0; 2]).unwrap();
        let s = stabilize(&big).unwrap();
        assert!(spectral_norm(&s).unwrap() <= 1.0 + 1e-6);

        // stabilize is idempotent and argmax-preserving
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w: Vec<f64> = (0..3 * 5).map(|_| 4.0 * (rng.gen::<f64>() - 0.5)).collect();
        let b: Vec<f64> = (0..3).map(|_| rng.gen::<f64>()).collect();
        let m = Model::new(3, 5, w, b).unwrap();
        let s1 = stabilize(&m).unwrap();
        let s2 = stabilize(&s1).unwrap();
        for (a, b) in s1.weights().iter().zip(s2.weights()) {
            assert!((a - b).abs() < 1e-12);
        }
        for _ in 0..100 {
            let x = sig(&(0..5).map(|_| rng.gen::<f64>() - 0.5).collect::<Vec<_>>());
            assert_eq!(predict(&m, &x).unwrap(), predict(&s1, &x).unwrap());
        }
    }

    #[test]
    fn invariance_penalty_cases() {
        let rot = rotation_group(4, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let w: Vec<f64> = (0..2 * 16).map(|_| rng.gen::<f64>() - 0.5).collect();
        let model = Model::new(2, 16, w, vec![0.0; 2]).unwrap();
        let x = sig(&(0..16).map(|_| rng.gen::<f64>()).collect::<Vec<_>>());

        let id = TransformSet::identity_only(16);
        assert_eq!(invariance_penalty(&model, &x, &id).unwrap(), 0.0);

        // hand-summed oracle over the first two transforms
        let two = TransformSet::new(vec![rot.element(0).clone(), rot.element(1).clone()]).unwrap();
        let fx = forward(&model, &x).unwrap();
        let ftx = forward(&model, &apply(rot.element(1), &x).unwrap()).unwrap();
        let expected: f64 = fx.iter().zip(&ftx).map(|(a, b)| (a - b) * (a - b)).sum();
        let got = invariance_penalty(&model, &x, &two).unwrap();
        assert!((got - expected).abs() < 1e-12);
    }

    #[test]
    fn orbit_average_invariance() {
        let rot = rotation_group(4, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let w: Vec<f64> = (0..3 * 16).map(|_| rng.gen::<f64>() - 0.5).collect();
        let model = Model::new(3, 16, w, vec![0.1, 0.2, 0.3]).unwrap();
        let inv = orbit_average(&model, &rot).unwrap();
        for _ in 0..20 {
            let x = sig(&(0..16).map(|_| rng.gen::<f64>()).collect::<Vec<_>>());
            let fx = inv.forward(&x).unwrap();
            for t in rot.iter() {
                let ftx = inv.forward(&apply(t, &x).unwrap()).unwrap();
                for (a, b) in fx.iter().zip(&ftx) {
                    assert!((a - b).abs() <= 1e-9);
                }
            }
            // zero penalty at exact invariance
            let p: f64 = rot
                .iter()
                .map(|t| {
                    let ftx = inv.forward(&apply(t, &x).unwrap()).unwrap();
                    fx.iter().zip(&ftx).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
                })
                .sum();
            assert!(p <= 1e-15);
        }
    }

    #[test]
    fn orbit_average_rejects_non_group() {
        let tr = crate::transforms::translation_group(4, 1);
        let sub = TransformSet::new(vec![tr.element(0).clone(), tr.element(1).clone()]).unwrap();
        let model = Model::zeros(2, 4);
        assert!(orbit_average(&model, &sub).is_err());
    }

    #[test]
    fn orbit_average_on_fixed_point_equals_base() {
        let rot = rotation_group(16, 16).unwrap();
        let cross = gen_atom(&AtomSpec::canonical(AtomKind::Cross)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let w: Vec<f64> = (0..2 * 256).map(|_| rng.gen::<f64>() - 0.5).collect();
        let model = Model::new(2, 256, w, vec![0.0; 2]).unwrap();
        let inv = orbit_average(&model, &rot).unwrap();
        let a = forward(&model, &cross).unwrap();
        let b = inv.forward(&cross).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn identity_group_average_equals_base() {
        let model = Model::random_init(2, 4, 9);
        let id = TransformSet::identity_only(4);
        let inv = orbit_average(&model, &id).unwrap();
        let x = sig(&[0.1, 0.2, 0.3, 0.4]);
        assert_eq!(inv.forward(&x).unwrap(), forward(&model, &x).unwrap());
    }

    #[test]
    fn train_zero_epochs_returns_stabilized_init() {
        let data = PointSet::with_labels(
            vec![sig(&[0.0, 1.0]), sig(&[1.0, 0.0])],
            vec![0, 1],
        )
        .unwrap();
        let cfg = TrainConfig {
            epochs: 0,
            ..Default::default()
        };
        let m = train(&data, &cfg, None).unwrap();
        let init = stabilize(&Model::random_init(2, 2, cfg.seed)).unwrap();
        assert_eq!(m, init);
    }

    #[test]
    fn train_separates_two_points() {
        let data = PointSet::with_labels(
            vec![sig(&[1.0, 0.0]), sig(&[0.0, 1.0])],
            vec![0, 1],
        )
        .unwrap();
        let cfg = TrainConfig {
            epochs: 500,
            learning_rate: 1.0,
            weight_decay: 0.0,
            ..Default::default()
        };
        let m = train(&data, &cfg, None).unwrap();
        assert_eq!(predict(&m, data.point(0)).unwrap(), 0);
        assert_eq!(predict(&m, data.point(1)).unwrap(), 1);
    }

    #[test]
    fn training_with_regularizer_reduces_penalty() {
        use crate::atoms::gen_dataset;
        let rot = rotation_group(4, 4).unwrap();
        let specs = vec![
            AtomSpec {
                kind: AtomKind::Corner,
                width: 4,
                height: 4,
                normalize: true,
            },
            AtomSpec {
                kind: AtomKind::Cross,
                width: 4,
                height: 4,
                normalize: true,
            },
        ];
        let data = gen_dataset(&specs, &rot, 10, 0.05, 3).unwrap();
        let mean_penalty = |m: &Model| -> f64 {
            data.iter()
                .map(|x| invariance_penalty(m, x, &rot).unwrap())
                .sum::<f64>()
                / data.len() as f64
        };
        let init = Model::random_init(2, 16, 0);
        let before = mean_penalty(&init);
        let cfg = TrainConfig {
            epochs: 200,
            learning_rate: 0.01,
            weight_decay: 0.0,
            invariance_weight: 10.0,
            seed: 0,
            batch_size: None,
        };
        let after = mean_penalty(&train(&data, &cfg, Some(&rot)).unwrap());
        assert!(
            after * 10.0 <= before,
            "penalty before {before}, after {after}"
        );
    }

    #[test]
    fn gradient_check_small_cases() {
        let rot = rotation_group(4, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let model = Model::random_init(3, 16, 12);
        let batch: Vec<LabeledSample> = (0..4)
            .map(|i| LabeledSample {
                x: sig(&(0..16).map(|_| rng.gen::<f64>()).collect::<Vec<_>>()),
                y: i % 3,
            })
            .collect();
        for lam in [0.0, 1e-4, 1.0] {
            let err = gradient_check(&model, &batch, Some(&rot), lam, 1e-5).unwrap();
            assert!(err <= 1e-5, "lambda {lam}: rel err {err}");
        }
    }

    #[test]
    fn zero_model_bias_gradient_is_softmax_residual_mean() {
        let model = Model::zeros(2, 2);
        let batch = vec![
            LabeledSample {
                x: sig(&[1.0, 0.0]),
                y: 0,
            },
            LabeledSample {
                x: sig(&[0.0, 1.0]),
                y: 1,
            },
        ];
        let (_, gb) = gradient(&model, &batch, None, 0.0, 0.0).unwrap();
        // at W = 0 all probabilities are 1/2; residual mean is (1/2 - 1/2)
        assert!((gb[0] - 0.0).abs() < 1e-15);
        assert!((gb[1] - 0.0).abs() < 1e-15);
    }

    #[test]
    fn empirical_ge_cases() {
        let train_set = PointSet::with_labels(
            vec![sig(&[1.0, 0.0]), sig(&[0.0, 1.0])],
            vec![0, 1],
        )
        .unwrap();
        let model = Model::new(2, 2, vec![1.0, 0.0, 0.0, 1.0], vec![0.0; 2]).unwrap();
        let pf = |x: &Signal| predict(&model, x);
        assert_eq!(empirical_ge(pf, &train_set, &train_set).unwrap(), 0.0);

        // wrong on exactly 1 of 4 test points, perfect on train
        let test_set = PointSet::with_labels(
            vec![
                sig(&[1.0, 0.0]),
                sig(&[0.0, 1.0]),
                sig(&[1.0, 0.0]),
                sig(&[0.0, 1.0]),
            ],
            vec![0, 1, 0, 0],
        )
        .unwrap();
        let pf = |x: &Signal| predict(&model, x);
        assert_eq!(empirical_ge(pf, &train_set, &test_set).unwrap(), 0.25);
    }

    #[test]
    fn model_json_roundtrip() {
        let m = Model::random_init(3, 4, 77);
        let parsed = Model::from_json(&m.to_json()).unwrap();
        assert_eq!(m, parsed);
        assert!(Model::from_json("{}").is_err());
        assert!(Model::from_json("{\"n_classes\":2,\"dim\":2,\"weights\":[1.0],\"bias\":[0,0]}").is_err());
    }
}
