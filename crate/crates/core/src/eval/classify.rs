//! Logistic-regression node classification on normalized embeddings.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Result, SmfError};
use crate::io::{load_labels, LabelSet, NodeVectors};

const SPLIT_ATTEMPTS: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassifierConfig {
    /// Weight of `½‖W‖²` next to the summed log-loss; the bias is not penalized.
    pub penalty: f64,
    pub max_epochs: usize,
    pub tol: f64,
    pub runs: usize,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            penalty: 1.0,
            max_epochs: 500,
            tol: 1e-6,
            runs: 10,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClassifierKind {
    /// Softmax over classes; one label per node.
    Multinomial,
    /// Independent sigmoid per class, thresholded at 0.5.
    OneVsRest,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledSplit {
    /// Indices into the labelled sample list.
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub train_fraction: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassificationReport {
    pub train_fraction: f64,
    pub kind: ClassifierKind,
    /// Mean over `runs`.
    pub micro_f1: f64,
    pub runs: Vec<f64>,
}

/// Dataset ready for training: normalized features and per-sample classes.
struct Samples {
    x: DMatrix<f64>,
    classes: Vec<Vec<usize>>,
    n_classes: usize,
}

fn prepare(vectors: &NodeVectors, labels: &LabelSet) -> Result<Samples> {
    let index = vectors.index();
    let dim = vectors.dim();
    let mut x = DMatrix::zeros(labels.nodes.len(), dim + 1);
    let mut classes = Vec::with_capacity(labels.nodes.len());
    for (i, (node, cls)) in labels.nodes.iter().enumerate() {
        let &row = index
            .get(node.as_str())
            .ok_or_else(|| SmfError::UnknownLabel(node.clone()))?;
        let v = vectors.data.row(row);
        let norm = v.norm();
        if norm > 0.0 {
            x.view_mut((i, 0), (1, dim)).copy_from(&(v / norm));
        }
        x[(i, dim)] = 1.0;
        classes.push(cls.clone());
    }
    Ok(Samples {
        x,
        classes,
        n_classes: labels.class_count(),
    })
}

/// Per-class shuffled split keyed on each sample's first class.
pub fn stratified_split(
    classes: &[Vec<usize>],
    n_classes: usize,
    train_fraction: f64,
    seed: u64,
) -> Result<LabeledSplit> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(SmfError::InvalidArgument(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    if classes.iter().any(Vec::is_empty) {
        return Err(SmfError::InvalidArgument("a labelled node has no class".into()));
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, c) in classes.iter().enumerate() {
        groups.entry(c[0]).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..SPLIT_ATTEMPTS {
        let mut train = Vec::new();
        let mut test = Vec::new();
        for members in groups.values() {
            let mut members = members.clone();
            members.shuffle(&mut rng);
            let take = (train_fraction * members.len() as f64).round() as usize;
            train.extend_from_slice(&members[..take]);
            test.extend_from_slice(&members[take..]);
        }
        let mut seen = vec![false; n_classes];
        for &i in &train {
            for &c in &classes[i] {
                seen[c] = true;
            }
        }
        if seen.iter().all(|&s| s) && !test.is_empty() {
            train.sort_unstable();
            test.sort_unstable();
            return Ok(LabeledSplit {
                train,
                test,
                train_fraction,
                seed,
            });
        }
    }
    Err(SmfError::InvalidArgument(format!(
        "no split with every class in training after {SPLIT_ATTEMPTS} attempts (train fraction {train_fraction})"
    )))
}

/// Objective (mean log-loss plus ridge) and its gradient at `theta`.
fn objective(
    kind: ClassifierKind,
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    theta: &DMatrix<f64>,
    penalty: f64,
) -> (f64, DMatrix<f64>) {
    let n = x.nrows() as f64;
    let mut probs = x * theta;
    let mut loss = 0.0;
    match kind {
        ClassifierKind::Multinomial => {
            for mut row in probs.row_iter_mut() {
                let max = row.max();
                let lse = max + row.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
                row.apply(|z| *z = (*z - lse).exp());
                loss += lse;
            }
            loss -= (x * theta).component_mul(y).sum();
        }
        ClassifierKind::OneVsRest => {
            for (z, t) in probs.iter_mut().zip(y.iter()) {
                // log(1 + e^z) − t z, computed stably
                let softplus = if *z > 0.0 { *z + (-*z).exp().ln_1p() } else { z.exp().ln_1p() };
                loss += softplus - t * *z;
                *z = 1.0 / (1.0 + (-*z).exp());
            }
        }
    }
    let weights = theta.rows(0, theta.nrows() - 1);
    loss += 0.5 * penalty * weights.norm_squared();
    let mut grad = x.tr_mul(&(probs - y));
    let rows = grad.nrows() - 1;
    let mut grad_w = grad.rows_mut(0, rows);
    grad_w += weights * penalty;
    (loss / n, grad / n)
}

fn fit(kind: ClassifierKind, x: &DMatrix<f64>, y: &DMatrix<f64>, cfg: &ClassifierConfig) -> DMatrix<f64> {
    let mut theta = DMatrix::zeros(x.ncols(), y.ncols());
    let (mut f, mut g) = objective(kind, x, y, &theta, cfg.penalty);
    let mut step = 1.0;
    for _ in 0..cfg.max_epochs {
        let g_sq = g.norm_squared();
        if g_sq.sqrt() < cfg.tol {
            break;
        }
        // Armijo backtracking from a step slightly larger than the last one
        step *= 2.0;
        let (next, f_next, g_next) = loop {
            let cand = &theta - &g * step;
            let (fc, gc) = objective(kind, x, y, &cand, cfg.penalty);
            if fc <= f - 0.5 * step * g_sq || step < 1e-12 {
                break (cand, fc, gc);
            }
            step *= 0.5;
        };
        let decrease = f - f_next;
        theta = next;
        f = f_next;
        g = g_next;
        if decrease.abs() <= cfg.tol * f.abs().max(1.0) {
            break;
        }
    }
    theta
}

fn predict(kind: ClassifierKind, x: &DMatrix<f64>, theta: &DMatrix<f64>) -> Vec<Vec<usize>> {
    let scores = x * theta;
    scores
        .row_iter()
        .map(|row| match kind {
            ClassifierKind::Multinomial => {
                let mut best = 0;
                for (c, &v) in row.iter().enumerate() {
                    if v > row[best] {
                        best = c;
                    }
                }
                vec![best]
            }
            // sigmoid(z) > 0.5 ⇔ z > 0
            ClassifierKind::OneVsRest => (0..row.len()).filter(|&c| row[c] > 0.0).collect(),
        })
        .collect()
}

/// Micro-averaged F1 over predicted versus true class sets.
pub fn micro_f1(truth: &[Vec<usize>], predicted: &[Vec<usize>]) -> f64 {
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for (t, p) in truth.iter().zip(predicted) {
        let hit = p.iter().filter(|c| t.contains(c)).count();
        tp += hit;
        fp += p.len() - hit;
        fn_ += t.len() - hit;
    }
    if tp == 0 {
        return 0.0;
    }
    2.0 * tp as f64 / (2 * tp + fp + fn_) as f64
}

fn run_once(s: &Samples, kind: ClassifierKind, split: &LabeledSplit, cfg: &ClassifierConfig) -> f64 {
    let x_train = s.x.select_rows(split.train.iter());
    let x_test = s.x.select_rows(split.test.iter());
    let mut y = DMatrix::zeros(split.train.len(), s.n_classes);
    for (r, &i) in split.train.iter().enumerate() {
        for &c in &s.classes[i] {
            y[(r, c)] = 1.0;
        }
    }
    let theta = fit(kind, &x_train, &y, cfg);
    let predicted = predict(kind, &x_test, &theta);
    let truth: Vec<Vec<usize>> = split.test.iter().map(|&i| s.classes[i].clone()).collect();
    micro_f1(&truth, &predicted)
}

/// Micro-F1 averaged over `cfg.runs` stratified splits; run `r` is seeded
/// with `seed + r`.
pub fn classify(
    vectors: &NodeVectors,
    labels: &LabelSet,
    train_fraction: f64,
    seed: u64,
    cfg: &ClassifierConfig,
) -> Result<ClassificationReport> {
    if cfg.runs == 0 {
        return Err(SmfError::InvalidArgument("runs must be ≥ 1".into()));
    }
    let samples = prepare(vectors, labels)?;
    let kind = if labels.is_multi_label() {
        ClassifierKind::OneVsRest
    } else {
        ClassifierKind::Multinomial
    };
    let splits = (0..cfg.runs as u64)
        .map(|r| stratified_split(&samples.classes, samples.n_classes, train_fraction, seed.wrapping_add(r)))
        .collect::<Result<Vec<_>>>()?;
    let runs: Vec<f64> = splits
        .par_iter()
        .map(|split| run_once(&samples, kind, split, cfg))
        .collect();
    Ok(ClassificationReport {
        train_fraction,
        kind,
        micro_f1: runs.iter().sum::<f64>() / runs.len() as f64,
        runs,
    })
}

pub fn classify_file(
    vectors: &NodeVectors,
    labels_path: impl AsRef<Path>,
    train_fraction: f64,
    seed: u64,
    cfg: &ClassifierConfig,
) -> Result<ClassificationReport> {
    let labels = load_labels(labels_path)?;
    classify(vectors, &labels, train_fraction, seed, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn synthetic(n: usize, seed: u64, separable: bool) -> (NodeVectors, LabelSet) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut labels = Vec::new();
        let mut data = Vec::new();
        let mut nodes = Vec::new();
        for i in 0..n {
            let class = i % 2;
            let centre = if class == 0 { 1.0 } else { -1.0 };
            data.push(centre + rng.gen_range(-0.3..0.3));
            data.push(rng.gen_range(-1.0..1.0));
            let shown = if separable { class } else { rng.gen_range(0..2) };
            labels.push(format!("n{i}"));
            nodes.push((format!("n{i}"), vec![shown]));
        }
        (
            NodeVectors {
                labels,
                data: DMatrix::from_row_slice(n, 2, &data),
            },
            LabelSet {
                nodes,
                class_names: vec!["a".into(), "b".into()],
            },
        )
    }

    #[test]
    fn separable_classes_score_one() {
        let (v, l) = synthetic(200, 1, true);
        let rep = classify(&v, &l, 0.5, 7, &ClassifierConfig::default()).unwrap();
        assert_eq!(rep.kind, ClassifierKind::Multinomial);
        assert_eq!(rep.micro_f1, 1.0);
    }

    #[test]
    fn shuffled_labels_are_chance() {
        let (v, l) = synthetic(2000, 2, false);
        let rep = classify(&v, &l, 0.5, 3, &ClassifierConfig::default()).unwrap();
        assert!((rep.micro_f1 - 0.5).abs() <= 0.05, "{}", rep.micro_f1);
    }

    #[test]
    fn deterministic_per_seed() {
        let (v, l) = synthetic(300, 4, false);
        let cfg = ClassifierConfig::default();
        assert_eq!(
            classify(&v, &l, 0.3, 11, &cfg).unwrap(),
            classify(&v, &l, 0.3, 11, &cfg).unwrap()
        );
    }

    #[test]
    fn unknown_node_is_named() {
        let (v, mut l) = synthetic(10, 5, true);
        l.nodes.push(("ghost".into(), vec![0]));
        let err = classify(&v, &l, 0.5, 0, &ClassifierConfig::default()).unwrap_err();
        assert!(err.to_string().contains("ghost"));
    }

    #[test]
    fn split_is_stratified_and_disjoint() {
        let classes: Vec<Vec<usize>> = (0..103).map(|i| vec![usize::from(i % 3 == 0)]).collect();
        let s = stratified_split(&classes, 2, 0.3, 9).unwrap();
        assert_eq!(s.train.len() + s.test.len(), 103);
        assert!(s.train.iter().all(|i| !s.test.contains(i)));
        for c in 0..2 {
            let total = classes.iter().filter(|v| v[0] == c).count() as f64;
            let in_train = s.train.iter().filter(|&&i| classes[i][0] == c).count() as f64;
            assert!((in_train - 0.3 * total).abs() <= 1.0);
        }
    }

    #[test]
    fn class_missing_from_training_is_an_error() {
        // a singleton class cannot reach training at 10%
        let mut classes: Vec<Vec<usize>> = (0..20).map(|_| vec![0]).collect();
        classes.push(vec![1]);
        assert!(stratified_split(&classes, 2, 0.1, 0).is_err());
    }

    #[test]
    fn micro_f1_counts() {
        let truth = vec![vec![0, 1], vec![2]];
        let pred = vec![vec![0], vec![1, 2]];
        // tp 2, fp 1, fn 1
        assert!((micro_f1(&truth, &pred) - 4.0 / 6.0).abs() < 1e-12);
        assert_eq!(micro_f1(&truth, &[vec![], vec![]]), 0.0);
    }

    #[test]
    fn one_vs_rest_for_multi_label() {
        let n = 120;
        let mut data = Vec::new();
        let mut nodes = Vec::new();
        for i in 0..n {
            let a = i % 2 == 0;
            let b = i % 3 == 0;
            data.extend_from_slice(&[if a { 1.0 } else { -1.0 }, if b { 1.0 } else { -1.0 }, 0.5]);
            let mut cls = Vec::new();
            if a {
                cls.push(0);
            }
            if b {
                cls.push(1);
            }
            if cls.is_empty() {
                cls.push(2);
            }
            nodes.push((format!("{i}"), cls));
        }
        let v = NodeVectors {
            labels: (0..n).map(|i| i.to_string()).collect(),
            data: DMatrix::from_row_slice(n, 3, &data),
        };
        let l = LabelSet {
            nodes,
            class_names: vec!["a".into(), "b".into(), "c".into()],
        };
        let rep = classify(&v, &l, 0.5, 1, &ClassifierConfig::default()).unwrap();
        assert_eq!(rep.kind, ClassifierKind::OneVsRest);
        assert!(rep.micro_f1 > 0.9, "{}", rep.micro_f1);
    }
}
