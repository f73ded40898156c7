//! From-scratch random forest (Gini splits, bootstrap bagging, seeded
//! feature subsampling) and macro-F1 scoring, plus the benchmark
//! property-prediction harness.
//!
//! Trees grow until pure or below two samples, with no depth cap. Splits are
//! midpoints between consecutive distinct values of a sampled feature
//! subset; ties prefer the lower feature index, then the lower threshold.
//! Samples go left when `value <= threshold`. All randomness derives from
//! per-tree seeds, so forests are reproducible regardless of how many
//! worker threads build them.

use rayon::prelude::*;

use crate::bbob::{evaluate_bbob, high_level_properties, make_problem};
use crate::error::{Error, Result};
use crate::features::{concat_features, ela_lite, latent_as_features, FeatureVector};
use crate::rng::{derive_seed, SplitMix64};
use crate::sampling::{normalize_values, rescale, sobol_points};
use crate::vae::{encode, ModelWeights};

/// Row-major feature matrix with integer class labels.
#[derive(Debug, Clone)]
pub struct LabeledDataset {
    x: Vec<f64>,
    rows: usize,
    cols: usize,
    y: Vec<usize>,
    pub feature_names: Vec<String>,
    pub class_names: Vec<String>,
}

impl LabeledDataset {
    pub fn new(
        x: Vec<f64>,
        cols: usize,
        y: Vec<usize>,
        feature_names: Vec<String>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        if cols == 0 || x.len() % cols != 0 || x.len() / cols != y.len() {
            return Err(Error::DimensionMismatch {
                context: "LabeledDataset",
                expected: cols * y.len(),
                actual: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput { context: "LabeledDataset" });
        }
        let classes = class_names.len();
        if y.iter().any(|&c| c >= classes) {
            return Err(Error::InvalidArgument {
                context: "LabeledDataset",
                message: "label outside the class set".into(),
            });
        }
        Ok(LabeledDataset { rows: y.len(), x, cols, y, feature_names, class_names })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn labels(&self) -> &[usize] {
        &self.y
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.x[r * self.cols..(r + 1) * self.cols]
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }
}

#[derive(Debug, Clone)]
enum Node {
    Split { feature: usize, threshold: f64, left: u32, right: u32 },
    Leaf { counts: Vec<usize> },
}

#[derive(Debug, Clone)]
pub struct DecisionTree {
    nodes: Vec<Node>,
    classes: usize,
}

impl DecisionTree {
    fn classify(&self, row: &[f64]) -> usize {
        let mut at = 0usize;
        loop {
            match &self.nodes[at] {
                Node::Split { feature, threshold, left, right } => {
                    at = if row[*feature] <= *threshold { *left as usize } else { *right as usize };
                }
                Node::Leaf { counts } => return majority(counts),
            }
        }
    }

    /// Threshold of the root split, when the root is a split.
    pub fn root_split(&self) -> Option<(usize, f64)> {
        match &self.nodes[0] {
            Node::Split { feature, threshold, .. } => Some((*feature, *threshold)),
            Node::Leaf { .. } => None,
        }
    }

    /// True when every leaf holds a single class.
    pub fn all_leaves_pure(&self) -> bool {
        self.nodes.iter().all(|n| match n {
            Node::Leaf { counts } => counts.iter().filter(|&&c| c > 0).count() <= 1,
            Node::Split { .. } => true,
        })
    }
}

fn majority(counts: &[usize]) -> usize {
    let mut best = 0usize;
    for (c, &count) in counts.iter().enumerate() {
        if count > counts[best] {
            best = c;
        }
    }
    best
}

/// How many features each split considers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureRule {
    Sqrt,
    All,
}

#[derive(Debug, Clone)]
pub struct ForestOptions {
    pub n_trees: usize,
    pub seed: u64,
    pub bootstrap: bool,
    pub feature_rule: FeatureRule,
}

impl ForestOptions {
    pub fn standard(n_trees: usize, seed: u64) -> Self {
        ForestOptions { n_trees, seed, bootstrap: true, feature_rule: FeatureRule::Sqrt }
    }
}

#[derive(Debug, Clone)]
pub struct ForestModel {
    pub trees: Vec<DecisionTree>,
    pub n_trees: usize,
    pub seed: u64,
    pub feature_rule: FeatureRule,
    cols: usize,
}

struct TreeBuilder<'a> {
    data: &'a LabeledDataset,
    rng: SplitMix64,
    per_split: usize,
    nodes: Vec<Node>,
}

impl<'a> TreeBuilder<'a> {
    fn class_counts(&self, indices: &[usize]) -> Vec<usize> {
        let mut counts = vec![0usize; self.data.num_classes()];
        for &i in indices {
            counts[self.data.y[i]] += 1;
        }
        counts
    }

    /// Sample `per_split` distinct features with a partial Fisher-Yates.
    fn sample_features(&mut self) -> Vec<usize> {
        let p = self.data.cols;
        let mut pool: Vec<usize> = (0..p).collect();
        for i in 0..self.per_split.min(p) {
            let j = i + self.rng.below(p - i);
            pool.swap(i, j);
        }
        pool.truncate(self.per_split.min(p));
        pool
    }

    fn best_split(&mut self, indices: &[usize]) -> Option<(usize, f64)> {
        let features = self.sample_features();
        let total = indices.len() as f64;
        let classes = self.data.num_classes();
        let parent_counts = self.class_counts(indices);

        let mut best: Option<(f64, usize, f64)> = None; // impurity, feature, threshold
        let mut sorted: Vec<(f64, usize)> = Vec::with_capacity(indices.len());
        for &f in &features {
            sorted.clear();
            sorted.extend(indices.iter().map(|&i| (self.data.row(i)[f], self.data.y[i])));
            sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

            let mut left = vec![0usize; classes];
            let mut right = parent_counts.clone();
            let mut left_n = 0f64;
            for w in 0..sorted.len() - 1 {
                let (value, class) = sorted[w];
                left[class] += 1;
                right[class] -= 1;
                left_n += 1.0;
                let next = sorted[w + 1].0;
                if next <= value {
                    continue; // not a boundary between distinct values
                }
                let right_n = total - left_n;
                let gini = |counts: &[usize], n: f64| -> f64 {
                    let mut acc = 1.0;
                    for &c in counts {
                        let p = c as f64 / n;
                        acc -= p * p;
                    }
                    acc
                };
                let impurity =
                    left_n / total * gini(&left, left_n) + right_n / total * gini(&right, right_n);
                let threshold = 0.5 * (value + next);
                let candidate = (impurity, f, threshold);
                best = match best {
                    None => Some(candidate),
                    Some(cur) => {
                        // strict improvement, then lower feature, then lower threshold
                        if candidate.0 < cur.0 - 1e-15
                            || ((candidate.0 - cur.0).abs() <= 1e-15
                                && (candidate.1, candidate.2) < (cur.1, cur.2))
                        {
                            Some(candidate)
                        } else {
                            Some(cur)
                        }
                    }
                };
            }
        }
        best.map(|(_, f, t)| (f, t))
    }

    fn grow(&mut self, indices: Vec<usize>) -> u32 {
        let counts = self.class_counts(&indices);
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if pure || indices.len() < 2 {
            self.nodes.push(Node::Leaf { counts });
            return (self.nodes.len() - 1) as u32;
        }
        let Some((feature, threshold)) = self.best_split(&indices) else {
            // all sampled features constant at this node
            self.nodes.push(Node::Leaf { counts });
            return (self.nodes.len() - 1) as u32;
        };
        let (left_idx, right_idx): (Vec<usize>, Vec<usize>) =
            indices.iter().partition(|&&i| self.data.row(i)[feature] <= threshold);
        if left_idx.is_empty() || right_idx.is_empty() {
            self.nodes.push(Node::Leaf { counts });
            return (self.nodes.len() - 1) as u32;
        }
        let slot = self.nodes.len();
        self.nodes.push(Node::Split { feature, threshold, left: 0, right: 0 });
        let left = self.grow(left_idx);
        let right = self.grow(right_idx);
        if let Node::Split { left: l, right: r, .. } = &mut self.nodes[slot] {
            *l = left;
            *r = right;
        }
        slot as u32
    }
}

fn build_tree(data: &LabeledDataset, opts: &ForestOptions, tree_index: usize) -> DecisionTree {
    let mut rng = SplitMix64::new(derive_seed(&[opts.seed, tree_index as u64]));
    let n = data.rows();
    let indices: Vec<usize> = if opts.bootstrap {
        (0..n).map(|_| rng.below(n)).collect()
    } else {
        (0..n).collect()
    };
    let per_split = match opts.feature_rule {
        FeatureRule::Sqrt => ((data.cols() as f64).sqrt().floor() as usize).max(1),
        FeatureRule::All => data.cols(),
    };
    let mut builder = TreeBuilder { data, rng, per_split, nodes: Vec::new() };
    builder.grow(indices);
    DecisionTree { nodes: builder.nodes, classes: data.num_classes() }
}

/// Train a forest with explicit options.
pub fn train_forest_opts(data: &LabeledDataset, opts: &ForestOptions) -> Result<ForestModel> {
    if data.rows() == 0 {
        return Err(Error::EmptyDataset);
    }
    let mut seen = vec![false; data.num_classes()];
    for &c in data.labels() {
        seen[c] = true;
    }
    if seen.iter().filter(|&&s| s).count() < 2 {
        return Err(Error::DegenerateData {
            message: "training data holds fewer than two classes".into(),
        });
    }
    if opts.n_trees == 0 {
        return Err(Error::InvalidArgument {
            context: "train_forest",
            message: "need at least one tree".into(),
        });
    }
    let trees: Vec<DecisionTree> = (0..opts.n_trees)
        .into_par_iter()
        .map(|t| build_tree(data, opts, t))
        .collect();
    Ok(ForestModel {
        trees,
        n_trees: opts.n_trees,
        seed: opts.seed,
        feature_rule: opts.feature_rule,
        cols: data.cols(),
    })
}

/// Standard forest: bootstrap bagging and sqrt-feature splits.
pub fn train_forest(data: &LabeledDataset, n_trees: usize, seed: u64) -> Result<ForestModel> {
    train_forest_opts(data, &ForestOptions::standard(n_trees, seed))
}

/// Majority vote over the trees' leaf-majority classes; ties resolve to the
/// lower class id.
pub fn predict(model: &ForestModel, x: &[f64], cols: usize) -> Result<Vec<usize>> {
    if cols != model.cols || x.len() % cols != 0 {
        return Err(Error::DimensionMismatch {
            context: "predict",
            expected: model.cols,
            actual: cols,
        });
    }
    let classes = model.trees.first().map_or(0, |t| t.classes);
    Ok(x.chunks_exact(cols)
        .map(|row| {
            let mut votes = vec![0usize; classes];
            for tree in &model.trees {
                votes[tree.classify(row)] += 1;
            }
            majority(&votes)
        })
        .collect())
}

/// Unweighted mean of per-class F1 scores. Classes absent from both the true
/// and predicted labels are excluded; a class that occurs but is never
/// predicted (or vice versa) contributes an F1 of 0.
pub fn macro_f1(y_true: &[usize], y_pred: &[usize]) -> Result<f64> {
    if y_true.len() != y_pred.len() {
        return Err(Error::DimensionMismatch {
            context: "macro_f1",
            expected: y_true.len(),
            actual: y_pred.len(),
        });
    }
    if y_true.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let classes = y_true.iter().chain(y_pred).max().unwrap() + 1;
    let mut tp = vec![0usize; classes];
    let mut fp = vec![0usize; classes];
    let mut fn_ = vec![0usize; classes];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        if t == p {
            tp[t] += 1;
        } else {
            fp[p] += 1;
            fn_[t] += 1;
        }
    }
    let mut sum = 0.0;
    let mut counted = 0usize;
    for c in 0..classes {
        if tp[c] + fp[c] + fn_[c] == 0 {
            continue; // absent everywhere: excluded from the average
        }
        let f1 = if tp[c] == 0 {
            0.0
        } else {
            let precision = tp[c] as f64 / (tp[c] + fp[c]) as f64;
            let recall = tp[c] as f64 / (tp[c] + fn_[c]) as f64;
            2.0 * precision * recall / (precision + recall)
        };
        sum += f1;
        counted += 1;
    }
    Ok(sum / counted as f64)
}

// ------------------------------------------------------- benchmark harness

/// Which high-level property a task predicts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskProperty {
    Multimodal,
    GlobalStructure,
    Funnel,
}

impl TaskProperty {
    pub fn as_str(self) -> &'static str {
        match self {
            TaskProperty::Multimodal => "multimodal",
            TaskProperty::GlobalStructure => "global_structure",
            TaskProperty::Funnel => "funnel",
        }
    }

    pub fn from_str(s: &str) -> Result<Self> {
        match s {
            "multimodal" => Ok(TaskProperty::Multimodal),
            "global_structure" | "global-structure" => Ok(TaskProperty::GlobalStructure),
            "funnel" => Ok(TaskProperty::Funnel),
            other => Err(Error::InvalidArgument {
                context: "task property",
                message: format!("unknown task {other:?}"),
            }),
        }
    }

    fn class_of(self, fid: usize) -> Result<usize> {
        let label = high_level_properties(fid)?;
        Ok(match self {
            TaskProperty::Multimodal => label.multimodal.class_id(),
            TaskProperty::GlobalStructure => label.global_structure.class_id(),
            TaskProperty::Funnel => label.funnel.class_id(),
        })
    }

    fn class_names(self) -> Vec<String> {
        match self {
            TaskProperty::Multimodal => {
                vec!["none".into(), "low".into(), "medium".into(), "high".into()]
            }
            TaskProperty::GlobalStructure => vec![
                "none".into(),
                "weak".into(),
                "medium".into(),
                "strong".into(),
                "deceptive".into(),
            ],
            TaskProperty::Funnel => vec!["yes".into(), "none".into()],
        }
    }
}

/// Which features feed the classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureSet {
    /// latent vector from a trained model (AE or VAE)
    Latent,
    /// the nine landscape features
    Ela,
    /// landscape features concatenated with the latent vector
    ElaLatent,
}

impl FeatureSet {
    pub fn from_str(s: &str) -> Result<Self> {
        match s {
            "ae" | "vae" | "latent" => Ok(FeatureSet::Latent),
            "ela" => Ok(FeatureSet::Ela),
            "ela+vae" | "ela+ae" | "ela+latent" => Ok(FeatureSet::ElaLatent),
            other => Err(Error::InvalidArgument {
                context: "featureset",
                message: format!("unknown featureset {other:?}"),
            }),
        }
    }

    pub fn needs_model(self) -> bool {
        !matches!(self, FeatureSet::Ela)
    }
}

/// Configuration of one property-classification task over the benchmark
/// suite: train on one instance range, validate on another.
#[derive(Debug, Clone)]
pub struct TaskSpec {
    pub dim: usize,
    pub m: usize,
    pub property: TaskProperty,
    pub featureset: FeatureSet,
    pub train_instances: (usize, usize),
    pub val_instances: (usize, usize),
}

impl TaskSpec {
    /// The published split: instances 1..=100 train, 101..=120 validate.
    pub fn standard(dim: usize, m: usize, property: TaskProperty, featureset: FeatureSet) -> Self {
        TaskSpec {
            dim,
            m,
            property,
            featureset,
            train_instances: (1, 100),
            val_instances: (101, 120),
        }
    }
}

/// Feature matrix over all 24 benchmark functions for an inclusive instance
/// range, on the `2^m`-point design rescaled to `[-5,5]^dim`. Returns the
/// row-major matrix, its width, the `(fid, instance)` case per row, and the
/// feature names.
pub fn benchmark_feature_matrix(
    dim: usize,
    m: usize,
    featureset: FeatureSet,
    model: Option<&ModelWeights>,
    instances: (usize, usize),
) -> Result<(Vec<f64>, usize, Vec<(usize, usize)>, Vec<String>)> {
    if featureset.needs_model() && model.is_none() {
        return Err(Error::Configuration {
            message: "featureset requires a trained model file".into(),
        });
    }
    let doe = sobol_points(m, dim)?;
    if let Some(mw) = model {
        if mw.n != doe.n() {
            return Err(Error::Incompatibility {
                message: format!("model expects input size {}, design has {}", mw.n, doe.n()),
            });
        }
    }
    let lower = vec![-5.0; dim];
    let upper = vec![5.0; dim];
    let points = rescale(&doe, &lower, &upper)?;

    let cases: Vec<(usize, usize)> = (1..=24)
        .flat_map(|fid| (instances.0..=instances.1).map(move |inst| (fid, inst)))
        .collect();
    let rows: Vec<FeatureVector> = cases
        .par_iter()
        .map(|&(fid, inst)| {
            let problem = make_problem(fid, inst, dim)?;
            let raw: Vec<f64> = points
                .chunks_exact(dim)
                .map(|row| evaluate_bbob(&problem, row))
                .collect::<Result<_>>()?;
            let landscape = normalize_values(&raw)?;
            match featureset {
                FeatureSet::Latent => {
                    let mw = model.expect("checked above");
                    Ok(latent_as_features(&encode(mw, &landscape)?))
                }
                FeatureSet::Ela => ela_lite(&doe, &landscape),
                FeatureSet::ElaLatent => {
                    let mw = model.expect("checked above");
                    let ela = ela_lite(&doe, &landscape)?;
                    let latent = latent_as_features(&encode(mw, &landscape)?);
                    concat_features(&ela, &latent)
                }
            }
        })
        .collect::<Result<_>>()?;

    let names: Vec<String> = rows[0].names().to_vec();
    let cols = names.len();
    let mut x = Vec::with_capacity(rows.len() * cols);
    for fv in rows {
        x.extend_from_slice(fv.values());
    }
    Ok((x, cols, cases, names))
}

/// Feature vectors and labels for an instance range of all 24 functions.
fn featurize_split(
    spec: &TaskSpec,
    model: Option<&ModelWeights>,
    instances: (usize, usize),
) -> Result<(Vec<f64>, usize, Vec<usize>, Vec<String>)> {
    let (x, cols, cases, names) =
        benchmark_feature_matrix(spec.dim, spec.m, spec.featureset, model, instances)?;
    let y: Vec<usize> =
        cases.iter().map(|&(fid, _)| spec.property.class_of(fid)).collect::<Result<_>>()?;
    Ok((x, cols, y, names))
}

/// Per-seed macro F1 scores and their mean for one task.
#[derive(Debug, Clone)]
pub struct TaskReport {
    pub per_seed: Vec<(u64, f64)>,
    pub mean: f64,
}

/// Run one classification task: featurize the train and validation splits,
/// train one forest per seed, and score validation macro F1.
pub fn run_task(
    spec: &TaskSpec,
    model: Option<&ModelWeights>,
    n_trees: usize,
    seeds: &[u64],
) -> Result<TaskReport> {
    if spec.featureset.needs_model() && model.is_none() {
        return Err(Error::Configuration {
            message: "featureset requires a trained model file".into(),
        });
    }
    if seeds.is_empty() {
        return Err(Error::InvalidArgument {
            context: "run_task",
            message: "need at least one seed".into(),
        });
    }
    let (train_x, cols, train_y, names) = featurize_split(spec, model, spec.train_instances)?;
    let (val_x, val_cols, val_y, _) = featurize_split(spec, model, spec.val_instances)?;
    debug_assert_eq!(cols, val_cols);
    let data = LabeledDataset::new(
        train_x,
        cols,
        train_y,
        names,
        spec.property.class_names(),
    )?;

    let mut per_seed = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let forest = train_forest(&data, n_trees, seed)?;
        let pred = predict(&forest, &val_x, cols)?;
        per_seed.push((seed, macro_f1(&val_y, &pred)?));
    }
    let mean = per_seed.iter().map(|(_, f)| f).sum::<f64>() / per_seed.len() as f64;
    Ok(TaskReport { per_seed, mean })
}
