//! Random forest of CART trees and stratified k-fold cross-validation.
//!
//! Trees split on axis-aligned thresholds chosen by Gini impurity, each on
//! a bootstrap resample with `⌈√d⌉` candidate features per node. All
//! randomness comes from per-tree and per-fold streams, so training a tree,
//! a forest or a fold never depends on what ran before it.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::grid::LabelGrid;
use crate::rng;

pub const DEFAULT_TREES: usize = 200;
pub const DEFAULT_FOLDS: usize = 5;
pub const MAX_DEPTH: usize = 32;
pub const MIN_SAMPLES_SPLIT: usize = 2;

/// Row-major feature matrix with one class id per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    dim: usize,
    features: Vec<f64>,
    labels: Vec<u32>,
}

impl Dataset {
    pub fn new(dim: usize, features: Vec<f64>, labels: Vec<u32>) -> Result<Self> {
        if dim == 0 || features.len() != dim * labels.len() {
            return Err(Error::InvalidDataset(format!(
                "{} values do not form {} rows of dimension {}",
                features.len(),
                labels.len(),
                dim
            )));
        }
        if !features.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidDataset("non-finite feature value".into()));
        }
        Ok(Self {
            dim,
            features,
            labels,
        })
    }

    pub fn from_rows<const D: usize>(rows: &[[f64; D]], labels: Vec<u32>) -> Result<Self> {
        Self::new(D, rows.iter().flatten().copied().collect(), labels)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    /// Sorted distinct class ids.
    pub fn classes(&self) -> Vec<u32> {
        let mut c = self.labels.clone();
        c.sort_unstable();
        c.dedup();
        c
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        let mut features = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            features.extend_from_slice(self.row(i));
        }
        Self {
            dim: self.dim,
            features,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    /// Keeps at most `cap` rows per class, chosen by a seeded shuffle; row
    /// order of the survivors is preserved.
    pub fn cap_per_class(&self, cap: usize, seed: u64) -> Self {
        self.subset(&self.cap_indices(cap, seed))
    }

    /// Row indices kept by [`Dataset::cap_per_class`], ascending.
    pub fn cap_indices(&self, cap: usize, seed: u64) -> Vec<usize> {
        let mut keep = Vec::new();
        for (k, class) in self.classes().into_iter().enumerate() {
            let mut idx: Vec<usize> = (0..self.len())
                .filter(|&i| self.labels[i] == class)
                .collect();
            if idx.len() > cap {
                idx.shuffle(&mut rng::stream(seed, rng::DOMAIN_SUBSAMPLE, k as u64));
                idx.truncate(cap);
            }
            keep.extend(idx);
        }
        keep.sort_unstable();
        keep
    }

    /// Fails unless there are at least two samples and two classes.
    pub fn check_trainable(&self) -> Result<()> {
        if self.len() < 2 {
            return Err(Error::InvalidDataset("need at least 2 samples".into()));
        }
        if self.classes().len() < 2 {
            return Err(Error::InvalidDataset("need at least 2 classes".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Node {
    Leaf {
        class: u32,
    },
    /// `x[feature] <= threshold` goes to `left`.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    nodes: Vec<Node>,
}

impl DecisionTree {
    /// Root is node 0.
    pub fn from_nodes(nodes: Vec<Node>) -> Result<Self> {
        let n = nodes.len();
        let ok = n > 0
            && nodes.iter().enumerate().all(|(i, node)| match node {
                Node::Leaf { .. } => true,
                Node::Split {
                    left,
                    right,
                    threshold,
                    ..
                } => *left > i && *right > i && *left < n && *right < n && !threshold.is_nan(),
            });
        if !ok {
            return Err(Error::InvalidDataset("malformed tree node table".into()));
        }
        Ok(Self { nodes })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn predict(&self, x: &[f64]) -> u32 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { class } => return class,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if x[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

struct TreeBuilder<'a> {
    data: &'a Dataset,
    /// Dense class index per row.
    class_of: Vec<usize>,
    classes: Vec<u32>,
    n_candidates: usize,
    nodes: Vec<Node>,
    sort_buf: Vec<(f64, usize)>,
}

impl TreeBuilder<'_> {
    fn counts(&self, rows: &[usize]) -> Vec<usize> {
        let mut counts = vec![0usize; self.classes.len()];
        for &r in rows {
            counts[self.class_of[r]] += 1;
        }
        counts
    }

    fn majority(&self, counts: &[usize]) -> u32 {
        let mut best = 0;
        for (k, &c) in counts.iter().enumerate() {
            if c > counts[best] {
                best = k;
            }
        }
        self.classes[best]
    }

    fn build<R: Rng>(&mut self, rows: &mut [usize], depth: usize, rng: &mut R) -> usize {
        let id = self.nodes.len();
        let counts = self.counts(rows);
        self.nodes.push(Node::Leaf {
            class: self.majority(&counts),
        });
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if pure || rows.len() < MIN_SAMPLES_SPLIT || depth >= MAX_DEPTH {
            return id;
        }
        let mut features = sample(rng, self.data.dim(), self.n_candidates).into_vec();
        features.sort_unstable();
        let Some((feature, threshold)) = self.best_split(rows, &features) else {
            return id;
        };
        let mut split = 0;
        for i in 0..rows.len() {
            if self.data.row(rows[i])[feature] <= threshold {
                rows.swap(i, split);
                split += 1;
            }
        }
        let (l, r) = rows.split_at_mut(split);
        let left = self.build(l, depth + 1, rng);
        let right = self.build(r, depth + 1, rng);
        self.nodes[id] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        id
    }

    /// Lowest weighted Gini impurity; ties go to the smaller feature, then
    /// the smaller threshold.
    fn best_split(&mut self, rows: &[usize], features: &[usize]) -> Option<(usize, f64)> {
        let n = rows.len();
        let total = self.counts(rows);
        let mut best: Option<(f64, usize, f64)> = None;
        for &f in features {
            self.sort_buf.clear();
            self.sort_buf.extend(
                rows.iter()
                    .map(|&r| (self.data.row(r)[f], self.class_of[r])),
            );
            self.sort_buf
                .sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let mut left = vec![0usize; total.len()];
            let (mut sq_left, mut sq_right) =
                (0.0f64, total.iter().map(|&c| (c * c) as f64).sum::<f64>());
            for i in 0..n - 1 {
                let (v, k) = self.sort_buf[i];
                let r = total[k] - left[k];
                sq_left += (2 * left[k] + 1) as f64;
                sq_right -= (2 * r - 1) as f64;
                left[k] += 1;
                let next = self.sort_buf[i + 1].0;
                if v == next {
                    continue;
                }
                let (nl, nr) = ((i + 1) as f64, (n - i - 1) as f64);
                // n * weighted Gini = nl (1 - Σp_l²) + nr (1 - Σp_r²)
                let impurity = (nl - sq_left / nl) + (nr - sq_right / nr);
                if best.is_none_or(|(b, _, _)| impurity < b) {
                    let mut threshold = v + (next - v) / 2.0;
                    if threshold >= next {
                        threshold = v;
                    }
                    best = Some((impurity, f, threshold));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }
}

/// Trains tree `index` of a forest seeded with `seed`, on a bootstrap
/// resample of `data`.
pub fn train_tree(data: &Dataset, seed: u64, index: usize) -> DecisionTree {
    let mut rng = rng::stream(seed, rng::DOMAIN_TREE, index as u64);
    let n = data.len();
    let mut rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
    let classes = data.classes();
    let class_of = data
        .labels
        .iter()
        .map(|l| classes.binary_search(l).unwrap_or(0))
        .collect();
    let d = data.dim();
    let n_candidates = ((d as f64).sqrt().ceil() as usize).clamp(1, d);
    let mut builder = TreeBuilder {
        data,
        class_of,
        classes,
        n_candidates,
        nodes: Vec::new(),
        sort_buf: Vec::new(),
    };
    builder.build(&mut rows, 0, &mut rng);
    DecisionTree {
        nodes: builder.nodes,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    trees: Vec<DecisionTree>,
    seed: u64,
    dim: usize,
}

impl ForestModel {
    /// Assembles a forest from trees trained elsewhere (e.g. in parallel).
    pub fn from_trees(trees: Vec<DecisionTree>, seed: u64, dim: usize) -> Result<Self> {
        if trees.is_empty() {
            return Err(Error::param("n_trees", "forest needs at least one tree"));
        }
        for t in &trees {
            if t.nodes
                .iter()
                .any(|n| matches!(n, Node::Split { feature, .. } if *feature >= dim))
            {
                return Err(Error::FeatureDimension {
                    expected: dim,
                    got: dim + 1,
                });
            }
        }
        Ok(Self { trees, seed, dim })
    }

    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Majority vote; ties go to the smallest class id.
    pub fn predict(&self, x: &[f64]) -> Result<u32> {
        if x.len() != self.dim {
            return Err(Error::FeatureDimension {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(majority_vote(self.trees.iter().map(|t| t.predict(x))))
    }

    pub fn accuracy(&self, data: &Dataset) -> Result<f64> {
        if data.is_empty() {
            return Err(Error::InvalidDataset("empty evaluation set".into()));
        }
        let mut correct = 0usize;
        for i in 0..data.len() {
            if self.predict(data.row(i))? == data.labels[i] {
                correct += 1;
            }
        }
        Ok(correct as f64 / data.len() as f64)
    }
}

pub fn majority_vote(votes: impl IntoIterator<Item = u32>) -> u32 {
    let mut tally = BTreeMap::new();
    for v in votes {
        *tally.entry(v).or_insert(0usize) += 1;
    }
    let mut best = (0u32, 0usize);
    for (class, count) in tally {
        if count > best.1 {
            best = (class, count);
        }
    }
    best.0
}

pub fn train_forest(data: &Dataset, n_trees: usize, seed: u64) -> Result<ForestModel> {
    data.check_trainable()?;
    let trees = (0..n_trees).map(|i| train_tree(data, seed, i)).collect();
    ForestModel::from_trees(trees, seed, data.dim())
}

pub fn predict(model: &ForestModel, x: &[f64]) -> Result<u32> {
    model.predict(x)
}

/// Fold assignment per row: each class is shuffled and dealt round-robin,
/// continuing where the previous class stopped.
pub fn stratified_folds(labels: &[u32], k: usize, seed: u64) -> Result<Vec<usize>> {
    let groups: Vec<u32> = (0..labels.len() as u32).collect();
    assign_folds(labels, &groups, k, seed, "samples")
}

/// Like [`stratified_folds`] but keeps every group (e.g. one reference
/// area) inside a single fold.
pub fn group_folds(labels: &[u32], groups: &[u32], k: usize, seed: u64) -> Result<Vec<usize>> {
    if groups.len() != labels.len() {
        return Err(Error::InvalidDataset(
            "group and label counts differ".into(),
        ));
    }
    assign_folds(labels, groups, k, seed, "regions")
}

fn assign_folds(
    labels: &[u32],
    groups: &[u32],
    k: usize,
    seed: u64,
    unit: &str,
) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(Error::param("k", "need at least 2 folds"));
    }
    // (class, group) pairs in first-seen order, bucketed by class
    let mut by_class: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
    let mut group_class: BTreeMap<u32, u32> = BTreeMap::new();
    for (&l, &g) in labels.iter().zip(groups) {
        match group_class.get(&g) {
            Some(&c) if c != l => {
                return Err(Error::InvalidDataset(format!(
                    "group {} spans classes {} and {}",
                    g, c, l
                )));
            }
            Some(_) => {}
            None => {
                group_class.insert(g, l);
                by_class.entry(l).or_default().push(g);
            }
        }
    }
    let mut fold_of_group = BTreeMap::new();
    let mut next = 0usize;
    for (ci, (class, mut members)) in by_class.into_iter().enumerate() {
        if members.len() < k {
            return Err(Error::InvalidDataset(format!(
                "class {} has {} {}, fewer than k = {}",
                class,
                members.len(),
                unit,
                k
            )));
        }
        members.shuffle(&mut rng::stream(seed, rng::DOMAIN_FOLDS, ci as u64));
        for g in members {
            fold_of_group.insert(g, next % k);
            next += 1;
        }
    }
    Ok(groups.iter().map(|g| fold_of_group[g]).collect())
}

/// 4-connected components of equal labels, numbered in raster order of
/// their first pixel. Used as groups for fold-by-region splits.
pub fn label_regions(labels: &LabelGrid) -> Vec<u32> {
    let (h, w) = labels.dims();
    let mut region = vec![u32::MAX; h * w];
    let mut stack = Vec::new();
    let mut next = 0u32;
    for start in 0..h * w {
        if region[start] != u32::MAX {
            continue;
        }
        let class = labels.data()[start];
        region[start] = next;
        stack.push(start);
        while let Some(i) = stack.pop() {
            let (r, c) = (i / w, i % w);
            let mut visit = |j: usize| {
                if region[j] == u32::MAX && labels.data()[j] == class {
                    region[j] = next;
                    stack.push(j);
                }
            };
            if r > 0 {
                visit(i - w);
            }
            if r + 1 < h {
                visit(i + w);
            }
            if c > 0 {
                visit(i - 1);
            }
            if c + 1 < w {
                visit(i + 1);
            }
        }
        next += 1;
    }
    region
}

/// Forest seed used for fold `fold` of a cross-validation seeded with `seed`.
pub fn fold_seed(seed: u64, fold: usize) -> u64 {
    rng::mix64(seed ^ rng::mix64(fold as u64 + 1))
}

/// Held-out accuracy per fold, training each fold's forest with `train`
/// (called as `train(train_set, fold_seed)`).
pub fn cross_validate<F>(
    data: &Dataset,
    folds: &[usize],
    k: usize,
    seed: u64,
    mut train: F,
) -> Result<Vec<f64>>
where
    F: FnMut(&Dataset, u64) -> Result<ForestModel>,
{
    if folds.len() != data.len() {
        return Err(Error::InvalidDataset(
            "fold and sample counts differ".into(),
        ));
    }
    let mut accuracies = Vec::with_capacity(k);
    for fold in 0..k {
        let (test, train_idx): (Vec<usize>, Vec<usize>) =
            (0..data.len()).partition(|&i| folds[i] == fold);
        let model = train(&data.subset(&train_idx), fold_seed(seed, fold))?;
        accuracies.push(model.accuracy(&data.subset(&test))?);
    }
    Ok(accuracies)
}

/// Mean held-out accuracy of stratified k-fold cross-validation.
pub fn kfold_accuracy(data: &Dataset, k: usize, n_trees: usize, seed: u64) -> Result<f64> {
    let folds = stratified_folds(data.labels(), k, seed)?;
    let acc = cross_validate(data, &folds, k, seed, |d, s| train_forest(d, n_trees, s))?;
    Ok(acc.iter().sum::<f64>() / k as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn separable() -> Dataset {
        Dataset::from_rows(&[[0.0], [0.1], [0.9], [1.0]], vec![0, 0, 1, 1]).unwrap()
    }

    /// Two Gaussian-ish blobs without a random number generator.
    fn blobs(n: usize, overlap: f64) -> Dataset {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n {
            let a = (i as f64 * 0.618).fract();
            let b = (i as f64 * 0.414 + 0.3).fract();
            let class = (i % 2) as u32;
            let shift = if class == 1 { 1.0 - overlap } else { 0.0 };
            rows.push([a + shift, b, (a * b).sin()]);
            labels.push(class);
        }
        Dataset::from_rows(&rows, labels).unwrap()
    }

    #[test]
    fn separable_training_accuracy() {
        let model = train_forest(&separable(), 25, 1).unwrap();
        assert_eq!(model.accuracy(&separable()).unwrap(), 1.0);
        assert_eq!(model.predict(&[0.1]).unwrap(), 0);
        assert_eq!(model.predict(&[0.9]).unwrap(), 1);
        assert!(model.predict(&[0.1, 0.2]).is_err());
    }

    #[test]
    fn one_sample_per_class_is_legal() {
        let data = Dataset::from_rows(&[[0.0, 1.0], [1.0, 0.0]], vec![3, 7]).unwrap();
        let model = train_forest(&data, 10, 4).unwrap();
        for t in model.trees() {
            assert!(t.nodes().iter().all(|n| match n {
                Node::Leaf { class } => *class == 3 || *class == 7,
                Node::Split { feature, .. } => *feature < 2,
            }));
        }
    }

    #[test]
    fn single_class_rejected() {
        let data = Dataset::from_rows(&[[0.0], [1.0]], vec![1, 1]).unwrap();
        assert!(matches!(
            train_forest(&data, 3, 0),
            Err(Error::InvalidDataset(_))
        ));
    }

    #[test]
    fn vote_ties_go_to_smallest_class() {
        let votes = core::iter::repeat_n(1u32, 100).chain(core::iter::repeat_n(0u32, 100));
        assert_eq!(majority_vote(votes), 0);
        assert_eq!(majority_vote([5, 5, 2]), 5);
        let leaf = |class| DecisionTree::from_nodes(vec![Node::Leaf { class }]).unwrap();
        let mut trees = vec![leaf(1); 100];
        trees.extend(vec![leaf(0); 100]);
        let model = ForestModel::from_trees(trees, 0, 1).unwrap();
        assert_eq!(model.predict(&[0.5]).unwrap(), 0);
        let unanimous = ForestModel::from_trees(vec![leaf(4); 3], 0, 1).unwrap();
        assert_eq!(unanimous.predict(&[0.0]).unwrap(), 4);
    }

    #[test]
    fn tree_respects_depth_and_features() {
        let data = blobs(400, 0.9);
        let tree = train_tree(&data, 3, 0);
        assert!(tree.depth() <= MAX_DEPTH);
        assert!(tree
            .nodes()
            .iter()
            .all(|n| !matches!(n, Node::Split { feature, .. } if *feature >= 3)));
    }

    #[test]
    fn training_is_deterministic() {
        let data = blobs(200, 0.7);
        assert_eq!(
            train_forest(&data, 10, 9).unwrap(),
            train_forest(&data, 10, 9).unwrap()
        );
        assert_ne!(
            train_forest(&data, 10, 9).unwrap(),
            train_forest(&data, 10, 10).unwrap()
        );
        // tree i does not depend on how many trees precede it
        assert_eq!(
            train_forest(&data, 10, 9).unwrap().trees()[7],
            train_tree(&data, 9, 7)
        );
    }

    #[test]
    fn stratified_folds_balance_classes() {
        let labels: Vec<u32> = (0..103).map(|i| if i < 60 { 0 } else { 1 }).collect();
        let folds = stratified_folds(&labels, 5, 2).unwrap();
        for f in 0..5 {
            let zeros = (0..103)
                .filter(|&i| folds[i] == f && labels[i] == 0)
                .count();
            let ones = (0..103)
                .filter(|&i| folds[i] == f && labels[i] == 1)
                .count();
            assert_eq!(zeros, 12);
            assert!((8..=9).contains(&ones));
        }
        assert!(stratified_folds(&[0, 0, 0, 1, 1], 3, 0).is_err());
        assert!(stratified_folds(&labels, 1, 0).is_err());
    }

    #[test]
    fn group_folds_keep_groups_together() {
        let labels = [0, 0, 0, 0, 1, 1, 1, 1];
        let groups = [10, 10, 11, 11, 20, 20, 21, 21];
        let folds = group_folds(&labels, &groups, 2, 5).unwrap();
        for pair in folds.chunks(2) {
            assert_eq!(pair[0], pair[1]);
        }
        assert!(group_folds(&labels, &groups, 3, 5).is_err());
        assert!(group_folds(&[0, 1], &[1, 1], 2, 0).is_err());
    }

    #[test]
    fn separable_cross_validation_is_perfect() {
        let rows: Vec<[f64; 2]> = (0..40)
            .map(|i| [if i % 2 == 0 { -1.0 } else { 1.0 } * (1.0 + i as f64), 0.5])
            .collect();
        let labels = (0..40).map(|i| (i % 2) as u32).collect();
        let data = Dataset::from_rows(&rows, labels).unwrap();
        for k in [2, 5] {
            assert_eq!(kfold_accuracy(&data, k, 20, 3).unwrap(), 1.0);
        }
    }

    #[test]
    fn label_regions_split_disconnected_areas() {
        let labels = crate::Grid::new(3, 3, vec![0, 1, 0, 0, 1, 1, 1, 0, 0]).unwrap();
        assert_eq!(label_regions(&labels), vec![0, 1, 2, 0, 1, 1, 3, 4, 4]);
    }

    #[test]
    fn cap_per_class_is_deterministic() {
        let data = blobs(100, 0.5);
        let capped = data.cap_per_class(10, 1);
        assert_eq!(capped.len(), 20);
        assert_eq!(capped, data.cap_per_class(10, 1));
        assert_eq!(data.cap_per_class(1000, 1), data);
    }
}
