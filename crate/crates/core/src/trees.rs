//! CART decision-tree core shared by the random forest (classification,
//! Gini) and the gradient booster (regression on residuals, squared error).
//!
//! Every node stores its cover (training rows reaching it); the explanation
//! code relies on those statistics, so they are part of the serialized form.

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    Gini,
    SquaredError,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSubsample {
    All,
    Sqrt,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TreeConfig {
    /// `None` grows to purity.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub feature_subsample: FeatureSubsample,
    pub criterion: Criterion,
    pub rng_seed: u64,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig {
            max_depth: None,
            min_samples_split: 2,
            feature_subsample: FeatureSubsample::All,
            criterion: Criterion::Gini,
            rng_seed: 0,
        }
    }
}

/// Arena node; the root sits at index 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TreeNode {
    Internal { feature: usize, threshold: f64, cover: usize, left: usize, right: usize },
    Leaf { value: f64, cover: usize },
}

impl TreeNode {
    pub fn cover(&self) -> usize {
        match self {
            TreeNode::Internal { cover, .. } | TreeNode::Leaf { cover, .. } => *cover,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub n_features: usize,
    pub nodes: Vec<TreeNode>,
}

impl Tree {
    pub fn root(&self) -> &TreeNode {
        &self.nodes[0]
    }

    /// Longest root-to-leaf path, counting edges.
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], i: usize) -> usize {
            match &nodes[i] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Internal { left, right, .. } => {
                    1 + walk(nodes, *left).max(walk(nodes, *right))
                }
            }
        }
        walk(&self.nodes, 0)
    }

    /// Cover bookkeeping must be consistent for the explanation algorithms.
    pub fn validate_covers(&self) -> Result<()> {
        for (i, node) in self.nodes.iter().enumerate() {
            if node.cover() == 0 {
                return Err(Error::MissingCover(format!("node {i} has zero cover")));
            }
            if let TreeNode::Internal { cover, left, right, .. } = node {
                let sum = self.nodes[*left].cover() + self.nodes[*right].cover();
                if sum != *cover {
                    return Err(Error::MissingCover(format!(
                        "node {i}: child covers {sum} != parent cover {cover}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Gini impurity of a binary label set: `1 - p0^2 - p1^2`.
pub fn gini(labels: &[u8]) -> Result<f64> {
    if labels.is_empty() {
        return Err(Error::InvalidInput("gini of an empty label set".into()));
    }
    let ones = labels.iter().filter(|&&l| l == 1).count();
    Ok(gini_from_counts(ones, labels.len()))
}

fn gini_from_counts(ones: usize, n: usize) -> f64 {
    let p1 = ones as f64 / n as f64;
    let p0 = (n - ones) as f64 / n as f64;
    1.0 - p0 * p0 - p1 * p1
}

fn variance_from_sums(sum: f64, sum_sq: f64, n: usize) -> f64 {
    let n = n as f64;
    let mean = sum / n;
    (sum_sq / n - mean * mean).max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    pub impurity_decrease: f64,
}

/// Best (feature, threshold) over the candidate features, maximizing the
/// weighted impurity decrease. Thresholds are midpoints of consecutive
/// distinct sorted values. Ties break to the lowest feature index, then the
/// lowest threshold; `None` means no split decreases impurity.
pub fn best_split(
    x: &[Vec<f64>],
    y: &[f64],
    rows: &[usize],
    candidate_features: &[usize],
    criterion: Criterion,
) -> Option<Split> {
    let n = rows.len();
    if n < 2 {
        return None;
    }

    let parent_impurity = node_impurity(y, rows, criterion);
    if parent_impurity <= 0.0 {
        return None;
    }

    let mut candidates: Vec<usize> = candidate_features.to_vec();
    candidates.sort_unstable();
    candidates.dedup();

    let mut best: Option<Split> = None;
    let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(n);
    for &feature in &candidates {
        pairs.clear();
        pairs.extend(rows.iter().map(|&i| (x[i][feature], y[i])));
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));

        match criterion {
            Criterion::Gini => {
                let total_ones = pairs.iter().filter(|(_, l)| *l >= 0.5).count();
                let mut left_ones = 0usize;
                for i in 1..n {
                    if pairs[i - 1].1 >= 0.5 {
                        left_ones += 1;
                    }
                    if pairs[i].0 <= pairs[i - 1].0 {
                        continue;
                    }
                    let (nl, nr) = (i, n - i);
                    let left = gini_from_counts(left_ones, nl);
                    let right = gini_from_counts(total_ones - left_ones, nr);
                    let decrease = parent_impurity
                        - (nl as f64 / n as f64) * left
                        - (nr as f64 / n as f64) * right;
                    consider(&mut best, feature, &pairs, i, decrease);
                }
            }
            Criterion::SquaredError => {
                let total: f64 = pairs.iter().map(|(_, t)| t).sum();
                let total_sq: f64 = pairs.iter().map(|(_, t)| t * t).sum();
                let mut left_sum = 0.0;
                let mut left_sq = 0.0;
                for i in 1..n {
                    left_sum += pairs[i - 1].1;
                    left_sq += pairs[i - 1].1 * pairs[i - 1].1;
                    if pairs[i].0 <= pairs[i - 1].0 {
                        continue;
                    }
                    let (nl, nr) = (i, n - i);
                    let left = variance_from_sums(left_sum, left_sq, nl);
                    let right = variance_from_sums(total - left_sum, total_sq - left_sq, nr);
                    let decrease = parent_impurity
                        - (nl as f64 / n as f64) * left
                        - (nr as f64 / n as f64) * right;
                    consider(&mut best, feature, &pairs, i, decrease);
                }
            }
        }
    }
    best
}

fn consider(best: &mut Option<Split>, feature: usize, pairs: &[(f64, f64)], i: usize, decrease: f64) {
    if decrease <= 0.0 {
        return;
    }
    let threshold = 0.5 * (pairs[i - 1].0 + pairs[i].0);
    let better = match best {
        None => true,
        Some(b) => decrease > b.impurity_decrease,
    };
    if better {
        *best = Some(Split { feature, threshold, impurity_decrease: decrease });
    }
}

fn node_impurity(y: &[f64], rows: &[usize], criterion: Criterion) -> f64 {
    match criterion {
        Criterion::Gini => {
            let ones = rows.iter().filter(|&&i| y[i] >= 0.5).count();
            gini_from_counts(ones, rows.len())
        }
        Criterion::SquaredError => {
            let sum: f64 = rows.iter().map(|&i| y[i]).sum();
            let sum_sq: f64 = rows.iter().map(|&i| y[i] * y[i]).sum();
            variance_from_sums(sum, sum_sq, rows.len())
        }
    }
}

fn leaf_mean(y: &[f64], rows: &[usize]) -> f64 {
    rows.iter().map(|&i| y[i]).sum::<f64>() / rows.len() as f64
}

/// Recursive CART growth over (possibly repeated) row indices. Leaves hold
/// the class-1 fraction under Gini and the mean target under squared error.
pub fn grow_tree(
    x: &[Vec<f64>],
    y: &[f64],
    rows: &[usize],
    config: &TreeConfig,
    rng: &mut ChaCha8Rng,
) -> Tree {
    assert!(!rows.is_empty(), "grow_tree needs at least one row");
    assert!(config.min_samples_split >= 2, "min_samples_split must be >= 2");
    let n_features = x.first().map_or(0, Vec::len);
    let mut nodes = Vec::new();
    build(&mut nodes, x, y, rows.to_vec(), 0, config, rng, n_features);
    Tree { n_features, nodes }
}

#[allow(clippy::too_many_arguments)]
fn build(
    nodes: &mut Vec<TreeNode>,
    x: &[Vec<f64>],
    y: &[f64],
    rows: Vec<usize>,
    depth: usize,
    config: &TreeConfig,
    rng: &mut ChaCha8Rng,
    n_features: usize,
) -> usize {
    let cover = rows.len();
    let value = leaf_mean(y, &rows);

    let depth_ok = config.max_depth.map_or(true, |d| depth < d);
    if !depth_ok || cover < config.min_samples_split {
        nodes.push(TreeNode::Leaf { value, cover });
        return nodes.len() - 1;
    }

    let candidates: Vec<usize> = match config.feature_subsample {
        FeatureSubsample::All => (0..n_features).collect(),
        FeatureSubsample::Sqrt => {
            let k = ((n_features as f64).sqrt().ceil() as usize).clamp(1, n_features);
            let mut picked = rand::seq::index::sample(rng, n_features, k).into_vec();
            picked.sort_unstable();
            picked
        }
    };

    let Some(split) = best_split(x, y, &rows, &candidates, config.criterion) else {
        nodes.push(TreeNode::Leaf { value, cover });
        return nodes.len() - 1;
    };

    let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
        rows.into_iter().partition(|&i| x[i][split.feature] <= split.threshold);
    debug_assert!(!left_rows.is_empty() && !right_rows.is_empty());

    let index = nodes.len();
    nodes.push(TreeNode::Leaf { value, cover }); // placeholder until children exist
    let left = build(nodes, x, y, left_rows, depth + 1, config, rng, n_features);
    let right = build(nodes, x, y, right_rows, depth + 1, config, rng, n_features);
    nodes[index] =
        TreeNode::Internal { feature: split.feature, threshold: split.threshold, cover, left, right };
    index
}

/// Route the input down the tree: `x[feature] <= threshold` goes left.
pub fn predict_tree(tree: &Tree, x: &[f64]) -> Result<f64> {
    if x.len() != tree.n_features {
        return Err(Error::DimensionMismatch { expected: tree.n_features, got: x.len() });
    }
    let mut node = &tree.nodes[0];
    loop {
        match node {
            TreeNode::Leaf { value, .. } => return Ok(*value),
            TreeNode::Internal { feature, threshold, left, right, .. } => {
                node = if x[*feature] <= *threshold {
                    &tree.nodes[*left]
                } else {
                    &tree.nodes[*right]
                };
            }
        }
    }
}
