//! CART decision tree on Gini impurity.

use crate::dataset::LabeledDataset;

use super::{EvalError, Model};

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Leaf(usize),
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// A fitted tree. Rows with `x[feature] <= threshold` go left.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    nodes: Vec<Node>,
}

/// Sum over children of `n_child * gini(child)`, i.e. `n - sum(c^2) / n`.
fn weighted_gini(counts: &[u64], n: u64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let sq: u64 = counts.iter().map(|c| c * c).sum();
    n as f64 - sq as f64 / n as f64
}

fn majority(counts: &[u64]) -> usize {
    let mut best = 0;
    for (c, &n) in counts.iter().enumerate() {
        if n > counts[best] {
            best = c;
        }
    }
    best
}

struct Split {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

impl DecisionTree {
    /// Grows the tree without a depth cap. A node is split whenever it is
    /// impure, holds at least two rows and some feature takes two distinct
    /// values in it. The split minimizing weighted child impurity wins,
    /// ties going to the lowest feature and then the lowest threshold.
    pub fn fit(train: &LabeledDataset) -> Result<Self, EvalError> {
        if train.n_samples() == 0 {
            return Err(EvalError::EmptyTraining);
        }
        let n_classes = train.n_classes();
        let labels = train.labels();
        let mut nodes = Vec::new();
        // (node slot, rows)
        let mut stack: Vec<(usize, Vec<usize>)> = vec![(0, (0..train.n_samples()).collect())];
        nodes.push(Node::Leaf(0));
        let mut order: Vec<usize> = Vec::new();
        while let Some((slot, rows)) = stack.pop() {
            let mut counts = vec![0u64; n_classes];
            for &r in &rows {
                counts[labels[r]] += 1;
            }
            let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
            let split = if pure || rows.len() < 2 {
                None
            } else {
                best_split(train, &rows, &counts, &mut order)
            };
            match split {
                None => nodes[slot] = Node::Leaf(majority(&counts)),
                Some(s) => {
                    let (l, r): (Vec<usize>, Vec<usize>) = rows
                        .iter()
                        .partition(|&&i| train.value(i, s.feature) <= s.threshold);
                    let left = nodes.len();
                    nodes.push(Node::Leaf(0));
                    nodes.push(Node::Leaf(0));
                    nodes[slot] = Node::Split {
                        feature: s.feature,
                        threshold: s.threshold,
                        left,
                        right: left + 1,
                    };
                    stack.push((left + 1, r));
                    stack.push((left, l));
                }
            }
        }
        Ok(DecisionTree { nodes })
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf(_) => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, left).max(go(nodes, right)),
            }
        }
        go(&self.nodes, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf(_))).count()
    }
}

fn best_split(
    data: &LabeledDataset,
    rows: &[usize],
    counts: &[u64],
    order: &mut Vec<usize>,
) -> Option<Split> {
    let labels = data.labels();
    let n = rows.len() as u64;
    let mut best: Option<Split> = None;
    let mut left = vec![0u64; counts.len()];
    let mut right = vec![0u64; counts.len()];
    for f in 0..data.n_features() {
        order.clear();
        order.extend_from_slice(rows);
        order.sort_by(|&a, &b| data.value(a, f).total_cmp(&data.value(b, f)));
        left.iter_mut().for_each(|c| *c = 0);
        right.copy_from_slice(counts);
        for w in 0..order.len() - 1 {
            let lab = labels[order[w]];
            left[lab] += 1;
            right[lab] -= 1;
            let lo = data.value(order[w], f);
            let hi = data.value(order[w + 1], f);
            if lo == hi {
                continue;
            }
            let nl = w as u64 + 1;
            let impurity = weighted_gini(&left, nl) + weighted_gini(&right, n - nl);
            if best.as_ref().map_or(true, |b| impurity < b.impurity) {
                let mid = lo + (hi - lo) / 2.0;
                let threshold = if mid < hi { mid } else { lo };
                best = Some(Split {
                    feature: f,
                    threshold,
                    impurity,
                });
            }
        }
    }
    best
}

impl Model for DecisionTree {
    fn predict(&self, row: &[f64]) -> usize {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf(c) => return c,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if row[feature] <= threshold { left } else { right },
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data(rows: Vec<Vec<f64>>, labels: &[&str]) -> LabeledDataset {
        let names = (0..rows[0].len()).map(|j| format!("f{j}")).collect();
        LabeledDataset::new(names, rows, labels.iter().map(|s| s.to_string()).collect()).unwrap()
    }

    #[test]
    fn separable_line_is_one_split() {
        let d = data(
            vec![vec![1.0], vec![2.0], vec![3.0], vec![10.0], vec![11.0]],
            &["a", "a", "a", "b", "b"],
        );
        let t = DecisionTree::fit(&d).unwrap();
        assert_eq!(t.depth(), 1);
        assert_eq!(t.predict(&[6.5]), 0);
        assert_eq!(t.predict(&[6.6]), 1);
        assert!(d.rows().zip(d.labels()).all(|(r, &l)| t.predict(r) == l));
    }

    #[test]
    fn xor_needs_zero_gain_split() {
        let d = data(
            vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]],
            &["a", "b", "b", "a"],
        );
        let t = DecisionTree::fit(&d).unwrap();
        assert!(d.rows().zip(d.labels()).all(|(r, &l)| t.predict(r) == l));
        assert_eq!(t.depth(), 2);
    }

    #[test]
    fn single_class_subset_is_a_leaf() {
        let d = data(vec![vec![1.0], vec![2.0], vec![3.0]], &["a", "a", "b"]);
        let t = DecisionTree::fit(&d.subset(&[0, 1])).unwrap();
        assert_eq!(t.n_leaves(), 1);
        assert_eq!(t.predict(&[100.0]), 0);
        assert!(DecisionTree::fit(&d.subset(&[])).is_err());
    }

    #[test]
    fn duplicate_rows_with_conflicting_labels() {
        let d = data(vec![vec![1.0], vec![1.0], vec![1.0], vec![2.0]], &["a", "b", "b", "a"]);
        let t = DecisionTree::fit(&d).unwrap();
        assert_eq!(t.predict(&[1.0]), 1);
        assert_eq!(t.predict(&[2.0]), 0);
    }
}
