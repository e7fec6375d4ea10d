use serde::{Deserialize, Serialize};
use std::collections::HashMap;

use crate::error::{Error, Result};

/// Cluster assignment of `n` items in canonical form.
///
/// Labels are zero-based and numbered by first appearance: item 0 is in
/// cluster 0, and cluster `j + 1` first appears after cluster `j`. Every
/// cluster is non-empty.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Partition {
    labels: Vec<usize>,
    sizes: Vec<usize>,
}

impl Partition {
    /// Canonicalises arbitrary labels (any integers, any order).
    pub fn from_labels<L: Copy + Eq + std::hash::Hash>(labels: &[L]) -> Self {
        let mut map = HashMap::with_capacity(labels.len().min(64));
        let mut sizes = Vec::new();
        let labels = labels
            .iter()
            .map(|l| {
                let next = map.len();
                let c = *map.entry(*l).or_insert(next);
                if c == sizes.len() {
                    sizes.push(0);
                }
                sizes[c] += 1;
                c
            })
            .collect();
        Self { labels, sizes }
    }

    /// Accepts labels only if they are already canonical.
    pub fn from_canonical(labels: Vec<usize>) -> Result<Self> {
        let mut sizes: Vec<usize> = Vec::new();
        for (i, &l) in labels.iter().enumerate() {
            match l.cmp(&sizes.len()) {
                std::cmp::Ordering::Less => sizes[l] += 1,
                std::cmp::Ordering::Equal => sizes.push(1),
                std::cmp::Ordering::Greater => {
                    return Err(Error::invalid(format!(
                        "label {l} at position {i} skips ahead of {} seen clusters",
                        sizes.len()
                    )))
                }
            }
        }
        Ok(Self { labels, sizes })
    }

    /// All items in one cluster.
    pub fn single_cluster(n: usize) -> Self {
        Self {
            labels: vec![0; n],
            sizes: if n == 0 { vec![] } else { vec![n] },
        }
    }

    pub fn singletons(n: usize) -> Self {
        Self {
            labels: (0..n).collect(),
            sizes: vec![1; n],
        }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn k(&self) -> usize {
        self.sizes.len()
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    /// Members of each cluster, in label order.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k()];
        for (i, &l) in self.labels.iter().enumerate() {
            out[l].push(i);
        }
        out
    }

    pub fn is_canonical(&self) -> bool {
        Self::from_canonical(self.labels.clone()).is_ok()
    }

    /// Partition of the remaining items after dropping item `i`.
    pub fn without(&self, i: usize) -> Partition {
        let rest: Vec<usize> = self
            .labels
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, &l)| l)
            .collect();
        Partition::from_labels(&rest)
    }

    /// Co-membership agreement: `true` when `i` and `j` share a cluster.
    pub fn together(&self, i: usize, j: usize) -> bool {
        self.labels[i] == self.labels[j]
    }
}

impl TryFrom<Vec<usize>> for Partition {
    type Error = Error;
    fn try_from(v: Vec<usize>) -> Result<Self> {
        Partition::from_canonical(v)
    }
}

impl From<Partition> for Vec<usize> {
    fn from(p: Partition) -> Self {
        p.labels
    }
}

/// Every set partition of `{0..n}` in canonical form (restricted growth
/// strings). Intended for small `n`.
pub fn enumerate_partitions(n: usize) -> Vec<Partition> {
    let mut out = Vec::new();
    if n == 0 {
        return vec![Partition::single_cluster(0)];
    }
    let mut labels = vec![0usize; n];
    fn rec(pos: usize, max: usize, labels: &mut Vec<usize>, out: &mut Vec<Partition>) {
        if pos == labels.len() {
            out.push(Partition::from_canonical(labels.clone()).expect("restricted growth"));
            return;
        }
        for l in 0..=max + 1 {
            labels[pos] = l;
            rec(pos + 1, max.max(l), labels, out);
        }
    }
    rec(1, 0, &mut labels, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn canonical_relabel() {
        let p = Partition::from_labels(&[7, 7, 3, 7, 1]);
        assert_eq!(p.labels(), &[0, 0, 1, 0, 2]);
        assert_eq!(p.sizes(), &[3, 1, 1]);
        assert_eq!(p.k(), 3);
        assert!(p.is_canonical());
    }

    #[test]
    fn rejects_non_canonical() {
        assert!(Partition::from_canonical(vec![1, 0]).is_err());
        assert!(Partition::from_canonical(vec![0, 2]).is_err());
        assert!(Partition::from_canonical(vec![0, 1, 0, 2]).is_ok());
    }

    #[test]
    fn bell_numbers() {
        let counts: Vec<usize> = (1..=6).map(|n| enumerate_partitions(n).len()).collect();
        assert_eq!(counts, vec![1, 2, 5, 15, 52, 203]);
    }

    #[test]
    fn without_item() {
        let p = Partition::from_labels(&[1, 2, 2, 3]);
        assert_eq!(p.without(0).labels(), &[0, 0, 1]);
        assert_eq!(p.without(3).k(), 2);
    }

    #[test]
    fn serde_roundtrip_rejects_bad_labels() {
        let p = Partition::from_labels(&[4, 4, 2]);
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, "[0,0,1]");
        assert_eq!(serde_json::from_str::<Partition>(&s).unwrap(), p);
        assert!(serde_json::from_str::<Partition>("[1,0]").is_err());
    }

    proptest! {
        #[test]
        fn canonicalisation_is_idempotent(raw in proptest::collection::vec(0u8..6, 0..20)) {
            let p = Partition::from_labels(&raw);
            prop_assert_eq!(Partition::from_labels(p.labels()), p.clone());
            prop_assert_eq!(p.sizes().iter().sum::<usize>(), raw.len());
            prop_assert!(p.sizes().iter().all(|&s| s > 0));
        }
    }
}
