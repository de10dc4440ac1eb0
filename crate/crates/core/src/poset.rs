//! Finite partially ordered index sets.

use std::collections::HashMap;

use crate::error::{Error, Result};

/// A finite poset over string labels. The order is stored as its full
/// reflexive-transitive closure; the user-supplied covering pairs are kept
/// because linking maps live on them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexPoset {
    labels: Vec<String>,
    lookup: HashMap<String, usize>,
    covers: Vec<(usize, usize)>,
    leq: Vec<Vec<bool>>,
}

/// Reflexive-transitive closure of a relation on `0..n` (Warshall).
pub fn transitive_closure(n: usize, pairs: &[(usize, usize)]) -> Vec<Vec<bool>> {
    let mut r = vec![vec![false; n]; n];
    for (i, row) in r.iter_mut().enumerate() {
        row[i] = true;
    }
    for &(a, b) in pairs {
        r[a][b] = true;
    }
    for k in 0..n {
        for i in 0..n {
            if r[i][k] && i != k {
                let via = r[k].clone();
                for (cell, reach) in r[i].iter_mut().zip(via) {
                    *cell |= reach;
                }
            }
        }
    }
    r
}

impl IndexPoset {
    pub fn new<S: AsRef<str>>(elements: &[S], covers: &[(S, S)]) -> Result<Self> {
        let labels: Vec<String> = elements.iter().map(|s| s.as_ref().to_string()).collect();
        let mut lookup = HashMap::with_capacity(labels.len());
        for (i, l) in labels.iter().enumerate() {
            if lookup.insert(l.clone(), i).is_some() {
                return Err(Error::DuplicateLabel(l.clone()));
            }
        }
        let resolve = |s: &S| {
            lookup
                .get(s.as_ref())
                .copied()
                .ok_or_else(|| Error::UnknownLabel(s.as_ref().to_string()))
        };
        let mut idx_covers = Vec::with_capacity(covers.len());
        for (a, b) in covers {
            let (a, b) = (resolve(a)?, resolve(b)?);
            if a == b {
                return Err(Error::Cycle(labels[a].clone(), labels[b].clone()));
            }
            if !idx_covers.contains(&(a, b)) {
                idx_covers.push((a, b));
            }
        }
        Self::from_indices(labels, idx_covers)
    }

    pub(crate) fn from_indices(labels: Vec<String>, covers: Vec<(usize, usize)>) -> Result<Self> {
        let n = labels.len();
        let leq = transitive_closure(n, &covers);
        for i in 0..n {
            for j in (i + 1)..n {
                if leq[i][j] && leq[j][i] {
                    return Err(Error::Cycle(labels[i].clone(), labels[j].clone()));
                }
            }
        }
        let lookup = labels.iter().enumerate().map(|(i, l)| (l.clone(), i)).collect();
        Ok(Self {
            labels,
            lookup,
            covers,
            leq,
        })
    }

    /// Single index, no relations.
    pub fn singleton(label: &str) -> Self {
        Self::from_indices(vec![label.to_string()], vec![]).expect("singleton poset")
    }

    /// Chain `labels[0] < labels[1] < ...`.
    pub fn chain<S: AsRef<str>>(labels: &[S]) -> Result<Self> {
        let covers: Vec<(&str, &str)> = labels
            .windows(2)
            .map(|w| (w[0].as_ref(), w[1].as_ref()))
            .collect();
        let elements: Vec<&str> = labels.iter().map(|s| s.as_ref()).collect();
        Self::new(&elements, &covers)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn index(&self, label: &str) -> Result<usize> {
        self.lookup
            .get(label)
            .copied()
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    /// Covering pairs `(lower, upper)` as supplied.
    pub fn covers(&self) -> &[(usize, usize)] {
        &self.covers
    }

    pub fn leq_idx(&self, a: usize, b: usize) -> bool {
        self.leq[a][b]
    }

    pub fn leq(&self, a: &str, b: &str) -> Result<bool> {
        Ok(self.leq[self.index(a)?][self.index(b)?])
    }

    pub fn closure(&self) -> &[Vec<bool>] {
        &self.leq
    }

    /// First pair (in element order) without a common upper bound.
    pub fn check_directed(&self) -> Option<(String, String)> {
        let n = self.len();
        for a in 0..n {
            for b in (a + 1)..n {
                if self.upper_bounds(a, b).next().is_none() {
                    return Some((self.labels[a].clone(), self.labels[b].clone()));
                }
            }
        }
        None
    }

    pub fn is_directed(&self) -> bool {
        self.check_directed().is_none()
    }

    fn upper_bounds(&self, a: usize, b: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&c| self.leq[a][c] && self.leq[b][c])
    }

    /// The least upper bound when it exists, else the first minimal upper
    /// bound in element order.
    pub fn upper_bound_idx(&self, a: usize, b: usize) -> Result<usize> {
        let ub: Vec<usize> = self.upper_bounds(a, b).collect();
        if ub.is_empty() {
            return Err(Error::NotDirected(self.labels[a].clone(), self.labels[b].clone()));
        }
        if let Some(&least) = ub.iter().find(|&&c| ub.iter().all(|&d| self.leq[c][d])) {
            return Ok(least);
        }
        Ok(*ub
            .iter()
            .find(|&&c| ub.iter().all(|&d| d == c || !self.leq[d][c]))
            .expect("finite poset has minimal elements"))
    }

    pub fn upper_bound(&self, a: &str, b: &str) -> Result<String> {
        let i = self.upper_bound_idx(self.index(a)?, self.index(b)?)?;
        Ok(self.labels[i].clone())
    }

    /// Greatest element; exists exactly when the (nonempty) poset is directed.
    pub fn top(&self) -> Option<usize> {
        (0..self.len()).find(|&c| (0..self.len()).all(|a| self.leq[a][c]))
    }

    /// Least element, if any.
    pub fn minimum(&self) -> Option<usize> {
        (0..self.len()).find(|&c| (0..self.len()).all(|a| self.leq[c][a]))
    }

    pub fn minimal_elements(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&c| (0..self.len()).all(|a| a == c || !self.leq[a][c]))
            .collect()
    }

    /// Strictly comparable pairs `(a, b)` with `a < b`.
    pub fn strict_pairs(&self) -> Vec<(usize, usize)> {
        let n = self.len();
        let mut out = Vec::new();
        for a in 0..n {
            for b in 0..n {
                if a != b && self.leq[a][b] {
                    out.push((a, b));
                }
            }
        }
        out
    }

    /// Linear extension: every index appears after all indices below it.
    pub fn topological_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by_key(|&i| (0..self.len()).filter(|&a| self.leq[a][i]).count());
        order
    }

    /// Covering relation of the order (transitive reduction).
    pub fn hasse_covers(&self) -> Vec<(usize, usize)> {
        self.strict_pairs()
            .into_iter()
            .filter(|&(a, b)| {
                !(0..self.len()).any(|m| m != a && m != b && self.leq[a][m] && self.leq[m][b])
            })
            .collect()
    }
}

/// Build a poset from labels and covering pairs.
pub fn build_poset<S: AsRef<str>>(elements: &[S], covers: &[(S, S)]) -> Result<IndexPoset> {
    IndexPoset::new(elements, covers)
}

pub fn check_directed(p: &IndexPoset) -> Option<(String, String)> {
    p.check_directed()
}

pub fn upper_bound(p: &IndexPoset, a: &str, b: &str) -> Result<String> {
    p.upper_bound(a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn chain_closure_is_inferred() {
        let p = build_poset(&["0", "1", "2"], &[("0", "1"), ("1", "2")]).unwrap();
        assert!(p.leq("0", "2").unwrap());
        assert!(!p.leq("2", "0").unwrap());
        assert_eq!(p.check_directed(), None);
        assert_eq!(p.upper_bound("0", "2").unwrap(), "2");
        assert_eq!(p.label(p.top().unwrap()), "2");
        assert_eq!(p.label(p.minimum().unwrap()), "0");
    }

    #[test]
    fn diamond_top_is_directed() {
        let p = build_poset(&["a", "b", "c"], &[("a", "c"), ("b", "c")]).unwrap();
        assert_eq!(p.check_directed(), None);
        assert_eq!(p.upper_bound("a", "b").unwrap(), "c");
        assert_eq!(p.minimum(), None);
        assert_eq!(p.minimal_elements(), vec![0, 1]);
    }

    #[test]
    fn cycle_is_rejected() {
        let err = build_poset(&["a", "b"], &[("a", "b"), ("b", "a")]).unwrap_err();
        assert_eq!(err, Error::Cycle("a".into(), "b".into()));
    }

    #[test]
    fn unknown_and_duplicate_labels() {
        assert_eq!(
            build_poset(&["a"], &[("a", "z")]).unwrap_err(),
            Error::UnknownLabel("z".into())
        );
        assert_eq!(
            build_poset::<&str>(&["a", "a"], &[]).unwrap_err(),
            Error::DuplicateLabel("a".into())
        );
    }

    #[test]
    fn antichain_witness() {
        let p = build_poset::<&str>(&["a", "b"], &[]).unwrap();
        assert_eq!(p.check_directed(), Some(("a".into(), "b".into())));
        assert_eq!(
            p.upper_bound("a", "b").unwrap_err(),
            Error::NotDirected("a".into(), "b".into())
        );
        assert_eq!(p.upper_bound("a", "a").unwrap(), "a");
        assert_eq!(p.top(), None);
    }

    #[test]
    fn non_unique_minimal_upper_bound_uses_element_order() {
        // a, b both below c and d; c, d below e: minimal upper bounds {c, d}.
        let p = build_poset(
            &["a", "b", "d", "c", "e"],
            &[("a", "c"), ("b", "c"), ("a", "d"), ("b", "d"), ("c", "e"), ("d", "e")],
        )
        .unwrap();
        assert_eq!(p.upper_bound("a", "b").unwrap(), "d");
        assert_eq!(p.upper_bound("b", "a").unwrap(), "d");
    }

    #[test]
    fn hasse_reduction_drops_transitive_edges() {
        let p = build_poset(&["0", "1", "2"], &[("0", "1"), ("1", "2"), ("0", "2")]).unwrap();
        assert_eq!(p.hasse_covers(), vec![(0, 1), (1, 2)]);
    }

    fn arb_dag() -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
        (1usize..7).prop_flat_map(|n| {
            let pairs: Vec<(usize, usize)> =
                (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();
            let len = pairs.len();
            (Just(n), proptest::sample::subsequence(pairs, 0..=len))
        })
    }

    fn with_top(n: usize, mut edges: Vec<(usize, usize)>) -> IndexPoset {
        for i in 0..n.saturating_sub(1) {
            edges.push((i, n - 1));
        }
        edges.sort();
        edges.dedup();
        IndexPoset::from_indices((0..n).map(|i| format!("v{i}")).collect(), edges).unwrap()
    }

    proptest! {
        #[test]
        fn upper_bound_dominates_and_is_symmetric((n, edges) in arb_dag()) {
            let p = with_top(n, edges);
            for a in 0..n {
                for b in 0..n {
                    let u = p.upper_bound_idx(a, b).unwrap();
                    prop_assert!(p.leq_idx(a, u) && p.leq_idx(b, u));
                    prop_assert_eq!(u, p.upper_bound_idx(b, a).unwrap());
                }
                prop_assert_eq!(p.upper_bound_idx(a, a).unwrap(), a);
            }
        }

        #[test]
        fn closure_is_idempotent((n, edges) in arb_dag()) {
            let once = transitive_closure(n, &edges);
            let as_pairs: Vec<(usize, usize)> = (0..n)
                .flat_map(|i| (0..n).map(move |j| (i, j)))
                .filter(|&(i, j)| once[i][j])
                .collect();
            prop_assert_eq!(transitive_closure(n, &as_pairs), once);
        }
    }
}
