//! Multi-indices selecting one Wiener chaos mode each, and the finite index
//! sets used to truncate the expansion.
//!
//! A [`MultiIndex`] is stored sparsely as `(coordinate, multiplicity)` pairs so
//! that a length bound of `L = 10_000` costs nothing for the singletons that
//! dominate such runs.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on the size of an exhaustive enumeration.
pub const DEFAULT_ENUMERATION_CAP: u128 = 1_000_000;

/// A finitely supported vector of nonnegative multiplicities `(m_1, m_2, ...)`.
///
/// Coordinates are 1-based. Only nonzero multiplicities are stored, sorted by
/// coordinate.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex {
    entries: Vec<(usize, u32)>,
    bound: usize,
}

impl MultiIndex {
    pub fn zero(bound: usize) -> Self {
        MultiIndex {
            entries: Vec::new(),
            bound,
        }
    }

    /// The unit vector `e_k`.
    pub fn singleton(k: usize, bound: usize) -> Result<Self> {
        Self::from_entries(&[(k, 1)], bound)
    }

    /// Builds an index from `(coordinate, multiplicity)` pairs in any order.
    /// Zero multiplicities are dropped and repeated coordinates are summed.
    pub fn from_entries(pairs: &[(usize, u32)], bound: usize) -> Result<Self> {
        let mut entries: Vec<(usize, u32)> = Vec::with_capacity(pairs.len());
        for &(k, mk) in pairs {
            if k == 0 || k > bound {
                return Err(Error::range("coordinate", k, format!("1..={bound}")));
            }
            if mk == 0 {
                continue;
            }
            match entries.iter_mut().find(|(c, _)| *c == k) {
                Some(e) => e.1 += mk,
                None => entries.push((k, mk)),
            }
        }
        entries.sort_unstable();
        Ok(MultiIndex { entries, bound })
    }

    /// Builds an index from a dense vector `m_1, m_2, ...`; trailing entries
    /// beyond `bound` must be zero.
    pub fn from_dense(dense: &[u32], bound: usize) -> Result<Self> {
        let pairs: Vec<(usize, u32)> = dense
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > 0)
            .map(|(i, &v)| (i + 1, v))
            .collect();
        Self::from_entries(&pairs, bound)
    }

    pub fn bound(&self) -> usize {
        self.bound
    }

    /// Nonzero `(coordinate, multiplicity)` pairs in coordinate order.
    pub fn entries(&self) -> &[(usize, u32)] {
        &self.entries
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    /// Multiplicity at coordinate `k` (zero when absent).
    pub fn get(&self, k: usize) -> u32 {
        self.entries
            .iter()
            .find(|(c, _)| *c == k)
            .map_or(0, |&(_, v)| v)
    }

    /// Largest coordinate with a nonzero multiplicity, or 0 for the zero index.
    pub fn max_coordinate(&self) -> usize {
        self.entries.last().map_or(0, |&(k, _)| k)
    }

    /// `|m| = sum_k m_k`.
    pub fn order(&self) -> u32 {
        self.entries.iter().map(|&(_, v)| v).sum()
    }

    /// `m^-(k)`: multiplicity at `k` lowered by one, floored at zero.
    pub fn decrement(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.bound {
            return Err(Error::range("coordinate", k, format!("1..={}", self.bound)));
        }
        let mut entries = self.entries.clone();
        if let Some(pos) = entries.iter().position(|(c, _)| *c == k) {
            if entries[pos].1 == 1 {
                entries.remove(pos);
            } else {
                entries[pos].1 -= 1;
            }
        }
        Ok(MultiIndex {
            entries,
            bound: self.bound,
        })
    }

    /// `m! = prod_k m_k!`, saturating at `u128::MAX`.
    pub fn factorial_product(&self) -> u128 {
        self.entries
            .iter()
            .map(|&(_, v)| (1..=v as u128).fold(1u128, |acc, x| acc.saturating_mul(x)))
            .fold(1u128, |acc, f| acc.saturating_mul(f))
    }

    /// Dense view of the first `width` coordinates.
    pub fn dense(&self, width: usize) -> Vec<u32> {
        let mut out = vec![0; width];
        for &(k, v) in &self.entries {
            if k <= width {
                out[k - 1] = v;
            }
        }
        out
    }

    fn with_bound(mut self, bound: usize) -> Self {
        self.bound = bound;
        self
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "(0)");
        }
        let dense = self.dense(self.max_coordinate());
        write!(f, "(")?;
        for (i, v) in dense.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum IndexScheme {
    /// The fixed list of vectors from the reference experiments.
    #[default]
    TableA,
    /// Every multi-index with support in `1..=L` and order at most `p`.
    FullUpToOrder,
}

/// An ordered, duplicate-free set of multi-indices whose first element is the
/// zero index.
#[derive(Debug, Clone)]
pub struct IndexSet {
    indices: Vec<MultiIndex>,
    lookup: HashMap<MultiIndex, usize>,
    p: u32,
    bound: usize,
    scheme: IndexScheme,
}

impl IndexSet {
    fn from_indices(indices: Vec<MultiIndex>, p: u32, bound: usize, scheme: IndexScheme) -> Self {
        let lookup = indices
            .iter()
            .enumerate()
            .map(|(i, m)| (m.clone(), i))
            .collect::<HashMap<_, _>>();
        debug_assert_eq!(lookup.len(), indices.len());
        debug_assert!(indices.first().is_some_and(MultiIndex::is_zero));
        IndexSet {
            indices,
            lookup,
            p,
            bound,
            scheme,
        }
    }

    /// Dispatches on `scheme`.
    pub fn build(scheme: IndexScheme, p: u32, bound: usize) -> Result<Self> {
        match scheme {
            IndexScheme::TableA => Ok(enumerate_table_a(p, bound)),
            IndexScheme::FullUpToOrder => enumerate_full(p, bound, DEFAULT_ENUMERATION_CAP),
        }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn get(&self, row: usize) -> &MultiIndex {
        &self.indices[row]
    }

    pub fn position(&self, m: &MultiIndex) -> Option<usize> {
        self.lookup.get(m).copied()
    }

    pub fn max_order(&self) -> u32 {
        self.p
    }

    /// Length bound `L`.
    pub fn bound(&self) -> usize {
        self.bound
    }

    pub fn scheme(&self) -> IndexScheme {
        self.scheme
    }

    pub fn iter(&self) -> std::slice::Iter<'_, MultiIndex> {
        self.indices.iter()
    }
}

/// The truncation used by the reference experiments: the zero vector, all
/// `L` singletons, then a fixed list of higher-order vectors supported on the
/// first three coordinates. Vectors with order above `p` or support beyond
/// `L` are dropped.
pub fn enumerate_table_a(p: u32, bound: usize) -> IndexSet {
    let mut indices = vec![MultiIndex::zero(bound)];
    if p >= 1 {
        indices.extend((1..=bound).map(|k| MultiIndex {
            entries: vec![(k, 1)],
            bound,
        }));
    }
    let mut tail: Vec<Vec<u32>> = vec![
        vec![1, 1],
        vec![1, 0, 1],
        vec![0, 1, 1],
        vec![2],
        vec![0, 2],
        vec![0, 0, 2],
        vec![1, 2],
        vec![2, 1],
    ];
    for n in 3..=10 {
        tail.push(vec![n]);
        tail.push(vec![0, n]);
    }
    for dense in tail {
        let order: u32 = dense.iter().sum();
        let support = dense.iter().rposition(|&v| v > 0).map_or(0, |i| i + 1);
        if order <= p && support <= bound {
            let m = MultiIndex::from_dense(&dense, bound).expect("support checked");
            indices.push(m);
        }
    }
    IndexSet::from_indices(indices, p, bound, IndexScheme::TableA)
}

/// `C(n, k)` in `u128`, saturating.
pub fn binomial(n: u128, k: u128) -> u128 {
    let k = k.min(n.saturating_sub(k));
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul(n - i) {
            Some(v) => v / (i + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Every multi-index with support in `1..=bound` and order at most `p`, in
/// graded order; within one order, dense vectors appear in descending
/// lexicographic order (`2e1, e1+e2, 2e2, ...`).
pub fn enumerate_full(p: u32, bound: usize, cap: u128) -> Result<IndexSet> {
    let count = binomial(bound as u128 + p as u128, p as u128);
    if count > cap {
        return Err(Error::Size { count, cap });
    }
    let mut indices = Vec::with_capacity(count as usize);
    let mut prefix = Vec::new();
    for n in 0..=p {
        compositions(1, n, bound, &mut prefix, &mut indices);
    }
    let indices = indices.into_iter().map(|m| m.with_bound(bound)).collect();
    Ok(IndexSet::from_indices(indices, p, bound, IndexScheme::FullUpToOrder))
}

fn compositions(
    start: usize,
    remaining: u32,
    bound: usize,
    prefix: &mut Vec<(usize, u32)>,
    out: &mut Vec<MultiIndex>,
) {
    if remaining == 0 {
        out.push(MultiIndex {
            entries: prefix.clone(),
            bound,
        });
        return;
    }
    for k in start..=bound {
        for v in (1..=remaining).rev() {
            prefix.push((k, v));
            compositions(k + 1, remaining - v, bound, prefix, out);
            prefix.pop();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense(d: &[u32]) -> MultiIndex {
        MultiIndex::from_dense(d, 8).unwrap()
    }

    #[test]
    fn order_examples() {
        assert_eq!(MultiIndex::zero(4).order(), 0);
        assert_eq!(dense(&[1, 2]).order(), 3);
    }

    #[test]
    fn decrement_examples() {
        assert!(dense(&[1]).decrement(1).unwrap().is_zero());
        assert_eq!(dense(&[0, 2]).decrement(1).unwrap(), dense(&[0, 2]));
        assert_eq!(dense(&[2, 1]).decrement(1).unwrap(), dense(&[1, 1]));
    }

    #[test]
    fn decrement_rejects_out_of_range() {
        let m = dense(&[1]);
        assert!(matches!(m.decrement(0), Err(Error::Range { .. })));
        assert!(matches!(m.decrement(9), Err(Error::Range { .. })));
    }

    #[test]
    fn factorial_product_examples() {
        assert_eq!(MultiIndex::zero(3).factorial_product(), 1);
        assert_eq!(dense(&[1, 1]).factorial_product(), 1);
        assert_eq!(dense(&[3, 2]).factorial_product(), 12);
    }

    #[test]
    fn table_a_small_cases() {
        let s = enumerate_table_a(0, 5);
        assert_eq!(s.len(), 1);
        assert!(s.get(0).is_zero());

        let s = enumerate_table_a(1, 4);
        assert_eq!(s.len(), 5);
        for k in 1..=4 {
            assert_eq!(s.get(k), &MultiIndex::singleton(k, 4).unwrap());
        }
    }

    #[test]
    fn table_a_contains_order_three_and_ten() {
        let s = enumerate_table_a(12, 3);
        for d in [[1u32, 2, 0], [2, 1, 0], [10, 0, 0], [0, 10, 0]] {
            let m = MultiIndex::from_dense(&d, 3).unwrap();
            assert!(s.position(&m).is_some(), "missing {m}");
        }
        // zero + L singletons + 6 order-two + 2 mixed order-three + 16 pure powers
        assert_eq!(enumerate_table_a(12, 50).len(), 1 + 50 + 6 + 2 + 16);
    }

    #[test]
    fn table_a_drops_support_beyond_bound() {
        let s = enumerate_table_a(12, 2);
        assert!(s.iter().all(|m| m.max_coordinate() <= 2));
        assert!(s.position(&MultiIndex::from_dense(&[1, 1], 2).unwrap()).is_some());
    }

    #[test]
    fn full_enumeration_counts_and_order() {
        assert_eq!(enumerate_full(1, 3, DEFAULT_ENUMERATION_CAP).unwrap().len(), 4);
        let s = enumerate_full(2, 2, DEFAULT_ENUMERATION_CAP).unwrap();
        let want: Vec<Vec<u32>> = vec![
            vec![0, 0],
            vec![1, 0],
            vec![0, 1],
            vec![2, 0],
            vec![1, 1],
            vec![0, 2],
        ];
        let got: Vec<Vec<u32>> = s.iter().map(|m| m.dense(2)).collect();
        assert_eq!(got, want);
    }

    #[test]
    fn full_enumeration_matches_brute_force() {
        // Oracle: scan every dense vector in {0..=p}^L and keep those with order <= p.
        let (p, l) = (2u32, 3usize);
        let mut brute = 0;
        for a in 0..=p {
            for b in 0..=p {
                for c in 0..=p {
                    if a + b + c <= p {
                        brute += 1;
                    }
                }
            }
        }
        assert_eq!(brute, 10);
        assert_eq!(enumerate_full(p, l, DEFAULT_ENUMERATION_CAP).unwrap().len(), brute);
    }

    #[test]
    fn full_enumeration_cap() {
        let err = enumerate_full(12, 10_000, DEFAULT_ENUMERATION_CAP).unwrap_err();
        assert!(matches!(err, Error::Size { .. }));
    }

    #[test]
    fn display_is_dense() {
        assert_eq!(dense(&[0, 2, 1]).to_string(), "(0,2,1)");
        assert_eq!(MultiIndex::zero(2).to_string(), "(0)");
    }
}
