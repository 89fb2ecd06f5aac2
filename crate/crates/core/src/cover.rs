//! Row bitsets and bulk predicate evaluation over a dataset.

use crate::data::{FeatureKind, TabularDataset};
use crate::error::{Error, Result};
use crate::model::{Conjunction, Op, Predicate, Value};

/// A set of row indices stored as a packed bitset.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RowSet {
    words: Vec<u64>,
    len: usize,
}

impl RowSet {
    pub fn empty(len: usize) -> Self {
        RowSet {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn full(len: usize) -> Self {
        let mut s = RowSet {
            words: vec![!0; len.div_ceil(64)],
            len,
        };
        s.clear_tail();
        s
    }

    pub fn from_fn(len: usize, mut f: impl FnMut(usize) -> bool) -> Self {
        let mut s = RowSet::empty(len);
        for i in 0..len {
            if f(i) {
                s.insert(i);
            }
        }
        s
    }

    fn clear_tail(&mut self) {
        let rem = self.len % 64;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn insert(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub fn contains(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn and_assign(&mut self, other: &RowSet) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= b;
        }
    }

    pub fn or_assign(&mut self, other: &RowSet) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    pub fn and(&self, other: &RowSet) -> RowSet {
        let mut s = self.clone();
        s.and_assign(other);
        s
    }

    /// `|self ∩ other|`
    pub fn count_and(&self, other: &RowSet) -> usize {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    /// `|self ∩ a ∩ b|`
    pub fn count_and2(&self, a: &RowSet, b: &RowSet) -> usize {
        self.words
            .iter()
            .zip(&a.words)
            .zip(&b.words)
            .map(|((x, y), z)| (x & y & z).count_ones() as usize)
            .sum()
    }

    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let bit = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * 64 + bit)
            })
        })
    }
}

pub fn predicate_rows(pred: &Predicate, data: &TabularDataset) -> Result<RowSet> {
    let (idx, feature) = data
        .schema()
        .feature(&pred.feature)
        .ok_or_else(|| Error::MissingFeature(pred.feature.clone()))?;
    let codes = data.column(idx);
    let mismatch = |kind| Error::KindMismatch {
        feature: pred.feature.clone(),
        op: pred.op.name().into(),
        kind,
    };
    let n = data.n_rows();
    match (feature.kind, pred.op, &pred.value) {
        (FeatureKind::Categorical, Op::Eq, Value::Level(level)) => {
            Ok(match feature.levels.iter().position(|l| l == level) {
                Some(code) => RowSet::from_fn(n, |i| codes[i] == code as u32),
                None => RowSet::empty(n),
            })
        }
        (FeatureKind::Numeric, Op::Geq, Value::Bin(b)) => Ok(RowSet::from_fn(n, |i| codes[i] >= *b)),
        (FeatureKind::Numeric, Op::Leq, Value::Bin(b)) => Ok(RowSet::from_fn(n, |i| codes[i] <= *b)),
        (FeatureKind::Categorical, _, _) => Err(mismatch("categorical")),
        (FeatureKind::Numeric, _, _) => Err(mismatch("numeric")),
    }
}

/// Rows satisfying every predicate; all rows for the empty conjunction.
pub fn conjunction_rows(conj: &Conjunction, data: &TabularDataset) -> Result<RowSet> {
    let mut rows = RowSet::full(data.n_rows());
    for p in conj.predicates() {
        rows.and_assign(&predicate_rows(p, data)?);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bitset_basics() {
        let a = RowSet::from_fn(130, |i| i % 3 == 0);
        let b = RowSet::from_fn(130, |i| i % 2 == 0);
        assert_eq!(a.count(), 44);
        assert_eq!(a.count_and(&b), 22);
        assert_eq!(a.and(&b).iter_ones().collect::<Vec<_>>()[..3], [0, 6, 12]);
        assert_eq!(RowSet::full(130).count(), 130);
        assert!(RowSet::empty(5).is_empty());
        let c = RowSet::from_fn(130, |i| i < 10);
        assert_eq!(c.count_and2(&a, &b), 2);
    }
}
