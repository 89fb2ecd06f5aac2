//! Candidate conjunction pools for descriptors and inner antecedents, mined
//! level-wise with apriori.

mod discretize;

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use discretize::{discretize, quantile_cuts, DiscretizationSpec, DiscretizeParams, FeatureSpec};

use crate::cover::{conjunction_rows, predicate_rows, RowSet};
use crate::data::{FeatureKind, Schema, TabularDataset};
use crate::error::{Error, Result};
use crate::model::{Conjunction, Predicate};
use crate::policy::FeaturePolicy;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MiningParams {
    pub min_support: f64,
    pub max_width: usize,
    /// Width cap for descriptor candidates; `None` puts the whole pool in `nd`.
    pub outer_max_width: Option<usize>,
}

impl Default for MiningParams {
    fn default() -> Self {
        MiningParams {
            min_support: 0.05,
            max_width: 3,
            outer_max_width: Some(2),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Supported {
    pub conjunction: Conjunction,
    pub support: f64,
}

/// Descriptor candidates `nd`, antecedent candidates `dl`, and the support of
/// every conjunction in either list. All lists are canonically sorted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidatePools {
    pub nd: Vec<Conjunction>,
    pub dl: Vec<Conjunction>,
    pub support: Vec<Supported>,
}

impl CandidatePools {
    /// Pools from explicit lists, with supports measured on `data`.
    pub fn new(nd: Vec<Conjunction>, dl: Vec<Conjunction>, data: &TabularDataset) -> Result<Self> {
        let (nd, dl) = (canonical(nd), canonical(dl));
        let mut all: Vec<Conjunction> = nd.iter().chain(&dl).cloned().collect();
        all = canonical(all);
        let n = data.n_rows().max(1) as f64;
        let support = all
            .into_iter()
            .map(|c| {
                let s = conjunction_rows(&c, data)?.count() as f64 / n;
                Ok(Supported {
                    conjunction: c,
                    support: s,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CandidatePools { nd, dl, support })
    }

    pub fn support_of(&self, conj: &Conjunction) -> Option<f64> {
        self.support
            .binary_search_by(|s| s.conjunction.cmp(conj))
            .ok()
            .map(|i| self.support[i].support)
    }

    pub fn is_empty(&self) -> bool {
        self.nd.is_empty() || self.dl.is_empty()
    }

    /// Largest width over both lists.
    pub fn max_width(&self) -> usize {
        self.nd
            .iter()
            .chain(&self.dl)
            .map(Conjunction::width)
            .max()
            .unwrap_or(0)
    }

    fn prune_support(&mut self) {
        let keep: HashSet<&Conjunction> = self.nd.iter().chain(&self.dl).collect();
        let support = std::mem::take(&mut self.support);
        self.support = support.into_iter().filter(|s| keep.contains(&s.conjunction)).collect();
    }
}

fn canonical(mut v: Vec<Conjunction>) -> Vec<Conjunction> {
    v.sort();
    v.dedup();
    v
}

/// Every predicate a feature can generate: `EQ` per level for categorical
/// features; `GEQ j` for `j in 1..=m` and `LEQ j` for `j in 0..m` for a numeric
/// feature with `m` cut points. Canonically sorted.
pub fn generate_predicates(schema: &Schema) -> Vec<Predicate> {
    let mut preds = Vec::new();
    for f in schema.features().iter().filter(|f| f.is_minable()) {
        match f.kind {
            FeatureKind::Categorical => {
                preds.extend(f.levels.iter().map(|l| Predicate::eq(&f.name, l)));
            }
            FeatureKind::Numeric => {
                let m = f.cuts.len() as u32;
                preds.extend((1..=m).map(|j| Predicate::geq(&f.name, j)));
                preds.extend((0..m).map(|j| Predicate::leq(&f.name, j)));
            }
        }
    }
    preds.sort();
    preds
}

fn is_frequent(count: usize, n: usize, min_support: f64) -> bool {
    count as f64 + 1e-9 >= min_support * n as f64
}

/// All conjunctions with support `>= min_support` and width `<= max_width`,
/// found level by level: a width-`k` candidate is counted only if every one of
/// its width-`k-1` sub-conjunctions is frequent.
pub fn mine_candidates(data: &TabularDataset, params: &MiningParams) -> Result<CandidatePools> {
    if !(params.min_support > 0.0 && params.min_support <= 1.0) {
        return Err(Error::Config(format!(
            "min_support must be in (0, 1], got {}",
            params.min_support
        )));
    }
    if params.max_width == 0 {
        return Err(Error::Config("max_width must be at least 1".into()));
    }
    let n = data.n_rows();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let preds = generate_predicates(data.schema());
    let pred_rows: Vec<RowSet> = preds
        .par_iter()
        .map(|p| predicate_rows(p, data))
        .collect::<Result<_>>()?;

    // itemsets are sorted predicate indices, so they map to canonical conjunctions
    let mut level: Vec<(Vec<usize>, RowSet, usize)> = pred_rows
        .iter()
        .enumerate()
        .filter_map(|(i, rows)| {
            let c = rows.count();
            is_frequent(c, n, params.min_support).then(|| (vec![i], rows.clone(), c))
        })
        .collect();
    let mut frequent: Vec<(Vec<usize>, usize)> = level.iter().map(|(items, _, c)| (items.clone(), *c)).collect();

    for _width in 2..=params.max_width {
        let known: HashSet<&[usize]> = level.iter().map(|(items, _, _)| items.as_slice()).collect();
        let mut candidates: Vec<(usize, usize)> = Vec::new();
        for a in 0..level.len() {
            for b in a + 1..level.len() {
                let (x, y) = (&level[a].0, &level[b].0);
                let k = x.len();
                if x[..k - 1] != y[..k - 1] {
                    // levels are sorted, so no later b shares the prefix either
                    break;
                }
                let (pa, pb) = (&preds[x[k - 1]], &preds[y[k - 1]]);
                if pa.feature == pb.feature && pa.op == pb.op {
                    continue;
                }
                let mut joined = x.clone();
                joined.push(y[k - 1]);
                let all_subsets_frequent = (0..joined.len()).all(|skip| {
                    let sub: Vec<usize> = joined
                        .iter()
                        .enumerate()
                        .filter(|&(i, _)| i != skip)
                        .map(|(_, &v)| v)
                        .collect();
                    known.contains(sub.as_slice())
                });
                if all_subsets_frequent {
                    candidates.push((a, b));
                }
            }
        }
        let next: Vec<(Vec<usize>, RowSet, usize)> = candidates
            .par_iter()
            .filter_map(|&(a, b)| {
                let (x, xr, _) = &level[a];
                let last = *level[b].0.last().expect("non-empty itemset");
                let rows = xr.and(&pred_rows[last]);
                let c = rows.count();
                is_frequent(c, n, params.min_support).then(|| {
                    let mut items = x.clone();
                    items.push(last);
                    (items, rows, c)
                })
            })
            .collect();
        if next.is_empty() {
            break;
        }
        frequent.extend(next.iter().map(|(items, _, c)| (items.clone(), *c)));
        level = next;
    }

    if frequent.is_empty() {
        return Err(Error::EmptyPool {
            min_support: params.min_support,
        });
    }
    let mut support: Vec<Supported> = frequent
        .into_iter()
        .map(|(items, c)| Supported {
            conjunction: Conjunction::new(items.iter().map(|&i| preds[i].clone()).collect())
                .expect("apriori join never pairs one (feature, op) twice"),
            support: c as f64 / n as f64,
        })
        .collect();
    support.sort_by(|a, b| a.conjunction.cmp(&b.conjunction));
    let dl: Vec<Conjunction> = support.iter().map(|s| s.conjunction.clone()).collect();
    let nd: Vec<Conjunction> = match params.outer_max_width {
        Some(w) => dl.iter().filter(|c| c.width() <= w).cloned().collect(),
        None => dl.clone(),
    };
    Ok(CandidatePools { nd, dl, support })
}

/// Drops every conjunction that mentions a prohibited feature, from both lists.
pub fn filter_pools(pools: &CandidatePools, policy: &FeaturePolicy) -> CandidatePools {
    let allowed = |c: &&Conjunction| !c.predicates().iter().any(|p| policy.is_prohibited(&p.feature));
    let mut out = CandidatePools {
        nd: pools.nd.iter().filter(allowed).cloned().collect(),
        dl: pools.dl.iter().filter(allowed).cloned().collect(),
        support: pools.support.clone(),
    };
    out.prune_support();
    out
}

/// Upper bounds on pool sizes; the highest-support conjunctions are kept.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolCaps {
    pub max_nd: Option<usize>,
    pub max_dl: Option<usize>,
}

pub fn cap_pools(pools: &CandidatePools, caps: &PoolCaps) -> CandidatePools {
    let keep = |list: &[Conjunction], cap: Option<usize>| -> Vec<Conjunction> {
        let Some(cap) = cap.filter(|&c| c < list.len()) else {
            return list.to_vec();
        };
        let mut ranked: Vec<&Conjunction> = list.iter().collect();
        // stable sort: equal supports stay in canonical order
        ranked.sort_by(|a, b| {
            let (sa, sb) = (pools.support_of(a).unwrap_or(0.0), pools.support_of(b).unwrap_or(0.0));
            sb.total_cmp(&sa)
        });
        canonical(ranked.into_iter().take(cap).cloned().collect())
    };
    let mut out = CandidatePools {
        nd: keep(&pools.nd, caps.max_nd),
        dl: keep(&pools.dl, caps.max_dl),
        support: pools.support.clone(),
    };
    out.prune_support();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{ColumnData, LabelColumns};

    /// Six rows over two binary categorical features `a`, `b` and one numeric
    /// feature `x` with a single cut, i.e. predicates
    /// a=0, a=1, b=0, b=1, x>=1, x<=0.
    fn toy() -> TabularDataset {
        TabularDataset::new(
            vec![
                ("a".into(), ColumnData::categorical(["0", "0", "0", "1", "1", "1"])),
                ("b".into(), ColumnData::categorical(["0", "1", "1", "1", "0", "1"])),
                (
                    "x".into(),
                    ColumnData::numeric(vec![0.0, 1.0, 1.0, 0.0, 1.0, 1.0], vec![0.5]),
                ),
            ],
            LabelColumns {
                label: Some(vec!["n".into(); 6]),
                ..Default::default()
            },
        )
        .unwrap()
    }

    /// Support of every conjunction by subset enumeration over all predicates.
    fn brute_force(data: &TabularDataset, min_support: f64, max_width: usize) -> Vec<Conjunction> {
        let preds = generate_predicates(data.schema());
        let mut out = Vec::new();
        for mask in 1u32..(1 << preds.len()) {
            let chosen: Vec<Predicate> = (0..preds.len())
                .filter(|i| mask >> i & 1 == 1)
                .map(|i| preds[i].clone())
                .collect();
            if chosen.len() > max_width {
                continue;
            }
            let Ok(conj) = Conjunction::new(chosen.clone()) else {
                continue;
            };
            if conj.width() != chosen.len() {
                continue;
            }
            let rows = (0..data.n_rows())
                .filter(|&r| crate::model::satisfies(&data.instance(r), &conj).unwrap())
                .count();
            if rows as f64 >= min_support * data.n_rows() as f64 {
                out.push(conj);
            }
        }
        out.sort();
        out
    }

    #[test]
    fn apriori_matches_exhaustive_enumeration() {
        let d = toy();
        for &(ms, w) in &[(0.1, 3), (1.0 / 3.0, 3), (0.5, 2), (0.2, 1)] {
            let params = MiningParams {
                min_support: ms,
                max_width: w,
                outer_max_width: None,
            };
            let pools = mine_candidates(&d, &params).unwrap();
            assert_eq!(pools.dl, brute_force(&d, ms, w), "min_support {ms}, width {w}");
        }
    }

    #[test]
    fn threshold_is_inclusive() {
        // x>=1 holds on 4 of 6 rows, a=0 on 3 of 6
        let pools = mine_candidates(
            &toy(),
            &MiningParams {
                min_support: 0.5,
                max_width: 1,
                outer_max_width: None,
            },
        )
        .unwrap();
        assert!(pools
            .dl
            .contains(&Conjunction::new(vec![Predicate::eq("a", "0")]).unwrap()));
        assert_eq!(
            pools.support_of(&Conjunction::new(vec![Predicate::geq("x", 1)]).unwrap()),
            Some(4.0 / 6.0)
        );
    }

    #[test]
    fn full_support_pool_is_empty_here() {
        let err = mine_candidates(
            &toy(),
            &MiningParams {
                min_support: 1.0,
                max_width: 3,
                outer_max_width: None,
            },
        )
        .unwrap_err();
        assert!(matches!(err, Error::EmptyPool { .. }));
    }

    #[test]
    fn outer_width_cap_restricts_descriptors() {
        let pools = mine_candidates(
            &toy(),
            &MiningParams {
                min_support: 0.1,
                max_width: 3,
                outer_max_width: Some(1),
            },
        )
        .unwrap();
        assert!(pools.nd.iter().all(|c| c.width() == 1));
        assert!(pools.dl.iter().any(|c| c.width() == 3));
        assert_eq!(pools.max_width(), 3);
    }

    #[test]
    fn filtering_removes_contaminated_conjunctions() {
        let pools = mine_candidates(&toy(), &MiningParams::default()).unwrap();
        let policy = FeaturePolicy::new(Vec::<String>::new(), ["a"]).unwrap();
        let f = filter_pools(&pools, &policy);
        assert!(f.nd.iter().chain(&f.dl).all(|c| !c.mentions("a")));
        assert!(f.dl.contains(&Conjunction::new(vec![Predicate::geq("x", 1)]).unwrap()));
        assert!(!f
            .dl
            .contains(&Conjunction::new(vec![Predicate::eq("a", "1"), Predicate::geq("x", 1)]).unwrap()));
        assert_eq!(filter_pools(&f, &policy), f);
        assert_eq!(filter_pools(&pools, &FeaturePolicy::default()), pools);
    }

    #[test]
    fn caps_keep_highest_support() {
        let pools = mine_candidates(&toy(), &MiningParams::default()).unwrap();
        let capped = cap_pools(
            &pools,
            &PoolCaps {
                max_nd: Some(2),
                max_dl: None,
            },
        );
        assert_eq!(capped.nd.len(), 2);
        assert_eq!(capped.dl, pools.dl);
        let min_kept = capped
            .nd
            .iter()
            .map(|c| pools.support_of(c).unwrap())
            .fold(1.0, f64::min);
        assert!(pools
            .nd
            .iter()
            .filter(|c| !capped.nd.contains(c))
            .all(|c| pools.support_of(c).unwrap() <= min_kept));
    }
}
