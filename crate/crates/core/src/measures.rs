//! Interpretability and fidelity measures of a rule set, and the objective built
//! from them.
//!
//! Every objective term is a measure subtracted from an upper bound, so all six
//! terms are non-negative for rule sets drawn from the candidate pools:
//!
//! | term | value |
//! |------|-------|
//! | f1 | `2 * w_max * |ND| * |DL| - numpreds` |
//! | f2 | `w_max * |ND| * |DL| - featureoverlap` |
//! | f3 | `N * (|ND| * |DL|)^2 - ruleoverlap` |
//! | f4 | `cover` |
//! | f5 | `N * |ND| * |DL| - disagreement` |
//! | f6 | `coverdesired` |
//!
//! Terms are exact integers. Objective values are `f64`, but comparisons between
//! rule sets should go through [`ObjectiveTerms::weighted_gain`], which weighs
//! the exact integer differences; the absolute values are dominated by the f3
//! bound and lose the low-order digits.

use std::collections::{BTreeSet, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cover::{conjunction_rows, RowSet};
use crate::data::TabularDataset;
use crate::error::{Error, Result};
use crate::mining::CandidatePools;
use crate::model::{Conjunction, Rule};
use crate::policy::FeaturePolicy;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveConfig {
    /// Weights of f1..f6.
    pub lambdas: [f64; 6],
    /// Maximum number of rules.
    pub eps1: usize,
    /// Maximum width of any descriptor or antecedent.
    pub eps2: usize,
    /// Maximum number of distinct descriptors.
    pub eps3: usize,
    /// Local-search improvement slack.
    pub delta: f64,
}

impl Default for ObjectiveConfig {
    fn default() -> Self {
        ObjectiveConfig {
            // With equal weights cover outweighs agreement and the search
            // settles on broad, inaccurate rules. Weighting disagreement 4x
            // makes a rule worth adding only above 75% precision.
            lambdas: [1.0, 1.0, 1.0, 1.0, 4.0, 1.0],
            eps1: 10,
            eps2: 4,
            eps3: 5,
            delta: 0.1,
        }
    }
}

impl ObjectiveConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lambdas.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
            return Err(Error::Config(format!(
                "lambdas must be finite and >= 0: {:?}",
                self.lambdas
            )));
        }
        if self.eps1 < 1 || self.eps2 < 1 || self.eps3 < 1 {
            return Err(Error::Config("eps1, eps2 and eps3 must be at least 1".into()));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::Config(format!("delta must be > 0, got {}", self.delta)));
        }
        Ok(())
    }
}

/// Everything the measures are evaluated against: the fitting rows, the labels
/// a rule set should agree with (black-box output or ground truth), the
/// candidate pools and the feature policy.
pub struct MeasureContext<'a> {
    data: &'a TabularDataset,
    target: &'a [u32],
    pools: &'a CandidatePools,
    policy: &'a FeaturePolicy,
    w_max: usize,
    nd_index: HashMap<&'a Conjunction, usize>,
    dl_index: HashMap<&'a Conjunction, usize>,
    nd_rows: Vec<RowSet>,
    dl_rows: Vec<RowSet>,
}

impl<'a> MeasureContext<'a> {
    pub fn new(
        data: &'a TabularDataset,
        target: &'a [u32],
        pools: &'a CandidatePools,
        policy: &'a FeaturePolicy,
    ) -> Result<Self> {
        if data.n_rows() == 0 {
            return Err(Error::EmptyDataset);
        }
        if target.len() != data.n_rows() {
            return Err(Error::Schema(format!(
                "{} target labels for {} rows",
                target.len(),
                data.n_rows()
            )));
        }
        if let Some(bad) = target.iter().find(|&&t| t as usize >= data.labels().len()) {
            return Err(Error::UnknownLabel(bad.to_string()));
        }
        let rows = |list: &[Conjunction]| -> Result<Vec<RowSet>> {
            list.par_iter().map(|c| conjunction_rows(c, data)).collect()
        };
        Ok(MeasureContext {
            data,
            target,
            pools,
            policy,
            w_max: pools.max_width(),
            nd_index: pools.nd.iter().enumerate().map(|(i, c)| (c, i)).collect(),
            dl_index: pools.dl.iter().enumerate().map(|(i, c)| (c, i)).collect(),
            nd_rows: rows(&pools.nd)?,
            dl_rows: rows(&pools.dl)?,
        })
    }

    pub fn data(&self) -> &'a TabularDataset {
        self.data
    }

    pub fn target(&self) -> &'a [u32] {
        self.target
    }

    pub fn pools(&self) -> &'a CandidatePools {
        self.pools
    }

    pub fn policy(&self) -> &'a FeaturePolicy {
        self.policy
    }

    pub fn w_max(&self) -> usize {
        self.w_max
    }

    pub fn n_rows(&self) -> usize {
        self.data.n_rows()
    }

    pub(crate) fn nd_rows(&self, i: usize) -> &RowSet {
        &self.nd_rows[i]
    }

    pub(crate) fn dl_rows(&self, i: usize) -> &RowSet {
        &self.dl_rows[i]
    }

    /// `(nd index, dl index, label index)` of a rule, or an error when the rule
    /// is not drawn from the pools and label set.
    pub fn locate(&self, rule: &Rule) -> Result<(usize, usize, u32)> {
        let not_found = || Error::RuleNotInPools(rule.to_string());
        let q = *self.nd_index.get(&rule.q).ok_or_else(not_found)?;
        let s = *self.dl_index.get(&rule.s).ok_or_else(not_found)?;
        let c = self.data.labels().index_of(&rule.c).map_err(|_| not_found())?;
        Ok((q, s, c))
    }

    /// `|ND| * |DL|`
    fn pair_count(&self) -> i128 {
        self.pools.nd.len() as i128 * self.pools.dl.len() as i128
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawMeasures {
    pub size: u64,
    pub maxwidth: u64,
    pub numpreds: u64,
    pub numdsets: u64,
    pub featureoverlap: u64,
    pub ruleoverlap: u64,
    pub cover: u64,
    pub disagreement: u64,
    pub coverdesired: u64,
}

/// Number of features shared by a descriptor and an antecedent.
pub fn feature_overlap(q: &Conjunction, s: &Conjunction) -> u64 {
    q.features().intersection(&s.features()).count() as u64
}

/// The measures that depend only on rule structure.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Structure {
    pub size: u64,
    pub maxwidth: u64,
    pub numpreds: u64,
    pub numdsets: u64,
    pub featureoverlap: u64,
}

pub fn structure(rules: &[Rule]) -> Structure {
    let dsets: BTreeSet<&Conjunction> = rules.iter().map(|r| &r.q).collect();
    Structure {
        size: rules.len() as u64,
        maxwidth: rules
            .iter()
            .map(|r| r.q.width().max(r.s.width()) as u64)
            .max()
            .unwrap_or(0),
        numpreds: rules.iter().map(|r| (r.q.width() + r.s.width()) as u64).sum(),
        numdsets: dsets.len() as u64,
        featureoverlap: dsets
            .iter()
            .map(|q| rules.iter().map(|r| feature_overlap(q, &r.s)).sum::<u64>())
            .sum(),
    }
}

/// Number of desired features appearing in some descriptor or antecedent.
pub fn cover_desired(rules: &[Rule], policy: &FeaturePolicy) -> u64 {
    policy
        .desired
        .iter()
        .filter(|d| rules.iter().any(|r| r.mentions(d)))
        .count() as u64
}

pub fn raw_measures(rules: &[Rule], ctx: &MeasureContext<'_>) -> Result<RawMeasures> {
    let mut rules = rules.to_vec();
    rules.sort();
    rules.dedup();
    let mut covers = Vec::with_capacity(rules.len());
    let mut disagreement = 0u64;
    for r in &rules {
        let (q, s, c) = ctx.locate(r)?;
        let rows = ctx.nd_rows(q).and(ctx.dl_rows(s));
        disagreement += rows.iter_ones().filter(|&x| ctx.target[x] != c).count() as u64;
        covers.push(rows);
    }
    let mut ruleoverlap = 0u64;
    for i in 0..covers.len() {
        for j in 0..covers.len() {
            if i != j {
                ruleoverlap += covers[i].count_and(&covers[j]) as u64;
            }
        }
    }
    let mut union = RowSet::empty(ctx.n_rows());
    for c in &covers {
        union.or_assign(c);
    }
    let st = structure(&rules);
    Ok(RawMeasures {
        size: st.size,
        maxwidth: st.maxwidth,
        numpreds: st.numpreds,
        numdsets: st.numdsets,
        featureoverlap: st.featureoverlap,
        ruleoverlap,
        cover: union.count() as u64,
        disagreement,
        coverdesired: cover_desired(&rules, ctx.policy),
    })
}

/// Exact values of f1..f6. May hold negative values for rule sets that break
/// the normalizing bounds; [`ObjectiveTerms::check_non_negative`] rejects those.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectiveTerms(pub [i128; 6]);

impl ObjectiveTerms {
    pub fn from_measures(m: &RawMeasures, ctx: &MeasureContext<'_>) -> Self {
        let pairs = ctx.pair_count();
        let w_max = ctx.w_max as i128;
        let n = ctx.n_rows() as i128;
        ObjectiveTerms([
            2 * w_max * pairs - m.numpreds as i128,
            w_max * pairs - m.featureoverlap as i128,
            n * pairs * pairs - m.ruleoverlap as i128,
            m.cover as i128,
            n * pairs - m.disagreement as i128,
            m.coverdesired as i128,
        ])
    }

    pub fn check_non_negative(&self) -> Result<()> {
        match self.0.iter().position(|&v| v < 0) {
            Some(i) => Err(Error::NegativeTerm {
                term: i + 1,
                value: self.0[i],
            }),
            None => Ok(()),
        }
    }

    pub fn weighted(&self, lambdas: &[f64; 6]) -> f64 {
        self.0.iter().zip(lambdas).map(|(&f, l)| l * f as f64).sum()
    }

    /// `objective(self) - objective(base)`, computed from exact term differences.
    pub fn weighted_gain(&self, base: &ObjectiveTerms, lambdas: &[f64; 6]) -> f64 {
        self.0
            .iter()
            .zip(&base.0)
            .zip(lambdas)
            .map(|((&a, &b), l)| l * (a - b) as f64)
            .sum()
    }
}

pub fn objective_terms(rules: &[Rule], ctx: &MeasureContext<'_>) -> Result<ObjectiveTerms> {
    Ok(ObjectiveTerms::from_measures(&raw_measures(rules, ctx)?, ctx))
}

/// The weighted objective. Constraints are not checked here.
pub fn objective(rules: &[Rule], ctx: &MeasureContext<'_>, cfg: &ObjectiveConfig) -> Result<f64> {
    let terms = objective_terms(rules, ctx)?;
    terms.check_non_negative()?;
    Ok(terms.weighted(&cfg.lambdas))
}

/// Size, maximum width and number of distinct descriptors within their bounds
/// (inclusive).
pub fn constraints_ok(rules: &[Rule], cfg: &ObjectiveConfig) -> bool {
    let st = structure(rules);
    st.size <= cfg.eps1 as u64 && st.maxwidth <= cfg.eps2 as u64 && st.numdsets <= cfg.eps3 as u64
}

/// The nine raw measures, six terms and the weighted objective of one rule set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureDump {
    pub raw: RawMeasures,
    pub terms: ObjectiveTerms,
    pub weighted_terms: [f64; 6],
    pub objective: f64,
    pub feasible: bool,
}

pub fn dump_measures(rules: &[Rule], ctx: &MeasureContext<'_>, cfg: &ObjectiveConfig) -> Result<MeasureDump> {
    let raw = raw_measures(rules, ctx)?;
    let terms = ObjectiveTerms::from_measures(&raw, ctx);
    let mut weighted_terms = [0.0; 6];
    for (i, w) in weighted_terms.iter_mut().enumerate() {
        *w = cfg.lambdas[i] * terms.0[i] as f64;
    }
    Ok(MeasureDump {
        raw,
        terms,
        weighted_terms,
        objective: terms.weighted(&cfg.lambdas),
        feasible: constraints_ok(rules, cfg),
    })
}
