//! Two-level decision sets: predicates, conjunctions, rule triples `(q, s, c)` and
//! the deterministic prediction semantics used everywhere else in the crate.
//!
//! A rule applies to an instance when the instance satisfies both its neighborhood
//! descriptor `q` and its inner antecedent `s`. Rules are unordered, so several may
//! apply; the one with the highest accuracy on the fitting data wins, and remaining
//! ties go to the rule that sorts first in canonical order. When nothing applies the
//! model falls back to its default label.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::cover::{conjunction_rows, RowSet};
use crate::data::{FeatureKind, Schema, TabularDataset};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Op {
    #[serde(rename = "EQ")]
    Eq,
    #[serde(rename = "GEQ")]
    Geq,
    #[serde(rename = "LEQ")]
    Leq,
}

impl Op {
    pub fn name(self) -> &'static str {
        match self {
            Op::Eq => "EQ",
            Op::Geq => "GEQ",
            Op::Leq => "LEQ",
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            Op::Eq => "=",
            Op::Geq => ">=",
            Op::Leq => "<=",
        }
    }
}

/// A discretized feature value: a bin index for numeric features, a level for
/// categorical ones.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Bin(u32),
    Level(String),
}

impl Value {
    pub fn level(s: impl Into<String>) -> Self {
        Value::Level(s.into())
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bin(b) => write!(f, "{b}"),
            Value::Level(l) => f.write_str(l),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "PredicateRepr")]
pub struct Predicate {
    pub feature: String,
    pub op: Op,
    pub value: Value,
}

#[derive(Deserialize)]
struct PredicateRepr {
    feature: String,
    op: Op,
    value: Value,
}

impl TryFrom<PredicateRepr> for Predicate {
    type Error = Error;

    fn try_from(r: PredicateRepr) -> Result<Self> {
        Predicate::new(r.feature, r.op, r.value)
    }
}

impl Predicate {
    /// `EQ` takes a level, `GEQ`/`LEQ` take a bin index.
    pub fn new(feature: impl Into<String>, op: Op, value: Value) -> Result<Self> {
        let feature = feature.into();
        match (op, &value) {
            (Op::Eq, Value::Level(_)) | (Op::Geq | Op::Leq, Value::Bin(_)) => Ok(Predicate { feature, op, value }),
            (Op::Eq, Value::Bin(_)) => Err(Error::KindMismatch {
                feature,
                op: op.name().into(),
                kind: "numeric",
            }),
            (_, Value::Level(_)) => Err(Error::KindMismatch {
                feature,
                op: op.name().into(),
                kind: "categorical",
            }),
        }
    }

    pub fn eq(feature: impl Into<String>, level: impl Into<String>) -> Self {
        Predicate {
            feature: feature.into(),
            op: Op::Eq,
            value: Value::Level(level.into()),
        }
    }

    pub fn geq(feature: impl Into<String>, bin: u32) -> Self {
        Predicate {
            feature: feature.into(),
            op: Op::Geq,
            value: Value::Bin(bin),
        }
    }

    pub fn leq(feature: impl Into<String>, bin: u32) -> Self {
        Predicate {
            feature: feature.into(),
            op: Op::Leq,
            value: Value::Bin(bin),
        }
    }

    pub fn holds(&self, value: &Value) -> Result<bool> {
        match (self.op, &self.value, value) {
            (Op::Eq, Value::Level(want), Value::Level(got)) => Ok(want == got),
            (Op::Geq, Value::Bin(b), Value::Bin(got)) => Ok(got >= b),
            (Op::Leq, Value::Bin(b), Value::Bin(got)) => Ok(got <= b),
            (_, _, got) => Err(Error::KindMismatch {
                feature: self.feature.clone(),
                op: self.op.name().into(),
                kind: match got {
                    Value::Bin(_) => "numeric",
                    Value::Level(_) => "categorical",
                },
            }),
        }
    }

    /// Human-readable form. With a schema, bin thresholds are shown as the
    /// original cut points: bin >= j means value >= cut[j-1], bin <= j means
    /// value < cut[j].
    pub fn render(&self, schema: Option<&Schema>) -> String {
        let cuts = schema
            .and_then(|s| s.feature(&self.feature))
            .filter(|(_, f)| f.kind == FeatureKind::Numeric)
            .map(|(_, f)| f.cuts.as_slice());
        match (self.op, &self.value, cuts) {
            (Op::Geq, Value::Bin(b), Some(cuts)) if *b >= 1 && (*b as usize) <= cuts.len() => {
                format!("{} >= {}", self.feature, cuts[*b as usize - 1])
            }
            (Op::Leq, Value::Bin(b), Some(cuts)) if (*b as usize) < cuts.len() => {
                format!("{} < {}", self.feature, cuts[*b as usize])
            }
            _ => format!("{} {} {}", self.feature, self.op.symbol(), self.value),
        }
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.feature, self.op.name(), self.value)
    }
}

/// Predicates in canonical order, at most one per `(feature, op)` pair.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Predicate>", into = "Vec<Predicate>")]
pub struct Conjunction(Vec<Predicate>);

impl TryFrom<Vec<Predicate>> for Conjunction {
    type Error = Error;

    fn try_from(preds: Vec<Predicate>) -> Result<Self> {
        Conjunction::new(preds)
    }
}

impl From<Conjunction> for Vec<Predicate> {
    fn from(c: Conjunction) -> Self {
        c.0
    }
}

impl Conjunction {
    pub fn new(mut preds: Vec<Predicate>) -> Result<Self> {
        preds.sort();
        preds.dedup();
        for pair in preds.windows(2) {
            if pair[0].feature == pair[1].feature && pair[0].op == pair[1].op {
                return Err(Error::DuplicatePredicate {
                    feature: pair[0].feature.clone(),
                    op: pair[0].op.name().into(),
                });
            }
        }
        Ok(Conjunction(preds))
    }

    pub fn empty() -> Self {
        Conjunction(Vec::new())
    }

    pub fn width(&self) -> usize {
        self.0.len()
    }

    pub fn predicates(&self) -> &[Predicate] {
        &self.0
    }

    pub fn features(&self) -> BTreeSet<&str> {
        self.0.iter().map(|p| p.feature.as_str()).collect()
    }

    pub fn mentions(&self, feature: &str) -> bool {
        self.0.iter().any(|p| p.feature == feature)
    }

    pub fn render(&self, schema: Option<&Schema>) -> String {
        if self.0.is_empty() {
            return "true".into();
        }
        self.0
            .iter()
            .map(|p| p.render(schema))
            .collect::<Vec<_>>()
            .join(" and ")
    }
}

impl fmt::Display for Conjunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, p) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{p}")?;
        }
        f.write_str("]")
    }
}

/// One `(q, s, c)` triple. The derived ordering is the canonical rule order.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Rule {
    pub q: Conjunction,
    pub s: Conjunction,
    pub c: String,
}

impl Rule {
    pub fn new(q: Conjunction, s: Conjunction, c: impl Into<String>) -> Self {
        Rule { q, s, c: c.into() }
    }

    pub fn features(&self) -> BTreeSet<&str> {
        let mut f = self.q.features();
        f.extend(self.s.features());
        f
    }

    pub fn mentions(&self, feature: &str) -> bool {
        self.q.mentions(feature) || self.s.mentions(feature)
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} -> {}", self.q, self.s, self.c)
    }
}

/// Ordered, duplicate-free class labels.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct LabelSet(Vec<String>);

impl TryFrom<Vec<String>> for LabelSet {
    type Error = Error;

    fn try_from(labels: Vec<String>) -> Result<Self> {
        LabelSet::new(labels)
    }
}

impl From<LabelSet> for Vec<String> {
    fn from(l: LabelSet) -> Self {
        l.0
    }
}

impl LabelSet {
    pub fn new(labels: Vec<String>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidLabelSet("no labels".into()));
        }
        let unique: BTreeSet<&String> = labels.iter().collect();
        if unique.len() != labels.len() {
            return Err(Error::InvalidLabelSet("duplicate labels".into()));
        }
        Ok(LabelSet(labels))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.0
    }

    pub fn index_of(&self, label: &str) -> Result<u32> {
        self.0
            .iter()
            .position(|l| l == label)
            .map(|i| i as u32)
            .ok_or_else(|| Error::UnknownLabel(label.into()))
    }

    pub fn get(&self, index: u32) -> &str {
        &self.0[index as usize]
    }
}

/// A single discretized instance, keyed by feature name.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Instance(BTreeMap<String, Value>);

impl Instance {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, feature: impl Into<String>, value: Value) -> Self {
        self.0.insert(feature.into(), value);
        self
    }

    pub fn get(&self, feature: &str) -> Option<&Value> {
        self.0.get(feature)
    }
}

impl FromIterator<(String, Value)> for Instance {
    fn from_iter<I: IntoIterator<Item = (String, Value)>>(iter: I) -> Self {
        Instance(iter.into_iter().collect())
    }
}

pub fn satisfies(x: &Instance, conj: &Conjunction) -> Result<bool> {
    for p in conj.predicates() {
        let v = x
            .get(&p.feature)
            .ok_or_else(|| Error::MissingFeature(p.feature.clone()))?;
        if !p.holds(v)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// A fitted two-level decision set. Rules are kept in canonical order with
/// `per_rule_accuracy[i]` belonging to `rules[i]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DecisionSetRepr")]
pub struct TwoLevelDecisionSet {
    rules: Vec<Rule>,
    default_label: String,
    per_rule_accuracy: Vec<f64>,
}

#[derive(Deserialize)]
struct DecisionSetRepr {
    rules: Vec<Rule>,
    default_label: String,
    per_rule_accuracy: Vec<f64>,
}

impl TryFrom<DecisionSetRepr> for TwoLevelDecisionSet {
    type Error = Error;

    fn try_from(r: DecisionSetRepr) -> Result<Self> {
        TwoLevelDecisionSet::new(r.rules, r.default_label, r.per_rule_accuracy)
    }
}

impl TwoLevelDecisionSet {
    pub fn new(rules: Vec<Rule>, default_label: impl Into<String>, per_rule_accuracy: Vec<f64>) -> Result<Self> {
        if rules.len() != per_rule_accuracy.len() {
            return Err(Error::MalformedModel(format!(
                "{} rules but {} accuracies",
                rules.len(),
                per_rule_accuracy.len()
            )));
        }
        if let Some(a) = per_rule_accuracy.iter().find(|a| !(0.0..=1.0).contains(*a)) {
            return Err(Error::MalformedModel(format!("accuracy {a} outside [0, 1]")));
        }
        let mut paired: Vec<(Rule, f64)> = rules.into_iter().zip(per_rule_accuracy).collect();
        paired.sort_by(|a, b| a.0.cmp(&b.0));
        if let Some(w) = paired.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::DuplicateRule(w[0].0.to_string()));
        }
        let (rules, per_rule_accuracy) = paired.into_iter().unzip();
        Ok(TwoLevelDecisionSet {
            rules,
            default_label: default_label.into(),
            per_rule_accuracy,
        })
    }

    /// Builds a model from bare rules and fits accuracies and the default label.
    pub fn fit(rules: Vec<Rule>, data: &TabularDataset, target: &[u32]) -> Result<Self> {
        let placeholder = data.labels().get(0).to_string();
        let n = rules.len();
        let unfitted = TwoLevelDecisionSet::new(rules, placeholder, vec![0.0; n])?;
        fit_rule_accuracies(&unfitted, data, target)
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn default_label(&self) -> &str {
        &self.default_label
    }

    pub fn per_rule_accuracy(&self) -> &[f64] {
        &self.per_rule_accuracy
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// Every feature referenced by some `q` or `s`.
    pub fn features(&self) -> BTreeSet<&str> {
        self.rules.iter().flat_map(|r| r.features()).collect()
    }

    pub fn mentions(&self, feature: &str) -> bool {
        self.rules.iter().any(|r| r.mentions(feature))
    }

    /// Nested if-then rendering, one outer block per distinct descriptor.
    pub fn render_text(&self, schema: Option<&Schema>) -> String {
        let mut groups: BTreeMap<&Conjunction, Vec<usize>> = BTreeMap::new();
        for (i, r) in self.rules.iter().enumerate() {
            groups.entry(&r.q).or_default().push(i);
        }
        let mut out = String::new();
        for (q, idx) in groups {
            out.push_str(&format!("If {}:\n", q.render(schema)));
            for i in idx {
                let r = &self.rules[i];
                out.push_str(&format!(
                    "    If {}, then predict {}  (accuracy {:.3})\n",
                    r.s.render(schema),
                    r.c,
                    self.per_rule_accuracy[i]
                ));
            }
        }
        out.push_str(&format!("Otherwise, predict {}\n", self.default_label));
        out
    }
}

pub fn predict<'a>(model: &'a TwoLevelDecisionSet, x: &Instance) -> Result<&'a str> {
    let mut best: Option<(usize, f64)> = None;
    for (i, r) in model.rules.iter().enumerate() {
        if satisfies(x, &r.q)? && satisfies(x, &r.s)? {
            let acc = model.per_rule_accuracy[i];
            if best.is_none_or(|(_, b)| acc > b) {
                best = Some((i, acc));
            }
        }
    }
    Ok(match best {
        Some((i, _)) => &model.rules[i].c,
        None => &model.default_label,
    })
}

/// Row-wise [`predict`] over a whole dataset, as indices into `data.labels()`.
pub fn predict_dataset(model: &TwoLevelDecisionSet, data: &TabularDataset) -> Result<Vec<u32>> {
    let labels = data.labels();
    let default = labels.index_of(&model.default_label)?;
    let mut pred = vec![default; data.n_rows()];
    let mut best = vec![f64::NEG_INFINITY; data.n_rows()];
    for (r, &acc) in model.rules.iter().zip(&model.per_rule_accuracy) {
        let c = labels.index_of(&r.c)?;
        for row in rule_rows(r, data)?.iter_ones() {
            if acc > best[row] {
                best[row] = acc;
                pred[row] = c;
            }
        }
    }
    Ok(pred)
}

pub(crate) fn rule_rows(rule: &Rule, data: &TabularDataset) -> Result<RowSet> {
    let mut rows = conjunction_rows(&rule.q, data)?;
    rows.and_assign(&conjunction_rows(&rule.s, data)?);
    Ok(rows)
}

/// Refits per-rule accuracies and the default label against `target`, given as
/// indices into `data.labels()`.
pub fn fit_rule_accuracies(
    model: &TwoLevelDecisionSet,
    data: &TabularDataset,
    target: &[u32],
) -> Result<TwoLevelDecisionSet> {
    if data.n_rows() == 0 {
        return Err(Error::EmptyDataset);
    }
    if target.len() != data.n_rows() {
        return Err(Error::Schema(format!(
            "target has {} entries for {} rows",
            target.len(),
            data.n_rows()
        )));
    }
    let labels = data.labels();
    let mut accuracies = Vec::with_capacity(model.rules.len());
    for r in &model.rules {
        let c = labels.index_of(&r.c)?;
        let rows = rule_rows(r, data)?;
        let covered = rows.count();
        let agree = rows.iter_ones().filter(|&i| target[i] == c).count();
        accuracies.push(agree as f64 / covered.max(1) as f64);
    }
    Ok(TwoLevelDecisionSet {
        rules: model.rules.clone(),
        default_label: labels.get(majority_label(target, labels.len())).to_string(),
        per_rule_accuracy: accuracies,
    })
}

/// Most frequent label index; ties go to the earlier label.
pub(crate) fn majority_label(target: &[u32], n_labels: usize) -> u32 {
    let mut counts = vec![0usize; n_labels];
    for &t in target {
        counts[t as usize] += 1;
    }
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    best as u32
}
