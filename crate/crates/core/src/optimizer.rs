//! Local search over rule sets drawn from `nd x dl x labels`.
//!
//! The search starts from the best single rule and repeatedly applies the best
//! single add, delete or swap that keeps the size, width and descriptor-count
//! constraints and improves the objective by a factor of at least
//! `1 + delta / n^4`, where `n` is the number of candidate rules. It stops at a
//! local optimum or when the move budget runs out, and finally falls back to
//! the empty rule set if that scores higher.
//!
//! Moves are scored from exact integer term differences and ties go to the
//! first move in canonical order (adds, then deletes, then swaps), so the
//! result does not depend on thread scheduling.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::audit::relative_error_labels;
use crate::cover::RowSet;
use crate::data::TabularDataset;
use crate::error::{Error, Result};
use crate::measures::{cover_desired, raw_measures, MeasureContext, ObjectiveConfig, ObjectiveTerms, RawMeasures};
use crate::mining::{cap_pools, filter_pools, CandidatePools, PoolCaps};
use crate::model::{predict_dataset, Rule, TwoLevelDecisionSet};
use crate::policy::FeaturePolicy;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchParams {
    /// Recorded in reports. The search itself is deterministic.
    pub seed: u64,
    /// Maximum number of accepted moves.
    pub budget: usize,
}

impl Default for SearchParams {
    fn default() -> Self {
        SearchParams {
            seed: 0,
            budget: 10_000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MoveKind {
    Init,
    Add,
    Delete,
    Swap,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MoveRecord {
    pub kind: MoveKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub added: Option<Rule>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub removed: Option<Rule>,
    pub gain: f64,
    pub accepted: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchState {
    pub current: TwoLevelDecisionSet,
    pub objective_value: f64,
    pub iteration: usize,
    pub rng_seed: u64,
    pub move_log: Vec<MoveRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub final_objective: f64,
    pub per_term_values: ObjectiveTerms,
    pub weighted_terms: [f64; 6],
    pub raw_measures: RawMeasures,
    pub iterations: usize,
    pub feasible: bool,
    pub warnings: Vec<String>,
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub struct Optimized {
    pub state: SearchState,
    pub report: RunReport,
}

impl Optimized {
    pub fn model(&self) -> &TwoLevelDecisionSet {
        &self.state.current
    }

    pub fn into_model(self) -> TwoLevelDecisionSet {
        self.state.current
    }
}

#[derive(Clone, Copy, Debug)]
struct Triple {
    q: usize,
    s: usize,
    c: u32,
    pair: usize,
}

/// Everything about the candidate rules that does not change during search.
struct Ground<'c, 'a> {
    ctx: &'c MeasureContext<'a>,
    triples: Vec<Triple>,
    pair_rows: Vec<RowSet>,
    pair_count: Vec<u64>,
    disagreement: Vec<u64>,
    q_width: Vec<u64>,
    s_width: Vec<u64>,
    q_features: Vec<RowSet>,
    s_features: Vec<RowSet>,
    desired: Vec<RowSet>,
    bounds: [i128; 6],
}

impl<'c, 'a> Ground<'c, 'a> {
    fn new(ctx: &'c MeasureContext<'a>, cfg: &ObjectiveConfig) -> Self {
        let pools = ctx.pools();
        let data = ctx.data();
        let schema = data.schema();
        let n_feat = schema.features().len();
        let feature_mask = |c: &crate::model::Conjunction| {
            let names = c.features();
            RowSet::from_fn(n_feat, |i| names.contains(schema.features()[i].name.as_str()))
        };
        let desired: Vec<&str> = ctx.policy().desired.iter().map(String::as_str).collect();
        let desired_mask = |c: &crate::model::Conjunction| RowSet::from_fn(desired.len(), |i| c.mentions(desired[i]));

        let labels = data.labels();
        let mut label_order: Vec<u32> = (0..labels.len() as u32).collect();
        label_order.sort_by(|&a, &b| labels.get(a).cmp(labels.get(b)));
        let n_labels = labels.len();
        let n = ctx.n_rows();
        let target = ctx.target();
        let label_rows: Vec<RowSet> = (0..n_labels as u32)
            .map(|c| RowSet::from_fn(n, |x| target[x] == c))
            .collect();

        let n_dl = pools.dl.len();
        let pairs: Vec<(usize, usize)> = (0..pools.nd.len())
            .flat_map(|q| (0..n_dl).map(move |s| (q, s)))
            .filter(|&(q, s)| pools.nd[q].width().max(pools.dl[s].width()) <= cfg.eps2)
            .collect();
        // A rule whose descriptor and antecedent never hold together cannot
        // change a prediction, but would still count towards coverdesired.
        let (pairs, pair_rows): (Vec<(usize, usize)>, Vec<RowSet>) = pairs
            .par_iter()
            .map(|&(q, s)| ((q, s), ctx.nd_rows(q).and(ctx.dl_rows(s))))
            .filter(|(_, rows)| rows.count() > 0)
            .unzip();
        let pair_count: Vec<u64> = pair_rows.iter().map(|r| r.count() as u64).collect();
        let mut triples = Vec::with_capacity(pairs.len() * n_labels);
        let mut disagreement = Vec::with_capacity(pairs.len() * n_labels);
        for (pair, &(q, s)) in pairs.iter().enumerate() {
            for &c in &label_order {
                triples.push(Triple { q, s, c, pair });
                let agree = pair_rows[pair].count_and(&label_rows[c as usize]) as u64;
                disagreement.push(pair_count[pair] - agree);
            }
        }

        let pair_total = pools.nd.len() as i128 * n_dl as i128;
        let w_max = ctx.w_max() as i128;
        let n = n as i128;
        Ground {
            ctx,
            triples,
            pair_rows,
            pair_count,
            disagreement,
            q_width: pools.nd.iter().map(|c| c.width() as u64).collect(),
            s_width: pools.dl.iter().map(|c| c.width() as u64).collect(),
            q_features: pools.nd.iter().map(feature_mask).collect(),
            s_features: pools.dl.iter().map(feature_mask).collect(),
            desired: {
                let q: Vec<RowSet> = pools.nd.iter().map(desired_mask).collect();
                let s: Vec<RowSet> = pools.dl.iter().map(desired_mask).collect();
                let mut out = Vec::with_capacity(pairs.len());
                for &(qi, si) in &pairs {
                    let mut m = q[qi].clone();
                    m.or_assign(&s[si]);
                    out.push(m);
                }
                out
            },
            bounds: [
                2 * w_max * pair_total,
                w_max * pair_total,
                n * pair_total * pair_total,
                0,
                n * pair_total,
                0,
            ],
        }
    }

    fn rule(&self, t: usize) -> Rule {
        let tr = self.triples[t];
        let pools = self.ctx.pools();
        Rule::new(
            pools.nd[tr.q].clone(),
            pools.dl[tr.s].clone(),
            self.ctx.data().labels().get(tr.c),
        )
    }

    fn rows(&self, t: usize) -> &RowSet {
        &self.pair_rows[self.triples[t].pair]
    }

    /// `[numpreds, featureoverlap, coverdesired, numdsets]` of a rule list, or
    /// `None` when it has too many rules or descriptors. Width is already
    /// enforced by the ground set.
    fn structure(&self, rules: &[usize], cfg: &ObjectiveConfig) -> Option<[u64; 4]> {
        if rules.len() > cfg.eps1 {
            return None;
        }
        let mut dsets: Vec<usize> = rules.iter().map(|&t| self.triples[t].q).collect();
        dsets.sort_unstable();
        dsets.dedup();
        if dsets.len() > cfg.eps3 {
            return None;
        }
        let numpreds = rules
            .iter()
            .map(|&t| self.q_width[self.triples[t].q] + self.s_width[self.triples[t].s])
            .sum();
        let featureoverlap = dsets
            .iter()
            .map(|&q| {
                rules
                    .iter()
                    .map(|&t| self.q_features[q].count_and(&self.s_features[self.triples[t].s]) as u64)
                    .sum::<u64>()
            })
            .sum();
        let coverdesired = match rules.first() {
            None => 0,
            Some(&first) => {
                let mut m = self.desired[self.triples[first].pair].clone();
                for &t in &rules[1..] {
                    m.or_assign(&self.desired[self.triples[t].pair]);
                }
                m.count() as u64
            }
        };
        Some([numpreds, featureoverlap, coverdesired, dsets.len() as u64])
    }

    fn terms(&self, structure: [u64; 4], ruleoverlap: u64, cover: u64, disagreement: u64) -> [i128; 6] {
        let [numpreds, featureoverlap, coverdesired, _] = structure;
        let b = &self.bounds;
        [
            b[0] - numpreds as i128,
            b[1] - featureoverlap as i128,
            b[2] - ruleoverlap as i128,
            cover as i128,
            b[4] - disagreement as i128,
            coverdesired as i128,
        ]
    }
}

/// The current rule list with the row bookkeeping needed to score moves.
struct Current {
    rules: Vec<usize>,
    union: RowSet,
    once: RowSet,
    overlap: Vec<Vec<u64>>,
    ruleoverlap: u64,
    cover: u64,
    disagreement: u64,
    terms: [i128; 6],
}

impl Current {
    fn new(g: &Ground<'_, '_>, mut rules: Vec<usize>, cfg: &ObjectiveConfig) -> Self {
        rules.sort_unstable();
        let n = g.ctx.n_rows();
        let mut counts = vec![0u32; n];
        for &t in &rules {
            for x in g.rows(t).iter_ones() {
                counts[x] += 1;
            }
        }
        let union = RowSet::from_fn(n, |x| counts[x] >= 1);
        let once = RowSet::from_fn(n, |x| counts[x] == 1);
        let overlap: Vec<Vec<u64>> = rules
            .iter()
            .map(|&a| rules.iter().map(|&b| g.rows(a).count_and(g.rows(b)) as u64).collect())
            .collect();
        let ruleoverlap = (0..rules.len())
            .flat_map(|i| (0..rules.len()).map(move |j| (i, j)))
            .filter(|(i, j)| i != j)
            .map(|(i, j)| overlap[i][j])
            .sum();
        let cover = union.count() as u64;
        let disagreement = rules.iter().map(|&t| g.disagreement[t]).sum();
        let st = g.structure(&rules, cfg).expect("current rule set is feasible");
        let terms = g.terms(st, ruleoverlap, cover, disagreement);
        Current {
            rules,
            union,
            once,
            overlap,
            ruleoverlap,
            cover,
            disagreement,
            terms,
        }
    }

    /// Terms after removing the rule at position `remove` and adding triple
    /// `add`; `None` if the result breaks a constraint.
    fn score(
        &self,
        g: &Ground<'_, '_>,
        remove: Option<usize>,
        add: Option<usize>,
        cfg: &ObjectiveConfig,
    ) -> Option<[i128; 6]> {
        let mut next: Vec<usize> = self
            .rules
            .iter()
            .enumerate()
            .filter(|&(i, _)| Some(i) != remove)
            .map(|(_, &t)| t)
            .collect();
        next.extend(add);
        let st = g.structure(&next, cfg)?;

        let mut ruleoverlap = self.ruleoverlap as i128;
        let mut cover = self.cover as i128;
        let mut disagreement = self.disagreement as i128;
        if let Some(o) = remove {
            let t = self.rules[o];
            let shared: u64 = (0..self.rules.len())
                .filter(|&i| i != o)
                .map(|i| self.overlap[o][i])
                .sum();
            ruleoverlap -= 2 * shared as i128;
            cover -= g.rows(t).count_and(&self.once) as i128;
            disagreement -= g.disagreement[t] as i128;
        }
        if let Some(r) = add {
            let rows = g.rows(r);
            let shared: u64 = self
                .rules
                .iter()
                .enumerate()
                .filter(|&(i, _)| Some(i) != remove)
                .map(|(_, &t)| rows.count_and(g.rows(t)) as u64)
                .sum();
            ruleoverlap += 2 * shared as i128;
            cover += (g.pair_count[g.triples[r].pair] - rows.count_and(&self.union) as u64) as i128;
            if let Some(o) = remove {
                cover += rows.count_and2(g.rows(self.rules[o]), &self.once) as i128;
            }
            disagreement += g.disagreement[r] as i128;
        }
        Some(g.terms(st, ruleoverlap as u64, cover as u64, disagreement as u64))
    }
}

fn gain(new: &[i128; 6], old: &[i128; 6], lambdas: &[f64; 6]) -> f64 {
    ObjectiveTerms(*new).weighted_gain(&ObjectiveTerms(*old), lambdas)
}

#[derive(Clone, Copy, Debug)]
enum Move {
    Add(usize),
    Delete(usize),
    Swap(usize, usize),
}

/// Best feasible move from `cur`, as `(gain, move, new terms)`; the first in
/// canonical order wins ties.
fn best_move(g: &Ground<'_, '_>, cur: &Current, cfg: &ObjectiveConfig) -> Option<(f64, Move, [i128; 6])> {
    let t = g.triples.len();
    let k = cur.rules.len();
    let in_set = |r: usize| cur.rules.binary_search(&r).is_ok();
    let decode = |i: usize| -> Move {
        if i < t {
            Move::Add(i)
        } else if i < t + k {
            Move::Delete(i - t)
        } else {
            let j = i - t - k;
            Move::Swap(j / t, j % t)
        }
    };
    let total = t + k + k * t;
    (0..total)
        .into_par_iter()
        .filter_map(|i| {
            let mv = decode(i);
            let terms = match mv {
                Move::Add(r) if !in_set(r) => cur.score(g, None, Some(r), cfg)?,
                Move::Delete(o) => cur.score(g, Some(o), None, cfg)?,
                Move::Swap(o, r) if !in_set(r) => cur.score(g, Some(o), Some(r), cfg)?,
                _ => return None,
            };
            Some((gain(&terms, &cur.terms, &cfg.lambdas), i, mv, terms))
        })
        .reduce_with(|a, b| if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a })
        .map(|(gain, _, mv, terms)| (gain, mv, terms))
}

fn record(g: &Ground<'_, '_>, cur: &Current, mv: Move, gain: f64, accepted: bool) -> MoveRecord {
    let (kind, added, removed) = match mv {
        Move::Add(r) => (MoveKind::Add, Some(g.rule(r)), None),
        Move::Delete(o) => (MoveKind::Delete, None, Some(g.rule(cur.rules[o]))),
        Move::Swap(o, r) => (MoveKind::Swap, Some(g.rule(r)), Some(g.rule(cur.rules[o]))),
    };
    MoveRecord {
        kind,
        added,
        removed,
        gain,
        accepted,
    }
}

fn apply(g: &Ground<'_, '_>, cur: &Current, mv: Move, cfg: &ObjectiveConfig) -> Current {
    let mut rules = cur.rules.clone();
    match mv {
        Move::Add(r) => rules.push(r),
        Move::Delete(o) => {
            rules.remove(o);
        }
        Move::Swap(o, r) => rules[o] = r,
    }
    Current::new(g, rules, cfg)
}

/// Maximizes the weighted objective of `ctx` subject to the constraints of `cfg`.
pub fn optimize(ctx: &MeasureContext<'_>, cfg: &ObjectiveConfig, params: &SearchParams) -> Result<Optimized> {
    cfg.validate()?;
    if params.budget == 0 {
        return Err(Error::Config("search budget must be at least 1".into()));
    }
    let pools = ctx.pools();
    if pools.is_empty() {
        return Err(Error::Infeasible {
            prohibited: ctx.policy().prohibited.iter().cloned().collect(),
        });
    }
    let g = Ground::new(ctx, cfg);
    let mut warnings = Vec::new();
    let mut log = Vec::new();
    let empty = Current::new(&g, Vec::new(), cfg);

    let n = (pools.nd.len() * pools.dl.len() * ctx.data().labels().len()) as f64;
    let slack = cfg.delta / n.powi(4);

    let mut cur = Current::new(&g, Vec::new(), cfg);
    let mut iterations = 0;
    let init = (0..g.triples.len())
        .into_par_iter()
        .filter_map(|r| {
            let terms = cur.score(&g, None, Some(r), cfg)?;
            Some((gain(&terms, &cur.terms, &cfg.lambdas), r))
        })
        .reduce_with(|a, b| if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a });
    match init {
        Some((gain, r)) => {
            let mut rec = record(&g, &cur, Move::Add(r), gain, true);
            rec.kind = MoveKind::Init;
            log.push(rec);
            cur = apply(&g, &cur, Move::Add(r), cfg);
        }
        None => warnings.push(format!(
            "no candidate rule has width <= {}; returning the empty rule set",
            cfg.eps2
        )),
    }

    if !cur.rules.is_empty() {
        while let Some((gain, mv, _)) = best_move(&g, &cur, cfg) {
            let value = ObjectiveTerms(cur.terms).weighted(&cfg.lambdas);
            let improving = gain > 0.0 && gain >= value * slack;
            if !improving {
                log.push(record(&g, &cur, mv, gain, false));
                break;
            }
            if iterations == params.budget {
                warnings.push(format!(
                    "search budget of {} moves exhausted before reaching a local optimum",
                    params.budget
                ));
                break;
            }
            log.push(record(&g, &cur, mv, gain, true));
            cur = apply(&g, &cur, mv, cfg);
            iterations += 1;
        }
    }

    if gain(&cur.terms, &empty.terms, &cfg.lambdas) < 0.0 {
        warnings.push("the empty rule set scores higher than the local optimum".into());
        cur = empty;
    }

    let rules: Vec<Rule> = cur.rules.iter().map(|&t| g.rule(t)).collect();
    let raw = raw_measures(&rules, ctx)?;
    let terms = ObjectiveTerms::from_measures(&raw, ctx);
    debug_assert_eq!(terms.0, cur.terms, "incremental terms drifted");
    terms.check_non_negative()?;
    let model = TwoLevelDecisionSet::fit(rules, ctx.data(), ctx.target())?;
    if let Some(f) = ctx.policy().prohibited.iter().find(|f| model.mentions(f)) {
        return Err(Error::PolicyViolation(format!(
            "prohibited feature `{f}` in optimized model"
        )));
    }
    let objective_value = terms.weighted(&cfg.lambdas);
    let mut weighted_terms = [0.0; 6];
    for (i, w) in weighted_terms.iter_mut().enumerate() {
        *w = cfg.lambdas[i] * terms.0[i] as f64;
    }
    let feasible = crate::measures::constraints_ok(model.rules(), cfg);
    Ok(Optimized {
        report: RunReport {
            final_objective: objective_value,
            per_term_values: terms,
            weighted_terms,
            raw_measures: raw,
            iterations,
            feasible,
            warnings,
            seed: params.seed,
        },
        state: SearchState {
            current: model,
            objective_value,
            iteration: iterations,
            rng_seed: params.seed,
            move_log: log,
        },
    })
}

/// [`optimize`] against the ground-truth label column instead of black-box
/// output, producing an interpretable classifier.
pub fn train_interpretable_blackbox(
    data: &TabularDataset,
    pools: &CandidatePools,
    policy: &FeaturePolicy,
    cfg: &ObjectiveConfig,
    params: &SearchParams,
) -> Result<Optimized> {
    let target = data.require_label()?;
    let ctx = MeasureContext::new(data, target, pools, policy)?;
    optimize(&ctx, cfg, params)
}

/// Requirements for [`tune_lambdas`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TuneTargets {
    pub min_fidelity: f64,
    pub max_size: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tuned {
    pub config: ObjectiveConfig,
    pub validation_fidelity: f64,
    pub size: usize,
    pub evaluations: usize,
    pub warnings: Vec<String>,
}

/// Data a tuning run fits on and scores against.
pub struct TuneData<'a> {
    pub train: &'a TabularDataset,
    pub train_target: &'a [u32],
    pub validation: &'a TabularDataset,
    pub validation_target: &'a [u32],
    pub pools: &'a CandidatePools,
    pub policy: &'a FeaturePolicy,
}

/// Coordinate descent over per-lambda value lists.
///
/// Starts from `base`'s weights where the lists contain them (otherwise from
/// the first value), then cycles through the six weights, setting each to the
/// value with the highest validation fidelity among those whose model has at
/// most `max_size` rules and uses every desired feature of the policy. The
/// current value is kept on ties. Stops after a full cycle without change.
pub fn tune_lambdas(
    data: &TuneData<'_>,
    grid: &[Vec<f64>; 6],
    targets: &TuneTargets,
    base: &ObjectiveConfig,
    params: &SearchParams,
) -> Result<Tuned> {
    if let Some(i) = grid.iter().position(Vec::is_empty) {
        return Err(Error::Config(format!("grid for lambda {} is empty", i + 1)));
    }
    let ctx = MeasureContext::new(data.train, data.train_target, data.pools, data.policy)?;
    let mut cache: HashMap<[u64; 6], (f64, usize, bool)> = HashMap::new();
    let mut eval = |lambdas: [f64; 6]| -> Result<(f64, usize, bool)> {
        let key = lambdas.map(f64::to_bits);
        if let Some(&hit) = cache.get(&key) {
            return Ok(hit);
        }
        let cfg = ObjectiveConfig {
            lambdas,
            ..base.clone()
        };
        let model = optimize(&ctx, &cfg, params)?.into_model();
        let pred = predict_dataset(&model, data.validation)?;
        let fidelity = 1.0 - relative_error_labels(&pred, data.validation_target)?;
        let covered = cover_desired(model.rules(), data.policy) as usize == data.policy.desired.len();
        let ok = covered && model.len() <= targets.max_size;
        cache.insert(key, (fidelity, model.len(), ok));
        Ok((fidelity, model.len(), ok))
    };

    let mut lambdas: [f64; 6] = std::array::from_fn(|i| {
        let b = base.lambdas[i];
        if grid[i].iter().any(|v| v.to_bits() == b.to_bits()) {
            b
        } else {
            grid[i][0]
        }
    });
    loop {
        let mut changed = false;
        for i in 0..6 {
            let (mut best_fid, _, mut best_ok) = eval(lambdas)?;
            let mut best_value = lambdas[i];
            for &v in &grid[i] {
                let mut trial = lambdas;
                trial[i] = v;
                let (fid, _, ok) = eval(trial)?;
                if (ok && !best_ok) || (ok == best_ok && fid > best_fid) {
                    best_fid = fid;
                    best_ok = ok;
                    best_value = v;
                }
            }
            if best_value.to_bits() != lambdas[i].to_bits() {
                lambdas[i] = best_value;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    let (validation_fidelity, size, ok) = eval(lambdas)?;
    let mut warnings = Vec::new();
    if !ok || validation_fidelity < targets.min_fidelity {
        warnings.push(format!(
            "no grid point met the targets (fidelity >= {}, size <= {}, all desired features used); \
             best found: fidelity {validation_fidelity}, size {size}",
            targets.min_fidelity, targets.max_size
        ));
    }
    Ok(Tuned {
        config: ObjectiveConfig {
            lambdas,
            ..base.clone()
        },
        validation_fidelity,
        size,
        evaluations: cache.len(),
        warnings,
    })
}

/// Unfiltered pools, pool caps, objective and search parameters shared by the
/// searches of one audit or experiment. Each search filters the pools by its
/// own policy before capping them.
#[derive(Clone, Debug)]
pub struct Search<'a> {
    pub pools: &'a CandidatePools,
    pub caps: PoolCaps,
    pub objective: ObjectiveConfig,
    pub params: SearchParams,
}

impl Search<'_> {
    pub fn pools_for(&self, policy: &FeaturePolicy) -> CandidatePools {
        cap_pools(&filter_pools(self.pools, policy), &self.caps)
    }

    /// Optimizes a rule set for `target` on `data` under `policy`.
    pub fn run(&self, data: &TabularDataset, target: &[u32], policy: &FeaturePolicy) -> Result<Optimized> {
        self.run_with(data, target, policy, &self.objective)
    }

    pub fn run_with(
        &self,
        data: &TabularDataset,
        target: &[u32],
        policy: &FeaturePolicy,
        objective: &ObjectiveConfig,
    ) -> Result<Optimized> {
        let pools = self.pools_for(policy);
        let ctx = MeasureContext::new(data, target, &pools, policy)?;
        optimize(&ctx, objective, &self.params)
    }
}
