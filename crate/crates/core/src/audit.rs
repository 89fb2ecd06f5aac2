//! Auditing a (black box, explanation) pair: relative error, acceptability,
//! the estimated trust predicates, and the restriction and acceptable relative
//! errors that bound how misleading an acceptable explanation can be.
//!
//! Relative error is the 0-1 disagreement rate over the rows of an explicitly
//! supplied evaluation dataset.

use serde::{Deserialize, Serialize};

use crate::data::TabularDataset;
use crate::error::{Error, Result};
use crate::model::{predict_dataset, TwoLevelDecisionSet};
use crate::optimizer::Search;
use crate::policy::FeaturePolicy;

/// Number of positions where `a` and `b` differ.
pub fn disagreement_count(a: &[u32], b: &[u32]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

/// Fraction of positions where two label vectors differ.
pub fn relative_error_labels(a: &[u32], b: &[u32]) -> Result<f64> {
    if a.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if a.len() != b.len() {
        return Err(Error::Schema(format!(
            "comparing {} predictions with {}",
            a.len(),
            b.len()
        )));
    }
    Ok(disagreement_count(a, b) as f64 / a.len() as f64)
}

/// `L(e, b)`: the fraction of rows of `data` on which the two models disagree.
pub fn relative_error(e: &TwoLevelDecisionSet, b: &TwoLevelDecisionSet, data: &TabularDataset) -> Result<f64> {
    if data.n_rows() == 0 {
        return Err(Error::EmptyDataset);
    }
    relative_error_labels(&predict_dataset(e, data)?, &predict_dataset(b, data)?)
}

/// Desired features that appear in no rule of `model`.
pub fn uncovered_desired(model: &TwoLevelDecisionSet, policy: &FeaturePolicy) -> Vec<String> {
    policy.desired.iter().filter(|d| !model.mentions(d)).cloned().collect()
}

/// Every desired feature appears in the model and no prohibited one does.
pub fn is_acceptable(model: &TwoLevelDecisionSet, policy: &FeaturePolicy) -> bool {
    uncovered_desired(model, policy).is_empty() && !policy.prohibited.iter().any(|p| model.mentions(p))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trust {
    pub relative_error: f64,
    pub o_hat: bool,
    pub o_star_hat: bool,
    pub potentially_misleading: bool,
}

fn check_eps_plus(eps_plus: f64) -> Result<()> {
    if (0.0..=1.0).contains(&eps_plus) {
        Ok(())
    } else {
        Err(Error::Config(format!("eps_plus must be in [0, 1], got {eps_plus}")))
    }
}

/// `o_hat`: the explanation is acceptable and within `eps_plus` of the black
/// box. `o_star_hat`: the black box is acceptable. The pair is potentially
/// misleading when the two disagree.
pub fn estimated_trust(
    e: &TwoLevelDecisionSet,
    b: &TwoLevelDecisionSet,
    data: &TabularDataset,
    policy: &FeaturePolicy,
    eps_plus: f64,
) -> Result<Trust> {
    check_eps_plus(eps_plus)?;
    let relative_error = relative_error(e, b, data)?;
    let o_hat = is_acceptable(e, policy) && relative_error <= eps_plus;
    let o_star_hat = is_acceptable(b, policy);
    Ok(Trust {
        relative_error,
        o_hat,
        o_star_hat,
        potentially_misleading: o_hat != o_star_hat,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Restriction {
    pub eps_r: f64,
    pub b_plus: TwoLevelDecisionSet,
    /// How many times the desired-feature weight was doubled.
    pub retries: usize,
}

/// Approximates the best acceptable black box `b_plus` by optimizing on `fit`
/// against `b`'s predictions with the policy's pools, and measures
/// `eps_r = L(b_plus, b)` on `eval`.
///
/// When the result misses a desired feature the search is repeated with the
/// desired-feature weight set to `max(lambda6, 1) * 2^k` for `k = 1, 2, 3`.
pub fn restriction_error(
    b: &TwoLevelDecisionSet,
    fit: &TabularDataset,
    eval: &TabularDataset,
    search: &Search<'_>,
    policy: &FeaturePolicy,
) -> Result<Restriction> {
    let target = predict_dataset(b, fit)?;
    let mut objective = search.objective.clone();
    let base = objective.lambdas[5].max(1.0);
    let mut retries = 0;
    loop {
        let b_plus = search.run_with(fit, &target, policy, &objective)?.into_model();
        let uncovered = uncovered_desired(&b_plus, policy);
        if uncovered.is_empty() {
            return Ok(Restriction {
                eps_r: relative_error(&b_plus, b, eval)?,
                b_plus,
                retries,
            });
        }
        if retries == 3 {
            return Err(Error::Unacceptable { uncovered });
        }
        retries += 1;
        objective.lambdas[5] = base * f64::from(1u32 << retries);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AcceptableGap {
    pub eps_a: f64,
    /// Best explanation of `b_plus` found without the policy.
    pub e_prime: TwoLevelDecisionSet,
    /// Best acceptable explanation of `b_plus` found.
    pub e_plus: TwoLevelDecisionSet,
    pub loss_prime: f64,
    pub loss_plus: f64,
}

/// The fidelity lost by explaining `b_plus` acceptably:
/// `eps_a = max(0, L(e_plus, b_plus) - L(e_prime, b_plus))`, measured on `eval`.
pub fn acceptable_relative_error(
    b_plus: &TwoLevelDecisionSet,
    fit: &TabularDataset,
    eval: &TabularDataset,
    search: &Search<'_>,
    policy: &FeaturePolicy,
) -> Result<AcceptableGap> {
    let target = predict_dataset(b_plus, fit)?;
    let e_prime = search.run(fit, &target, &FeaturePolicy::default())?.into_model();
    let e_plus = search.run(fit, &target, policy)?.into_model();
    let loss_prime = relative_error(&e_prime, b_plus, eval)?;
    let loss_plus = relative_error(&e_plus, b_plus, eval)?;
    Ok(AcceptableGap {
        eps_a: (loss_plus - loss_prime).max(0.0),
        e_prime,
        e_plus,
        loss_prime,
        loss_plus,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Theorem2 {
    /// `L(e_plus, b)`
    pub lhs: f64,
    /// `L(e, b) + 2 eps_r + eps_a`
    pub rhs: f64,
    pub bound_holds: bool,
    /// `rhs <= eps_plus`, which implies `e_plus` is potentially misleading.
    pub misleading_predicted: bool,
}

const ROUNDING: f64 = 1e-12;

pub fn theorem2_check(l_eb: f64, eps_r: f64, eps_a: f64, eps_plus: f64, l_eplus_b: f64) -> Theorem2 {
    let rhs = l_eb + 2.0 * eps_r + eps_a;
    Theorem2 {
        lhs: l_eplus_b,
        rhs,
        bound_holds: l_eplus_b <= rhs + ROUNDING,
        misleading_predicted: rhs <= eps_plus + ROUNDING,
    }
}

/// [`theorem2_check`] on disagreement counts over `n` rows, exact.
pub fn theorem2_check_counts(
    n: usize,
    l_eb: usize,
    eps_r: usize,
    eps_a: usize,
    eps_plus: f64,
    l_eplus_b: usize,
) -> Theorem2 {
    let rhs = l_eb + 2 * eps_r + eps_a;
    let n_f = n as f64;
    Theorem2 {
        lhs: l_eplus_b as f64 / n_f,
        rhs: rhs as f64 / n_f,
        bound_holds: l_eplus_b <= rhs,
        misleading_predicted: (rhs as f64) <= eps_plus * n_f,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub relative_error: f64,
    pub fidelity: f64,
    pub acceptable_explanation: bool,
    pub acceptable_blackbox: bool,
    pub o_hat: bool,
    pub o_star_hat: bool,
    pub potentially_misleading: bool,
    pub eps_plus: f64,
    pub eps_r: Option<f64>,
    pub eps_a: Option<f64>,
    pub theorem2_bound: Option<Theorem2>,
    /// `eps_r`, `eps_a` and the bound inputs come from local search
    /// rather than exact optima.
    pub approximate: bool,
}

impl AuditReport {
    pub fn verdict(&self) -> String {
        let status = if self.potentially_misleading {
            "POTENTIALLY MISLEADING"
        } else {
            "not misleading"
        };
        format!(
            "{status}: fidelity {:.4}, explanation {}, black box {}",
            self.fidelity,
            if self.acceptable_explanation {
                "acceptable"
            } else {
                "unacceptable"
            },
            if self.acceptable_blackbox {
                "acceptable"
            } else {
                "unacceptable"
            },
        )
    }
}

/// Audits explanation `e` of black box `b` on `data`.
pub fn audit(
    e: &TwoLevelDecisionSet,
    b: &TwoLevelDecisionSet,
    data: &TabularDataset,
    policy: &FeaturePolicy,
    eps_plus: f64,
) -> Result<AuditReport> {
    let trust = estimated_trust(e, b, data, policy, eps_plus)?;
    Ok(AuditReport {
        relative_error: trust.relative_error,
        fidelity: 1.0 - trust.relative_error,
        acceptable_explanation: is_acceptable(e, policy),
        acceptable_blackbox: trust.o_star_hat,
        o_hat: trust.o_hat,
        o_star_hat: trust.o_star_hat,
        potentially_misleading: trust.potentially_misleading,
        eps_plus,
        eps_r: None,
        eps_a: None,
        theorem2_bound: None,
        approximate: false,
    })
}
