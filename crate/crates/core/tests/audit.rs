use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use twolevel::audit::{acceptable_relative_error, estimated_trust, relative_error, restriction_error};
use twolevel::data::{ColumnData, LabelColumns, TabularDataset};
use twolevel::measures::ObjectiveConfig;
use twolevel::mining::{mine_candidates, CandidatePools, MiningParams, PoolCaps};
use twolevel::model::{Conjunction, Predicate, Rule, TwoLevelDecisionSet};
use twolevel::optimizer::{Search, SearchParams};
use twolevel::policy::FeaturePolicy;
use twolevel::synth::generate_theorem1;

fn search(pools: &CandidatePools) -> Search<'_> {
    Search {
        pools,
        caps: PoolCaps::default(),
        objective: ObjectiveConfig::default(),
        params: SearchParams::default(),
    }
}

fn policy(desired: &[&str], prohibited: &[&str]) -> FeaturePolicy {
    FeaturePolicy::new(desired.iter().copied(), prohibited.iter().copied()).unwrap()
}

struct Theorem1 {
    fit: TabularDataset,
    eval: TabularDataset,
    pools: CandidatePools,
    b: TwoLevelDecisionSet,
}

fn theorem1() -> Theorem1 {
    let d = generate_theorem1(4_000, 7).unwrap();
    let split = d.split(&Default::default(), 7).unwrap();
    let pools = mine_candidates(&split.train, &MiningParams::default()).unwrap();
    let b_policy = policy(&["x2"], &["x1"]);
    let s = search(&pools);
    let b = s
        .run(&split.train, split.train.label().unwrap(), &b_policy)
        .unwrap()
        .into_model();
    Theorem1 {
        fit: split.train,
        eval: split.test,
        pools,
        b,
    }
}

#[test]
fn theorem1_restriction_and_acceptable_errors_vanish() {
    let t = theorem1();
    assert!(t.b.mentions("x2") && !t.b.mentions("x1"));
    let audit_policy = policy(&["x1"], &["x2"]);
    let s = search(&t.pools);
    let r = restriction_error(&t.b, &t.fit, &t.eval, &s, &audit_policy).unwrap();
    assert_eq!(r.eps_r, 0.0);
    assert!(r.b_plus.mentions("x1") && !r.b_plus.mentions("x2"));
    let gap = acceptable_relative_error(&r.b_plus, &t.fit, &t.eval, &s, &audit_policy).unwrap();
    assert_eq!(gap.eps_a, 0.0);
    assert_eq!((gap.loss_prime, gap.loss_plus), (0.0, 0.0));

    let e = s
        .run(
            &t.fit,
            &twolevel::model::predict_dataset(&t.b, &t.fit).unwrap(),
            &audit_policy,
        )
        .unwrap();
    assert_eq!(relative_error(e.model(), &t.b, &t.eval).unwrap(), 0.0);
    let trust = estimated_trust(e.model(), &t.b, &t.eval, &audit_policy, 0.05).unwrap();
    assert!(trust.o_hat && !trust.o_star_hat && trust.potentially_misleading);
}

#[test]
fn unrestricted_policy_has_no_acceptable_gap() {
    let t = theorem1();
    let s = search(&t.pools);
    let gap = acceptable_relative_error(&t.b, &t.fit, &t.eval, &s, &FeaturePolicy::default()).unwrap();
    assert_eq!(gap.e_prime, gap.e_plus);
    assert_eq!(gap.eps_a, 0.0);
}

#[test]
fn constant_blackbox_is_reproducible_without_features() {
    let t = theorem1();
    let constant = TwoLevelDecisionSet::new(vec![], "1", vec![]).unwrap();
    let s = search(&t.pools);
    let r = restriction_error(&constant, &t.fit, &t.eval, &s, &policy(&[], &["x2"])).unwrap();
    assert_eq!(r.eps_r, 0.0);
}

#[test]
fn self_explanation_is_not_misleading() {
    let t = theorem1();
    let trust = estimated_trust(&t.b, &t.b, &t.eval, &policy(&["x1"], &["x2"]), 0.05).unwrap();
    assert_eq!(trust.relative_error, 0.0);
    assert!(!trust.o_hat && !trust.o_star_hat && !trust.potentially_misleading);
}

/// `x1` and `x2` independent; the black box reads only `x2`, which is
/// prohibited. The best acceptable model is a constant, so `eps_r` is the
/// minority rate of `B`, which is `P(x2 = yes) = 0.3` on the population.
#[test]
fn independent_prohibited_feature_costs_its_minority_rate() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 8_000;
    let mut x1 = Vec::with_capacity(n);
    let mut x2 = Vec::with_capacity(n);
    for _ in 0..n {
        x1.push(if rng.random_bool(0.5) { "yes" } else { "no" });
        x2.push(if rng.random_bool(0.3) { "yes" } else { "no" });
    }
    let d = TabularDataset::new(
        vec![
            ("x1".into(), ColumnData::categorical(x1)),
            ("x2".into(), ColumnData::categorical(x2)),
        ],
        LabelColumns {
            labels: Some(vec!["0".into(), "1".into()]),
            ..Default::default()
        },
    )
    .unwrap();
    let yes = Conjunction::new(vec![Predicate::eq("x2", "yes")]).unwrap();
    let b = TwoLevelDecisionSet::new(vec![Rule::new(yes.clone(), yes, "1")], "0", vec![1.0]).unwrap();
    let split = d.split(&Default::default(), 1).unwrap();
    let pools = mine_candidates(&split.train, &MiningParams::default()).unwrap();
    let r = restriction_error(&b, &split.train, &split.test, &search(&pools), &policy(&[], &["x2"])).unwrap();
    let analytic = 0.3;
    assert!((r.eps_r - analytic).abs() <= 0.02, "eps_r = {}", r.eps_r);
    assert!(!r.b_plus.mentions("x2"));
}

#[test]
fn uncoverable_desired_feature_is_an_error() {
    let t = theorem1();
    let s = Search {
        caps: PoolCaps {
            max_nd: Some(1),
            max_dl: Some(1),
        },
        ..search(&t.pools)
    };
    // after capping, the only candidates cannot mention both x1 and x2
    let err = restriction_error(&t.b, &t.fit, &t.eval, &s, &policy(&["x1", "x2"], &[])).unwrap_err();
    assert!(matches!(err, twolevel::error::Error::Unacceptable { .. }), "{err}");
}
