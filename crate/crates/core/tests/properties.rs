use std::sync::OnceLock;

use proptest::prelude::*;
use twolevel::audit::disagreement_count;
use twolevel::data::{RawTable, SchemaConfig, TabularDataset};
use twolevel::measures::{constraints_ok, cover_desired, objective_terms, MeasureContext, ObjectiveConfig};
use twolevel::mining::{discretize, filter_pools, mine_candidates, CandidatePools, DiscretizeParams, MiningParams};
use twolevel::model::{Conjunction, Rule};
use twolevel::policy::FeaturePolicy;
use twolevel::synth::{generate_correlated_bail, Generator, SynthSpec};

struct Instance {
    data: TabularDataset,
    pools: CandidatePools,
    policy: FeaturePolicy,
    triples: Vec<Rule>,
}

fn instance() -> &'static Instance {
    static CELL: OnceLock<Instance> = OnceLock::new();
    CELL.get_or_init(|| {
        let (data, _) = generate_correlated_bail(&SynthSpec {
            generator: Generator::CorrelatedBail,
            n_rows: 400,
            seed: 17,
            correlation: 0.7,
            noise: 0.1,
        })
        .unwrap();
        let params = MiningParams {
            min_support: 0.2,
            max_width: 2,
            outer_max_width: Some(1),
        };
        let pools = mine_candidates(&data, &params).unwrap();
        let policy = FeaturePolicy::new(["pji", "pfta", "priors"], Vec::<String>::new()).unwrap();
        let mut triples = Vec::new();
        for q in &pools.nd {
            for s in &pools.dl {
                for c in data.labels().labels() {
                    triples.push(Rule::new(q.clone(), s.clone(), c.clone()));
                }
            }
        }
        Instance {
            data,
            pools,
            policy,
            triples,
        }
    })
}

/// `(R, R', r)` with `R ⊂ R'` and `r ∉ R'`, as triple indices.
fn nested() -> impl Strategy<Value = (Vec<usize>, Vec<usize>, usize)> {
    let n = instance().triples.len();
    (prop::collection::btree_set(0..n, 1..8), 0..n)
        .prop_flat_map(|(big, r)| {
            let big: Vec<usize> = big.into_iter().filter(|&i| i != r).collect();
            let len = big.len();
            (Just(big), prop::collection::vec(any::<bool>(), len), Just(r))
        })
        .prop_map(|(big, keep, r)| {
            let small = big.iter().zip(&keep).filter(|(_, &k)| k).map(|(&i, _)| i).collect();
            (small, big, r)
        })
}

fn rules(idx: &[usize]) -> Vec<Rule> {
    idx.iter().map(|&i| instance().triples[i].clone()).collect()
}

fn with(idx: &[usize], r: usize) -> Vec<Rule> {
    let mut v = rules(idx);
    v.push(instance().triples[r].clone());
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn relative_error_is_a_metric(
        (a, b, c) in (1usize..300).prop_flat_map(|n| {
            let v = || prop::collection::vec(0u32..3, n);
            (v(), v(), v())
        })
    ) {
        prop_assert!(disagreement_count(&a, &c) <= disagreement_count(&a, &b) + disagreement_count(&b, &c));
        prop_assert_eq!(disagreement_count(&a, &b), disagreement_count(&b, &a));
        prop_assert_eq!(disagreement_count(&a, &a), 0);
        prop_assert!(disagreement_count(&a, &b) <= a.len());
    }

    #[test]
    fn coverdesired_is_monotone_and_submodular((small, big, r) in nested()) {
        let p = &instance().policy;
        let f = |v: &[Rule]| cover_desired(v, p) as i64;
        let gain_small = f(&with(&small, r)) - f(&rules(&small));
        let gain_big = f(&with(&big, r)) - f(&rules(&big));
        prop_assert!(gain_small >= gain_big);
        prop_assert!(gain_big >= 0);
    }

    /// Every term except the featureoverlap one has diminishing returns.
    #[test]
    fn objective_without_featureoverlap_is_submodular((small, big, r) in nested()) {
        let inst = instance();
        let target = inst.data.label().unwrap();
        let ctx = MeasureContext::new(&inst.data, target, &inst.pools, &inst.policy).unwrap();
        let lambdas = [1.0, 0.0, 1.0, 1.0, 1.0, 1.0];
        let t = |v: &[Rule]| objective_terms(v, &ctx).unwrap();
        let gain_small = t(&with(&small, r)).weighted_gain(&t(&rules(&small)), &lambdas);
        let gain_big = t(&with(&big, r)).weighted_gain(&t(&rules(&big)), &lambdas);
        prop_assert!(gain_small >= gain_big - 1e-9, "{} < {}", gain_small, gain_big);
    }

    #[test]
    fn terms_are_non_negative_on_feasible_sets(set in prop::collection::btree_set(0..instance().triples.len(), 0..10)) {
        let inst = instance();
        let idx: Vec<usize> = set.into_iter().collect();
        let r = rules(&idx);
        prop_assume!(constraints_ok(&r, &ObjectiveConfig::default()));
        let ctx = MeasureContext::new(&inst.data, inst.data.label().unwrap(), &inst.pools, &inst.policy).unwrap();
        prop_assert!(objective_terms(&r, &ctx).unwrap().check_non_negative().is_ok());
    }

    #[test]
    fn filter_pools_is_idempotent_and_order_free(
        prohibited in prop::sample::subsequence(vec!["race", "gender", "zip_zone", "priors", "age"], 0..5),
        seed in any::<u64>(),
    ) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let inst = instance();
        let policy = FeaturePolicy::new(Vec::<String>::new(), prohibited.iter().copied()).unwrap();
        let once = filter_pools(&inst.pools, &policy);
        prop_assert_eq!(&filter_pools(&once, &policy), &once);

        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut nd = inst.pools.nd.clone();
        let mut dl = inst.pools.dl.clone();
        nd.shuffle(&mut rng);
        dl.shuffle(&mut rng);
        let shuffled = CandidatePools::new(nd, dl, &inst.data).unwrap();
        prop_assert_eq!(&filter_pools(&shuffled, &policy), &once);
        for c in once.nd.iter().chain(&once.dl) {
            prop_assert!(!prohibited.iter().any(|p| c.mentions(p)));
        }
    }

    #[test]
    fn apriori_subsets_are_frequent(min_support in 0.05f64..0.5) {
        let inst = instance();
        let params = MiningParams { min_support, max_width: 3, outer_max_width: None };
        let pools = mine_candidates(&inst.data, &params).unwrap();
        let n = inst.data.n_rows() as f64;
        let frequent = |c: &Conjunction| {
            let rows = twolevel::cover::conjunction_rows(c, &inst.data).unwrap().count() as f64;
            rows + 1e-9 >= min_support * n
        };
        for c in &pools.dl {
            prop_assert!(frequent(c));
            for skip in 0..c.width() {
                let sub: Vec<_> = c.predicates().iter().enumerate().filter(|&(i, _)| i != skip).map(|(_, p)| p.clone()).collect();
                if sub.is_empty() {
                    continue;
                }
                let sub = Conjunction::new(sub).unwrap();
                prop_assert!(frequent(&sub));
                prop_assert!(pools.support_of(&sub).is_some(), "missing sub-conjunction {}", sub);
            }
        }
    }

    #[test]
    fn discretization_is_deterministic(values in prop::collection::vec(-1e6f64..1e6, 1..60), n_bins in 2usize..6) {
        let csv: String = std::iter::once("x,y".to_string())
            .chain(values.iter().enumerate().map(|(i, v)| format!("{v},{}", i % 2)))
            .collect::<Vec<_>>()
            .join("\n");
        let config: SchemaConfig = serde_json::from_str(
            r#"{"columns":[{"name":"x","kind":"numeric","role":"feature"},{"name":"y","kind":"categorical","role":"label"}]}"#,
        ).unwrap();
        let run = || {
            let raw = RawTable::from_reader(csv.as_bytes(), "mem.csv").unwrap();
            let (_, spec) = discretize(&raw, &config, &DiscretizeParams { n_bins }).unwrap();
            serde_json::to_vec(&spec).unwrap()
        };
        prop_assert_eq!(run(), run());
    }
}
