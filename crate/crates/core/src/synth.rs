//! Seeded synthetic datasets.
//!
//! `theorem1` has two perfectly correlated standard normal features and a label
//! that thresholds one of them at zero. `correlated-bail` is a 15-feature
//! pretrial-release stand-in whose label comes from a planted rule set over
//! race, gender, priors, age, felony status and failures to appear, with proxy
//! features (`zip_zone`, `neighborhood`, `occupation`) that track race or
//! gender with strength `correlation`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::data::{ColumnData, LabelColumns, TabularDataset};
use crate::error::{Error, Result};
use crate::model::{Conjunction, Predicate, Rule, TwoLevelDecisionSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Generator {
    Theorem1,
    CorrelatedBail,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub generator: Generator,
    pub n_rows: usize,
    pub seed: u64,
    /// Proxy strength in `[0, 1]`; ignored by `theorem1`.
    #[serde(default)]
    pub correlation: f64,
    /// Label flip probability in `[0, 0.5)`; ignored by `theorem1`.
    #[serde(default)]
    pub noise: f64,
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_rows == 0 {
            return Err(Error::Config("n_rows must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.correlation) {
            return Err(Error::Config(format!(
                "correlation must be in [0, 1], got {}",
                self.correlation
            )));
        }
        if !(0.0..0.5).contains(&self.noise) {
            return Err(Error::Config(format!("noise must be in [0, 0.5), got {}", self.noise)));
        }
        Ok(())
    }
}

/// A generated dataset and, for `correlated-bail`, the rule set its labels were
/// drawn from.
#[derive(Clone, Debug)]
pub struct Synthesized {
    pub data: TabularDataset,
    pub planted: Option<TwoLevelDecisionSet>,
}

pub fn generate(spec: &SynthSpec) -> Result<Synthesized> {
    spec.validate()?;
    match spec.generator {
        Generator::Theorem1 => Ok(Synthesized {
            data: generate_theorem1(spec.n_rows, spec.seed)?,
            planted: None,
        }),
        Generator::CorrelatedBail => {
            let (data, planted) = generate_correlated_bail(spec)?;
            Ok(Synthesized {
                data,
                planted: Some(planted),
            })
        }
    }
}

/// Standard normal quartiles. Zero is the middle cut, so `x >= 0` is bin 2.
pub const THEOREM1_CUTS: [f64; 3] = [-0.674_489_750_196_081_7, 0.0, 0.674_489_750_196_081_7];

/// `x1 ~ N(0, 1)`, `x2 = x1`, `y = 1` iff `x2 >= 0`.
pub fn generate_theorem1(n_rows: usize, seed: u64) -> Result<TabularDataset> {
    if n_rows == 0 {
        return Err(Error::Config("n_rows must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let x1: Vec<f64> = (0..n_rows).map(|_| normal.sample(&mut rng)).collect();
    let y = x1
        .iter()
        .map(|&x| if x >= 0.0 { "1" } else { "0" }.to_string())
        .collect();
    TabularDataset::new(
        vec![
            ("x1".into(), ColumnData::numeric(x1.clone(), THEOREM1_CUTS.to_vec())),
            ("x2".into(), ColumnData::numeric(x1, THEOREM1_CUTS.to_vec())),
        ],
        LabelColumns {
            label: Some(y),
            labels: Some(vec!["0".into(), "1".into()]),
            label_name: Some("y".into()),
            ..Default::default()
        },
    )
}

fn pick<'a>(rng: &mut ChaCha8Rng, levels: &[&'a str]) -> &'a str {
    levels[rng.random_range(0..levels.len())]
}

/// A categorical proxy: with probability `strength` it copies `mapped`,
/// otherwise it is uniform over `levels`. Always consumes two draws.
fn proxy<'a>(rng: &mut ChaCha8Rng, strength: f64, mapped: &'a str, levels: &[&'a str]) -> &'a str {
    let u: f64 = rng.random();
    let fallback = pick(rng, levels);
    if u < strength {
        mapped
    } else {
        fallback
    }
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

/// The rule set labels are drawn from: high risk if
/// `race = black and priors >= 3`, or `gender = male and age < 25`, or
/// `is_felony = yes and pfta >= 2`.
pub fn planted_model() -> TwoLevelDecisionSet {
    let c = |p: Predicate| Conjunction::new(vec![p]).expect("single predicate");
    let rules = vec![
        Rule::new(
            c(Predicate::eq("race", "black")),
            c(Predicate::geq("priors", 2)),
            "high",
        ),
        Rule::new(c(Predicate::eq("gender", "male")), c(Predicate::leq("age", 0)), "high"),
        Rule::new(
            c(Predicate::eq("is_felony", "yes")),
            c(Predicate::geq("pfta", 2)),
            "high",
        ),
    ];
    TwoLevelDecisionSet::new(rules, "low", vec![1.0; 3]).expect("planted model is well formed")
}

pub fn generate_correlated_bail(spec: &SynthSpec) -> Result<(TabularDataset, TwoLevelDecisionSet)> {
    spec.validate()?;
    let n = spec.n_rows;
    let rho = spec.correlation;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let priors_dist = Poisson::new(2.0).expect("positive rate");
    let pfta_dist = Poisson::new(0.6).expect("positive rate");
    let charge_dist = Poisson::new(0.8).expect("positive rate");

    let mut cat: Vec<(&str, Vec<&str>)> = [
        "race",
        "gender",
        "zip_zone",
        "neighborhood",
        "occupation",
        "married",
        "pays_rent",
        "lives_with_children",
        "is_felony",
        "employed",
    ]
    .into_iter()
    .map(|name| (name, Vec::with_capacity(n)))
    .collect();
    let mut num: Vec<(&str, Vec<f64>, Vec<f64>)> = vec![
        ("age", Vec::with_capacity(n), vec![25.0, 35.0, 50.0]),
        ("priors", Vec::with_capacity(n), vec![1.0, 3.0, 6.0]),
        ("pji", Vec::with_capacity(n), vec![1.0, 2.0]),
        ("pfta", Vec::with_capacity(n), vec![1.0, 2.0]),
        ("charge_count", Vec::with_capacity(n), vec![2.0, 3.0]),
    ];
    let mut label = Vec::with_capacity(n);

    for _ in 0..n {
        let black = rng.random_bool(0.4);
        let male = rng.random_bool(0.75);
        let age = rng.random_range(18..=70) as f64;
        let priors = priors_dist.sample(&mut rng);
        let pji = Binomial::new(priors as u64, 0.5)
            .expect("valid binomial")
            .sample(&mut rng) as f64;
        let pfta = pfta_dist.sample(&mut rng);
        let zip = proxy(&mut rng, rho, if black { "a" } else { "b" }, &["a", "b"]);
        let hood = proxy(
            &mut rng,
            rho / 2.0,
            if black { "n1" } else { "n2" },
            &["n1", "n2", "n3"],
        );
        let occupation = proxy(
            &mut rng,
            rho,
            if male { "manual" } else { "service" },
            &["manual", "service"],
        );
        let married = rng.random_bool(0.4);
        let pays_rent = rng.random_bool(0.5);
        let children = rng.random_bool(0.35);
        let felony = rng.random_bool(0.3);
        let employed = rng.random_bool(0.6);
        let charges = 1.0 + charge_dist.sample(&mut rng);
        let flip = rng.random_bool(spec.noise);

        let high = (black && priors >= 3.0) || (male && age < 25.0) || (felony && pfta >= 2.0);
        label.push(if high != flip { "high" } else { "low" }.to_string());

        let values = [
            if black { "black" } else { "white" },
            if male { "male" } else { "female" },
            zip,
            hood,
            occupation,
            yes_no(married),
            yes_no(pays_rent),
            yes_no(children),
            yes_no(felony),
            yes_no(employed),
        ];
        for ((_, col), v) in cat.iter_mut().zip(values) {
            col.push(v);
        }
        for ((_, col, _), v) in num.iter_mut().zip([age, priors, pji, pfta, charges]) {
            col.push(v);
        }
    }

    let mut columns: Vec<(String, ColumnData)> = Vec::new();
    let mut cat = cat.into_iter();
    let mut num = num.into_iter();
    let mut take_cat = |k: usize, columns: &mut Vec<(String, ColumnData)>| {
        for (name, values) in cat.by_ref().take(k) {
            columns.push((name.into(), ColumnData::categorical(values)));
        }
    };
    // race, gender, then the numeric history, then proxies and the rest
    take_cat(2, &mut columns);
    for (name, values, cuts) in num.by_ref() {
        columns.push((name.into(), ColumnData::numeric(values, cuts)));
    }
    take_cat(8, &mut columns);

    let data = TabularDataset::new(
        columns,
        LabelColumns {
            label: Some(label),
            labels: Some(vec!["high".into(), "low".into()]),
            label_name: Some("y".into()),
            ..Default::default()
        },
    )?;
    Ok((data, planted_model()))
}
