//! End-to-end audit pipeline: split the data, train an interpretable black box
//! under its own policy, explain it under each variant policy, and audit every
//! explanation on the test split.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::audit::{
    acceptable_relative_error, audit, relative_error, relative_error_labels, restriction_error, theorem2_check,
    AuditReport,
};
use crate::data::{load_csv, SchemaConfig, SplitRatios, TabularDataset};
use crate::error::{Error, Result};
use crate::measures::ObjectiveConfig;
use crate::mining::{mine_candidates, CandidatePools, MiningParams, PoolCaps};
use crate::model::{predict_dataset, TwoLevelDecisionSet};
use crate::optimizer::{tune_lambdas, RunReport, Search, SearchParams, TuneData, TuneTargets, Tuned};
use crate::policy::FeaturePolicy;
use crate::synth::{generate, SynthSpec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    Synth(SynthSpec),
    Csv { path: PathBuf, schema: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlackboxConfig {
    pub policy: FeaturePolicy,
    #[serde(default)]
    pub objective: ObjectiveConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariantConfig {
    pub name: String,
    pub policy: FeaturePolicy,
    /// Overrides the experiment-wide explanation objective.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective: Option<ObjectiveConfig>,
}

/// Coordinate descent over the objective weights of the black box and of every
/// variant, scored on the validation split.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TuningConfig {
    /// Candidate values for each of the six weights.
    pub grid: [Vec<f64>; 6],
    pub targets: TuneTargets,
}

fn default_eps_plus() -> f64 {
    0.05
}

fn default_budget() -> usize {
    SearchParams::default().budget
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub data: DataSource,
    #[serde(default)]
    pub split: SplitRatios,
    #[serde(default)]
    pub mining: MiningParams,
    #[serde(default)]
    pub caps: PoolCaps,
    pub blackbox: BlackboxConfig,
    /// Objective for explanations and for the restriction and acceptable
    /// relative error searches.
    #[serde(default)]
    pub objective: ObjectiveConfig,
    pub variants: Vec<VariantConfig>,
    /// Policy the audit judges acceptability by.
    pub audit_policy: FeaturePolicy,
    #[serde(default = "default_eps_plus")]
    pub eps_plus: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_budget")]
    pub budget: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tuning: Option<TuningConfig>,
}

impl ExperimentConfig {
    /// Reads a config; relative CSV paths are resolved against its directory.
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut cfg: ExperimentConfig = serde_json::from_reader(fs::File::open(path)?)?;
        if let DataSource::Csv { path: data, schema } = &mut cfg.data {
            let base = path.parent().unwrap_or(Path::new("."));
            for p in [data, schema] {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.variants.is_empty() {
            return Err(Error::Config(
                "an experiment needs at least one explanation variant".into(),
            ));
        }
        for (i, v) in self.variants.iter().enumerate() {
            let ok = !v.name.is_empty()
                && v.name
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_');
            if !ok {
                return Err(Error::Config(format!(
                    "variant name `{}` must be non-empty ASCII letters, digits, `-` or `_`",
                    v.name
                )));
            }
            if self.variants[..i].iter().any(|w| w.name == v.name) {
                return Err(Error::Config(format!("duplicate variant name `{}`", v.name)));
            }
            if let Some(o) = &v.objective {
                o.validate()?;
            }
        }
        self.split.validate()?;
        self.objective.validate()?;
        self.blackbox.objective.validate()?;
        if let DataSource::Synth(s) = &self.data {
            s.validate()?;
        }
        if !(0.0..=1.0).contains(&self.eps_plus) {
            return Err(Error::Config(format!(
                "eps_plus must be in [0, 1], got {}",
                self.eps_plus
            )));
        }
        if self.budget == 0 {
            return Err(Error::Config("budget must be at least 1".into()));
        }
        if let Some(t) = &self.tuning {
            if self.split.validation <= 0.0 {
                return Err(Error::Config("tuning needs a non-empty validation split".into()));
            }
            for (i, values) in t.grid.iter().enumerate() {
                if values.is_empty() || values.iter().any(|v| !v.is_finite() || *v < 0.0) {
                    return Err(Error::Config(format!(
                        "tuning grid for lambda {} must be non-empty, finite and non-negative",
                        i + 1
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariantOutcome {
    pub name: String,
    pub policy: FeaturePolicy,
    pub model: TwoLevelDecisionSet,
    pub run: RunReport,
    pub audit: AuditReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tuning: Option<Tuned>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitSizes {
    pub train: usize,
    pub test: usize,
    pub validation: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoolSizes {
    pub nd: usize,
    pub dl: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub seed: u64,
    pub rows: SplitSizes,
    pub mined_pools: PoolSizes,
    pub blackbox: TwoLevelDecisionSet,
    pub blackbox_run: RunReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blackbox_tuning: Option<Tuned>,
    pub blackbox_train_accuracy: f64,
    pub blackbox_test_accuracy: f64,
    pub blackbox_acceptable: bool,
    pub eps_r: f64,
    pub eps_a: f64,
    pub b_plus: TwoLevelDecisionSet,
    /// Weights used for the `eps_r` and `eps_a` searches, when tuned.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restriction_tuning: Option<Tuned>,
    /// Weights used for the unrestricted reference explanation, when tuned.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_tuning: Option<Tuned>,
    /// Fidelity on the test split of the best explanation of the black box
    /// found without any policy.
    pub unrestricted_fidelity: f64,
    pub variants: Vec<VariantOutcome>,
}

impl ExperimentReport {
    pub fn variant(&self, name: &str) -> Option<&VariantOutcome> {
        self.variants.iter().find(|v| v.name == name)
    }

    /// Plain-text summary table: one row for the black box, one per variant.
    pub fn summary_text(&self) -> String {
        let yes = |b: bool| if b { "yes" } else { "no" };
        let bit = |b: bool| if b { "1" } else { "0" };
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<12} {:>9} {:>11} {:>6} {:>11} {:>11} {:>9}",
            "model", "fidelity", "acceptable", "o_hat", "o_star_hat", "misleading", "theorem2"
        );
        let _ = writeln!(
            out,
            "{:<12} {:>9} {:>11} {:>6} {:>11} {:>11} {:>9}",
            "Black Box",
            "-",
            yes(self.blackbox_acceptable),
            "-",
            bit(self.blackbox_acceptable),
            "-",
            "-"
        );
        for v in &self.variants {
            let a = &v.audit;
            let t2 = match &a.theorem2_bound {
                Some(t) if t.bound_holds => "holds",
                Some(_) => "violated",
                None => "-",
            };
            let _ = writeln!(
                out,
                "{:<12} {:>9.4} {:>11} {:>6} {:>11} {:>11} {:>9}",
                v.name,
                a.fidelity,
                yes(a.acceptable_explanation),
                bit(a.o_hat),
                bit(a.o_star_hat),
                yes(a.potentially_misleading),
                t2
            );
        }
        let _ = writeln!(
            out,
            "\nblack box accuracy: train {:.4}, test {:.4}",
            self.blackbox_train_accuracy, self.blackbox_test_accuracy
        );
        let _ = writeln!(
            out,
            "eps_r {:.4}  eps_a {:.4}  unrestricted fidelity {:.4}  (local-search approximations)",
            self.eps_r, self.eps_a, self.unrestricted_fidelity
        );
        out
    }
}

/// Writes artifacts as stages finish and records the failing stage.
struct Artifacts<'a> {
    dir: Option<&'a Path>,
}

impl Artifacts<'_> {
    fn write<T: Serialize>(&self, rel: &str, value: &T) -> Result<()> {
        self.write_text(rel, &(serde_json::to_string_pretty(value)? + "\n"))
    }

    fn write_text(&self, rel: &str, text: &str) -> Result<()> {
        let Some(dir) = self.dir else {
            return Ok(());
        };
        let path = dir.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(path, text)?;
        Ok(())
    }

    fn fail(&self, stage: &str, err: Error) -> Error {
        #[derive(Serialize)]
        struct Failure<'s> {
            stage: &'s str,
            error: String,
        }
        let _ = self.write(
            "failure.json",
            &Failure {
                stage,
                error: err.to_string(),
            },
        );
        err
    }
}

fn accuracy(data: &TabularDataset, m: &TwoLevelDecisionSet) -> Result<f64> {
    Ok(1.0 - relative_error_labels(&predict_dataset(m, data)?, data.require_label()?)?)
}

/// Tunes `search.objective` for `policy` when the config asks for it.
fn tune(
    cfg: &ExperimentConfig,
    search: &Search<'_>,
    train: &TabularDataset,
    train_target: &[u32],
    validation: &TabularDataset,
    validation_target: &[u32],
    policy: &FeaturePolicy,
) -> Result<Option<Tuned>> {
    let Some(t) = &cfg.tuning else {
        return Ok(None);
    };
    let pools = search.pools_for(policy);
    let data = TuneData {
        train,
        train_target,
        validation,
        validation_target,
        pools: &pools,
        policy,
    };
    tune_lambdas(&data, &t.grid, &t.targets, &search.objective, &search.params).map(Some)
}

pub fn load_source(source: &DataSource) -> Result<TabularDataset> {
    match source {
        DataSource::Synth(spec) => Ok(generate(spec)?.data),
        DataSource::Csv { path, schema } => load_csv(path, &SchemaConfig::from_path(schema)?),
    }
}

/// Runs the pipeline. With `out`, artifacts are written there as they are
/// produced, and a `failure.json` naming the failed stage is left on error.
// stage bodies run inside a closure so they can use `?`
#[allow(clippy::redundant_closure_call)]
pub fn run_experiment(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<ExperimentReport> {
    let art = Artifacts { dir: out };
    macro_rules! stage {
        ($name:expr, $e:expr) => {
            match (|| -> Result<_> { $e })() {
                Ok(v) => v,
                Err(e) => return Err(art.fail(&$name, e)),
            }
        };
    }

    stage!("config", cfg.validate());
    let data = stage!("load", load_source(&cfg.data));
    let split = stage!("split", data.split(&cfg.split, cfg.seed));
    let (train, test, validation) = (&split.train, &split.test, &split.validation);
    let pools: CandidatePools = stage!("mine", mine_candidates(train, &cfg.mining));
    let params = SearchParams {
        seed: cfg.seed,
        budget: cfg.budget,
    };

    let bb_search = Search {
        pools: &pools,
        caps: cfg.caps,
        objective: cfg.blackbox.objective.clone(),
        params,
    };
    let bb_tuning = stage!("tune:blackbox", {
        let target = train.require_label()?;
        let val_target = validation.require_label()?;
        tune(
            cfg,
            &bb_search,
            train,
            target,
            validation,
            val_target,
            &cfg.blackbox.policy,
        )
    });
    let bb = stage!("blackbox", {
        let target = train.require_label()?;
        let objective = bb_tuning.as_ref().map_or(&bb_search.objective, |t| &t.config);
        bb_search.run_with(train, target, &cfg.blackbox.policy, objective)
    });
    let blackbox = bb.state.current.clone();
    stage!("blackbox", art.write("blackbox.json", &blackbox));
    stage!("blackbox", art.write("blackbox.run.json", &bb.report));
    let b_train = stage!("blackbox", predict_dataset(&blackbox, train));
    let b_validation = stage!("blackbox", predict_dataset(&blackbox, validation));
    let blackbox_train_accuracy = stage!("blackbox", accuracy(train, &blackbox));
    let blackbox_test_accuracy = stage!("blackbox", accuracy(test, &blackbox));

    let search = Search {
        pools: &pools,
        caps: cfg.caps,
        objective: cfg.objective.clone(),
        params,
    };
    // the searches approximating best models are tuned like the models they stand in for
    let restriction_tuning = stage!(
        "tune:restriction",
        tune(
            cfg,
            &search,
            train,
            &b_train,
            validation,
            &b_validation,
            &cfg.audit_policy
        )
    );
    let reference_tuning = stage!(
        "tune:reference",
        tune(
            cfg,
            &search,
            train,
            &b_train,
            validation,
            &b_validation,
            &FeaturePolicy::default()
        )
    );
    let tuned = |t: &Option<Tuned>| Search {
        objective: t.as_ref().map_or_else(|| cfg.objective.clone(), |t| t.config.clone()),
        ..search.clone()
    };
    let (audit_search, reference_search) = (tuned(&restriction_tuning), tuned(&reference_tuning));
    let restriction = stage!(
        "restriction",
        restriction_error(&blackbox, train, test, &audit_search, &cfg.audit_policy)
    );
    stage!("restriction", art.write("b_plus.json", &restriction.b_plus));
    let gap = stage!(
        "acceptable-gap",
        acceptable_relative_error(&restriction.b_plus, train, test, &audit_search, &cfg.audit_policy)
    );
    let reference = stage!("reference", {
        let e = reference_search
            .run(train, &b_train, &FeaturePolicy::default())?
            .into_model();
        relative_error(&e, &blackbox, test)
    });

    let mut variants = Vec::with_capacity(cfg.variants.len());
    for v in &cfg.variants {
        let name = format!("variant:{}", v.name);
        let outcome = stage!(name, {
            let base = Search {
                objective: v.objective.clone().unwrap_or_else(|| cfg.objective.clone()),
                ..search.clone()
            };
            let tuning = tune(cfg, &base, train, &b_train, validation, &b_validation, &v.policy)?;
            let objective = tuning.as_ref().map_or(&base.objective, |t| &t.config);
            let run = search.run_with(train, &b_train, &v.policy, objective)?;
            let mut report = audit(run.model(), &blackbox, test, &cfg.audit_policy, cfg.eps_plus)?;
            report.eps_r = Some(restriction.eps_r);
            report.eps_a = Some(gap.eps_a);
            report.theorem2_bound = Some(theorem2_check(
                reference,
                restriction.eps_r,
                gap.eps_a,
                cfg.eps_plus,
                report.relative_error,
            ));
            report.approximate = true;
            art.write(&format!("variants/{}.json", v.name), run.model())?;
            art.write(&format!("variants/{}.run.json", v.name), &run.report)?;
            art.write(&format!("audits/{}.json", v.name), &report)?;
            Ok(VariantOutcome {
                name: v.name.clone(),
                policy: v.policy.clone(),
                model: run.state.current,
                run: run.report,
                audit: report,
                tuning,
            })
        });
        variants.push(outcome);
    }

    let report = ExperimentReport {
        seed: cfg.seed,
        rows: SplitSizes {
            train: train.n_rows(),
            test: test.n_rows(),
            validation: split.validation.n_rows(),
        },
        mined_pools: PoolSizes {
            nd: pools.nd.len(),
            dl: pools.dl.len(),
        },
        blackbox_acceptable: crate::audit::is_acceptable(&blackbox, &cfg.audit_policy),
        blackbox,
        blackbox_run: bb.report,
        blackbox_tuning: bb_tuning,
        blackbox_train_accuracy,
        blackbox_test_accuracy,
        eps_r: restriction.eps_r,
        eps_a: gap.eps_a,
        b_plus: restriction.b_plus,
        restriction_tuning,
        reference_tuning,
        unrestricted_fidelity: 1.0 - reference,
        variants,
    };
    stage!("summary", art.write("summary.json", &report));
    stage!("summary", art.write_text("summary.txt", &report.summary_text()));
    Ok(report)
}
