use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;
use twolevel::audit::audit;
use twolevel::data::{RawTable, SchemaConfig, TabularDataset};
use twolevel::experiment::{run_experiment, ExperimentConfig};
use twolevel::measures::{dump_measures, MeasureContext, ObjectiveConfig};
use twolevel::mining::{
    cap_pools, discretize, filter_pools, mine_candidates, CandidatePools, DiscretizeParams, MiningParams, PoolCaps,
};
use twolevel::model::{predict_dataset, TwoLevelDecisionSet};
use twolevel::optimizer::{Optimized, Search, SearchParams};
use twolevel::policy::FeaturePolicy;
use twolevel::synth::{generate, Generator, SynthSpec};

use crate::{
    AuditArgs, Cli, Command, DataArgs, ExplainArgs, GeneratorArg, MeasuresArgs, MineArgs, MiningArgs, SearchArgs,
    SynthArgs, TrainArgs,
};

pub fn run(cli: Cli) -> Result<()> {
    let g = Globals {
        seed: cli.seed,
        out: cli.out,
        config: cli.config,
    };
    match cli.command {
        Command::Synth(a) => synth(&g, a),
        Command::Discretize(a) => discretize_cmd(&g, a),
        Command::Mine(a) => mine(&g, a),
        Command::Train(a) => train(&g, a),
        Command::Explain(a) => explain(&g, a),
        Command::Audit(a) => audit_cmd(&g, a),
        Command::Measures(a) => measures(&g, a),
        Command::Experiment => experiment(&g),
    }
}

struct Globals {
    seed: u64,
    out: Option<PathBuf>,
    config: Option<PathBuf>,
}

impl Globals {
    fn objective(&self) -> Result<ObjectiveConfig> {
        let Some(path) = &self.config else {
            return Ok(ObjectiveConfig::default());
        };
        let cfg: ObjectiveConfig = read_json(path)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// JSON to `out`, or to stdout.
fn emit<T: Serialize>(out: Option<&Path>, value: &T) -> Result<()> {
    match out {
        Some(p) => write_json(p, value),
        None => {
            let mut stdout = std::io::stdout().lock();
            serde_json::to_writer_pretty(&mut stdout, value)?;
            writeln!(stdout)?;
            Ok(())
        }
    }
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

fn policy_or_default(path: Option<&Path>) -> Result<FeaturePolicy> {
    match path {
        Some(p) => FeaturePolicy::from_path(p).with_context(|| format!("loading policy {}", p.display())),
        None => Ok(FeaturePolicy::default()),
    }
}

fn load(args: &DataArgs) -> Result<TabularDataset> {
    let config =
        SchemaConfig::from_path(&args.schema).with_context(|| format!("loading schema {}", args.schema.display()))?;
    let raw = RawTable::read(&args.data)?;
    let n_bins = args
        .n_bins
        .or(config.n_bins)
        .unwrap_or(DiscretizeParams::default().n_bins);
    let (data, spec) = discretize(&raw, &config, &DiscretizeParams { n_bins })?;
    for w in &spec.warnings {
        eprintln!("warning: {w}");
    }
    Ok(data)
}

fn mining_params(args: &MiningArgs) -> MiningParams {
    MiningParams {
        min_support: args.min_support,
        max_width: args.max_width,
        outer_max_width: Some(args.outer_max_width),
    }
}

fn caps(args: &MiningArgs) -> PoolCaps {
    PoolCaps {
        max_nd: args.max_nd,
        max_dl: args.max_dl,
    }
}

/// Pools read from `--pools`, or mined from `data`. Uncapped and unfiltered.
fn pools(args: &MiningArgs, data: &TabularDataset) -> Result<CandidatePools> {
    match &args.pools {
        Some(p) => read_json(p),
        None => Ok(mine_candidates(data, &mining_params(args))?),
    }
}

fn synth(g: &Globals, a: SynthArgs) -> Result<()> {
    let spec = SynthSpec {
        generator: match a.generator {
            GeneratorArg::Theorem1 => Generator::Theorem1,
            GeneratorArg::CorrelatedBail => Generator::CorrelatedBail,
        },
        n_rows: a.rows,
        seed: g.seed,
        correlation: a.correlation,
        noise: a.noise,
    };
    let out = generate(&spec)?;
    let Some(path) = &g.out else {
        out.data.write_csv_to(std::io::stdout().lock())?;
        return Ok(());
    };
    out.data.write_csv(path)?;
    write_json(&sibling(path, "schema.json"), &out.data.schema_config())?;
    if let Some(planted) = &out.planted {
        write_json(&sibling(path, "planted.json"), planted)?;
    }
    Ok(())
}

fn discretize_cmd(g: &Globals, a: DataArgs) -> Result<()> {
    let config = SchemaConfig::from_path(&a.schema)?;
    let raw = RawTable::read(&a.data)?;
    let n_bins = a.n_bins.or(config.n_bins).unwrap_or(DiscretizeParams::default().n_bins);
    let (_, spec) = discretize(&raw, &config, &DiscretizeParams { n_bins })?;
    for w in &spec.warnings {
        eprintln!("warning: {w}");
    }
    emit(g.out.as_deref(), &spec.freeze(&config))
}

fn mine(g: &Globals, a: MineArgs) -> Result<()> {
    let data = load(&a.data)?;
    let mut p = pools(&a.mining, &data)?;
    if let Some(path) = &a.policy {
        let policy = policy_or_default(Some(path))?;
        policy.validate_against(data.schema())?;
        p = filter_pools(&p, &policy);
    }
    let p = cap_pools(&p, &caps(&a.mining));
    eprintln!("{} descriptors, {} antecedents", p.nd.len(), p.dl.len());
    emit(g.out.as_deref(), &p)
}

/// Runs the search and writes the model, run report and measure dump.
fn search_and_write(
    g: &Globals,
    data: &TabularDataset,
    target: &[u32],
    mining: &MiningArgs,
    search: &SearchArgs,
) -> Result<()> {
    let policy = policy_or_default(search.policy.as_deref())?;
    policy.validate_against(data.schema())?;
    let all = pools(mining, data)?;
    let s = Search {
        pools: &all,
        caps: caps(mining),
        objective: g.objective()?,
        params: SearchParams {
            seed: g.seed,
            budget: search.budget,
        },
    };
    let Optimized { state, report } = s.run(data, target, &policy)?;
    let model = state.current;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    eprint!("{}", model.render_text(Some(data.schema())));
    emit(g.out.as_deref(), &model)?;
    if let Some(p) = &search.report {
        write_json(p, &report)?;
    }
    if let Some(p) = &search.dump_measures {
        let filtered = s.pools_for(&policy);
        let ctx = MeasureContext::new(data, target, &filtered, &policy)?;
        write_json(p, &dump_measures(model.rules(), &ctx, &s.objective)?)?;
    }
    Ok(())
}

fn train(g: &Globals, a: TrainArgs) -> Result<()> {
    let data = load(&a.data)?;
    let target = data.require_label()?.to_vec();
    search_and_write(g, &data, &target, &a.mining, &a.search)
}

fn explain(g: &Globals, a: ExplainArgs) -> Result<()> {
    let data = load(&a.data)?;
    let b: TwoLevelDecisionSet = read_json(&a.blackbox)?;
    let target = predict_dataset(&b, &data)?;
    search_and_write(g, &data, &target, &a.mining, &a.search)
}

fn audit_cmd(g: &Globals, a: AuditArgs) -> Result<()> {
    let data = load(&a.data)?;
    let b: TwoLevelDecisionSet = read_json(&a.blackbox)?;
    let e: TwoLevelDecisionSet = read_json(&a.explanation)?;
    let policy = policy_or_default(a.policy.as_deref())?;
    policy.validate_against(data.schema())?;
    let report = audit(&e, &b, &data, &policy, a.eps_plus)?;
    eprintln!("{}", report.verdict());
    emit(g.out.as_deref(), &report)
}

fn measures(g: &Globals, a: MeasuresArgs) -> Result<()> {
    let data = load(&a.data)?;
    let model: TwoLevelDecisionSet = read_json(&a.model)?;
    let target = match &a.blackbox {
        Some(p) => predict_dataset(&read_json::<TwoLevelDecisionSet>(p)?, &data)?,
        None => data.require_label()?.to_vec(),
    };
    let policy = policy_or_default(a.policy.as_deref())?;
    policy.validate_against(data.schema())?;
    // the model's own conjunctions always belong to the ground set
    let mined = cap_pools(&filter_pools(&pools(&a.mining, &data)?, &policy), &caps(&a.mining));
    let nd = mined
        .nd
        .iter()
        .cloned()
        .chain(model.rules().iter().map(|r| r.q.clone()))
        .collect();
    let dl = mined
        .dl
        .iter()
        .cloned()
        .chain(model.rules().iter().map(|r| r.s.clone()))
        .collect();
    let all = CandidatePools::new(nd, dl, &data)?;
    let ctx = MeasureContext::new(&data, &target, &all, &policy)?;
    emit(g.out.as_deref(), &dump_measures(model.rules(), &ctx, &g.objective()?)?)
}

fn experiment(g: &Globals) -> Result<()> {
    let Some(path) = &g.config else {
        bail!("experiment needs --config");
    };
    let mut cfg = ExperimentConfig::from_path(path)?;
    if g.seed != 0 {
        cfg.seed = g.seed;
    }
    let report = run_experiment(&cfg, g.out.as_deref())?;
    print!("{}", report.summary_text());
    if g.out.is_none() {
        let mut stdout = std::io::stdout().lock();
        serde_json::to_writer_pretty(&mut stdout, &report)?;
        writeln!(stdout)?;
    }
    Ok(())
}
