//! Command implementations. Each returns `Err` for operational failures and
//! [`UsageError`] for bad invocations.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::AtomicBool;

use anyhow::{bail, Context, Result};

use mutsample::analysis::{
    self, class_coverage, project_tally, write_curve_csv, write_pvalue_csv, write_summary_csv, AnalysisOptions,
    CoverageOptions, SweepReport,
};
use mutsample::mutator::{generate_mutants, write_mutant_list, GenerateError, GenerateOptions, Operator};
use mutsample::runner::{run_baseline, RunConfig, Runner, Status, WorkdirStrategy};
use mutsample::sampler::{sample, Approach, SampleConfig, WeightBasis};
use mutsample::store::{load_result_set, Loaded, ProjectHeader, Store, StoreLock};
use mutsample::synth::{self, Adequacy, SizeDistribution, SynthSpec};

use crate::config::{FileConfig, DEFAULT_TIMEOUT_SECONDS};

/// A bad invocation: exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn lock(store: &Path) -> Result<StoreLock> {
    StoreLock::acquire(store).with_context(|| format!("locking {}", store.display()))
}

fn load(store: &Path) -> Result<Loaded> {
    let loaded = load_result_set(store).with_context(|| format!("loading store {}", store.display()))?;
    for w in &loaded.warnings {
        eprintln!("warning: {w}");
    }
    Ok(loaded)
}

fn load_with_results(store: &Path) -> Result<Loaded> {
    let loaded = load(store)?;
    if loaded.result_set.is_empty() {
        bail!("store {} has no results; run `mutsample run` first", store.display());
    }
    Ok(loaded)
}

/// `-` writes to stdout.
fn output(path: &Path) -> Result<Box<dyn Write>> {
    if path == Path::new("-") {
        return Ok(Box::new(io::stdout().lock()));
    }
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(Box::new(BufWriter::new(file)))
}

pub struct GenerateArgs {
    pub root: Option<PathBuf>,
    pub store: Option<PathBuf>,
    pub include: Vec<String>,
    pub exclude: Vec<String>,
    pub operators: Vec<Operator>,
    pub list: Option<PathBuf>,
    pub force: bool,
}

fn parse_operators(names: &[String]) -> Result<Vec<Operator>> {
    names
        .iter()
        .flat_map(|n| n.split(','))
        .map(|n| n.parse::<Operator>().map_err(|e| usage(e.to_string())))
        .collect()
}

pub fn generate(config: &FileConfig, args: GenerateArgs) -> Result<()> {
    let root = config.project_root(args.root);
    let store_path = config.store_path(args.store);
    let mut options = GenerateOptions::default();
    if let Some(include) = pick(args.include, config.include.clone()) {
        options.include = include;
    }
    if let Some(exclude) = pick(args.exclude, config.exclude.clone()) {
        options.exclude = exclude;
    }
    if !args.operators.is_empty() {
        options.operators = args.operators;
    } else if let Some(names) = &config.operators {
        options.operators = parse_operators(names)?;
    }

    let generation = generate_mutants(&root, &options).map_err(|e| match e {
        GenerateError::Glob { .. } => usage(e.to_string()),
        other => anyhow::Error::new(other),
    })?;
    for w in &generation.warnings {
        eprintln!("warning: {w}");
    }

    let _lock = lock(&store_path)?;
    if args.force && store_path.exists() {
        std::fs::remove_file(&store_path).with_context(|| format!("removing {}", store_path.display()))?;
    }
    let project_id = std::fs::canonicalize(&root)
        .ok()
        .and_then(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .unwrap_or_else(|| "project".to_string());
    let mut header = ProjectHeader::new(project_id);
    header.class_loc = generation.class_loc.clone();
    Store::create(&store_path, &header, &generation.mutants).with_context(|| {
        format!(
            "initializing {} (pass --force to replace an existing catalog)",
            store_path.display()
        )
    })?;

    let mut per_class: BTreeMap<&str, usize> = BTreeMap::new();
    let mut per_operator: BTreeMap<Operator, usize> = BTreeMap::new();
    for m in &generation.mutants {
        *per_class.entry(m.class_name.as_str()).or_default() += 1;
        *per_operator.entry(m.point.operator).or_default() += 1;
    }
    println!(
        "{} mutants across {} classes",
        generation.mutants.len(),
        per_class.len()
    );
    println!("per class:");
    for (class, n) in &per_class {
        println!("  {n:>6}  {class}");
    }
    println!("per operator:");
    for (op, n) in &per_operator {
        println!("  {n:>6}  {op}");
    }
    println!("store: {}", store_path.display());

    if let Some(list) = args.list {
        let mut out = output(&list)?;
        write_mutant_list(&generation.mutants, &mut out)?;
        out.flush()?;
    }
    Ok(())
}

fn pick(flag: Vec<String>, file: Option<Vec<String>>) -> Option<Vec<String>> {
    if flag.is_empty() {
        file
    } else {
        Some(flag)
    }
}

pub struct RunArgs {
    pub root: Option<PathBuf>,
    pub store: Option<PathBuf>,
    pub test_cmd: Option<String>,
    pub build_cmd: Option<String>,
    pub timeout: Option<u64>,
    pub jobs: Option<usize>,
    pub resume: bool,
    pub in_place: bool,
}

pub fn run(config: &FileConfig, args: RunArgs, cancel: &AtomicBool) -> Result<()> {
    let store_path = config.store_path(args.store);
    let test_command = args
        .test_cmd
        .or_else(|| config.test_command.clone())
        .ok_or_else(|| usage("no test command: pass --test-cmd or set test_command in the config file"))?;
    let jobs = args.jobs.or(config.jobs).unwrap_or(1);
    if jobs == 0 {
        return Err(usage("--jobs must be at least 1"));
    }
    let run_config = RunConfig {
        project_root: config.project_root(args.root),
        test_command,
        build_command: args.build_cmd.or_else(|| config.build_command.clone()),
        timeout_seconds: args.timeout.or(config.timeout_seconds).unwrap_or(DEFAULT_TIMEOUT_SECONDS),
        workdir_strategy: if args.in_place {
            WorkdirStrategy::InPlaceWithRestore
        } else {
            WorkdirStrategy::CopyProject
        },
    };
    run_config.validate().map_err(|e| usage(e.to_string()))?;

    let _lock = lock(&store_path)?;
    let loaded = load(&store_path)?;
    if loaded.header.is_none() {
        bail!("{} is not initialized; run `mutsample generate` first", store_path.display());
    }
    let done = loaded.result_set.total_results();
    if done > 0 && !args.resume {
        bail!(
            "{} already holds {done} results; pass --resume to execute only the remaining mutants",
            store_path.display()
        );
    }
    let mutants: Vec<_> = loaded.result_set.mutant_catalog.values().cloned().collect();
    if done == mutants.len() {
        println!("all {done} mutants already have results; nothing to do");
        return Ok(());
    }

    eprintln!("running baseline: {}", run_config.test_command);
    let baseline = run_baseline(&run_config)?;
    let runner = Runner::new(run_config, baseline)?;
    eprintln!(
        "baseline passed in {} ms; per-mutant time limit {} s",
        baseline.duration.as_millis(),
        runner.timeout_bound().as_secs()
    );

    let mut store = Store::open(&store_path)?;
    let summary = runner.run_all(&mutants, &mut store, jobs, cancel)?;
    println!(
        "executed {} mutants, {} already had results",
        summary.executed, summary.skipped
    );
    if summary.interrupted {
        bail!("interrupted; rerun with --resume to finish the remaining mutants");
    }
    Ok(())
}

pub struct SampleArgs {
    pub store: Option<PathBuf>,
    pub approach: Approach,
    pub rate: f64,
    pub seed: u64,
    pub weight_basis: WeightBasis,
    pub out: PathBuf,
}

pub fn sample_cmd(config: &FileConfig, args: SampleArgs) -> Result<()> {
    let store_path = config.store_path(args.store);
    let sample_config = SampleConfig::new(args.approach, args.rate, args.seed)
        .map_err(|e| usage(e.to_string()))?
        .with_weight_basis(args.weight_basis);
    let _lock = lock(&store_path)?;
    let loaded = load_with_results(&store_path)?;
    let set = sample(&loaded.result_set, &sample_config)?;
    let mut out = output(&args.out)?;
    writeln!(
        out,
        "# approach={} rate={:?} seed={} weight_basis={} size={} total={}",
        args.approach,
        args.rate,
        args.seed,
        match args.weight_basis {
            WeightBasis::Mutants => "mutants",
            WeightBasis::Loc => "loc",
        },
        set.len(),
        loaded.result_set.total_results()
    )?;
    for id in &set.mutant_ids {
        writeln!(out, "{id}")?;
    }
    out.flush()?;
    Ok(())
}

pub struct SweepArgs {
    pub store: Option<PathBuf>,
    pub approaches: Vec<Approach>,
    pub seed: u64,
    pub repetitions: usize,
    pub critical: f64,
    pub out_dir: PathBuf,
    pub exclude_unsampled: bool,
    pub honor_overrides: bool,
    pub weight_basis: WeightBasis,
}

pub fn curve_file(out_dir: &Path, approach: Approach) -> PathBuf {
    out_dir.join(format!("curve_{approach}.csv"))
}

pub fn pvalue_file(out_dir: &Path, approach: Approach) -> PathBuf {
    out_dir.join(format!("pvalues_{approach}.csv"))
}

pub fn summary_file(out_dir: &Path) -> PathBuf {
    out_dir.join("summary.csv")
}

pub fn sweep_cmd(config: &FileConfig, args: SweepArgs) -> Result<()> {
    if args.repetitions == 0 {
        return Err(usage("--repetitions must be at least 1"));
    }
    if !(args.critical.is_finite() && (-1.0..=1.0).contains(&args.critical)) {
        return Err(usage("--critical must be in [-1, 1]"));
    }
    let mut approaches = args.approaches;
    approaches.dedup();
    let store_path = config.store_path(args.store);
    let options = AnalysisOptions {
        coverage: CoverageOptions {
            honor_overrides: args.honor_overrides,
        },
        exclude_unsampled: args.exclude_unsampled,
        weight_basis: args.weight_basis,
        critical: args.critical,
    };

    let _lock = lock(&store_path)?;
    let loaded = load_with_results(&store_path)?;
    std::fs::create_dir_all(&args.out_dir).with_context(|| format!("creating {}", args.out_dir.display()))?;

    let mut reports: Vec<SweepReport> = Vec::new();
    for approach in approaches {
        let report = analysis::sweep(&loaded.result_set, approach, args.seed, args.repetitions, &options)?;
        let curve = curve_file(&args.out_dir, approach);
        let mut out = output(&curve)?;
        write_curve_csv(&report, &mut out)?;
        out.flush()?;
        let mut out = output(&pvalue_file(&args.out_dir, approach))?;
        write_pvalue_csv(&report, &mut out)?;
        out.flush()?;
        println!(
            "{approach}: acceptable rate rho={}%, tau={}% -> {}",
            report.acceptable_rate_rho,
            report.acceptable_rate_tau,
            curve.display()
        );
        reports.push(report);
    }
    let summary = summary_file(&args.out_dir);
    let mut out = output(&summary)?;
    write_summary_csv(&reports, &mut out)?;
    out.flush()?;
    if let Some(r) = reports.first() {
        println!(
            "{} classes, mutants per class mu={:.2} sigma={:.2}; seed={} repetitions={} critical={}",
            r.class_stats.class_count, r.class_stats.mu, r.class_stats.sigma, args.seed, args.repetitions, args.critical
        );
    }
    println!("summary -> {}", summary.display());
    Ok(())
}

pub fn report(config: &FileConfig, store: Option<PathBuf>, honor_overrides: bool) -> Result<()> {
    let store_path = config.store_path(store);
    let _lock = lock(&store_path)?;
    let loaded = load_with_results(&store_path)?;
    let text = render_report(&loaded, CoverageOptions { honor_overrides })?;
    print!("{text}");
    Ok(())
}

/// Human-readable coverage summary.
pub fn render_report(loaded: &Loaded, options: CoverageOptions) -> Result<String> {
    use std::fmt::Write as _;
    let rs = &loaded.result_set;
    let mut s = String::new();
    if let Some(h) = &loaded.header {
        writeln!(s, "Project: {}", h.project_id)?;
    }
    let tally = project_tally(rs, None, options);
    if tally.is_zero_denominator() {
        writeln!(s, "Mutation coverage: n/a (no considered mutants)")?;
    } else {
        writeln!(
            s,
            "Mutation coverage: {:.1}% ({} of {} considered mutants killed)",
            tally.coverage() * 100.0,
            tally.killed,
            tally.considered
        )?;
    }

    let mut counts: BTreeMap<Status, usize> = Status::ALL.iter().map(|&st| (st, 0)).collect();
    for r in rs.results() {
        *counts.entry(r.status).or_default() += 1;
    }
    let overrides = rs.results().filter(|r| r.equivalent_override).count();
    let status_line: Vec<String> = Status::ALL
        .iter()
        .map(|st| format!("{} {}", st.name(), counts[st]))
        .collect();
    writeln!(s, "Status: {}", status_line.join(", "))?;
    let pending = rs.mutant_catalog.len() - rs.total_results();
    if pending > 0 {
        writeln!(s, "Pending: {pending} mutants without a result")?;
    }
    if overrides > 0 {
        writeln!(
            s,
            "Equivalent overrides: {overrides} ({})",
            if options.honor_overrides { "excluded" } else { "counted; pass --honor-overrides to exclude" }
        )?;
    }

    let mut rows: Vec<(Option<f64>, &str, usize, usize)> = rs
        .records
        .iter()
        .map(|(class, results)| {
            let t = class_coverage(results, options);
            let cov = (!t.is_zero_denominator()).then(|| t.coverage());
            (cov, class.as_str(), t.killed, t.considered)
        })
        .collect();
    // Ascending coverage; classes with nothing considered go last.
    rows.sort_by(|a, b| match (a.0, b.0) {
        (Some(x), Some(y)) => x.total_cmp(&y).then(a.1.cmp(b.1)),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => a.1.cmp(b.1),
    });
    writeln!(s)?;
    writeln!(s, "{:>8}  {:>6}  {:>10}  class", "coverage", "killed", "considered")?;
    for (cov, class, killed, considered) in rows {
        let cov = cov.map_or_else(|| "n/a".to_string(), |c| format!("{:.1}%", c * 100.0));
        writeln!(s, "{cov:>8}  {killed:>6}  {considered:>10}  {class}")?;
    }
    Ok(s)
}

pub struct SynthArgs {
    pub classes: usize,
    pub sizes: SizeDistribution,
    pub adequacy: Adequacy,
    pub seed: u64,
    pub store: Option<PathBuf>,
}

pub fn synth_cmd(config: &FileConfig, args: SynthArgs) -> Result<()> {
    let store_path = config.store_path(args.store);
    let spec = SynthSpec {
        class_count: args.classes,
        size_distribution: args.sizes,
        adequacy: args.adequacy,
        seed: args.seed,
    };
    spec.validate().map_err(|e| usage(e.to_string()))?;
    let _lock = lock(&store_path)?;
    let rs = synth::write_store(&spec, &store_path)?;
    println!(
        "wrote {} mutants across {} classes to {} (sizes {}, seed {})",
        rs.total_results(),
        rs.records.len(),
        store_path.display(),
        spec.size_distribution,
        spec.seed
    );
    Ok(())
}

pub fn equivalent(config: &FileConfig, store: Option<PathBuf>, ids: &[u64], unset: bool) -> Result<()> {
    let store_path = config.store_path(store);
    let _lock = lock(&store_path)?;
    let mut store = Store::open(&store_path)?;
    for &id in ids {
        store.set_equivalent_override(id, !unset)?;
        println!("mutant {id}: equivalent={}", !unset);
    }
    Ok(())
}
