use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use kscore_core::estimators::{self, NormEstimate};
use kscore_core::evaluate::{self, Orientation};
use kscore_core::simulate::{self, SimulationConfig};
use kscore_core::{KernelSpec, PairedSampleBlock, Point, SampleBlock, TargetSample};
use rayon::prelude::*;
use serde_json::json;

use crate::args::{
    AurocArgs, Command, GroupArgs, IoArgs, KernelArgs, OutputFormat, ScoreArgs, SimulateArgs,
    UncertaintySource,
};
use crate::ingest::{self, Dataset, Group, IngestError};
use crate::report::{self, Evaluation, GroupError, GroupResult, InputInfo, Report};
use crate::source::{self, SourceError};

#[derive(Debug, thiserror::Error)]
pub enum CommandError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Source(#[from] SourceError),
    #[error("group {group}: no {what}")]
    EmptyGroup { group: String, what: &'static str },
    #[error("group {group}: {source}")]
    Group {
        group: String,
        source: kscore_core::Error,
    },
    #[error(transparent)]
    Compute(#[from] kscore_core::Error),
    #[error("{0}")]
    BadFlags(String),
    #[error("writing output: {0}")]
    Output(String),
}

impl CommandError {
    /// 2 for malformed input, 3 for computation or output failures, 4 for
    /// invalid flags.
    pub fn exit_code(&self) -> i32 {
        match self {
            CommandError::Ingest(_) | CommandError::Source(_) | CommandError::EmptyGroup { .. } => 2,
            CommandError::Group { .. } | CommandError::Compute(_) | CommandError::Output(_) => 3,
            CommandError::BadFlags(_) => 4,
        }
    }
}

/// Runs a command and writes its report. Returns the report for callers that
/// want to inspect it.
pub fn run(command: &Command) -> Result<Report, CommandError> {
    let report = build_report(command)?;
    write_report(&report, command.io())?;
    Ok(report)
}

pub fn build_report(command: &Command) -> Result<Report, CommandError> {
    match command {
        Command::Entropy(a) => per_group(command, a, &[], entropy_group),
        Command::Score(a) => score_like(command, a, false),
        Command::Mmd2(a) => score_like(command, a, true),
        Command::Variance(a) => per_group(command, a, &[], variance_group),
        Command::Covariance(a) => per_group(command, a, &[], covariance_group),
        Command::Decompose(a) => per_group(command, a, &[], decompose_group),
        Command::Simulate(a) => cmd_simulate(command, a),
        Command::Auroc(a) => cmd_auroc(command, a),
    }
}

pub fn write_report(report: &Report, io: &IoArgs) -> Result<(), CommandError> {
    let mut buf = Vec::new();
    match io.output_format {
        OutputFormat::Json => buf.extend(
            report
                .to_json()
                .map_err(|e| CommandError::Output(e.to_string()))?
                .into_bytes(),
        ),
        OutputFormat::Csv => report
            .write_csv(&mut buf)
            .map_err(|e| CommandError::Output(e.to_string()))?,
    }
    match &io.output {
        Some(path) => fs::write(path, buf)
            .map_err(|e| CommandError::Output(format!("{}: {e}", path.display()))),
        None => {
            use std::io::Write;
            std::io::stdout()
                .write_all(&buf)
                .map_err(|e| CommandError::Output(e.to_string()))
        }
    }
}

fn kernel(args: &KernelArgs) -> Result<KernelSpec, CommandError> {
    args.build().map_err(CommandError::BadFlags)
}

fn base_report(command: &Command, groups: usize, kernel: Option<KernelSpec>) -> Report {
    let io = command.io();
    let timestamp = (!io.no_timestamp).then(|| {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0)
    });
    Report {
        tool: "kscore".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: command.name().into(),
        timestamp,
        seed: io.seed,
        input: InputInfo {
            path: io.input.display().to_string(),
            format: match io.format {
                ingest::InputFormat::Jsonl => "jsonl".into(),
                ingest::InputFormat::Csv => "csv".into(),
            },
            groups,
        },
        kernel,
        parameters: BTreeMap::new(),
        groups: Vec::new(),
        aggregate: BTreeMap::new(),
        simulation: None,
        evaluation: None,
        errors: Vec::new(),
    }
}

type GroupFn<'a> = dyn Fn(&KernelSpec, &Group) -> Result<GroupResult, CommandError> + Sync + 'a;

fn run_groups(
    dataset: &Dataset,
    spec: &KernelSpec,
    skip_errors: bool,
    f: &GroupFn<'_>,
) -> Result<(Vec<GroupResult>, Vec<GroupError>), CommandError> {
    let outcomes: Vec<Result<GroupResult, CommandError>> =
        dataset.groups.par_iter().map(|g| f(spec, g)).collect();
    let mut results = Vec::new();
    let mut errors = Vec::new();
    for (group, outcome) in dataset.groups.iter().zip(outcomes) {
        match outcome {
            Ok(r) => results.push(r),
            Err(e) if skip_errors => {
                log::warn!("skipping group {}: {e}", group.id);
                errors.push(GroupError {
                    group_id: group.id.clone(),
                    message: e.to_string(),
                });
            }
            Err(e) => return Err(e),
        }
    }
    Ok((results, errors))
}

fn per_group(
    command: &Command,
    args: &GroupArgs,
    params: &[(&str, serde_json::Value)],
    f: impl Fn(&KernelSpec, &Group) -> Result<GroupResult, CommandError> + Sync,
) -> Result<Report, CommandError> {
    let spec = kernel(&args.kernel)?;
    let dataset = ingest::ingest(&args.io.input, args.io.format)?;
    let (groups, errors) = run_groups(&dataset, &spec, args.io.skip_errors, &f)?;
    let mut report = base_report(command, dataset.groups.len(), Some(spec));
    report.parameters = params
        .iter()
        .map(|(k, v)| (k.to_string(), v.clone()))
        .collect();
    report.aggregate = report::aggregate(&groups);
    report.groups = groups;
    report.errors = errors;
    Ok(report)
}

fn group_err(group: &Group) -> impl Fn(kscore_core::Error) -> CommandError + '_ {
    move |source| CommandError::Group {
        group: group.id.clone(),
        source,
    }
}

fn generations(group: &Group) -> Result<Vec<Point>, CommandError> {
    let points = group.generations();
    if points.is_empty() {
        return Err(CommandError::EmptyGroup {
            group: group.id.clone(),
            what: "generations",
        });
    }
    Ok(points)
}

fn targets(group: &Group) -> Result<&[Point], CommandError> {
    if group.targets.is_empty() {
        return Err(CommandError::EmptyGroup {
            group: group.id.clone(),
            what: "target rows",
        });
    }
    Ok(&group.targets)
}

fn block(clusters: &[ingest::Cluster]) -> kscore_core::Result<SampleBlock> {
    SampleBlock::new(clusters.iter().map(|c| c.points.clone()).collect())
}

fn result(spec: &KernelSpec, group: &Group, points: &[&Point]) -> GroupResult {
    GroupResult {
        group_id: group.id.clone(),
        n: group.clusters.len(),
        cluster_sizes: group.cluster_sizes(),
        y_cluster_sizes: group.y_clusters.iter().map(|c| c.points.len()).collect(),
        target_size: group.targets.len(),
        kernel: Some(spec.resolve_for(points.iter().copied())),
        values: BTreeMap::new(),
        flags: Vec::new(),
    }
}

fn all_points(group: &Group) -> Vec<&Point> {
    group
        .clusters
        .iter()
        .chain(&group.y_clusters)
        .flat_map(|c| c.points.iter())
        .chain(&group.targets)
        .collect()
}

fn psd_flags(spec: &KernelSpec) -> Vec<estimators::Flag> {
    if spec.is_certified_psd() {
        Vec::new()
    } else {
        vec![estimators::Flag::NonPsdKernel]
    }
}

fn entropy_group(spec: &KernelSpec, group: &Group) -> Result<GroupResult, CommandError> {
    let gens = generations(group)?;
    let value = estimators::kernel_entropy(spec, &gens).map_err(group_err(group))?;
    let mut r = result(spec, group, &gens.iter().collect::<Vec<_>>());
    r.values.insert("entropy".into(), Some(value));
    r.flags = psd_flags(spec);
    Ok(r)
}

fn score_like(command: &Command, args: &ScoreArgs, mmd: bool) -> Result<Report, CommandError> {
    let norm = if args.biased {
        NormEstimate::Biased
    } else {
        NormEstimate::Unbiased
    };
    let norm_name = if args.biased { "biased" } else { "unbiased" };
    per_group(
        command,
        &args.group,
        &[("norm_estimate", json!(norm_name))],
        move |spec, group| {
            let gens = generations(group)?;
            let tgt = targets(group)?;
            let mut points: Vec<&Point> = gens.iter().collect();
            points.extend(tgt);
            let mut r = result(spec, group, &points);
            if mmd {
                let est = estimators::mmd2_with(spec, &gens, tgt, norm).map_err(group_err(group))?;
                r.values.insert("mmd2".into(), Some(est.value));
                r.flags = est.flags;
            } else {
                let target = TargetSample::new(tgt.to_vec()).map_err(group_err(group))?;
                let v = estimators::kernel_score_with(spec, &gens, &target, norm)
                    .map_err(group_err(group))?;
                r.values.insert("kernel_score".into(), Some(v));
                r.flags = psd_flags(spec);
            }
            Ok(r)
        },
    )
}

fn variance_group(spec: &KernelSpec, group: &Group) -> Result<GroupResult, CommandError> {
    generations(group)?;
    let b = block(&group.clusters).map_err(group_err(group))?;
    let est = estimators::distributional_variance(spec, &b).map_err(group_err(group))?;
    let mut r = result(spec, group, &b.points().collect::<Vec<_>>());
    r.values.insert("variance".into(), Some(est.value));
    r.flags = est.flags;
    below_recommended(&mut r, &b);
    Ok(r)
}

fn below_recommended(r: &mut GroupResult, b: &SampleBlock) {
    let min_m = b.cluster_sizes().into_iter().min().unwrap_or(0);
    if simulate::below_recommended(b.n(), min_m)
        && !r.flags.contains(&estimators::Flag::BelowRecommendedSizes)
    {
        r.flags.push(estimators::Flag::BelowRecommendedSizes);
    }
}

fn covariance_group(spec: &KernelSpec, group: &Group) -> Result<GroupResult, CommandError> {
    generations(group)?;
    if group.y_clusters.is_empty() {
        return Err(CommandError::EmptyGroup {
            group: group.id.clone(),
            what: "side-y generations",
        });
    }
    let x = block(&group.clusters).map_err(group_err(group))?;
    let y = block(&group.y_clusters).map_err(group_err(group))?;
    let paired = PairedSampleBlock::new(x, y).map_err(group_err(group))?;
    let cov = estimators::distributional_covariance(spec, &paired).map_err(group_err(group))?;
    let mut r = result(spec, group, &all_points(group));
    r.values.insert("covariance".into(), Some(cov.value));
    r.flags = cov.flags;
    match estimators::distributional_correlation(spec, &paired) {
        Ok(c) => {
            r.values.insert("correlation".into(), Some(c.raw));
            r.values.insert("correlation_clamped".into(), Some(c.clamped));
            r.values.insert("self_covariance_x".into(), Some(c.self_covariance_x));
            r.values.insert("self_covariance_y".into(), Some(c.self_covariance_y));
            for f in c.flags {
                if !r.flags.contains(&f) {
                    r.flags.push(f);
                }
            }
        }
        Err(kscore_core::Error::DegenerateDenominator { var_x, var_y }) => {
            log::warn!("group {}: correlation undefined", group.id);
            r.values.insert("correlation".into(), None);
            r.values.insert("correlation_clamped".into(), None);
            r.values.insert("self_covariance_x".into(), Some(var_x));
            r.values.insert("self_covariance_y".into(), Some(var_y));
        }
        Err(e) => return Err(group_err(group)(e)),
    }
    below_recommended(&mut r, paired.x());
    Ok(r)
}

fn decompose_group(spec: &KernelSpec, group: &Group) -> Result<GroupResult, CommandError> {
    generations(group)?;
    let b = block(&group.clusters).map_err(group_err(group))?;
    let target = TargetSample::new(targets(group)?.to_vec()).map_err(group_err(group))?;
    let d = estimators::decompose(spec, &b, &target).map_err(group_err(group))?;
    let mut r = result(spec, group, &all_points(group));
    r.kernel = Some(d.kernel.clone());
    let values = [
        ("noise", d.noise),
        ("bias", d.bias),
        ("variance", Some(d.variance)),
        ("covariance", d.covariance),
        ("correlation", d.correlation),
        ("entropy", Some(d.entropy)),
        ("kernel_score", Some(d.kernel_score)),
        ("mmd2", d.mmd2),
        ("identity_residual", d.identity_residual),
    ];
    r.values = values.into_iter().map(|(k, v)| (k.to_string(), v)).collect();
    r.flags = d.flags;
    Ok(r)
}

fn cmd_simulate(command: &Command, args: &SimulateArgs) -> Result<Report, CommandError> {
    let spec = kernel(&args.kernel)?;
    let grid = crate::args::parse_grid(&args.grid).map_err(CommandError::BadFlags)?;
    let seed = args.io.seed.unwrap_or(0);
    let text = read_to_string(&args.io.input)?;
    let source = source::parse_source(&text)?;
    let config = SimulationConfig {
        seed,
        replications: args.replications,
        grid,
        estimator: args.estimator.into(),
        kernel: spec.clone(),
        source,
    };
    config.validate().map_err(|e| CommandError::BadFlags(e.to_string()))?;
    let sim = simulate::run(&config)?;
    let mut report = base_report(command, 1, Some(spec));
    report.seed = Some(seed);
    report.input.format = "json".into();
    report.parameters.insert("replications".into(), json!(args.replications));
    report.parameters.insert("grid".into(), json!(config.grid));
    report.parameters.insert("estimator".into(), json!(config.estimator));
    report.parameters.insert("recommended_sizes".into(), json!(simulate::recommend_sizes()));
    report.simulation = Some(sim);
    Ok(report)
}

fn read_to_string(path: &Path) -> Result<String, CommandError> {
    fs::read_to_string(path).map_err(|source| {
        IngestError::Io {
            path: path.display().to_string(),
            source,
        }
        .into()
    })
}

fn tokens_of(group: &Group, point: &Point) -> Result<Vec<u32>, CommandError> {
    match point {
        Point::Tokens(t) => Ok(t.clone()),
        Point::Dense(_) => Err(CommandError::Group {
            group: group.id.clone(),
            source: kscore_core::Error::InvalidParameter(
                "lexical measures need token or text rows".into(),
            ),
        }),
    }
}

/// Correctness of a group: its label if given, otherwise whether the first
/// generation matches the first target under RougeL.
fn correctness(group: &Group, threshold: f64) -> Result<u8, CommandError> {
    if let Some(label) = group.label {
        return Ok(label);
    }
    let gens = generations(group)?;
    let tgt = targets(group)?;
    let answer = tokens_of(group, &gens[0])?;
    let reference = tokens_of(group, &tgt[0])?;
    evaluate::binarize_loss(&answer, &reference, threshold).map_err(group_err(group))
}

fn uncertainty(
    spec: Option<&KernelSpec>,
    group: &Group,
    source: UncertaintySource,
) -> Result<(f64, &'static str), CommandError> {
    let from_kernel = |spec: Option<&KernelSpec>| -> Result<(f64, &'static str), CommandError> {
        let spec = spec.ok_or_else(|| {
            CommandError::BadFlags(format!(
                "group {} has no uncertainty field; pass --kernel to use kernel entropy",
                group.id
            ))
        })?;
        let gens = generations(group)?;
        let v = estimators::kernel_entropy(spec, &gens).map_err(group_err(group))?;
        Ok((v, "kernel_entropy"))
    };
    match source {
        UncertaintySource::Field => group.uncertainty.map(|u| (u, "field")).ok_or_else(|| {
            CommandError::EmptyGroup {
                group: group.id.clone(),
                what: "uncertainty field",
            }
        }),
        UncertaintySource::Auto => match group.uncertainty {
            Some(u) => Ok((u, "field")),
            None => from_kernel(spec),
        },
        UncertaintySource::KernelEntropy => from_kernel(spec),
        UncertaintySource::Lexical => {
            let seqs = generations(group)?
                .iter()
                .map(|p| tokens_of(group, p))
                .collect::<Result<Vec<_>, _>>()?;
            let sim = evaluate::lexical_similarity(&seqs).map_err(group_err(group))?;
            Ok((-sim, "lexical"))
        }
    }
}

fn cmd_auroc(command: &Command, args: &AurocArgs) -> Result<Report, CommandError> {
    if !(0.0..=1.0).contains(&args.threshold) {
        return Err(CommandError::BadFlags(format!(
            "--threshold must lie in [0, 1], got {}",
            args.threshold
        )));
    }
    let spec = if args.kernel.is_set() {
        Some(kernel(&args.kernel)?)
    } else {
        None
    };
    if args.uncertainty == UncertaintySource::KernelEntropy && spec.is_none() {
        return Err(CommandError::BadFlags(
            "--uncertainty kernel-entropy needs --kernel".into(),
        ));
    }
    let dataset = ingest::ingest(&args.io.input, args.io.format)?;

    let outcomes: Vec<Result<(GroupResult, &'static str), CommandError>> = dataset
        .groups
        .par_iter()
        .map(|group| {
            let (u, source) = uncertainty(spec.as_ref(), group, args.uncertainty)?;
            let correct = correctness(group, args.threshold)?;
            let mut r = GroupResult {
                group_id: group.id.clone(),
                n: group.clusters.len(),
                cluster_sizes: group.cluster_sizes(),
                y_cluster_sizes: Vec::new(),
                target_size: group.targets.len(),
                kernel: None,
                values: BTreeMap::new(),
                flags: Vec::new(),
            };
            r.values.insert("uncertainty".into(), Some(u));
            r.values.insert("correct".into(), Some(f64::from(correct)));
            r.values.insert("loss".into(), group.loss);
            Ok((r, source))
        })
        .collect();

    let mut groups = Vec::new();
    let mut sources = Vec::new();
    let mut errors = Vec::new();
    for (group, outcome) in dataset.groups.iter().zip(outcomes) {
        match outcome {
            Ok((r, s)) => {
                groups.push(r);
                sources.push(s);
            }
            Err(e) if args.io.skip_errors => errors.push(GroupError {
                group_id: group.id.clone(),
                message: e.to_string(),
            }),
            Err(e) => return Err(e),
        }
    }

    let scores: Vec<f64> = groups.iter().map(|g| g.values["uncertainty"].unwrap()).collect();
    let correct: Vec<u8> = groups
        .iter()
        .map(|g| g.values["correct"].unwrap() as u8)
        .collect();
    let orientation: Orientation = args.orientation.into();
    let auroc = evaluate::auroc_oriented(&scores, &correct, orientation)?;

    // Loss defaults to incorrectness when no continuous loss is given.
    let losses: Option<Vec<f64>> = groups
        .iter()
        .map(|g| g.values["loss"].or(Some(1.0 - g.values["correct"].unwrap())))
        .collect();
    let pearson = losses.and_then(|l| evaluate::pearson(&scores, &l).ok());

    sources.sort_unstable();
    sources.dedup();
    let mut report = base_report(command, dataset.groups.len(), spec);
    report.parameters.insert("threshold".into(), json!(args.threshold));
    report.parameters.insert("orientation".into(), json!(orientation));
    report.evaluation = Some(Evaluation {
        auroc,
        pearson,
        orientation,
        uncertainty_source: sources.join("+"),
        threshold: args.threshold,
        correct: correct.iter().filter(|&&c| c == 1).count(),
        incorrect: correct.iter().filter(|&&c| c == 0).count(),
    });
    report.aggregate = report::aggregate(&groups);
    report.groups = groups;
    report.errors = errors;
    Ok(report)
}
