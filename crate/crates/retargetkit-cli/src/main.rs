//! Batch command-line front end for the retargeting pipeline.
//!
//! Each subcommand reads and writes structured JSON or CSV files and is
//! deterministic under a fixed seed, so re-running a command on the same
//! inputs reproduces its outputs byte for byte. The exit code is zero
//! exactly when nothing failed; batch commands keep going after
//! individual item failures and exit nonzero after printing a per-item
//! status table.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Deserialize;
use serde_json::json;

use retargetkit::cepr::{
    cluster_motions, curate_human_sequence, filter_robot_sequence, CurationConfig, Embedding,
    FilterConfig, FilterReport,
};
use retargetkit::kinematics::{forward_kinematics, load_model, RobotModel, UpAxis};
use retargetkit::metrics::{quality_report, tracking_errors};
use retargetkit::motion::{BodyPose, MotionSequence, RobotTrajectory};
use retargetkit::objective::{
    certify_negative_curvature, CostWeights, CurvatureSearch, MappingConfig, SurrogateTarget,
};
use retargetkit::retargeter::{retarget_sequence, SolverConfig};

#[derive(Parser)]
#[command(
    name = "retargetkit",
    version,
    about = "Kinematic motion retargeting pipeline: FK, IK retargeting, \
             curvature certification, data filtering, metrics and clustering"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run forward kinematics over a trajectory and write body poses.
    Fk(FkArgs),
    /// Retarget a human motion sequence onto a robot model.
    Retarget(RetargetArgs),
    /// Search a tracking objective for a negative-curvature certificate.
    Certify(CertifyArgs),
    /// Curate human sequences and filter robot trajectories in batch.
    Filter(FilterArgs),
    /// Score a trajectory: defect counts and optional tracking errors.
    Metrics(MetricsArgs),
    /// Cluster motion embeddings with spherical k-means.
    Cluster(ClusterArgs),
}

#[derive(Args)]
struct FkArgs {
    /// Robot model JSON.
    #[arg(long)]
    model: PathBuf,
    /// Input trajectory JSON ({fps, joint_names,
    /// frames: [{root_pos, root_quat_wxyz, q}]}).
    #[arg(long)]
    trajectory: PathBuf,
    /// Output body-pose sequence JSON.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RetargetArgs {
    /// Robot model JSON.
    #[arg(long)]
    model: PathBuf,
    /// Body-pair mapping JSON ({pairs: [...], scales: {...}}).
    #[arg(long)]
    mapping: PathBuf,
    /// Input human motion sequence JSON ({fps, body_names,
    /// frames: [{poses: [{pos, quat_wxyz}]}]}).
    #[arg(long)]
    motion: PathBuf,
    /// Solver settings JSON; defaults apply when omitted. The default
    /// solver also moves the root pose; pass {"optimize_root": false}
    /// to pin the root on fixed-base models.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Re-solve every frame from the cold initializer instead of warm
    /// starting from the previous frame's solution.
    #[arg(long)]
    cold_restart: bool,
    /// Output trajectory JSON. Per-frame diagnostics go to the same path
    /// with a `.diagnostics.csv` extension.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CertifyArgs {
    /// Robot model JSON.
    #[arg(long)]
    model: PathBuf,
    /// Certification job JSON: {body, w_rot, w_pos, search: {...}}.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the search seed from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output certificate JSON.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FilterArgs {
    /// Manifest JSON: an array of {path, kind: "human"|"robot"} items.
    /// Relative paths resolve against the manifest's directory.
    #[arg(long)]
    manifest: PathBuf,
    /// Job config JSON with `human` and/or `robot` sections.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for per-item reports and summary.csv.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct MetricsArgs {
    /// Robot model JSON.
    #[arg(long)]
    model: PathBuf,
    /// Trajectory to score (same format as `fk --trajectory`).
    #[arg(long)]
    trajectory: PathBuf,
    /// Reference trajectory for tracking errors (optional).
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Output CSV (one header row plus one data row).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ClusterArgs {
    /// Embeddings JSON: {ids: [...], vectors: [[...], ...]}.
    #[arg(long)]
    embeddings: PathBuf,
    /// Number of clusters.
    #[arg(long)]
    k: usize,
    /// Seed for the k-means++ initialization.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output assignment CSV (id, cluster).
    #[arg(long)]
    out: PathBuf,
}

fn main() {
    let result = match Cli::parse().command {
        Command::Fk(args) => cmd_fk(&args),
        Command::Retarget(args) => cmd_retarget(&args),
        Command::Certify(args) => cmd_certify(&args),
        Command::Filter(args) => cmd_filter(&args),
        Command::Metrics(args) => cmd_metrics(&args),
        Command::Cluster(args) => cmd_cluster(&args),
    };
    if let Err(e) = result {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

// --- shared file helpers ---------------------------------------------------

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut owned;
    let text = if text.ends_with('\n') {
        text
    } else {
        owned = String::with_capacity(text.len() + 1);
        owned.push_str(text);
        owned.push('\n');
        &owned
    };
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn load_model_file(path: &Path) -> Result<RobotModel> {
    load_model(&read_text(path)?).with_context(|| format!("loading model {}", path.display()))
}

fn load_trajectory_file(path: &Path) -> Result<RobotTrajectory> {
    RobotTrajectory::from_document(&read_text(path)?)
        .with_context(|| format!("loading trajectory {}", path.display()))
}

fn load_motion_file(path: &Path) -> Result<MotionSequence> {
    MotionSequence::from_document(&read_text(path)?)
        .with_context(|| format!("loading motion sequence {}", path.display()))
}

/// Resolves `path` against the directory containing `base_file`.
fn resolve_relative(base_file: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base_file
            .parent()
            .unwrap_or_else(|| Path::new("."))
            .join(path)
    }
}

// --- fk --------------------------------------------------------------------

fn cmd_fk(args: &FkArgs) -> Result<()> {
    let model = load_model_file(&args.model)?;
    let traj = load_trajectory_file(&args.trajectory)?;
    traj.check_model(&model)
        .with_context(|| format!("checking {}", args.trajectory.display()))?;
    if traj.frames.is_empty() {
        bail!("no frames in {}", args.trajectory.display());
    }
    let body_names: Vec<String> = model.links().iter().map(|l| l.name.clone()).collect();
    let mut frames = Vec::with_capacity(traj.frames.len());
    for cfg in &traj.frames {
        let fk = forward_kinematics(&model, cfg)?;
        frames.push(
            (0..model.links().len())
                .map(|i| {
                    let pose = fk.pose(i);
                    BodyPose {
                        position: pose.translation,
                        rotation: pose.rotation,
                    }
                })
                .collect(),
        );
    }
    let seq = MotionSequence {
        fps: traj.fps,
        body_names,
        frames,
    };
    write_text(&args.out, &seq.to_document())?;
    println!(
        "fk: {} frames x {} bodies -> {}",
        seq.frames.len(),
        seq.body_names.len(),
        args.out.display()
    );
    Ok(())
}

// --- retarget ----------------------------------------------------------------

fn cmd_retarget(args: &RetargetArgs) -> Result<()> {
    let model = load_model_file(&args.model)?;
    let mapping = MappingConfig::from_document(&read_text(&args.mapping)?)
        .with_context(|| format!("loading mapping {}", args.mapping.display()))?;
    let motion = load_motion_file(&args.motion)?;
    let mut solver = match &args.config {
        Some(path) => serde_json::from_str::<SolverConfig>(&read_text(path)?)
            .with_context(|| format!("loading solver config {}", path.display()))?,
        None => SolverConfig::default(),
    };
    if args.cold_restart {
        solver.warm_start = false;
    }
    let result = retarget_sequence(&model, &mapping, &motion, &solver, None)?;

    write_text(&args.out, &result.trajectory.to_document())?;
    let diag_path = args.out.with_extension("diagnostics.csv");
    let mut wtr = csv::Writer::from_path(&diag_path)
        .with_context(|| format!("writing {}", diag_path.display()))?;
    wtr.write_record(["frame", "final_cost", "iterations", "converged", "stalled_at_limit"])?;
    for (t, diag) in result.per_frame.iter().enumerate() {
        wtr.write_record([
            t.to_string(),
            format!("{}", diag.final_cost),
            diag.iterations.to_string(),
            diag.converged.to_string(),
            diag.stalled_at_limit.to_string(),
        ])?;
    }
    wtr.flush()?;

    let converged = result.per_frame.iter().filter(|d| d.converged).count();
    println!(
        "retarget: {} frames ({} converged) -> {} (+ {})",
        result.per_frame.len(),
        converged,
        args.out.display(),
        diag_path.display()
    );
    Ok(())
}

// --- certify -----------------------------------------------------------------

/// Certification job file.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CertifySpec {
    /// Tracked body whose surrogate cost is analyzed.
    body: String,
    #[serde(default = "one")]
    w_rot: f64,
    #[serde(default = "one")]
    w_pos: f64,
    #[serde(default)]
    search: CurvatureSearch,
}

fn one() -> f64 {
    1.0
}

fn target_json(target: &SurrogateTarget) -> serde_json::Value {
    match target {
        SurrogateTarget::Pose(p) => json!({
            "kind": "pose",
            "pos": [p.translation.x, p.translation.y, p.translation.z],
            "quat_wxyz": p.rotation.to_quaternion_wxyz(),
        }),
        SurrogateTarget::Position(p) => json!({
            "kind": "position",
            "pos": [p.x, p.y, p.z],
        }),
        SurrogateTarget::Rotation(r) => json!({
            "kind": "rotation",
            "quat_wxyz": r.to_quaternion_wxyz(),
        }),
    }
}

fn cmd_certify(args: &CertifyArgs) -> Result<()> {
    let model = load_model_file(&args.model)?;
    let mut spec: CertifySpec = serde_json::from_str(&read_text(&args.config)?)
        .with_context(|| format!("loading certification config {}", args.config.display()))?;
    if let Some(seed) = args.seed {
        spec.search.seed = seed;
    }
    let weights = CostWeights::new(spec.w_rot, spec.w_pos)?;
    let certificate = certify_negative_curvature(&model, &spec.body, &weights, &spec.search)?;
    let doc = match &certificate {
        Some(cert) => json!({
            "certified": true,
            "body": cert.body,
            "min_eigenvalue": cert.min_eigenvalue,
            "quadratic_form": cert.quadratic_form,
            "direction": cert.direction.iter().copied().collect::<Vec<f64>>(),
            "config": {
                "root_pos": [
                    cert.config.root.translation.x,
                    cert.config.root.translation.y,
                    cert.config.root.translation.z,
                ],
                "root_quat_wxyz": cert.config.root.rotation.to_quaternion_wxyz(),
                "q": cert.config.q.iter().copied().collect::<Vec<f64>>(),
            },
            "target": target_json(&cert.target),
        }),
        None => json!({
            "certified": false,
            "body": spec.body,
            "samples": spec.search.n_samples,
        }),
    };
    write_text(&args.out, &serde_json::to_string_pretty(&doc)?)?;
    match &certificate {
        Some(cert) => println!(
            "certify: negative curvature {:.6} along a unit direction at `{}` -> {}",
            cert.quadratic_form,
            cert.body,
            args.out.display()
        ),
        None => println!(
            "certify: no negative curvature found for `{}` -> {}",
            spec.body,
            args.out.display()
        ),
    }
    Ok(())
}

// --- filter ------------------------------------------------------------------

#[derive(Deserialize, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
enum ItemKind {
    Human,
    Robot,
}

impl ItemKind {
    fn name(self) -> &'static str {
        match self {
            ItemKind::Human => "human",
            ItemKind::Robot => "robot",
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestItem {
    path: PathBuf,
    kind: ItemKind,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FilterJobConfig {
    human: Option<HumanJobConfig>,
    robot: Option<RobotJobConfig>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct HumanJobConfig {
    /// Foot body names used by the contact checks.
    feet: Vec<String>,
    /// Per-body masses for the support check; missing bodies weigh 1.
    #[serde(default)]
    masses: BTreeMap<String, f64>,
    up_axis: UpAxis,
    #[serde(default)]
    curation: CurationConfig,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RobotJobConfig {
    /// Robot model path, resolved against the config file's directory.
    model: PathBuf,
    #[serde(default)]
    filter: FilterConfig,
}

fn process_item(
    item: &ManifestItem,
    manifest_path: &Path,
    human: Option<&HumanJobConfig>,
    robot: Option<&(RobotModel, FilterConfig)>,
) -> Result<FilterReport> {
    let path = resolve_relative(manifest_path, &item.path);
    match item.kind {
        ItemKind::Human => {
            let cfg = human.expect("checked before dispatch");
            let seq = load_motion_file(&path)?;
            Ok(curate_human_sequence(
                &seq,
                &cfg.masses,
                &cfg.feet,
                cfg.up_axis,
                &cfg.curation,
            )?)
        }
        ItemKind::Robot => {
            let (model, filter) = robot.expect("checked before dispatch");
            let traj = load_trajectory_file(&path)?;
            Ok(filter_robot_sequence(&traj, model, filter)?)
        }
    }
}

fn cmd_filter(args: &FilterArgs) -> Result<()> {
    let items: Vec<ManifestItem> = serde_json::from_str(&read_text(&args.manifest)?)
        .with_context(|| format!("loading manifest {}", args.manifest.display()))?;
    let config: FilterJobConfig = serde_json::from_str(&read_text(&args.config)?)
        .with_context(|| format!("loading filter config {}", args.config.display()))?;

    if items.iter().any(|i| i.kind == ItemKind::Human) && config.human.is_none() {
        bail!("manifest contains human items but the config has no `human` section");
    }
    let robot = if items.iter().any(|i| i.kind == ItemKind::Robot) {
        let section = match &config.robot {
            Some(section) => section,
            None => bail!("manifest contains robot items but the config has no `robot` section"),
        };
        let model = load_model_file(&resolve_relative(&args.config, &section.model))?;
        Some((model, section.filter.clone()))
    } else {
        None
    };

    fs::create_dir_all(&args.out)
        .with_context(|| format!("creating output directory {}", args.out.display()))?;

    let outcomes: Vec<std::result::Result<FilterReport, String>> = items
        .par_iter()
        .map(|item| {
            process_item(item, &args.manifest, config.human.as_ref(), robot.as_ref())
                .map_err(|e| format!("{e:#}"))
        })
        .collect();

    let summary_path = args.out.join("summary.csv");
    let mut wtr = csv::Writer::from_path(&summary_path)
        .with_context(|| format!("writing {}", summary_path.display()))?;
    wtr.write_record(["index", "path", "kind", "status", "verdict", "reasons"])?;
    let mut failed = 0usize;
    for (i, (item, outcome)) in items.iter().zip(&outcomes).enumerate() {
        let path_str = item.path.display().to_string();
        match outcome {
            Ok(report) => {
                let stem = item
                    .path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "item".to_string());
                let report_path = args.out.join(format!("{i:04}_{stem}.report.json"));
                write_text(&report_path, &serde_json::to_string_pretty(report)?)?;
                let verdict = if report.is_keep() { "keep" } else { "reject" };
                let reasons: Vec<&str> =
                    report.reasons.iter().map(|r| r.check.as_str()).collect();
                wtr.write_record([
                    &i.to_string(),
                    &path_str,
                    item.kind.name(),
                    "ok",
                    verdict,
                    &reasons.join(";"),
                ])?;
                println!("{i:>5}  {:6}  {:6}  {}", "ok", verdict, path_str);
            }
            Err(message) => {
                failed += 1;
                wtr.write_record([
                    &i.to_string(),
                    &path_str,
                    item.kind.name(),
                    "error",
                    "",
                    message,
                ])?;
                println!("{i:>5}  {:6}  {:6}  {}: {}", "error", "", path_str, message);
            }
        }
    }
    wtr.flush()?;
    println!(
        "filter: {} items ({} failed) -> {}",
        items.len(),
        failed,
        args.out.display()
    );
    if failed > 0 {
        bail!("{failed} of {} items failed", items.len());
    }
    Ok(())
}

// --- metrics -----------------------------------------------------------------

fn cmd_metrics(args: &MetricsArgs) -> Result<()> {
    let model = load_model_file(&args.model)?;
    let traj = load_trajectory_file(&args.trajectory)?;
    let report = quality_report(&traj, &model)?;
    let tracking = match &args.reference {
        Some(path) => {
            let reference = load_trajectory_file(path)?;
            Some(tracking_errors(&traj, &reference, &model)?)
        }
        None => None,
    };

    let mut wtr = csv::Writer::from_path(&args.out)
        .with_context(|| format!("writing {}", args.out.display()))?;
    wtr.write_record([
        "trajectory",
        "frames",
        "joint_jump_count",
        "joint_jump_pct",
        "self_collision_count",
        "self_collision_pct",
        "joint_limit_count",
        "joint_limit_pct",
        "mpjpe",
        "w_mpjpe",
    ])?;
    let (mpjpe, w_mpjpe) = match &tracking {
        Some(t) => (format!("{}", t.mpjpe), format!("{}", t.w_mpjpe)),
        None => (String::new(), String::new()),
    };
    wtr.write_record([
        args.trajectory.display().to_string(),
        report.frame_count.to_string(),
        report.joint_jump.count.to_string(),
        format!("{}", report.joint_jump.percentage),
        report.self_collision.count.to_string(),
        format!("{}", report.self_collision.percentage),
        report.joint_limit.count.to_string(),
        format!("{}", report.joint_limit.percentage),
        mpjpe,
        w_mpjpe,
    ])?;
    wtr.flush()?;

    println!(
        "metrics: {} frames | jump {} | self-collision {} | near-limit {}",
        report.frame_count,
        report.joint_jump.count,
        report.self_collision.count,
        report.joint_limit.count
    );
    if let Some(t) = &tracking {
        println!("metrics: mpjpe {:.6} m | w-mpjpe {:.6} m", t.mpjpe, t.w_mpjpe);
    }
    println!("metrics: -> {}", args.out.display());
    Ok(())
}

// --- cluster -----------------------------------------------------------------

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EmbeddingsDoc {
    ids: Vec<String>,
    vectors: Vec<Vec<f64>>,
}

fn cmd_cluster(args: &ClusterArgs) -> Result<()> {
    let doc: EmbeddingsDoc = serde_json::from_str(&read_text(&args.embeddings)?)
        .with_context(|| format!("loading embeddings {}", args.embeddings.display()))?;
    if doc.ids.len() != doc.vectors.len() {
        bail!(
            "embeddings file has {} ids but {} vectors",
            doc.ids.len(),
            doc.vectors.len()
        );
    }
    let embeddings: Vec<Embedding> = doc
        .ids
        .into_iter()
        .zip(doc.vectors)
        .map(|(id, vector)| Embedding { id, vector })
        .collect();
    let assignments = cluster_motions(&embeddings, args.k, args.seed)?;

    let mut wtr = csv::Writer::from_path(&args.out)
        .with_context(|| format!("writing {}", args.out.display()))?;
    wtr.write_record(["id", "cluster"])?;
    let mut sizes = vec![0usize; args.k];
    for assignment in &assignments {
        sizes[assignment.cluster] += 1;
        wtr.write_record([assignment.id.as_str(), &assignment.cluster.to_string()])?;
    }
    wtr.flush()?;

    println!(
        "cluster: {} embeddings into {} clusters (sizes {:?}) -> {}",
        assignments.len(),
        args.k,
        sizes,
        args.out.display()
    );
    Ok(())
}
