//! Command-line interface: generate datasets, quantify boundary aliasing,
//! and re-render archived samples from their sidecars.
//!
//! Output is a pure function of the config file bytes and the flags: no
//! wall-clock, locale, filesystem-order, or thread-count dependence.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use boundsafe::analyzer::{
    bsr_map, decomposition_check, AliasingReport, DecompositionReport, DEFAULT_EPSILON,
    DEFAULT_MC_REALIZATIONS,
};
use boundsafe::composer::{
    effective_parallelism, env_thread_cap, generate_sample, render_batch, RenderedSample,
};
use boundsafe::config::{load_config, GenConfig, OutputFormat, RenderMode};
use boundsafe::error::Result;
use boundsafe::grid::Shape;
use boundsafe::io::{read_sample, rerender_check, write_sample};

#[derive(Parser)]
#[command(
    name = "boundsafe",
    version,
    about = "Synthetic 3D volume/annotation generator with boundary-safe texturing, \
             plus a boundary-aliasing analyzer"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a dataset of volume/annotation pairs.
    Generate(GenerateArgs),
    /// Measure boundary aliasing on stored or freshly generated samples.
    Analyze(AnalyzeArgs),
    /// Re-render samples from their JSON sidecars and verify checksums.
    Rerender(RerenderArgs),
}

/// Flags shared by `generate` and `analyze`; every flag overrides the
/// corresponding config-file key.
#[derive(Args)]
struct ConfigOverrides {
    /// Config file of flat `key = value` lines; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of volumes.
    #[arg(long)]
    count: Option<u64>,
    /// Global RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Rendering mode.
    #[arg(long, value_parser = parse_mode)]
    mode: Option<RenderMode>,
    /// Cubic domain edge length in voxels.
    #[arg(long)]
    domain: Option<usize>,
    /// Objects per volume, as LO,HI (inclusive).
    #[arg(long, value_parser = parse_range_u32)]
    objects: Option<(u32, u32)>,
    /// Primitive half-extent bounds in voxels, as LO,HI.
    #[arg(long, value_parser = parse_range_f64)]
    size_range: Option<(f64, f64)>,
    /// Shell thickness in voxels.
    #[arg(long)]
    tau_shell: Option<u32>,
    /// Gap width in voxels.
    #[arg(long)]
    tau_gap: Option<u32>,
    /// Minimum contrast between the outer boundary and the background.
    #[arg(long)]
    contrast_min: Option<f64>,
    /// Comma-separated subset of granular,fibrous,porous.
    #[arg(long, value_parser = parse_kinds)]
    texture_kinds: Option<[bool; 3]>,
    /// Accept gap widths below the safe floor (prints a warning).
    #[arg(long)]
    allow_unsafe_gap: bool,
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    overrides: ConfigOverrides,
    /// Output directory.
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Volume file format.
    #[arg(long, value_parser = parse_format)]
    format: Option<OutputFormat>,
    /// Worker threads (default: all cores; BOUNDSAFE_THREADS caps this).
    #[arg(long)]
    parallelism: Option<usize>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    overrides: ConfigOverrides,
    /// Analyze stored samples from this directory instead of generating
    /// ephemeral ones.
    #[arg(long)]
    input_dir: Option<PathBuf>,
    /// Analyze exactly these volume indices (comma-separated). Without it,
    /// stored mode scans the input directory and ephemeral mode renders
    /// indices 0..count.
    #[arg(long, value_delimiter = ',')]
    indices: Option<Vec<u64>>,
    /// Regularizer added to the aliasing-power denominator.
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
    /// Texture re-synthesis count for the Monte Carlo denominator.
    #[arg(long, default_value_t = DEFAULT_MC_REALIZATIONS)]
    mc_realizations: u32,
    /// Skip the per-object boundary decomposition check.
    #[arg(long)]
    no_decomposition: bool,
    /// Directory for report JSON and CSV files.
    #[arg(long, default_value = "reports")]
    report_dir: PathBuf,
}

#[derive(Args)]
struct RerenderArgs {
    /// Sidecar JSON paths (`<index>_meta.json`) to re-render and verify.
    #[arg(required = true)]
    sidecars: Vec<PathBuf>,
}

fn parse_mode(s: &str) -> std::result::Result<RenderMode, String> {
    match s {
        "shielded" => Ok(RenderMode::Shielded),
        "naive" => Ok(RenderMode::Naive),
        other => Err(format!("expected shielded|naive, got `{other}`")),
    }
}

fn parse_format(s: &str) -> std::result::Result<OutputFormat, String> {
    match s {
        "raw" => Ok(OutputFormat::Raw),
        "nifti" => Ok(OutputFormat::Nifti),
        other => Err(format!("expected raw|nifti, got `{other}`")),
    }
}

fn split_pair(s: &str) -> std::result::Result<(&str, &str), String> {
    let mut it = s.splitn(2, ',');
    match (it.next(), it.next()) {
        (Some(a), Some(b)) => Ok((a.trim(), b.trim())),
        _ => Err(format!("expected LO,HI, got `{s}`")),
    }
}

fn parse_range_u32(s: &str) -> std::result::Result<(u32, u32), String> {
    let (a, b) = split_pair(s)?;
    let lo = a.parse().map_err(|e| format!("bad lower bound `{a}`: {e}"))?;
    let hi = b.parse().map_err(|e| format!("bad upper bound `{b}`: {e}"))?;
    Ok((lo, hi))
}

fn parse_range_f64(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = split_pair(s)?;
    let lo = a.parse().map_err(|e| format!("bad lower bound `{a}`: {e}"))?;
    let hi = b.parse().map_err(|e| format!("bad upper bound `{b}`: {e}"))?;
    Ok((lo, hi))
}

fn parse_kinds(s: &str) -> std::result::Result<[bool; 3], String> {
    let mut kinds = [false; 3];
    for part in s.split(',') {
        match part.trim() {
            "granular" => kinds[0] = true,
            "fibrous" => kinds[1] = true,
            "porous" => kinds[2] = true,
            other => return Err(format!("expected granular|fibrous|porous, got `{other}`")),
        }
    }
    Ok(kinds)
}

/// Builds the effective config: file (or defaults), then flag overrides,
/// then validation. Warnings go to stderr.
fn resolve_config(o: &ConfigOverrides) -> Result<GenConfig> {
    let mut config = match &o.config {
        Some(path) => load_config(path)?.0,
        None => GenConfig::default(),
    };
    if let Some(v) = o.count {
        config.count = v;
    }
    if let Some(v) = o.seed {
        config.global_seed = v;
    }
    if let Some(v) = o.mode {
        config.mode = v;
    }
    if let Some(v) = o.domain {
        config.domain_shape = Shape::cube(v);
    }
    if let Some(v) = o.objects {
        config.objects_range = v;
    }
    if let Some(v) = o.size_range {
        config.size_range = v;
    }
    if let Some(v) = o.tau_shell {
        config.tau_shell = v;
    }
    if let Some(v) = o.tau_gap {
        config.tau_gap = v;
    }
    if let Some(v) = o.contrast_min {
        config.contrast_min = v;
    }
    if let Some(v) = o.texture_kinds {
        config.texture_kinds_enabled = v;
    }
    if o.allow_unsafe_gap {
        config.allow_unsafe_gap = true;
    }
    for warning in config.validate()? {
        eprintln!("warning: {warning}");
    }
    Ok(config)
}

fn run_generate(args: GenerateArgs) -> Result<bool> {
    let mut config = resolve_config(&args.overrides)?;
    if let Some(dir) = &args.output_dir {
        config.output_dir = dir.display().to_string();
    }
    if let Some(format) = args.format {
        config.output_format = format;
    }
    let dir = PathBuf::from(&config.output_dir);
    fs::create_dir_all(&dir)?;

    let default_threads = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1);
    let threads = effective_parallelism(
        args.parallelism.unwrap_or(default_threads),
        env_thread_cap(),
    );

    let mut written = 0u64;
    let mut failures: Vec<(u64, String)> = Vec::new();
    render_batch(&config, threads, |index, outcome| match outcome {
        Ok(sample) => match write_sample(&sample, config.output_format, &dir) {
            Ok(_) => written += 1,
            Err(e) => failures.push((index, e.to_string())),
        },
        Err(e) => failures.push((index, e.to_string())),
    })?;

    println!(
        "wrote {written} of {} samples to {} ({})",
        config.count,
        dir.display(),
        match config.output_format {
            OutputFormat::Raw => "raw + sidecar",
            OutputFormat::Nifti => "NIfTI-1 + sidecar",
        }
    );
    failures.sort_by_key(|(index, _)| *index);
    for (index, message) in &failures {
        eprintln!("volume {index}: {message}");
    }
    if !failures.is_empty() {
        eprintln!("{} of {} samples failed", failures.len(), config.count);
    }
    Ok(failures.is_empty())
}

/// One analyzed sample as persisted by `analyze`.
#[derive(Serialize)]
struct SampleReport {
    index: u64,
    mode: RenderMode,
    aliasing: AliasingReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    decomposition: Option<Vec<DecompositionReport>>,
}

/// Indices present in a sample directory, in increasing order.
fn stored_indices(dir: &Path) -> Result<Vec<u64>> {
    let mut indices = BTreeSet::new();
    for entry in fs::read_dir(dir)? {
        let name = entry?.file_name();
        let Some(name) = name.to_str() else { continue };
        if let Some(prefix) = name.strip_suffix("_meta.json") {
            if let Ok(index) = prefix.parse::<u64>() {
                indices.insert(index);
            }
        }
    }
    Ok(indices.into_iter().collect())
}

fn analyze_one(
    sample: &RenderedSample,
    args: &AnalyzeArgs,
) -> Result<SampleReport> {
    let aliasing = bsr_map(sample, args.epsilon, args.mc_realizations)?;
    let decomposition = if args.no_decomposition {
        None
    } else {
        let mut reports = Vec::with_capacity(sample.spec.objects.len());
        for k in 0..sample.spec.objects.len() {
            reports.push(decomposition_check(sample, k)?);
        }
        Some(reports)
    };
    Ok(SampleReport {
        index: sample.spec.volume_index,
        mode: sample.spec.mode,
        aliasing,
        decomposition,
    })
}

fn mode_name(mode: RenderMode) -> &'static str {
    match mode {
        RenderMode::Shielded => "shielded",
        RenderMode::Naive => "naive",
    }
}

fn csv_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:?}")).unwrap_or_default()
}

fn run_analyze(args: AnalyzeArgs) -> Result<bool> {
    fs::create_dir_all(&args.report_dir)?;

    // Index list plus a loader, so stored and ephemeral samples share the
    // rest of the pipeline. An explicit --indices list is honored verbatim
    // in both modes; a requested index that cannot be loaded (missing on
    // disk, render failure) surfaces as a per-index failure below.
    let requested: Option<Vec<u64>> = args
        .indices
        .as_ref()
        .map(|w| w.iter().copied().collect::<BTreeSet<u64>>().into_iter().collect());
    let (indices, source): (Vec<u64>, Box<dyn Fn(u64) -> Result<RenderedSample>>) =
        match &args.input_dir {
            Some(dir) => {
                let indices = match requested {
                    Some(r) => r,
                    None => stored_indices(dir)?,
                };
                let dir = dir.clone();
                (indices, Box::new(move |index| read_sample(&dir, index)))
            }
            None => {
                let config = resolve_config(&args.overrides)?;
                let indices = match requested {
                    Some(r) => r,
                    None => (0..config.count).collect(),
                };
                (indices, Box::new(move |index| generate_sample(&config, index)))
            }
        };

    if indices.is_empty() {
        eprintln!("no samples to analyze");
        return Ok(false);
    }

    let mut values_csv = String::from("index,mode,x,y,z,bsr,interference_norm\n");
    let mut summary_csv = String::from(
        "index,mode,boundary_voxels,bsr_min,bsr_p05,bsr_median,frac_aliased,gap_gradient_max\n",
    );
    let mut pooled: Vec<f64> = Vec::new();
    let mut analyzed = 0u64;
    let mut failures: Vec<(u64, String)> = Vec::new();

    for &index in &indices {
        let report = source(index).and_then(|sample| analyze_one(&sample, &args));
        let report = match report {
            Ok(r) => r,
            Err(e) => {
                failures.push((index, e.to_string()));
                continue;
            }
        };

        let mode = mode_name(report.mode);
        for stat in &report.aliasing.per_boundary_voxel {
            let [x, y, z] = stat.coord;
            // Unreachable expect: the writer above never produces NaN.
            writeln!(
                values_csv,
                "{index},{mode},{x},{y},{z},{:?},{:?}",
                stat.bsr, stat.interference_norm
            )
            .expect("string write");
            pooled.push(stat.bsr);
        }
        let s = &report.aliasing.summary;
        writeln!(
            summary_csv,
            "{index},{mode},{},{:?},{:?},{:?},{:?},{}",
            report.aliasing.per_boundary_voxel.len(),
            s.bsr_min,
            s.bsr_p05,
            s.bsr_median,
            s.frac_aliased,
            csv_opt(s.gap_gradient_max)
        )
        .expect("string write");

        let path = args.report_dir.join(format!("report_{index}.json"));
        fs::write(&path, serde_json::to_string_pretty(&report)?)?;

        println!(
            "volume {index} ({mode}): {} boundary voxels, BSR min {:.3e} median {:.3e}, \
             aliased fraction {:.3}",
            report.aliasing.per_boundary_voxel.len(),
            s.bsr_min,
            s.bsr_median,
            s.frac_aliased
        );
        if let Some(notice) = &report.aliasing.notice {
            println!("  note: {notice}");
        }
        analyzed += 1;
    }

    fs::write(args.report_dir.join("bsr_values.csv"), values_csv)?;
    fs::write(args.report_dir.join("summary.csv"), summary_csv)?;

    if !pooled.is_empty() {
        pooled.sort_by(|a, b| a.total_cmp(b));
        let mid = pooled.len() / 2;
        let median = if pooled.len() % 2 == 1 {
            pooled[mid]
        } else {
            0.5 * (pooled[mid - 1] + pooled[mid])
        };
        println!(
            "pooled median BSR over {analyzed} samples ({} boundary voxels): {median:.6e}",
            pooled.len()
        );
    }
    println!("reports written to {}", args.report_dir.display());

    failures.sort_by_key(|(index, _)| *index);
    for (index, message) in &failures {
        eprintln!("volume {index}: {message}");
    }
    if !failures.is_empty() {
        eprintln!("{} of {} samples failed", failures.len(), indices.len());
    }
    Ok(failures.is_empty())
}

fn run_rerender(args: RerenderArgs) -> Result<bool> {
    let mut ok = true;
    for path in &args.sidecars {
        match rerender_check(path) {
            Ok(outcome) if outcome.matches() => {
                println!(
                    "{}: volume {} reproduced bit-exactly (image sha256 {})",
                    path.display(),
                    outcome.index,
                    outcome.rerendered_image_sha256
                );
            }
            Ok(outcome) => {
                eprintln!(
                    "{}: volume {} MISMATCH: image archived {} rerendered {}, \
                     labels archived {} rerendered {}",
                    path.display(),
                    outcome.index,
                    outcome.archived_image_sha256,
                    outcome.rerendered_image_sha256,
                    outcome.archived_labels_sha256,
                    outcome.rerendered_labels_sha256
                );
                ok = false;
            }
            Err(e) => {
                eprintln!("{}: {e}", path.display());
                ok = false;
            }
        }
    }
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Generate(args) => run_generate(args),
        Command::Analyze(args) => run_analyze(args),
        Command::Rerender(args) => run_rerender(args),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
