use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use stabmatch::format::{self, ParsedInstance};
use stabmatch::generate::{self, HrtGenParams, ListLength, MasterList, SmtiGenParams};
use stabmatch::solve::{self, export_lp, read_lp, write_solution};
use stabmatch::stability::{blocking_pairs, check_matching};
use stabmatch::{Backend, SolveStatus};
use stabmatch_cli::bench;
use stabmatch_cli::pipeline::{self, exit_code};
use stabmatch_cli::{OutputFormat, SharedFlags};

#[derive(Parser)]
#[command(
    name = "stabmatch",
    version,
    about = "Exact solving of stable matching problems with ties"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance and report the optimal stable matching.
    Solve {
        instance: PathBuf,
        #[command(flatten)]
        flags: SharedFlags,
        #[arg(long, value_enum, default_value_t)]
        format: OutputFormat,
    },
    /// Remove pairs that belong to no stable matching.
    Preprocess {
        instance: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        threshold: f64,
        /// Reduced instance; standard output when absent.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Removal log as `row col reduction` lines; standard error when absent.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Generate a random instance.
    Generate {
        #[command(subcommand)]
        kind: GenerateKind,
    },
    /// Check a matching for validity and blocking pairs.
    Verify {
        instance: PathBuf,
        matching: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        threshold: f64,
    },
    /// Write the model for an instance in LP format.
    ExportLp {
        instance: PathBuf,
        #[command(flatten)]
        flags: SharedFlags,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run every row of a manifest and emit one result row per run.
    Bench {
        manifest: PathBuf,
        /// Flags applied to every row that does not set them itself.
        #[command(flatten)]
        flags: SharedFlags,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
        format: OutputFormat,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Solve an LP file with the builtin solver, speaking the external
    /// backend protocol.
    #[command(hide = true)]
    LpSolve {
        lp: PathBuf,
        solution: PathBuf,
        seconds: f64,
    },
}

#[derive(Subcommand)]
enum GenerateKind {
    /// Stable marriage with ties and incomplete lists.
    Smti {
        #[arg(long)]
        n1: usize,
        #[arg(long)]
        n2: usize,
        #[arg(long = "list-len", value_name = "N|MIN-MAX")]
        list_len: ListLength,
        #[arg(long = "tie-density", default_value_t = 0.0)]
        tie_density: f64,
        /// Column-side density; defaults to --tie-density.
        #[arg(long = "tie-density-col")]
        tie_density_col: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Hospitals/residents with ties; doctors are rows.
    Hrt {
        /// Doctors.
        #[arg(long)]
        n1: usize,
        /// Hospitals.
        #[arg(long)]
        n2: usize,
        #[arg(long)]
        posts: usize,
        #[arg(long = "list-len", value_name = "N|MIN-MAX")]
        list_len: ListLength,
        /// Hospital-side tie density.
        #[arg(long = "tie-density", default_value_t = 0.0)]
        tie_density: f64,
        /// Rank doctors by a shared list with this many grades.
        #[arg(long = "master-grades")]
        master_grades: Option<usize>,
        #[arg(long, default_value_t = 1.0, requires = "master_grades")]
        skew: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Copy every agent of a weighted instance kappa times with perturbed weights.
    Augment {
        input: PathBuf,
        #[arg(long)]
        kappa: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

fn emit(output: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match output {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => Ok(io::stdout().write_all(text.as_bytes())?),
    }
}

fn cmd_solve(instance: &Path, flags: &SharedFlags, format: OutputFormat) -> anyhow::Result<i32> {
    let opts = flags.resolve()?;
    let loaded = pipeline::read_instance(instance, opts.threshold)?;
    let report = pipeline::run(&loaded, &opts)?;
    match format {
        OutputFormat::Text => print!("{}", pipeline::render_text(&report)),
        OutputFormat::Csv => {
            let row = bench::ExperimentRow {
                instance: instance.display().to_string(),
                preset: opts.preset.clone(),
                status: report.status.to_string(),
                objective: report.objective,
                wall_time: Some(report.wall_time),
                variables: Some(report.stats.variables),
                constraints: Some(report.stats.constraints),
                nonzeros: Some(report.stats.nonzeros),
                removals: Some(report.removals),
                warm_start: report.warm_start,
                message: String::new(),
            };
            let mut csv = csv::Writer::from_writer(io::stdout());
            csv.write_record(bench::HEADER)?;
            csv.write_record(row.record())?;
            csv.flush()?;
        }
    }
    Ok(exit_code(report.status))
}

fn cmd_preprocess(
    instance: &Path,
    threshold: f64,
    output: Option<&Path>,
    log: Option<&Path>,
) -> anyhow::Result<i32> {
    let loaded = pipeline::read_instance(instance, threshold)?;
    let (reduced, removed) = pipeline::reduce(&loaded.inst, true)?;
    let text = match &loaded.weights {
        Some(g) => {
            let kept = g
                .pairs()
                .iter()
                .copied()
                .filter(|&(i, j, _)| reduced.is_acceptable(i, j))
                .collect();
            format::write_grp(&stabmatch::GrpInstance::new(g.n1(), g.n2(), kept)?)
        }
        None => format::write_instance(&reduced),
    };
    emit(output, &text)?;
    match log {
        Some(p) => fs::write(p, removed.to_log())?,
        None => eprint!("{}", removed.to_log()),
    }
    Ok(0)
}

fn cmd_generate(kind: &GenerateKind) -> anyhow::Result<i32> {
    let (text, output) = match kind {
        GenerateKind::Smti {
            n1,
            n2,
            list_len,
            tie_density,
            tie_density_col,
            seed,
            output,
        } => {
            let inst = generate::gen_smti(&SmtiGenParams {
                n1: *n1,
                n2: *n2,
                list_length: *list_len,
                tie_density_row: *tie_density,
                tie_density_col: tie_density_col.unwrap_or(*tie_density),
                seed: *seed,
            })?;
            (format::write_instance(&inst), output)
        }
        GenerateKind::Hrt {
            n1,
            n2,
            posts,
            list_len,
            tie_density,
            master_grades,
            skew,
            seed,
            output,
        } => {
            let inst = generate::gen_hrt(&HrtGenParams {
                n_doctors: *n1,
                n_hospitals: *n2,
                n_posts: *posts,
                list_length: *list_len,
                tie_density_hospitals: *tie_density,
                master_list: master_grades.map(|grades| MasterList {
                    grades,
                    skew: *skew,
                }),
                seed: *seed,
            })?;
            (format::write_instance(&inst), output)
        }
        GenerateKind::Augment {
            input,
            kappa,
            seed,
            output,
        } => {
            let text = fs::read_to_string(input)
                .with_context(|| format!("reading {}", input.display()))?;
            let ParsedInstance::Grp(g) = format::parse_instance(&text)? else {
                bail!("augment needs a weighted (GRP) instance");
            };
            (
                format::write_grp(&generate::augment_grp(&g, *kappa, *seed)?),
                output,
            )
        }
    };
    emit(output.as_deref(), &text)?;
    Ok(0)
}

fn cmd_verify(instance: &Path, matching: &Path, threshold: f64) -> anyhow::Result<i32> {
    let loaded = pipeline::read_instance(instance, threshold)?;
    let text =
        fs::read_to_string(matching).with_context(|| format!("reading {}", matching.display()))?;
    let m = format::parse_matching(&text)?;
    let validity = check_matching(&loaded.inst, &m);
    if !validity.is_valid() {
        println!("invalid matching: {validity:?}");
        return Ok(4);
    }
    let report = blocking_pairs(&loaded.inst, &m)?;
    if report.stable {
        println!("stable, size {}", m.len());
        if let Some(w) = &loaded.weights {
            let value =
                stabmatch::stability::matching_value(&m, stabmatch::Objective::Weight, Some(w))?;
            println!("weight {value}");
        }
        return Ok(0);
    }
    println!("unstable: {} blocking pairs", report.pairs.len());
    for (i, j) in report.pairs {
        println!("{} {}", i + 1, j + 1);
    }
    Ok(4)
}

fn cmd_export_lp(
    instance: &Path,
    flags: &SharedFlags,
    output: Option<&Path>,
) -> anyhow::Result<i32> {
    let opts = flags.resolve()?;
    let loaded = pipeline::read_instance(instance, opts.threshold)?;
    let (inst, _) = pipeline::reduce(&loaded.inst, opts.preprocess)?;
    let (model, _) = pipeline::build(&inst, loaded.weights.as_ref(), &opts)?;
    emit(output, &export_lp(&model))?;
    Ok(0)
}

fn cmd_bench(
    manifest: &Path,
    flags: &SharedFlags,
    workers: usize,
    format: OutputFormat,
    output: Option<&Path>,
) -> anyhow::Result<i32> {
    let text =
        fs::read_to_string(manifest).with_context(|| format!("reading {}", manifest.display()))?;
    let base = manifest.parent().unwrap_or(Path::new("."));
    let rows = bench::parse_manifest(&text, base)?;
    let results = bench::run_bench(&rows, flags, workers)?;
    let out = match format {
        OutputFormat::Csv => {
            let mut buf = Vec::new();
            bench::write_csv(&mut buf, &results)?;
            String::from_utf8(buf)?
        }
        OutputFormat::Text => bench::render_text(&results),
    };
    emit(output, &out)?;
    Ok(0)
}

fn cmd_lp_solve(lp: &Path, solution: &Path, seconds: f64) -> anyhow::Result<i32> {
    let text = fs::read_to_string(lp).with_context(|| format!("reading {}", lp.display()))?;
    let model = read_lp(&text)?;
    let limit = Duration::try_from_secs_f64(seconds).context("bad time limit")?;
    let result = solve::solve(&model, &Backend::Builtin, limit)?;
    let values = result.assignment.iter().map(|(n, &v)| (n.as_str(), v));
    let text = match result.status {
        SolveStatus::Infeasible => write_solution(Some(result.status), []),
        status => write_solution(Some(status), values),
    };
    fs::write(solution, text)?;
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Solve {
            instance,
            flags,
            format,
        } => cmd_solve(instance, flags, *format),
        Command::Preprocess {
            instance,
            threshold,
            output,
            log,
        } => cmd_preprocess(instance, *threshold, output.as_deref(), log.as_deref()),
        Command::Generate { kind } => cmd_generate(kind),
        Command::Verify {
            instance,
            matching,
            threshold,
        } => cmd_verify(instance, matching, *threshold),
        Command::ExportLp {
            instance,
            flags,
            output,
        } => cmd_export_lp(instance, flags, output.as_deref()),
        Command::Bench {
            manifest,
            flags,
            workers,
            format,
            output,
        } => cmd_bench(manifest, flags, *workers, *format, output.as_deref()),
        Command::LpSolve {
            lp,
            solution,
            seconds,
        } => cmd_lp_solve(lp, solution, *seconds),
    };
    match outcome {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
