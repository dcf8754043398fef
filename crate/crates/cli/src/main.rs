use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use gcr_core::gcr::{oracle_stats, GcrSpec};
use gcr_core::group::{conjugacy_classes, verify_group_axioms, GroupSpec, DEFAULT_ORDER_CAP};
use gcr_core::harness::{self, Cell, SweepSpec};
use gcr_core::interp::{
    analyze_checkpoint, analyze_trajectory, dump_embeddings, write_trajectory_csvs, AnalysisOptions,
};
use gcr_core::nn::{checkpoint_epochs, load_checkpoint, train, TrainConfig};
use gcr_core::rep::{CatalogMode, CatalogOptions, DiscoveryOptions, IrrepCatalog};
use serde_json::json;

#[derive(Parser)]
#[command(name = "gcr", version, about = "Group composition via representations")]
struct Cli {
    /// Seed override for commands that draw random numbers.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file or directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for analyses and sweeps.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Machine-readable output on stdout.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a group and print its summary, or write its table with --out.
    GenGroup {
        /// Group name such as C113, D59, S5 or A5.
        group: GroupSpec,
        /// Largest order allowed.
        #[arg(long, default_value_t = DEFAULT_ORDER_CAP)]
        cap: usize,
    },
    /// Build the irrep catalog of a group.
    Irreps {
        group: GroupSpec,
        /// Use numerical discovery even where closed forms exist.
        #[arg(long)]
        discover: bool,
    },
    /// Check the character-based composition oracle.
    Oracle {
        group: GroupSpec,
        /// Comma-separated irrep names; several names are also combined.
        #[arg(long, value_delimiter = ',', required = true)]
        reps: Vec<String>,
        /// Evaluate all n² pairs instead of a sample.
        #[arg(long)]
        exhaustive: bool,
        #[arg(long, default_value_t = 10_000)]
        sample: usize,
    },
    /// Train the MLP on one group.
    Train {
        #[arg(long)]
        config: PathBuf,
    },
    /// Analyse a checkpoint file, or every checkpoint in a run directory.
    Analyze {
        #[arg(long)]
        ckpt: PathBuf,
        /// Group of the model; defaults to the one in the checkpoint.
        #[arg(long)]
        group: Option<GroupSpec>,
        #[arg(long)]
        discover_irreps: bool,
        /// Also write w_a, w_b and w_unembed of the analysed checkpoint.
        #[arg(long)]
        dump_embeddings: Option<PathBuf>,
        /// JSON file with analysis option overrides.
        #[arg(long)]
        options: Option<PathBuf>,
    },
    /// Train and analyse every (group, seed) cell of a sweep spec.
    Sweep {
        #[arg(long)]
        spec: PathBuf,
    },
    /// Rebuild summary.csv and summary.json from the cells on disk.
    Report {
        /// Sweep output directory.
        #[arg(long)]
        dir: PathBuf,
        /// Sweep spec fixing the cell order; without it, cell directories
        /// are scanned in name order.
        #[arg(long)]
        spec: Option<PathBuf>,
    },
}

/// Failures that map to exit code 2.
#[derive(Debug)]
struct CellFailures(usize);

impl std::fmt::Display for CellFailures {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} sweep cell(s) failed; summary written", self.0)
    }
}

impl std::error::Error for CellFailures {}

fn print_json(value: &impl serde::Serialize) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn catalog_options(discover: bool, seed: Option<u64>) -> CatalogOptions {
    CatalogOptions {
        mode: if discover {
            CatalogMode::Discover
        } else {
            CatalogMode::Auto
        },
        discovery: DiscoveryOptions {
            seed: seed.unwrap_or(0),
            ..DiscoveryOptions::default()
        },
    }
}

fn gen_group(cli: &Cli, spec: GroupSpec, cap: usize) -> Result<()> {
    let g = spec.build_with_cap(cap)?;
    let axioms = verify_group_axioms(&g);
    let classes = conjugacy_classes(&g);
    if let Some(out) = &cli.out {
        let doc = serde_json::to_string(&g.to_document())?;
        fs::write(out, doc + "\n").with_context(|| format!("writing {}", out.display()))?;
    }
    if cli.json {
        print_json(&json!({
            "group": g.name(),
            "order": g.order(),
            "abelian": g.is_abelian(),
            "class_sizes": classes.sizes(),
            "axioms": axioms,
        }))?;
    } else {
        println!(
            "{}: order {}, {} conjugacy classes",
            g.name(),
            g.order(),
            classes.len()
        );
        println!("abelian: {}", g.is_abelian());
        println!("axioms pass: {}", axioms.all_pass());
    }
    if !axioms.all_pass() {
        bail!("group axioms failed for {}", g.name());
    }
    Ok(())
}

fn irreps(cli: &Cli, spec: GroupSpec, discover: bool) -> Result<()> {
    let g = spec.build()?;
    let cat = IrrepCatalog::build(&g, &catalog_options(discover, cli.seed))?;
    let checks = cat.check_all(&g);
    if let Some(out) = &cli.out {
        cat.save(out)?;
    }
    if cli.json {
        let rows: Vec<_> = cat
            .irreps()
            .iter()
            .zip(&checks)
            .map(|(i, c)| {
                json!({
                    "name": i.name(),
                    "dim": i.dim(),
                    "real_type": i.real_type(),
                    "faithful": i.faithful(),
                    "rank": i.rep_space_rank(),
                    "check": c,
                })
            })
            .collect();
        print_json(&json!({
            "group": g.name(),
            "order": g.order(),
            "complete": cat.complete(),
            "rank_total": cat.rank_total(),
            "irreps": rows,
        }))?;
    } else {
        println!("{} (order {}), {} irreps", g.name(), g.order(), cat.len());
        println!(
            "{:<16} {:>4} {:>5} {:>9}  type",
            "name", "dim", "rank", "faithful"
        );
        for i in cat.irreps() {
            println!(
                "{:<16} {:>4} {:>5} {:>9}  {:?}",
                i.name(),
                i.dim(),
                i.rep_space_rank(),
                i.faithful(),
                i.real_type()
            );
        }
        println!("rank total {} of {}", cat.rank_total(), g.order());
    }
    if !cat.complete() {
        bail!("catalog for {} is incomplete", g.name());
    }
    Ok(())
}

fn oracle(cli: &Cli, spec: GroupSpec, reps: &[String], exhaustive: bool, sample: usize) -> Result<()> {
    let g = spec.build()?;
    let cat = IrrepCatalog::build(&g, &catalog_options(false, cli.seed))?;
    let mut stats = Vec::new();
    for name in reps {
        let irrep = cat.get(name)?;
        stats.push(oracle_stats(
            &GcrSpec::single(&g, irrep)?,
            name,
            exhaustive,
            sample,
        ));
    }
    if reps.len() > 1 {
        let terms = reps
            .iter()
            .map(|r| Ok((cat.get(r)?, 1.0)))
            .collect::<gcr_core::Result<Vec<_>>>()?;
        stats.push(oracle_stats(
            &GcrSpec::new(&g, terms)?,
            &reps.join("+"),
            exhaustive,
            sample,
        ));
    }
    if cli.json {
        print_json(&stats)?;
    } else {
        println!(
            "{:<24} {:>4} {:>9} {:>8} {:>9} {:>7}",
            "irrep", "dim", "faithful", "pairs", "accuracy", "unique"
        );
        for s in &stats {
            println!(
                "{:<24} {:>4} {:>9} {:>8} {:>9.6} {:>7.4}",
                s.irrep, s.dim, s.faithful, s.pairs, s.accuracy, s.unique_fraction
            );
        }
    }
    Ok(())
}

fn train_cmd(cli: &Cli, config: &Path) -> Result<()> {
    let mut cfg = TrainConfig::load(config).with_context(|| format!("reading {}", config.display()))?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    let out = cli.out.as_ref().context("--out is required for train")?;
    let outcome = train(&cfg, Some(out))?;
    let last = outcome.metrics.last().expect("at least one record");
    println!("{}", serde_json::to_string(last)?);
    Ok(())
}

fn analyze(
    cli: &Cli,
    ckpt: &Path,
    group: Option<GroupSpec>,
    discover: bool,
    dump: Option<&Path>,
    options: Option<&Path>,
) -> Result<()> {
    let out = cli.out.as_ref().context("--out is required for analyze")?;
    let opts: AnalysisOptions = match options {
        Some(p) => {
            serde_json::from_str(&fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?)?
        }
        None => AnalysisOptions::default(),
    };
    let ckpts = if ckpt.is_dir() {
        checkpoint_epochs(ckpt)?
    } else {
        vec![(0, ckpt.to_path_buf())]
    };
    let (_, last_path) = ckpts.last().context("no checkpoints found")?;
    let last = load_checkpoint(last_path)?;
    let spec = last.config.group_spec;
    if let Some(g) = group {
        if g != spec {
            bail!("--group {g} does not match the checkpoint's group {spec}");
        }
    }
    let g = spec.build()?;
    let cat = IrrepCatalog::build(&g, &catalog_options(discover, cli.seed))?;
    let report = if ckpt.is_dir() {
        let (report, points) = analyze_trajectory(&ckpts, &g, &cat, &opts)?;
        let names: Vec<String> = cat.nontrivial().map(|i| i.name().to_string()).collect();
        let csv_dir = out
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .unwrap_or(Path::new("."));
        write_trajectory_csvs(csv_dir, &points, &names)?;
        report
    } else {
        analyze_checkpoint(&last, &g, &cat, &opts)?
    };
    report.save(out)?;
    if let Some(path) = dump {
        dump_embeddings(
            path,
            &last.params,
            json!({"group": g.name(), "epoch": last.epoch}),
        )?;
    }
    if cli.json {
        print_json(&report)?;
    } else {
        println!("{} epoch {}", g.name(), last.epoch);
        println!("key irreps: {}", report.key_reps.join(", "));
        for (k, v) in &report.logit_similarity {
            println!("  similarity {k:<16} {v:+.4}");
        }
        println!("logit fve {:.4}", report.logit_fve);
        println!("clusters {:?}", report.cluster_sizes);
        println!(
            "test loss {:.3e}, restricted {:.3e}, excluded {:.3e}",
            report.test_loss, report.restricted_loss, report.excluded_loss
        );
    }
    Ok(())
}

fn sweep(cli: &Cli, spec_path: &Path) -> Result<()> {
    let mut spec = SweepSpec::load(spec_path)?;
    if let Some(t) = cli.threads {
        spec.threads = t;
    }
    let out = cli
        .out
        .clone()
        .or_else(|| spec.out_dir.clone())
        .context("sweep output directory missing: pass --out or set out_dir")?;
    let summary = harness::run_sweep(&spec, &out)?;
    if cli.json {
        print_json(&summary)?;
    } else {
        for row in &summary.aggregates {
            println!(
                "{:<6} seeds {:<10} test acc {:.4} ± {:.4}  logit fve {:.3}  keys {}",
                row.group, row.seeds, row.test_acc_mean, row.test_acc_std, row.logit_fve_mean, row.key_reps
            );
        }
    }
    if !summary.failures.is_empty() {
        return Err(CellFailures(summary.failures.len()).into());
    }
    Ok(())
}

fn report(cli: &Cli, dir: &Path, spec: Option<&Path>) -> Result<()> {
    let (cells, opts) = match spec {
        Some(p) => {
            let spec = SweepSpec::load(p)?;
            (spec.cells()?, spec.analysis)
        }
        None => {
            let mut cells = Vec::new();
            let mut names: Vec<String> = fs::read_dir(dir)
                .with_context(|| format!("reading {}", dir.display()))?
                .filter_map(|e| e.ok())
                .filter(|e| e.path().join(harness::REPORT_FILE).is_file())
                .filter_map(|e| e.file_name().into_string().ok())
                .collect();
            names.sort();
            for name in names {
                let Some((group, seed)) = name.rsplit_once("_seed") else {
                    continue;
                };
                let (Ok(group), Ok(seed)) = (group.parse::<GroupSpec>(), seed.parse::<u64>()) else {
                    continue;
                };
                cells.push(Cell {
                    group,
                    seed,
                    config: TrainConfig::for_group(group, seed),
                });
            }
            (cells, AnalysisOptions::default())
        }
    };
    let summary = harness::summarize(dir, &cells, &opts, Vec::new())?;
    if cli.json {
        print_json(&summary)?;
    } else {
        println!(
            "{} cells, {} groups",
            summary.cells.len(),
            summary.aggregates.len()
        );
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    if let Some(t) = cli.threads {
        if t == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global()?;
    }
    match &cli.command {
        Command::GenGroup { group, cap } => gen_group(cli, *group, *cap),
        Command::Irreps { group, discover } => irreps(cli, *group, *discover),
        Command::Oracle {
            group,
            reps,
            exhaustive,
            sample,
        } => oracle(cli, *group, reps, *exhaustive, *sample),
        Command::Train { config } => train_cmd(cli, config),
        Command::Analyze {
            ckpt,
            group,
            discover_irreps,
            dump_embeddings,
            options,
        } => analyze(
            cli,
            ckpt,
            *group,
            *discover_irreps,
            dump_embeddings.as_deref(),
            options.as_deref(),
        ),
        Command::Sweep { spec } => sweep(cli, spec),
        Command::Report { dir, spec } => report(cli, dir, spec.as_deref()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<CellFailures>() => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
