use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use grasstree::archive::{import_csv, load_archive, save_archive, write_matrix, MANIFEST_FILE};
use grasstree::experiment::{
    distance_pairs, correlation_of, run_compare, select_train, write_scatter, ExperimentConfig,
    InterpReference, Method, TrainSelection,
};
use grasstree::generators::{parse_values, sweep, Generator, HeatConfig, SolitonConfig};
use grasstree::pod::DEFAULT_OVERSAMPLE;
use grasstree::snapshot::{SnapshotEntry, SnapshotSet};
use grasstree::tree::{self, TreeConfig};
use grasstree::{Error, ParamPoint, Result};

/// Learn parameter-to-POD-basis maps with regression trees on the
/// Grassmann manifold, and benchmark them against global POD and
/// tangent-space interpolation.
#[derive(Parser)]
#[command(name = "grasstree", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a snapshot archive from a built-in solver.
    #[command(subcommand)]
    Generate(Generate),
    /// Add a CSV snapshot matrix (one row per spatial point) to an archive.
    ImportCsv {
        #[arg(long)]
        from_csv: PathBuf,
        #[arg(long)]
        id: String,
        /// Parameter coordinates, comma-separated.
        #[arg(long, allow_hyphen_values = true)]
        lambda: String,
        #[arg(long)]
        archive: PathBuf,
    },
    /// Compare tree, global POD and interpolation on a train/test split.
    Compare(CompareArgs),
    /// Correlation between parameter distances and subspace distances.
    Correlate {
        #[arg(long)]
        archive: PathBuf,
        #[arg(long)]
        rank: usize,
        /// Scatter CSV destination.
        #[arg(long, default_value = "scatter.csv")]
        out: PathBuf,
    },
    /// Fit or query a persisted tree.
    #[command(subcommand)]
    Tree(TreeCommand),
    /// Summarize an archive or a fitted tree directory.
    Info {
        path: PathBuf,
    },
}

#[derive(Subcommand)]
enum Generate {
    /// Heat equation, one entry per diffusivity γ.
    Heat {
        #[arg(long, default_value = grasstree::generators::HEAT_GAMMAS)]
        gammas: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = HeatConfig::default().nx)]
        nx: usize,
        #[arg(long, default_value_t = HeatConfig::default().nt)]
        nt: usize,
    },
    /// Two-soliton nonlinear Schrödinger equation, one entry per amplitude α.
    Soliton {
        #[arg(long, default_value = grasstree::generators::SOLITON_ALPHAS)]
        alphas: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = SolitonConfig::default().nx)]
        nx: usize,
        #[arg(long, default_value_t = SolitonConfig::default().nt)]
        nt: usize,
    },
}

#[derive(Args)]
struct TrainArgs {
    /// Training ids: `@file` (whitespace or comma separated) or an inline list.
    #[arg(long, conflicts_with = "train_frac")]
    train_ids: Option<String>,
    /// Random training fraction, used with `--seed`.
    #[arg(long)]
    train_frac: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl TrainArgs {
    fn selection(&self) -> Result<TrainSelection> {
        match (&self.train_ids, self.train_frac) {
            (Some(spec), _) => Ok(TrainSelection::Ids(read_ids(spec)?)),
            (None, Some(frac)) => Ok(TrainSelection::Fraction {
                frac,
                seed: self.seed,
            }),
            (None, None) => Err(Error::InvalidConfig(
                "one of --train-ids or --train-frac is required".into(),
            )),
        }
    }
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    archive: PathBuf,
    #[command(flatten)]
    train: TrainArgs,
    #[arg(long)]
    rank: usize,
    /// Minimum number of training entries per leaf (no default).
    #[arg(long)]
    min_leaf: usize,
    /// Use randomized SVD for wide tree nodes.
    #[arg(long)]
    rsvd: bool,
    #[arg(long, default_value_t = DEFAULT_OVERSAMPLE)]
    oversample: usize,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    fit: FitArgs,
    #[arg(long, default_value = "tree,global,interp")]
    methods: String,
    /// Interpolation reference: a training id or `all`.
    #[arg(long, default_value = "all")]
    interp_ref: String,
    /// Also compute the distance-correlation diagnostic.
    #[arg(long)]
    correlation: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum TreeCommand {
    /// Fit a tree and write it to a directory.
    Fit {
        #[command(flatten)]
        fit: FitArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Route a parameter point through a fitted tree.
    Predict {
        #[arg(long)]
        tree: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        lambda: String,
        /// Optional SNPX destination for the predicted basis.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn read_ids(spec: &str) -> Result<Vec<String>> {
    let text = match spec.strip_prefix('@') {
        Some(path) => {
            let path = Path::new(path);
            fs::read_to_string(path).map_err(|e| Error::Io {
                path: path.to_path_buf(),
                source: e,
            })?
        }
        None => spec.to_string(),
    };
    let ids: Vec<String> = text
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect();
    if ids.is_empty() {
        return Err(Error::InvalidConfig("training id list is empty".into()));
    }
    Ok(ids)
}

fn parse_point(s: &str) -> Result<ParamPoint> {
    let coords = s
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidConfig(format!("bad parameter coordinate {t:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    ParamPoint::new(coords)
}

fn tree_config(args: &FitArgs) -> TreeConfig {
    let cfg = TreeConfig::new(args.rank, args.min_leaf);
    if args.rsvd {
        cfg.with_rsvd(args.oversample, args.train.seed)
    } else {
        cfg
    }
}

fn generate(cmd: Generate) -> Result<()> {
    let (generator, values, out) = match cmd {
        Generate::Heat { gammas, out, nx, nt } => (
            Generator::Heat(HeatConfig {
                nx,
                nt,
                ..HeatConfig::default()
            }),
            parse_values(&gammas)?,
            out,
        ),
        Generate::Soliton { alphas, out, nx, nt } => (
            Generator::Soliton(SolitonConfig {
                nx,
                nt,
                ..SolitonConfig::default()
            }),
            parse_values(&alphas)?,
            out,
        ),
    };
    let set = sweep(&generator, &values)?;
    save_archive(&set, &out)?;
    println!(
        "wrote {} entries ({} x {} snapshots) to {}",
        set.len(),
        set.n(),
        set.entries()[0].snapshots.cols(),
        out.display()
    );
    Ok(())
}

fn import(from_csv: &Path, id: String, lambda: &str, archive: &Path) -> Result<()> {
    let snapshots = import_csv(from_csv)?;
    let lambda = parse_point(lambda)?;
    let mut set = if archive.join(MANIFEST_FILE).is_file() {
        load_archive(archive)?
    } else {
        SnapshotSet::new(snapshots.rows(), lambda.dim())?
    };
    set.push(SnapshotEntry {
        id,
        lambda,
        snapshots,
    })?;
    save_archive(&set, archive)?;
    println!("archive {} now holds {} entries", archive.display(), set.len());
    Ok(())
}

fn compare(args: CompareArgs) -> Result<()> {
    let mut cfg = ExperimentConfig::new(
        &args.fit.archive,
        args.fit.train.selection()?,
        args.fit.rank,
        args.fit.min_leaf,
    );
    cfg.methods = Method::parse_list(&args.methods)?;
    cfg.interp_ref = args.interp_ref.parse::<InterpReference>()?;
    cfg.rsvd = args.fit.rsvd;
    cfg.oversample = args.fit.oversample;
    cfg.seed = args.fit.train.seed;
    cfg.correlation = args.correlation;
    cfg.out = Some(args.out.clone());
    let report = run_compare(&cfg)?;

    let s = &report.summary;
    println!("train {} / test {}", report.train_ids.len(), s.tests);
    if let Some(t) = &report.tree {
        println!("tree: {} leaves, depth {}", t.leaves, t.depth);
    }
    for (label, w) in [
        ("tree vs global", s.tree_vs_global),
        ("tree vs interp", s.tree_vs_interp),
        ("global vs interp", s.global_vs_interp),
    ] {
        if let Some(w) = w {
            println!("{label}: {} wins, {} losses, {} ties", w.first, w.second, w.ties);
        }
    }
    if report.methods.contains(&Method::Interp) {
        println!("interp: {} unstable, {} failed", s.interp_unstable, s.interp_failed);
    }
    if let Some(c) = report.correlation {
        println!("correlation: {c}");
    }
    println!("report written to {}", args.out.display());
    Ok(())
}

fn correlate(archive: &Path, rank: usize, out: &Path) -> Result<()> {
    let set = load_archive(archive)?;
    let pairs = distance_pairs(&set, rank)?;
    write_scatter(out, &pairs)?;
    println!("{}", correlation_of(&pairs)?);
    Ok(())
}

fn tree_fit(args: FitArgs, out: &Path) -> Result<()> {
    let set = load_archive(&args.archive)?;
    let ids = select_train(&set, &args.train.selection()?)?;
    let (train, _) = set.split_train_test(&ids)?;
    let fitted = tree::fit(&train, &tree_config(&args))?;
    tree::serialize(&fitted, out)?;
    println!(
        "fitted tree: {} leaves, depth {}, written to {}",
        fitted.num_leaves(),
        fitted.depth(),
        out.display()
    );
    Ok(())
}

fn tree_predict(dir: &Path, lambda: &str, out: Option<&Path>) -> Result<()> {
    let fitted = tree::deserialize(dir)?;
    let leaf = fitted.route(&parse_point(lambda)?)?;
    if let Some(out) = out {
        write_matrix(out, leaf.basis.phi())?;
    }
    let summary = serde_json::json!({
        "region": leaf.region,
        "members": leaf.members,
        "rank": leaf.basis.rank(),
        "n": leaf.basis.n(),
    });
    println!("{summary}");
    Ok(())
}

fn info(path: &Path) -> Result<()> {
    if path.join(tree::TREE_FILE).is_file() {
        let fitted = tree::deserialize(path)?;
        println!("tree: dim {}, rank {}, min_leaf {}", fitted.dim(), fitted.rank(), fitted.config().min_leaf);
        println!("leaves {}, depth {}", fitted.num_leaves(), fitted.depth());
        for (var, value) in fitted.splits() {
            println!("split: x{var} <= {value}");
        }
        return Ok(());
    }
    let set = load_archive(path)?;
    println!("archive: {} entries, n = {}, d = {}", set.len(), set.n(), set.d());
    for e in set.entries() {
        println!(
            "{}\t{:?}\t{} snapshots",
            e.id,
            e.lambda.coords(),
            e.snapshots.cols()
        );
    }
    Ok(())
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("ROM_NUM_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| Error::InvalidConfig(format!("ROM_NUM_THREADS must be a non-negative integer, got {raw:?}")))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    configure_threads()?;
    match cli.command {
        Command::Generate(g) => generate(g),
        Command::ImportCsv {
            from_csv,
            id,
            lambda,
            archive,
        } => import(&from_csv, id, &lambda, &archive),
        Command::Compare(args) => compare(args),
        Command::Correlate { archive, rank, out } => correlate(&archive, rank, &out),
        Command::Tree(TreeCommand::Fit { fit, out }) => tree_fit(fit, &out),
        Command::Tree(TreeCommand::Predict { tree, lambda, out }) => {
            tree_predict(&tree, &lambda, out.as_deref())
        }
        Command::Info { path } => info(&path),
    }
}

fn main() -> ExitCode {
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
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_io() { 2 } else { 1 })
        }
    }
}
