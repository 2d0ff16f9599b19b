use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use dyngesn::dissemination::{self, EdgeModel, TaskOptions, TopologySpec};
use dyngesn::experiment::{self, ExperimentConfig, NormRule, WeightSharing};
use dyngesn::readout::fit_classifier;
use dyngesn::stability::{esp_bound, esp_check};
use dyngesn::temporal_graph::{load_dataset_dir, write_dataset};
use dyngesn::{Dataset, Reservoir, BUILD_ID};

#[derive(Parser, Debug)]
#[command(
    name = "dyngesn",
    version,
    about = "Echo state networks for dynamic temporal graphs"
)]
struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a dissemination classification dataset.
    Simulate(SimulateArgs),
    /// Check recurrent norms against the echo state bound.
    EspCheck(EspCheckArgs),
    /// Write graph embeddings as CSV.
    Embed(EmbedArgs),
    /// Bootstrap accuracy of one reservoir layout.
    Eval(EvalArgs),
    /// Bootstrap accuracy over a grid of layouts.
    Grid(GridArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Task {
    Ct1,
    Ct2,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long, value_enum)]
    task: Task,
    /// Contagion probability of the SI class (ct1).
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    #[arg(long, default_value_t = 0.2)]
    p_low: f64,
    #[arg(long, default_value_t = 0.8)]
    p_high: f64,
    /// Total number of graphs; each topology yields one graph per class.
    #[arg(long, default_value_t = 40)]
    graphs: usize,
    #[arg(long, default_value_t = 30)]
    vertices: usize,
    #[arg(long, default_value_t = 20)]
    horizon: usize,
    /// Per-step edge probability of the random temporal topologies.
    #[arg(long, default_value_t = 0.1)]
    edge_prob: f64,
    /// Replay the topologies of an existing dataset instead of drawing random ones.
    #[arg(long)]
    replay: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    initial_infected: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Clone)]
struct ReservoirArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 0.1)]
    leakage: f64,
    /// Recurrent norm multiplier applied to alpha_mean.
    #[arg(long, default_value_t = 0.9)]
    norm_mult: f64,
    /// Use ||W|| = norm_mult * alpha_mean instead of norm_mult / alpha_mean.
    #[arg(long)]
    literal_norm: bool,
    #[arg(long, default_value_t = 1.0)]
    input_scale: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug, Clone)]
struct ProtocolArgs {
    #[arg(long, default_value_t = 200)]
    bootstraps: usize,
    #[arg(long, default_value_t = 0.1)]
    test_frac: f64,
    #[arg(long, default_value_t = 1e-3)]
    lambda: f64,
    /// Reuse one reservoir for all bootstraps instead of redrawing per bootstrap.
    #[arg(long)]
    shared_weights: bool,
}

#[derive(Args, Debug)]
struct EspCheckArgs {
    #[command(flatten)]
    reservoir: ReservoirArgs,
    #[arg(long, default_value_t = 16)]
    hidden: usize,
    #[arg(long, default_value_t = 4)]
    layers: usize,
    /// Also write the `layer,norm,bound,satisfied` records to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EmbedArgs {
    #[command(flatten)]
    reservoir: ReservoirArgs,
    #[arg(long, default_value_t = 16)]
    hidden: usize,
    #[arg(long, default_value_t = 4)]
    layers: usize,
    /// Embedding CSV path.
    #[arg(long)]
    out: PathBuf,
    /// Also write the reservoir weights as a binary snapshot.
    #[arg(long)]
    weights_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[command(flatten)]
    reservoir: ReservoirArgs,
    #[command(flatten)]
    protocol: ProtocolArgs,
    #[arg(long, default_value_t = 16)]
    hidden: usize,
    #[arg(long, default_value_t = 4)]
    layers: usize,
    /// Directory for bootstraps.csv and aggregate.csv.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the readout fitted on the whole dataset with bootstrap 0's reservoir.
    #[arg(long)]
    readout_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GridArgs {
    #[command(flatten)]
    reservoir: ReservoirArgs,
    #[command(flatten)]
    protocol: ProtocolArgs,
    #[arg(long, value_delimiter = ',', default_values_t = vec![1, 2, 4, 8, 16])]
    hidden: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = vec![1, 2, 3, 4, 5, 6])]
    layers: Vec<usize>,
    #[arg(long)]
    out: PathBuf,
}

fn experiment_config(r: &ReservoirArgs, p: Option<&ProtocolArgs>) -> ExperimentConfig {
    let mut cfg = ExperimentConfig {
        leakage: r.leakage,
        norm_multiplier: r.norm_mult,
        norm_rule: if r.literal_norm {
            NormRule::Literal
        } else {
            NormRule::Reciprocal
        },
        input_scale: r.input_scale,
        master_seed: r.seed,
        ..Default::default()
    };
    if let Some(p) = p {
        cfg.bootstraps = p.bootstraps;
        cfg.test_fraction = p.test_frac;
        cfg.ridge_lambda = p.lambda;
        cfg.weight_sharing = if p.shared_weights {
            WeightSharing::PerDataset
        } else {
            WeightSharing::PerBootstrap
        };
    }
    cfg
}

fn load(dir: &Path) -> Result<Dataset> {
    let d =
        load_dataset_dir(dir).with_context(|| format!("loading dataset from {}", dir.display()))?;
    if d.is_empty() {
        bail!("dataset in {} has no graphs", dir.display());
    }
    Ok(d)
}

/// Resolved configuration, printed to stderr before every run.
fn describe(d: &Dataset, cfg: &ExperimentConfig, layouts: &str) -> String {
    let mut s = String::new();
    let target = cfg.target_norm(d);
    let bound = esp_bound(d.alpha_mean());
    let _ = writeln!(s, "{BUILD_ID}");
    let _ = writeln!(
        s,
        "dataset: {} graphs (class counts {:?}), alpha_mean = {:.6}",
        d.len(),
        d.class_counts(),
        d.alpha_mean()
    );
    let _ = writeln!(s, "layout: {layouts}");
    let _ = writeln!(
        s,
        "leakage = {}, input scale = {}, norm rule = {:?} x {}",
        cfg.leakage, cfg.input_scale, cfg.norm_rule, cfg.norm_multiplier
    );
    let _ = writeln!(
        s,
        "recurrent norm ||W_hat|| = {target:.6}, ESP bound 1/alpha_mean = {bound:.6} ({})",
        if target < bound {
            "satisfied"
        } else {
            "NOT satisfied"
        }
    );
    let _ = writeln!(
        s,
        "bootstraps = {}, test fraction = {}, lambda = {}, weights = {:?}, seed = {}",
        cfg.bootstraps, cfg.test_fraction, cfg.ridge_lambda, cfg.weight_sharing, cfg.master_seed
    );
    s
}

fn simulate(a: &SimulateArgs) -> Result<()> {
    if a.graphs == 0 || !a.graphs.is_multiple_of(2) {
        bail!("--graphs must be a positive even number (one graph per class per topology)");
    }
    let count = a.graphs / 2;
    let topologies = match &a.replay {
        Some(dir) => {
            let d = load(dir)?;
            (0..count)
                .map(|i| d.graphs()[i % d.len()].graph.clone())
                .collect()
        }
        None => dissemination::generate_topologies(
            &TopologySpec {
                num_vertices: a.vertices,
                horizon: a.horizon,
                edge_model: EdgeModel::RandomTemporal {
                    edge_probability: a.edge_prob,
                },
            },
            count,
            a.seed,
        )?,
    };
    let opts = TaskOptions {
        initial_infected: a.initial_infected,
        ..TaskOptions::new(a.seed)
    };
    eprintln!("{BUILD_ID}");
    eprintln!(
        "task {:?}: {} topologies, {} vertices, horizon {}, edge prob {}, seed {}",
        a.task, count, a.vertices, a.horizon, a.edge_prob, a.seed
    );
    let dataset = match a.task {
        Task::Ct1 => {
            let (d, cal) = dissemination::generate_ct1(&topologies, a.p, &opts)?;
            eprintln!(
                "ct1: SI p = {}, random switch rate = {:.6} (final infected fraction {:.4} vs {:.4})",
                a.p, cal.rate, cal.si_fraction, cal.switch_fraction
            );
            d
        }
        Task::Ct2 => {
            eprintln!("ct2: SI p_low = {}, p_high = {}", a.p_low, a.p_high);
            dissemination::generate_ct2(&topologies, a.p_low, a.p_high, &opts)?
        }
    };
    let paths = write_dataset(&dataset, &a.out, Some(BUILD_ID))?;
    for p in paths {
        println!("{}", p.display());
    }
    Ok(())
}

fn esp(a: &EspCheckArgs) -> Result<()> {
    let d = load(&a.reservoir.data)?;
    let cfg = experiment_config(&a.reservoir, None);
    eprint!(
        "{}",
        describe(&d, &cfg, &format!("H = {}, L = {}", a.hidden, a.layers))
    );
    let input_dim = d.label_dim().unwrap_or(1);
    let reservoir = Reservoir::new(
        cfg.reservoir_config(input_dim, a.hidden, a.layers, cfg.weight_seed(0)),
        cfg.target_norm(&d),
    )?;
    let report = esp_check(reservoir.weights(), reservoir.config(), &d)?;
    print!("{}", report.render_text());
    println!();
    print!("{}", report.render_records());
    if let Some(out) = &a.out {
        fs::write(out, format!("# {BUILD_ID}\n{}", report.render_records()))
            .with_context(|| format!("writing {}", out.display()))?;
    }
    Ok(())
}

fn embed(a: &EmbedArgs) -> Result<()> {
    let d = load(&a.reservoir.data)?;
    let cfg = experiment_config(&a.reservoir, None);
    eprint!(
        "{}",
        describe(&d, &cfg, &format!("H = {}, L = {}", a.hidden, a.layers))
    );
    let input_dim = d.label_dim().unwrap_or(1);
    let reservoir = Reservoir::new(
        cfg.reservoir_config(input_dim, a.hidden, a.layers, cfg.weight_seed(0)),
        cfg.target_norm(&d),
    )?;
    let m = experiment::embed_dataset(&reservoir, &d)?;
    let mut s = format!("# {BUILD_ID}\ngraph_id");
    for j in 0..m.ncols() {
        let _ = write!(s, ",dim_{j}");
    }
    s.push('\n');
    for (i, lg) in d.graphs().iter().enumerate() {
        let _ = write!(s, "{}", lg.id);
        for x in m.row(i).iter() {
            let _ = write!(s, ",{x}");
        }
        s.push('\n');
    }
    fs::write(&a.out, s).with_context(|| format!("writing {}", a.out.display()))?;
    if let Some(path) = &a.weights_out {
        let file =
            fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
        reservoir.write_snapshot(std::io::BufWriter::new(file))?;
    }
    println!("{}", a.out.display());
    Ok(())
}

fn eval(a: &EvalArgs) -> Result<()> {
    let d = load(&a.reservoir.data)?;
    let cfg = experiment_config(&a.reservoir, Some(&a.protocol));
    cfg.validate()?;
    eprint!(
        "{}",
        describe(&d, &cfg, &format!("H = {}, L = {}", a.hidden, a.layers))
    );
    let cell = experiment::run_bootstrap(&d, &cfg, a.hidden, a.layers)?;
    println!(
        "H = {}, L = {}: accuracy {:.2} ± {:.2} over {} bootstraps",
        cell.hidden,
        cell.layers,
        100.0 * cell.mean,
        100.0 * cell.std,
        cell.accuracies.len()
    );
    if let Some(out) = &a.out {
        let table = experiment::ResultTable { cells: vec![cell] };
        experiment::emit_report(&table, out, Some(BUILD_ID))?;
    }
    if let Some(path) = &a.readout_out {
        let input_dim = d.label_dim().unwrap_or(1);
        let reservoir = Reservoir::new(
            cfg.reservoir_config(input_dim, a.hidden, a.layers, cfg.weight_seed(0)),
            cfg.target_norm(&d),
        )?;
        let x = experiment::embed_dataset(&reservoir, &d)?;
        let readout = fit_classifier(&x, &d.classes(), cfg.ridge_lambda)?;
        fs::write(path, format!("# {BUILD_ID}\n{}", readout.to_csv()))
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn grid(a: &GridArgs) -> Result<()> {
    let d = load(&a.reservoir.data)?;
    let cfg = ExperimentConfig {
        grid_hidden: a.hidden.clone(),
        grid_layers: a.layers.clone(),
        ..experiment_config(&a.reservoir, Some(&a.protocol))
    };
    cfg.validate()?;
    eprint!(
        "{}",
        describe(
            &d,
            &cfg,
            &format!("H in {:?}, L in {:?}", a.hidden, a.layers)
        )
    );
    let table = experiment::run_grid(&d, &cfg)?;
    for c in &table.cells {
        println!(
            "H = {:>3}, L = {}: {:.2} ± {:.2}",
            c.hidden,
            c.layers,
            100.0 * c.mean,
            100.0 * c.std
        );
    }
    let (per, agg) = experiment::emit_report(&table, &a.out, Some(BUILD_ID))?;
    println!("{}\n{}", per.display(), agg.display());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            bail!("--jobs must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .context("configuring worker threads")?;
    }
    match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::EspCheck(a) => esp(a),
        Command::Embed(a) => embed(a),
        Command::Eval(a) => eval(a),
        Command::Grid(a) => grid(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
