//! Bootstrap evaluation of reservoir layouts.
//!
//! Each bootstrap draws a stratified train/test split and fresh reservoir
//! weights from a seed derived from `(master_seed, bootstrap)`, embeds every
//! graph, fits the ridge readout on the training part and records test
//! accuracy. The grid repeats this for every `(H, L)` pair.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::par::map_indexed;
use crate::readout::fit_classifier;
use crate::reservoir::{Reservoir, ReservoirConfig};
use crate::seeds::{derive_seed, stream_rng};
use crate::temporal_graph::Dataset;

const TAG_BOOTSTRAP: u64 = 11;
const TAG_WEIGHTS: u64 = 12;

pub const BOOTSTRAPS_FILE: &str = "bootstraps.csv";
pub const AGGREGATE_FILE: &str = "aggregate.csv";

/// How the recurrent norm target follows from `α_mean`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormRule {
    /// `‖Ŵ‖ = multiplier / α_mean`, inside the stability bound when
    /// `multiplier < 1`.
    Reciprocal,
    /// `‖Ŵ‖ = multiplier · α_mean`.
    Literal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WeightSharing {
    /// New reservoir weights for every bootstrap.
    PerBootstrap,
    /// One set of weights, reused by all bootstraps.
    PerDataset,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub bootstraps: usize,
    pub test_fraction: f64,
    pub grid_hidden: Vec<usize>,
    pub grid_layers: Vec<usize>,
    pub leakage: f64,
    pub norm_multiplier: f64,
    pub norm_rule: NormRule,
    pub ridge_lambda: f64,
    pub input_scale: f64,
    pub master_seed: u64,
    pub weight_sharing: WeightSharing,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            bootstraps: 200,
            test_fraction: 0.1,
            grid_hidden: vec![1, 2, 4, 8, 16],
            grid_layers: (1..=6).collect(),
            leakage: 0.1,
            norm_multiplier: 0.9,
            norm_rule: NormRule::Reciprocal,
            ridge_lambda: 1e-3,
            input_scale: 1.0,
            master_seed: 0,
            weight_sharing: WeightSharing::PerBootstrap,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.bootstraps == 0 {
            return Err(Error::Config("at least one bootstrap is required".into()));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::Config(format!(
                "test fraction must lie in (0, 1), got {}",
                self.test_fraction
            )));
        }
        if !(self.norm_multiplier > 0.0 && self.norm_multiplier.is_finite()) {
            return Err(Error::Config(format!(
                "norm multiplier must be positive, got {}",
                self.norm_multiplier
            )));
        }
        if self.ridge_lambda.is_nan() || self.ridge_lambda < 0.0 {
            return Err(Error::Config(format!(
                "ridge lambda must be >= 0, got {}",
                self.ridge_lambda
            )));
        }
        Ok(())
    }

    /// Recurrent spectral norm every layer is rescaled to on dataset `d`.
    pub fn target_norm(&self, d: &Dataset) -> f64 {
        let alpha = d.rescaling_alpha();
        match self.norm_rule {
            NormRule::Reciprocal => self.norm_multiplier / alpha,
            NormRule::Literal => self.norm_multiplier * alpha,
        }
    }

    pub fn reservoir_config(
        &self,
        input_dim: usize,
        hidden: usize,
        layers: usize,
        seed: u64,
    ) -> ReservoirConfig {
        ReservoirConfig::new(hidden, layers, input_dim, seed)
            .with_leakage(self.leakage)
            .with_input_scale(self.input_scale)
    }

    /// Seed of the reservoir used by bootstrap `b`.
    pub fn weight_seed(&self, b: usize) -> u64 {
        match self.weight_sharing {
            WeightSharing::PerBootstrap => derive_seed(self.master_seed, &[TAG_WEIGHTS, b as u64]),
            WeightSharing::PerDataset => derive_seed(self.master_seed, &[TAG_WEIGHTS]),
        }
    }

    pub fn split_rng(&self, b: usize) -> ChaCha8Rng {
        stream_rng(derive_seed(self.master_seed, &[TAG_BOOTSTRAP, b as u64]), 0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Stratified split without replacement. Class `c` contributes
/// `round(n_c · test_fraction)` test samples, capped so at least one stays in
/// training; if that leaves the test set empty, one sample of the largest
/// class moves to it. Index lists are returned sorted.
pub fn stratified_split(classes: &[u8], test_fraction: f64, rng: &mut ChaCha8Rng) -> Split {
    let mut by_class: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, &c) in classes.iter().enumerate() {
        by_class[usize::from(c != 0)].push(i);
    }
    let mut take = [0usize; 2];
    for c in 0..2 {
        let n = by_class[c].len();
        take[c] = ((n as f64 * test_fraction).round() as usize).min(n.saturating_sub(1));
    }
    if take == [0, 0] {
        let c = if by_class[0].len() >= by_class[1].len() {
            0
        } else {
            1
        };
        if by_class[c].len() >= 2 {
            take[c] = 1;
        }
    }
    let mut split = Split {
        train: Vec::new(),
        test: Vec::new(),
    };
    for c in 0..2 {
        let idx = &mut by_class[c];
        idx.shuffle(rng);
        split.test.extend_from_slice(&idx[..take[c]]);
        split.train.extend_from_slice(&idx[take[c]..]);
    }
    split.train.sort_unstable();
    split.test.sort_unstable();
    split
}

/// `N × (H·L)` matrix of graph embeddings, rows in dataset order.
pub fn embed_dataset(reservoir: &Reservoir, d: &Dataset) -> Result<DMatrix<f64>> {
    let dim = reservoir.config().embedding_dim();
    let mut m = DMatrix::zeros(d.len(), dim);
    for (i, lg) in d.graphs().iter().enumerate() {
        let e = reservoir.embed(&lg.graph)?;
        for (j, &x) in e.as_slice().iter().enumerate() {
            m[(i, j)] = x;
        }
    }
    Ok(m)
}

fn select_rows(m: &DMatrix<f64>, rows: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), m.ncols(), |i, j| m[(rows[i], j)])
}

/// Accuracies of one `(H, L)` cell over all bootstraps.
#[derive(Clone, Debug, PartialEq)]
pub struct CellResult {
    pub hidden: usize,
    pub layers: usize,
    pub accuracies: Vec<f64>,
    pub mean: f64,
    /// Population standard deviation over bootstraps.
    pub std: f64,
}

impl CellResult {
    pub fn from_accuracies(hidden: usize, layers: usize, accuracies: Vec<f64>) -> Self {
        let (mean, std) = mean_std(&accuracies);
        Self {
            hidden,
            layers,
            accuracies,
            mean,
            std,
        }
    }

    /// Standard error of the mean, `std / √B`.
    pub fn std_error(&self) -> f64 {
        self.std / (self.accuracies.len() as f64).sqrt()
    }
}

pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mut sum = 0.0;
    for &x in xs {
        sum += x;
    }
    let mean = sum / n;
    let mut sq = 0.0;
    for &x in xs {
        sq += (x - mean) * (x - mean);
    }
    (mean, (sq / n).sqrt())
}

fn bootstrap_accuracy(
    d: &Dataset,
    cfg: &ExperimentConfig,
    hidden: usize,
    layers: usize,
    b: usize,
) -> Result<f64> {
    let input_dim = d.label_dim().unwrap_or(1);
    let split = stratified_split(&d.classes(), cfg.test_fraction, &mut cfg.split_rng(b));
    let reservoir = Reservoir::new(
        cfg.reservoir_config(input_dim, hidden, layers, cfg.weight_seed(b)),
        cfg.target_norm(d),
    )?;
    let all = embed_dataset(&reservoir, d)?;
    let classes = d.classes();
    let pick = |idx: &[usize]| idx.iter().map(|&i| classes[i]).collect::<Vec<u8>>();
    let readout = fit_classifier(
        &select_rows(&all, &split.train),
        &pick(&split.train),
        cfg.ridge_lambda,
    )?;
    readout.accuracy(&select_rows(&all, &split.test), &pick(&split.test))
}

/// Bootstrap estimate of test accuracy for one reservoir layout.
pub fn run_bootstrap(
    d: &Dataset,
    cfg: &ExperimentConfig,
    hidden: usize,
    layers: usize,
) -> Result<CellResult> {
    cfg.validate()?;
    if d.class_counts().contains(&0) {
        return Err(Error::Data("both classes must be present".into()));
    }
    let accuracies = map_indexed(cfg.bootstraps, |b| {
        bootstrap_accuracy(d, cfg, hidden, layers, b)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(CellResult::from_accuracies(hidden, layers, accuracies))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResultTable {
    pub cells: Vec<CellResult>,
}

impl ResultTable {
    pub fn cell(&self, hidden: usize, layers: usize) -> Option<&CellResult> {
        self.cells
            .iter()
            .find(|c| c.hidden == hidden && c.layers == layers)
    }

    pub fn bootstraps_csv(&self, comment: Option<&str>) -> String {
        let mut s = header_comment(comment);
        s.push_str("hidden,layers,bootstrap,accuracy\n");
        for c in &self.cells {
            for (b, a) in c.accuracies.iter().enumerate() {
                let _ = writeln!(s, "{},{},{},{}", c.hidden, c.layers, b, a);
            }
        }
        s
    }

    pub fn aggregate_csv(&self, comment: Option<&str>) -> String {
        let mut s = header_comment(comment);
        s.push_str("hidden,layers,mean,std\n");
        for c in &self.cells {
            let _ = writeln!(s, "{},{},{},{}", c.hidden, c.layers, c.mean, c.std);
        }
        s
    }
}

fn header_comment(comment: Option<&str>) -> String {
    comment.map_or_else(String::new, |c| format!("# {c}\n"))
}

/// Full factorial over `grid_hidden × grid_layers`, hidden-major.
pub fn run_grid(d: &Dataset, cfg: &ExperimentConfig) -> Result<ResultTable> {
    if cfg.grid_hidden.is_empty() || cfg.grid_layers.is_empty() {
        return Err(Error::Config(
            "grid must have at least one H and one L".into(),
        ));
    }
    let mut cells = Vec::with_capacity(cfg.grid_hidden.len() * cfg.grid_layers.len());
    for &h in &cfg.grid_hidden {
        for &l in &cfg.grid_layers {
            cells.push(run_bootstrap(d, cfg, h, l)?);
        }
    }
    Ok(ResultTable { cells })
}

/// Writes `bootstraps.csv` and `aggregate.csv` into `dir`.
pub fn emit_report(
    table: &ResultTable,
    dir: &Path,
    comment: Option<&str>,
) -> Result<(PathBuf, PathBuf)> {
    if table.cells.is_empty() {
        return Err(Error::Data("empty result table".into()));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let per = dir.join(BOOTSTRAPS_FILE);
    let agg = dir.join(AGGREGATE_FILE);
    fs::write(&per, table.bootstraps_csv(comment)).map_err(|e| Error::io(&per, e))?;
    fs::write(&agg, table.aggregate_csv(comment)).map_err(|e| Error::io(&agg, e))?;
    Ok((per, agg))
}

fn data_lines(path: &Path) -> Result<Vec<(u64, Vec<String>)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.starts_with('#') && !l.trim().is_empty())
        .skip(1)
        .map(|(i, l)| {
            (
                i as u64 + 1,
                l.split(',').map(|f| f.trim().to_string()).collect(),
            )
        })
        .collect())
}

/// Reads back a report written by [`emit_report`].
pub fn parse_report(dir: &Path) -> Result<ResultTable> {
    let per = dir.join(BOOTSTRAPS_FILE);
    let agg = dir.join(AGGREGATE_FILE);
    let bad = |path: &Path, line: u64, reason: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        reason,
    };
    let mut cells: Vec<CellResult> = Vec::new();
    for (line, f) in data_lines(&per)? {
        if f.len() != 4 {
            return Err(bad(&per, line, "expected 4 fields".into()));
        }
        let parse_err = |e: String| bad(&per, line, e);
        let h: usize = f[0]
            .parse()
            .map_err(|e: std::num::ParseIntError| parse_err(e.to_string()))?;
        let l: usize = f[1]
            .parse()
            .map_err(|e: std::num::ParseIntError| parse_err(e.to_string()))?;
        let a: f64 = f[3]
            .parse()
            .map_err(|e: std::num::ParseFloatError| parse_err(e.to_string()))?;
        match cells.last_mut() {
            Some(c) if c.hidden == h && c.layers == l => c.accuracies.push(a),
            _ => cells.push(CellResult {
                hidden: h,
                layers: l,
                accuracies: vec![a],
                mean: f64::NAN,
                std: f64::NAN,
            }),
        }
    }
    let aggregates = data_lines(&agg)?;
    if aggregates.len() != cells.len() {
        return Err(bad(
            &agg,
            0,
            format!(
                "{} aggregate rows for {} cells",
                aggregates.len(),
                cells.len()
            ),
        ));
    }
    for ((line, f), cell) in aggregates.into_iter().zip(cells.iter_mut()) {
        if f.len() != 4 || f[0] != cell.hidden.to_string() || f[1] != cell.layers.to_string() {
            return Err(bad(
                &agg,
                line,
                "aggregate row does not match bootstrap rows".into(),
            ));
        }
        cell.mean = f[2]
            .parse()
            .map_err(|e: std::num::ParseFloatError| bad(&agg, line, e.to_string()))?;
        cell.std = f[3]
            .parse()
            .map_err(|e: std::num::ParseFloatError| bad(&agg, line, e.to_string()))?;
    }
    Ok(ResultTable { cells })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimingStats {
    /// Reservoir time-steps per pass over the dataset.
    pub steps: usize,
    pub mean_step_seconds: f64,
    /// Fastest single pass, divided by `steps`.
    pub best_step_seconds: f64,
}

/// Wall-clock time per reservoir time-step while encoding every graph of
/// `d`, over `repeats` passes.
pub fn timing_probe(
    d: &Dataset,
    cfg: &ExperimentConfig,
    hidden: usize,
    layers: usize,
    repeats: usize,
) -> Result<TimingStats> {
    let input_dim = d.label_dim().unwrap_or(1);
    let reservoir = Reservoir::new(
        cfg.reservoir_config(input_dim, hidden, layers, cfg.weight_seed(0)),
        cfg.target_norm(d),
    )?;
    let steps: usize = d.graphs().iter().map(|g| g.graph.horizon()).sum();
    let repeats = repeats.max(1);
    let mut total = 0.0;
    let mut best = f64::INFINITY;
    for _ in 0..repeats {
        let start = Instant::now();
        for lg in d.graphs() {
            std::hint::black_box(reservoir.encode(&lg.graph)?);
        }
        let secs = start.elapsed().as_secs_f64();
        total += secs;
        best = best.min(secs);
    }
    let steps_f = steps.max(1) as f64;
    Ok(TimingStats {
        steps,
        mean_step_seconds: total / (repeats as f64 * steps_f),
        best_step_seconds: best / steps_f,
    })
}
