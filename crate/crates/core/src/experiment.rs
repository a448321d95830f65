//! Reproducible experiment harness behind the command line tool.
//!
//! A [`RunConfig`] names every axis of an experiment. Each combination of
//! data parameters (specimen, reference, oversampling, gap, beamstop, photon
//! flux) is one data cell; every requested solver runs on that cell's single
//! noise realization. The noise seed of a cell is derived from the master
//! seed and the cell's data parameters only, so adding solvers, reordering
//! axes or changing the worker count never changes the data.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::baselines::{self, FilterConfig};
use crate::detector::{self, BeamstopMask, Measurement};
use crate::error::{HoloError, Result};
use crate::imageio;
use crate::layout::{ImageGrid, Layout};
use crate::metrics;
use crate::objective::Problem;
use crate::phantoms::Phantom;
use crate::references::{self, ReferenceKind};
use crate::solvers::{self, ReconResult, SolverConfig, StopReason, TraceEntry};

pub const CSV_SCHEMA: &str = "# holoml-sweep v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Cg,
    Admm,
    Inverse,
    Wiener,
}

impl SolverKind {
    pub const ALL: [SolverKind; 4] = [SolverKind::Cg, SolverKind::Admm, SolverKind::Inverse, SolverKind::Wiener];
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolverKind::Cg => "cg",
            SolverKind::Admm => "admm",
            SolverKind::Inverse => "inverse",
            SolverKind::Wiener => "wiener",
        })
    }
}

impl FromStr for SolverKind {
    type Err = HoloError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cg" => Ok(SolverKind::Cg),
            "admm" => Ok(SolverKind::Admm),
            "inverse" => Ok(SolverKind::Inverse),
            "wiener" => Ok(SolverKind::Wiener),
            other => Err(HoloError::Config(format!("unknown solver {other:?}"))),
        }
    }
}

/// Gap width in pixels or as a multiple of `n` (written `"0.25n"`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Gap {
    Pixels(usize),
    #[serde(with = "relative_gap")]
    Relative(f64),
}

mod relative_gap {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format!("{v}n"))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        let s = String::deserialize(d)?;
        super::parse_relative(&s).ok_or_else(|| D::Error::custom(format!("bad gap {s:?}")))
    }
}

fn parse_relative(s: &str) -> Option<f64> {
    let t = s.trim();
    let body = t.strip_suffix('n')?;
    if body.is_empty() {
        return Some(1.0);
    }
    body.parse::<f64>().ok().filter(|v| *v >= 0.0 && v.is_finite())
}

impl Gap {
    pub fn pixels(&self, n: usize) -> usize {
        match *self {
            Gap::Pixels(d) => d,
            Gap::Relative(f) => (f * n as f64 + 0.5).floor() as usize,
        }
    }
}

impl FromStr for Gap {
    type Err = HoloError;

    fn from_str(s: &str) -> Result<Self> {
        if let Ok(d) = s.trim().parse::<usize>() {
            return Ok(Gap::Pixels(d));
        }
        parse_relative(s).map(Gap::Relative).ok_or_else(|| HoloError::Config(format!("bad gap {s:?}")))
    }
}

impl fmt::Display for Gap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gap::Pixels(d) => write!(f, "{d}"),
            Gap::Relative(r) => write!(f, "{r}n"),
        }
    }
}

/// Oversampling: one ratio for both axes or an `[x, y]` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Oversampling {
    Isotropic(f64),
    Axes([f64; 2]),
}

impl Oversampling {
    pub fn axes(&self) -> (f64, f64) {
        match *self {
            Oversampling::Isotropic(v) => (v, v),
            Oversampling::Axes([x, y]) => (x, y),
        }
    }
}

impl FromStr for Oversampling {
    type Err = HoloError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || HoloError::Config(format!("bad oversampling {s:?}"));
        match s.split_once(['x', ',']) {
            Some((x, y)) => Ok(Oversampling::Axes([
                x.trim().parse().map_err(|_| bad())?,
                y.trim().parse().map_err(|_| bad())?,
            ])),
            None => Ok(Oversampling::Isotropic(s.trim().parse().map_err(|_| bad())?)),
        }
    }
}

/// Full description of an experiment. Every list field is a sweep axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Phantom names (`disc`, `shepp-logan`, `cameraman`) or image paths.
    pub specimens: Vec<String>,
    pub n: usize,
    pub references: Vec<ReferenceKind>,
    pub gaps: Vec<Gap>,
    pub oversampling: Vec<Oversampling>,
    /// Odd beamstop block sizes; 0 disables the beamstop.
    pub beamstops: Vec<usize>,
    /// Mean photons per detector pixel; `inf` simulates noiseless data.
    pub photon_flux: Vec<f64>,
    pub solvers: Vec<SolverKind>,
    pub seed: u64,
    /// Worker threads for sweeps; 0 uses all cores.
    pub threads: usize,
    pub write_images: bool,
    pub solver: SolverConfig,
    pub filter: FilterConfig,
    pub output: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            specimens: vec![Phantom::SheppLogan.to_string()],
            n: 64,
            references: vec![ReferenceKind::Ura],
            gaps: vec![Gap::Relative(1.0)],
            oversampling: vec![Oversampling::Isotropic(2.0)],
            beamstops: vec![0],
            photon_flux: vec![1.0],
            solvers: SolverKind::ALL.to_vec(),
            seed: 0,
            threads: 0,
            write_images: true,
            solver: SolverConfig::default(),
            filter: FilterConfig::default(),
            output: PathBuf::from("holoml-out"),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| HoloError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = fs::read_to_string(path.as_ref())
            .map_err(|e| HoloError::Config(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let empty = |name: &str, len: usize| {
            if len == 0 {
                Err(HoloError::Config(format!("{name} must not be empty")))
            } else {
                Ok(())
            }
        };
        empty("specimens", self.specimens.len())?;
        empty("references", self.references.len())?;
        empty("gaps", self.gaps.len())?;
        empty("oversampling", self.oversampling.len())?;
        empty("beamstops", self.beamstops.len())?;
        empty("photon_flux", self.photon_flux.len())?;
        empty("solvers", self.solvers.len())?;
        if self.n == 0 {
            return Err(HoloError::Config("n must be positive".into()));
        }
        // infinite flux selects noiseless data
        if let Some(np) = self.photon_flux.iter().find(|v| !(**v > 0.0)) {
            return Err(HoloError::Config(format!("photon flux {np} must be positive")));
        }
        if let Some(k) = self.beamstops.iter().find(|k| **k != 0 && **k % 2 == 0) {
            return Err(HoloError::Config(format!("beamstop size {k} must be odd or 0")));
        }
        for os in &self.oversampling {
            let (x, y) = os.axes();
            if !(x >= 1.0 && y >= 1.0) {
                return Err(HoloError::Config(format!("oversampling ({x}, {y}) must be >= 1")));
            }
        }
        self.solver.validate()?;
        if !(self.filter.epsilon_div > 0.0) {
            return Err(HoloError::Config("filter.epsilon_div must be positive".into()));
        }
        Ok(())
    }

    /// All data cells in axis order: specimen, reference, oversampling, gap,
    /// beamstop, photon flux.
    pub fn data_cells(&self) -> Vec<DataCell> {
        let mut out = Vec::new();
        for specimen in &self.specimens {
            for &reference in &self.references {
                for &os in &self.oversampling {
                    for &gap in &self.gaps {
                        for &beamstop in &self.beamstops {
                            for &photon_flux in &self.photon_flux {
                                let (osx, osy) = os.axes();
                                out.push(DataCell {
                                    specimen: specimen.clone(),
                                    n: self.n,
                                    reference,
                                    gap: gap.pixels(self.n),
                                    oversampling_x: osx,
                                    oversampling_y: osy,
                                    beamstop,
                                    photon_flux,
                                    seed: 0,
                                });
                            }
                        }
                    }
                }
            }
        }
        for cell in &mut out {
            cell.seed = cell.derive_seed(self.seed);
        }
        out
    }
}

/// One combination of data parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataCell {
    pub specimen: String,
    pub n: usize,
    pub reference: ReferenceKind,
    pub gap: usize,
    pub oversampling_x: f64,
    pub oversampling_y: f64,
    pub beamstop: usize,
    pub photon_flux: f64,
    pub seed: u64,
}

impl DataCell {
    fn key(&self) -> String {
        format!(
            "{}|{}|{}|{}|{:e}|{:e}|{}|{:e}",
            self.specimen,
            self.n,
            self.reference,
            self.gap,
            self.oversampling_x,
            self.oversampling_y,
            self.beamstop,
            self.photon_flux
        )
    }

    /// First eight bytes of `SHA-256("<master seed>|<cell key>")`.
    pub fn derive_seed(&self, master: u64) -> u64 {
        let digest = Sha256::digest(format!("{master}|{}", self.key()).as_bytes());
        u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
    }

    /// Short file-system friendly identifier.
    pub fn label(&self) -> String {
        let raw = format!(
            "{}_{}_os{}x{}_d{}_bs{}_np{}",
            self.specimen,
            self.reference,
            self.oversampling_x,
            self.oversampling_y,
            self.gap,
            self.beamstop,
            self.photon_flux
        );
        raw.chars()
            .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' || c == '_' { c } else { '-' })
            .collect()
    }

    pub fn layout(&self) -> Result<Layout> {
        let specimen = load_specimen(&self.specimen, self.n)?;
        let reference = references::generate(self.reference, self.n)?;
        Layout::new(specimen, reference, self.gap, self.oversampling_x, self.oversampling_y)
    }

    pub fn simulate(&self, layout: &Layout) -> Result<Measurement> {
        let g = layout.geometry();
        let mask = BeamstopMask::from_block(self.beamstop, g.m1, g.m2)?;
        if self.photon_flux == f64::INFINITY {
            return detector::noiseless(layout, self.reference, mask);
        }
        detector::simulate(layout, self.reference, mask, self.photon_flux, self.seed)
    }
}

/// Phantom by name, otherwise a grayscale image path resampled to `n x n`.
pub fn load_specimen(spec: &str, n: usize) -> Result<ImageGrid> {
    match spec.parse::<Phantom>() {
        Ok(p) => Ok(p.render(n)),
        Err(_) => imageio::load_grayscale(spec, Some(n)),
    }
}

/// Runs one reconstruction method. Baselines return a single-entry trace.
pub fn run_solver(
    kind: SolverKind,
    problem: &Problem,
    solver: &SolverConfig,
    filter: &FilterConfig,
) -> Result<ReconResult> {
    match kind {
        SolverKind::Cg => solvers::solve_cg(problem, solver),
        SolverKind::Admm => solvers::solve_admm(problem, solver),
        SolverKind::Inverse | SolverKind::Wiener => {
            let start = Instant::now();
            let meas = problem.measurement();
            let reference = problem.operator().reference();
            let image = if kind == SolverKind::Inverse {
                baselines::inverse_filter(meas, reference, filter)?
            } else {
                baselines::wiener_filter(meas, reference, filter)?
            }
            .into_inner();
            let objective = problem.nll(&image)?;
            Ok(ReconResult {
                image,
                trace: vec![TraceEntry {
                    iter: 0,
                    objective,
                    residual: 0.0,
                    elapsed_seconds: start.elapsed().as_secs_f64(),
                }],
                converged: true,
                reason: StopReason::Direct,
            })
        }
    }
}

/// One row of the sweep table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub specimen: String,
    pub reference: String,
    pub n: usize,
    pub gap: usize,
    pub oversampling_x: f64,
    pub oversampling_y: f64,
    pub beamstop: usize,
    pub photon_flux: f64,
    pub solver: SolverKind,
    pub seed: u64,
    pub status: String,
    pub error_tag: String,
    pub data_error: Option<f64>,
    pub truth_error: Option<f64>,
    pub iterations: Option<usize>,
    pub converged: Option<bool>,
    pub wall_seconds: f64,
}

impl SweepRow {
    fn base(cell: &DataCell, solver: SolverKind) -> Self {
        SweepRow {
            specimen: cell.specimen.clone(),
            reference: cell.reference.to_string(),
            n: cell.n,
            gap: cell.gap,
            oversampling_x: cell.oversampling_x,
            oversampling_y: cell.oversampling_y,
            beamstop: cell.beamstop,
            photon_flux: cell.photon_flux,
            solver,
            seed: cell.seed,
            status: "ok".into(),
            error_tag: String::new(),
            data_error: None,
            truth_error: None,
            iterations: None,
            converged: None,
            wall_seconds: 0.0,
        }
    }

    fn failed(mut self, err: &HoloError) -> Self {
        self.status = "error".into();
        self.error_tag = err.tag().into();
        self
    }
}

/// Reconstruction plus its errors for one (cell, solver) pair.
#[derive(Debug, Clone)]
pub struct CellOutcome {
    pub row: SweepRow,
    pub image: Option<Array2<f64>>,
}

/// Simulates one data cell and runs every configured solver on it.
pub fn run_data_cell(cell: &DataCell, config: &RunConfig) -> Vec<CellOutcome> {
    let prepared = cell.layout().and_then(|layout| {
        let meas = cell.simulate(&layout)?;
        Ok((layout, Problem::from_measurement(meas)?))
    });
    config
        .solvers
        .iter()
        .map(|&kind| {
            let row = SweepRow::base(cell, kind);
            let (layout, problem) = match &prepared {
                Ok(p) => p,
                Err(e) => return CellOutcome { row: row.failed(e), image: None },
            };
            let start = Instant::now();
            let result = run_solver(kind, problem, &config.solver, &config.filter).and_then(|r| {
                let report = metrics::error_report(&r.image, problem, Some(layout.specimen().values()))?;
                Ok((r, report))
            });
            let wall = start.elapsed().as_secs_f64();
            match result {
                Ok((r, report)) => CellOutcome {
                    row: SweepRow {
                        data_error: Some(report.data_relative_error),
                        truth_error: report.truth_relative_error,
                        iterations: Some(r.iterations()),
                        converged: Some(r.converged),
                        wall_seconds: wall,
                        ..row
                    },
                    image: Some(r.image),
                },
                Err(e) => CellOutcome { row: SweepRow { wall_seconds: wall, ..row.failed(&e) }, image: None },
            }
        })
        .collect()
}

/// Runs the full Cartesian product; rows come back in deterministic order.
pub fn sweep(config: &RunConfig) -> Result<Vec<CellOutcome>> {
    config.validate()?;
    let cells = config.data_cells();
    let run = || cells.par_iter().map(|c| run_data_cell(c, config)).collect::<Vec<_>>();
    let nested = if config.threads == 0 {
        run()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(config.threads)
            .build()
            .map_err(|e| HoloError::Config(e.to_string()))?
            .install(run)
    };
    Ok(nested.into_iter().flatten().collect())
}

fn fmt_opt<T: fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map(|v| v.to_string()).unwrap_or_default()
}

fn fmt_err(v: &Option<f64>) -> String {
    v.map(|v| format!("{v:.9e}")).unwrap_or_default()
}

pub const CSV_COLUMNS: [&str; 17] = [
    "specimen", "reference", "n", "gap", "oversampling_x", "oversampling_y", "beamstop", "photon_flux",
    "solver", "seed", "status", "error_tag", "data_error", "truth_error", "iterations", "converged",
    "wall_seconds",
];

/// Writes the sweep table: a schema comment line, a header, one row per cell.
pub fn write_sweep_csv<W: std::io::Write>(rows: &[SweepRow], mut out: W) -> Result<()> {
    writeln!(out, "{CSV_SCHEMA}")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS).map_err(solvers::csv_err)?;
    for r in rows {
        w.write_record([
            r.specimen.clone(),
            r.reference.clone(),
            r.n.to_string(),
            r.gap.to_string(),
            r.oversampling_x.to_string(),
            r.oversampling_y.to_string(),
            r.beamstop.to_string(),
            r.photon_flux.to_string(),
            r.solver.to_string(),
            r.seed.to_string(),
            r.status.clone(),
            r.error_tag.clone(),
            fmt_err(&r.data_error),
            fmt_err(&r.truth_error),
            fmt_opt(&r.iterations),
            fmt_opt(&r.converged),
            format!("{:.6}", r.wall_seconds),
        ])
        .map_err(solvers::csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a sweep table back as `(header, rows)` of raw strings.
pub fn read_sweep_csv(path: impl AsRef<Path>) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let text = fs::read_to_string(path)?;
    let body = text
        .strip_prefix(CSV_SCHEMA)
        .ok_or_else(|| HoloError::Format("missing sweep schema line".into()))?;
    let mut rdr = csv::Reader::from_reader(body.trim_start().as_bytes());
    let header = rdr.headers().map_err(solvers::csv_err)?.iter().map(String::from).collect();
    let rows = rdr
        .records()
        .map(|r| r.map(|r| r.iter().map(String::from).collect()).map_err(solvers::csv_err))
        .collect::<Result<Vec<_>>>()?;
    Ok((header, rows))
}

fn write_provenance(dir: &Path, config: &RunConfig) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("config.toml"), config.to_toml())?;
    Ok(())
}

/// `sweep` subcommand: table in `sweep.csv`, images under `images/`.
pub fn cmd_sweep(config: &RunConfig) -> Result<Vec<SweepRow>> {
    let outcomes = sweep(config)?;
    let dir = &config.output;
    write_provenance(dir, config)?;
    let rows: Vec<SweepRow> = outcomes.iter().map(|o| o.row.clone()).collect();
    write_sweep_csv(&rows, fs::File::create(dir.join("sweep.csv"))?)?;
    if config.write_images {
        let img_dir = dir.join("images");
        fs::create_dir_all(&img_dir)?;
        let cells = config.data_cells();
        let mut truths_written = std::collections::HashSet::new();
        for o in &outcomes {
            let cell = cells
                .iter()
                .find(|c| c.seed == o.row.seed && c.specimen == o.row.specimen)
                .expect("row originates from a cell");
            if truths_written.insert(cell.specimen.clone()) {
                if let Ok(s) = load_specimen(&cell.specimen, cell.n) {
                    imageio::save_clamped(img_dir.join(format!("truth_{}.png", sanitize(&cell.specimen))), s.values())?;
                }
            }
            if let Some(img) = &o.image {
                imageio::save_clamped(img_dir.join(format!("{}_{}.png", cell.label(), o.row.solver)), img)?;
            }
        }
    }
    Ok(rows)
}

fn sanitize(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' }).collect()
}

/// Takes the only value of a sweep axis, for single-shot commands.
fn single<T: Clone>(name: &str, values: &[T]) -> Result<T> {
    match values {
        [v] => Ok(v.clone()),
        _ => Err(HoloError::Config(format!("{name} must have exactly one value for this command"))),
    }
}

/// Files written by [`cmd_simulate`].
pub const MEASUREMENT_FILE: &str = "measurement.bin";
pub const TRUTH_FILE: &str = "specimen.f64";

/// `simulate` subcommand: measurement file, previews and the ground truth.
pub fn cmd_simulate(config: &RunConfig) -> Result<Measurement> {
    config.validate()?;
    for (name, len) in [
        ("specimens", config.specimens.len()),
        ("references", config.references.len()),
        ("gaps", config.gaps.len()),
        ("oversampling", config.oversampling.len()),
        ("beamstops", config.beamstops.len()),
        ("photon_flux", config.photon_flux.len()),
    ] {
        if len != 1 {
            return Err(HoloError::Config(format!("{name} must have exactly one value for simulate")));
        }
    }
    let cell = config.data_cells().remove(0);
    let layout = cell.layout()?;
    let meas = cell.simulate(&layout)?;
    let dir = &config.output;
    write_provenance(dir, config)?;
    meas.save(dir.join(MEASUREMENT_FILE))?;
    save_raw(dir.join(TRUTH_FILE), layout.specimen().values())?;
    imageio::save_log_intensity(dir.join("intensity_log.png"), meas.noisy_intensity())?;
    imageio::save_clamped(dir.join("composite.png"), layout.compose().values())?;
    Ok(meas)
}

/// Everything `reconstruct` produced.
#[derive(Debug, Clone)]
pub struct ReconOutput {
    pub result: ReconResult,
    pub report: metrics::ErrorReport,
}

/// `reconstruct` subcommand: raw and clamped image, trace CSV, error report.
pub fn cmd_reconstruct(
    measurement: &Path,
    truth: Option<&Path>,
    config: &RunConfig,
) -> Result<ReconOutput> {
    config.validate()?;
    let solver = single("solvers", &config.solvers)?;
    let meas = Measurement::load(measurement)?;
    let problem = Problem::from_measurement(meas)?;
    let truth = truth.map(load_raw).transpose()?;
    let result = run_solver(solver, &problem, &config.solver, &config.filter)?;
    let report = metrics::error_report(&result.image, &problem, truth.as_ref())?;
    let dir = &config.output;
    write_provenance(dir, config)?;
    save_raw(dir.join("recon.f64"), &result.image)?;
    imageio::save_clamped(dir.join("recon.png"), &result.image)?;
    result.write_trace_csv(fs::File::create(dir.join("trace.csv"))?)?;
    let summary = ReconSummary {
        solver,
        measurement: measurement.display().to_string(),
        iterations: result.iterations(),
        converged: result.converged,
        reason: result.reason,
        errors: report,
    };
    fs::write(
        dir.join("errors.json"),
        serde_json::to_string_pretty(&summary).expect("summary serializes"),
    )?;
    Ok(ReconOutput { result, report })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReconSummary {
    pub solver: SolverKind,
    pub measurement: String,
    pub iterations: usize,
    pub converged: bool,
    pub reason: StopReason,
    pub errors: metrics::ErrorReport,
}

/// `compare` subcommand: one line per result directory or sweep table.
pub fn cmd_compare(paths: &[PathBuf]) -> Result<String> {
    let mut lines = vec![format!("{:<48} {:<8} {:>14} {:>14}", "source", "solver", "data_error", "truth_error")];
    for path in paths {
        let errors = path.join("errors.json");
        let sweep = if path.is_dir() { path.join("sweep.csv") } else { path.clone() };
        if errors.is_file() {
            let s: ReconSummary = serde_json::from_str(&fs::read_to_string(&errors)?)
                .map_err(|e| HoloError::Format(format!("{}: {e}", errors.display())))?;
            lines.push(format!(
                "{:<48} {:<8} {:>14.6e} {:>14}",
                path.display(),
                s.solver,
                s.errors.data_relative_error,
                s.errors.truth_relative_error.map(|v| format!("{v:.6e}")).unwrap_or_else(|| "-".into())
            ));
        } else if sweep.is_file() {
            let (header, rows) = read_sweep_csv(&sweep)?;
            let col = |name: &str| header.iter().position(|h| h == name);
            let (Some(s), Some(d), Some(t)) = (col("solver"), col("data_error"), col("truth_error")) else {
                return Err(HoloError::Format(format!("{}: unexpected columns", sweep.display())));
            };
            let label_cols: Vec<usize> = ["specimen", "reference", "photon_flux", "beamstop"]
                .iter()
                .filter_map(|c| col(c))
                .collect();
            for r in rows {
                let label = label_cols.iter().map(|&i| r[i].as_str()).collect::<Vec<_>>().join("/");
                let or_dash = |v: &str| if v.is_empty() { "-".to_string() } else { v.to_string() };
                lines.push(format!("{:<48} {:<8} {:>14} {:>14}", label, r[s], or_dash(&r[d]), or_dash(&r[t])));
            }
        } else {
            return Err(HoloError::Io(std::io::Error::new(
                std::io::ErrorKind::NotFound,
                format!("{}: no errors.json or sweep.csv", path.display()),
            )));
        }
    }
    Ok(lines.join("\n") + "\n")
}

const RAW_MAGIC: &[u8; 8] = b"HOLOARR1";

/// Raw real array: `HOLOARR1`, u32 LE rows, u32 LE cols, LE f64 row-major.
pub fn save_raw(path: impl AsRef<Path>, values: &Array2<f64>) -> Result<()> {
    let (r, c) = values.dim();
    let mut out = Vec::with_capacity(16 + 8 * values.len());
    out.extend_from_slice(RAW_MAGIC);
    out.extend_from_slice(&(r as u32).to_le_bytes());
    out.extend_from_slice(&(c as u32).to_le_bytes());
    for v in values.iter() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn load_raw(path: impl AsRef<Path>) -> Result<Array2<f64>> {
    let bytes = fs::read(path)?;
    if bytes.len() < 16 || &bytes[..8] != RAW_MAGIC {
        return Err(HoloError::Format("not a raw array file".into()));
    }
    let r = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes")) as usize;
    let c = u32::from_le_bytes(bytes[12..16].try_into().expect("4 bytes")) as usize;
    let body = &bytes[16..];
    if body.len() != 8 * r * c {
        return Err(HoloError::Format("raw array truncated".into()));
    }
    let data = body
        .chunks_exact(8)
        .map(|ch| f64::from_le_bytes(ch.try_into().expect("8 bytes")))
        .collect();
    Array2::from_shape_vec((r, c), data).map_err(|e| HoloError::Format(e.to_string()))
}
