//! Running an experiment and writing its outputs.

use crate::config::{Experiment, ExperimentConfig};
use crate::table::{Summary, Table};
use crate::{LabError, THREADS_ENV};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Plot-ready series an experiment may carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlotKind {
    /// Columns `N,n,K_max_formula`.
    CapacityCurve,
    /// Columns `class,lambda_max`.
    StabilityHistogram,
    /// The flows trajectory schema `t,x0..x{N-1}[,energy]`.
    Trajectory,
}

impl PlotKind {
    pub const ALL: [PlotKind; 3] = [PlotKind::CapacityCurve, PlotKind::StabilityHistogram, PlotKind::Trajectory];

    pub fn name(self) -> &'static str {
        match self {
            PlotKind::CapacityCurve => "capacity_curve",
            PlotKind::StabilityHistogram => "stability_histogram",
            PlotKind::Trajectory => "trajectory",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }
}

impl std::fmt::Display for PlotKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub experiment: Experiment,
    pub seed: u64,
    /// Config with every parameter resolved; rerunnable as is.
    pub config: ExperimentConfig,
    pub out_dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub summary: Summary,
    /// Wall-clock seconds; the only field that varies between reruns.
    pub runtime_secs: f64,
    #[serde(skip)]
    pub tables: Vec<(&'static str, Table)>,
    #[serde(skip)]
    pub series: Vec<(PlotKind, Table)>,
}

impl ExperimentReport {
    pub fn table(&self, metric: &str) -> Option<&Table> {
        self.tables.iter().find(|(m, _)| *m == metric).map(|(_, t)| t)
    }

    pub fn series(&self, kind: PlotKind) -> Option<&Table> {
        self.series.iter().find(|(k, _)| *k == kind).map(|(_, t)| t)
    }

    /// CSV files among the outputs, in write order.
    pub fn csv_files(&self) -> impl Iterator<Item = &PathBuf> {
        self.files.iter().filter(|p| p.extension().is_some_and(|e| e == "csv"))
    }
}

/// Reads the thread cap from `EDMLAB_THREADS`; unset means rayon's default.
pub fn threads_from_env() -> Result<Option<usize>, LabError> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(LabError::Config(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
        },
    }
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport, LabError> {
    run_with_threads(config, threads_from_env()?)
}

/// [`run_experiment`] with an explicit worker count (`None`: one per core).
/// Results do not depend on the count.
pub fn run_with_threads(config: &ExperimentConfig, threads: Option<usize>) -> Result<ExperimentReport, LabError> {
    let prepared = config.prepare()?;
    let resolved = ExperimentConfig { params: prepared.echo(), ..config.clone() };
    let name = config.experiment.name();
    let fail = |message: String| LabError::Experiment { experiment: name, message };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| fail(format!("thread pool: {e}")))?;
    log::info!("running {name} with seed {}", config.seed);
    let start = Instant::now();
    let outcome = pool.install(|| prepared.run(config.seed)).map_err(|e| fail(format!("{e:#}")))?;
    let runtime_secs = start.elapsed().as_secs_f64();

    let mut report = ExperimentReport {
        experiment: config.experiment,
        seed: config.seed,
        config: resolved,
        out_dir: config.out_dir(),
        files: Vec::new(),
        summary: outcome.summary,
        runtime_secs,
        tables: outcome.tables,
        series: outcome.series,
    };
    if let Err(e) = write_outputs(&mut report) {
        for f in &report.files {
            let _ = std::fs::remove_file(f);
        }
        report.files.clear();
        return Err(e);
    }
    Ok(report)
}

fn write_file(path: &Path, contents: &str) -> Result<(), LabError> {
    std::fs::write(path, contents).map_err(|source| LabError::Io { path: path.to_path_buf(), source })
}

/// Writes every table, the summary, the plot series, the resolved config
/// and finally the report; `report.files` lists what exists so far.
fn write_outputs(report: &mut ExperimentReport) -> Result<(), LabError> {
    let dir = report.out_dir.clone();
    std::fs::create_dir_all(&dir).map_err(|source| LabError::Io { path: dir.clone(), source })?;
    let name = report.experiment.name();
    let mut pending: Vec<(PathBuf, String)> =
        report.tables.iter().map(|(metric, t)| (dir.join(format!("{name}_{metric}.csv")), t.to_csv())).collect();
    pending.push((dir.join(format!("{name}_summary.csv")), report.summary.to_table().to_csv()));
    for (kind, t) in &report.series {
        pending.push((plot_path(report, *kind), t.to_csv()));
    }
    let config = serde_json::to_string_pretty(&report.config).expect("config serializes");
    pending.push((dir.join(format!("{name}_config.json")), config + "\n"));
    for (path, contents) in pending {
        write_file(&path, &contents)?;
        report.files.push(path);
    }
    let path = dir.join(format!("{name}_report.json"));
    report.files.push(path.clone());
    let json = serde_json::to_string_pretty(report).expect("report serializes");
    write_file(&path, &(json + "\n"))
}

fn plot_path(report: &ExperimentReport, kind: PlotKind) -> PathBuf {
    report.out_dir.join(format!("{}_{}.csv", report.experiment.name(), kind.name()))
}

/// Writes the named series as `<experiment>_<kind>.csv` in the report's
/// output directory and returns the path.
pub fn emit_plotdata(report: &ExperimentReport, kind: PlotKind) -> Result<PathBuf, LabError> {
    let table = report.series(kind).ok_or(LabError::MissingSeries { experiment: report.experiment.name(), kind })?;
    std::fs::create_dir_all(&report.out_dir).map_err(|source| LabError::Io { path: report.out_dir.clone(), source })?;
    let path = plot_path(report, kind);
    write_file(&path, &table.to_csv())?;
    Ok(path)
}
