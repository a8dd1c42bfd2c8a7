//! Plumbing behind the `nlshift` binary: run configuration, state loading,
//! batch scans and output encoding.

use std::fmt::Write as _;
use std::path::Path;

use nlshift::analysis::ppt_test;
use nlshift::cyclic::{d_max_with, DMaxOptions};
use nlshift::states::{
    builtin, random_state, schmidt_real, werner_state, SeparableSampler, StateJson,
};
use nlshift::{BipartiteState, BlochForm, Tolerances};
use rayon::prelude::*;
use serde::Serialize;

pub const SCAN_SCHEMA: &str = "nlshift.scan.v1";
pub const SCAN_COLUMNS: &str = "index,family,param,d_max,beta_norm,ppt_negative,bound_violated";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

impl From<nlshift::Error> for CliError {
    fn from(e: nlshift::Error) -> Self {
        if e.is_internal() {
            CliError::Internal(e.to_string())
        } else {
            CliError::Input(e.to_string())
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub seed: u64,
    pub tolerances: Tolerances<f64>,
    pub restarts: usize,
    pub max_iters: usize,
    pub format: Option<Format>,
    pub workers: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let d = DMaxOptions::<f64>::default();
        Self {
            seed: 0,
            tolerances: Tolerances::default(),
            restarts: d.restarts,
            max_iters: d.max_iters,
            format: None,
            workers: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> CliResult<()> {
        if !self.tolerances.is_valid() {
            return Err(CliError::Input(
                "all tolerances must be positive and finite".into(),
            ));
        }
        if self.restarts == 0 {
            return Err(CliError::Input("--restarts must be at least 1".into()));
        }
        if self.max_iters == 0 {
            return Err(CliError::Input("--max-iters must be at least 1".into()));
        }
        if self.workers == Some(0) {
            return Err(CliError::Input("--workers must be at least 1".into()));
        }
        Ok(())
    }

    pub fn dmax_options(&self) -> DMaxOptions<f64> {
        DMaxOptions {
            restarts: self.restarts,
            max_iters: self.max_iters,
            seed: self.seed,
            tolerances: self.tolerances,
            ..DMaxOptions::default()
        }
    }
}

/// A file path when one exists (or the argument ends in `.json`), otherwise a
/// builtin name such as `werner:0.5`.
pub fn load_state(source: &str, tol: &Tolerances<f64>) -> CliResult<BipartiteState<f64>> {
    let path = Path::new(source);
    if path.is_file() || source.ends_with(".json") {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read {source}: {e}")))?;
        let json: StateJson =
            serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{source}: {e}")))?;
        return Ok(json.to_state(tol)?);
    }
    Ok(builtin(source)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// Mixtures of 2..=8 Haar product terms, simplex weights.
    Separable,
    /// Werner states with p = i/(count−1).
    WernerGrid,
    /// Schmidt states with k1 = i/(count−1).
    SchmidtGrid,
    /// GG†/Tr(GG†) two-qubit states with rank 1 + i mod 4.
    Random,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Separable => "separable",
            Family::WernerGrid => "werner-grid",
            Family::SchmidtGrid => "schmidt-grid",
            Family::Random => "random",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanRow {
    pub index: usize,
    pub family: &'static str,
    /// Term count, p, k1 or rank, depending on the family.
    pub param: f64,
    pub d_max: f64,
    pub beta_norm: f64,
    pub ppt_negative: bool,
    pub bound_violated: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanReport {
    pub schema: &'static str,
    pub family: &'static str,
    pub seed: u64,
    pub count: usize,
    pub max_d_max: f64,
    pub rows: Vec<ScanRow>,
}

fn grid(i: usize, count: usize) -> f64 {
    if count <= 1 {
        0.0
    } else {
        i as f64 / (count - 1) as f64
    }
}

fn scan_item(
    family: Family,
    i: usize,
    count: usize,
    seed: u64,
) -> CliResult<(f64, BipartiteState<f64>)> {
    Ok(match family {
        Family::Separable => {
            let (state, ens) = SeparableSampler::default().nth::<f64>(seed, i as u64)?;
            (ens.len() as f64, state)
        }
        Family::WernerGrid => {
            let p = grid(i, count);
            (p, werner_state(p)?)
        }
        Family::SchmidtGrid => {
            let k1 = grid(i, count);
            (k1, schmidt_real(k1)?)
        }
        Family::Random => {
            let rank = 1 + i % 4;
            let mut rng = nlshift::states::item_rng(seed, i as u64);
            (rank as f64, random_state(&mut rng, (2, 2), rank)?)
        }
    })
}

/// Evaluates `count` states in parallel; rows come back in index order.
pub fn scan(family: Family, count: usize, cfg: &RunConfig) -> CliResult<ScanReport> {
    if count == 0 {
        return Err(CliError::Input("--count must be at least 1".into()));
    }
    let opts = cfg.dmax_options();
    let bound = std::f64::consts::FRAC_1_SQRT_2 + cfg.tolerances.bound;
    let rows = (0..count)
        .into_par_iter()
        .map(|i| {
            let (param, state) = scan_item(family, i, count, cfg.seed)?;
            let shift = d_max_with(&state, &opts)?;
            let form = BlochForm::of(&state)?;
            Ok(ScanRow {
                index: i,
                family: family.name(),
                param,
                d_max: shift.d,
                beta_norm: form.beta.frobenius_norm(),
                ppt_negative: ppt_test(&state).entangled,
                bound_violated: state.dims() == (2, 2) && shift.d > bound,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    let max_d_max = rows
        .iter()
        .map(|r| r.d_max)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(ScanReport {
        schema: SCAN_SCHEMA,
        family: family.name(),
        seed: cfg.seed,
        count,
        max_d_max,
        rows,
    })
}

/// Schema comment, header, one line per row, then a summary comment.
pub fn scan_csv(report: &ScanReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# schema={}", report.schema);
    let _ = writeln!(out, "{SCAN_COLUMNS}");
    for r in &report.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.index, r.family, r.param, r.d_max, r.beta_norm, r.ppt_negative, r.bound_violated
        );
    }
    let _ = writeln!(
        out,
        "# summary: family={} seed={} count={} max_d_max={}",
        report.family, report.seed, report.count, report.max_d_max
    );
    out
}

/// Parses `x`, `y`, `z` or `ux,uy,uz` (normalized).
pub fn parse_axis(s: &str) -> CliResult<[f64; 3]> {
    let v = match s.trim().to_ascii_lowercase().as_str() {
        "x" => [1.0, 0.0, 0.0],
        "y" => [0.0, 1.0, 0.0],
        "z" => [0.0, 0.0, 1.0],
        other => {
            let parts: Vec<f64> = other
                .split(',')
                .map(|p| p.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| CliError::Input(format!("cannot parse axis '{s}'")))?;
            let [x, y, z] = parts[..] else {
                return Err(CliError::Input(format!(
                    "axis '{s}' needs three components"
                )));
            };
            [x, y, z]
        }
    };
    nlshift::real::normalize3(&v).ok_or_else(|| CliError::Input("axis must be non-zero".into()))
}

pub fn to_json<S: Serialize>(value: &S) -> CliResult<String> {
    serde_json::to_string_pretty(value)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| CliError::Internal(format!("serialization failed: {e}")))
}
