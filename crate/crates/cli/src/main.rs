use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nlshift::analysis::detect_with;
use nlshift::bloch::norm;
use nlshift::chsh::{protocol_run_with, ProtocolOptions};
use nlshift::cyclic::{d_max_with, CyclicUnitary};
use nlshift::linalg::{expm_i_hermitian, pauli_dot};
use nlshift::BlochForm;
use nlshift_cli::{
    load_state, parse_axis, scan, scan_csv, to_json, CliError, CliResult, Family, Format, RunConfig,
};
use serde::Serialize;

/// Nonlocal shift of bipartite quantum states under local cyclic operations.
///
/// Every flag can also be set through an environment variable named
/// NLSHIFT_<FLAG>, e.g. NLSHIFT_SEED or NLSHIFT_TOL_CYCLIC.
#[derive(Parser, Debug)]
#[command(name = "nlshift", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Seed for optimizer restarts and samplers.
    #[arg(long, global = true, env = "NLSHIFT_SEED", default_value_t = 0)]
    seed: u64,
    /// Random starts for the generic d_max optimizer.
    #[arg(long, global = true, env = "NLSHIFT_RESTARTS", default_value_t = 16)]
    restarts: usize,
    #[arg(long, global = true, env = "NLSHIFT_MAX_ITERS", default_value_t = 2000)]
    max_iters: usize,
    #[arg(long, global = true, env = "NLSHIFT_TOL_HERM")]
    tol_herm: Option<f64>,
    #[arg(long, global = true, env = "NLSHIFT_TOL_TRACE")]
    tol_trace: Option<f64>,
    #[arg(long, global = true, env = "NLSHIFT_TOL_PSD")]
    tol_psd: Option<f64>,
    #[arg(long, global = true, env = "NLSHIFT_TOL_CYCLIC")]
    tol_cyclic: Option<f64>,
    /// Relative eigenvalue gap below which ρ_B eigenvalues are merged.
    #[arg(long, global = true, env = "NLSHIFT_EPS_DEG")]
    eps_deg: Option<f64>,
    /// Margin above 1/√2 required to report a bound violation.
    #[arg(long, global = true, env = "NLSHIFT_TOL_BOUND")]
    tol_bound: Option<f64>,
    /// json or csv; scan defaults to csv, everything else to json.
    #[arg(long, global = true, env = "NLSHIFT_FORMAT", value_enum)]
    format: Option<Format>,
    /// Write to this file instead of stdout.
    #[arg(long, global = true, env = "NLSHIFT_OUT")]
    out: Option<PathBuf>,
    /// Worker threads for parallel sections.
    #[arg(long, global = true, env = "NLSHIFT_WORKERS")]
    workers: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Bloch vectors and correlation matrix.
    Decompose(StateArg),
    /// Maximal shift over all cyclic unitaries.
    Dmax(StateArg),
    /// Separability diagnostics.
    Detect(StateArg),
    /// d_max and PPT over a family of states.
    Scan {
        #[arg(long, env = "NLSHIFT_FAMILY", value_enum)]
        family: Family,
        #[arg(long, env = "NLSHIFT_COUNT", default_value_t = 100)]
        count: usize,
    },
    /// Two-stage CHSH protocol for U = exp(iφ/2 u·σ) on B.
    Chsh {
        #[command(flatten)]
        state: StateArg,
        #[arg(long, env = "NLSHIFT_PHI", allow_negative_numbers = true)]
        phi: f64,
        /// x, y, z or ux,uy,uz.
        #[arg(long, env = "NLSHIFT_AXIS", default_value = "z")]
        axis: String,
    },
}

#[derive(Args, Debug)]
struct StateArg {
    /// JSON file or builtin: bell, singlet, schmidt:k1[:k2], werner:p, cc5050, maxmixed[:NAxNB].
    #[arg(long, env = "NLSHIFT_STATE")]
    state: String,
}

impl Common {
    fn config(&self) -> RunConfig {
        let mut cfg = RunConfig {
            seed: self.seed,
            restarts: self.restarts,
            max_iters: self.max_iters,
            format: self.format,
            workers: self.workers,
            ..RunConfig::default()
        };
        let t = &mut cfg.tolerances;
        let set = |slot: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *slot = v;
            }
        };
        set(&mut t.herm, self.tol_herm);
        set(&mut t.trace, self.tol_trace);
        set(&mut t.psd, self.tol_psd);
        set(&mut t.cyclic, self.tol_cyclic);
        set(&mut t.eps_deg, self.eps_deg);
        set(&mut t.bound, self.tol_bound);
        cfg
    }
}

#[derive(Serialize)]
struct DecomposeOut {
    dims: [usize; 2],
    r_a: Vec<f64>,
    r_b: Vec<f64>,
    beta: nlshift::RealMatrix<f64>,
    norms: Norms,
}

#[derive(Serialize)]
struct Norms {
    r_a: f64,
    r_b: f64,
    beta: f64,
}

fn json_only(cfg: &RunConfig, what: &str) -> CliResult<()> {
    match cfg.format {
        Some(Format::Csv) => Err(CliError::Input(format!(
            "{what} only supports --format json"
        ))),
        _ => Ok(()),
    }
}

fn run(cmd: &Command, cfg: &RunConfig) -> CliResult<String> {
    match cmd {
        Command::Decompose(s) => {
            json_only(cfg, "decompose")?;
            let state = load_state(&s.state, &cfg.tolerances)?;
            let form = BlochForm::of(&state)?;
            let (na, nb) = form.dims;
            to_json(&DecomposeOut {
                dims: [na, nb],
                norms: Norms {
                    r_a: norm(&form.r_a),
                    r_b: norm(&form.r_b),
                    beta: form.beta.frobenius_norm(),
                },
                r_a: form.r_a,
                r_b: form.r_b,
                beta: form.beta,
            })
        }
        Command::Dmax(s) => {
            json_only(cfg, "dmax")?;
            let state = load_state(&s.state, &cfg.tolerances)?;
            to_json(&d_max_with(&state, &cfg.dmax_options())?)
        }
        Command::Detect(s) => {
            json_only(cfg, "detect")?;
            let state = load_state(&s.state, &cfg.tolerances)?;
            to_json(&detect_with(&state, &cfg.dmax_options())?)
        }
        Command::Scan { family, count } => {
            let report = scan(*family, *count, cfg)?;
            match cfg.format.unwrap_or(Format::Csv) {
                Format::Csv => Ok(scan_csv(&report)),
                Format::Json => to_json(&report),
            }
        }
        Command::Chsh { state, phi, axis } => {
            json_only(cfg, "chsh")?;
            let rho = load_state(&state.state, &cfg.tolerances)?;
            if rho.dims() != (2, 2) {
                return Err(CliError::Input("chsh needs a two-qubit state".into()));
            }
            if !phi.is_finite() {
                return Err(CliError::Input("--phi must be finite".into()));
            }
            let u = expm_i_hermitian(&pauli_dot(&parse_axis(axis)?), phi / 2.0)?;
            let cu = CyclicUnitary::from_unitary(&rho, u, &cfg.tolerances)?;
            let opts = ProtocolOptions {
                seed: cfg.seed,
                tolerances: cfg.tolerances,
                ..ProtocolOptions::default()
            };
            to_json(&protocol_run_with(&rho, &cu, &opts)?)
        }
    }
}

fn emit(text: &str, out: Option<&PathBuf>) -> CliResult<()> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display()))),
        None => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Input(format!("cannot write to stdout: {e}"))),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = cli.common.config();
    let result = cfg.validate().and_then(|()| {
        let work = || run(&cli.command, &cfg).and_then(|text| emit(&text, cli.common.out.as_ref()));
        match cfg.workers {
            Some(n) => rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Internal(format!("thread pool: {e}")))?
                .install(work),
            None => work(),
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("nlshift: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
