mod commands;
mod input;
mod output;
mod verify;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use output::Format;
use voatheta::Error;

#[derive(Parser, Debug)]
#[command(name = "voatheta", version, about = "q-expansions, evaluations and modular transformation checks for lattice theta functions")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Truncation order (rational); default 100, or the order stored in a task file.
    #[arg(long, global = true)]
    pub order: Option<String>,
    /// Evaluation point, e.g. `i`, `2i`, `0.1+1.2i`, `1/3+i`.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub tau: Option<String>,
    /// `;`-separated evaluation points.
    #[arg(long = "tau-list", global = true, allow_hyphen_values = true)]
    pub tau_list: Option<String>,
    /// Evaluate the series numerically instead of printing it.
    #[arg(long, global = true)]
    pub eval: bool,
    #[arg(long, global = true, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, global = true, value_enum, default_value = "text")]
    pub format: Format,
    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Cap on exponent denominators (overrides VOATHETA_MAX_DEN).
    #[arg(long = "max-den", global = true)]
    pub max_den: Option<u64>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct LatticeArgs {
    /// Lattice JSON file (`{"gram": [["2"]]}`).
    #[arg(long)]
    pub lattice: Option<PathBuf>,
    /// Inline Gram matrix, rows split by `;`, e.g. `2,1;1,2`.
    #[arg(long, allow_hyphen_values = true)]
    pub gram: Option<String>,
}

#[derive(Subcommand, Debug)]
pub enum Cmd {
    /// Powers of the Dedekind eta function.
    Eta {
        #[arg(long, default_value_t = 1, allow_hyphen_values = true)]
        power: i64,
    },
    /// Normalized Eisenstein series E_k.
    Eisenstein {
        #[arg(long)]
        weight: i64,
    },
    /// Laurent expansion of the Weierstrass function wp_k in z.
    Wp {
        #[arg(long, default_value_t = 2)]
        k: i64,
        /// Point z for --eval.
        #[arg(long, allow_hyphen_values = true)]
        z: Option<String>,
        #[arg(long = "z-order", default_value_t = 20)]
        z_order: i64,
    },
    /// Theta series of a lattice coset with characteristics.
    ThetaLattice {
        #[command(flatten)]
        lat: LatticeArgs,
        #[arg(long, allow_hyphen_values = true)]
        shift: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        u: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        v: Option<String>,
    },
    /// Plain trace function of a lattice module.
    Trace {
        #[command(flatten)]
        lat: LatticeArgs,
        #[arg(long, allow_hyphen_values = true)]
        shift: Option<String>,
        /// `vacuum`, `omega`, `h:<vector>` or `hk:<vector>;<vector>`.
        #[arg(long, default_value = "vacuum")]
        insertion: String,
    },
    /// Generalized theta function of a task file.
    Ztheta {
        #[arg(long)]
        task: PathBuf,
        /// Cross-check against a literal Fock-space trace.
        #[arg(long)]
        oracle: bool,
    },
    /// eta^d times the generalized theta function.
    Xtrace {
        #[arg(long)]
        task: PathBuf,
    },
    /// Modular S and T matrices of an even lattice.
    StMatrices {
        #[command(flatten)]
        lat: LatticeArgs,
    },
    /// Sweep a transformation law over rho and tau.
    Verify(VerifyArgs),
    /// Split a coset theta series into K-classes.
    Decompose {
        /// Coset frame JSON (`L`, `K`, `embedding`, `shifts`); default: dual of [[2]].
        #[arg(long)]
        frame: Option<PathBuf>,
        #[arg(long = "shift-index")]
        shift_index: Option<usize>,
    },
    /// Fit S on the decomposition multiplicities and report the residual.
    ProbeClosure {
        #[arg(long)]
        frame: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Law {
    Eta,
    Eisenstein,
    Wp,
    Main,
    Corollary,
    #[value(name = "coset-T")]
    CosetT,
    #[value(name = "coset-S")]
    CosetS,
    Zhu,
}

#[derive(Args, Debug, Clone)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    pub law: Law,
    /// `S,T,ST` or `;`-separated matrices `a,b,c,d`.
    #[arg(long, allow_hyphen_values = true)]
    pub rho: Option<String>,
    /// Task file(s) for the main law.
    #[arg(long)]
    pub task: Vec<PathBuf>,
    #[command(flatten)]
    pub lat: LatticeArgs,
    #[arg(long, allow_hyphen_values = true)]
    pub shift: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub u: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub v: Option<String>,
    #[arg(long, default_value = "vacuum")]
    pub insertion: String,
    /// Eisenstein weight.
    #[arg(long, default_value_t = 4)]
    pub weight: i64,
    /// Weierstrass index.
    #[arg(long, default_value_t = 2)]
    pub k: i64,
    #[arg(long, default_value = "0.1", allow_hyphen_values = true)]
    pub z: String,
    #[arg(long = "z-order", default_value_t = 20)]
    pub z_order: i64,
    #[arg(long)]
    pub frame: Option<PathBuf>,
    /// Zhu check: vector inserted at z.
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<String>,
    /// Zhu check: vector inserted at x.
    #[arg(long, allow_hyphen_values = true)]
    pub b: Option<String>,
    #[arg(long = "q-order", default_value = "3")]
    pub q_order: String,
    #[arg(long = "w-order", default_value_t = 2)]
    pub w_order: i64,
}

#[derive(Debug)]
pub enum Failure {
    Core(Error),
    OracleMismatch(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::OracleMismatch(_) => 4,
            Failure::Core(Error::TailBoundExceeded { .. }) => 3,
            Failure::Core(Error::BasisTooLarge { .. }) => 5,
            Failure::Core(_) => 2,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Core(e) => write!(f, "{e}"),
            Failure::OracleMismatch(m) => write!(f, "oracle mismatch: {m}"),
        }
    }
}

/// Printed result; `ok = false` means a verification failed.
pub struct Outcome {
    pub json: serde_json::Value,
    pub text: String,
    pub ok: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(out) => {
            let body = match cli.common.format {
                Format::Json => serde_json::to_string_pretty(&out.json).expect("json"),
                Format::Text => out.text,
            };
            // a closed pipe is not an error for a batch tool
            let _ = writeln!(std::io::stdout().lock(), "{body}");
            if out.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.exit_code())
        }
    }
}
