use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand};
use vpt_core::asymptotics::{DEFAULT_G_S_ABS, DEFAULT_THETA};
use vpt_core::series::DEFAULT_MAX_ORDER;
use vpt_core::variational::{DEFAULT_C, DEFAULT_CORRECTION, DEFAULT_N_MAX, DEFAULT_TARGET_DIGITS};

#[derive(Parser, Debug)]
#[command(
    name = "vpt",
    version,
    about = "Strong-coupling variational perturbation theory for the quartic oscillator"
)]
#[command(args_override_self = true)]
pub struct Cli {
    /// Flat key=value file; every key is a long flag of the chosen command. Flags on the command line win.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Worker threads for per-order or per-g parallelism (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write the exact weak-coupling coefficients E_0..E_L as a rational CSV.
    Coefficients(CoefficientsArgs),
    /// Strong-coupling approximants alpha_n(N) and the deviation sequence Delta_N.
    Converge(ConvergeArgs),
    /// Locate the singularity of the analytically continued energy by both fits.
    Locate(LocateArgs),
    /// Exact energies against truncated strong-coupling sums on a grid of g.
    Oracle(OracleArgs),
    /// Print the saddle-point and envelope constants.
    Constants(ConstantsArgs),
}

#[derive(Args, Debug, Clone)]
pub struct PrecisionArgs {
    /// Working digits at order zero.
    #[arg(long, default_value_t = 40)]
    pub base_digits: u32,
    /// Extra working digits per order, as a rational.
    #[arg(long, default_value = "2")]
    pub per_order_digits: String,
    /// Factor applied to the working digits on each escalation, as a rational.
    #[arg(long, default_value = "3/2")]
    pub escalation_factor: String,
    #[arg(long, default_value_t = 4)]
    pub max_escalations: u32,
    /// Digits every reported approximant must carry.
    #[arg(long, default_value_t = DEFAULT_TARGET_DIGITS)]
    pub target_digits: u32,
}

#[derive(Args, Debug, Clone)]
pub struct ConstantArgs {
    /// Constant c in sigma_N = c N (1 + kappa N^(-2/3)).
    #[arg(long = "c", default_value = DEFAULT_C)]
    pub c_constant: String,
    /// Constant kappa in sigma_N.
    #[arg(long = "correction", default_value = DEFAULT_CORRECTION)]
    pub correction_constant: String,
}

#[derive(Args, Debug)]
pub struct CoefficientsArgs {
    /// Highest order L.
    #[arg(long)]
    pub order: usize,
    /// Refuse orders above this cap.
    #[arg(long, default_value_t = DEFAULT_MAX_ORDER)]
    pub max_order: usize,
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct ConvergeArgs {
    #[arg(long, default_value_t = 1)]
    pub n_min: usize,
    /// Largest perturbative order N.
    #[arg(long)]
    pub n_max: usize,
    /// Highest strong-coupling coefficient alpha_n per order (capped at N).
    #[arg(long, default_value_t = 0)]
    pub alphas: usize,
    /// Trial frequency choice: formula or stationary.
    #[arg(long, default_value = "formula")]
    pub strategy: String,
    /// Digits of the reference alpha_0 from the exact diagonalization.
    #[arg(long, default_value_t = 40)]
    pub reference_digits: u32,
    #[arg(long, default_value_t = DEFAULT_MAX_ORDER)]
    pub max_order: usize,
    /// Directory receiving approximants.csv and deltas.csv.
    #[arg(long, value_name = "DIR")]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub precision: PrecisionArgs,
    #[command(flatten)]
    pub constants: ConstantArgs,
}

#[derive(Args, Debug)]
pub struct LocateArgs {
    /// Deviation CSV as written by `converge`; computed when absent.
    #[arg(long, value_name = "PATH")]
    pub deltas: Option<PathBuf>,
    /// Approximant CSV; the alphas of its highest order feed the ratio fit. Computed when absent.
    #[arg(long, value_name = "PATH")]
    pub approximants: Option<PathBuf>,
    /// Orders of the computed deviation sequence when no file is given.
    #[arg(long, default_value_t = 39)]
    pub delta_n_min: usize,
    #[arg(long, default_value_t = 121)]
    pub delta_n_max: usize,
    /// Smallest order entering the oscillation fit.
    #[arg(long, default_value_t = 40)]
    pub fit_n_min: usize,
    /// Order at which alpha_0..alpha_n are computed for the ratio fit.
    #[arg(long, default_value_t = 320)]
    pub ratio_order: usize,
    #[arg(long, default_value_t = DEFAULT_N_MAX)]
    pub alphas: usize,
    /// Smallest ratio index entering the ratio fit.
    #[arg(long, default_value_t = 6)]
    pub ratio_n_min: usize,
    /// Fit without the (1,2,1)/4 parity filter.
    #[arg(long, default_value_t = false)]
    pub no_parity_filter: bool,
    /// Coupling g at which the model curves are tabulated.
    #[arg(long, default_value = "4")]
    pub curve_g: String,
    #[arg(long, default_value_t = 40)]
    pub reference_digits: u32,
    #[arg(long, value_name = "DIR")]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub precision: PrecisionArgs,
    #[command(flatten)]
    pub constants: ConstantArgs,
}

#[derive(Args, Debug)]
pub struct OracleArgs {
    /// Comma-separated couplings; a later --g replaces an earlier one.
    #[arg(long, value_delimiter = ',', required = true, action = ArgAction::Set)]
    pub g: Vec<String>,
    #[arg(long, default_value = "1")]
    pub omega: String,
    /// Certified digits of each exact energy.
    #[arg(long, default_value_t = 30)]
    pub digits: u32,
    /// Approximant CSV supplying alpha_n; computed at --alphas-order when absent.
    #[arg(long, value_name = "PATH")]
    pub approximants: Option<PathBuf>,
    #[arg(long, default_value_t = 320)]
    pub alphas_order: usize,
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
    #[command(flatten)]
    pub precision: PrecisionArgs,
    #[command(flatten)]
    pub constants: ConstantArgs,
}

#[derive(Args, Debug)]
pub struct ConstantsArgs {
    #[arg(long, default_value_t = 30)]
    pub digits: u32,
    #[arg(long, default_value = DEFAULT_G_S_ABS)]
    pub g_s_abs: String,
    #[arg(long, default_value = DEFAULT_THETA)]
    pub theta: String,
    #[arg(long = "correction", default_value = DEFAULT_CORRECTION)]
    pub correction_constant: String,
}
