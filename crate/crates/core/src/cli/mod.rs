//! Command-line front end. Exit codes: 0 pass, 1 verification failure,
//! 2 usage or input error.

mod commands;
mod input;
mod output;

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::ffi::OsString;
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "joyce", version, about = "Joyce structures from BPS data")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Tolerance override for verification commands.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Seed for sampled points.
    #[arg(long, global = true, default_value_t = 20240501)]
    pub seed: u64,
    /// Cutoff on |Z(γ)| for infinite spectra.
    #[arg(long, global = true)]
    pub cutoff: Option<f64>,
    /// Parameters as inline JSON or a path to a JSON file.
    #[arg(long, global = true)]
    pub params: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// BPS structures: classification, doubling and ray diagrams.
    #[command(subcommand)]
    Bps(BpsCmd),
    /// BPS automorphisms of the twisted torus.
    #[command(subcommand)]
    Wallcrossing(WallCmd),
    /// Special functions.
    #[command(subcommand)]
    Specfn(SpecfnCmd),
    /// Riemann-Hilbert solutions.
    #[command(subcommand)]
    Rh(RhCmd),
    /// Joyce functions and their linear data.
    #[command(subcommand)]
    Joyce(JoyceCmd),
    /// Frobenius structures and compatibility.
    #[command(subcommand)]
    Frobenius(FrobeniusCmd),
    /// The A2 quiver through the cubic y² = x³ + ax + b.
    #[command(subcommand)]
    A2(A2Cmd),
    /// Acceptance suites.
    #[command(subcommand)]
    Verify(VerifyCmd),
}

#[derive(Debug, Subcommand)]
pub enum BpsCmd {
    /// Classification flags and the table of invariants.
    Show { file: PathBuf },
    /// The doubled structure on Γ ⊕ Γ∨.
    Double {
        file: PathBuf,
        /// Central charges of the dual basis, "re,im;re,im;...". Zero by default.
        #[arg(long, allow_hyphen_values = true)]
        dual: Option<String>,
    },
    /// Active rays with their classes and |Z|.
    Rays { file: PathBuf },
}

#[derive(Debug, Args)]
pub struct PointArg {
    /// Log coordinates of the torus point as a JSON list of [re, im].
    #[arg(long, allow_hyphen_values = true)]
    pub point: String,
    /// Read the point as untwisted.
    #[arg(long)]
    pub untwisted: bool,
}

#[derive(Debug, Subcommand)]
pub enum WallCmd {
    /// Applies the automorphism of one active ray.
    Apply {
        file: PathBuf,
        /// Direction of the ray, "re,im" or an angle in radians.
        #[arg(long, allow_hyphen_values = true)]
        ray: String,
        #[command(flatten)]
        point: PointArg,
    },
    /// Ordered product over the active rays of a convex sector.
    Sector {
        file: PathBuf,
        /// Start angle in radians.
        #[arg(long, allow_hyphen_values = true)]
        from: f64,
        /// End angle in radians.
        #[arg(long, allow_hyphen_values = true)]
        to: f64,
        #[arg(long)]
        clockwise: bool,
        #[command(flatten)]
        point: PointArg,
    },
    /// The pentagon identity at random points.
    Pentagon {
        #[arg(long, default_value_t = 50)]
        samples: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SpecialFn {
    Lambda,
    Li,
    #[value(name = "F")]
    F,
    #[value(name = "G")]
    G,
    #[value(name = "Fstar")]
    Fstar,
    #[value(name = "Gstar")]
    Gstar,
}

#[derive(Debug, Subcommand)]
pub enum SpecfnCmd {
    /// Evaluates one function. Arguments are "re,im" or reals.
    Eval {
        #[arg(long = "fn", value_enum)]
        function: SpecialFn,
        #[arg(long, allow_hyphen_values = true)]
        w: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        eta: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        k: Option<u32>,
        #[arg(long, allow_hyphen_values = true)]
        x: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        z: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        w1: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        w2: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        v: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        theta: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        phi: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        hbar: Option<String>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    A1,
    Uncoupled,
    Conifold,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RhCheck {
    Jumps,
    Asymptotics,
    Hessian,
}

#[derive(Debug, Subcommand)]
pub enum RhCmd {
    /// X values of the solution on a grid of ħ along a ray.
    Solve {
        #[arg(long, value_enum)]
        family: Family,
        /// "ring:rmin,rmax,n": n moduli spaced geometrically along the ray.
        #[arg(long, default_value = "ring:0.05,2,8")]
        hbar_grid: String,
        /// Ray direction, "re,im" or an angle. A non-active ray by default.
        #[arg(long, allow_hyphen_values = true)]
        ray: Option<String>,
    },
    /// Jump relations, asymptotics or Hessian extraction.
    Verify {
        #[arg(long, value_enum)]
        family: Family,
        #[arg(long, value_enum)]
        which: RhCheck,
        #[arg(long, allow_hyphen_values = true)]
        ray: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        hbar: Option<String>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    A1,
    Uncoupled,
    Conifold,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long, value_enum, default_value_t = ModelKind::A1)]
    pub model: ModelKind,
    /// Structure file for the uncoupled model.
    #[arg(long)]
    pub structure: Option<PathBuf>,
    /// Use the doubled model on Γ ⊕ Γ∨.
    #[arg(long)]
    pub doubled: bool,
    /// Base point "re,im;re,im;...".
    #[arg(long, allow_hyphen_values = true)]
    pub z: Option<String>,
    /// Fibre point "re,im;...", zero by default.
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum JoyceCmd {
    /// The Joyce form g and the rest of the linear data.
    Form(ModelArgs),
    /// The diamond product.
    Diamond(ModelArgs),
    /// Diamond associativity of the uncoupled model of a structure.
    Wdvv {
        file: PathBuf,
        /// Sample points "re,im;re,im|re,im;re,im".
        #[arg(long, allow_hyphen_values = true)]
        samples: Option<String>,
    },
    /// Prepotential value and third derivatives against T.
    Prepotential(ModelArgs),
    /// Residual of the Plebański-type equation.
    Pde(ModelArgs),
    /// Fibre Hessian.
    Hessian(ModelArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CompatModel {
    A1,
    A2,
}

#[derive(Debug, Subcommand)]
pub enum FrobeniusCmd {
    /// Tensors of the A2 Frobenius structure at a point.
    A2 {
        /// "a,b" with real entries or "[re,im],[re,im]".
        #[arg(long, allow_hyphen_values = true)]
        at: String,
    },
    /// Compatibility of a Joyce structure with a Frobenius structure.
    Compat {
        #[arg(long, value_enum, default_value_t = CompatModel::A1)]
        model: CompatModel,
    },
}

#[derive(Debug, Args)]
pub struct A2Args {
    #[arg(long, allow_hyphen_values = true)]
    pub a: String,
    #[arg(long, allow_hyphen_values = true)]
    pub b: String,
    #[arg(long, allow_hyphen_values = true)]
    pub q: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub r: Option<String>,
    /// Values of ħ, "re,im;re,im".
    #[arg(long, allow_hyphen_values = true)]
    pub hbar: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum A2Cmd {
    Periods(A2Args),
    Spectrum(A2Args),
    /// The Joyce function and θ coordinates at (a, b, q, r).
    Joyce(A2Args),
    VerifyFlows(A2Args),
    JoyceForm(A2Args),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Desk,
}

#[derive(Debug, Subcommand)]
pub enum VerifyCmd {
    /// Runs the acceptance criteria.
    All {
        #[arg(long, value_enum, default_value_t = Suite::Desk)]
        suite: Suite,
        /// Comma-separated criterion numbers.
        #[arg(long, value_delimiter = ',')]
        only: Vec<u8>,
        /// Multiplies every tolerance of the suite.
        #[arg(long, default_value_t = 1.0)]
        tol_scale: f64,
    },
}

pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match commands::dispatch(&cli) {
        Ok(outcome) => match output::emit(&outcome.value, &cli.common) {
            Ok(()) => {
                if outcome.pass == Some(false) {
                    1
                } else {
                    0
                }
            }
            Err(e) => {
                eprintln!("{}", e.message());
                2
            }
        },
        Err(e) => {
            eprintln!("{}", e.message());
            2
        }
    }
}
