use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use gjtheta::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Genus accounting of a curve (and period data, if given).
    Validate,
    /// Generalized theta at a point, in a chart.
    ThetaEval,
    /// Abel map along a path of points.
    AbelMap,
    /// Zeros of the translated pulled-back section.
    Zeros,
    /// Abel-theorem verification over seeded random shifts.
    Verify,
    /// Quasi-periodicity residual table.
    Lemmas,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::ThetaEval => "theta-eval",
            Command::AbelMap => "abel-map",
            Command::Zeros => "zeros",
            Command::Verify => "verify",
            Command::Lemmas => "lemmas",
        }
    }
}

/// Generalized Jacobians and theta functions of singular curves.
///
/// Complex values are written `re` or `re,im`; lists separate entries
/// with `;`; points of the Riemann sphere may also be `inf`.
#[derive(Debug, Parser)]
#[command(name = "gjtheta", version)]
pub struct Cli {
    /// Command to run (may also be given with --command).
    #[arg(value_enum)]
    pub command: Option<Command>,

    #[arg(long = "command", value_enum, value_name = "COMMAND")]
    pub command_flag: Option<Command>,

    /// Curve document.
    #[arg(long, short)]
    pub input: PathBuf,

    /// Report destination (standard output if absent).
    #[arg(long, short)]
    pub output: Option<PathBuf>,

    /// CSV destination for `verify` (defaults to the output path with a
    /// `.csv` extension).
    #[arg(long)]
    pub csv: Option<PathBuf>,

    /// Period-data document; required for base genus 2 and above.
    #[arg(long)]
    pub periods: Option<PathBuf>,

    /// Number of random shifts (`verify`) or sample points (`lemmas`).
    #[arg(long, default_value_t = 10)]
    pub shifts: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Truncation target for theta series.
    #[arg(long)]
    pub eps: Option<f64>,

    /// Chart: `U0`, `U1` or `x:0,1;z:2` (indices of coordinates in U1).
    #[arg(long)]
    pub chart: Option<String>,

    /// Point of the desingularization.
    #[arg(long, allow_hyphen_values = true)]
    pub point: Option<String>,

    /// Abel-map coordinates given directly, instead of --point.
    #[arg(long = "exp-xi", allow_hyphen_values = true)]
    pub exp_xi: Option<String>,

    #[arg(long, allow_hyphen_values = true)]
    pub zeta: Option<String>,

    #[arg(long, allow_hyphen_values = true)]
    pub z: Option<String>,

    /// Shift: multiplicative parameters.
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<String>,

    /// Shift: additive parameters.
    #[arg(long, allow_hyphen_values = true)]
    pub b: Option<String>,

    /// Shift: translation of the theta argument.
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<String>,

    /// Vertices of the path for `abel-map`.
    #[arg(long, allow_hyphen_values = true)]
    pub path: Option<String>,

    /// Intermediate points per path segment.
    #[arg(long, default_value_t = 0)]
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ShiftSource {
    Random {
        count: usize,
        seed: u64,
    },
    Explicit {
        a: Option<String>,
        b: Option<String>,
        lambda: Option<String>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub input_path: PathBuf,
    pub output_path: Option<PathBuf>,
    pub csv_path: Option<PathBuf>,
    pub periods_path: Option<PathBuf>,
    pub shifts: ShiftSource,
    pub seed: u64,
    pub count: usize,
    pub eps: Option<f64>,
    pub chart: Option<String>,
    pub point: Option<String>,
    pub abel: [Option<String>; 3],
    pub path: Option<String>,
    pub steps: usize,
}

impl TryFrom<Cli> for RunConfig {
    type Error = Error;

    fn try_from(cli: Cli) -> Result<Self> {
        let command = match (cli.command, cli.command_flag) {
            (Some(a), Some(b)) if a != b => {
                return Err(Error::Parse {
                    field: "command".into(),
                    message: format!("`{}` and --command {} disagree", a.name(), b.name()),
                })
            }
            (Some(c), _) | (None, Some(c)) => c,
            (None, None) => {
                return Err(Error::Parse {
                    field: "command".into(),
                    message: "no command given".into(),
                })
            }
        };
        if let Some(eps) = cli.eps {
            if !(eps > 0.0 && eps < 1.0) {
                return Err(Error::Validation(format!(
                    "--eps must lie in (0, 1), got {eps}"
                )));
            }
        }
        let explicit = cli.a.is_some() || cli.b.is_some() || cli.lambda.is_some();
        let shifts = if explicit {
            ShiftSource::Explicit {
                a: cli.a,
                b: cli.b,
                lambda: cli.lambda,
            }
        } else {
            ShiftSource::Random {
                count: cli.shifts,
                seed: cli.seed,
            }
        };
        let csv_path = cli
            .csv
            .or_else(|| cli.output.as_ref().map(|p| p.with_extension("csv")));
        Ok(RunConfig {
            command,
            input_path: cli.input,
            output_path: cli.output,
            csv_path,
            periods_path: cli.periods,
            shifts,
            seed: cli.seed,
            count: cli.shifts,
            eps: cli.eps,
            chart: cli.chart,
            point: cli.point,
            abel: [cli.exp_xi, cli.zeta, cli.z],
            path: cli.path,
            steps: cli.steps,
        })
    }
}
