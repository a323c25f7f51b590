//! Argument parsing and dispatch.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::commands::{self, Overrides};
use crate::emit::{emit, Format, ResultBundle};
use crate::{CliError, EXIT_OK, EXIT_VALIDATION};

#[derive(Debug, Parser)]
#[command(name = "interarea", version, about = "Inter-area oscillation analysis of linearized power networks")]
pub struct Cli {
    /// Write one file per table or plot into this directory instead of stdout.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "csv")]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone, Default)]
pub struct OverrideArgs {
    /// Integration step (s).
    #[arg(long)]
    pub step: Option<f64>,
    /// Simulated time (s).
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Eigenvalues with modulus below this count as zero.
    #[arg(long)]
    pub zero_tol: Option<f64>,
    /// Participation threshold for dominant states, in (0, 1].
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Accept a step above the stability guideline.
    #[arg(long)]
    pub allow_large_step: bool,
}

impl From<&OverrideArgs> for Overrides {
    fn from(a: &OverrideArgs) -> Self {
        Overrides {
            step: a.step,
            horizon: a.horizon,
            zero_tol: a.zero_tol,
            threshold: a.threshold,
            allow_large_step: a.allow_large_step,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Eigenvalues, mode classes and dominant states.
    Eig {
        /// Built-in name or path to a scenario JSON file.
        #[arg(long)]
        scenario: String,
        #[command(flatten)]
        overrides: OverrideArgs,
    },
    /// Participation matrix and states above the threshold.
    Participation {
        #[arg(long)]
        scenario: String,
        #[command(flatten)]
        overrides: OverrideArgs,
    },
    /// Compare the connected system with its tie-disconnected variant.
    ModesCompare {
        #[arg(long)]
        scenario: String,
        #[command(flatten)]
        overrides: OverrideArgs,
    },
    /// Time-domain simulation; repeat --scenario to overlay runs.
    Simulate {
        #[arg(long, required = true)]
        scenario: Vec<String>,
        #[command(flatten)]
        overrides: OverrideArgs,
    },
    /// Interconnection-mode frequency against a parameter.
    Sweep {
        #[arg(long)]
        scenario: String,
        /// `lines.<from>-<to>.reactance` or `generators.<bus>.inertia`.
        #[arg(long)]
        param: String,
        /// `a,b,c` or `start:stop:count`.
        #[arg(long, allow_hyphen_values = true)]
        values: String,
        #[command(flatten)]
        overrides: OverrideArgs,
    },
    /// Force the system at its interconnection frequency and away from it.
    Resonance {
        #[arg(long)]
        scenario: String,
        /// Input bus; defaults to the first generator of the first area.
        #[arg(long)]
        bus: Option<u32>,
        #[arg(long, default_value_t = 0.1, allow_hyphen_values = true)]
        amplitude: f64,
        #[command(flatten)]
        overrides: OverrideArgs,
    },
    /// Names of the built-in scenarios.
    ListScenarios,
}

pub fn execute(cli: &Cli) -> Result<ResultBundle, CliError> {
    match &cli.command {
        Command::Eig { scenario, overrides } => commands::cmd_eig(&commands::load(scenario, &overrides.into())?),
        Command::Participation { scenario, overrides } => {
            commands::cmd_participation(&commands::load(scenario, &overrides.into())?)
        }
        Command::ModesCompare { scenario, overrides } => {
            commands::cmd_modes_compare(&commands::load(scenario, &overrides.into())?)
        }
        Command::Simulate { scenario, overrides } => {
            let o: Overrides = overrides.into();
            let list = scenario.iter().map(|s| commands::load(s, &o)).collect::<Result<Vec<_>, _>>()?;
            commands::cmd_simulate(&list)
        }
        Command::Sweep {
            scenario,
            param,
            values,
            overrides,
        } => {
            let s = commands::load(scenario, &overrides.into())?;
            commands::cmd_sweep(&s, param, &commands::parse_values(values)?)
        }
        Command::Resonance {
            scenario,
            bus,
            amplitude,
            overrides,
        } => commands::cmd_resonance(&commands::load(scenario, &overrides.into())?, *bus, *amplitude),
        Command::ListScenarios => commands::cmd_list_scenarios(),
    }
}

/// Parses `args`, runs the command and writes results. Returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK {
                stdout.write_all(text.as_bytes())
            } else {
                stderr.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let result = execute(&cli).and_then(|bundle| {
        emit(&bundle, cli.format, cli.out.as_deref(), stdout)?;
        Ok(bundle)
    });
    match result {
        Ok(bundle) => {
            for line in &bundle.summary {
                let _ = writeln!(stderr, "{line}");
            }
            EXIT_OK
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
