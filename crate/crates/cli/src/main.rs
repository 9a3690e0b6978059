mod commands;
mod fixture_project;
mod project;

use std::io::IsTerminal;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ColorChoice, CommandFactory, FromArgMatches, Parser, Subcommand};

use commands::Ctx;
use project::Project;

/// An error in how the tool was invoked rather than in the models.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Debug, Clone, Copy)]
pub struct Style {
    color: bool,
}

impl Style {
    fn paint(&self, code: &str, s: &str) -> String {
        if self.color {
            format!("\x1b[{code}m{s}\x1b[0m")
        } else {
            s.to_string()
        }
    }

    pub fn good(&self, s: &str) -> String {
        self.paint("32", s)
    }

    pub fn bad(&self, s: &str) -> String {
        self.paint("31", s)
    }

    pub fn warn(&self, s: &str) -> String {
        self.paint("33", s)
    }
}

#[derive(Parser)]
#[command(
    name = "opetri",
    version,
    about = "Compose, stratify, simulate and calibrate compartmental models"
)]
struct Cli {
    /// Project file naming the resources commands refer to.
    #[arg(long, global = true, value_name = "FILE")]
    project: Option<PathBuf>,
    /// Directory for written artifacts.
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    out: PathBuf,
    /// Seed for tie-breaking in the optimizer.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check resources for well-formedness (all of them by default).
    Validate { names: Vec<String> },
    /// List the resources of a project.
    List,
    /// Compose open nets along a wiring diagram.
    Compose {
        uwd: String,
        /// BOX=MODEL pairs; unlisted boxes use the model named like the box.
        bindings: Vec<String>,
        #[arg(long)]
        name: Option<String>,
    },
    /// Stratify one typed net by another.
    Stratify {
        left: String,
        right: String,
        #[arg(long)]
        name: Option<String>,
    },
    /// Check a typing: TYPED_NET, or NET TYPING TYPE_NET.
    Typecheck {
        #[arg(num_args = 1..=3, required = true)]
        args: Vec<String>,
    },
    /// Run a simulation and write its trajectory as CSV.
    Simulate { name: String },
    /// Fit rates and initial values to a dataset.
    Calibrate { name: String },
    /// Finite-difference sensitivities of an outcome to every rate.
    Sensitivity { name: String },
    /// Write a Graphviz rendering of a net.
    ExportDot {
        name: String,
        /// Show rates under transition names.
        #[arg(long)]
        rates: bool,
    },
    /// Write the example project into --out.
    Fixtures,
}

fn color_enabled() -> bool {
    match std::env::var("OPETRI_COLOR").as_deref() {
        Ok("0") => false,
        Ok("1") => true,
        _ => std::io::stdout().is_terminal(),
    }
}

fn run(cli: Cli, style: Style) -> anyhow::Result<bool> {
    if let Command::Fixtures = cli.command {
        commands::fixtures(&cli.out)?;
        return Ok(true);
    }
    let path = cli
        .project
        .ok_or_else(|| UsageError("this command needs --project FILE".into()))?;
    let ctx = Ctx {
        project: Project::load(&path)?,
        out: cli.out,
        seed: cli.seed,
        style,
    };
    match cli.command {
        Command::Validate { names } => return commands::validate(&ctx, &names),
        Command::List => commands::list(&ctx),
        Command::Compose {
            uwd,
            bindings,
            name,
        } => commands::compose(&ctx, &uwd, &bindings, name.as_deref())?,
        Command::Stratify { left, right, name } => {
            commands::stratify(&ctx, &left, &right, name.as_deref())?
        }
        Command::Typecheck { args } => return commands::typecheck(&ctx, &args),
        Command::Simulate { name } => commands::simulate_cmd(&ctx, &name)?,
        Command::Calibrate { name } => commands::calibrate_cmd(&ctx, &name)?,
        Command::Sensitivity { name } => commands::sensitivity_cmd(&ctx, &name)?,
        Command::ExportDot { name, rates } => commands::export_dot(&ctx, &name, rates)?,
        Command::Fixtures => unreachable!(),
    }
    Ok(true)
}

fn main() -> ExitCode {
    let style = Style {
        color: color_enabled(),
    };
    let choice = if style.color {
        ColorChoice::Auto
    } else {
        ColorChoice::Never
    };
    let matches = Cli::command().color(choice).get_matches();
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    match run(cli, style) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("{} {e:#}", style.bad("error:"));
            if e.chain().any(|c| c.is::<UsageError>()) {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
