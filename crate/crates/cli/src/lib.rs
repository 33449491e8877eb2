//! Recipe-driven runner behind the `sshh` binary.
//!
//! ```text
//! sshh --config trions.toml --out results/          # run
//! sshh --config trions.toml --validate              # diagnostics only
//! sshh --replay results/berry.csv --out again/    # rerun from a header
//! ```
//!
//! Exit status: 0 success, 1 I/O, 2 schema, 3 capacity, 4 gap closure or
//! band identification, 5 numerical failure. Failures also print a one-line
//! JSON record on stderr.

pub mod error;
pub mod output;
pub mod recipe;
pub mod run;
pub mod validate;

use std::path::PathBuf;

use clap::Parser;

pub use error::CliError;
pub use output::{Artifact, Table};
pub use recipe::{Format, Recipe};

#[derive(Debug, Parser)]
#[command(name = "sshh", version, about = "SU(N) SSH-Hubbard experiments from TOML recipes")]
pub struct Cli {
    /// Recipe file (TOML).
    #[arg(long, value_name = "FILE", required_unless_present = "replay", conflicts_with = "replay")]
    pub config: Option<PathBuf>,
    /// Rerun the recipe stored in the header of an output file.
    #[arg(long, value_name = "FILE")]
    pub replay: Option<PathBuf>,
    /// Overrides the recipe seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads.
    #[arg(long, env = "SSHH_THREADS")]
    pub threads: Option<usize>,
    /// Output directory.
    #[arg(long, value_name = "DIR", default_value = ".")]
    pub out: PathBuf,
    /// Overrides the recipe format.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Print diagnostics as JSON and exit without running.
    #[arg(long)]
    pub validate: bool,
}

/// What a successful invocation did.
#[derive(Debug)]
pub enum Outcome {
    Written(Vec<PathBuf>),
    Diagnostics(validate::Diagnostics),
}

/// Parse and resolve the recipe named on the command line.
pub fn load_recipe(cli: &Cli) -> Result<Recipe, CliError> {
    let mut recipe = match (&cli.config, &cli.replay) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            Recipe::from_toml(&text)?
        }
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            output::recipe_from_artifact(&text)?
        }
        (None, None) => return Err(CliError::Schema("either --config or --replay is required".into())),
    };
    if let Some(seed) = cli.seed {
        recipe.set_seed(seed);
    }
    if let Some(format) = cli.format {
        recipe.format = format;
    }
    Ok(recipe)
}

pub fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    let recipe = load_recipe(cli)?;
    if cli.validate {
        return Ok(Outcome::Diagnostics(validate::validate(&recipe)));
    }
    let artifact = run::run(&recipe)?;
    artifact.write(&cli.out, recipe.format).map(Outcome::Written)
}

/// Size the global rayon pool; only the first call has an effect.
pub fn configure_threads(threads: Option<usize>) -> Result<(), CliError> {
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::Schema("--threads must be at least 1".into()));
        }
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}
