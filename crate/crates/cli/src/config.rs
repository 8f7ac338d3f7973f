use std::path::PathBuf;

use clap::{Args, ValueEnum};

use crate::error::CliError;

pub const MAX_JET_ORDER: usize = 12;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Text,
    Csv,
    Json,
}

/// Options shared by every subcommand.
#[derive(Clone, Debug, Args)]
pub struct CliConfig {
    /// Truncation tolerance used when building levels.
    #[arg(long, global = true, default_value_t = 1e-10)]
    pub tolerance: f64,
    /// Default jet order for derivative work (at most 12).
    #[arg(long, global = true, default_value_t = 6)]
    pub jet_order: usize,
    /// Highest level that may be built.
    #[arg(long, global = true, default_value_t = 4)]
    pub max_level: usize,
    /// Cap on the depth of every infinite composition.
    #[arg(long, global = true, default_value_t = 256)]
    pub depth_cap: usize,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Where built level constants are cached.
    #[arg(long, global = true, env = "HYPEROP_CACHE_DIR")]
    pub cache_dir: Option<PathBuf>,
}

impl CliConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.tolerance > 0.0 && self.tolerance < 1.0) {
            return Err(CliError::Usage(format!("--tolerance must lie in (0, 1), got {}", self.tolerance)));
        }
        if self.jet_order > MAX_JET_ORDER {
            return Err(CliError::Usage(format!("--jet-order must be at most {MAX_JET_ORDER}, got {}", self.jet_order)));
        }
        if self.max_level < 1 {
            return Err(CliError::Usage("--max-level must be at least 1".into()));
        }
        if self.depth_cap < 2 {
            return Err(CliError::Usage("--depth-cap must be at least 2".into()));
        }
        Ok(())
    }

    pub fn tower_config(&self) -> hyperop::TowerConfig {
        hyperop::TowerConfig { tolerance: self.tolerance, depth_cap: self.depth_cap }
    }
}
