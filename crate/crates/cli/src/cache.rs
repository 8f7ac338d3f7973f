//! On-disk cache of built level constants.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use hyperop::{HyperOpLevel, Tower};

use crate::config::CliConfig;
use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;
const FILE_NAME: &str = "levels.json";

#[derive(Debug, Serialize, Deserialize)]
pub struct CacheFile {
    pub schema_version: u32,
    pub tolerance: f64,
    pub depth_cap: usize,
    pub levels: Vec<HyperOpLevel>,
}

fn path(dir: &Path) -> PathBuf {
    dir.join(FILE_NAME)
}

/// Cached levels when the file exists and matches the configuration.
fn load(dir: &Path, cfg: &CliConfig) -> Option<Vec<HyperOpLevel>> {
    let text = fs::read_to_string(path(dir)).ok()?;
    let file: CacheFile = match serde_json::from_str(&text) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("warning: ignoring unreadable cache {}: {e}", path(dir).display());
            return None;
        }
    };
    let matches = file.schema_version == SCHEMA_VERSION && file.tolerance == cfg.tolerance && file.depth_cap == cfg.depth_cap;
    matches.then_some(file.levels)
}

fn store(dir: &Path, cfg: &CliConfig, levels: Vec<HyperOpLevel>) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    let file = CacheFile { schema_version: SCHEMA_VERSION, tolerance: cfg.tolerance, depth_cap: cfg.depth_cap, levels };
    let tmp = dir.join(format!("{FILE_NAME}.tmp"));
    fs::write(&tmp, serde_json::to_string_pretty(&file).expect("cache serializes") + "\n")?;
    fs::rename(tmp, path(dir))
}

/// A tower holding at least levels `1..=k`, reusing and extending the cache.
pub fn tower(cfg: &CliConfig, k: usize) -> Result<Tower, CliError> {
    if k == 0 || k > cfg.max_level {
        return Err(CliError::Usage(format!("level {k} is outside 1..={}", cfg.max_level)));
    }
    let tc = cfg.tower_config();
    let cached = cfg.cache_dir.as_deref().and_then(|d| load(d, cfg));
    let mut tower = match cached {
        Some(levels) => Tower::from_params(tc, levels).or_else(|_| Tower::new(tc))?,
        None => Tower::new(tc)?,
    };
    let before = tower.max_level();
    while tower.max_level() < k {
        tower.build_next().map_err(|e| CliError::Infra(e.to_string()))?;
    }
    if let (Some(dir), true) = (&cfg.cache_dir, tower.max_level() > before) {
        if let Err(e) = store(dir, cfg, tower.params_list()) {
            eprintln!("warning: could not write cache in {}: {e}", dir.display());
        }
    }
    Ok(tower)
}
