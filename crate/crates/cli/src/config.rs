//! Parameter resolution: command-line flag, then config file, then default.

use std::fmt::Display;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::Deserialize;

/// Keys accepted in a `--config` TOML file. Names match the long flags.
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct FileConfig {
    pub b: Option<f64>,
    pub d: Option<f64>,
    pub lambda: Option<f64>,
    pub mu: Option<f64>,
    pub eps: Option<f64>,
    pub a: Option<String>,
    pub c: Option<String>,
    pub n: Option<u32>,
    pub n_points: Option<usize>,
    pub n_lambda: Option<usize>,
    pub samples: Option<usize>,
    pub ell_max: Option<u32>,
    pub kappa_max: Option<u32>,
    pub side: Option<String>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("--config: cannot read `{}`", path.display()))?;
        toml::from_str(&text).map_err(|e| anyhow!("--config: `{}`: {e}", path.display()))
    }
}

pub fn pick<T>(flag: &str, cli: Option<T>, file: Option<T>, default: Option<T>) -> Result<T> {
    cli.or(file)
        .or(default)
        .ok_or_else(|| anyhow!("missing required flag --{flag}"))
}

pub fn positive(flag: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        bail!("invalid value for --{flag}: {v} (must be positive and finite)")
    }
}

pub fn non_negative(flag: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        bail!("invalid value for --{flag}: {v} (must be non-negative and finite)")
    }
}

pub fn at_least<T: PartialOrd + Display>(flag: &str, v: T, min: T) -> Result<T> {
    if v >= min {
        Ok(v)
    } else {
        bail!("invalid value for --{flag}: {v} (must be at least {min})")
    }
}

pub fn grid_points(v: usize) -> Result<usize> {
    if v >= 5 && v % 2 == 1 {
        Ok(v)
    } else {
        bail!("invalid value for --n-points: {v} (must be odd and at least 5)")
    }
}

/// Fails unless `path` can be created: its directory must exist and be writable.
pub fn check_writable(flag: &str, path: &Path) -> Result<()> {
    let dir: PathBuf = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let meta = std::fs::metadata(&dir)
        .map_err(|e| anyhow!("--{flag}: directory `{}` is not accessible: {e}", dir.display()))?;
    if !meta.is_dir() {
        bail!("--{flag}: `{}` is not a directory", dir.display());
    }
    if meta.permissions().readonly() {
        bail!("--{flag}: directory `{}` is read-only", dir.display());
    }
    if path.is_dir() {
        bail!("--{flag}: `{}` is a directory", path.display());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flag_beats_file_beats_default() {
        assert_eq!(pick("mu", Some(1.0), Some(2.0), Some(3.0)).unwrap(), 1.0);
        assert_eq!(pick("mu", None, Some(2.0), Some(3.0)).unwrap(), 2.0);
        assert_eq!(pick("mu", None, None, Some(3.0)).unwrap(), 3.0);
        let e = pick::<f64>("mu", None, None, None).unwrap_err().to_string();
        assert!(e.contains("--mu"));
    }

    #[test]
    fn validation_names_the_flag() {
        assert!(positive("b", -1.0).unwrap_err().to_string().contains("--b"));
        assert!(positive("d", f64::NAN).is_err());
        assert!(non_negative("eps", 0.0).is_ok());
        assert!(grid_points(2000).unwrap_err().to_string().contains("--n-points"));
        assert!(at_least("n", 0u32, 1).is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let r: std::result::Result<FileConfig, _> = toml::from_str("mu = 50.0\nmuu = 1.0\n");
        assert!(r.is_err());
        let ok: FileConfig = toml::from_str("mu = 50.0\nn-points = 401\n").unwrap();
        assert_eq!(ok.n_points, Some(401));
    }
}
