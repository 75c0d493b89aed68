//! Flat `key = value` solver configuration files.

use softjpeg::decoder::SolverConfig;
use softjpeg::graph::RegularizerKind;

pub const KEYS: &[&str] = &[
    "lambda1",
    "lambda2",
    "lambda2_boost",
    "iters",
    "qp_iters",
    "qp_tol",
    "sigma1",
    "sigma2",
    "patch",
    "sparsity",
    "omp_tol",
    "regularizer",
    "convergence_tol",
    "consensus",
];

/// Applies one setting; the error is a human-readable reason.
pub fn apply(cfg: &mut SolverConfig, key: &str, value: &str) -> Result<(), String> {
    fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, String> {
        v.parse().map_err(|_| format!("`{key}`: cannot parse `{v}`"))
    }
    match key {
        "lambda1" => cfg.lambda1 = num(key, value)?,
        "lambda2" => cfg.lambda2_base = num(key, value)?,
        "lambda2_boost" => cfg.lambda2_boost = num(key, value)?,
        "iters" => cfg.max_outer_iters = num(key, value)?,
        "qp_iters" => cfg.qp.max_iters = num(key, value)?,
        "qp_tol" => cfg.qp.tolerance = num(key, value)?,
        "sigma1" => cfg.sigma1 = optional(key, value)?,
        "sigma2" => cfg.sigma2 = optional(key, value)?,
        "patch" => cfg.patch_size = num(key, value)?,
        "sparsity" => cfg.sparsity = optional(key, value)?,
        "omp_tol" => cfg.omp_residual_tol = optional(key, value)?,
        "regularizer" => {
            cfg.regularizer = RegularizerKind::parse(value).ok_or_else(|| format!("`{key}`: unknown regularizer `{value}`"))?
        }
        "convergence_tol" => cfg.convergence_tol = num(key, value)?,
        "consensus" => cfg.consensus = num(key, value)?,
        _ => return Err(format!("unknown key `{key}` (known: {})", KEYS.join(", "))),
    }
    Ok(())
}

/// `auto` clears an optional setting.
fn optional<T: std::str::FromStr>(key: &str, value: &str) -> Result<Option<T>, String> {
    if value == "auto" {
        return Ok(None);
    }
    value.parse().map(Some).map_err(|_| format!("`{key}`: cannot parse `{value}`"))
}

/// Parses a whole file. Blank lines and `#` comments are skipped.
pub fn parse(text: &str, cfg: &mut SolverConfig) -> Result<(), String> {
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| format!("line {}: expected key = value", n + 1))?;
        apply(cfg, key.trim(), value.trim().trim_matches('"')).map_err(|e| format!("line {}: {e}", n + 1))?;
    }
    Ok(())
}
