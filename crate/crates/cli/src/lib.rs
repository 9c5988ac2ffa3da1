//! Command-line front end for the `wetsim` experiments.

pub mod commands;
pub mod config;
pub mod svg;

pub use commands::{cmd_correlation, cmd_heatmap, cmd_oracle, cmd_sweep};
pub use config::{parse_config, ConfigError, ExperimentConfig};

/// Environment variable overriding the worker thread count.
pub const THREADS_ENV: &str = "WETSIM_THREADS";

/// Thread count precedence: command line, then environment, then config.
/// `None` leaves the choice to rayon.
pub fn resolve_threads(
    flag: Option<usize>,
    env: Option<&str>,
    config: Option<usize>,
) -> Result<Option<usize>, String> {
    if let Some(n) = flag {
        return Ok(Some(n));
    }
    if let Some(v) = env {
        let v = v.trim();
        if !v.is_empty() {
            return match v.parse::<usize>() {
                Ok(n) if n > 0 => Ok(Some(n)),
                _ => Err(format!(
                    "{THREADS_ENV} must be a positive integer, got `{v}`"
                )),
            };
        }
    }
    Ok(config)
}

/// Runs `f` on a dedicated pool when a thread count is given.
pub fn with_threads<T: Send>(
    threads: Option<usize>,
    f: impl FnOnce() -> T + Send,
) -> anyhow::Result<T> {
    match threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build()?;
            Ok(pool.install(f))
        }
        None => Ok(f()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thread_precedence() {
        assert_eq!(resolve_threads(Some(3), Some("5"), Some(7)), Ok(Some(3)));
        assert_eq!(resolve_threads(None, Some("5"), Some(7)), Ok(Some(5)));
        assert_eq!(resolve_threads(None, None, Some(7)), Ok(Some(7)));
        assert_eq!(resolve_threads(None, Some(""), None), Ok(None));
        assert!(resolve_threads(None, Some("0"), None).is_err());
        assert!(resolve_threads(None, Some("many"), None).is_err());
    }
}
