//! Run directories: one per invocation, named by the content hash of the
//! resolved config echo, with the echo written inside.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

use crate::config::{run_hash, RunConfig};

pub struct RunDir {
    pub path: PathBuf,
}

impl RunDir {
    /// Create (or reuse) `<out_root>/<command>-<hash>` and write the echo.
    pub fn create(
        out_root: &Path,
        command: &str,
        cfg: &RunConfig,
        inputs: &[(&str, &str)],
    ) -> Result<RunDir> {
        let mut echo = format!("command={command}\n");
        for (key, value) in inputs {
            echo.push_str(&format!("input.{key}={value}\n"));
        }
        echo.push_str(&cfg.to_kv_string());
        let hash = run_hash(&echo);
        let path = out_root.join(format!("{command}-{hash}"));
        std::fs::create_dir_all(&path)
            .with_context(|| format!("cannot create run directory {}", path.display()))?;
        std::fs::write(path.join("config.txt"), &echo)?;
        Ok(RunDir { path })
    }

    pub fn write(&self, name: &str, contents: impl AsRef<[u8]>) -> Result<PathBuf> {
        let path = self.path.join(name);
        std::fs::write(&path, contents)
            .with_context(|| format!("cannot write {}", path.display()))?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_config_maps_to_same_directory() {
        let tmp = std::env::temp_dir().join(format!("moocflow-runs-{}", std::process::id()));
        let cfg = RunConfig::default();
        let a = RunDir::create(&tmp, "synth", &cfg, &[("clicks", "x.csv")]).unwrap();
        let b = RunDir::create(&tmp, "synth", &cfg, &[("clicks", "x.csv")]).unwrap();
        assert_eq!(a.path, b.path);
        let c = RunDir::create(&tmp, "synth", &cfg, &[("clicks", "y.csv")]).unwrap();
        assert_ne!(a.path, c.path);
        assert!(a.path.join("config.txt").exists());
        std::fs::remove_dir_all(&tmp).ok();
    }
}
