//! Study output files: CSV tables and JSON summaries, each stamped with
//! the config fingerprint and master seed that produced it.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

#[derive(Debug, Clone)]
pub struct OutCtx {
    pub dir: PathBuf,
    pub config_hash: String,
    pub seed: u64,
}

impl OutCtx {
    pub fn new(dir: PathBuf, config_hash: String, seed: u64) -> Result<OutCtx> {
        fs::create_dir_all(&dir)
            .with_context(|| format!("creating output directory {}", dir.display()))?;
        Ok(OutCtx {
            dir,
            config_hash,
            seed,
        })
    }

    fn header(&self) -> String {
        format!("# config={} seed={}\n", self.config_hash, self.seed)
    }

    pub fn csv(&self, name: &str, columns: &[&str], rows: &[Vec<String>]) -> Result<PathBuf> {
        let path = self.dir.join(name);
        let mut out = String::new();
        out.push_str(&self.header());
        out.push_str(&columns.join(","));
        out.push('\n');
        for row in rows {
            debug_assert_eq!(row.len(), columns.len(), "ragged row in {name}");
            out.push_str(&row.join(","));
            out.push('\n');
        }
        write_file(&path, out.as_bytes())?;
        Ok(path)
    }

    /// JSON object with `config` and `seed` fields prepended. Keys are
    /// emitted in sorted order, so reruns are byte-identical.
    pub fn json(&self, name: &str, mut value: serde_json::Value) -> Result<PathBuf> {
        let path = self.dir.join(name);
        let obj = value
            .as_object_mut()
            .expect("json output must be an object");
        obj.insert("config".into(), self.config_hash.clone().into());
        obj.insert("seed".into(), self.seed.into());
        let mut text = serde_json::to_string_pretty(&value)?;
        text.push('\n');
        write_file(&path, text.as_bytes())?;
        Ok(path)
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    f.write_all(bytes)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Fixed-precision scientific notation so file bytes do not depend on
/// locale or float-formatting quirks.
pub fn num(x: f64) -> String {
    format!("{x:.12e}")
}

pub fn nums(xs: &[f64]) -> Vec<String> {
    xs.iter().map(|&x| num(x)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout_is_stable() {
        let dir = std::env::temp_dir().join("fringe-output-test");
        let ctx = OutCtx::new(dir, "abc123".into(), 9).unwrap();
        let p = ctx
            .csv(
                "t.csv",
                &["a", "b"],
                &[vec![num(1.0), num(0.5)], vec![num(-2.0), num(3.25)]],
            )
            .unwrap();
        let text = std::fs::read_to_string(p).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "# config=abc123 seed=9");
        assert_eq!(lines.next().unwrap(), "a,b");
        assert_eq!(lines.next().unwrap(), "1.000000000000e0,5.000000000000e-1");
    }
}
