//! Flat `key = value` config files and the run manifests written next to
//! every output. A manifest is itself a valid config, so feeding it back with
//! `--config` repeats the run.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FlatConfig {
    entries: BTreeMap<String, String>,
}

impl FlatConfig {
    /// Blank lines and lines starting with `#` are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| anyhow!("line {}: expected `key = value`", i + 1))?;
            let key = key.trim();
            if key.is_empty() {
                bail!("line {}: empty key", i + 1);
            }
            if entries.insert(key.to_string(), value.trim().to_string()).is_some() {
                bail!("line {}: duplicate key `{key}`", i + 1);
            }
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config {}", path.display()))
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}

/// Merges command-line values with an optional config; flags win.
/// Tracks which config keys were consumed so leftovers can be rejected.
pub struct Resolver {
    config: Option<FlatConfig>,
    used: BTreeSet<String>,
}

impl Resolver {
    pub fn new(config: Option<&Path>) -> Result<Self> {
        Ok(Self { config: config.map(FlatConfig::load).transpose()?, used: BTreeSet::new() })
    }

    fn raw(&mut self, key: &str) -> Option<String> {
        self.used.insert(key.to_string());
        self.config.as_ref()?.get(key).map(str::to_string)
    }

    pub fn value<T: FromStr>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        let from_config = self.raw(key);
        if flag.is_some() {
            return Ok(flag);
        }
        from_config
            .map(|v| v.parse::<T>().map_err(|e| anyhow!("config key `{key}`: {e}")))
            .transpose()
    }

    pub fn required<T: FromStr>(&mut self, key: &str, flag: Option<T>) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        self.value(key, flag)?.ok_or_else(|| anyhow!("missing required option --{key}"))
    }

    pub fn flag(&mut self, key: &str, flag: bool) -> Result<bool> {
        Ok(self.value(key, flag.then_some(true))?.unwrap_or(false))
    }

    pub fn path(&mut self, key: &str, flag: Option<PathBuf>) -> Result<Option<PathBuf>> {
        self.value(key, flag)
    }

    /// Config-only value, e.g. a recorded input hash.
    pub fn config_only(&mut self, key: &str) -> Option<String> {
        self.raw(key)
    }

    /// Fails on config keys nothing asked for. `command` is always accepted,
    /// and so is `<key>-sha256` for any key in use.
    pub fn finish(&self) -> Result<()> {
        if let Some(config) = &self.config {
            let known = |k: &str| {
                k == "command" || self.used.contains(k) || k.strip_suffix("-sha256").is_some_and(|b| self.used.contains(b))
            };
            let unknown: Vec<&str> = config.keys().filter(|k| !known(k)).collect();
            if !unknown.is_empty() {
                bail!("unknown config keys: {}", unknown.join(", "));
            }
        }
        Ok(())
    }
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut file = std::fs::File::open(path).with_context(|| format!("hashing {}", path.display()))?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = file.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

/// Ordered `key = value` record of a run.
#[derive(Debug, Clone, Default)]
pub struct Manifest {
    entries: Vec<(String, String)>,
}

impl Manifest {
    pub fn new(command: &str) -> Self {
        let mut m = Self::default();
        m.set("command", command);
        m
    }

    pub fn set(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.entries.push((key.to_string(), value.to_string()));
        self
    }

    pub fn set_opt<T: ToString>(&mut self, key: &str, value: Option<T>) -> &mut Self {
        if let Some(v) = value {
            self.set(key, v);
        }
        self
    }

    pub fn set_path(&mut self, key: &str, path: &Path) -> &mut Self {
        self.set(key, path.display())
    }

    /// Records `<key>-sha256` for an input file.
    pub fn hash_input(&mut self, key: &str, path: &Path) -> Result<&mut Self> {
        let digest = sha256_file(path)?;
        Ok(self.set(&format!("{key}-sha256"), digest))
    }

    pub fn render(&self) -> String {
        let mut out = String::from("# ethereal run manifest; rerun with --config <this file>\n");
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    pub fn write_next_to(&self, output: &Path) -> Result<PathBuf> {
        let path = manifest_path(output);
        std::fs::write(&path, self.render()).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}

pub fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(".manifest");
    PathBuf::from(name)
}

/// Checks that an input still hashes to the value recorded in a config.
pub fn verify_hash(resolver: &mut Resolver, key: &str, path: &Path) -> Result<()> {
    if let Some(expected) = resolver.config_only(&format!("{key}-sha256")) {
        let actual = sha256_file(path)?;
        if actual != expected {
            bail!("{} changed since the manifest was written (sha256 {actual}, expected {expected})", path.display());
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_flat_config() {
        let c = FlatConfig::parse("# comment\nclauses = 100\n\n T=10 \n").unwrap();
        assert_eq!(c.get("clauses"), Some("100"));
        assert_eq!(c.get("T"), Some("10"));
        assert!(FlatConfig::parse("a = 1\na = 2\n").is_err());
        assert!(FlatConfig::parse("just words\n").is_err());
    }

    #[test]
    fn flags_win_and_leftovers_fail() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.conf");
        std::fs::write(&path, "clauses = 100\nT = 10\nethereal = true\n").unwrap();
        let mut r = Resolver::new(Some(&path)).unwrap();
        assert_eq!(r.required::<usize>("clauses", Some(20)).unwrap(), 20);
        assert_eq!(r.required::<u32>("T", None).unwrap(), 10);
        assert!(r.flag("ethereal", false).unwrap());
        r.finish().unwrap();

        let mut r = Resolver::new(Some(&path)).unwrap();
        r.value::<usize>("clauses", None).unwrap();
        assert!(r.finish().is_err());
    }

    #[test]
    fn manifest_renders_as_config() {
        let mut m = Manifest::new("train");
        m.set("seed", 7).set_opt("trace", None::<String>).set("s", 3.5);
        let parsed = FlatConfig::parse(&m.render()).unwrap();
        assert_eq!(parsed.get("command"), Some("train"));
        assert_eq!(parsed.get("seed"), Some("7"));
        assert_eq!(parsed.get("s"), Some("3.5"));
        assert_eq!(manifest_path(Path::new("out/m.ethl")), PathBuf::from("out/m.ethl.manifest"));
    }
}
