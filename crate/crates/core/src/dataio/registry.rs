//! Dataset registry: flat `key=value` lines, one record per `name=` key.
//!
//! ```text
//! # Per-dataset experiment settings
//! name=australian
//! path=australian
//! C=0.922
//! Cstar_over_C=0.1
//! r=0.44
//! labeled=3
//! ```
//!
//! `labeled` is optional. Relative paths resolve against the registry file's directory.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct RegistryEntry {
    pub name: String,
    pub path: PathBuf,
    pub c: f64,
    pub c_star_over_c: f64,
    pub r: f64,
    pub n_labeled: Option<usize>,
}

impl RegistryEntry {
    pub fn c_star(&self) -> f64 {
        self.c * self.c_star_over_c
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Registry {
    pub entries: Vec<RegistryEntry>,
}

#[derive(Default)]
struct Partial {
    line: usize,
    name: Option<String>,
    path: Option<PathBuf>,
    c: Option<f64>,
    ratio: Option<f64>,
    r: Option<f64>,
    labeled: Option<usize>,
}

impl Partial {
    fn finish(self) -> Result<RegistryEntry> {
        let missing = |key: &str| Error::Parse {
            line: self.line,
            message: format!("record is missing `{key}`"),
        };
        Ok(RegistryEntry {
            name: self.name.clone().ok_or_else(|| missing("name"))?,
            path: self.path.clone().ok_or_else(|| missing("path"))?,
            c: self.c.ok_or_else(|| missing("C"))?,
            c_star_over_c: self.ratio.ok_or_else(|| missing("Cstar_over_C"))?,
            r: self.r.ok_or_else(|| missing("r"))?,
            n_labeled: self.labeled,
        })
    }
}

impl Registry {
    pub fn parse(text: &str, base: &Path) -> Result<Registry> {
        let mut entries = Vec::new();
        let mut current: Option<Partial> = None;
        for (lineno, raw) in text.lines().enumerate() {
            let lineno = lineno + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: lineno,
                message: format!("expected key=value, got `{line}`"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            let number = || -> Result<f64> {
                value.parse().map_err(|_| Error::Parse {
                    line: lineno,
                    message: format!("`{key}` needs a number, got `{value}`"),
                })
            };
            if key == "name" {
                if let Some(done) = current.take() {
                    entries.push(done.finish()?);
                }
                current = Some(Partial {
                    line: lineno,
                    name: Some(value.to_string()),
                    ..Partial::default()
                });
                continue;
            }
            let rec = current.as_mut().ok_or_else(|| Error::Parse {
                line: lineno,
                message: "key before the first `name=`".into(),
            })?;
            match key {
                "path" => rec.path = Some(base.join(value)),
                "C" => rec.c = Some(number()?),
                "Cstar_over_C" => rec.ratio = Some(number()?),
                "r" => rec.r = Some(number()?),
                "labeled" => {
                    rec.labeled = Some(value.parse().map_err(|_| Error::Parse {
                        line: lineno,
                        message: format!("`labeled` needs a count, got `{value}`"),
                    })?)
                }
                other => {
                    return Err(Error::Parse {
                        line: lineno,
                        message: format!("unknown key `{other}`"),
                    })
                }
            }
        }
        if let Some(done) = current {
            entries.push(done.finish()?);
        }
        Ok(Registry { entries })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Registry> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        Registry::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn get(&self, name: &str) -> Result<&RegistryEntry> {
        self.entries
            .iter()
            .find(|e| e.name == name)
            .ok_or_else(|| Error::UnknownDataset(name.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_records() {
        let text = "# comment\nname=australian\npath=australian\nC=0.922\nCstar_over_C=0.1\nr=0.44\nlabeled=3\n\nname=w6a\npath=/abs/w6a\nC=0.838\nCstar_over_C=1e-4\nr=0.5\n";
        let reg = Registry::parse(text, Path::new("/data")).unwrap();
        assert_eq!(reg.entries.len(), 2);
        let a = reg.get("australian").unwrap();
        assert_eq!(a.path, PathBuf::from("/data/australian"));
        assert!((a.c_star() - 0.0922).abs() < 1e-15);
        assert_eq!(a.n_labeled, Some(3));
        assert_eq!(reg.get("w6a").unwrap().path, PathBuf::from("/abs/w6a"));
        assert!(matches!(reg.get("nope"), Err(Error::UnknownDataset(_))));
    }

    #[test]
    fn missing_keys_are_reported() {
        let err = Registry::parse("name=x\npath=p\nC=1\n", Path::new(".")).unwrap_err();
        assert!(err.to_string().contains("Cstar_over_C"));
        assert!(Registry::parse("C=1\n", Path::new(".")).is_err());
        assert!(Registry::parse("name=x\nC=abc\n", Path::new(".")).is_err());
    }
}
