//! TOML scenario files: parsing with located errors and canonical emission.

use std::fmt;
use std::path::{Path, PathBuf};

use crate::sim::ScenarioConfig;

/// A configuration problem, located as precisely as the input allows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigFileError {
    pub path: Option<PathBuf>,
    /// Dotted key such as `constellation.altitude_km`.
    pub key: Option<String>,
    /// 1-based line in the file.
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigFileError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(p) = &self.path {
            write!(f, "{}:", p.display())?;
        }
        if let Some(l) = self.line {
            write!(f, "line {l}: ")?;
        } else if self.path.is_some() {
            f.write_str(" ")?;
        }
        if let Some(k) = &self.key {
            write!(f, "{k}: ")?;
        }
        f.write_str(&self.message)
    }
}

impl std::error::Error for ConfigFileError {}

/// Parses and validates a scenario; every failure names the key and, when
/// the key appears in `text`, its line.
pub fn parse_config_str(text: &str) -> Result<ScenarioConfig, ConfigFileError> {
    let config = parse_config_unvalidated(text)?;
    validate_config(&config, Some(text))?;
    Ok(config)
}

/// Reads and parses a scenario file without validating it; returns the text
/// for error location. Relative data paths are resolved against the file's
/// directory.
pub fn load_config(path: &Path) -> Result<(ScenarioConfig, String), ConfigFileError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigFileError {
        path: Some(path.to_path_buf()),
        key: None,
        line: None,
        message: format!("cannot read file: {e}"),
    })?;
    let mut config = parse_config_unvalidated(&text).map_err(|e| ConfigFileError { path: Some(path.to_path_buf()), ..e })?;
    if let Some(dir) = path.parent() {
        let d = &mut config.data;
        for p in [&mut d.train_images, &mut d.train_labels, &mut d.test_images, &mut d.test_labels].into_iter().flatten() {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        }
    }
    Ok((config, text))
}

/// Like [`parse_config_str`] but leaves range validation to the caller,
/// so that command-line overrides (such as the seed) can be applied first.
pub fn parse_config_unvalidated(text: &str) -> Result<ScenarioConfig, ConfigFileError> {
    toml::from_str(text).map_err(|e| {
        let (key, line) = match e.span() {
            Some(span) => locate_offset(text, span.start),
            None => (None, None),
        };
        ConfigFileError { path: None, key, line, message: first_line(e.message()) }
    })
}

/// Validates `config`, locating the offending key in `text` when given.
pub fn validate_config(config: &ScenarioConfig, text: Option<&str>) -> Result<(), ConfigFileError> {
    config.validate().map_err(|e| {
        let line = text.and_then(|t| find_key_line(t, &e.key));
        ConfigFileError { path: None, key: Some(e.key), line, message: e.message }
    })
}

/// Canonical TOML form: every section and key, defaults included.
pub fn emit_canonical(config: &ScenarioConfig) -> String {
    toml::to_string(config).expect("scenario config serialises to TOML")
}

fn first_line(s: &str) -> String {
    s.lines().next().unwrap_or_default().trim().to_string()
}

// Table path of a `[a.b]` header line.
fn header(line: &str) -> Option<&str> {
    let t = line.trim();
    let inner = t.strip_prefix('[')?.split(']').next()?;
    (!inner.starts_with('[')).then(|| inner.trim())
}

// Bare key of a `key = value` line.
fn assigned_key(line: &str) -> Option<&str> {
    let t = line.trim_start();
    if t.starts_with('#') || t.starts_with('[') {
        return None;
    }
    let (k, _) = t.split_once('=')?;
    let k = k.trim().trim_matches('"');
    (!k.is_empty()).then_some(k)
}

// (dotted key, 1-based line) for a byte offset.
fn locate_offset(text: &str, offset: usize) -> (Option<String>, Option<usize>) {
    let offset = offset.min(text.len());
    let line_idx = text[..offset].matches('\n').count();
    let mut section: Option<&str> = None;
    for (i, line) in text.lines().enumerate() {
        if i > line_idx {
            break;
        }
        if let Some(h) = header(line) {
            section = Some(h);
            if i == line_idx {
                return (Some(h.to_string()), Some(i + 1));
            }
        } else if i == line_idx {
            let key = assigned_key(line).map(|k| match section {
                Some(s) => format!("{s}.{k}"),
                None => k.to_string(),
            });
            return (key.or(section.map(str::to_string)), Some(i + 1));
        }
    }
    (section.map(str::to_string), Some(line_idx + 1))
}

// Line on which dotted `key` is assigned; falls back to its section header.
fn find_key_line(text: &str, key: &str) -> Option<usize> {
    let (table, leaf) = key.rsplit_once('.').unwrap_or(("", key));
    let mut section = "";
    let mut header_line = None;
    for (i, line) in text.lines().enumerate() {
        if let Some(h) = header(line) {
            section = h;
            if h == table {
                header_line = Some(i + 1);
            }
            continue;
        }
        match assigned_key(line) {
            Some(k) if section == table && k == leaf => return Some(i + 1),
            Some(k) if section.is_empty() && k == key => return Some(i + 1),
            _ => {}
        }
    }
    header_line
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn locates_keys_and_sections() {
        let text = "[sim]\nseed = 3\n\n[constellation]\n# comment\naltitude_km = -1\n";
        assert_eq!(find_key_line(text, "constellation.altitude_km"), Some(6));
        assert_eq!(find_key_line(text, "constellation.planes"), Some(4));
        assert_eq!(find_key_line(text, "ps.kind"), None);
        let off = text.find("altitude_km").unwrap();
        assert_eq!(locate_offset(text, off), (Some("constellation.altitude_km".into()), Some(6)));
        assert_eq!(locate_offset(text, 1), (Some("sim".into()), Some(1)));
    }
}
