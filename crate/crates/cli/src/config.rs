//! Resolved run parameters.
//!
//! Every parameter is a named string value. Defaults are overridden by the
//! configuration file and then by flags. The resolved set is written into
//! every output so that the output itself can be passed back as `--config`.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{CliError, CliResult};

/// Prefix of configuration lines embedded in CSV outputs.
pub const EMBED: &str = "#@ ";

const DEFAULTS: &[(&str, &str)] = &[
    ("delta_ghz", "0"),
    ("rabi_l_ghz", "3.5299"),
    ("rabi_s_ghz", "1.75"),
    ("omega_s_ghz", "3.5299"),
    ("gamma_mhz", "134"),
    ("diffusion_mhz", "678"),
    ("etalon_mhz", "525"),
    ("etalon_fsr_ghz", "20"),
    ("temp_k", "0.1"),
    ("g0_mhz", "1.2"),
    ("q", "12562"),
    ("tol", "1e-9"),
    ("freq_lo_ghz", "-9.5"),
    ("freq_hi_ghz", "9.5"),
    ("freq_n", "1901"),
    ("n_phase", "16"),
    ("n_nodes", "21"),
    ("sweep", "rabi_l"),
    ("sweep_lo_ghz", "0"),
    ("sweep_hi_ghz", "7"),
    ("sweep_n", "29"),
    ("delta_lo_ghz", "-4.25"),
    ("delta_hi_ghz", "4.25"),
    ("delta_n", "41"),
    ("rabi_lo_ghz", "0.1"),
    ("rabi_hi_ghz", "6"),
    ("rabi_n", "41"),
    ("m_max", "auto"),
    ("input", ""),
    ("linewidth_ghz", "0.6"),
    ("intercept", "false"),
    ("target", "0.6"),
];

#[derive(Clone, Debug, PartialEq)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Default for Settings {
    fn default() -> Self {
        Settings { values: DEFAULTS.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect() }
    }
}

impl Settings {
    pub fn set(&mut self, key: &str, value: &str) -> CliResult<()> {
        let key = key.trim();
        match self.values.get_mut(key) {
            Some(slot) => {
                *slot = value.trim().to_string();
                Ok(())
            }
            None => Err(CliError::Config(format!("unknown parameter '{key}'"))),
        }
    }

    pub fn raw(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or_else(|| panic!("parameter {key} has no default"))
    }

    pub fn f64(&self, key: &str) -> CliResult<f64> {
        let raw = self.raw(key);
        match raw.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(CliError::Config(format!("{key} = '{raw}' is not a finite number"))),
        }
    }

    pub fn non_negative(&self, key: &str) -> CliResult<f64> {
        let v = self.f64(key)?;
        if v < 0.0 {
            return Err(CliError::Config(format!("{key} must be non-negative, got {v}")));
        }
        Ok(v)
    }

    pub fn positive(&self, key: &str) -> CliResult<f64> {
        let v = self.f64(key)?;
        if v <= 0.0 {
            return Err(CliError::Config(format!("{key} must be positive, got {v}")));
        }
        Ok(v)
    }

    pub fn count(&self, key: &str) -> CliResult<usize> {
        let raw = self.raw(key);
        match raw.parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(CliError::Config(format!("{key} = '{raw}' is not a positive integer"))),
        }
    }

    /// `None` for `auto`.
    pub fn optional_count(&self, key: &str) -> CliResult<Option<usize>> {
        if self.raw(key) == "auto" {
            return Ok(None);
        }
        self.count(key).map(Some)
    }

    pub fn flag(&self, key: &str) -> CliResult<bool> {
        match self.raw(key) {
            "true" | "yes" | "1" => Ok(true),
            "false" | "no" | "0" => Ok(false),
            other => Err(CliError::Config(format!("{key} = '{other}' is not a boolean"))),
        }
    }

    /// The `(key, value)` pairs named in `keys`, in that order.
    pub fn subset(&self, keys: &[&str]) -> Vec<(String, String)> {
        keys.iter().map(|k| (k.to_string(), self.raw(k).to_string())).collect()
    }

    /// Applies a configuration file.
    ///
    /// Accepts `key = value` lines, the same lines prefixed by `#@ `, and a
    /// JSON output of this program (its `config` object). `#` starts a
    /// comment. Once an embedded line has been seen, the first line that is
    /// neither a comment nor a setting ends the configuration block.
    pub fn apply_file(&mut self, path: &Path, command: &str) -> CliResult<()> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
        if text.trim_start().starts_with('{') {
            return self.apply_json(&text, command);
        }
        let mut embedded = false;
        for (n, line) in text.lines().enumerate() {
            let mut line = line.trim();
            if let Some(rest) = line.strip_prefix(EMBED.trim_end()) {
                embedded = true;
                line = rest.trim();
            } else if line.starts_with('#') || line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                if embedded {
                    break;
                }
                return Err(CliError::Config(format!("{}:{}: expected 'key = value'", path.display(), n + 1)));
            };
            self.apply_pair(k.trim(), v.trim(), command)?;
        }
        Ok(())
    }

    fn apply_json(&mut self, text: &str, command: &str) -> CliResult<()> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid JSON configuration: {e}")))?;
        let Some(cfg) = value.get("config").and_then(|c| c.as_object()) else {
            return Err(CliError::Config("JSON configuration has no 'config' object".into()));
        };
        for (k, v) in cfg {
            let s = match v {
                serde_json::Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            self.apply_pair(k, &s, command)?;
        }
        Ok(())
    }

    fn apply_pair(&mut self, key: &str, value: &str, command: &str) -> CliResult<()> {
        if key == "command" {
            if value != command {
                return Err(CliError::Config(format!("configuration is for '{value}', not '{command}'")));
            }
            return Ok(());
        }
        self.set(key, value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embedded_block_round_trips() {
        let mut s = Settings::default();
        s.set("delta_ghz", "-2.36").unwrap();
        let mut text = String::from("#@ command = spectrum\n");
        for (k, v) in s.subset(&["delta_ghz", "rabi_l_ghz"]) {
            text.push_str(&format!("{EMBED}{k} = {v}\n"));
        }
        text.push_str("# coherent_weight = 0.1\nfreq_offset_GHz,intensity\n1e0,2e0\n");
        let dir = std::env::temp_dir().join(format!("mollow-cfg-{}", std::process::id()));
        std::fs::write(&dir, text).unwrap();
        let mut back = Settings::default();
        back.apply_file(&dir, "spectrum").unwrap();
        std::fs::remove_file(&dir).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        let mut s = Settings::default();
        assert!(s.set("nope", "1").is_err());
        s.set("gamma_mhz", "-1").unwrap();
        assert!(s.positive("gamma_mhz").is_err());
        s.set("freq_n", "0").unwrap();
        assert!(s.count("freq_n").is_err());
    }
}
