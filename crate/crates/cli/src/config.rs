//! Flat `key=value` configuration files.
//!
//! Each key names a long flag without its dashes (`alpha=0.01`). Lines that
//! are blank or start with `#` are skipped. Boolean flags take `true` or
//! `false`. The parsed entries are turned into flags that are placed before
//! the command-line flags, so the command line wins.

/// Problem with a configuration file, reported as a usage error.
#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("--config {path}: {source}")]
    Read {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("--config line {line}: expected key=value")]
    Syntax { line: usize },
    #[error("--config line {line}: unknown key '{key}'")]
    UnknownKey { line: usize, key: String },
    #[error("--config line {line}: '{key}' takes true or false, got '{value}'")]
    NotBoolean { line: usize, key: String, value: String },
}

/// How the current command treats a key.
pub enum KeyKind {
    /// Flag that takes a value.
    Value,
    /// Flag without a value.
    Switch,
    /// Known to some other command; ignored here.
    Foreign,
    Unknown,
}

/// Parses `text` into command-line flags, asking `classify` what each key is.
pub fn to_args(text: &str, classify: impl Fn(&str) -> KeyKind) -> Result<Vec<String>, ConfigError> {
    let mut args = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (key, value) = trimmed.split_once('=').ok_or(ConfigError::Syntax { line })?;
        let key = key.trim().trim_start_matches("--");
        let value = value.trim();
        if key.is_empty() || key == "config" {
            return Err(ConfigError::UnknownKey {
                line,
                key: key.to_string(),
            });
        }
        match classify(key) {
            KeyKind::Value => {
                args.push(format!("--{key}"));
                args.push(value.to_string());
            }
            KeyKind::Switch => match value {
                "true" => args.push(format!("--{key}")),
                "false" => {}
                _ => {
                    return Err(ConfigError::NotBoolean {
                        line,
                        key: key.to_string(),
                        value: value.to_string(),
                    })
                }
            },
            KeyKind::Foreign => {}
            KeyKind::Unknown => {
                return Err(ConfigError::UnknownKey {
                    line,
                    key: key.to_string(),
                })
            }
        }
    }
    Ok(args)
}
