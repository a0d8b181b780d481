//! Parameter-file plumbing shared by the subcommands: canned figure
//! configs, `--set` overrides and typed access to the sections the core
//! parser leaves alone.

use std::path::Path;

use iongrad::models::config::{
    parse_document, parse_scalar, parse_values, Dimension, Document, Entry, ModelConfig, Section,
};

use crate::error::{CliError, CliResult};

/// Figure names with shipped configs.
pub const FIGURES: &[&str] = &["fig1", "fig2", "fig3", "fig4", "fig5"];

pub fn canned(name: &str) -> Option<&'static str> {
    Some(match name {
        "fig1" => include_str!("../../../configs/paper/fig1.ini"),
        "fig2" => include_str!("../../../configs/paper/fig2.ini"),
        "fig3" => include_str!("../../../configs/paper/fig3.ini"),
        "fig4" => include_str!("../../../configs/paper/fig4.ini"),
        "fig5" => include_str!("../../../configs/paper/fig5.ini"),
        _ => return None,
    })
}

pub fn read_document(path: &Path) -> CliResult<Document> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    Ok(parse_document(&text)?)
}

/// Applies `section.key=value` assignments. A bare `key` is accepted when
/// exactly one section already defines it.
pub fn apply_overrides(doc: &mut Document, sets: &[String]) -> CliResult<()> {
    for (k, raw) in sets.iter().enumerate() {
        let (lhs, value) = raw
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("--set `{raw}` is not key=value")))?;
        let (lhs, value) = (lhs.trim(), value.trim());
        let (section, key) = match lhs.split_once('.') {
            Some((s, key)) => (s.to_string(), key.to_string()),
            None => {
                let owners: Vec<&str> = doc
                    .sections
                    .iter()
                    .filter(|s| s.get(lhs).is_some())
                    .map(|s| s.name.as_str())
                    .collect();
                match owners.as_slice() {
                    [one] => (one.to_string(), lhs.to_string()),
                    [] => {
                        return Err(CliError::Config(format!(
                            "--set `{lhs}`: no section defines it; write section.{lhs}"
                        )))
                    }
                    _ => {
                        return Err(CliError::Config(format!(
                            "--set `{lhs}` is ambiguous between [{}]",
                            owners.join("], [")
                        )))
                    }
                }
            }
        };
        let entry = Entry {
            key: key.clone(),
            value: value.to_string(),
            line: 0,
            column: k + 1,
        };
        match doc.sections.iter_mut().find(|s| s.name == section) {
            Some(s) => match s.entries.iter_mut().find(|e| e.key == key) {
                Some(e) => *e = entry,
                None => s.entries.push(entry),
            },
            None => doc.sections.push(Section {
                name: section,
                line: 0,
                entries: vec![entry],
            }),
        }
    }
    Ok(())
}

/// Forces `probe.n_max`.
pub fn set_n_max(doc: &mut Document, n_max: usize) -> CliResult<()> {
    apply_overrides(doc, &[format!("probe.n_max={n_max}")])
}

pub fn model(doc: &Document, extra_sections: &[&str]) -> CliResult<ModelConfig> {
    Ok(ModelConfig::from_document(doc, extra_sections)?)
}

/// Typed view of a CLI-only section such as `[figure]` or `[sweep]`.
pub struct Options<'a> {
    section: Option<&'a Section>,
    name: &'a str,
}

impl<'a> Options<'a> {
    pub fn new(doc: &'a Document, name: &'a str, allowed: &[&str]) -> CliResult<Self> {
        let section = doc.section(name);
        if let Some(s) = section {
            s.check_keys(allowed)?;
        }
        Ok(Options { section, name })
    }

    fn entry(&self, key: &str) -> Option<&'a Entry> {
        self.section.and_then(|s| s.get(key))
    }

    fn required(&self, key: &str) -> CliResult<&'a Entry> {
        self.entry(key)
            .ok_or_else(|| CliError::Config(format!("[{}] needs `{key}`", self.name)))
    }

    pub fn has(&self, key: &str) -> bool {
        self.entry(key).is_some()
    }

    pub fn scalar(&self, key: &str, dim: Dimension) -> CliResult<f64> {
        Ok(parse_scalar(self.required(key)?, dim)?)
    }

    pub fn scalar_or(&self, key: &str, dim: Dimension, default: f64) -> CliResult<f64> {
        match self.entry(key) {
            Some(e) => Ok(parse_scalar(e, dim)?),
            None => Ok(default),
        }
    }

    pub fn list(&self, key: &str, dim: Dimension) -> CliResult<Vec<f64>> {
        Ok(parse_values(self.required(key)?, dim)?.0)
    }

    pub fn count_or(&self, key: &str, default: usize) -> CliResult<usize> {
        let x = self.scalar_or(key, Dimension::Dimensionless, default as f64)?;
        if x < 0.0 || x.fract() != 0.0 || x > 1e9 {
            return Err(CliError::Config(format!(
                "[{}] `{key}` must be a non-negative integer, got {x}",
                self.name
            )));
        }
        Ok(x as usize)
    }

    pub fn word(&self, key: &str) -> CliResult<&'a str> {
        Ok(self.required(key)?.value.trim())
    }

    pub fn word_or(&self, key: &str, default: &'a str) -> &'a str {
        self.entry(key).map_or(default, |e| e.value.trim())
    }

    pub fn flag_or(&self, key: &str, default: bool) -> CliResult<bool> {
        match self.entry(key).map(|e| e.value.trim()) {
            None => Ok(default),
            Some("true") => Ok(true),
            Some("false") => Ok(false),
            Some(other) => Err(CliError::Config(format!(
                "[{}] `{key}` must be true or false, got `{other}`",
                self.name
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canned_configs_parse() {
        for name in FIGURES {
            let doc = parse_document(canned(name).unwrap()).unwrap();
            model(&doc, &["figure"]).unwrap();
        }
    }

    #[test]
    fn overrides_replace_and_insert() {
        let mut doc = parse_document(canned("fig1").unwrap()).unwrap();
        apply_overrides(
            &mut doc,
            &["probe.gamma=0.2 krad_s".into(), "figure.points=4".into()],
        )
        .unwrap();
        let m = model(&doc, &["figure"]).unwrap();
        assert_eq!(m.probe.gamma, 0.2);
        let opts = Options::new(
            &doc,
            "figure",
            &[
                "points",
                "F1_values",
                "analytic_points",
                "tolerance",
                "threshold",
            ],
        )
        .unwrap();
        assert_eq!(opts.count_or("points", 0).unwrap(), 4);
        apply_overrides(&mut doc, &["xi=0.5 pi".into()]).unwrap();
        assert!(
            (model(&doc, &["figure"]).unwrap().force.unwrap().xi - 0.5 * std::f64::consts::PI)
                .abs()
                < 1e-15
        );
    }

    #[test]
    fn unknown_bare_key_rejected() {
        let mut doc = parse_document(canned("fig1").unwrap()).unwrap();
        assert!(matches!(
            apply_overrides(&mut doc, &["nonsense=1".into()]),
            Err(CliError::Config(_))
        ));
        assert!(apply_overrides(&mut doc, &["no-equals".into()]).is_err());
    }
}
