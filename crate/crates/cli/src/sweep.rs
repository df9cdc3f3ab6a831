//! Cartesian-product sweeps over config fields.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;
use serde_json::Value;

use crate::config::{read_json, ExperimentConfig};
use crate::error::CliError;

/// `base` is an experiment config; each `parameters` key is a dotted path
/// into it (e.g. `"model.tau_c"`) with the list of values to try.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub base: Value,
    pub parameters: BTreeMap<String, Vec<Value>>,
}

impl SweepConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        serde_path_to_error::deserialize(read_json(path)?)
            .map_err(|e| CliError::config(&e.path().to_string(), e.into_inner().to_string()))
    }

    /// One config per parameter combination, in lexicographic key order with
    /// the last key varying fastest. Output files get a `__key=value` suffix.
    pub fn expand(&self) -> Result<Vec<(String, ExperimentConfig)>, CliError> {
        for (k, vs) in &self.parameters {
            if vs.is_empty() {
                return Err(CliError::config(&format!("parameters.{k}"), "no values"));
            }
        }
        let keys: Vec<&String> = self.parameters.keys().collect();
        let mut combos: Vec<Vec<&Value>> = vec![vec![]];
        for k in &keys {
            combos = combos
                .into_iter()
                .flat_map(|c| {
                    self.parameters[*k].iter().map(move |v| {
                        let mut c = c.clone();
                        c.push(v);
                        c
                    })
                })
                .collect();
        }
        let base_cfg = ExperimentConfig::from_value(self.base.clone())?;
        let stem = base_cfg.output_file().trim_end_matches(".csv").to_string();
        combos
            .into_iter()
            .map(|combo| {
                let mut v = self.base.clone();
                let mut label = Vec::new();
                for (k, val) in keys.iter().zip(combo) {
                    set_path(&mut v, k, val.clone())?;
                    let leaf = k.rsplit('.').next().unwrap_or(k);
                    label.push(format!("{leaf}={}", value_label(val)));
                }
                let label = label.join("_");
                let mut cfg = ExperimentConfig::from_value(v)?;
                cfg.output_path = Some(format!("{stem}__{label}.csv"));
                Ok((label, cfg))
            })
            .collect()
    }
}

fn value_label(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn set_path(root: &mut Value, path: &str, value: Value) -> Result<(), CliError> {
    let mut cur = root;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = cur.as_object_mut().ok_or_else(|| {
            CliError::config(
                &format!("parameters.{path}"),
                "path does not lead to an object",
            )
        })?;
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        cur = obj
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    Ok(())
}
