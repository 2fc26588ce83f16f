use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use pluripot_core::grid::{export_csv, save_grid_function};
use pluripot_core::GridFunction;
use serde::Serialize;
use serde_json::Value;

/// Whether a number is a statement about the lattice or holds exactly.
#[derive(Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    Exact,
    Grid,
}

#[derive(Debug, Clone, Serialize)]
pub struct Quantity {
    pub name: String,
    pub value: Value,
    pub module: &'static str,
    pub params: Value,
    pub scale: Scale,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub experiment: String,
    pub inputs: Value,
    pub quantities: Vec<Quantity>,
    pub checks: Vec<Check>,
    pub artifacts: Vec<PathBuf>,
    pub passed: bool,
}

impl Report {
    pub fn new(experiment: &str, inputs: impl Serialize) -> Self {
        Self {
            experiment: experiment.into(),
            inputs: serde_json::to_value(inputs).unwrap_or(Value::Null),
            quantities: Vec::new(),
            checks: Vec::new(),
            artifacts: Vec::new(),
            passed: true,
        }
    }

    pub fn quantity(&mut self, name: &str, value: impl Serialize, module: &'static str, params: Value, scale: Scale) {
        self.quantities.push(Quantity {
            name: name.into(),
            value: serde_json::to_value(value).unwrap_or(Value::Null),
            module,
            params,
            scale,
        });
    }

    pub fn check(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.passed &= passed;
        self.checks.push(Check { name: name.into(), passed, detail: detail.into() });
    }

    pub fn failed_checks(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect()
    }

    /// Writes `<stem>.ppgf` and `<stem>.csv` into `dir`.
    pub fn dump_grid(&mut self, dir: &Path, stem: &str, f: &GridFunction) -> Result<()> {
        let bin = dir.join(format!("{stem}.ppgf"));
        save_grid_function(f, &bin).with_context(|| format!("writing {}", bin.display()))?;
        let csv = dir.join(format!("{stem}.csv"));
        let file = std::fs::File::create(&csv).with_context(|| format!("creating {}", csv.display()))?;
        export_csv(f, std::io::BufWriter::new(file)).with_context(|| format!("writing {}", csv.display()))?;
        self.artifacts.extend([bin, csv]);
        Ok(())
    }

    pub fn write_json(&mut self, dir: &Path, stem: &str, value: &impl Serialize) -> Result<()> {
        let path = dir.join(format!("{stem}.json"));
        std::fs::write(&path, serde_json::to_string_pretty(value)?).with_context(|| format!("writing {}", path.display()))?;
        self.artifacts.push(path);
        Ok(())
    }

    pub fn write_text(&mut self, dir: &Path, name: &str, text: &str) -> Result<()> {
        let path = dir.join(name);
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        self.artifacts.push(path);
        Ok(())
    }
}
