//! Scenario loading: defaults, then a TOML file, then `--set` overrides.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use rehab_core::sim::Scenario;
use toml::{Table, Value};

pub const CONFIG_ENV: &str = "REHAB_CONFIG";

#[derive(Debug, Clone, Default)]
pub struct ConfigArgs {
    pub scenario: Option<PathBuf>,
    pub sets: Vec<String>,
    pub seed: Option<u64>,
}

impl ConfigArgs {
    /// Whether the user asked for a specific configuration on the command line.
    pub fn is_explicit(&self) -> bool {
        self.scenario.is_some() || !self.sets.is_empty() || self.seed.is_some()
    }
}

/// Builds the scenario. The file comes from `--scenario`, else from
/// `REHAB_CONFIG`, else defaults only.
pub fn load_scenario(args: &ConfigArgs) -> Result<Scenario> {
    let file = args
        .scenario
        .clone()
        .or_else(|| std::env::var_os(CONFIG_ENV).map(PathBuf::from));
    let mut tree = Value::try_from(Scenario::default())
        .context("serializing default scenario")?
        .as_table()
        .cloned()
        .ok_or_else(|| anyhow!("default scenario is not a table"))?;
    if let Some(path) = &file {
        merge(&mut tree, read_table(path)?);
    }
    for s in &args.sets {
        apply_set(&mut tree, s)?;
    }
    let mut scenario: Scenario = Value::Table(tree)
        .try_into()
        .map_err(|e| anyhow!("invalid configuration: {e}"))?;
    if let Some(seed) = args.seed {
        scenario.seed = seed;
    }
    scenario.validate()?;
    Ok(scenario)
}

/// Reads a scenario file, checking it on its own first so that errors point
/// at a line and column of that file.
fn read_table(path: &Path) -> Result<Table> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if let Err(e) = toml::from_str::<Scenario>(&text) {
        bail!("{}: {e}", path.display());
    }
    toml::from_str(&text).map_err(|e| anyhow!("{}: {e}", path.display()))
}

fn merge(base: &mut Table, over: Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(Value::Table(b)), Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// Applies `a.b.c=value`. Numeric segments index into arrays. The value is
/// read as a TOML literal, falling back to a bare string.
pub fn apply_set(tree: &mut Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| anyhow!("--set expects key=value, got '{assignment}'"))?;
    let value = parse_value(raw.trim());
    let path: Vec<&str> = key.trim().split('.').collect();
    if path.iter().any(|p| p.is_empty()) {
        bail!("--set: malformed key '{key}'");
    }
    let (last, parents) = path.split_last().expect("split yields one segment");
    let mut node = tree
        .entry(parents.first().copied().unwrap_or(last).to_string())
        .or_insert_with(|| Value::Table(Table::new()));
    if parents.is_empty() {
        *node = value;
        return Ok(());
    }
    for seg in &parents[1..] {
        node = child(node, seg, key)?;
    }
    *child(node, last, key)? = value;
    Ok(())
}

fn child<'a>(node: &'a mut Value, seg: &str, key: &str) -> Result<&'a mut Value> {
    match node {
        Value::Table(t) => Ok(t.entry(seg.to_string()).or_insert_with(|| Value::Table(Table::new()))),
        Value::Array(a) => {
            let i: usize = seg
                .parse()
                .map_err(|_| anyhow!("--set {key}: '{seg}' is not an array index"))?;
            let len = a.len();
            a.get_mut(i)
                .ok_or_else(|| anyhow!("--set {key}: index {i} out of range (length {len})"))
        }
        _ => bail!("--set {key}: '{seg}' is below a non-table value"),
    }
}

fn parse_value(raw: &str) -> Value {
    toml::from_str::<Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()))
}
