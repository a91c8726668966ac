//! Flat dotted-key configuration: built-in defaults, overridden by a JSON
//! config file, overridden by command-line flags of the same name.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use invertkit::gp::GpConfig;
use invertkit::psi::PsiConfig;
use invertkit::IntervalBox;
use serde_json::{json, Map, Value};

pub const WORKERS_ENV: &str = "INVERTKIT_WORKERS";

pub const DEFAULT_SYNTH_MODEL: &str = "(* (sin (* 5 x)) (exp (neg (* x x))))";

/// Which key families a subcommand reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Section {
    Gp,
    Psi,
    Problem,
    Data,
    Synth,
    Out,
    Plot,
}

impl Section {
    fn of(key: &str) -> Section {
        match key.split('.').next() {
            Some("gp") => Section::Gp,
            Some("psi") => Section::Psi,
            Some("problem") => Section::Problem,
            Some("data") => Section::Data,
            Some("synth") => Section::Synth,
            Some("out") => Section::Out,
            _ => Section::Plot,
        }
    }
}

pub struct Key {
    pub name: String,
    pub help: String,
    pub default: Value,
}

fn key(name: &str, default: Value, help: &str) -> Key {
    Key { name: name.to_string(), help: help.to_string(), default }
}

/// Every recognised key with its default.
pub fn keys() -> Vec<Key> {
    let mut out = Vec::new();
    let gp = serde_json::to_value(GpConfig::default()).expect("GpConfig serialises");
    if let Value::Object(fields) = gp {
        for (field, default) in fields {
            let help = match field.as_str() {
                "basis" => "operator symbols, e.g. [\"+\",\"*\",\"sin\"]",
                "const_range" => "range of random constants, [lo, hi]",
                "workers" => "threads for fitness evaluation",
                _ => "",
            };
            out.push(key(&format!("gp.{field}"), default, help));
        }
    }
    let psi = PsiConfig::default();
    out.extend([
        key("psi.resolution", json!(psi.resolution), "volume below which boxes are not split"),
        key("psi.resolution_width", Value::Null, "per-axis width; sets psi.resolution to width^n"),
        key("psi.max_boxes", json!(psi.max_boxes), "cap on classified boxes per worker"),
        key("psi.workers", json!(psi.workers), "subdomains along the first axis"),
        key("problem.model", Value::Null, "model as S-expressions, one per output"),
        key("problem.model_file", Value::Null, "file holding the model text"),
        key("problem.R", Value::Null, "adjustment box, [[lo, hi], ...]"),
        key("problem.P", Value::Null, "performance box, [[lo, hi], ...]"),
        key("data.path", Value::Null, "CSV dataset with a header row"),
        key("data.inputs", Value::Null, "number of leading input columns (default: all but the last)"),
        key("data.decimate", json!(1), "keep every k-th row"),
        key("synth.model", json!(DEFAULT_SYNTH_MODEL), "generator model"),
        key("synth.R", json!([[-3.0, 3.0]]), "sampling box"),
        key("synth.points", json!(601), "samples per axis"),
        key("synth.noise", json!(0.0), "half-width of uniform output noise"),
        key("synth.seed", json!(0), "noise and sampling seed"),
        key("synth.sampling", json!("grid"), "grid or random"),
        key("out.dir", json!("."), "output directory"),
        key("plot.paving", Value::Null, "paving JSON to render"),
        key("plot.out", Value::Null, "SVG path (default: paving path with .svg)"),
    ]);
    out
}

pub fn keys_for(sections: &[Section]) -> Vec<Key> {
    keys().into_iter().filter(|k| sections.contains(&Section::of(&k.name))).collect()
}

/// A flag value is JSON when it parses as JSON, otherwise a plain string, so
/// `--gp.seed 3` is a number and `--problem.model "(* x x)"` a string.
pub fn flag_value(raw: &str) -> Value {
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

#[derive(Debug, Clone)]
pub struct Resolved {
    values: BTreeMap<String, Value>,
}

impl Resolved {
    pub fn resolve(
        sections: &[Section],
        file: Option<&Path>,
        flags: Vec<(String, Value)>,
        workers_env: Option<String>,
    ) -> Result<Self> {
        let known = keys();
        let mut values: BTreeMap<String, Value> =
            keys_for(sections).into_iter().map(|k| (k.name, k.default)).collect();

        if let Some(raw) = workers_env {
            let n: usize = raw
                .trim()
                .parse()
                .with_context(|| format!("{WORKERS_ENV}={raw:?} is not a worker count"))?;
            for k in ["gp.workers", "psi.workers"] {
                if let Some(v) = values.get_mut(k) {
                    *v = json!(n);
                }
            }
        }

        if let Some(path) = file {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            let parsed: Value = serde_json::from_str(&text)
                .with_context(|| format!("parsing config {}", path.display()))?;
            let Value::Object(map) = parsed else {
                bail!("config {} must be a JSON object", path.display());
            };
            let mut flat = Map::new();
            flatten("", map, &mut flat);
            for (k, v) in flat {
                if !known.iter().any(|known| known.name == k) {
                    bail!("unknown config key `{k}` in {}", path.display());
                }
                // Keys for other subcommands may share the file.
                if let Some(slot) = values.get_mut(&k) {
                    *slot = v;
                }
            }
        }

        for (k, v) in flags {
            values.insert(k, v);
        }
        Ok(Self { values })
    }

    pub fn echo(&self) -> String {
        serde_json::to_string_pretty(&self.values).expect("JSON values serialise")
    }

    fn get(&self, key: &str) -> &Value {
        self.values.get(key).unwrap_or(&Value::Null)
    }

    fn is_set(&self, key: &str) -> bool {
        !self.get(key).is_null()
    }

    pub fn usize(&self, key: &str) -> Result<usize> {
        self.get(key)
            .as_u64()
            .map(|v| v as usize)
            .ok_or_else(|| anyhow!("`{key}` must be a non-negative integer, got {}", self.get(key)))
    }

    pub fn opt_usize(&self, key: &str) -> Result<Option<usize>> {
        if self.is_set(key) {
            self.usize(key).map(Some)
        } else {
            Ok(None)
        }
    }

    pub fn u64(&self, key: &str) -> Result<u64> {
        self.get(key)
            .as_u64()
            .ok_or_else(|| anyhow!("`{key}` must be a non-negative integer, got {}", self.get(key)))
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        self.get(key)
            .as_f64()
            .ok_or_else(|| anyhow!("`{key}` must be a number, got {}", self.get(key)))
    }

    pub fn opt_string(&self, key: &str) -> Result<Option<String>> {
        match self.get(key) {
            Value::Null => Ok(None),
            Value::String(s) => Ok(Some(s.clone())),
            // A constant model such as `--problem.model 2` arrives as a number.
            Value::Number(n) => Ok(Some(n.to_string())),
            other => bail!("`{key}` must be a string, got {other}"),
        }
    }

    pub fn string(&self, key: &str) -> Result<String> {
        self.opt_string(key)?.ok_or_else(|| anyhow!("`{key}` is required"))
    }

    pub fn path(&self, key: &str) -> Result<PathBuf> {
        self.string(key).map(PathBuf::from)
    }

    pub fn opt_path(&self, key: &str) -> Result<Option<PathBuf>> {
        Ok(self.opt_string(key)?.map(PathBuf::from))
    }

    /// `[[lo, hi], ...]`, or a bare `[lo, hi]` for one axis.
    pub fn interval_box(&self, key: &str) -> Result<IntervalBox> {
        let v = self.get(key);
        if v.is_null() {
            bail!("`{key}` is required");
        }
        let bounds: Vec<(f64, f64)> = match serde_json::from_value::<Vec<[f64; 2]>>(v.clone()) {
            Ok(pairs) => pairs.into_iter().map(|[lo, hi]| (lo, hi)).collect(),
            Err(_) => match serde_json::from_value::<[f64; 2]>(v.clone()) {
                Ok([lo, hi]) => vec![(lo, hi)],
                Err(_) => bail!("`{key}` must look like [[lo, hi], ...], got {v}"),
            },
        };
        IntervalBox::from_bounds(&bounds).with_context(|| format!("`{key}`"))
    }

    pub fn gp_config(&self) -> Result<GpConfig> {
        let fields: Map<String, Value> = self
            .values
            .iter()
            .filter_map(|(k, v)| k.strip_prefix("gp.").map(|f| (f.to_string(), v.clone())))
            .collect();
        let config: GpConfig =
            serde_json::from_value(Value::Object(fields)).context("GP settings")?;
        config.validate()?;
        Ok(config)
    }

    pub fn psi_config(&self, dim: usize) -> Result<PsiConfig> {
        let resolution = if self.is_set("psi.resolution_width") {
            let w = self.f64("psi.resolution_width")?;
            if !(w > 0.0 && w.is_finite()) {
                bail!("`psi.resolution_width` must be positive, got {w}");
            }
            w.powi(dim as i32)
        } else {
            self.f64("psi.resolution")?
        };
        let config = PsiConfig {
            resolution,
            max_boxes: self.usize("psi.max_boxes")?,
            workers: self.usize("psi.workers")?,
        };
        config.validate()?;
        Ok(config)
    }
}

/// `{"gp": {"seed": 1}}` and `{"gp.seed": 1}` mean the same thing.
fn flatten(prefix: &str, map: Map<String, Value>, out: &mut Map<String, Value>) {
    for (k, v) in map {
        let name = if prefix.is_empty() { k } else { format!("{prefix}.{k}") };
        match v {
            Value::Object(inner) => flatten(&name, inner, out),
            other => {
                out.insert(name, other);
            }
        }
    }
}
