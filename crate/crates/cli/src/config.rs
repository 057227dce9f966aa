//! Scenario files: a plain-text, sectioned `key = value` format.
//!
//! ```text
//! # global keys come before the first section
//! seed = 7
//!
//! [disk_isoperimetric]        # section name = scenario name
//! check = isoperimetric
//! shape = disk
//! shape.r = 1
//! levels = 4, 5
//! target = 1
//! tolerance = 5e-3
//! ```
//!
//! `#` starts a comment anywhere on a line. Keys are validated against the
//! check's schema (see [`crate::catalog`]); errors carry the key and line.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use abp_core::abp::AbpMode;
use abp_core::comparison::Profile;
use abp_core::mesh::shapes::ShapeParams;

use crate::catalog::CheckId;
use crate::density::DensityExpr;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: usize,
    pub key: Option<String>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.key {
            Some(k) => write!(f, "line {}: key `{}`: {}", self.line, k, self.message),
            None => write!(f, "line {}: {}", self.line, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

fn err(line: usize, key: Option<&str>, message: impl Into<String>) -> ConfigError {
    ConfigError {
        line,
        key: key.map(str::to_string),
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Geometry {
    Shape { name: String, params: ShapeParams },
    MeshFile(PathBuf),
}

impl fmt::Display for Geometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Geometry::Shape { name, params } => {
                write!(f, "{name}")?;
                if !params.is_empty() {
                    let p: Vec<String> = params.iter().map(|(k, v)| format!("{k}={v}")).collect();
                    write!(f, "({})", p.join(", "))?;
                }
                Ok(())
            }
            Geometry::MeshFile(p) => write!(f, "{}", p.display()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelSpec {
    pub n: usize,
    pub profile: Profile,
    pub r_max: f64,
}

/// Pass criteria beyond "the inequality holds".
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Expectations {
    pub target: Option<f64>,
    pub tolerance: Option<f64>,
    pub min_ratio: Option<f64>,
    pub min_margin: Option<f64>,
    pub min_covered: Option<f64>,
    pub max_negative: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub line: usize,
    pub check: CheckId,
    pub geometry: Option<Geometry>,
    pub density: DensityExpr,
    pub levels: Vec<u32>,
    pub samples: usize,
    pub seed: Option<u64>,
    pub mode: Option<AbpMode>,
    pub model: Option<ModelSpec>,
    pub inner: f64,
    pub outer: Option<f64>,
    pub rho: Option<f64>,
    pub radius: Option<f64>,
    pub count: usize,
    pub expect: Expectations,
    /// Raw settings as written, for the report.
    pub settings: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub seed: Option<u64>,
    pub scenarios: Vec<Scenario>,
}

struct RawSection {
    name: String,
    line: usize,
    entries: Vec<(String, String, usize)>,
}

pub fn load_config(path: &Path) -> Result<Config, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| err(0, None, format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text, path.parent().unwrap_or(Path::new(".")))
}

/// Parses a config; mesh paths are resolved against `base`.
pub fn parse_config(text: &str, base: &Path) -> Result<Config, ConfigError> {
    let mut globals: Vec<(String, String, usize)> = Vec::new();
    let mut sections: Vec<RawSection> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| err(ln, None, "unterminated section header"))?
                .trim();
            if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                return Err(err(ln, None, format!("invalid scenario name `{name}`")));
            }
            if sections.iter().any(|s| s.name == name) {
                return Err(err(ln, None, format!("duplicate scenario `{name}`")));
            }
            sections.push(RawSection {
                name: name.to_string(),
                line: ln,
                entries: Vec::new(),
            });
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(ln, None, format!("expected `key = value`, found `{line}`")))?;
        let (key, value) = (key.trim().to_string(), value.trim().to_string());
        if key.is_empty() {
            return Err(err(ln, None, "empty key"));
        }
        let target = match sections.last_mut() {
            Some(s) => &mut s.entries,
            None => &mut globals,
        };
        if target.iter().any(|(k, _, _)| *k == key) {
            return Err(err(ln, Some(&key), "duplicate key"));
        }
        target.push((key, value, ln));
    }

    let mut seed = None;
    for (k, v, ln) in &globals {
        match k.as_str() {
            "seed" => seed = Some(parse_num::<u64>(v, k, *ln)?),
            _ => return Err(err(*ln, Some(k), "unknown global key (only `seed` is allowed)")),
        }
    }
    if sections.is_empty() {
        return Err(err(text.lines().count().max(1), None, "no scenarios defined"));
    }
    let scenarios = sections
        .into_iter()
        .map(|s| build_scenario(s, base))
        .collect::<Result<_, _>>()?;
    Ok(Config { seed, scenarios })
}

fn parse_num<T: std::str::FromStr>(v: &str, key: &str, ln: usize) -> Result<T, ConfigError> {
    v.parse::<T>()
        .map_err(|_| err(ln, Some(key), format!("invalid value `{v}`")))
}

fn parse_f64(v: &str, key: &str, ln: usize) -> Result<f64, ConfigError> {
    let x: f64 = parse_num(v, key, ln)?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(err(ln, Some(key), format!("value `{v}` is not finite")))
    }
}

fn build_scenario(raw: RawSection, base: &Path) -> Result<Scenario, ConfigError> {
    let check_entry = raw
        .entries
        .iter()
        .find(|(k, _, _)| k == "check")
        .ok_or_else(|| err(raw.line, Some("check"), format!("scenario `{}` has no check", raw.name)))?;
    let check = CheckId::parse(&check_entry.1)
        .ok_or_else(|| err(check_entry.2, Some("check"), format!("unknown check id `{}`", check_entry.1)))?;
    let allowed = check.keys();

    let mut sc = Scenario {
        name: raw.name.clone(),
        line: raw.line,
        check,
        geometry: None,
        density: DensityExpr::constant(1.0),
        levels: check.default_levels().to_vec(),
        samples: 10_000,
        seed: None,
        mode: None,
        model: None,
        inner: 0.0,
        outer: None,
        rho: None,
        radius: None,
        count: 50,
        expect: Expectations::default(),
        settings: BTreeMap::new(),
    };
    let mut shape_name: Option<(String, usize)> = None;
    let mut shape_params = ShapeParams::new();
    let mut model_kind: Option<(String, usize)> = None;
    let (mut model_n, mut alpha, mut s_param, mut r_max) = (None, None, None, 10.0);

    for (key, value, ln) in &raw.entries {
        let ln = *ln;
        sc.settings.insert(key.clone(), value.clone());
        let head = key.split('.').next().unwrap_or("");
        if !allowed.contains(&head) && !(head == "shape" && allowed.contains(&"shape")) {
            return Err(err(ln, Some(key), format!("not a parameter of check `{}`", check.id())));
        }
        match key.as_str() {
            "check" => {}
            "shape" => shape_name = Some((value.clone(), ln)),
            "mesh" => sc.geometry = Some(Geometry::MeshFile(base.join(value))),
            "density" => {
                sc.density = DensityExpr::parse(value).map_err(|m| err(ln, Some(key), m))?;
            }
            "levels" => {
                sc.levels = value
                    .split(',')
                    .map(|t| parse_num::<u32>(t.trim(), key, ln))
                    .collect::<Result<_, _>>()?;
                if sc.levels.is_empty() || sc.levels.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(err(ln, Some(key), "levels must be a nonempty increasing list"));
                }
                if sc.levels.iter().any(|l| *l > 8) {
                    return Err(err(ln, Some(key), "levels above 8 are not supported"));
                }
            }
            "samples" => {
                sc.samples = parse_num(value, key, ln)?;
                if sc.samples == 0 {
                    return Err(err(ln, Some(key), "must be positive"));
                }
            }
            "count" => {
                sc.count = parse_num(value, key, ln)?;
                if sc.count == 0 {
                    return Err(err(ln, Some(key), "must be positive"));
                }
            }
            "seed" => sc.seed = Some(parse_num(value, key, ln)?),
            "mode" => {
                sc.mode = Some(match value.as_str() {
                    "sobolev" => AbpMode::Sobolev,
                    "fwc" => AbpMode::Fwc,
                    "michael_simon" => AbpMode::MichaelSimon,
                    "log_sobolev" => AbpMode::LogSobolev,
                    other => return Err(err(ln, Some(key), format!("unknown mode `{other}`"))),
                })
            }
            "model" => model_kind = Some((value.clone(), ln)),
            "n" => {
                let n: usize = parse_num(value, key, ln)?;
                if !(2..=16).contains(&n) {
                    return Err(err(ln, Some(key), "dimension must be in 2..=16"));
                }
                model_n = Some(n);
            }
            "alpha" => alpha = Some(parse_f64(value, key, ln)?),
            "s" => s_param = Some(parse_f64(value, key, ln)?),
            "r_max" => r_max = parse_f64(value, key, ln)?,
            "inner" => sc.inner = parse_f64(value, key, ln)?,
            "outer" => sc.outer = Some(parse_f64(value, key, ln)?),
            "rho" => sc.rho = Some(parse_f64(value, key, ln)?),
            "radius" => sc.radius = Some(parse_f64(value, key, ln)?),
            "target" => sc.expect.target = Some(parse_f64(value, key, ln)?),
            "tolerance" => sc.expect.tolerance = Some(parse_f64(value, key, ln)?),
            "min_ratio" => sc.expect.min_ratio = Some(parse_f64(value, key, ln)?),
            "min_margin" => sc.expect.min_margin = Some(parse_f64(value, key, ln)?),
            "min_covered" => sc.expect.min_covered = Some(parse_f64(value, key, ln)?),
            "max_negative" => sc.expect.max_negative = Some(parse_f64(value, key, ln)?),
            k if k.starts_with("shape.") => {
                let p = &k["shape.".len()..];
                if p.is_empty() {
                    return Err(err(ln, Some(key), "empty shape parameter name"));
                }
                shape_params.insert(p.to_string(), parse_f64(value, key, ln)?);
            }
            _ => return Err(err(ln, Some(key), "unknown key")),
        }
    }

    if let Some((name, ln)) = shape_name {
        if sc.geometry.is_some() {
            return Err(err(ln, Some("shape"), "give either `shape` or `mesh`, not both"));
        }
        if !abp_core::mesh::shapes::SHAPES.contains(&name.as_str()) {
            return Err(err(ln, Some("shape"), format!("unknown shape `{name}`")));
        }
        sc.geometry = Some(Geometry::Shape {
            name,
            params: shape_params,
        });
    } else if !shape_params.is_empty() {
        return Err(err(raw.line, Some("shape"), "shape parameters given without `shape`"));
    }

    if let Some((kind, ln)) = model_kind {
        let need = |v: Option<f64>, k: &str| v.ok_or_else(|| err(ln, Some(k), format!("model `{kind}` needs `{k}`")));
        let profile = match kind.as_str() {
            "euclidean" => Profile::Euclidean,
            "cone" => Profile::Cone { alpha: need(alpha, "alpha")? },
            "smoothed_cone" => Profile::SmoothedCone {
                alpha: need(alpha, "alpha")?,
                s: need(s_param, "s")?,
            },
            other => return Err(err(ln, Some("model"), format!("unknown model `{other}`"))),
        };
        sc.model = Some(ModelSpec {
            n: model_n.ok_or_else(|| err(ln, Some("n"), "model needs the dimension `n`"))?,
            profile,
            r_max,
        });
    }

    for key in check.required() {
        let present = match *key {
            "geometry" => sc.geometry.is_some(),
            "model" => sc.model.is_some(),
            "mode" => sc.mode.is_some(),
            "outer" => sc.outer.is_some(),
            "rho" => sc.rho.is_some(),
            "radius" => sc.radius.is_some(),
            _ => true,
        };
        if !present {
            let shown = if *key == "geometry" { "shape" } else { key };
            return Err(err(
                raw.line,
                Some(shown),
                format!("check `{}` requires `{}`", check.id(), if *key == "geometry" { "shape or mesh" } else { key }),
            ));
        }
    }
    Ok(sc)
}
