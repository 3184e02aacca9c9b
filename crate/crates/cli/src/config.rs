//! Flat INI-style run configuration: sections of `key = value` lines.
//! Unknown sections or keys are errors; missing keys take the documented
//! defaults and are echoed back into the resolved config.

use phasefield::coeff::CoeffField;
use phasefield::model::{
    BoundaryValue, InitialField, Potentials, ProblemSpec, SourceKind, SourceSpec,
};
use phasefield::stepper::SchemeConfig;
use std::collections::BTreeMap;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unknown section [{section}] (line {line})")]
    UnknownSection { section: String, line: usize },
    #[error("unknown key {section}.{key} (line {line})")]
    UnknownKey {
        section: String,
        key: String,
        line: usize,
    },
    #[error("{section}.{key}: {message}")]
    BadValue {
        section: String,
        key: String,
        message: String,
    },
}

/// Fully resolved run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub spec: ProblemSpec,
    pub scheme: SchemeConfig,
    pub n: usize,
    pub outdir: String,
    pub stride: usize,
    pub plots: bool,
    /// Keys that fell back to defaults, echoed for reproducibility.
    pub defaulted: Vec<String>,
}

struct RawConfig {
    // section -> key -> (value, line)
    entries: BTreeMap<String, BTreeMap<String, (String, usize)>>,
}

const KNOWN: &[(&str, &[&str])] = &[
    ("domain", &["length", "n"]),
    ("time", &["T", "dt"]),
    ("potentials", &["preset", "f_coeffs", "g_coeffs"]),
    ("source", &["kind", "r1", "r2", "r3", "r4", "lipschitz_r"]),
    (
        "bounds",
        &[
            "theta_star_low",
            "theta_star_high",
            "chi_star_low",
            "chi_star_high",
        ],
    ),
    ("bc", &["left", "right"]),
    ("ic", &["theta0", "chi0"]),
    (
        "scheme",
        &[
            "eps",
            "newton_tol",
            "newton_max",
            "theta_source_implicit",
            "quadrature_order",
        ],
    ),
    ("output", &["dir", "stride", "plots"]),
];

fn parse_raw(text: &str) -> Result<RawConfig, ConfigError> {
    let mut entries: BTreeMap<String, BTreeMap<String, (String, usize)>> = BTreeMap::new();
    let mut section = String::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.split(['#', ';']).next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or(ConfigError::Parse {
                line: line_no,
                message: "unterminated section header".into(),
            })?;
            section = name.trim().to_string();
            if !KNOWN.iter().any(|(s, _)| *s == section) {
                return Err(ConfigError::UnknownSection {
                    section,
                    line: line_no,
                });
            }
            entries.entry(section.clone()).or_default();
            continue;
        }
        let (key, value) = line.split_once('=').ok_or(ConfigError::Parse {
            line: line_no,
            message: format!("expected `key = value`, got `{line}`"),
        })?;
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if section.is_empty() {
            return Err(ConfigError::Parse {
                line: line_no,
                message: "key outside any [section]".into(),
            });
        }
        let allowed = KNOWN
            .iter()
            .find(|(s, _)| *s == section)
            .map(|(_, keys)| *keys)
            .unwrap_or(&[]);
        if !allowed.contains(&key.as_str()) {
            return Err(ConfigError::UnknownKey {
                section,
                key,
                line: line_no,
            });
        }
        entries
            .entry(section.clone())
            .or_default()
            .insert(key, (value, line_no));
    }
    Ok(RawConfig { entries })
}

struct Reader<'a> {
    raw: &'a RawConfig,
    defaulted: Vec<String>,
}

impl<'a> Reader<'a> {
    fn get(&mut self, section: &str, key: &str) -> Option<&'a str> {
        let v = self.get_optional(section, key);
        if v.is_none() {
            self.defaulted.push(format!("{section}.{key}"));
        }
        v
    }

    /// Like `get`, for keys that are truly optional (no default value
    /// exists, absence is not a fallback).
    fn get_optional(&self, section: &str, key: &str) -> Option<&'a str> {
        self.raw
            .entries
            .get(section)
            .and_then(|m| m.get(key))
            .map(|(v, _)| v.as_str())
    }

    fn f64_or(&mut self, section: &str, key: &str, default: f64) -> Result<f64, ConfigError> {
        match self.get(section, key) {
            None => Ok(default),
            Some(s) => s.parse::<f64>().map_err(|e| ConfigError::BadValue {
                section: section.into(),
                key: key.into(),
                message: format!("{e}"),
            }),
        }
    }

    fn usize_or(&mut self, section: &str, key: &str, default: usize) -> Result<usize, ConfigError> {
        match self.get(section, key) {
            None => Ok(default),
            Some(s) => s.parse::<usize>().map_err(|e| ConfigError::BadValue {
                section: section.into(),
                key: key.into(),
                message: format!("{e}"),
            }),
        }
    }

    fn bool_or(&mut self, section: &str, key: &str, default: bool) -> Result<bool, ConfigError> {
        match self.get(section, key) {
            None => Ok(default),
            Some(s) => match s {
                "true" | "yes" | "1" => Ok(true),
                "false" | "no" | "0" => Ok(false),
                other => Err(ConfigError::BadValue {
                    section: section.into(),
                    key: key.into(),
                    message: format!("expected a boolean, got `{other}`"),
                }),
            },
        }
    }

    fn str_or(&mut self, section: &str, key: &str, default: &str) -> String {
        self.get(section, key).unwrap_or(default).to_string()
    }
}

fn bad(section: &str, key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::BadValue {
        section: section.into(),
        key: key.into(),
        message: message.into(),
    }
}

fn parse_coeff(section: &str, key: &str, s: &str) -> Result<CoeffField, ConfigError> {
    let parts: Vec<&str> = s.split(':').collect();
    let nums = |expect: usize| -> Result<Vec<f64>, ConfigError> {
        if parts.len() != expect + 1 {
            return Err(bad(
                section,
                key,
                format!("expected {expect} parameters after `{}`", parts[0]),
            ));
        }
        parts[1..]
            .iter()
            .map(|p| {
                p.parse::<f64>()
                    .map_err(|e| bad(section, key, format!("{e} in `{p}`")))
            })
            .collect()
    };
    match parts[0] {
        "constant" => {
            let v = nums(1)?;
            Ok(CoeffField::Constant(v[0]))
        }
        "affine_x" => {
            let v = nums(2)?;
            Ok(CoeffField::AffineX { a: v[0], b: v[1] })
        }
        "affine_xt" => {
            let v = nums(4)?;
            Ok(CoeffField::AffineXT {
                a: v[0],
                b: v[1],
                c: v[2],
                d: v[3],
            })
        }
        other => Err(bad(
            section,
            key,
            format!("unknown coefficient preset `{other}` (want constant | affine_x | affine_xt)"),
        )),
    }
}

fn parse_boundary(section: &str, key: &str, s: &str) -> Result<BoundaryValue, ConfigError> {
    if let Some(rest) = s.strip_prefix("constant:") {
        let v = rest
            .parse::<f64>()
            .map_err(|e| bad(section, key, format!("{e}")))?;
        return Ok(BoundaryValue::Constant(v));
    }
    if let Some(rest) = s.strip_prefix("piecewise:") {
        let mut pts = Vec::new();
        for pair in rest.split(',') {
            let (t, v) = pair
                .split_once(':')
                .ok_or_else(|| bad(section, key, format!("expected `t:value`, got `{pair}`")))?;
            let t = t
                .parse::<f64>()
                .map_err(|e| bad(section, key, format!("{e}")))?;
            let v = v
                .parse::<f64>()
                .map_err(|e| bad(section, key, format!("{e}")))?;
            pts.push((t, v));
        }
        return Ok(BoundaryValue::PiecewiseLinear(pts));
    }
    Err(bad(
        section,
        key,
        format!("unknown boundary preset `{s}` (want constant:V | piecewise:t0:v0,t1:v1,...)"),
    ))
}

fn parse_initial(section: &str, key: &str, s: &str) -> Result<InitialField, ConfigError> {
    let parts: Vec<&str> = s.split(':').collect();
    let nums = |expect: usize| -> Result<Vec<f64>, ConfigError> {
        if parts.len() != expect + 1 {
            return Err(bad(
                section,
                key,
                format!("expected {expect} parameters after `{}`", parts[0]),
            ));
        }
        parts[1..]
            .iter()
            .map(|p| {
                p.parse::<f64>()
                    .map_err(|e| bad(section, key, format!("{e} in `{p}`")))
            })
            .collect()
    };
    match parts[0] {
        "constant" => Ok(InitialField::Constant(nums(1)?[0])),
        "affine" => {
            let v = nums(2)?;
            Ok(InitialField::Affine {
                left: v[0],
                right: v[1],
            })
        }
        "sine_bump" => {
            let v = nums(2)?;
            Ok(InitialField::SineBump {
                base: v[0],
                amplitude: v[1],
            })
        }
        other => Err(bad(
            section,
            key,
            format!("unknown initial preset `{other}` (want constant | affine | sine_bump)"),
        )),
    }
}

fn parse_coeff_list(section: &str, key: &str, s: &str) -> Result<Vec<f64>, ConfigError> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|e| bad(section, key, format!("{e} in `{p}`")))
        })
        .collect()
}

/// Parse and resolve a configuration file.
pub fn parse_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<RunConfig, ConfigError> {
    let raw = parse_raw(text)?;
    let mut r = Reader {
        raw: &raw,
        defaulted: Vec::new(),
    };

    let length = r.f64_or("domain", "length", 1.0)?;
    let n = r.usize_or("domain", "n", 128)?;
    let horizon = r.f64_or("time", "T", 1.0)?;
    let dt = r.f64_or("time", "dt", 1e-3)?;

    let potentials = match r.str_or("potentials", "preset", "first_order").as_str() {
        "first_order" => Potentials::FirstOrder,
        "second_order" => Potentials::SecondOrder,
        "custom" => {
            let f = r
                .get_optional("potentials", "f_coeffs")
                .ok_or_else(|| bad("potentials", "f_coeffs", "required for preset = custom"))?;
            let g = r
                .get_optional("potentials", "g_coeffs")
                .ok_or_else(|| bad("potentials", "g_coeffs", "required for preset = custom"))?;
            Potentials::Custom {
                f: parse_coeff_list("potentials", "f_coeffs", f)?,
                g: parse_coeff_list("potentials", "g_coeffs", g)?,
            }
        }
        other => {
            return Err(bad(
                "potentials",
                "preset",
                format!("unknown preset `{other}` (want first_order | second_order | custom)"),
            ))
        }
    };

    let source_kind = r.str_or("source", "kind", "none");
    let lipschitz_r = match r.get_optional("source", "lipschitz_r") {
        None => None,
        Some(s) => Some(
            s.parse::<f64>()
                .map_err(|e| bad("source", "lipschitz_r", format!("{e}")))?,
        ),
    };
    let source = match source_kind.as_str() {
        "none" => SourceSpec {
            kind: SourceKind::None,
            lipschitz_r,
        },
        "singular" => {
            let r1 = parse_coeff("source", "r1", &r.str_or("source", "r1", "constant:0.0"))?;
            let r2 = parse_coeff("source", "r2", &r.str_or("source", "r2", "constant:0.0"))?;
            SourceSpec {
                kind: SourceKind::Singular { r1, r2 },
                lipschitz_r,
            }
        }
        "linear" => {
            let r3 = parse_coeff("source", "r3", &r.str_or("source", "r3", "constant:0.0"))?;
            let r4 = parse_coeff("source", "r4", &r.str_or("source", "r4", "constant:0.0"))?;
            SourceSpec {
                kind: SourceKind::Linear { r3, r4 },
                lipschitz_r,
            }
        }
        other => {
            return Err(bad(
                "source",
                "kind",
                format!("unknown source kind `{other}` (want singular | linear | none)"),
            ))
        }
    };

    let theta_star_low = r.f64_or("bounds", "theta_star_low", 0.5)?;
    let theta_star_high = r.f64_or("bounds", "theta_star_high", 2.0)?;
    let chi_star_low = r.f64_or("bounds", "chi_star_low", 0.0)?;
    let chi_star_high = r.f64_or("bounds", "chi_star_high", 1.0)?;

    let bc_left = parse_boundary("bc", "left", &r.str_or("bc", "left", "constant:1.0"))?;
    let bc_right = parse_boundary("bc", "right", &r.str_or("bc", "right", "constant:1.0"))?;
    let theta0 = parse_initial("ic", "theta0", &r.str_or("ic", "theta0", "constant:1.0"))?;
    let chi0 = parse_initial("ic", "chi0", &r.str_or("ic", "chi0", "constant:0.0"))?;

    let mut scheme = SchemeConfig::new(dt, r.f64_or("scheme", "eps", 1e-3)?);
    scheme.newton_tol = r.f64_or("scheme", "newton_tol", 1e-10)?;
    scheme.newton_max = r.usize_or("scheme", "newton_max", 50)?;
    scheme.theta_source_implicit = r.bool_or("scheme", "theta_source_implicit", true)?;
    scheme.quadrature_order = r.usize_or("scheme", "quadrature_order", 16)?;

    let outdir = r.str_or("output", "dir", "out");
    let stride = r.usize_or("output", "stride", 10)?;
    let plots = r.bool_or("output", "plots", false)?;

    Ok(RunConfig {
        spec: ProblemSpec {
            length,
            horizon,
            potentials,
            source,
            theta_star_low,
            theta_star_high,
            chi_star_low,
            chi_star_high,
            bc_left,
            bc_right,
            theta0,
            chi0,
        },
        scheme,
        n,
        outdir,
        stride,
        plots,
        defaulted: r.defaulted,
    })
}

fn coeff_str(c: &CoeffField) -> String {
    match *c {
        CoeffField::Constant(v) => format!("constant:{v}"),
        CoeffField::AffineX { a, b } => format!("affine_x:{a}:{b}"),
        CoeffField::AffineXT { a, b, c, d } => format!("affine_xt:{a}:{b}:{c}:{d}"),
    }
}

fn boundary_str(bv: &BoundaryValue) -> String {
    match bv {
        BoundaryValue::Constant(v) => format!("constant:{v}"),
        BoundaryValue::PiecewiseLinear(pts) => {
            let body: Vec<String> = pts.iter().map(|(t, v)| format!("{t}:{v}")).collect();
            format!("piecewise:{}", body.join(","))
        }
    }
}

fn initial_str(f: &InitialField) -> String {
    match *f {
        InitialField::Constant(v) => format!("constant:{v}"),
        InitialField::Affine { left, right } => format!("affine:{left}:{right}"),
        InitialField::SineBump { base, amplitude } => format!("sine_bump:{base}:{amplitude}"),
    }
}

fn list_str(v: &[f64]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// Serialize the fully-resolved configuration (defaults included), so a run
/// can be reproduced from its artifacts alone.
pub fn resolved_config(cfg: &RunConfig) -> String {
    let spec = &cfg.spec;
    let mut out = String::new();
    out.push_str("[domain]\n");
    out.push_str(&format!("length = {}\n", spec.length));
    out.push_str(&format!("n = {}\n\n", cfg.n));
    out.push_str("[time]\n");
    out.push_str(&format!("T = {}\n", spec.horizon));
    out.push_str(&format!("dt = {}\n\n", cfg.scheme.dt));
    out.push_str("[potentials]\n");
    match &spec.potentials {
        Potentials::FirstOrder => out.push_str("preset = first_order\n\n"),
        Potentials::SecondOrder => out.push_str("preset = second_order\n\n"),
        Potentials::Custom { f, g } => {
            out.push_str("preset = custom\n");
            out.push_str(&format!("f_coeffs = {}\n", list_str(f)));
            out.push_str(&format!("g_coeffs = {}\n\n", list_str(g)));
        }
    }
    out.push_str("[source]\n");
    match &spec.source.kind {
        SourceKind::None => out.push_str("kind = none\n"),
        SourceKind::Singular { r1, r2 } => {
            out.push_str("kind = singular\n");
            out.push_str(&format!("r1 = {}\n", coeff_str(r1)));
            out.push_str(&format!("r2 = {}\n", coeff_str(r2)));
        }
        SourceKind::Linear { r3, r4 } => {
            out.push_str("kind = linear\n");
            out.push_str(&format!("r3 = {}\n", coeff_str(r3)));
            out.push_str(&format!("r4 = {}\n", coeff_str(r4)));
        }
    }
    if let Some(lr) = spec.source.lipschitz_r {
        out.push_str(&format!("lipschitz_r = {lr}\n"));
    }
    out.push('\n');
    out.push_str("[bounds]\n");
    out.push_str(&format!("theta_star_low = {}\n", spec.theta_star_low));
    out.push_str(&format!("theta_star_high = {}\n", spec.theta_star_high));
    out.push_str(&format!("chi_star_low = {}\n", spec.chi_star_low));
    out.push_str(&format!("chi_star_high = {}\n\n", spec.chi_star_high));
    out.push_str("[bc]\n");
    out.push_str(&format!("left = {}\n", boundary_str(&spec.bc_left)));
    out.push_str(&format!("right = {}\n\n", boundary_str(&spec.bc_right)));
    out.push_str("[ic]\n");
    out.push_str(&format!("theta0 = {}\n", initial_str(&spec.theta0)));
    out.push_str(&format!("chi0 = {}\n\n", initial_str(&spec.chi0)));
    out.push_str("[scheme]\n");
    out.push_str(&format!("eps = {}\n", cfg.scheme.eps));
    out.push_str(&format!("newton_tol = {}\n", cfg.scheme.newton_tol));
    out.push_str(&format!("newton_max = {}\n", cfg.scheme.newton_max));
    out.push_str(&format!(
        "theta_source_implicit = {}\n",
        cfg.scheme.theta_source_implicit
    ));
    out.push_str(&format!(
        "quadrature_order = {}\n\n",
        cfg.scheme.quadrature_order
    ));
    out.push_str("[output]\n");
    out.push_str(&format!("dir = {}\n", cfg.outdir));
    out.push_str(&format!("stride = {}\n", cfg.stride));
    out.push_str(&format!("plots = {}\n", cfg.plots));
    out
}
