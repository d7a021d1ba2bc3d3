//! Scenario files: a versioned TOML schema, the builtin catalog and the
//! resolution of a file into the library's specifications.

use std::collections::BTreeMap;
use std::ops::Range;
use std::path::{Path, PathBuf};

use ghostorbit::census::{Region, Window};
use ghostorbit::flow::{Builtin, CylinderMap, FamilySpec, FieldSpec, Model, PolynomialField};
use ghostorbit::homotopy::{uniform_grid, SweepOpts};
use ghostorbit::lefschetz::{DiscreteMapSpec, HomologyData};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use toml::Spanned;

pub const SCHEMA: &str = "orbit-scenario/1";

/// Model builtins, resolved to flows or mapping cylinders.
pub const MODEL_BUILTINS: [&str; 5] = ["hopf", "hopf_ab", "planar_plus", "planar_minus", "period_doubling"];

/// Homology builtins of the `[lefschetz]` table.
pub const HOMOLOGY_BUILTINS: [&str; 2] = ["cat_map", "identity_s2"];

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{path}:{line}:{column}: {message}")]
    Invalid {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    schema: Spanned<String>,
    name: String,
    description: Option<String>,
    model: Option<Spanned<RawModel>>,
    window: Option<Spanned<RawWindow>>,
    census: Option<RawCensus>,
    sweep: Option<Spanned<RawSweep>>,
    lefschetz: Option<Spanned<RawLefschetz>>,
    #[serde(default)]
    options: SweepOpts,
    #[serde(default)]
    output: Output,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    builtin: Option<String>,
    #[serde(default)]
    params: BTreeMap<String, f64>,
    /// Polynomial vector field.
    field: Option<PolynomialField>,
    /// Polynomial discrete map, studied through its mapping cylinder.
    map: Option<PolynomialField>,
    sphere_radius: Option<f64>,
    #[serde(default)]
    reversed: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWindow {
    region: Region,
    /// Period cutoff, in time units of the flow.
    s_max: f64,
    degree_max: Option<u32>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCensus {
    t: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    t_range: Option<(f64, f64)>,
    points: Option<usize>,
    grid: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLefschetz {
    builtin: Option<String>,
    /// Integer matrix of a toral automorphism.
    matrix: Option<Vec<Vec<i64>>>,
    homology: Option<HomologyData>,
    oracle: Option<DiscreteMapSpec>,
    d_max: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Output {
    pub dir: Option<PathBuf>,
}

/// The model with the catalog entry it came from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelChoice {
    pub source: String,
    pub model: Model,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPlan {
    pub range: (f64, f64),
    pub grid: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LefschetzPlan {
    pub source: String,
    pub homology: HomologyData,
    pub d_max: u32,
    pub oracle: Option<DiscreteMapSpec>,
}

/// A fully resolved scenario; reports embed it verbatim.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub schema: String,
    pub name: String,
    pub description: Option<String>,
    pub model: Option<ModelChoice>,
    pub window: Option<Window>,
    pub t: Option<f64>,
    pub sweep: Option<SweepPlan>,
    pub lefschetz: Option<LefschetzPlan>,
    pub options: SweepOpts,
    pub output: Output,
}

/// Command-line settings that take precedence over the file.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    /// Degree cutoff of the window, and order of the Lefschetz tables.
    pub degree_max: Option<u32>,
}

impl Scenario {
    pub fn family(&self) -> Option<FamilySpec> {
        Some(FamilySpec {
            model: self.model.as_ref()?.model.clone(),
            range: self.sweep.as_ref()?.range,
        })
    }
}

pub fn load(path: &Path, overrides: Overrides) -> Result<Scenario, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse(&text, path, overrides)
}

/// Parses and validates scenario text; `path` only labels messages.
pub fn parse(text: &str, path: &Path, overrides: Overrides) -> Result<Scenario, ConfigError> {
    let raw: RawScenario = toml::from_str(text).map_err(|e| match e.span() {
        Some(span) => {
            let (line, column) = position(text, span.start);
            ConfigError::Invalid {
                path: path.to_path_buf(),
                line,
                column,
                message: e.message().trim_end().to_string(),
            }
        }
        None => ConfigError::Parse {
            path: path.to_path_buf(),
            message: e.to_string().trim_end().to_string(),
        },
    })?;
    let invalid = |span: Range<usize>, message: String| {
        let (line, column) = position(text, span.start);
        ConfigError::Invalid {
            path: path.to_path_buf(),
            line,
            column,
            message,
        }
    };

    if raw.schema.get_ref() != SCHEMA {
        return Err(invalid(
            raw.schema.span(),
            format!("unsupported schema `{}`, expected `{SCHEMA}`", raw.schema.get_ref()),
        ));
    }

    let model = match &raw.model {
        Some(m) => Some(resolve_model(m.get_ref()).map_err(|e| invalid(m.span(), e))?),
        None => None,
    };

    let window = match &raw.window {
        Some(w) => {
            let span = w.span();
            let w = w.get_ref();
            let mut window = Window::new(w.region.clone(), w.s_max).with_degree_max(w.degree_max);
            if let Some(d) = overrides.degree_max {
                window.degree_max = Some(d);
            }
            window.validate().map_err(|e| invalid(span.clone(), e.to_string()))?;
            if let Some(m) = &model {
                if m.model.dim() != window.region.dim() {
                    return Err(invalid(
                        span,
                        format!("region has dimension {}, model has {}", window.region.dim(), m.model.dim()),
                    ));
                }
            }
            Some(window)
        }
        None => None,
    };

    let sweep = match &raw.sweep {
        Some(s) => Some(resolve_sweep(s.get_ref()).map_err(|e| invalid(s.span(), e))?),
        None => None,
    };
    if let (Some(s), None) = (&raw.sweep, &model) {
        return Err(invalid(s.span(), "a sweep needs a [model] table".into()));
    }

    let lefschetz = match &raw.lefschetz {
        Some(l) => {
            let mut plan = resolve_lefschetz(l.get_ref()).map_err(|e| invalid(l.span(), e))?;
            if let Some(d) = overrides.degree_max {
                plan.d_max = d;
            }
            if plan.d_max == 0 {
                return Err(invalid(l.span(), "d_max must be at least 1".into()));
            }
            Some(plan)
        }
        None => None,
    };

    if model.is_some() && window.is_none() {
        let span = raw.model.as_ref().map(Spanned::span).unwrap_or(0..0);
        return Err(invalid(span, "a [model] needs a [window] table".into()));
    }

    Ok(Scenario {
        schema: raw.schema.into_inner(),
        name: raw.name,
        description: raw.description,
        model,
        window,
        t: raw.census.and_then(|c| c.t),
        sweep,
        lefschetz,
        options: raw.options,
        output: raw.output,
    })
}

/// One-based line and column of a byte offset.
fn position(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, column)
}

fn resolve_model(m: &RawModel) -> Result<ModelChoice, String> {
    let given = [m.builtin.is_some(), m.field.is_some(), m.map.is_some()];
    if given.iter().filter(|&&g| g).count() != 1 {
        return Err("[model] needs exactly one of `builtin`, `field`, `map`".into());
    }
    let (source, model) = if let Some(name) = &m.builtin {
        if HOMOLOGY_BUILTINS.contains(&name.as_str()) {
            return Err(format!("`{name}` is a homology builtin; use it in the [lefschetz] table"));
        }
        if name == "period_doubling" {
            (format!("builtin:{name}"), Model::Cylinder(CylinderMap::period_doubling()))
        } else {
            let b = Builtin::from_name(name).ok_or_else(|| {
                format!("unknown builtin `{name}`, expected one of {}", MODEL_BUILTINS.join(", "))
            })?;
            let params: Vec<(&str, f64)> = m.params.iter().map(|(k, v)| (k.as_str(), *v)).collect();
            (format!("builtin:{name}"), Model::Flow(FieldSpec::builtin(b, &params)))
        }
    } else if let Some(p) = &m.field {
        ("polynomial_field".to_string(), Model::Flow(FieldSpec::polynomial(p.clone())))
    } else {
        let p = m.map.clone().expect("one source is present");
        ("polynomial_map".to_string(), Model::Cylinder(CylinderMap::polynomial(p)))
    };
    let model = match model {
        Model::Flow(mut f) => {
            if let Some(r) = m.sphere_radius {
                f = f.with_sphere(r);
            }
            f.reversed = m.reversed;
            if m.builtin.is_none() && !m.params.is_empty() {
                return Err("`params` only applies to builtins".into());
            }
            Model::Flow(f)
        }
        Model::Cylinder(c) => {
            if m.sphere_radius.is_some() || m.reversed || !m.params.is_empty() {
                return Err("maps take no `params`, `sphere_radius` or `reversed`".into());
            }
            Model::Cylinder(c)
        }
    };
    model.validate().map_err(|e| e.to_string())?;
    Ok(ModelChoice { source, model })
}

fn resolve_sweep(s: &RawSweep) -> Result<SweepPlan, String> {
    let grid = match (&s.grid, s.t_range, s.points) {
        (Some(g), None, None) => g.clone(),
        (None, Some(range), points) => uniform_grid(range, points.unwrap_or(64)),
        _ => return Err("[sweep] needs either `grid` or `t_range` (with optional `points`)".into()),
    };
    if grid.len() < 2 || grid.iter().any(|t| !t.is_finite()) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err("sweep grid needs at least two finite increasing values".into());
    }
    Ok(SweepPlan {
        range: (grid[0], grid[grid.len() - 1]),
        grid,
    })
}

fn cat_map() -> Vec<Vec<i64>> {
    vec![vec![2, 1], vec![1, 1]]
}

fn resolve_lefschetz(l: &RawLefschetz) -> Result<LefschetzPlan, String> {
    let given = [l.builtin.is_some(), l.matrix.is_some(), l.homology.is_some()];
    if given.iter().filter(|&&g| g).count() != 1 {
        return Err("[lefschetz] needs exactly one of `builtin`, `matrix`, `homology`".into());
    }
    let toral = |a: Vec<Vec<i64>>| (HomologyData::torus(&a), Some(DiscreteMapSpec::ToralAutomorphism { matrix: a }));
    let (source, homology, default_oracle) = if let Some(name) = &l.builtin {
        match name.as_str() {
            "cat_map" => {
                let (h, o) = toral(cat_map());
                (format!("builtin:{name}"), h, o)
            }
            "identity_s2" => (format!("builtin:{name}"), HomologyData::identity_sphere(2), None),
            _ => {
                return Err(format!(
                    "unknown homology builtin `{name}`, expected one of {}",
                    HOMOLOGY_BUILTINS.join(", ")
                ))
            }
        }
    } else if let Some(a) = &l.matrix {
        if a.is_empty() || a.iter().any(|r| r.len() != a.len()) {
            return Err("`matrix` must be square and non-empty".into());
        }
        let (h, o) = toral(a.clone());
        ("toral_automorphism".to_string(), h, o)
    } else {
        ("homology".to_string(), l.homology.clone().expect("one source is present"), None)
    };
    homology.validate().map_err(|e| e.to_string())?;
    Ok(LefschetzPlan {
        source,
        homology,
        d_max: l.d_max,
        oracle: l.oracle.clone().or(default_oracle),
    })
}
