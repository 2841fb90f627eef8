//! JSON run configuration.
//!
//! Complex numbers are `[re, im]` pairs, matrices nested row arrays of
//! them.  Every error carries the path of the offending field.

use std::fmt;
use std::path::PathBuf;

use lindblad_rate::linalg::CMatrix;
use lindblad_rate::model::{
    build_from_correlations, LindbladRateModel, OperatorBasis, ProjectedCorrelations, Quadrature,
    TripartiteCoefficients,
};
use lindblad_rate::qubit::{self, Preset};
use lindblad_rate::scalar::{c, C};
use lindblad_rate::solver::{linear_grid, Method};
use lindblad_rate::stochastic::{
    convert_walk_to_rate_model, Dissipator, HopRates, StochasticModel,
};
use serde::Deserialize;

pub const DEFAULT_RTOL: f64 = 1e-9;
pub const DEFAULT_ATOL: f64 = 1e-12;
pub const DEFAULT_PSD_TOL: f64 = 1e-8;
pub const DEFAULT_RESIDUAL_TOL: f64 = 1e-7;
pub const DEFAULT_TRAJECTORIES: usize = 1000;
const WEIGHT_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ConfigError {
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    Field {
        path: String,
        message: String,
    },
}

impl ConfigError {
    pub fn field(path: impl Into<String>, message: impl fmt::Display) -> Self {
        ConfigError::Field {
            path: path.into(),
            message: message.to_string(),
        }
    }

    pub fn path(&self) -> Option<&str> {
        match self {
            ConfigError::Field { path, .. } => Some(path),
            ConfigError::Syntax { .. } => None,
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Syntax {
                line,
                column,
                message,
            } => write!(f, "syntax error at line {line}, column {column}: {message}"),
            ConfigError::Field { path, message } => write!(f, "{path}: {message}"),
        }
    }
}

impl std::error::Error for ConfigError {}

type Pair = [f64; 2];
type RawMatrix = Vec<Vec<Pair>>;

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    model: RawModel,
    initial_state: Option<RawMatrix>,
    grid: RawGrid,
    #[serde(default)]
    engine: Engine,
    trajectories: Option<usize>,
    seed: Option<u64>,
    #[serde(default)]
    method: RawMethod,
    #[serde(default)]
    tolerances: RawTolerances,
    kernel_points: Option<Vec<Pair>>,
    output: Option<PathBuf>,
}

#[derive(Deserialize, Debug)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum RawModel {
    Preset(String),
    Inline(RawInline),
    Tripartite(RawTripartite),
    Correlations(RawCorrelations),
    Walk(RawWalk),
}

#[derive(Deserialize, Debug)]
#[serde(untagged)]
enum RawBasis {
    Named(String),
    Explicit(Vec<RawMatrix>),
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct RawInline {
    basis: RawBasis,
    weights: Vec<f64>,
    hamiltonians: Option<Vec<RawMatrix>>,
    system_hamiltonian: Option<RawMatrix>,
    #[serde(default)]
    rates: Vec<RawRate>,
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct RawRate {
    to: usize,
    from: usize,
    block: RawMatrix,
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct RawTripartite {
    basis: RawBasis,
    weights: Vec<f64>,
    hamiltonians: Option<Vec<RawMatrix>>,
    /// `(K²·n) × (K²·n)` coefficient matrix, pair index `to·K + from`.
    joint: RawMatrix,
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct RawCorrelations {
    basis: RawBasis,
    weights: Vec<f64>,
    system_hamiltonian: Option<RawMatrix>,
    step: f64,
    #[serde(default)]
    rule: RawRule,
    samples: Vec<RawSample>,
}

#[derive(Deserialize, Debug, Default)]
#[serde(rename_all = "snake_case")]
enum RawRule {
    #[default]
    Simpson,
    Trapezoid,
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct RawSample {
    to: usize,
    from: usize,
    alpha: usize,
    beta: usize,
    values: Vec<Pair>,
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct RawWalk {
    weights: Vec<f64>,
    hamiltonian: RawMatrix,
    #[serde(default)]
    dissipators: Vec<Vec<RawTerm>>,
    /// `rates[to][from]`.
    rates: Vec<Vec<f64>>,
    jumps: Vec<Vec<RawMatrix>>,
    basis: Option<RawBasis>,
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct RawTerm {
    rate: f64,
    op: RawMatrix,
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    stop: f64,
    count: usize,
    #[serde(default)]
    spacing: Spacing,
    /// First nonzero time of a log grid; defaults to `stop / 1000`.
    first: Option<f64>,
}

#[derive(Deserialize, Debug, Clone, Copy, Default, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

#[derive(Deserialize, Debug, Clone, Copy, Default, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    #[default]
    Deterministic,
    Stochastic,
    Both,
}

impl Engine {
    pub fn stochastic(self) -> bool {
        matches!(self, Engine::Stochastic | Engine::Both)
    }

    pub fn deterministic(self) -> bool {
        matches!(self, Engine::Deterministic | Engine::Both)
    }
}

#[derive(Deserialize, Debug, Clone, Copy, Default)]
#[serde(rename_all = "snake_case")]
enum RawMethod {
    #[default]
    Exact,
    Adaptive,
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct RawTolerances {
    #[serde(default = "rtol")]
    rtol: f64,
    #[serde(default = "atol")]
    atol: f64,
    #[serde(default = "psd")]
    psd: f64,
    #[serde(default = "residual")]
    residual: f64,
}

fn rtol() -> f64 {
    DEFAULT_RTOL
}
fn atol() -> f64 {
    DEFAULT_ATOL
}
fn psd() -> f64 {
    DEFAULT_PSD_TOL
}
fn residual() -> f64 {
    DEFAULT_RESIDUAL_TOL
}

impl Default for RawTolerances {
    fn default() -> Self {
        Self {
            rtol: DEFAULT_RTOL,
            atol: DEFAULT_ATOL,
            psd: DEFAULT_PSD_TOL,
            residual: DEFAULT_RESIDUAL_TOL,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    pub psd: f64,
    /// Allowed closed-form versus engine residual in `example`.
    pub residual: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        let raw = RawTolerances::default();
        Self {
            rtol: raw.rtol,
            atol: raw.atol,
            psd: raw.psd,
            residual: raw.residual,
        }
    }
}

/// Models resolved from the configured source.
#[derive(Clone, Debug)]
pub struct Models {
    pub rate: LindbladRateModel<f64>,
    /// Present for presets and walk sources.
    pub walk: Option<StochasticModel<f64>>,
    pub preset: Option<(String, Preset<f64>)>,
}

impl Models {
    pub fn from_preset(name: &str) -> Result<Self, ConfigError> {
        let preset = qubit::preset::<f64>(name).ok_or_else(|| {
            ConfigError::field(
                "model.preset",
                format!(
                    "unknown preset {name:?} (known: {})",
                    qubit::PRESET_NAMES.join(", ")
                ),
            )
        })?;
        let (rate, walk) = preset
            .models()
            .map_err(|e| ConfigError::field("model.preset", e))?;
        Ok(Self {
            rate,
            walk: Some(walk),
            preset: Some((name.to_string(), preset)),
        })
    }

    /// `|+x⟩` for dephasing presets, `|+z⟩` for depolarizing.
    pub fn default_state(&self) -> Option<CMatrix<f64>> {
        match self.preset.as_ref()?.1 {
            Preset::Dephasing(_) => Some(CMatrix::from_element(2, 2, c(0.5, 0.))),
            Preset::Depolarizing(_) => {
                let mut m = CMatrix::zeros(2, 2);
                m[(0, 0)] = c(1., 0.);
                Some(m)
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub models: Models,
    pub initial_state: CMatrix<f64>,
    pub grid: Vec<f64>,
    pub engine: Engine,
    pub trajectories: usize,
    pub seed: Option<u64>,
    pub method: Method,
    pub tolerances: Tolerances,
    pub kernel_points: Vec<C<f64>>,
    pub output: Option<PathBuf>,
}

impl RunConfig {
    /// Configuration for a preset with default state, grid and tolerances.
    pub fn for_preset(name: &str) -> Result<Self, ConfigError> {
        let models = Models::from_preset(name)?;
        let initial_state = models.default_state().expect("preset state");
        Ok(Self {
            models,
            initial_state,
            grid: linear_grid(30.0, 121),
            engine: Engine::Deterministic,
            trajectories: DEFAULT_TRAJECTORIES,
            seed: None,
            method: Method::Exact,
            tolerances: Tolerances::default(),
            kernel_points: default_kernel_points(),
            output: None,
        })
    }

    /// Invariants that command-line overrides can break.
    pub fn check(&self) -> Result<(), ConfigError> {
        if self.engine.stochastic() {
            if self.seed.is_none() {
                return Err(ConfigError::field(
                    "seed",
                    "required when the stochastic engine is selected",
                ));
            }
            if self.trajectories == 0 {
                return Err(ConfigError::field("trajectories", "must be at least 1"));
            }
            if self.models.walk.is_none() {
                return Err(ConfigError::field(
                    "model",
                    "the stochastic engine needs a preset or walk model source",
                ));
            }
        }
        Ok(())
    }
}

fn default_kernel_points() -> Vec<C<f64>> {
    [0.5, 1.0, 2.0, 4.0].iter().map(|&u| c(u, 0.)).collect()
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let config = parse_config_unchecked(text)?;
    config.check()?;
    Ok(config)
}

/// Like [`parse_config`] but skips [`RunConfig::check`], for callers that
/// apply overrides first.
pub fn parse_config_unchecked(text: &str) -> Result<RunConfig, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let raw: RawConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if inner.is_syntax() || inner.is_eof() {
            ConfigError::Syntax {
                line: inner.line(),
                column: inner.column(),
                message: inner.to_string(),
            }
        } else {
            ConfigError::field(path, inner)
        }
    })?;
    raw.resolve()
}

impl RawConfig {
    fn resolve(self) -> Result<RunConfig, ConfigError> {
        let models = resolve_model(self.model)?;
        let d = models.rate.dim();
        let initial_state = match self.initial_state {
            Some(m) => {
                let rho = matrix(&m, "initial_state", d)?;
                lindblad_rate::model::validate_density_matrix(&rho, d)
                    .map_err(|e| ConfigError::field("initial_state", e))?;
                rho
            }
            None => models.default_state().ok_or_else(|| {
                ConfigError::field("initial_state", "required unless the model is a preset")
            })?,
        };
        let t = &self.tolerances;
        for (name, v) in [
            ("rtol", t.rtol),
            ("atol", t.atol),
            ("psd", t.psd),
            ("residual", t.residual),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(ConfigError::field(
                    format!("tolerances.{name}"),
                    "must be positive and finite",
                ));
            }
        }
        let kernel_points = match self.kernel_points {
            Some(ps) => ps.iter().map(|p| c(p[0], p[1])).collect(),
            None => default_kernel_points(),
        };
        let config = RunConfig {
            models,
            initial_state,
            grid: grid(&self.grid)?,
            engine: self.engine,
            trajectories: self.trajectories.unwrap_or(DEFAULT_TRAJECTORIES),
            seed: self.seed,
            method: match self.method {
                RawMethod::Exact => Method::Exact,
                RawMethod::Adaptive => Method::Adaptive,
            },
            tolerances: Tolerances {
                rtol: t.rtol,
                atol: t.atol,
                psd: t.psd,
                residual: t.residual,
            },
            kernel_points,
            output: self.output,
        };
        Ok(config)
    }
}

fn grid(g: &RawGrid) -> Result<Vec<f64>, ConfigError> {
    if !(g.stop.is_finite() && g.stop > 0.0) {
        return Err(ConfigError::field(
            "grid.stop",
            "must be positive and finite",
        ));
    }
    match g.spacing {
        Spacing::Linear => {
            if g.first.is_some() {
                return Err(ConfigError::field(
                    "grid.first",
                    "only used with log spacing",
                ));
            }
            Ok(linear_grid(g.stop, g.count))
        }
        Spacing::Log => {
            let first = g.first.unwrap_or(g.stop / 1000.0);
            if !(first > 0.0 && first < g.stop) {
                return Err(ConfigError::field("grid.first", "must lie in (0, stop)"));
            }
            let mut out = Vec::with_capacity(g.count);
            if g.count > 0 {
                out.push(0.0);
            }
            let n = g.count.saturating_sub(1);
            let ratio = (g.stop / first).ln();
            for k in 0..n {
                let x = if n == 1 {
                    1.0
                } else {
                    k as f64 / (n - 1) as f64
                };
                out.push(if k + 1 == n {
                    g.stop
                } else {
                    first * (ratio * x).exp()
                });
            }
            Ok(out)
        }
    }
}

fn matrix(m: &RawMatrix, path: &str, dim: usize) -> Result<CMatrix<f64>, ConfigError> {
    if m.len() != dim || m.iter().any(|row| row.len() != dim) {
        return Err(ConfigError::field(
            path,
            format!("expected a {dim}x{dim} matrix"),
        ));
    }
    let out: CMatrix<f64> = CMatrix::from_fn(dim, dim, |i, j| c(m[i][j][0], m[i][j][1]));
    if out.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(ConfigError::field(path, "non-finite entry"));
    }
    Ok(out)
}

fn square_dim(m: &RawMatrix, path: &str) -> Result<usize, ConfigError> {
    let d = m.len();
    if d == 0 {
        return Err(ConfigError::field(path, "empty matrix"));
    }
    Ok(d)
}

fn basis(b: &RawBasis, path: &str, dim: Option<usize>) -> Result<OperatorBasis<f64>, ConfigError> {
    match b {
        RawBasis::Named(name) => match (name.as_str(), dim) {
            ("pauli", None | Some(2)) => Ok(OperatorBasis::pauli()),
            ("pauli", Some(d)) => Err(ConfigError::field(
                path,
                format!("the Pauli basis is for d = 2, model has d = {d}"),
            )),
            ("matrix_units", Some(d)) => Ok(OperatorBasis::matrix_units(d)),
            ("matrix_units", None) => Err(ConfigError::field(
                path,
                "matrix_units needs the dimension from a Hamiltonian",
            )),
            (other, _) => Err(ConfigError::field(
                path,
                format!("unknown basis {other:?} (pauli, matrix_units or explicit operators)"),
            )),
        },
        RawBasis::Explicit(ops) => {
            let first = ops
                .first()
                .ok_or_else(|| ConfigError::field(path, "empty operator list"))?;
            let d = square_dim(first, &format!("{path}[0]"))?;
            let mats = ops
                .iter()
                .enumerate()
                .map(|(i, m)| matrix(m, &format!("{path}[{i}]"), d))
                .collect::<Result<Vec<_>, _>>()?;
            OperatorBasis::new(mats).map_err(|e| ConfigError::field(path, e))
        }
    }
}

fn weights(w: &[f64], path: &str) -> Result<Vec<f64>, ConfigError> {
    if w.is_empty() {
        return Err(ConfigError::field(path, "at least one channel is required"));
    }
    if let Some(i) = w.iter().position(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(ConfigError::field(
            format!("{path}[{i}]"),
            "weights must be nonnegative",
        ));
    }
    let sum: f64 = w.iter().sum();
    if (sum - 1.0).abs() > WEIGHT_TOL {
        return Err(ConfigError::field(
            path,
            format!("weights sum to {sum}, expected 1 within {WEIGHT_TOL:e}"),
        ));
    }
    Ok(w.to_vec())
}

fn hamiltonians(
    hs: &Option<Vec<RawMatrix>>,
    path: &str,
    k: usize,
    d: usize,
) -> Result<Vec<CMatrix<f64>>, ConfigError> {
    match hs {
        None => Ok(vec![CMatrix::zeros(d, d); k]),
        Some(hs) if hs.len() != k => Err(ConfigError::field(
            path,
            format!("{} Hamiltonians for {k} channels", hs.len()),
        )),
        Some(hs) => hs
            .iter()
            .enumerate()
            .map(|(r, h)| matrix(h, &format!("{path}[{r}]"), d))
            .collect(),
    }
}

fn resolve_model(raw: RawModel) -> Result<Models, ConfigError> {
    match raw {
        RawModel::Preset(name) => Models::from_preset(&name),
        RawModel::Inline(m) => inline(m),
        RawModel::Tripartite(m) => tripartite(m),
        RawModel::Correlations(m) => correlations(m),
        RawModel::Walk(m) => walk(m),
    }
}

fn rate_only(rate: LindbladRateModel<f64>) -> Models {
    Models {
        rate,
        walk: None,
        preset: None,
    }
}

fn inline(m: RawInline) -> Result<Models, ConfigError> {
    let p = "model.inline";
    let w = weights(&m.weights, &format!("{p}.weights"))?;
    let k = w.len();
    let dim_hint = m
        .system_hamiltonian
        .as_ref()
        .or(m.hamiltonians.as_ref().and_then(|h| h.first()))
        .map(|h| h.len());
    let basis = basis(&m.basis, &format!("{p}.basis"), dim_hint)?;
    let d = basis.dim();
    let n = basis.len();
    let hams = hamiltonians(&m.hamiltonians, &format!("{p}.hamiltonians"), k, d)?;
    let mut builder = LindbladRateModel::builder(basis, k).weights(w);
    for (r, h) in hams.into_iter().enumerate() {
        builder = builder.hamiltonian(r, h);
    }
    if let Some(h) = &m.system_hamiltonian {
        builder = builder.system_hamiltonian(matrix(h, &format!("{p}.system_hamiltonian"), d)?);
    }
    for (i, r) in m.rates.iter().enumerate() {
        let path = format!("{p}.rates[{i}]");
        if r.to >= k || r.from >= k {
            return Err(ConfigError::field(
                path,
                format!("channel index out of range for {k} channels"),
            ));
        }
        builder = builder.coupling(r.to, r.from, matrix(&r.block, &format!("{path}.block"), n)?);
    }
    builder
        .build()
        .map(rate_only)
        .map_err(|e| ConfigError::field(p, e))
}

fn tripartite(m: RawTripartite) -> Result<Models, ConfigError> {
    let p = "model.tripartite";
    let w = weights(&m.weights, &format!("{p}.weights"))?;
    let k = w.len();
    let dim_hint = m
        .hamiltonians
        .as_ref()
        .and_then(|h| h.first())
        .map(|h| h.len());
    let basis = basis(&m.basis, &format!("{p}.basis"), dim_hint)?;
    let d = basis.dim();
    let n = basis.len();
    let joint = matrix(&m.joint, &format!("{p}.joint"), k * k * n)?;
    let b = TripartiteCoefficients::from_joint(k, n, joint)
        .map_err(|e| ConfigError::field(format!("{p}.joint"), e))?;
    let hams = hamiltonians(&m.hamiltonians, &format!("{p}.hamiltonians"), k, d)?;
    lindblad_rate::model::reduce_from_tripartite(&b, basis, hams, w)
        .map(rate_only)
        .map_err(|e| ConfigError::field(format!("{p}.joint"), e))
}

fn correlations(m: RawCorrelations) -> Result<Models, ConfigError> {
    let p = "model.correlations";
    let w = weights(&m.weights, &format!("{p}.weights"))?;
    let k = w.len();
    let dim_hint = m.system_hamiltonian.as_ref().map(|h| h.len());
    let basis = basis(&m.basis, &format!("{p}.basis"), dim_hint)?;
    let d = basis.dim();
    let n = basis.len();
    if !(m.step.is_finite() && m.step > 0.0) {
        return Err(ConfigError::field(format!("{p}.step"), "must be positive"));
    }
    let len = m.samples.first().map_or(0, |s| s.values.len());
    let mut chi = ProjectedCorrelations::zeros(k, n, m.step, len);
    for (i, s) in m.samples.iter().enumerate() {
        let values = s.values.iter().map(|v| c(v[0], v[1])).collect();
        chi.set(s.to, s.from, s.alpha, s.beta, values)
            .map_err(|e| ConfigError::field(format!("{p}.samples[{i}]"), e))?;
    }
    let hs = match &m.system_hamiltonian {
        Some(h) => matrix(h, &format!("{p}.system_hamiltonian"), d)?,
        None => CMatrix::zeros(d, d),
    };
    let rule = match m.rule {
        RawRule::Simpson => Quadrature::Simpson,
        RawRule::Trapezoid => Quadrature::Trapezoid,
    };
    let blocks = build_from_correlations(&chi, &hs, &basis, rule)
        .map_err(|e| ConfigError::field(format!("{p}.samples"), e))?;
    let mut builder = LindbladRateModel::builder(basis, k)
        .weights(w)
        .common_hamiltonian(hs);
    for to in 0..k {
        for from in 0..k {
            builder = builder.coupling(to, from, blocks[to * k + from].clone());
        }
    }
    builder
        .build()
        .map(rate_only)
        .map_err(|e| ConfigError::field(p, e))
}

fn walk(m: RawWalk) -> Result<Models, ConfigError> {
    let p = "model.walk";
    let w = weights(&m.weights, &format!("{p}.weights"))?;
    let k = w.len();
    let d = square_dim(&m.hamiltonian, &format!("{p}.hamiltonian"))?;
    let h = matrix(&m.hamiltonian, &format!("{p}.hamiltonian"), d)?;
    if m.rates.len() != k || m.rates.iter().any(|row| row.len() != k) {
        return Err(ConfigError::field(
            format!("{p}.rates"),
            format!("expected a {k}x{k} array"),
        ));
    }
    let rates =
        HopRates::from_rows(&m.rates).map_err(|e| ConfigError::field(format!("{p}.rates"), e))?;
    if m.jumps.len() != k {
        return Err(ConfigError::field(
            format!("{p}.jumps"),
            format!("expected {k} jump maps"),
        ));
    }
    let jumps = m
        .jumps
        .iter()
        .enumerate()
        .map(|(r, ks)| {
            ks.iter()
                .enumerate()
                .map(|(j, op)| matrix(op, &format!("{p}.jumps[{r}][{j}]"), d))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    let dissipators = match m.dissipators.len() {
        0 => vec![Dissipator::none(); k],
        n if n == k => m
            .dissipators
            .iter()
            .enumerate()
            .map(|(r, terms)| {
                terms
                    .iter()
                    .enumerate()
                    .try_fold(Dissipator::none(), |acc, (j, t)| {
                        Ok(acc.term(
                            t.rate,
                            matrix(&t.op, &format!("{p}.dissipators[{r}][{j}].op"), d)?,
                        ))
                    })
            })
            .collect::<Result<Vec<_>, ConfigError>>()?,
        n => {
            return Err(ConfigError::field(
                format!("{p}.dissipators"),
                format!("{n} dissipators for {k} channels"),
            ))
        }
    };
    let walk = StochasticModel::new(h, dissipators, rates, jumps, w)
        .map_err(|e| ConfigError::field(p, e))?;
    let basis = match &m.basis {
        Some(b) => basis(b, &format!("{p}.basis"), Some(d))?,
        None => OperatorBasis::matrix_units(d),
    };
    let rate = convert_walk_to_rate_model(&walk, basis).map_err(|e| ConfigError::field(p, e))?;
    Ok(Models {
        rate,
        walk: Some(walk),
        preset: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_grid_starts_at_zero_and_ends_at_stop() {
        let g = grid(&RawGrid {
            stop: 10.0,
            count: 5,
            spacing: Spacing::Log,
            first: Some(0.01),
        })
        .unwrap();
        assert_eq!(g[0], 0.0);
        assert_eq!(g[1], 0.01);
        assert_eq!(*g.last().unwrap(), 10.0);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn named_basis_checks_dimension() {
        let b = RawBasis::Named("pauli".into());
        assert!(basis(&b, "x", Some(3)).is_err());
        assert_eq!(
            basis(&RawBasis::Named("matrix_units".into()), "x", Some(3))
                .unwrap()
                .len(),
            9
        );
    }
}
