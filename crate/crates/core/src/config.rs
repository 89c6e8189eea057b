//! JSON run configuration and its translation into models.
//!
//! Parsing is strict: unknown keys are rejected and every semantic check
//! reports the dotted path of the offending field.

use num_complex::Complex64;
use serde::Deserialize;

use crate::engine::{ResolventModel, SolverOptions};
use crate::error::{Error, Result};
use crate::expr::{parse_with, Expr, SPATIAL_VARIABLES, WAVENUMBER_VARIABLES};
use crate::fourier::{f_analyze_adaptive, FourierCoefficient, FourierModel, FourierTerm, Symbol};
use crate::kernel::RationalKernel;
use crate::realline::{Coefficient, OperatorTerm, RealLineModel};
use crate::rep::{Basis, FunctionRep};

type C64 = Complex64;

/// Largest per-dimension size used to analyze a periodic `f`.
const MAX_PERIODIC_ANALYSIS: usize = 1 << 10;

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: Problem,
    pub f: FSpec,
    pub kernel: KernelSpec,
    pub epsilon: f64,
    pub grid: Grid,
    #[serde(default)]
    pub solver: SolverSpec,
    pub output: Output,
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Operator,
    Pencil,
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Realline,
    Fourier1d,
    Fourier2d,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Problem {
    pub mode: Mode,
    pub backend: Backend,
    pub terms: Vec<TermSpec>,
    #[serde(rename = "B_terms", default)]
    pub b_terms: Option<Vec<TermSpec>>,
    /// Dilation of the real-line basis; see [`RealLineModel::dilated`].
    #[serde(default)]
    pub map_scale: Option<f64>,
}

/// One operator summand. Coefficients are expressions in `x` (and `y` on
/// the 2-D torus); symbols are expressions in `kx`, `ky`.
#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TermSpec {
    /// Real line: order 2 is `-(c u')'`, order 1 is `-(i/2)(c u' + (c u)')`.
    /// Torus: `scale · c · ∂_x^dx ∂_y^dy`.
    Derivative {
        #[serde(default)]
        order: Option<u32>,
        #[serde(default)]
        dx: Option<u32>,
        #[serde(default)]
        dy: Option<u32>,
        #[serde(default)]
        coefficient: Option<String>,
        #[serde(default)]
        scale: Option<[f64; 2]>,
    },
    Multiplication { coefficient: String },
    /// `Σ_i k_i(x) (1/πi) p.v.∫ k_i(y) u(y)/(y - x) dy`.
    CauchyLowrank { factors: Vec<String> },
    FourierSymbol { symbol: String },
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FSpec {
    #[serde(default)]
    pub expr: Option<String>,
    /// `[re, im]` pairs over the symmetric index window, `k_y` slowest.
    #[serde(default)]
    pub coefficients: Option<Vec<[f64; 2]>>,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    pub order: usize,
    /// Custom upper half-plane poles as `[re, im]` pairs.
    #[serde(default)]
    pub poles: Option<Vec<[f64; 2]>>,
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl Grid {
    /// `n` equispaced points from `min` to `max` inclusive.
    pub fn points(&self) -> Vec<f64> {
        if self.n == 1 {
            return vec![self.min];
        }
        // Weighted endpoints keep decimal grids like -1.5:2.5:41 on round values.
        let last = (self.n - 1) as f64;
        (0..self.n)
            .map(|i| (self.min * (last - i as f64) + self.max * i as f64) / last)
            .collect()
    }
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_init_dofs")]
    pub init_dofs: usize,
    #[serde(default = "default_max_dofs")]
    pub max_dofs: usize,
    #[serde(default)]
    pub fixed_dofs: Option<usize>,
}

fn default_tol() -> f64 {
    SolverOptions::default().tol
}
fn default_init_dofs() -> usize {
    SolverOptions::default().init_dofs
}
fn default_max_dofs() -> usize {
    SolverOptions::default().max_dofs
}

impl Default for SolverSpec {
    fn default() -> Self {
        let d = SolverOptions::default();
        Self {
            tol: d.tol,
            init_dofs: d.init_dofs,
            max_dofs: d.max_dofs,
            fixed_dofs: d.fixed_dofs,
        }
    }
}

impl From<SolverSpec> for SolverOptions {
    fn from(s: SolverSpec) -> Self {
        SolverOptions {
            tol: s.tol,
            init_dofs: s.init_dofs,
            max_dofs: s.max_dofs,
            fixed_dofs: s.fixed_dofs,
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Output {
    pub path: String,
    #[serde(default = "default_format")]
    pub format: Format,
}

fn default_format() -> Format {
    Format::Csv
}

fn config_error(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Config {
        path: path.into(),
        message: message.into(),
    }
}

/// Reports a lower-level error against a config field.
fn at(path: &str) -> impl Fn(Error) -> Error + '_ {
    move |e| match e {
        Error::Config { .. } => e,
        other => config_error(path, other.to_string()),
    }
}

impl RunConfig {
    /// Parses JSON; serde errors are reported at the path serde was in.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            config_error(if path == "." { "$".into() } else { path }, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Semantic checks that do not need any numerical work beyond parsing
    /// the expressions.
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(config_error("epsilon", format!("must be positive and finite, got {}", self.epsilon)));
        }
        self.grid_check()?;
        if self.kernel.order < 1 {
            return Err(config_error("kernel.order", "must be at least 1"));
        }
        if let Some(poles) = &self.kernel.poles {
            if poles.len() != self.kernel.order {
                return Err(config_error(
                    "kernel.poles",
                    format!("expected {} poles, got {}", self.kernel.order, poles.len()),
                ));
            }
        }
        self.kernel().map_err(at("kernel"))?;
        SolverOptions::from(self.solver).validate().map_err(at("solver"))?;
        if self.output.path.is_empty() {
            return Err(config_error("output.path", "must not be empty"));
        }
        let p = &self.problem;
        match (p.mode, &p.b_terms) {
            (Mode::Pencil, None) => return Err(config_error("problem.B_terms", "required when mode is pencil")),
            (Mode::Operator, Some(_)) => {
                return Err(config_error("problem.B_terms", "only allowed when mode is pencil"))
            }
            _ => {}
        }
        if p.terms.is_empty() {
            return Err(config_error("problem.terms", "must not be empty"));
        }
        if let Some(s) = p.map_scale {
            if p.backend != Backend::Realline {
                return Err(config_error("problem.map_scale", "only applies to the realline backend"));
            }
            if !(s > 0.0) || !s.is_finite() {
                return Err(config_error("problem.map_scale", format!("must be positive, got {s}")));
            }
        }
        for (i, t) in p.terms.iter().enumerate() {
            check_term(t, p.backend, &format!("problem.terms[{i}]"))?;
        }
        for (i, t) in p.b_terms.iter().flatten().enumerate() {
            check_term(t, p.backend, &format!("problem.B_terms[{i}]"))?;
        }
        match (&self.f.expr, &self.f.coefficients) {
            (Some(e), None) => {
                parse_with(e, spatial(p.backend)).map_err(at("f.expr"))?;
            }
            (None, Some(c)) => {
                if c.is_empty() || c.iter().flatten().any(|v| !v.is_finite()) {
                    return Err(config_error("f.coefficients", "must be a non-empty list of finite pairs"));
                }
                if p.backend == Backend::Fourier2d {
                    let side = (c.len() as f64).sqrt().round() as usize;
                    if side * side != c.len() {
                        return Err(config_error("f.coefficients", "2-D coefficients must form a square window"));
                    }
                }
                if p.map_scale.is_some_and(|s| s != 1.0) {
                    return Err(config_error(
                        "problem.map_scale",
                        "coefficient input for f is only supported at map scale 1",
                    ));
                }
            }
            _ => return Err(config_error("f", "exactly one of `expr` and `coefficients` is required")),
        }
        Ok(())
    }

    fn grid_check(&self) -> Result<()> {
        let g = &self.grid;
        if g.n < 1 {
            return Err(config_error("grid.n", "must be at least 1"));
        }
        if !g.min.is_finite() {
            return Err(config_error("grid.min", "must be finite"));
        }
        if !g.max.is_finite() {
            return Err(config_error("grid.max", "must be finite"));
        }
        if g.n > 1 && !(g.max > g.min) {
            return Err(config_error("grid.max", "must exceed grid.min when grid.n > 1"));
        }
        Ok(())
    }

    pub fn kernel(&self) -> Result<RationalKernel> {
        match &self.kernel.poles {
            None => RationalKernel::equispaced(self.kernel.order),
            Some(p) => RationalKernel::with_poles(p.iter().map(|&[re, im]| C64::new(re, im)).collect()),
        }
    }

    pub fn solver_options(&self) -> SolverOptions {
        self.solver.into()
    }

    /// Builds the model; errors keep their field path.
    pub fn build_model(&self) -> Result<Model> {
        let p = &self.problem;
        match p.backend {
            Backend::Realline => {
                let a = realline_terms(&p.terms, "problem.terms")?;
                let b = match &p.b_terms {
                    Some(t) => Some(realline_terms(t, "problem.B_terms")?),
                    None => None,
                };
                let model = match (&self.f.expr, &self.f.coefficients) {
                    (Some(e), _) => {
                        let f = parse_with(e, SPATIAL_VARIABLES).map_err(at("f.expr"))?.into_fn1();
                        RealLineModel::dilated(a, b, move |x| C64::new(f(x), 0.0), p.map_scale.unwrap_or(1.0))
                    }
                    (None, Some(c)) => {
                        let rep = FunctionRep::new(Basis::RealLine, pairs(c));
                        match b {
                            Some(b) => RealLineModel::pencil(a, b, rep),
                            None => RealLineModel::operator(a, rep),
                        }
                    }
                    (None, None) => unreachable!("validated"),
                }
                .map_err(at("problem"))?;
                Ok(Model::RealLine(model))
            }
            Backend::Fourier1d | Backend::Fourier2d => {
                let a = fourier_terms(&p.terms, p.backend, "problem.terms")?;
                let b = match &p.b_terms {
                    Some(t) => Some(fourier_terms(t, p.backend, "problem.B_terms")?),
                    None => None,
                };
                let basis = if p.backend == Backend::Fourier1d {
                    Basis::Fourier1d
                } else {
                    Basis::Fourier2d
                };
                let f = match (&self.f.expr, &self.f.coefficients) {
                    (Some(e), _) => {
                        let f = parse_with(e, SPATIAL_VARIABLES).map_err(at("f.expr"))?.into_fn2();
                        f_analyze_adaptive(|x, y| C64::new(f(x, y), 0.0), basis, 16, MAX_PERIODIC_ANALYSIS)
                    }
                    (None, Some(c)) => {
                        if basis == Basis::Fourier1d {
                            FunctionRep::new(basis, pairs(c))
                        } else {
                            let side = (c.len() as f64).sqrt().round() as usize;
                            FunctionRep::new_2d(side, side, pairs(c))
                        }
                    }
                    (None, None) => unreachable!("validated"),
                };
                let model = match b {
                    Some(b) => FourierModel::pencil(a, b, f),
                    None => FourierModel::operator(a, f),
                }
                .map_err(at("problem"))?;
                Ok(Model::Fourier(model))
            }
        }
    }
}

/// Model built from a config.
#[derive(Debug)]
pub enum Model {
    RealLine(RealLineModel),
    Fourier(FourierModel),
}

impl Model {
    pub fn as_resolvent(&self) -> &dyn ResolventModel {
        match self {
            Model::RealLine(m) => m,
            Model::Fourier(m) => m,
        }
    }
}

fn pairs(c: &[[f64; 2]]) -> Vec<C64> {
    c.iter().map(|&[re, im]| C64::new(re, im)).collect()
}

fn spatial(backend: Backend) -> &'static [&'static str] {
    match backend {
        Backend::Fourier2d => SPATIAL_VARIABLES,
        _ => &SPATIAL_VARIABLES[..1],
    }
}

fn parse_at(text: &str, vars: &[&str], path: &str) -> Result<Expr> {
    parse_with(text, vars).map_err(at(path))
}

fn check_term(t: &TermSpec, backend: Backend, path: &str) -> Result<()> {
    let realline = backend == Backend::Realline;
    let vars = spatial(backend);
    match t {
        TermSpec::Derivative {
            order,
            dx,
            dy,
            coefficient,
            scale,
        } => {
            if let Some(c) = coefficient {
                parse_at(c, vars, &format!("{path}.coefficient"))?;
            }
            if realline {
                if dx.is_some() || dy.is_some() || scale.is_some() {
                    return Err(config_error(path, "dx, dy and scale apply to Fourier backends; use `order`"));
                }
                match order {
                    Some(1) | Some(2) => {}
                    Some(o) => return Err(config_error(format!("{path}.order"), format!("unsupported order {o} (supported: 1, 2)"))),
                    None => return Err(config_error(format!("{path}.order"), "required on the realline backend")),
                }
            } else {
                if order.is_some() {
                    return Err(config_error(format!("{path}.order"), "Fourier backends use `dx` and `dy`"));
                }
                if backend == Backend::Fourier1d && dy.unwrap_or(0) > 0 {
                    return Err(config_error(format!("{path}.dy"), "not available on fourier1d"));
                }
                if dx.unwrap_or(0) + dy.unwrap_or(0) == 0 {
                    return Err(config_error(path, "a derivative needs dx + dy > 0"));
                }
                if scale.is_some_and(|s| s.iter().any(|v| !v.is_finite())) {
                    return Err(config_error(format!("{path}.scale"), "must be finite"));
                }
            }
        }
        TermSpec::Multiplication { coefficient } => {
            parse_at(coefficient, vars, &format!("{path}.coefficient"))?;
        }
        TermSpec::CauchyLowrank { factors } => {
            if !realline {
                return Err(config_error(path, "cauchy_lowrank terms need the realline backend"));
            }
            if factors.is_empty() {
                return Err(config_error(format!("{path}.factors"), "must not be empty"));
            }
            for (i, k) in factors.iter().enumerate() {
                parse_at(k, vars, &format!("{path}.factors[{i}]"))?;
            }
        }
        TermSpec::FourierSymbol { symbol } => {
            if realline {
                return Err(config_error(path, "fourier_symbol terms need a Fourier backend"));
            }
            parse_at(symbol, WAVENUMBER_VARIABLES, &format!("{path}.symbol"))?;
        }
    }
    Ok(())
}

fn realline_coefficient(text: &str, path: &str) -> Result<Coefficient> {
    let e = parse_at(text, SPATIAL_VARIABLES, path)?;
    Coefficient::from_real_fn(e.into_fn1()).map_err(at(path))
}

fn realline_terms(specs: &[TermSpec], path: &str) -> Result<Vec<OperatorTerm>> {
    specs
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let path = format!("{path}[{i}]");
            Ok(match t {
                TermSpec::Derivative { order, coefficient, .. } => OperatorTerm::Derivative {
                    order: order.unwrap_or(2),
                    coefficient: coefficient
                        .as_deref()
                        .map(|c| realline_coefficient(c, &format!("{path}.coefficient")))
                        .transpose()?,
                },
                TermSpec::Multiplication { coefficient } => {
                    OperatorTerm::Multiplication(realline_coefficient(coefficient, &format!("{path}.coefficient"))?)
                }
                TermSpec::CauchyLowrank { factors } => OperatorTerm::CauchyLowRank(
                    factors
                        .iter()
                        .enumerate()
                        .map(|(j, k)| realline_coefficient(k, &format!("{path}.factors[{j}]")))
                        .collect::<Result<_>>()?,
                ),
                TermSpec::FourierSymbol { .. } => unreachable!("validated"),
            })
        })
        .collect()
}

fn fourier_coefficient(text: &str, backend: Backend, path: &str) -> Result<FourierCoefficient> {
    let e = parse_at(text, spatial(backend), path)?;
    FourierCoefficient::from_fn(e.into_fn2()).map_err(at(path))
}

fn fourier_terms(specs: &[TermSpec], backend: Backend, path: &str) -> Result<Vec<FourierTerm>> {
    specs
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let path = format!("{path}[{i}]");
            Ok(match t {
                TermSpec::Derivative {
                    dx,
                    dy,
                    coefficient,
                    scale,
                    ..
                } => FourierTerm::Differential {
                    coefficient: match coefficient {
                        Some(c) => fourier_coefficient(c, backend, &format!("{path}.coefficient"))?,
                        None => FourierCoefficient::constant(1.0),
                    },
                    dx: dx.unwrap_or(0),
                    dy: dy.unwrap_or(0),
                    scale: scale.map_or(C64::new(1.0, 0.0), |[re, im]| C64::new(re, im)),
                },
                TermSpec::Multiplication { coefficient } => FourierTerm::Differential {
                    coefficient: fourier_coefficient(coefficient, backend, &format!("{path}.coefficient"))?,
                    dx: 0,
                    dy: 0,
                    scale: C64::new(1.0, 0.0),
                },
                TermSpec::FourierSymbol { symbol } => {
                    let e = parse_at(symbol, WAVENUMBER_VARIABLES, &format!("{path}.symbol"))?;
                    FourierTerm::Symbol(Symbol::new(symbol.clone(), e.into_fn2()))
                }
                TermSpec::CauchyLowrank { .. } => unreachable!("validated"),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"{
        "problem": {"mode": "operator", "backend": "realline",
                    "terms": [{"kind": "multiplication", "coefficient": "0.5"}]},
        "f": {"expr": "1/(1+x^2)"},
        "kernel": {"order": 2},
        "epsilon": 0.1,
        "grid": {"min": -1, "max": 1, "n": 5},
        "output": {"path": "out.csv"}
    }"#;

    fn path_of(text: &str) -> String {
        match RunConfig::from_json(text) {
            Err(Error::Config { path, .. }) => path,
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn base_config_parses_with_defaults() {
        let cfg = RunConfig::from_json(BASE).unwrap();
        assert_eq!(cfg.solver, SolverSpec::default());
        assert_eq!(cfg.output.format, Format::Csv);
        assert_eq!(cfg.grid.points(), vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        let model = cfg.build_model().unwrap();
        let model = model.as_resolvent();
        assert!((model.normalization_constant() - (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn errors_name_the_field() {
        let cases = [
            (BASE.replace("\"epsilon\": 0.1", "\"epsilon\": -0.1"), "epsilon"),
            (BASE.replace("\"n\": 5", "\"n\": 0"), "grid.n"),
            (BASE.replace("\"order\": 2", "\"order\": 0"), "kernel.order"),
            (BASE.replace("\"0.5\"", "\"0.5 +\""), "problem.terms[0].coefficient"),
            (BASE.replace("1/(1+x^2)", "1/(1+q^2)"), "f.expr"),
            (BASE.replace("\"mode\": \"operator\"", "\"mode\": \"pencil\""), "problem.B_terms"),
            (BASE.replace("\"kernel\"", "\"kernal\""), "kernal"),
            (BASE.replace("\"max\": 1", "\"max\": 1, \"step\": 2"), "grid.step"),
            (BASE.replace("\"realline\"", "\"torus\""), "problem.backend"),
            (BASE.replace("\"multiplication\"", "\"fourier_symbol\""), "problem.terms[0]"),
        ];
        for (text, path) in cases {
            assert_eq!(path_of(&text), path, "{text}");
        }
    }

    #[test]
    fn fourier_internal_waves_config() {
        let text = r#"{
            "problem": {"mode": "pencil", "backend": "fourier2d",
                "terms": [{"kind": "derivative", "dy": 1, "coefficient": "1 + cos(x)/2", "scale": [0, -1]}],
                "B_terms": [{"kind": "fourier_symbol", "symbol": "sqrt(1 + ky^2)"}]},
            "f": {"expr": "exp(sin(x+y))/(2+cos(y))"},
            "kernel": {"order": 2},
            "epsilon": 0.1,
            "grid": {"min": 0, "max": 0, "n": 1},
            "output": {"path": "iw.csv"}
        }"#;
        let cfg = RunConfig::from_json(text).unwrap();
        let model = cfg.build_model().unwrap();
        let model = model.as_resolvent();
        assert!(model.is_pencil());
        assert_eq!(model.basis(), Basis::Fourier2d);
    }
}
