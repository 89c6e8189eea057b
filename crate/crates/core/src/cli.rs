//! Command-line front end: `run` evaluates a config on its grid and writes
//! data files, `sweep` measures convergence in ε against a reference.
//!
//! Exit codes: 0 success, 1 configuration or parse error (nothing is
//! written), 2 completed with warnings.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::json;

use crate::config::{Backend, Format, Grid, Mode, Model, RunConfig, TermSpec};
use crate::engine::{
    evaluate_grid, evaluate_measure, MeasureQuery, MeasureResult, ResolventModel, SolverOptions, Warning,
};
use crate::error::{Error, Result};
use crate::expr::parse_expression;
use crate::kernel::RationalKernel;
use crate::oracle::{dense_measure, laplacian_density, FourierQuadrature};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_WARNINGS: i32 = 2;

/// Truncation used by the dense reference when the config does not fix one.
pub const DENSE_REFERENCE_DOFS: usize = 200;

#[derive(Debug, Parser)]
#[command(name = "specmeasure", version, about = "Smoothed spectral measures from resolvent solves")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate μ_f^ε on the configured grid.
    Run(RunArgs),
    /// Pointwise error against a reference over a list of ε.
    Sweep(SweepArgs),
}

#[derive(Debug, clap::Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    epsilon: Option<String>,
    #[arg(long)]
    order: Option<usize>,
    /// `MIN:MAX:N`
    #[arg(long, allow_hyphen_values = true)]
    grid: Option<String>,
    #[arg(long)]
    output: Option<String>,
}

#[derive(Debug, clap::Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    /// Comma-separated; `1e-1.5` means 10^-1.5.
    #[arg(long, value_delimiter = ',')]
    epsilons: Vec<String>,
    #[arg(long, allow_hyphen_values = true)]
    point: f64,
    #[arg(long, value_enum)]
    reference: Reference,
    #[arg(long)]
    order: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Reference {
    /// Closed-form density of `-d²/dx²`, from the Fourier transform of `f`.
    Laplacian,
    /// Eigendecomposition of the fixed-size truncation at the same ε.
    Dense,
}

/// Parses arguments, runs, and returns the process exit code.
pub fn main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Run(args) => run_command(args),
        Command::Sweep(args) => sweep_command(args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
    }
}

fn load(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::Config {
        path: "$".into(),
        message: format!("cannot read {}: {e}", path.display()),
    })?;
    RunConfig::from_json(&text)
}

fn flag_error(flag: &str, message: impl Into<String>) -> Error {
    Error::Config {
        path: flag.into(),
        message: message.into(),
    }
}

fn run_command(args: RunArgs) -> Result<i32> {
    let mut cfg = load(&args.config)?;
    if let Some(e) = &args.epsilon {
        cfg.epsilon = parse_epsilon(e).map_err(|e| flag_error("--epsilon", e.to_string()))?;
    }
    if let Some(m) = args.order {
        cfg.kernel.order = m;
        cfg.kernel.poles = None;
    }
    if let Some(g) = &args.grid {
        cfg.grid = parse_grid(g).map_err(|e| flag_error("--grid", e.to_string()))?;
    }
    if let Some(p) = args.output {
        cfg.output.path = p;
    }
    cfg.validate()?;
    let report = execute(&cfg)?;
    write_outputs(&cfg, &report)?;
    for w in &report.result.warnings {
        eprintln!("warning: {w}");
    }
    Ok(report.exit_code())
}

/// Output of one `run`.
#[derive(Clone, Debug)]
pub struct RunReport {
    pub result: MeasureResult,
    pub kernel: RationalKernel,
    pub epsilon: f64,
    pub wall_time: f64,
}

impl RunReport {
    pub fn exit_code(&self) -> i32 {
        if self.result.has_warnings() {
            EXIT_WARNINGS
        } else {
            EXIT_OK
        }
    }

    /// Metadata written next to the data file.
    pub fn sidecar(&self) -> serde_json::Value {
        let pairs = |v: &[num_complex::Complex64]| v.iter().map(|c| [c.re, c.im]).collect::<Vec<_>>();
        json!({
            "kernel_order": self.kernel.order(),
            "poles": pairs(self.kernel.poles()),
            "residues": pairs(self.kernel.residues()),
            "epsilon": self.epsilon,
            "normalization_constant": self.result.normalization_constant,
            "warnings": self.result.warnings,
            "wall_time_seconds": self.wall_time,
        })
    }
}

/// Builds the model and evaluates the grid; writes nothing.
pub fn execute(cfg: &RunConfig) -> Result<RunReport> {
    let start = Instant::now();
    let kernel = cfg.kernel()?;
    let model = cfg.build_model()?;
    let query = MeasureQuery::new(cfg.grid.points(), cfg.epsilon, kernel.clone()).with_solver(cfg.solver_options());
    let result = evaluate_grid(model.as_resolvent(), &query)?;
    Ok(RunReport {
        result,
        kernel,
        epsilon: cfg.epsilon,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

/// Path of the metadata file for a given output path.
pub fn sidecar_path(output: &str) -> PathBuf {
    PathBuf::from(format!("{output}.meta.json"))
}

pub fn write_outputs(cfg: &RunConfig, report: &RunReport) -> Result<()> {
    let data = match cfg.output.format {
        Format::Csv => to_csv(&report.result),
        Format::Json => to_json(&report.result),
    };
    fs::write(&cfg.output.path, data)?;
    let meta = serde_json::to_string_pretty(&report.sidecar()).expect("sidecar serializes");
    fs::write(sidecar_path(&cfg.output.path), meta + "\n")?;
    Ok(())
}

/// `x,mu,err_est,dofs_max` rows with LF endings and `%.17g` numbers.
pub fn to_csv(r: &MeasureResult) -> String {
    let mut out = String::from("x,mu,err_est,dofs_max\n");
    for i in 0..r.points.len() {
        out.push_str(&format!(
            "{},{},{},{}\n",
            format_g17(r.points[i]),
            format_g17(r.values[i]),
            format_g17(r.err_est[i]),
            r.dofs[i]
        ));
    }
    out
}

fn to_json(r: &MeasureResult) -> String {
    let v = json!({
        "x": r.points,
        "mu": r.values,
        "err_est": r.err_est,
        "dofs_max": r.dofs,
    });
    serde_json::to_string_pretty(&v).expect("result serializes") + "\n"
}

/// One parsed CSV row.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CsvRow {
    pub x: f64,
    pub mu: f64,
    pub err_est: f64,
    pub dofs_max: usize,
}

/// Reads back what [`to_csv`] writes.
pub fn parse_csv(text: &str) -> Result<Vec<CsvRow>> {
    let bad = |line: usize, msg: &str| Error::InvalidArgument(format!("csv line {line}: {msg}"));
    let mut lines = text.split_terminator('\n');
    if lines.next() != Some("x,mu,err_est,dofs_max") {
        return Err(bad(1, "unexpected header"));
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 4 {
                return Err(bad(i + 2, "expected 4 fields"));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad(i + 2, "malformed number"));
            Ok(CsvRow {
                x: num(f[0])?,
                mu: num(f[1])?,
                err_est: num(f[2])?,
                dofs_max: f[3].parse().map_err(|_| bad(i + 2, "malformed count"))?,
            })
        })
        .collect()
}

/// C's `%.17g`: 17 significant digits, trailing zeros removed, exponent
/// form when the decimal exponent is below -4 or at least 17.
pub fn format_g17(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{v:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..17).contains(&exp) {
        let fixed = format!("{:.*}", (16 - exp) as usize, v);
        strip_zeros(&fixed).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", strip_zeros(mantissa), exp.abs())
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// `m e p` means `m · 10^p`, where `p` may be fractional (`1e-1.5`).
pub fn parse_epsilon(text: &str) -> Result<f64> {
    let t = text.trim();
    let bad = || Error::InvalidArgument(format!("cannot parse `{text}` as a positive number"));
    let v = match t.split_once(['e', 'E']) {
        Some((m, p)) => {
            let m: f64 = m.parse().map_err(|_| bad())?;
            let p: f64 = p.parse().map_err(|_| bad())?;
            m * 10f64.powf(p)
        }
        None => t.parse().map_err(|_| bad())?,
    };
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(bad())
    }
}

/// `MIN:MAX:N`.
pub fn parse_grid(text: &str) -> Result<Grid> {
    let bad = || Error::InvalidArgument(format!("expected MIN:MAX:N, got `{text}`"));
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    Ok(Grid {
        min: parts[0].trim().parse().map_err(|_| bad())?,
        max: parts[1].trim().parse().map_err(|_| bad())?,
        n: parts[2].trim().parse().map_err(|_| bad())?,
    })
}

/// Slope of the least-squares line through `(xs[i], ys[i])`.
pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// One row of a convergence sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub epsilon: f64,
    pub mu: f64,
    pub reference: f64,
    pub rel_error: f64,
    pub dofs: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    /// Least-squares slope of `log10 rel_error` against `log10 ε`.
    pub slope: f64,
    pub warnings: Vec<Warning>,
}

impl SweepReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epsilon,mu,reference,rel_error,dofs_max\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                format_g17(r.epsilon),
                format_g17(r.mu),
                format_g17(r.reference),
                format_g17(r.rel_error),
                r.dofs
            ));
        }
        out
    }
}

fn sweep_command(args: SweepArgs) -> Result<i32> {
    let mut cfg = load(&args.config)?;
    if let Some(m) = args.order {
        cfg.kernel.order = m;
        cfg.kernel.poles = None;
        cfg.validate()?;
    }
    let epsilons = args
        .epsilons
        .iter()
        .map(|e| parse_epsilon(e).map_err(|err| flag_error("--epsilons", err.to_string())))
        .collect::<Result<Vec<_>>>()?;
    let report = convergence_study(&cfg, &epsilons, args.point, args.reference)?;
    print!("{}", report.to_csv());
    println!("slope,{}", format_g17(report.slope));
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    Ok(if report.warnings.is_empty() { EXIT_OK } else { EXIT_WARNINGS })
}

fn is_free_laplacian(cfg: &RunConfig) -> bool {
    let unit = |c: &Option<String>| match c {
        None => true,
        Some(text) => parse_expression(text).is_ok_and(|e| !e.uses(0) && !e.uses(1) && e.eval(&[]) == 1.0),
    };
    cfg.problem.mode == Mode::Operator
        && matches!(cfg.problem.terms.as_slice(),
            [TermSpec::Derivative { order: Some(2), coefficient, .. }] if unit(coefficient))
}

/// Relative error of `μ_f^ε(x0)` against the chosen reference for each ε,
/// with the fitted log-log slope.
pub fn convergence_study(cfg: &RunConfig, epsilons: &[f64], x0: f64, reference: Reference) -> Result<SweepReport> {
    if epsilons.len() < 3 {
        return Err(flag_error("--epsilons", format!("need at least 3 values, got {}", epsilons.len())));
    }
    if !x0.is_finite() {
        return Err(flag_error("--point", "must be finite"));
    }
    if cfg.problem.backend != Backend::Realline || cfg.problem.mode != Mode::Operator {
        return Err(flag_error("--reference", "references need a realline operator"));
    }
    let kernel = cfg.kernel()?;
    let model = cfg.build_model()?;
    let Model::RealLine(realline) = &model else {
        unreachable!("backend checked above")
    };
    let mut opts: SolverOptions = cfg.solver_options();
    let reference_at: Box<dyn Fn(f64) -> Result<f64> + Sync> = match reference {
        Reference::Laplacian => {
            if !is_free_laplacian(cfg) {
                return Err(flag_error("--reference", "laplacian reference needs problem.terms = [-d²/dx²]"));
            }
            let Some(text) = &cfg.f.expr else {
                return Err(flag_error("--reference", "laplacian reference needs f.expr"));
            };
            let f = parse_expression(text)?.into_fn1();
            let c = realline.normalization_constant().powi(2);
            let rho = c * laplacian_density(|x| num_complex::Complex64::new(f(x), 0.0), x0, &FourierQuadrature::default())?;
            Box::new(move |_| Ok(rho))
        }
        Reference::Dense => {
            let n = *opts.fixed_dofs.get_or_insert(DENSE_REFERENCE_DOFS);
            let (h, f) = realline.dense_truncation(n)?;
            let kernel = kernel.clone();
            Box::new(move |eps| dense_measure(&h, &f, &kernel, eps, x0))
        }
    };
    let rows = epsilons
        .par_iter()
        .map(|&eps| {
            let v = evaluate_measure(model.as_resolvent(), &kernel, x0, eps, &opts)?;
            let reference = reference_at(eps)?;
            Ok((
                SweepRow {
                    epsilon: eps,
                    mu: v.value,
                    reference,
                    rel_error: ((v.value - reference) / reference).abs(),
                    dofs: v.dofs,
                },
                v.warnings,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut warnings = Vec::new();
    let rows: Vec<SweepRow> = rows
        .into_iter()
        .map(|(r, w)| {
            warnings.extend(w);
            r
        })
        .collect();
    let xs: Vec<f64> = rows.iter().map(|r| r.epsilon.log10()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.rel_error.log10()).collect();
    Ok(SweepReport {
        slope: least_squares_slope(&xs, &ys),
        rows,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn g17_matches_printf() {
        let cases = [
            (0.1, "0.10000000000000001"),
            (1.0, "1"),
            (-2.5, "-2.5"),
            (1e-5, "1.0000000000000001e-05"),
            (1e-4, "0.0001"),
            (123456789.0, "123456789"),
            (1e17, "1e+17"),
            (1e16, "10000000000000000"),
            (6.02214076e23, "6.0221407599999999e+23"),
            (1.0 / 3.0, "0.33333333333333331"),
            (0.0, "0"),
            (5e-324, "4.9406564584124654e-324"),
        ];
        for (v, s) in cases {
            assert_eq!(format_g17(v), s, "{v:e}");
        }
    }

    #[test]
    fn epsilon_parsing() {
        assert_eq!(parse_epsilon("1e-1").unwrap(), 10f64.powf(-1.0));
        assert!((parse_epsilon("1e-1.5").unwrap() - 10f64.powf(-1.5)).abs() < 1e-18);
        assert_eq!(parse_epsilon("0.25").unwrap(), 0.25);
        assert_eq!(parse_epsilon("2E-2").unwrap(), 2.0 * 10f64.powf(-2.0));
        for bad in ["", "-1e-2", "abc", "1e", "0"] {
            assert!(parse_epsilon(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn grid_parsing() {
        let g = parse_grid("-5:5:11").unwrap();
        assert_eq!((g.min, g.max, g.n), (-5.0, 5.0, 11));
        assert!(parse_grid("1:2").is_err());
        assert!(parse_grid("a:2:3").is_err());
    }

    #[test]
    fn slope_of_a_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys: Vec<f64> = xs.iter().map(|x| 4.0 * x - 1.0).collect();
        assert!((least_squares_slope(&xs, &ys) - 4.0).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn csv_round_trip_is_bit_exact(
            xs in proptest::collection::vec(-1e6f64..1e6, 1..20),
            mus in proptest::collection::vec(prop_oneof![-1e-300f64..1e-300, -1e3f64..1e3], 20),
        ) {
            let n = xs.len();
            let r = MeasureResult {
                points: xs.clone(),
                values: mus[..n].to_vec(),
                err_est: mus[..n].iter().map(|v| v.abs()).collect(),
                dofs: (0..n).map(|i| 64 << i.min(10)).collect(),
                normalization_constant: 1.0,
                warnings: vec![],
            };
            let rows = parse_csv(&to_csv(&r)).unwrap();
            prop_assert_eq!(rows.len(), n);
            for (i, row) in rows.iter().enumerate() {
                prop_assert_eq!(row.x.to_bits(), r.points[i].to_bits());
                prop_assert_eq!(row.mu.to_bits(), r.values[i].to_bits());
                prop_assert_eq!(row.err_est.to_bits(), r.err_est[i].to_bits());
                prop_assert_eq!(row.dofs_max, r.dofs[i]);
            }
        }

        #[test]
        fn g17_has_seventeen_significant_digits(v in proptest::num::f64::NORMAL) {
            let s = format_g17(v);
            prop_assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
    }
}
