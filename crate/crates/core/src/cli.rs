//! Run configuration, command drivers and report output.
//!
//! A run is described by one JSON document. Each command returns a
//! [`Outcome`] holding the report and the process exit code:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success / bifurcation guaranteed |
//! | 1 | invalid input |
//! | 2 | endpoint assumption violated |
//! | 3 | criteria inconclusive |
//! | 4 | numerical failure |

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::comparison::{
    certify, comparison_flow, CChoice, CertifyOptions, ComparisonCertificate, ComparisonError, FinitenessHypothesis,
    SynthesisMode,
};
use crate::family::{FamilyError, MatrixFamilyPath, TrigMatrixPolynomial};
use crate::galerkin::{assemble_l, kernel_basis, FourierBasisSpec, GalerkinError, GalerkinPath, DEFAULT_KERNEL_TOL};
use crate::linalg::{LinalgError, SymMatrix};
use crate::monodromy::{self, MonodromyError, MonodromyScan};
use crate::sfl::{eigenvalue_traces, spectral_flow, DeltaPolicy, SflError, SflOptions, SflResult};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_ENDPOINT: i32 = 2;
pub const EXIT_INCONCLUSIVE: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

/// Distance within which singular parameters of two engines are matched.
pub const AGREEMENT_TOL: f64 = 2e-4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CliError {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("endpoint assumption violated: {0}")]
    Endpoint(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Endpoint(_) => EXIT_ENDPOINT,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

impl From<FamilyError> for CliError {
    fn from(e: FamilyError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<LinalgError> for CliError {
    fn from(e: LinalgError) -> Self {
        match e {
            LinalgError::NoConvergence { .. } => CliError::Numerical(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<GalerkinError> for CliError {
    fn from(e: GalerkinError) -> Self {
        match e {
            GalerkinError::Linalg(l) => l.into(),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<MonodromyError> for CliError {
    fn from(e: MonodromyError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<SflError> for CliError {
    fn from(e: SflError) -> Self {
        match e {
            SflError::EndpointSingular { .. } => CliError::Endpoint(e.to_string()),
            SflError::GridTooCoarse { .. } | SflError::InvalidTolerance(_) | SflError::InvalidInterval { .. } => {
                CliError::Input(e.to_string())
            }
            SflError::Linalg(l) => l.into(),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<ComparisonError> for CliError {
    fn from(e: ComparisonError) -> Self {
        match e {
            ComparisonError::Linalg(l) => l.into(),
            ComparisonError::Family(f) => f.into(),
            ComparisonError::Monodromy(m) => m.into(),
            ComparisonError::Galerkin(g) => g.into(),
            ComparisonError::Sfl(s) => s.into(),
            ComparisonError::DimensionMismatch { .. } => CliError::Input(e.to_string()),
            ComparisonError::Internal(_) => CliError::Numerical(e.to_string()),
        }
    }
}

type Coeffs = Vec<Vec<Vec<f64>>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KnotConfig {
    pub lambda: f64,
    /// `cos_coeffs[0]` is the constant term.
    pub cos_coeffs: Coeffs,
    #[serde(default)]
    pub sin_coeffs: Coeffs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyConfig {
    pub knots: Vec<KnotConfig>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GalerkinConfig {
    pub cutoff: Option<usize>,
    pub quad_points: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeltaKeyword {
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DeltaSetting {
    Value(f64),
    Keyword(DeltaKeyword),
}

impl DeltaSetting {
    pub fn policy(&self) -> DeltaPolicy {
        match self {
            DeltaSetting::Value(d) => DeltaPolicy::Fixed(*d),
            DeltaSetting::Keyword(DeltaKeyword::Auto) => DeltaPolicy::Auto,
        }
    }
}

fn default_lambda_grid() -> usize {
    64
}

fn default_delta() -> DeltaSetting {
    DeltaSetting::Keyword(DeltaKeyword::Auto)
}

fn default_tol() -> f64 {
    DEFAULT_KERNEL_TOL
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SflConfig {
    #[serde(default = "default_lambda_grid")]
    pub lambda_grid: usize,
    #[serde(default = "default_delta")]
    pub delta: DeltaSetting,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_tol")]
    pub tol_kernel: f64,
}

impl Default for SflConfig {
    fn default() -> Self {
        Self { lambda_grid: default_lambda_grid(), delta: default_delta(), seed: 0, tol_kernel: default_tol() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CKeyword {
    #[serde(rename = "auto-scalar")]
    AutoScalar,
    #[serde(rename = "auto-shifted-mean")]
    AutoShiftedMean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CSetting {
    Keyword(CKeyword),
    Matrix(Vec<Vec<f64>>),
}

impl CSetting {
    fn choice(&self) -> Result<CChoice, CliError> {
        Ok(match self {
            CSetting::Keyword(CKeyword::AutoScalar) => CChoice::Auto(SynthesisMode::Scalar),
            CSetting::Keyword(CKeyword::AutoShiftedMean) => CChoice::Auto(SynthesisMode::ShiftedMean),
            CSetting::Matrix(rows) => CChoice::Given(SymMatrix::from_rows(rows)?),
        })
    }
}

fn auto_scalar() -> CSetting {
    CSetting::Keyword(CKeyword::AutoScalar)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComparisonConfig {
    #[serde(default = "auto_scalar", alias = "C0")]
    pub c0: CSetting,
    #[serde(default = "auto_scalar", alias = "C1")]
    pub c1: CSetting,
}

impl Default for ComparisonConfig {
    fn default() -> Self {
        Self { c0: auto_scalar(), c1: auto_scalar() }
    }
}

fn default_steps() -> usize {
    monodromy::DEFAULT_STEPS
}

fn default_scan_grid() -> usize {
    128
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonodromyConfig {
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_scan_grid")]
    pub lambda_grid: usize,
}

impl Default for MonodromyConfig {
    fn default() -> Self {
        Self { steps: default_steps(), lambda_grid: default_scan_grid() }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub format: OutputFormat,
    #[serde(default)]
    pub traces: bool,
    #[serde(default)]
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub n: usize,
    pub family: FamilyConfig,
    #[serde(default)]
    pub galerkin: GalerkinConfig,
    #[serde(default)]
    pub sfl: SflConfig,
    #[serde(default)]
    pub comparison: ComparisonConfig,
    #[serde(default)]
    pub monodromy: MonodromyConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Scalar settings that may be overridden from the command line.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub cutoff: Option<usize>,
    pub quad_points: Option<usize>,
    pub lambda_grid: Option<usize>,
    pub delta: Option<DeltaSetting>,
    pub seed: Option<u64>,
    pub tol_kernel: Option<f64>,
    pub steps: Option<usize>,
    pub scan_grid: Option<usize>,
    pub format: Option<OutputFormat>,
    pub traces: Option<bool>,
    pub path: Option<PathBuf>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut RunConfig) {
        fn set<T: Clone>(dst: &mut T, src: &Option<T>) {
            if let Some(v) = src {
                *dst = v.clone();
            }
        }
        if self.cutoff.is_some() {
            cfg.galerkin.cutoff = self.cutoff;
        }
        if self.quad_points.is_some() {
            cfg.galerkin.quad_points = self.quad_points;
        }
        set(&mut cfg.sfl.lambda_grid, &self.lambda_grid);
        set(&mut cfg.sfl.delta, &self.delta);
        set(&mut cfg.sfl.seed, &self.seed);
        set(&mut cfg.sfl.tol_kernel, &self.tol_kernel);
        set(&mut cfg.monodromy.steps, &self.steps);
        set(&mut cfg.monodromy.lambda_grid, &self.scan_grid);
        set(&mut cfg.output.format, &self.format);
        set(&mut cfg.output.traces, &self.traces);
        if self.path.is_some() {
            cfg.output.path = self.path.clone();
        }
    }
}

/// Parses a config document; unknown keys and malformed values are
/// rejected with the line and column of the problem.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Input(format!("config: {e}")))
}

fn sym(rows: &[Vec<f64>], what: &str) -> Result<SymMatrix, CliError> {
    SymMatrix::from_rows(rows).map_err(|e| CliError::Input(format!("{what}: {e}")))
}

impl RunConfig {
    pub fn build_family(&self) -> Result<MatrixFamilyPath, CliError> {
        if self.n == 0 {
            return Err(CliError::Input("n must be positive".into()));
        }
        let d = 2 * self.n;
        let mut knots = Vec::with_capacity(self.family.knots.len());
        for (i, k) in self.family.knots.iter().enumerate() {
            let conv = |list: &Coeffs, kind: &str| -> Result<Vec<SymMatrix>, CliError> {
                list.iter()
                    .enumerate()
                    .map(|(j, rows)| {
                        let m = sym(rows, &format!("family.knots[{i}].{kind}[{j}]"))?;
                        if m.dim() != d {
                            return Err(CliError::Input(format!(
                                "family.knots[{i}].{kind}[{j}]: dimension {} but 2n = {d}",
                                m.dim()
                            )));
                        }
                        Ok(m)
                    })
                    .collect()
            };
            let poly = TrigMatrixPolynomial::new(conv(&k.cos_coeffs, "cos_coeffs")?, conv(&k.sin_coeffs, "sin_coeffs")?)
                .map_err(|e| CliError::Input(format!("family.knots[{i}]: {e}")))?;
            knots.push((k.lambda, poly));
        }
        Ok(MatrixFamilyPath::new(knots)?)
    }

    /// Copy with every defaulted value made explicit. Re-running the
    /// normalised config reproduces the same report.
    pub fn normalized(&self) -> Result<RunConfig, CliError> {
        let fam = self.build_family()?;
        let mut out = self.clone();
        let cutoff = match self.galerkin.cutoff {
            Some(c) => c,
            None => FourierBasisSpec::default_cutoff(fam.max_freq(), max_threshold(&fam)?),
        };
        let spec = FourierBasisSpec::new(self.n, cutoff)?;
        out.galerkin.cutoff = Some(cutoff);
        out.galerkin.quad_points = Some(self.galerkin.quad_points.unwrap_or(spec.default_quad_points(fam.max_freq())));
        Ok(out)
    }

    fn sfl_options(&self) -> SflOptions {
        SflOptions {
            lambda_grid: self.sfl.lambda_grid,
            tol_kernel: self.sfl.tol_kernel,
            delta: self.sfl.delta.policy(),
            seed: self.sfl.seed,
            interval: None,
        }
    }

    fn galerkin_path(&self, fam: &MatrixFamilyPath) -> Result<GalerkinPath, CliError> {
        let spec = FourierBasisSpec::new(self.n, self.galerkin.cutoff.expect("normalised"))?;
        Ok(GalerkinPath::new(fam, spec, self.galerkin.quad_points.expect("normalised"))?)
    }
}

/// `⌈max |μ|⌉` over the coefficient spectra at all knots; extreme eigenvalues
/// of a piecewise-linear family are attained at knots.
fn max_threshold(fam: &MatrixFamilyPath) -> Result<usize, CliError> {
    let grid = fam.default_t_grid();
    let mut m = 0.0_f64;
    for &l in fam.knot_lambdas() {
        let b = fam.spectral_bounds(l, grid)?;
        m = m.max(b.alpha.abs()).max(b.beta.abs());
    }
    Ok(m.ceil() as usize)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CrossCheck {
    fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, detail: detail.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleCrossing {
    pub lambda: f64,
    pub integer: i64,
    pub kernel_dim: usize,
    pub contribution: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleResult {
    pub sfl: i64,
    pub crossings: Vec<OracleCrossing>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub command: String,
    pub version: String,
    pub config: RunConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<ComparisonCertificate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sfl: Option<SflResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub comparison_sfl: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub monodromy: Option<MonodromyScan>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleResult>,
    pub checks: Vec<CrossCheck>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub exit_code: i32,
}

impl Report {
    fn new(command: &str, config: RunConfig) -> Self {
        Self {
            command: command.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config,
            certificate: None,
            sfl: None,
            comparison_sfl: None,
            monodromy: None,
            oracle: None,
            checks: Vec::new(),
            error: None,
            exit_code: EXIT_OK,
        }
    }
}

/// Report plus the eigenvalue traces requested for CSV output.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub report: Report,
    pub traces: Option<Vec<(f64, Vec<f64>)>>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        self.report.exit_code
    }

    fn finish(mut report: Report, code: i32) -> Self {
        report.exit_code = code;
        Self { report, traces: None }
    }

    /// Failure after the config was accepted: reported, not just logged.
    fn failed(mut report: Report, err: CliError) -> Self {
        report.error = Some(err.to_string());
        Self::finish(report, err.exit_code())
    }
}

fn prepare(cfg: &RunConfig) -> Result<(RunConfig, MatrixFamilyPath), CliError> {
    let cfg = cfg.normalized()?;
    let fam = cfg.build_family()?;
    if cfg.monodromy.steps < monodromy::MIN_STEPS {
        return Err(MonodromyError::TooFewSteps { got: cfg.monodromy.steps, required: monodromy::MIN_STEPS }.into());
    }
    Ok((cfg, fam))
}

/// Galerkin kernel dimension at each monodromy singular value.
fn galerkin_agreement(cfg: &RunConfig, fam: &MatrixFamilyPath, scan: &MonodromyScan) -> Result<CrossCheck, CliError> {
    let spec = FourierBasisSpec::new(cfg.n, cfg.galerkin.cutoff.expect("normalised"))?;
    let quad = cfg.galerkin.quad_points.expect("normalised");
    let mut mismatches = Vec::new();
    for p in &scan.points {
        let op = assemble_l(&spec, fam, p.lambda, 0.0, quad)?;
        let dim = kernel_basis(&op, cfg.sfl.tol_kernel)?.len();
        if dim != p.kernel_dim {
            mismatches.push(format!("lambda {}: monodromy {} vs galerkin {}", p.lambda, p.kernel_dim, dim));
        }
    }
    Ok(CrossCheck::new(
        "galerkin-monodromy-agreement",
        mismatches.is_empty(),
        if mismatches.is_empty() {
            format!("{} singular values matched", scan.points.len())
        } else {
            mismatches.join("; ")
        },
    ))
}

/// Monodromy kernel dimension at each Galerkin crossing.
fn monodromy_agreement(cfg: &RunConfig, fam: &MatrixFamilyPath, res: &SflResult) -> Result<CrossCheck, CliError> {
    if res.delta_used != 0.0 {
        return Ok(CrossCheck::new(
            "galerkin-monodromy-agreement",
            true,
            "skipped: crossings belong to a shifted path",
        ));
    }
    let mut mismatches = Vec::new();
    for c in &res.crossings {
        let m = monodromy::integrate_fundamental(fam, c.lambda, cfg.monodromy.steps)?;
        if m.kernel_dim != c.kernel_dim {
            mismatches.push(format!("lambda {}: galerkin {} vs monodromy {}", c.lambda, c.kernel_dim, m.kernel_dim));
        }
    }
    Ok(CrossCheck::new(
        "galerkin-monodromy-agreement",
        mismatches.is_empty(),
        if mismatches.is_empty() {
            format!("{} crossings matched", res.crossings.len())
        } else {
            mismatches.join("; ")
        },
    ))
}

pub fn cmd_certify(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let (cfg, fam) = prepare(cfg)?;
    let mut report = Report::new("certify", cfg.clone());
    let opts = CertifyOptions {
        steps: cfg.monodromy.steps,
        cutoff: cfg.galerkin.cutoff,
        ..CertifyOptions::default()
    };
    let mut cert = certify(&fam, &cfg.comparison.c0.choice()?, &cfg.comparison.c1.choice()?, &opts)?;
    let scan = match monodromy::scan_lambda(&fam, cfg.monodromy.lambda_grid, cfg.monodromy.steps, monodromy::DEFAULT_KERNEL_RTOL) {
        Ok(s) => s,
        Err(e) => return Ok(Outcome::failed(report, e.into())),
    };
    cert.finiteness = FinitenessHypothesis::SpotChecked {
        singular_points: scan.points.len(),
        lambda_grid: scan.lambda_grid,
    };
    if cert.bifurcation_guaranteed {
        let interior = scan.points.iter().filter(|p| p.lambda > 0.0 && p.lambda < 1.0).count();
        report.checks.push(CrossCheck::new(
            "monodromy-attains-bound",
            interior as u64 >= cert.count_lower_bound.max(1),
            format!("{interior} interior singular values, lower bound {}", cert.count_lower_bound),
        ));
    }
    if cert.endpoints_ok() && cert.sandwich.valid {
        let gp = cfg.galerkin_path(&fam)?;
        let needed: usize = cert.per_index_counts.iter().sum();
        match (spectral_flow(&gp, &cfg.sfl_options()), comparison_flow(&cert.c0, &cert.c1, gp.spec().cutoff, &cfg.sfl_options())) {
            (Ok(l), Ok(m)) => {
                report.checks.push(CrossCheck::new(
                    "sfl-dominates-comparison",
                    l.value >= m.value && m.value >= needed as i64,
                    format!("sfl(L) = {}, sfl(M) = {}, sum of counts = {needed}", l.value, m.value),
                ));
                report.comparison_sfl = Some(m.value);
                report.sfl = Some(l);
            }
            (l, m) => {
                let why: Vec<String> = [l.err().map(|e| format!("L: {e}")), m.err().map(|e| format!("M: {e}"))]
                    .into_iter()
                    .flatten()
                    .collect();
                report.checks.push(CrossCheck::new("sfl-dominates-comparison", false, why.join("; ")));
            }
        }
    }
    report.checks.push(galerkin_agreement(&cfg, &fam, &scan)?);
    report.monodromy = Some(scan);
    let code = if !cert.endpoints_ok() {
        EXIT_ENDPOINT
    } else if cert.bifurcation_guaranteed {
        EXIT_OK
    } else {
        EXIT_INCONCLUSIVE
    };
    report.certificate = Some(cert);
    Ok(Outcome::finish(report, code))
}

pub fn cmd_sfl(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let (cfg, fam) = prepare(cfg)?;
    let report = Report::new("sfl", cfg.clone());
    let gp = cfg.galerkin_path(&fam)?;
    let traces = cfg.output.traces.then(|| eigenvalue_traces(&gp, cfg.sfl.lambda_grid, 0.0));
    let res = match spectral_flow(&gp, &cfg.sfl_options()) {
        Ok(r) => r,
        Err(e @ (SflError::GridTooCoarse { .. } | SflError::InvalidTolerance(_))) => return Err(e.into()),
        Err(e) => {
            let mut out = Outcome::failed(report, e.into());
            out.traces = traces;
            return Ok(out);
        }
    };
    let mut report = report;
    report.checks.push(monodromy_agreement(&cfg, &fam, &res)?);
    report.sfl = Some(res);
    let code = if report.checks.iter().all(|c| c.passed) { EXIT_OK } else { EXIT_NUMERICAL };
    let mut out = Outcome::finish(report, code);
    out.traces = traces;
    Ok(out)
}

pub fn cmd_monodromy(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let (cfg, fam) = prepare(cfg)?;
    let mut report = Report::new("monodromy", cfg.clone());
    let scan = monodromy::scan_lambda(&fam, cfg.monodromy.lambda_grid, cfg.monodromy.steps, monodromy::DEFAULT_KERNEL_RTOL)?;
    report.checks.push(CrossCheck::new(
        "clusters-resolved",
        scan.unresolved.is_empty(),
        format!("{} unresolved clusters", scan.unresolved.len()),
    ));
    report.checks.push(CrossCheck::new(
        "symplectic-residual",
        scan.max_symplectic_residual <= 1e-8,
        format!("max residual {:e}", scan.max_symplectic_residual),
    ));
    report.checks.push(galerkin_agreement(&cfg, &fam, &scan)?);
    report.monodromy = Some(scan);
    let code = if report.checks[0].passed { EXIT_OK } else { EXIT_NUMERICAL };
    Ok(Outcome::finish(report, code))
}

/// Closed form for `A_λ ≡ c(λ)·I`: the kernel is nontrivial exactly when
/// `c(λ) ∈ ℤ`, with dimension 2n, and each crossing contributes `2n` times
/// the one-sided slope signs of `c`.
pub fn scalar_oracle(n: usize, profile: &[(f64, f64)]) -> Result<OracleResult, CliError> {
    let two_n = 2 * n as i64;
    let is_int = |c: f64| c == c.round();
    let slope = |j: usize| {
        let ((l0, c0), (l1, c1)) = (profile[j], profile[j + 1]);
        (c1 - c0) / (l1 - l0)
    };
    let mut found: Vec<(f64, i64)> = Vec::new();
    for j in 0..profile.len() - 1 {
        let ((l0, c0), (l1, c1)) = (profile[j], profile[j + 1]);
        if c0 == c1 {
            if is_int(c0) {
                return Err(CliError::Input(format!(
                    "c(lambda) = {c0} is an integer on all of [{l0}, {l1}]; the family is singular on an interval"
                )));
            }
            continue;
        }
        let (lo, hi) = (c0.min(c1), c0.max(c1));
        for k in (lo.ceil() as i64)..=(hi.floor() as i64) {
            let lambda = l0 + (k as f64 - c0) / (c1 - c0) * (l1 - l0);
            if !found.iter().any(|&(l, kk)| kk == k && (l - lambda).abs() <= 1e-12) {
                found.push((lambda, k));
            }
        }
    }
    found.sort_by(|a, b| a.0.total_cmp(&b.0));
    let last = profile.len() - 1;
    let crossings = found
        .into_iter()
        .map(|(lambda, integer)| {
            // Segment to the left and right of the crossing.
            let right_seg = profile[..last].iter().rposition(|&(l, _)| l <= lambda).unwrap_or(0);
            let left_seg = profile[1..].iter().position(|&(l, _)| l >= lambda).unwrap_or(last - 1);
            let up_left = lambda > 0.0 && slope(left_seg) > 0.0;
            let down_right = lambda < 1.0 && slope(right_seg) < 0.0;
            let contribution = two_n * (up_left as i64 - down_right as i64);
            OracleCrossing { lambda, integer, kernel_dim: 2 * n, contribution }
        })
        .collect::<Vec<_>>();
    let sfl = two_n * (profile[last].1.floor() as i64 - profile[0].1.floor() as i64);
    debug_assert_eq!(sfl, crossings.iter().map(|c| c.contribution).sum::<i64>());
    Ok(OracleResult { sfl, crossings })
}

pub fn cmd_oracle(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let (cfg, fam) = prepare(cfg)?;
    let profile = fam
        .scalar_profile()
        .ok_or_else(|| CliError::Input("oracle needs a constant scalar family c(lambda)*I at every knot".into()))?;
    let oracle = scalar_oracle(cfg.n, &profile)?;
    let mut report = Report::new("oracle", cfg.clone());
    let singular_end = oracle.crossings.iter().any(|c| c.lambda == 0.0 || c.lambda == 1.0);
    if singular_end {
        report.oracle = Some(oracle);
        return Ok(Outcome::failed(report, CliError::Endpoint("c(0) or c(1) is an integer".into())));
    }
    let n_cut = cfg.galerkin.cutoff.expect("normalised");
    let resolved = oracle.crossings.iter().all(|c| c.integer.unsigned_abs() as usize <= n_cut);
    let gp = cfg.galerkin_path(&fam)?;
    match spectral_flow(&gp, &cfg.sfl_options()) {
        Ok(r) => {
            report.checks.push(CrossCheck::new(
                "sfl-matches-oracle",
                !resolved || r.value == oracle.sfl,
                format!("engine {} vs closed form {}{}", r.value, oracle.sfl, if resolved { "" } else { " (integers beyond cutoff)" }),
            ));
            report.sfl = Some(r);
        }
        Err(e) => report.checks.push(CrossCheck::new("sfl-matches-oracle", false, e.to_string())),
    }
    let scan = monodromy::scan_lambda(&fam, cfg.monodromy.lambda_grid, cfg.monodromy.steps, monodromy::DEFAULT_KERNEL_RTOL)?;
    let matched = scan.points.len() == oracle.crossings.len()
        && scan
            .points
            .iter()
            .zip(&oracle.crossings)
            .all(|(p, c)| (p.lambda - c.lambda).abs() <= AGREEMENT_TOL && p.kernel_dim == c.kernel_dim);
    report.checks.push(CrossCheck::new(
        "monodromy-matches-oracle",
        matched,
        format!("{} singular values vs {} closed-form crossings", scan.points.len(), oracle.crossings.len()),
    ));
    report.monodromy = Some(scan);
    report.oracle = Some(oracle);
    let code = if report.checks.iter().all(|c| c.passed) { EXIT_OK } else { EXIT_NUMERICAL };
    Ok(Outcome::finish(report, code))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Certify,
    Sfl,
    Monodromy,
    Oracle,
}

pub fn execute(command: Command, cfg: &RunConfig) -> Result<Outcome, CliError> {
    match command {
        Command::Certify => cmd_certify(cfg),
        Command::Sfl => cmd_sfl(cfg),
        Command::Monodromy => cmd_monodromy(cfg),
        Command::Oracle => cmd_oracle(cfg),
    }
}

/// Flattens a JSON value into `(dotted.path, scalar)` rows.
fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(map) => map.iter().for_each(|(k, v)| flatten(&key(k), v, out)),
        Value::Array(items) => items.iter().enumerate().for_each(|(i, v)| flatten(&key(&i.to_string()), v, out)),
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        Value::Null => out.push((prefix.to_string(), String::new())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

pub fn render(report: &Report, format: OutputFormat) -> Result<String, CliError> {
    let value = serde_json::to_value(report).map_err(|e| CliError::Numerical(e.to_string()))?;
    match format {
        OutputFormat::Json => {
            let mut s = serde_json::to_string_pretty(&value).map_err(|e| CliError::Numerical(e.to_string()))?;
            s.push('\n');
            Ok(s)
        }
        OutputFormat::Csv => {
            let mut rows = Vec::new();
            flatten("", &value, &mut rows);
            let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
            w.write_record(["key", "value"]).expect("in-memory write");
            for (k, v) in rows {
                w.write_record([k, v]).expect("in-memory write");
            }
            Ok(String::from_utf8(w.into_inner().expect("in-memory write")).expect("utf-8"))
        }
    }
}

pub fn render_traces(traces: &[(f64, Vec<f64>)]) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let dim = traces.first().map_or(0, |t| t.1.len());
    let header: Vec<String> = std::iter::once("lambda".to_string()).chain((1..=dim).map(|i| format!("eig_{i}"))).collect();
    w.write_record(&header).expect("in-memory write");
    for (l, eigs) in traces {
        let row: Vec<String> = std::iter::once(l.to_string()).chain(eigs.iter().map(|e| e.to_string())).collect();
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory write")).expect("utf-8")
}

/// Writes via a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

/// Path of the traces CSV: next to the report, or `traces.csv`.
pub fn traces_path(output: &OutputConfig) -> PathBuf {
    match &output.path {
        Some(p) => {
            let mut s = p.clone().into_os_string();
            s.push(".traces.csv");
            PathBuf::from(s)
        }
        None => PathBuf::from("traces.csv"),
    }
}

/// Writes the report (to `output.path` or the returned string for stdout)
/// and the traces file if present.
pub fn emit(outcome: &Outcome) -> Result<Option<String>, CliError> {
    let output = &outcome.report.config.output;
    let text = render(&outcome.report, output.format)?;
    if let Some(traces) = &outcome.traces {
        write_atomic(&traces_path(output), &render_traces(traces)).map_err(|e| CliError::Input(format!("writing traces: {e}")))?;
    }
    match &output.path {
        Some(p) => {
            write_atomic(p, &text).map_err(|e| CliError::Input(format!("writing {}: {e}", p.display())))?;
            Ok(None)
        }
        None => Ok(Some(text)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_config(c0: f64, c1: f64) -> String {
        format!(
            r#"{{"n": 1, "family": {{"knots": [
                {{"lambda": 0, "cos_coeffs": [[[{c0}, 0], [0, {c0}]]]}},
                {{"lambda": 1, "cos_coeffs": [[[{c1}, 0], [0, {c1}]]]}}]}},
               "galerkin": {{"cutoff": 8}}, "monodromy": {{"steps": 1024, "lambda_grid": 32}}}}"#
        )
    }

    #[test]
    fn strict_schema() {
        assert!(parse_config(&scalar_config(0.5, 0.5)).is_ok());
        let bad = scalar_config(0.5, 0.5).replace("\"n\": 1", "\"n\": 1, \"extra\": 3");
        let e = parse_config(&bad).unwrap_err();
        assert!(matches!(&e, CliError::Input(m) if m.contains("unknown field") && m.contains("line")));
        let bad = scalar_config(0.5, 0.5).replace("\"cutoff\": 8", "\"cutof\": 8");
        assert!(parse_config(&bad).is_err());
    }

    #[test]
    fn delta_and_c_settings() {
        let cfg = parse_config(&scalar_config(0.5, 0.5).replace(
            "\"galerkin\"",
            "\"sfl\": {\"delta\": 0.001}, \"comparison\": {\"C0\": [[0,0],[0,0]], \"c1\": \"auto-shifted-mean\"}, \"galerkin\"",
        ))
        .unwrap();
        assert_eq!(cfg.sfl.delta, DeltaSetting::Value(0.001));
        assert_eq!(cfg.comparison.c1, CSetting::Keyword(CKeyword::AutoShiftedMean));
        assert!(matches!(cfg.comparison.c0, CSetting::Matrix(_)));
        let auto = parse_config(&scalar_config(0.5, 0.5)).unwrap();
        assert_eq!(auto.sfl.delta.policy(), DeltaPolicy::Auto);
        assert!(parse_config(&scalar_config(0.5, 0.5).replace("\"galerkin\"", "\"sfl\": {\"delta\": \"often\"}, \"galerkin\"")).is_err());
    }

    #[test]
    fn normalized_config_round_trips() {
        let cfg = parse_config(&scalar_config(-0.5, 1.5).replace("\"cutoff\": 8", "\"cutoff\": null")).unwrap();
        let norm = cfg.normalized().unwrap();
        assert_eq!(norm.galerkin.cutoff, Some(8));
        let text = serde_json::to_string(&norm).unwrap();
        assert_eq!(parse_config(&text).unwrap(), norm);
        assert_eq!(norm.normalized().unwrap(), norm);
    }

    #[test]
    fn non_square_matrix_is_input_error() {
        let bad = scalar_config(0.5, 0.5).replace("[[0.5, 0], [0, 0.5]]", "[[0.5, 0, 1], [0, 0.5]]");
        let cfg = parse_config(&bad).unwrap();
        let e = cmd_certify(&cfg).unwrap_err();
        assert_eq!(e.exit_code(), EXIT_INPUT);
    }

    #[test]
    fn oracle_closed_form() {
        let r = scalar_oracle(1, &[(0.0, -0.5), (1.0, 1.5)]).unwrap();
        assert_eq!(r.sfl, 4);
        assert_eq!(r.crossings.iter().map(|c| c.lambda).collect::<Vec<_>>(), vec![0.25, 0.75]);
        assert!(r.crossings.iter().all(|c| c.kernel_dim == 2 && c.contribution == 2));
        assert_eq!(scalar_oracle(1, &[(0.0, 0.5), (1.0, 0.5)]).unwrap().sfl, 0);
        // Turning point exactly at an integer contributes nothing.
        let r = scalar_oracle(2, &[(0.0, -0.5), (0.5, 0.0), (1.0, -0.25)]).unwrap();
        assert_eq!(r.sfl, 0);
        assert_eq!(r.crossings.len(), 1);
        assert_eq!(r.crossings[0].contribution, 0);
        let r = scalar_oracle(1, &[(0.0, 1.5), (0.5, -0.5), (1.0, 0.5)]).unwrap();
        assert_eq!(r.sfl, -2);
        assert_eq!(r.crossings.iter().map(|c| c.contribution).collect::<Vec<_>>(), vec![-2, -2, 2]);
        assert!(scalar_oracle(1, &[(0.0, 1.0), (0.5, 1.0), (1.0, 1.5)]).is_err());
    }

    #[test]
    fn traces_csv_layout() {
        let csv = render_traces(&[(0.0, vec![1.0, 2.5]), (0.5, vec![-1.0, 3.0])]);
        assert_eq!(csv, "lambda,eig_1,eig_2\n0,1,2.5\n0.5,-1,3\n");
        let p = traces_path(&OutputConfig { path: Some("out/run.json".into()), ..OutputConfig::default() });
        assert_eq!(p, PathBuf::from("out/run.json.traces.csv"));
    }

    #[test]
    fn csv_report_flattens_json() {
        let cfg = parse_config(&scalar_config(0.5, 0.5)).unwrap();
        let out = cmd_monodromy(&cfg).unwrap();
        let csv = render(&out.report, OutputFormat::Csv).unwrap();
        assert!(csv.starts_with("key,value\n"));
        assert!(csv.contains("command,monodromy\n"));
        assert!(csv.contains("config.n,1\n"));
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.json");
        write_atomic(&p, "one").unwrap();
        write_atomic(&p, "two").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
