//! Comparison criteria for bifurcation of periodic solutions.
//!
//! Given constant matrices with `A₀(t) ≤ C₀ ≤ C₁ ≤ A₁(t)` for all `t`, the
//! spectral flow of the family dominates that of the constant path
//! `C_λ = (1 − λ)C₀ + λC₁`, whose kernels are explicit. The eigenvalues of
//! `C₀` and `C₁` then decide whether a bifurcation is forced and give a lower
//! bound on the number of bifurcation points.

use serde::Serialize;
use thiserror::Error;

use crate::family::{FamilyError, MatrixFamilyPath};
use crate::galerkin::{GalerkinError, GalerkinPath};
use crate::linalg::{commutes_with_j, count_integers_half_open, eigvals_sym, loewner_margin, LinalgError, SymMatrix};
use crate::monodromy::{self, MonodromyError};
use crate::sfl::{crossing_sum_positive, CrossingSum, SflError, SflOptions};

/// Eigenvalues within this distance of an integer are taken to be that integer.
pub const INTEGER_SNAP: f64 = 1e-12;
pub const DEFAULT_SANDWICH_TOL: f64 = 1e-10;
pub const COMMUTE_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ComparisonError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Family(#[from] FamilyError),
    #[error(transparent)]
    Monodromy(#[from] MonodromyError),
    #[error(transparent)]
    Galerkin(#[from] GalerkinError),
    #[error(transparent)]
    Sfl(#[from] SflError),
    #[error("matrix of dimension {got} does not match the family dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("internal inconsistency: {0}")]
    Internal(String),
}

fn snap(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= INTEGER_SNAP {
        r
    } else {
        x
    }
}

fn snapped_eigs(c: &SymMatrix) -> Result<Vec<f64>, ComparisonError> {
    Ok(eigvals_sym(c)?.into_iter().map(snap).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SandwichCheck {
    pub valid: bool,
    pub c0_leq_c1: bool,
    /// `min_t μ_min(C₀ − A₀(t))`
    pub lower_margin: f64,
    /// `μ_min(C₁ − C₀)`
    pub middle_margin: f64,
    /// `min_t μ_min(A₁(t) − C₁)`
    pub upper_margin: f64,
    pub t_grid: usize,
}

fn check_dim(fam: &MatrixFamilyPath, c: &SymMatrix) -> Result<(), ComparisonError> {
    if c.dim() == fam.dim() {
        Ok(())
    } else {
        Err(ComparisonError::DimensionMismatch { expected: fam.dim(), got: c.dim() })
    }
}

fn t_points(t_grid: usize) -> impl Iterator<Item = f64> {
    (0..t_grid).map(move |i| 2.0 * std::f64::consts::PI * i as f64 / t_grid as f64)
}

/// Checks `A₀(t) ≤ C₀ ≤ C₁ ≤ A₁(t)` on a uniform t-grid.
pub fn validate_sandwich(
    fam: &MatrixFamilyPath,
    c0: &SymMatrix,
    c1: &SymMatrix,
    t_grid: usize,
    tol: f64,
) -> Result<SandwichCheck, ComparisonError> {
    check_dim(fam, c0)?;
    check_dim(fam, c1)?;
    let required = 4 * (fam.max_freq() + 1);
    if t_grid < required {
        return Err(FamilyError::GridTooCoarse { got: t_grid, required }.into());
    }
    let (p0, p1) = (fam.polynomial_at(0.0)?, fam.polynomial_at(1.0)?);
    let mut lower_margin = f64::INFINITY;
    let mut upper_margin = f64::INFINITY;
    for t in t_points(t_grid) {
        lower_margin = lower_margin.min(loewner_margin(&p0.evaluate(t), c0)?);
        upper_margin = upper_margin.min(loewner_margin(c1, &p1.evaluate(t))?);
    }
    let middle_margin = loewner_margin(c0, c1)?;
    let c0_leq_c1 = middle_margin >= -tol;
    Ok(SandwichCheck {
        valid: lower_margin >= -tol && c0_leq_c1 && upper_margin >= -tol,
        c0_leq_c1,
        lower_margin,
        middle_margin,
        upper_margin,
        t_grid,
    })
}

/// Smallest 1-based `i` with `μ_i(C₀) < 0 ≤ μ_i(C₁)`.
///
/// When the spectra are ordered, this is cross-checked against a change of
/// Morse index between `C₀` and `C₁`.
pub fn theorem_i_check(c0: &SymMatrix, c1: &SymMatrix) -> Result<Option<usize>, ComparisonError> {
    if c0.dim() != c1.dim() {
        return Err(ComparisonError::DimensionMismatch { expected: c0.dim(), got: c1.dim() });
    }
    let (e0, e1) = (snapped_eigs(c0)?, snapped_eigs(c1)?);
    let index = (0..e0.len()).find(|&i| e0[i] < 0.0 && 0.0 <= e1[i]).map(|i| i + 1);
    if e0.iter().zip(&e1).all(|(a, b)| a <= b) {
        let m0 = e0.iter().filter(|&&e| e < 0.0).count();
        let m1 = e1.iter().filter(|&&e| e < 0.0).count();
        if index.is_some() != (m0 != m1) {
            return Err(ComparisonError::Internal(format!(
                "index criterion gives {index:?} but Morse indices are {m0} and {m1}"
            )));
        }
    }
    Ok(index)
}

/// Ratio `numerator / denominator` in lowest terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Rational {
    pub numerator: u64,
    pub denominator: u64,
}

impl Rational {
    pub fn new(numerator: u64, denominator: u64) -> Self {
        assert!(denominator > 0);
        let g = gcd(numerator, denominator);
        Self { numerator: numerator / g, denominator: denominator / g }
    }

    pub fn ceil(&self) -> u64 {
        self.numerator.div_ceil(self.denominator)
    }

    pub fn to_f64(&self) -> f64 {
        self.numerator as f64 / self.denominator as f64
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a.max(1)
    } else {
        gcd(b, a % b)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoremII {
    /// Both matrices commute with `J`.
    pub applicable: bool,
    /// `(i, k)` with `μ_i(C₀) < k ≤ μ_i(C₁)`, `i` 1-based; only when applicable.
    pub witness: Option<(usize, i64)>,
    pub per_index_counts: Vec<usize>,
    pub raw_bound: Rational,
    pub count_lower_bound: u64,
}

pub fn theorem_ii_check(c0: &SymMatrix, c1: &SymMatrix) -> Result<TheoremII, ComparisonError> {
    if c0.dim() != c1.dim() {
        return Err(ComparisonError::DimensionMismatch { expected: c0.dim(), got: c1.dim() });
    }
    let applicable = commutes_with_j(c0, COMMUTE_TOL) && commutes_with_j(c1, COMMUTE_TOL);
    let (e0, e1) = (snapped_eigs(c0)?, snapped_eigs(c1)?);
    let per_index_counts = e0
        .iter()
        .zip(&e1)
        .map(|(&a, &b)| if a <= b { count_integers_half_open(a, b) } else { Ok(0) })
        .collect::<Result<Vec<_>, _>>()?;
    let witness = if applicable {
        (0..e0.len())
            .find(|&i| per_index_counts[i] > 0)
            .map(|i| (i + 1, e0[i].floor() as i64 + 1))
    } else {
        None
    };
    let raw_bound = Rational::new(per_index_counts.iter().sum::<usize>() as u64, c0.dim() as u64);
    Ok(TheoremII {
        applicable,
        witness,
        per_index_counts,
        raw_bound,
        count_lower_bound: raw_bound.ceil(),
    })
}

/// `β₀ = max_t μ_max(A₀(t))` and `α₁ = min_t μ_min(A₁(t))`.
pub fn scalar_bounds(fam: &MatrixFamilyPath, t_grid: usize) -> Result<(f64, f64), ComparisonError> {
    let beta0 = fam.spectral_bounds(0.0, t_grid)?.beta;
    let alpha1 = fam.spectral_bounds(1.0, t_grid)?.alpha;
    Ok((beta0, alpha1))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalarCorollary {
    pub beta0: f64,
    pub alpha1: f64,
    pub applicable: bool,
    /// `|(β₀, α₁] ∩ ℤ|`, zero when `β₀ > α₁`.
    pub bound: u64,
    pub theorem_ii: TheoremII,
}

/// Comparison with `C₀ = β₀·I`, `C₁ = α₁·I`.
pub fn scalar_corollary(fam: &MatrixFamilyPath, t_grid: usize) -> Result<ScalarCorollary, ComparisonError> {
    let (beta0, alpha1) = scalar_bounds(fam, t_grid)?;
    let d = fam.dim();
    let theorem_ii = theorem_ii_check(&SymMatrix::scalar(d, beta0), &SymMatrix::scalar(d, alpha1))?;
    let applicable = snap(beta0) <= snap(alpha1);
    let bound = if applicable {
        let direct = count_integers_half_open(snap(beta0), snap(alpha1))? as u64;
        if direct != theorem_ii.count_lower_bound {
            return Err(ComparisonError::Internal(format!(
                "scalar bound {direct} differs from the matrix bound {}",
                theorem_ii.count_lower_bound
            )));
        }
        direct
    } else {
        0
    };
    Ok(ScalarCorollary { beta0, alpha1, applicable, bound, theorem_ii })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SynthesisMode {
    Scalar,
    ShiftedMean,
}

/// Constant comparison matrix for one side of the sandwich.
///
/// `Scalar` gives `β₀·I` (side 0) or `α₁·I` (side 1). `ShiftedMean` gives
/// `Ā ± r·I` with `Ā` the t-average of the coefficient and `r` the smallest
/// shift for which the side holds on the grid.
pub fn synthesize_c(
    fam: &MatrixFamilyPath,
    side: usize,
    mode: SynthesisMode,
    t_grid: usize,
) -> Result<SymMatrix, ComparisonError> {
    assert!(side <= 1, "side is 0 or 1");
    let lambda = side as f64;
    let d = fam.dim();
    match mode {
        SynthesisMode::Scalar => {
            let b = fam.spectral_bounds(lambda, t_grid)?;
            Ok(SymMatrix::scalar(d, if side == 0 { b.beta } else { b.alpha }))
        }
        SynthesisMode::ShiftedMean => {
            let required = 4 * (fam.max_freq() + 1);
            if t_grid < required {
                return Err(FamilyError::GridTooCoarse { got: t_grid, required }.into());
            }
            let poly = fam.polynomial_at(lambda)?;
            let mean = poly.mean().clone();
            let mut r = f64::NEG_INFINITY;
            for t in t_points(t_grid) {
                let diff = if side == 0 { poly.evaluate(t).sub(&mean) } else { mean.sub(&poly.evaluate(t)) };
                let e = eigvals_sym(&diff)?;
                r = r.max(e[d - 1]);
            }
            Ok(if side == 0 { mean.shifted(r) } else { mean.shifted(-r) })
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CChoice {
    Given(SymMatrix),
    Auto(SynthesisMode),
}

/// How the hypothesis of finitely many singular parameters was treated.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum FinitenessHypothesis {
    Unverified,
    /// A monodromy scan found this many singular values (a finite grid
    /// cannot prove finiteness).
    SpotChecked { singular_points: usize, lambda_grid: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertifyOptions {
    pub t_grid: Option<usize>,
    pub steps: usize,
    pub sandwich_tol: f64,
    /// Run a monodromy λ-scan with this grid to spot-check finiteness.
    pub scan_grid: Option<usize>,
    /// Galerkin cutoff in use, to flag integers beyond the resolved modes.
    pub cutoff: Option<usize>,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self {
            t_grid: None,
            steps: monodromy::DEFAULT_STEPS,
            sandwich_tol: DEFAULT_SANDWICH_TOL,
            scan_grid: None,
            cutoff: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonCertificate {
    pub c0: SymMatrix,
    pub c1: SymMatrix,
    pub eig_c0: Vec<f64>,
    pub eig_c1: Vec<f64>,
    pub sandwich: SandwichCheck,
    pub c0_leq_c1: bool,
    pub commute_j: (bool, bool),
    pub thm_i_index: Option<usize>,
    pub thm_ii_witness: Option<(usize, i64)>,
    pub per_index_counts: Vec<usize>,
    pub raw_bound: Rational,
    /// `⌈raw_bound⌉` when the matrices commute with `J`, else 0.
    pub count_lower_bound: u64,
    pub endpoints_invertible: (bool, bool),
    pub finiteness: FinitenessHypothesis,
    pub bifurcation_guaranteed: bool,
    pub warnings: Vec<String>,
}

impl ComparisonCertificate {
    pub fn endpoints_ok(&self) -> bool {
        self.endpoints_invertible.0 && self.endpoints_invertible.1
    }
}

/// Builds the full certificate, synthesising `C₀`/`C₁` where requested.
pub fn certify(
    fam: &MatrixFamilyPath,
    c0: &CChoice,
    c1: &CChoice,
    options: &CertifyOptions,
) -> Result<ComparisonCertificate, ComparisonError> {
    let t_grid = options.t_grid.unwrap_or_else(|| fam.default_t_grid());
    let resolve = |choice: &CChoice, side| match choice {
        CChoice::Given(c) => check_dim(fam, c).map(|_| c.clone()),
        CChoice::Auto(mode) => synthesize_c(fam, side, *mode, t_grid),
    };
    let (c0, c1) = (resolve(c0, 0)?, resolve(c1, 1)?);
    let sandwich = validate_sandwich(fam, &c0, &c1, t_grid, options.sandwich_tol)?;
    let (eig_c0, eig_c1) = (snapped_eigs(&c0)?, snapped_eigs(&c1)?);
    if sandwich.c0_leq_c1 {
        let slack = options.sandwich_tol.max(1e-12 * (1.0 + c0.norm_inf() + c1.norm_inf()));
        if let Some(i) = (0..eig_c0.len()).find(|&i| eig_c0[i] > eig_c1[i] + slack) {
            return Err(ComparisonError::Internal(format!(
                "C0 <= C1 but eigenvalue {} decreases from {} to {}",
                i + 1,
                eig_c0[i],
                eig_c1[i]
            )));
        }
    }
    let commute_j = (commutes_with_j(&c0, COMMUTE_TOL), commutes_with_j(&c1, COMMUTE_TOL));
    let thm_i_index = theorem_i_check(&c0, &c1)?;
    let thm_ii = theorem_ii_check(&c0, &c1)?;
    let endpoints_invertible = monodromy::endpoint_invertibility(fam, options.steps)?;
    let finiteness = match options.scan_grid {
        Some(grid) => {
            let scan = monodromy::scan_lambda(fam, grid, options.steps, monodromy::DEFAULT_KERNEL_RTOL)?;
            FinitenessHypothesis::SpotChecked { singular_points: scan.points.len(), lambda_grid: grid }
        }
        None => FinitenessHypothesis::Unverified,
    };

    let mut warnings = Vec::new();
    if !commute_j.0 || !commute_j.1 {
        warnings.push("C0 or C1 does not commute with J; only the index criterion applies".to_string());
    }
    if let Some(n_cut) = options.cutoff {
        let beyond: Vec<i64> = eig_c0
            .iter()
            .zip(&eig_c1)
            .filter(|(a, b)| a <= b)
            .flat_map(|(&a, &b)| (a.floor() as i64 + 1)..=(b.floor() as i64))
            .filter(|k| k.unsigned_abs() as usize > n_cut)
            .collect();
        if !beyond.is_empty() {
            warnings.push(format!(
                "integer thresholds {beyond:?} exceed the Galerkin cutoff N = {n_cut}; their kernels are not resolved"
            ));
        }
    }

    let witness = thm_i_index.is_some() || thm_ii.witness.is_some();
    let bifurcation_guaranteed =
        sandwich.valid && endpoints_invertible.0 && endpoints_invertible.1 && witness;
    Ok(ComparisonCertificate {
        eig_c0,
        eig_c1,
        c0_leq_c1: sandwich.c0_leq_c1,
        sandwich,
        commute_j,
        thm_i_index,
        thm_ii_witness: thm_ii.witness,
        per_index_counts: thm_ii.per_index_counts,
        raw_bound: thm_ii.raw_bound,
        count_lower_bound: if thm_ii.applicable { thm_ii.count_lower_bound } else { 0 },
        endpoints_invertible,
        finiteness,
        bifurcation_guaranteed,
        warnings,
        c0,
        c1,
    })
}

/// Spectral flow of the Galerkin truncation of the constant path
/// `C_λ = (1 − λ)C₀ + λC₁`, by the positive crossing sum when `C₀ ≤ C₁`.
pub fn comparison_flow(
    c0: &SymMatrix,
    c1: &SymMatrix,
    cutoff: usize,
    opts: &SflOptions,
) -> Result<CrossingSum, ComparisonError> {
    let path = MatrixFamilyPath::constant_affine(c0, c1)?;
    let gp = GalerkinPath::with_cutoff(&path, cutoff)?;
    Ok(crossing_sum_positive(&gp, opts)?)
}
