//! λ-parametrised, 2π-periodic symmetric coefficient families `A_λ(t)`.
//!
//! A family is a list of λ-knots, each carrying a trigonometric matrix
//! polynomial in `t`. Between knots the coefficient matrices are
//! interpolated linearly, so the λ-derivative is piecewise constant.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{eigvals_sym, LinalgError, SymMatrix};

/// Tolerance used when deciding whether a λ coincides with a knot.
pub const KNOT_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FamilyError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("a trigonometric polynomial needs at least the constant coefficient")]
    MissingConstantTerm,
    #[error("expected {expected} sine coefficients (one per frequency), got {got}")]
    SineCountMismatch { expected: usize, got: usize },
    #[error("coefficient {index} has dimension {got}, expected {expected}")]
    CoefficientDimension {
        index: usize,
        expected: usize,
        got: usize,
    },
    #[error("a family needs at least two knots, got {0}")]
    TooFewKnots(usize),
    #[error("knots must start at λ = 0 and end at λ = 1 (got {first} .. {last})")]
    KnotSpan { first: f64, last: f64 },
    #[error("knots must be strictly increasing (knot {index} at λ = {lambda})")]
    KnotOrder { index: usize, lambda: f64 },
    #[error("all knots must share n = {expected}, knot {index} has n = {got}")]
    KnotDimension {
        index: usize,
        expected: usize,
        got: usize,
    },
    #[error("λ = {0} lies outside [0, 1]")]
    LambdaOutOfRange(f64),
    #[error("t-grid of {got} points is too coarse, need at least {required}")]
    GridTooCoarse { got: usize, required: usize },
}

/// `A(t) = C₀ + Σ_{m=1..F} (C_m cos(mt) + S_m sin(mt))` with symmetric coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigMatrixPolynomial {
    n: usize,
    cos_coeffs: Vec<SymMatrix>,
    sin_coeffs: Vec<SymMatrix>,
}

impl TrigMatrixPolynomial {
    /// `cos_coeffs[0]` is the constant term, `sin_coeffs[m - 1]` multiplies `sin(mt)`.
    pub fn new(cos_coeffs: Vec<SymMatrix>, sin_coeffs: Vec<SymMatrix>) -> Result<Self, FamilyError> {
        let first = cos_coeffs.first().ok_or(FamilyError::MissingConstantTerm)?;
        first.require_even()?;
        let dim = first.dim();
        if sin_coeffs.len() + 1 != cos_coeffs.len() {
            return Err(FamilyError::SineCountMismatch {
                expected: cos_coeffs.len() - 1,
                got: sin_coeffs.len(),
            });
        }
        for (index, c) in cos_coeffs.iter().chain(&sin_coeffs).enumerate() {
            if c.dim() != dim {
                return Err(FamilyError::CoefficientDimension {
                    index,
                    expected: dim,
                    got: c.dim(),
                });
            }
        }
        Ok(Self {
            n: dim / 2,
            cos_coeffs,
            sin_coeffs,
        })
    }

    pub fn constant(c: SymMatrix) -> Result<Self, FamilyError> {
        Self::new(vec![c], vec![])
    }

    pub fn scalar(n: usize, c: f64) -> Self {
        Self {
            n,
            cos_coeffs: vec![SymMatrix::scalar(2 * n, c)],
            sin_coeffs: vec![],
        }
    }

    pub fn zero(n: usize, max_freq: usize) -> Self {
        let z = SymMatrix::zeros(2 * n);
        Self {
            n,
            cos_coeffs: vec![z.clone(); max_freq + 1],
            sin_coeffs: vec![z; max_freq],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        2 * self.n
    }

    pub fn max_freq(&self) -> usize {
        self.sin_coeffs.len()
    }

    pub fn cos_coeffs(&self) -> &[SymMatrix] {
        &self.cos_coeffs
    }

    pub fn sin_coeffs(&self) -> &[SymMatrix] {
        &self.sin_coeffs
    }

    /// The t-average `(1/2π)∫A(t)dt`, i.e. the constant coefficient.
    pub fn mean(&self) -> &SymMatrix {
        &self.cos_coeffs[0]
    }

    pub fn evaluate(&self, t: f64) -> SymMatrix {
        let mut a = self.cos_coeffs[0].clone();
        for m in 1..=self.max_freq() {
            let (s, c) = (m as f64 * t).sin_cos();
            a = a.axpy(c, &self.cos_coeffs[m]).axpy(s, &self.sin_coeffs[m - 1]);
        }
        a
    }

    /// Same polynomial with zero coefficients appended up to `max_freq`.
    pub fn padded(&self, max_freq: usize) -> Self {
        let mut p = self.clone();
        let z = SymMatrix::zeros(self.dim());
        while p.max_freq() < max_freq {
            p.cos_coeffs.push(z.clone());
            p.sin_coeffs.push(z.clone());
        }
        p
    }

    /// Coefficient-wise `self + s * other` (frequencies padded to the larger one).
    pub fn axpy(&self, s: f64, other: &Self) -> Self {
        assert_eq!(self.n, other.n, "polynomial dimension mismatch");
        let f = self.max_freq().max(other.max_freq());
        let (a, b) = (self.padded(f), other.padded(f));
        Self {
            n: self.n,
            cos_coeffs: a.cos_coeffs.iter().zip(&b.cos_coeffs).map(|(x, y)| x.axpy(s, y)).collect(),
            sin_coeffs: a.sin_coeffs.iter().zip(&b.sin_coeffs).map(|(x, y)| x.axpy(s, y)).collect(),
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            n: self.n,
            cos_coeffs: self.cos_coeffs.iter().map(|c| c.scaled(s)).collect(),
            sin_coeffs: self.sin_coeffs.iter().map(|c| c.scaled(s)).collect(),
        }
    }

    pub fn lerp(&self, other: &Self, theta: f64) -> Self {
        self.scaled(1.0 - theta).axpy(theta, other)
    }

    /// `Some(c)` if the polynomial is the constant `c·I`.
    pub fn as_scalar(&self) -> Option<f64> {
        let c0 = &self.cos_coeffs[0];
        let c = c0.get(0, 0);
        let d = self.dim();
        let scalar = (0..d).all(|i| (0..d).all(|j| c0.get(i, j) == if i == j { c } else { 0.0 }));
        let higher_zero = self.cos_coeffs[1..]
            .iter()
            .chain(&self.sin_coeffs)
            .all(|m| m.as_slice().iter().all(|&v| v == 0.0));
        (scalar && higher_zero).then_some(c)
    }
}

/// Which one-sided λ-derivative to take at a knot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LambdaDerivative {
    pub matrix: SymMatrix,
    /// The derivative was requested at a knot and is one-sided there.
    pub at_knot: bool,
    pub side: Side,
}

/// Piecewise-linear (in λ) path of trigonometric matrix polynomials on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixFamilyPath {
    lambdas: Vec<f64>,
    polys: Vec<TrigMatrixPolynomial>,
}

impl MatrixFamilyPath {
    pub fn new(knots: Vec<(f64, TrigMatrixPolynomial)>) -> Result<Self, FamilyError> {
        if knots.len() < 2 {
            return Err(FamilyError::TooFewKnots(knots.len()));
        }
        let first = knots[0].0;
        let last = knots[knots.len() - 1].0;
        if first != 0.0 || last != 1.0 {
            return Err(FamilyError::KnotSpan { first, last });
        }
        let n = knots[0].1.n();
        for (index, w) in knots.windows(2).enumerate() {
            if !(w[1].0 > w[0].0) {
                return Err(FamilyError::KnotOrder {
                    index: index + 1,
                    lambda: w[1].0,
                });
            }
        }
        for (index, (_, p)) in knots.iter().enumerate() {
            if p.n() != n {
                return Err(FamilyError::KnotDimension {
                    index,
                    expected: n,
                    got: p.n(),
                });
            }
        }
        let f = knots.iter().map(|(_, p)| p.max_freq()).max().unwrap_or(0);
        let (lambdas, polys) = knots.into_iter().map(|(l, p)| (l, p.padded(f))).unzip();
        Ok(Self { lambdas, polys })
    }

    /// Two-knot family interpolating `start` at λ = 0 and `end` at λ = 1.
    pub fn affine(start: TrigMatrixPolynomial, end: TrigMatrixPolynomial) -> Result<Self, FamilyError> {
        Self::new(vec![(0.0, start), (1.0, end)])
    }

    /// `A_λ ≡ c(λ)·I` with `c` linear from `c0` to `c1`.
    pub fn scalar_affine(n: usize, c0: f64, c1: f64) -> Self {
        Self::affine(TrigMatrixPolynomial::scalar(n, c0), TrigMatrixPolynomial::scalar(n, c1))
            .expect("scalar family is well formed")
    }

    /// `A_λ ≡ C_λ = (1 − λ)C₀ + λC₁`, constant in t.
    pub fn constant_affine(c0: &SymMatrix, c1: &SymMatrix) -> Result<Self, FamilyError> {
        Self::affine(
            TrigMatrixPolynomial::constant(c0.clone())?,
            TrigMatrixPolynomial::constant(c1.clone())?,
        )
    }

    pub fn n(&self) -> usize {
        self.polys[0].n()
    }

    pub fn dim(&self) -> usize {
        2 * self.n()
    }

    pub fn max_freq(&self) -> usize {
        self.polys[0].max_freq()
    }

    pub fn knot_lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn knots(&self) -> impl Iterator<Item = (f64, &TrigMatrixPolynomial)> {
        self.lambdas.iter().copied().zip(&self.polys)
    }

    fn check_lambda(lambda: f64) -> Result<(), FamilyError> {
        if (0.0..=1.0).contains(&lambda) {
            Ok(())
        } else {
            Err(FamilyError::LambdaOutOfRange(lambda))
        }
    }

    /// Index `j` of the segment `[λ_j, λ_{j+1}]` used for `lambda` on `side`.
    fn segment(&self, lambda: f64, side: Side) -> usize {
        let segs = self.lambdas.len() - 1;
        match side {
            Side::Right => {
                let j = self.lambdas.partition_point(|&l| l <= lambda);
                j.saturating_sub(1).min(segs - 1)
            }
            Side::Left => {
                let j = self.lambdas.partition_point(|&l| l < lambda);
                j.saturating_sub(1).min(segs - 1)
            }
        }
    }

    /// The interpolated polynomial `A_λ(·)`. Exact copy of the knot polynomial at knots.
    pub fn polynomial_at(&self, lambda: f64) -> Result<TrigMatrixPolynomial, FamilyError> {
        Self::check_lambda(lambda)?;
        if let Some(k) = self.lambdas.iter().position(|&l| l == lambda) {
            return Ok(self.polys[k].clone());
        }
        let j = self.segment(lambda, Side::Right);
        let (l0, l1) = (self.lambdas[j], self.lambdas[j + 1]);
        let theta = (lambda - l0) / (l1 - l0);
        Ok(self.polys[j].lerp(&self.polys[j + 1], theta))
    }

    pub fn evaluate(&self, lambda: f64, t: f64) -> Result<SymMatrix, FamilyError> {
        Ok(self.polynomial_at(lambda)?.evaluate(t))
    }

    /// The λ-derivative polynomial on the segment selected by `side`.
    pub fn derivative_polynomial(&self, lambda: f64, side: Side) -> Result<TrigMatrixPolynomial, FamilyError> {
        Self::check_lambda(lambda)?;
        let j = self.segment(lambda, side);
        let width = self.lambdas[j + 1] - self.lambdas[j];
        Ok(self.polys[j + 1].axpy(-1.0, &self.polys[j]).scaled(1.0 / width))
    }

    /// Right derivative `∂A_λ(t)/∂λ`; at λ = 1 the left derivative. The flag
    /// is set whenever λ sits on a knot.
    pub fn derivative_lambda(&self, lambda: f64, t: f64) -> Result<LambdaDerivative, FamilyError> {
        let side = if lambda >= 1.0 { Side::Left } else { Side::Right };
        let poly = self.derivative_polynomial(lambda, side)?;
        Ok(LambdaDerivative {
            matrix: poly.evaluate(t),
            at_knot: self.is_knot(lambda),
            side,
        })
    }

    pub fn is_knot(&self, lambda: f64) -> bool {
        self.lambdas.iter().any(|&l| (l - lambda).abs() <= KNOT_TOL)
    }

    /// Interior knot where the one-sided derivatives may differ.
    pub fn is_interior_knot(&self, lambda: f64) -> bool {
        let inner = &self.lambdas[1..self.lambdas.len() - 1];
        inner.iter().any(|&l| (l - lambda).abs() <= KNOT_TOL)
    }

    /// `(α_λ, β_λ)`: extreme eigenvalues of `A_λ(t)` over a uniform t-grid.
    pub fn spectral_bounds(&self, lambda: f64, t_grid: usize) -> Result<SpectralBounds, FamilyError> {
        let required = 4 * (self.max_freq() + 1);
        if t_grid < required {
            return Err(FamilyError::GridTooCoarse { got: t_grid, required });
        }
        let poly = self.polynomial_at(lambda)?;
        let mut alpha = f64::INFINITY;
        let mut beta = f64::NEG_INFINITY;
        for i in 0..t_grid {
            let t = 2.0 * PI * i as f64 / t_grid as f64;
            let eigs = eigvals_sym(&poly.evaluate(t))?;
            alpha = alpha.min(eigs[0]);
            beta = beta.max(eigs[eigs.len() - 1]);
        }
        Ok(SpectralBounds { alpha, beta, t_grid })
    }

    /// Default t-grid: 256 points or `8(F + 1)`, whichever is larger.
    pub fn default_t_grid(&self) -> usize {
        default_t_grid(self.max_freq())
    }

    /// Same family traversed backwards, `λ ↦ 1 − λ`.
    pub fn reversed(&self) -> Self {
        let lambdas = self.lambdas.iter().rev().map(|l| 1.0 - l).collect();
        let polys = self.polys.iter().rev().cloned().collect();
        Self { lambdas, polys }
    }

    /// The restriction to `[a, b]`, reparametrised onto `[0, 1]`.
    pub fn restricted(&self, a: f64, b: f64) -> Result<Self, FamilyError> {
        Self::check_lambda(a)?;
        Self::check_lambda(b)?;
        if !(a < b) {
            return Err(FamilyError::KnotOrder { index: 1, lambda: b });
        }
        let mut knots = vec![(0.0, self.polynomial_at(a)?)];
        for (l, p) in self.knots() {
            if l > a && l < b {
                knots.push(((l - a) / (b - a), p.clone()));
            }
        }
        knots.push((1.0, self.polynomial_at(b)?));
        Self::new(knots)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            lambdas: self.lambdas.clone(),
            polys: self.polys.iter().map(|p| p.scaled(s)).collect(),
        }
    }

    /// Knot values `c(λ_j)` if every knot polynomial is a constant `c·I`.
    pub fn scalar_profile(&self) -> Option<Vec<(f64, f64)>> {
        self.knots().map(|(l, p)| p.as_scalar().map(|c| (l, c))).collect()
    }
}

pub fn default_t_grid(max_freq: usize) -> usize {
    256.max(8 * (max_freq + 1))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralBounds {
    pub alpha: f64,
    pub beta: f64,
    pub t_grid: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn i2() -> SymMatrix {
        SymMatrix::identity(2)
    }

    #[test]
    fn constant_family_evaluates_everywhere() {
        let fam = MatrixFamilyPath::scalar_affine(1, 2.0, 2.0);
        for &(l, t) in &[(0.0, 0.0), (0.3, 1.7), (1.0, -4.0)] {
            assert_eq!(fam.evaluate(l, t).unwrap(), SymMatrix::scalar(2, 2.0));
        }
    }

    #[test]
    fn lambda_interpolation_is_linear() {
        let fam = MatrixFamilyPath::scalar_affine(1, 0.0, 1.0);
        assert_eq!(fam.evaluate(0.5, 0.3).unwrap(), SymMatrix::scalar(2, 0.5));
        assert!(matches!(fam.evaluate(1.5, 0.0), Err(FamilyError::LambdaOutOfRange(_))));
        assert!(matches!(fam.evaluate(-0.1, 0.0), Err(FamilyError::LambdaOutOfRange(_))));
    }

    #[test]
    fn cosine_term_at_pi() {
        let z = SymMatrix::zeros(2);
        let p = TrigMatrixPolynomial::new(vec![z.clone(), i2()], vec![z]).unwrap();
        let a = p.evaluate(PI);
        assert!(a.sub(&i2().scaled(-1.0)).norm_inf() < 1e-15);
    }

    #[test]
    fn derivative_examples() {
        let fam = MatrixFamilyPath::scalar_affine(1, 0.0, 1.0);
        let d = fam.derivative_lambda(0.37, 1.0).unwrap();
        assert_eq!(d.matrix, i2());
        assert!(!d.at_knot);

        let fam = MatrixFamilyPath::scalar_affine(1, 3.0, 3.0);
        assert_eq!(fam.derivative_lambda(0.5, 0.0).unwrap().matrix, SymMatrix::zeros(2));

        let fam = MatrixFamilyPath::new(vec![
            (0.0, TrigMatrixPolynomial::scalar(1, 0.0)),
            (0.5, TrigMatrixPolynomial::scalar(1, 1.0)),
            (1.0, TrigMatrixPolynomial::scalar(1, 1.0)),
        ])
        .unwrap();
        assert_eq!(fam.derivative_lambda(0.25, 0.0).unwrap().matrix, i2().scaled(2.0));
        let at_knot = fam.derivative_lambda(0.5, 0.0).unwrap();
        assert!(at_knot.at_knot);
        assert_eq!(at_knot.side, Side::Right);
        assert_eq!(at_knot.matrix, SymMatrix::zeros(2));
        let left = fam.derivative_polynomial(0.5, Side::Left).unwrap();
        assert_eq!(left.evaluate(0.0), i2().scaled(2.0));
        let end = fam.derivative_lambda(1.0, 0.0).unwrap();
        assert_eq!(end.side, Side::Left);
        assert!(fam.is_interior_knot(0.5) && !fam.is_interior_knot(1.0));
    }

    #[test]
    fn spectral_bound_examples() {
        let p = TrigMatrixPolynomial::new(
            vec![i2().scaled(2.0), i2()],
            vec![SymMatrix::zeros(2)],
        )
        .unwrap();
        let fam = MatrixFamilyPath::affine(p.clone(), p).unwrap();
        let b = fam.spectral_bounds(0.0, 256).unwrap();
        assert!((b.alpha - 1.0).abs() < 1e-12 && (b.beta - 3.0).abs() < 1e-12);

        let fam = MatrixFamilyPath::scalar_affine(2, -0.7, -0.7);
        let b = fam.spectral_bounds(0.4, 16).unwrap();
        assert!((b.alpha + 0.7).abs() < 1e-15 && (b.beta + 0.7).abs() < 1e-15);

        let z = SymMatrix::zeros(2);
        let sin_t = TrigMatrixPolynomial::new(
            vec![z.clone(), z],
            vec![SymMatrix::diagonal(&[1.0, -1.0])],
        )
        .unwrap();
        let fam = MatrixFamilyPath::affine(sin_t.clone(), sin_t).unwrap();
        let b = fam.spectral_bounds(1.0, 256).unwrap();
        assert!((b.alpha + 1.0).abs() < 1e-12 && (b.beta - 1.0).abs() < 1e-12);
        assert!(matches!(
            fam.spectral_bounds(0.0, 7),
            Err(FamilyError::GridTooCoarse { got: 7, required: 8 })
        ));
    }

    #[test]
    fn construction_is_validated() {
        let p = TrigMatrixPolynomial::scalar(1, 0.0);
        assert!(matches!(
            MatrixFamilyPath::new(vec![(0.0, p.clone())]),
            Err(FamilyError::TooFewKnots(1))
        ));
        assert!(matches!(
            MatrixFamilyPath::new(vec![(0.0, p.clone()), (0.9, p.clone())]),
            Err(FamilyError::KnotSpan { .. })
        ));
        assert!(matches!(
            MatrixFamilyPath::new(vec![(0.0, p.clone()), (0.5, p.clone()), (0.5, p.clone()), (1.0, p.clone())]),
            Err(FamilyError::KnotOrder { index: 2, .. })
        ));
        assert!(matches!(
            MatrixFamilyPath::new(vec![(0.0, p.clone()), (1.0, TrigMatrixPolynomial::scalar(2, 0.0))]),
            Err(FamilyError::KnotDimension { index: 1, .. })
        ));
        assert!(matches!(
            TrigMatrixPolynomial::new(vec![i2(), i2()], vec![]),
            Err(FamilyError::SineCountMismatch { .. })
        ));
        assert!(matches!(
            TrigMatrixPolynomial::new(vec![SymMatrix::identity(3)], vec![]),
            Err(FamilyError::Linalg(LinalgError::OddDimension(3)))
        ));
    }

    #[test]
    fn reversal_and_restriction() {
        let fam = MatrixFamilyPath::new(vec![
            (0.0, TrigMatrixPolynomial::scalar(1, 0.0)),
            (0.25, TrigMatrixPolynomial::scalar(1, 1.0)),
            (1.0, TrigMatrixPolynomial::scalar(1, -2.0)),
        ])
        .unwrap();
        let rev = fam.reversed();
        for &l in &[0.0, 0.1, 0.25, 0.6, 1.0] {
            let a = fam.evaluate(l, 0.0).unwrap();
            let b = rev.evaluate(1.0 - l, 0.0).unwrap();
            assert!(a.sub(&b).norm_inf() < 1e-14);
        }
        let r = fam.restricted(0.1, 0.6).unwrap();
        for &s in &[0.0, 0.3, 0.7, 1.0] {
            let a = fam.evaluate(0.1 + 0.5 * s, 0.0).unwrap();
            let b = r.evaluate(s, 0.0).unwrap();
            assert!(a.sub(&b).norm_inf() < 1e-14);
        }
        assert_eq!(fam.scalar_profile().unwrap(), vec![(0.0, 0.0), (0.25, 1.0), (1.0, -2.0)]);
    }

    #[test]
    fn knots_reproduce_polynomials_and_periodicity() {
        let mut coeffs = vec![];
        for k in 0..4 {
            let v = 0.3 * k as f64 - 0.4;
            coeffs.push(SymMatrix::from_rows(&[vec![v, 0.2], vec![0.2, -v]]).unwrap());
        }
        let p0 = TrigMatrixPolynomial::new(coeffs[..3].to_vec(), coeffs[2..].to_vec()).unwrap();
        let p1 = p0.scaled(-1.5);
        let fam = MatrixFamilyPath::affine(p0.clone(), p1.clone()).unwrap();
        for &t in &[0.0, 0.4, 2.2, 5.9] {
            assert_eq!(fam.evaluate(0.0, t).unwrap(), p0.evaluate(t));
            assert_eq!(fam.evaluate(1.0, t).unwrap(), p1.evaluate(t));
            let shifted = fam.evaluate(0.3, t + 2.0 * PI).unwrap();
            assert!(shifted.sub(&fam.evaluate(0.3, t).unwrap()).norm_inf() < 1e-13);
        }
        // Every sampled eigenvalue lies between the grid bounds.
        let b = fam.spectral_bounds(0.3, 64).unwrap();
        for i in 0..64 {
            let t = 2.0 * PI * i as f64 / 64.0;
            let eigs = eigvals_sym(&fam.evaluate(0.3, t).unwrap()).unwrap();
            assert!(eigs.iter().all(|&e| e >= b.alpha && e <= b.beta));
        }
    }

    #[test]
    fn default_grid() {
        assert_eq!(default_t_grid(3), 256);
        assert_eq!(default_t_grid(40), 328);
    }
}
