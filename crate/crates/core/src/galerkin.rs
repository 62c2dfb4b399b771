//! Fourier–Galerkin truncation of the periodic Hessian form.
//!
//! Functions `u(t) = c₀ + Σ_{k=1..N} (a_k sin(kt) + b_k cos(kt))` with
//! `c₀, a_k, b_k ∈ ℝ²ⁿ` are stored as raw coefficient vectors in the fixed
//! order: constants first, then for each `k = 1..N` the sine block followed
//! by the cosine block. The H^{1/2} Gram matrix in this basis is diagonal
//! (`2π` on constants, `πk` on mode `k`), so every assembled form is returned
//! already conjugated by `G^{-1/2}` and can go straight into a symmetric
//! eigensolver.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::family::{FamilyError, MatrixFamilyPath, Side, TrigMatrixPolynomial};
use crate::linalg::{near_null_space, LinalgError, SymMatrix, SymplecticJ};

/// Kernel detection tolerance on normalised eigenvalues.
pub const DEFAULT_KERNEL_TOL: f64 = 1e-7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GalerkinError {
    #[error(transparent)]
    Family(#[from] FamilyError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("cutoff must be at least 1")]
    InvalidCutoff,
    #[error("{got} quadrature points cannot resolve the products, need at least {required}")]
    QuadratureTooCoarse { got: usize, required: usize },
    #[error("coefficient dimension {got} does not match basis dimension 2n = {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("mode {k} exceeds the cutoff N = {cutoff}")]
    ModeOutOfRange { k: i64, cutoff: usize },
}

/// Which trigonometric factor a basis block carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockKind {
    Constant,
    Sine(usize),
    Cosine(usize),
}

impl BlockKind {
    fn value(self, t: f64) -> f64 {
        match self {
            BlockKind::Constant => 1.0,
            BlockKind::Sine(k) => (k as f64 * t).sin(),
            BlockKind::Cosine(k) => (k as f64 * t).cos(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FourierBasisSpec {
    pub n: usize,
    pub cutoff: usize,
}

impl FourierBasisSpec {
    pub fn new(n: usize, cutoff: usize) -> Result<Self, GalerkinError> {
        if cutoff == 0 {
            return Err(GalerkinError::InvalidCutoff);
        }
        assert!(n > 0, "n must be positive");
        Ok(Self { n, cutoff })
    }

    /// `max(8, 2(F + K))` where K bounds the integer thresholds of interest.
    pub fn default_cutoff(max_freq: usize, max_threshold: usize) -> usize {
        8.max(2 * (max_freq + max_threshold))
    }

    /// Total dimension `2n(2N + 1)`.
    pub fn dim(&self) -> usize {
        2 * self.n * (2 * self.cutoff + 1)
    }

    pub fn block_count(&self) -> usize {
        2 * self.cutoff + 1
    }

    /// Block `b` in basis order: 0 is the constant block, then sine/cosine pairs.
    pub fn block_kind(&self, b: usize) -> BlockKind {
        match b {
            0 => BlockKind::Constant,
            b if b % 2 == 1 => BlockKind::Sine(b.div_ceil(2)),
            b => BlockKind::Cosine(b / 2),
        }
    }

    pub fn constant_offset(&self) -> usize {
        0
    }

    pub fn sine_offset(&self, k: usize) -> usize {
        debug_assert!(k >= 1 && k <= self.cutoff);
        2 * self.n * (2 * k - 1)
    }

    pub fn cosine_offset(&self, k: usize) -> usize {
        self.sine_offset(k) + 2 * self.n
    }

    /// Mode number `k` of a coordinate (0 for constants).
    pub fn mode_of(&self, index: usize) -> usize {
        match self.block_kind(index / (2 * self.n)) {
            BlockKind::Constant => 0,
            BlockKind::Sine(k) | BlockKind::Cosine(k) => k,
        }
    }

    pub fn default_quad_points(&self, max_freq: usize) -> usize {
        4 * (self.cutoff + max_freq + 1)
    }

    fn check_quad(&self, max_freq: usize, quad_points: usize) -> Result<(), GalerkinError> {
        let required = self.default_quad_points(max_freq);
        if quad_points < required {
            Err(GalerkinError::QuadratureTooCoarse { got: quad_points, required })
        } else {
            Ok(())
        }
    }

    fn check_n(&self, dim: usize) -> Result<(), GalerkinError> {
        if dim == 2 * self.n {
            Ok(())
        } else {
            Err(GalerkinError::DimensionMismatch { expected: 2 * self.n, got: dim })
        }
    }
}

/// Diagonal of the H^{1/2} Gram matrix in basis order.
#[derive(Debug, Clone, PartialEq)]
pub struct GramWeights(pub Vec<f64>);

impl GramWeights {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Raw coefficients → coordinates in the H^{1/2}-orthonormal basis.
    pub fn to_orthonormal(&self, raw: &[f64]) -> Vec<f64> {
        raw.iter().zip(&self.0).map(|(x, g)| x * g.sqrt()).collect()
    }

    pub fn from_orthonormal(&self, coords: &[f64]) -> Vec<f64> {
        coords.iter().zip(&self.0).map(|(y, g)| y / g.sqrt()).collect()
    }

    /// `G^{-1/2} B G^{-1/2}`.
    pub fn normalize(&self, raw: &SymMatrix) -> SymMatrix {
        let d = raw.dim();
        let inv_sqrt: Vec<f64> = self.0.iter().map(|g| 1.0 / g.sqrt()).collect();
        let mut data = raw.as_slice().to_vec();
        for i in 0..d {
            for j in 0..d {
                data[i * d + j] *= inv_sqrt[i] * inv_sqrt[j];
            }
        }
        SymMatrix::symmetrized(d, data)
    }
}

pub fn gram_weights(spec: &FourierBasisSpec) -> GramWeights {
    weights(spec, |k| PI * k as f64)
}

/// Diagonal of the L² Gram matrix (`2π` constants, `π` per mode coordinate).
pub fn l2_weights(spec: &FourierBasisSpec) -> GramWeights {
    weights(spec, |_| PI)
}

fn weights(spec: &FourierBasisSpec, mode_weight: impl Fn(usize) -> f64) -> GramWeights {
    let two_n = 2 * spec.n;
    let mut w = vec![2.0 * PI; two_n];
    for k in 1..=spec.cutoff {
        w.extend(std::iter::repeat(mode_weight(k)).take(2 * two_n));
    }
    GramWeights(w)
}

/// Raw matrix of `Q(u, v) = ∫⟨J u′, v⟩dt` on basis functions.
///
/// Only the sine/cosine blocks of equal mode couple: the (sine, cosine)
/// block is `−πk J` and its transpose sits in (cosine, sine).
pub fn assemble_q(spec: &FourierBasisSpec) -> SymMatrix {
    let d = spec.dim();
    let n = spec.n;
    let j = SymplecticJ::new(n).matrix();
    let mut data = vec![0.0; d * d];
    for k in 1..=spec.cutoff {
        let (s, c) = (spec.sine_offset(k), spec.cosine_offset(k));
        let w = PI * k as f64;
        for a in 0..2 * n {
            for b in 0..2 * n {
                let jab = j.get(a, b);
                // Q(e_a sin, e_b cos) = πk ⟨J e_a, e_b⟩ = πk J[b][a]
                data[(s + b) * d + (c + a)] = w * jab;
                data[(c + a) * d + (s + b)] = w * jab;
            }
        }
    }
    SymMatrix::symmetrized(d, data)
}

/// Raw matrix of `∫⟨A(t) φ_i, φ_j⟩dt` for a fixed polynomial, by uniform
/// trapezoidal quadrature (exact below the Nyquist limit).
pub fn assemble_mult_poly(
    spec: &FourierBasisSpec,
    poly: &TrigMatrixPolynomial,
    quad_points: usize,
) -> Result<SymMatrix, GalerkinError> {
    spec.check_n(poly.dim())?;
    spec.check_quad(poly.max_freq(), quad_points)?;
    let d = spec.dim();
    let two_n = 2 * spec.n;
    let blocks = spec.block_count();
    let kinds: Vec<BlockKind> = (0..blocks).map(|b| spec.block_kind(b)).collect();
    let h = 2.0 * PI / quad_points as f64;
    let mut data = vec![0.0; d * d];
    let mut f = vec![0.0; blocks];
    for q in 0..quad_points {
        let t = h * q as f64;
        let a = poly.evaluate(t);
        let a = a.as_slice();
        for (fv, kind) in f.iter_mut().zip(&kinds) {
            *fv = kind.value(t);
        }
        for bi in 0..blocks {
            let wi = h * f[bi];
            if wi == 0.0 {
                continue;
            }
            for bj in bi..blocks {
                let w = wi * f[bj];
                if w == 0.0 {
                    continue;
                }
                for r in 0..two_n {
                    let row = (bi * two_n + r) * d + bj * two_n;
                    for c in 0..two_n {
                        // ⟨A φ_{bj,c}, φ_{bi,r}⟩ = f_bi f_bj A[r][c]
                        data[row + c] += w * a[r * two_n + c];
                    }
                }
            }
        }
    }
    // Mirror the upper block triangle.
    for i in 0..d {
        for j in 0..i {
            if i / two_n != j / two_n {
                data[i * d + j] = data[j * d + i];
            }
        }
    }
    Ok(SymMatrix::symmetrized(d, data))
}

pub fn assemble_mult(
    spec: &FourierBasisSpec,
    fam: &MatrixFamilyPath,
    lambda: f64,
    quad_points: usize,
) -> Result<SymMatrix, GalerkinError> {
    assemble_mult_poly(spec, &fam.polynomial_at(lambda)?, quad_points)
}

/// Truncated Hessian in orthonormal coordinates, possibly shifted by `δ·I`.
#[derive(Debug, Clone, PartialEq)]
pub struct GalerkinOperator {
    pub spec: FourierBasisSpec,
    pub matrix: SymMatrix,
    pub lambda: f64,
    pub delta: f64,
}

/// Operator for an arbitrary coefficient polynomial.
pub fn assemble_for_poly(
    spec: &FourierBasisSpec,
    poly: &TrigMatrixPolynomial,
    delta: f64,
    quad_points: usize,
) -> Result<SymMatrix, GalerkinError> {
    let raw = assemble_q(spec).add(&assemble_mult_poly(spec, poly, quad_points)?);
    Ok(gram_weights(spec).normalize(&raw).shifted(delta))
}

/// `G^{-1/2}(B_Q + B_A)G^{-1/2} + δ·I` at parameter `lambda`.
pub fn assemble_l(
    spec: &FourierBasisSpec,
    fam: &MatrixFamilyPath,
    lambda: f64,
    delta: f64,
    quad_points: usize,
) -> Result<GalerkinOperator, GalerkinError> {
    let matrix = assemble_for_poly(spec, &fam.polynomial_at(lambda)?, delta, quad_points)?;
    Ok(GalerkinOperator { spec: *spec, matrix, lambda, delta })
}

/// The comparison homotopy with coefficients `(1 − s)A_λ(t) + s C_λ`,
/// where `C_λ = (1 − λ)C₀ + λC₁`.
#[derive(Debug, Clone)]
pub struct HomotopyRectangle {
    family: MatrixFamilyPath,
    c0: SymMatrix,
    c1: SymMatrix,
}

impl HomotopyRectangle {
    pub fn new(family: MatrixFamilyPath, c0: SymMatrix, c1: SymMatrix) -> Result<Self, GalerkinError> {
        for c in [&c0, &c1] {
            if c.dim() != family.dim() {
                return Err(GalerkinError::DimensionMismatch { expected: family.dim(), got: c.dim() });
            }
        }
        Ok(Self { family, c0, c1 })
    }

    pub fn family(&self) -> &MatrixFamilyPath {
        &self.family
    }

    pub fn c_lambda(&self, lambda: f64) -> SymMatrix {
        self.c0.lerp(&self.c1, lambda)
    }

    pub fn coefficient(&self, lambda: f64, s: f64) -> Result<TrigMatrixPolynomial, GalerkinError> {
        let a = self.family.polynomial_at(lambda)?;
        let c = TrigMatrixPolynomial::constant(self.c_lambda(lambda))?;
        Ok(a.lerp(&c, s))
    }

    /// λ ↦ H(λ, s). At `s = 1` this is the constant-coefficient path `M`.
    pub fn lambda_edge(&self, s: f64) -> Result<MatrixFamilyPath, GalerkinError> {
        let knots = self
            .family
            .knot_lambdas()
            .iter()
            .map(|&l| self.coefficient(l, s).map(|p| (l, p)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(MatrixFamilyPath::new(knots)?)
    }

    /// s ↦ H(λ, s) for fixed λ, reparametrised as a family on `[0, 1]`.
    pub fn s_edge(&self, lambda: f64) -> Result<MatrixFamilyPath, GalerkinError> {
        Ok(MatrixFamilyPath::affine(
            self.family.polynomial_at(lambda)?,
            TrigMatrixPolynomial::constant(self.c_lambda(lambda))?,
        )?)
    }
}

pub fn assemble_homotopy(
    spec: &FourierBasisSpec,
    fam: &MatrixFamilyPath,
    c0: &SymMatrix,
    c1: &SymMatrix,
    lambda: f64,
    s: f64,
    delta: f64,
    quad_points: usize,
) -> Result<GalerkinOperator, GalerkinError> {
    let rect = HomotopyRectangle::new(fam.clone(), c0.clone(), c1.clone())?;
    let poly = rect.coefficient(lambda, s)?;
    let matrix = assemble_for_poly(spec, &poly, delta, quad_points)?;
    Ok(GalerkinOperator { spec: *spec, matrix, lambda, delta })
}

/// Orthonormal eigenvectors of `op` with eigenvalue modulus at most `tol`.
pub fn kernel_basis(op: &GalerkinOperator, tol: f64) -> Result<Vec<Vec<f64>>, GalerkinError> {
    Ok(near_null_space(&op.matrix, tol)?)
}

/// Raw coefficients of `u(t) = u₀cos(kt) + Ju₀sin(kt)` for an integer `k`
/// with `|k| ≤ N`; for `k = 0` this is the constant function `u₀`.
pub fn mode_function(spec: &FourierBasisSpec, k: i64, u0: &[f64]) -> Result<Vec<f64>, GalerkinError> {
    spec.check_n(u0.len())?;
    let abs_k = k.unsigned_abs() as usize;
    if abs_k > spec.cutoff {
        return Err(GalerkinError::ModeOutOfRange { k, cutoff: spec.cutoff });
    }
    let mut x = vec![0.0; spec.dim()];
    if k == 0 {
        x[..u0.len()].copy_from_slice(u0);
        return Ok(x);
    }
    let ju0 = SymplecticJ::new(spec.n).apply(u0);
    let sign = k.signum() as f64;
    let (s, c) = (spec.sine_offset(abs_k), spec.cosine_offset(abs_k));
    for a in 0..u0.len() {
        x[c + a] = u0[a];
        x[s + a] = sign * ju0[a];
    }
    Ok(x)
}

/// Precomputed Galerkin matrices at the knots of a family, so the
/// operator along λ is a cheap linear interpolation.
#[derive(Debug, Clone)]
pub struct GalerkinPath {
    spec: FourierBasisSpec,
    quad_points: usize,
    knots: Vec<f64>,
    knot_ops: Vec<SymMatrix>,
}

impl GalerkinPath {
    pub fn new(
        family: &MatrixFamilyPath,
        spec: FourierBasisSpec,
        quad_points: usize,
    ) -> Result<Self, GalerkinError> {
        spec.check_n(family.dim())?;
        let knot_ops = family
            .knots()
            .map(|(_, p)| assemble_for_poly(&spec, p, 0.0, quad_points))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            spec,
            quad_points,
            knots: family.knot_lambdas().to_vec(),
            knot_ops,
        })
    }

    /// Uses the default cutoff and quadrature for the family.
    pub fn with_cutoff(family: &MatrixFamilyPath, cutoff: usize) -> Result<Self, GalerkinError> {
        let spec = FourierBasisSpec::new(family.n(), cutoff)?;
        let quad = spec.default_quad_points(family.max_freq());
        Self::new(family, spec, quad)
    }

    pub fn spec(&self) -> &FourierBasisSpec {
        &self.spec
    }

    pub fn quad_points(&self) -> usize {
        self.quad_points
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    fn segment(&self, lambda: f64, side: Side) -> (usize, f64) {
        let segs = self.knots.len() - 1;
        let j = match side {
            Side::Right => self.knots.partition_point(|&l| l <= lambda),
            Side::Left => self.knots.partition_point(|&l| l < lambda),
        }
        .saturating_sub(1)
        .min(segs - 1);
        let theta = (lambda - self.knots[j]) / (self.knots[j + 1] - self.knots[j]);
        (j, theta)
    }

    /// Unshifted operator at `lambda`, clamped to `[0, 1]`.
    pub fn matrix_at(&self, lambda: f64) -> SymMatrix {
        let lambda = lambda.clamp(0.0, 1.0);
        if let Some(k) = self.knots.iter().position(|&l| l == lambda) {
            return self.knot_ops[k].clone();
        }
        let (j, theta) = self.segment(lambda, Side::Right);
        self.knot_ops[j].lerp(&self.knot_ops[j + 1], theta)
    }

    pub fn derivative_at(&self, lambda: f64, side: Side) -> SymMatrix {
        let (j, _) = self.segment(lambda.clamp(0.0, 1.0), side);
        let width = self.knots[j + 1] - self.knots[j];
        self.knot_ops[j + 1].sub(&self.knot_ops[j]).scaled(1.0 / width)
    }

    pub fn operator_at(&self, lambda: f64, delta: f64) -> GalerkinOperator {
        GalerkinOperator {
            spec: self.spec,
            matrix: self.matrix_at(lambda).shifted(delta),
            lambda,
            delta,
        }
    }
}
