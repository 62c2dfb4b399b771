//! Period map of the linearised system `J u′ + A_λ(t) u = 0`.
//!
//! Written as `X′ = J A_λ(t) X` (using `J⁻¹ = −J`) and integrated with the
//! classical fourth-order Runge–Kutta scheme on a uniform grid. Periodic
//! solutions are the fixed vectors of the monodromy `M = X(2π)`, so
//! `dim ker L_λ = dim ker(M − I)`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::family::{FamilyError, MatrixFamilyPath, TrigMatrixPolynomial};
use crate::linalg::{singular_values, Matrix, SymplecticJ};

pub const DEFAULT_STEPS: usize = 2048;
pub const MIN_STEPS: usize = 64;
pub const MIN_LAMBDA_GRID: usize = 16;
/// Relative tolerance on singular values of `M − I`, scaled by `1 + ‖M‖`.
pub const DEFAULT_KERNEL_RTOL: f64 = 1e-7;
/// Width below which suspect λ-cells are no longer split.
pub const MIN_CELL: f64 = 1e-7;
/// Final refinement width of singular parameter values.
pub const REFINE_WIDTH: f64 = 1e-10;
/// Singular values found closer than this are reported once.
pub const DEDUP_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MonodromyError {
    #[error(transparent)]
    Family(#[from] FamilyError),
    #[error("{got} integration steps is too few, need at least {required}")]
    TooFewSteps { got: usize, required: usize },
    #[error("lambda grid of {got} points is too coarse, need at least {required}")]
    GridTooCoarse { got: usize, required: usize },
    #[error("kernel tolerance must be positive and finite, got {0}")]
    InvalidTolerance(f64),
}

fn rows<S: Serializer>(m: &Matrix, s: S) -> Result<S::Ok, S::Error> {
    m.to_rows().serialize(s)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonodromyResult {
    pub lambda: f64,
    #[serde(serialize_with = "rows")]
    pub monodromy: Matrix,
    /// `‖MᵀJM − J‖_∞`
    pub symplectic_residual: f64,
    pub det_mi: f64,
    pub kernel_dim: usize,
    /// Smallest singular value of `M − I`.
    pub sigma_min: f64,
    pub steps: usize,
}

fn check_steps(steps: usize) -> Result<(), MonodromyError> {
    if steps < MIN_STEPS {
        Err(MonodromyError::TooFewSteps { got: steps, required: MIN_STEPS })
    } else {
        Ok(())
    }
}

/// Fundamental solution at `t = 2π` for a fixed coefficient polynomial.
pub fn fundamental_matrix(poly: &TrigMatrixPolynomial, steps: usize) -> Matrix {
    let dim = poly.dim();
    let j = SymplecticJ::new(poly.n()).matrix();
    let h = 2.0 * PI / steps as f64;
    let rhs = |t: f64| j.matmul(&poly.evaluate(t).to_matrix());
    let mut x = Matrix::identity(dim);
    let mut f0 = rhs(0.0);
    for k in 0..steps {
        let t = k as f64 * h;
        let f_mid = rhs(t + 0.5 * h);
        let f1 = rhs(t + h);
        let k1 = f0.matmul(&x);
        let k2 = f_mid.matmul(&x.axpy(0.5 * h, &k1));
        let k3 = f_mid.matmul(&x.axpy(0.5 * h, &k2));
        let k4 = f1.matmul(&x.axpy(h, &k3));
        x = x
            .axpy(h / 6.0, &k1)
            .axpy(h / 3.0, &k2)
            .axpy(h / 3.0, &k3)
            .axpy(h / 6.0, &k4);
        f0 = f1;
    }
    x
}

pub fn symplectic_residual(m: &Matrix) -> f64 {
    let j = SymplecticJ::for_dim(m.rows()).expect("monodromy has even dimension").matrix();
    m.transpose().matmul(&j).matmul(m).sub(&j).norm_inf()
}

/// Singular values of `M − I` no larger than `rtol·(1 + ‖M‖_∞)`.
pub fn kernel_dim_of(m: &Matrix, rtol: f64) -> (usize, f64) {
    let sv = singular_values(&m.sub(&Matrix::identity(m.rows())));
    let tol = rtol * (1.0 + m.norm_inf());
    (sv.iter().filter(|&&s| s <= tol).count(), sv[0])
}

fn result_for(lambda: f64, monodromy: Matrix, steps: usize, rtol: f64) -> MonodromyResult {
    let (kernel_dim, sigma_min) = kernel_dim_of(&monodromy, rtol);
    MonodromyResult {
        lambda,
        symplectic_residual: symplectic_residual(&monodromy),
        det_mi: monodromy.sub(&Matrix::identity(monodromy.rows())).det(),
        kernel_dim,
        sigma_min,
        steps,
        monodromy,
    }
}

pub fn integrate_fundamental(
    fam: &MatrixFamilyPath,
    lambda: f64,
    steps: usize,
) -> Result<MonodromyResult, MonodromyError> {
    integrate_with_tol(fam, lambda, steps, DEFAULT_KERNEL_RTOL)
}

pub fn integrate_with_tol(
    fam: &MatrixFamilyPath,
    lambda: f64,
    steps: usize,
    rtol: f64,
) -> Result<MonodromyResult, MonodromyError> {
    check_steps(steps)?;
    let poly = fam.polynomial_at(lambda)?;
    Ok(result_for(lambda, fundamental_matrix(&poly, steps), steps, rtol))
}

/// Whether `ker L_λ` is trivial at `λ = 0` and at `λ = 1`.
pub fn endpoint_invertibility(fam: &MatrixFamilyPath, steps: usize) -> Result<(bool, bool), MonodromyError> {
    let at = |l| integrate_fundamental(fam, l, steps).map(|r| r.kernel_dim == 0);
    Ok((at(0.0)?, at(1.0)?))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingularPoint {
    pub lambda: f64,
    pub kernel_dim: usize,
    pub sigma_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonodromyScan {
    pub points: Vec<SingularPoint>,
    /// Suspect regions where no kernel could be confirmed although
    /// `det(M − I)` changes sign.
    pub unresolved: Vec<(f64, f64)>,
    pub lambda_grid: usize,
    pub steps: usize,
    /// Largest symplecticity residual seen on the grid.
    pub max_symplectic_residual: f64,
}

#[derive(Clone)]
struct Sample {
    lambda: f64,
    m: Matrix,
    sigma: f64,
    det: f64,
}

/// Singular parameter values of the family, with kernel dimensions.
///
/// Cells of a uniform grid are split while `σ(a) + σ(b) ≤ 2‖M(b) − M(a)‖_F`
/// (the chord estimate of how far `σ_min(M − I)` can dip) or `det(M − I)`
/// changes sign. Each remaining cluster is refined by bisection on the
/// determinant sign or golden-section search on `σ_min`.
pub fn scan_lambda(
    fam: &MatrixFamilyPath,
    lambda_grid: usize,
    steps: usize,
    rtol: f64,
) -> Result<MonodromyScan, MonodromyError> {
    check_steps(steps)?;
    if lambda_grid < MIN_LAMBDA_GRID {
        return Err(MonodromyError::GridTooCoarse { got: lambda_grid, required: MIN_LAMBDA_GRID });
    }
    if !(rtol > 0.0 && rtol.is_finite()) {
        return Err(MonodromyError::InvalidTolerance(rtol));
    }
    let sample = |lambda: f64| -> Sample {
        let poly = fam.polynomial_at(lambda).expect("lambda in [0, 1]");
        let m = fundamental_matrix(&poly, steps);
        let sigma = singular_values(&m.sub(&Matrix::identity(m.rows())))[0];
        let det = m.sub(&Matrix::identity(m.rows())).det();
        Sample { lambda, m, sigma, det }
    };
    let grid: Vec<Sample> = (0..=lambda_grid)
        .into_par_iter()
        .map(|i| sample(i as f64 / lambda_grid as f64))
        .collect();
    let max_symplectic_residual = grid.iter().map(|s| symplectic_residual(&s.m)).fold(0.0, f64::max);

    let suspect = |a: &Sample, b: &Sample| {
        a.det.signum() != b.det.signum() || a.sigma + b.sigma <= 2.0 * b.m.sub(&a.m).norm_frobenius()
    };
    // Leaves of the subdivision, in λ order per cell.
    let leaves: Vec<Vec<(Sample, Sample)>> = (0..lambda_grid)
        .into_par_iter()
        .map(|i| {
            let mut out = Vec::new();
            let mut stack = vec![(grid[i].clone(), grid[i + 1].clone())];
            while let Some((a, b)) = stack.pop() {
                if !suspect(&a, &b) {
                    continue;
                }
                if b.lambda - a.lambda <= MIN_CELL {
                    out.push((a, b));
                    continue;
                }
                let mid = sample(0.5 * (a.lambda + b.lambda));
                stack.push((mid.clone(), b));
                stack.push((a, mid));
            }
            out
        })
        .collect();
    let mut leaves: Vec<(Sample, Sample)> = leaves.into_iter().flatten().collect();
    leaves.sort_by(|x, y| x.0.lambda.total_cmp(&y.0.lambda));

    // Group touching leaves into clusters.
    let mut clusters: Vec<(Sample, Sample)> = Vec::new();
    for (a, b) in leaves {
        match clusters.last_mut() {
            Some(last) if a.lambda <= last.1.lambda => last.1 = b,
            _ => clusters.push((a, b)),
        }
    }

    let tol_of = |m: &Matrix| rtol * (1.0 + m.norm_inf());
    let refined: Vec<(Option<SingularPoint>, Option<(f64, f64)>)> = clusters
        .par_iter()
        .map(|(a, b)| {
            let lambda = if a.det.signum() != b.det.signum() {
                let (mut lo, mut hi, mut det_lo) = (a.lambda, b.lambda, a.det);
                while hi - lo > REFINE_WIDTH {
                    let mid = 0.5 * (lo + hi);
                    let s = sample(mid);
                    if s.det.signum() == det_lo.signum() {
                        lo = mid;
                        det_lo = s.det;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            } else {
                golden_min(|l| sample(l).sigma, a.lambda, b.lambda)
            };
            let s = sample(lambda);
            let (dim, sigma_min) = kernel_dim_of(&s.m, rtol);
            if dim > 0 {
                (Some(SingularPoint { lambda, kernel_dim: dim, sigma_min }), None)
            } else if a.det.signum() != b.det.signum() && s.sigma > tol_of(&s.m) {
                (None, Some((a.lambda, b.lambda)))
            } else {
                (None, None)
            }
        })
        .collect();

    let mut points: Vec<SingularPoint> = Vec::new();
    let mut unresolved = Vec::new();
    let mut push = |p: SingularPoint| match points.last_mut() {
        Some(last) if p.lambda - last.lambda <= DEDUP_TOL => {
            if p.sigma_min < last.sigma_min {
                *last = p;
            }
        }
        _ => points.push(p),
    };
    if grid[0].sigma <= tol_of(&grid[0].m) {
        push(SingularPoint { lambda: 0.0, kernel_dim: kernel_dim_of(&grid[0].m, rtol).0, sigma_min: grid[0].sigma });
    }
    for (p, u) in refined {
        if let Some(p) = p {
            push(p);
        }
        unresolved.extend(u);
    }
    let last = &grid[lambda_grid];
    if last.sigma <= tol_of(&last.m) {
        push(SingularPoint { lambda: 1.0, kernel_dim: kernel_dim_of(&last.m, rtol).0, sigma_min: last.sigma });
    }
    Ok(MonodromyScan { points, unresolved, lambda_grid, steps, max_symplectic_residual })
}

fn golden_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > REFINE_WIDTH {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        x1
    } else {
        x2
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{exp_cj, SymMatrix};

    fn scalar(c: f64) -> MatrixFamilyPath {
        MatrixFamilyPath::scalar_affine(1, c, c)
    }

    #[test]
    fn rotation_examples() {
        let r = integrate_fundamental(&scalar(1.0), 0.0, DEFAULT_STEPS).unwrap();
        assert!(r.monodromy.sub(&Matrix::identity(2)).norm_inf() <= 1e-8);
        assert_eq!(r.kernel_dim, 2);
        let r = integrate_fundamental(&scalar(0.5), 0.0, DEFAULT_STEPS).unwrap();
        assert!(r.monodromy.add(&Matrix::identity(2)).norm_inf() <= 1e-8);
        assert!((r.det_mi - 4.0).abs() < 1e-8);
        assert_eq!(r.kernel_dim, 0);
        let r = integrate_fundamental(&scalar(0.0), 0.0, DEFAULT_STEPS).unwrap();
        assert_eq!(r.monodromy, Matrix::identity(2));
        assert_eq!(r.kernel_dim, 2);
        let fam = MatrixFamilyPath::scalar_affine(2, 0.5, 0.5);
        let r = integrate_fundamental(&fam, 0.3, DEFAULT_STEPS).unwrap();
        assert!((r.det_mi - 16.0).abs() < 1e-7);
    }

    #[test]
    fn constant_coefficients_match_closed_form() {
        for &c in &[-1.3, 0.27, 2.6] {
            let r = integrate_fundamental(&scalar(c), 0.0, DEFAULT_STEPS).unwrap();
            let exact = exp_cj(c, 2.0 * PI, 1);
            assert!(r.monodromy.sub(&exact).norm_inf() <= 1e-9, "c = {c}");
        }
    }

    #[test]
    fn too_few_steps() {
        assert_eq!(
            integrate_fundamental(&scalar(0.5), 0.0, 63),
            Err(MonodromyError::TooFewSteps { got: 63, required: 64 })
        );
    }

    #[test]
    fn endpoints() {
        assert_eq!(endpoint_invertibility(&MatrixFamilyPath::scalar_affine(1, -0.5, 1.5), 512).unwrap(), (true, true));
        assert_eq!(endpoint_invertibility(&MatrixFamilyPath::scalar_affine(1, 0.0, 1.0), 512).unwrap(), (false, false));
        assert_eq!(endpoint_invertibility(&scalar(0.5), 512).unwrap(), (true, true));
    }

    #[test]
    fn scan_of_scalar_families() {
        let s = scan_lambda(&MatrixFamilyPath::scalar_affine(1, -0.5, 1.5), 32, 512, DEFAULT_KERNEL_RTOL).unwrap();
        let got: Vec<(f64, usize)> = s.points.iter().map(|p| (p.lambda, p.kernel_dim)).collect();
        assert_eq!(got.len(), 2, "{got:?}");
        assert!((got[0].0 - 0.25).abs() < 1e-8 && (got[1].0 - 0.75).abs() < 1e-8);
        assert!(got.iter().all(|g| g.1 == 2));

        let s = scan_lambda(&MatrixFamilyPath::scalar_affine(1, -0.5, 3.5), 32, DEFAULT_STEPS, DEFAULT_KERNEL_RTOL).unwrap();
        let expected = [0.125, 0.375, 0.625, 0.875];
        assert_eq!(s.points.len(), 4);
        for (p, e) in s.points.iter().zip(expected) {
            assert!((p.lambda - e).abs() < 1e-8, "{} vs {e}", p.lambda);
            assert_eq!(p.kernel_dim, 2);
        }
        assert!(scan_lambda(&scalar(0.5), 32, 256, DEFAULT_KERNEL_RTOL).unwrap().points.is_empty());
        let s = scan_lambda(&MatrixFamilyPath::scalar_affine(1, 0.0, 1.0), 16, 256, DEFAULT_KERNEL_RTOL).unwrap();
        assert_eq!(s.points.iter().map(|p| p.lambda).collect::<Vec<_>>(), vec![0.0, 1.0]);
    }

    #[test]
    fn simple_kernel_is_found_by_sign_change() {
        // diag(c₁, c₂) ⊕ diag(c₁, c₂): only the first pair crosses an integer.
        let a = |c: f64| SymMatrix::diagonal(&[c, 0.4, c, 0.4]);
        let fam = MatrixFamilyPath::constant_affine(&a(0.6), &a(1.3)).unwrap();
        let s = scan_lambda(&fam, 16, 512, DEFAULT_KERNEL_RTOL).unwrap();
        assert_eq!(s.points.len(), 1);
        assert!((s.points[0].lambda - 4.0 / 7.0).abs() < 1e-8);
        assert_eq!(s.points[0].kernel_dim, 2);
    }

    #[test]
    fn step_halving_order() {
        let p = TrigMatrixPolynomial::new(
            vec![
                SymMatrix::from_rows(&[vec![0.7, 0.2], vec![0.2, 0.4]]).unwrap(),
                SymMatrix::from_rows(&[vec![0.3, -0.1], vec![-0.1, 0.5]]).unwrap(),
            ],
            vec![SymMatrix::from_rows(&[vec![0.2, 0.3], vec![0.3, -0.4]]).unwrap()],
        )
        .unwrap();
        let m1 = fundamental_matrix(&p, 64);
        let m2 = fundamental_matrix(&p, 128);
        let m3 = fundamental_matrix(&p, 256);
        let order = (m1.sub(&m2).norm_inf() / m2.sub(&m3).norm_inf()).log2();
        assert!(order >= 3.7, "observed order {order}");
        let m = fundamental_matrix(&p, DEFAULT_STEPS);
        assert!(symplectic_residual(&m) <= 1e-8);
        assert!((m.det() - 1.0).abs() <= 1e-8);
    }
}
