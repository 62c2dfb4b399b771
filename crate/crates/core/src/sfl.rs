//! Spectral flow of paths of symmetric operators.
//!
//! Crossings are located from changes of the Morse count on a λ-grid
//! (refined by bisection) and from near-zero minima of the smallest
//! eigenvalue modulus (refined by golden-section search). Each crossing
//! contributes through its crossing form `Γ = ⟨L̇ u, u⟩` on the kernel.
//! When a crossing is degenerate the whole path is shifted by a small
//! random `δ·I` and recomputed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::family::Side;
use crate::galerkin::{GalerkinPath, DEFAULT_KERNEL_TOL};
use crate::linalg::{eig_sym, eigvals_sym, morse_index_of, LinalgError, SymMatrix};

pub const MIN_LAMBDA_GRID: usize = 16;
/// Bracket width at which crossing refinement stops.
pub const REFINE_WIDTH: f64 = 1e-10;
/// Relative width below which suspect cells are no longer subdivided.
pub const MIN_CELL: f64 = 1e-6;
/// Crossings closer than this are merged.
pub const MERGE_TOL: f64 = 1e-8;
pub const MAX_RETRIES: usize = 5;
/// Relative tolerance separating zero from nonzero crossing-form eigenvalues.
pub const FORM_TOL: f64 = 1e-8;
/// Agreement required between analytic and finite-difference forms.
pub const FD_AGREEMENT: f64 = 1e-6;
pub const DEFAULT_FD_STEP: f64 = 1e-5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SflError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("lambda grid of {got} points is too coarse, need at least {required}")]
    GridTooCoarse { got: usize, required: usize },
    #[error("kernel tolerance must be positive and finite, got {0}")]
    InvalidTolerance(f64),
    #[error("interval [{a}, {b}] is not a nondegenerate subinterval of the path domain")]
    InvalidInterval { a: f64, b: f64 },
    #[error("operator is singular at the endpoint lambda = {lambda} (smallest |eigenvalue| {min_abs:e})")]
    EndpointSingular { lambda: f64, min_abs: f64 },
    #[error("unresolved crossing cluster near lambda = {lambda}: Morse count jumps by {jump} but kernel has dimension {kernel_dim}; use a finer grid or a different delta")]
    UnresolvedCluster { lambda: f64, jump: usize, kernel_dim: usize },
    #[error("analytic and finite-difference crossing forms disagree by {discrepancy:e} at lambda = {lambda}")]
    DerivativeMismatch { lambda: f64, discrepancy: f64 },
    #[error("degenerate crossing with fixed delta = {delta:e}")]
    Irregular { delta: f64 },
    #[error("no regular perturbation found after {attempts} attempts")]
    RetriesExhausted { attempts: usize },
}

/// A path `λ ↦ L_λ` of symmetric matrices, piecewise smooth between knots.
pub trait OperatorPath: Sync {
    fn dim(&self) -> usize;
    fn operator(&self, lambda: f64) -> SymMatrix;
    /// One-sided λ-derivative; sides only differ at knots.
    fn derivative(&self, lambda: f64, side: Side) -> SymMatrix;
    /// Parameter values where the derivative may jump, including both ends of the domain.
    fn knots(&self) -> &[f64];

    fn cutoff(&self) -> Option<usize> {
        None
    }

    fn domain(&self) -> (f64, f64) {
        let k = self.knots();
        (k[0], k[k.len() - 1])
    }

    /// Bound on `‖L̇‖₂`, hence on the Lipschitz constant of every eigenvalue.
    fn lipschitz_bound(&self) -> f64 {
        self.knots()
            .windows(2)
            .map(|w| {
                let e = eigvals_sym(&self.derivative(0.5 * (w[0] + w[1]), Side::Right)).expect("finite derivative");
                e[0].abs().max(e[e.len() - 1].abs())
            })
            .fold(0.0, f64::max)
    }
}

impl OperatorPath for GalerkinPath {
    fn dim(&self) -> usize {
        self.spec().dim()
    }

    fn operator(&self, lambda: f64) -> SymMatrix {
        self.matrix_at(lambda)
    }

    fn derivative(&self, lambda: f64, side: Side) -> SymMatrix {
        self.derivative_at(lambda, side)
    }

    fn knots(&self) -> &[f64] {
        GalerkinPath::knots(self)
    }

    fn cutoff(&self) -> Option<usize> {
        Some(self.spec().cutoff)
    }
}

/// Piecewise-linear path through symmetric matrices.
#[derive(Debug, Clone)]
pub struct MatrixPath {
    knots: Vec<f64>,
    mats: Vec<SymMatrix>,
}

impl MatrixPath {
    pub fn new(knots: Vec<(f64, SymMatrix)>) -> Result<Self, SflError> {
        if knots.len() < 2 {
            return Err(SflError::InvalidInterval { a: f64::NAN, b: f64::NAN });
        }
        for w in knots.windows(2) {
            if !(w[0].0 < w[1].0) {
                return Err(SflError::InvalidInterval { a: w[0].0, b: w[1].0 });
            }
            if w[0].1.dim() != w[1].1.dim() {
                return Err(LinalgError::DimensionMismatch { left: w[0].1.dim(), right: w[1].1.dim() }.into());
            }
        }
        let (knots, mats) = knots.into_iter().unzip();
        Ok(Self { knots, mats })
    }

    pub fn linear(start: SymMatrix, end: SymMatrix) -> Result<Self, SflError> {
        Self::new(vec![(0.0, start), (1.0, end)])
    }

    pub fn reversed(&self) -> Self {
        let (a, b) = self.domain();
        Self {
            knots: self.knots.iter().rev().map(|l| a + b - l).collect(),
            mats: self.mats.iter().rev().cloned().collect(),
        }
    }

    fn segment(&self, lambda: f64, side: Side) -> (usize, f64) {
        let segs = self.knots.len() - 1;
        let j = match side {
            Side::Right => self.knots.partition_point(|&l| l <= lambda),
            Side::Left => self.knots.partition_point(|&l| l < lambda),
        }
        .saturating_sub(1)
        .min(segs - 1);
        (j, (lambda - self.knots[j]) / (self.knots[j + 1] - self.knots[j]))
    }
}

impl OperatorPath for MatrixPath {
    fn dim(&self) -> usize {
        self.mats[0].dim()
    }

    fn operator(&self, lambda: f64) -> SymMatrix {
        let (a, b) = self.domain();
        let lambda = lambda.clamp(a, b);
        if let Some(k) = self.knots.iter().position(|&l| l == lambda) {
            return self.mats[k].clone();
        }
        let (j, theta) = self.segment(lambda, Side::Right);
        self.mats[j].lerp(&self.mats[j + 1], theta)
    }

    fn derivative(&self, lambda: f64, side: Side) -> SymMatrix {
        let (a, b) = self.domain();
        let (j, _) = self.segment(lambda.clamp(a, b), side);
        let width = self.knots[j + 1] - self.knots[j];
        self.mats[j + 1].sub(&self.mats[j]).scaled(1.0 / width)
    }

    fn knots(&self) -> &[f64] {
        &self.knots
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DeltaPolicy {
    /// Try `δ = 0`, then up to five seeded draws from `[10·tol, 100·tol]`.
    Auto,
    /// Use exactly this shift, without retries.
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SflOptions {
    pub lambda_grid: usize,
    pub tol_kernel: f64,
    pub delta: DeltaPolicy,
    pub seed: u64,
    /// Subinterval `[a, b]` of the path domain; the whole domain if `None`.
    pub interval: Option<(f64, f64)>,
}

impl Default for SflOptions {
    fn default() -> Self {
        Self {
            lambda_grid: 64,
            tol_kernel: DEFAULT_KERNEL_TOL,
            delta: DeltaPolicy::Auto,
            seed: 0,
            interval: None,
        }
    }
}

impl SflOptions {
    pub fn with_grid(lambda_grid: usize) -> Self {
        Self { lambda_grid, ..Self::default() }
    }

    pub fn on_interval(mut self, a: f64, b: f64) -> Self {
        self.interval = Some((a, b));
        self
    }

    fn validate(&self, path: &impl OperatorPath) -> Result<(f64, f64), SflError> {
        if self.lambda_grid < MIN_LAMBDA_GRID {
            return Err(SflError::GridTooCoarse { got: self.lambda_grid, required: MIN_LAMBDA_GRID });
        }
        if !(self.tol_kernel > 0.0 && self.tol_kernel.is_finite()) {
            return Err(SflError::InvalidTolerance(self.tol_kernel));
        }
        let (lo, hi) = path.domain();
        let (a, b) = self.interval.unwrap_or((lo, hi));
        if !(a < b && a >= lo && b <= hi) {
            return Err(SflError::InvalidInterval { a, b });
        }
        Ok((a, b))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CrossingPosition {
    Start,
    Interior,
    End,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Crossing {
    pub lambda: f64,
    pub kernel_dim: usize,
    /// Form of the right derivative (left derivative at the end of the interval).
    pub form_matrix: SymMatrix,
    /// Form of the left derivative, when it differs at a knot.
    pub left_form: Option<SymMatrix>,
    pub signature: i64,
    pub regular: bool,
    pub position: CrossingPosition,
    /// Contribution to the spectral flow.
    pub contribution: i64,
    /// Whether the finite-difference comparison was carried out.
    pub fd_checked: bool,
}

impl Crossing {
    pub fn is_positive_definite(&self) -> bool {
        let pd = |f: &SymMatrix| form_inertia(f).0 == f.dim();
        pd(&self.form_matrix) && self.left_form.as_ref().is_none_or(pd)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SflResult {
    pub value: i64,
    pub crossings: Vec<Crossing>,
    pub delta_used: f64,
    pub cutoff: Option<usize>,
    pub dim: usize,
    pub lambda_grid: usize,
    pub all_regular: bool,
    pub seed: u64,
    pub attempts: usize,
    pub interval: (f64, f64),
    /// Morse indices of the shifted endpoint operators, kernels excluded.
    pub morse_start: usize,
    pub morse_end: usize,
}

/// Crossing form on a kernel, with both one-sided versions at knots.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossingForm {
    pub right: SymMatrix,
    pub left: SymMatrix,
    /// Central difference form, if the stencil avoids knots.
    pub finite_difference: Option<SymMatrix>,
    pub signature: i64,
}

/// `(#positive, #negative, #near-zero)` eigenvalues of a crossing form.
fn form_inertia(form: &SymMatrix) -> (usize, usize, usize) {
    let eigs = eigvals_sym(form).expect("crossing forms are finite");
    let tol = FORM_TOL * form.norm_inf().max(1.0);
    let pos = eigs.iter().filter(|&&e| e > tol).count();
    let neg = eigs.iter().filter(|&&e| e < -tol).count();
    (pos, neg, eigs.len() - pos - neg)
}

fn signature_of(form: &SymMatrix) -> i64 {
    let (p, m, _) = form_inertia(form);
    p as i64 - m as i64
}

/// `Γ[i][j] = ⟨L̇ k_i, k_j⟩` with the analytic derivative, checked against a
/// central difference of step `d_lambda` when no knot lies in the stencil.
pub fn crossing_form(
    path: &impl OperatorPath,
    lambda: f64,
    kernel: &[Vec<f64>],
    d_lambda: f64,
) -> Result<CrossingForm, SflError> {
    assert!(!kernel.is_empty(), "crossing form needs a nonempty kernel");
    let right = path.derivative(lambda, Side::Right).restrict_to(kernel);
    let left = path.derivative(lambda, Side::Left).restrict_to(kernel);
    let (lo, hi) = path.domain();
    let (a, b) = (lambda - d_lambda, lambda + d_lambda);
    let clear = a >= lo && b <= hi && !path.knots().iter().any(|&k| k > a && k < b);
    let finite_difference = if clear {
        let fd = path.operator(b).sub(&path.operator(a)).scaled(0.5 / d_lambda).restrict_to(kernel);
        let discrepancy = fd.sub(&right).as_slice().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if discrepancy > FD_AGREEMENT * (1.0 + right.norm_inf()) {
            return Err(SflError::DerivativeMismatch { lambda, discrepancy });
        }
        Some(fd)
    } else {
        None
    };
    let signature = signature_of(&right);
    Ok(CrossingForm { right, left, finite_difference, signature })
}

struct Scan {
    lambdas: Vec<f64>,
    morse: Vec<usize>,
    min_abs: Vec<f64>,
}

fn shifted_eigvals(path: &impl OperatorPath, lambda: f64, delta: f64) -> Vec<f64> {
    eigvals_sym(&path.operator(lambda).shifted(delta)).expect("path operators are finite")
}

fn morse_at(path: &impl OperatorPath, lambda: f64, delta: f64) -> usize {
    morse_index_of(&shifted_eigvals(path, lambda, delta), 0.0)
}

fn min_abs_at(path: &impl OperatorPath, lambda: f64, delta: f64) -> f64 {
    shifted_eigvals(path, lambda, delta).iter().fold(f64::INFINITY, |m, e| m.min(e.abs()))
}

fn scan(path: &impl OperatorPath, a: f64, b: f64, grid: usize, delta: f64) -> Scan {
    let lambdas: Vec<f64> = (0..=grid)
        .map(|i| if i == grid { b } else { a + (b - a) * i as f64 / grid as f64 })
        .collect();
    let spectra: Vec<Vec<f64>> = lambdas.par_iter().map(|&l| shifted_eigvals(path, l, delta)).collect();
    let morse = spectra.iter().map(|e| morse_index_of(e, 0.0)).collect();
    let min_abs = spectra
        .iter()
        .map(|e| e.iter().fold(f64::INFINITY, |m, x| m.min(x.abs())))
        .collect();
    Scan { lambdas, morse, min_abs }
}

fn bisect_jumps(
    path: &impl OperatorPath,
    delta: f64,
    (lo, hi): (f64, f64),
    (m_lo, m_hi): (usize, usize),
    out: &mut Vec<f64>,
) {
    if hi - lo <= REFINE_WIDTH {
        out.push(0.5 * (lo + hi));
        return;
    }
    let mid = 0.5 * (lo + hi);
    let m_mid = morse_at(path, mid, delta);
    if m_mid != m_lo {
        bisect_jumps(path, delta, (lo, mid), (m_lo, m_mid), out);
    }
    if m_mid != m_hi {
        bisect_jumps(path, delta, (mid, hi), (m_mid, m_hi), out);
    }
}

fn golden_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
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
    let (fl, fh) = (f(lo), f(hi));
    [(x1, f1), (x2, f2), (lo, fl), (hi, fh)]
        .into_iter()
        .min_by(|p, q| p.1.total_cmp(&q.1))
        .unwrap()
}

/// Refined candidate crossing locations in `[a, b]` for the shifted path.
///
/// A cell can only contain a zero eigenvalue if the two endpoint values of
/// `min |μ|` sum to at most `L·width`; such cells are split down to
/// `MIN_CELL`, then resolved by bisection on the Morse count or by a
/// golden-section search on `min |μ|`.
fn candidates(path: &impl OperatorPath, a: f64, b: f64, grid: usize, delta: f64, tol: f64) -> Vec<f64> {
    let s = scan(path, a, b, grid, delta);
    let lip = path.lipschitz_bound();
    let min_width = MIN_CELL * (b - a);
    let eval = |l: f64| {
        let e = shifted_eigvals(path, l, delta);
        (morse_index_of(&e, 0.0), e.iter().fold(f64::INFINITY, |m, x| m.min(x.abs())))
    };
    let cells: Vec<usize> = (0..grid).collect();
    let mut found: Vec<(f64, bool)> = cells
        .par_iter()
        .flat_map_iter(|&i| {
            let mut out = Vec::new();
            let mut stack = vec![((s.lambdas[i], s.morse[i], s.min_abs[i]), (s.lambdas[i + 1], s.morse[i + 1], s.min_abs[i + 1]))];
            while let Some(((l0, m0, f0), (l1, m1, f1))) = stack.pop() {
                let width = l1 - l0;
                let suspect = m0 != m1 || f0 + f1 <= lip * width + 2.0 * tol;
                if !suspect {
                    continue;
                }
                if width > min_width {
                    let mid = 0.5 * (l0 + l1);
                    let (mm, fm) = eval(mid);
                    stack.push(((l0, m0, f0), (mid, mm, fm)));
                    stack.push(((mid, mm, fm), (l1, m1, f1)));
                } else if m0 != m1 {
                    let mut jumps = Vec::new();
                    bisect_jumps(path, delta, (l0, l1), (m0, m1), &mut jumps);
                    out.extend(jumps.into_iter().map(|x| (x, true)));
                } else {
                    let (x, fx) = golden_min(|l| eval(l).1, l0, l1);
                    if fx <= tol {
                        out.push((x, false));
                    }
                }
            }
            out
        })
        .collect();
    for (i, &l) in s.lambdas.iter().enumerate() {
        if s.min_abs[i] <= tol {
            found.push((l, false));
        }
    }
    snap_and_merge(found, path.knots(), a, b, 2.0 * min_width)
}

/// Merges candidates. Bisection results (`exact`) are kept to
/// `MERGE_TOL`; minimiser and grid hits are only accurate to about
/// `tol / |μ'|`, so they are dropped within `radius` of an earlier pick.
fn snap_and_merge(mut found: Vec<(f64, bool)>, knots: &[f64], a: f64, b: f64, radius: f64) -> Vec<f64> {
    for (l, exact) in found.iter_mut() {
        if let Some(&k) = knots.iter().chain([a, b].iter()).find(|&&k| (k - *l).abs() <= MERGE_TOL) {
            *l = k;
            *exact = true;
        }
    }
    found.sort_by(|p, q| q.1.cmp(&p.1).then(p.0.total_cmp(&q.0)));
    let mut merged: Vec<f64> = Vec::new();
    for (l, exact) in found {
        let r = if exact { MERGE_TOL } else { radius.max(MERGE_TOL) };
        if merged.iter().all(|&m| (m - l).abs() > r) {
            merged.push(l);
        }
    }
    merged.sort_by(f64::total_cmp);
    merged
}

/// Candidate crossings of the unshifted path on its whole domain,
/// endpoints included.
pub fn detect_crossings(path: &impl OperatorPath, lambda_grid: usize, tol_kernel: f64) -> Result<Vec<f64>, SflError> {
    let opts = SflOptions { lambda_grid, tol_kernel, ..SflOptions::default() };
    let (a, b) = opts.validate(path)?;
    Ok(candidates(path, a, b, lambda_grid, 0.0, tol_kernel))
}

fn build_crossing(
    path: &impl OperatorPath,
    lambda: f64,
    (a, b): (f64, f64),
    delta: f64,
    tol: f64,
) -> Result<Option<Crossing>, SflError> {
    let op = path.operator(lambda).shifted(delta);
    let eig = eig_sym(&op)?;
    let kernel: Vec<Vec<f64>> = (0..eig.eigenvalues.len())
        .filter(|&k| eig.eigenvalues[k].abs() <= tol)
        .map(|k| eig.eigenvector(k))
        .collect();
    let eta = 10.0 * REFINE_WIDTH;
    let jump = if lambda > a && lambda < b {
        morse_at(path, (lambda - eta).max(a), delta).abs_diff(morse_at(path, (lambda + eta).min(b), delta))
    } else {
        0
    };
    if kernel.len() < jump {
        return Err(SflError::UnresolvedCluster { lambda, jump, kernel_dim: kernel.len() });
    }
    if kernel.is_empty() {
        return Ok(None);
    }
    let form = crossing_form(path, lambda, &kernel, DEFAULT_FD_STEP)?;
    let position = if lambda <= a {
        CrossingPosition::Start
    } else if lambda >= b {
        CrossingPosition::End
    } else {
        CrossingPosition::Interior
    };
    let (rp, rm, r0) = form_inertia(&form.right);
    let (lp, lm, l0) = form_inertia(&form.left);
    let (contribution, regular) = match position {
        CrossingPosition::Start => (-(rm as i64), r0 == 0),
        CrossingPosition::End => (lp as i64, l0 == 0),
        CrossingPosition::Interior => (lp as i64 - rm as i64, r0 == 0 && l0 == 0),
    };
    let sides_differ = form.left.sub(&form.right).norm_inf() > FORM_TOL * (1.0 + form.right.norm_inf());
    let (form_matrix, left_form) = match position {
        CrossingPosition::End => (form.left, None),
        CrossingPosition::Start => (form.right, None),
        CrossingPosition::Interior => (form.right, sides_differ.then_some(form.left)),
    };
    let signature = match position {
        CrossingPosition::End => lp as i64 - lm as i64,
        _ => rp as i64 - rm as i64,
    };
    Ok(Some(Crossing {
        lambda,
        kernel_dim: kernel.len(),
        form_matrix,
        left_form,
        signature,
        regular,
        position,
        contribution,
        fd_checked: form.finite_difference.is_some(),
    }))
}

enum Attempt {
    Done(SflResult),
    Irregular,
}

fn attempt(
    path: &impl OperatorPath,
    opts: &SflOptions,
    (a, b): (f64, f64),
    delta: f64,
    attempts: usize,
) -> Result<Attempt, SflError> {
    let tol = opts.tol_kernel;
    let locs = candidates(path, a, b, opts.lambda_grid, delta, tol);
    let built: Vec<Result<Option<Crossing>, SflError>> =
        locs.par_iter().map(|&l| build_crossing(path, l, (a, b), delta, tol)).collect();
    let mut crossings = Vec::new();
    for c in built {
        match c {
            Ok(Some(c)) => crossings.push(c),
            Ok(None) => {}
            Err(SflError::UnresolvedCluster { .. }) if matches!(opts.delta, DeltaPolicy::Auto) => {
                return Ok(Attempt::Irregular)
            }
            Err(e) => return Err(e),
        }
    }
    let morse_tol = |l: f64| morse_index_of(&shifted_eigvals(path, l, delta), tol);
    let (morse_start, morse_end) = (morse_tol(a), morse_tol(b));
    let value: i64 = crossings.iter().map(|c| c.contribution).sum();
    let all_regular = crossings.iter().all(|c| c.regular);
    if !all_regular || value != morse_start as i64 - morse_end as i64 {
        return Ok(Attempt::Irregular);
    }
    Ok(Attempt::Done(SflResult {
        value,
        crossings,
        delta_used: delta,
        cutoff: path.cutoff(),
        dim: path.dim(),
        lambda_grid: opts.lambda_grid,
        all_regular,
        seed: opts.seed,
        attempts,
        interval: (a, b),
        morse_start,
        morse_end,
    }))
}

fn run(path: &impl OperatorPath, opts: &SflOptions, bounds: (f64, f64)) -> Result<SflResult, SflError> {
    match opts.delta {
        DeltaPolicy::Fixed(delta) => match attempt(path, opts, bounds, delta, 1)? {
            Attempt::Done(r) => Ok(r),
            Attempt::Irregular => Err(SflError::Irregular { delta }),
        },
        DeltaPolicy::Auto => {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            let tol = opts.tol_kernel;
            for k in 0..=MAX_RETRIES {
                let delta = if k == 0 { 0.0 } else { rng.gen_range(10.0 * tol..=100.0 * tol) };
                if let Attempt::Done(r) = attempt(path, opts, bounds, delta, k + 1)? {
                    return Ok(r);
                }
            }
            Err(SflError::RetriesExhausted { attempts: MAX_RETRIES + 1 })
        }
    }
}

/// Spectral flow over `[a, b]`, counting eigenvalues that cross from
/// negative to positive. Both endpoints must be invertible.
pub fn spectral_flow(path: &impl OperatorPath, opts: &SflOptions) -> Result<SflResult, SflError> {
    let (a, b) = opts.validate(path)?;
    for l in [a, b] {
        let min_abs = min_abs_at(path, l, 0.0);
        if min_abs <= opts.tol_kernel {
            return Err(SflError::EndpointSingular { lambda: l, min_abs });
        }
    }
    run(path, opts, (a, b))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossingSum {
    pub value: i64,
    /// False when some form was not positive definite and the full
    /// spectral flow was computed instead.
    pub fast_path: bool,
    pub result: SflResult,
}

/// `Σ dim ker` over crossings in `(a, b]` for paths whose crossing forms are
/// all positive definite; falls back to [`spectral_flow`] otherwise.
pub fn crossing_sum_positive(path: &impl OperatorPath, opts: &SflOptions) -> Result<CrossingSum, SflError> {
    let bounds = opts.validate(path)?;
    if let Ok(result) = run(path, opts, bounds) {
        if result.crossings.iter().all(Crossing::is_positive_definite) {
            let value = result
                .crossings
                .iter()
                .filter(|c| c.position != CrossingPosition::Start)
                .map(|c| c.kernel_dim as i64)
                .sum();
            return Ok(CrossingSum { value, fast_path: true, result });
        }
    }
    let result = spectral_flow(path, opts)?;
    Ok(CrossingSum { value: result.value, fast_path: false, result })
}

/// `morse(L_a + δ) − morse(L_b + δ)`, the spectral flow of a finite path
/// with invertible shifted endpoints.
pub fn morse_difference(path: &impl OperatorPath, a: f64, b: f64, delta: f64) -> i64 {
    morse_at(path, a, delta) as i64 - morse_at(path, b, delta) as i64
}

/// Full sorted spectra on a uniform grid over the path domain.
pub fn eigenvalue_traces(path: &impl OperatorPath, lambda_grid: usize, delta: f64) -> Vec<(f64, Vec<f64>)> {
    let (a, b) = path.domain();
    let s: Vec<f64> = (0..=lambda_grid).map(|i| a + (b - a) * i as f64 / lambda_grid as f64).collect();
    s.par_iter().map(|&l| (l, shifted_eigvals(path, l, delta))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::MatrixFamilyPath;
    use crate::galerkin::FourierBasisSpec;
    use proptest::prelude::*;

    fn scalar_path(c0: f64, c1: f64, cutoff: usize) -> GalerkinPath {
        GalerkinPath::with_cutoff(&MatrixFamilyPath::scalar_affine(1, c0, c1), cutoff).unwrap()
    }

    #[test]
    fn constant_path_has_no_crossings() {
        let p = scalar_path(0.3, 0.3, 6);
        assert!(detect_crossings(&p, 32, 1e-7).unwrap().is_empty());
        let r = spectral_flow(&p, &SflOptions::with_grid(32)).unwrap();
        assert_eq!(r.value, 0);
        assert!(r.crossings.is_empty());
    }

    #[test]
    fn increasing_scalar_path() {
        let p = scalar_path(-0.5, 1.5, 8);
        let locs = detect_crossings(&p, 64, 1e-7).unwrap();
        assert_eq!(locs.len(), 2);
        assert!((locs[0] - 0.25).abs() < 1e-6 && (locs[1] - 0.75).abs() < 1e-6);
        let r = spectral_flow(&p, &SflOptions::with_grid(64)).unwrap();
        assert_eq!(r.value, 4);
        assert_eq!(r.delta_used, 0.0);
        for c in &r.crossings {
            assert_eq!(c.kernel_dim, 2);
            assert_eq!(c.signature, 2);
            assert!(c.is_positive_definite() && c.regular && c.fd_checked);
        }
        let back = spectral_flow(&GalerkinPath::with_cutoff(&MatrixFamilyPath::scalar_affine(1, -0.5, 1.5).reversed(), 8).unwrap(), &SflOptions::with_grid(64)).unwrap();
        assert_eq!(back.value, -4);
    }

    #[test]
    fn endpoint_crossing_is_reported() {
        // c(λ) = λ − 2 reaches −1 at λ = 1.
        let p = scalar_path(-2.0 + 1e-3, -1.0, 6);
        let locs = detect_crossings(&p, 32, 1e-7).unwrap();
        assert_eq!(locs, vec![1.0]);
        assert!(matches!(
            spectral_flow(&p, &SflOptions::with_grid(32)),
            Err(SflError::EndpointSingular { lambda, .. }) if lambda == 1.0
        ));
    }

    #[test]
    fn crossing_form_of_constant_kernel() {
        // c(λ) = 2λ − 1: at λ = 1/2 the kernel is the constants, form 2I in L² units.
        let p = scalar_path(-1.0, 1.0, 4);
        let op = p.operator(0.5);
        let kernel = crate::linalg::near_null_space(&op, 1e-9).unwrap();
        assert_eq!(kernel.len(), 2);
        let form = crossing_form(&p, 0.5, &kernel, 1e-5).unwrap();
        assert_eq!(form.signature, 2);
        let fd = form.finite_difference.unwrap();
        assert!(fd.sub(&form.right).norm_inf() < 1e-8);
    }

    #[test]
    fn knot_crossing_uses_one_sided_forms() {
        // c rises to 0.2 at λ = 0.5 then falls, crossing c = 0 twice.
        let fam = MatrixFamilyPath::new(vec![
            (0.0, crate::family::TrigMatrixPolynomial::scalar(1, -0.3)),
            (0.5, crate::family::TrigMatrixPolynomial::scalar(1, 0.2)),
            (1.0, crate::family::TrigMatrixPolynomial::scalar(1, -0.4)),
        ])
        .unwrap();
        let p = GalerkinPath::with_cutoff(&fam, 4).unwrap();
        let r = spectral_flow(&p, &SflOptions::with_grid(32)).unwrap();
        assert_eq!(r.value, 0);
        assert_eq!(r.crossings.len(), 2);
        assert_eq!(r.crossings[0].contribution, 2);
        assert_eq!(r.crossings[1].contribution, -2);

        // Turning point exactly at an integer value on a knot.
        let fam = MatrixFamilyPath::new(vec![
            (0.0, crate::family::TrigMatrixPolynomial::scalar(1, -0.3)),
            (0.5, crate::family::TrigMatrixPolynomial::scalar(1, 0.0)),
            (1.0, crate::family::TrigMatrixPolynomial::scalar(1, -0.4)),
        ])
        .unwrap();
        let p = GalerkinPath::with_cutoff(&fam, 4).unwrap();
        let r = spectral_flow(&p, &SflOptions::with_grid(32)).unwrap();
        assert_eq!(r.value, 0);
        let c = &r.crossings[0];
        assert_eq!(c.lambda, 0.5);
        assert!(c.left_form.is_some());
        assert_eq!(c.contribution, 0);
        assert!(!c.fd_checked);
    }

    #[test]
    fn degenerate_crossing_triggers_a_shift() {
        // L(λ) = diag((λ−½)², 1) touches zero without regular crossing; the
        // piecewise-linear version has a flat zero segment.
        let d = |x: f64| SymMatrix::diagonal(&[x, 1.0]);
        let p = MatrixPath::new(vec![(0.0, d(0.5)), (0.4, d(0.0)), (0.6, d(0.0)), (1.0, d(0.5))]).unwrap();
        let r = spectral_flow(&p, &SflOptions::with_grid(32)).unwrap();
        assert_eq!(r.value, 0);
        assert!(r.delta_used > 0.0);
        assert!(r.attempts > 1);
        let fixed = SflOptions { delta: DeltaPolicy::Fixed(0.0), ..SflOptions::with_grid(32) };
        assert!(matches!(spectral_flow(&p, &fixed), Err(SflError::Irregular { .. })));
    }

    #[test]
    fn matrix_path_crossings() {
        let start = SymMatrix::diagonal(&[-1.0, -2.0, 3.0]);
        let end = SymMatrix::diagonal(&[1.0, 2.0, -3.0]);
        let p = MatrixPath::linear(start, end).unwrap();
        let r = spectral_flow(&p, &SflOptions::with_grid(16)).unwrap();
        assert_eq!(r.value, 1);
        assert_eq!(r.crossings.len(), 1);
        assert!((r.crossings[0].lambda - 0.5).abs() < 1e-9);
        assert_eq!(r.crossings[0].kernel_dim, 3);
        assert_eq!(r.crossings[0].signature, 1);
        assert_eq!(spectral_flow(&p.reversed(), &SflOptions::with_grid(16)).unwrap().value, -1);
        assert_eq!(morse_difference(&p, 0.0, 1.0, 0.0), 1);
    }

    #[test]
    fn crossing_sum_on_monotone_paths() {
        let p = scalar_path(-0.5, 1.5, 6);
        let s = crossing_sum_positive(&p, &SflOptions::with_grid(32)).unwrap();
        assert_eq!(s.value, 4);
        assert!(s.fast_path);
        let p = scalar_path(0.2, 0.7, 6);
        assert_eq!(crossing_sum_positive(&p, &SflOptions::with_grid(32)).unwrap().value, 0);
        let p = scalar_path(1.5, -0.5, 6);
        let s = crossing_sum_positive(&p, &SflOptions::with_grid(32)).unwrap();
        assert!(!s.fast_path);
        assert_eq!(s.value, -4);
        // Singular end of a comparison path is counted, singular start is not.
        let p = scalar_path(0.0, 1.0, 6);
        let s = crossing_sum_positive(&p, &SflOptions::with_grid(32)).unwrap();
        assert!(s.fast_path);
        assert_eq!(s.value, 2);
    }

    #[test]
    fn option_validation() {
        let p = scalar_path(0.3, 0.3, 2);
        assert!(matches!(spectral_flow(&p, &SflOptions::with_grid(8)), Err(SflError::GridTooCoarse { .. })));
        let o = SflOptions { tol_kernel: 0.0, ..SflOptions::default() };
        assert!(matches!(spectral_flow(&p, &o), Err(SflError::InvalidTolerance(_))));
        let o = SflOptions::default().on_interval(0.6, 0.2);
        assert!(matches!(spectral_flow(&p, &o), Err(SflError::InvalidInterval { .. })));
    }

    #[test]
    fn concatenation_on_subintervals() {
        let p = scalar_path(-0.5, 1.5, 6);
        let whole = spectral_flow(&p, &SflOptions::with_grid(32)).unwrap().value;
        let left = spectral_flow(&p, &SflOptions::with_grid(32).on_interval(0.0, 0.5)).unwrap().value;
        let right = spectral_flow(&p, &SflOptions::with_grid(32).on_interval(0.5, 1.0)).unwrap().value;
        assert_eq!((left, right), (2, 2));
        assert_eq!(whole, left + right);
    }

    #[test]
    fn inexact_hits_merge_into_bisection_results() {
        let found = vec![(0.4460039138, false), (0.4460039252, true), (0.45, false), (0.4500000001, false), (1e-9, false)];
        assert_eq!(snap_and_merge(found, &[0.0, 1.0], 0.0, 1.0, 2e-6), vec![0.0, 0.4460039252, 0.45]);
    }

    #[test]
    fn traces_have_full_spectra() {
        let p = scalar_path(-0.5, 1.5, 3);
        let t = eigenvalue_traces(&p, 16, 0.0);
        assert_eq!(t.len(), 17);
        assert!(t.iter().all(|(_, e)| e.len() == FourierBasisSpec::new(1, 3).unwrap().dim()));
    }

    fn arb_diag_path() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (1usize..6).prop_flat_map(|d| {
            (
                prop::collection::vec(-3.0f64..3.0, d),
                prop::collection::vec(-3.0f64..3.0, d),
            )
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn finite_paths_match_morse_difference((x, y) in arb_diag_path(), theta in 0.0f64..1.0) {
            prop_assume!(x.iter().chain(&y).all(|v| v.abs() > 1e-3));
            // Rotate a diagonal path to make it non-trivially coupled.
            let d = x.len();
            let q = {
                let mut m = crate::linalg::Matrix::identity(d);
                if d > 1 {
                    let (c, s) = (theta.cos(), theta.sin());
                    m.set(0, 0, c); m.set(0, 1, -s); m.set(1, 0, s); m.set(1, 1, c);
                }
                m
            };
            let rot = |v: &[f64]| {
                let m = q.matmul(&SymMatrix::diagonal(v).to_matrix()).matmul(&q.transpose());
                SymMatrix::from_row_major(d, m.as_slice().to_vec()).unwrap()
            };
            let p = MatrixPath::linear(rot(&x), rot(&y)).unwrap();
            let r = spectral_flow(&p, &SflOptions::with_grid(16)).unwrap();
            prop_assert_eq!(r.value, morse_difference(&p, 0.0, 1.0, 0.0));
            prop_assert_eq!(spectral_flow(&p.reversed(), &SflOptions::with_grid(16)).unwrap().value, -r.value);
        }

        #[test]
        fn monotone_paths_have_nonnegative_flow(x in prop::collection::vec(-3.0f64..3.0, 4), inc in prop::collection::vec(0.0f64..2.0, 4)) {
            let y: Vec<f64> = x.iter().zip(&inc).map(|(a, b)| a + b).collect();
            prop_assume!(x.iter().chain(&y).all(|v| v.abs() > 1e-3));
            let p = MatrixPath::linear(SymMatrix::diagonal(&x), SymMatrix::diagonal(&y)).unwrap();
            let r = spectral_flow(&p, &SflOptions::with_grid(16)).unwrap();
            prop_assert!(r.value >= 0);
            let back = MatrixPath::linear(SymMatrix::diagonal(&y), SymMatrix::diagonal(&x)).unwrap();
            prop_assert!(spectral_flow(&back, &SflOptions::with_grid(16)).unwrap().value <= 0);
        }
    }
}
