//! Acceptance run: one PASS/FAIL line per criterion.

use std::process::ExitCode;
use std::time::Instant;

use hamsfl::comparison::{certify, CChoice, CertifyOptions, SynthesisMode};
use hamsfl::family::{MatrixFamilyPath, TrigMatrixPolynomial};
use hamsfl::galerkin::{
    assemble_for_poly, assemble_q, gram_weights, l2_weights, mode_function, FourierBasisSpec,
    GalerkinPath, HomotopyRectangle,
};
use hamsfl::linalg::{eigvals_sym, near_null_space, norm2, Matrix, SymMatrix};
use hamsfl::monodromy::{self, fundamental_matrix, integrate_fundamental, scan_lambda, symplectic_residual};
use hamsfl::sfl::{detect_crossings, spectral_flow, DeltaPolicy, OperatorPath, SflOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Verdict = Result<String, String>;

fn random_sym(rng: &mut ChaCha8Rng, d: usize, norm: f64) -> SymMatrix {
    let mut data = vec![0.0; d * d];
    for i in 0..d {
        for j in i..d {
            let v = rng.gen_range(-1.0..1.0);
            data[i * d + j] = v;
            data[j * d + i] = v;
        }
    }
    let m = SymMatrix::from_row_major(d, data).unwrap();
    let e = eigvals_sym(&m).unwrap();
    let r = e[0].abs().max(e[d - 1].abs());
    if r == 0.0 {
        m
    } else {
        m.scaled(norm / r)
    }
}

/// `c·I` plus a random trig perturbation of size at most `eps`; every
/// coefficient has spectral norm at most `|c| + eps`.
fn random_poly(rng: &mut ChaCha8Rng, n: usize, freq: usize, c: f64, eps: f64) -> TrigMatrixPolynomial {
    let d = 2 * n;
    let share = if freq == 0 { eps } else { eps / (1.0 + 2.0 * freq as f64) };
    let a0 = rng.gen_range(0.0..share);
    let mut cos = vec![SymMatrix::scalar(d, c).add(&random_sym(rng, d, a0))];
    let mut sin = Vec::new();
    for _ in 0..freq {
        let a = rng.gen_range(0.0..share);
        cos.push(random_sym(rng, d, a));
        let b = rng.gen_range(0.0..share);
        sin.push(random_sym(rng, d, b));
    }
    TrigMatrixPolynomial::new(cos, sin).unwrap()
}

/// Affine family between two random endpoints whose means ramp from
/// `c0` to `c1`, with `n ≤ 2` and frequencies up to 2.
fn random_ramp(rng: &mut ChaCha8Rng, c0: (f64, f64), c1: (f64, f64), eps: f64) -> (usize, MatrixFamilyPath) {
    let n = rng.gen_range(1..=2);
    let freq = rng.gen_range(0..=2);
    let (a, b) = (rng.gen_range(c0.0..c0.1), rng.gen_range(c1.0..c1.1));
    let p0 = random_poly(rng, n, freq, a, eps);
    let p1 = random_poly(rng, n, freq, b, eps);
    (n, MatrixFamilyPath::affine(p0, p1).unwrap())
}

fn min_abs_eig(m: &SymMatrix) -> f64 {
    eigvals_sym(m).unwrap().iter().fold(f64::INFINITY, |a, e| a.min(e.abs()))
}

fn constant_flow() -> Verdict {
    let start = Instant::now();
    let fam = MatrixFamilyPath::scalar_affine(1, -0.5, 1.5);
    let path = GalerkinPath::with_cutoff(&fam, 8).map_err(|e| e.to_string())?;
    let r = spectral_flow(&path, &SflOptions::with_grid(64)).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed().as_secs_f64();
    let lams: Vec<f64> = r.crossings.iter().map(|c| c.lambda).collect();
    let located = lams.len() == 2 && (lams[0] - 0.25).abs() <= 1e-6 && (lams[1] - 0.75).abs() <= 1e-6;
    let forms = r.crossings.iter().all(|c| c.kernel_dim == 2 && c.is_positive_definite());
    let detail = format!("value {}, crossings {lams:?}, {elapsed:.2}s", r.value);
    if r.value == 4 && located && forms && elapsed < 10.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn certificate_ground_truth() -> Verdict {
    let fam = MatrixFamilyPath::scalar_affine(1, -0.5, 1.5);
    let auto = CChoice::Auto(SynthesisMode::Scalar);
    let cert = certify(&fam, &auto, &auto, &CertifyOptions::default()).map_err(|e| e.to_string())?;
    let scan = scan_lambda(&fam, 128, monodromy::DEFAULT_STEPS, monodromy::DEFAULT_KERNEL_RTOL).map_err(|e| e.to_string())?;
    let dims: Vec<usize> = scan.points.iter().map(|p| p.kernel_dim).collect();
    let detail = format!(
        "bound {}, guaranteed {}, singular points {:?} with dims {dims:?}",
        cert.count_lower_bound,
        cert.bifurcation_guaranteed,
        scan.points.iter().map(|p| p.lambda).collect::<Vec<_>>()
    );
    if cert.count_lower_bound == 2 && cert.bifurcation_guaranteed && dims == [2, 2] {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn monodromy_correctness() -> Verdict {
    let steps = 2048;
    let one = integrate_fundamental(&MatrixFamilyPath::scalar_affine(1, 1.0, 1.0), 0.0, steps).map_err(|e| e.to_string())?;
    let e1 = one.monodromy.sub(&Matrix::identity(2)).norm_inf();
    let half = integrate_fundamental(&MatrixFamilyPath::scalar_affine(1, 0.5, 0.5), 0.0, steps).map_err(|e| e.to_string())?;
    let e2 = half.monodromy.add(&Matrix::identity(2)).norm_inf();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0_f64;
    for _ in 0..20 {
        let n = rng.gen_range(1..=3);
        let freq = rng.gen_range(0..=3);
        let c: f64 = rng.gen_range(0.5..1.7);
        let eps = rng.gen_range(0.0..(2.0 - c).min(c - 0.2));
        let poly = random_poly(&mut rng, n, freq, c, eps);
        worst = worst.max(symplectic_residual(&fundamental_matrix(&poly, steps)));
    }
    let detail = format!("|M-I| {e1:.1e} (c=1), |M+I| {e2:.1e} (c=0.5), worst symplectic residual {worst:.1e}");
    if e1 <= 1e-8 && e2 <= 1e-8 && worst <= 1e-8 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn galerkin_monodromy_agreement() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let tol = 2e-4;
    let mut total = 0;
    for f in 0..20 {
        let eps = rng.gen_range(0.05..0.2);
        let (_, fam) = random_ramp(&mut rng, (-0.8, 0.6), (0.4, 1.8), eps);
        let cutoff = 12;
        let path = GalerkinPath::with_cutoff(&fam, cutoff).map_err(|e| e.to_string())?;
        let gal: Vec<(f64, usize)> = detect_crossings(&path, 128, 1e-7)
            .map_err(|e| e.to_string())?
            .into_iter()
            .map(|l| (l, near_null_space(&path.operator(l), 1e-7).unwrap().len()))
            .collect();
        let scan = scan_lambda(&fam, 128, monodromy::DEFAULT_STEPS, monodromy::DEFAULT_KERNEL_RTOL).map_err(|e| e.to_string())?;
        let mono: Vec<(f64, usize)> = scan.points.iter().map(|p| (p.lambda, p.kernel_dim)).collect();
        let same = gal.len() == mono.len()
            && gal.iter().zip(&mono).all(|(g, m)| (g.0 - m.0).abs() <= tol && g.1 == m.1);
        if !same || !scan.unresolved.is_empty() {
            return Err(format!("family {f}: galerkin {gal:?} vs monodromy {mono:?}, unresolved {:?}", scan.unresolved));
        }
        total += gal.len();
    }
    Ok(format!("20 families, {total} singular values matched within {tol:e}"))
}

fn comparison_inequality() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut checked = 0;
    let mut report = Vec::new();
    let auto = CChoice::Auto(SynthesisMode::Scalar);
    while checked < 10 {
        let eps = rng.gen_range(0.0..0.3);
        let (n, fam) = random_ramp(&mut rng, (-0.8, 0.4), (1.2, 1.8), eps);
        let cert = certify(&fam, &auto, &auto, &CertifyOptions::default()).map_err(|e| e.to_string())?;
        if !cert.sandwich.valid || !cert.endpoints_ok() {
            continue;
        }
        let path = GalerkinPath::with_cutoff(&fam, 12).map_err(|e| e.to_string())?;
        let sfl = spectral_flow(&path, &SflOptions::with_grid(64)).map_err(|e| e.to_string())?.value;
        let scaled = cert.raw_bound.to_f64() * (2 * n) as f64;
        if !(sfl as f64 >= scaled && scaled >= 0.0) {
            return Err(format!("sfl {sfl} < raw_bound*2n = {scaled}"));
        }
        report.push(format!("{sfl}>={scaled}"));
        checked += 1;
    }
    Ok(format!("10 sandwiched families: {}", report.join(", ")))
}

fn axioms() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let opts = SflOptions::with_grid(64);
    let mut notes = Vec::new();

    // Reversal and concatenation.
    let mut done = 0;
    while done < 5 {
        let (_, fam) = random_ramp(&mut rng, (-0.8, 0.6), (0.4, 1.8), 0.2);
        let path = GalerkinPath::with_cutoff(&fam, 8).map_err(|e| e.to_string())?;
        let Ok(whole) = spectral_flow(&path, &opts) else { continue };
        let back = GalerkinPath::with_cutoff(&fam.reversed(), 8).map_err(|e| e.to_string())?;
        let rev = spectral_flow(&back, &opts).map_err(|e| e.to_string())?.value;
        if rev != -whole.value {
            return Err(format!("reversal: {} vs {rev}", whole.value));
        }
        let mut mid = 0.5;
        while min_abs_eig(&path.operator(mid)) <= 1e-4 {
            mid += 0.01;
        }
        let left = spectral_flow(&path, &opts.clone().on_interval(0.0, mid)).map_err(|e| e.to_string())?.value;
        let right = spectral_flow(&path, &opts.clone().on_interval(mid, 1.0)).map_err(|e| e.to_string())?.value;
        if left + right != whole.value {
            return Err(format!("concatenation at {mid}: {left} + {right} != {}", whole.value));
        }
        done += 1;
    }
    notes.push("reversal and concatenation on 5 families".to_string());

    // Homotopy rectangles with random constant comparison matrices.
    let mut done = 0;
    let mut values = Vec::new();
    while done < 5 {
        let (n, fam) = random_ramp(&mut rng, (-0.8, 0.6), (0.4, 1.8), 0.2);
        let d = 2 * n;
        let c0 = SymMatrix::scalar(d, rng.gen_range(-0.9..0.9)).add(&random_sym(&mut rng, d, 0.3));
        let c1 = SymMatrix::scalar(d, rng.gen_range(0.3..2.2)).add(&random_sym(&mut rng, d, 0.3));
        let rect = HomotopyRectangle::new(fam, c0, c1).map_err(|e| e.to_string())?;
        let cutoff = 6;
        let edge = |f: MatrixFamilyPath| -> Option<i64> {
            let p = GalerkinPath::with_cutoff(&f, cutoff).ok()?;
            spectral_flow(&p, &opts).ok().map(|r| r.value)
        };
        let (Some(bottom), Some(left), Some(top), Some(right)) = (
            edge(rect.lambda_edge(0.0).unwrap()),
            edge(rect.s_edge(0.0).unwrap()),
            edge(rect.lambda_edge(1.0).unwrap()),
            edge(rect.s_edge(1.0).unwrap()),
        ) else {
            continue;
        };
        if bottom != left + top - right {
            return Err(format!("rectangle: {bottom} != {left} + {top} - {right}"));
        }
        values.push(format!("{bottom}={left}+{top}-{right}"));
        done += 1;
    }
    notes.push(format!("rectangles {}", values.join(", ")));

    // Two admissible shifts.
    let path = GalerkinPath::with_cutoff(&MatrixFamilyPath::scalar_affine(1, -0.5, 1.5), 8).map_err(|e| e.to_string())?;
    let with = |d: f64| spectral_flow(&path, &SflOptions { delta: DeltaPolicy::Fixed(d), ..SflOptions::with_grid(64) }).map(|r| r.value);
    let (a, b) = (with(2e-6).map_err(|e| e.to_string())?, with(3e-5).map_err(|e| e.to_string())?);
    if a != b || a != 4 {
        return Err(format!("delta stability: {a} vs {b}"));
    }
    notes.push(format!("delta 2e-6 and 3e-5 both give {a}"));
    Ok(notes.join("; "))
}

fn kernel_constructions() -> Verdict {
    let delta = 1e-3;
    let spec = FourierBasisSpec::new(1, 4).unwrap();
    let quad = spec.default_quad_points(0);
    let w = gram_weights(&spec);
    let u0 = [0.6, -1.1];
    let mut worst = 0.0_f64;
    for k in [0i64, 1, 2] {
        let c = if k == 0 { -delta } else { k as f64 - delta * k as f64 };
        let m = assemble_for_poly(&spec, &TrigMatrixPolynomial::scalar(1, c), delta, quad).map_err(|e| e.to_string())?;
        let y = w.to_orthonormal(&mode_function(&spec, k, &u0).map_err(|e| e.to_string())?);
        worst = worst.max(norm2(&m.mul_vec(&y)) / norm2(&y));
    }
    let detail = format!("worst relative residual {worst:.1e}; k = 0 uses C = -delta*I");
    if worst <= 1e-8 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn pure_modes() -> Verdict {
    let cutoff = 10;
    let spec = FourierBasisSpec::new(2, cutoff).unwrap();
    let (g, l2, q) = (gram_weights(&spec), l2_weights(&spec), assemble_q(&spec));
    let weighted = |w: &[f64], x: &[f64]| x.iter().zip(w).map(|(a, b)| a * a * b).sum::<f64>();
    let u0 = [0.3, -0.8, 1.2, 0.45];
    let mut worst = 0.0_f64;
    for k in 1..=cutoff as i64 {
        let u = mode_function(&spec, k, &u0).unwrap();
        let l2n = weighted(l2.as_slice(), &u);
        let h = weighted(g.as_slice(), &u);
        worst = worst.max((h - k as f64 * l2n).abs() / (k as f64 * l2n));
        worst = worst.max((q.bilinear(&u, &u) + k as f64 * l2n).abs() / (k as f64 * l2n));
    }
    let detail = format!("k = 1..{cutoff}, worst relative error {worst:.1e}");
    if worst <= 1e-10 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn truncation_stability() -> Verdict {
    let fam = MatrixFamilyPath::scalar_affine(1, -0.5, 1.5);
    let mut values = Vec::new();
    for cutoff in [4, 8, 16, 32] {
        let path = GalerkinPath::with_cutoff(&fam, cutoff).map_err(|e| e.to_string())?;
        values.push(spectral_flow(&path, &SflOptions::with_grid(64)).map_err(|e| e.to_string())?.value);
    }
    let detail = format!("N = 4, 8, 16, 32 give {values:?}");
    if values.iter().all(|&v| v == 4) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Verdict); 9] = [
        ("constant-family spectral flow", constant_flow),
        ("certificate vs ground truth", certificate_ground_truth),
        ("monodromy correctness", monodromy_correctness),
        ("galerkin/monodromy agreement", galerkin_monodromy_agreement),
        ("comparison inequality", comparison_inequality),
        ("spectral-flow axioms", axioms),
        ("explicit kernel constructions", kernel_constructions),
        ("pure-mode identities", pure_modes),
        ("truncation stability", truncation_stability),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS {} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {} {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
