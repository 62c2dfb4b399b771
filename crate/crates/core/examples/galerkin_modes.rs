//! The truncated Fourier basis: block layout, Gram weights, and an explicit
//! kernel vector `u₀cos(kt) + Ju₀sin(kt)`.
//!
//! `cargo run --release --example galerkin_modes`

use hamsfl::family::TrigMatrixPolynomial;
use hamsfl::galerkin::{assemble_for_poly, assemble_q, gram_weights, l2_weights, mode_function, FourierBasisSpec};
use hamsfl::linalg::norm2;

fn main() {
    let spec = FourierBasisSpec::new(1, 3).unwrap();
    println!("n = 1, N = 3, dimension {}", spec.dim());
    for b in 0..spec.block_count() {
        println!("  block {b}: {:?}", spec.block_kind(b));
    }

    let q = assemble_q(&spec);
    let (g, l2) = (gram_weights(&spec), l2_weights(&spec));
    let u0 = [1.0, 0.5];
    for k in 1..=3i64 {
        let u = mode_function(&spec, k, &u0).unwrap();
        let l2n: f64 = u.iter().zip(l2.as_slice()).map(|(x, w)| x * x * w).sum();
        let hn: f64 = u.iter().zip(g.as_slice()).map(|(x, w)| x * x * w).sum();
        println!("  k = {k}: |u|^2_H = {hn:.6}, k|u|^2_L2 = {:.6}, Q(u,u) = {:.6}", k as f64 * l2n, q.bilinear(&u, &u));
    }

    // With A ≡ (k − δk)·I the shifted operator annihilates the mode-k vector.
    let (k, delta) = (2i64, 1e-3);
    let a = TrigMatrixPolynomial::scalar(1, k as f64 * (1.0 - delta));
    let m = assemble_for_poly(&spec, &a, delta, spec.default_quad_points(0)).unwrap();
    let y = g.to_orthonormal(&mode_function(&spec, k, &u0).unwrap());
    println!("residual of the mode-{k} kernel vector: {:.2e}", norm2(&m.mul_vec(&y)));
}
