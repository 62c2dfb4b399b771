//! Locates the parameters with a nontrivial 2π-periodic solution by
//! integrating the linear system and scanning `det(M − I)`.
//!
//! `cargo run --release --example monodromy_scan`

use hamsfl::family::MatrixFamilyPath;
use hamsfl::monodromy::{integrate_fundamental, scan_lambda, DEFAULT_KERNEL_RTOL, DEFAULT_STEPS};

fn main() {
    let family = MatrixFamilyPath::scalar_affine(1, -0.5, 3.5);
    let scan = scan_lambda(&family, 128, DEFAULT_STEPS, DEFAULT_KERNEL_RTOL).unwrap();
    println!("max symplectic residual {:.2e}", scan.max_symplectic_residual);
    for p in &scan.points {
        println!("  lambda {:.10}  kernel {}  sigma_min {:.1e}", p.lambda, p.kernel_dim, p.sigma_min);
    }

    let m = integrate_fundamental(&family, 0.3, DEFAULT_STEPS).unwrap();
    println!("at lambda 0.3: det(M - I) = {:.6}, M rows {:?}", m.det_mi, m.monodromy.to_rows());
}
