//! Spectral flow of the scalar ramp `A_λ = (2λ − 0.5)·I₂`.
//!
//! `cargo run --release --example constant_family_sfl`

use hamsfl::family::MatrixFamilyPath;
use hamsfl::galerkin::GalerkinPath;
use hamsfl::sfl::{spectral_flow, SflOptions};

fn main() {
    let family = MatrixFamilyPath::scalar_affine(1, -0.5, 1.5);
    let path = GalerkinPath::with_cutoff(&family, 8).expect("valid cutoff");
    let result = spectral_flow(&path, &SflOptions::with_grid(64)).expect("invertible endpoints");

    println!("sfl = {} (delta {}, {} attempt(s))", result.value, result.delta_used, result.attempts);
    for c in &result.crossings {
        println!(
            "  lambda {:.10}  kernel {}  signature {:+}  contribution {:+}",
            c.lambda, c.kernel_dim, c.signature, c.contribution
        );
    }
    // Closed form: 2n times the integers in (c(0), c(1)].
    assert_eq!(result.value, 4);
}
