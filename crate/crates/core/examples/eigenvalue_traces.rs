//! Eigenvalues of the Galerkin operator along λ, as CSV on stdout.
//!
//! `cargo run --release --example eigenvalue_traces > traces.csv`

use hamsfl::cli::render_traces;
use hamsfl::family::MatrixFamilyPath;
use hamsfl::galerkin::GalerkinPath;
use hamsfl::sfl::eigenvalue_traces;

fn main() {
    let family = MatrixFamilyPath::scalar_affine(1, -0.5, 1.5);
    let path = GalerkinPath::with_cutoff(&family, 3).unwrap();
    print!("{}", render_traces(&eigenvalue_traces(&path, 32, 0.0)));
}
