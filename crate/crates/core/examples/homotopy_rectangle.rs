//! Spectral flow around the boundary of the comparison homotopy
//! `(1 − s)A_λ + s·C_λ` adds up to zero.
//!
//! `cargo run --release --example homotopy_rectangle`

use hamsfl::family::{MatrixFamilyPath, TrigMatrixPolynomial};
use hamsfl::galerkin::{GalerkinPath, HomotopyRectangle};
use hamsfl::linalg::SymMatrix;
use hamsfl::sfl::{spectral_flow, SflOptions};

fn sfl(family: MatrixFamilyPath) -> i64 {
    let path = GalerkinPath::with_cutoff(&family, 6).unwrap();
    spectral_flow(&path, &SflOptions::with_grid(64)).unwrap().value
}

fn main() {
    let wobble = SymMatrix::from_rows(&[vec![0.15, 0.05], vec![0.05, -0.1]]).unwrap();
    let a = |c: f64| TrigMatrixPolynomial::new(vec![SymMatrix::scalar(2, c), wobble.clone()], vec![wobble.clone()]).unwrap();
    let family = MatrixFamilyPath::affine(a(-0.4), a(1.6)).unwrap();
    let rect = HomotopyRectangle::new(family, SymMatrix::scalar(2, 0.3), SymMatrix::diagonal(&[1.2, 2.3])).unwrap();

    let bottom = sfl(rect.lambda_edge(0.0).unwrap());
    let top = sfl(rect.lambda_edge(1.0).unwrap());
    let left = sfl(rect.s_edge(0.0).unwrap());
    let right = sfl(rect.s_edge(1.0).unwrap());
    println!("sfl(A) = {bottom}, sfl(C) = {top}, s-edges {left} at 0 and {right} at 1");
    assert_eq!(bottom, left + top - right);
}
