//! Comparison certificate for a family with a time-dependent coefficient.
//!
//! `cargo run --release --example certify_bifurcation`

use hamsfl::comparison::{certify, CChoice, CertifyOptions, SynthesisMode};
use hamsfl::family::{MatrixFamilyPath, TrigMatrixPolynomial};
use hamsfl::linalg::SymMatrix;

fn coefficient(mean: f64, wobble: f64) -> TrigMatrixPolynomial {
    let m = SymMatrix::from_rows(&[vec![mean, 0.1], vec![0.1, mean + 0.2]]).unwrap();
    let c1 = SymMatrix::diagonal(&[wobble, -wobble]);
    let s1 = SymMatrix::from_rows(&[vec![0.0, wobble], vec![wobble, 0.0]]).unwrap();
    TrigMatrixPolynomial::new(vec![m, c1], vec![s1]).unwrap()
}

fn main() {
    let family = MatrixFamilyPath::affine(coefficient(-0.6, 0.1), coefficient(1.4, 0.1)).unwrap();
    let opts = CertifyOptions { scan_grid: Some(128), ..CertifyOptions::default() };

    for mode in [SynthesisMode::Scalar, SynthesisMode::ShiftedMean] {
        let auto = CChoice::Auto(mode);
        let cert = certify(&family, &auto, &auto, &opts).expect("certificate");
        println!("{mode:?}:");
        println!("  eig(C0) = {:?}", cert.eig_c0);
        println!("  eig(C1) = {:?}", cert.eig_c1);
        println!("  sandwich valid: {}, index criterion: {:?}", cert.sandwich.valid, cert.thm_i_index);
        println!("  per-index counts {:?}, lower bound {}", cert.per_index_counts, cert.count_lower_bound);
        println!("  bifurcation guaranteed: {}", cert.bifurcation_guaranteed);
        for w in &cert.warnings {
            println!("  warning: {w}");
        }
    }
}
