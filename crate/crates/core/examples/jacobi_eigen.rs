//! The dense symmetric eigensolver and derived quantities.
//!
//! `cargo run --release --example jacobi_eigen`

use hamsfl::linalg::{eig_sym, morse_index, near_null_space, SymMatrix};

fn main() {
    let a = SymMatrix::from_rows(&[
        vec![2.0, -1.0, 0.0, 0.0],
        vec![-1.0, 2.0, -1.0, 0.0],
        vec![0.0, -1.0, 2.0, -1.0],
        vec![0.0, 0.0, -1.0, 2.0],
    ])
    .unwrap();
    let e = eig_sym(&a).unwrap();
    for k in 0..4 {
        println!("mu_{k} = {:.12}  v = {:?}", e.eigenvalues[k], e.eigenvector(k));
    }
    let shifted = a.shifted(-e.eigenvalues[1]);
    println!("Morse index after shift: {}", morse_index(&shifted, 1e-10).unwrap());
    println!("null space dimension: {}", near_null_space(&shifted, 1e-10).unwrap().len());
}
