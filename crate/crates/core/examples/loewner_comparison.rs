//! Löwner order checks and the integer-count criteria on constant matrices.
//!
//! `cargo run --release --example loewner_comparison`

use hamsfl::comparison::{theorem_i_check, theorem_ii_check};
use hamsfl::linalg::{commutes_with_j, loewner_leq, loewner_margin, SymMatrix};

fn main() {
    let c0 = SymMatrix::diagonal(&[0.2, 0.7, 0.2, 0.7]);
    let c1 = SymMatrix::diagonal(&[1.5, 2.1, 1.5, 2.1]);
    println!("C0 <= C1: {} (margin {})", loewner_leq(&c0, &c1, 1e-12).unwrap(), loewner_margin(&c0, &c1).unwrap());
    println!("commute with J: {} {}", commutes_with_j(&c0, 1e-12), commutes_with_j(&c1, 1e-12));
    println!("index criterion: {:?}", theorem_i_check(&c0, &c1).unwrap());
    let t = theorem_ii_check(&c0, &c1).unwrap();
    println!("counts {:?}, witness {:?}, at least {} bifurcation point(s)", t.per_index_counts, t.witness, t.count_lower_bound);

    // A non-commuting pair keeps only the index criterion.
    let c2 = SymMatrix::diagonal(&[1.5, 0.5, 1.5, 0.9]);
    println!("non-commuting: {:?}", theorem_ii_check(&c0, &c2).unwrap().witness);
}
