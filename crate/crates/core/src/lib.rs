pub mod linalg;
pub mod family;
pub mod galerkin;
pub mod sfl;
pub mod monodromy;
pub mod comparison;
pub mod cli;
