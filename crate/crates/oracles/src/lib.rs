//! Test oracles for failnet: brute-force evaluators written independently of
//! the library code paths, plus seeded generators of random models.

pub mod brute;
pub mod fock;
pub mod perturb;
pub mod random;
