pub mod error;
pub mod fem;
pub mod index;
pub mod integrator;
pub mod linalg;
pub mod maslov;
pub mod model;
pub mod random;
pub mod runner;
pub mod selftest;
pub mod stability;
