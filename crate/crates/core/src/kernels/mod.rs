//! Rough homogeneous kernels and the operators built from them.

pub mod bochner;
pub mod forms;
pub mod omega;

pub use bochner::{bochner_riesz, bisublinear_max, grand_max_truncation, BochnerRiesz};
pub use forms::{
    commutator, kernel_value, kq_constant, max_truncation, phi_constant, rep1_check, t_omega, telescoping_gap,
    KernelSpec, KernelTable,
};
pub use omega::{omega_norms, OmegaNorms, OmegaSpec};
