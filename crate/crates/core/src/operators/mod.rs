//! Kernels, truncated and suppressed singular integrals, maximal functions and
//! the bump decomposition of the operator along a corona tree.

pub mod bump;
pub mod decomposition;
pub mod kernel;
pub mod maximal;
pub mod truncated;

pub use bump::{psi, BumpFamily};
pub use decomposition::{k_r_operator, k_r_telescoped, lattice_bumps, t_k, tree_span};
pub use kernel::{validate, CZKernel, KernelFn, KernelKind};
pub use maximal::{m_r_phi, m_tilde, MTildeVariant};
pub use truncated::{
    eps_grid, suppress, suppressed_kernel, t_eps, t_phi_eps, t_phi_star, t_star, t_star_grid, TruncationProfile,
};
