//! Linearized energy, its Euler-Lagrange operator and the IRLS/CG loop.

pub mod cg;
pub mod energy;
pub mod irls;
pub mod linearize;
pub mod operator;

pub use cg::{cg_solve, cg_solve_from, CgOutcome, DenseOperator, LinearOperator};
pub use energy::{effective_alpha, energy_eval, EnergyBreakdown};
pub use irls::{irls_solve, IrlsOutcome};
pub use linearize::{linearize_view, LinearizedView};
pub use operator::{assemble_weights, el_operator, laplacian_apply, ElOperator, StencilGrid, STENCIL_OFFSETS};
