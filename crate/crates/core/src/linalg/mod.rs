//! Dense linear-algebra kernels.

mod lasso;
mod matrix;
mod power;
mod qr;
mod threshold;

pub use lasso::{
    kkt_violation, lasso_cd, lasso_gram, lasso_objective, GramState,
    KktReport, LassoFit, CD_MAX_SWEEPS, CD_TOL, GRAM_TOL,
};
pub use matrix::{axpy, dot, norm2, Matrix};
pub use power::{
    leading_left_singular_vector, normalize_sign, SingularVector, POWER_MAX_ITER, POWER_TOL,
};
pub use qr::{complement_basis, QrFactor, RANK_TOL};
pub use threshold::{hard_norm, hard_scalar, hard_threshold, soft_norm, soft_scalar, soft_threshold};
