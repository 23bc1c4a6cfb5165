//! Dense matrix arithmetic with analytic pullbacks and a finite-difference
//! gradient checker.

mod gradcheck;
mod matrix;
pub mod ops;

pub use gradcheck::{central_differences, grad_check};
pub use matrix::Matrix;
pub use ops::{
    elementwise, elementwise_backward, matmul, matmul_backward, sigmoid, softmax_rows,
    softmax_rows_backward, Elementwise, GradientPair,
};
