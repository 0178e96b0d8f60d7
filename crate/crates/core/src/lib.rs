//! Hierarchical Tucker tensors with max-norm estimation and argmax search.
//!
//! A tensor is stored over a binary dimension tree as leaf frames and
//! transfer tensors. The estimators find `‖a‖∞ = max |a[i]|` through power
//! iterations on the diagonal operator `x -> a ∘ x`, and the argmax search
//! narrows a maximizing index down by halving modes.

pub mod argmax;
pub mod arith;
pub mod construct;
pub mod error;
pub mod io;
pub mod linalg;
pub mod maxnorm;
pub mod oracle;
pub mod tensor;
pub mod tree;

pub use argmax::{binary_search_argmax, elementary_argmax, search_iteration_bound, ArgmaxResult};
pub use arith::{
    add, dot, hadamard, ht_qr, norm, scale, slice, truncate, truncate_eps, RankTarget,
};
pub use error::{HtError, Result};
pub use maxnorm::{
    adaptive_maxnorm, Algorithm, ConvergenceTrace, IterationConfig, MaxNormEstimate, Truncation,
};
pub use tensor::{HtTensor, MultiIndex, NodeData, Transfer};
pub use tree::{DimensionTree, TreeNode};
