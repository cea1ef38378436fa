//! Semi-supervised SVM labeling through a quadratic-programming relaxation of
//! the transductive SVM and an equivalent monotone submodular set function.
//!
//! The crate is organised bottom-up:
//!
//! * [`dataio`]: libsvm parsing, feature normalization, labeled/unlabeled splits.
//! * [`kernels`]: the `K_ll`, `K_uu`, `K_lu` blocks with their cached sums and bound `d`.
//! * [`svm`]: the supervised linear SVM used as baseline and for `I(w*)`.
//! * [`qp`]: QP relaxation objectives, dual evaluation, upper bound, local solver.
//! * [`submodular`]: the set function `S(A)`, its marginal gain and greedy maximizers.
//! * [`harness`]: experiment runner, verification suites and fixture generators.

pub mod dataio;
pub mod error;
pub mod harness;
pub mod kernels;
pub mod linalg;
pub mod qp;
pub mod submodular;
pub mod svm;

pub use dataio::{Dataset, Label, SparseVector, SplitSpec};
pub use error::{Error, Result};
pub use kernels::{GramMode, KernelBlocks, KernelKind, KernelSpec};
pub use qp::{DualPoint, S3vmConfig, SoftLabels};
pub use submodular::{GreedyOutcome, SelectionState, SubmodularObjective};
pub use svm::{LinearModel, SvmFit};
