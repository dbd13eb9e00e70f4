#![no_std]
// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Ising models observed through their Glauber dynamics.
//!
//! The crate covers four pieces that build on each other:
//!
//! * [`model`]: graphs, couplings and the single-site heat-bath update law.
//! * [`sim`]: continuous-time and discrete-time traces of the dynamics.
//! * [`learner`]: windowed pair statistics and the thresholding structure
//!   learner that recovers the edge set from a trace.
//! * [`oracle`] and [`lowerbound`]: exact small-instance ground truth and the
//!   information-theoretic side (clique ensembles, exact KL, Fano).
//!
//! Everything here is pure computation over `alloc`; file formats, timing and
//! the command line live in the companion `glauber-harness` crate.

extern crate alloc;

pub mod error;
pub mod graphs;
pub mod learner;
pub mod lowerbound;
pub mod math;
pub mod model;
pub mod oracle;
pub mod rng;
pub mod sim;

pub use error::{Error, Result};
pub use learner::{glauber_learn, EdgeSet, LearnerParams};
pub use model::{Couplings, Graph, IsingModel, ParamBounds, Spin, SpinConfig};
pub use rng::RngSeed;
pub use sim::{simulate_ct, simulate_dt, Trace, TraceMode, UpdateEvent};
