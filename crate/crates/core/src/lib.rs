//! Gradient-ascent multiagent learning laboratory.
//!
//! * [`games`]: normal-form games, the benchmark catalog and equilibria.
//! * [`learners`]: policies, value estimates and the learning rules
//!   (IGA, GIGA, IGA-WoLF, PHC-WoLF, GIGA-WoLF, WPL).
//! * [`arena`]: repeated-game self-play with bandit feedback.
//! * [`dynamics`]: continuous-time 2x2 learning dynamics and their analysis.
//! * [`dtap`]: discrete-event distributed task allocation on an agent grid.

// `!(x > 0.0)` style checks also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod arena;
pub mod dtap;
pub mod dynamics;
pub mod error;
pub mod games;
pub mod learners;
pub mod rng;
pub mod validation;

pub use error::{Error, Result};
pub use games::{benchmark, Game, GradientConstants, JointPolicy, NashKind, NashPoint};
pub use learners::{Algorithm, GradientEstimate, LearnerSpec, LearnerState, Policy, ValueEstimate};
