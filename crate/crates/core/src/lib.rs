//! Stream solutions of the steady water-wave problem with vorticity.
//!
//! The crate classifies piecewise-polynomial vorticity distributions,
//! evaluates the singular integrals behind stream solutions, builds the
//! Bernoulli curve with its critical constants and conjugate depths, and
//! checks the resulting bounds against sampled wave fields.

// `!(a < b)` is used on purpose so that NaN takes the failing branch
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::excessive_precision, clippy::needless_range_loop)]

pub mod bernoulli;
pub mod bounds;
pub mod counter_current;
pub mod error;
pub mod extended;
pub mod io;
pub mod ode;
pub mod poly;
pub mod quad;
pub mod roots;
pub mod stream;
pub mod vorticity;

pub use error::{Error, Result};
pub use extended::Extended;
pub use vorticity::{
    BoundaryZero, ClassLabel, DistributionSpec, ExtensionOptions, Side, VorticityClass,
    VorticityDistribution,
};
pub use stream::{ProfileKind, StreamProfile, StreamSolver, Tolerances, TurningPoints};
pub use counter_current::{CounterCurrentSolution, FamilySide};
pub use bernoulli::{
    BifurcationCurve, Branch, ConjugatePair, CriticalConstants, CriticalPoint, CurveSample,
    Disconjugacy, PairStatus,
};
pub use bounds::{BoundsReport, SynthKind, TheoremEntry, Verdict, WaveField};
