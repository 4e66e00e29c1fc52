//! Exactly solvable non-Markovian qubit channels, the temporal self-similarity
//! memory measure ζ, and open-system quantum speed limit bounds.
//!
//! The crate is organised bottom-up:
//!
//! * [`qmat`]: 2×2 / 4×4 Hermitian algebra, Bloch states, fidelity and norms.
//! * [`numerics`]: adaptive Simpson quadrature, golden-section search,
//!   finite differences and rank correlation.
//! * [`channels`]: Ornstein–Uhlenbeck (OUN) and random-telegraph (RTN)
//!   dephasing, and non-Markovian amplitude damping (NMAD).
//! * [`memory`]: ζ, the time-averaged trace-norm distance between the
//!   instantaneous generator and the best constant-rate generator.
//! * [`qsl`]: relative-purity, Fisher-information, Bures-angle and
//!   mixed-state speed limits, each with closed forms where they exist.
//! * [`sweep`]: scenarios, parameter sweeps, figure presets and
//!   CSV / JSON / SVG emission used by the `qslab` binary.

pub mod channels;
pub mod error;
pub mod memory;
pub mod numerics;
pub mod qmat;
pub mod qsl;
pub mod sweep;

pub use channels::{
    ChannelKind, ChannelModel, GeneratorSpec, NmadParams, OunParams, RateModel, ReferenceFamily,
    RtnParams, SemigroupChannel,
};
pub use error::{QslError, Result};
pub use memory::{zeta, zeta_golden, ChoiNormalization, ZetaResult};
pub use qmat::{BlochState, HermitianMatrix2, HermitianMatrix4};
pub use qsl::{BoundKind, Norm, QslResult};
