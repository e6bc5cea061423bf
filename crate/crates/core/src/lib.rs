//! Deterministic simulator and analysis toolkit for pre- and post-selected
//! photons in nested interferometer networks.
//!
//! The crate is organized around four pieces:
//!
//! * [`circuit`]: a line-oriented DSL for interferometer layouts, compiled
//!   into a staged sequence of unitaries over labeled arms, with exhaustive
//!   path enumeration.
//! * [`tsvf`]: the two-state-vector engine: forward/backward evolved states,
//!   weak values of arm-set projectors, and ABL probabilities of intermediate
//!   projective measurements.
//! * [`meters`]: three exact coupling models turning weak values into meter
//!   records: ancilla markers (weak traces), vibrating mirrors driving a
//!   transverse Gaussian pointer (quad-cell signal), and a Kerr cross-phase
//!   probe photon.
//! * [`analysis`]: direct-DFT power spectra of quad-cell series and
//!   log-log power-law fits of trace sweeps.
//!
//! Everything is generic over the scalar type via [`scalar::Real`]
//! (`f32` or `f64`); the `*64` aliases below pin the common case.
//!
//! All operations are pure functions of immutable inputs and are
//! deterministic: equal inputs produce bit-identical outputs.

pub mod analysis;
pub mod circuit;
pub mod meters;
pub mod scalar;
pub mod tsvf;

pub use scalar::{Real, C};

/// Complex amplitude at `f64` precision.
pub type C64 = scalar::C<f64>;

pub type CircuitSpec64 = circuit::CircuitSpec<f64>;
pub type StagedModel64 = circuit::StagedModel<f64>;
pub type PathState64 = tsvf::PathState<f64>;
pub type SelectionPair64 = tsvf::SelectionPair<f64>;
pub type PostSelection64 = tsvf::PostSelection<f64>;
pub type TwoStateVector64 = tsvf::TwoStateVector<f64>;
pub type MarkerSet64 = meters::MarkerSet<f64>;
pub type MirrorModulation64 = meters::MirrorModulation<f64>;
pub type KerrProbeConfig64 = meters::KerrProbeConfig<f64>;
pub type Spectrum64 = analysis::Spectrum<f64>;
pub type SweepResult64 = analysis::SweepResult<f64>;
