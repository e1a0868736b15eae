//! Exact finite-depth combinatorics on the Cantor line and plane: inscribing
//! tree-body rectangles into large subsets, with machine-checkable
//! certificates, plus sparse codings for the meager, null and closed-null
//! ideals.
//!
//! Everything is computed in exact dyadic/rational arithmetic at an explicit
//! depth. Constructions emit a stage-by-stage transcript; an independent
//! verifier re-derives every claimed condition from the transcript and the
//! instance files alone.

pub mod bitword;
pub mod category;
pub mod certify;
pub mod clopen;
pub mod codings;
pub mod dyadic;
pub mod largesets;
pub mod measure;
pub mod trees;

pub use bitword::{base_cylinder, BitWord};
pub use clopen::{boolean_combine, Axis, BitcoreError, BoolOp, ClopenSet, DepthCaps, Dim};
pub use dyadic::{stage_epsilon, stage_retention, Dyadic, Ratio};
