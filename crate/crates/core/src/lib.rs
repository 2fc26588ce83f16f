//! Grid-scale experiments with logarithmic series, relative extremal
//! functions, cross envelopes, connectivity of thin complements and boundary
//! blow-up.

pub mod blowup;
pub mod cross;
pub mod extremal;
pub mod grid;
pub mod json;
pub mod series;
pub mod topology;

pub use grid::{make_grid, sample_mask, ComplexPoint, Grid, GridError, GridFunction, Mask, Polydisc};
pub use series::{Membership, RegionSpec, SeriesError, TruncatedLogSeries, Verdict};
pub use extremal::{ExtremalError, ExtremalSolution, ObstacleProblem, SolverConfig};
pub use topology::{Cube, PathWitness, TopologyError};
pub use cross::{CrossError, CrossSpec, EnvelopeResult, GeneralizedCrossSpec};
pub use blowup::{BlowupError, BlowupWitness};
