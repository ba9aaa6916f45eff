//! Deficient sets in random finite groupoids and d-ary algebras.
//!
//! - [`table`]: operation tables, images, exceedance and the T0–T7 pair types.
//! - [`combinatorics`]: exact counts, rates and the inclusion–exclusion series.
//! - [`diagrams`]: configurations, labelled diagrams, realizability and their invariants.
//! - [`estimation`]: reproducible Monte Carlo and exhaustive enumeration.

pub mod combinatorics;
pub mod diagrams;
pub mod estimation;
pub mod table;

pub use combinatorics::Rate;
pub use diagrams::{Configuration, Diagram, DiagramStats};
pub use estimation::{EstimateRecord, SamplerKey};
pub use table::{CellSignature, DeficiencyType, OperationTable, SubsetQuery};
