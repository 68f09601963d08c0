//! Numerical evidence for global injectivity of local diffeomorphisms ℝⁿ → ℝⁿ.
//!
//! The crate scans regularity conditions at infinity (Palais–Smale, Rabier's
//! asymptotic critical values, radial integral conditions, a wedge-ratio
//! condition), the spectral condition, non-properness witnesses and direct
//! collisions, then aggregates them over every `(n-2)`-subset of components.
//! Everything sampling-based is evidence, never proof.

pub mod conditions;
pub mod expr;
pub mod numlin;
pub mod sample;
pub mod scan;
pub mod topology;
pub mod verdict;
