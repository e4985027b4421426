//! Numerical and exact-arithmetic laboratory for the damped planar
//! central-force problem `u'' + δu' + c u/|u|³ = 0`.
//!
//! - [`dynamics`]: parameters, states, vector fields, observables, derived bound constants
//! - [`integrator`]: adaptive Dormand–Prince integration in several formulations
//! - [`monitors`]: checks of the momentum law, energy identity, growth and boundedness bounds
//! - [`series`]: exact rational coefficients of the spiraling-orbit asymptotic series
//! - [`closed_form`]: explicit spiraling solutions of the tired-charge model

pub mod dynamics;
pub mod integrator;
pub mod series;
pub mod closed_form;
pub mod monitors;
