//! Modeling, simulation and decision procedures for parametric timed
//! broadcast protocols: networks of identical timed processes that
//! communicate by non-blocking broadcast, with rational guard constants and
//! timing parameters.

pub mod cli;
pub mod decide;
pub mod encodings;
pub mod model;
pub mod regions;
pub mod semantics;
pub mod textio;
