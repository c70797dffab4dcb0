pub mod checks;
pub mod cli;
pub mod dirichlet;
pub mod error;
pub mod extrapolate;
pub mod halfplane;
pub mod lattice;
pub mod measures;
pub mod montecarlo;
pub mod potential;
pub mod report;

pub use error::{Error, Result};
pub use lattice::{HalfPlaneSet, Site, SiteSet, Window};
