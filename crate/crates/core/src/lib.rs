//! Numerical toolkit for free and perturbed Schrodinger resolvents in three
//! dimensions on periodic grids.

pub mod caps;
pub mod endpoint;
pub mod error;
pub mod family;
pub mod free_resolvent;
pub mod grid;
pub mod numerics;
pub mod opnorm;
pub mod perturbed;
pub mod sphere;

pub use error::{Error, Result};
pub use grid::{make_grid, Direction, Domain, Field, Grid3, C64};
