pub mod amalgam;
pub mod catalog;
pub mod certs;
pub mod error;
pub mod game;
pub mod lp;
pub mod maps;
pub mod matrix;
pub mod metric;
pub mod metric_game;
pub mod polytope;
pub mod rational;
pub mod space;
pub mod strategies;
pub mod verify;

pub use error::{Error, Result};
