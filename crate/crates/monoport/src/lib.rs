//! Netlist and run-file formats, CSV output and the `monoport` command-line
//! front end over [`monoport_core`].

pub mod check;
pub mod cli;
mod error;
pub mod netlist;
pub mod output;
pub mod runspec;

pub use error::{Error, Result};
