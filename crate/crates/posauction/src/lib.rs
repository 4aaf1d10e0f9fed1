//! File formats and the `posauction` command-line front end for
//! [`posauction_core`].

pub mod cli;
pub mod io;
pub mod sample;
