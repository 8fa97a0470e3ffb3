//! File formats, experiment harness and command-line front end for
//! [`mfanneal_core`].

pub mod cli;
pub mod harness;
pub mod io;
