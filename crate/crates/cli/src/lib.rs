//! Command-line front end for the SFWM time-bin simulator.

pub mod commands;
pub mod io;
pub mod manifest;
