//! Persistence, rendering, scripting, command line and HTTP front end for
//! `tensegrid-core`.

pub mod cli;
pub mod document;
pub mod render;
pub mod script;
pub mod server;
pub mod session;
