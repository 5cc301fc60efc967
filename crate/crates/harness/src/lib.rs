//! Inputs, generators, drift streams and experiment runs for `te-core`.

pub mod experiment;
pub mod gen;
pub mod io;
pub mod stream;
