pub mod geometry;
pub mod par;
pub mod constants;
pub mod scene;
mod assign;
pub mod disentangle;
pub mod observables;
pub mod reconstruct;
pub mod metricspace;
pub mod io;
pub mod acceptance;
