pub mod cli;
pub mod congruence;
pub mod expr;
pub mod fixtures;
pub mod io;
pub mod matrix;
pub mod poisson;
pub mod verify;
