//! Discretization and solvers for the weighted p-Laplace equation
//! -div(w|∇u|^{p-2}∇u) = g(u) with Muckenhoupt weights w and nonlinearities
//! that are singular at u = 0.

pub mod case1;
pub mod case2;
pub mod config;
pub mod eigen;
pub mod energy;
pub mod error;
pub mod linalg;
pub mod mesh;
pub mod quadrature;
pub mod run;
pub mod solver;
pub mod weights;

pub use error::{Result, SplError};
