//! Numerical toolkit for periodic homogenization of fully nonlinear elliptic
//! equations with oscillating Neumann data on half-spaces and bounded
//! domains.

pub mod cell;
pub mod directions;
pub mod domain;
pub mod error;
pub mod expr;
pub mod fbar;
pub mod grid;
pub mod ident;
pub mod linalg;
pub mod multiscale;
pub mod operators;
pub mod solver;

pub use directions::{classify_direction, nearest_lattice_translate, Direction, RationalityCertificate};
pub use error::{Error, Result};
pub use expr::{Expr, PeriodicExpr};
pub use grid::{build_domain_grid, build_strip_grid, DomainGrid, Field, LevelSet, StripGrid};
pub use operators::{check_ellipticity, eval_operator, NeumannData, OperatorKind, OperatorSpec, SymmetricMatrix2};
pub use solver::{solve_strip, solve_system, SolveConfig, SolveStats};
