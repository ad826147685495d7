//! Exact translational tiling verification over finitely generated abelian
//! groups, p-adic structured line functions, and Sudoku-type board analysis.

pub mod abelian;
pub mod analysis;
pub mod encode;
pub mod error;
pub mod io;
pub mod padic;
pub mod render;
pub mod sudoku;
pub mod tiling;

pub use error::{Error, Result};
