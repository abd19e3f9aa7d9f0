#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod basis;
pub mod cli;
pub mod error;
pub mod graph_eval;
pub mod init;
pub mod io;
pub mod matops;
pub mod model;
pub mod objective;
pub mod operators;
pub mod selection;
pub mod solver;
pub mod sweep;
pub mod synth;

pub use error::{Error, Result};
