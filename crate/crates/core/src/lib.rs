// `!(x > 0.0)` style checks deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod design;
pub mod detection;
pub mod dynamics;
pub mod ensemble;
pub mod ergodic;
pub mod quadrature;
pub mod stats;
pub mod wavefunction;
