// Negated comparisons are deliberate: they reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cells;
pub mod cli;
pub mod dendrite;
pub mod devices;
pub mod imaging;
pub mod netlist;
pub mod scalar;
pub mod solver;
