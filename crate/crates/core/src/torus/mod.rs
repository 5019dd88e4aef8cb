//! The flat torus, its analytic subsets and their discretizations.

mod field;
mod grid;
mod shape;

pub use field::{block_averages, l1_interface_perimeter, rasterize, BinaryField};
pub use grid::TorusGrid;
pub use shape::{
    ball_laminate_threshold, disk_perimeter, laminate_sequence, parse_shapes, PerimeterEstimate, PerimeterMethod,
    Polytope, ShapeSpec,
};
