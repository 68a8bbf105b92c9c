//! General-liability (GL) and other-coverage (OC) triangles for accident
//! years 1..10, plus the realised next calendar diagonal.

use crate::error::Result;
use crate::reserve::{read_next_diagonal, read_triangles, LossTriangle, NextDiagonal};

pub const TRIANGLES_CSV: &str = include_str!("../data/triangles.csv");
pub const NEXT_DIAGONAL_CSV: &str = include_str!("../data/next_diagonal.csv");

pub fn triangles() -> Result<Vec<LossTriangle>> {
    read_triangles(TRIANGLES_CSV.as_bytes())
}

pub fn next_diagonal() -> Result<NextDiagonal> {
    read_next_diagonal(NEXT_DIAGONAL_CSV.as_bytes(), &triangles()?)
}
