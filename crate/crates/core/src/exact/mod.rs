//! Exact arithmetic building blocks.

pub mod interval;
pub mod linalg;
pub mod matrix;
pub mod multipoly;
pub mod poly;
pub mod sturm;
