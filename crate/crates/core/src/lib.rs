pub mod analytic;
pub mod elements;
pub mod formulation;
pub mod geometry;
pub mod operators;
