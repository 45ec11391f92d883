pub mod check;
pub mod evolve;
pub mod foliation;
pub mod geometry;
pub mod report;
pub mod shoot;
pub mod spectrum;
