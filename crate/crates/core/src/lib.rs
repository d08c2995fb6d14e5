//! Story-driven infographic engine.

pub mod blueprint;
pub mod document;
pub mod model;
pub mod recommend;
pub mod chart;
pub mod pipeline;
pub mod provider;
pub mod render;
