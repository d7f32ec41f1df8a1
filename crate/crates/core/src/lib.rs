pub mod geometry;
pub mod mesh;
pub mod zome_field;
pub mod cli;
pub mod connectors;
pub mod cut_planes;
pub mod partition;
pub mod pipeline;
pub mod report;
pub mod zome_opt;
