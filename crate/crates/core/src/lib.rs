pub mod analysis;
pub mod codegen;
pub mod corpus;
pub mod dsl;
pub mod flow;
pub mod model;
pub mod report;
pub mod sim;
