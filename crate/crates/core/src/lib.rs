pub mod labeling;
pub mod ltl;
pub mod map;
pub mod pipeline;
pub mod plan_io;
pub mod planner;
pub mod scenario;
pub mod svg;
pub mod vehicle;
pub mod verify;
