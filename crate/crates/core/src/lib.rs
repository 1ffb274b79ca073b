pub mod centralized;
pub mod decentralized;
pub mod decode;
pub mod gf;
pub mod matrix;
pub mod model;
pub mod ramp;
pub mod rational;
pub mod bounds;
pub mod secrecy;
pub mod harness;
pub mod trace;
pub mod sweep;
