pub mod error;
pub mod game;
pub mod learners;
pub mod model;
pub mod oracles;
pub mod process;
pub mod rng;
pub mod verify;
pub mod voting;

pub use error::{Error, Result};
