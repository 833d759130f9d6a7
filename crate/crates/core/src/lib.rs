//! LiDAR-aided prediction of human blockages on indoor mmWave/THz links.
//!
//! The pipeline simulates pedestrians and spinning-LiDAR scans, detects and
//! tracks people in the registered point clouds, forecasts their paths with
//! a recurrent model, and ray-casts the predicted bounding boxes against each
//! transmitter-to-user link to label the upcoming window LOS or NLOS.

pub mod error;
pub mod geometry;

pub use error::{Error, Result};
pub mod scene;
pub mod seed;
pub mod lidar;
pub mod perception;
pub mod tracking;
pub mod trajpred;
pub mod blockage;
pub mod eval;
pub mod cli;
