//! Wire and file formats: PPM rasters, CSV traces, the model file, and
//! the JSONL record streams.

pub mod lexicon;
pub mod model;
pub mod ppm;
pub mod records;
pub mod segmentation;
pub mod trace;
