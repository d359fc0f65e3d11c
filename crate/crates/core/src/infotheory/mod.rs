//! Nearest-neighbour information estimates and their significance test.

mod kdtree;
mod ksg;
mod shuffle;

pub use ksg::{estimate_cmi, estimate_mi, SampleCloud};
pub use shuffle::{shuffle_threshold, ShuffleTestConfig};
