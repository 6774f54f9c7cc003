pub mod collapse;
pub mod complex;
pub mod constants;
pub mod harness;
pub mod homology;
pub mod io;
pub mod sampler;
pub mod treeproc;
