// mdbook cannot run the listings of a book that depends on a workspace crate,
// so every chapter is pulled in as the docs of an empty module and
// `cargo test --doc` runs them. One module per chapter keeps failures easy to
// trace back to their file.

#[doc = include_str!("src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("src/lrp.md")]
pub mod lrp {}
#[doc = include_str!("src/optimal-lrp.md")]
pub mod optimal_lrp {}
#[doc = include_str!("src/average-precision.md")]
pub mod average_precision {}
#[doc = include_str!("src/metric.md")]
pub mod metric {}
#[doc = include_str!("src/video.md")]
pub mod video {}
#[doc = include_str!("src/formats.md")]
pub mod formats {}
#[doc = include_str!("../README.md")]
pub mod readme {}
