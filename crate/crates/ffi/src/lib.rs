//! C ABI over the graphforms library: opaque handles, status codes, and
//! flat buffers. See the generated `include/graphforms.h`.

pub mod capi;

pub use capi::*;
