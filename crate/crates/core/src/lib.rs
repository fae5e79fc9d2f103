//! Capacity-memory tradeoff bounds and coding simulators for packet-erasure
//! broadcast channels in which only the weaker receivers carry caches.
//!
//! * [`model`]: scenarios, demand vectors and libraries.
//! * [`bounds`]: closed-form lower and upper bounds on `C(M)`.
//! * [`cache_codec`]: coded-caching placement, XOR delivery and decoding.
//! * [`erasure_net`]: the erasure broadcast channel and random linear codes.
//! * [`joint_scheme`]: end-to-end joint cache-channel coding.
//! * [`all_equal`]: the rate-memory region when every receiver wants the same file.

pub mod all_equal;
pub mod bits;
pub mod bounds;
pub mod cache_codec;
pub mod erasure_net;
pub mod figures;
pub mod joint_scheme;
pub mod model;
pub mod report;
pub mod seed;

/// Shared absolute tolerance for comparisons of rates and memories.
pub const TOL: f64 = 1e-9;
