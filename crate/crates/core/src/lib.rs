//! Cycle structure of iterated random k-ary maps.
//!
//! A map `f: [m]^k -> [m]` drives the recursion `X_{n+k} = f(X_n, ..., X_{n+k-1})`.
//! The state of the recursion is the sliding window of the last `k` symbols,
//! so every trajectory is eventually periodic on at most `m^k` states. This
//! crate measures the rho shape of such trajectories (tail index `mu`, first
//! repeat index `tau`, period) and compares it with birthday-problem limit laws.
//!
//! Modules:
//!
//! * [`params`] and [`rng`]: problem size, window codec, seeded parallel streams.
//! * [`seqsim`]: trajectories driven by an IID symbol stream, with hazard
//!   instrumentation for `k = 2`.
//! * [`mapgraph`]: explicit random maps and their functional-graph census.
//! * [`oracle`]: exhaustive enumeration for tiny `(m, k)`.
//! * [`theory`]: closed-form reference values and Chen-Stein bounds.
//! * [`stats`]: KS, chi-square, total variation and moment summaries.
//! * [`poisson`]: collision counts among windows versus a Poisson law.

pub mod error;
pub mod exec;
pub mod mapgraph;
pub mod oracle;
pub mod params;
pub mod poisson;
pub mod rng;
pub mod seqsim;
pub mod stats;
pub mod theory;

pub use error::{Error, Result};
pub use params::{Params, WindowCode};
pub use rng::RngStream;
pub use seqsim::RhoResult;
