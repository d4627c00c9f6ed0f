//! Lower bounds of φ-divergences in terms of mean deviations and integral
//! probability metrics, computed through convex duality.
//!
//! The pipeline is: a divergence generator ([`divergences::PhiSpec`]) and a
//! pushforward distribution ([`measures::PushforwardDist`]) give a cumulant
//! generating function ([`cgf`]); its conjugate is the optimal lower bound
//! ([`bounds`]). The total-variation case goes through the height-for-width
//! function ([`vajda`]).

pub mod bounds;
pub mod cgf;
pub mod checks;
pub mod convex;
pub mod divergences;
pub mod extreal;
pub mod io;
pub mod measures;
pub mod par;
pub mod vajda;

pub use extreal::ExtReal;
