//! Footstep planning on piecewise-planar terrain.
//!
//! Contact surfaces are selected and footsteps placed by a mixed-integer
//! program, its L1 relaxation, or either one restricted to the surfaces a
//! guide root trajectory can reach.

pub mod formulation;
pub mod cli;
pub mod geometry;
pub mod guide;
pub mod pipeline;
pub mod reachability;
pub mod scenario;
pub mod solve;

/// Formats a number with 9 significant digits, without trailing zeros.
pub fn format_number(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return if v == 0.0 { "0".into() } else { v.to_string() };
    }
    let rounded: f64 = format!("{v:.8e}").parse().expect("valid float");
    format!("{rounded}")
}
