use std::f64::consts::{PI, TAU};

/// Reduces an angle to `[0, 2pi)`.
pub fn wrap_2pi(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    // rem_euclid can round up to exactly 2pi for tiny negative inputs
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Reduces an angle to `(-pi, pi]`.
pub fn wrap_pi(a: f64) -> f64 {
    let r = wrap_2pi(a);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Length of the shorter arc between two angles, in `[0, pi]`.
pub fn arc_distance(a: f64, b: f64) -> f64 {
    wrap_pi(a - b).abs()
}
