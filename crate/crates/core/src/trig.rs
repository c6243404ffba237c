//! `sin(pi x)` and `cos(pi x)` with exact zeros at integers and half-integers.
//!
//! Eigenfunctions and window elements are evaluated at arguments such as
//! `n * (x/L + 1/2)`, which hit integers exactly at the walls and for the
//! full-box window. Reducing the argument before multiplying by pi keeps those
//! values exactly zero instead of `~1e-16 * n`.

use std::f64::consts::PI;

fn reduce(x: f64) -> f64 {
    // r in [-1, 1]
    x - 2.0 * (x * 0.5).round()
}

pub(crate) fn sin_pi(x: f64) -> f64 {
    let r = reduce(x);
    if r == 0.0 || r.abs() == 1.0 {
        0.0
    } else if r == 0.5 {
        1.0
    } else if r == -0.5 {
        -1.0
    } else {
        (PI * r).sin()
    }
}

pub(crate) fn cos_pi(x: f64) -> f64 {
    let r = reduce(x);
    if r.abs() == 0.5 {
        0.0
    } else if r == 0.0 {
        1.0
    } else if r.abs() == 1.0 {
        -1.0
    } else {
        (PI * r).cos()
    }
}
