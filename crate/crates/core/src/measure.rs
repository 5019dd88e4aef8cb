//! Volumes and surface areas of unit balls.

use std::f64::consts::PI;

/// Volume of the unit ball in `R^n`.
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * PI / n as f64 * unit_ball_volume(n - 2),
    }
}

/// Surface area of the unit sphere in `R^n`, `n * omega_n`.
pub fn unit_sphere_area(n: usize) -> f64 {
    n as f64 * unit_ball_volume(n)
}

/// `omega_{n-1} / (n omega_n)`: the factor linking the slope of the radial
/// autocorrelation at zero to the perimeter.
pub fn slope_prefactor(n: usize) -> f64 {
    unit_ball_volume(n - 1) / unit_sphere_area(n)
}

/// `n omega_n / (2 omega_{n-1})`, the numerator of the critical coupling.
pub fn critical_prefactor(n: usize) -> f64 {
    0.5 / slope_prefactor(n)
}

/// Perimeter of the ball with volume `theta`.
pub fn ball_perimeter_for_volume(n: usize, theta: f64) -> f64 {
    let omega = unit_ball_volume(n);
    let r = (theta / omega).powf(1.0 / n as f64);
    unit_sphere_area(n) * r.powi(n as i32 - 1)
}
