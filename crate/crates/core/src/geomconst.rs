//! Dimensional constants and the small scalar inequalities used by the
//! contact-set arguments.
//!
//! Every constant goes through [`ln_gamma_half`], which evaluates
//! `ln Γ(k/2)` exactly (up to round-off) by the half-integer recurrence, so
//! nothing overflows across the supported range `1..=32`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 32;

/// Intrinsic dimension and codimension of a submanifold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct DimPair {
    pub n: usize,
    pub m: usize,
}

impl DimPair {
    pub const MAX_TOTAL: usize = 16;

    pub fn new(n: usize, m: usize) -> Result<Self> {
        if n == 0 || n + m > Self::MAX_TOTAL {
            return Err(Error::DimensionOutOfRange {
                value: n + m,
                min: 1,
                max: Self::MAX_TOTAL,
            });
        }
        Ok(Self { n, m })
    }

    pub fn ambient(&self) -> usize {
        self.n + self.m
    }
}

fn check_dim(n: usize) -> Result<()> {
    if (1..=MAX_DIM).contains(&n) {
        Ok(())
    } else {
        Err(Error::DimensionOutOfRange {
            value: n,
            min: 1,
            max: MAX_DIM,
        })
    }
}

/// `ln Γ(k/2)` for a positive integer `k`.
///
/// Uses `Γ(1) = 1`, `Γ(1/2) = √π` and `Γ(x + 1) = x Γ(x)`; the sum of logs
/// is accumulated from the smallest term up.
pub fn ln_gamma_half(k: usize) -> f64 {
    assert!(k >= 1, "ln_gamma_half requires k >= 1");
    let (mut acc, mut x) = if k.is_multiple_of(2) { (0.0, 1.0) } else { (0.5 * PI.ln(), 0.5) };
    let target = k as f64 / 2.0;
    while x < target - 0.25 {
        acc += x.ln();
        x += 1.0;
    }
    acc
}

/// Volume of the open unit ball `Bⁿ ⊂ Rⁿ`, `π^{n/2} / Γ(n/2 + 1)`.
pub fn ball_volume(n: usize) -> Result<f64> {
    check_dim(n)?;
    Ok(ln_ball_volume(n).exp())
}

fn ln_ball_volume(n: usize) -> f64 {
    0.5 * n as f64 * PI.ln() - ln_gamma_half(n + 2)
}

/// Area of the unit sphere `Sⁿ ⊂ R^{n+1}`, `2π^{(n+1)/2} / Γ((n+1)/2)`.
pub fn sphere_area(n: usize) -> Result<f64> {
    check_dim(n)?;
    Ok(ln_sphere_area(n).exp())
}

fn ln_sphere_area(n: usize) -> f64 {
    2f64.ln() + 0.5 * (n + 1) as f64 * PI.ln() - ln_gamma_half(n + 1)
}

/// `∫_{|y|<1, y∈R^m} (−⟨a,y⟩)₊ⁿ dy = |B^{n+m}| / |Sⁿ| · |a|ⁿ`.
pub fn codim_moment_integral(n: usize, m: usize, a_norm: f64) -> Result<f64> {
    check_dim(n)?;
    if m == 0 {
        return Err(Error::DimensionOutOfRange {
            value: m,
            min: 1,
            max: MAX_DIM,
        });
    }
    check_dim(n + m)?;
    if !(a_norm >= 0.0) || !a_norm.is_finite() {
        return Err(Error::Domain {
            name: "a_norm",
            value: a_norm,
            reason: "must be finite and nonnegative",
        });
    }
    if a_norm == 0.0 {
        return Ok(0.0);
    }
    let ln_ratio = ln_ball_volume(n + m) - ln_sphere_area(n);
    Ok((ln_ratio + n as f64 * a_norm.ln()).exp())
}

/// Sharp constant `n · ((n+m)|B^{n+m}| / (m|B^m|))^{1/n}`; requires `m ≥ 2`.
pub fn michael_simon_constant(n: usize, m: usize) -> Result<f64> {
    if m < 2 {
        return Err(Error::Hypothesis(format!(
            "the sharp Michael-Simon constant requires codimension m >= 2 (got m = {m})"
        )));
    }
    check_dim(n)?;
    check_dim(n + m)?;
    let ln_inner = ((n + m) as f64).ln() + ln_ball_volume(n + m)
        - (m as f64).ln()
        - ln_ball_volume(m);
    Ok(n as f64 * (ln_inner / n as f64).exp())
}

/// `(m/2)(1 − σ²) − [(1 − s²)^{m/2} − (σ² − s²)₊^{m/2}]`, nonnegative on its
/// domain whenever `m ≥ 2`.
pub fn slab_inequality_margin(s: f64, sigma: f64, m: usize) -> Result<f64> {
    if !(0.0..1.0).contains(&s) {
        return Err(Error::Domain {
            name: "s",
            value: s,
            reason: "must lie in [0, 1)",
        });
    }
    if !(0.0..=1.0).contains(&sigma) {
        return Err(Error::Domain {
            name: "sigma",
            value: sigma,
            reason: "must lie in [0, 1]",
        });
    }
    if m < 2 {
        return Err(Error::Hypothesis(format!(
            "slab inequality needs m >= 2 (got m = {m})"
        )));
    }
    let half_m = m as f64 / 2.0;
    let outer = (1.0 - s * s).powf(half_m);
    let inner = (sigma * sigma - s * s).max(0.0).powf(half_m);
    Ok(half_m * (1.0 - sigma * sigma) - (outer - inner))
}

/// `(4π)^{−k/2} ∫_{R^k} e^{−|ξ|²/4} dξ` by a tensor-product trapezoidal rule
/// on `[−16, 16]^k` with `2^level` panels per axis.
///
/// The integrand factorises, so the k-fold tensor sum is the k-th power of
/// the one-dimensional sum; the value tends to 1 as `level` grows.
pub fn gaussian_mass(k: usize, quadrature_level: u32) -> Result<f64> {
    check_dim(k)?;
    let level = quadrature_level.clamp(2, 24);
    let half_width = 16.0;
    let panels = 1usize << level;
    let h = 2.0 * half_width / panels as f64;
    let norm = (4.0 * PI).sqrt();
    let mut sum = 0.0;
    for i in 0..=panels {
        let t = -half_width + i as f64 * h;
        let w = if i == 0 || i == panels { 0.5 } else { 1.0 };
        sum += w * (-0.25 * t * t).exp();
    }
    let one_d = sum * h / norm;
    Ok(one_d.powi(k as i32))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn ball_volume_small_dimensions() {
        assert!(rel(ball_volume(1).unwrap(), 2.0) < 1e-14);
        assert!(rel(ball_volume(2).unwrap(), PI) < 1e-14);
        assert!(rel(ball_volume(3).unwrap(), 4.0 * PI / 3.0) < 1e-14);
        assert!(rel(ball_volume(4).unwrap(), PI * PI / 2.0) < 1e-14);
        assert!(ball_volume(0).is_err());
        assert!(ball_volume(33).is_err());
    }

    #[test]
    fn sphere_area_small_dimensions() {
        assert!(rel(sphere_area(1).unwrap(), 2.0 * PI) < 1e-14);
        assert!(rel(sphere_area(2).unwrap(), 4.0 * PI) < 1e-14);
        assert!(rel(sphere_area(3).unwrap(), 2.0 * PI * PI) < 1e-14);
    }

    #[test]
    fn ln_gamma_half_matches_factorials() {
        // Γ(5) = 24, Γ(7/2) = 15√π/8
        assert!((ln_gamma_half(10) - 24f64.ln()).abs() < 1e-14);
        assert!((ln_gamma_half(7) - (15.0 * PI.sqrt() / 8.0).ln()).abs() < 1e-14);
    }

    #[test]
    fn moment_integral_closed_values() {
        assert!(rel(codim_moment_integral(1, 2, 1.0).unwrap(), 2.0 / 3.0) < 1e-14);
        assert!(rel(codim_moment_integral(2, 1, 1.0).unwrap(), 1.0 / 3.0) < 1e-14);
        assert_eq!(codim_moment_integral(3, 2, 0.0).unwrap(), 0.0);
        assert!(codim_moment_integral(3, 0, 1.0).is_err());
        assert!(codim_moment_integral(3, 2, -1.0).is_err());
    }

    #[test]
    fn michael_simon_special_cases() {
        assert!(rel(michael_simon_constant(2, 2).unwrap(), 2.0 * PI.sqrt()) < 1e-14);
        assert!(rel(michael_simon_constant(1, 2).unwrap(), 2.0) < 1e-14);
        assert!(matches!(michael_simon_constant(2, 1), Err(Error::Hypothesis(_))));
    }

    #[test]
    fn slab_margin_equality_points() {
        for &s in &[0.0, 0.3, 0.9] {
            for m in 2..6 {
                assert!(slab_inequality_margin(s, 1.0, m).unwrap().abs() < 1e-15);
            }
        }
        assert!(slab_inequality_margin(0.0, 0.0, 2).unwrap().abs() < 1e-15);
        assert!(slab_inequality_margin(1.0, 0.5, 2).is_err());
        assert!(slab_inequality_margin(0.5, 0.5, 1).is_err());
    }

    #[test]
    fn gaussian_mass_converges() {
        assert!((gaussian_mass(1, 10).unwrap() - 1.0).abs() < 1e-10);
        assert!((gaussian_mass(2, 10).unwrap() - 1.0).abs() < 1e-10);
    }
}
