//! Directions on the unit sphere and the frame co-rotating with a precessing
//! field.

use std::f64::consts::{PI, TAU};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Angles closer than this to a pole are treated as being on it.
pub const POLE_TOLERANCE: f64 = 1e-12;

/// A unit vector given by its polar angle `theta` and azimuth `phi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    theta: f64,
    phi: f64,
}

impl Direction {
    /// `theta` must lie in `[0, π]`; `phi` is reduced to `[0, 2π)`.
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if !theta.is_finite() || !phi.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "direction angles must be finite (theta={theta}, phi={phi})"
            )));
        }
        if !(0.0..=PI).contains(&theta) {
            return Err(Error::InvalidArgument(format!(
                "polar angle {theta} outside [0, pi]"
            )));
        }
        Ok(Self {
            theta,
            phi: phi.rem_euclid(TAU),
        })
    }

    pub fn z() -> Self {
        Self { theta: 0.0, phi: 0.0 }
    }

    /// Direction of a nonzero cartesian vector. At the poles the azimuth is 0.
    pub fn from_cartesian(v: &Vector3<f64>) -> Result<Self> {
        let norm = v.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::DegenerateField { index: 0 });
        }
        let rho = v.x.hypot(v.y);
        let theta = rho.atan2(v.z);
        let phi = if rho == 0.0 { 0.0 } else { v.y.atan2(v.x) };
        Self::new(theta, phi)
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn cartesian(&self) -> Vector3<f64> {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        Vector3::new(st * cp, st * sp, ct)
    }

    pub fn is_polar(&self) -> bool {
        self.theta.sin().abs() < POLE_TOLERANCE
    }
}

/// Orthonormal triad `(e1, e2, e3)` adapted to the precessing direction
/// `e3 = (sinΘ₀cosΦ, sinΘ₀sinΦ, cosΘ₀)`.
///
/// `e1` points along increasing polar angle and `e2` along increasing
/// azimuth, so that `e1 × e2 = e3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptedFrame {
    pub e1: Vector3<f64>,
    pub e2: Vector3<f64>,
    pub e3: Vector3<f64>,
}

impl AdaptedFrame {
    /// Cartesian vector with adapted-frame components `c`.
    pub fn compose(&self, c: [f64; 3]) -> Vector3<f64> {
        self.e1 * c[0] + self.e2 * c[1] + self.e3 * c[2]
    }

    /// Adapted-frame components of the cartesian vector `v`.
    pub fn components(&self, v: &Vector3<f64>) -> [f64; 3] {
        [self.e1.dot(v), self.e2.dot(v), self.e3.dot(v)]
    }
}

/// Frame adapted to the precessing direction at polar angle `theta0` and
/// azimuth `phi`. Fails at the poles, where the azimuthal direction is
/// undefined.
pub fn adapted_frame(theta0: f64, phi: f64) -> Result<AdaptedFrame> {
    check_off_pole(theta0)?;
    Ok(adapted_frame_unchecked(theta0, phi))
}

pub(crate) fn check_off_pole(theta0: f64) -> Result<()> {
    if !theta0.is_finite() || theta0 <= 0.0 || theta0 >= PI || theta0.sin() < POLE_TOLERANCE {
        return Err(Error::PoleSingularity { theta: theta0 });
    }
    Ok(())
}

pub(crate) fn adapted_frame_unchecked(theta0: f64, phi: f64) -> AdaptedFrame {
    let (st, ct) = theta0.sin_cos();
    let (sp, cp) = phi.sin_cos();
    AdaptedFrame {
        e1: Vector3::new(ct * cp, ct * sp, -st),
        e2: Vector3::new(-sp, cp, 0.0),
        e3: Vector3::new(st * cp, st * sp, ct),
    }
}

/// A right-handed frame whose third axis is `n`. Away from the poles this is
/// the adapted frame; at the poles the transverse axes are fixed to `x̂` and
/// `±ŷ`.
pub fn transverse_frame(n: &Direction) -> AdaptedFrame {
    if !n.is_polar() {
        return adapted_frame_unchecked(n.theta(), n.phi());
    }
    let s = if n.theta() < PI / 2.0 { 1.0 } else { -1.0 };
    AdaptedFrame {
        e1: Vector3::x(),
        e2: Vector3::y() * s,
        e3: Vector3::z() * s,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &Vector3<f64>, b: &Vector3<f64>) -> bool {
        (a - b).norm() < 1e-12
    }

    #[test]
    fn equatorial_frame_at_zero_azimuth() {
        let f = adapted_frame(PI / 2.0, 0.0).unwrap();
        assert!(close(&f.e1, &Vector3::new(0.0, 0.0, -1.0)));
        assert!(close(&f.e2, &Vector3::new(0.0, 1.0, 0.0)));
        assert!(close(&f.e3, &Vector3::new(1.0, 0.0, 0.0)));
    }

    #[test]
    fn e3_at_quarter_turn() {
        let f = adapted_frame(PI / 4.0, PI / 2.0).unwrap();
        let h = 2f64.sqrt() / 2.0;
        assert!(close(&f.e3, &Vector3::new(0.0, h, h)));
    }

    #[test]
    fn poles_are_rejected() {
        assert!(matches!(adapted_frame(0.0, 1.0), Err(Error::PoleSingularity { .. })));
        assert!(matches!(adapted_frame(PI, 1.0), Err(Error::PoleSingularity { .. })));
    }

    #[test]
    fn direction_round_trip() {
        let d = Direction::new(0.7, 5.9).unwrap();
        let back = Direction::from_cartesian(&(d.cartesian() * 3.0)).unwrap();
        assert!((back.theta() - 0.7).abs() < 1e-12);
        assert!((back.phi() - 5.9).abs() < 1e-12);
        assert!((d.cartesian().norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn polar_transverse_frames_are_right_handed() {
        for theta in [0.0, PI] {
            let f = transverse_frame(&Direction::new(theta, 0.0).unwrap());
            assert!(close(&f.e1.cross(&f.e2), &f.e3));
            assert!(close(&f.e3, &Direction::new(theta, 0.0).unwrap().cartesian()));
        }
    }

    proptest::proptest! {
        #[test]
        fn frame_is_orthonormal_and_right_handed(theta in 1e-3..(PI - 1e-3), phi in -10.0..10.0f64) {
            let f = adapted_frame(theta, phi).unwrap();
            proptest::prop_assert!(f.e1.dot(&f.e2).abs() < 1e-12);
            proptest::prop_assert!(f.e1.dot(&f.e3).abs() < 1e-12);
            proptest::prop_assert!(f.e2.dot(&f.e3).abs() < 1e-12);
            for e in [f.e1, f.e2, f.e3] {
                proptest::prop_assert!((e.norm() - 1.0).abs() < 1e-12);
            }
            proptest::prop_assert!((f.e1.cross(&f.e2) - f.e3).norm() < 1e-12);
            let c = f.components(&f.compose([0.3, -1.2, 2.0]));
            proptest::prop_assert!((c[0] - 0.3).abs() < 1e-12 && (c[1] + 1.2).abs() < 1e-12);
        }
    }
}
