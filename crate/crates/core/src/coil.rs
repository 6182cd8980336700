//! Excitation by a long solenoid around the z axis.
//!
//! The solenoid field inside the coil is uniform and axial,
//! b_s = μ N I_s / L e_z, and is represented by the symmetric vector
//! potential a_s = ½ b_s (−y, x, 0). The reaction field of the induced
//! currents is neglected, so a_s is known analytically everywhere.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::PiecewiseLinear;

pub const MU_0: f64 = 4.0e-7 * PI;
pub const LIGHT_SPEED: f64 = 299_792_458.0;
/// Rounded light speed used for the wavelength estimate.
pub const LIGHT_SPEED_ROUNDED: f64 = 3.0e8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoilSpec {
    /// Number of turns.
    pub turns: f64,
    /// Coil length (m).
    pub length: f64,
    /// Relative permeability of the filled material.
    pub mu_r: f64,
    /// Constant part `a` of I_s = I₀(t)(a + b sin 2πft).
    pub dc: f64,
    /// Alternating part `b`.
    pub ac: f64,
    /// Frequency f (Hz).
    pub frequency: f64,
    /// Amplitude program I₀(t) (A).
    pub amplitude: PiecewiseLinear,
}

impl Default for CoilSpec {
    fn default() -> Self {
        CoilSpec {
            turns: 1000.0,
            length: 1.0,
            mu_r: 20.0,
            dc: 0.0,
            ac: 1.0,
            frequency: 1000.0,
            amplitude: PiecewiseLinear::constant(0.0),
        }
    }
}

/// Source potential and its time derivative at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SourcePotential {
    pub a: Vector3<f64>,
    pub a_dot: Vector3<f64>,
}

impl CoilSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("turns", self.turns), ("length", self.length), ("frequency", self.frequency)] {
            if !(v > 0.0) {
                return Err(Error::InvalidParameter(format!("coil {name} must be > 0 (got {v})")));
            }
        }
        if !(self.mu_r >= 1.0) {
            return Err(Error::InvalidParameter(format!("coil mu_r must be >= 1 (got {})", self.mu_r)));
        }
        Ok(())
    }

    pub fn mu(&self) -> f64 {
        MU_0 * self.mu_r
    }

    pub fn omega(&self) -> f64 {
        2.0 * PI * self.frequency
    }

    /// Induction per unit current, μN/L (T/A).
    pub fn gain(&self) -> f64 {
        self.mu() * self.turns / self.length
    }

    pub fn current(&self, t: f64) -> Result<f64> {
        let i0 = self.amplitude.eval_strict(t)?;
        Ok(i0 * (self.dc + self.ac * (self.omega() * t).sin()))
    }

    pub fn current_rate(&self, t: f64) -> Result<f64> {
        let i0 = self.amplitude.eval_strict(t)?;
        let di0 = self.amplitude.slope(t);
        let w = self.omega();
        Ok(di0 * (self.dc + self.ac * (w * t).sin()) + i0 * self.ac * w * (w * t).cos())
    }

    /// Axial induction b_s (T).
    pub fn b_source(&self, t: f64) -> Result<f64> {
        Ok(self.gain() * self.current(t)?)
    }

    pub fn b_rate(&self, t: f64) -> Result<f64> {
        Ok(self.gain() * self.current_rate(t)?)
    }

    /// Root mean square of ∂b_s/∂t over one period around `t`, with the
    /// amplitude and its slope held at their values at `t`.
    pub fn b_rate_rms(&self, t: f64) -> Result<f64> {
        let i0 = self.amplitude.eval_strict(t)?;
        let di0 = self.amplitude.slope(t);
        let steady = di0 * self.dc;
        let sine = di0 * self.ac;
        let cosine = i0 * self.ac * self.omega();
        Ok(self.gain() * (steady * steady + 0.5 * (sine * sine + cosine * cosine)).sqrt())
    }

    /// a_s and ∂a_s/∂t at the deformed point `x`.
    pub fn a_source(&self, x: &Vector3<f64>, t: f64) -> Result<SourcePotential> {
        let b = self.b_source(t)?;
        let bd = self.b_rate(t)?;
        Ok(SourcePotential {
            a: potential_for(b, x),
            a_dot: potential_for(bd, x),
        })
    }

    /// Lagrangian source one-form Fᵀ a_s(X + u) and its time derivative
    /// with the displacement frozen.
    pub fn a_source_lagrangian(
        &self,
        x_ref: &Vector3<f64>,
        u: &Vector3<f64>,
        f: &Matrix3<f64>,
        t: f64,
    ) -> Result<SourcePotential> {
        if !(f.determinant() > crate::kinematics::MIN_JACOBIAN) {
            return Err(Error::Inversion(f.determinant()));
        }
        let s = self.a_source(&(x_ref + u), t)?;
        Ok(SourcePotential {
            a: f.transpose() * s.a,
            a_dot: f.transpose() * s.a_dot,
        })
    }
}

/// ½ b (−y, x, 0).
pub fn potential_for(b: f64, x: &Vector3<f64>) -> Vector3<f64> {
    Vector3::new(-0.5 * b * x[1], 0.5 * b * x[0], 0.0)
}

/// Spatial gradient of [`potential_for`]: ∂a_i/∂x_j.
pub fn potential_gradient(b: f64) -> Matrix3<f64> {
    Matrix3::new(0.0, -0.5 * b, 0.0, 0.5 * b, 0.0, 0.0, 0.0, 0.0, 0.0)
}

/// Magnetoquasistatic validity estimates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MqsValidity {
    pub skin_depth: f64,
    /// Free-space wavelength with c = 3e8 m/s.
    pub wavelength: f64,
    /// Wavelength with the in-material speed 1/√(μ ε₀).
    pub wavelength_in_material: f64,
    pub system_length: f64,
    /// δ ≥ L_sys: the field penetrates the device.
    pub skin_depth_ok: bool,
    /// λ ≥ 100 L_sys: wave propagation is negligible.
    pub wavelength_ok: bool,
}

pub fn mqs_validity(coil: &CoilSpec, sigma: f64, mu: f64, l_sys: f64) -> Result<MqsValidity> {
    for (name, v) in [("sigma", sigma), ("mu", mu), ("system length", l_sys), ("frequency", coil.frequency)] {
        if !(v > 0.0) {
            return Err(Error::InvalidParameter(format!("{name} must be > 0 (got {v})")));
        }
    }
    let skin_depth = (2.0 / (mu * sigma * coil.omega())).sqrt();
    let wavelength = LIGHT_SPEED_ROUNDED / coil.frequency;
    let eps0 = 1.0 / (MU_0 * LIGHT_SPEED * LIGHT_SPEED);
    let wavelength_in_material = 1.0 / ((mu * eps0).sqrt() * coil.frequency);
    Ok(MqsValidity {
        skin_depth,
        wavelength,
        wavelength_in_material,
        system_length: l_sys,
        skin_depth_ok: skin_depth >= l_sys,
        wavelength_ok: wavelength >= 100.0 * l_sys,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn coil(i0: f64, dc: f64, ac: f64) -> CoilSpec {
        CoilSpec {
            dc,
            ac,
            amplitude: PiecewiseLinear::constant(i0),
            ..CoilSpec::default()
        }
    }

    #[test]
    fn waveform_cases() {
        let c = coil(2.0, 1.0, 0.0);
        assert_eq!(c.current(0.0).unwrap(), 2.0);
        assert_eq!(c.current(0.37).unwrap(), 2.0);
        let c = coil(1.0, 0.0, 1.0);
        assert!((c.current(1.0 / (4.0 * c.frequency)).unwrap() - 1.0).abs() < 1e-15);
        let c = CoilSpec {
            dc: 1.0,
            ac: 0.0,
            amplitude: PiecewiseLinear::ramp(0.0, 0.0, 1.0, 1.0).unwrap(),
            ..CoilSpec::default()
        };
        assert!((c.current(0.5).unwrap() - 0.5).abs() < 1e-15);
        assert!(matches!(c.current(-0.1), Err(Error::BeforeWaveform { .. })));
    }

    #[test]
    fn solenoid_induction() {
        let c = coil(1.0, 1.0, 0.0);
        // μ0 μr N / L with N = 1000, L = 1 m, μr = 20
        let expected = 4.0e-7 * PI * 20.0 * 1000.0;
        assert!((c.b_source(0.0).unwrap() - expected).abs() < 1e-15);
        assert!((c.b_source(0.0).unwrap() - 2.5133e-2).abs() < 1e-6);
        assert_eq!(coil(0.0, 1.0, 0.0).b_source(0.0).unwrap(), 0.0);
        let mut d = c.clone();
        d.turns *= 2.0;
        assert!((d.b_source(0.0).unwrap() - 2.0 * expected).abs() < 1e-15);
    }

    #[test]
    fn potential_values() {
        let c = coil(1.0, 1.0, 0.0);
        assert_eq!(c.a_source(&Vector3::zeros(), 0.0).unwrap().a, Vector3::zeros());
        let a = c.a_source(&Vector3::new(1e-3, 0.0, 0.0), 0.0).unwrap().a;
        assert!((a[1] - 1.2566e-5).abs() < 1e-9);
        assert_eq!(a[0], 0.0);
    }

    #[test]
    fn curl_of_potential_gradient_is_axial() {
        let g = potential_gradient(0.7);
        let curl = Vector3::new(g[(2, 1)] - g[(1, 2)], g[(0, 2)] - g[(2, 0)], g[(1, 0)] - g[(0, 1)]);
        assert_eq!(curl, Vector3::new(0.0, 0.0, 0.7));
    }

    #[test]
    fn lagrangian_potential() {
        let c = coil(1.0, 0.0, 1.0);
        let t = 1.3e-4;
        let x = Vector3::new(2e-4, -1e-4, 3e-4);
        let plain = c.a_source_lagrangian(&x, &Vector3::zeros(), &Matrix3::identity(), t).unwrap();
        assert_eq!(plain.a, c.a_source(&x, t).unwrap().a);
        let d = Vector3::new(5e-4, 0.0, 0.0);
        let moved = c.a_source_lagrangian(&x, &d, &Matrix3::identity(), t).unwrap();
        assert_eq!(moved.a, c.a_source(&(x + d), t).unwrap().a);
        let f = Matrix3::from_diagonal(&Vector3::new(2.0, 1.0, 1.0));
        let s = c.a_source_lagrangian(&x, &Vector3::zeros(), &f, t).unwrap();
        assert_eq!(s.a[0], 2.0 * plain.a[0]);
        assert_eq!(s.a[1], plain.a[1]);
    }

    #[test]
    fn rate_matches_finite_difference() {
        let c = CoilSpec {
            dc: 0.3,
            ac: 1.0,
            amplitude: PiecewiseLinear::new(&[[0.0, 1.0], [1e-2, 3.0]]).unwrap(),
            ..CoilSpec::default()
        };
        let x = Vector3::new(1e-3, 2e-3, 0.0);
        for &t in &[1.1e-3, 2.7e-3, 7.3e-3] {
            let h = 1e-9;
            let fd = (c.a_source(&x, t + h).unwrap().a - c.a_source(&x, t - h).unwrap().a) / (2.0 * h);
            let an = c.a_source(&x, t).unwrap().a_dot;
            assert!((fd - an).norm() <= 1e-6 * an.norm());
        }
    }

    #[test]
    fn rms_rate_matches_period_average() {
        let c = coil(2.0, 0.0, 1.0);
        let n = 4000;
        let period = 1.0 / c.frequency;
        let mean: f64 = (0..n).map(|k| c.b_rate(k as f64 * period / n as f64).unwrap().powi(2)).sum::<f64>() / n as f64;
        assert!((mean.sqrt() - c.b_rate_rms(0.0).unwrap()).abs() < 1e-9 * mean.sqrt());
    }

    #[test]
    fn validity_with_reference_values() {
        let c = CoilSpec::default();
        let v = mqs_validity(&c, 1e4, c.mu(), 0.02).unwrap();
        assert!((v.skin_depth - 3.56e-2).abs() < 5e-4);
        assert_eq!(v.wavelength, 3.0e5);
        assert!((v.wavelength_in_material - 6.7e4).abs() < 1e3);
        assert!(v.skin_depth_ok && v.wavelength_ok);
        assert!(mqs_validity(&c, 0.0, c.mu(), 0.02).is_err());
    }

    proptest! {
        #[test]
        fn potential_is_odd(x in -1.0f64..1.0, y in -1.0f64..1.0, z in -1.0f64..1.0, b in -2.0f64..2.0) {
            let p = potential_for(b, &Vector3::new(x, y, z));
            let q = potential_for(b, &Vector3::new(-x, -y, z));
            prop_assert_eq!(p, -q);
        }

        #[test]
        fn skin_depth_decreases_with_conductivity(s1 in 1.0f64..1e6, k in 1.01f64..100.0) {
            let c = CoilSpec::default();
            let a = mqs_validity(&c, s1, c.mu(), 1.0).unwrap().skin_depth;
            let b = mqs_validity(&c, s1 * k, c.mu(), 1.0).unwrap().skin_depth;
            prop_assert!(b < a);
        }
    }
}
