//! Shape memory polymer law at a material point.
//!
//! The material is a mixture of a glassy and a rubbery phase with glassy
//! volume fraction z(θ). Deformation present while glass forms is stored in
//! the frozen gradient F_f and released again on heating. Each phase is a
//! St. Venant–Kirchhoff solid; the glassy one carries J2 plasticity:
//!
//! S = z J_f G S_e(GᵀCG) Gᵀ + (1 − z) J_p B S_r(BᵀCB) Bᵀ,
//! G = F_f⁻¹ F_pg⁻¹,  B = F_p⁻¹.

pub mod return_map;

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use self::return_map::{return_map, J2Params};
use crate::error::{Error, Result};
use crate::kinematics::inverse;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MechParams {
    /// Rubbery Young's modulus (Pa).
    pub e_r: f64,
    /// Glassy Young's modulus (Pa).
    pub e_g: f64,
    pub nu_r: f64,
    pub nu_g: f64,
    /// Glassy yield stress (Pa).
    pub r_pg: f64,
    /// Linear isotropic hardening modulus (Pa).
    pub h: f64,
    /// Half width of the transition band (K), used by the schedules.
    pub delta_theta: f64,
    /// Transition temperature (K).
    pub theta_t: f64,
    /// Transition slope (1/K).
    pub w: f64,
    /// Recovery ideality exponent.
    pub c: f64,
    /// Fraction of released frozen strain that turns into rubbery plastic strain.
    pub c_p: f64,
}

impl MechParams {
    /// Single-element cube set.
    pub fn sec() -> Self {
        MechParams {
            e_r: 0.9e6,
            e_g: 771e6,
            nu_r: 0.49,
            nu_g: 0.29,
            r_pg: 10e6,
            h: 0.0,
            delta_theta: 30.0,
            theta_t: 350.0,
            w: 0.2,
            c: 1.0,
            c_p: 0.0,
        }
    }

    /// Stent set.
    pub fn cvs() -> Self {
        MechParams {
            delta_theta: 5.0,
            theta_t: 344.0,
            w: 0.375,
            ..Self::sec()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        for (n, v) in [("e_r", self.e_r), ("e_g", self.e_g), ("r_pg", self.r_pg), ("w", self.w), ("c", self.c)] {
            if !(v > 0.0) {
                return bad(format!("{n} must be > 0 (got {v})"));
            }
        }
        for (n, v) in [("nu_r", self.nu_r), ("nu_g", self.nu_g)] {
            if !(v > 0.0 && v < 0.5) {
                return bad(format!("{n} must lie in (0, 0.5) (got {v})"));
            }
        }
        if !(self.h >= 0.0 && self.c_p >= 0.0 && self.c_p <= 1.0) {
            return bad(format!("need h >= 0 and 0 <= c_p <= 1 (got {}, {})", self.h, self.c_p));
        }
        Ok(())
    }

    fn j2(&self) -> J2Params {
        let (lambda, mu) = lame(self, Phase::Glassy);
        J2Params {
            lambda,
            mu,
            yield_stress: self.r_pg,
            hardening: self.h,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    Glassy,
    Rubbery,
}

pub fn lame_from(e: f64, nu: f64) -> (f64, f64) {
    (e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu)), e / (2.0 * (1.0 + nu)))
}

pub fn lame(params: &MechParams, phase: Phase) -> (f64, f64) {
    match phase {
        Phase::Glassy => lame_from(params.e_g, params.nu_g),
        Phase::Rubbery => lame_from(params.e_r, params.nu_r),
    }
}

/// z(θ) = 1 / (1 + c exp(w (θ − θ_t))) and its derivative.
pub fn glassy_fraction(theta: f64, params: &MechParams) -> (f64, f64) {
    let x = params.w * (theta - params.theta_t);
    if x > 700.0 {
        return (0.0, 0.0);
    }
    let ex = params.c * x.exp();
    let z = 1.0 / (1.0 + ex);
    (z, -params.w * z * (ex / (1.0 + ex)))
}

/// Internal variables of one material point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InternalState {
    pub z_g: f64,
    pub f_f: Matrix3<f64>,
    pub f_p: Matrix3<f64>,
    pub f_pg: Matrix3<f64>,
    /// Accumulated glassy plastic strain.
    pub alpha: f64,
}

impl InternalState {
    pub fn virgin(theta0: f64, params: &MechParams) -> Self {
        InternalState {
            z_g: glassy_fraction(theta0, params).0,
            f_f: Matrix3::identity(),
            f_p: Matrix3::identity(),
            f_pg: Matrix3::identity(),
            alpha: 0.0,
        }
    }
}

/// Committed and trial internal variables of one quadrature point.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadPointState {
    committed: InternalState,
    trial: InternalState,
    converged: bool,
}

impl QuadPointState {
    pub fn new(initial: InternalState) -> Self {
        QuadPointState {
            committed: initial,
            trial: initial,
            converged: false,
        }
    }

    pub fn committed(&self) -> &InternalState {
        &self.committed
    }

    pub fn trial(&self) -> &InternalState {
        &self.trial
    }

    pub fn set_trial(&mut self, s: InternalState) {
        self.trial = s;
        self.converged = false;
    }

    pub fn mark_converged(&mut self) {
        self.converged = true;
    }

    pub fn commit(&mut self) -> Result<()> {
        if !self.converged {
            return Err(Error::Contract("commit of an unconverged material state".into()));
        }
        self.committed = self.trial;
        Ok(())
    }

    pub fn rollback(&mut self) {
        self.trial = self.committed;
        self.converged = false;
    }
}

/// F_f after a change of glassy fraction from `committed.z_g` to `z_new`.
///
/// Cooling stores the current rubbery deformation in proportion to the new
/// glass; heating releases it with the power `c` of the remaining fraction.
pub fn update_frozen(
    committed: &InternalState,
    z_new: f64,
    f_total: &Matrix3<f64>,
    f_p_new: &Matrix3<f64>,
    params: &MechParams,
) -> Result<Matrix3<f64>> {
    let z_old = committed.z_g;
    let dz = z_new - z_old;
    if dz > 0.0 {
        let (fp_inv, _) = inverse(f_p_new)?;
        Ok(committed.f_f + (dz / z_new) * (f_total * fp_inv - committed.f_f))
    } else if dz < 0.0 && z_old > 0.0 {
        let r = (z_new / z_old).powf(params.c);
        Ok(Matrix3::identity() + r * (committed.f_f - Matrix3::identity()))
    } else {
        Ok(committed.f_f)
    }
}

/// Internal variables after the phase change, before plastic flow, and
/// their derivatives with respect to z.
struct PhaseUpdate {
    f_f: Matrix3<f64>,
    f_p: Matrix3<f64>,
    f_pg: Matrix3<f64>,
    /// ∂F_f/∂F contracted: dF_f = `ff_gain` · dF · F_p⁻¹.
    ff_gain: f64,
    dff_dz: Matrix3<f64>,
    dfp_dz: Matrix3<f64>,
    dfpg_dz: Matrix3<f64>,
}

fn phase_update(c: &InternalState, z: f64, f: &Matrix3<f64>, p: &MechParams) -> Result<PhaseUpdate> {
    let dz = z - c.z_g;
    let zero = Matrix3::zeros();
    if dz > 0.0 {
        let f_f = update_frozen(c, z, f, &c.f_p, p)?;
        let (fp_inv, _) = inverse(&c.f_p)?;
        let k = c.z_g / (z * z);
        Ok(PhaseUpdate {
            f_f,
            f_p: c.f_p,
            // new glass is born without plastic deformation
            f_pg: c.f_pg + (dz / z) * (Matrix3::identity() - c.f_pg),
            ff_gain: dz / z,
            dff_dz: k * (f * fp_inv - c.f_f),
            dfp_dz: zero,
            dfpg_dz: k * (Matrix3::identity() - c.f_pg),
        })
    } else if dz < 0.0 && c.z_g > 0.0 {
        let f_f = update_frozen(c, z, f, &c.f_p, p)?;
        let dff_dz = if z > 0.0 {
            p.c * (z / c.z_g).powf(p.c) / z * (c.f_f - Matrix3::identity())
        } else {
            zero
        };
        Ok(PhaseUpdate {
            f_f,
            f_p: c.f_p + p.c_p * (c.f_f - f_f),
            f_pg: c.f_pg,
            ff_gain: 0.0,
            dff_dz,
            dfp_dz: -p.c_p * dff_dz,
            dfpg_dz: zero,
        })
    } else {
        Ok(PhaseUpdate {
            f_f: c.f_f,
            f_p: c.f_p,
            f_pg: c.f_pg,
            ff_gain: 0.0,
            dff_dz: zero,
            dfp_dz: zero,
            dfpg_dz: zero,
        })
    }
}

/// w G S(GᵀCG) Gᵀ for a St. Venant–Kirchhoff law.
fn svk_branch(lambda: f64, mu: f64, f: &Matrix3<f64>, g: &Matrix3<f64>, w: f64) -> Matrix3<f64> {
    let ce = g.transpose() * f.transpose() * f * g;
    let e = 0.5 * (ce - Matrix3::identity());
    let s = Matrix3::identity() * (lambda * e.trace()) + 2.0 * mu * e;
    w * g * s * g.transpose()
}

/// Directional derivative of [`svk_branch`].
#[allow(clippy::too_many_arguments)]
fn svk_branch_dir(
    lambda: f64,
    mu: f64,
    f: &Matrix3<f64>,
    g: &Matrix3<f64>,
    w: f64,
    df: &Matrix3<f64>,
    dg: &Matrix3<f64>,
    dw: f64,
) -> Matrix3<f64> {
    let c = f.transpose() * f;
    let dc = df.transpose() * f + f.transpose() * df;
    let ce = g.transpose() * c * g;
    let e = 0.5 * (ce - Matrix3::identity());
    let s = Matrix3::identity() * (lambda * e.trace()) + 2.0 * mu * e;
    let dce = dg.transpose() * c * g + g.transpose() * dc * g + g.transpose() * c * dg;
    let de = 0.5 * dce;
    let ds = Matrix3::identity() * (lambda * de.trace()) + 2.0 * mu * de;
    dw * g * s * g.transpose() + w * (dg * s * g.transpose() + g * ds * g.transpose() + g * s * dg.transpose())
}

/// Glassy branch J_f G S_e Gᵀ after return mapping.
struct Glassy {
    s: Matrix3<f64>,
    f_pg: Matrix3<f64>,
    alpha: f64,
    plastic: bool,
}

fn glassy(f: &Matrix3<f64>, f_f: &Matrix3<f64>, f_pg0: &Matrix3<f64>, alpha: f64, p: &MechParams) -> Result<Glassy> {
    let j2 = p.j2();
    let (ff_inv, j_f) = inverse(f_f)?;
    let (fpg_inv, _) = inverse(f_pg0)?;
    let g_trial = ff_inv * fpg_inv;
    let c_trial = g_trial.transpose() * f.transpose() * f * g_trial;
    let r = return_map(&c_trial, alpha, &j2)?;
    let g = g_trial * r.factor;
    let (factor_inv, _) = inverse(&r.factor)?;
    Ok(Glassy {
        s: svk_branch(j2.lambda, j2.mu, f, &g, j_f),
        f_pg: factor_inv * f_pg0,
        alpha: alpha + r.delta_gamma,
        plastic: r.plastic,
    })
}

/// Directional derivative of the glassy branch: analytic when the point
/// stays elastic, central differences of the return map otherwise.
#[allow(clippy::too_many_arguments)]
fn glassy_dir(
    f: &Matrix3<f64>,
    f_f: &Matrix3<f64>,
    f_pg0: &Matrix3<f64>,
    alpha: f64,
    p: &MechParams,
    plastic: bool,
    df: &Matrix3<f64>,
    dff: &Matrix3<f64>,
    dfpg: &Matrix3<f64>,
) -> Result<Matrix3<f64>> {
    if !plastic {
        let j2 = p.j2();
        let (ff_inv, j_f) = inverse(f_f)?;
        let (fpg_inv, _) = inverse(f_pg0)?;
        let g = ff_inv * fpg_inv;
        let dg = -ff_inv * dff * g - g * dfpg * fpg_inv;
        let dw = j_f * (ff_inv * dff).trace();
        return Ok(svk_branch_dir(j2.lambda, j2.mu, f, &g, j_f, df, &dg, dw));
    }
    let size = df.norm().max(dff.norm()).max(dfpg.norm());
    if size == 0.0 {
        return Ok(Matrix3::zeros());
    }
    let h = 1e-7 / size.max(1.0);
    let plus = glassy(&(f + h * df), &(f_f + h * dff), &(f_pg0 + h * dfpg), alpha, p)?;
    let minus = glassy(&(f - h * df), &(f_f - h * dff), &(f_pg0 - h * dfpg), alpha, p)?;
    Ok((plus.s - minus.s) / (2.0 * h))
}

/// Fourth-order tensor `t[i][j][k][l]`.
pub type Tensor4 = [[[[f64; 3]; 3]; 3]; 3];

/// Stress and its derivatives at one material point.
#[derive(Clone, Debug, PartialEq)]
pub struct StressTangent {
    /// Second Piola–Kirchhoff stress (Pa).
    pub s: Matrix3<f64>,
    /// ∂S/∂F_kL stored at index 3k + L; includes the dependence of the
    /// frozen gradient on F during cooling.
    pub ds_df: [Matrix3<f64>; 9],
    /// ∂S/∂θ (Pa/K).
    pub ds_dtheta: Matrix3<f64>,
    pub plastic: bool,
}

impl StressTangent {
    /// ∂S/∂E recovered from ∂S/∂F through dE = sym(Fᵀ dF).
    pub fn ds_de(&self, f: &Matrix3<f64>) -> Result<Tensor4> {
        let (fi, _) = inverse(f)?;
        let mut d = [[[[0.0; 3]; 3]; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                for m in 0..3 {
                    for l in 0..3 {
                        d[i][j][m][l] = (0..3).map(|k| fi[(m, k)] * self.ds_df[3 * k + l][(i, j)]).sum();
                    }
                }
            }
        }
        Ok(d)
    }
}

/// Whether [`evaluate`] also computes the derivatives.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Want {
    Stress,
    Tangent,
}

/// Stress of the material point at (F, θ) starting from the committed
/// internal variables, and the resulting trial internal variables.
pub fn evaluate(
    f: &Matrix3<f64>,
    theta: f64,
    committed: &InternalState,
    p: &MechParams,
    want: Want,
) -> Result<(StressTangent, InternalState)> {
    if !(f.determinant() > crate::kinematics::MIN_JACOBIAN) {
        return Err(Error::Inversion(f.determinant()));
    }
    let (z, dz_dtheta) = glassy_fraction(theta, p);
    let up = phase_update(committed, z, f, p)?;
    let gl = glassy(f, &up.f_f, &up.f_pg, committed.alpha, p)?;
    let (lr, mr) = lame(p, Phase::Rubbery);
    let (b, j_p) = inverse(&up.f_p)?;
    let s_r = svk_branch(lr, mr, f, &b, j_p);
    let s = z * gl.s + (1.0 - z) * s_r;
    let trial = InternalState {
        z_g: z,
        f_f: up.f_f,
        f_p: up.f_p,
        f_pg: gl.f_pg,
        alpha: gl.alpha,
    };
    let mut out = StressTangent {
        s,
        ds_df: [Matrix3::zeros(); 9],
        ds_dtheta: Matrix3::zeros(),
        plastic: gl.plastic,
    };
    if want == Want::Stress {
        return Ok((out, trial));
    }
    let zero = Matrix3::zeros();
    for k in 0..3 {
        for l in 0..3 {
            let mut df = Matrix3::zeros();
            df[(k, l)] = 1.0;
            let dff = up.ff_gain * df * b;
            let dg = if z > 0.0 {
                glassy_dir(f, &up.f_f, &up.f_pg, committed.alpha, p, gl.plastic, &df, &dff, &zero)?
            } else {
                zero
            };
            let dr = svk_branch_dir(lr, mr, f, &b, j_p, &df, &zero, 0.0);
            out.ds_df[3 * k + l] = z * dg + (1.0 - z) * dr;
        }
    }
    if dz_dtheta != 0.0 {
        let dg = if z > 0.0 {
            glassy_dir(f, &up.f_f, &up.f_pg, committed.alpha, p, gl.plastic, &zero, &up.dff_dz, &up.dfpg_dz)?
        } else {
            zero
        };
        let db = -b * up.dfp_dz * b;
        let dwp = j_p * (b * up.dfp_dz).trace();
        let dr = svk_branch_dir(lr, mr, f, &b, j_p, &zero, &db, dwp);
        out.ds_dtheta = dz_dtheta * (gl.s - s_r + z * dg + (1.0 - z) * dr);
    }
    Ok((out, trial))
}

/// [`evaluate`] with derivatives.
pub fn return_mapping(
    f: &Matrix3<f64>,
    theta: f64,
    committed: &InternalState,
    p: &MechParams,
) -> Result<(StressTangent, InternalState)> {
    evaluate(f, theta, committed, p, Want::Tangent)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::von_mises;
    use nalgebra::{Rotation3, Unit, Vector3};
    use proptest::prelude::*;

    fn stress(f: &Matrix3<f64>, theta: f64, c: &InternalState, p: &MechParams) -> Matrix3<f64> {
        evaluate(f, theta, c, p, Want::Stress).unwrap().0.s
    }

    fn fd_ds_df(f: &Matrix3<f64>, theta: f64, c: &InternalState, p: &MechParams, h: f64) -> [Matrix3<f64>; 9] {
        let mut out = [Matrix3::zeros(); 9];
        for k in 0..3 {
            for l in 0..3 {
                let mut d = Matrix3::zeros();
                d[(k, l)] = h;
                out[3 * k + l] = (stress(&(f + d), theta, c, p) - stress(&(f - d), theta, c, p)) / (2.0 * h);
            }
        }
        out
    }

    fn rel_err(a: &[Matrix3<f64>; 9], b: &[Matrix3<f64>; 9]) -> f64 {
        let scale = b.iter().map(|m| m.norm()).fold(0.0, f64::max);
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max) / scale
    }

    #[test]
    fn lame_constants() {
        let p = MechParams::sec();
        let (l, m) = lame(&p, Phase::Rubbery);
        assert!((l / 1e6 - 14.80).abs() < 5e-3 && (m / 1e6 - 0.302).abs() < 5e-4);
        let (l, m) = lame(&p, Phase::Glassy);
        assert!((l / 1e6 - 412.7).abs() < 0.05 && (m / 1e6 - 298.8).abs() < 0.05);
        assert_eq!(lame_from(2.0, 0.0), (0.0, 1.0));
    }

    #[test]
    fn glassy_fraction_values() {
        let p = MechParams::sec();
        assert_eq!(glassy_fraction(350.0, &p).0, 0.5);
        let z = glassy_fraction(380.0, &p).0;
        assert!((z - 1.0 / (1.0 + 6f64.exp())).abs() < 1e-15);
        assert!((z - 2.47e-3).abs() < 1e-5);
        assert!(1.0 - glassy_fraction(p.theta_t - 10.0 * p.delta_theta, &p).0 < 1e-8);
        let q = MechParams::cvs();
        assert!(1.0 - glassy_fraction(q.theta_t - 10.0 * q.delta_theta, &q).0 < 1e-8);
        assert_eq!(glassy_fraction(1e6, &p), (0.0, 0.0));
    }

    #[test]
    fn frozen_update_cases() {
        let p = MechParams::sec();
        let fhat = Matrix3::new(1.1, 0.02, 0.0, 0.0, 0.95, 0.0, 0.01, 0.0, 1.0);
        let mut c = InternalState::virgin(400.0, &p);
        c.z_g = 0.3;
        c.f_f = fhat;
        let same = update_frozen(&c, 0.3, &Matrix3::identity(), &Matrix3::identity(), &p).unwrap();
        assert_eq!(same, fhat);
        c.z_g = 0.0;
        c.f_f = Matrix3::identity();
        assert_eq!(update_frozen(&c, 1.0, &fhat, &Matrix3::identity(), &p).unwrap(), fhat);
        c.z_g = 1.0;
        c.f_f = fhat;
        assert_eq!(update_frozen(&c, 0.0, &Matrix3::identity(), &Matrix3::identity(), &p).unwrap(), Matrix3::identity());
        c.z_g = 0.0;
        assert_eq!(update_frozen(&c, 0.0, &Matrix3::identity(), &Matrix3::identity(), &p).unwrap(), fhat);
    }

    #[test]
    fn small_strain_rubbery_uniaxial_stress() {
        let p = MechParams::sec();
        let theta = 450.0;
        let c = InternalState::virgin(theta, &p);
        let eps = 1e-4;
        // find the lateral stretch that makes S_xx = S_zz = 0
        let s_of = |a: f64| stress(&Matrix3::from_diagonal(&Vector3::new(a, 1.0 + eps, a)), theta, &c, &p);
        let mut a = 1.0;
        for _ in 0..20 {
            let h = 1e-9;
            let d = (s_of(a + h)[(0, 0)] - s_of(a - h)[(0, 0)]) / (2.0 * h);
            a -= s_of(a)[(0, 0)] / d;
        }
        let s = s_of(a);
        assert!(s[(0, 0)].abs() < 1e-6);
        assert!((s[(1, 1)] / (p.e_r * eps) - 1.0).abs() < 0.01, "S_yy = {}", s[(1, 1)]);
    }

    #[test]
    fn elastic_glassy_step_keeps_plastic_variables() {
        let p = MechParams::sec();
        let c = InternalState::virgin(200.0, &p);
        let f = Matrix3::new(1.001, 0.002, 0.0, 0.0, 0.999, 0.0, 0.0, 0.0, 1.0);
        let (st, trial) = return_mapping(&f, 200.0, &c, &p).unwrap();
        assert!(!st.plastic);
        assert_eq!(trial.f_pg, c.f_pg);
        assert_eq!(trial.alpha, 0.0);
    }

    #[test]
    fn elastic_tangent_matches_finite_differences() {
        let p = MechParams::sec();
        let f = Matrix3::new(1.012, 0.003, -0.002, 0.001, 1.016, 0.002, 0.0, 0.002, 1.011);
        for theta in [200.0, 340.0, 355.0, 420.0] {
            let mut c = InternalState::virgin(theta, &p);
            c.f_f = Matrix3::new(1.01, 0.0, 0.003, 0.0, 1.02, 0.0, 0.0, 0.0, 1.01);
            let (st, _) = return_mapping(&f, theta, &c, &p).unwrap();
            assert!(!st.plastic);
            let fd = fd_ds_df(&f, theta, &c, &p, 1e-7);
            assert!(rel_err(&st.ds_df, &fd) < 2e-4, "theta {theta}: {}", rel_err(&st.ds_df, &fd));
        }
    }

    #[test]
    fn cooling_and_heating_tangents_match_finite_differences() {
        let p = MechParams::sec();
        let f = Matrix3::new(1.05, 0.01, 0.0, 0.0, 0.97, 0.0, 0.0, 0.0, 1.0);
        let mut c = InternalState::virgin(352.0, &p);
        c.f_f = Matrix3::new(1.02, 0.0, 0.0, 0.01, 0.99, 0.0, 0.0, 0.0, 1.0);
        for theta in [349.0, 355.0] {
            let (st, _) = return_mapping(&f, theta, &c, &p).unwrap();
            let fd = fd_ds_df(&f, theta, &c, &p, 1e-7);
            assert!(rel_err(&st.ds_df, &fd) < 2e-4, "theta {theta}");
            let h = 1e-5;
            let fd_t = (stress(&f, theta + h, &c, &p) - stress(&f, theta - h, &c, &p)) / (2.0 * h);
            assert!((st.ds_dtheta - fd_t).norm() <= 1e-4 * fd_t.norm(), "theta {theta}");
        }
    }

    #[test]
    fn plastic_tangent_matches_finite_differences() {
        let p = MechParams::sec();
        let c = InternalState::virgin(200.0, &p);
        let f = Matrix3::new(1.0, 0.08, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0);
        let (st, _) = return_mapping(&f, 200.0, &c, &p).unwrap();
        assert!(st.plastic);
        let fd = fd_ds_df(&f, 200.0, &c, &p, 1e-7);
        assert!(rel_err(&st.ds_df, &fd) < 5e-3);
    }

    #[test]
    fn tangent_has_minor_symmetries_on_elastic_steps() {
        let p = MechParams::sec();
        let f = Matrix3::new(1.004, 0.002, 0.0, 0.0, 0.998, 0.001, 0.0, 0.0, 1.0);
        let c = InternalState::virgin(330.0, &p);
        let (st, _) = return_mapping(&f, 330.0, &c, &p).unwrap();
        let d = st.ds_de(&f).unwrap();
        let scale = p.e_g;
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    for l in 0..3 {
                        assert!((d[i][j][k][l] - d[j][i][k][l]).abs() <= 1e-10 * scale);
                        assert!((d[i][j][k][l] - d[i][j][l][k]).abs() <= 1e-10 * scale);
                    }
                }
            }
        }
    }

    #[test]
    fn mixing_limits() {
        let p = MechParams::sec();
        let f = Matrix3::new(1.02, 0.01, 0.0, 0.0, 0.99, 0.01, 0.0, 0.0, 1.0);
        let (lr, mr) = lame(&p, Phase::Rubbery);
        let (lg, mg) = lame(&p, Phase::Glassy);
        let hot = InternalState::virgin(1e4, &p);
        let s_hot = stress(&f, 1e4, &hot, &p);
        assert_eq!(s_hot, svk_branch(lr, mr, &f, &Matrix3::identity(), 1.0));
        let mut cold_params = p;
        cold_params.r_pg = 1e12;
        let cold = InternalState::virgin(0.0, &cold_params);
        assert_eq!(glassy_fraction(0.0, &cold_params).0, 1.0);
        let s_cold = stress(&f, 0.0, &cold, &cold_params);
        assert!((s_cold - svk_branch(lg, mg, &f, &Matrix3::identity(), 1.0)).norm() < 1e-12 * s_cold.norm());
    }

    #[test]
    fn perfect_plasticity_plateau_in_simple_shear() {
        let p = MechParams::sec();
        let theta = 200.0;
        let mut state = QuadPointState::new(InternalState::virgin(theta, &p));
        let mut vm = 0.0;
        for k in 1..=40 {
            let gamma = 0.2 * k as f64 / 40.0;
            let f = Matrix3::new(1.0, gamma, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0);
            let (st, trial) = return_mapping(&f, theta, state.committed(), &p).unwrap();
            state.set_trial(trial);
            state.mark_converged();
            state.commit().unwrap();
            let sigma = f * st.s * f.transpose() / f.determinant();
            vm = von_mises(&sigma);
        }
        assert!((vm / p.r_pg - 1.0).abs() < 1e-6, "vM = {vm}");
    }

    #[test]
    fn commit_contract() {
        let p = MechParams::sec();
        let mut q = QuadPointState::new(InternalState::virgin(300.0, &p));
        let f = Matrix3::new(1.0, 0.05, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0);
        let (_, trial) = return_mapping(&f, 300.0, q.committed(), &p).unwrap();
        q.set_trial(trial);
        assert!(matches!(q.commit(), Err(Error::Contract(_))));
        let before = *q.committed();
        q.rollback();
        assert_eq!(*q.committed(), before);
        q.set_trial(trial);
        q.mark_converged();
        q.commit().unwrap();
        let once = q.clone();
        q.mark_converged();
        q.commit().unwrap();
        assert_eq!(q, once);
        let a = evaluate(&f, 300.0, q.committed(), &p, Want::Tangent).unwrap();
        let b = evaluate(&f, 300.0, q.committed(), &p, Want::Tangent).unwrap();
        assert_eq!(a, b);
    }

    /// Uniaxial stress driver: returns (F, S) with S_xx = S_zz = 0 and the
    /// axial stretch given, or S_yy = 0 too when `axial` is None.
    fn uniaxial(theta: f64, c: &InternalState, p: &MechParams, axial: Option<f64>, guess: [f64; 2]) -> (Matrix3<f64>, InternalState, [f64; 2]) {
        let mut x = guess;
        let build = |x: [f64; 2]| Matrix3::from_diagonal(&Vector3::new(x[0], axial.unwrap_or(x[1]), x[0]));
        let resid_with = |x: [f64; 2], q: &MechParams| {
            let s = stress(&build(x), theta, c, q);
            [s[(0, 0)], if axial.is_some() { 0.0 } else { s[(1, 1)] }]
        };
        let resid = |x: [f64; 2]| resid_with(x, p);
        // iteration matrix from the elastic response: perfectly plastic glass
        // has no stiffness along the flow and Newton would overshoot
        let elastic = MechParams { r_pg: 1e30, ..*p };
        for _ in 0..500 {
            let r = resid(x);
            let h = 1e-8;
            let mut jac = nalgebra::Matrix2::zeros();
            for j in 0..2 {
                let mut xp = x;
                let mut xm = x;
                xp[j] += h;
                xm[j] -= h;
                let (rp, rm) = (resid_with(xp, &elastic), resid_with(xm, &elastic));
                for i in 0..2 {
                    jac[(i, j)] = (rp[i] - rm[i]) / (2.0 * h);
                }
            }
            if axial.is_some() {
                jac[(1, 1)] = 1.0;
            }
            let dx = jac.lu().solve(&nalgebra::Vector2::new(-r[0], -r[1])).unwrap();
            x = [x[0] + dx[0], x[1] + dx[1]];
            if resid(x)[0].hypot(resid(x)[1]) < 1e-4 {
                break;
            }
        }
        assert!(resid(x)[0].hypot(resid(x)[1]) < 1e-4, "driver did not converge at {theta} K");
        let f = build(x);
        let (_, trial) = evaluate(&f, theta, c, p, Want::Stress).unwrap();
        (f, trial, x)
    }

    #[test]
    fn shape_memory_cycle_at_a_material_point() {
        let p = MechParams::sec();
        let eps0 = 0.1;
        let mut c = InternalState::virgin(400.0, &p);
        let mut x = [1.0, 1.0];
        for k in 1..=10 {
            let (_, t, xn) = uniaxial(400.0, &c, &p, Some(1.0 + eps0 * k as f64 / 10.0), x);
            c = t;
            x = xn;
        }
        for k in 1..=40 {
            let theta = 400.0 - 200.0 * k as f64 / 40.0;
            let (_, t, xn) = uniaxial(theta, &c, &p, Some(1.0 + eps0), x);
            c = t;
            x = xn;
        }
        let (f, t, xn) = uniaxial(200.0, &c, &p, None, [x[0], 1.0 + eps0]);
        c = t;
        x = xn;
        let fixity = (f[(1, 1)] - 1.0) / eps0;
        assert!(fixity >= 0.9, "fixity {fixity}");
        for k in 1..=40 {
            let theta = 200.0 + 200.0 * k as f64 / 40.0;
            let (_, t, xn) = uniaxial(theta, &c, &p, None, x);
            c = t;
            x = xn;
        }
        let residual = (x[1] - 1.0).abs() / eps0;
        assert!(residual <= 0.01, "residual {residual}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn stress_is_objective(
            a in proptest::array::uniform9(-0.05f64..0.05),
            ax in proptest::array::uniform3(-1.0f64..1.0),
            angle in 0.0f64..3.0,
            theta in 250.0f64..450.0,
        ) {
            prop_assume!(Vector3::from(ax).norm() > 1e-3);
            let p = MechParams::sec();
            let c = InternalState::virgin(theta, &p);
            let f = Matrix3::identity() + Matrix3::from_row_slice(&a);
            let r = *Rotation3::from_axis_angle(&Unit::new_normalize(Vector3::from(ax)), angle).matrix();
            let s1 = stress(&f, theta, &c, &p);
            let s2 = stress(&(r * f), theta, &c, &p);
            prop_assert!((s1 - s2).norm() <= 1e-10 * s1.norm().max(1.0));
        }

        #[test]
        fn glassy_fraction_is_monotone_with_exact_derivative(t1 in 200.0f64..500.0, dt in 0.01f64..50.0) {
            let p = MechParams::cvs();
            let (z1, d1) = glassy_fraction(t1, &p);
            let (z2, _) = glassy_fraction(t1 + dt, &p);
            prop_assert!(z2 <= z1 && (0.0..=1.0).contains(&z1));
            let h = 1e-4;
            let fd = (glassy_fraction(t1 + h, &p).0 - glassy_fraction(t1 - h, &p).0) / (2.0 * h);
            prop_assert!((fd - d1).abs() <= 1e-6 * d1.abs() + 1e-11);
        }
    }
}
