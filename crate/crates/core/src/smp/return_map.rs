//! J2 return mapping for a St. Venant–Kirchhoff glassy branch with
//! multiplicative plasticity, in the principal frame of the trial elastic
//! right Cauchy–Green tensor.
//!
//! The plastic update uses the exponential map, so with isotropy the
//! logarithmic elastic stretches satisfy e = e_tr − Δγ N with the flow
//! direction N = 3/2 dev(M)/q taken from the Mandel stress M = C_e S_e.

use nalgebra::{Matrix3, Matrix4, SymmetricEigen, Vector3, Vector4};

use crate::error::{Error, Result};

pub const MAX_ITERATIONS: usize = 50;

#[derive(Clone, Copy, Debug)]
pub struct J2Params {
    pub lambda: f64,
    pub mu: f64,
    pub yield_stress: f64,
    pub hardening: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct ReturnResult {
    /// Plastic update factor exp(−Δγ N): G_new = G_trial · factor.
    pub factor: Matrix3<f64>,
    pub delta_gamma: f64,
    pub plastic: bool,
    pub iterations: usize,
}

/// Principal Mandel stresses c_i (λ tr E + μ (c_i − 1)).
fn mandel(c: &Vector3<f64>, p: &J2Params) -> Vector3<f64> {
    let tr_e = 0.5 * (c.sum() - 3.0);
    c.map(|ci| ci * (p.lambda * tr_e + p.mu * (ci - 1.0)))
}

/// ∂M_k/∂e_j with c_j = exp(2 e_j).
fn mandel_jacobian(c: &Vector3<f64>, p: &J2Params) -> Matrix3<f64> {
    let tr_e = 0.5 * (c.sum() - 3.0);
    Matrix3::from_fn(|k, j| {
        let dmdc = if k == j {
            p.lambda * tr_e + p.mu * (c[k] - 1.0) + c[k] * (0.5 * p.lambda + p.mu)
        } else {
            c[k] * 0.5 * p.lambda
        };
        dmdc * 2.0 * c[j]
    })
}

fn von_mises(m: &Vector3<f64>) -> (f64, Vector3<f64>) {
    let mean = m.sum() / 3.0;
    let s = m.map(|v| v - mean);
    ((1.5 * s.norm_squared()).sqrt(), s)
}

pub fn yield_function(c_e: &Matrix3<f64>, alpha: f64, p: &J2Params) -> f64 {
    let eig = SymmetricEigen::new(*c_e);
    von_mises(&mandel(&eig.eigenvalues, p)).0 - (p.yield_stress + p.hardening * alpha)
}

/// Projects the trial state `c_trial` (elastic right Cauchy–Green) onto the
/// yield surface.
pub fn return_map(c_trial: &Matrix3<f64>, alpha: f64, p: &J2Params) -> Result<ReturnResult> {
    let eig = SymmetricEigen::new(*c_trial);
    let c_tr = eig.eigenvalues;
    if c_tr.iter().any(|&c| !(c > 0.0)) {
        return Err(Error::Inversion(c_tr.min()));
    }
    let r0 = p.yield_stress + p.hardening * alpha;
    let (q_tr, _) = von_mises(&mandel(&c_tr, p));
    if q_tr - r0 <= 1e-10 * p.yield_stress {
        return Ok(ReturnResult {
            factor: Matrix3::identity(),
            delta_gamma: 0.0,
            plastic: false,
            iterations: 0,
        });
    }
    let e_tr = c_tr.map(|c| 0.5 * c.ln());
    let mut e = e_tr;
    let mut dg = (q_tr - r0) / (3.0 * p.mu + p.hardening);
    let scale = p.yield_stress;
    let mut converged = false;
    let mut iterations = 0;
    let mut n = Vector3::zeros();
    for it in 1..=MAX_ITERATIONS {
        iterations = it;
        let c = e.map(|v| (2.0 * v).exp());
        let m = mandel(&c, p);
        let (q, s) = von_mises(&m);
        n = 1.5 * s / q;
        let r = Vector4::new(
            e[0] - e_tr[0] + dg * n[0],
            e[1] - e_tr[1] + dg * n[1],
            e[2] - e_tr[2] + dg * n[2],
            (q - r0 - p.hardening * dg) / scale,
        );
        let dm = mandel_jacobian(&c, p);
        let dn_dm = Matrix3::from_fn(|i, j| {
            let delta = if i == j { 1.0 } else { 0.0 };
            1.5 / q * (delta - 1.0 / 3.0 - 2.0 / 3.0 * n[i] * n[j])
        });
        let dn_de = dn_dm * dm;
        let dq_de = dm.transpose() * n;
        let mut jac = Matrix4::zeros();
        for i in 0..3 {
            for j in 0..3 {
                jac[(i, j)] = if i == j { 1.0 } else { 0.0 } + dg * dn_de[(i, j)];
            }
            jac[(i, 3)] = n[i];
            jac[(3, i)] = dq_de[i] / scale;
        }
        jac[(3, 3)] = -p.hardening / scale;
        let step = jac.lu().solve(&(-r)).ok_or(Error::ReturnMapping(it))?;
        e += step.fixed_rows::<3>(0);
        dg += step[3];
        if step.iter().all(|v| v.is_finite()) && step.norm() < 1e-14 && r.norm() < 1e-12 {
            converged = true;
            break;
        }
        if !step.iter().all(|v| v.is_finite()) {
            break;
        }
    }
    let c = e.map(|v| (2.0 * v).exp());
    let (q, _) = von_mises(&mandel(&c, p));
    let f = q - (p.yield_stress + p.hardening * (alpha + dg));
    if !converged || f.abs() > 1e-9 * p.yield_stress || dg < 0.0 {
        return Err(Error::ReturnMapping(iterations));
    }
    let v = eig.eigenvectors;
    let factor = v * Matrix3::from_diagonal(&n.map(|ni| (-dg * ni).exp())) * v.transpose();
    Ok(ReturnResult {
        factor,
        delta_gamma: dg,
        plastic: true,
        iterations,
    })
}
