//! Element and facet kernels of the monolithic residual.
//!
//! Local unknowns are numbered node by node with five slots per node:
//! Φ, θ, u_x, u_y, u_z. The kernels always produce all five; the caller
//! keeps the rows and columns of the active fields.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};

use super::CoupledProblem;
use crate::coil::potential_for;
use crate::error::{Error, Result};
use crate::fem::{LocalSystem, ShapeData};
use crate::kinematics::{d_cofactor, d_pullback_identity, deformation_at};
use crate::mechanics::add_internal_force;
use crate::smp::{evaluate, QuadPointState, Want};

pub(crate) const SLOTS: usize = 5;

/// Nodal values on one element.
pub(crate) struct ElementValues {
    pub phi: Vec<f64>,
    pub theta: Vec<f64>,
    pub theta_old: Vec<f64>,
    pub u: Vec<Vector3<f64>>,
}

impl ElementValues {
    pub fn get(&self, slot: usize, a: usize) -> f64 {
        match slot {
            0 => self.phi[a],
            1 => self.theta[a],
            s => self.u[a][s - 2],
        }
    }

    pub fn set(&mut self, slot: usize, a: usize, v: f64) {
        match slot {
            0 => self.phi[a] = v,
            1 => self.theta[a] = v,
            s => self.u[a][s - 2] = v,
        }
    }
}

/// Time-dependent excitation shared by all elements of one evaluation.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Drive {
    /// Excitation rate entering a_s (T/s).
    pub rate: f64,
    /// ∂ȧ_s/∂x.
    pub grad_rate: Matrix3<f64>,
    /// Axial induction for the body force; zero disables it.
    pub b: f64,
    pub dt: f64,
}

fn direction(k: usize, grad: &Vector3<f64>) -> Matrix3<f64> {
    let mut d = Matrix3::zeros();
    d.set_row(k, &grad.transpose());
    d
}

pub(crate) fn element_full(
    p: &CoupledProblem,
    e: usize,
    vals: &ElementValues,
    states: &[QuadPointState],
    drive: &Drive,
    tangent: bool,
) -> Result<(DVector<f64>, Option<DMatrix<f64>>)> {
    let n = vals.theta.len();
    let nd = SLOTS * n;
    let mut r = DVector::zeros(nd);
    let mut k = tangent.then(|| DMatrix::zeros(nd, nd));
    let rc = p.thermal.capacity();
    let dt = drive.dt;
    let bvec = Vector3::new(0.0, 0.0, drive.b);
    let body = drive.b != 0.0;
    let want = if tangent { Want::Tangent } else { Want::Stress };
    for (qi, q) in p.geom.elements[e].iter().enumerate() {
        let st = deformation_at(q, &vals.u, e)?;
        let f = st.f;
        let th = q.interpolate(&vals.theta);
        let th_old = q.interpolate(&vals.theta_old);
        let grad_th = q.gradient(&vals.theta);
        let x = q.x + q.interpolate_vector(&vals.u);
        let adot = potential_for(drive.rate, &x);
        let g = f.transpose() * adot + q.gradient(&vals.phi);
        let (sig, dsig) = p.em.conductivity(th)?;
        let (kap, dkap) = p.thermal.conductivity(th)?;
        let pm = st.pullback_identity();
        let pg = pm * g;
        let q1 = sig * pg;
        let w = g.dot(&q1);
        let p_gth = pm * grad_th;
        let (mat, _) = evaluate(&f, th, states[qi].committed(), &p.mech, want).map_err(|err| match err {
            Error::Inversion(det) => Error::InvertedElement { element: e, det },
            other => other,
        })?;
        let force = if body { -(f * q1).cross(&bvec) } else { Vector3::zeros() };
        let dv = q.dv;
        for a in 0..n {
            let na = q.n[a];
            let ga = &q.grad[a];
            r[SLOTS * a] += dv * ga.dot(&q1);
            r[SLOTS * a + 1] += dv * (na * rc * (th - th_old) + dt * (kap * ga.dot(&p_gth) - na * w));
            for i in 0..3 {
                r[SLOTS * a + 2 + i] -= dv * na * force[i];
            }
        }
        add_internal_force(q, &f, &mat, |a, i| SLOTS * a + 2 + i, &mut r, k.as_mut());
        let Some(k) = k.as_mut() else { continue };
        let gpg = g.dot(&pg);
        for b in 0..n {
            let nb = q.n[b];
            let gb = &q.grad[b];
            let p_gb = pm * gb;
            let dq_phi = sig * p_gb;
            let dq_th = dsig * nb * pg;
            let dkg_th = kap * p_gb + dkap * nb * p_gth;
            let dw_th = dsig * nb * gpg;
            let df_phi = if body { -(f * dq_phi).cross(&bvec) } else { Vector3::zeros() };
            let df_th = if body { -(f * dq_th).cross(&bvec) } else { Vector3::zeros() };
            for a in 0..n {
                let na = q.n[a];
                let ga = &q.grad[a];
                let (ra, cb) = (SLOTS * a, SLOTS * b);
                k[(ra, cb)] += dv * ga.dot(&dq_phi);
                k[(ra, cb + 1)] += dv * ga.dot(&dq_th);
                k[(ra + 1, cb)] -= dv * dt * na * 2.0 * q1.dot(gb);
                k[(ra + 1, cb + 1)] += dv * (na * rc * nb + dt * (ga.dot(&dkg_th) - na * dw_th));
                let col = f * mat.ds_dtheta * ga * nb;
                for i in 0..3 {
                    k[(ra + 2 + i, cb + 1)] += dv * (col[i] - na * df_th[i]);
                    k[(ra + 2 + i, cb)] -= dv * na * df_phi[i];
                }
            }
            for kk in 0..3 {
                let dmat = direction(kk, gb);
                let dp = d_pullback_identity(&st, &dmat);
                let dg = gb * adot[kk] + nb * (f.transpose() * drive.grad_rate.column(kk));
                let dq = sig * (dp * g + pm * dg);
                let dw = sig * g.dot(&(dp * g)) + 2.0 * q1.dot(&dg);
                let dkg = kap * dp * grad_th;
                let dforce = if body {
                    -(dmat * q1 + f * dq).cross(&bvec)
                } else {
                    Vector3::zeros()
                };
                let cb = SLOTS * b + 2 + kk;
                for a in 0..n {
                    let na = q.n[a];
                    let ga = &q.grad[a];
                    let ra = SLOTS * a;
                    k[(ra, cb)] += dv * ga.dot(&dq);
                    k[(ra + 1, cb)] += dv * dt * (ga.dot(&dkg) - na * dw);
                    for i in 0..3 {
                        k[(ra + 2 + i, cb)] -= dv * na * dforce[i];
                    }
                }
            }
        }
    }
    Ok((r, k))
}

/// Convective and radiative flux through one boundary facet, scaled by the
/// Nanson factor |J F⁻ᵀ N|.
pub(crate) fn facet_full(
    p: &CoupledProblem,
    fi: usize,
    vals: &ElementValues,
    dt: f64,
    tangent: bool,
) -> Result<(DVector<f64>, Option<DMatrix<f64>>)> {
    let fg = &p.geom.facets[fi];
    let e = fg.element;
    let n = vals.theta.len();
    let nd = SLOTS * n;
    let mut r = DVector::zeros(nd);
    let mut k = tangent.then(|| DMatrix::zeros(nd, nd));
    for q in &fg.qps {
        let st = deformation_at(q, &vals.u, e)?;
        let th = q.interpolate(&vals.theta);
        let (flux, dflux) = p.thermal.boundary_flux(fg.region, th);
        if flux == 0.0 && dflux == 0.0 {
            continue;
        }
        let c = st.cofactor() * q.normal;
        let s = c.norm();
        let da = q.da * dt;
        for a in 0..n {
            r[SLOTS * a + 1] += da * q.n[a] * s * flux;
        }
        let Some(k) = k.as_mut() else { continue };
        for b in 0..n {
            let nb = q.n[b];
            let mut ds = [0.0; 3];
            for (kk, d) in ds.iter_mut().enumerate() {
                let dc = d_cofactor(&st, &direction(kk, &q.grad[b])) * q.normal;
                *d = c.dot(&dc) / s;
            }
            for a in 0..n {
                let na = q.n[a];
                k[(SLOTS * a + 1, SLOTS * b + 1)] += da * na * s * dflux * nb;
                for kk in 0..3 {
                    k[(SLOTS * a + 1, SLOTS * b + 2 + kk)] += da * na * flux * ds[kk];
                }
            }
        }
    }
    Ok((r, k))
}

/// Central-difference element tangent of `residual` around `vals`.
pub(crate) fn fd_tangent<R>(vals: &ElementValues, steps: [f64; 3], residual: R) -> Result<DMatrix<f64>>
where
    R: Fn(&ElementValues) -> Result<DVector<f64>>,
{
    let n = vals.theta.len();
    let nd = SLOTS * n;
    let mut m = DMatrix::zeros(nd, nd);
    let mut work = ElementValues {
        phi: vals.phi.clone(),
        theta: vals.theta.clone(),
        theta_old: vals.theta_old.clone(),
        u: vals.u.clone(),
    };
    for b in 0..n {
        for slot in 0..SLOTS {
            let v0 = vals.get(slot, b);
            let h = steps[slot.min(2)] + 1e-7 * v0.abs();
            work.set(slot, b, v0 + h);
            let rp = residual(&work)?;
            work.set(slot, b, v0 - h);
            let rm = residual(&work)?;
            work.set(slot, b, v0);
            m.set_column(SLOTS * b + slot, &((rp - rm) / (2.0 * h)));
        }
    }
    Ok(m)
}

/// Keeps the rows and columns of the active slots.
pub(crate) fn compress(r: &DVector<f64>, k: Option<&DMatrix<f64>>, active: &[usize]) -> LocalSystem {
    let n = r.len() / SLOTS;
    let m = active.len();
    let map: Vec<usize> = (0..n).flat_map(|a| active.iter().map(move |&s| SLOTS * a + s)).collect();
    let vector = DVector::from_iterator(n * m, map.iter().map(|&i| r[i]));
    match k {
        Some(k) => LocalSystem {
            matrix: DMatrix::from_fn(n * m, n * m, |i, j| k[(map[i], map[j])]),
            vector,
        },
        None => LocalSystem::vector_only(vector),
    }
}
