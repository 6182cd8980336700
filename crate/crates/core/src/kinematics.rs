//! Deformation kinematics and the Eulerian/Lagrangian transformation rules
//! for one-forms, two-forms and second-order material tensors.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::fem::ShapeData;

/// Determinants at or below this value count as inversion.
pub const MIN_JACOBIAN: f64 = 1e-12;

pub fn adjugate(m: &Matrix3<f64>) -> Matrix3<f64> {
    let c = |r0: usize, r1: usize, c0: usize, c1: usize| m[(r0, c0)] * m[(r1, c1)] - m[(r0, c1)] * m[(r1, c0)];
    Matrix3::new(
        c(1, 2, 1, 2),
        -c(0, 2, 1, 2),
        c(0, 1, 1, 2),
        -c(1, 2, 0, 2),
        c(0, 2, 0, 2),
        -c(0, 1, 0, 2),
        c(1, 2, 0, 1),
        -c(0, 2, 0, 1),
        c(0, 1, 0, 1),
    )
}

/// Closed-form inverse; errors when det ≤ [`MIN_JACOBIAN`].
pub fn inverse(m: &Matrix3<f64>) -> Result<(Matrix3<f64>, f64)> {
    let det = m.determinant();
    if !(det > MIN_JACOBIAN) {
        return Err(Error::Inversion(det));
    }
    Ok((adjugate(m) / det, det))
}

/// Kinematic quantities derived from F.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DeformationState {
    pub f: Matrix3<f64>,
    pub j: f64,
    pub f_inv: Matrix3<f64>,
    /// Green–Lagrange strain ½(FᵀF − I).
    pub e: Matrix3<f64>,
}

impl DeformationState {
    pub fn from_f(f: Matrix3<f64>) -> Result<Self> {
        let (f_inv, j) = inverse(&f)?;
        let e = 0.5 * (f.transpose() * f - Matrix3::identity());
        Ok(DeformationState { f, j, f_inv, e })
    }

    /// Right Cauchy–Green inverse C⁻¹ = F⁻¹F⁻ᵀ.
    pub fn c_inv(&self) -> Matrix3<f64> {
        self.f_inv * self.f_inv.transpose()
    }

    /// Cofactor J F⁻ᵀ.
    pub fn cofactor(&self) -> Matrix3<f64> {
        self.j * self.f_inv.transpose()
    }

    /// J C⁻¹, the pullback of the identity as a two-tensor.
    pub fn pullback_identity(&self) -> Matrix3<f64> {
        self.j * self.c_inv()
    }
}

pub fn deformation_from_displacement(grad_u: &Matrix3<f64>) -> Result<DeformationState> {
    DeformationState::from_f(Matrix3::identity() + grad_u)
}

/// Deformation at a quadrature point of `element` from its nodal
/// displacements; inversion is reported with the element id.
pub fn deformation_at<S: ShapeData>(q: &S, u_nodal: &[Vector3<f64>], element: usize) -> Result<DeformationState> {
    let f = Matrix3::identity() + q.vector_gradient(u_nodal);
    DeformationState::from_f(f).map_err(|_| Error::InvertedElement {
        element,
        det: f.determinant(),
    })
}

/// 𝓔 = Fᵀ e.
pub fn pull_one_form(f_eulerian: &Vector3<f64>, f: &Matrix3<f64>) -> Vector3<f64> {
    f.transpose() * f_eulerian
}

/// e = F⁻ᵀ 𝓔.
pub fn push_one_form(f_lagrangian: &Vector3<f64>, f: &Matrix3<f64>) -> Result<Vector3<f64>> {
    let (fi, _) = inverse(f)?;
    Ok(fi.transpose() * f_lagrangian)
}

/// 𝓑 = J F⁻¹ b.
pub fn pull_two_form(f_eulerian: &Vector3<f64>, f: &Matrix3<f64>) -> Result<Vector3<f64>> {
    let (fi, j) = inverse(f)?;
    Ok(j * fi * f_eulerian)
}

/// b = J⁻¹ F 𝓑.
pub fn push_two_form(f_lagrangian: &Vector3<f64>, f: &Matrix3<f64>) -> Result<Vector3<f64>> {
    let (_, j) = inverse(f)?;
    Ok(f * f_lagrangian / j)
}

/// How a second-order material tensor transforms.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TensorKind {
    /// Conductivity-like (maps one-forms to two-forms): J F⁻¹ t F⁻ᵀ.
    Conductivity,
    /// Reluctivity-like (maps two-forms to one-forms): J⁻¹ Fᵀ t F.
    Reluctivity,
}

pub fn pull_tensor_two(t: &Matrix3<f64>, f: &Matrix3<f64>, kind: TensorKind) -> Result<Matrix3<f64>> {
    let (fi, j) = inverse(f)?;
    Ok(match kind {
        TensorKind::Conductivity => j * fi * t * fi.transpose(),
        TensorKind::Reluctivity => f.transpose() * t * f / j,
    })
}

pub fn push_tensor_two(t: &Matrix3<f64>, f: &Matrix3<f64>, kind: TensorKind) -> Result<Matrix3<f64>> {
    let (fi, j) = inverse(f)?;
    Ok(match kind {
        TensorKind::Conductivity => f * t * f.transpose() / j,
        TensorKind::Reluctivity => j * fi.transpose() * t * fi,
    })
}

/// First Piola–Kirchhoff P = F S and Cauchy σ = J⁻¹ F S Fᵀ.
pub fn piola_stress_maps(s: &Matrix3<f64>, f: &Matrix3<f64>) -> Result<(Matrix3<f64>, Matrix3<f64>)> {
    let (_, j) = inverse(f)?;
    let p = f * s;
    Ok((p, p * f.transpose() / j))
}

/// S = J F⁻¹ σ F⁻ᵀ.
pub fn cauchy_to_pk2(sigma: &Matrix3<f64>, f: &Matrix3<f64>) -> Result<Matrix3<f64>> {
    let (fi, j) = inverse(f)?;
    Ok(j * fi * sigma * fi.transpose())
}

/// Lagrangian matter flow V = −F⁻¹ v.
pub fn matter_flow(v: &Vector3<f64>, f: &Matrix3<f64>) -> Result<Vector3<f64>> {
    let (fi, _) = inverse(f)?;
    Ok(-(fi * v))
}

/// Directional derivative of J C⁻¹ = J F⁻¹F⁻ᵀ along δF = `d`.
pub fn d_pullback_identity(st: &DeformationState, d: &Matrix3<f64>) -> Matrix3<f64> {
    let fid = st.f_inv * d;
    let a = fid * st.c_inv();
    st.j * (fid.trace() * st.c_inv() - a - a.transpose())
}

/// Directional derivative of the cofactor J F⁻ᵀ along δF = `d`.
pub fn d_cofactor(st: &DeformationState, d: &Matrix3<f64>) -> Matrix3<f64> {
    let fit = st.f_inv.transpose();
    st.j * ((st.f_inv * d).trace() * fit - fit * d.transpose() * fit)
}

pub fn sym(m: &Matrix3<f64>) -> Matrix3<f64> {
    0.5 * (m + m.transpose())
}

pub fn dev(m: &Matrix3<f64>) -> Matrix3<f64> {
    m - Matrix3::identity() * (m.trace() / 3.0)
}

/// Von Mises equivalent of a symmetric stress.
pub fn von_mises(s: &Matrix3<f64>) -> f64 {
    let d = dev(s);
    (1.5 * d.component_mul(&d).sum()).sqrt()
}
