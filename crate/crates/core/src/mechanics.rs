//! Quasistatic total-Lagrangian mechanics: internal forces ∫ F S : ∇N,
//! the electromagnetic body force, tractions and reactions.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{gather, Assembler, CsrMatrix, DofLayout, Field, Geometry, LocalSystem, Mesh, PiecewiseLinear, QpGeom, ShapeData};
use crate::kinematics::deformation_at;
use crate::smp::{evaluate, InternalState, MechParams, QuadPointState, StressTangent, Want};

/// Prescribed displacement of one component on the nodes of a region.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisplacementBc {
    pub region: i64,
    pub component: usize,
    /// u(t) in metres.
    pub program: PiecewiseLinear,
}

/// Reference traction on a facet region: `value · program(t)` (N/m²).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TractionBc {
    pub region: i64,
    pub value: [f64; 3],
    pub program: PiecewiseLinear,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MechBc {
    pub dirichlet: Vec<DisplacementBc>,
    pub traction: Vec<TractionBc>,
}

impl MechBc {
    pub fn validate(&self, mesh: &Mesh) -> Result<()> {
        for d in &self.dirichlet {
            mesh.node_set(d.region)?;
            if d.component > 2 {
                return Err(Error::InvalidParameter(format!("displacement component {} > 2", d.component)));
            }
        }
        for t in &self.traction {
            mesh.facets_in(t.region)?;
            for d in &self.dirichlet {
                if d.region == t.region && t.value[d.component] != 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "region {} has both a displacement and a traction in component {}",
                        t.region, d.component
                    )));
                }
            }
        }
        Ok(())
    }

    /// Adds the displacement constraints to `layout`. A node shared by
    /// two regions keeps the first program.
    pub fn apply(&self, mesh: &Mesh, layout: &mut DofLayout) -> Result<()> {
        for d in &self.dirichlet {
            for &n in mesh.node_set(d.region)? {
                let dof = layout
                    .dof(n, Field::U, d.component)
                    .ok_or(Error::InvalidParameter("layout has no displacement field".into()))?;
                if !layout.is_constrained(dof) {
                    layout.constrain(dof, d.program.clone())?;
                }
            }
        }
        Ok(())
    }
}

/// Displacement-gradient derivative of the first Piola stress for a
/// unit change of u_b in component k: δP = e_k ⊗ ∇N_b · S + F δS.
fn piola_derivative(f: &Matrix3<f64>, st: &StressTangent, grad_b: &Vector3<f64>, k: usize) -> Matrix3<f64> {
    let mut ds = Matrix3::zeros();
    for l in 0..3 {
        ds += st.ds_df[3 * k + l] * grad_b[l];
    }
    let mut dp = f * ds;
    let sg = st.s * grad_b;
    for j in 0..3 {
        dp[(k, j)] += sg[j];
    }
    dp
}

/// Adds ∫ P ∇N_a (and its u-derivatives) of one quadrature point. `idx(a, i)`
/// maps node a, component i to the local row.
pub fn add_internal_force<I: Fn(usize, usize) -> usize>(
    q: &QpGeom,
    f: &Matrix3<f64>,
    st: &StressTangent,
    idx: I,
    vector: &mut DVector<f64>,
    matrix: Option<&mut DMatrix<f64>>,
) {
    let p = f * st.s;
    let n = q.grad.len();
    for a in 0..n {
        let pa = p * q.grad[a];
        for i in 0..3 {
            vector[idx(a, i)] += q.dv * pa[i];
        }
    }
    if let Some(m) = matrix {
        for b in 0..n {
            for k in 0..3 {
                let dp = piola_derivative(f, st, &q.grad[b], k);
                for a in 0..n {
                    let col = dp * q.grad[a];
                    for i in 0..3 {
                        m[(idx(a, i), idx(b, k))] += q.dv * col[i];
                    }
                }
            }
        }
    }
}

/// Field state the mechanical operators are evaluated on. The material is
/// evaluated from the committed internal variables of `states`.
#[derive(Clone, Copy)]
pub struct MechInput<'a> {
    pub mesh: &'a Mesh,
    pub geom: &'a Geometry,
    pub u: &'a [Vector3<f64>],
    pub theta: &'a [f64],
    pub params: &'a MechParams,
    pub states: &'a [Vec<QuadPointState>],
}

/// Material response at every quadrature point.
pub type MaterialPoints = Vec<Vec<(StressTangent, InternalState)>>;

/// Evaluates the material law at all quadrature points in parallel.
pub fn evaluate_material(inp: &MechInput, want: Want) -> Result<MaterialPoints> {
    if inp.states.len() != inp.mesh.elements.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} state sets for {} elements",
            inp.states.len(),
            inp.mesh.elements.len()
        )));
    }
    (0..inp.mesh.elements.len())
        .into_par_iter()
        .map(|e| {
            let el = &inp.mesh.elements[e];
            let u = gather(&el.nodes, inp.u);
            let th = gather(&el.nodes, inp.theta);
            inp.geom.elements[e]
                .iter()
                .zip(&inp.states[e])
                .map(|(q, s)| {
                    let d = deformation_at(q, &u, e)?;
                    evaluate(&d.f, q.interpolate(&th), s.committed(), inp.params, want)
                })
                .collect()
        })
        .collect()
}

/// Virgin quadrature-point states at uniform temperature `theta0`.
pub fn virgin_states(mesh: &Mesh, geom: &Geometry, theta0: f64, params: &MechParams) -> Vec<Vec<QuadPointState>> {
    (0..mesh.elements.len())
        .map(|e| vec![QuadPointState::new(InternalState::virgin(theta0, params)); geom.elements[e].len()])
        .collect()
}

fn u_layout(mesh: &Mesh) -> DofLayout {
    DofLayout::new(mesh.node_count(), &[Field::U]).expect("single field layout")
}

/// Body force densities per quadrature point (N/m³ of reference volume).
pub type BodyForce = Vec<Vec<Vector3<f64>>>;

/// Internal minus external force: ∫ F S : ∇N − ∫ N f − ∫ N t.
pub fn mech_residual(inp: &MechInput, body: Option<&BodyForce>, bc: &MechBc, t: f64) -> Result<Vec<f64>> {
    let pts = evaluate_material(inp, Want::Stress)?;
    let asm = Assembler::new(inp.mesh, &u_layout(inp.mesh));
    let (_, mut r) = asm.assemble(|e| {
        let el = &inp.mesh.elements[e];
        let u = gather(&el.nodes, inp.u);
        let n = el.nodes.len();
        let mut v = DVector::zeros(3 * n);
        for (k, q) in inp.geom.elements[e].iter().enumerate() {
            let d = deformation_at(q, &u, e)?;
            add_internal_force(q, &d.f, &pts[e][k].0, |a, i| 3 * a + i, &mut v, None);
            if let Some(b) = body {
                for a in 0..n {
                    for i in 0..3 {
                        v[3 * a + i] -= q.dv * q.n[a] * b[e][k][i];
                    }
                }
            }
        }
        Ok(LocalSystem::vector_only(v))
    })?;
    let ext = traction_load(inp.mesh, inp.geom, bc, t)?;
    for (ri, ei) in r.iter_mut().zip(&ext) {
        *ri -= ei;
    }
    Ok(r)
}

/// Consistent nodal forces of the reference tractions at time `t`.
pub fn traction_load(mesh: &Mesh, geom: &Geometry, bc: &MechBc, t: f64) -> Result<Vec<f64>> {
    let mut out = vec![0.0; 3 * mesh.node_count()];
    for tr in &bc.traction {
        let scale = tr.program.eval(t);
        let value = Vector3::from(tr.value) * scale;
        for fi in mesh.facets_in(tr.region)? {
            let fg = &geom.facets[fi];
            let nodes = &mesh.elements[fg.element].nodes;
            for q in &fg.qps {
                for (a, &node) in nodes.iter().enumerate() {
                    for i in 0..3 {
                        out[3 * node + i] += q.da * q.n[a] * value[i];
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Material plus geometric stiffness ∂R/∂u.
pub fn mech_tangent(inp: &MechInput) -> Result<CsrMatrix> {
    let pts = evaluate_material(inp, Want::Tangent)?;
    let asm = Assembler::new(inp.mesh, &u_layout(inp.mesh));
    let (k, _) = asm.assemble(|e| {
        let el = &inp.mesh.elements[e];
        let u = gather(&el.nodes, inp.u);
        let n = el.nodes.len();
        let mut v = DVector::zeros(3 * n);
        let mut m = DMatrix::zeros(3 * n, 3 * n);
        for (k, q) in inp.geom.elements[e].iter().enumerate() {
            let d = deformation_at(q, &u, e)?;
            add_internal_force(q, &d.f, &pts[e][k].0, |a, i| 3 * a + i, &mut v, Some(&mut m));
        }
        Ok(LocalSystem::matrix_only(m))
    })?;
    Ok(k)
}

/// Lagrangian electromagnetic force density J⁻¹(F𝓙)×(F𝓑) for the uniform
/// axial induction b e_z, where F𝓑 = J b. The magnetization term
/// (∇b)ᵀm is included when a field gradient is supplied; the solenoid field
/// is uniform, so the scenarios pass none.
pub fn em_body_force(
    f: &Matrix3<f64>,
    current: &Vector3<f64>,
    b_axial: f64,
    magnetization: Option<(&Vector3<f64>, &Matrix3<f64>)>,
) -> Vector3<f64> {
    let b = Vector3::new(0.0, 0.0, b_axial);
    let mut force = (f * current).cross(&b);
    if let Some((m, grad_b)) = magnetization {
        force += grad_b.transpose() * m * f.determinant();
    }
    force
}

/// A reaction on a constrained region.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReactionProbe {
    pub region: i64,
    pub force: Vector3<f64>,
}

/// Sum of the internal-force entries over the constrained displacement
/// dofs of the nodes of `region`. `internal` is indexed by `layout`.
pub fn reaction_force(internal: &[f64], layout: &DofLayout, mesh: &Mesh, region: i64) -> Result<ReactionProbe> {
    let nodes = mesh.node_set(region)?;
    let mut force = Vector3::zeros();
    for &n in nodes {
        for c in 0..3 {
            if let Some(d) = layout.dof(n, Field::U, c) {
                if layout.is_constrained(d) {
                    force[c] += internal[d];
                }
            }
        }
    }
    Ok(ReactionProbe { region, force })
}
