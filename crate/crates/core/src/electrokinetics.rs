//! Electrokinetic scalar-potential problem on the reference configuration.
//!
//! With the source potential a_s prescribed by the coil, the Lagrangian
//! current density is 𝓙 = −σ_L (Fᵀ∂t a_s + ∇Φ) with σ_L = J F⁻¹ σ F⁻ᵀ, and
//! Φ solves Div 𝓙 = 0. The weak form reads K Φ + F = 0.

use nalgebra::{DMatrix, DVector, Vector3};
use serde::{Deserialize, Serialize};

use crate::coil::{potential_for, CoilSpec};
use crate::error::{Error, Result};
use crate::fem::{
    gather, reduce, Assembler, CsrMatrix, DofLayout, Field, Geometry, LinearSolver, LocalSystem, Mesh, ShapeData,
};
use crate::kinematics::deformation_at;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EmMaterial {
    /// Electric conductivity at `theta_ref` (S/m).
    pub sigma: f64,
    /// Linear temperature coefficient of the conductivity (1/K).
    pub sigma_alpha: f64,
    pub theta_ref: f64,
    /// Relative permeability.
    pub mu_r: f64,
}

impl Default for EmMaterial {
    fn default() -> Self {
        EmMaterial {
            sigma: 1e4,
            sigma_alpha: 0.0,
            theta_ref: 300.0,
            mu_r: 20.0,
        }
    }
}

impl EmMaterial {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0) || !(self.mu_r >= 1.0) || !self.sigma_alpha.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "need sigma > 0, mu_r >= 1 and a finite sigma_alpha (got {}, {}, {})",
                self.sigma, self.mu_r, self.sigma_alpha
            )));
        }
        Ok(())
    }

    /// σ(θ) and dσ/dθ.
    pub fn conductivity(&self, theta: f64) -> Result<(f64, f64)> {
        let s = self.sigma * (1.0 + self.sigma_alpha * (theta - self.theta_ref));
        if !(s > 0.0) {
            return Err(Error::InvalidParameter(format!("conductivity {s} <= 0 at {theta} K")));
        }
        Ok((s, self.sigma * self.sigma_alpha))
    }
}

/// How the coil excitation enters the loss term.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceMode {
    /// ∂t b_s at the current instant.
    #[default]
    Instantaneous,
    /// The root mean square of ∂t b_s over one period. The potential is
    /// linear in the excitation, so the losses computed with it are the
    /// exact period averages.
    PeriodAveraged,
}

/// The excitation rate used with `mode` at time `t` (T/s).
pub fn source_rate(coil: &CoilSpec, mode: SourceMode, t: f64) -> Result<f64> {
    match mode {
        SourceMode::Instantaneous => coil.b_rate(t),
        SourceMode::PeriodAveraged => coil.b_rate_rms(t),
    }
}

/// Potential, current density and loss density at every quadrature point.
#[derive(Clone, Debug, PartialEq)]
pub struct EmSolution {
    pub phi: Vec<f64>,
    /// Lagrangian current density 𝓙 (A/m²).
    pub current: Vec<Vec<Vector3<f64>>>,
    /// Loss density w_L per reference volume (W/m³).
    pub loss: Vec<Vec<f64>>,
}

impl EmSolution {
    /// Total dissipated power (W).
    pub fn total_power(&self, geom: &Geometry) -> f64 {
        self.loss
            .iter()
            .zip(&geom.elements)
            .map(|(w, qps)| w.iter().zip(qps).map(|(w, q)| w * q.dv).sum::<f64>())
            .sum()
    }
}

/// Field state the electrokinetic operators are evaluated on.
#[derive(Clone, Copy)]
pub struct EmInput<'a> {
    pub mesh: &'a Mesh,
    pub geom: &'a Geometry,
    pub u: &'a [Vector3<f64>],
    pub theta: &'a [f64],
    pub material: &'a EmMaterial,
}

fn phi_layout(mesh: &Mesh) -> DofLayout {
    DofLayout::new(mesh.node_count(), &[Field::Phi]).expect("single field layout")
}

fn check_sizes(inp: &EmInput) -> Result<()> {
    let n = inp.mesh.node_count();
    if inp.u.len() != n || inp.theta.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{n} nodes but {} displacements and {} temperatures",
            inp.u.len(),
            inp.theta.len()
        )));
    }
    Ok(())
}

/// Element kernel shared by the matrix and the load vector: returns
/// ∫ Bᵀσ_L B and ∫ Bᵀσ_L Fᵀȧ for unit excitation rate `b_rate`.
fn element_system(inp: &EmInput, e: usize, b_rate: f64, matrix: bool) -> Result<LocalSystem> {
    let el = &inp.mesh.elements[e];
    let u = gather(&el.nodes, inp.u);
    let th = gather(&el.nodes, inp.theta);
    let n = el.nodes.len();
    let mut k = DMatrix::zeros(if matrix { n } else { 0 }, if matrix { n } else { 0 });
    let mut f = DVector::zeros(n);
    for q in &inp.geom.elements[e] {
        let st = deformation_at(q, &u, e)?;
        let (sigma, _) = inp.material.conductivity(q.interpolate(&th))?;
        let sl = sigma * st.pullback_identity();
        let x = q.x + q.interpolate_vector(&u);
        let a_dot = st.f.transpose() * potential_for(b_rate, &x);
        let flux = sl * a_dot;
        for a in 0..n {
            f[a] += q.dv * q.grad[a].dot(&flux);
            if matrix {
                let ga = sl * q.grad[a];
                for b in 0..n {
                    k[(a, b)] += q.dv * ga.dot(&q.grad[b]);
                }
            }
        }
    }
    Ok(LocalSystem { matrix: k, vector: f })
}

/// Conduction matrix K = Σ ∫ Bᵀ σ_L B.
pub fn assemble_k_ele(inp: &EmInput) -> Result<CsrMatrix> {
    check_sizes(inp)?;
    let asm = Assembler::new(inp.mesh, &phi_layout(inp.mesh));
    let (k, _) = asm.assemble(|e| {
        let mut s = element_system(inp, e, 0.0, true)?;
        s.vector = DVector::zeros(0);
        Ok(s)
    })?;
    Ok(k)
}

/// Source vector F = Σ ∫ Bᵀ σ_L Fᵀ ∂t a_s at time `t`.
pub fn assemble_f_ele(inp: &EmInput, coil: &CoilSpec, mode: SourceMode, t: f64) -> Result<Vec<f64>> {
    check_sizes(inp)?;
    let rate = source_rate(coil, mode, t)?;
    let asm = Assembler::new(inp.mesh, &phi_layout(inp.mesh));
    let (_, f) = asm.assemble(|e| element_system(inp, e, rate, false))?;
    Ok(f)
}

/// Where the potential is pinned to zero.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Grounding {
    /// The boundary node with the smallest index.
    #[default]
    BoundaryMin,
    Node(usize),
    None,
}

/// Node index that `grounding` pins, if any.
pub fn ground_node(mesh: &Mesh, grounding: Grounding) -> Result<Option<usize>> {
    match grounding {
        Grounding::None => Ok(None),
        Grounding::Node(n) if n < mesh.node_count() => Ok(Some(n)),
        Grounding::Node(n) => Err(Error::InvalidParameter(format!("ground node {n} out of range"))),
        Grounding::BoundaryMin => {
            let el = &mesh.elements;
            Ok(mesh
                .boundary_faces()
                .iter()
                .flat_map(|&(e, f)| el[e].kind.faces()[f].iter().map(move |&l| el[e].nodes[l]))
                .min())
        }
    }
}

/// Solves K φ + F = 0 with φ = 0 at `ground`.
pub fn solve_potential(k: &CsrMatrix, f: &[f64], ground: Option<usize>) -> Result<Vec<f64>> {
    let n = k.nrows();
    let Some(g) = ground else {
        // a pure conduction matrix always carries the constant mode
        let ones = vec![1.0; n];
        let row_sums = k.mul_vec(&ones);
        if row_sums.iter().all(|r| r.abs() <= 1e-10 * k.max_abs()) {
            return Err(Error::FloatingConductor);
        }
        let rhs: Vec<f64> = f.iter().map(|v| -v).collect();
        return LinearSolver::new().solve(k, &rhs).map_err(|e| match e {
            Error::Singular(_) => Error::FloatingConductor,
            e => e,
        });
    };
    if g >= n {
        return Err(Error::NoSuchDof { dof: g, len: n });
    }
    let free: Vec<usize> = (0..n).filter(|&i| i != g).collect();
    let rhs: Vec<f64> = f.iter().map(|v| -v).collect();
    let red = reduce(k, &rhs, &free, &vec![0.0; n])?;
    let x = LinearSolver::new().solve(&red.matrix, &red.rhs).map_err(|e| match e {
        Error::Singular(_) => Error::FloatingConductor,
        e => e,
    })?;
    Ok(red.expand(&x))
}

/// 𝓙 = −σ_L(Fᵀȧ + ∇Φ) and w_L = g·σ_L g at every quadrature point.
pub fn current_and_losses(inp: &EmInput, phi: &[f64], coil: &CoilSpec, mode: SourceMode, t: f64) -> Result<EmSolution> {
    check_sizes(inp)?;
    let rate = source_rate(coil, mode, t)?;
    let mut current = Vec::with_capacity(inp.mesh.elements.len());
    let mut loss = Vec::with_capacity(inp.mesh.elements.len());
    for (e, el) in inp.mesh.elements.iter().enumerate() {
        let u = gather(&el.nodes, inp.u);
        let th = gather(&el.nodes, inp.theta);
        let ph = gather(&el.nodes, phi);
        let mut je = Vec::new();
        let mut we = Vec::new();
        for q in &inp.geom.elements[e] {
            let st = deformation_at(q, &u, e)?;
            let (sigma, _) = inp.material.conductivity(q.interpolate(&th))?;
            let x = q.x + q.interpolate_vector(&u);
            let g = st.f.transpose() * potential_for(rate, &x) + q.gradient(&ph);
            let flux = sigma * st.pullback_identity() * g;
            je.push(-flux);
            we.push(g.dot(&flux));
        }
        current.push(je);
        loss.push(we);
    }
    Ok(EmSolution {
        phi: phi.to_vec(),
        current,
        loss,
    })
}

/// Assembles, grounds and solves, then evaluates currents and losses.
pub fn solve_em(inp: &EmInput, coil: &CoilSpec, mode: SourceMode, t: f64, grounding: Grounding) -> Result<EmSolution> {
    let k = assemble_k_ele(inp)?;
    let f = assemble_f_ele(inp, coil, mode, t)?;
    let phi = solve_potential(&k, &f, ground_node(inp.mesh, grounding)?)?;
    current_and_losses(inp, &phi, coil, mode, t)
}

/// Hysteretic losses are not modeled: the magnetization is linear and
/// anhysteretic, so this contribution is identically zero.
pub fn hysteresis_loss(_b_rate: f64) -> f64 {
    0.0
}
