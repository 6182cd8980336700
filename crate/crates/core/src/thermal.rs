//! Transient heat conduction on the reference configuration with Joule
//! heating, convection and radiation.
//!
//! Backward Euler residual, multiplied through by Δt:
//! R = M(θ − θ_old) + Δt (K_L θ + boundary − ∫ N w_L),
//! with κ_L = J F⁻¹ κ F⁻ᵀ and facet terms scaled by the Nanson factor
//! |J F⁻ᵀ N|.

use nalgebra::{DMatrix, DVector, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{gather, Assembler, CsrMatrix, DofLayout, Field, Geometry, LocalSystem, Mesh, ShapeData};
use crate::kinematics::deformation_at;

pub const STEFAN_BOLTZMANN: f64 = 5.670_374_419e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ThermalParams {
    /// Mass density (kg/m³).
    pub rho: f64,
    /// Heat capacity (J/(kg K)).
    pub cp: f64,
    /// Thermal conductivity at `theta_ref` (W/(m K)).
    pub kappa: f64,
    /// Linear temperature coefficient of the conductivity (1/K).
    pub kappa_alpha: f64,
    pub theta_ref: f64,
    /// Convective coefficient (W/(m² K)).
    pub h_conv: f64,
    /// Bulk temperature of the convecting fluid (K).
    pub theta_bulk: f64,
    pub emissivity: f64,
    pub stefan_boltzmann: f64,
    /// Radiative reference temperature (K).
    pub theta_rad: f64,
    /// Facet regions with convection.
    pub convection_regions: Vec<i64>,
    /// Facet regions with radiation.
    pub radiation_regions: Vec<i64>,
}

impl Default for ThermalParams {
    fn default() -> Self {
        ThermalParams {
            rho: 270.0,
            cp: 10.0,
            kappa: 237.0,
            kappa_alpha: 0.0,
            theta_ref: 300.0,
            h_conv: 500.0,
            theta_bulk: 300.0,
            emissivity: 0.0,
            stefan_boltzmann: STEFAN_BOLTZMANN,
            theta_rad: 300.0,
            convection_regions: Vec::new(),
            radiation_regions: Vec::new(),
        }
    }
}

impl ThermalParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.cp > 0.0 && self.kappa > 0.0) {
            return Err(Error::InvalidParameter("rho, cp and kappa must be > 0".into()));
        }
        if !(0.0..=1.0).contains(&self.emissivity) || !(self.h_conv >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "need 0 <= emissivity <= 1 and h_conv >= 0 (got {}, {})",
                self.emissivity, self.h_conv
            )));
        }
        Ok(())
    }

    pub fn capacity(&self) -> f64 {
        self.rho * self.cp
    }

    /// κ(θ) and dκ/dθ.
    pub fn conductivity(&self, theta: f64) -> Result<(f64, f64)> {
        let k = self.kappa * (1.0 + self.kappa_alpha * (theta - self.theta_ref));
        if !(k > 0.0) {
            return Err(Error::InvalidParameter(format!("conductivity {k} <= 0 at {theta} K")));
        }
        Ok((k, self.kappa * self.kappa_alpha))
    }

    /// Per-area boundary flux q(θ) and dq/dθ for `region`, before the
    /// Nanson factor.
    pub fn boundary_flux(&self, region: i64, theta: f64) -> (f64, f64) {
        let mut q = 0.0;
        let mut dq = 0.0;
        if self.convection_regions.contains(&region) {
            q += self.h_conv * (theta - self.theta_bulk);
            dq += self.h_conv;
        }
        if self.radiation_regions.contains(&region) && self.emissivity > 0.0 {
            let es = self.emissivity * self.stefan_boltzmann;
            q += es * (theta.powi(4) - self.theta_rad.powi(4));
            dq += 4.0 * es * theta.powi(3);
        }
        (q, dq)
    }
}

/// Field state the thermal operators are evaluated on.
#[derive(Clone, Copy)]
pub struct ThermalInput<'a> {
    pub mesh: &'a Mesh,
    pub geom: &'a Geometry,
    pub u: &'a [Vector3<f64>],
    pub theta: &'a [f64],
    pub params: &'a ThermalParams,
}

fn theta_layout(mesh: &Mesh) -> DofLayout {
    DofLayout::new(mesh.node_count(), &[Field::Theta]).expect("single field layout")
}

fn facet_owners(mesh: &Mesh) -> Vec<usize> {
    mesh.facets.iter().map(|f| f.element).collect()
}

/// Consistent capacity matrix Σ ∫ Nᵀ ρ c_p N.
pub fn assemble_m_the(mesh: &Mesh, geom: &Geometry, params: &ThermalParams) -> Result<CsrMatrix> {
    let asm = Assembler::new(mesh, &theta_layout(mesh));
    let rc = params.capacity();
    let (m, _) = asm.assemble(|e| {
        let n = mesh.elements[e].nodes.len();
        let mut k = DMatrix::zeros(n, n);
        for q in &geom.elements[e] {
            for a in 0..n {
                for b in 0..n {
                    k[(a, b)] += q.dv * rc * q.n[a] * q.n[b];
                }
            }
        }
        Ok(LocalSystem::matrix_only(k))
    })?;
    Ok(m)
}

/// Conduction matrix Σ ∫ Bᵀ κ_L B at the given temperatures.
pub fn assemble_k_the(inp: &ThermalInput) -> Result<CsrMatrix> {
    let asm = Assembler::new(inp.mesh, &theta_layout(inp.mesh));
    let (k, _) = asm.assemble(|e| {
        let el = &inp.mesh.elements[e];
        let u = gather(&el.nodes, inp.u);
        let th = gather(&el.nodes, inp.theta);
        let n = el.nodes.len();
        let mut k = DMatrix::zeros(n, n);
        for q in &inp.geom.elements[e] {
            let st = deformation_at(q, &u, e)?;
            let (kappa, _) = inp.params.conductivity(q.interpolate(&th))?;
            let kl = kappa * st.pullback_identity();
            for a in 0..n {
                let ga = kl * q.grad[a];
                for b in 0..n {
                    k[(a, b)] += q.dv * ga.dot(&q.grad[b]);
                }
            }
        }
        Ok(LocalSystem::matrix_only(k))
    })?;
    Ok(k)
}

/// Facet contributions of convection and radiation.
#[derive(Clone, Debug)]
pub struct BoundaryTerms {
    /// Σ ∫ N h s N.
    pub convection: CsrMatrix,
    /// Σ ∫ N q(θ) s.
    pub residual: Vec<f64>,
    /// Σ ∫ N 4εσθ³ s N.
    pub radiation_tangent: CsrMatrix,
}

pub fn boundary_terms(inp: &ThermalInput) -> Result<BoundaryTerms> {
    let mesh = inp.mesh;
    let asm = Assembler::new(mesh, &theta_layout(mesh));
    let owners = facet_owners(mesh);
    let p = inp.params;
    // one pass per output so each stays a plain assembly
    let run = |part: u8| {
        asm.assemble_owned(&owners, |fi| {
            let fg = &inp.geom.facets[fi];
            let el = &mesh.elements[fg.element];
            let u = gather(&el.nodes, inp.u);
            let th = gather(&el.nodes, inp.theta);
            let n = el.nodes.len();
            let mut k = DMatrix::zeros(n, n);
            let mut r = DVector::zeros(n);
            let conv = p.convection_regions.contains(&fg.region);
            let rad = p.radiation_regions.contains(&fg.region) && p.emissivity > 0.0;
            if conv || rad {
                for q in &fg.qps {
                    let st = deformation_at(q, &u, fg.element)?;
                    let s = (st.cofactor() * q.normal).norm();
                    let theta = q.interpolate(&th);
                    let (flux, _) = p.boundary_flux(fg.region, theta);
                    let coef = match part {
                        0 if conv => p.h_conv,
                        2 if rad => 4.0 * p.emissivity * p.stefan_boltzmann * theta.powi(3),
                        _ => 0.0,
                    };
                    for a in 0..n {
                        r[a] += q.da * s * q.n[a] * flux;
                        for b in 0..n {
                            k[(a, b)] += q.da * s * coef * q.n[a] * q.n[b];
                        }
                    }
                }
            }
            Ok(LocalSystem { matrix: k, vector: r })
        })
    };
    let (convection, residual) = run(0)?;
    let (radiation_tangent, _) = run(2)?;
    Ok(BoundaryTerms {
        convection,
        residual,
        radiation_tangent,
    })
}

/// Source vector Σ ∫ N w for per-quadrature-point loss densities.
pub fn assemble_source(mesh: &Mesh, geom: &Geometry, w_qp: &[Vec<f64>]) -> Result<Vec<f64>> {
    if w_qp.len() != mesh.elements.len() {
        return Err(Error::DimensionMismatch(format!("{} loss sets for {} elements", w_qp.len(), mesh.elements.len())));
    }
    let asm = Assembler::new(mesh, &theta_layout(mesh));
    let (_, f) = asm.assemble(|e| {
        let n = mesh.elements[e].nodes.len();
        let mut v = DVector::zeros(n);
        for (q, w) in geom.elements[e].iter().zip(&w_qp[e]) {
            for a in 0..n {
                v[a] += q.dv * q.n[a] * w;
            }
        }
        Ok(LocalSystem::vector_only(v))
    })?;
    Ok(f)
}

/// Backward Euler residual M(θ − θ_old) + Δt(K θ + boundary − ∫ N w).
pub fn thermal_residual(inp: &ThermalInput, theta_old: &[f64], dt: f64, w_qp: &[Vec<f64>]) -> Result<Vec<f64>> {
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!("time step {dt} must be > 0")));
    }
    let m = assemble_m_the(inp.mesh, inp.geom, inp.params)?;
    let k = assemble_k_the(inp)?;
    let bt = boundary_terms(inp)?;
    let src = assemble_source(inp.mesh, inp.geom, w_qp)?;
    let diff: Vec<f64> = inp.theta.iter().zip(theta_old).map(|(a, b)| a - b).collect();
    let md = m.mul_vec(&diff);
    let kt = k.mul_vec(inp.theta);
    Ok((0..md.len()).map(|i| md[i] + dt * (kt[i] + bt.residual[i] - src[i])).collect())
}

/// Characteristic diffusion time and per-step heating estimates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NondimReport {
    /// ρ c_p L_c² / κ (s).
    pub t_c: f64,
    pub l_c: f64,
    /// Temperature rise per step from a loss density `w` (K).
    pub step_rise: f64,
    /// `step_rise` over the allowed band.
    pub source_to_storage: f64,
    pub exceeds_band: bool,
}

pub fn nondim_report(params: &ThermalParams, l_c: f64, w: f64, dt: f64, band: f64) -> Result<NondimReport> {
    if !(l_c > 0.0) {
        return Err(Error::InvalidParameter(format!("characteristic length {l_c} must be > 0")));
    }
    let t_c = params.rho * params.cp * l_c * l_c / params.kappa;
    let step_rise = w * dt / params.capacity();
    Ok(NondimReport {
        t_c,
        l_c,
        step_rise,
        source_to_storage: step_rise / band,
        exceeds_band: step_rise > band,
    })
}
