//! Monolithic electro-thermo-mechanical time stepping.
//!
//! Unknowns (Φ, θ, u) at t_{n+1} solve G(v) = 0, where G collects the
//! charge balance, the Δt-scaled backward Euler heat balance and the
//! quasistatic momentum balance. Each step is solved by Newton–Raphson on
//! the consistent tangent, with recursive step halving on failure.
//!
//! Any canonical-ordered subset of the fields can be active. Inactive
//! fields are frozen: Φ = 0, u = 0, and θ follows the temperature program
//! (or stays at the initial temperature).

mod kernel;
mod newton;

use std::ops::Range;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

pub use newton::{newton_step, NewtonOutcome};

use self::kernel::{compress, element_full, facet_full, fd_tangent, Drive, ElementValues};
use crate::coil::{potential_gradient, CoilSpec};
use crate::electrokinetics::{current_and_losses, ground_node, solve_em, source_rate, EmInput, EmMaterial, EmSolution, Grounding, SourceMode};
use crate::error::{Error, Result};
use crate::fem::{gather, Assembler, CsrMatrix, DofLayout, Field, Geometry, LinearSolver, Mesh, PiecewiseLinear};
use crate::mechanics::{evaluate_material, traction_load, virgin_states, MechBc, MechInput};
use crate::smp::{MechParams, QuadPointState, Want};
use crate::thermal::ThermalParams;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub t_start: f64,
    pub t_end: f64,
    pub dt: f64,
    /// Relative reduction of the scaled residual norm.
    pub newton_tol: f64,
    /// Scaled residual below which a step counts as converged outright.
    pub abs_tol: f64,
    /// A correction this small relative to the field magnitude (mesh size
    /// for u) ends the iteration at the roundoff floor of the residual.
    pub increment_tol: f64,
    pub newton_max: usize,
    /// Maximum depth of step halving.
    pub max_cuts: usize,
    /// Backtracking factor of a line search on the scaled residual norm.
    pub ls_backtrack: Option<f64>,
    /// Solve Φ exactly before each (θ, u) update instead of monolithically.
    pub staggered: bool,
    /// Element tangents by central differences of the element residual.
    pub fd_tangent: bool,
    /// Extra factors on the (Φ, θ, u) residual scales.
    pub block_scaling: [f64; 3],
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            t_start: 0.0,
            t_end: 1.0,
            dt: 1.0,
            newton_tol: 1e-8,
            abs_tol: 1e-12,
            increment_tol: 1e-12,
            newton_max: 25,
            max_cuts: 6,
            ls_backtrack: None,
            staggered: false,
            fd_tangent: false,
            block_scaling: [1.0; 3],
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !(self.t_end > self.t_start) {
            return Err(Error::InvalidParameter(format!(
                "need dt > 0 and t_end > t_start (got dt {}, [{}, {}])",
                self.dt, self.t_start, self.t_end
            )));
        }
        if !(self.newton_tol > 0.0 && self.newton_tol < 1.0) || !(self.abs_tol >= 0.0) || self.newton_max == 0 {
            return Err(Error::InvalidParameter("need 0 < newton_tol < 1, abs_tol >= 0, newton_max > 0".into()));
        }
        if self.ls_backtrack.is_some_and(|b| !(b > 0.0 && b < 1.0)) {
            return Err(Error::InvalidParameter("ls_backtrack must lie in (0, 1)".into()));
        }
        if self.block_scaling.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::InvalidParameter("block scales must be > 0".into()));
        }
        Ok(())
    }

    /// Nominal step end times, with `breaks` inserted.
    pub fn grid(&self, breaks: &[f64]) -> Vec<f64> {
        let eps = 1e-9 * self.dt;
        let n = ((self.t_end - self.t_start) / self.dt - 1e-9).ceil().max(1.0) as usize;
        let mut ts: Vec<f64> = (1..=n).map(|k| (self.t_start + k as f64 * self.dt).min(self.t_end)).collect();
        ts.extend(breaks.iter().copied().filter(|&b| b > self.t_start + eps && b < self.t_end - eps));
        ts.sort_by(f64::total_cmp);
        ts.dedup_by(|a, b| (*a - *b).abs() <= eps);
        ts
    }
}

/// Replacement of a displacement constraint by the reaction it carried.
///
/// At `at` the constraint on `component` of the nodes of `region` is
/// removed. Each freed dof receives a nodal force equal to its reaction at
/// that instant, ramped linearly to zero at `ramp_end`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Release {
    pub region: i64,
    pub component: usize,
    pub at: f64,
    pub ramp_end: f64,
}

impl Release {
    pub fn ramp(&self, t: f64) -> f64 {
        ((self.ramp_end - t) / (self.ramp_end - self.at)).clamp(0.0, 1.0)
    }
}

/// Time-dependent boundary data.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundaryProgram {
    pub mech: MechBc,
    /// Temperature of all nodes: a Dirichlet program when θ is solved for,
    /// the imposed field otherwise.
    pub theta: Option<PiecewiseLinear>,
    pub releases: Vec<Release>,
}

/// Material and excitation data.
#[derive(Clone, Debug, PartialEq)]
pub struct Physics {
    pub mech: MechParams,
    pub thermal: ThermalParams,
    pub em: EmMaterial,
    pub coil: CoilSpec,
    pub source_mode: SourceMode,
    /// Include the Lorentz body force (instantaneous mode only).
    pub body_force: bool,
    pub grounding: Grounding,
}

pub struct CoupledProblem {
    pub mesh: Mesh,
    pub geom: Geometry,
    pub mech: MechParams,
    pub thermal: ThermalParams,
    pub em: EmMaterial,
    pub coil: CoilSpec,
    pub source_mode: SourceMode,
    pub body_force: bool,
    pub bc: BoundaryProgram,
    pub theta0: f64,
    ground: Option<usize>,
    base: DofLayout,
    asm: Assembler,
    active: Vec<usize>,
    flux_facets: Vec<usize>,
    flux_owners: Vec<usize>,
    field_of: Vec<u8>,
    scales: [f64; 3],
    length: f64,
    fd_steps: [f64; 3],
}

/// Converged state at the end of a step.
#[derive(Clone, Debug, PartialEq)]
pub struct CoupledState {
    pub t: f64,
    /// Nominal steps completed.
    pub step: usize,
    /// Unknowns in the layout of the problem.
    pub v: Vec<f64>,
    pub qp: Vec<Vec<QuadPointState>>,
    /// Second Piola–Kirchhoff stress per quadrature point.
    pub stress: Vec<Vec<Matrix3<f64>>>,
    /// Reactions captured by each release, once it has happened.
    pub released: Vec<Option<Vec<(usize, f64)>>>,
}

/// Nodal values of all three fields.
#[derive(Clone, Debug, PartialEq)]
pub struct NodalFields {
    pub phi: Vec<f64>,
    pub theta: Vec<f64>,
    pub u: Vec<Vector3<f64>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct StepReport {
    pub step: usize,
    pub t: f64,
    pub dt: f64,
    /// Linear solves over all substeps.
    pub iterations: usize,
    pub substeps: usize,
    pub cuts: usize,
    /// End times of the substeps actually solved.
    pub substep_ends: Vec<f64>,
    /// Scaled residual norms of the last substep, starting with the predictor.
    pub residuals: Vec<f64>,
}

fn field_slot(f: Field) -> Range<usize> {
    match f {
        Field::Phi => 0..1,
        Field::Theta => 1..2,
        Field::U => 2..5,
    }
}

impl CoupledProblem {
    pub fn new(mesh: Mesh, physics: Physics, fields: &[Field], bc: BoundaryProgram, theta0: f64) -> Result<Self> {
        mesh.validate()?;
        physics.mech.validate()?;
        physics.thermal.validate()?;
        physics.em.validate()?;
        physics.coil.validate()?;
        bc.mech.validate(&mesh)?;
        if fields.is_empty() || fields.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(format!("fields must be a non-empty subset of [phi, theta, u] in that order (got {fields:?})")));
        }
        for r in &bc.releases {
            mesh.node_set(r.region)?;
            if r.component > 2 || !(r.ramp_end > r.at) {
                return Err(Error::InvalidParameter(format!(
                    "release of region {}: need component <= 2 and ramp_end > at",
                    r.region
                )));
            }
        }
        if !(theta0 > 0.0) {
            return Err(Error::InvalidParameter(format!("initial temperature {theta0} <= 0")));
        }
        let geom = Geometry::new(&mesh)?;
        let base = DofLayout::new(mesh.node_count(), fields)?;
        let asm = Assembler::new(&mesh, &base);
        let active = fields.iter().flat_map(|&f| field_slot(f)).collect();
        let (flux_facets, flux_owners) = if base.has_field(Field::Theta) {
            let th = &physics.thermal;
            mesh.facets
                .iter()
                .enumerate()
                .filter(|(_, f)| th.convection_regions.contains(&f.region) || th.radiation_regions.contains(&f.region))
                .map(|(i, f)| (i, f.element))
                .unzip()
        } else {
            (Vec::new(), Vec::new())
        };
        let mut field_of = vec![0u8; base.len()];
        for (k, f) in [Field::Phi, Field::Theta, Field::U].into_iter().enumerate() {
            if let Some(r) = base.field_range(f) {
                field_of[r].iter_mut().for_each(|x| *x = k as u8);
            }
        }
        let ground = if base.has_field(Field::Phi) {
            ground_node(&mesh, physics.grounding)?
        } else {
            None
        };
        let le = (mesh.volume() / mesh.elements.len() as f64).cbrt();
        let scales = [
            physics.em.sigma * le,
            physics.thermal.capacity() * le.powi(3),
            physics.mech.e_g * le * le,
        ];
        Ok(CoupledProblem {
            mesh,
            geom,
            mech: physics.mech,
            thermal: physics.thermal,
            em: physics.em,
            coil: physics.coil,
            source_mode: physics.source_mode,
            body_force: physics.body_force,
            bc,
            theta0,
            ground,
            base,
            asm,
            active,
            flux_facets,
            flux_owners,
            field_of,
            scales,
            length: le,
            fd_steps: [1e-4, 1e-6, 1e-7 * le],
        })
    }

    pub fn layout(&self) -> &DofLayout {
        &self.base
    }

    pub fn has(&self, f: Field) -> bool {
        self.base.has_field(f)
    }

    /// Residual scales of the (Φ, θ, u) blocks: σL, ρcL³ and E_g L², with L
    /// the cube root of the mean element volume.
    pub fn scales(&self) -> [f64; 3] {
        self.scales
    }

    fn theta_at(&self, t: f64) -> f64 {
        self.bc.theta.as_ref().map_or(self.theta0, |p| p.eval(t))
    }

    /// Layout with the Dirichlet constraints in force after `released`.
    pub fn constrained_layout(&self, released: &[Option<Vec<(usize, f64)>>]) -> Result<DofLayout> {
        let mut l = self.base.clone();
        if self.has(Field::U) {
            self.bc.mech.apply(&self.mesh, &mut l)?;
            for list in released.iter().flatten() {
                for (d, _) in list {
                    l.release(*d);
                }
            }
        }
        if self.has(Field::Theta) {
            if let Some(p) = &self.bc.theta {
                for n in 0..self.mesh.node_count() {
                    l.constrain_node(n, Field::Theta, 0, p.clone())?;
                }
            }
        }
        if let Some(g) = self.ground {
            l.constrain_node(g, Field::Phi, 0, PiecewiseLinear::constant(0.0))?;
        }
        Ok(l)
    }

    pub fn nodal(&self, v: &[f64], t: f64) -> NodalFields {
        let nn = self.mesh.node_count();
        let l = &self.base;
        let get = |n: usize, f: Field, c: usize| l.dof(n, f, c).map(|d| v[d]);
        let th = self.theta_at(t);
        NodalFields {
            phi: (0..nn).map(|n| get(n, Field::Phi, 0).unwrap_or(0.0)).collect(),
            theta: (0..nn).map(|n| get(n, Field::Theta, 0).unwrap_or(th)).collect(),
            u: (0..nn)
                .map(|n| Vector3::from_fn(|c, _| get(n, Field::U, c).unwrap_or(0.0)))
                .collect(),
        }
    }

    /// Virgin state at `t_start`, with Φ solved for the initial excitation.
    pub fn initial_state(&self, t_start: f64) -> Result<CoupledState> {
        let theta0 = self.theta_at(t_start);
        let mut v = vec![0.0; self.base.len()];
        if let Some(r) = self.base.field_range(Field::Theta) {
            v[r].iter_mut().for_each(|x| *x = theta0);
        }
        if self.has(Field::Phi) {
            let nn = self.mesh.node_count();
            let inp = EmInput {
                mesh: &self.mesh,
                geom: &self.geom,
                u: &vec![Vector3::zeros(); nn],
                theta: &vec![theta0; nn],
                material: &self.em,
            };
            let g = self.ground.map_or(Grounding::None, Grounding::Node);
            let sol = solve_em(&inp, &self.coil, self.source_mode, t_start, g)?;
            let r = self.base.field_range(Field::Phi).unwrap();
            v[r].copy_from_slice(&sol.phi);
        }
        let qp = virgin_states(&self.mesh, &self.geom, theta0, &self.mech);
        let stress = self.geom.elements.iter().map(|q| vec![Matrix3::zeros(); q.len()]).collect();
        Ok(CoupledState {
            t: t_start,
            step: 0,
            v,
            qp,
            stress,
            released: vec![None; self.bc.releases.len()],
        })
    }

    fn drive(&self, t: f64, dt: f64) -> Result<Drive> {
        let rate = if self.has(Field::Phi) || self.has(Field::Theta) {
            source_rate(&self.coil, self.source_mode, t)?
        } else {
            0.0
        };
        let b = if self.body_force && self.source_mode == SourceMode::Instantaneous {
            self.coil.b_source(t)?
        } else {
            0.0
        };
        Ok(Drive {
            rate,
            grad_rate: potential_gradient(rate),
            b,
            dt,
        })
    }

    fn element_values(&self, nodes: &[usize], now: &NodalFields, old: &NodalFields) -> ElementValues {
        ElementValues {
            phi: gather(nodes, &now.phi),
            theta: gather(nodes, &now.theta),
            theta_old: gather(nodes, &old.theta),
            u: gather(nodes, &now.u),
        }
    }

    /// Global residual G(v) at time `t` from the converged state `old`, and
    /// the tangent ∂G/∂v when asked for. Rows of constrained dofs hold
    /// reactions.
    pub fn system(&self, old: &CoupledState, v: &[f64], t: f64, tangent: bool) -> Result<(Vec<f64>, Option<CsrMatrix>)> {
        self.system_with(old, v, t, tangent, false)
    }

    /// [`system`](Self::system) with the option of finite-difference
    /// element tangents.
    pub fn system_with(
        &self,
        old: &CoupledState,
        v: &[f64],
        t: f64,
        tangent: bool,
        fd: bool,
    ) -> Result<(Vec<f64>, Option<CsrMatrix>)> {
        if v.len() != self.base.len() {
            return Err(Error::DimensionMismatch(format!("{} unknowns for a layout of {}", v.len(), self.base.len())));
        }
        let dt = t - old.t;
        if !(dt >= 0.0) {
            return Err(Error::Contract(format!("step from {} back to {t}", old.t)));
        }
        let now = self.nodal(v, t);
        let before = self.nodal(&old.v, old.t);
        let drive = self.drive(t, dt)?;
        let (mut k, mut r) = self.asm.assemble(|e| {
            let vals = self.element_values(&self.mesh.elements[e].nodes, &now, &before);
            let states = &old.qp[e];
            let (rv, mut km) = element_full(self, e, &vals, states, &drive, tangent && !fd)?;
            if tangent && fd {
                km = Some(fd_tangent(&vals, self.fd_steps, |w| {
                    element_full(self, e, w, states, &drive, false).map(|x| x.0)
                })?);
            }
            Ok(compress(&rv, km.as_ref(), &self.active))
        })?;
        if !self.flux_facets.is_empty() {
            let (kf, rf) = self.asm.assemble_owned(&self.flux_owners, |i| {
                let fi = self.flux_facets[i];
                let vals = self.element_values(&self.mesh.elements[self.flux_owners[i]].nodes, &now, &before);
                let (rv, km) = facet_full(self, fi, &vals, dt, tangent)?;
                Ok(compress(&rv, km.as_ref(), &self.active))
            })?;
            for (a, b) in k.values_mut().iter_mut().zip(kf.values()) {
                *a += b;
            }
            for (a, b) in r.iter_mut().zip(&rf) {
                *a += b;
            }
        }
        if self.has(Field::U) {
            if !self.bc.mech.traction.is_empty() {
                let ext = traction_load(&self.mesh, &self.geom, &self.bc.mech, t)?;
                for n in 0..self.mesh.node_count() {
                    for c in 0..3 {
                        r[self.base.dof(n, Field::U, c).unwrap()] -= ext[3 * n + c];
                    }
                }
            }
            for (rel, list) in self.bc.releases.iter().zip(&old.released) {
                if let Some(list) = list {
                    let s = rel.ramp(t);
                    for &(d, f) in list {
                        r[d] -= s * f;
                    }
                }
            }
        }
        Ok((r, tangent.then_some(k)))
    }

    /// G(v) at `t` after the converged state `old`.
    pub fn residual_g(&self, old: &CoupledState, v: &[f64], t: f64) -> Result<Vec<f64>> {
        Ok(self.system(old, v, t, false)?.0)
    }

    /// ∂G/∂v at `v`.
    pub fn tangent_a(&self, old: &CoupledState, v: &[f64], t: f64) -> Result<CsrMatrix> {
        Ok(self.system(old, v, t, true)?.1.expect("tangent requested"))
    }

    /// Maximum over blocks of the block max norm divided by its scale.
    pub fn scaled_norm(&self, r: &[f64], free: &[usize], block_scaling: &[f64; 3]) -> f64 {
        let mut m = [0.0f64; 3];
        for &d in free {
            let b = self.field_of[d] as usize;
            m[b] = m[b].max(r[d].abs());
        }
        (0..3)
            .map(|b| m[b] / (self.scales[b] * block_scaling[b]))
            .fold(0.0, |acc, x| if x.is_nan() || acc.is_nan() { f64::NAN } else { acc.max(x) })
    }

    /// max |dx_d| / (magnitude of the field of d) over the given dofs.
    pub fn relative_increment(&self, v: &[f64], dofs: &[usize], dx: &[f64]) -> f64 {
        let mut mag = [0.0f64; 3];
        for (d, x) in v.iter().enumerate() {
            let b = self.field_of[d] as usize;
            mag[b] = mag[b].max(x.abs());
        }
        mag[2] = self.length;
        dofs.iter()
            .zip(dx)
            .map(|(&d, x)| {
                let m = mag[self.field_of[d] as usize];
                if m > 0.0 {
                    x.abs() / m
                } else if *x == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            })
            .fold(0.0, f64::max)
    }

    /// Captures the reactions of releases due at the state's time.
    pub fn capture_releases(&self, state: &mut CoupledState) -> Result<()> {
        let eps = 1e-9 * (1.0 + state.t.abs());
        let due: Vec<usize> = (0..self.bc.releases.len())
            .filter(|&i| state.released[i].is_none() && self.bc.releases[i].at <= state.t + eps)
            .collect();
        if due.is_empty() || !self.has(Field::U) {
            return Ok(());
        }
        let layout = self.constrained_layout(&state.released)?;
        let (r, _) = self.system(state, &state.v, state.t, false)?;
        for i in due {
            let rel = &self.bc.releases[i];
            let mut list = Vec::new();
            for &n in self.mesh.node_set(rel.region)? {
                let d = self.base.dof(n, Field::U, rel.component).unwrap();
                if layout.is_constrained(d) {
                    list.push((d, r[d]));
                }
            }
            state.released[i] = Some(list);
        }
        Ok(())
    }

    /// Accepts `v` at `t`: the material states advance and the step's
    /// stresses are stored.
    pub fn commit(&self, state: &mut CoupledState, v: Vec<f64>, t: f64) -> Result<()> {
        let nodal = self.nodal(&v, t);
        let pts = evaluate_material(
            &MechInput {
                mesh: &self.mesh,
                geom: &self.geom,
                u: &nodal.u,
                theta: &nodal.theta,
                params: &self.mech,
                states: &state.qp,
            },
            Want::Stress,
        )?;
        for (e, pe) in pts.into_iter().enumerate() {
            for (k, (st, trial)) in pe.into_iter().enumerate() {
                let s = &mut state.qp[e][k];
                s.set_trial(trial);
                s.mark_converged();
                s.commit()?;
                state.stress[e][k] = st.s;
            }
        }
        state.v = v;
        state.t = t;
        Ok(())
    }

    /// Currents and losses of a state.
    pub fn em_solution(&self, state: &CoupledState) -> Result<EmSolution> {
        let nodal = self.nodal(&state.v, state.t);
        let inp = EmInput {
            mesh: &self.mesh,
            geom: &self.geom,
            u: &nodal.u,
            theta: &nodal.theta,
            material: &self.em,
        };
        current_and_losses(&inp, &nodal.phi, &self.coil, self.source_mode, state.t)
    }

    fn advance(
        &self,
        state: &mut CoupledState,
        t1: f64,
        depth: usize,
        cfg: &SolverConfig,
        solver: &mut LinearSolver,
        report: &mut StepReport,
    ) -> Result<()> {
        self.capture_releases(state)?;
        match newton_step(self, state, t1, cfg, solver) {
            Ok(out) => {
                self.commit(state, out.v, t1)?;
                report.iterations += out.iterations;
                report.substeps += 1;
                report.substep_ends.push(t1);
                report.residuals = out.residuals;
                Ok(())
            }
            Err(e) if e.is_recoverable() && depth < cfg.max_cuts => {
                report.cuts += 1;
                let mid = 0.5 * (state.t + t1);
                self.advance(state, mid, depth + 1, cfg, solver, report)?;
                self.advance(state, t1, depth + 1, cfg, solver, report)
            }
            Err(e) if e.is_recoverable() => Err(Error::StepAborted {
                t: t1,
                cuts: depth,
                reason: e.to_string(),
            }),
            Err(e) => Err(e),
        }
    }

    /// Steps `state` to `cfg.t_end`. The observer sees the state after
    /// every nominal step; substeps from cuts are not reported separately.
    pub fn run<O>(&self, state: &mut CoupledState, cfg: &SolverConfig, mut observer: O) -> Result<Vec<StepReport>>
    where
        O: FnMut(&CoupledState, &StepReport) -> Result<()>,
    {
        cfg.validate()?;
        let breaks: Vec<f64> = self.bc.releases.iter().map(|r| r.at).collect();
        let grid: Vec<f64> = cfg.grid(&breaks).into_iter().filter(|&t| t > state.t).collect();
        let mut solver = LinearSolver::new();
        let mut reports = Vec::with_capacity(grid.len());
        for t1 in grid {
            let mut report = StepReport {
                step: state.step + 1,
                t: t1,
                dt: t1 - state.t,
                ..Default::default()
            };
            self.advance(state, t1, 0, cfg, &mut solver, &mut report)?;
            state.step += 1;
            observer(state, &report)?;
            reports.push(report);
        }
        Ok(reports)
    }
}

#[cfg(test)]
mod tests;
