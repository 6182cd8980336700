//! Scenario drivers and probes.

use std::path::Path;

use nalgebra::{Matrix3, Vector3};

use super::config::{Mode, ScenarioConfig, Scenario};
use crate::coupled::{BoundaryProgram, CoupledProblem, CoupledState, Physics, StepReport};
use crate::error::{Error, Result};
use crate::fem::{gather, Field, Mesh, ShapeData};
use crate::kinematics::deformation_at;

/// One row of the probe time series.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TimeSeriesRecord {
    pub t: f64,
    /// Temperature at the probe node (K).
    pub theta: f64,
    /// Volume average of F_yy − 1.
    pub eps_yy: f64,
    /// Volume average of the Cauchy stress σ_yy (Pa).
    pub sigma_yy: f64,
    /// Volume average of the second Piola–Kirchhoff stress S_yy (Pa).
    pub pk2_yy: f64,
    /// Displacement of the probe node in the probe component (m).
    pub u: f64,
    /// Force on the reaction region in the reaction component (N).
    pub reaction: f64,
    /// Total Joule power (W).
    pub joule_power: f64,
    pub theta_min: f64,
    pub theta_max: f64,
    /// Volume average of θ (K).
    pub theta_mean: f64,
    /// Largest nodal displacement magnitude (m).
    pub u_max: f64,
}

impl TimeSeriesRecord {
    pub const HEADER: [&'static str; 12] = [
        "t",
        "theta",
        "eps_yy",
        "sigma_yy",
        "pk2_yy",
        "u",
        "reaction",
        "joule_power",
        "theta_min",
        "theta_max",
        "theta_mean",
        "u_max",
    ];

    pub fn values(&self) -> [f64; 12] {
        [
            self.t,
            self.theta,
            self.eps_yy,
            self.sigma_yy,
            self.pk2_yy,
            self.u,
            self.reaction,
            self.joule_power,
            self.theta_min,
            self.theta_max,
            self.theta_mean,
            self.u_max,
        ]
    }
}

/// Nodal fields at one instant, with the quadrature-point current density
/// and loss averaged to the nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub step: usize,
    pub t: f64,
    pub u: Vec<Vector3<f64>>,
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
    /// (𝓙, w_L) when Φ is solved for.
    pub em: Option<(Vec<Vector3<f64>>, Vec<f64>)>,
}

pub struct RunOutput {
    pub config: ScenarioConfig,
    pub problem: CoupledProblem,
    pub state: CoupledState,
    pub records: Vec<TimeSeriesRecord>,
    pub reports: Vec<StepReport>,
    pub snapshots: Vec<Snapshot>,
}

/// Builds the problem of a scenario; `base_dir` resolves mesh files.
pub fn build_problem(cfg: &ScenarioConfig, base_dir: &Path) -> Result<CoupledProblem> {
    cfg.check()?;
    let mesh = cfg.mesh.build(base_dir)?;
    cfg.check_mesh(&mesh)?;
    let physics = Physics {
        mech: cfg.mech,
        thermal: cfg.thermal.clone(),
        em: cfg.em,
        coil: cfg.coil.clone(),
        source_mode: cfg.options.source_mode,
        body_force: cfg.options.em_body_force,
        grounding: cfg.options.grounding,
    };
    let bc: BoundaryProgram = cfg.bc.clone();
    let theta0 = match (cfg.mode, &bc.theta) {
        (Mode::Imposed, Some(p)) => p.eval(cfg.solver.t_start),
        _ => cfg.theta0,
    };
    CoupledProblem::new(mesh, physics, &cfg.fields(), bc, theta0)
}

/// Node of `region` closest to the region's centroid.
fn central_node(mesh: &Mesh, region: i64) -> Result<usize> {
    let nodes = mesh.node_set(region)?;
    let c = nodes.iter().map(|&n| mesh.nodes[n]).sum::<Vector3<f64>>() / nodes.len() as f64;
    nodes
        .iter()
        .copied()
        .min_by(|&a, &b| (mesh.nodes[a] - c).norm().total_cmp(&(mesh.nodes[b] - c).norm()).then(a.cmp(&b)))
        .ok_or(Error::UnknownRegion(region))
}

pub struct Prober {
    node: usize,
    component: usize,
    region: i64,
    reaction_component: usize,
}

impl Prober {
    pub fn new(cfg: &ScenarioConfig, p: &CoupledProblem) -> Result<Self> {
        let node = match cfg.probes.node {
            Some(n) => n,
            None => central_node(&p.mesh, cfg.probes.reaction_region)?,
        };
        Ok(Prober {
            node,
            component: cfg.probes.component,
            region: cfg.probes.reaction_region,
            reaction_component: cfg.probes.reaction_component,
        })
    }

    pub fn node(&self) -> usize {
        self.node
    }

    /// Force carried by the region: reactions on its constrained dofs plus
    /// the ramped loads that replace released constraints.
    fn reaction(&self, p: &CoupledProblem, s: &CoupledState) -> Result<f64> {
        if !p.has(Field::U) {
            return Ok(0.0);
        }
        let (r, _) = p.system(s, &s.v, s.t, false)?;
        let layout = p.constrained_layout(&s.released)?;
        let c = self.reaction_component;
        let mut force = 0.0;
        for &n in p.mesh.node_set(self.region)? {
            let d = layout.dof(n, Field::U, c).unwrap();
            if layout.is_constrained(d) {
                force += r[d];
            }
        }
        for (rel, list) in p.bc.releases.iter().zip(&s.released) {
            if let (true, Some(list)) = (rel.region == self.region && rel.component == c, list) {
                force += list.iter().map(|(_, f)| f).sum::<f64>() * rel.ramp(s.t);
            }
        }
        Ok(force)
    }

    pub fn record(&self, p: &CoupledProblem, s: &CoupledState) -> Result<TimeSeriesRecord> {
        let nodal = p.nodal(&s.v, s.t);
        let (mut vol, mut eps, mut sig, mut pk2, mut th) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (e, el) in p.mesh.elements.iter().enumerate() {
            let u = gather(&el.nodes, &nodal.u);
            let theta = gather(&el.nodes, &nodal.theta);
            for (q, stress) in p.geom.elements[e].iter().zip(&s.stress[e]) {
                let f = deformation_at(q, &u, e)?.f;
                let cauchy: Matrix3<f64> = f * stress * f.transpose() / f.determinant();
                vol += q.dv;
                eps += q.dv * (f[(1, 1)] - 1.0);
                sig += q.dv * cauchy[(1, 1)];
                pk2 += q.dv * stress[(1, 1)];
                th += q.dv * q.interpolate(&theta);
            }
        }
        let joule_power = if p.has(Field::Phi) {
            p.em_solution(s)?.total_power(&p.geom)
        } else {
            0.0
        };
        Ok(TimeSeriesRecord {
            t: s.t,
            theta: nodal.theta[self.node],
            eps_yy: eps / vol,
            sigma_yy: sig / vol,
            pk2_yy: pk2 / vol,
            u: nodal.u[self.node][self.component],
            reaction: self.reaction(p, s)?,
            joule_power,
            theta_min: nodal.theta.iter().copied().fold(f64::INFINITY, f64::min),
            theta_max: nodal.theta.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            theta_mean: th / vol,
            u_max: nodal.u.iter().map(|u| u.norm()).fold(0.0, f64::max),
        })
    }
}

/// Element means of quadrature-point values averaged over the elements
/// around each node.
fn to_nodes<T>(mesh: &Mesh, p: &CoupledProblem, qp: &[Vec<T>], zero: T) -> Vec<T>
where
    T: Copy + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
{
    let mut sum = vec![zero; mesh.node_count()];
    let mut count = vec![0usize; mesh.node_count()];
    for (e, el) in mesh.elements.iter().enumerate() {
        let qs = &p.geom.elements[e];
        let vol: f64 = qs.iter().map(|q| q.dv).sum();
        let mean = qs.iter().zip(&qp[e]).fold(zero, |acc, (q, &v)| acc + v * (q.dv / vol));
        for &n in &el.nodes {
            sum[n] = sum[n] + mean;
            count[n] += 1;
        }
    }
    sum.into_iter().zip(count).map(|(s, c)| if c > 0 { s * (1.0 / c as f64) } else { s }).collect()
}

pub fn snapshot(p: &CoupledProblem, s: &CoupledState) -> Result<Snapshot> {
    let nodal = p.nodal(&s.v, s.t);
    let em = if p.has(Field::Phi) {
        let sol = p.em_solution(s)?;
        Some((to_nodes(&p.mesh, p, &sol.current, Vector3::zeros()), to_nodes(&p.mesh, p, &sol.loss, 0.0)))
    } else {
        None
    };
    Ok(Snapshot {
        step: s.step,
        t: s.t,
        u: nodal.u,
        theta: nodal.theta,
        phi: nodal.phi,
        em,
    })
}

/// Runs a scenario to the end of its schedule.
pub fn run(cfg: &ScenarioConfig, base_dir: &Path) -> Result<RunOutput> {
    let problem = build_problem(cfg, base_dir)?;
    let prober = Prober::new(cfg, &problem)?;
    let mut state = problem.initial_state(cfg.solver.t_start)?;
    let mut times = cfg.output.snapshots.clone();
    times.sort_by(f64::total_cmp);
    let eps = 1e-9 * cfg.solver.dt;
    let mut next = 0;
    let mut records = vec![prober.record(&problem, &state)?];
    let mut snapshots = Vec::new();
    let mut take = |s: &CoupledState, snaps: &mut Vec<Snapshot>| -> Result<()> {
        let mut due = false;
        while next < times.len() && times[next] <= s.t + eps {
            due = true;
            next += 1;
        }
        if due {
            snaps.push(snapshot(&problem, s)?);
        }
        Ok(())
    };
    take(&state, &mut snapshots)?;
    let reports = problem.run(&mut state, &cfg.solver, |s, _| {
        records.push(prober.record(&problem, s)?);
        take(s, &mut snapshots)
    })?;
    Ok(RunOutput {
        config: cfg.clone(),
        problem,
        state,
        records,
        reports,
        snapshots,
    })
}

fn expect(cfg: &ScenarioConfig, s: Scenario) -> Result<()> {
    if cfg.scenario != s {
        return Err(Error::Config(format!("expected a {s} config, got {}", cfg.scenario)));
    }
    Ok(())
}

/// Single-element cube cycle.
pub fn run_sec(cfg: &ScenarioConfig, base_dir: &Path) -> Result<RunOutput> {
    expect(cfg, Scenario::Sec)?;
    run(cfg, base_dir)
}

/// Coil-heated stent cycle.
pub fn run_cvs(cfg: &ScenarioConfig, base_dir: &Path) -> Result<RunOutput> {
    expect(cfg, Scenario::Cvs)?;
    run(cfg, base_dir)
}
