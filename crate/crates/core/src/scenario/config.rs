//! Scenario configuration: typed sections, scenario defaults and the
//! TOML override merge.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::coil::CoilSpec;
use crate::coupled::{BoundaryProgram, Release, SolverConfig};
use crate::electrokinetics::{EmMaterial, Grounding, SourceMode};
use crate::error::{Error, Result};
use crate::fem::gmsh::read_msh;
use crate::fem::{box_hex, solid_cylinder, tags, tube, unit_cube, Field, Mesh, PiecewiseLinear};
use crate::mechanics::{DisplacementBc, MechBc};
use crate::smp::MechParams;
use crate::thermal::ThermalParams;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Single-element cube.
    Sec,
    /// Cylindrical stent.
    Cvs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Mechanics only, θ(t) from `bc.theta`.
    Imposed,
    /// Φ, θ and u solved together.
    Coupled,
}

impl FromStr for Scenario {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sec" => Ok(Scenario::Sec),
            "cvs" => Ok(Scenario::Cvs),
            _ => Err(Error::Config(format!("unknown scenario `{s}` (expected sec or cvs)"))),
        }
    }
}

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "imposed" => Ok(Mode::Imposed),
            "coupled" => Ok(Mode::Coupled),
            _ => Err(Error::Config(format!("unknown mode `{s}` (expected imposed or coupled)"))),
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scenario::Sec => "sec",
            Scenario::Cvs => "cvs",
        })
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Imposed => "imposed",
            Mode::Coupled => "coupled",
        })
    }
}

/// Where the mesh comes from. Gmsh paths are relative to the config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeshSource {
    Cube {
        edge: f64,
    },
    Box {
        size: [f64; 3],
        divisions: [usize; 3],
    },
    Tube {
        r_inner: f64,
        r_outer: f64,
        length: f64,
        n_circ: usize,
        n_axial: usize,
        n_thick: usize,
    },
    Cylinder {
        radius: f64,
        length: f64,
        n_radial: usize,
        n_circ: usize,
        n_axial: usize,
    },
    Gmsh {
        path: PathBuf,
    },
}

impl MeshSource {
    pub fn build(&self, base_dir: &Path) -> Result<Mesh> {
        match self {
            MeshSource::Cube { edge } => {
                if !(*edge > 0.0) {
                    return Err(Error::InvalidMesh(format!("cube edge {edge} <= 0")));
                }
                Ok(unit_cube(*edge))
            }
            MeshSource::Box { size, divisions } => {
                if size.iter().any(|s| !(*s > 0.0)) || divisions.contains(&0) {
                    return Err(Error::InvalidMesh("box needs positive sizes and divisions".into()));
                }
                Ok(box_hex(*size, *divisions))
            }
            MeshSource::Tube {
                r_inner,
                r_outer,
                length,
                n_circ,
                n_axial,
                n_thick,
            } => tube(*r_inner, *r_outer, *length, *n_circ, *n_axial, *n_thick),
            MeshSource::Cylinder {
                radius,
                length,
                n_radial,
                n_circ,
                n_axial,
            } => solid_cylinder(*radius, *length, *n_radial, *n_circ, *n_axial),
            MeshSource::Gmsh { path } => read_msh(&base_dir.join(path)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Options {
    /// Lorentz body force in the momentum balance.
    pub em_body_force: bool,
    pub source_mode: SourceMode,
    pub grounding: Grounding,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Probes {
    /// Node of the θ and u probes; defaults to the node of the reaction
    /// region closest to its centroid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node: Option<usize>,
    /// Displacement component of the u probe.
    pub component: usize,
    /// Region whose reaction force is recorded.
    pub reaction_region: i64,
    pub reaction_component: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// A VTK snapshot is written at the first step reaching each time.
    pub snapshots: Vec<f64>,
}

/// Fully resolved scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub mode: Mode,
    /// Initial temperature (K).
    pub theta0: f64,
    pub mesh: MeshSource,
    pub mech: MechParams,
    pub thermal: ThermalParams,
    pub em: EmMaterial,
    pub coil: CoilSpec,
    pub solver: SolverConfig,
    pub bc: BoundaryProgram,
    pub options: Options,
    pub probes: Probes,
    pub output: OutputConfig,
}

/// Command-line values that take precedence over the file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub scenario: Option<Scenario>,
    pub mode: Option<Mode>,
    pub dt: Option<f64>,
    pub out: Option<PathBuf>,
}

/// Single-element cube schedule: stretch by 10 % at 400 K, cool to 200 K,
/// unload, reheat to 400 K; one second per phase.
pub fn sec_defaults() -> ScenarioConfig {
    let edge = 1e-3;
    let strain = 0.1;
    let fixed = |region, component| DisplacementBc {
        region,
        component,
        program: PiecewiseLinear::constant(0.0),
    };
    let pull = DisplacementBc {
        region: tags::YMAX,
        component: 1,
        program: PiecewiseLinear::new(&[[0.0, 0.0], [1.0, strain * edge]]).unwrap(),
    };
    ScenarioConfig {
        scenario: Scenario::Sec,
        mode: Mode::Imposed,
        theta0: 400.0,
        mesh: MeshSource::Cube { edge },
        mech: MechParams::sec(),
        thermal: ThermalParams::default(),
        em: EmMaterial::default(),
        coil: CoilSpec::default(),
        solver: SolverConfig {
            t_end: 4.0,
            dt: 0.02,
            ..SolverConfig::default()
        },
        bc: BoundaryProgram {
            mech: MechBc {
                dirichlet: vec![fixed(tags::XMIN, 0), fixed(tags::YMIN, 1), fixed(tags::ZMIN, 2), pull],
                traction: Vec::new(),
            },
            theta: Some(
                PiecewiseLinear::new(&[[0.0, 400.0], [1.0, 400.0], [2.0, 200.0], [3.0, 200.0], [4.0, 400.0]]).unwrap(),
            ),
            releases: vec![Release {
                region: tags::YMAX,
                component: 1,
                at: 2.0,
                ramp_end: 3.0,
            }],
        },
        options: Options {
            em_body_force: false,
            source_mode: SourceMode::Instantaneous,
            grounding: Grounding::BoundaryMin,
        },
        probes: Probes {
            node: None,
            component: 1,
            reaction_region: tags::YMAX,
            reaction_component: 1,
        },
        output: OutputConfig {
            dir: PathBuf::from("out/sec"),
            snapshots: vec![1.0, 2.0, 3.0, 4.0],
        },
    }
}

/// Target mean temperature of the stent: hold 350 K while crimping, cool to
/// 320 K, unload, reheat to 350 K and hold.
pub fn cvs_theta_target() -> PiecewiseLinear {
    PiecewiseLinear::new(&[[0.0, 350.0], [1e-3, 350.0], [4e-3, 320.0], [5e-3, 320.0], [7e-3, 350.0], [8e-3, 350.0]]).unwrap()
}

/// Coil amplitude that keeps a thin tube on the lumped heat balance
/// ρc θ̇ = ⟨w⟩ − h (A/V) (θ − θ_B), where ⟨w⟩ = σ (ω G b I₀)² ⟨r²⟩ / 8
/// is the period-averaged loss of an azimuthal eddy current and the
/// convecting surface is the inner wall.
pub fn tube_current(
    target: &PiecewiseLinear,
    r_inner: f64,
    r_outer: f64,
    coil: &CoilSpec,
    em: &EmMaterial,
    thermal: &ThermalParams,
    samples_per_segment: usize,
) -> Result<PiecewiseLinear> {
    let mean_r2 = 0.5 * (r_outer * r_outer + r_inner * r_inner);
    let area_per_volume = 2.0 * r_inner / (r_outer * r_outer - r_inner * r_inner);
    let drive = coil.omega() * coil.gain() * coil.ac;
    let gain = em.sigma * drive * drive * mean_r2 / 8.0;
    let rc = thermal.capacity();
    let pts = target.points();
    let slope = |k: usize| (pts[k + 1][1] - pts[k][1]) / (pts[k + 1][0] - pts[k][0]);
    let current = |theta: f64, rate: f64| {
        let power = rc * rate + thermal.h_conv * area_per_volume * (theta - thermal.theta_bulk);
        (power.max(0.0) / gain).sqrt()
    };
    let n = pts.len();
    if n < 2 {
        return Ok(PiecewiseLinear::constant(current(pts[0][1], 0.0)));
    }
    let mut out = Vec::new();
    for k in 0..n - 1 {
        let s = slope(k);
        for j in 0..samples_per_segment.max(1) {
            let f = j as f64 / samples_per_segment.max(1) as f64;
            let t = pts[k][0] + f * (pts[k + 1][0] - pts[k][0]);
            let theta = pts[k][1] + f * (pts[k + 1][1] - pts[k][1]);
            let rate = if j == 0 && k > 0 { 0.5 * (s + slope(k - 1)) } else { s };
            out.push([t, current(theta, rate)]);
        }
    }
    out.push([pts[n - 1][0], current(pts[n - 1][1], slope(n - 2))]);
    PiecewiseLinear::new(&out)
}

/// Coil-heated stent: crimp the top line of a tube, cool, unload, reheat.
pub fn cvs_defaults() -> ScenarioConfig {
    let (r_inner, r_outer, length) = (1.25e-3, 1.5e-3, 20e-3);
    let crimp = 0.15e-3;
    let fixed = |region, component| DisplacementBc {
        region,
        component,
        program: PiecewiseLinear::constant(0.0),
    };
    let em = EmMaterial::default();
    let thermal = ThermalParams {
        convection_regions: vec![tags::INNER],
        ..ThermalParams::default()
    };
    let mut coil = CoilSpec::default();
    coil.amplitude = tube_current(&cvs_theta_target(), r_inner, r_outer, &coil, &em, &thermal, 8).unwrap();
    let mut dirichlet: Vec<DisplacementBc> = (0..3).map(|c| fixed(tags::BOTTOM_LINE, c)).collect();
    dirichlet.push(fixed(tags::TOP_LINE, 0));
    dirichlet.push(DisplacementBc {
        region: tags::TOP_LINE,
        component: 1,
        program: PiecewiseLinear::new(&[[0.0, 0.0], [1e-3, -crimp]]).unwrap(),
    });
    ScenarioConfig {
        scenario: Scenario::Cvs,
        mode: Mode::Coupled,
        theta0: 350.0,
        mesh: MeshSource::Tube {
            r_inner,
            r_outer,
            length,
            n_circ: 32,
            n_axial: 8,
            n_thick: 2,
        },
        mech: MechParams::cvs(),
        thermal,
        em,
        coil,
        solver: SolverConfig {
            t_end: 8e-3,
            dt: 5e-5,
            // the glass fraction switches branch where the local heating
            // rate changes sign; plain Newton cycles there
            ls_backtrack: Some(0.5),
            ..SolverConfig::default()
        },
        bc: BoundaryProgram {
            mech: MechBc {
                dirichlet,
                traction: Vec::new(),
            },
            theta: None,
            releases: vec![Release {
                region: tags::TOP_LINE,
                component: 1,
                at: 4e-3,
                ramp_end: 5e-3,
            }],
        },
        options: Options {
            em_body_force: false,
            source_mode: SourceMode::PeriodAveraged,
            grounding: Grounding::BoundaryMin,
        },
        probes: Probes {
            node: None,
            component: 1,
            reaction_region: tags::TOP_LINE,
            reaction_component: 1,
        },
        output: OutputConfig {
            dir: PathBuf::from("out/cvs"),
            snapshots: vec![1e-3, 4e-3, 5e-3, 6e-3, 7e-3, 8e-3],
        },
    }
}

pub fn defaults(scenario: Scenario) -> ScenarioConfig {
    match scenario {
        Scenario::Sec => sec_defaults(),
        Scenario::Cvs => cvs_defaults(),
    }
}

/// Recursive table merge. Tables whose `generator` differs are replaced
/// whole so that the fields of another mesh kind do not leak in.
fn merge(base: &mut Table, over: Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(Value::Table(b)), Value::Table(o)) if b.get("generator").is_none() || o.get("generator").is_none() || b.get("generator") == o.get("generator") => {
                merge(b, o)
            }
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

fn to_table(cfg: &ScenarioConfig) -> Result<Table> {
    match Value::try_from(cfg).map_err(|e| Error::Config(e.to_string()))? {
        Value::Table(t) => Ok(t),
        _ => unreachable!("a struct serializes to a table"),
    }
}

/// First line of `text` that assigns `key` or opens a table named `key`.
fn line_of(text: &str, key: &str) -> Option<usize> {
    text.lines().position(|l| {
        let l = l.trim_start();
        let bare = l.strip_prefix(key).map(|r| r.trim_start().starts_with('='));
        bare == Some(true) || l.trim_start_matches('[').starts_with(key) && l.starts_with('[') && l.contains(']')
    })
    .map(|i| i + 1)
}

fn backticked(msg: &str) -> Vec<&str> {
    msg.split('`').skip(1).step_by(2).collect()
}

/// Parses a config text. `scenario` in the overrides (or else in the file)
/// selects the defaults that the file then amends.
pub fn parse_config_str(text: &str, overrides: &Overrides) -> Result<ScenarioConfig> {
    let user: Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string().trim_end().to_string()))?;
    let scenario = match (overrides.scenario, user.get("scenario")) {
        (Some(s), _) => s,
        (None, Some(Value::String(s))) => s.parse()?,
        (None, Some(v)) => return Err(Error::Config(format!("scenario must be a string, got {v}"))),
        (None, None) => return Err(Error::Config("no scenario given (set `scenario` or pass --scenario)".into())),
    };
    let mut table = to_table(&defaults(scenario))?;
    merge(&mut table, user);
    table.insert("scenario".into(), Value::String(scenario.to_string()));
    if let Some(m) = overrides.mode {
        table.insert("mode".into(), Value::String(m.to_string()));
    }
    let solver = table.get_mut("solver").and_then(Value::as_table_mut);
    if let (Some(dt), Some(s)) = (overrides.dt, solver) {
        s.insert("dt".into(), Value::Float(dt));
    }
    if let (Some(out), Some(o)) = (&overrides.out, table.get_mut("output").and_then(Value::as_table_mut)) {
        o.insert("dir".into(), Value::String(out.display().to_string()));
    }
    let cfg: ScenarioConfig = Value::Table(table).try_into().map_err(|e: toml::de::Error| {
        let msg = e.to_string().trim_end().to_string();
        let keys = backticked(&msg).into_iter().map(|k| k.rsplit('.').next().unwrap_or(k));
        match keys.filter_map(|k| line_of(text, k)).next() {
            Some(line) => Error::Config(format!("line {line}: {msg}")),
            None => Error::Config(msg),
        }
    })?;
    cfg.check()?;
    Ok(cfg)
}

pub fn parse_config(path: &Path, overrides: &Overrides) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config_str(&text, overrides).map_err(|e| match e {
        Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

impl ScenarioConfig {
    /// Checks that do not need the mesh.
    pub fn check(&self) -> Result<()> {
        self.solver.validate()?;
        self.mech.validate()?;
        self.thermal.validate()?;
        self.em.validate()?;
        self.coil.validate()?;
        if self.mode == Mode::Imposed && self.bc.theta.is_none() {
            return Err(Error::Config("imposed mode needs a temperature program bc.theta".into()));
        }
        if self.probes.component > 2 || self.probes.reaction_component > 2 {
            return Err(Error::Config("probe components must be 0, 1 or 2".into()));
        }
        if self.output.snapshots.iter().any(|t| !t.is_finite()) {
            return Err(Error::Config("snapshot times must be finite".into()));
        }
        Ok(())
    }

    /// Checks that reference mesh regions.
    pub fn check_mesh(&self, mesh: &Mesh) -> Result<()> {
        let regions = self
            .bc
            .mech
            .dirichlet
            .iter()
            .map(|d| d.region)
            .chain(self.bc.releases.iter().map(|r| r.region))
            .chain([self.probes.reaction_region]);
        for r in regions {
            if !mesh.node_sets.contains_key(&r) {
                return Err(Error::Config(format!("region {r} is not in the mesh")));
            }
        }
        for &r in self.thermal.convection_regions.iter().chain(&self.thermal.radiation_regions) {
            if !mesh.facets.iter().any(|f| f.region == r) {
                return Err(Error::Config(format!("boundary region {r} has no facets in the mesh")));
            }
        }
        if let Some(n) = self.probes.node {
            if n >= mesh.node_count() {
                return Err(Error::Config(format!("probe node {n} out of range ({} nodes)", mesh.node_count())));
            }
        }
        Ok(())
    }

    pub fn fields(&self) -> Vec<Field> {
        match self.mode {
            Mode::Imposed => vec![Field::U],
            Mode::Coupled => vec![Field::Phi, Field::Theta, Field::U],
        }
    }

    /// The resolved config as TOML; parsing it gives back `self`.
    pub fn echo(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_sec_defaults() {
        let c = parse_config_str("", &Overrides { scenario: Some(Scenario::Sec), ..Default::default() }).unwrap();
        assert_eq!(c, sec_defaults());
        assert_eq!(c.mech.e_r, 0.9e6);
        assert_eq!(c.mech.theta_t, 350.0);
        assert_eq!(c.mech.w, 0.2);
    }

    #[test]
    fn cvs_defaults_carry_the_stent_set() {
        let c = parse_config_str("scenario = \"cvs\"", &Overrides::default()).unwrap();
        assert_eq!((c.mech.theta_t, c.mech.delta_theta, c.mech.w), (344.0, 5.0, 0.375));
        assert_eq!((c.coil.frequency, c.em.sigma), (1000.0, 1e4));
        assert_eq!(c.mode, Mode::Coupled);
    }

    #[test]
    fn overrides_merge_into_sections() {
        let text = "scenario = \"sec\"\n[mech]\nr_pg = 5e6\n[solver]\nnewton_tol = 1e-9\n";
        let c = parse_config_str(text, &Overrides { dt: Some(0.01), ..Default::default() }).unwrap();
        assert_eq!(c.mech.r_pg, 5e6);
        assert_eq!(c.mech.e_g, 771e6);
        assert_eq!(c.solver.newton_tol, 1e-9);
        assert_eq!(c.solver.dt, 0.01);
        assert_eq!(c.solver.t_end, 4.0);
    }

    #[test]
    fn command_line_wins_over_file() {
        let text = "scenario = \"cvs\"\nmode = \"coupled\"\n[output]\ndir = \"a\"\n";
        let o = Overrides {
            scenario: Some(Scenario::Sec),
            mode: Some(Mode::Coupled),
            out: Some("b".into()),
            ..Default::default()
        };
        let c = parse_config_str(text, &o).unwrap();
        assert_eq!((c.scenario, c.mode), (Scenario::Sec, Mode::Coupled));
        assert_eq!(c.output.dir, PathBuf::from("b"));
    }

    #[test]
    fn mesh_kind_switch_replaces_the_section() {
        let text = "scenario = \"sec\"\n[mesh]\ngenerator = \"box\"\nsize = [1e-3, 2e-3, 1e-3]\ndivisions = [1, 2, 1]\n";
        let c = parse_config_str(text, &Overrides::default()).unwrap();
        assert_eq!(
            c.mesh,
            MeshSource::Box {
                size: [1e-3, 2e-3, 1e-3],
                divisions: [1, 2, 1]
            }
        );
    }

    #[test]
    fn unknown_key_is_named() {
        let text = "scenario = \"sec\"\n[mech]\n\ne_rr = 1.0\n";
        let err = parse_config_str(text, &Overrides::default()).unwrap_err().to_string();
        assert!(err.contains("e_rr"), "{err}");
        assert!(err.contains("line 4"), "{err}");
    }

    #[test]
    fn malformed_numbers_name_the_line() {
        let err = parse_config_str("scenario = \"sec\"\n[mech]\ne_r = 1.2.3\n", &Overrides::default())
            .unwrap_err()
            .to_string();
        assert!(err.contains("line 3"), "{err}");
        let err = parse_config_str("scenario = \"sec\"\n[mech]\ne_g = \"x\"\n", &Overrides::default())
            .unwrap_err()
            .to_string();
        assert!(err.contains("line 3"), "{err}");
    }

    #[test]
    fn missing_scenario_and_bad_mode_are_errors() {
        assert!(parse_config_str("", &Overrides::default()).is_err());
        assert!(parse_config_str("scenario = \"sec\"\nmode = \"both\"", &Overrides::default()).is_err());
        let text = "scenario = \"cvs\"\nmode = \"imposed\"";
        assert!(parse_config_str(text, &Overrides::default()).unwrap_err().to_string().contains("bc.theta"));
    }

    #[test]
    fn echo_round_trips() {
        for s in [Scenario::Sec, Scenario::Cvs] {
            let c = defaults(s);
            let again = parse_config_str(&c.echo().unwrap(), &Overrides::default()).unwrap();
            assert_eq!(again, c);
        }
        let mut c = cvs_defaults();
        c.probes.node = Some(3);
        c.options.grounding = Grounding::Node(7);
        c.solver.ls_backtrack = Some(0.5);
        let again = parse_config_str(&c.echo().unwrap(), &Overrides::default()).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn region_checks_use_the_mesh() {
        let mut c = sec_defaults();
        let mesh = c.mesh.build(Path::new(".")).unwrap();
        c.check_mesh(&mesh).unwrap();
        c.thermal.convection_regions = vec![tags::INNER];
        assert!(c.check_mesh(&mesh).is_err());
        let c = cvs_defaults();
        c.check_mesh(&c.mesh.build(Path::new(".")).unwrap()).unwrap();
    }

    #[test]
    fn designed_current_balances_the_lumped_tube() {
        let c = cvs_defaults();
        let (ri, ro) = (1.25e-3, 1.5e-3);
        // hold at 350 K at the start: loss equals the convective loss
        let i0 = c.coil.amplitude.eval(0.0);
        let b_dot = c.coil.gain() * i0 * c.coil.omega();
        let mean_loss = c.em.sigma * b_dot * b_dot / 8.0 * (ro * ro + ri * ri) / 2.0;
        let sink = c.thermal.h_conv * 2.0 * std::f64::consts::PI * ri * (350.0 - 300.0)
            / (std::f64::consts::PI * (ro * ro - ri * ri));
        assert!((mean_loss / sink - 1.0).abs() < 1e-12);
        // cooling uses less current than holding, reheating more
        assert!(c.coil.amplitude.eval(2.5e-3) < c.coil.amplitude.eval(0.5e-3));
        assert!(c.coil.amplitude.eval(6e-3) > c.coil.amplitude.eval(4.5e-3));
    }
}
