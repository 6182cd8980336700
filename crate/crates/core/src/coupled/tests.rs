use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::fem::{box_hex, tags, unit_cube};
use crate::mechanics::DisplacementBc;

fn physics() -> Physics {
    Physics {
        mech: MechParams::sec(),
        thermal: ThermalParams::default(),
        em: EmMaterial::default(),
        coil: CoilSpec::default(),
        source_mode: SourceMode::Instantaneous,
        body_force: false,
        grounding: Grounding::BoundaryMin,
    }
}

/// Two-element bar with every coupling switched on.
fn rich_problem() -> CoupledProblem {
    let mut ph = physics();
    ph.em.sigma_alpha = 4e-3;
    ph.thermal.kappa_alpha = 2e-3;
    ph.thermal.convection_regions = vec![tags::XMIN, tags::YMAX];
    ph.thermal.radiation_regions = vec![tags::ZMAX];
    ph.thermal.emissivity = 0.8;
    ph.coil.dc = 0.3;
    ph.coil.amplitude = PiecewiseLinear::ramp(0.0, 30.0, 1.0, 50.0).unwrap();
    ph.body_force = true;
    let mesh = box_hex([2e-3, 1e-3, 1e-3], [2, 1, 1]);
    let bc = BoundaryProgram {
        mech: MechBc {
            dirichlet: (0..3)
                .map(|c| DisplacementBc {
                    region: tags::XMIN,
                    component: c,
                    program: PiecewiseLinear::constant(0.0),
                })
                .collect(),
            traction: Vec::new(),
        },
        ..Default::default()
    };
    CoupledProblem::new(mesh, ph, &[Field::Phi, Field::Theta, Field::U], bc, 360.0).unwrap()
}

fn perturbed(p: &CoupledProblem, old: &CoupledState, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l = p.layout();
    let mut v = old.v.clone();
    for n in 0..p.mesh.node_count() {
        v[l.dof(n, Field::Phi, 0).unwrap()] = rng.gen_range(-1e-4..1e-4);
        v[l.dof(n, Field::Theta, 0).unwrap()] = 345.0 + rng.gen_range(-3.0..3.0);
        for c in 0..3 {
            v[l.dof(n, Field::U, c).unwrap()] = rng.gen_range(-1e-5..1e-5);
        }
    }
    v
}

/// max |A − FD| / max |FD| per (row field, column field) block.
fn block_errors(p: &CoupledProblem, old: &CoupledState, v: &[f64], t: f64) -> Vec<(Field, Field, f64, f64)> {
    let a = p.tangent_a(old, v, t).unwrap().to_dense();
    let l = p.layout();
    let n = v.len();
    let mut fd = nalgebra::DMatrix::zeros(n, n);
    for j in 0..n {
        let h = match l.describe(j).unwrap().1 {
            Field::Phi => 1e-8,
            Field::Theta => 1e-4,
            Field::U => 1e-10,
        };
        let mut w = v.to_vec();
        w[j] += h;
        let rp = p.residual_g(old, &w, t).unwrap();
        w[j] -= 2.0 * h;
        let rm = p.residual_g(old, &w, t).unwrap();
        for i in 0..n {
            fd[(i, j)] = (rp[i] - rm[i]) / (2.0 * h);
        }
    }
    let mut out = Vec::new();
    for &fr in l.fields() {
        for &fc in l.fields() {
            let (rr, cr) = (l.field_range(fr).unwrap(), l.field_range(fc).unwrap());
            let mut diff: f64 = 0.0;
            let mut scale: f64 = 0.0;
            for i in rr.clone() {
                for j in cr.clone() {
                    diff = diff.max((a[(i, j)] - fd[(i, j)]).abs());
                    scale = scale.max(fd[(i, j)].abs());
                }
            }
            out.push((fr, fc, diff, scale));
        }
    }
    out
}

#[test]
fn monolithic_tangent_matches_finite_differences_blockwise() {
    let p = rich_problem();
    let old = p.initial_state(0.0).unwrap();
    let t = 0.01 + 0.2e-3;
    let v = perturbed(&p, &old, 7);
    let errs = block_errors(&p, &old, &v, t);
    let largest = errs.iter().map(|e| e.3).fold(0.0, f64::max);
    let _ = largest;
    for (fr, fc, diff, scale) in errs {
        if scale == 0.0 {
            assert!(diff == 0.0, "block {fr}/{fc} should vanish, got {diff:e}");
            continue;
        }
        assert!(diff <= 1e-5 * scale, "block {fr}/{fc}: {diff:e} vs {scale:e}");
    }
}

#[test]
fn fd_element_tangent_agrees_with_analytic() {
    let p = rich_problem();
    let old = p.initial_state(0.0).unwrap();
    let v = perturbed(&p, &old, 3);
    let t = 0.01;
    let a = p.system_with(&old, &v, t, true, false).unwrap().1.unwrap();
    let f = p.system_with(&old, &v, t, true, true).unwrap().1.unwrap();
    let l = p.layout();
    for &fr in l.fields() {
        for &fc in l.fields() {
            let (rr, cr) = (l.field_range(fr).unwrap(), l.field_range(fc).unwrap());
            let mut diff: f64 = 0.0;
            let mut scale: f64 = 0.0;
            for i in rr.clone() {
                for j in cr.clone() {
                    diff = diff.max((a.get(i, j) - f.get(i, j)).abs());
                    scale = scale.max(a.get(i, j).abs());
                }
            }
            assert!(diff <= 1e-4 * scale + 1e-300, "block {fr}/{fc}: {diff:e} vs {scale:e}");
        }
    }
}

#[test]
fn residual_of_active_subset_is_a_restriction_of_the_full_residual() {
    let full = rich_problem();
    let old = full.initial_state(0.0).unwrap();
    let v = perturbed(&full, &old, 11);
    let t = 0.02;
    let r_full = full.residual_g(&old, &v, t).unwrap();
    let sub = CoupledProblem::new(
        full.mesh.clone(),
        Physics {
            mech: full.mech,
            thermal: full.thermal.clone(),
            em: full.em,
            coil: full.coil.clone(),
            source_mode: full.source_mode,
            body_force: full.body_force,
            grounding: Grounding::BoundaryMin,
        },
        &[Field::Theta, Field::U],
        full.bc.clone(),
        360.0,
    )
    .unwrap();
    let lf = full.layout();
    let ls = sub.layout();
    // the subset freezes Φ at zero
    let mut v0 = v.clone();
    for d in lf.field_range(Field::Phi).unwrap() {
        v0[d] = 0.0;
    }
    let r_full0 = full.residual_g(&old, &v0, t).unwrap();
    let mut vs = vec![0.0; ls.len()];
    let mut old_s = sub.initial_state(0.0).unwrap();
    for n in 0..full.mesh.node_count() {
        for (f, c) in [(Field::Theta, 0), (Field::U, 0), (Field::U, 1), (Field::U, 2)] {
            vs[ls.dof(n, f, c).unwrap()] = v[lf.dof(n, f, c).unwrap()];
            old_s.v[ls.dof(n, f, c).unwrap()] = old.v[lf.dof(n, f, c).unwrap()];
        }
    }
    let r_sub = sub.residual_g(&old_s, &vs, t).unwrap();
    for n in 0..full.mesh.node_count() {
        for (f, c) in [(Field::Theta, 0), (Field::U, 2)] {
            let a = r_sub[ls.dof(n, f, c).unwrap()];
            let b = r_full0[lf.dof(n, f, c).unwrap()];
            assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()), "{f}{c} at node {n}: {a} vs {b}");
        }
    }
    assert!(r_full.iter().all(|x| x.is_finite()));
}

fn cooling_cube(h: f64, kappa: f64) -> CoupledProblem {
    let mut ph = physics();
    ph.thermal.h_conv = h;
    ph.thermal.kappa = kappa;
    ph.thermal.convection_regions = vec![tags::XMIN, tags::XMAX, tags::YMIN, tags::YMAX, tags::ZMIN, tags::ZMAX];
    CoupledProblem::new(unit_cube(1e-3), ph, &[Field::Theta], BoundaryProgram::default(), 400.0).unwrap()
}

#[test]
fn linear_problem_converges_in_one_iteration() {
    let p = cooling_cube(500.0, 237.0);
    let cfg = SolverConfig {
        dt: 0.05,
        t_end: 0.2,
        ..Default::default()
    };
    let mut s = p.initial_state(0.0).unwrap();
    let reports = p.run(&mut s, &cfg, |_, _| Ok(())).unwrap();
    for r in &reports {
        assert_eq!(r.iterations, 1, "{r:?}");
        assert_eq!(r.residuals.len(), 2);
    }
}

#[test]
fn uniform_convective_cooling_matches_discrete_lumped_decay() {
    let h = 500.0;
    let p = cooling_cube(h, 237.0);
    let edge: f64 = 1e-3;
    let rate = h * 6.0 * edge * edge / (p.thermal.capacity() * edge.powi(3));
    let cfg = SolverConfig {
        dt: 0.01,
        t_end: 0.1,
        ..Default::default()
    };
    let mut s = p.initial_state(0.0).unwrap();
    let mut expected = 400.0;
    p.run(&mut s, &cfg, |st, _| {
        expected = (expected + cfg.dt * rate * 300.0) / (1.0 + cfg.dt * rate);
        for &th in &st.v {
            assert!((th - expected).abs() < 1e-9 * expected, "{th} vs {expected}");
        }
        Ok(())
    })
    .unwrap();
}

fn pulled_cube(release: bool) -> CoupledProblem {
    let edge = 1e-3;
    let pull = PiecewiseLinear::new(&[[0.0, 0.0], [1.0, 0.05 * edge]]).unwrap();
    let zero = PiecewiseLinear::constant(0.0);
    let bc = BoundaryProgram {
        mech: MechBc {
            dirichlet: vec![
                DisplacementBc {
                    region: tags::XMIN,
                    component: 0,
                    program: zero.clone(),
                },
                DisplacementBc {
                    region: tags::YMIN,
                    component: 1,
                    program: zero.clone(),
                },
                DisplacementBc {
                    region: tags::ZMIN,
                    component: 2,
                    program: zero,
                },
                DisplacementBc {
                    region: tags::YMAX,
                    component: 1,
                    program: pull,
                },
            ],
            traction: Vec::new(),
        },
        theta: Some(PiecewiseLinear::constant(600.0)),
        releases: if release {
            vec![Release {
                region: tags::YMAX,
                component: 1,
                at: 1.0,
                ramp_end: 2.0,
            }]
        } else {
            Vec::new()
        },
    };
    CoupledProblem::new(unit_cube(edge), physics(), &[Field::U], bc, 600.0).unwrap()
}

#[test]
fn release_hands_over_the_reaction_and_ramps_it_off() {
    let p = pulled_cube(true);
    let cfg = SolverConfig {
        dt: 0.25,
        t_end: 2.5,
        ..Default::default()
    };
    let mut s = p.initial_state(0.0).unwrap();
    let top: Vec<usize> = p.mesh.node_set(tags::YMAX).unwrap().to_vec();
    let mut history = Vec::new();
    p.run(&mut s, &cfg, |st, _| {
        let uy = top.iter().map(|&n| st.v[3 * n + 1]).sum::<f64>() / top.len() as f64;
        history.push((st.t, uy));
        Ok(())
    })
    .unwrap();
    let at = |t: f64| history.iter().find(|h| (h.0 - t).abs() < 1e-12).unwrap().1;
    // fully rubbery St. Venant–Kirchhoff bar in uniaxial stress:
    // P = (1 + ε) E (ε + ε²/2), so half the force at t = 1.5
    let force = |e: f64| (1.0 + e) * (e + 0.5 * e * e);
    let half = 0.5 * force(0.05);
    let (mut lo, mut hi) = (0.0, 0.05);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if force(mid) < half {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    assert!((at(1.0) - 5e-5).abs() < 1e-15);
    assert!((at(1.5) - lo * 1e-3).abs() < 1e-9 * 1e-3, "{} vs {}", at(1.5), lo * 1e-3);
    assert!(at(2.0).abs() < 1e-12 && at(2.5).abs() < 1e-12);
    let reactions = s.released[0].as_ref().unwrap();
    assert_eq!(reactions.len(), 4);
    let total: f64 = reactions.iter().map(|r| r.1).sum();
    let e_r = p.mech.e_r;
    assert!((total - e_r * force(0.05) * 1e-6).abs() < 1e-9 * total, "{total}");
}

#[test]
fn runs_are_bitwise_reproducible() {
    let p = rich_problem();
    let cfg = SolverConfig {
        dt: 2e-4,
        t_end: 1e-3,
        ..Default::default()
    };
    let go = || {
        let mut s = p.initial_state(0.0).unwrap();
        let r = p.run(&mut s, &cfg, |_, _| Ok(())).unwrap();
        (s, r)
    };
    let (a, ra) = go();
    let (b, rb) = go();
    assert_eq!(ra, rb);
    assert_eq!(a.v.iter().map(|x| x.to_bits()).collect::<Vec<_>>(), b.v.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
    assert_eq!(a.qp, b.qp);
}

#[test]
fn cut_steps_equal_a_replay_of_their_substeps() {
    // radiation makes the problem nonlinear; four iterations are not enough
    // for the large step but are for its halves
    let mut ph = physics();
    ph.thermal.convection_regions = Vec::new();
    ph.thermal.radiation_regions = vec![tags::XMIN, tags::XMAX, tags::YMIN, tags::YMAX, tags::ZMIN, tags::ZMAX];
    ph.thermal.emissivity = 1.0;
    let p = CoupledProblem::new(unit_cube(1e-3), ph, &[Field::Theta], BoundaryProgram::default(), 1500.0).unwrap();
    let coarse = SolverConfig {
        dt: 0.05,
        t_end: 0.05,
        newton_max: 4,
        ..Default::default()
    };
    let mut a = p.initial_state(0.0).unwrap();
    let rep = p.run(&mut a, &coarse, |_, _| Ok(())).unwrap();
    assert!(rep[0].cuts > 0, "{rep:?}");
    assert_eq!(rep[0].substeps, rep[0].substep_ends.len());
    let mut b = p.initial_state(0.0).unwrap();
    let mut solver = LinearSolver::new();
    for &t in &rep[0].substep_ends {
        let out = newton_step(&p, &b, t, &coarse, &mut solver).unwrap();
        p.commit(&mut b, out.v, t).unwrap();
    }
    assert_eq!((a.t, &a.v, &a.qp, &a.stress), (b.t, &b.v, &b.qp, &b.stress));
}

#[test]
fn a_failed_newton_step_leaves_the_state_untouched() {
    let p = pulled_cube(false);
    let s = p.initial_state(0.0).unwrap();
    let before = s.clone();
    let cfg = SolverConfig {
        newton_max: 1,
        ..Default::default()
    };
    let mut solver = LinearSolver::new();
    // a 5 % pull through the glassy plateau is not solved in one iteration
    let _ = newton_step(&p, &s, 1.0, &cfg, &mut solver);
    assert_eq!(s, before);
}

#[test]
fn grid_inserts_breaks_and_clips_the_last_step() {
    let cfg = SolverConfig {
        t_start: 0.0,
        t_end: 1.0,
        dt: 0.3,
        ..Default::default()
    };
    let g = cfg.grid(&[0.45, 0.6, 2.0]);
    let want = [0.3, 0.45, 0.6, 0.9, 1.0];
    assert_eq!(g.len(), want.len());
    for (a, b) in g.iter().zip(want) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn invalid_setups_are_rejected() {
    let mesh = unit_cube(1.0);
    assert!(CoupledProblem::new(mesh.clone(), physics(), &[Field::U, Field::Theta], BoundaryProgram::default(), 300.0).is_err());
    assert!(CoupledProblem::new(mesh.clone(), physics(), &[], BoundaryProgram::default(), 300.0).is_err());
    assert!(CoupledProblem::new(mesh, physics(), &[Field::U], BoundaryProgram::default(), -1.0).is_err());
    let bad = SolverConfig {
        dt: 0.0,
        ..Default::default()
    };
    assert!(bad.validate().is_err());
}

#[test]
fn nodal_fields_fill_inactive_fields() {
    let p = pulled_cube(false);
    let s = p.initial_state(0.0).unwrap();
    let nf = p.nodal(&s.v, 0.5);
    assert!(nf.theta.iter().all(|&t| t == 600.0));
    assert!(nf.phi.iter().all(|&x| x == 0.0));
    assert_eq!(nf.u.len(), 8);
    assert_eq!(nf.u[0], Vector3::zeros());
}

