use super::{CoupledProblem, CoupledState, SolverConfig};
use crate::error::{Error, Result};
use crate::fem::{CsrMatrix, Field, LinearSolver};

/// Converged unknowns of one step.
#[derive(Clone, Debug, PartialEq)]
pub struct NewtonOutcome {
    pub v: Vec<f64>,
    /// Linear solves performed.
    pub iterations: usize,
    /// Scaled residual norm before each update and at convergence.
    pub residuals: Vec<f64>,
}

fn solve_block(
    solver: &mut LinearSolver,
    k: &CsrMatrix,
    r: &[f64],
    dofs: &[usize],
) -> Result<Vec<f64>> {
    let sub = k.submatrix(dofs, dofs);
    let rhs: Vec<f64> = dofs.iter().map(|&d| -r[d]).collect();
    solver.solve(&sub, &rhs)
}

/// Newton–Raphson from the converged `old` to time `t`. The material
/// states of `old` are not touched.
pub fn newton_step(
    p: &CoupledProblem,
    old: &CoupledState,
    t: f64,
    cfg: &SolverConfig,
    solver: &mut LinearSolver,
) -> Result<NewtonOutcome> {
    let layout = p.constrained_layout(&old.released)?;
    let free = layout.free_dofs();
    let mut v = old.v.clone();
    for (d, x) in layout.prescribed(t) {
        v[d] = x;
    }
    let norm = |r: &[f64]| p.scaled_norm(r, &free, &cfg.block_scaling);
    let eval = |v: &[f64], tangent: bool| p.system_with(old, v, t, tangent, cfg.fd_tangent);
    let staggered = cfg.staggered && p.has(Field::Phi) && p.layout().fields().len() > 1;
    let (phi_free, rest_free): (Vec<usize>, Vec<usize>) = if staggered {
        let range = p.layout().field_range(Field::Phi).unwrap();
        free.iter().partition(|d| range.contains(d))
    } else {
        (Vec::new(), free.clone())
    };

    let mut residuals = Vec::new();
    let mut r0 = 0.0;
    let mut last_increment = f64::INFINITY;
    for it in 0..=cfg.newton_max {
        let (r, k) = eval(&v, true)?;
        let nr = norm(&r);
        if !nr.is_finite() {
            return Err(Error::NewtonDiverged {
                iterations: it,
                residual: nr,
            });
        }
        residuals.push(nr);
        if it == 0 {
            r0 = nr;
        }
        let stalled = last_increment <= cfg.increment_tol;
        if nr <= cfg.abs_tol || (it > 0 && (nr <= cfg.newton_tol * r0 || stalled)) {
            return Ok(NewtonOutcome {
                v,
                iterations: it,
                residuals,
            });
        }
        if it == cfg.newton_max {
            return Err(Error::NewtonDiverged {
                iterations: it,
                residual: nr,
            });
        }
        let mut k = k.unwrap();
        let mut r = r;
        if staggered {
            let dx = solve_block(solver, &k, &r, &phi_free)?;
            for (&d, x) in phi_free.iter().zip(&dx) {
                v[d] += x;
            }
            let (r1, k1) = eval(&v, true)?;
            r = r1;
            k = k1.unwrap();
        }
        let dx = solve_block(solver, &k, &r, &rest_free)?;
        let mut alpha = 1.0;
        if let Some(beta) = cfg.ls_backtrack {
            let base = norm(&r);
            for _ in 0..5 {
                let mut trial = v.clone();
                for (&d, x) in rest_free.iter().zip(&dx) {
                    trial[d] += alpha * x;
                }
                match eval(&trial, false) {
                    Ok((rt, _)) if norm(&rt) <= (1.0 - 1e-4 * alpha) * base => break,
                    Ok(_) => alpha *= beta,
                    Err(e) if e.is_recoverable() => alpha *= beta,
                    Err(e) => return Err(e),
                }
            }
        }
        let scaled: Vec<f64> = dx.iter().map(|x| alpha * x).collect();
        last_increment = p.relative_increment(&v, &rest_free, &scaled);
        for (&d, x) in rest_free.iter().zip(&scaled) {
            v[d] += x;
        }
    }
    unreachable!("loop returns on its last iteration")
}
