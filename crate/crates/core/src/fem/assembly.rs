use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::dof::DofLayout;
use super::mesh::Mesh;
use super::sparse::CsrMatrix;
use crate::error::{Error, Result};

/// Element-local contribution. An empty matrix or vector means "no
/// contribution" of that kind.
#[derive(Clone, Debug, Default)]
pub struct LocalSystem {
    pub matrix: DMatrix<f64>,
    pub vector: DVector<f64>,
}

impl LocalSystem {
    pub fn zeros(n: usize) -> Self {
        LocalSystem {
            matrix: DMatrix::zeros(n, n),
            vector: DVector::zeros(n),
        }
    }

    pub fn vector_only(vector: DVector<f64>) -> Self {
        LocalSystem {
            matrix: DMatrix::zeros(0, 0),
            vector,
        }
    }

    pub fn matrix_only(matrix: DMatrix<f64>) -> Self {
        LocalSystem {
            matrix,
            vector: DVector::zeros(0),
        }
    }
}

/// Gather/scatter maps of a mesh under a dof layout, with the sparsity
/// pattern and the storage positions of every element block precomputed.
#[derive(Clone, Debug)]
pub struct Assembler {
    element_dofs: Vec<Vec<usize>>,
    pattern: CsrMatrix,
    positions: Vec<Vec<usize>>,
}

impl Assembler {
    pub fn new(mesh: &Mesh, layout: &DofLayout) -> Self {
        let element_dofs: Vec<Vec<usize>> = mesh.elements.iter().map(|e| layout.element_dofs(&e.nodes)).collect();
        let pattern = CsrMatrix::from_groups(layout.len(), &element_dofs);
        let positions = element_dofs
            .iter()
            .map(|d| {
                let mut p = Vec::with_capacity(d.len() * d.len());
                for &i in d {
                    for &j in d {
                        p.push(pattern.position(i, j).unwrap());
                    }
                }
                p
            })
            .collect();
        Assembler {
            element_dofs,
            pattern,
            positions,
        }
    }

    pub fn dofs(&self) -> usize {
        self.pattern.nrows()
    }

    pub fn element_dofs(&self, e: usize) -> &[usize] {
        &self.element_dofs[e]
    }

    /// A zero matrix with the full element-coupling pattern.
    pub fn pattern(&self) -> &CsrMatrix {
        &self.pattern
    }

    /// Assembles over all elements: `kernel(e)` returns the contribution of element `e`.
    pub fn assemble<K>(&self, kernel: K) -> Result<(CsrMatrix, Vec<f64>)>
    where
        K: Fn(usize) -> Result<LocalSystem> + Sync,
    {
        let owners: Vec<usize> = (0..self.element_dofs.len()).collect();
        self.assemble_owned(&owners, kernel)
    }

    /// Assembles items whose contributions live on the dofs of a parent
    /// element (elements themselves, or boundary facets): item `i` scatters
    /// into element `owners[i]`.
    ///
    /// Kernels run in parallel; the scatter runs in item order so the result
    /// does not depend on thread scheduling.
    pub fn assemble_owned<K>(&self, owners: &[usize], kernel: K) -> Result<(CsrMatrix, Vec<f64>)>
    where
        K: Fn(usize) -> Result<LocalSystem> + Sync,
    {
        let locals: Vec<Result<LocalSystem>> = (0..owners.len()).into_par_iter().map(&kernel).collect();
        let mut matrix = self.pattern.clone();
        let mut vector = vec![0.0; self.dofs()];
        for (i, local) in locals.into_iter().enumerate() {
            self.scatter(owners[i], &local?, &mut matrix, &mut vector)?;
        }
        Ok((matrix, vector))
    }

    pub fn scatter(&self, e: usize, local: &LocalSystem, matrix: &mut CsrMatrix, vector: &mut [f64]) -> Result<()> {
        let dofs = &self.element_dofs[e];
        let n = dofs.len();
        if local.matrix.len() != 0 {
            if local.matrix.nrows() != n || local.matrix.ncols() != n {
                return Err(Error::DimensionMismatch(format!(
                    "element {e}: local matrix {}x{} for {n} dofs",
                    local.matrix.nrows(),
                    local.matrix.ncols()
                )));
            }
            let pos = &self.positions[e];
            let vals = matrix.values_mut();
            for a in 0..n {
                for b in 0..n {
                    vals[pos[a * n + b]] += local.matrix[(a, b)];
                }
            }
        }
        if !local.vector.is_empty() {
            if local.vector.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "element {e}: local vector of length {} for {n} dofs",
                    local.vector.len()
                )));
            }
            for (a, &d) in dofs.iter().enumerate() {
                vector[d] += local.vector[a];
            }
        }
        Ok(())
    }
}

/// One-shot assembly over all elements of `mesh`.
pub fn assemble<K>(mesh: &Mesh, layout: &DofLayout, kernel: K) -> Result<(CsrMatrix, Vec<f64>)>
where
    K: Fn(usize) -> Result<LocalSystem> + Sync,
{
    Assembler::new(mesh, layout).assemble(kernel)
}

/// Linear system restricted to the free dofs, with the constrained values
/// moved to the right-hand side.
#[derive(Clone, Debug)]
pub struct ReducedSystem {
    pub free: Vec<usize>,
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    /// Full-length vector holding the prescribed values (zero at free dofs).
    pub lifted: Vec<f64>,
}

impl ReducedSystem {
    /// Full solution from the free-dof solution.
    pub fn expand(&self, x_free: &[f64]) -> Vec<f64> {
        let mut x = self.lifted.clone();
        for (k, &d) in self.free.iter().enumerate() {
            x[d] = x_free[k];
        }
        x
    }
}

/// Reduces `K x = f` given the full vector `values` of which only the
/// entries at constrained dofs (those not in `free`) are used.
pub fn reduce(k: &CsrMatrix, f: &[f64], free: &[usize], values: &[f64]) -> Result<ReducedSystem> {
    let n = k.nrows();
    if k.ncols() != n || f.len() != n || values.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "system {}x{}, rhs {}, values {}",
            k.nrows(),
            k.ncols(),
            f.len(),
            values.len()
        )));
    }
    let mut lifted = values.to_vec();
    for &d in free {
        lifted[d] = 0.0;
    }
    let kx = k.mul_vec(&lifted);
    let rhs = free.iter().map(|&d| f[d] - kx[d]).collect();
    Ok(ReducedSystem {
        free: free.to_vec(),
        matrix: k.submatrix(free, free),
        rhs,
        lifted,
    })
}

/// Eliminates the layout's Dirichlet dofs with values evaluated at `t`.
pub fn apply_dirichlet(k: &CsrMatrix, f: &[f64], layout: &DofLayout, t: f64) -> Result<ReducedSystem> {
    if k.nrows() != layout.len() {
        return Err(Error::DimensionMismatch(format!(
            "matrix has {} rows, layout {} dofs",
            k.nrows(),
            layout.len()
        )));
    }
    let mut values = vec![0.0; layout.len()];
    for (d, v) in layout.prescribed(t) {
        values[d] = v;
    }
    reduce(k, f, &layout.free_dofs(), &values)
}

/// Values of `v` at the given indices.
pub fn gather<T: Copy>(indices: &[usize], v: &[T]) -> Vec<T> {
    indices.iter().map(|&i| v[i]).collect()
}
