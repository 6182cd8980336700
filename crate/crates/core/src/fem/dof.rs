use std::collections::BTreeMap;
use std::fmt;
use std::ops::Range;

use super::program::PiecewiseLinear;
use crate::error::{Error, Result};

/// Nodal unknown fields.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Field {
    /// Electric scalar potential (V).
    Phi,
    /// Temperature (K).
    Theta,
    /// Displacement (m), three components.
    U,
}

impl Field {
    pub fn components(self) -> usize {
        match self {
            Field::Phi | Field::Theta => 1,
            Field::U => 3,
        }
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Field::Phi => "phi",
            Field::Theta => "theta",
            Field::U => "u",
        })
    }
}

/// Global numbering of nodal unknowns, blocked by field:
/// field `k` occupies `[offset_k, offset_k + components_k * node_count)`
/// with component `c` of node `n` at `offset_k + components_k * n + c`.
///
/// The layout also owns the Dirichlet programs; constrained dofs stay in the
/// numbering and are eliminated when a system is reduced.
#[derive(Clone, Debug, PartialEq)]
pub struct DofLayout {
    fields: Vec<Field>,
    offsets: Vec<usize>,
    node_count: usize,
    constraints: BTreeMap<usize, PiecewiseLinear>,
}

impl DofLayout {
    pub fn new(node_count: usize, fields: &[Field]) -> Result<Self> {
        let mut offsets = Vec::with_capacity(fields.len());
        let mut off = 0;
        for (i, f) in fields.iter().enumerate() {
            if fields[..i].contains(f) {
                return Err(Error::InvalidParameter(format!("field {f} listed twice")));
            }
            offsets.push(off);
            off += f.components() * node_count;
        }
        Ok(DofLayout {
            fields: fields.to_vec(),
            offsets,
            node_count,
            constraints: BTreeMap::new(),
        })
    }

    /// Layout of the coupled problem: (Φ, θ, u).
    pub fn coupled(node_count: usize) -> Self {
        Self::new(node_count, &[Field::Phi, Field::Theta, Field::U]).unwrap()
    }

    pub fn fields(&self) -> &[Field] {
        &self.fields
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn len(&self) -> usize {
        self.fields.iter().map(|f| f.components()).sum::<usize>() * self.node_count
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Unknowns per node.
    pub fn per_node(&self) -> usize {
        self.fields.iter().map(|f| f.components()).sum()
    }

    pub fn has_field(&self, field: Field) -> bool {
        self.fields.contains(&field)
    }

    pub fn field_range(&self, field: Field) -> Option<Range<usize>> {
        let k = self.fields.iter().position(|&f| f == field)?;
        let start = self.offsets[k];
        Some(start..start + field.components() * self.node_count)
    }

    pub fn dof(&self, node: usize, field: Field, component: usize) -> Option<usize> {
        let k = self.fields.iter().position(|&f| f == field)?;
        if node >= self.node_count || component >= field.components() {
            return None;
        }
        Some(self.offsets[k] + field.components() * node + component)
    }

    /// Inverse of [`dof`](Self::dof).
    pub fn describe(&self, dof: usize) -> Option<(usize, Field, usize)> {
        for (k, &f) in self.fields.iter().enumerate() {
            let r = self.offsets[k]..self.offsets[k] + f.components() * self.node_count;
            if r.contains(&dof) {
                let local = dof - self.offsets[k];
                return Some((local / f.components(), f, local % f.components()));
            }
        }
        None
    }

    /// Element dofs ordered node by node, and within a node field by field.
    pub fn element_dofs(&self, nodes: &[usize]) -> Vec<usize> {
        let mut out = Vec::with_capacity(nodes.len() * self.per_node());
        for &n in nodes {
            for (k, &f) in self.fields.iter().enumerate() {
                for c in 0..f.components() {
                    out.push(self.offsets[k] + f.components() * n + c);
                }
            }
        }
        out
    }

    pub fn constrain(&mut self, dof: usize, program: PiecewiseLinear) -> Result<()> {
        if dof >= self.len() {
            return Err(Error::NoSuchDof { dof, len: self.len() });
        }
        if self.constraints.contains_key(&dof) {
            return Err(Error::DuplicateConstraint(dof));
        }
        self.constraints.insert(dof, program);
        Ok(())
    }

    pub fn constrain_node(&mut self, node: usize, field: Field, component: usize, program: PiecewiseLinear) -> Result<()> {
        let dof = self.dof(node, field, component).ok_or(Error::NoSuchDof {
            dof: usize::MAX,
            len: self.len(),
        })?;
        self.constrain(dof, program)
    }

    pub fn release(&mut self, dof: usize) -> Option<PiecewiseLinear> {
        self.constraints.remove(&dof)
    }

    pub fn clear_constraints(&mut self) {
        self.constraints.clear();
    }

    pub fn constraints(&self) -> &BTreeMap<usize, PiecewiseLinear> {
        &self.constraints
    }

    pub fn is_constrained(&self, dof: usize) -> bool {
        self.constraints.contains_key(&dof)
    }

    pub fn free_dofs(&self) -> Vec<usize> {
        (0..self.len()).filter(|d| !self.constraints.contains_key(d)).collect()
    }

    /// Prescribed values at time `t`.
    pub fn prescribed(&self, t: f64) -> Vec<(usize, f64)> {
        self.constraints.iter().map(|(&d, p)| (d, p.eval(t))).collect()
    }
}
