use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

/// Lowest-order conforming solid elements.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ElementKind {
    /// 8-node trilinear hexahedron on [-1,1]^3.
    Hex8,
    /// 4-node linear tetrahedron on the unit simplex.
    Tet4,
}

impl ElementKind {
    pub fn node_count(self) -> usize {
        match self {
            ElementKind::Hex8 => 8,
            ElementKind::Tet4 => 4,
        }
    }

    pub fn reference_volume(self) -> f64 {
        match self {
            ElementKind::Hex8 => 8.0,
            ElementKind::Tet4 => 1.0 / 6.0,
        }
    }

    pub fn gmsh_type(self) -> u32 {
        match self {
            ElementKind::Tet4 => 4,
            ElementKind::Hex8 => 5,
        }
    }

    pub fn from_gmsh_type(ty: u32) -> Result<Self> {
        match ty {
            4 => Ok(ElementKind::Tet4),
            5 => Ok(ElementKind::Hex8),
            other => Err(Error::UnknownElementKind(format!("gmsh type {other}"))),
        }
    }

    pub fn vtk_cell_type(self) -> u8 {
        match self {
            ElementKind::Tet4 => 10,
            ElementKind::Hex8 => 12,
        }
    }

    /// Reference coordinates of the element nodes.
    pub fn reference_nodes(self) -> &'static [[f64; 3]] {
        match self {
            ElementKind::Hex8 => &HEX8_NODES,
            ElementKind::Tet4 => &TET4_NODES,
        }
    }

    /// Local node lists of the faces, ordered so that the right-hand rule
    /// gives the outward normal.
    pub fn faces(self) -> &'static [&'static [usize]] {
        match self {
            ElementKind::Hex8 => &HEX8_FACES,
            ElementKind::Tet4 => &TET4_FACES,
        }
    }

    pub fn quadrature(self) -> QuadratureRule {
        match self {
            ElementKind::Hex8 => {
                let g = 1.0 / 3f64.sqrt();
                let mut points = Vec::with_capacity(8);
                // same ordering as the nodes so that qp i sits next to node i
                for p in HEX8_NODES.iter() {
                    points.push([p[0] * g, p[1] * g, p[2] * g]);
                }
                QuadratureRule {
                    points,
                    weights: vec![1.0; 8],
                }
            }
            ElementKind::Tet4 => {
                let a = 0.585_410_196_624_968_5;
                let b = 0.138_196_601_125_010_5;
                QuadratureRule {
                    points: vec![[b, b, b], [a, b, b], [b, a, b], [b, b, a]],
                    weights: vec![1.0 / 24.0; 4],
                }
            }
        }
    }

    /// Quadrature rule on a face, expressed in the face parameters (s, t).
    pub fn face_quadrature(self) -> Vec<([f64; 2], f64)> {
        match self {
            ElementKind::Hex8 => {
                let g = 1.0 / 3f64.sqrt();
                vec![([-g, -g], 1.0), ([g, -g], 1.0), ([g, g], 1.0), ([-g, g], 1.0)]
            }
            ElementKind::Tet4 => vec![
                ([1.0 / 6.0, 1.0 / 6.0], 1.0 / 6.0),
                ([2.0 / 3.0, 1.0 / 6.0], 1.0 / 6.0),
                ([1.0 / 6.0, 2.0 / 3.0], 1.0 / 6.0),
            ],
        }
    }

    /// Maps face parameters to a reference point and returns the two
    /// reference tangents d(xi)/ds, d(xi)/dt.
    pub fn face_point(self, face: usize, st: [f64; 2]) -> (Vector3<f64>, Vector3<f64>, Vector3<f64>) {
        let nodes = self.reference_nodes();
        let f = self.faces()[face];
        let c = |i: usize| Vector3::from(nodes[f[i]]);
        let [s, t] = st;
        match self {
            ElementKind::Hex8 => {
                let w = [
                    0.25 * (1.0 - s) * (1.0 - t),
                    0.25 * (1.0 + s) * (1.0 - t),
                    0.25 * (1.0 + s) * (1.0 + t),
                    0.25 * (1.0 - s) * (1.0 + t),
                ];
                let ds = [-0.25 * (1.0 - t), 0.25 * (1.0 - t), 0.25 * (1.0 + t), -0.25 * (1.0 + t)];
                let dt = [-0.25 * (1.0 - s), -0.25 * (1.0 + s), 0.25 * (1.0 + s), 0.25 * (1.0 - s)];
                let mut p = Vector3::zeros();
                let mut ts = Vector3::zeros();
                let mut tt = Vector3::zeros();
                for i in 0..4 {
                    p += c(i) * w[i];
                    ts += c(i) * ds[i];
                    tt += c(i) * dt[i];
                }
                (p, ts, tt)
            }
            ElementKind::Tet4 => {
                let p = c(0) + (c(1) - c(0)) * s + (c(2) - c(0)) * t;
                (p, c(1) - c(0), c(2) - c(0))
            }
        }
    }
}

impl fmt::Display for ElementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ElementKind::Hex8 => write!(f, "hex8"),
            ElementKind::Tet4 => write!(f, "tet4"),
        }
    }
}

impl FromStr for ElementKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hex8" | "hex" | "hexahedron" => Ok(ElementKind::Hex8),
            "tet4" | "tet" | "tetrahedron" => Ok(ElementKind::Tet4),
            other => Err(Error::UnknownElementKind(other.to_string())),
        }
    }
}

const HEX8_NODES: [[f64; 3]; 8] = [
    [-1.0, -1.0, -1.0],
    [1.0, -1.0, -1.0],
    [1.0, 1.0, -1.0],
    [-1.0, 1.0, -1.0],
    [-1.0, -1.0, 1.0],
    [1.0, -1.0, 1.0],
    [1.0, 1.0, 1.0],
    [-1.0, 1.0, 1.0],
];

const TET4_NODES: [[f64; 3]; 4] = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

const HEX8_FACES: [&[usize]; 6] = [
    &[0, 3, 2, 1],
    &[4, 5, 6, 7],
    &[0, 1, 5, 4],
    &[2, 3, 7, 6],
    &[0, 4, 7, 3],
    &[1, 2, 6, 5],
];

const TET4_FACES: [&[usize]; 4] = [&[1, 2, 3], &[0, 3, 2], &[0, 1, 3], &[0, 2, 1]];

#[derive(Clone, Debug)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Shape function values and reference gradients at one point.
#[derive(Clone, Debug)]
pub struct ShapeValues {
    pub values: Vec<f64>,
    pub ref_gradients: Vec<Vector3<f64>>,
}

pub fn shape_eval(kind: ElementKind, xi: [f64; 3]) -> ShapeValues {
    match kind {
        ElementKind::Hex8 => {
            let mut values = Vec::with_capacity(8);
            let mut ref_gradients = Vec::with_capacity(8);
            for n in HEX8_NODES.iter() {
                let a = 1.0 + n[0] * xi[0];
                let b = 1.0 + n[1] * xi[1];
                let c = 1.0 + n[2] * xi[2];
                values.push(0.125 * a * b * c);
                ref_gradients.push(Vector3::new(
                    0.125 * n[0] * b * c,
                    0.125 * a * n[1] * c,
                    0.125 * a * b * n[2],
                ));
            }
            ShapeValues {
                values,
                ref_gradients,
            }
        }
        ElementKind::Tet4 => ShapeValues {
            values: vec![1.0 - xi[0] - xi[1] - xi[2], xi[0], xi[1], xi[2]],
            ref_gradients: vec![
                Vector3::new(-1.0, -1.0, -1.0),
                Vector3::new(1.0, 0.0, 0.0),
                Vector3::new(0.0, 1.0, 0.0),
                Vector3::new(0.0, 0.0, 1.0),
            ],
        },
    }
}

/// Jacobian dX/dxi of the reference map.
pub fn reference_jacobian(shape: &ShapeValues, coords: &[Vector3<f64>]) -> Matrix3<f64> {
    let mut jac = Matrix3::zeros();
    for (x, g) in coords.iter().zip(&shape.ref_gradients) {
        jac += x * g.transpose();
    }
    jac
}

/// Gradients of the shape functions with respect to the reference-configuration
/// coordinates X, and the determinant of dX/dxi.
pub fn physical_gradients(
    kind: ElementKind,
    xi: [f64; 3],
    coords: &[Vector3<f64>],
    element: usize,
) -> Result<(ShapeValues, Vec<Vector3<f64>>, f64)> {
    if coords.len() != kind.node_count() {
        return Err(Error::DimensionMismatch(format!(
            "{kind} needs {} nodes, got {}",
            kind.node_count(),
            coords.len()
        )));
    }
    let shape = shape_eval(kind, xi);
    let jac = reference_jacobian(&shape, coords);
    let det = jac.determinant();
    if det <= 0.0 {
        return Err(Error::InvertedElement { element, det });
    }
    let inv_t = jac
        .try_inverse()
        .ok_or(Error::InvertedElement { element, det })?
        .transpose();
    let grads = shape.ref_gradients.iter().map(|g| inv_t * g).collect();
    Ok((shape, grads, det))
}
