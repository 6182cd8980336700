use nalgebra::{Matrix3, Vector3};

use super::element::physical_gradients;
use super::mesh::Mesh;
use crate::error::Result;

/// Shape data at one volume quadrature point.
#[derive(Clone, Debug)]
pub struct QpGeom {
    pub n: Vec<f64>,
    /// Gradients with respect to the reference coordinates X.
    pub grad: Vec<Vector3<f64>>,
    /// Quadrature weight times reference Jacobian determinant.
    pub dv: f64,
    /// Reference position.
    pub x: Vector3<f64>,
}

/// Shape data of the parent element at one facet quadrature point.
#[derive(Clone, Debug)]
pub struct FaceQp {
    pub n: Vec<f64>,
    pub grad: Vec<Vector3<f64>>,
    /// Reference area element times weight.
    pub da: f64,
    /// Unit outward normal in the reference configuration.
    pub normal: Vector3<f64>,
    pub x: Vector3<f64>,
}

#[derive(Clone, Debug)]
pub struct FacetGeom {
    pub element: usize,
    pub region: i64,
    pub qps: Vec<FaceQp>,
}

/// Interpolation of nodal values at a quadrature point.
pub trait ShapeData {
    fn values(&self) -> &[f64];
    fn gradients(&self) -> &[Vector3<f64>];

    fn interpolate(&self, nodal: &[f64]) -> f64 {
        self.values().iter().zip(nodal).map(|(n, v)| n * v).sum()
    }

    fn interpolate_vector(&self, nodal: &[Vector3<f64>]) -> Vector3<f64> {
        self.values().iter().zip(nodal).map(|(n, v)| v * *n).sum()
    }

    fn gradient(&self, nodal: &[f64]) -> Vector3<f64> {
        self.gradients().iter().zip(nodal).map(|(g, v)| g * *v).sum()
    }

    /// ∂u_i/∂X_J of a nodal vector field.
    fn vector_gradient(&self, nodal: &[Vector3<f64>]) -> Matrix3<f64> {
        self.gradients().iter().zip(nodal).map(|(g, v)| v * g.transpose()).sum()
    }
}

impl ShapeData for QpGeom {
    fn values(&self) -> &[f64] {
        &self.n
    }
    fn gradients(&self) -> &[Vector3<f64>] {
        &self.grad
    }
}

impl ShapeData for FaceQp {
    fn values(&self) -> &[f64] {
        &self.n
    }
    fn gradients(&self) -> &[Vector3<f64>] {
        &self.grad
    }
}

/// Quadrature data of the undeformed mesh, computed once.
#[derive(Clone, Debug)]
pub struct Geometry {
    pub elements: Vec<Vec<QpGeom>>,
    pub facets: Vec<FacetGeom>,
}

impl Geometry {
    pub fn new(mesh: &Mesh) -> Result<Self> {
        let mut elements = Vec::with_capacity(mesh.elements.len());
        for (e, el) in mesh.elements.iter().enumerate() {
            let coords = mesh.element_coords(e);
            let q = el.kind.quadrature();
            let mut qps = Vec::with_capacity(q.len());
            for (xi, w) in q.points.iter().zip(&q.weights) {
                let (shape, grad, det) = physical_gradients(el.kind, *xi, &coords, e)?;
                let x = coords.iter().zip(&shape.values).map(|(c, n)| c * *n).sum();
                qps.push(QpGeom {
                    n: shape.values,
                    grad,
                    dv: w * det,
                    x,
                });
            }
            elements.push(qps);
        }
        let mut facets = Vec::with_capacity(mesh.facets.len());
        for f in &mesh.facets {
            let el = &mesh.elements[f.element];
            let coords = mesh.element_coords(f.element);
            let mut qps = Vec::new();
            for (st, w) in el.kind.face_quadrature() {
                let (xi, ts, tt) = el.kind.face_point(f.face, st);
                let (shape, grad, _) = physical_gradients(el.kind, [xi[0], xi[1], xi[2]], &coords, f.element)?;
                let jac = super::element::reference_jacobian(&shape, &coords);
                let area = (jac * ts).cross(&(jac * tt));
                let norm = area.norm();
                let x = coords.iter().zip(&shape.values).map(|(c, n)| c * *n).sum();
                qps.push(FaceQp {
                    n: shape.values,
                    grad,
                    da: w * norm,
                    normal: area / norm,
                    x,
                });
            }
            facets.push(FacetGeom {
                element: f.element,
                region: f.region,
                qps,
            });
        }
        Ok(Geometry { elements, facets })
    }

    pub fn element_volume(&self, e: usize) -> f64 {
        self.elements[e].iter().map(|q| q.dv).sum()
    }

    pub fn facet_area(&self, f: usize) -> f64 {
        self.facets[f].qps.iter().map(|q| q.da).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::mesh::{box_hex, tags, tube};

    #[test]
    fn box_faces_have_exact_areas_and_normals() {
        let mesh = box_hex([1.0, 2.0, 3.0], [1, 2, 1]);
        let g = Geometry::new(&mesh).unwrap();
        let area = |tag: i64| -> f64 {
            (0..mesh.facets.len()).filter(|&i| mesh.facets[i].region == tag).map(|i| g.facet_area(i)).sum()
        };
        assert!((area(tags::XMAX) - 6.0).abs() < 1e-12);
        assert!((area(tags::YMIN) - 3.0).abs() < 1e-12);
        assert!((area(tags::ZMAX) - 2.0).abs() < 1e-12);
        for (i, f) in g.facets.iter().enumerate() {
            if mesh.facets[i].region == tags::XMIN {
                for q in &f.qps {
                    assert!((q.normal - Vector3::new(-1.0, 0.0, 0.0)).norm() < 1e-12);
                }
            }
        }
        let vol: f64 = (0..mesh.elements.len()).map(|e| g.element_volume(e)).sum();
        assert!((vol - 6.0).abs() < 1e-12);
    }

    #[test]
    fn tube_normals_point_outward() {
        let mesh = tube(1.0, 1.5, 2.0, 16, 2, 1).unwrap();
        let g = Geometry::new(&mesh).unwrap();
        for f in &g.facets {
            for q in &f.qps {
                let radial = Vector3::new(q.x[0], q.x[1], 0.0).normalize();
                match f.region {
                    tags::INNER => assert!(q.normal.dot(&radial) < -0.9),
                    tags::OUTER => assert!(q.normal.dot(&radial) > 0.9),
                    tags::TOP_END => assert!(q.normal[2] > 0.99),
                    _ => {}
                }
            }
        }
    }
}
