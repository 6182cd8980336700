use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;

use nalgebra::Vector3;

use super::element::{physical_gradients, reference_jacobian, shape_eval, ElementKind};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Element {
    pub kind: ElementKind,
    pub nodes: Vec<usize>,
    pub region: i64,
}

/// A boundary face, identified by its parent element and local face index.
#[derive(Clone, Debug, PartialEq)]
pub struct Facet {
    pub element: usize,
    pub face: usize,
    pub region: i64,
}

/// Reference configuration of the body.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Mesh {
    pub nodes: Vec<Vector3<f64>>,
    pub elements: Vec<Element>,
    pub facets: Vec<Facet>,
    /// Node groups by physical tag (faces, lines or points of the boundary).
    pub node_sets: BTreeMap<i64, Vec<usize>>,
    pub region_names: BTreeMap<i64, String>,
}

/// Tags used by the built-in generators.
pub mod tags {
    pub const XMIN: i64 = 1;
    pub const XMAX: i64 = 2;
    pub const YMIN: i64 = 3;
    pub const YMAX: i64 = 4;
    pub const ZMIN: i64 = 5;
    pub const ZMAX: i64 = 6;

    pub const INNER: i64 = 11;
    pub const OUTER: i64 = 12;
    pub const BOTTOM_END: i64 = 13;
    pub const TOP_END: i64 = 14;
    /// Outer-surface generator line at the lowest y.
    pub const BOTTOM_LINE: i64 = 15;
    /// Outer-surface generator line at the highest y.
    pub const TOP_LINE: i64 = 16;

    pub const BODY: i64 = 100;
}

impl Mesh {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn element_coords(&self, e: usize) -> Vec<Vector3<f64>> {
        self.elements[e].nodes.iter().map(|&n| self.nodes[n]).collect()
    }

    pub fn facet_nodes(&self, f: &Facet) -> Vec<usize> {
        let el = &self.elements[f.element];
        el.kind.faces()[f.face].iter().map(|&l| el.nodes[l]).collect()
    }

    pub fn node_set(&self, tag: i64) -> Result<&[usize]> {
        self.node_sets.get(&tag).map(|v| v.as_slice()).ok_or(Error::UnknownRegion(tag))
    }

    pub fn has_region(&self, tag: i64) -> bool {
        self.node_sets.contains_key(&tag)
            || self.facets.iter().any(|f| f.region == tag)
            || self.elements.iter().any(|e| e.region == tag)
    }

    pub fn facets_in(&self, tag: i64) -> Result<Vec<usize>> {
        let v: Vec<usize> = (0..self.facets.len()).filter(|&i| self.facets[i].region == tag).collect();
        if v.is_empty() {
            return Err(Error::UnknownRegion(tag));
        }
        Ok(v)
    }

    /// Faces that belong to exactly one element.
    pub fn boundary_faces(&self) -> Vec<(usize, usize)> {
        let mut count: BTreeMap<Vec<usize>, Vec<(usize, usize)>> = BTreeMap::new();
        for (e, el) in self.elements.iter().enumerate() {
            for (f, local) in el.kind.faces().iter().enumerate() {
                let mut key: Vec<usize> = local.iter().map(|&l| el.nodes[l]).collect();
                key.sort_unstable();
                count.entry(key).or_default().push((e, f));
            }
        }
        let mut out: Vec<(usize, usize)> =
            count.into_values().filter(|v| v.len() == 1).map(|v| v[0]).collect();
        out.sort_unstable();
        out
    }

    /// Tags boundary faces with `classify(centroid, outward normal)`.
    pub fn classify_boundary<F>(&mut self, mut classify: F)
    where
        F: FnMut(&Vector3<f64>, &Vector3<f64>) -> Option<i64>,
    {
        for (e, f) in self.boundary_faces() {
            let el = &self.elements[e];
            let coords = self.element_coords(e);
            let (xi, ts, tt) = el.kind.face_point(f, if el.kind == ElementKind::Hex8 { [0.0, 0.0] } else { [1.0 / 3.0, 1.0 / 3.0] });
            let shape = shape_eval(el.kind, [xi[0], xi[1], xi[2]]);
            let jac = reference_jacobian(&shape, &coords);
            let normal = (jac * ts).cross(&(jac * tt)).normalize();
            let centroid: Vector3<f64> = coords.iter().zip(&shape.values).map(|(x, n)| x * *n).sum();
            if let Some(tag) = classify(&centroid, &normal) {
                self.facets.push(Facet {
                    element: e,
                    face: f,
                    region: tag,
                });
            }
        }
    }

    /// Adds the nodes of all facets with `tag` as a node set of the same tag.
    pub fn node_set_from_facets(&mut self, tag: i64) {
        let mut set = BTreeSet::new();
        for f in self.facets.iter().filter(|f| f.region == tag) {
            set.extend(self.facet_nodes(f));
        }
        self.node_sets.insert(tag, set.into_iter().collect());
    }

    pub fn node_set_from_predicate<F: Fn(&Vector3<f64>) -> bool>(&mut self, tag: i64, pred: F) {
        let set: Vec<usize> = (0..self.nodes.len()).filter(|&i| pred(&self.nodes[i])).collect();
        self.node_sets.insert(tag, set);
    }

    /// Checks index bounds, element orientation at every quadrature point, and
    /// that every facet is a face of exactly one element.
    pub fn validate(&self) -> Result<()> {
        let n = self.nodes.len();
        for (e, el) in self.elements.iter().enumerate() {
            if el.nodes.len() != el.kind.node_count() {
                return Err(Error::InvalidMesh(format!("element {e} has {} nodes", el.nodes.len())));
            }
            if let Some(&bad) = el.nodes.iter().find(|&&i| i >= n) {
                return Err(Error::InvalidMesh(format!("element {e} references node {bad} of {n}")));
            }
            let coords = self.element_coords(e);
            for xi in el.kind.quadrature().points {
                physical_gradients(el.kind, xi, &coords, e)?;
            }
        }
        let boundary: BTreeSet<(usize, usize)> = self.boundary_faces().into_iter().collect();
        let mut seen = BTreeSet::new();
        for (i, f) in self.facets.iter().enumerate() {
            if f.element >= self.elements.len() || f.face >= self.elements[f.element].kind.faces().len() {
                return Err(Error::InvalidMesh(format!("facet {i} does not name an element face")));
            }
            if !boundary.contains(&(f.element, f.face)) {
                return Err(Error::InvalidMesh(format!("facet {i} is not on the boundary")));
            }
            if !seen.insert((f.element, f.face, f.region)) {
                return Err(Error::InvalidMesh(format!("facet {i} listed twice")));
            }
        }
        for (tag, set) in &self.node_sets {
            if let Some(&bad) = set.iter().find(|&&i| i >= n) {
                return Err(Error::InvalidMesh(format!("node set {tag} references node {bad}")));
            }
        }
        Ok(())
    }

    pub fn volume(&self) -> f64 {
        let mut v = 0.0;
        for (e, el) in self.elements.iter().enumerate() {
            let coords = self.element_coords(e);
            let q = el.kind.quadrature();
            for (xi, w) in q.points.iter().zip(&q.weights) {
                let shape = shape_eval(el.kind, *xi);
                v += w * reference_jacobian(&shape, &coords).determinant();
            }
        }
        v
    }

    pub fn bounding_box(&self) -> (Vector3<f64>, Vector3<f64>) {
        let mut lo = Vector3::repeat(f64::INFINITY);
        let mut hi = Vector3::repeat(f64::NEG_INFINITY);
        for x in &self.nodes {
            lo = lo.inf(x);
            hi = hi.sup(x);
        }
        (lo, hi)
    }

    /// Applies `map` to every node coordinate.
    pub fn mapped<F: Fn(&Vector3<f64>) -> Vector3<f64>>(&self, map: F) -> Mesh {
        let mut m = self.clone();
        for x in m.nodes.iter_mut() {
            *x = map(x);
        }
        m
    }

    fn push_hex(&mut self, mut nodes: [usize; 8], region: i64) {
        let coords: Vec<Vector3<f64>> = nodes.iter().map(|&n| self.nodes[n]).collect();
        let shape = shape_eval(ElementKind::Hex8, [0.0; 3]);
        if reference_jacobian(&shape, &coords).determinant() < 0.0 {
            nodes.swap(1, 3);
            nodes.swap(5, 7);
        }
        self.elements.push(Element {
            kind: ElementKind::Hex8,
            nodes: nodes.to_vec(),
            region,
        });
    }
}

/// Axis-aligned box [0,lx]x[0,ly]x[0,lz] of nx*ny*nz hexahedra. Faces and
/// their nodes are tagged with the constants in [`tags`].
pub fn box_hex(size: [f64; 3], divisions: [usize; 3]) -> Mesh {
    let [nx, ny, nz] = divisions;
    let mut mesh = Mesh::default();
    let id = |i: usize, j: usize, k: usize| (k * (ny + 1) + j) * (nx + 1) + i;
    for k in 0..=nz {
        for j in 0..=ny {
            for i in 0..=nx {
                mesh.nodes.push(Vector3::new(
                    size[0] * i as f64 / nx as f64,
                    size[1] * j as f64 / ny as f64,
                    size[2] * k as f64 / nz as f64,
                ));
            }
        }
    }
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                mesh.push_hex(
                    [
                        id(i, j, k),
                        id(i + 1, j, k),
                        id(i + 1, j + 1, k),
                        id(i, j + 1, k),
                        id(i, j, k + 1),
                        id(i + 1, j, k + 1),
                        id(i + 1, j + 1, k + 1),
                        id(i, j + 1, k + 1),
                    ],
                    tags::BODY,
                );
            }
        }
    }
    let tol = 1e-9 * size.iter().cloned().fold(0.0, f64::max);
    mesh.classify_boundary(|c, _| {
        if c[0] < tol {
            Some(tags::XMIN)
        } else if c[0] > size[0] - tol {
            Some(tags::XMAX)
        } else if c[1] < tol {
            Some(tags::YMIN)
        } else if c[1] > size[1] - tol {
            Some(tags::YMAX)
        } else if c[2] < tol {
            Some(tags::ZMIN)
        } else if c[2] > size[2] - tol {
            Some(tags::ZMAX)
        } else {
            None
        }
    });
    for t in [tags::XMIN, tags::XMAX, tags::YMIN, tags::YMAX, tags::ZMIN, tags::ZMAX] {
        mesh.node_set_from_facets(t);
    }
    for (t, name) in [
        (tags::XMIN, "xmin"),
        (tags::XMAX, "xmax"),
        (tags::YMIN, "ymin"),
        (tags::YMAX, "ymax"),
        (tags::ZMIN, "zmin"),
        (tags::ZMAX, "zmax"),
        (tags::BODY, "body"),
    ] {
        mesh.region_names.insert(t, name.to_string());
    }
    mesh
}

/// Single hexahedron of edge `edge`.
pub fn unit_cube(edge: f64) -> Mesh {
    box_hex([edge; 3], [1, 1, 1])
}

/// Cylindrical tube around the z axis, z in [0, length].
pub fn tube(r_inner: f64, r_outer: f64, length: f64, n_circ: usize, n_axial: usize, n_thick: usize) -> Result<Mesh> {
    if n_circ < 4 || n_circ % 4 != 0 || n_axial == 0 || n_thick == 0 {
        return Err(Error::InvalidMesh(format!(
            "tube divisions must be n_circ % 4 == 0, n_axial, n_thick > 0 (got {n_circ}, {n_axial}, {n_thick})"
        )));
    }
    if !(r_inner > 0.0 && r_outer > r_inner && length > 0.0) {
        return Err(Error::InvalidMesh("tube needs 0 < r_inner < r_outer and length > 0".into()));
    }
    let mut mesh = Mesh::default();
    let per_layer = n_circ * (n_thick + 1);
    let id = |c: usize, r: usize, k: usize| k * per_layer + r * n_circ + (c % n_circ);
    for k in 0..=n_axial {
        let z = length * k as f64 / n_axial as f64;
        for r in 0..=n_thick {
            let rad = r_inner + (r_outer - r_inner) * r as f64 / n_thick as f64;
            for c in 0..n_circ {
                // start at -90 deg so that the bottom and top lines are node columns
                let phi = -0.5 * PI + 2.0 * PI * c as f64 / n_circ as f64;
                mesh.nodes.push(Vector3::new(rad * phi.cos(), rad * phi.sin(), z));
            }
        }
    }
    for k in 0..n_axial {
        for r in 0..n_thick {
            for c in 0..n_circ {
                mesh.push_hex(
                    [
                        id(c, r, k),
                        id(c, r + 1, k),
                        id(c + 1, r + 1, k),
                        id(c + 1, r, k),
                        id(c, r, k + 1),
                        id(c, r + 1, k + 1),
                        id(c + 1, r + 1, k + 1),
                        id(c + 1, r, k + 1),
                    ],
                    tags::BODY,
                );
            }
        }
    }
    let tol = 1e-9 * r_outer.max(length);
    let r_mid = 0.5 * (r_inner + r_outer);
    mesh.classify_boundary(|c, _| {
        if c[2] < tol {
            Some(tags::BOTTOM_END)
        } else if c[2] > length - tol {
            Some(tags::TOP_END)
        } else if c.xy().norm() < r_mid {
            Some(tags::INNER)
        } else {
            Some(tags::OUTER)
        }
    });
    for t in [tags::INNER, tags::OUTER, tags::BOTTOM_END, tags::TOP_END] {
        mesh.node_set_from_facets(t);
    }
    let bottom: Vec<usize> = (0..=n_axial).map(|k| id(0, n_thick, k)).collect();
    let top: Vec<usize> = (0..=n_axial).map(|k| id(n_circ / 2, n_thick, k)).collect();
    mesh.node_sets.insert(tags::BOTTOM_LINE, bottom);
    mesh.node_sets.insert(tags::TOP_LINE, top);
    for (t, name) in [
        (tags::INNER, "inner"),
        (tags::OUTER, "outer"),
        (tags::BOTTOM_END, "bottom_end"),
        (tags::TOP_END, "top_end"),
        (tags::BOTTOM_LINE, "bottom_line"),
        (tags::TOP_LINE, "top_line"),
        (tags::BODY, "body"),
    ] {
        mesh.region_names.insert(t, name.to_string());
    }
    Ok(mesh)
}

/// Solid circular cylinder around the z axis built as an O-grid: a central
/// square block surrounded by `n_radial` rings of hexahedra.
pub fn solid_cylinder(radius: f64, length: f64, n_radial: usize, n_circ: usize, n_axial: usize) -> Result<Mesh> {
    if n_circ < 4 || n_circ % 4 != 0 || n_radial == 0 || n_axial == 0 {
        return Err(Error::InvalidMesh("cylinder needs n_circ % 4 == 0 and positive divisions".into()));
    }
    let m = n_circ / 4;
    let half = 0.35 * radius;
    let mut mesh = Mesh::default();
    // in-plane node layout: square grid first, then ring layers 1..=n_radial
    let sq = |i: usize, j: usize| j * (m + 1) + i;
    let n_sq = (m + 1) * (m + 1);
    // perimeter of the square in counter-clockwise order starting at (-h,-h)
    let mut perimeter = Vec::with_capacity(n_circ);
    for i in 0..m {
        perimeter.push(sq(i, 0));
    }
    for j in 0..m {
        perimeter.push(sq(m, j));
    }
    for i in (1..=m).rev() {
        perimeter.push(sq(i, m));
    }
    for j in (1..=m).rev() {
        perimeter.push(sq(0, j));
    }
    let ring = |layer: usize, c: usize| {
        if layer == 0 {
            perimeter[c % n_circ]
        } else {
            n_sq + (layer - 1) * n_circ + (c % n_circ)
        }
    };
    let per_layer = n_sq + n_radial * n_circ;
    let mut plane = vec![[0.0f64; 2]; per_layer];
    for j in 0..=m {
        for i in 0..=m {
            plane[sq(i, j)] = [-half + 2.0 * half * i as f64 / m as f64, -half + 2.0 * half * j as f64 / m as f64];
        }
    }
    for c in 0..n_circ {
        let p0 = plane[perimeter[c]];
        let phi = -0.75 * PI + 2.0 * PI * c as f64 / n_circ as f64;
        let p1 = [radius * phi.cos(), radius * phi.sin()];
        for layer in 1..=n_radial {
            let tau = layer as f64 / n_radial as f64;
            plane[ring(layer, c)] = [p0[0] + tau * (p1[0] - p0[0]), p0[1] + tau * (p1[1] - p0[1])];
        }
    }
    for k in 0..=n_axial {
        let z = length * k as f64 / n_axial as f64;
        for p in &plane {
            mesh.nodes.push(Vector3::new(p[0], p[1], z));
        }
    }
    let g = |p: usize, k: usize| k * per_layer + p;
    for k in 0..n_axial {
        let mut quads: Vec<[usize; 4]> = Vec::new();
        for j in 0..m {
            for i in 0..m {
                quads.push([sq(i, j), sq(i + 1, j), sq(i + 1, j + 1), sq(i, j + 1)]);
            }
        }
        for layer in 0..n_radial {
            for c in 0..n_circ {
                quads.push([ring(layer, c), ring(layer + 1, c), ring(layer + 1, c + 1), ring(layer, c + 1)]);
            }
        }
        for q in quads {
            mesh.push_hex(
                [
                    g(q[0], k),
                    g(q[1], k),
                    g(q[2], k),
                    g(q[3], k),
                    g(q[0], k + 1),
                    g(q[1], k + 1),
                    g(q[2], k + 1),
                    g(q[3], k + 1),
                ],
                tags::BODY,
            );
        }
    }
    let tol = 1e-9 * radius.max(length);
    mesh.classify_boundary(|c, _| {
        if c[2] < tol {
            Some(tags::BOTTOM_END)
        } else if c[2] > length - tol {
            Some(tags::TOP_END)
        } else {
            Some(tags::OUTER)
        }
    });
    for t in [tags::OUTER, tags::BOTTOM_END, tags::TOP_END] {
        mesh.node_set_from_facets(t);
    }
    Ok(mesh)
}
