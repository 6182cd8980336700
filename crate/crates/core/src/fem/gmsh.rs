//! Gmsh MSH 2.2 ASCII reader.
//!
//! Volume elements (tetrahedra, type 4; hexahedra, type 5) become mesh
//! elements tagged with their physical group. Triangles and quadrangles
//! (types 2, 3) are matched against element faces and become tagged facets.
//! Every physical group of dimension < 3 also becomes a node set, so
//! lines and points can carry Dirichlet data.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use nalgebra::Vector3;

use super::element::ElementKind;
use super::mesh::{Element, Facet, Mesh};
use crate::error::{Error, Result};

pub fn read_msh(path: &Path) -> Result<Mesh> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_msh(&text)
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<&'a str> {
        loop {
            match self.inner.next() {
                Some((i, l)) => {
                    self.line = i + 1;
                    let t = l.trim();
                    if !t.is_empty() {
                        return Ok(t);
                    }
                }
                None => return Err(self.err("unexpected end of file")),
            }
        }
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Gmsh {
            line: self.line,
            msg: msg.into(),
        }
    }

    fn count(&mut self) -> Result<usize> {
        let l = self.next()?;
        l.parse().map_err(|_| self.err(format!("expected a count, found {l:?}")))
    }

    fn expect(&mut self, tag: &str) -> Result<()> {
        let l = self.next()?;
        if l != tag {
            return Err(self.err(format!("expected {tag}, found {l:?}")));
        }
        Ok(())
    }
}

fn num<T: std::str::FromStr>(lines: &Lines<'_>, s: Option<&str>) -> Result<T> {
    let s = s.ok_or_else(|| lines.err("missing field"))?;
    s.parse().map_err(|_| lines.err(format!("malformed number {s:?}")))
}

pub fn parse_msh(text: &str) -> Result<Mesh> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        line: 0,
    };
    let mut mesh = Mesh::default();
    let mut node_index: HashMap<u64, usize> = HashMap::new();
    let mut surface: Vec<(i64, Vec<usize>)> = Vec::new();
    let mut groups: BTreeMap<i64, BTreeSet<usize>> = BTreeMap::new();
    let mut have_format = false;

    while let Ok(section) = lines.next() {
        match section {
            "$MeshFormat" => {
                let l = lines.next()?;
                let version: f64 = num(&lines, l.split_whitespace().next())?;
                let file_type: u32 = num(&lines, l.split_whitespace().nth(1))?;
                if !(2.0..3.0).contains(&version) || file_type != 0 {
                    return Err(lines.err(format!("only MSH 2.x ASCII is supported (got {l:?})")));
                }
                have_format = true;
                lines.expect("$EndMeshFormat")?;
            }
            "$PhysicalNames" => {
                let n = lines.count()?;
                for _ in 0..n {
                    let l = lines.next()?;
                    let mut it = l.splitn(3, char::is_whitespace);
                    let _dim: u32 = num(&lines, it.next())?;
                    let tag: i64 = num(&lines, it.next())?;
                    let name = it.next().unwrap_or("").trim().trim_matches('"').to_string();
                    mesh.region_names.insert(tag, name);
                }
                lines.expect("$EndPhysicalNames")?;
            }
            "$Nodes" => {
                let n = lines.count()?;
                for _ in 0..n {
                    let l = lines.next()?;
                    let mut it = l.split_whitespace();
                    let id: u64 = num(&lines, it.next())?;
                    let x: f64 = num(&lines, it.next())?;
                    let y: f64 = num(&lines, it.next())?;
                    let z: f64 = num(&lines, it.next())?;
                    if node_index.insert(id, mesh.nodes.len()).is_some() {
                        return Err(lines.err(format!("duplicate node id {id}")));
                    }
                    mesh.nodes.push(Vector3::new(x, y, z));
                }
                lines.expect("$EndNodes")?;
            }
            "$Elements" => {
                let n = lines.count()?;
                for _ in 0..n {
                    let l = lines.next()?;
                    let fields: Vec<&str> = l.split_whitespace().collect();
                    let mut it = fields.iter().copied();
                    let _id: u64 = num(&lines, it.next())?;
                    let ty: u32 = num(&lines, it.next())?;
                    let ntags: usize = num(&lines, it.next())?;
                    let mut tag_values = Vec::with_capacity(ntags);
                    for _ in 0..ntags {
                        tag_values.push(num::<i64>(&lines, it.next())?);
                    }
                    let physical = tag_values.first().copied().unwrap_or(0);
                    let mut nodes = Vec::new();
                    for s in it {
                        let id: u64 = num(&lines, Some(s))?;
                        let idx = *node_index
                            .get(&id)
                            .ok_or_else(|| lines.err(format!("element references unknown node {id}")))?;
                        nodes.push(idx);
                    }
                    let expected = match ty {
                        15 => 1,
                        1 => 2,
                        2 => 3,
                        3 => 4,
                        4 => 4,
                        5 => 8,
                        other => return Err(lines.err(format!("unsupported element type {other}"))),
                    };
                    if nodes.len() != expected {
                        return Err(lines.err(format!("type {ty} needs {expected} nodes, got {}", nodes.len())));
                    }
                    match ty {
                        4 | 5 => mesh.elements.push(Element {
                            kind: ElementKind::from_gmsh_type(ty)?,
                            nodes,
                            region: physical,
                        }),
                        _ => {
                            if ty == 2 || ty == 3 {
                                surface.push((physical, nodes.clone()));
                            }
                            groups.entry(physical).or_default().extend(nodes);
                        }
                    }
                }
                lines.expect("$EndElements")?;
            }
            other if other.starts_with('$') && !other.starts_with("$End") => {
                // skip unknown sections such as $NodeData
                let end = format!("$End{}", &other[1..]);
                while lines.next()? != end {}
            }
            other => return Err(lines.err(format!("unexpected line {other:?}"))),
        }
    }
    if !have_format {
        return Err(Error::Gmsh {
            line: 0,
            msg: "missing $MeshFormat".into(),
        });
    }
    if mesh.elements.is_empty() {
        return Err(Error::Gmsh {
            line: lines.line,
            msg: "no volume elements".into(),
        });
    }

    let mut faces: HashMap<Vec<usize>, (usize, usize)> = HashMap::new();
    for (e, el) in mesh.elements.iter().enumerate() {
        for (f, local) in el.kind.faces().iter().enumerate() {
            let mut key: Vec<usize> = local.iter().map(|&l| el.nodes[l]).collect();
            key.sort_unstable();
            faces.insert(key, (e, f));
        }
    }
    for (region, mut nodes) in surface {
        nodes.sort_unstable();
        let (element, face) = *faces.get(&nodes).ok_or_else(|| Error::Gmsh {
            line: 0,
            msg: format!("surface element in group {region} is not an element face"),
        })?;
        mesh.facets.push(Facet { element, face, region });
    }
    for (tag, set) in groups {
        mesh.node_sets.insert(tag, set.into_iter().collect());
    }
    mesh.validate()?;
    Ok(mesh)
}

/// Writes a mesh back as MSH 2.2 ASCII (volume elements, facets and node sets).
pub fn write_msh(mesh: &Mesh) -> String {
    use std::fmt::Write;
    let mut s = String::new();
    s.push_str("$MeshFormat\n2.2 0 8\n$EndMeshFormat\n");
    if !mesh.region_names.is_empty() {
        let _ = writeln!(s, "$PhysicalNames\n{}", mesh.region_names.len());
        for (tag, name) in &mesh.region_names {
            let _ = writeln!(s, "3 {tag} \"{name}\"");
        }
        s.push_str("$EndPhysicalNames\n");
    }
    let _ = writeln!(s, "$Nodes\n{}", mesh.nodes.len());
    for (i, x) in mesh.nodes.iter().enumerate() {
        let _ = writeln!(s, "{} {:.17e} {:.17e} {:.17e}", i + 1, x[0], x[1], x[2]);
    }
    s.push_str("$EndNodes\n");
    let facet_tagged: BTreeSet<i64> = mesh.facets.iter().map(|f| f.region).collect();
    let point_sets: Vec<(i64, usize)> = mesh
        .node_sets
        .iter()
        .filter(|(t, _)| !facet_tagged.contains(t))
        .flat_map(|(t, v)| v.iter().map(move |&n| (*t, n)))
        .collect();
    let total = mesh.elements.len() + mesh.facets.len() + point_sets.len();
    let _ = writeln!(s, "$Elements\n{total}");
    let mut id = 1;
    for (tag, n) in &point_sets {
        let _ = writeln!(s, "{id} 15 2 {tag} {tag} {}", n + 1);
        id += 1;
    }
    for f in &mesh.facets {
        let nodes = mesh.facet_nodes(f);
        let ty = if nodes.len() == 3 { 2 } else { 3 };
        let list: Vec<String> = nodes.iter().map(|n| (n + 1).to_string()).collect();
        let _ = writeln!(s, "{id} {ty} 2 {} {} {}", f.region, f.region, list.join(" "));
        id += 1;
    }
    for el in &mesh.elements {
        let list: Vec<String> = el.nodes.iter().map(|n| (n + 1).to_string()).collect();
        let _ = writeln!(s, "{id} {} 2 {} {} {}", el.kind.gmsh_type(), el.region, el.region, list.join(" "));
        id += 1;
    }
    s.push_str("$EndElements\n");
    s
}
