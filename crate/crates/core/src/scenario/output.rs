//! CSV time series, gnuplot curve files, legacy VTK snapshots and the
//! JSON-lines step log. Numbers are written with 17 significant digits so
//! that reruns are byte-identical.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::Vector3;

use super::config::Scenario;
use super::run::{RunOutput, Snapshot, TimeSeriesRecord};
use crate::coupled::StepReport;
use crate::error::{Error, Result};
use crate::fem::{ElementKind, Mesh};

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn csv_text(records: &[TimeSeriesRecord]) -> String {
    let mut s = TimeSeriesRecord::HEADER.join(",");
    s.push('\n');
    for r in records {
        let row: Vec<String> = r.values().iter().map(|&v| num(v)).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

/// Column pairs (or triples) of the curve files of a scenario.
pub fn curves(scenario: Scenario) -> Vec<(&'static str, Vec<&'static str>)> {
    match scenario {
        Scenario::Sec => vec![
            ("theta_eps_sigma", vec!["theta", "eps_yy", "sigma_yy"]),
            ("eps_t", vec!["t", "eps_yy"]),
            ("sigma_t", vec!["t", "sigma_yy"]),
            ("sigma_eps", vec!["eps_yy", "sigma_yy"]),
            ("sigma_theta", vec!["theta", "sigma_yy"]),
            ("eps_theta", vec!["theta", "eps_yy"]),
        ],
        Scenario::Cvs => vec![
            ("fy_uy", vec!["u", "reaction"]),
            ("uy_theta", vec!["theta_mean", "u"]),
            ("fy_theta", vec!["theta_mean", "reaction"]),
            ("theta_t", vec!["t", "theta_mean"]),
        ],
    }
}

pub fn curve_text(records: &[TimeSeriesRecord], columns: &[&str]) -> String {
    let idx: Vec<usize> = columns
        .iter()
        .map(|c| TimeSeriesRecord::HEADER.iter().position(|h| h == c).expect("known column"))
        .collect();
    let mut s = format!("# {}\n", columns.join(" "));
    for r in records {
        let v = r.values();
        let row: Vec<String> = idx.iter().map(|&i| num(v[i])).collect();
        s.push_str(&row.join(" "));
        s.push('\n');
    }
    s
}

fn vtk_cell_type(kind: ElementKind) -> u8 {
    match kind {
        ElementKind::Hex8 => 12,
        ElementKind::Tet4 => 10,
    }
}

fn push_vector(s: &mut String, name: &str, v: &[Vector3<f64>]) {
    writeln!(s, "VECTORS {name} double").unwrap();
    for x in v {
        writeln!(s, "{} {} {}", num(x[0]), num(x[1]), num(x[2])).unwrap();
    }
}

fn push_scalar(s: &mut String, name: &str, v: &[f64]) {
    writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default").unwrap();
    for &x in v {
        writeln!(s, "{}", num(x)).unwrap();
    }
}

/// Legacy ASCII unstructured grid on the reference mesh.
pub fn vtk_text(mesh: &Mesh, snap: &Snapshot) -> String {
    let mut s = String::new();
    writeln!(s, "# vtk DataFile Version 3.0\nstep {} t = {}\nASCII\nDATASET UNSTRUCTURED_GRID", snap.step, num(snap.t)).unwrap();
    writeln!(s, "POINTS {} double", mesh.node_count()).unwrap();
    for x in &mesh.nodes {
        writeln!(s, "{} {} {}", num(x[0]), num(x[1]), num(x[2])).unwrap();
    }
    let size: usize = mesh.elements.iter().map(|e| e.nodes.len() + 1).sum();
    writeln!(s, "CELLS {} {size}", mesh.elements.len()).unwrap();
    for e in &mesh.elements {
        let ids: Vec<String> = e.nodes.iter().map(|n| n.to_string()).collect();
        writeln!(s, "{} {}", e.nodes.len(), ids.join(" ")).unwrap();
    }
    writeln!(s, "CELL_TYPES {}", mesh.elements.len()).unwrap();
    for e in &mesh.elements {
        writeln!(s, "{}", vtk_cell_type(e.kind)).unwrap();
    }
    writeln!(s, "POINT_DATA {}", mesh.node_count()).unwrap();
    push_vector(&mut s, "u", &snap.u);
    push_scalar(&mut s, "theta", &snap.theta);
    if let Some((current, loss)) = &snap.em {
        push_scalar(&mut s, "phi", &snap.phi);
        push_vector(&mut s, "current", current);
        push_scalar(&mut s, "loss", loss);
    }
    s
}

pub fn steps_text(reports: &[StepReport]) -> Result<String> {
    let mut s = String::new();
    for r in reports {
        s.push_str(&serde_json::to_string(r).map_err(|e| Error::Config(e.to_string()))?);
        s.push('\n');
    }
    Ok(s)
}

fn write(path: PathBuf, text: &str, written: &mut Vec<PathBuf>) -> Result<()> {
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    written.push(path);
    Ok(())
}

/// Writes every output of a run into `dir` and returns the paths.
pub fn emit_outputs(out: &RunOutput, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    write(dir.join("config.toml"), &out.config.echo()?, &mut written)?;
    write(dir.join("timeseries.csv"), &csv_text(&out.records), &mut written)?;
    write(dir.join("steps.jsonl"), &steps_text(&out.reports)?, &mut written)?;
    for (name, cols) in curves(out.config.scenario) {
        write(dir.join(format!("{name}.dat")), &curve_text(&out.records, &cols), &mut written)?;
    }
    for (k, snap) in out.snapshots.iter().enumerate() {
        write(dir.join(format!("snapshot_{k:03}.vtk")), &vtk_text(&out.problem.mesh, snap), &mut written)?;
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::unit_cube;

    #[test]
    fn zero_steps_give_a_header_only_csv() {
        assert_eq!(csv_text(&[]), "t,theta,eps_yy,sigma_yy,pk2_yy,u,reaction,joule_power,theta_min,theta_max,theta_mean,u_max\n");
    }

    #[test]
    fn numbers_keep_seventeen_digits() {
        assert_eq!(num(0.1), "1.0000000000000001e-1");
        assert_eq!(num(0.1).parse::<f64>().unwrap(), 0.1);
        let x = 1.0 / 3.0;
        assert_eq!(num(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn curve_columns_exist() {
        for s in [Scenario::Sec, Scenario::Cvs] {
            for (_, cols) in curves(s) {
                let text = curve_text(&[TimeSeriesRecord::default()], &cols);
                assert_eq!(text.lines().nth(1).unwrap().split(' ').count(), cols.len());
            }
        }
        assert_eq!(curves(Scenario::Sec).len(), 6);
    }

    #[test]
    fn vtk_counts_are_consistent() {
        let mesh = unit_cube(1.0);
        let snap = Snapshot {
            step: 0,
            t: 0.0,
            u: vec![Vector3::zeros(); 8],
            theta: vec![300.0; 8],
            phi: vec![0.0; 8],
            em: None,
        };
        let text = vtk_text(&mesh, &snap);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[4], "POINTS 8 double");
        assert_eq!(lines[13], "CELLS 1 9");
        assert_eq!(lines[15], "CELL_TYPES 1");
        assert_eq!(lines[16], "12");
        assert_eq!(lines[17], "POINT_DATA 8");
    }
}
