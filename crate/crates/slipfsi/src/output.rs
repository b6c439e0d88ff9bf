//! Artifact writers. Every CSV starts with a `# schema: ...` line, VTK files
//! carry the schema in their title line, Matrix Market files in the first
//! comment and JSON reports in a leading `schema` field.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::Mesh;
use crate::linalg::Csr;
use crate::picard::{SeriesRow, Snapshot};
use crate::transform::FlowMap;

pub const SERIES_SCHEMA: &str = "slipfsi-series v1";
pub const FLOWMAP_SCHEMA: &str = "slipfsi-flowmap v1";
pub const SNAPSHOT_SCHEMA: &str = "slipfsi-snapshot v1";
pub const OPERATOR_SCHEMA: &str = "slipfsi-operator v1";

pub const SERIES_COLUMNS: [&str; 14] = [
    "t",
    "l_x",
    "l_y",
    "l_z",
    "omega_x",
    "omega_y",
    "omega_z",
    "h_x",
    "h_y",
    "h_z",
    "energy",
    "viscous_dissipation",
    "slip_dissipation",
    "u_norm",
];

pub fn write_file(path: impl AsRef<Path>, contents: &str) -> Result<()> {
    let path = path.as_ref();
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Pretty JSON of `value` with `schema` inserted as the first field.
pub fn json_report<T: Serialize>(schema: &str, value: &T) -> Result<String> {
    let mut map = serde_json::Map::new();
    map.insert("schema".into(), schema.into());
    match serde_json::to_value(value)? {
        serde_json::Value::Object(fields) => map.extend(fields),
        other => {
            map.insert("data".into(), other);
        }
    }
    Ok(serde_json::to_string_pretty(&serde_json::Value::Object(map))?)
}

pub fn series_csv(rows: &[SeriesRow]) -> String {
    let mut s = format!("# schema: {SERIES_SCHEMA}\n{}\n", SERIES_COLUMNS.join(","));
    for r in rows {
        let mut vals = vec![r.t];
        vals.extend(r.l);
        vals.extend(r.omega);
        vals.extend(r.h);
        vals.extend([r.energy, r.viscous_dissipation, r.slip_dissipation, r.u_norm]);
        let line: Vec<String> = vals.iter().map(|v| format!("{v:.17e}")).collect();
        s.push_str(&line.join(","));
        s.push('\n');
    }
    s
}

/// Flow-map diagnostics on the given vertices at every level of `map`,
/// whose points are the mesh vertices.
pub fn flowmap_csv(map: &FlowMap, vertices: &[usize]) -> String {
    let mut s = format!("# schema: {FLOWMAP_SCHEMA}\nt,vertex,x,y,z,det_jx,jx_minus_q\n");
    for n in 0..map.len() {
        for &v in vertices {
            let x = map.x[n][v];
            let j = map.jx[n][v];
            writeln!(
                s,
                "{:.17e},{v},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
                map.times[n],
                x.x,
                x.y,
                x.z,
                j.determinant(),
                (j - map.q[n]).norm()
            )
            .unwrap();
        }
    }
    s
}

/// Legacy ASCII VTK of a snapshot on the moved mesh (P1 part of the velocity).
pub fn snapshot_vtk(mesh: &Mesh, snap: &Snapshot) -> String {
    let nv = mesh.n_vertices();
    let mut s = String::new();
    writeln!(s, "# vtk DataFile Version 3.0").unwrap();
    writeln!(s, "{SNAPSHOT_SCHEMA} t={:.17e}", snap.t).unwrap();
    writeln!(s, "ASCII\nDATASET UNSTRUCTURED_GRID\nPOINTS {nv} double").unwrap();
    for p in &snap.points {
        writeln!(s, "{:.17e} {:.17e} {:.17e}", p.x, p.y, p.z).unwrap();
    }
    writeln!(s, "CELLS {} {}", mesh.tets.len(), 5 * mesh.tets.len()).unwrap();
    for t in &mesh.tets {
        writeln!(s, "4 {} {} {} {}", t[0], t[1], t[2], t[3]).unwrap();
    }
    writeln!(s, "CELL_TYPES {}", mesh.tets.len()).unwrap();
    for _ in &mesh.tets {
        s.push_str("10\n");
    }
    writeln!(s, "POINT_DATA {nv}\nVECTORS velocity double").unwrap();
    for u in &snap.velocity {
        writeln!(s, "{:.17e} {:.17e} {:.17e}", u.x, u.y, u.z).unwrap();
    }
    if snap.pressure.len() == nv {
        writeln!(s, "SCALARS pressure double 1\nLOOKUP_TABLE default").unwrap();
        for p in &snap.pressure {
            writeln!(s, "{p:.17e}").unwrap();
        }
    }
    s
}

/// Coordinate Matrix Market, 1-based.
pub fn matrix_market(m: &Csr, name: &str) -> String {
    let mut s = String::from("%%MatrixMarket matrix coordinate real general\n");
    writeln!(s, "% schema: {OPERATOR_SCHEMA}\n% name: {name}").unwrap();
    writeln!(s, "{} {} {}", m.nrows, m.ncols, m.data.len()).unwrap();
    for i in 0..m.nrows {
        for k in m.indptr[i]..m.indptr[i + 1] {
            writeln!(s, "{} {} {:.17e}", i + 1, m.indices[k] + 1, m.data[k]).unwrap();
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Triplets;

    #[test]
    fn series_has_schema_and_columns() {
        let row = SeriesRow {
            t: 0.5,
            l: [1.0, 2.0, 3.0],
            omega: [0.0; 3],
            h: [0.0; 3],
            energy: 1.5,
            viscous_dissipation: 0.0,
            slip_dissipation: 0.0,
            u_norm: 2.0,
        };
        let csv = series_csv(&[row]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "# schema: slipfsi-series v1");
        assert_eq!(lines[1].split(',').count(), 14);
        let vals: Vec<f64> = lines[2].split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(vals[0], 0.5);
        assert_eq!(vals[3], 3.0);
        assert_eq!(vals[13], 2.0);
    }

    #[test]
    fn matrix_market_lists_entries_one_based() {
        let mut t = Triplets::new(2, 3);
        t.push(0, 2, 4.0);
        t.push(1, 0, -1.0);
        let mm = matrix_market(&t.to_csr(), "test");
        let lines: Vec<&str> = mm.lines().collect();
        assert_eq!(lines[1], "% schema: slipfsi-operator v1");
        assert_eq!(lines[3], "2 3 2");
        assert!(lines[4].starts_with("1 3 4."));
        assert!(lines[5].starts_with("2 1 -1."));
    }

    #[test]
    fn json_report_leads_with_the_schema() {
        #[derive(Serialize)]
        struct R {
            a: f64,
        }
        let s = json_report("x v1", &R { a: 1.0 }).unwrap();
        assert_eq!(s.lines().nth(1).unwrap().trim(), "\"schema\": \"x v1\",");
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["a"], 1.0);
    }
}
