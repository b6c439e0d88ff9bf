//! ASCII mesh format:
//!
//! ```text
//! slipfsi-mesh v1
//! vertices N
//! x y z            (N lines)
//! tets M
//! a b c d          (M lines, 0-based)
//! facets K
//! a b c OUTER|SOLID (K lines)
//! ```

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Vector3;

use super::{Mesh, Tag};
use crate::error::{Error, Result};

pub const MESH_HEADER: &str = "slipfsi-mesh v1";

pub fn write_mesh(mesh: &Mesh) -> String {
    let mut s = String::new();
    writeln!(s, "{MESH_HEADER}").unwrap();
    writeln!(s, "vertices {}", mesh.vertices.len()).unwrap();
    for p in &mesh.vertices {
        writeln!(s, "{:.17e} {:.17e} {:.17e}", p.x, p.y, p.z).unwrap();
    }
    writeln!(s, "tets {}", mesh.tets.len()).unwrap();
    for t in &mesh.tets {
        writeln!(s, "{} {} {} {}", t[0], t[1], t[2], t[3]).unwrap();
    }
    writeln!(s, "facets {}", mesh.facets.len()).unwrap();
    for f in &mesh.facets {
        writeln!(s, "{} {} {} {}", f.nodes[0], f.nodes[1], f.nodes[2], f.tag.as_str()).unwrap();
    }
    s
}

pub fn save_mesh(mesh: &Mesh, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path.as_ref(), write_mesh(mesh)).map_err(|e| Error::io(path, e))
}

pub fn load_mesh(path: impl AsRef<Path>) -> Result<Mesh> {
    let text = std::fs::read_to_string(path.as_ref()).map_err(|e| Error::io(path, e))?;
    parse_mesh(&text)
}

struct Lines<'a> {
    it: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<(usize, &'a str)> {
        loop {
            match self.it.next() {
                Some((_, l)) if l.trim().is_empty() || l.trim_start().starts_with('#') => continue,
                Some((i, l)) => return Ok((i + 1, l.trim())),
                None => {
                    return Err(Error::MeshFormat {
                        line: 0,
                        msg: "unexpected end of file".into(),
                    })
                }
            }
        }
    }

    fn section(&mut self, name: &str) -> Result<usize> {
        let (line, l) = self.next()?;
        let mut parts = l.split_whitespace();
        match (parts.next(), parts.next().map(str::parse::<usize>)) {
            (Some(n), Some(Ok(c))) if n == name => Ok(c),
            _ => Err(Error::MeshFormat {
                line,
                msg: format!("expected `{name} <count>`"),
            }),
        }
    }
}

fn parse_fields<T: std::str::FromStr>(line: usize, l: &str, n: usize) -> Result<Vec<T>> {
    let v: Vec<T> = l
        .split_whitespace()
        .take(n)
        .map(|s| s.parse::<T>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::MeshFormat {
            line,
            msg: format!("could not parse `{l}`"),
        })?;
    if v.len() != n {
        return Err(Error::MeshFormat {
            line,
            msg: format!("expected {n} fields"),
        });
    }
    Ok(v)
}

pub fn parse_mesh(text: &str) -> Result<Mesh> {
    let mut lines = Lines {
        it: text.lines().enumerate(),
    };
    let (line, header) = lines.next()?;
    if header != MESH_HEADER {
        return Err(Error::MeshFormat {
            line,
            msg: format!("header must be `{MESH_HEADER}`"),
        });
    }
    let nv = lines.section("vertices")?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (line, l) = lines.next()?;
        let x: Vec<f64> = parse_fields(line, l, 3)?;
        vertices.push(Vector3::new(x[0], x[1], x[2]));
    }
    let nt = lines.section("tets")?;
    let mut tets = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (line, l) = lines.next()?;
        let t: Vec<usize> = parse_fields(line, l, 4)?;
        tets.push([t[0], t[1], t[2], t[3]]);
    }
    let nf = lines.section("facets")?;
    let mut facets = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (line, l) = lines.next()?;
        let parts: Vec<&str> = l.split_whitespace().collect();
        if parts.len() != 4 {
            return Err(Error::MeshFormat {
                line,
                msg: "facet needs three indices and a tag".into(),
            });
        }
        let idx: Vec<usize> = parse_fields(line, &parts[..3].join(" "), 3)?;
        let tag = match parts[3] {
            "OUTER" => Tag::Outer,
            "SOLID" => Tag::Solid,
            other => {
                return Err(Error::MeshFormat {
                    line,
                    msg: format!("unknown tag `{other}`"),
                })
            }
        };
        facets.push(([idx[0], idx[1], idx[2]], tag));
    }
    Mesh::new(vertices, tets, facets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::shell_mesh;

    #[test]
    fn round_trip_preserves_mesh() {
        let m = shell_mesh(1.0, 4.0, 0, 2).unwrap();
        let text = write_mesh(&m);
        assert!(text.starts_with(MESH_HEADER));
        let back = parse_mesh(&text).unwrap();
        assert_eq!(back.tets, m.tets);
        assert_eq!(back.facets, m.facets);
        for (a, b) in back.vertices.iter().zip(&m.vertices) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn malformed_inputs_report_lines() {
        assert!(matches!(parse_mesh("bogus"), Err(Error::MeshFormat { line: 1, .. })));
        let m = shell_mesh(1.0, 4.0, 0, 1).unwrap();
        let bad = write_mesh(&m).replace("SOLID", "WALL");
        assert!(matches!(parse_mesh(&bad), Err(Error::MeshFormat { .. })));
        let truncated: String = write_mesh(&m).lines().take(5).collect::<Vec<_>>().join("\n");
        assert!(parse_mesh(&truncated).is_err());
    }
}
