//! Genus-0 triangle template meshes and the ASCII OBJ loader.

use std::collections::HashSet;
use std::io::BufRead;
use std::path::Path;

use nalgebra::{Point3, Vector3};

use crate::error::{Error, Result};

pub const DEGENERATE_AREA: f64 = 1e-12;

/// Reference size of a preprocessed template (642 vertices, 1280 faces).
pub const STRICT_VERTEX_COUNT: usize = 642;
pub const STRICT_FACE_COUNT: usize = 1280;

/// A closed genus-0 triangle mesh in model units.
#[derive(Debug, Clone)]
pub struct TemplateMesh {
    pub vertices: Vec<Point3<f64>>,
    pub faces: Vec<[usize; 3]>,
}

impl TemplateMesh {
    /// Builds a mesh from raw arrays, validating indices, face areas and
    /// sphere topology (V - E + F = 2 on a closed triangle mesh).
    pub fn new(vertices: Vec<Point3<f64>>, faces: Vec<[usize; 3]>) -> Result<Self> {
        let mesh = TemplateMesh { vertices, faces };
        mesh.validate()?;
        Ok(mesh)
    }

    fn validate(&self) -> Result<()> {
        let nv = self.vertices.len();
        for (fi, f) in self.faces.iter().enumerate() {
            for &vi in f {
                if vi >= nv {
                    return Err(Error::Topology(format!(
                        "face {fi} references vertex {vi} but only {nv} vertices exist"
                    )));
                }
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::Topology(format!("face {fi} repeats a vertex")));
            }
            let area = self.face_area(fi);
            if area <= DEGENERATE_AREA {
                return Err(Error::Degenerate(format!(
                    "face {fi} has area {area} <= {DEGENERATE_AREA}"
                )));
            }
        }
        let euler = self.euler_characteristic();
        if euler != 2 {
            return Err(Error::Topology(format!(
                "mesh is not genus-0: V - E + F = {euler}, expected 2"
            )));
        }
        Ok(())
    }

    pub fn euler_characteristic(&self) -> i64 {
        let mut edges: HashSet<(usize, usize)> = HashSet::new();
        for f in &self.faces {
            for (a, b) in [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])] {
                edges.insert((a.min(b), a.max(b)));
            }
        }
        self.vertices.len() as i64 - edges.len() as i64 + self.faces.len() as i64
    }

    pub fn face_area(&self, face: usize) -> f64 {
        let [a, b, c] = self.face_points(face);
        0.5 * (b - a).cross(&(c - a)).norm()
    }

    pub fn face_points(&self, face: usize) -> [Point3<f64>; 3] {
        let f = self.faces[face];
        [self.vertices[f[0]], self.vertices[f[1]], self.vertices[f[2]]]
    }

    pub fn centroid(&self) -> Point3<f64> {
        let mut acc = Vector3::zeros();
        for v in &self.vertices {
            acc += v.coords;
        }
        Point3::from(acc / self.vertices.len() as f64)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.faces.len()).map(|f| self.face_area(f)).sum()
    }

    /// Checks the reference template size (`--strict-size`).
    pub fn check_strict_size(&self) -> Result<()> {
        if self.vertices.len() != STRICT_VERTEX_COUNT || self.faces.len() != STRICT_FACE_COUNT {
            return Err(Error::Topology(format!(
                "strict size check failed: {} vertices / {} faces, expected {} / {}",
                self.vertices.len(),
                self.faces.len(),
                STRICT_VERTEX_COUNT,
                STRICT_FACE_COUNT
            )));
        }
        Ok(())
    }
}

/// Loads an ASCII OBJ. Only `v x y z` and triangular `f i j k` records are
/// honored (1-indexed); every other record type is ignored. Face entries may
/// carry `/vt/vn` suffixes, which are stripped.
pub fn load_obj(path: impl AsRef<Path>) -> Result<TemplateMesh> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = std::io::BufReader::new(file);
    parse_obj(reader, path)
}

/// Parses OBJ text from any reader. Exposed separately so untrusted input
/// can be driven through the parser without touching the filesystem.
pub fn parse_obj(reader: impl BufRead, path: &Path) -> Result<TemplateMesh> {
    let mut vertices: Vec<Point3<f64>> = Vec::new();
    let mut faces: Vec<[usize; 3]> = Vec::new();

    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let mut it = line.split_whitespace();
        match it.next() {
            Some("v") => {
                let mut coords = [0.0f64; 3];
                for c in coords.iter_mut() {
                    let tok = it.next().ok_or_else(|| Error::Parse {
                        path: path.into(),
                        line: lineno,
                        msg: "vertex record with fewer than 3 coordinates".into(),
                    })?;
                    *c = tok.parse::<f64>().map_err(|_| Error::Parse {
                        path: path.into(),
                        line: lineno,
                        msg: format!("bad coordinate {tok:?}"),
                    })?;
                    if !c.is_finite() {
                        return Err(Error::Parse {
                            path: path.into(),
                            line: lineno,
                            msg: format!("non-finite coordinate {tok:?}"),
                        });
                    }
                }
                vertices.push(Point3::new(coords[0], coords[1], coords[2]));
            }
            Some("f") => {
                let entries: Vec<&str> = it.collect();
                if entries.len() != 3 {
                    return Err(Error::NonTriangleFace {
                        path: path.into(),
                        line: lineno,
                        arity: entries.len(),
                    });
                }
                let mut idx = [0usize; 3];
                for (slot, entry) in idx.iter_mut().zip(&entries) {
                    let head = entry.split('/').next().unwrap_or("");
                    let one_based: i64 = head.parse().map_err(|_| Error::Parse {
                        path: path.into(),
                        line: lineno,
                        msg: format!("bad face index {entry:?}"),
                    })?;
                    if one_based < 1 {
                        return Err(Error::Parse {
                            path: path.into(),
                            line: lineno,
                            msg: format!("face index {one_based} out of range (1-indexed)"),
                        });
                    }
                    *slot = (one_based - 1) as usize;
                }
                faces.push(idx);
            }
            _ => {}
        }
    }

    TemplateMesh::new(vertices, faces)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    pub(crate) fn octahedron_obj() -> String {
        // unit octahedron, faces wound outward
        "v 1 0 0\nv -1 0 0\nv 0 1 0\nv 0 -1 0\nv 0 0 1\nv 0 0 -1\n\
         f 1 3 5\nf 3 2 5\nf 2 4 5\nf 4 1 5\nf 3 1 6\nf 2 3 6\nf 4 2 6\nf 1 4 6\n"
            .to_string()
    }

    #[test]
    fn octahedron_loads_and_satisfies_euler() {
        let mesh = parse_obj(Cursor::new(octahedron_obj()), Path::new("oct.obj")).unwrap();
        assert_eq!(mesh.vertices.len(), 6);
        assert_eq!(mesh.faces.len(), 8);
        assert_eq!(mesh.euler_characteristic(), 2);
    }

    #[test]
    fn quad_face_is_rejected() {
        let text = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n";
        let err = parse_obj(Cursor::new(text), Path::new("quad.obj")).unwrap_err();
        assert!(matches!(err, Error::NonTriangleFace { arity: 4, .. }));
    }

    #[test]
    fn open_mesh_fails_topology() {
        // single triangle: V-E+F = 3-3+1 = 1
        let text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n";
        let err = parse_obj(Cursor::new(text), Path::new("tri.obj")).unwrap_err();
        assert!(matches!(err, Error::Topology(_)));
    }

    #[test]
    fn icosphere_is_strict_size() {
        let mesh = crate::template::icosphere(3);
        assert_eq!(mesh.vertices.len(), 642);
        assert_eq!(mesh.faces.len(), 1280);
        mesh.check_strict_size().unwrap();
        assert_eq!(mesh.euler_characteristic(), 2);
    }

    #[test]
    fn vt_vn_suffixes_and_foreign_records_are_tolerated() {
        let text = octahedron_obj().replace("f 1 3 5", "f 1/1/1 3/3/3 5/5/5") + "vn 0 0 1\n# c\n";
        let mesh = parse_obj(Cursor::new(text), Path::new("oct.obj")).unwrap();
        assert_eq!(mesh.faces.len(), 8);
    }
}
