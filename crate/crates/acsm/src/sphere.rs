//! Spherical surface parametrization: the map from the unit square to the
//! template surface, realized through a deformed spherical embedding with an
//! identity face bijection.
//!
//! The square-to-sphere leg is the Lambert equal-area cylindrical map
//! (azimuth = 2π·u1, z = 1 − 2·u2), so uniform samples in the square are
//! uniform on the sphere.

use std::io::{BufRead, Write};
use std::path::Path;

use nalgebra::{Point3, Unit, Vector3};

use crate::error::{Error, Result};
use crate::mesh::TemplateMesh;

pub const UNIT_NORM_TOL: f64 = 1e-9;

/// Canonical 2D coordinate in the unit square.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceCoord {
    pub u: [f64; 2],
}

impl SurfaceCoord {
    /// Wraps both components into [0, 1).
    pub fn new(u1: f64, u2: f64) -> Self {
        SurfaceCoord {
            u: [u1.rem_euclid(1.0), u2.rem_euclid(1.0)],
        }
    }
}

/// A point on the template surface: face index plus barycentric coordinates.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct SurfacePoint {
    pub face: usize,
    pub bary: [f64; 3],
}

impl SurfacePoint {
    pub fn is_valid(&self) -> bool {
        let s: f64 = self.bary.iter().sum();
        self.bary.iter().all(|&b| b >= -1e-9) && (s - 1.0).abs() <= 1e-9
    }

    /// Barycentric combination over the given triangle.
    pub fn interpolate(&self, tri: &[Point3<f64>; 3]) -> Point3<f64> {
        Point3::from(
            self.bary[0] * tri[0].coords
                + self.bary[1] * tri[1].coords
                + self.bary[2] * tri[2].coords,
        )
    }
}

/// Spherical embedding of a template: one unit vector per template vertex,
/// same connectivity, identity face bijection.
#[derive(Debug, Clone)]
pub struct SphereParam {
    pub sphere_vertices: Vec<Point3<f64>>,
}

impl SphereParam {
    pub fn face_points(&self, mesh: &TemplateMesh, face: usize) -> [Point3<f64>; 3] {
        let f = mesh.faces[face];
        [
            self.sphere_vertices[f[0]],
            self.sphere_vertices[f[1]],
            self.sphere_vertices[f[2]],
        ]
    }

    /// All vertices unit-norm within tolerance.
    pub fn check_unit_norm(&self) -> Result<()> {
        for (i, v) in self.sphere_vertices.iter().enumerate() {
            if (v.coords.norm() - 1.0).abs() > UNIT_NORM_TOL {
                return Err(Error::Degenerate(format!(
                    "sphere vertex {i} has norm {}",
                    v.coords.norm()
                )));
            }
        }
        Ok(())
    }

    /// Returns the first spherical face whose signed volume with the origin
    /// is non-positive (an inverted / inward-facing face), if any.
    pub fn first_inverted_face(&self, mesh: &TemplateMesh) -> Option<usize> {
        (0..mesh.faces.len()).find(|&fi| {
            let [a, b, c] = self.face_points(mesh, fi);
            a.coords.cross(&b.coords).dot(&c.coords) <= 0.0
        })
    }
}

/// Initial spherical embedding by centroid projection. Correct for
/// star-shaped templates; others are rejected with `InvertedFace`.
pub fn spherical_embed_init(mesh: &TemplateMesh) -> Result<SphereParam> {
    let centroid = mesh.centroid();
    let mut sphere_vertices = Vec::with_capacity(mesh.vertices.len());
    for (i, v) in mesh.vertices.iter().enumerate() {
        let d = v - centroid;
        let n = d.norm();
        if n < 1e-12 {
            return Err(Error::Degenerate(format!(
                "vertex {i} coincides with the mesh centroid"
            )));
        }
        sphere_vertices.push(Point3::from(d / n));
    }
    let param = SphereParam { sphere_vertices };
    if let Some(face) = param.first_inverted_face(mesh) {
        return Err(Error::InvertedFace { face });
    }
    Ok(param)
}

/// Optimizer used by [`equalize_areas`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AreaOptimizer {
    GradientDescent,
    Adam,
}

impl Default for AreaOptimizer {
    fn default() -> Self {
        AreaOptimizer::GradientDescent
    }
}

/// Log-area objective: Σ_f (log A_sphere(f) − log Â(f))², with Â the template
/// face areas rescaled so their total matches `sphere_total`.
pub fn log_area_objective(mesh: &TemplateMesh, param: &SphereParam, sphere_total: f64) -> f64 {
    let scale = sphere_total / mesh.total_area();
    (0..mesh.faces.len())
        .map(|fi| {
            let [a, b, c] = param.face_points(mesh, fi);
            let area = 0.5 * (b - a).cross(&(c - a)).norm();
            let target = mesh.face_area(fi) * scale;
            let r = area.ln() - target.ln();
            r * r
        })
        .sum()
}

fn sphere_total_area(mesh: &TemplateMesh, param: &SphereParam) -> f64 {
    (0..mesh.faces.len())
        .map(|fi| {
            let [a, b, c] = param.face_points(mesh, fi);
            0.5 * (b - a).cross(&(c - a)).norm()
        })
        .sum()
}

/// Deforms the spherical embedding so face areas match the template's
/// (rescaled) face areas, minimizing the squared log-area difference.
/// Vertices are re-projected to the unit sphere after every step. Gradient
/// descent steps backtrack (halving the rate) whenever a step would increase
/// the objective, so the objective is non-increasing across checkpoints.
pub fn equalize_areas(
    mesh: &TemplateMesh,
    init: &SphereParam,
    steps: usize,
    lr: f64,
    optimizer: AreaOptimizer,
) -> Result<SphereParam> {
    let mut param = init.clone();
    if steps == 0 {
        return Ok(param);
    }
    let sphere_total = sphere_total_area(mesh, &param);
    let scale = sphere_total / mesh.total_area();
    let targets: Vec<f64> = (0..mesh.faces.len())
        .map(|fi| (mesh.face_area(fi) * scale).ln())
        .collect();

    let n = param.sphere_vertices.len();
    let mut m1 = vec![Vector3::<f64>::zeros(); n];
    let mut m2 = vec![Vector3::<f64>::zeros(); n];
    let (beta1, beta2, eps) = (0.9, 0.999, 1e-8);

    let mut obj = log_area_objective(mesh, &param, sphere_total);
    for step in 0..steps {
        if obj.is_nan() {
            return Err(Error::NanObjective { step });
        }
        let mut grad = vec![Vector3::<f64>::zeros(); n];
        for (fi, f) in mesh.faces.iter().enumerate() {
            let [a, b, c] = param.face_points(mesh, fi);
            let normal = (b - a).cross(&(c - a));
            let area = 0.5 * normal.norm();
            if area <= 0.0 {
                return Err(Error::InvertedFace { face: fi });
            }
            let nhat = normal / normal.norm();
            let coeff = 2.0 * (area.ln() - targets[fi]) / area;
            // ∇A w.r.t. each corner: half the unit normal crossed with the
            // opposite edge.
            grad[f[0]] += coeff * 0.5 * nhat.cross(&(c - b));
            grad[f[1]] += coeff * 0.5 * nhat.cross(&(a - c));
            grad[f[2]] += coeff * 0.5 * nhat.cross(&(b - a));
        }

        match optimizer {
            AreaOptimizer::GradientDescent => {
                let mut rate = lr;
                let mut accepted = false;
                for _ in 0..40 {
                    let mut trial = param.clone();
                    for (v, g) in trial.sphere_vertices.iter_mut().zip(&grad) {
                        *v = Point3::from((v.coords - rate * g).normalize());
                    }
                    let trial_obj = log_area_objective(mesh, &trial, sphere_total);
                    if trial_obj.is_nan() {
                        return Err(Error::NanObjective { step });
                    }
                    if trial_obj <= obj {
                        param = trial;
                        obj = trial_obj;
                        accepted = true;
                        break;
                    }
                    rate *= 0.5;
                }
                if !accepted {
                    break; // local minimum at gradient resolution
                }
            }
            AreaOptimizer::Adam => {
                let t = (step + 1) as f64;
                let prev = param.clone();
                let prev_obj = obj;
                for i in 0..n {
                    m1[i] = beta1 * m1[i] + (1.0 - beta1) * grad[i];
                    m2[i] = beta2 * m2[i] + (1.0 - beta2) * grad[i].component_mul(&grad[i]);
                    let mh = m1[i] / (1.0 - beta1.powf(t));
                    let vh = m2[i] / (1.0 - beta2.powf(t));
                    let upd = Vector3::new(
                        mh.x / (vh.x.sqrt() + eps),
                        mh.y / (vh.y.sqrt() + eps),
                        mh.z / (vh.z.sqrt() + eps),
                    );
                    let v = &mut param.sphere_vertices[i];
                    *v = Point3::from((v.coords - lr * upd).normalize());
                }
                obj = log_area_objective(mesh, &param, sphere_total);
                if obj.is_nan() {
                    return Err(Error::NanObjective { step });
                }
                if obj > prev_obj {
                    // keep the monotone contract: reject the step and stop
                    param = prev;
                    obj = prev_obj;
                    break;
                }
            }
        }
    }

    if let Some(face) = param.first_inverted_face(mesh) {
        return Err(Error::InvertedFace { face });
    }
    Ok(param)
}

/// Square-to-sphere leg of φ: u to a unit direction.
pub fn square_to_sphere(u: SurfaceCoord) -> Unit<Vector3<f64>> {
    let azimuth = 2.0 * std::f64::consts::PI * u.u[0];
    let z = 1.0 - 2.0 * u.u[1];
    let r = (1.0 - z * z).max(0.0).sqrt();
    Unit::new_unchecked(Vector3::new(r * azimuth.cos(), r * azimuth.sin(), z))
}

/// Sphere-to-square leg: unit direction back to u.
pub fn sphere_to_square(d: &Vector3<f64>) -> SurfaceCoord {
    let u1 = (d.y.atan2(d.x) / (2.0 * std::f64::consts::PI)).rem_euclid(1.0);
    let u2 = ((1.0 - d.z) / 2.0).clamp(0.0, 1.0 - f64::EPSILON);
    SurfaceCoord { u: [u1, u2] }
}

/// The parametrization φ: maps u through the sphere onto the template
/// surface. Returns the surface point (face + barycentrics of the ray hit in
/// the spherical face) and the corresponding template-space 3D point.
///
/// Face lookup is a deterministic brute-force scan: the face maximizing the
/// minimum barycentric coordinate of its ray intersection wins, ties to the
/// lowest face index.
pub fn phi(
    param: &SphereParam,
    mesh: &TemplateMesh,
    u: SurfaceCoord,
) -> Result<(SurfacePoint, Point3<f64>)> {
    let dir = square_to_sphere(u);
    let sp = locate_direction(param, mesh, &dir).ok_or(Error::NoFaceHit(u.u[0], u.u[1]))?;
    let point = sp.interpolate(&mesh.face_points(sp.face));
    Ok((sp, point))
}

/// Finds the spherical face pierced by the ray from the origin along `dir`.
pub fn locate_direction(
    param: &SphereParam,
    mesh: &TemplateMesh,
    dir: &Vector3<f64>,
) -> Option<SurfacePoint> {
    let mut best: Option<(f64, SurfacePoint)> = None;
    for fi in 0..mesh.faces.len() {
        let [a, b, c] = param.face_points(mesh, fi);
        if let Some(bary) = ray_triangle_bary(dir, &a, &b, &c) {
            let min_b = bary[0].min(bary[1]).min(bary[2]);
            if min_b >= -1e-7 {
                match &best {
                    Some((best_min, _)) if *best_min >= min_b => {}
                    _ => best = Some((min_b, SurfacePoint { face: fi, bary })),
                }
            }
        }
    }
    best.map(|(_, sp)| sp)
}

/// Barycentrics of the intersection of the ray (origin, dir) with the plane
/// of triangle (a, b, c); `None` if the ray is parallel or hits behind the
/// origin.
fn ray_triangle_bary(
    dir: &Vector3<f64>,
    a: &Point3<f64>,
    b: &Point3<f64>,
    c: &Point3<f64>,
) -> Option<[f64; 3]> {
    let e1 = b - a;
    let e2 = c - a;
    let p = dir.cross(&e2);
    let det = e1.dot(&p);
    if det.abs() < 1e-14 {
        return None;
    }
    let inv = 1.0 / det;
    let s = -a.coords; // origin - a
    let b1 = s.dot(&p) * inv;
    let q = s.cross(&e1);
    let b2 = dir.dot(&q) * inv;
    let t = e2.dot(&q) * inv;
    if t <= 0.0 {
        return None;
    }
    Some([1.0 - b1 - b2, b1, b2])
}

/// Inverse of φ on surface points: interpolates the spherical position of
/// `sp`, projects it back to the sphere, and converts to u.
pub fn inverse_param(param: &SphereParam, mesh: &TemplateMesh, sp: &SurfacePoint) -> SurfaceCoord {
    let p = sp.interpolate(&param.face_points(mesh, sp.face));
    let d = p.coords.normalize();
    sphere_to_square(&d)
}

/// Sidecar format: header `ACSM-SPHERE 1`, one `x y z` line per vertex.
pub fn write_sphere_param(path: impl AsRef<Path>, param: &SphereParam) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from("ACSM-SPHERE 1\n");
    for v in &param.sphere_vertices {
        out.push_str(&format!("{} {} {}\n", v.x, v.y, v.z));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_sphere_param(path: impl AsRef<Path>) -> Result<SphereParam> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_sphere_param(std::io::BufReader::new(file), path)
}

pub fn parse_sphere_param(reader: impl BufRead, path: &Path) -> Result<SphereParam> {
    let mut lines = reader.lines().enumerate();
    let header = match lines.next() {
        Some((_, Ok(line))) => line,
        Some((_, Err(e))) => return Err(Error::io(path, e)),
        None => {
            return Err(Error::Format {
                path: path.into(),
                msg: "empty file".into(),
            })
        }
    };
    if header.trim() != "ACSM-SPHERE 1" {
        return Err(Error::Format {
            path: path.into(),
            msg: format!("bad header {header:?}"),
        });
    }
    let mut sphere_vertices = Vec::new();
    for (lineno, line) in lines {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let mut coords = [0.0f64; 3];
        for c in coords.iter_mut() {
            let tok = it.next().ok_or_else(|| Error::Parse {
                path: path.into(),
                line: lineno + 1,
                msg: "expected 3 coordinates".into(),
            })?;
            *c = tok.parse().map_err(|_| Error::Parse {
                path: path.into(),
                line: lineno + 1,
                msg: format!("bad coordinate {tok:?}"),
            })?;
        }
        sphere_vertices.push(Point3::new(coords[0], coords[1], coords[2]));
    }
    let param = SphereParam { sphere_vertices };
    param.check_unit_norm()?;
    Ok(param)
}

/// Writes a sphere param plus metadata sidecar (the optimizer choice and
/// objective trace are recorded by the CLI manifest instead).
#[cfg(test)]
mod tests {
    use super::*;
    use crate::template::{example_quadruped, octahedron};
    use rand::Rng;
    use rand::SeedableRng;

    fn oct_param() -> (TemplateMesh, SphereParam) {
        let mesh = octahedron();
        let param = spherical_embed_init(&mesh).unwrap();
        (mesh, param)
    }

    #[test]
    fn octahedron_init_is_identity() {
        let (mesh, param) = oct_param();
        for (v, s) in mesh.vertices.iter().zip(&param.sphere_vertices) {
            assert!((v - s).norm() < 1e-12);
        }
    }

    #[test]
    fn scaled_octahedron_projects_to_same_sphere() {
        let mesh = octahedron();
        let scaled = TemplateMesh::new(
            mesh.vertices.iter().map(|v| v * 3.0).collect(),
            mesh.faces.clone(),
        )
        .unwrap();
        let a = spherical_embed_init(&mesh).unwrap();
        let b = spherical_embed_init(&scaled).unwrap();
        for (x, y) in a.sphere_vertices.iter().zip(&b.sphere_vertices) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn elongated_template_init_is_unit_norm() {
        let mesh = example_quadruped();
        let param = spherical_embed_init(&mesh).unwrap();
        param.check_unit_norm().unwrap();
    }

    #[test]
    fn already_equalized_octahedron_is_fixed_point() {
        let (mesh, param) = oct_param();
        let before = log_area_objective(&mesh, &param, sphere_total_area(&mesh, &param));
        assert!(before < 1e-20);
        let out = equalize_areas(&mesh, &param, 500, 1e-2, AreaOptimizer::GradientDescent).unwrap();
        for (a, b) in param.sphere_vertices.iter().zip(&out.sphere_vertices) {
            assert!((a - b).norm() < 1e-6);
        }
    }

    #[test]
    fn zero_steps_is_identity() {
        let (mesh, param) = oct_param();
        let out = equalize_areas(&mesh, &param, 0, 1e-2, AreaOptimizer::GradientDescent).unwrap();
        for (a, b) in param.sphere_vertices.iter().zip(&out.sphere_vertices) {
            assert_eq!(a, b);
        }
    }

    /// Independent area routine for the oracle side of the before/after check.
    fn brute_objective(mesh: &TemplateMesh, param: &SphereParam) -> f64 {
        let heron = |p: &[Point3<f64>; 3]| {
            let (a, b, c) = (
                (p[1] - p[0]).norm(),
                (p[2] - p[1]).norm(),
                (p[0] - p[2]).norm(),
            );
            let s = 0.5 * (a + b + c);
            (s * (s - a) * (s - b) * (s - c)).max(0.0).sqrt()
        };
        let sphere_total: f64 = (0..mesh.faces.len())
            .map(|f| heron(&param.face_points(mesh, f)))
            .sum();
        let tmpl_total: f64 = (0..mesh.faces.len())
            .map(|f| heron(&mesh.face_points(f)))
            .sum();
        (0..mesh.faces.len())
            .map(|f| {
                let r = heron(&param.face_points(mesh, f)).ln()
                    - (heron(&mesh.face_points(f)) * sphere_total / tmpl_total).ln();
                r * r
            })
            .sum()
    }

    #[test]
    fn perturbed_octahedron_objective_halves() {
        let mesh = octahedron();
        let mut init = spherical_embed_init(&mesh).unwrap();
        // pull one vertex toward a neighbor, stay on the sphere
        let towards = (init.sphere_vertices[0].coords * 0.4 + init.sphere_vertices[2].coords * 0.6)
            .normalize();
        init.sphere_vertices[0] = Point3::from(towards);
        let before = brute_objective(&mesh, &init);
        assert!(before > 1e-3);
        let out = equalize_areas(&mesh, &init, 500, 1e-2, AreaOptimizer::GradientDescent).unwrap();
        let after = brute_objective(&mesh, &out);
        assert!(
            after < 0.5 * before,
            "objective only went {before} -> {after}"
        );
        out.check_unit_norm().unwrap();
    }

    #[test]
    fn adam_optimizer_also_reduces_objective() {
        let mesh = example_quadruped();
        let init = spherical_embed_init(&mesh).unwrap();
        let total = sphere_total_area(&mesh, &init);
        let before = log_area_objective(&mesh, &init, total);
        let out = equalize_areas(&mesh, &init, 50, 1e-2, AreaOptimizer::Adam).unwrap();
        let after = log_area_objective(&mesh, &out, total);
        assert!(after < before);
    }

    #[test]
    fn phi_pole_and_equator() {
        let (mesh, param) = oct_param();
        let (_, p) = phi(&param, &mesh, SurfaceCoord { u: [0.0, 0.0] }).unwrap();
        assert!((p - Point3::new(0.0, 0.0, 1.0)).coords.norm() < 1e-9);
        let d = square_to_sphere(SurfaceCoord { u: [0.25, 0.5] });
        assert!((d.into_inner() - Vector3::new(0.0, 1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn phi_point_lies_in_returned_face_plane() {
        let (mesh, param) = oct_param();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let u = SurfaceCoord::new(rng.gen::<f64>(), rng.gen::<f64>());
            let (sp, p) = phi(&param, &mesh, u).unwrap();
            assert!(sp.is_valid() || sp.bary.iter().all(|&b| b >= -1e-7));
            // brute-force oracle: p must lie on the plane of the returned face
            let [a, b, c] = mesh.face_points(sp.face);
            let n = (b - a).cross(&(c - a)).normalize();
            assert!(n.dot(&(p - a)).abs() < 1e-9);
        }
    }

    #[test]
    fn inverse_of_known_points() {
        let u = sphere_to_square(&Vector3::new(0.0, -1.0, 0.0));
        assert!((u.u[0] - 0.75).abs() < 1e-12);
        assert!((u.u[1] - 0.5).abs() < 1e-12);
        // north pole vertex
        let u = sphere_to_square(&Vector3::new(0.0, 0.0, 1.0));
        assert!(u.u[1].abs() < 1e-12);
    }

    #[test]
    fn round_trip_u_identity() {
        let (mesh, param) = oct_param();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mut checked = 0;
        while checked < 1000 {
            let u = SurfaceCoord::new(rng.gen::<f64>(), rng.gen::<f64>());
            // stay away from poles; edges of faces are fine for u round-trips
            if u.u[1] < 1e-3 || u.u[1] > 1.0 - 1e-3 {
                continue;
            }
            let (sp, _) = phi(&param, &mesh, u).unwrap();
            let back = inverse_param(&param, &mesh, &sp);
            assert!(
                (back.u[0] - u.u[0]).abs() < 1e-6 && (back.u[1] - u.u[1]).abs() < 1e-6,
                "round trip {:?} -> {:?}",
                u,
                back
            );
            checked += 1;
        }
    }

    #[test]
    fn sidecar_round_trip() {
        let (mesh, param) = oct_param();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.txt");
        write_sphere_param(&path, &param).unwrap();
        let back = read_sphere_param(&path).unwrap();
        for (a, b) in param.sphere_vertices.iter().zip(&back.sphere_vertices) {
            assert_eq!(a, b);
        }
        // write ∘ read ∘ write is bytewise idempotent
        let bytes1 = std::fs::read(&path).unwrap();
        let path2 = dir.path().join("s2.txt");
        write_sphere_param(&path2, &back).unwrap();
        assert_eq!(bytes1, std::fs::read(&path2).unwrap());
        let _ = mesh;
    }

    #[test]
    fn sidecar_bad_header_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.txt");
        std::fs::write(&path, "NOT-A-SPHERE\n0 0 1\n").unwrap();
        assert!(matches!(
            read_sphere_param(&path),
            Err(Error::Format { .. })
        ));
    }
}
