//! Procedural example templates: icospheres, an octahedron, and a rigged
//! quadruped used by the test and evaluation suites.

use std::collections::HashMap;

use nalgebra::{Point3, Vector3};

use crate::mesh::TemplateMesh;
use crate::rig::{PartDef, PartRig};

/// Unit octahedron centered at the origin, outward winding.
pub fn octahedron() -> TemplateMesh {
    let vertices = vec![
        Point3::new(1.0, 0.0, 0.0),
        Point3::new(-1.0, 0.0, 0.0),
        Point3::new(0.0, 1.0, 0.0),
        Point3::new(0.0, -1.0, 0.0),
        Point3::new(0.0, 0.0, 1.0),
        Point3::new(0.0, 0.0, -1.0),
    ];
    let faces = vec![
        [0, 2, 4],
        [2, 1, 4],
        [1, 3, 4],
        [3, 0, 4],
        [2, 0, 5],
        [1, 2, 5],
        [3, 1, 5],
        [0, 3, 5],
    ];
    TemplateMesh::new(vertices, faces).expect("octahedron is valid")
}

/// Icosphere: icosahedron subdivided `level` times, vertices on the unit
/// sphere. Level 3 gives 642 vertices / 1280 faces, the reference template
/// size.
pub fn icosphere(level: usize) -> TemplateMesh {
    let phi = (1.0 + 5.0f64.sqrt()) / 2.0;
    let mut vertices: Vec<Point3<f64>> = [
        (-1.0, phi, 0.0),
        (1.0, phi, 0.0),
        (-1.0, -phi, 0.0),
        (1.0, -phi, 0.0),
        (0.0, -1.0, phi),
        (0.0, 1.0, phi),
        (0.0, -1.0, -phi),
        (0.0, 1.0, -phi),
        (phi, 0.0, -1.0),
        (phi, 0.0, 1.0),
        (-phi, 0.0, -1.0),
        (-phi, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Point3::from(Vector3::new(x, y, z).normalize()))
    .collect();

    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];

    for _ in 0..level {
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next = Vec::with_capacity(faces.len() * 4);
        for f in &faces {
            let mut mid = [0usize; 3];
            for (i, (a, b)) in [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])].iter().enumerate() {
                let key = (*a.min(b), *a.max(b));
                mid[i] = *midpoint.entry(key).or_insert_with(|| {
                    let m = (vertices[*a].coords + vertices[*b].coords).normalize();
                    vertices.push(Point3::from(m));
                    vertices.len() - 1
                });
            }
            next.push([f[0], mid[0], mid[2]]);
            next.push([f[1], mid[1], mid[0]]);
            next.push([f[2], mid[2], mid[1]]);
            next.push([mid[0], mid[1], mid[2]]);
        }
        faces = next;
    }

    TemplateMesh::new(vertices, faces).expect("icosphere is valid")
}

/// Quadruped-like example template at the reference size (642 v / 1280 f):
/// a level-3 icosphere warped into an elongated body. The warp is radial in
/// x and a smooth bulge toward the head, keeping the shape star-shaped so
/// centroid projection yields a valid spherical embedding.
pub fn example_quadruped() -> TemplateMesh {
    let sphere = icosphere(3);
    let vertices = sphere
        .vertices
        .iter()
        .map(|p| {
            let head_bulge = 1.0 + 0.25 * (1.0 + (3.0 * (p.x - 0.6)).tanh());
            Point3::new(1.6 * p.x, 0.75 * p.y * head_bulge.min(1.3), 0.75 * p.z)
        })
        .collect();
    TemplateMesh::new(vertices, sphere.faces).expect("quadruped template is valid")
}

/// Seven-part rig for [`example_quadruped`]: torso, neck, head, and four legs
/// carved out of the body by coordinate thresholds. Pivots default to the
/// weighted part centroids; axes chosen per part function (legs swing about
/// z, neck/head nod about z, torso roots the tree).
pub fn example_quadruped_rig(mesh: &TemplateMesh) -> PartRig {
    let parts = vec![
        PartDef {
            name: "torso".into(),
            parent: None,
            axis: Vector3::new(1.0, 0.0, 0.0),
            pivot: None,
        },
        PartDef {
            name: "neck".into(),
            parent: Some(0),
            axis: Vector3::new(0.0, 0.0, 1.0),
            pivot: None,
        },
        PartDef {
            name: "head".into(),
            parent: Some(1),
            axis: Vector3::new(0.0, 0.0, 1.0),
            pivot: None,
        },
        PartDef {
            name: "leg_fl".into(),
            parent: Some(0),
            axis: Vector3::new(0.0, 0.0, 1.0),
            pivot: None,
        },
        PartDef {
            name: "leg_fr".into(),
            parent: Some(0),
            axis: Vector3::new(0.0, 0.0, 1.0),
            pivot: None,
        },
        PartDef {
            name: "leg_bl".into(),
            parent: Some(0),
            axis: Vector3::new(0.0, 0.0, 1.0),
            pivot: None,
        },
        PartDef {
            name: "leg_br".into(),
            parent: Some(0),
            axis: Vector3::new(0.0, 0.0, 1.0),
            pivot: None,
        },
    ];

    let labels = mesh
        .vertices
        .iter()
        .map(|p| {
            // +x is the head end, -y the belly
            if p.x > 1.1 {
                2 // head
            } else if p.x > 0.75 {
                1 // neck
            } else if p.y < -0.35 {
                match (p.x > 0.0, p.z > 0.0) {
                    (true, true) => 3,   // front left
                    (true, false) => 4,  // front right
                    (false, true) => 5,  // back left
                    (false, false) => 6, // back right
                }
            } else {
                0 // torso
            }
        })
        .collect();

    PartRig::from_hard_labels(mesh, parts, labels, 0.15).expect("example rig is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadruped_template_has_reference_size() {
        let mesh = example_quadruped();
        mesh.check_strict_size().unwrap();
    }

    #[test]
    fn quadruped_rig_covers_all_parts() {
        let mesh = example_quadruped();
        let rig = example_quadruped_rig(&mesh);
        assert_eq!(rig.part_count(), 7);
        for k in 0..7 {
            assert!(
                rig.weights.iter().any(|w| w[k] > 0.5),
                "part {k} has no dominant vertex"
            );
        }
    }
}
