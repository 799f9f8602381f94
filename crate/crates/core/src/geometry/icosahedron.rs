use std::collections::HashMap;

use super::vec3::{self, Vec3};
use super::{GeometryError, MAX_SUBDIVISION_LEVEL};

/// A subdivided icosahedron with all vertices on the unit sphere.
///
/// Level 0 is the regular icosahedron (12 vertices, 30 edges, 20 faces);
/// every subdivision round splits each triangle into four by edge midpoints,
/// re-normalized to the sphere. Faces keep a consistent outward (counter-
/// clockwise) winding.
#[derive(Debug, Clone)]
pub struct IcosahedronMesh {
    vertices: Vec<Vec3>,
    faces: Vec<[usize; 3]>,
    level: u32,
}

impl IcosahedronMesh {
    /// Builds the mesh at the given subdivision level.
    pub fn subdivide(level: u32) -> Result<Self, GeometryError> {
        if level > MAX_SUBDIVISION_LEVEL {
            return Err(GeometryError::Capacity {
                level,
                max: MAX_SUBDIVISION_LEVEL,
            });
        }
        let mut mesh = Self::base();
        for _ in 0..level {
            mesh = mesh.subdivide_once();
        }
        Ok(mesh)
    }

    /// The regular icosahedron from the golden-ratio vertex set, rotated so
    /// that the first vertex sits exactly on the north pole. The rotation
    /// makes layouts deterministic and aligned with the lat/lon grid.
    fn base() -> Self {
        let t = (1.0 + 5.0_f64.sqrt()) / 2.0;
        let raw: [Vec3; 12] = [
            [-1.0, t, 0.0],
            [1.0, t, 0.0],
            [-1.0, -t, 0.0],
            [1.0, -t, 0.0],
            [0.0, -1.0, t],
            [0.0, 1.0, t],
            [0.0, -1.0, -t],
            [0.0, 1.0, -t],
            [t, 0.0, -1.0],
            [t, 0.0, 1.0],
            [-t, 0.0, -1.0],
            [-t, 0.0, 1.0],
        ];
        let faces: Vec<[usize; 3]> = vec![
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

        let north = [0.0, 0.0, 1.0];
        let v0 = vec3::normalize(raw[0]);
        let axis = vec3::normalize(vec3::cross(v0, north));
        let angle = vec3::angle_between(v0, north);
        let vertices = raw
            .iter()
            .map(|&v| vec3::normalize(rotate_about_axis(vec3::normalize(v), axis, angle)))
            .collect();

        Self {
            vertices,
            faces,
            level: 0,
        }
    }

    /// One 4-way midpoint subdivision round. Midpoints are computed once per
    /// undirected edge, so shared edges share vertices exactly.
    fn subdivide_once(&self) -> Self {
        let mut vertices = self.vertices.clone();
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut faces = Vec::with_capacity(self.faces.len() * 4);

        let mut midpoint = |a: usize, b: usize, vertices: &mut Vec<Vec3>| -> usize {
            let key = (a.min(b), a.max(b));
            *midpoints.entry(key).or_insert_with(|| {
                let m = vec3::normalize(vec3::add(vertices[a], vertices[b]));
                vertices.push(m);
                vertices.len() - 1
            })
        };

        for &[a, b, c] in &self.faces {
            let ab = midpoint(a, b, &mut vertices);
            let bc = midpoint(b, c, &mut vertices);
            let ca = midpoint(c, a, &mut vertices);
            faces.push([a, ab, ca]);
            faces.push([b, bc, ab]);
            faces.push([c, ca, bc]);
            faces.push([ab, bc, ca]);
        }

        Self {
            vertices,
            faces,
            level: self.level + 1,
        }
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    /// Number of distinct undirected edges.
    pub fn edge_count(&self) -> usize {
        let mut edges = std::collections::HashSet::new();
        for &[a, b, c] in &self.faces {
            for (u, v) in [(a, b), (b, c), (c, a)] {
                edges.insert((u.min(v), u.max(v)));
            }
        }
        edges.len()
    }

    /// `V - E + F`; 2 for any closed sphere-topology mesh.
    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.edge_count() as i64 + self.faces.len() as i64
    }

    /// Face centroid projected onto the unit sphere.
    pub fn face_centroid(&self, face_index: usize) -> Vec3 {
        let [a, b, c] = self.faces[face_index];
        vec3::normalize(vec3::add(
            vec3::add(self.vertices[a], self.vertices[b]),
            self.vertices[c],
        ))
    }

    /// Solid angle of a face in steradians (Van Oosterom-Strackee formula).
    pub fn face_solid_angle(&self, face_index: usize) -> f64 {
        let [a, b, c] = self.faces[face_index];
        let (va, vb, vc) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        let triple = vec3::dot(va, vec3::cross(vb, vc));
        let denom = 1.0 + vec3::dot(va, vb) + vec3::dot(vb, vc) + vec3::dot(vc, va);
        2.0 * triple.abs().atan2(denom)
    }

    pub fn face_solid_angles(&self) -> Vec<f64> {
        (0..self.faces.len())
            .map(|i| self.face_solid_angle(i))
            .collect()
    }
}

/// Rodrigues rotation of `p` about a unit `axis` by `angle` radians.
fn rotate_about_axis(p: Vec3, axis: Vec3, angle: f64) -> Vec3 {
    let (sin_a, cos_a) = angle.sin_cos();
    let k_cross_p = vec3::cross(axis, p);
    let k_dot_p = vec3::dot(axis, p);
    vec3::add(
        vec3::add(vec3::scale(p, cos_a), vec3::scale(k_cross_p, sin_a)),
        vec3::scale(axis, k_dot_p * (1.0 - cos_a)),
    )
}
