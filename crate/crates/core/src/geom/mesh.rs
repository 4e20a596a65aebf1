//! Triangle meshes: OBJ subset I/O, normals and quadric-fit shape operators.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use nalgebra::{DMatrix, DVector, Vector3};

use super::chart::{assemble_point, SurfacePoint};
use crate::error::{LabError, Result};

/// Minimum number of 2-ring neighbours for a well-posed quadric fit.
pub const MIN_FIT_NEIGHBORS: usize = 6;

#[derive(Clone, Debug)]
pub struct MeshPatch {
    pub vertices: Vec<Vector3<f64>>,
    pub faces: Vec<[usize; 3]>,
    /// Vertex lies on a boundary edge.
    pub boundary: Vec<bool>,
    /// One-ring adjacency, sorted.
    pub neighbors: Vec<Vec<usize>>,
    /// Unit normals, inward for outward-wound closed meshes.
    pub normals: Vec<Vector3<f64>>,
}

/// Curvature estimate at one mesh vertex.
#[derive(Clone, Debug)]
pub struct MeshShape {
    pub vertex: usize,
    pub point: SurfacePoint,
    pub boundary: bool,
    pub underdetermined: bool,
    pub ring_size: usize,
}

/// Parses `v x y z` and `f i j k` records (1-based, `#` comments). Face
/// entries of the form `i/t/n` keep the vertex index.
pub fn parse_obj(text: &str) -> Result<MeshPatch> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let tag = parts.next().unwrap_or("");
        let bad = |what: &str| LabError::Mesh(format!("line {}: {what}", lineno + 1));
        match tag {
            "v" => {
                let xyz: Vec<f64> = parts
                    .take(3)
                    .map(|p| p.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| bad("malformed vertex"))?;
                if xyz.len() != 3 || xyz.iter().any(|v| !v.is_finite()) {
                    return Err(bad("vertex needs three finite coordinates"));
                }
                vertices.push(Vector3::new(xyz[0], xyz[1], xyz[2]));
            }
            "f" => {
                let idx: Vec<usize> = parts
                    .map(|p| p.split('/').next().unwrap_or("").parse::<usize>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| bad("malformed face"))?;
                if idx.len() != 3 {
                    return Err(bad("only triangles are supported"));
                }
                if idx.contains(&0) {
                    return Err(bad("indices are 1-based"));
                }
                faces.push([idx[0] - 1, idx[1] - 1, idx[2] - 1]);
            }
            _ => {}
        }
    }
    MeshPatch::new(vertices, faces)
}

pub fn mesh_load(path: &Path) -> Result<MeshPatch> {
    let text = std::fs::read_to_string(path).map_err(|e| LabError::Io(format!("{}: {e}", path.display())))?;
    parse_obj(&text)
}

pub fn write_obj(mesh: &MeshPatch) -> String {
    let mut out = String::new();
    for v in &mesh.vertices {
        out.push_str(&format!("v {} {} {}\n", v.x, v.y, v.z));
    }
    for f in &mesh.faces {
        out.push_str(&format!("f {} {} {}\n", f[0] + 1, f[1] + 1, f[2] + 1));
    }
    out
}

impl MeshPatch {
    pub fn new(vertices: Vec<Vector3<f64>>, faces: Vec<[usize; 3]>) -> Result<Self> {
        let n = vertices.len();
        let mut edge_faces: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for f in &faces {
            if f.iter().any(|&i| i >= n) {
                return Err(LabError::Mesh(format!("face {f:?} references a missing vertex")));
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(LabError::Mesh(format!("degenerate face {f:?}")));
            }
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                *edge_faces.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        let bad: Vec<(usize, usize)> = edge_faces
            .iter()
            .filter(|(_, &c)| c > 2)
            .map(|(&(a, b), _)| (a + 1, b + 1))
            .collect();
        if !bad.is_empty() {
            return Err(LabError::Mesh(format!("non-manifold edges (1-based): {bad:?}")));
        }
        let mut boundary = vec![false; n];
        let mut sets = vec![BTreeSet::new(); n];
        for (&(a, b), &count) in &edge_faces {
            if count == 1 {
                boundary[a] = true;
                boundary[b] = true;
            }
            sets[a].insert(b);
            sets[b].insert(a);
        }
        let mut normals = vec![Vector3::zeros(); n];
        for f in &faces {
            let (a, b, c) = (vertices[f[0]], vertices[f[1]], vertices[f[2]]);
            // Cross product length is twice the area: area weighting for free.
            let w = (b - a).cross(&(c - a));
            for &i in f {
                normals[i] -= w;
            }
        }
        for nv in normals.iter_mut() {
            let len = nv.norm();
            if len > 0.0 {
                *nv /= len;
            }
        }
        Ok(Self {
            vertices,
            faces,
            boundary,
            neighbors: sets.into_iter().map(|s| s.into_iter().collect()).collect(),
            normals,
        })
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Vertices within two edges of `v`, excluding `v`.
    pub fn two_ring(&self, v: usize) -> Vec<usize> {
        let mut set = BTreeSet::new();
        for &a in &self.neighbors[v] {
            set.insert(a);
            for &b in &self.neighbors[a] {
                set.insert(b);
            }
        }
        set.remove(&v);
        set.into_iter().collect()
    }

    /// Mean edge length.
    pub fn mean_edge(&self) -> f64 {
        let (mut sum, mut count) = (0.0, 0usize);
        for (a, ns) in self.neighbors.iter().enumerate() {
            for &b in ns.iter().filter(|&&b| b > a) {
                sum += (self.vertices[a] - self.vertices[b]).norm();
                count += 1;
            }
        }
        if count == 0 {
            0.0
        } else {
            sum / count as f64
        }
    }
}

/// Fits `h = a x² + b x y + c y² + d x + e y` over the 2-ring in the tangent
/// frame of the vertex normal and returns the shape operator of the fit at
/// the vertex.
pub fn mesh_shape(mesh: &MeshPatch, v: usize) -> Result<MeshShape> {
    if v >= mesh.len() {
        return Err(LabError::Argument(format!("vertex {v} out of range")));
    }
    let n = mesh.normals[v];
    if n.norm() == 0.0 {
        return Err(LabError::Mesh(format!("vertex {v} has no incident faces")));
    }
    let helper = if n.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let t1 = (helper - n * n.dot(&helper)).normalize();
    let t2 = n.cross(&t1);
    let ring = mesh.two_ring(v);
    let p0 = mesh.vertices[v];
    let rows = ring.len();
    let mut design = DMatrix::zeros(rows.max(5), 5);
    let mut rhs = DVector::zeros(rows.max(5));
    for (k, &q) in ring.iter().enumerate() {
        let d = mesh.vertices[q] - p0;
        let (x, y, h) = (d.dot(&t1), d.dot(&t2), d.dot(&n));
        design.set_row(k, &nalgebra::RowDVector::from_row_slice(&[x * x, x * y, y * y, x, y]));
        rhs[k] = h;
    }
    let svd = design.svd(true, true);
    let coef = svd
        .solve(&rhs, 1e-12)
        .map_err(|e| LabError::Mesh(format!("quadric fit at vertex {v}: {e}")))?;
    let (a, b, c, d, e) = (coef[0], coef[1], coef[2], coef[3], coef[4]);
    let first = DMatrix::from_row_slice(2, 2, &[1.0 + d * d, d * e, d * e, 1.0 + e * e]);
    let w = (1.0 + d * d + e * e).sqrt();
    let second = DMatrix::from_row_slice(2, 2, &[2.0 * a, b, b, 2.0 * c]) / w;
    let to_dv = |x: Vector3<f64>| DVector::from_column_slice(x.as_slice());
    let tangents = vec![to_dv(t1 + n * d), to_dv(t2 + n * e)];
    let normal = (n - t1 * d - t2 * e) / w;
    let point = assemble_point(&[0.0, 0.0], to_dv(p0), to_dv(normal), tangents, first, second)?;
    Ok(MeshShape {
        vertex: v,
        point,
        boundary: mesh.boundary[v],
        underdetermined: rows < MIN_FIT_NEIGHBORS,
        ring_size: rows,
    })
}

/// Icosahedron subdivided `level` times and projected to the sphere,
/// wound counter-clockwise seen from outside.
pub fn icosphere(radius: f64, level: usize) -> MeshPatch {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<Vector3<f64>> = [
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
    ]
    .iter()
    .map(|p| Vector3::new(p[0], p[1], p[2]).normalize())
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
        let mut cache: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut mid = |a: usize, b: usize, verts: &mut Vec<Vector3<f64>>| {
            *cache.entry((a.min(b), a.max(b))).or_insert_with(|| {
                verts.push(((verts[a] + verts[b]) * 0.5).normalize());
                verts.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for f in &faces {
            let ab = mid(f[0], f[1], &mut verts);
            let bc = mid(f[1], f[2], &mut verts);
            let ca = mid(f[2], f[0], &mut verts);
            next.extend([[f[0], ab, ca], [f[1], bc, ab], [f[2], ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    let verts = verts.into_iter().map(|v| v * radius).collect();
    MeshPatch::new(verts, faces).expect("icosphere is a closed manifold")
}

/// Triangulated square `[−size/2, size/2]²` in the plane `z = 0`.
pub fn square_grid(n: usize, size: f64) -> MeshPatch {
    let idx = |i: usize, j: usize| i * (n + 1) + j;
    let h = size / n as f64;
    let mut verts = Vec::new();
    for i in 0..=n {
        for j in 0..=n {
            verts.push(Vector3::new(-0.5 * size + j as f64 * h, -0.5 * size + i as f64 * h, 0.0));
        }
    }
    let mut faces = Vec::new();
    for i in 0..n {
        for j in 0..n {
            // Clockwise from above so that normals point up (+z).
            faces.push([idx(i, j), idx(i + 1, j), idx(i, j + 1)]);
            faces.push([idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1)]);
        }
    }
    MeshPatch::new(verts, faces).expect("grid is a manifold")
}

/// Open tube `x² + y² = radius²`, `|z| ≤ height/2`, wound outward.
pub fn cylinder_tube(radius: f64, n_theta: usize, n_z: usize, height: f64) -> MeshPatch {
    let idx = |i: usize, j: usize| i * n_theta + (j % n_theta);
    let mut verts = Vec::new();
    for i in 0..=n_z {
        let z = -0.5 * height + height * i as f64 / n_z as f64;
        for j in 0..n_theta {
            let a = 2.0 * std::f64::consts::PI * j as f64 / n_theta as f64;
            verts.push(Vector3::new(radius * a.cos(), radius * a.sin(), z));
        }
    }
    let mut faces = Vec::new();
    for i in 0..n_z {
        for j in 0..n_theta {
            faces.push([idx(i, j), idx(i, j + 1), idx(i + 1, j)]);
            faces.push([idx(i + 1, j), idx(i, j + 1), idx(i + 1, j + 1)]);
        }
    }
    MeshPatch::new(verts, faces).expect("tube is a manifold")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn interior_mean(mesh: &MeshPatch) -> (Vec<f64>, usize) {
        let mut sum = vec![0.0; 2];
        let mut count = 0;
        for v in 0..mesh.len() {
            let s = mesh_shape(mesh, v).unwrap();
            if s.boundary {
                continue;
            }
            for (acc, l) in sum.iter_mut().zip(s.point.spectrum.lambdas()) {
                *acc += l;
            }
            count += 1;
        }
        (sum.into_iter().map(|s| s / count as f64).collect(), count)
    }

    #[test]
    fn icosphere_curvature_is_near_one() {
        let mesh = icosphere(1.0, 4);
        let (mean, _) = interior_mean(&mesh);
        for l in mean {
            assert!((l - 1.0).abs() < 0.05, "{l}");
        }
    }

    #[test]
    fn icosphere_error_decreases_with_refinement() {
        let err = |level| {
            let mesh = icosphere(1.0, level);
            (0..mesh.len())
                .map(|v| {
                    let s = mesh_shape(&mesh, v).unwrap();
                    s.point.spectrum.lambdas().iter().map(|l| (l - 1.0).abs()).fold(0.0, f64::max)
                })
                .fold(0.0, f64::max)
        };
        let (e2, e3) = (err(2), err(3));
        assert!(e3 < e2, "{e2} {e3}");
        assert!((e2 / e3).log2() >= 1.0, "observed order {}", (e2 / e3).log2());
    }

    #[test]
    fn flat_grid_has_zero_curvature() {
        let mesh = square_grid(8, 2.0);
        for v in 0..mesh.len() {
            let s = mesh_shape(&mesh, v).unwrap();
            assert!(s.point.spectrum.lambdas().iter().all(|l| l.abs() <= 1e-8));
        }
        assert!(mesh.boundary[0] && !mesh.boundary[4 * 9 + 4]);
    }

    #[test]
    fn tube_matches_cylinder() {
        let mesh = cylinder_tube(1.0, 48, 24, 4.0);
        let (mean, count) = interior_mean(&mesh);
        assert!(count > 0);
        assert!((mean[0] - 1.0).abs() < 0.05 && mean[1].abs() < 0.05, "{mean:?}");
    }

    #[test]
    fn obj_round_trip_and_errors() {
        let mesh = icosphere(2.0, 1);
        let back = parse_obj(&write_obj(&mesh)).unwrap();
        assert_eq!(back.faces, mesh.faces);
        assert!((back.vertices[3] - mesh.vertices[3]).norm() < 1e-12);

        let text = "# fan\nv 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 0 1\nv 0 -1 0\nf 1 2 3\nf 1 2 4\nf 1 2 5\n";
        let err = parse_obj(text).unwrap_err().to_string();
        assert!(err.contains("(1, 2)"), "{err}");
        assert!(parse_obj("v 0 0\n").is_err());
        assert!(parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3 4\n").is_err());
    }

    #[test]
    fn small_rings_are_flagged() {
        let mesh = parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nv 1 1 0.1\nf 1 2 3\nf 2 4 3\n").unwrap();
        let s = mesh_shape(&mesh, 0).unwrap();
        assert!(s.underdetermined && s.boundary);
    }
}
