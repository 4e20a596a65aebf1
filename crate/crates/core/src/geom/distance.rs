//! Intrinsic distance fields: closed form where known, otherwise Dijkstra
//! on a metric-weighted parameter grid or along mesh edges.

use petgraph::algo::dijkstra;
use petgraph::graph::{NodeIndex, UnGraph};

use super::catalog::Surface;
use super::chart::{Chart, ParamDomain};
use super::mesh::MeshPatch;
use crate::error::{LabError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistanceProvenance {
    Analytic,
    GridGraph,
    MeshGraph,
}

/// Regular grid over a parameter box. Periodic axes omit the duplicate end node.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamGrid {
    pub lo: Vec<f64>,
    pub step: Vec<f64>,
    pub counts: Vec<usize>,
    pub periodic: Vec<bool>,
}

impl ParamGrid {
    pub fn new(domain: &ParamDomain, resolution: usize) -> Result<Self> {
        if resolution < 2 {
            return Err(LabError::Argument("grid resolution must be at least 2".into()));
        }
        let m = domain.dim();
        let mut step = Vec::with_capacity(m);
        let mut counts = Vec::with_capacity(m);
        for k in 0..m {
            let width = domain.hi[k] - domain.lo[k];
            if !(width.is_finite() && width > 0.0) {
                return Err(LabError::Argument(format!("axis {k} of the parameter box is not a finite interval")));
            }
            step.push(width / resolution as f64);
            counts.push(if domain.periodic[k] { resolution } else { resolution + 1 });
        }
        Ok(Self {
            lo: domain.lo.clone(),
            step,
            counts,
            periodic: domain.periodic.clone(),
        })
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, multi: &[usize]) -> usize {
        multi.iter().zip(&self.counts).fold(0, |acc, (&i, &n)| acc * n + i)
    }

    pub fn multi(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.counts.len()];
        for k in (0..self.counts.len()).rev() {
            out[k] = idx % self.counts[k];
            idx /= self.counts[k];
        }
        out
    }

    pub fn param(&self, multi: &[usize]) -> Vec<f64> {
        multi
            .iter()
            .enumerate()
            .map(|(k, &i)| self.lo[k] + self.step[k] * i as f64)
            .collect()
    }

    /// Nearest node to a parameter.
    pub fn nearest(&self, u: &[f64]) -> Vec<usize> {
        u.iter()
            .enumerate()
            .map(|(k, &x)| {
                let pos = ((x - self.lo[k]) / self.step[k]).round();
                if self.periodic[k] {
                    pos.rem_euclid(self.counts[k] as f64) as usize
                } else {
                    pos.clamp(0.0, (self.counts[k] - 1) as f64) as usize
                }
            })
            .collect()
    }

    pub fn max_step(&self) -> f64 {
        self.step.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug)]
pub struct DistanceField {
    pub base: Vec<f64>,
    pub grid: ParamGrid,
    pub values: Vec<f64>,
    pub provenance: DistanceProvenance,
    exact: Option<Surface>,
}

impl DistanceField {
    /// Distance at a parameter: closed form in analytic mode, otherwise
    /// multilinear interpolation of the samples.
    pub fn at(&self, u: &[f64]) -> f64 {
        if let Some(d) = self.exact.as_ref().and_then(|s| s.intrinsic_distance(&self.base, u)) {
            return d;
        }
        let g = &self.grid;
        let m = u.len();
        let mut lower = Vec::with_capacity(m);
        let mut frac = Vec::with_capacity(m);
        for k in 0..m {
            let mut pos = (u[k] - g.lo[k]) / g.step[k];
            if g.periodic[k] {
                pos = pos.rem_euclid(g.counts[k] as f64);
            } else {
                pos = pos.clamp(0.0, (g.counts[k] - 1) as f64);
            }
            let i = (pos.floor() as usize).min(if g.periodic[k] { g.counts[k] - 1 } else { g.counts[k].saturating_sub(2) });
            lower.push(i);
            frac.push(pos - i as f64);
        }
        let mut acc = 0.0;
        for corner in 0..(1usize << m) {
            let mut w = 1.0;
            let mut idx = vec![0; m];
            for k in 0..m {
                let up = (corner >> k) & 1 == 1;
                w *= if up { frac[k] } else { 1.0 - frac[k] };
                let mut i = lower[k] + up as usize;
                if g.periodic[k] {
                    i %= g.counts[k];
                } else {
                    i = i.min(g.counts[k] - 1);
                }
                idx[k] = i;
            }
            if w != 0.0 {
                acc += w * self.values[g.index(&idx)];
            }
        }
        acc
    }
}

/// Distance from the global parameter `u0`, closed form when the catalog
/// provides one.
pub fn distance_field(surface: &Surface, u0: &[f64], resolution: usize, force_grid: bool) -> Result<DistanceField> {
    let chart = surface.chart()?;
    let grid = ParamGrid::new(&chart.domain, resolution)?;
    if !force_grid && surface.intrinsic_distance(u0, u0).is_some() {
        let values = (0..grid.len())
            .map(|i| surface.intrinsic_distance(u0, &grid.param(&grid.multi(i))).unwrap_or(f64::NAN))
            .collect();
        return Ok(DistanceField {
            base: u0.to_vec(),
            grid,
            values,
            provenance: DistanceProvenance::Analytic,
            exact: Some(surface.clone()),
        });
    }
    grid_distance(&chart, u0, resolution)
}

/// Dijkstra over the parameter grid with all `3^m − 1` neighbour offsets;
/// edge length `√(Δuᵀ I(mid) Δu)`. The base point snaps to the nearest node.
pub fn grid_distance(chart: &Chart, u0: &[f64], resolution: usize) -> Result<DistanceField> {
    let grid = ParamGrid::new(&chart.domain, resolution)?;
    let m = grid.counts.len();
    let mut graph: UnGraph<(), f64> = UnGraph::with_capacity(grid.len(), grid.len() * 3usize.pow(m as u32) / 2);
    let nodes: Vec<NodeIndex> = (0..grid.len()).map(|_| graph.add_node(())).collect();
    let offsets: Vec<Vec<i64>> = (0..3usize.pow(m as u32))
        .map(|code| (0..m).map(|k| (code / 3usize.pow(k as u32) % 3) as i64 - 1).collect::<Vec<i64>>())
        .filter(|o| o.iter().any(|&d| d != 0))
        // Each undirected edge once: first nonzero offset positive.
        .filter(|o| o.iter().find(|&&d| d != 0).copied() == Some(1))
        .collect();
    for idx in 0..grid.len() {
        let a = grid.multi(idx);
        let ua = grid.param(&a);
        'offsets: for o in &offsets {
            let mut b = vec![0usize; m];
            for k in 0..m {
                let j = a[k] as i64 + o[k];
                let n = grid.counts[k] as i64;
                b[k] = if grid.periodic[k] {
                    j.rem_euclid(n) as usize
                } else if j < 0 || j >= n {
                    continue 'offsets;
                } else {
                    j as usize
                };
            }
            let du: Vec<f64> = (0..m).map(|k| o[k] as f64 * grid.step[k]).collect();
            let mid: Vec<f64> = ua.iter().zip(&du).map(|(x, d)| x + 0.5 * d).collect();
            let metric = chart.first_form(&mid);
            let mut len2 = 0.0;
            for i in 0..m {
                for j in 0..m {
                    len2 += du[i] * metric[(i, j)] * du[j];
                }
            }
            let len = len2.max(0.0).sqrt();
            if !len.is_finite() {
                return Err(LabError::Mesh(format!("non-finite metric at {mid:?}")));
            }
            graph.add_edge(nodes[idx], nodes[grid.index(&b)], len);
        }
    }
    let start = grid.index(&grid.nearest(u0));
    let dist = dijkstra(&graph, nodes[start], None, |e| *e.weight());
    let values = (0..grid.len())
        .map(|i| dist.get(&nodes[i]).copied().unwrap_or(f64::INFINITY))
        .collect();
    Ok(DistanceField {
        base: grid.param(&grid.multi(start)),
        grid,
        values,
        provenance: DistanceProvenance::GridGraph,
        exact: None,
    })
}

/// Edge-graph distances from a mesh vertex.
pub fn mesh_distance(mesh: &MeshPatch, source: usize) -> Result<Vec<f64>> {
    if source >= mesh.len() {
        return Err(LabError::Argument(format!("vertex {source} out of range")));
    }
    let mut graph: UnGraph<(), f64> = UnGraph::with_capacity(mesh.len(), 3 * mesh.len());
    let nodes: Vec<NodeIndex> = (0..mesh.len()).map(|_| graph.add_node(())).collect();
    for (a, ns) in mesh.neighbors.iter().enumerate() {
        for &b in ns.iter().filter(|&&b| b > a) {
            graph.add_edge(nodes[a], nodes[b], (mesh.vertices[a] - mesh.vertices[b]).norm());
        }
    }
    let dist = dijkstra(&graph, nodes[source], None, |e| *e.weight());
    Ok((0..mesh.len())
        .map(|i| dist.get(&nodes[i]).copied().unwrap_or(f64::INFINITY))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::chart::HeightFn;
    use crate::geom::mesh::icosphere;
    use std::f64::consts::PI;

    #[test]
    fn plane_distance_is_euclidean() {
        let plane = Surface::Plane { m: 2, offset: 0.0 };
        let f = distance_field(&plane, &[0.0, 0.0], 10, false).unwrap();
        assert_eq!(f.provenance, DistanceProvenance::Analytic);
        assert!((f.at(&[3.0, 4.0]) - 5.0).abs() < 1e-9);
        assert!(f.at(&[0.0, 0.0]).abs() < 1e-12);
    }

    #[test]
    fn sphere_antipodes_on_the_grid() {
        let s = Surface::Sphere { radius: 1.0, m: 2 };
        let f = distance_field(&s, &[PI / 2.0, 0.0], 64, true).unwrap();
        assert_eq!(f.provenance, DistanceProvenance::GridGraph);
        let d = f.at(&[PI / 2.0, PI]);
        assert!((d - PI).abs() < 2.0 * f.grid.max_step(), "{d}");
        assert!(f.at(&f.base.clone()).abs() < 1e-15);
    }

    #[test]
    fn cylinder_takes_the_shorter_arc() {
        let c = Surface::Cylinder { radius: 1.0, k: 1, m: 2 };
        let f = distance_field(&c, &[0.0, 0.0], 20, false).unwrap();
        assert!((f.at(&[PI, 0.0]) - PI).abs() < 1e-9);
        let exact = c.intrinsic_distance(&[0.0, 0.0], &[PI, 0.0]).unwrap();
        assert!((exact - PI).abs() < 1e-12);
    }

    #[test]
    fn grid_converges_at_first_order_along_an_axis() {
        let g = Surface::Graph {
            height: HeightFn::Paraboloid { a: 0.5 },
            m: 2,
            extent: 1.0,
        };
        let chart = g.chart().unwrap();
        // Arc length of z = x²/2 from 0 to 1.
        let exact = 0.5 * (2f64.sqrt() + 1f64.asinh());
        let err = |n| (grid_distance(&chart, &[0.0, 0.0], n).unwrap().at(&[1.0, 0.0]) - exact).abs();
        let (e1, e2) = (err(8), err(16));
        assert!(e1 < 0.05 && (e1 / e2).log2() >= 1.0, "{e1} {e2}");
    }

    #[test]
    fn triangle_inequality_on_grid_samples() {
        let s = Surface::Sphere { radius: 1.0, m: 2 };
        let chart = s.chart().unwrap();
        let n = 24;
        let a = grid_distance(&chart, &[1.0, 0.5], n).unwrap();
        let b = grid_distance(&chart, &[2.0, 3.0], n).unwrap();
        let tol = 2.0 * a.grid.max_step();
        let ab = a.at(&b.base);
        for i in 0..a.grid.len() {
            let (da, db) = (a.values[i], b.values[i]);
            assert!(ab <= da + db + tol);
            assert!(da <= ab + db + tol);
        }
    }

    #[test]
    fn mesh_dijkstra_on_icosphere() {
        let mesh = icosphere(1.0, 3);
        let d = mesh_distance(&mesh, 0).unwrap();
        let far = (0..mesh.len())
            .max_by(|&i, &j| (mesh.vertices[i] - mesh.vertices[0]).norm().total_cmp(&(mesh.vertices[j] - mesh.vertices[0]).norm()))
            .unwrap();
        assert!(d[far] >= PI - 1e-9 && d[far] < 1.2 * PI, "{}", d[far]);
    }
}
