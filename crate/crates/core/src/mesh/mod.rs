//! Simplicial meshes of 1D intervals and 2D rectangles/disks, nodal fields,
//! and the P1 assembly that realizes the weighted space W₀^{1,p}(Ω, w).

mod field;
mod space;

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SplError};

pub use field::Field;
pub use space::{flux, flux_monotonicity_gap, DiscreteSpace, GRADIENT_FLOOR};

/// Bounded domain Ω. Balls are centered at the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    Interval { a: f64, b: f64 },
    Rectangle { x0: f64, x1: f64, y0: f64, y1: f64 },
    Ball { dim: usize, radius: f64 },
}

impl Domain {
    pub fn interval(a: f64, b: f64) -> Self {
        Domain::Interval { a, b }
    }

    pub fn unit_square() -> Self {
        Domain::Rectangle {
            x0: 0.0,
            x1: 1.0,
            y0: 0.0,
            y1: 1.0,
        }
    }

    pub fn disk(radius: f64) -> Self {
        Domain::Ball { dim: 2, radius }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Domain::Interval { a, b } if !(a < b) || !a.is_finite() || !b.is_finite() => {
                Err(SplError::invalid("domain", format!("interval needs a < b, got ({a}, {b})")))
            }
            Domain::Rectangle { x0, x1, y0, y1 } if !(x0 < x1 && y0 < y1) => {
                Err(SplError::invalid("domain", "rectangle needs x0 < x1 and y0 < y1"))
            }
            Domain::Ball { dim, radius } if dim == 0 || !(radius > 0.0) => {
                Err(SplError::invalid("domain", "ball needs dim >= 1 and radius > 0"))
            }
            _ => Ok(()),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::Interval { .. } => 1,
            Domain::Rectangle { .. } => 2,
            Domain::Ball { dim, .. } => *dim,
        }
    }

    /// Lebesgue measure |Ω|.
    pub fn measure(&self) -> f64 {
        match *self {
            Domain::Interval { a, b } => b - a,
            Domain::Rectangle { x0, x1, y0, y1 } => (x1 - x0) * (y1 - y0),
            Domain::Ball { dim, radius } => crate::quadrature::unit_sphere_area(dim) * radius.powi(dim as i32) / dim as f64,
        }
    }

    pub fn diameter(&self) -> f64 {
        match *self {
            Domain::Interval { a, b } => b - a,
            Domain::Rectangle { x0, x1, y0, y1 } => (x1 - x0).hypot(y1 - y0),
            Domain::Ball { radius, .. } => 2.0 * radius,
        }
    }

    /// Axis-aligned bounding box of the first min(dim, 2) coordinates.
    pub fn bounding_box(&self) -> ([f64; 2], [f64; 2]) {
        match *self {
            Domain::Interval { a, b } => ([a, 0.0], [b, 0.0]),
            Domain::Rectangle { x0, x1, y0, y1 } => ([x0, y0], [x1, y1]),
            Domain::Ball { dim, radius } => {
                let y = if dim >= 2 { radius } else { 0.0 };
                ([-radius, -y], [radius, y])
            }
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.boundary_distance(x) >= 0.0
    }

    /// Signed distance to ∂Ω, positive inside.
    pub fn boundary_distance(&self, x: &[f64]) -> f64 {
        match *self {
            Domain::Interval { a, b } => (x[0] - a).min(b - x[0]),
            Domain::Rectangle { x0, x1, y0, y1 } => (x[0] - x0).min(x1 - x[0]).min(x[1] - y0).min(y1 - x[1]),
            Domain::Ball { dim, radius } => radius - x.iter().take(dim).map(|v| v * v).sum::<f64>().sqrt(),
        }
    }

    /// Distance along the unit direction `dir` from an interior 2D point to ∂Ω.
    pub fn exit_distance(&self, x: [f64; 2], dir: [f64; 2]) -> f64 {
        match *self {
            Domain::Interval { a, b } => {
                if dir[0] > 0.0 {
                    (b - x[0]) / dir[0]
                } else if dir[0] < 0.0 {
                    (a - x[0]) / dir[0]
                } else {
                    0.0
                }
            }
            Domain::Rectangle { x0, x1, y0, y1 } => {
                let mut t = f64::INFINITY;
                for (lo, hi, p, d) in [(x0, x1, x[0], dir[0]), (y0, y1, x[1], dir[1])] {
                    if d > 0.0 {
                        t = t.min((hi - p) / d);
                    } else if d < 0.0 {
                        t = t.min((lo - p) / d);
                    }
                }
                t.max(0.0)
            }
            Domain::Ball { radius, .. } => ray_exit_ball(x, dir, [0.0, 0.0], radius),
        }
    }
}

/// Largest t ≥ 0 with |x + t·dir - c| = r, for x inside the ball.
pub(crate) fn ray_exit_ball(x: [f64; 2], dir: [f64; 2], c: [f64; 2], r: f64) -> f64 {
    let dx = [x[0] - c[0], x[1] - c[1]];
    let b = dx[0] * dir[0] + dx[1] * dir[1];
    let cc = dx[0] * dx[0] + dx[1] * dx[1] - r * r;
    let disc = b * b - cc;
    if disc <= 0.0 {
        return 0.0;
    }
    (-b + disc.sqrt()).max(0.0)
}

/// Conforming simplicial mesh. Coordinates are stored as 2-vectors; in 1D
/// the second component is zero.
#[derive(Debug, Clone)]
pub struct Mesh {
    domain: Domain,
    dim: usize,
    nodes: Vec<[f64; 2]>,
    elements: Vec<usize>,
    boundary: Vec<bool>,
    diam: f64,
}

/// Builds a structured mesh: a uniform partition of an interval, or an
/// N×N grid of cells split into two triangles each (mapped onto the disk
/// for a 2D ball).
pub fn build_mesh(domain: &Domain, resolution: usize) -> Result<Mesh> {
    domain.validate()?;
    if resolution < 2 {
        return Err(SplError::invalid("resolution", format!("must be at least 2, got {resolution}")));
    }
    let n = resolution;
    let (nodes, elements, boundary) = match *domain {
        Domain::Interval { a, b } => interval_mesh(a, b, n),
        Domain::Ball { dim: 1, radius } => interval_mesh(-radius, radius, n),
        Domain::Rectangle { x0, x1, y0, y1 } => grid_mesh(n, |s, t| [x0 + s * (x1 - x0), y0 + t * (y1 - y0)]),
        Domain::Ball { dim: 2, radius } => grid_mesh(n, |s, t| {
            // elliptical grid mapping of the square [-1,1]² onto the disk
            let (u, v) = (2.0 * s - 1.0, 2.0 * t - 1.0);
            [
                radius * u * (1.0 - 0.5 * v * v).sqrt(),
                radius * v * (1.0 - 0.5 * u * u).sqrt(),
            ]
        }),
        Domain::Ball { dim, .. } => {
            return Err(SplError::UnsupportedDomain(format!(
                "meshes are built for 1D and 2D domains only (ball of dimension {dim})"
            )))
        }
    };
    let dim = domain.dim();
    let mut mesh = Mesh {
        domain: domain.clone(),
        dim,
        nodes,
        elements,
        boundary,
        diam: 0.0,
    };
    mesh.diam = mesh.compute_diameter();
    for e in 0..mesh.element_count() {
        if !(mesh.element_measure(e) > 0.0) {
            return Err(SplError::Construction(format!("degenerate element {e}")));
        }
    }
    Ok(mesh)
}

fn interval_mesh(a: f64, b: f64, n: usize) -> (Vec<[f64; 2]>, Vec<usize>, Vec<bool>) {
    let h = (b - a) / n as f64;
    let mut nodes: Vec<[f64; 2]> = (0..=n).map(|i| [a + h * i as f64, 0.0]).collect();
    nodes[n][0] = b;
    let elements = (0..n).flat_map(|i| [i, i + 1]).collect();
    let boundary = (0..=n).map(|i| i == 0 || i == n).collect();
    (nodes, elements, boundary)
}

fn grid_mesh(n: usize, map: impl Fn(f64, f64) -> [f64; 2]) -> (Vec<[f64; 2]>, Vec<usize>, Vec<bool>) {
    let idx = |i: usize, j: usize| j * (n + 1) + i;
    let mut nodes = Vec::with_capacity((n + 1) * (n + 1));
    let mut boundary = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            nodes.push(map(i as f64 / n as f64, j as f64 / n as f64));
            boundary.push(i == 0 || j == 0 || i == n || j == n);
        }
    }
    let mut elements = Vec::with_capacity(6 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            // alternate the diagonal by quadrant so the mesh is symmetric
            let flip = (2 * i < n) != (2 * j < n);
            if flip {
                elements.extend_from_slice(&[a, b, d, b, c, d]);
            } else {
                elements.extend_from_slice(&[a, b, c, a, c, d]);
            }
        }
    }
    (nodes, elements, boundary)
}

impl Mesh {
    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> [f64; 2] {
        self.nodes[i]
    }

    /// Node coordinates as a slice of length `dim`.
    pub fn point(&self, i: usize) -> &[f64] {
        &self.nodes[i][..self.dim]
    }

    pub fn nodes_per_element(&self) -> usize {
        self.dim + 1
    }

    pub fn element_count(&self) -> usize {
        self.elements.len() / self.nodes_per_element()
    }

    pub fn element(&self, e: usize) -> &[usize] {
        let k = self.nodes_per_element();
        &self.elements[e * k..(e + 1) * k]
    }

    pub fn is_boundary(&self, i: usize) -> bool {
        self.boundary[i]
    }

    pub fn boundary_mask(&self) -> &[bool] {
        &self.boundary
    }

    pub fn interior_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.node_count()).filter(|&i| !self.boundary[i])
    }

    /// Largest pairwise node distance, d0.
    pub fn diam(&self) -> f64 {
        self.diam
    }

    pub fn element_measure(&self, e: usize) -> f64 {
        let el = self.element(e);
        match self.dim {
            1 => self.nodes[el[1]][0] - self.nodes[el[0]][0],
            _ => {
                let (a, b, c) = (self.nodes[el[0]], self.nodes[el[1]], self.nodes[el[2]]);
                0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
            }
        }
    }

    /// Largest index difference between nodes sharing an element.
    pub fn bandwidth(&self) -> usize {
        (0..self.element_count())
            .map(|e| {
                let el = self.element(e);
                let lo = el.iter().min().copied().unwrap_or(0);
                let hi = el.iter().max().copied().unwrap_or(0);
                hi - lo
            })
            .max()
            .unwrap_or(0)
    }

    fn compute_diameter(&self) -> f64 {
        // the diameter of a convex polytope is attained at hull vertices,
        // all of which are boundary nodes
        let b: Vec<[f64; 2]> = (0..self.node_count()).filter(|&i| self.boundary[i]).map(|i| self.nodes[i]).collect();
        let mut d: f64 = 0.0;
        for i in 0..b.len() {
            for j in i + 1..b.len() {
                d = d.max((b[i][0] - b[j][0]).hypot(b[i][1] - b[j][1]));
            }
        }
        d
    }

    /// Writes `nodes.csv` (index, coordinates, boundary flag) and
    /// `elements.csv` (node indices) into `dir`.
    pub fn write_csv(&self, dir: &Path) -> Result<()> {
        let mut nodes = String::from(if self.dim == 1 { "index,x,boundary\n" } else { "index,x,y,boundary\n" });
        for (i, p) in self.nodes.iter().enumerate() {
            let b = u8::from(self.boundary[i]);
            if self.dim == 1 {
                let _ = writeln!(nodes, "{i},{},{b}", p[0]);
            } else {
                let _ = writeln!(nodes, "{i},{},{},{b}", p[0], p[1]);
            }
        }
        let mut elements = String::from(if self.dim == 1 { "element,n0,n1\n" } else { "element,n0,n1,n2\n" });
        for e in 0..self.element_count() {
            let idx: Vec<String> = self.element(e).iter().map(|v| v.to_string()).collect();
            let _ = writeln!(elements, "{e},{}", idx.join(","));
        }
        write_file(&dir.join("mesh_nodes.csv"), &nodes)?;
        write_file(&dir.join("mesh_elements.csv"), &elements)
    }
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| SplError::io(path, e))
}

/// Writes node coordinates and one value column per named field.
pub fn write_fields_csv(path: &Path, mesh: &Mesh, fields: &[(&str, &Field)]) -> Result<()> {
    let mut out = String::from(if mesh.dim() == 1 { "x" } else { "x,y" });
    for (name, _) in fields {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for i in 0..mesh.node_count() {
        let p = mesh.node(i);
        if mesh.dim() == 1 {
            let _ = write!(out, "{}", p[0]);
        } else {
            let _ = write!(out, "{},{}", p[0], p[1]);
        }
        for (_, f) in fields {
            let _ = write!(out, ",{}", f.values()[i]);
        }
        out.push('\n');
    }
    write_file(path, &out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_partition() {
        let m = build_mesh(&Domain::interval(-1.0, 1.0), 4).unwrap();
        assert_eq!(m.node_count(), 5);
        assert_eq!(m.element_count(), 4);
        let b: Vec<f64> = (0..5).filter(|&i| m.is_boundary(i)).map(|i| m.node(i)[0]).collect();
        assert_eq!(b, vec![-1.0, 1.0]);
        assert!((m.diam() - 2.0).abs() < 1e-15);
        assert_eq!(m.bandwidth(), 1);
    }

    #[test]
    fn unit_square_split() {
        let m = build_mesh(&Domain::unit_square(), 2).unwrap();
        assert_eq!(m.node_count(), 9);
        assert_eq!(m.element_count(), 8);
        assert_eq!(m.interior_nodes().count(), 1);
        let area: f64 = (0..8).map(|e| m.element_measure(e)).sum();
        assert!((area - 1.0).abs() < 1e-15);
        assert!((m.diam() - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn resolution_one_is_rejected() {
        assert!(matches!(
            build_mesh(&Domain::interval(0.0, 1.0), 1),
            Err(SplError::InvalidParameter { name: "resolution", .. })
        ));
    }

    #[test]
    fn three_dimensional_ball_is_unsupported() {
        assert!(matches!(
            build_mesh(&Domain::Ball { dim: 3, radius: 1.0 }, 4),
            Err(SplError::UnsupportedDomain(_))
        ));
    }

    #[test]
    fn disk_mesh_is_positively_oriented_and_boundary_on_circle() {
        let m = build_mesh(&Domain::disk(1.0), 8).unwrap();
        for i in 0..m.node_count() {
            let r = m.node(i)[0].hypot(m.node(i)[1]);
            if m.is_boundary(i) {
                assert!((r - 1.0).abs() < 1e-12);
            } else {
                assert!(r < 1.0);
            }
        }
        let area: f64 = (0..m.element_count()).map(|e| m.element_measure(e)).sum();
        assert!(area > 3.0 && area < std::f64::consts::PI);
    }
}
