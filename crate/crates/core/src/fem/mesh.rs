use std::io::Write;

use crate::{Error, Result};

/// Unstructured triangle mesh in the plane.
///
/// Triangles are counterclockwise; boundary edges are listed in
/// counterclockwise order around the domain.
#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    pub vertices: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    pub boundary_edges: Vec<[usize; 2]>,
}

/// Mesh width `2^-level`.
pub fn mesh_width(level: u32) -> f64 {
    (-(level as f64)).exp2()
}

/// Uniform `cells × cells` grid on `[x0, x0 + cells·h]²`.
///
/// Vertex `(i, j)` (column `i`, row `j`) has index `j·(cells+1) + i`, so nodes
/// are ordered lexicographically by `(y, x)`. A square is split along the
/// diagonal from its lower-left to its upper-right corner unless
/// `anti_diagonal(i, j)` asks for the other one.
fn grid(cells: usize, x0: f64, h: f64, anti_diagonal: impl Fn(usize, usize) -> bool) -> TriMesh {
    let np = cells + 1;
    let idx = |i: usize, j: usize| j * np + i;
    let mut vertices = Vec::with_capacity(np * np);
    for j in 0..np {
        for i in 0..np {
            vertices.push([x0 + i as f64 * h, x0 + j as f64 * h]);
        }
    }
    let mut triangles = Vec::with_capacity(2 * cells * cells);
    for j in 0..cells {
        for i in 0..cells {
            let (v00, v10, v11, v01) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            if anti_diagonal(i, j) {
                triangles.push([v00, v10, v01]);
                triangles.push([v10, v11, v01]);
            } else {
                triangles.push([v00, v10, v11]);
                triangles.push([v00, v11, v01]);
            }
        }
    }
    let mut boundary_edges = Vec::with_capacity(4 * cells);
    for i in 0..cells {
        boundary_edges.push([idx(i, 0), idx(i + 1, 0)]);
    }
    for j in 0..cells {
        boundary_edges.push([idx(cells, j), idx(cells, j + 1)]);
    }
    for i in (0..cells).rev() {
        boundary_edges.push([idx(i + 1, cells), idx(i, cells)]);
    }
    for j in (0..cells).rev() {
        boundary_edges.push([idx(0, j + 1), idx(0, j)]);
    }
    TriMesh { vertices, triangles, boundary_edges }
}

/// Unit square `(0,1)²` with `h = 2^-level`.
pub fn structured_square_mesh(level: u32) -> TriMesh {
    let cells = 1usize << level;
    grid(cells, 0.0, 1.0 / cells as f64, |_, _| false)
}

/// Unit disc: the grid on `[-1, 1]²` with spacing `h = 2^-level`, pushed onto
/// the disc by `(x, y) ↦ (x, y)·max(|x|, |y|) / ‖(x, y)‖₂`.
///
/// Every square is cut along its diagonal pointing away from the origin, so
/// the corner cells do not produce slivers with three vertices on the circle.
pub fn disc_mesh(level: u32) -> Result<TriMesh> {
    let cells = 2usize << level;
    let half = cells / 2;
    // cell centres with x·y < 0 take the other diagonal
    let mut mesh = grid(cells, -1.0, 2.0 / cells as f64, |i, j| (i < half) != (j < half));
    for v in &mut mesh.vertices {
        let r = v[0].hypot(v[1]);
        if r > 0.0 {
            let s = v[0].abs().max(v[1].abs()) / r;
            v[0] *= s;
            v[1] *= s;
        }
    }
    mesh.validate()?;
    Ok(mesh)
}

impl TriMesh {
    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    /// Signed area of triangle `t`.
    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t].map(|i| self.vertices[i]);
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
    }

    /// Checks that every triangle has positive area.
    pub fn validate(&self) -> Result<()> {
        for t in 0..self.triangles.len() {
            let area = self.area(t);
            if !(area > 0.0) {
                return Err(Error::DegenerateTriangle { index: t, area });
            }
        }
        Ok(())
    }

    /// Number of distinct (undirected) edges.
    pub fn num_edges(&self) -> usize {
        let mut edges: Vec<(usize, usize)> = self
            .triangles
            .iter()
            .flat_map(|t| [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])])
            .map(|(a, b)| (a.min(b), a.max(b)))
            .collect();
        edges.sort_unstable();
        edges.dedup();
        edges.len()
    }

    /// `V − E + T`.
    pub fn euler_characteristic(&self) -> i64 {
        self.num_vertices() as i64 - self.num_edges() as i64 + self.triangles.len() as i64
    }

    /// Whether the boundary edges chain head to tail into closed loops.
    pub fn boundary_is_closed(&self) -> bool {
        let n = self.num_vertices();
        let mut out_deg = vec![0usize; n];
        let mut in_deg = vec![0usize; n];
        for e in &self.boundary_edges {
            out_deg[e[0]] += 1;
            in_deg[e[1]] += 1;
        }
        !self.boundary_edges.is_empty() && out_deg == in_deg && out_deg.iter().all(|&d| d <= 1)
    }

    pub fn boundary_vertices(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.boundary_edges.iter().map(|e| e[0]).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Nodal interpolant of `f`.
    pub fn interpolate(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        self.vertices.iter().map(|v| f(v[0], v[1])).collect()
    }

    /// Writes the mesh as plain text:
    ///
    /// ```text
    /// nodes <V>
    /// <x> <y>            (V lines)
    /// triangles <T>
    /// <a> <b> <c>        (T lines, 0-based)
    /// boundary <B>
    /// <a> <b>            (B lines, 0-based)
    /// ```
    pub fn write_ascii<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "nodes {}", self.vertices.len())?;
        for v in &self.vertices {
            writeln!(w, "{:.16e} {:.16e}", v[0], v[1])?;
        }
        writeln!(w, "triangles {}", self.triangles.len())?;
        for t in &self.triangles {
            writeln!(w, "{} {} {}", t[0], t[1], t[2])?;
        }
        writeln!(w, "boundary {}", self.boundary_edges.len())?;
        for e in &self.boundary_edges {
            writeln!(w, "{} {}", e[0], e[1])?;
        }
        Ok(())
    }

    pub fn read_ascii<R: std::io::BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let mut next_line = || -> Result<String> {
            lines
                .next()
                .ok_or_else(|| Error::Parse("unexpected end of mesh file".into()))?
                .map_err(Error::from)
        };
        fn header(line: &str, key: &str) -> Result<usize> {
            let mut it = line.split_whitespace();
            if it.next() != Some(key) {
                return Err(Error::Parse(format!("expected '{key}' section, got '{line}'")));
            }
            it.next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::Parse(format!("bad count in '{line}'")))
        }
        fn fields<T: std::str::FromStr, const N: usize>(line: &str) -> Result<[T; N]> {
            let parsed: Vec<T> = line
                .split_whitespace()
                .map(|s| s.parse().map_err(|_| Error::Parse(format!("bad field in '{line}'"))))
                .collect::<Result<_>>()?;
            parsed
                .try_into()
                .map_err(|_| Error::Parse(format!("expected {N} fields in '{line}'")))
        }
        let nv = header(&next_line()?, "nodes")?;
        let vertices = (0..nv).map(|_| fields::<f64, 2>(&next_line()?)).collect::<Result<_>>()?;
        let nt = header(&next_line()?, "triangles")?;
        let triangles = (0..nt).map(|_| fields::<usize, 3>(&next_line()?)).collect::<Result<_>>()?;
        let nb = header(&next_line()?, "boundary")?;
        let boundary_edges = (0..nb).map(|_| fields::<usize, 2>(&next_line()?)).collect::<Result<_>>()?;
        let mesh = TriMesh { vertices, triangles, boundary_edges };
        let n = mesh.num_vertices();
        let in_range = mesh.triangles.iter().flatten().chain(mesh.boundary_edges.iter().flatten()).all(|&i| i < n);
        if !in_range {
            return Err(Error::Parse("vertex index out of range".into()));
        }
        Ok(mesh)
    }
}
