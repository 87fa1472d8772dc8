//! Exact P1 element integrals.

use super::TriMesh;
use crate::linalg::CsrMatrix;
use crate::Result;

/// Sparse finite element matrices on one mesh.
#[derive(Debug, Clone)]
pub struct FemOperators {
    /// Mass matrix `M`.
    pub mass: CsrMatrix,
    /// Stiffness matrix `K`.
    pub stiffness: CsrMatrix,
    /// `L = K + M`.
    pub l: CsrMatrix,
    /// Boundary mass matrix `Q`.
    pub boundary_mass: CsrMatrix,
}

pub fn assemble(mesh: &TriMesh) -> Result<FemOperators> {
    mesh.validate()?;
    let n = mesh.num_vertices();
    let mut m_trip = Vec::with_capacity(9 * mesh.triangles.len());
    let mut k_trip = Vec::with_capacity(9 * mesh.triangles.len());
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let area = mesh.area(t);
        let p = tri.map(|i| mesh.vertices[i]);
        // gradient of the barycentric function of vertex a is (b_a, c_a) / (2·area)
        let b = [p[1][1] - p[2][1], p[2][1] - p[0][1], p[0][1] - p[1][1]];
        let c = [p[2][0] - p[1][0], p[0][0] - p[2][0], p[1][0] - p[0][0]];
        for a in 0..3 {
            for e in 0..3 {
                let mass = if a == e { area / 6.0 } else { area / 12.0 };
                m_trip.push((tri[a], tri[e], mass));
                k_trip.push((tri[a], tri[e], (b[a] * b[e] + c[a] * c[e]) / (4.0 * area)));
            }
        }
    }
    let mut q_trip = Vec::with_capacity(4 * mesh.boundary_edges.len());
    for &[a, e] in &mesh.boundary_edges {
        let (pa, pe) = (mesh.vertices[a], mesh.vertices[e]);
        let len = (pe[0] - pa[0]).hypot(pe[1] - pa[1]);
        q_trip.extend([(a, a, len / 3.0), (e, e, len / 3.0), (a, e, len / 6.0), (e, a, len / 6.0)]);
    }
    let mass = CsrMatrix::from_triplets(n, n, &m_trip)?;
    let stiffness = CsrMatrix::from_triplets(n, n, &k_trip)?;
    let l = CsrMatrix::lin_comb(1.0, &stiffness, 1.0, &mass);
    let boundary_mass = CsrMatrix::from_triplets(n, n, &q_trip)?;
    Ok(FemOperators { mass, stiffness, l, boundary_mass })
}
