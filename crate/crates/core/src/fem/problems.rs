//! Optimal control test problems assembled as multiple saddle-point systems.

use super::{assemble, disc_mesh, structured_square_mesh, FemOperators, TriMesh};
use crate::linalg::{BandedSpdMatrix, Block, CsrMatrix};
use crate::operator::LinearOperator;
use crate::saddle::BlockSaddleSystem;
use crate::{Error, Result};

/// Augmented Lagrangian parameter used by default in the quadruple problem.
pub const DEFAULT_RHO: f64 = 1e-5;

/// Nodes with `‖x‖₂` at most this are active in the quadruple problem.
pub const ACTIVE_RADIUS: f64 = 0.5;

/// Boundary-observation control problem on `(0,1)²`, variables `(f, p, u)`:
///
/// ```text
/// [ αM   M   0 ] [f]   [ 0  ]
/// [  M   0   L ] [p] = [ 0  ]
/// [  0   L   Q ] [u]   [ Qû ]
/// ```
#[derive(Debug, Clone)]
pub struct DoubleProblem {
    pub level: u32,
    pub alpha: f64,
    pub mesh: TriMesh,
    pub ops: FemOperators,
    pub system: BlockSaddleSystem,
    pub rhs: Vec<f64>,
    /// `û`, the state produced by the control `4x(1−x) + y`.
    pub desired_state: Vec<f64>,
}

/// Control `4x(1−x) + y` used to generate the desired state.
pub fn true_control(x: f64, y: f64) -> f64 {
    4.0 * x * (1.0 - x) + y
}

pub fn build_double_saddle(level: u32, alpha: f64) -> Result<DoubleProblem> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidSystem(format!("alpha must be positive, got {alpha}")));
    }
    let mesh = structured_square_mesh(level);
    let ops = assemble(&mesh)?;
    let n = mesh.num_vertices();

    // forward problem (K + M) u = −M f
    let f = mesh.interpolate(true_control);
    let mut desired_state = ops.mass.matvec(&f);
    desired_state.iter_mut().for_each(|v| *v = -*v);
    BandedSpdMatrix::from_csr(&ops.l)?
        .cholesky()?
        .solve_in_place(&mut desired_state)?;

    let mut rhs = vec![0.0; 3 * n];
    ops.boundary_mass.mul_add(1.0, &desired_state, &mut rhs[2 * n..]);

    let system = BlockSaddleSystem::new(
        vec![
            Block::Sparse(ops.mass.scaled(alpha)),
            Block::Sparse(CsrMatrix::zeros(n, n)),
            Block::Sparse(ops.boundary_mass.clone()),
        ],
        vec![Block::Sparse(ops.mass.clone()), Block::Sparse(ops.l.clone())],
    )?;
    Ok(DoubleProblem { level, alpha, mesh, ops, system, rhs, desired_state })
}

/// Per-node active flags.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActiveSet {
    active: Vec<bool>,
}

impl ActiveSet {
    pub fn new(active: Vec<bool>) -> Result<Self> {
        if active.iter().all(|&a| a) {
            return Err(Error::EmptyInactiveSet);
        }
        Ok(Self { active })
    }

    /// Nodes within `radius` of the origin are active.
    pub fn within_radius(mesh: &TriMesh, radius: f64) -> Result<Self> {
        Self::new(mesh.vertices.iter().map(|v| v[0].hypot(v[1]) <= radius).collect())
    }

    pub fn len(&self) -> usize {
        self.active.len()
    }

    pub fn is_empty(&self) -> bool {
        self.active.is_empty()
    }

    pub fn is_active(&self, node: usize) -> bool {
        self.active[node]
    }

    pub fn num_active(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }

    /// Inactive node indices in increasing order; this is the ordering of
    /// every restricted matrix.
    pub fn inactive(&self) -> Vec<usize> {
        (0..self.active.len()).filter(|&i| !self.active[i]).collect()
    }
}

/// Matrices restricted to the inactive nodes `i`.
#[derive(Debug, Clone)]
pub struct InactiveRestriction {
    pub indices: Vec<usize>,
    /// `M^(i,:)`: rows of `M` belonging to inactive nodes.
    pub mass_rows: CsrMatrix,
    /// `M^(i,i)`
    pub mass: CsrMatrix,
    /// `K^(i,i)`
    pub stiffness: CsrMatrix,
}

pub fn restrict_to_inactive(ops: &FemOperators, active: &ActiveSet) -> Result<InactiveRestriction> {
    crate::linalg::check_len(ops.mass.rows(), active.len())?;
    let indices = active.inactive();
    if indices.is_empty() {
        return Err(Error::EmptyInactiveSet);
    }
    let all: Vec<usize> = (0..ops.mass.cols()).collect();
    Ok(InactiveRestriction {
        mass_rows: ops.mass.submatrix(&indices, &all),
        mass: ops.mass.submatrix(&indices, &indices),
        stiffness: ops.stiffness.submatrix(&indices, &indices),
        indices,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadrupleParams {
    pub alpha: f64,
    pub lambda: f64,
    pub rho: f64,
}

impl QuadrupleParams {
    pub fn new(alpha: f64, lambda: f64) -> Self {
        Self { alpha, lambda, rho: DEFAULT_RHO }
    }

    /// `λ / (1 + ρλ)`
    pub fn lambda_rho(&self) -> f64 {
        self.lambda / (1.0 + self.rho * self.lambda)
    }
}

/// State-constrained control problem on the unit disc with lifted state,
/// variables `(f, p, u, p̃, ũ⁽ⁱ⁾)`.
#[derive(Debug, Clone)]
pub struct QuadrupleProblem {
    pub level: u32,
    pub params: QuadrupleParams,
    pub mesh: TriMesh,
    pub ops: FemOperators,
    pub active: ActiveSet,
    pub inactive: InactiveRestriction,
    pub system: BlockSaddleSystem,
    pub rhs: Vec<f64>,
    /// The vector `w` with `rhs = A w`.
    pub solution: Vec<f64>,
}

/// Desired state `û = 1 − x² − y²`.
pub fn desired_state(x: f64, y: f64) -> f64 {
    1.0 - x * x - y * y
}

/// Upper state bound `ū`.
pub const STATE_BOUND: f64 = 0.5;

pub fn build_quadruple_saddle(level: u32, params: QuadrupleParams) -> Result<QuadrupleProblem> {
    let QuadrupleParams { alpha, lambda, rho } = params;
    if !(alpha > 0.0 && lambda > 0.0 && rho > 0.0) {
        return Err(Error::InvalidSystem(format!(
            "alpha, lambda, rho must be positive, got {alpha}, {lambda}, {rho}"
        )));
    }
    let mesh = disc_mesh(level)?;
    let ops = assemble(&mesh)?;
    let active = ActiveSet::within_radius(&mesh, ACTIVE_RADIUS)?;
    let inactive = restrict_to_inactive(&ops, &active)?;
    let lr = params.lambda_rho();
    let m = &ops.mass;
    let neg_m = m.scaled(-1.0);

    let system = BlockSaddleSystem::new(
        vec![
            Block::Sparse(m.scaled(alpha + lambda)),
            Block::Sparse(ops.l.scaled(lr)),
            Block::Sparse(CsrMatrix::lin_comb(1.0, m, lambda, &ops.l)),
            Block::Sparse(m.scaled(lr)),
            Block::Sparse(inactive.mass.scaled(lambda)),
        ],
        vec![
            Block::Sparse(neg_m.clone()),
            Block::Sparse(ops.stiffness.clone()),
            Block::Sparse(neg_m),
            Block::Sparse(inactive.mass_rows.clone()),
        ],
    )?;

    // Smooth fields give a right-hand side with known solution.
    let mut solution = Vec::with_capacity(system.dim());
    solution.extend(mesh.interpolate(|x, y| (std::f64::consts::PI * x).cos() * y));
    solution.extend(mesh.interpolate(|x, y| x * x - y));
    solution.extend(mesh.interpolate(|x, y| desired_state(x, y).min(STATE_BOUND)));
    solution.extend(mesh.interpolate(|x, y| x * y));
    solution.extend(inactive.indices.iter().map(|&i| {
        let v = mesh.vertices[i];
        desired_state(v[0], v[1]).min(STATE_BOUND)
    }));
    let rhs = system.apply_vec(&solution);
    Ok(QuadrupleProblem { level, params, mesh, ops, active, inactive, system, rhs, solution })
}
