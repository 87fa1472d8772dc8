//! P1 finite elements on structured triangle meshes.

mod assembly;
mod mesh;
mod problems;

pub use assembly::{assemble, FemOperators};
pub use mesh::{disc_mesh, mesh_width, structured_square_mesh, TriMesh};
pub use problems::{
    build_double_saddle, build_quadruple_saddle, desired_state, restrict_to_inactive, true_control, ActiveSet,
    DoubleProblem, InactiveRestriction, QuadrupleParams, QuadrupleProblem, ACTIVE_RADIUS, DEFAULT_RHO,
    STATE_BOUND,
};
