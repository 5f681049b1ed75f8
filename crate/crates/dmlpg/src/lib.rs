//! Meshless solver for transient heat conduction in 2D heterogeneous
//! media, built on direct recovery of local weak-form functionals from
//! nodal values. Quadrature only ever touches low-degree polynomials;
//! no shape functions are constructed anywhere.
//!
//! The crate is organized around the recovery pipeline:
//!
//! * [`nodes`] / [`domain`] / [`subdomain`] - scattered nodes on a
//!   rectangle, neighbor queries, and clipped local subdomains;
//! * [`basis`] - the shifted-scaled polynomial space;
//! * [`quadrature`] - segment, disk, clipped-region, and log-kernel
//!   rules;
//! * [`gmls`] - functional recovery from nodal values;
//! * [`weakforms`] - the local weak forms of the heat equation for the
//!   four variants (bump, collocation, companion-solution, constant);
//! * [`assembly`] / [`timestep`] - the global differential-algebraic
//!   system, fixed-step theta schemes, and the adaptive method of lines;
//! * [`problems`] - benchmark problems with analytic references plus
//!   convergence and timing studies.

pub mod assembly;
pub mod basis;
pub mod domain;
pub mod error;
pub mod gmls;
pub mod nodes;
pub mod problems;
pub mod quadrature;
pub mod sparse;
pub mod subdomain;
pub mod timestep;
pub mod weakforms;

pub use assembly::{
    assemble, postprocess, solve_steady, Method, SemiDiscreteSystem, SolverConfig, SubdomainShape,
};
pub use basis::PolyBasis;
pub use domain::{BcKind, BoundaryTag, DomainSpec, Side};
pub use error::{Error, Result};
pub use gmls::{
    build_stencil, gaussian_weight, point_value_row, solve_coefficients, CoefficientRow,
    FunctionalVec, GmlsStencil, WeightConfig,
};
pub use nodes::{make_regular_grid, BucketGrid, NodeSet};
pub use problems::{
    convergence_study, fgm_probe_points, fgm_problem, fgm_series_solution, fgm_steady_state,
    manufactured_problem, nodal_error, test_problem, ErrorReport, FgmParams, TimingRow,
};
pub use quadrature::{
    arc_rule, clipped_region_rule, disk_rule, gauss_legendre, gauss_log, gauss_segment,
    log_segment_rule, log_singular_rule, QuadratureConfig, QuadratureRule,
};
pub use subdomain::{clip_subdomain, BoundaryPiece, PieceTag, SubShape, Subdomain};
pub use timestep::{
    solve_method_of_lines, step_backward_euler, step_crank_nicolson, MolSolution, TimeScheme,
    Trajectory,
};
pub use weakforms::{
    dmlpg1_functionals, dmlpg2_functionals, dmlpg4_functionals, dmlpg5_functionals, neumann_load,
    source_load, CornerFactor, HeatProblem, NodeRole, TestFunctionKind,
};
