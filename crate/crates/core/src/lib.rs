pub mod assumptions;
pub mod config;
pub mod io;
pub mod kernels;
pub mod limit_lab;
pub mod quad;
pub mod solver;
pub mod special_fn;

pub use kernels::{FluxLaw, GfeLaw, Kernel, KernelError, LimitRegime};
pub use limit_lab::{Family, SweepResult, SweepSpec};
pub use solver::{
    EnergyTrace, EquationForm, Form, ModalState, Solution, Solver, SolverConfig, SolverError,
    Trajectory,
};
pub use special_fn::MLParams;
