//! Linear-time solver for quantum 2-SAT: decide whether a sum of two-qubit
//! projectors has a zero-energy state and, if so, return one as a product of
//! one- and two-qubit factors.

pub mod assignment;
pub mod graph;
pub mod instance;
pub mod linalg2;
pub mod oracle;
pub mod propagate;
pub mod scalar;
pub mod solver;

pub use assignment::{Factor, Solution};
pub use instance::format::{parse_instance, parse_solution, serialize_instance, serialize_solution};
pub use instance::{Instance, InstanceError, Term};
pub use linalg2::{Qubit1State, Qubit2State};
pub use scalar::{Real, Tolerances};
pub use solver::{solve, solve_with_stats, SolveOutcome, SolveStats, SolverConfig, UnsatCause};

pub type Instance64 = Instance<f64>;
pub type Solution64 = Solution<f64>;
pub type SolveOutcome64 = SolveOutcome<f64>;
pub type SolverConfig64 = SolverConfig<f64>;
pub type Qubit1State64 = Qubit1State<f64>;
pub type Qubit2State64 = Qubit2State<f64>;

pub type Instance32 = Instance<f32>;
pub type Solution32 = Solution<f32>;
pub type SolveOutcome32 = SolveOutcome<f32>;
pub type SolverConfig32 = SolverConfig<f32>;
pub type Qubit1State32 = Qubit1State<f32>;
pub type Qubit2State32 = Qubit2State<f32>;
