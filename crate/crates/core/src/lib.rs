//! Option discovery, symbolic abstraction and probabilistic planning for a
//! Treasure Game simulator.

pub mod abstraction;
pub mod dataset;
pub mod discovery;
pub mod env;
pub mod exec;
pub mod options;
pub mod planner;
pub mod ppddl;

pub use abstraction::{
    abstract_dataset, Abstraction, AbstractionConfig, AbstractionError, Factor, GoalSpec, PartitionArtifact,
    PartitionedOption, SymbolicVocabulary,
};
pub use discovery::{collect_transitions, discover_options, CollectConfig, Collection, DiscoveryConfig};
pub use env::{load_map, reference_map, ObjectRef, Primitive, StateVector, TileMap, WorldState};
pub use exec::{bind_actions, execute_symbolic_plan, ExecConfig, ExecError, Execution};
pub use options::{OptionDef, TerminationReason, TransitionSample};
pub use planner::{solve, solve_problem, GroundedTask, PlannerConfig, PlannerError, Policy};
pub use ppddl::{Domain, Problem};
