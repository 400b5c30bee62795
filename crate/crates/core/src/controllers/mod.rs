//! Control laws as pure step functions: state and measurements in, control
//! input and estimator rates out. Integration belongs to [`crate::sim`].

mod centralized;
mod distributed;
pub mod lyapunov;
mod smoothing;
mod summation;

pub use centralized::{
    centralized_di_step, centralized_si_step, nominal_newton_step, CentralizedDiState, CentralizedSiState, DiControl,
    NominalModel, SiControl,
};
pub use distributed::{
    dat_agent_rate, dat_estimator_step, di_neighbors, distributed_di_step, distributed_si_step, si_neighbors,
    DiAgentControl, DiNeighbor, DistributedDiAgentState, DistributedSiAgentState, GlobalAggregates, SiAgentControl,
    SiNeighbor,
};
pub use smoothing::{smooth_sign, SmoothingParams};
pub use summation::distributed_summation;
