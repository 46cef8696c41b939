mod ground_state;
mod omega;

pub use ground_state::*;
pub use omega::{omega_limit_analysis, LimitKind, OmegaConfig, OmegaLimitReport};
