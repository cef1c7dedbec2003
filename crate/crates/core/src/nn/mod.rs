//! Dense Tanh networks with hand-written reverse-mode gradients and Adam.

mod adam;
mod mlp;
mod snapshot;

pub use adam::{adam_step, AdamState};
pub use mlp::{
    loss_gradients, mlp_forward, mlp_init, BatchLoss, Dense, Gradients, Mlp, MlpParams,
    HIDDEN_SIZES,
};
pub use snapshot::{Snapshot, TensorRecord};
