//! Minimal dense network engine: matrices, a differentiation tape, dense and
//! hypernetwork layers, Adam, and a binary checkpoint format.

pub mod checkpoint;
pub mod layers;
pub mod optim;
pub mod tape;
pub mod tensor;

pub use layers::{bind_params, Activation, Dense, GeneratedLayer, HyperLayer, Mlp};
pub use optim::{clip_global_norm, global_norm, Adam};
pub use tape::{masked_log_softmax, Gradients, Tape, Var};
pub use tensor::Tensor2;
