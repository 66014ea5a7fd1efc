//! Hand-rolled neural network engine: dense layers, an LSTM with
//! backpropagation through time, Adam, and the fixed two-branch recurrent
//! architecture used by the agents. `f64` throughout; no external numeric
//! dependencies.

pub mod adam;
pub mod dense;
pub mod fdcheck;
pub mod lstm;
pub mod net;
pub mod tensor;
pub mod weights;

pub use adam::{clip_global_norm, Adam};
pub use dense::{softmax_in_place, Activation, Dense};
pub use lstm::{Lstm, LstmState};
pub use net::{Fusion, NetCache, NetDims, NetGrads, RecurrentNet, HISTORY_LEN};
pub use tensor::Mat;
pub use weights::{load_weights, save_weights};
