//! Finite-dimensional operator algebra: states, channels, tensor products,
//! partial traces, Choi representations and seeded sampling.

mod channel;
mod ptrace;
mod random;
mod serial;
mod state;

pub use channel::{apply_channel, channel_of, choi_of, Channel, ChoiOp, KrausChannel, CHOI_TOL, CLOSURE_TOL};
pub use ptrace::{partial_trace_matrix, partial_transpose_matrix};
pub use random::{
    complex_gaussian, ginibre, haar_vector, random_channel, random_density, random_isometry, random_povm_vectors,
    random_pure,
};
pub use serial::{parse_matrix_bytes, read_qmx, write_qmx, MatrixJson, QMX_MAGIC};
pub use state::{
    bell_state, maximally_entangled, qubit_minus, qubit_minus_i, qubit_plus, qubit_plus_i, DensityOp, LinOp, PureState,
    Tensor, HERMITIAN_TOL, NORM_TOL, PSD_TOL, TRACE_TOL,
};
