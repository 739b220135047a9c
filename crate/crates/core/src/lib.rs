pub mod algebra;
pub mod alphapath;
pub mod channels;
pub mod correlation;
pub mod error;
pub mod fibration;
pub mod gates;
pub mod matcore;
pub mod polymer;
pub mod random;
pub mod semiclassical;
pub mod states;
pub mod topology;

pub use alphapath::{Alpha, AlphaPath, DiscretePath, HomotopyGrid};
pub use algebra::{GateSet, MatrixStarAlgebra, NamedGate};
pub use channels::{EmbedIsometry, KrausChannel, MatrixMap, Povm};
pub use correlation::{Bipartition, Functional};
pub use error::{Error, Result};
pub use fibration::{FibrationSpec, QuantumFibration};
pub use polymer::{PolymerSpec, Schedule, Trajectory};
pub use matcore::{CMatrix, CVector, HermitianOp, TensorShape};
pub use states::{DensityOperator, UnnormalizedState};
pub use topology::{FiniteTopology, OpenCover, OpenSet};
