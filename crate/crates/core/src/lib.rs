//! Driven planar rotators on three-dimensional boxes.
//!
//! Two dynamics are provided: a continuous-time clock process on `N`
//! equally spaced angles with a chiral bias, and overdamped XY Langevin
//! dynamics with a constant drift. Both share the lattice, energy and
//! observable layers. The [`oracle`] module solves the clock generator
//! exactly on tiny state spaces.

pub mod clock;
pub mod energy;
pub mod error;
pub mod interaction;
pub mod lattice;
pub mod noise;
pub mod observables;
pub mod oracle;
pub mod state;
pub mod trajectory;
pub mod xy;

pub use clock::{simulate_clock, ClockParams, ClockSchedule, Direction};
pub use energy::{energy, grad_site, local_energy_delta};
pub use error::{Error, Result};
pub use interaction::Interaction;
pub use lattice::{Boundary, Lattice, Neighbor};
pub use noise::{derive_seed, NoiseStream};
pub use observables::{detect_rotation, magnetization, RotationThresholds, RotationVerdict, TimeWindow};
pub use state::{init_state, InitSpec, SpinKind, SpinState};
pub use trajectory::{rotation_frame, Sample, Snapshots, Trajectory};
pub use xy::{simulate_xy, Scheme, XyParams, XySchedule};
