//! Frequency-space and physical-space decompositions: Littlewood–Paley
//! pieces, dyadic rings, angular caps, ring kernels, Whitney cubes and the
//! Calderón–Zygmund profile built from them.

mod caps;
mod cz;
mod kernel;
mod lp;
mod rings;
mod whitney;

pub use caps::{CapSystem, MAX_OVERLAP};
pub use cz::{classify_cube, cz_profile, CzOptions, CzProfile, LevelProfile};
pub use kernel::{multiplier_shell_decay, shell, KernelTile, ShellDecayRow};
pub use lp::{eta, eta_plateau, lp_projector, peetre_maximal, square_function, DEFAULT_APERTURE};
pub use rings::{ring_l2_ratio, RingSystem};
pub use whitney::{bruteforce_distance, whitney_decompose, GridMask, WhitneyCube};
