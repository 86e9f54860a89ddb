//! Heat kernels, resolvents and weighted-L1 estimates for the singular Bessel
//! operator `G_κ f = f'' + (κ/x) f'` on the half-line, together with the
//! similarity reduction of `x^α (f'' + a f'/x + b f/x²)` to `G_κ`.
//!
//! The crate is organised bottom-up:
//!
//! * [`bessel`]: modified Bessel functions `I_ν`, `K_ν` in scaled form.
//! * [`spaces`]: composite Gauss–Legendre grids and `X_m` norms.
//! * [`kernel`]: the heat kernel `k_κ(z,x,r)` and the semigroup `S(z)`.
//! * [`resolvent`]: the Green function `G_κ(λ,x,r)` and boundary traces.
//! * [`reduce`]: parameter algebra and the isometries `T_β`, `M_l`.
//! * [`absorption`]: Strang-split evolution with a potential `ω ≥ 0`.
//! * [`verify`]: property checks aggregated into a [`verify::VerificationReport`].
//! * [`cli`]: configuration and subcommand dispatch for the `halfline` binary.

pub mod absorption;
pub mod bessel;
pub mod cli;
mod error;
pub mod kernel;
pub mod reduce;
pub mod resolvent;
pub mod sector;
pub mod spaces;
pub mod verify;

pub use error::{Error, Result};
pub use sector::SectorPoint;

/// Library version embedded in every CLI output file.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
