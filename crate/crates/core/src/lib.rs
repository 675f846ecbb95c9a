//! Finite-volume simulation of the diffusive field-road model.
//!
//! A population lives on a field `Ω = ω × (0, L)` with diffusivity `d` and
//! on a road `ω × {0}` with diffusivity `D`. Individuals leave the road at
//! rate `μ` and join it from the field boundary at rate `ν`. The crate
//! discretizes this system with a two-point flux, backward-Euler scheme
//! that conserves mass, preserves positivity and dissipates every relative
//! entropy, and measures the exponential decay to equilibrium.
//!
//! ```
//! use fieldroad::mesh::{build_cartesian, Geometry};
//! use fieldroad::scheme::{assemble, step, Params, State};
//!
//! let mesh = build_cartesian(Geometry::new(0.0, 4.0, 2.0)?, 8, 4)?;
//! let params = Params::new(1.0, 1.0, 1.0, 5.0, 0.1)?;
//! let op = assemble(&mesh, &params)?;
//! let mut state = State::constant(&mesh, 0.0, 0.0);
//! state.field[5] = 10.0;
//! let next = step(&op, &state)?;
//! assert!(next.min_entry() >= 0.0);
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod cli;
pub mod entropy;
pub mod experiments;
pub mod io;
pub mod mesh;
pub mod scheme;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/mesh.md")]
    mod mesh {}
    #[doc = include_str!("../../../book/src/scheme.md")]
    mod scheme {}
    #[doc = include_str!("../../../book/src/entropy.md")]
    mod entropy {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
