//! Small-signal models of multi-area power networks.
//!
//! * [`netmodel`]: buses, lossless lines, areas and the reduced sensitivity
//!   `K_P` / disturbance map `D_P`.
//! * [`statespace`]: the transformed state-space model.
//! * [`modal`]: eigen-structure, participation factors, and identification of
//!   the interconnection mode.
//! * [`timesim`]: RK4 simulation, interaction variables, resonance and
//!   parameter sweeps.
//!
//! ```
//! use interarea::{cases, modal, statespace::{ModelForm, StateSpaceModel}, netmodel::OperatingPoint};
//!
//! let net = cases::case1();
//! let model = StateSpaceModel::from_network(&net, &OperatingPoint::flat(), ModelForm::Reduced)?;
//! let modes = modal::decompose_model(&model)?;
//! let freqs = modal::classify_modes(&modes, modal::DEFAULT_ZERO_TOL).frequencies();
//! assert!((freqs[0] - 2.1650).abs() < 1e-3);
//! # Ok::<(), interarea::Error>(())
//! ```

pub mod cases;
pub mod modal;
pub mod netmodel;
pub mod statespace;
pub mod timesim;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Network(#[from] netmodel::NetworkError),
    #[error(transparent)]
    StateSpace(#[from] statespace::StateSpaceError),
    #[error(transparent)]
    Modal(#[from] modal::ModalError),
    #[error(transparent)]
    Sim(#[from] timesim::SimError),
}

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/networks.md")]
    struct Networks;
    #[doc = include_str!("../../../book/src/modes.md")]
    struct Modes;
    #[doc = include_str!("../../../book/src/simulation.md")]
    struct Simulation;
    #[doc = include_str!("../../../README.md")]
    struct Readme;
}
