//! Classical solver: nonuniform finite differences and explicit Runge-Kutta.

pub mod fd;
mod rk;

pub use fd::{fd_first, fd_half_derivatives, fd_second, HalfDerivatives};
pub use rk::{butcher, integrate, rk_step, ButcherTableau, Rhs, TimeGrid, Trajectory};
