//! Heat flow in a 1-D anharmonic oscillator chain with per-site stochastic baths.
//!
//! The crate has two halves that cross-validate each other:
//!
//! * A stochastic-dynamics half: the chain model ([`chain`]), Langevin
//!   integrators and steady-state estimators ([`langevin`]), the
//!   self-consistent bath-temperature solver ([`selfconsistent`]) and the
//!   conductivity sweep machinery ([`conductivity`]).
//! * A discrete-time lattice half: closed forms for the decoupled
//!   Ornstein-Uhlenbeck process ([`ou`]), the polymer (cluster) expansion
//!   engine with its convergence certificate ([`polymer`]) and an
//!   independent brute-force oracle for tiny lattices ([`oracle`]).

pub mod chain;
pub mod conductivity;
pub mod langevin;
pub mod oracle;
pub mod ou;
pub mod polymer;
pub mod quadrature;
pub mod selfconsistent;
pub mod special;
