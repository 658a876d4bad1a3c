//! Energy-based dynamical models.
//!
//! Continuous-time Hopfield and firing-rate networks, Langevin sampling of
//! Gibbs–Boltzmann densities, local learning rules, dense associative
//! memories, oscillator networks and Ising machines, and proximal-gradient
//! circuits — each with the energy, stability and capacity checks that make
//! its behaviour testable at desk scale.

pub mod boltzmann;
pub mod denseam;
pub mod flows;
pub mod hopfield;
pub mod mathcore;
pub mod oscillator;
pub mod plasticity;
pub mod proximal;
