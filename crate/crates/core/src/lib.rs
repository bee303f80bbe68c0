//! Numerical kernel for polar decompositions, spherical functions, coupling
//! equations and exponential decay certificates on Sp(2,R) and SL(3,R).

pub mod groups;
pub mod orthopoly;
pub mod report;
pub mod gelfand;
pub mod coupling;
pub mod certify;
