//! Diagnostics over the discretisation and over completed runs.

pub mod amplification;
pub mod convergence;
pub mod dispersion;
pub mod sweep;

pub use amplification::{amplification_roots, amplification_sweep, AmplificationEntry, AmplificationReport};
pub use convergence::{convergence_order, convergence_study, relative_l2_error, ConvergenceReport, OrderFit};
pub use dispersion::{dispersion_table, modified_wavenumber, DispersionRow, ModifiedWavenumber, Scheme};
pub use sweep::{stability_sweep, StabilitySweep, SweepRow};
