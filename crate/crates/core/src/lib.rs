//! Numerical laboratory for two-dimensional semilinear wave systems `□u = F(∂u)`.
//!
//! * [`nonlinearity`]: quadratic/cubic coefficient tensors and their reduced forms.
//! * [`conditions`]: null conditions, weighted dissipation conditions and constants.
//! * [`profile_ode`]: profile equations along characteristic rays.
//! * [`wave_solver`]: explicit finite-difference solver with observers.
//! * [`diagnostics`]: ghost-weight energy balance and decay reports.
//! * [`io`] and [`cli`]: configuration files, output formats and commands.

pub mod cli;
pub mod conditions;
pub mod diagnostics;
pub mod io;
pub mod nonlinearity;
pub mod profile_ode;
pub mod quadrature;
pub mod trig;
pub mod wave_solver;
