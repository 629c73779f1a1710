//! Numerics for the quasilinear equation
//!
//! ```text
//! -Δ_p u - μ|x|^{-p}|u|^{p-2}u + m|u|^{p-2}u = f(u)   in R^N
//! ```
//!
//! with `1 < p < N` and `0 <= μ < ((N-p)/p)^p`: critical exponents at the
//! origin, the asymptotic expansion of `(-u'/u)^{p-1}` at infinity, radial
//! ground states by amplitude shooting, explicit barrier functions, and
//! numerical checks of the limit and bound statements on computed solutions.

pub mod barriers;
pub mod config;
pub mod error;
pub mod expansion;
pub mod exponents;
pub mod io;
pub mod ode;
pub mod params;
pub mod quadrature;
pub mod radial_ode;
pub mod verify;

pub use error::{Error, Result};
pub use expansion::{build_series, ExpansionSeries};
pub use exponents::{gamma_mu, mu_bar, solve_exponents, Exponents};
pub use params::{Nonlinearity, PowerTerm, ProblemParams};
pub use radial_ode::{find_ground_state, Chart, GroundState, RadialSolution, ShootingConfig};
