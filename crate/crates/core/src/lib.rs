//! Numerical laboratory for three explicitly solvable dynamical systems whose
//! finite-time Lyapunov exponents and Birkhoff averages oscillate forever
//! between distinct limits.
//!
//! - [`ggs`]: a figure-8 tower of rectangles whose derivative cocycle is an
//!   exact product of signed powers of a single base.
//! - [`bowen`]: a flow circulating between two saddles, with passage times
//!   and closest approaches in closed form.
//! - [`colli_vargas`]: a cascade of quadratic return maps with
//!   super-exponentially growing return depths.
//! - [`numerics`]: extended-range arithmetic (log-magnitude reals and exact
//!   signed power matrices) that all three systems rely on.
//! - [`analysis`]: tail-limit estimation and oscillation detection for
//!   exponent series.

pub mod analysis;
pub mod bowen;
pub mod colli_vargas;
pub mod ggs;
pub mod numerics;

pub use analysis::{
    detect_irregular, tail_limit, AnalysisError, FtleSeries, IrregularityReport, Verdict,
    DEFAULT_GAP_TOL, DEFAULT_TAIL_FRACTION,
};
pub use bowen::{
    birkhoff_averages, birkhoff_limits, closest_approach, closest_approach_limit, flow_ftle,
    BowenError, BowenParams, BowenSchedule, BowenTrajectory,
};
pub use colli_vargas::{
    birkhoff_block_averages, build_tables, check_constants, cocycle, ftle_limits,
    squares_symbol_is_plus, BirkhoffCut, Branch, CocycleStep, ConstraintCheck, CvError,
    CvFamily, CvFtleLimits, CvFtleSeries, CvParams, CvPoint, CvTables,
};
pub use ggs::{
    cocycle_closed_form, cocycle_product, intermediate_derivative, per_return_factor, return_map,
    return_time, split_parity, theta, GgsError, GgsParams, GgsPoint, GgsSchedule,
};
pub use numerics::{vec_lognorm, LogValue, Mat2, NumericsError, SigmaPower, SpMat2, Vec2};
