//! Sharp, limiting, exponential and empirical complexities, the Gaussian
//! ball function of the linear model, codimension estimates and the
//! one-slope-change bounds.

pub mod codim;
pub mod estimate;
pub mod family;
pub mod one_change;
pub mod qfunc;
pub mod sharp;
pub mod smooth;

pub use codim::{codim_estimate, dist_to_representation_set, hyperbola_distance, CodimEstimate, CodimQuery, CodimSampler};
pub use estimate::{fit_slope, ComplexityEstimate, EstimateFlag, Method, SlopeEstimate, DEFAULT_EPS_GRID};
pub use family::{Family, LinearFamily, ShallowFamily, Window};
pub use one_change::{one_change_bounds, product_density_claimed, product_density_kde, OneChangeReport};
pub use qfunc::{ball_probability, linear_sharp_closed_form, q_closed_form};
pub use sharp::{
    limiting_complexity, sharp_complexity_is, sharp_complexity_mc, sharp_noisy_mc, sharp_with_noise, DEFAULT_CLOUD_SCALE,
};
pub use smooth::{
    empirical_complexity_mc, exponential_complexity_linear_exact, exponential_complexity_mc, megaineq_sides,
    true_complexity_with_noise_mc,
};
