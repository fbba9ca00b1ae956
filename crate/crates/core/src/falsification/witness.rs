//! Average-state witnesses of unfalsifiability.
//!
//! If the family average `μ` has full rank, a PSD `F` with `Tr[Fσ] = 0` for
//! every member also has `Tr[Fμ] = 0`, hence `F = 0`.

use serde::Serialize;

use super::family::HypothesisFamily;
use super::test::{support_falsifier, FalsificationTest};
use crate::error::{Error, Result};
use crate::linalg::{lambda_min, SeededRng};
use crate::model::{State, System};
use crate::parallel::parallel_mean;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AverageMethod {
    Analytic,
    MonteCarlo { samples: usize, seed: u64, threads: usize },
}

/// Family average, either in closed form or as a reproducible empirical mean.
pub fn family_average(h: &HypothesisFamily, method: AverageMethod) -> Result<State> {
    h.check()?;
    match method {
        AverageMethod::Analytic => h.analytic_average().ok_or_else(|| Error::NoAnalyticForm(h.name())),
        AverageMethod::MonteCarlo { samples, seed, threads } => {
            if samples == 0 {
                return Err(Error::InvalidArgument("Monte Carlo average needs at least one sample".into()));
            }
            let mean = parallel_mean(samples, seed, threads, |rng: &mut SeededRng| h.sample(rng).matrix);
            Ok(State { system: h.system(), matrix: mean.hermitian_part() })
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct WitnessVerdict {
    pub family: String,
    pub average_state: State,
    pub lambda_min: f64,
    /// `λ_min` of the family average without the `1/d` twirl normalization.
    pub lambda_min_unnormalized: f64,
    pub unfalsifiable: bool,
    pub method: AverageMethod,
    /// For marginal-of-pure families with a rank-deficient marginal, the
    /// optimal falsifier of its support on the first factor.
    pub support_falsifier: Option<FalsificationTest>,
}

/// Factor by which the normalized twirl shrinks the family average.
fn twirl_normalization(h: &HypothesisFamily) -> f64 {
    match h {
        HypothesisFamily::MaxEntangled { dim_a, dim_b } => (dim_a * dim_b) as f64,
        HypothesisFamily::IsometricTransformation { dim_in, dim_out } => (dim_in * dim_out) as f64,
        HypothesisFamily::MarginalOfPure { env_dim, .. } => *env_dim as f64,
        _ => 1.0,
    }
}

pub fn witness_unfalsifiable(h: &HypothesisFamily, method: AverageMethod, tol: f64) -> Result<WitnessVerdict> {
    let average_state = family_average(h, method)?;
    let lmin = lambda_min(&average_state.matrix)?;
    let support_falsifier = match (h, h.deficient_support()) {
        (HypothesisFamily::MarginalOfPure { rho, .. }, Some(k)) => {
            let sys = System { label: rho.system.label.clone(), dim: rho.system.dim };
            Some(support_falsifier(sys, &k)?)
        }
        _ => None,
    };
    Ok(WitnessVerdict {
        family: h.name(),
        average_state,
        lambda_min: lmin,
        lambda_min_unnormalized: lmin * twirl_normalization(h),
        unfalsifiable: lmin > tol,
        method,
        support_falsifier,
    })
}
