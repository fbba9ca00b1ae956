use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, Subspace};
use crate::model::{Context, Effect, State, System};

/// Binary observation test `{F, F? = I − F}`.
#[derive(Clone, Debug, Serialize)]
pub struct FalsificationTest {
    /// Hypothesis this test is meant to falsify.
    pub hypothesis: String,
    pub falsifier: Effect,
    pub inconclusive: Effect,
}

impl FalsificationTest {
    /// Wraps `F`, requiring it to be a nonzero effect (an effective test).
    pub fn new(hypothesis: impl Into<String>, falsifier: Effect, ctx: &Context) -> Result<Self> {
        if falsifier.matrix.frobenius_norm() <= ctx.tol {
            return Err(Error::NoEffectiveFalsifier);
        }
        let inconclusive = Effect::new_with(falsifier.system.clone(), falsifier.complement().matrix, ctx)?;
        Ok(Self { hypothesis: hypothesis.into(), falsifier, inconclusive })
    }

    pub fn system(&self) -> &System {
        &self.falsifier.system
    }
}

/// Optimal falsifier of `Supp ρ = K`: the projector onto `K⊥`.
pub fn support_falsifier(system: System, k: &Subspace) -> Result<FalsificationTest> {
    if k.ambient_dim != system.dim {
        return Err(Error::DimensionMismatch(format!(
            "subspace of C^{} for system {system}",
            k.ambient_dim
        )));
    }
    if k.dim() >= k.ambient_dim {
        return Err(Error::NoEffectiveFalsifier);
    }
    let f = Effect::new(system, k.complement().projector())?;
    FalsificationTest::new(format!("support = span of {} vectors", k.dim()), f, &Context::default())
}

/// `Tr[F σ]`.
pub fn falsification_chance(t: &FalsificationTest, sigma: &State) -> Result<f64> {
    Ok(t.falsifier.probability(sigma)?.clamp(0.0, 1.0))
}

/// Merges all falsifiers into one falsifier and all inconclusive events into
/// one inconclusive event. The listed effects must sum to the identity.
pub fn coarse_grain(falsifiers: &[Effect], inconclusives: &[Effect], ctx: &Context) -> Result<FalsificationTest> {
    let Some(first) = falsifiers.first().or(inconclusives.first()) else {
        return Err(Error::InvalidArgument("no effects to coarse-grain".into()));
    };
    let system = first.system.clone();
    if let Some(e) = falsifiers.iter().chain(inconclusives).find(|e| e.system != system) {
        return Err(Error::SystemMismatch { expected: system.to_string(), found: e.system.to_string() });
    }
    let sum = |list: &[Effect]| {
        list.iter().fold(ComplexMatrix::zeros(system.dim, system.dim), |acc, e| &acc + &e.matrix)
    };
    let f = sum(falsifiers);
    let q = sum(inconclusives);
    let residual = (&f + &q).max_abs_diff(&ComplexMatrix::identity(system.dim));
    if residual > ctx.tol {
        return Err(Error::NotComplete { residual });
    }
    let falsifier = Effect::new_with(system.clone(), f, ctx)?;
    let t = FalsificationTest::new("coarse-grained", falsifier, ctx)?;
    Ok(FalsificationTest { inconclusive: Effect::new_with(system, q, ctx)?, ..t })
}

/// If `Hyp₁ ⇒ Hyp₂`, a falsifier of `Hyp₂` falsifies `Hyp₁`. The
/// implication is the caller's responsibility; the effect is unchanged.
pub fn modus_tollens_transfer(f: &FalsificationTest, stronger_hypothesis: impl Into<String>) -> FalsificationTest {
    FalsificationTest { hypothesis: stronger_hypothesis.into(), ..f.clone() }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct TrialCounts {
    pub falsified: usize,
    pub inconclusive: usize,
}

/// Runs `n` independent rounds of the test on `truth`.
pub fn simulate_trials<R: Rng + ?Sized>(
    t: &FalsificationTest,
    truth: &State,
    n: usize,
    rng: &mut R,
) -> Result<TrialCounts> {
    if !truth.is_deterministic(&Context::default()) {
        return Err(Error::InvalidState("trials need a unit-trace state".into()));
    }
    let p = falsification_chance(t, truth)?;
    let falsified = (0..n).filter(|_| rng.random::<f64>() < p).count();
    Ok(TrialCounts { falsified, inconclusive: n - falsified })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{random_density, seeded_rng};

    fn qubit() -> System {
        System::new("A", 2).unwrap()
    }

    #[test]
    fn support_falsifier_is_complement_projector() {
        let k = Subspace::coordinate(2, &[0]).unwrap();
        let t = support_falsifier(qubit(), &k).unwrap();
        assert!(t.falsifier.matrix.max_abs_diff(&ComplexMatrix::diag_real(&[0.0, 1.0])) < 1e-15);
        let sigma = State::maximally_mixed(qubit());
        assert!((falsification_chance(&t, &sigma).unwrap() - 0.5).abs() < 1e-15);
        let inside = State::pure(qubit(), &ComplexMatrix::basis_vector(2, 0)).unwrap();
        assert_eq!(falsification_chance(&t, &inside).unwrap(), 0.0);
    }

    #[test]
    fn full_support_has_no_effective_falsifier() {
        let err = support_falsifier(qubit(), &Subspace::full(2)).unwrap_err();
        assert_eq!(err, Error::NoEffectiveFalsifier);
    }

    #[test]
    fn chance_of_complement_on_maximally_mixed() {
        let sys = System::new("A", 5).unwrap();
        let k = Subspace::coordinate(5, &[0, 3]).unwrap();
        let t = support_falsifier(sys.clone(), &k).unwrap();
        let p = falsification_chance(&t, &State::maximally_mixed(sys)).unwrap();
        assert!((p - (1.0 - 2.0 / 5.0)).abs() < 1e-15);
    }

    #[test]
    fn coarse_graining_adds_chances() {
        let sys = System::new("A", 3).unwrap();
        let e = |v: [f64; 3]| Effect::new(sys.clone(), ComplexMatrix::diag_real(&v)).unwrap();
        let f1 = e([0.0, 1.0, 0.0]);
        let f2 = e([0.0, 0.0, 1.0]);
        let q = e([1.0, 0.0, 0.0]);
        let ctx = Context::default();
        let t = coarse_grain(&[f1.clone(), f2.clone()], std::slice::from_ref(&q), &ctx).unwrap();
        assert!(t.falsifier.matrix.max_abs_diff(&ComplexMatrix::diag_real(&[0.0, 1.0, 1.0])) < 1e-15);
        let mut rng = seeded_rng(2);
        for _ in 0..10 {
            let sigma = State::new(sys.clone(), random_density(3, &mut rng)).unwrap();
            let sum = f1.probability(&sigma).unwrap() + f2.probability(&sigma).unwrap();
            assert!((falsification_chance(&t, &sigma).unwrap() - sum).abs() <= 1e-12);
        }
        assert!(matches!(coarse_grain(&[f1], &[q], &ctx), Err(Error::NotComplete { .. })));
    }

    #[test]
    fn binary_test_coarse_grains_to_itself() {
        let f = Effect::new(qubit(), ComplexMatrix::diag_real(&[0.0, 1.0])).unwrap();
        let q = Effect::new(qubit(), ComplexMatrix::diag_real(&[1.0, 0.0])).unwrap();
        let t = coarse_grain(std::slice::from_ref(&f), &[q], &Context::default()).unwrap();
        assert_eq!(t.falsifier.matrix, f.matrix);
    }

    #[test]
    fn modus_tollens_keeps_effect() {
        let k = Subspace::coordinate(3, &[0, 1]).unwrap();
        let sys = System::new("A", 3).unwrap();
        let t = support_falsifier(sys.clone(), &k).unwrap();
        let t1 = modus_tollens_transfer(&t, "support = span{|0>}");
        assert_eq!(t1.falsifier, t.falsifier);
        assert_eq!(t1.hypothesis, "support = span{|0>}");
        let rho = State::pure(sys, &ComplexMatrix::basis_vector(3, 0)).unwrap();
        assert_eq!(falsification_chance(&t1, &rho).unwrap(), 0.0);
    }

    #[test]
    fn trials_follow_the_chance() {
        let k = Subspace::coordinate(2, &[0]).unwrap();
        let t = support_falsifier(qubit(), &k).unwrap();
        let inside = State::pure(qubit(), &ComplexMatrix::basis_vector(2, 0)).unwrap();
        let mut rng = seeded_rng(11);
        assert_eq!(simulate_trials(&t, &inside, 1000, &mut rng).unwrap().falsified, 0);
        let half = State::maximally_mixed(qubit());
        let c = simulate_trials(&t, &half, 10_000, &mut rng).unwrap();
        assert_eq!(c.falsified + c.inconclusive, 10_000);
        assert!((4800..=5200).contains(&c.falsified));
        let again = simulate_trials(&t, &half, 10_000, &mut seeded_rng(11)).unwrap();
        let first = simulate_trials(&t, &half, 10_000, &mut seeded_rng(11)).unwrap();
        assert_eq!(again, first);
    }
}
