//! Search for nonzero falsifiers orthogonal to a hypothesis family.
//!
//! Hermitian `D×D` matrices are handled as real vectors of length `D²`
//! (diagonal entries, then `√2·Re` and `√2·Im` of the upper off-diagonal
//! entries), so the Euclidean inner product is the Hilbert–Schmidt one.
//! The family span `S` is built from the spanning set plus sample batches,
//! and Dykstra's method alternates between `S⊥` and the spectraplex
//! `{F ≥ 0, Tr F = 1}`.

use rand::Rng;
use serde::Serialize;

use super::family::HypothesisFamily;
use super::test::FalsificationTest;
use crate::error::{Error, Result};
use crate::linalg::{eig_hermitian, ComplexMatrix, C64};
use crate::model::{Context, Effect};

pub const DEFAULT_MAX_ITER: usize = 5000;
pub const DEFAULT_SEARCH_TOL: f64 = 1e-8;
pub const VERIFY_SAMPLES: usize = 1000;
const STABLE_BATCHES: usize = 3;
const SPAN_TOL: f64 = 1e-8;
const POLISH_STEPS: usize = 500;
const POLISH_FLOOR: f64 = 1e-14;

pub fn hermitian_to_coords(m: &ComplexMatrix) -> Vec<f64> {
    let d = m.rows();
    let s = std::f64::consts::SQRT_2;
    let mut out: Vec<f64> = (0..d).map(|j| m[(j, j)].re).collect();
    for j in 0..d {
        for k in j + 1..d {
            out.push(s * m[(j, k)].re);
            out.push(s * m[(j, k)].im);
        }
    }
    out
}

pub fn coords_to_hermitian(v: &[f64], d: usize) -> ComplexMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut m = ComplexMatrix::zeros(d, d);
    for j in 0..d {
        m[(j, j)] = C64::new(v[j], 0.0);
    }
    let mut idx = d;
    for j in 0..d {
        for k in j + 1..d {
            let z = C64::new(s * v[idx], s * v[idx + 1]);
            m[(j, k)] = z;
            m[(k, j)] = z.conj();
            idx += 2;
        }
    }
    m
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Orthonormal basis of a real subspace, grown one vector at a time.
#[derive(Clone, Debug, Default)]
pub struct RealSpan {
    pub basis: Vec<Vec<f64>>,
}

impl RealSpan {
    fn residual(&self, v: &[f64]) -> Vec<f64> {
        let mut r = v.to_vec();
        for _ in 0..2 {
            for b in &self.basis {
                let c = dot(b, &r);
                r.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
        }
        r
    }

    /// Adds `v` if it leaves the span by more than `tol` relative to its norm.
    pub fn add(&mut self, v: &[f64], tol: f64) -> bool {
        let n0 = norm(v);
        if n0 == 0.0 {
            return false;
        }
        let r = self.residual(v);
        let n = norm(&r);
        if n <= tol * n0 {
            return false;
        }
        self.basis.push(r.into_iter().map(|x| x / n).collect());
        true
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Orthogonal complement in `R^n`, completed against standard basis vectors.
    pub fn complement(&self, n: usize) -> RealSpan {
        let mut all = self.clone();
        let start = all.dim();
        for i in 0..n {
            if all.dim() == n {
                break;
            }
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            all.add(&e, 1e-8);
        }
        RealSpan { basis: all.basis.split_off(start) }
    }

    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        for b in &self.basis {
            let c = dot(b, v);
            out.iter_mut().zip(b).for_each(|(x, y)| *x += c * y);
        }
        out
    }
}

/// Euclidean projection onto the probability simplex.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (i, &u) in sorted.iter().enumerate() {
        cum += u;
        let t = (cum - 1.0) / (i + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// Projection of a Hermitian matrix onto `{F ≥ 0, Tr F = 1}`.
pub fn project_spectraplex(x: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = eig_hermitian(x)?;
    let values = project_simplex(&eig.values);
    let mut out = ComplexMatrix::zeros(x.rows(), x.cols());
    for (k, &l) in values.iter().enumerate() {
        if l > 0.0 {
            let v = eig.vector(k);
            out = &out + &ComplexMatrix::projector_onto(&v).scale_real(l);
        }
    }
    Ok(out.hermitian_part())
}

#[derive(Clone, Debug, Serialize)]
pub struct SpanReport {
    pub dim: usize,
    pub ambient_dim: usize,
    pub batches: usize,
    pub samples: usize,
}

/// HS span of the spanning set plus batches of `batch` samples, stopping once
/// the dimension is unchanged for three consecutive batches or is maximal.
pub fn family_span<R: Rng + ?Sized>(h: &HypothesisFamily, batch: usize, rng: &mut R) -> Result<(RealSpan, SpanReport)> {
    h.check()?;
    if batch == 0 {
        return Err(Error::SpanConstruction("sample batches must be nonempty".into()));
    }
    let d = h.total_dim();
    let full = d * d;
    let mut span = RealSpan::default();
    for s in h.spanning_set().unwrap_or_default() {
        span.add(&hermitian_to_coords(&s.matrix), SPAN_TOL);
    }
    let (mut batches, mut stable) = (0, 0);
    while span.dim() < full && stable < STABLE_BATCHES {
        let before = span.dim();
        for _ in 0..batch {
            span.add(&hermitian_to_coords(&h.sample(rng).matrix), SPAN_TOL);
        }
        batches += 1;
        stable = if span.dim() == before { stable + 1 } else { 0 };
    }
    if span.dim() == 0 {
        return Err(Error::SpanConstruction(format!("{} has an empty span", h.name())));
    }
    let report = SpanReport { dim: span.dim(), ambient_dim: full, batches, samples: batches * batch };
    Ok((span, report))
}

#[derive(Clone, Debug, Serialize)]
pub struct SearchOutcome {
    pub family: String,
    pub dims: Vec<usize>,
    pub span: SpanReport,
    pub iterations: usize,
    /// Iteration at which the residual first fell below the tolerance.
    pub converged_at: Option<usize>,
    pub converged: bool,
    /// Final `‖x − y‖` between the last iterates on `S⊥` and on the spectraplex.
    pub residual: f64,
    pub min_residual: f64,
    pub falsifier: Option<FalsificationTest>,
    /// Largest `Tr[Fσ]` over fresh family samples, when a falsifier was found.
    pub max_violation: Option<f64>,
    pub note: Option<String>,
}

#[derive(Clone, Copy, Debug)]
pub struct SearchConfig {
    pub batch: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub verify_samples: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self { batch: 16, tol: DEFAULT_SEARCH_TOL, max_iter: DEFAULT_MAX_ITER, verify_samples: VERIFY_SAMPLES }
    }
}

fn ncopies_note(h: &HypothesisFamily, found: bool) -> Option<String> {
    match h {
        HypothesisFamily::PurityNCopies { copies, .. } if *copies > 1 && found => Some(
            "a nonzero falsifier exists for purity when several copies are available; \
             this disagrees with the unfalsifiability claim for N > 1 copies"
                .into(),
        ),
        _ => None,
    }
}

/// Dykstra alternating projections between `S⊥` and the spectraplex.
pub fn falsifier_search<R: Rng + ?Sized>(h: &HypothesisFamily, cfg: SearchConfig, rng: &mut R) -> Result<SearchOutcome> {
    let (span, span_report) = family_span(h, cfg.batch, rng)?;
    let d = h.total_dim();
    let perp = span.complement(d * d);
    let to_coords = |m: &ComplexMatrix| hermitian_to_coords(m);

    let mut x = perp.project(&to_coords(&ComplexMatrix::identity(d).scale_real(1.0 / d as f64)));
    let mut p = vec![0.0; d * d];
    let mut y = vec![0.0; d * d];
    let (mut residual, mut min_residual) = (f64::INFINITY, f64::INFINITY);
    let mut iterations = 0;
    let mut converged_at = None;
    let mut last = f64::INFINITY;
    while iterations < cfg.max_iter {
        iterations += 1;
        let shifted: Vec<f64> = x.iter().zip(&p).map(|(a, b)| a + b).collect();
        y = to_coords(&project_spectraplex(&coords_to_hermitian(&shifted, d))?);
        p = shifted.iter().zip(&y).map(|(a, b)| a - b).collect();
        x = perp.project(&y);
        residual = norm(&x.iter().zip(&y).map(|(a, b)| a - b).collect::<Vec<_>>());
        min_residual = min_residual.min(residual);
        match converged_at {
            None if residual < cfg.tol => converged_at = Some(iterations),
            // keep polishing past the tolerance while it still pays off
            Some(at) if residual <= POLISH_FLOOR || residual > 0.99 * last || iterations - at >= POLISH_STEPS => break,
            _ => {}
        }
        last = residual;
    }
    let converged = converged_at.is_some();

    let mut outcome = SearchOutcome {
        family: h.name(),
        dims: h.dims(),
        span: span_report,
        iterations,
        converged_at,
        converged,
        residual,
        min_residual,
        falsifier: None,
        max_violation: None,
        note: None,
    };
    if !converged {
        outcome.note = Some(format!("no falsifier found up to residual {residual:.3e}"));
        return Ok(outcome);
    }

    let y = coords_to_hermitian(&y, d);
    let top = eig_hermitian(&y)?.max();
    let f = y.scale_real(1.0 / top);
    let effect = Effect::new_with(h.system(), f, &Context::default())?;
    let max_violation = (0..cfg.verify_samples)
        .map(|_| effect.probability(&h.sample(rng)))
        .try_fold(0.0f64, |m, p| p.map(|p| m.max(p)))?;
    outcome.max_violation = Some(max_violation);
    if max_violation > 10.0 * cfg.tol {
        outcome.note = Some(format!("candidate rejected: fires with probability {max_violation:.3e} on a family member"));
        return Ok(outcome);
    }
    outcome.falsifier = Some(FalsificationTest::new(h.name(), effect, &Context::default())?);
    outcome.note = ncopies_note(h, true);
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{random_hermitian, seeded_rng, Subspace};

    #[test]
    fn coordinates_preserve_hs_inner_product() {
        let mut rng = seeded_rng(0);
        let a = random_hermitian(4, &mut rng);
        let b = random_hermitian(4, &mut rng);
        let ip = dot(&hermitian_to_coords(&a), &hermitian_to_coords(&b));
        assert!((ip - a.hs_inner(&b).re).abs() < 1e-12);
        assert!(coords_to_hermitian(&hermitian_to_coords(&a), 4).max_abs_diff(&a) < 1e-15);
    }

    #[test]
    fn simplex_projection() {
        assert_eq!(project_simplex(&[2.0, 0.0, 0.0, 0.0]), vec![1.0, 0.0, 0.0, 0.0]);
        let lifted = project_simplex(&[0.25, 0.0, 0.0, 0.0]);
        assert!((lifted[0] - 0.4375).abs() < 1e-15 && (lifted[1] - 0.1875).abs() < 1e-15);
        let p = project_simplex(&[0.5, 0.5, -1.0]);
        assert!((p[0] - 0.5).abs() < 1e-15 && p[2] == 0.0);
        let q = project_simplex(&[2.0, 1.0]);
        assert!((q[0] - 1.0).abs() < 1e-15 && q[1] == 0.0);
        let u = project_simplex(&[-0.25; 4]);
        assert!(u.iter().all(|&x| (x - 0.25).abs() < 1e-15));
    }

    #[test]
    fn purity_span_is_full_and_search_fails() {
        let mut rng = seeded_rng(1);
        let h = HypothesisFamily::Purity { dim: 2 };
        let out = falsifier_search(&h, SearchConfig::default(), &mut rng).unwrap();
        assert_eq!(out.span.dim, 4);
        assert!(!out.converged && out.falsifier.is_none());
        assert!((out.min_residual - 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn two_copy_search_finds_singlet() {
        let mut rng = seeded_rng(2);
        let h = HypothesisFamily::PurityNCopies { dim: 2, copies: 2 };
        let out = falsifier_search(&h, SearchConfig::default(), &mut rng).unwrap();
        assert_eq!(out.span.dim, 9);
        let f = out.falsifier.as_ref().expect("falsifier");
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let singlet = ComplexMatrix::column(&[C64::new(0.0, 0.0), C64::new(s, 0.0), C64::new(-s, 0.0), C64::new(0.0, 0.0)]);
        assert!(f.falsifier.matrix.hs_distance(&ComplexMatrix::projector_onto(&singlet)) < 1e-6);
        assert!(out.max_violation.unwrap() <= 1e-8);
        assert!(out.note.is_some());
    }

    #[test]
    fn support_search_matches_support_falsifier() {
        let mut rng = seeded_rng(3);
        let h = HypothesisFamily::StateSupport { support: Subspace::coordinate(2, &[0]).unwrap() };
        let out = falsifier_search(&h, SearchConfig::default(), &mut rng).unwrap();
        let f = out.falsifier.unwrap().falsifier.matrix;
        assert!(f.max_abs_diff(&ComplexMatrix::diag_real(&[0.0, 1.0])) < 1e-8);
    }

    #[test]
    fn max_entangled_search_fails() {
        let mut rng = seeded_rng(4);
        let h = HypothesisFamily::MaxEntangled { dim_a: 2, dim_b: 2 };
        let out = falsifier_search(&h, SearchConfig::default(), &mut rng).unwrap();
        assert_eq!(out.span.dim, 10);
        assert!(out.falsifier.is_none());
        assert!(out.min_residual > 1e-8);
    }

    #[test]
    fn zero_batch_is_rejected() {
        let h = HypothesisFamily::Purity { dim: 2 };
        assert!(family_span(&h, 0, &mut seeded_rng(0)).is_err());
    }
}
