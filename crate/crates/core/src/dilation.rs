//! Double-ket vectorization, purification, maximally entangled states and
//! Stinespring dilation of instruments.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{
    complete_orthonormal, eig_hermitian, kron, partial_trace, sqrt_psd, ComplexMatrix, ONE,
};
use crate::model::{Context, Effect, Instrument, QuantumOperation, State, System};

/// `|M⟩⟩ = Σ M[n,m] |n⟩⊗|m⟩`; row index is the first tensor factor.
pub fn double_ket(m: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix::column(m.data())
}

/// Inverse of [`double_ket`] for a `rows × cols` matrix.
pub fn unvec(v: &ComplexMatrix, rows: usize, cols: usize) -> ComplexMatrix {
    assert_eq!(v.rows() * v.cols(), rows * cols, "unvec size mismatch");
    ComplexMatrix::new(rows, cols, v.data().to_vec()).expect("entries already validated")
}

/// Unit-trace maximally entangled state `|V⟩⟩⟨⟨V| / d_B` for an isometry
/// `V: B → A`. The state lives on `A ⊗ B`.
pub fn max_entangled_from_isometry(v: &ComplexMatrix, a: System, b: System, tol: f64) -> Result<State> {
    if v.shape() != (a.dim, b.dim) {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} isometry for systems {a} and {b}",
            v.rows(),
            v.cols()
        )));
    }
    if a.dim < b.dim {
        return Err(Error::InvalidArgument(format!("need d_A >= d_B, got {} < {}", a.dim, b.dim)));
    }
    let residual = v.isometry_residual();
    if residual > tol {
        return Err(Error::NotIsometry { residual });
    }
    let ket = double_ket(v);
    let matrix = ComplexMatrix::projector_onto(&ket).scale_real(1.0 / b.dim as f64);
    State::new_with(System::composite(&[a, b]), matrix, &Context::new(tol.max(Context::DEFAULT_TOL)))
}

/// Recovers `V` (global phase canonicalized) from a maximally entangled
/// state on `A ⊗ B` with `dims = (d_A, d_B)`.
pub fn isometry_from_max_entangled(s: &State, dims: (usize, usize), tol: f64) -> Result<ComplexMatrix> {
    let (da, db) = dims;
    if s.matrix.rows() != da * db {
        return Err(Error::DimensionMismatch(format!("{}-dimensional state for dims {dims:?}", s.matrix.rows())));
    }
    let eig = eig_hermitian(&s.matrix)?;
    let second = eig.values.get(1).copied().unwrap_or(0.0);
    if second > tol {
        return Err(Error::NotRankOne { second });
    }
    let marginal = partial_trace(&s.matrix, &[da, db], &[1])?;
    let residual = marginal.max_abs_diff(&ComplexMatrix::identity(db).scale_real(1.0 / db as f64));
    if residual > tol {
        return Err(Error::NotMaxEntangled { residual });
    }
    let scale = (eig.max() * db as f64).sqrt();
    let v = unvec(&eig.vector(0), da, db).scale_real(scale);
    Ok(v.canonical_phase(1e-9))
}

/// A rank-one state on `A ⊗ E` whose `E`-marginal is the purified state.
#[derive(Clone, Debug, Serialize)]
pub struct PurificationResult {
    pub pure_state: State,
    pub environment: System,
    /// `W: A → E` applied to the second factor of `|ρ^{1/2}⟩⟩`.
    pub isometry_used: ComplexMatrix,
    /// Square roots of the eigenvalues of ρ, descending.
    pub schmidt_coefficients: Vec<f64>,
}

/// Purification with an environment of the same dimension as the system.
pub fn purify(rho: &State) -> Result<PurificationResult> {
    let env = System::new("E", rho.system.dim)?;
    purify_with_env(rho, env)
}

/// `(I_A ⊗ W)|ρ^{1/2}⟩⟩`. For `d_E ≥ d_A`, `W` embeds `A` into the first
/// basis vectors of `E`; for `rank ρ ≤ d_E < d_A`, `W` is isometric on the
/// support of `ρ̄` only.
pub fn purify_with_env(rho: &State, env: System) -> Result<PurificationResult> {
    let ctx = Context::default();
    if !rho.is_deterministic(&ctx) {
        return Err(Error::InvalidState(format!("purification needs unit trace, got {}", rho.trace())));
    }
    let da = rho.system.dim;
    let eig = eig_hermitian(&rho.matrix)?;
    let rank = eig.values.iter().filter(|&&l| l > ctx.tol).count();
    if env.dim < rank {
        return Err(Error::EnvironmentTooSmall { env_dim: env.dim, rank });
    }
    let w = if env.dim >= da {
        ComplexMatrix::from_fn(env.dim, da, |i, j| if i == j { ONE } else { crate::linalg::ZERO })
    } else {
        let mut w = ComplexMatrix::zeros(env.dim, da);
        for k in 0..rank {
            let v = eig.vector(k);
            for j in 0..da {
                // row k of W is ⟨v̄_k| = v_kᵀ
                w[(k, j)] = v[(j, 0)];
            }
        }
        w
    };
    let root = sqrt_psd(&rho.matrix, ctx.tol)?;
    let ket = double_ket(&root.matmul(&w.transpose()));
    let pure_state = State::new(System::composite(&[rho.system.clone(), env.clone()]), ComplexMatrix::projector_onto(&ket))?;
    let schmidt_coefficients = eig.values.iter().map(|&l| l.max(0.0).sqrt()).collect();
    Ok(PurificationResult { pure_state, environment: env, isometry_used: w, schmidt_coefficients })
}

/// Unitary realization `T_i ρ = Tr_E[U(ρ⊗σ)U†(I_B⊗Z_i)]` of an instrument.
#[derive(Clone, Debug)]
pub struct DilationResult {
    pub input: System,
    pub output: System,
    pub ancilla: System,
    pub environment: System,
    /// Maps `A ⊗ F` onto `B ⊗ E`.
    pub unitary: ComplexMatrix,
    pub ancilla_state: State,
    pub pvm: Vec<Effect>,
    /// `(outcome, kraus_index)` for each environment basis vector. Indices at
    /// or beyond the outcome's Kraus count are padding.
    pub block_map: Vec<(usize, usize)>,
}

#[derive(Serialize)]
struct DilationRepr<'a> {
    unitary: &'a ComplexMatrix,
    ancilla_dim: usize,
    ancilla_state: &'a ComplexMatrix,
    pvm: Vec<&'a ComplexMatrix>,
    block_map: Vec<[usize; 2]>,
}

impl Serialize for DilationResult {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        DilationRepr {
            unitary: &self.unitary,
            ancilla_dim: self.ancilla.dim,
            ancilla_state: &self.ancilla_state.matrix,
            pvm: self.pvm.iter().map(|e| &e.matrix).collect(),
            block_map: self.block_map.iter().map(|&(i, k)| [i, k]).collect(),
        }
        .serialize(s)
    }
}

impl DilationResult {
    /// Same dilation with a different PVM on the environment.
    pub fn with_pvm(&self, pvm: Vec<Effect>) -> Self {
        Self { pvm, ..self.clone() }
    }
}

/// Stacks every Kraus operator into an isometry `A → B ⊗ E`, completes it to
/// a unitary on `A ⊗ F` and reads off the outcome blocks of `E` as a PVM.
pub fn stinespring_dilate(inst: &Instrument) -> Result<DilationResult> {
    let a = inst.input().clone();
    let b = inst.output().clone();
    let mut block_map = Vec::new();
    let mut kraus = Vec::new();
    for (i, (_, op)) in inst.outcomes().iter().enumerate() {
        for (k, kr) in op.kraus().iter().enumerate() {
            block_map.push((i, k));
            kraus.push(kr);
        }
    }
    let used = kraus.len();
    let mut de = used.max(1);
    while !(b.dim * de).is_multiple_of(a.dim) {
        de += 1;
    }
    let last = inst.len() - 1;
    let last_count = inst.operation(last).map_or(0, |op| op.kraus().len());
    for j in 0..de - used {
        block_map.push((last, last_count + j));
    }
    let df = b.dim * de / a.dim;
    let total = a.dim * df;

    let mut w = ComplexMatrix::zeros(b.dim * de, a.dim);
    for (e, kr) in kraus.iter().enumerate() {
        for bb in 0..b.dim {
            for aa in 0..a.dim {
                w[(bb * de + e, aa)] = kr[(bb, aa)];
            }
        }
    }
    if w.isometry_residual() > 1e-14 {
        // polar correction removes the instrument's normalization slack
        let gram = w.adjoint().matmul(&w);
        let inv_root = eig_hermitian(&gram)?.reconstruct_with(|l| 1.0 / l.sqrt());
        w = w.matmul(&inv_root);
    }
    let completed = complete_orthonormal(&w, total);
    if completed.cols() != total {
        return Err(Error::InvalidInstrument("could not complete the Stinespring isometry".into()));
    }
    let mut unitary = ComplexMatrix::zeros(total, total);
    let mut extra = a.dim;
    for col in 0..total {
        let src = if col % df == 0 {
            col / df
        } else {
            let s = extra;
            extra += 1;
            s
        };
        for row in 0..total {
            unitary[(row, col)] = completed[(row, src)];
        }
    }

    let ancilla = System::new("F", df)?;
    let environment = System::new("E", de)?;
    let ancilla_state = State::pure(ancilla.clone(), &ComplexMatrix::basis_vector(df, 0))?;
    let pvm = (0..inst.len())
        .map(|i| {
            let diag: Vec<f64> = block_map.iter().map(|&(o, _)| if o == i { 1.0 } else { 0.0 }).collect();
            Effect::new(environment.clone(), ComplexMatrix::diag_real(&diag))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DilationResult { input: a, output: b, ancilla, environment, unitary, ancilla_state, pvm, block_map })
}

/// `Tr_E[U(X⊗σ)U†(I_B⊗Z)]` for a raw operator `X` on the input.
pub fn dilated_map(d: &DilationResult, z: &Effect, x: &ComplexMatrix) -> Result<ComplexMatrix> {
    let lifted = kron(x, &d.ancilla_state.matrix);
    let evolved = d.unitary.conjugate(&lifted);
    let meter = kron(&ComplexMatrix::identity(d.output.dim), &z.matrix);
    partial_trace(&evolved.matmul(&meter), &[d.output.dim, d.environment.dim], &[0])
}

/// Evaluates the dilation formula on the basis `|a⟩⟨a'|` of input operators
/// to rebuild each outcome's Choi matrix.
pub fn instrument_from_dilation(d: &DilationResult, input: &System) -> Result<Instrument> {
    if input.dim != d.input.dim
        || d.unitary.shape() != (d.output.dim * d.environment.dim, d.input.dim * d.ancilla.dim)
        || d.output.dim * d.environment.dim != d.input.dim * d.ancilla.dim
    {
        return Err(Error::DimensionMismatch("dilation dimensions are inconsistent".into()));
    }
    if d.pvm.iter().any(|z| z.matrix.rows() != d.environment.dim) {
        return Err(Error::DimensionMismatch("PVM element does not act on the environment".into()));
    }
    let ctx = Context::default();
    let da = input.dim;
    let db = d.output.dim;
    let mut outcomes = Vec::with_capacity(d.pvm.len());
    for (i, z) in d.pvm.iter().enumerate() {
        let mut choi = ComplexMatrix::zeros(db * da, db * da);
        for a in 0..da {
            for a2 in 0..da {
                let mut unit = ComplexMatrix::zeros(da, da);
                unit[(a, a2)] = ONE;
                let image = dilated_map(d, z, &unit)?;
                for r in 0..db {
                    for c in 0..db {
                        choi[(r * da + a, c * da + a2)] += image[(r, c)];
                    }
                }
            }
        }
        let op = QuantumOperation::from_choi(input.clone(), d.output.clone(), choi, &ctx)?;
        outcomes.push((i.to_string(), op));
    }
    Instrument::new_with(outcomes, &ctx)
}

/// Dilates `inst`, rebuilds it from the dilation and returns the largest
/// per-outcome Choi HS distance.
pub fn dilation_round_trip(inst: &Instrument) -> Result<(DilationResult, f64)> {
    let d = stinespring_dilate(inst)?;
    let rebuilt = instrument_from_dilation(&d, inst.input())?;
    let err = inst
        .outcomes()
        .iter()
        .zip(rebuilt.outcomes())
        .map(|((_, a), (_, b))| a.choi().hs_distance(b.choi()))
        .fold(0.0, f64::max);
    Ok((d, err))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{C64, ZERO};

    fn bell() -> ComplexMatrix {
        let s = 0.5f64.sqrt();
        ComplexMatrix::projector_onto(&ComplexMatrix::column(&[C64::new(s, 0.0), ZERO, ZERO, C64::new(s, 0.0)]))
    }

    #[test]
    fn double_ket_examples() {
        let v = double_ket(&ComplexMatrix::identity(2).scale_real(0.5f64.sqrt()));
        assert!(ComplexMatrix::projector_onto(&v).max_abs_diff(&bell()) < 1e-15);
        let mut m = ComplexMatrix::zeros(2, 2);
        m[(0, 1)] = ONE;
        let k = double_ket(&m);
        assert_eq!(k, kron(&ComplexMatrix::basis_vector(2, 0), &ComplexMatrix::basis_vector(2, 1)));
    }

    #[test]
    fn identity_isometry_gives_bell_state() {
        let a = System::new("A", 2).unwrap();
        let b = System::new("B", 2).unwrap();
        let s = max_entangled_from_isometry(&ComplexMatrix::identity(2), a, b, 1e-10).unwrap();
        assert!(s.matrix.max_abs_diff(&bell()) < 1e-15);
        let v = isometry_from_max_entangled(&s, (2, 2), 1e-9).unwrap();
        assert!(v.max_abs_diff(&ComplexMatrix::identity(2)) < 1e-12);
    }

    #[test]
    fn stacked_isometry_marginals() {
        let v = ComplexMatrix::from_real(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]).unwrap();
        let s = max_entangled_from_isometry(&v, System::new("A", 3).unwrap(), System::new("B", 2).unwrap(), 1e-10).unwrap();
        let mb = partial_trace(&s.matrix, &[3, 2], &[1]).unwrap();
        let ma = partial_trace(&s.matrix, &[3, 2], &[0]).unwrap();
        assert!(mb.max_abs_diff(&ComplexMatrix::diag_real(&[0.5, 0.5])) < 1e-15);
        assert!(ma.max_abs_diff(&ComplexMatrix::diag_real(&[0.5, 0.5, 0.0])) < 1e-15);
    }

    #[test]
    fn non_isometry_and_product_state_rejected() {
        let a = System::new("A", 2).unwrap();
        let v = ComplexMatrix::diag_real(&[1.0, 0.5]);
        assert!(matches!(max_entangled_from_isometry(&v, a.clone(), a.clone(), 1e-10), Err(Error::NotIsometry { .. })));
        let prod = State::pure(System::new("AB", 4).unwrap(), &ComplexMatrix::basis_vector(4, 0)).unwrap();
        assert!(matches!(isometry_from_max_entangled(&prod, (2, 2), 1e-9), Err(Error::NotMaxEntangled { .. })));
        let mixed = State::maximally_mixed(System::new("AB", 4).unwrap());
        assert!(matches!(isometry_from_max_entangled(&mixed, (2, 2), 1e-9), Err(Error::NotRankOne { .. })));
    }

    #[test]
    fn purify_maximally_mixed_is_bell() {
        let rho = State::maximally_mixed(System::new("A", 2).unwrap());
        let p = purify(&rho).unwrap();
        assert!(p.pure_state.matrix.max_abs_diff(&bell()) <= 1e-14);
    }

    #[test]
    fn purify_reports_schmidt_coefficients() {
        let rho = State::new(System::new("A", 2).unwrap(), ComplexMatrix::diag_real(&[0.64, 0.36])).unwrap();
        let p = purify(&rho).unwrap();
        assert!((p.schmidt_coefficients[0] - 0.8).abs() < 1e-15);
        assert!((p.schmidt_coefficients[1] - 0.6).abs() < 1e-15);
        let marg = partial_trace(&p.pure_state.matrix, &[2, 2], &[0]).unwrap();
        assert!(marg.max_abs_diff(&rho.matrix) < 1e-15);
    }

    #[test]
    fn purify_small_environment() {
        let rho = State::new(System::new("A", 3).unwrap(), ComplexMatrix::diag_real(&[0.5, 0.0, 0.5])).unwrap();
        let p = purify_with_env(&rho, System::new("E", 2).unwrap()).unwrap();
        let marg = partial_trace(&p.pure_state.matrix, &[3, 2], &[0]).unwrap();
        assert!(marg.max_abs_diff(&rho.matrix) < 1e-14);
        let err = purify_with_env(&rho, System::new("E", 1).unwrap()).unwrap_err();
        assert_eq!(err, Error::EnvironmentTooSmall { env_dim: 1, rank: 2 });
    }

    #[test]
    fn measurement_instrument_dilates_to_cnot() {
        let a = System::new("A", 2).unwrap();
        let p0 = QuantumOperation::new(a.clone(), a.clone(), vec![ComplexMatrix::diag_real(&[1.0, 0.0])]).unwrap();
        let p1 = QuantumOperation::new(a.clone(), a.clone(), vec![ComplexMatrix::diag_real(&[0.0, 1.0])]).unwrap();
        let inst = Instrument::from_operations(vec![p0, p1]).unwrap();
        let d = stinespring_dilate(&inst).unwrap();
        let cnot = ComplexMatrix::from_real(
            4,
            4,
            &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0],
        )
        .unwrap();
        assert_eq!(d.unitary, cnot);
        assert_eq!(d.block_map, vec![(0, 0), (1, 0)]);
        let back = instrument_from_dilation(&d, &a).unwrap();
        for i in 0..2 {
            let orig = inst.operation(i).unwrap().choi();
            assert!(back.operation(i).unwrap().choi().hs_distance(orig) < 1e-15);
        }
    }

    #[test]
    fn coarse_grained_pvm_gives_summed_operation() {
        let a = System::new("A", 2).unwrap();
        let p0 = QuantumOperation::new(a.clone(), a.clone(), vec![ComplexMatrix::diag_real(&[1.0, 0.0])]).unwrap();
        let p1 = QuantumOperation::new(a.clone(), a.clone(), vec![ComplexMatrix::diag_real(&[0.0, 1.0])]).unwrap();
        let inst = Instrument::from_operations(vec![p0, p1]).unwrap();
        let d = stinespring_dilate(&inst).unwrap();
        let merged = Effect::new(d.environment.clone(), &d.pvm[0].matrix + &d.pvm[1].matrix).unwrap();
        let back = instrument_from_dilation(&d.with_pvm(vec![merged]), &a).unwrap();
        let expected = inst.coarse_grained();
        assert!(back.operation(0).unwrap().choi().hs_distance(expected.choi()) < 1e-14);
    }

    #[test]
    fn identity_channel_round_trip() {
        let a = System::new("A", 3).unwrap();
        let inst = Instrument::from_operations(vec![QuantumOperation::identity(a.clone())]).unwrap();
        let d = stinespring_dilate(&inst).unwrap();
        assert_eq!(d.environment.dim, 1);
        assert_eq!(d.ancilla.dim, 1);
        assert_eq!(d.unitary, ComplexMatrix::identity(3));
        let back = instrument_from_dilation(&d, &a).unwrap();
        assert!(back.operation(0).unwrap().choi().hs_distance(inst.operation(0).unwrap().choi()) < 1e-15);
    }

    #[test]
    fn padding_makes_unitary_square() {
        // a 2 -> 3 isometric channel needs E padded so that 3·d_E is even
        let a = System::new("A", 2).unwrap();
        let b = System::new("B", 3).unwrap();
        let v = ComplexMatrix::from_real(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]).unwrap();
        let inst = Instrument::from_operations(vec![QuantumOperation::new(a.clone(), b, vec![v]).unwrap()]).unwrap();
        let d = stinespring_dilate(&inst).unwrap();
        assert_eq!(d.environment.dim, 2);
        assert_eq!(d.ancilla.dim, 3);
        assert_eq!(d.block_map, vec![(0, 0), (0, 1)]);
        assert!(d.unitary.isometry_residual() < 1e-12);
        let back = instrument_from_dilation(&d, &a).unwrap();
        assert!(back.operation(0).unwrap().choi().hs_distance(inst.operation(0).unwrap().choi()) < 1e-14);
    }
}
