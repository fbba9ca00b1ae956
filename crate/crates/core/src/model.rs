//! Systems, states, effects, quantum operations and instruments.
//!
//! Operations are stored in Kraus form; the Choi matrix is computed on first
//! use and cached. Choi matrices use the unnormalized convention
//! `Σ_k |K_k⟩⟩⟨⟨K_k|` on `output ⊗ input`.

use std::fmt;
use std::sync::OnceLock;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dilation::{double_ket, unvec};
use crate::error::{Error, Result};
use crate::linalg::{eig_hermitian, ginibre, kron, partial_trace, random_isometry, sum_matrices, ComplexMatrix};

/// Validation tolerance shared by the model's constructors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Context {
    pub tol: f64,
}

impl Context {
    pub const DEFAULT_TOL: f64 = 1e-9;

    pub fn new(tol: f64) -> Self {
        Self { tol }
    }
}

impl Default for Context {
    fn default() -> Self {
        Self { tol: Self::DEFAULT_TOL }
    }
}

/// A labeled quantum system. Dimension 1 is the trivial system.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct System {
    pub label: String,
    pub dim: usize,
}

impl System {
    pub fn new(label: impl Into<String>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("system dimension must be at least 1".into()));
        }
        Ok(Self { label: label.into(), dim })
    }

    /// The trivial system `I` with Hilbert space `C`.
    pub fn trivial() -> Self {
        Self { label: "I".into(), dim: 1 }
    }

    pub fn is_trivial(&self) -> bool {
        self.dim == 1 && self.label == "I"
    }

    /// Tensor composite. Trivial factors are dropped; an empty list is trivial.
    pub fn composite(parts: &[System]) -> System {
        let parts: Vec<&System> = parts.iter().filter(|s| !s.is_trivial()).collect();
        match parts.as_slice() {
            [] => System::trivial(),
            [one] => (*one).clone(),
            many => System {
                label: many.iter().map(|s| s.label.as_str()).collect::<Vec<_>>().join("⊗"),
                dim: many.iter().map(|s| s.dim).product(),
            },
        }
    }
}

impl fmt::Display for System {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.label, self.dim)
    }
}

fn check_system(expected: &System, found: &System) -> Result<()> {
    if expected != found {
        return Err(Error::SystemMismatch { expected: expected.to_string(), found: found.to_string() });
    }
    Ok(())
}

fn check_square(system: &System, m: &ComplexMatrix) -> Result<()> {
    if m.shape() != (system.dim, system.dim) {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} matrix for system {system}",
            m.rows(),
            m.cols()
        )));
    }
    Ok(())
}

/// A (possibly subnormalized) state: PSD with trace in `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StateRepr")]
pub struct State {
    pub system: System,
    pub matrix: ComplexMatrix,
}

#[derive(Deserialize)]
struct StateRepr {
    system: System,
    matrix: ComplexMatrix,
}

impl TryFrom<StateRepr> for State {
    type Error = Error;
    fn try_from(r: StateRepr) -> Result<Self> {
        State::new(r.system, r.matrix)
    }
}

impl State {
    pub fn new(system: System, matrix: ComplexMatrix) -> Result<Self> {
        Self::new_with(system, matrix, &Context::default())
    }

    pub fn new_with(system: System, matrix: ComplexMatrix, ctx: &Context) -> Result<Self> {
        check_square(&system, &matrix)?;
        let eig = eig_hermitian(&matrix).map_err(|e| Error::InvalidState(e.to_string()))?;
        if eig.min() < -ctx.tol {
            return Err(Error::InvalidState(format!("negative eigenvalue {:.3e}", eig.min())));
        }
        let tr = matrix.trace().re;
        if tr > 1.0 + ctx.tol {
            return Err(Error::InvalidState(format!("trace {tr} exceeds 1")));
        }
        Ok(Self { system, matrix })
    }

    /// Normalized pure state `|ψ⟩⟨ψ|` from a unit column vector.
    pub fn pure(system: System, psi: &ComplexMatrix) -> Result<Self> {
        if psi.cols() != 1 {
            return Err(Error::InvalidState("pure state needs a column vector".into()));
        }
        Self::new(system, ComplexMatrix::projector_onto(psi))
    }

    /// `I/d`.
    pub fn maximally_mixed(system: System) -> Self {
        let d = system.dim;
        Self { matrix: ComplexMatrix::identity(d).scale_real(1.0 / d as f64), system }
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn is_deterministic(&self, ctx: &Context) -> bool {
        (self.trace() - 1.0).abs() <= ctx.tol
    }

    /// The state as a preparation: an operation from the trivial system.
    pub fn as_operation(&self) -> QuantumOperation {
        let eig = eig_hermitian(&self.matrix).expect("validated state is Hermitian");
        let kraus: Vec<ComplexMatrix> = eig
            .values
            .iter()
            .enumerate()
            .filter(|(_, &l)| l > 0.0)
            .map(|(k, &l)| eig.vector(k).scale_real(l.sqrt()))
            .collect();
        let kraus = if kraus.is_empty() { vec![ComplexMatrix::zeros(self.system.dim, 1)] } else { kraus };
        QuantumOperation::from_parts(System::trivial(), self.system.clone(), kraus)
    }
}

/// An effect `0 ≤ E ≤ I`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StateRepr")]
pub struct Effect {
    pub system: System,
    pub matrix: ComplexMatrix,
}

impl TryFrom<StateRepr> for Effect {
    type Error = Error;
    fn try_from(r: StateRepr) -> Result<Self> {
        Effect::new(r.system, r.matrix)
    }
}

impl Effect {
    pub fn new(system: System, matrix: ComplexMatrix) -> Result<Self> {
        Self::new_with(system, matrix, &Context::default())
    }

    pub fn new_with(system: System, matrix: ComplexMatrix, ctx: &Context) -> Result<Self> {
        check_square(&system, &matrix)?;
        let eig = eig_hermitian(&matrix).map_err(|e| Error::InvalidEffect(e.to_string()))?;
        if eig.min() < -ctx.tol || eig.max() > 1.0 + ctx.tol {
            return Err(Error::InvalidEffect(format!(
                "spectrum [{:.3e}, {:.3e}] outside [0, 1]",
                eig.min(),
                eig.max()
            )));
        }
        Ok(Self { system, matrix })
    }

    /// The deterministic effect `I` (discarding the system).
    pub fn deterministic(system: System) -> Self {
        Self { matrix: ComplexMatrix::identity(system.dim), system }
    }

    /// Projector onto the unit-normalized column vector `v`.
    pub fn projector(system: System, v: &ComplexMatrix) -> Result<Self> {
        let n = v.norm();
        if n == 0.0 {
            return Err(Error::InvalidEffect("projector onto the zero vector".into()));
        }
        Self::new(system, ComplexMatrix::projector_onto(&v.scale_real(1.0 / n)))
    }

    pub fn is_deterministic(&self, ctx: &Context) -> bool {
        self.matrix.max_abs_diff(&ComplexMatrix::identity(self.system.dim)) <= ctx.tol
    }

    /// `I − E`.
    pub fn complement(&self) -> Effect {
        Effect { system: self.system.clone(), matrix: &ComplexMatrix::identity(self.system.dim) - &self.matrix }
    }

    /// `Tr[ρ E]`.
    pub fn probability(&self, rho: &State) -> Result<f64> {
        check_system(&self.system, &rho.system)?;
        Ok(rho.matrix.matmul(&self.matrix).trace().re)
    }

    /// The effect as an operation into the trivial system.
    pub fn as_operation(&self) -> QuantumOperation {
        let eig = eig_hermitian(&self.matrix).expect("validated effect is Hermitian");
        let kraus: Vec<ComplexMatrix> = eig
            .values
            .iter()
            .enumerate()
            .filter(|(_, &l)| l > 0.0)
            .map(|(k, &l)| eig.vector(k).adjoint().scale_real(l.sqrt()))
            .collect();
        let kraus = if kraus.is_empty() { vec![ComplexMatrix::zeros(1, self.system.dim)] } else { kraus };
        QuantumOperation::from_parts(self.system.clone(), System::trivial(), kraus)
    }
}

/// Completely positive trace-non-increasing map in Kraus form.
#[derive(Clone)]
pub struct QuantumOperation {
    input: System,
    output: System,
    kraus: Vec<ComplexMatrix>,
    choi: OnceLock<ComplexMatrix>,
}

impl fmt::Debug for QuantumOperation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("QuantumOperation")
            .field("input", &self.input)
            .field("output", &self.output)
            .field("kraus", &self.kraus)
            .finish()
    }
}

#[derive(Serialize, Deserialize)]
struct OperationRepr {
    input: System,
    output: System,
    kraus: Vec<ComplexMatrix>,
}

impl Serialize for QuantumOperation {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        OperationRepr { input: self.input.clone(), output: self.output.clone(), kraus: self.kraus.clone() }
            .serialize(s)
    }
}

impl<'de> Deserialize<'de> for QuantumOperation {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = OperationRepr::deserialize(d)?;
        QuantumOperation::new(r.input, r.output, r.kraus).map_err(serde::de::Error::custom)
    }
}

impl QuantumOperation {
    pub fn new(input: System, output: System, kraus: Vec<ComplexMatrix>) -> Result<Self> {
        Self::new_with(input, output, kraus, &Context::default())
    }

    /// Validates shapes and `Σ K†K ≤ I` within `ctx.tol`.
    pub fn new_with(input: System, output: System, kraus: Vec<ComplexMatrix>, ctx: &Context) -> Result<Self> {
        if kraus.is_empty() {
            return Err(Error::InvalidOperation("empty Kraus set".into()));
        }
        if let Some(k) = kraus.iter().find(|k| k.shape() != (output.dim, input.dim)) {
            return Err(Error::InvalidOperation(format!(
                "Kraus operator of shape {}x{} for a map {input} -> {output}",
                k.rows(),
                k.cols()
            )));
        }
        let op = Self::from_parts(input, output, kraus);
        let lmax = eig_hermitian(&op.effect_operator())?.max();
        if lmax > 1.0 + ctx.tol {
            return Err(Error::InvalidOperation(format!("trace-increasing: λmax(ΣK†K) = {lmax}")));
        }
        Ok(op)
    }

    pub(crate) fn from_parts(input: System, output: System, kraus: Vec<ComplexMatrix>) -> Self {
        Self { input, output, kraus, choi: OnceLock::new() }
    }

    /// Builds an operation from a PSD Choi matrix on `output ⊗ input`.
    pub fn from_choi(input: System, output: System, choi: ComplexMatrix, ctx: &Context) -> Result<Self> {
        let lmax = eig_hermitian(&choi)?.max().max(1.0);
        let kraus = choi_to_kraus_with(&choi, output.dim, input.dim, ctx.tol, 1e-14 * lmax)?;
        let op = Self::new_with(input, output, kraus, ctx)?;
        let _ = op.choi.set(choi);
        Ok(op)
    }

    pub fn identity(system: System) -> Self {
        let d = system.dim;
        Self::from_parts(system.clone(), system, vec![ComplexMatrix::identity(d)])
    }

    /// Unitary (or isometric) channel `ρ ↦ UρU†`.
    pub fn isometric(input: System, output: System, u: ComplexMatrix, ctx: &Context) -> Result<Self> {
        let residual = u.isometry_residual();
        if residual > ctx.tol.max(1e-10) {
            return Err(Error::NotIsometry { residual });
        }
        Self::new_with(input, output, vec![u], ctx)
    }

    pub fn input(&self) -> &System {
        &self.input
    }

    pub fn output(&self) -> &System {
        &self.output
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    /// `Σ K†K`, the effect this operation induces on its input.
    pub fn effect_operator(&self) -> ComplexMatrix {
        sum_matrices(self.kraus.iter().map(|k| k.adjoint().matmul(k)).collect::<Vec<_>>().iter())
            .unwrap_or_else(|| ComplexMatrix::zeros(self.input.dim, self.input.dim))
    }

    pub fn is_deterministic(&self, ctx: &Context) -> bool {
        self.effect_operator().max_abs_diff(&ComplexMatrix::identity(self.input.dim)) <= ctx.tol
    }

    /// Cached Choi matrix.
    pub fn choi(&self) -> &ComplexMatrix {
        self.choi.get_or_init(|| kraus_to_choi_matrix(&self.kraus, self.output.dim, self.input.dim))
    }

    /// Re-derives a minimal Kraus set from the Choi matrix when the current
    /// set is longer than `d_in·d_out`.
    pub fn compressed(&self, tol: f64) -> Result<Self> {
        if self.kraus.len() <= self.input.dim * self.output.dim {
            return Ok(self.clone());
        }
        let kraus = choi_to_kraus(self.choi(), self.output.dim, self.input.dim, tol)?;
        let op = Self::from_parts(self.input.clone(), self.output.clone(), kraus);
        let _ = op.choi.set(self.choi().clone());
        Ok(op)
    }

    /// Applies the map to a raw operator.
    pub fn apply_matrix(&self, x: &ComplexMatrix) -> ComplexMatrix {
        sum_matrices(self.kraus.iter().map(|k| k.conjugate(x)).collect::<Vec<_>>().iter())
            .expect("non-empty Kraus set")
    }

    /// Interprets an operation from the trivial system as a state.
    pub fn as_state(&self) -> Result<State> {
        if self.input.dim != 1 {
            return Err(Error::SystemMismatch { expected: System::trivial().to_string(), found: self.input.to_string() });
        }
        State::new(self.output.clone(), self.apply_matrix(&ComplexMatrix::identity(1)))
    }

    /// Interprets an operation into the trivial system as an effect.
    pub fn as_effect(&self) -> Result<Effect> {
        if self.output.dim != 1 {
            return Err(Error::SystemMismatch { expected: System::trivial().to_string(), found: self.output.to_string() });
        }
        Effect::new(self.input.clone(), self.effect_operator())
    }

    /// Same map on relabeled systems of equal dimension.
    pub fn relabeled(&self, input: System, output: System) -> Result<Self> {
        if input.dim != self.input.dim || output.dim != self.output.dim {
            return Err(Error::DimensionMismatch("relabeling must preserve dimensions".into()));
        }
        Ok(Self { input, output, kraus: self.kraus.clone(), choi: self.choi.clone() })
    }
}

/// `Σ_k K_k ρ K_k†`.
pub fn apply(op: &QuantumOperation, rho: &State) -> Result<State> {
    check_system(op.input(), &rho.system)?;
    Ok(State { system: op.output().clone(), matrix: op.apply_matrix(&rho.matrix) })
}

/// Choi-route application `Tr_in[Choi·(I_out ⊗ ρᵀ)]`.
pub fn apply_via_choi(op: &QuantumOperation, rho: &State) -> Result<ComplexMatrix> {
    check_system(op.input(), &rho.system)?;
    let lifted = kron(&ComplexMatrix::identity(op.output().dim), &rho.matrix.transpose());
    partial_trace(&op.choi().matmul(&lifted), &[op.output().dim, op.input().dim], &[0])
}

/// Born rule `p(ρ) = Tr ρ`, clamped into `[0, 1]`.
pub fn born_probability(rho: &State) -> f64 {
    rho.trace().clamp(0.0, 1.0)
}

/// Sequential composition `t2 ∘ t1` (apply `t1` first).
pub fn compose_seq(t2: &QuantumOperation, t1: &QuantumOperation) -> Result<QuantumOperation> {
    check_system(t2.input(), t1.output())?;
    let kraus = t2.kraus.iter().flat_map(|b| t1.kraus.iter().map(move |a| b.matmul(a))).collect();
    Ok(QuantumOperation::from_parts(t1.input.clone(), t2.output.clone(), kraus))
}

/// Parallel composition `t1 ⊗ t2`.
pub fn compose_par(t1: &QuantumOperation, t2: &QuantumOperation) -> QuantumOperation {
    let kraus = t1.kraus.iter().flat_map(|a| t2.kraus.iter().map(move |b| kron(a, b))).collect();
    QuantumOperation::from_parts(
        System::composite(&[t1.input.clone(), t2.input.clone()]),
        System::composite(&[t1.output.clone(), t2.output.clone()]),
        kraus,
    )
}

fn kraus_to_choi_matrix(kraus: &[ComplexMatrix], d_out: usize, d_in: usize) -> ComplexMatrix {
    let mut choi = ComplexMatrix::zeros(d_out * d_in, d_out * d_in);
    for k in kraus {
        let v = double_ket(k);
        choi = &choi + &ComplexMatrix::projector_onto(&v);
    }
    choi
}

/// `Σ_k |K_k⟩⟩⟨⟨K_k|` on `output ⊗ input`.
pub fn kraus_to_choi(op: &QuantumOperation) -> ComplexMatrix {
    op.choi().clone()
}

/// Kraus operators `√λ_k·unvec(v_k)` from the eigenvectors of a PSD Choi
/// matrix; eigenvalues at or below `tol` are dropped.
pub fn choi_to_kraus(choi: &ComplexMatrix, d_out: usize, d_in: usize, tol: f64) -> Result<Vec<ComplexMatrix>> {
    choi_to_kraus_with(choi, d_out, d_in, tol, tol)
}

fn choi_to_kraus_with(
    choi: &ComplexMatrix,
    d_out: usize,
    d_in: usize,
    psd_tol: f64,
    drop_below: f64,
) -> Result<Vec<ComplexMatrix>> {
    if choi.shape() != (d_out * d_in, d_out * d_in) {
        return Err(Error::DimensionMismatch(format!(
            "Choi matrix {}x{} for a {d_in} -> {d_out} map",
            choi.rows(),
            choi.cols()
        )));
    }
    let eig = eig_hermitian(choi)?;
    if eig.min() < -psd_tol {
        return Err(Error::NotPsd { min_eigenvalue: eig.min() });
    }
    let mut kraus: Vec<ComplexMatrix> = eig
        .values
        .iter()
        .enumerate()
        .filter(|(_, &l)| l > drop_below)
        .map(|(k, &l)| unvec(&eig.vector(k).scale_real(l.sqrt()), d_out, d_in))
        .collect();
    if kraus.is_empty() {
        kraus.push(ComplexMatrix::zeros(d_out, d_in));
    }
    Ok(kraus)
}

/// True when the Choi spectrum beyond its largest eigenvalue is at most `tol·λ_max`.
pub fn is_atomic(op: &QuantumOperation, tol: f64) -> bool {
    let eig = match eig_hermitian(op.choi()) {
        Ok(e) => e,
        Err(_) => return false,
    };
    let lmax = eig.max();
    eig.values.iter().skip(1).all(|&l| l <= tol * lmax)
}

/// Outcome-labeled operations summing to a trace-preserving map.
#[derive(Clone, Debug, Serialize)]
pub struct Instrument {
    outcomes: Vec<(String, QuantumOperation)>,
}

impl Instrument {
    pub fn new(outcomes: Vec<(String, QuantumOperation)>) -> Result<Self> {
        Self::new_with(outcomes, &Context::default())
    }

    pub fn new_with(outcomes: Vec<(String, QuantumOperation)>, ctx: &Context) -> Result<Self> {
        let Some((_, first)) = outcomes.first() else {
            return Err(Error::InvalidInstrument("no outcomes".into()));
        };
        for (label, op) in &outcomes {
            if op.input() != first.input() || op.output() != first.output() {
                return Err(Error::InvalidInstrument(format!("outcome {label} has different systems")));
            }
        }
        let inst = Self { outcomes };
        let residual = inst.coarse_grained().effect_operator().max_abs_diff(&ComplexMatrix::identity(inst.input().dim));
        if residual > ctx.tol {
            return Err(Error::InvalidInstrument(format!("outcomes sum to a non-trace-preserving map (residual {residual:.3e})")));
        }
        Ok(inst)
    }

    /// Outcomes labeled `"0"`, `"1"`, ...
    pub fn from_operations(ops: Vec<QuantumOperation>) -> Result<Self> {
        Self::new(ops.into_iter().enumerate().map(|(i, op)| (i.to_string(), op)).collect())
    }

    pub fn input(&self) -> &System {
        self.outcomes[0].1.input()
    }

    pub fn output(&self) -> &System {
        self.outcomes[0].1.output()
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn outcomes(&self) -> &[(String, QuantumOperation)] {
        &self.outcomes
    }

    pub fn operation(&self, i: usize) -> Option<&QuantumOperation> {
        self.outcomes.get(i).map(|(_, op)| op)
    }

    /// The outcome-erased channel `Σ_i T_i`.
    pub fn coarse_grained(&self) -> QuantumOperation {
        let kraus = self.outcomes.iter().flat_map(|(_, op)| op.kraus().iter().cloned()).collect();
        QuantumOperation::from_parts(self.input().clone(), self.output().clone(), kraus)
    }
}

/// Random instrument whose Kraus operators are blocks of a Haar isometry
/// `input → output ⊗ C^(outcomes·kraus_per_outcome)`.
pub fn random_instrument<R: Rng + ?Sized>(
    input: &System,
    output: &System,
    outcomes: usize,
    kraus_per_outcome: usize,
    rng: &mut R,
) -> Result<Instrument> {
    let total = outcomes * kraus_per_outcome;
    if outcomes == 0 || kraus_per_outcome == 0 || output.dim * total < input.dim {
        return Err(Error::InvalidArgument(format!(
            "{outcomes} outcomes with {kraus_per_outcome} Kraus operators cannot map {input} onto {output}"
        )));
    }
    let w = random_isometry(output.dim * total, input.dim, rng);
    let block = |e: usize| ComplexMatrix::from_fn(output.dim, input.dim, |b, a| w[(e * output.dim + b, a)]);
    let ops = (0..outcomes)
        .map(|i| {
            let kraus = (0..kraus_per_outcome).map(|k| block(i * kraus_per_outcome + k)).collect();
            QuantumOperation::new(input.clone(), output.clone(), kraus)
        })
        .collect::<Result<Vec<_>>>()?;
    Instrument::from_operations(ops)
}

/// Random trace-non-increasing CP map with `kraus_count` Gaussian Kraus
/// operators rescaled so that `λ_max(ΣK†K)` lies in `[0.5, 1]`.
pub fn random_operation<R: Rng + ?Sized>(
    input: &System,
    output: &System,
    kraus_count: usize,
    rng: &mut R,
) -> Result<QuantumOperation> {
    let kraus: Vec<ComplexMatrix> = (0..kraus_count.max(1)).map(|_| ginibre(output.dim, input.dim, rng)).collect();
    let raw = QuantumOperation::from_parts(input.clone(), output.clone(), kraus);
    let lmax = eig_hermitian(&raw.effect_operator())?.max();
    let target: f64 = rng.random_range(0.5..=1.0);
    let s = (target / lmax).sqrt();
    QuantumOperation::new(input.clone(), output.clone(), raw.kraus.iter().map(|k| k.scale_real(s)).collect())
}
