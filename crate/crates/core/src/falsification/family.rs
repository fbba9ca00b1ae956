//! Parameterized hypothesis families of states.
//!
//! Transformation hypotheses are handled through the Choi state
//! `(T ⊗ I)R` with `R` the normalized maximally entangled state, so every
//! family below ultimately produces states.

use rand::Rng;
use serde::Serialize;

use crate::dilation::{double_ket, max_entangled_from_isometry};
use crate::error::{Error, Result};
use crate::linalg::{
    ginibre, haar_unitary, kron, kron_all, random_density, random_isometry, random_pure, sqrt_psd, support_projector,
    ComplexMatrix, Subspace, C64, ONE,
};
use crate::model::{Context, QuantumOperation, State, System};

#[derive(Clone, Debug, PartialEq)]
pub enum HypothesisFamily {
    /// States whose support is exactly `support`.
    StateSupport { support: Subspace },
    /// Pure states in dimension `dim`.
    Purity { dim: usize },
    /// `ψ^{⊗copies}` for pure `ψ` in dimension `dim`.
    PurityNCopies { dim: usize, copies: usize },
    /// Rank-one states on `A ⊗ B` (`d_A ≥ d_B`) with maximally mixed `B` marginal.
    MaxEntangled { dim_a: usize, dim_b: usize },
    /// Pure states on `A ⊗ E` whose `A` marginal is `rho`.
    MarginalOfPure { rho: State, env_dim: usize },
    /// Choi states of single-Kraus maps `C^dim_in → C^dim_out`.
    AtomicTransformation { dim_in: usize, dim_out: usize },
    /// Choi states of isometries `C^dim_in → C^dim_out` (`dim_out ≥ dim_in`).
    IsometricTransformation { dim_in: usize, dim_out: usize },
}

/// `|j⟩`, `(|j⟩+|k⟩)/√2`, `(|j⟩+i|k⟩)/√2`: `d²` unit vectors whose
/// projectors span the Hermitian matrices.
pub fn canonical_vectors(d: usize) -> Vec<ComplexMatrix> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut out: Vec<ComplexMatrix> = (0..d).map(|j| ComplexMatrix::basis_vector(d, j)).collect();
    for j in 0..d {
        for k in j + 1..d {
            let mut plus = ComplexMatrix::zeros(d, 1);
            plus[(j, 0)] = C64::new(s, 0.0);
            plus[(k, 0)] = C64::new(s, 0.0);
            let mut phase = plus.clone();
            phase[(k, 0)] = C64::new(0.0, s);
            out.push(plus);
            out.push(phase);
        }
    }
    out
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// Operator permuting `copies` tensor factors of dimension `d`:
/// factor `i` of the output is factor `perm[i]` of the input.
pub fn permutation_operator(d: usize, perm: &[usize]) -> ComplexMatrix {
    let n = perm.len();
    let total = d.pow(n as u32);
    let mut out = ComplexMatrix::zeros(total, total);
    for idx in 0..total {
        let mut digits = vec![0; n];
        let mut r = idx;
        for slot in digits.iter_mut().rev() {
            *slot = r % d;
            r /= d;
        }
        let new = perm.iter().fold(0, |acc, &p| acc * d + digits[p]);
        out[(new, idx)] = ONE;
    }
    out
}

/// Projector onto the symmetric subspace of `(C^d)^{⊗copies}`, as the
/// average of all factor permutations.
pub fn symmetric_projector(d: usize, copies: usize) -> ComplexMatrix {
    let perms = permutations(copies);
    let total = d.pow(copies as u32);
    let sum = perms
        .iter()
        .fold(ComplexMatrix::zeros(total, total), |acc, p| &acc + &permutation_operator(d, p));
    sum.scale_real(1.0 / perms.len() as f64)
}

fn unit_trace(m: ComplexMatrix) -> ComplexMatrix {
    let t = m.trace().re;
    m.scale_real(1.0 / t)
}

impl HypothesisFamily {
    /// Validated marginal-of-pure family (`ρ` unit trace, `d_E ≥ d_A`).
    pub fn marginal_of_pure(rho: State, env_dim: usize) -> Result<Self> {
        if !rho.is_deterministic(&Context::default()) {
            return Err(Error::InvalidState("the marginal must have unit trace".into()));
        }
        if env_dim < rho.system.dim {
            return Err(Error::InvalidArgument(format!(
                "environment dimension {env_dim} below system dimension {}",
                rho.system.dim
            )));
        }
        Ok(Self::MarginalOfPure { rho, env_dim })
    }

    pub fn check(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        match self {
            Self::StateSupport { support } if support.dim() == 0 => bad("support must be nonzero"),
            Self::Purity { dim } if *dim == 0 => bad("dimension must be positive"),
            Self::PurityNCopies { dim, copies } if *dim == 0 || *copies == 0 => bad("dimension and copies must be positive"),
            Self::MaxEntangled { dim_a, dim_b } if *dim_b == 0 || dim_a < dim_b => bad("need d_A >= d_B >= 1"),
            Self::AtomicTransformation { dim_in, dim_out } if *dim_in == 0 || *dim_out == 0 => bad("dimensions must be positive"),
            Self::IsometricTransformation { dim_in, dim_out } if *dim_in == 0 || dim_out < dim_in => {
                bad("an isometry needs d_out >= d_in >= 1")
            }
            Self::MarginalOfPure { rho, env_dim } if *env_dim < rho.system.dim => bad("need d_E >= d_A"),
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Self::StateSupport { support } => format!("state-support(d={}, k={})", support.ambient_dim, support.dim()),
            Self::Purity { dim } => format!("purity(d={dim})"),
            Self::PurityNCopies { dim, copies } => format!("purity-ncopies(d={dim}, N={copies})"),
            Self::MaxEntangled { dim_a, dim_b } => format!("max-entangled(dA={dim_a}, dB={dim_b})"),
            Self::MarginalOfPure { rho, env_dim } => format!("marginal-of-pure(dA={}, dE={env_dim})", rho.system.dim),
            Self::AtomicTransformation { dim_in, dim_out } => format!("atomic-transformation(din={dim_in}, dout={dim_out})"),
            Self::IsometricTransformation { dim_in, dim_out } => {
                format!("isometric-transformation(din={dim_in}, dout={dim_out})")
            }
        }
    }

    /// Tensor dimensions of the states in the family.
    pub fn dims(&self) -> Vec<usize> {
        match self {
            Self::StateSupport { support } => vec![support.ambient_dim],
            Self::Purity { dim } => vec![*dim],
            Self::PurityNCopies { dim, copies } => vec![*dim; *copies],
            Self::MaxEntangled { dim_a, dim_b } => vec![*dim_a, *dim_b],
            Self::MarginalOfPure { rho, env_dim } => vec![rho.system.dim, *env_dim],
            // Choi states live on output ⊗ input
            Self::AtomicTransformation { dim_in, dim_out } | Self::IsometricTransformation { dim_in, dim_out } => {
                vec![*dim_out, *dim_in]
            }
        }
    }

    pub fn total_dim(&self) -> usize {
        self.dims().iter().product()
    }

    pub fn system(&self) -> System {
        System { label: "H".into(), dim: self.total_dim() }
    }

    /// The state family the hypothesis reduces to (identity for state families).
    pub fn reduced(&self) -> HypothesisFamily {
        match self {
            Self::AtomicTransformation { dim_in, dim_out } => Self::Purity { dim: dim_in * dim_out },
            Self::IsometricTransformation { dim_in, dim_out } => Self::MaxEntangled { dim_a: *dim_out, dim_b: *dim_in },
            other => other.clone(),
        }
    }

    /// True when the hypothesis concerns a transformation.
    pub fn is_transformation(&self) -> bool {
        matches!(self, Self::AtomicTransformation { .. } | Self::IsometricTransformation { .. })
    }

    fn state(&self, m: ComplexMatrix) -> State {
        State { system: self.system(), matrix: m.hermitian_part() }
    }

    /// Draws one member of the family.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> State {
        match self {
            Self::StateSupport { support } => {
                let inner = random_density(support.dim(), rng);
                self.state(support.basis.conjugate(&inner))
            }
            Self::Purity { dim } => self.state(ComplexMatrix::projector_onto(&random_pure(*dim, rng))),
            Self::PurityNCopies { dim, copies } => {
                let psi = random_pure(*dim, rng);
                let v = kron_all(std::iter::repeat_n(&psi, *copies));
                self.state(ComplexMatrix::projector_onto(&v))
            }
            Self::MaxEntangled { dim_a, dim_b } => {
                let v = random_isometry(*dim_a, *dim_b, rng);
                let s = max_entangled_from_isometry(&v, System { label: "A".into(), dim: *dim_a }, System { label: "B".into(), dim: *dim_b }, 1e-9)
                    .expect("Haar isometry");
                self.state(s.matrix)
            }
            Self::MarginalOfPure { rho, env_dim } => {
                let w = random_isometry(*env_dim, rho.system.dim, rng);
                let root = sqrt_psd(&rho.matrix, 1e-9).expect("validated state");
                let ket = double_ket(&root.matmul(&w.transpose()));
                self.state(ComplexMatrix::projector_onto(&ket))
            }
            Self::AtomicTransformation { dim_in, dim_out } => {
                let k = ginibre(*dim_out, *dim_in, rng);
                let smax = crate::linalg::eig_hermitian(&k.adjoint().matmul(&k)).expect("Hermitian").max().sqrt();
                let op = QuantumOperation::from_parts(
                    System { label: "A".into(), dim: *dim_in },
                    System { label: "B".into(), dim: *dim_out },
                    vec![k.scale_real(1.0 / smax)],
                );
                self.state(unit_trace(choi_state(&op)))
            }
            Self::IsometricTransformation { dim_in, dim_out } => {
                let v = random_isometry(*dim_out, *dim_in, rng);
                let op = QuantumOperation::from_parts(
                    System { label: "B".into(), dim: *dim_in },
                    System { label: "A".into(), dim: *dim_out },
                    vec![v],
                );
                self.state(choi_state(&op))
            }
        }
    }

    /// A finite list of members whose span is known analytically.
    pub fn spanning_set(&self) -> Option<Vec<State>> {
        match self {
            Self::StateSupport { support } => {
                let k = support.dim();
                let mixed = ComplexMatrix::identity(k).scale_real(1.0 / k as f64);
                Some(
                    canonical_vectors(k)
                        .iter()
                        .map(|v| {
                            let inner = (&mixed + &ComplexMatrix::projector_onto(v)).scale_real(0.5);
                            self.state(support.basis.conjugate(&inner))
                        })
                        .collect(),
                )
            }
            Self::Purity { dim } => {
                Some(canonical_vectors(*dim).iter().map(|v| self.state(ComplexMatrix::projector_onto(v))).collect())
            }
            Self::PurityNCopies { dim, copies } => Some(
                canonical_vectors(*dim)
                    .iter()
                    .map(|v| self.state(ComplexMatrix::projector_onto(&kron_all(std::iter::repeat_n(v, *copies)))))
                    .collect(),
            ),
            Self::AtomicTransformation { dim_in, dim_out } => Some(
                canonical_vectors(dim_in * dim_out)
                    .iter()
                    .map(|v| {
                        let k = crate::dilation::unvec(v, *dim_out, *dim_in);
                        let op = QuantumOperation::from_parts(
                            System { label: "A".into(), dim: *dim_in },
                            System { label: "B".into(), dim: *dim_out },
                            vec![k],
                        );
                        self.state(unit_trace(choi_state(&op)))
                    })
                    .collect(),
            ),
            _ => None,
        }
    }

    /// Exact Haar average of the family, where it has a closed form.
    pub fn analytic_average(&self) -> Option<State> {
        let d = self.total_dim();
        let mixed = || ComplexMatrix::identity(d).scale_real(1.0 / d as f64);
        match self {
            Self::StateSupport { support } => Some(self.state(support.projector().scale_real(1.0 / support.dim() as f64))),
            Self::Purity { .. }
            | Self::MaxEntangled { .. }
            | Self::AtomicTransformation { .. }
            | Self::IsometricTransformation { .. } => Some(self.state(mixed())),
            Self::PurityNCopies { dim, copies } => {
                let p = symmetric_projector(*dim, *copies);
                Some(self.state(p.scale_real(1.0 / binomial(dim + copies - 1, *copies) as f64)))
            }
            Self::MarginalOfPure { rho, env_dim } => {
                let e = ComplexMatrix::identity(*env_dim).scale_real(1.0 / *env_dim as f64);
                Some(self.state(kron(&rho.matrix, &e)))
            }
        }
    }

    /// For `MarginalOfPure` with rank-deficient `ρ`, the support of `ρ`.
    pub fn deficient_support(&self) -> Option<Subspace> {
        match self {
            Self::MarginalOfPure { rho, .. } => {
                let s = support_projector(&rho.matrix, 1e-9).ok()?;
                (s.dim() < rho.system.dim).then_some(s)
            }
            _ => None,
        }
    }
}

/// `(T ⊗ I)R` with `R = |I⟩⟩⟨⟨I|/d_in`, on `output ⊗ input`.
pub fn choi_state(op: &QuantumOperation) -> ComplexMatrix {
    op.choi().scale_real(1.0 / op.input().dim as f64)
}

/// Random unitary on the first factor, used by callers that want to check
/// invariance of the families under local unitaries.
pub fn local_unitary<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> ComplexMatrix {
    let u = haar_unitary(dims[0], rng);
    kron(&u, &ComplexMatrix::identity(dims[1..].iter().product()))
}

#[derive(Clone, Debug, Serialize)]
pub struct FamilySummary {
    pub name: String,
    pub dims: Vec<usize>,
}

impl From<&HypothesisFamily> for FamilySummary {
    fn from(h: &HypothesisFamily) -> Self {
        Self { name: h.name(), dims: h.dims() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{eig_hermitian, partial_trace, seeded_rng};

    fn rank(m: &ComplexMatrix) -> usize {
        eig_hermitian(m).unwrap().values.iter().filter(|&&l| l > 1e-9).count()
    }

    #[test]
    fn canonical_vectors_count_and_norm() {
        for d in 1..=4 {
            let v = canonical_vectors(d);
            assert_eq!(v.len(), d * d);
            assert!(v.iter().all(|x| (x.norm() - 1.0).abs() < 1e-15));
        }
    }

    #[test]
    fn symmetric_projector_two_qubits_has_singlet_kernel() {
        let p = symmetric_projector(2, 2);
        let eig = eig_hermitian(&p).unwrap();
        assert!((eig.values[2] - 1.0).abs() < 1e-15 && eig.values[3].abs() < 1e-15);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let singlet = ComplexMatrix::column(&[C64::new(0.0, 0.0), C64::new(s, 0.0), C64::new(-s, 0.0), C64::new(0.0, 0.0)]);
        assert!(p.matmul(&singlet).norm() < 1e-15);
        assert_eq!(binomial(3, 2), 3);
        assert_eq!(binomial(4, 3), 4);
    }

    #[test]
    fn samples_satisfy_their_hypotheses() {
        let mut rng = seeded_rng(4);
        let pur = HypothesisFamily::Purity { dim: 3 };
        assert_eq!(rank(&pur.sample(&mut rng).matrix), 1);
        let nc = HypothesisFamily::PurityNCopies { dim: 2, copies: 3 };
        let s = nc.sample(&mut rng);
        assert_eq!(s.matrix.rows(), 8);
        assert_eq!(rank(&s.matrix), 1);
        let me = HypothesisFamily::MaxEntangled { dim_a: 3, dim_b: 2 };
        let s = me.sample(&mut rng);
        let mb = partial_trace(&s.matrix, &[3, 2], &[1]).unwrap();
        assert!(mb.max_abs_diff(&ComplexMatrix::identity(2).scale_real(0.5)) < 1e-12);
        let rho = State::new(System::new("A", 2).unwrap(), ComplexMatrix::diag_real(&[0.7, 0.3])).unwrap();
        let mp = HypothesisFamily::marginal_of_pure(rho.clone(), 3).unwrap();
        let s = mp.sample(&mut rng);
        assert_eq!(rank(&s.matrix), 1);
        assert!(partial_trace(&s.matrix, &[2, 3], &[0]).unwrap().max_abs_diff(&rho.matrix) < 1e-12);
        let k = Subspace::coordinate(3, &[0, 2]).unwrap();
        let ss = HypothesisFamily::StateSupport { support: k.clone() };
        let s = ss.sample(&mut rng);
        let supp = support_projector(&s.matrix, 1e-9).unwrap();
        assert_eq!(supp.dim(), 2);
        assert!(k.contains_subspace(&supp, 1e-9));
    }

    #[test]
    fn spanning_members_satisfy_their_hypotheses() {
        let k = Subspace::coordinate(3, &[1, 2]).unwrap();
        let ss = HypothesisFamily::StateSupport { support: k.clone() };
        for s in ss.spanning_set().unwrap() {
            let supp = support_projector(&s.matrix, 1e-9).unwrap();
            assert_eq!(supp.dim(), 2);
            assert!(k.contains_subspace(&supp, 1e-9));
        }
        for s in (HypothesisFamily::AtomicTransformation { dim_in: 2, dim_out: 2 }).spanning_set().unwrap() {
            assert_eq!(rank(&s.matrix), 1);
            assert!((s.trace() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn transformation_families_reduce_through_choi_states() {
        let mut rng = seeded_rng(8);
        let iso = HypothesisFamily::IsometricTransformation { dim_in: 2, dim_out: 3 };
        let s = iso.sample(&mut rng);
        // Choi state of an isometry B→A is maximally entangled on A⊗B
        let mb = partial_trace(&s.matrix, &[3, 2], &[1]).unwrap();
        assert!(mb.max_abs_diff(&ComplexMatrix::identity(2).scale_real(0.5)) < 1e-12);
        assert_eq!(rank(&s.matrix), 1);
        assert!(matches!(iso.reduced(), HypothesisFamily::MaxEntangled { dim_a: 3, dim_b: 2 }));
        let at = HypothesisFamily::AtomicTransformation { dim_in: 2, dim_out: 1 };
        assert_eq!(rank(&at.sample(&mut rng).matrix), 1);
        assert!(matches!(at.reduced(), HypothesisFamily::Purity { dim: 2 }));
    }

    #[test]
    fn invalid_families_rejected() {
        assert!(HypothesisFamily::MaxEntangled { dim_a: 2, dim_b: 3 }.check().is_err());
        assert!(HypothesisFamily::IsometricTransformation { dim_in: 3, dim_out: 2 }.check().is_err());
        let rho = State::maximally_mixed(System::new("A", 3).unwrap());
        assert!(HypothesisFamily::marginal_of_pure(rho, 2).is_err());
    }
}
