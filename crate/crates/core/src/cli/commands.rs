use std::path::Path;

use serde_json::{json, Value};

use super::report::{Check, Report, Timing, Tolerances};
use super::{Cli, CliError, Command, CommonArgs, DimArgs, FamilyName, SearchArgs, Theorem, MAX_TOTAL_DIM};
use crate::circuit::{evaluate, load_file};
use crate::dilation::{dilation_round_trip, max_entangled_from_isometry, purify_with_env};
use crate::falsification::{
    falsifier_search, symmetric_projector, twirl_analytic, twirl_monte_carlo_parallel, witness_unfalsifiable,
    AverageMethod, HypothesisFamily, SearchConfig, SearchOutcome, WitnessVerdict,
};
use crate::linalg::{
    eig_hermitian, kron_all, partial_trace, random_density, seeded_rng, ComplexMatrix, Subspace,
};
use crate::model::{random_instrument, Context, Instrument, QuantumOperation, State, System};

const DEFAULT_MC_SAMPLES: usize = 2000;
const EXACT: f64 = 1e-12;
const ROUND_TRIP: f64 = 1e-10;
const MC_ENTRYWISE: f64 = 0.05;
const NCOPIES_NOTE: &str = "N-copy purity: the search returns a nonzero falsifier on the antisymmetric subspace, \
     which contradicts the claim that purity stays unfalsifiable when several copies are available";
const TWIRL_CONVENTION_NOTE: &str = "lambda_min uses the normalized Haar twirl (I/d) ⊗ Tr[X]; \
     lambda_min_unnormalized drops the 1/d factor";

struct Run<'a> {
    common: &'a CommonArgs,
    ctx: Context,
    checks: Vec<Check>,
    notes: Vec<String>,
}

pub(super) fn dispatch(cli: &Cli) -> Result<Report, CliError> {
    let tol = cli.common.tol.unwrap_or(Context::DEFAULT_TOL);
    if !(tol.is_finite() && tol > 0.0) {
        return Err(CliError::Usage(format!("--tol must be positive, got {tol}")));
    }
    if cli.common.threads == 0 {
        return Err(CliError::Usage("--threads must be at least 1".into()));
    }
    let mut run = Run { common: &cli.common, ctx: Context::new(tol), checks: Vec::new(), notes: Vec::new() };
    let mut search_tol = crate::falsification::DEFAULT_SEARCH_TOL;
    let payload = match &cli.command {
        Command::Verify { theorem, dims, search } => {
            search_tol = search.search_tol;
            run.verify(*theorem, dims, search)?
        }
        Command::Purify { input, env } => run.purify(input, *env)?,
        Command::Dilate { input, din, dout, outcomes } => run.dilate(input.as_deref(), *din, *dout, *outcomes)?,
        Command::Twirl { input, dims, factor, analytic, mc } => {
            run.twirl(input.as_deref(), dims.clone(), *factor, *analytic, *mc)?
        }
        Command::Falsify { family, dims, search, support } => {
            search_tol = search.search_tol;
            run.falsify(*family, dims, search, support.as_deref())?
        }
        Command::Run { file, run: name } => run.circuit(file, name.as_deref())?,
    };
    Ok(Report {
        command: Vec::new(),
        seed: cli.common.seed,
        threads: cli.common.threads,
        tolerances: Tolerances { tol, search_tol },
        checks: run.checks,
        notes: run.notes,
        payload,
        timing: Timing { total_ms: 0.0 },
    })
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))
}

fn positive(value: Option<usize>, default: usize, flag: &str) -> Result<usize, CliError> {
    match value.unwrap_or(default) {
        0 => Err(CliError::Usage(format!("--{flag} must be positive"))),
        v => Ok(v),
    }
}

fn system(label: &str, dim: usize) -> Result<System, CliError> {
    Ok(System::new(label, dim)?)
}

/// Projector onto `(Σ_j |j⟩|j⟩)/√d_B` embedded in `A ⊗ B`.
fn canonical_max_entangled(da: usize, db: usize) -> Result<ComplexMatrix, CliError> {
    let v = ComplexMatrix::from_fn(da, db, |i, j| if i == j { crate::linalg::ONE } else { crate::linalg::ZERO });
    Ok(max_entangled_from_isometry(&v, system("A", da)?, system("B", db)?, 1e-12)?.matrix)
}

fn matrix_or_null(m: Option<&ComplexMatrix>) -> Value {
    m.map_or(Value::Null, |m| serde_json::to_value(m).expect("matrix serializes"))
}

impl Run<'_> {
    fn check(&mut self, c: Check) {
        self.checks.push(c);
    }

    fn search_config(&self, s: &SearchArgs) -> Result<SearchConfig, CliError> {
        if s.batch == 0 || s.max_iter == 0 || s.search_tol.is_nan() || s.search_tol <= 0.0 {
            return Err(CliError::Usage("--batch, --max-iter and --search-tol must be positive".into()));
        }
        Ok(SearchConfig { batch: s.batch, tol: s.search_tol, max_iter: s.max_iter, ..SearchConfig::default() })
    }

    fn family_guard(&self, h: &HypothesisFamily) -> Result<(), CliError> {
        h.check()?;
        if h.total_dim() > MAX_TOTAL_DIM {
            return Err(CliError::Invalid(format!(
                "total dimension {} exceeds the supported maximum {MAX_TOTAL_DIM}",
                h.total_dim()
            )));
        }
        Ok(())
    }

    /// Analytic witness, optional Monte Carlo witness, and the search.
    fn investigate(
        &mut self,
        h: &HypothesisFamily,
        search: &SearchArgs,
    ) -> Result<(WitnessVerdict, SearchOutcome, Value), CliError> {
        self.family_guard(h)?;
        let witness = witness_unfalsifiable(h, AverageMethod::Analytic, self.ctx.tol)?;
        let mc = match self.common.samples {
            Some(n) if n > 0 => Some(witness_unfalsifiable(
                h,
                AverageMethod::MonteCarlo { samples: n, seed: self.common.seed, threads: self.common.threads },
                self.ctx.tol,
            )?),
            _ => None,
        };
        let cfg = self.search_config(search)?;
        let outcome = falsifier_search(h, cfg, &mut seeded_rng(self.common.seed))?;
        let verdict = json!({
            "family": h.name(),
            "dims": h.dims(),
            "method": witness.method,
            "samples": self.common.samples,
            "seed": self.common.seed,
            "lambda_min": witness.lambda_min,
            "lambda_min_unnormalized": witness.lambda_min_unnormalized,
            "unfalsifiable": witness.unfalsifiable,
            "monte_carlo_lambda_min": mc.as_ref().map(|v| v.lambda_min),
            "falsifier": matrix_or_null(outcome.falsifier.as_ref().map(|t| &t.falsifier.matrix)),
            "search_residual": outcome.residual,
            "search_min_residual": outcome.min_residual,
            "search_iterations": outcome.iterations,
            "span_dim": outcome.span.dim,
            "span_ambient_dim": outcome.span.ambient_dim,
            "max_violation_on_fresh_samples": outcome.max_violation,
            "support_falsifier": matrix_or_null(witness.support_falsifier.as_ref().map(|t| &t.falsifier.matrix)),
            "note": outcome.note,
        });
        Ok((witness, outcome, verdict))
    }

    fn expect_unfalsifiable(&mut self, witness: &WitnessVerdict, expected: f64, outcome: &SearchOutcome) {
        self.check(
            Check::at_most("lambda_min", (witness.lambda_min - expected).abs(), EXACT)
                .with("lambda_min", witness.lambda_min)
                .with("expected", expected)
                .with("lambda_min_unnormalized", witness.lambda_min_unnormalized),
        );
        self.check(
            Check::new("witness_unfalsifiable", witness.unfalsifiable)
                .with("lambda_min", witness.lambda_min)
                .with("tol", self.ctx.tol),
        );
        self.check(
            Check::new("search_finds_no_falsifier", outcome.falsifier.is_none())
                .with("min_residual", outcome.min_residual)
                .with("iterations", outcome.iterations as f64)
                .with("span_dim", outcome.span.dim as f64),
        );
    }

    fn twirl_checks(&mut self, da: usize, db: usize) -> Result<Value, CliError> {
        let x = canonical_max_entangled(da, db)?;
        let target = ComplexMatrix::identity(da * db).scale_real(1.0 / (da * db) as f64);
        let exact = twirl_analytic(&x, &[da, db], 0)?;
        self.check(Check::at_most("analytic_twirl", exact.max_abs_diff(&target), EXACT));
        let n = self.common.samples.unwrap_or(DEFAULT_MC_SAMPLES).max(1);
        let mc = twirl_monte_carlo_parallel(&x, &[da, db], 0, n, self.common.seed, self.common.threads)?;
        self.check(Check::at_most("monte_carlo_twirl", mc.max_abs_diff(&target), MC_ENTRYWISE).with("samples", n as f64));
        self.notes.push(TWIRL_CONVENTION_NOTE.into());
        Ok(json!({ "analytic": exact, "monte_carlo": mc, "samples": n }))
    }

    fn verify(&mut self, theorem: Theorem, dims: &DimArgs, search: &SearchArgs) -> Result<Value, CliError> {
        let payload = match theorem {
            Theorem::Purity => {
                let d = positive(dims.dim, 2, "dim")?;
                let h = HypothesisFamily::Purity { dim: d };
                let (w, o, v) = self.investigate(&h, search)?;
                self.expect_unfalsifiable(&w, 1.0 / d as f64, &o);
                self.check(Check::new("span_is_full", o.span.dim == o.span.ambient_dim).with("span_dim", o.span.dim as f64));
                json!({ "verdict": v })
            }
            Theorem::PurityNcopies => {
                let d = positive(dims.dim, 2, "dim")?;
                let n = positive(dims.copies, 2, "copies")?;
                let h = HypothesisFamily::PurityNCopies { dim: d, copies: n };
                let (w, o, v) = self.investigate(&h, search)?;
                self.check(Check::new("witness_inconclusive", !w.unfalsifiable || n == 1).with("lambda_min", w.lambda_min));
                let mut extra = json!({});
                match &o.falsifier {
                    Some(t) if n > 1 => {
                        let f = &t.falsifier.matrix;
                        let bound = 10.0 * search.search_tol;
                        self.check(Check::at_most("verified_on_fresh_samples", o.max_violation.unwrap_or(f64::INFINITY), bound));
                        let overlap = f.hs_inner(&symmetric_projector(d, n)).re.abs();
                        self.check(Check::at_most("orthogonal_to_symmetric_subspace", overlap, bound));
                        let mixed = ComplexMatrix::identity(d).scale_real(1.0 / d as f64);
                        let sigma = kron_all(std::iter::repeat_n(&mixed, n));
                        let chance = f.hs_inner(&sigma).re;
                        self.check(Check::new("fires_on_maximally_mixed", chance > bound).with("chance", chance));
                        extra = json!({ "chance_on_maximally_mixed": chance });
                        self.notes.push(NCOPIES_NOTE.into());
                    }
                    Some(_) => self.check(Check::new("single_copy_has_no_falsifier", false)),
                    None => self.check(Check::new("falsifier_found", n == 1).with("min_residual", o.min_residual)),
                }
                json!({ "verdict": v, "probe": extra })
            }
            Theorem::Atomicity => {
                let din = positive(dims.din, 2, "din")?;
                let dout = positive(dims.dout, 2, "dout")?;
                let h = HypothesisFamily::AtomicTransformation { dim_in: din, dim_out: dout };
                let (w, o, v) = self.investigate(&h, search)?;
                self.expect_unfalsifiable(&w, 1.0 / (din * dout) as f64, &o);
                let reduced = witness_unfalsifiable(&h.reduced(), AverageMethod::Analytic, self.ctx.tol)?;
                self.check(Check::at_most("matches_reduced_family", (reduced.lambda_min - w.lambda_min).abs(), EXACT));
                json!({ "verdict": v, "reduced_family": h.reduced().name() })
            }
            Theorem::MaxEntanglement => {
                let da = positive(dims.dim, 2, "dim")?;
                let db = positive(dims.dim_b, da, "dim-b")?;
                let h = HypothesisFamily::MaxEntangled { dim_a: da, dim_b: db };
                self.family_guard(&h)?;
                let twirl = self.twirl_checks(da, db)?;
                let (w, o, v) = self.investigate(&h, search)?;
                self.expect_unfalsifiable(&w, 1.0 / (da * db) as f64, &o);
                json!({ "verdict": v, "twirl": twirl })
            }
            Theorem::Isometricity => {
                let din = positive(dims.din, 2, "din")?;
                let dout = positive(dims.dout, din, "dout")?;
                let h = HypothesisFamily::IsometricTransformation { dim_in: din, dim_out: dout };
                self.family_guard(&h)?;
                let twirl = self.twirl_checks(dout, din)?;
                let (w, o, v) = self.investigate(&h, search)?;
                self.expect_unfalsifiable(&w, 1.0 / (din * dout) as f64, &o);
                let reduced = witness_unfalsifiable(&h.reduced(), AverageMethod::Analytic, self.ctx.tol)?;
                self.check(Check::at_most("matches_reduced_family", (reduced.lambda_min - w.lambda_min).abs(), EXACT));
                json!({ "verdict": v, "twirl": twirl, "reduced_family": h.reduced().name() })
            }
            Theorem::MarginalOfPure => self.verify_marginal(dims, search)?,
            Theorem::UnitaryRealization => {
                let din = positive(dims.din, 2, "din")?;
                let dout = positive(dims.dout, 2, "dout")?;
                let outcomes = positive(dims.outcomes, 2, "outcomes")?;
                let mut rng = seeded_rng(self.common.seed);
                let inst = random_instrument(&system("A", din)?, &system("B", dout)?, outcomes, 1, &mut rng)?;
                let (d, err) = dilation_round_trip(&inst)?;
                self.check(Check::at_most("dilation_round_trip", err, ROUND_TRIP));
                self.check(Check::at_most("unitarity", d.unitary.isometry_residual(), ROUND_TRIP));
                let h = HypothesisFamily::IsometricTransformation { dim_in: din, dim_out: din };
                let (w, o, v) = self.investigate(&h, search)?;
                self.expect_unfalsifiable(&w, 1.0 / (din * din) as f64, &o);
                json!({ "dilation": d, "round_trip_error": err, "unitarity_verdict": v })
            }
        };
        Ok(payload)
    }

    fn verify_marginal(&mut self, dims: &DimArgs, search: &SearchArgs) -> Result<Value, CliError> {
        let rho = match &dims.state {
            Some(path) => {
                let m: ComplexMatrix = read_json(path)?;
                State::new_with(system("A", m.rows())?, m, &self.ctx)?
            }
            None => {
                let d = positive(dims.dim, 2, "dim")?;
                let m = random_density(d, &mut seeded_rng(self.common.seed ^ 0x9e37_79b9_7f4a_7c15));
                State::new(system("A", d)?, m)?
            }
        };
        let d = rho.system.dim;
        let de = positive(dims.env, d, "env")?;
        let h = HypothesisFamily::marginal_of_pure(rho.clone(), de)?;
        let (w, o, v) = self.investigate(&h, search)?;
        let eig_min = eig_hermitian(&rho.matrix)?.min().max(0.0);
        let expected = eig_min / de as f64;
        self.notes.push(TWIRL_CONVENTION_NOTE.into());
        match h.deficient_support() {
            None => self.expect_unfalsifiable(&w, expected, &o),
            Some(k) => {
                self.check(Check::at_most("lambda_min", (w.lambda_min - expected).abs(), 1e-10));
                let reference = k.complement().projector();
                let residual = match &o.falsifier {
                    Some(t) => {
                        let fa = partial_trace(&t.falsifier.matrix, &[d, de], &[0])?;
                        let norm = fa.frobenius_norm();
                        fa.scale_real(1.0 / norm).hs_distance(&reference.scale_real(1.0 / reference.frobenius_norm()))
                    }
                    None => f64::INFINITY,
                };
                self.check(Check::at_most("reduced_falsifier_is_support_falsifier", residual, 1e-8));
                self.check(Check::new("witness_reports_support_falsifier", w.support_falsifier.is_some()));
            }
        }
        Ok(json!({ "verdict": v, "rho": rho.matrix }))
    }

    fn purify(&mut self, input: &Path, env: Option<usize>) -> Result<Value, CliError> {
        let m: ComplexMatrix = read_json(input)?;
        let rho = State::new_with(system("A", m.rows())?, m, &self.ctx)?;
        let d = rho.system.dim;
        let de = positive(env, d, "env")?;
        let p = purify_with_env(&rho, system("E", de)?)?;
        let marginal = partial_trace(&p.pure_state.matrix, &[d, de], &[0])?;
        let marginal_error = marginal.max_abs_diff(&rho.matrix);
        let second = eig_hermitian(&p.pure_state.matrix)?.values.get(1).copied().unwrap_or(0.0).abs();
        self.check(Check::at_most("marginal_error", marginal_error, self.ctx.tol));
        self.check(Check::at_most("second_eigenvalue", second, self.ctx.tol));
        Ok(json!({ "purification": p, "marginal_error": marginal_error, "second_eigenvalue": second }))
    }

    fn dilate(
        &mut self,
        input: Option<&Path>,
        din: Option<usize>,
        dout: Option<usize>,
        outcomes: Option<usize>,
    ) -> Result<Value, CliError> {
        let inst = match input {
            Some(path) => {
                let sets: Vec<Vec<ComplexMatrix>> = read_json(path)?;
                let first = sets.first().and_then(|k| k.first()).ok_or_else(|| CliError::Invalid("empty instrument".into()))?;
                let (a, b) = (system("A", first.cols())?, system("B", first.rows())?);
                let ops = sets
                    .into_iter()
                    .map(|k| QuantumOperation::new_with(a.clone(), b.clone(), k, &self.ctx))
                    .collect::<crate::Result<Vec<_>>>()?;
                Instrument::new_with(ops.into_iter().enumerate().map(|(i, op)| (i.to_string(), op)).collect(), &self.ctx)?
            }
            None => {
                let a = system("A", positive(din, 2, "din")?)?;
                let b = system("B", positive(dout, 2, "dout")?)?;
                random_instrument(&a, &b, positive(outcomes, 2, "outcomes")?, 1, &mut seeded_rng(self.common.seed))?
            }
        };
        let (d, err) = dilation_round_trip(&inst)?;
        self.check(Check::at_most("dilation_round_trip", err, ROUND_TRIP));
        self.check(Check::at_most("unitarity", d.unitary.isometry_residual(), ROUND_TRIP));
        Ok(json!({ "dilation": d, "round_trip_error": err }))
    }

    fn twirl(
        &mut self,
        input: Option<&Path>,
        dims: Option<Vec<usize>>,
        factor: usize,
        analytic_only: bool,
        mc: Option<usize>,
    ) -> Result<Value, CliError> {
        let dims = dims.unwrap_or_else(|| vec![2, 2]);
        if dims.is_empty() || dims.contains(&0) {
            return Err(CliError::Usage("--dims must list positive dimensions".into()));
        }
        let x = match input {
            Some(path) => read_json::<ComplexMatrix>(path)?,
            None if dims.len() == 2 && dims[0] >= dims[1] => canonical_max_entangled(dims[0], dims[1])?,
            None => return Err(CliError::Usage("the default operator needs --dims A,B with A >= B".into())),
        };
        let exact = twirl_analytic(&x, &dims, factor)?;
        self.check(Check::at_most("trace_preserved", (exact.trace() - x.trace()).norm(), EXACT));
        if analytic_only {
            return Ok(json!({ "dims": dims, "factor": factor, "analytic": exact }));
        }
        let n = mc.or(self.common.samples).unwrap_or(DEFAULT_MC_SAMPLES);
        if n == 0 {
            return Err(CliError::Usage("Monte Carlo sample count must be positive".into()));
        }
        let est = twirl_monte_carlo_parallel(&x, &dims, factor, n, self.common.seed, self.common.threads)?;
        let hs_error = est.hs_distance(&exact);
        let max_entry_error = est.max_abs_diff(&exact);
        self.check(Check::at_most("hs_error", hs_error, 0.05 * x.frobenius_norm()));
        Ok(json!({
            "dims": dims,
            "factor": factor,
            "samples": n,
            "analytic": exact,
            "monte_carlo": est,
            "hs_error": hs_error,
            "max_entry_error": max_entry_error,
        }))
    }

    fn falsify(
        &mut self,
        family: FamilyName,
        dims: &DimArgs,
        search: &SearchArgs,
        support: Option<&[usize]>,
    ) -> Result<Value, CliError> {
        let h = match family {
            FamilyName::Purity => HypothesisFamily::Purity { dim: positive(dims.dim, 2, "dim")? },
            FamilyName::PurityNcopies => HypothesisFamily::PurityNCopies {
                dim: positive(dims.dim, 2, "dim")?,
                copies: positive(dims.copies, 2, "copies")?,
            },
            FamilyName::MaxEntangled => {
                let da = positive(dims.dim, 2, "dim")?;
                HypothesisFamily::MaxEntangled { dim_a: da, dim_b: positive(dims.dim_b, da, "dim-b")? }
            }
            FamilyName::MarginalOfPure => {
                let rho = match &dims.state {
                    Some(path) => {
                        let m: ComplexMatrix = read_json(path)?;
                        State::new_with(system("A", m.rows())?, m, &self.ctx)?
                    }
                    None => State::maximally_mixed(system("A", positive(dims.dim, 2, "dim")?)?),
                };
                let de = positive(dims.env, rho.system.dim, "env")?;
                HypothesisFamily::marginal_of_pure(rho, de)?
            }
            FamilyName::Atomic => HypothesisFamily::AtomicTransformation {
                dim_in: positive(dims.din, 2, "din")?,
                dim_out: positive(dims.dout, 2, "dout")?,
            },
            FamilyName::Isometric => {
                let din = positive(dims.din, 2, "din")?;
                HypothesisFamily::IsometricTransformation { dim_in: din, dim_out: positive(dims.dout, din, "dout")? }
            }
            FamilyName::Support => {
                let d = positive(dims.dim, 2, "dim")?;
                let idx = support.ok_or_else(|| CliError::Usage("family `support` needs --support".into()))?;
                HypothesisFamily::StateSupport { support: Subspace::coordinate(d, idx)? }
            }
        };
        let (_, outcome, verdict) = self.investigate(&h, search)?;
        if let Some(note) = &outcome.note {
            self.notes.push(note.clone());
        }
        Ok(verdict)
    }

    fn circuit(&mut self, file: &Path, only: Option<&str>) -> Result<Value, CliError> {
        let program = load_file(file)?;
        let names: Vec<String> = match only {
            Some(n) => vec![n.to_string()],
            None => program.runs.iter().map(|r| r.name.clone()).collect(),
        };
        let results = names
            .iter()
            .map(|n| evaluate(&program, n))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| CliError::from(vec![e]))?;
        Ok(json!({ "file": file.display().to_string(), "runs": results }))
    }
}
