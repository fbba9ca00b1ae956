use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use super::check::{BoxValue, RunKind, TypedProgram};
use super::ast::Expr;
use super::error::DslError;
use crate::model::{born_probability, compose_par, compose_seq, QuantumOperation, State};

/// Kraus sets longer than `d_in·d_out` are re-derived from the Choi matrix
/// with this eigenvalue cut.
const COMPRESS_TOL: f64 = 1e-14;

#[derive(Clone, Debug)]
pub enum RunValue {
    Probability(f64),
    State(State),
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub run: String,
    pub value: RunValue,
}

impl RunResult {
    pub fn probability(&self) -> Option<f64> {
        match self.value {
            RunValue::Probability(p) => Some(p),
            RunValue::State(_) => None,
        }
    }

    pub fn state(&self) -> Option<&State> {
        match &self.value {
            RunValue::State(s) => Some(s),
            RunValue::Probability(_) => None,
        }
    }
}

impl Serialize for RunResult {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("RunResult", 3)?;
        st.serialize_field("run", &self.run)?;
        match &self.value {
            RunValue::Probability(p) => {
                st.serialize_field("kind", "probability")?;
                st.serialize_field("value", p)?;
            }
            RunValue::State(state) => {
                st.serialize_field("kind", "state")?;
                st.serialize_field("value", &state.matrix)?;
            }
        }
        st.end()
    }
}

/// Outcome choices overriding bare instrument references: instrument name
/// to outcome index.
pub type OutcomeOverrides<'a> = &'a [(String, usize)];

fn fold(p: &TypedProgram, e: &Expr, overrides: OutcomeOverrides) -> Result<QuantumOperation, DslError> {
    let internal = |span, err: crate::Error| DslError::InvalidDeclaration {
        span,
        name: "<expression>".into(),
        reason: err.to_string(),
    };
    let op = match e {
        Expr::Ref { name, outcome, span } => {
            let b = p.boxes.get(name).ok_or_else(|| DslError::UnknownIdentifier { span: *span, name: name.clone() })?;
            match &b.value {
                BoxValue::Operation(op) => op.clone(),
                BoxValue::Instrument(inst) => {
                    let chosen = outcome.or_else(|| overrides.iter().find(|(n, _)| n == name).map(|&(_, k)| k));
                    match chosen {
                        Some(k) => inst
                            .operation(k)
                            .cloned()
                            .ok_or(DslError::OutcomeOutOfRange { span: *span, name: name.clone(), outcome: k, count: inst.len() })?,
                        None => inst.coarse_grained(),
                    }
                }
            }
        }
        Expr::Seq { left, right, span } => {
            let l = fold(p, left, overrides)?;
            let r = fold(p, right, overrides)?;
            compose_seq(&r, &l).map_err(|err| internal(*span, err))?
        }
        Expr::Par { top, bottom, .. } => compose_par(&fold(p, top, overrides)?, &fold(p, bottom, overrides)?),
    };
    op.compressed(COMPRESS_TOL).map_err(|err| internal(e.span(), err))
}

/// Folds the run into one operation from the trivial system and applies the
/// Born rule (closed runs) or returns the prepared state (open runs).
pub fn evaluate(p: &TypedProgram, run: &str) -> Result<RunResult, DslError> {
    evaluate_with(p, run, &[])
}

/// As [`evaluate`], with bare references to the listed instruments replaced by
/// a single outcome.
pub fn evaluate_with(p: &TypedProgram, run: &str, overrides: OutcomeOverrides) -> Result<RunResult, DslError> {
    let r = p.run(run).ok_or_else(|| DslError::UnknownRun(run.to_string()))?;
    let op = fold(p, &r.expr, overrides)?;
    let state = op.as_state().map_err(|err| DslError::InvalidDeclaration {
        span: r.expr.span(),
        name: run.to_string(),
        reason: err.to_string(),
    })?;
    let value = match r.kind {
        RunKind::Probability => RunValue::Probability(born_probability(&state)),
        RunKind::State => RunValue::State(state),
    };
    Ok(RunResult { run: run.to_string(), value })
}

/// Evaluates every run in declaration order.
pub fn evaluate_all(p: &TypedProgram) -> Result<Vec<RunResult>, DslError> {
    p.runs.iter().map(|r| evaluate(p, &r.name)).collect()
}
