use std::collections::HashMap;
use std::path::{Path, PathBuf};

use super::ast::{ChannelBody, EffectBody, Expr, Item, Program, Span, StateBody, VectorLit};
use super::error::DslError;
use crate::linalg::{ComplexMatrix, C64};
use crate::model::{Context, Effect, Instrument, QuantumOperation, State, System};

/// Ordered wire list of a box side.
pub type Wires = Vec<System>;

#[derive(Clone, Debug)]
pub enum BoxValue {
    Operation(QuantumOperation),
    Instrument(Instrument),
}

#[derive(Clone, Debug)]
pub struct ResolvedBox {
    pub inputs: Wires,
    pub outputs: Wires,
    pub value: BoxValue,
    pub span: Span,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunKind {
    Probability,
    State,
}

#[derive(Clone, Debug)]
pub struct TypedRun {
    pub name: String,
    pub expr: Expr,
    pub outputs: Wires,
    pub kind: RunKind,
}

#[derive(Clone, Debug)]
pub struct TypedProgram {
    pub program: Program,
    pub systems: HashMap<String, System>,
    pub boxes: HashMap<String, ResolvedBox>,
    pub runs: Vec<TypedRun>,
}

impl TypedProgram {
    pub fn run(&self, name: &str) -> Option<&TypedRun> {
        self.runs.iter().find(|r| r.name == name)
    }

    /// Instruments referenced without an outcome index in a run, with their
    /// outcome counts.
    pub fn instruments_in(&self, run: &TypedRun) -> Vec<(String, usize)> {
        let mut out: Vec<(String, usize)> = Vec::new();
        for (name, outcome) in run.expr.references() {
            if outcome.is_some() {
                continue;
            }
            if let Some(ResolvedBox { value: BoxValue::Instrument(i), .. }) = self.boxes.get(name) {
                if !out.iter().any(|(n, _)| n == name) {
                    out.push((name.to_string(), i.len()));
                }
            }
        }
        out
    }
}

pub fn wires_to_string(w: &[System]) -> String {
    w.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(", ")
}

fn vector(v: &VectorLit) -> ComplexMatrix {
    ComplexMatrix::column(&v.iter().map(|&(re, im)| C64::new(re, im)).collect::<Vec<_>>())
}

struct Resolver<'a> {
    base: &'a Path,
    ctx: Context,
    systems: HashMap<String, System>,
    errors: Vec<DslError>,
}

impl Resolver<'_> {
    fn wires(&mut self, names: &[String], span: Span) -> Option<Wires> {
        let mut out = Vec::new();
        for n in names {
            match self.systems.get(n) {
                Some(s) => out.push(s.clone()),
                None => {
                    self.errors.push(DslError::UnknownIdentifier { span, name: n.clone() });
                    return None;
                }
            }
        }
        Some(out)
    }

    fn load<T: serde::de::DeserializeOwned>(&self, path: &str, span: Span) -> Result<T, DslError> {
        let full: PathBuf = self.base.join(path);
        let err = |reason: String| DslError::File { span, path: path.to_string(), reason };
        let text = std::fs::read_to_string(&full).map_err(|e| err(e.to_string()))?;
        serde_json::from_str(&text).map_err(|e| err(e.to_string()))
    }

    fn invalid(name: &str, span: Span, e: impl std::fmt::Display) -> DslError {
        DslError::InvalidDeclaration { span, name: name.to_string(), reason: e.to_string() }
    }

    fn resolve(&mut self, item: &Item) -> Result<Option<(String, ResolvedBox)>, DslError> {
        let span = item.span();
        let name = item.name();
        let bad = |e: crate::Error| Self::invalid(name, span, e);
        let resolved = match item {
            Item::System { name, dim, .. } => {
                self.systems.insert(name.clone(), System { label: name.clone(), dim: *dim });
                return Ok(None);
            }
            Item::Run { .. } => return Ok(None),
            Item::State { systems, body, .. } => {
                let Some(outputs) = self.wires(systems, span) else { return Ok(None) };
                let sys = System::composite(&outputs);
                let state = match body {
                    StateBody::MaxMix => State::maximally_mixed(sys),
                    StateBody::Pure(v) => {
                        let v = vector(v);
                        let n = v.norm();
                        if n == 0.0 {
                            return Err(Self::invalid(name, span, "zero vector"));
                        }
                        State::pure(sys, &v.scale_real(1.0 / n)).map_err(bad)?
                    }
                    StateBody::File(path) => {
                        let m: ComplexMatrix = self.load(path, span)?;
                        State::new_with(sys, m, &self.ctx).map_err(bad)?
                    }
                };
                ResolvedBox { inputs: vec![], outputs, value: BoxValue::Operation(state.as_operation()), span }
            }
            Item::Channel { inputs, outputs, body, .. } => {
                let (Some(i), Some(o)) = (self.wires(inputs, span), self.wires(outputs, span)) else { return Ok(None) };
                let (si, so) = (System::composite(&i), System::composite(&o));
                let op = match body {
                    ChannelBody::Identity => {
                        if si.dim != so.dim {
                            return Err(Self::invalid(name, span, format!("identity between {si} and {so}")));
                        }
                        QuantumOperation::new(si.clone(), so, vec![ComplexMatrix::identity(si.dim)]).map_err(bad)?
                    }
                    ChannelBody::KrausFile(path) => {
                        let kraus: Vec<ComplexMatrix> = self.load(path, span)?;
                        QuantumOperation::new_with(si, so, kraus, &self.ctx).map_err(bad)?
                    }
                };
                ResolvedBox { inputs: i, outputs: o, value: BoxValue::Operation(op), span }
            }
            Item::Effect { systems, body, .. } => {
                let Some(inputs) = self.wires(systems, span) else { return Ok(None) };
                let sys = System::composite(&inputs);
                let effect = match body {
                    EffectBody::Total => Effect::deterministic(sys),
                    EffectBody::Proj(v) => Effect::projector(sys, &vector(v)).map_err(bad)?,
                    EffectBody::File(path) => {
                        let m: ComplexMatrix = self.load(path, span)?;
                        Effect::new_with(sys, m, &self.ctx).map_err(bad)?
                    }
                };
                ResolvedBox { inputs, outputs: vec![], value: BoxValue::Operation(effect.as_operation()), span }
            }
            Item::Instrument { inputs, outputs, path, .. } => {
                let (Some(i), Some(o)) = (self.wires(inputs, span), self.wires(outputs, span)) else { return Ok(None) };
                let (si, so) = (System::composite(&i), System::composite(&o));
                let sets: Vec<Vec<ComplexMatrix>> = self.load(path, span)?;
                let ops = sets
                    .into_iter()
                    .map(|k| QuantumOperation::new_with(si.clone(), so.clone(), k, &self.ctx))
                    .collect::<crate::Result<Vec<_>>>()
                    .map_err(bad)?;
                let inst = Instrument::new_with(
                    ops.into_iter().enumerate().map(|(k, op)| (k.to_string(), op)).collect(),
                    &self.ctx,
                )
                .map_err(bad)?;
                ResolvedBox { inputs: i, outputs: o, value: BoxValue::Instrument(inst), span }
            }
        };
        Ok(Some((name.to_string(), resolved)))
    }
}

fn expr_type(e: &Expr, boxes: &HashMap<String, ResolvedBox>) -> Result<(Wires, Wires), DslError> {
    match e {
        Expr::Ref { name, outcome, span } => {
            let b = boxes.get(name).ok_or_else(|| DslError::UnknownIdentifier { span: *span, name: name.clone() })?;
            match (&b.value, outcome) {
                (BoxValue::Instrument(i), Some(k)) if *k >= i.len() => {
                    Err(DslError::OutcomeOutOfRange { span: *span, name: name.clone(), outcome: *k, count: i.len() })
                }
                (BoxValue::Operation(_), Some(k)) => {
                    Err(DslError::OutcomeOutOfRange { span: *span, name: name.clone(), outcome: *k, count: 0 })
                }
                _ => Ok((b.inputs.clone(), b.outputs.clone())),
            }
        }
        Expr::Seq { left, right, span } => {
            let (li, lo) = expr_type(left, boxes)?;
            let (ri, ro) = expr_type(right, boxes)?;
            if lo != ri {
                return Err(DslError::WireMismatch { span: *span, expected: wires_to_string(&ri), found: wires_to_string(&lo) });
            }
            Ok((li, ro))
        }
        Expr::Par { top, bottom, .. } => {
            let (mut ti, mut to) = expr_type(top, boxes)?;
            let (bi, bo) = expr_type(bottom, boxes)?;
            ti.extend(bi);
            to.extend(bo);
            Ok((ti, to))
        }
    }
}

/// Loads referenced files, validates declarations and checks every run's
/// wiring. Paths are resolved against `base`.
pub fn typecheck(program: &Program, base: &Path) -> Result<TypedProgram, Vec<DslError>> {
    typecheck_with(program, base, &Context::default())
}

pub fn typecheck_with(program: &Program, base: &Path, ctx: &Context) -> Result<TypedProgram, Vec<DslError>> {
    let mut r = Resolver { base, ctx: *ctx, systems: HashMap::new(), errors: Vec::new() };
    let mut boxes = HashMap::new();
    let mut runs = Vec::new();
    // declarations that already produced an error; runs using them are skipped
    let mut failed: Vec<String> = Vec::new();
    for item in &program.items {
        if let Item::Run { name, expr, span } = item {
            if expr.references().iter().any(|(n, _)| failed.iter().any(|f| f == n)) {
                continue;
            }
            // only boxes declared above the run are visible
            match expr_type(expr, &boxes) {
                Ok((inputs, _)) if !inputs.is_empty() => r.errors.push(DslError::DanglingSystem {
                    span: *span,
                    run: name.clone(),
                    systems: wires_to_string(&inputs),
                }),
                Ok((_, outputs)) => {
                    let kind = if outputs.is_empty() { RunKind::Probability } else { RunKind::State };
                    runs.push(TypedRun { name: name.clone(), expr: expr.clone(), outputs, kind });
                }
                Err(e) => r.errors.push(e),
            }
            continue;
        }
        match r.resolve(item) {
            Ok(Some((name, b))) => {
                boxes.insert(name, b);
            }
            Ok(None) => {
                if !matches!(item, Item::System { .. }) {
                    failed.push(item.name().to_string());
                }
            }
            Err(e) => {
                failed.push(item.name().to_string());
                r.errors.push(e);
            }
        }
    }
    let errors = r.errors;
    if errors.is_empty() {
        Ok(TypedProgram { program: program.clone(), systems: r.systems, boxes, runs })
    } else {
        Err(errors)
    }
}
