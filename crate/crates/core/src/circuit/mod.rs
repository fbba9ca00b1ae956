//! Text language for circuit diagrams.
//!
//! ```text
//! system A 2
//! system B 2
//! state bell : A, B = pure [1,0; 0,0; 0,0; 1,0]
//! effect e00 : A, B = proj [1,0; 0,0; 0,0; 0,0]
//! run p = bell ; e00
//! ```
//!
//! `;` composes sequentially in diagram order (left box first) and `||`
//! places boxes in parallel; `||` binds tighter than `;`. `NAME[k]` selects
//! outcome `k` of an instrument and a bare instrument name stands for its
//! coarse-grained channel. Vector literals are normalized.

mod ast;
mod check;
mod error;
mod eval;
mod lexer;
mod parser;

use std::path::Path;

pub use ast::{ChannelBody, EffectBody, Expr, Item, Program, Span, StateBody, VectorLit};
pub use check::{typecheck, typecheck_with, BoxValue, ResolvedBox, RunKind, TypedProgram, TypedRun, Wires};
pub use error::DslError;
pub use eval::{evaluate, evaluate_all, evaluate_with, RunResult, RunValue};
pub use lexer::{tokenize, Tok, Token};
pub use parser::parse;

/// Parses and typechecks `path`, resolving referenced files next to it.
pub fn load_file(path: &Path) -> Result<TypedProgram, Vec<DslError>> {
    let src = std::fs::read_to_string(path).map_err(|e| {
        vec![DslError::File { span: Span::default(), path: path.display().to_string(), reason: e.to_string() }]
    })?;
    let program = parse(&src).map_err(|e| vec![e])?;
    typecheck(&program, path.parent().unwrap_or(Path::new(".")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{ComplexMatrix, C64};
    use std::io::Write;

    fn run(src: &str) -> TypedProgram {
        typecheck(&parse(src).unwrap(), Path::new(".")).unwrap()
    }

    fn errors(src: &str) -> Vec<&'static str> {
        typecheck(&parse(src).unwrap(), Path::new(".")).unwrap_err().iter().map(|e| e.category()).collect()
    }

    #[test]
    fn maxmix_then_total_is_one() {
        let p = run("system A 2\nstate r : A = maxmix\neffect e : A = total\nrun p = r ; e");
        assert!((evaluate(&p, "p").unwrap().probability().unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn bell_projector_probability() {
        let p = run(
            "system A 2\nsystem B 2\nstate b : A, B = pure [1,0; 0,0; 0,0; 1,0]\n\
             effect e : A, B = proj [1,0; 0,0; 0,0; 0,0]\nrun p = b ; e\n\
             effect a0 : A = proj [1,0; 0,0]\neffect t : B = total\nrun q = b ; (a0 || t)",
        );
        assert!((evaluate(&p, "p").unwrap().probability().unwrap() - 0.5).abs() < 1e-15);
        assert!((evaluate(&p, "q").unwrap().probability().unwrap() - 0.5).abs() < 1e-15);
        assert!(matches!(evaluate(&p, "zz"), Err(DslError::UnknownRun(_))));
    }

    #[test]
    fn open_run_returns_state() {
        let p = run("system A 2\nsystem E 2\nstate psi : A, E = pure [0.8,0; 0,0; 0,0; 0.6,0]\n\
                     effect t : E = total\nchannel i : A -> A = id\nrun rho = psi ; (i || t)");
        let r = evaluate(&p, "rho").unwrap();
        let s = r.state().unwrap();
        assert!(s.matrix.max_abs_diff(&ComplexMatrix::diag_real(&[0.64, 0.36])) < 1e-15);
        let json = serde_json::to_value(&r).unwrap();
        assert_eq!(json["kind"], "state");
    }

    #[test]
    fn type_errors() {
        let base = "system A 2\nsystem B 2\nsystem C 3\nchannel f : A -> B = id\nchannel g : A -> C = kraus file \"none.json\"\n";
        assert_eq!(errors(&format!("{base}run x = f ; f")), vec!["file", "wire-mismatch"]);
        let src = "system A 2\nsystem B 2\nchannel f : A -> B = id\nchannel h : A -> B = id\nrun x = f ; h";
        let errs = typecheck(&parse(src).unwrap(), Path::new(".")).unwrap_err();
        assert_eq!(
            errs[0],
            DslError::WireMismatch { span: Span::new(5, 11), expected: "A(2)".into(), found: "B(2)".into() }
        );
        assert_eq!(errors("system A 2\nchannel f : A -> A = id\nrun x = f"), vec!["dangling-system"]);
        assert_eq!(errors("system A 2\nstate r : A = maxmix\nrun x = r ; q"), vec!["unknown-identifier"]);
        assert_eq!(errors("system A 2\nstate r : A = maxmix\nrun x = r[0]"), vec!["outcome-out-of-range"]);
        assert_eq!(errors("state r : Z = maxmix"), vec!["unknown-identifier"]);
        assert_eq!(errors("run x = r\nsystem A 2\nstate r : A = maxmix"), vec!["unknown-identifier"]);
    }

    #[test]
    fn instrument_outcomes_sum_to_coarse_grained() {
        let dir = tempfile::tempdir().unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let z = C64::new(0.0, 0.0);
        let m0 = ComplexMatrix::new(2, 2, vec![C64::new(1.0, 0.0), z, z, z]).unwrap();
        let m1 = ComplexMatrix::new(2, 2, vec![z, z, z, C64::new(1.0, 0.0)]).unwrap();
        let json = serde_json::to_string(&vec![vec![m0], vec![m1]]).unwrap();
        std::fs::File::create(dir.path().join("z.json")).unwrap().write_all(json.as_bytes()).unwrap();
        let src = format!(
            "system A 2\nstate plus : A = pure [{s},0; 0.5,0.5]\ninstrument M : A -> A = file \"z.json\"\n\
             effect t : A = total\nrun p0 = plus ; M[0] ; t\nrun p1 = plus ; M[1] ; t\nrun all = plus ; M ; t"
        );
        let p = typecheck(&parse(&src).unwrap(), dir.path()).unwrap();
        let get = |n: &str| evaluate(&p, n).unwrap().probability().unwrap();
        assert!((get("p0") + get("p1") - get("all")).abs() < 1e-12);
        assert!((get("all") - 1.0).abs() < 1e-12);
        let r = p.run("all").unwrap();
        assert_eq!(p.instruments_in(r), vec![("M".to_string(), 2)]);
        let via = evaluate_with(&p, "all", &[("M".into(), 1)]).unwrap().probability().unwrap();
        assert!((via - get("p1")).abs() < 1e-15);
    }
}
