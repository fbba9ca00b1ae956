use std::path::{Path, PathBuf};

use proptest::prelude::*;
use qfals::circuit::{evaluate, evaluate_with, load_file, parse, typecheck, RunValue};
use qfals::linalg::{random_density, seeded_rng, ComplexMatrix};
use qfals::model::{random_operation, System};
use rand::Rng;

fn corpus(kind: &str) -> Vec<PathBuf> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/corpus").join(kind);
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    files
}

fn probability(v: &RunValue) -> f64 {
    match v {
        RunValue::Probability(p) => *p,
        RunValue::State(_) => panic!("expected a closed run"),
    }
}

#[test]
fn print_then_parse_is_a_fixed_point() {
    for path in corpus("positive") {
        let first = parse(&std::fs::read_to_string(&path).unwrap()).unwrap();
        let printed = first.to_string();
        let second = parse(&printed).unwrap_or_else(|e| panic!("{}: {e}\n{printed}", path.display()));
        assert_eq!(first.without_spans(), second.without_spans(), "{}", path.display());
        assert_eq!(second.to_string(), printed);
    }
}

#[test]
fn instrument_outcomes_sum_to_erased_program() {
    let mut checked = 0;
    for path in corpus("positive") {
        let p = load_file(&path).unwrap();
        for run in &p.runs {
            let RunValue::Probability(erased) = evaluate(&p, &run.name).unwrap().value else { continue };
            for (name, count) in p.instruments_in(run) {
                let total: f64 = (0..count)
                    .map(|k| probability(&evaluate_with(&p, &run.name, &[(name.clone(), k)]).unwrap().value))
                    .sum();
                assert!((total - erased).abs() <= 1e-10, "{}: {}", path.display(), run.name);
                checked += 1;
            }
        }
    }
    assert!(checked > 0);
}

#[test]
fn corpus_reassociations_agree() {
    let p = load_file(&corpus("positive").into_iter().find(|f| f.ends_with("parallel.qc")).unwrap()).unwrap();
    let values: Vec<f64> = ["left", "right", "split"].iter().map(|r| probability(&evaluate(&p, r).unwrap().value)).collect();
    assert!(values.iter().all(|v| (v - values[0]).abs() <= 1e-12));
}

/// Random binary bracketing of `items` joined by `op`.
fn bracket<R: Rng>(items: &[String], op: &str, rng: &mut R) -> String {
    if items.len() == 1 {
        return items[0].clone();
    }
    let cut = rng.random_range(1..items.len());
    format!("({} {op} {})", bracket(&items[..cut], op, rng), bracket(&items[cut..], op, rng))
}

fn write_json<T: serde::Serialize>(dir: &Path, name: &str, value: &T) {
    std::fs::write(dir.join(name), serde_json::to_string(value).unwrap()).unwrap();
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sequential_reassociation_is_invariant(seed in any::<u64>(), n in 2usize..6) {
        let dir = tempfile::tempdir().unwrap();
        let mut rng = seeded_rng(seed);
        let a = System::new("A", 2).unwrap();
        let mut src = String::from("system A 2\nstate s : A = file \"s.json\"\neffect e : A = proj [1,0; 0.5,0.5]\n");
        write_json(dir.path(), "s.json", &random_density(2, &mut rng));
        let names: Vec<String> = (0..n).map(|i| format!("t{i}")).collect();
        for name in &names {
            let op = random_operation(&a, &a, 2, &mut rng).unwrap();
            write_json(dir.path(), &format!("{name}.json"), &op.kraus().to_vec());
            src.push_str(&format!("channel {name} : A -> A = kraus file \"{name}.json\"\n"));
        }
        let mut chain = vec!["s".to_string()];
        chain.extend(names);
        chain.push("e".into());
        for k in 0..3 {
            src.push_str(&format!("run r{k} = {}\n", bracket(&chain, ";", &mut rng)));
        }
        let p = typecheck(&parse(&src).unwrap(), dir.path()).unwrap();
        let v: Vec<f64> = (0..3).map(|k| probability(&evaluate(&p, &format!("r{k}")).unwrap().value)).collect();
        prop_assert!((v[0] - v[1]).abs() <= 1e-12 && (v[0] - v[2]).abs() <= 1e-12);
    }

    #[test]
    fn parallel_reassociation_is_invariant(seed in any::<u64>()) {
        let dir = tempfile::tempdir().unwrap();
        let mut rng = seeded_rng(seed);
        let effect: ComplexMatrix = {
            let m = random_density(8, &mut rng);
            m.scale_real(1.0 / qfals::linalg::eig_hermitian(&m).unwrap().max())
        };
        write_json(dir.path(), "e.json", &effect);
        let mut src = String::from("system A 2\nsystem B 2\nsystem C 2\neffect e : A, B, C = file \"e.json\"\n");
        for (label, sys) in [("a", "A"), ("b", "B"), ("c", "C")] {
            write_json(dir.path(), &format!("{label}.json"), &random_density(2, &mut rng));
            src.push_str(&format!("state {label} : {sys} = file \"{label}.json\"\n"));
        }
        let items = vec!["a".to_string(), "b".into(), "c".into()];
        src.push_str("run left = ((a || b) || c) ; e\nrun right = (a || (b || c)) ; e\n");
        src.push_str(&format!("run any = {} ; e\n", bracket(&items, "||", &mut rng)));
        let p = typecheck(&parse(&src).unwrap(), dir.path()).unwrap();
        let v: Vec<f64> = ["left", "right", "any"].iter().map(|r| probability(&evaluate(&p, r).unwrap().value)).collect();
        prop_assert!((v[0] - v[1]).abs() <= 1e-12 && (v[0] - v[2]).abs() <= 1e-12);
    }
}

#[test]
fn negative_corpus_categories() {
    for path in corpus("negative") {
        let src = std::fs::read_to_string(&path).unwrap();
        let expected = src.lines().next().unwrap().trim_start_matches("# expect: ").trim();
        let errs = load_file(&path).unwrap_err();
        assert_eq!(errs.len(), 1, "{}: {errs:?}", path.display());
        assert_eq!(errs[0].category(), expected, "{}", path.display());
    }
}
