use std::path::PathBuf;
use std::process::{Command, Output};

use hochsheaf::model::fixture_names;
use hochsheaf_cli::{Report, Status};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hochsheaf"))
}

fn fixture(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "tests", "fixtures", name].iter().collect();
    p.display().to_string()
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json(args: &[&str]) -> (Report, i32) {
    let mut full = vec!["--format", "json"];
    full.extend_from_slice(args);
    let out = run(&full);
    let text = String::from_utf8(out.stdout).unwrap();
    let report = Report::from_json(&text).unwrap_or_else(|e| panic!("{args:?}: {e}\n{text}"));
    assert_eq!(Report::from_json(&report.to_json()).unwrap(), report);
    (report, out.status.code().unwrap())
}

fn row(r: &Report, table: &str, label: &str) -> Vec<usize> {
    r.table(table).and_then(|t| t.get(label)).unwrap_or_else(|| panic!("{table}/{label}")).to_vec()
}

#[test]
fn golden_hh_dimensions() {
    let (r, code) = json(&["hh", "--model", "point_dual", "--max-degree", "4"]);
    assert_eq!(code, 0);
    assert_eq!(row(&r, "cohomology", "dim H^q"), vec![2, 1, 1, 1]);
    assert_eq!(row(&r, "cochains", "dim C^p"), vec![2, 4, 8, 16, 32]);
    let (r, _) = json(&["hh", "--model", "chain2"]);
    assert_eq!(row(&r, "cohomology", "dim H^q")[..3], [1, 0, 0]);
    let (r, _) = json(&["hh", "--model", "point_field"]);
    assert_eq!(row(&r, "cohomology", "dim H^q")[..3], [1, 0, 0]);
    let (r, code) = json(&["hh", "--model", "pseudocircle_redundant", "--basis-index", "0", "--normalized"]);
    assert_eq!(code, 0);
    assert_eq!(row(&r, "cohomology", "dim H^q")[..3], [1, 1, 0]);
    assert_eq!(row(&r, "cohomology", "dim H̄^q")[..3], [1, 1, 0]);
}

#[test]
fn every_fixture_passes_every_command() {
    for name in fixture_names() {
        for args in [
            vec!["hh", "--model", name],
            vec!["sheafcheck", "--model", name, "--cover", "X"],
            vec!["spectral", "--model", name],
            vec!["validate", "--model", name],
            vec!["family", "--model", name],
            vec!["acyclic", "--model", name],
        ] {
            let (r, code) = json(&args);
            assert_eq!(code, 0, "{args:?}: {:?}", r.checks);
            assert!(r.checks.iter().all(|c| c.status == Status::Pass));
        }
    }
}

#[test]
fn counterexample_and_its_repair() {
    let (r, code) = json(&[
        "sheafcheck",
        "--model",
        "pseudocircle_redundant",
        "--family",
        "single",
        "--cover",
        "Uc,Ud",
        "--degree",
        "0",
    ]);
    assert_eq!(code, 3);
    assert_eq!(r.find_check("separated C^0").unwrap().status, Status::Fail);
    let w = &r.witnesses[0];
    assert_eq!(w.lines, vec!["(X) [] ↦ 1·1", "restriction to Uc: 0", "restriction to Ud: 0"]);
    let (r, code) = json(&["sheafcheck", "--model", "pseudocircle_redundant", "--cover", "Uc,Ud"]);
    assert_eq!(code, 0);
    assert_eq!(r.checks.len(), 8);
}

#[test]
fn spectral_reports() {
    let (r, code) = json(&["spectral", "--model", "pseudocircle_redundant"]);
    assert_eq!(code, 0);
    assert_eq!(row(&r, "E_2", "q=0"), vec![1, 1]);
    assert_eq!(row(&r, "abutment", "sum E_inf"), vec![1, 1, 0]);
    let (r, _) = json(&["spectral", "--model", "point_dual"]);
    assert_eq!(row(&r, "abutment", "sum E_inf"), vec![2, 1, 1]);
    assert_eq!(r.table("E_2").unwrap().columns.len(), 1);
    let (r, _) = json(&["spectral", "--model", "chain2"]);
    assert_eq!(row(&r, "E_2", "q=0"), vec![1, 0]);
    assert_eq!(row(&r, "abutment", "H^n(C(X))"), vec![1, 0, 0]);
    let (r, code) = json(&["spectral", "--model", "chain2", "--max-n", "7"]);
    assert_eq!(code, 0);
    assert_eq!(r.warnings.len(), 1);
    assert_eq!(row(&r, "abutment", "H^n(C(X))").len(), 3);
}

#[test]
fn family_lists_terminal_basis() {
    let (r, _) = json(&["family", "--model", "pseudocircle_redundant"]);
    let lines = &r.witnesses[0].lines;
    assert!(lines.iter().any(|l| l.contains("{Ua,Ub,Uc,Ud} on X") && l.contains("terminal")));
    assert_eq!(row(&r, "B(U)", "X"), vec![2, 4]);
}

#[test]
fn output_is_deterministic_and_thread_independent() {
    let args = ["--format", "json", "spectral", "--model", "pseudocircle"];
    let a = run(&args).stdout;
    let b = run(&args).stdout;
    let c = bin().args(args).env("HOCHSHEAF_THREADS", "1").output().unwrap().stdout;
    assert_eq!(a, b);
    assert_eq!(a, c);
}

#[test]
fn prime_field_tables_match_rationals() {
    for name in fixture_names() {
        for cmd in ["hh", "spectral", "acyclic"] {
            let (q, _) = json(&[cmd, "--model", name]);
            let (p, code) = json(&["--field", "fp:5", cmd, "--model", name]);
            assert_eq!(code, 0);
            assert_eq!(p.field, "fp:5");
            assert_eq!(q.tables, p.tables, "{cmd} {name}");
        }
    }
}

#[test]
fn exit_codes() {
    let code = |args: &[&str]| run(args).status.code().unwrap();
    assert_eq!(code(&["validate", "--model", &fixture("broken_space.json")]), 2);
    assert_eq!(code(&["validate", "--model", &fixture("broken_algebra.json")]), 2);
    assert_eq!(code(&["hh", "--model", &fixture("broken_space.json")]), 2);
    assert_eq!(code(&["validate", "--model", &fixture("unknown_id.json")]), 6);
    assert_eq!(code(&["validate", "--model", &fixture("bad_syntax.json")]), 5);
    assert_eq!(code(&["validate", "--model", &fixture("absent.json")]), 5);
    assert_eq!(code(&["hh"]), 4);
    assert_eq!(code(&["frobnicate"]), 4);
    assert_eq!(code(&["--help"]), 0);
    assert_eq!(code(&["hh", "--model", "chain2", "--max-degree", "0"]), 4);
    assert_eq!(code(&["hh", "--model", "chain2", "--basis-index", "9"]), 4);
    assert_eq!(code(&["--field", "fp:6", "hh", "--model", "chain2"]), 4);
    assert_eq!(code(&["sheafcheck", "--model", "pseudocircle", "--cover", "Uc"]), 4);
    assert_eq!(code(&["sheafcheck", "--model", "pseudocircle", "--cover", "Uz"]), 4);
}

#[test]
fn validate_prints_space_witness() {
    let (r, code) = json(&["validate", "--model", &fixture("broken_space.json")]);
    assert_eq!(code, 2);
    assert_eq!(r.checks[0].status, Status::Fail);
    assert!(r.witnesses[0].lines.iter().any(|l| l.contains("not in its own minimal open")));
}

#[test]
fn text_output_renders() {
    let out = run(&["hh", "--model", "chain2"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("hh · model chain2 · field Q"));
    assert!(text.trim_end().ends_with("verdict: PASS"));
}
