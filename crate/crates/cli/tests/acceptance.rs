//! End-to-end acceptance run: one PASS/FAIL line per criterion.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use hochsheaf::colimit::{restriction_is_surjective, BasisPresheaf, CochainPresheaf, ColimitPresheaf, DegreeSlice};
use hochsheaf::hochschild::{build_complex, Cochain, HochschildComplex};
use hochsheaf::linalg::{add_scaled, Scalar};
use hochsheaf::model::{fixture_names, load_model, Model};
use hochsheaf::sheaftools::{
    acyclicity_report, cech_cohomology, cohomology_sheaf, sheaf_cohomology, sheafify, VectSheaf,
};
use hochsheaf::space::{check_closure_identities, generate_good_family, is_good_family, FiniteSpace, Open};
use hochsheaf::spectral::{build_hyper_double_complex, verify_local_to_global};
use hochsheaf_cli::{Report, Status};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn model(name: &str) -> Model {
    load_model(name, None).unwrap()
}

fn cli_json(args: &[&str]) -> (Report, i32) {
    let out = Command::new(env!("CARGO_BIN_EXE_hochsheaf"))
        .args(["--format", "json"])
        .args(args)
        .output()
        .expect("binary runs");
    let report = Report::from_json(&String::from_utf8_lossy(&out.stdout)).expect("json report");
    (report, out.status.code().unwrap_or(-1))
}

fn counterexample() -> Outcome {
    let (single, code) = cli_json(&[
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
    ensure(code == 3, || format!("single-basis run exited {code}"))?;
    let sep = single.find_check("separated C^0").ok_or("no separation check")?;
    ensure(sep.status == Status::Fail, || "single basis unexpectedly separated".into())?;
    let witness = single.witnesses.first().ok_or("no witness")?;
    let expected = ["(X) [] ↦ 1·1", "restriction to Uc: 0", "restriction to Ud: 0"];
    ensure(witness.lines == expected, || format!("witness {:?}", witness.lines))?;
    let (generated, code) = cli_json(&["sheafcheck", "--model", "pseudocircle_redundant", "--cover", "Uc,Ud"]);
    ensure(code == 0, || format!("generated run exited {code}"))?;
    for p in 0..=3 {
        for kind in ["separated", "gluing"] {
            let name = format!("{kind} C^{p}");
            let c = generated.find_check(&name).ok_or_else(|| format!("missing {name}"))?;
            ensure(c.status == Status::Pass, || format!("{name} failed"))?;
        }
    }
    Ok("single basis: witness 1 at (X), zero on Uc and Ud; generated family passes degrees 0–3".into())
}

fn chain_maps<C: CochainPresheaf>(c: &C, label: &str) -> Result<usize, String> {
    let space = c.space();
    let n = c.truncation();
    let opens: Vec<Open> = space.opens().into_iter().filter(|u| !u.is_empty()).collect();
    let mut identities = 0;
    for &u in &opens {
        let cu = c.complex_at(u).map_err(|e| e.to_string())?;
        for p in 0..n - 1 {
            let dd = cu.differential(p + 1).unwrap().mul(cu.differential(p).unwrap()).unwrap();
            ensure(dd.is_zero(), || format!("{label}: d² ≠ 0 on {} in degree {p}", space.name(u)))?;
            identities += 1;
        }
        for &v in opens.iter().filter(|v| v.is_subset(u)) {
            let cv = c.complex_at(v).map_err(|e| e.to_string())?;
            for p in 0..n {
                let left = cu.projection_matrix(&cv, p + 1).unwrap().mul(cu.differential(p).unwrap()).unwrap();
                let right = cv.differential(p).unwrap().mul(&cu.projection_matrix(&cv, p).unwrap()).unwrap();
                ensure(left == right, || {
                    format!("{label}: restriction {} → {} breaks d in degree {p}", space.name(u), space.name(v))
                })?;
                identities += 1;
            }
        }
    }
    Ok(identities)
}

fn differential_identities() -> Outcome {
    let mut total = 0;
    for name in fixture_names() {
        let m = model(name);
        let full = build_complex(&m.basis, &m.presheaf, 4).map_err(|e| e.to_string())?;
        for p in 0..3 {
            let dd = full.differential(p + 1).unwrap().mul(full.differential(p).unwrap()).unwrap();
            ensure(dd.is_zero(), || format!("{name}: d² ≠ 0 in degree {p}"))?;
            total += 1;
        }
        let generated = ColimitPresheaf::generated(m.presheaf.clone(), &m.basis, 4).map_err(|e| e.to_string())?;
        total += chain_maps(&generated, name)?;
        total += chain_maps(&BasisPresheaf::new(m.presheaf.clone(), m.basis.clone(), 4), name)?;
    }
    Ok(format!("{total} exact matrix identities over {} models at N = 4", fixture_names().count()))
}

fn golden_dims() -> Outcome {
    let dims = |cx: &HochschildComplex| -> Vec<usize> { (0..3).map(|q| cx.cohomology_dim(q).unwrap()).collect() };
    for (name, want) in [("point_field", [1, 0, 0]), ("point_dual", [2, 1, 1]), ("chain2", [1, 0, 0])] {
        let m = model(name);
        let got = dims(&build_complex(&m.basis, &m.presheaf, 4).unwrap());
        ensure(got == want, || format!("{name}: {got:?}"))?;
    }
    let m = model("pseudocircle");
    let got = dims(&build_complex(&m.basis, &m.presheaf, 4).unwrap());
    ensure(got == [1, 1, 0], || format!("pseudocircle: {got:?}"))?;
    let script = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../oracles/bar_ranks.py");
    let oracle = match Command::new("python3").arg(&script).output() {
        Ok(out) if out.status.success() => "bar-complex oracle agrees",
        Ok(out) => return Err(format!("oracle failed: {}", String::from_utf8_lossy(&out.stdout))),
        Err(_) => "python3 unavailable, frozen oracle values only",
    };
    Ok(format!("1,0,0 · 2,1,1 · 1,0,0 · 1,1,0; {oracle}"))
}

fn flabby_and_acyclic() -> Outcome {
    let mut maps = 0;
    let mut groups = 0;
    for name in fixture_names() {
        let m = model(name);
        let c = ColimitPresheaf::generated(m.presheaf.clone(), &m.basis, 4).map_err(|e| e.to_string())?;
        for p in 0..=3 {
            let slice = DegreeSlice { inner: &c, degree: p };
            for u in m.space.opens() {
                ensure(restriction_is_surjective(&slice, u).unwrap(), || {
                    format!("{name}: C^{p}(X) → C^{p}({}) not onto", m.space.name(u))
                })?;
                maps += 1;
            }
        }
        let report = acyclicity_report(&c).map_err(|e| e.to_string())?;
        ensure(report.passed(), || format!("{name}: {:?}", report.first_failure()))?;
        groups += report.entries.len();
    }
    Ok(format!("{maps} restrictions onto; {groups} (U, C^p) pairs acyclic"))
}

fn family_laws() -> Outcome {
    let m = model("pseudocircle_redundant");
    let checks = check_closure_identities(&m.space, &m.basis, 2).map_err(|e| e.to_string())?;
    let mut counts = Vec::new();
    for c in &checks {
        ensure(c.failure.is_none(), || format!("{:?}: {}", c.identity, c.failure.clone().unwrap_or_default()))?;
        ensure(c.instances > 0, || format!("{:?}: no instances", c.identity))?;
        counts.push(format!("{:?} {}", c.identity, c.instances));
    }
    let family = generate_good_family(&m.space, &m.basis).map_err(|e| e.to_string())?;
    let report = is_good_family(&m.space, &family);
    ensure(report.passed(), || format!("{:?}", report.first_violation()))?;
    Ok(format!("{}; generated family is good", counts.join(", ")))
}

fn local_to_global() -> Outcome {
    let m = model("pseudocircle_redundant");
    let c = ColimitPresheaf::generated(m.presheaf.clone(), &m.basis, 4).map_err(|e| e.to_string())?;
    let r = verify_local_to_global(&c, None).map_err(|e| e.to_string())?;
    ensure(r.passed(), || r.mismatches.join("; "))?;
    ensure(r.e2[0][0] == 1 && r.e2[1][0] == 1, || format!("E_2 row 0: {}, {}", r.e2[0][0], r.e2[1][0]))?;
    for p in 0..r.columns {
        for q in 1..=r.max_n {
            ensure(r.e2[p][q] == 0, || format!("E_2^{{{p},{q}}} = {}", r.e2[p][q]))?;
        }
    }
    ensure(r.degenerates_at_e2(), || format!("nonzero d_r: {:?}", r.nonzero_higher_differentials))?;
    ensure(r.abutment == [1, 1, 0], || format!("abutment {:?}", r.abutment))?;
    ensure(r.global_cohomology == [1, 1, 0], || format!("H(C_B(X)) {:?}", r.global_cohomology))?;
    ensure(r.e2.iter().zip(&r.sheaf_e2).all(|(a, b)| a[..b.len()] == b[..]), || "E_2 ≠ H^p(X, H^q)".into())?;
    Ok(format!("E_2 row 0 = 1,1, rows 1..{} zero, d_r≥2 = 0, abutment 1,1,0", r.max_n))
}

fn minimal_cover(space: &FiniteSpace, u: Open) -> Vec<Open> {
    u.points().map(|x| space.min_open(x)).collect()
}

fn derived_vs_cech(f: &VectSheaf, space: &FiniteSpace) -> Result<usize, String> {
    let mut pairs = 0;
    for u in space.opens().into_iter().filter(|u| !u.is_empty()) {
        let mut a = sheaf_cohomology(f, u).map_err(|e| e.to_string())?;
        let mut b = cech_cohomology(f, &minimal_cover(space, u)).map_err(|e| e.to_string())?;
        let n = a.len().max(b.len());
        a.resize(n, 0);
        b.resize(n, 0);
        ensure(a == b, || format!("on {}: derived {a:?}, Čech {b:?}", space.name(u)))?;
        pairs += 1;
    }
    Ok(pairs)
}

fn cross_oracles() -> Outcome {
    let mut pairs = 0;
    let mut pages = 0;
    for name in fixture_names() {
        let m = model(name);
        let c = ColimitPresheaf::generated(m.presheaf.clone(), &m.basis, 4).map_err(|e| e.to_string())?;
        let mut sheaves = vec![VectSheaf::constant(m.space.clone(), m.field(), 1)];
        for p in 0..=3 {
            sheaves.push(sheafify(&DegreeSlice { inner: &c, degree: p }).map_err(|e| e.to_string())?.sheaf);
        }
        for q in 0..=2 {
            sheaves.push(cohomology_sheaf(&c, q).map_err(|e| e.to_string())?);
        }
        for f in &sheaves {
            pairs += derived_vs_cech(f, &m.space).map_err(|e| format!("{name}: {e}"))?;
        }
        let dc = build_hyper_double_complex(&c).map_err(|e| e.to_string())?;
        let mut prev: Option<hochsheaf::spectral::Page> = None;
        for r in 0..=dc.stable_page() {
            let page = dc.page(r).map_err(|e| e.to_string())?;
            if let Some(before) = &prev {
                ensure(page.euler_characteristic() == before.euler_characteristic(), || {
                    format!("{name}: χ(E_{r}) ≠ χ(E_{})", r - 1)
                })?;
                let shrinks = page.dims.iter().flatten().zip(before.dims.iter().flatten()).all(|(a, b)| a <= b);
                ensure(shrinks, || format!("{name}: E_{r} grows"))?;
            }
            prev = Some(page);
            pages += 1;
        }
    }
    Ok(format!("{pairs} sheaf/open pairs derived = Čech; χ constant and dims monotone over {pages} pages"))
}

fn combo(cx: &HochschildComplex, terms: &[(i64, &Cochain)]) -> Cochain {
    let mut out = cx.zero(terms[0].1.degree).unwrap();
    for (c, x) in terms {
        add_scaled(&mut out.values, &Scalar::from_i64(cx.field(), *c), &x.values);
    }
    out
}

fn vanishes(c: &Cochain) -> bool {
    c.values.iter().all(Scalar::is_zero)
}

fn sign(k: usize) -> i64 {
    if k.is_multiple_of(2) {
        1
    } else {
        -1
    }
}

fn algebraic_identities() -> Outcome {
    let mut checked = 0usize;
    for name in ["point_dual", "chain2"] {
        let m = model(name);
        let cx = build_complex(&m.basis, &m.presheaf, 3).unwrap();
        let basis: Vec<Vec<Cochain>> =
            (0..=3).map(|p| (0..cx.layout(p).dim()).map(|i| cx.basis_cochain(p, i).unwrap()).collect()).collect();
        for p in 0..=2 {
            for q in 0..=2 - p {
                for f in &basis[p] {
                    for g in &basis[q] {
                        let lhs = cx.apply_d(&cx.cup(f, g).unwrap()).unwrap();
                        let a = cx.cup(&cx.apply_d(f).unwrap(), g).unwrap();
                        let b = cx.cup(f, &cx.apply_d(g).unwrap()).unwrap();
                        ensure(vanishes(&combo(&cx, &[(1, &lhs), (-1, &a), (-sign(p), &b)])), || {
                            format!("{name}: Leibniz fails in degrees {p},{q}")
                        })?;
                        checked += 1;
                    }
                }
            }
        }
        for p in 0..=3 {
            for q in 0..=3 {
                if p + q == 0 || p + q > 4 {
                    continue;
                }
                for f in &basis[p] {
                    for g in &basis[q] {
                        let fg = cx.bracket(f, g).unwrap();
                        let gf = cx.bracket(g, f).unwrap();
                        ensure(vanishes(&combo(&cx, &[(1, &fg), (sign((p + 1) * (q + 1)), &gf)])), || {
                            format!("{name}: antisymmetry fails in degrees {p},{q}")
                        })?;
                        checked += 1;
                    }
                }
            }
        }
        for p in 1..=3 {
            for q in 1..=3 {
                for r in 1..=3 {
                    if p + q + r > 5 {
                        continue;
                    }
                    for f in &basis[p] {
                        for g in &basis[q] {
                            for h in &basis[r] {
                                let t1 = cx.bracket(f, &cx.bracket(g, h).unwrap()).unwrap();
                                let t2 = cx.bracket(g, &cx.bracket(h, f).unwrap()).unwrap();
                                let t3 = cx.bracket(h, &cx.bracket(f, g).unwrap()).unwrap();
                                let sum = combo(
                                    &cx,
                                    &[
                                        (sign((p + 1) * (r + 1)), &t1),
                                        (sign((q + 1) * (p + 1)), &t2),
                                        (sign((r + 1) * (q + 1)), &t3),
                                    ],
                                );
                                ensure(vanishes(&sum), || format!("{name}: Jacobi fails in degrees {p},{q},{r}"))?;
                                checked += 1;
                            }
                        }
                    }
                }
            }
        }
    }
    for name in fixture_names() {
        let m = model(name);
        let cx = build_complex(&m.basis, &m.presheaf, 3).unwrap();
        let mult = cx.composition_cochain().unwrap();
        ensure(vanishes(&cx.bracket(&mult, &mult).unwrap()), || format!("{name}: [m, m] ≠ 0"))?;
        checked += 1;
    }
    Ok(format!("{checked} instances of Leibniz, antisymmetry, Jacobi and [m,m] = 0"))
}

struct Criterion {
    id: usize,
    title: &'static str,
    budget: Option<Duration>,
    run: fn() -> Outcome,
}

fn main() -> ExitCode {
    let criteria = [
        Criterion {
            id: 1,
            title: "non-sheaf witness and repair",
            budget: Some(Duration::from_secs(5)),
            run: counterexample,
        },
        Criterion {
            id: 2,
            title: "d² = 0 and chain-map restrictions",
            budget: Some(Duration::from_secs(30)),
            run: differential_identities,
        },
        Criterion { id: 3, title: "golden cohomology dimensions", budget: None, run: golden_dims },
        Criterion {
            id: 4,
            title: "flabbiness and acyclicity",
            budget: Some(Duration::from_secs(60)),
            run: flabby_and_acyclic,
        },
        Criterion { id: 5, title: "good-family closure identities", budget: None, run: family_laws },
        Criterion {
            id: 6,
            title: "local-to-global spectral sequence",
            budget: Some(Duration::from_secs(120)),
            run: local_to_global,
        },
        Criterion { id: 7, title: "cross-oracle agreement", budget: None, run: cross_oracles },
        Criterion { id: 8, title: "cup and bracket identities", budget: None, run: algebraic_identities },
    ];
    let default_hook = std::panic::take_hook();
    std::panic::set_hook(Box::new(|_| {}));
    let mut failures = 0;
    for c in &criteria {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(c.run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed();
        let result = match (result, c.budget) {
            (Ok(_), Some(b)) if elapsed > b => Err(format!("took {elapsed:.2?}, budget {b:?}")),
            (r, _) => r,
        };
        let (status, detail) = match &result {
            Ok(d) => ("PASS", d.as_str()),
            Err(d) => ("FAIL", d.as_str()),
        };
        if result.is_err() {
            failures += 1;
        }
        println!("criterion {} {status}  {}: {detail} ({:.2?})", c.id, c.title, elapsed);
    }
    std::panic::set_hook(default_hook);
    println!("acceptance: {} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
