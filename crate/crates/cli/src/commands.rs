//! Command-line parsing and the commands themselves.

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use hochsheaf::colimit::{
    restriction_is_surjective, sheaf_check, support, BasisPresheaf, CochainPresheaf, ColimitPresheaf, DegreeSlice,
    LinearPresheaf,
};
use hochsheaf::hochschild::{build_complex, HochschildComplex};
use hochsheaf::linalg::{is_zero_vector, Field, Vector};
use hochsheaf::model::{load_model, ErrorKind, Model, ModelError};
use hochsheaf::ringed::AlgebraReport;
use hochsheaf::sheaftools::acyclicity_report;
use hochsheaf::space::{
    check_closure_identities, generate_good_family, is_good_family, terminal_basis, Basis, FiniteSpace, Open,
};
use hochsheaf::spectral::verify_local_to_global;

use crate::report::{Report, Table};

#[derive(Parser, Debug)]
#[command(name = "hochsheaf", version, about = "Hochschild complexes of finite ringed spaces and their sheaf theory")]
pub struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Coefficient field: `Q` or `fp:<p>`. Overrides the model file.
    #[arg(long, global = true)]
    pub field: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FamilyChoice {
    /// The good family generated by the model's basis (sheaf `C_B`).
    Generated,
    /// The model's basis alone (presheaf `C_𝔟`).
    Single,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Hochschild cochain and cohomology dimensions of one basis category.
    Hh(HhArgs),
    /// Separation and gluing for a cover, degree by degree.
    Sheafcheck(SheafArgs),
    /// The local-to-global spectral sequence and its abutment.
    Spectral(SpectralArgs),
    /// Validate a model file: space, algebras, restrictions, basis, family.
    Validate(ModelArg),
    /// List the generated family of bases and check its closure laws.
    Family(FamilyArgs),
    /// Flabbiness and acyclicity of the cochain sheaves.
    Acyclic(AcyclicArgs),
}

#[derive(Args, Debug)]
pub struct ModelArg {
    /// Shipped fixture name or path to a model file.
    #[arg(long)]
    pub model: String,
}

#[derive(Args, Debug)]
pub struct HhArgs {
    #[command(flatten)]
    pub model: ModelArg,
    /// Truncation N; cochains are built up to degree N and H^q reported for q < N.
    #[arg(long)]
    pub max_degree: Option<usize>,
    /// Index of a basis of X in the generated family (as listed by `family`).
    #[arg(long)]
    pub basis_index: Option<usize>,
    /// Also compute the normalized subcomplex.
    #[arg(long)]
    pub normalized: bool,
}

#[derive(Args, Debug)]
pub struct SheafArgs {
    #[command(flatten)]
    pub model: ModelArg,
    /// Comma-separated opens, each `X`, `U<id>` or `id+id+…`.
    #[arg(long)]
    pub cover: String,
    /// The open being covered (default X).
    #[arg(long)]
    pub open: Option<String>,
    /// Only this cochain degree (default: every degree below the truncation).
    #[arg(long)]
    pub degree: Option<usize>,
    #[arg(long, value_enum, default_value_t = FamilyChoice::Generated)]
    pub family: FamilyChoice,
}

#[derive(Args, Debug)]
pub struct SpectralArgs {
    #[command(flatten)]
    pub model: ModelArg,
    /// Largest total degree to compare (at most N − 2).
    #[arg(long)]
    pub max_n: Option<usize>,
}

#[derive(Args, Debug)]
pub struct FamilyArgs {
    #[command(flatten)]
    pub model: ModelArg,
    /// List the bases on this open (default X).
    #[arg(long)]
    pub open: Option<String>,
    /// Largest refinement collection used when checking the closure identities.
    #[arg(long, default_value_t = 2)]
    pub max_delta: usize,
}

#[derive(Args, Debug)]
pub struct AcyclicArgs {
    #[command(flatten)]
    pub model: ModelArg,
    #[arg(long, value_enum, default_value_t = FamilyChoice::Generated)]
    pub family: FamilyChoice,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{0}")]
    Compute(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 4,
            CliError::Model(e) => match e.kind() {
                ErrorKind::Io | ErrorKind::Syntax => 5,
                ErrorKind::UnknownId => 6,
                ErrorKind::Validation => 2,
            },
            CliError::Compute(_) => 3,
        }
    }
}

fn compute<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Compute(e.to_string())
}

/// A finished command: its report and exit code.
pub struct Outcome {
    pub report: Report,
    pub exit_code: i32,
}

impl Outcome {
    fn checked(report: Report) -> Outcome {
        let exit_code = if report.passed() { 0 } else { 3 };
        Outcome { report, exit_code }
    }
}

pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let field =
        cli.field.as_deref().map(Field::parse).transpose().map_err(|e| CliError::Usage(format!("--field: {e}")))?;
    match &cli.command {
        Command::Hh(a) => hh(a, field).map(Outcome::checked),
        Command::Sheafcheck(a) => sheafcheck(a, field).map(Outcome::checked),
        Command::Spectral(a) => spectral(a, field).map(Outcome::checked),
        Command::Validate(a) => validate(a, field),
        Command::Family(a) => family(a, field).map(Outcome::checked),
        Command::Acyclic(a) => acyclic(a, field).map(Outcome::checked),
    }
}

fn new_report(command: &str, m: &Model) -> Report {
    Report::new(command, &m.name, &m.field().to_string())
}

fn parse_open(space: &FiniteSpace, text: &str) -> Result<Open, CliError> {
    let set = space.parse_set(text).ok_or_else(|| CliError::Usage(format!("unknown open {text:?}")))?;
    if !space.is_open(set) {
        return Err(CliError::Usage(format!("{} is not open", space.name(set))));
    }
    Ok(set)
}

fn range_columns(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

/// `value·label` lines for the nonzero entries of a cochain.
fn describe_cochain(
    m: &Model,
    cx: &HochschildComplex,
    degree: usize,
    values: &[hochsheaf::linalg::Scalar],
) -> Vec<String> {
    let Ok(phi) = cx.cochain(degree, values.to_vec()) else {
        return vec!["(malformed cochain)".into()];
    };
    let space = &m.space;
    let label = |u: Open, i: usize| -> String {
        m.presheaf.algebra(u).ok().and_then(|a| a.labels().get(i).cloned()).unwrap_or_else(|| format!("e{i}"))
    };
    let entries = support(cx, &phi);
    if entries.is_empty() {
        return vec!["0".into()];
    }
    entries
        .into_iter()
        .map(|(chain, out, args, x)| {
            let names: Vec<String> = chain.iter().map(|&u| space.name(u)).collect();
            let args: Vec<String> = args.iter().enumerate().map(|(i, &a)| label(chain[i], a)).collect();
            format!("({}) [{}] ↦ {}·{}", names.join(" ⊆ "), args.join(", "), x, label(chain[0], out))
        })
        .collect()
}

fn hh(a: &HhArgs, field: Option<Field>) -> Result<Report, CliError> {
    let m = load_model(&a.model.model, field)?;
    let n = a.max_degree.unwrap_or(m.truncation);
    if n == 0 {
        return Err(CliError::Usage("--max-degree must be at least 1".into()));
    }
    let basis = match a.basis_index {
        None => m.basis.clone(),
        Some(i) => {
            let family = generate_good_family(&m.space, &m.basis).map_err(compute)?;
            let bases: Vec<&Basis> = family.at(m.space.whole()).collect();
            let count = bases.len();
            (*bases
                .get(i)
                .ok_or_else(|| CliError::Usage(format!("--basis-index {i} out of range: B(X) has {count} bases")))?)
            .clone()
        }
    };
    let cx = build_complex(&basis, &m.presheaf, n).map_err(compute)?;
    let mut r = new_report("hh", &m);
    r.notes.push(format!("basis {}", basis.describe(&m.space)));
    let mut cochains = Table::new("cochains", range_columns("p=", n + 1));
    cochains.row("dim C^p", cx.dims());
    let h: Vec<usize> = (0..n).map(|q| cx.cohomology_dim(q)).collect::<Result<_, _>>().map_err(compute)?;
    let mut cohomology = Table::new("cohomology", range_columns("q=", n));
    cohomology.row("dim H^q", h.clone());
    let d_squared = (0..n.saturating_sub(1)).all(|p| {
        let d0 = cx.differential(p).expect("in range");
        let d1 = cx.differential(p + 1).expect("in range");
        d1.mul(d0).map(|m| m.is_zero()).unwrap_or(false)
    });
    r.check("d² = 0", d_squared, "");
    if n >= 3 {
        let mult = cx.composition_cochain().map_err(compute)?;
        let mm = cx.bracket(&mult, &mult).map_err(compute)?;
        r.check("[m, m] = 0", is_zero_vector(&mm.values), "");
    }
    if a.normalized {
        let dims: Vec<usize> =
            (0..=n).map(|p| cx.normalized_basis(p).map(|b| b.len())).collect::<Result<_, _>>().map_err(compute)?;
        let nh = cx.normalized_cohomology_dims().map_err(compute)?;
        cochains.row("dim C̄^p", dims);
        cohomology.row("dim H̄^q", nh.clone());
        r.check("normalized cohomology = full", nh[..] == h[..nh.len().min(h.len())], "");
    }
    r.tables.push(cochains);
    r.tables.push(cohomology);
    Ok(r)
}

fn cochain_presheaf(m: &Model, choice: FamilyChoice) -> Result<Box<dyn CochainPresheaf>, CliError> {
    Ok(match choice {
        FamilyChoice::Single => Box::new(BasisPresheaf::new(m.presheaf.clone(), m.basis.clone(), m.truncation)),
        FamilyChoice::Generated => {
            Box::new(ColimitPresheaf::generated(m.presheaf.clone(), &m.basis, m.truncation).map_err(compute)?)
        }
    })
}

fn sheafcheck(a: &SheafArgs, field: Option<Field>) -> Result<Report, CliError> {
    let m = load_model(&a.model.model, field)?;
    let space = &m.space;
    let cover: Vec<Open> =
        a.cover.split(',').filter(|s| !s.trim().is_empty()).map(|s| parse_open(space, s)).collect::<Result<_, _>>()?;
    if cover.is_empty() {
        return Err(CliError::Usage("--cover is empty".into()));
    }
    let u = match &a.open {
        Some(t) => parse_open(space, t)?,
        None => space.whole(),
    };
    let union = cover.iter().fold(Open::EMPTY, |acc, &c| acc.union(c));
    if union != u {
        return Err(CliError::Usage(format!(
            "the cover has union {} but the open is {}",
            space.name(union),
            space.name(u)
        )));
    }
    let degrees: Vec<usize> = match a.degree {
        Some(p) if p > m.truncation => {
            return Err(CliError::Usage(format!("--degree {p} exceeds the truncation {}", m.truncation)))
        }
        Some(p) => vec![p],
        None => (0..m.truncation).collect(),
    };
    let c = cochain_presheaf(&m, a.family)?;
    let mut r = new_report("sheafcheck", &m);
    let names: Vec<String> = cover.iter().map(|&o| space.name(o)).collect();
    r.notes.push(format!(
        "cover {{{}}} of {} with the {} family",
        names.join(", "),
        space.name(u),
        match a.family {
            FamilyChoice::Generated => "generated",
            FamilyChoice::Single => "single-basis",
        }
    ));
    let mut table =
        Table::new("sheaf condition", vec!["sections".into(), "restriction rank".into(), "equalizer".into()]);
    let at_u = c.complex_at(u).map_err(compute)?;
    for &p in &degrees {
        let report = sheaf_check(c.as_ref(), &cover, p).map_err(compute)?;
        table.row(format!("C^{p}"), vec![report.sections_dim, report.restriction_rank, report.equalizer_dim]);
        r.check(format!("separated C^{p}"), report.separated, "");
        r.check(format!("gluing C^{p}"), report.gluing, "");
        if let Some(w) = &report.separation_witness {
            let mut lines = describe_cochain(&m, &at_u, p, w);
            let slice = DegreeSlice { inner: c.as_ref(), degree: p };
            for &piece in &cover {
                let res: Vector =
                    slice.restriction(u, piece).and_then(|mat| mat.mul_vec(w).map_err(Into::into)).map_err(compute)?;
                let state = if is_zero_vector(&res) { "0" } else { "nonzero" };
                lines.push(format!("restriction to {}: {state}", space.name(piece)));
            }
            r.witness(format!("separation witness in C^{p}({})", space.name(u)), lines);
        }
        if let Some(ws) = &report.gluing_witness {
            let mut lines = Vec::new();
            for (&piece, w) in cover.iter().zip(ws) {
                let cx = c.complex_at(piece).map_err(compute)?;
                for line in describe_cochain(&m, &cx, p, w) {
                    lines.push(format!("on {}: {line}", space.name(piece)));
                }
            }
            r.witness(format!("compatible family in C^{p} with no gluing"), lines);
        }
    }
    r.tables.push(table);
    Ok(r)
}

fn spectral(a: &SpectralArgs, field: Option<Field>) -> Result<Report, CliError> {
    let m = load_model(&a.model.model, field)?;
    let n = m.truncation;
    if n < 2 {
        return Err(CliError::Usage(format!("the spectral sequence needs truncation N ≥ 2, the model has {n}")));
    }
    let safe = n - 2;
    let mut r = new_report("spectral", &m);
    if let Some(want) = a.max_n {
        if want > safe {
            r.warnings.push(format!(
                "--max-n {want} exceeds N − 2 = {safe} for truncation N = {n}; comparing n ≤ {safe} only"
            ));
        }
    }
    let c = ColimitPresheaf::generated(m.presheaf.clone(), &m.basis, n).map_err(compute)?;
    let lg = verify_local_to_global(&c, a.max_n).map_err(compute)?;
    let page_table = |title: &str, dims: &[Vec<usize>]| {
        let mut t = Table::new(title, range_columns("p=", lg.columns));
        for q in 0..lg.rows {
            t.row(format!("q={q}"), dims.iter().map(|col| col[q]).collect());
        }
        t
    };
    r.tables.push(page_table("E_2", &lg.e2));
    r.tables.push(page_table("E_inf", &lg.e_infinity));
    let mut sheaf = Table::new("H^p(X, H^q)", range_columns("p=", lg.columns));
    for q in 0..=safe {
        sheaf.row(format!("q={q}"), lg.sheaf_e2.iter().map(|col| col[q]).collect());
    }
    r.tables.push(sheaf);
    let mut abutment = Table::new("abutment", range_columns("n=", lg.max_n + 1));
    abutment.row("sum E_inf", lg.abutment.clone());
    abutment.row("H^n(Tot)", lg.total_cohomology.clone());
    abutment.row("H^n(C(X))", lg.global_cohomology.clone());
    r.tables.push(abutment);

    let e2_ok = (0..lg.columns).all(|p| (0..=safe).all(|q| p + q > lg.max_n || lg.e2[p][q] == lg.sheaf_e2[p][q]));
    r.check("E_2 = H^p(X, H^q)", e2_ok, "");
    r.check("sum E_inf = H^n(C(X))", lg.abutment == lg.global_cohomology, "");
    r.check("H^n(Tot) = H^n(C(X))", lg.total_cohomology == lg.global_cohomology, "");
    let chi = &lg.euler_characteristics;
    r.check(
        "Euler characteristic constant",
        chi.windows(2).all(|w| w[0] == w[1]),
        format!("χ = {}", chi.first().copied().unwrap_or(0)),
    );
    r.check("dim E_(r+1) ≤ dim E_r", lg.monotone, "");
    if !lg.passed() {
        r.witness("mismatches", lg.mismatches.clone());
    }
    if lg.degenerates_at_e2() {
        r.notes.push("every d_r with r ≥ 2 vanishes".into());
    } else {
        let list: Vec<String> =
            lg.nonzero_higher_differentials.iter().map(|(rr, p, q)| format!("d_{rr} at ({p},{q})")).collect();
        r.notes.push(format!("nonzero higher differentials: {}", list.join(", ")));
    }
    r.notes.push(format!(
        "E_inf = E_{}; rows q > {safe} are affected by the truncation N = {n} and are not compared",
        lg.infinity_page
    ));
    Ok(r)
}

fn algebra_lines(report: &AlgebraReport) -> Vec<String> {
    let mut lines = Vec::new();
    for (i, j, k) in report.associativity_failures.iter().take(5) {
        lines.push(format!("(e{i} e{j}) e{k} ≠ e{i} (e{j} e{k})"));
    }
    for i in report.unit_failures.iter().take(5) {
        lines.push(format!("1 is not a unit for e{i}"));
    }
    lines
}

fn validate(a: &ModelArg, field: Option<Field>) -> Result<Outcome, CliError> {
    let m = match load_model(&a.model, field) {
        Ok(m) => m,
        Err(e) if e.kind() == ErrorKind::Validation => {
            let mut r = Report::new("validate", &a.model, &field.map_or("-".into(), |f| f.to_string()));
            let (check, lines) = match &e {
                ModelError::Space { violations, .. } => {
                    ("space axioms", violations.iter().map(ToString::to_string).collect())
                }
                ModelError::Algebra { name, report, .. } => {
                    let mut lines = vec![format!("algebra {name:?}")];
                    lines.extend(algebra_lines(report));
                    ("algebras", lines)
                }
                ModelError::Presheaf { report, .. } => {
                    ("structure presheaf", report.violations.iter().map(ToString::to_string).collect())
                }
                _ => ("basis", vec![e.to_string()]),
            };
            r.check(check, false, e.to_string());
            r.witness(check, lines);
            return Ok(Outcome { report: r, exit_code: 2 });
        }
        Err(e) => return Err(e.into()),
    };
    let mut r = new_report("validate", &m);
    for check in ["space axioms", "algebras", "structure presheaf", "basis"] {
        r.check(check, true, "");
    }
    let family = generate_good_family(&m.space, &m.basis).map_err(compute)?;
    let good = is_good_family(&m.space, &family);
    r.check(
        "generated family is good",
        good.passed(),
        good.first_violation().map(|v| v.describe(&m.space)).unwrap_or_default(),
    );
    let mut t = Table::new("model", vec!["points".into(), "opens".into(), "basis".into(), "N".into()]);
    t.row(
        m.name.clone(),
        vec![
            m.space.num_points(),
            m.space.opens().iter().filter(|u| !u.is_empty()).count(),
            m.basis.len(),
            m.truncation,
        ],
    );
    r.tables.push(t);
    if !m.description.is_empty() {
        r.notes.push(m.description.clone());
    }
    let exit_code = if r.passed() { 0 } else { 2 };
    Ok(Outcome { report: r, exit_code })
}

fn family(a: &FamilyArgs, field: Option<Field>) -> Result<Report, CliError> {
    let m = load_model(&a.model.model, field)?;
    let space = &m.space;
    let target = match &a.open {
        Some(t) => parse_open(space, t)?,
        None => space.whole(),
    };
    let fam = generate_good_family(space, &m.basis).map_err(compute)?;
    let mut r = new_report("family", &m);
    let mut sizes = Table::new("B(U)", vec!["bases".into(), "terminal members".into()]);
    for u in space.opens().into_iter().filter(|u| !u.is_empty()) {
        let terminal = terminal_basis(&fam, u).map_err(compute)?;
        sizes.row(space.name(u), vec![fam.count_at(u), terminal.len()]);
    }
    r.tables.push(sizes);
    let terminal = terminal_basis(&fam, target).map_err(compute)?;
    let lines: Vec<String> = fam
        .at(target)
        .enumerate()
        .map(|(i, b)| {
            let mut tags = Vec::new();
            if *b == terminal {
                tags.push("terminal");
            }
            if target == space.whole() && *b == m.basis {
                tags.push("generating");
            }
            let tag = if tags.is_empty() { String::new() } else { format!("  ({})", tags.join(", ")) };
            format!("#{i} {}{tag}", b.describe(space))
        })
        .collect();
    r.witness(format!("B({})", space.name(target)), lines);
    let good = is_good_family(space, &fam);
    for law in &good.checks {
        r.check(
            format!("law {:?}", law.law),
            law.violation.is_none(),
            law.violation.as_ref().map(|v| v.describe(space)).unwrap_or_default(),
        );
    }
    for c in check_closure_identities(space, &m.basis, a.max_delta).map_err(compute)? {
        r.check(
            format!("identity {:?}", c.identity),
            c.failure.is_none(),
            c.failure.clone().unwrap_or_else(|| format!("{} instances", c.instances)),
        );
    }
    Ok(r)
}

fn acyclic(a: &AcyclicArgs, field: Option<Field>) -> Result<Report, CliError> {
    let m = load_model(&a.model.model, field)?;
    let space = &m.space;
    let c = cochain_presheaf(&m, a.family)?;
    let n = m.truncation;
    let mut r = new_report("acyclic", &m);
    let report = acyclicity_report(c.as_ref()).map_err(compute)?;
    let width = report.entries.iter().map(|e| e.cohomology.len()).max().unwrap_or(0);
    let mut t = Table::new("H^i(U, C^p)", range_columns("i=", width));
    for e in &report.entries {
        t.row(format!("C^{} on {}", e.degree, space.name(e.open)), e.cohomology.clone());
    }
    r.tables.push(t);
    r.check(
        "H^i(U, C^p) = 0 for i > 0",
        report.entries.iter().all(|e| e.acyclic()),
        report
            .entries
            .iter()
            .find(|e| !e.acyclic())
            .map(|e| format!("C^{} on {}", e.degree, space.name(e.open)))
            .unwrap_or_default(),
    );
    r.check(
        "H^0(U, C^p) = C^p(U)",
        report.entries.iter().all(|e| e.global_sections_match()),
        report
            .entries
            .iter()
            .find(|e| !e.global_sections_match())
            .map(|e| format!("C^{} on {}", e.degree, space.name(e.open)))
            .unwrap_or_default(),
    );
    let mut failures = Vec::new();
    let mut checked = 0;
    for p in 0..n {
        let slice = DegreeSlice { inner: c.as_ref(), degree: p };
        for u in space.opens().into_iter().filter(|u| !u.is_empty()) {
            checked += 1;
            if !restriction_is_surjective(&slice, u).map_err(compute)? {
                failures.push(format!("C^{p}(X) → C^{p}({}) is not onto", space.name(u)));
            }
        }
    }
    r.check(
        "restrictions from X are onto",
        failures.is_empty(),
        failures.first().cloned().unwrap_or_else(|| format!("{checked} maps")),
    );
    if !failures.is_empty() {
        r.witness("non-surjective restrictions", failures);
    }
    Ok(r)
}
