//! Model files: a finite space, algebras on basic opens, restriction maps and a basis.
//!
//! The format is JSON. Point sets are arrays of point ids, scalars are
//! integers or strings `"a/b"`, and matrices are arrays of rows. A restriction
//! matrix for `V ⊆ U` has `dim O(V)` rows and `dim O(U)` columns and acts on
//! coordinate columns. `products[i][j]` holds the coordinates of `e_i · e_j`.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::Deserialize;
use thiserror::Error;

use crate::linalg::{Field, LinalgError, Matrix, Scalar};
use crate::ringed::{
    validate_algebra, validate_structure_presheaf, Algebra, AlgebraReport, PresheafReport, RingedError,
    StructurePresheaf,
};
use crate::space::{check_basis, validate_space, Basis, FiniteSpace, Open, PointSet, SpaceError, SpaceViolation};

pub const DEFAULT_TRUNCATION: usize = 4;

/// Shipped fixtures as `(name, json)`.
pub const FIXTURES: &[(&str, &str)] = &[
    ("point_field", include_str!("../models/point_field.json")),
    ("point_dual", include_str!("../models/point_dual.json")),
    ("chain2", include_str!("../models/chain2.json")),
    ("chain2_dual", include_str!("../models/chain2_dual.json")),
    ("pseudocircle", include_str!("../models/pseudocircle.json")),
    ("pseudocircle_redundant", include_str!("../models/pseudocircle_redundant.json")),
    ("point_triangular", include_str!("../models/point_triangular.json")),
];

pub fn fixture_names() -> impl Iterator<Item = &'static str> {
    FIXTURES.iter().map(|(n, _)| *n)
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{source_name}:{line}:{column}: {message}")]
    Syntax { source_name: String, line: usize, column: usize, message: String },
    #[error("{source_name}: field `{field}`: {message}")]
    Schema { source_name: String, field: String, message: String },
    #[error("{source_name}: field `{field}`: unknown id {id:?}")]
    UnknownId { source_name: String, field: String, id: String },
    #[error("{source_name}: {}", .violations.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Space { source_name: String, violations: Vec<SpaceViolation> },
    #[error("{source_name}: field `basis`: {message}")]
    Basis { source_name: String, message: String },
    #[error("{source_name}: algebra {name:?} is not a unital associative algebra")]
    Algebra { source_name: String, name: String, report: AlgebraReport },
    #[error("{source_name}: {}", .report.violations.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Presheaf { source_name: String, report: PresheafReport },
}

/// Broad classes of model errors, used for exit codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorKind {
    Io,
    Syntax,
    UnknownId,
    Validation,
}

impl ModelError {
    pub fn kind(&self) -> ErrorKind {
        match self {
            ModelError::Io { .. } => ErrorKind::Io,
            ModelError::Syntax { .. } | ModelError::Schema { .. } => ErrorKind::Syntax,
            ModelError::UnknownId { .. } => ErrorKind::UnknownId,
            _ => ErrorKind::Validation,
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    name: String,
    #[serde(default)]
    description: String,
    field: String,
    #[serde(default)]
    truncation: Option<usize>,
    points: Vec<String>,
    min_opens: BTreeMap<String, Vec<String>>,
    algebras: BTreeMap<String, RawAlgebra>,
    #[serde(default)]
    default_algebra: Option<String>,
    #[serde(default)]
    assignment: Vec<RawAssignment>,
    #[serde(default)]
    restrictions: Vec<RawRestriction>,
    basis: Vec<Vec<String>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAlgebra {
    basis: Vec<String>,
    unit: Vec<RawScalar>,
    products: Vec<Vec<Vec<RawScalar>>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAssignment {
    open: Vec<String>,
    algebra: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRestriction {
    from: Vec<String>,
    to: Vec<String>,
    matrix: Vec<Vec<RawScalar>>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawScalar {
    Int(i64),
    Text(String),
}

/// A validated model.
#[derive(Clone, Debug)]
pub struct Model {
    pub name: String,
    pub description: String,
    pub space: FiniteSpace,
    pub presheaf: Arc<StructurePresheaf>,
    pub basis: Basis,
    pub truncation: usize,
}

impl Model {
    pub fn field(&self) -> Field {
        self.presheaf.field()
    }
}

struct Ctx<'a> {
    source_name: &'a str,
}

impl Ctx<'_> {
    fn schema(&self, field: impl Into<String>, message: impl ToString) -> ModelError {
        ModelError::Schema { source_name: self.source_name.into(), field: field.into(), message: message.to_string() }
    }

    fn scalar(&self, field_name: &str, f: Field, raw: &RawScalar) -> Result<Scalar, ModelError> {
        let parsed: Result<Scalar, LinalgError> = match raw {
            RawScalar::Int(n) => Ok(Scalar::from_i64(f, *n)),
            RawScalar::Text(t) => Scalar::parse(f, t),
        };
        parsed.map_err(|e| self.schema(field_name, e))
    }

    fn set(&self, field_name: &str, space: &FiniteSpace, ids: &[String]) -> Result<PointSet, ModelError> {
        let mut s = PointSet::EMPTY;
        for id in ids {
            let x = space.point(id).ok_or_else(|| ModelError::UnknownId {
                source_name: self.source_name.into(),
                field: field_name.into(),
                id: id.clone(),
            })?;
            s = s.union(PointSet::singleton(x));
        }
        Ok(s)
    }

    fn open(&self, field_name: &str, space: &FiniteSpace, ids: &[String]) -> Result<Open, ModelError> {
        let s = self.set(field_name, space, ids)?;
        space.check_open(s).map_err(|e| self.schema(field_name, e))
    }
}

/// Parses and validates a model. `field` overrides the field named in the file.
pub fn parse_model_str(text: &str, source_name: &str, field: Option<Field>) -> Result<Model, ModelError> {
    let ctx = Ctx { source_name };
    let raw: RawModel = serde_json::from_str(text).map_err(|e| ModelError::Syntax {
        source_name: source_name.into(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let field = match field {
        Some(f) => f,
        None => Field::parse(&raw.field).map_err(|e| ctx.schema("field", e))?,
    };

    let table: Vec<(String, Vec<String>)> = raw.min_opens.into_iter().collect();
    let space = validate_space(&raw.points, &table).map_err(|e| match e {
        SpaceError::InvalidSpace(violations) => ModelError::Space { source_name: source_name.into(), violations },
        other => ctx.schema("min_opens", other),
    })?;

    let mut names = Vec::new();
    let mut algebras = Vec::new();
    for (name, a) in &raw.algebras {
        let f = format!("algebras.{name}");
        let unit = a.unit.iter().map(|x| ctx.scalar(&format!("{f}.unit"), field, x)).collect::<Result<Vec<_>, _>>()?;
        let constants = a
            .products
            .iter()
            .map(|row| {
                row.iter()
                    .map(|v| v.iter().map(|x| ctx.scalar(&format!("{f}.products"), field, x)).collect())
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        let algebra =
            Algebra::new(name.clone(), field, a.basis.clone(), constants, unit).map_err(|e| ctx.schema(&f, e))?;
        let report = validate_algebra(&algebra);
        if !report.passed() {
            return Err(ModelError::Algebra { source_name: source_name.into(), name: name.clone(), report });
        }
        names.push(name.clone());
        algebras.push(algebra);
    }
    let algebra_index = |field_name: &str, name: &str| {
        names.iter().position(|n| n == name).ok_or_else(|| ModelError::UnknownId {
            source_name: source_name.into(),
            field: field_name.into(),
            id: name.into(),
        })
    };

    let mut members = Vec::new();
    for ids in &raw.basis {
        members.push(ctx.open("basis", &space, ids)?);
    }
    let basis = Basis::new(&space, space.whole(), members.iter().copied())
        .map_err(|e| ModelError::Basis { source_name: source_name.into(), message: e.to_string() })?;
    debug_assert!(check_basis(&space, space.whole(), basis.members()).is_ok());

    let mut assignment = BTreeMap::new();
    for a in &raw.assignment {
        let u = ctx.open("assignment.open", &space, &a.open)?;
        assignment.insert(u, algebra_index("assignment.algebra", &a.algebra)?);
    }
    if let Some(d) = &raw.default_algebra {
        let i = algebra_index("default_algebra", d)?;
        for &m in basis.members() {
            assignment.entry(m).or_insert(i);
        }
    }
    if let Some(&m) = basis.members().iter().find(|m| !assignment.contains_key(m)) {
        return Err(ctx.schema("assignment", format!("basis member {} carries no algebra", space.name(m))));
    }

    let mut supplied = BTreeMap::new();
    for r in &raw.restrictions {
        let from = ctx.open("restrictions.from", &space, &r.from)?;
        let to = ctx.open("restrictions.to", &space, &r.to)?;
        let rows = r
            .matrix
            .iter()
            .map(|row| row.iter().map(|x| ctx.scalar("restrictions.matrix", field, x)).collect())
            .collect::<Result<Vec<Vec<Scalar>>, _>>()?;
        let cols = rows.first().map_or(0, Vec::len);
        let m = Matrix::from_rows(field, cols, rows).map_err(|e| ctx.schema("restrictions.matrix", e))?;
        supplied.insert((from, to), m);
    }
    let presheaf = StructurePresheaf::new(space.clone(), field, algebras, assignment, supplied)
        .map_err(|e: RingedError| ctx.schema("restrictions", e))?;
    let report = validate_structure_presheaf(&presheaf);
    if !report.passed() {
        return Err(ModelError::Presheaf { source_name: source_name.into(), report });
    }
    Ok(Model {
        name: raw.name,
        description: raw.description,
        space,
        presheaf: Arc::new(presheaf),
        basis,
        truncation: raw.truncation.unwrap_or(DEFAULT_TRUNCATION),
    })
}

pub fn parse_model(path: &Path, field: Option<Field>) -> Result<Model, ModelError> {
    let name = path.display().to_string();
    let text =
        std::fs::read_to_string(path).map_err(|e| ModelError::Io { path: name.clone(), message: e.to_string() })?;
    parse_model_str(&text, &name, field)
}

/// A shipped fixture by name, or otherwise a file path.
pub fn load_model(name_or_path: &str, field: Option<Field>) -> Result<Model, ModelError> {
    match FIXTURES.iter().find(|(n, _)| *n == name_or_path) {
        Some((n, text)) => parse_model_str(text, n, field),
        None => parse_model(Path::new(name_or_path), field),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_parse() {
        for (name, _) in FIXTURES {
            let m = load_model(name, None).unwrap();
            assert_eq!(&m.name, name);
            assert_eq!(m.truncation, 4);
        }
        let m4 = load_model("pseudocircle_redundant", None).unwrap();
        assert_eq!(m4.basis.len(), 5);
        assert!(m4.basis.contains(m4.space.whole()));
    }

    #[test]
    fn field_override() {
        let m = load_model("point_dual", Some(Field::prime(5).unwrap())).unwrap();
        assert_eq!(m.field(), Field::prime(5).unwrap());
    }

    #[test]
    fn syntax_error_has_position() {
        let e = parse_model_str("{\n  \"name\": \"x\",\n  oops\n}", "bad.json", None).unwrap_err();
        assert!(matches!(e, ModelError::Syntax { line: 3, .. }), "{e:?}");
        assert_eq!(e.kind(), ErrorKind::Syntax);
    }

    fn with(text: &str, from: &str, to: &str) -> String {
        assert!(text.contains(from));
        text.replacen(from, to, 1)
    }

    const M2: &str = include_str!("../models/chain2.json");

    #[test]
    fn space_violation_is_reported() {
        let bad = with(M2, "\"q\": [\"q\"]", "\"q\": [\"p\"]");
        let e = parse_model_str(&bad, "m", None).unwrap_err();
        assert!(matches!(e, ModelError::Space { .. }), "{e:?}");
        assert_eq!(e.kind(), ErrorKind::Validation);
    }

    #[test]
    fn unknown_id_in_basis() {
        let bad = with(M2, "[[\"p\", \"q\"], [\"q\"]]", "[[\"p\", \"q\"], [\"z\"]]");
        let e = parse_model_str(&bad, "m", None).unwrap_err();
        assert!(matches!(&e, ModelError::UnknownId { id, .. } if id == "z"), "{e:?}");
    }

    #[test]
    fn non_basis_is_rejected() {
        let bad = with(M2, "[[\"p\", \"q\"], [\"q\"]]", "[[\"q\"]]");
        assert!(matches!(parse_model_str(&bad, "m", None), Err(ModelError::Basis { .. })));
    }

    #[test]
    fn broken_algebra_and_restriction() {
        let dual = include_str!("../models/chain2_dual.json");
        let bad = with(dual, "\"matrix\": [[1, 0]]", "\"matrix\": [[1, 1]]");
        let e = parse_model_str(&bad, "m", None).unwrap_err();
        assert!(matches!(e, ModelError::Presheaf { .. }), "{e:?}");
        let bad = with(dual, "[[0, 1], [0, 0]]", "[[0, 1], [1, 0]]");
        let e = parse_model_str(&bad, "m", None).unwrap_err();
        assert!(matches!(e, ModelError::Algebra { .. } | ModelError::Presheaf { .. }), "{e:?}");
    }
}
