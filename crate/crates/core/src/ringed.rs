//! Finite-dimensional unital associative algebras given by structure
//! constants, and presheaves of such algebras on a collection of basic opens.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{add_scaled, unit_vector, zero_vector, Field, LinalgError, Matrix, Scalar, Vector};
use crate::space::{FiniteSpace, Open};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RingedError {
    #[error("algebra {name}: {reason}")]
    MalformedAlgebra { name: String, reason: String },
    #[error("no algebra assigned to {0}")]
    MissingAlgebra(String),
    #[error("no restriction map from {from} to {to}")]
    MissingRestriction { from: String, to: String },
    #[error("restriction {from} → {to}: {reason}")]
    MalformedRestriction { from: String, to: String, reason: String },
    #[error("{0} is not open")]
    NotOpen(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

pub type Result<T> = std::result::Result<T, RingedError>;

/// `e_i · e_j = Σ_k c[i][j][k] e_k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Algebra {
    name: String,
    field: Field,
    labels: Vec<String>,
    constants: Vec<Vec<Vector>>,
    unit: Vector,
}

impl Algebra {
    /// Checks shapes and fields only; the algebra axioms are checked by
    /// [`validate_algebra`].
    pub fn new(
        name: impl Into<String>,
        field: Field,
        labels: Vec<String>,
        constants: Vec<Vec<Vector>>,
        unit: Vector,
    ) -> Result<Algebra> {
        let name = name.into();
        let n = labels.len();
        let bad = |reason: String| RingedError::MalformedAlgebra { name: name.clone(), reason };
        if n == 0 {
            return Err(bad("dimension must be positive".into()));
        }
        if unit.len() != n {
            return Err(bad(format!("unit has {} coordinates, expected {n}", unit.len())));
        }
        if constants.len() != n || constants.iter().any(|row| row.len() != n) {
            return Err(bad(format!("structure constants must form a {n}x{n} table")));
        }
        for (i, row) in constants.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                if v.len() != n {
                    return Err(bad(format!("e{i}·e{j} has {} coordinates, expected {n}", v.len())));
                }
            }
        }
        let all = constants.iter().flatten().flatten().chain(unit.iter());
        if let Some(x) = all.into_iter().find(|x| x.field() != field) {
            return Err(LinalgError::FieldMismatch(field, x.field()).into());
        }
        Ok(Algebra { name, field, labels, constants, unit })
    }

    /// The ground field as a one-dimensional algebra.
    pub fn ground(field: Field) -> Algebra {
        Algebra {
            name: "k".into(),
            field,
            labels: vec!["1".into()],
            constants: vec![vec![vec![field.one()]]],
            unit: vec![field.one()],
        }
    }

    /// `k[x]/(x^n)` with basis `1, x, …, x^{n−1}`.
    pub fn truncated_polynomial(field: Field, n: usize) -> Algebra {
        let labels = (0..n)
            .map(|i| match i {
                0 => "1".to_string(),
                1 => "x".to_string(),
                _ => format!("x^{i}"),
            })
            .collect();
        let constants = (0..n)
            .map(|i| {
                (0..n).map(|j| if i + j < n { unit_vector(field, n, i + j) } else { zero_vector(field, n) }).collect()
            })
            .collect();
        Algebra { name: format!("k[x]/(x^{n})"), field, labels, constants, unit: unit_vector(field, n, 0) }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn unit(&self) -> &Vector {
        &self.unit
    }

    /// `e_i · e_j` in coordinates.
    pub fn basis_product(&self, i: usize, j: usize) -> &Vector {
        &self.constants[i][j]
    }

    pub fn mul(&self, a: &[Scalar], b: &[Scalar]) -> Vector {
        let mut out = zero_vector(self.field, self.dim());
        for (i, x) in a.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (j, y) in b.iter().enumerate() {
                if y.is_zero() {
                    continue;
                }
                add_scaled(&mut out, &(x * y), &self.constants[i][j]);
            }
        }
        out
    }

    /// The matrix of left multiplication by `a`.
    pub fn left_mul_matrix(&self, a: &[Scalar]) -> Matrix {
        let n = self.dim();
        let mut m = Matrix::zeros(self.field, n, n);
        for j in 0..n {
            let col = self.mul(a, &unit_vector(self.field, n, j));
            for (i, x) in col.into_iter().enumerate() {
                m.set(i, j, x);
            }
        }
        m
    }
}

/// Outcome of [`validate_algebra`].
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlgebraReport {
    pub name: String,
    /// Basis triples `(i, j, k)` with `(e_i e_j) e_k ≠ e_i (e_j e_k)`.
    pub associativity_failures: Vec<(usize, usize, usize)>,
    /// Basis indices `i` with `1·e_i ≠ e_i` or `e_i·1 ≠ e_i`.
    pub unit_failures: Vec<usize>,
    pub commutative: bool,
}

impl AlgebraReport {
    pub fn passed(&self) -> bool {
        self.associativity_failures.is_empty() && self.unit_failures.is_empty()
    }
}

pub fn validate_algebra(a: &Algebra) -> AlgebraReport {
    let n = a.dim();
    let e = |i| unit_vector(a.field, n, i);
    let mut report = AlgebraReport { name: a.name.clone(), commutative: true, ..Default::default() };
    for i in 0..n {
        for j in 0..n {
            let ij = a.basis_product(i, j);
            if ij != a.basis_product(j, i) {
                report.commutative = false;
            }
            for k in 0..n {
                if a.mul(ij, &e(k)) != a.mul(&e(i), a.basis_product(j, k)) {
                    report.associativity_failures.push((i, j, k));
                }
            }
        }
        if a.mul(&a.unit, &e(i)) != e(i) || a.mul(&e(i), &a.unit) != e(i) {
            report.unit_failures.push(i);
        }
    }
    report
}

/// A linear map between algebras, as a `dim target × dim source` matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AlgebraMap {
    pub matrix: Matrix,
}

impl AlgebraMap {
    pub fn apply(&self, v: &[Scalar]) -> Vector {
        self.matrix.mul_vec(v).expect("restriction map dimensions are checked at construction")
    }
}

/// Algebras on basic opens with restriction maps `ρ_{U→V}` for `V ⊆ U`.
#[derive(Clone, Debug)]
pub struct StructurePresheaf {
    space: FiniteSpace,
    field: Field,
    algebras: Vec<Algebra>,
    assignment: BTreeMap<Open, usize>,
    restrictions: BTreeMap<(Open, Open), AlgebraMap>,
}

/// A restriction map supplied by the caller, keyed by `(from, to)`.
pub type RestrictionTable = BTreeMap<(Open, Open), Matrix>;

impl StructurePresheaf {
    /// Assembles a presheaf. Restriction maps between opens carrying the same
    /// algebra default to the identity when not supplied; any other missing
    /// map is an error. The algebra and presheaf axioms are checked by the
    /// validators, not here.
    pub fn new(
        space: FiniteSpace,
        field: Field,
        algebras: Vec<Algebra>,
        assignment: BTreeMap<Open, usize>,
        supplied: RestrictionTable,
    ) -> Result<StructurePresheaf> {
        let name = |o: Open| space.name(o);
        for &u in assignment.keys() {
            if u.is_empty() || !space.is_open(u) {
                return Err(RingedError::NotOpen(name(u)));
            }
        }
        if let Some(a) = algebras.iter().find(|a| a.field != field) {
            return Err(LinalgError::FieldMismatch(field, a.field).into());
        }
        let mut restrictions = BTreeMap::new();
        for (&u, &au) in &assignment {
            for (&v, &av) in &assignment {
                if !v.is_subset(u) {
                    continue;
                }
                let (du, dv) = (algebras[au].dim(), algebras[av].dim());
                let matrix = match supplied.get(&(u, v)) {
                    Some(m) => {
                        if m.rows() != dv || m.cols() != du {
                            return Err(RingedError::MalformedRestriction {
                                from: name(u),
                                to: name(v),
                                reason: format!("matrix is {}x{}, expected {dv}x{du}", m.rows(), m.cols()),
                            });
                        }
                        if m.field() != field {
                            return Err(LinalgError::FieldMismatch(field, m.field()).into());
                        }
                        m.clone()
                    }
                    None if au == av => Matrix::identity(field, du),
                    None => return Err(RingedError::MissingRestriction { from: name(u), to: name(v) }),
                };
                restrictions.insert((u, v), AlgebraMap { matrix });
            }
        }
        for &(u, v) in supplied.keys() {
            if !assignment.contains_key(&u) || !assignment.contains_key(&v) || !v.is_subset(u) {
                return Err(RingedError::MalformedRestriction {
                    from: name(u),
                    to: name(v),
                    reason: "not an inclusion of opens carrying algebras".into(),
                });
            }
        }
        Ok(StructurePresheaf { space, field, algebras, assignment, restrictions })
    }

    /// The same algebra on every listed open, identity restrictions.
    pub fn constant(space: FiniteSpace, algebra: Algebra, opens: impl IntoIterator<Item = Open>) -> Result<Self> {
        let field = algebra.field;
        let assignment = opens.into_iter().map(|o| (o, 0)).collect();
        StructurePresheaf::new(space, field, vec![algebra], assignment, BTreeMap::new())
    }

    pub fn space(&self) -> &FiniteSpace {
        &self.space
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn algebras(&self) -> &[Algebra] {
        &self.algebras
    }

    /// Opens carrying an algebra.
    pub fn universe(&self) -> impl Iterator<Item = Open> + '_ {
        self.assignment.keys().copied()
    }

    pub fn has(&self, u: Open) -> bool {
        self.assignment.contains_key(&u)
    }

    pub fn algebra(&self, u: Open) -> Result<&Algebra> {
        self.assignment
            .get(&u)
            .map(|&i| &self.algebras[i])
            .ok_or_else(|| RingedError::MissingAlgebra(self.space.name(u)))
    }

    pub fn restriction(&self, from: Open, to: Open) -> Result<&AlgebraMap> {
        self.restrictions
            .get(&(from, to))
            .ok_or_else(|| RingedError::MissingRestriction { from: self.space.name(from), to: self.space.name(to) })
    }

    /// Same presheaf over another field: constants and maps are reduced or
    /// reinterpreted entrywise.
    pub fn change_field(&self, field: Field) -> Result<StructurePresheaf> {
        let conv = |x: &Scalar| -> Result<Scalar> {
            match x {
                Scalar::Q(q) => Ok(Scalar::from_fraction(field, q.numer(), q.denom())?),
                Scalar::Fp { value, .. } if field == Field::Rational || x.field() == field => {
                    Ok(Scalar::from_i64(field, *value as i64))
                }
                Scalar::Fp { .. } => Err(LinalgError::FieldMismatch(x.field(), field).into()),
            }
        };
        let conv_vec = |v: &Vector| v.iter().map(conv).collect::<Result<Vector>>();
        let algebras = self
            .algebras
            .iter()
            .map(|a| {
                let constants = a
                    .constants
                    .iter()
                    .map(|row| row.iter().map(conv_vec).collect::<Result<Vec<_>>>())
                    .collect::<Result<Vec<_>>>()?;
                Algebra::new(a.name.clone(), field, a.labels.clone(), constants, conv_vec(&a.unit)?)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut supplied = RestrictionTable::new();
        for (&key, map) in &self.restrictions {
            let rows = map.matrix.to_rows().iter().map(conv_vec).collect::<Result<Vec<_>>>()?;
            supplied.insert(key, Matrix::from_rows(field, map.matrix.cols(), rows)?);
        }
        StructurePresheaf::new(self.space.clone(), field, algebras, self.assignment.clone(), supplied)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PresheafViolation {
    Algebra(AlgebraReport),
    IdentityNotIdentity { open: String },
    NotUnital { from: String, to: String },
    NotMultiplicative { from: String, to: String, i: usize, j: usize },
    NotFunctorial { from: String, via: String, to: String },
}

impl fmt::Display for PresheafViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PresheafViolation::Algebra(r) => write!(
                f,
                "algebra {} fails: associativity at {:?}, unit at {:?}",
                r.name, r.associativity_failures, r.unit_failures
            ),
            PresheafViolation::IdentityNotIdentity { open } => {
                write!(f, "ρ_{{{open}→{open}}} is not the identity")
            }
            PresheafViolation::NotUnital { from, to } => {
                write!(f, "ρ_{{{from}→{to}}} does not preserve the unit")
            }
            PresheafViolation::NotMultiplicative { from, to, i, j } => {
                write!(f, "ρ_{{{from}→{to}}} is not multiplicative on (e{i}, e{j})")
            }
            PresheafViolation::NotFunctorial { from, via, to } => {
                write!(f, "ρ_{{{via}→{to}}} ∘ ρ_{{{from}→{via}}} ≠ ρ_{{{from}→{to}}}")
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PresheafReport {
    pub violations: Vec<PresheafViolation>,
}

impl PresheafReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks every algebra, every restriction map (unital, multiplicative,
/// identity on `U → U`) and functoriality over all composable pairs.
pub fn validate_structure_presheaf(o: &StructurePresheaf) -> PresheafReport {
    let mut violations = Vec::new();
    for a in &o.algebras {
        let r = validate_algebra(a);
        if !r.passed() {
            violations.push(PresheafViolation::Algebra(r));
        }
    }
    let name = |u: Open| o.space.name(u);
    for (&(u, v), map) in &o.restrictions {
        let (au, av) = (&o.algebras[o.assignment[&u]], &o.algebras[o.assignment[&v]]);
        if u == v && map.matrix != Matrix::identity(o.field, au.dim()) {
            violations.push(PresheafViolation::IdentityNotIdentity { open: name(u) });
        }
        if map.apply(au.unit()) != *av.unit() {
            violations.push(PresheafViolation::NotUnital { from: name(u), to: name(v) });
        }
        'pairs: for i in 0..au.dim() {
            for j in 0..au.dim() {
                let ei = unit_vector(o.field, au.dim(), i);
                let ej = unit_vector(o.field, au.dim(), j);
                let lhs = map.apply(&au.mul(&ei, &ej));
                let rhs = av.mul(&map.apply(&ei), &map.apply(&ej));
                if lhs != rhs {
                    violations.push(PresheafViolation::NotMultiplicative { from: name(u), to: name(v), i, j });
                    break 'pairs;
                }
            }
        }
    }
    let opens: Vec<Open> = o.assignment.keys().copied().collect();
    for &u in &opens {
        for &v in opens.iter().filter(|v| v.is_subset(u)) {
            for &w in opens.iter().filter(|w| w.is_subset(v)) {
                let direct = &o.restrictions[&(u, w)].matrix;
                let composite = o.restrictions[&(v, w)]
                    .matrix
                    .mul(&o.restrictions[&(u, v)].matrix)
                    .expect("restriction dimensions are checked at construction");
                if &composite != direct {
                    violations.push(PresheafViolation::NotFunctorial { from: name(u), via: name(v), to: name(w) });
                }
            }
        }
    }
    PresheafReport { violations }
}
