//! Exact scalars over ℚ or 𝔽_p and the dense linear-algebra kernel every
//! cohomology computation in this crate reduces to.
//!
//! Pivoting is deterministic: columns are scanned left to right and the
//! topmost nonzero entry at or below the current row becomes the pivot.
//! Kernel bases and affine solutions are therefore reproducible.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LinalgError {
    #[error("field mismatch: {0} vs {1}")]
    FieldMismatch(Field, Field),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("span(B) is not contained in span(Z); first offending generator is B[{0}]")]
    NotASubspace(usize),
    #[error("{0} is not a prime")]
    NotPrime(u64),
    #[error("cannot parse scalar {0:?}: {1}")]
    Parse(String, String),
    #[error("division by zero")]
    DivisionByZero,
}

pub type Result<T> = std::result::Result<T, LinalgError>;

/// The ground field of a computation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Field {
    Rational,
    Prime(u64),
}

impl Field {
    pub fn prime(p: u64) -> Result<Field> {
        if is_prime(p) {
            Ok(Field::Prime(p))
        } else {
            Err(LinalgError::NotPrime(p))
        }
    }

    /// Parses `Q` or `fp:<p>`.
    pub fn parse(text: &str) -> Result<Field> {
        let t = text.trim();
        if t.eq_ignore_ascii_case("q") {
            return Ok(Field::Rational);
        }
        let lower = t.to_ascii_lowercase();
        if let Some(rest) = lower.strip_prefix("fp:") {
            let p: u64 = rest.parse().map_err(|_| LinalgError::Parse(text.to_string(), "bad prime".into()))?;
            return Field::prime(p);
        }
        Err(LinalgError::Parse(text.to_string(), "expected Q or fp:<p>".into()))
    }

    pub fn zero(self) -> Scalar {
        Scalar::from_i64(self, 0)
    }

    pub fn one(self) -> Scalar {
        Scalar::from_i64(self, 1)
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Field::Rational => write!(f, "Q"),
            Field::Prime(p) => write!(f, "fp:{p}"),
        }
    }
}

fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2u64;
    while d.saturating_mul(d) <= p {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// An element of ℚ (always in lowest terms, positive denominator) or of 𝔽_p.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Scalar {
    Q(BigRational),
    Fp { value: u64, modulus: u64 },
}

impl Scalar {
    pub fn from_i64(field: Field, n: i64) -> Scalar {
        match field {
            Field::Rational => Scalar::Q(BigRational::from_integer(BigInt::from(n))),
            Field::Prime(p) => Scalar::Fp { value: n.rem_euclid(p as i64) as u64, modulus: p },
        }
    }

    /// Builds `num/den` in `field`; over 𝔽_p the denominator must be invertible.
    pub fn from_fraction(field: Field, num: &BigInt, den: &BigInt) -> Result<Scalar> {
        if den.is_zero() {
            return Err(LinalgError::DivisionByZero);
        }
        match field {
            Field::Rational => Ok(Scalar::Q(BigRational::new(num.clone(), den.clone()))),
            Field::Prime(p) => {
                let pb = BigInt::from(p);
                let reduce = |x: &BigInt| -> u64 {
                    let r = ((x % &pb) + &pb) % &pb;
                    u64::try_from(r).expect("residue fits in u64")
                };
                let d = reduce(den);
                if d == 0 {
                    return Err(LinalgError::DivisionByZero);
                }
                let n = Scalar::Fp { value: reduce(num), modulus: p };
                n.checked_div(&Scalar::Fp { value: d, modulus: p })
            }
        }
    }

    /// Parses an integer or `a/b`.
    pub fn parse(field: Field, text: &str) -> Result<Scalar> {
        let t = text.trim();
        let err = |why: &str| LinalgError::Parse(text.to_string(), why.to_string());
        let (n, d) = match t.split_once('/') {
            Some((a, b)) => (
                a.trim().parse::<BigInt>().map_err(|_| err("bad numerator"))?,
                b.trim().parse::<BigInt>().map_err(|_| err("bad denominator"))?,
            ),
            None => (t.parse::<BigInt>().map_err(|_| err("not an integer"))?, BigInt::one()),
        };
        Scalar::from_fraction(field, &n, &d)
    }

    pub fn field(&self) -> Field {
        match self {
            Scalar::Q(_) => Field::Rational,
            Scalar::Fp { modulus, .. } => Field::Prime(*modulus),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Q(q) => q.is_zero(),
            Scalar::Fp { value, .. } => *value == 0,
        }
    }

    pub fn is_one(&self) -> bool {
        match self {
            Scalar::Q(q) => q.is_one(),
            Scalar::Fp { value, .. } => *value == 1,
        }
    }

    fn same_field(&self, other: &Scalar) -> Result<()> {
        let (a, b) = (self.field(), other.field());
        if a == b {
            Ok(())
        } else {
            Err(LinalgError::FieldMismatch(a, b))
        }
    }

    pub fn checked_add(&self, other: &Scalar) -> Result<Scalar> {
        self.same_field(other)?;
        Ok(match (self, other) {
            (Scalar::Q(a), Scalar::Q(b)) => Scalar::Q(a + b),
            (Scalar::Fp { value: a, modulus: p }, Scalar::Fp { value: b, .. }) => {
                Scalar::Fp { value: ((*a as u128 + *b as u128) % *p as u128) as u64, modulus: *p }
            }
            _ => unreachable!(),
        })
    }

    pub fn checked_mul(&self, other: &Scalar) -> Result<Scalar> {
        self.same_field(other)?;
        Ok(match (self, other) {
            (Scalar::Q(a), Scalar::Q(b)) => Scalar::Q(a * b),
            (Scalar::Fp { value: a, modulus: p }, Scalar::Fp { value: b, .. }) => {
                Scalar::Fp { value: ((*a as u128 * *b as u128) % *p as u128) as u64, modulus: *p }
            }
            _ => unreachable!(),
        })
    }

    pub fn inverse(&self) -> Result<Scalar> {
        if self.is_zero() {
            return Err(LinalgError::DivisionByZero);
        }
        Ok(match self {
            Scalar::Q(q) => Scalar::Q(q.recip()),
            Scalar::Fp { value, modulus } => {
                Scalar::Fp { value: pow_mod(*value, modulus - 2, *modulus), modulus: *modulus }
            }
        })
    }

    pub fn checked_div(&self, other: &Scalar) -> Result<Scalar> {
        self.checked_mul(&other.inverse()?)
    }

    fn mul_assign_ref(&mut self, other: &Scalar) {
        match (self, other) {
            (Scalar::Q(a), Scalar::Q(b)) => *a *= b,
            (Scalar::Fp { value: a, modulus: p }, Scalar::Fp { value: b, modulus: q }) if p == q => {
                *a = ((*a as u128 * *b as u128) % *p as u128) as u64
            }
            (a, b) => panic!("field mismatch: {} vs {}", a.field(), b.field()),
        }
    }

    /// `self -= a * b`, the elimination inner loop.
    fn sub_mul_assign(&mut self, a: &Scalar, b: &Scalar) {
        match (self, a, b) {
            (Scalar::Q(s), Scalar::Q(x), Scalar::Q(y)) => *s -= x * y,
            (Scalar::Fp { value: s, modulus: p }, Scalar::Fp { value: x, .. }, Scalar::Fp { value: y, .. }) => {
                let p128 = *p as u128;
                let prod = (*x as u128 * *y as u128) % p128;
                *s = ((*s as u128 + p128 - prod) % p128) as u64;
            }
            (s, a, _) => panic!("field mismatch: {} vs {}", s.field(), a.field()),
        }
    }

    /// `self += a * b`.
    pub fn add_mul_assign(&mut self, a: &Scalar, b: &Scalar) {
        match (self, a, b) {
            (Scalar::Q(s), Scalar::Q(x), Scalar::Q(y)) => *s += x * y,
            (Scalar::Fp { value: s, modulus: p }, Scalar::Fp { value: x, .. }, Scalar::Fp { value: y, .. }) => {
                let p128 = *p as u128;
                *s = ((*s as u128 + (*x as u128 * *y as u128) % p128) % p128) as u64;
            }
            (s, a, _) => panic!("field mismatch: {} vs {}", s.field(), a.field()),
        }
    }
}

fn pow_mod(base: u64, mut exp: u64, m: u64) -> u64 {
    let m = m as u128;
    let mut acc: u128 = 1;
    let mut b = base as u128 % m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * b % m;
        }
        b = b * b % m;
        exp >>= 1;
    }
    acc as u64
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Q(q) if q.is_integer() => write!(f, "{}", q.numer()),
            Scalar::Q(q) => write!(f, "{}/{}", q.numer(), q.denom()),
            Scalar::Fp { value, .. } => write!(f, "{value}"),
        }
    }
}

impl<'a> Add for &'a Scalar {
    type Output = Scalar;
    fn add(self, rhs: &'a Scalar) -> Scalar {
        self.checked_add(rhs).expect("scalar addition across fields")
    }
}

impl<'a> Mul for &'a Scalar {
    type Output = Scalar;
    fn mul(self, rhs: &'a Scalar) -> Scalar {
        self.checked_mul(rhs).expect("scalar multiplication across fields")
    }
}

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        match self {
            Scalar::Q(q) => Scalar::Q(-q),
            Scalar::Fp { value, modulus } => Scalar::Fp { value: (modulus - value) % modulus, modulus: *modulus },
        }
    }
}

impl<'a> Sub for &'a Scalar {
    type Output = Scalar;
    fn sub(self, rhs: &'a Scalar) -> Scalar {
        self + &(-rhs)
    }
}

pub type Vector = Vec<Scalar>;

pub fn zero_vector(field: Field, len: usize) -> Vector {
    vec![field.zero(); len]
}

pub fn unit_vector(field: Field, len: usize, i: usize) -> Vector {
    let mut v = zero_vector(field, len);
    v[i] = field.one();
    v
}

pub fn is_zero_vector(v: &[Scalar]) -> bool {
    v.iter().all(Scalar::is_zero)
}

pub fn add_scaled(acc: &mut [Scalar], coeff: &Scalar, v: &[Scalar]) {
    if coeff.is_zero() {
        return;
    }
    for (a, x) in acc.iter_mut().zip(v) {
        if !x.is_zero() {
            a.add_mul_assign(coeff, x);
        }
    }
}

/// Dense matrix with entries in a single field.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    field: Field,
    data: Vec<Scalar>,
}

impl Matrix {
    pub fn zeros(field: Field, rows: usize, cols: usize) -> Matrix {
        Matrix { rows, cols, field, data: vec![field.zero(); rows * cols] }
    }

    pub fn identity(field: Field, n: usize) -> Matrix {
        let mut m = Matrix::zeros(field, n, n);
        for i in 0..n {
            m.data[i * n + i] = field.one();
        }
        m
    }

    /// Builds a matrix from rows; a matrix with no rows needs the explicit column count.
    pub fn from_rows(field: Field, cols: usize, rows: Vec<Vector>) -> Result<Matrix> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * cols);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != cols {
                return Err(LinalgError::DimensionMismatch(format!(
                    "row {i} has {} entries, expected {cols}",
                    row.len()
                )));
            }
            for x in row {
                if x.field() != field {
                    return Err(LinalgError::FieldMismatch(field, x.field()));
                }
                data.push(x);
            }
        }
        Ok(Matrix { rows: n, cols, field, data })
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns(field: Field, rows: usize, columns: &[Vector]) -> Result<Matrix> {
        let mut m = Matrix::zeros(field, rows, columns.len());
        for (j, c) in columns.iter().enumerate() {
            if c.len() != rows {
                return Err(LinalgError::DimensionMismatch(format!(
                    "column {j} has {} entries, expected {rows}",
                    c.len()
                )));
            }
            for (i, x) in c.iter().enumerate() {
                if x.field() != field {
                    return Err(LinalgError::FieldMismatch(field, x.field()));
                }
                m.data[i * m.cols + j] = x.clone();
            }
        }
        Ok(m)
    }

    /// Densifies sparse `(row, col, value)` triplets; repeated positions are summed.
    pub fn from_triplets(
        field: Field,
        rows: usize,
        cols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, Scalar)>,
    ) -> Result<Matrix> {
        let mut m = Matrix::zeros(field, rows, cols);
        for (i, j, x) in triplets {
            if i >= rows || j >= cols {
                return Err(LinalgError::DimensionMismatch(format!("triplet ({i},{j}) outside {rows}x{cols}")));
            }
            if x.field() != field {
                return Err(LinalgError::FieldMismatch(field, x.field()));
            }
            m.data[i * cols + j].add_mul_assign(&field.one(), &x);
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn get(&self, i: usize, j: usize) -> &Scalar {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, x: Scalar) {
        assert_eq!(x.field(), self.field, "field mismatch in Matrix::set");
        self.data[i * self.cols + j] = x;
    }

    pub fn add_to(&mut self, i: usize, j: usize, x: &Scalar) {
        let one = self.field.one();
        self.data[i * self.cols + j].add_mul_assign(&one, x);
    }

    pub fn row(&self, i: usize) -> &[Scalar] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vector {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn to_rows(&self) -> Vec<Vector> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Scalar::is_zero)
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.field, self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.get(i, j).clone();
            }
        }
        t
    }

    pub fn mul(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.field != rhs.field {
            return Err(LinalgError::FieldMismatch(self.field, rhs.field));
        }
        if self.cols != rhs.rows {
            return Err(LinalgError::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Matrix::zeros(self.field, self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                let (lo, hi) = (i * rhs.cols, (i + 1) * rhs.cols);
                add_scaled(&mut out.data[lo..hi], a, rhs.row(k));
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[Scalar]) -> Result<Vector> {
        if v.len() != self.cols {
            return Err(LinalgError::DimensionMismatch(format!(
                "{}x{} matrix applied to vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        let mut out = zero_vector(self.field, self.rows);
        for (i, o) in out.iter_mut().enumerate() {
            for (a, x) in self.row(i).iter().zip(v) {
                if !a.is_zero() && !x.is_zero() {
                    o.add_mul_assign(a, x);
                }
            }
        }
        Ok(out)
    }

    pub fn sub(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.rows != rhs.rows || self.cols != rhs.cols {
            return Err(LinalgError::DimensionMismatch("matrix difference".into()));
        }
        if self.field != rhs.field {
            return Err(LinalgError::FieldMismatch(self.field, rhs.field));
        }
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect();
        Ok(Matrix { data, ..*self })
    }

    pub fn scale(&self, c: &Scalar) -> Matrix {
        let data = self.data.iter().map(|a| a * c).collect();
        Matrix { data, ..*self }
    }

    /// Keeps the listed rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(rows.len() * self.cols);
        for &i in rows {
            data.extend_from_slice(self.row(i));
        }
        Matrix { rows: rows.len(), cols: self.cols, field: self.field, data }
    }

    pub fn vstack(&self, below: &Matrix) -> Result<Matrix> {
        if self.cols != below.cols {
            return Err(LinalgError::DimensionMismatch("vstack column counts".into()));
        }
        if self.field != below.field {
            return Err(LinalgError::FieldMismatch(self.field, below.field));
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&below.data);
        Ok(Matrix { rows: self.rows + below.rows, cols: self.cols, field: self.field, data })
    }

    fn check_uniform_field(&self) -> Result<()> {
        match self.data.iter().find(|x| x.field() != self.field) {
            Some(x) => Err(LinalgError::FieldMismatch(self.field, x.field())),
            None => Ok(()),
        }
    }

    pub fn rank(&self) -> Result<usize> {
        Ok(rref(self)?.1.len())
    }
}

/// Reduced row echelon form and pivot columns; `rank = pivots.len()`.
pub fn rref(m: &Matrix) -> Result<(Matrix, Vec<usize>)> {
    m.check_uniform_field()?;
    let mut rows = m.to_rows();
    let pivots = rref_rows(&mut rows, m.cols);
    let reduced = Matrix { rows: m.rows, cols: m.cols, field: m.field, data: rows.into_iter().flatten().collect() };
    Ok((reduced, pivots))
}

/// In-place RREF on a row list. Returns pivot columns.
fn rref_rows(rows: &mut [Vector], cols: usize) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows.len() {
            break;
        }
        let Some(found) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else {
            continue;
        };
        rows.swap(r, found);
        let inv = rows[r][c].inverse().expect("nonzero pivot");
        for x in rows[r][c..].iter_mut() {
            if !x.is_zero() {
                x.mul_assign_ref(&inv);
            }
        }
        let (before, rest) = rows.split_at_mut(r);
        let (pivot_row, after) = rest.split_first_mut().expect("pivot row");
        for other in before.iter_mut().chain(after.iter_mut()) {
            if other[c].is_zero() {
                continue;
            }
            let factor = other[c].clone();
            for (x, p) in other[c..].iter_mut().zip(&pivot_row[c..]) {
                if !p.is_zero() {
                    x.sub_mul_assign(&factor, p);
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

/// A basis of the null space: one vector per free column, with a 1 in that
/// column and 0 in every other free column.
pub fn kernel_basis(m: &Matrix) -> Result<Vec<Vector>> {
    let (reduced, pivots) = rref(m)?;
    let field = m.field;
    let mut is_pivot = vec![false; m.cols];
    for &p in &pivots {
        is_pivot[p] = true;
    }
    let mut basis = Vec::new();
    for free in (0..m.cols).filter(|&c| !is_pivot[c]) {
        let mut v = zero_vector(field, m.cols);
        v[free] = field.one();
        for (r, &p) in pivots.iter().enumerate() {
            let x = reduced.get(r, free);
            if !x.is_zero() {
                v[p] = -x;
            }
        }
        basis.push(v);
    }
    Ok(basis)
}

/// Rank of a list of vectors of length `dim`.
pub fn span_dim(field: Field, dim: usize, vectors: &[Vector]) -> Result<usize> {
    if vectors.is_empty() {
        return Ok(0);
    }
    Matrix::from_rows(field, dim, vectors.to_vec())?.rank()
}

/// A basis (the nonzero RREF rows) of the span of `vectors`.
pub fn span_basis(field: Field, dim: usize, vectors: &[Vector]) -> Result<Vec<Vector>> {
    if vectors.is_empty() {
        return Ok(Vec::new());
    }
    let m = Matrix::from_rows(field, dim, vectors.to_vec())?;
    let (reduced, pivots) = rref(&m)?;
    Ok((0..pivots.len()).map(|i| reduced.row(i).to_vec()).collect())
}

/// `dim span(Z) − dim span(B)` after checking `span(B) ⊆ span(Z)`.
pub fn subquotient_dim(field: Field, dim: usize, z: &[Vector], b: &[Vector]) -> Result<usize> {
    let rz = span_dim(field, dim, z)?;
    let rb = span_dim(field, dim, b)?;
    let mut both = z.to_vec();
    both.extend_from_slice(b);
    if span_dim(field, dim, &both)? != rz {
        // Locate the first generator of B that leaves span(Z).
        let mut acc = z.to_vec();
        for (i, v) in b.iter().enumerate() {
            acc.push(v.clone());
            if span_dim(field, dim, &acc)? != rz {
                return Err(LinalgError::NotASubspace(i));
            }
            acc.pop();
        }
    }
    Ok(rz - rb)
}

/// Solves `M x = b`. Free variables are set to zero, so the solution is
/// deterministic. Returns `Ok(None)` when the system is inconsistent.
pub fn solve_affine(m: &Matrix, b: &[Scalar]) -> Result<Option<Vector>> {
    if b.len() != m.rows {
        return Err(LinalgError::DimensionMismatch(format!(
            "{}x{} system with right-hand side of length {}",
            m.rows,
            m.cols,
            b.len()
        )));
    }
    m.check_uniform_field()?;
    if let Some(x) = b.iter().find(|x| x.field() != m.field) {
        return Err(LinalgError::FieldMismatch(m.field, x.field()));
    }
    let mut rows: Vec<Vector> = (0..m.rows)
        .map(|i| {
            let mut r = m.row(i).to_vec();
            r.push(b[i].clone());
            r
        })
        .collect();
    let pivots = rref_rows(&mut rows, m.cols + 1);
    if pivots.last() == Some(&m.cols) {
        return Ok(None);
    }
    let mut x = zero_vector(m.field, m.cols);
    for (r, &p) in pivots.iter().enumerate() {
        x[p] = rows[r][m.cols].clone();
    }
    Ok(Some(x))
}

/// Row echelon form built one vector at a time. Each stored row remembers its
/// expression in the inserted generators.
#[derive(Clone, Debug)]
struct Echelon {
    field: Field,
    /// pivot column -> (row with 1 at the pivot, combination of generators)
    rows: BTreeMap<usize, (Vector, Vector)>,
    generators: usize,
}

impl Echelon {
    fn new(field: Field) -> Echelon {
        Echelon { field, rows: BTreeMap::new(), generators: 0 }
    }

    /// Writes `v = residue + Σ combo[g] · generator_g`.
    fn reduce(&self, v: &[Scalar]) -> (Vector, Vector) {
        let mut residue = v.to_vec();
        let mut combo = zero_vector(self.field, self.generators);
        for (&c, (row, coeffs)) in &self.rows {
            if residue[c].is_zero() {
                continue;
            }
            let factor = residue[c].clone();
            for (x, r) in residue[c..].iter_mut().zip(&row[c..]) {
                if !r.is_zero() {
                    x.sub_mul_assign(&factor, r);
                }
            }
            for (x, k) in combo.iter_mut().zip(coeffs) {
                if !k.is_zero() {
                    x.add_mul_assign(&factor, k);
                }
            }
        }
        (residue, combo)
    }

    /// Adds `v` as the next generator if it is independent of the current ones.
    fn insert(&mut self, v: &[Scalar]) -> bool {
        let (residue, combo) = self.reduce(v);
        let Some(pivot) = residue.iter().position(|x| !x.is_zero()) else {
            return false;
        };
        self.generators += 1;
        for (_, coeffs) in self.rows.values_mut() {
            coeffs.push(self.field.zero());
        }
        let inv = residue[pivot].inverse().expect("nonzero pivot");
        let row: Vector = residue.iter().map(|x| x * &inv).collect();
        let mut coeffs: Vector = combo.iter().map(|x| -&(x * &inv)).collect();
        coeffs.push(inv);
        self.rows.insert(pivot, (row, coeffs));
        true
    }
}

/// Coordinates of vectors modulo a subspace.
///
/// Holds a basis `reps` of a complement of `span(killed)` inside
/// `span(reps) + span(killed)`; `coordinates` expresses a vector of that sum in
/// terms of the representatives, discarding the killed part.
#[derive(Clone, Debug)]
pub struct QuotientBasis {
    field: Field,
    dim: usize,
    pub reps: Vec<Vector>,
    killed: Vec<Vector>,
    echelon: Echelon,
}

impl QuotientBasis {
    /// Picks representatives of `span(top) / span(killed)` from the generators
    /// of `top`, greedily in order. Requires `span(killed) ⊆ span(top)`.
    pub fn new(field: Field, dim: usize, top: &[Vector], killed: &[Vector]) -> Result<Self> {
        if top.iter().chain(killed).any(|v| v.len() != dim) {
            return Err(LinalgError::DimensionMismatch("quotient generators".into()));
        }
        let mut echelon = Echelon::new(field);
        let mut kept = Vec::new();
        for v in killed {
            if echelon.insert(v) {
                kept.push(v.clone());
            }
        }
        let mut reps = Vec::new();
        for v in top {
            if echelon.insert(v) {
                reps.push(v.clone());
            }
        }
        Ok(QuotientBasis { field, dim, reps, killed: kept, echelon })
    }

    pub fn len(&self) -> usize {
        self.reps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reps.is_empty()
    }

    pub fn killed(&self) -> &[Vector] {
        &self.killed
    }

    /// Coordinates of `v` on the representatives, or `None` if `v` is not in
    /// `span(reps) + span(killed)`.
    pub fn coordinates(&self, v: &[Scalar]) -> Result<Option<Vector>> {
        if v.len() != self.dim {
            return Err(LinalgError::DimensionMismatch("quotient coordinates".into()));
        }
        let (residue, combo) = self.echelon.reduce(v);
        if !is_zero_vector(&residue) {
            return Ok(None);
        }
        Ok(Some(combo[self.killed.len()..].to_vec()))
    }

    pub fn field(&self) -> Field {
        self.field
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64) -> Scalar {
        Scalar::from_i64(Field::Rational, n)
    }

    fn qm(rows: &[&[i64]]) -> Matrix {
        let cols = rows.first().map_or(0, |r| r.len());
        Matrix::from_rows(Field::Rational, cols, rows.iter().map(|r| r.iter().map(|&x| q(x)).collect()).collect())
            .unwrap()
    }

    #[test]
    fn rref_examples() {
        let (r, p) = rref(&qm(&[&[1, 2], &[2, 4]])).unwrap();
        assert_eq!(p, vec![0]);
        assert_eq!(r, qm(&[&[1, 2], &[0, 0]]));

        let id = Matrix::identity(Field::Rational, 3);
        let (r, p) = rref(&id).unwrap();
        assert_eq!(r, id);
        assert_eq!(p, vec![0, 1, 2]);

        let (r, p) = rref(&qm(&[&[0]])).unwrap();
        assert_eq!(r, qm(&[&[0]]));
        assert!(p.is_empty());
    }

    #[test]
    fn rref_rejects_mixed_fields() {
        let mut m = Matrix::zeros(Field::Rational, 1, 2);
        m.data[1] = Scalar::from_i64(Field::Prime(5), 1);
        assert!(matches!(rref(&m), Err(LinalgError::FieldMismatch(..))));
        assert!(matches!(kernel_basis(&m), Err(LinalgError::FieldMismatch(..))));
    }

    #[test]
    fn kernel_examples() {
        let k = kernel_basis(&qm(&[&[1, 2], &[2, 4]])).unwrap();
        assert_eq!(k, vec![vec![q(-2), q(1)]]);
        assert!(kernel_basis(&Matrix::identity(Field::Rational, 4)).unwrap().is_empty());
        let k = kernel_basis(&Matrix::zeros(Field::Rational, 2, 3)).unwrap();
        assert_eq!(k.len(), 3);
        assert_eq!(span_dim(Field::Rational, 3, &k).unwrap(), 3);
    }

    #[test]
    fn subquotient_examples() {
        let e = |i| unit_vector(Field::Rational, 2, i);
        assert_eq!(subquotient_dim(Field::Rational, 2, &[e(0), e(1)], &[e(0)]).unwrap(), 1);
        assert_eq!(subquotient_dim(Field::Rational, 2, &[e(0)], &[e(0)]).unwrap(), 0);
        assert_eq!(subquotient_dim(Field::Rational, 2, &[e(0)], &[e(1)]), Err(LinalgError::NotASubspace(0)));
    }

    #[test]
    fn solve_examples() {
        let b = vec![q(3), q(-1), q(7)];
        assert_eq!(solve_affine(&Matrix::identity(Field::Rational, 3), &b).unwrap(), Some(b));
        let m = qm(&[&[1, 2], &[2, 4]]);
        assert_eq!(solve_affine(&m, &[q(1), q(2)]).unwrap(), Some(vec![q(1), q(0)]));
        assert_eq!(solve_affine(&m, &[q(1), q(1)]).unwrap(), None);
        assert!(matches!(solve_affine(&m, &[q(1)]), Err(LinalgError::DimensionMismatch(_))));
    }

    #[test]
    fn prime_field_arithmetic() {
        let f = Field::prime(7).unwrap();
        let a = Scalar::from_i64(f, 3);
        assert_eq!(&a * &a.inverse().unwrap(), f.one());
        assert_eq!(Scalar::parse(f, "1/2").unwrap(), Scalar::from_i64(f, 4));
        assert!(Field::prime(9).is_err());
        assert_eq!(Field::parse("fp:5").unwrap(), Field::Prime(5));
        assert!(Scalar::parse(Field::Prime(5), "1/5").is_err());
    }

    #[test]
    fn rationals_are_normalized() {
        let x = Scalar::parse(Field::Rational, "4/-6").unwrap();
        assert_eq!(x.to_string(), "-2/3");
    }

    #[test]
    fn quotient_coordinates() {
        let f = Field::Rational;
        let e = |i| unit_vector(f, 3, i);
        let qb = QuotientBasis::new(f, 3, &[e(0), e(1)], &[e(1)]).unwrap();
        assert_eq!(qb.len(), 1);
        let v = vec![q(5), q(9), q(0)];
        assert_eq!(qb.coordinates(&v).unwrap(), Some(vec![q(5)]));
        assert_eq!(qb.coordinates(&e(2)).unwrap(), None);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn small_matrix() -> impl Strategy<Value = Matrix> {
            (1usize..5, 1usize..6).prop_flat_map(|(r, c)| {
                proptest::collection::vec(-3i64..4, r * c).prop_map(move |xs| {
                    Matrix::from_rows(
                        Field::Rational,
                        c,
                        xs.chunks(c).map(|ch| ch.iter().map(|&x| q(x)).collect()).collect(),
                    )
                    .unwrap()
                })
            })
        }

        proptest! {
            #[test]
            fn rank_nullity(m in small_matrix()) {
                let k = kernel_basis(&m).unwrap();
                prop_assert_eq!(m.rank().unwrap() + k.len(), m.cols());
                for v in &k {
                    prop_assert!(is_zero_vector(&m.mul_vec(v).unwrap()));
                }
                prop_assert_eq!(span_dim(Field::Rational, m.cols(), &k).unwrap(), k.len());
            }

            #[test]
            fn rref_idempotent(m in small_matrix()) {
                let (r, p) = rref(&m).unwrap();
                let (r2, p2) = rref(&r).unwrap();
                prop_assert_eq!(r, r2);
                prop_assert_eq!(p, p2);
            }

            #[test]
            fn solve_consistent_systems(m in small_matrix(), seed in proptest::collection::vec(-3i64..4, 6)) {
                let x: Vector = (0..m.cols()).map(|i| q(seed[i])).collect();
                let b = m.mul_vec(&x).unwrap();
                let sol = solve_affine(&m, &b).unwrap().expect("consistent");
                prop_assert_eq!(m.mul_vec(&sol).unwrap(), b);
            }

            #[test]
            fn prime_field_rank_nullity(m in small_matrix(), p in prop::sample::select(vec![2u64, 3, 5, 7])) {
                let f = Field::Prime(p);
                let rows: Vec<Vector> = m.to_rows().iter().map(|r| r.iter().map(|x| match x {
                    Scalar::Q(v) => Scalar::from_fraction(f, v.numer(), v.denom()).unwrap(),
                    s => s.clone(),
                }).collect()).collect();
                let mp = Matrix::from_rows(f, m.cols(), rows).unwrap();
                let k = kernel_basis(&mp).unwrap();
                prop_assert_eq!(mp.rank().unwrap() + k.len(), mp.cols());
                for v in &k {
                    prop_assert!(is_zero_vector(&mp.mul_vec(v).unwrap()));
                }
            }
        }
    }
}
