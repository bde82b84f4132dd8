//! Sheaves of vector spaces on a finite space.
//!
//! A sheaf is determined by its stalks `F_x = F(U_x)` and the maps
//! `F_x → F_y` for `y ≤ x`; sections over `U` are the compatible families
//! `(s_x)_{x ∈ U}`. Cohomology is the derived limit over the point poset,
//! computed with the complex `C^n = ∏_{x_0 < … < x_n} F_{x_0}` and
//!
//! ```text
//! (dc)(x_0 < … < x_{n+1}) = ρ_{x_1→x_0} c(x_1, …) + Σ_{k≥1} (−1)^k c(…, x̂_k, …).
//! ```

use std::collections::BTreeMap;

use rayon::prelude::*;
use thiserror::Error;

use crate::colimit::{CochainPresheaf, ColimitError, DegreeSlice, LinearPresheaf};
use crate::linalg::{
    is_zero_vector, kernel_basis, zero_vector, Field, LinalgError, Matrix, QuotientBasis, Scalar, Vector,
};
use crate::space::{FiniteSpace, Open};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SheafError {
    #[error("malformed sheaf data: {0}")]
    Shape(String),
    #[error("maps are not functorial at {from} → {via} → {to}")]
    NotFunctorial { from: String, via: String, to: String },
    #[error("H^{degree} needs truncation at least {needed}, have {have}")]
    Truncation { degree: usize, needed: usize, have: usize },
    #[error(transparent)]
    Colimit(#[from] ColimitError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

pub type Result<T> = std::result::Result<T, SheafError>;

/// A finite cochain complex given by its differentials.
#[derive(Clone, Debug)]
pub struct CochainComplex {
    pub field: Field,
    pub dims: Vec<usize>,
    /// `differentials[n]: C^n → C^{n+1}`; the last space has no outgoing map.
    pub differentials: Vec<Matrix>,
}

impl CochainComplex {
    pub fn is_complex(&self) -> Result<bool> {
        for w in self.differentials.windows(2) {
            if !w[1].mul(&w[0])?.is_zero() {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn cohomology_dims(&self) -> Result<Vec<usize>> {
        let ranks: Vec<usize> = self.differentials.iter().map(Matrix::rank).collect::<std::result::Result<_, _>>()?;
        Ok((0..self.dims.len())
            .map(|n| {
                let out = ranks.get(n).copied().unwrap_or(0);
                let inc = if n == 0 { 0 } else { ranks[n - 1] };
                self.dims[n] - out - inc
            })
            .collect())
    }
}

/// Strict point chains of `u` by length, and the derived-limit complex for
/// stalk dimensions `dim(x)` and maps `map(x, y): F_x → F_y` (`y < x`).
pub fn derived_limit_complex(
    space: &FiniteSpace,
    u: Open,
    field: Field,
    dim: impl Fn(usize) -> usize + Sync,
    map: impl Fn(usize, usize) -> Matrix + Sync,
) -> Result<(Vec<Vec<Vec<usize>>>, CochainComplex)> {
    let chains = space.point_chains(u);
    let offsets: Vec<Vec<usize>> = chains
        .iter()
        .map(|level| level.iter().scan(0, |acc, c| Some(std::mem::replace(acc, *acc + dim(c[0])))).collect())
        .collect();
    let dims: Vec<usize> = chains.iter().map(|level| level.iter().map(|c| dim(c[0])).sum()).collect();
    let index: Vec<BTreeMap<&[usize], usize>> =
        chains.iter().map(|level| level.iter().enumerate().map(|(i, c)| (c.as_slice(), i)).collect()).collect();
    let differentials = (0..chains.len().saturating_sub(1))
        .into_par_iter()
        .map(|n| {
            let mut triplets: Vec<(usize, usize, Scalar)> = Vec::new();
            for (ci, chain) in chains[n + 1].iter().enumerate() {
                let row0 = offsets[n + 1][ci];
                for k in 0..chain.len() {
                    let mut face = chain.clone();
                    face.remove(k);
                    let fi = index[n][face.as_slice()];
                    let col0 = offsets[n][fi];
                    let sign = if k % 2 == 0 { field.one() } else { -&field.one() };
                    if k == 0 {
                        let m = map(chain[1], chain[0]);
                        for i in 0..m.rows() {
                            for j in 0..m.cols() {
                                let x = m.get(i, j);
                                if !x.is_zero() {
                                    triplets.push((row0 + i, col0 + j, x.clone()));
                                }
                            }
                        }
                    } else {
                        for i in 0..dim(chain[0]) {
                            triplets.push((row0 + i, col0 + i, sign.clone()));
                        }
                    }
                }
            }
            Matrix::from_triplets(field, dims[n + 1], dims[n], triplets)
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok((chains, CochainComplex { field, dims, differentials }))
}

/// A presheaf of vector spaces stored on every open.
#[derive(Clone, Debug)]
pub struct VectPresheaf {
    space: FiniteSpace,
    field: Field,
    dims: BTreeMap<Open, usize>,
    maps: BTreeMap<(Open, Open), Matrix>,
}

impl VectPresheaf {
    pub fn new(
        space: FiniteSpace,
        field: Field,
        dims: BTreeMap<Open, usize>,
        maps: BTreeMap<(Open, Open), Matrix>,
    ) -> Result<VectPresheaf> {
        for u in space.opens() {
            let du = *dims.get(&u).ok_or_else(|| SheafError::Shape(format!("no dimension at {}", space.name(u))))?;
            for v in space.opens().into_iter().filter(|v| v.is_subset(u)) {
                let m = maps
                    .get(&(u, v))
                    .ok_or_else(|| SheafError::Shape(format!("no map {} → {}", space.name(u), space.name(v))))?;
                if m.rows() != dims[&v] || m.cols() != du {
                    return Err(SheafError::Shape(format!(
                        "map {} → {} has wrong shape",
                        space.name(u),
                        space.name(v)
                    )));
                }
            }
        }
        Ok(VectPresheaf { space, field, dims, maps })
    }

    /// Tabulates any presheaf on all opens and inclusions.
    pub fn from_linear<P: LinearPresheaf + ?Sized>(p: &P) -> Result<VectPresheaf> {
        let space = p.space().clone();
        let opens = space.opens();
        let mut dims = BTreeMap::new();
        let mut maps = BTreeMap::new();
        for &u in &opens {
            dims.insert(u, p.dim(u)?);
            for &v in opens.iter().filter(|v| v.is_subset(u)) {
                maps.insert((u, v), p.restriction(u, v)?);
            }
        }
        Ok(VectPresheaf { space, field: p.field(), dims, maps })
    }

    /// Identity and composition laws on all opens.
    pub fn check_functorial(&self) -> Result<()> {
        let opens = self.space.opens();
        for &u in &opens {
            if self.maps[&(u, u)] != Matrix::identity(self.field, self.dims[&u]) {
                let n = self.space.name(u);
                return Err(SheafError::NotFunctorial { from: n.clone(), via: n.clone(), to: n });
            }
            for &v in opens.iter().filter(|v| v.is_subset(u)) {
                for &w in opens.iter().filter(|w| w.is_subset(v)) {
                    if self.maps[&(v, w)].mul(&self.maps[&(u, v)])? != self.maps[&(u, w)] {
                        return Err(SheafError::NotFunctorial {
                            from: self.space.name(u),
                            via: self.space.name(v),
                            to: self.space.name(w),
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

impl LinearPresheaf for VectPresheaf {
    fn space(&self) -> &FiniteSpace {
        &self.space
    }

    fn field(&self) -> Field {
        self.field
    }

    fn dim(&self, u: Open) -> std::result::Result<usize, ColimitError> {
        Ok(self.dims[&u])
    }

    fn restriction(&self, u: Open, v: Open) -> std::result::Result<Matrix, ColimitError> {
        self.maps.get(&(u, v)).cloned().ok_or(ColimitError::NotContained { inner: v, outer: u })
    }
}

/// A sheaf given by stalks and specialization maps.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VectSheaf {
    space: FiniteSpace,
    field: Field,
    stalks: Vec<usize>,
    /// `maps[(x, y)]: F_x → F_y` for `y ≤ x`.
    maps: BTreeMap<(usize, usize), Matrix>,
}

impl VectSheaf {
    /// Maps for `y < x` are required; identities on `x = x` are added.
    pub fn new(
        space: FiniteSpace,
        field: Field,
        stalks: Vec<usize>,
        mut maps: BTreeMap<(usize, usize), Matrix>,
    ) -> Result<VectSheaf> {
        let n = space.num_points();
        if stalks.len() != n {
            return Err(SheafError::Shape(format!("{} stalks for {n} points", stalks.len())));
        }
        for x in 0..n {
            maps.entry((x, x)).or_insert_with(|| Matrix::identity(field, stalks[x]));
            for y in space.min_open(x).points() {
                let m = maps.get(&(x, y)).ok_or_else(|| {
                    SheafError::Shape(format!("no map from {} to {}", space.ids()[x], space.ids()[y]))
                })?;
                if m.rows() != stalks[y] || m.cols() != stalks[x] {
                    return Err(SheafError::Shape(format!(
                        "map from {} to {} has wrong shape",
                        space.ids()[x],
                        space.ids()[y]
                    )));
                }
            }
        }
        let sheaf = VectSheaf { space, field, stalks, maps };
        sheaf.check_functorial()?;
        Ok(sheaf)
    }

    pub fn constant(space: FiniteSpace, field: Field, dim: usize) -> VectSheaf {
        let n = space.num_points();
        let maps = (0..n)
            .flat_map(|x| space.min_open(x).points().map(move |y| (x, y)).collect::<Vec<_>>())
            .map(|k| (k, Matrix::identity(field, dim)))
            .collect();
        VectSheaf { space, field, stalks: vec![dim; n], maps }
    }

    pub fn zero(space: FiniteSpace, field: Field) -> VectSheaf {
        VectSheaf::constant(space, field, 0)
    }

    fn check_functorial(&self) -> Result<()> {
        let id = |x: usize| self.space.ids()[x].clone();
        for x in 0..self.stalks.len() {
            if self.maps[&(x, x)] != Matrix::identity(self.field, self.stalks[x]) {
                return Err(SheafError::NotFunctorial { from: id(x), via: id(x), to: id(x) });
            }
            for y in self.space.min_open(x).points() {
                for z in self.space.min_open(y).points() {
                    if self.maps[&(y, z)].mul(&self.maps[&(x, y)])? != self.maps[&(x, z)] {
                        return Err(SheafError::NotFunctorial { from: id(x), via: id(y), to: id(z) });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn stalks(&self) -> &[usize] {
        &self.stalks
    }

    pub fn map(&self, x: usize, y: usize) -> &Matrix {
        &self.maps[&(x, y)]
    }

    pub fn is_zero(&self) -> bool {
        self.stalks.iter().all(|&d| d == 0)
    }

    fn offsets(&self, u: Open) -> BTreeMap<usize, usize> {
        u.points().scan(0, |acc, x| Some((x, std::mem::replace(acc, *acc + self.stalks[x])))).collect()
    }

    /// Compatible families over `u`, as vectors in `⊕_{x ∈ U} F_x`.
    pub fn sections_basis(&self, u: Open) -> std::result::Result<Vec<Vector>, LinalgError> {
        let offsets = self.offsets(u);
        let total: usize = u.points().map(|x| self.stalks[x]).sum();
        let mut rows: Vec<Vector> = Vec::new();
        for x in u.points() {
            for y in self.space.min_open(x).points().filter(|&y| y != x) {
                let m = &self.maps[&(x, y)];
                for i in 0..m.rows() {
                    let mut row = zero_vector(self.field, total);
                    for j in 0..m.cols() {
                        row[offsets[&x] + j] = m.get(i, j).clone();
                    }
                    row[offsets[&y] + i] = &row[offsets[&y] + i] - &self.field.one();
                    rows.push(row);
                }
            }
        }
        if rows.is_empty() {
            return Ok((0..total).map(|i| crate::linalg::unit_vector(self.field, total, i)).collect());
        }
        kernel_basis(&Matrix::from_rows(self.field, total, rows)?)
    }

    /// `H^i(U, F)` for all `i` up to the length of the longest point chain.
    pub fn cohomology(&self, u: Open) -> Result<Vec<usize>> {
        let (_, complex) =
            derived_limit_complex(&self.space, u, self.field, |x| self.stalks[x], |x, y| self.maps[&(x, y)].clone())?;
        complex.cohomology_dims()
    }
}

impl LinearPresheaf for VectSheaf {
    fn space(&self) -> &FiniteSpace {
        &self.space
    }

    fn field(&self) -> Field {
        self.field
    }

    fn dim(&self, u: Open) -> std::result::Result<usize, ColimitError> {
        Ok(self.sections_basis(u)?.len())
    }

    fn restriction(&self, u: Open, v: Open) -> std::result::Result<Matrix, ColimitError> {
        if !v.is_subset(u) {
            return Err(ColimitError::NotContained { inner: v, outer: u });
        }
        let (bu, bv) = (self.sections_basis(u)?, self.sections_basis(v)?);
        let (ou, ov) = (self.offsets(u), self.offsets(v));
        let total_v: usize = v.points().map(|x| self.stalks[x]).sum();
        let q = QuotientBasis::new(self.field, total_v, &bv, &[])?;
        let mut columns = Vec::with_capacity(bu.len());
        for s in &bu {
            let mut r = zero_vector(self.field, total_v);
            for x in v.points() {
                for i in 0..self.stalks[x] {
                    r[ov[&x] + i] = s[ou[&x] + i].clone();
                }
            }
            columns.push(q.coordinates(&r)?.expect("restriction of a compatible family is compatible"));
        }
        Ok(Matrix::from_columns(self.field, bv.len(), &columns)?)
    }
}

/// `H^*(U, F)` via the derived limit over the points of `U`.
pub fn sheaf_cohomology(f: &VectSheaf, u: Open) -> Result<Vec<usize>> {
    f.cohomology(u)
}

/// Cohomology of the alternating Čech complex of a cover.
pub fn cech_cohomology<P: LinearPresheaf + ?Sized>(f: &P, cover: &[Open]) -> Result<Vec<usize>> {
    let field = f.field();
    let n = cover.len();
    let subsets: Vec<Vec<Vec<usize>>> = (1..=n)
        .map(|k| {
            let mut out = Vec::new();
            for mask in 0u64..(1 << n) {
                if mask.count_ones() as usize == k {
                    out.push((0..n).filter(|i| mask >> i & 1 == 1).collect());
                }
            }
            out
        })
        .collect();
    let meet = |s: &[usize]| s.iter().fold(f.space().whole(), |acc, &i| acc.intersection(cover[i]));
    let dims_of =
        |level: &Vec<Vec<usize>>| -> Result<Vec<usize>> { level.iter().map(|s| Ok(f.dim(meet(s))?)).collect() };
    let level_dims: Vec<Vec<usize>> = subsets.iter().map(dims_of).collect::<Result<_>>()?;
    let dims: Vec<usize> = level_dims.iter().map(|d| d.iter().sum()).collect();
    let mut differentials = Vec::new();
    for k in 0..n.saturating_sub(1) {
        let col_off: Vec<usize> = level_dims[k].iter().scan(0, |a, &d| Some(std::mem::replace(a, *a + d))).collect();
        let mut triplets = Vec::new();
        let mut row0 = 0;
        for (si, s) in subsets[k + 1].iter().enumerate() {
            let target = meet(s);
            for j in 0..s.len() {
                let mut face = s.clone();
                face.remove(j);
                let fi = subsets[k].iter().position(|t| *t == face).expect("face of a subset");
                let m = f.restriction(meet(&face), target)?;
                let sign = if j % 2 == 0 { field.one() } else { -&field.one() };
                for a in 0..m.rows() {
                    for b in 0..m.cols() {
                        let x = m.get(a, b);
                        if !x.is_zero() {
                            triplets.push((row0 + a, col_off[fi] + b, x * &sign));
                        }
                    }
                }
            }
            row0 += level_dims[k + 1][si];
        }
        differentials.push(Matrix::from_triplets(field, dims[k + 1], dims[k], triplets)?);
    }
    CochainComplex { field, dims, differentials }.cohomology_dims()
}

/// The sheafification of a presheaf together with its unit `P → aP`.
#[derive(Clone, Debug)]
pub struct Sheafification {
    pub sheaf: VectSheaf,
    /// `unit[U]: P(U) → aP(U)` in the coordinates of [`VectSheaf::sections_basis`].
    pub unit: BTreeMap<Open, Matrix>,
}

impl Sheafification {
    pub fn unit_is_iso(&self) -> Result<bool> {
        for m in self.unit.values() {
            if m.rows() != m.cols() || m.rank()? != m.rows() {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Stalks `P(U_x)`; sections over `U` are compatible families of germs.
pub fn sheafify<P: LinearPresheaf + ?Sized>(p: &P) -> Result<Sheafification> {
    let space = p.space().clone();
    let field = p.field();
    let n = space.num_points();
    let stalks: Vec<usize> = (0..n).map(|x| p.dim(space.min_open(x))).collect::<std::result::Result<_, _>>()?;
    let mut maps = BTreeMap::new();
    for x in 0..n {
        for y in space.min_open(x).points() {
            maps.insert((x, y), p.restriction(space.min_open(x), space.min_open(y))?);
        }
    }
    let sheaf = VectSheaf::new(space.clone(), field, stalks, maps)?;
    let mut unit = BTreeMap::new();
    for u in space.opens() {
        let basis = sheaf.sections_basis(u)?;
        let total: usize = u.points().map(|x| sheaf.stalks[x]).sum();
        let q = QuotientBasis::new(field, total, &basis, &[])?;
        let germs: Vec<Matrix> =
            u.points().map(|x| p.restriction(u, space.min_open(x))).collect::<std::result::Result<_, _>>()?;
        let mut columns = Vec::new();
        for j in 0..p.dim(u)? {
            let mut v = Vec::with_capacity(total);
            for g in &germs {
                v.extend(g.column(j));
            }
            columns.push(q.coordinates(&v)?.expect("germs of a section are compatible"));
        }
        unit.insert(u, Matrix::from_columns(field, basis.len(), &columns)?);
    }
    Ok(Sheafification { sheaf, unit })
}

/// `H^q` of a presheaf of complexes, sheafified: stalk at `x` is
/// `H^q(C(U_x))`, maps are induced by restriction. Needs `q ≤ N − 2`.
pub fn cohomology_sheaf<C: CochainPresheaf + ?Sized>(c: &C, q: usize) -> Result<VectSheaf> {
    if q + 2 > c.truncation() {
        return Err(SheafError::Truncation { degree: q, needed: q + 2, have: c.truncation() });
    }
    let space = c.space().clone();
    let field = c.field();
    let n = space.num_points();
    let mut quotients = Vec::with_capacity(n);
    let mut complexes = Vec::with_capacity(n);
    for x in 0..n {
        let cx = c.complex_at(space.min_open(x))?;
        let dim = cx.layout(q).dim();
        let qb = QuotientBasis::new(
            field,
            dim,
            &cx.cycles(q).map_err(ColimitError::from)?,
            &cx.boundaries(q).map_err(ColimitError::from)?,
        )?;
        quotients.push(qb);
        complexes.push(cx);
    }
    let mut maps = BTreeMap::new();
    for x in 0..n {
        for y in space.min_open(x).points().filter(|&y| y != x) {
            let proj = complexes[x].projection_matrix(&complexes[y], q).map_err(ColimitError::from)?;
            let mut columns = Vec::new();
            for z in &quotients[x].reps {
                let image = proj.mul_vec(z)?;
                columns.push(quotients[y].coordinates(&image)?.expect("restriction of a cocycle is a cocycle"));
            }
            maps.insert((x, y), Matrix::from_columns(field, quotients[y].len(), &columns)?);
        }
    }
    VectSheaf::new(space, field, quotients.iter().map(QuotientBasis::len).collect(), maps)
}

/// `H^i(U, C^p)` for one open and degree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AcyclicityEntry {
    pub open: Open,
    pub degree: usize,
    pub sections_dim: usize,
    pub cohomology: Vec<usize>,
}

impl AcyclicityEntry {
    pub fn acyclic(&self) -> bool {
        self.cohomology.iter().skip(1).all(|&d| d == 0)
    }

    /// `H^0(U, C^p) = C^p(U)`.
    pub fn global_sections_match(&self) -> bool {
        self.cohomology.first().copied().unwrap_or(0) == self.sections_dim
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AcyclicityReport {
    pub entries: Vec<AcyclicityEntry>,
}

impl AcyclicityReport {
    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.acyclic() && e.global_sections_match())
    }

    pub fn first_failure(&self) -> Option<&AcyclicityEntry> {
        self.entries.iter().find(|e| !(e.acyclic() && e.global_sections_match()))
    }
}

/// Sheaf cohomology of one sheaf on every open.
pub fn sheaf_acyclicity(f: &VectSheaf, degree: usize) -> Result<Vec<AcyclicityEntry>> {
    f.space
        .opens()
        .into_iter()
        .map(|u| Ok(AcyclicityEntry { open: u, degree, sections_dim: f.dim(u)?, cohomology: f.cohomology(u)? }))
        .collect()
}

/// `H^i(U, C^p)` for every open `U` and every `p ≤ N`.
pub fn acyclicity_report<C: CochainPresheaf + ?Sized>(c: &C) -> Result<AcyclicityReport> {
    let entries = (0..=c.truncation())
        .into_par_iter()
        .map(|p| {
            let slice = DegreeSlice { inner: c, degree: p };
            let sheaf = sheafify(&slice)?.sheaf;
            let mut entries = sheaf_acyclicity(&sheaf, p)?;
            // compare with the presheaf's own sections
            for e in &mut entries {
                e.sections_dim = slice.dim(e.open)?;
            }
            Ok(entries)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    Ok(AcyclicityReport { entries })
}

/// Whether a vector in `⊕ F_x` is a compatible family over `u`.
pub fn is_compatible(f: &VectSheaf, u: Open, v: &[Scalar]) -> Result<bool> {
    let offsets = f.offsets(u);
    for x in u.points() {
        for y in f.space.min_open(x).points().filter(|&y| y != x) {
            let sx = &v[offsets[&x]..offsets[&x] + f.stalks[x]];
            let sy = &v[offsets[&y]..offsets[&y] + f.stalks[y]];
            let image = f.maps[&(x, y)].mul_vec(sx)?;
            let diff: Vector = image.iter().zip(sy).map(|(a, b)| a - b).collect();
            if !is_zero_vector(&diff) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
