//! Double complexes, the spectral sequence of the column filtration, and the
//! local-to-global check for a presheaf of Hochschild complexes.
//!
//! For a double complex `D^{p,q}` with anticommuting `d_h` (raising `p`) and
//! `d_v` (raising `q`), the total complex is filtered by
//! `F^p Tot^n = ⊕_{p' ≥ p} D^{p', n−p'}` and
//!
//! ```text
//! Z_r^{p,q} = { x ∈ F^p Tot^{p+q} : Dx ∈ F^{p+r} }
//! E_r^{p,q} = Z_r^{p,q} / (Z_{r−1}^{p+1,q−1} + D Z_{r−1}^{p−r+1,q+r−2})
//! ```
//!
//! with `d_r: E_r^{p,q} → E_r^{p+r,q−r+1}` induced by `D`.
//!
//! The hypercohomology double complex of a presheaf of complexes `C` on a
//! finite space has `D^{p,q} = ∏_{x_0 < … < x_p} C^q(U_{x_0})`, `d_h` the
//! derived-limit differential and `d_v = (−1)^p d`. Rows run up to the
//! truncation `N`; statements about cohomology are made for `n ≤ N − 2` only.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use thiserror::Error;

use crate::colimit::{CochainPresheaf, ColimitError};
use crate::linalg::{kernel_basis, unit_vector, Field, LinalgError, Matrix, QuotientBasis, Scalar, Vector};
use crate::sheaftools::{cohomology_sheaf, derived_limit_complex, sheaf_cohomology, SheafError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SpectralError {
    #[error("malformed double complex: {0}")]
    Shape(String),
    #[error("double complex identity fails: {0}")]
    NotADoubleComplex(String),
    #[error("page {r}: E_(r+1) at ({p},{q}) is {from_ranks} from d_r but {from_formula} from the filtration")]
    PageMismatch { r: usize, p: usize, q: usize, from_ranks: usize, from_formula: usize },
    #[error(transparent)]
    Sheaf(#[from] SheafError),
    #[error(transparent)]
    Colimit(#[from] ColimitError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

pub type Result<T> = std::result::Result<T, SpectralError>;

/// A first-quadrant double complex with `P` columns and `Q` rows.
#[derive(Clone, Debug)]
pub struct DoubleComplex {
    field: Field,
    dims: Vec<Vec<usize>>,
    dh: BTreeMap<(usize, usize), Matrix>,
    dv: BTreeMap<(usize, usize), Matrix>,
    /// `offsets[n][p]`: start of `D^{p,n−p}` inside `Tot^n`.
    offsets: Vec<Vec<usize>>,
    totals: Vec<usize>,
    total_d: Vec<Matrix>,
    z_cache: Arc<Mutex<HashMap<(usize, usize, usize), Arc<Vec<Vector>>>>>,
    e_cache: Arc<Mutex<HashMap<[(usize, usize, usize); 3], Arc<QuotientBasis>>>>,
}

impl DoubleComplex {
    /// `dims[p][q]`; `dh[(p,q)]: D^{p,q} → D^{p+1,q}`, `dv[(p,q)]: D^{p,q} → D^{p,q+1}`.
    /// Missing maps are zero. Checks `d_h² = d_v² = d_h d_v + d_v d_h = 0`.
    pub fn new(
        field: Field,
        dims: Vec<Vec<usize>>,
        mut dh: BTreeMap<(usize, usize), Matrix>,
        mut dv: BTreeMap<(usize, usize), Matrix>,
    ) -> Result<DoubleComplex> {
        let cols = dims.len();
        let rows = dims.first().map_or(0, Vec::len);
        if dims.iter().any(|c| c.len() != rows) {
            return Err(SpectralError::Shape("columns have different heights".into()));
        }
        let dim = |p: usize, q: usize| if p < cols && q < rows { dims[p][q] } else { 0 };
        for p in 0..cols {
            for q in 0..rows {
                let h = dh.entry((p, q)).or_insert_with(|| Matrix::zeros(field, dim(p + 1, q), dims[p][q]));
                let v = dv.entry((p, q)).or_insert_with(|| Matrix::zeros(field, dim(p, q + 1), dims[p][q]));
                if (h.rows(), h.cols()) != (dim(p + 1, q), dims[p][q])
                    || (v.rows(), v.cols()) != (dim(p, q + 1), dims[p][q])
                {
                    return Err(SpectralError::Shape(format!("map at ({p},{q}) has the wrong shape")));
                }
            }
        }
        let n_max = (cols + rows).saturating_sub(1);
        let mut offsets = Vec::with_capacity(n_max);
        let mut totals = Vec::with_capacity(n_max);
        for n in 0..n_max {
            let mut acc = 0;
            let mut row = Vec::with_capacity(cols);
            for p in 0..cols {
                row.push(acc);
                if n >= p && n - p < rows {
                    acc += dims[p][n - p];
                }
            }
            offsets.push(row);
            totals.push(acc);
        }
        let mut dc = DoubleComplex {
            field,
            dims,
            dh,
            dv,
            offsets,
            totals,
            total_d: Vec::new(),
            z_cache: Arc::default(),
            e_cache: Arc::default(),
        };
        dc.check_identities()?;
        dc.total_d = (0..n_max).map(|n| dc.build_total_d(n)).collect::<Result<_>>()?;
        Ok(dc)
    }

    fn check_identities(&self) -> Result<()> {
        let (cols, rows) = (self.columns(), self.rows());
        for p in 0..cols {
            for q in 0..rows {
                if p + 2 < cols && !self.dh[&(p + 1, q)].mul(&self.dh[&(p, q)])?.is_zero() {
                    return Err(SpectralError::NotADoubleComplex(format!("d_h² ≠ 0 at ({p},{q})")));
                }
                if q + 2 < rows && !self.dv[&(p, q + 1)].mul(&self.dv[&(p, q)])?.is_zero() {
                    return Err(SpectralError::NotADoubleComplex(format!("d_v² ≠ 0 at ({p},{q})")));
                }
                if p + 1 < cols && q + 1 < rows {
                    let a = self.dv[&(p + 1, q)].mul(&self.dh[&(p, q)])?;
                    let b = self.dh[&(p, q + 1)].mul(&self.dv[&(p, q)])?;
                    let neg = b.scale(&-&self.field.one());
                    if a != neg {
                        return Err(SpectralError::NotADoubleComplex(format!("d_h d_v + d_v d_h ≠ 0 at ({p},{q})")));
                    }
                }
            }
        }
        Ok(())
    }

    fn in_bounds(&self, p: usize, n: usize) -> bool {
        p < self.columns() && n >= p && n - p < self.rows()
    }

    fn build_total_d(&self, n: usize) -> Result<Matrix> {
        let target = self.total_dim(n + 1);
        let mut triplets: Vec<(usize, usize, Scalar)> = Vec::new();
        let mut push = |m: &Matrix, r0: usize, c0: usize| {
            for i in 0..m.rows() {
                for j in 0..m.cols() {
                    let x = m.get(i, j);
                    if !x.is_zero() {
                        triplets.push((r0 + i, c0 + j, x.clone()));
                    }
                }
            }
        };
        for p in 0..self.columns() {
            if !self.in_bounds(p, n) {
                continue;
            }
            let q = n - p;
            let c0 = self.offsets[n][p];
            if self.in_bounds(p + 1, n + 1) {
                push(&self.dh[&(p, q)], self.offsets[n + 1][p + 1], c0);
            }
            if self.in_bounds(p, n + 1) {
                push(&self.dv[&(p, q)], self.offsets[n + 1][p], c0);
            }
        }
        Ok(Matrix::from_triplets(self.field, target, self.total_dim(n), triplets)?)
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn columns(&self) -> usize {
        self.dims.len()
    }

    pub fn rows(&self) -> usize {
        self.dims.first().map_or(0, Vec::len)
    }

    pub fn dims(&self) -> &[Vec<usize>] {
        &self.dims
    }

    pub fn dh(&self, p: usize, q: usize) -> &Matrix {
        &self.dh[&(p, q)]
    }

    pub fn dv(&self, p: usize, q: usize) -> &Matrix {
        &self.dv[&(p, q)]
    }

    /// Number of total degrees, `P + Q − 1`.
    pub fn total_degrees(&self) -> usize {
        self.totals.len()
    }

    pub fn total_dim(&self, n: usize) -> usize {
        self.totals.get(n).copied().unwrap_or(0)
    }

    pub fn total_differential(&self, n: usize) -> Option<&Matrix> {
        self.total_d.get(n)
    }

    pub fn total_cohomology(&self) -> Result<Vec<usize>> {
        let ranks: Vec<usize> = self.total_d.iter().map(Matrix::rank).collect::<std::result::Result<_, _>>()?;
        Ok((0..self.total_degrees())
            .map(|n| self.totals[n] - ranks[n] - if n == 0 { 0 } else { ranks[n - 1] })
            .collect())
    }

    /// First coordinate of `F^p Tot^n`.
    fn filtration_start(&self, n: usize, p: i64) -> usize {
        if p <= 0 || n >= self.total_degrees() {
            0
        } else if p as usize >= self.columns() {
            self.total_dim(n)
        } else {
            self.offsets[n][p as usize]
        }
    }

    /// Normal form of `Z_r^{p, n−p}`: `(n, lower, upper)` for
    /// `{x ∈ F^lower Tot^n : Dx ∈ F^upper}`, or `None` when `n` is out of range.
    fn z_key(&self, r: i64, p: i64, n: i64) -> Option<(usize, usize, usize)> {
        if n < 0 || n as usize >= self.total_degrees() {
            return None;
        }
        let cols = self.columns() as i64;
        let lower = p.clamp(0, cols);
        let upper = (p + r).clamp(lower, cols);
        Some((n as usize, lower as usize, upper as usize))
    }

    fn z(&self, key: Option<(usize, usize, usize)>) -> Result<Arc<Vec<Vector>>> {
        let Some(key) = key else { return Ok(Arc::new(Vec::new())) };
        if let Some(hit) = self.z_cache.lock().expect("cache lock").get(&key) {
            return Ok(hit.clone());
        }
        let (n, lower, upper) = key;
        let dim = self.total_dim(n);
        let start = self.filtration_start(n, lower as i64);
        let free = dim - start;
        let d = &self.total_d[n];
        let limit = self.filtration_start(n + 1, upper as i64).min(d.rows());
        let local = if free == 0 {
            Vec::new()
        } else if limit == 0 || upper == lower {
            (0..free).map(|i| unit_vector(self.field, free, i)).collect()
        } else {
            let rows: Vec<Vector> = (0..limit).map(|i| d.row(i)[start..].to_vec()).collect();
            kernel_basis(&Matrix::from_rows(self.field, free, rows)?)?
        };
        let out: Vec<Vector> = local
            .into_iter()
            .map(|v| {
                let mut full = vec![self.field.zero(); dim];
                full[start..].clone_from_slice(&v);
                full
            })
            .collect();
        let out = Arc::new(out);
        self.z_cache.lock().expect("cache lock").insert(key, out.clone());
        Ok(out)
    }

    /// `E_r^{p,q}` as a subquotient of `Tot^{p+q}`.
    fn e(&self, r: i64, p: usize, q: usize) -> Result<Arc<QuotientBasis>> {
        let (pi, n) = (p as i64, (p + q) as i64);
        let keys = [self.z_key(r, pi, n), self.z_key(r - 1, pi + 1, n), self.z_key(r - 1, pi - r + 1, n - 1)];
        let cache_key = keys.map(|k| k.unwrap_or((usize::MAX, 0, 0)));
        if let Some(hit) = self.e_cache.lock().expect("cache lock").get(&cache_key) {
            return Ok(hit.clone());
        }
        let top = self.z(keys[0])?;
        let mut killed: Vec<Vector> = self.z(keys[1])?.as_ref().clone();
        for x in self.z(keys[2])?.iter() {
            killed.push(self.total_d[(n - 1) as usize].mul_vec(x)?);
        }
        let e = Arc::new(QuotientBasis::new(self.field, self.total_dim(p + q), &top, &killed)?);
        self.e_cache.lock().expect("cache lock").insert(cache_key, e.clone());
        Ok(e)
    }

    /// The page `E_r` with its differentials; `E_{r+1}` is recomputed from the
    /// filtration and compared with `ker d_r / im d_r`.
    pub fn page(&self, r: usize) -> Result<Page> {
        let (cols, rows) = (self.columns(), self.rows());
        let cells: Vec<(usize, usize)> = (0..cols).flat_map(|p| (0..rows).map(move |q| (p, q))).collect();
        let quotients: BTreeMap<(usize, usize), Arc<QuotientBasis>> =
            cells.par_iter().map(|&(p, q)| Ok(((p, q), self.e(r as i64, p, q)?))).collect::<Result<_>>()?;
        let mut differentials = BTreeMap::new();
        for &(p, q) in &cells {
            let src = &quotients[&(p, q)];
            let target = (p + r, (q + 1).checked_sub(r));
            let n = p + q;
            let mut columns = Vec::with_capacity(src.len());
            let tgt = match target {
                (tp, Some(tq)) if tp < cols && tq < rows => Some(&quotients[&(tp, tq)]),
                _ => None,
            };
            let Some(tgt) = tgt else { continue };
            for x in &src.reps {
                let dx = self.total_d[n].mul_vec(x)?;
                let c = tgt
                    .coordinates(&dx)?
                    .ok_or_else(|| SpectralError::Shape(format!("d_{r} of a class at ({p},{q}) leaves Z_{r}")))?;
                columns.push(c);
            }
            differentials.insert((p, q), Matrix::from_columns(self.field, tgt.len(), &columns)?);
        }
        let dims: Vec<Vec<usize>> = (0..cols).map(|p| (0..rows).map(|q| quotients[&(p, q)].len()).collect()).collect();
        let page = Page { r, dims, differentials };
        let next = (0..cols)
            .map(|p| (0..rows).map(|q| Ok(self.e(r as i64 + 1, p, q)?.len())).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let from_ranks = page.next_dims()?;
        for p in 0..cols {
            for q in 0..rows {
                if from_ranks[p][q] != next[p][q] {
                    return Err(SpectralError::PageMismatch {
                        r,
                        p,
                        q,
                        from_ranks: from_ranks[p][q],
                        from_formula: next[p][q],
                    });
                }
            }
        }
        Ok(page)
    }

    /// A page number past which all pages agree.
    pub fn stable_page(&self) -> usize {
        self.columns().max(self.rows()) + 1
    }
}

/// `E_r^{p,q}` dimensions (indexed `[p][q]`) and `d_r` matrices keyed by source.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Page {
    pub r: usize,
    pub dims: Vec<Vec<usize>>,
    pub differentials: BTreeMap<(usize, usize), Matrix>,
}

impl Page {
    pub fn dim(&self, p: usize, q: usize) -> usize {
        self.dims.get(p).and_then(|c| c.get(q)).copied().unwrap_or(0)
    }

    /// `dim ker d_r − dim im d_r` at every cell.
    pub fn next_dims(&self) -> Result<Vec<Vec<usize>>> {
        let mut out = self.dims.clone();
        for (&(p, q), m) in &self.differentials {
            let rank = m.rank()?;
            out[p][q] -= rank;
            out[p + self.r][q + 1 - self.r] -= rank;
        }
        Ok(out)
    }

    pub fn differentials_vanish(&self) -> bool {
        self.differentials.values().all(Matrix::is_zero)
    }

    pub fn euler_characteristic(&self) -> i64 {
        let mut chi = 0i64;
        for (p, col) in self.dims.iter().enumerate() {
            for (q, &d) in col.iter().enumerate() {
                chi += if (p + q) % 2 == 0 { d as i64 } else { -(d as i64) };
            }
        }
        chi
    }

    /// `Σ_{p+q=n} dim E^{p,q}`.
    pub fn diagonal_sums(&self) -> Vec<usize> {
        let cols = self.dims.len();
        let rows = self.dims.first().map_or(0, Vec::len);
        (0..(cols + rows).saturating_sub(1))
            .map(|n| (0..cols).filter(|&p| n >= p && n - p < rows).map(|p| self.dims[p][n - p]).sum())
            .collect()
    }
}

/// The double complex `∏_{x_0<…<x_p} C^q(U_{x_0})` of a presheaf of complexes.
pub fn build_hyper_double_complex<C: CochainPresheaf + ?Sized>(c: &C) -> Result<DoubleComplex> {
    let space = c.space();
    let field = c.field();
    let n = c.truncation();
    let points = space.num_points();
    let complexes = (0..points).map(|x| c.complex_at(space.min_open(x))).collect::<std::result::Result<Vec<_>, _>>()?;
    let mut dims: Vec<Vec<usize>> = Vec::new();
    let mut dh = BTreeMap::new();
    let mut dv = BTreeMap::new();
    for q in 0..=n {
        let stalk = |x: usize| complexes[x].layout(q).dim();
        let restrict =
            |x: usize, y: usize| complexes[x].projection_matrix(&complexes[y], q).expect("minimal opens are nested");
        let (chains, complex) = derived_limit_complex(space, space.whole(), field, stalk, restrict)?;
        if dims.is_empty() {
            dims = vec![vec![0; n + 1]; chains.len()];
        }
        for (p, level) in chains.iter().enumerate() {
            dims[p][q] = complex.dims[p];
            if let Some(m) = complex.differentials.get(p) {
                dh.insert((p, q), m.clone());
            }
            if q < n {
                let sign = if p % 2 == 0 { field.one() } else { -&field.one() };
                let mut triplets = Vec::new();
                let (mut r0, mut c0) = (0, 0);
                for chain in level {
                    let d = complexes[chain[0]].differential(q).map_err(ColimitError::from)?;
                    for i in 0..d.rows() {
                        for j in 0..d.cols() {
                            let x = d.get(i, j);
                            if !x.is_zero() {
                                triplets.push((r0 + i, c0 + j, x * &sign));
                            }
                        }
                    }
                    r0 += d.rows();
                    c0 += d.cols();
                }
                dv.insert((p, q), Matrix::from_triplets(field, r0, c0, triplets)?);
            }
        }
    }
    DoubleComplex::new(field, dims, dh, dv)
}

/// Outcome of the local-to-global comparison. Tables are indexed `[p][q]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalToGlobalReport {
    pub truncation: usize,
    /// Largest total degree `n` for which claims are made.
    pub max_n: usize,
    pub columns: usize,
    pub rows: usize,
    pub e0: Vec<Vec<usize>>,
    pub e2: Vec<Vec<usize>>,
    pub e_infinity: Vec<Vec<usize>>,
    pub infinity_page: usize,
    /// `H^p(X, H^q C)`, for `q ≤ N − 2`.
    pub sheaf_e2: Vec<Vec<usize>>,
    /// `Σ_{p+q=n} dim E_∞^{p,q}` for `n ≤ max_n`.
    pub abutment: Vec<usize>,
    pub total_cohomology: Vec<usize>,
    /// `H^n(C(X))` directly.
    pub global_cohomology: Vec<usize>,
    pub euler_characteristics: Vec<i64>,
    pub monotone: bool,
    /// `(r, p, q)` of every nonzero `d_r` with `r ≥ 2`.
    pub nonzero_higher_differentials: Vec<(usize, usize, usize)>,
    pub mismatches: Vec<String>,
}

impl LocalToGlobalReport {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty()
    }

    pub fn degenerates_at_e2(&self) -> bool {
        self.nonzero_higher_differentials.is_empty()
    }
}

fn get(t: &[Vec<usize>], p: usize, q: usize) -> usize {
    t.get(p).and_then(|c| c.get(q)).copied().unwrap_or(0)
}

/// Builds the hypercohomology spectral sequence and compares it with sheaf
/// cohomology of the cohomology sheaves and with `H^*(C(X))`, for total
/// degrees up to `max_n` (at most `N − 2`).
pub fn verify_local_to_global<C: CochainPresheaf + ?Sized>(c: &C, max_n: Option<usize>) -> Result<LocalToGlobalReport> {
    let n_trunc = c.truncation();
    let safe = n_trunc.saturating_sub(2);
    let max_n = max_n.unwrap_or(safe).min(safe);
    let dc = build_hyper_double_complex(c)?;
    let infinity_page = dc.stable_page();
    let pages: Vec<Page> = (0..=infinity_page).map(|r| dc.page(r)).collect::<Result<_>>()?;
    let e0 = pages[0].dims.clone();
    let e2 = pages[2].dims.clone();
    let e_infinity = pages[infinity_page].dims.clone();
    let mut mismatches = Vec::new();

    if e0 != dc.dims {
        mismatches.push("E_0 differs from the double complex".into());
    }
    let euler_characteristics: Vec<i64> = pages.iter().map(Page::euler_characteristic).collect();
    if euler_characteristics.windows(2).any(|w| w[0] != w[1]) {
        mismatches.push(format!("Euler characteristic changes across pages: {euler_characteristics:?}"));
    }
    let monotone =
        pages.windows(2).all(|w| w[0].dims.iter().flatten().zip(w[1].dims.iter().flatten()).all(|(a, b)| b <= a));
    if !monotone {
        mismatches.push("some E_r^{p,q} grows with r".into());
    }
    let nonzero_higher_differentials: Vec<(usize, usize, usize)> = pages[2..]
        .iter()
        .flat_map(|pg| pg.differentials.iter().filter(|(_, m)| !m.is_zero()).map(move |(&(p, q), _)| (pg.r, p, q)))
        .collect();

    let space = c.space();
    let mut sheaf_e2 = vec![vec![0; safe + 1]; dc.columns()];
    for q in 0..=safe {
        let h = cohomology_sheaf(c, q)?;
        let dims = sheaf_cohomology(&h, space.whole())?;
        for (p, &d) in dims.iter().enumerate() {
            if p < sheaf_e2.len() {
                sheaf_e2[p][q] = d;
            } else if d != 0 {
                mismatches.push(format!("H^{p}(X, H^{q}) = {d} lies outside the double complex"));
            }
        }
    }
    for p in 0..dc.columns() {
        for q in 0..=safe {
            if p + q <= max_n && get(&e2, p, q) != sheaf_e2[p][q] {
                mismatches.push(format!(
                    "E_2^{{{p},{q}}} = {} but H^{p}(X, H^{q}) = {}",
                    get(&e2, p, q),
                    sheaf_e2[p][q]
                ));
            }
        }
    }

    let abutment: Vec<usize> = pages[infinity_page].diagonal_sums().into_iter().take(max_n + 1).collect();
    let total_cohomology: Vec<usize> = dc.total_cohomology()?.into_iter().take(max_n + 1).collect();
    let global = c.complex_at(space.whole())?;
    let global_cohomology: Vec<usize> = (0..=max_n)
        .map(|n| global.cohomology_dim(n))
        .collect::<std::result::Result<_, _>>()
        .map_err(ColimitError::from)?;
    for n in 0..=max_n {
        let (a, t, g) = (
            abutment.get(n).copied().unwrap_or(0),
            total_cohomology.get(n).copied().unwrap_or(0),
            global_cohomology[n],
        );
        if a != t {
            mismatches.push(format!("n = {n}: Σ E_∞ = {a} but H^{n}(Tot) = {t}"));
        }
        if t != g {
            mismatches.push(format!("n = {n}: H^{n}(Tot) = {t} but H^{n}(C(X)) = {g}"));
        }
    }

    Ok(LocalToGlobalReport {
        truncation: n_trunc,
        max_n,
        columns: dc.columns(),
        rows: dc.rows(),
        e0,
        e2,
        e_infinity,
        infinity_page,
        sheaf_e2,
        abutment,
        total_cohomology,
        global_cohomology,
        euler_characteristics,
        monotone,
        nonzero_higher_differentials,
        mismatches,
    })
}
