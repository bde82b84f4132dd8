//! The presheaf `U ↦ C_B(U) = colim_{𝔟 ∈ B(U)} C(𝔟)` over a good family.
//!
//! `B(U)` is finite and closed under intersection, so it has a smallest member
//! `𝔟_⊥ = ⋂ B(U)` (the terminal basis) and the colimit is `C(𝔟_⊥)`. A section is
//! stored as any representative `(𝔟, φ)`; two sections are equal when their
//! projections to `C(𝔟_⊥)` agree.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use thiserror::Error;

use crate::hochschild::{build_complex, Cochain, HochschildComplex, HochschildError};
use crate::linalg::{
    self, is_zero_vector, kernel_basis, zero_vector, Field, LinalgError, Matrix, QuotientBasis, Vector,
};
use crate::ringed::StructurePresheaf;
use crate::space::{
    generate_good_family, glue_bases, plug, restrict_basis, terminal_basis, Basis, BasisFamily, FiniteSpace, Open,
    SpaceError,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ColimitError {
    #[error("basis {0:?} is not in the family")]
    NotInFamily(Basis),
    #[error("{inner:?} is not contained in {outer:?}")]
    NotContained { inner: Open, outer: Open },
    #[error("sections {first} and {second} disagree on their overlap")]
    NoGlue { first: usize, second: usize },
    #[error("cover and section lists differ in length or are empty")]
    BadCover,
    #[error("sections have different degrees")]
    DegreeMismatch,
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Hochschild(#[from] HochschildError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

pub type Result<T> = std::result::Result<T, ColimitError>;

/// A presheaf of finite-dimensional vector spaces, given by section
/// dimensions and restriction matrices in fixed coordinates.
pub trait LinearPresheaf: Sync {
    fn space(&self) -> &FiniteSpace;
    fn field(&self) -> Field;
    fn dim(&self, u: Open) -> Result<usize>;
    /// The restriction `P(U) → P(V)` for `V ⊆ U`.
    fn restriction(&self, u: Open, v: Open) -> Result<Matrix>;
}

/// A presheaf of truncated Hochschild complexes: a complex over every open,
/// with restrictions given by projection to a sub-basis.
pub trait CochainPresheaf: Sync {
    fn space(&self) -> &FiniteSpace;
    fn field(&self) -> Field;
    fn truncation(&self) -> usize;
    fn complex_at(&self, u: Open) -> Result<Arc<HochschildComplex>>;
}

/// Degree `p` of a presheaf of complexes, as a presheaf of vector spaces.
pub struct DegreeSlice<'a, P: ?Sized> {
    pub inner: &'a P,
    pub degree: usize,
}

impl<P: CochainPresheaf + ?Sized> LinearPresheaf for DegreeSlice<'_, P> {
    fn space(&self) -> &FiniteSpace {
        self.inner.space()
    }

    fn field(&self) -> Field {
        self.inner.field()
    }

    fn dim(&self, u: Open) -> Result<usize> {
        Ok(self.inner.complex_at(u)?.layout(self.degree).dim())
    }

    fn restriction(&self, u: Open, v: Open) -> Result<Matrix> {
        if !v.is_subset(u) {
            return Err(ColimitError::NotContained { inner: v, outer: u });
        }
        let (cu, cv) = (self.inner.complex_at(u)?, self.inner.complex_at(v)?);
        Ok(cu.projection_matrix(&cv, self.degree)?)
    }
}

type ComplexCache = Mutex<BTreeMap<Basis, Arc<HochschildComplex>>>;

fn cached(
    cache: &ComplexCache,
    presheaf: &Arc<StructurePresheaf>,
    truncation: usize,
    b: &Basis,
) -> Result<Arc<HochschildComplex>> {
    if let Some(c) = cache.lock().expect("complex cache poisoned").get(b) {
        return Ok(c.clone());
    }
    let c = Arc::new(build_complex(b, presheaf, truncation)?);
    cache.lock().expect("complex cache poisoned").insert(b.clone(), c.clone());
    Ok(c)
}

/// `U ↦ C(𝔟|_U)` for a single basis `𝔟` of `X`. Not a sheaf in general.
pub struct BasisPresheaf {
    presheaf: Arc<StructurePresheaf>,
    basis: Basis,
    truncation: usize,
    cache: ComplexCache,
}

impl BasisPresheaf {
    pub fn new(presheaf: Arc<StructurePresheaf>, basis: Basis, truncation: usize) -> BasisPresheaf {
        BasisPresheaf { presheaf, basis, truncation, cache: Mutex::default() }
    }
}

impl CochainPresheaf for BasisPresheaf {
    fn space(&self) -> &FiniteSpace {
        self.presheaf.space()
    }

    fn field(&self) -> Field {
        self.presheaf.field()
    }

    fn truncation(&self) -> usize {
        self.truncation
    }

    fn complex_at(&self, u: Open) -> Result<Arc<HochschildComplex>> {
        let b = restrict_basis(self.space(), &self.basis, u)?;
        cached(&self.cache, &self.presheaf, self.truncation, &b)
    }
}

/// `U ↦ C_B(U)` for a good family `B`.
pub struct ColimitPresheaf {
    presheaf: Arc<StructurePresheaf>,
    family: BasisFamily,
    truncation: usize,
    terminals: BTreeMap<Open, Basis>,
    cache: ComplexCache,
}

/// A section of `C_B` over `U`, stored as a representative `(𝔟, φ)` with `𝔟 ∈ B(U)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColimitSection {
    pub open: Open,
    pub cochain: Cochain,
}

impl ColimitSection {
    pub fn basis(&self) -> &Basis {
        &self.cochain.basis
    }

    pub fn degree(&self) -> usize {
        self.cochain.degree
    }
}

impl ColimitPresheaf {
    /// Needs `B(U)` nonempty and intersection-closed at every open.
    pub fn new(presheaf: Arc<StructurePresheaf>, family: BasisFamily, truncation: usize) -> Result<Self> {
        let terminals = presheaf
            .space()
            .opens()
            .into_iter()
            .map(|u| Ok((u, terminal_basis(&family, u)?)))
            .collect::<Result<_>>()?;
        Ok(ColimitPresheaf { presheaf, family, truncation, terminals, cache: Mutex::default() })
    }

    /// `C_B` for the smallest good family containing `basis`.
    pub fn generated(presheaf: Arc<StructurePresheaf>, basis: &Basis, truncation: usize) -> Result<Self> {
        let family = generate_good_family(presheaf.space(), basis)?;
        ColimitPresheaf::new(presheaf, family, truncation)
    }

    pub fn family(&self) -> &BasisFamily {
        &self.family
    }

    pub fn presheaf(&self) -> &Arc<StructurePresheaf> {
        &self.presheaf
    }

    pub fn terminal(&self, u: Open) -> &Basis {
        &self.terminals[&u]
    }

    pub fn complex(&self, b: &Basis) -> Result<Arc<HochschildComplex>> {
        if !self.family.contains(b) {
            return Err(ColimitError::NotInFamily(b.clone()));
        }
        cached(&self.cache, &self.presheaf, self.truncation, b)
    }

    pub fn section(&self, cochain: Cochain) -> Result<ColimitSection> {
        self.complex(&cochain.basis)?;
        Ok(ColimitSection { open: cochain.basis.domain(), cochain })
    }

    pub fn zero_section(&self, u: Open, p: usize) -> Result<ColimitSection> {
        let b = self.terminal(u).clone();
        self.section(self.complex(&b)?.zero(p)?)
    }

    /// The transition map `C(𝔟) → C(𝔟')` for `𝔟' ⊆ 𝔟` in `B(U)`.
    pub fn transition(&self, s: &ColimitSection, target: &Basis) -> Result<ColimitSection> {
        let src = self.complex(s.basis())?;
        let dst = self.complex(target)?;
        self.section(src.project(&dst, &s.cochain)?)
    }

    /// The image of `s` in `C(𝔟_⊥)`.
    pub fn canonical_rep(&self, s: &ColimitSection) -> Result<Cochain> {
        let t = self.terminal(s.open).clone();
        Ok(self.transition(s, &t)?.cochain)
    }

    pub fn sections_equal(&self, s: &ColimitSection, t: &ColimitSection) -> Result<bool> {
        Ok(s.open == t.open && s.degree() == t.degree() && self.canonical_rep(s)? == self.canonical_rep(t)?)
    }

    /// `(𝔟|_V, φ|_V)`.
    pub fn restrict_section(&self, s: &ColimitSection, v: Open) -> Result<ColimitSection> {
        if !v.is_subset(s.open) {
            return Err(ColimitError::NotContained { inner: v, outer: s.open });
        }
        let b = restrict_basis(self.space(), s.basis(), v)?;
        self.transition(s, &b)
    }

    pub fn apply_d(&self, s: &ColimitSection) -> Result<ColimitSection> {
        let c = self.complex(s.basis())?;
        self.section(c.apply_d(&s.cochain)?)
    }

    /// Copies the blocks of `from` for every chain of `into` accepted by `keep`.
    fn copy_chains(
        &self,
        into: &HochschildComplex,
        values: &mut Vector,
        from: &ColimitSection,
        keep: impl Fn(&[Open]) -> bool,
    ) -> Result<()> {
        let src = self.complex(from.basis())?;
        let p = from.degree();
        let (ls, ld) = (src.layout(p), into.layout(p));
        for (ci, chain) in ld.chains().iter().enumerate() {
            if !keep(chain) {
                continue;
            }
            let si = ls
                .chain_index(chain)
                .ok_or(ColimitError::NotContained { inner: chain[chain.len() - 1], outer: from.open })?;
            let (od, rows, cols) = ld.block(ci);
            let (os, _, _) = ls.block(si);
            values[od..od + rows * cols].clone_from_slice(&from.cochain.values[os..os + rows * cols]);
        }
        Ok(())
    }

    fn glue_pair(&self, s1: &ColimitSection, s2: &ColimitSection) -> Result<ColimitSection> {
        let space = self.space();
        let overlap = s1.open.intersection(s2.open);
        // a basis of the overlap on which both restrictions coincide
        let common = self.terminal(overlap).clone();
        let b1 = plug(space, s1.basis(), &common)?;
        let b2 = plug(space, s2.basis(), &common)?;
        let glued = glue_bases(space, &b1, &b2)?;
        let target = self.complex(&glued)?;
        let mut values = zero_vector(self.field(), target.layout(s1.degree()).dim());
        let top = |chain: &[Open]| chain[chain.len() - 1];
        self.copy_chains(&target, &mut values, s1, |c| b1.contains(top(c)))?;
        self.copy_chains(&target, &mut values, s2, |c| !b1.contains(top(c)))?;
        self.section(target.cochain(s1.degree(), values)?)
    }

    /// Glues sections `s_i` over `U_i` into a section over `⋃ U_i`.
    ///
    /// Two at a time: with `𝔟'` the terminal basis of `U_1 ∩ U_2`, the pieces
    /// are moved to `plug(𝔟_i, 𝔟')`, the bases are glued, and a chain takes its
    /// value from the piece whose plugged basis contains its top member.
    pub fn glue_sections(&self, sections: &[ColimitSection]) -> Result<ColimitSection> {
        let first = sections.first().ok_or(ColimitError::BadCover)?;
        if sections.iter().any(|s| s.degree() != first.degree()) {
            return Err(ColimitError::DegreeMismatch);
        }
        for i in 0..sections.len() {
            for j in i + 1..sections.len() {
                let overlap = sections[i].open.intersection(sections[j].open);
                let a = self.restrict_section(&sections[i], overlap)?;
                let b = self.restrict_section(&sections[j], overlap)?;
                if !self.sections_equal(&a, &b)? {
                    return Err(ColimitError::NoGlue { first: i, second: j });
                }
            }
        }
        let mut acc = first.clone();
        for s in &sections[1..] {
            acc = self.glue_pair(&acc, s)?;
        }
        for (i, s) in sections.iter().enumerate() {
            let back = self.restrict_section(&acc, s.open)?;
            if !self.sections_equal(&back, s)? {
                return Err(ColimitError::NoGlue { first: i, second: i });
            }
        }
        Ok(acc)
    }

    /// Extends a section over `U` to `X`: on `plug(𝔟_⊥(X), 𝔟)` take `φ` on
    /// chains whose top member lies in `U` and zero elsewhere.
    pub fn flabby_lift(&self, s: &ColimitSection) -> Result<ColimitSection> {
        let space = self.space();
        let lifted = plug(space, self.terminal(space.whole()), s.basis())?;
        let target = self.complex(&lifted)?;
        let mut values = zero_vector(self.field(), target.layout(s.degree()).dim());
        let u = s.open;
        self.copy_chains(&target, &mut values, s, |c| c[c.len() - 1].is_subset(u))?;
        self.section(target.cochain(s.degree(), values)?)
    }
}

impl CochainPresheaf for ColimitPresheaf {
    fn space(&self) -> &FiniteSpace {
        self.presheaf.space()
    }

    fn field(&self) -> Field {
        self.presheaf.field()
    }

    fn truncation(&self) -> usize {
        self.truncation
    }

    fn complex_at(&self, u: Open) -> Result<Arc<HochschildComplex>> {
        let t = self.terminal(u).clone();
        self.complex(&t)
    }
}

/// Outcome of the sheaf condition for one cover.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SheafReport {
    pub open: Open,
    pub cover: Vec<Open>,
    pub degree: Option<usize>,
    pub sections_dim: usize,
    pub restriction_rank: usize,
    pub equalizer_dim: usize,
    pub separated: bool,
    /// A nonzero section over `U` restricting to zero on every member of the cover.
    pub separation_witness: Option<Vector>,
    pub gluing: bool,
    /// A compatible family (one vector per cover member) that glues to nothing.
    pub gluing_witness: Option<Vec<Vector>>,
}

impl SheafReport {
    pub fn passed(&self) -> bool {
        self.separated && self.gluing
    }
}

fn block_matrix(field: Field, blocks: &[(usize, usize, Matrix)], rows: usize, cols: usize) -> Result<Matrix> {
    let mut triplets = Vec::new();
    for (r0, c0, m) in blocks {
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                let x = m.get(i, j);
                if !x.is_zero() {
                    triplets.push((r0 + i, c0 + j, x.clone()));
                }
            }
        }
    }
    Ok(Matrix::from_triplets(field, rows, cols, triplets)?)
}

/// Checks separatedness and gluing of `P` for a finite cover of `⋃ cover` by ranks.
pub fn sheaf_condition<P: LinearPresheaf + ?Sized>(p: &P, cover: &[Open]) -> Result<SheafReport> {
    let field = p.field();
    let u = cover.iter().fold(Open::EMPTY, |acc, &c| acc.union(c));
    for &c in cover {
        p.space().check_open(c)?;
    }
    let dim_u = p.dim(u)?;
    let dims: Vec<usize> = cover.iter().map(|&c| p.dim(c)).collect::<Result<_>>()?;
    let offsets: Vec<usize> = dims.iter().scan(0, |acc, &d| Some(std::mem::replace(acc, *acc + d))).collect();
    let total: usize = dims.iter().sum();

    let mut blocks = Vec::new();
    for (i, &c) in cover.iter().enumerate() {
        blocks.push((offsets[i], 0, p.restriction(u, c)?));
    }
    let product_map = block_matrix(field, &blocks, total, dim_u)?;

    let mut eq_blocks = Vec::new();
    let mut row = 0;
    for i in 0..cover.len() {
        for j in i + 1..cover.len() {
            let overlap = cover[i].intersection(cover[j]);
            let ri = p.restriction(cover[i], overlap)?;
            let rj = p.restriction(cover[j], overlap)?.scale(&-&field.one());
            let n = ri.rows();
            eq_blocks.push((row, offsets[i], ri));
            eq_blocks.push((row, offsets[j], rj));
            row += n;
        }
    }
    let difference_map = block_matrix(field, &eq_blocks, row, total)?;

    let rank = product_map.rank()?;
    let kernel = kernel_basis(&product_map)?;
    let equalizer = kernel_basis(&difference_map)?;
    let separated = kernel.is_empty();
    let image: Vec<Vector> =
        (0..product_map.cols()).map(|j| product_map.column(j)).filter(|c| !is_zero_vector(c)).collect();
    let gluing = rank == equalizer.len();
    let gluing_witness = if gluing {
        None
    } else {
        let q = QuotientBasis::new(field, total, &equalizer, &image)?;
        q.reps.first().map(|v| offsets.iter().zip(&dims).map(|(&o, &d)| v[o..o + d].to_vec()).collect::<Vec<Vector>>())
    };
    Ok(SheafReport {
        open: u,
        cover: cover.to_vec(),
        degree: None,
        sections_dim: dim_u,
        restriction_rank: rank,
        equalizer_dim: equalizer.len(),
        separated,
        separation_witness: kernel.into_iter().next(),
        gluing,
        gluing_witness,
    })
}

/// The sheaf condition for degree `p` of a presheaf of complexes.
pub fn sheaf_check<P: CochainPresheaf + ?Sized>(presheaf: &P, cover: &[Open], p: usize) -> Result<SheafReport> {
    let slice = DegreeSlice { inner: presheaf, degree: p };
    let mut report = sheaf_condition(&slice, cover)?;
    report.degree = Some(p);
    Ok(report)
}

/// Whether `P(X) → P(U)` is surjective.
pub fn restriction_is_surjective<P: LinearPresheaf + ?Sized>(p: &P, u: Open) -> Result<bool> {
    let whole = p.space().whole();
    Ok(p.restriction(whole, u)?.rank()? == p.dim(u)?)
}

/// Nonzero entries of a cochain as `(chain, output index, argument indices f_1.., value)`.
pub fn support(c: &HochschildComplex, phi: &Cochain) -> Vec<(Vec<Open>, usize, Vec<usize>, linalg::Scalar)> {
    let l = c.layout(phi.degree);
    let mut out = Vec::new();
    for (ci, chain) in l.chains().iter().enumerate() {
        let (off, rows, cols) = l.block(ci);
        for k in 0..rows {
            for t in 0..cols {
                let x = &phi.values[off + k * cols + t];
                if !x.is_zero() {
                    out.push((chain.clone(), k, l.decode_tensor(ci, t), x.clone()));
                }
            }
        }
    }
    out
}
