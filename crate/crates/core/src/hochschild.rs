//! The k-linear category of a basis and its Hochschild cochain complex.
//!
//! # The basis category
//!
//! Objects are the members of a basis `𝔟`; `hom(V, U) = O(V)` when `V ⊆ U`
//! and zero otherwise. For `f ∈ hom(V, U) = O(V)` and `g ∈ hom(W, V) = O(W)`
//!
//! ```text
//! f ∘ g = ρ_{V→W}(f) · g ∈ O(W) = hom(W, U)
//! ```
//!
//! and the identity of `U` is the unit of `O(U)`. For two objects `W ⊆ V`,
//! composing `f ∈ hom(V, V) = O(V)` with `g ∈ hom(W, V) = O(W)` gives
//! `ρ(f)·g`, so `O(W)` becomes a left `O(V)`-module through `ρ`, and
//! `g ∘ a = g · a` for `a ∈ hom(W, W)` is the right `O(W)`-action.
//!
//! # Cochains
//!
//! A `p`-cochain assigns to every chain `U_0 ⊆ U_1 ⊆ … ⊆ U_p` of members
//! (repetitions allowed) a multilinear map
//! `O(U_{p−1}) ⊗ … ⊗ O(U_0) → O(U_0)`; its `i`-th argument
//! `f_i ∈ hom(U_{i−1}, U_i) = O(U_{i−1})`. A 0-cochain is an element of
//! `O(U_0)` per member.
//!
//! Coordinates: chains are listed in lexicographic order of their member
//! indices (members sorted as in [`Basis::members`]). The block of a chain is
//! a `dim O(U_0) × ∏ dim O(U_{i−1})` matrix stored row-major; the column
//! (tensor) index is lexicographic in `(f_p, …, f_1)`, i.e. `f_1` varies
//! fastest.
//!
//! # Signs
//!
//! Writing the arguments left to right as `a_1 = f_{p+1}, …, a_{p+1} = f_1`,
//!
//! ```text
//! (dφ)(a_1, …, a_{p+1}) = a_1 ∘ φ(a_2, …, a_{p+1})
//!                       + Σ_{j=1}^{p} (−1)^j φ(…, a_j ∘ a_{j+1}, …)
//!                       + (−1)^{p+1} φ(a_1, …, a_p) ∘ a_{p+1}
//! ```
//!
//! The cup product is `(f ∪ g)(a_1, …, a_{p+q}) = f(a_1, …, a_p) ∘ g(a_{p+1}, …, a_{p+q})`
//! with no sign, so `d(f ∪ g) = df ∪ g + (−1)^p f ∪ dg`. The bracket is
//! Gerstenhaber's: `f ∘_i g` substitutes `g(a_i, …, a_{i+q−1})` into the
//! `i`-th slot of `f` with sign `(−1)^{(i−1)(q−1)}`, `f ∘̄ g = Σ_i f ∘_i g` and
//! `[f, g] = f ∘̄ g − (−1)^{(p−1)(q−1)} g ∘̄ f`. With `m ∈ C²` the composition
//! cochain `m(a_1, a_2) = a_1 ∘ a_2` one has `[m, m] = 0` and
//! `dφ = (−1)^{p+1} [m, φ]` for `φ ∈ C^p`.
//!
//! Worked degree-1 case: for `φ ∈ C¹` and a chain `U_0 ⊆ U_1 ⊆ U_2`,
//! `(dφ)(f_2, f_1) = f_2 ∘ φ(f_1) − φ(f_2 ∘ f_1) + φ(f_2) ∘ f_1`, the usual
//! derivation defect.

use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::linalg::{
    self, add_scaled, kernel_basis, span_dim, subquotient_dim, zero_vector, Field, LinalgError, Matrix, QuotientBasis,
    Scalar, Vector,
};
use crate::ringed::{RingedError, StructurePresheaf};
use crate::space::{Basis, Open};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HochschildError {
    #[error("basis member {0:?} carries no algebra")]
    MissingAlgebra(Open),
    #[error("d^{next} ∘ d^{degree} ≠ 0")]
    SquareNonzero { degree: usize, next: usize },
    #[error("degree {degree} is outside the truncation range (max {max})")]
    OutOfRange { degree: usize, max: usize },
    #[error("cochains belong to different complexes")]
    ComplexMismatch,
    #[error("{0:?} is not a sub-basis of the source basis")]
    NotASubBasis(Basis),
    #[error(transparent)]
    Ringed(#[from] RingedError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

pub type Result<T> = std::result::Result<T, HochschildError>;

/// A chain `U_0 ⊆ U_1 ⊆ … ⊆ U_p` of basis members.
pub type Chain = Vec<Open>;

/// The k-linear category of a basis.
#[derive(Clone, Debug)]
pub struct BasisCategory {
    presheaf: Arc<StructurePresheaf>,
    basis: Basis,
    objects: Vec<Open>,
    dims: HashMap<Open, usize>,
    /// `compositions[(V, W)][a][b] = e_a ∘ e_b` for `e_a ∈ O(V)`, `e_b ∈ O(W)`, `W ⊆ V`.
    compositions: HashMap<(Open, Open), Vec<Vec<Vector>>>,
}

impl BasisCategory {
    pub fn new(basis: &Basis, presheaf: Arc<StructurePresheaf>) -> Result<BasisCategory> {
        let objects: Vec<Open> = basis.members().iter().copied().collect();
        let mut dims = HashMap::new();
        for &u in &objects {
            if !presheaf.has(u) {
                return Err(HochschildError::MissingAlgebra(u));
            }
            dims.insert(u, presheaf.algebra(u)?.dim());
        }
        let mut compositions = HashMap::new();
        for &v in &objects {
            for &w in objects.iter().filter(|w| w.is_subset(v)) {
                let rho = presheaf.restriction(v, w)?;
                let aw = presheaf.algebra(w)?;
                let table = (0..dims[&v])
                    .map(|a| {
                        let ra = rho.matrix.column(a);
                        (0..dims[&w]).map(|b| aw.mul(&ra, &linalg::unit_vector(aw.field(), dims[&w], b))).collect()
                    })
                    .collect();
                compositions.insert((v, w), table);
            }
        }
        Ok(BasisCategory { presheaf, basis: basis.clone(), objects, dims, compositions })
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn presheaf(&self) -> &Arc<StructurePresheaf> {
        &self.presheaf
    }

    pub fn field(&self) -> Field {
        self.presheaf.field()
    }

    pub fn objects(&self) -> &[Open] {
        &self.objects
    }

    pub fn dim(&self, u: Open) -> usize {
        self.dims[&u]
    }

    /// `e_a ∘ e_b` for `e_a ∈ hom(V, ·) = O(V)` and `e_b ∈ hom(W, V) = O(W)`.
    pub fn compose_basis(&self, v: Open, w: Open, a: usize, b: usize) -> &Vector {
        &self.compositions[&(v, w)][a][b]
    }

    /// `f ∘ g` for `f ∈ O(V)`, `g ∈ O(W)`, `W ⊆ V`.
    pub fn compose(&self, v: Open, w: Open, f: &[Scalar], g: &[Scalar]) -> Vector {
        let table = &self.compositions[&(v, w)];
        let mut out = zero_vector(self.field(), self.dims[&w]);
        for (a, x) in f.iter().enumerate().filter(|(_, x)| !x.is_zero()) {
            for (b, y) in g.iter().enumerate().filter(|(_, y)| !y.is_zero()) {
                add_scaled(&mut out, &(x * y), &table[a][b]);
            }
        }
        out
    }

    /// Associativity and unit laws on all composable triples of basis vectors.
    /// Returns the first failing chain `(U_0, U_1, U_2, U_3)` if any.
    pub fn check_laws(&self) -> Option<Vec<Open>> {
        let f = self.field();
        for &u0 in &self.objects {
            for &u1 in self.objects.iter().filter(|u| u0.is_subset(**u)) {
                let unit1 = self.presheaf.algebra(u1).ok()?.unit().clone();
                let unit0 = self.presheaf.algebra(u0).ok()?.unit().clone();
                for b in 0..self.dims[&u0] {
                    let eb = linalg::unit_vector(f, self.dims[&u0], b);
                    // 1_{U_1} ∘ g = g = g ∘ 1_{U_0}
                    if self.compose(u1, u0, &unit1, &eb) != eb || self.compose(u0, u0, &eb, &unit0) != eb {
                        return Some(vec![u0, u1]);
                    }
                }
                for &u2 in self.objects.iter().filter(|u| u1.is_subset(**u)) {
                    for a in 0..self.dims[&u1] {
                        for b in 0..self.dims[&u0] {
                            let ea = linalg::unit_vector(f, self.dims[&u1], a);
                            let eb = linalg::unit_vector(f, self.dims[&u0], b);
                            for c in 0..self.dims[&u2] {
                                let ec = linalg::unit_vector(f, self.dims[&u2], c);
                                let left = self.compose(u1, u0, &self.compose(u2, u1, &ec, &ea), &eb);
                                let right = self.compose(u2, u0, &ec, &self.compose(u1, u0, &ea, &eb));
                                if left != right {
                                    return Some(vec![u0, u1, u2]);
                                }
                            }
                        }
                    }
                }
            }
        }
        None
    }
}

/// Coordinates of `C^p(𝔟)`.
#[derive(Clone, Debug)]
pub struct CochainLayout {
    degree: usize,
    chains: Vec<Chain>,
    offsets: Vec<usize>,
    /// `radices[c][i] = dim O(U_i)`, the dimension of argument `f_{i+1}`.
    radices: Vec<Vec<usize>>,
    out_dims: Vec<usize>,
    tensor_sizes: Vec<usize>,
    index: HashMap<Chain, usize>,
    total: usize,
}

impl CochainLayout {
    fn new(cat: &BasisCategory, degree: usize) -> CochainLayout {
        let chains = multichains(cat.objects(), degree + 1);
        let mut offsets = Vec::with_capacity(chains.len());
        let mut radices = Vec::with_capacity(chains.len());
        let mut out_dims = Vec::with_capacity(chains.len());
        let mut tensor_sizes = Vec::with_capacity(chains.len());
        let mut index = HashMap::with_capacity(chains.len());
        let mut total = 0;
        for (i, chain) in chains.iter().enumerate() {
            let r: Vec<usize> = chain[..degree].iter().map(|&u| cat.dim(u)).collect();
            let t: usize = r.iter().product();
            let out = cat.dim(chain[0]);
            offsets.push(total);
            total += out * t;
            radices.push(r);
            out_dims.push(out);
            tensor_sizes.push(t);
            index.insert(chain.clone(), i);
        }
        CochainLayout { degree, chains, offsets, radices, out_dims, tensor_sizes, index, total }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.total
    }

    pub fn chains(&self) -> &[Chain] {
        &self.chains
    }

    pub fn chain_index(&self, chain: &[Open]) -> Option<usize> {
        self.index.get(chain).copied()
    }

    /// `(offset, rows, cols)` of a chain's block.
    pub fn block(&self, chain: usize) -> (usize, usize, usize) {
        (self.offsets[chain], self.out_dims[chain], self.tensor_sizes[chain])
    }

    /// Tensor index of `(f_1, …, f_p) = (e_{args[0]}, …, e_{args[p−1]})`.
    pub fn tensor_index(&self, chain: usize, args: &[usize]) -> usize {
        let r = &self.radices[chain];
        args.iter().zip(r).rev().fold(0, |acc, (&a, &n)| acc * n + a)
    }

    pub fn decode_tensor(&self, chain: usize, mut t: usize) -> Vec<usize> {
        self.radices[chain]
            .iter()
            .map(|&n| {
                let a = t % n;
                t /= n;
                a
            })
            .collect()
    }

    pub fn coordinate(&self, chain: usize, out: usize, tensor: usize) -> usize {
        self.offsets[chain] + out * self.tensor_sizes[chain] + tensor
    }
}

/// Weakly increasing sequences of `len` objects under inclusion, in
/// lexicographic order of object indices.
pub fn multichains(objects: &[Open], len: usize) -> Vec<Chain> {
    let mut out = Vec::new();
    if len == 0 {
        return out;
    }
    fn rec(objects: &[Open], len: usize, current: &mut Chain, out: &mut Vec<Chain>) {
        if current.len() == len {
            out.push(current.clone());
            return;
        }
        for &o in objects {
            if current.last().is_none_or(|&last| last.is_subset(o)) {
                current.push(o);
                rec(objects, len, current, out);
                current.pop();
            }
        }
    }
    rec(objects, len, &mut Vec::with_capacity(len), &mut out);
    out
}

/// Strict chains `U_0 ⊊ … ⊊ U_p`, i.e. `p`-simplices of the nerve of the basis poset.
pub fn strict_chains(objects: &[Open], len: usize) -> Vec<Chain> {
    multichains(objects, len).into_iter().filter(|c| c.windows(2).all(|w| w[0] != w[1])).collect()
}

/// An element of `C^p(𝔟)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cochain {
    pub degree: usize,
    pub basis: Basis,
    pub values: Vector,
}

/// The Hochschild complex `C(𝔟)` truncated at degree `N`: cochain spaces
/// `C^0 … C^N` and differentials `d^0 … d^{N−1}`.
#[derive(Clone, Debug)]
pub struct HochschildComplex {
    category: BasisCategory,
    truncation: usize,
    layouts: Vec<CochainLayout>,
    differentials: Vec<Matrix>,
}

/// Builds `C(𝔟)` up to degree `truncation` and asserts `d² = 0`.
pub fn build_complex(basis: &Basis, presheaf: &Arc<StructurePresheaf>, truncation: usize) -> Result<HochschildComplex> {
    let category = BasisCategory::new(basis, presheaf.clone())?;
    let layouts: Vec<CochainLayout> =
        (0..=truncation).into_par_iter().map(|p| CochainLayout::new(&category, p)).collect();
    let differentials: Vec<Matrix> = (0..truncation)
        .into_par_iter()
        .map(|p| build_differential(&category, &layouts[p], &layouts[p + 1]))
        .collect::<Result<_>>()?;
    for p in 0..truncation.saturating_sub(1) {
        if !differentials[p + 1].mul(&differentials[p])?.is_zero() {
            return Err(HochschildError::SquareNonzero { degree: p, next: p + 1 });
        }
    }
    Ok(HochschildComplex { category, truncation, layouts, differentials })
}

fn sign(k: usize) -> i64 {
    if k.is_multiple_of(2) {
        1
    } else {
        -1
    }
}

fn build_differential(cat: &BasisCategory, src: &CochainLayout, dst: &CochainLayout) -> Result<Matrix> {
    let p = src.degree;
    let field = cat.field();
    let mut triplets: Vec<(usize, usize, Scalar)> = Vec::new();
    for (ci, chain) in dst.chains.iter().enumerate() {
        let (_, out_dim, tsize) = dst.block(ci);
        for t in 0..tsize {
            let args = dst.decode_tensor(ci, t);
            let row = |k: usize| dst.coordinate(ci, k, t);
            // f_{p+1} ∘ φ(f_p, …, f_1)
            {
                let sub = src.index[&chain[..=p]];
                let ts = src.tensor_index(sub, &args[..p]);
                for kp in 0..src.out_dims[sub] {
                    let v = cat.compose_basis(chain[p], chain[0], args[p], kp);
                    for (k, x) in v.iter().enumerate().filter(|(_, x)| !x.is_zero()) {
                        triplets.push((row(k), src.coordinate(sub, kp, ts), x.clone()));
                    }
                }
            }
            // (−1)^{p+1−i} φ(…, f_{i+1} ∘ f_i, …)
            for i in 1..=p {
                let s = Scalar::from_i64(field, sign(p + 1 - i));
                let mut sub_chain = chain.clone();
                sub_chain.remove(i);
                let sub = src.index[&sub_chain];
                let composite = cat.compose_basis(chain[i], chain[i - 1], args[i], args[i - 1]);
                for (m, x) in composite.iter().enumerate().filter(|(_, x)| !x.is_zero()) {
                    let mut sub_args = Vec::with_capacity(p);
                    sub_args.extend_from_slice(&args[..i - 1]);
                    sub_args.push(m);
                    sub_args.extend_from_slice(&args[i + 1..]);
                    let ts = src.tensor_index(sub, &sub_args);
                    let coef = x * &s;
                    for k in 0..out_dim {
                        triplets.push((row(k), src.coordinate(sub, k, ts), coef.clone()));
                    }
                }
            }
            // (−1)^{p+1} φ(f_{p+1}, …, f_2) ∘ f_1
            {
                let s = Scalar::from_i64(field, sign(p + 1));
                let sub = src.index[&chain[1..]];
                let ts = src.tensor_index(sub, &args[1..]);
                for kp in 0..src.out_dims[sub] {
                    let v = cat.compose_basis(chain[1], chain[0], kp, args[0]);
                    for (k, x) in v.iter().enumerate().filter(|(_, x)| !x.is_zero()) {
                        triplets.push((row(k), src.coordinate(sub, kp, ts), x * &s));
                    }
                }
            }
        }
    }
    Ok(Matrix::from_triplets(field, dst.total, src.total, triplets)?)
}

/// A cohomology group with chosen representatives.
#[derive(Clone, Debug)]
pub struct Cohomology {
    pub degree: usize,
    pub dim: usize,
    pub representatives: Vec<Cochain>,
}

impl HochschildComplex {
    pub fn category(&self) -> &BasisCategory {
        &self.category
    }

    pub fn basis(&self) -> &Basis {
        self.category.basis()
    }

    pub fn field(&self) -> Field {
        self.category.field()
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn layout(&self, p: usize) -> &CochainLayout {
        &self.layouts[p]
    }

    pub fn dims(&self) -> Vec<usize> {
        self.layouts.iter().map(CochainLayout::dim).collect()
    }

    /// `d^p: C^p → C^{p+1}`.
    pub fn differential(&self, p: usize) -> Result<&Matrix> {
        self.differentials
            .get(p)
            .ok_or(HochschildError::OutOfRange { degree: p, max: self.truncation.saturating_sub(1) })
    }

    fn check_degree(&self, p: usize) -> Result<()> {
        if p > self.truncation {
            Err(HochschildError::OutOfRange { degree: p, max: self.truncation })
        } else {
            Ok(())
        }
    }

    pub fn zero(&self, p: usize) -> Result<Cochain> {
        self.check_degree(p)?;
        Ok(Cochain { degree: p, basis: self.basis().clone(), values: zero_vector(self.field(), self.layouts[p].total) })
    }

    pub fn cochain(&self, p: usize, values: Vector) -> Result<Cochain> {
        self.check_degree(p)?;
        if values.len() != self.layouts[p].total {
            return Err(LinalgError::DimensionMismatch(format!(
                "C^{p} has dimension {}, got {} values",
                self.layouts[p].total,
                values.len()
            ))
            .into());
        }
        Ok(Cochain { degree: p, basis: self.basis().clone(), values })
    }

    /// The `i`-th coordinate vector of `C^p`.
    pub fn basis_cochain(&self, p: usize, i: usize) -> Result<Cochain> {
        self.check_degree(p)?;
        self.cochain(p, linalg::unit_vector(self.field(), self.layouts[p].total, i))
    }

    fn owns(&self, c: &Cochain) -> Result<()> {
        if &c.basis != self.basis() || c.degree > self.truncation {
            Err(HochschildError::ComplexMismatch)
        } else {
            Ok(())
        }
    }

    pub fn apply_d(&self, c: &Cochain) -> Result<Cochain> {
        self.owns(c)?;
        let d = self.differential(c.degree)?;
        self.cochain(c.degree + 1, d.mul_vec(&c.values)?)
    }

    /// The 0-cochain with the unit of `O(U)` at every member `U`.
    pub fn unit_cochain(&self) -> Result<Cochain> {
        let mut c = self.zero(0)?;
        let l = &self.layouts[0];
        for (ci, chain) in l.chains.iter().enumerate() {
            let unit = self.category.presheaf.algebra(chain[0])?.unit();
            for (k, x) in unit.iter().enumerate() {
                c.values[l.coordinate(ci, k, 0)] = x.clone();
            }
        }
        Ok(c)
    }

    /// The composition cochain `m(f_2, f_1) = f_2 ∘ f_1` in `C²`.
    pub fn composition_cochain(&self) -> Result<Cochain> {
        let mut c = self.zero(2)?;
        let l = &self.layouts[2];
        for (ci, chain) in l.chains.iter().enumerate() {
            let (_, _, tsize) = l.block(ci);
            for t in 0..tsize {
                let args = l.decode_tensor(ci, t);
                let v = self.category.compose_basis(chain[1], chain[0], args[1], args[0]);
                for (k, x) in v.iter().enumerate() {
                    c.values[l.coordinate(ci, k, t)] = x.clone();
                }
            }
        }
        Ok(c)
    }

    /// Evaluates `φ` on `chain` with arguments `args[i] = f_{i+1} ∈ O(U_i)`.
    pub fn evaluate(&self, phi: &Cochain, chain: &[Open], args: &[Vector]) -> Vector {
        let l = &self.layouts[phi.degree];
        let ci = l.index[chain];
        let (_, out_dim, _) = l.block(ci);
        let mut out = zero_vector(self.field(), out_dim);
        let supports: Vec<Vec<(usize, &Scalar)>> =
            args.iter().map(|a| a.iter().enumerate().filter(|(_, x)| !x.is_zero()).collect()).collect();
        if supports.iter().any(Vec::is_empty) {
            return out;
        }
        let mut idx = vec![0usize; args.len()];
        loop {
            let mut coef = self.field().one();
            let mut tuple = Vec::with_capacity(args.len());
            for (s, &i) in supports.iter().zip(&idx) {
                coef = &coef * s[i].1;
                tuple.push(s[i].0);
            }
            let t = l.tensor_index(ci, &tuple);
            for (k, o) in out.iter_mut().enumerate() {
                let v = &phi.values[l.coordinate(ci, k, t)];
                if !v.is_zero() {
                    o.add_mul_assign(&coef, v);
                }
            }
            // odometer over the supports
            let mut pos = 0;
            loop {
                if pos == idx.len() {
                    return out;
                }
                idx[pos] += 1;
                if idx[pos] < supports[pos].len() {
                    break;
                }
                idx[pos] = 0;
                pos += 1;
            }
        }
    }

    /// Builds a cochain of degree `p` from a function of `(chain, basis args)`.
    fn tabulate(&self, p: usize, mut value: impl FnMut(&[Open], &[usize]) -> Vector) -> Result<Cochain> {
        let mut c = self.zero(p)?;
        let l = &self.layouts[p];
        for (ci, chain) in l.chains.iter().enumerate() {
            let (_, _, tsize) = l.block(ci);
            for t in 0..tsize {
                let args = l.decode_tensor(ci, t);
                let v = value(chain, &args);
                for (k, x) in v.into_iter().enumerate() {
                    c.values[l.coordinate(ci, k, t)] = x;
                }
            }
        }
        Ok(c)
    }

    fn basis_args(&self, chain: &[Open], args: &[usize]) -> Vec<Vector> {
        args.iter()
            .enumerate()
            .map(|(i, &a)| linalg::unit_vector(self.field(), self.category.dim(chain[i]), a))
            .collect()
    }

    /// `(f ∪ g)(f_{p+q}, …, f_1) = f(f_{p+q}, …, f_{q+1}) ∘ g(f_q, …, f_1)`.
    pub fn cup(&self, f: &Cochain, g: &Cochain) -> Result<Cochain> {
        self.owns(f)?;
        self.owns(g)?;
        let (p, q) = (f.degree, g.degree);
        self.check_degree(p + q)?;
        self.tabulate(p + q, |chain, args| {
            let vecs = self.basis_args(chain, args);
            let x = self.evaluate(f, &chain[q..], &vecs[q..]);
            let y = self.evaluate(g, &chain[..=q], &vecs[..q]);
            self.category.compose(chain[q], chain[0], &x, &y)
        })
    }

    /// `f ∘̄ g = Σ_i (−1)^{(i−1)(q−1)} f ∘_i g`, degree `p + q − 1`.
    pub fn circle(&self, f: &Cochain, g: &Cochain) -> Result<Cochain> {
        self.owns(f)?;
        self.owns(g)?;
        let (p, q) = (f.degree, g.degree);
        if p + q == 0 {
            return Err(HochschildError::OutOfRange { degree: 0, max: self.truncation });
        }
        let n = p + q - 1;
        self.check_degree(n)?;
        let field = self.field();
        self.tabulate(n, |chain, args| {
            let vecs = self.basis_args(chain, args);
            let mut out = zero_vector(field, self.category.dim(chain[0]));
            // slot of f holding argument f'_s; counted from the left it is i = p + 1 − s
            for s in 1..=p {
                let i = p + 1 - s;
                let sgn = Scalar::from_i64(field, sign((i - 1) * (q + 1)));
                // g eats f_s, …, f_{s+q−1} on U_{s−1} ⊆ … ⊆ U_{s+q−1}
                let z = self.evaluate(g, &chain[s - 1..s + q], &vecs[s - 1..s - 1 + q]);
                let mut f_chain: Chain = chain[..s].to_vec();
                f_chain.extend_from_slice(&chain[s + q - 1..]);
                let mut f_args: Vec<Vector> = vecs[..s - 1].to_vec();
                f_args.push(z);
                f_args.extend_from_slice(&vecs[s - 1 + q..]);
                let v = self.evaluate(f, &f_chain, &f_args);
                add_scaled(&mut out, &sgn, &v);
            }
            out
        })
    }

    /// `[f, g] = f ∘̄ g − (−1)^{(p−1)(q−1)} g ∘̄ f`.
    pub fn bracket(&self, f: &Cochain, g: &Cochain) -> Result<Cochain> {
        let (p, q) = (f.degree, g.degree);
        let fg = self.circle(f, g)?;
        let gf = self.circle(g, f)?;
        let s = Scalar::from_i64(self.field(), -sign((p + 1) * (q + 1)));
        let mut values = fg.values;
        add_scaled(&mut values, &s, &gf.values);
        Ok(Cochain { values, ..fg })
    }

    /// `dim H^q` from ranks; needs `q ≤ N − 1`.
    pub fn cohomology_dim(&self, q: usize) -> Result<usize> {
        let d = self.differential(q)?;
        let kernel = d.cols() - d.rank()?;
        let image = if q == 0 { 0 } else { self.differentials[q - 1].rank()? };
        Ok(kernel - image)
    }

    /// `H^q = ker d^q / im d^{q−1}` with representative cocycles; needs `q ≤ N − 1`.
    pub fn cohomology(&self, q: usize) -> Result<Cohomology> {
        let cycles = self.cycles(q)?;
        let boundaries = self.boundaries(q)?;
        let n = self.layouts[q].total;
        let dim = subquotient_dim(self.field(), n, &cycles, &boundaries)?;
        let reps = QuotientBasis::new(self.field(), n, &cycles, &boundaries)?;
        let representatives = reps.reps.into_iter().map(|v| self.cochain(q, v)).collect::<Result<Vec<_>>>()?;
        Ok(Cohomology { degree: q, dim, representatives })
    }

    pub fn cycles(&self, q: usize) -> Result<Vec<Vector>> {
        Ok(kernel_basis(self.differential(q)?)?)
    }

    /// Generators of `im d^{q−1}` (the columns of `d^{q−1}`).
    pub fn boundaries(&self, q: usize) -> Result<Vec<Vector>> {
        self.check_degree(q)?;
        if q == 0 {
            return Ok(Vec::new());
        }
        let d = &self.differentials[q - 1];
        Ok((0..d.cols()).map(|j| d.column(j)).filter(|c| !linalg::is_zero_vector(c)).collect())
    }

    /// Whether `c` lies in the image of `d`.
    pub fn is_coboundary(&self, c: &Cochain) -> Result<bool> {
        self.owns(c)?;
        if c.degree == 0 {
            return Ok(linalg::is_zero_vector(&c.values));
        }
        Ok(linalg::solve_affine(&self.differentials[c.degree - 1], &c.values)?.is_some())
    }

    /// Coordinate projection `C^p(𝔟) → C^p(𝔟')` for a sub-basis `𝔟' ⊆ 𝔟`:
    /// forgets every chain not contained in `𝔟'`.
    pub fn projection_matrix(&self, target: &HochschildComplex, p: usize) -> Result<Matrix> {
        if !target.basis().is_subset(self.basis()) {
            return Err(HochschildError::NotASubBasis(target.basis().clone()));
        }
        self.check_degree(p)?;
        target.check_degree(p)?;
        let (src, dst) = (&self.layouts[p], &target.layouts[p]);
        let one = self.field().one();
        let mut triplets = Vec::with_capacity(dst.total);
        for (ci, chain) in dst.chains.iter().enumerate() {
            let si = src.index[chain];
            let (off_d, rows, cols) = dst.block(ci);
            let (off_s, _, _) = src.block(si);
            for k in 0..rows * cols {
                triplets.push((off_d + k, off_s + k, one.clone()));
            }
        }
        Ok(Matrix::from_triplets(self.field(), dst.total, src.total, triplets)?)
    }

    /// The image of `φ ∈ C(𝔟)` in `C(𝔟')` for a sub-basis `𝔟'`.
    pub fn project(&self, target: &HochschildComplex, phi: &Cochain) -> Result<Cochain> {
        self.owns(phi)?;
        let (src, dst) = (&self.layouts[phi.degree], &target.layouts[phi.degree]);
        if !target.basis().is_subset(self.basis()) {
            return Err(HochschildError::NotASubBasis(target.basis().clone()));
        }
        let mut values = zero_vector(self.field(), dst.total);
        for (ci, chain) in dst.chains.iter().enumerate() {
            let si = src.index[chain];
            let (off_d, rows, cols) = dst.block(ci);
            let (off_s, _, _) = src.block(si);
            values[off_d..off_d + rows * cols].clone_from_slice(&phi.values[off_s..off_s + rows * cols]);
        }
        target.cochain(phi.degree, values)
    }

    /// Rank of the map `H^q(𝔟) → H^q(𝔟')` induced by the projection to a sub-basis.
    pub fn induced_rank(&self, target: &HochschildComplex, q: usize) -> Result<usize> {
        let proj = self.projection_matrix(target, q)?;
        let n = target.layouts[q].total;
        let images: Vec<Vector> =
            self.cycles(q)?.iter().map(|z| proj.mul_vec(z)).collect::<std::result::Result<_, _>>()?;
        let b = target.boundaries(q)?;
        let mut both = images;
        both.extend(b.iter().cloned());
        Ok(span_dim(self.field(), n, &both)? - span_dim(self.field(), n, &b)?)
    }

    /// Basis of the normalized subcomplex `N^p`: cochains vanishing whenever an
    /// argument `f_i` with `U_{i−1} = U_i` is the identity.
    pub fn normalized_basis(&self, p: usize) -> Result<Vec<Vector>> {
        self.check_degree(p)?;
        let l = &self.layouts[p];
        let field = self.field();
        let mut rows: Vec<Vector> = Vec::new();
        for (ci, chain) in l.chains.iter().enumerate() {
            let (_, out_dim, tsize) = l.block(ci);
            for slot in 0..p {
                if chain[slot] != chain[slot + 1] {
                    continue;
                }
                let unit = self.category.presheaf.algebra(chain[slot])?.unit();
                // φ(…, 1, …) = 0, one linear condition per output coordinate and
                // per choice of the remaining basis arguments
                let mut seen = BTreeSet::new();
                for t in 0..tsize {
                    let mut args = l.decode_tensor(ci, t);
                    args[slot] = 0;
                    if !seen.insert(args.clone()) {
                        continue;
                    }
                    for k in 0..out_dim {
                        let mut row = zero_vector(field, l.total);
                        for (u, x) in unit.iter().enumerate().filter(|(_, x)| !x.is_zero()) {
                            args[slot] = u;
                            row[l.coordinate(ci, k, l.tensor_index(ci, &args))] = x.clone();
                        }
                        rows.push(row);
                    }
                }
            }
        }
        if rows.is_empty() {
            return Ok((0..l.total).map(|i| linalg::unit_vector(field, l.total, i)).collect());
        }
        Ok(kernel_basis(&Matrix::from_rows(field, l.total, rows)?)?)
    }

    /// Cohomology dimensions of the normalized subcomplex for `q ≤ N − 1`.
    pub fn normalized_cohomology_dims(&self) -> Result<Vec<usize>> {
        let field = self.field();
        let bases: Vec<Vec<Vector>> = (0..=self.truncation).map(|p| self.normalized_basis(p)).collect::<Result<_>>()?;
        let restricted_rank = |p: usize| -> Result<usize> {
            if bases[p].is_empty() {
                return Ok(0);
            }
            let d = &self.differentials[p];
            let images: Vec<Vector> = bases[p].iter().map(|v| d.mul_vec(v)).collect::<std::result::Result<_, _>>()?;
            Ok(span_dim(field, d.rows(), &images)?)
        };
        (0..self.truncation)
            .map(|q| {
                let kernel = bases[q].len() - restricted_rank(q)?;
                let image = if q == 0 { 0 } else { restricted_rank(q - 1)? };
                Ok(kernel - image)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ringed::Algebra;
    use crate::space::FiniteSpace;

    const Q: Field = Field::Rational;

    fn point(algebra: Algebra) -> (Basis, Arc<StructurePresheaf>) {
        let s = FiniteSpace::from_table(&[("pt", &["pt"])]).unwrap();
        let b = Basis::minimal(&s, s.whole()).unwrap();
        let o = StructurePresheaf::constant(s, algebra, [b.domain()]).unwrap();
        (b, Arc::new(o))
    }

    fn constant_on(table: &[(&str, &[&str])], extra: &[Open]) -> (Basis, Arc<StructurePresheaf>) {
        let s = FiniteSpace::from_table(table).unwrap();
        let mut members: Vec<Open> = (0..s.num_points()).map(|x| s.min_open(x)).collect();
        members.extend_from_slice(extra);
        let b = Basis::new(&s, s.whole(), members.clone()).unwrap();
        let o = StructurePresheaf::constant(s, Algebra::ground(Q), members).unwrap();
        (b, Arc::new(o))
    }

    fn pseudocircle(redundant: bool) -> (Basis, Arc<StructurePresheaf>) {
        let table: &[(&str, &[&str])] =
            &[("a", &["a"]), ("b", &["b"]), ("c", &["a", "b", "c"]), ("d", &["a", "b", "d"])];
        let extra = if redundant { vec![PointSet(0b1111)] } else { vec![] };
        constant_on(table, &extra)
    }

    use crate::space::PointSet;

    #[test]
    fn ground_field_point() {
        let (b, o) = point(Algebra::ground(Q));
        let c = build_complex(&b, &o, 3).unwrap();
        assert_eq!(c.dims(), vec![1, 1, 1, 1]);
        let h: Vec<usize> = (0..3).map(|q| c.cohomology(q).unwrap().dim).collect();
        assert_eq!(h, vec![1, 0, 0]);
    }

    #[test]
    fn dual_numbers_dims_and_cohomology() {
        let (b, o) = point(Algebra::truncated_polynomial(Q, 2));
        let c = build_complex(&b, &o, 4).unwrap();
        assert_eq!(c.dims(), vec![2, 4, 8, 16, 32]);
        let h: Vec<usize> = (0..4).map(|q| c.cohomology_dim(q).unwrap()).collect();
        assert_eq!(h, vec![2, 1, 1, 1]);
        for q in 0..3 {
            assert_eq!(c.cohomology(q).unwrap().dim, h[q]);
        }
    }

    #[test]
    fn out_of_range_degree() {
        let (b, o) = point(Algebra::ground(Q));
        let c = build_complex(&b, &o, 2).unwrap();
        assert!(matches!(c.cohomology(2), Err(HochschildError::OutOfRange { .. })));
    }

    #[test]
    fn missing_algebra_is_reported() {
        let (b, _) = pseudocircle(true);
        let (_, o) = pseudocircle(false);
        assert!(matches!(build_complex(&b, &o, 2), Err(HochschildError::MissingAlgebra(_))));
    }

    #[test]
    fn chain_counts_match_nerve() {
        let (b, o) = pseudocircle(true);
        let c = build_complex(&b, &o, 3).unwrap();
        let objs: Vec<Open> = b.members().iter().copied().collect();
        // nerve of a,b < c,d < X: vertices 5, edges 4 + 4 + 4 = ... counted by brute force
        let mut edges = 0;
        let mut triangles = 0;
        for &x in &objs {
            for &y in &objs {
                if x != y && x.is_subset(y) {
                    edges += 1;
                    for &z in &objs {
                        if z != y && y.is_subset(z) {
                            triangles += 1;
                        }
                    }
                }
            }
        }
        assert_eq!(strict_chains(&objs, 1).len(), 5);
        assert_eq!(strict_chains(&objs, 2).len(), edges);
        assert_eq!(strict_chains(&objs, 3).len(), triangles);
        assert_eq!(strict_chains(&objs, 4).len(), 0);
        // constant k: every chain carries exactly one coordinate
        for p in 0..=3 {
            assert_eq!(c.layout(p).dim(), multichains(&objs, p + 1).len());
        }
    }

    #[test]
    fn category_laws_hold() {
        for (b, o) in [pseudocircle(true), point(Algebra::truncated_polynomial(Q, 3))] {
            let cat = BasisCategory::new(&b, o).unwrap();
            assert_eq!(cat.check_laws(), None);
        }
    }

    #[test]
    fn tensor_index_roundtrip() {
        let (b, o) = point(Algebra::truncated_polynomial(Q, 3));
        let c = build_complex(&b, &o, 3).unwrap();
        let l = c.layout(3);
        for t in 0..27 {
            assert_eq!(l.tensor_index(0, &l.decode_tensor(0, t)), t);
        }
        // f_1 varies fastest
        assert_eq!(l.tensor_index(0, &[1, 0, 0]), 1);
        assert_eq!(l.tensor_index(0, &[0, 0, 1]), 9);
    }

    #[test]
    fn pseudocircle_cohomology() {
        let (b, o) = pseudocircle(false);
        let c = build_complex(&b, &o, 4).unwrap();
        let h: Vec<usize> = (0..3).map(|q| c.cohomology_dim(q).unwrap()).collect();
        assert_eq!(h, vec![1, 1, 0]);
    }

    #[test]
    fn counterexample_cochain_restricts_to_zero() {
        let (b, o) = pseudocircle(true);
        let s = o.space().clone();
        let c = build_complex(&b, &o, 2).unwrap();
        let l = c.layout(0);
        let mut phi = c.zero(0).unwrap();
        let xi = l.chain_index(&[s.whole()]).unwrap();
        phi.values[l.coordinate(xi, 0, 0)] = Q.one();
        for v in [s.min_open(2), s.min_open(3)] {
            let sub = crate::space::restrict_basis(&s, &b, v).unwrap();
            let cv = build_complex(&sub, &o, 2).unwrap();
            let r = c.project(&cv, &phi).unwrap();
            assert!(linalg::is_zero_vector(&r.values));
        }
    }

    #[test]
    fn unit_is_neutral_for_cup() {
        let (b, o) = point(Algebra::truncated_polynomial(Q, 2));
        let c = build_complex(&b, &o, 3).unwrap();
        let one = c.unit_cochain().unwrap();
        for p in 0..=3 {
            for i in 0..c.layout(p).dim() {
                let g = c.basis_cochain(p, i).unwrap();
                assert_eq!(c.cup(&one, &g).unwrap(), g);
                assert_eq!(c.cup(&g, &one).unwrap(), g);
            }
        }
    }

    #[test]
    fn degree_zero_cup_is_pointwise_product() {
        let (b, o) = pseudocircle(false);
        let c = build_complex(&b, &o, 2).unwrap();
        let mk = |xs: &[i64]| c.cochain(0, xs.iter().map(|&x| Scalar::from_i64(Q, x)).collect()).unwrap();
        let f = mk(&[1, 2, 3, 4]);
        let g = mk(&[5, -1, 0, 2]);
        assert_eq!(c.cup(&f, &g).unwrap(), mk(&[5, -2, 0, 8]));
    }

    #[test]
    fn differential_is_bracket_with_multiplication() {
        let (b, o) = point(Algebra::truncated_polynomial(Q, 2));
        let c = build_complex(&b, &o, 3).unwrap();
        let m = c.composition_cochain().unwrap();
        for p in 0..3 {
            for i in 0..c.layout(p).dim() {
                let phi = c.basis_cochain(p, i).unwrap();
                let mut expected = c.bracket(&m, &phi).unwrap();
                if p % 2 == 0 {
                    expected.values = expected.values.iter().map(|x| -x).collect();
                }
                assert_eq!(c.apply_d(&phi).unwrap(), expected, "p = {p}, i = {i}");
            }
        }
    }

    #[test]
    fn bracket_with_zero_cochain_substitutes() {
        // chain2 with constant k: [f, a] for f ∈ C¹ and a ∈ C⁰ is f evaluated
        // on a placed in its single slot, i.e. (f ∘_1 a)(U) = f_{U⊆U}(a_U)
        let (b, o) = constant_on(&[("p", &["p", "q"]), ("q", &["q"])], &[]);
        let c = build_complex(&b, &o, 2).unwrap();
        let l1 = c.layout(1);
        let f_vals: Vector = (0..l1.dim()).map(|i| Scalar::from_i64(Q, i as i64 + 2)).collect();
        let f = c.cochain(1, f_vals).unwrap();
        let a = c.cochain(0, vec![Scalar::from_i64(Q, 3), Scalar::from_i64(Q, -1)]).unwrap();
        let br = c.bracket(&f, &a).unwrap();
        assert_eq!(br.degree, 0);
        let l0 = c.layout(0);
        for (ci, chain) in l0.chains().iter().enumerate() {
            let u = chain[0];
            let fi = l1.chain_index(&[u, u]).unwrap();
            let av = a.values[l0.coordinate(ci, 0, 0)].clone();
            let fv = f.values[l1.coordinate(fi, 0, 0)].clone();
            assert_eq!(br.values[l0.coordinate(ci, 0, 0)], &fv * &av);
        }
    }

    #[test]
    fn normalized_matches_full() {
        for (b, o) in [
            point(Algebra::truncated_polynomial(Q, 2)),
            constant_on(&[("p", &["p", "q"]), ("q", &["q"])], &[]),
            pseudocircle(false),
        ] {
            let c = build_complex(&b, &o, 4).unwrap();
            let full: Vec<usize> = (0..4).map(|q| c.cohomology_dim(q).unwrap()).collect();
            assert_eq!(c.normalized_cohomology_dims().unwrap(), full);
        }
    }
}
