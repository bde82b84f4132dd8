//! Finite T0 spaces given by minimal open neighbourhoods, bases of basic
//! opens, and the operations on collections of bases: intersection,
//! restriction, glueing, plugging and δ-refinement.
//!
//! A point set is a bitmask over at most 64 points. Opens are the down-sets of
//! the specialization order `y ≤ x ⟺ y ∈ U_x`, where `U_x` is the minimal open
//! neighbourhood of `x`.
//!
//! On a finite space a set of nonempty opens inside `U` is a basis of `U`
//! exactly when it contains every `U_x` with `x ∈ U`: an open containing `x`
//! that lies inside `U_x` must equal `U_x`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MAX_POINTS: usize = 64;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct PointSet(pub u64);

/// Alias used where a point set is known to be open.
pub type Open = PointSet;

impl PointSet {
    pub const EMPTY: PointSet = PointSet(0);

    pub fn singleton(x: usize) -> PointSet {
        PointSet(1 << x)
    }

    pub fn from_points(points: impl IntoIterator<Item = usize>) -> PointSet {
        PointSet(points.into_iter().fold(0, |acc, x| acc | (1 << x)))
    }

    pub fn contains(self, x: usize) -> bool {
        self.0 >> x & 1 == 1
    }

    pub fn is_subset(self, other: PointSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn union(self, other: PointSet) -> PointSet {
        PointSet(self.0 | other.0)
    }

    pub fn intersection(self, other: PointSet) -> PointSet {
        PointSet(self.0 & other.0)
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn points(self) -> impl Iterator<Item = usize> {
        (0..MAX_POINTS).filter(move |&x| self.contains(x))
    }
}

// Smaller sets first, then by bit pattern: listings read bottom-up.
impl Ord for PointSet {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.len(), self.0).cmp(&(other.len(), other.0))
    }
}

impl PartialOrd for PointSet {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for PointSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, x) in self.points().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, "}}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpaceViolation {
    /// `x ∉ U_x`.
    NotReflexive {
        point: String,
    },
    /// `y ∈ U_x` but `U_y ⊄ U_x`.
    NotNested {
        point: String,
        inner: String,
    },
    /// Two points with the same minimal open.
    NotT0 {
        first: String,
        second: String,
    },
    UnknownPoint {
        point: String,
    },
    DuplicatePoint {
        point: String,
    },
    MissingMinimalOpen {
        point: String,
    },
    TooManyPoints {
        count: usize,
    },
}

impl fmt::Display for SpaceViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpaceViolation::NotReflexive { point } => {
                write!(f, "{point} is not in its own minimal open")
            }
            SpaceViolation::NotNested { point, inner } => {
                write!(f, "{inner} lies in the minimal open of {point} but its own minimal open does not")
            }
            SpaceViolation::NotT0 { first, second } => {
                write!(f, "{first} and {second} have the same minimal open (not T0)")
            }
            SpaceViolation::UnknownPoint { point } => write!(f, "unknown point {point:?}"),
            SpaceViolation::DuplicatePoint { point } => write!(f, "duplicate point {point:?}"),
            SpaceViolation::MissingMinimalOpen { point } => {
                write!(f, "no minimal open given for {point}")
            }
            SpaceViolation::TooManyPoints { count } => {
                write!(f, "{count} points exceed the limit of {MAX_POINTS}")
            }
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SpaceError {
    #[error("invalid space: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    InvalidSpace(Vec<SpaceViolation>),
    #[error("{0:?} is not open")]
    NotOpen(PointSet),
    #[error("{inner:?} is not contained in {outer:?}")]
    NotContained { inner: PointSet, outer: PointSet },
    #[error("not a basis of {domain:?}: {reason}")]
    NotABasis { domain: PointSet, reason: String },
    #[error("bases live on different opens {0:?} and {1:?}")]
    DomainMismatch(PointSet, PointSet),
    #[error("bases do not coincide on the overlap {0:?}")]
    NotCompatible(PointSet),
    #[error("empty collection of bases on {0:?}")]
    EmptyFamily(PointSet),
    #[error("collection on {0:?} is not closed under intersection")]
    NotIntersectionClosed(PointSet),
}

pub type Result<T> = std::result::Result<T, SpaceError>;

/// A finite T0 space.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiniteSpace {
    ids: Vec<String>,
    min_open: Vec<PointSet>,
}

/// Checks the minimal-open table and builds the space.
///
/// `table` lists, for each point id, the ids in its minimal open. The point
/// order of `ids` fixes the internal indexing.
pub fn validate_space(ids: &[String], table: &[(String, Vec<String>)]) -> Result<FiniteSpace> {
    let mut violations = Vec::new();
    if ids.len() > MAX_POINTS {
        return Err(SpaceError::InvalidSpace(vec![SpaceViolation::TooManyPoints { count: ids.len() }]));
    }
    let mut index = BTreeMap::new();
    for (i, id) in ids.iter().enumerate() {
        if index.insert(id.as_str(), i).is_some() {
            violations.push(SpaceViolation::DuplicatePoint { point: id.clone() });
        }
    }
    let mut min_open: Vec<Option<PointSet>> = vec![None; ids.len()];
    for (id, members) in table {
        let Some(&x) = index.get(id.as_str()) else {
            violations.push(SpaceViolation::UnknownPoint { point: id.clone() });
            continue;
        };
        let mut set = PointSet::EMPTY;
        for m in members {
            match index.get(m.as_str()) {
                Some(&y) => set = set.union(PointSet::singleton(y)),
                None => violations.push(SpaceViolation::UnknownPoint { point: m.clone() }),
            }
        }
        min_open[x] = Some(set);
    }
    for (x, m) in min_open.iter().enumerate() {
        if m.is_none() {
            violations.push(SpaceViolation::MissingMinimalOpen { point: ids[x].clone() });
        }
    }
    if !violations.is_empty() {
        return Err(SpaceError::InvalidSpace(violations));
    }
    let min_open: Vec<PointSet> = min_open.into_iter().flatten().collect();
    for (x, &ux) in min_open.iter().enumerate() {
        if !ux.contains(x) {
            violations.push(SpaceViolation::NotReflexive { point: ids[x].clone() });
        }
        for y in ux.points() {
            if y != x && !min_open[y].is_subset(ux) {
                violations.push(SpaceViolation::NotNested { point: ids[x].clone(), inner: ids[y].clone() });
            }
        }
    }
    for x in 0..ids.len() {
        for y in x + 1..ids.len() {
            if min_open[x] == min_open[y] {
                violations.push(SpaceViolation::NotT0 { first: ids[x].clone(), second: ids[y].clone() });
            }
        }
    }
    if violations.is_empty() {
        Ok(FiniteSpace { ids: ids.to_vec(), min_open })
    } else {
        Err(SpaceError::InvalidSpace(violations))
    }
}

impl FiniteSpace {
    /// Convenience constructor from string literals, mainly for tests.
    pub fn from_table(table: &[(&str, &[&str])]) -> Result<FiniteSpace> {
        let ids: Vec<String> = table.iter().map(|(x, _)| x.to_string()).collect();
        let rows: Vec<(String, Vec<String>)> =
            table.iter().map(|(x, m)| (x.to_string(), m.iter().map(|s| s.to_string()).collect())).collect();
        validate_space(&ids, &rows)
    }

    pub fn num_points(&self) -> usize {
        self.ids.len()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn point(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|x| x == id)
    }

    pub fn whole(&self) -> Open {
        PointSet((0..self.ids.len()).fold(0, |acc, x| acc | (1 << x)))
    }

    /// `U_x`.
    pub fn min_open(&self, x: usize) -> Open {
        self.min_open[x]
    }

    /// `y ≤ x` in the specialization order, i.e. `y ∈ U_x`.
    pub fn leq(&self, y: usize, x: usize) -> bool {
        self.min_open[x].contains(y)
    }

    pub fn is_open(&self, s: PointSet) -> bool {
        s.is_subset(self.whole()) && s.points().all(|x| self.min_open[x].is_subset(s))
    }

    pub fn check_open(&self, s: PointSet) -> Result<Open> {
        if self.is_open(s) {
            Ok(s)
        } else {
            Err(SpaceError::NotOpen(s))
        }
    }

    /// The smallest open containing `s`.
    pub fn open_hull(&self, s: PointSet) -> Open {
        s.points().fold(PointSet::EMPTY, |acc, x| acc.union(self.min_open[x]))
    }

    /// All opens, including ∅, in `PointSet` order.
    pub fn opens(&self) -> Vec<Open> {
        let mut found = BTreeSet::new();
        found.insert(PointSet::EMPTY);
        let mut frontier = vec![PointSet::EMPTY];
        while let Some(s) = frontier.pop() {
            for x in 0..self.num_points() {
                let t = s.union(self.min_open[x]);
                if found.insert(t) {
                    frontier.push(t);
                }
            }
        }
        found.into_iter().collect()
    }

    pub fn opens_within(&self, u: Open) -> Vec<Open> {
        self.opens().into_iter().filter(|v| v.is_subset(u)).collect()
    }

    /// Renders a point set with point ids, e.g. `{a,b}`; minimal opens print as `U_x`.
    pub fn name(&self, s: PointSet) -> String {
        if s == self.whole() && !s.is_empty() {
            return "X".to_string();
        }
        if let Some(x) = (0..self.num_points()).find(|&x| self.min_open[x] == s) {
            return format!("U{}", self.ids[x]);
        }
        let ids: Vec<&str> = s.points().map(|x| self.ids[x].as_str()).collect();
        format!("{{{}}}", ids.join(","))
    }

    /// Parses `X`, `U<id>`, or a `+`-joined list of point ids.
    pub fn parse_set(&self, text: &str) -> Option<PointSet> {
        let t = text.trim();
        if t == "X" {
            return Some(self.whole());
        }
        if let Some(x) = t.strip_prefix('U').and_then(|id| self.point(id)) {
            return Some(self.min_open[x]);
        }
        let mut s = PointSet::EMPTY;
        for id in t.split('+') {
            s = s.union(PointSet::singleton(self.point(id.trim())?));
        }
        Some(s)
    }

    /// Strict chains `x_0 < x_1 < … < x_p` of points in `u`, grouped by `p`.
    pub fn point_chains(&self, u: PointSet) -> Vec<Vec<Vec<usize>>> {
        let pts: Vec<usize> = u.points().collect();
        let mut by_len: Vec<Vec<Vec<usize>>> = vec![pts.iter().map(|&x| vec![x]).collect()];
        loop {
            let mut next = Vec::new();
            for chain in by_len.last().expect("nonempty") {
                let top = *chain.last().expect("nonempty chain");
                for &y in &pts {
                    if y != top && self.leq(top, y) {
                        let mut c = chain.clone();
                        c.push(y);
                        next.push(c);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            by_len.push(next);
        }
        if pts.is_empty() {
            return Vec::new();
        }
        by_len
    }
}

/// Checks that `members` is a basis of the open `domain`.
pub fn check_basis(space: &FiniteSpace, domain: Open, members: &BTreeSet<PointSet>) -> Result<()> {
    space.check_open(domain)?;
    let fail = |reason: String| Err(SpaceError::NotABasis { domain, reason });
    for &m in members {
        if m.is_empty() {
            return fail("the empty set is not a basic open".into());
        }
        if !space.is_open(m) {
            return fail(format!("member {} is not open", space.name(m)));
        }
        if !m.is_subset(domain) {
            return fail(format!("member {} is not inside the domain", space.name(m)));
        }
    }
    for x in domain.points() {
        if !members.contains(&space.min_open(x)) {
            return fail(format!(
                "{} is not a union of members (point {} uncovered)",
                space.name(space.min_open(x)),
                space.ids()[x]
            ));
        }
    }
    Ok(())
}

/// A basis of basic opens of an open `domain`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Basis {
    domain: Open,
    members: BTreeSet<PointSet>,
}

impl Basis {
    pub fn new(space: &FiniteSpace, domain: Open, members: impl IntoIterator<Item = PointSet>) -> Result<Basis> {
        let members: BTreeSet<PointSet> = members.into_iter().collect();
        check_basis(space, domain, &members)?;
        Ok(Basis { domain, members })
    }

    /// The basis of all minimal opens of points of `domain`.
    pub fn minimal(space: &FiniteSpace, domain: Open) -> Result<Basis> {
        Basis::new(space, domain, domain.points().map(|x| space.min_open(x)))
    }

    pub fn domain(&self) -> Open {
        self.domain
    }

    pub fn members(&self) -> &BTreeSet<PointSet> {
        &self.members
    }

    pub fn contains(&self, b: PointSet) -> bool {
        self.members.contains(&b)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn is_subset(&self, other: &Basis) -> bool {
        self.members.is_subset(&other.members)
    }

    pub fn describe(&self, space: &FiniteSpace) -> String {
        let names: Vec<String> = self.members.iter().map(|&m| space.name(m)).collect();
        format!("{{{}}} on {}", names.join(","), space.name(self.domain))
    }
}

/// `𝔟|_V = {B ∈ 𝔟 : B ⊆ V}`.
pub fn restrict_basis(space: &FiniteSpace, b: &Basis, v: Open) -> Result<Basis> {
    space.check_open(v)?;
    if !v.is_subset(b.domain) {
        return Err(SpaceError::NotContained { inner: v, outer: b.domain });
    }
    let members = b.members.iter().copied().filter(|m| m.is_subset(v));
    Basis::new(space, v, members)
}

/// `𝔟 ∩ 𝔟'`. The intersection of two bases need not be a basis; with
/// `strict` set that is an error, otherwise the member set is returned as-is
/// (a `Basis` value whose basis property was not verified).
pub fn intersect_bases(space: &FiniteSpace, b1: &Basis, b2: &Basis, strict: bool) -> Result<Basis> {
    if b1.domain != b2.domain {
        return Err(SpaceError::DomainMismatch(b1.domain, b2.domain));
    }
    let members: BTreeSet<PointSet> = b1.members.intersection(&b2.members).copied().collect();
    match check_basis(space, b1.domain, &members) {
        Ok(()) => Ok(Basis { domain: b1.domain, members }),
        Err(e) if strict => Err(e),
        Err(_) => Ok(Basis { domain: b1.domain, members }),
    }
}

/// `𝔟 ∪ 𝔟'` on `U ∪ V` for bases that coincide on `U ∩ V`.
pub fn glue_bases(space: &FiniteSpace, b1: &Basis, b2: &Basis) -> Result<Basis> {
    let overlap = b1.domain.intersection(b2.domain);
    let inside =
        |b: &Basis| -> BTreeSet<PointSet> { b.members.iter().copied().filter(|m| m.is_subset(overlap)).collect() };
    if inside(b1) != inside(b2) {
        return Err(SpaceError::NotCompatible(overlap));
    }
    let domain = b1.domain.union(b2.domain);
    Basis::new(space, domain, b1.members.union(&b2.members).copied())
}

/// `𝔟_U ∘ 𝔟_V = {B ∈ 𝔟_U : B ⊆ V ⟹ B ∈ 𝔟_V}` for `V ⊆ U`.
pub fn plug(space: &FiniteSpace, bu: &Basis, bv: &Basis) -> Result<Basis> {
    if !bv.domain.is_subset(bu.domain) {
        return Err(SpaceError::NotContained { inner: bv.domain, outer: bu.domain });
    }
    let members = bu.members.iter().copied().filter(|&m| !m.is_subset(bv.domain) || bv.contains(m));
    Basis::new(space, bu.domain, members)
}

/// Members removed by δ-refinement: those inside `∪δ` but inside no single `D ∈ δ`.
pub fn removed_by(members: &BTreeSet<PointSet>, delta: &[Open]) -> BTreeSet<PointSet> {
    let cover = delta.iter().fold(PointSet::EMPTY, |acc, &d| acc.union(d));
    members.iter().copied().filter(|&m| m.is_subset(cover) && !delta.iter().any(|&d| m.is_subset(d))).collect()
}

/// `𝔟_δ = {B ∈ 𝔟 : B ⊆ ∪δ ⟹ ∃ D ∈ δ, B ⊆ D}`.
pub fn delta_refine(space: &FiniteSpace, b: &Basis, delta: &[Open]) -> Result<Basis> {
    for &d in delta {
        space.check_open(d)?;
        if !d.is_subset(b.domain) {
            return Err(SpaceError::NotContained { inner: d, outer: b.domain });
        }
    }
    let gone = removed_by(&b.members, delta);
    Basis::new(space, b.domain, b.members.difference(&gone).copied())
}

/// Antichains of nonempty opens inside `u`, ordered by size then lexicographically.
///
/// Refinement by a collection depends only on its maximal elements, so these
/// are all the δ that need to be tried.
pub fn antichains(space: &FiniteSpace, u: Open, max_size: Option<usize>) -> Vec<Vec<Open>> {
    let opens: Vec<Open> = space.opens_within(u).into_iter().filter(|o| !o.is_empty()).collect();
    let mut out = Vec::new();
    fn rec(opens: &[Open], start: usize, current: &mut Vec<Open>, max: usize, out: &mut Vec<Vec<Open>>) {
        if !current.is_empty() {
            out.push(current.clone());
        }
        if current.len() == max {
            return;
        }
        for i in start..opens.len() {
            let o = opens[i];
            if current.iter().any(|&c| c.is_subset(o) || o.is_subset(c)) {
                continue;
            }
            current.push(o);
            rec(opens, i + 1, current, max, out);
            current.pop();
        }
    }
    rec(&opens, 0, &mut Vec::new(), max_size.unwrap_or(usize::MAX), &mut out);
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    out
}

/// An assignment `U ↦ B(U)` of finite collections of bases.
#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BasisFamily {
    bases: BTreeMap<Open, BTreeSet<Basis>>,
}

impl BasisFamily {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, b: Basis) -> bool {
        self.bases.entry(b.domain).or_default().insert(b)
    }

    /// Ensures `u` has an entry, possibly empty.
    pub fn touch(&mut self, u: Open) {
        self.bases.entry(u).or_default();
    }

    pub fn at(&self, u: Open) -> impl Iterator<Item = &Basis> {
        self.bases.get(&u).into_iter().flatten()
    }

    pub fn count_at(&self, u: Open) -> usize {
        self.bases.get(&u).map_or(0, BTreeSet::len)
    }

    pub fn contains(&self, b: &Basis) -> bool {
        self.bases.get(&b.domain).is_some_and(|s| s.contains(b))
    }

    pub fn opens(&self) -> impl Iterator<Item = Open> + '_ {
        self.bases.keys().copied()
    }

    /// `B ⊆ B'` openwise.
    pub fn is_contained_in(&self, other: &BasisFamily) -> bool {
        self.bases.values().flatten().all(|b| other.contains(b))
    }
}

/// The smallest good family containing `basis ∈ B(X)`:
/// `B(U) = {(𝔟|_U)_{δ_1,…,δ_n}}`, computed for every open `U` as a fixpoint.
pub fn generate_good_family(space: &FiniteSpace, basis: &Basis) -> Result<BasisFamily> {
    if basis.domain != space.whole() {
        return Err(SpaceError::NotABasis {
            domain: space.whole(),
            reason: "the generating basis must be a basis of the whole space".into(),
        });
    }
    let mut family = BasisFamily::new();
    for u in space.opens() {
        let start = restrict_basis(space, basis, u)?;
        let traces: BTreeSet<BTreeSet<PointSet>> = antichains(space, u, None)
            .iter()
            .map(|delta| removed_by(&start.members, delta))
            .filter(|t| !t.is_empty())
            .collect();
        let mut seen: BTreeSet<BTreeSet<PointSet>> = BTreeSet::new();
        let mut frontier = vec![start.members.clone()];
        seen.insert(start.members.clone());
        while let Some(members) = frontier.pop() {
            for t in &traces {
                let next: BTreeSet<PointSet> = members.difference(t).copied().collect();
                if seen.insert(next.clone()) {
                    frontier.push(next);
                }
            }
        }
        family.touch(u);
        for members in seen {
            family.insert(Basis::new(space, u, members)?);
        }
    }
    Ok(family)
}

/// The family axioms checked by [`is_good_family`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FamilyLaw {
    NonemptyAtX,
    BasisProperty,
    Intersection,
    Restriction,
    Glue,
    Plug,
    Refinement,
}

impl FamilyLaw {
    pub const ALL: [FamilyLaw; 7] = [
        FamilyLaw::NonemptyAtX,
        FamilyLaw::BasisProperty,
        FamilyLaw::Intersection,
        FamilyLaw::Restriction,
        FamilyLaw::Glue,
        FamilyLaw::Plug,
        FamilyLaw::Refinement,
    ];
}

/// Witness of a failed family law.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FamilyViolation {
    EmptyAtX,
    NotABasis { basis: Basis, reason: String },
    Intersection { first: Basis, second: Basis },
    Restriction { basis: Basis, to: Open },
    Glue { first: Basis, second: Basis },
    Plug { outer: Basis, inner: Basis },
    Refinement { basis: Basis, delta: Vec<Open> },
}

impl FamilyViolation {
    pub fn describe(&self, space: &FiniteSpace) -> String {
        let names = |d: &[Open]| d.iter().map(|&o| space.name(o)).collect::<Vec<_>>().join(",");
        match self {
            FamilyViolation::EmptyAtX => "B(X) is empty".into(),
            FamilyViolation::NotABasis { basis, reason } => {
                format!("{} is not a basis: {reason}", basis.describe(space))
            }
            FamilyViolation::Intersection { first, second } => {
                format!("{} ∩ {} is missing", first.describe(space), second.describe(space))
            }
            FamilyViolation::Restriction { basis, to } => {
                format!("restriction of {} to {} is missing", basis.describe(space), space.name(*to))
            }
            FamilyViolation::Glue { first, second } => {
                format!("glueing of {} and {} is missing", first.describe(space), second.describe(space))
            }
            FamilyViolation::Plug { outer, inner } => {
                format!("{} ∘ {} is missing", outer.describe(space), inner.describe(space))
            }
            FamilyViolation::Refinement { basis, delta } => {
                format!("refinement of {} by δ = {{{}}} is missing", basis.describe(space), names(delta))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LawCheck {
    pub law: FamilyLaw,
    pub violation: Option<FamilyViolation>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoodFamilyReport {
    pub checks: Vec<LawCheck>,
}

impl GoodFamilyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.violation.is_none())
    }

    pub fn violation(&self, law: FamilyLaw) -> Option<&FamilyViolation> {
        self.checks.iter().find(|c| c.law == law).and_then(|c| c.violation.as_ref())
    }

    pub fn first_violation(&self) -> Option<&FamilyViolation> {
        self.checks.iter().find_map(|c| c.violation.as_ref())
    }
}

/// Checks each law separately and records the first witness for each.
pub fn is_good_family(space: &FiniteSpace, family: &BasisFamily) -> GoodFamilyReport {
    let opens = space.opens();
    let x = space.whole();
    let check = |law: FamilyLaw| -> Option<FamilyViolation> {
        match law {
            FamilyLaw::NonemptyAtX => (family.count_at(x) == 0).then_some(FamilyViolation::EmptyAtX),
            FamilyLaw::BasisProperty => opens.iter().flat_map(|&u| family.at(u)).find_map(|b| {
                check_basis(space, b.domain, &b.members)
                    .err()
                    .map(|e| FamilyViolation::NotABasis { basis: b.clone(), reason: e.to_string() })
            }),
            FamilyLaw::Intersection => opens.iter().find_map(|&u| {
                family.at(u).find_map(|b1| {
                    family.at(u).find_map(|b2| {
                        let meet =
                            Basis { domain: u, members: b1.members.intersection(&b2.members).copied().collect() };
                        (!family.contains(&meet))
                            .then(|| FamilyViolation::Intersection { first: b1.clone(), second: b2.clone() })
                    })
                })
            }),
            FamilyLaw::Restriction => opens.iter().find_map(|&u| {
                family.at(u).find_map(|b| {
                    opens.iter().filter(|v| v.is_subset(u)).find_map(|&v| {
                        let ok = restrict_basis(space, b, v).is_ok_and(|r| family.contains(&r));
                        (!ok).then(|| FamilyViolation::Restriction { basis: b.clone(), to: v })
                    })
                })
            }),
            FamilyLaw::Glue => opens.iter().find_map(|&u| {
                opens.iter().find_map(|&v| {
                    let overlap = u.intersection(v);
                    family.at(u).find_map(|b1| {
                        family.at(v).find_map(|b2| {
                            let r1 = restrict_basis(space, b1, overlap).ok()?;
                            let r2 = restrict_basis(space, b2, overlap).ok()?;
                            if r1 != r2 {
                                return None;
                            }
                            let ok = glue_bases(space, b1, b2).is_ok_and(|g| family.contains(&g));
                            (!ok).then(|| FamilyViolation::Glue { first: b1.clone(), second: b2.clone() })
                        })
                    })
                })
            }),
            FamilyLaw::Plug => opens.iter().find_map(|&u| {
                opens.iter().filter(|v| v.is_subset(u)).find_map(|&v| {
                    family.at(u).find_map(|bu| {
                        family.at(v).find_map(|bv| {
                            let ok = plug(space, bu, bv).is_ok_and(|p| family.contains(&p));
                            (!ok).then(|| FamilyViolation::Plug { outer: bu.clone(), inner: bv.clone() })
                        })
                    })
                })
            }),
            FamilyLaw::Refinement => opens.iter().find_map(|&u| {
                let deltas = antichains(space, u, None);
                family.at(u).find_map(|b| {
                    deltas.iter().find_map(|delta| {
                        let ok = delta_refine(space, b, delta).is_ok_and(|r| family.contains(&r));
                        (!ok).then(|| FamilyViolation::Refinement { basis: b.clone(), delta: delta.clone() })
                    })
                })
            }),
        }
    };
    GoodFamilyReport { checks: FamilyLaw::ALL.iter().map(|&law| LawCheck { law, violation: check(law) }).collect() }
}

/// `⋂ B(U)`, the member of `B(U)` that is terminal for reverse inclusion.
pub fn terminal_basis(family: &BasisFamily, u: Open) -> Result<Basis> {
    let mut iter = family.at(u);
    let first = iter.next().ok_or(SpaceError::EmptyFamily(u))?;
    let members = iter.fold(first.members.clone(), |acc, b| acc.intersection(&b.members).copied().collect());
    let meet = Basis { domain: u, members };
    if family.contains(&meet) {
        Ok(meet)
    } else {
        Err(SpaceError::NotIntersectionClosed(u))
    }
}

/// `𝔟_{δ_1,…,δ_n}`: refinement by each collection in turn.
pub fn refine_all(space: &FiniteSpace, b: &Basis, deltas: &[Vec<Open>]) -> Result<Basis> {
    deltas.iter().try_fold(b.clone(), |acc, d| delta_refine(space, &acc, d))
}

/// Collections of at most `max_size` nonempty opens inside `u`, without repeats.
pub fn collections(space: &FiniteSpace, u: Open, max_size: usize) -> Vec<Vec<Open>> {
    let opens: Vec<Open> = space.opens_within(u).into_iter().filter(|o| !o.is_empty()).collect();
    let mut out: Vec<Vec<Open>> = vec![Vec::new()];
    let mut layer: Vec<Vec<Open>> = vec![Vec::new()];
    for _ in 0..max_size {
        let mut next = Vec::new();
        for c in &layer {
            let start = c.last().map_or(0, |l| opens.iter().position(|o| o == l).unwrap() + 1);
            for &o in &opens[start..] {
                let mut d = c.clone();
                d.push(o);
                next.push(d);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

/// The identities relating refinement to restriction, plugging and glueing.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClosureIdentity {
    /// `(𝔟_δ)|_V = (𝔟|_V)_{δ|_V}`
    Restriction,
    /// `(𝔟|_U)_δ ∘ (𝔟|_V)_ε = (𝔟|_U)_{δ,ε}`
    PlugComposition,
    /// `(𝔟|_U)_δ ∪ (𝔟|_V)_ε = (𝔟|_{U∪V})_{δ,ε,{U,V}}` when both agree on `U ∩ V`
    Glue,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClosureCheck {
    pub identity: ClosureIdentity,
    pub instances: usize,
    /// First failing instance, described.
    pub failure: Option<String>,
}

/// Checks the three identities for the restrictions of `b` to every open and
/// every collection δ, ε of at most `max_size` opens.
pub fn check_closure_identities(space: &FiniteSpace, b: &Basis, max_size: usize) -> Result<Vec<ClosureCheck>> {
    let opens: Vec<Open> = space.opens_within(b.domain).into_iter().filter(|o| !o.is_empty()).collect();
    let names = |d: &[Open]| format!("{{{}}}", d.iter().map(|&o| space.name(o)).collect::<Vec<_>>().join(","));
    let mut restriction = ClosureCheck { identity: ClosureIdentity::Restriction, instances: 0, failure: None };
    let mut plugging = ClosureCheck { identity: ClosureIdentity::PlugComposition, instances: 0, failure: None };
    let mut glue = ClosureCheck { identity: ClosureIdentity::Glue, instances: 0, failure: None };
    let record = |check: &mut ClosureCheck, ok: bool, what: &dyn Fn() -> String| {
        check.instances += 1;
        if !ok && check.failure.is_none() {
            check.failure = Some(what());
        }
    };
    let coll: BTreeMap<Open, Vec<Vec<Open>>> = opens.iter().map(|&u| (u, collections(space, u, max_size))).collect();
    for &u in &opens {
        let bu = restrict_basis(space, b, u)?;
        for delta in &coll[&u] {
            let refined = delta_refine(space, &bu, delta)?;
            for &v in opens.iter().filter(|v| v.is_subset(u)) {
                let dv: Vec<Open> = delta.iter().map(|&d| d.intersection(v)).filter(|d| !d.is_empty()).collect();
                let lhs = restrict_basis(space, &refined, v)?;
                let rhs = delta_refine(space, &restrict_basis(space, &bu, v)?, &dv)?;
                record(&mut restriction, lhs == rhs, &|| {
                    format!("U = {}, V = {}, δ = {}", space.name(u), space.name(v), names(delta))
                });
                let bv = restrict_basis(space, b, v)?;
                for eps in &coll[&v] {
                    let lhs = plug(space, &refined, &delta_refine(space, &bv, eps)?)?;
                    let rhs = refine_all(space, &bu, &[delta.clone(), eps.clone()])?;
                    record(&mut plugging, lhs == rhs, &|| {
                        format!(
                            "U = {}, V = {}, δ = {}, ε = {}",
                            space.name(u),
                            space.name(v),
                            names(delta),
                            names(eps)
                        )
                    });
                }
            }
            for &v in &opens {
                let bv = restrict_basis(space, b, v)?;
                let w = u.union(v);
                let bw = restrict_basis(space, b, w)?;
                for eps in &coll[&v] {
                    let right = delta_refine(space, &bv, eps)?;
                    let lhs = match glue_bases(space, &refined, &right) {
                        Ok(glued) => glued,
                        Err(SpaceError::NotCompatible(_)) => continue,
                        Err(e) => return Err(e),
                    };
                    let rhs = refine_all(space, &bw, &[delta.clone(), eps.clone(), vec![u, v]])?;
                    record(&mut glue, lhs == rhs, &|| {
                        format!(
                            "U = {}, V = {}, δ = {}, ε = {}",
                            space.name(u),
                            space.name(v),
                            names(delta),
                            names(eps)
                        )
                    });
                }
            }
        }
    }
    Ok(vec![restriction, plugging, glue])
}
