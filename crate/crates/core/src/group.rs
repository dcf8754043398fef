//! Finite groups as dense multiplication tables.
//!
//! Every constructor places the identity at index 0. Permutation groups are
//! enumerated in lexicographic order of one-line notation, and dihedral
//! groups list the rotations `r^i` first followed by the reflections `r^i s`
//! at index `n + i`.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest group order built unless the caller raises the cap (S_6).
pub const DEFAULT_ORDER_CAP: usize = 720;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupKind {
    Cyclic,
    Dihedral,
    Symmetric,
    Alternating,
}

/// A named member of one of the supported families, e.g. `S5` or `D59`.
///
/// `Dihedral(n)` is the symmetry group of the n-gon, of order 2n.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GroupSpec {
    Cyclic(usize),
    Dihedral(usize),
    Symmetric(usize),
    Alternating(usize),
}

impl GroupSpec {
    pub fn kind(self) -> GroupKind {
        match self {
            GroupSpec::Cyclic(_) => GroupKind::Cyclic,
            GroupSpec::Dihedral(_) => GroupKind::Dihedral,
            GroupSpec::Symmetric(_) => GroupKind::Symmetric,
            GroupSpec::Alternating(_) => GroupKind::Alternating,
        }
    }

    pub fn param(self) -> usize {
        match self {
            GroupSpec::Cyclic(n)
            | GroupSpec::Dihedral(n)
            | GroupSpec::Symmetric(n)
            | GroupSpec::Alternating(n) => n,
        }
    }

    /// Group order, saturating on overflow.
    pub fn order(self) -> usize {
        match self {
            GroupSpec::Cyclic(n) => n,
            GroupSpec::Dihedral(n) => n.saturating_mul(2),
            GroupSpec::Symmetric(k) => factorial(k),
            GroupSpec::Alternating(k) => factorial(k) / 2,
        }
    }

    pub fn build(self) -> Result<Group> {
        self.build_with_cap(DEFAULT_ORDER_CAP)
    }

    pub fn build_with_cap(self, cap: usize) -> Result<Group> {
        match self {
            GroupSpec::Cyclic(n) => make_cyclic(n),
            GroupSpec::Dihedral(n) => make_dihedral(n),
            GroupSpec::Symmetric(k) => make_symmetric_capped(k, cap),
            GroupSpec::Alternating(k) => make_alternating_capped(k, cap),
        }
    }
}

impl fmt::Display for GroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let letter = match self {
            GroupSpec::Cyclic(_) => 'C',
            GroupSpec::Dihedral(_) => 'D',
            GroupSpec::Symmetric(_) => 'S',
            GroupSpec::Alternating(_) => 'A',
        };
        write!(f, "{letter}{}", self.param())
    }
}

impl FromStr for GroupSpec {
    type Err = Error;

    /// Accepts `C113`, `C_113`, `d59`, `S5`, `A_5`.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let mut chars = t.chars();
        let letter = chars.next().ok_or_else(|| Error::GroupSpec(s.to_string()))?;
        let rest = chars.as_str().trim_start_matches('_');
        let n: usize = rest.parse().map_err(|_| Error::GroupSpec(s.to_string()))?;
        match letter.to_ascii_uppercase() {
            'C' => Ok(GroupSpec::Cyclic(n)),
            'D' => Ok(GroupSpec::Dihedral(n)),
            'S' => Ok(GroupSpec::Symmetric(n)),
            'A' => Ok(GroupSpec::Alternating(n)),
            _ => Err(Error::GroupSpec(s.to_string())),
        }
    }
}

impl Serialize for GroupSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for GroupSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A finite group stored as an n×n multiplication table.
#[derive(Clone, Debug, PartialEq)]
pub struct Group {
    spec: GroupSpec,
    order: usize,
    mult: Vec<usize>,
    inv: Vec<usize>,
    identity: usize,
    labels: Vec<String>,
    perms: Option<Vec<Vec<usize>>>,
}

impl Group {
    /// Assembles a group from raw tables without checking the axioms.
    ///
    /// Intended for deserialization and for exercising
    /// [`verify_group_axioms`] on corrupted tables.
    pub fn from_table(
        spec: GroupSpec,
        labels: Vec<String>,
        mult: Vec<usize>,
        inv: Vec<usize>,
    ) -> Result<Self> {
        let n = labels.len();
        if n == 0 || mult.len() != n * n || inv.len() != n {
            return Err(Error::Shape(format!(
                "table for {n} labels has mult len {} and inv len {}",
                mult.len(),
                inv.len()
            )));
        }
        Ok(Group {
            spec,
            order: n,
            mult,
            inv,
            identity: 0,
            labels,
            perms: None,
        })
    }

    pub fn spec(&self) -> GroupSpec {
        self.spec
    }

    pub fn kind(&self) -> GroupKind {
        self.spec.kind()
    }

    pub fn name(&self) -> String {
        self.spec.to_string()
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    #[inline]
    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.mult[a * self.order + b]
    }

    #[inline]
    pub fn inv(&self, g: usize) -> usize {
        self.inv[g]
    }

    /// Row-major multiplication table.
    pub fn mult_table(&self) -> &[usize] {
        &self.mult
    }

    pub fn inv_table(&self) -> &[usize] {
        &self.inv
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, g: usize) -> &str {
        &self.labels[g]
    }

    /// One-line notation (0-based images) for permutation groups.
    pub fn permutation(&self, g: usize) -> Option<&[usize]> {
        self.perms.as_ref().map(|p| p[g].as_slice())
    }

    /// Degree of the permutation action, if this is a permutation group.
    pub fn degree(&self) -> Option<usize> {
        self.perms.as_ref().map(|p| p[0].len())
    }

    pub fn is_abelian(&self) -> bool {
        self.find_noncommuting_pair().is_none()
    }

    pub fn find_noncommuting_pair(&self) -> Option<(usize, usize)> {
        let n = self.order;
        (0..n)
            .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
            .find(|&(a, b)| self.mul(a, b) != self.mul(b, a))
    }

    /// Index of `g^k`.
    pub fn pow(&self, g: usize, k: usize) -> usize {
        (0..k).fold(self.identity, |acc, _| self.mul(acc, g))
    }

    /// Reindexes the elements: element `g` of `self` becomes `perm[g]`.
    ///
    /// `perm` must be a permutation of `0..n` fixing the identity.
    pub fn relabel(&self, perm: &[usize]) -> Result<Group> {
        let n = self.order;
        if perm.len() != n || perm[self.identity] != self.identity {
            return Err(Error::InvalidArgument(
                "relabeling must be a permutation fixing the identity".into(),
            ));
        }
        let mut seen = vec![false; n];
        for &p in perm {
            if p >= n || std::mem::replace(&mut seen[p], true) {
                return Err(Error::InvalidArgument("relabeling is not a permutation".into()));
            }
        }
        let mut mult = vec![0; n * n];
        let mut inv = vec![0; n];
        let mut labels = vec![String::new(); n];
        for a in 0..n {
            inv[perm[a]] = perm[self.inv(a)];
            labels[perm[a]] = self.labels[a].clone();
            for b in 0..n {
                mult[perm[a] * n + perm[b]] = perm[self.mul(a, b)];
            }
        }
        let perms = self.perms.as_ref().map(|ps| {
            let mut out = vec![Vec::new(); n];
            for (a, p) in ps.iter().enumerate() {
                out[perm[a]] = p.clone();
            }
            out
        });
        Ok(Group {
            spec: self.spec,
            order: n,
            mult,
            inv,
            identity: self.identity,
            labels,
            perms,
        })
    }

    pub fn to_document(&self) -> GroupDocument {
        GroupDocument {
            order: self.order,
            kind: self.kind(),
            labels: self.labels.clone(),
            mult: self.mult.clone(),
            inv: self.inv.clone(),
        }
    }

    /// Rebuilds the canonical group named by the document and checks that
    /// the stored tables agree with it.
    pub fn from_document(doc: &GroupDocument) -> Result<Group> {
        let spec = spec_from_kind_order(doc.kind, doc.order)?;
        let g = spec.build_with_cap(doc.order.max(DEFAULT_ORDER_CAP))?;
        if g.mult != doc.mult || g.inv != doc.inv || g.labels != doc.labels {
            return Err(Error::InvalidArgument(format!(
                "tables in document do not match canonical {spec}"
            )));
        }
        Ok(g)
    }
}

fn spec_from_kind_order(kind: GroupKind, order: usize) -> Result<GroupSpec> {
    let bad = || Error::InvalidArgument(format!("no {kind:?} group of order {order}"));
    match kind {
        GroupKind::Cyclic => Ok(GroupSpec::Cyclic(order)),
        GroupKind::Dihedral if order.is_multiple_of(2) && order > 0 => Ok(GroupSpec::Dihedral(order / 2)),
        GroupKind::Symmetric => (1..=20)
            .find(|&k| factorial(k) == order)
            .map(GroupSpec::Symmetric)
            .ok_or_else(bad),
        GroupKind::Alternating => (3..=20)
            .find(|&k| factorial(k) / 2 == order)
            .map(GroupSpec::Alternating)
            .ok_or_else(bad),
        _ => Err(bad()),
    }
}

/// Serialized form: `{order, kind, labels, mult, inv}` with `mult` row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupDocument {
    pub order: usize,
    pub kind: GroupKind,
    pub labels: Vec<String>,
    pub mult: Vec<usize>,
    pub inv: Vec<usize>,
}

pub(crate) fn factorial(k: usize) -> usize {
    (1..=k).fold(1usize, |acc, i| acc.saturating_mul(i))
}

pub fn make_cyclic(n: usize) -> Result<Group> {
    if n == 0 {
        return Err(Error::InvalidArgument("cyclic group order must be >= 1".into()));
    }
    let mult = (0..n * n).map(|ij| (ij / n + ij % n) % n).collect();
    let inv = (0..n).map(|i| (n - i) % n).collect();
    let labels = (0..n).map(rotation_label).collect();
    Ok(Group {
        spec: GroupSpec::Cyclic(n),
        order: n,
        mult,
        inv,
        identity: 0,
        labels,
        perms: None,
    })
}

fn rotation_label(i: usize) -> String {
    match i {
        0 => "e".to_string(),
        1 => "r".to_string(),
        _ => format!("r^{i}"),
    }
}

/// Dihedral group of order 2n. Index `i < n` is `r^i`, index `n + i` is `r^i s`.
pub fn make_dihedral(n: usize) -> Result<Group> {
    if n == 0 {
        return Err(Error::InvalidArgument("dihedral parameter must be >= 1".into()));
    }
    if n.is_multiple_of(2) {
        log::debug!("D{n}: even n, closed-form catalog is incomplete; use discovery");
    }
    let order = 2 * n;
    let split = |g: usize| (g % n, g / n);
    let join = |rot: usize, refl: usize| rot + refl * n;
    let mut mult = vec![0; order * order];
    for a in 0..order {
        let (i, x) = split(a);
        for b in 0..order {
            let (j, y) = split(b);
            // r^i s^x r^j s^y = r^(i ± j) s^(x+y), using s r^j = r^-j s
            let rot = if x == 0 { (i + j) % n } else { (i + n - j) % n };
            mult[a * order + b] = join(rot, x ^ y);
        }
    }
    let inv = (0..order)
        .map(|g| {
            let (i, x) = split(g);
            if x == 0 {
                (n - i) % n
            } else {
                g
            }
        })
        .collect();
    let labels = (0..order)
        .map(|g| {
            let (i, x) = split(g);
            match (i, x) {
                (_, 0) => rotation_label(i),
                (0, _) => "s".to_string(),
                (1, _) => "rs".to_string(),
                _ => format!("r^{i}s"),
            }
        })
        .collect();
    Ok(Group {
        spec: GroupSpec::Dihedral(n),
        order,
        mult,
        inv,
        identity: 0,
        labels,
        perms: None,
    })
}

pub fn make_symmetric(k: usize) -> Result<Group> {
    make_symmetric_capped(k, DEFAULT_ORDER_CAP)
}

pub fn make_symmetric_capped(k: usize, cap: usize) -> Result<Group> {
    if k == 0 {
        return Err(Error::InvalidArgument("symmetric degree must be >= 1".into()));
    }
    let order = factorial(k);
    if order > cap {
        return Err(Error::OrderCap { order, cap });
    }
    permutation_group(GroupSpec::Symmetric(k), all_permutations(k))
}

pub fn make_alternating(k: usize) -> Result<Group> {
    make_alternating_capped(k, DEFAULT_ORDER_CAP)
}

pub fn make_alternating_capped(k: usize, cap: usize) -> Result<Group> {
    if k < 3 {
        return Err(Error::InvalidArgument("alternating degree must be >= 3".into()));
    }
    let order = factorial(k) / 2;
    if order > cap {
        return Err(Error::OrderCap { order, cap });
    }
    let evens = all_permutations(k)
        .into_iter()
        .filter(|p| permutation_parity(p) == 0)
        .collect();
    permutation_group(GroupSpec::Alternating(k), evens)
}

/// All permutations of `0..k` in lexicographic order.
fn all_permutations(k: usize) -> Vec<Vec<usize>> {
    let mut cur: Vec<usize> = (0..k).collect();
    let mut out = vec![cur.clone()];
    // classic next-permutation
    while let Some(i) = (0..k.saturating_sub(1)).rev().find(|&i| cur[i] < cur[i + 1]) {
        let j = (i + 1..k).rev().find(|&j| cur[j] > cur[i]).unwrap();
        cur.swap(i, j);
        cur[i + 1..].reverse();
        out.push(cur.clone());
    }
    out
}

/// 0 for even permutations, 1 for odd, via cycle count.
pub fn permutation_parity(p: &[usize]) -> usize {
    let k = p.len();
    let mut seen = vec![false; k];
    let mut cycles = 0;
    for start in 0..k {
        if seen[start] {
            continue;
        }
        cycles += 1;
        let mut x = start;
        while !seen[x] {
            seen[x] = true;
            x = p[x];
        }
    }
    (k - cycles) % 2
}

/// Cycle notation with 1-based points, `e` for the identity.
pub fn cycle_notation(p: &[usize]) -> String {
    let mut seen = vec![false; p.len()];
    let mut out = String::new();
    for start in 0..p.len() {
        if seen[start] || p[start] == start {
            seen[start] = true;
            continue;
        }
        let mut cycle = Vec::new();
        let mut x = start;
        while !seen[x] {
            seen[x] = true;
            cycle.push((x + 1).to_string());
            x = p[x];
        }
        out.push('(');
        out.push_str(&cycle.join(" "));
        out.push(')');
    }
    if out.is_empty() {
        "e".to_string()
    } else {
        out
    }
}

fn permutation_group(spec: GroupSpec, perms: Vec<Vec<usize>>) -> Result<Group> {
    let n = perms.len();
    let index: HashMap<&[usize], usize> = perms.iter().enumerate().map(|(i, p)| (p.as_slice(), i)).collect();
    let lookup = |p: &[usize]| -> Result<usize> {
        index
            .get(p)
            .copied()
            .ok_or_else(|| Error::InvalidArgument(format!("{spec} is not closed under composition")))
    };
    let k = perms[0].len();
    let mut mult = vec![0; n * n];
    let mut buf = vec![0; k];
    for (a, pa) in perms.iter().enumerate() {
        for (b, pb) in perms.iter().enumerate() {
            // (a ∘ b)(x) = a(b(x))
            for x in 0..k {
                buf[x] = pa[pb[x]];
            }
            mult[a * n + b] = lookup(&buf)?;
        }
    }
    let mut inv = vec![0; n];
    for (a, pa) in perms.iter().enumerate() {
        for (x, &y) in pa.iter().enumerate() {
            buf[y] = x;
        }
        inv[a] = lookup(&buf)?;
    }
    let labels = perms.iter().map(|p| cycle_notation(p)).collect();
    Ok(Group {
        spec,
        order: n,
        mult,
        inv,
        identity: 0,
        labels,
        perms: Some(perms),
    })
}

/// Partition of the elements into conjugacy classes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConjugacyClasses {
    pub class_of: Vec<usize>,
    pub classes: Vec<Vec<usize>>,
}

impl ConjugacyClasses {
    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.classes.iter().map(Vec::len).collect()
    }
}

/// Classes are ordered by their smallest element index.
pub fn conjugacy_classes(g: &Group) -> ConjugacyClasses {
    let n = g.order();
    let mut class_of = vec![usize::MAX; n];
    let mut classes = Vec::new();
    for h in 0..n {
        if class_of[h] != usize::MAX {
            continue;
        }
        let id = classes.len();
        let mut members = Vec::new();
        for x in 0..n {
            let c = g.mul(g.mul(x, h), g.inv(x));
            if class_of[c] == usize::MAX {
                class_of[c] = id;
                members.push(c);
            }
        }
        members.sort_unstable();
        classes.push(members);
    }
    ConjugacyClasses { class_of, classes }
}

/// Outcome of one axiom check: `None` when it holds, otherwise the first
/// offending index tuple.
pub type AxiomOutcome = Option<Vec<usize>>;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AxiomReport {
    pub closure: AxiomOutcome,
    pub identity: AxiomOutcome,
    pub inverses: AxiomOutcome,
    pub associativity: AxiomOutcome,
}

impl AxiomReport {
    pub fn all_pass(&self) -> bool {
        self.closure.is_none()
            && self.identity.is_none()
            && self.inverses.is_none()
            && self.associativity.is_none()
    }
}

/// Exhaustively checks closure, identity, inverses and associativity.
///
/// Associativity is an O(n³) scan and is skipped (reported as failing on
/// `[]`) when closure already fails, since out-of-range entries cannot be
/// composed.
pub fn verify_group_axioms(g: &Group) -> AxiomReport {
    let n = g.order();
    let e = g.identity();
    let closure = g
        .mult
        .iter()
        .position(|&c| c >= n)
        .map(|i| vec![i / n, i % n])
        .or_else(|| g.inv.iter().position(|&c| c >= n).map(|i| vec![i]));
    let identity = (0..n)
        .find(|&x| g.mul(e, x) != x)
        .map(|x| vec![e, x])
        .or_else(|| (0..n).find(|&x| g.mul(x, e) != x).map(|x| vec![x, e]));
    let inverses = if closure.is_some() {
        Some(Vec::new())
    } else {
        (0..n)
            .find(|&x| g.mul(x, g.inv(x)) != e || g.mul(g.inv(x), x) != e)
            .map(|x| vec![x])
    };
    let associativity = if closure.is_some() {
        Some(Vec::new())
    } else {
        first_associativity_failure(g)
    };
    AxiomReport {
        closure,
        identity,
        inverses,
        associativity,
    }
}

fn first_associativity_failure(g: &Group) -> Option<Vec<usize>> {
    let n = g.order();
    for a in 0..n {
        for b in 0..n {
            let ab = g.mul(a, b);
            let row_ab = &g.mult[ab * n..(ab + 1) * n];
            let row_b = &g.mult[b * n..(b + 1) * n];
            for c in 0..n {
                if row_ab[c] != g.mul(a, row_b[c]) {
                    return Some(vec![a, b, c]);
                }
            }
        }
    }
    None
}
