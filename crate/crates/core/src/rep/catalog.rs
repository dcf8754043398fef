use std::cmp::Ordering;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::basis::{hidden_rep_bases, rep_space_basis, HiddenRepBasis, RepBasis};
use super::closed_form::{
    cyclic_2d_irrep, dihedral_2d_irrep, sign_irrep, symmetric_standard_irrep, tensor_1d_irrep, trivial_irrep,
};
use super::discover::{discover_raw, DiscoveryOptions};
use super::{Irrep, IrrepCheck};
use crate::container::Container;
use crate::error::{Error, Result};
use crate::group::{Group, GroupSpec};

pub const CATALOG_FORMAT: &str = "gcr-irrep-catalog";

/// Entries closer than this are treated as equal when comparing characters.
const CHARACTER_MATCH_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CatalogMode {
    /// Closed-form matrices wherever a formula exists, discovery for the rest.
    #[default]
    Auto,
    /// Every irrep comes from numerical discovery; closed forms only supply
    /// names.
    Discover,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CatalogOptions {
    pub mode: CatalogMode,
    pub discovery: DiscoveryOptions,
}

/// The complete list of real irreps of one group, in canonical order:
/// ascending dimension, then characters in descending lexicographic order
/// (so `trivial` comes first).
#[derive(Clone, Debug)]
pub struct IrrepCatalog {
    group: GroupSpec,
    order: usize,
    mode: CatalogMode,
    irreps: Vec<Irrep>,
    complete: bool,
}

impl IrrepCatalog {
    pub fn build(group: &Group, opts: &CatalogOptions) -> Result<IrrepCatalog> {
        if opts.mode == CatalogMode::Auto {
            if let Some(irreps) = closed_form_catalog(group)? {
                return Ok(IrrepCatalog::assemble(group, irreps, CatalogMode::Auto));
            }
        }
        let raw = discover_raw(group, &opts.discovery)?;
        IrrepCatalog::from_discovered(group, raw, opts.mode)
    }

    pub(crate) fn from_discovered(group: &Group, raw: Vec<Irrep>, mode: CatalogMode) -> Result<IrrepCatalog> {
        let hints = closed_form_hints(group)?;
        let mut named = Vec::with_capacity(raw.len());
        let mut unnamed = Vec::new();
        for mut irrep in raw {
            match hints
                .iter()
                .find(|h| same_character(h.character(), irrep.character()))
            {
                Some(h) if mode == CatalogMode::Auto => named.push(h.clone()),
                Some(h) => {
                    irrep.set_name(h.name());
                    named.push(irrep);
                }
                None => unnamed.push(irrep),
            }
        }
        unnamed.sort_by(canonical_cmp);
        let mut i = 0;
        while i < unnamed.len() {
            let d = unnamed[i].dim();
            let j = i + unnamed[i..].iter().take_while(|r| r.dim() == d).count();
            for (s, irrep) in unnamed[i..j].iter_mut().enumerate() {
                if j - i == 1 {
                    irrep.set_name(format!("{d}d"));
                } else {
                    irrep.set_name(format!("{d}d_{}", suffix(s)));
                }
            }
            i = j;
        }
        named.extend(unnamed);
        Ok(IrrepCatalog::assemble(group, named, mode))
    }

    fn assemble(group: &Group, mut irreps: Vec<Irrep>, mode: CatalogMode) -> IrrepCatalog {
        irreps.sort_by(canonical_cmp);
        let complete = irreps.iter().map(Irrep::rep_space_rank).sum::<usize>() == group.order();
        IrrepCatalog {
            group: group.spec(),
            order: group.order(),
            mode,
            irreps,
            complete,
        }
    }

    pub fn group_spec(&self) -> GroupSpec {
        self.group
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn mode(&self) -> CatalogMode {
        self.mode
    }

    /// Whether `Σ d²/⟨χ,χ⟩` over the catalog equals the group order.
    pub fn complete(&self) -> bool {
        self.complete
    }

    pub fn rank_total(&self) -> usize {
        self.irreps.iter().map(Irrep::rep_space_rank).sum()
    }

    pub fn irreps(&self) -> &[Irrep] {
        &self.irreps
    }

    pub fn len(&self) -> usize {
        self.irreps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.irreps.is_empty()
    }

    pub fn names(&self) -> Vec<&str> {
        self.irreps.iter().map(Irrep::name).collect()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.irreps.iter().map(Irrep::dim).collect()
    }

    pub fn get(&self, name: &str) -> Result<&Irrep> {
        self.irreps
            .iter()
            .find(|r| r.name() == name)
            .ok_or_else(|| Error::UnknownIrrep(name.to_string()))
    }

    pub fn nontrivial(&self) -> impl Iterator<Item = &Irrep> {
        self.irreps.iter().filter(|r| !r.is_trivial())
    }

    pub fn check_all(&self, group: &Group) -> Vec<IrrepCheck> {
        self.irreps.iter().map(|r| r.check(group)).collect()
    }

    pub fn rep_bases(&self) -> Result<Vec<RepBasis>> {
        self.irreps.iter().map(rep_space_basis).collect()
    }

    pub fn hidden_bases(&self, group: &Group) -> Result<Vec<HiddenRepBasis>> {
        self.irreps.iter().map(|r| hidden_rep_bases(group, r)).collect()
    }

    pub fn to_container(&self) -> Container {
        let flags: Vec<_> = self
            .irreps
            .iter()
            .map(|r| {
                json!({
                    "faithful": r.faithful(),
                    "orthogonal": r.orthogonal(),
                    "real_type": r.real_type(),
                })
            })
            .collect();
        let meta = json!({
            "group": self.group.to_string(),
            "order": self.order,
            "mode": self.mode,
            "complete": self.complete,
            "names": self.names(),
            "dims": self.dims(),
            "flags": flags,
        });
        let mut c = Container::new(CATALOG_FORMAT, meta);
        for r in &self.irreps {
            let d = r.dim();
            let mut data = Vec::with_capacity(self.order * d * d);
            for m in r.matrices() {
                data.extend(m.transpose().iter());
            }
            c.push(r.name(), vec![self.order, d, d], data);
        }
        c
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.to_container().write(path)
    }

    /// Reads a catalog written by [`IrrepCatalog::save`] and revalidates every
    /// irrep against `group`.
    pub fn load(path: &Path, group: &Group) -> Result<IrrepCatalog> {
        let c = Container::read_format(path, CATALOG_FORMAT)?;
        let bad = |reason: String| Error::Format {
            path: path.to_path_buf(),
            reason,
        };
        let spec: GroupSpec = c.meta["group"]
            .as_str()
            .ok_or_else(|| bad("missing group".into()))?
            .parse()?;
        if spec != group.spec() {
            return Err(bad(format!("catalog is for {spec}, not {}", group.spec())));
        }
        let mode: CatalogMode = serde_json::from_value(c.meta["mode"].clone())?;
        let n = group.order();
        let mut irreps = Vec::with_capacity(c.tensors.len());
        for t in &c.tensors {
            let [rows, d, d2] = t.shape[..] else {
                return Err(bad(format!("tensor `{}` is not 3-dimensional", t.name)));
            };
            if rows != n || d != d2 {
                return Err(bad(format!("tensor `{}` has shape {:?}", t.name, t.shape)));
            }
            let mats = t
                .data
                .chunks_exact(d * d)
                .map(|chunk| DMatrix::from_row_slice(d, d, chunk))
                .collect();
            irreps.push(Irrep::from_matrices(t.name.clone(), group, mats)?);
        }
        Ok(IrrepCatalog::assemble(group, irreps, mode))
    }
}

/// Fully closed-form catalogs: cyclic groups and odd dihedral groups.
fn closed_form_catalog(group: &Group) -> Result<Option<Vec<Irrep>>> {
    let irreps = match group.spec() {
        GroupSpec::Cyclic(n) => {
            let mut v = vec![trivial_irrep(group)];
            if n % 2 == 0 {
                v.push(sign_irrep(group)?);
            }
            for k in (1..n).take_while(|k| 2 * k < n) {
                v.push(cyclic_2d_irrep(group, k)?);
            }
            v
        }
        GroupSpec::Dihedral(n) if n % 2 == 1 => {
            let mut v = vec![trivial_irrep(group), sign_irrep(group)?];
            for k in (1..n).take_while(|k| 2 * k < n) {
                v.push(dihedral_2d_irrep(group, k)?);
            }
            v
        }
        _ => return Ok(None),
    };
    Ok(Some(irreps))
}

/// Every closed-form irrep available for the group, with duplicate
/// characters removed (e.g. `standard_sign ≅ standard` for `S_3`).
fn closed_form_hints(group: &Group) -> Result<Vec<Irrep>> {
    let mut hints = vec![trivial_irrep(group)];
    let sign = sign_irrep(group).ok();
    if let Some(s) = &sign {
        hints.push(s.clone());
    }
    match group.spec() {
        GroupSpec::Cyclic(n) => {
            for k in (1..n).take_while(|k| 2 * k < n) {
                hints.push(cyclic_2d_irrep(group, k)?);
            }
        }
        GroupSpec::Dihedral(n) => {
            for k in (1..n).take_while(|k| 2 * k < n) {
                hints.push(dihedral_2d_irrep(group, k)?);
            }
        }
        GroupSpec::Symmetric(k) if k >= 3 => {
            let std = symmetric_standard_irrep(group)?;
            let sign = sign.expect("symmetric groups have a sign irrep");
            hints.push(tensor_1d_irrep(group, &std, &sign)?);
            hints.insert(hints.len() - 1, std);
        }
        _ => {}
    }
    let mut unique: Vec<Irrep> = Vec::with_capacity(hints.len());
    for h in hints {
        if !unique
            .iter()
            .any(|u| same_character(u.character(), h.character()))
        {
            unique.push(h);
        }
    }
    Ok(unique)
}

fn same_character(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= CHARACTER_MATCH_TOL)
}

fn canonical_cmp(a: &Irrep, b: &Irrep) -> Ordering {
    a.dim().cmp(&b.dim()).then_with(|| {
        a.character()
            .iter()
            .zip(b.character())
            .find(|(x, y)| (*x - *y).abs() > 1e-6)
            .map_or(Ordering::Equal, |(x, y)| y.total_cmp(x))
    })
}

fn suffix(i: usize) -> String {
    let mut s = String::new();
    let mut i = i;
    loop {
        s.insert(0, (b'a' + (i % 26) as u8) as char);
        if i < 26 {
            break;
        }
        i = i / 26 - 1;
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{make_alternating, make_cyclic, make_dihedral, make_symmetric};
    use crate::rep::discover_irreps;

    #[test]
    fn cyclic_six_real_catalog() {
        let g = make_cyclic(6).unwrap();
        let cat = IrrepCatalog::build(&g, &CatalogOptions::default()).unwrap();
        assert_eq!(cat.names(), vec!["trivial", "sign", "2d_k=1", "2d_k=2"]);
        assert!(cat.complete());
        assert_eq!(cat.rank_total(), 6);
    }

    #[test]
    fn symmetric_names() {
        let g = make_symmetric(5).unwrap();
        let cat = IrrepCatalog::build(&g, &CatalogOptions::default()).unwrap();
        assert_eq!(cat.dims(), vec![1, 1, 4, 4, 5, 5, 6]);
        let mut names = cat.names();
        names.sort_unstable();
        assert_eq!(
            names,
            vec![
                "5d_a",
                "5d_b",
                "6d",
                "sign",
                "standard",
                "standard_sign",
                "trivial"
            ]
        );
        assert!(cat.complete());

        let s3 = make_symmetric(3).unwrap();
        let cat = IrrepCatalog::build(&s3, &CatalogOptions::default()).unwrap();
        assert_eq!(cat.names(), vec!["trivial", "sign", "standard"]);
    }

    #[test]
    fn alternating_five() {
        let g = make_alternating(5).unwrap();
        let cat = IrrepCatalog::build(&g, &CatalogOptions::default()).unwrap();
        assert_eq!(cat.dims(), vec![1, 3, 3, 4, 5]);
        assert_eq!(cat.names(), vec!["trivial", "3d_a", "3d_b", "4d", "5d"]);
    }

    #[test]
    fn discovery_matches_closed_form_on_dihedral() {
        let g = make_dihedral(7).unwrap();
        let closed = IrrepCatalog::build(&g, &CatalogOptions::default()).unwrap();
        let found = discover_irreps(&g, &DiscoveryOptions::default()).unwrap();
        assert_eq!(closed.names(), found.names());
        for (a, b) in closed.irreps().iter().zip(found.irreps()) {
            assert!(same_character(a.character(), b.character()));
        }
    }

    #[test]
    fn even_dihedral_uses_discovery() {
        let g = make_dihedral(4).unwrap();
        let cat = IrrepCatalog::build(&g, &CatalogOptions::default()).unwrap();
        assert_eq!(cat.dims(), vec![1, 1, 1, 1, 2]);
        assert!(cat.names().contains(&"sign"));
        assert!(cat.names().contains(&"2d_k=1"));
        assert!(cat.complete());
    }

    #[test]
    fn save_and_load() {
        let g = make_symmetric(4).unwrap();
        let cat = IrrepCatalog::build(&g, &CatalogOptions::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s4.bin");
        cat.save(&path).unwrap();
        let back = IrrepCatalog::load(&path, &g).unwrap();
        assert_eq!(back.names(), cat.names());
        for (a, b) in back.irreps().iter().zip(cat.irreps()) {
            for (x, y) in a.matrices().iter().zip(b.matrices()) {
                assert_eq!(x, y);
            }
        }
        let other = make_cyclic(24).unwrap();
        assert!(IrrepCatalog::load(&path, &other).is_err());
    }

    #[test]
    fn suffixes() {
        assert_eq!(suffix(0), "a");
        assert_eq!(suffix(25), "z");
        assert_eq!(suffix(26), "aa");
    }
}
