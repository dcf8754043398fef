//! Variance of element-indexed matrices by representation subspace.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::frob2;
use crate::rep::{rep_space_basis, IrrepCatalog, RepBasis};

/// Split of an `n × k` matrix across irrep subspaces of `ℝⁿ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingFve {
    /// Fraction of the mean-removed matrix per non-trivial irrep.
    pub fractions: BTreeMap<String, f64>,
    /// Mean-removed variance outside every listed irrep.
    pub residual: f64,
    /// Share of the uncentered squared norm carried by the mean over the
    /// element axis.
    pub trivial: f64,
}

impl EmbeddingFve {
    pub fn total(&self) -> f64 {
        self.fractions.values().sum::<f64>() + self.residual
    }

    /// Combined fraction of the named irreps.
    pub fn combined(&self, names: &[String]) -> f64 {
        names.iter().filter_map(|k| self.fractions.get(k)).sum()
    }
}

/// Bases of every non-trivial catalog irrep, in catalog order.
pub fn nontrivial_bases(catalog: &IrrepCatalog) -> Result<Vec<RepBasis>> {
    catalog.nontrivial().map(rep_space_basis).collect()
}

/// `w` is `n × k` with rows indexed by group elements; pass `w_aᵀ`, `w_bᵀ`
/// or `w_unembed`.
pub fn embedding_fve(w: &DMatrix<f64>, catalog: &IrrepCatalog) -> Result<EmbeddingFve> {
    embedding_fve_with(w, &nontrivial_bases(catalog)?)
}

pub fn embedding_fve_with(w: &DMatrix<f64>, bases: &[RepBasis]) -> Result<EmbeddingFve> {
    let n = w.nrows();
    if let Some(b) = bases.iter().find(|b| b.order() != n) {
        return Err(Error::Shape(format!(
            "matrix has {n} element rows, basis `{}` has {}",
            b.irrep_name(),
            b.order()
        )));
    }
    let total = frob2(w);
    if total == 0.0 {
        return Err(Error::ZeroNorm("embedding_fve"));
    }
    let mut centered = w.clone();
    for mut col in centered.column_iter_mut() {
        let mean = col.mean();
        col.add_scalar_mut(-mean);
    }
    let var = frob2(&centered);
    let trivial = ((total - var) / total).clamp(0.0, 1.0);
    if var == 0.0 {
        return Err(Error::ZeroNorm("embedding_fve (mean removed)"));
    }
    let fractions: BTreeMap<String, f64> = bases
        .iter()
        .map(|b| {
            let f = frob2(&b.coefficients(&centered)) / var;
            (b.irrep_name().to_string(), f.clamp(0.0, 1.0))
        })
        .collect();
    let residual = (1.0 - fractions.values().sum::<f64>()).max(0.0);
    Ok(EmbeddingFve {
        fractions,
        residual,
        trivial,
    })
}
