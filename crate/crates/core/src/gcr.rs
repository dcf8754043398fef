//! Composition through characters: the network-free oracle.
//!
//! For a weighted set of irreps the logit of output `c` on input `(a, b)` is
//! `Σ w·χ(a b c⁻¹)`. Each character peaks at the kernel of its irrep, so a
//! faithful irrep with positive weight makes `c = ab` the unique argmax.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::Group;
use crate::rep::Irrep;

/// Largest order for which a full `n³` tensor is materialized.
pub const MAX_MATERIALIZED_ORDER: usize = 256;

/// Relative slack when deciding whether two logits tie.
const TIE_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct GcrSpec<'a> {
    group: &'a Group,
    terms: Vec<(&'a Irrep, f64)>,
    class_fn: Vec<f64>,
}

impl<'a> GcrSpec<'a> {
    pub fn new(group: &'a Group, terms: Vec<(&'a Irrep, f64)>) -> Result<GcrSpec<'a>> {
        let n = group.order();
        for (irrep, w) in &terms {
            if irrep.order() != n {
                return Err(Error::Shape(format!(
                    "irrep `{}` has {} elements, group has {n}",
                    irrep.name(),
                    irrep.order()
                )));
            }
            if !w.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "weight of `{}` is not finite",
                    irrep.name()
                )));
            }
        }
        let mut class_fn = vec![0.0; n];
        for (irrep, w) in &terms {
            for (f, chi) in class_fn.iter_mut().zip(irrep.character()) {
                *f += w * chi;
            }
        }
        Ok(GcrSpec {
            group,
            terms,
            class_fn,
        })
    }

    pub fn single(group: &'a Group, irrep: &'a Irrep) -> Result<GcrSpec<'a>> {
        GcrSpec::new(group, vec![(irrep, 1.0)])
    }

    pub fn group(&self) -> &Group {
        self.group
    }

    pub fn terms(&self) -> &[(&'a Irrep, f64)] {
        &self.terms
    }

    /// Whether some faithful irrep carries positive weight, which guarantees
    /// a unique argmax at `ab`.
    pub fn guarantees_uniqueness(&self) -> bool {
        self.terms.iter().any(|(r, w)| r.faithful() && *w > 0.0)
    }

    /// `g ↦ Σ w·χ(g)`.
    pub fn class_function(&self) -> &[f64] {
        &self.class_fn
    }

    /// Logits over `c` for one input pair.
    pub fn logit_row(&self, a: usize, b: usize, out: &mut [f64]) {
        let ab = self.group.mul(a, b);
        for (c, o) in out.iter_mut().enumerate() {
            *o = self.class_fn[self.group.mul(ab, self.group.inv(c))];
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Oracle,
    Model,
}

/// `L[a][b][c]`, stored with `c` fastest and pairs in row-major `(a, b)`
/// order.
#[derive(Clone, Debug, PartialEq)]
pub struct LogitTensor {
    n: usize,
    data: Vec<f64>,
    provenance: Provenance,
}

impl LogitTensor {
    pub fn from_vec(n: usize, data: Vec<f64>, provenance: Provenance) -> Result<LogitTensor> {
        if data.len() != n * n * n {
            return Err(Error::Shape(format!(
                "{} logits for a group of order {n}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "logit tensor has non-finite entries".into(),
            ));
        }
        Ok(LogitTensor { n, data, provenance })
    }

    /// From an `n × n²` logits matrix whose column `a·n + b` holds the
    /// logits of pair `(a, b)`.
    pub fn from_columns(logits: &DMatrix<f64>, provenance: Provenance) -> Result<LogitTensor> {
        let n = logits.nrows();
        if logits.ncols() != n * n {
            return Err(Error::Shape(format!(
                "logit matrix is {}×{}, expected n × n²",
                logits.nrows(),
                logits.ncols()
            )));
        }
        LogitTensor::from_vec(n, logits.as_slice().to_vec(), provenance)
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn get(&self, a: usize, b: usize, c: usize) -> f64 {
        self.data[(a * self.n + b) * self.n + c]
    }

    pub fn row(&self, a: usize, b: usize) -> &[f64] {
        let start = (a * self.n + b) * self.n;
        &self.data[start..start + self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }
}

pub fn gcr_logit_tensor(spec: &GcrSpec) -> Result<LogitTensor> {
    let n = spec.group.order();
    if n > MAX_MATERIALIZED_ORDER {
        return Err(Error::InvalidArgument(format!(
            "refusing to materialize an {n}³ logit tensor; stream rows with GcrSpec::logit_row"
        )));
    }
    let mut data = vec![0.0; n * n * n];
    for (p, row) in data.chunks_exact_mut(n).enumerate() {
        spec.logit_row(p / n, p % n, row);
    }
    LogitTensor::from_vec(n, data, Provenance::Oracle)
}

/// Index of the largest entry (lowest index on ties) and whether it is the
/// only one within the tie tolerance.
pub fn argmax_unique(values: &[f64]) -> (usize, bool) {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    let top = values[best];
    let slack = TIE_TOL * top.abs().max(1.0);
    let ties = values.iter().filter(|&&v| top - v <= slack).count();
    (best, ties == 1)
}

pub fn gcr_compose(spec: &GcrSpec, a: usize, b: usize) -> (usize, bool) {
    let mut row = vec![0.0; spec.group.order()];
    spec.logit_row(a, b, &mut row);
    argmax_unique(&row)
}

/// `Σ_ij M_ij ρ(c⁻¹)_ji`, which equals `tr(M ρ(c⁻¹))`.
pub fn trace_readoff(m: &DMatrix<f64>, irrep: &Irrep, group: &Group, c: usize) -> Result<f64> {
    let d = irrep.dim();
    if m.nrows() != d || m.ncols() != d {
        return Err(Error::Shape(format!(
            "readoff matrix is {}×{}, irrep `{}` has dimension {d}",
            m.nrows(),
            m.ncols(),
            irrep.name()
        )));
    }
    let r = irrep.matrix(group.inv(c));
    Ok(m.iter().zip(r.transpose().iter()).map(|(x, y)| x * y).sum())
}

/// Composition accuracy of a single-irrep oracle.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OracleStats {
    pub irrep: String,
    pub dim: usize,
    pub faithful: bool,
    pub pairs: usize,
    pub accuracy: f64,
    pub unique_fraction: f64,
}

/// Runs the oracle over all pairs, or over a deterministic strided sample of
/// at most `sample` pairs when `exhaustive` is false.
pub fn oracle_stats(spec: &GcrSpec, name: &str, exhaustive: bool, sample: usize) -> OracleStats {
    let g = spec.group;
    let n = g.order();
    let total = n * n;
    let stride = if exhaustive || total <= sample {
        1
    } else {
        total.div_ceil(sample)
    };
    let mut row = vec![0.0; n];
    let (mut pairs, mut correct, mut unique) = (0usize, 0usize, 0usize);
    for p in (0..total).step_by(stride) {
        let (a, b) = (p / n, p % n);
        spec.logit_row(a, b, &mut row);
        let (c, u) = argmax_unique(&row);
        pairs += 1;
        correct += usize::from(c == g.mul(a, b));
        unique += usize::from(u);
    }
    let (dim, faithful) = match spec.terms.as_slice() {
        [(r, _)] => (r.dim(), r.faithful()),
        _ => (0, spec.guarantees_uniqueness()),
    };
    OracleStats {
        irrep: name.to_string(),
        dim,
        faithful,
        pairs,
        accuracy: correct as f64 / pairs as f64,
        unique_fraction: unique as f64 / pairs as f64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{make_cyclic, make_symmetric};
    use crate::rep::{cyclic_2d_irrep, sign_irrep, symmetric_standard_irrep, trivial_irrep};

    #[test]
    fn trivial_tensor_is_constant() {
        let g = make_cyclic(5).unwrap();
        let t = trivial_irrep(&g);
        let l = gcr_logit_tensor(&GcrSpec::single(&g, &t).unwrap()).unwrap();
        assert!(l.as_slice().iter().all(|&v| v == 1.0));
        assert_eq!(gcr_compose(&GcrSpec::single(&g, &t).unwrap(), 1, 2), (0, false));
    }

    #[test]
    fn cyclic_cosine_closed_form() {
        let g = make_cyclic(13).unwrap();
        let r = cyclic_2d_irrep(&g, 3).unwrap();
        let l = gcr_logit_tensor(&GcrSpec::single(&g, &r).unwrap()).unwrap();
        let w = 2.0 * std::f64::consts::PI * 3.0 / 13.0;
        for a in 0..13 {
            for b in 0..13 {
                for c in 0..13 {
                    let expect = 2.0 * (w * (a as f64 + b as f64 - c as f64)).cos();
                    assert!((l.get(a, b, c) - expect).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn s3_standard_composes_every_pair() {
        let g = make_symmetric(3).unwrap();
        let std = symmetric_standard_irrep(&g).unwrap();
        let spec = GcrSpec::single(&g, &std).unwrap();
        assert!(spec.guarantees_uniqueness());
        for a in 0..6 {
            for b in 0..6 {
                assert_eq!(gcr_compose(&spec, a, b), (g.mul(a, b), true));
            }
        }
    }

    #[test]
    fn sign_alone_is_ambiguous() {
        let g = make_symmetric(5).unwrap();
        let sign = sign_irrep(&g).unwrap();
        let spec = GcrSpec::single(&g, &sign).unwrap();
        let (c, unique) = gcr_compose(&spec, 3, 7);
        assert!(!unique);
        assert_eq!(sign.character()[c], sign.character()[g.mul(3, 7)]);
    }

    #[test]
    fn weighted_tensor_is_linear() {
        let g = make_symmetric(3).unwrap();
        let std = symmetric_standard_irrep(&g).unwrap();
        let sign = sign_irrep(&g).unwrap();
        let both = gcr_logit_tensor(&GcrSpec::new(&g, vec![(&std, 0.5), (&sign, -2.0)]).unwrap()).unwrap();
        let l1 = gcr_logit_tensor(&GcrSpec::single(&g, &std).unwrap()).unwrap();
        let l2 = gcr_logit_tensor(&GcrSpec::single(&g, &sign).unwrap()).unwrap();
        for i in 0..216 {
            let expect = 0.5 * l1.as_slice()[i] - 2.0 * l2.as_slice()[i];
            assert_eq!(both.as_slice()[i], expect);
        }
    }

    #[test]
    fn trace_readoff_examples() {
        let g = make_symmetric(3).unwrap();
        let std = symmetric_standard_irrep(&g).unwrap();
        let eye = DMatrix::identity(2, 2);
        assert!((trace_readoff(&eye, &std, &g, 0).unwrap() - 2.0).abs() < 1e-15);
        let zero = DMatrix::zeros(2, 2);
        assert_eq!(trace_readoff(&zero, &std, &g, 4).unwrap(), 0.0);
        let (a, b) = (2, 5);
        let m = std.matrix(g.mul(a, b));
        for c in 0..6 {
            let expect = std.character()[g.mul(g.mul(a, b), g.inv(c))];
            assert!((trace_readoff(m, &std, &g, c).unwrap() - expect).abs() < 1e-12);
        }
        assert!(trace_readoff(&DMatrix::zeros(3, 3), &std, &g, 0).is_err());
    }

    #[test]
    fn non_finite_weight_rejected() {
        let g = make_cyclic(3).unwrap();
        let t = trivial_irrep(&g);
        assert!(GcrSpec::new(&g, vec![(&t, f64::NAN)]).is_err());
    }
}
