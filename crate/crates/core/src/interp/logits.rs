//! Logit attribution against character directions.
//!
//! The character direction of a class function `f` is the tensor
//! `T_f[a,b,c] = f(abc⁻¹)`. Its inner product with a logit tensor only needs
//! the logits summed over each fibre `{(a,b) : ab = x}`, so every quantity
//! here is computed from an `n × n` fibre-sum matrix plus one squared norm.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::gcr::LogitTensor;
use crate::group::Group;
use crate::linalg::orthonormal_columns;
use crate::rep::Irrep;

/// Default similarity above which an irrep counts as key.
pub const KEY_THRESHOLD: f64 = 0.005;

/// Subtracts, for every `(a, b)`, the mean over `c`.
pub fn center_logits(l: &LogitTensor) -> LogitTensor {
    let n = l.order();
    let mut out = l.clone();
    for row in out.as_mut_slice().chunks_mut(n) {
        let mean = row.iter().sum::<f64>() / n as f64;
        row.iter_mut().for_each(|v| *v -= mean);
    }
    out
}

/// `f − mean(f)`: the centered form of a class-function direction.
fn centered(f: &[f64]) -> Vec<f64> {
    let mean = f.iter().sum::<f64>() / f.len() as f64;
    f.iter().map(|v| v - mean).collect()
}

/// Sufficient statistics of a centered logit tensor for character
/// attribution.
#[derive(Clone, Debug)]
pub struct LogitStats {
    /// `F[x, c] = Σ_{ab = x} L̄(a,b,c)` with `L̄` the centered logits.
    fibre: DMatrix<f64>,
    norm2: f64,
}

impl LogitStats {
    pub(crate) fn zeros(n: usize) -> LogitStats {
        LogitStats {
            fibre: DMatrix::zeros(n, n),
            norm2: 0.0,
        }
    }

    /// Adds the (uncentered) logit row of one pair whose product is `x`.
    pub(crate) fn add_row(&mut self, x: usize, row: &[f64]) {
        let mean = row.iter().sum::<f64>() / row.len() as f64;
        for (c, v) in row.iter().enumerate() {
            let v = v - mean;
            self.fibre[(x, c)] += v;
            self.norm2 += v * v;
        }
    }

    pub fn from_tensor(group: &Group, l: &LogitTensor) -> Result<LogitStats> {
        let n = group.order();
        if l.order() != n {
            return Err(Error::Shape(format!(
                "logit tensor of order {} for a group of order {n}",
                l.order()
            )));
        }
        let mut stats = LogitStats::zeros(n);
        for a in 0..n {
            for b in 0..n {
                stats.add_row(group.mul(a, b), l.row(a, b));
            }
        }
        Ok(stats)
    }

    pub fn order(&self) -> usize {
        self.fibre.nrows()
    }

    /// Squared norm of the centered logits.
    pub fn norm2(&self) -> f64 {
        self.norm2
    }

    /// `⟨L̄, T_f⟩ = Σ_{x,c} F[x,c] f(x c⁻¹)`.
    pub fn inner_class(&self, group: &Group, f: &[f64]) -> f64 {
        let n = self.order();
        let mut total = 0.0;
        for c in 0..n {
            let ci = group.inv(c);
            for x in 0..n {
                total += self.fibre[(x, c)] * f[group.mul(x, ci)];
            }
        }
        total
    }

    /// Cosine between the centered logits and the centered character
    /// direction of `irrep`.
    pub fn similarity(&self, group: &Group, irrep: &Irrep) -> Result<f64> {
        let f = centered(irrep.character());
        let n = self.order() as f64;
        let oracle2 = n * n * f.iter().map(|v| v * v).sum::<f64>();
        if self.norm2 == 0.0 {
            return Err(Error::ZeroNorm("logit_similarity (model logits)"));
        }
        if oracle2 == 0.0 {
            return Err(Error::ZeroNorm("logit_similarity (centered character)"));
        }
        Ok(self.inner_class(group, &f) / (self.norm2 * oracle2).sqrt())
    }

    /// Orthonormal class functions `Q` (`n × m`) spanning the centered
    /// characters, and the coordinates of the centered logits along the unit
    /// tensors `T_{Q_k}/n`.
    pub fn key_projection(&self, group: &Group, irreps: &[&Irrep]) -> (DMatrix<f64>, Vec<f64>) {
        let n = self.order();
        let chars = DMatrix::from_fn(n, irreps.len(), |g, k| {
            let ch = irreps[k].character();
            ch[g] - ch.iter().sum::<f64>() / n as f64
        });
        let q = orthonormal_columns(&chars, 1e-10);
        let coefs = q
            .column_iter()
            .map(|col| self.inner_class(group, col.as_slice()) / n as f64)
            .collect();
        (q, coefs)
    }

    /// Fraction of centered-logit variance explained by the span of the key
    /// character directions.
    pub fn fve(&self, group: &Group, irreps: &[&Irrep]) -> Result<f64> {
        if self.norm2 == 0.0 {
            return Err(Error::ZeroNorm("logit_fve"));
        }
        let (_, coefs) = self.key_projection(group, irreps);
        let explained: f64 = coefs.iter().map(|c| c * c).sum();
        Ok((explained / self.norm2).clamp(0.0, 1.0))
    }
}

/// Cosine similarity between centered model logits and the centered
/// single-irrep composition tensor `χ_ρ(abc⁻¹)`.
pub fn logit_similarity(group: &Group, logits: &LogitTensor, irrep: &Irrep) -> Result<f64> {
    LogitStats::from_tensor(group, logits)?.similarity(group, irrep)
}

pub fn logit_fve(group: &Group, logits: &LogitTensor, key: &[&Irrep]) -> Result<f64> {
    LogitStats::from_tensor(group, logits)?.fve(group, key)
}

/// Irreps whose similarity exceeds `threshold`.
///
/// With `first_crossing` (epoch at which each irrep first exceeded the
/// threshold over a trajectory) the result is ordered by that epoch, ties and
/// irreps without an entry falling back to descending similarity.
pub fn find_key_reps(
    similarities: &BTreeMap<String, f64>,
    threshold: f64,
    first_crossing: Option<&BTreeMap<String, usize>>,
) -> Vec<String> {
    let mut keys: Vec<(&String, f64)> = similarities
        .iter()
        .filter(|(_, &s)| s > threshold)
        .map(|(k, &s)| (k, s))
        .collect();
    keys.sort_by(|x, y| {
        let ex = first_crossing
            .and_then(|m| m.get(x.0))
            .copied()
            .unwrap_or(usize::MAX);
        let ey = first_crossing
            .and_then(|m| m.get(y.0))
            .copied()
            .unwrap_or(usize::MAX);
        ex.cmp(&ey).then(y.1.total_cmp(&x.1))
    });
    keys.into_iter().map(|(k, _)| k.clone()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gcr::{gcr_logit_tensor, GcrSpec, Provenance};
    use crate::group::make_symmetric;
    use crate::rep::{CatalogOptions, IrrepCatalog};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn s4() -> (Group, IrrepCatalog) {
        let g = make_symmetric(4).unwrap();
        let cat = IrrepCatalog::build(&g, &CatalogOptions::default()).unwrap();
        (g, cat)
    }

    fn noise(n: usize, seed: u64) -> LogitTensor {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..n * n * n).map(|_| rng.random::<f64>() - 0.5).collect();
        LogitTensor::from_vec(n, data, Provenance::Model).unwrap()
    }

    #[test]
    fn centering_basics() {
        let l = LogitTensor::from_vec(2, vec![3.0; 8], Provenance::Model).unwrap();
        assert!(center_logits(&l).as_slice().iter().all(|&v| v == 0.0));
        let r = noise(3, 1);
        let once = center_logits(&r);
        let twice = center_logits(&once);
        for (x, y) in once.as_slice().iter().zip(twice.as_slice()) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn trivial_oracle_centers_to_zero() {
        let (g, cat) = s4();
        let spec = GcrSpec::single(&g, cat.get("trivial").unwrap()).unwrap();
        let t = gcr_logit_tensor(&spec).unwrap();
        assert!(center_logits(&t).as_slice().iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn single_irrep_oracle_is_detected_alone() {
        let (g, cat) = s4();
        let std = cat.get("standard").unwrap();
        let t = gcr_logit_tensor(&GcrSpec::single(&g, std).unwrap()).unwrap();
        let stats = LogitStats::from_tensor(&g, &t).unwrap();
        let mut sims = BTreeMap::new();
        for irrep in cat.nontrivial() {
            let s = stats.similarity(&g, irrep).unwrap();
            if irrep.name() == "standard" {
                assert!((s - 1.0).abs() < 1e-12);
            } else {
                assert!(s.abs() <= 1e-8, "{} {s}", irrep.name());
            }
            sims.insert(irrep.name().to_string(), s);
        }
        assert_eq!(find_key_reps(&sims, KEY_THRESHOLD, None), vec!["standard"]);
        assert!((stats.fve(&g, &[std]).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_irrep_fve_and_bessel() {
        let (g, cat) = s4();
        let sign = cat.get("sign").unwrap();
        let std = cat.get("standard").unwrap();
        let t = gcr_logit_tensor(&GcrSpec::new(&g, vec![(sign, 0.7), (std, 1.3)]).unwrap()).unwrap();
        assert!((logit_fve(&g, &t, &[sign, std]).unwrap() - 1.0).abs() < 1e-12);

        let stats = LogitStats::from_tensor(&g, &noise(24, 5)).unwrap();
        let total: f64 = cat
            .nontrivial()
            .map(|r| stats.similarity(&g, r).unwrap().powi(2))
            .sum();
        assert!(total <= 1.0);
    }

    #[test]
    fn noise_has_no_key_reps() {
        // Cosine with a fixed direction has spread about n^{-3/2}, which is
        // only well below the threshold once n is large.
        let g = make_symmetric(5).unwrap();
        let cat = IrrepCatalog::build(&g, &CatalogOptions::default()).unwrap();
        let stats = LogitStats::from_tensor(&g, &noise(120, 9)).unwrap();
        let sims: BTreeMap<String, f64> = cat
            .nontrivial()
            .map(|r| (r.name().to_string(), stats.similarity(&g, r).unwrap()))
            .collect();
        assert!(find_key_reps(&sims, KEY_THRESHOLD, None).is_empty(), "{sims:?}");
    }

    #[test]
    fn zero_logits_rejected() {
        let (g, cat) = s4();
        let zero = LogitTensor::from_vec(24, vec![0.0; 24 * 24 * 24], Provenance::Model).unwrap();
        assert!(matches!(
            logit_similarity(&g, &zero, cat.get("sign").unwrap()),
            Err(Error::ZeroNorm(_))
        ));
    }

    #[test]
    fn key_order_follows_first_crossing() {
        let sims: BTreeMap<String, f64> = [("a", 0.9), ("b", 0.3), ("c", 0.001)]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect();
        assert_eq!(find_key_reps(&sims, KEY_THRESHOLD, None), vec!["a", "b"]);
        let first: BTreeMap<String, usize> = [("a".to_string(), 500), ("b".to_string(), 100)]
            .into_iter()
            .collect();
        assert_eq!(find_key_reps(&sims, KEY_THRESHOLD, Some(&first)), vec!["b", "a"]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn per_pair_offsets_do_not_change_similarity(seed in 0u64..1000, shift in -5.0f64..5.0) {
            let g = make_symmetric(3).unwrap();
            let cat = IrrepCatalog::build(&g, &CatalogOptions::default()).unwrap();
            let base = noise(6, seed);
            let mut shifted = base.clone();
            for (i, row) in shifted.as_mut_slice().chunks_mut(6).enumerate() {
                row.iter_mut().for_each(|v| *v += shift * (i as f64).sin());
            }
            for irrep in cat.nontrivial() {
                let s0 = logit_similarity(&g, &base, irrep).unwrap();
                let s1 = logit_similarity(&g, &shifted, irrep).unwrap();
                prop_assert!((s0 - s1).abs() < 1e-12);
            }
        }
    }
}
