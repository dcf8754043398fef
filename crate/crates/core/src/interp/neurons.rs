//! Hidden-layer analyses over the full batch of `n²` pairs.
//!
//! Activations are stored neuron-major (`h × n²`, column `a·n + b` for the
//! pair `(a, b)`), matching the engine's layout.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::Group;
use crate::linalg::{frob2, lstsq, matmul};
use crate::rep::{HiddenRepBasis, Irrep, PairBlock, PairSums, RepBasis};

/// Label for neurons whose variance is below the "off" threshold.
pub const OFF: &str = "off";
/// Label for neurons without a dominant irrep.
pub const MIXED: &str = "mixed";

/// Removes the batch mean of every neuron. Returns the centered activations
/// and the mean, so `centered + mean·1ᵀ` reproduces the input.
pub fn center_activations(acts: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>) {
    let mean = DVector::from_iterator(acts.nrows(), acts.row_iter().map(|r| r.mean()));
    let mut centered = acts.clone();
    for mut col in centered.column_iter_mut() {
        col -= &mean;
    }
    (centered, mean)
}

/// What the analyses need from the centered activations over all pairs.
#[derive(Clone, Debug)]
pub struct ActivationStats {
    pub mean: DVector<f64>,
    /// Fibre sums of the centered activations.
    pub sums: PairSums,
    /// `Σ_p (x_jp − μ_j)²` per neuron.
    pub sq_norms: Vec<f64>,
    pub pairs: usize,
}

impl ActivationStats {
    /// From uncentered `h × n²` activations.
    pub fn from_activations(group: &Group, acts: &DMatrix<f64>) -> Result<ActivationStats> {
        let (centered, mean) = center_activations(acts);
        let sums = PairSums::new(group, &centered)?;
        let sq_norms = centered.row_iter().map(|r| r.norm_squared()).collect();
        Ok(ActivationStats {
            mean,
            sums,
            sq_norms,
            pairs: acts.ncols(),
        })
    }

    pub fn hidden(&self) -> usize {
        self.sq_norms.len()
    }

    pub fn total_variance(&self) -> f64 {
        self.sq_norms.iter().sum()
    }

    /// Squared projection of every neuron onto one block, summed over the
    /// block's basis vectors.
    pub fn block_energy(&self, basis: &HiddenRepBasis, which: PairBlock) -> Vec<f64> {
        let c = basis.coefficients(&self.sums, which);
        c.column_iter().map(|col| col.norm_squared()).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterOptions {
    /// Neurons with activation variance below this are "off".
    pub off_variance: f64,
    /// Minimum share of a neuron's variance the winning irrep must explain.
    pub dominance: f64,
}

impl Default for ClusterOptions {
    fn default() -> Self {
        ClusterOptions {
            off_variance: 1e-10,
            dominance: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeuronClustering {
    /// Irrep name, [`OFF`] or [`MIXED`] per neuron.
    pub labels: Vec<String>,
    /// Share of each neuron's variance explained by its best irrep
    /// (0 for "off" neurons).
    pub dominant_fraction: Vec<f64>,
}

impl NeuronClustering {
    pub fn sizes(&self) -> BTreeMap<String, usize> {
        let mut sizes = BTreeMap::new();
        for l in &self.labels {
            *sizes.entry(l.clone()).or_insert(0) += 1;
        }
        sizes
    }

    pub fn members(&self, label: &str) -> Vec<usize> {
        (0..self.labels.len())
            .filter(|&j| self.labels[j] == label)
            .collect()
    }
}

/// Assigns each neuron to the irrep whose `ρ(a)`, `ρ(b)` and `ρ(ab)` blocks
/// together explain most of its centered variance.
pub fn neuron_clusters(
    stats: &ActivationStats,
    bases: &[HiddenRepBasis],
    opts: &ClusterOptions,
) -> NeuronClustering {
    let h = stats.hidden();
    let energies: Vec<(&str, Vec<f64>)> = bases
        .iter()
        .filter(|b| !b.is_trivial())
        .map(|b| {
            let mut e = vec![0.0; h];
            for which in PairBlock::ALL {
                for (acc, v) in e.iter_mut().zip(stats.block_energy(b, which)) {
                    *acc += v;
                }
            }
            (b.irrep_name(), e)
        })
        .collect();
    let mut labels = Vec::with_capacity(h);
    let mut dominant_fraction = Vec::with_capacity(h);
    for j in 0..h {
        let norm = stats.sq_norms[j];
        if norm / stats.pairs as f64 <= opts.off_variance {
            labels.push(OFF.to_string());
            dominant_fraction.push(0.0);
            continue;
        }
        let (name, best) =
            energies
                .iter()
                .map(|(name, e)| (*name, e[j] / norm))
                .fold(
                    ("", f64::NEG_INFINITY),
                    |acc, x| if x.1 > acc.1 { x } else { acc },
                );
        let best = best.clamp(0.0, 1.0);
        labels.push(if best >= opts.dominance { name } else { MIXED }.to_string());
        dominant_fraction.push(best);
    }
    NeuronClustering {
        labels,
        dominant_fraction,
    }
}

/// Per-block share of a neuron cluster's centered variance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpFve {
    pub a: f64,
    pub b: f64,
    pub ab: f64,
    pub residual: f64,
}

/// Attribution order for overlapping blocks.
pub const MLP_FVE_ORDER: [PairBlock; 3] = [PairBlock::A, PairBlock::B, PairBlock::Ab];

/// Splits the variance of `neurons` across the `ρ(a)`, `ρ(b)` and `ρ(ab)`
/// blocks of one irrep, projecting sequentially in [`MLP_FVE_ORDER`].
///
/// For a non-trivial irrep the three blocks are orthogonal and sequential
/// projection equals independent projection. For the trivial irrep the
/// blocks coincide, so everything goes to `a`; centered activations carry
/// no trivial component anyway.
pub fn mlp_fve(stats: &ActivationStats, neurons: &[usize], basis: &HiddenRepBasis) -> Result<MlpFve> {
    let total: f64 = neurons.iter().map(|&j| stats.sq_norms[j]).sum();
    if total == 0.0 {
        return Err(Error::ZeroNorm("mlp_fve"));
    }
    let share = |which: PairBlock| -> f64 {
        let e = stats.block_energy(basis, which);
        neurons.iter().map(|&j| e[j]).sum::<f64>() / total
    };
    let (a, b, ab) = if basis.is_trivial() {
        (share(PairBlock::A), 0.0, 0.0)
    } else {
        (share(PairBlock::A), share(PairBlock::B), share(PairBlock::Ab))
    };
    let (a, b, ab) = (a.clamp(0.0, 1.0), b.clamp(0.0, 1.0), ab.clamp(0.0, 1.0));
    Ok(MlpFve {
        a,
        b,
        ab,
        residual: (1.0 - a - b - ab).max(0.0),
    })
}

/// MSE below which representation matrices count as recovered.
pub const RECOVERY_MSE: f64 = 1e-8;
/// Singular values of the projected neuron coordinates below this multiple
/// of the total activation norm are treated as zero.
pub const RECOVERY_CUTOFF: f64 = 1e-3;

#[derive(Clone, Debug)]
pub struct RepRecovery {
    pub irrep_name: String,
    /// Rank of the neuron coordinates in the `ρ(ab)` block.
    pub rank: usize,
    pub expected_rank: usize,
    /// Mean squared entry error of the reconstructed matrices over all
    /// `n²` pairs.
    pub mse: f64,
    /// `h × d²` map from centered activations to flattened `ρ(ab)`.
    pub change_of_basis: DMatrix<f64>,
    /// Reconstructed `ρ(x)` per element `x`; pair `(a, b)` reads `x = ab`.
    pub matrices: Vec<DMatrix<f64>>,
}

impl RepRecovery {
    pub fn recovered(&self) -> bool {
        self.rank == self.expected_rank && self.mse < RECOVERY_MSE
    }
}

/// `√n Ũᵀ R`: the flattened irrep in hidden `ρ(ab)` block coordinates.
fn block_targets(basis: &HiddenRepBasis, irrep: &Irrep) -> DMatrix<f64> {
    let n = irrep.order() as f64;
    basis.rep_basis().coefficients(&irrep.flattened()) * n.sqrt()
}

/// Least-squares map from the neurons' `ρ(ab)` projection to the matrix
/// entries of `ρ(ab)`.
///
/// With `C` the `r × h` block coordinates of the centered activations and
/// `G = √n ŨᵀR` those of the exact matrices, solves `C Q ≈ G` for `Q`
/// (`h × d²`). Since the block basis is orthonormal, the pair-space error
/// equals `‖CQ − G‖²`.
pub fn recover_rep_matrices(
    stats: &ActivationStats,
    basis: &HiddenRepBasis,
    irrep: &Irrep,
    cutoff: f64,
) -> Result<RepRecovery> {
    if basis.irrep_name() != irrep.name() {
        return Err(Error::InvalidArgument(format!(
            "hidden basis `{}` does not belong to irrep `{}`",
            basis.irrep_name(),
            irrep.name()
        )));
    }
    let d = irrep.dim();
    let c = basis.coefficients(&stats.sums, PairBlock::Ab);
    let g = block_targets(basis, irrep);
    let scale = stats.total_variance().sqrt();
    let (q, rank) = lstsq(&c, &g, cutoff * scale);
    let fitted = matmul(&c, false, &q, false);
    let n = irrep.order();
    let mse = frob2(&(&fitted - &g)) / (n * n * d * d) as f64;
    let field = basis.element_field(&fitted);
    let matrices = (0..n)
        .map(|x| DMatrix::from_fn(d, d, |i, j| field[(x, i * d + j)]))
        .collect();
    Ok(RepRecovery {
        irrep_name: irrep.name().to_string(),
        rank,
        expected_rank: basis.rank(),
        mse,
        change_of_basis: q,
        matrices,
    })
}

#[derive(Clone, Debug)]
pub struct UnembedPattern {
    /// `K[kl, ij]`: logit weight on `ρ(c⁻¹)_kl` per unit of `ρ(ab)_ij`.
    pub matrix: DMatrix<f64>,
    /// Cosine with the trace pattern `δ_kj δ_li`, both restricted to the
    /// identifiable subspace.
    pub correlation: f64,
}

/// `P[kl, ij] = 1` when `(k, l) = (j, i)`: the contraction computing
/// `tr(ρ(ab) ρ(c⁻¹))`.
pub fn trace_pattern(d: usize) -> DMatrix<f64> {
    DMatrix::from_fn(d * d, d * d, |kl, ij| {
        let (k, l, i, j) = (kl / d, kl % d, ij / d, ij % d);
        if k == j && l == i {
            1.0
        } else {
            0.0
        }
    })
}

fn pinv(m: &DMatrix<f64>) -> DMatrix<f64> {
    let tol = 1e-10 * m.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-300);
    m.clone().pseudo_inverse(tol).expect("non-negative tolerance")
}

/// Expresses the map from the neurons' `ρ(ab)` subspace to the logits in
/// representation coordinates on both sides.
///
/// The neurons' `ρ(ab)` component is `Nᵀ vec ρ(ab)` with `N = G⁺C`. Its
/// logits are `W_U Nᵀ vec ρ(ab)`; writing their output-side projection
/// as `Φ K` with `Φ[c, kl] = ρ(c⁻¹)_kl` gives `K`. For irreps whose matrix
/// entries are linearly dependent only the part of `K` acting on
/// `S = span{vec ρ(g)}` is determined, so the comparison uses `P_S K P_S`
/// against `P_S P P_S`.
pub fn unembed_in_rep_basis(
    group: &Group,
    stats: &ActivationStats,
    w_unembed: &DMatrix<f64>,
    hidden: &HiddenRepBasis,
    output: &RepBasis,
    irrep: &Irrep,
) -> Result<UnembedPattern> {
    let n = group.order();
    if w_unembed.nrows() != n || w_unembed.ncols() != stats.hidden() {
        return Err(Error::Shape(format!(
            "unembedding is {}×{}, expected {n}×{}",
            w_unembed.nrows(),
            w_unembed.ncols(),
            stats.hidden()
        )));
    }
    let d = irrep.dim();
    let c = hidden.coefficients(&stats.sums, PairBlock::Ab);
    let g = block_targets(hidden, irrep);
    let neuron_map = matmul(&pinv(&g), false, &c, false);
    let m = matmul(w_unembed, false, &neuron_map, true);
    let phi = DMatrix::from_fn(n, d * d, |x, kl| irrep.matrix(group.inv(x))[(kl / d, kl % d)]);
    let phi_r = output.coefficients(&phi);
    let m_r = output.coefficients(&m);
    let k = matmul(&pinv(&phi_r), false, &m_r, false);

    let alpha = output.coefficients(&irrep.flattened());
    let p_s = matmul(&pinv(&alpha), false, &alpha, false);
    let sandwich = |x: &DMatrix<f64>| matmul(&matmul(&p_s, false, x, false), false, &p_s, false);
    let ideal = sandwich(&trace_pattern(d));
    let observed = sandwich(&k);
    let correlation = crate::linalg::cosine(observed.as_slice(), ideal.as_slice())
        .ok_or(Error::ZeroNorm("unembed_in_rep_basis"))?;
    Ok(UnembedPattern {
        matrix: k,
        correlation,
    })
}
