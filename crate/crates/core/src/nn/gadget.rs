//! A network that implements character composition by hand.
//!
//! Given a representation whose matrices only contain −1, 0 and 1, the
//! embeddings hold the flattened matrices, each product `ρ(a)_ij ρ(b)_jk`
//! is computed by four ReLUs, and the unembedding contracts the resulting
//! `ρ(ab)` against `ρ(c⁻¹)` so the logit of `c` is `τ·χ(abc⁻¹)`.

use nalgebra::DMatrix;

use super::MlpParams;
use crate::error::{Error, Result};
use crate::group::Group;

/// `ReLU(x+y−1) + ReLU(−x−y−1) − ReLU(x−y−1) − ReLU(−x+y−1)`, equal to `x·y`
/// whenever `x, y ∈ {−1, 0, 1}`.
pub fn relu_multiply(x: f64, y: f64) -> f64 {
    let r = |v: f64| v.max(0.0);
    r(x + y - 1.0) + r(-x - y - 1.0) - r(x - y - 1.0) - r(-x + y - 1.0)
}

/// Input signs `(s_x, s_y)` and output sign of the four gadget neurons.
const GADGET: [(f64, f64, f64); 4] = [
    (1.0, 1.0, 1.0),
    (-1.0, -1.0, 1.0),
    (1.0, -1.0, -1.0),
    (-1.0, 1.0, -1.0),
];

#[derive(Clone, Debug)]
pub struct HandBuilt {
    pub params: MlpParams,
    /// Dimension of the representation used.
    pub rep_dim: usize,
    pub scale: f64,
}

/// Builds the network for `matrices[g] = ρ(g)`.
///
/// Sizes: `d_embed = d² + 1` (the last left coordinate is a constant 1 that
/// supplies the gadget bias) and `h = 4d³`, one gadget per `(i, j, k)`.
pub fn hand_built_gcr(group: &Group, matrices: &[DMatrix<f64>], scale: f64) -> Result<HandBuilt> {
    let n = group.order();
    if matrices.len() != n {
        return Err(Error::Shape(format!(
            "{} matrices for a group of order {n}",
            matrices.len()
        )));
    }
    let d = matrices[0].nrows();
    if matrices.iter().any(|m| m.shape() != (d, d)) {
        return Err(Error::Shape("representation matrices differ in shape".into()));
    }
    if matrices
        .iter()
        .flat_map(|m| m.iter())
        .any(|&v| v != -1.0 && v != 0.0 && v != 1.0)
    {
        return Err(Error::InvalidArgument(
            "gadget construction needs matrix entries in {-1, 0, 1}".into(),
        ));
    }

    let de = d * d + 1;
    let h = 4 * d * d * d;
    let mut p = MlpParams::zeros(n, de, h);
    for (g, m) in matrices.iter().enumerate() {
        for i in 0..d {
            for j in 0..d {
                p.w_left[(i * d + j, g)] = m[(i, j)];
                p.w_right[(i * d + j, g)] = m[(i, j)];
            }
        }
        p.w_left[(d * d, g)] = 1.0;
    }
    let neuron = |i: usize, j: usize, k: usize, s: usize| ((i * d + j) * d + k) * 4 + s;
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                for (s, &(sx, sy, out)) in GADGET.iter().enumerate() {
                    let row = neuron(i, j, k, s);
                    p.w_mlp[(row, i * d + j)] = sx;
                    p.w_mlp[(row, de + j * d + k)] = sy;
                    p.w_mlp[(row, d * d)] = -1.0;
                    for c in 0..n {
                        let cinv = &matrices[group.inv(c)];
                        p.w_unembed[(c, row)] = scale * out * cinv[(k, i)];
                    }
                }
            }
        }
    }
    Ok(HandBuilt {
        params: p,
        rep_dim: d,
        scale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{make_cyclic, make_symmetric};
    use crate::nn::{all_pairs, forward, loss_and_accuracy, targets};
    use crate::rep::{natural_permutation_matrices, regular_matrices};

    #[test]
    fn gadget_is_exact_on_signed_units() {
        assert_eq!(relu_multiply(1.0, -1.0), -1.0);
        assert_eq!(relu_multiply(0.0, 0.0), 0.0);
        for x in [-1.0, 0.0, 1.0] {
            for y in [-1.0, 0.0, 1.0] {
                assert_eq!(relu_multiply(x, y), x * y);
            }
        }
    }

    #[test]
    fn logits_are_scaled_characters() {
        let g = make_symmetric(3).unwrap();
        let mats = natural_permutation_matrices(&g).unwrap();
        let net = hand_built_gcr(&g, &mats, 2.0).unwrap();
        let pairs = all_pairs(6);
        let cache = forward(&net.params, &pairs).unwrap();
        for (col, &(a, b)) in pairs.iter().enumerate() {
            for c in 0..6 {
                let x = g.mul(g.mul(a, b), g.inv(c));
                let chi = mats[x].trace();
                assert_eq!(cache.logits[(c, col)], 2.0 * chi);
            }
        }
        let (_, acc) = loss_and_accuracy(&cache.logits, &targets(&g, &pairs)).unwrap();
        assert_eq!(acc, 1.0);
    }

    #[test]
    fn cyclic_regular_network_is_perfect() {
        let g = make_cyclic(5).unwrap();
        let net = hand_built_gcr(&g, &regular_matrices(&g), 1.0).unwrap();
        assert_eq!(net.params.hidden(), 500);
        let pairs = all_pairs(5);
        let cache = forward(&net.params, &pairs).unwrap();
        let (_, acc) = loss_and_accuracy(&cache.logits, &targets(&g, &pairs)).unwrap();
        assert_eq!(acc, 1.0);
    }

    #[test]
    fn non_integer_matrices_rejected() {
        let g = make_cyclic(3).unwrap();
        let mats = vec![DMatrix::from_element(1, 1, 0.5); 3];
        assert!(hand_built_gcr(&g, &mats, 1.0).is_err());
    }
}
