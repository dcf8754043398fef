//! Numerical decomposition of the regular representation.
//!
//! A random symmetric matrix averaged over the left-regular action lands in
//! the commutant of that action, so each of its eigenspaces is an invariant
//! subspace; generically every eigenspace carries exactly one real irrep.
//! Eigenvalue collisions are resolved by splitting again with a fresh random
//! commutant element restricted to the offending block.

use log::debug;
use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::catalog::{CatalogMode, IrrepCatalog};
use super::{character_inner, frobenius_schur, Irrep, RealType, CROSS_TOL};
use crate::error::{Error, Result};
use crate::group::Group;
use crate::linalg::matmul;

const MAX_SPLIT_DEPTH: usize = 8;
/// Two discovered characters closer than this are the same irrep.
const SAME_CHARACTER_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiscoveryOptions {
    /// Relative eigenvalue clustering tolerance.
    pub tolerance: f64,
    pub seed: u64,
    pub max_attempts: usize,
}

impl Default for DiscoveryOptions {
    fn default() -> Self {
        DiscoveryOptions {
            tolerance: 1e-8,
            seed: 0,
            max_attempts: 5,
        }
    }
}

/// Discovers every real irrep of `group` and returns them as a named catalog.
pub fn discover_irreps(group: &Group, opts: &DiscoveryOptions) -> Result<IrrepCatalog> {
    IrrepCatalog::from_discovered(group, discover_raw(group, opts)?, CatalogMode::Discover)
}

/// Distinct irreps with placeholder names, retried over seeds until the rank
/// accounting closes.
pub(crate) fn discover_raw(group: &Group, opts: &DiscoveryOptions) -> Result<Vec<Irrep>> {
    let mut last_error = None;
    for attempt in 0..opts.max_attempts.max(1) {
        let seed = opts.seed.wrapping_add(attempt as u64);
        match discover_once(group, opts.tolerance, seed) {
            Ok(irreps) => return Ok(irreps),
            Err(e) => {
                debug!(
                    "discovery attempt {attempt} (seed {seed}) on {}: {e}",
                    group.name()
                );
                last_error = Some(e);
            }
        }
    }
    Err(last_error.unwrap_or_else(|| Error::Discovery("no attempts made".into())))
}

fn discover_once(group: &Group, tol: f64, seed: u64) -> Result<Vec<Irrep>> {
    let n = group.order();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = symmetrized_random(group, &mut rng);
    let full = DMatrix::<f64>::identity(n, n);

    let mut blocks = Vec::new();
    split(group, &full, &m, tol, &mut rng, 0, &mut blocks)?;

    let mut found: Vec<(DMatrix<f64>, Vec<f64>)> = Vec::new();
    for u in blocks {
        let chi = block_character(group, &u);
        if !found.iter().any(|(_, c)| max_diff(c, &chi) <= SAME_CHARACTER_TOL) {
            found.push((u, chi));
        }
    }

    let mut irreps = Vec::with_capacity(found.len());
    for (i, (u, _)) in found.into_iter().enumerate() {
        let irrep = Irrep::from_matrices(format!("block{i}"), group, block_matrices(group, &u))?;
        irreps.push(irrep);
    }

    let total: usize = irreps.iter().map(Irrep::rep_space_rank).sum();
    if total != n {
        return Err(Error::Discovery(format!(
            "rank accounting for {} gives {total}, expected {n}",
            group.name()
        )));
    }
    Ok(irreps)
}

/// `M̃ = (1/n) Σ_g P_g M P_gᵀ` for a random symmetric `M`. Its entries depend
/// only on `i⁻¹j`: `M̃[i][j] = f(i⁻¹j)` with `f(h) = (1/n) Σ_x M[x][xh]`.
fn symmetrized_random(group: &Group, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let n = group.order();
    let mut raw = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        for i in 0..=j {
            let v: f64 = StandardNormal.sample(rng);
            raw[(i, j)] = v;
            raw[(j, i)] = v;
        }
    }
    let mut f = vec![0.0; n];
    for (h, fh) in f.iter_mut().enumerate() {
        *fh = (0..n).map(|x| raw[(x, group.mul(x, h))]).sum::<f64>() / n as f64;
    }
    DMatrix::from_fn(n, n, |i, j| f[group.mul(group.inv(i), j)])
}

/// Splits the invariant subspace spanned by the orthonormal columns of `u`
/// along the eigenspaces of `m` restricted to it.
fn split(
    group: &Group,
    u: &DMatrix<f64>,
    m: &DMatrix<f64>,
    tol: f64,
    rng: &mut ChaCha8Rng,
    depth: usize,
    out: &mut Vec<DMatrix<f64>>,
) -> Result<()> {
    if depth > MAX_SPLIT_DEPTH {
        return Err(Error::Discovery(format!(
            "block of width {} still reducible after {MAX_SPLIT_DEPTH} splits",
            u.ncols()
        )));
    }
    let restricted = matmul(u, true, &matmul(m, false, u, false), false);
    let restricted = (&restricted + restricted.transpose()) * 0.5;
    let eig = SymmetricEigen::new(restricted);

    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let scale = eig.eigenvalues.iter().fold(1.0f64, |s, v| s.max(v.abs()));

    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len()
            && eig.eigenvalues[order[end]] - eig.eigenvalues[order[end - 1]] <= tol * scale
        {
            end += 1;
        }
        let cols: Vec<_> = order[start..end]
            .iter()
            .map(|&k| eig.eigenvectors.column(k).into_owned())
            .collect();
        let block = matmul(u, false, &DMatrix::from_columns(&cols), false);
        if is_irreducible(group, &block) {
            out.push(block);
        } else {
            // reducible: either a chance collision or a symmetric element that
            // acts as a scalar on this block, so try a fresh one
            let fresh = symmetrized_random(group, rng);
            split(group, &block, &fresh, tol, rng, depth + 1, out)?;
        }
        start = end;
    }
    Ok(())
}

fn is_irreducible(group: &Group, u: &DMatrix<f64>) -> bool {
    let chi = block_character(group, u);
    let Ok(norm) = character_inner(&chi, &chi) else {
        return false;
    };
    let nu = frobenius_schur(group, &chi);
    RealType::classify(norm, nu, CROSS_TOL.sqrt()).is_some()
}

/// `χ(g) = Σ_i ⟨U[i,:], U[g⁻¹i,:]⟩`.
fn block_character(group: &Group, u: &DMatrix<f64>) -> Vec<f64> {
    let n = group.order();
    let rows = u.transpose();
    (0..n)
        .map(|g| {
            let gi = group.inv(g);
            (0..n)
                .map(|i| rows.column(i).dot(&rows.column(group.mul(gi, i))))
                .sum()
        })
        .collect()
}

/// `ρ(g) = Uᵀ P_g U` where `(P_g U)[i,:] = U[g⁻¹i,:]`.
fn block_matrices(group: &Group, u: &DMatrix<f64>) -> Vec<DMatrix<f64>> {
    let n = group.order();
    let m = u.ncols();
    (0..n)
        .map(|g| {
            if g == group.identity() {
                return DMatrix::identity(m, m);
            }
            let gi = group.inv(g);
            let moved = DMatrix::from_fn(n, m, |i, l| u[(group.mul(gi, i), l)]);
            matmul(u, true, &moved, false)
        })
        .collect()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{make_cyclic, make_dihedral, make_symmetric};

    fn dims(irreps: &[Irrep]) -> Vec<usize> {
        let mut d: Vec<usize> = irreps.iter().map(Irrep::dim).collect();
        d.sort_unstable();
        d
    }

    #[test]
    fn s3_decomposes_into_three_irreps() {
        let g = make_symmetric(3).unwrap();
        let irreps = discover_raw(&g, &DiscoveryOptions::default()).unwrap();
        assert_eq!(dims(&irreps), vec![1, 1, 2]);
    }

    #[test]
    fn cyclic_blocks_are_complex_type() {
        let g = make_cyclic(7).unwrap();
        let irreps = discover_raw(&g, &DiscoveryOptions::default()).unwrap();
        assert_eq!(dims(&irreps), vec![1, 2, 2, 2]);
        assert!(irreps
            .iter()
            .filter(|r| r.dim() == 2)
            .all(|r| r.real_type() == RealType::Complex));
    }

    #[test]
    fn even_dihedral_has_four_one_dimensional_irreps() {
        let g = make_dihedral(6).unwrap();
        let irreps = discover_raw(&g, &DiscoveryOptions::default()).unwrap();
        assert_eq!(dims(&irreps), vec![1, 1, 1, 1, 2, 2]);
    }

    #[test]
    fn symmetrized_matrix_commutes_with_regular_action() {
        let g = make_symmetric(3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = symmetrized_random(&g, &mut rng);
        assert!((&m - m.transpose()).amax() < 1e-15);
        for p in super::super::regular_matrices(&g) {
            let lhs = &p * &m;
            let rhs = &m * &p;
            assert!((lhs - rhs).amax() < 1e-14);
        }
    }
}
