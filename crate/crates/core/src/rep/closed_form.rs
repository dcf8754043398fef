//! Irreps with explicit matrix formulas.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use super::Irrep;
use crate::error::{Error, Result};
use crate::group::{permutation_parity, Group, GroupSpec};
use crate::linalg::matmul;

pub fn trivial_irrep(group: &Group) -> Irrep {
    let mats = vec![DMatrix::from_element(1, 1, 1.0); group.order()];
    Irrep::from_matrices_unchecked("trivial".into(), group, mats).expect("trivial irrep shapes")
}

/// The ±1 representation with kernel the index-2 subgroup: even permutations,
/// rotations of `D_n`, or even powers in `C_n` with `n` even.
pub fn sign_irrep(group: &Group) -> Result<Irrep> {
    let n = group.order();
    let values: Vec<f64> = match group.spec() {
        GroupSpec::Symmetric(k) if k >= 2 => (0..n)
            .map(|g| {
                let p = group
                    .permutation(g)
                    .expect("symmetric group carries permutations");
                if permutation_parity(p) == 0 {
                    1.0
                } else {
                    -1.0
                }
            })
            .collect(),
        GroupSpec::Dihedral(m) => (0..n).map(|g| if g < m { 1.0 } else { -1.0 }).collect(),
        GroupSpec::Cyclic(m) if m % 2 == 0 => (0..n).map(|g| if g % 2 == 0 { 1.0 } else { -1.0 }).collect(),
        _ => return Err(Error::NoSignRepresentation(group.name())),
    };
    let mats = values
        .into_iter()
        .map(|v| DMatrix::from_element(1, 1, v))
        .collect();
    Irrep::from_matrices("sign", group, mats)
}

fn rotation(theta: f64) -> DMatrix<f64> {
    let (s, c) = theta.sin_cos();
    DMatrix::from_row_slice(2, 2, &[c, -s, s, c])
}

fn reflection(theta: f64) -> DMatrix<f64> {
    let (s, c) = theta.sin_cos();
    DMatrix::from_row_slice(2, 2, &[c, s, s, -c])
}

/// Quarter-turn and half-turn angles are snapped so that, e.g., the `C_4`
/// generator is exactly `[[0,-1],[1,0]]`.
fn angle(n: usize, k: usize, x: usize) -> f64 {
    2.0 * PI * ((k * x) % n) as f64 / n as f64
}

fn snap(m: DMatrix<f64>) -> DMatrix<f64> {
    m.map(|v| {
        let r = v.round();
        if (v - r).abs() < 1e-15 {
            r
        } else {
            v
        }
    })
}

/// Rotation by `2πkx/n` on `C_n`, for `0 < k < n/2`.
pub fn cyclic_2d_irrep(group: &Group, k: usize) -> Result<Irrep> {
    let GroupSpec::Cyclic(n) = group.spec() else {
        return Err(Error::InvalidArgument(format!("{} is not cyclic", group.name())));
    };
    if k == 0 || 2 * k >= n {
        return Err(Error::FrequencyOutOfRange { n, k });
    }
    let mats = (0..n).map(|x| snap(rotation(angle(n, k, x)))).collect();
    Irrep::from_matrices(format!("2d_k={k}"), group, mats)
}

/// Rotations `r^l` act by rotation through `2πkl/n`, reflections `r^l s` by
/// the matching reflection matrix.
pub fn dihedral_2d_irrep(group: &Group, k: usize) -> Result<Irrep> {
    let GroupSpec::Dihedral(n) = group.spec() else {
        return Err(Error::InvalidArgument(format!(
            "{} is not dihedral",
            group.name()
        )));
    };
    if k == 0 || 2 * k >= n {
        return Err(Error::FrequencyOutOfRange { n, k });
    }
    let mats = (0..2 * n)
        .map(|g| {
            let l = g % n;
            if g < n {
                snap(rotation(angle(n, k, l)))
            } else {
                snap(reflection(angle(n, k, l)))
            }
        })
        .collect();
    Irrep::from_matrices(format!("2d_k={k}"), group, mats)
}

/// `P(σ) e_i = e_σ(i)`, so `P(σ)P(τ) = P(σ∘τ)`.
pub fn natural_permutation_matrices(group: &Group) -> Result<Vec<DMatrix<f64>>> {
    let k = group
        .degree()
        .ok_or_else(|| Error::InvalidArgument(format!("{} is not a permutation group", group.name())))?;
    Ok((0..group.order())
        .map(|g| {
            let p = group.permutation(g).unwrap();
            let mut m = DMatrix::zeros(k, k);
            for (i, &pi) in p.iter().enumerate() {
                m[(pi, i)] = 1.0;
            }
            m
        })
        .collect())
}

/// Left regular representation as `n × n` permutation matrices.
pub fn regular_matrices(group: &Group) -> Vec<DMatrix<f64>> {
    let n = group.order();
    (0..n)
        .map(|g| {
            let mut m = DMatrix::zeros(n, n);
            for h in 0..n {
                m[(group.mul(g, h), h)] = 1.0;
            }
            m
        })
        .collect()
}

/// Orthonormal basis of the complement of the all-ones vector in ℝᵏ
/// (Helmert columns).
fn helmert_basis(k: usize) -> DMatrix<f64> {
    let mut q = DMatrix::zeros(k, k - 1);
    for j in 1..k {
        let norm = ((j * (j + 1)) as f64).sqrt();
        for i in 0..j {
            q[(i, j - 1)] = 1.0 / norm;
        }
        q[(j, j - 1)] = -(j as f64) / norm;
    }
    q
}

/// The `(k−1)`-dimensional standard irrep of `S_k`: permutation matrices
/// restricted to the complement of the all-ones vector.
pub fn symmetric_standard_irrep(group: &Group) -> Result<Irrep> {
    let GroupSpec::Symmetric(k) = group.spec() else {
        return Err(Error::InvalidArgument(format!(
            "{} is not symmetric",
            group.name()
        )));
    };
    if k < 2 {
        return Err(Error::InvalidArgument("standard irrep needs k >= 2".into()));
    }
    let q = helmert_basis(k);
    let mats = natural_permutation_matrices(group)?
        .iter()
        .map(|p| snap(matmul(&q, true, &matmul(p, false, &q, false), false)))
        .collect();
    Irrep::from_matrices("standard", group, mats)
}

/// `g ↦ σ(g)·ρ(g)` for a 1-dimensional `σ`.
pub fn tensor_1d_irrep(group: &Group, rho: &Irrep, sigma: &Irrep) -> Result<Irrep> {
    if sigma.dim() != 1 {
        return Err(Error::InvalidArgument(format!(
            "`{}` has dimension {}, expected 1",
            sigma.name(),
            sigma.dim()
        )));
    }
    if rho.order() != group.order() || sigma.order() != group.order() {
        return Err(Error::Shape("irreps belong to a different group".into()));
    }
    let mats = (0..group.order())
        .map(|g| rho.matrix(g) * sigma.matrix(g)[(0, 0)])
        .collect();
    let name = if sigma.is_trivial() {
        rho.name().to_string()
    } else if rho.is_trivial() {
        sigma.name().to_string()
    } else if rho.dim() == 1 && rho.name() == sigma.name() {
        "trivial".to_string()
    } else {
        format!("{}_{}", rho.name(), sigma.name())
    };
    Irrep::from_matrices(name, group, mats)
}
