//! Real irreducible representations, characters and representation-space
//! bases.
//!
//! All irreps are stored in orthogonal form, so `ρ(g⁻¹) = ρ(g)ᵀ` and both
//! Schur orthogonality relations hold with the `|G|/d` constant for irreps
//! of real type.

mod basis;
mod catalog;
mod closed_form;
mod discover;

pub use basis::{hidden_rep_bases, rep_space_basis, HiddenRepBasis, PairBlock, PairSums, RepBasis};
pub use catalog::{CatalogMode, CatalogOptions, IrrepCatalog, CATALOG_FORMAT};
pub use closed_form::{
    cyclic_2d_irrep, dihedral_2d_irrep, natural_permutation_matrices, regular_matrices, sign_irrep,
    symmetric_standard_irrep, tensor_1d_irrep, trivial_irrep,
};
pub use discover::{discover_irreps, DiscoveryOptions};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{conjugacy_classes, Group};
use crate::linalg::{matmul, max_abs_diff};

/// Construction exactness.
pub const EXACT_TOL: f64 = 1e-12;
/// Homomorphism and orthogonality of a single irrep.
pub const HOM_TOL: f64 = 1e-10;
/// Orthogonality between distinct irreps and character inner products.
pub const CROSS_TOL: f64 = 1e-8;

/// How a real irrep decomposes over ℂ, detected from `(⟨χ,χ⟩, ν)` where
/// `ν = (1/|G|) Σ χ(g²)`.
///
/// * real type: `(1, 1)`, absolutely irreducible
/// * complex type: `(2, 0)`, e.g. the 2-dimensional rotation irreps of `C_n`
/// * quaternionic type: `(4, -2)`
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RealType {
    Real,
    Complex,
    Quaternionic,
}

impl RealType {
    /// `⟨χ, χ⟩`, the dimension of the commutant algebra.
    pub fn commutant_dim(self) -> usize {
        match self {
            RealType::Real => 1,
            RealType::Complex => 2,
            RealType::Quaternionic => 4,
        }
    }

    fn classify(norm: f64, indicator: f64, tol: f64) -> Option<RealType> {
        [
            (RealType::Real, 1.0, 1.0),
            (RealType::Complex, 2.0, 0.0),
            (RealType::Quaternionic, 4.0, -2.0),
        ]
        .into_iter()
        .find(|&(_, c, nu)| (norm - c).abs() <= tol && (indicator - nu).abs() <= tol)
        .map(|(t, _, _)| t)
    }
}

/// One real irreducible representation of a group.
#[derive(Clone, Debug)]
pub struct Irrep {
    name: String,
    dim: usize,
    matrices: Vec<DMatrix<f64>>,
    character: Vec<f64>,
    faithful: bool,
    orthogonal: bool,
    real_type: RealType,
}

impl Irrep {
    /// Wraps `matrices[g] = ρ(g)` and derives the character and flags.
    ///
    /// Fails if the matrices do not form a real-irreducible representation
    /// (identity, homomorphism or character test).
    pub fn from_matrices(
        name: impl Into<String>,
        group: &Group,
        matrices: Vec<DMatrix<f64>>,
    ) -> Result<Irrep> {
        let name = name.into();
        let irrep = Irrep::from_matrices_unchecked(name.clone(), group, matrices)?;
        let check = irrep.check(group);
        if !check.is_valid() {
            return Err(Error::InvalidIrrep {
                name,
                reason: check.describe(),
            });
        }
        Ok(irrep)
    }

    pub(crate) fn from_matrices_unchecked(
        name: String,
        group: &Group,
        matrices: Vec<DMatrix<f64>>,
    ) -> Result<Irrep> {
        let n = group.order();
        if matrices.len() != n {
            return Err(Error::Shape(format!(
                "{name}: {} matrices for a group of order {n}",
                matrices.len()
            )));
        }
        let dim = matrices[0].nrows();
        if matrices.iter().any(|m| m.nrows() != dim || m.ncols() != dim) {
            return Err(Error::Shape(format!("{name}: matrices are not all {dim}×{dim}")));
        }
        let character: Vec<f64> = matrices.iter().map(|m| m.trace()).collect();
        let eye = DMatrix::<f64>::identity(dim, dim);
        let faithful = (0..n)
            .filter(|&g| g != group.identity())
            .all(|g| max_abs_diff(&matrices[g], &eye) > 1e-9);
        let orthogonal = matrices
            .iter()
            .all(|m| max_abs_diff(&matmul(m, true, m, false), &eye) <= HOM_TOL);
        let norm = character_inner(&character, &character)?;
        let indicator = frobenius_schur(group, &character);
        let real_type = RealType::classify(norm, indicator, CROSS_TOL).unwrap_or(RealType::Real);
        Ok(Irrep {
            name,
            dim,
            matrices,
            character,
            faithful,
            orthogonal,
            real_type,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub(crate) fn set_name(&mut self, name: impl Into<String>) {
        self.name = name.into();
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.matrices.len()
    }

    pub fn matrix(&self, g: usize) -> &DMatrix<f64> {
        &self.matrices[g]
    }

    pub fn matrices(&self) -> &[DMatrix<f64>] {
        &self.matrices
    }

    pub fn character(&self) -> &[f64] {
        &self.character
    }

    pub fn faithful(&self) -> bool {
        self.faithful
    }

    pub fn orthogonal(&self) -> bool {
        self.orthogonal
    }

    pub fn real_type(&self) -> RealType {
        self.real_type
    }

    pub fn is_trivial(&self) -> bool {
        self.dim == 1 && self.character.iter().all(|&c| (c - 1.0).abs() <= EXACT_TOL)
    }

    /// Dimension of the representation space `span{g ↦ ρ(g)_ij}`: `d²/⟨χ,χ⟩`.
    pub fn rep_space_rank(&self) -> usize {
        self.dim * self.dim / self.real_type.commutant_dim()
    }

    /// `n × d²` matrix `R[g, i·d + j] = ρ(g)_ij`.
    pub fn flattened(&self) -> DMatrix<f64> {
        let d = self.dim;
        DMatrix::from_fn(self.order(), d * d, |g, ij| self.matrices[g][(ij / d, ij % d)])
    }

    /// Exhaustive numerical check of the irrep invariants.
    pub fn check(&self, group: &Group) -> IrrepCheck {
        let n = group.order();
        let d = self.dim;
        let eye = DMatrix::<f64>::identity(d, d);
        let identity_error = max_abs_diff(&self.matrices[group.identity()], &eye);
        let mut homomorphism_error: f64 = 0.0;
        let mut prod = DMatrix::zeros(d, d);
        for a in 0..n {
            for b in 0..n {
                crate::linalg::gemm(
                    1.0,
                    &self.matrices[a],
                    false,
                    &self.matrices[b],
                    false,
                    0.0,
                    &mut prod,
                );
                homomorphism_error =
                    homomorphism_error.max(max_abs_diff(&prod, &self.matrices[group.mul(a, b)]));
            }
        }
        let orthogonality_error = self
            .matrices
            .iter()
            .map(|m| max_abs_diff(&matmul(m, true, m, false), &eye))
            .fold(0.0, f64::max);
        let character_norm = character_inner(&self.character, &self.character).unwrap_or(f64::NAN);
        let indicator = frobenius_schur(group, &self.character);
        let classes = conjugacy_classes(group);
        let class_function_error = classes
            .classes
            .iter()
            .flat_map(|cls| {
                let first = self.character[cls[0]];
                cls.iter().map(move |&g| (self.character[g] - first).abs())
            })
            .fold(0.0, f64::max);
        // χ(g) ≤ d with equality exactly where ρ(g) = I
        let trace_bound_holds = (0..n).all(|g| {
            let at_identity = max_abs_diff(&self.matrices[g], &eye) <= 1e-9;
            let c = self.character[g];
            c <= d as f64 + 1e-9 && (at_identity == ((d as f64 - c).abs() <= 1e-9))
        });
        IrrepCheck {
            name: self.name.clone(),
            identity_error,
            homomorphism_error,
            orthogonality_error,
            character_norm,
            frobenius_schur: indicator,
            class_function_error,
            trace_bound_holds,
        }
    }
}

/// Residuals from [`Irrep::check`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IrrepCheck {
    pub name: String,
    pub identity_error: f64,
    pub homomorphism_error: f64,
    pub orthogonality_error: f64,
    /// `⟨χ, χ⟩`
    pub character_norm: f64,
    pub frobenius_schur: f64,
    pub class_function_error: f64,
    pub trace_bound_holds: bool,
}

impl IrrepCheck {
    pub fn real_type(&self) -> Option<RealType> {
        RealType::classify(self.character_norm, self.frobenius_schur, CROSS_TOL)
    }

    /// All invariants hold; irreducibility is judged over ℝ.
    pub fn is_valid(&self) -> bool {
        self.identity_error <= EXACT_TOL
            && self.homomorphism_error <= HOM_TOL
            && self.orthogonality_error <= HOM_TOL
            && self.class_function_error <= HOM_TOL
            && self.trace_bound_holds
            && self.real_type().is_some()
    }

    pub fn describe(&self) -> String {
        format!(
            "identity {:.2e}, homomorphism {:.2e}, orthogonality {:.2e}, <χ,χ> {:.6}, ν {:.6}, class fn {:.2e}, trace bound {}",
            self.identity_error,
            self.homomorphism_error,
            self.orthogonality_error,
            self.character_norm,
            self.frobenius_schur,
            self.class_function_error,
            self.trace_bound_holds
        )
    }
}

/// `⟨α, β⟩ = (1/|G|) Σ_g α(g) β(g)` for real class functions.
pub fn character_inner(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::Shape(format!(
            "character lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    Ok(a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / a.len() as f64)
}

/// Frobenius–Schur indicator `(1/|G|) Σ_g χ(g²)`.
pub fn frobenius_schur(group: &Group, character: &[f64]) -> f64 {
    let n = group.order();
    (0..n).map(|g| character[group.mul(g, g)]).sum::<f64>() / n as f64
}

/// `G[(i,j),(k,l)] = Σ_g ρ1(g)_ij ρ2(g)_kl`, a `d1² × d2²` matrix.
pub fn matrix_element_gram(a: &Irrep, b: &Irrep) -> Result<DMatrix<f64>> {
    if a.order() != b.order() {
        return Err(Error::Shape(format!(
            "irreps `{}` and `{}` belong to groups of different order",
            a.name(),
            b.name()
        )));
    }
    Ok(matmul(&a.flattened(), true, &b.flattened(), false))
}

/// Largest deviation of [`matrix_element_gram`] from the Schur pattern
/// `δ_ρσ δ_ik δ_jl |G|/d`. Only meaningful for irreps of real type.
pub fn schur_deviation(a: &Irrep, b: &Irrep, same: bool) -> Result<f64> {
    let gram = matrix_element_gram(a, b)?;
    let expected = if same {
        DMatrix::identity(gram.nrows(), gram.ncols()) * (a.order() as f64 / a.dim() as f64)
    } else {
        DMatrix::zeros(gram.nrows(), gram.ncols())
    };
    Ok(max_abs_diff(&gram, &expected))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{make_cyclic, make_symmetric};

    #[test]
    fn character_inner_examples() {
        let s5 = make_symmetric(5).unwrap();
        let triv = trivial_irrep(&s5);
        assert!((character_inner(triv.character(), triv.character()).unwrap() - 1.0).abs() < 1e-15);
        let sign = sign_irrep(&s5).unwrap();
        let std = symmetric_standard_irrep(&s5).unwrap();
        assert!(character_inner(sign.character(), std.character()).unwrap().abs() < 1e-10);

        // S_3 standard character over classes {e, transpositions, 3-cycles}
        let s3 = make_symmetric(3).unwrap();
        let chi: Vec<f64> = (0..6)
            .map(|g| {
                let p = s3.permutation(g).unwrap();
                (0..3).filter(|&i| p[i] == i).count() as f64 - 1.0
            })
            .collect();
        assert!((character_inner(&chi, &chi).unwrap() - 1.0).abs() < 1e-15);
        assert!(character_inner(&chi, &chi[..3]).is_err());
    }

    #[test]
    fn matrix_element_gram_examples() {
        let c7 = make_cyclic(7).unwrap();
        let t = trivial_irrep(&c7);
        let g = matrix_element_gram(&t, &t).unwrap();
        assert_eq!(g[(0, 0)], 7.0);

        let r1 = cyclic_2d_irrep(&c7, 1).unwrap();
        let r2 = cyclic_2d_irrep(&c7, 2).unwrap();
        let g12 = matrix_element_gram(&r1, &r2).unwrap();
        assert!(g12.iter().all(|x| x.abs() < 1e-10));

        let s5 = make_symmetric(5).unwrap();
        let std = symmetric_standard_irrep(&s5).unwrap();
        let gram = matrix_element_gram(&std, &std).unwrap();
        assert_eq!(gram.nrows(), 16);
        let expect = DMatrix::<f64>::identity(16, 16) * 30.0;
        assert!(max_abs_diff(&gram, &expect) < 1e-8 * 120.0);
        assert!(schur_deviation(&std, &std, true).unwrap() < 1e-8 * 120.0);
    }

    #[test]
    fn real_types_of_cyclic_irreps() {
        let c6 = make_cyclic(6).unwrap();
        assert_eq!(trivial_irrep(&c6).real_type(), RealType::Real);
        assert_eq!(sign_irrep(&c6).unwrap().real_type(), RealType::Real);
        let r = cyclic_2d_irrep(&c6, 1).unwrap();
        assert_eq!(r.real_type(), RealType::Complex);
        assert_eq!(r.rep_space_rank(), 2);
        let check = r.check(&c6);
        assert!((check.character_norm - 2.0).abs() < 1e-12);
        assert!(check.is_valid());
    }

    #[test]
    fn reducible_matrices_are_rejected() {
        let s3 = make_symmetric(3).unwrap();
        let perm = natural_permutation_matrices(&s3).unwrap();
        let err = Irrep::from_matrices("perm", &s3, perm).unwrap_err();
        assert!(matches!(err, Error::InvalidIrrep { .. }));
    }
}
