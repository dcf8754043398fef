//! Orthonormal bases for representation spaces over elements and over
//! input pairs.
//!
//! Hidden bases are never stored as `n² × r` matrices. Every block has the
//! form `(a,b) ↦ Ũ[φ(a,b), k]/√n` with `φ` one of `a`, `b` or `ab`, so
//! projecting pair-indexed data only needs its sums over the fibres of `φ`
//! (see [`PairSums`]).

use nalgebra::DMatrix;

use super::Irrep;
use crate::error::{Error, Result};
use crate::group::Group;
use crate::linalg::{matmul, orthonormal_columns};

/// Relative tolerance for dropping dependent flattened columns.
const RANK_TOL: f64 = 1e-8;

/// Orthonormal basis of `span{g ↦ ρ(g)_ij}` inside `ℝⁿ`.
#[derive(Clone, Debug)]
pub struct RepBasis {
    irrep_name: String,
    basis: DMatrix<f64>,
}

impl RepBasis {
    pub fn irrep_name(&self) -> &str {
        &self.irrep_name
    }

    /// `n × r` with orthonormal columns, `r` the rep-space rank.
    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    pub fn order(&self) -> usize {
        self.basis.nrows()
    }

    /// `Ũᵀ W` for an `n × k` matrix.
    pub fn coefficients(&self, w: &DMatrix<f64>) -> DMatrix<f64> {
        matmul(&self.basis, true, w, false)
    }

    /// `Ũ Ũᵀ W`.
    pub fn project(&self, w: &DMatrix<f64>) -> DMatrix<f64> {
        matmul(&self.basis, false, &self.coefficients(w), false)
    }
}

/// Orthonormalizes the flattened matrix elements of `irrep`.
///
/// Columns are taken in `(i, j)` order, so the basis is deterministic for a
/// fixed irrep. Irreps of complex or quaternionic type have linearly
/// dependent matrix elements and yield fewer than `d²` columns.
pub fn rep_space_basis(irrep: &Irrep) -> Result<RepBasis> {
    let basis = orthonormal_columns(&irrep.flattened(), RANK_TOL);
    let expected = irrep.rep_space_rank();
    if basis.ncols() != expected {
        return Err(Error::RankDeficient {
            what: format!("representation space of `{}`", irrep.name()),
            rank: basis.ncols(),
            expected,
        });
    }
    Ok(RepBasis {
        irrep_name: irrep.name().to_string(),
        basis,
    })
}

/// Which function of the pair `(a, b)` a hidden block follows.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PairBlock {
    A,
    B,
    Ab,
}

impl PairBlock {
    pub const ALL: [PairBlock; 3] = [PairBlock::A, PairBlock::B, PairBlock::Ab];

    pub fn label(self) -> &'static str {
        match self {
            PairBlock::A => "a",
            PairBlock::B => "b",
            PairBlock::Ab => "ab",
        }
    }
}

/// Fibre sums of pair-indexed data.
///
/// For `x` of shape `k × n²` whose column `a·n + b` belongs to the pair
/// `(a, b)`, `a[g, j] = Σ_b x[j, (g,b)]`, `b[g, j] = Σ_a x[j, (a,g)]` and
/// `ab[g, j] = Σ_{ab = g} x[j, (a,b)]`, each `n × k`.
#[derive(Clone, Debug)]
pub struct PairSums {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub ab: DMatrix<f64>,
}

impl PairSums {
    pub fn zeros(n: usize, k: usize) -> PairSums {
        PairSums {
            a: DMatrix::zeros(n, k),
            b: DMatrix::zeros(n, k),
            ab: DMatrix::zeros(n, k),
        }
    }

    pub fn new(group: &Group, x: &DMatrix<f64>) -> Result<PairSums> {
        let n = group.order();
        if x.ncols() != n * n {
            return Err(Error::Shape(format!(
                "pair data has {} columns, expected n² = {}",
                x.ncols(),
                n * n
            )));
        }
        let mut sums = PairSums::zeros(n, x.nrows());
        sums.add_chunk(group, 0, x);
        Ok(sums)
    }

    /// Adds columns `first .. first + x.ncols()` of the pair data.
    pub fn add_chunk(&mut self, group: &Group, first: usize, x: &DMatrix<f64>) {
        let n = group.order();
        let k = x.nrows();
        for (offset, col) in x.column_iter().enumerate() {
            let p = first + offset;
            let (ia, ib) = (p / n, p % n);
            let c = group.mul(ia, ib);
            for j in 0..k {
                let v = col[j];
                self.a[(ia, j)] += v;
                self.b[(ib, j)] += v;
                self.ab[(c, j)] += v;
            }
        }
    }

    /// Subtracts the contribution of a constant column `mean`: every fibre
    /// holds `n` pairs.
    pub fn remove_constant(&mut self, mean: &[f64]) {
        let n = self.a.nrows() as f64;
        for m in [&mut self.a, &mut self.b, &mut self.ab] {
            for (j, mu) in mean.iter().enumerate() {
                m.column_mut(j).add_scalar_mut(-n * mu);
            }
        }
    }

    pub fn block(&self, which: PairBlock) -> &DMatrix<f64> {
        match which {
            PairBlock::A => &self.a,
            PairBlock::B => &self.b,
            PairBlock::Ab => &self.ab,
        }
    }
}

/// The three hidden representation blocks of one irrep over `ℝ^{n²}`.
///
/// Block `φ` has orthonormal columns `(a,b) ↦ Ũ[φ(a,b), k]/√n` where `Ũ` is
/// the irrep's [`RepBasis`]. For a non-trivial irrep the three blocks are
/// mutually orthogonal, and blocks of distinct non-trivial irreps are
/// orthogonal as well; for the trivial irrep all three coincide with the
/// constant direction.
#[derive(Clone, Debug)]
pub struct HiddenRepBasis {
    irrep_name: String,
    rep: RepBasis,
    mult: Vec<usize>,
    trivial: bool,
}

pub fn hidden_rep_bases(group: &Group, irrep: &Irrep) -> Result<HiddenRepBasis> {
    if irrep.order() != group.order() {
        return Err(Error::Shape(format!(
            "irrep `{}` has {} matrices, group order is {}",
            irrep.name(),
            irrep.order(),
            group.order()
        )));
    }
    Ok(HiddenRepBasis {
        irrep_name: irrep.name().to_string(),
        rep: rep_space_basis(irrep)?,
        mult: group.mult_table().to_vec(),
        trivial: irrep.is_trivial(),
    })
}

impl HiddenRepBasis {
    pub fn irrep_name(&self) -> &str {
        &self.irrep_name
    }

    pub fn rep_basis(&self) -> &RepBasis {
        &self.rep
    }

    pub fn rank(&self) -> usize {
        self.rep.rank()
    }

    pub fn is_trivial(&self) -> bool {
        self.trivial
    }

    fn order(&self) -> usize {
        self.rep.order()
    }

    /// Coordinates of pair data in one block: `Ũᵀ S_φ / √n`, shape `r × k`.
    pub fn coefficients(&self, sums: &PairSums, which: PairBlock) -> DMatrix<f64> {
        self.rep.coefficients(sums.block(which)) / (self.order() as f64).sqrt()
    }

    /// Per-element field whose pair expansion is the projection onto the
    /// block: the projected datum at `(a,b)` is row `φ(a,b)` of the result.
    pub fn element_field(&self, coefficients: &DMatrix<f64>) -> DMatrix<f64> {
        matmul(self.rep.basis(), false, coefficients, false) / (self.order() as f64).sqrt()
    }

    /// Index of the element that block `which` reads for pair `(a, b)`.
    pub fn element_of(&self, which: PairBlock, a: usize, b: usize) -> usize {
        match which {
            PairBlock::A => a,
            PairBlock::B => b,
            PairBlock::Ab => self.mult[a * self.order() + b],
        }
    }

    /// Dense `n² × r` block, rows in row-major pair order. Only sensible for
    /// small groups.
    pub fn materialize(&self, which: PairBlock) -> DMatrix<f64> {
        let n = self.order();
        let s = (n as f64).sqrt();
        let u = self.rep.basis();
        DMatrix::from_fn(n * n, self.rank(), |p, k| {
            u[(self.element_of(which, p / n, p % n), k)] / s
        })
    }

    pub fn basis_a(&self) -> DMatrix<f64> {
        self.materialize(PairBlock::A)
    }

    pub fn basis_b(&self) -> DMatrix<f64> {
        self.materialize(PairBlock::B)
    }

    pub fn basis_ab(&self) -> DMatrix<f64> {
        self.materialize(PairBlock::Ab)
    }
}
