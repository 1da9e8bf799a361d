//! Truncated boson operators, collective spin operators and their embedding
//! into the composite light ⊗ atom space (light index outer).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermit::{kron, ComplexMatrix, HermitianOperator};

/// Dimension of the truncated Fock space, basis `|0⟩ … |n−1⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BosonCutoff(usize);

impl BosonCutoff {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Parameter(format!("photon cutoff must be >= 2, got {n}")));
        }
        Ok(Self(n))
    }

    pub fn n(self) -> usize {
        self.0
    }
}

/// Collective spin of `N` two-level atoms in the maximal sector `j = N/2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpinLength(usize);

impl SpinLength {
    pub fn new(atoms: usize) -> Result<Self> {
        if atoms == 0 {
            return Err(Error::Parameter("atom count must be >= 1".into()));
        }
        Ok(Self(atoms))
    }

    pub fn atoms(self) -> usize {
        self.0
    }

    pub fn j(self) -> f64 {
        self.0 as f64 / 2.0
    }

    pub fn dim(self) -> usize {
        self.0 + 1
    }

    /// `m` of basis index `idx`; the basis runs `m = j, j−1, …, −j`.
    pub fn m_of(self, idx: usize) -> f64 {
        self.j() - idx as f64
    }
}

/// Truncated annihilation operator: `a[k−1][k] = √k`.
pub fn annihilation(cutoff: BosonCutoff) -> ComplexMatrix {
    let n = cutoff.n();
    let mut a = ComplexMatrix::zeros(n, n);
    for k in 1..n {
        a.set(k - 1, k, Complex64::new((k as f64).sqrt(), 0.0));
    }
    a
}

pub fn number_operator(cutoff: BosonCutoff) -> HermitianOperator {
    let diag: Vec<f64> = (0..cutoff.n()).map(|k| k as f64).collect();
    HermitianOperator::from_real_diagonal(&diag)
}

/// `J_z`, `J_+`, `J_−` in the descending-`m` basis.
#[derive(Clone, Debug)]
pub struct CollectiveSpin {
    pub jz: HermitianOperator,
    pub jplus: ComplexMatrix,
    pub jminus: ComplexMatrix,
}

impl CollectiveSpin {
    /// `J_x = (J_+ + J_−)/2`.
    pub fn jx(&self) -> ComplexMatrix {
        self.jplus
            .add(&self.jminus)
            .expect("same shape")
            .scale(Complex64::new(0.5, 0.0))
    }

    /// `J_y = (J_+ − J_−)/(2i)`.
    pub fn jy(&self) -> ComplexMatrix {
        self.jplus
            .sub(&self.jminus)
            .expect("same shape")
            .scale(Complex64::new(0.0, -0.5))
    }
}

pub fn collective_spin(spin: SpinLength) -> CollectiveSpin {
    let dim = spin.dim();
    let j = spin.j();
    let jz: Vec<f64> = (0..dim).map(|i| spin.m_of(i)).collect();
    let mut jplus = ComplexMatrix::zeros(dim, dim);
    // J+ |m⟩ = √((j−m)(j+m+1)) |m+1⟩ and |m+1⟩ sits one index earlier
    for idx in 1..dim {
        let m = spin.m_of(idx);
        jplus.set(idx - 1, idx, Complex64::new(((j - m) * (j + m + 1.0)).sqrt(), 0.0));
    }
    CollectiveSpin {
        jz: HermitianOperator::from_real_diagonal(&jz),
        jminus: jplus.adjoint(),
        jplus,
    }
}

/// `light_op ⊗ atom_op` on the composite space of dimension `n(N+1)`.
pub fn embed(
    light_op: &ComplexMatrix,
    atom_op: &ComplexMatrix,
    cutoff: BosonCutoff,
    spin: SpinLength,
) -> Result<ComplexMatrix> {
    let n = cutoff.n();
    let s = spin.dim();
    if light_op.rows() != n || light_op.cols() != n {
        return Err(Error::Shape(format!(
            "light operator is {}x{}, cutoff requires {n}x{n}",
            light_op.rows(),
            light_op.cols()
        )));
    }
    if atom_op.rows() != s || atom_op.cols() != s {
        return Err(Error::Shape(format!(
            "atom operator is {}x{}, spin requires {s}x{s}",
            atom_op.rows(),
            atom_op.cols()
        )));
    }
    Ok(kron(light_op, atom_op))
}

/// `a†a ⊗ I`, the photon-number order parameter on the composite space.
pub fn embedded_number_operator(cutoff: BosonCutoff, spin: SpinLength) -> HermitianOperator {
    let diag: Vec<f64> = (0..cutoff.n())
        .flat_map(|k| std::iter::repeat_n(k as f64, spin.dim()))
        .collect();
    HermitianOperator::from_real_diagonal(&diag)
}
