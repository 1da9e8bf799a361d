//! Rabi and Dicke Hamiltonians, the critical coupling and the parity operator.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermit::{hermitize, ComplexMatrix, HermitianOperator};
use crate::operators::{annihilation, collective_spin, embed, embedded_number_operator, BosonCutoff, SpinLength};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Rabi,
    Dicke,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Rabi => "rabi",
            ModelKind::Dicke => "dicke",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rabi" => Ok(ModelKind::Rabi),
            "dicke" => Ok(ModelKind::Dicke),
            other => Err(Error::Parameter(format!(
                "unknown model '{other}' (expected rabi|dicke)"
            ))),
        }
    }
}

/// Field frequency, atomic splitting, coupling and truncation of one model
/// instance. Derived quantities are always recomputed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub omega0: f64,
    pub omega: f64,
    pub g: f64,
    pub cutoff: BosonCutoff,
    pub spin: SpinLength,
}

impl ModelParams {
    pub fn new(omega0: f64, omega: f64, g: f64, cutoff: BosonCutoff, spin: SpinLength) -> Result<Self> {
        let p = Self {
            omega0,
            omega,
            g,
            cutoff,
            spin,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega0.is_finite() && self.omega0 > 0.0) {
            return Err(Error::Parameter(format!("omega0 must be > 0, got {}", self.omega0)));
        }
        if !(self.omega.is_finite() && self.omega > 0.0) {
            return Err(Error::Parameter(format!("Omega must be > 0, got {}", self.omega)));
        }
        if !(self.g.is_finite() && self.g >= 0.0) {
            return Err(Error::Parameter(format!("g must be >= 0, got {}", self.g)));
        }
        Ok(())
    }

    /// `Ω/ω₀`.
    pub fn eta(&self) -> f64 {
        self.omega / self.omega0
    }

    /// `ΩN/ω₀`.
    pub fn gamma(&self) -> f64 {
        self.eta() * self.spin.atoms() as f64
    }

    pub fn critical_coupling(&self) -> f64 {
        critical_coupling(self.omega0, self.omega)
    }

    pub fn dim(&self) -> usize {
        self.cutoff.n() * self.spin.dim()
    }
}

/// `√(ω₀Ω)/2`.
pub fn critical_coupling(omega0: f64, omega: f64) -> f64 {
    (omega0 * omega).sqrt() / 2.0
}

/// A model family with everything fixed except the coupling.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub omega0: f64,
    pub omega: f64,
    pub cutoff: BosonCutoff,
    pub spin: SpinLength,
}

impl ModelSpec {
    /// Rabi model with `ω₀ = 1` and `Ω = η`.
    pub fn rabi(eta: f64, n: usize) -> Result<Self> {
        Ok(Self {
            kind: ModelKind::Rabi,
            omega0: 1.0,
            omega: eta,
            cutoff: BosonCutoff::new(n)?,
            spin: SpinLength::new(1)?,
        })
    }

    /// Dicke model with `ω₀ = 1` and `Ω = η`.
    pub fn dicke(eta: f64, n: usize, atoms: usize) -> Result<Self> {
        Ok(Self {
            kind: ModelKind::Dicke,
            omega0: 1.0,
            omega: eta,
            cutoff: BosonCutoff::new(n)?,
            spin: SpinLength::new(atoms)?,
        })
    }

    pub fn critical_coupling(&self) -> f64 {
        critical_coupling(self.omega0, self.omega)
    }

    pub fn eta(&self) -> f64 {
        self.omega / self.omega0
    }

    pub fn gamma(&self) -> f64 {
        self.eta() * self.spin.atoms() as f64
    }

    pub fn params_at_ratio(&self, ratio: f64) -> Result<ModelParams> {
        ModelParams::new(
            self.omega0,
            self.omega,
            ratio * self.critical_coupling(),
            self.cutoff,
            self.spin,
        )
    }

    pub fn hamiltonian_at_ratio(&self, ratio: f64) -> Result<HermitianOperator> {
        let p = self.params_at_ratio(ratio)?;
        match self.kind {
            ModelKind::Rabi => build_rabi(&p),
            ModelKind::Dicke => build_dicke(&p),
        }
    }

    /// The photon number `a†a ⊗ I` used as both OTOC operators.
    pub fn number_operator(&self) -> HermitianOperator {
        embedded_number_operator(self.cutoff, self.spin)
    }
}

fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// `ω₀·a†a⊗I + (Ω/2)·I⊗σz + g·(a†+a)⊗σx`, spin basis `(↑, ↓)`.
pub fn build_rabi(params: &ModelParams) -> Result<HermitianOperator> {
    params.validate()?;
    if params.spin.atoms() != 1 {
        return Err(Error::Parameter(format!(
            "Rabi model needs exactly one atom, got N = {}",
            params.spin.atoms()
        )));
    }
    let sigma_z = ComplexMatrix::from_diagonal(&[1.0, -1.0]);
    let sigma_x = ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0])?;
    assemble(params, &sigma_z.scale(real(0.5)), &sigma_x, 1.0)
}

/// `ω₀·a†a⊗I + Ω·I⊗Jz + (g/√(2j))·(a†+a)⊗(J₊+J₋)`.
pub fn build_dicke(params: &ModelParams) -> Result<HermitianOperator> {
    params.validate()?;
    let spin = collective_spin(params.spin);
    let jx2 = spin.jplus.add(&spin.jminus)?;
    let norm = 1.0 / (params.spin.atoms() as f64).sqrt();
    assemble(params, spin.jz.matrix(), &jx2, norm)
}

fn assemble(
    params: &ModelParams,
    atom_z: &ComplexMatrix,
    atom_x: &ComplexMatrix,
    coupling_norm: f64,
) -> Result<HermitianOperator> {
    let (cutoff, spin) = (params.cutoff, params.spin);
    let a = annihilation(cutoff);
    let quad = a.add(&a.adjoint())?;
    let id_light = ComplexMatrix::identity(cutoff.n());
    let field = embedded_number_operator(cutoff, spin)
        .into_matrix()
        .scale(real(params.omega0));
    let atom = embed(&id_light, atom_z, cutoff, spin)?.scale(real(params.omega));
    let coupling = embed(&quad, atom_x, cutoff, spin)?.scale(real(params.g * coupling_norm));
    hermitize(&field.add(&atom)?.add(&coupling)?)
}

/// Parity `exp{iπ(a†a + Jz + j)}`; for one atom this is `exp{iπ(a†a + (1+σz)/2)}`.
pub fn build_parity(cutoff: BosonCutoff, spin: SpinLength) -> HermitianOperator {
    let s = spin.dim();
    let diag: Vec<f64> = (0..cutoff.n() * s)
        .map(|idx| {
            let k = idx / s;
            // m + j = N − spin index, an integer
            let mj = spin.atoms() - idx % s;
            if (k + mj) % 2 == 0 {
                1.0
            } else {
                -1.0
            }
        })
        .collect();
    HermitianOperator::from_real_diagonal(&diag)
}
