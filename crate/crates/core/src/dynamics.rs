//! Spectral time evolution, Boltzmann weights and ground states.
//!
//! A frame diagonalizes `H` once and keeps `W`, `V` rotated into the
//! eigenbasis, so `W(t)` costs one phase multiplication per matrix entry.
//! Internally the frame is split into the connected components of the
//! joint sparsity pattern of `H`, `W` and `V` (the parity sectors for the
//! Rabi and Dicke models); all three operators are exactly block diagonal
//! in that decomposition.

use faer::Mat;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hermit::{eigh_faer, ComplexMatrix, HermitianOperator, SpectralDecomposition};

/// One block of the frame, indexed by `positions` into the global
/// ascending eigenvalue order.
#[derive(Clone, Debug)]
pub(crate) struct Sector {
    pub positions: Vec<usize>,
    pub energies: Vec<f64>,
    pub w: Mat<Complex64>,
    pub v: Mat<Complex64>,
    /// Real copies of `w` and `v`, present when `H`, `W`, `V` are real on
    /// this block.
    pub real: Option<(Mat<f64>, Mat<f64>)>,
}

impl Sector {
    pub fn dim(&self) -> usize {
        self.positions.len()
    }
}

/// `H` diagonalized once, with `W(0)` and `V(0)` in its eigenbasis.
#[derive(Clone, Debug)]
pub struct EvolvedFrame {
    spectral: SpectralDecomposition,
    w_eig: ComplexMatrix,
    v_eig: ComplexMatrix,
    pub(crate) sectors: Vec<Sector>,
}

impl EvolvedFrame {
    pub fn spectral(&self) -> &SpectralDecomposition {
        &self.spectral
    }

    pub fn dim(&self) -> usize {
        self.spectral.dim()
    }

    pub fn w_eig(&self) -> &ComplexMatrix {
        &self.w_eig
    }

    pub fn v_eig(&self) -> &ComplexMatrix {
        &self.v_eig
    }

    /// Sizes of the independent blocks the frame was split into.
    pub fn sector_dims(&self) -> Vec<usize> {
        self.sectors.iter().map(Sector::dim).collect()
    }

    pub fn thermal_weights(&self, beta: f64) -> Result<ThermalWeights> {
        thermal_weights(&self.spectral, beta)
    }

    /// Expresses a state given in the computational basis in the eigenbasis.
    pub fn state_to_eigenbasis(&self, psi: &[Complex64]) -> Result<Vec<Complex64>> {
        let u = self.spectral.eigenvectors();
        let d = self.dim();
        if psi.len() != d {
            return Err(Error::Shape(format!("state of length {} for dimension {d}", psi.len())));
        }
        Ok((0..d)
            .map(|a| (0..d).map(|i| u.get(i, a).conj() * psi[i]).sum())
            .collect())
    }
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

fn components(ops: &[&ComplexMatrix]) -> Vec<Vec<usize>> {
    let d = ops[0].rows();
    let mut uf = UnionFind((0..d).collect());
    for op in ops {
        for i in 0..d {
            for j in (i + 1)..d {
                if op.get(i, j) != Complex64::new(0.0, 0.0) || op.get(j, i) != Complex64::new(0.0, 0.0) {
                    uf.union(i, j);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut label = vec![usize::MAX; d];
    for i in 0..d {
        let r = uf.find(i);
        if label[r] == usize::MAX {
            label[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[label[r]].push(i);
    }
    groups
}

fn sub_block(op: &ComplexMatrix, idx: &[usize]) -> Mat<Complex64> {
    Mat::from_fn(idx.len(), idx.len(), |i, j| op.get(idx[i], idx[j]))
}

fn rotate(u: &Mat<Complex64>, op: &Mat<Complex64>) -> Mat<Complex64> {
    u.adjoint() * op * u
}

/// Diagonalizes `H` and rotates `W`, `V` into its eigenbasis.
pub fn prepare_frame(h: &HermitianOperator, w: &HermitianOperator, v: &HermitianOperator) -> Result<EvolvedFrame> {
    let d = h.dim();
    if w.dim() != d || v.dim() != d {
        return Err(Error::Shape(format!(
            "frame operators have dimensions H {d}, W {}, V {}",
            w.dim(),
            v.dim()
        )));
    }
    let (hm, wm, vm) = (h.matrix(), w.matrix(), v.matrix());
    let groups = components(&[hm, wm, vm]);

    struct Local {
        idx: Vec<usize>,
        energies: Vec<f64>,
        u: Mat<Complex64>,
        w: Mat<Complex64>,
        v: Mat<Complex64>,
        real: bool,
    }
    let mut locals = Vec::with_capacity(groups.len());
    for idx in groups {
        let hb = sub_block(hm, &idx);
        let wb = sub_block(wm, &idx);
        let vb = sub_block(vm, &idx);
        let is_real = |m: &Mat<Complex64>| (0..m.nrows()).all(|i| (0..m.ncols()).all(|j| m[(i, j)].im == 0.0));
        let real = is_real(&hb) && is_real(&wb) && is_real(&vb);
        let solved = if real {
            let hr = Mat::<f64>::from_fn(hb.nrows(), hb.ncols(), |i, j| hb[(i, j)].re);
            eigh_faer(hr.as_ref(), |x: &f64| *x).map(|(e, u)| {
                (
                    e,
                    Mat::from_fn(u.nrows(), u.ncols(), |i, j| Complex64::new(u[(i, j)], 0.0)),
                )
            })
        } else {
            eigh_faer(hb.as_ref(), |z: &Complex64| z.re)
        };
        let (energies, u) = solved.map_err(|_| {
            Error::Numerical(format!(
                "Hermitian eigensolver did not converge on a block of size {} (max |H| {:.3e})",
                idx.len(),
                hm.max_abs()
            ))
        })?;
        let (w, v) = (rotate(&u, &wb), rotate(&u, &vb));
        locals.push(Local {
            idx,
            energies,
            u,
            w,
            v,
            real,
        });
    }

    // merge block spectra into one ascending order; ties broken by block then index
    let mut order: Vec<(f64, usize, usize)> = locals
        .iter()
        .enumerate()
        .flat_map(|(s, l)| l.energies.iter().enumerate().map(move |(k, &e)| (e, s, k)))
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut position: Vec<Vec<usize>> = locals.iter().map(|l| vec![0; l.energies.len()]).collect();
    for (pos, &(_, s, k)) in order.iter().enumerate() {
        position[s][k] = pos;
    }
    let eigenvalues: Vec<f64> = order.iter().map(|t| t.0).collect();

    let mut u_full = ComplexMatrix::zeros(d, d);
    let mut w_eig = ComplexMatrix::zeros(d, d);
    let mut v_eig = ComplexMatrix::zeros(d, d);
    let mut sectors = Vec::with_capacity(locals.len());
    for (s, l) in locals.into_iter().enumerate() {
        let pos = &position[s];
        for (r, &row) in l.idx.iter().enumerate() {
            for (k, &p) in pos.iter().enumerate() {
                u_full.set(row, p, l.u[(r, k)]);
            }
        }
        for (a, &pa) in pos.iter().enumerate() {
            for (b, &pb) in pos.iter().enumerate() {
                w_eig.set(pa, pb, l.w[(a, b)]);
                v_eig.set(pa, pb, l.v[(a, b)]);
            }
        }
        let real = l.real.then(|| {
            let re = |m: &Mat<Complex64>| Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)].re);
            (re(&l.w), re(&l.v))
        });
        sectors.push(Sector {
            positions: pos.clone(),
            energies: l.energies,
            w: l.w,
            v: l.v,
            real,
        });
    }
    Ok(EvolvedFrame {
        spectral: SpectralDecomposition::from_parts(eigenvalues, u_full),
        w_eig,
        v_eig,
        sectors,
    })
}

/// `W(t)` in the eigenbasis: `W_eig[a][b]·exp(i(E_a − E_b)t)`.
pub fn heisenberg_at(frame: &EvolvedFrame, t: f64) -> ComplexMatrix {
    let phases = phases(frame.spectral.eigenvalues(), t);
    let w = &frame.w_eig;
    ComplexMatrix::from_fn(frame.dim(), frame.dim(), |a, b| {
        w.get(a, b) * phases[a] * phases[b].conj()
    })
}

/// `exp(iE_a t)` for every level.
pub(crate) fn phases(energies: &[f64], t: f64) -> Vec<Complex64> {
    energies
        .iter()
        .map(|&e| {
            let (s, c) = (e * t).sin_cos();
            Complex64::new(c, s)
        })
        .collect()
}

/// Normalized Boltzmann populations of the eigenstates.
#[derive(Clone, Debug, PartialEq)]
pub struct ThermalWeights {
    beta: f64,
    weights: Vec<f64>,
}

impl ThermalWeights {
    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// `T = 1/β`; infinite at `β = 0`.
    pub fn temperature(&self) -> f64 {
        1.0 / self.beta
    }
}

/// `w_i = exp(−β(E_i − E_min)) / Σ_j exp(−β(E_j − E_min))`.
pub fn thermal_weights(spectral: &SpectralDecomposition, beta: f64) -> Result<ThermalWeights> {
    if !(beta.is_finite() && beta >= 0.0) {
        return Err(Error::Parameter(format!("beta must be finite and >= 0, got {beta}")));
    }
    let e = spectral.eigenvalues();
    let e_min = e.iter().copied().fold(f64::INFINITY, f64::min);
    let raw: Vec<f64> = e.iter().map(|&x| (-beta * (x - e_min)).exp()).collect();
    let z: f64 = raw.iter().sum();
    Ok(ThermalWeights {
        beta,
        weights: raw.into_iter().map(|x| x / z).collect(),
    })
}

/// Eigenvector of the lowest eigenvalue, unit norm.
pub fn ground_state(spectral: &SpectralDecomposition) -> Vec<Complex64> {
    let u = spectral.eigenvectors();
    (0..spectral.dim()).map(|i| u.get(i, 0)).collect()
}

/// True when the two lowest levels are closer than `1e-10·max|E|`, so the
/// ground state is an arbitrary member of a (near-)degenerate doublet.
pub fn ground_state_degenerate(spectral: &SpectralDecomposition) -> bool {
    let e = spectral.eigenvalues();
    e.len() > 1 && (e[1] - e[0]) < 1e-10 * spectral.max_abs_eigenvalue()
}

/// `Σ_a w_a O_aa` with `O` in the eigenbasis.
pub fn thermal_expectation(weights: &ThermalWeights, op_eig: &ComplexMatrix) -> f64 {
    weights
        .weights
        .iter()
        .enumerate()
        .map(|(a, w)| w * op_eig.get(a, a).re)
        .sum()
}

/// `⟨ψ|O|ψ⟩`, real part.
pub fn state_expectation(psi: &[Complex64], op: &ComplexMatrix) -> f64 {
    let d = psi.len();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..d {
        let row: Complex64 = (0..d).map(|j| op.get(i, j) * psi[j]).sum();
        acc += psi[i].conj() * row;
    }
    acc.re
}
