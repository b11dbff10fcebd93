//! Linear algebra on the truncated Fock space `span{|0⟩, …, |dim−1⟩}`.
//!
//! Operators are dense complex matrices. Every exponential needed by the
//! rest of the crate is of the form `e^{i s A}` with `A` hermitian, so it is
//! evaluated through the spectral decomposition of `A` and is unitary up to
//! roundoff.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{MetriqError, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Flag threshold for [`OperatorMatrix::is_hermitian`].
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Flag threshold for [`StateVector::is_normalized`].
pub const NORM_TOL: f64 = 1e-12;

pub(crate) const I: Complex64 = Complex64::new(0.0, 1.0);

/// Truncation level and Planck constant shared by every object built on a
/// given Fock space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HilbertDim {
    dim: usize,
    hbar: f64,
}

impl HilbertDim {
    pub fn new(dim: usize, hbar: f64) -> Result<Self> {
        if dim < 2 {
            return Err(MetriqError::InvalidDimension { dim, min: 2 });
        }
        if !(hbar.is_finite() && hbar > 0.0) {
            return Err(crate::error::invalid("hbar", format!("must be positive, got {hbar}")));
        }
        Ok(Self { dim, hbar })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    /// Same ħ, different cutoff.
    pub fn with_dim(&self, dim: usize) -> Result<Self> {
        Self::new(dim, self.hbar)
    }
}

/// Dense square operator on a truncated Fock space.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    entries: CMatrix,
    space: HilbertDim,
    hermitian: bool,
}

impl OperatorMatrix {
    pub fn new(entries: CMatrix, space: HilbertDim) -> Result<Self> {
        if entries.nrows() != entries.ncols() || entries.nrows() != space.dim() {
            return Err(MetriqError::ContractViolation(format!(
                "operator shape {}x{} does not match dim {}",
                entries.nrows(),
                entries.ncols(),
                space.dim()
            )));
        }
        if entries.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(MetriqError::ContractViolation("operator has non-finite entries".into()));
        }
        let hermitian = hermiticity_defect(&entries) <= HERMITIAN_TOL;
        Ok(Self {
            entries,
            space,
            hermitian,
        })
    }

    pub fn identity(space: HilbertDim) -> Self {
        Self {
            entries: CMatrix::identity(space.dim(), space.dim()),
            space,
            hermitian: true,
        }
    }

    pub fn from_real_diagonal(diag: &[f64], hbar: f64) -> Result<Self> {
        let space = HilbertDim::new(diag.len(), hbar)?;
        let d = CVector::from_iterator(diag.len(), diag.iter().map(|&x| Complex64::new(x, 0.0)));
        Self::new(CMatrix::from_diagonal(&d), space)
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_entries(self) -> CMatrix {
        self.entries
    }

    pub fn space(&self) -> HilbertDim {
        self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[(row, col)]
    }

    pub fn adjoint(&self) -> Self {
        Self {
            entries: self.entries.adjoint(),
            space: self.space,
            hermitian: self.hermitian,
        }
    }

    /// Largest entry modulus, ‖A‖_max.
    pub fn max_abs(&self) -> f64 {
        max_abs(&self.entries)
    }

    pub fn apply(&self, v: &StateVector) -> Result<StateVector> {
        self.check_len(v.len())?;
        StateVector::new(&self.entries * v.amps())
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        self.check_len(other.dim())?;
        Self::new(&self.entries * &other.entries, self.space)
    }

    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.check_len(other.dim())?;
        Self::new(
            &self.entries * &other.entries - &other.entries * &self.entries,
            self.space,
        )
    }

    /// Upper-left `levels × levels` block, i.e. the compression onto the
    /// lowest `levels` Fock states.
    pub fn compress(&self, levels: usize) -> Result<Self> {
        if levels > self.dim() {
            return Err(MetriqError::ContractViolation(format!(
                "cannot compress dim {} to {levels} levels",
                self.dim()
            )));
        }
        Self::new(
            self.entries.view((0, 0), (levels, levels)).into_owned(),
            self.space.with_dim(levels)?,
        )
    }

    pub fn diagonal_real(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.entries[(i, i)].re).collect()
    }

    fn check_len(&self, n: usize) -> Result<()> {
        if n != self.dim() {
            return Err(MetriqError::ContractViolation(format!(
                "dimension mismatch: operator {} vs {n}",
                self.dim()
            )));
        }
        Ok(())
    }
}

/// A vector of Fock amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amps: CVector,
    normalized: bool,
}

impl StateVector {
    pub fn new(amps: CVector) -> Result<Self> {
        if amps.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(MetriqError::ContractViolation("state has non-finite amplitudes".into()));
        }
        let normalized = (amps.norm() - 1.0).abs() <= NORM_TOL;
        Ok(Self { amps, normalized })
    }

    pub fn from_slice(amps: &[Complex64]) -> Result<Self> {
        Self::new(CVector::from_column_slice(amps))
    }

    /// Number state |n⟩.
    pub fn basis(dim: usize, n: usize) -> Result<Self> {
        if n >= dim {
            return Err(MetriqError::ContractViolation(format!("level {n} outside dim {dim}")));
        }
        let mut amps = CVector::zeros(dim);
        amps[n] = Complex64::new(1.0, 0.0);
        Ok(Self {
            amps,
            normalized: true,
        })
    }

    pub fn amps(&self) -> &CVector {
        &self.amps
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn norm(&self) -> f64 {
        self.amps.norm()
    }

    /// ⟨self|other⟩, antilinear in `self`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.amps.dotc(&other.amps)
    }

    pub fn normalize(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 {
            return Err(MetriqError::ContractViolation("cannot normalize the zero vector".into()));
        }
        Self::new(self.amps.unscale(n))
    }

    /// ⟨self|A|self⟩.
    pub fn expect(&self, op: &OperatorMatrix) -> Result<Complex64> {
        let av = op.apply(self)?;
        Ok(self.inner(&av))
    }
}

/// Spectral decomposition `A = V diag(λ) V†` with λ ascending.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub values: Vec<f64>,
    pub vectors: OperatorMatrix,
}

impl Spectrum {
    /// `V diag(f(λ)) V†`.
    pub fn map(&self, f: impl Fn(f64) -> Complex64) -> CMatrix {
        let v = self.vectors.entries();
        let mut scaled = v.clone();
        for (j, &lam) in self.values.iter().enumerate() {
            let w = f(lam);
            for z in scaled.column_mut(j).iter_mut() {
                *z *= w;
            }
        }
        scaled * v.adjoint()
    }

    /// `e^{i s A}`.
    pub fn exp_i(&self, s: f64) -> CMatrix {
        self.map(|lam| Complex64::from_polar(1.0, s * lam))
    }

    /// `e^{i s A} v` without forming the full exponential.
    pub fn exp_i_apply(&self, s: f64, v: &CVector) -> CVector {
        let vecs = self.vectors.entries();
        let mut coeffs = vecs.ad_mul(v);
        for (c, &lam) in coeffs.iter_mut().zip(&self.values) {
            *c *= Complex64::from_polar(1.0, s * lam);
        }
        vecs * coeffs
    }
}

/// Annihilation operator, `a|n⟩ = √n |n−1⟩`.
pub fn make_ladder(space: HilbertDim) -> Result<OperatorMatrix> {
    let dim = space.dim();
    if dim < 2 {
        return Err(MetriqError::InvalidDimension { dim, min: 2 });
    }
    let mut a = CMatrix::zeros(dim, dim);
    for n in 1..dim {
        a[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    OperatorMatrix::new(a, space)
}

/// `(Q, P)` with `Q = √(ħ/2)(a + a†)` and `P = i√(ħ/2)(a† − a)`.
pub fn make_canonical_pair(space: HilbertDim) -> Result<(OperatorMatrix, OperatorMatrix)> {
    let a = make_ladder(space)?.into_entries();
    let ad = a.adjoint();
    let s = (space.hbar() / 2.0).sqrt();
    let q = (&a + &ad) * Complex64::new(s, 0.0);
    let p = (&ad - &a) * Complex64::new(0.0, s);
    Ok((OperatorMatrix::new(q, space)?, OperatorMatrix::new(p, space)?))
}

pub fn hermitian_eig(a: &OperatorMatrix) -> Result<Spectrum> {
    if !a.is_hermitian() {
        return Err(MetriqError::ContractViolation(
            "hermitian_eig called on a non-hermitian operator".into(),
        ));
    }
    let eig = nalgebra::SymmetricEigen::new(a.entries().clone());
    let mut order: Vec<usize> = (0..a.dim()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(a.dim(), a.dim(), |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(Spectrum {
        values,
        vectors: OperatorMatrix::new(vectors, a.space())?,
    })
}

/// `e^{−iHT/ħ} v`.
pub fn evolve(h: &OperatorMatrix, t: f64, v: &StateVector) -> Result<StateVector> {
    let spec = hermitian_eig(h)?;
    evolve_with(&spec, h.space().hbar(), t, v)
}

/// [`evolve`] with a precomputed spectrum, for repeated propagation.
pub fn evolve_with(spec: &Spectrum, hbar: f64, t: f64, v: &StateVector) -> Result<StateVector> {
    if v.len() != spec.values.len() {
        return Err(MetriqError::ContractViolation("state/operator dimension mismatch".into()));
    }
    StateVector::new(spec.exp_i_apply(-t / hbar, v.amps()))
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub(crate) fn hermiticity_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}
