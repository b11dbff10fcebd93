//! Weyl operators `U[p,q] = e^{−iqP/ħ} e^{ipQ/ħ}`, the coherent states
//! `|p,q⟩ = U[p,q]|η⟩` they generate, and quadrature over coherent-state
//! projectors.
//!
//! The operator ordering is fixed: momentum translation on the left,
//! position "boost" on the right. This differs from the symmetric
//! displacement `e^{i(pQ−qP)/ħ}` by the phase `e^{−ipq/2ħ}`, which shows up
//! in every overlap and in the endpoint phases of the path integral.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, MetriqError, Result};
use crate::fock::{
    hermitian_eig, make_canonical_pair, max_abs, CMatrix, CVector, HilbertDim, OperatorMatrix,
    Spectrum, StateVector, I,
};

pub const DEFAULT_LABEL_RADIUS: f64 = 10.0;

/// Fiducial vectors with `‖(Q+iP)|η⟩‖` above this are not the vacuum.
pub const VACUUM_TOL: f64 = 1e-10;

/// A phase-space point labelling a coherent state.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CoherentLabel {
    pub p: f64,
    pub q: f64,
}

impl CoherentLabel {
    pub const ORIGIN: Self = Self { p: 0.0, q: 0.0 };

    pub fn new(p: f64, q: f64) -> Self {
        Self { p, q }
    }

    pub fn check_radius(&self, radius: f64) -> Result<()> {
        if !(self.p.is_finite() && self.q.is_finite())
            || self.p.abs() > radius
            || self.q.abs() > radius
        {
            return Err(MetriqError::LabelRadius {
                p: self.p,
                q: self.q,
                radius,
            });
        }
        Ok(())
    }
}

impl std::ops::Add for CoherentLabel {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.p + rhs.p, self.q + rhs.q)
    }
}

impl std::ops::Neg for CoherentLabel {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.p, -self.q)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FiducialSpec {
    Vacuum,
    Custom(StateVector),
}

impl FiducialSpec {
    pub fn vector(&self, dim: usize) -> Result<StateVector> {
        match self {
            FiducialSpec::Vacuum => StateVector::basis(dim, 0),
            FiducialSpec::Custom(v) => {
                if v.len() != dim {
                    return Err(MetriqError::ContractViolation(format!(
                        "fiducial has {} amplitudes, space has {dim}",
                        v.len()
                    )));
                }
                if !v.is_normalized() {
                    return Err(MetriqError::ContractViolation(format!(
                        "fiducial must have unit norm (norm {})",
                        v.norm()
                    )));
                }
                Ok(v.clone())
            }
        }
    }

    /// `‖(Q+iP)|η⟩‖`; zero exactly for the vacuum.
    pub fn annihilation_defect(&self, space: HilbertDim) -> Result<f64> {
        let eta = self.vector(space.dim())?;
        let (q, p) = make_canonical_pair(space)?;
        let v = q.entries() * eta.amps() + p.entries() * eta.amps() * I;
        Ok(v.norm())
    }

    /// Downstream metrical-quantization statements assume `(Q+iP)|η⟩ = 0`.
    pub fn require_vacuum_like(&self, space: HilbertDim) -> Result<()> {
        let d = self.annihilation_defect(space)?;
        if d > VACUUM_TOL {
            return Err(MetriqError::ContractViolation(format!(
                "fiducial violates (Q+iP)|η⟩ = 0 (defect {d:e})"
            )));
        }
        Ok(())
    }
}

/// Ordering of the two exponentials in a displacement operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeylOrdering {
    /// `e^{−iqP/ħ} e^{ipQ/ħ}`.
    Ordered,
    /// `e^{i(pQ − qP)/ħ}`.
    Symmetric,
}

/// Phase attached to `U[l1+l2]` when comparing against `U[l1] U[l2]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompositionPhase {
    /// `e^{i(p₁q₂ − q₁p₂)/2ħ}`.
    Symmetric,
    /// `e^{ip₁q₂/ħ}`, the cocycle of the ordered product.
    Ordered,
}

impl CompositionPhase {
    pub fn value(self, l1: CoherentLabel, l2: CoherentLabel, hbar: f64) -> Complex64 {
        let arg = match self {
            CompositionPhase::Symmetric => (l1.p * l2.q - l1.q * l2.p) / (2.0 * hbar),
            CompositionPhase::Ordered => l1.p * l2.q / hbar,
        };
        Complex64::from_polar(1.0, arg)
    }
}

/// Canonical pair on one truncated space together with its spectral data,
/// so that repeated displacements cost matrix products only.
#[derive(Debug, Clone)]
pub struct CoherentFamily {
    space: HilbertDim,
    q: OperatorMatrix,
    p: OperatorMatrix,
    q_spec: Spectrum,
    p_spec: Spectrum,
    radius: f64,
}

impl CoherentFamily {
    pub fn new(space: HilbertDim) -> Result<Self> {
        let (q, p) = make_canonical_pair(space)?;
        let q_spec = hermitian_eig(&q)?;
        let p_spec = hermitian_eig(&p)?;
        Ok(Self {
            space,
            q,
            p,
            q_spec,
            p_spec,
            radius: DEFAULT_LABEL_RADIUS,
        })
    }

    pub fn with_radius(mut self, radius: f64) -> Self {
        self.radius = radius;
        self
    }

    pub fn space(&self) -> HilbertDim {
        self.space
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn q(&self) -> &OperatorMatrix {
        &self.q
    }

    pub fn p(&self) -> &OperatorMatrix {
        &self.p
    }

    pub fn weyl(&self, label: CoherentLabel) -> Result<OperatorMatrix> {
        label.check_radius(self.radius)?;
        OperatorMatrix::new(self.weyl_raw(label, WeylOrdering::Ordered)?, self.space)
    }

    pub fn symmetric_displacement(&self, label: CoherentLabel) -> Result<OperatorMatrix> {
        label.check_radius(self.radius)?;
        OperatorMatrix::new(self.weyl_raw(label, WeylOrdering::Symmetric)?, self.space)
    }

    fn weyl_raw(&self, label: CoherentLabel, ordering: WeylOrdering) -> Result<CMatrix> {
        let h = self.space.hbar();
        Ok(match ordering {
            WeylOrdering::Ordered => {
                self.p_spec.exp_i(-label.q / h) * self.q_spec.exp_i(label.p / h)
            }
            WeylOrdering::Symmetric => {
                let gen = OperatorMatrix::new(
                    self.q.entries() * Complex64::new(label.p, 0.0)
                        - self.p.entries() * Complex64::new(label.q, 0.0),
                    self.space,
                )?;
                hermitian_eig(&gen)?.exp_i(1.0 / h)
            }
        })
    }

    /// `|p,q⟩ = U[p,q]|η⟩`, without the radius check.
    pub(crate) fn displace(&self, label: CoherentLabel, eta: &StateVector) -> Result<StateVector> {
        let h = self.space.hbar();
        let boosted = self.q_spec.exp_i_apply(label.p / h, eta.amps());
        StateVector::new(self.p_spec.exp_i_apply(-label.q / h, &boosted))
    }

    pub fn state(&self, label: CoherentLabel, fid: &FiducialSpec) -> Result<StateVector> {
        label.check_radius(self.radius)?;
        let eta = fid.vector(self.space.dim())?;
        self.displace(label, &eta)
    }

    /// `⟨l2|l1⟩`.
    pub fn overlap(
        &self,
        l2: CoherentLabel,
        l1: CoherentLabel,
        fid: &FiducialSpec,
    ) -> Result<Complex64> {
        let s2 = self.state(l2, fid)?;
        let s1 = self.state(l1, fid)?;
        Ok(s2.inner(&s1))
    }

    /// `‖U[l1]U[l2] − φ·U[l1+l2]‖_max` over the lowest `dim/2` levels.
    ///
    /// The top half of the truncated space is excluded: there the truncated
    /// canonical pair no longer satisfies the commutation relation and the
    /// group law fails at O(1) for any phase.
    pub fn compose_deviation(
        &self,
        l1: CoherentLabel,
        l2: CoherentLabel,
        ordering: WeylOrdering,
        phase: CompositionPhase,
    ) -> Result<f64> {
        for l in [l1, l2, l1 + l2] {
            l.check_radius(self.radius)?;
        }
        let lhs = self.weyl_raw(l1, ordering)? * self.weyl_raw(l2, ordering)?;
        let rhs = self.weyl_raw(l1 + l2, ordering)? * phase.value(l1, l2, self.space.hbar());
        let k = self.space.dim() / 2;
        let diff = (lhs - rhs).view((0, 0), (k, k)).into_owned();
        Ok(max_abs(&diff))
    }
}

pub fn weyl(label: CoherentLabel, space: HilbertDim) -> Result<OperatorMatrix> {
    label.check_radius(DEFAULT_LABEL_RADIUS)?;
    CoherentFamily::new(space)?.weyl(label)
}

/// Deviation from the multiplication rule with the symmetric phase
/// `e^{i(p₁q₂−q₁p₂)/2ħ}` for the ordered operators of this module.
///
/// That phase is the cocycle of the symmetric displacement; the ordered
/// product carries `e^{ip₁q₂/ħ}` instead, so this deviation vanishes only when
/// `p₁q₂ + q₁p₂ ≡ 0 (mod 4πħ)`. Use [`CoherentFamily::compose_deviation`] to
/// pick the ordering/phase pair explicitly.
pub fn weyl_compose_check(l1: CoherentLabel, l2: CoherentLabel, space: HilbertDim) -> Result<f64> {
    for l in [l1, l2, l1 + l2] {
        l.check_radius(DEFAULT_LABEL_RADIUS)?;
    }
    CoherentFamily::new(space)?.compose_deviation(
        l1,
        l2,
        WeylOrdering::Ordered,
        CompositionPhase::Symmetric,
    )
}

pub fn coherent_state(
    label: CoherentLabel,
    fid: &FiducialSpec,
    space: HilbertDim,
) -> Result<StateVector> {
    label.check_radius(DEFAULT_LABEL_RADIUS)?;
    CoherentFamily::new(space)?.state(label, fid)
}

pub fn overlap(
    l2: CoherentLabel,
    l1: CoherentLabel,
    fid: &FiducialSpec,
    space: HilbertDim,
) -> Result<Complex64> {
    l1.check_radius(DEFAULT_LABEL_RADIUS)?;
    l2.check_radius(DEFAULT_LABEL_RADIUS)?;
    CoherentFamily::new(space)?.overlap(l2, l1, fid)
}

/// Midpoint product rule on the square `[−radius, radius]²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureGrid {
    pub radius: f64,
    pub nodes: usize,
    /// Fock levels kept in the result; `None` means the caller's default.
    pub levels: Option<usize>,
    /// Cutoff used to build the coherent states at the nodes; `None` picks
    /// one large enough for the grid corners.
    pub working_dim: Option<usize>,
}

impl QuadratureGrid {
    pub fn new(radius: f64, nodes: usize) -> Self {
        Self {
            radius,
            nodes,
            levels: None,
            working_dim: None,
        }
    }

    pub fn with_levels(mut self, levels: usize) -> Self {
        self.levels = Some(levels);
        self
    }

    pub fn with_working_dim(mut self, dim: usize) -> Self {
        self.working_dim = Some(dim);
        self
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.radius / self.nodes as f64
    }

    pub fn abscissae(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.nodes)
            .map(|j| -self.radius + h * (j as f64 + 0.5))
            .collect()
    }

    /// Cutoff at which displaced states at the grid corners still have
    /// accurate low-level amplitudes: the corner sits at `|α|² = R²/ħ`, and
    /// the truncated exponentials stay faithful a few `|α|` above that.
    pub fn auto_working_dim(&self, hbar: f64) -> usize {
        let alpha2 = self.radius * self.radius / hbar;
        (alpha2 + 6.0 * alpha2.sqrt() + 64.0).ceil() as usize
    }
}

/// Result of a coherent-projector quadrature.
#[derive(Debug, Clone)]
pub struct QuadratureReport {
    /// `levels × levels` block of the integrated operator.
    pub matrix: OperatorMatrix,
    /// `‖matrix − target‖_max` (identity for the resolution of unity).
    pub deviation: f64,
    pub working_dim: usize,
    pub warnings: Vec<String>,
}

impl QuadratureReport {
    /// `|M_nn − 1|` per level, for the resolution of unity.
    pub fn diagonal_drift(&self) -> Vec<f64> {
        (0..self.matrix.dim())
            .map(|n| (self.matrix.get(n, n) - Complex64::new(1.0, 0.0)).norm())
            .collect()
    }
}

fn grid_warnings(grid: &QuadratureGrid, hbar: f64, levels: usize) -> Vec<String> {
    let mut w = Vec::new();
    if grid.nodes < 64 {
        w.push(format!("only {} nodes per axis (< 64)", grid.nodes));
    }
    if grid.spacing() > 0.5 * hbar.sqrt() {
        w.push(format!(
            "node spacing {:.3} exceeds half the coherent-state width {:.3}",
            grid.spacing(),
            0.5 * hbar.sqrt()
        ));
    }
    // Poisson weight of the highest kept level on the inscribed circle.
    let alpha2 = grid.radius * grid.radius / (2.0 * hbar);
    let n = levels.saturating_sub(1) as f64;
    let log_tail = -alpha2 + n * alpha2.max(f64::MIN_POSITIVE).ln() - ln_factorial(n as usize);
    if log_tail > (1e-8f64).ln() {
        w.push(format!(
            "radius {} truncates the Gaussian tail of level {} (weight {:.1e})",
            grid.radius,
            levels.saturating_sub(1),
            log_tail.exp()
        ));
    }
    w
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// `∫ w(p,q) |p,q⟩⟨p,q| dp dq/(2πħ)` compressed to the lowest `levels`
/// states, by the midpoint rule on `grid`.
///
/// Rows of the grid are processed in fixed chunks and the partial sums are
/// added in chunk order, so the result does not depend on the thread count.
pub(crate) fn integrate_projectors<F>(
    fid: &FiducialSpec,
    space: HilbertDim,
    grid: &QuadratureGrid,
    levels: usize,
    weight: F,
) -> Result<(CMatrix, usize)>
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    if grid.nodes == 0 || !(grid.radius > 0.0) {
        return Err(invalid("grid", "radius and node count must be positive"));
    }
    if levels == 0 || levels > space.dim() {
        return Err(invalid("levels", format!("must lie in 1..={}", space.dim())));
    }
    let hbar = space.hbar();
    let eta = fid.vector(space.dim())?;
    let work = grid
        .working_dim
        .unwrap_or_else(|| grid.auto_working_dim(hbar))
        .max(space.dim());
    let family = CoherentFamily::new(space.with_dim(work)?)?;
    let mut eta_w = CVector::zeros(work);
    eta_w.rows_mut(0, space.dim()).copy_from(eta.amps());

    let vq = family.q_spec.vectors.entries();
    let vp = family.p_spec.vectors.entries();
    let lam = &family.q_spec.values;
    let mu = &family.p_spec.values;
    let transfer = vp.ad_mul(vq);
    let u = vq.ad_mul(&eta_w);
    let vlow = vp.rows(0, levels).into_owned();

    let xs = grid.abscissae();
    let m = xs.len();
    // E[k, j] = e^{−i q_j μ_k / ħ}
    let phases = DMatrix::from_fn(work, m, |k, j| Complex64::from_polar(1.0, -xs[j] * mu[k] / hbar));

    const CHUNK: usize = 4;
    let chunks: Vec<CMatrix> = (0..m.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut acc = CMatrix::zeros(levels, levels);
            for i in c * CHUNK..((c + 1) * CHUNK).min(m) {
                let p = xs[i];
                let boosted = CVector::from_iterator(
                    work,
                    lam.iter()
                        .zip(u.iter())
                        .map(|(&l, &z)| z * Complex64::from_polar(1.0, p * l / hbar)),
                );
                let coeffs = &transfer * boosted;
                let mut scaled = vlow.clone();
                for (k, col) in scaled.column_iter_mut().enumerate() {
                    let ck = coeffs[k];
                    for z in col {
                        *z *= ck;
                    }
                }
                // columns are the low-level amplitudes of |p, q_j⟩
                let states = scaled * &phases;
                let mut weighted = states.clone();
                for (j, col) in weighted.column_iter_mut().enumerate() {
                    let w = weight(p, xs[j]);
                    for z in col {
                        *z *= w;
                    }
                }
                acc += weighted * states.adjoint();
            }
            acc
        })
        .collect();

    let mut total = CMatrix::zeros(levels, levels);
    for c in &chunks {
        total += c;
    }
    let h = grid.spacing();
    total *= Complex64::new(h * h / (2.0 * std::f64::consts::PI * hbar), 0.0);
    Ok((total, work))
}

/// `‖∫|p,q⟩⟨p,q| dp dq/(2πħ) − 𝟙‖_max` over the lowest `dim/2` levels
/// (or `grid.levels` when set).
pub fn resolution_of_unity_check(
    fid: &FiducialSpec,
    space: HilbertDim,
    grid: &QuadratureGrid,
) -> Result<QuadratureReport> {
    let levels = grid.levels.unwrap_or(space.dim() / 2);
    let (matrix, working_dim) = integrate_projectors(fid, space, grid, levels, |_, _| 1.0)?;
    let deviation = max_abs(&(&matrix - CMatrix::identity(levels, levels)));
    Ok(QuadratureReport {
        matrix: OperatorMatrix::new(matrix, space.with_dim(levels)?)?,
        deviation,
        working_dim,
        warnings: grid_warnings(grid, space.hbar(), levels),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sp(dim: usize) -> HilbertDim {
        HilbertDim::new(dim, 1.0).unwrap()
    }

    #[test]
    fn zero_label_is_identity() {
        let u = weyl(CoherentLabel::ORIGIN, sp(16)).unwrap();
        assert!(max_abs(&(u.entries() - CMatrix::identity(16, 16))) < 1e-13);
    }

    #[test]
    fn weyl_is_unitary() {
        let u = weyl(CoherentLabel::new(0.7, -0.3), sp(64)).unwrap();
        let prod = u.adjoint().matmul(&u).unwrap();
        assert!(max_abs(&(prod.entries() - CMatrix::identity(64, 64))) <= 1e-10);
    }

    #[test]
    fn coherent_state_means() {
        let fam = CoherentFamily::new(sp(64)).unwrap();
        for (p, q) in [(0.7, -0.3), (-1.5, 2.0), (0.0, 1.0)] {
            let s = fam.state(CoherentLabel::new(p, q), &FiducialSpec::Vacuum).unwrap();
            assert!((s.norm() - 1.0).abs() <= 1e-10);
            let mq = s.expect(fam.q()).unwrap();
            let mp = s.expect(fam.p()).unwrap();
            assert!((mq.re - q).abs() <= 1e-8 && mq.im.abs() <= 1e-8);
            assert!((mp.re - p).abs() <= 1e-8 && mp.im.abs() <= 1e-8);
        }
    }

    #[test]
    fn origin_state_is_vacuum() {
        let s = coherent_state(CoherentLabel::ORIGIN, &FiducialSpec::Vacuum, sp(8)).unwrap();
        assert!((s.amps() - StateVector::basis(8, 0).unwrap().amps()).norm() < 1e-14);
    }

    #[test]
    fn label_radius_enforced() {
        let err = weyl(CoherentLabel::new(10.5, 0.0), sp(8)).unwrap_err();
        assert!(matches!(err, MetriqError::LabelRadius { .. }));
        assert!(coherent_state(CoherentLabel::new(0.0, -11.0), &FiducialSpec::Vacuum, sp(8)).is_err());
    }

    #[test]
    fn ordered_cocycle_holds() {
        let fam = CoherentFamily::new(sp(128)).unwrap();
        let pairs = [
            ((1.0, 0.0), (0.0, 1.0)),
            ((0.3, -1.2), (1.7, 0.4)),
            ((-2.0, 2.0), (2.0, -1.0)),
        ];
        for ((p1, q1), (p2, q2)) in pairs {
            let (l1, l2) = (CoherentLabel::new(p1, q1), CoherentLabel::new(p2, q2));
            let d = fam
                .compose_deviation(l1, l2, WeylOrdering::Ordered, CompositionPhase::Ordered)
                .unwrap();
            assert!(d <= 1e-8, "ordered cocycle deviation {d}");
            let d = fam
                .compose_deviation(l1, l2, WeylOrdering::Symmetric, CompositionPhase::Symmetric)
                .unwrap();
            assert!(d <= 1e-8, "symmetric displacement deviation {d}");
        }
    }

    #[test]
    fn symmetric_phase_with_trivial_partner() {
        let d = weyl_compose_check(CoherentLabel::new(0.8, -1.1), CoherentLabel::ORIGIN, sp(32))
            .unwrap();
        assert!(d <= 1e-12);
    }

    #[test]
    fn symmetric_phase_misfits_ordered_product() {
        // U[1,0]U[0,1] = e^{i} U[1,1], not e^{i/2} U[1,1]
        let d = weyl_compose_check(CoherentLabel::new(1.0, 0.0), CoherentLabel::new(0.0, 1.0), sp(64))
            .unwrap();
        assert!(d > 1e-2);
    }

    #[test]
    fn swapped_products_differ_by_symplectic_phase() {
        let fam = CoherentFamily::new(sp(128)).unwrap();
        let (l1, l2) = (CoherentLabel::new(0.9, -0.4), CoherentLabel::new(-1.3, 1.1));
        let u1 = fam.weyl(l1).unwrap().into_entries();
        let u2 = fam.weyl(l2).unwrap().into_entries();
        let phase = Complex64::from_polar(1.0, l1.p * l2.q - l1.q * l2.p);
        let diff = &u1 * &u2 - &u2 * &u1 * phase;
        assert!(max_abs(&diff.view((0, 0), (64, 64)).into_owned()) <= 1e-8);
    }

    #[test]
    fn ordered_and_symmetric_differ_by_pq_phase() {
        let fam = CoherentFamily::new(sp(64)).unwrap();
        let l = CoherentLabel::new(0.6, 1.3);
        let u = fam.weyl(l).unwrap().into_entries();
        let d = fam.symmetric_displacement(l).unwrap().into_entries();
        let diff = u - d * Complex64::from_polar(1.0, -l.p * l.q / 2.0);
        assert!(max_abs(&diff.view((0, 0), (32, 32)).into_owned()) <= 1e-10);
    }

    #[test]
    fn overlap_self_and_hermitian_symmetry() {
        let fam = CoherentFamily::new(sp(64)).unwrap();
        let a = CoherentLabel::new(0.4, -0.9);
        let b = CoherentLabel::new(-1.2, 0.5);
        let vac = FiducialSpec::Vacuum;
        assert!((fam.overlap(a, a, &vac).unwrap() - 1.0).norm() <= 1e-10);
        let ab = fam.overlap(a, b, &vac).unwrap();
        let ba = fam.overlap(b, a, &vac).unwrap();
        assert!((ab - ba.conj()).norm() <= 1e-14);
        assert!(ab.norm() <= 1.0);
    }

    #[test]
    fn continuity_slope_near_origin() {
        let fam = CoherentFamily::new(sp(64)).unwrap();
        let base = fam.state(CoherentLabel::new(0.1, -0.2), &FiducialSpec::Vacuum).unwrap();
        let mut worst: f64 = 0.0;
        for &(dp, dq) in &[(1e-3, 0.0), (0.0, 1e-3), (1e-3, -1e-3), (1e-2, 5e-3), (-2e-2, 1e-2)] {
            let s = fam
                .state(CoherentLabel::new(0.1 + dp, -0.2 + dq), &FiducialSpec::Vacuum)
                .unwrap();
            let slope = (s.amps() - base.amps()).norm() / (f64::abs(dp) + f64::abs(dq));
            worst = worst.max(slope);
        }
        assert!(worst <= 2.0, "slope {worst}");
    }

    #[test]
    fn custom_fiducial_must_be_normalized() {
        let v = StateVector::from_slice(&[Complex64::new(0.5, 0.0), Complex64::new(0.5, 0.0)]).unwrap();
        let fid = FiducialSpec::Custom(v);
        assert!(fid.vector(2).is_err());
        assert_eq!(FiducialSpec::Vacuum.annihilation_defect(sp(8)).unwrap(), 0.0);
    }

    #[test]
    fn small_grid_resolution_of_unity() {
        let grid = QuadratureGrid::new(9.0, 96).with_levels(4);
        let rep = resolution_of_unity_check(&FiducialSpec::Vacuum, sp(16), &grid).unwrap();
        assert!(rep.deviation <= 1e-8, "deviation {}", rep.deviation);
        assert!(rep.warnings.is_empty(), "{:?}", rep.warnings);
    }

    #[test]
    fn coarse_grid_is_flagged() {
        let grid = QuadratureGrid::new(2.0, 16).with_levels(4);
        let rep = resolution_of_unity_check(&FiducialSpec::Vacuum, sp(16), &grid).unwrap();
        assert!(rep.warnings.len() >= 2, "{:?}", rep.warnings);
    }
}
