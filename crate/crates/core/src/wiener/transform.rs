//! Linear canonical coordinate changes and the covariance of the estimator
//! under them.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::bridge::BridgeSpec;
use super::estimator::{assemble, map_bridges, sample_phase, validate_run, ComplexSums, EstimateOptions, EstimatorResult};
use super::integrals::{hamiltonian_integral, pdq};
use crate::dynamics::PhasePath;
use crate::error::{MetriqError, Result};
use crate::symbol::PolySymbol;

pub const DET_TOL: f64 = 1e-12;
pub const GENERATOR_TOL: f64 = 1e-8;

/// `(p̄, q̄) = M (p, q)` with `det M = 1`.
///
/// For `M = [[a, b], [c, d]]` the generator
/// `G(p, q) = −½ac p² − bc pq − ½bd q²` satisfies `dG = p dq − p̄ dq̄`
/// identically, and `Ḡ(p̄, q̄) = G(M⁻¹(p̄, q̄))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoordMap {
    m: [[f64; 2]; 2],
}

impl CoordMap {
    pub fn new(m: [[f64; 2]; 2]) -> Result<Self> {
        if m.iter().flatten().any(|x| !x.is_finite()) {
            return Err(MetriqError::ContractViolation("map has non-finite entries".into()));
        }
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        if det.abs() < 1e-14 {
            return Err(MetriqError::SingularMap { det });
        }
        if (det - 1.0).abs() > DET_TOL {
            return Err(MetriqError::NotSymplectic { det });
        }
        let map = Self { m };
        let residual = map.generator_residual();
        if residual > GENERATOR_TOL {
            return Err(MetriqError::ContractViolation(format!(
                "generator check failed (residual {residual:e})"
            )));
        }
        Ok(map)
    }

    pub fn identity() -> Self {
        Self {
            m: [[1.0, 0.0], [0.0, 1.0]],
        }
    }

    /// `p̄ = p/λ`, `q̄ = λq`.
    pub fn scaling(lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda != 0.0) {
            return Err(MetriqError::SingularMap { det: 0.0 });
        }
        Self::new([[1.0 / lambda, 0.0], [0.0, lambda]])
    }

    /// `p̄ = cos θ p − sin θ q`, `q̄ = sin θ p + cos θ q`.
    pub fn rotation(theta: f64) -> Result<Self> {
        let (s, c) = theta.sin_cos();
        Self::new([[c, -s], [s, c]])
    }

    pub fn matrix(&self) -> [[f64; 2]; 2] {
        self.m
    }

    pub fn inverse(&self) -> Self {
        let [[a, b], [c, d]] = self.m;
        Self {
            m: [[d, -b], [-c, a]],
        }
    }

    pub fn compose(&self, other: &Self) -> Self {
        let (x, y) = (self.m, other.m);
        let mut m = [[0.0; 2]; 2];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = x[i][0] * y[0][j] + x[i][1] * y[1][j];
            }
        }
        Self { m }
    }

    #[inline]
    pub fn apply(&self, p: f64, q: f64) -> (f64, f64) {
        let [[a, b], [c, d]] = self.m;
        (a * p + b * q, c * p + d * q)
    }

    /// `G` in the original coordinates.
    #[inline]
    pub fn generator(&self, p: f64, q: f64) -> f64 {
        let [[a, b], [c, d]] = self.m;
        -0.5 * a * c * p * p - b * c * p * q - 0.5 * b * d * q * q
    }

    /// `Ḡ(p̄, q̄)`.
    #[inline]
    pub fn generator_bar(&self, pb: f64, qb: f64) -> f64 {
        let (p, q) = self.inverse().apply(pb, qb);
        self.generator(p, q)
    }

    /// Largest mismatch between central differences of `G` and
    /// `(p − p̄ ∂q̄/∂q, −p̄ ∂q̄/∂p)` on a small grid.
    pub fn generator_residual(&self) -> f64 {
        let [[_, _], [c, d]] = self.m;
        let h = 1e-4;
        let mut worst: f64 = 0.0;
        for i in -2..=2 {
            for j in -2..=2 {
                let (p, q) = (0.5 * i as f64, 0.5 * j as f64);
                let (pb, _) = self.apply(p, q);
                let gp = (self.generator(p + h, q) - self.generator(p - h, q)) / (2.0 * h);
                let gq = (self.generator(p, q + h) - self.generator(p, q - h)) / (2.0 * h);
                worst = worst.max((gp + pb * c).abs()).max((gq - (p - pb * d)).abs());
            }
        }
        worst
    }
}

/// Maps every point and returns `ΔḠ = Ḡ(end) − Ḡ(start)`.
pub fn transform_path(path: &PhasePath, map: &CoordMap) -> Result<(PhasePath, f64)> {
    let points: Vec<_> = path.points().iter().map(|&(p, q)| map.apply(p, q)).collect();
    let out = PhasePath::new(path.duration(), points)?;
    let (s, e) = (out.start(), out.end());
    let dg = map.generator_bar(e.0, e.1) - map.generator_bar(s.0, s.1);
    Ok((out, dg))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovarianceReport {
    pub original: EstimatorResult,
    pub transformed: EstimatorResult,
    /// Estimator of `original − transformed` from the paired samples.
    pub difference: EstimatorResult,
    pub bitwise_identical: bool,
}

impl CovarianceReport {
    /// The paired difference is within `k` standard errors of zero, with
    /// an absolute `floor` for maps whose difference is pure roundoff.
    pub fn agrees(&self, k: f64, floor: f64) -> bool {
        let d = &self.difference;
        d.mean.re.abs() <= k * d.stderr_re + floor && d.mean.im.abs() <= k * d.stderr_im + floor
    }
}

/// Runs the estimator in the original and the barred coordinates on the
/// same bridges.
///
/// The barred integrand is `exp{(i/ħ)[∫p̄ dq̄ + ΔḠ − ∫H̄ dt]}` with
/// `H̄(p̄, q̄) = H(M⁻¹(p̄, q̄))`.
pub fn covariance_check(
    spec: &BridgeSpec,
    sym: &PolySymbol,
    map: &CoordMap,
    hbar: f64,
    n: u64,
    opts: &EstimateOptions,
) -> Result<CovarianceReport> {
    validate_run(spec, hbar, n, opts)?;
    let h = sym.compile();
    let dt = spec.dt();
    let rule = opts.rule;
    let inv = map.inverse();
    #[derive(Default)]
    struct Acc {
        orig: ComplexSums,
        bar: ComplexSums,
        diff: ComplexSums,
        identical: bool,
        seen: bool,
    }
    let parts = map_bridges(spec, n, |acc: &mut Acc, index, p, q| {
        let s = pdq(p, q, rule) - hamiltonian_integral(p, q, dt, &h);
        let z = sample_phase(s, hbar, spec.seed, index)?;

        let (mut pb, mut qb) = (Vec::with_capacity(p.len()), Vec::with_capacity(q.len()));
        for (&x, &y) in p.iter().zip(q) {
            let (a, b) = map.apply(x, y);
            pb.push(a);
            qb.push(b);
        }
        let last = pb.len() - 1;
        let dg = map.generator_bar(pb[last], qb[last]) - map.generator_bar(pb[0], qb[0]);
        let mut hbar_int = 0.0;
        if !h.is_zero() {
            for l in 0..last {
                let (x, y) = inv.apply(0.5 * (pb[l] + pb[l + 1]), 0.5 * (qb[l] + qb[l + 1]));
                hbar_int += h.eval(x, y);
            }
            hbar_int *= dt;
        }
        let sb = pdq(&pb, &qb, rule) + dg - hbar_int;
        let zb = sample_phase(sb, hbar, spec.seed, index)?;

        acc.orig.push(z);
        acc.bar.push(zb);
        acc.diff.push(z - zb);
        let same = z.re.to_bits() == zb.re.to_bits() && z.im.to_bits() == zb.im.to_bits();
        acc.identical = if acc.seen { acc.identical && same } else { same };
        acc.seen = true;
        Ok(())
    })?;
    let (mut o, mut b, mut d) = (ComplexSums::default(), ComplexSums::default(), ComplexSums::default());
    let mut identical = true;
    for c in &parts {
        o.merge(&c.orig);
        b.merge(&c.bar);
        d.merge(&c.diff);
        identical &= c.identical;
    }
    let original = assemble(spec, hbar, &o)?;
    let transformed = assemble(spec, hbar, &b)?;
    let difference = assemble_difference(spec, hbar, &d);
    Ok(CovarianceReport {
        bitwise_identical: identical
            && original.mean.re.to_bits() == transformed.mean.re.to_bits()
            && original.mean.im.to_bits() == transformed.mean.im.to_bits(),
        original,
        transformed,
        difference,
    })
}

fn assemble_difference(spec: &BridgeSpec, hbar: f64, sums: &ComplexSums) -> EstimatorResult {
    let raw_mass = super::estimator::pinned_mass(spec);
    let prefactor = super::estimator::regularization_prefactor(spec, hbar);
    let (mean, stderr_re, stderr_im): (Complex64, f64, f64) = sums.finish(prefactor * raw_mass);
    EstimatorResult {
        mean,
        stderr_re,
        stderr_im,
        n_samples: sums.n,
        raw_mass,
        prefactor,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wiener::integrals::stratonovich_pdq;
    use std::f64::consts::PI;

    #[test]
    fn constructors_and_validation() {
        assert!(CoordMap::new([[2.0, 0.0], [0.0, 0.5]]).is_ok());
        assert!(matches!(
            CoordMap::new([[2.0, 0.0], [0.0, 1.0]]),
            Err(MetriqError::NotSymplectic { .. })
        ));
        assert!(matches!(
            CoordMap::new([[1.0, 2.0], [2.0, 4.0]]),
            Err(MetriqError::SingularMap { .. })
        ));
        assert!(CoordMap::rotation(0.4).unwrap().generator_residual() <= GENERATOR_TOL);
        let shear = CoordMap::new([[1.0, 0.7], [0.0, 1.0]]).unwrap();
        assert!(shear.generator_residual() <= GENERATOR_TOL);
    }

    #[test]
    fn inverse_round_trip() {
        let m = CoordMap::new([[1.3, 0.4], [0.5, (1.0 + 0.4 * 0.5) / 1.3]]).unwrap();
        let id = m.compose(&m.inverse()).matrix();
        for (i, row) in id.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((v - want).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn identity_leaves_path_alone() {
        let pts = (0..=64).map(|l| ((l as f64).sin(), (0.3 * l as f64).cos())).collect();
        let path = PhasePath::new(1.0, pts).unwrap();
        let (out, dg) = transform_path(&path, &CoordMap::identity()).unwrap();
        assert_eq!(out, path);
        assert_eq!(dg, 0.0);
    }

    #[test]
    fn scaling_preserves_pdq_exactly() {
        let pts = (0..=200).map(|l| ((0.1 * l as f64).sin(), (0.07 * l as f64).cos())).collect();
        let path = PhasePath::new(1.0, pts).unwrap();
        let (out, dg) = transform_path(&path, &CoordMap::scaling(1.5).unwrap()).unwrap();
        assert_eq!(dg, 0.0);
        assert!((stratonovich_pdq(&out) - stratonovich_pdq(&path)).abs() < 1e-13);
    }

    #[test]
    fn rotation_identity_on_smooth_path() {
        let steps = 4096;
        let pts = (0..=steps)
            .map(|l| {
                let t = 2.0 * PI * l as f64 / steps as f64;
                (1.0 + 0.5 * t.cos(), 0.3 * t + t.sin())
            })
            .collect();
        let path = PhasePath::new(2.0 * PI, pts).unwrap();
        let map = CoordMap::rotation(PI / 6.0).unwrap();
        let (out, dg) = transform_path(&path, &map).unwrap();
        assert!(dg.abs() > 1e-3);
        assert!((stratonovich_pdq(&path) - stratonovich_pdq(&out) - dg).abs() <= 1e-6);
    }
}
