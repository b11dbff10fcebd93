//! Monte Carlo estimator of the regularized coherent-state propagator.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bridge::{fill_bridge, BridgeBuffers, BridgeSpec};
use super::integrals::{hamiltonian_integral, pdq, Rule};
use crate::error::{invalid, MetriqError, Result};
use crate::symbol::PolySymbol;

/// Default bound on `νT/(2ħ)`.
pub const DEFAULT_GUARD: f64 = 6.0;
/// Samples per reduction chunk. Part of the result's identity: changing it
/// changes the rounding of the sums.
pub const CHUNK: u64 = 256;
pub const MIN_SAMPLES: u64 = 1000;

/// Total mass of the pinned Wiener measure, the product of the `p` and `q`
/// heat kernels: `(2πνT)⁻¹ exp{−|x″ − x′|²/(2νT)}`.
pub fn pinned_mass(spec: &BridgeSpec) -> f64 {
    let s = spec.nu * spec.duration;
    let d2 = (spec.end.0 - spec.start.0).powi(2) + (spec.end.1 - spec.start.1).powi(2);
    (-d2 / (2.0 * s)).exp() / (2.0 * PI * s)
}

/// `2πħ e^{νT/2ħ}`.
pub fn regularization_prefactor(spec: &BridgeSpec, hbar: f64) -> f64 {
    2.0 * PI * hbar * (spec.nu * spec.duration / (2.0 * hbar)).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateOptions {
    pub rule: Rule,
    /// Refuse runs with `νT/(2ħ)` above this.
    pub guard: f64,
    /// Run anyway when the guard trips.
    pub override_guard: bool,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        Self {
            rule: Rule::Stratonovich,
            guard: DEFAULT_GUARD,
            override_guard: false,
        }
    }
}

pub fn check_feasibility(spec: &BridgeSpec, hbar: f64, opts: &EstimateOptions) -> Result<()> {
    let ratio = spec.nu * spec.duration / (2.0 * hbar);
    if ratio > opts.guard && !opts.override_guard {
        return Err(MetriqError::Feasibility {
            ratio,
            limit: opts.guard,
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorResult {
    pub mean: Complex64,
    /// Standard error of `mean.re`.
    pub stderr_re: f64,
    /// Standard error of `mean.im`.
    pub stderr_im: f64,
    pub n_samples: u64,
    /// [`pinned_mass`] of the spec.
    pub raw_mass: f64,
    /// `2πħ e^{νT/2ħ}`.
    pub prefactor: f64,
}

impl EstimatorResult {
    /// Largest value `|mean|` may take given unit-modulus integrands.
    pub fn bound(&self) -> f64 {
        self.prefactor * self.raw_mass
    }

    /// `|mean − target|` measured in standard errors, per component.
    pub fn z_scores(&self, target: Complex64) -> (f64, f64) {
        let d = self.mean - target;
        (z(d.re, self.stderr_re), z(d.im, self.stderr_im))
    }

    /// Both components within `k` standard errors of `target`.
    pub fn within(&self, target: Complex64, k: f64) -> bool {
        let (zr, zi) = self.z_scores(target);
        zr <= k && zi <= k
    }

    /// Combined standard error of `|mean − target|`.
    pub fn sigma(&self) -> f64 {
        self.stderr_re.hypot(self.stderr_im)
    }
}

fn z(d: f64, se: f64) -> f64 {
    if d == 0.0 {
        0.0
    } else if se == 0.0 {
        f64::INFINITY
    } else {
        d.abs() / se
    }
}

/// Running sums of a complex sample.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ComplexSums {
    pub re: f64,
    pub im: f64,
    pub re2: f64,
    pub im2: f64,
    pub n: u64,
}

impl ComplexSums {
    #[inline]
    pub fn push(&mut self, z: Complex64) {
        self.re += z.re;
        self.im += z.im;
        self.re2 += z.re * z.re;
        self.im2 += z.im * z.im;
        self.n += 1;
    }

    pub fn merge(&mut self, other: &Self) {
        self.re += other.re;
        self.im += other.im;
        self.re2 += other.re2;
        self.im2 += other.im2;
        self.n += other.n;
    }

    /// Mean and standard errors of the mean, all multiplied by `scale`.
    pub fn finish(&self, scale: f64) -> (Complex64, f64, f64) {
        let n = self.n as f64;
        let (mr, mi) = (self.re / n, self.im / n);
        let var = |s2: f64, m: f64| ((s2 - n * m * m) / (n - 1.0)).max(0.0);
        (
            Complex64::new(mr, mi) * scale,
            (var(self.re2, mr) / n).sqrt() * scale,
            (var(self.im2, mi) / n).sqrt() * scale,
        )
    }
}

/// Runs `f` over bridges `0..n` of `spec` in fixed chunks of [`CHUNK`]
/// samples and returns the per-chunk accumulators in index order.
///
/// Each sample's randomness depends only on `(seed, index)` and chunk
/// boundaries are fixed, so folding the output left to right gives the same
/// bits under any thread count.
pub fn map_bridges<T, F>(spec: &BridgeSpec, n: u64, f: F) -> Result<Vec<T>>
where
    T: Default + Send,
    F: Fn(&mut T, u64, &[f64], &[f64]) -> Result<()> + Sync,
{
    spec.validate()?;
    let chunks = n.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut buf = BridgeBuffers::new(spec.steps);
            let mut acc = T::default();
            for index in c * CHUNK..((c + 1) * CHUNK).min(n) {
                fill_bridge(spec, index, &mut buf);
                f(&mut acc, index, &buf.p, &buf.q)?;
            }
            Ok(acc)
        })
        .collect()
}

/// Mean, variance and standard error of a real path statistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RealStats {
    pub mean: f64,
    pub variance: f64,
    pub stderr: f64,
    pub n: u64,
}

pub fn path_statistic<F>(spec: &BridgeSpec, n: u64, f: F) -> Result<RealStats>
where
    F: Fn(&[f64], &[f64]) -> f64 + Sync,
{
    if n < 2 {
        return Err(invalid("samples", "need at least 2"));
    }
    let parts = map_bridges(spec, n, |acc: &mut ComplexSums, _, p, q| {
        acc.push(Complex64::new(f(p, q), 0.0));
        Ok(())
    })?;
    let mut total = ComplexSums::default();
    for c in &parts {
        total.merge(c);
    }
    let (m, se, _) = total.finish(1.0);
    Ok(RealStats {
        mean: m.re,
        variance: se * se * n as f64,
        stderr: se,
        n,
    })
}

#[inline]
pub(crate) fn sample_phase(exponent: f64, hbar: f64, seed: u64, index: u64) -> Result<Complex64> {
    let a = exponent / hbar;
    if !a.is_finite() {
        return Err(MetriqError::PoisonedSample { seed, index });
    }
    Ok(Complex64::from_polar(1.0, a))
}

pub(crate) fn validate_run(spec: &BridgeSpec, hbar: f64, n: u64, opts: &EstimateOptions) -> Result<()> {
    spec.validate()?;
    if !(hbar.is_finite() && hbar > 0.0) {
        return Err(invalid("hbar", format!("must be positive, got {hbar}")));
    }
    if n < MIN_SAMPLES {
        return Err(invalid("samples", format!("need at least {MIN_SAMPLES}, got {n}")));
    }
    check_feasibility(spec, hbar, opts)
}

pub(crate) fn assemble(spec: &BridgeSpec, hbar: f64, sums: &ComplexSums) -> Result<EstimatorResult> {
    let raw_mass = pinned_mass(spec);
    let prefactor = regularization_prefactor(spec, hbar);
    let (mean, stderr_re, stderr_im) = sums.finish(prefactor * raw_mass);
    let out = EstimatorResult {
        mean,
        stderr_re,
        stderr_im,
        n_samples: sums.n,
        raw_mass,
        prefactor,
    };
    if out.mean.norm() > out.bound() * (1.0 + 1e-12) {
        return Err(MetriqError::ContractViolation(format!(
            "estimate modulus {} exceeds the unit-integrand bound {}",
            out.mean.norm(),
            out.bound()
        )));
    }
    Ok(out)
}

/// `2πħ e^{νT/2ħ} · pinned_mass · mean_paths e^{(i/ħ)∫[p dq − H dt]}`.
pub fn estimate_propagator(spec: &BridgeSpec, sym: &PolySymbol, hbar: f64, n: u64) -> Result<EstimatorResult> {
    estimate_propagator_with(spec, sym, hbar, n, &EstimateOptions::default())
}

pub fn estimate_propagator_with(
    spec: &BridgeSpec,
    sym: &PolySymbol,
    hbar: f64,
    n: u64,
    opts: &EstimateOptions,
) -> Result<EstimatorResult> {
    validate_run(spec, hbar, n, opts)?;
    let h = sym.compile();
    let dt = spec.dt();
    let rule = opts.rule;
    let parts = map_bridges(spec, n, |acc: &mut ComplexSums, index, p, q| {
        let s = pdq(p, q, rule) - hamiltonian_integral(p, q, dt, &h);
        acc.push(sample_phase(s, hbar, spec.seed, index)?);
        Ok(())
    })?;
    let mut total = ComplexSums::default();
    for c in &parts {
        total.merge(c);
    }
    assemble(spec, hbar, &total)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    /// The swept parameter (ν, L or n).
    pub param: f64,
    pub result: EstimatorResult,
    /// `|estimate − oracle|` when an oracle was supplied.
    pub error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    pub oracle: Option<Complex64>,
}

impl ConvergenceTable {
    fn build(rows: Vec<(f64, EstimatorResult)>, oracle: Option<Complex64>) -> Self {
        let rows = rows
            .into_iter()
            .map(|(param, result)| ConvergenceRow {
                param,
                result,
                error: oracle.map(|o| (result.mean - o).norm()),
            })
            .collect();
        Self { rows, oracle }
    }

    /// Every error is at most the previous one plus `slack` combined
    /// standard errors of the two rows.
    pub fn error_non_increasing(&self, slack: f64) -> bool {
        self.rows.windows(2).all(|w| match (w[0].error, w[1].error) {
            (Some(a), Some(b)) => {
                let s = w[0].result.sigma().hypot(w[1].result.sigma());
                b <= a + slack * s
            }
            _ => false,
        })
    }

    /// `(|Δ estimate|, combined σ)` between the last two rows.
    pub fn finest_drift(&self) -> Option<(f64, f64)> {
        let n = self.rows.len();
        if n < 2 {
            return None;
        }
        let (a, b) = (&self.rows[n - 2].result, &self.rows[n - 1].result);
        Some(((a.mean - b.mean).norm(), a.sigma().hypot(b.sigma())))
    }
}

/// Estimates at each ν in `nus`, all other parameters from `template`.
pub fn nu_sweep(
    template: &BridgeSpec,
    sym: &PolySymbol,
    hbar: f64,
    nus: &[f64],
    n: u64,
    oracle: Option<Complex64>,
    opts: &EstimateOptions,
) -> Result<ConvergenceTable> {
    for &nu in nus {
        validate_run(&template.with_nu(nu)?, hbar, n, opts)?;
    }
    let rows = nus
        .iter()
        .map(|&nu| Ok((nu, estimate_propagator_with(&template.with_nu(nu)?, sym, hbar, n, opts)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ConvergenceTable::build(rows, oracle))
}

/// Estimates at each step count in `steps`.
pub fn steps_sweep(
    template: &BridgeSpec,
    sym: &PolySymbol,
    hbar: f64,
    steps: &[usize],
    n: u64,
    oracle: Option<Complex64>,
    opts: &EstimateOptions,
) -> Result<ConvergenceTable> {
    let rows = steps
        .iter()
        .map(|&l| {
            let spec = template.with_steps(l)?;
            Ok((l as f64, estimate_propagator_with(&spec, sym, hbar, n, opts)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConvergenceTable::build(rows, oracle))
}

/// Estimates at each sample count in `ns`.
pub fn samples_sweep(
    template: &BridgeSpec,
    sym: &PolySymbol,
    hbar: f64,
    ns: &[u64],
    oracle: Option<Complex64>,
    opts: &EstimateOptions,
) -> Result<ConvergenceTable> {
    let rows = ns
        .iter()
        .map(|&n| Ok((n as f64, estimate_propagator_with(template, sym, hbar, n, opts)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ConvergenceTable::build(rows, oracle))
}
