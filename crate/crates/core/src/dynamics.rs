//! Classical Hamiltonian flow, boundary-value taxonomy, and the exact
//! coherent-state propagator.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coherent::{CoherentFamily, CoherentLabel, FiducialSpec};
use crate::error::{invalid, MetriqError, Result};
use crate::fock::{hermitian_eig, HilbertDim};
use crate::quantize::antinormal_quantize;
use crate::symbol::{PolySymbol, MAX_DEGREE};

/// Points `(p_l, q_l)` on the uniform grid `t_l = l·T/L`, `l = 0..=L`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePath {
    duration: f64,
    points: Vec<(f64, f64)>,
}

impl PhasePath {
    pub fn new(duration: f64, points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(invalid("path", "need at least one step"));
        }
        if !(duration.is_finite() && duration > 0.0) {
            return Err(invalid("T", format!("duration must be positive, got {duration}")));
        }
        if points.iter().any(|(p, q)| !(p.is_finite() && q.is_finite())) {
            return Err(MetriqError::ContractViolation("path has non-finite points".into()));
        }
        Ok(Self { duration, points })
    }

    /// `(p_l, q_l)` pairs from separate component slices.
    pub fn from_components(duration: f64, p: &[f64], q: &[f64]) -> Result<Self> {
        if p.len() != q.len() {
            return Err(MetriqError::ContractViolation("component lengths differ".into()));
        }
        Self::new(duration, p.iter().copied().zip(q.iter().copied()).collect())
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    /// Number of steps L.
    pub fn steps(&self) -> usize {
        self.points.len() - 1
    }

    pub fn dt(&self) -> f64 {
        self.duration / self.steps() as f64
    }

    pub fn time(&self, l: usize) -> f64 {
        l as f64 * self.dt()
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn start(&self) -> (f64, f64) {
        self.points[0]
    }

    pub fn end(&self) -> (f64, f64) {
        self.points[self.steps()]
    }

    pub fn p(&self) -> Vec<f64> {
        self.points.iter().map(|x| x.0).collect()
    }

    pub fn q(&self) -> Vec<f64> {
        self.points.iter().map(|x| x.1).collect()
    }

    /// Same points traversed backwards in time.
    pub fn reversed(&self) -> Self {
        let mut points = self.points.clone();
        points.reverse();
        Self {
            duration: self.duration,
            points,
        }
    }
}

fn validate_flow(sym: &PolySymbol, steps: usize) -> Result<()> {
    if steps < 16 {
        return Err(invalid("steps", format!("need at least 16, got {steps}")));
    }
    if sym.degree() > MAX_DEGREE {
        return Err(MetriqError::Capacity(format!("symbol degree {} too high", sym.degree())));
    }
    Ok(())
}

#[inline]
fn vector_field(sym: &PolySymbol, p: f64, q: f64) -> (f64, f64) {
    (-sym.d_dq(p, q), sym.d_dp(p, q))
}

fn rk4_step(sym: &PolySymbol, (p, q): (f64, f64), h: f64) -> (f64, f64) {
    let (k1p, k1q) = vector_field(sym, p, q);
    let (k2p, k2q) = vector_field(sym, p + 0.5 * h * k1p, q + 0.5 * h * k1q);
    let (k3p, k3q) = vector_field(sym, p + 0.5 * h * k2p, q + 0.5 * h * k2q);
    let (k4p, k4q) = vector_field(sym, p + h * k3p, q + h * k3q);
    (
        p + h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p),
        q + h / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q),
    )
}

fn integrate(
    sym: &PolySymbol,
    init: (f64, f64),
    duration: f64,
    steps: usize,
    mut visit: impl FnMut((f64, f64)),
) -> Result<(f64, f64)> {
    let h = duration / steps as f64;
    let mut x = init;
    visit(x);
    for l in 0..steps {
        let next = rk4_step(sym, x, h);
        if !(next.0.is_finite() && next.1.is_finite()) {
            return Err(MetriqError::Divergence {
                last_finite_time: l as f64 * h,
            });
        }
        x = next;
        visit(x);
    }
    Ok(x)
}

/// Solves `q̇ = ∂H/∂p`, `ṗ = −∂H/∂q` with fixed-step RK4.
///
/// These are the stationarity conditions of both `∫[p q̇ − H] dt` and
/// `∫[−q ṗ − H] dt`; the two actions differ by a boundary term, so a
/// single integrator serves both.
pub fn hamilton_flow(sym: &PolySymbol, init: (f64, f64), duration: f64, steps: usize) -> Result<PhasePath> {
    validate_flow(sym, steps)?;
    let mut points = Vec::with_capacity(steps + 1);
    integrate(sym, init, duration, steps, |x| points.push(x))?;
    PhasePath::new(duration, points)
}

/// Endpoint of the flow; `duration` may be negative or zero.
pub fn flow_endpoint(sym: &PolySymbol, init: (f64, f64), duration: f64, steps: usize) -> Result<(f64, f64)> {
    validate_flow(sym, steps)?;
    integrate(sym, init, duration, steps, |_| {})
}

/// Uniform scan of initial momenta for [`bvp_shoot`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentumScan {
    pub min: f64,
    pub max: f64,
    pub count: usize,
    /// A scanned or bisected momentum counts as a solution when
    /// `|q(T) − q_T|` is within this tolerance.
    pub hit_tol: f64,
}

impl MomentumScan {
    pub fn new(min: f64, max: f64, count: usize) -> Self {
        Self {
            min,
            max,
            count,
            hit_tol: 1e-6,
        }
    }

    pub fn momenta(&self) -> Vec<f64> {
        let step = (self.max - self.min) / (self.count - 1) as f64;
        (0..self.count).map(|i| self.min + i as f64 * step).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BvpClass {
    None,
    Unique,
    Many,
    OverSpecified,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BvpReport {
    pub classification: BvpClass,
    /// Initial data `(p₀, q₀)` of every accepted solution.
    pub solutions: Vec<(f64, f64)>,
    /// True when `q(T)` does not depend on `p₀` across the scan.
    pub degenerate: bool,
    /// Scanned momenta per unit momentum, 0 for the overdetermined check.
    pub scan_density: f64,
    /// Momenta whose trajectories diverged.
    pub diverged: Vec<f64>,
    /// Achieved `(p(T), q(T))` and its distance to the target, for the
    /// overdetermined check.
    pub achieved: Option<(f64, f64)>,
    pub distance: Option<f64>,
}

/// Fixed RK4 resolution used inside the shooting method.
pub const SHOOT_STEPS: usize = 2048;
const BISECT_TOL: f64 = 1e-8;

/// Shoots `q(0) = q0`, `q(T) = qT` over initial momenta.
pub fn bvp_shoot(sym: &PolySymbol, q0: f64, q_t: f64, duration: f64, scan: &MomentumScan) -> Result<BvpReport> {
    if scan.count < 64 {
        return Err(invalid("scan", format!("count must be at least 64, got {}", scan.count)));
    }
    if !(scan.max > scan.min) || !(scan.hit_tol > 0.0) {
        return Err(invalid("scan", "need max > min and a positive tolerance"));
    }
    validate_flow(sym, SHOOT_STEPS)?;
    let shoot = |p0: f64| flow_endpoint(sym, (p0, q0), duration, SHOOT_STEPS).map(|x| x.1 - q_t);

    let momenta = scan.momenta();
    let residuals: Vec<Result<f64>> = momenta.par_iter().map(|&p0| shoot(p0)).collect();
    let mut diverged = Vec::new();
    let mut ok: Vec<(f64, f64)> = Vec::new();
    for (&p0, r) in momenta.iter().zip(residuals) {
        match r {
            Ok(r) => ok.push((p0, r)),
            Err(MetriqError::Divergence { .. }) => diverged.push(p0),
            Err(e) => return Err(e),
        }
    }
    let density = (scan.count - 1) as f64 / (scan.max - scan.min);
    let mut report = BvpReport {
        classification: BvpClass::None,
        solutions: Vec::new(),
        degenerate: false,
        scan_density: density,
        diverged,
        achieved: None,
        distance: None,
    };
    if ok.is_empty() {
        return Ok(report);
    }

    let (lo, hi) = ok
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(_, r)| (lo.min(r), hi.max(r)));
    if hi - lo <= scan.hit_tol {
        // q(T) does not depend on p₀: either everything hits or nothing does
        report.degenerate = true;
        if ok.iter().all(|&(_, r)| r.abs() <= scan.hit_tol) {
            report.solutions = ok.iter().map(|&(p0, _)| (p0, q0)).collect();
            report.classification = BvpClass::Many;
        }
        return Ok(report);
    }

    let mut roots: Vec<f64> = Vec::new();
    for (i, &(p0, r)) in ok.iter().enumerate() {
        if r == 0.0 {
            roots.push(p0);
            continue;
        }
        if let Some(&(p1, r1)) = ok.get(i + 1) {
            if r1 != 0.0 && r.signum() != r1.signum() {
                roots.push(bisect(&shoot, p0, r, p1)?);
            }
        }
    }
    let mut accepted: Vec<f64> = Vec::new();
    for p0 in roots {
        if shoot(p0)?.abs() > scan.hit_tol {
            continue;
        }
        if accepted.last().is_none_or(|&last| (p0 - last).abs() > 10.0 * BISECT_TOL) {
            accepted.push(p0);
        }
    }
    report.classification = match accepted.len() {
        0 => BvpClass::None,
        1 => BvpClass::Unique,
        _ => BvpClass::Many,
    };
    report.solutions = accepted.into_iter().map(|p0| (p0, q0)).collect();
    Ok(report)
}

fn bisect(f: &impl Fn(f64) -> Result<f64>, mut a: f64, mut fa: f64, mut b: f64) -> Result<f64> {
    while (b - a).abs() > BISECT_TOL {
        let m = 0.5 * (a + b);
        let fm = f(m)?;
        if fm == 0.0 {
            return Ok(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Distance at which the overdetermined check still counts as consistent.
pub const OVERDETERMINED_TOL: f64 = 1e-6;

/// Integrates from `init` and compares the endpoint with `target`: full
/// phase-space data at both ends generally over-specifies the flow.
pub fn bvp_overdetermined_check(
    sym: &PolySymbol,
    init: (f64, f64),
    target: (f64, f64),
    duration: f64,
) -> Result<BvpReport> {
    let end = flow_endpoint(sym, init, duration, SHOOT_STEPS)?;
    let distance = ((end.0 - target.0).powi(2) + (end.1 - target.1).powi(2)).sqrt();
    let consistent = distance <= OVERDETERMINED_TOL;
    Ok(BvpReport {
        classification: if consistent { BvpClass::Unique } else { BvpClass::OverSpecified },
        solutions: if consistent { vec![init] } else { Vec::new() },
        degenerate: false,
        scan_density: 0.0,
        diverged: Vec::new(),
        achieved: Some(end),
        distance: Some(distance),
    })
}

/// Largest cutoff tried by [`exact_propagator`] before giving up.
pub const MAX_PROPAGATOR_DIM: usize = 256;
/// Successive cutoffs must agree this closely.
pub const PROPAGATOR_DIM_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagatorReport {
    pub value: Complex64,
    /// Cutoff at which `value` was computed.
    pub dim: usize,
    /// `|value(dim) − value(dim/2)|`.
    pub delta: f64,
    pub converged: bool,
}

/// `⟨l2| e^{−iℋT/ħ} |l1⟩` with `ℋ` the antinormal quantization of `sym` and
/// vacuum fiducial.
///
/// The cutoff is doubled from `space.dim()` until two successive results
/// agree within [`PROPAGATOR_DIM_TOL`] or the cutoff would exceed
/// `max(MAX_PROPAGATOR_DIM, space.dim())`; a result that never settles is
/// returned with `converged = false`.
pub fn exact_propagator(
    sym: &PolySymbol,
    l1: CoherentLabel,
    l2: CoherentLabel,
    duration: f64,
    space: HilbertDim,
) -> Result<PropagatorReport> {
    let cap = MAX_PROPAGATOR_DIM.max(space.dim());
    let mut dim = space.dim();
    let mut prev = propagator_at(sym, l1, l2, duration, space)?;
    let mut delta = f64::INFINITY;
    while dim * 2 <= cap {
        dim *= 2;
        let next = propagator_at(sym, l1, l2, duration, space.with_dim(dim)?)?;
        delta = (next - prev).norm();
        prev = next;
        if delta < PROPAGATOR_DIM_TOL {
            break;
        }
    }
    Ok(PropagatorReport {
        value: prev,
        dim,
        delta,
        converged: delta < PROPAGATOR_DIM_TOL,
    })
}

/// Single-cutoff propagator, no sensitivity check.
pub fn propagator_at(
    sym: &PolySymbol,
    l1: CoherentLabel,
    l2: CoherentLabel,
    duration: f64,
    space: HilbertDim,
) -> Result<Complex64> {
    let family = CoherentFamily::new(space)?;
    let fid = FiducialSpec::Vacuum;
    let ket = family.state(l1, &fid)?;
    let bra = family.state(l2, &fid)?;
    let h = antinormal_quantize(sym, space)?;
    let spec = hermitian_eig(&h)?;
    let moved = spec.exp_i_apply(-duration / space.hbar(), ket.amps());
    Ok(bra.amps().dotc(&moved))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::evolve;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn osc() -> PolySymbol {
        PolySymbol::harmonic()
    }

    #[test]
    fn oscillator_full_turn() {
        let path = hamilton_flow(&osc(), (0.0, 1.0), 2.0 * PI, 1024).unwrap();
        let (p, q) = path.end();
        assert!(p.abs() <= 1e-6 && (q - 1.0).abs() <= 1e-6);
        assert_eq!(path.steps(), 1024);
    }

    #[test]
    fn linear_and_free_flows() {
        let h: PolySymbol = "p".parse().unwrap();
        let path = hamilton_flow(&h, (0.3, -0.2), 1.5, 64).unwrap();
        for (l, &(p, q)) in path.points().iter().enumerate() {
            assert!((p - 0.3).abs() < 1e-14);
            assert!((q - (-0.2 + path.time(l))).abs() < 1e-12);
        }
        let free: PolySymbol = "0.5*p^2".parse().unwrap();
        let (p, q) = flow_endpoint(&free, (0.7, 0.1), 2.0, 64).unwrap();
        assert!((p - 0.7).abs() < 1e-14 && (q - (0.1 + 1.4)).abs() <= 1e-10);
    }

    #[test]
    fn energy_drift_is_fourth_order() {
        let h: PolySymbol = "0.5*p^2 + 0.5*q^2 + 0.1*q^4".parse().unwrap();
        let drift = |steps| {
            let (p, q) = flow_endpoint(&h, (0.4, 1.0), 10.0, steps).unwrap();
            (h.eval(p, q) - h.eval(0.4, 1.0)).abs()
        };
        let ratio = drift(256) / drift(512);
        assert!(ratio > 12.0, "ratio {ratio}");
    }

    #[test]
    fn flow_rejects_short_grids() {
        assert!(hamilton_flow(&osc(), (0.0, 0.0), 1.0, 8).is_err());
    }

    #[test]
    fn blow_up_is_reported() {
        let h: PolySymbol = "p*q^2".parse().unwrap();
        // q̇ = q² blows up at t = 1/q₀
        let err = flow_endpoint(&h, (0.0, 10.0), 5.0, 4096).unwrap_err();
        assert!(matches!(err, MetriqError::Divergence { .. }));
    }

    #[test]
    fn time_reversal() {
        let h: PolySymbol = "0.5*p^2 + 0.5*q^2 + 0.2*q^4 - 0.1*p*q".parse().unwrap();
        let mid = flow_endpoint(&h, (0.5, -0.3), 1.3, 2048).unwrap();
        let back = flow_endpoint(&h, mid, -1.3, 2048).unwrap();
        assert!((back.0 - 0.5).abs() <= 1e-8 && (back.1 + 0.3).abs() <= 1e-8);
    }

    #[test]
    fn oscillator_map_is_area_preserving() {
        let t = 1.1;
        let f = |p, q| flow_endpoint(&osc(), (p, q), t, 512).unwrap();
        let e = 1e-5;
        let (pp, qp) = f(0.2 + e, 0.3);
        let (pm, qm) = f(0.2 - e, 0.3);
        let (pq, qq) = f(0.2, 0.3 + e);
        let (pn, qn) = f(0.2, 0.3 - e);
        let j = [
            [(pp - pm) / (2.0 * e), (pq - pn) / (2.0 * e)],
            [(qp - qm) / (2.0 * e), (qq - qn) / (2.0 * e)],
        ];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        assert!((det - 1.0).abs() <= 1e-6);
    }

    #[test]
    fn shoot_full_period() {
        let scan = MomentumScan::new(-3.0, 3.0, 256);
        let miss = bvp_shoot(&osc(), 0.0, 1.0, 2.0 * PI, &scan).unwrap();
        assert_eq!(miss.classification, BvpClass::None);
        assert!(miss.degenerate);
        let many = bvp_shoot(&osc(), 0.0, 0.0, 2.0 * PI, &scan).unwrap();
        assert_eq!(many.classification, BvpClass::Many);
        assert_eq!(many.solutions.len(), 256);
        for &(p0, q0) in &many.solutions {
            let (_, q) = flow_endpoint(&osc(), (p0, q0), 2.0 * PI, SHOOT_STEPS).unwrap();
            assert!(q.abs() <= 1e-6);
        }
    }

    #[test]
    fn shoot_quarter_period_unique() {
        let scan = MomentumScan::new(-3.0, 3.0, 256);
        let r = bvp_shoot(&osc(), 0.0, 1.0, FRAC_PI_2, &scan).unwrap();
        assert_eq!(r.classification, BvpClass::Unique);
        assert!((r.solutions[0].0 - 1.0).abs() <= 1e-6);
    }

    #[test]
    fn shoot_two_roots_for_nonlinear_symbol() {
        let h: PolySymbol = "p^3".parse().unwrap();
        // q̇ = 3p², ṗ = 0: q(1) = 3p₀², target 3 → p₀ = ±1
        let scan = MomentumScan::new(-2.0, 2.1, 128);
        let r = bvp_shoot(&h, 0.0, 3.0, 1.0, &scan).unwrap();
        assert_eq!(r.classification, BvpClass::Many);
        assert_eq!(r.solutions.len(), 2);
        assert!((r.solutions[0].0 + 1.0).abs() < 1e-7 && (r.solutions[1].0 - 1.0).abs() < 1e-7);
    }

    #[test]
    fn shoot_validates_scan() {
        let scan = MomentumScan::new(-1.0, 1.0, 32);
        assert!(bvp_shoot(&osc(), 0.0, 1.0, 1.0, &scan).is_err());
    }

    #[test]
    fn overdetermined_oscillator_and_linear() {
        let ok = bvp_overdetermined_check(&osc(), (0.0, 1.0), (0.0, 1.0), 2.0 * PI).unwrap();
        assert_eq!(ok.classification, BvpClass::Unique);
        assert!(ok.distance.unwrap() <= 1e-6);
        let miss = bvp_overdetermined_check(&osc(), (0.0, 1.0), (1.0, 1.0), 2.0 * PI).unwrap();
        assert_eq!(miss.classification, BvpClass::OverSpecified);
        assert!((miss.distance.unwrap() - 1.0).abs() <= 1e-6);

        let h: PolySymbol = "p".parse().unwrap();
        let t = 0.8;
        let ok = bvp_overdetermined_check(&h, (0.0, 0.0), (0.0, t), t).unwrap();
        assert_eq!(ok.classification, BvpClass::Unique);
        let miss = bvp_overdetermined_check(&h, (0.0, 0.0), (1.0, t), t).unwrap();
        assert_eq!(miss.classification, BvpClass::OverSpecified);
        assert!((miss.distance.unwrap() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn propagator_at_zero_time_is_overlap() {
        let space = HilbertDim::new(64, 1.0).unwrap();
        let l1 = CoherentLabel::new(0.4, -0.2);
        let l2 = CoherentLabel::new(-0.1, 0.5);
        let r = exact_propagator(&osc(), l1, l2, 0.0, space).unwrap();
        let ov = crate::coherent::overlap(l2, l1, &FiducialSpec::Vacuum, space).unwrap();
        assert!(r.converged);
        assert!((r.value - ov).norm() < 1e-10);
    }

    #[test]
    fn propagator_vacuum_phase() {
        let space = HilbertDim::new(64, 1.0).unwrap();
        for t in [0.3, 0.5, 2.0] {
            let r = exact_propagator(&osc(), CoherentLabel::ORIGIN, CoherentLabel::ORIGIN, t, space).unwrap();
            assert!((r.value - Complex64::from_polar(1.0, -t)).norm() < 1e-10);
        }
    }

    #[test]
    fn propagator_group_law() {
        let space = HilbertDim::new(64, 1.0).unwrap();
        let h: PolySymbol = "0.5*p^2 + 0.5*q^2 + 0.1*q^4".parse().unwrap();
        let l1 = CoherentLabel::new(0.5, 0.2);
        let l2 = CoherentLabel::new(0.1, -0.4);
        let t = 0.9;
        let direct = propagator_at(&h, l1, l2, t, space).unwrap();
        let family = CoherentFamily::new(space).unwrap();
        let ket = family.state(l1, &FiducialSpec::Vacuum).unwrap();
        let bra = family.state(l2, &FiducialSpec::Vacuum).unwrap();
        let op = antinormal_quantize(&h, space).unwrap();
        let half = evolve(&op, t / 2.0, &ket).unwrap();
        let full = evolve(&op, t / 2.0, &half).unwrap();
        assert!((bra.inner(&full) - direct).norm() <= 1e-10);
    }

    #[test]
    fn propagator_modulus_bounded() {
        let space = HilbertDim::new(48, 1.0).unwrap();
        let h: PolySymbol = "0.5*p^2 + 0.5*q^2 + 0.05*q^4".parse().unwrap();
        for k in 0..10 {
            let x = k as f64 * 0.37;
            let l1 = CoherentLabel::new(x.sin(), (1.3 * x).cos());
            let l2 = CoherentLabel::new((0.7 * x).cos(), -x.sin());
            let v = propagator_at(&h, l1, l2, 0.2 + x, space).unwrap();
            assert!(v.norm() <= 1.0 + 1e-12);
        }
    }
}
