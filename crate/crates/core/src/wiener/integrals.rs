//! Stochastic `∫p dq` sums and the action phase along a path.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::PhasePath;
use crate::symbol::{CompiledSymbol, PolySymbol};

/// Discretization of `∫p dq`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    /// `Σ ½(p_{l+1} + p_l)(q_{l+1} − q_l)`.
    #[default]
    Stratonovich,
    /// `Σ p_l (q_{l+1} − q_l)`.
    Ito,
}

#[inline]
pub fn pdq(p: &[f64], q: &[f64], rule: Rule) -> f64 {
    let mut s = 0.0;
    match rule {
        Rule::Stratonovich => {
            for l in 0..p.len() - 1 {
                s += 0.5 * (p[l + 1] + p[l]) * (q[l + 1] - q[l]);
            }
        }
        Rule::Ito => {
            for l in 0..p.len() - 1 {
                s += p[l] * (q[l + 1] - q[l]);
            }
        }
    }
    s
}

/// `Σ H(midpoint of segment l)·Δt`.
#[inline]
pub fn hamiltonian_integral(p: &[f64], q: &[f64], dt: f64, h: &CompiledSymbol) -> f64 {
    if h.is_zero() {
        return 0.0;
    }
    let mut s = 0.0;
    for l in 0..p.len() - 1 {
        s += h.eval(0.5 * (p[l] + p[l + 1]), 0.5 * (q[l] + q[l + 1]));
    }
    s * dt
}

pub fn stratonovich_pdq(path: &PhasePath) -> f64 {
    pdq(&path.p(), &path.q(), Rule::Stratonovich)
}

pub fn ito_pdq(path: &PhasePath) -> f64 {
    pdq(&path.p(), &path.q(), Rule::Ito)
}

/// `exp{(i/ħ)(∫p dq − ∫H dt)}`.
pub fn action_phase(path: &PhasePath, sym: &PolySymbol, hbar: f64, rule: Rule) -> Complex64 {
    let (p, q) = (path.p(), path.q());
    let s = pdq(&p, &q, rule) - hamiltonian_integral(&p, &q, path.dt(), &sym.compile());
    Complex64::from_polar(1.0, s / hbar)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn circle(steps: usize) -> PhasePath {
        let pts = (0..=steps)
            .map(|l| {
                let t = 2.0 * PI * l as f64 / steps as f64;
                (t.cos(), t.sin())
            })
            .collect();
        PhasePath::new(2.0 * PI, pts).unwrap()
    }

    #[test]
    fn constant_momentum_telescopes() {
        let pts: Vec<_> = (0..=10).map(|l| (2.5, (l as f64).sin())).collect();
        let path = PhasePath::new(1.0, pts).unwrap();
        let want = 2.5 * (10f64.sin() - 0.0);
        assert_eq!(stratonovich_pdq(&path), ito_pdq(&path));
        assert!((stratonovich_pdq(&path) - want).abs() < 1e-14);
    }

    #[test]
    fn circle_area() {
        assert!((stratonovich_pdq(&circle(4096)) - PI).abs() <= 1e-4);
    }

    #[test]
    fn reversal_negates_midpoint_sum() {
        // each term negates exactly; the sums differ only by summation order
        let path = circle(97);
        let (p, q) = (path.p(), path.q());
        for l in 0..97 {
            let fwd = 0.5 * (p[l + 1] + p[l]) * (q[l + 1] - q[l]);
            let bwd = 0.5 * (p[l] + p[l + 1]) * (q[l] - q[l + 1]);
            assert_eq!(fwd, -bwd);
        }
        let s = stratonovich_pdq(&path);
        assert!((stratonovich_pdq(&path.reversed()) + s).abs() <= 1e-14 * s.abs());
    }

    #[test]
    fn phase_special_cases() {
        let flat = PhasePath::new(1.0, vec![(0.3, 0.4); 65]).unwrap();
        assert_eq!(action_phase(&flat, &PolySymbol::zero(), 1.0, Rule::Stratonovich), Complex64::new(1.0, 0.0));
        let e = 0.8;
        let path = circle(128);
        let z = action_phase(&path, &PolySymbol::constant(e), 0.5, Rule::Stratonovich);
        let s = stratonovich_pdq(&path);
        let want = Complex64::from_polar(1.0, (s - e * 2.0 * PI) / 0.5);
        assert!((z - want).norm() < 1e-12);
        assert!((z.norm() - 1.0).abs() <= 1e-12);
    }
}
