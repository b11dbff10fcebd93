//! Antinormal-ordering quantization of polynomial symbols, the quadrature
//! oracle for it, and phase-space metrics.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coherent::{integrate_projectors, CoherentFamily, CoherentLabel, FiducialSpec, QuadratureGrid};
use crate::error::{MetriqError, Result};
use crate::fock::{CMatrix, CVector, HilbertDim, OperatorMatrix, StateVector};
use crate::symbol::{PolySymbol, MAX_DEGREE};
use crate::wiener::CoordMap;

/// Constant metric `dσ² = A dp² + 2B dp dq + C dq²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseMetric {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl PhaseMetric {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        if !(a > 0.0 && c > 0.0 && a * c > b * b) {
            return Err(MetriqError::InvalidParameter {
                name: "metric",
                reason: format!("need A>0, C>0, AC>B² (got A={a}, B={b}, C={c})"),
            });
        }
        Ok(Self { a, b, c })
    }

    /// `ħ(dp² + dq²)`.
    pub fn flat(hbar: f64) -> Self {
        Self {
            a: hbar,
            b: 0.0,
            c: hbar,
        }
    }

    pub fn determinant(&self) -> f64 {
        self.a * self.c - self.b * self.b
    }

    pub fn line_element(&self, dp: f64, dq: f64) -> f64 {
        self.a * dp * dp + 2.0 * self.b * dp * dq + self.c * dq * dq
    }

    fn as_matrix(&self) -> [[f64; 2]; 2] {
        [[self.a, self.b], [self.b, self.c]]
    }
}

/// Operator with symbol `sym` in antinormal order, compressed to `space`.
///
/// Each monomial is rewritten in `z = (q+ip)/√(2ħ)` and `z̄` with exact
/// integer binomial coefficients; `z^j z̄^k` then becomes `a^j (a†)^k`. The
/// matrix elements of `a^j (a†)^k` are filled in analytically, so the result
/// is the exact compression of the infinite-dimensional operator.
pub fn antinormal_quantize(sym: &PolySymbol, space: HilbertDim) -> Result<OperatorMatrix> {
    let deg = sym.degree();
    if deg > MAX_DEGREE {
        return Err(MetriqError::Capacity(format!("degree {deg} exceeds {MAX_DEGREE}")));
    }
    let dim = space.dim();
    if dim < 4 * deg as usize {
        return Err(MetriqError::Capacity(format!(
            "dim {dim} too small for degree {deg} (need ≥ {})",
            4 * deg
        )));
    }
    let hbar = space.hbar();
    let mut out = CMatrix::zeros(dim, dim);
    for (m, n, c) in sym.terms() {
        let scale = c * (hbar / 2.0).powf((m + n) as f64 / 2.0);
        // (−i)^m
        let unit = match m % 4 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, -1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, 1.0),
        };
        for (j, weight) in z_expansion(m, n).into_iter().enumerate() {
            if weight == 0 {
                continue;
            }
            let k = (m + n) as usize - j;
            let coef = unit * (scale * weight as f64);
            add_antinormal_monomial(&mut out, j, k, coef);
        }
    }
    // real symbols give hermitian operators; remove roundoff asymmetry
    let herm = (&out + out.adjoint()) * Complex64::new(0.5, 0.0);
    OperatorMatrix::new(herm, space)
}

/// Integer coefficients `w_j` of `(z − z̄)^m (z + z̄)^n = Σ_j w_j z^j z̄^{m+n−j}`.
fn z_expansion(m: u32, n: u32) -> Vec<i128> {
    let binom = |n: u32, k: u32| -> i128 {
        (0..k).fold(1i128, |acc, i| acc * (n - i) as i128 / (i + 1) as i128)
    };
    let mut w = vec![0i128; (m + n) as usize + 1];
    for a in 0..=m {
        let sign = if (m - a).is_multiple_of(2) { 1 } else { -1 };
        for b in 0..=n {
            w[(a + b) as usize] += sign * binom(m, a) * binom(n, b);
        }
    }
    w
}

/// `out += coef · a^j (a†)^k` on the lowest `dim` levels:
/// `a^j (a†)^k |n⟩ = √((n+k)!/n!) √((n+k)!/(n+k−j)!) |n+k−j⟩`.
fn add_antinormal_monomial(out: &mut CMatrix, j: usize, k: usize, coef: Complex64) {
    let dim = out.nrows();
    for col in 0..dim {
        let top = col + k;
        if top < j {
            continue;
        }
        let row = top - j;
        if row >= dim {
            continue;
        }
        let mut amp = 1.0f64;
        for x in col + 1..=top {
            amp *= (x as f64).sqrt();
        }
        for x in row + 1..=top {
            amp *= (x as f64).sqrt();
        }
        out[(row, col)] += coef * amp;
    }
}

/// Quadrature evaluation of `∫H(p,q)|p,q⟩⟨p,q| dp dq/(2πħ)` (vacuum
/// fiducial), compressed to `grid.levels` (default `dim/4`).
#[derive(Debug, Clone)]
pub struct QuadratureOperator {
    pub matrix: OperatorMatrix,
    pub working_dim: usize,
    pub warnings: Vec<String>,
}

pub fn antinormal_quantize_quadrature(
    sym: &PolySymbol,
    space: HilbertDim,
    grid: &QuadratureGrid,
) -> Result<QuadratureOperator> {
    let levels = grid.levels.unwrap_or((space.dim() / 4).max(1));
    let compiled = sym.compile();
    let (m, working_dim) = integrate_projectors(&FiducialSpec::Vacuum, space, grid, levels, |p, q| {
        compiled.eval(p, q)
    })?;
    let mut warnings = Vec::new();
    if grid.nodes < 64 {
        warnings.push(format!("only {} nodes per axis (< 64)", grid.nodes));
    }
    // Gaussian tail at the inscribed circle times the symbol's growth there
    let r = grid.radius;
    let alpha2 = r * r / (2.0 * space.hbar());
    let top = (levels - 1) as f64;
    let growth = sym
        .terms()
        .map(|(m, n, c)| c.abs() * r.powi((m + n) as i32))
        .sum::<f64>()
        .max(1.0);
    let ln_fact: f64 = (2..levels).map(|k| (k as f64).ln()).sum();
    let tail = (-alpha2 + top * alpha2.ln() - ln_fact).exp() * growth;
    if tail > 1e-8 {
        warnings.push(format!("radius {r} under-resolves the symbol tail (estimate {tail:.1e})"));
    }
    if grid.spacing() > 0.5 * space.hbar().sqrt() {
        warnings.push(format!("node spacing {:.3} is coarse", grid.spacing()));
    }
    Ok(QuadratureOperator {
        matrix: OperatorMatrix::new(m, space.with_dim(levels)?)?,
        working_dim,
        warnings,
    })
}

/// Second moments of `(Q, P)` in `|p,q;ψ⟩ = U[p,q]|ψ⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean_q: f64,
    pub mean_p: f64,
    pub var_q: f64,
    pub var_p: f64,
    /// `⟨ΔQΔP + ΔPΔQ⟩`.
    pub sym_cov: f64,
}

pub fn state_moments(psi: &StateVector, space: HilbertDim) -> Result<Moments> {
    if psi.len() != space.dim() {
        return Err(MetriqError::ContractViolation("state length differs from dim".into()));
    }
    // one extra level so that Q|ψ⟩, P|ψ⟩ are exact even with top-level support
    let padded = space.with_dim(space.dim() + 1)?;
    let (q, p) = crate::fock::make_canonical_pair(padded)?;
    let mut v = CVector::zeros(padded.dim());
    v.rows_mut(0, space.dim()).copy_from(psi.amps());
    let qv = q.entries() * &v;
    let pv = p.entries() * &v;
    let norm2 = v.norm_squared();
    let mean_q = v.dotc(&qv).re / norm2;
    let mean_p = v.dotc(&pv).re / norm2;
    let dq = &qv - &v * Complex64::new(mean_q, 0.0);
    let dp = &pv - &v * Complex64::new(mean_p, 0.0);
    Ok(Moments {
        mean_q,
        mean_p,
        var_q: dq.norm_squared() / norm2,
        var_p: dp.norm_squared() / norm2,
        sym_cov: 2.0 * dq.dotc(&dp).re / norm2,
    })
}

/// Metric induced on phase space by `‖ħ d|p,q;ψ⟩‖² − |⟨p,q;ψ|ħ d|p,q;ψ⟩|²`.
///
/// With `ħ d|p,q;ψ⟩ = i[(Q − q)dp − P dq]|p,q;ψ⟩` this is the variance of
/// `ΔQ dp − ΔP dq`, hence `A = ⟨ΔQ²⟩`, `C = ⟨ΔP²⟩` and
/// `B = −½⟨ΔQΔP + ΔPΔQ⟩`.
pub fn fluctuation_metric(psi: &StateVector, space: HilbertDim) -> Result<PhaseMetric> {
    fluctuation_metric_at(psi, space, CoherentLabel::ORIGIN)
}

pub fn fluctuation_metric_at(
    psi: &StateVector,
    space: HilbertDim,
    label: CoherentLabel,
) -> Result<PhaseMetric> {
    if !psi.is_normalized() {
        return Err(MetriqError::ContractViolation("psi must have unit norm".into()));
    }
    let state = if label == CoherentLabel::ORIGIN {
        psi.clone()
    } else {
        CoherentFamily::new(space)?.state(label, &FiducialSpec::Custom(psi.clone()))?
    };
    let m = state_moments(&state, space)?;
    Ok(PhaseMetric {
        a: m.var_q,
        b: -0.5 * m.sym_cov,
        c: m.var_p,
    })
}

/// Metric in the barred coordinates `x̄ = M x`: `ḡ = M⁻ᵀ g M⁻¹`.
pub fn metric_transform(metric: &PhaseMetric, map: &CoordMap) -> Result<PhaseMetric> {
    metric_transform_linear(metric, map.matrix())
}

/// As [`metric_transform`] for any invertible linear map.
pub fn metric_transform_linear(metric: &PhaseMetric, m: [[f64; 2]; 2]) -> Result<PhaseMetric> {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if det.abs() < 1e-14 || !det.is_finite() {
        return Err(MetriqError::SingularMap { det });
    }
    let inv = [
        [m[1][1] / det, -m[0][1] / det],
        [-m[1][0] / det, m[0][0] / det],
    ];
    let g = metric.as_matrix();
    let mut out = [[0.0; 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = (0..2)
                .flat_map(|k| (0..2).map(move |l| (k, l)))
                .map(|(k, l)| inv[k][i] * g[k][l] * inv[l][j])
                .sum();
        }
    }
    Ok(PhaseMetric {
        a: out[0][0],
        b: 0.5 * (out[0][1] + out[1][0]),
        c: out[1][1],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{hermitian_eig, make_ladder, max_abs};

    fn sp(dim: usize, hbar: f64) -> HilbertDim {
        HilbertDim::new(dim, hbar).unwrap()
    }

    #[test]
    fn constant_maps_to_identity() {
        let op = antinormal_quantize(&PolySymbol::constant(1.0), sp(16, 1.0)).unwrap();
        assert!(max_abs(&(op.entries() - CMatrix::identity(16, 16))) < 1e-15);
    }

    #[test]
    fn linear_symbols_are_q_and_p() {
        let space = sp(12, 0.7);
        let (q, p) = crate::fock::make_canonical_pair(space).unwrap();
        let oq = antinormal_quantize(&"q".parse().unwrap(), space).unwrap();
        let op = antinormal_quantize(&"p".parse().unwrap(), space).unwrap();
        assert!(max_abs(&(oq.entries() - q.entries())) < 1e-15);
        assert!(max_abs(&(op.entries() - p.entries())) < 1e-15);
    }

    #[test]
    fn harmonic_symbol_is_shifted_number_operator() {
        for hbar in [0.5, 1.0, 2.0] {
            let space = sp(32, hbar);
            let op = antinormal_quantize(&PolySymbol::harmonic(), space).unwrap();
            let a = make_ladder(space).unwrap();
            let n = a.adjoint().matmul(&a).unwrap().into_entries();
            let want = (n + CMatrix::identity(32, 32)) * Complex64::new(hbar, 0.0);
            assert!(max_abs(&(op.entries() - want)) < 1e-12);
            let spec = hermitian_eig(&op).unwrap();
            for (k, v) in spec.values.iter().take(16).enumerate() {
                assert!((v - hbar * (k as f64 + 1.0)).abs() <= 1e-8);
            }
        }
    }

    #[test]
    fn z_expansion_small_cases() {
        // (z − z̄)(z + z̄) = z² − z̄²
        assert_eq!(z_expansion(1, 1), vec![-1, 0, 1]);
        // (z + z̄)^2 = z̄² + 2 z z̄ + z²
        assert_eq!(z_expansion(0, 2), vec![1, 2, 1]);
        assert_eq!(z_expansion(0, 0), vec![1]);
    }

    #[test]
    fn q_fourth_closed_form_entries() {
        // antinormal q⁴ = (ħ/2)² Σ C(4,j) a^j a†^{4−j}; ⟨0|·|0⟩ = (ħ/2)²(1·4! + 4·3! ·0 ... )
        // direct: ⟨0|a^j a†^{4−j}|0⟩ ≠ 0 only for j = 2: ⟨0|a²a†²|0⟩ = 2, with C(4,2) = 6
        let op = antinormal_quantize(&"q^4".parse().unwrap(), sp(32, 1.0)).unwrap();
        assert!((op.get(0, 0).re - 0.25 * 12.0).abs() < 1e-12);
    }

    #[test]
    fn capacity_errors() {
        let s: PolySymbol = "q^8".parse().unwrap();
        assert!(matches!(antinormal_quantize(&s, sp(16, 1.0)), Err(MetriqError::Capacity(_))));
        assert!(antinormal_quantize(&s, sp(32, 1.0)).is_ok());
    }

    #[test]
    fn real_symbols_give_hermitian_operators() {
        let s: PolySymbol = "0.3*p^3*q - 1.2*p*q^2 + 0.7*p^2*q^2 + q^5".parse().unwrap();
        let op = antinormal_quantize(&s, sp(40, 1.0)).unwrap();
        assert!(op.is_hermitian());
    }

    #[test]
    fn vacuum_metric_and_number_state_metric() {
        let space = sp(64, 1.0);
        let vac = StateVector::basis(64, 0).unwrap();
        let g = fluctuation_metric(&vac, space).unwrap();
        assert!((g.a - 0.5).abs() <= 1e-12 && g.b.abs() <= 1e-12 && (g.c - 0.5).abs() <= 1e-12);
        let one = StateVector::basis(64, 1).unwrap();
        let g = fluctuation_metric(&one, space).unwrap();
        assert!((g.a - 1.5).abs() <= 1e-12 && g.b.abs() <= 1e-12 && (g.c - 1.5).abs() <= 1e-12);
    }

    #[test]
    fn top_level_moments_are_exact() {
        // |dim−1⟩ has ⟨Q²⟩ = ħ(2n+1)/2 only if the level above is kept
        let space = sp(8, 1.0);
        let top = StateVector::basis(8, 7).unwrap();
        let m = state_moments(&top, space).unwrap();
        assert!((m.var_q - 7.5).abs() < 1e-12);
    }

    #[test]
    fn metric_transform_scaling() {
        let lam = 1.7;
        let g = PhaseMetric::flat(1.3);
        let map = CoordMap::scaling(lam).unwrap();
        let t = metric_transform(&g, &map).unwrap();
        assert!((t.a - 1.3 * lam * lam).abs() < 1e-12);
        assert!(t.b.abs() < 1e-12);
        assert!((t.c - 1.3 / (lam * lam)).abs() < 1e-12);
        let id = metric_transform(&g, &CoordMap::identity()).unwrap();
        assert_eq!(id, g);
    }

    #[test]
    fn metric_transform_singular() {
        let g = PhaseMetric::flat(1.0);
        assert!(matches!(
            metric_transform_linear(&g, [[1.0, 2.0], [2.0, 4.0]]),
            Err(MetriqError::SingularMap { .. })
        ));
    }

    #[test]
    fn metric_validation() {
        assert!(PhaseMetric::new(1.0, 1.0, 1.0).is_err());
        assert!(PhaseMetric::new(-1.0, 0.0, 1.0).is_err());
        assert!(PhaseMetric::new(2.0, 0.5, 1.0).is_ok());
    }
}
