//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Exact expectation of the Monte Carlo estimator on the L-step lattice for
/// `H = κ·½(p² + q²)`.
///
/// Write the bridge as chord plus interior fluctuations `z = (x, y)`, both
/// components `N(0, C)` with `C_jk = νΔt·min(j,k)(L − max(j,k))/L`. The
/// midpoint sum is `S₀ + (Δq/L)Σx_j − (Δp/L)Σy_j + xᵀAy` with
/// `A_{jk} = ½(δ_{k,j+1} − δ_{k,j−1})`; the midpoint Hamiltonian sum adds the
/// chord value, a linear term through the averaging matrix `M`, and
/// `½κΔt(xᵀMᵀMx + yᵀMᵀMy)`. With `z = Lw`, `w` standard normal, the
/// phase is `e^{i(S₀−H₀)/ħ} e^{icᵀw − ½wᵀ(iK)w}` and its mean is
/// `det(1 + iK)^{−1/2} exp(−½cᵀ(1 + iK)⁻¹c)`.
pub fn lattice_value(
    nu: f64,
    t: f64,
    steps: usize,
    kappa: f64,
    hbar: f64,
    start: (f64, f64),
    end: (f64, f64),
) -> Complex64 {
    let n = steps - 1;
    let lf = steps as f64;
    let dt = t / lf;
    let c = DMatrix::from_fn(n, n, |j, k| {
        let (j, k) = ((j + 1) as f64, (k + 1) as f64);
        nu * dt * j.min(k) * (lf - j.max(k)) / lf
    });
    let chol = c.cholesky().expect("bridge covariance is positive definite").l();
    let a = DMatrix::from_fn(n, n, |j, k| {
        if k == j + 1 {
            0.5
        } else if j == k + 1 {
            -0.5
        } else {
            0.0
        }
    });
    // segment l averages points l and l+1; interior column j is point j+1
    let m = DMatrix::from_fn(steps, n, |l, j| if j + 1 == l || j == l { 0.5 } else { 0.0 });
    let p = m.transpose() * &m * (kappa * dt);

    let (dp, dq) = (end.0 - start.0, end.1 - start.1);
    let chord = |x0: f64, d: f64, l: usize| x0 + d * l as f64 / lf;
    let pmid = DVector::from_fn(steps, |l, _| 0.5 * (chord(start.0, dp, l) + chord(start.0, dp, l + 1)));
    let qmid = DVector::from_fn(steps, |l, _| 0.5 * (chord(start.1, dq, l) + chord(start.1, dq, l + 1)));
    let s0: f64 = pmid.iter().map(|&pm| pm * dq / lf).sum();
    let h0 = 0.5 * kappa * dt * (pmid.norm_squared() + qmid.norm_squared());

    let bx = DVector::from_element(n, dq / lf) - m.transpose() * &pmid * (kappa * dt);
    let by = DVector::from_element(n, -dp / lf) - m.transpose() * &qmid * (kappa * dt);
    let mut b = DVector::zeros(2 * n);
    b.rows_mut(0, n).copy_from(&bx);
    b.rows_mut(n, n).copy_from(&by);
    b /= hbar;

    let mut r = DMatrix::zeros(2 * n, 2 * n);
    r.view_mut((0, 0), (n, n)).copy_from(&p);
    r.view_mut((n, n), (n, n)).copy_from(&p);
    r.view_mut((0, n), (n, n)).copy_from(&(-&a));
    r.view_mut((n, 0), (n, n)).copy_from(&(-a.transpose()));
    r /= hbar;
    let mut l2 = DMatrix::zeros(2 * n, 2 * n);
    l2.view_mut((0, 0), (n, n)).copy_from(&chol);
    l2.view_mut((n, n), (n, n)).copy_from(&chol);

    let k = l2.transpose() * r * &l2;
    let cvec = l2.transpose() * b;
    let eig = nalgebra::SymmetricEigen::new(k);
    let proj = eig.eigenvectors.transpose() * cvec;
    let mut log = Complex64::new(0.0, (s0 - h0) / hbar);
    for (&mu, &ci) in eig.eigenvalues.iter().zip(proj.iter()) {
        let d = Complex64::new(1.0, mu);
        log += -0.5 * d.ln() - 0.5 * ci * ci / d;
    }
    let s = nu * t;
    let mass = (-(dp * dp + dq * dq) / (2.0 * s)).exp() / (2.0 * std::f64::consts::PI * s);
    log.exp() * (2.0 * std::f64::consts::PI * hbar * (s / (2.0 * hbar)).exp() * mass)
}

/// Continuum finite-ν propagator for `H = ½(p² + q²)`, `ħ = 1`, both
/// endpoints at the origin: `1ᵀ exp(T G) 1` with `G = −ν diag(k) − iV` on
/// `levels` Landau levels, `V_kk = 2k+1`, `V_{k,k±1} = −max(k, k±1)`.
/// Integrated with RK4.
pub fn landau_oscillator(nu: f64, t: f64, levels: usize, steps: usize) -> Complex64 {
    let apply = |v: &[Complex64]| -> Vec<Complex64> {
        (0..levels)
            .map(|k| {
                let mut acc = v[k] * Complex64::new(-nu * k as f64, -(2.0 * k as f64 + 1.0));
                if k + 1 < levels {
                    acc += v[k + 1] * Complex64::new(0.0, (k + 1) as f64);
                }
                if k > 0 {
                    acc += v[k - 1] * Complex64::new(0.0, k as f64);
                }
                acc
            })
            .collect()
    };
    let h = t / steps as f64;
    let mut v = vec![Complex64::new(1.0, 0.0); levels];
    for _ in 0..steps {
        let k1 = apply(&v);
        let tmp: Vec<_> = v.iter().zip(&k1).map(|(a, b)| a + b * (0.5 * h)).collect();
        let k2 = apply(&tmp);
        let tmp: Vec<_> = v.iter().zip(&k2).map(|(a, b)| a + b * (0.5 * h)).collect();
        let k3 = apply(&tmp);
        let tmp: Vec<_> = v.iter().zip(&k3).map(|(a, b)| a + b * h).collect();
        let k4 = apply(&tmp);
        for i in 0..levels {
            v[i] += (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (h / 6.0);
        }
    }
    v.iter().sum()
}

/// `⟨p₂,q₂|p₁,q₁⟩` for the vacuum fiducial in the position representation,
/// `ψ_{p,q}(x) = e^{ip(x−q)/ħ} ψ₀(x − q)`, by midpoint quadrature.
pub fn position_overlap(l2: (f64, f64), l1: (f64, f64), hbar: f64) -> Complex64 {
    let psi = |(p, q): (f64, f64), x: f64| {
        let g = (std::f64::consts::PI * hbar).powf(-0.25) * (-(x - q) * (x - q) / (2.0 * hbar)).exp();
        Complex64::from_polar(g, p * (x - q) / hbar)
    };
    let (r, n) = (20.0, 40_000);
    let h = 2.0 * r / n as f64;
    (0..n)
        .map(|i| {
            let x = -r + (i as f64 + 0.5) * h;
            psi(l2, x).conj() * psi(l1, x)
        })
        .sum::<Complex64>()
        * h
}
