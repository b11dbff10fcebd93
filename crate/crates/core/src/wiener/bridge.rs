//! Pinned Brownian bridges in the `(p, q)` plane.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dynamics::PhasePath;
use crate::error::{invalid, Result};

pub const MIN_STEPS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BridgeSpec {
    /// Diffusion constant ν.
    pub nu: f64,
    /// Duration T.
    pub duration: f64,
    /// Number of steps L.
    pub steps: usize,
    /// `(p′, q′)`.
    pub start: (f64, f64),
    /// `(p″, q″)`.
    pub end: (f64, f64),
    pub seed: u64,
}

impl BridgeSpec {
    pub fn new(nu: f64, duration: f64, steps: usize, start: (f64, f64), end: (f64, f64), seed: u64) -> Result<Self> {
        let spec = Self {
            nu,
            duration,
            steps,
            start,
            end,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu.is_finite() && self.nu > 0.0) {
            return Err(invalid("nu", format!("must be positive, got {}", self.nu)));
        }
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(invalid("T", format!("must be positive, got {}", self.duration)));
        }
        if self.steps < MIN_STEPS {
            return Err(invalid("steps", format!("need at least {MIN_STEPS}, got {}", self.steps)));
        }
        let finite = [self.start.0, self.start.1, self.end.0, self.end.1]
            .iter()
            .all(|x| x.is_finite());
        if !finite {
            return Err(invalid("endpoints", "must be finite"));
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        self.duration / self.steps as f64
    }

    pub fn with_nu(mut self, nu: f64) -> Result<Self> {
        self.nu = nu;
        self.validate()?;
        Ok(self)
    }

    pub fn with_steps(mut self, steps: usize) -> Result<Self> {
        self.steps = steps;
        self.validate()?;
        Ok(self)
    }

    pub fn with_endpoints(mut self, start: (f64, f64), end: (f64, f64)) -> Result<Self> {
        self.start = start;
        self.end = end;
        self.validate()?;
        Ok(self)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Generator for sample `index`: the seed picks the key, the index picks
/// the ChaCha stream, so every sample is reproducible on its own.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Reusable buffers for bridge sampling.
#[derive(Debug, Clone)]
pub struct BridgeBuffers {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
}

impl BridgeBuffers {
    pub fn new(steps: usize) -> Self {
        Self {
            p: vec![0.0; steps + 1],
            q: vec![0.0; steps + 1],
        }
    }
}

/// Fills `buf` with bridge number `index` of `spec`.
///
/// Free Brownian motion `W` with variance `ν t` is built from `L`
/// increments, then pinned exactly: `x_l = x′ + (x″ − x′) t_l/T + W_l − (t_l/T) W_L`.
/// This has the law of the bridge at the grid times.
pub fn fill_bridge(spec: &BridgeSpec, index: u64, buf: &mut BridgeBuffers) {
    let l = spec.steps;
    debug_assert_eq!(buf.p.len(), l + 1);
    let mut rng = sample_rng(spec.seed, index);
    let sd = (spec.nu * spec.dt()).sqrt();
    let (mut wp, mut wq) = (0.0, 0.0);
    buf.p[0] = 0.0;
    buf.q[0] = 0.0;
    for k in 1..=l {
        let zp: f64 = rng.sample(StandardNormal);
        let zq: f64 = rng.sample(StandardNormal);
        wp += sd * zp;
        wq += sd * zq;
        buf.p[k] = wp;
        buf.q[k] = wq;
    }
    let (p0, q0) = spec.start;
    let (dp, dq) = (spec.end.0 - p0 - wp, spec.end.1 - q0 - wq);
    let inv = 1.0 / l as f64;
    for k in 0..l {
        let s = k as f64 * inv;
        buf.p[k] = p0 + buf.p[k] + s * dp;
        buf.q[k] = q0 + buf.q[k] + s * dq;
    }
    buf.p[l] = spec.end.0;
    buf.q[l] = spec.end.1;
}

/// Bridge number `index` as a [`PhasePath`].
pub fn sample_bridge(spec: &BridgeSpec, index: u64) -> Result<PhasePath> {
    spec.validate()?;
    let mut buf = BridgeBuffers::new(spec.steps);
    fill_bridge(spec, index, &mut buf);
    PhasePath::from_components(spec.duration, &buf.p, &buf.q)
}

/// The first bridge of `spec` (index 0).
pub fn sample_pinned_bridge(spec: &BridgeSpec) -> Result<PhasePath> {
    sample_bridge(spec, 0)
}
