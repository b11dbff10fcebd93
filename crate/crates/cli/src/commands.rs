//! Subcommand execution. All inputs are parsed and validated before any
//! computation starts.

use std::fs::File;
use std::io::BufWriter;

use metriq::coherent::{CompositionPhase, WeylOrdering, DEFAULT_LABEL_RADIUS};
use metriq::dynamics::{bvp_shoot, exact_propagator, hamilton_flow};
use metriq::fock::{hermitian_eig, max_abs};
use metriq::quantize::{
    antinormal_quantize, antinormal_quantize_quadrature, fluctuation_metric_at, metric_transform,
};
use metriq::wiener::{
    covariance_check, estimate_propagator_with, nu_sweep, sample_bridge, sample_rng, write_dump,
    EstimateOptions, Rule,
};
use metriq::{
    BridgeSpec, CoherentFamily, CoherentLabel, CoordMap, FiducialSpec, HilbertDim, MomentumScan,
    PolySymbol, QuadratureGrid, StateVector,
};
use num_complex::Complex64;
use rand::Rng;

use crate::args::*;
use crate::error::CliError;
use crate::report::{Cell, Plot, Report};

type Out = Result<Report, CliError>;

pub fn execute(cmd: &Command) -> Out {
    match cmd {
        Command::CheckUnity(a) => check_unity(a),
        Command::ComposeCheck(a) => compose_check(a),
        Command::QuantizeCompare(a) => quantize_compare(a),
        Command::Spectrum(a) => spectrum(a),
        Command::Metric(a) => metric(a),
        Command::Flow(a) => flow(a),
        Command::BvpDemo(a) => bvp_demo(a),
        Command::PropagateExact(a) => propagate_exact(a),
        Command::PropagateMc(a) => propagate_mc(a),
        Command::NuSweep(a) => sweep(a),
        Command::TransformCheck(a) => transform_check(a),
        Command::Replay(_) => Err(CliError::invalid("replay cannot be nested")),
    }
}

fn hilbert(s: &Space) -> Result<HilbertDim, CliError> {
    Ok(HilbertDim::new(s.dim, s.hbar)?)
}

fn symbol(text: &str) -> Result<PolySymbol, CliError> {
    Ok(text.parse::<PolySymbol>()?)
}

fn numbers(text: &str, what: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| CliError::invalid(format!("{what}: cannot parse `{t}` as a number")))
        })
        .collect()
}

pub fn label(text: &str) -> Result<CoherentLabel, CliError> {
    match numbers(text, "label")?.as_slice() {
        &[p, q] => {
            let l = CoherentLabel::new(p, q);
            l.check_radius(DEFAULT_LABEL_RADIUS)?;
            Ok(l)
        }
        _ => Err(CliError::invalid(format!("label `{text}` must be `p,q`"))),
    }
}

fn fiducial(text: &str, dim: usize) -> Result<FiducialSpec, CliError> {
    if text == "vacuum" {
        return Ok(FiducialSpec::Vacuum);
    }
    if let Some(n) = text.strip_prefix("fock:") {
        let n: usize = n
            .parse()
            .map_err(|_| CliError::invalid(format!("fiducial `{text}`: bad level")))?;
        return Ok(FiducialSpec::Custom(StateVector::basis(dim, n)?));
    }
    if let Some(list) = text.strip_prefix("amps:") {
        let amps = numbers(list, "fiducial")?;
        if amps.len() > dim {
            return Err(CliError::invalid(format!("fiducial has {} amplitudes for dim {dim}", amps.len())));
        }
        let mut v = vec![Complex64::new(0.0, 0.0); dim];
        for (z, &a) in v.iter_mut().zip(&amps) {
            *z = Complex64::new(a, 0.0);
        }
        return Ok(FiducialSpec::Custom(StateVector::from_slice(&v)?.normalize()?));
    }
    Err(CliError::invalid(format!("fiducial `{text}`: expected vacuum, fock:N or amps:...")))
}

pub fn coord_map(text: &str) -> Result<CoordMap, CliError> {
    if text == "identity" {
        return Ok(CoordMap::identity());
    }
    let (kind, rest) = text
        .split_once(':')
        .ok_or_else(|| CliError::invalid(format!("map `{text}`: expected kind:params")))?;
    let v = numbers(rest, "map")?;
    let map = match (kind, v.as_slice()) {
        ("rotation", &[theta]) => CoordMap::rotation(theta)?,
        ("scaling", &[lambda]) => CoordMap::scaling(lambda)?,
        ("matrix", &[a, b, c, d]) => CoordMap::new([[a, b], [c, d]])?,
        _ => return Err(CliError::invalid(format!("map `{text}`: unknown kind or wrong arity"))),
    };
    Ok(map)
}

fn positive(x: f64, what: &str) -> Result<(), CliError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(CliError::invalid(format!("{what} must be positive and finite (got {x})")))
    }
}

fn check_unity(a: &CheckUnity) -> Out {
    let space = hilbert(&a.space)?;
    let fid = fiducial(&a.fiducial, space.dim())?;
    positive(a.radius, "radius")?;
    let mut grid = QuadratureGrid::new(a.radius, a.nodes);
    if let Some(k) = a.levels {
        grid = grid.with_levels(k);
    }
    let rep = metriq::coherent::resolution_of_unity_check(&fid, space, &grid)?;
    let mut out = Report::new(&["dim", "hbar", "radius", "nodes", "levels", "working_dim", "deviation"]);
    out.row(vec![
        space.dim().into(),
        space.hbar().into(),
        a.radius.into(),
        a.nodes.into(),
        rep.matrix.dim().into(),
        rep.working_dim.into(),
        rep.deviation.into(),
    ]);
    out.note("diagonal_drift", rep.diagonal_drift());
    out.note("warnings", &rep.warnings);
    Ok(out)
}

fn compose_check(a: &ComposeCheck) -> Out {
    let space = hilbert(&a.space)?;
    positive(a.max_label, "max-label")?;
    if a.pairs == 0 {
        return Err(CliError::invalid("pairs must be at least 1"));
    }
    let ordering = match a.ordering {
        OrderingArg::Ordered => WeylOrdering::Ordered,
        OrderingArg::Symmetric => WeylOrdering::Symmetric,
    };
    let phase = match a.phase {
        OrderingArg::Ordered => CompositionPhase::Ordered,
        OrderingArg::Symmetric => CompositionPhase::Symmetric,
    };
    let family = CoherentFamily::new(space)?;
    let mut rng = sample_rng(a.seed, 0);
    let m = a.max_label;
    let mut out = Report::new(&["pair", "p1", "q1", "p2", "q2", "deviation"]);
    let mut worst = 0.0f64;
    for k in 0..a.pairs {
        let mut draw = || rng.random_range(-m..=m);
        let (l1, l2) = (CoherentLabel::new(draw(), draw()), CoherentLabel::new(draw(), draw()));
        let dev = family.compose_deviation(l1, l2, ordering, phase)?;
        worst = worst.max(dev);
        out.row(vec![k.into(), l1.p.into(), l1.q.into(), l2.p.into(), l2.q.into(), dev.into()]);
    }
    out.note("max_deviation", worst);
    out.seed = Some(a.seed);
    Ok(out)
}

fn quantize_compare(a: &QuantizeCompare) -> Out {
    let space = hilbert(&a.space)?;
    let sym = symbol(&a.symbol)?;
    positive(a.radius, "radius")?;
    let levels = a.levels.unwrap_or((space.dim() / 4).max(1));
    if levels > space.dim() {
        return Err(CliError::invalid(format!("levels {levels} exceed dim {}", space.dim())));
    }
    let closed = antinormal_quantize(&sym, space)?.compress(levels)?;
    let quad = antinormal_quantize_quadrature(&sym, space, &QuadratureGrid::new(a.radius, a.nodes).with_levels(levels))?;
    let dev = max_abs(&(closed.entries() - quad.matrix.entries()));
    let mut out = Report::new(&["level", "closed", "quadrature", "abs_diff"]);
    let (c, q) = (closed.diagonal_real(), quad.matrix.diagonal_real());
    for n in 0..levels {
        out.row(vec![n.into(), c[n].into(), q[n].into(), (c[n] - q[n]).abs().into()]);
    }
    out.note("max_deviation", dev);
    out.note("working_dim", quad.working_dim);
    out.note("warnings", &quad.warnings);
    Ok(out)
}

fn spectrum(a: &Spectrum) -> Out {
    let space = hilbert(&a.space)?;
    let sym = symbol(&a.symbol)?;
    if a.count == 0 || a.count > space.dim() {
        return Err(CliError::invalid(format!("count must lie in 1..={}", space.dim())));
    }
    let eig = hermitian_eig(&antinormal_quantize(&sym, space)?)?;
    let mut out = Report::new(&["n", "eigenvalue", "over_hbar"]);
    for (n, &e) in eig.values.iter().take(a.count).enumerate() {
        out.row(vec![n.into(), e.into(), (e / space.hbar()).into()]);
    }
    out.plot = Some(Plot {
        x: "n",
        y: vec!["eigenvalue"],
        title: format!("spectrum of {sym}"),
    });
    Ok(out)
}

fn metric(a: &Metric) -> Out {
    let space = hilbert(&a.space)?;
    let psi = match fiducial(&a.fiducial, space.dim())? {
        FiducialSpec::Vacuum => StateVector::basis(space.dim(), 0)?,
        FiducialSpec::Custom(v) => v,
    };
    let at = label(&a.at)?;
    let map = coord_map(&a.map)?;
    let g = fluctuation_metric_at(&psi, space, at)?;
    let bar = metric_transform(&g, &map)?;
    let mut out = Report::new(&["frame", "A", "B", "C", "det"]);
    for (frame, m) in [("original", g), ("mapped", bar)] {
        out.row(vec![frame.into(), m.a.into(), m.b.into(), m.c.into(), m.determinant().into()]);
    }
    let floor = space.hbar() * space.hbar() / 4.0;
    out.note("uncertainty_ratio", g.determinant() / floor);
    Ok(out)
}

fn flow(a: &Flow) -> Out {
    let sym = symbol(&a.symbol)?;
    let start = label(&a.from)?;
    let path = hamilton_flow(&sym, (start.p, start.q), a.duration, a.steps)?;
    let mut out = Report::new(&["t", "p", "q", "energy"]);
    for (l, &(p, q)) in path.points().iter().enumerate() {
        out.row(vec![path.time(l).into(), p.into(), q.into(), sym.eval(p, q).into()]);
    }
    let e0 = sym.eval(start.p, start.q);
    let drift = path.points().iter().map(|&(p, q)| (sym.eval(p, q) - e0).abs()).fold(0.0, f64::max);
    out.note("energy_drift", drift);
    out.plot = Some(Plot {
        x: "t",
        y: vec!["p", "q"],
        title: format!("flow of {sym}"),
    });
    Ok(out)
}

fn bvp_demo(a: &BvpDemo) -> Out {
    let sym = symbol(&a.symbol)?;
    let rep = bvp_shoot(&sym, a.q0, a.q_t, a.duration, &MomentumScan::new(a.pmin, a.pmax, a.count))?;
    let mut out = Report::new(&["solution", "p0", "q0"]);
    for (k, &(p, q)) in rep.solutions.iter().enumerate() {
        out.row(vec![k.into(), p.into(), q.into()]);
    }
    out.note("classification", rep.classification);
    out.note("degenerate", rep.degenerate);
    out.note("scan_density", rep.scan_density);
    out.note("diverged", &rep.diverged);
    Ok(out)
}

fn propagate_exact(a: &PropagateExact) -> Out {
    let space = hilbert(&a.space)?;
    let sym = symbol(&a.symbol)?;
    let (l1, l2) = (label(&a.from)?, label(&a.to)?);
    let rep = exact_propagator(&sym, l1, l2, a.duration, space)?;
    let mut out = Report::new(&["re", "im", "abs", "dim", "delta", "converged"]);
    out.row(vec![
        rep.value.re.into(),
        rep.value.im.into(),
        rep.value.norm().into(),
        rep.dim.into(),
        rep.delta.into(),
        rep.converged.into(),
    ]);
    Ok(out)
}

struct McSetup {
    sym: PolySymbol,
    from: CoherentLabel,
    to: CoherentLabel,
    opts: EstimateOptions,
}

fn mc_setup(m: &Mc) -> Result<McSetup, CliError> {
    positive(m.hbar, "hbar")?;
    positive(m.guard, "guard")?;
    let opts = EstimateOptions {
        rule: match m.rule {
            RuleArg::Stratonovich => Rule::Stratonovich,
            RuleArg::Ito => Rule::Ito,
        },
        guard: m.guard,
        override_guard: m.override_guard,
    };
    Ok(McSetup {
        sym: symbol(&m.symbol)?,
        from: label(&m.from)?,
        to: label(&m.to)?,
        opts,
    })
}

fn bridge_spec(m: &Mc, s: &McSetup, nu: f64) -> Result<BridgeSpec, CliError> {
    let spec = BridgeSpec::new(nu, m.duration, m.steps, (s.from.p, s.from.q), (s.to.p, s.to.q), m.seed)?;
    metriq::wiener::check_feasibility(&spec, m.hbar, &s.opts)?;
    Ok(spec)
}

fn estimate_cells(nu: f64, e: &metriq::EstimatorResult) -> Vec<Cell> {
    vec![
        nu.into(),
        e.mean.re.into(),
        e.mean.im.into(),
        e.stderr_re.into(),
        e.stderr_im.into(),
        e.n_samples.into(),
        e.bound().into(),
    ]
}

const ESTIMATE_COLUMNS: [&str; 7] = ["nu", "re", "im", "stderr_re", "stderr_im", "samples", "bound"];

fn propagate_mc(a: &PropagateMc) -> Out {
    let m = &a.mc;
    let s = mc_setup(m)?;
    let spec = bridge_spec(m, &s, a.nu)?;
    let exact_space = a.compare_exact.map(|d| HilbertDim::new(d, m.hbar)).transpose()?;
    let dump = a.dump.as_ref().map(|p| File::create(p).map_err(CliError::io)).transpose()?;

    let est = estimate_propagator_with(&spec, &s.sym, m.hbar, m.samples, &s.opts)?;
    let mut cols = ESTIMATE_COLUMNS.to_vec();
    let mut cells = estimate_cells(a.nu, &est);
    let mut out;
    if let Some(space) = exact_space {
        let exact = exact_propagator(&s.sym, s.from, s.to, m.duration, space)?;
        let (zr, zi) = est.z_scores(exact.value);
        cols.extend(["exact_re", "exact_im", "z_re", "z_im"]);
        cells.extend([exact.value.re.into(), exact.value.im.into(), zr.into(), zi.into()]);
        out = Report::new(&cols);
        out.note("exact_converged", exact.converged);
    } else {
        out = Report::new(&cols);
    }
    out.row(cells);
    out.note("prefactor", est.prefactor);
    out.note("pinned_mass", est.raw_mass);
    if let Some(f) = dump {
        write_dump(BufWriter::new(f), &sample_bridge(&spec, 0)?, a.nu)?;
    }
    out.seed = Some(m.seed);
    Ok(out)
}

fn sweep(a: &NuSweep) -> Out {
    let m = &a.mc;
    let s = mc_setup(m)?;
    let nus = numbers(&a.nus, "nus")?;
    if nus.is_empty() {
        return Err(CliError::invalid("nus is empty"));
    }
    for &nu in &nus {
        bridge_spec(m, &s, nu)?;
    }
    let oracle = match a.oracle.as_deref() {
        None => None,
        Some(text) => Some(match text.strip_prefix("exact:") {
            Some(d) => {
                let dim: usize = d
                    .parse()
                    .map_err(|_| CliError::invalid(format!("oracle `{text}`: bad dim")))?;
                let space = HilbertDim::new(dim, m.hbar)?;
                exact_propagator(&s.sym, s.from, s.to, m.duration, space)?.value
            }
            None => match numbers(text, "oracle")?.as_slice() {
                &[re, im] => Complex64::new(re, im),
                _ => return Err(CliError::invalid(format!("oracle `{text}` must be exact:DIM or re,im"))),
            },
        }),
    };
    let template = bridge_spec(m, &s, nus[0])?;
    let table = nu_sweep(&template, &s.sym, m.hbar, &nus, m.samples, oracle, &s.opts)?;
    let mut cols = ESTIMATE_COLUMNS.to_vec();
    cols.push("error");
    let mut out = Report::new(&cols);
    for row in &table.rows {
        let mut cells = estimate_cells(row.param, &row.result);
        cells.push(row.error.map_or(Cell::Text(String::new()), Cell::Num));
        out.row(cells);
    }
    if let Some(o) = oracle {
        out.note("oracle", [o.re, o.im]);
        out.note("error_non_increasing", table.error_non_increasing(3.0));
    }
    out.seed = Some(m.seed);
    out.plot = Some(Plot {
        x: "nu",
        y: vec!["re", "im"],
        title: "estimate against nu".to_string(),
    });
    Ok(out)
}

fn transform_check(a: &TransformCheck) -> Out {
    let m = &a.mc;
    let s = mc_setup(m)?;
    let map = coord_map(&a.map)?;
    let spec = bridge_spec(m, &s, a.nu)?;
    let rep = covariance_check(&spec, &s.sym, &map, m.hbar, m.samples, &s.opts)?;
    let mut out = Report::new(&["frame", "re", "im", "stderr_re", "stderr_im"]);
    for (frame, e) in [("original", rep.original), ("transformed", rep.transformed), ("difference", rep.difference)] {
        out.row(vec![frame.into(), e.mean.re.into(), e.mean.im.into(), e.stderr_re.into(), e.stderr_im.into()]);
    }
    out.note("bitwise_identical", rep.bitwise_identical);
    out.note("agrees_3sigma", rep.agrees(3.0, 1e-12 * rep.original.bound()));
    out.seed = Some(m.seed);
    Ok(out)
}
