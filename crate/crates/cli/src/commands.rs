//! Subcommand implementations. Each returns a [`Report`]; nothing here prints.

use annuli::functionals::{
    classify_regime, energy_radial, extremal_report, extremal_value, mean_distortion_radial,
    sharp_lower_bound_from, Classification,
};
use annuli::maps::{nitsche_map, Power};
use annuli::metric::{check_regularity, gauss_curvature, monotonicity_of_h, s_rho_range, MetricSpec};
use annuli::minseq::{build_element, limit_study_from, DEFAULT_LADDER};
use annuli::nitsche::{critical_profile, nitsche_bound, solve_c};
use annuli::verify::mesh::{MeshOptions, MeshSpec, MeshState};
use annuli::verify::{
    mesh_energy_minimize, pointwise_check, radial_discrete_minimize, random_test_map,
    rotation_invariance_check, TestMap,
};
use annuli::{
    AnnulusGeometry, Complex64, Direction, Estimate, FunctionalReport, NitscheProfile,
    QuadratureConfig, RadialMap, RadialMetric, RadialProfile, Regime,
};
use serde::Deserialize;
use serde_json::{json, Value};
use std::sync::Arc;

use crate::args::{Check, CurvatureArgs, MapArgs, MapEvalArgs, MinseqArgs, ReportArgs, VerifyArgs};
use crate::config::{override_with, parse_triple, RunConfig};
use crate::output::{Report, Table};
use crate::CliError;

/// Competitor index used by `report` in the fat regime.
const DEFAULT_FAT_N: u64 = 1000;

fn metric_value(m: &RadialMetric) -> MetricSpec {
    m.spec()
}

fn geometry_fields(rep: &mut Report, m: &RadialMetric, geom: AnnulusGeometry) {
    rep.set("metric", metric_value(m))
        .set("tau", geom.tau)
        .set("sigma", geom.sigma)
        .set("r", geom.r);
}

fn classification_fields(rep: &mut Report, class: &Classification) {
    rep.set("regime", class.regime.as_str())
        .set("r_star", class.r_star)
        .set("near_boundary", class.near_boundary);
}

pub fn bound(cfg: &RunConfig) -> Result<Report, CliError> {
    let m = cfg.metric()?;
    let target = cfg.target()?;
    let q = cfg.quadrature()?;
    let b = nitsche_bound(&m, target, &q)?;
    let mut rep = Report::new("bound");
    rep.set("metric", metric_value(&m))
        .set("tau", target.tau)
        .set("sigma", target.sigma)
        .extend(b);
    if let Some(r) = cfg.r {
        let class = classify_regime(&m, AnnulusGeometry::new(target.tau, target.sigma, r)?, &q)?;
        rep.set("r", r).set("regime", class.regime.as_str());
    }
    Ok(rep)
}

fn profile_table(p: &NitscheProfile) -> Table {
    let mut t = Table::new(&["s", "phi", "q", "s_phi_prime", "K"]);
    for node in p.nodes() {
        let sp = node.s * p.phi_prime(node.s);
        let k = if sp.is_finite() { 0.5 * (sp + 1.0 / sp) } else { f64::INFINITY };
        t.push(vec![
            json!(node.s),
            json!(node.phi),
            json!(node.phi.exp()),
            finite_or_null(sp),
            finite_or_null(k),
        ]);
    }
    t
}

fn finite_or_null(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

fn profile_fields(rep: &mut Report, p: &NitscheProfile) {
    rep.set("c", p.c())
        .set("c_critical", p.c_critical())
        .set("excess", p.excess())
        .set("r_achieved", p.r_achieved())
        .set("critical", p.is_critical())
        .set("interp_err", p.interp_err())
        .set("quad_err", p.quad_err())
        .set("node_count", p.node_count());
}

pub fn solve_c_cmd(cfg: &RunConfig) -> Result<Report, CliError> {
    let m = cfg.metric()?;
    let geom = cfg.geometry()?;
    let q = cfg.quadrature()?;
    let p = solve_c(&m, geom, &q, &cfg.root())?;
    let class = classify_regime(&m, geom, &q)?;
    let mut rep = Report::new("solve-c");
    geometry_fields(&mut rep, &m, geom);
    classification_fields(&mut rep, &class);
    profile_fields(&mut rep, &p);
    rep.set("nodes", p.nodes());
    // the node list already carries the table contents
    rep.with_table(profile_table(&p)).table_outside_json();
    Ok(rep)
}

#[derive(Debug, Deserialize)]
struct ProfileFile {
    metric: MetricSpec,
    tau: f64,
    sigma: f64,
    r: f64,
    c: f64,
    #[serde(default)]
    critical: bool,
}

fn load_profile(path: &std::path::Path, q: &QuadratureConfig) -> Result<(RadialMetric, AnnulusGeometry, NitscheProfile), CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read profile {}: {e}", path.display())))?;
    let pf: ProfileFile = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("bad profile file {}: {e}", path.display())))?;
    let m = pf.metric.build()?;
    let geom = AnnulusGeometry::new(pf.tau, pf.sigma, pf.r)?;
    let p = if pf.critical {
        critical_profile(&m, geom.target(), q)?
    } else {
        NitscheProfile::from_c(&m, geom.target(), pf.c, q)?
    };
    Ok((m, geom, p))
}

pub fn map_eval(args: &MapEvalArgs) -> Result<Report, CliError> {
    let mut cfg = RunConfig::resolve(&args.common)?;
    override_with(&mut cfg.profile, args.profile.clone());
    override_with(&mut cfg.dump_profile, args.dump_profile.clone());
    if !args.at.is_empty() {
        cfg.at = Some(args.at.clone());
    }
    if args.inverse {
        cfg.inverse = Some(true);
    }
    let q = cfg.quadrature()?;
    let (m, geom, p) = match &cfg.profile {
        Some(path) => load_profile(path, &q)?,
        None => {
            let m = cfg.metric()?;
            let geom = cfg.geometry()?;
            let p = solve_c(&m, geom, &q, &cfg.root())?;
            (m, geom, p)
        }
    };
    let p = Arc::new(p);
    let mut rep = Report::new("map-eval");
    geometry_fields(&mut rep, &m, geom);
    profile_fields(&mut rep, &p);
    if let Some(path) = &cfg.dump_profile {
        let mut dump = Report::new("profile");
        let mut t = profile_table(&p);
        t.columns = vec!["s", "phi", "q", "sPhiPrime", "K"];
        dump.with_table(t);
        crate::output::emit(&dump.render(crate::args::Format::Csv)?, Some(path))?;
        rep.set("dump_profile", path.display().to_string());
    }
    match cfg.at.as_deref() {
        Some([s, t]) => {
            let inverse = cfg.inverse.unwrap_or(false);
            let dir = if inverse { Direction::Inverse } else { Direction::Forward };
            let map = nitsche_map(p, dir, 0.0);
            let z = Complex64::from_polar(*s, *t);
            let w = map.eval(z)?;
            rep.set("direction", if inverse { "inverse" } else { "forward" })
                .set("s", s)
                .set("t", t)
                .set("value", [w.re, w.im])
                .set("modulus", w.norm());
            let (lo, hi) = map.domain();
            if *s > lo && *s < hi {
                let d = map.derivatives(z)?;
                rep.set("f_z", [d.f_z.re, d.f_z.im])
                    .set("f_zbar", [d.f_zbar.re, d.f_zbar.im])
                    .set("jacobian", d.jacobian)
                    .set("distortion", d.distortion)
                    .set("degenerate", d.degenerate);
            }
        }
        Some(other) => {
            return Err(CliError::Usage(format!(
                "--at takes two numbers s,t, got {} values",
                other.len()
            )))
        }
        None if cfg.dump_profile.is_none() => {
            return Err(CliError::Usage("map-eval needs --at s,t or --dump-profile".into()))
        }
        None => {}
    }
    Ok(rep)
}

enum MapChoice {
    Nitsche,
    Critical,
    Power(f64),
}

fn parse_map(text: Option<&str>) -> Result<MapChoice, CliError> {
    match text.unwrap_or("nitsche") {
        "nitsche" => Ok(MapChoice::Nitsche),
        "critical" => Ok(MapChoice::Critical),
        other => match other.strip_prefix("power:").map(str::parse::<f64>) {
            Some(Ok(a)) if a > 0.0 && a.is_finite() => Ok(MapChoice::Power(a)),
            _ => Err(CliError::Usage(format!(
                "--map must be nitsche, critical or power:ALPHA with ALPHA > 0, got `{other}`"
            ))),
        },
    }
}

/// `distortion` (forward maps, `𝒦_ρ`) and `energy` (inverse maps, `E_ρ`).
pub fn functional(args: &MapArgs, direction: Direction) -> Result<Report, CliError> {
    let mut cfg = RunConfig::resolve(&args.common)?;
    override_with(&mut cfg.map, args.map.clone());
    let choice = parse_map(cfg.map.as_deref())?;
    let m = cfg.metric()?;
    let q = cfg.quadrature()?;
    let name = match direction {
        Direction::Forward => "distortion",
        Direction::Inverse => "energy",
    };
    let mut rep = Report::new(name);
    let (map, label): (RadialMap, String) = match choice {
        MapChoice::Nitsche => {
            let geom = cfg.geometry()?;
            geometry_fields(&mut rep, &m, geom);
            let p = Arc::new(solve_c(&m, geom, &q, &cfg.root())?);
            rep.set("c", p.c());
            (nitsche_map(p, direction, 0.0), "nitsche".into())
        }
        MapChoice::Critical => {
            let target = cfg.target()?;
            rep.set("metric", metric_value(&m))
                .set("tau", target.tau)
                .set("sigma", target.sigma);
            let p = Arc::new(critical_profile(&m, target, &q)?);
            rep.set("c", p.c()).set("r_prime", p.r_achieved());
            (nitsche_map(p, direction, 0.0), "critical".into())
        }
        MapChoice::Power(alpha) => {
            let geom = cfg.geometry()?;
            geometry_fields(&mut rep, &m, geom);
            let (profile, inner) = match direction {
                Direction::Forward => {
                    let p = Power::with_exponent(geom.tau, geom.sigma, 1.0, alpha)?;
                    (p, p.value(geom.tau)?)
                }
                Direction::Inverse => {
                    let p = Power::with_exponent(geom.r, 1.0, geom.sigma, alpha)?;
                    (p, p.value(geom.r)?)
                }
            };
            rep.set("image_inner_radius", inner);
            (RadialMap::new(direction, Arc::new(profile), 0.0), format!("power:{alpha}"))
        }
    };
    let est: Estimate = match direction {
        Direction::Forward => mean_distortion_radial(&map, &m, &q)?,
        Direction::Inverse => energy_radial(&map, &m, &q)?,
    };
    let key = match direction {
        Direction::Forward => "k_rho",
        Direction::Inverse => "e_rho",
    };
    rep.set("map", label).set(key, est.value).set("err", est.err);
    Ok(rep)
}

struct PointReport {
    class: Classification,
    c: Option<f64>,
    report: FunctionalReport,
    competitor: String,
}

fn report_point(m: &RadialMetric, geom: AnnulusGeometry, n: u64, cfg: &RunConfig) -> Result<PointReport, CliError> {
    let q = cfg.quadrature()?;
    let class = classify_regime(m, geom, &q)?;
    match class.regime {
        Regime::NitscheRange => {
            let (p, report) = extremal_report(m, geom, &q, &cfg.root())?;
            Ok(PointReport {
                class,
                c: Some(p.c()),
                report,
                competitor: "extremal".into(),
            })
        }
        Regime::Fat => {
            let crit = Arc::new(critical_profile(m, geom.target(), &q)?);
            let bound = sharp_lower_bound_from(&crit, geom.r, &q)?;
            let el = build_element(&crit, geom.r, n, &q, &cfg.root())?;
            Ok(PointReport {
                class,
                c: None,
                report: FunctionalReport::new(Regime::Fat, el.k_rho_n, None, bound.bound),
                competitor: format!("minimizing sequence n={n}"),
            })
        }
    }
}

pub fn report(args: &ReportArgs) -> Result<Report, CliError> {
    let mut cfg = RunConfig::resolve(&args.common)?;
    override_with(&mut cfg.sweep, args.sweep.clone());
    override_with(&mut cfg.n, args.n);
    let m = cfg.metric()?;
    let n = cfg.n.unwrap_or(DEFAULT_FAT_N);
    let mut rep = Report::new("report");
    match &cfg.sweep {
        None => {
            let geom = cfg.geometry()?;
            let pt = report_point(&m, geom, n, &cfg)?;
            geometry_fields(&mut rep, &m, geom);
            classification_fields(&mut rep, &pt.class);
            rep.extend(pt.report).set("c", pt.c).set("competitor", pt.competitor);
        }
        Some(spec) => {
            let body = spec
                .strip_prefix("r=")
                .ok_or_else(|| CliError::Usage(format!("sweep must look like r=lo:hi:step, got `{spec}`")))?;
            let (lo, hi, step) = parse_triple(body)?;
            if !(step > 0.0 && lo <= hi) {
                return Err(CliError::Usage(format!("bad sweep range `{spec}`")));
            }
            let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
            let target = cfg.target()?;
            rep.set("metric", metric_value(&m))
                .set("tau", target.tau)
                .set("sigma", target.sigma)
                .set("sweep", spec)
                .set("fat_competitor_n", n);
            let mut t = Table::new(&["r", "regime", "c", "K_rho", "lower_bound", "gap", "err"]);
            for i in 0..count {
                let r = lo + step * i as f64;
                let geom = AnnulusGeometry::new(target.tau, target.sigma, r)?;
                let pt = report_point(&m, geom, n, &cfg)?;
                t.push(vec![
                    json!(r),
                    json!(pt.class.regime.as_str()),
                    pt.c.map_or(Value::Null, |c| json!(c)),
                    json!(pt.report.k_rho),
                    json!(pt.report.lower_bound),
                    json!(pt.report.gap),
                    json!(pt.report.quadrature_err),
                ]);
            }
            rep.with_table(t);
        }
    }
    Ok(rep)
}

pub fn minseq(args: &MinseqArgs) -> Result<Report, CliError> {
    let mut cfg = RunConfig::resolve(&args.common)?;
    if !args.n_list.is_empty() {
        cfg.n_list = Some(args.n_list.clone());
    }
    let m = cfg.metric()?;
    let geom = cfg.geometry()?;
    let q = cfg.quadrature()?;
    let ns = cfg.n_list.clone().unwrap_or_else(|| DEFAULT_LADDER.to_vec());
    let crit = Arc::new(critical_profile(&m, geom.target(), &q)?);
    let study = limit_study_from(&crit, geom.r, &ns, &q, &cfg.root())?;
    let mut rep = Report::new("minseq");
    geometry_fields(&mut rep, &m, geom);
    rep.set("r_prime", study.bound.r_prime)
        .set("critical_value", study.bound.critical_value)
        .set("modulus_term", study.bound.modulus_term)
        .set("bound", study.bound.bound)
        .set("offset_limit", study.offset_limit)
        .set("half_sq_limit", study.half_sq_limit)
        .set("fitted_c", study.fitted_c)
        .set("monotone", study.monotone)
        .set("above_bound", study.above_bound);
    let mut t = Table::new(&["n", "s_n", "n_offset", "half_n_sq", "K_rho_n", "err", "gap"]);
    for row in &study.rows {
        t.push(vec![
            json!(row.n),
            json!(row.s_n),
            json!(row.n_offset),
            json!(row.half_n_sq),
            json!(row.k_rho_n),
            json!(row.k_err),
            json!(row.gap),
        ]);
    }
    rep.with_table(t);
    Ok(rep)
}

/// The profile whose `φ′` the pointwise check uses: `f^c` in range, `f#` otherwise.
fn reference_profile(m: &RadialMetric, geom: AnnulusGeometry, cfg: &RunConfig) -> Result<(Regime, Arc<NitscheProfile>), CliError> {
    let q = cfg.quadrature()?;
    let class = classify_regime(m, geom, &q)?;
    let p = match class.regime {
        Regime::NitscheRange => solve_c(m, geom, &q, &cfg.root())?,
        Regime::Fat => critical_profile(m, geom.target(), &q)?,
    };
    Ok((class.regime, Arc::new(p)))
}

pub fn verify(args: &VerifyArgs) -> Result<Report, CliError> {
    let mut cfg = RunConfig::resolve(&args.common)?;
    override_with(&mut cfg.seed, args.seed);
    override_with(&mut cfg.mesh, args.mesh.clone());
    override_with(&mut cfg.n_maps, args.n_maps);
    override_with(&mut cfg.n_nodes, args.n_nodes);
    override_with(&mut cfg.iters, args.iters);
    let m = cfg.metric()?;
    let geom = cfg.geometry()?;
    let q = cfg.quadrature()?;
    let mut rep = Report::new(match args.check {
        Check::Pointwise => "verify pointwise",
        Check::RadialMin => "verify radial-min",
        Check::MeshMin => "verify mesh-min",
        Check::Rotation => "verify rotation",
    });
    geometry_fields(&mut rep, &m, geom);
    match args.check {
        Check::Pointwise => {
            let seed = cfg.seed.unwrap_or(0);
            let n_maps = cfg.n_maps.unwrap_or(20);
            let (regime, p) = reference_profile(&m, geom, &cfg)?;
            let phi_prime = |s: f64| p.phi_prime(s);
            let mut rows = Vec::with_capacity(n_maps);
            let mut violations = 0;
            for k in 0..n_maps as u64 {
                let f = random_test_map(seed + k, geom.tau, geom.sigma, geom.r);
                let r = pointwise_check(&f, phi_prime, geom.tau, geom.sigma, 24, 24)?;
                violations += r.violations;
                rows.push(json!({
                    "seed": seed + k,
                    "points": r.points,
                    "excluded": r.excluded,
                    "violations": r.violations,
                    "max_violation": r.max_violation,
                    "max_discretization_err": r.max_discretization_err,
                    "orientation_warning": r.orientation_warning,
                }));
            }
            let own = TestMap::from_radial(&nitsche_map(p.clone(), Direction::Forward, 0.0), "extremal");
            let eq = pointwise_check(&own, phi_prime, geom.tau, geom.sigma, 24, 24)?;
            let equality_ok = eq.max_deviation <= 1e-8;
            rep.set("regime", regime.as_str())
                .set("seed", seed)
                .set("n_maps", n_maps)
                .set("maps", rows)
                .set("total_violations", violations)
                .set("own_profile_max_deviation", eq.max_deviation)
                .set("own_profile_equality_defect", eq.max_equality_defect)
                .set("verdict", violations == 0 && equality_ok);
        }
        Check::RadialMin => {
            let n = cfg.n_nodes.unwrap_or(200);
            let p = Arc::new(solve_c(&m, geom, &q, &cfg.root())?);
            let exact = extremal_value(&p, &q)?;
            let ladder: Vec<usize> = [n / 8, n / 4, n / 2, n].into_iter().filter(|&k| k >= 2).collect();
            let mut t = Table::new(&["n", "value", "rel_err", "slope_err"]);
            let mut errs = Vec::new();
            let mut never_below = true;
            for &k in &ladder {
                let rm = radial_discrete_minimize(&m, geom, k, &q, &cfg.root())?;
                let rel = (rm.value - exact.value) / exact.value;
                never_below &= rm.value >= exact.value - 1e-9;
                errs.push(rel);
                t.push(vec![json!(k), json!(rm.value), json!(rel), json!(rm.slope_error(&p))]);
            }
            let monotone = errs.windows(2).all(|w| w[1].abs() < w[0].abs());
            let order = match errs[..] {
                [.., a, b] if a > 0.0 && b > 0.0 => Some((a / b).log2()),
                _ => None,
            };
            let last = *errs.last().unwrap_or(&f64::NAN);
            rep.set("exact", exact)
                .set("n_nodes", n)
                .set("observed_order", order)
                .set("monotone", monotone)
                .set("never_below", never_below)
                .set("verdict", last.abs() <= 1e-4 && never_below && monotone);
            rep.with_table(t);
        }
        Check::MeshMin => {
            let spec: MeshSpec = cfg.mesh.as_deref().unwrap_or("64x128").parse()?;
            let opts = MeshOptions {
                max_iters: cfg.iters.unwrap_or(5000),
                ..MeshOptions::default()
            };
            let st = MeshState::initial(&m, geom, spec)?;
            let run = mesh_energy_minimize(&m, geom, st, &opts)?;
            let d = &run.diagnostics;
            let monotone = run.max_energy_increase() <= 1e-14;
            let (reference, verdict) = match d.regime {
                Regime::NitscheRange => {
                    let (_, fr) = extremal_report(&m, geom, &q, &cfg.root())?;
                    let ok = d.sup_profile_error.unwrap_or(f64::INFINITY) <= 2e-2
                        && d.positive_jacobian_fraction >= 0.99
                        && monotone;
                    (fr.k_rho, ok)
                }
                Regime::Fat => {
                    let crit = Arc::new(critical_profile(&m, geom.target(), &q)?);
                    let b = sharp_lower_bound_from(&crit, geom.r, &q)?;
                    (b.bound.value, run.state.energy >= b.bound.value - b.bound.err && monotone)
                }
            };
            rep.set("mesh", spec.to_string())
                .set("iterations", run.iterations)
                .set("converged", run.converged)
                .set("stagnated", run.stagnated)
                .set("energy", run.state.energy)
                .set("reference", reference)
                .set("energy_minus_reference", run.state.energy - reference)
                .set("monotone", monotone)
                .extend(&run.diagnostics)
                .set("regime", d.regime.as_str())
                .set("verdict", verdict);
            let mut t = Table::new(&["iteration", "energy"]);
            for (i, e) in run.history.iter().enumerate() {
                t.push(vec![json!(i), json!(e)]);
            }
            rep.with_table(t).table_outside_json();
            rep.set("history_len", run.history.len());
        }
        Check::Rotation => {
            let seed = cfg.seed.unwrap_or(0);
            let (regime, p) = reference_profile(&m, geom, &cfg)?;
            let f = rotation_invariance_check(&nitsche_map(p.clone(), Direction::Forward, 0.0), &m, seed)?;
            let h = rotation_invariance_check(&nitsche_map(p, Direction::Inverse, 0.0), &m, seed)?;
            rep.set("regime", regime.as_str())
                .set("seed", seed)
                .set("forward", &f)
                .set("inverse", &h)
                .set("verdict", f.invariant && h.invariant);
        }
    }
    Ok(rep)
}

pub fn curvature(args: &CurvatureArgs) -> Result<Report, CliError> {
    let mut cfg = RunConfig::resolve(&args.common)?;
    if !args.at.is_empty() {
        cfg.at = Some(args.at.clone());
    }
    override_with(&mut cfg.grid, args.grid.clone());
    let m = cfg.metric()?;
    let radii: Vec<f64> = match (&cfg.at, &cfg.grid) {
        (Some(at), _) => at.clone(),
        (None, Some(g)) => {
            let (lo, hi, n) = parse_triple(g)?;
            let n = n as usize;
            if n < 2 || !(lo < hi) {
                return Err(CliError::Usage(format!("bad grid `{g}`")));
            }
            (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
        }
        (None, None) => return Err(CliError::Usage("curvature needs --at or --grid".into())),
    };
    let mut t = Table::new(&["s", "K"]);
    for s in radii {
        t.push(vec![json!(s), json!(gauss_curvature(&m, s)?)]);
    }
    let mut rep = Report::new("curvature");
    rep.set("metric", metric_value(&m));
    rep.with_table(t);
    Ok(rep)
}

pub fn regularity(cfg: &RunConfig) -> Result<Report, CliError> {
    let m = cfg.metric()?;
    let target = cfg.target()?;
    let reg = check_regularity(&m, target.tau, target.sigma, 256)?;
    let mono = monotonicity_of_h(&m, target.tau, target.sigma)?;
    let (lo, hi) = s_rho_range(&m, target.tau, target.sigma, 256);
    let mut rep = Report::new("regularity");
    rep.set("metric", metric_value(&m))
        .set("tau", target.tau)
        .set("sigma", target.sigma)
        .extend(reg)
        .set("s_rho_min", lo)
        .set("s_rho_max", hi)
        .set("monotonicity", mono);
    Ok(rep)
}
