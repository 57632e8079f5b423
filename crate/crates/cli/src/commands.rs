//! One function per experiment.

use anyhow::Context;
use revheat::degeneracy::{
    fit_cubic_degeneracy, fit_segment_law, hinged_quartic_order, ProbeDirection,
};
use revheat::fit::log_space;
use revheat::geodesics::{
    distance, integrate_geodesic, phi_expansion, phi_quadrature, CutStructure, Point,
};
use revheat::ode::OdeOptions;
use revheat::profile::Profile;
use revheat::spectral::{
    assemble_with, fit_exponent_seeded, kernel_curve, s2_exact_poisson, s2_exact_theta,
    SpectralOptions, MAX_CANCELLATION_DIGITS, MAX_RELATIVE_TAIL,
};
use revheat::verify::{verify_all, VerifyConfig, ALONG_WINDOW, TRANSVERSE_WINDOW};
use serde_json::{json, Value};

use crate::config::{parse_grid, parse_point, parse_window, Command, ExperimentConfig, InvalidConfig};
use crate::output::{Plot, Report, Series, Table};

/// A finished run: its artifacts and the number of failed acceptance checks.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: Report,
    pub failed_checks: usize,
}

impl From<Report> for Outcome {
    fn from(report: Report) -> Self {
        Self {
            report,
            failed_checks: 0,
        }
    }
}

/// Executes the experiment named by `cfg`.
pub fn run(cfg: &ExperimentConfig) -> anyhow::Result<Outcome> {
    cfg.validate()?;
    if cfg.svg.is_some() && matches!(cfg.command, Command::Profile | Command::VerifyAll) {
        return Err(InvalidConfig(format!("{} draws no plot", cfg.command)).into());
    }
    let p = cfg.build_profile()?;
    match cfg.command {
        Command::Profile => profile(cfg, &p).map(Into::into),
        Command::Phi => phi(cfg, &p).map(Into::into),
        Command::Geodesic => geodesic(cfg, &p).map(Into::into),
        Command::Cutlocus => cutlocus(cfg, &p).map(Into::into),
        Command::Degeneracy => degeneracy(cfg, &p).map(Into::into),
        Command::Heat => heat(cfg, &p).map(Into::into),
        Command::S2Exact => s2_exact(cfg).map(Into::into),
        Command::VerifyAll => verify(cfg, p),
    }
}

/// Shortest round-trip form, in exponent notation away from unit scale.
fn num(v: f64) -> String {
    let m = v.abs();
    if m == 0.0 || !m.is_finite() || (1e-4..1e15).contains(&m) {
        v.to_string()
    } else {
        format!("{v:e}")
    }
}

fn to_value<T: serde::Serialize>(v: &T) -> anyhow::Result<Value> {
    Ok(serde_json::to_value(v)?)
}

fn profile(cfg: &ExperimentConfig, p: &Profile) -> anyhow::Result<Report> {
    let assumptions = p.check_assumptions(1024)?;
    Ok(Report {
        json: Some(json!({
            "spec": to_value(&cfg.profile_spec()?)?,
            "a": p.a(),
            "b": p.b(),
            "alpha": p.alpha(),
            "beta": p.beta(),
            "theta_cut": p.theta_cut(),
            "singularity_defect": p.singularity_defect(),
            "singular": p.is_singular(),
            "area": p.area(),
            "assumptions": to_value(&assumptions)?,
        })),
        ..Report::default()
    })
}

fn phi(cfg: &ExperimentConfig, p: &Profile) -> anyhow::Result<Report> {
    let order: usize = cfg.parse("order")?.unwrap_or(2);
    let series = phi_expansion(p, order)?;
    let mut doc = json!({
        "variable": "b - nu",
        "constant": series.coeff(0),
        "linear": series.coeff(1),
        "coefficients": series.coeffs(),
    });
    if order >= 2 {
        doc["quadratic"] = json!(series.coeff(2));
    }
    if let Some(nu) = cfg.parse::<f64>("nu")? {
        let quad = phi_quadrature(p, nu)?;
        let approx = series.eval(p.b() - nu);
        doc["nu"] = json!(nu);
        doc["phi"] = json!(quad);
        doc["phi_expansion"] = json!(approx);
        doc["difference"] = json!(quad - approx);
    }
    Ok(Report {
        json: Some(doc),
        ..Report::default()
    })
}

fn geodesic(cfg: &ExperimentConfig, p: &Profile) -> anyhow::Result<Report> {
    let eta: f64 = cfg.require("eta")?;
    let t_end = cfg
        .parse::<f64>("t_end")?
        .unwrap_or(1.5 * p.b() * p.theta_cut());
    let arc = integrate_geodesic(p, eta, t_end, &OdeOptions::default())?;
    let mut table = Table::new(&["t", "r", "theta"]);
    for s in &arc.samples {
        table.push([num(s.t), num(s.r), num(s.theta)]);
    }
    let plot = Plot {
        title: format!("geodesic with launch angle {eta}"),
        x_label: "theta".into(),
        y_label: "r".into(),
        log_x: false,
        log_y: false,
        series: vec![Series {
            name: "r(theta)".into(),
            points: arc.samples.iter().map(|s| (s.theta, s.r)).collect(),
        }],
    };
    Ok(Report {
        table: Some(table),
        plot: Some(plot),
        ..Report::default()
    })
}

fn cutlocus(cfg: &ExperimentConfig, p: &Profile) -> anyhow::Result<Report> {
    let b = p.b();
    let (lo, hi, n) = match cfg.get("nu_grid") {
        Some(text) => parse_grid(text)?,
        None => (0.5 * b, 0.999 * b, 25),
    };
    if hi >= b {
        return Err(InvalidConfig(format!("nu_grid must stay below b = {b}")).into());
    }
    let order: usize = cfg.parse("order")?.unwrap_or(2);
    let series = phi_expansion(p, order)?;
    let cut = CutStructure::new(p)?;
    let mut table = Table::new(&["nu", "phi_quadrature", "phi_expansion", "difference"]);
    let mut quad_pts = Vec::with_capacity(n);
    let mut series_pts = Vec::with_capacity(n);
    for i in 0..n {
        let nu = lo + (hi - lo) * i as f64 / (n - 1) as f64;
        let quad = cut.phi_of_nu(nu)?;
        let approx = series.eval(b - nu);
        table.push([num(nu), num(quad), num(approx), num(quad - approx)]);
        quad_pts.push((nu, quad));
        series_pts.push((nu, approx));
    }
    let plot = Plot {
        title: format!("half-period, theta_cut = {:.6}", cut.theta_cut),
        x_label: "nu".into(),
        y_label: "phi".into(),
        log_x: false,
        log_y: false,
        series: vec![
            Series {
                name: "quadrature".into(),
                points: quad_pts,
            },
            Series {
                name: format!("expansion to order {order}"),
                points: series_pts,
            },
        ],
    };
    Ok(Report {
        table: Some(table),
        plot: Some(plot),
        ..Report::default()
    })
}

fn degeneracy(cfg: &ExperimentConfig, p: &Profile) -> anyhow::Result<Report> {
    let what = cfg.get("what").unwrap_or("cubic");
    let samples: Option<usize> = cfg.parse("samples")?;
    let window = cfg.get("window").map(parse_window).transpose()?;
    let (doc, points, x_name, y_name) = match what {
        "cubic" => {
            let law = fit_cubic_degeneracy(p, window.unwrap_or((1e-3, 1e-1)), samples)?;
            (to_value(&law)?, law.samples, "eta", "a_minus_r")
        }
        "segment" => {
            let law = fit_segment_law(p, window.unwrap_or((1e-3, 1e-1)), samples)?;
            (to_value(&law)?, law.samples, "eta", "distance")
        }
        "hinged" => {
            let direction = match cfg.get("direction").unwrap_or("along") {
                "along" => ProbeDirection::AlongGeodesic,
                "transverse" => ProbeDirection::Transverse,
                other => {
                    return Err(InvalidConfig(format!(
                        "direction = {other:?}; expected along or transverse"
                    ))
                    .into())
                }
            };
            let default_window = match direction {
                ProbeDirection::AlongGeodesic => ALONG_WINDOW,
                ProbeDirection::Transverse => TRANSVERSE_WINDOW,
            };
            let theta = cfg.parse::<f64>("theta")?.unwrap_or(p.theta_cut());
            let x = Point::on_equator(p, 0.0);
            let y = Point::on_equator(p, theta);
            let law = hinged_quartic_order(
                p,
                x,
                y,
                direction,
                window.unwrap_or(default_window),
                samples,
            )?;
            (to_value(&law)?, law.samples, "s", "h_minus_h0")
        }
        other => {
            return Err(InvalidConfig(format!(
                "what = {other:?}; expected cubic, segment or hinged"
            ))
            .into())
        }
    };
    let mut doc = doc;
    if let Some(obj) = doc.as_object_mut() {
        obj.remove("samples");
        obj.insert("what".into(), json!(what));
    }
    let mut table = Table::new(&[x_name, y_name]);
    for &(x, y) in &points {
        table.push([num(x), num(y)]);
    }
    let plot = Plot {
        title: format!("{what} law"),
        x_label: x_name.into(),
        y_label: format!("|{y_name}|"),
        log_x: true,
        log_y: true,
        series: vec![Series {
            name: y_name.into(),
            points: points.iter().map(|&(x, y)| (x, y.abs())).collect(),
        }],
    };
    Ok(Report {
        json: Some(doc),
        table: Some(table),
        plot: Some(plot),
        ..Report::default()
    })
}

fn log_grid(cfg: &ExperimentConfig, default: (f64, f64, usize)) -> anyhow::Result<Vec<f64>> {
    let (lo, hi, n) = cfg.get("t_grid").map(parse_grid).transpose()?.unwrap_or(default);
    Ok(log_space(lo, hi, n))
}

fn spectral_options(cfg: &ExperimentConfig) -> anyhow::Result<SpectralOptions> {
    let d = SpectralOptions::default();
    Ok(SpectralOptions {
        n_max: cfg.parse("n_max")?.unwrap_or(d.n_max),
        k_max: cfg.parse("k_max")?.unwrap_or(d.k_max),
        grid_size: cfg.parse("grid")?.unwrap_or(d.grid_size),
    })
}

const WINDOW_NOTE: &str = "The spectral sum loses about d^2/(4 t ln 10) digits to cancellation. \
Samples losing more than 10 digits, or with a truncation bound above 1e-3 of p, are marked \
unreliable and left out of the fit. At d = pi this confines the fit to t >= 0.1, so the exponent \
is read on a fixed window with an O(t) nuisance term rather than as t -> 0.";

fn heat(cfg: &ExperimentConfig, p: &Profile) -> anyhow::Result<Report> {
    let x = parse_point(cfg.get("x").unwrap_or("a,0"), p.a())?;
    let y = parse_point(
        cfg.get("y")
            .ok_or_else(|| InvalidConfig("heat needs y".into()))?,
        p.a(),
    )?;
    let (x, y) = (Point::new(x.0, x.1), Point::new(y.0, y.1));
    let ts = log_grid(cfg, (0.1, 0.4, 31))?;
    let opts = spectral_options(cfg)?;
    let d = distance(p, x, y).context("distance from x to y (x must lie on the equator)")?;
    let basis = assemble_with(p, &opts)?;
    let curve = kernel_curve(&basis, x, y, d.length, &ts)?;
    let (fit, fit_error) = match fit_exponent_seeded(&curve, cfg.seed) {
        Ok(fit) => (to_value(&fit)?, Value::Null),
        Err(e) => (Value::Null, json!(e.to_string())),
    };
    let mut table = Table::new(&["t", "p", "tail_bound", "cancellation_digits", "reliable"]);
    for s in &curve.samples {
        table.push([
            num(s.t),
            num(s.p),
            num(s.truncation_bound),
            num(s.cancellation_digits),
            s.reliable.to_string(),
        ]);
    }
    let doc = json!({
        "x": to_value(&x)?,
        "y": to_value(&y)?,
        "d": d.length,
        "multiplicity": d.multiplicity,
        "spectral": to_value(&opts)?,
        "seed": cfg.seed,
        "n_samples": curve.samples.len(),
        "n_reliable": curve.reliable().count(),
        "max_cancellation_digits": MAX_CANCELLATION_DIGITS,
        "max_relative_tail": MAX_RELATIVE_TAIL,
        "model": "log p + d^2/(4t) = log C - exponent log t + nuisance t",
        "fit": fit,
        "fit_error": fit_error,
        "window_note": WINDOW_NOTE,
    });
    let plot = Plot {
        title: format!("heat kernel, d = {:.6}", d.length),
        x_label: "t".into(),
        y_label: "p_t(x, y)".into(),
        log_x: true,
        log_y: true,
        series: vec![
            Series {
                name: "all samples".into(),
                points: curve.samples.iter().map(|s| (s.t, s.p)).collect(),
            },
            Series {
                name: "reliable".into(),
                points: curve.reliable().map(|s| (s.t, s.p)).collect(),
            },
        ],
    };
    Ok(Report {
        json: Some(doc),
        table: Some(table),
        plot: Some(plot),
        ..Report::default()
    })
}

fn s2_exact(cfg: &ExperimentConfig) -> anyhow::Result<Report> {
    let ts = log_grid(cfg, (0.05, 2.0, 17))?;
    let mut table = Table::new(&[
        "t",
        "poisson",
        "theta",
        "relative_gap",
        "poisson_flagged",
        "poisson_bits",
    ]);
    let mut poisson_pts = Vec::with_capacity(ts.len());
    let mut theta_pts = Vec::with_capacity(ts.len());
    for &t in &ts {
        let a = s2_exact_poisson(t)?;
        let b = s2_exact_theta(t)?;
        table.push([
            num(t),
            num(a.value),
            num(b),
            num((a.value - b) / b),
            a.flagged.to_string(),
            a.precision_bits.to_string(),
        ]);
        poisson_pts.push((t, a.value));
        theta_pts.push((t, b));
    }
    let plot = Plot {
        title: "antipodal heat kernel on the unit sphere".into(),
        x_label: "t".into(),
        y_label: "p_t".into(),
        log_x: true,
        log_y: true,
        series: vec![
            Series {
                name: "spectral sum".into(),
                points: poisson_pts,
            },
            Series {
                name: "image sum".into(),
                points: theta_pts,
            },
        ],
    };
    Ok(Report {
        table: Some(table),
        plot: Some(plot),
        ..Report::default()
    })
}

fn verify(cfg: &ExperimentConfig, p: Profile) -> anyhow::Result<Outcome> {
    let vc = VerifyConfig {
        profile: p,
        spectral: spectral_options(cfg)?,
        seed: cfg.seed,
    };
    let checks = verify_all(&vc)?;
    let failed = checks.iter().filter(|c| !c.passed).count();
    let mut text: String = checks.iter().map(|c| c.row() + "\n").collect();
    text.push_str(&format!(
        "acceptance: {} passed, {failed} failed\n",
        checks.len() - failed
    ));
    Ok(Outcome {
        report: Report {
            json: Some(json!({
                "profile": cfg.profile,
                "spectral": to_value(&vc.spectral)?,
                "seed": cfg.seed,
                "passed": checks.len() - failed,
                "failed": failed,
                "checks": to_value(&checks)?,
            })),
            text: Some(text),
            ..Report::default()
        },
        failed_checks: failed,
    })
}
