use std::collections::HashMap;
use std::net::SocketAddr;
use std::time::Instant;

use anyhow::Result;
use serde_json::json;
use slalom_core::amplitude::{amplitude, QuadratureSettings, MIN_HORIZON_PERIODS};
use slalom_core::branchcut::{classify_topology, distance_field, CutFamily};
use slalom_core::classical::{linearized_soft_recollision, solve_soft_recollision, Family};
use slalom_core::contour::{gate_rules, navigate, validate_contour, ContourPath, DEFAULT_KINETIC_SLACK};
use slalom_core::orbit::saddle_residual;
use slalom_core::spectrum::{
    drop_loci, momentum_map, wavelength_scan, write_loci_csv, write_scan_csv, write_spectrum_csv, AxisSpec, ScanSettings,
    MAX_MOMENTUM_SCALED,
};
use slalom_core::tca::{search_ca_roots, RootSearch, TimeWindow};
use slalom_core::{FieldParams, Momentum, Orbit, SlalomError};
use slalom_service::{CaEntry, SessionConfig, MAX_GRID};

use crate::args::*;
use crate::manifest::{FailureSummary, FieldRecord, Output};

/// Bad user input, reported with exit code 1.
#[derive(Debug)]
pub struct Usage(pub String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(Usage(msg.into()).into())
}

/// Non-fatal diagnostics of a successful run.
#[derive(Debug, Default)]
pub struct Report {
    pub warnings: Vec<String>,
}

pub fn run(cmd: &Command) -> Result<Report> {
    match cmd {
        Command::Saddle(a) => saddle(a),
        Command::ClassicalSr(a) => classical_sr(a),
        Command::Tca(a) => tca(a),
        Command::Cuts(a) => cuts(a),
        Command::Contour(a) => contour(a),
        Command::Amp(a) => amp(a),
        Command::Spectrum(a) => spectrum(a),
        Command::ScanWavelength(a) => scan_wavelength(a),
        Command::Serve(a) => serve(a),
    }
}

fn orbit(fp: &FieldParams, p: &MomentumArgs) -> Result<Orbit> {
    let m = Momentum::new(p.px, p.pz);
    let bound = MAX_MOMENTUM_SCALED * fp.momentum_scale();
    if !(m.norm() < bound) {
        return usage(format!("|p| = {} must stay below {MAX_MOMENTUM_SCALED} F/ω = {bound:.4} a.u.", m.norm()));
    }
    Ok(Orbit::new(m, fp)?)
}

fn horizon(o: &Orbit, h: &HorizonArgs) -> Result<f64> {
    let periods = h.horizon_periods;
    if !(periods >= MIN_HORIZON_PERIODS && periods <= 100.0) {
        return usage(format!("--horizon-periods {periods} must lie in [{MIN_HORIZON_PERIODS}, 100]"));
    }
    Ok(o.saddle.t0() + periods * o.fp.period())
}

fn window(o: &Orbit, w: &WindowArgs, h: f64) -> Result<TimeWindow> {
    let omega = o.fp.omega();
    match (w.phase_min, w.phase_max, w.im_min, w.im_max) {
        (Some(a), Some(b), Some(c), Some(d)) => Ok(TimeWindow::from_phase(a, b, c / omega, d / omega, omega)?),
        _ => Ok(TimeWindow::default_for(o, h)),
    }
}

fn scan_settings(h: &HorizonArgs) -> Result<ScanSettings> {
    if !(h.horizon_periods >= MIN_HORIZON_PERIODS && h.horizon_periods <= 100.0) {
        return usage(format!("--horizon-periods {} must lie in [{MIN_HORIZON_PERIODS}, 100]", h.horizon_periods));
    }
    Ok(ScanSettings { horizon_periods: h.horizon_periods, ..ScanSettings::default() })
}

fn saddle(a: &PointArgs) -> Result<Report> {
    let start = Instant::now();
    let fp = a.field.resolve()?;
    let o = orbit(&fp, &a.p)?;
    let mut out = Output::new(a.out.out.as_deref(), "saddle")?;
    out.json(&json!({
        "field": FieldRecord::new(&fp),
        "p": o.p,
        "ts": o.ts(),
        "t_kappa": o.saddle.t_kappa,
        "t0": o.saddle.t0(),
        "tau": o.saddle.tau(),
        "z_exit": o.saddle.z_exit,
        "residual": saddle_residual(o.ts(), o.p, &fp).norm(),
    }))?;
    out.finish(Some(&fp), json!({}), FailureSummary::default(), start.elapsed().as_secs_f64())?;
    Ok(Report::default())
}

fn classical_sr(a: &ClassicalArgs) -> Result<Report> {
    let start = Instant::now();
    let fp = a.field.resolve()?;
    let mut rows = Vec::new();
    for &n in &a.n.0 {
        rows.push((n, solve_soft_recollision(n, &fp)?));
    }
    let by_n: HashMap<u32, f64> = rows.iter().map(|(n, s)| (*n, s.pz_sr)).collect();
    let scale = fp.momentum_scale();
    let omega = fp.omega();
    let mut out = Output::new(a.out.out.as_deref(), "classical-sr")?;
    out.csv("classical-sr.csv", true, |w| {
        writeln!(w, "# gamma: {:.6}", fp.gamma())?;
        writeln!(w, "n,family,pz_sr,pz_sr_over_F_omega,omega_tr_over_pi,pz_linearized,deviation_from_linearized,ratio_to_n_minus_2")?;
        for (n, s) in &rows {
            let (lin, _) = linearized_soft_recollision(*n, &fp);
            let family = match s.family {
                Family::Odd => "odd",
                Family::Even => "even",
            };
            let ratio = n.checked_sub(2).and_then(|m| by_n.get(&m)).map_or("nan".to_string(), |prev| format!("{:.8}", s.pz_sr / prev));
            writeln!(
                w,
                "{n},{family},{:.10},{:.10},{:.8},{:.10},{:.6e},{ratio}",
                s.pz_sr,
                s.pz_sr / scale,
                omega * s.tr / std::f64::consts::PI,
                lin,
                s.pz_sr / lin - 1.0
            )?;
        }
        Ok(())
    })?;
    out.finish(Some(&fp), json!({ "orders": a.n.0 }), FailureSummary::default(), start.elapsed().as_secs_f64())?;
    Ok(Report::default())
}

fn tca(a: &TcaArgs) -> Result<Report> {
    let start = Instant::now();
    let fp = a.point.field.resolve()?;
    let o = orbit(&fp, &a.point.p)?;
    let h = horizon(&o, &a.horizon)?;
    let win = window(&o, &a.window, h)?;
    let search = search_ca_roots(&o, &win, &RootSearch::default());
    let roots: Vec<CaEntry> = search
        .roots
        .iter()
        .map(|&point| CaEntry { rules: gate_rules(&point, &o, DEFAULT_KINETIC_SLACK), point })
        .collect();
    let mut report = Report::default();
    if !search.complete {
        report.warnings.push(format!(
            "root search incomplete: {} found, argument principle expects {:?}",
            roots.len(),
            search.expected
        ));
    }
    let mut out = Output::new(a.point.out.out.as_deref(), "tca")?;
    out.json(&json!({
        "p": o.p,
        "horizon": h,
        "window": win,
        "expected": search.expected,
        "complete": search.complete,
        "roots": roots,
    }))?;
    let omega = fp.omega();
    out.csv("tca.csv", false, |w| {
        writeln!(w, "re,im,phase_over_pi,re_v2,residual,saddle,conjugate,kinetic,inward_turn,first_return")?;
        for r in &roots {
            let t = r.point.t;
            writeln!(
                w,
                "{:.12e},{:.12e},{:.10},{:.10e},{:.3e},{},{},{},{},{}",
                t.re,
                t.im,
                omega * t.re / std::f64::consts::PI,
                r.point.re_v2,
                r.point.residual,
                r.point.saddle,
                r.point.conjugate,
                r.rules.kinetic,
                r.rules.inward_turn,
                r.rules.first_return
            )?;
        }
        Ok(())
    })?;
    let settings = json!({ "horizon_periods": a.horizon.horizon_periods, "root_search": RootSearch::default() });
    out.finish(Some(&fp), settings, FailureSummary::default(), start.elapsed().as_secs_f64())?;
    Ok(report)
}

fn cuts(a: &CutsArgs) -> Result<Report> {
    let start = Instant::now();
    let fp = a.point.field.resolve()?;
    let o = orbit(&fp, &a.point.p)?;
    if a.nx > MAX_GRID.0 || a.ny > MAX_GRID.1 {
        return usage(format!("grid {}x{} exceeds {}x{}", a.nx, a.ny, MAX_GRID.0, MAX_GRID.1));
    }
    let h = horizon(&o, &a.horizon)?;
    let win = window(&o, &a.window, h)?;
    let field = distance_field(&o, &win, a.nx, a.ny)?;
    let topo = classify_topology(&o, &win, true)?;
    let mut report = Report::default();
    if !topo.consistent {
        report.warnings.push(format!(
            "topology criteria disagree: velocity {:?}, cuts {:?}",
            topo.by_velocity, topo.by_cuts
        ));
    }
    report.warnings.extend(topo.trace_errors.iter().map(|e| format!("cut tracing: {e}")));
    let mut out = Output::new(a.point.out.out.as_deref(), "cuts")?;
    out.json(&json!({ "p": o.p, "window": win, "nx": a.nx, "ny": a.ny, "topology": topo }))?;
    out.csv("cuts_field.csv", false, |w| {
        writeln!(w, "re,im,sqrt_re,sqrt_im,flag")?;
        for (j, im) in field.im_axis.iter().enumerate() {
            for (i, re) in field.re_axis.iter().enumerate() {
                let k = j * field.nx() + i;
                writeln!(w, "{re:.10e},{im:.10e},{:.10e},{:.10e},{}", field.sqrt_re[k], field.sqrt_im[k], u8::from(field.flags[k]))?;
            }
        }
        Ok(())
    })?;
    out.csv("cuts_curves.csv", false, |w| {
        writeln!(w, "cut,family,crosses_real_axis,re,im")?;
        for (c, cut) in topo.cuts.iter().enumerate() {
            let family = match cut.branch_point.family {
                CutFamily::Plus => "plus",
                CutFamily::Minus => "minus",
            };
            for t in &cut.points {
                writeln!(w, "{c},{family},{},{:.10e},{:.10e}", cut.crosses_real_axis, t.re, t.im)?;
            }
        }
        Ok(())
    })?;
    let settings = json!({ "horizon_periods": a.horizon.horizon_periods, "nx": a.nx, "ny": a.ny });
    out.finish(Some(&fp), settings, FailureSummary::default(), start.elapsed().as_secs_f64())?;
    Ok(report)
}

fn contour(a: &ContourArgs) -> Result<Report> {
    let start = Instant::now();
    let fp = a.point.field.resolve()?;
    let o = orbit(&fp, &a.point.p)?;
    let h = horizon(&o, &a.horizon)?;
    if a.samples < 2 {
        return usage("--samples must be at least 2");
    }
    let path = match a.navigator {
        NavigatorArg::Auto => navigate(&o, h, DEFAULT_KINETIC_SLACK)?,
        NavigatorArg::Standard => ContourPath::standard(&o, h),
    };
    let nodes = path.coulomb_nodes(&o);
    let rep = validate_contour(&nodes, &o, a.samples)?;
    let mut report = Report::default();
    if !rep.continuous {
        report.warnings.push(format!("contour crosses a branch cut on segment(s) {:?}", rep.crossings.iter().map(|c| c.0).collect::<Vec<_>>()));
    }
    if rep.near_singularity {
        report.warnings.push(format!("contour passes {:.3e} a.u. from the core", rep.nearest_singularity_distance));
    }
    let mut out = Output::new(a.point.out.out.as_deref(), "contour")?;
    out.json(&json!({ "p": o.p, "horizon": h, "contour": path, "coulomb_nodes": nodes, "report": rep }))?;
    let settings = json!({ "horizon_periods": a.horizon.horizon_periods, "navigator": format!("{:?}", a.navigator).to_lowercase(), "samples": a.samples });
    out.finish(Some(&fp), settings, FailureSummary::default(), start.elapsed().as_secs_f64())?;
    Ok(report)
}

fn amp(a: &AmpArgs) -> Result<Report> {
    let start = Instant::now();
    let fp = a.point.field.resolve()?;
    let o = orbit(&fp, &a.point.p)?;
    let h = horizon(&o, &a.horizon)?;
    let q = QuadratureSettings::default();
    let b = amplitude(o.p, &fp, Some(h), &a.navigator.navigator(), &q)?;
    let mut report = Report::default();
    if b.report.near_singularity {
        report.warnings.push(format!("contour passes {:.3e} a.u. from the core", b.report.nearest_singularity_distance));
    }
    let mut out = Output::new(a.point.out.out.as_deref(), "amp")?;
    out.json(&b)?;
    let settings = json!({
        "horizon_periods": a.horizon.horizon_periods,
        "navigator": format!("{:?}", a.navigator).to_lowercase(),
        "quadrature": q,
        "kinetic_slack": DEFAULT_KINETIC_SLACK,
    });
    out.finish(Some(&fp), settings, FailureSummary::default(), start.elapsed().as_secs_f64())?;
    Ok(report)
}

fn masked_warning(masked: usize, nodes: usize) -> Vec<String> {
    if masked == 0 {
        Vec::new()
    } else {
        vec![format!("{masked} of {nodes} nodes masked (see the manifest failure summary)")]
    }
}

fn spectrum(a: &SpectrumArgs) -> Result<Report> {
    let start = Instant::now();
    let fp = a.field.resolve()?;
    let settings = scan_settings(&a.horizon)?;
    let px = AxisSpec { min: a.px_min, max: a.px_max, n: a.px_n };
    let pz = AxisSpec { min: a.pz_min, max: a.pz_max, n: a.pz_n };
    let grid = momentum_map(&fp, &px, &pz, &settings)?;
    let mut out = Output::new(Some(&a.out), "spectrum")?;
    out.csv("spectrum.csv", false, |w| Ok(write_spectrum_csv(&grid, w)?))?;
    let summary = FailureSummary::new(grid.meta.nodes, &grid.failures);
    let recorded = json!({ "px_axis": px, "pz_axis": pz, "scan": settings });
    out.finish(Some(&fp), recorded, summary, start.elapsed().as_secs_f64())?;
    Ok(Report { warnings: masked_warning(grid.meta.masked, grid.meta.nodes) })
}

fn scan_wavelength(a: &ScanArgs) -> Result<Report> {
    let start = Instant::now();
    let settings = scan_settings(&a.horizon)?;
    let ip = a.ip_ev.unwrap_or_else(|| a.target.ip_ev());
    let lambda = AxisSpec { min: a.lambda_min, max: a.lambda_max, n: a.lambda_n };
    let pz = AxisSpec { min: a.pz_min, max: a.pz_max, n: a.pz_n };
    let scan = wavelength_scan(ip, a.intensity, &lambda, &pz, a.px_multiplier, &a.orders.0, &settings)?;
    let mut out = Output::new(Some(&a.out), "scan-wavelength")?;
    out.csv("scan.csv", false, |w| Ok(write_scan_csv(&scan, w)?))?;
    out.csv("loci.csv", false, |w| Ok(write_loci_csv(&scan, w)?))?;
    out.csv("drops.csv", false, |w| {
        writeln!(w, "# min_drop_decades: {}", a.min_drop)?;
        writeln!(w, "lambda_um,gamma,pz")?;
        for (i, l) in scan.lambda_um.iter().enumerate() {
            for d in drop_loci(scan.row(i), &scan.pz_axis, a.min_drop) {
                writeln!(w, "{l:.6},{:.6},{d:.10}", scan.gamma[i])?;
            }
        }
        Ok(())
    })?;
    let nodes = scan.log10_yield.len();
    let summary = FailureSummary::new(nodes, &scan.failures);
    let recorded = json!({
        "ip_ev": ip,
        "intensity_w_cm2": a.intensity,
        "lambda_axis_um": lambda,
        "pz_axis": pz,
        "px_multiplier_over_kappa": a.px_multiplier,
        "px_au": scan.px,
        "gamma": scan.gamma,
        "orders": a.orders.0,
        "min_drop_decades": a.min_drop,
        "scan": settings,
    });
    out.finish(None, recorded, summary, start.elapsed().as_secs_f64())?;
    Ok(Report { warnings: masked_warning(scan.failures.len(), nodes) })
}

fn serve(a: &ServeArgs) -> Result<Report> {
    let field = a.field.resolve()?;
    if a.max_nx > MAX_GRID.0 || a.max_ny > MAX_GRID.1 || a.max_nx < 2 || a.max_ny < 2 {
        return usage(format!("resolution caps must lie within 2x2..{}x{}", MAX_GRID.0, MAX_GRID.1));
    }
    if !(a.horizon.horizon_periods >= MIN_HORIZON_PERIODS) {
        return usage(format!("--horizon-periods must be at least {MIN_HORIZON_PERIODS}"));
    }
    let addr: SocketAddr = match format!("{}:{}", a.host, a.port).parse() {
        Ok(addr) => addr,
        Err(e) => return usage(format!("bad listen address {}:{}: {e}", a.host, a.port)),
    };
    let config = SessionConfig {
        field,
        horizon_periods: a.horizon.horizon_periods,
        max_grid: (a.max_nx, a.max_ny),
        timeout_ms: a.timeout_ms,
    };
    eprintln!("slalom service listening on http://{addr} (γ = {:.4})", field.gamma());
    slalom_service::run(config, addr)?;
    Ok(Report::default())
}

/// Exit code for a failed run: 1 for invalid input, 2 for numerical or I/O failure.
pub fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<Usage>().is_some() {
        return 1;
    }
    match e.downcast_ref::<SlalomError>() {
        Some(SlalomError::InvalidArgument(_) | SlalomError::InvalidField(_)) => 1,
        _ => 2,
    }
}
