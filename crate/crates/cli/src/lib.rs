//! `csf`: command-line access to the soliton builders, verifiers and the polygonal flow.
//!
//! Exit codes: `0` success, `2` bad input, `3` numerical failure.

mod svg;

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use csf_core::io::{read_curve_csv, read_points_csv, write_closure_csv, write_curve_csv, write_points_csv};
use csf_core::ode::Tolerances;
use csf_core::{
    arc_length_defect, closure_scan, evolve, expander_residual, fit_plane, homothety_rescaling,
    integrate_soliton, reconstruct_expander, reconstruct_shrinker, rescaled_flow_area, shrinker_residual,
    solve_alpha_expander, solve_alpha_shrinker, solve_alpha_shrinker_period, spherical_residuals,
    unit_speed_polar_residual, verify_planarity, ClosureSettings, Curve, Error, FlowSettings, FlowStatus,
    Orientation, PlanarSettings, PolarCurve, PolyCurve, SolitonKind, SolitonSpec, Vector,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Environment variable overriding the default relative tolerance.
pub const TOL_ENV: &str = "CSF_TOL";

#[derive(Parser, Debug)]
#[command(name = "csf", version, about = "Self-similar solutions of the curve shortening flow")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Planar self-shrinker from the alpha ODE.
    Shrink2d(Shrink2d),
    /// Planar self-expander from the alpha ODE.
    Expand2d(Expand2d),
    /// Plot alpha(t).
    AlphaPlot(AlphaPlot),
    /// Soliton integrated directly in R^3.
    Shrink3d(Shrink3d),
    /// Planarity report for a curve CSV, as JSON on stdout.
    Planarity(Planarity),
    /// Rotation ratios and closure over a range of alpha(0).
    ClosureScan(ClosureScanArgs),
    /// Polygonal curve shortening flow.
    Evolve(EvolveArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum KindArg {
    Shrinker,
    Expander,
}

impl From<KindArg> for SolitonKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Shrinker => SolitonKind::Shrinker,
            KindArg::Expander => SolitonKind::Expander,
        }
    }
}

#[derive(Args, Debug)]
struct Output {
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct Shrink2d {
    #[arg(long, allow_hyphen_values = true)]
    alpha0: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    dalpha0: f64,
    /// Number of alpha periods (for the circle, multiples of 2 pi).
    #[arg(long, default_value_t = 1)]
    periods: u32,
    /// Explicit parameter span, overriding --periods.
    #[arg(long)]
    span: Option<f64>,
    #[arg(long, default_value = "+1", allow_hyphen_values = true, value_parser = parse_orientation)]
    orientation: Orientation,
    #[arg(long, default_value_t = 2001)]
    samples: usize,
    #[command(flatten)]
    out: Output,
}

#[derive(Args, Debug)]
struct Expand2d {
    #[arg(long, allow_hyphen_values = true)]
    alpha0: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    dalpha0: f64,
    /// Half-width of the symmetric parameter interval.
    #[arg(long, default_value_t = 3.0)]
    span: f64,
    #[arg(long, default_value = "+1", allow_hyphen_values = true, value_parser = parse_orientation)]
    orientation: Orientation,
    #[arg(long, default_value_t = 2001)]
    samples: usize,
    #[command(flatten)]
    out: Output,
}

#[derive(Args, Debug)]
struct AlphaPlot {
    #[arg(long, value_enum)]
    kind: KindArg,
    #[arg(long, allow_hyphen_values = true)]
    alpha0: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    dalpha0: f64,
    #[arg(long, allow_hyphen_values = true)]
    span: f64,
    #[arg(long, default_value_t = 2001)]
    samples: usize,
    #[command(flatten)]
    out: Output,
}

#[derive(Args, Debug)]
struct Shrink3d {
    #[arg(long, value_parser = parse_vector, allow_hyphen_values = true)]
    p0: Vector,
    #[arg(long, value_parser = parse_vector, allow_hyphen_values = true)]
    v0: Vector,
    #[arg(long, allow_hyphen_values = true)]
    span: f64,
    #[arg(long, value_enum, default_value = "shrinker")]
    kind: KindArg,
    /// Rescale v0 to unit length instead of rejecting it.
    #[arg(long)]
    normalize_v0: bool,
    #[arg(long, default_value_t = 2001)]
    samples: usize,
    #[command(flatten)]
    out: Output,
}

#[derive(Args, Debug)]
struct Planarity {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum)]
    kind: KindArg,
}

#[derive(Args, Debug)]
struct ClosureScanArgs {
    #[arg(long)]
    from: f64,
    #[arg(long)]
    to: f64,
    #[arg(long)]
    grid: usize,
    #[arg(long)]
    qmax: u32,
    #[arg(long)]
    csv: PathBuf,
}

#[derive(Args, Debug)]
struct EvolveArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    tend: f64,
    /// Resample the input to this many vertices first.
    #[arg(long)]
    vertices: Option<usize>,
    #[arg(long, default_value_t = 1e-3)]
    dt_max: f64,
    /// Number of evenly spaced interior snapshots.
    #[arg(long, default_value_t = 10)]
    snapshots: usize,
    /// Treat the input as an open curve with fixed endpoints.
    #[arg(long)]
    open: bool,
    /// Also report areas rescaled by 1 / sqrt(1 - 2t).
    #[arg(long)]
    rescale_homothety: bool,
    #[arg(long)]
    outdir: PathBuf,
}

fn parse_orientation(s: &str) -> Result<Orientation, String> {
    match s {
        "+1" | "1" => Ok(Orientation::Positive),
        "-1" => Ok(Orientation::Negative),
        other => Err(format!("expected +1 or -1, got `{other}`")),
    }
}

fn parse_vector(s: &str) -> Result<Vector, String> {
    let parts = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| format!("`{p}` is not a number")))
        .collect::<Result<Vec<f64>, String>>()?;
    Vector::new(parts).map_err(|e| e.to_string())
}

/// Tolerances with the relative tolerance taken from `CSF_TOL` when set.
fn tolerances() -> anyhow::Result<Tolerances<f64>> {
    let mut tol = Tolerances::<f64>::default();
    if let Ok(raw) = std::env::var(TOL_ENV) {
        let rel: f64 = raw
            .trim()
            .parse()
            .map_err(|_| Error::InvalidInput(format!("{TOL_ENV}=`{raw}` is not a number")))?;
        if !(rel > 0.0 && rel <= 1e-2) {
            return Err(Error::InvalidInput(format!("{TOL_ENV} must lie in (0, 1e-2], got {rel}")).into());
        }
        tol.rel_tol = rel;
        tol.abs_tol = (rel * 1e-2).max(1e-15);
    }
    Ok(tol)
}

fn planar_settings() -> anyhow::Result<PlanarSettings<f64>> {
    Ok(PlanarSettings::with_tolerances(tolerances()?))
}

/// Runs the CLI on `argv` (including the program name) and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &anyhow::Error) -> i32 {
    match e.chain().find_map(|c| c.downcast_ref::<Error>()) {
        Some(core) if core.is_numerical() => EXIT_NUMERICAL,
        _ => EXIT_INPUT,
    }
}

fn dispatch(cmd: Command) -> anyhow::Result<()> {
    match cmd {
        Command::Shrink2d(a) => shrink2d(a),
        Command::Expand2d(a) => expand2d(a),
        Command::AlphaPlot(a) => alpha_plot(a),
        Command::Shrink3d(a) => shrink3d(a),
        Command::Planarity(a) => planarity(a),
        Command::ClosureScan(a) => closure_scan_cmd(a),
        Command::Evolve(a) => evolve_cmd(a),
    }
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn write_svg(path: &Path, curves: &[svg::Polyline], aspect_equal: bool) -> anyhow::Result<()> {
    let mut f = create(path)?;
    f.write_all(svg::render(curves, aspect_equal).as_bytes())?;
    f.flush()?;
    Ok(())
}

fn write_curve(out: &Output, curve: &Curve) -> anyhow::Result<()> {
    if let Some(p) = &out.csv {
        let mut f = create(p)?;
        write_curve_csv(&mut f, curve)?;
        f.flush()?;
    }
    if let Some(p) = &out.svg {
        let line: svg::Polyline = curve.positions().iter().map(|v| (v[0], v[1])).collect();
        write_svg(p, &[line], true)?;
    }
    Ok(())
}

fn print_json<S: Serialize>(value: &S) -> anyhow::Result<()> {
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    serde_json::to_writer_pretty(&mut lock, value)?;
    writeln!(lock)?;
    Ok(())
}

#[derive(Serialize)]
struct PlanarSummary {
    kind: SolitonKind,
    alpha0: f64,
    span: (f64, f64),
    period: Option<f64>,
    samples: usize,
    residual_max: f64,
    residual_rms: f64,
    arc_length_defect: f64,
    polar_unit_speed_residual: f64,
}

fn summarize(kind: SolitonKind, curve: &PolarCurve<f64>) -> anyhow::Result<PlanarSummary> {
    let res = match kind {
        SolitonKind::Shrinker => shrinker_residual(&curve.samples),
        SolitonKind::Expander => expander_residual(&curve.samples),
    };
    Ok(PlanarSummary {
        kind,
        alpha0: curve.alpha.alpha0,
        span: curve.alpha.span(),
        period: curve.alpha.period,
        samples: curve.samples.len(),
        residual_max: res.max,
        residual_rms: res.rms,
        arc_length_defect: arc_length_defect(&curve.samples),
        polar_unit_speed_residual: unit_speed_polar_residual(curve)?,
    })
}

fn shrink2d(a: Shrink2d) -> anyhow::Result<()> {
    let settings = planar_settings()?;
    if a.periods == 0 {
        bail!(Error::InvalidInput("--periods must be at least 1".into()));
    }
    let span = match a.span {
        Some(s) => s,
        None if a.alpha0 == 1.0 && a.dalpha0 == 0.0 => std::f64::consts::TAU * f64::from(a.periods),
        None => {
            let one = solve_alpha_shrinker_period(a.alpha0, a.dalpha0, &settings)?;
            one.period.expect("period reported") * f64::from(a.periods)
        }
    };
    let alpha = solve_alpha_shrinker(a.alpha0, a.dalpha0, span, &settings)?;
    let curve = reconstruct_shrinker(&alpha, 0.0, a.orientation, a.samples)?;
    write_curve(&a.out, &curve.samples)?;
    print_json(&summarize(SolitonKind::Shrinker, &curve)?)
}

fn expand2d(a: Expand2d) -> anyhow::Result<()> {
    let settings = planar_settings()?;
    let alpha = solve_alpha_expander(a.alpha0, a.dalpha0, a.span, &settings)?;
    let curve = reconstruct_expander(&alpha, 0.0, a.orientation, a.samples)?;
    write_curve(&a.out, &curve.samples)?;
    print_json(&summarize(SolitonKind::Expander, &curve)?)
}

fn alpha_plot(a: AlphaPlot) -> anyhow::Result<()> {
    let settings = planar_settings()?;
    if a.span.is_nan() || a.span <= 0.0 {
        bail!(Error::InvalidInput("--span must be positive".into()));
    }
    if a.samples < 2 {
        bail!(Error::InvalidInput("--samples must be at least 2".into()));
    }
    let alpha = match a.kind {
        KindArg::Shrinker => solve_alpha_shrinker(a.alpha0, a.dalpha0, a.span, &settings)?,
        KindArg::Expander => csf_core::solve_alpha_expander_one_sided(a.alpha0, a.dalpha0, a.span, &settings)?,
    };
    let n = a.samples;
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let t = if i + 1 == n { a.span } else { a.span * i as f64 / (n - 1) as f64 };
        let (x, dx) = alpha.state(t)?;
        rows.push((t, x, dx));
    }
    if let Some(p) = &a.out.csv {
        let mut f = create(p)?;
        writeln!(f, "t,alpha,dalpha")?;
        for (t, x, dx) in &rows {
            use csf_core::io::fmt_f64;
            writeln!(f, "{},{},{}", fmt_f64(*t), fmt_f64(*x), fmt_f64(*dx))?;
        }
        f.flush()?;
    }
    if let Some(p) = &a.out.svg {
        let line: svg::Polyline = rows.iter().map(|&(t, x, _)| (t, x)).collect();
        write_svg(p, &[line], false)?;
    }
    #[derive(Serialize)]
    struct Summary {
        kind: SolitonKind,
        alpha0: f64,
        span: f64,
        min_alpha: f64,
        max_alpha: f64,
        period: Option<f64>,
    }
    print_json(&Summary {
        kind: a.kind.into(),
        alpha0: a.alpha0,
        span: a.span,
        min_alpha: alpha.min_alpha(),
        max_alpha: alpha.max_alpha(),
        period: alpha.period,
    })
}

fn cross(a: &Vector, b: &Vector) -> Vector {
    Vector::new(vec![
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ])
    .expect("finite cross product")
}

fn shrink3d(a: Shrink3d) -> anyhow::Result<()> {
    if a.p0.dim() != 3 || a.v0.dim() != 3 {
        bail!(Error::InvalidInput("--p0 and --v0 need three components".into()));
    }
    let v0 = if a.normalize_v0 {
        a.v0
            .normalized()
            .ok_or_else(|| Error::InvalidInput("--v0 must be non-zero".into()))?
    } else {
        a.v0
    };
    let kind: SolitonKind = a.kind.into();
    let spec = SolitonSpec::new(kind, a.p0, v0, a.span)?
        .with_samples(a.samples)
        .with_tolerances(tolerances()?);
    let curve = integrate_soliton(&spec)?;
    let plane = fit_plane(&curve)?;
    if let Some(p) = &a.out.csv {
        let mut f = create(p)?;
        write_curve_csv(&mut f, &curve)?;
        f.flush()?;
    }
    if let Some(p) = &a.out.svg {
        // Principal axes: the two in-plane directions and the normal.
        let (e1, e2) = (&plane.basis1, &plane.basis2);
        let n = cross(e1, e2);
        let rel = |v: &Vector| v - &plane.basepoint;
        let face: svg::Polyline = curve.positions().iter().map(|v| (rel(v).dot(e1), rel(v).dot(e2))).collect();
        let edge: svg::Polyline = curve.positions().iter().map(|v| (rel(v).dot(e1), rel(v).dot(&n))).collect();
        let shift = {
            let (lo, hi) = face.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), p| (l.min(p.0), h.max(p.0)));
            1.2 * (hi - lo).max(1e-9)
        };
        let edge: svg::Polyline = edge.into_iter().map(|(x, y)| (x + shift, y)).collect();
        write_svg(p, &[face, edge], true)?;
    }
    #[derive(Serialize)]
    struct Summary {
        kind: SolitonKind,
        samples: usize,
        plane_max_residual: f64,
        plane_rms_residual: f64,
        unit_speed_defect: f64,
        spherical: Option<csf_core::SphericalResiduals<f64>>,
    }
    let spherical = match kind {
        SolitonKind::Shrinker => Some(spherical_residuals(&curve)?),
        SolitonKind::Expander => None,
    };
    print_json(&Summary {
        kind,
        samples: curve.len(),
        plane_max_residual: plane.max_residual,
        plane_rms_residual: plane.rms_residual,
        unit_speed_defect: arc_length_defect(&curve),
        spherical,
    })
}

fn planarity(a: Planarity) -> anyhow::Result<()> {
    let f = File::open(&a.input).with_context(|| format!("opening {}", a.input.display()))?;
    let curve = read_curve_csv(std::io::BufReader::new(f))?;
    let report = verify_planarity(&curve, a.kind.into())?;
    print_json(&report)
}

fn closure_scan_cmd(a: ClosureScanArgs) -> anyhow::Result<()> {
    let cs = ClosureSettings::new(a.qmax, planar_settings()?);
    let scan = closure_scan(a.from, a.to, a.grid, &cs)?;
    let rows: Vec<_> = scan.alpha0s.iter().cloned().zip(scan.results.iter().cloned()).collect();
    let mut f = create(&a.csv)?;
    write_closure_csv(&mut f, &rows)?;
    f.flush()?;
    #[derive(Serialize)]
    struct Summary {
        grid: usize,
        failures: usize,
        monotone: bool,
        increasing: Option<bool>,
        closed: Vec<f64>,
    }
    print_json(&Summary {
        grid: a.grid,
        failures: scan.failures(),
        monotone: scan.is_monotone(),
        increasing: scan.monotone_increasing,
        closed: scan
            .results
            .iter()
            .filter_map(|r| r.as_ref().ok().filter(|r| r.closed).map(|r| r.alpha0))
            .collect(),
    })
}

#[derive(Serialize)]
struct SnapshotEntry {
    time: f64,
    file: String,
}

#[derive(Serialize)]
struct Manifest {
    input: String,
    vertices: usize,
    closed: bool,
    t_end: f64,
    status: FlowStatus,
    resamplings: usize,
    snapshots: Vec<SnapshotEntry>,
    times: Vec<f64>,
    lengths: Vec<f64>,
    areas: Option<Vec<f64>>,
    rescaled_areas: Option<Vec<f64>>,
}

fn evolve_cmd(a: EvolveArgs) -> anyhow::Result<()> {
    let f = File::open(&a.input).with_context(|| format!("opening {}", a.input.display()))?;
    let points = read_points_csv(std::io::BufReader::new(f))?;
    let mut curve = PolyCurve::from_points(points, !a.open)?;
    if let Some(n) = a.vertices {
        curve = curve.resample(n)?;
    }
    if a.rescale_homothety && a.tend >= 0.5 {
        bail!(Error::InvalidInput("--rescale-homothety needs --tend < 1/2".into()));
    }
    let settings = FlowSettings {
        dt_max: a.dt_max,
        snapshot_interval: (a.snapshots > 0).then(|| a.tend / (a.snapshots + 1) as f64),
        ..FlowSettings::default()
    };
    let run = evolve(&curve, a.tend, &settings)?;
    fs::create_dir_all(&a.outdir).with_context(|| format!("creating {}", a.outdir.display()))?;
    let mut entries = Vec::with_capacity(run.snapshots.len());
    for (i, s) in run.snapshots.iter().enumerate() {
        let name = format!("snapshot_{i:04}.csv");
        let mut f = create(&a.outdir.join(&name))?;
        write_points_csv(&mut f, &s.curve)?;
        f.flush()?;
        entries.push(SnapshotEntry { time: s.time, file: name });
    }
    let rescaled_areas = if a.rescale_homothety {
        Some(rescaled_flow_area(&run, homothety_rescaling)?.into_iter().map(|(_, a)| a).collect())
    } else {
        None
    };
    let manifest = Manifest {
        input: a.input.display().to_string(),
        vertices: curve.len(),
        closed: curve.closed(),
        t_end: a.tend,
        status: run.status.clone(),
        resamplings: run.resamplings,
        snapshots: entries,
        times: run.step_times.clone(),
        lengths: run.lengths.clone(),
        areas: run.areas.clone(),
        rescaled_areas,
    };
    let mut f = create(&a.outdir.join("manifest.json"))?;
    serde_json::to_writer_pretty(&mut f, &manifest)?;
    writeln!(f)?;
    f.flush()?;
    println!(
        "{} snapshots, final t = {}, status {}",
        manifest.snapshots.len(),
        run.final_time(),
        serde_json::to_string(&run.status)?
    );
    if let FlowStatus::Failed { reason } = &run.status {
        return Err(Error::Flow {
            t: run.final_time(),
            reason: reason.clone(),
        }
        .into());
    }
    Ok(())
}
