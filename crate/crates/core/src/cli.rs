//! Batch front end. Every run writes a metadata header, a table and the named checks;
//! the exit status is 0 when all checks pass, 1 when one fails, 2 on a usage error.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::Vector4;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::error::{GeomError, Result};
use crate::geodesics::{integrate_geodesic, second_variation_spectrum, ClosedGeodesic, GeodesicState};
use crate::hyperkahler::{
    fixed_set_constraint_check, laplacian_riemann_identity, nabla_j_norm, yau_identity_residuals, CurvaturePoint,
};
use crate::kummer::{
    isometry_group, potential_preservation_defect, volumes_and_a, IsometryElement, KummerSurface, DEFAULT_NECK_A,
};
use crate::ma_radial::neck_correction_scan;
use crate::metric::{c, curvature_at, eh_kretschmann, from_real, metric_at, to_real, CPair, KahlerPotential, C64};
use crate::potentials::{
    eguchi_hanson_series_dd, PotentialKind, RadialPotentialSpec, RadialTestFunction, DEFAULT_DELTA, SCALING_DELTA,
};

#[derive(Debug, Parser)]
#[command(name = "kummer", version, about = "Curvature, geodesic and Monge-Ampère checks on Eguchi-Hanson necks and the glued Kummer surface")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Seed for randomised checks.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    /// Number of random trials, where a command samples.
    #[arg(long, global = true)]
    pub trials: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Profile {
    EguchiHanson,
    Glued,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Identity {
    All,
    Ricci,
    Eigenvalues,
    Frame,
    FixedSet,
    Laplacian,
    Yau,
}

#[derive(Debug, Args)]
pub struct SurfaceArgs {
    /// Kummer surface JSON: {"lattice_scale": R, "a": [16 reals], "delta": δ}.
    #[arg(long, conflicts_with_all = ["lattice_scale", "a", "delta"])]
    pub surface_config: Option<PathBuf>,
    #[arg(long)]
    pub lattice_scale: Option<f64>,
    /// Common neck parameter for all 16 points.
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
}

impl SurfaceArgs {
    fn surface(&self, default_a: f64, default_delta: f64) -> Result<KummerSurface> {
        match &self.surface_config {
            Some(p) => KummerSurface::from_path(p),
            None => KummerSurface::uniform(
                self.lattice_scale.unwrap_or(crate::kummer::DEFAULT_LATTICE_SCALE),
                self.a.unwrap_or(default_a),
                self.delta.unwrap_or(default_delta),
            ),
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Kretschmann scalar along a log-spaced range of u.
    CurvatureProfile {
        #[arg(long, default_value_t = 1.0)]
        a: f64,
        #[arg(long, default_value_t = 0.01)]
        u_min: f64,
        #[arg(long, default_value_t = 5.0)]
        u_max: f64,
        #[arg(long, default_value_t = 200)]
        n: usize,
        #[arg(long, value_enum, default_value_t = Profile::EguchiHanson)]
        potential: Profile,
        #[arg(long, default_value_t = DEFAULT_DELTA)]
        delta: f64,
    },
    /// Integrates one geodesic on Eguchi-Hanson or on a Kummer surface.
    Geodesic {
        #[arg(long, default_value_t = 1.0)]
        a: f64,
        /// Kummer surface JSON; the geodesic then runs on the glued surface.
        #[arg(long)]
        surface_config: Option<PathBuf>,
        /// Start point x1,y1,x2,y2.
        #[arg(long, value_delimiter = ',', default_values_t = [1.2, 0.0, 0.3, 0.0])]
        start: Vec<f64>,
        /// Initial velocity, rescaled to unit speed.
        #[arg(long, value_delimiter = ',', default_values_t = [0.0, 1.0, 0.2, 0.0])]
        velocity: Vec<f64>,
        #[arg(long, default_value_t = 5.0)]
        length: f64,
        #[arg(long, default_value_t = 0.005)]
        step: f64,
        /// Write every k-th step.
        #[arg(long, default_value_t = 10)]
        every: usize,
    },
    /// Second variation along the zero-section equator and a flat torus geodesic.
    Stability {
        #[arg(long, value_delimiter = ',', default_values_t = [0.5, 1.0, 2.0])]
        a_grid: Vec<f64>,
        #[arg(long, default_value_t = 32)]
        modes: usize,
        #[arg(long, default_value_t = 8.0)]
        lattice_scale: f64,
    },
    /// σ-invariants at random points and unit vectors of Eguchi-Hanson.
    Sigma {
        #[arg(long, default_value_t = 1.0)]
        a: f64,
    },
    /// Pointwise identities: Ricci-flatness, eigenvalues, hyperkähler frame, fixed set, Laplacian, Yau.
    IdentityCheck {
        #[arg(long, value_enum, default_value_t = Identity::All)]
        which: Identity,
    },
    /// Neck volume deficits and the constant A.
    KummerVolumes {
        #[command(flatten)]
        surface: SurfaceArgs,
    },
    /// The 512 affine isometries and their orders.
    Isometries {
        #[command(flatten)]
        surface: SurfaceArgs,
    },
    /// Radial Monge-Ampère neck correction over a grid of a.
    MaScaling {
        #[arg(long, value_delimiter = ',', default_values_t = crate::potentials::DEFAULT_A_GRID)]
        a_grid: Vec<f64>,
        #[arg(long, default_value_t = SCALING_DELTA)]
        delta: f64,
    },
}

#[derive(Debug, Clone)]
pub enum Cell {
    F(f64),
    I(i64),
    S(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::F(v) => fmt_f64(*v),
            Cell::I(v) => v.to_string(),
            Cell::S(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::F(v) => json!(v),
            Cell::I(v) => json!(v),
            Cell::S(s) => json!(s),
        }
    }
}

/// 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: String,
    pub pass: bool,
}

impl Check {
    fn at_most(name: &str, value: f64, tol: f64) -> Self {
        Self { name: name.into(), value, tolerance: format!("<= {}", fmt_f64(tol)), pass: value <= tol }
    }

    fn at_least(name: &str, value: f64, tol: f64) -> Self {
        Self { name: name.into(), value, tolerance: format!(">= {}", fmt_f64(tol)), pass: value >= tol }
    }

    fn equals(name: &str, value: f64, expect: f64) -> Self {
        Self { name: name.into(), value, tolerance: format!("== {expect}"), pass: value == expect }
    }
}

#[derive(Debug, Default)]
pub struct Report {
    pub parameters: Vec<(String, String)>,
    pub tolerances: Vec<(String, f64)>,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    pub checks: Vec<Check>,
    pub extra: Option<Value>,
}

impl Report {
    fn param(&mut self, k: &str, v: impl ToString) {
        self.parameters.push((k.into(), v.to_string()));
    }

    fn tol(&mut self, k: &str, v: f64) {
        self.tolerances.push((k.into(), v));
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn render(&self, command: &str, cli: &Cli, format: Format) -> String {
        let version = env!("CARGO_PKG_VERSION");
        let trials = cli.trials.map(|t| t.to_string()).unwrap_or_else(|| "default".into());
        match format {
            Format::Csv => {
                let mut s = String::new();
                s += &format!("# kummer {version}\n# command: {command}\n# seed: {}\n# trials: {trials}\n", cli.seed);
                for (k, v) in &self.parameters {
                    s += &format!("# param {k}: {v}\n");
                }
                for (k, v) in &self.tolerances {
                    s += &format!("# tolerance {k}: {}\n", fmt_f64(*v));
                }
                for c in &self.checks {
                    let verdict = if c.pass { "PASS" } else { "FAIL" };
                    s += &format!("# check {}: {} ({}) {verdict}\n", c.name, fmt_f64(c.value), c.tolerance);
                }
                if !self.columns.is_empty() {
                    s += &self.columns.join(",");
                    s.push('\n');
                    for r in &self.rows {
                        s += &r.iter().map(Cell::csv).collect::<Vec<_>>().join(",");
                        s.push('\n');
                    }
                }
                s
            }
            Format::Json => {
                let rows: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|r| {
                        Value::Object(self.columns.iter().zip(r).map(|(k, v)| (k.to_string(), v.json())).collect())
                    })
                    .collect();
                let mut out = json!({
                    "metadata": {
                        "version": version,
                        "command": command,
                        "seed": cli.seed,
                        "trials": cli.trials,
                        "parameters": self.parameters.iter().map(|(k, v)| (k.clone(), json!(v))).collect::<serde_json::Map<_, _>>(),
                        "tolerances": self.tolerances.iter().map(|(k, v)| (k.clone(), json!(v))).collect::<serde_json::Map<_, _>>(),
                    },
                    "checks": self.checks.iter().map(|c| json!({
                        "name": c.name, "value": c.value, "tolerance": c.tolerance, "pass": c.pass
                    })).collect::<Vec<_>>(),
                    "rows": rows,
                });
                if let Some(e) = &self.extra {
                    out["data"] = e.clone();
                }
                let mut s = serde_json::to_string_pretty(&out).expect("serialisable");
                s.push('\n');
                s
            }
        }
    }
}

fn command_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::CurvatureProfile { .. } => "curvature-profile",
        Command::Geodesic { .. } => "geodesic",
        Command::Stability { .. } => "stability",
        Command::Sigma { .. } => "sigma",
        Command::IdentityCheck { .. } => "identity-check",
        Command::KummerVolumes { .. } => "kummer-volumes",
        Command::Isometries { .. } => "isometries",
        Command::MaScaling { .. } => "ma-scaling",
    }
}

/// Parses `args` (including the program name), runs the command and returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let name = command_name(&cli.command);
    let report = match execute(&cli) {
        Ok(r) => r,
        Err(e @ (GeomError::Config(_) | GeomError::Parameter(_))) => {
            eprintln!("error: {e}");
            return 2;
        }
        Err(e) => {
            eprintln!("error in {name}: {e}");
            return 1;
        }
    };
    let text = report.render(name, &cli, cli.format);
    let written = match &cli.output {
        Some(p) => std::fs::write(p, text).map_err(|e| format!("cannot write {}: {e}", p.display())),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| e.to_string()),
    };
    if let Err(e) = written {
        eprintln!("error: {e}");
        return 1;
    }
    for c in report.checks.iter().filter(|c| !c.pass) {
        eprintln!("check failed: {} = {} ({})", c.name, fmt_f64(c.value), c.tolerance);
    }
    if report.passed() {
        0
    } else {
        1
    }
}

pub fn execute(cli: &Cli) -> Result<Report> {
    let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
    match &cli.command {
        Command::CurvatureProfile { a, u_min, u_max, n, potential, delta } => {
            curvature_profile(*a, *u_min, *u_max, *n, *potential, *delta)
        }
        Command::Geodesic { a, surface_config, start, velocity, length, step, every } => {
            geodesic(*a, surface_config.as_ref(), start, velocity, *length, *step, *every)
        }
        Command::Stability { a_grid, modes, lattice_scale } => stability(a_grid, *modes, *lattice_scale),
        Command::Sigma { a } => sigma(*a, cli.trials.unwrap_or(1000), &mut rng),
        Command::IdentityCheck { which } => identity_check(*which, cli.trials.unwrap_or(50), &mut rng),
        Command::KummerVolumes { surface } => kummer_volumes(&surface.surface(DEFAULT_NECK_A, DEFAULT_DELTA)?),
        Command::Isometries { surface } => isometries(&surface.surface(DEFAULT_NECK_A, DEFAULT_DELTA)?, cli.trials.unwrap_or(20), &mut rng),
        Command::MaScaling { a_grid, delta } => ma_scaling(a_grid, *delta),
    }
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo && n >= 2) {
        return Err(GeomError::Parameter(format!("need 0 < u-min < u-max and n >= 2, got {lo}, {hi}, {n}")));
    }
    Ok((0..n).map(|k| lo * (hi / lo).powf(k as f64 / (n - 1) as f64)).collect())
}

fn curvature_profile(a: f64, u_min: f64, u_max: f64, n: usize, potential: Profile, delta: f64) -> Result<Report> {
    let spec = match potential {
        Profile::EguchiHanson => RadialPotentialSpec::eguchi_hanson(a)?,
        Profile::Glued => RadialPotentialSpec::glued(a, delta)?,
    };
    let tol = 1e-10;
    let mut rep = Report::default();
    rep.param("a", a);
    rep.param("u_min", u_min);
    rep.param("u_max", u_max);
    rep.param("n", n);
    rep.param("potential", format!("{potential:?}"));
    if potential == Profile::Glued {
        rep.param("delta", delta);
    }
    rep.tol("kretschmann_rel", tol);
    rep.columns = vec!["u", "kretschmann", "eguchi_hanson_closed_form", "rel_err"];
    let mut worst: f64 = 0.0;
    for u in log_grid(u_min, u_max, n)? {
        let r = u.sqrt();
        let z = [c(0.6 * r, 0.0), c(0.0, 0.8 * r)];
        let k = if spec.kind == PotentialKind::EguchiHanson || u <= 1.0 {
            eh_kretschmann(a, u)?
        } else {
            curvature_at(&spec, &z)?.kretschmann
        };
        let closed = 24.0 * a.powi(4) / (a * a + u * u).powi(3);
        let in_neck = spec.kind == PotentialKind::Glued && u > 1.0 && u < 1.0 + delta;
        let expect = if spec.kind == PotentialKind::Glued && u >= 1.0 + delta { 0.0 } else { closed };
        let err = (k - expect).abs() / expect.max(f64::MIN_POSITIVE);
        if !in_neck {
            worst = worst.max(if expect == 0.0 { k.abs() } else { err });
        }
        rep.rows.push(vec![Cell::F(u), Cell::F(k), Cell::F(closed), Cell::F(if in_neck { f64::NAN } else { err })]);
    }
    rep.checks.push(Check::at_most("kretschmann_vs_closed_form", worst, tol));
    Ok(rep)
}

fn geodesic(
    a: f64,
    surface_config: Option<&PathBuf>,
    start: &[f64],
    velocity: &[f64],
    length: f64,
    step: f64,
    every: usize,
) -> Result<Report> {
    let surface;
    let spec;
    let pot: &dyn KahlerPotential = match surface_config {
        Some(p) => {
            surface = KummerSurface::from_path(p)?;
            &surface
        }
        None => {
            spec = RadialPotentialSpec::eguchi_hanson(a)?;
            &spec
        }
    };
    if start.len() != 4 {
        return Err(GeomError::Parameter("start needs 4 entries x1,y1,x2,y2".into()));
    }
    let z = from_real(start);
    let v: [f64; 4] = velocity.try_into().map_err(|_| GeomError::Parameter("velocity needs 4 entries".into()))?;
    let st = GeodesicState::new(z, v).normalized(pot)?;
    let path = integrate_geodesic(pot, &st, length, step)?;
    let mut rep = Report::default();
    match surface_config {
        Some(p) => rep.param("surface_config", p.display()),
        None => rep.param("a", a),
    }
    rep.param("start", format!("{start:?}"));
    rep.param("velocity", format!("{velocity:?}"));
    rep.param("length", length);
    rep.param("step", step);
    let drift_tol = 1e-9 * length.abs().max(1.0);
    rep.tol("energy_drift", drift_tol);
    rep.columns = vec!["t", "x1", "y1", "x2", "y2", "vx1", "vy1", "vx2", "vy2", "energy", "u"];
    let every = every.max(1);
    for (i, (t, s)) in path.times.iter().zip(&path.states).enumerate() {
        if i % every != 0 && i + 1 != path.times.len() {
            continue;
        }
        let x = to_real(&s.point);
        let mut row = vec![Cell::F(*t)];
        row.extend(x.iter().chain(&s.velocity).map(|v| Cell::F(*v)));
        row.push(Cell::F(path.energies[i]));
        row.push(Cell::F(pot.orbifold_distance_sqr(&s.point).unwrap_or(f64::NAN)));
        rep.rows.push(row);
    }
    rep.checks.push(Check::at_most("energy_drift", path.energy_drift(), drift_tol));
    rep.checks.push(Check::at_most("max_step_error", path.max_step_error, crate::geodesics::STEP_TOL));
    Ok(rep)
}

fn stability(a_grid: &[f64], modes: usize, r: f64) -> Result<Report> {
    let mut rep = Report::default();
    rep.param("a_grid", format!("{a_grid:?}"));
    rep.param("modes", modes);
    rep.param("lattice_scale", r);
    rep.tol("flat_min_eigenvalue", -1e-8);
    rep.columns = vec!["geodesic", "a", "length", "min_eigenvalue", "expected_min", "nullity", "sup_riemann"];
    let mut worst_e: f64 = f64::NEG_INFINITY;
    for &a in a_grid {
        let (chart, path) = ClosedGeodesic::zero_section_equator(a)?;
        let s = second_variation_spectrum(&chart, &path, modes)?;
        worst_e = worst_e.max(s.min_eigenvalue);
        rep.rows.push(vec![
            Cell::S("zero_section_equator".into()),
            Cell::F(a),
            Cell::F(s.length),
            Cell::F(s.min_eigenvalue),
            Cell::F(-4.0 / a),
            Cell::I(s.nullity_estimate as i64),
            Cell::F(s.sup_riemann),
        ]);
    }
    let flat = RadialPotentialSpec::euclidean();
    let start = GeodesicState::new([c(r / 4.0, r / 4.0), c(r / 4.0, r / 4.0)], [1.0, 0.0, 0.0, 0.0]);
    let s = second_variation_spectrum(&flat, &ClosedGeodesic { start, period: r, shift: [r, 0.0, 0.0, 0.0] }, modes)?;
    rep.rows.push(vec![
        Cell::S("flat_torus".into()),
        Cell::F(0.0),
        Cell::F(s.length),
        Cell::F(s.min_eigenvalue),
        Cell::F(0.0),
        Cell::I(s.nullity_estimate as i64),
        Cell::F(s.sup_riemann),
    ]);
    rep.checks.push(Check { name: "equator_unstable".into(), value: worst_e, tolerance: "< 0".into(), pass: worst_e < 0.0 });
    rep.checks.push(Check::at_least("flat_min_eigenvalue", s.min_eigenvalue, -1e-8));
    rep.checks.push(Check::at_least("flat_nullity", s.nullity_estimate as f64, 3.0));
    Ok(rep)
}

/// Random point with `u ∈ [lo, hi]`.
fn random_point(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> CPair {
    let u = rng.random_range(lo..hi);
    let d: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
    let n = d.iter().map(|x| x * x).sum::<f64>().sqrt();
    from_real(&d.map(|x| x / n * u.sqrt()))
}

fn unit_vector(rng: &mut ChaCha8Rng, pt: &CurvaturePoint) -> Vector4<f64> {
    let v = Vector4::from_fn(|_, _| rng.random_range(-1.0..1.0));
    v / pt.norm_sqr(&v).sqrt()
}

fn sigma(a: f64, trials: usize, rng: &mut ChaCha8Rng) -> Result<Report> {
    let spec = RadialPotentialSpec::eguchi_hanson(a)?;
    let tol = 1e-10;
    let mut rep = Report::default();
    rep.param("a", a);
    rep.param("sample_u", "[a/4, 4a]");
    rep.tol("trace_rel", tol);
    rep.columns = vec!["trial", "u", "ii", "jj", "kk", "ij", "ik", "jk", "trace"];
    let mut worst: f64 = 0.0;
    for t in 0..trials {
        let z = random_point(rng, 0.25 * a, 4.0 * a);
        let pt = CurvaturePoint::new(&spec, &z)?;
        let s = pt.sigma(&unit_vector(rng, &pt))?;
        worst = worst.max(s.trace().abs() / (1.0 + s.scale()));
        let u = z[0].norm_sqr() + z[1].norm_sqr();
        rep.rows.push(
            [u, s.ii, s.jj, s.kk, s.ij, s.ik, s.jk, s.trace()]
                .iter()
                .fold(vec![Cell::I(t as i64)], |mut r, v| {
                    r.push(Cell::F(*v));
                    r
                }),
        );
    }
    rep.checks.push(Check::at_most("sigma_trace", worst, tol));
    Ok(rep)
}

fn identity_check(which: Identity, trials: usize, rng: &mut ChaCha8Rng) -> Result<Report> {
    let mut rep = Report::default();
    rep.param("which", format!("{which:?}"));
    rep.columns = vec!["identity", "max_residual", "tolerance"];
    let add = |rep: &mut Report, name: &str, value: f64, tol: f64| {
        rep.rows.push(vec![Cell::S(name.into()), Cell::F(value), Cell::F(tol)]);
        rep.checks.push(Check::at_most(name, value, tol));
    };
    let all = which == Identity::All;
    if all || which == Identity::Ricci {
        let mut radial: f64 = 0.0;
        for a in [0.1, 1.0] {
            for k in 0..=400 {
                let u = 1e-3 * (1e4f64).powf(k as f64 / 400.0);
                let dd = eguchi_hanson_series_dd(a, u, 2)?;
                radial = radial.max(f64::from(dd[1] * (dd[1] + dd[2] * (2.0 * u)) - 1.0).abs());
            }
        }
        add(&mut rep, "radial_monge_ampere", radial, 1e-12);
        let mut ricci: f64 = 0.0;
        for _ in 0..trials.max(1) {
            let a = rng.random_range(0.1..1.0);
            let z = random_point(rng, 0.05, 5.0);
            let cb = curvature_at(&RadialPotentialSpec::eguchi_hanson(a)?, &z)?;
            ricci = ricci.max(cb.ricci.iter().flatten().map(|r| r.norm()).fold(0.0, f64::max));
        }
        add(&mut rep, "ricci_components", ricci, 1e-10);
    }
    if all || which == Identity::Eigenvalues {
        let mut worst: f64 = 0.0;
        for _ in 0..trials.max(1) {
            let a = rng.random_range(0.1..1.0);
            let z = random_point(rng, 1e-2, 5.0);
            let u = z[0].norm_sqr() + z[1].norm_sqr();
            let s = (a * a + u * u).sqrt();
            let ev = metric_at(&RadialPotentialSpec::eguchi_hanson(a)?, &z)?.eigenvalues();
            worst = worst.max(((ev[0] - u / s).abs()).max((ev[1] - s / u).abs()) / (s / u));
        }
        add(&mut rep, "orbifold_eigenvalues", worst, 1e-11);
    }
    if all || which == Identity::Frame {
        let (mut rel, mut nab, mut tr): (f64, f64, f64) = (0.0, 0.0, 0.0);
        for _ in 0..trials.max(1) {
            let a: f64 = rng.random_range(0.2..2.0);
            let spec = RadialPotentialSpec::eguchi_hanson(a)?;
            let z = random_point(rng, 0.25 * a, 4.0 * a);
            let pt = CurvaturePoint::new(&spec, &z)?;
            let scale = pt.metric.amax();
            rel = rel.max(pt.frame.relation_defect() / (1.0 + scale)).max(pt.frame.compatibility_defect(&pt.metric) / scale);
            let x: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
            nab = nab.max(nabla_j_norm(&spec, &z, &x, 1e-4)?);
            let s = pt.sigma(&unit_vector(rng, &pt))?;
            tr = tr.max(s.trace().abs() / (1.0 + s.scale()));
        }
        add(&mut rep, "quaternion_relations", rel, 1e-11);
        add(&mut rep, "nabla_j", nab, 1e-6);
        add(&mut rep, "sigma_trace", tr, 1e-10);
    }
    if all || which == Identity::FixedSet {
        let mut worst: f64 = 0.0;
        for _ in 0..trials.max(1) {
            let a: f64 = rng.random_range(0.2..2.0);
            let u: f64 = rng.random_range(0.25 * a..4.0 * a);
            let z1 = C64::from_polar(u.sqrt(), rng.random_range(0.0..6.3));
            let r = fixed_set_constraint_check(a, 4, z1, rng.random_range(0.0..6.3))?;
            worst = worst.max(r.off_diagonal.max(r.jj_minus_kk) / (1.0 + r.sigma.scale()));
        }
        add(&mut rep, "fixed_set_constraints", worst, 1e-10);
    }
    if all || which == Identity::Laplacian {
        let (mut general, mut stated, mut measured): (f64, f64, f64) = (0.0, 0.0, 0.0);
        for (a, z1) in [(1.0, c(0.7, 0.3)), (0.5, c(0.2, 0.6)), (2.0, c(-1.1, 0.4)), (0.3, c(0.5, -0.5)), (1.0, c(1.0, 0.0))] {
            let spec = RadialPotentialSpec::eguchi_hanson(a)?;
            let r = laplacian_riemann_identity(&spec, &[z1, c(0.0, 0.0)], 1e-3)?;
            let rel = |x: f64| (r.composition_fd - x).abs() / r.composition_fd.abs().max(1.0);
            general = general.max(rel(r.general_form));
            stated = stated.max(rel(r.fixed_set_form.unwrap_or(f64::NAN)));
            measured = measured.max(rel(r.fixed_set_form_measured.unwrap_or(f64::NAN)));
        }
        add(&mut rep, "laplacian_general_form", general, 1e-5);
        add(&mut rep, "laplacian_fixed_set_form_measured", measured, 1e-5);
        rep.rows.push(vec![Cell::S("laplacian_fixed_set_form_stated".into()), Cell::F(stated), Cell::F(1e-5)]);
    }
    if all || which == Identity::Yau {
        let specs = [
            RadialPotentialSpec::eguchi_hanson(1.0)?,
            RadialPotentialSpec::eguchi_hanson(0.3)?,
            RadialPotentialSpec::glued(0.2, 0.5)?,
        ];
        let (mut res, mut slack) = (0.0f64, f64::INFINITY);
        let mut done = 0;
        let mut attempts = 0;
        while done < trials.max(1) && attempts < 100 * trials.max(1) {
            attempts += 1;
            let spec = &specs[done % 3];
            let z = if spec.kind == PotentialKind::Glued { random_point(rng, 1.0, 1.5) } else { random_point(rng, 0.1, 3.0) };
            let phi = RadialTestFunction {
                amplitude: rng.random_range(-0.05..0.05),
                frequency: rng.random_range(0.5..4.0),
                phase: rng.random_range(0.0..6.3),
                quadratic: rng.random_range(-0.03..0.03),
            };
            let r = match yau_identity_residuals(spec, &phi, &z, &[0.1, 1.0, 10.0]) {
                Ok(r) => r,
                Err(GeomError::DegenerateMetric(_)) => continue,
                Err(e) => return Err(e),
            };
            res = res.max(r.norm_ma.abs()).max(r.phi_der.abs());
            for s in &r.slack {
                slack = slack.min(s.gradient_bound).min(s.final_bound);
            }
            done += 1;
        }
        add(&mut rep, "yau_identities", res, 1e-9);
        rep.rows.push(vec![Cell::S("yau_min_slack".into()), Cell::F(slack), Cell::F(-1e-9)]);
        rep.checks.push(Check::at_least("yau_min_slack", slack, -1e-9));
    }
    Ok(rep)
}

fn kummer_volumes(s: &KummerSurface) -> Result<Report> {
    let v = volumes_and_a(s)?;
    let mut rep = Report::default();
    rep.param("surface", s.to_json());
    rep.tol("deficit_rel", 1e-8);
    rep.tol("a_constant", 1e-10);
    rep.columns = vec!["neck", "a", "vol_euc", "vol_g", "deficit", "deficit_closed_form", "rel_err"];
    let mut worst: f64 = 0.0;
    for (i, n) in v.necks.iter().enumerate() {
        let rel = if n.deficit_closed_form == 0.0 {
            n.deficit.abs()
        } else {
            (n.deficit - n.deficit_closed_form).abs() / n.deficit_closed_form
        };
        worst = worst.max(rel);
        rep.rows.push(vec![
            Cell::I(i as i64),
            Cell::F(n.a),
            Cell::F(n.vol_euc),
            Cell::F(n.vol_g),
            Cell::F(n.deficit),
            Cell::F(n.deficit_closed_form),
            Cell::F(rel),
        ]);
    }
    rep.param("a_constant", fmt_f64(v.a_constant));
    rep.param("a_closed_form", fmt_f64(v.a_closed_form));
    rep.param("vol_euc_torus", fmt_f64(v.vol_euc_torus));
    rep.checks.push(Check::at_most("neck_deficit", worst, 1e-8));
    rep.checks.push(Check::at_most("a_constant", (v.a_constant - v.a_closed_form).abs(), 1e-10));
    Ok(rep)
}

fn isometries(s: &KummerSurface, trials: usize, rng: &mut ChaCha8Rng) -> Result<Report> {
    let g = isometry_group(s)?;
    let r = s.lattice_scale;
    let mut pts: Vec<CPair> = (0..trials.max(1))
        .map(|_| from_real(&std::array::from_fn::<f64, 4, _>(|_| rng.random_range(0.0..r))))
        .collect();
    for i in [0, 7, 15] {
        let q = s.half_lattice_point(i);
        let w = random_point(rng, 0.3 * s.cutoff_scale, 1.2 * s.cutoff_scale);
        pts.push([q[0] + w[0], q[1] + w[1]]);
    }
    let mut preservation: f64 = 0.0;
    let mut rep = Report::default();
    rep.param("surface", s.to_json());
    rep.tol("potential_preservation", 1e-12);
    rep.columns = vec!["index", "b11", "b12", "b21", "b22", "b1", "b2", "conj", "order"];
    let gi = |x: crate::kummer::GaussInt| format!("{}{:+}i", x.re, x.im);
    let mut elements = Vec::new();
    for (k, e) in g.elements.iter().enumerate() {
        preservation = preservation.max(potential_preservation_defect(s, e, &pts)?);
        let m = &e.b_matrix;
        rep.rows.push(vec![
            Cell::I(k as i64),
            Cell::S(gi(m[0][0])),
            Cell::S(gi(m[0][1])),
            Cell::S(gi(m[1][0])),
            Cell::S(gi(m[1][1])),
            Cell::S(gi(e.b[0])),
            Cell::S(gi(e.b[1])),
            Cell::I(e.conj as i64),
            Cell::I(g.orders[k] as i64),
        ]);
        elements.push(json!({
            "matrix": m.iter().map(|row| row.iter().map(|x| [x.re, x.im]).collect::<Vec<_>>()).collect::<Vec<_>>(),
            "translation_half_lattice": e.b.iter().map(|x| [x.re, x.im]).collect::<Vec<_>>(),
            "conjugate": e.conj,
            "order": g.orders[k],
            "half_lattice_permutation": e.half_lattice_permutation(s).to_vec(),
        }));
    }
    let f = IsometryElement::special_f();
    rep.extra = Some(json!({ "count": g.elements.len(), "raw_count": g.raw_count, "elements": elements }));
    rep.checks.push(Check::equals("element_count", g.elements.len() as f64, 512.0));
    rep.checks.push(Check::equals("closed_under_composition", g.closed as u8 as f64, 1.0));
    rep.checks.push(Check::equals("max_order", g.max_order as f64, 8.0));
    rep.checks.push(Check::at_most("potential_preservation", preservation, 1e-12));
    rep.checks.push(Check::equals("f_order", f.order() as f64, 4.0));
    Ok(rep)
}

fn ma_scaling(a_grid: &[f64], delta: f64) -> Result<Report> {
    let scan = neck_correction_scan(a_grid, delta)?;
    let mut rep = Report::default();
    rep.param("a_grid", format!("{a_grid:?}"));
    rep.param("delta", delta);
    rep.param("slope_sup_phi", fmt_f64(scan.slope_sup_phi));
    rep.param("slope_sup_lap_phi", fmt_f64(scan.slope_sup_lap_phi));
    rep.tol("slope_window", 0.2);
    rep.columns = vec!["a", "a_model", "sup_phi", "sup_lap_phi", "min_lap_phi", "max_ma_residual", "min_lower_bound_slack"];
    for r in &scan.rows {
        rep.rows.push(vec![
            Cell::F(r.a),
            Cell::F(r.a_model),
            Cell::F(r.sup_phi),
            Cell::F(r.sup_lap_phi),
            Cell::F(r.min_lap_phi),
            Cell::F(r.max_ma_residual),
            Cell::F(crate::ma_radial::lower_bound_check(r)),
        ]);
    }
    rep.checks.push(Check::at_most("sup_phi_slope_minus_2", (scan.slope_sup_phi - 2.0).abs(), 0.2));
    Ok(rep)
}
