mod output;

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DVector;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use ssm_backbone::forced::ReducedModel;
use ssm_backbone::io::{parse_model, serialize_model};
use ssm_backbone::model::{builtin_model, validate_model, BuiltinModel, MechanicalSystem, ModelParams};
use ssm_backbone::oracle::compare::{compare_with_ssm, forced_system, oracle_branch, orbit_amplitudes, orbits_at};
use ssm_backbone::oracle::{ContinuationOptions, Dopri5, ShootingOptions};
use ssm_backbone::response::{
    backbone_curve, frf_sweep, max_amplitude, modal_amplitude, physical_harmonics, stability_boundaries,
    BranchSide,
};
use ssm_backbone::spectral::{check_nonresonance, ResonanceReport, DEFAULT_TOL_NEAR_FACTOR};
use ssm_backbone::ssm::InvarianceResidual;
use ssm_backbone::Error;

use output::{document, emit, Cell, Meta, Table};

/// Grid widths around folds excluded from the verify error summary.
const EXCLUSION_WIDTHS: f64 = 3.0;

#[derive(Parser, Debug)]
#[command(name = "ssm-backbone", version, about = "Forced responses and backbone curves from two-dimensional spectral submanifolds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Write to a file instead of stdout.
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, value_enum, env = "SSM_BACKBONE_TOLERANCES", default_value_t = Profile::Default)]
    tolerances: Profile,
    /// Override the profile's real-part resonance tolerance.
    #[arg(long, global = true)]
    tol_abs: Option<f64>,
    /// Override the profile's near-resonance tolerance, as a multiple of |Im lambda_l|.
    #[arg(long, global = true)]
    tol_near: Option<f64>,
    /// Worker threads for sweeps (0 = all cores). Output order never depends on it.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    /// Treat model diagnostics as errors.
    #[arg(long, global = true)]
    strict: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Eigenvalues, natural frequencies and damping ratios.
    Spectrum(ModelArg),
    /// Non-resonance conditions for a master mode.
    Check(ModeArgs),
    /// SSM coefficients as JSON, or the invariance residual with --residual-scan.
    Ssm {
        #[command(flatten)]
        m: OrderArgs,
        #[arg(long)]
        residual_scan: bool,
        #[arg(long, default_value_t = 41)]
        points: usize,
    },
    /// Forced response curve.
    Frf {
        #[command(flatten)]
        m: OrderArgs,
        #[arg(long)]
        eps: Option<f64>,
        /// Largest amplitude on the grid (default 1.2x the smallest peak amplitude).
        #[arg(long)]
        rho_max: Option<f64>,
        #[arg(long, default_value_t = 400)]
        points: usize,
    },
    /// Backbone curve.
    Backbone {
        #[command(flatten)]
        m: OrderArgs,
        #[arg(long, default_value_t = 1.0)]
        rho_max: f64,
        #[arg(long, default_value_t = 200)]
        points: usize,
    },
    /// Stability boundaries Omega_crit-(rho), Omega_crit+(rho).
    Boundaries {
        #[command(flatten)]
        m: OrderArgs,
        #[arg(long, default_value_t = 1.0)]
        rho_max: f64,
        #[arg(long, default_value_t = 200)]
        points: usize,
    },
    /// Compare against periodic orbits of the full system.
    Verify {
        #[command(flatten)]
        m: OrderArgs,
        #[arg(long)]
        eps: Option<f64>,
        /// Frequency grid as START:END:POINTS.
        #[arg(long, value_parser = parse_range)]
        omega_range: OmegaRange,
        /// Dump every orbit found at this frequency (JSON) instead of the comparison.
        #[arg(long)]
        orbit_at: Option<f64>,
    },
    /// Print a built-in model as a model file.
    Export {
        #[arg(value_parser = parse_builtin)]
        name: BuiltinModel,
    },
}

#[derive(Args, Debug)]
struct ModelArg {
    /// Model file, or builtin:NAME for shaw_pierre, spring_system, oscillator_chain.
    model: String,
}

#[derive(Args, Debug)]
struct ModeArgs {
    #[command(flatten)]
    model: ModelArg,
    /// Master mode (1-based).
    #[arg(long, default_value_t = 1)]
    mode: usize,
}

#[derive(Args, Debug)]
struct OrderArgs {
    #[command(flatten)]
    mode: ModeArgs,
    /// Truncation order of the SSM, 3 or 5.
    #[arg(long, default_value_t = 5, value_parser = parse_order)]
    order: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Profile {
    Default,
    Strict,
    Fast,
}

#[derive(Clone, Copy, Debug)]
struct Tolerances {
    tol_abs: f64,
    tol_near_factor: f64,
    shooting: f64,
    rtol: f64,
}

impl Profile {
    fn tolerances(self) -> Tolerances {
        match self {
            Profile::Default => Tolerances {
                tol_abs: 1e-6,
                tol_near_factor: DEFAULT_TOL_NEAR_FACTOR,
                shooting: 1e-9,
                rtol: 1e-12,
            },
            Profile::Strict => Tolerances {
                tol_abs: 1e-8,
                tol_near_factor: 0.1,
                shooting: 1e-11,
                rtol: 1e-13,
            },
            Profile::Fast => Tolerances {
                tol_abs: 1e-6,
                tol_near_factor: DEFAULT_TOL_NEAR_FACTOR,
                shooting: 1e-7,
                rtol: 1e-10,
            },
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct OmegaRange {
    start: f64,
    end: f64,
    points: usize,
}

impl OmegaRange {
    fn grid(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.start];
        }
        (0..self.points)
            .map(|i| self.start + (self.end - self.start) * i as f64 / (self.points - 1) as f64)
            .collect()
    }
}

fn parse_range(s: &str) -> Result<OmegaRange, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, p] = parts[..] else {
        return Err("expected START:END:POINTS".into());
    };
    let start: f64 = a.parse().map_err(|e| format!("START: {e}"))?;
    let end: f64 = b.parse().map_err(|e| format!("END: {e}"))?;
    let points: usize = p.parse().map_err(|e| format!("POINTS: {e}"))?;
    if points == 0 || !(start > 0.0) || !(end >= start) {
        return Err("need 0 < START <= END and POINTS >= 1".into());
    }
    Ok(OmegaRange { start, end, points })
}

fn parse_order(s: &str) -> Result<usize, String> {
    match s {
        "3" => Ok(3),
        "5" => Ok(5),
        _ => Err(format!("order must be 3 or 5, got {s}")),
    }
}

fn parse_builtin(s: &str) -> Result<BuiltinModel, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// A failure together with its exit code.
struct Failure {
    code: u8,
    message: String,
}

const EXIT_MODEL: u8 = 1;
const EXIT_RESONANCE: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::DimensionMismatch { .. }
            | Error::MassNotInvertible
            | Error::OverdampedMode(_)
            | Error::UnstableOrigin(_)
            | Error::InvalidMode { .. }
            | Error::ForcingOrthogonal
            | Error::NotSingleHarmonic
            | Error::DegenerateForcing
            | Error::UnknownModel(_)
            | Error::MissingParameter(_)
            | Error::InvalidModel(_) => EXIT_MODEL,
            Error::NearResonantDenominator { .. } | Error::NearResonantHarmonic { .. } => EXIT_RESONANCE,
            _ => EXIT_NUMERICAL,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure {
            code: EXIT_MODEL,
            message: e.to_string(),
        }
    }
}

struct Ctx {
    format: Format,
    output: Option<PathBuf>,
    profile: Profile,
    tol: Tolerances,
    strict: bool,
    pool: rayon::ThreadPool,
}

struct Loaded {
    system: MechanicalSystem,
    meta: Meta,
}

impl Ctx {
    fn load(&self, spec: &str, command: &str) -> Result<Loaded, Failure> {
        let (system, warnings) = match spec.strip_prefix("builtin:") {
            Some(name) => {
                let model: BuiltinModel = name.parse()?;
                (builtin_model(model, &ModelParams::new())?, Vec::new())
            }
            None => {
                let parsed = parse_model(Path::new(spec))?;
                (parsed.system, parsed.warnings)
            }
        };
        let mut problems = warnings;
        problems.extend(validate_model(&system).iter().map(|d| d.to_string()));
        for p in &problems {
            eprintln!("warning: {p}");
        }
        if self.strict && !problems.is_empty() {
            return Err(Failure {
                code: EXIT_MODEL,
                message: format!("{} model diagnostic(s) with --strict", problems.len()),
            });
        }
        let hash = Sha256::digest(serialize_model(&system).as_bytes());
        let hex: String = hash.iter().map(|b| format!("{b:02x}")).collect();
        let mut meta = Meta::default();
        meta.push("tool", format!("ssm-backbone {} {command}", env!("CARGO_PKG_VERSION")));
        meta.push("model", spec);
        meta.push("model_sha256", hex);
        Ok(Loaded { system, meta })
    }

    fn push_tolerances(&self, meta: &mut Meta, oracle: bool) {
        let t = self.tol;
        let mut s = format!(
            "{} (tol_abs={:e}, tol_near={}*|Im lambda_l|",
            self.profile.name(),
            t.tol_abs,
            t.tol_near_factor
        );
        if oracle {
            s.push_str(&format!(", shooting={:e}, rtol={:e}", t.shooting, t.rtol));
        }
        s.push(')');
        meta.push("tolerances", s);
    }

    fn gate(&self, model: &ReducedModel) -> Result<ResonanceReport, Failure> {
        let l = model.mode;
        let tol_near = self.tol.tol_near_factor * model.spectrum.lambda(l)?.im.abs();
        Ok(check_nonresonance(&model.spectrum, l, self.tol.tol_abs, tol_near)?)
    }

    /// Builds the reduced model after the resonance gate passes.
    fn reduce(&self, system: &MechanicalSystem, mode: usize, order: usize) -> Result<ReducedModel, Failure> {
        let linear = ReducedModel::build(&system.linearized(), mode, 1)?;
        let report = self.gate(&linear)?;
        if !report.passes() {
            for line in violation_lines(&report) {
                eprintln!("{line}");
            }
            return Err(Failure {
                code: EXIT_RESONANCE,
                message: "resonance gate failed".into(),
            });
        }
        Ok(ReducedModel::build(system, mode, (order - 1) / 2)?)
    }

    fn shooting(&self) -> ShootingOptions {
        ShootingOptions {
            tol: self.tol.shooting,
            integrator: Dopri5::default().with_rtol(self.tol.rtol),
            ..ShootingOptions::default()
        }
    }

    fn write_table(&self, table: &Table, meta: &Meta) -> Result<(), Failure> {
        let text = match self.format {
            Format::Csv => table.csv(meta),
            Format::Json => table.json(meta),
        };
        Ok(emit(&text, self.output.as_deref())?)
    }

    fn write_doc<T: Serialize>(&self, meta: &Meta, data: &T) -> Result<(), Failure> {
        Ok(emit(&document(meta, data), self.output.as_deref())?)
    }
}

impl Profile {
    fn name(self) -> &'static str {
        match self {
            Profile::Default => "default",
            Profile::Strict => "strict",
            Profile::Fast => "fast",
        }
    }
}

fn violation_lines(r: &ResonanceReport) -> Vec<String> {
    let mut out = Vec::new();
    for (kind, list) in [
        ("inner", &r.inner_violations),
        ("outer", &r.outer_violations),
        ("near", &r.near_violations),
    ] {
        for v in list {
            out.push(format!(
                "{kind} resonance: (m1, m2) = ({}, {}), eigenvalue {}, distance {:e}",
                v.m1, v.m2, v.eigenvalue, v.distance
            ));
        }
    }
    out
}

fn grid(max: f64, points: usize) -> Vec<f64> {
    (1..=points).map(|i| max * i as f64 / points as f64).collect()
}

#[derive(Serialize)]
struct ComplexVec {
    re: Vec<f64>,
    im: Vec<f64>,
}

impl From<&DVector<Complex64>> for ComplexVec {
    fn from(v: &DVector<Complex64>) -> Self {
        Self {
            re: v.iter().map(|c| c.re).collect(),
            im: v.iter().map(|c| c.im).collect(),
        }
    }
}

#[derive(Serialize)]
struct Coefficient {
    m: usize,
    n: usize,
    #[serde(flatten)]
    value: ComplexVec,
}

#[derive(Serialize)]
struct SsmDoc {
    master_index: usize,
    order: usize,
    lambda: [f64; 2],
    beta: Vec<[f64; 2]>,
    w0: Vec<Coefficient>,
    r: f64,
    r_c: [f64; 2],
    omega: f64,
    epsilon: f64,
    w_plus: ComplexVec,
    w_minus: ComplexVec,
}

#[derive(Serialize)]
struct OrbitDoc {
    omega: f64,
    period: f64,
    stable: bool,
    floquet_multipliers: Vec<[f64; 2]>,
    residual: f64,
    times: Vec<f64>,
    states: Vec<Vec<f64>>,
    modal_amplitude_first_harmonic: f64,
    modal_peak: f64,
    /// `|x_j|` per state component for harmonics `j = 0..`.
    harmonics: Vec<HarmonicRow>,
}

#[derive(Serialize)]
struct HarmonicRow {
    j: i32,
    modal_amplitude: f64,
    abs: Vec<f64>,
}

fn run(cli: Cli) -> Result<(), Failure> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build()
        .map_err(|e| Failure {
            code: EXIT_NUMERICAL,
            message: e.to_string(),
        })?;
    let mut tol = cli.tolerances.tolerances();
    for (flag, value, slot) in [
        ("--tol-abs", cli.tol_abs, &mut tol.tol_abs),
        ("--tol-near", cli.tol_near, &mut tol.tol_near_factor),
    ] {
        if let Some(v) = value {
            if !(v > 0.0) {
                return Err(Failure {
                    code: EXIT_MODEL,
                    message: format!("{flag} must be positive"),
                });
            }
            *slot = v;
        }
    }
    let ctx = Ctx {
        format: cli.format,
        output: cli.output,
        profile: cli.tolerances,
        tol,
        strict: cli.strict,
        pool,
    };
    match cli.command {
        Command::Spectrum(a) => spectrum(&ctx, &a),
        Command::Check(a) => check(&ctx, &a),
        Command::Ssm {
            m,
            residual_scan,
            points,
        } => ssm(&ctx, &m, residual_scan, points),
        Command::Frf {
            m,
            eps,
            rho_max,
            points,
        } => frf(&ctx, &m, eps, rho_max, points),
        Command::Backbone { m, rho_max, points } => backbone(&ctx, &m, rho_max, points),
        Command::Boundaries { m, rho_max, points } => boundaries(&ctx, &m, rho_max, points),
        Command::Verify {
            m,
            eps,
            omega_range,
            orbit_at,
        } => verify(&ctx, &m, eps, omega_range, orbit_at),
        Command::Export { name } => {
            let sys = builtin_model(name, &ModelParams::new())?;
            Ok(emit(&serialize_model(&sys), ctx.output.as_deref())?)
        }
    }
}

fn spectrum(ctx: &Ctx, a: &ModelArg) -> Result<(), Failure> {
    let Loaded { system, mut meta } = ctx.load(&a.model, "spectrum")?;
    let model = ReducedModel::build(&system.linearized(), 1, 1)?;
    let s = &model.spectrum;
    meta.push("spectral_quotient_mode_1", ssm_backbone::spectral::spectral_quotient(s, 1)?.value);
    let mut t = Table::new(&["index", "re", "im", "natural_frequency", "damping_ratio"]);
    for (j, l) in s.eigenvalues.iter().enumerate() {
        t.push(vec![
            Cell::U(j + 1),
            Cell::F(l.re),
            Cell::F(l.im),
            Cell::F(s.natural_frequency(j)),
            Cell::F(s.damping_ratio(j)),
        ]);
    }
    ctx.write_table(&t, &meta)
}

fn check(ctx: &Ctx, a: &ModeArgs) -> Result<(), Failure> {
    let Loaded { system, mut meta } = ctx.load(&a.model.model, "check")?;
    let linear = ReducedModel::build(&system.linearized(), a.mode, 1)?;
    let report = ctx.gate(&linear)?;
    meta.push("mode", a.mode);
    ctx.push_tolerances(&mut meta, false);
    match ctx.format {
        Format::Json => ctx.write_doc(&meta, &report)?,
        Format::Csv => {
            let mut s = String::new();
            s.push_str(&format!(
                "mode {}: spectral quotient {}{}\n",
                report.master_index,
                report.spectral_quotient.value,
                if report.spectral_quotient.capped { " (capped)" } else { "" }
            ));
            for (name, ok, margin) in [
                ("inner", report.inner_ok, report.inner_margin),
                ("outer", report.outer_ok, report.outer_margin),
                ("near", report.near_ok, report.near_margin),
            ] {
                s.push_str(&format!(
                    "{name}: {} (margin {margin:e})\n",
                    if ok { "ok" } else { "violated" }
                ));
            }
            for line in violation_lines(&report) {
                s.push_str(&line);
                s.push('\n');
            }
            emit(&s, ctx.output.as_deref())?;
        }
    }
    if report.passes() {
        Ok(())
    } else {
        Err(Failure {
            code: EXIT_RESONANCE,
            message: "resonance gate failed".into(),
        })
    }
}

fn order_meta(meta: &mut Meta, m: &OrderArgs) {
    meta.push("mode", m.mode.mode);
    meta.push("order", m.order);
}

fn ssm(ctx: &Ctx, m: &OrderArgs, residual_scan: bool, points: usize) -> Result<(), Failure> {
    let Loaded { system, mut meta } = ctx.load(&m.mode.model.model, "ssm")?;
    let model = ctx.reduce(&system, m.mode.mode, m.order)?;
    order_meta(&mut meta, m);
    ctx.push_tolerances(&mut meta, false);
    if residual_scan {
        let res = InvarianceResidual::new(&model.ssm, &model.nonlinearity, &model.spectrum)?;
        meta.push("residual", "max over 16 angles of |invariance residual|");
        let mut t = Table::new(&["abs_z", "residual"]);
        let n = points.max(2);
        for i in 0..n {
            let s = 10f64.powf(-4.0 + 2.0 * i as f64 / (n - 1) as f64);
            let worst = (0..16)
                .map(|k| res.eval(Complex64::from_polar(s, PI * k as f64 / 8.0)))
                .fold(0.0, f64::max);
            t.push(vec![Cell::F(s), Cell::F(worst)]);
        }
        return ctx.write_table(&t, &meta);
    }
    let f = &system.forcing;
    let (omega, eps) = (f.frequency(), f.epsilon);
    meta.push("epsilon", eps);
    let forced = model.forced(omega, eps)?;
    let doc = SsmDoc {
        master_index: model.ssm.master_index,
        order: 2 * model.ssm.order_m + 1,
        lambda: [model.ssm.lambda_l.re, model.ssm.lambda_l.im],
        beta: model.ssm.beta.iter().map(|b| [b.re, b.im]).collect(),
        w0: model
            .ssm
            .w0
            .iter()
            .map(|(&(m, n), v)| Coefficient {
                m,
                n,
                value: v.into(),
            })
            .collect(),
        r: forced.r,
        r_c: [forced.r_c.re, forced.r_c.im],
        omega,
        epsilon: eps,
        w_plus: (&forced.w_plus).into(),
        w_minus: (&forced.w_minus).into(),
    };
    ctx.write_doc(&meta, &doc)
}

fn frf(ctx: &Ctx, m: &OrderArgs, eps: Option<f64>, rho_max: Option<f64>, points: usize) -> Result<(), Failure> {
    let Loaded { system, mut meta } = ctx.load(&m.mode.model.model, "frf")?;
    let model = ctx.reduce(&system, m.mode.mode, m.order)?;
    let eps = eps.unwrap_or(system.forcing.epsilon);
    order_meta(&mut meta, m);
    meta.push("epsilon", eps);
    ctx.push_tolerances(&mut meta, false);
    let sd = model.slow_dynamics();
    let r = model.r()?;
    let peaks = max_amplitude(&sd, r, eps)?;
    // the smallest peak is the resonance itself; larger ones sit on isolas of the truncated polynomial
    let first = peaks.iter().copied().fold(f64::INFINITY, f64::min);
    let rho_max = match rho_max {
        Some(r) => r,
        None if first.is_finite() => 1.2 * first,
        None => {
            return Err(Failure {
                code: EXIT_NUMERICAL,
                message: "no peak amplitude, pass --rho-max".into(),
            })
        }
    };
    let mut rho_grid = grid(rho_max, points.max(1));
    rho_grid.extend(peaks.iter().filter(|&&p| p <= rho_max));
    rho_grid.sort_by(f64::total_cmp);
    rho_grid.dedup();
    meta.push("peak_amplitudes", format!("{peaks:?}"));
    let sweep = frf_sweep(&sd, r, eps, &rho_grid)?;
    let mut labelled = Vec::new();
    for (i, b) in sweep.plus.iter().chain(&sweep.minus).enumerate() {
        let tag = match b.side {
            BranchSide::Plus => "plus",
            BranchSide::Minus => "minus",
        };
        for p in &b.points {
            labelled.push((format!("{tag}{i}"), *p));
        }
    }
    let rows: Vec<Result<Vec<Cell>, Error>> = ctx.pool.install(|| {
        labelled
            .par_iter()
            .map(|(label, p)| {
                let f = model.forced(p.omega, eps)?;
                let h = physical_harmonics(&f, p.rho, p.psi);
                let mut row = vec![
                    Cell::S(label.clone()),
                    Cell::F(p.omega),
                    Cell::F(p.rho),
                    Cell::F(p.psi),
                    Cell::B(p.stable),
                ];
                for j in 1..=3 {
                    row.push(Cell::F(modal_amplitude(&model.spectrum, &h, model.mode, j)?));
                }
                Ok(row)
            })
            .collect()
    });
    let mut t = Table::new(&[
        "branch",
        "omega",
        "rho",
        "psi",
        "stable",
        "modal_amp_1omega",
        "modal_amp_2omega",
        "modal_amp_3omega",
    ]);
    for row in rows {
        t.push(row?);
    }
    ctx.write_table(&t, &meta)
}

fn backbone(ctx: &Ctx, m: &OrderArgs, rho_max: f64, points: usize) -> Result<(), Failure> {
    let Loaded { system, mut meta } = ctx.load(&m.mode.model.model, "backbone")?;
    let model = ctx.reduce(&system, m.mode.mode, m.order)?;
    order_meta(&mut meta, m);
    meta.push("epsilon", "not used");
    ctx.push_tolerances(&mut meta, false);
    let mut t = Table::new(&["rho", "omega_max"]);
    for b in backbone_curve(&model.slow_dynamics(), &grid(rho_max, points.max(1))) {
        t.push(vec![Cell::F(b.rho_max), Cell::F(b.omega_max)]);
    }
    ctx.write_table(&t, &meta)
}

fn boundaries(ctx: &Ctx, m: &OrderArgs, rho_max: f64, points: usize) -> Result<(), Failure> {
    let Loaded { system, mut meta } = ctx.load(&m.mode.model.model, "boundaries")?;
    let model = ctx.reduce(&system, m.mode.mode, m.order)?;
    order_meta(&mut meta, m);
    meta.push("epsilon", "not used");
    ctx.push_tolerances(&mut meta, false);
    let sb = stability_boundaries(&model.slow_dynamics(), &grid(rho_max, points.max(1)));
    meta.push("critical_amplitudes", format!("{:?}", sb.critical_amplitudes));
    let mut t = Table::new(&["rho", "omega_crit_minus", "omega_crit_plus"]);
    for p in &sb.points {
        t.push(vec![Cell::F(p.rho), Cell::Opt(p.omega_crit_minus), Cell::Opt(p.omega_crit_plus)]);
    }
    ctx.write_table(&t, &meta)
}

fn verify(ctx: &Ctx, m: &OrderArgs, eps: Option<f64>, range: OmegaRange, orbit_at: Option<f64>) -> Result<(), Failure> {
    let Loaded { system, mut meta } = ctx.load(&m.mode.model.model, "verify")?;
    let model = ctx.reduce(&system, m.mode.mode, m.order)?;
    let eps = eps.unwrap_or(system.forcing.epsilon);
    order_meta(&mut meta, m);
    meta.push("epsilon", eps);
    meta.push("omega_range", format!("{}:{}:{}", range.start, range.end, range.points));
    ctx.push_tolerances(&mut meta, true);

    let omegas = range.grid();
    let opts = ContinuationOptions {
        shooting: ctx.shooting(),
        ..ContinuationOptions::default()
    };
    let width = if omegas.len() > 1 {
        (range.end - range.start) / (omegas.len() - 1) as f64
    } else {
        1e-3 * range.start
    };
    let (lo, hi) = match orbit_at {
        Some(w) => (range.start.min(w), range.end.max(w)),
        None => (range.start, range.end),
    };
    let branch = oracle_branch(&model, eps, (lo - 0.5 * width, hi + 0.5 * width), &opts)?;
    let fos = forced_system(&model, eps);
    if branch.terminated {
        eprintln!("warning: continuation stopped early at Omega = {}", branch.points.last().map_or(lo, |p| p.omega));
    }

    if let Some(w) = orbit_at {
        meta.push("orbit_at", w);
        let mut docs = Vec::new();
        for orbit in orbits_at(&fos, &branch, w, &opts.shooting) {
            let (amp, peak, h) = orbit_amplitudes(&model, &orbit)?;
            let harmonics = (0..=h.max_harmonic())
                .map(|j| {
                    Ok(HarmonicRow {
                        j,
                        modal_amplitude: modal_amplitude(&model.spectrum, &h, model.mode, j)?,
                        abs: h.get(j).map_or(Vec::new(), |v| v.iter().map(|c| c.norm()).collect()),
                    })
                })
                .collect::<Result<Vec<_>, Error>>()?;
            docs.push(OrbitDoc {
                omega: orbit.omega,
                period: orbit.period,
                stable: orbit.stable(),
                floquet_multipliers: orbit.floquet_multipliers.iter().map(|c| [c.re, c.im]).collect(),
                residual: orbit.residual,
                times: orbit.sample_times(),
                states: orbit.samples.iter().map(|x| x.iter().copied().collect()).collect(),
                modal_amplitude_first_harmonic: amp,
                modal_peak: peak,
                harmonics,
            });
        }
        return ctx.write_doc(&meta, &docs);
    }

    let grid_orbits = ctx.pool.install(|| {
        omegas
            .par_iter()
            .map(|&w| orbits_at(&fos, &branch, w, &opts.shooting))
            .collect::<Vec<_>>()
    });
    let folds: Vec<f64> = branch.fold_points.iter().map(|f| f.omega).collect();
    let report = compare_with_ssm(&model, eps, &omegas, &grid_orbits, &folds, EXCLUSION_WIDTHS)?;
    meta.push("amplitude", "first-harmonic modal amplitude of the master mode");
    meta.push("oracle_folds", format!("{:?}", report.oracle_folds));
    meta.push("ssm_folds", format!("{:?}", report.ssm_folds));
    meta.push(
        "max_stable_rel_error",
        format!("{:e} (rows with near_fold excluded)", report.max_stable_error()),
    );
    let mut t = Table::new(&[
        "omega",
        "rho_ssm",
        "rho_oracle",
        "rel_error",
        "stable_ssm",
        "stable_oracle",
        "peak_ssm",
        "peak_oracle",
        "max_multiplier",
        "near_fold",
    ]);
    for r in &report.rows {
        t.push(vec![
            Cell::F(r.omega),
            Cell::Opt(r.amp_ssm),
            Cell::F(r.amp_oracle),
            Cell::Opt(r.rel_error),
            Cell::OptB(r.stable_ssm),
            Cell::B(r.stable_oracle),
            Cell::Opt(r.peak_ssm),
            Cell::F(r.peak_oracle),
            Cell::F(r.max_multiplier),
            Cell::B(r.near_fold),
        ]);
    }
    ctx.write_table(&t, &meta)
}

fn main() -> ExitCode {
    // usage errors take exit code 1 so that 2 stays reserved for the resonance gate
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_MODEL } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
