//! The `skbreak` command line.

mod svg;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::continuation::{classify, locate_folds, ContinuationSettings, CurveClass};
use crate::dynamics::{flow, FlowSettings};
use crate::error::{Error, Result};
use crate::family::{pattern_catalog, FamilySpec, ModelSign};
use crate::rep::{enumerate_axes, Dim, HPoint};
use crate::symbreak::{
    fold_detect, gamma_closed, localized_family, max_fold_p, plane_curves, plane_range, planar_system, planar_zeros,
    verify_minimal_model, PlaneField, VerifyConfig, VerifyStatus,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "skbreak", version, about = "Forced symmetry breaking of S_k-equivariant bifurcations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List the axes of symmetry (JSON).
    Axes(RunConfig),
    /// Signed indexed branching pattern of the unperturbed family.
    Pattern(RunConfig),
    /// Planar zeros on a lambda grid (CSV: lambda,u,v,index,plane_p).
    Planar(RunConfig),
    /// Closed-form against numeric fold values.
    Gamma(RunConfig),
    /// Count crossing curves and folds and compare with the prediction (JSON).
    Verify(RunConfig),
    /// Continue every curve of one plane across the window (CSV).
    Continue(RunConfig),
    /// Integrate the flow from a point and classify where it ends.
    Flow(FlowArgs),
    /// Bifurcation diagram (lambda, signed |x|) per plane (SVG).
    Diagram(RunConfig),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum KindArg {
    Odd,
    EvenMinus,
    EvenPlus,
    PerturbedOdd,
    PerturbedEven,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Svg,
}

#[derive(Debug, Clone, Args)]
pub struct RunConfig {
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    /// Perturbation size; defaults to 1e-2 (odd k <= 7), 5e-3 (even k <= 6), 1e-3 otherwise.
    #[arg(long)]
    pub eta: Option<f64>,
    /// Localization budget; even kinds default to 4 eta.
    #[arg(long)]
    pub eta0: Option<f64>,
    /// Defaults to perturbed-odd or perturbed-even by the parity of k.
    #[arg(long, value_enum)]
    pub kind: Option<KindArg>,
    /// Defaults to -2 gamma_{k,1}.
    #[arg(long, allow_negative_numbers = true)]
    pub lambda_min: Option<f64>,
    /// Defaults to 2 gamma_{k,1}.
    #[arg(long, allow_negative_numbers = true)]
    pub lambda_max: Option<f64>,
    /// Number of lambda samples for grid-based commands.
    #[arg(long, default_value_t = 41)]
    pub grid: usize,
    /// Plane label; all planes when omitted.
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct FlowArgs {
    #[command(flatten)]
    pub run: RunConfig,
    #[arg(long, allow_negative_numbers = true, default_value_t = -0.3)]
    pub lambda: f64,
    /// Initial point, comma-separated coordinates summing to zero; random (from --seed) when omitted.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub x0: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1e3)]
    pub horizon: f64,
}

impl RunConfig {
    pub fn dim(&self) -> Result<Dim> {
        Dim::new(self.k)
    }

    pub fn kind(&self) -> Result<KindArg> {
        let k = self.dim()?;
        Ok(self.kind.unwrap_or(if k.is_odd() { KindArg::PerturbedOdd } else { KindArg::PerturbedEven }))
    }

    pub fn eta(&self) -> Result<f64> {
        let k = self.dim()?;
        let eta = self.eta.unwrap_or(match (k.is_odd(), k.k()) {
            (true, 0..=7) => 1e-2,
            (false, 0..=6) => 5e-3,
            _ => 1e-3,
        });
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::OutOfRange { what: "eta", value: eta, range: "(0, inf)".into() });
        }
        Ok(eta)
    }

    pub fn sign(&self) -> Result<ModelSign> {
        Ok(if self.kind()? == KindArg::EvenPlus { ModelSign::Plus } else { ModelSign::Minus })
    }

    /// The family selected by --kind, validated.
    pub fn family(&self) -> Result<FamilySpec> {
        let k = self.dim()?;
        let eta = self.eta()?;
        match self.kind()? {
            KindArg::Odd => {
                if !k.is_odd() {
                    return Err(Error::Unsupported(format!("--kind odd needs odd k, got {k}")));
                }
                Ok(FamilySpec::odd_quadratic(k))
            }
            KindArg::EvenMinus => FamilySpec::even_model(k, ModelSign::Minus),
            KindArg::EvenPlus => FamilySpec::even_model(k, ModelSign::Plus),
            KindArg::PerturbedOdd => {
                if !k.is_odd() {
                    return Err(Error::Unsupported(format!("--kind perturbed-odd needs odd k, got {k}")));
                }
                match self.eta0 {
                    Some(e0) => localized_family(k, eta, e0, ModelSign::Minus),
                    None => FamilySpec::perturbed_odd(k, eta),
                }
            }
            KindArg::PerturbedEven => localized_family(k, eta, self.eta0.unwrap_or(4.0 * eta), ModelSign::Minus),
        }
    }

    pub fn window(&self) -> Result<(f64, f64)> {
        let k = self.dim()?;
        let g = gamma_closed(k, 1, self.eta()?)?;
        let lo = self.lambda_min.unwrap_or(-2.0 * g);
        let hi = self.lambda_max.unwrap_or(2.0 * g);
        if !(lo < hi) {
            return Err(Error::InvalidArgument(format!("empty lambda window [{lo}, {hi}]")));
        }
        Ok((lo, hi))
    }

    fn lambda_grid(&self) -> Result<Vec<f64>> {
        let (lo, hi) = self.window()?;
        if self.grid < 2 {
            return Err(Error::InvalidArgument("--grid needs at least 2 points".into()));
        }
        let n = self.grid - 1;
        Ok((0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect())
    }

    fn planes(&self, spec: &FamilySpec) -> Result<Vec<usize>> {
        let range = plane_range(spec);
        match self.p {
            Some(p) if range.contains(&p) => Ok(vec![p]),
            Some(p) => Err(Error::InvalidArgument(format!("--p {p} outside {}..={}", range.start(), range.end()))),
            None => Ok(range.collect()),
        }
    }

    fn format(&self, default: Format, allowed: &[Format]) -> Result<Format> {
        let f = self.format.unwrap_or(default);
        if allowed.contains(&f) {
            Ok(f)
        } else {
            Err(Error::InvalidArgument(format!("format {f:?} not available for this command")))
        }
    }
}

/// Result of one command: the output text and the exit status it implies.
pub struct Outcome {
    pub text: String,
    pub status: i32,
}

impl Outcome {
    fn ok(text: String) -> Self {
        Self { text, status: EXIT_OK }
    }
}

/// Round-trip float formatting with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn json<T: Serialize>(v: &T) -> Result<String> {
    serde_json::to_string_pretty(v)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| Error::Internal(e.to_string()))
}

pub fn cmd_axes(cfg: &RunConfig) -> Result<Outcome> {
    cfg.format(Format::Json, &[Format::Json])?;
    Ok(Outcome::ok(json(&enumerate_axes(cfg.dim()?))?))
}

#[derive(Serialize)]
struct PatternRow {
    p: usize,
    sign: String,
    index: usize,
    multiplicity: u128,
    speed: f64,
    lambda_exponent: u32,
}

pub fn cmd_pattern(cfg: &RunConfig) -> Result<Outcome> {
    let spec = match cfg.kind()? {
        KindArg::Odd | KindArg::PerturbedOdd => FamilySpec::odd_quadratic(cfg.dim()?),
        KindArg::EvenPlus => FamilySpec::even_model(cfg.dim()?, ModelSign::Plus)?,
        KindArg::EvenMinus | KindArg::PerturbedEven => FamilySpec::even_model(cfg.dim()?, ModelSign::Minus)?,
    };
    let pattern = pattern_catalog(&spec)?;
    let rows: Vec<PatternRow> = pattern
        .entries
        .iter()
        .map(|e| PatternRow {
            p: e.branch.p,
            sign: serde_json::to_value(e.branch.sign).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default(),
            index: e.branch.index,
            multiplicity: e.multiplicity,
            speed: e.branch.param.speed,
            lambda_exponent: e.branch.param.lambda_exponent,
        })
        .collect();
    match cfg.format(Format::Csv, &[Format::Csv, Format::Json])? {
        Format::Json => Ok(Outcome::ok(json(&serde_json::json!({
            "k": pattern.k,
            "total_branches": pattern.total_branches,
            "entries": rows,
        }))?)),
        _ => {
            let mut s = String::from("p,sign,index,multiplicity,speed,lambda_exponent\n");
            for r in rows {
                let _ = writeln!(s, "{},{},{},{},{},{}", r.p, r.sign, r.index, r.multiplicity, fmt_f64(r.speed), r.lambda_exponent);
            }
            Ok(Outcome::ok(s))
        }
    }
}

fn planar_cubic(kind: KindArg) -> bool {
    matches!(kind, KindArg::EvenMinus | KindArg::EvenPlus | KindArg::PerturbedEven)
}

pub fn cmd_planar(cfg: &RunConfig) -> Result<Outcome> {
    cfg.format(Format::Csv, &[Format::Csv])?;
    let spec = cfg.family()?;
    let cubic = planar_cubic(cfg.kind()?);
    let mut s = String::from("lambda,u,v,index,plane_p\n");
    for p in cfg.planes(&spec)? {
        let sys = planar_system(spec.k, p, spec.eta(), cubic)?;
        for l in cfg.lambda_grid()? {
            for z in planar_zeros(&sys, l) {
                let idx = z.index.map(|i| i.to_string()).unwrap_or_default();
                let _ = writeln!(s, "{},{},{},{idx},{p}", fmt_f64(l), fmt_f64(z.u), fmt_f64(z.v));
            }
        }
    }
    Ok(Outcome::ok(s))
}

#[derive(Debug, Serialize)]
pub struct GammaRow {
    pub p: usize,
    pub closed_form: f64,
    pub numeric: Option<f64>,
    pub rel_error: Option<f64>,
}

/// Positive-side fold values from the planar systems against gamma_{k,p}.
pub fn gamma_table(k: Dim, eta: f64) -> Result<Vec<GammaRow>> {
    let g1 = gamma_closed(k, 1, eta)?;
    let mut rows = Vec::new();
    for p in 1..=max_fold_p(k) {
        let closed = gamma_closed(k, p, eta)?;
        let sys = planar_system(k, p.max(2), eta, false)?;
        let numeric = fold_detect(&sys, 0.0, 2.0 * g1)?
            .into_iter()
            .filter(|f| f.on_l1 == (p == 1))
            .map(|f| f.lambda)
            .min_by(|a, b| (a - closed).abs().total_cmp(&(b - closed).abs()));
        let rel_error = numeric.map(|n| ((n - closed) / closed).abs());
        rows.push(GammaRow { p, closed_form: closed, numeric, rel_error });
    }
    Ok(rows)
}

pub fn cmd_gamma(cfg: &RunConfig) -> Result<Outcome> {
    let k = cfg.dim()?;
    if !k.is_odd() {
        return Err(Error::Unsupported("closed-form folds are tabulated for odd k".into()));
    }
    let rows = gamma_table(k, cfg.eta()?)?;
    match cfg.format(Format::Csv, &[Format::Csv, Format::Json])? {
        Format::Json => Ok(Outcome::ok(json(&rows)?)),
        _ => {
            let mut s = String::from("p,closed_form,numeric,rel_error\n");
            for r in rows {
                let opt = |x: Option<f64>| x.map(fmt_f64).unwrap_or_default();
                let _ = writeln!(s, "{},{},{},{}", r.p, fmt_f64(r.closed_form), opt(r.numeric), opt(r.rel_error));
            }
            Ok(Outcome::ok(s))
        }
    }
}

pub fn cmd_verify(cfg: &RunConfig) -> Result<Outcome> {
    cfg.format(Format::Json, &[Format::Json])?;
    let k = cfg.dim()?;
    let kind = cfg.kind()?;
    let ok_kind = if k.is_odd() { kind == KindArg::PerturbedOdd } else { kind != KindArg::Odd && kind != KindArg::PerturbedOdd };
    if !ok_kind {
        return Err(Error::Unsupported(format!("verify needs a perturbed kind matching the parity of k = {k}")));
    }
    let vc = VerifyConfig {
        k,
        eta: cfg.eta()?,
        eta0: cfg.eta0,
        sign: cfg.sign()?,
        window: Some(cfg.window()?),
    };
    let report = verify_minimal_model(&vc)?;
    let status = match report.status {
        VerifyStatus::Pass => EXIT_OK,
        VerifyStatus::Fail => EXIT_FAIL,
        VerifyStatus::NumericalFailure => EXIT_NUMERICAL,
    };
    Ok(Outcome { text: json(&report)?, status })
}

fn class_label(c: &CurveClass) -> &'static str {
    match c {
        CurveClass::Crossing { .. } => "crossing",
        CurveClass::FoldTerminated { .. } => "fold_terminated",
        CurveClass::Open => "open",
    }
}

pub fn cmd_continue(cfg: &RunConfig) -> Result<Outcome> {
    cfg.format(Format::Csv, &[Format::Csv])?;
    let spec = cfg.family()?;
    let (lo, hi) = cfg.window()?;
    let settings = ContinuationSettings::with_window(lo, hi);
    let mut s = String::from("plane_p,curve,class,lambda,u,v,norm,index,det_sign\n");
    for p in cfg.planes(&spec)? {
        let field = PlaneField::for_family(&spec, p)?;
        for (i, c) in plane_curves(&field, p == 2, &settings)?.iter().enumerate() {
            let class = class_label(&classify(c));
            for pt in &c.points {
                let norm = field.lift(&pt.x).norm();
                let _ = writeln!(
                    s,
                    "{p},{i},{class},{},{},{},{},{},{}",
                    fmt_f64(pt.lambda),
                    fmt_f64(pt.x[0]),
                    fmt_f64(pt.x[1]),
                    fmt_f64(norm),
                    pt.index,
                    pt.det_sign
                );
            }
        }
    }
    Ok(Outcome::ok(s))
}

/// Flow output: CSV trajectory plus the classification as JSON on a separate channel.
pub struct FlowOutcome {
    pub csv: String,
    pub classification: String,
}

pub fn cmd_flow(args: &FlowArgs) -> Result<FlowOutcome> {
    let cfg = &args.run;
    cfg.format(Format::Csv, &[Format::Csv])?;
    let spec = cfg.family()?;
    let k = spec.k.k();
    let x0 = match &args.x0 {
        Some(v) if v.len() == k => HPoint::new(v.clone())?,
        Some(v) => return Err(Error::InvalidArgument(format!("--x0 has {} coordinates, expected {k}", v.len()))),
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let raw: Vec<f64> = (0..k).map(|_| rng.gen_range(-1.0..1.0)).collect();
            HPoint::from_slice_projected(&raw).normalized()?.scale(0.05)
        }
    };
    let settings = FlowSettings { horizon: args.horizon, ..FlowSettings::default() };
    let r = flow(&spec, &x0, args.lambda, &settings)?;
    let mut csv = String::from("t");
    for i in 1..=k {
        let _ = write!(csv, ",x{i}");
    }
    csv.push_str(",potential\n");
    for (j, (t, x)) in r.trajectory.times.iter().zip(&r.trajectory.states).enumerate() {
        csv.push_str(&fmt_f64(*t));
        for c in x {
            let _ = write!(csv, ",{}", fmt_f64(*c));
        }
        let pot = r.potential.as_ref().map(|p| fmt_f64(p[j])).unwrap_or_default();
        let _ = writeln!(csv, ",{pot}");
    }
    let classification = json(&serde_json::json!({
        "lambda": args.lambda,
        "stop": r.trajectory.stop,
        "class": r.class,
        "endpoint": r.endpoint,
        "potential_monotone": r.potential_monotone,
        "steps": r.trajectory.times.len() - 1,
    }))?;
    Ok(FlowOutcome { csv, classification })
}

pub fn cmd_diagram(cfg: &RunConfig) -> Result<Outcome> {
    cfg.format(Format::Svg, &[Format::Svg])?;
    let spec = cfg.family()?;
    let (lo, hi) = cfg.window()?;
    let settings = ContinuationSettings::with_window(lo, hi);
    let e1 = crate::rep::eps(spec.k, 1)?;
    let mut series = Vec::new();
    let mut folds = Vec::new();
    for p in cfg.planes(&spec)? {
        let field = PlaneField::for_family(&spec, p)?;
        for c in plane_curves(&field, p == 2, &settings)? {
            let signed = |x: &[f64]| {
                let pt = field.lift(x);
                pt.norm().copysign(pt.dot(&e1))
            };
            series.push(svg::Series { group: p, points: c.points.iter().map(|q| (q.lambda, signed(&q.x))).collect() });
            for f in locate_folds(&field, &c, &settings)? {
                folds.push((f.lambda, signed(&f.x)));
            }
        }
    }
    let title = format!("k = {}, eta = {}", spec.k, spec.eta());
    Ok(Outcome::ok(svg::render(&title, (lo, hi), &series, &folds)))
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidArgument(_)
        | Error::OutOfRange { .. }
        | Error::NotInHyperplane { .. }
        | Error::NonUnit { .. }
        | Error::TooLarge { .. }
        | Error::Unsupported(_) => EXIT_USAGE,
        _ => EXIT_NUMERICAL,
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> std::io::Result<()> {
    match out {
        Some(path) => std::fs::write(path, text),
        None => std::io::stdout().write_all(text.as_bytes()),
    }
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let (out, result) = match &cli.command {
        Command::Flow(a) => {
            let r = cmd_flow(a).map(|f| {
                let to_file = a.run.out.is_some();
                if to_file {
                    println!("{}", f.classification.trim_end());
                } else {
                    eprintln!("{}", f.classification.trim_end());
                }
                Outcome::ok(f.csv)
            });
            (&a.run.out, r)
        }
        Command::Axes(c) => (&c.out, cmd_axes(c)),
        Command::Pattern(c) => (&c.out, cmd_pattern(c)),
        Command::Planar(c) => (&c.out, cmd_planar(c)),
        Command::Gamma(c) => (&c.out, cmd_gamma(c)),
        Command::Verify(c) => (&c.out, cmd_verify(c)),
        Command::Continue(c) => (&c.out, cmd_continue(c)),
        Command::Diagram(c) => (&c.out, cmd_diagram(c)),
    };
    match result {
        Ok(o) => match emit(out, &o.text) {
            Ok(()) => o.status,
            Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => o.status,
            Err(e) => {
                eprintln!("error: cannot write output: {e}");
                EXIT_USAGE
            }
        },
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
