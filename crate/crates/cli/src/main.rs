use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lowdisc::copula::{
    sandwich_bounds, FtdParams, Ftd, Integrand, Product, Sampler, SandwichResult, Sense, SinSum,
};
use lowdisc::discrepancy::{discrepancy_1d, discrepancy_1d_sorted_field, star_discrepancy_multi, DiscrepancyReport};
use lowdisc::exactfield::{rational_to_decimal, Rational};
use lowdisc::numeration::NumerationSystem;
use lowdisc::partitions::LSParams;
use lowdisc::sequences::{
    BetaHalton, Coord, Halton, Hammersley, KfMap, KfOrbit, Kronecker, LsSequence, Permutation, PointStream,
    VanDerCorput,
};
use lowdisc::FieldExt;
use serde_json::json;

#[derive(Parser)]
#[command(name = "lowdisc", version, about = "Low-discrepancy points, discrepancy, and copula bounds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Emit points of a sequence as CSV, one point per line.
    Generate(GenerateArgs),
    /// Star discrepancy (and extreme discrepancy in 1-D) as JSON.
    Discrepancy(DiscrepancyArgs),
    /// Bounds on the extremal value of an integral over all copulas.
    CopulaBound(CopulaArgs),
    /// Bounds on the first-to-default swap spread.
    Ftd(FtdArgs),
    /// Check the orbit and conjugacy identities.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Vdc,
    Halton,
    Hammersley,
    Kronecker,
    Ls,
    BetaHalton,
    KfOrbit,
}

#[derive(Args, Clone)]
struct SequenceArgs {
    #[arg(long, value_enum)]
    family: Option<Family>,
    /// Base for vdc.
    #[arg(long, default_value_t = 2)]
    base: u32,
    /// Digit permutation for vdc, e.g. `0,2,1`.
    #[arg(long, value_delimiter = ',')]
    perm: Option<Vec<u32>>,
    /// Bases for halton and hammersley.
    #[arg(long, value_delimiter = ',', default_value = "2,3")]
    bases: Vec<u32>,
    /// Kronecker frequencies.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    theta: Option<Vec<f64>>,
    #[arg(long = "L", default_value_t = 1)]
    l: u32,
    #[arg(long = "S", default_value_t = 1)]
    s: u32,
    /// Numeration coefficients for beta-halton, one system per `;`, e.g. `1,1;1,0,1`.
    #[arg(long, default_value = "1,1")]
    coeffs: String,
    /// Number of points.
    #[arg(long)]
    n: Option<u64>,
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    seq: SequenceArgs,
    /// Decimal places in the output.
    #[arg(long, default_value_t = 17)]
    precision: u32,
    /// Print exact coordinates where available.
    #[arg(long)]
    exact: bool,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct DiscrepancyArgs {
    /// CSV file with one point per line.
    #[arg(long, conflicts_with = "family")]
    input: Option<PathBuf>,
    #[command(flatten)]
    seq: SequenceArgs,
    /// Expected dimension.
    #[arg(long)]
    dim: Option<usize>,
    /// Exact 1-D computation for field-valued families.
    #[arg(long)]
    exact: bool,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum IntegrandName {
    SinSum,
    Product,
    Ftd,
}

#[derive(Clone, Copy, ValueEnum)]
enum SenseArg {
    Min,
    Max,
}

#[derive(Clone, Copy, ValueEnum)]
enum SamplerArg {
    Exact,
    Grid,
}

#[derive(Args)]
struct CopulaArgs {
    #[arg(long, value_enum)]
    integrand: IntegrandName,
    #[arg(long, value_enum, default_value = "max")]
    sense: SenseArg,
    /// Dyadic level: the grid has 2^level cells per axis.
    #[arg(long)]
    level: u32,
    /// Cell extrema strategy; defaults to exact when the integrand supports it.
    #[arg(long, value_enum)]
    sampler: Option<SamplerArg>,
    /// Points per axis for the grid sampler.
    #[arg(long, default_value_t = 8)]
    g: usize,
    /// Write the support segments of the upper-bound shuffle as CSV.
    #[arg(long)]
    support: Option<PathBuf>,
    /// Include wall-clock time in the output.
    #[arg(long)]
    timing: bool,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct FtdArgs {
    #[arg(long, default_value_t = 1.0 / 3.0)]
    lambda1: f64,
    #[arg(long, default_value_t = 0.5)]
    lambda2: f64,
    #[arg(long, default_value_t = 0.5)]
    r1: f64,
    #[arg(long, default_value_t = 0.7)]
    r2: f64,
    #[arg(long, default_value_t = 2.0)]
    maturity: f64,
    #[arg(long, default_value_t = 0.05)]
    rate: f64,
    #[arg(long, value_delimiter = ',', default_value = "0,1,2")]
    times: Vec<f64>,
    #[arg(long, default_value_t = 10)]
    level: u32,
    #[arg(long, default_value_t = 8)]
    g: usize,
    #[arg(long)]
    timing: bool,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 10_000)]
    n: u64,
}

enum Failure {
    Usage(String),
    Compute(String),
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn compute(e: impl std::fmt::Display) -> Failure {
    Failure::Compute(e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("").trim_start_matches("error: ");
            return report(Failure::Usage(first.to_string()));
        }
    };
    match configure_threads().and_then(|()| run(cli.command)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => report(f),
    }
}

fn report(f: Failure) -> ExitCode {
    let (kind, msg, code) = match f {
        Failure::Usage(m) => ("usage", m, 2),
        Failure::Compute(m) => ("computation", m, 1),
    };
    eprintln!("{}", json!({ "error": kind, "message": msg }));
    ExitCode::from(code)
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var("LOWDISC_THREADS") else {
        return Ok(());
    };
    let threads: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| usage(format!("LOWDISC_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(compute)
}

fn run(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Generate(a) => generate(a),
        Command::Discrepancy(a) => discrepancy(a),
        Command::CopulaBound(a) => copula_bound(a),
        Command::Ftd(a) => ftd(a),
        Command::Verify(a) => verify(a),
    }
}

fn write_output(path: Option<&PathBuf>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| compute(format!("{}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(compute)
        }
    }
}

fn parse_systems(spec: &str) -> Result<Vec<NumerationSystem>, Failure> {
    spec.split(';')
        .map(|sys| {
            let coeffs: Vec<u32> = sys
                .split(',')
                .map(|c| c.trim().parse().map_err(|_| usage(format!("bad coefficient in {sys:?}"))))
                .collect::<Result<_, _>>()?;
            NumerationSystem::new(&coeffs).map_err(|e| usage(e.to_string()))
        })
        .collect()
}

fn build_stream(a: &SequenceArgs, family: Family, count: u64) -> Result<Box<dyn PointStream>, Failure> {
    let stream: Box<dyn PointStream> = match family {
        Family::Vdc => {
            let sigma = match &a.perm {
                Some(p) => Some(Permutation::new(p.clone()).map_err(|e| usage(e.to_string()))?),
                None => None,
            };
            Box::new(VanDerCorput::new(a.base, sigma).map_err(|e| usage(e.to_string()))?)
        }
        Family::Halton => Box::new(Halton::new(a.bases.clone()).map_err(|e| usage(e.to_string()))?),
        Family::Hammersley => Box::new(Hammersley::new(count, a.bases.clone()).map_err(|e| usage(e.to_string()))?),
        Family::Kronecker => {
            let thetas = a.theta.clone().ok_or_else(|| usage("kronecker needs --theta"))?;
            if thetas.is_empty() || thetas.iter().any(|t| !t.is_finite()) {
                return Err(usage("--theta must be finite numbers"));
            }
            Box::new(Kronecker::new(thetas))
        }
        Family::Ls => Box::new(LsSequence::new(LSParams::new(a.l, a.s).map_err(|e| usage(e.to_string()))?)),
        Family::BetaHalton => Box::new(BetaHalton::new(parse_systems(&a.coeffs)?)),
        Family::KfOrbit => {
            let map = KfMap::new();
            let start = map.alpha().field().zero();
            Box::new(KfOrbit::new(map, start))
        }
    };
    Ok(stream)
}

fn point_count(a: &SequenceArgs) -> Result<u64, Failure> {
    match a.n {
        Some(0) => Err(usage("--n must be at least 1")),
        Some(n) => Ok(n),
        None => Err(usage("--n is required")),
    }
}

fn format_coord(c: &Coord, precision: u32, exact: bool) -> String {
    if exact {
        if let Some(s) = c.exact() {
            return s;
        }
    }
    match c {
        Coord::Rational(q) => rational_to_decimal(q, precision),
        Coord::Field(x) => x.to_decimal(precision),
        Coord::Float(v) => match Rational::from_float(*v) {
            Some(q) => rational_to_decimal(&q, precision),
            None => v.to_string(),
        },
    }
}

fn generate(a: GenerateArgs) -> Result<(), Failure> {
    if !(6..=50).contains(&a.precision) {
        return Err(usage("--precision must lie in [6, 50]"));
    }
    let family = a.seq.family.ok_or_else(|| usage("--family is required"))?;
    let count = point_count(&a.seq)?;
    let mut stream = build_stream(&a.seq, family, count)?;
    let mut text = String::new();
    for n in 0..count {
        let line: Vec<String> = stream.point(n).iter().map(|c| format_coord(c, a.precision, a.exact)).collect();
        let _ = writeln!(text, "{}", line.join(","));
    }
    write_output(a.output.as_ref(), &text)
}

fn read_points(path: &PathBuf) -> Result<Vec<Vec<f64>>, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let mut points = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row: Result<Vec<f64>, _> = line.split(',').map(|t| t.trim().parse::<f64>()).collect();
        match row {
            Ok(r) => points.push(r),
            // a header line is allowed
            Err(_) if k == 0 && points.is_empty() => continue,
            Err(_) => return Err(usage(format!("line {}: not a list of numbers", k + 1))),
        }
    }
    Ok(points)
}

fn report_json(r: &DiscrepancyReport) -> String {
    let mut s = serde_json::to_string(r).expect("report serializes");
    s.push('\n');
    s
}

fn discrepancy(a: DiscrepancyArgs) -> Result<(), Failure> {
    let report = if let Some(path) = &a.input {
        let points = read_points(path)?;
        measure(&points, a.dim)?
    } else {
        let family = a.seq.family.ok_or_else(|| usage("either --input or --family is required"))?;
        let count = point_count(&a.seq)?;
        let mut stream = build_stream(&a.seq, family, count)?;
        if a.exact && stream.dim() == 1 {
            let xs: Vec<_> = (0..count)
                .map(|n| match stream.point(n).pop() {
                    Some(Coord::Field(x)) => Ok(x),
                    _ => Err(usage("--exact needs a field-valued 1-D family (ls, kf-orbit, beta-halton)")),
                })
                .collect::<Result<_, _>>()?;
            discrepancy_1d_sorted_field(&xs).map_err(compute)?
        } else {
            measure(&stream.take_f64(count), a.dim)?
        }
    };
    write_output(a.output.as_ref(), &report_json(&report))
}

fn measure(points: &[Vec<f64>], dim: Option<usize>) -> Result<DiscrepancyReport, Failure> {
    let s = points.first().map(Vec::len).ok_or_else(|| usage("no points"))?;
    if let Some(d) = dim {
        if d != s {
            return Err(usage(format!("expected dimension {d}, points have {s}")));
        }
    }
    if s == 1 {
        let xs: Vec<f64> = points.iter().map(|p| p[0]).collect();
        discrepancy_1d(&xs).map_err(compute)
    } else {
        star_discrepancy_multi(points).map_err(compute)
    }
}

fn sandwich_json(r: &SandwichResult) -> serde_json::Value {
    json!({
        "grid": r.cells,
        "lb": r.lb,
        "ub": r.ub,
        "gap_bound": r.gap_bound,
        "hard": r.hard,
        "sigma": r.ub_shuffle.cycles(),
        "sigma_lb": r.lb_shuffle.cycles(),
    })
}

fn sense_of(s: SenseArg) -> Sense {
    match s {
        SenseArg::Min => Sense::Min,
        SenseArg::Max => Sense::Max,
    }
}

fn copula_bound(a: CopulaArgs) -> Result<(), Failure> {
    if a.level > 12 {
        return Err(usage("--level must be at most 12"));
    }
    let (f, name): (Box<dyn Integrand>, &str) = match a.integrand {
        IntegrandName::SinSum => (Box::new(SinSum), "sin-sum"),
        IntegrandName::Product => (Box::new(Product), "product"),
        IntegrandName::Ftd => (Box::new(Ftd(FtdParams::default())), "ftd"),
    };
    let sampler = match (a.sampler, a.integrand) {
        (Some(SamplerArg::Exact), IntegrandName::Ftd) => return Err(usage("ftd has no exact cell extrema")),
        (Some(SamplerArg::Exact), _) | (None, IntegrandName::SinSum | IntegrandName::Product) => Sampler::Exact,
        (Some(SamplerArg::Grid), _) | (None, IntegrandName::Ftd) => Sampler::Grid(a.g.max(1)),
    };
    let start = Instant::now();
    let r = sandwich_bounds(f.as_ref(), a.level, sense_of(a.sense), sampler).map_err(compute)?;
    let elapsed = start.elapsed();
    let mut out = sandwich_json(&r);
    out["integrand"] = json!(name);
    out["sense"] = json!(match a.sense {
        SenseArg::Min => "min",
        SenseArg::Max => "max",
    });
    out["n"] = json!(a.level);
    out["sampler"] = json!(match sampler {
        Sampler::Exact => "exact".to_string(),
        Sampler::Grid(g) => format!("grid-{g}"),
    });
    if a.timing {
        out["runtime_ms"] = json!(elapsed.as_millis() as u64);
    }
    if let Some(path) = &a.support {
        let mut csv = String::from("x0,y0,x1,y1\n");
        for [x0, y0, x1, y1] in r.ub_shuffle.segments() {
            let _ = writeln!(csv, "{x0},{y0},{x1},{y1}");
        }
        write_output(Some(path), &csv)?;
    }
    write_output(a.output.as_ref(), &format!("{out}\n"))
}

fn ftd(a: FtdArgs) -> Result<(), Failure> {
    if a.level > 12 {
        return Err(usage("--level must be at most 12"));
    }
    let params = FtdParams {
        lambda1: a.lambda1,
        lambda2: a.lambda2,
        recovery1: a.r1,
        recovery2: a.r2,
        maturity: a.maturity,
        rate: a.rate,
        payment_times: a.times,
    };
    params.validate().map_err(|e| usage(e.to_string()))?;
    let f = Ftd(params.clone());
    let sampler = Sampler::Grid(a.g.max(1));
    let start = Instant::now();
    let hi = sandwich_bounds(&f, a.level, Sense::Max, sampler).map_err(compute)?;
    let lo = sandwich_bounds(&f, a.level, Sense::Min, sampler).map_err(compute)?;
    let elapsed = start.elapsed();
    let mut out = json!({
        "params": params,
        "level": a.level,
        "g": a.g.max(1),
        "max": { "lb": hi.lb, "ub": hi.ub },
        "min": { "lb": lo.lb, "ub": lo.ub },
    });
    if a.timing {
        out["runtime_ms"] = json!(elapsed.as_millis() as u64);
    }
    write_output(a.output.as_ref(), &format!("{out}\n"))
}

fn verify(a: VerifyArgs) -> Result<(), Failure> {
    if a.n == 0 {
        return Err(usage("--n must be at least 1"));
    }
    let n = a.n as usize;
    let map = KfMap::new();
    let orbit = map.orbit(&map.alpha().field().zero(), n).map_err(compute)?;
    let points = lowdisc::sequences::ls_points(&LSParams::new(1, 1).map_err(compute)?, n);
    let orbit_ok = orbit == points;

    let sys = NumerationSystem::new(&[1, 1]).map_err(compute)?;
    let beta_map = KfMap::with_alpha(sys.beta().inverse().map_err(compute)?).map_err(compute)?;
    let mut digits = sys.greedy_expand_u64(0);
    let mut conj_ok = true;
    for _ in 0..a.n {
        let next = sys.odometer_step(&digits);
        if beta_map.apply(&sys.monna_map(&digits)).map_err(compute)? != sys.monna_map(&next) {
            conj_ok = false;
            break;
        }
        digits = next;
    }
    let verdict = |ok: bool| if ok { "PASS" } else { "FAIL" };
    println!("{} orbit-identity n={}", verdict(orbit_ok), a.n);
    println!("{} conjugacy n={}", verdict(conj_ok), a.n);
    if orbit_ok && conj_ok {
        Ok(())
    } else {
        Err(compute("verification failed"))
    }
}
