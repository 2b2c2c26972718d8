use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use palatini::chow::degree_row;
use palatini::incidence::{coordinate_identity, fiber, fiber_of_x, sample_y, scroll_line, IncidenceError};
use palatini::scroll::{genericity_check, instance_random, pf_det_check, PalatiniInstance};
use palatini::tangent::{self, Route, TangentError, TangentOptions};
use palatini::{Field, Scalar, VERSION};

const EXIT_IDENTITY: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_PROBE: u8 = 3;

#[derive(Parser)]
#[command(name = "palatini", version, about = "Exact computations for Palatini scrolls")]
struct Cli {
    /// Progress messages on stderr
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded random instance and check its genericity
    Gen(GenArgs),
    /// Table of scroll degrees from the closed formula and from Chern classes
    Degree(DegreeArgs),
    /// Print the pfaffian of M and check Pf² = det at random points
    Pfaffian(PfaffianArgs),
    /// Run the identity checks, genericity probes and incidence round trips
    Verify(VerifyArgs),
    /// Sample points of Y with their fibers
    Sample(SampleArgs),
    /// Dimension of the Hilbert scheme tangent space at X
    Tangent(TangentArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    m: usize,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    p: u64,
    /// Extension degree of the field
    #[arg(long, default_value_t = 1)]
    e: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Samples per genericity probe
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    /// Instance file; without it the instance goes to stdout and the report to stderr
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Tsv,
}

#[derive(Args)]
struct DegreeArgs {
    #[arg(long, default_value_t = 2)]
    m_min: usize,
    /// Defaults to k + 1 for each k
    #[arg(long)]
    m_max: Option<usize>,
    #[arg(long, default_value_t = 2)]
    k_min: usize,
    #[arg(long, default_value_t = 8)]
    k_max: usize,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PfaffianArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value_t = 50)]
    points: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    /// Sample Y over F_{p^ext}
    #[arg(long, default_value_t = 1)]
    ext: usize,
    /// Y points used for the incidence checks
    #[arg(long, default_value_t = 20)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value_t = 1)]
    ext: usize,
    #[arg(long, default_value_t = 10)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum RouteArg {
    Auto,
    Direct,
    Localized,
}

#[derive(Args)]
struct TangentArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Highest syzygy degree imposed; defaults to m + 3
    #[arg(long)]
    cap: Option<usize>,
    #[arg(long, value_enum, default_value_t = RouteArg::Auto)]
    route: RouteArg,
    #[arg(long, default_value_t = tangent::DEFAULT_MAX_UNKNOWNS)]
    max_unknowns: usize,
    /// Skip the deformation lower bound
    #[arg(long)]
    no_witness: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// A failed command: exit code and message.
struct Failure(u8, String);

impl Failure {
    fn usage(msg: impl ToString) -> Failure {
        Failure(EXIT_USAGE, msg.to_string())
    }
}

type Outcome = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = palatini::configure_threads();
    let verbose = cli.verbose;
    let log = |msg: &str| {
        if verbose {
            eprintln!("palatini: {msg}");
        }
    };
    log(&format!("{threads} worker thread(s)"));
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a, &log),
        Command::Degree(a) => cmd_degree(a),
        Command::Pfaffian(a) => cmd_pfaffian(a),
        Command::Verify(a) => cmd_verify(a, &log),
        Command::Sample(a) => cmd_sample(a),
        Command::Tangent(a) => cmd_tangent(a, &log),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Failure(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}

fn write_out(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Failure::usage(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_json(v: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
    s.push('\n');
    s
}

fn load(path: &Path) -> Result<PalatiniInstance, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    PalatiniInstance::from_json_str(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn hash(inst: &PalatiniInstance) -> String {
    inst.hash().unwrap_or_default()
}

/// Common report header.
fn envelope(command: &str, inst: Option<&PalatiniInstance>) -> serde_json::Map<String, Value> {
    let mut map = serde_json::Map::new();
    map.insert("version".into(), json!(VERSION));
    map.insert("command".into(), json!(command));
    if let Some(inst) = inst {
        map.insert("instance_hash".into(), json!(hash(inst)));
        map.insert("m".into(), json!(inst.m()));
        map.insert("k".into(), json!(inst.k()));
        map.insert("field".into(), json!(inst.field().name()));
    }
    map
}

fn strings(v: &[Scalar]) -> Vec<String> {
    v.iter().map(|x| x.to_string()).collect()
}

fn cmd_gen(a: GenArgs, log: &dyn Fn(&str)) -> Outcome {
    if a.m == 0 || a.k == 0 {
        return Err(Failure::usage("m and k must be positive"));
    }
    if 2 * a.k < a.m + 1 {
        return Err(Failure::usage(format!("2k ≥ m + 1 fails for (m, k) = ({}, {})", a.m, a.k)));
    }
    if a.m > a.k + 1 {
        return Err(Failure::usage(format!("m ≤ k + 1 fails for (m, k) = ({}, {})", a.m, a.k)));
    }
    let field = match a.e {
        0 => return Err(Failure::usage("extension degree must be positive")),
        1 => Field::prime(a.p),
        e => Field::extension(a.p, e, a.seed),
    }
    .map_err(Failure::usage)?;
    let inst = instance_random(a.m, a.k, &field, a.seed).map_err(Failure::usage)?;
    let text = inst.to_json_string().map_err(Failure::usage)?;
    log("running genericity probes");
    let gen = genericity_check(&inst, a.trials, a.seed);
    let mut rep = envelope("gen", Some(&inst));
    rep.insert("seed".into(), json!(a.seed));
    rep.insert("passed".into(), json!(gen.passed()));
    rep.insert("genericity".into(), json!(gen));
    let report = to_json(&rep);
    match &a.out {
        Some(path) => {
            write_out(Some(path), &text)?;
            rep.insert("instance_path".into(), json!(path.display().to_string()));
            print!("{}", to_json(&rep));
        }
        None => {
            print!("{text}");
            eprint!("{report}");
        }
    }
    Ok(if gen.passed() { 0 } else { EXIT_PROBE })
}

fn cmd_degree(a: DegreeArgs) -> Outcome {
    if a.k_min > a.k_max || a.m_min > a.m_max.unwrap_or(usize::MAX) || a.m_min == 0 || a.k_min == 0 {
        return Err(Failure::usage("empty (m, k) range"));
    }
    let mut rows = Vec::new();
    for k in a.k_min..=a.k_max {
        let top = a.m_max.unwrap_or(k + 1).min(2 * k - 1);
        for m in a.m_min..=top {
            rows.push(degree_row(m, k).map_err(Failure::usage)?);
        }
    }
    if rows.is_empty() {
        return Err(Failure::usage("empty (m, k) range"));
    }
    let all_agree = rows.iter().all(|r| r.agree);
    let text = match a.format {
        Format::Json => {
            let mut rep = envelope("degree", None);
            rep.insert("all_agree".into(), json!(all_agree));
            rep.insert("rows".into(), json!(rows));
            to_json(&rep)
        }
        Format::Tsv => {
            let mut s = String::from("m\tk\tformula_degree\tchern_degree\tagree\n");
            for r in &rows {
                s.push_str(&format!("{}\t{}\t{}\t{}\t{}\n", r.m, r.k, r.formula, r.chern, r.agree));
            }
            s
        }
    };
    write_out(a.out.as_deref(), &text)?;
    Ok(if all_agree { 0 } else { EXIT_IDENTITY })
}

fn cmd_pfaffian(a: PfaffianArgs) -> Outcome {
    let inst = load(&a.instance)?;
    let check = pf_det_check(&inst, a.points, a.seed);
    let mut rep = envelope("pfaffian", Some(&inst));
    rep.insert("degree".into(), json!(inst.pf().degree()));
    rep.insert("terms".into(), serde_json::to_value(inst.pf().to_json_terms()).expect("terms serialize"));
    rep.insert("pf_squared_equals_det".into(), json!(check));
    write_out(a.out.as_deref(), &to_json(&rep))?;
    Ok(if check.passed() { 0 } else { EXIT_IDENTITY })
}

#[derive(Serialize, Default)]
struct IncidenceSummary {
    sampled: usize,
    corank_two: usize,
    coordinate_identity: usize,
    round_trip: usize,
    lines_pass: usize,
    error: Option<String>,
}

fn cmd_verify(a: VerifyArgs, log: &dyn Fn(&str)) -> Outcome {
    let inst = load(&a.instance)?;
    log("checking Pf² = det");
    let pf_det = pf_det_check(&inst, 50, a.seed);
    log("running genericity probes");
    let gen = genericity_check(&inst, a.trials, a.seed);
    log("checking the incidence correspondence");
    let mut inc = IncidenceSummary::default();
    match sample_y(&inst, a.ext, a.samples, a.seed) {
        Ok(ys) => {
            let over = &ys.instance;
            for u in &ys.points {
                inc.sampled += 1;
                let ipt = fiber(over, u).map_err(|e| Failure(EXIT_IDENTITY, e.to_string()))?;
                if ipt.corank() != 2 {
                    continue;
                }
                inc.corank_two += 1;
                let f = ipt.field();
                let v: Vec<Scalar> =
                    ipt.kernel.column(0).iter().zip(ipt.kernel.column(1)).map(|(x, y)| f.add(x, &y)).collect();
                if coordinate_identity(over, &v, u) {
                    inc.coordinate_identity += 1;
                }
                if fiber_of_x(over, &v).is_ok_and(|back| &back == u) {
                    inc.round_trip += 1;
                }
                if scroll_line(over, &ipt).is_ok_and(|line| line.all_pass()) {
                    inc.lines_pass += 1;
                }
            }
        }
        Err(e @ (IncidenceError::UnsupportedField(_) | IncidenceError::Field(_))) => return Err(Failure::usage(e)),
        Err(e) => inc.error = Some(e.to_string()),
    }
    let identities = pf_det.passed()
        && inc.coordinate_identity == inc.corank_two
        && inc.round_trip == inc.corank_two
        && inc.lines_pass == inc.corank_two;
    let probes = gen.passed() && inc.error.is_none() && inc.corank_two == inc.sampled;
    let mut rep = envelope("verify", Some(&inst));
    rep.insert("seed".into(), json!(a.seed));
    rep.insert("identities_pass".into(), json!(identities));
    rep.insert("probes_clean".into(), json!(probes));
    rep.insert("pf_squared_equals_det".into(), json!(pf_det));
    rep.insert("genericity".into(), json!(gen));
    rep.insert("incidence".into(), json!(inc));
    write_out(a.out.as_deref(), &to_json(&rep))?;
    Ok(if !identities {
        EXIT_IDENTITY
    } else if !probes {
        EXIT_PROBE
    } else {
        0
    })
}

fn cmd_sample(a: SampleArgs) -> Outcome {
    let inst = load(&a.instance)?;
    let ys = match sample_y(&inst, a.ext, a.count, a.seed) {
        Ok(ys) => ys,
        Err(e @ (IncidenceError::UnsupportedField(_) | IncidenceError::Field(_))) => return Err(Failure::usage(e)),
        Err(e) => return Err(Failure(EXIT_PROBE, e.to_string())),
    };
    let mut points = Vec::new();
    for u in &ys.points {
        let ipt = fiber(&ys.instance, u).map_err(|e| Failure(EXIT_IDENTITY, e.to_string()))?;
        let kernel: Vec<Vec<String>> = (0..ipt.corank()).map(|c| strings(&ipt.kernel.column(c))).collect();
        points.push(json!({ "u": strings(u), "corank": ipt.corank(), "kernel": kernel }));
    }
    let mut rep = envelope("sample", Some(&inst));
    rep.insert("seed".into(), json!(a.seed));
    rep.insert("sampling_field".into(), json!(ys.instance.field().name()));
    rep.insert("lines".into(), json!(ys.lines));
    rep.insert("points".into(), json!(points));
    write_out(a.out.as_deref(), &to_json(&rep))?;
    Ok(0)
}

fn cmd_tangent(a: TangentArgs, log: &dyn Fn(&str)) -> Outcome {
    let inst = load(&a.instance)?;
    let mut opts = TangentOptions::new(a.cap.unwrap_or(inst.m() + 3));
    opts.route = match a.route {
        RouteArg::Auto => Route::Auto,
        RouteArg::Direct => Route::Direct,
        RouteArg::Localized => Route::Localized,
    };
    opts.max_unknowns = a.max_unknowns;
    opts.witness = !a.no_witness;
    opts.seed = a.seed;
    log(&format!("tangent space at cap {}", opts.cap));
    let report = tangent::tangent_dimension_with(&inst, &opts).map_err(|e| match e {
        TangentError::CertificationFailed { .. } => Failure(EXIT_IDENTITY, e.to_string()),
        _ => Failure::usage(e),
    })?;
    let status = if !report.stabilized {
        "no_stabilization"
    } else {
        match report.agree {
            Some(true) => "agree",
            Some(false) => "disagree",
            None => "no_closed_form",
        }
    };
    let mut rep = envelope("tangent", Some(&inst));
    rep.insert("status".into(), json!(status));
    rep.insert("reference_h1".into(), json!(tangent::reference_h1(inst.m(), inst.k()).ok()));
    rep.insert("report".into(), json!(report));
    write_out(a.out.as_deref(), &to_json(&rep))?;
    Ok(match status {
        "agree" | "no_closed_form" => 0,
        _ => EXIT_PROBE,
    })
}
