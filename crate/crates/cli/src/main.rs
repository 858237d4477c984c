mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use reebforge::complex::scx::{parse_complex, parse_subcomplex, write_complex};
use reebforge::complex::{builtin, SimplicialComplex, Subcomplex};
use reebforge::construct::{build_pl_reeb, ConstructError, ReebBuild, DEFAULT_MAX_RETRIES};
use reebforge::flat::{
    make_flat, verify_flat_bounds, BoundSequence, FlatBoundsReport, FlatFunction,
    SequenceConditions,
};
use reebforge::homology::{
    alexander_betti_sum_check, duality_betti_check, homology, Coefficients, HomologyProfile,
};
use reebforge::plmap::{parse_plf, PlMap};
use reebforge::semialg::{
    evaluate_samples, parse_spec, verify_reeb_numeric, DEFAULT_GRADIENT_THRESHOLD,
};
use reebforge::verify::{attach_necessary_conditions, verify_reeb, ReebReport};

use report::{write_atomic, InputDigest, Report};

const EXIT_PASS: u8 = 0;
const EXIT_FAIL: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_LIMIT: u8 = 3;

/// Reeb functions on triangulated manifolds, homology, flat functions and sampled semialgebraic checks.
#[derive(Parser, Debug)]
#[command(name = "reebforge", version)]
struct Cli {
    /// Also write the JSON report to this file.
    #[arg(long, global = true)]
    report: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Coeff {
    Q,
    Z2,
    Z,
}

impl From<Coeff> for Coefficients {
    fn from(c: Coeff) -> Self {
        match c {
            Coeff::Q => Coefficients::Rational,
            Coeff::Z2 => Coefficients::Z2,
            Coeff::Z => Coefficients::Integers,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Homology of a complex (`.scx` path or `builtin:NAME`).
    Homology {
        complex: String,
        #[arg(long, value_enum, default_value = "q")]
        coeff: Coeff,
        #[arg(long)]
        reduced: bool,
    },
    /// Build a PL Reeb function with zero set X and write it as `.plf`.
    ReebBuild {
        complex: String,
        subcomplex: String,
        #[arg(long, default_value_t = DEFAULT_MAX_RETRIES)]
        max_retries: usize,
        /// Writes PREFIX.scx (subdivided complex), PREFIX.x0.scx, PREFIX.x1.scx and PREFIX.plf.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Classify every vertex of a PL map and decide whether it is a Reeb function.
    Verify {
        complex: String,
        plf: String,
        #[arg(long)]
        expected_x0: Option<String>,
    },
    /// Rank inequalities b_i(M) <= b_i(X1) + b_{n-i}(X0).
    Duality {
        complex: String,
        x0: String,
        x1: String,
        #[arg(long, value_enum, default_value = "z2")]
        coeff: Coeff,
    },
    /// Equal reduced Betti sums of the two levels in a homology sphere.
    BettiSum {
        complex: String,
        x0: String,
        x1: String,
        #[arg(long, value_enum, default_value = "z2")]
        coeff: Coeff,
    },
    /// Construct the flat function for a bound sequence and check its derivative bounds.
    Flatfn {
        /// `2^-k`, `2^-k/k`, or a comma-separated list c_0,c_1,...
        #[arg(long, default_value = "2^-k")]
        ck: String,
        #[arg(long = "K", default_value_t = 8)]
        k_max: usize,
        /// Derivative order k to check (repeatable).
        #[arg(long = "check")]
        checks: Vec<usize>,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        /// Dump (t, gamma, gamma', ...) to this CSV file.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Highest derivative in the CSV dump.
        #[arg(long, default_value_t = 2)]
        order: usize,
        #[arg(long, default_value_t = 1000)]
        csv_samples: usize,
    },
    /// Sampled Reeb check of exp(1/g) on a manifold described by a spec file.
    Semialg {
        spec: String,
        #[arg(long, default_value_t = 0.01)]
        delta: f64,
        /// Overrides the sampler resolution of the spec.
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_GRADIENT_THRESHOLD)]
        threshold: f64,
        /// Dump (point, f, projected gradient norm) to this CSV file.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Print a built-in complex in `.scx` form.
    Builtin { name: String },
}

/// What a command produced: the serialized report and the exit code.
struct Outcome {
    text: String,
    code: u8,
}

enum Failure {
    Input(anyhow::Error),
    Limit(Outcome),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Input(e.into())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(EXIT_INPUT);
    }
    let command_line = std::env::args().skip(1).collect::<Vec<_>>().join(" ");
    let outcome = match run(&cli.command, command_line) {
        Ok(o) => o,
        Err(Failure::Limit(o)) => o,
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(EXIT_INPUT);
        }
    };
    print!("{}", outcome.text);
    if let Some(path) = &cli.report {
        if let Err(e) = write_atomic(path, outcome.text.as_bytes()) {
            eprintln!("error: {e:#}");
            return ExitCode::from(EXIT_INPUT);
        }
    }
    ExitCode::from(outcome.code)
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("REEBFORGE_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .with_context(|| format!("REEBFORGE_THREADS must be a positive integer, got `{raw}`"))?;
    if n == 0 {
        bail!("REEBFORGE_THREADS must be a positive integer, got `0`");
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()?;
    Ok(())
}

fn finish<T: Serialize>(
    command: String,
    inputs: Vec<InputDigest>,
    result: T,
    pass: bool,
) -> Result<Outcome> {
    let text = Report::new(command, inputs, result, pass).to_json()?;
    Ok(Outcome {
        text,
        code: if pass { EXIT_PASS } else { EXIT_FAIL },
    })
}

fn run(command: &Command, line: String) -> Result<Outcome, Failure> {
    match command {
        Command::Homology {
            complex,
            coeff,
            reduced,
        } => {
            let (m, d) = load_complex("complex", complex)?;
            let profile = homology(&m, (*coeff).into(), *reduced);
            Ok(finish(
                line,
                vec![d],
                HomologyResult::new(&m, profile),
                true,
            )?)
        }
        Command::ReebBuild {
            complex,
            subcomplex,
            max_retries,
            out,
        } => cmd_reeb_build(line, complex, subcomplex, *max_retries, out.as_deref()),
        Command::Verify {
            complex,
            plf,
            expected_x0,
        } => Ok(cmd_verify(line, complex, plf, expected_x0.as_deref())?),
        Command::Duality {
            complex,
            x0,
            x1,
            coeff,
        } => {
            let (m, dm) = load_complex("complex", complex)?;
            let (a, da) = load_complex("x0", x0)?;
            let (b, db) = load_complex("x1", x1)?;
            let r = duality_betti_check(&m, &a, &b, (*coeff).into())?;
            let pass = r.pass;
            Ok(finish(line, vec![dm, da, db], r, pass)?)
        }
        Command::BettiSum {
            complex,
            x0,
            x1,
            coeff,
        } => {
            let (m, dm) = load_complex("complex", complex)?;
            let (a, da) = load_complex("x0", x0)?;
            let (b, db) = load_complex("x1", x1)?;
            let r = alexander_betti_sum_check(&m, &a, &b, (*coeff).into())?;
            let pass = r.pass;
            Ok(finish(line, vec![dm, da, db], r, pass)?)
        }
        Command::Flatfn {
            ck,
            k_max,
            checks,
            samples,
            csv,
            order,
            csv_samples,
        } => Ok(cmd_flatfn(
            line,
            ck,
            *k_max,
            checks,
            *samples,
            csv.as_deref(),
            *order,
            *csv_samples,
        )?),
        Command::Semialg {
            spec,
            delta,
            grid,
            threshold,
            csv,
        } => Ok(cmd_semialg(
            line,
            spec,
            *delta,
            *grid,
            *threshold,
            csv.as_deref(),
        )?),
        Command::Builtin { name } => {
            let c = builtin(name)?;
            Ok(Outcome {
                text: write_complex(&c, Some(name)),
                code: EXIT_PASS,
            })
        }
    }
}

fn read_input(name: &str, source: &str) -> Result<(String, InputDigest)> {
    let text = std::fs::read_to_string(source).with_context(|| format!("reading {source}"))?;
    let digest = InputDigest::new(name, source, text.as_bytes());
    Ok((text, digest))
}

/// Loads a complex from a `.scx` path or from `builtin:NAME`.
fn load_complex(name: &str, source: &str) -> Result<(SimplicialComplex, InputDigest)> {
    if let Some(b) = source.strip_prefix("builtin:") {
        let c = builtin(b)?;
        let text = write_complex(&c, None);
        return Ok((c, InputDigest::new(name, source, text.as_bytes())));
    }
    let (text, digest) = read_input(name, source)?;
    let c = parse_complex(&text).with_context(|| format!("parsing {source}"))?;
    Ok((c, digest))
}

#[derive(Serialize)]
struct HomologyResult {
    vertices: usize,
    dimension: isize,
    f_vector: Vec<usize>,
    euler_characteristic: i64,
    homology: HomologyProfile,
}

impl HomologyResult {
    fn new(m: &SimplicialComplex, homology: HomologyProfile) -> Self {
        HomologyResult {
            vertices: m.vertex_count(),
            dimension: m.dimension(),
            f_vector: m.f_vector(),
            euler_characteristic: m.euler_characteristic(),
            homology,
        }
    }
}

#[derive(Serialize)]
struct BuildResult<'a> {
    status: &'static str,
    retries: usize,
    subdivisions: usize,
    vertices: usize,
    facets: usize,
    x0_vertices: usize,
    x1_vertices: usize,
    collapses: usize,
    artifacts: Vec<String>,
    report: &'a ReebReport,
}

fn build_passes(r: &ReebReport) -> bool {
    r.is_reeb && r.zero_set_matches != Some(false) && r.duality.iter().all(|d| d.pass)
}

fn cmd_reeb_build(
    line: String,
    complex: &str,
    subcomplex: &str,
    max_retries: usize,
    out: Option<&Path>,
) -> Result<Outcome, Failure> {
    let (m, dm) = load_complex("complex", complex)?;
    let m = Arc::new(m);
    let (x, dx) = if let Some(b) = subcomplex.strip_prefix("builtin:") {
        let c = builtin(b)?;
        let d = InputDigest::new("subcomplex", subcomplex, write_complex(&c, None).as_bytes());
        (Subcomplex::from_complex(m.clone(), c)?, d)
    } else {
        let (text, d) = read_input("subcomplex", subcomplex)?;
        (
            parse_subcomplex(&text, m.clone()).with_context(|| format!("parsing {subcomplex}"))?,
            d,
        )
    };
    let inputs = vec![dm, dx];
    let (build, exhausted) = match build_pl_reeb(&m, &x, max_retries) {
        Ok(b) => (b, None),
        Err(ConstructError::RetriesExhausted {
            attempts,
            candidate,
        }) => (*candidate, Some(attempts)),
        Err(e) => return Err(anyhow!(e).into()),
    };
    let artifacts = match out {
        Some(prefix) => write_build_artifacts(&build, prefix)?,
        None => Vec::new(),
    };
    let pass = exhausted.is_none() && build_passes(&build.report);
    let result = BuildResult {
        status: if exhausted.is_some() {
            "retries_exhausted"
        } else {
            "built"
        },
        retries: exhausted.map_or(build.subdivisions - 2, |a| a - 1),
        subdivisions: build.subdivisions,
        vertices: build.complex().vertex_count(),
        facets: build.complex().facets().len(),
        x0_vertices: build.x0.complex().vertex_count(),
        x1_vertices: build.x1.complex().vertex_count(),
        collapses: build.collapse.steps.len(),
        artifacts,
        report: &build.report,
    };
    let outcome = finish(line, inputs, result, pass)?;
    if exhausted.is_some() {
        return Err(Failure::Limit(Outcome {
            code: EXIT_LIMIT,
            ..outcome
        }));
    }
    Ok(outcome)
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn write_build_artifacts(build: &ReebBuild, prefix: &Path) -> Result<Vec<String>> {
    let scx = with_suffix(prefix, ".scx");
    let scx_name = scx
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let files = [
        (
            scx.clone(),
            write_complex(build.complex(), Some("subdivided complex")),
        ),
        (
            with_suffix(prefix, ".x0.scx"),
            write_complex(build.x0.complex(), Some("zero set")),
        ),
        (
            with_suffix(prefix, ".x1.scx"),
            write_complex(build.x1.complex(), Some("maximum set")),
        ),
        (with_suffix(prefix, ".plf"), build.f.to_plf(Some(&scx_name))),
    ];
    let mut written = Vec::new();
    for (path, text) in files {
        write_atomic(&path, text.as_bytes())?;
        written.push(path.display().to_string());
    }
    Ok(written)
}

fn cmd_verify(
    line: String,
    complex: &str,
    plf: &str,
    expected_x0: Option<&str>,
) -> Result<Outcome> {
    let (m, dm) = load_complex("complex", complex)?;
    let m = Arc::new(m);
    let (text, dp) = read_input("plf", plf)?;
    let parsed = parse_plf(&text).with_context(|| format!("parsing {plf}"))?;
    let f = PlMap::from_entries(m.clone(), &parsed.entries)?;
    let mut inputs = vec![dm, dp];
    let expected = match expected_x0 {
        Some(src) => {
            let (x, dx) = load_complex("expected_x0", src)?;
            inputs.push(dx);
            Some(x)
        }
        None => None,
    };
    let mut report = verify_reeb(&m, &f, expected.as_ref())?;
    attach_necessary_conditions(&m, &mut report);
    let pass = report.is_reeb && report.zero_set_matches != Some(false);
    finish(line, inputs, report, pass)
}

#[derive(Serialize)]
struct FlatResult<'a> {
    sequence: String,
    function: &'a FlatFunction,
    conditions: SequenceConditions,
    gamma_0: f64,
    gamma_1: f64,
    /// `γ′ > 0` at `t = i/1000`, `i = 1..=1000`.
    increasing_on_grid: bool,
    checks: Vec<FlatBoundsReport>,
    csv: Option<String>,
}

#[allow(clippy::too_many_arguments)]
fn cmd_flatfn(
    line: String,
    ck: &str,
    k_max: usize,
    checks: &[usize],
    samples: usize,
    csv: Option<&Path>,
    order: usize,
    csv_samples: usize,
) -> Result<Outcome> {
    let seq: BoundSequence = ck.parse()?;
    let ff = make_flat(&seq, k_max)?;
    let conditions = ff.sequence_conditions();
    let gamma_0 = ff.eval_gamma(0.0)?;
    let gamma_1 = ff.eval_gamma(1.0)?;
    let mut increasing_on_grid = true;
    for i in 1..=1000 {
        if ff.gamma_jet(i as f64 / 1000.0, 1)?[1] <= 0.0 {
            increasing_on_grid = false;
        }
    }
    let checks = checks
        .iter()
        .map(|&k| verify_flat_bounds(&ff, k, samples))
        .collect::<Result<Vec<_>, _>>()?;
    let csv_path = match csv {
        Some(path) => {
            let table = ff.jet_table(order, csv_samples)?;
            let mut header = vec!["t".to_string(), "gamma".to_string()];
            header.extend((1..=order).map(|j| format!("gamma_d{j}")));
            write_csv(
                path,
                &header,
                table
                    .iter()
                    .map(|row| row.iter().map(|x| format!("{x:?}")).collect()),
            )?;
            Some(path.display().to_string())
        }
        None => None,
    };
    let pass = conditions.all()
        && gamma_0 == 0.0
        && gamma_1 > 0.0
        && increasing_on_grid
        && checks.iter().all(|c| c.pass);
    let result = FlatResult {
        sequence: seq.to_string(),
        function: &ff,
        conditions,
        gamma_0,
        gamma_1,
        increasing_on_grid,
        checks,
        csv: csv_path,
    };
    finish(line, Vec::new(), result, pass)
}

fn write_csv(
    path: &Path,
    header: &[String],
    rows: impl Iterator<Item = Vec<String>>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().map_err(|e| anyhow!("{e}"))?;
    write_atomic(path, &bytes)
}

fn cmd_semialg(
    line: String,
    spec_path: &str,
    delta: f64,
    grid: Option<usize>,
    threshold: f64,
    csv: Option<&Path>,
) -> Result<Outcome> {
    let (text, d) = read_input("spec", spec_path)?;
    let mut spec = parse_spec(&text).with_context(|| format!("parsing {spec_path}"))?;
    if let Some(g) = grid {
        spec.resolution = g;
    }
    let report = verify_reeb_numeric(&spec, delta, threshold)?;
    if let Some(path) = csv {
        let (_, rows) = evaluate_samples(&spec)?;
        let mut header: Vec<String> = (1..=spec.n).map(|i| format!("x{i}")).collect();
        header.extend(["f", "projected_gradient_norm", "in_x"].map(String::from));
        write_csv(
            path,
            &header,
            rows.iter().map(|r| {
                let mut rec: Vec<String> = r.point.iter().map(|x| format!("{x:?}")).collect();
                rec.extend([
                    format!("{:?}", r.f),
                    format!("{:?}", r.projected_gradient_norm),
                    r.in_x.to_string(),
                ]);
                rec
            }),
        )?;
    }
    let pass = report.pass;
    finish(line, vec![d], report, pass)
}
