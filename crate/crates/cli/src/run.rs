use std::fs;
use std::path::Path;

use domex_core::pipeline::{build_exchange, properize_for, Exchange, PipelineConfig, Timings};
use domex_core::properize::eigen_preservation_check;
use domex_core::spectral::{classify, MatrixProfile};
use domex_core::verify::{check_torus_cover, sampled, CheckResult, TorusCover, VerificationReport, VerifyConfig};
use domex_core::{dsl, presets, Error, ReturnSystem, Substitution};
use serde::Serialize;

use crate::args::{Input, Run};
use crate::export::{render_svg, torus_png, write_cloud_csv, write_json, PieceSummary};

/// Outcome of a command, mapped to the process exit code.
pub enum Outcome {
    Pass,
    CheckFailed,
    Inconclusive,
}

#[derive(Debug)]
pub enum CliError {
    Core(Error),
    Io(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<Box<dyn std::error::Error>> for CliError {
    fn from(e: Box<dyn std::error::Error>) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "output: {e}"),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_inconclusive() => 3,
            CliError::Core(e) if e.is_input_error() => 2,
            // Failing the Pisot precondition without --force is an input problem.
            CliError::Core(Error::Stage { stage: "classify", .. }) => 2,
            CliError::Core(_) => 1,
            CliError::Io(_) => 2,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

pub fn load(input: &Input) -> Result<Substitution> {
    match (&input.file, &input.preset, &input.dsl) {
        (Some(path), _, _) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            Ok(dsl::parse(&text)?)
        }
        (_, Some(name), _) => Ok(presets::load(name)?),
        (_, _, Some(text)) => Ok(dsl::parse(&text.replace(';', "\n"))?),
        _ => Err(Error::Config("no input: pass a file, --preset or --dsl".into()).into()),
    }
}

fn prefix(s: &Substitution, u: &str) -> Result<Vec<domex_core::Letter>> {
    Ok(s.alphabet().parse_word(u)?.into_inner())
}

fn out_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

#[derive(Serialize)]
struct Profile<'a> {
    substitution: String,
    alphabet: &'a [String],
    seed: &'a str,
    left_proper: bool,
    right_proper: bool,
    aperiodicity: String,
    matrix: &'a MatrixProfile,
}

pub fn analyze(input: &Input, emit_dsl: bool, out: Option<&Path>) -> Result<Outcome> {
    let s = load(input)?;
    let profile = classify(s.incidence());
    let report = Profile {
        substitution: dsl::serialize(&s),
        alphabet: s.alphabet().symbols(),
        seed: s.alphabet().symbol(s.seed()),
        left_proper: s.is_left_proper(),
        right_proper: s.is_right_proper(),
        aperiodicity: s.aperiodicity()?.to_string(),
        matrix: &profile,
    };
    if emit_dsl {
        print!("{}", dsl::serialize(&s));
    } else {
        println!("{}", serde_json::to_string_pretty(&report).map_err(|e| CliError::Io(e.to_string()))?);
    }
    if let Some(dir) = out {
        out_dir(dir)?;
        write_json(&dir.join("profile.json"), &report)?;
    }
    Ok(Outcome::Pass)
}

#[derive(Serialize)]
struct Derived {
    u: String,
    return_words: Vec<String>,
    rules: Vec<String>,
    eigenvalues: Vec<[f64; 2]>,
    zero_eigenvalue: bool,
    matrix: MatrixProfile,
}

pub fn derive(input: &Input, u: &str, emit_dsl: bool, out: Option<&Path>) -> Result<Outcome> {
    let s = load(input)?;
    let u = prefix(&s, u)?;
    let rs = ReturnSystem::new(&s, &u)?;
    let su = rs.return_substitution()?;
    let matrix = classify(su.incidence());
    let report = Derived {
        u: s.render(&u),
        return_words: rs.return_words().iter().map(|w| s.render(w)).collect(),
        rules: su.rules().into_iter().map(|(a, w)| format!("{a} -> {w}")).collect(),
        eigenvalues: matrix.eigenvalues.clone(),
        zero_eigenvalue: matrix.zero_multiplicity > 0,
        matrix,
    };
    if emit_dsl {
        print!("{}", dsl::serialize(&su));
    } else {
        println!("{}", serde_json::to_string_pretty(&report).map_err(|e| CliError::Io(e.to_string()))?);
    }
    if let Some(dir) = out {
        out_dir(dir)?;
        write_json(&dir.join("derive.json"), &report)?;
    }
    Ok(Outcome::Pass)
}

pub fn properize(input: &Input, u: Option<&str>, out: &Path) -> Result<Outcome> {
    let s = load(input)?;
    let u = u.map(|u| prefix(&s, u)).transpose()?;
    let p = properize_for(&s, u.as_deref())?;
    let cert = p.certificate();
    out_dir(out)?;
    write_json(&out.join("certificate.json"), &cert)?;
    let eig = eigen_preservation_check(&p)?;
    println!("ξ on {} letters, l = {}", p.proper_sub.size(), p.power_l);
    for rule in &cert.xi_rules {
        println!("  {rule}");
    }
    println!("eigenvalues preserved: {} (max distance {:.2e})", eig.pass, eig.max_distance);
    Ok(if p.is_certified() { Outcome::Pass } else { Outcome::CheckFailed })
}

fn pipeline_config(run: &Run, s: &Substitution) -> Result<PipelineConfig> {
    let u = run.u.as_deref().map(|u| prefix(s, u)).transpose()?;
    if !(run.tol > 0.0) {
        return Err(Error::Config("--tol must be positive".into()).into());
    }
    if run.level == Some(0) || run.depth == Some(0) {
        return Err(Error::Config("--level and --depth must be positive".into()).into());
    }
    Ok(PipelineConfig {
        u,
        level: run.level,
        depth: run.depth,
        epsilon: run.tol,
        points: run.points,
        force: run.force,
    })
}

fn verify_config(run: &Run, dim: usize) -> Result<VerifyConfig> {
    let mut v = VerifyConfig::for_dim(dim);
    if let Some(r) = run.resolution {
        v.resolution = r;
    }
    if let Some(r) = run.torus_resolution {
        v.torus_resolution = r;
    }
    v.seed = run.seed;
    v.validate()?;
    Ok(v)
}

/// Builds the exchange; raster defaults follow the dimension of the cloud.
fn build(run: &Run) -> Result<(Exchange, PipelineConfig, VerifyConfig)> {
    let s = load(&run.input)?;
    let cfg = pipeline_config(run, &s)?;
    let dim = s.size().saturating_sub(1).max(1);
    let vcfg = verify_config(run, dim)?;
    let ex = build_exchange(&s, &cfg, Some(&vcfg))?;
    let vcfg = if ex.cloud.dim == dim { vcfg } else { verify_config(run, ex.cloud.dim)? };
    Ok((ex, cfg, vcfg))
}

fn write_build(run: &Run, ex: &Exchange) -> Result<()> {
    out_dir(&run.out)?;
    write_json(&run.out.join("profile.json"), &ex.spectral)?;
    write_json(&run.out.join("certificate.json"), &ex.properization.certificate())?;
    write_cloud_csv(&run.out.join("cloud.csv"), &ex.cloud, &ex.properization.proper_sub, run.csv_rows)?;
    write_json(&run.out.join("pieces.json"), &PieceSummary::new(&ex.cloud))?;
    Ok(())
}

fn write_figures(run: &Run, ex: &Exchange, cover: Option<&TorusCover>) -> Result<()> {
    fs::write(run.out.join("exchange.svg"), render_svg(&ex.cloud))?;
    if let Some(img) = cover.and_then(|c| torus_png(c, ex.cloud.dim)) {
        img.save(run.out.join("torus.png")).map_err(|e| CliError::Io(e.to_string()))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct ConfigEcho<'a> {
    pipeline: &'a PipelineConfig,
    verify: &'a VerifyConfig,
    points: usize,
}

#[derive(Serialize)]
struct ExchangeSummary<'a> {
    dim: usize,
    level: usize,
    depth: usize,
    tail: f64,
    alpha: &'a [f64],
    n: &'a [Vec<f64>],
    beta: f64,
    proper_letters: usize,
    pieces: usize,
    merged_pieces: usize,
}

#[derive(Serialize)]
struct Report<'a> {
    substitution: String,
    config: ConfigEcho<'a>,
    exchange: ExchangeSummary<'a>,
    pass: bool,
    inconclusive: bool,
    checks: &'a [CheckResult],
    #[serde(rename = "Z")]
    z: Option<usize>,
    #[serde(rename = "C")]
    c: Option<f64>,
    timings: &'a Timings,
}

fn write_report(run: &Run, ex: &Exchange, cfg: &PipelineConfig, vcfg: &VerifyConfig, rep: &VerificationReport) -> Result<()> {
    let report = Report {
        substitution: dsl::serialize(&ex.source),
        config: ConfigEcho {
            pipeline: cfg,
            verify: vcfg,
            points: ex.cloud.len(),
        },
        exchange: ExchangeSummary {
            dim: ex.cloud.dim,
            level: ex.cloud.level,
            depth: ex.cloud.depth,
            tail: ex.cloud.tail,
            alpha: &ex.cloud.alpha,
            n: &ex.cloud.n,
            beta: ex.spectral.beta(),
            proper_letters: ex.properization.proper_sub.size(),
            pieces: ex.cloud.pieces.len(),
            merged_pieces: ex.cloud.merged_piece_count(),
        },
        pass: rep.all_pass(),
        inconclusive: rep.inconclusive(),
        checks: &rep.checks,
        z: rep.z_estimate,
        c: rep.c_estimate,
        timings: &ex.timings,
    };
    Ok(write_json(&run.out.join("report.json"), &report)?)
}

fn print_checks(rep: &VerificationReport) {
    for c in &rep.checks {
        println!(
            "{} {:<24} {:>12.4e}  (tolerance {:.1e})  {}",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.statistic,
            c.tolerance,
            c.detail
        );
    }
    match rep.z_estimate {
        Some(z) => println!("Z = {z}, C = {:.4}", rep.c_estimate.unwrap_or(f64::NAN)),
        None => println!("Z not estimated"),
    }
}

fn print_build(ex: &Exchange) {
    let c = &ex.cloud;
    println!(
        "dimension {}, level {}, depth {} (tail {:.1e}), {} points, {} pieces ({} translations)",
        c.dim,
        c.level,
        c.depth,
        c.tail,
        c.len(),
        c.pieces.len(),
        c.merged_piece_count()
    );
}

pub enum Mode {
    Build,
    Verify,
    Pipeline,
    Render,
}

pub fn run(run: &Run, mode: Mode) -> Result<Outcome> {
    let (mut ex, cfg, vcfg) = build(run)?;
    print_build(&ex);
    match mode {
        Mode::Build => {
            write_build(run, &ex)?;
            Ok(Outcome::Pass)
        }
        Mode::Render => {
            out_dir(&run.out)?;
            let (_, cover) = check_torus_cover(sampled(&ex.cloud), ex.cloud.dim, None, &vcfg);
            write_figures(run, &ex, cover.as_ref())?;
            Ok(Outcome::Pass)
        }
        Mode::Verify | Mode::Pipeline => {
            let rep = ex.verify(&vcfg)?;
            print_checks(&rep);
            out_dir(&run.out)?;
            if matches!(mode, Mode::Pipeline) {
                write_build(run, &ex)?;
                write_figures(run, &ex, rep.torus.as_ref())?;
            }
            write_report(run, &ex, &cfg, &vcfg, &rep)?;
            Ok(if rep.all_pass() {
                Outcome::Pass
            } else if rep.inconclusive() {
                Outcome::Inconclusive
            } else {
                Outcome::CheckFailed
            })
        }
    }
}
