//! Command-line front end: state files, measure computation, family sweeps
//! and the verification harness.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage or input error,
//! 3 optimizer did not converge (the value found is still printed).

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::codec::StateFile;
use crate::conditioning::{conditional_entanglement, BaseMeasure, ConditionOptions, ConditionedMeasure};
use crate::entropy::{conditional_mutual_information, multipartite_i_n, multipartite_s_n, mutual_information, von_neumann_entropy};
use crate::error::{Error, Result};
use crate::exact_measures::{
    c_squashed, entanglement_of_formation, log_negativity, min_partial_transpose_eigenvalue, RoofOptions, PPT_TOL,
};
use crate::optimize::OptimizerOptions;
use crate::propositions::{run_all_scaled, CheckReport, Profile};
use crate::states::{make_named_state, Family, NamedState, Partition, QuantumState};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "condent", version, about = "Conditional entanglement measures on finite-dimensional states")]
pub struct Cli {
    /// Worker threads (falls back to CONDENT_THREADS); results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a named state to a JSON state file (stdout when no path is given).
    MakeState {
        family: String,
        #[command(flatten)]
        params: FamilyParams,
        out: Option<PathBuf>,
    },
    /// Compute a measure on a state file.
    Compute {
        state: PathBuf,
        measure: Measure,
        #[command(flatten)]
        run: RunArgs,
        /// Where to write the certificate of an optimized measure
        /// (default: next to the state file).
        #[arg(long)]
        certificate: Option<PathBuf>,
    },
    /// Evaluate a measure over a parameter grid of a state family and write CSV.
    Sweep {
        family: String,
        measure: Measure,
        /// Family parameter to vary: p, f, d or n.
        #[arg(long)]
        param: String,
        /// Grid as `start:step:end` or a comma-separated list.
        #[arg(long, allow_hyphen_values = true)]
        grid: String,
        #[command(flatten)]
        params: FamilyParams,
        #[command(flatten)]
        run: RunArgs,
        /// CSV output path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every proposition check and write the JSON report.
    Verify {
        #[arg(long, value_enum, default_value_t = ProfileArg::Quick)]
        profile: ProfileArg,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Report path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Multiplies every tolerance; test fixture for the failure path.
        #[arg(long, hide = true, default_value_t = 1.0, allow_hyphen_values = true)]
        tolerance_scale: f64,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ProfileArg {
    Quick,
    Full,
}

impl From<ProfileArg> for Profile {
    fn from(p: ProfileArg) -> Self {
        match p {
            ProfileArg::Quick => Profile::Quick,
            ProfileArg::Full => Profile::Full,
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct FamilyParams {
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub p: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub f: Option<f64>,
    /// Local dimensions of a product state, comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub dims: Option<Vec<usize>>,
    /// Basis digits of a product state, comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub digits: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Partition: comma-joined labels, colon-separated groups (`A1,A2:B1,B2`);
    /// defaults to one group per subsystem.
    #[arg(long)]
    pub split: Option<String>,
    /// Evaluate the trivial extension only.
    #[arg(long)]
    pub trivial_only: bool,
    /// Apply a factor 1/2 to the multipartite measures.
    #[arg(long)]
    pub half: bool,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..=256))]
    pub restarts: Option<u64>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(10..=100_000))]
    pub iterations: Option<u64>,
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

impl RunArgs {
    fn optimizer(&self) -> Result<OptimizerOptions> {
        let mut o = OptimizerOptions::default();
        if let Some(r) = self.restarts {
            o.restarts = r as usize;
        }
        if let Some(i) = self.iterations {
            o.max_iterations = i as usize;
        }
        if let Some(t) = self.tolerance {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::Argument(format!("tolerance must be positive, got {t}")));
            }
            o.tolerance = t;
        }
        if let Some(s) = self.seed {
            o.seed = s;
        }
        Ok(o)
    }

    fn partition(&self) -> Result<Option<Partition>> {
        self.split.as_deref().map(Partition::parse).transpose()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Measure {
    #[value(name = "S")]
    S,
    #[value(name = "I")]
    I,
    #[value(name = "I_n")]
    IN,
    #[value(name = "S_n")]
    SN,
    #[value(name = "cmi")]
    Cmi,
    #[value(name = "log_neg")]
    LogNeg,
    #[value(name = "ppt")]
    Ppt,
    #[value(name = "eof")]
    Eof,
    #[value(name = "c_squashed")]
    CSquashed,
    #[value(name = "e_sq_q")]
    ESqQ,
    #[value(name = "c_I")]
    CI,
    #[value(name = "ce_logneg")]
    CeLogneg,
    #[value(name = "ce_eof")]
    CeEof,
    #[value(name = "c_I_multi")]
    CIMulti,
    #[value(name = "c_S_multi")]
    CSMulti,
}

impl Measure {
    pub fn name(self) -> &'static str {
        match self {
            Measure::S => "S",
            Measure::I => "I",
            Measure::IN => "I_n",
            Measure::SN => "S_n",
            Measure::Cmi => "cmi",
            Measure::LogNeg => "log_neg",
            Measure::Ppt => "ppt",
            Measure::Eof => "eof",
            Measure::CSquashed => "c_squashed",
            Measure::ESqQ => "e_sq_q",
            Measure::CI => "c_I",
            Measure::CeLogneg => "ce_logneg",
            Measure::CeEof => "ce_eof",
            Measure::CIMulti => "c_I_multi",
            Measure::CSMulti => "c_S_multi",
        }
    }

    fn conditioned(self, half: bool) -> Option<ConditionedMeasure> {
        let multi = |b| {
            let cm = ConditionedMeasure::multipartite(b);
            if half {
                cm.with_factor(0.5 * cm.factor)
            } else {
                cm
            }
        };
        match self {
            Measure::ESqQ => Some(ConditionedMeasure::e_sq_q()),
            Measure::CI => Some(ConditionedMeasure::c_i()),
            Measure::CeLogneg => Some(ConditionedMeasure::ce(BaseMeasure::LogNegativity)),
            Measure::CeEof => Some(ConditionedMeasure::ce(BaseMeasure::Formation)),
            Measure::CIMulti => Some(multi(BaseMeasure::In)),
            Measure::CSMulti => Some(multi(BaseMeasure::Sn)),
            _ => None,
        }
    }
}

/// Outcome of one measure computation.
#[derive(Debug, Clone)]
pub struct Computed {
    pub value: f64,
    pub converged: bool,
    pub restarts_used: usize,
    /// Certificate JSON for optimized measures.
    pub certificate: Option<String>,
    /// Extra line for the user (PPT verdict).
    pub note: Option<String>,
}

impl Computed {
    fn exact(value: f64) -> Self {
        Self {
            value,
            converged: true,
            restarts_used: 0,
            certificate: None,
            note: None,
        }
    }
}

fn to_json<T: Serialize>(x: &T) -> Result<String> {
    serde_json::to_string_pretty(x).map_err(|e| Error::Internal(format!("serialization failed: {e}")))
}

fn groups_as_strs(p: &Partition) -> Vec<Vec<&str>> {
    p.groups().iter().map(|g| g.iter().map(String::as_str).collect()).collect()
}

fn need_groups(p: &Option<Partition>, measure: Measure, what: &str, ok: impl Fn(usize) -> bool) -> Result<Partition> {
    match p {
        Some(p) if ok(p.len()) => Ok(p.clone()),
        Some(p) => Err(Error::Argument(format!(
            "{} needs {what}, --split has {} group(s)",
            measure.name(),
            p.len()
        ))),
        None => Err(Error::Internal("partition missing".into())),
    }
}

/// Computes `measure` on `s`.
pub fn compute(s: &QuantumState, measure: Measure, run: &RunArgs) -> Result<Computed> {
    // Without --split every subsystem is its own party.
    let split = match run.partition()? {
        Some(p) => Some(p),
        None if measure == Measure::S => None,
        None => Some(Partition::new(s.labels().iter().map(|l| vec![l.clone()]))?),
    };
    if let Some(p) = &split {
        p.validate_for(s.labels())?;
    }
    let cm = measure.conditioned(run.half);
    if run.half && !matches!(measure, Measure::CIMulti | Measure::CSMulti) {
        return Err(Error::Argument("--half applies to c_I_multi and c_S_multi".into()));
    }
    if run.trivial_only && cm.is_none() {
        return Err(Error::Argument(format!(
            "--trivial-only applies to conditioned measures, not {}",
            measure.name()
        )));
    }
    let optimizer = run.optimizer()?;
    let two = |m| need_groups(&split, m, "two groups", |n| n == 2);
    let many = |m| need_groups(&split, m, "at least two groups", |n| n >= 2);
    match measure {
        Measure::S => Ok(Computed::exact(match &split {
            None => von_neumann_entropy(s),
            Some(p) => von_neumann_entropy(&s.partial_trace(&p.all_labels())?),
        })),
        Measure::I => {
            let p = two(measure)?;
            let g = groups_as_strs(&p);
            Ok(Computed::exact(mutual_information(s, &g[0], &g[1])?))
        }
        Measure::IN => Ok(Computed::exact(multipartite_i_n(s, &many(measure)?)?)),
        Measure::SN => Ok(Computed::exact(multipartite_s_n(s, &many(measure)?)?)),
        Measure::Cmi => {
            let p = need_groups(&split, measure, "three groups A:B:C for I(A:B|C)", |n| n == 3)?;
            let g = groups_as_strs(&p);
            Ok(Computed::exact(conditional_mutual_information(s, &g[0], &g[1], &g[2])?))
        }
        Measure::LogNeg | Measure::Ppt | Measure::Eof | Measure::CSquashed => {
            let p = two(measure)?;
            let restricted = s.partial_trace(&p.all_labels())?;
            let a = groups_as_strs(&p)[0].clone();
            match measure {
                Measure::LogNeg => Ok(Computed::exact(log_negativity(&restricted, &a)?)),
                Measure::Ppt => {
                    let m = min_partial_transpose_eigenvalue(&restricted, &a)?;
                    let mut c = Computed::exact(m);
                    c.note = Some(if m >= -PPT_TOL { "PPT".into() } else { "NPT".into() });
                    Ok(c)
                }
                _ => {
                    let opts = RoofOptions::with_optimizer(optimizer);
                    let r = if measure == Measure::Eof {
                        entanglement_of_formation(&restricted, &a, &opts)?
                    } else {
                        c_squashed(&restricted, &a, &opts)?
                    };
                    Ok(Computed {
                        value: r.value,
                        converged: r.converged,
                        restarts_used: r.restarts_used,
                        certificate: Some(to_json(&r.certificate)?),
                        note: None,
                    })
                }
            }
        }
        _ => {
            let cm = cm.expect("conditioned measure");
            let p = if cm.base == BaseMeasure::In || cm.base == BaseMeasure::Sn {
                many(measure)?
            } else {
                two(measure)?
            };
            let opts = if run.trivial_only {
                ConditionOptions::trivial()
            } else {
                ConditionOptions::with_optimizer(optimizer)
            };
            let r = conditional_entanglement(s, &p, cm, &opts)?;
            Ok(Computed {
                value: r.value,
                converged: r.converged,
                restarts_used: r.restarts_used,
                certificate: Some(to_json(&r.certificate)?),
                note: None,
            })
        }
    }
}

/// Builds a family from its CLI name and parameters.
pub fn family(name: &str, params: &FamilyParams) -> Result<Family> {
    let need_usize = |v: Option<usize>, flag: &str| {
        v.ok_or_else(|| Error::Parameter(format!("family `{name}` needs --{flag}")))
    };
    let need_f64 = |v: Option<f64>, flag: &str| {
        v.ok_or_else(|| Error::Parameter(format!("family `{name}` needs --{flag}")))
    };
    Ok(match name {
        "bell" => Family::Bell,
        "ghz" => Family::Ghz { n: params.n.unwrap_or(3) },
        "w" => Family::W { n: params.n.unwrap_or(3) },
        "werner" => Family::Werner {
            p: need_f64(params.p, "p")?,
            d: params.d.unwrap_or(2),
        },
        "isotropic" => Family::Isotropic {
            f: need_f64(params.f, "f")?,
            d: params.d.unwrap_or(2),
        },
        "maximally-mixed" => Family::MaximallyMixed { d: need_usize(params.d, "d")? },
        "flower" => Family::Flower { d: need_usize(params.d, "d")? },
        "product" => {
            let dims = params
                .dims
                .clone()
                .ok_or_else(|| Error::Parameter("family `product` needs --dims".into()))?;
            let digits = params.digits.clone().unwrap_or_else(|| vec![0; dims.len()]);
            Family::Product { dims, digits }
        }
        "classical" => Family::ClassicallyCorrelated { d: need_usize(params.d, "d")? },
        other => return Err(Error::UnknownFamily(other.to_string())),
    })
}

fn read_state(path: &Path) -> Result<QuantumState> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Argument(format!("cannot read {}: {e}", path.display())))?;
    StateFile::parse(&text)?.to_mixed()
}

fn write_text(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Argument(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| Error::Internal(format!("stdout: {e}")))
        }
    }
}

/// Parses `start:step:end` (inclusive, to within half a step) or a list.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let num = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|_| Error::Argument(format!("grid entry `{t}` is not a number")))
    };
    let spec = spec.trim();
    if spec.is_empty() {
        return Ok(vec![]);
    }
    if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        let [a, h, b] = parts[..] else {
            return Err(Error::Argument("grid range must be start:step:end".into()));
        };
        let (a, h, b) = (num(a)?, num(h)?, num(b)?);
        if !(h > 0.0) || !a.is_finite() || !b.is_finite() {
            return Err(Error::Argument("grid step must be positive".into()));
        }
        let count = ((b - a) / h + 0.5).floor();
        if count < 0.0 {
            return Ok(vec![]);
        }
        if count > 1e6 {
            return Err(Error::Argument("grid has too many points".into()));
        }
        // rounding keeps 0.1-style steps from printing as 0.30000000000000004
        return Ok((0..=count as usize)
            .map(|i| ((a + i as f64 * h) * 1e12).round() / 1e12)
            .collect());
    }
    spec.split(',').filter(|t| !t.trim().is_empty()).map(num).collect()
}

fn with_param(params: &FamilyParams, name: &str, x: f64) -> Result<FamilyParams> {
    let mut p = params.clone();
    let as_usize = || -> Result<usize> {
        if x >= 0.0 && x.fract() == 0.0 {
            Ok(x as usize)
        } else {
            Err(Error::Parameter(format!("{name} must be a nonnegative integer, got {x}")))
        }
    };
    match name {
        "p" => p.p = Some(x),
        "f" => p.f = Some(x),
        "d" => p.d = Some(as_usize()?),
        "n" => p.n = Some(as_usize()?),
        other => return Err(Error::Argument(format!("cannot sweep parameter `{other}`"))),
    }
    Ok(p)
}

/// Six decimals; values that round to zero print without a sign.
pub fn format_value(v: f64) -> String {
    let v = if v.abs() < 5e-7 { 0.0 } else { v };
    format!("{v:.6}")
}

fn init_threads(threads: Option<usize>) -> Result<()> {
    let n = match threads {
        Some(n) => Some(n),
        None => match std::env::var("CONDENT_THREADS") {
            Ok(v) if !v.trim().is_empty() => Some(
                v.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::Argument(format!("CONDENT_THREADS must be a positive integer, got `{v}`")))?,
            ),
            _ => None,
        },
    };
    if let Some(n) = n {
        if n == 0 {
            return Err(Error::Argument("thread count must be positive".into()));
        }
        // A pool may already exist when the CLI runs in-process more than once.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn default_certificate_path(state: &Path, measure: Measure) -> PathBuf {
    let stem = state.file_stem().and_then(|s| s.to_str()).unwrap_or("state");
    state.with_file_name(format!("{stem}.{}.certificate.json", measure.name()))
}

fn cmd_compute(state: &Path, measure: Measure, run: &RunArgs, certificate: Option<&Path>) -> Result<i32> {
    let s = read_state(state)?;
    let c = compute(&s, measure, run)?;
    match &c.note {
        Some(n) => println!("{} {n}", format_value(c.value)),
        None => println!("{}", format_value(c.value)),
    }
    if let Some(cert) = &c.certificate {
        let path = certificate.map(Path::to_path_buf).unwrap_or_else(|| default_certificate_path(state, measure));
        write_text(Some(&path), cert)?;
        eprintln!("certificate: {}", path.display());
    }
    if c.converged {
        Ok(EXIT_OK)
    } else {
        eprintln!("warning: optimizer did not converge; the value is an upper bound from the best run");
        Ok(EXIT_NOT_CONVERGED)
    }
}

fn cmd_sweep(
    family_name: &str,
    measure: Measure,
    param: &str,
    grid: &str,
    params: &FamilyParams,
    run: &RunArgs,
    out: Option<&Path>,
) -> Result<i32> {
    let grid = parse_grid(grid)?;
    if grid.is_empty() {
        return Err(Error::Argument("sweep grid is empty".into()));
    }
    with_param(params, param, grid[0])?;
    let mut csv = String::from("param,value,converged,restarts_used,seconds\n");
    let (mut failed, mut unconverged) = (false, false);
    for &x in &grid {
        let start = Instant::now();
        let row = with_param(params, param, x)
            .and_then(|p| family(family_name, &p))
            .and_then(|f| make_named_state(&f))
            .and_then(|s| compute(&s.into_mixed(), measure, run));
        let secs = start.elapsed().as_secs_f64();
        match row {
            Ok(c) => {
                unconverged |= !c.converged;
                csv.push_str(&format!(
                    "{x},{},{},{},{secs:.3}\n",
                    format_value(c.value),
                    c.converged,
                    c.restarts_used
                ));
            }
            Err(e) => {
                failed = true;
                eprintln!("{param}={x}: {e}");
                csv.push_str(&format!("{x},NaN,false,0,{secs:.3}\n"));
            }
        }
    }
    write_text(out, &csv)?;
    Ok(if failed {
        EXIT_USAGE
    } else if unconverged {
        EXIT_NOT_CONVERGED
    } else {
        EXIT_OK
    })
}

/// Deterministic JSON for a set of reports.
pub fn report_json(reports: &[CheckReport]) -> Result<String> {
    Ok(to_json(&reports)? + "\n")
}

fn cmd_verify(profile: Profile, seed: u64, out: Option<&Path>, scale: f64) -> Result<i32> {
    let reports = run_all_scaled(seed, profile, scale);
    for r in &reports {
        eprintln!(
            "{} {} (margin {:.3e}, tolerance {:.1e}, {} cases)",
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.margin,
            r.tolerance,
            r.cases_run
        );
    }
    write_text(out, &report_json(&reports)?)?;
    Ok(if reports.iter().all(|r| r.passed) {
        EXIT_OK
    } else {
        EXIT_VERIFY_FAILED
    })
}

fn dispatch(cli: Cli) -> Result<i32> {
    init_threads(cli.threads)?;
    match cli.command {
        Command::MakeState { family: name, params, out } => {
            let s = make_named_state(&family(&name, &params)?)?;
            let text = to_json(&StateFile::from_named(&s))? + "\n";
            write_text(out.as_deref(), &text)?;
            if let Some(p) = out {
                let dim: usize = match &s {
                    NamedState::Pure(p) => p.dim(),
                    NamedState::Mixed(m) => m.dim(),
                };
                eprintln!("wrote {} ({dim}-dimensional, labels {})", p.display(), s.labels().join(","));
            }
            Ok(EXIT_OK)
        }
        Command::Compute {
            state,
            measure,
            run,
            certificate,
        } => cmd_compute(&state, measure, &run, certificate.as_deref()),
        Command::Sweep {
            family,
            measure,
            param,
            grid,
            params,
            run,
            out,
        } => cmd_sweep(&family, measure, &param, &grid, &params, &run, out.as_deref()),
        Command::Verify {
            profile,
            seed,
            out,
            tolerance_scale,
        } => cmd_verify(profile.into(), seed, out.as_deref(), tolerance_scale),
    }
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(parse_grid("0:0.5:1").unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(parse_grid("0.1, 0.2").unwrap(), vec![0.1, 0.2]);
        assert!(parse_grid("").unwrap().is_empty());
        assert!(parse_grid("1:0.1:0").unwrap().is_empty());
        assert!(parse_grid("0:0:1").is_err());
    }

    #[test]
    fn families_by_name() {
        let p = FamilyParams {
            p: Some(1.5),
            ..Default::default()
        };
        let err = make_named_state(&family("werner", &p).unwrap()).unwrap_err().to_string();
        assert!(err.contains("p out of range"), "{err}");
        assert!(matches!(family("nope", &p), Err(Error::UnknownFamily(_))));
    }

    #[test]
    fn measures_on_bell() {
        let bell = make_named_state(&Family::Bell).unwrap().into_mixed();
        let run = |split: &str| RunArgs {
            split: Some(split.into()),
            trivial_only: false,
            half: false,
            restarts: Some(2),
            iterations: Some(200),
            tolerance: None,
            seed: None,
        };
        assert_eq!(format_value(compute(&bell, Measure::I, &run("A:B")).unwrap().value), "2.000000");
        assert_eq!(format_value(compute(&bell, Measure::LogNeg, &run("A:B")).unwrap().value), "1.000000");
        assert!((compute(&bell, Measure::CI, &run("A:B")).unwrap().value - 1.0).abs() < 5e-3);
        assert!(compute(&bell, Measure::I, &run("A:C")).is_err());
        assert!(compute(&bell, Measure::Cmi, &run("A:B")).is_err());
    }
}
