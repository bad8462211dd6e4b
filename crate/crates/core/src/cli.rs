//! The `tdm` command line. Reports go to stdout as JSON, one-line summaries
//! to stderr.
//!
//! Exit codes: 0 when every instance was decided, 2 when at least one stayed
//! undecided, 1 on any input error.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::colgen::{check_membership_colgen, ColgenConfig, ColgenError, ColgenOutcome, PricingMode};
use crate::exact::{check_bcm_full, ExactError, MembershipVerdict};
use crate::matrix::{as_bcm, io, Mode, ValidatedMatrix};
use crate::parametric::{
    ar1_toeplitz, cross_bcm_member, cross_tdm_member, equi_bcm_member, equi_beta_lower, equi_variance_bound,
    fast_path, facets_member, known_facets, moving_maxima_weights, toeplitz_extends, toeplitz_sufficient,
    toeplitz_witness, two_dependence_member, two_dependence_witness, two_sector_gamma_grid,
    two_sector_gamma_upper, two_sector_member, CrossParams, EquiParams, Pattern, ToeplitzParams, TwoSectorParams,
};
use crate::report::RunReport;
use crate::stochastic::{
    empirical_tdc, gen_class3_stream, gen_class5_stream, simulate_ar1_max, simulate_two_dependent, SampleMatrix,
    SimConfig,
};
use crate::symmetry::{automorphism_group, check_bcm_symmetric, orbit_count};
use crate::{set_tolerance, tolerance};

pub const EXIT_DECIDED: i32 = 0;
pub const EXIT_INPUT_ERROR: i32 = 1;
pub const EXIT_UNDECIDED: i32 = 2;

/// `auto` takes the symmetric path only when the orbit count is at most this.
pub const SYMMETRIC_ORBIT_CAP: u128 = 100_000;
/// `auto` uses full enumeration up to this dimension.
pub const FULL_DIM_CAP: usize = 20;

/// Environment variable that overrides τ.
pub const TOLERANCE_ENV: &str = "TDM_TOLERANCE";

/// Parses a decimal or a fraction `p/q`, so boundary points such as `2/3`
/// can be given exactly.
pub fn parse_real(s: &str) -> Result<f64, String> {
    let parse = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}"));
    let x = match s.split_once('/') {
        Some((p, q)) => parse(p)? / parse(q)?,
        None => parse(s)?,
    };
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("{s:?} is not a finite number"))
    }
}

#[derive(Debug, Parser, Serialize)]
#[command(name = "tdm", version, about = "Membership tests for tail dependence and Bernoulli compatible matrices")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Decide membership for matrix files (JSON or CSV).
    Check(CheckArgs),
    /// Closed-form tests for structured families.
    #[command(subcommand)]
    Parametric(Family),
    /// Write random test instances.
    Gen(GenArgs),
    /// Simulate a max-stable process and estimate tail dependence.
    #[command(subcommand)]
    Simulate(Process),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeArg {
    Tdm,
    Bcm,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Tdm => Mode::Tdm,
            ModeArg::Bcm => Mode::Bcm,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodArg {
    Auto,
    Full,
    Colgen,
    Symmetric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PricingArg {
    Exact,
    Relaxed,
    Hybrid,
}

#[derive(Debug, Args, Serialize)]
pub struct CheckArgs {
    #[arg(required = true)]
    pub files: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = ModeArg::Tdm)]
    pub mode: ModeArg,
    #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
    pub method: MethodArg,
    /// Column-generation pricing.
    #[arg(long, value_enum, default_value_t = PricingArg::Hybrid)]
    pub pricing: PricingArg,
    /// Exact pricing runs on every k-th iteration under hybrid pricing.
    #[arg(long, default_value_t = 10)]
    pub hybrid_period: usize,
    #[arg(long, default_value_t = 10_000)]
    pub max_iter: usize,
    /// Run column generation to optimality so the distance is exact.
    #[arg(long)]
    pub no_early_exit: bool,
    /// Omit certificates and Farkas rays from the report.
    #[arg(long)]
    pub brief: bool,
    /// Worker threads; files are processed in parallel.
    #[arg(long, default_value_t = 1)]
    #[serde(skip)]
    pub jobs: usize,
}

impl CheckArgs {
    pub fn colgen_config(&self) -> ColgenConfig {
        ColgenConfig {
            pricing: match self.pricing {
                PricingArg::Exact => PricingMode::ExactBqp,
                PricingArg::Relaxed => PricingMode::QpRelaxed,
                PricingArg::Hybrid => PricingMode::Hybrid(self.hybrid_period.max(1)),
            },
            max_iterations: self.max_iter,
            early_exit: !self.no_early_exit,
            ..ColgenConfig::default()
        }
    }
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// Equi-correlation BCM: diagonal α, off-diagonal β.
    Equi {
        #[arg(long, value_parser = parse_real)]
        alpha: f64,
        #[arg(long)]
        d: usize,
        /// Off-diagonal value to test; without it only the bounds are printed.
        #[arg(long, value_parser = parse_real)]
        beta: Option<f64>,
    },
    /// Toeplitz TDM from its lag values or an AR(1) decay.
    Toeplitz {
        /// Lag-1, lag-2, ... values, comma separated.
        #[arg(long, value_delimiter = ',', required_unless_present = "phi", conflicts_with = "phi")]
        alphas: Vec<f64>,
        /// Lag-k value φ^k.
        #[arg(long, value_parser = parse_real, requires = "d")]
        phi: Option<f64>,
        #[arg(long)]
        d: Option<usize>,
        /// Include the witness atoms when the sufficient condition holds.
        #[arg(long)]
        witness: bool,
    },
    /// Two-dependent Toeplitz TDM with lag values α, β.
    TwoDep {
        #[arg(long, value_parser = parse_real)]
        alpha: f64,
        #[arg(long, value_parser = parse_real)]
        beta: f64,
        #[arg(long)]
        d: usize,
        /// Include the witness atoms for members.
        #[arg(long)]
        witness: bool,
    },
    /// Arrow-shaped matrix: only the last row and column are off-diagonal.
    Cross {
        /// Last-column entries, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        alphas: Vec<f64>,
        /// Diagonal entries for a BCM; omit for a unit-diagonal TDM.
        #[arg(long, value_delimiter = ',')]
        betas: Option<Vec<f64>>,
    },
    /// Two sectors of sizes d1, d2 with within-sector α, β and cross γ.
    TwoSector {
        #[arg(long)]
        d1: usize,
        #[arg(long)]
        d2: usize,
        #[arg(long, value_parser = parse_real, required_unless_present = "grid")]
        alpha: Option<f64>,
        #[arg(long, value_parser = parse_real, required_unless_present = "grid")]
        beta: Option<f64>,
        #[arg(long, value_parser = parse_real)]
        gamma: Option<f64>,
        /// Sweep an n×n grid of (α, β) and emit CSV of the largest feasible γ.
        #[arg(long, conflicts_with_all = ["alpha", "beta", "gamma"])]
        grid: Option<usize>,
        /// CSV destination for --grid; stdout when omitted.
        #[arg(long, requires = "grid")]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GenClass {
    /// Random convex combinations of vertices (members by construction).
    Class3,
    /// A class-3 matrix with one extra rank-one bump.
    Class5,
}

#[derive(Debug, Args, Serialize)]
pub struct GenArgs {
    #[arg(value_enum)]
    pub class: GenClass,
    #[arg(long)]
    pub d: usize,
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct SimArgs {
    /// Sample rows.
    #[arg(long)]
    pub n: usize,
    /// Window width: columns hold lags 0..d.
    #[arg(long, default_value_t = 3)]
    pub d: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Exceedance fraction for the tail-dependence estimate.
    #[arg(long, default_value_t = 0.01)]
    pub u: f64,
    /// Write the sample matrix here as CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Process {
    /// Max-autoregression with coefficient φ.
    Ar1max {
        #[arg(long, value_parser = parse_real)]
        phi: f64,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Moving maximum of three Fréchet lags, from weights (a, b, c) or from
    /// target lag values (α, β).
    Movmax {
        #[arg(long, value_parser = parse_real, requires_all = ["b", "c"], conflicts_with_all = ["alpha", "beta"])]
        a: Option<f64>,
        #[arg(long, value_parser = parse_real)]
        b: Option<f64>,
        #[arg(long, value_parser = parse_real)]
        c: Option<f64>,
        #[arg(long, value_parser = parse_real, requires = "beta", required_unless_present = "a")]
        alpha: Option<f64>,
        #[arg(long, value_parser = parse_real)]
        beta: Option<f64>,
        #[command(flatten)]
        sim: SimArgs,
    },
}

/// Which decision procedure produced a `check` verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PathTag {
    Parametric,
    Symmetric,
    Full,
    Colgen,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Decided,
    Undecided,
    Error,
}

impl Status {
    fn exit_code(self) -> i32 {
        match self {
            Status::Decided => EXIT_DECIDED,
            Status::Undecided => EXIT_UNDECIDED,
            Status::Error => EXIT_INPUT_ERROR,
        }
    }
}

/// Combined exit code: any error beats any undecided result.
fn exit_code(statuses: impl IntoIterator<Item = Status>) -> i32 {
    statuses.into_iter().max().unwrap_or(Status::Decided).exit_code()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupInfo {
    pub order: u128,
    pub orbits: u128,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColgenSummary {
    pub distance: f64,
    pub lower_bound: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pricing_calls_exact: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pricing_calls_relaxed: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub columns: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub early_exit: Option<bool>,
}

impl From<&ColgenOutcome> for ColgenSummary {
    fn from(o: &ColgenOutcome) -> Self {
        Self {
            distance: o.distance,
            lower_bound: o.lower_bound,
            iterations: Some(o.iterations),
            pricing_calls_exact: Some(o.pricing_calls_exact),
            pricing_calls_relaxed: Some(o.pricing_calls_relaxed),
            columns: Some(o.columns),
            early_exit: Some(o.early_exit),
        }
    }
}

/// Verdict of one `check` instance. `member` is `None` when undecided.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Decision {
    pub path: PathTag,
    pub member: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pattern: Option<Pattern>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub group: Option<GroupInfo>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub colgen: Option<ColgenSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<MembershipVerdict>,
}

impl Decision {
    fn from_verdict(path: PathTag, v: MembershipVerdict) -> Self {
        Self {
            path,
            member: Some(v.member),
            pattern: None,
            group: None,
            colgen: None,
            verdict: Some(v),
        }
    }
}

fn run_colgen(m: &ValidatedMatrix, cfg: &ColgenConfig) -> Result<Decision, ExactError> {
    let (member, summary, verdict) = match check_membership_colgen(&as_bcm(m), cfg) {
        Ok(out) => (Some(out.verdict.member), ColgenSummary::from(&out), Some(out.verdict)),
        Err(ColgenError::PricingUndecided { lower, upper, .. } | ColgenError::IterationLimit { lower, upper }) => {
            let s = ColgenSummary {
                distance: upper,
                lower_bound: lower,
                iterations: None,
                pricing_calls_exact: None,
                pricing_calls_relaxed: None,
                columns: None,
                early_exit: None,
            };
            (None, s, None)
        }
        Err(e) => return Err(e.into()),
    };
    Ok(Decision {
        path: PathTag::Colgen,
        member,
        pattern: None,
        group: None,
        colgen: Some(summary),
        verdict,
    })
}

/// Decides membership of `m` with the requested method. `auto` tries the
/// parametric fast path, then the symmetric LP when the automorphism group is
/// nontrivial with at most [`SYMMETRIC_ORBIT_CAP`] vertex orbits, then full
/// enumeration up to [`FULL_DIM_CAP`], then column generation.
pub fn decide(m: &ValidatedMatrix, method: MethodArg, cfg: &ColgenConfig) -> Result<Decision, ExactError> {
    match method {
        MethodArg::Full => Ok(Decision::from_verdict(PathTag::Full, check_bcm_full(&as_bcm(m))?)),
        MethodArg::Colgen => run_colgen(m, cfg),
        MethodArg::Symmetric => {
            let g = automorphism_group(m.matrix()).map_err(ExactError::from)?;
            let v = check_bcm_symmetric(&as_bcm(m), Some(&g)).map_err(ExactError::from)?;
            Ok(Decision {
                group: Some(GroupInfo {
                    order: g.order(),
                    orbits: orbit_count(&g),
                }),
                ..Decision::from_verdict(PathTag::Symmetric, v)
            })
        }
        MethodArg::Auto => {
            if let Some((pattern, v)) = fast_path(m) {
                return Ok(Decision {
                    pattern: Some(pattern),
                    ..Decision::from_verdict(PathTag::Parametric, v)
                });
            }
            // The automorphism search refuses large d; that simply rules the
            // symmetric path out.
            if let Ok(g) = automorphism_group(m.matrix()) {
                let orbits = orbit_count(&g);
                if g.order() > 1 && orbits <= SYMMETRIC_ORBIT_CAP {
                    let v = check_bcm_symmetric(&as_bcm(m), Some(&g)).map_err(ExactError::from)?;
                    return Ok(Decision {
                        group: Some(GroupInfo { order: g.order(), orbits }),
                        ..Decision::from_verdict(PathTag::Symmetric, v)
                    });
                }
            }
            if m.d() <= FULL_DIM_CAP {
                decide(m, MethodArg::Full, cfg)
            } else {
                run_colgen(m, cfg)
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
struct CheckResult {
    file: String,
    status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    d: Option<usize>,
    #[serde(flatten, skip_serializing_if = "Option::is_none")]
    decision: Option<Decision>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

fn check_one(path: &Path, args: &CheckArgs, cfg: &ColgenConfig) -> CheckResult {
    let file = path.display().to_string();
    let m = match io::read_matrix(path, args.mode.into()) {
        Ok(m) => m,
        Err(e) => {
            return CheckResult {
                file,
                status: Status::Error,
                d: None,
                decision: None,
                error: Some(e.to_string()),
            }
        }
    };
    let d = Some(m.d());
    match decide(&m, args.method, cfg) {
        Ok(mut dec) => {
            if args.brief {
                if let Some(v) = dec.verdict.as_mut() {
                    v.certificate = None;
                    v.farkas_ray = None;
                }
            }
            let status = if dec.member.is_some() { Status::Decided } else { Status::Undecided };
            CheckResult {
                file,
                status,
                d,
                decision: Some(dec),
                error: None,
            }
        }
        Err(e) => CheckResult {
            file,
            status: Status::Error,
            d,
            decision: None,
            error: Some(e.to_string()),
        },
    }
}

/// Maps `f` over `0..n` on up to `jobs` threads, keeping input order.
fn parallel_map<T: Send>(n: usize, jobs: usize, f: impl Fn(usize) -> T + Sync) -> Vec<T> {
    let slots: Vec<Mutex<Option<T>>> = (0..n).map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|s| {
        for _ in 0..jobs.clamp(1, n.max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n {
                    break;
                }
                let r = f(i);
                *slots[i].lock().expect("slot lock") = Some(r);
            });
        }
    });
    slots.into_iter().map(|m| m.into_inner().expect("slot lock").expect("every slot filled")).collect()
}

fn describe(member: Option<bool>) -> &'static str {
    match member {
        Some(true) => "member",
        Some(false) => "not a member",
        None => "undecided",
    }
}

fn cmd_check(args: &CheckArgs, report: &mut RunReport, err: &mut dyn Write) -> Result<i32> {
    let cfg = args.colgen_config();
    let timed = parallel_map(args.files.len(), args.jobs, |i| {
        let t = Instant::now();
        let r = check_one(&args.files[i], args, &cfg);
        (r, t.elapsed().as_secs_f64())
    });
    let mut statuses = Vec::new();
    for (r, secs) in timed {
        match (&r.decision, &r.error) {
            (_, Some(e)) => writeln!(err, "{}: error: {e}", r.file)?,
            (Some(dec), None) => {
                let path = serde_json::to_value(dec.path)?;
                writeln!(err, "{}: {} via {} ({secs:.3} s)", r.file, describe(dec.member), path.as_str().unwrap_or(""))?
            }
            (None, None) => {}
        }
        statuses.push(r.status);
        report.push(serde_json::to_value(&r)?, secs);
    }
    Ok(exit_code(statuses))
}

fn atoms_json(q: &crate::matrix::AtomVector) -> Value {
    serde_json::to_value(crate::parametric::atoms_to_certificate(q)).expect("certificate serializes")
}

/// Returns without pushing a result when the grid CSV went to `out`.
fn cmd_parametric(family: &Family, report: &mut RunReport, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let t = Instant::now();
    let (result, status) = match family {
        Family::Equi { alpha, d, beta } => {
            EquiParams::new(*alpha, beta.unwrap_or(0.0), *d)?;
            let mut r = json!({
                "family": "equi",
                "alpha": alpha,
                "d": d,
                "beta_lower": equi_beta_lower(*alpha, *d),
                "variance_bound": equi_variance_bound(*alpha, *d),
            });
            if let Some(b) = beta {
                let member = equi_bcm_member(&EquiParams::new(*alpha, *b, *d)?);
                r["beta"] = json!(b);
                r["member"] = json!(member);
                writeln!(err, "equi d={d} alpha={alpha} beta={b}: {}", describe(Some(member)))?;
            } else {
                writeln!(err, "equi d={d} alpha={alpha}: beta_lower = {}", equi_beta_lower(*alpha, *d))?;
            }
            (r, Status::Decided)
        }
        Family::Toeplitz { alphas, phi, d, witness } => {
            let p = match phi {
                Some(phi) => ar1_toeplitz(*phi, d.ok_or_else(|| anyhow!("--phi needs --d"))?)?,
                None => ToeplitzParams::new(alphas.clone())?,
            };
            let sufficient = toeplitz_sufficient(&p);
            let (member, decided_by) = if sufficient {
                (Some(true), Some("sufficient-condition"))
            } else if p.d() <= FULL_DIM_CAP {
                let m = p.matrix()?.validate(Mode::Tdm)?;
                (Some(check_bcm_full(&as_bcm(&m))?.member), Some("full"))
            } else {
                (None, None)
            };
            let mut r = json!({
                "family": "toeplitz",
                "d": p.d(),
                "alphas": p.alphas,
                "sufficient": sufficient,
                "extends": toeplitz_extends(&p),
                "member": member,
                "decided_by": decided_by,
            });
            if *witness && sufficient {
                r["witness"] = atoms_json(&toeplitz_witness(&p)?);
            }
            writeln!(err, "toeplitz d={}: {}", p.d(), describe(member))?;
            (r, if member.is_some() { Status::Decided } else { Status::Undecided })
        }
        Family::TwoDep { alpha, beta, d, witness } => {
            let member = two_dependence_member(*alpha, *beta, *d)?;
            let mut r = json!({"family": "two-dep", "alpha": alpha, "beta": beta, "d": d, "member": member});
            if let Ok((a, b, c)) = moving_maxima_weights(*alpha, *beta) {
                r["moving_maxima"] = json!({"a": a, "b": b, "c": c});
            }
            if *witness && member {
                r["witness"] = atoms_json(&two_dependence_witness(*alpha, *beta, *d)?);
            }
            writeln!(err, "two-dep d={d} alpha={alpha} beta={beta}: {}", describe(Some(member)))?;
            (r, Status::Decided)
        }
        Family::Cross { alphas, betas } => {
            let (mode, member) = match betas {
                Some(b) => ("bcm", cross_bcm_member(&CrossParams::new(b.clone(), alphas.clone())?)),
                None => ("tdm", cross_tdm_member(alphas)),
            };
            writeln!(err, "cross ({mode}) d={}: {}", alphas.len() + 1, describe(Some(member)))?;
            (json!({"family": "cross", "mode": mode, "alphas": alphas, "betas": betas, "member": member}), Status::Decided)
        }
        Family::TwoSector { d1, d2, alpha, beta, gamma, grid, out: csv_out } => {
            if let Some(n) = grid {
                let rows = two_sector_gamma_grid(*d1, *d2, *n)?;
                let write = |w: &mut dyn Write| -> Result<()> {
                    let mut c = csv::Writer::from_writer(w);
                    c.write_record(["alpha", "beta", "gamma_upper"])?;
                    for (a, b, g) in &rows {
                        c.serialize((a, b, g))?;
                    }
                    c.flush()?;
                    Ok(())
                };
                let Some(path) = csv_out else {
                    write(out)?;
                    writeln!(err, "two-sector grid ({d1}, {d2}): {} rows", rows.len())?;
                    return Ok(EXIT_DECIDED);
                };
                let mut f = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
                write(&mut f)?;
                f.flush()?;
                writeln!(err, "two-sector grid ({d1}, {d2}): {} rows -> {}", rows.len(), path.display())?;
                (
                    json!({"family": "two-sector", "d1": d1, "d2": d2, "grid": n, "rows": rows.len(), "csv": path}),
                    Status::Decided,
                )
            } else {
                let (a, b) = (alpha.unwrap_or_default(), beta.unwrap_or_default());
                let upper = two_sector_gamma_upper(a, b, *d1, *d2)?;
                let mut r = json!({"family": "two-sector", "d1": d1, "d2": d2, "alpha": a, "beta": b, "gamma_upper": upper});
                if let Some(g) = gamma {
                    let p = TwoSectorParams::new(a, b, *g, *d1, *d2)?;
                    r["gamma"] = json!(g);
                    r["member"] = json!(two_sector_member(&p)?);
                    if let Ok(f) = known_facets(*d1, *d2) {
                        r["facets_member"] = json!(facets_member(&f, a, b, *g));
                    }
                }
                writeln!(err, "two-sector ({d1}, {d2}) alpha={a} beta={b}: gamma_upper = {upper}")?;
                (r, Status::Decided)
            }
        }
    };
    report.push(result, t.elapsed().as_secs_f64());
    Ok(status.exit_code())
}

fn cmd_gen(args: &GenArgs, report: &mut RunReport, err: &mut dyn Write) -> Result<i32> {
    std::fs::create_dir_all(&args.out_dir).with_context(|| format!("creating {}", args.out_dir.display()))?;
    let label = match args.class {
        GenClass::Class3 => "class3",
        GenClass::Class5 => "class5",
    };
    let mut statuses = Vec::new();
    for k in 0..args.count {
        let t = Instant::now();
        let path = args.out_dir.join(format!("{label}_d{}_s{}_{k:04}.json", args.d, args.seed));
        let mut r = json!({"file": path, "class": label, "index": k, "d": args.d});
        let matrix = match args.class {
            GenClass::Class3 => {
                let inst = gen_class3_stream(args.d, args.seed, k as u64)?;
                r["atoms"] = json!(inst.certificate.len());
                r["member"] = json!(true);
                inst.matrix.into_inner()
            }
            GenClass::Class5 => {
                let inst = gen_class5_stream(args.d, args.seed, k as u64)?;
                r["first_vertex"] = json!(inst.first_vertex);
                r["out_of_range"] = json!(inst.out_of_range);
                let verdict = match inst.matrix.clone().validate(Mode::Bcm) {
                    Err(_) => json!({"status": "invalid"}),
                    Ok(m) => {
                        let dec = decide(&m, MethodArg::Auto, &ColgenConfig::default())?;
                        if dec.member.is_none() {
                            statuses.push(Status::Undecided);
                        }
                        json!({"status": if dec.member.is_some() { "decided" } else { "undecided" }, "member": dec.member, "path": dec.path})
                    }
                };
                r["verdict"] = verdict;
                inst.matrix
            }
        };
        std::fs::write(&path, io::to_json(&matrix)).with_context(|| format!("writing {}", path.display()))?;
        writeln!(err, "wrote {}", path.display())?;
        report.push(r, t.elapsed().as_secs_f64());
    }
    Ok(exit_code(statuses))
}

/// Lag-k tail dependence of `max(c X_{i−2}, b X_{i−1}, a X_i)`.
fn movmax_tdc(a: f64, b: f64, c: f64, lag: usize) -> f64 {
    match lag {
        0 => 1.0,
        1 => a.min(b) + b.min(c),
        2 => a.min(c),
        _ => 0.0,
    }
}

fn tdc_summary(s: &SampleMatrix, u: f64, theory: impl Fn(usize) -> f64) -> Result<Vec<Value>> {
    (1..s.d())
        .map(|k| {
            let e = empirical_tdc(s, 0, k, u)?;
            Ok(json!({
                "lag": k,
                "estimate": e.estimate,
                "std_error": e.std_error,
                "exceedances": e.exceedances,
                "theory": theory(k),
            }))
        })
        .collect()
}

fn write_samples(s: &SampleMatrix, path: &Option<PathBuf>) -> Result<()> {
    if let Some(p) = path {
        let f = File::create(p).with_context(|| format!("creating {}", p.display()))?;
        s.write_csv(BufWriter::new(f))?;
    }
    Ok(())
}

fn cmd_simulate(process: &Process, report: &mut RunReport, err: &mut dyn Write) -> Result<i32> {
    let t = Instant::now();
    let result = match process {
        Process::Ar1max { phi, sim } => {
            let s = simulate_ar1_max(*phi, &SimConfig::new(sim.n, sim.d, sim.seed))?;
            write_samples(&s, &sim.out)?;
            let lags = tdc_summary(&s, sim.u, |k| phi.powi(k as i32))?;
            json!({"process": "ar1max", "phi": phi, "n": sim.n, "d": sim.d, "seed": sim.seed, "u": sim.u, "csv": sim.out, "tdc": lags})
        }
        Process::Movmax { a, b, c, alpha, beta, sim } => {
            let (a, b, c) = match (a, b, c, alpha, beta) {
                (Some(a), Some(b), Some(c), _, _) => (*a, *b, *c),
                (_, _, _, Some(al), Some(be)) => moving_maxima_weights(*al, *be)?,
                _ => bail!("movmax needs --a --b --c or --alpha --beta"),
            };
            let s = simulate_two_dependent(a, b, c, &SimConfig::new(sim.n, sim.d, sim.seed))?;
            write_samples(&s, &sim.out)?;
            let lags = tdc_summary(&s, sim.u, |k| movmax_tdc(a, b, c, k))?;
            json!({"process": "movmax", "weights": {"a": a, "b": b, "c": c}, "n": sim.n, "d": sim.d, "seed": sim.seed, "u": sim.u, "csv": sim.out, "tdc": lags})
        }
    };
    for lag in result["tdc"].as_array().into_iter().flatten() {
        writeln!(
            err,
            "lag {}: estimate {:.4} ± {:.4} (theory {:.4})",
            lag["lag"], lag["estimate"].as_f64().unwrap_or(f64::NAN), lag["std_error"].as_f64().unwrap_or(f64::NAN),
            lag["theory"].as_f64().unwrap_or(f64::NAN)
        )?;
    }
    report.push(result, t.elapsed().as_secs_f64());
    Ok(EXIT_DECIDED)
}

/// Reads τ from [`TOLERANCE_ENV`], if set.
fn tolerance_from_env() -> Result<Option<f64>> {
    match std::env::var(TOLERANCE_ENV) {
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => bail!("{TOLERANCE_ENV}: {e}"),
        Ok(s) => {
            let tau: f64 = s.trim().parse().with_context(|| format!("{TOLERANCE_ENV}={s:?} is not a number"))?;
            if !(tau.is_finite() && tau > 0.0) {
                bail!("{TOLERANCE_ENV} must be positive and finite, got {s}");
            }
            Ok(Some(tau))
        }
    }
}

/// Runs the CLI on `argv` (including the program name) and returns the exit
/// code. The JSON report is written to `out`, summaries and errors to `err`.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT_ERROR } else { EXIT_DECIDED };
            let sink: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(sink, "{}", e.render());
            return code;
        }
    };
    match execute(&cli, &argv, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            EXIT_INPUT_ERROR
        }
    }
}

fn execute(cli: &Cli, argv: &[OsString], out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    if let Some(tau) = tolerance_from_env()? {
        set_tolerance(tau);
    }
    let start = Instant::now();
    let command = argv.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let mut report = RunReport::new(command, &cli.command, tolerance());
    let code = match &cli.command {
        Command::Check(args) => cmd_check(args, &mut report, err)?,
        Command::Parametric(family) => {
            let code = cmd_parametric(family, &mut report, out, err)?;
            if report.results.is_empty() {
                return Ok(code);
            }
            code
        }
        Command::Gen(args) => cmd_gen(args, &mut report, err)?,
        Command::Simulate(process) => cmd_simulate(process, &mut report, err)?,
    };
    report.timing.total_seconds = start.elapsed().as_secs_f64();
    writeln!(out, "{}", report.to_json())?;
    Ok(code)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::CandidateMatrix;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(std::iter::once("tdm").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn reals_and_fractions() {
        assert_eq!(parse_real("0.25"), Ok(0.25));
        assert_eq!(parse_real("1/4"), Ok(0.25));
        assert_eq!(parse_real(" 2 / 3 "), Ok(2.0 / 3.0));
        assert!(parse_real("1/0").is_err() && parse_real("x").is_err() && parse_real("nan").is_err());
    }

    #[test]
    fn exit_code_prefers_errors() {
        assert_eq!(exit_code([]), EXIT_DECIDED);
        assert_eq!(exit_code([Status::Decided, Status::Undecided]), EXIT_UNDECIDED);
        assert_eq!(exit_code([Status::Undecided, Status::Error, Status::Decided]), EXIT_INPUT_ERROR);
    }

    #[test]
    fn parallel_map_keeps_order() {
        let v = parallel_map(50, 4, |i| i * i);
        assert_eq!(v, (0..50).map(|i| i * i).collect::<Vec<_>>());
        assert!(parallel_map(0, 3, |i| i).is_empty());
    }

    #[test]
    fn auto_routes_by_structure() {
        let cfg = ColgenConfig::default();
        let equi = CandidateMatrix::from_fn(4, |i, j| if i == j { 0.5 } else { 1.0 / 6.0 })
            .unwrap()
            .validate(Mode::Bcm)
            .unwrap();
        assert_eq!(decide(&equi, MethodArg::Auto, &cfg).unwrap().path, PathTag::Parametric);

        // Swapping coordinates 0 and 1 fixes this matrix, and no family matches.
        let sym = CandidateMatrix::from_rows(vec![
            vec![1.0, 0.2, 0.3, 0.1],
            vec![0.2, 1.0, 0.3, 0.1],
            vec![0.3, 0.3, 1.0, 0.4],
            vec![0.1, 0.1, 0.4, 1.0],
        ])
        .unwrap()
        .validate(Mode::Tdm)
        .unwrap();
        let dec = decide(&sym, MethodArg::Auto, &cfg).unwrap();
        assert_eq!(dec.path, PathTag::Symmetric);
        assert_eq!(dec.group.as_ref().unwrap().order, 2);
        assert_eq!(dec.member, decide(&sym, MethodArg::Full, &cfg).unwrap().member);

        let generic = CandidateMatrix::from_rows(vec![vec![1.0, 0.2, 0.3], vec![0.2, 1.0, 0.4], vec![0.3, 0.4, 1.0]])
            .unwrap()
            .validate(Mode::Tdm)
            .unwrap();
        assert_eq!(decide(&generic, MethodArg::Auto, &cfg).unwrap().path, PathTag::Full);
    }

    #[test]
    fn parametric_commands_report_values() {
        let (code, out, _) = run_capture(&["parametric", "equi", "--alpha", "0.5", "--d", "4"]);
        assert_eq!(code, 0);
        let r: RunReport = serde_json::from_str(&out).unwrap();
        assert!((r.results[0]["beta_lower"].as_f64().unwrap() - 1.0 / 6.0).abs() < 1e-12);

        let (code, out, _) = run_capture(&["parametric", "two-sector", "--d1", "2", "--d2", "2", "--alpha", "0", "--beta", "0"]);
        assert_eq!(code, 0);
        let r: RunReport = serde_json::from_str(&out).unwrap();
        assert!((r.results[0]["gamma_upper"].as_f64().unwrap() - 0.5).abs() < 1e-9);

        // (2/3, 1/3) lies on the edge 2α − β = 1; four-digit rounding of it
        // lands just outside.
        let member = |a: &str, b: &str| {
            let (code, out, _) = run_capture(&["parametric", "two-dep", "--alpha", a, "--beta", b, "--d", "6"]);
            assert_eq!(code, 0);
            let r: RunReport = serde_json::from_str(&out).unwrap();
            r.results[0]["member"].as_bool().unwrap()
        };
        assert!(member("2/3", "1/3"));
        assert!(!member("0.6667", "0.3333"));
        assert!(member("0.6666", "0.3333"));
    }

    #[test]
    fn bad_input_exits_one() {
        assert_eq!(run_capture(&["check", "/nonexistent/matrix.json"]).0, EXIT_INPUT_ERROR);
        assert_eq!(run_capture(&["parametric", "equi", "--alpha", "2", "--d", "3"]).0, EXIT_INPUT_ERROR);
        assert_eq!(run_capture(&["frobnicate"]).0, EXIT_INPUT_ERROR);
        assert_eq!(run_capture(&["--help"]).0, EXIT_DECIDED);
    }
}
