//! Command-line front end: parse presentation files, run homology and
//! lower-central computations, run the verification suites, and emit
//! tables or schema-stable JSON. Exit codes: 0 success, 2 size refusal
//! (budget or enumeration cap), 1 anything else.

mod cache;
mod coeff;
mod report;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use relhom::foxmagnus::{magnus_matrix, verify_relation_sequence};
use relhom::freelie::{gamma_quotient, j_n, torsion_report};
use relhom::homology::{
    bar_homology, five_term, h1_trivial, h_even, hopf_h2, DEFAULT_BUDGET,
};
use relhom::intlattice::lattices_equal;
use relhom::prescat::{
    coproduct_injectivity_check, equalizer_limit, gamma_equalizer, splitting_check,
};
use relhom::presentations::{enumerate_presentation, parse_presentation, EnumeratedPresentation};
use relhom::zgmod::{trivial_module, ZGModule};

use cache::Cache;
use report::{check, presentation_hash, Check, Report, WireInvariants};

/// Default cap on Todd-Coxeter table slots; RELHOM_COSET_LIMIT overrides.
const DEFAULT_COSET_LIMIT: usize = 20_000;

#[derive(Parser)]
#[command(name = "relhom", about = "Exact homology of finitely presented groups via relation modules")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integral homology H_k(G, M): even degrees from tensor powers of the
    /// relation module, odd degrees and H_1 for trivial coefficients.
    Hom(Job),
    /// Lower-central quotients gamma_n R/[gamma_n R, F] and the kernel J_n
    /// of the coinvariant comparison map.
    Lie(Job),
    /// Verification suites; one PASS/FAIL line per check, exit 0 iff all pass.
    Verify(VerifyJob),
    /// Compare the doubling-equalizer limit with even homology.
    Limit(LimitJob),
}

#[derive(Args)]
struct Job {
    /// Presentation file.
    #[arg(short = 'p', long = "presentation", value_name = "FILE")]
    presentation: PathBuf,

    /// Tensor-power degree n (reports homological degree 2n).
    #[arg(short = 'n', value_name = "N", default_value_t = 1, value_parser = parse_positive)]
    n: usize,

    /// Report every degree from 1 through 2N+1 instead of a single one.
    #[arg(long = "max-n", value_name = "N", value_parser = parse_positive)]
    max_n: Option<usize>,

    /// Coefficient module: "trivial" or a descriptor file.
    #[arg(long = "coeff", value_name = "FILE|trivial", default_value = "trivial")]
    coeff: String,

    /// Emit the JSON schema instead of a table.
    #[arg(long = "json")]
    json: bool,

    /// Directory for the result cache.
    #[arg(long = "cache", value_name = "DIR")]
    cache: Option<PathBuf>,

    /// Refuse computations whose ambient lattice exceeds this many columns.
    #[arg(long = "budget", value_name = "COLS", default_value_t = DEFAULT_BUDGET, value_parser = parse_positive)]
    budget: usize,

    /// Log per-stage wall-clock timings to stderr.
    #[arg(long = "timings")]
    timings: bool,
}

#[derive(Args)]
struct VerifyJob {
    #[command(flatten)]
    job: Job,

    /// Which checks to run.
    #[arg(long = "suite", value_enum, default_value_t = Suite::All)]
    suite: Suite,
}

#[derive(Args)]
struct LimitJob {
    #[command(flatten)]
    job: Job,

    /// Compare free-Lie submodules instead of full tensor powers.
    #[arg(long = "gamma")]
    gamma: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Suite {
    /// Exactness of the relation sequence.
    Sequence,
    /// Lower-central torsion bounds.
    Lie,
    /// Everything, including five-term exactness, split monomorphisms,
    /// coproduct injectivity, and the bar-resolution oracle.
    All,
}

fn parse_positive(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(v) if v >= 1 => Ok(v),
        _ => Err("must be a positive integer".to_string()),
    }
}

#[derive(Debug)]
enum CliError {
    Io(PathBuf, std::io::Error),
    Math(relhom::Error),
    Config(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Io(path, e) => write!(f, "{}: {e}", path.display()),
            CliError::Math(e) => write!(f, "{e}"),
            CliError::Config(msg) => write!(f, "{msg}"),
        }
    }
}

impl From<relhom::Error> for CliError {
    fn from(e: relhom::Error) -> Self {
        CliError::Math(e)
    }
}

impl CliError {
    /// Size refusals are deliberate non-answers and get their own code so
    /// batch drivers can widen the budget and retry.
    fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Math(relhom::Error::Budget { .. })
            | CliError::Math(relhom::Error::EnumerationLimit { .. }) => ExitCode::from(2),
            _ => ExitCode::FAILURE,
        }
    }
}

/// Stage timer; silent unless --timings was given.
#[derive(Clone, Copy)]
struct Stages {
    on: bool,
}

impl Stages {
    fn time<T>(&self, name: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let value = f();
        if self.on {
            eprintln!("timing: {name} {:.3?}", start.elapsed());
        }
        value
    }
}

/// Everything a command handler needs: the enumerated presentation, the
/// coefficient module, and the texts that key the cache.
struct Loaded {
    ep: EnumeratedPresentation,
    coeff: ZGModule,
    trivial_coeff: bool,
    presentation_text: String,
    coeff_text: String,
    hash: String,
    budget: usize,
    cache: Option<Cache>,
    stages: Stages,
}

fn coset_limit() -> Result<usize, CliError> {
    match std::env::var("RELHOM_COSET_LIMIT") {
        Ok(v) => v
            .parse::<usize>()
            .ok()
            .filter(|&n| n >= 1)
            .ok_or_else(|| CliError::Config("RELHOM_COSET_LIMIT must be a positive integer".into())),
        Err(_) => Ok(DEFAULT_COSET_LIMIT),
    }
}

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(path.to_path_buf(), e))
}

fn load(job: &Job) -> Result<Loaded, CliError> {
    let stages = Stages { on: job.timings };
    let presentation_text = read_file(&job.presentation)?;
    let hash = presentation_hash(&presentation_text);
    let p = parse_presentation(&presentation_text)?;
    let limit = coset_limit()?;
    let ep = stages.time("enumeration", || enumerate_presentation(p, limit))?;
    let (coeff, trivial_coeff, coeff_text) = if job.coeff == "trivial" {
        (trivial_module(&ep.group, 1), true, "trivial".to_string())
    } else {
        let text = read_file(Path::new(&job.coeff))?;
        (coeff::load_module(&text, &ep)?, false, text)
    };
    let cache = match &job.cache {
        Some(dir) => Some(Cache::open(dir).map_err(|e| CliError::Io(dir.clone(), e))?),
        None => None,
    };
    Ok(Loaded {
        ep,
        coeff,
        trivial_coeff,
        presentation_text,
        coeff_text,
        hash,
        budget: job.budget,
        cache,
        stages,
    })
}

impl Loaded {
    fn report(&self, degree: usize, result: WireInvariants, checks: Vec<Check>) -> Report {
        Report {
            group_order: self.ep.group.order(),
            presentation_hash: self.hash.clone(),
            degree,
            result,
            checks,
        }
    }

    /// Compute one degree through the cache: hits skip the closure, misses
    /// run it and publish the entry with an atomic rename.
    fn cached(
        &self,
        op: &str,
        degree: usize,
        compute: impl FnOnce() -> Result<Report, CliError>,
    ) -> Result<Report, CliError> {
        let key = Cache::key(op, degree, &self.presentation_text, &self.coeff_text);
        if let Some(cache) = &self.cache {
            if let Some(found) = cache.get(&key) {
                return Ok(found);
            }
        }
        let report = compute()?;
        if let Some(cache) = &self.cache {
            cache
                .put(&key, &report)
                .map_err(|e| CliError::Io(PathBuf::from("cache"), e))?;
        }
        Ok(report)
    }
}

/// Rust ignores SIGPIPE by default, turning an early-exiting consumer
/// (`relhom ... | head`) into a broken-pipe panic; restore the quiet
/// Unix-filter behavior.
#[cfg(unix)]
fn reset_sigpipe() {
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
}

#[cfg(not(unix))]
fn reset_sigpipe() {}

fn main() -> ExitCode {
    reset_sigpipe();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Hom(job) => cmd_hom(&job),
        Command::Lie(job) => cmd_lie(&job),
        Command::Verify(v) => cmd_verify(&v),
        Command::Limit(l) => cmd_limit(&l),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Print reports as a table or as JSON: a single object for one degree, an
/// array when a range was requested.
fn emit(reports: &[Report], json: bool, ranged: bool) {
    if json {
        let text = if ranged {
            serde_json::to_string(&reports).expect("reports always serialize")
        } else {
            serde_json::to_string(&reports[0]).expect("reports always serialize")
        };
        println!("{text}");
        return;
    }
    for r in reports {
        println!("H_{} = {}", r.degree, r.result);
        for c in &r.checks {
            if !c.pass {
                println!("FAIL {}", c.name);
            }
        }
    }
}

fn all_checks_pass(reports: &[Report]) -> bool {
    reports.iter().all(|r| r.checks.iter().all(|c| c.pass))
}

fn cmd_hom(job: &Job) -> Result<ExitCode, CliError> {
    let loaded = load(job)?;
    let ep = &loaded.ep;
    if loaded.stages.on {
        loaded
            .stages
            .time("rewriting", || magnus_matrix(&ep.group, &ep.quotient, &ep.schreier))?;
    }

    let even_row = |k: usize| -> Result<Report, CliError> {
        loaded.cached("h_even", 2 * k, || {
            // The library fuses tensor construction with the kernel
            // computation so the budget is enforced before anything big is
            // allocated; the timing line covers both stages.
            let h = loaded.stages.time("tensor build + smith reduction", || {
                h_even(ep, k, &loaded.coeff, loaded.budget)
            })?;
            let mut checks = Vec::new();
            if k == 1 && loaded.trivial_coeff {
                let hopf = hopf_h2(ep)?;
                checks.push(check("hopf_h2_agrees", hopf == h.invariants));
            }
            Ok(loaded.report(2 * k, WireInvariants::from_invariants(&h.invariants), checks))
        })
    };
    let odd_row = |k: usize| -> Result<Report, CliError> {
        loaded.cached("h_odd", 2 * k + 1, || {
            let z = trivial_module(&ep.group, 1);
            let ft = five_term(ep, &z, k + 1, loaded.budget)?;
            let checks = vec![
                check("exact_at_coinvariants", ft.exact_at_coinvariants),
                check("image_inside_h1", ft.image_inside_h1),
            ];
            Ok(loaded.report(2 * k + 1, WireInvariants::from_invariants(&ft.h1_of_g), checks))
        })
    };

    let mut reports = Vec::new();
    match job.max_n {
        None => reports.push(even_row(job.n)?),
        Some(max_n) => {
            if loaded.trivial_coeff {
                reports.push(loaded.cached("h1", 1, || {
                    let h1 = h1_trivial(&ep.presentation);
                    Ok(loaded.report(1, WireInvariants::from_invariants(&h1), Vec::new()))
                })?);
            }
            for k in 1..=max_n {
                reports.push(even_row(k)?);
                if loaded.trivial_coeff {
                    reports.push(odd_row(k)?);
                }
            }
        }
    }
    emit(&reports, job.json, job.max_n.is_some());
    Ok(if all_checks_pass(&reports) { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn cmd_lie(job: &Job) -> Result<ExitCode, CliError> {
    let loaded = load(job)?;
    let ep = &loaded.ep;
    if !loaded.trivial_coeff {
        return Err(CliError::Config(
            "lie works on the relation module itself; --coeff is not accepted".into(),
        ));
    }

    let row = |n: usize| -> Result<Report, CliError> {
        loaded.cached("lie", n, || {
            let (gamma, checks) = if n >= 2 {
                let tr = torsion_report(ep, n, loaded.budget)?;
                let checks = vec![
                    check("j_n_is_n_torsion", tr.j_n_is_n_torsion),
                    check("image_in_n_torsion", tr.image_in_n_torsion),
                    check("ker_phi_is_torsion_subgroup", tr.ker_phi_is_torsion_subgroup),
                    check("exponent_bound_holds", tr.exponent_bound_holds),
                ];
                (tr.gamma, checks)
            } else {
                let gamma = gamma_quotient(ep, 1, loaded.budget)?.invariants().clone();
                let j = j_n(ep, 1, loaded.budget)?;
                (gamma, vec![check("j_n_vanishes", j.is_trivial())])
            };
            Ok(loaded.report(n, WireInvariants::from_invariants(&gamma), checks))
        })
    };

    let range: Vec<usize> = match job.max_n {
        None => vec![job.n],
        Some(max_n) => (1..=max_n).collect(),
    };
    let mut reports = Vec::new();
    for n in &range {
        reports.push(row(*n)?);
    }
    if job.json {
        emit(&reports, true, job.max_n.is_some());
    } else {
        for r in &reports {
            println!("gamma_{} = {}", r.degree, r.result);
            for c in &r.checks {
                println!("{} {}", if c.pass { "PASS" } else { "FAIL" }, c.name);
            }
        }
    }
    Ok(if all_checks_pass(&reports) { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn cmd_verify(v: &VerifyJob) -> Result<ExitCode, CliError> {
    let loaded = load(&v.job)?;
    let ep = &loaded.ep;
    let n = v.job.n;
    let mut checks: Vec<Check> = Vec::new();

    if v.suite == Suite::Sequence || v.suite == Suite::All {
        let seq = verify_relation_sequence(&ep.group, &ep.quotient, &ep.schreier)?;
        checks.push(check("mu_injective", seq.mu_injective));
        checks.push(check("ker_sigma_eq_im_mu", seq.ker_sigma_eq_im_mu));
        checks.push(check("ker_augmentation_eq_im_sigma", seq.ker_augmentation_eq_im_sigma));
        checks.push(check("augmentation_surjective", seq.augmentation_surjective));
    }
    if v.suite == Suite::All {
        let ft = five_term(ep, &loaded.coeff, n, loaded.budget)?;
        checks.push(check("five_term_exact_at_coinvariants", ft.exact_at_coinvariants));
        checks.push(check("five_term_image_inside_h1", ft.image_inside_h1));

        let split = splitting_check(ep, ep)?;
        checks.push(check("left_leg_splits", split.left_splits));
        checks.push(check("right_leg_splits", split.right_splits));
        checks.push(check("magnus_natural", split.magnus_natural));

        let inj = coproduct_injectivity_check(ep, ep, n, &loaded.coeff, loaded.budget)?;
        checks.push(check("h1_legs_injective", inj.h1_legs_injective));
        checks.push(check("h1_legs_land_in_h1", inj.h1_legs_land_in_h1));
        checks.push(check("free_coinvariants_injective", inj.free_coinvariants_injective));
        checks.push(check("free_cokernel_torsion_free", inj.free_cokernel_torsion_free));

        let direct = h_even(ep, n, &loaded.coeff, loaded.budget)?;
        let oracle = bar_homology(&loaded.coeff, 2 * n, loaded.budget)?;
        checks.push(check("bar_oracle_agrees", direct.invariants == oracle));
    }
    if v.suite == Suite::Lie || v.suite == Suite::All {
        let deg = n.max(2);
        let tr = torsion_report(ep, deg, loaded.budget)?;
        checks.push(check("j_n_is_n_torsion", tr.j_n_is_n_torsion));
        checks.push(check("image_in_n_torsion", tr.image_in_n_torsion));
        checks.push(check("ker_phi_is_torsion_subgroup", tr.ker_phi_is_torsion_subgroup));
        checks.push(check("exponent_bound_holds", tr.exponent_bound_holds));
    }

    let all_pass = checks.iter().all(|c| c.pass);
    if v.job.json {
        let h1 = h1_trivial(&ep.presentation);
        let report = loaded.report(n, WireInvariants::from_invariants(&h1), checks);
        println!("{}", serde_json::to_string(&report).expect("reports always serialize"));
    } else {
        for c in &checks {
            println!("{} {}", if c.pass { "PASS" } else { "FAIL" }, c.name);
        }
    }
    Ok(if all_pass { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn cmd_limit(l: &LimitJob) -> Result<ExitCode, CliError> {
    let loaded = load(&l.job)?;
    let ep = &loaded.ep;
    let n = l.job.n;

    if l.gamma {
        let inv = gamma_equalizer(ep, n, loaded.budget)?;
        if l.job.json {
            let checks = vec![check("torsion_bound_holds", true)];
            let report = loaded.report(n, WireInvariants::from_invariants(&inv), checks);
            println!("{}", serde_json::to_string(&report).expect("reports always serialize"));
        } else {
            println!("gamma-equalizer = {inv}");
        }
        return Ok(ExitCode::SUCCESS);
    }

    let eq = equalizer_limit(ep, n, &loaded.coeff, loaded.budget)?;
    let h = h_even(ep, n, &loaded.coeff, loaded.budget)?;
    let matched =
        eq.invariants == h.invariants && lattices_equal(eq.preimage(), h.preimage())?;
    if l.job.json {
        let checks = vec![
            check("matches_even_homology", matched),
            check("middle_naturality", eq.middle_naturality),
            check("error_term_injective", eq.error_term_injective),
        ];
        let report = loaded.report(2 * n, WireInvariants::from_invariants(&eq.invariants), checks);
        println!("{}", serde_json::to_string(&report).expect("reports always serialize"));
    } else {
        println!(
            "equalizer = {} ; h_even = {} ; {}",
            eq.invariants,
            h.invariants,
            if matched { "MATCH" } else { "MISMATCH" }
        );
    }
    Ok(if matched { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}
