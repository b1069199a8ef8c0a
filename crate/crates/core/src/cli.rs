//! The `gksl` command line.
//!
//! Exit codes: `0` success, `1` unreadable or invalid spec (including a
//! failed `validate` verdict) and any other error, `2` when `--strict` is set
//! and `kernel` or `crosscheck` had to fall back to the brute-force oracle.
//!
//! The default tolerance is read from `GKSL_TOL` when `--tol` is absent.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::digraph;
use crate::error::{GkslError, Result};
use crate::generator::{self, GeneratorSpec};
use crate::io::{
    self, c, matrix_to_json, CrosscheckJson, DigraphJson, EigenPairJson, InvariantJson, KernelJson, ResultFile,
    SpecFile, StationaryJson, ValidationJson,
};
use crate::kernel::{self, Branch, KernelOptions};
use crate::{basis, DEFAULT_TOL};

pub const TOL_ENV: &str = "GKSL_TOL";

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_FALLBACK: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "gksl", version, about = "Validate GKSL generators and compute their invariant states")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub opts: GlobalOpts,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalOpts {
    /// Absolute tolerance, scaled by the largest matrix entry where relevant.
    #[arg(long, global = true, env = TOL_ENV, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    /// Output file (a directory with --batch). Defaults to stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Exit with 2 when the closed-form kernel is unavailable.
    #[arg(long, global = true)]
    pub strict: bool,
    /// Process every `*.json` file in a directory, in parallel.
    #[arg(long, global = true, value_name = "DIR")]
    pub batch: Option<PathBuf>,
    /// Kernel blocks from eigenpair roots, without requiring Gamma >= 0.
    #[arg(long, global = true)]
    pub experimental_mu_zero: bool,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Check positivity on traceless matrices and the real-trace condition.
    Validate(Input),
    /// Emit the canonical spec (traceless H, Gamma(I) = 0, traceless range).
    Canonicalize(Input),
    /// Induced digraph: DOT to --out, summary JSON to stdout.
    Digraph(Input),
    /// Kernel from graph data, or the brute-force oracle when preconditions fail.
    Kernel(Input),
    /// Eigenpairs of one off-diagonal block.
    Eigen {
        #[command(flatten)]
        input: Input,
        /// 1-based pair `k,l` with k < l.
        #[arg(long, value_delimiter = ',', num_args = 1, required = true)]
        pair: Vec<usize>,
    },
    /// Check that a state is invariant.
    CheckState {
        #[command(flatten)]
        input: Input,
        /// JSON file holding an N x N matrix of [re, im] pairs.
        #[arg(long)]
        state: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "0.5,1,5")]
        times: Vec<f64>,
    },
    /// Null space of the superoperator, unconditionally.
    Oracle(Input),
    /// Compare the closed-form kernel with the oracle.
    Crosscheck(Input),
}

#[derive(Debug, Clone, Args)]
pub struct Input {
    /// Spec file (omit with --batch).
    pub input: Option<PathBuf>,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Validate(_) => "validate",
            Command::Canonicalize(_) => "canonicalize",
            Command::Digraph(_) => "digraph",
            Command::Kernel(_) => "kernel",
            Command::Eigen { .. } => "eigen",
            Command::CheckState { .. } => "check-state",
            Command::Oracle(_) => "oracle",
            Command::Crosscheck(_) => "crosscheck",
        }
    }

    fn input(&self) -> Option<&Path> {
        match self {
            Command::Validate(i)
            | Command::Canonicalize(i)
            | Command::Digraph(i)
            | Command::Kernel(i)
            | Command::Oracle(i)
            | Command::Crosscheck(i)
            | Command::Eigen { input: i, .. }
            | Command::CheckState { input: i, .. } => i.input.as_deref(),
        }
    }
}

/// What one spec produced: the main document, an optional DOT graph, the
/// exit code and messages for stderr.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub code: i32,
    pub json: Option<String>,
    pub dot: Option<String>,
    pub messages: Vec<String>,
}

impl Outcome {
    fn failed(msg: String) -> Self {
        Self { code: EXIT_INVALID, json: None, dot: None, messages: vec![msg] }
    }
}

/// Loads a spec file and checks that it describes a valid generator.
fn load(path: &Path) -> Result<(SpecFile, GeneratorSpec)> {
    let file = SpecFile::read(path)?;
    let spec = file.to_generator()?;
    Ok((file, spec))
}

fn require_valid(spec: &GeneratorSpec, tol: f64, res: &mut ResultFile) -> Result<()> {
    let report = generator::validate_with_tol(spec, tol);
    if !report.verdict {
        res.validation = Some(ValidationJson::from(&report));
        return Err(GkslError::InvalidSpec(format!(
            "not a GKSL generator (psd_on_traceless = {}, real_trace = {})",
            report.psd_on_traceless, report.real_trace
        )));
    }
    Ok(())
}

pub fn digraph_summary(spec: &GeneratorSpec, tol: f64) -> (DigraphJson, String) {
    let g = digraph::induced_digraph_with_tol(spec, tol);
    let scc = digraph::scc_decompose(&g);
    let sinks = digraph::sinks_and_singular_2sinks_with_tol(spec, tol);
    let one = |v: &[usize]| v.iter().map(|x| x + 1).collect::<Vec<_>>();
    let summary = DigraphJson {
        vertices: g.vertex_count(),
        edges: g.edges().into_iter().map(|(f, t, w)| (f + 1, t + 1, w)).collect(),
        sccs: scc.components.iter().map(|c| one(c)).collect(),
        tsccs: scc.terminal_components().into_iter().map(one).collect(),
        sinks: one(&sinks.sinks),
        singular_2sinks: sinks.singular2.iter().map(|&(k, l)| [k + 1, l + 1]).collect(),
        stationary: digraph::tscc_stationary_vectors_from(&g, &scc)
            .into_iter()
            .map(|sv| StationaryJson { component: one(&sv.vertices), rho: sv.rho.iter().copied().collect(), lambda: sv.lambda })
            .collect(),
    };
    (summary, digraph::to_dot(&g, &sinks))
}

fn kernel_options(opts: &GlobalOpts) -> KernelOptions {
    KernelOptions { tol: opts.tol, experimental_mu_zero: opts.experimental_mu_zero }
}

/// Runs one command on one spec file.
pub fn run_spec(command: &Command, opts: &GlobalOpts, path: &Path) -> Outcome {
    let tol = opts.tol;
    let (file, spec) = match load(path) {
        Ok(x) => x,
        Err(e) => return Outcome::failed(format!("{}: {e}", path.display())),
    };
    let mut res = ResultFile::new(command.name(), Some(path), &file, tol);
    let mut out = Outcome { code: EXIT_OK, json: None, dot: None, messages: Vec::new() };

    let run = |res: &mut ResultFile, out: &mut Outcome| -> Result<()> {
        match command {
            Command::Validate(_) => {
                let report = generator::validate_with_tol(&spec, tol);
                res.validation = Some(ValidationJson::from(&report));
                if !report.verdict {
                    out.code = EXIT_INVALID;
                }
            }
            Command::Canonicalize(_) => {
                require_valid(&spec, tol, res)?;
                let canon = generator::canonicalize_with_tol(&spec, tol)?;
                let h = io::flush_small(canon.h(), 1e-15);
                let g = io::flush_small(canon.gamma(), 1e-15);
                let canon = GeneratorSpec::new(h, g)?;
                out.json = Some(SpecFile::from_generator(&canon, tol).to_json());
            }
            Command::Digraph(_) => {
                let (summary, dot) = digraph_summary(&spec, tol);
                res.digraph = Some(summary);
                out.dot = Some(dot);
            }
            Command::Kernel(_) => {
                require_valid(&spec, tol, res)?;
                match kernel::full_kernel_with(&spec, kernel_options(opts)) {
                    Ok(k) => {
                        res.diagnostics.warnings.extend(k.warnings.iter().cloned());
                        res.kernel = Some(KernelJson::from_basis(&k, None));
                    }
                    Err(GkslError::Precondition(why)) => {
                        log::info!("{}: closed form unavailable ({why}); using the oracle", path.display());
                        let k = kernel::brute_force_kernel(&spec, tol);
                        res.kernel = Some(KernelJson::from_basis(&k, Some(why)));
                        if opts.strict {
                            out.code = EXIT_FALLBACK;
                        }
                    }
                    Err(e) => return Err(e),
                }
                res.digraph = Some(digraph_summary(&spec, tol).0);
            }
            Command::Eigen { pair, .. } => {
                let &[k, l] = pair.as_slice() else {
                    return Err(GkslError::InvalidArgument(format!("--pair needs two indices, got {pair:?}")));
                };
                if k == 0 || l == 0 {
                    return Err(GkslError::InvalidArgument("--pair indices are 1-based".into()));
                }
                let (p, m) = kernel::block_eigenpairs_with_tol(&spec, k - 1, l - 1, tol)?;
                let mut pairs = Vec::new();
                for ep in [p, m] {
                    let la = generator::apply_generator(&spec, &ep.a)?;
                    let residual = basis::max_abs(&(la - &ep.a * ep.mu)) / basis::max_abs(&ep.a);
                    pairs.push(EigenPairJson {
                        pair: [k, l],
                        branch: if ep.branch == Branch::Plus { "+" } else { "-" }.into(),
                        mu: c(ep.mu),
                        matrix: matrix_to_json(&ep.a),
                        fallback: ep.fallback,
                        residual,
                    });
                }
                res.eigenpairs = Some(pairs);
            }
            Command::CheckState { state, times, .. } => {
                require_valid(&spec, tol, res)?;
                let rho = io::read_state(state, spec.dim())?;
                let r = kernel::verify_invariant(&spec, &rho, times)?;
                res.invariant = Some(InvariantJson {
                    holds: r.holds,
                    is_state: r.is_state,
                    generator_residual: r.generator_residual,
                    times: times.clone(),
                    evolution_residuals: r.evolution_residuals,
                });
            }
            Command::Oracle(_) => {
                res.oracle = Some(KernelJson::from_basis(&kernel::brute_force_kernel(&spec, tol), None));
            }
            Command::Crosscheck(_) => {
                require_valid(&spec, tol, res)?;
                let oracle = kernel::brute_force_kernel(&spec, tol);
                let analytic = kernel::full_kernel_with(&spec, kernel_options(opts));
                let cc = match &analytic {
                    Ok(k) if k.dim() == oracle.dim() => {
                        let sines = kernel::principal_angle_sines(&k.basis, &oracle.basis)?;
                        let max = sines.iter().copied().fold(0.0, f64::max).asin();
                        CrosscheckJson {
                            analytic_dimension: Some(k.dim()),
                            oracle_dimension: oracle.dim(),
                            principal_angle_sines: sines,
                            max_principal_angle: Some(max),
                            agree: max <= 1e-7,
                            analytic_error: None,
                        }
                    }
                    Ok(k) => CrosscheckJson {
                        analytic_dimension: Some(k.dim()),
                        oracle_dimension: oracle.dim(),
                        principal_angle_sines: Vec::new(),
                        max_principal_angle: None,
                        agree: false,
                        analytic_error: None,
                    },
                    Err(e) => {
                        if opts.strict {
                            out.code = EXIT_FALLBACK;
                        }
                        CrosscheckJson {
                            analytic_dimension: None,
                            oracle_dimension: oracle.dim(),
                            principal_angle_sines: Vec::new(),
                            max_principal_angle: None,
                            agree: false,
                            analytic_error: Some(e.to_string()),
                        }
                    }
                };
                if let Ok(k) = analytic {
                    res.diagnostics.warnings.extend(k.warnings.iter().cloned());
                    res.kernel = Some(KernelJson::from_basis(&k, None));
                }
                if !cc.agree {
                    out.messages.push(format!("{}: closed-form kernel and oracle disagree", path.display()));
                }
                res.oracle = Some(KernelJson::from_basis(&oracle, None));
                res.crosscheck = Some(cc);
            }
        }
        Ok(())
    };

    if let Err(e) = run(&mut res, &mut out) {
        out.code = EXIT_INVALID;
        out.messages.push(format!("{}: {e}", path.display()));
        // an invalid spec still gets its validation report
        if res.validation.is_none() {
            return out;
        }
    }
    for w in &res.diagnostics.warnings {
        log::warn!("{}: {w}", path.display());
    }
    if out.json.is_none() {
        out.json = Some(res.to_json());
    }
    out
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => Ok(std::fs::write(p, text)?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit_single(command: &Command, opts: &GlobalOpts, outcome: &Outcome) -> Result<()> {
    let out = opts.out.as_deref();
    match (command, &outcome.dot) {
        (Command::Digraph(_), Some(dot)) => {
            write_or_print(out, dot)?;
            if out.is_some() {
                if let Some(json) = &outcome.json {
                    print!("{json}");
                }
            }
        }
        _ => {
            if let Some(json) = &outcome.json {
                write_or_print(out, json)?;
            }
        }
    }
    Ok(())
}

/// `*.json` files directly inside `dir`, sorted by name.
pub fn batch_inputs(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    Ok(files)
}

fn run_batch(command: &Command, opts: &GlobalOpts, dir: &Path) -> i32 {
    let Some(out_dir) = opts.out.as_deref() else {
        eprintln!("--batch needs --out <DIR>");
        return EXIT_INVALID;
    };
    let files = match batch_inputs(dir).and_then(|f| {
        std::fs::create_dir_all(out_dir)?;
        Ok(f)
    }) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("{}: {e}", dir.display());
            return EXIT_INVALID;
        }
    };
    let codes: Vec<i32> = files
        .par_iter()
        .map(|path| {
            let outcome = run_spec(command, opts, path);
            let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            let mut code = outcome.code;
            let mut write = |name: String, text: &str| {
                if let Err(e) = std::fs::write(out_dir.join(&name), text) {
                    eprintln!("{name}: {e}");
                    code = code.max(EXIT_INVALID);
                }
            };
            if let Some(json) = &outcome.json {
                write(format!("{stem}.{}.json", command.name()), json);
            }
            if let Some(dot) = &outcome.dot {
                write(format!("{stem}.dot"), dot);
            }
            for m in &outcome.messages {
                eprintln!("{m}");
            }
            code
        })
        .collect();
    codes.into_iter().max().unwrap_or(EXIT_OK)
}

pub fn run(cli: &Cli) -> i32 {
    let opts = &cli.opts;
    if !(opts.tol.is_finite() && opts.tol > 0.0) {
        eprintln!("--tol must be positive, got {}", opts.tol);
        return EXIT_INVALID;
    }
    if let Some(dir) = &opts.batch {
        if cli.command.input().is_some() {
            eprintln!("give either an input file or --batch, not both");
            return EXIT_INVALID;
        }
        return run_batch(&cli.command, opts, dir);
    }
    let Some(path) = cli.command.input() else {
        eprintln!("missing input file");
        return EXIT_INVALID;
    };
    let outcome = run_spec(&cli.command, opts, path);
    for m in &outcome.messages {
        eprintln!("{m}");
    }
    if let Err(e) = emit_single(&cli.command, opts, &outcome) {
        eprintln!("{e}");
        return EXIT_INVALID;
    }
    outcome.code
}

/// Parses arguments and runs; usage errors exit with 1, `--help` with 0.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli),
        Err(e) => {
            let _ = e.print();
            if e.use_stderr() {
                EXIT_INVALID
            } else {
                EXIT_OK
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn write_spec(dir: &Path, name: &str, spec: &GeneratorSpec) -> PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, SpecFile::from_generator(spec, DEFAULT_TOL).to_json()).unwrap();
        p
    }

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("gksl").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn parses_flags_anywhere() {
        let cli = parse(&["eigen", "x.json", "--pair", "4,5", "--tol", "1e-8", "--strict"]);
        assert!(matches!(&cli.command, Command::Eigen { pair, .. } if pair == &[4, 5]));
        assert_eq!(cli.opts.tol, 1e-8);
        assert!(cli.opts.strict);
        let cli = parse(&["check-state", "x.json", "--state", "r.json", "--times", "0.5,1,5"]);
        assert!(matches!(&cli.command, Command::CheckState { times, .. } if times == &[0.5, 1.0, 5.0]));
    }

    #[test]
    fn kernel_on_superposition() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_spec(dir.path(), "s.json", &fixtures::superposition(1.0, 2.0, 3.0));
        let out = run_spec(&parse(&["kernel"]).command, &parse(&["kernel"]).opts, &p);
        assert_eq!(out.code, 0);
        let v: serde_json::Value = serde_json::from_str(out.json.as_deref().unwrap()).unwrap();
        assert_eq!(v["kernel"]["dimension"], 2);
        assert_eq!(v["kernel"]["method"], "analytic");
        let tags: Vec<&str> = v["kernel"]["elements"].as_array().unwrap().iter().map(|e| e["tag"].as_str().unwrap()).collect();
        assert_eq!(tags, ["diagonal", "singular-2-sink"]);
    }

    #[test]
    fn kernel_falls_back_and_strict_exits_2() {
        let dir = tempfile::tempdir().unwrap();
        let mut h = basis::CMatrix::zeros(2, 2);
        h[(0, 1)] = crate::Complex64::new(1.0, 0.0);
        h[(1, 0)] = crate::Complex64::new(1.0, 0.0);
        let p = write_spec(dir.path(), "h.json", &GeneratorSpec::new(h, basis::CMatrix::zeros(4, 4)).unwrap());
        let cli = parse(&["kernel"]);
        let out = run_spec(&cli.command, &cli.opts, &p);
        assert_eq!(out.code, 0);
        let v: serde_json::Value = serde_json::from_str(out.json.as_deref().unwrap()).unwrap();
        assert_eq!(v["kernel"]["method"], "brute-force");
        assert_eq!(v["kernel"]["dimension"], 2);
        let cli = parse(&["kernel", "--strict"]);
        assert_eq!(run_spec(&cli.command, &cli.opts, &p).code, 2);
    }

    #[test]
    fn invalid_spec_exits_1() {
        let dir = tempfile::tempdir().unwrap();
        let mut spec = GeneratorSpec::zero(2);
        spec.set_pair_block(0, 1, crate::Block2::standard(-1.0, 0.0, 0.0, 0.0)).unwrap();
        let p = write_spec(dir.path(), "bad.json", &spec);
        for cmd in ["validate", "kernel", "canonicalize"] {
            let cli = parse(&[cmd]);
            let out = run_spec(&cli.command, &cli.opts, &p);
            assert_eq!(out.code, 1, "{cmd}");
            let v: serde_json::Value = serde_json::from_str(out.json.as_deref().unwrap()).unwrap();
            assert_eq!(v["validation"]["verdict"], false);
        }
        let missing = dir.path().join("nope.json");
        assert_eq!(run_spec(&parse(&["oracle"]).command, &parse(&["oracle"]).opts, &missing).code, 1);
    }
}
