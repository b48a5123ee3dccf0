//! `qoqudit`: compile, verify and benchmark qubit-oscillator pulse sequences.

mod output;
mod plot;

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{ArgGroup, Parser, Subcommand};
use nalgebra::DMatrix;
use serde_json::{json, Value};

use qoqudit_core::format::{parse_target, target_to_json, SequenceFile};
use qoqudit_core::pulses::{apply_sequence, block_decompose, BasisState, BlockUnitary, Manifold, PulseSequence, QoQuditDims};
use qoqudit_core::rotations::{Mat2, C64};
use qoqudit_core::scaling::{count_bound, log2_slope, scaling_sweep, ScalingRecord};
use qoqudit_core::synthesis::{compile_unitary, synthesize_elementary, CleaningOptions, CleaningOrder, ElementarySigma};
use qoqudit_core::verify::{
    elementary_target, fidelity_report, ggm_basis, ggm_commutator_check, random_unitary, FidelityReport,
};
use qoqudit_core::Error as CoreError;

use output::write_atomic;

const FIDELITY_FLOOR: f64 = 1.0 - 1e-6;
const LEAKAGE_CEILING: f64 = 1e-8;

#[derive(Parser)]
#[command(name = "qoqudit", version, about = "Pulse synthesis and verification for qubit-oscillator qudits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a pulse sequence for an elementary rotation or a target unitary
    #[command(group(ArgGroup::new("what").required(true).args(["k", "target", "random_seed"])))]
    Compile {
        /// Highest Fock level of the computational space
        #[arg(long)]
        n: usize,
        /// Sideband subspace of an elementary rotation
        #[arg(long, requires = "sigma")]
        k: Option<usize>,
        /// Elementary rotation: X, Y or -I
        #[arg(long, requires = "k", allow_hyphen_values = true)]
        sigma: Option<ElementarySigma>,
        /// JSON file with a d x d unitary as rows of [re, im] pairs
        #[arg(long)]
        target: Option<PathBuf>,
        /// Compile a Haar-random unitary drawn with this seed
        #[arg(long)]
        random_seed: Option<u64>,
        /// Also write the random target to this file
        #[arg(long, requires = "random_seed")]
        write_target: Option<PathBuf>,
        /// Clean only subspaces 1..n (leaves |1,n> unprotected)
        #[arg(long)]
        literal: bool,
        #[arg(long, env = "QOQUDIT_GUARDS", default_value_t = 2)]
        guards: usize,
        /// Smallest allowed angle is pi/t during cleaning
        #[arg(long, default_value_t = 4)]
        t_floor: u32,
        /// Free angle of the final-step axes
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        beta_free: f64,
        /// Explicit cleaning order, comma separated
        #[arg(long, value_delimiter = ',')]
        order: Option<Vec<usize>>,
        /// Output file; the sequence goes to stdout when omitted
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Simulate a sequence file and report leakage and block structure
    Verify {
        sequence: PathBuf,
        /// Override the truncation stored in the file
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, env = "QOQUDIT_GUARDS", default_value_t = 2)]
        guards: usize,
        /// Target unitary to compare against
        #[arg(long)]
        target: Option<PathBuf>,
        /// Also write the report as JSON
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Pulse counts of I + ... + I + S_n for a range of n
    Scaling {
        #[arg(long, default_value_t = 3)]
        n_min: usize,
        #[arg(long, default_value_t = 14)]
        n_max: usize,
        #[arg(long, default_value = "X", allow_hyphen_values = true)]
        sigma: ElementarySigma,
        #[arg(long)]
        csv: PathBuf,
        /// SVG plot of the sweep
        #[arg(long)]
        plot: Option<PathBuf>,
        /// Clean subspace n+1 as well
        #[arg(long)]
        clean_boundary: bool,
        #[arg(long, env = "QOQUDIT_GUARDS", default_value_t = 1)]
        guards: usize,
        /// Worker threads; defaults to the available parallelism
        #[arg(long)]
        threads: Option<usize>,
        /// Write 0 for wall_time_s so repeated runs are byte-identical
        #[arg(long)]
        no_timing: bool,
    },
    /// Dump the generalized Gell-Mann basis of dimension d as JSON
    Ggm {
        #[arg(long)]
        d: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Check the commutation relations and report on stderr
        #[arg(long)]
        check: bool,
    },
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Verification(String),
    Other(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Verification(_) => 3,
            Failure::Other(_) => 1,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Verification(m) => f.write_str(m),
            Failure::Other(e) => write!(f, "{e:#}"),
        }
    }
}

impl From<CoreError> for Failure {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Synthesis(_) => Failure::Verification(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Other(e)
    }
}

type CliResult<T> = Result<T, Failure>;

fn read_input(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn read_target(path: &Path) -> CliResult<DMatrix<C64>> {
    parse_target(&read_input(path)?).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn dims(n: usize, guards: usize) -> CliResult<QoQuditDims> {
    Ok(QoQuditDims::new(n, guards)?)
}

struct Check {
    passed: bool,
    summary: String,
}

/// Clean mode gates on global fidelity and leakage. The literal range does
/// not protect |1,n>, so only sideband blocks 1..n are compared, directly
/// against the target (|0,0> is never driven, which pins the phase).
fn self_check(r: &FidelityReport, u: &BlockUnitary, target: &DMatrix<C64>, n: usize, literal: bool) -> Check {
    if literal {
        let blocks = block_decompose(u, Manifold::Sqm);
        let mut err: f64 = 0.0;
        for j in 1..=n {
            let Some(b) = blocks.block(j) else { continue };
            let (r0, r1) = (2 * j, 2 * j - 1);
            let t = Mat2::new(target[(r0, r0)], target[(r0, r1)], target[(r1, r0)], target[(r1, r1)]);
            err = err.max((b - t).singular_values().max());
        }
        Check { passed: err <= 1e-6, summary: format!("sideband blocks 1..{n} error {err:.3e} (limit 1e-6)") }
    } else {
        let passed = r.global_fidelity >= FIDELITY_FLOOR && r.leakage <= LEAKAGE_CEILING;
        Check {
            passed,
            summary: format!("fidelity {:.12} (floor {FIDELITY_FLOOR}), leakage {:.3e} (limit {LEAKAGE_CEILING:e})", r.global_fidelity, r.leakage),
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_compile(
    n: usize,
    k: Option<usize>,
    sigma: Option<ElementarySigma>,
    target: Option<PathBuf>,
    random_seed: Option<u64>,
    write_target: Option<PathBuf>,
    literal: bool,
    guards: usize,
    t_floor: u32,
    beta_free: f64,
    order: Option<Vec<usize>>,
    out: Option<PathBuf>,
) -> CliResult<()> {
    let mut opts = if literal { CleaningOptions::literal() } else { CleaningOptions::default() };
    opts.t_floor = t_floor;
    opts.beta_free = beta_free;
    if let Some(o) = order {
        opts.order = CleaningOrder::Explicit(o);
    }
    let dims = dims(n, guards)?;
    let mut meta = BTreeMap::new();
    meta.insert("mode".to_string(), json!(if literal { "literal" } else { "clean_boundary" }));
    meta.insert("guards".to_string(), json!(guards));
    let (seq, target_matrix): (PulseSequence, DMatrix<C64>) = match (k, sigma) {
        (Some(k), Some(sigma)) => {
            let e = synthesize_elementary(n, k, sigma, &opts)?;
            meta.insert("k".into(), json!(k));
            meta.insert("sigma".into(), json!(sigma.to_string()));
            meta.insert("l".into(), json!(e.l));
            let signs: Vec<Value> = e.phases.iter().filter(|(_, p)| *p < 0.0).map(|(j, _)| json!(j)).collect();
            meta.insert("negative_blocks".into(), Value::Array(signs));
            if !e.warnings.is_empty() {
                meta.insert("warnings".into(), json!(e.warnings));
            }
            let t = elementary_target(n, &e);
            (e.sequence, t)
        }
        _ => {
            let t = match (&target, random_seed) {
                (Some(path), _) => read_target(path)?,
                (None, Some(seed)) => {
                    meta.insert("seed".into(), json!(seed));
                    let t = random_unitary(2 * (n + 1), seed);
                    if let Some(p) = &write_target {
                        write_atomic(p, target_to_json(&t).as_bytes())?;
                    }
                    t
                }
                (None, None) => return Err(Failure::Usage("one of --k/--sigma, --target or --random-seed is required".into())),
            };
            let c = compile_unitary(n, &t, &opts)?;
            meta.insert("two_level_factors".into(), json!(c.factors.len()));
            meta.insert("global_phase".into(), json!(c.global_phase));
            (c.sequence, t)
        }
    };
    let report = fidelity_report(&seq, dims, &target_matrix)?;
    let u = apply_sequence(&seq, dims)?;
    let check = self_check(&report, &u, &target_matrix, n, literal);
    meta.insert("fidelity".into(), json!(report.global_fidelity));
    meta.insert("leakage".into(), json!(report.leakage));
    meta.insert("verification".into(), json!(if check.passed { "passed" } else { "failed" }));
    let file = SequenceFile::from_sequence(&seq, meta);
    let text = file.to_json();
    let summary = format!(
        "pulses: {}\n{}\nverification: {}\n",
        seq.len(),
        check.summary,
        if check.passed { "passed" } else { "failed" }
    );
    match &out {
        Some(path) => {
            write_atomic(path, text.as_bytes())?;
            print!("{summary}");
        }
        None => {
            print!("{text}");
            eprint!("{summary}");
        }
    }
    if check.passed {
        Ok(())
    } else {
        Err(Failure::Verification(format!("self-verification failed: {}", check.summary)))
    }
}

fn cmd_verify(path: PathBuf, n: Option<usize>, guards: usize, target: Option<PathBuf>, json_out: Option<PathBuf>) -> CliResult<()> {
    let file = SequenceFile::parse(&read_input(&path)?).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let n = match n {
        Some(n) if n != file.n => {
            return Err(Failure::Usage(format!("--n {n} does not match the file's n = {}", file.n)));
        }
        _ => file.n,
    };
    let seq = file.to_sequence();
    let dims = dims(n, guards)?;
    let u = apply_sequence(&seq, dims)?;
    let d = dims.computational_dim();
    let leakage = (0..d)
        .map(|c| (d..dims.dim()).map(|r| u.matrix[(r, c)].norm_sqr()).sum::<f64>())
        .fold(0.0, f64::max);
    let transfer = u.element(BasisState::new(0, n + 1), BasisState::new(1, n)).norm_sqr();
    let report = match &target {
        Some(t) => Some(fidelity_report(&seq, dims, &read_target(t)?)?),
        None => None,
    };

    let mut text = format!("sequence: {} (n={n}, guards={guards}, {} pulses)\n", path.display(), seq.len());
    text += &format!("leakage: {leakage:.6e}\n");
    text += &format!("boundary transfer |<0,{}|U|1,{n}>|^2: {transfer:.6e}\n", n + 1);
    let mut blocks_json = Vec::new();
    for (manifold, label, js) in [(Manifold::Sqm, "sideband", 1..=n + 1), (Manifold::Cqm, "carrier", 0..=n)] {
        let dec = block_decompose(&u, manifold);
        text += &format!("{label} blocks:\n  {:>3}  {:>12}  {:>12}  {:>10}", "j", "re tr/2", "im tr/2", "angle");
        text += if report.is_some() { "  error\n" } else { "\n" };
        for j in js {
            let Some(b) = dec.block(j) else { continue };
            let half = (b[(0, 0)] + b[(1, 1)]) / 2.0;
            let angle = 2.0 * half.re.clamp(-1.0, 1.0).acos();
            text += &format!("  {j:>3}  {:>12.9}  {:>12.9}  {angle:>10.7}", half.re, half.im);
            let err = report.as_ref().and_then(|r| r.per_block_error.iter().find(|e| e.manifold == manifold && e.j == j)).map(|e| e.error);
            if let Some(e) = err {
                text += &format!("  {e:.3e}");
            }
            text += "\n";
            blocks_json.push(json!({"manifold": manifold, "j": j, "half_trace": [half.re, half.im], "angle": angle, "error": err}));
        }
    }
    let mut passed = true;
    if let Some(r) = &report {
        passed = r.global_fidelity >= FIDELITY_FLOOR && r.leakage <= LEAKAGE_CEILING;
        text += &format!("fidelity: {:.12}\n", r.global_fidelity);
        text += &format!("verification: {}\n", if passed { "passed" } else { "failed" });
    }
    print!("{text}");
    if let Some(p) = json_out {
        let v = json!({
            "sequence": path.display().to_string(),
            "n": n,
            "guards": guards,
            "pulses": seq.len(),
            "leakage": leakage,
            "boundary_transfer": transfer,
            "blocks": blocks_json,
            "fidelity": report.as_ref().map(|r| r.global_fidelity),
            "report": report,
        });
        let mut s = serde_json::to_string_pretty(&v).map_err(anyhow::Error::from)?;
        s.push('\n');
        write_atomic(&p, s.as_bytes())?;
    }
    if passed {
        Ok(())
    } else {
        Err(Failure::Verification("sequence does not reach the target".into()))
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_scaling(
    n_min: usize,
    n_max: usize,
    sigma: ElementarySigma,
    csv_path: PathBuf,
    plot_path: Option<PathBuf>,
    clean_boundary: bool,
    guards: usize,
    threads: Option<usize>,
    no_timing: bool,
) -> CliResult<()> {
    if n_min < 3 || n_min > n_max {
        return Err(Failure::Usage(format!("need 3 <= n-min <= n-max, got n-min={n_min} n-max={n_max}")));
    }
    let opts = if clean_boundary { CleaningOptions::default() } else { CleaningOptions::literal() };
    let threads = threads.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |p| p.get()));
    let start = Instant::now();
    let mut records = scaling_sweep(n_min, n_max, sigma, &opts, guards, threads)?;
    if no_timing {
        records.iter_mut().for_each(|r| r.wall_time_s = 0.0);
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &records {
        w.serialize(r).map_err(anyhow::Error::from)?;
    }
    let bytes = w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?;
    write_atomic(&csv_path, &bytes)?;
    if let Some(p) = &plot_path {
        plot::scaling_svg(&records, clean_boundary, p)?;
    }
    let over: Vec<&ScalingRecord> = records
        .iter()
        .filter(|r| r.pulse_count > count_bound(r.n, r.l, clean_boundary) * if sigma == ElementarySigma::MinusI { 2 } else { 1 })
        .collect();
    for r in &records {
        println!("n={:<3} pulses={:<8} l={} fidelity={:.9} leakage={:.3e}", r.n, r.pulse_count, r.l, r.fidelity, r.leakage);
    }
    if let Some(s) = log2_slope(&records) {
        println!("log2(pulse_count) slope vs n: {s:.4}");
    }
    println!("wrote {} records to {} in {:.2}s", records.len(), csv_path.display(), start.elapsed().as_secs_f64());
    if over.is_empty() {
        Ok(())
    } else {
        Err(Failure::Verification(format!("pulse count above the bound at n = {}", over[0].n)))
    }
}

fn matrix_json(m: &DMatrix<C64>) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| Value::Array((0..m.ncols()).map(|j| json!([m[(i, j)].re, m[(i, j)].im])).collect()))
            .collect(),
    )
}

fn cmd_ggm(d: usize, out: Option<PathBuf>, check: bool) -> CliResult<()> {
    let basis = ggm_basis(d)?;
    let pairs: Vec<(usize, usize)> = (1..=d).flat_map(|j| (j + 1..=d).map(move |k| (j, k))).collect();
    let v = json!({
        "d": d,
        "normalization": "tr(M_a M_b) = 2 delta_ab",
        "indexing": "1-based",
        "z_type": basis.z_type.iter().enumerate().map(|(i, m)| json!({"j": i + 2, "matrix": matrix_json(m)})).collect::<Vec<_>>(),
        "x_type": basis.x_type.iter().zip(&pairs).map(|(m, (j, k))| json!({"j": j, "k": k, "matrix": matrix_json(m)})).collect::<Vec<_>>(),
        "y_type": basis.y_type.iter().zip(&pairs).map(|(m, (j, k))| json!({"j": j, "k": k, "matrix": matrix_json(m)})).collect::<Vec<_>>(),
    });
    let mut s = serde_json::to_string_pretty(&v).map_err(anyhow::Error::from)?;
    s.push('\n');
    match out {
        Some(p) => write_atomic(&p, s.as_bytes())?,
        None => print!("{s}"),
    }
    if check {
        let r = ggm_commutator_check(&basis, 1e-12);
        eprintln!("{} relations checked, max residual {:.3e}, {} violations", r.relations_checked, r.max_residual, r.violations.len());
        if let Some(v) = r.violations.first() {
            return Err(Failure::Verification(format!("{} {:?} residual {:.3e}", v.family, v.indices, v.residual)));
        }
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Compile {
            n,
            k,
            sigma,
            target,
            random_seed,
            write_target,
            literal,
            guards,
            t_floor,
            beta_free,
            order,
            output,
        } => cmd_compile(n, k, sigma, target, random_seed, write_target, literal, guards, t_floor, beta_free, order, output),
        Command::Verify { sequence, n, guards, target, json } => cmd_verify(sequence, n, guards, target, json),
        Command::Scaling { n_min, n_max, sigma, csv, plot, clean_boundary, guards, threads, no_timing } => {
            cmd_scaling(n_min, n_max, sigma, csv, plot, clean_boundary, guards, threads, no_timing)
        }
        Command::Ggm { d, output, check } => cmd_ggm(d, output, check),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code())
        }
    }
}
