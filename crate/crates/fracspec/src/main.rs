//! Command-line front end: configuration parsing, subcommand dispatch,
//! JSON/CSV result emission, and reproducibility manifests.

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use fracspec::cdyn::{self, ComplexPolynomial, LacunaryExpansion};
use fracspec::cycles::{find_cycles, Cycle};
use fracspec::filters::{filter_from_json, hadamard_check, TrigPolynomial};
use fracspec::fourier::{h_function_partial, mu_hat};
use fracspec::ifs::{
    dual_ifs, quadrature_points_exact, AffineIfs, DigitSet, ExpansiveIntMatrix, IfsSpec,
    Orientation,
};
use fracspec::spectra::{lambda0, spectrum_from_cycles, verify_completeness, verify_orthogonality};
use fracspec::transfer::{cohen_test, lawton_test};
use fracspec::wavelet::{
    cascade, parseval_defect, super_gram, wavelet_from_mra, SampledFunction, DEFAULT_RESOLUTION,
};
use fracspec::{Error, Result};

#[derive(Parser)]
#[command(
    name = "fracspec",
    version,
    about = "Spectral analysis of self-affine measures: orthogonality certification, \
             cycle enumeration, wavelet and transfer-operator numerics"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct SystemArgs {
    /// JSON file with the system description (matrix, digits, frequencies)
    #[arg(long)]
    ifs: Option<PathBuf>,
    /// Integer dilation matrix: rows separated by ';', entries by ','
    #[arg(long = "A", value_name = "MATRIX")]
    a: Option<String>,
    /// Spatial digit set: scalars separated by ',', or vectors by ';'
    #[arg(long = "B", value_name = "DIGITS")]
    b: Option<String>,
    /// Frequency digit set, same syntax as --B
    #[arg(long = "L", value_name = "DIGITS")]
    l: Option<String>,
}

#[derive(Args, Clone)]
struct OutArgs {
    /// Write results to this file instead of standard output
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for randomized subcommands (recorded in the manifest)
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker thread budget (recorded; reductions are deterministic)
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args, Clone)]
struct FilterArgs {
    /// JSON file with low-pass filter coefficients
    #[arg(long)]
    filter: PathBuf,
    /// Integer dilation factor
    #[arg(long = "A", default_value_t = 2)]
    a: i64,
}

#[derive(Subcommand)]
enum Cmd {
    /// Certify that (A, B, L) gives a unitary normalized exponential matrix
    CheckHadamard {
        #[command(flatten)]
        sys: SystemArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Enumerate extreme cycles of the dual system as exact rationals
    FindCycles {
        #[command(flatten)]
        sys: SystemArgs,
        #[arg(long, default_value_t = 12)]
        max_period: u32,
        /// Report all cycles, not only extreme ones
        #[arg(long)]
        all: bool,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Generate a candidate or cycle-completed frequency set
    GenSpectrum {
        #[command(flatten)]
        sys: SystemArgs,
        #[arg(long, default_value_t = 3)]
        level: u32,
        /// Seed the closure with negated extreme-cycle points (needs --B)
        #[arg(long)]
        from_cycles: bool,
        #[arg(long, default_value_t = 12)]
        max_period: u32,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Certify pairwise orthogonality of the generated exponentials
    VerifyOnb {
        #[command(flatten)]
        sys: SystemArgs,
        #[arg(long, default_value_t = 2)]
        level: u32,
        #[arg(long)]
        from_cycles: bool,
        #[arg(long, default_value_t = 12)]
        max_period: u32,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Tabulate partial completeness sums over a grid and level schedule
    CompletenessScan {
        #[command(flatten)]
        sys: SystemArgs,
        /// Number of grid points in [0, 1)
        #[arg(long, default_value_t = 16)]
        grid: usize,
        /// Highest closure level; the schedule runs 2..=level
        #[arg(long, default_value_t = 8)]
        level: u32,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Evaluate the measure transform on a grid with certified tails
    MuHat {
        #[command(flatten)]
        sys: SystemArgs,
        #[arg(long, default_value_t = 64)]
        grid: usize,
        /// Target truncation error for the infinite product
        #[arg(long, default_value_t = 1e-10)]
        err: f64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Scan the partial completeness function over a grid
    HScan {
        #[command(flatten)]
        sys: SystemArgs,
        #[arg(long, default_value_t = 4)]
        level: u32,
        #[arg(long, default_value_t = 64)]
        grid: usize,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Eigenvalue-1 simplicity test for the finite transfer matrix
    Lawton {
        #[command(flatten)]
        filter: FilterArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Extreme-cycle obstruction test for filter orthonormality
    Cohen {
        #[command(flatten)]
        filter: FilterArgs,
        #[arg(long, default_value_t = 12)]
        max_period: u32,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Iterate the refinement operator to approximate the scaling function
    Cascade {
        #[command(flatten)]
        filter: FilterArgs,
        #[arg(long, default_value_t = DEFAULT_RESOLUTION)]
        resolution: u32,
        /// Number of iterations; defaults to resolution + 12
        #[arg(long)]
        iterations: Option<u32>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Measure the frame defect of the derived wavelet on a test function
    Parseval {
        #[command(flatten)]
        filter: FilterArgs,
        #[arg(long, default_value_t = DEFAULT_RESOLUTION)]
        resolution: u32,
        #[arg(long, allow_hyphen_values = true, default_value_t = -8)]
        jmin: i32,
        #[arg(long, default_value_t = 6)]
        jmax: i32,
        #[arg(long, default_value_t = 64)]
        kmax: i64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Gram matrix of the cycle-augmented vector scaling function
    SuperGram {
        #[command(flatten)]
        filter: FilterArgs,
        #[arg(long, default_value_t = 12)]
        max_period: u32,
        #[arg(long, default_value_t = 2)]
        max_shift: i64,
        #[arg(long, default_value_t = DEFAULT_RESOLUTION)]
        resolution: u32,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Sample the equilibrium measure by backward iteration and report moments
    BrolinMoments {
        /// Polynomial expression, e.g. "z^2 - 1"
        #[arg(long)]
        poly: String,
        /// Number of retained samples
        #[arg(long, default_value_t = 100_000)]
        n: usize,
        #[arg(long, default_value_t = 100)]
        burn_in: usize,
        /// Highest moment order to estimate
        #[arg(long, default_value_t = 8)]
        n_max: u32,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Split a lacunary expansion along frequency residues mod 4
    K2Split {
        /// JSON file mapping frequency -> [re, im]
        #[arg(long)]
        expansion: PathBuf,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Evidence table: orthogonality degradation under non-uniform weights
    ProbeProblem2 {
        #[command(flatten)]
        sys: SystemArgs,
        #[arg(long, default_value_t = 2)]
        level: u32,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Evidence table: pairwise branch-overlap mass by collision counting
    ProbeOverlap {
        #[command(flatten)]
        sys: SystemArgs,
        #[arg(long, default_value_t = 8)]
        depth: u32,
        #[command(flatten)]
        out: OutArgs,
    },
}

fn main() {
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}

// ---------------------------------------------------------------------------
// argument resolution

fn parse_rows(s: &str) -> Result<Vec<Vec<i64>>> {
    s.split(';')
        .map(|row| {
            row.split(',')
                .map(|t| {
                    t.trim()
                        .parse::<i64>()
                        .map_err(|_| Error::Parse(format!("bad integer '{t}'")))
                })
                .collect()
        })
        .collect()
}

fn parse_matrix(s: &str) -> Result<ExpansiveIntMatrix> {
    ExpansiveIntMatrix::new(parse_rows(s)?)
}

fn parse_digits(s: &str) -> Result<DigitSet> {
    if s.contains(';') {
        DigitSet::new(parse_rows(s)?)
    } else {
        let scalars: Vec<i64> = parse_rows(s)?.into_iter().flatten().collect();
        DigitSet::from_scalars(&scalars)
    }
}

struct Resolved {
    matrix: ExpansiveIntMatrix,
    b: Option<DigitSet>,
    l: Option<DigitSet>,
    digests: Vec<(String, String)>,
    config: Value,
}

impl Resolved {
    fn require_b(&self) -> Result<&DigitSet> {
        self.b
            .as_ref()
            .ok_or_else(|| Error::Invalid("B required (--B or system file)".into()))
    }

    fn require_l(&self) -> Result<&DigitSet> {
        self.l
            .as_ref()
            .ok_or_else(|| Error::Invalid("L required (--L or system file)".into()))
    }

    fn forward_ifs(&self) -> Result<AffineIfs> {
        AffineIfs::new(
            self.matrix.clone(),
            self.require_b()?.clone(),
            Orientation::Forward,
        )
    }
}

fn sha256_hex(data: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(data);
    format!("{:x}", h.finalize())
}

fn resolve(sys: &SystemArgs) -> Result<Resolved> {
    let mut digests = Vec::new();
    let (matrix, mut b, mut l) = if let Some(path) = &sys.ifs {
        let text = std::fs::read_to_string(path)?;
        digests.push((path.display().to_string(), sha256_hex(text.as_bytes())));
        let spec = IfsSpec::from_json(&text)?;
        (spec.matrix()?, Some(spec.digits_b()?), spec.digits_l()?)
    } else {
        let a = sys
            .a
            .as_deref()
            .ok_or_else(|| Error::Invalid("A required (--A or --ifs)".into()))?;
        (parse_matrix(a)?, None, None)
    };
    if let Some(s) = &sys.b {
        b = Some(parse_digits(s)?);
    }
    if let Some(s) = &sys.l {
        l = Some(parse_digits(s)?);
    }
    let config = json!({
        "matrix": matrix.entries(),
        "digits_b": b.as_ref().map(|d| d.points()),
        "digits_l": l.as_ref().map(|d| d.points()),
        "source": sys.ifs.as_ref().map(|p| p.display().to_string()),
    });
    Ok(Resolved { matrix, b, l, digests, config })
}

fn load_filter(args: &FilterArgs) -> Result<(TrigPolynomial, Vec<(String, String)>, Value)> {
    let text = std::fs::read_to_string(&args.filter)?;
    let digest = vec![(
        args.filter.display().to_string(),
        sha256_hex(text.as_bytes()),
    )];
    let v: Value = serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?;
    let m = filter_from_json(&v)?;
    let config = json!({
        "filter": args.filter.display().to_string(),
        "dilation": args.a,
    });
    Ok((m, digest, config))
}

// ---------------------------------------------------------------------------
// result emission

fn manifest(
    subcommand: &str,
    config: Value,
    out: &OutArgs,
    digests: &[(String, String)],
    started: Instant,
) -> Value {
    let inputs: Vec<Value> = digests
        .iter()
        .map(|(name, d)| json!({"file": name, "sha256": d}))
        .collect();
    json!({
        "subcommand": subcommand,
        "version": env!("CARGO_PKG_VERSION"),
        "seed": out.seed,
        "threads": out.threads,
        "config": config,
        "input_digests": inputs,
        "wall_clock_seconds": started.elapsed().as_secs_f64(),
    })
}

fn emit_json(out: &OutArgs, manifest: Value, result: Value) -> Result<()> {
    let doc = json!({"manifest": manifest, "result": result});
    let text = format!("{}\n", serde_json::to_string_pretty(&doc).unwrap());
    write_text(out, &text)
}

fn emit_csv(out: &OutArgs, manifest: Value, body: &str) -> Result<()> {
    let text = format!("# manifest: {}\n{}", serde_json::to_string(&manifest).unwrap(), body);
    write_text(out, &text)
}

fn write_text(out: &OutArgs, text: &str) -> Result<()> {
    match &out.out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn complex_json(z: Complex64) -> Value {
    json!([z.re, z.im])
}

// ---------------------------------------------------------------------------
// dispatch

fn run(cmd: Cmd) -> Result<()> {
    let started = Instant::now();
    match cmd {
        Cmd::CheckHadamard { sys, out } => {
            let r = resolve(&sys)?;
            let cert = hadamard_check(&r.matrix, r.require_b()?, r.require_l()?)?;
            let m = manifest("check-hadamard", r.config, &out, &r.digests, started);
            emit_json(&out, m, cert.to_json())
        }
        Cmd::FindCycles { sys, max_period, all, out } => {
            let r = resolve(&sys)?;
            let b = r.require_b()?;
            let l = r.require_l()?;
            let m0 = TrigPolynomial::from_digits(b);
            let dual = dual_ifs(&r.matrix, l)?;
            let mod_one = l.len() as u64 == r.matrix.det_abs();
            let cycles = find_cycles(&dual, &m0, max_period, all, mod_one)?;
            let config = json!({
                "system": r.config, "max_period": max_period,
                "all": all, "mod_one": mod_one,
            });
            let m = manifest("find-cycles", config, &out, &r.digests, started);
            emit_json(
                &out,
                m,
                json!({"cycles": cycles.iter().map(Cycle::to_json).collect::<Vec<_>>()}),
            )
        }
        Cmd::GenSpectrum { sys, level, from_cycles, max_period, out } => {
            let r = resolve(&sys)?;
            let set = build_spectrum(&r, level, from_cycles, max_period)?;
            let config = json!({
                "system": r.config, "level": level,
                "from_cycles": from_cycles, "max_period": max_period,
            });
            let m = manifest("gen-spectrum", config, &out, &r.digests, started);
            emit_json(&out, m, set.to_json())
        }
        Cmd::VerifyOnb { sys, level, from_cycles, max_period, out } => {
            let r = resolve(&sys)?;
            let set = build_spectrum(&r, level, from_cycles, max_period)?;
            let ifs = r.forward_ifs()?;
            let report = verify_orthogonality(&ifs, &set)?;
            let config = json!({
                "system": r.config, "level": level,
                "from_cycles": from_cycles, "max_period": max_period,
            });
            let m = manifest("verify-onb", config, &out, &r.digests, started);
            emit_json(&out, m, report.to_json())
        }
        Cmd::CompletenessScan { sys, grid, level, out } => {
            let r = resolve(&sys)?;
            if r.matrix.dim() != 1 {
                return Err(Error::Invalid("grid scans support one dimension only".into()));
            }
            if level < 2 {
                return Err(Error::Invalid("level must be >= 2".into()));
            }
            // orthogonality is certified on the level-2 base set; the scan
            // extends it level by level from the stored seeds
            let set = lambda0(&r.matrix, r.require_l()?, 2)?;
            let ifs = r.forward_ifs()?;
            let points: Vec<Vec<f64>> = (0..grid).map(|j| vec![j as f64 / grid as f64]).collect();
            let schedule: Vec<u32> = (2..=level).collect();
            let table = verify_completeness(&ifs, &set, &points, &schedule)?;
            let config = json!({"system": r.config, "grid": grid, "levels": schedule});
            let m = manifest("completeness-scan", config, &out, &r.digests, started);
            emit_csv(&out, m, &table.to_csv())
        }
        Cmd::MuHat { sys, grid, err, out } => {
            let r = resolve(&sys)?;
            if r.matrix.dim() != 1 {
                return Err(Error::Invalid("grid scans support one dimension only".into()));
            }
            let ifs = r.forward_ifs()?;
            let mut body =
                String::from("x,re,im,tail_bound,certified_zero_depth,numeric_zero_uncertified\n");
            for j in 0..grid {
                let x = j as f64 / grid as f64;
                let ev = mu_hat(&ifs, &[x], err)?;
                let depth = ev
                    .exact_zero
                    .map(|d| d.to_string())
                    .unwrap_or_default();
                body.push_str(&format!(
                    "{x},{},{},{},{depth},{}\n",
                    ev.value.re, ev.value.im, ev.tail_bound, ev.numeric_zero_uncertified
                ));
            }
            let config = json!({"system": r.config, "grid": grid, "target_err": err});
            let m = manifest("mu-hat", config, &out, &r.digests, started);
            emit_csv(&out, m, &body)
        }
        Cmd::HScan { sys, level, grid, out } => {
            let r = resolve(&sys)?;
            if r.matrix.dim() != 1 {
                return Err(Error::Invalid("grid scans support one dimension only".into()));
            }
            let set = lambda0(&r.matrix, r.require_l()?, level)?;
            let ifs = r.forward_ifs()?;
            let freqs: Vec<Vec<i64>> = set.vectors();
            let mut body = String::from("x,partial_sum,set_size,level\n");
            for j in 0..grid {
                let x = j as f64 / grid as f64;
                let h = h_function_partial(&ifs, &freqs, &[x])?;
                body.push_str(&format!("{x},{h},{},{level}\n", freqs.len()));
            }
            let config = json!({"system": r.config, "grid": grid, "level": level});
            let m = manifest("h-scan", config, &out, &r.digests, started);
            emit_csv(&out, m, &body)
        }
        Cmd::Lawton { filter, out } => {
            let (m0, digests, config) = load_filter(&filter)?;
            let a = ExpansiveIntMatrix::scalar(filter.a)?;
            let branches = DigitSet::from_scalars(&(0..filter.a).collect::<Vec<_>>())?;
            let verdict = lawton_test(&m0, &a, &branches)?;
            let m = manifest("lawton", config, &out, &digests, started);
            emit_json(&out, m, verdict.to_json())
        }
        Cmd::Cohen { filter, max_period, out } => {
            let (m0, digests, mut config) = load_filter(&filter)?;
            config["max_period"] = json!(max_period);
            let a = ExpansiveIntMatrix::scalar(filter.a)?;
            let branches = DigitSet::from_scalars(&(0..filter.a).collect::<Vec<_>>())?;
            let verdict = cohen_test(&m0, &a, &branches, max_period)?;
            let m = manifest("cohen", config, &out, &digests, started);
            emit_json(&out, m, verdict.to_json())
        }
        Cmd::Cascade { filter, resolution, iterations, out } => {
            let (m0, digests, mut config) = load_filter(&filter)?;
            let iters = iterations.unwrap_or(resolution + 12);
            config["resolution"] = json!(resolution);
            config["iterations"] = json!(iters);
            let run = cascade(&m0, filter.a, iters, resolution)?;
            let m = manifest("cascade", config, &out, &digests, started);
            let last = run.iterate_distances.last().cloned().unwrap_or(0.0);
            let body = format!("# last_iterate_distance: {last}\n{}", run.phi.to_csv());
            emit_csv(&out, m, &body)
        }
        Cmd::Parseval { filter, resolution, jmin, jmax, kmax, out } => {
            if filter.a != 2 {
                return Err(Error::Invalid("wavelet construction requires dilation 2".into()));
            }
            let (m0, digests, mut config) = load_filter(&filter)?;
            config["resolution"] = json!(resolution);
            config["j_range"] = json!([jmin, jmax]);
            config["k_range"] = json!([-kmax, kmax]);
            let run = cascade(&m0, 2, resolution + 12, resolution)?;
            let psi = wavelet_from_mra(&m0, &run.phi)?;
            let test = SampledFunction::indicator(0.0, 1.0, 1.0, resolution);
            let defect = parseval_defect(&psi, &[test], (jmin, jmax), (-kmax, kmax))?;
            let m = manifest("parseval", config, &out, &digests, started);
            emit_json(
                &out,
                m,
                json!({
                    "defect": defect,
                    "j_range": [jmin, jmax],
                    "k_range": [-kmax, kmax],
                    "test_function": "indicator [0,1)",
                }),
            )
        }
        Cmd::SuperGram { filter, max_period, max_shift, resolution, out } => {
            let (m0, digests, mut config) = load_filter(&filter)?;
            config["max_period"] = json!(max_period);
            config["max_shift"] = json!(max_shift);
            config["resolution"] = json!(resolution);
            let a = ExpansiveIntMatrix::scalar(filter.a)?;
            let branches = DigitSet::from_scalars(&(0..filter.a).collect::<Vec<_>>())?;
            let dual = dual_ifs(&a, &branches)?;
            let cycles = find_cycles(&dual, &m0, max_period, false, true)?;
            let cycle = cycles
                .iter()
                .find(|c| !c.is_trivial())
                .or_else(|| cycles.first())
                .ok_or_else(|| Error::Computation("no extreme cycle found".into()))?;
            let run = cascade(&m0, filter.a, resolution + 12, resolution)?;
            let g = super_gram(cycle, &run.phi, max_shift)?;
            let n = g.nrows();
            let max_dev = (0..n)
                .flat_map(|i| (0..n).map(move |j| (i, j)))
                .map(|(i, j)| {
                    let target = if i == j { Complex64::ONE } else { Complex64::ZERO };
                    (g[(i, j)] - target).norm()
                })
                .fold(0.0, f64::max);
            let rows: Vec<Vec<Value>> = (0..n)
                .map(|i| (0..n).map(|j| complex_json(g[(i, j)])).collect())
                .collect();
            let m = manifest("super-gram", config, &out, &digests, started);
            emit_json(
                &out,
                m,
                json!({
                    "cycle": cycle.to_json(),
                    "gram": rows,
                    "max_identity_deviation": max_dev,
                }),
            )
        }
        Cmd::BrolinMoments { poly, n, burn_in, n_max, out } => {
            let r = ComplexPolynomial::parse(&poly)?;
            let samples = cdyn::brolin_sample(&r, n, burn_in, out.seed)?;
            let moments = cdyn::moments(&samples, n_max)?;
            let mut body = String::from("n,re,im,abs,std_error\n");
            for (k, est) in moments.iter().enumerate() {
                body.push_str(&format!(
                    "{k},{},{},{},{}\n",
                    est.value.re,
                    est.value.im,
                    est.value.norm(),
                    est.std_error
                ));
            }
            let config = json!({
                "poly": poly, "n_samples": n, "burn_in": burn_in, "n_max": n_max,
            });
            let m = manifest("brolin-moments", config, &out, &[], started);
            emit_csv(&out, m, &body)
        }
        Cmd::K2Split { expansion, out } => {
            let text = std::fs::read_to_string(&expansion)?;
            let digests = vec![(
                expansion.display().to_string(),
                sha256_hex(text.as_bytes()),
            )];
            let v: Value = serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?;
            let f = LacunaryExpansion::from_json(&v)?;
            let (f0, f1) = cdyn::k2_split(&f);
            let roundtrip = cdyn::k2_merge(&f0, &f1)? == f;
            let config = json!({"expansion": expansion.display().to_string()});
            let m = manifest("k2-split", config, &out, &digests, started);
            emit_json(
                &out,
                m,
                json!({
                    "f0": f0.to_json(),
                    "f1": f1.to_json(),
                    "norm_sq": f.norm_sq(),
                    "norm_sq_f0": f0.norm_sq(),
                    "norm_sq_f1": f1.norm_sq(),
                    "roundtrip_exact": roundtrip,
                }),
            )
        }
        Cmd::ProbeProblem2 { sys, level, out } => {
            let r = resolve(&sys)?;
            let result = probe_problem2(&r, level)?;
            let config = json!({"system": r.config, "level": level});
            let m = manifest("probe-problem2", config, &out, &r.digests, started);
            emit_json(&out, m, result)
        }
        Cmd::ProbeOverlap { sys, depth, out } => {
            let r = resolve(&sys)?;
            let result = probe_overlap(&r, depth)?;
            let config = json!({"system": r.config, "depth": depth});
            let m = manifest("probe-overlap", config, &out, &r.digests, started);
            emit_json(&out, m, result)
        }
    }
}

fn build_spectrum(
    r: &Resolved,
    level: u32,
    from_cycles: bool,
    max_period: u32,
) -> Result<fracspec::spectra::SpectrumSet> {
    let l = r.require_l()?;
    if from_cycles {
        let b = r.require_b()?;
        let m0 = TrigPolynomial::from_digits(b);
        let dual = dual_ifs(&r.matrix, l)?;
        let mod_one = l.len() as u64 == r.matrix.det_abs();
        let cycles = find_cycles(&dual, &m0, max_period, false, mod_one)?;
        spectrum_from_cycles(&r.matrix, l, &cycles, level)
    } else {
        lambda0(&r.matrix, l, level)
    }
}

// ---------------------------------------------------------------------------
// open-problem probes (evidence only, never verdicts)

/// Weighted transform: product of sum_b p_b e^{2 pi i b . y} along the
/// backward orbit y = (A^T)^{-k} x, truncated at a fixed depth.
fn weighted_mu_hat(
    matrix: &ExpansiveIntMatrix,
    digits: &DigitSet,
    weights: &[f64],
    x: &[f64],
    depth: u32,
) -> Complex64 {
    let d = matrix.dim();
    let flat = matrix.transpose_inverse().to_f64();
    let mut y = x.to_vec();
    let mut prod = Complex64::ONE;
    for _ in 0..depth {
        let next: Vec<f64> = (0..d)
            .map(|i| (0..d).map(|j| flat[i * d + j] * y[j]).sum())
            .collect();
        y = next;
        let mut mval = Complex64::ZERO;
        for (b, &p) in digits.points().iter().zip(weights) {
            let phase: f64 = b.iter().zip(&y).map(|(&bi, &yi)| bi as f64 * yi).sum();
            mval += p * Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * phase);
        }
        prod *= mval;
    }
    prod
}

fn probe_problem2(r: &Resolved, level: u32) -> Result<Value> {
    let b = r.require_b()?;
    let l = r.require_l()?;
    let set = lambda0(&r.matrix, l, level)?;
    let freqs = set.vectors();
    let n = b.len();
    let uniform = vec![1.0 / n as f64; n];
    let mut tilted = uniform.clone();
    if n >= 2 {
        tilted[0] += 0.1;
        tilted[1] -= 0.1;
    }
    let candidates: Vec<(&str, f64, Vec<f64>)> = vec![
        ("uniform-weights", 1.0 / n as f64, uniform.clone()),
        ("tilted-weights", 1.0 / n as f64, tilted),
        (
            "wrong-normalization",
            1.0 / (n as f64 + 1.0),
            vec![1.0 / (n as f64 + 1.0); n],
        ),
    ];
    let mut rows = Vec::new();
    for (label, rho, p) in candidates {
        let filter_at_zero: f64 = p.iter().sum();
        let mut max_pair = 0.0f64;
        for (i, li) in freqs.iter().enumerate() {
            for lj in freqs.iter().skip(i + 1) {
                let diff: Vec<f64> = lj.iter().zip(li).map(|(&a, &b)| (a - b) as f64).collect();
                let v = weighted_mu_hat(&r.matrix, b, &p, &diff, 64);
                max_pair = max_pair.max(v.norm());
            }
        }
        rows.push(json!({
            "label": label,
            "rho": rho,
            "weights": p,
            "normalization_defect": (filter_at_zero - 1.0).abs(),
            "max_pair_correlation": max_pair,
        }));
    }
    Ok(json!({
        "status": "evidence-only",
        "note": "pairwise exponential correlations under the candidate weighted \
                 self-similar measure; orthogonality survives only in the uniform, \
                 correctly normalized row",
        "frequency_set_size": freqs.len(),
        "rows": rows,
    }))
}

fn probe_overlap(r: &Resolved, depth: u32) -> Result<Value> {
    let ifs = r.forward_ifs()?;
    let pts = quadrature_points_exact(&ifs, depth)?;
    let n = ifs.n_maps();
    let d = r.matrix.dim();
    // cell size from the worst-case single-step contraction of A^{-1}
    let inv = r.matrix.inverse().to_f64();
    let contraction = (0..d)
        .map(|i| (0..d).map(|j| inv[i * d + j].abs()).sum::<f64>())
        .fold(0.0f64, f64::max);
    let eps = contraction.powi(depth as i32);
    let w = 1.0 / (n as f64).powi(depth as i32);
    let mut cells: Vec<std::collections::BTreeMap<Vec<i64>, f64>> =
        vec![std::collections::BTreeMap::new(); n];
    for (word, point) in &pts {
        let coords = point.to_f64();
        let cell: Vec<i64> = coords.iter().map(|&c| (c / eps).floor() as i64).collect();
        *cells[word[0]].entry(cell).or_insert(0.0) += w;
    }
    let mut rows = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let mut overlap = 0.0;
            for (cell, &wi) in &cells[i] {
                if let Some(&wj) = cells[j].get(cell) {
                    overlap += wi.min(wj);
                }
            }
            rows.push(json!({
                "pair": [i, j],
                "digits": [ifs.digits.points()[i], ifs.digits.points()[j]],
                "estimated_overlap_mass": overlap,
            }));
        }
    }
    Ok(json!({
        "status": "evidence-only",
        "note": "shared-cell mass between branch images at the given quadrature \
                 depth; an upper-bound style indicator, not a measure-theoretic verdict",
        "depth": depth,
        "cell_size": eps,
        "rows": rows,
    }))
}
