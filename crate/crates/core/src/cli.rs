//! Command-line front end. `run` parses arguments, dispatches, writes the
//! output once and returns the process exit code.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::Value;

use crate::atoms::{haar_decompose, AtomicFunction, DyadicSamples, SpecialAtom};
use crate::error::{Error, Result};
use crate::extension::{self, ExtensionProvider, Mode, QuadratureSpec, SampledFunction};
use crate::geometry::{parse_cube, parse_pattern};
use crate::report::{format_f64, to_json, Envelope};
use crate::verify::{self, CheckResult};
use crate::weights::{self, parse_product_weight, parse_weight, WeightClass};

/// Exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

const SYNOPSIS: &str = "usage: atomlab <atom|weight|extend|norm|decompose|verify> ... (see atomlab --help)";

#[derive(Parser, Debug)]
#[command(name = "atomlab", version, about = "Weighted special atoms, polydisc extensions and norm checks")]
struct Cli {
    /// Write output to this file instead of stdout.
    #[arg(long, short = 'o', global = true)]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Render or evaluate atomic functions.
    #[command(subcommand)]
    Atom(AtomCmd),
    /// Weight-class tests.
    #[command(subcommand)]
    Weight(WeightCmd),
    /// Product-Poisson extension to the polydisc.
    #[command(subcommand)]
    Extend(ExtendCmd),
    /// Atomic and analytic norms.
    #[command(subcommand)]
    Norm(NormCmd),
    /// Haar decomposition of a dyadic step function into special atoms.
    Decompose(DecomposeArgs),
    /// Numerical checks; exit 1 if any fails.
    Verify(VerifyArgs),
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
enum AtomCmd {
    /// CSV of values on a uniform grid of cell midpoints.
    Render {
        #[command(flatten)]
        atom: AtomSpec,
        /// Points per axis.
        #[arg(long, default_value_t = 128)]
        grid: usize,
    },
    /// Value at one point.
    Eval {
        #[command(flatten)]
        atom: AtomSpec,
        /// Point ξ1,..,ξd.
        #[arg(long)]
        at: String,
    },
    /// The atomic function as JSON.
    Show {
        #[command(flatten)]
        atom: AtomSpec,
    },
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
enum WeightCmd {
    /// Run class tests on a one-dimensional weight.
    Classify {
        /// power:A, const:C, lebesgue, table:FILE or inline JSON.
        #[arg(long)]
        weight: String,
        /// Classes to test (dini:M, bn:N, calbp:P, doubling, ap:P).
        #[arg(long, value_delimiter = ',', default_value = "dini:1,bn:2,calbp:2,doubling,ap:2")]
        class: Vec<String>,
    },
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
enum ExtendCmd {
    /// Extension value and gradient at one polydisc point.
    Eval {
        #[command(flatten)]
        atom: AtomSpec,
        /// Polar coordinates r1,θ1,..,rd,θd.
        #[arg(long)]
        at: String,
        #[command(flatten)]
        quad: QuadArgs,
    },
    /// CSV of the extension on the diagonal torus |z_j| = r.
    Grid {
        #[command(flatten)]
        atom: AtomSpec,
        /// Radii, comma-separated.
        #[arg(long, default_value = "0.5,0.9,0.99")]
        radii: String,
        /// Angles per axis.
        #[arg(long, default_value_t = 64)]
        grid: usize,
        #[command(flatten)]
        quad: QuadArgs,
    },
    /// Radial limit at a boundary point.
    Limit {
        #[command(flatten)]
        atom: AtomSpec,
        /// Boundary point ξ1,..,ξd.
        #[arg(long)]
        at: String,
        #[arg(long, default_value_t = 4)]
        k0: u32,
        #[arg(long, default_value_t = 40)]
        k1: u32,
    },
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
enum NormCmd {
    /// Weighted analytic norm of the extension.
    Aw {
        #[command(flatten)]
        atom: AtomSpec,
        #[arg(long, value_parser = parse_mode)]
        mode: Mode,
        /// Disc weight; defaults to the atom weight.
        #[arg(long)]
        norm_weight: Option<String>,
        #[arg(long, default_value_t = 1.0)]
        p: f64,
        #[command(flatten)]
        quad: QuadArgs,
    },
    /// Upper bound Σ|α_k| of the atomic norm.
    Bw {
        #[command(flatten)]
        atom: AtomSpec,
    },
}

#[derive(Args, Debug, Serialize)]
struct DecomposeArgs {
    /// Dimension.
    #[arg(long)]
    d: usize,
    /// Cells per axis are 2^m.
    #[arg(long)]
    m: u32,
    /// CSV file with one sample per row (first column), axis 0 fastest.
    #[arg(long, conflicts_with = "random")]
    values: Option<PathBuf>,
    /// Generate zero-mean random samples from this seed.
    #[arg(long)]
    random: Option<u64>,
    /// Atom weight.
    #[arg(long, default_value = "lebesgue")]
    weight: String,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Suite {
    All,
    KBounds,
    Lemma3,
    Lemma4,
    Lemma5,
    Main,
    Inclusion,
}

#[derive(Args, Debug, Serialize)]
struct VerifyArgs {
    #[arg(value_enum)]
    suite: Suite,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// JSON report instead of one line per check.
    #[arg(long)]
    json: bool,
    /// Random draws for k-bounds.
    #[arg(long, default_value_t = verify::K_SAMPLES)]
    samples: usize,
    /// Atoms per main-theorem sweep.
    #[arg(long, default_value_t = verify::MAIN_ATOMS)]
    atoms: usize,
    #[command(flatten)]
    quad: QuadArgs,
}

/// An atomic function: either one atom given by cube, pattern and weight,
/// or a JSON file.
#[derive(Args, Debug, Serialize)]
struct AtomSpec {
    /// JSON file holding an atomic function (or a `decompose` report).
    #[arg(long, conflicts_with_all = ["cube", "pattern"])]
    atoms: Option<PathBuf>,
    /// Dimension; inferred from --cube when omitted.
    #[arg(long)]
    d: Option<usize>,
    /// Cube a1,..,ad:h1,..,hd.
    #[arg(long)]
    cube: Option<String>,
    /// checkerboard, axis:J, parity:MASK or positive:K1,K2,..
    #[arg(long)]
    pattern: Option<String>,
    /// Atom weight: one spec for every axis or d specs separated by ';'.
    #[arg(long, default_value = "lebesgue")]
    weight: String,
    /// Coefficient of the atom.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    coef: f64,
}

#[derive(Args, Debug, Clone, Copy, Serialize)]
struct QuadArgs {
    /// Use the generic quadrature extension instead of the closed form.
    #[arg(long)]
    quadrature: bool,
    #[arg(long, default_value_t = QuadratureSpec::default().angular_order)]
    angular_order: usize,
    #[arg(long, default_value_t = QuadratureSpec::default().radial_levels)]
    radial_levels: usize,
    #[arg(long, default_value_t = QuadratureSpec::default().radial_order)]
    radial_order: usize,
    #[arg(long, default_value_t = QuadratureSpec::default().tolerance)]
    tolerance: f64,
}

impl QuadArgs {
    fn spec(&self) -> Result<QuadratureSpec> {
        QuadratureSpec::new(self.angular_order, self.radial_levels, self.radial_order, self.tolerance)
    }

    fn provider(&self, f: AtomicFunction) -> Result<ExtensionProvider> {
        if self.quadrature {
            ExtensionProvider::quadrature(SampledFunction::from_atomic(&f)?, self.spec()?)
        } else {
            ExtensionProvider::closed(f)
        }
    }
}

fn parse_mode(s: &str) -> std::result::Result<Mode, String> {
    s.parse::<Mode>().map_err(|e| e.to_string())
}

fn parse_numbers(s: &str, what: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("'{t}' is not a number in {what}")))
        })
        .collect()
}

impl AtomSpec {
    fn load(&self) -> Result<AtomicFunction> {
        let f = match &self.atoms {
            Some(path) => read_atomic(path)?,
            None => {
                let cube = parse_cube(
                    self.cube
                        .as_deref()
                        .ok_or_else(|| Error::InvalidArgument("either --cube or --atoms is required".into()))?,
                )?;
                if let Some(d) = self.d {
                    if d != cube.dim() {
                        return Err(Error::DimensionMismatch {
                            expected: d,
                            got: cube.dim(),
                        });
                    }
                }
                let d = cube.dim();
                let pattern = parse_pattern(self.pattern.as_deref().unwrap_or("checkerboard"), d)?;
                let weight = parse_product_weight(&self.weight, d)?;
                AtomicFunction::single(1.0, SpecialAtom::new(cube, pattern, weight)?)
            }
        };
        if f.is_empty() {
            return Err(Error::InvalidArgument("atomic function has no terms".into()));
        }
        if let (Some(d), Some(fd)) = (self.d, f.dim()) {
            if d != fd {
                return Err(Error::DimensionMismatch { expected: d, got: fd });
            }
        }
        Ok(f.scaled(self.coef))
    }
}

fn read_atomic(path: &Path) -> Result<AtomicFunction> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", path.display())))?;
    let mut value: Value =
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    if let Some(inner) = value.get_mut("result").and_then(|r| r.get_mut("function")) {
        value = inner.take();
    }
    serde_json::from_value(value).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn read_samples(path: &Path) -> Result<Vec<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        let field = row.get(0).unwrap_or("").trim();
        match field.parse::<f64>() {
            Ok(v) => out.push(v),
            Err(_) if i == 0 => {}
            Err(_) => return Err(Error::Parse(format!("{}: row {}: '{field}' is not a number", path.display(), i + 1))),
        }
    }
    Ok(out)
}

/// Collected output of one command.
enum Output {
    Text(String),
    Checks(String, bool),
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new())
}

fn csv_finish(w: csv::Writer<Vec<u8>>) -> Result<Output> {
    let bytes = w
        .into_inner()
        .map_err(|e| Error::InvalidArgument(format!("CSV output failed: {e}")))?;
    Ok(Output::Text(String::from_utf8(bytes).expect("CSV output is UTF-8")))
}

fn csv_err(e: csv::Error) -> Error {
    Error::InvalidArgument(format!("CSV output failed: {e}"))
}

fn csv_num(x: f64) -> String {
    if x.is_finite() {
        format_f64(x)
    } else {
        x.to_string()
    }
}

fn grid_size(n: usize, d: usize) -> Result<usize> {
    if n == 0 {
        return Err(Error::InvalidArgument("grid must be positive".into()));
    }
    n.checked_pow(d as u32)
        .filter(|&c| c <= 100_000_000)
        .ok_or_else(|| Error::InvalidArgument(format!("grid {n}^{d} is too large")))
}

/// Point of the `n^d` midpoint grid on `[0, 2π)^d`, axis 0 fastest.
fn grid_point(idx: usize, n: usize, d: usize) -> Vec<f64> {
    let step = crate::TWO_PI / n as f64;
    (0..d)
        .map(|j| ((idx / n.pow(j as u32)) % n) as f64 * step + 0.5 * step)
        .collect()
}

#[derive(Serialize)]
struct C64 {
    re: f64,
    im: f64,
}

impl From<Complex64> for C64 {
    fn from(z: Complex64) -> Self {
        C64 { re: z.re, im: z.im }
    }
}

fn envelope<R: Serialize>(name: &str, command: &Command, result: R) -> Result<Output> {
    Ok(Output::Text(to_json(&Envelope::new(name, command, result)?)?))
}

fn dispatch(command: &Command) -> Result<Output> {
    match command {
        Command::Atom(AtomCmd::Render { atom, grid }) => {
            let f = atom.load()?;
            let d = f.dim().expect("nonempty");
            let count = grid_size(*grid, d)?;
            let mut w = csv_writer();
            let mut header: Vec<String> = (1..=d).map(|j| format!("x{j}")).collect();
            header.push("value".into());
            w.write_record(&header).map_err(csv_err)?;
            for idx in 0..count {
                let p = grid_point(idx, *grid, d);
                let mut row: Vec<String> = p.iter().map(|&x| csv_num(x)).collect();
                row.push(csv_num(f.eval(&p)));
                w.write_record(&row).map_err(csv_err)?;
            }
            csv_finish(w)
        }
        Command::Atom(AtomCmd::Eval { atom, at }) => {
            let f = atom.load()?;
            let p = parse_numbers(at, "--at")?;
            let d = f.dim().expect("nonempty");
            if p.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: p.len() });
            }
            #[derive(Serialize)]
            struct R {
                point: Vec<f64>,
                value: f64,
            }
            let value = f.eval(&p);
            envelope("atom eval", command, R { point: p, value })
        }
        Command::Atom(AtomCmd::Show { atom }) => {
            let f = atom.load()?;
            envelope("atom show", command, serde_json::json!({ "function": f }))
        }
        Command::Weight(WeightCmd::Classify { weight, class }) => {
            let w = parse_weight(weight)?;
            let classes: Vec<WeightClass> = class.iter().map(|c| WeightClass::parse(c)).collect::<Result<_>>()?;
            let reports: Vec<_> = classes.iter().map(|&c| weights::classify(&w, c)).collect();
            envelope("weight classify", command, reports)
        }
        Command::Extend(ExtendCmd::Eval { atom, at, quad }) => {
            let f = atom.load()?;
            let d = f.dim().expect("nonempty");
            let polar = parse_numbers(at, "--at")?;
            if polar.len() != 2 * d {
                return Err(Error::DimensionMismatch {
                    expected: 2 * d,
                    got: polar.len(),
                });
            }
            let z: Vec<Complex64> = polar.chunks(2).map(|c| Complex64::from_polar(c[0], c[1])).collect();
            let provider = quad.provider(f)?;
            #[derive(Serialize)]
            struct R {
                z: Vec<C64>,
                value: C64,
                gradient: Vec<C64>,
            }
            let value = provider.value(&z)?.into();
            let gradient = provider.gradient(&z)?.into_iter().map(C64::from).collect();
            envelope(
                "extend eval",
                command,
                R {
                    z: z.into_iter().map(C64::from).collect(),
                    value,
                    gradient,
                },
            )
        }
        Command::Extend(ExtendCmd::Grid { atom, radii, grid, quad }) => {
            let f = atom.load()?;
            let d = f.dim().expect("nonempty");
            let radii = parse_numbers(radii, "--radii")?;
            let count = grid_size(*grid, d)?;
            let provider = quad.provider(f)?;
            let mut w = csv_writer();
            let mut header = vec!["r".to_string()];
            header.extend((1..=d).map(|j| format!("theta{j}")));
            header.extend(["re".to_string(), "im".to_string()]);
            w.write_record(&header).map_err(csv_err)?;
            for &r in &radii {
                for idx in 0..count {
                    let theta = grid_point(idx, *grid, d);
                    let z: Vec<Complex64> = theta.iter().map(|&t| Complex64::from_polar(r, t)).collect();
                    let v = provider.value(&z)?;
                    let mut row = vec![csv_num(r)];
                    row.extend(theta.iter().map(|&t| csv_num(t)));
                    row.extend([csv_num(v.re), csv_num(v.im)]);
                    w.write_record(&row).map_err(csv_err)?;
                }
            }
            csv_finish(w)
        }
        Command::Extend(ExtendCmd::Limit { atom, at, k0, k1 }) => {
            let f = atom.load()?;
            let xi = parse_numbers(at, "--at")?;
            let d = f.dim().expect("nonempty");
            if xi.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: xi.len() });
            }
            let boundary = f.eval(&xi);
            let provider = ExtensionProvider::closed(f)?;
            let limit = extension::radial_limit(&provider, &xi, *k0, *k1)?;
            envelope(
                "extend limit",
                command,
                serde_json::json!({ "boundary_value": boundary, "limit": limit }),
            )
        }
        Command::Norm(NormCmd::Aw {
            atom,
            mode,
            norm_weight,
            p,
            quad,
        }) => {
            let f = atom.load()?;
            let d = f.dim().expect("nonempty");
            let weight = parse_product_weight(norm_weight.as_deref().unwrap_or(&atom.weight), d)?;
            let provider = quad.provider(f)?;
            let estimate = extension::aw_norm(&provider, &weight, *mode, *p, &quad.spec()?)?;
            envelope("norm aw", command, estimate)
        }
        Command::Norm(NormCmd::Bw { atom }) => {
            let f = atom.load()?;
            envelope(
                "norm bw",
                command,
                serde_json::json!({ "upper": f.bw_norm_upper(), "terms": f.len() }),
            )
        }
        Command::Decompose(args) => {
            let weight = parse_product_weight(&args.weight, args.d)?;
            let samples = match (&args.values, args.random) {
                (Some(path), None) => DyadicSamples::new(args.d, args.m, read_samples(path)?)?,
                (None, Some(seed)) => random_samples(args.d, args.m, seed)?,
                _ => return Err(Error::InvalidArgument("give exactly one of --values or --random".into())),
            };
            let f = haar_decompose(&samples, &weight)?;
            let err = (0..samples.values.len())
                .map(|i| (f.eval(&samples.cell_midpoint(i)) - samples.values[i]).abs())
                .fold(0.0, f64::max);
            envelope(
                "decompose",
                command,
                serde_json::json!({
                    "terms": f.len(),
                    "bw_upper": f.bw_norm_upper(),
                    "max_roundtrip_error": err,
                    "function": f,
                }),
            )
        }
        Command::Verify(args) => {
            let q = args.quad.spec()?;
            let checks: Vec<CheckResult> = match args.suite {
                Suite::All => {
                    let mut out = vec![verify::check_k_bounds(args.samples, args.seed)];
                    out.extend(verify::lemma3_suite(&q));
                    out.extend(verify::lemma4_suite(&q));
                    out.extend(verify::lemma5_suite(&q));
                    out.extend(verify::main_suite(args.seed, args.atoms, &q));
                    out.extend(verify::inclusion_suite());
                    out
                }
                Suite::KBounds => vec![verify::check_k_bounds(args.samples, args.seed)],
                Suite::Lemma3 => verify::lemma3_suite(&q),
                Suite::Lemma4 => verify::lemma4_suite(&q),
                Suite::Lemma5 => verify::lemma5_suite(&q),
                Suite::Main => verify::main_suite(args.seed, args.atoms, &q),
                Suite::Inclusion => verify::inclusion_suite(),
            };
            let pass = checks.iter().all(|c| c.pass);
            let text = if args.json {
                to_json(&Envelope::new("verify", command, &checks)?)?
            } else {
                summary(&checks)
            };
            Ok(Output::Checks(text, pass))
        }
    }
}

fn random_samples(d: usize, m: u32, seed: u64) -> Result<DyadicSamples> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let n = 1usize
        .checked_shl(d as u32 * m)
        .filter(|&n| d > 0 && n <= 1 << 30)
        .ok_or_else(|| Error::InvalidArgument(format!("grid with 2^{} cells is too large", d as u32 * m)))?;
    let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mean = v.iter().sum::<f64>() / n as f64;
    v.iter_mut().for_each(|x| *x -= mean);
    let mean = v.iter().sum::<f64>() / n as f64;
    v.iter_mut().for_each(|x| *x -= mean);
    DyadicSamples::new(d, m, v)
}

fn summary(checks: &[CheckResult]) -> String {
    let mut s = String::new();
    for c in checks {
        s.push_str(&format!(
            "{} {} observed={} bound={}\n",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.observed,
            c.bound
        ));
        for d in c.details.iter().filter(|d| !d.pass) {
            s.push_str(&format!("  - {}: observed={} bound={}", d.label, d.observed, d.bound));
            if let Some(note) = &d.note {
                s.push_str(&format!(" ({note})"));
            }
            s.push('\n');
        }
    }
    s
}

/// Caps the global rayon pool at `ATOMLAB_THREADS` when it is set.
fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("ATOMLAB_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::InvalidArgument(format!("ATOMLAB_THREADS must be a positive integer, got '{v}'")))?;
        // A pool built earlier in the same process stays in effect.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn exit_code(e: &Error) -> i32 {
    if e.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_USAGE
    }
}

/// Parses `args` (program name first), runs the command and writes its
/// output to `out` or the `--output` file. Diagnostics go to `err`.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{e}");
                    EXIT_USAGE
                }
            };
        }
    };
    if let Err(e) = configure_threads() {
        let _ = writeln!(err, "error: {e}\n{SYNOPSIS}");
        return EXIT_USAGE;
    }
    let (text, code) = match dispatch(&cli.command) {
        Ok(Output::Text(t)) => (t, EXIT_OK),
        Ok(Output::Checks(t, pass)) => (t, if pass { EXIT_OK } else { EXIT_CHECK_FAILED }),
        Err(e) => {
            let code = exit_code(&e);
            let _ = writeln!(err, "error: {e}");
            if code == EXIT_USAGE {
                let _ = writeln!(err, "{SYNOPSIS}");
            }
            return code;
        }
    };
    let written = match &cli.output {
        Some(path) => fs::write(path, text.as_bytes()),
        None => out.write_all(text.as_bytes()).and_then(|_| out.flush()),
    };
    if let Err(e) = written {
        let _ = writeln!(err, "error: cannot write output: {e}");
        return EXIT_USAGE;
    }
    code
}

/// `run_with` on the process's stdout and stderr.
pub fn parse_and_dispatch<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}
