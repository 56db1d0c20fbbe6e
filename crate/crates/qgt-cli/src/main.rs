use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex;
use num_traits::{Signed, Zero};
use qgt::boundary::{boundary_moment_check, coherence_check, extreme_family};
use qgt::error::Error;
use qgt::kernels::{closed_measure, lambda_closed_nk, link_measure_ext, telescope, DiscreteMeasure};
use qgt::lattice::{Config, ExtConfig, LatticePoint, QParams};
use qgt::sampler::{empirical_moment_test, RngState, Sampler};
use qgt::scalar::{parse_rational, Rational};
use qgt::splines::{qbspline, qbspline_moment};
use qgt::symfunc::Partition;
use qgt::transforms::{inv_qlaplace, qlaplace, transform_fn, Contour, Order};
use qgt::validation::{run_all, Level};
use serde_json::{Map, Value};
use std::collections::BTreeMap;
use std::process::ExitCode;

mod output;

use output::{Format, Table};

#[derive(Parser, Debug)]
#[command(name = "qgt", version, about = "Kernels, splines and transforms on the two-sided q-lattice")]
struct Cli {
    #[command(flatten)]
    run: RunArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Base of the lattice, 0 < q < 1.
    #[arg(long, global = true, default_value = "1/2", value_parser = rational)]
    q: Rational,
    #[arg(long, global = true, default_value = "1", value_parser = rational, allow_hyphen_values = true)]
    zeta_plus: Rational,
    #[arg(long, global = true, default_value = "-1", value_parser = rational, allow_hyphen_values = true)]
    zeta_minus: Rational,
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,
    /// Smallest |y| enumerated near 0; accepts `p/q`, decimals or `2^-n`.
    #[arg(long, global = true, default_value = "2^-30", value_parser = rational)]
    min_abs: Rational,
    /// Significant digits for floating-point output (capped at 17).
    #[arg(long, global = true, default_value_t = 64)]
    precision: u32,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Link kernels, their compositions and closed forms.
    #[command(subcommand)]
    Kernel(KernelCmd),
    /// q-B-splines.
    #[command(subcommand)]
    Spline(SplineCmd),
    /// The q-Laplace transform and its inverse.
    #[command(subcommand)]
    Transform(TransformCmd),
    /// Boundary kernels and coherent families.
    #[command(subcommand)]
    Boundary(BoundaryCmd),
    /// Draw from the kernels.
    Sample(SampleArgs),
    /// Run the cross-check suite.
    Validate {
        #[arg(long, value_enum, default_value_t = LevelArg::Quick)]
        level: LevelArg,
    },
}

#[derive(Subcommand, Debug)]
enum KernelCmd {
    /// One link step from level N to N-1.
    Link {
        #[arg(long, value_parser = ext_config, allow_hyphen_values = true)]
        x: ExtConfig,
    },
    /// Composition of link steps down to level K.
    Compose {
        #[arg(long, value_parser = ext_config, allow_hyphen_values = true)]
        x: ExtConfig,
        #[arg(long)]
        k: usize,
        /// Drop atoms lighter than this at every step.
        #[arg(long, default_value_t = 0.0)]
        prune: f64,
    },
    /// The closed form on configurations without zeros.
    Closed {
        #[arg(long, value_parser = ext_config, allow_hyphen_values = true)]
        x: ExtConfig,
        #[arg(long)]
        k: usize,
        /// Evaluate a single weight instead of the whole table.
        #[arg(long, value_parser = config, allow_hyphen_values = true)]
        y: Option<Config>,
    },
}

#[derive(Subcommand, Debug)]
enum SplineCmd {
    /// The m-th moment, exactly.
    Moments {
        #[arg(long, value_parser = ext_config, allow_hyphen_values = true)]
        x: ExtConfig,
        #[arg(long)]
        m: usize,
    },
    /// The atoms of the spline measure.
    Table {
        #[arg(long, value_parser = ext_config, allow_hyphen_values = true)]
        x: ExtConfig,
    },
}

#[derive(Subcommand, Debug)]
enum TransformCmd {
    /// Evaluate the transform of a finite measure at z.
    Fwd {
        /// Atom `point=weight`, repeatable.
        #[arg(long = "atom", required = true, value_parser = atom, allow_hyphen_values = true)]
        atoms: Vec<(LatticePoint, f64)>,
        /// Complex point `re,im`.
        #[arg(long, value_parser = complex, allow_hyphen_values = true)]
        z: Complex<f64>,
        /// Order N >= 2, or `inf`.
        #[arg(long, default_value = "inf")]
        order: Order,
    },
    /// Recover the mass at y from the transform by contour integration.
    Inv {
        #[arg(long = "atom", required = true, value_parser = atom, allow_hyphen_values = true)]
        atoms: Vec<(LatticePoint, f64)>,
        #[arg(long, allow_hyphen_values = true)]
        y: LatticePoint,
        #[arg(long, default_value = "inf")]
        order: Order,
        #[arg(long, allow_hyphen_values = true)]
        abscissa: Option<f64>,
        #[arg(long)]
        half_height: Option<f64>,
    },
}

#[derive(Subcommand, Debug)]
enum BoundaryCmd {
    /// The extreme family attached to a boundary configuration.
    Family {
        #[arg(long, value_parser = config, allow_hyphen_values = true)]
        x: Config,
        #[arg(long, default_value_t = 2)]
        k_max: usize,
    },
    /// Coherence between levels K and K+1, and the moment identities at K.
    Check {
        #[arg(long, value_parser = config, allow_hyphen_values = true)]
        x: Config,
        #[arg(long, default_value_t = 1)]
        k: usize,
        /// Largest |ν| in the moment identities.
        #[arg(long, default_value_t = 2)]
        max_size: usize,
    },
}

#[derive(Args, Debug)]
struct SampleArgs {
    #[arg(long, value_parser = config, allow_hyphen_values = true)]
    x: Config,
    #[arg(long)]
    k: usize,
    /// Number of draws summarized as frequencies.
    #[arg(long, default_value_t = 1)]
    n: usize,
    /// Print the whole chain of one draw.
    #[arg(long)]
    trajectory: bool,
    /// Compare the empirical mean of this normalized Schur function with its target.
    #[arg(long, value_parser = partition)]
    nu: Option<Partition>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum LevelArg {
    Quick,
    Full,
}

fn rational(s: &str) -> Result<Rational, String> {
    if let Some(e) = s.strip_prefix("2^") {
        let e: i32 = e.parse().map_err(|_| format!("bad exponent in `{s}`"))?;
        return Ok(Rational::from_integer(2.into()).pow(e));
    }
    parse_rational(s).ok_or_else(|| format!("`{s}` is not a rational number"))
}

fn ext_config(s: &str) -> Result<ExtConfig, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn config(s: &str) -> Result<Config, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn partition(s: &str) -> Result<Partition, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn atom(s: &str) -> Result<(LatticePoint, f64), String> {
    let (p, w) = s.split_once('=').ok_or_else(|| format!("expected `point=weight`, got `{s}`"))?;
    let p: LatticePoint = p.trim().parse().map_err(|e: Error| e.to_string())?;
    let w = parse_rational(w).ok_or_else(|| format!("bad weight in `{s}`"))?;
    Ok((p, qgt::scalar::rat_to_f64(&w)))
}

fn complex(s: &str) -> Result<Complex<f64>, String> {
    let (re, im) = s.split_once(',').ok_or_else(|| format!("expected `re,im`, got `{s}`"))?;
    let re: f64 = re.trim().parse().map_err(|_| format!("bad real part in `{s}`"))?;
    let im: f64 = im.trim().parse().map_err(|_| format!("bad imaginary part in `{s}`"))?;
    Ok(Complex::new(re, im))
}

enum Failure {
    Input(String),
    Compute(String),
    Validation,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse(_)
            | Error::InvalidParams(_)
            | Error::InvalidConfig(_)
            | Error::EmptyInterval
            | Error::SizeMismatch { .. }
            | Error::InfiniteInterval
            | Error::RepeatedKnots
            | Error::PartitionTooLong { .. } => Failure::Input(e.to_string()),
            _ => Failure::Compute(e.to_string()),
        }
    }
}

struct Ctx {
    params: QParams,
    tol: f64,
    min_abs: Rational,
    digits: usize,
    seed: u64,
    format: Format,
}

impl Ctx {
    fn float(&self, x: f64) -> String {
        output::float(x, self.digits)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Compute(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Validation) => ExitCode::from(1),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let r = cli.run;
    if !(r.tol > 0.0) {
        return Err(Failure::Input("--tol must be positive".into()));
    }
    if r.precision < 32 {
        return Err(Failure::Input("--precision must be at least 32".into()));
    }
    if !r.min_abs.is_positive() {
        return Err(Failure::Input("--min-abs must be positive".into()));
    }
    let params = QParams::new(r.q, r.zeta_plus, r.zeta_minus)?;
    let ctx = Ctx {
        params,
        tol: r.tol,
        min_abs: r.min_abs,
        digits: r.precision.min(17) as usize,
        seed: r.seed,
        format: r.format,
    };
    match cli.command {
        Command::Kernel(c) => kernel(&ctx, c),
        Command::Spline(c) => spline(&ctx, c),
        Command::Transform(c) => transform(&ctx, c),
        Command::Boundary(c) => boundary(&ctx, c),
        Command::Sample(a) => sample(&ctx, a),
        Command::Validate { level } => {
            let level = match level {
                LevelArg::Quick => Level::Quick,
                LevelArg::Full => Level::Full,
            };
            let outcomes = run_all(level, &ctx.params);
            for o in &outcomes {
                println!("{o}");
            }
            if outcomes.iter().all(|o| o.passed) {
                Ok(())
            } else {
                Err(Failure::Validation)
            }
        }
    }
}

/// Exact for single-sign configurations, floating point otherwise.
fn measure_table(
    ctx: &Ctx,
    x: &ExtConfig,
    exact: impl FnOnce() -> qgt::error::Result<DiscreteMeasure<Rational>>,
    float: impl FnOnce() -> qgt::error::Result<DiscreteMeasure<f64>>,
) -> Result<Table, Failure> {
    if x.is_single_sign() {
        Ok(Table::exact(&exact()?))
    } else {
        Ok(Table::float(&float()?, ctx.digits))
    }
}

fn kernel(ctx: &Ctx, cmd: KernelCmd) -> Result<(), Failure> {
    let p = &ctx.params;
    let table = match cmd {
        KernelCmd::Link { x } => measure_table(
            ctx,
            &x,
            || link_measure_ext(&x, &ctx.min_abs, p),
            || link_measure_ext(&x, &ctx.min_abs, p),
        )?,
        KernelCmd::Compose { x, k, prune } => measure_table(
            ctx,
            &x,
            || telescope(&x, k, &ctx.min_abs, prune, p),
            || telescope(&x, k, &ctx.min_abs, prune, p),
        )?,
        KernelCmd::Closed { x, k, y: Some(y) } => {
            if y.len() != k {
                return Err(Failure::Input(format!("Y has {} points, expected K = {k}", y.len())));
            }
            let mut t = Table::default();
            let key = ExtConfig::from(y.clone());
            if x.is_single_sign() {
                let w: Rational = lambda_closed_nk(&x, &y, p)?;
                t.rows.insert(key, w.to_string());
                t.tail = "0".into();
            } else {
                let w: f64 = lambda_closed_nk(&x, &y, p)?;
                t.rows.insert(key, ctx.float(w));
                t.tail = ctx.float(0.0);
            }
            t
        }
        KernelCmd::Closed { x, k, y: None } => measure_table(
            ctx,
            &x,
            || closed_measure(&x, k, &ctx.min_abs, p),
            || closed_measure(&x, k, &ctx.min_abs, p),
        )?,
    };
    print!("{}", table.render(ctx.format));
    Ok(())
}

fn spline(ctx: &Ctx, cmd: SplineCmd) -> Result<(), Failure> {
    let p = &ctx.params;
    match cmd {
        SplineCmd::Moments { x, m } => {
            if x.level() == 0 {
                return Err(Failure::Input("the spline needs at least one knot".into()));
            }
            println!("{}", qbspline_moment(&x, m, p));
        }
        SplineCmd::Table { x } => {
            let table =
                measure_table(ctx, &x, || qbspline(&x, &Rational::zero(), p), || qbspline(&x, &ctx.min_abs, p))?;
            print!("{}", table.render(ctx.format));
        }
    }
    Ok(())
}

fn finite_measure(atoms: &[(LatticePoint, f64)]) -> Result<DiscreteMeasure<f64>, Failure> {
    let mut mu = DiscreteMeasure::new();
    for (pt, w) in atoms {
        mu.add(ExtConfig::from(Config::new(vec![*pt])?), *w);
    }
    Ok(mu)
}

fn transform(ctx: &Ctx, cmd: TransformCmd) -> Result<(), Failure> {
    let p = &ctx.params;
    let (value, error) = match cmd {
        TransformCmd::Fwd { atoms, z, order } => {
            let mu = finite_measure(&atoms)?;
            let r = qlaplace(&mu, z, order, ctx.tol, p)?;
            (r.value, r.error)
        }
        TransformCmd::Inv { atoms, y, order, abscissa, half_height } => {
            let mu = finite_measure(&atoms)?;
            let phi = transform_fn(&mu, order, ctx.tol / 100.0, p);
            let mut c = Contour::default_for(&y, p);
            if let Some(a) = abscissa {
                c = c.with_abscissa(a);
            }
            if let Some(r) = half_height {
                c = c.with_half_height(r);
            }
            let r = inv_qlaplace(&phi, &y, order, Some(&c), ctx.tol, p)?;
            (r.value, r.error)
        }
    };
    let fields = [("re", ctx.float(value.re)), ("im", ctx.float(value.im)), ("error", ctx.float(error))];
    print!("{}", output::record(&fields, ctx.format));
    Ok(())
}

fn boundary(ctx: &Ctx, cmd: BoundaryCmd) -> Result<(), Failure> {
    let p = &ctx.params;
    match cmd {
        BoundaryCmd::Family { x, k_max } => {
            if k_max == 0 {
                return Err(Failure::Input("--k-max must be at least 1".into()));
            }
            let fam = extreme_family(&x, k_max, ctx.tol, p)?;
            match ctx.format {
                Format::Json => {
                    let mut out = Map::new();
                    for (k, m) in &fam.levels {
                        out.insert(k.to_string(), Table::float(m, ctx.digits).json());
                    }
                    println!("{}", Value::Object(out));
                }
                Format::Csv => {
                    print!("{}", output::CSV_HEADER);
                    for m in fam.levels.values() {
                        print!("{}", Table::float(m, ctx.digits).csv_rows());
                    }
                }
            }
        }
        BoundaryCmd::Check { x, k, max_size } => {
            if k == 0 {
                return Err(Failure::Input("--k must be at least 1".into()));
            }
            let fam = extreme_family(&x, k + 1, ctx.tol, p)?;
            let coh = coherence_check(&fam, k, 200, p)?;
            let mut fields = vec![
                ("coherence".to_string(), ctx.float(coh.residual)),
                ("tail".to_string(), ctx.float(coh.tail_bound)),
                ("test_atoms".to_string(), coh.test_atoms.to_string()),
            ];
            for nu in Partition::up_to_size(max_size, k) {
                let r = boundary_moment_check(&x, k, &nu, ctx.tol, p)?;
                fields.push((format!("moment {nu}"), ctx.float(r.residual)));
            }
            let fields: Vec<(&str, String)> = fields.iter().map(|(k, v)| (k.as_str(), v.clone())).collect();
            print!("{}", output::record(&fields, ctx.format));
        }
    }
    Ok(())
}

fn sample(ctx: &Ctx, a: SampleArgs) -> Result<(), Failure> {
    if a.k == 0 || a.k >= a.x.len() {
        return Err(Failure::Input(format!("K = {} must satisfy 1 <= K < N = {}", a.k, a.x.len())));
    }
    if a.n == 0 {
        return Err(Failure::Input("--n must be positive".into()));
    }
    let sampler = Sampler::new(&ctx.params, &ctx.min_abs);
    if let Some(nu) = a.nu {
        let t = empirical_moment_test(&sampler, &a.x, a.k, &nu, a.n, ctx.seed)?;
        let fields = [
            ("mean", ctx.float(t.mean)),
            ("target", ctx.float(t.target)),
            ("std_err", ctx.float(t.std_err)),
            ("z", ctx.float(t.z)),
        ];
        print!("{}", output::record(&fields, ctx.format));
        return Ok(());
    }
    if a.trajectory {
        let mut rng = RngState::new(ctx.seed);
        print!("{}", sampler.sample_chain(&a.x, a.k, &mut rng)?);
        return Ok(());
    }
    let draws = sampler.sample_many(&a.x, a.k, a.n, ctx.seed)?;
    let mut counts: BTreeMap<ExtConfig, usize> = BTreeMap::new();
    for y in draws {
        *counts.entry(ExtConfig::from(y)).or_default() += 1;
    }
    let mut t = Table::default();
    for (y, c) in counts {
        t.rows.insert(y, Rational::new(c.into(), a.n.into()).to_string());
    }
    t.tail = "0".into();
    print!("{}", t.render(ctx.format));
    Ok(())
}
