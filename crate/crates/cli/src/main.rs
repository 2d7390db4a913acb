mod manifest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use xpmcap::bounds::{sweep, EffectiveCoefficient, Interference, MeanHandling, SweepTable};
use xpmcap::channel::SampleBatch;
use xpmcap::coeffs::{CoeffTensor, User};
use xpmcap::config::{Config, SimModel};
use xpmcap::region::{build_region, dominant_face_midpoint, excess_area, Region2D, RegionTag};
use xpmcap::svg::{regions_svg, sweep_svg, RegionLayer};
use xpmcap::system::PowerPair;
use xpmcap::verify::{run_suite, Suite, SuiteParams, Verdict};

use manifest::Run;

#[derive(Parser)]
#[command(name = "xpmcap", version, about = "Outer bounds and checks for the two-user nonlinear fiber channel")]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true, env = "XPMCAP_CONFIG")]
    config: Option<PathBuf>,
    /// Master seed; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the coefficient tensors of both users.
    Coeffs {
        /// Output file prefix; writes <prefix>_x.json and <prefix>_w.json.
        #[arg(long, default_value = "tensor")]
        out: String,
    },
    /// Tabulate bounds and reference rates over launch power.
    Sweep(SweepArgs),
    /// Build and export a rate region.
    Region(RegionArgs),
    /// Export a simulated sample batch.
    Simulate {
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long, value_enum)]
        model: Option<ModelArg>,
        /// Tensor files for the full model.
        #[arg(long, requires = "coeffs_w")]
        coeffs_x: Option<PathBuf>,
        #[arg(long, requires = "coeffs_x")]
        coeffs_w: Option<PathBuf>,
        /// Output prefix; writes <prefix>_x.csv and <prefix>_w.csv.
        #[arg(long, default_value = "batch")]
        out: String,
    },
    /// Run the numerical checks; exit 1 unless all pass.
    Verify {
        #[arg(long, value_enum, default_value = "all")]
        suite: SuiteArg,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long, default_value = "verify.json")]
        out: String,
    },
}

#[derive(Args)]
struct SweepArgs {
    /// Comma-separated launch powers (dBm); overrides the config.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    powers_dbm: Option<Vec<f64>>,
    /// Effective g_R (1/W) for both users; overrides the config.
    #[arg(long, requires = "g_abs_sq")]
    g_real: Option<f64>,
    /// Effective |g|² (1/W²) for both users.
    #[arg(long, requires = "g_real")]
    g_abs_sq: Option<f64>,
    /// Tensor files; c_000 sets the effective coefficient and the full
    /// tensor the interference power.
    #[arg(long, requires = "coeffs_w", conflicts_with = "g_real")]
    coeffs_x: Option<PathBuf>,
    #[arg(long, requires = "coeffs_x")]
    coeffs_w: Option<PathBuf>,
    #[arg(long, default_value = "sweep.csv")]
    out: String,
    /// Also write <out>.json.
    #[arg(long)]
    json: bool,
    /// Also write an SVG plot.
    #[arg(long)]
    svg: bool,
}

#[derive(Args)]
struct RegionArgs {
    #[arg(long, requires_all = ["u2", "usum"], conflicts_with = "from_sweep")]
    u1: Option<f64>,
    #[arg(long)]
    u2: Option<f64>,
    #[arg(long)]
    usum: Option<f64>,
    /// Sweep CSV to read the bounds from.
    #[arg(long, requires = "at_dbm")]
    from_sweep: Option<PathBuf>,
    /// Power row to take from the sweep.
    #[arg(long, allow_hyphen_values = true)]
    at_dbm: Option<f64>,
    /// AWGN box for comparison (bits); read from the sweep when available.
    #[arg(long, num_args = 2, value_names = ["R1", "R2"])]
    awgn: Option<Vec<f64>>,
    /// Interference-as-noise box for comparison.
    #[arg(long, num_args = 2, value_names = ["R1", "R2"])]
    ian: Option<Vec<f64>>,
    #[arg(long, default_value = "region.json")]
    out: String,
    #[arg(long)]
    svg: bool,
    /// Fill opacity of stacked regions.
    #[arg(long, default_value_t = 0.35)]
    opacity: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Memoryless,
    Full,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    All,
    Conv4,
    Conv6,
    Moments,
    Dettrace,
    Jensen,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Self {
        match s {
            SuiteArg::All => Suite::All,
            SuiteArg::Conv4 => Suite::Conv4,
            SuiteArg::Conv6 => Suite::Conv6,
            SuiteArg::Moments => Suite::Moments,
            SuiteArg::Dettrace => Suite::Dettrace,
            SuiteArg::Jensen => Suite::Jensen,
        }
    }
}

/// Failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }
}

impl From<xpmcap::Error> for Failure {
    fn from(e: xpmcap::Error) -> Self {
        use xpmcap::Error::*;
        let code = match e {
            GridTooSmall { .. } | Quadrature { .. } | NotPsd => 3,
            _ => 2,
        };
        Self { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::usage(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Self::usage(e.to_string())
    }
}

type Outcome = Result<bool, Failure>;

struct Context {
    config: Config,
    config_file: Option<(PathBuf, Vec<u8>)>,
    out_dir: PathBuf,
    quiet: bool,
}

impl Context {
    fn run(&self, command: &str) -> Result<Run, Failure> {
        let echo = serde_json::to_value(&self.config)?;
        let mut run = Run::new(command, &self.out_dir, self.config.seed, echo);
        if let Some((path, bytes)) = &self.config_file {
            run.input(path, bytes);
        }
        Ok(run)
    }

    fn say(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }

    fn finish(&self, run: Run) -> Result<(), Failure> {
        let path = run.finish()?;
        self.say(format!("manifest: {}", path.display()));
        Ok(())
    }
}

fn read_input(run: &mut Run, path: &Path) -> Result<String, Failure> {
    let bytes = std::fs::read(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    run.input(path, &bytes);
    String::from_utf8(bytes).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn load_tensors(run: &mut Run, x: &Path, w: &Path) -> Result<(CoeffTensor, CoeffTensor), Failure> {
    let tx = CoeffTensor::from_json(&read_input(run, x)?)?;
    let tw = CoeffTensor::from_json(&read_input(run, w)?)?;
    if tx.user != User::X || tw.user != User::W {
        return Err(Failure::usage("tensor files must hold the x and w users, in that order"));
    }
    Ok((tx, tw))
}

fn cmd_coeffs(ctx: &Context, out: &str) -> Outcome {
    let mut run = ctx.run("coeffs")?;
    let engine = ctx.config.engine()?;
    ctx.say(format!("grid: {} samples over {:.4e} s", engine.grid().n_samples, engine.grid().t_span));
    let mut reports = Vec::new();
    for (user, suffix) in [(User::X, "x"), (User::W, "w")] {
        let result = engine.tensor(user)?;
        let path = run.output(&format!("{out}_{suffix}.json"), result.tensor.to_json()?.as_bytes())?;
        ctx.say(format!("{}: residual {:.3e}", path.display(), result.report.residual));
        reports.push(result.report);
    }
    run.output(&format!("{out}_convergence.json"), serde_json::to_string_pretty(&reports)?.as_bytes())?;
    ctx.finish(run)?;
    Ok(true)
}

fn cmd_sweep(ctx: &Context, args: &SweepArgs) -> Outcome {
    let mut run = ctx.run("sweep")?;
    let cfg = &ctx.config;
    let powers = args.powers_dbm.clone().unwrap_or_else(|| cfg.sweep.powers_dbm.clone());
    if powers.is_empty() {
        return Err(Failure::usage("empty power list"));
    }
    let mut interference = match cfg.sweep.cubic() {
        Some(c) => Interference::Cubic { x: c, w: c },
        None => Interference::None,
    };
    let (gx, gw) = if let (Some(x), Some(w)) = (&args.coeffs_x, &args.coeffs_w) {
        let (tx, tw) = load_tensors(&mut run, x, w)?;
        let g = (
            EffectiveCoefficient::from_complex(tx.get(0, 0, 0)),
            EffectiveCoefficient::from_complex(tw.get(0, 0, 0)),
        );
        if cfg.sweep.kappa.is_none() {
            interference = Interference::Tensors { x: tx, w: tw, mean: MeanHandling::RemoveConditionalMean };
        }
        g
    } else if let (Some(r), Some(a)) = (args.g_real, args.g_abs_sq) {
        let g = EffectiveCoefficient::new(r, a)?;
        (g, g)
    } else if let (Some(x), Some(w)) = (cfg.sweep.g_x, cfg.sweep.g_w) {
        (x.effective()?, w.effective()?)
    } else {
        return Err(Failure::usage(
            "missing coefficients: pass --coeffs-x/--coeffs-w, --g-real/--g-abs-sq, or set sweep.g_x and sweep.g_w",
        ));
    };
    let table = sweep(&powers, cfg.sweep.plan()?, gx, gw, &interference, cfg.noise_params()?.sigma_sq)?;
    let path = run.output(&args.out, table.to_csv().as_bytes())?;
    ctx.say(format!("{}: {} rows", path.display(), table.rows.len()));
    let stem = args.out.strip_suffix(".csv").unwrap_or(&args.out);
    if args.json {
        run.output(&format!("{stem}.json"), table.to_json()?.as_bytes())?;
    }
    if args.svg {
        run.output(&format!("{stem}.svg"), sweep_svg(&table).as_bytes())?;
    }
    ctx.finish(run)?;
    Ok(true)
}

fn pair(v: &Option<Vec<f64>>) -> Option<(f64, f64)> {
    v.as_ref().map(|v| (v[0], v[1]))
}

fn cmd_region(ctx: &Context, args: &RegionArgs) -> Outcome {
    let mut run = ctx.run("region")?;
    let (mut awgn, mut ian) = (pair(&args.awgn), pair(&args.ian));
    let (u1, u2, us) = match (args.u1, args.u2, args.usum, &args.from_sweep) {
        (Some(a), Some(b), Some(c), None) => (a, b, c),
        (None, None, None, Some(path)) => {
            let at = args.at_dbm.ok_or_else(|| Failure::usage("--from-sweep needs --at-dbm"))?;
            let rows = SweepTable::parse_csv_rows(&read_input(&mut run, path)?)?;
            let row = rows
                .iter()
                .find(|r| (r[0] - at).abs() < 1e-9)
                .ok_or_else(|| Failure::usage(format!("no sweep row at {at} dBm")))?;
            awgn = awgn.or(Some((row[4], row[4])));
            ian = ian.or(Some((row[5], row[6])));
            (row[1], row[2], row[3])
        }
        _ => return Err(Failure::usage("give either --u1/--u2/--usum or --from-sweep with --at-dbm")),
    };
    if !(0.0..=1.0).contains(&args.opacity) {
        return Err(Failure::usage("--opacity must lie in [0, 1]"));
    }
    let region = build_region(u1, u2, us)?;
    let mut doc = serde_json::json!({ "region": region });
    let mut layers = Vec::new();
    let mut notes = Vec::new();
    let boxes: Vec<(Region2D, &str, &str)> = [(awgn, RegionTag::AwgnBox, "red", "AWGN"), (ian, RegionTag::IanBox, "purple", "IAN")]
        .into_iter()
        .filter_map(|(b, tag, color, label)| b.map(|(r1, r2)| Region2D::rect(tag, r1, r2).map(|r| (r, color, label))))
        .collect::<Result<_, _>>()?;
    for (b, _, label) in &boxes {
        let excess = excess_area(b, &region);
        let key = label.to_lowercase();
        doc[format!("{key}_box")] = serde_json::to_value(b)?;
        doc[format!("{key}_excess_area")] = excess.into();
        notes.push(format!("{label} area outside bound: {excess:.4}"));
    }
    if let Ok(mid) = dominant_face_midpoint(&region) {
        doc["dominant_face_midpoint"] = serde_json::json!(mid);
    }
    layers.push(RegionLayer { region: &region, fill: "gray", stroke: "black", opacity: args.opacity, label: "outer bound".into() });
    for (b, color, label) in &boxes {
        layers.push(RegionLayer { region: b, fill: color, stroke: color, opacity: args.opacity, label: (*label).into() });
    }
    let path = run.output(&args.out, serde_json::to_string_pretty(&doc)?.as_bytes())?;
    ctx.say(format!("{}: area {:.6}", path.display(), region.area()));
    if args.svg {
        let stem = args.out.strip_suffix(".json").unwrap_or(&args.out);
        run.output(&format!("{stem}.svg"), regions_svg(&layers, &notes).as_bytes())?;
    }
    ctx.finish(run)?;
    Ok(true)
}

fn cmd_simulate(
    ctx: &Context,
    samples: Option<usize>,
    model: Option<ModelArg>,
    tensors: (Option<&PathBuf>, Option<&PathBuf>),
    out: &str,
) -> Outcome {
    let mut run = ctx.run("simulate")?;
    let sim = &ctx.config.simulation;
    let n = samples.unwrap_or(sim.samples);
    let pp = sim.powers()?;
    let sigma_sq = ctx.config.noise_params()?.sigma_sq;
    let model = match model {
        Some(ModelArg::Full) => SimModel::Full,
        Some(ModelArg::Memoryless) => SimModel::Memoryless,
        None => sim.model,
    };
    let batch = match model {
        SimModel::Memoryless => {
            let (gx, gw) = sim.coefficients();
            SampleBatch::simulate_memoryless(n, pp.p1, pp.p2, gx, gw, sigma_sq, ctx.config.seed)?
        }
        SimModel::Full => {
            let (Some(x), Some(w)) = tensors else {
                return Err(Failure::usage("the full model needs --coeffs-x and --coeffs-w"));
            };
            let (tx, tw) = load_tensors(&mut run, x, w)?;
            SampleBatch::simulate_full(n, pp.p1, pp.p2, &tx, &tw, sigma_sq, ctx.config.seed)?
        }
    };
    run.output(&format!("{out}_x.csv"), batch.receiver_x().to_csv().as_bytes())?;
    run.output(&format!("{out}_w.csv"), batch.receiver_w().to_csv().as_bytes())?;
    ctx.say(format!("{n} symbols per receiver"));
    ctx.finish(run)?;
    Ok(true)
}

fn cmd_verify(ctx: &Context, suite: SuiteArg, samples: Option<usize>, out: &str) -> Outcome {
    let mut run = ctx.run("verify")?;
    let v = &ctx.config.verify;
    let c = |a: [f64; 2]| Complex64::new(a[0], a[1]);
    let params = SuiteParams {
        g_x: c(v.g_x),
        g_w: c(v.g_w),
        w: c(v.w),
        powers: PowerPair::from_dbm(v.p1_dbm, v.p2_dbm)?,
        sigma_sq: ctx.config.noise_params()?.sigma_sq,
        samples: samples.unwrap_or(v.samples),
        seed: ctx.config.seed,
    };
    let reports = run_suite(suite.into(), &params)?;
    for r in &reports {
        ctx.say(format!(
            "{:<40} {:>12} estimate {:.6e} bound {:.6e} stderr {:.2e}",
            r.name,
            format!("{:?}", r.verdict).to_uppercase(),
            r.estimate,
            r.bound,
            r.stderr
        ));
    }
    run.output(out, serde_json::to_string_pretty(&reports)?.as_bytes())?;
    ctx.finish(run)?;
    Ok(reports.iter().all(|r| r.verdict == Verdict::Pass))
}

fn dispatch(cli: Cli) -> Outcome {
    let (mut config, config_file) = match &cli.config {
        Some(path) => {
            let bytes = std::fs::read(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
            let text = std::str::from_utf8(&bytes).map_err(|e| Failure::usage(e.to_string()))?;
            (Config::from_toml_str(text)?, Some((path.clone(), bytes)))
        }
        None => (Config::default(), None),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    let ctx = Context { config, config_file, out_dir: cli.out_dir, quiet: cli.quiet };
    match &cli.command {
        Command::Coeffs { out } => cmd_coeffs(&ctx, out),
        Command::Sweep(args) => cmd_sweep(&ctx, args),
        Command::Region(args) => cmd_region(&ctx, args),
        Command::Simulate { samples, model, coeffs_x, coeffs_w, out } => {
            cmd_simulate(&ctx, *samples, *model, (coeffs_x.as_ref(), coeffs_w.as_ref()), out)
        }
        Command::Verify { suite, samples, out } => cmd_verify(&ctx, *suite, *samples, out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
