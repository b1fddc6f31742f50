use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use accelscale::arch_ir::{
    builtin_model, model_from_json, model_to_json, validate_model_with_batch, IrError, ModelSpec,
    ScalingCoeffs, BUILTIN_MODELS, DEFAULT_BATCH,
};
use accelscale::cost_model::{model_cost, CostError, HardwareProfile, ModelCost, BUILTIN_PROFILES};
use accelscale::lacs::{
    grid_search_coeffs, scale_family, speedup, AxisRange, FamilyRow, GridSpec, LacsError, PhiSchedule,
    RewardConfig, SyntheticSurrogate, DEFAULT_REWARD_EXPONENT,
};
use accelscale::nas_lite::{evolutionary_search, write_log, NasError, SearchConfig};
use accelscale::report::{
    family_table, pareto_table, search_table, speedup_table, stage_table, summary_table, Cell, Format,
    ReportBundle, RooflinePlot, Table,
};

const PROFILE_DIR_VAR: &str = "ACCELSCALE_PROFILE_DIR";
const FAMILY_INDEX: &str = "levels.json";

#[derive(Parser)]
#[command(name = "accelscale", version, about = "Roofline cost analysis, latency-aware scaling and block search for CNN families")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Per-stage cost table, model summary and a roofline plot for one model.
    Analyze(AnalyzeArgs),
    /// Scale a base model into a family, with given or searched coefficients.
    Scale(ScaleArgs),
    /// Evolutionary search over per-stage block choices.
    Search(SearchArgs),
    /// Per-level latency ratios of two families written by `scale`.
    Compare(CompareArgs),
    /// Rooflines for one or more profiles with optional model markers.
    Roofline(RooflineArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Csv,
    Json,
}

impl From<OutFormat> for Format {
    fn from(f: OutFormat) -> Self {
        match f {
            OutFormat::Csv => Format::Csv,
            OutFormat::Json => Format::Json,
        }
    }
}

#[derive(Args)]
struct Output {
    #[arg(long, value_enum, default_value = "csv")]
    format: OutFormat,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Model JSON path or builtin name (b0, x-b0, x-b0-gpu, ...).
    #[arg(long)]
    model: String,
    /// Profile JSON path or name.
    #[arg(long, default_value = "tpu_v3_like")]
    profile: String,
    #[arg(long, default_value_t = DEFAULT_BATCH)]
    batch: u32,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct ScaleArgs {
    #[arg(long)]
    model: String,
    #[arg(long, default_value = "tpu_v3_like")]
    profile: String,
    /// Fixed coefficients as alpha,beta,gamma.
    #[arg(long, conflicts_with = "search", required_unless_present = "search")]
    coeffs: Option<String>,
    /// Search the coefficients with the latency-aware reward.
    #[arg(long)]
    search: bool,
    /// Axis range min:max:step, given three times for alpha, beta and gamma.
    #[arg(long, num_args = 1, requires = "search")]
    grid: Vec<String>,
    /// Refinement rounds after the coarse grid.
    #[arg(long, default_value_t = 2, requires = "search")]
    refine: u32,
    /// Search target latency in seconds.
    #[arg(long, requires = "search", conflicts_with = "target_ratio")]
    target_latency: Option<f64>,
    /// Search target latency as a multiple of the base latency.
    #[arg(long, default_value_t = 2.0, requires = "search")]
    target_ratio: f64,
    #[arg(long, default_value_t = DEFAULT_REWARD_EXPONENT, allow_hyphen_values = true)]
    reward_w: f64,
    /// Schedule JSON path or builtin name (lacs_gpu, lacs_tpu, single_objective).
    /// Defaults to the base model alone.
    #[arg(long)]
    schedule: Option<String>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct SearchArgs {
    /// Search config JSON; defaults to the builtin skeleton and choice sets.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "tpu_v3_like")]
    profile: String,
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    family_a: PathBuf,
    #[arg(long)]
    family_b: PathBuf,
    #[arg(long, default_value = "tpu_v3_like")]
    profile: String,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct RooflineArgs {
    #[arg(long, required = true)]
    profile: Vec<String>,
    #[arg(long)]
    model: Vec<String>,
    #[command(flatten)]
    output: Output,
}

/// Exit 2 for bad inputs, 3 for computations that fail on valid inputs.
#[derive(Debug)]
enum CliError {
    Input(String),
    Compute(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Compute(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Input(m) | CliError::Compute(m) => m,
        }
    }
}

impl From<IrError> for CliError {
    fn from(e: IrError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<CostError> for CliError {
    fn from(e: CostError) -> Self {
        match e {
            CostError::Overflow => CliError::Compute(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<LacsError> for CliError {
    fn from(e: LacsError) -> Self {
        match e {
            LacsError::Ir(e) => e.into(),
            LacsError::Cost(e) => e.into(),
            LacsError::EmptyGrid
            | LacsError::InvalidGrid(_)
            | LacsError::InvalidSchedule(_)
            | LacsError::InvalidConfig(_)
            | LacsError::LevelMismatch { .. } => CliError::Input(e.to_string()),
            _ => CliError::Compute(e.to_string()),
        }
    }
}

impl From<NasError> for CliError {
    fn from(e: NasError) -> Self {
        match e {
            NasError::Ir(e) => e.into(),
            NasError::Cost(e) => e.into(),
            NasError::Lacs(e) => e.into(),
            NasError::NoMutationPossible => CliError::Compute(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn looks_like_path(s: &str) -> bool {
    s.contains(std::path::MAIN_SEPARATOR) || s.contains('/') || s.ends_with(".json")
}

fn load_profile(arg: &str) -> Result<HardwareProfile> {
    let p = Path::new(arg);
    if p.is_file() {
        return Ok(HardwareProfile::load(p)?);
    }
    if looks_like_path(arg) {
        return Err(CliError::Input(format!("profile file not found: {arg}")));
    }
    if let Some(dir) = std::env::var_os(PROFILE_DIR_VAR) {
        let f = Path::new(&dir).join(format!("{arg}.json"));
        if f.is_file() {
            return Ok(HardwareProfile::load(&f)?);
        }
    }
    HardwareProfile::builtin(arg).ok_or_else(|| {
        CliError::Input(format!(
            "unknown profile '{arg}': not a file, not in ${PROFILE_DIR_VAR}, not one of {}",
            BUILTIN_PROFILES.join(", ")
        ))
    })
}

fn read_model_file(p: &Path) -> Result<ModelSpec> {
    let text = std::fs::read_to_string(p)
        .map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?;
    model_from_json(&text).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))
}

fn load_model(arg: &str) -> Result<ModelSpec> {
    let p = Path::new(arg);
    if p.is_file() {
        return read_model_file(p);
    }
    if looks_like_path(arg) {
        return Err(CliError::Input(format!("model file not found: {arg}")));
    }
    builtin_model(arg).ok_or_else(|| {
        CliError::Input(format!(
            "unknown model '{arg}': not a file and not one of {}",
            BUILTIN_MODELS.join(", ")
        ))
    })
}

fn load_schedule(arg: &str) -> Result<PhiSchedule> {
    let p = Path::new(arg);
    if p.is_file() {
        return Ok(PhiSchedule::load(p)?);
    }
    if looks_like_path(arg) {
        return Err(CliError::Input(format!("schedule file not found: {arg}")));
    }
    PhiSchedule::builtin(arg).ok_or_else(|| {
        CliError::Input(format!(
            "unknown schedule '{arg}': not a file and not one of lacs_gpu, lacs_tpu, single_objective"
        ))
    })
}

fn parse_coeffs(s: &str) -> Result<ScalingCoeffs> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| CliError::Input(format!("--coeffs '{s}': {e}")))?;
    match v.as_slice() {
        [a, b, g] => Ok(ScalingCoeffs::new(*a, *b, *g)?),
        _ => Err(CliError::Input(format!("--coeffs '{s}': expected alpha,beta,gamma"))),
    }
}

fn parse_axis(s: &str) -> Result<AxisRange> {
    let v: Vec<f64> = s
        .split(':')
        .map(|x| x.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| CliError::Input(format!("--grid '{s}': {e}")))?;
    match v.as_slice() {
        [lo, hi, step] => Ok(AxisRange::new(*lo, *hi, *step)),
        _ => Err(CliError::Input(format!("--grid '{s}': expected min:max:step"))),
    }
}

fn parse_grid(args: &[String], refine: u32) -> Result<GridSpec> {
    let mut g = match args {
        [] => GridSpec::default(),
        [a, b, c] => GridSpec {
            alpha: parse_axis(a)?,
            beta: parse_axis(b)?,
            gamma: parse_axis(c)?,
            refinement_rounds: 0,
        },
        _ => {
            return Err(CliError::Input(format!(
                "--grid must be given three times (alpha, beta, gamma), got {}",
                args.len()
            )))
        }
    };
    g.refinement_rounds = refine;
    g.check()?;
    Ok(g)
}

fn cost_of(spec: &ModelSpec, profile: &HardwareProfile, batch: u32) -> Result<ModelCost> {
    Ok(model_cost(&validate_model_with_batch(spec, batch)?, profile))
}

/// Status line on stdout; a closed pipe is not an error.
fn say(line: &str) {
    use std::io::Write;
    let _ = writeln!(std::io::stdout(), "{line}");
}

fn write(bundle: &ReportBundle, out: &Path) -> Result<()> {
    let m = bundle
        .write_to(out)
        .map_err(|e| CliError::Compute(format!("{}: {e}", out.display())))?;
    say(&format!("wrote {} files to {}", m.files.len() + 1, out.display()));
    Ok(())
}

fn analyze(a: AnalyzeArgs) -> Result<()> {
    let profile = load_profile(&a.profile)?;
    let model = load_model(&a.model)?;
    let cost = cost_of(&model, &profile, a.batch)?;
    let fmt = a.output.format.into();
    let mut b = ReportBundle::new();
    b.add_table("stages", &stage_table(&cost), fmt);
    b.add_table("summary", &summary_table(&cost), fmt);
    let mut plot = RooflinePlot::new(std::slice::from_ref(&profile));
    plot.add_model(&cost);
    b.add("roofline.svg", plot.to_svg());
    write(&b, &a.output.out)
}

/// Index of a family directory, read back by `compare`.
#[derive(Serialize, Deserialize)]
struct FamilyIndex {
    base: String,
    profile: String,
    coeffs: [f64; 3],
    levels: Vec<IndexLevel>,
}

#[derive(Serialize, Deserialize)]
struct IndexLevel {
    level: String,
    phi: f64,
    model: String,
}

fn scale(a: ScaleArgs) -> Result<()> {
    let profile = load_profile(&a.profile)?;
    let base = load_model(&a.model)?;
    let schedule = match &a.schedule {
        Some(s) => load_schedule(s)?,
        None => PhiSchedule::from_phis(&[("b0", 0.0)])?,
    };
    let fmt: Format = a.output.format.into();
    let mut b = ReportBundle::new();

    let coeffs = if a.search {
        let grid = parse_grid(&a.grid, a.refine)?;
        let base_latency = cost_of(&base, &profile, DEFAULT_BATCH)?.total_latency;
        let target = a.target_latency.unwrap_or(a.target_ratio * base_latency);
        let cfg = RewardConfig::new(a.reward_w, target)?;
        let surrogate = SyntheticSurrogate::new(&base)?;
        let res = grid_search_coeffs(&base, &profile, &surrogate, &cfg, &grid)?;
        b.add_table("search_log", &search_table(&res), fmt);
        let mut best = Table::new(&["alpha", "beta", "gamma", "phi", "accuracy", "latency_s", "reward", "target_latency_s"]);
        best.push(vec![
            res.best.alpha.into(),
            res.best.beta.into(),
            res.best.gamma.into(),
            res.phi.into(),
            res.accuracy.into(),
            res.latency.into(),
            res.reward.into(),
            target.into(),
        ]);
        b.add_table("coeffs", &best, fmt);
        res.best
    } else {
        parse_coeffs(a.coeffs.as_deref().expect("clap requires --coeffs without --search"))?
    };

    let family = scale_family(&base, &coeffs, &schedule, &profile)?;
    let rows: Vec<FamilyRow> = family.iter().map(|m| m.row()).collect();
    b.add_table("family", &family_table(&rows), fmt);
    let mut levels = Vec::new();
    for m in &family {
        let rel = format!("models/{}.json", m.level);
        b.add(rel.clone(), model_to_json(&m.spec));
        levels.push(IndexLevel {
            level: m.level.clone(),
            phi: m.phi,
            model: rel,
        });
    }
    let index = FamilyIndex {
        base: base.name.clone(),
        profile: profile.name.clone(),
        coeffs: coeffs.as_array(),
        levels,
    };
    b.add(
        FAMILY_INDEX,
        serde_json::to_string_pretty(&index).expect("index serializes") + "\n",
    );
    write(&b, &a.output.out)
}

fn search(a: SearchArgs) -> Result<()> {
    let profile = load_profile(&a.profile)?;
    let mut cfg = match &a.config {
        Some(p) => SearchConfig::load(p)?,
        None => SearchConfig::default(),
    };
    if let Some(budget) = a.budget {
        cfg.budget = budget;
    }
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    let space = cfg.space();
    let reward_cfg = cfg.reward_config(&profile)?;
    let reference = space.to_spec(&space.first_candidate(), "reference")?;
    let surrogate = SyntheticSurrogate::new(&reference)?;
    let res = evolutionary_search(&space, &surrogate, &profile, &reward_cfg, &cfg.params())?;

    let fmt: Format = a.output.format.into();
    let mut b = ReportBundle::new();
    let mut log = Vec::new();
    write_log(&res.log, &mut log).map_err(|e| CliError::Compute(e.to_string()))?;
    b.add("log.jsonl", log);
    b.add_table("pareto", &pareto_table(res.archive.entries()), fmt);
    let best_spec = space.to_spec(&res.best.candidate, "searched-best")?;
    b.add("best_model.json", model_to_json(&best_spec));
    let mut best = Table::new(&["evaluated", "accuracy", "latency_s", "reward", "target_latency_s"]);
    best.push(vec![
        res.log.len().into(),
        res.best.accuracy.into(),
        res.best.latency_s.into(),
        res.best.reward.into(),
        reward_cfg.target_latency.into(),
    ]);
    b.add_table("best", &best, fmt);
    write(&b, &a.output.out)
}

fn read_family(dir: &Path, profile: &HardwareProfile) -> Result<Vec<FamilyRow>> {
    let ip = dir.join(FAMILY_INDEX);
    let text = std::fs::read_to_string(&ip)
        .map_err(|e| CliError::Input(format!("{}: {e}", ip.display())))?;
    let index: FamilyIndex = serde_json::from_str(&text)
        .map_err(|e| CliError::Input(format!("{}: {e}", ip.display())))?;
    let beta = index.coeffs[1];
    index
        .levels
        .iter()
        .map(|l| {
            let spec = read_model_file(&dir.join(&l.model))?;
            let cost = cost_of(&spec, profile, DEFAULT_BATCH)?;
            Ok(FamilyRow {
                level: l.level.clone(),
                phi: l.phi,
                depth: accelscale::arch_ir::count_total_depth(&spec),
                resolution: spec.input_resolution,
                width_mult: beta.powf(l.phi),
                flops: cost.flops_per_image().round() as u64,
                intensity: cost.aggregate_intensity,
                latency_s: cost.total_latency,
            })
        })
        .collect()
}

fn compare(a: CompareArgs) -> Result<()> {
    let profile = load_profile(&a.profile)?;
    let fa = read_family(&a.family_a, &profile)?;
    let fb = read_family(&a.family_b, &profile)?;
    let s = speedup(&fa, &fb)?;
    let mut t = speedup_table(&s);
    t.push(vec!["geomean".into(), Cell::Empty, Cell::Empty, s.geomean.into()]);
    let mut b = ReportBundle::new();
    b.add_table("speedup", &t, a.output.format.into());
    say(&format!("geomean speedup {}", accelscale::report::fmt6(s.geomean)));
    write(&b, &a.output.out)
}

fn roofline(a: RooflineArgs) -> Result<()> {
    let profiles = a
        .profile
        .iter()
        .map(|p| load_profile(p))
        .collect::<Result<Vec<_>>>()?;
    let models = a.model.iter().map(|m| load_model(m)).collect::<Result<Vec<_>>>()?;
    let mut plot = RooflinePlot::new(&profiles);
    let mut t = Table::new(&["model", "profile", "I", "achieved_ops_s", "ridge_point"]);
    for p in &profiles {
        for m in &models {
            let c = cost_of(m, p, DEFAULT_BATCH)?;
            plot.add_model(&c);
            t.push(vec![
                c.name.clone().into(),
                p.name.clone().into(),
                c.aggregate_intensity.into(),
                c.achieved_rate().into(),
                p.ridge_point().into(),
            ]);
        }
    }
    let mut b = ReportBundle::new();
    b.add("roofline.svg", plot.to_svg());
    b.add_table("markers", &t, a.output.format.into());
    write(&b, &a.output.out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let r = match cli.cmd {
        Command::Analyze(a) => analyze(a),
        Command::Scale(a) => scale(a),
        Command::Search(a) => search(a),
        Command::Compare(a) => compare(a),
        Command::Roofline(a) => roofline(a),
    };
    match r {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
