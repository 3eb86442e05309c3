mod files;

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use starq::features::{predict_params, predictors, ParamComponent, PredictOptions};
use starq::fitting::{fitters, FitWarning};
use starq::optimizer::{build_optimizer, fit_qr, sweep_budgets, OptimizerSettings};
use starq::ordering::{build_layer_grid, orderers, path_quality_loss, OrderedPath};
use starq::tables::{self, Scenario, Sequence};
use starq::{qp_from_stepsize, stepsize_from_qp, ResolutionRef, Star};

use files::{
    input_error, load_encode_log, load_features, load_levels, load_sets, parse_frame_size,
    InputError, ModelFile,
};

#[derive(Parser)]
#[command(
    name = "starq",
    version,
    about = "Rate and quality models over stepsize, frame size and frame rate"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit rate-model parameters to an encode log (CSV).
    Fit(FitArgs),
    /// Evaluate a rate model at one point or along one axis.
    PredictRate(PredictRateArgs),
    /// Choose (q, s, t) maximizing quality under a rate budget.
    Optimize(OptimizeArgs),
    /// Order scalable layers by quality gain per rate.
    Order(OrderArgs),
    /// Predict rate-model parameters from content features.
    PredictParams(PredictParamsArgs),
    /// Write the tabulated parameters for one sequence to a model file.
    Preset(PresetArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FitModeArg {
    Protocol,
    Joint,
}

#[derive(clap::Args)]
struct FitArgs {
    log: PathBuf,
    #[arg(long, value_enum, default_value = "protocol")]
    mode: FitModeArg,
    /// Model file to write.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Row label in the printed table; defaults to the log file stem.
    #[arg(long)]
    label: Option<String>,
    #[arg(long)]
    scenario: Option<String>,
    /// Reference stepsize; defaults to the smallest in the log.
    #[arg(long)]
    q_min: Option<f64>,
    /// Reference frame size (pixels or qcif/cif/4cif); defaults to the largest in the log.
    #[arg(long, value_parser = parse_frame_size)]
    s_max: Option<f64>,
    /// Reference frame rate; defaults to the largest in the log.
    #[arg(long)]
    t_max: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Axis {
    Q,
    S,
    T,
}

#[derive(clap::Args)]
struct PredictRateArgs {
    model: PathBuf,
    #[arg(long, conflicts_with = "qp")]
    q: Option<f64>,
    #[arg(long)]
    qp: Option<f64>,
    /// Frame size in pixels or qcif/cif/4cif.
    #[arg(long, value_parser = parse_frame_size)]
    s: Option<f64>,
    #[arg(long)]
    t: Option<f64>,
    /// Emit a CSV sweep along this axis; the other two stay fixed.
    #[arg(long, value_enum)]
    sweep: Option<Axis>,
    /// Comma-separated sweep values (frame sizes may be named).
    #[arg(long, value_delimiter = ',', requires = "sweep")]
    values: Option<Vec<String>>,
    /// Encode log whose matching rates are added as a measured column.
    #[arg(long, requires = "sweep")]
    log: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum OptimizeMode {
    Continuous,
    Dyadic,
}

impl OptimizeMode {
    fn name(self) -> &'static str {
        match self {
            OptimizeMode::Continuous => "continuous",
            OptimizeMode::Dyadic => "dyadic",
        }
    }
}

#[derive(clap::Args)]
struct OptimizeArgs {
    model: PathBuf,
    /// Quality model file; may be the same file as the rate model.
    quality_model: PathBuf,
    #[arg(long, required_unless_present = "budget_sweep")]
    budget: Option<f64>,
    #[arg(long, value_enum, default_value = "continuous")]
    mode: OptimizeMode,
    /// JSON config with s_values, t_values and q_range for dyadic mode.
    #[arg(long)]
    sets: Option<PathBuf>,
    /// Emit a CSV over this many log-spaced budgets up to r_max.
    #[arg(long, conflicts_with = "budget")]
    budget_sweep: Option<usize>,
    /// Grid points per axis in continuous mode.
    #[arg(long, default_value_t = 64)]
    grid: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum Direction {
    Forward,
    Backward,
}

impl Direction {
    fn name(self) -> &'static str {
        match self {
            Direction::Forward => "forward",
            Direction::Backward => "backward",
        }
    }
}

#[derive(clap::Args)]
struct OrderArgs {
    model: PathBuf,
    quality_model: PathBuf,
    /// JSON config with s_values, t_values and q_levels.
    #[arg(long)]
    levels: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "forward")]
    direction: Direction,
    /// Write the path as JSON here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the path as JSON instead of a table.
    #[arg(long)]
    json: bool,
}

#[derive(clap::Args)]
struct PredictParamsArgs {
    /// Feature record as JSON or one-row CSV.
    #[arg(long, conflicts_with_all = ["mu_dfd", "sigma_mvm", "sigma_mda"])]
    features: Option<PathBuf>,
    #[arg(long, requires_all = ["sigma_mvm", "sigma_mda"])]
    mu_dfd: Option<f64>,
    #[arg(long)]
    sigma_mvm: Option<f64>,
    #[arg(long)]
    sigma_mda: Option<f64>,
    #[arg(long, default_value = "SVC1")]
    scenario: String,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Value substituted for a non-positive predicted r_max (kbps).
    #[arg(long, default_value_t = 1.0)]
    r_max_floor: f64,
}

#[derive(clap::Args)]
struct PresetArgs {
    /// city, crew, harbour, ice or soccer.
    #[arg(long)]
    sequence: String,
    #[arg(long, default_value = "SVC1")]
    scenario: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Fit(a) => cmd_fit(a),
        Command::PredictRate(a) => cmd_predict_rate(a),
        Command::Optimize(a) => cmd_optimize(a),
        Command::Order(a) => cmd_order(a),
        Command::PredictParams(a) => cmd_predict_params(a),
        Command::Preset(a) => cmd_preset(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// 2 input error, 3 insufficient data, 4 infeasible, 1 anything else.
fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<starq::Error>() {
            return match e {
                starq::Error::InsufficientData(_) | starq::Error::DegenerateData(_) => 3,
                starq::Error::Infeasible(_) => 4,
                _ => 2,
            };
        }
        if cause.is::<InputError>() {
            return 2;
        }
    }
    1
}

fn emit(text: &str) -> Result<()> {
    io::stdout()
        .write_all(text.as_bytes())
        .context("cannot write to stdout")
}

fn cmd_fit(args: FitArgs) -> Result<()> {
    let reference = match (args.q_min, args.s_max, args.t_max) {
        (None, None, None) => None,
        (q, s, t) => {
            let std = ResolutionRef::standard();
            Some(ResolutionRef::new(
                q.unwrap_or(std.q_min),
                s.unwrap_or(std.s_max),
                t.unwrap_or(std.t_max),
            )?)
        }
    };
    let loaded = load_encode_log(&args.log, reference)?;
    for w in &loaded.warnings {
        eprintln!("warning: {w}");
    }
    let mode = match args.mode {
        FitModeArg::Protocol => "protocol",
        FitModeArg::Joint => "joint",
    };
    let report = fitters().get(mode)?.fit(&loaded.log)?;
    for w in &report.warnings {
        eprintln!("warning: {}", describe_fit_warning(*w));
    }

    let label = args.label.clone().unwrap_or_else(|| {
        args.log
            .file_stem()
            .map_or_else(|| "log".to_string(), |s| s.to_string_lossy().into_owned())
    });
    let p = &report.params;
    let mut out = String::new();
    writeln!(
        out,
        "{:<12} {:>12} {:>12} {:>12} {:>14} {:>10} {:>9}",
        "sequence", "a", "b", "c", "r_max", "PC", "RRMSE"
    )
    .unwrap();
    writeln!(
        out,
        "{:<12} {:>12.9} {:>12.9} {:>12.9} {:>14.6} {:>10.6} {:>8.4}%",
        label,
        p.a,
        p.b,
        p.c,
        p.r_max,
        report.pc,
        100.0 * report.rrmse
    )
    .unwrap();
    writeln!(
        out,
        "reference: q_min = {}, s_max = {}, t_max = {}; {} samples, mode {mode}",
        p.reference.q_min,
        p.reference.s_max,
        p.reference.t_max,
        loaded.log.len()
    )
    .unwrap();
    emit(&out)?;

    if let Some(path) = &args.out {
        let model = ModelFile {
            scenario: args.scenario.clone(),
            label: Some(label),
            rate: Some(report.params),
            ..Default::default()
        };
        model.save(path)?;
    }
    Ok(())
}

fn describe_fit_warning(w: FitWarning) -> &'static str {
    match w {
        FitWarning::RefinementNotConverged => {
            "joint refinement hit its iteration limit; best parameters reported"
        }
        FitWarning::RefinementNoImprovement => {
            "joint refinement could not improve on its starting point"
        }
        FitWarning::LogLinearStart => {
            "log lacks the protocol anchors; joint fit started from a log-linear regression"
        }
    }
}

fn cmd_predict_rate(args: PredictRateArgs) -> Result<()> {
    let model = ModelFile::load(&args.model)?;
    let rate = model.rate(&args.model)?;
    let r = rate.reference;
    let q = match (args.q, args.qp) {
        (Some(q), _) => q,
        (None, Some(qp)) => stepsize_from_qp(qp),
        (None, None) => r.q_min,
    };
    let s = args.s.unwrap_or(r.s_max);
    let t = args.t.unwrap_or(r.t_max);

    let Some(axis) = args.sweep else {
        let value = rate.evaluate(&Star::new(q, s, t)?)?;
        return emit(&format!("{value}\n"));
    };

    let values: Vec<f64> = match &args.values {
        Some(v) => v
            .iter()
            .map(|x| match axis {
                Axis::S => parse_frame_size(x).map_err(input_error),
                _ => x
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| input_error(format!("sweep value '{x}' is not a number"))),
            })
            .collect::<Result<_>>()?,
        None => match axis {
            Axis::Q => [1.0, 1.625, 2.5, 4.0, 6.5]
                .iter()
                .map(|k| k * r.q_min)
                .collect(),
            Axis::S => [1.0 / 16.0, 0.25, 1.0]
                .iter()
                .map(|k| k * r.s_max)
                .collect(),
            Axis::T => [1.0 / 16.0, 0.125, 0.25, 0.5, 1.0]
                .iter()
                .map(|k| k * r.t_max)
                .collect(),
        },
    };
    let log = match &args.log {
        Some(path) => Some(load_encode_log(path, Some(r))?.log),
        None => None,
    };

    let mut out = String::from("q,s,t,rate_kbps");
    if log.is_some() {
        out.push_str(",measured_kbps");
    }
    out.push('\n');
    for v in values {
        let star = match axis {
            Axis::Q => Star::new(v, s, t)?,
            Axis::S => Star::new(q, v, t)?,
            Axis::T => Star::new(q, s, v)?,
        };
        write!(
            out,
            "{},{},{},{}",
            star.q,
            star.s,
            star.t,
            rate.evaluate(&star)?
        )
        .unwrap();
        if let Some(log) = &log {
            out.push(',');
            if let Some(m) = log.rate_at(&star) {
                write!(out, "{m}").unwrap();
            }
        }
        out.push('\n');
    }
    emit(&out)
}

#[derive(Serialize)]
struct OptimizeRecord {
    mode: &'static str,
    budget_kbps: f64,
    q: f64,
    qp: f64,
    s: f64,
    t: f64,
    rate_kbps: f64,
    quality: f64,
    feasible: bool,
}

fn cmd_optimize(args: OptimizeArgs) -> Result<()> {
    let rate = ModelFile::load(&args.model)?.rate(&args.model)?;
    let quality = ModelFile::load(&args.quality_model)?.quality(&args.quality_model)?;
    if args.grid < 2 {
        return Err(input_error("--grid must be at least 2"));
    }
    let settings = OptimizerSettings {
        grid_points: args.grid,
        sets: load_sets(args.sets.as_deref())?,
    };
    let optimizer = build_optimizer(args.mode.name(), &settings)?;

    let solve = |budget: f64| -> Result<OptimizeRecord> {
        let res = optimizer.optimize(&rate, &quality, budget)?;
        Ok(OptimizeRecord {
            mode: args.mode.name(),
            budget_kbps: budget,
            q: res.star.q,
            qp: qp_from_stepsize(res.star.q)?,
            s: res.star.s,
            t: res.star.t,
            rate_kbps: res.rate,
            quality: res.quality,
            feasible: res.feasible,
        })
    };

    if let Some(n) = args.budget_sweep {
        if n == 0 {
            return Err(input_error("--budget-sweep needs at least one budget"));
        }
        let mut out = String::from("budget_kbps,q,qp,s,t,rate_kbps,quality,feasible\n");
        let mut curve = Vec::with_capacity(n);
        for budget in sweep_budgets(rate.r_max, n) {
            let r = solve(budget)?;
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.budget_kbps, r.q, r.qp, r.s, r.t, r.rate_kbps, r.quality, r.feasible
            )
            .unwrap();
            curve.push((budget, r.quality));
        }
        emit(&out)?;
        if n >= 2 {
            if let Ok(fit) = fit_qr(&curve, rate.r_max) {
                eprintln!(
                    "Q(R) fit: kappa = {:.6}, rmse = {:.6}",
                    fit.model.kappa, fit.rmse
                );
            }
        }
        return Ok(());
    }

    let budget = args
        .budget
        .expect("clap requires --budget without --budget-sweep");
    let record = solve(budget)?;
    let mut text = serde_json::to_string_pretty(&record)?;
    text.push('\n');
    emit(&text)
}

#[derive(Serialize)]
struct PathRecord {
    index: [usize; 3],
    s: f64,
    t: f64,
    q: f64,
    rate_kbps: f64,
    quality: f64,
    delta_rate_kbps: f64,
    delta_quality: f64,
}

#[derive(Serialize)]
struct PathDocument {
    direction: &'static str,
    max_rate_gap_kbps: f64,
    max_rate_gap_fraction: f64,
    steps: Vec<PathRecord>,
}

fn path_document(direction: &'static str, path: &OrderedPath) -> PathDocument {
    let mut prev: Option<(f64, f64)> = None;
    let steps: Vec<PathRecord> = path
        .steps
        .iter()
        .map(|st| {
            let (dr, dq) = prev.map_or((0.0, 0.0), |(r, q)| (st.rate - r, st.quality - q));
            prev = Some((st.rate, st.quality));
            PathRecord {
                index: st.index,
                s: st.s,
                t: st.t,
                q: st.q,
                rate_kbps: st.rate,
                quality: st.quality,
                delta_rate_kbps: dr,
                delta_quality: dq,
            }
        })
        .collect();
    let max_gap = steps.iter().map(|s| s.delta_rate_kbps).fold(0.0, f64::max);
    PathDocument {
        direction,
        max_rate_gap_kbps: max_gap,
        max_rate_gap_fraction: path.max_normalized_gap(),
        steps,
    }
}

fn cmd_order(args: OrderArgs) -> Result<()> {
    let rate = ModelFile::load(&args.model)?.rate(&args.model)?;
    let quality_file = ModelFile::load(&args.quality_model)?;
    let quality = quality_file.quality(&args.quality_model)?;
    let levels = load_levels(args.levels.as_deref())?;
    let grid = build_layer_grid(&rate, &quality, &levels)?;
    let path = orderers().get(args.direction.name())?.order(&grid);
    let doc = path_document(args.direction.name(), &path);

    let mut json = serde_json::to_string_pretty(&doc)?;
    json.push('\n');
    if let Some(out) = &args.out {
        fs::write(out, &json).with_context(|| format!("cannot write {}", out.display()))?;
    }
    if args.json {
        return emit(&json);
    }

    let mut out = String::new();
    writeln!(
        out,
        "{:>4} {:>7} {:>8} {:>6} {:>8} {:>12} {:>9} {:>12} {:>9}",
        "step", "l,m,n", "s", "t", "q", "rate", "quality", "dR", "dQ"
    )
    .unwrap();
    for (i, st) in doc.steps.iter().enumerate() {
        writeln!(
            out,
            "{:>4} {:>7} {:>8} {:>6} {:>8.3} {:>12.3} {:>9.6} {:>12.3} {:>9.6}",
            i,
            format!("{},{},{}", st.index[0], st.index[1], st.index[2]),
            st.s,
            st.t,
            st.q,
            st.rate_kbps,
            st.quality,
            st.delta_rate_kbps,
            st.delta_quality
        )
        .unwrap();
    }
    writeln!(
        out,
        "{} path: {} layers, max rate gap {:.3} kbps ({:.2}% of top rate)",
        doc.direction,
        doc.steps.len(),
        doc.max_rate_gap_kbps,
        100.0 * doc.max_rate_gap_fraction
    )
    .unwrap();
    if let Some(qr) = &quality_file.qr {
        writeln!(
            out,
            "max shortfall below Q(R): {:.6}",
            path_quality_loss(&path, qr)?
        )
        .unwrap();
    }
    emit(&out)
}

fn component_name(c: ParamComponent) -> &'static str {
    match c {
        ParamComponent::A => "a",
        ParamComponent::B => "b",
        ParamComponent::C => "c",
        ParamComponent::RMax => "r_max",
    }
}

fn cmd_predict_params(args: PredictParamsArgs) -> Result<()> {
    let registry = predictors();
    let h = registry.get(&args.scenario)?;
    let features = match (&args.features, args.mu_dfd, args.sigma_mvm, args.sigma_mda) {
        (Some(path), ..) => load_features(path)?,
        (None, Some(mu), Some(mvm), Some(mda)) => {
            starq::features::FeatureVector::new(mu, mvm, mda)?
        }
        _ => {
            return Err(input_error(
                "give --features FILE or all of --mu-dfd, --sigma-mvm, --sigma-mda",
            ))
        }
    };
    let opts = PredictOptions {
        r_max_floor: args.r_max_floor,
    };
    let pred = predict_params(h, &features, ResolutionRef::standard(), opts)?;

    for c in &pred.clamped {
        let idx = match c {
            ParamComponent::A => 0,
            ParamComponent::B => 1,
            ParamComponent::C => 2,
            ParamComponent::RMax => 3,
        };
        let to = if *c == ParamComponent::RMax {
            args.r_max_floor
        } else {
            0.0
        };
        eprintln!(
            "warning: predicted {} = {} is outside the model domain; clamped to {to}",
            component_name(*c),
            pred.raw[idx]
        );
    }

    let p = &pred.params;
    let mut out = String::new();
    writeln!(
        out,
        "{:<8} {:>12} {:>12} {:>12} {:>14}",
        "scenario", "a", "b", "c", "r_max"
    )
    .unwrap();
    writeln!(
        out,
        "{:<8} {:>12.9} {:>12.9} {:>12.9} {:>14.6}",
        h.scenario, p.a, p.b, p.c, p.r_max
    )
    .unwrap();
    emit(&out)?;

    if let Some(path) = &args.out {
        let model = ModelFile {
            scenario: Some(h.scenario.clone()),
            rate: Some(pred.params),
            ..Default::default()
        };
        model.save(path)?;
    }
    Ok(())
}

fn cmd_preset(args: PresetArgs) -> Result<()> {
    let seq = Sequence::parse(&args.sequence).ok_or_else(|| {
        let names: Vec<_> = Sequence::ALL.iter().map(|s| s.name()).collect();
        input_error(format!(
            "unknown sequence '{}'; known: {}",
            args.sequence,
            names.join(", ")
        ))
    })?;
    let scenario = Scenario::parse(&args.scenario).ok_or_else(|| {
        let names: Vec<_> = Scenario::ALL.iter().map(|s| s.name()).collect();
        input_error(format!(
            "unknown scenario '{}'; known: {}",
            args.scenario,
            names.join(", ")
        ))
    })?;
    let model = ModelFile {
        scenario: Some(scenario.name().to_string()),
        label: Some(seq.name().to_string()),
        rate: Some(tables::rate_params(scenario, seq)),
        quality: Some(tables::quality_params(seq)),
        qr: Some(tables::qr_model(seq)),
    };
    match &args.out {
        Some(path) => model.save(path),
        None => emit(&model.to_json()),
    }
}
