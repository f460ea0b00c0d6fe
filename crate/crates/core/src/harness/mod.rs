//! Command-line orchestration: input loading, experiment commands and JSON
//! reports. The only module that touches the file system.

pub mod cli;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::extension::{
    median_ratio, scaling_study, solution_samples, solve, ExtensionProblem, SolverSettings,
};
use crate::multiplier::{
    build_m, hormander_check, interpolation_harness, kernel_family, lacunary_ratio, partition_check, phi,
    psi_eval, r_bound_fit, test_family,
};
use crate::riesz::certificate_bound;
use crate::spectrum::{
    build_counterexample, condition_value, find_blocks, growth_test, Coefficients, CoefficientSequence,
    RadiusGenerator, RadiusSequence, SpectrumSpec, WeightGenerator, WeightSequence,
};
use crate::torus::grid_point;
use cli::{Cli, Command, CommonArgs, SolverArgs};

pub const RNG_NAME: &str = "ChaCha8Rng (rand_chacha 0.9), seed_from_u64";

/// Default length of generated sequences for commands without a natural bound.
pub const DEFAULT_GENERATED_LEN: usize = 1 << 26;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    /// How `value` is compared with `tolerance`.
    pub rule: &'static str,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Timings {
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub command: String,
    pub version: String,
    pub rng: String,
    pub config: Value,
    pub results: Value,
    pub checks: Vec<Check>,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<Timings>,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

/// Named tolerances with optional overrides from a JSON file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tolerances(BTreeMap<String, f64>);

impl Default for Tolerances {
    fn default() -> Self {
        let defaults = [
            ("psi_at_half", 1e-12),
            ("partition_of_unity", 1e-10),
            ("phi_plateau", 0.0),
            ("phi_outside_support", 0.0),
            ("r_bound_stability", 2.0),
            ("d2_overlap", 2.0),
            ("interp_refinement", 0.05),
            ("lacunary_min_ratio", 0.2),
            ("lacunary_max_ratio", 1e-9),
            ("lower_le_upper", 1e-6),
            ("upper_ge_max_coeff", 1e-9),
            ("weighted_energy", 1e-9),
            ("block_doubling", 1e-9),
        ];
        Self(defaults.into_iter().map(|(k, v)| (k.to_string(), v)).collect())
    }
}

impl Tolerances {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let mut tol = Self::default();
        if let Some(p) = path {
            let text = read_input(p)?;
            let overrides: BTreeMap<String, f64> = serde_json::from_str(&text)?;
            for (k, v) in overrides {
                if !tol.0.contains_key(&k) {
                    return Err(Error::Input(format!("unknown tolerance `{k}`")));
                }
                tol.0.insert(k, v);
            }
        }
        Ok(tol)
    }

    pub fn get(&self, name: &str) -> f64 {
        self.0[name]
    }

    /// `value ≤ tolerance`.
    fn at_most(&self, name: &str, value: f64) -> Check {
        let tolerance = self.get(name);
        Check { name: name.into(), value, tolerance, rule: "value <= tolerance", passed: value <= tolerance }
    }

    /// `value ≥ tolerance`.
    fn at_least(&self, name: &str, value: f64) -> Check {
        let tolerance = self.get(name);
        Check { name: name.into(), value, tolerance, rule: "value >= tolerance", passed: value >= tolerance }
    }
}

fn read_input(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))
}

fn parse_json<T: for<'de> Deserialize<'de>>(path: &Path, what: &str, field: &str) -> Result<T> {
    let text = read_input(path)?;
    if text.trim().is_empty() {
        return Err(Error::Input(format!("{what} file {} is empty: missing field `{field}`", path.display())));
    }
    serde_json::from_str(&text).map_err(|e| Error::Input(format!("{what} file {}: {e}", path.display())))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RadiiFile {
    log2_r: Option<Vec<f64>>,
    r: Option<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct WeightsFile {
    w: Vec<f64>,
}

fn parse_numbers(spec: &str, expected: usize, what: &str) -> Result<Vec<f64>> {
    let values: Vec<f64> = spec
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Input(format!("{what}: cannot parse numbers in `{spec}`")))?;
    if values.len() != expected {
        return Err(Error::Input(format!("{what}: expected {expected} numbers in `{spec}`")));
    }
    Ok(values)
}

pub fn parse_radius_generator(s: &str) -> Result<RadiusGenerator> {
    let (kind, args) = s.split_once(':').ok_or_else(|| Error::Input(format!("radii generator `{s}`: missing `:`")))?;
    match kind {
        "affine-log" => {
            let v = parse_numbers(args, 2, "affine-log")?;
            Ok(RadiusGenerator::AffineLog { slope: v[0], offset: v[1] })
        }
        "step" => {
            let v = parse_numbers(args, 3, "step")?;
            if v[0] < 0.0 || v[0].fract() != 0.0 {
                return Err(Error::Input("step: START must be a nonnegative integer".into()));
            }
            Ok(RadiusGenerator::Step { start: v[0] as usize, shift: v[1], floor_value: v[2] })
        }
        other => Err(Error::Input(format!("unknown radii generator `{other}`"))),
    }
}

pub fn parse_weight_generator(s: &str) -> Result<WeightGenerator> {
    let (kind, args) = s.split_once(':').ok_or_else(|| Error::Input(format!("weights generator `{s}`: missing `:`")))?;
    match kind {
        "constant" => Ok(WeightGenerator::Constant { value: parse_numbers(args, 1, "constant")?[0] }),
        "power" => {
            let v = parse_numbers(args, 2, "power")?;
            Ok(WeightGenerator::Power { scale: v[0], exponent: v[1] })
        }
        other => Err(Error::Input(format!("unknown weights generator `{other}`"))),
    }
}

/// Radii from `--radii-file` or `--radii-gen`; generators get length `len`.
pub fn load_radii(common: &CommonArgs, len: usize) -> Result<RadiusSequence> {
    if let Some(path) = &common.radii_file {
        let f: RadiiFile = parse_json(path, "radii", "log2_r")?;
        return match (f.log2_r, f.r) {
            (Some(l), None) => RadiusSequence::from_log2(l),
            (None, Some(r)) => RadiusSequence::from_radii(&r),
            _ => Err(Error::Input(format!("radii file {}: give exactly one of `log2_r`, `r`", path.display()))),
        };
    }
    if let Some(g) = &common.radii_gen {
        return RadiusSequence::generated(parse_radius_generator(g)?, common.k_max.unwrap_or(len).max(1));
    }
    Err(Error::Input("missing radii: pass --radii-file or --radii-gen".into()))
}

pub fn load_weights(common: &CommonArgs, len: usize) -> Result<WeightSequence> {
    if let Some(path) = &common.weights_file {
        let f: WeightsFile = parse_json(path, "weights", "w")?;
        return WeightSequence::from_table(f.w);
    }
    if let Some(g) = &common.weights_gen {
        return WeightSequence::generated(parse_weight_generator(g)?, common.k_max.unwrap_or(len).max(1));
    }
    Err(Error::Input("missing weights: pass --weights-file or --weights-gen".into()))
}

pub fn load_coefficients(path: &Path) -> Result<CoefficientSequence> {
    parse_json(path, "coefficients", "a")
}

fn radii_source(common: &CommonArgs) -> Value {
    match (&common.radii_file, &common.radii_gen) {
        (Some(p), _) => json!({ "file": p }),
        (_, Some(g)) => json!({ "generator": g, "len": common.k_max }),
        _ => Value::Null,
    }
}

fn weights_source(common: &CommonArgs) -> Value {
    match (&common.weights_file, &common.weights_gen) {
        (Some(p), _) => json!({ "file": p }),
        (_, Some(g)) => json!({ "generator": g, "len": common.k_max }),
        _ => Value::Null,
    }
}

fn solver_settings(args: &SolverArgs) -> SolverSettings {
    let d = SolverSettings::default();
    SolverSettings {
        p_schedule: args.p_schedule.clone().unwrap_or(d.p_schedule),
        max_iters: args.max_iters.unwrap_or(d.max_iters),
        tol: args.tol.unwrap_or(d.tol),
    }
}

/// Output of one command: the report plus files to write.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: Report,
    pub files: Vec<(PathBuf, String)>,
}

struct Draft {
    config: Value,
    results: Value,
    checks: Vec<Check>,
    files: Vec<(PathBuf, String)>,
}

/// Runs a parsed command line without writing anything.
pub fn run(cli: &Cli) -> Result<Outcome> {
    let start = Instant::now();
    let tol = Tolerances::load(cli.common.tol_overrides.as_deref())?;
    let work = || -> Result<(&'static str, Draft)> {
        let c = &cli.common;
        Ok(match &cli.command {
            Command::CheckCondition => ("check-condition", check_condition(c)?),
            Command::Synthesize(a) => ("synthesize", synthesize_cmd(c, a, &tol)?),
            Command::Certify(a) => ("certify", certify_cmd(c, a)?),
            Command::Counterexample(a) => ("counterexample", counterexample_cmd(c, a.s_max, &tol)?),
            Command::VerifyMultiplier(a) => ("verify-multiplier", verify_multiplier(c, a, &tol)?),
            Command::ScalingStudy(a) => ("scaling-study", scaling_cmd(c, a)?),
        })
    };
    let (name, draft) = match cli.common.jobs {
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build()
            .map_err(|e| Error::Input(format!("--jobs: {e}")))?
            .install(work)?,
        None => work()?,
    };
    let mut config = draft.config;
    if let Value::Object(map) = &mut config {
        map.insert("seed".into(), json!(cli.common.seed));
        map.insert("tolerances".into(), serde_json::to_value(&tol)?);
    }
    let passed = draft.checks.iter().all(|c| c.passed);
    let report = Report {
        command: name.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        rng: RNG_NAME.into(),
        config,
        results: draft.results,
        checks: draft.checks,
        passed,
        timings: (!cli.common.no_timings).then(|| Timings { wall_seconds: start.elapsed().as_secs_f64() }),
    };
    Ok(Outcome { report, files: draft.files })
}

/// Runs a command and writes its outputs; returns the report JSON when it
/// has no file destination.
pub fn execute(cli: &Cli) -> Result<Option<String>> {
    let outcome = run(cli)?;
    for (path, contents) in &outcome.files {
        std::fs::write(path, contents)?;
    }
    let json = outcome.report.to_json();
    let target = match &cli.command {
        Command::Synthesize(_) => cli.common.report.clone(),
        _ => cli.common.report.clone().or_else(|| cli.common.out.clone()),
    };
    match target {
        Some(p) => {
            std::fs::write(p, json)?;
            Ok(None)
        }
        None => Ok(Some(json)),
    }
}

fn required_n(common: &CommonArgs, default: usize) -> usize {
    common.n.unwrap_or(default)
}

fn check_condition(c: &CommonArgs) -> Result<Draft> {
    let n = required_n(c, 16);
    let radii = load_radii(c, 2 * n + 1)?;
    let weights = load_weights(c, 2 * n + 1)?;
    let mut ladder = Vec::new();
    let mut k = 1;
    while k < n {
        ladder.push(k);
        k *= 2;
    }
    ladder.push(n);
    let rows: Vec<Value> = ladder
        .iter()
        .map(|&m| {
            condition_value(&radii, &weights, m)
                .map(|cv| json!({ "N": m, "B": cv.value, "argmax": cv.argmax }))
        })
        .collect::<Result<_>>()?;
    let b = condition_value(&radii, &weights, n)?;
    let growth = growth_test(&radii, &weights, n).ok();
    let spec = SpectrumSpec::new(radii.clone(), n)?;
    let lambda: Vec<usize> = spec.lambda().iter().copied().filter(|&l| l <= 2 * n).collect();
    let flag = match growth {
        Some(g) if g.diverging => "diverging",
        Some(_) => "bounded",
        None => "undetermined",
    };
    Ok(Draft {
        config: json!({ "radii": radii_source(c), "weights": weights_source(c), "N": n }),
        results: json!({
            "B": b.value,
            "argmax": b.argmax,
            "ladder": rows,
            "growth": growth,
            "flag": flag,
            "lambda": lambda,
        }),
        checks: Vec::new(),
        files: Vec::new(),
    })
}

fn synthesize_cmd(c: &CommonArgs, args: &cli::SynthesizeArgs, tol: &Tolerances) -> Result<Draft> {
    let a = load_coefficients(&args.coeffs)?;
    let n = required_n(c, a.len().saturating_sub(1));
    let radii = load_radii(c, n + 2)?;
    let spec = SpectrumSpec::new(radii, n)?;
    let settings = solver_settings(&args.solver);
    let mut problem = ExtensionProblem::new(a.clone(), spec)?
        .with_schedule(settings.p_schedule.clone())?
        .with_iterations(settings.max_iters, settings.tol);
    if let Some(g) = c.grid {
        problem = problem.with_grid(g)?;
    }
    let free = problem.free_indices()?.len();
    let sol = solve::<f64>(&problem)?;
    let gap = if sol.lower > 0.0 {
        Some(sol.upper / sol.lower)
    } else if sol.upper == 0.0 {
        Some(1.0)
    } else {
        None
    };
    let max_a = (0..a.len()).map(|k| a.coeff(k).norm()).fold(0.0, f64::max);
    let checks = vec![
        tol.at_most("lower_le_upper", sol.lower - sol.upper),
        tol.at_most("upper_ge_max_coeff", max_a - sol.upper),
    ];
    let mut files = Vec::new();
    if let Some(out) = &c.out {
        files.push((out.clone(), serde_json::to_string_pretty(&sol)? + "\n"));
    }
    if let Some(path) = &args.samples {
        let grid = 4 * problem.grid;
        let f = solution_samples(&sol, grid)?;
        let mut csv = String::from("x,re,im,abs\n");
        for (j, z) in f.samples().iter().enumerate() {
            let _ = writeln!(csv, "{:e},{:e},{:e},{:e}", grid_point::<f64>(j, grid), z.re, z.im, z.norm());
        }
        files.push((path.clone(), csv));
    }
    Ok(Draft {
        config: json!({
            "coeffs": args.coeffs,
            "radii": radii_source(c),
            "N": n,
            "G": problem.grid,
            "p_schedule": settings.p_schedule,
            "max_iters": settings.max_iters,
            "tol": settings.tol,
        }),
        results: json!({
            "upper": sol.upper,
            "lower": sol.lower,
            "gap": gap,
            "certificate": sol.certificate,
            "free_coefficients": free,
            "support": sol.coeffs.len(),
            "history": sol.history,
        }),
        checks,
        files,
    })
}

fn parse_window(s: &str) -> Result<(usize, usize)> {
    let (m, n) = s.split_once(':').ok_or_else(|| Error::Input(format!("window `{s}`: expected M:N")))?;
    let parse = |v: &str| v.trim().parse::<usize>().map_err(|_| Error::Input(format!("window `{s}`: bad integer")));
    Ok((parse(m)?, parse(n)?))
}

fn certify_cmd(c: &CommonArgs, args: &cli::CertifyArgs) -> Result<Draft> {
    let windows: Vec<(usize, usize)> = args.windows.iter().map(|w| parse_window(w)).collect::<Result<_>>()?;
    let rows: Vec<Value>;
    let config;
    if let Some(path) = &args.coeffs {
        if windows.is_empty() {
            return Err(Error::Input("certify with --coeffs needs at least one --window M:N".into()));
        }
        let a = load_coefficients(path)?;
        let top = windows.iter().map(|w| 2 * w.1).max().unwrap_or(0);
        let n = c.n.unwrap_or(top).max(top);
        let spec = SpectrumSpec::new(load_radii(c, n + 2)?, n)?;
        rows = windows
            .iter()
            .map(|&(m, w)| certificate_bound(&a, &spec, m, w).map(|r| serde_json::to_value(r).expect("serializable")))
            .collect::<Result<_>>()?;
        config = json!({ "coeffs": path, "radii": radii_source(c), "windows": args.windows, "N": n });
    } else {
        let radii = load_radii(c, DEFAULT_GENERATED_LEN)?;
        let weights = load_weights(c, DEFAULT_GENERATED_LEN)?;
        let plan = find_blocks(&radii, &weights, args.s_max)?;
        let ce = build_counterexample(&plan, &weights);
        let top = plan.blocks.last().map_or(0, |b| b.hi());
        let spec = SpectrumSpec::new(radii, top)?;
        rows = plan
            .blocks
            .iter()
            .enumerate()
            .map(|(s, b)| {
                certificate_bound(&ce, &spec, b.m, b.n).map(|r| {
                    json!({ "s": s, "M": r.m, "N": r.n, "lower_bound": r.lower_bound, "parity_contribs": r.parity_contribs })
                })
            })
            .collect::<Result<_>>()?;
        config = json!({
            "radii": radii_source(c),
            "weights": weights_source(c),
            "s_max": args.s_max,
            "source": "counterexample",
        });
    }
    Ok(Draft { config, results: json!({ "certificates": rows }), checks: Vec::new(), files: Vec::new() })
}

fn counterexample_cmd(c: &CommonArgs, s_max: usize, tol: &Tolerances) -> Result<Draft> {
    let radii = load_radii(c, DEFAULT_GENERATED_LEN)?;
    let weights = load_weights(c, DEFAULT_GENERATED_LEN)?;
    let plan = find_blocks(&radii, &weights, s_max)?;
    plan.verify(&radii, &weights)?;
    let ce = build_counterexample(&plan, &weights);
    let top = plan.blocks.last().map_or(0, |b| b.hi());
    let spec = SpectrumSpec::new(radii.clone(), top)?;
    let mut blocks = Vec::new();
    let mut lowers = Vec::new();
    for (s, b) in plan.blocks.iter().enumerate() {
        let lower = certificate_bound(&ce, &spec, b.m, b.n)?.lower_bound;
        lowers.push(lower);
        blocks.push(json!({
            "s": s,
            "M": b.m,
            "N": b.n,
            "inv_sq_sum": b.inv_sq_sum,
            "l1_sum": ce.abs_sum(b.lo(), b.hi()),
            "lower_bound": lower,
        }));
    }
    let energy = ce.weighted_energy_closed_form();
    let doubling = lowers
        .windows(2)
        .map(|w| (w[1] / w[0] - 2.0).abs())
        .fold(0.0, f64::max);
    let checks = vec![
        tol.at_most("weighted_energy", energy - 4.0 / 3.0),
        tol.at_most("block_doubling", doubling),
    ];
    Ok(Draft {
        config: json!({ "radii": radii_source(c), "weights": weights_source(c), "s_max": s_max }),
        results: json!({ "blocks": blocks, "weighted_energy": energy, "energy_bound": 4.0 / 3.0 }),
        checks,
        files: Vec::new(),
    })
}

fn verify_multiplier(c: &CommonArgs, args: &cli::VerifyArgs, tol: &Tolerances) -> Result<Draft> {
    let n = required_n(c, 12);
    let grid = c.grid.unwrap_or(1 << 16);
    let radii = load_radii(c, n + 2)?;
    let weights = load_weights(c, n + 2)?;
    let spec = SpectrumSpec::new(radii.clone(), n)?;
    let mspec = build_m(&spec, &weights, n)?;
    let mut checks = Vec::new();

    let psi_half = psi_eval(0.5f64);
    checks.push(tol.at_most("psi_at_half", (psi_half - (-1.0f64 / 3.0).exp()).abs()));
    checks.push(tol.at_most("partition_of_unity", partition_check((-20.0, 20.0), 10_000)));
    let plateau = (0..=32)
        .map(|i| (phi(0.5 - 1.0 / 300.0 + (2.0 / 300.0) * i as f64 / 32.0) - 1.0f64).abs())
        .fold(0.0, f64::max);
    checks.push(tol.at_most("phi_plateau", plateau));
    checks.push(tol.at_most("phi_outside_support", phi(0.25f64).abs().max(phi(0.995f64).abs())));

    let fits = r_bound_fit(&args.r_values, grid)?;
    let spread = |v: Vec<f64>| {
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(0.0, f64::max);
        hi / lo
    };
    let c1_spread = spread(fits.iter().map(|f| f.c1).collect());
    let c2_spread = spread(fits.iter().map(|f| f.c2).collect());
    checks.push(Check { name: "r_bound_c1_stability".into(), ..tol.at_most("r_bound_stability", c1_spread) });
    checks.push(Check { name: "r_bound_c2_stability".into(), ..tol.at_most("r_bound_stability", c2_spread) });

    let hormander = hormander_check(&mspec, grid)?;
    let d2_bound = tol.get("d2_overlap") * mspec.max_value().powi(2);
    checks.push(Check {
        name: "d2_overlap".into(),
        value: hormander.d2,
        tolerance: d2_bound,
        rule: "value <= tolerance",
        passed: hormander.d2 <= d2_bound,
    });

    let family = test_family::<f64>(args.family_size, c.seed, n);
    let fine = interpolation_harness(&mspec, &family, grid)?;
    let coarse = interpolation_harness(&mspec, &family, grid / 2)?;
    let rel = |a: f64, b: f64| if a == 0.0 && b == 0.0 { 0.0 } else { (a - b).abs() / a.abs().max(b.abs()) };
    checks.push(Check {
        name: "interp_refinement".into(),
        ..tol.at_most("interp_refinement", rel(fine.sup_ratio_interp, coarse.sup_ratio_interp))
    });
    checks.push(Check {
        name: "weak_refinement".into(),
        ..tol.at_most("interp_refinement", rel(fine.sup_ratio_weak, coarse.sup_ratio_weak))
    });

    let lac = lacunary_ratio(args.lacunary_trials, n, c.seed, grid)?;
    checks.push(tol.at_least("lacunary_min_ratio", lac.min_ratio));
    checks.push(tol.at_most("lacunary_max_ratio", lac.max_ratio - 1.0));

    let mut files = Vec::new();
    if let Some(path) = &c.csv {
        let fam = kernel_family::<f64>(&mspec, grid)?;
        let profile = fam.l2_profile();
        let mut csv = String::from("y,kernel_l2\n");
        for (j, v) in profile.iter().enumerate() {
            let _ = writeln!(csv, "{:e},{:e}", grid_point::<f64>(j, grid), v);
        }
        files.push((path.clone(), csv));
    }

    let condition = condition_value(&radii, &weights, n)?;
    Ok(Draft {
        config: json!({
            "radii": radii_source(c),
            "weights": weights_source(c),
            "N": n,
            "G": grid,
            "family_size": args.family_size,
            "r_values": args.r_values,
            "lacunary_trials": args.lacunary_trials,
            "psi": "exp(1 - 1/(1 - t^2)) on |t| < 1",
            "eta_edges": [crate::multiplier::ETA_LOW, crate::multiplier::ETA_HIGH],
        }),
        results: json!({
            "condition_value": condition,
            "support_size": mspec.support_len(),
            "max_symbol": mspec.max_value(),
            "psi_at_half": psi_half,
            "r_bound_fit": fits,
            "hormander": hormander,
            "interpolation": { "G": fine, "G_half": coarse },
            "lacunary": lac,
        }),
        checks,
        files,
    })
}

fn scaling_cmd(c: &CommonArgs, args: &cli::ScalingArgs) -> Result<Draft> {
    let top = args.n_list.iter().copied().max().unwrap_or(0);
    let radii = load_radii(c, top + 2)?;
    let weights = load_weights(c, top + 2)?;
    let settings = solver_settings(&args.solver);
    let rows = scaling_study(&weights, &radii, &args.n_list, args.trials, c.seed, &settings)?;
    let medians: Vec<Value> =
        args.n_list.iter().map(|&n| json!({ "N": n, "median_ratio": median_ratio(&rows, n) })).collect();
    let mut files = Vec::new();
    if let Some(path) = &c.csv {
        let mut csv = String::from("N,trial,ratio,lower\n");
        for r in &rows {
            let _ = writeln!(csv, "{},{},{:e},{:e}", r.n, r.trial, r.ratio, r.lower);
        }
        files.push((path.clone(), csv));
    }
    Ok(Draft {
        config: json!({
            "radii": radii_source(c),
            "weights": weights_source(c),
            "n_list": args.n_list,
            "trials": args.trials,
            "p_schedule": settings.p_schedule,
            "max_iters": settings.max_iters,
            "tol": settings.tol,
        }),
        results: json!({ "rows": rows, "medians": medians }),
        checks: Vec::new(),
        files,
    })
}

/// Helper for callers that build coefficient files programmatically.
pub fn coefficients_json(a: &[Complex64]) -> String {
    serde_json::to_string(&CoefficientSequence::new(a.to_vec()).expect("finite coefficients")).expect("serializable")
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::Parser;

    fn cli(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("lacunary").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn generator_parsing() {
        assert_eq!(
            parse_radius_generator("affine-log:0.5,-12").unwrap(),
            RadiusGenerator::AffineLog { slope: 0.5, offset: -12.0 }
        );
        assert!(parse_radius_generator("affine-log:1").is_err());
        assert!(parse_radius_generator("step:1.5,0,0").is_err());
        assert_eq!(parse_weight_generator("constant:1").unwrap(), WeightGenerator::Constant { value: 1.0 });
        assert!(parse_weight_generator("cubic:1").is_err());
    }

    #[test]
    fn bounded_condition() {
        let out = run(&cli(&["check-condition", "--radii-gen", "affine-log:1,-11", "--weights-gen", "constant:1", "-N", "24", "--no-timings"])).unwrap();
        assert_eq!(out.report.results["B"], json!(12.0));
        assert_eq!(out.report.results["flag"], json!("bounded"));
    }

    #[test]
    fn diverging_condition() {
        let out = run(&cli(&["check-condition", "--radii-gen", "affine-log:0.5,-12", "--weights-gen", "constant:1", "-N", "24"])).unwrap();
        assert_eq!(out.report.results["flag"], json!("diverging"));
        assert!(out.report.timings.is_some());
    }

    #[test]
    fn missing_sources_are_input_errors() {
        let err = run(&cli(&["check-condition", "--weights-gen", "constant:1"])).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn counterexample_and_certificates() {
        let base = ["--radii-gen", "affine-log:0.5,-12", "--weights-gen", "constant:1", "--no-timings"];
        let mut args = vec!["counterexample", "--s-max", "3"];
        args.extend(base);
        let out = run(&cli(&args)).unwrap();
        assert!(out.report.passed);
        let lowers: Vec<f64> = out.report.results["blocks"]
            .as_array()
            .unwrap()
            .iter()
            .map(|b| b["lower_bound"].as_f64().unwrap())
            .collect();
        assert_eq!(lowers, vec![0.25, 0.5, 1.0, 2.0]);

        let mut args = vec!["certify", "--s-max", "3"];
        args.extend(base);
        let out = run(&cli(&args)).unwrap();
        let lowers: Vec<f64> = out.report.results["certificates"]
            .as_array()
            .unwrap()
            .iter()
            .map(|b| b["lower_bound"].as_f64().unwrap())
            .collect();
        assert_eq!(lowers, vec![0.25, 0.5, 1.0, 2.0]);
    }

    #[test]
    fn bounded_family_has_no_blocks() {
        let err = run(&cli(&["counterexample", "--radii-gen", "affine-log:1,-11", "--weights-gen", "constant:1", "--k-max", "4000"])).unwrap_err();
        assert!(matches!(err, Error::BlocksNotFound { .. }));
        assert_eq!(err.exit_code(), 3);
        assert!(err.to_string().starts_with("BlocksNotFound"));
    }

    #[test]
    fn unknown_tolerance_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("tol.json");
        std::fs::write(&p, r#"{"nope": 1.0}"#).unwrap();
        assert!(Tolerances::load(Some(&p)).is_err());
        std::fs::write(&p, r#"{"weighted_energy": 1e-3}"#).unwrap();
        assert_eq!(Tolerances::load(Some(&p)).unwrap().get("weighted_energy"), 1e-3);
    }

    #[test]
    fn empty_weights_file_names_the_field() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("w.json");
        std::fs::write(&p, "").unwrap();
        let c = cli(&["check-condition", "--radii-gen", "affine-log:1,-11", "--weights-file", p.to_str().unwrap()]);
        let err = run(&c).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("`w`"));
        std::fs::write(&p, "{}").unwrap();
        let err = run(&c).unwrap_err();
        assert!(err.to_string().contains("`w`"), "{err}");
    }
}
