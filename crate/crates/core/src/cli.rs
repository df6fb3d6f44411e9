//! Configuration-driven runner behind the `mwmw` binary.
//!
//! A run is described by one JSON file ([`RunConfig`]). Every subcommand
//! writes a single report file into the output directory and maps its outcome
//! to an exit code: 0 pass, 1 check failure, 2 configuration error, 3 resource
//! limit.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::criterion::{sweep, SweepReport, SweepSpec, VerdictKind};
use crate::cutoff::{CutoffProfile, CutoffSpec};
use crate::error::{Error, Result};
use crate::geometry::{Growth, Lattice, LatticeSpec};
use crate::model::{
    check_decay_k, check_f_function, check_simple_decay, verify_charge_family, ChargeFamily, ChargeSpec, FFunction,
    Interaction, InteractionSpec, CF_MAX_SITES,
};
use crate::symmetry::{check_k_symmetric, MultiIndex};
use crate::thermal::{entropy_suite, EntropyRow};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;

/// Where the interaction comes from: a separate JSON file or inline.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InteractionSource {
    File { file: PathBuf },
    Inline(InteractionSpec),
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymmetryConfig {
    /// Order of the symmetry class; defaults to the interaction's claim.
    #[serde(default)]
    pub k: Option<u32>,
    /// The multi-index swept over, as `"1,0"` or `[1, 0]`.
    #[serde(default)]
    pub a: Option<MultiIndex>,
    /// 1-based exempt axes; overrides the interaction's own set.
    #[serde(default, rename = "index_set_I")]
    pub index_set_i: Option<Vec<usize>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FFunctionConfig {
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default = "default_cf_sites")]
    pub cf_max_sites: usize,
}

fn default_lambda() -> f64 {
    3.0
}
fn default_cf_sites() -> usize {
    CF_MAX_SITES
}

impl Default for FFunctionConfig {
    fn default() -> Self {
        Self { lambda: default_lambda(), cf_max_sites: default_cf_sites() }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    #[serde(default = "one")]
    pub beta: f64,
    #[serde(default = "one")]
    pub s: f64,
    /// Inclusive `[first, last]`; ignored when `m_values` is given.
    #[serde(default = "default_m_range")]
    pub m_range: [u32; 2],
    #[serde(default)]
    pub m_values: Option<Vec<u32>>,
    #[serde(default = "yes")]
    pub exact: bool,
    #[serde(default = "yes")]
    pub entropy: bool,
    #[serde(default = "default_slope")]
    pub slope_threshold: f64,
    #[serde(default)]
    pub max_seconds: Option<f64>,
    /// Required by `entropy`.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "default_instances")]
    pub instances: usize,
    #[serde(default = "default_qubits")]
    pub qubits: u32,
    #[serde(default = "default_betas")]
    pub betas: Vec<f64>,
    /// Largest entropy-identity defect accepted by `entropy`.
    #[serde(default = "default_entropy_tol")]
    pub entropy_tolerance: f64,
    #[serde(default)]
    pub growth: Option<Growth>,
    #[serde(default)]
    pub growth_radii: Option<Vec<f64>>,
    #[serde(default)]
    pub ffunction: FFunctionConfig,
}

fn one() -> f64 {
    1.0
}
fn yes() -> bool {
    true
}
fn default_m_range() -> [u32; 2] {
    [2, 8]
}
fn default_slope() -> f64 {
    0.05
}
fn default_instances() -> usize {
    100
}
fn default_qubits() -> u32 {
    3
}
fn default_betas() -> Vec<f64> {
    vec![0.3, 1.0, 3.0]
}
fn default_entropy_tol() -> f64 {
    1e-8
}

impl Default for RunSpec {
    fn default() -> Self {
        serde_json::from_value(json!({})).expect("every run field has a default")
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub dir: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
}

fn default_charges() -> ChargeSpec {
    ChargeSpec::SpinZHalf
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub lattice: LatticeSpec,
    #[serde(default = "default_charges")]
    pub charges: ChargeSpec,
    #[serde(default)]
    pub interaction: Option<InteractionSource>,
    #[serde(default)]
    pub symmetry: SymmetryConfig,
    #[serde(default)]
    pub cutoff: CutoffSpec,
    #[serde(default)]
    pub run: RunSpec,
    #[serde(default)]
    pub output: OutputSpec,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// Sets `path` (dot-separated keys) in `root` to `raw`, read as JSON when it
/// parses and as a string otherwise. Missing objects are created.
pub fn apply_override(root: &mut Value, path: &str, raw: &str) -> Result<()> {
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(Error::Config(format!("bad override path `{path}`")));
    }
    let mut node = root;
    for key in &keys[..keys.len() - 1] {
        let obj = node.as_object_mut().ok_or_else(|| Error::Config(format!("`{path}` descends into a non-object")))?;
        node = obj.entry(key.to_string()).or_insert_with(|| json!({}));
    }
    node.as_object_mut()
        .ok_or_else(|| Error::Config(format!("`{path}` descends into a non-object")))?
        .insert(keys[keys.len() - 1].to_string(), value);
    Ok(())
}

impl RunConfig {
    /// Parses a config from JSON text with `KEY=VALUE` overrides applied first.
    pub fn from_json(text: &str, overrides: &[String], base_dir: &Path) -> Result<Self> {
        let mut root: Value = serde_json::from_str(text).map_err(|e| Error::Config(format!("config: {e}")))?;
        for o in overrides {
            let (k, v) = o.split_once('=').ok_or_else(|| Error::Config(format!("override `{o}` is not KEY=VALUE")))?;
            apply_override(&mut root, k.trim(), v.trim())?;
        }
        let mut cfg: Self = serde_json::from_value(root).map_err(|e| Error::Config(format!("config: {e}")))?;
        cfg.base_dir = base_dir.to_path_buf();
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text, overrides, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn m_values(&self) -> Vec<u32> {
        match &self.run.m_values {
            Some(v) => v.clone(),
            None => (self.run.m_range[0]..=self.run.m_range[1]).collect(),
        }
    }

    /// Cross-field checks that deserialization cannot express.
    fn validate(&self, lat: &Lattice) -> Result<()> {
        if let Some(a) = &self.symmetry.a {
            if a.dim() != lat.dim() {
                return Err(Error::Config(format!(
                    "symmetry.a has {} entries but the lattice has dimension {}",
                    a.dim(),
                    lat.dim()
                )));
            }
        }
        let r = &self.run;
        let positive = [
            ("run.slope_threshold", r.slope_threshold.abs()),
            ("run.entropy_tolerance", r.entropy_tolerance),
            ("run.ffunction.lambda", r.ffunction.lambda),
        ];
        if let Some((name, _)) = positive.iter().find(|p| !(p.1 > 0.0)) {
            return Err(Error::Config(format!("{name} must be positive")));
        }
        if !(r.beta >= 0.0 && r.s.is_finite()) {
            return Err(Error::Config("run.beta must be nonnegative and run.s finite".into()));
        }
        if self.m_values().contains(&0) || self.m_values().is_empty() {
            return Err(Error::Config("m values must be positive and nonempty".into()));
        }
        if r.max_seconds.is_some_and(|t| !(t > 0.0)) {
            return Err(Error::Config("run.max_seconds must be positive".into()));
        }
        Ok(())
    }
}

/// Everything a command needs, built from a validated config.
pub struct Model {
    pub lattice: Lattice,
    pub charges: ChargeFamily,
    pub interaction: Interaction,
    pub profile: CutoffProfile,
}

impl Model {
    pub fn build(cfg: &RunConfig) -> Result<Self> {
        let lattice = cfg.lattice.build()?;
        cfg.validate(&lattice)?;
        let charges = ChargeFamily::builtin(&cfg.charges, &lattice)?;
        let spec = match &cfg.interaction {
            None => InteractionSpec::default(),
            Some(InteractionSource::Inline(s)) => s.clone(),
            Some(InteractionSource::File { file }) => {
                let path = cfg.base_dir.join(file);
                let text =
                    std::fs::read_to_string(&path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
                serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
            }
        };
        let mut interaction = spec.build(&lattice, charges.site_dims())?;
        if let Some(set) = &cfg.symmetry.index_set_i {
            interaction.index_set = set
                .iter()
                .map(|&j| {
                    if j == 0 || j > lattice.dim() {
                        Err(Error::Config(format!("symmetry.index_set_I entry {j} outside 1..={}", lattice.dim())))
                    } else {
                        Ok(j - 1)
                    }
                })
                .collect::<Result<_>>()?;
        }
        let profile = CutoffProfile::from_spec(&cfg.cutoff, lattice.dim())?;
        Ok(Self { lattice, charges, interaction, profile })
    }

    fn k(&self, cfg: &RunConfig) -> u32 {
        cfg.symmetry.k.or(self.interaction.claim.k()).unwrap_or(0)
    }
}

/// Result of one subcommand.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub code: i32,
    pub file: PathBuf,
    pub summary: String,
}

/// Exit code for an error raised while configuring or running a command.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_)
        | Error::Json(_)
        | Error::Unknown { .. }
        | Error::InvalidArgument(_)
        | Error::DimensionMismatch(_)
        | Error::NotASite(_)
        | Error::SiteOutOfRange(_)
        | Error::SupportNotContained { .. }
        | Error::NotHermitian(_)
        | Error::Precondition(_) => EXIT_CONFIG,
        Error::DenseLimit { .. } | Error::VolumeTooSmall(_) | Error::Overflow(_) => EXIT_RESOURCE,
        _ => EXIT_FAIL,
    }
}

/// A float with 17 significant digits; empty for `None`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "NaN".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

/// Pretty JSON with every non-integer number printed to 17 significant digits.
pub fn to_json_string(v: &Value) -> String {
    fn go(v: &Value, depth: usize, out: &mut String) {
        let pad = "  ".repeat(depth + 1);
        let close = "  ".repeat(depth);
        match v {
            Value::Number(n) if n.is_f64() => out.push_str(&fmt_f64(n.as_f64().unwrap_or(f64::NAN))),
            Value::Array(items) if !items.is_empty() => {
                out.push_str("[\n");
                for (i, item) in items.iter().enumerate() {
                    out.push_str(&pad);
                    go(item, depth + 1, out);
                    out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
                }
                out.push_str(&close);
                out.push(']');
            }
            Value::Object(map) if !map.is_empty() => {
                out.push_str("{\n");
                for (i, (k, item)) in map.iter().enumerate() {
                    let _ = write!(out, "{pad}{}: ", Value::String(k.clone()));
                    go(item, depth + 1, out);
                    out.push_str(if i + 1 < map.len() { ",\n" } else { "\n" });
                }
                out.push_str(&close);
                out.push('}');
            }
            other => out.push_str(&other.to_string()),
        }
    }
    let mut out = String::new();
    go(v, 0, &mut out);
    out.push('\n');
    out
}

/// Writes through a temporary file in the same directory and renames it.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("report");
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub const SWEEP_HEADER: &str =
    "m,a,s,beta,Qm_size,Dm_norm_exact,Dm_norm_triangle,rhs_bound,S_fwd,S_bwd,beta_trace,equality_defect,verdict";
pub const ENTROPY_HEADER: &str = "instance_seed,beta,lhs,rhs,defect";

pub fn sweep_csv(report: &SweepReport, dim: usize) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    let verdict = report.verdict.kind.as_str();
    for r in &report.rows {
        let a = if dim > 1 { format!("\"{}\"", r.a) } else { r.a.to_string() };
        let _ = writeln!(
            out,
            "{},{a},{},{},{},{},{},{},{},{},{},{},{verdict}",
            r.m,
            fmt_f64(r.s),
            fmt_f64(r.beta),
            r.qm_size,
            fmt_opt(r.dm_norm_exact),
            fmt_f64(r.dm_norm_triangle),
            fmt_opt(r.rhs_bound),
            fmt_opt(r.s_fwd),
            fmt_opt(r.s_bwd),
            fmt_opt(r.beta_trace),
            fmt_opt(r.equality_defect),
        );
    }
    out
}

pub fn entropy_csv(rows: &[EntropyRow]) -> String {
    let mut out = String::from(ENTROPY_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.instance_seed,
            fmt_f64(r.beta),
            fmt_f64(r.lhs),
            fmt_f64(r.rhs),
            fmt_f64(r.defect)
        );
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Check every modelling assumption on the configured model.
    Verify,
    /// Sweep the bound quantity over m.
    Sweep,
    /// Random-instance suite for the entropy perturbation identity.
    Entropy,
    /// Check the lattice growth bound.
    Geometry,
    /// Measure an F-function on the lattice.
    Ffunction,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Self::Verify => "verify",
            Self::Sweep => "sweep",
            Self::Entropy => "entropy",
            Self::Geometry => "geometry",
            Self::Ffunction => "ffunction",
        }
    }
}

fn report_path(dir: &Path, cmd: Command, format: Format) -> PathBuf {
    let tabular = matches!(cmd, Command::Sweep | Command::Entropy) && format == Format::Csv;
    dir.join(format!("{}.{}", cmd.name(), if tabular { "csv" } else { "json" }))
}

fn growth_check(cfg: &RunConfig, lat: &Lattice) -> Result<Option<crate::geometry::GrowthReport>> {
    let growth = match cfg.run.growth.or(lat.growth().filter(|g| g.c.is_finite())) {
        Some(g) => g,
        None => return Ok(None),
    };
    let radii = match &cfg.run.growth_radii {
        Some(r) => r.clone(),
        None => {
            let top = lat.points().iter().flatten().fold(1.0f64, |m, c| m.max(c.abs())).floor().max(growth.r0);
            let first = growth.r0.max(1.0).ceil();
            (0..).map(|i| first + i as f64).take_while(|&r| r <= top).collect()
        }
    };
    if radii.is_empty() {
        return Err(Error::Config("no growth radii inside the lattice".into()));
    }
    lat.verify_growth(growth, &radii).map(Some)
}

fn item(name: &str, pass: bool, detail: impl Serialize) -> Result<Value> {
    Ok(json!({ "name": name, "pass": pass, "detail": serde_json::to_value(detail)? }))
}

/// Runs `cmd` and writes its report into `out_dir`.
pub fn run_command(cmd: Command, cfg: &RunConfig, out_dir: &Path, format: Format) -> Result<Outcome> {
    let model = Model::build(cfg)?;
    let (lat, cf, phi) = (&model.lattice, &model.charges, &model.interaction);
    let file = report_path(out_dir, cmd, format);
    let (code, body, summary) = match cmd {
        Command::Verify => {
            let k = model.k(cfg);
            let mut items = Vec::new();
            if let Some(g) = growth_check(cfg, lat)? {
                items.push(item("growth", g.pass, &g)?);
            }
            let charges = verify_charge_family(cf, lat)?;
            items.push(item("charge_family", charges.pass, &charges)?);
            let sym = check_k_symmetric(phi, cf, lat, k, &phi.index_set)?;
            let sym_summary = json!({
                "k": sym.k, "index_set_I": sym.index_set.iter().map(|j| j + 1).collect::<Vec<_>>(),
                "max_defect": sym.max_defect, "witness": sym.witness, "records": sym.records.len(),
            });
            items.push(item("k_symmetry", sym.pass, sym_summary)?);
            let decay = check_decay_k(phi, cf, lat, k)?;
            items.push(item("decay_k", decay.pass, &decay)?);
            let gamma = lat.growth().map_or(lat.dim() as f64, |g| g.gamma);
            let simple = check_simple_decay(phi, cf, lat, k, gamma)?;
            let simple_summary = json!({
                "exponent": simple.exponent, "sup": simple.sup.value, "pass": simple.pass, "consistent": simple.consistent,
            });
            items.push(item("simple_decay", simple.pass && simple.consistent, simple_summary)?);
            let pass = items.iter().all(|i| i["pass"] == json!(true));
            let failed: Vec<String> =
                items.iter().filter(|i| i["pass"] != json!(true)).map(|i| i["name"].to_string()).collect();
            let summary = if pass { "all checks pass".to_string() } else { format!("failed: {}", failed.join(", ")) };
            (if pass { EXIT_PASS } else { EXIT_FAIL }, json!({ "pass": pass, "k": k, "items": items }), summary)
        }
        Command::Sweep => {
            let a = cfg.symmetry.a.clone().unwrap_or_else(|| MultiIndex::zero(lat.dim()));
            let spec = SweepSpec {
                a,
                k: model.k(cfg),
                s: cfg.run.s,
                beta: cfg.run.beta,
                m_values: cfg.m_values(),
                slope_threshold: cfg.run.slope_threshold,
                exact: cfg.run.exact,
                entropy: cfg.run.entropy,
                max_seconds: cfg.run.max_seconds,
            };
            let report = sweep(phi, cf, lat, &model.profile, &spec)?;
            let code = match report.verdict.kind {
                VerdictKind::Bounded => EXIT_PASS,
                VerdictKind::Growing => EXIT_FAIL,
                VerdictKind::Truncated => EXIT_RESOURCE,
            };
            let summary = format!(
                "{} rows, verdict {}: {}",
                report.rows.len(),
                report.verdict.kind.as_str(),
                report.verdict.reason
            );
            if format == Format::Csv {
                write_atomic(&file, &sweep_csv(&report, lat.dim()))?;
                return Ok(Outcome { code, file, summary });
            }
            (code, serde_json::to_value(&report)?, summary)
        }
        Command::Entropy => {
            let seed = cfg.run.seed.ok_or_else(|| Error::Config("run.seed is required for entropy".into()))?;
            let rows = entropy_suite(seed, cfg.run.instances, cfg.run.qubits, &cfg.run.betas)?;
            let max = rows.iter().map(|r| r.defect).fold(0.0, f64::max);
            let pass = rows.iter().all(|r| r.pass && r.defect <= cfg.run.entropy_tolerance);
            let code = if pass { EXIT_PASS } else { EXIT_FAIL };
            let summary = format!("{} rows, max defect {max:e}", rows.len());
            if format == Format::Csv {
                write_atomic(&file, &entropy_csv(&rows))?;
                return Ok(Outcome { code, file, summary });
            }
            (code, json!({ "pass": pass, "max_defect": max, "rows": rows }), summary)
        }
        Command::Geometry => {
            let report = growth_check(cfg, lat)?
                .ok_or_else(|| Error::Config("geometry needs run.growth or lattice.gamma with C".into()))?;
            let radii: Vec<f64> = (1..=8).map(f64::from).collect();
            let body = json!({ "report": &report, "gamma_estimate": lat.estimate_gamma(&radii) });
            let summary = format!(
                "growth C={} γ={} {} (worst ratio {:.6})",
                report.growth.c,
                report.growth.gamma,
                if report.pass { "passes" } else { "fails" },
                report.worst_ratio
            );
            (if report.pass { EXIT_PASS } else { EXIT_FAIL }, body, summary)
        }
        Command::Ffunction => {
            let f = FFunction::power_law(cfg.run.ffunction.lambda);
            let report = check_f_function(&f, lat, cfg.run.ffunction.cf_max_sites)?;
            let pass = report.monotone && report.norm_f.is_finite() && report.c_f.is_finite();
            let summary = format!("λ={} norm_F={:.6} C_F={:.6}", cfg.run.ffunction.lambda, report.norm_f, report.c_f);
            (if pass { EXIT_PASS } else { EXIT_FAIL }, serde_json::to_value(&report)?, summary)
        }
    };
    write_atomic(&file, &to_json_string(&body))?;
    Ok(Outcome { code, file, summary })
}

#[derive(Debug, Parser)]
#[command(name = "mwmw", version, about = "Multipole-symmetry checks for quantum lattice models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Run configuration (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; overrides `output.dir`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Report format; overrides `output.format`.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Dotted-path override `KEY=VALUE`, repeatable.
    #[arg(long = "set", global = true)]
    pub set: Vec<String>,
    /// Worker threads.
    #[arg(long, global = true, env = "MWMW_THREADS")]
    pub threads: Option<usize>,
}

/// Parses `args` and runs; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_PASS };
        }
    };
    if let Some(n) = cli.threads {
        // Fails only if a pool already exists, in which case it is reused.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let result = (|| {
        let path = cli.config.as_ref().ok_or_else(|| Error::Config("--config is required".into()))?;
        let cfg = RunConfig::load(path, &cli.set)?;
        let out = cli.out.clone().or_else(|| cfg.output.dir.clone()).unwrap_or_else(|| PathBuf::from("."));
        run_command(cli.command, &cfg, &out, cli.format.unwrap_or(cfg.output.format))
    })();
    match result {
        Ok(o) => {
            println!("{}: {} [{}]", cli.command.name(), o.summary, o.file.display());
            o.code
        }
        Err(e) => {
            eprintln!("mwmw {}: {e}", cli.command.name());
            exit_code(&e)
        }
    }
}
