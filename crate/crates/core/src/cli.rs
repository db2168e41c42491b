//! Batch front door: flat key=value configuration, experiment orchestration
//! and CSV/JSON emission. Every output file starts with a header block
//! (tool version, resolved config, master seed) and is byte-reproducible
//! from that header, independent of worker count; only the trailing
//! runtime_ms field of JSON reports varies between runs.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::criterion::{cadlag_verdict, counterexample_demo};
use crate::kernel::Kernel;
use crate::measure::ControlMeasure;
use crate::path::uniform_grid;
use crate::reference::{scale_abs_jump, scale_pos_jump, scale_vp, FrechetLaw};
use crate::rng::RngStream;
use crate::series::{
    draw_terms, lepage_sample_path, partial_sum_ladder, series_eval_at, series_ledger,
    tail_diagnostics, SeriesConfig, Truncation,
};
use crate::stats::{ks_one_sample, ks_two_sample, EmpiricalSample};
use crate::{Error, LepageIntegrand, Result};

pub const COMMANDS: [&str; 5] = ["simulate", "verify", "diagnose", "criterion", "demo"];

const COMMON_KEYS: [&str; 9] =
    ["seed", "alpha", "kernel", "measure", "terms", "level", "replicates", "grid", "out"];

fn allowed_keys(command: &str) -> Result<Vec<&'static str>> {
    let extra: &[&str] = match command {
        "simulate" => &[],
        "verify" => &["target", "p", "t", "threshold"],
        "diagnose" => &["mode", "jmax", "ladder"],
        "criterion" => &["p1", "p2", "timegrid"],
        "demo" => return Ok(vec!["seed", "p", "jmax", "out"]),
        other => return Err(Error::Config(format!("unknown command `{other}`"))),
    };
    Ok(COMMON_KEYS.iter().chain(extra).copied().collect())
}

/// Resolved key=value configuration of one command invocation.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub command: String,
    map: BTreeMap<String, String>,
}

impl ExperimentConfig {
    /// Build from command-line pairs. A `config=<file>` pair loads a flat
    /// key=value file first; later pairs override earlier ones.
    pub fn from_args(command: &str, args: &[String]) -> Result<Self> {
        let allowed = allowed_keys(command)?;
        let mut pairs: Vec<(String, String)> = Vec::new();
        for arg in args {
            let (key, value) = arg
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("expected key=value, got `{arg}`")))?;
            if key == "config" {
                for line in fs::read_to_string(value)?.lines() {
                    let line = line.trim();
                    if line.is_empty() || line.starts_with('#') {
                        continue;
                    }
                    let (k, v) = line.split_once('=').ok_or_else(|| {
                        Error::Config(format!("expected key=value in config file, got `{line}`"))
                    })?;
                    pairs.push((k.trim().to_string(), v.trim().to_string()));
                }
            } else {
                pairs.push((key.trim().to_string(), value.trim().to_string()));
            }
        }
        let mut map = BTreeMap::new();
        for (k, v) in pairs {
            if !allowed.contains(&k.as_str()) {
                return Err(Error::Config(format!("unknown key `{k}` for command `{command}`")));
            }
            map.insert(k, v); // later wins
        }
        Ok(Self { command: command.to_string(), map })
    }

    pub fn set(&mut self, key: &str, value: &str) {
        self.map.insert(key.to_string(), value.to_string());
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(|s| s.as_str())
    }

    fn get_f64(&self, key: &str, default: f64) -> Result<f64> {
        match self.get(key) {
            None => Ok(default),
            Some(s) => s
                .parse()
                .map_err(|_| Error::Config(format!("key `{key}`: expected a number, got `{s}`"))),
        }
    }

    fn get_u64(&self, key: &str, default: u64) -> Result<u64> {
        match self.get(key) {
            None => Ok(default),
            Some(s) => s
                .parse()
                .map_err(|_| Error::Config(format!("key `{key}`: expected an integer, got `{s}`"))),
        }
    }

    fn get_usize(&self, key: &str, default: usize) -> Result<usize> {
        Ok(self.get_u64(key, default as u64)? as usize)
    }

    fn seed(&self) -> Result<u64> {
        self.get_u64("seed", 0)
    }

    fn alpha(&self) -> Result<f64> {
        self.get_f64("alpha", 1.5)
    }

    fn out_dir(&self) -> PathBuf {
        PathBuf::from(self.get("out").unwrap_or("out"))
    }

    fn kernel(&self) -> Result<Kernel> {
        match self.get("kernel").unwrap_or("indicator") {
            "indicator" => Ok(Kernel::indicator()),
            "ou" => Kernel::ou(1.0),
            spec => {
                if let Some(lambda) = spec.strip_prefix("ou:") {
                    Kernel::ou(lambda.parse().map_err(|_| {
                        Error::Config(format!("kernel `ou:<lambda>`: bad rate `{lambda}`"))
                    })?)
                } else if let Some(files) = spec.strip_prefix("tabulated:") {
                    let (values, manifest) = files.split_once(':').ok_or_else(|| {
                        Error::Config("kernel tabulated:<values.csv>:<manifest.csv>".into())
                    })?;
                    Kernel::tabulated_from_csv(Path::new(values), Path::new(manifest))
                } else {
                    Err(Error::Config(format!("unknown kernel `{spec}`")))
                }
            }
        }
    }

    fn measure(&self) -> Result<ControlMeasure> {
        match self.get("measure").unwrap_or("lebesgue") {
            "lebesgue" => Ok(ControlMeasure::lebesgue_unit()),
            spec => {
                if let Some(file) = spec.strip_prefix("atoms:") {
                    atoms_from_csv(Path::new(file))
                } else if let Some(file) = spec.strip_prefix("density:") {
                    ControlMeasure::density_from_csv(Path::new(file))
                } else {
                    Err(Error::Config(format!("unknown measure `{spec}`")))
                }
            }
        }
    }

    fn truncation(&self) -> Result<Truncation> {
        match self.get("level") {
            Some(_) => Ok(Truncation::Level(self.get_f64("level", 0.0)?)),
            None => Ok(Truncation::Terms(self.get_usize("terms", 1000)?)),
        }
    }

    fn series_config(&self) -> Result<SeriesConfig> {
        let cfg = SeriesConfig {
            alpha: self.alpha()?,
            truncation: self.truncation()?,
            replicates: self.get_usize("replicates", 100)?,
            grid_cells: self.get_usize("grid", 256)?,
            master_seed: self.seed()?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Resolved map for headers and reports: explicit keys plus the
    /// defaults that applied.
    fn resolved(&self) -> BTreeMap<String, String> {
        let mut out = self.map.clone();
        let mut put = |k: &str, v: String| {
            out.entry(k.to_string()).or_insert(v);
        };
        put("seed", "0".into());
        put("out", "out".into());
        if self.command != "demo" {
            put("alpha", "1.5".into());
            put("kernel", "indicator".into());
            put("measure", "lebesgue".into());
            put("replicates", "100".into());
            put("grid", "256".into());
            if !self.map.contains_key("level") {
                put("terms", "1000".into());
            }
        }
        match self.command.as_str() {
            "verify" => {
                put("target", "marginal".into());
                put("t", "1".into());
            }
            "diagnose" => {
                put("mode", "tails".into());
            }
            "criterion" => {
                put("p1", "2".into());
                put("p2", "1".into());
                put("timegrid", "16".into());
            }
            "demo" => {
                put("p", "4".into());
                put("jmax", "6".into());
            }
            _ => {}
        }
        out
    }
}

fn atoms_from_csv(path: &Path) -> Result<ControlMeasure> {
    let mut atoms = Vec::new();
    for line in fs::read_to_string(path)?.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split(',');
        let s: f64 = match fields.next().map(|f| f.trim().parse()) {
            Some(Ok(v)) => v,
            _ => continue, // header row
        };
        let mass: f64 = fields
            .next()
            .and_then(|f| f.trim().parse().ok())
            .ok_or_else(|| Error::InvalidMeasure(format!("bad atom row `{line}`")))?;
        atoms.push((s, mass));
    }
    ControlMeasure::atoms(atoms)
}

fn header_block<W: Write>(w: &mut W, cfg: &ExperimentConfig) -> std::io::Result<()> {
    writeln!(w, "# lepage {}", crate::VERSION)?;
    writeln!(w, "# command = {}", cfg.command)?;
    for (k, v) in cfg.resolved() {
        writeln!(w, "# {k} = {v}")?;
    }
    Ok(())
}

fn create_out_file(cfg: &ExperimentConfig, name: &str) -> Result<(PathBuf, BufWriter<fs::File>)> {
    let dir = cfg.out_dir();
    fs::create_dir_all(&dir)?;
    let path = dir.join(name);
    let mut w = BufWriter::new(fs::File::create(&path)?);
    header_block(&mut w, cfg)?;
    Ok((path, w))
}

/// Top-level dispatch; returns the files written.
pub fn run(command: &str, args: &[String]) -> Result<Vec<PathBuf>> {
    let cfg = ExperimentConfig::from_args(command, args)?;
    match command {
        "simulate" => run_simulate(&cfg),
        "verify" => run_verify(&cfg),
        "diagnose" => run_diagnose(&cfg),
        "criterion" => run_criterion(&cfg),
        "demo" => run_demo(&cfg),
        other => Err(Error::Config(format!("unknown command `{other}`"))),
    }
}

/// N replicate paths and their exact jump ledgers.
pub fn run_simulate(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let kernel = cfg.kernel()?;
    let measure = cfg.measure()?;
    let series = cfg.series_config()?;
    let base = RngStream::new(series.master_seed);
    let paths = (0..series.replicates)
        .into_par_iter()
        .map(|rep| lepage_sample_path(&kernel, &measure, &series, &base.substream(rep as u64)))
        .collect::<Result<Vec<_>>>()?;

    let (path_file, mut pw) = create_out_file(cfg, "paths.csv")?;
    writeln!(pw, "replicate,t,value")?;
    for (rep, path) in paths.iter().enumerate() {
        for (t, v) in path.grid().iter().zip(path.values()) {
            writeln!(pw, "{rep},{t},{v}")?;
        }
    }
    pw.flush()?;

    let (ledger_file, mut lw) = create_out_file(cfg, "ledgers.csv")?;
    writeln!(lw, "replicate,t,size,term_index")?;
    for (rep, path) in paths.iter().enumerate() {
        for e in path.ledger().entries() {
            writeln!(lw, "{rep},{},{},{}", e.time, e.size, e.term_index)?;
        }
    }
    lw.flush()?;
    Ok(vec![path_file, ledger_file])
}

#[derive(Serialize)]
struct VerifyReport {
    config: BTreeMap<String, String>,
    target: String,
    scale: f64,
    statistic: f64,
    /// posjump only: half-sum form of the scale and its statistic
    #[serde(skip_serializing_if = "Option::is_none")]
    displayed_form_scale: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    displayed_form_statistic: Option<f64>,
    threshold: f64,
    pass: bool,
    runtime_ms: u128,
}

/// KS comparison of a ledger functional (or the marginal) against its
/// closed-form reference law.
pub fn run_verify(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let start = Instant::now();
    let kernel = cfg.kernel()?;
    let measure = cfg.measure()?;
    let series = cfg.series_config()?;
    let alpha = series.alpha;
    let target = cfg.get("target").unwrap_or("marginal").to_string();
    let base = RngStream::new(series.master_seed);
    let n = series.replicates;
    let integrand = LepageIntegrand::new(kernel.clone(), &measure, alpha)?;
    let t_eval = cfg.get_f64("t", 1.0)?;
    let p_var = cfg.get_f64("p", 2.0)?;

    if !["marginal", "absjump", "posjump", "vp"].contains(&target.as_str()) {
        return Err(Error::Config(format!("unknown verify target `{target}`")));
    }
    // fail early on the V_p dichotomy, before any simulation
    let vp_sigma =
        if target == "vp" { Some(scale_vp(&kernel, &measure, alpha, p_var)?) } else { None };
    let functional = |rep: usize| -> f64 {
        let terms = draw_terms(&measure, series.truncation, true, &base.substream(rep as u64));
        match target.as_str() {
            "marginal" => series_eval_at(&integrand, &terms, t_eval),
            "absjump" => crate::path::max_abs_jump(&series_ledger(&integrand, &terms)),
            "posjump" => crate::path::max_jump(&series_ledger(&integrand, &terms)),
            "vp" => crate::path::vp_of_jumps(&series_ledger(&integrand, &terms), p_var),
            _ => unreachable!(),
        }
    };
    let values: Vec<f64> = (0..n).into_par_iter().map(functional).collect();
    let sample = EmpiricalSample::new(values);

    // reference streams sit far above any replicate index
    let ref_stream = base.substream(u64::MAX);
    let mut displayed_form_scale = None;
    let mut displayed_form_statistic = None;
    let (scale, statistic, default_threshold) = match target.as_str() {
        "marginal" => {
            let sigma = measure
                .integral(|s| kernel.eval(t_eval, s).abs().powf(alpha))?
                .powf(1.0 / alpha);
            let reference =
                crate::rng::sample_sas(&ref_stream, alpha, sigma.max(f64::MIN_POSITIVE), n)?;
            (sigma, ks_two_sample(&sample, &EmpiricalSample::new(reference)), 0.04)
        }
        "absjump" => {
            let (sigma, degenerate) = scale_abs_jump(&kernel, &measure, alpha)?;
            if degenerate {
                return Err(Error::InvalidKernel(
                    "kernel has no jumps; the largest-jump law degenerates at zero".into(),
                ));
            }
            let law = FrechetLaw::new(alpha, sigma)?;
            (sigma, ks_one_sample(&sample, |x| law.cdf(x)), 0.03)
        }
        "posjump" => {
            let scales = scale_pos_jump(&kernel, &measure, alpha)?;
            let proof = FrechetLaw::new(alpha, scales.proof_form)?;
            let displayed = FrechetLaw::new(alpha, scales.displayed_form)?;
            displayed_form_scale = Some(scales.displayed_form);
            displayed_form_statistic = Some(ks_one_sample(&sample, |x| displayed.cdf(x)));
            (scales.proof_form, ks_one_sample(&sample, |x| proof.cdf(x)), 0.03)
        }
        "vp" => {
            let p = cfg.get_f64("p", 2.0)?;
            let sigma = vp_sigma.unwrap();
            let reference =
                crate::rng::sample_positive_stable(&ref_stream, alpha / p, sigma, n)?;
            (sigma, ks_two_sample(&sample, &EmpiricalSample::new(reference)), 0.04)
        }
        _ => unreachable!(),
    };
    let threshold = cfg.get_f64("threshold", default_threshold)?;
    let report = VerifyReport {
        config: cfg.resolved(),
        target,
        scale,
        statistic,
        displayed_form_scale,
        displayed_form_statistic,
        threshold,
        pass: statistic < threshold,
        runtime_ms: start.elapsed().as_millis(),
    };
    write_json_report(cfg, "verify.json", &report)
}

#[derive(Serialize)]
struct TailReport {
    config: BTreeMap<String, String>,
    integral_estimate: f64,
    last_decile_max: f64,
    divergent: bool,
    r_cap: f64,
    runtime_ms: u128,
}

#[derive(Serialize)]
struct ConvergenceJsonReport {
    config: BTreeMap<String, String>,
    rungs: Vec<RungRow>,
    runtime_ms: u128,
}

#[derive(Serialize)]
struct RungRow {
    from_terms: usize,
    to_terms: usize,
    median: f64,
    q90: f64,
}

/// Tail diagnostics or the coupled partial-sum convergence ladder.
pub fn run_diagnose(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let start = Instant::now();
    let kernel = cfg.kernel()?;
    let measure = cfg.measure()?;
    let alpha = cfg.alpha()?;
    let seed = cfg.seed()?;
    match cfg.get("mode").unwrap_or("tails") {
        "tails" => {
            let integrand = LepageIntegrand::new(kernel, &measure, alpha)?;
            let j_max = cfg.get_usize("jmax", 10_000)?;
            let d = tail_diagnostics(&integrand, &measure, j_max, &RngStream::new(seed))?;
            let report = TailReport {
                config: cfg.resolved(),
                integral_estimate: d.integral_estimate,
                last_decile_max: d.last_decile_max,
                divergent: d.divergent,
                r_cap: d.r_cap,
                runtime_ms: start.elapsed().as_millis(),
            };
            write_json_report(cfg, "diagnose.json", &report)
        }
        "convergence" => {
            let ladder: Vec<usize> = match cfg.get("ladder") {
                None => vec![100, 1000, 10_000],
                Some(s) => s
                    .split(',')
                    .map(|f| {
                        f.trim().parse().map_err(|_| {
                            Error::Config(format!("ladder: expected integers, got `{f}`"))
                        })
                    })
                    .collect::<Result<_>>()?,
            };
            let replicates = cfg.get_usize("replicates", 100)?;
            let report = partial_sum_ladder(
                &kernel,
                &measure,
                alpha,
                &ladder,
                replicates,
                &RngStream::new(seed),
            )?;
            let json = ConvergenceJsonReport {
                config: cfg.resolved(),
                rungs: report
                    .rungs
                    .iter()
                    .map(|r| RungRow {
                        from_terms: r.from_terms,
                        to_terms: r.to_terms,
                        median: r.median,
                        q90: r.q90,
                    })
                    .collect(),
                runtime_ms: start.elapsed().as_millis(),
            };
            write_json_report(cfg, "diagnose.json", &json)
        }
        other => Err(Error::Config(format!("unknown diagnose mode `{other}`"))),
    }
}

#[derive(Serialize)]
struct CriterionJsonReport {
    config: BTreeMap<String, String>,
    #[serde(flatten)]
    report: crate::criterion::CriterionReport,
    pass: bool,
    runtime_ms: u128,
}

pub fn run_criterion(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let start = Instant::now();
    let kernel = cfg.kernel()?;
    let measure = cfg.measure()?;
    let grid = uniform_grid(cfg.get_usize("timegrid", 16)?.max(1) - 1);
    let report = cadlag_verdict(
        &kernel,
        &measure,
        cfg.alpha()?,
        cfg.get_f64("p1", 2.0)?,
        cfg.get_f64("p2", 1.0)?,
        &grid,
    )?;
    let pass = report.verdict == crate::criterion::VERDICT_SATISFIED;
    let json = CriterionJsonReport {
        config: cfg.resolved(),
        report,
        pass,
        runtime_ms: start.elapsed().as_millis(),
    };
    write_json_report(cfg, "criterion.json", &json)
}

/// Lacunary counterexample sequences as one long-format CSV.
pub fn run_demo(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let p = cfg.get_f64("p", 4.0)?;
    let j_max = cfg.get_usize("jmax", 6)?;
    let seed = cfg.seed()?;
    let report = counterexample_demo(p, j_max, &RngStream::new(seed))?;
    let dir = cfg.out_dir();
    fs::create_dir_all(&dir)?;
    let path = dir.join("demo.csv");
    let mut w = BufWriter::new(fs::File::create(&path)?);
    header_block(&mut w, cfg)?;
    writeln!(w, "# r = {}", report.r)?;
    writeln!(w, "record,index,value")?;
    for (i, z) in report.z.iter().enumerate() {
        writeln!(w, "z,{},{z}", i + 1)?;
    }
    for (k, _, _, sup) in &report.block_increments {
        writeln!(w, "block_increment,{k},{sup}")?;
    }
    for (i, b) in report.per_j_bounds.iter().enumerate() {
        writeln!(w, "per_j_bound,{},{b}", i + 1)?;
    }
    for (i, c) in report.cumulative_bounds.iter().enumerate() {
        writeln!(w, "cumulative_bound,{},{c}", i + 1)?;
    }
    w.flush()?;
    Ok(vec![path])
}

fn write_json_report<T: Serialize>(
    cfg: &ExperimentConfig,
    name: &str,
    report: &T,
) -> Result<Vec<PathBuf>> {
    let dir = cfg.out_dir();
    fs::create_dir_all(&dir)?;
    let path = dir.join(name);
    let mut w = BufWriter::new(fs::File::create(&path)?);
    serde_json::to_writer_pretty(&mut w, report)?;
    writeln!(w)?;
    w.flush()?;
    Ok(vec![path])
}
