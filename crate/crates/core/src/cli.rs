//! Experiment commands behind the `modemlab` binary.
//!
//! A [`RunConfig`] starts from a profile (`desk` or `full`) and is then
//! overridden by `key = value` pairs, first from a config file and then from
//! command-line flags. Config files are flat text: one `key = value` per
//! line, `#` starts a comment, lists are comma separated.
//!
//! Every CSV written here starts with `# key=value` lines holding the
//! configuration fingerprint, so equal fingerprints identify equal runs.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::channel::SnrSpec;
use crate::codebook::{codeword_len, GaussianCodebook};
use crate::dataset::{self, Split};
use crate::error::{check_capacity, Error, Result};
use crate::evaluation::{
    ber_sweep, mac_counts, sweep_point, time_interleaved, timing_queries, write_ber_csv, write_timing_csv, BerReport,
    NeuralDetector, NoopDetector, SweepSettings, TimingJob, TimingReport,
};
use crate::gam::{GamConstellation, MAX_K1};
use crate::link::{Link, Task};
use crate::nn::{
    read_model, train, write_model, AdamConfig, Mlp, OutputActivation, TrainConfig, TrainReport, DESK_HIDDEN,
    FULL_HIDDEN,
};
use crate::rng::{GENERATOR_NAME, GENERATOR_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    /// Small network and datasets; minutes on a desktop CPU.
    Desk,
    /// Full-size architecture and sample counts.
    Full,
}

impl Profile {
    pub fn name(&self) -> &'static str {
        match self {
            Profile::Desk => "desk",
            Profile::Full => "full",
        }
    }

    pub fn from_name(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Profile::Desk),
            "full" | "paper" => Ok(Profile::Full),
            other => Err(Error::config(format!("unknown profile `{other}` (desk | full)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub profile: Profile,
    pub task: Task,
    /// Bits per message for `train` and model-based `evaluate`.
    pub k: u32,
    /// Bits per message swept by `bench` and model-free `evaluate`.
    pub k_grid: Vec<u32>,
    pub snr_grid: Vec<f64>,
    /// Eb/N0 of the training set for `train`.
    pub train_eb_n0_db: f64,
    /// `evaluate` without a model trains one network per SNR point.
    pub train_per_snr: bool,
    pub hidden: Vec<usize>,
    pub n1: usize,
    pub rate: f64,
    pub power: f64,
    /// Master seed for datasets, initialization, shuffles and Monte Carlo.
    pub seed: u64,
    pub codebook_seed: u64,
    pub codebook_path: Option<PathBuf>,
    pub train_per_index: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub max_trials: u64,
    pub min_trials: u64,
    pub target_errors: u64,
    pub bench_repetitions: usize,
    pub bench_queries: usize,
    pub bench_eb_n0_db: f64,
    /// Samples per index for `train-size-study`.
    pub train_sizes: Vec<usize>,
    pub out_dir: PathBuf,
    pub memory_cap: u64,
}

impl RunConfig {
    pub fn for_profile(profile: Profile) -> Self {
        let desk = profile == Profile::Desk;
        Self {
            profile,
            task: Task::Demod,
            k: 2,
            k_grid: vec![2, 4, 6, 8],
            snr_grid: (0..=12).step_by(2).map(f64::from).collect(),
            train_eb_n0_db: 8.0,
            train_per_snr: false,
            hidden: if desk { DESK_HIDDEN.to_vec() } else { FULL_HIDDEN.to_vec() },
            n1: 10,
            rate: 0.5,
            power: 1.0,
            seed: 1,
            codebook_seed: 1,
            codebook_path: None,
            train_per_index: if desk { 1 << 14 } else { 1 << 18 },
            epochs: 10,
            batch_size: 256,
            learning_rate: 1e-3,
            max_trials: if desk { 200_000 } else { 1 << 25 },
            min_trials: 10_000,
            target_errors: 100,
            bench_repetitions: 31,
            bench_queries: 1024,
            bench_eb_n0_db: 6.0,
            train_sizes: if desk {
                vec![1 << 6, 1 << 8, 1 << 10]
            } else {
                vec![1 << 10, 1 << 14, 1 << 18]
            },
            out_dir: PathBuf::from("out"),
            memory_cap: dataset::DEFAULT_DATASET_CAP,
        }
    }

    /// Builds a config from ordered `key=value` overrides. A `profile` key,
    /// wherever it appears, selects the defaults the others override.
    pub fn from_pairs(pairs: &[(String, String)]) -> Result<Self> {
        let profile = pairs
            .iter()
            .rev()
            .find(|(k, _)| k == "profile")
            .map(|(_, v)| Profile::from_name(v))
            .transpose()?
            .unwrap_or(Profile::Desk);
        let mut cfg = Self::for_profile(profile);
        for (k, v) in pairs {
            if k != "profile" {
                cfg.set(k, v)?;
            }
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
            v.trim()
                .parse()
                .map_err(|_| Error::config(format!("bad value `{v}` for `{key}`")))
        }
        fn list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
            v.split(',').filter(|s| !s.trim().is_empty()).map(|s| num(key, s)).collect()
        }
        let v = value.trim();
        match key.trim() {
            "profile" => *self = Self::for_profile(Profile::from_name(v)?),
            "task" => self.task = Task::from_name(v)?,
            "k" => self.k = num(key, v)?,
            "k_grid" => self.k_grid = list(key, v)?,
            "snr_grid" => self.snr_grid = list(key, v)?,
            "train_eb_n0_db" => self.train_eb_n0_db = num(key, v)?,
            "train_per_snr" => self.train_per_snr = num(key, v)?,
            "hidden" => self.hidden = list(key, v)?,
            "n1" => self.n1 = num(key, v)?,
            "rate" => self.rate = num(key, v)?,
            "power" => self.power = num(key, v)?,
            "seed" => self.seed = num(key, v)?,
            "codebook_seed" => self.codebook_seed = num(key, v)?,
            "codebook_path" => self.codebook_path = (!v.is_empty()).then(|| PathBuf::from(v)),
            "train_per_index" => self.train_per_index = num(key, v)?,
            "epochs" => self.epochs = num(key, v)?,
            "batch_size" => self.batch_size = num(key, v)?,
            "learning_rate" => self.learning_rate = num(key, v)?,
            "max_trials" => self.max_trials = num(key, v)?,
            "min_trials" => self.min_trials = num(key, v)?,
            "target_errors" => self.target_errors = num(key, v)?,
            "bench_repetitions" => self.bench_repetitions = num(key, v)?,
            "bench_queries" => self.bench_queries = num(key, v)?,
            "bench_eb_n0_db" => self.bench_eb_n0_db = num(key, v)?,
            "train_sizes" => self.train_sizes = list(key, v)?,
            "out_dir" => self.out_dir = PathBuf::from(v),
            "memory_cap" => self.memory_cap = num(key, v)?,
            other => return Err(Error::config(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    /// Checks every module precondition the commands rely on.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::config(msg.to_string()));
        let ks = std::iter::once(self.k).chain(self.k_grid.iter().copied());
        for k in ks {
            if k == 0 || k > MAX_K1 {
                return bad(&format!("k={k} is outside 1..={MAX_K1}"));
            }
            if self.task == Task::Decode {
                codeword_len(k, self.rate).map_err(|e| Error::config(e.to_string()))?;
            }
        }
        if self.k_grid.is_empty() || self.snr_grid.is_empty() {
            return bad("k_grid and snr_grid must be nonempty");
        }
        if self.snr_grid.iter().chain([&self.train_eb_n0_db, &self.bench_eb_n0_db]).any(|v| v.is_nan()) {
            return bad("Eb/N0 values must be numbers");
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return bad("hidden widths must be positive");
        }
        if self.n1 == 0 || !self.power.is_finite() || self.power <= 0.0 {
            return bad("n1 and power must be positive");
        }
        if self.train_per_index == 0 || self.batch_size == 0 || self.train_sizes.contains(&0) {
            return bad("sample counts and batch size must be positive");
        }
        if !self.learning_rate.is_finite() || self.learning_rate <= 0.0 {
            return bad("learning rate must be positive");
        }
        if self.max_trials == 0 || self.bench_queries == 0 {
            return bad("trial and query counts must be positive");
        }
        if self.bench_repetitions < 5 {
            return bad("bench_repetitions must be at least 5");
        }
        Ok(())
    }

    /// Result-affecting settings as `key=value` lines in a fixed order.
    pub fn fingerprint(&self) -> Vec<String> {
        let join = |v: &[String]| v.join(",");
        let s = |v: &[u32]| join(&v.iter().map(u32::to_string).collect::<Vec<_>>());
        let u = |v: &[usize]| join(&v.iter().map(usize::to_string).collect::<Vec<_>>());
        let f = |v: &[f64]| join(&v.iter().map(f64::to_string).collect::<Vec<_>>());
        let mut lines = vec![
            format!("modemlab={}", env!("CARGO_PKG_VERSION")),
            format!("profile={}", self.profile.name()),
            format!("task={}", self.task),
            format!("k={}", self.k),
            format!("k_grid={}", s(&self.k_grid)),
            format!("snr_grid={}", f(&self.snr_grid)),
            format!("train_eb_n0_db={}", self.train_eb_n0_db),
            format!("train_per_snr={}", self.train_per_snr),
            format!("hidden={}", u(&self.hidden)),
            format!("n1={}", self.n1),
            format!("rate={}", self.rate),
            format!("power={}", self.power),
            format!("seed={}", self.seed),
            format!("codebook_seed={}", self.codebook_seed),
            format!(
                "codebook_path={}",
                self.codebook_path.as_ref().map(|p| p.display().to_string()).unwrap_or_default()
            ),
            format!("train_per_index={}", self.train_per_index),
            format!("epochs={}", self.epochs),
            format!("batch_size={}", self.batch_size),
            format!("learning_rate={}", self.learning_rate),
            format!("max_trials={}", self.max_trials),
            format!("min_trials={}", self.min_trials),
            format!("target_errors={}", self.target_errors),
            format!("bench_repetitions={}", self.bench_repetitions),
            format!("bench_queries={}", self.bench_queries),
            format!("bench_eb_n0_db={}", self.bench_eb_n0_db),
            format!("train_sizes={}", u(&self.train_sizes)),
            format!("generator={GENERATOR_NAME} v{GENERATOR_VERSION}"),
            "hidden_activation=relu output_activation=sigmoid loss=mse optimizer=adam".to_string(),
            "bit_labeling=natural-binary-msb-first".to_string(),
        ];
        lines.push(format!("calibration_demod={}", crate::channel::DEMOD_CALIBRATION));
        lines.push(format!("calibration_decode={}", crate::channel::DECODE_CALIBRATION));
        lines
    }

    pub fn sweep_settings(&self) -> SweepSettings {
        SweepSettings {
            max_trials: self.max_trials,
            min_trials: self.min_trials,
            target_errors: self.target_errors,
            ..SweepSettings::default()
        }
    }

    pub fn train_config(&self, per_index: usize) -> TrainConfig {
        TrainConfig {
            batch_size: self.batch_size,
            epochs: self.epochs,
            adam: AdamConfig {
                learning_rate: self.learning_rate,
                ..AdamConfig::default()
            },
            seed: self.seed,
            samples_per_index: per_index,
        }
    }

    fn codebook(&self, k: u32) -> Result<GaussianCodebook> {
        match &self.codebook_path {
            Some(path) => {
                let cb = GaussianCodebook::read_from(BufReader::new(File::open(path)?))?;
                if cb.k2() != k || cb.rate() != self.rate || cb.power() != self.power {
                    return Err(Error::config(format!(
                        "codebook file {} does not match k={k}, rate={}, power={}",
                        path.display(),
                        self.rate,
                        self.power
                    )));
                }
                Ok(cb)
            }
            None => GaussianCodebook::build(k, self.rate, self.power, self.codebook_seed),
        }
    }

    /// The transmit chain for `k` bits under this config's task.
    pub fn link(&self, k: u32) -> Result<Link> {
        match self.task {
            Task::Demod => Link::demod(&GamConstellation::build(k, self.power)?, self.n1),
            Task::Decode => Ok(Link::decode(&self.codebook(k)?)),
        }
    }

    fn net_dims(&self, link: &Link) -> Vec<usize> {
        let mut dims = vec![link.feature_dim()];
        dims.extend(&self.hidden);
        dims.push(link.k());
        dims
    }

    fn check_dataset_size(&self, link: &Link, per_index: usize) -> Result<()> {
        let rows = link.messages() as u128 * per_index as u128;
        check_capacity("training set", rows * (link.feature_dim() as u128 * 8 + link.k() as u128), self.memory_cap)
    }
}

/// Parses a flat `key = value` config file into ordered pairs.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>> {
    text.lines()
        .enumerate()
        .filter_map(|(i, raw)| {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                return None;
            }
            Some(
                line.split_once('=')
                    .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                    .ok_or_else(|| Error::config(format!("config line {} is not `key = value`", i + 1))),
            )
        })
        .collect()
}

pub fn load_config_file(path: &Path) -> Result<Vec<(String, String)>> {
    parse_config_text(&fs::read_to_string(path)?)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

/// Writes the constellation CSV (`m,re,im,radius,phase_rad`).
pub fn cmd_constellation(k1: u32, power: f64, out_path: &Path) -> Result<()> {
    let c = GamConstellation::build(k1, power)?;
    let mut out = create(out_path)?;
    c.write_csv(&mut out)?;
    out.flush()?;
    Ok(())
}

/// Writes the codebook for `cfg.k` to `out_path`.
pub fn cmd_codebook(cfg: &RunConfig, out_path: &Path) -> Result<()> {
    cfg.validate()?;
    let cb = GaussianCodebook::build(cfg.k, cfg.rate, cfg.power, cfg.codebook_seed)?;
    let mut out = create(out_path)?;
    cb.write_to(&mut out)?;
    Ok(())
}

/// Trains a freshly initialized network on `per_index` samples per message at `snr`.
pub fn train_network(cfg: &RunConfig, link: &Link, snr: SnrSpec, per_index: usize) -> Result<(Mlp, TrainReport)> {
    cfg.check_dataset_size(link, per_index)?;
    let data = dataset::generate(link, snr, per_index, cfg.seed, Split::Train, cfg.memory_cap)?;
    let mut net = Mlp::he_uniform(&cfg.net_dims(link), OutputActivation::Sigmoid, cfg.seed)?;
    let report = train(&mut net, &data, &cfg.train_config(per_index))?;
    Ok((net, report))
}

fn model_meta(cfg: &RunConfig, link: &Link, snr_db: f64, per_index: usize) -> BTreeMap<String, String> {
    let mut meta = BTreeMap::new();
    let mut put = |k: &str, v: String| {
        meta.insert(k.to_string(), v);
    };
    put("task", cfg.task.name().into());
    put("k", link.k().to_string());
    put("samples", link.samples().to_string());
    put("power", cfg.power.to_string());
    put("rate", cfg.rate.to_string());
    put("codebook_seed", cfg.codebook_seed.to_string());
    put("train_eb_n0_db", snr_db.to_string());
    put("seed", cfg.seed.to_string());
    put("train_per_index", per_index.to_string());
    put("epochs", cfg.epochs.to_string());
    put("batch_size", cfg.batch_size.to_string());
    put("learning_rate", cfg.learning_rate.to_string());
    put("profile", cfg.profile.name().into());
    put("generator", format!("{GENERATOR_NAME} v{GENERATOR_VERSION}"));
    meta
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub model_path: PathBuf,
    pub loss_path: PathBuf,
    pub report: TrainReport,
}

/// Trains at `train_eb_n0_db` and writes `model.mlp` plus `loss_history.csv`.
pub fn cmd_train(cfg: &RunConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    let link = cfg.link(cfg.k)?;
    let snr = SnrSpec::new(cfg.train_eb_n0_db)?;
    let (net, report) = train_network(cfg, &link, snr, cfg.train_per_index)?;

    let model_path = cfg.out_dir.join("model.mlp");
    let mut out = create(&model_path)?;
    write_model(&net, &model_meta(cfg, &link, snr.db(), cfg.train_per_index), &mut out)?;

    let loss_path = cfg.out_dir.join("loss_history.csv");
    let mut out = create(&loss_path)?;
    for line in cfg.fingerprint() {
        writeln!(out, "# {line}")?;
    }
    writeln!(out, "epoch,mean_batch_loss")?;
    for (i, l) in report.epoch_losses.iter().enumerate() {
        writeln!(out, "{},{:e}", i + 1, l)?;
    }
    out.flush()?;
    Ok(TrainOutcome {
        model_path,
        loss_path,
        report,
    })
}

fn load_model_for(cfg: &RunConfig, link: &Link, path: &Path) -> Result<Mlp> {
    let (net, manifest) = read_model(BufReader::new(File::open(path)?))?;
    let meta = |k: &str| manifest.meta.get(k).map(String::as_str).unwrap_or("");
    let expect = [
        ("task", cfg.task.name().to_string()),
        ("k", link.k().to_string()),
        ("samples", link.samples().to_string()),
        ("power", cfg.power.to_string()),
    ];
    for (key, want) in expect {
        if meta(key) != want {
            return Err(Error::config(format!(
                "model {} has {key}={}, run expects {want}",
                path.display(),
                meta(key)
            )));
        }
    }
    if cfg.task == Task::Decode && meta("codebook_seed") != cfg.codebook_seed.to_string() {
        return Err(Error::config("model was trained on a different codebook"));
    }
    if net.input_dim() != link.feature_dim() || net.output_dim() != link.k() {
        return Err(Error::config("model dims do not match the link"));
    }
    Ok(net)
}

fn snr_specs(grid: &[f64]) -> Result<Vec<SnrSpec>> {
    grid.iter().map(|&db| SnrSpec::new(db)).collect()
}

/// BER sweeps written to `ber.csv`. ML always runs; NN runs from `model`
/// (at `cfg.k`) or, with `train_per_snr`, from a network trained at each point.
pub fn cmd_evaluate(cfg: &RunConfig, model: Option<&Path>) -> Result<PathBuf> {
    cfg.validate()?;
    let snrs = snr_specs(&cfg.snr_grid)?;
    let settings = cfg.sweep_settings();
    let mut reports: Vec<BerReport> = Vec::new();
    let ks: Vec<u32> = if model.is_some() { vec![cfg.k] } else { cfg.k_grid.clone() };
    for k in ks {
        let link = cfg.link(k)?;
        if let Some(path) = model {
            let net = load_model_for(cfg, &link, path)?;
            reports.push(ber_sweep(&NeuralDetector::new(&net)?, &link, &snrs, &settings, cfg.seed)?);
        } else if cfg.train_per_snr {
            reports.push(per_snr_nn_report(cfg, &link, &snrs, cfg.train_per_index)?);
        }
        reports.push(ber_sweep(link.candidates(), &link, &snrs, &settings, cfg.seed)?);
    }
    let path = cfg.out_dir.join("ber.csv");
    let mut header = vec!["command=evaluate".to_string()];
    if let Some(m) = model {
        header.push(format!("model={}", m.display()));
    }
    header.extend(cfg.fingerprint());
    write_ber_csv(create(&path)?, &header, &reports)?;
    Ok(path)
}

/// One network per SNR point, each evaluated at its own training SNR.
fn per_snr_nn_report(cfg: &RunConfig, link: &Link, snrs: &[SnrSpec], per_index: usize) -> Result<BerReport> {
    let settings = cfg.sweep_settings();
    let mut points = Vec::with_capacity(snrs.len());
    for (i, &snr) in snrs.iter().enumerate() {
        let (net, _) = train_network(cfg, link, snr, per_index)?;
        let det = NeuralDetector::new(&net)?;
        points.push(sweep_point(&det, link, snr, i as u64, &settings, cfg.seed)?);
    }
    Ok(BerReport {
        task: link.task(),
        detector: "NN".into(),
        k: link.k(),
        points,
    })
}

/// Per-query timings for ML, NN and a no-op baseline at every k, written to `timing.csv`.
pub fn cmd_bench(cfg: &RunConfig) -> Result<(PathBuf, Vec<TimingReport>)> {
    cfg.validate()?;
    let snr = SnrSpec::new(cfg.bench_eb_n0_db)?;
    let mut header = vec!["command=bench".to_string()];
    let mut links = Vec::with_capacity(cfg.k_grid.len());
    for &k in &cfg.k_grid {
        let link = cfg.link(k)?;
        let queries = timing_queries(&link, snr, cfg.bench_queries, cfg.seed)?;
        // Forward cost does not depend on the weight values.
        let net = Mlp::he_uniform(&cfg.net_dims(&link), OutputActivation::Sigmoid, cfg.seed)?;
        let macs = mac_counts(cfg.task, &cfg.hidden, link.samples(), link.k())?;
        header.push(format!(
            "k={k} nn_ops_actual={} nn_ops_literal={} ml_candidates={}",
            macs.actual,
            macs.literal,
            link.messages()
        ));
        let noop = NoopDetector {
            input_dim: link.feature_dim(),
            bits: link.k(),
        };
        links.push((link, queries, net, noop));
    }
    let nns: Vec<NeuralDetector<'_>> = links.iter().map(|(_, _, net, _)| NeuralDetector::unchecked(net)).collect();
    let mut jobs = Vec::with_capacity(3 * links.len());
    for ((link, queries, _, noop), nn) in links.iter().zip(&nns) {
        let k = link.k();
        jobs.push(TimingJob { det: noop, k, queries });
        jobs.push(TimingJob { det: link.candidates(), k, queries });
        jobs.push(TimingJob { det: nn, k, queries });
    }
    let reports = time_interleaved(&jobs, cfg.bench_repetitions)?;
    header.extend(cfg.fingerprint());
    let path = cfg.out_dir.join("timing.csv");
    write_timing_csv(create(&path)?, &header, &reports)?;
    Ok((path, reports))
}

/// BER against training-set size at each SNR, written to `ber_vs_trainsize.csv`.
pub fn cmd_training_size_study(cfg: &RunConfig) -> Result<PathBuf> {
    cfg.validate()?;
    let snrs = snr_specs(&cfg.snr_grid)?;
    let link = cfg.link(cfg.k)?;
    let mut rows: Vec<(Option<usize>, BerReport)> = Vec::new();
    for &size in &cfg.train_sizes {
        rows.push((Some(size), per_snr_nn_report(cfg, &link, &snrs, size)?));
    }
    rows.push((None, ber_sweep(link.candidates(), &link, &snrs, &cfg.sweep_settings(), cfg.seed)?));

    let path = cfg.out_dir.join("ber_vs_trainsize.csv");
    let mut out = create(&path)?;
    writeln!(out, "# command=train-size-study")?;
    for line in cfg.fingerprint() {
        writeln!(out, "# {line}")?;
    }
    writeln!(out, "train_per_index,task,detector,k,eb_n0_db,errors,bits,ber,ci_lo,ci_hi")?;
    for (size, r) in &rows {
        for p in &r.points {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{:e},{:e},{:e}",
                size.map(|s| s.to_string()).unwrap_or_default(),
                r.task,
                r.detector,
                r.k,
                p.eb_n0_db,
                p.errors,
                p.bits,
                p.ber,
                p.ci_lo,
                p.ci_hi
            )?;
        }
    }
    out.flush()?;
    Ok(path)
}
