//! Staged batch pipeline: ingest, sample, panel, metrics, instruments,
//! estimate and report. Every stage reads the previous stage's checkpoint
//! files from the output directory, so stages can be rerun one at a time.
//! A manifest records the hash and row count of every file each stage read
//! and wrote.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::econometrics::{analysis_rows, estimate, AnalysisRow, Estimator, RegressionFit, RegressionSpec};
use crate::error::{Error, Result};
use crate::ingest::{
    load_weather, parse_coupons, parse_markets, parse_tickets, parse_weather, read_table, reject_duplicate_days,
    write_rejects, write_table, AirportStateRecord, AirportStationMap, AirportStationRecord, AirportStates,
    AirportWeather, CouponRecord, CpiRecord, CpiTable, MarketRecord, OwnershipRecord, Parsed, Reject, Table,
    TicketRecord, WeatherObservation,
};
use crate::instruments::{build_instruments, InstrumentConfig, InstrumentVector, COMP_WEATHER, OWN_WEATHER};
use crate::metrics::{box_plot_quantiles, compute_metrics, summary_stats, MarketPeriodMetrics};
use crate::panel::{
    market_structure, CarrierMarketPeriod, MarketStructure, PathAirports, RegionalNetwork, RegionalUsageShare,
};
use crate::registry::OwnershipRegistry;
use crate::report;
use crate::sample::{build_sample, ObservationRow, SampleConfig, SampleReport, TicketObservation};
use crate::synth::SynthBundle;
use crate::types::Airport;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputPaths {
    pub coupons: PathBuf,
    pub tickets: PathBuf,
    pub markets: PathBuf,
    pub cpi: PathBuf,
    /// Ownership registry; the bundled one when absent.
    pub ownership: Option<PathBuf>,
    /// Extra airport-to-state rows added to the bundled table.
    pub airport_states: Option<PathBuf>,
    pub stations: Option<PathBuf>,
    pub weather: Option<PathBuf>,
}

impl InputPaths {
    /// The file names `SynthBundle::write_to` produces.
    pub fn bundle(dir: &Path) -> Self {
        InputPaths {
            coupons: dir.join("coupons.csv"),
            tickets: dir.join("tickets.csv"),
            markets: dir.join("markets.csv"),
            cpi: dir.join("cpi.csv"),
            ownership: Some(dir.join("ownership.csv")),
            airport_states: Some(dir.join("airport_states.csv")),
            stations: Some(dir.join("stations.csv")),
            weather: Some(dir.join("weather.csv")),
        }
    }

    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for p in [&mut self.coupons, &mut self.tickets, &mut self.markets, &mut self.cpi] {
            fix(p);
        }
        for p in [&mut self.ownership, &mut self.airport_states, &mut self.stations, &mut self.weather]
            .into_iter()
            .flatten()
        {
            fix(p);
        }
    }

    fn required(&self) -> Vec<&Path> {
        let mut v: Vec<&Path> = vec![&self.coupons, &self.tickets, &self.markets, &self.cpi];
        v.extend([&self.ownership, &self.airport_states, &self.stations].into_iter().flatten().map(|p| p.as_path()));
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub inputs: InputPaths,
    pub out: PathBuf,
    pub seed: u64,
    /// Worker threads; all cores when absent.
    pub threads: Option<usize>,
    pub sample: SampleConfig,
    pub instruments: InstrumentConfig,
    pub specs: Vec<RegressionSpec>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            inputs: InputPaths::default(),
            out: PathBuf::from("out"),
            seed: 0,
            threads: None,
            sample: SampleConfig::default(),
            instruments: InstrumentConfig::default(),
            specs: Vec::new(),
        }
    }
}

/// Price regression on regional use and multimarket contact.
pub fn baseline_spec() -> RegressionSpec {
    RegressionSpec::new("baseline", &["csc", "regional_share", "mmc"])
}

impl RunConfig {
    /// Reads a TOML file. Relative paths are taken from the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: RunConfig =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.inputs.resolve(base);
        if cfg.out.is_relative() {
            cfg.out = base.join(&cfg.out);
        }
        Ok(cfg)
    }

    pub fn for_bundle(dir: &Path, out: &Path) -> Self {
        RunConfig {
            inputs: InputPaths::bundle(dir),
            out: out.to_path_buf(),
            ..RunConfig::default()
        }
    }

    pub fn specs(&self) -> Vec<RegressionSpec> {
        if self.specs.is_empty() {
            vec![baseline_spec()]
        } else {
            self.specs.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for p in self.inputs.required() {
            if !p.is_file() {
                return Err(Error::MissingFile(p.to_path_buf()));
            }
        }
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be at least 1".into()));
        }
        let mut names = BTreeSet::new();
        for s in self.specs() {
            s.validate()?;
            if !names.insert(s.name.clone()) {
                return Err(Error::Config(format!("specification `{}` is listed twice", s.name)));
            }
        }
        fs::create_dir_all(&self.out).map_err(|e| Error::io(&self.out, e))?;
        Ok(())
    }

    fn needs_weather(&self) -> bool {
        self.specs().iter().any(|s| {
            s.estimator == Estimator::ControlFunction
                && s.endogenous.iter().any(|v| {
                    s.instruments_for(v)
                        .map(|cols| cols.iter().any(|c| OWN_WEATHER.contains(&c.as_str()) || COMP_WEATHER.contains(&c.as_str())))
                        .unwrap_or(false)
                })
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Ingest,
    Sample,
    Panel,
    Metrics,
    Instruments,
    Estimate,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 7] = [
        Stage::Ingest,
        Stage::Sample,
        Stage::Panel,
        Stage::Metrics,
        Stage::Instruments,
        Stage::Estimate,
        Stage::Report,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Sample => "build-sample",
            Stage::Panel => "panel",
            Stage::Metrics => "metrics",
            Stage::Instruments => "instruments",
            Stage::Estimate => "estimate",
            Stage::Report => "report",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub stage: String,
    /// `input` or `output`.
    pub role: String,
    pub file: String,
    pub sha256: String,
    pub rows: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    /// Stages in completion order, with `failed` appended on error.
    pub stages: Vec<String>,
    pub failed: Option<String>,
    pub entries: Vec<ManifestEntry>,
}

pub const MANIFEST: &str = "manifest.json";

impl Manifest {
    pub fn load(out: &Path) -> Result<Option<Self>> {
        let path = out.join(MANIFEST);
        if !path.exists() {
            return Ok(None);
        }
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        serde_json::from_str(&text)
            .map(Some)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    fn save(&self, out: &Path) -> Result<()> {
        let path = out.join(MANIFEST);
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
    }

    fn forget(&mut self, stage: &str) {
        self.stages.retain(|s| s != stage);
        self.entries.retain(|e| e.stage != stage);
    }
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Data rows: lines after the header for CSV, lines otherwise.
fn count_rows(path: &Path) -> Result<usize> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let lines = bytes.split(|&b| b == b'\n').filter(|l| !l.is_empty()).count();
    let csv = path.extension().is_some_and(|e| e == "csv");
    Ok(if csv { lines.saturating_sub(1) } else { lines })
}

/// Files one stage touched.
struct Files<'a> {
    out: &'a Path,
    read: Vec<PathBuf>,
    written: Vec<PathBuf>,
}

impl<'a> Files<'a> {
    fn new(out: &'a Path) -> Self {
        Files {
            out,
            read: Vec::new(),
            written: Vec::new(),
        }
    }

    fn input(&mut self, path: &Path) -> PathBuf {
        self.read.push(path.to_path_buf());
        path.to_path_buf()
    }

    /// A checkpoint written by an earlier stage; rejects mean corruption.
    fn checkpoint<T: Table>(&mut self, name: &str) -> Result<Vec<T>> {
        let path = self.input(&self.out.join(name));
        let parsed: Parsed<T> = read_table(&path)?;
        if let Some(r) = parsed.rejects.first() {
            return Err(Error::Config(format!("{} line {}: {}", path.display(), r.line, r.reason)));
        }
        Ok(parsed.records)
    }

    fn has(&self, name: &str) -> bool {
        self.out.join(name).is_file()
    }

    fn target(&mut self, name: &str) -> PathBuf {
        let path = self.out.join(name);
        self.written.push(path.clone());
        path
    }

    fn write<T: Table>(&mut self, name: &str, rows: &[T]) -> Result<()> {
        let path = self.target(name);
        write_table(&path, rows)
    }

    fn write_rejects(&mut self, name: &str, rejects: &[Reject]) -> Result<()> {
        let path = self.target(name);
        write_rejects(&path, rejects)
    }

    fn write_text(&mut self, name: &str, text: &str) -> Result<()> {
        let path = self.target(name);
        fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }

    /// Failed stage: keep what was written under a `.partial` name.
    fn mark_partial(&self) {
        for p in &self.written {
            if p.exists() {
                let mut name = p.as_os_str().to_owned();
                name.push(".partial");
                let _ = fs::rename(p, PathBuf::from(name));
            }
        }
    }

    fn entries(&self, stage: &str) -> Result<Vec<ManifestEntry>> {
        let mut out = Vec::new();
        let mut seen = BTreeSet::new();
        for (role, paths) in [("input", &self.read), ("output", &self.written)] {
            for p in paths {
                if !seen.insert((role, p.clone())) {
                    continue;
                }
                let file = p
                    .strip_prefix(self.out)
                    .ok()
                    .or_else(|| p.file_name().map(Path::new))
                    .unwrap_or(p)
                    .display()
                    .to_string();
                out.push(ManifestEntry {
                    stage: stage.to_string(),
                    role: role.to_string(),
                    file,
                    sha256: sha256_file(p)?,
                    rows: count_rows(p)?,
                });
            }
        }
        Ok(out)
    }
}

fn parsed_or_reject<T: Table>(files: &mut Files, parsed: Parsed<T>, name: &str, rejects: &str) -> Result<()> {
    if !parsed.rejects.is_empty() {
        log::warn!("{name}: {} of {} rows rejected", parsed.rejects.len(), parsed.rows_in);
    }
    files.write(name, &parsed.records)?;
    files.write_rejects(rejects, &parsed.rejects)
}

fn strict<T: Table>(path: &Path) -> Result<Vec<T>> {
    let parsed: Parsed<T> = read_table(path)?;
    if let Some(r) = parsed.rejects.first() {
        return Err(Error::Config(format!("{} line {}: {}", path.display(), r.line, r.reason)));
    }
    Ok(parsed.records)
}

fn ingest(cfg: &RunConfig, files: &mut Files) -> Result<()> {
    let i = &cfg.inputs;
    let p = files.input(&i.coupons);
    parsed_or_reject(files, parse_coupons(&p)?, "coupons.csv", "coupons.rejects.csv")?;
    let p = files.input(&i.tickets);
    parsed_or_reject(files, parse_tickets(&p)?, "tickets.csv", "tickets.rejects.csv")?;
    let p = files.input(&i.markets);
    parsed_or_reject(files, parse_markets(&p)?, "markets.csv", "markets.rejects.csv")?;

    let p = files.input(&i.cpi);
    let cpi: Vec<CpiRecord> = strict(&p)?;
    files.write("cpi.csv", &CpiTable::from_records(&cpi).records())?;

    let registry = match &i.ownership {
        Some(p) => OwnershipRegistry::load(&files.input(p))?,
        None => OwnershipRegistry::builtin(),
    };
    let owners: Vec<OwnershipRecord> = registry.records().cloned().collect();
    files.write("ownership.csv", &owners)?;

    let mut states = AirportStates::builtin();
    if let Some(p) = &i.airport_states {
        let extra: Vec<AirportStateRecord> = strict(&files.input(p))?;
        states.extend(&extra);
    }
    files.write("airport_states.csv", &states.records())?;

    if let Some(p) = &i.stations {
        let map = crate::ingest::parse_station_map(&files.input(p))?;
        files.write("stations.csv", &map.records())?;
    }
    if let Some(p) = &i.weather {
        if p.is_file() {
            let parsed = reject_duplicate_days(parse_weather(&files.input(p))?);
            parsed_or_reject(files, parsed, "weather.csv", "weather.rejects.csv")?;
        } else {
            log::warn!("weather file {} not found; weather instruments unavailable", p.display());
        }
    }
    Ok(())
}

fn sample_stage(cfg: &RunConfig, files: &mut Files) -> Result<()> {
    let coupons: Vec<CouponRecord> = files.checkpoint("coupons.csv")?;
    let tickets: Vec<TicketRecord> = files.checkpoint("tickets.csv")?;
    let markets: Vec<MarketRecord> = files.checkpoint("markets.csv")?;
    let cpi: Vec<CpiRecord> = files.checkpoint("cpi.csv")?;
    let states: Vec<AirportStateRecord> = files.checkpoint("airport_states.csv")?;
    let (obs, report) = build_sample(
        &coupons,
        &tickets,
        &markets,
        &AirportStates::from_records(&states),
        &CpiTable::from_records(&cpi),
        &cfg.sample,
    )?;
    log_sample(&report);
    let rows: Vec<ObservationRow> = obs.iter().map(ObservationRow::from).collect();
    files.write("sample.csv", &rows)?;
    files.write("drops.csv", &report.dropped)?;
    files.write_rejects("sample.rejects.csv", &report.rejects)
}

fn log_sample(report: &SampleReport) {
    log::info!(
        "sample: {} itineraries in, {} observations out",
        report.itineraries_in,
        report.observations_out
    );
    for (reason, n) in report.counts() {
        log::info!("  dropped {n}: {reason}");
    }
}

fn registry_from(files: &mut Files) -> Result<OwnershipRegistry> {
    let owners: Vec<OwnershipRecord> = files.checkpoint("ownership.csv")?;
    OwnershipRegistry::from_records(owners)
}

fn panel_stage(files: &mut Files) -> Result<()> {
    let rows: Vec<ObservationRow> = files.checkpoint("sample.csv")?;
    let obs = rows
        .into_iter()
        .map(TicketObservation::try_from)
        .collect::<std::result::Result<Vec<_>, String>>()
        .map_err(|e| Error::Config(format!("sample.csv: {e}")))?;
    let registry = registry_from(files)?;
    let ms = market_structure(&obs, &registry)?;
    files.write("panel.csv", &ms.cells)?;
    files.write("usage_shares.csv", &ms.usage)?;
    files.write("paths.csv", &ms.paths)?;
    files.write("regional_networks.csv", &ms.regional_networks)
}

fn metrics_stage(files: &mut Files) -> Result<()> {
    let cells: Vec<CarrierMarketPeriod> = files.checkpoint("panel.csv")?;
    let usage: Vec<RegionalUsageShare> = files.checkpoint("usage_shares.csv")?;
    let metrics = compute_metrics(&cells, &usage);
    files.write("metrics.csv", &metrics)?;
    files.write("summary.csv", &summary_stats(&cells, &metrics))?;
    files.write("box_plot.csv", &box_plot_quantiles(&metrics))
}

fn weather_from(files: &mut Files, airports: &[Airport]) -> Result<Option<AirportWeather>> {
    if !files.has("weather.csv") || !files.has("stations.csv") {
        return Ok(None);
    }
    let stations: Vec<AirportStationRecord> = files.checkpoint("stations.csv")?;
    let weather: Vec<WeatherObservation> = files.checkpoint("weather.csv")?;
    let map = AirportStationMap::from_records(&stations)?;
    Ok(Some(load_weather(&weather, &map, airports)))
}

fn panel_airports(paths: &[PathAirports]) -> Vec<Airport> {
    let set: BTreeSet<Airport> = paths.iter().flat_map(|p| p.set()).collect();
    set.into_iter().collect()
}

fn instruments_stage(cfg: &RunConfig, files: &mut Files) -> Result<()> {
    let cells: Vec<CarrierMarketPeriod> = files.checkpoint("panel.csv")?;
    let usage: Vec<RegionalUsageShare> = files.checkpoint("usage_shares.csv")?;
    let paths: Vec<PathAirports> = files.checkpoint("paths.csv")?;
    let networks: Vec<RegionalNetwork> = files.checkpoint("regional_networks.csv")?;
    let weather = match weather_from(files, &panel_airports(&paths))? {
        Some(w) => w,
        None if cfg.needs_weather() => {
            let missing = cfg.inputs.weather.clone().unwrap_or_else(|| PathBuf::from("weather.csv"));
            return Err(Error::MissingFile(missing));
        }
        None => AirportWeather::default(),
    };
    let (ivs, report) = build_instruments(&cells, &usage, &paths, &networks, &weather, &cfg.instruments);
    log::info!(
        "instruments: {} cells, {} without own weather, {} without competitor weather, {} monopoly",
        report.cells,
        report.missing_own_weather,
        report.missing_competitor_weather,
        report.monopoly_cells
    );
    files.write("instruments.csv", &ivs)
}

fn estimate_stage(cfg: &RunConfig, files: &mut Files) -> Result<()> {
    let cells: Vec<CarrierMarketPeriod> = files.checkpoint("panel.csv")?;
    let metrics: Vec<MarketPeriodMetrics> = files.checkpoint("metrics.csv")?;
    let ivs: Vec<InstrumentVector> = if files.has("instruments.csv") {
        files.checkpoint("instruments.csv")?
    } else {
        Vec::new()
    };
    let rows = analysis_rows(&cells, &metrics, &ivs)?;
    let fits = estimate_all(&cfg.specs(), &rows, cfg.seed)?;
    let json = serde_json::to_string_pretty(&fits).expect("fits serialize");
    files.write_text("fits.json", &(json + "\n"))?;
    files.write("coefficients.csv", &report::coefficient_rows(&fits))?;
    files.write("first_stages.csv", &report::first_stage_rows(&fits))?;
    files.write("effects.csv", &report::effect_rows(&fits))
}

pub fn estimate_all(specs: &[RegressionSpec], rows: &[AnalysisRow], seed: u64) -> Result<Vec<RegressionFit>> {
    specs
        .iter()
        .map(|s| {
            log::info!("estimating `{}`", s.name);
            estimate(s, rows, seed).map_err(|e| match e {
                Error::Spec(m) => Error::Spec(format!("{}: {m}", s.name)),
                other => other,
            })
        })
        .collect()
}

pub fn read_fits(path: &Path) -> Result<Vec<RegressionFit>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn report_stage(files: &mut Files) -> Result<()> {
    let path = files.input(&files.out.join("fits.json"));
    if !path.is_file() {
        return Err(Error::MissingFile(path));
    }
    let fits = read_fits(&path)?;
    files.write_text("report.txt", &report::render_text(&fits))
}

fn run_stage(cfg: &RunConfig, stage: Stage, files: &mut Files) -> Result<()> {
    match stage {
        Stage::Ingest => ingest(cfg, files),
        Stage::Sample => sample_stage(cfg, files),
        Stage::Panel => panel_stage(files),
        Stage::Metrics => metrics_stage(files),
        Stage::Instruments => instruments_stage(cfg, files),
        Stage::Estimate => estimate_stage(cfg, files),
        Stage::Report => report_stage(files),
    }
}

fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Runs the given stages in order and updates the manifest. A full run
/// starts a fresh manifest; a partial run replaces only its stages.
pub fn run_stages(cfg: &RunConfig, stages: &[Stage]) -> Result<Manifest> {
    cfg.validate()?;
    let full = stages == Stage::ALL;
    let mut manifest = if full {
        Manifest::default()
    } else {
        Manifest::load(&cfg.out)?.unwrap_or_default()
    };
    manifest.seed = cfg.seed;
    manifest.failed = None;
    with_threads(cfg.threads, || {
        for &stage in stages {
            let name = stage.as_str();
            manifest.forget(name);
            let mut files = Files::new(&cfg.out);
            log::info!("stage {name}");
            let result = run_stage(cfg, stage, &mut files).and_then(|_| files.entries(name));
            match result {
                Ok(entries) => {
                    manifest.entries.extend(entries);
                    manifest.stages.push(name.to_string());
                }
                Err(e) => {
                    files.mark_partial();
                    manifest.failed = Some(name.to_string());
                    manifest.save(&cfg.out)?;
                    return Err(e.in_stage(name));
                }
            }
        }
        manifest.save(&cfg.out)?;
        Ok(manifest)
    })?
}

pub fn run(cfg: &RunConfig) -> Result<Manifest> {
    run_stages(cfg, &Stage::ALL)
}

/// Stage outputs held in memory.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub observations: Vec<TicketObservation>,
    pub sample: SampleReport,
    pub structure: MarketStructure,
    pub metrics: Vec<MarketPeriodMetrics>,
    pub instruments: Vec<InstrumentVector>,
    pub rows: Vec<AnalysisRow>,
}

/// Every stage up to the regression rows, without touching disk.
pub fn analyze_bundle(bundle: &SynthBundle, sample: &SampleConfig, instruments: &InstrumentConfig) -> Result<Analysis> {
    let mut states = AirportStates::builtin();
    states.extend(&bundle.airport_states);
    let cpi = CpiTable::from_records(&bundle.cpi);
    let (observations, report) = build_sample(&bundle.coupons, &bundle.tickets, &bundle.markets, &states, &cpi, sample)
        .map_err(|e| e.in_stage(Stage::Sample.as_str()))?;
    let registry = OwnershipRegistry::from_records(bundle.ownership.clone())?;
    let structure = market_structure(&observations, &registry).map_err(|e| e.in_stage(Stage::Panel.as_str()))?;
    let metrics = compute_metrics(&structure.cells, &structure.usage);
    let map = AirportStationMap::from_records(&bundle.stations)?;
    let weather = load_weather(&bundle.weather, &map, &panel_airports(&structure.paths));
    let (ivs, _) = build_instruments(
        &structure.cells,
        &structure.usage,
        &structure.paths,
        &structure.regional_networks,
        &weather,
        instruments,
    );
    let rows = analysis_rows(&structure.cells, &metrics, &ivs)?;
    Ok(Analysis {
        observations,
        sample: report,
        structure,
        metrics,
        instruments: ivs,
        rows,
    })
}
