//! Command-line front end. [`run`] returns the process exit status so tests
//! can drive it in-process.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Deserialize;

use crate::clickstream::RobotPolicy;
use crate::cohort::{AttributionContext, CohortConfig, EntityMap};
use crate::corpus::{load_corpus, Corpus, JournalSet};
use crate::indicators::{
    AuxTable, CorrelationKind, Entity, IndicatorConfig, OverlapDenominator, DEFAULT_BASE_YEAR,
    DEFAULT_BASELINE_SAMPLES, DEFAULT_WINDOW_START,
};
use crate::ingest::{IngestStats, Ingestor};
use crate::pipeline::{cohort_csv, sets_jsonl, Analysis};
use crate::report::{fmt_opt, Csv};
use crate::synth::{default_robot_policy, CommunityModel, SyntheticCommunity};
use crate::verify::{verify, VerifyError};

/// Overrides the output directory when `--output-dir` is not given.
pub const OUTPUT_DIR_ENV: &str = "USAGEBIB_OUTPUT_DIR";

pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_MISMATCH: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "usagebib", version, about = "Research-activity indicators from scholarly clickstream logs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub options: Options,
}

#[derive(Debug, Default, clap::Args)]
pub struct Options {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Log files, read in order. Replaces the configured list.
    #[arg(long, global = true, num_args = 1..)]
    pub logs: Vec<PathBuf>,
    #[arg(long, global = true)]
    pub corpus: Option<PathBuf>,
    #[arg(long, global = true)]
    pub robot_policy: Option<PathBuf>,
    #[arg(long, global = true)]
    pub entity_map: Option<PathBuf>,
    /// Auxiliary series CSV (entity,kind,year,value).
    #[arg(long, global = true)]
    pub aux: Option<PathBuf>,
    /// Synthetic community model for `synth` and `verify`.
    #[arg(long, global = true)]
    pub model: Option<PathBuf>,
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    pub lower: Option<u64>,
    #[arg(long, global = true)]
    pub upper: Option<u64>,
    #[arg(long, global = true)]
    pub base_year: Option<i32>,
    #[arg(long, global = true, value_parser = ["cited", "downloaded", "union"])]
    pub overlap_denominator: Option<String>,
    /// Baseline seed; for `synth` and `verify` also the model seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Random samples averaged per baseline.
    #[arg(long, global = true)]
    pub samples: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Parse, filter and accumulate logs; report line counts.
    Ingest,
    /// Cohort sizes per year.
    Cohorts,
    /// Downloaded, published and cited sets per entity and year.
    Sets,
    /// Indicator reports per entity and year.
    Indicators,
    /// Write a synthetic community: logs, corpus, ground truth, aux series.
    Synth,
    /// Run a synthetic community through the pipeline and compare with its ground truth.
    Verify,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntityConfig {
    #[serde(default)]
    pub country: Option<String>,
    #[serde(default)]
    pub institute: Option<String>,
    pub affiliation: String,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JournalSetConfig {
    pub name: String,
    pub members: Vec<String>,
}

/// Contents of the `--config` file. Relative paths are resolved against the
/// file's directory.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub logs: Vec<PathBuf>,
    pub corpus: Option<PathBuf>,
    pub robot_policy: Option<PathBuf>,
    pub entity_map: Option<PathBuf>,
    pub aux: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    pub lower: u64,
    pub upper: u64,
    pub first_year: i32,
    pub last_year: i32,
    pub base_year: i32,
    pub window_start: i32,
    /// The first set is the one indicators use; all appear in cohort reports.
    pub journal_sets: Vec<JournalSetConfig>,
    /// Journal set the cohort download count is restricted to.
    pub restriction: Option<String>,
    pub overlap_denominator: OverlapDenominator,
    pub samples: usize,
    pub seed: u64,
    pub correlation: CorrelationKind,
    pub entities: Vec<EntityConfig>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let cohort = CohortConfig::default();
        Self {
            logs: Vec::new(),
            corpus: None,
            robot_policy: None,
            entity_map: None,
            aux: None,
            model: None,
            output_dir: None,
            lower: cohort.lower(),
            upper: cohort.upper(),
            first_year: 2005,
            last_year: 2015,
            base_year: DEFAULT_BASE_YEAR,
            window_start: DEFAULT_WINDOW_START,
            journal_sets: Vec::new(),
            restriction: None,
            overlap_denominator: OverlapDenominator::default(),
            samples: DEFAULT_BASELINE_SAMPLES,
            seed: 0,
            correlation: CorrelationKind::default(),
            entities: Vec::new(),
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn config(message: impl Into<String>) -> Self {
        Self { code: EXIT_CONFIG, message: message.into() }
    }

    fn data(message: impl ToString) -> Self {
        Self { code: EXIT_DATA, message: message.to_string() }
    }
}

type CliResult<T> = Result<T, CliError>;

fn resolve(base: &Path, path: PathBuf) -> PathBuf {
    if path.is_relative() {
        base.join(path)
    } else {
        path
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
        let mut config: RunConfig =
            toml::from_str(&text).map_err(|e| CliError::config(format!("config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        config.logs = config.logs.into_iter().map(|p| resolve(base, p)).collect();
        for p in [
            &mut config.corpus,
            &mut config.robot_policy,
            &mut config.entity_map,
            &mut config.aux,
            &mut config.model,
            &mut config.output_dir,
        ] {
            *p = p.take().map(|p| resolve(base, p));
        }
        Ok(config)
    }

    /// Applies command-line options on top of the file (or defaults).
    pub fn from_options(options: &Options) -> CliResult<Self> {
        let mut c = match &options.config {
            Some(path) => Self::load(path)?,
            None => Self::default(),
        };
        if !options.logs.is_empty() {
            c.logs = options.logs.clone();
        }
        let paths = [
            (&mut c.corpus, &options.corpus),
            (&mut c.robot_policy, &options.robot_policy),
            (&mut c.entity_map, &options.entity_map),
            (&mut c.aux, &options.aux),
            (&mut c.model, &options.model),
        ];
        for (slot, value) in paths {
            if value.is_some() {
                slot.clone_from(value);
            }
        }
        c.output_dir = options
            .output_dir
            .clone()
            .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
            .or(c.output_dir);
        c.lower = options.lower.unwrap_or(c.lower);
        c.upper = options.upper.unwrap_or(c.upper);
        c.base_year = options.base_year.unwrap_or(c.base_year);
        if let Some(d) = &options.overlap_denominator {
            c.overlap_denominator = d.parse().map_err(CliError::config)?;
        }
        c.seed = options.seed.unwrap_or(c.seed);
        c.samples = options.samples.unwrap_or(c.samples);
        c.validate()?;
        Ok(c)
    }

    fn validate(&self) -> CliResult<()> {
        if self.first_year > self.last_year {
            return Err(CliError::config(format!("empty year range {}..={}", self.first_year, self.last_year)));
        }
        CohortConfig::new(self.lower, self.upper).map_err(|e| CliError::config(e.to_string()))?;
        if self.samples == 0 {
            return Err(CliError::config("samples must be at least 1"));
        }
        self.journal_sets()?;
        self.entities()?;
        Ok(())
    }

    pub fn cohort(&self) -> CohortConfig {
        CohortConfig::new(self.lower, self.upper).expect("validated bounds")
    }

    pub fn journal_sets(&self) -> CliResult<Vec<JournalSet>> {
        if self.journal_sets.is_empty() {
            return Ok(vec![JournalSet::main_astronomy()]);
        }
        self.journal_sets
            .iter()
            .map(|s| JournalSet::new(s.name.clone(), s.members.iter().cloned()).map_err(|e| CliError::config(e.to_string())))
            .collect()
    }

    pub fn entities(&self) -> CliResult<Vec<Entity>> {
        self.entities
            .iter()
            .map(|e| match (&e.country, &e.institute) {
                (Some(code), None) => {
                    let entity = Entity::country(code, &e.affiliation);
                    if entity.id != *code {
                        return Err(CliError::config(format!("entity country {code:?} is not a two-letter code")));
                    }
                    Ok(entity)
                }
                (None, Some(id)) if !id.is_empty() => Ok(Entity::institute(id, &e.affiliation)),
                _ => Err(CliError::config(format!(
                    "entity {:?} needs exactly one of `country` or `institute`",
                    e.affiliation
                ))),
            })
            .collect()
    }

    pub fn indicator_config(&self) -> CliResult<IndicatorConfig> {
        Ok(IndicatorConfig {
            cohort: self.cohort(),
            restriction: self.restriction.clone(),
            journals: self.journal_sets()?.remove(0),
            window_start: self.window_start,
            denominator: self.overlap_denominator,
            n_samples: self.samples,
            seed: self.seed,
        })
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output_dir.clone().unwrap_or_else(|| PathBuf::from("."))
    }

    fn model(&self, options: &Options) -> CliResult<CommunityModel> {
        let mut model = match &self.model {
            Some(path) => {
                require_file(path, "model")?;
                CommunityModel::load(path).map_err(|e| CliError::config(e.to_string()))?
            }
            None => CommunityModel::default(),
        };
        if let Some(seed) = options.seed {
            model.seed = seed;
        }
        model.lower = options.lower.unwrap_or(model.lower);
        model.upper = options.upper.unwrap_or(model.upper);
        model.validate().map_err(|e| CliError::config(e.to_string()))?;
        Ok(model)
    }
}

fn require_file(path: &Path, what: &str) -> CliResult<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::config(format!("{what} file not found: {}", path.display())))
    }
}

/// Output files are collected first and written in order by one thread.
struct Output<'a> {
    dir: PathBuf,
    out: &'a mut dyn Write,
}

impl Output<'_> {
    fn write(&mut self, name: &str, contents: &str) -> CliResult<()> {
        fs::create_dir_all(&self.dir)
            .map_err(|e| CliError::config(format!("cannot create output directory {}: {e}", self.dir.display())))?;
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|e| CliError::data(format!("writing {}: {e}", path.display())))?;
        self.say(&format!("wrote {} ({} lines)", path.display(), contents.lines().count()))
    }

    fn say(&mut self, line: &str) -> CliResult<()> {
        writeln!(self.out, "{line}").map_err(CliError::data)
    }
}

struct Inputs {
    corpus: Corpus,
    journal_sets: Vec<JournalSet>,
    policy: RobotPolicy,
    entity_map: Option<EntityMap>,
}

impl Inputs {
    fn load(config: &RunConfig, need_corpus: bool) -> CliResult<Self> {
        for log in &config.logs {
            require_file(log, "log")?;
        }
        match (&config.corpus, need_corpus) {
            (Some(path), _) => require_file(path, "corpus")?,
            (None, true) => return Err(CliError::config("no corpus given (--corpus or `corpus` in the config)")),
            (None, false) => {}
        }
        for (path, what) in
            [(&config.robot_policy, "robot policy"), (&config.entity_map, "entity map"), (&config.aux, "aux series")]
        {
            if let Some(p) = path {
                require_file(p, what)?;
            }
        }
        let corpus = match &config.corpus {
            Some(path) => load_corpus(path).map_err(CliError::data)?,
            None => Corpus::default(),
        };
        let policy = match &config.robot_policy {
            Some(path) => RobotPolicy::load(path).map_err(CliError::data)?,
            None => RobotPolicy::default(),
        };
        let entity_map = config.entity_map.as_deref().map(EntityMap::load).transpose().map_err(CliError::data)?;
        Ok(Self { corpus, journal_sets: config.journal_sets()?, policy, entity_map })
    }

    fn ingest(&self, logs: &[PathBuf], out: &mut Output<'_>) -> CliResult<(crate::cohort::Accumulator, IngestStats)> {
        let ctx = AttributionContext {
            corpus: &self.corpus,
            journals: &self.journal_sets,
            entity_map: self.entity_map.as_ref(),
        };
        let mut ingestor = Ingestor::new(&self.policy, ctx);
        for path in logs {
            let file = fs::File::open(path).map_err(|e| CliError::data(format!("reading {}: {e}", path.display())))?;
            ingestor.read_from(io::BufReader::new(file)).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
        }
        let (acc, stats) = ingestor.finish().map_err(CliError::data)?;
        out.say(&format!(
            "ingest: {} lines, {} skipped, {} robot records, {} accepted, {} user-years",
            stats.lines,
            stats.skipped,
            stats.robot_records,
            stats.accepted,
            acc.stats().count()
        ))?;
        Ok((acc, stats))
    }
}

fn aux_table(config: &RunConfig) -> CliResult<Option<AuxTable>> {
    let Some(path) = &config.aux else { return Ok(None) };
    let file = fs::File::open(path).map_err(|e| CliError::data(format!("reading {}: {e}", path.display())))?;
    AuxTable::from_csv(file).map(Some).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

fn execute(command: Command, options: &Options, out: &mut dyn Write) -> CliResult<()> {
    let config = RunConfig::from_options(options)?;
    let mut out = Output { dir: config.output_dir(), out };
    let years = config.first_year..=config.last_year;
    match command {
        Command::Ingest => {
            let inputs = Inputs::load(&config, false)?;
            let (acc, stats) = inputs.ingest(&config.logs, &mut out)?;
            let mut csv = Csv::new(&["year", "users", "interactions", "downloads"]);
            for year in acc.years() {
                let (mut users, mut interactions, mut downloads) = (0u64, 0u64, 0u64);
                for s in acc.stats().filter(|s| s.year == year) {
                    users += 1;
                    interactions += s.interactions;
                    downloads += s.downloads_total;
                }
                csv.values(&[&year, &users, &interactions, &downloads]);
            }
            let mut totals = Csv::new(&["lines", "skipped", "robot_records", "accepted", "unidentified_records"]);
            totals.values(&[&stats.lines, &stats.skipped, &stats.robot_records, &stats.accepted, &acc.unidentified_records()]);
            out.write("ingest_totals.csv", totals.as_str())?;
            out.write("ingest_years.csv", csv.as_str())
        }
        Command::Cohorts => {
            let inputs = Inputs::load(&config, false)?;
            let (acc, _) = inputs.ingest(&config.logs, &mut out)?;
            let csv = cohort_csv(&acc, years, &config.cohort(), &inputs.journal_sets);
            out.write("fig2_cohorts.csv", csv.as_str())
        }
        Command::Sets | Command::Indicators => {
            let entities = config.entities()?;
            if entities.is_empty() {
                return Err(CliError::config("no entities configured (`[[entities]]` in the config)"));
            }
            let inputs = Inputs::load(&config, true)?;
            let aux = aux_table(&config)?;
            let (acc, _) = inputs.ingest(&config.logs, &mut out)?;
            let indicator_config = config.indicator_config()?;
            let analysis = Analysis {
                corpus: &inputs.corpus,
                acc: &acc,
                entities: &entities,
                years,
                config: &indicator_config,
                entity_map: inputs.entity_map.as_ref(),
                aux: aux.as_ref(),
                correlation: config.correlation,
                base_year: config.base_year,
            };
            let results = analysis.entity_years().map_err(CliError::data)?;
            if command == Command::Sets {
                return out.write("sets.jsonl", &sets_jsonl(&results));
            }
            for (name, contents) in analysis.reports(&results) {
                out.write(&name, &contents)?;
            }
            Ok(())
        }
        Command::Synth => {
            let model = config.model(options)?;
            let community = SyntheticCommunity::new(&model);
            let dir = out.dir.clone();
            fs::create_dir_all(&dir)
                .map_err(|e| CliError::config(format!("cannot create output directory {}: {e}", dir.display())))?;
            let create = |name: &str| -> CliResult<BufWriter<fs::File>> {
                let path = dir.join(name);
                fs::File::create(&path)
                    .map(BufWriter::new)
                    .map_err(|e| CliError::data(format!("writing {}: {e}", path.display())))
            };
            let io_err = |e: io::Error| CliError::data(format!("writing synthetic data: {e}"));
            let mut w = create("logs.tsv")?;
            let summary = community.write_logs(&mut w).map_err(io_err)?;
            w.flush().map_err(io_err)?;
            let mut w = create("corpus.jsonl")?;
            community.write_corpus(&mut w).map_err(io_err)?;
            w.flush().map_err(io_err)?;
            let mut w = create("truth.jsonl")?;
            community.ground_truth().write_jsonl(&mut w).map_err(io_err)?;
            w.flush().map_err(io_err)?;
            out.say(&format!(
                "synth: {} log lines ({} robot, {} unidentified), {} publications",
                summary.lines,
                summary.robot_lines,
                summary.unidentified_lines,
                community.publications().len()
            ))?;
            out.write("aux.csv", &community.ground_truth().aux_table().to_csv())?;
            out.write("robots.txt", &default_robot_policy().to_text())?;
            out.write("run.toml", &synth_run_config(&model))
        }
        Command::Verify => {
            let model = config.model(options)?;
            let indicator_config = config.indicator_config()?;
            let report = verify(&model, &indicator_config).map_err(|e| match e {
                VerifyError::Bounds(e) => CliError::config(e.to_string()),
                other => CliError::data(other),
            })?;
            out.say(&format!(
                "verify: {} log lines, {} robot records filtered, {} entity-years, {} cohort years",
                report.log.lines, report.ingest.robot_records, report.entity_years, report.cohort_years
            ))?;
            out.say(&format!(
                "frequent users vs first authors: planted r={} recovered r={}",
                fmt_opt(report.planted_r),
                fmt_opt(report.recovered_r)
            ))?;
            out.say(&format!(
                "overlap above random baseline in {}/{} entity-years (mean {} vs {})",
                report.overlap_above_baseline,
                report.overlap_years,
                fmt_opt(report.mean_overlap),
                fmt_opt(report.mean_baseline)
            ))?;
            if let Some(m) = &report.mismatch {
                return Err(CliError { code: EXIT_MISMATCH, message: m.to_string() });
            }
            if !report.r_within_tolerance() {
                return Err(CliError { code: EXIT_MISMATCH, message: "recovered correlation outside tolerance".into() });
            }
            out.say("verify: ok")
        }
    }
}

/// Run configuration pointing at the files `synth` writes.
fn synth_run_config(model: &CommunityModel) -> String {
    let mut s = String::from(
        "logs = [\"logs.tsv\"]\ncorpus = \"corpus.jsonl\"\nrobot_policy = \"robots.txt\"\naux = \"aux.csv\"\noutput_dir = \"reports\"\n",
    );
    s.push_str(&format!(
        "first_year = {}\nlast_year = {}\nbase_year = {}\nlower = {}\nupper = {}\nseed = {}\n",
        model.first_year, model.last_year, model.first_year, model.lower, model.upper, model.seed
    ));
    for e in &model.entities {
        s.push_str(&format!(
            "\n[[entities]]\ncountry = {}\naffiliation = {}\n",
            toml::Value::String(e.country.clone()),
            toml::Value::String(e.affiliation.clone())
        ));
    }
    s
}

/// Parses `args` (program name first) and runs; returns the exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
                return EXIT_CONFIG;
            }
            let _ = write!(out, "{}", e.render());
            return 0;
        }
    };
    match execute(cli.command, &cli.options, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message);
            e.code
        }
    }
}
