//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error
//! (unreadable, unparsable or corrupt input), 3 contract violation.

use std::ffi::OsString;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Deserialize;

use crate::alphabet::{self, MASK, NUM_AA};
use crate::denoise::{self, build_profile, usable_matches};
use crate::diffusion::{
    make_schedule, sample_traced, Denoiser, FinalDecode, NoiseSchedule, SamplerOptions, ScheduleKind,
    ScheduleParams, UniformDenoiser, DEFAULT_STEPS,
};
use crate::error::{Error, Result};
use crate::evalx::{self, derive_seed, BenchmarkConfig, LabeledQuery};
use crate::retrieval::{
    self, build_database, load_database, save_database, DatabaseQuery, FragmentDatabase, SearchConfig,
    SourceLocation, ThresholdRule, DEFAULT_MULTISEG_CAP,
};
use crate::structmodel::{extract_motif, parse_backbone, BackboneStructure, CdrSpan, FormatHint};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_CONTRACT: i32 = 3;

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Domain(_) | Error::Range(_) | Error::Shape(_) | Error::Underdetermined { .. } => {
            EXIT_USAGE
        }
        Error::Parse { .. }
        | Error::EmptyStructure
        | Error::Version { .. }
        | Error::Corruption(_)
        | Error::NoData(_)
        | Error::Io { .. } => EXIT_DATA,
        Error::Contract(_) => EXIT_CONTRACT,
    }
}

/// Experiment configuration file. Every field is optional; command-line flags win.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub corpus_dir: Option<PathBuf>,
    pub db_dir: Option<PathBuf>,
    pub threshold_rule: Option<ThresholdRule>,
    pub diffusion: DiffusionConfig,
    pub denoise: DenoiseConfig,
    pub threads: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiffusionConfig {
    #[serde(rename = "T")]
    pub steps: Option<usize>,
    pub schedule_kind: Option<ScheduleKind>,
    pub stochastic_final: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DenoiseConfig {
    pub k: Option<usize>,
    pub lambda: Option<f64>,
    pub blend_weight: Option<f64>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: Config =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(rule) = &self.threshold_rule {
            rule.validate()?;
        }
        if self.diffusion.steps == Some(0) {
            return Err(Error::Config("diffusion.T must be at least 1".into()));
        }
        if let Some(k) = self.denoise.k {
            check_k(k)?;
        }
        if let Some(l) = self.denoise.lambda {
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::Config(format!("denoise.lambda must be positive, got {l}")));
            }
        }
        if let Some(w) = self.denoise.blend_weight {
            if !(0.0..=1.0).contains(&w) {
                return Err(Error::Config(format!("denoise.blend_weight must be in [0, 1], got {w}")));
            }
        }
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be at least 1".into()));
        }
        Ok(())
    }
}

fn check_k(k: usize) -> Result<()> {
    if !(1..=denoise::MAX_K).contains(&k) {
        return Err(Error::Config(format!("k must be in 1..={}, got {k}", denoise::MAX_K)));
    }
    Ok(())
}

#[derive(Debug, Parser)]
#[command(name = "cdrlike", version, about = "Retrieve CDR-like fragments and design loop sequences by retrieval-conditioned diffusion")]
struct Cli {
    /// JSON configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads (default: all logical processors).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// error, warn, info, debug or trace.
    #[arg(long, global = true, default_value = "info")]
    log_level: String,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Search every query loop against a corpus and write a fragment database.
    BuildDb {
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// TSV with columns query_id, pdb, chain, start_index, length.
        #[arg(long)]
        queries: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Per-segment candidate cap for multi-segment queries; 0 disables it.
        #[arg(long)]
        cap: Option<usize>,
    },
    /// Search one loop against the corpus a database was built from.
    Query {
        #[arg(long)]
        db: Option<PathBuf>,
        #[arg(long)]
        pdb: PathBuf,
        #[arg(long)]
        chain: char,
        #[arg(long)]
        start: usize,
        #[arg(long)]
        len: usize,
        #[arg(long)]
        topk: Option<usize>,
        /// Overrides the corpus directory recorded in the database.
        #[arg(long)]
        corpus: Option<PathBuf>,
    },
    /// Print the sequence of the best-ranked fragment.
    Graft {
        #[arg(long)]
        db: Option<PathBuf>,
        #[arg(long)]
        query_id: String,
        #[arg(long)]
        len: Option<usize>,
    },
    /// Sample loop sequences with the retrieval-profile denoiser.
    Sample {
        #[arg(long)]
        db: Option<PathBuf>,
        #[arg(long)]
        query_id: String,
        #[arg(long)]
        len: usize,
        #[command(flatten)]
        diffusion: DiffusionArgs,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = evalx::DEFAULT_SAMPLES)]
        num_samples: usize,
        /// Known sequence to score each step's KL against.
        #[arg(long)]
        reference: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the pseudo multiple alignment for a query as FASTA.
    ExportMsa {
        #[arg(long)]
        db: Option<PathBuf>,
        #[arg(long)]
        query_id: String,
        /// Masked framework sequence ('?' marks the loop), plain text or FASTA.
        #[arg(long)]
        framework: PathBuf,
        #[arg(long)]
        k: Option<usize>,
        /// Loop sequence for the first row; drawn uniformly when absent.
        #[arg(long)]
        noisy: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Grafting and diffusion recovery over labeled queries.
    Eval {
        #[command(flatten)]
        bench: BenchArgs,
        #[arg(long)]
        k: Option<usize>,
    },
    /// Mean diffusion recovery as a function of k.
    KSweep {
        #[command(flatten)]
        bench: BenchArgs,
        /// Comma-separated k values.
        #[arg(long, value_delimiter = ',', default_values_t = vec![1usize, 5, 15])]
        ks: Vec<usize>,
    },
    /// Print the version.
    Version,
}

#[derive(Debug, Args)]
struct DiffusionArgs {
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    schedule: Option<ScheduleKind>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    blend: Option<f64>,
    /// Sample the last step instead of taking the argmax.
    #[arg(long)]
    stochastic_final: bool,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long)]
    db: Option<PathBuf>,
    /// TSV with columns query_id, true_sequence and optionally framework.
    #[arg(long)]
    labels: PathBuf,
    /// Samples per seed.
    #[arg(long, default_value_t = evalx::DEFAULT_SAMPLES)]
    samples: usize,
    /// Seed list: `a..b` (inclusive) or comma-separated values.
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    schedule: Option<ScheduleKind>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    blend: Option<f64>,
    #[arg(long)]
    stochastic_final: bool,
    #[arg(long)]
    out: PathBuf,
}

impl clap::ValueEnum for ScheduleKind {
    fn value_variants<'a>() -> &'a [Self] {
        &[ScheduleKind::Cosine, ScheduleKind::Linear]
    }

    fn to_possible_value(&self) -> Option<clap::builder::PossibleValue> {
        Some(clap::builder::PossibleValue::new(match self {
            ScheduleKind::Cosine => "cosine",
            ScheduleKind::Linear => "linear",
        }))
    }
}

fn init_logging(level: &str) {
    let filter = level.parse().unwrap_or(log::LevelFilter::Info);
    let _ = env_logger::Builder::new()
        .filter_level(filter)
        .parse_default_env()
        .format(|buf, record| {
            writeln!(
                buf,
                "{} {} {} {}",
                buf.timestamp_millis(),
                record.level(),
                record.target(),
                record.args()
            )
        })
        .try_init();
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    init_logging(&cli.log_level);
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            log::error!("{e}");
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

struct Ctx {
    config: Config,
}

impl Ctx {
    fn db_dir(&self, flag: Option<PathBuf>) -> Result<PathBuf> {
        flag.or_else(|| self.config.db_dir.clone())
            .ok_or_else(|| Error::Config("--db is required (or db_dir in the config)".into()))
    }

    fn seed(&self, flag: Option<u64>) -> u64 {
        flag.or(self.config.seed).unwrap_or(0)
    }

    fn k(&self, flag: Option<usize>) -> Result<usize> {
        let k = flag.or(self.config.denoise.k).unwrap_or(denoise::DEFAULT_K);
        check_k(k)?;
        Ok(k)
    }

    fn lambda(&self, flag: Option<f64>) -> Result<f64> {
        let l = flag.or(self.config.denoise.lambda).unwrap_or(denoise::DEFAULT_PSEUDOCOUNT);
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::Config(format!("lambda must be positive, got {l}")));
        }
        Ok(l)
    }

    fn blend(&self, flag: Option<f64>) -> Result<f64> {
        let w = flag.or(self.config.denoise.blend_weight).unwrap_or(denoise::DEFAULT_BLEND_WEIGHT);
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::Config(format!("blend weight must be in [0, 1], got {w}")));
        }
        Ok(w)
    }

    fn schedule(&self, steps: Option<usize>, kind: Option<ScheduleKind>) -> Result<NoiseSchedule> {
        let steps = steps.or(self.config.diffusion.steps).unwrap_or(DEFAULT_STEPS);
        let kind = kind.or(self.config.diffusion.schedule_kind).unwrap_or_default();
        make_schedule(steps, kind, &ScheduleParams::default()).map_err(|e| match e {
            Error::Domain(m) => Error::Config(m),
            other => other,
        })
    }

    fn sampler(&self, stochastic_final: bool) -> SamplerOptions {
        let stochastic = stochastic_final || self.config.diffusion.stochastic_final.unwrap_or(false);
        SamplerOptions {
            final_decode: if stochastic { FinalDecode::Sample } else { FinalDecode::Argmax },
        }
    }
}

fn execute(cli: Cli) -> Result<()> {
    let config = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    let threads = cli.threads.or(config.threads);
    if threads == Some(0) {
        return Err(Error::Config("--threads must be at least 1".into()));
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let ctx = Ctx { config };
    pool.install(|| dispatch(&ctx, cli.command))
}

fn dispatch(ctx: &Ctx, command: Command) -> Result<()> {
    match command {
        Command::Version => {
            println!("{}", env!("CARGO_PKG_VERSION"));
            Ok(())
        }
        Command::BuildDb { corpus, queries, out, cap } => {
            let corpus_dir = corpus
                .or_else(|| ctx.config.corpus_dir.clone())
                .ok_or_else(|| Error::Config("--corpus is required (or corpus_dir in the config)".into()))?;
            let rule = ctx.config.threshold_rule.unwrap_or_default();
            let cap = match cap.unwrap_or(DEFAULT_MULTISEG_CAP) {
                0 => None,
                c => Some(c),
            };
            let structures = load_corpus(&corpus_dir)?;
            let qs = read_queries(&queries)?;
            info!("building database: {} queries over {} structures", qs.len(), structures.len());
            let mut db = build_database(&qs, &structures, rule, cap)?;
            db.manifest.corpus_dir = Some(corpus_dir.to_string_lossy().into_owned());
            save_database(&db, &out)
        }
        Command::Query { db, pdb, chain, start, len, topk, corpus } => {
            let db = open_db(&ctx.db_dir(db)?)?;
            let corpus_dir = corpus
                .or_else(|| ctx.config.corpus_dir.clone())
                .or_else(|| db.manifest.corpus_dir.as_ref().map(PathBuf::from))
                .ok_or_else(|| Error::Config("database records no corpus; pass --corpus".into()))?;
            let structure = read_structure(&pdb)?;
            let motif = extract_motif(&structure, &[CdrSpan::new(chain, start, len)])?;
            let structures = load_corpus(&corpus_dir)?;
            let cfg = SearchConfig {
                rmsd_threshold: db.manifest.threshold_rule.threshold(len)?,
                exclude_source: Some(SourceLocation {
                    source_id: structure.id.clone(),
                    chain_id: chain,
                    start_index: start,
                }),
                max_results: topk,
                ..SearchConfig::new(1.0)
            };
            let hits = retrieval::search(&motif, &structures, &cfg)?;
            let view = FragmentDatabase::from_entries(
                [("query".to_string(), hits)].into_iter().collect(),
                db.manifest.threshold_rule,
                structures.len(),
                None,
            );
            print!("{}", view.fragments_tsv());
            Ok(())
        }
        Command::Graft { db, query_id, len } => {
            let db = open_db(&ctx.db_dir(db)?)?;
            let matches = entry(&db, &query_id)?;
            let len = len
                .or_else(|| matches.first().map(|m| m.length))
                .ok_or_else(|| Error::NoData(format!("query {query_id} has no fragments")))?;
            println!("{}", denoise::graft_top1(matches, len)?);
            Ok(())
        }
        Command::Sample { db, query_id, len, diffusion, seed, num_samples, reference, out } => {
            let db = open_db(&ctx.db_dir(db)?)?;
            let matches = entry(&db, &query_id)?;
            let schedule = ctx.schedule(diffusion.steps, diffusion.schedule)?;
            let k = ctx.k(diffusion.k)?;
            let lambda = ctx.lambda(diffusion.lambda)?;
            let blend = ctx.blend(diffusion.blend)?;
            let opts = ctx.sampler(diffusion.stochastic_final);
            let seed = ctx.seed(seed);
            if len == 0 {
                return Err(Error::Config("--len must be at least 1".into()));
            }
            let reference = match reference {
                Some(r) => {
                    let enc = alphabet::encode(&r)
                        .ok_or_else(|| Error::Config(format!("reference {r:?} has non-standard letters")))?;
                    if enc.len() != len {
                        return Err(Error::Config(format!("reference length {} differs from --len {len}", enc.len())));
                    }
                    Some(enc)
                }
                None => None,
            };
            let profile = match build_profile(matches, k, lambda, len) {
                Ok((p, stats)) => {
                    info!(
                        "profile from {} fragments ({} wrong length, {} non-standard)",
                        stats.used, stats.wrong_length, stats.invalid_letters
                    );
                    Some(p.with_blend(blend, None)?)
                }
                Err(Error::NoData(m)) => {
                    warn!("{m}; sampling with the uniform denoiser");
                    None
                }
                Err(e) => return Err(e),
            };
            let denoiser: &dyn Denoiser = match &profile {
                Some(p) => p,
                None => &UniformDenoiser,
            };
            let outcomes: Vec<_> = (0..num_samples)
                .into_par_iter()
                .map(|i| {
                    sample_traced(len, &schedule, denoiser, derive_seed(seed, &query_id, i), opts, reference.as_deref())
                })
                .collect::<Result<_>>()?;
            let mut tsv = String::from("sample_idx\tsequence\tmean_kl_trace\n");
            for (i, o) in outcomes.iter().enumerate() {
                let kl = match o.mean_kl() {
                    None => "NA".to_string(),
                    Some(v) if v.is_infinite() => "inf".to_string(),
                    Some(v) => format!("{v:.6}"),
                };
                tsv.push_str(&format!("{i}\t{}\t{kl}\n", alphabet::decode(&o.sequence)));
            }
            fs::write(&out, tsv).map_err(|e| Error::io(&out, e))
        }
        Command::ExportMsa { db, query_id, framework, k, noisy, seed, out } => {
            let db = open_db(&ctx.db_dir(db)?)?;
            let matches = entry(&db, &query_id)?;
            let k = ctx.k(k)?;
            let framework = read_framework(&framework)?;
            let m = framework.chars().filter(|&c| c == MASK).count();
            if m == 0 {
                return Err(Error::Config("framework has no masked positions".into()));
            }
            let noisy = match noisy {
                Some(n) => n,
                None => {
                    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(ctx.seed(seed), &query_id, 0));
                    (0..m).map(|_| alphabet::letter(rng.random_range(0..NUM_AA))).collect()
                }
            };
            let (matrix, stats) = usable_matches(matches, k, m);
            if stats.wrong_length + stats.invalid_letters > 0 {
                info!(
                    "skipped {} fragments of the wrong length and {} with non-standard letters",
                    stats.wrong_length, stats.invalid_letters
                );
            }
            let msa = denoise::build_pseudo_msa(&framework, &noisy, &matrix)?;
            denoise::export_msa(&msa, &out)
        }
        Command::Eval { bench, k } => {
            let k = ctx.k(k)?;
            let (db, labels, cfg, out) = bench_setup(ctx, bench, k)?;
            let report = evalx::run_benchmark(&db, &labels, &cfg)?;
            if let Some(g) = report.mean_graft_aar() {
                info!("mean graft recovery {g:.4}");
            }
            if let Some(d) = report.mean_diffusion_aar() {
                info!("mean diffusion recovery {d:.4}");
            }
            fs::write(&out, report.to_tsv()).map_err(|e| Error::io(&out, e))
        }
        Command::KSweep { bench, ks } => {
            for &k in &ks {
                check_k(k)?;
            }
            let (db, labels, cfg, out) = bench_setup(ctx, bench, ks.first().copied().unwrap_or(1))?;
            let table = evalx::k_sweep(&db, &labels, &cfg, &ks)?;
            fs::write(&out, evalx::k_sweep_tsv(&table)).map_err(|e| Error::io(&out, e))
        }
    }
}

fn bench_setup(ctx: &Ctx, b: BenchArgs, k: usize) -> Result<(FragmentDatabase, Vec<LabeledQuery>, BenchmarkConfig, PathBuf)> {
    let db = open_db(&ctx.db_dir(b.db)?)?;
    let labels = read_labels(&b.labels)?;
    let seeds = match b.seeds {
        Some(s) => parse_seeds(&s)?,
        None => vec![ctx.seed(None)],
    };
    let cfg = BenchmarkConfig {
        k,
        pseudocount: ctx.lambda(b.lambda)?,
        blend_weight: ctx.blend(b.blend)?,
        schedule: ctx.schedule(b.steps, b.schedule)?,
        seeds,
        num_samples: b.samples,
        sampler: ctx.sampler(b.stochastic_final),
    };
    Ok((db, labels, cfg, b.out))
}

/// `a..b` (inclusive) or a comma-separated list.
pub fn parse_seeds(raw: &str) -> Result<Vec<u64>> {
    let bad = || Error::Config(format!("bad seed list {raw:?}"));
    if let Some((a, b)) = raw.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
        if b < a {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    raw.split(',').map(|s| s.trim().parse().map_err(|_| bad())).collect()
}

fn open_db(dir: &Path) -> Result<FragmentDatabase> {
    load_database(dir)
}

fn entry<'a>(db: &'a FragmentDatabase, query_id: &str) -> Result<&'a [retrieval::FragmentMatch]> {
    db.entry(query_id)
        .ok_or_else(|| Error::NoData(format!("query {query_id:?} not in database")))
}

fn structure_id(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.to_string_lossy().into_owned())
}

pub fn read_structure(path: &Path) -> Result<BackboneStructure> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_backbone(&bytes, &structure_id(path), FormatHint::Pdb).map_err(|e| match e {
        Error::Parse { line, message } => Error::Parse {
            line,
            message: format!("{}: {message}", path.display()),
        },
        Error::EmptyStructure => Error::NoData(format!("{}: no alpha-carbon atoms", path.display())),
        other => other,
    })
}

/// Every `.pdb` / `.ent` file in `dir`, sorted by file name.
pub fn load_corpus(dir: &Path) -> Result<Vec<BackboneStructure>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p.extension()
                    .and_then(|x| x.to_str())
                    .is_some_and(|x| x.eq_ignore_ascii_case("pdb") || x.eq_ignore_ascii_case("ent"))
        })
        .collect();
    paths.sort();
    paths.par_iter().map(|p| read_structure(p)).collect()
}

fn tsv_rows(path: &Path, header: &[&str]) -> Result<Vec<(usize, Vec<String>)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'));
    let (hl, head) = lines.next().ok_or_else(|| Error::Parse {
        line: 1,
        message: format!("{}: empty file", path.display()),
    })?;
    let cols: Vec<&str> = head.split('\t').collect();
    if cols.len() < header.len() || cols[..header.len()] != *header {
        return Err(Error::Parse {
            line: hl,
            message: format!("{}: expected header {}", path.display(), header.join("\\t")),
        });
    }
    Ok(lines
        .map(|(i, l)| (i, l.split('\t').map(str::to_string).collect()))
        .collect())
}

/// Reads a build-db query table. Multi-segment queries list comma-separated
/// chains, starts and lengths. PDB paths are relative to the table's directory.
pub fn read_queries(path: &Path) -> Result<Vec<DatabaseQuery>> {
    let base = path.parent().unwrap_or(Path::new("."));
    let mut out = Vec::new();
    for (line, cols) in tsv_rows(path, &["query_id", "pdb", "chain", "start_index", "length"])? {
        let bad = |m: String| Error::Parse {
            line,
            message: format!("{}: {m}", path.display()),
        };
        if cols.len() < 5 {
            return Err(bad(format!("expected 5 columns, found {}", cols.len())));
        }
        let chains: Vec<char> = cols[2]
            .split(',')
            .map(|c| {
                let c = c.trim();
                let mut it = c.chars();
                match (it.next(), it.next()) {
                    (Some(ch), None) => Ok(ch),
                    _ => Err(bad(format!("bad chain {c:?}"))),
                }
            })
            .collect::<Result<_>>()?;
        let nums = |raw: &str, what: &str| -> Result<Vec<usize>> {
            raw.split(',')
                .map(|v| v.trim().parse().map_err(|_| bad(format!("bad {what} {v:?}"))))
                .collect()
        };
        let starts = nums(&cols[3], "start_index")?;
        let lens = nums(&cols[4], "length")?;
        if chains.len() != starts.len() || starts.len() != lens.len() {
            return Err(bad("chain, start_index and length lists differ in size".into()));
        }
        let pdb = base.join(&cols[1]);
        let structure = read_structure(&pdb)?;
        let spans: Vec<CdrSpan> = (0..chains.len())
            .map(|i| CdrSpan::new(chains[i], starts[i], lens[i]))
            .collect();
        let motif = extract_motif(&structure, &spans)?;
        out.push(DatabaseQuery {
            id: cols[0].clone(),
            motif,
            origin: Some(SourceLocation {
                source_id: structure.id.clone(),
                chain_id: chains[0],
                start_index: starts[0],
            }),
        });
    }
    Ok(out)
}

pub fn read_labels(path: &Path) -> Result<Vec<LabeledQuery>> {
    tsv_rows(path, &["query_id", "true_sequence"])?
        .into_iter()
        .map(|(line, cols)| {
            if cols.len() < 2 {
                return Err(Error::Parse {
                    line,
                    message: format!("{}: expected at least 2 columns", path.display()),
                });
            }
            Ok(LabeledQuery {
                query_id: cols[0].clone(),
                true_sequence: cols[1].trim().to_string(),
                framework: cols.get(2).map(|s| s.trim().to_string()).filter(|s| !s.is_empty()),
            })
        })
        .collect()
}

fn read_framework(path: &Path) -> Result<String> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut seq = String::new();
    let mut records = 0;
    for line in text.lines().map(str::trim) {
        if line.starts_with('>') {
            records += 1;
            if records > 1 {
                break;
            }
            continue;
        }
        seq.push_str(line);
    }
    if seq.is_empty() {
        return Err(Error::NoData(format!("{}: no framework sequence", path.display())));
    }
    Ok(seq)
}
