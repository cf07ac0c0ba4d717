//! Sequence-recovery metrics and benchmark harnesses.

use std::fmt::{self, Write as _};

use rayon::prelude::*;

use crate::alphabet;
use crate::denoise::{build_profile, graft_top1};
use crate::diffusion::{sample_traced, Denoiser, NoiseSchedule, SamplerOptions, UniformDenoiser};
use crate::error::{Error, Result};
use crate::retrieval::FragmentDatabase;

/// Samples designed per query by default.
pub const DEFAULT_SAMPLES: usize = 8;

pub const REPORT_HEADER: &str = "query_id\tmethod\tk\tseed\tsample_idx\taar\tkl_mean";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Graft,
    Diffusion,
    Custom,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Graft => "graft",
            Method::Diffusion => "diffusion",
            Method::Custom => "custom",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalRecord {
    pub query_id: String,
    pub true_sequence: String,
    pub designed_sequence: String,
    pub aar: f64,
    pub method: Method,
}

impl EvalRecord {
    pub fn new(query_id: &str, true_sequence: &str, designed_sequence: &str, method: Method) -> Result<Self> {
        Ok(EvalRecord {
            query_id: query_id.to_string(),
            true_sequence: true_sequence.to_string(),
            designed_sequence: designed_sequence.to_string(),
            aar: aar(true_sequence, designed_sequence)?,
            method,
        })
    }
}

/// Amino-acid recovery: the fraction of positions with identical letters.
pub fn aar(a: &str, b: &str) -> Result<f64> {
    let (a, b): (Vec<char>, Vec<char>) = (a.chars().collect(), b.chars().collect());
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::Shape(format!(
            "recovery needs equal non-empty lengths, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let same = a.iter().zip(&b).filter(|(x, y)| x == y).count();
    Ok(same as f64 / a.len() as f64)
}

/// Mixes a base seed, a query id and a sample index into an independent
/// generator seed, so results do not depend on evaluation order.
pub fn derive_seed(seed: u64, query_id: &str, sample_idx: usize) -> u64 {
    // FNV-1a over the id, then a splitmix64 finalizer.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in query_id.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut z = seed
        .wrapping_add(h.rotate_left(17))
        .wrapping_add((sample_idx as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledQuery {
    pub query_id: String,
    pub true_sequence: String,
    /// Masked framework sequence; carried for downstream joins, unused by the profile denoiser.
    pub framework: Option<String>,
}

#[derive(Debug, Clone)]
pub struct BenchmarkConfig {
    pub k: usize,
    pub pseudocount: f64,
    pub blend_weight: f64,
    pub schedule: NoiseSchedule,
    pub seeds: Vec<u64>,
    /// Samples per seed.
    pub num_samples: usize,
    pub sampler: SamplerOptions,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub query_id: String,
    pub method: Method,
    pub k: usize,
    pub seed: Option<u64>,
    pub sample_idx: usize,
    pub designed_sequence: String,
    pub aar: f64,
    pub kl_mean: Option<f64>,
    /// Reserved for externally computed metrics (self-consistency RMSD,
    /// plausibility, binding energy); never filled here.
    pub sc_rmsd: Option<f64>,
    pub plausibility: Option<f64>,
    pub ddg: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuerySummary {
    pub query_id: String,
    /// Why the query was skipped, if it was.
    pub skipped: Option<String>,
    pub graft_aar: Option<f64>,
    pub diffusion_mean_aar: Option<f64>,
    pub diffusion_max_aar: Option<f64>,
    pub kl_mean: Option<f64>,
    /// The diffusion ran with the uniform fallback because no usable fragments existed.
    pub uniform_fallback: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkReport {
    pub rows: Vec<ReportRow>,
    pub queries: Vec<QuerySummary>,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

fn fmt_opt(v: Option<f64>) -> String {
    match v {
        None => "NA".into(),
        Some(x) if x.is_infinite() => "inf".into(),
        Some(x) => format!("{x:.6}"),
    }
}

impl BenchmarkReport {
    pub fn mean_graft_aar(&self) -> Option<f64> {
        mean(self.queries.iter().filter_map(|q| q.graft_aar))
    }

    pub fn mean_diffusion_aar(&self) -> Option<f64> {
        mean(self.queries.iter().filter_map(|q| q.diffusion_mean_aar))
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from(REPORT_HEADER);
        out.push('\n');
        for r in &self.rows {
            let seed = r.seed.map_or("NA".to_string(), |s| s.to_string());
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{:.6}\t{}",
                r.query_id,
                r.method,
                r.k,
                seed,
                r.sample_idx,
                r.aar,
                fmt_opt(r.kl_mean)
            );
        }
        out
    }
}

fn evaluate_query(db: &FragmentDatabase, q: &LabeledQuery, cfg: &BenchmarkConfig) -> Result<(Vec<ReportRow>, QuerySummary)> {
    let mut summary = QuerySummary {
        query_id: q.query_id.clone(),
        skipped: None,
        graft_aar: None,
        diffusion_mean_aar: None,
        diffusion_max_aar: None,
        kl_mean: None,
        uniform_fallback: false,
    };
    let Some(matches) = db.entry(&q.query_id) else {
        summary.skipped = Some("missing database entry".into());
        return Ok((vec![], summary));
    };
    let Some(truth) = alphabet::encode(&q.true_sequence).filter(|t| !t.is_empty()) else {
        summary.skipped = Some("true sequence has non-standard letters".into());
        return Ok((vec![], summary));
    };
    let len = truth.len();
    let row = |method, seed, sample_idx, designed: String, aar, kl_mean| ReportRow {
        query_id: q.query_id.clone(),
        method,
        k: cfg.k,
        seed,
        sample_idx,
        designed_sequence: designed,
        aar,
        kl_mean,
        sc_rmsd: None,
        plausibility: None,
        ddg: None,
    };
    let mut rows = Vec::new();

    if let Ok(grafted) = graft_top1(matches, len) {
        let a = aar(&q.true_sequence, &grafted)?;
        summary.graft_aar = Some(a);
        rows.push(row(Method::Graft, None, 0, grafted, a, None));
    }

    let profile = match build_profile(matches, cfg.k, cfg.pseudocount, len) {
        Ok((p, _)) => Some(p.with_blend(cfg.blend_weight, None)?),
        Err(Error::NoData(_)) => None,
        Err(e) => return Err(e),
    };
    summary.uniform_fallback = profile.is_none();
    let denoiser: &dyn Denoiser = match &profile {
        Some(p) => p,
        None => &UniformDenoiser,
    };

    let mut aars = Vec::new();
    let mut kls = Vec::new();
    for &seed in &cfg.seeds {
        for idx in 0..cfg.num_samples {
            let outcome = sample_traced(
                len,
                &cfg.schedule,
                denoiser,
                derive_seed(seed, &q.query_id, idx),
                cfg.sampler,
                Some(&truth),
            )?;
            let designed = alphabet::decode(&outcome.sequence);
            let a = aar(&q.true_sequence, &designed)?;
            let kl = outcome.mean_kl();
            aars.push(a);
            kls.extend(kl);
            rows.push(row(Method::Diffusion, Some(seed), idx, designed, a, kl));
        }
    }
    summary.diffusion_mean_aar = mean(aars.iter().copied());
    summary.diffusion_max_aar = aars.iter().copied().reduce(f64::max);
    summary.kl_mean = mean(kls.into_iter());
    Ok((rows, summary))
}

/// Grafting and diffusion recovery for every labeled query. Queries are
/// evaluated in parallel; the report keeps input order.
pub fn run_benchmark(db: &FragmentDatabase, queries: &[LabeledQuery], cfg: &BenchmarkConfig) -> Result<BenchmarkReport> {
    if cfg.k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    let results: Vec<Result<(Vec<ReportRow>, QuerySummary)>> =
        queries.par_iter().map(|q| evaluate_query(db, q, cfg)).collect();
    let mut report = BenchmarkReport {
        rows: Vec::new(),
        queries: Vec::new(),
    };
    for r in results {
        let (rows, summary) = r?;
        if let Some(why) = &summary.skipped {
            log::warn!("query {} skipped: {why}", summary.query_id);
        }
        report.rows.extend(rows);
        report.queries.push(summary);
    }
    Ok(report)
}

/// Mean diffusion recovery for each `k`, with all other settings shared.
pub fn k_sweep(
    db: &FragmentDatabase,
    queries: &[LabeledQuery],
    cfg: &BenchmarkConfig,
    ks: &[usize],
) -> Result<Vec<(usize, Option<f64>)>> {
    ks.iter()
        .map(|&k| {
            let cfg = BenchmarkConfig { k, ..cfg.clone() };
            Ok((k, run_benchmark(db, queries, &cfg)?.mean_diffusion_aar()))
        })
        .collect()
}

pub fn k_sweep_tsv(table: &[(usize, Option<f64>)]) -> String {
    let mut out = String::from("k\tmean_aar\n");
    for (k, a) in table {
        let _ = writeln!(out, "{k}\t{}", fmt_opt(*a));
    }
    out
}
