mod common;

use std::collections::BTreeMap;

use cdrlike::denoise::graft_top1;
use cdrlike::diffusion::{make_schedule, SamplerOptions, ScheduleKind, ScheduleParams};
use cdrlike::evalx::{aar, k_sweep, k_sweep_tsv, run_benchmark, BenchmarkConfig, LabeledQuery, Method};
use cdrlike::retrieval::{build_database, DatabaseQuery, FragmentDatabase, FragmentMatch, SourceLocation, ThresholdRule};
use cdrlike::structmodel::{extract_motif, CdrSpan};
use common::*;
use rand::SeedableRng;

fn cfg(k: usize, seeds: Vec<u64>, samples: usize) -> BenchmarkConfig {
    BenchmarkConfig {
        k,
        pseudocount: 0.1,
        blend_weight: 1.0,
        schedule: make_schedule(50, ScheduleKind::Cosine, &ScheduleParams::default()).unwrap(),
        seeds,
        num_samples: samples,
        sampler: SamplerOptions::default(),
    }
}

fn fragment(seq: &str, rmsd: f64, start: usize) -> FragmentMatch {
    FragmentMatch {
        source_id: "src".into(),
        chain_id: 'A',
        start_index: start,
        length: seq.len(),
        rmsd,
        sequence: seq.into(),
        extra_segments: vec![],
    }
}

fn labeled(id: &str, seq: &str) -> LabeledQuery {
    LabeledQuery { query_id: id.into(), true_sequence: seq.into(), framework: None }
}

#[test]
fn exact_copies_graft_perfectly() {
    let mut rng = TestRng::seed_from_u64(8);
    let mut labels = Vec::new();
    let mut queries = Vec::new();
    let mut corpus = Vec::new();
    for q in 0..3 {
        let fam = family_corpus(&mut rng, 6, 0.3, true);
        let mut structures = fam.structures;
        for s in &mut structures {
            s.id = format!("q{q}_{}", s.id);
        }
        corpus.extend(structures);
        let motif = extract_motif(&fam.query, &[CdrSpan::new('H', fam.query_start, FAMILY_MOTIF_LEN)]).unwrap();
        let id = format!("loop{q}");
        queries.push(DatabaseQuery { id: id.clone(), motif, origin: None });
        labels.push(labeled(&id, &fam.modal));
    }
    let db = build_database(&queries, &corpus, ThresholdRule::default(), None).unwrap();
    let report = run_benchmark(&db, &labels, &cfg(15, vec![0], 2)).unwrap();
    assert_eq!(report.queries.len(), 3);
    for summary in &report.queries {
        assert_eq!(summary.graft_aar, Some(1.0), "{summary:?}");
    }
    for row in report.rows.iter().filter(|r| r.method == Method::Graft) {
        let label = labels.iter().find(|l| l.query_id == row.query_id).unwrap();
        let grafted = graft_top1(db.entry(&row.query_id).unwrap(), label.true_sequence.len()).unwrap();
        assert_eq!(row.aar, aar(&grafted, &label.true_sequence).unwrap());
    }
    let once = k_sweep(&db, &labels, &cfg(15, vec![0], 2), &[1]).unwrap();
    assert_eq!(once, vec![(1, Some(1.0))]);
}

#[test]
fn corrupting_consensus_behind_the_top_hit() {
    let truth = "ACDEFGHIKL";
    let decoy = "WYWYWYWYWY";
    let mut rows = vec![fragment(truth, 0.05, 0)];
    for i in 1..15 {
        rows.push(fragment(decoy, 0.1 + i as f64 * 0.01, i * 20));
    }
    let db = FragmentDatabase::from_entries(
        BTreeMap::from([("q".to_string(), rows)]),
        ThresholdRule::default(),
        1,
        None,
    );
    let table = k_sweep(&db, &[labeled("q", truth)], &cfg(1, vec![0, 1], 4), &[1, 5, 15]).unwrap();
    let at = |k| table.iter().find(|r| r.0 == k).unwrap().1.unwrap();
    assert!(at(1) > at(15), "{table:?}");
    assert_eq!(at(1), 1.0);
    let again = k_sweep(&db, &[labeled("q", truth)], &cfg(1, vec![0, 1], 4), &[1, 5, 15]).unwrap();
    assert_eq!(k_sweep_tsv(&table), k_sweep_tsv(&again));
    assert_eq!(k_sweep_tsv(&table).lines().count(), 4);
}

#[test]
fn missing_entries_are_flagged_not_fatal() {
    let db = FragmentDatabase::from_entries(BTreeMap::new(), ThresholdRule::default(), 0, None);
    let report = run_benchmark(&db, &[labeled("absent", "ACDE")], &cfg(15, vec![0], 2)).unwrap();
    assert!(report.rows.is_empty());
    assert!(report.queries[0].skipped.is_some());
    let empty = run_benchmark(&db, &[], &cfg(15, vec![0], 2)).unwrap();
    assert!(empty.rows.is_empty() && empty.queries.is_empty());
}

#[test]
fn no_usable_fragments_falls_back_to_uniform() {
    let db = FragmentDatabase::from_entries(
        BTreeMap::from([("q".to_string(), vec![fragment("ACDEFG", 0.1, 0)])]),
        ThresholdRule::default(),
        1,
        None,
    );
    let report = run_benchmark(&db, &[labeled("q", "ACDE")], &cfg(15, vec![0], 3)).unwrap();
    assert!(report.queries[0].uniform_fallback);
    assert_eq!(report.queries[0].graft_aar, None);
    assert_eq!(report.rows.len(), 3);
}

#[test]
fn report_is_reproducible_and_excludes_self() {
    let mut rng = TestRng::seed_from_u64(99);
    let fam = family_corpus(&mut rng, 10, 0.3, false);
    let mut corpus = fam.structures.clone();
    corpus.push(fam.query.clone());
    let motif = extract_motif(&fam.query, &[CdrSpan::new('H', fam.query_start, FAMILY_MOTIF_LEN)]).unwrap();
    let q = DatabaseQuery {
        id: "loop".into(),
        motif,
        origin: Some(SourceLocation { source_id: "query".into(), chain_id: 'H', start_index: fam.query_start }),
    };
    let db = build_database(&[q], &corpus, ThresholdRule::default(), None).unwrap();
    assert!(db.entry("loop").unwrap().iter().all(|m| m.source_id != "query"));
    let labels = [labeled("loop", &fam.modal)];
    let a = run_benchmark(&db, &labels, &cfg(15, vec![3, 4], 4)).unwrap();
    let b = run_benchmark(&db, &labels, &cfg(15, vec![3, 4], 4)).unwrap();
    assert_eq!(a.to_tsv(), b.to_tsv());
    assert_eq!(a.rows.len(), 1 + 8);
    assert!(a.mean_diffusion_aar().unwrap() >= 0.15);
}
