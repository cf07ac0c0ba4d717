#![allow(dead_code)]

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use cdrlike::alphabet::{AMINO_ACIDS, NUM_AA};
use cdrlike::geom::{kabsch, Coord};
use cdrlike::structmodel::{BackboneStructure, Chain, Residue};
use nalgebra::{Matrix3, Rotation3, Unit, UnitQuaternion, Vector3};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub type TestRng = ChaCha8Rng;

pub fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    // Box-Muller
    let u1: f64 = rng.random::<f64>().max(1e-300);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}

pub fn gaussian_vec<R: Rng>(rng: &mut R, sigma: f64) -> Coord {
    Vector3::new(gaussian(rng), gaussian(rng), gaussian(rng)) * sigma
}

pub fn random_unit<R: Rng>(rng: &mut R) -> Coord {
    loop {
        let v = gaussian_vec(rng, 1.0);
        let n = v.norm();
        if n > 1e-6 {
            return v / n;
        }
    }
}

pub fn random_rotation<R: Rng>(rng: &mut R) -> Matrix3<f64> {
    let q = nalgebra::Quaternion::new(gaussian(rng), gaussian(rng), gaussian(rng), gaussian(rng));
    UnitQuaternion::from_quaternion(q).to_rotation_matrix().into_inner()
}

pub fn random_points<R: Rng>(rng: &mut R, n: usize, spread: f64) -> Vec<Coord> {
    (0..n).map(|_| gaussian_vec(rng, spread)).collect()
}

pub fn transform(points: &[Coord], rot: &Matrix3<f64>, t: &Coord) -> Vec<Coord> {
    points.iter().map(|p| rot * p + t).collect()
}

fn centered(points: &[Coord]) -> Vec<Coord> {
    let c = points.iter().sum::<Coord>() / points.len() as f64;
    points.iter().map(|p| p - c).collect()
}

/// Minimal RMSD over proper rotations, found without any matrix
/// decomposition: a coarse grid of rotations followed by a shrinking
/// pattern search on the rotation vector. Translation is eliminated by
/// centering both sets.
pub fn brute_force_rmsd(p: &[Coord], q: &[Coord]) -> f64 {
    assert_eq!(p.len(), q.len());
    let pc = centered(p);
    let qc = centered(q);
    let n = p.len() as f64;
    let norms: f64 = pc.iter().map(|v| v.norm_squared()).sum::<f64>() + qc.iter().map(|v| v.norm_squared()).sum::<f64>();
    // sum |R p - q|^2 = |p|^2 + |q|^2 - 2 sum q . R p; only the cross term depends on R.
    let mut m = Matrix3::zeros();
    for (a, b) in pc.iter().zip(&qc) {
        m += b * a.transpose();
    }
    let score = |r: &Matrix3<f64>| (r.component_mul(&m)).sum();
    let sse = |r: &Matrix3<f64>| (norms - 2.0 * score(r)).max(0.0);

    // Coarse grid: axes on a Fibonacci sphere times a set of angles.
    let mut best = Matrix3::identity();
    let mut best_score = score(&best);
    let axes = 60;
    for i in 0..axes {
        let z = 1.0 - 2.0 * (i as f64 + 0.5) / axes as f64;
        let r = (1.0 - z * z).sqrt();
        let phi = i as f64 * PI * (3.0 - 5f64.sqrt());
        let axis = Unit::new_normalize(Vector3::new(r * phi.cos(), r * phi.sin(), z));
        for k in 1..=12 {
            let angle = k as f64 * PI / 12.0;
            let rot = Rotation3::from_axis_angle(&axis, angle).into_inner();
            let s = score(&rot);
            if s > best_score {
                best_score = s;
                best = rot;
            }
        }
    }

    // Pattern search on small rotations applied on the left.
    let dirs = [Vector3::x_axis(), Vector3::y_axis(), Vector3::z_axis()];
    let mut step = 0.3;
    while step > 1e-10 {
        let mut improved = false;
        for d in &dirs {
            for sign in [1.0, -1.0] {
                let cand = Rotation3::from_axis_angle(d, sign * step).into_inner() * best;
                let s = score(&cand);
                if s > best_score {
                    best_score = s;
                    best = cand;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (sse(&best) / n).sqrt()
}

pub const ALPHABET: &[u8; NUM_AA] = &AMINO_ACIDS;

pub fn random_letter<R: Rng>(rng: &mut R) -> char {
    ALPHABET[rng.random_range(0..NUM_AA)] as char
}

/// Alpha-carbon trace with 3.8 Å steps and bond angles between roughly 80 and 150 degrees.
pub fn random_walk<R: Rng>(rng: &mut R, n: usize, start: Coord) -> Vec<Coord> {
    let mut out = Vec::with_capacity(n);
    if n == 0 {
        return out;
    }
    out.push(start);
    let mut dir = random_unit(rng);
    for _ in 1..n {
        let last = *out.last().unwrap();
        loop {
            let cand = random_unit(rng);
            let cos = cand.dot(&dir);
            // angle between consecutive bonds in [30, 100] degrees
            if cos < 0.87 && cos > -0.17 {
                dir = cand;
                break;
            }
        }
        out.push(last + dir * 3.8);
    }
    out
}

pub fn make_chain(id: char, coords: &[Coord], seq: &str) -> Chain {
    assert_eq!(coords.len(), seq.chars().count());
    Chain {
        id,
        residues: coords
            .iter()
            .zip(seq.chars())
            .enumerate()
            .map(|(i, (c, aa))| Residue {
                chain_id: id,
                seq_number: i as i32 + 1,
                insertion_code: None,
                aa,
                ca: *c,
            })
            .collect(),
    }
}

pub fn random_seq<R: Rng>(rng: &mut R, n: usize) -> String {
    (0..n).map(|_| random_letter(rng)).collect()
}

/// A corpus of `chains` random-walk chains of `len` residues. Some chains get a
/// spatial break, a numbering gap or an unknown residue so the window rules
/// are exercised.
pub fn random_corpus<R: Rng>(rng: &mut R, tag: usize, chains: usize, len: usize) -> Vec<BackboneStructure> {
    let ids = ['A', 'B', 'C', 'D'];
    let mut structures = Vec::new();
    let per = ids.len();
    let mut made = 0;
    let mut sidx = 0;
    while made < chains {
        let mut s = BackboneStructure {
            id: format!("s{tag:02}_{sidx:03}"),
            chains: Vec::new(),
        };
        for &cid in ids.iter().take(per.min(chains - made)) {
            let origin = gaussian_vec(rng, 30.0);
            let coords = random_walk(rng, len, origin);
            let mut chain = make_chain(cid, &coords, &random_seq(rng, len));
            match rng.random_range(0..6) {
                0 => {
                    // spatial break
                    let at = rng.random_range(5..len - 5);
                    let shift = random_unit(rng) * 6.0;
                    for r in &mut chain.residues[at..] {
                        r.ca += shift;
                    }
                }
                1 => {
                    let at = rng.random_range(5..len - 5);
                    for r in &mut chain.residues[at..] {
                        r.seq_number += 3;
                    }
                }
                2 => {
                    let at = rng.random_range(0..len);
                    chain.residues[at].aa = 'X';
                }
                _ => {}
            }
            s.chains.push(chain);
            made += 1;
        }
        structures.push(s);
        sidx += 1;
    }
    structures
}

/// Replaces `len` residues of a chain with a rigidly moved, jittered copy of
/// `motif`, keeping the chain's spacing at the junction plausible.
pub fn plant<R: Rng>(rng: &mut R, chain: &mut Chain, at: usize, motif: &[Coord], jitter: f64) {
    let rot = random_rotation(rng);
    let anchor = chain.residues[at].ca;
    let moved = transform(motif, &rot, &Vector3::zeros());
    let shift = anchor - moved[0];
    for (i, m) in moved.iter().enumerate() {
        let noise = if jitter > 0.0 { gaussian_vec(rng, jitter) } else { Vector3::zeros() };
        chain.residues[at + i].ca = m + shift + noise;
    }
}

/// Every valid window of every chain whose RMSD to `query` is within
/// `threshold`, found without any prefilter. Windows may not contain an
/// unknown residue and may not cross a spatial break (CA-CA over 4.5 Å) or a
/// numbering jump.
pub fn exhaustive_scan(
    query: &[Coord],
    corpus: &[BackboneStructure],
    threshold: f64,
) -> Vec<(String, char, usize, f64, String)> {
    let m = query.len();
    let mut out = Vec::new();
    for s in corpus {
        for chain in &s.chains {
            let res = &chain.residues;
            if res.len() < m {
                continue;
            }
            'win: for start in 0..=res.len() - m {
                let w = &res[start..start + m];
                for r in w {
                    if !ALPHABET.contains(&(r.aa as u8)) {
                        continue 'win;
                    }
                }
                for pair in w.windows(2) {
                    if (pair[1].ca - pair[0].ca).norm() > 4.5 || pair[1].seq_number - pair[0].seq_number != 1 {
                        continue 'win;
                    }
                }
                let coords: Vec<Coord> = w.iter().map(|r| r.ca).collect();
                let rmsd = kabsch(query, &coords).unwrap().rmsd;
                if rmsd <= threshold {
                    out.push((s.id.clone(), chain.id, start, rmsd, w.iter().map(|r| r.aa).collect()));
                }
            }
        }
    }
    out
}

/// Family corpus: a fixed 12-residue motif embedded in decoy chains, with
/// loop sequences drawn from a sharp per-position profile.
pub struct FamilyCorpus {
    pub motif: Vec<Coord>,
    pub modal: String,
    pub structures: Vec<BackboneStructure>,
    /// Chain holding the motif verbatim; written as the query structure.
    pub query: BackboneStructure,
    pub query_start: usize,
}

pub const FAMILY_MOTIF_LEN: usize = 12;
pub const FAMILY_MODAL_PROB: f64 = 0.8;

/// Draws from the sharp profile: modal letter with probability 0.8, otherwise
/// one of the other 19 uniformly.
pub fn profile_letter<R: Rng>(rng: &mut R, modal: char) -> char {
    if rng.random::<f64>() < FAMILY_MODAL_PROB {
        return modal;
    }
    let others: Vec<char> = ALPHABET.iter().map(|&b| b as char).filter(|&c| c != modal).collect();
    others[rng.random_range(0..others.len())]
}

pub fn family_corpus<R: Rng>(rng: &mut R, decoys: usize, jitter_radius: f64, exact_copy: bool) -> FamilyCorpus {
    let chain_len = 60;
    let motif = random_walk(rng, FAMILY_MOTIF_LEN, Vector3::zeros());
    let modal = random_seq(rng, FAMILY_MOTIF_LEN);
    let mut structures = Vec::new();
    for d in 0..decoys {
        let at = rng.random_range(5..chain_len - FAMILY_MOTIF_LEN - 5);
        let coords = build_with_motif(rng, chain_len, at, &motif, if exact_copy && d == 0 { 0.0 } else { jitter_radius });
        let mut seq: Vec<char> = random_seq(rng, chain_len).chars().collect();
        for (j, m) in modal.chars().enumerate() {
            seq[at + j] = if exact_copy && d == 0 { m } else { profile_letter(rng, m) };
        }
        let seq: String = seq.into_iter().collect();
        structures.push(BackboneStructure {
            id: format!("fam{d:03}"),
            chains: vec![make_chain('A', &coords, &seq)],
        });
    }
    let query_start = 10;
    let qcoords = build_with_motif(rng, 40, query_start, &motif, 0.0);
    let mut qseq: Vec<char> = random_seq(rng, 40).chars().collect();
    for (j, m) in modal.chars().enumerate() {
        qseq[query_start + j] = m;
    }
    let query = BackboneStructure {
        id: "query".into(),
        chains: vec![make_chain('H', &qcoords, &qseq.into_iter().collect::<String>())],
    };
    FamilyCorpus { motif, modal, structures, query, query_start }
}

/// A random-walk chain with a rigid copy of `motif` at `at`; every motif
/// point is displaced by a random vector no longer than `jitter_radius`.
fn build_with_motif<R: Rng>(rng: &mut R, n: usize, at: usize, motif: &[Coord], jitter_radius: f64) -> Vec<Coord> {
    let rot = random_rotation(rng);
    let origin = gaussian_vec(rng, 20.0);
    let head = random_walk(rng, at, origin);
    let anchor = head.last().copied().unwrap_or_else(|| gaussian_vec(rng, 20.0)) + random_unit(rng) * 3.8;
    let moved = transform(motif, &rot, &Vector3::zeros());
    let shift = anchor - moved[0];
    let mut coords = head;
    for m in &moved {
        let jitter = if jitter_radius > 0.0 {
            random_unit(rng) * rng.random_range(0.0..jitter_radius)
        } else {
            Vector3::zeros()
        };
        coords.push(m + shift + jitter);
    }
    let tail_start = *coords.last().unwrap() + random_unit(rng) * 3.8;
    coords.extend(random_walk(rng, n - at - motif.len(), tail_start));
    coords
}

pub fn write_pdb(dir: &Path, s: &BackboneStructure) {
    fs::write(dir.join(format!("{}.pdb", s.id)), s.to_pdb_string()).unwrap();
}

/// Writes the family corpus under `root`: `corpus/*.pdb`, `query.pdb`,
/// `queries.tsv` and `labels.tsv`.
pub fn write_family(root: &Path, fam: &FamilyCorpus) {
    let corpus = root.join("corpus");
    fs::create_dir_all(&corpus).unwrap();
    for s in &fam.structures {
        write_pdb(&corpus, s);
    }
    write_pdb(root, &fam.query);
    fs::write(
        root.join("queries.tsv"),
        format!(
            "query_id\tpdb\tchain\tstart_index\tlength\nloop1\tquery.pdb\tH\t{}\t{}\n",
            fam.query_start, FAMILY_MOTIF_LEN
        ),
    )
    .unwrap();
    fs::write(root.join("labels.tsv"), format!("query_id\ttrue_sequence\nloop1\t{}\n", fam.modal)).unwrap();
}

pub fn aar(a: &str, b: &str) -> f64 {
    assert_eq!(a.len(), b.len());
    a.bytes().zip(b.bytes()).filter(|(x, y)| x == y).count() as f64 / a.len() as f64
}

pub fn cli(args: &[&str]) -> std::process::Output {
    std::process::Command::new(env!("CARGO_BIN_EXE_cdrlike"))
        .args(args)
        .output()
        .expect("binary runs")
}
