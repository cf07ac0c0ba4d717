//! The 20-letter amino-acid alphabet shared by profiles and the diffusion kernels.

/// Number of amino-acid states.
pub const NUM_AA: usize = 20;

/// One-letter codes in index order.
pub const AMINO_ACIDS: [u8; NUM_AA] = *b"ACDEFGHIKLMNPQRSTVWY";

/// Placeholder for residues whose identity is unknown.
pub const UNKNOWN: char = 'X';

/// Symbol used to mask designable positions in a framework sequence.
pub const MASK: char = '?';

/// A categorical distribution over the alphabet.
pub type AaDist = [f64; NUM_AA];

pub fn index_of(code: char) -> Option<usize> {
    if !code.is_ascii() {
        return None;
    }
    let c = (code as u8).to_ascii_uppercase();
    AMINO_ACIDS.iter().position(|&a| a == c)
}

pub fn letter(index: usize) -> char {
    AMINO_ACIDS[index] as char
}

/// Encodes a sequence into alphabet indices; `None` if any letter is outside the alphabet.
pub fn encode(seq: &str) -> Option<Vec<usize>> {
    seq.chars().map(index_of).collect()
}

pub fn decode(indices: &[usize]) -> String {
    indices.iter().map(|&i| letter(i)).collect()
}

/// Three-letter residue name to one-letter code. Unknown names map to `X`.
pub fn three_to_one(name: &str) -> char {
    match name {
        "ALA" => 'A',
        "CYS" => 'C',
        "ASP" => 'D',
        "GLU" => 'E',
        "PHE" => 'F',
        "GLY" => 'G',
        "HIS" => 'H',
        "ILE" => 'I',
        "LYS" => 'K',
        "LEU" => 'L',
        "MET" => 'M',
        "ASN" => 'N',
        "PRO" => 'P',
        "GLN" => 'Q',
        "ARG" => 'R',
        "SER" => 'S',
        "THR" => 'T',
        "VAL" => 'V',
        "TRP" => 'W',
        "TYR" => 'Y',
        _ => UNKNOWN,
    }
}

pub fn one_to_three(code: char) -> &'static str {
    match code {
        'A' => "ALA",
        'C' => "CYS",
        'D' => "ASP",
        'E' => "GLU",
        'F' => "PHE",
        'G' => "GLY",
        'H' => "HIS",
        'I' => "ILE",
        'K' => "LYS",
        'L' => "LEU",
        'M' => "MET",
        'N' => "ASN",
        'P' => "PRO",
        'Q' => "GLN",
        'R' => "ARG",
        'S' => "SER",
        'T' => "THR",
        'V' => "VAL",
        'W' => "TRP",
        'Y' => "TYR",
        _ => "UNK",
    }
}

pub fn uniform() -> AaDist {
    [1.0 / NUM_AA as f64; NUM_AA]
}

pub fn onehot(index: usize) -> AaDist {
    let mut row = [0.0; NUM_AA];
    row[index] = 1.0;
    row
}

/// Index of the largest entry; ties resolve to the lowest index.
pub fn argmax(row: &AaDist) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}
