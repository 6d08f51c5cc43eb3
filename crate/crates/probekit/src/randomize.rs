//! Structure-preserving randomizations of a signed bipartite layer.
//!
//! Seven kinds, each preserving the support (which entries are nonzero),
//! the multiset of edge magnitudes, and the overall positive fraction,
//! while destroying progressively less structure:
//!
//! * `A`: signed values shuffle freely over the support. Only the sign
//!   balance survives; per-node degrees and strengths do not.
//! * `B`: the sign pattern stays fixed; magnitudes shuffle within the
//!   positive entries and within the negative entries, each across the
//!   whole matrix. All per-node signed degrees survive on both sides.
//! * `C`: signed values shuffle within each column. Column degrees and
//!   strengths survive; row profiles do not.
//! * `D`: signed values shuffle within each row. Row degrees and
//!   strengths survive; column profiles do not.
//! * `E`: the sign pattern stays fixed; magnitudes shuffle within each
//!   column's positive entries and within its negative entries. Keeps
//!   all signed degrees plus column strengths.
//! * `F`: as `E` but per row. Keeps all signed degrees plus row
//!   strengths.
//! * `G`: the sign pattern itself is rewired by checkerboard swaps
//!   (which preserve signed degrees on both sides), then magnitudes
//!   shuffle freely over the support. Values can change sign, so this
//!   separates degree structure from the sign arrangement.
//!
//! Every shuffle draws from the caller's stream in a pinned order, so a
//! kind is a pure function of `(layer, config, seed)`.

use std::fmt;
use std::str::FromStr;

use crate::bipartite::{sign_pattern, SignPattern, SignedBipartiteLayer};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RandomizationKind {
    A,
    B,
    C,
    D,
    E,
    F,
    G,
}

impl RandomizationKind {
    pub const ALL: [RandomizationKind; 7] = [
        RandomizationKind::A,
        RandomizationKind::B,
        RandomizationKind::C,
        RandomizationKind::D,
        RandomizationKind::E,
        RandomizationKind::F,
        RandomizationKind::G,
    ];

    pub fn letter(self) -> char {
        match self {
            RandomizationKind::A => 'A',
            RandomizationKind::B => 'B',
            RandomizationKind::C => 'C',
            RandomizationKind::D => 'D',
            RandomizationKind::E => 'E',
            RandomizationKind::F => 'F',
            RandomizationKind::G => 'G',
        }
    }
}

impl fmt::Display for RandomizationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

impl FromStr for RandomizationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" | "a" => Ok(RandomizationKind::A),
            "B" | "b" => Ok(RandomizationKind::B),
            "C" | "c" => Ok(RandomizationKind::C),
            "D" | "d" => Ok(RandomizationKind::D),
            "E" | "e" => Ok(RandomizationKind::E),
            "F" | "f" => Ok(RandomizationKind::F),
            "G" | "g" => Ok(RandomizationKind::G),
            other => Err(Error::invalid(format!(
                "unknown randomization kind {other:?}, expected A through G"
            ))),
        }
    }
}

/// Tuning for the sign-pattern rewiring used by kind `G`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RewireConfig {
    /// Swap attempts per edge; the rewiring loop runs
    /// `swap_attempts_per_edge * edge_count` times.
    pub swap_attempts_per_edge: usize,
}

impl Default for RewireConfig {
    fn default() -> Self {
        RewireConfig {
            swap_attempts_per_edge: 100,
        }
    }
}

fn require_edges(layer: &SignedBipartiteLayer) -> Result<Vec<(usize, usize)>> {
    let support = layer.weights().support();
    if support.is_empty() {
        return Err(Error::NoEdges);
    }
    Ok(support)
}

/// Kind `A`: one global shuffle of the signed values over the support.
pub fn randomize_a(
    layer: &SignedBipartiteLayer,
    rng: &mut RngStream,
) -> Result<SignedBipartiteLayer> {
    let support = require_edges(layer)?;
    let w = layer.weights();
    let mut values: Vec<f64> = support.iter().map(|&(i, j)| w.get(i, j)).collect();
    rng.shuffle(&mut values);
    let mut out = w.clone();
    for (&(i, j), &v) in support.iter().zip(&values) {
        out.set(i, j, v);
    }
    Ok(SignedBipartiteLayer::new(out))
}

/// Kind `B`: magnitudes shuffle within the positive entries, then
/// within the negative entries; the sign pattern is untouched.
pub fn randomize_b(
    layer: &SignedBipartiteLayer,
    rng: &mut RngStream,
) -> Result<SignedBipartiteLayer> {
    let support = require_edges(layer)?;
    let w = layer.weights();
    let mut out = w.clone();
    shuffle_within_sign_groups(w, &support, rng, &mut out);
    Ok(SignedBipartiteLayer::new(out))
}

/// Shuffles magnitudes over the positive positions of `support`, then
/// over the negative ones, preserving each position's sign.
fn shuffle_within_sign_groups(
    w: &Matrix,
    support: &[(usize, usize)],
    rng: &mut RngStream,
    out: &mut Matrix,
) {
    let mut pos: Vec<(usize, usize)> = Vec::new();
    let mut neg: Vec<(usize, usize)> = Vec::new();
    for &(i, j) in support {
        if w.get(i, j) > 0.0 {
            pos.push((i, j));
        } else {
            neg.push((i, j));
        }
    }
    for (positions, sign) in [(&pos, 1.0), (&neg, -1.0)] {
        let mut mags: Vec<f64> = positions.iter().map(|&(i, j)| w.get(i, j).abs()).collect();
        rng.shuffle(&mut mags);
        for (&(i, j), &m) in positions.iter().zip(&mags) {
            out.set(i, j, sign * m);
        }
    }
}

/// Kinds `C` and `D`: signed values shuffle within each line (column
/// for `C`, row for `D`), visiting lines in ascending order.
fn shuffle_signed_per_line(
    layer: &SignedBipartiteLayer,
    by_column: bool,
    rng: &mut RngStream,
) -> Result<SignedBipartiteLayer> {
    require_edges(layer)?;
    let w = layer.weights();
    let mut out = w.clone();
    let lines = if by_column { w.cols() } else { w.rows() };
    let line_len = if by_column { w.rows() } else { w.cols() };
    for line in 0..lines {
        let mut positions: Vec<(usize, usize)> = Vec::new();
        for k in 0..line_len {
            let (i, j) = if by_column { (k, line) } else { (line, k) };
            if w.get(i, j) != 0.0 {
                positions.push((i, j));
            }
        }
        let mut values: Vec<f64> = positions.iter().map(|&(i, j)| w.get(i, j)).collect();
        rng.shuffle(&mut values);
        for (&(i, j), &v) in positions.iter().zip(&values) {
            out.set(i, j, v);
        }
    }
    Ok(SignedBipartiteLayer::new(out))
}

pub fn randomize_c(
    layer: &SignedBipartiteLayer,
    rng: &mut RngStream,
) -> Result<SignedBipartiteLayer> {
    shuffle_signed_per_line(layer, true, rng)
}

pub fn randomize_d(
    layer: &SignedBipartiteLayer,
    rng: &mut RngStream,
) -> Result<SignedBipartiteLayer> {
    shuffle_signed_per_line(layer, false, rng)
}

/// Kinds `E` and `F`: magnitudes shuffle within each line's positive
/// entries, then within its negative entries; signs stay in place.
/// Lines are visited in ascending order.
fn shuffle_magnitudes_per_line(
    layer: &SignedBipartiteLayer,
    by_column: bool,
    rng: &mut RngStream,
) -> Result<SignedBipartiteLayer> {
    require_edges(layer)?;
    let w = layer.weights();
    let mut out = w.clone();
    let lines = if by_column { w.cols() } else { w.rows() };
    let line_len = if by_column { w.rows() } else { w.cols() };
    for line in 0..lines {
        let mut positions: Vec<(usize, usize)> = Vec::new();
        for k in 0..line_len {
            let (i, j) = if by_column { (k, line) } else { (line, k) };
            if w.get(i, j) != 0.0 {
                positions.push((i, j));
            }
        }
        shuffle_within_sign_groups_at(w, &positions, rng, &mut out);
    }
    Ok(SignedBipartiteLayer::new(out))
}

fn shuffle_within_sign_groups_at(
    w: &Matrix,
    positions: &[(usize, usize)],
    rng: &mut RngStream,
    out: &mut Matrix,
) {
    let pos: Vec<(usize, usize)> = positions
        .iter()
        .copied()
        .filter(|&(i, j)| w.get(i, j) > 0.0)
        .collect();
    let neg: Vec<(usize, usize)> = positions
        .iter()
        .copied()
        .filter(|&(i, j)| w.get(i, j) < 0.0)
        .collect();
    for (group, sign) in [(&pos, 1.0), (&neg, -1.0)] {
        let mut mags: Vec<f64> = group.iter().map(|&(i, j)| w.get(i, j).abs()).collect();
        rng.shuffle(&mut mags);
        for (&(i, j), &m) in group.iter().zip(&mags) {
            out.set(i, j, sign * m);
        }
    }
}

pub fn randomize_e(
    layer: &SignedBipartiteLayer,
    rng: &mut RngStream,
) -> Result<SignedBipartiteLayer> {
    shuffle_magnitudes_per_line(layer, true, rng)
}

pub fn randomize_f(
    layer: &SignedBipartiteLayer,
    rng: &mut RngStream,
) -> Result<SignedBipartiteLayer> {
    shuffle_magnitudes_per_line(layer, false, rng)
}

/// Rewires a sign pattern by repeated checkerboard swaps.
///
/// A swap picks two distinct rows and two distinct columns; when the
/// four corner signs form `+ -` over `- +` (or its mirror), all four
/// flip. Each swap preserves every row and column's count of positive
/// and negative entries while moving signs across the support. Patterns
/// with fewer than two rows or columns admit no swap and pass through
/// unchanged.
pub fn rewire_sign_pattern(
    pattern: &SignPattern,
    config: &RewireConfig,
    rng: &mut RngStream,
) -> Result<SignPattern> {
    let edges = pattern.signs().iter().filter(|&&s| s != 0).count();
    if edges == 0 {
        return Err(Error::NoEdges);
    }
    let mut out = pattern.clone();
    let rows = pattern.rows();
    let cols = pattern.cols();
    if rows < 2 || cols < 2 {
        return Ok(out);
    }
    let attempts = config.swap_attempts_per_edge * edges;
    for _ in 0..attempts {
        // Draw order is pinned: first row, second row, first column,
        // second column, with the second draw skipping the first value.
        let r1 = rng.next_below(rows as u64) as usize;
        let mut r2 = rng.next_below(rows as u64 - 1) as usize;
        if r2 >= r1 {
            r2 += 1;
        }
        let c1 = rng.next_below(cols as u64) as usize;
        let mut c2 = rng.next_below(cols as u64 - 1) as usize;
        if c2 >= c1 {
            c2 += 1;
        }
        let s11 = out.get(r1, c1);
        let s12 = out.get(r1, c2);
        let s21 = out.get(r2, c1);
        let s22 = out.get(r2, c2);
        if s11 == 0 || s12 == 0 || s21 == 0 || s22 == 0 {
            continue;
        }
        if s11 == s22 && s12 == s21 && s11 == -s12 {
            out.set(r1, c1, -s11);
            out.set(r1, c2, -s12);
            out.set(r2, c1, -s21);
            out.set(r2, c2, -s22);
        }
    }
    Ok(out)
}

/// True when at least one checkerboard swap is available anywhere in
/// the pattern, i.e. the rewiring of kind `G` can move signs at all.
pub fn pattern_admits_swap(pattern: &SignPattern) -> bool {
    let rows = pattern.rows();
    let cols = pattern.cols();
    for r1 in 0..rows {
        for r2 in (r1 + 1)..rows {
            for c1 in 0..cols {
                for c2 in (c1 + 1)..cols {
                    let s11 = pattern.get(r1, c1);
                    let s12 = pattern.get(r1, c2);
                    let s21 = pattern.get(r2, c1);
                    let s22 = pattern.get(r2, c2);
                    if s11 != 0 && s12 == -s11 && s21 == -s11 && s22 == s11 {
                        return true;
                    }
                }
            }
        }
    }
    false
}

/// Kind `G`: rewires the sign pattern by checkerboard swaps, then
/// distributes the globally shuffled magnitudes over the (unchanged)
/// support following the new signs.
pub fn randomize_g(
    layer: &SignedBipartiteLayer,
    config: &RewireConfig,
    rng: &mut RngStream,
) -> Result<SignedBipartiteLayer> {
    let support = require_edges(layer)?;
    let w = layer.weights();
    let rewired = rewire_sign_pattern(&sign_pattern(layer), config, rng)?;
    let mut mags: Vec<f64> = support.iter().map(|&(i, j)| w.get(i, j).abs()).collect();
    rng.shuffle(&mut mags);
    let mut out = Matrix::zeros(w.rows(), w.cols());
    for (&(i, j), &m) in support.iter().zip(&mags) {
        let s = rewired.get(i, j);
        debug_assert!(s != 0, "rewiring must preserve the support");
        out.set(i, j, s as f64 * m);
    }
    Ok(SignedBipartiteLayer::new(out))
}

/// Applies one randomization kind. `config` only affects kind `G`.
pub fn randomize_layer(
    layer: &SignedBipartiteLayer,
    kind: RandomizationKind,
    config: &RewireConfig,
    rng: &mut RngStream,
) -> Result<SignedBipartiteLayer> {
    match kind {
        RandomizationKind::A => randomize_a(layer, rng),
        RandomizationKind::B => randomize_b(layer, rng),
        RandomizationKind::C => randomize_c(layer, rng),
        RandomizationKind::D => randomize_d(layer, rng),
        RandomizationKind::E => randomize_e(layer, rng),
        RandomizationKind::F => randomize_f(layer, rng),
        RandomizationKind::G => randomize_g(layer, config, rng),
    }
}
