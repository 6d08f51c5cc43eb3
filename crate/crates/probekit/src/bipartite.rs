//! Weight matrices viewed as signed weighted bipartite graphs.
//!
//! A matrix entry `w[i][j]` is an edge between right node `i` (the row,
//! an output unit) and left node `j` (the column, an input unit) with
//! sign `sign(w)` and magnitude `|w|`. Entries that are exactly zero are
//! absent edges, so the support of the matrix is the edge set.

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Which side of the bipartite graph a per-node profile describes:
/// left nodes are columns, right nodes are rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Sign convention used across the graph view: strictly positive maps
/// to 1, strictly negative to -1, zero stays 0.
#[inline]
pub fn sign_of(value: f64) -> i8 {
    if value > 0.0 {
        1
    } else if value < 0.0 {
        -1
    } else {
        0
    }
}

/// A weight matrix in its role as a bipartite graph layer.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedBipartiteLayer {
    weights: Matrix,
}

impl SignedBipartiteLayer {
    pub fn new(weights: Matrix) -> Self {
        SignedBipartiteLayer { weights }
    }

    pub fn weights(&self) -> &Matrix {
        &self.weights
    }

    pub fn into_weights(self) -> Matrix {
        self.weights
    }

    pub fn left_nodes(&self) -> usize {
        self.weights.cols()
    }

    pub fn right_nodes(&self) -> usize {
        self.weights.rows()
    }

    /// Number of edges (nonzero entries).
    pub fn edge_count(&self) -> usize {
        self.weights.values().iter().filter(|&&v| v != 0.0).count()
    }
}

/// Per-node counts of positive and negative incident edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeProfile {
    pub side: Side,
    pub k_plus: Vec<usize>,
    pub k_minus: Vec<usize>,
}

/// Per-node sums of incident edge magnitudes, split by sign. Both
/// components are nonnegative.
#[derive(Debug, Clone, PartialEq)]
pub struct StrengthProfile {
    pub side: Side,
    pub s_plus: Vec<f64>,
    pub s_minus: Vec<f64>,
}

fn node_count(layer: &SignedBipartiteLayer, side: Side) -> usize {
    match side {
        Side::Left => layer.left_nodes(),
        Side::Right => layer.right_nodes(),
    }
}

fn node_index(side: Side, row: usize, col: usize) -> usize {
    match side {
        Side::Left => col,
        Side::Right => row,
    }
}

/// Signed degrees of every node on `side`.
pub fn degrees(layer: &SignedBipartiteLayer, side: Side) -> DegreeProfile {
    let n = node_count(layer, side);
    let mut k_plus = vec![0usize; n];
    let mut k_minus = vec![0usize; n];
    let w = &layer.weights;
    for i in 0..w.rows() {
        for j in 0..w.cols() {
            let v = w.get(i, j);
            let node = node_index(side, i, j);
            if v > 0.0 {
                k_plus[node] += 1;
            } else if v < 0.0 {
                k_minus[node] += 1;
            }
        }
    }
    DegreeProfile {
        side,
        k_plus,
        k_minus,
    }
}

/// Signed strengths of every node on `side`.
pub fn strengths(layer: &SignedBipartiteLayer, side: Side) -> StrengthProfile {
    let n = node_count(layer, side);
    let mut s_plus = vec![0.0f64; n];
    let mut s_minus = vec![0.0f64; n];
    let w = &layer.weights;
    for i in 0..w.rows() {
        for j in 0..w.cols() {
            let v = w.get(i, j);
            let node = node_index(side, i, j);
            if v > 0.0 {
                s_plus[node] += v;
            } else if v < 0.0 {
                s_minus[node] += -v;
            }
        }
    }
    StrengthProfile {
        side,
        s_plus,
        s_minus,
    }
}

/// Fraction of edges with positive sign. Errors when the layer has no
/// edges at all, since the fraction is then undefined.
pub fn alpha(layer: &SignedBipartiteLayer) -> Result<f64> {
    let mut positive = 0usize;
    let mut total = 0usize;
    for &v in layer.weights.values() {
        if v != 0.0 {
            total += 1;
            if v > 0.0 {
                positive += 1;
            }
        }
    }
    if total == 0 {
        return Err(Error::NoEdges);
    }
    Ok(positive as f64 / total as f64)
}

/// The sign of every entry, with zero marking absent edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignPattern {
    rows: usize,
    cols: usize,
    signs: Vec<i8>,
}

impl SignPattern {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> i8 {
        debug_assert!(row < self.rows && col < self.cols);
        self.signs[row * self.cols + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, sign: i8) {
        debug_assert!(row < self.rows && col < self.cols);
        debug_assert!((-1..=1).contains(&sign));
        self.signs[row * self.cols + col] = sign;
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    /// Counts of (positive, negative) entries.
    pub fn sign_counts(&self) -> (usize, usize) {
        let p = self.signs.iter().filter(|&&s| s > 0).count();
        let n = self.signs.iter().filter(|&&s| s < 0).count();
        (p, n)
    }
}

/// Extracts the sign pattern of a layer.
pub fn sign_pattern(layer: &SignedBipartiteLayer) -> SignPattern {
    let w = &layer.weights;
    SignPattern {
        rows: w.rows(),
        cols: w.cols(),
        signs: w.values().iter().map(|&v| sign_of(v)).collect(),
    }
}

/// Entrywise absolute values; zero entries stay zero.
pub fn magnitudes(layer: &SignedBipartiteLayer) -> Matrix {
    layer.weights.map(f64::abs)
}

/// Rebuilds a weight matrix from a sign pattern and a magnitude matrix
/// of the same shape. The pattern's zeros silence the corresponding
/// magnitudes.
pub fn compose(pattern: &SignPattern, magnitudes: &Matrix) -> SignedBipartiteLayer {
    assert_eq!(
        (pattern.rows, pattern.cols),
        magnitudes.shape(),
        "pattern and magnitude shapes must agree"
    );
    let values: Vec<f64> = pattern
        .signs
        .iter()
        .zip(magnitudes.values())
        .map(|(&s, &m)| s as f64 * m.abs())
        .collect();
    SignedBipartiteLayer::new(Matrix::from_vec(pattern.rows, pattern.cols, values))
}
