//! Dyadic block partition of `{1..p}²` and the structural transforms on it.
//!
//! Blocks grow with distance from the diagonal. Working in units of `k0`
//! ("fine cells"): every diagonal cell is a block, odd block-rows (1-based)
//! get two `k0` blocks to their right and even rows one. At level `l ≥ 2`
//! the block-rows are `2^{l-1}` fine cells tall and, starting from the
//! covered frontier, receive three blocks of that width when odd and two when
//! even. This repeats until the upper triangle is covered; the lower
//! triangle is the mirror image.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::spectral_norm;
use crate::matrix::{Matrix, Span};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Block {
    pub rows: Span,
    pub cols: Span,
    /// Nominal side is `2^{level-1} k0`.
    pub level: u32,
    pub diagonal: bool,
}

impl Block {
    /// `d(B) = max(|I|, |J|)`, using the actual (possibly truncated) extents.
    pub fn dim(&self) -> usize {
        self.rows.len().max(self.cols.len())
    }

    pub fn transpose(&self) -> Block {
        Block {
            rows: self.cols,
            cols: self.rows,
            ..*self
        }
    }

    /// On or above the diagonal.
    pub fn is_upper(&self) -> bool {
        self.rows.start <= self.cols.start
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.rows.contains(i) && self.cols.contains(j)
    }

    /// `min |i - j|` over the cells of the block.
    pub fn min_lag(&self) -> usize {
        if self.rows.end > self.cols.start && self.cols.end > self.rows.start {
            0
        } else if self.rows.end <= self.cols.start {
            self.cols.start + 1 - self.rows.end
        } else {
            self.rows.start + 1 - self.cols.end
        }
    }

    pub fn record(&self) -> BlockRecord {
        BlockRecord {
            row_start: self.rows.start + 1,
            row_end: self.rows.end,
            col_start: self.cols.start + 1,
            col_end: self.cols.end,
            level: self.level,
            diagonal: self.diagonal,
        }
    }
}

/// Serialised block: 1-based closed intervals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockRecord {
    pub row_start: usize,
    pub row_end: usize,
    pub col_start: usize,
    pub col_end: usize,
    pub level: u32,
    pub diagonal: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockPartition {
    p: usize,
    k0: usize,
    blocks: Vec<Block>,
}

/// `max(1, ⌊ln p⌋)`.
pub fn default_k0(p: usize) -> usize {
    ((p.max(1) as f64).ln().floor() as usize).clamp(1, p.max(1))
}

impl BlockPartition {
    pub fn build(p: usize, k0: usize) -> Result<Self> {
        if p == 0 {
            return Err(Error::param("partition dimension must be positive"));
        }
        if k0 == 0 || k0 > p {
            return Err(Error::param(format!("k0 must lie in [1, {p}], got {k0}")));
        }
        let cells = p.div_ceil(k0);
        // upper-triangle blocks in fine-cell coordinates: (rows, cols, level)
        let mut fine: Vec<(Span, Span, u32)> = Vec::new();
        let mut frontier = vec![0usize; cells];

        for g in 0..cells {
            fine.push((Span::new(g, g + 1), Span::new(g, g + 1), 1));
            let ext = if g % 2 == 0 { 2 } else { 1 };
            let end = (g + 1 + ext).min(cells);
            for c in (g + 1)..end {
                fine.push((Span::new(g, g + 1), Span::new(c, c + 1), 1));
            }
            frontier[g] = end;
        }

        let mut level = 1u32;
        while frontier.iter().any(|&f| f < cells) {
            level += 1;
            let width = 1usize << (level - 1);
            for (g, start) in (0..cells).step_by(width).enumerate() {
                let stop = (start + width).min(cells);
                let count = if g % 2 == 0 { 3 } else { 2 };
                // rows of a block-row share a frontier, otherwise the strip is split
                let mut r = start;
                while r < stop {
                    let f = frontier[r];
                    let mut r_end = r + 1;
                    while r_end < stop && frontier[r_end] == f {
                        r_end += 1;
                    }
                    let mut col = f;
                    for _ in 0..count {
                        if col >= cells {
                            break;
                        }
                        let c_end = (col + width).min(cells);
                        fine.push((Span::new(r, r_end), Span::new(col, c_end), level));
                        col = c_end;
                    }
                    for fr in &mut frontier[r..r_end] {
                        *fr = col;
                    }
                    r = r_end;
                }
            }
        }

        let to_index = |s: Span| Span::new(s.start * k0, (s.end * k0).min(p));
        let mut blocks = Vec::with_capacity(2 * fine.len());
        for (r, c, level) in fine {
            let b = Block {
                rows: to_index(r),
                cols: to_index(c),
                level,
                diagonal: r == c,
            };
            blocks.push(b);
            if !b.diagonal {
                blocks.push(b.transpose());
            }
        }
        blocks.sort_by_key(|b| (b.rows.start, b.cols.start));
        Ok(BlockPartition { p, k0, blocks })
    }

    /// Partition with `k0 = max(1, ⌊ln p⌋)`.
    pub fn with_default_k0(p: usize) -> Result<Self> {
        Self::build(p, default_k0(p))
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn k0(&self) -> usize {
        self.k0
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn max_level(&self) -> u32 {
        self.blocks.iter().map(|b| b.level).max().unwrap_or(0)
    }

    /// Blocks on or above the diagonal; the rest are their transposes.
    pub fn upper_blocks(&self) -> impl Iterator<Item = &Block> {
        self.blocks.iter().filter(|b| b.is_upper())
    }

    pub fn records(&self) -> Vec<BlockRecord> {
        self.blocks.iter().map(Block::record).collect()
    }

    /// `p × p` map from cell to owning block index; `u32::MAX` marks an
    /// uncovered cell, which a valid partition never has.
    pub fn owner_map(&self) -> Vec<u32> {
        let p = self.p;
        let mut owner = vec![u32::MAX; p * p];
        for (k, b) in self.blocks.iter().enumerate() {
            for i in b.rows.iter() {
                for j in b.cols.iter() {
                    owner[i * p + j] = k as u32;
                }
            }
        }
        owner
    }

    /// Exhaustive structural check; returns one message per violated property.
    pub fn verify(&self) -> Vec<String> {
        let p = self.p;
        let k0 = self.k0;
        let mut out = Vec::new();

        let mut hits = vec![0u8; p * p];
        for b in &self.blocks {
            if b.rows.is_empty() || b.cols.is_empty() || b.rows.end > p || b.cols.end > p {
                out.push(format!("malformed block {:?}", b.record()));
                continue;
            }
            for i in b.rows.iter() {
                for j in b.cols.iter() {
                    hits[i * p + j] = hits[i * p + j].saturating_add(1);
                }
            }
        }
        if let Some(pos) = hits.iter().position(|&h| h == 0) {
            out.push(format!("cell ({}, {}) uncovered", pos / p + 1, pos % p + 1));
        }
        if let Some(pos) = hits.iter().position(|&h| h > 1) {
            out.push(format!("cell ({}, {}) covered twice", pos / p + 1, pos % p + 1));
        }

        for b in &self.blocks {
            let rec = b.record();
            if !self.blocks.contains(&b.transpose()) {
                out.push(format!("transpose of {rec:?} missing"));
            }
            if b.rows.start % k0 != 0 || b.cols.start % k0 != 0 {
                out.push(format!("{rec:?} not aligned to k0={k0}"));
            }
            let nominal = k0 << (b.level - 1);
            let d = b.dim();
            if d > nominal {
                out.push(format!("{rec:?} exceeds nominal size {nominal}"));
            }
            let full = b.rows.len() == nominal && b.cols.len() == nominal;
            if !full && b.rows.end != p && b.cols.end != p {
                out.push(format!("{rec:?} truncated away from the boundary"));
            }
            if b.diagonal && (b.rows != b.cols || b.level != 1) {
                out.push(format!("{rec:?} flagged diagonal but is not a level-1 square"));
            }
            if b.rows == b.cols && !b.diagonal {
                out.push(format!("{rec:?} sits on the diagonal but is not flagged"));
            }
            if d >= 4 * k0 && b.min_lag() < d {
                out.push(format!(
                    "{rec:?}: min |i-j| = {} below d(B) = {d}",
                    b.min_lag()
                ));
            }
        }

        let diag: Vec<Span> = self
            .blocks
            .iter()
            .filter(|b| b.diagonal)
            .map(|b| b.rows)
            .collect();
        let expected: Vec<Span> = (0..p)
            .step_by(k0)
            .map(|s| Span::new(s, (s + k0).min(p)))
            .collect();
        if diag != expected {
            out.push("diagonal blocks are not the k0 grid".to_string());
        }
        let cells = p.div_ceil(k0);
        if self.blocks.len() > cells * cells {
            out.push(format!("{} blocks exceed {}", self.blocks.len(), cells * cells));
        }
        out
    }

    fn require_dim(&self, a: &Matrix) -> Result<()> {
        if a.shape() != (self.p, self.p) {
            return Err(Error::dim(format!(
                "{}x{} matrix against a partition of dimension {}",
                a.rows(),
                a.cols(),
                self.p
            )));
        }
        Ok(())
    }

    /// `S(A, l)`: `a` on the union of level-`l` blocks, zero elsewhere.
    pub fn slice_by_level(&self, a: &Matrix, level: u32) -> Result<Matrix> {
        self.require_dim(a)?;
        let mut out = Matrix::zeros(self.p, self.p);
        for b in self.blocks.iter().filter(|b| b.level == level) {
            for i in b.rows.iter() {
                for j in b.cols.iter() {
                    out[(i, j)] = a[(i, j)];
                }
            }
        }
        Ok(out)
    }

    /// Largest number of nonzero entries in any row of the compressed
    /// pattern of `S(·, l)` under the regular partition into strips of
    /// width `2^{l-1} k0`.
    pub fn compressed_degree(&self, level: u32) -> usize {
        if level == 0 {
            return 0;
        }
        let width = self.k0.saturating_mul(1 << (level - 1).min(40)).min(self.p);
        let strips = self.p.div_ceil(width);
        let mut pattern = vec![false; strips * strips];
        for b in self.blocks.iter().filter(|b| b.level == level) {
            for g in (b.rows.start / width)..=((b.rows.end - 1) / width) {
                for h in (b.cols.start / width)..=((b.cols.end - 1) / width) {
                    pattern[g * strips + h] = true;
                }
            }
        }
        pattern
            .chunks(strips)
            .map(|row| row.iter().filter(|&&x| x).count())
            .max()
            .unwrap_or(0)
    }
}

/// `𝒩(A; p_1..p_G)`: the `G × G` matrix of spectral norms of the regular blocks.
pub fn norm_compression(a: &Matrix, sizes: &[usize]) -> Result<Matrix> {
    a.require_square("norm compression")?;
    if sizes.is_empty() || sizes.contains(&0) {
        return Err(Error::param("group sizes must be positive"));
    }
    let total: usize = sizes.iter().sum();
    if total != a.rows() {
        return Err(Error::dim(format!(
            "group sizes sum to {total}, matrix dimension is {}",
            a.rows()
        )));
    }
    let mut spans = Vec::with_capacity(sizes.len());
    let mut start = 0;
    for &s in sizes {
        spans.push(Span::new(start, start + s));
        start += s;
    }
    let g = sizes.len();
    let mut out = Matrix::zeros(g, g);
    for (r, &rs) in spans.iter().enumerate() {
        for (c, &cs) in spans.iter().enumerate() {
            out[(r, c)] = spectral_norm(&a.submatrix_unchecked(rs, cs))?;
        }
    }
    Ok(out)
}
