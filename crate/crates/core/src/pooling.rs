//! Binary hashing and block-histogram pooling.
//!
//! A group of `L` real maps is binarized at zero, packed into one integer map
//! `W = Σ_h 2^{h−1} H(G_h)` with values in `[0, 2^L − 1]`, and summarized by
//! per-block histograms with `2^L` bins (raw counts). Group histograms are
//! concatenated in group order.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{require_matrix, DenseTensor};

/// Widest hash supported (bits per pixel).
pub const MAX_HASH_BITS: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoolingConfig {
    pub block_rows: usize,
    pub block_cols: usize,
    /// Fractional overlap between neighbouring blocks, in `[0, 1)`.
    pub overlap: f64,
}

impl Default for PoolingConfig {
    fn default() -> Self {
        Self {
            block_rows: 8,
            block_cols: 8,
            overlap: 0.5,
        }
    }
}

impl PoolingConfig {
    pub fn stride(&self) -> (usize, usize) {
        let s = |b: usize| (b as f64 * (1.0 - self.overlap)).round() as usize;
        (s(self.block_rows), s(self.block_cols))
    }

    pub fn validate(&self) -> Result<()> {
        if self.block_rows == 0 || self.block_cols == 0 {
            return Err(Error::InvalidConfig("block size must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.overlap) {
            return Err(Error::InvalidConfig(format!(
                "overlap {} outside [0, 1)",
                self.overlap
            )));
        }
        let (sr, sc) = self.stride();
        if sr == 0 || sc == 0 {
            return Err(Error::InvalidConfig(format!(
                "overlap {} leaves a zero stride for {}x{} blocks",
                self.overlap, self.block_rows, self.block_cols
            )));
        }
        Ok(())
    }
}

/// 0/1 map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMap {
    pub rows: usize,
    pub cols: usize,
    pub bits: Vec<u8>,
}

/// Integer map produced by [`hash_stack`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HashedMap {
    pub rows: usize,
    pub cols: usize,
    /// Number of hashed maps; values lie in `[0, 2^bits − 1]`.
    pub bits: usize,
    pub entries: Vec<u32>,
}

impl HashedMap {
    pub fn at(&self, i: usize, j: usize) -> u32 {
        self.entries[i * self.cols + j]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Block {
    pub row: usize,
    pub col: usize,
    pub rows: usize,
    pub cols: usize,
}

impl Block {
    pub fn area(&self) -> usize {
        self.rows * self.cols
    }
}

/// Heaviside step: 1 for strictly positive entries, 0 otherwise.
pub fn binarize(g: &DenseTensor) -> Result<BinaryMap> {
    require_matrix(g)?;
    Ok(BinaryMap {
        rows: g.rows(),
        cols: g.cols(),
        bits: g.data().iter().map(|&v| u8::from(v > 0.0)).collect(),
    })
}

/// `W = Σ_h 2^{h−1} · B_h` with `h` counted from 1 in slice order.
pub fn hash_stack(binaries: &[BinaryMap]) -> Result<HashedMap> {
    let first = binaries
        .first()
        .ok_or_else(|| Error::Empty("no maps to hash".into()))?;
    if binaries.len() > MAX_HASH_BITS {
        return Err(Error::InvalidConfig(format!(
            "cannot hash {} maps into {MAX_HASH_BITS}-bit integers",
            binaries.len()
        )));
    }
    let (rows, cols) = (first.rows, first.cols);
    if binaries.iter().any(|b| b.rows != rows || b.cols != cols) {
        return Err(Error::dims("binary maps must share shape"));
    }
    let mut entries = vec![0u32; rows * cols];
    for (h, b) in binaries.iter().enumerate() {
        for (e, &bit) in entries.iter_mut().zip(&b.bits) {
            *e |= u32::from(bit) << h;
        }
    }
    Ok(HashedMap {
        rows,
        cols,
        bits: binaries.len(),
        entries,
    })
}

fn corners(extent: usize, block: usize, stride: usize) -> Vec<usize> {
    let mut out: Vec<usize> = (0..)
        .map(|k| k * stride)
        .take_while(|&c| c + block <= extent)
        .collect();
    // Clamp a final block to the edge so no entry is dropped.
    if out.last().is_some_and(|&c| c + block < extent) {
        out.push(extent - block);
    }
    out
}

/// Blocks in row-major order of their top-left corners. Corners sit at
/// multiples of the stride; when the grid falls short of the map edge, one
/// more block is placed flush against it.
pub fn block_partition(rows: usize, cols: usize, cfg: &PoolingConfig) -> Result<Vec<Block>> {
    cfg.validate()?;
    if cfg.block_rows > rows || cfg.block_cols > cols {
        return Err(Error::InvalidConfig(format!(
            "{}x{} block does not fit a {rows}x{cols} map",
            cfg.block_rows, cfg.block_cols
        )));
    }
    let (sr, sc) = cfg.stride();
    let rs = corners(rows, cfg.block_rows, sr);
    let cs = corners(cols, cfg.block_cols, sc);
    Ok(rs
        .iter()
        .flat_map(|&r| {
            cs.iter().map(move |&c| Block {
                row: r,
                col: c,
                rows: cfg.block_rows,
                cols: cfg.block_cols,
            })
        })
        .collect())
}

/// Per-block counts of each hash value.
pub fn block_histograms(w: &HashedMap, blocks: &[Block], bins: usize) -> Result<Vec<Vec<u32>>> {
    let mut out = Vec::with_capacity(blocks.len());
    for b in blocks {
        if b.row + b.rows > w.rows || b.col + b.cols > w.cols {
            return Err(Error::dims("block outside hashed map"));
        }
        let mut hist = vec![0u32; bins];
        for i in b.row..b.row + b.rows {
            for &v in &w.entries[i * w.cols + b.col..i * w.cols + b.col + b.cols] {
                let slot = hist
                    .get_mut(v as usize)
                    .ok_or(Error::HashOutOfRange { value: v, bins })?;
                *slot += 1;
            }
        }
        out.push(hist);
    }
    Ok(out)
}

/// Feature length for `groups` hashed groups of `maps_per_group` maps each.
pub fn feature_len(groups: usize, maps_per_group: usize, blocks: usize) -> usize {
    groups * blocks * (1usize << maps_per_group)
}

/// Pooled feature of one sample: for each consecutive group of
/// `maps_per_group` maps, binarize, hash, and concatenate block histograms;
/// groups are concatenated in order.
pub fn pool_features(maps: &[DenseTensor], maps_per_group: usize, cfg: &PoolingConfig) -> Result<Vec<f64>> {
    if maps_per_group == 0 || maps.is_empty() || !maps.len().is_multiple_of(maps_per_group) {
        return Err(Error::dims(format!(
            "{} maps cannot be split into groups of {maps_per_group}",
            maps.len()
        )));
    }
    require_matrix(&maps[0])?;
    let (rows, cols) = (maps[0].rows(), maps[0].cols());
    let blocks = block_partition(rows, cols, cfg)?;
    let bins = 1usize << maps_per_group.min(MAX_HASH_BITS + 1);
    let groups = maps.len() / maps_per_group;
    let mut out = Vec::with_capacity(feature_len(groups, maps_per_group, blocks.len()));
    for group in maps.chunks(maps_per_group) {
        let binaries = group.iter().map(binarize).collect::<Result<Vec<_>>>()?;
        let hashed = hash_stack(&binaries)?;
        for hist in block_histograms(&hashed, &blocks, bins)? {
            out.extend(hist.into_iter().map(f64::from));
        }
    }
    Ok(out)
}
