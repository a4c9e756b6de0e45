use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const MAX_DIM: usize = 3;

/// Cap on `n * depth`; beyond this a single cell vector no longer fits in
/// memory comfortably.
pub const MAX_CELL_BITS: usize = 30;

/// The unit cube `[0,1)^n` cut into dyadic cubes down to side `2^{-depth}`.
///
/// Cubes of one level are indexed row-major with the first coordinate most
/// significant, so cell `i` of the finest level is the `i`-th entry of every
/// cell vector in the crate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DyadicModel {
    dim: usize,
    depth: usize,
}

impl DyadicModel {
    pub fn new(dim: usize, depth: usize) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        let max_depth = MAX_CELL_BITS / dim;
        if depth == 0 || depth > max_depth {
            return Err(Error::UnsupportedDepth(depth, max_depth));
        }
        Ok(DyadicModel { dim, depth })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn with_depth(&self, depth: usize) -> Result<Self> {
        DyadicModel::new(self.dim, depth)
    }

    pub fn cell_count(&self) -> usize {
        1 << (self.dim * self.depth)
    }

    pub fn cubes_at(&self, level: usize) -> usize {
        1 << (self.dim * level)
    }

    pub fn cube_count(&self) -> usize {
        (0..=self.depth).map(|k| self.cubes_at(k)).sum()
    }

    pub fn children_per_cube(&self) -> usize {
        1 << self.dim
    }

    pub fn signatures_per_cube(&self) -> usize {
        (1 << self.dim) - 1
    }

    /// `log2 |Q|` for a cube of the given level.
    pub fn volume_log2(&self, level: usize) -> i32 {
        -((self.dim * level) as i32)
    }

    pub fn volume<S: Scalar>(&self, level: usize) -> S {
        S::pow2(self.volume_log2(level))
    }

    pub fn cell_volume<S: Scalar>(&self) -> S {
        self.volume(self.depth)
    }

    pub fn root(&self) -> CubeId {
        CubeId::root(self.dim)
    }

    pub fn check(&self, cube: &CubeId) -> Result<()> {
        if cube.dim() != self.dim {
            return Err(Error::UnsupportedDimension(cube.dim()));
        }
        if cube.level() > self.depth {
            return Err(Error::CubeOutOfModel {
                level: cube.level,
                depth: self.depth,
            });
        }
        Ok(())
    }

    pub fn encode(&self, level: usize, pos: &[u32]) -> usize {
        pos.iter().enumerate().fold(0usize, |acc, (i, &q)| {
            acc | ((q as usize) << (level * (self.dim - 1 - i)))
        })
    }

    pub fn decode(&self, level: usize, idx: usize) -> [u32; MAX_DIM] {
        let mask = (1usize << level) - 1;
        let mut pos = [0u32; MAX_DIM];
        for (i, p) in pos.iter_mut().enumerate().take(self.dim) {
            *p = ((idx >> (level * (self.dim - 1 - i))) & mask) as u32;
        }
        pos
    }

    pub fn index(&self, cube: &CubeId) -> usize {
        debug_assert_eq!(cube.dim(), self.dim);
        self.encode(cube.level(), cube.pos())
    }

    pub fn cube(&self, level: usize, idx: usize) -> CubeId {
        CubeId {
            level: level as u32,
            pos: self.decode(level, idx),
            dim: self.dim as u8,
        }
    }

    pub fn cell_cube(&self, cell: usize) -> CubeId {
        self.cube(self.depth, cell)
    }

    pub fn parent_index(&self, level: usize, idx: usize) -> usize {
        let mut pos = self.decode(level, idx);
        for p in pos.iter_mut() {
            *p >>= 1;
        }
        self.encode(level - 1, &pos[..self.dim])
    }

    /// Index at `level` of the ancestor of cube `idx` at `from_level`.
    pub fn ancestor_index(&self, from_level: usize, idx: usize, level: usize) -> usize {
        let shift = from_level - level;
        let mut pos = self.decode(from_level, idx);
        for p in pos.iter_mut() {
            *p >>= shift;
        }
        self.encode(level, &pos[..self.dim])
    }

    /// Index of child `bits` of cube `idx` at `level`; bit `i` of `bits`
    /// selects the upper half in coordinate `i`.
    pub fn child_index(&self, level: usize, idx: usize, bits: usize) -> usize {
        let mut pos = self.decode(level, idx);
        for (i, p) in pos.iter_mut().enumerate().take(self.dim) {
            *p = 2 * *p + ((bits >> i) & 1) as u32;
        }
        self.encode(level + 1, &pos[..self.dim])
    }

    pub fn children_indices(&self, level: usize, idx: usize) -> Vec<usize> {
        (0..self.children_per_cube())
            .map(|c| self.child_index(level, idx, c))
            .collect()
    }

    /// Which child of its parent cube `idx` at `level` is.
    pub fn child_bits(&self, level: usize, idx: usize) -> usize {
        let pos = self.decode(level, idx);
        (0..self.dim).fold(0, |acc, i| acc | (((pos[i] & 1) as usize) << i))
    }

    /// Indices of the cubes at `level` contained in `base`, in increasing order.
    pub fn indices_within(&self, base: &CubeId, level: usize) -> Vec<usize> {
        let bl = base.level();
        assert!(level >= bl, "level above the base cube");
        let shift = level - bl;
        let span = 1u32 << shift;
        let lo: Vec<u32> = base.pos().iter().map(|&p| p << shift).collect();
        let mut out = Vec::with_capacity(1 << (self.dim * shift));
        let mut offs = [0u32; MAX_DIM];
        loop {
            let pos: Vec<u32> = (0..self.dim).map(|i| lo[i] + offs[i]).collect();
            out.push(self.encode(level, &pos));
            // odometer with the last coordinate fastest, matching row-major order
            let mut i = self.dim;
            loop {
                if i == 0 {
                    return out;
                }
                i -= 1;
                offs[i] += 1;
                if offs[i] < span {
                    break;
                }
                offs[i] = 0;
            }
        }
    }

    pub fn cells_within(&self, base: &CubeId) -> Vec<usize> {
        self.indices_within(base, self.depth)
    }

    /// Every cube of the model, coarsest level first.
    pub fn cubes(&self) -> impl Iterator<Item = CubeId> + '_ {
        (0..=self.depth).flat_map(move |k| (0..self.cubes_at(k)).map(move |i| self.cube(k, i)))
    }

    /// Cubes contained in `base`, coarsest level first.
    pub fn cubes_within<'a>(&'a self, base: &'a CubeId) -> impl Iterator<Item = CubeId> + 'a {
        (base.level()..=self.depth).flat_map(move |k| {
            self.indices_within(base, k)
                .into_iter()
                .map(move |i| self.cube(k, i))
        })
    }
}

/// A dyadic cube, identified by its level and integer position.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "CubeRecord", into = "CubeRecord")]
pub struct CubeId {
    level: u32,
    pos: [u32; MAX_DIM],
    dim: u8,
}

#[derive(Serialize, Deserialize)]
struct CubeRecord {
    level: u32,
    pos: Vec<u32>,
}

impl TryFrom<CubeRecord> for CubeId {
    type Error = Error;

    fn try_from(r: CubeRecord) -> Result<Self> {
        CubeId::new(r.level, &r.pos)
    }
}

impl From<CubeId> for CubeRecord {
    fn from(c: CubeId) -> Self {
        CubeRecord {
            level: c.level,
            pos: c.pos().to_vec(),
        }
    }
}

impl CubeId {
    pub fn new(level: u32, pos: &[u32]) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&pos.len()) {
            return Err(Error::UnsupportedDimension(pos.len()));
        }
        if level >= 32 || pos.iter().any(|&p| (p as u64) >= (1u64 << level)) {
            return Err(Error::Parse(format!(
                "position {pos:?} out of range for level {level}"
            )));
        }
        let mut arr = [0u32; MAX_DIM];
        arr[..pos.len()].copy_from_slice(pos);
        Ok(CubeId {
            level,
            pos: arr,
            dim: pos.len() as u8,
        })
    }

    pub fn root(dim: usize) -> Self {
        CubeId {
            level: 0,
            pos: [0; MAX_DIM],
            dim: dim as u8,
        }
    }

    pub fn level(&self) -> usize {
        self.level as usize
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn pos(&self) -> &[u32] {
        &self.pos[..self.dim as usize]
    }

    pub fn parent(&self) -> Option<CubeId> {
        (self.level > 0).then(|| self.ancestor(self.level() - 1))
    }

    pub fn ancestor(&self, level: usize) -> CubeId {
        assert!(level <= self.level());
        let shift = self.level() - level;
        let mut pos = self.pos;
        for p in pos.iter_mut() {
            *p >>= shift;
        }
        CubeId {
            level: level as u32,
            pos,
            dim: self.dim,
        }
    }

    pub fn child(&self, bits: usize) -> CubeId {
        let mut pos = self.pos;
        for (i, p) in pos.iter_mut().enumerate().take(self.dim()) {
            *p = 2 * *p + ((bits >> i) & 1) as u32;
        }
        CubeId {
            level: self.level + 1,
            pos,
            dim: self.dim,
        }
    }

    pub fn children(&self) -> impl Iterator<Item = CubeId> + '_ {
        (0..1usize << self.dim).map(move |c| self.child(c))
    }

    /// Whether `other` is contained in `self` (non-strict).
    pub fn contains(&self, other: &CubeId) -> bool {
        other.dim == self.dim && other.level >= self.level && other.ancestor(self.level()) == *self
    }

    pub fn volume<S: Scalar>(&self) -> S {
        S::pow2(-((self.dim() * self.level()) as i32))
    }

    /// Lower corner and side length.
    pub fn corner(&self) -> (Vec<f64>, f64) {
        let side = 0.5f64.powi(self.level as i32);
        (self.pos().iter().map(|&p| p as f64 * side).collect(), side)
    }
}

impl fmt::Debug for CubeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Q{}{:?}", self.level, self.pos())
    }
}

impl fmt::Display for CubeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// A Haar signature: bit `i` set means the factor in coordinate `i` is the
/// normalized indicator rather than the oscillating Haar function. The all-ones
/// signature is the non-cancellative one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Signature {
    bits: u8,
    dim: u8,
}

impl Signature {
    pub fn new(bits: u8, dim: usize) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        if (bits as usize) >> dim != 0 {
            return Err(Error::Parse(format!("signature {bits:#b} too wide")));
        }
        Ok(Signature {
            bits,
            dim: dim as u8,
        })
    }

    pub fn all_ones(dim: usize) -> Self {
        Signature {
            bits: ((1usize << dim) - 1) as u8,
            dim: dim as u8,
        }
    }

    /// The `2^n - 1` cancellative signatures, in increasing bit order; the
    /// position in this list equals `bits`.
    pub fn cancellative(dim: usize) -> impl Iterator<Item = Signature> {
        (0..(1u8 << dim) - 1).map(move |bits| Signature {
            bits,
            dim: dim as u8,
        })
    }

    pub fn bits(&self) -> u8 {
        self.bits
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn is_cancellative(&self) -> bool {
        *self != Signature::all_ones(self.dim())
    }

    /// Sign of `h_Q^ε` on the child selected by `child_bits`.
    pub fn sign_on_child(&self, child_bits: usize) -> i32 {
        sign_on_child(self.bits as usize, child_bits, self.dim())
    }

    /// The signature of the product `h^ε h^η` on each child, bitwise XNOR.
    pub fn induced(&self, other: &Signature) -> Signature {
        let mask = (1u8 << self.dim) - 1;
        Signature {
            bits: !(self.bits ^ other.bits) & mask,
            dim: self.dim,
        }
    }
}

pub(crate) fn sign_on_child(sig: usize, child: usize, dim: usize) -> i32 {
    let mask = (1usize << dim) - 1;
    if (!sig & !child & mask).count_ones() % 2 == 1 {
        -1
    } else {
        1
    }
}

/// One value per dyadic cube of a model, stored level by level.
#[derive(Clone, Debug, PartialEq)]
pub struct CubeMap<T> {
    model: DyadicModel,
    levels: Vec<Vec<T>>,
}

impl<T: Clone> CubeMap<T> {
    pub fn filled(model: DyadicModel, value: T) -> Self {
        CubeMap {
            model,
            levels: (0..=model.depth())
                .map(|k| vec![value.clone(); model.cubes_at(k)])
                .collect(),
        }
    }
}

impl<T> CubeMap<T> {
    pub(crate) fn from_levels(model: DyadicModel, levels: Vec<Vec<T>>) -> Self {
        debug_assert_eq!(levels.len(), model.depth() + 1);
        CubeMap { model, levels }
    }

    pub fn from_fn(model: DyadicModel, mut f: impl FnMut(usize, usize) -> T) -> Self {
        CubeMap {
            model,
            levels: (0..=model.depth())
                .map(|k| (0..model.cubes_at(k)).map(|i| f(k, i)).collect())
                .collect(),
        }
    }

    pub fn model(&self) -> &DyadicModel {
        &self.model
    }

    pub fn get(&self, level: usize, idx: usize) -> &T {
        &self.levels[level][idx]
    }

    pub fn get_mut(&mut self, level: usize, idx: usize) -> &mut T {
        &mut self.levels[level][idx]
    }

    pub fn at(&self, cube: &CubeId) -> &T {
        &self.levels[cube.level()][self.model.index(cube)]
    }

    pub fn at_mut(&mut self, cube: &CubeId) -> &mut T {
        let idx = self.model.index(cube);
        &mut self.levels[cube.level()][idx]
    }

    pub fn level(&self, level: usize) -> &[T] {
        &self.levels[level]
    }

    pub fn level_mut(&mut self, level: usize) -> &mut [T] {
        &mut self.levels[level]
    }
}
