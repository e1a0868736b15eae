//! Exact clopen subsets of the Cantor line and the Cantor plane, stored as
//! cell bitsets at an explicit depth.
//!
//! A one-dimensional set at depth `d` is a set of words of length `d`; a
//! two-dimensional set is a set of word pairs. Every operation refines its
//! operands to a common depth first, so all measure comparisons downstream
//! are exact dyadic equalities. Depth is capped by configuration; exceeding
//! the cap is an error, never a silent approximation.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::bitword::BitWord;
use crate::dyadic::Dyadic;

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum Dim {
    One,
    Two,
}

impl Dim {
    fn factor(self) -> usize {
        match self {
            Dim::One => 1,
            Dim::Two => 2,
        }
    }
}

/// Depth ceilings per dimension. The defaults keep the largest bitset at
/// 2^24 bits; `CANTOR_DEPTH_CAP` can override them through the CLI.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DepthCaps {
    pub dim1: usize,
    pub dim2: usize,
}

impl Default for DepthCaps {
    fn default() -> Self {
        DepthCaps { dim1: 16, dim2: 12 }
    }
}

impl DepthCaps {
    pub fn cap(&self, dim: Dim) -> usize {
        match dim {
            Dim::One => self.dim1,
            Dim::Two => self.dim2,
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum BitcoreError {
    #[error("dimension mismatch")]
    DimensionMismatch,
    #[error("bad length: {0}")]
    BadLength(String),
    #[error("depth cap exceeded: depth {depth} over cap {cap} (dim {dim:?})")]
    DepthCapExceeded { dim: Dim, depth: usize, cap: usize },
    #[error("bad format: {0}")]
    BadFormat(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoolOp {
    Union,
    Intersect,
    Difference,
    Complement,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    Vertical,
    Horizontal,
}

/// A clopen set at explicit depth, as a bitset over the depth-`d` cells.
///
/// Cell index for dim 1 is the word value MSB-first; for dim 2 it is
/// `row * 2^d + col` where the row is the first coordinate.
#[derive(Clone, PartialEq, Eq)]
pub struct ClopenSet {
    dim: Dim,
    depth: usize,
    words: Vec<u64>,
}

fn words_for(nbits: usize) -> usize {
    nbits.div_ceil(64)
}

impl ClopenSet {
    fn raw(dim: Dim, depth: usize) -> Self {
        let nbits = 1usize << (depth * dim.factor());
        ClopenSet {
            dim,
            depth,
            words: vec![0; words_for(nbits)],
        }
    }

    fn check_depth(dim: Dim, depth: usize, caps: &DepthCaps) -> Result<(), BitcoreError> {
        if depth > caps.cap(dim) {
            return Err(BitcoreError::DepthCapExceeded {
                dim,
                depth,
                cap: caps.cap(dim),
            });
        }
        Ok(())
    }

    pub fn empty(dim: Dim, depth: usize, caps: &DepthCaps) -> Result<Self, BitcoreError> {
        Self::check_depth(dim, depth, caps)?;
        Ok(Self::raw(dim, depth))
    }

    pub fn full(dim: Dim, depth: usize, caps: &DepthCaps) -> Result<Self, BitcoreError> {
        let mut s = Self::empty(dim, depth, caps)?;
        let nbits = s.nbits();
        for (i, w) in s.words.iter_mut().enumerate() {
            let lo = i * 64;
            if lo + 64 <= nbits {
                *w = u64::MAX;
            } else {
                *w = (1u64 << (nbits - lo)) - 1;
            }
        }
        Ok(s)
    }

    /// The diagonal cells `{(w, w)}` at the given depth.
    pub fn diagonal(depth: usize, caps: &DepthCaps) -> Result<Self, BitcoreError> {
        let mut s = Self::empty(Dim::Two, depth, caps)?;
        for r in 0..1usize << depth {
            s.set_cell((r << depth) | r);
        }
        Ok(s)
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    fn nbits(&self) -> usize {
        1usize << (self.depth * self.dim.factor())
    }

    fn set_cell(&mut self, idx: usize) {
        self.words[idx / 64] |= 1u64 << (idx % 64);
    }

    fn clear_cell(&mut self, idx: usize) {
        self.words[idx / 64] &= !(1u64 << (idx % 64));
    }

    pub fn has_cell(&self, idx: usize) -> bool {
        (self.words[idx / 64] >> (idx % 64)) & 1 == 1
    }

    pub fn cell_count(&self) -> u64 {
        self.words.iter().map(|w| u64::from(w.count_ones())).sum()
    }

    pub fn is_set_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Exact measure: cells over `2^(depth * dim)`.
    pub fn measure(&self) -> Dyadic {
        Dyadic::new(
            u128::from(self.cell_count()),
            (self.depth * self.dim.factor()) as u32,
        )
    }

    pub fn iter_cells(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(i, &w)| {
            let mut w = w;
            let mut out = Vec::new();
            while w != 0 {
                let t = w.trailing_zeros() as usize;
                out.push(i * 64 + t);
                w &= w - 1;
            }
            out
        })
    }

    /// Decode a dim-1 cell index into its word.
    pub fn cell_word(&self, idx: usize) -> BitWord {
        debug_assert_eq!(self.dim, Dim::One);
        BitWord::from_index(idx, self.depth)
    }

    /// Decode a dim-2 cell index into its (row, col) word pair.
    pub fn cell_pair(&self, idx: usize) -> (BitWord, BitWord) {
        debug_assert_eq!(self.dim, Dim::Two);
        let mask = (1usize << self.depth) - 1;
        (
            BitWord::from_index(idx >> self.depth, self.depth),
            BitWord::from_index(idx & mask, self.depth),
        )
    }

    /// Insert the whole cylinder (dim 1) below a word of length <= depth.
    pub fn insert_cylinder(&mut self, w: &BitWord) -> Result<(), BitcoreError> {
        if self.dim != Dim::One {
            return Err(BitcoreError::DimensionMismatch);
        }
        if w.len() > self.depth {
            return Err(BitcoreError::BadLength(format!(
                "generator word {} longer than depth {}",
                w, self.depth
            )));
        }
        let shift = self.depth - w.len();
        let base = w.to_index() << shift;
        for i in base..base + (1usize << shift) {
            self.set_cell(i);
        }
        Ok(())
    }

    /// Insert the whole rectangle (dim 2) below a pair of words.
    pub fn insert_rectangle(&mut self, a: &BitWord, b: &BitWord) -> Result<(), BitcoreError> {
        if self.dim != Dim::Two {
            return Err(BitcoreError::DimensionMismatch);
        }
        if a.len() > self.depth || b.len() > self.depth {
            return Err(BitcoreError::BadLength(format!(
                "generator rectangle ({}, {}) deeper than {}",
                a, b, self.depth
            )));
        }
        let (sa, sb) = (self.depth - a.len(), self.depth - b.len());
        let (ra, rb) = (a.to_index() << sa, b.to_index() << sb);
        for r in ra..ra + (1usize << sa) {
            for c in rb..rb + (1usize << sb) {
                self.set_cell((r << self.depth) | c);
            }
        }
        Ok(())
    }

    pub fn remove_cell_pair(&mut self, a: &BitWord, b: &BitWord) -> Result<(), BitcoreError> {
        if self.dim != Dim::Two {
            return Err(BitcoreError::DimensionMismatch);
        }
        if a.len() != self.depth || b.len() != self.depth {
            return Err(BitcoreError::BadLength("cell length != depth".into()));
        }
        self.clear_cell((a.to_index() << self.depth) | b.to_index());
        Ok(())
    }

    /// Re-present the same set at a deeper depth.
    pub fn refine(&self, depth: usize, caps: &DepthCaps) -> Result<Self, BitcoreError> {
        if depth < self.depth {
            return Err(BitcoreError::BadLength(format!(
                "cannot refine depth {} down to {}",
                self.depth, depth
            )));
        }
        Self::check_depth(self.dim, depth, caps)?;
        if depth == self.depth {
            return Ok(self.clone());
        }
        let delta = depth - self.depth;
        let mut out = Self::raw(self.dim, depth);
        match self.dim {
            Dim::One => {
                for idx in self.iter_cells() {
                    let base = idx << delta;
                    for i in base..base + (1usize << delta) {
                        out.set_cell(i);
                    }
                }
            }
            Dim::Two => {
                let mask = (1usize << self.depth) - 1;
                for idx in self.iter_cells() {
                    let (r, c) = (idx >> self.depth, idx & mask);
                    for nr in (r << delta)..((r + 1) << delta) {
                        for nc in (c << delta)..((c + 1) << delta) {
                            out.set_cell((nr << depth) | nc);
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// Coarsen back to a shallower depth when the set is a union of cells at
    /// that depth; `None` otherwise.
    pub fn try_coarsen(&self, depth: usize) -> Option<Self> {
        if depth > self.depth {
            return None;
        }
        let gens1;
        let gens2;
        let mut out = Self::raw(self.dim, depth);
        match self.dim {
            Dim::One => {
                gens1 = self.generators_dim1();
                for g in &gens1 {
                    if g.len() > depth {
                        return None;
                    }
                }
                for g in &gens1 {
                    out.insert_cylinder(g).ok()?;
                }
            }
            Dim::Two => {
                gens2 = self.generators_dim2();
                for (a, b) in &gens2 {
                    if a.len() > depth || b.len() > depth {
                        return None;
                    }
                }
                for (a, b) in &gens2 {
                    out.insert_rectangle(a, b).ok()?;
                }
            }
        }
        Some(out)
    }

    fn zip_words(&self, other: &Self, f: impl Fn(u64, u64) -> u64) -> Self {
        let mut out = Self::raw(self.dim, self.depth);
        for (o, (a, b)) in out
            .words
            .iter_mut()
            .zip(self.words.iter().zip(other.words.iter()))
        {
            *o = f(*a, *b);
        }
        out.mask_tail();
        out
    }

    fn mask_tail(&mut self) {
        let nbits = self.nbits();
        if !nbits.is_multiple_of(64) {
            let last = self.words.len() - 1;
            self.words[last] &= (1u64 << (nbits % 64)) - 1;
        }
    }

    fn at_common_depth(&self, other: &Self, caps: &DepthCaps) -> Result<(Self, Self), BitcoreError> {
        if self.dim != other.dim {
            return Err(BitcoreError::DimensionMismatch);
        }
        let d = self.depth.max(other.depth);
        Ok((self.refine(d, caps)?, other.refine(d, caps)?))
    }

    pub fn union(&self, other: &Self, caps: &DepthCaps) -> Result<Self, BitcoreError> {
        let (a, b) = self.at_common_depth(other, caps)?;
        Ok(a.zip_words(&b, |x, y| x | y))
    }

    pub fn intersect(&self, other: &Self, caps: &DepthCaps) -> Result<Self, BitcoreError> {
        let (a, b) = self.at_common_depth(other, caps)?;
        Ok(a.zip_words(&b, |x, y| x & y))
    }

    pub fn difference(&self, other: &Self, caps: &DepthCaps) -> Result<Self, BitcoreError> {
        let (a, b) = self.at_common_depth(other, caps)?;
        Ok(a.zip_words(&b, |x, y| x & !y))
    }

    pub fn complement_set(&self) -> Self {
        let mut out = Self::raw(self.dim, self.depth);
        for (o, a) in out.words.iter_mut().zip(self.words.iter()) {
            *o = !a;
        }
        out.mask_tail();
        out
    }

    pub fn is_subset_of(&self, other: &Self, caps: &DepthCaps) -> Result<bool, BitcoreError> {
        let (a, b) = self.at_common_depth(other, caps)?;
        Ok(a.words.iter().zip(b.words.iter()).all(|(x, y)| x & !y == 0))
    }

    /// XOR-translate by a word (dim 1); requires `|s| <= depth`.
    pub fn translate1(&self, s: &BitWord) -> Result<Self, BitcoreError> {
        if self.dim != Dim::One {
            return Err(BitcoreError::DimensionMismatch);
        }
        if s.len() > self.depth {
            return Err(BitcoreError::BadLength(format!(
                "translation word {} longer than depth {}",
                s, self.depth
            )));
        }
        let mask = s.to_index() << (self.depth - s.len());
        let mut out = Self::raw(self.dim, self.depth);
        for idx in self.iter_cells() {
            out.set_cell(idx ^ mask);
        }
        Ok(out)
    }

    /// XOR-translate coordinatewise by a pair of words (dim 2).
    pub fn translate2(&self, s: &BitWord, t: &BitWord) -> Result<Self, BitcoreError> {
        if self.dim != Dim::Two {
            return Err(BitcoreError::DimensionMismatch);
        }
        if s.len() > self.depth || t.len() > self.depth {
            return Err(BitcoreError::BadLength(format!(
                "translation pair ({}, {}) longer than depth {}",
                s, t, self.depth
            )));
        }
        let mr = s.to_index() << (self.depth - s.len());
        let mc = t.to_index() << (self.depth - t.len());
        let dmask = (1usize << self.depth) - 1;
        let mut out = Self::raw(self.dim, self.depth);
        for idx in self.iter_cells() {
            let (r, c) = (idx >> self.depth, idx & dmask);
            out.set_cell(((r ^ mr) << self.depth) | (c ^ mc));
        }
        Ok(out)
    }

    /// Exact section of a dim-2 set at a full-depth word. `Vertical` fixes
    /// the first coordinate, `Horizontal` the second.
    pub fn section(&self, w: &BitWord, axis: Axis) -> Result<Self, BitcoreError> {
        if self.dim != Dim::Two {
            return Err(BitcoreError::DimensionMismatch);
        }
        if w.len() != self.depth {
            return Err(BitcoreError::BadLength(format!(
                "section word {} must have length {}",
                w, self.depth
            )));
        }
        let fixed = w.to_index();
        let mut out = Self::raw(Dim::One, self.depth);
        match axis {
            Axis::Vertical => {
                for c in 0..1usize << self.depth {
                    if self.has_cell((fixed << self.depth) | c) {
                        out.set_cell(c);
                    }
                }
            }
            Axis::Horizontal => {
                for r in 0..1usize << self.depth {
                    if self.has_cell((r << self.depth) | fixed) {
                        out.set_cell(r);
                    }
                }
            }
        }
        Ok(out)
    }

    /// Swap the two coordinates.
    pub fn swap(&self) -> Result<Self, BitcoreError> {
        if self.dim != Dim::Two {
            return Err(BitcoreError::DimensionMismatch);
        }
        let dmask = (1usize << self.depth) - 1;
        let mut out = Self::raw(self.dim, self.depth);
        for idx in self.iter_cells() {
            let (r, c) = (idx >> self.depth, idx & dmask);
            out.set_cell((c << self.depth) | r);
        }
        Ok(out)
    }

    /// `A ∩ A^{-1}`: the swap-invariant core.
    pub fn symmetrize(&self, caps: &DepthCaps) -> Result<Self, BitcoreError> {
        let swapped = self.swap()?;
        self.intersect(&swapped, caps)
    }

    /// Complement the first coordinate on all positions >= `from`. Equals the
    /// translation by `(zeros(from) ++ ones(depth - from), zeros(depth))`.
    pub fn flip_first_coordinate(&self, from: usize) -> Result<Self, BitcoreError> {
        if self.dim != Dim::Two {
            return Err(BitcoreError::DimensionMismatch);
        }
        if from > self.depth {
            return Err(BitcoreError::BadLength(format!(
                "flip position {} beyond depth {}",
                from, self.depth
            )));
        }
        let rmask = (1usize << (self.depth - from)) - 1;
        let dmask = (1usize << self.depth) - 1;
        let mut out = Self::raw(self.dim, self.depth);
        for idx in self.iter_cells() {
            let (r, c) = (idx >> self.depth, idx & dmask);
            out.set_cell(((r ^ rmask) << self.depth) | c);
        }
        Ok(out)
    }

    /// Whether the cylinder below `w` is contained in a dim-1 set. Words may
    /// be longer than the depth; bits beyond the depth are invisible to the
    /// set and do not matter.
    pub fn contains_cylinder(&self, w: &BitWord) -> Result<bool, BitcoreError> {
        if self.dim != Dim::One {
            return Err(BitcoreError::DimensionMismatch);
        }
        if w.len() >= self.depth {
            return Ok(self.has_cell(w.prefix(self.depth).to_index()));
        }
        let shift = self.depth - w.len();
        let base = w.to_index() << shift;
        Ok((base..base + (1usize << shift)).all(|i| self.has_cell(i)))
    }

    /// Whether the rectangle `[a] x [b]` is contained in a dim-2 set,
    /// evaluated at the set's own resolution.
    pub fn contains_rectangle(&self, a: &BitWord, b: &BitWord) -> Result<bool, BitcoreError> {
        if self.dim != Dim::Two {
            return Err(BitcoreError::DimensionMismatch);
        }
        let (ra, na) = if a.len() >= self.depth {
            (a.prefix(self.depth).to_index(), 1usize)
        } else {
            (a.to_index() << (self.depth - a.len()), 1usize << (self.depth - a.len()))
        };
        let (rb, nb) = if b.len() >= self.depth {
            (b.prefix(self.depth).to_index(), 1usize)
        } else {
            (b.to_index() << (self.depth - b.len()), 1usize << (self.depth - b.len()))
        };
        for r in ra..ra + na {
            for c in rb..rb + nb {
                if !self.has_cell((r << self.depth) | c) {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// Exact measure of the intersection with the rectangle `[a] x [b]`,
    /// evaluated at the set's own resolution (words may exceed the depth,
    /// in which case the shadow cell at the depth is used).
    pub fn measure_within_rectangle(&self, a: &BitWord, b: &BitWord) -> Result<Dyadic, BitcoreError> {
        if self.dim != Dim::Two {
            return Err(BitcoreError::DimensionMismatch);
        }
        // Portions of [a] or [b] below the presentation depth scale the
        // result by the invisible tail.
        let extra_a = a.len().saturating_sub(self.depth);
        let extra_b = b.len().saturating_sub(self.depth);
        let (ra, na) = if a.len() >= self.depth {
            (a.prefix(self.depth).to_index(), 1usize)
        } else {
            (a.to_index() << (self.depth - a.len()), 1usize << (self.depth - a.len()))
        };
        let (rb, nb) = if b.len() >= self.depth {
            (b.prefix(self.depth).to_index(), 1usize)
        } else {
            (b.to_index() << (self.depth - b.len()), 1usize << (self.depth - b.len()))
        };
        let mut count: u128 = 0;
        for r in ra..ra + na {
            for c in rb..rb + nb {
                if self.has_cell((r << self.depth) | c) {
                    count += 1;
                }
            }
        }
        Ok(Dyadic::new(
            count,
            (2 * self.depth + extra_a + extra_b) as u32,
        ))
    }

    /// Canonical maximal-cylinder decomposition of a dim-1 set, in
    /// lexicographic order.
    pub fn generators_dim1(&self) -> Vec<BitWord> {
        debug_assert_eq!(self.dim, Dim::One);
        let mut out = Vec::new();
        self.gen1_rec(&BitWord::empty(), &mut out);
        out.sort();
        out
    }

    fn cyl_state(&self, w: &BitWord) -> (bool, bool) {
        // (all set, any set) over the cylinder below w
        let shift = self.depth - w.len();
        let base = w.to_index() << shift;
        let mut all = true;
        let mut any = false;
        for i in base..base + (1usize << shift) {
            if self.has_cell(i) {
                any = true;
            } else {
                all = false;
            }
        }
        (all, any)
    }

    fn gen1_rec(&self, w: &BitWord, out: &mut Vec<BitWord>) {
        let (all, any) = self.cyl_state(w);
        if all {
            out.push(w.clone());
        } else if any {
            self.gen1_rec(&w.append_bit(false), out);
            self.gen1_rec(&w.append_bit(true), out);
        }
    }

    /// Canonical square-block decomposition of a dim-2 set, in lexicographic
    /// order of the word pairs.
    pub fn generators_dim2(&self) -> Vec<(BitWord, BitWord)> {
        debug_assert_eq!(self.dim, Dim::Two);
        let mut out = Vec::new();
        self.gen2_rec(&BitWord::empty(), &BitWord::empty(), &mut out);
        out.sort();
        out
    }

    fn rect_state(&self, a: &BitWord, b: &BitWord) -> (bool, bool) {
        let (sa, sb) = (self.depth - a.len(), self.depth - b.len());
        let (ra, rb) = (a.to_index() << sa, b.to_index() << sb);
        let mut all = true;
        let mut any = false;
        for r in ra..ra + (1usize << sa) {
            for c in rb..rb + (1usize << sb) {
                if self.has_cell((r << self.depth) | c) {
                    any = true;
                } else {
                    all = false;
                }
            }
        }
        (all, any)
    }

    fn gen2_rec(&self, a: &BitWord, b: &BitWord, out: &mut Vec<(BitWord, BitWord)>) {
        let (all, any) = self.rect_state(a, b);
        if all {
            out.push((a.clone(), b.clone()));
        } else if any {
            for ba in [false, true] {
                for bb in [false, true] {
                    self.gen2_rec(&a.append_bit(ba), &b.append_bit(bb), out);
                }
            }
        }
    }

    /// Build from generator words (dim 1) or rectangles (dim 2).
    pub fn from_generators1(
        depth: usize,
        gens: &[BitWord],
        caps: &DepthCaps,
    ) -> Result<Self, BitcoreError> {
        let mut s = Self::empty(Dim::One, depth, caps)?;
        for g in gens {
            s.insert_cylinder(g)?;
        }
        Ok(s)
    }

    pub fn from_generators2(
        depth: usize,
        gens: &[(BitWord, BitWord)],
        caps: &DepthCaps,
    ) -> Result<Self, BitcoreError> {
        let mut s = Self::empty(Dim::Two, depth, caps)?;
        for (a, b) in gens {
            s.insert_rectangle(a, b)?;
        }
        Ok(s)
    }

    /// Serialize in the `.cset` text format.
    pub fn to_cset(&self) -> String {
        let mut out = String::new();
        let dim = match self.dim {
            Dim::One => 1,
            Dim::Two => 2,
        };
        let _ = writeln!(out, "cset {} {}", dim, self.depth);
        match self.dim {
            Dim::One => {
                for g in self.generators_dim1() {
                    let _ = writeln!(out, "c {}", g);
                }
            }
            Dim::Two => {
                for (a, b) in self.generators_dim2() {
                    let _ = writeln!(out, "r {} {}", a, b);
                }
            }
        }
        out
    }

    /// Parse the `.cset` text format.
    pub fn from_cset(text: &str, caps: &DepthCaps) -> Result<Self, BitcoreError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| BitcoreError::BadFormat("empty cset".into()))?;
        let mut parts = header.split_whitespace();
        if parts.next() != Some("cset") {
            return Err(BitcoreError::BadFormat("missing cset header".into()));
        }
        let dim: usize = parts
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| BitcoreError::BadFormat("bad dim".into()))?;
        let depth: usize = parts
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| BitcoreError::BadFormat("bad depth".into()))?;
        let dim = match dim {
            1 => Dim::One,
            2 => Dim::Two,
            _ => return Err(BitcoreError::BadFormat("dim must be 1 or 2".into())),
        };
        let mut s = Self::empty(dim, depth, caps)?;
        for line in lines {
            let mut parts = line.split_whitespace();
            match (parts.next(), dim) {
                (Some("c"), Dim::One) => {
                    let w: BitWord = parts
                        .next()
                        .ok_or_else(|| BitcoreError::BadFormat("missing word".into()))?
                        .parse()
                        .map_err(|e| BitcoreError::BadFormat(format!("{e}")))?;
                    s.insert_cylinder(&w)?;
                }
                (Some("r"), Dim::Two) => {
                    let a: BitWord = parts
                        .next()
                        .ok_or_else(|| BitcoreError::BadFormat("missing word".into()))?
                        .parse()
                        .map_err(|e| BitcoreError::BadFormat(format!("{e}")))?;
                    let b: BitWord = parts
                        .next()
                        .ok_or_else(|| BitcoreError::BadFormat("missing word".into()))?
                        .parse()
                        .map_err(|e| BitcoreError::BadFormat(format!("{e}")))?;
                    s.insert_rectangle(&a, &b)?;
                }
                (Some(tag), _) => {
                    return Err(BitcoreError::BadFormat(format!(
                        "unexpected line tag {tag:?} for dim {dim:?}"
                    )))
                }
                (None, _) => {}
            }
        }
        Ok(s)
    }
}

impl std::fmt::Debug for ClopenSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "ClopenSet(dim {:?}, depth {}, {} cells)",
            self.dim,
            self.depth,
            self.cell_count()
        )
    }
}

/// Dispatcher mirroring the operation table: complement is unary, the rest
/// refine both operands to a common depth.
pub fn boolean_combine(
    op: BoolOp,
    a: &ClopenSet,
    b: Option<&ClopenSet>,
    caps: &DepthCaps,
) -> Result<ClopenSet, BitcoreError> {
    match (op, b) {
        (BoolOp::Complement, None) => Ok(a.complement_set()),
        (BoolOp::Complement, Some(_)) => Err(BitcoreError::BadFormat(
            "complement takes a single operand".into(),
        )),
        (_, None) => Err(BitcoreError::BadFormat("missing second operand".into())),
        (BoolOp::Union, Some(b)) => a.union(b, caps),
        (BoolOp::Intersect, Some(b)) => a.intersect(b, caps),
        (BoolOp::Difference, Some(b)) => a.difference(b, caps),
    }
}

/// Serde-friendly canonical form: depth plus the maximal decomposition.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct ClopenRepr {
    pub dim: u8,
    pub depth: usize,
    pub gen: Vec<String>,
}

impl ClopenRepr {
    pub fn from_set(s: &ClopenSet) -> Self {
        match s.dim() {
            Dim::One => ClopenRepr {
                dim: 1,
                depth: s.depth(),
                gen: s.generators_dim1().iter().map(|w| w.to_string()).collect(),
            },
            Dim::Two => ClopenRepr {
                dim: 2,
                depth: s.depth(),
                gen: s
                    .generators_dim2()
                    .iter()
                    .map(|(a, b)| format!("{} {}", a, b))
                    .collect(),
            },
        }
    }

    pub fn to_set(&self, caps: &DepthCaps) -> Result<ClopenSet, BitcoreError> {
        match self.dim {
            1 => {
                let gens = self
                    .gen
                    .iter()
                    .map(|g| g.parse::<BitWord>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| BitcoreError::BadFormat(format!("{e}")))?;
                ClopenSet::from_generators1(self.depth, &gens, caps)
            }
            2 => {
                let mut gens = Vec::new();
                for g in &self.gen {
                    let mut it = g.split_whitespace();
                    let a = it
                        .next()
                        .ok_or_else(|| BitcoreError::BadFormat("missing rect word".into()))?
                        .parse::<BitWord>()
                        .map_err(|e| BitcoreError::BadFormat(format!("{e}")))?;
                    let b = it
                        .next()
                        .ok_or_else(|| BitcoreError::BadFormat("missing rect word".into()))?
                        .parse::<BitWord>()
                        .map_err(|e| BitcoreError::BadFormat(format!("{e}")))?;
                    gens.push((a, b));
                }
                ClopenSet::from_generators2(self.depth, &gens, caps)
            }
            d => Err(BitcoreError::BadFormat(format!("bad dim {d}"))),
        }
    }
}
