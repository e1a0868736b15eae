//! Presentations of the "large" inputs: dense-open families queried through
//! an extension oracle, ascending clopen filtrations, and seeded instance
//! generators.
//!
//! The oracle is the single interface between large-set inputs and the
//! engines: the category constructions consume density only through finitely
//! many extension steps, so a deterministic query interface makes them
//! executable without infinite objects. Generator scan order is file order
//! and ties break on the first match; certificates depend on this.

use std::fmt::Write as _;

use crate::bitword::BitWord;
use crate::clopen::{BitcoreError, ClopenSet, DepthCaps, Dim};
use crate::dyadic::Dyadic;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum LargeSetError {
    #[error("density exhausted at level {level} for query ({sigma}, {rho})")]
    DensityExhausted {
        level: usize,
        sigma: BitWord,
        rho: BitWord,
    },
    #[error("level {0} out of range")]
    LevelOutOfRange(usize),
    #[error("bad length: {0}")]
    BadLength(String),
    #[error("infeasible parameters: {0}")]
    InfeasibleParams(String),
    #[error("bad format: {0}")]
    BadFormat(String),
    #[error(transparent)]
    Bitcore(#[from] BitcoreError),
}

/// A per-level list of open rectangles `[a] x [b]` presenting each U_n.
/// Density is a contract, not a stored fact: every extension query must be
/// answerable from the generators or fail explicitly.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DenseOpenFamily {
    pub levels: Vec<Vec<(BitWord, BitWord)>>,
    pub descending: bool,
}

impl DenseOpenFamily {
    pub fn new(levels: Vec<Vec<(BitWord, BitWord)>>, descending: bool) -> Self {
        DenseOpenFamily { levels, descending }
    }

    pub fn count(&self) -> usize {
        self.levels.len()
    }

    /// Depth at which level `n` is fully resolved.
    pub fn level_depth(&self, n: usize) -> usize {
        self.levels[n]
            .iter()
            .map(|(a, b)| a.len().max(b.len()))
            .max()
            .unwrap_or(0)
    }

    pub fn level_set(&self, n: usize, caps: &DepthCaps) -> Result<ClopenSet, LargeSetError> {
        let depth = self.level_depth(n);
        Ok(ClopenSet::from_generators2(depth, &self.levels[n], caps)?)
    }

    /// When the descending flag is set, each level must refine into the
    /// previous one at common depth.
    pub fn check_descending(&self, caps: &DepthCaps) -> Result<(), LargeSetError> {
        if !self.descending {
            return Ok(());
        }
        for n in 1..self.levels.len() {
            let prev = self.level_set(n - 1, caps)?;
            let cur = self.level_set(n, caps)?;
            if !cur.is_subset_of(&prev, caps)? {
                return Err(LargeSetError::BadFormat(format!(
                    "descending flag set but U_{} is not inside U_{}",
                    n,
                    n - 1
                )));
            }
        }
        Ok(())
    }

    pub fn to_dof(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "dof {}{}",
            self.levels.len(),
            if self.descending { " descending" } else { "" }
        );
        for (n, gens) in self.levels.iter().enumerate() {
            let _ = writeln!(out, "U {}", n);
            for (a, b) in gens {
                let _ = writeln!(out, "r {} {}", a, b);
            }
        }
        out
    }

    pub fn from_dof(text: &str) -> Result<Self, LargeSetError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| LargeSetError::BadFormat("empty dof".into()))?;
        let mut parts = header.split_whitespace();
        if parts.next() != Some("dof") {
            return Err(LargeSetError::BadFormat("missing dof header".into()));
        }
        let count: usize = parts
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| LargeSetError::BadFormat("bad level count".into()))?;
        let descending = parts.next() == Some("descending");
        let mut levels: Vec<Vec<(BitWord, BitWord)>> = Vec::new();
        for line in lines {
            let mut parts = line.split_whitespace();
            match parts.next() {
                Some("U") => {
                    let n: usize = parts
                        .next()
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| LargeSetError::BadFormat("bad U index".into()))?;
                    if n != levels.len() {
                        return Err(LargeSetError::BadFormat(format!(
                            "U blocks out of order at {n}"
                        )));
                    }
                    levels.push(Vec::new());
                }
                Some("r") => {
                    let a: BitWord = parts
                        .next()
                        .ok_or_else(|| LargeSetError::BadFormat("missing word".into()))?
                        .parse()
                        .map_err(|e| LargeSetError::BadFormat(format!("{e}")))?;
                    let b: BitWord = parts
                        .next()
                        .ok_or_else(|| LargeSetError::BadFormat("missing word".into()))?
                        .parse()
                        .map_err(|e| LargeSetError::BadFormat(format!("{e}")))?;
                    levels
                        .last_mut()
                        .ok_or_else(|| LargeSetError::BadFormat("r before U".into()))?
                        .push((a, b));
                }
                Some(tag) => {
                    return Err(LargeSetError::BadFormat(format!("unknown tag {tag:?}")))
                }
                None => {}
            }
        }
        if levels.len() != count {
            return Err(LargeSetError::BadFormat(format!(
                "declared {} levels, found {}",
                count,
                levels.len()
            )));
        }
        Ok(DenseOpenFamily::new(levels, descending))
    }
}

/// The query interface: `extend(n, sigma, rho)` returns a rectangle inside
/// U_n extending the query words. Deterministic for a fixed instance.
pub trait ExtensionOracle {
    fn extend(
        &self,
        level: usize,
        sigma: &BitWord,
        rho: &BitWord,
    ) -> Result<(BitWord, BitWord), LargeSetError>;

    fn level_count(&self) -> usize;
}

/// Oracle over a concrete family: scans generators in file order and returns
/// the join with the first compatible rectangle.
pub struct FamilyOracle<'a> {
    family: &'a DenseOpenFamily,
}

impl<'a> FamilyOracle<'a> {
    pub fn new(family: &'a DenseOpenFamily) -> Self {
        FamilyOracle { family }
    }
}

impl ExtensionOracle for FamilyOracle<'_> {
    fn extend(
        &self,
        level: usize,
        sigma: &BitWord,
        rho: &BitWord,
    ) -> Result<(BitWord, BitWord), LargeSetError> {
        let gens = self
            .family
            .levels
            .get(level)
            .ok_or(LargeSetError::LevelOutOfRange(level))?;
        for (a, b) in gens {
            if let (Some(s), Some(r)) = (sigma.join(a), rho.join(b)) {
                return Ok((s, r));
            }
        }
        Err(LargeSetError::DensityExhausted {
            level,
            sigma: sigma.clone(),
            rho: rho.clone(),
        })
    }

    fn level_count(&self) -> usize {
        self.family.levels.len()
    }
}

/// Two chained extensions producing a rectangle that lies in U_n together
/// with its first-coordinate flip from position `from`.
pub fn flip_symmetrized_extend(
    oracle: &dyn ExtensionOracle,
    level: usize,
    sigma: &BitWord,
    rho: &BitWord,
    from: usize,
) -> Result<(BitWord, BitWord), LargeSetError> {
    if from > sigma.len() {
        return Err(LargeSetError::BadLength(format!(
            "flip position {} beyond query word length {}",
            from,
            sigma.len()
        )));
    }
    let (s1, r1) = oracle.extend(level, sigma, rho)?;
    let (s2, r2) = oracle.extend(level, &s1.flip_from(from), &r1)?;
    Ok((s2.flip_from(from), r2))
}

/// An ascending chain of closed (clopen at depth) planar sets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Filtration {
    depth: usize,
    sets: Vec<ClopenSet>,
}

impl Filtration {
    /// Validates that the chain is ascending under inclusion.
    pub fn new(depth: usize, sets: Vec<ClopenSet>, caps: &DepthCaps) -> Result<Self, LargeSetError> {
        for (i, s) in sets.iter().enumerate() {
            if s.dim() != Dim::Two || s.depth() != depth {
                return Err(LargeSetError::BadFormat(format!(
                    "filtration set {} has wrong shape",
                    i
                )));
            }
        }
        for i in 1..sets.len() {
            if !sets[i - 1].is_subset_of(&sets[i], caps)? {
                return Err(LargeSetError::BadFormat(format!(
                    "filtration not ascending at index {}",
                    i
                )));
            }
        }
        Ok(Filtration { depth, sets })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn set(&self, n: usize) -> &ClopenSet {
        &self.sets[n]
    }

    pub fn measures(&self) -> Vec<Dyadic> {
        self.sets.iter().map(|s| s.measure()).collect()
    }

    pub fn to_filt(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "filt {} {}", self.sets.len(), self.depth);
        for (n, s) in self.sets.iter().enumerate() {
            let _ = writeln!(out, "F {}", n);
            for (a, b) in s.generators_dim2() {
                let _ = writeln!(out, "r {} {}", a, b);
            }
        }
        out
    }

    pub fn from_filt(text: &str, caps: &DepthCaps) -> Result<Self, LargeSetError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| LargeSetError::BadFormat("empty filt".into()))?;
        let mut parts = header.split_whitespace();
        if parts.next() != Some("filt") {
            return Err(LargeSetError::BadFormat("missing filt header".into()));
        }
        let count: usize = parts
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| LargeSetError::BadFormat("bad level count".into()))?;
        let depth: usize = parts
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| LargeSetError::BadFormat("bad depth".into()))?;
        let mut sets: Vec<ClopenSet> = Vec::new();
        for line in lines {
            let mut parts = line.split_whitespace();
            match parts.next() {
                Some("F") => {
                    let n: usize = parts
                        .next()
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| LargeSetError::BadFormat("bad F index".into()))?;
                    if n != sets.len() {
                        return Err(LargeSetError::BadFormat("F blocks out of order".into()));
                    }
                    sets.push(ClopenSet::empty(Dim::Two, depth, caps)?);
                }
                Some("r") => {
                    let a: BitWord = parts
                        .next()
                        .ok_or_else(|| LargeSetError::BadFormat("missing word".into()))?
                        .parse()
                        .map_err(|e| LargeSetError::BadFormat(format!("{e}")))?;
                    let b: BitWord = parts
                        .next()
                        .ok_or_else(|| LargeSetError::BadFormat("missing word".into()))?
                        .parse()
                        .map_err(|e| LargeSetError::BadFormat(format!("{e}")))?;
                    sets.last_mut()
                        .ok_or_else(|| LargeSetError::BadFormat("r before F".into()))?
                        .insert_rectangle(&a, &b)?;
                }
                Some(tag) => {
                    return Err(LargeSetError::BadFormat(format!("unknown tag {tag:?}")))
                }
                None => {}
            }
        }
        if sets.len() != count {
            return Err(LargeSetError::BadFormat("level count mismatch".into()));
        }
        Filtration::new(depth, sets, caps)
    }
}

/// SplitMix64: a tiny, stable generator so instances never depend on an
/// external RNG's version.
#[derive(Clone)]
pub struct SeededRng(u64);

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        SeededRng(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0);
        self.next_u64() % n
    }
}

#[derive(Clone, Copy, Debug)]
pub struct DenseOpenParams {
    pub levels: usize,
    /// Depth of the level-0 presentation.
    pub depth0: usize,
    /// Depth increase per level.
    pub depth_step: usize,
    /// Cells knocked out at level 0.
    pub knock: usize,
}

/// Full plane minus a closed cell set, refined per level: each knocked cell
/// shrinks into a random proper subcell at the next level, so the presented
/// complements descend onto a nowhere-dense limit and the open levels are a
/// descending family.
pub fn random_dense_open(
    seed: u64,
    params: &DenseOpenParams,
    caps: &DepthCaps,
) -> Result<DenseOpenFamily, LargeSetError> {
    let final_depth = params.depth0 + params.depth_step * params.levels.saturating_sub(1);
    if final_depth > caps.dim2 {
        return Err(LargeSetError::InfeasibleParams(format!(
            "final depth {} over dim-2 cap {}",
            final_depth, caps.dim2
        )));
    }
    if params.knock > 0 && params.depth0 == 0 {
        return Err(LargeSetError::InfeasibleParams(
            "cannot knock cells at depth 0".into(),
        ));
    }
    let mut rng = SeededRng::new(seed);
    let mut knocked: Vec<(BitWord, BitWord)> = (0..params.knock)
        .map(|_| {
            let r = rng.below(1u64 << params.depth0) as usize;
            let c = rng.below(1u64 << params.depth0) as usize;
            (
                BitWord::from_index(r, params.depth0),
                BitWord::from_index(c, params.depth0),
            )
        })
        .collect();
    let mut levels = Vec::with_capacity(params.levels);
    let mut depth = params.depth0;
    for n in 0..params.levels {
        if n > 0 {
            depth += params.depth_step;
            // shrink every knocked cell into a random proper subcell
            if params.depth_step > 0 {
                knocked = knocked
                    .iter()
                    .map(|(a, b)| {
                        let mut a = a.clone();
                        let mut b = b.clone();
                        for _ in 0..params.depth_step {
                            a = a.append_bit(rng.below(2) == 1);
                            b = b.append_bit(rng.below(2) == 1);
                        }
                        (a, b)
                    })
                    .collect();
            }
        }
        let mut set = ClopenSet::full(Dim::Two, depth, caps)?;
        for (a, b) in &knocked {
            let hole = ClopenSet::from_generators2(depth, &[(a.clone(), b.clone())], caps)?;
            set = set.difference(&hole, caps)?;
        }
        levels.push(set.generators_dim2());
    }
    // knockouts refine, so the presented levels grow: no descending claim
    Ok(DenseOpenFamily::new(levels, false))
}

/// The co-diagonal family: every level is the plane minus the diagonal,
/// decomposed into its maximal square blocks in lexicographic order.
pub fn co_diagonal_family(
    levels: usize,
    depth: usize,
    caps: &DepthCaps,
) -> Result<DenseOpenFamily, LargeSetError> {
    let diag = ClopenSet::diagonal(depth, caps)?;
    let gens = diag.complement_set().generators_dim2();
    Ok(DenseOpenFamily::new(vec![gens; levels], true))
}

/// Every level the full plane.
pub fn full_plane_family(levels: usize) -> DenseOpenFamily {
    DenseOpenFamily::new(vec![vec![(BitWord::empty(), BitWord::empty())]; levels], true)
}

#[derive(Clone, Copy, Debug)]
pub struct FiltrationParams {
    pub levels: usize,
    pub depth: usize,
    /// Schedule constant: level n must satisfy measure(F_n) >= 1 - 2^-(2n+c).
    pub c: u32,
    /// Requested knockout cell count at level 0.
    pub knock: usize,
}

/// Ascending filtration meeting the schedule exactly: knocked cells are a
/// shrinking chain under inclusion, each level keeping at most the measure
/// budget `2^-(2n+c)` knocked out.
pub fn random_filtration(
    seed: u64,
    params: &FiltrationParams,
    caps: &DepthCaps,
) -> Result<Filtration, LargeSetError> {
    let d = params.depth;
    if d > caps.dim2 {
        return Err(LargeSetError::InfeasibleParams(format!(
            "depth {} over dim-2 cap {}",
            d, caps.dim2
        )));
    }
    let budget0 = if params.c as usize > 2 * d {
        0
    } else {
        1usize << (2 * d - params.c as usize)
    };
    if params.knock > budget0 {
        return Err(LargeSetError::InfeasibleParams(format!(
            "requested {} knockouts but the schedule allows {} at depth {}",
            params.knock, budget0, d
        )));
    }
    let mut rng = SeededRng::new(seed);
    let ncells = 1usize << d;
    let mut knocked: Vec<usize> = Vec::new();
    while knocked.len() < params.knock {
        let r = rng.below(ncells as u64) as usize;
        let c = rng.below(ncells as u64) as usize;
        let idx = (r << d) | c;
        if !knocked.contains(&idx) {
            knocked.push(idx);
        }
    }
    let mut sets = Vec::with_capacity(params.levels);
    for n in 0..params.levels {
        let budget = if params.c as usize + 2 * n > 2 * d {
            0
        } else {
            1usize << (2 * d - params.c as usize - 2 * n)
        };
        while knocked.len() > budget {
            let drop = rng.below(knocked.len() as u64) as usize;
            knocked.remove(drop);
        }
        let mut set = ClopenSet::full(Dim::Two, d, caps)?;
        for &idx in &knocked {
            let r = idx >> d;
            let c = idx & ((1 << d) - 1);
            set.remove_cell_pair(&BitWord::from_index(r, d), &BitWord::from_index(c, d))?;
        }
        sets.push(set);
    }
    let filt = Filtration::new(d, sets, caps)?;
    // schedule check, exact
    for (n, s) in filt.sets.iter().enumerate() {
        let bound = Dyadic::one()
            .checked_sub(&Dyadic::cylinder(2 * n as u32 + params.c))
            .expect("schedule bound");
        if s.measure() < bound {
            return Err(LargeSetError::InfeasibleParams(format!(
                "generated level {} misses its schedule bound",
                n
            )));
        }
    }
    Ok(filt)
}
