//! Sparse codes and bounded-quantifier checkers for the meager, null and
//! closed-null ideals and their positive-set companions.
//!
//! A code is a finite sparse 0/1 table over levels and words; lookups outside
//! the table are 0, so the table is a total point of the coding space. Every
//! universal clause evaluated here restricts its outer quantifiers to the
//! stated bound; a refutation exhibits a concrete finite counterexample and
//! is final, while a pass is only a claim at the bound. Searches over table
//! entries are complete because tables are finite; the search bound applies
//! to the one existential that ranges over arbitrary words (the root of the
//! positive-meager formula).

use std::collections::BTreeSet;
use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use crate::bitword::BitWord;
use crate::dyadic::{Dyadic, Ratio};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum CodingError {
    #[error("malformed presentation: {0}")]
    MalformedPresentation(String),
    #[error("insufficient resolution: {0}")]
    InsufficientResolution(String),
    #[error("bad format: {0}")]
    BadFormat(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ideal {
    Meager,
    Null,
    ClosedNull,
    MeagerPositive,
    NullPositive,
    ClosedNullPositive,
}

impl Ideal {
    pub fn tag(&self) -> &'static str {
        match self {
            Ideal::Meager => "M",
            Ideal::Null => "N",
            Ideal::ClosedNull => "E",
            Ideal::MeagerPositive => "M+",
            Ideal::NullPositive => "N+",
            Ideal::ClosedNullPositive => "E+",
        }
    }

    pub fn all() -> [Ideal; 6] {
        [
            Ideal::Meager,
            Ideal::Null,
            Ideal::ClosedNull,
            Ideal::MeagerPositive,
            Ideal::NullPositive,
            Ideal::ClosedNullPositive,
        ]
    }
}

impl FromStr for Ideal {
    type Err = CodingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "M" => Ok(Ideal::Meager),
            "N" => Ok(Ideal::Null),
            "E" => Ok(Ideal::ClosedNull),
            "M+" => Ok(Ideal::MeagerPositive),
            "N+" => Ok(Ideal::NullPositive),
            "E+" => Ok(Ideal::ClosedNullPositive),
            _ => Err(CodingError::BadFormat(format!("unknown ideal {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CodeShape {
    Indexed,
    Flat,
    Pair,
}

impl CodeShape {
    fn tag(&self) -> &'static str {
        match self {
            CodeShape::Indexed => "indexed",
            CodeShape::Flat => "flat",
            CodeShape::Pair => "pair",
        }
    }
}

/// Finite sparse table representing a coding-space point; zero off-table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Code {
    pub shape: CodeShape,
    pub ideal: Ideal,
    /// Entries of the level-indexed component.
    pub indexed: BTreeSet<(u32, BitWord)>,
    /// Entries of the flat component (the positive-null table).
    pub flat: BTreeSet<BitWord>,
}

impl Code {
    fn new(shape: CodeShape, ideal: Ideal) -> Self {
        Code {
            shape,
            ideal,
            indexed: BTreeSet::new(),
            flat: BTreeSet::new(),
        }
    }

    pub fn level(&self, n: u32) -> impl Iterator<Item = &BitWord> {
        self.indexed
            .range((n, BitWord::empty())..(n + 1, BitWord::empty()))
            .map(|(_, w)| w)
    }

    pub fn max_level(&self) -> Option<u32> {
        self.indexed.iter().map(|(n, _)| *n).max()
    }

    pub fn to_code_format(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "code {} {}", self.shape.tag(), self.ideal.tag());
        match self.shape {
            CodeShape::Indexed => {
                for (n, w) in &self.indexed {
                    let _ = writeln!(out, "x {} {} 1", n, w);
                }
            }
            CodeShape::Flat => {
                for w in &self.flat {
                    let _ = writeln!(out, "xf {} 1", w);
                }
            }
            CodeShape::Pair => {
                for w in &self.flat {
                    let _ = writeln!(out, "x0 {} 1", w);
                }
                for (n, w) in &self.indexed {
                    let _ = writeln!(out, "x1 {} {} 1", n, w);
                }
            }
        }
        out
    }

    pub fn from_code_format(text: &str) -> Result<Self, CodingError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| CodingError::BadFormat("empty code".into()))?;
        let mut parts = header.split_whitespace();
        if parts.next() != Some("code") {
            return Err(CodingError::BadFormat("missing code header".into()));
        }
        let shape = match parts.next() {
            Some("indexed") => CodeShape::Indexed,
            Some("flat") => CodeShape::Flat,
            Some("pair") => CodeShape::Pair,
            s => return Err(CodingError::BadFormat(format!("bad shape {s:?}"))),
        };
        let ideal: Ideal = parts
            .next()
            .ok_or_else(|| CodingError::BadFormat("missing ideal".into()))?
            .parse()?;
        let mut code = Code::new(shape, ideal);
        for line in lines {
            let mut parts = line.split_whitespace();
            match parts.next() {
                Some("x") | Some("x1") => {
                    let n: u32 = parts
                        .next()
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| CodingError::BadFormat("bad level".into()))?;
                    let w: BitWord = parts
                        .next()
                        .ok_or_else(|| CodingError::BadFormat("missing word".into()))?
                        .parse()
                        .map_err(|e| CodingError::BadFormat(format!("{e}")))?;
                    code.indexed.insert((n, w));
                }
                Some("xf") | Some("x0") => {
                    let w: BitWord = parts
                        .next()
                        .ok_or_else(|| CodingError::BadFormat("missing word".into()))?
                        .parse()
                        .map_err(|e| CodingError::BadFormat(format!("{e}")))?;
                    code.flat.insert(w);
                }
                Some(tag) => return Err(CodingError::BadFormat(format!("unknown tag {tag:?}"))),
                None => {}
            }
        }
        Ok(code)
    }
}

/// Concrete presentations the encoders consume.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Presentation {
    /// Dense open levels, each a list of cylinder generators.
    Meager { levels: Vec<Vec<BitWord>> },
    /// Word lists with level-n mass below 1/n (level 0 unconstrained).
    Null { levels: Vec<Vec<BitWord>> },
    /// Antichain levels whose mass exceeds 1 - 1/k for all k up to `res`.
    ClosedNull { levels: Vec<Vec<BitWord>>, res: u32 },
    /// A root below which every level is dense.
    MeagerPositive {
        root: BitWord,
        levels: Vec<Vec<BitWord>>,
    },
    /// One word list of mass below 1 - 1/k.
    NullPositive { k: u32, words: Vec<BitWord> },
    /// A positive-null component plus a null component that is dense and
    /// forward-extending below every word not covered by the first.
    ClosedNullPositive {
        k: u32,
        words: Vec<BitWord>,
        levels: Vec<Vec<BitWord>>,
    },
}

impl Presentation {
    pub fn ideal(&self) -> Ideal {
        match self {
            Presentation::Meager { .. } => Ideal::Meager,
            Presentation::Null { .. } => Ideal::Null,
            Presentation::ClosedNull { .. } => Ideal::ClosedNull,
            Presentation::MeagerPositive { .. } => Ideal::MeagerPositive,
            Presentation::NullPositive { .. } => Ideal::NullPositive,
            Presentation::ClosedNullPositive { .. } => Ideal::ClosedNullPositive,
        }
    }

    pub fn to_pres_format(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "pres {}", self.ideal().tag());
        let write_levels = |out: &mut String, tag: &str, levels: &[Vec<BitWord>]| {
            for (n, level) in levels.iter().enumerate() {
                let _ = writeln!(out, "{} {}", tag, n);
                for w in level {
                    let _ = writeln!(out, "c {}", w);
                }
            }
        };
        match self {
            Presentation::Meager { levels } => write_levels(&mut out, "U", levels),
            Presentation::Null { levels } => write_levels(&mut out, "L", levels),
            Presentation::ClosedNull { levels, res } => {
                let _ = writeln!(out, "res {}", res);
                write_levels(&mut out, "L", levels);
            }
            Presentation::MeagerPositive { root, levels } => {
                let _ = writeln!(out, "root {}", root);
                write_levels(&mut out, "U", levels);
            }
            Presentation::NullPositive { k, words } => {
                let _ = writeln!(out, "k {}", k);
                for w in words {
                    let _ = writeln!(out, "c {}", w);
                }
            }
            Presentation::ClosedNullPositive { k, words, levels } => {
                let _ = writeln!(out, "k {}", k);
                for w in words {
                    let _ = writeln!(out, "x0 {}", w);
                }
                write_levels(&mut out, "L", levels);
            }
        }
        out
    }

    pub fn from_pres_format(text: &str) -> Result<Self, CodingError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty()).peekable();
        let header = lines
            .next()
            .ok_or_else(|| CodingError::BadFormat("empty presentation".into()))?;
        let ideal: Ideal = header
            .strip_prefix("pres ")
            .ok_or_else(|| CodingError::BadFormat("missing pres header".into()))?
            .trim()
            .parse()?;
        let mut levels: Vec<Vec<BitWord>> = Vec::new();
        let mut words: Vec<BitWord> = Vec::new();
        let mut root: Option<BitWord> = None;
        let mut k: Option<u32> = None;
        let mut res: Option<u32> = None;
        for line in lines {
            let mut parts = line.split_whitespace();
            match parts.next() {
                Some("U") | Some("L") => {
                    let n: usize = parts
                        .next()
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| CodingError::BadFormat("bad level index".into()))?;
                    if n != levels.len() {
                        return Err(CodingError::BadFormat("levels out of order".into()));
                    }
                    levels.push(Vec::new());
                }
                Some("c") => {
                    let w: BitWord = parts
                        .next()
                        .ok_or_else(|| CodingError::BadFormat("missing word".into()))?
                        .parse()
                        .map_err(|e| CodingError::BadFormat(format!("{e}")))?;
                    match levels.last_mut() {
                        Some(l) => l.push(w),
                        None => words.push(w),
                    }
                }
                Some("x0") => {
                    let w: BitWord = parts
                        .next()
                        .ok_or_else(|| CodingError::BadFormat("missing word".into()))?
                        .parse()
                        .map_err(|e| CodingError::BadFormat(format!("{e}")))?;
                    words.push(w);
                }
                Some("root") => {
                    root = Some(
                        parts
                            .next()
                            .ok_or_else(|| CodingError::BadFormat("missing root".into()))?
                            .parse()
                            .map_err(|e| CodingError::BadFormat(format!("{e}")))?,
                    );
                }
                Some("k") => {
                    k = parts.next().and_then(|t| t.parse().ok());
                }
                Some("res") => {
                    res = parts.next().and_then(|t| t.parse().ok());
                }
                Some(tag) => return Err(CodingError::BadFormat(format!("unknown tag {tag:?}"))),
                None => {}
            }
        }
        Ok(match ideal {
            Ideal::Meager => Presentation::Meager { levels },
            Ideal::Null => Presentation::Null { levels },
            Ideal::ClosedNull => Presentation::ClosedNull {
                levels,
                res: res.unwrap_or(2),
            },
            Ideal::MeagerPositive => Presentation::MeagerPositive {
                root: root
                    .ok_or_else(|| CodingError::BadFormat("positive-meager needs a root".into()))?,
                levels,
            },
            Ideal::NullPositive => Presentation::NullPositive {
                k: k.ok_or_else(|| CodingError::BadFormat("positive-null needs k".into()))?,
                words,
            },
            Ideal::ClosedNullPositive => Presentation::ClosedNullPositive {
                k: k.ok_or_else(|| CodingError::BadFormat("positive-closed-null needs k".into()))?,
                words,
                levels,
            },
        })
    }
}

/// A point given as a finite prefix, optionally continued by a constant bit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Point {
    pub prefix: BitWord,
    pub tail: Option<bool>,
}

impl Point {
    pub fn eventually(prefix: BitWord, bit: bool) -> Self {
        Point {
            prefix,
            tail: Some(bit),
        }
    }

    pub fn finite(prefix: BitWord) -> Self {
        Point { prefix, tail: None }
    }

    /// Whether `w` is an initial segment of the point; `None` when the
    /// prefix is too short to decide and no tail is declared.
    pub fn starts_with(&self, w: &BitWord) -> Option<bool> {
        for i in 0..w.len() {
            let want = w.bit(i);
            let have = if i < self.prefix.len() {
                self.prefix.bit(i)
            } else {
                self.tail?
            };
            if want != have {
                return Some(false);
            }
        }
        Some(true)
    }
}

impl FromStr for Point {
    type Err = CodingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (prefix, tail) = match s.split_once('*') {
            None => (s, None),
            Some((p, "0")) => (p, Some(false)),
            Some((p, "1")) => (p, Some(true)),
            Some(_) => return Err(CodingError::BadFormat(format!("bad point {s:?}"))),
        };
        let prefix: BitWord = prefix
            .parse()
            .map_err(|e| CodingError::BadFormat(format!("{e}")))?;
        Ok(Point { prefix, tail })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VerdictStatus {
    Refuted,
    UnrefutedAtBound,
    MemberVerifiedAtBound,
    NonmemberWitness,
}

impl fmt::Display for VerdictStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            VerdictStatus::Refuted => "refuted",
            VerdictStatus::UnrefutedAtBound => "unrefuted-at-bound",
            VerdictStatus::MemberVerifiedAtBound => "member-verified-at-bound",
            VerdictStatus::NonmemberWitness => "nonmember-witness",
        };
        write!(f, "{s}")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Witness {
    Level(u32),
    LevelWord(u32, BitWord),
    ComparablePair(u32, BitWord, BitWord),
    MassBound { level: u32, mass: Dyadic, bound: Ratio },
    Root(BitWord),
    Threshold(u32),
    Word(BitWord),
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Witness::Level(n) => write!(f, "level {n}"),
            Witness::LevelWord(n, w) => write!(f, "level {n}, word {w}"),
            Witness::ComparablePair(n, a, b) => {
                write!(f, "level {n}, comparable pair ({a}, {b})")
            }
            Witness::MassBound { level, mass, bound } => {
                write!(f, "level {level}, mass {mass} against bound {bound}")
            }
            Witness::Root(w) => write!(f, "root {w}"),
            Witness::Threshold(k) => write!(f, "threshold {k}"),
            Witness::Word(w) => write!(f, "word {w}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub status: VerdictStatus,
    pub witness: Option<Witness>,
    pub bound: u32,
    pub search: u32,
}

impl Verdict {
    fn refuted(witness: Witness, bound: u32, search: u32) -> Self {
        Verdict {
            status: VerdictStatus::Refuted,
            witness: Some(witness),
            bound,
            search,
        }
    }

    fn unrefuted(witness: Option<Witness>, bound: u32, search: u32) -> Self {
        Verdict {
            status: VerdictStatus::UnrefutedAtBound,
            witness,
            bound,
            search,
        }
    }

    pub fn is_pass(&self) -> bool {
        matches!(
            self.status,
            VerdictStatus::UnrefutedAtBound | VerdictStatus::MemberVerifiedAtBound
        )
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.status)?;
        if let Some(w) = &self.witness {
            write!(f, " ({w})")?;
        }
        write!(f, " [bound {}, search {}]", self.bound, self.search)
    }
}

fn level_mass(words: impl Iterator<Item = impl std::borrow::Borrow<BitWord>>) -> Dyadic {
    let mut total = Dyadic::zero();
    for w in words {
        total = total.add(&Dyadic::cylinder(w.borrow().len() as u32));
    }
    total
}

/// A comparable pair among distinct words, if any. In sorted order a prefix
/// sits immediately before its extensions, so adjacent checks suffice.
fn comparable_pair<'a>(words: impl Iterator<Item = &'a BitWord>) -> Option<(&'a BitWord, &'a BitWord)> {
    let mut sorted: Vec<&BitWord> = words.collect();
    sorted.sort();
    sorted.dedup();
    for pair in sorted.windows(2) {
        if pair[0].is_prefix_of(pair[1]) {
            return Some((pair[0], pair[1]));
        }
    }
    None
}

fn has_extension(table: &BTreeSet<(u32, BitWord)>, n: u32, sigma: &BitWord) -> bool {
    // extensions of sigma of a given level are contiguous from (n, sigma) on
    table
        .range((n, sigma.clone())..(n + 1, BitWord::empty()))
        .next()
        .is_some_and(|(_, w)| sigma.is_prefix_of(w))
}

/// Whether every depth-resolving cell below `rho` extends a flat-table word.
fn covered_by_flat(flat: &BTreeSet<BitWord>, rho: &BitWord) -> bool {
    let depth = flat
        .iter()
        .map(|w| w.len())
        .max()
        .unwrap_or(0)
        .max(rho.len());
    let shift = depth - rho.len();
    let base = rho.to_index() << shift;
    'cells: for cell in base..base + (1usize << shift) {
        let w = BitWord::from_index(cell, depth);
        for marked in flat {
            if marked.is_prefix_of(&w) {
                continue 'cells;
            }
        }
        return false;
    }
    true
}

/// One ideal's encoder and checkers behind the registry interface.
pub trait IdealCoding: Sync {
    fn ideal(&self) -> Ideal;
    fn encode(&self, pres: &Presentation) -> Result<Code, CodingError>;
    fn phi_check(&self, code: &Code, bound: u32, search: u32) -> Verdict;
    fn psi_member(&self, code: &Code, point: &Point, bound: u32) -> Result<Verdict, CodingError>;
}

pub fn codings() -> &'static [&'static dyn IdealCoding] {
    &[
        &MeagerCoding,
        &NullCoding,
        &ClosedNullCoding,
        &MeagerPositiveCoding,
        &NullPositiveCoding,
        &ClosedNullPositiveCoding,
    ]
}

pub fn coding_for(ideal: Ideal) -> &'static dyn IdealCoding {
    codings()
        .iter()
        .copied()
        .find(|c| c.ideal() == ideal)
        .expect("every ideal is registered")
}

fn expect_levels(pres: &Presentation, want: Ideal) -> Result<&Vec<Vec<BitWord>>, CodingError> {
    match (pres, want) {
        (Presentation::Meager { levels }, Ideal::Meager) => Ok(levels),
        (Presentation::Null { levels }, Ideal::Null) => Ok(levels),
        (Presentation::ClosedNull { levels, .. }, Ideal::ClosedNull) => Ok(levels),
        _ => Err(CodingError::MalformedPresentation(format!(
            "presentation does not fit ideal {}",
            want.tag()
        ))),
    }
}

fn indexed_code_from_levels(ideal: Ideal, shape: CodeShape, levels: &[Vec<BitWord>]) -> Code {
    let mut code = Code::new(shape, ideal);
    for (n, level) in levels.iter().enumerate() {
        for w in level {
            code.indexed.insert((n as u32, w.clone()));
        }
    }
    code
}

/// Dense-at-resolution check for a single level: every word up to the level's
/// own maximal marked length has a marked extension.
fn check_density(level: &[BitWord], n: usize, below: Option<&BitWord>) -> Result<(), CodingError> {
    let res = level.iter().map(|w| w.len()).max().unwrap_or(0);
    let marked: BTreeSet<BitWord> = level.iter().cloned().collect();
    let extends = |sigma: &BitWord| {
        marked
            .range(sigma.clone()..)
            .next()
            .is_some_and(|w| sigma.is_prefix_of(w))
    };
    for len in 0..=res {
        for idx in 0..1usize << len {
            let sigma = match below {
                None => BitWord::from_index(idx, len),
                Some(root) => {
                    if len < root.len() {
                        continue;
                    }
                    let w = BitWord::from_index(idx, len);
                    if !root.is_prefix_of(&w) {
                        continue;
                    }
                    w
                }
            };
            if !extends(&sigma) {
                return Err(CodingError::MalformedPresentation(format!(
                    "level {} is not dense at its own resolution: {} has no marked extension",
                    n, sigma
                )));
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// the six codings
// ---------------------------------------------------------------------------

pub struct MeagerCoding;

impl IdealCoding for MeagerCoding {
    fn ideal(&self) -> Ideal {
        Ideal::Meager
    }

    fn encode(&self, pres: &Presentation) -> Result<Code, CodingError> {
        let levels = expect_levels(pres, Ideal::Meager)?;
        for (n, level) in levels.iter().enumerate() {
            check_density(level, n, None)?;
        }
        Ok(indexed_code_from_levels(
            Ideal::Meager,
            CodeShape::Indexed,
            levels,
        ))
    }

    fn phi_check(&self, code: &Code, bound: u32, search: u32) -> Verdict {
        // (forall n)(forall sigma)(exists tau >= sigma marked at n)
        for n in 0..=bound {
            for len in 0..=bound as usize {
                for idx in 0..1usize << len {
                    let sigma = BitWord::from_index(idx, len);
                    if !has_extension(&code.indexed, n, &sigma) {
                        return Verdict::refuted(Witness::LevelWord(n, sigma), bound, search);
                    }
                }
            }
        }
        Verdict::unrefuted(None, bound, search)
    }

    fn psi_member(&self, code: &Code, point: &Point, bound: u32) -> Result<Verdict, CodingError> {
        // member of the coded meager set iff some level never marks a prefix
        psi_negated_levels(code, point, bound)
    }
}

pub struct NullCoding;

impl IdealCoding for NullCoding {
    fn ideal(&self) -> Ideal {
        Ideal::Null
    }

    fn encode(&self, pres: &Presentation) -> Result<Code, CodingError> {
        let levels = expect_levels(pres, Ideal::Null)?;
        for (n, level) in levels.iter().enumerate().skip(1) {
            let mass = level_mass(level.iter());
            let bound = Ratio::new(1, n as u128);
            if mass.to_ratio() >= bound {
                return Err(CodingError::MalformedPresentation(format!(
                    "level {} carries mass {} which is not below 1/{}",
                    n, mass, n
                )));
            }
        }
        Ok(indexed_code_from_levels(
            Ideal::Null,
            CodeShape::Indexed,
            levels,
        ))
    }

    fn phi_check(&self, code: &Code, bound: u32, search: u32) -> Verdict {
        // levels from 1 on must stay below 1/n in mass; level 0 is free
        for n in 1..=bound {
            let mass = level_mass(code.level(n));
            let limit = Ratio::new(1, u128::from(n));
            if mass.to_ratio() >= limit {
                return Verdict::refuted(
                    Witness::MassBound {
                        level: n,
                        mass,
                        bound: limit,
                    },
                    bound,
                    search,
                );
            }
        }
        Verdict::unrefuted(None, bound, search)
    }

    fn psi_member(&self, code: &Code, point: &Point, bound: u32) -> Result<Verdict, CodingError> {
        psi_all_levels(code, point, bound)
    }
}

pub struct ClosedNullCoding;

impl IdealCoding for ClosedNullCoding {
    fn ideal(&self) -> Ideal {
        Ideal::ClosedNull
    }

    fn encode(&self, pres: &Presentation) -> Result<Code, CodingError> {
        let (levels, res) = match pres {
            Presentation::ClosedNull { levels, res } => (levels, *res),
            _ => {
                return Err(CodingError::MalformedPresentation(
                    "presentation does not fit ideal E".into(),
                ))
            }
        };
        for (n, level) in levels.iter().enumerate() {
            let set: BTreeSet<&BitWord> = level.iter().collect();
            if let Some((a, b)) = comparable_pair(set.iter().copied()) {
                return Err(CodingError::MalformedPresentation(format!(
                    "level {} is not an antichain: {} and {} are comparable",
                    n, a, b
                )));
            }
            let mass = level_mass(set.iter().map(|w| (*w).clone()));
            if res >= 1 {
                let needed = Ratio::new(1, u128::from(res)).one_minus();
                if mass.to_ratio() <= needed {
                    return Err(CodingError::MalformedPresentation(format!(
                        "level {} carries mass {} which does not exceed 1 - 1/{}",
                        n, mass, res
                    )));
                }
            }
        }
        Ok(indexed_code_from_levels(
            Ideal::ClosedNull,
            CodeShape::Indexed,
            levels,
        ))
    }

    fn phi_check(&self, code: &Code, bound: u32, search: u32) -> Verdict {
        for n in 0..=bound {
            let level: Vec<&BitWord> = code.level(n).collect();
            if let Some((a, b)) = comparable_pair(level.iter().copied()) {
                return Verdict::refuted(
                    Witness::ComparablePair(n, a.clone(), b.clone()),
                    bound,
                    search,
                );
            }
            let mass = level_mass(level.iter().map(|w| (*w).clone()));
            for k in 1..=bound {
                let needed = Ratio::new(1, u128::from(k)).one_minus();
                if mass.to_ratio() <= needed {
                    return Verdict::refuted(
                        Witness::MassBound {
                            level: n,
                            mass,
                            bound: needed,
                        },
                        bound,
                        search,
                    );
                }
            }
        }
        Verdict::unrefuted(None, bound, search)
    }

    fn psi_member(&self, code: &Code, point: &Point, bound: u32) -> Result<Verdict, CodingError> {
        psi_negated_levels(code, point, bound)
    }
}

pub struct MeagerPositiveCoding;

impl IdealCoding for MeagerPositiveCoding {
    fn ideal(&self) -> Ideal {
        Ideal::MeagerPositive
    }

    fn encode(&self, pres: &Presentation) -> Result<Code, CodingError> {
        let (root, levels) = match pres {
            Presentation::MeagerPositive { root, levels } => (root, levels),
            _ => {
                return Err(CodingError::MalformedPresentation(
                    "presentation does not fit ideal M+".into(),
                ))
            }
        };
        for (n, level) in levels.iter().enumerate() {
            check_density(level, n, Some(root))?;
        }
        Ok(indexed_code_from_levels(
            Ideal::MeagerPositive,
            CodeShape::Indexed,
            levels,
        ))
    }

    fn phi_check(&self, code: &Code, bound: u32, search: u32) -> Verdict {
        // (exists rho, |rho| <= search) (forall n <= bound)
        // (forall sigma >= rho, |sigma| <= bound) (exists marked tau >= sigma)
        let mut first_failure: Option<Witness> = None;
        for len in 0..=search as usize {
            'roots: for idx in 0..1usize << len {
                let rho = BitWord::from_index(idx, len);
                for n in 0..=bound {
                    for slen in len..=bound as usize {
                        for sidx in 0..1usize << (slen - len) {
                            let sigma = rho.concat(&BitWord::from_index(sidx, slen - len));
                            if !has_extension(&code.indexed, n, &sigma) {
                                if first_failure.is_none() {
                                    first_failure = Some(Witness::LevelWord(n, sigma));
                                }
                                continue 'roots;
                            }
                        }
                    }
                }
                return Verdict::unrefuted(Some(Witness::Root(rho)), bound, search);
            }
        }
        // no root up to the search bound: the bounded sentence is false
        Verdict::refuted(
            first_failure.unwrap_or(Witness::Level(0)),
            bound,
            search,
        )
    }

    fn psi_member(&self, code: &Code, point: &Point, bound: u32) -> Result<Verdict, CodingError> {
        psi_all_levels(code, point, bound)
    }
}

pub struct NullPositiveCoding;

impl IdealCoding for NullPositiveCoding {
    fn ideal(&self) -> Ideal {
        Ideal::NullPositive
    }

    fn encode(&self, pres: &Presentation) -> Result<Code, CodingError> {
        let (k, words) = match pres {
            Presentation::NullPositive { k, words } => (*k, words),
            _ => {
                return Err(CodingError::MalformedPresentation(
                    "presentation does not fit ideal N+".into(),
                ))
            }
        };
        if k < 2 {
            return Err(CodingError::MalformedPresentation(
                "the declared threshold must be at least 2".into(),
            ));
        }
        let mass = level_mass(words.iter());
        let bound = Ratio::new(1, u128::from(k)).one_minus();
        if mass.to_ratio() >= bound {
            return Err(CodingError::MalformedPresentation(format!(
                "marked mass {} is not below 1 - 1/{}",
                mass, k
            )));
        }
        let mut code = Code::new(CodeShape::Flat, Ideal::NullPositive);
        code.flat = words.iter().cloned().collect();
        Ok(code)
    }

    fn phi_check(&self, code: &Code, bound: u32, search: u32) -> Verdict {
        // (exists k)(forall m)(mass <= m below 1 - 1/k); the total mass of a
        // finite table decides the matter outright
        let mass = level_mass(code.flat.iter());
        if mass.to_ratio() >= Ratio::one() {
            return Verdict::refuted(
                Witness::MassBound {
                    level: 0,
                    mass,
                    bound: Ratio::one(),
                },
                bound,
                search,
            );
        }
        for k in 2..=search.max(2) {
            if mass.to_ratio() < Ratio::new(1, u128::from(k)).one_minus() {
                return Verdict::unrefuted(Some(Witness::Threshold(k)), bound, search);
            }
        }
        Verdict::refuted(
            Witness::MassBound {
                level: 0,
                mass,
                bound: Ratio::new(1, u128::from(search.max(2))).one_minus(),
            },
            bound,
            search,
        )
    }

    fn psi_member(&self, code: &Code, point: &Point, bound: u32) -> Result<Verdict, CodingError> {
        // member iff the point avoids every marked cylinder
        for w in &code.flat {
            match point.starts_with(w) {
                Some(true) => {
                    return Ok(Verdict {
                        status: VerdictStatus::NonmemberWitness,
                        witness: Some(Witness::Word(w.clone())),
                        bound,
                        search: 0,
                    })
                }
                Some(false) => {}
                None => {
                    return Err(CodingError::InsufficientResolution(format!(
                        "marked word {} outruns the point prefix",
                        w
                    )))
                }
            }
        }
        Ok(Verdict {
            status: VerdictStatus::MemberVerifiedAtBound,
            witness: None,
            bound,
            search: 0,
        })
    }
}

pub struct ClosedNullPositiveCoding;

impl ClosedNullPositiveCoding {
    /// The conditional density clause: words not covered by the flat part
    /// demand level density and level-to-level extension below them.
    fn relative_clause(code: &Code, rho_bound: u32, level_bound: u32) -> Option<Witness> {
        for len in 0..=rho_bound as usize {
            for idx in 0..1usize << len {
                let rho = BitWord::from_index(idx, len);
                if covered_by_flat(&code.flat, &rho) {
                    continue;
                }
                for n in 0..=level_bound {
                    if !has_extension(&code.indexed, n, &rho) {
                        return Some(Witness::LevelWord(n, rho));
                    }
                }
                for n in 0..level_bound {
                    for (_, tau) in code
                        .indexed
                        .range((n, BitWord::empty())..(n + 1, BitWord::empty()))
                    {
                        if rho.is_prefix_of(tau)
                            && !has_extension(&code.indexed, n + 1, tau)
                        {
                            return Some(Witness::LevelWord(n + 1, tau.clone()));
                        }
                    }
                }
            }
        }
        None
    }
}

impl IdealCoding for ClosedNullPositiveCoding {
    fn ideal(&self) -> Ideal {
        Ideal::ClosedNullPositive
    }

    fn encode(&self, pres: &Presentation) -> Result<Code, CodingError> {
        let (k, words, levels) = match pres {
            Presentation::ClosedNullPositive { k, words, levels } => (*k, words, levels),
            _ => {
                return Err(CodingError::MalformedPresentation(
                    "presentation does not fit ideal E+".into(),
                ))
            }
        };
        let flat_part = NullPositiveCoding.encode(&Presentation::NullPositive {
            k,
            words: words.clone(),
        })?;
        let null_part = NullCoding.encode(&Presentation::Null {
            levels: levels.clone(),
        })?;
        let mut code = Code::new(CodeShape::Pair, Ideal::ClosedNullPositive);
        code.flat = flat_part.flat;
        code.indexed = null_part.indexed;
        // the covering component fixes which words demand relative density,
        // so its own resolution bounds the encode-time validation
        let res = code.flat.iter().map(|w| w.len() as u32).max().unwrap_or(0);
        let levels_top = code.max_level().unwrap_or(0);
        if let Some(witness) = Self::relative_clause(&code, res, levels_top) {
            return Err(CodingError::MalformedPresentation(format!(
                "relative density clause fails: {witness}"
            )));
        }
        Ok(code)
    }

    fn phi_check(&self, code: &Code, bound: u32, search: u32) -> Verdict {
        let flat_view = Code {
            shape: CodeShape::Flat,
            ideal: Ideal::NullPositive,
            indexed: BTreeSet::new(),
            flat: code.flat.clone(),
        };
        let v = NullPositiveCoding.phi_check(&flat_view, bound, search);
        if v.status == VerdictStatus::Refuted {
            return v;
        }
        let indexed_view = Code {
            shape: CodeShape::Indexed,
            ideal: Ideal::Null,
            indexed: code.indexed.clone(),
            flat: BTreeSet::new(),
        };
        let v = NullCoding.phi_check(&indexed_view, bound, search);
        if v.status == VerdictStatus::Refuted {
            return v;
        }
        match Self::relative_clause(code, bound, bound) {
            Some(witness) => Verdict::refuted(witness, bound, search),
            None => Verdict::unrefuted(None, bound, search),
        }
    }

    fn psi_member(&self, code: &Code, point: &Point, bound: u32) -> Result<Verdict, CodingError> {
        psi_all_levels(code, point, bound)
    }
}

// ---------------------------------------------------------------------------
// shared membership evaluation
// ---------------------------------------------------------------------------

/// Whether some marked word at the level is an initial segment of the point.
fn level_hits(code: &Code, n: u32, point: &Point) -> Result<bool, CodingError> {
    let mut undecided: Option<BitWord> = None;
    for (_, w) in code
        .indexed
        .range((n, BitWord::empty())..(n + 1, BitWord::empty()))
    {
        match point.starts_with(w) {
            Some(true) => return Ok(true),
            Some(false) => {}
            None => undecided = Some(w.clone()),
        }
    }
    match undecided {
        Some(w) => Err(CodingError::InsufficientResolution(format!(
            "marked word {} outruns the point prefix",
            w
        ))),
        None => Ok(false),
    }
}

/// Membership form `(forall n)(exists m)(x(n, y|m) = 1)`: all levels up to
/// the bound must hit; a missed level is a final non-member witness.
fn psi_all_levels(code: &Code, point: &Point, bound: u32) -> Result<Verdict, CodingError> {
    for n in 0..=bound {
        if !level_hits(code, n, point)? {
            return Ok(Verdict {
                status: VerdictStatus::NonmemberWitness,
                witness: Some(Witness::Level(n)),
                bound,
                search: 0,
            });
        }
    }
    Ok(Verdict {
        status: VerdictStatus::MemberVerifiedAtBound,
        witness: None,
        bound,
        search: 0,
    })
}

/// Negated membership form: a level that never marks a prefix puts the point
/// into the coded set, finally.
fn psi_negated_levels(code: &Code, point: &Point, bound: u32) -> Result<Verdict, CodingError> {
    for n in 0..=bound {
        if !level_hits(code, n, point)? {
            return Ok(Verdict {
                status: VerdictStatus::MemberVerifiedAtBound,
                witness: Some(Witness::Level(n)),
                bound,
                search: 0,
            });
        }
    }
    Ok(Verdict {
        status: VerdictStatus::UnrefutedAtBound,
        witness: None,
        bound,
        search: 0,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Formula {
    Phi,
    Psi,
}

impl FromStr for Formula {
    type Err = CodingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "phi" => Ok(Formula::Phi),
            "psi" => Ok(Formula::Psi),
            _ => Err(CodingError::BadFormat(format!("unknown formula {s:?}"))),
        }
    }
}
