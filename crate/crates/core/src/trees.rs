//! Finite tree prefixes, stem skeletons, and bounded-depth recognizers for
//! the four tree classes.
//!
//! A prefix is the full restriction of a tree to words of length <= N, so a
//! node's children inside the prefix are all the children it has. Verdicts
//! are named `consistent`, never "true": a finite prefix can refute a class
//! membership but not prove it.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::bitword::BitWord;
use crate::clopen::{BitcoreError, ClopenSet, DepthCaps, Dim};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum TreeError {
    #[error("bad length: {0}")]
    BadLength(String),
    #[error("bad witness: {0}")]
    BadWitness(String),
    #[error("skeleton carries no branch labels")]
    MissingLabels,
    #[error("not downward closed at node {0}")]
    NotDownwardClosed(BitWord),
    #[error("node {0} of length below the depth has no child")]
    NotPruned(BitWord),
    #[error("bad format: {0}")]
    BadFormat(String),
    #[error(transparent)]
    Bitcore(#[from] BitcoreError),
}

/// A downward-closed, pruned set of words of length <= depth.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreePrefix {
    depth: usize,
    nodes: BTreeSet<BitWord>,
}

impl TreePrefix {
    /// Validates downward closure and pruned form.
    pub fn new(depth: usize, nodes: BTreeSet<BitWord>) -> Result<Self, TreeError> {
        for n in &nodes {
            if n.len() > depth {
                return Err(TreeError::BadLength(format!(
                    "node {} longer than depth {}",
                    n, depth
                )));
            }
            if !n.is_empty() && !nodes.contains(&n.prefix(n.len() - 1)) {
                return Err(TreeError::NotDownwardClosed(n.clone()));
            }
        }
        for n in &nodes {
            if n.len() < depth
                && !nodes.contains(&n.append_bit(false))
                && !nodes.contains(&n.append_bit(true))
            {
                return Err(TreeError::NotPruned(n.clone()));
            }
        }
        Ok(TreePrefix { depth, nodes })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn nodes(&self) -> &BTreeSet<BitWord> {
        &self.nodes
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains(&self, w: &BitWord) -> bool {
        self.nodes.contains(w)
    }

    fn level(&self, n: usize) -> impl Iterator<Item = &BitWord> {
        self.nodes.iter().filter(move |w| w.len() == n)
    }

    /// Nodes of length `n`, as words.
    pub fn body_words(&self, n: usize) -> Result<BTreeSet<BitWord>, TreeError> {
        if n > self.depth {
            return Err(TreeError::BadLength(format!(
                "level {} beyond prefix depth {}",
                n, self.depth
            )));
        }
        Ok(self.level(n).cloned().collect())
    }

    /// Nodes of length `n` as a clopen set at depth `n`.
    pub fn body_at_depth(&self, n: usize, caps: &DepthCaps) -> Result<ClopenSet, TreeError> {
        let words = self.body_words(n)?;
        let mut s = ClopenSet::empty(Dim::One, n, caps)?;
        for word in &words {
            s.insert_cylinder(word)?;
        }
        Ok(s)
    }

    fn splits(&self, w: &BitWord) -> bool {
        self.nodes.contains(&w.append_bit(false)) && self.nodes.contains(&w.append_bit(true))
    }

    /// Positions at which two nodes of the prefix disagree.
    fn disagreement_positions(&self) -> BTreeSet<usize> {
        let mut seen: BTreeMap<usize, bool> = BTreeMap::new();
        let mut out = BTreeSet::new();
        for n in &self.nodes {
            for (i, b) in n.iter().enumerate() {
                match seen.get(&i) {
                    None => {
                        seen.insert(i, b);
                    }
                    Some(&prev) if prev != b => {
                        out.insert(i);
                    }
                    _ => {}
                }
            }
        }
        out
    }

    pub fn classify(
        &self,
        kind: TreeKind,
        witness: Option<&TreeWitness>,
    ) -> Result<ClassifyVerdict, TreeError> {
        match (kind, witness) {
            (TreeKind::Perfect, _) => Ok(self.classify_perfect()),
            (TreeKind::UniformlyPerfect, _) => Ok(self.classify_uniformly_perfect()),
            (TreeKind::Silver, None) => Ok(self.classify_silver_search()),
            (TreeKind::Silver, Some(TreeWitness::Silver(w))) => self.classify_silver_with(w),
            (TreeKind::Spinas, None) => Ok(self.classify_spinas_search()),
            (TreeKind::Spinas, Some(TreeWitness::Spinas(w))) => self.classify_spinas_with(w),
            (TreeKind::Silver, Some(_)) | (TreeKind::Spinas, Some(_)) => Err(
                TreeError::BadWitness("witness kind does not match tree kind".into()),
            ),
        }
    }

    /// Perfectness has no finite counterexample: any leaf may split above the
    /// prefix depth, so every valid prefix is consistent.
    fn classify_perfect(&self) -> ClassifyVerdict {
        ClassifyVerdict::Consistent(None)
    }

    /// Same-length reading: a splitting node at some length forces every node
    /// of that length to split. Nodes at the final level carry no child data
    /// and are exempt.
    fn classify_uniformly_perfect(&self) -> ClassifyVerdict {
        for l in 0..self.depth {
            let mut splitter = None;
            let mut non_splitter = None;
            for n in self.level(l) {
                if self.splits(n) {
                    splitter.get_or_insert_with(|| n.clone());
                } else {
                    non_splitter.get_or_insert_with(|| n.clone());
                }
            }
            if let (Some(s), Some(ns)) = (splitter, non_splitter) {
                return ClassifyVerdict::Violated {
                    node: ns.clone(),
                    reason: format!(
                        "length-{} node {} splits while {} does not",
                        l, s, ns
                    ),
                };
            }
        }
        ClassifyVerdict::Consistent(None)
    }

    /// The induced prefix of the pattern (t, A): all words whose bits agree
    /// with t off A.
    fn induced_silver_count(&self, free: &BTreeSet<usize>, len: usize) -> u128 {
        1u128 << free.iter().filter(|&&p| p < len).count()
    }

    fn silver_equality(&self, pattern: &BitWord, free: &BTreeSet<usize>) -> ClassifyVerdict {
        // Containment: every node agrees with the pattern off the free set.
        for n in &self.nodes {
            for (i, b) in n.iter().enumerate() {
                if !free.contains(&i) && b != pattern.bit(i) {
                    return ClassifyVerdict::Violated {
                        node: n.clone(),
                        reason: format!(
                            "bit {} of {} disagrees with the pattern off the free set",
                            i, n
                        ),
                    };
                }
            }
        }
        // Equality: the prefix realizes every free-position combination.
        for l in 0..=self.depth {
            let have = self.level(l).count() as u128;
            let want = self.induced_silver_count(free, l);
            if have != want {
                // Locate a missing induced word for the counterexample.
                let missing = self.first_missing_induced(pattern, free, l);
                return ClassifyVerdict::Violated {
                    node: missing,
                    reason: format!(
                        "level {} has {} nodes but the pattern induces {}",
                        l, have, want
                    ),
                };
            }
        }
        ClassifyVerdict::Consistent(Some(TreeWitness::Silver(SilverWitness {
            pattern: pattern.clone(),
            free: free.clone(),
        })))
    }

    fn first_missing_induced(
        &self,
        pattern: &BitWord,
        free: &BTreeSet<usize>,
        len: usize,
    ) -> BitWord {
        let free_here: Vec<usize> = free.iter().filter(|&&p| p < len).copied().collect();
        for combo in 0..1usize << free_here.len() {
            let mut w = pattern.prefix(len);
            let mut bits: Vec<bool> = w.iter().collect();
            for (j, &p) in free_here.iter().enumerate() {
                bits[p] = (combo >> (free_here.len() - 1 - j)) & 1 == 1;
            }
            w = BitWord::from_bits(bits);
            if !self.nodes.contains(&w) {
                return w;
            }
        }
        BitWord::empty()
    }

    /// Minimal-candidate search: the free set must cover every disagreement,
    /// and any larger free set only enlarges the induced prefix.
    fn classify_silver_search(&self) -> ClassifyVerdict {
        if self.nodes.is_empty() {
            return ClassifyVerdict::Consistent(Some(TreeWitness::Silver(SilverWitness {
                pattern: BitWord::empty(),
                free: BTreeSet::new(),
            })));
        }
        let free = self.disagreement_positions();
        let mut bits = vec![false; self.depth];
        for n in &self.nodes {
            for (i, b) in n.iter().enumerate() {
                if !free.contains(&i) {
                    bits[i] = b;
                }
            }
        }
        self.silver_equality(&BitWord::from_bits(bits), &free)
    }

    fn classify_silver_with(&self, w: &SilverWitness) -> Result<ClassifyVerdict, TreeError> {
        if w.pattern.len() != self.depth {
            return Err(TreeError::BadWitness(format!(
                "pattern length {} != prefix depth {}",
                w.pattern.len(),
                self.depth
            )));
        }
        if w.free.iter().any(|&p| p >= self.depth) {
            return Err(TreeError::BadWitness("free position beyond depth".into()));
        }
        Ok(self.silver_equality(&w.pattern, &w.free))
    }

    /// Nodes keyed by (length, last bit); words of a fixed length extending
    /// a given prefix are contiguous in sorted order, so realized-value
    /// queries become range lookups.
    fn last_bit_index(&self) -> BTreeMap<(usize, bool), BTreeSet<BitWord>> {
        let mut idx: BTreeMap<(usize, bool), BTreeSet<BitWord>> = BTreeMap::new();
        for n in &self.nodes {
            if !n.is_empty() {
                idx.entry((n.len(), n.bit(n.len() - 1)))
                    .or_default()
                    .insert(n.clone());
            }
        }
        idx
    }

    fn realized(
        idx: &BTreeMap<(usize, bool), BTreeSet<BitWord>>,
        node: &BitWord,
        pos: usize,
        bit: bool,
    ) -> bool {
        match idx.get(&(pos + 1, bit)) {
            None => false,
            Some(set) => set
                .range(node.clone()..)
                .next()
                .is_some_and(|w| node.is_prefix_of(w)),
        }
    }

    fn spinas_node_ok(
        &self,
        idx: &BTreeMap<(usize, bool), BTreeSet<BitWord>>,
        node: &BitWord,
        bound: usize,
    ) -> Option<(usize, String)> {
        let upper = self.depth.saturating_sub(1);
        for pos in bound..upper {
            if !Self::realized(idx, node, pos, false) || !Self::realized(idx, node, pos, true) {
                return Some((
                    pos,
                    format!(
                        "extensions of {} realize only one value at position {}",
                        node, pos
                    ),
                ));
            }
        }
        None
    }

    /// Without a witness this computes the minimal bound per node; such a
    /// bound always exists at finite depth, so the verdict is consistent and
    /// the value of the check lies in validating supplied bounds.
    fn classify_spinas_search(&self) -> ClassifyVerdict {
        let idx = self.last_bit_index();
        let upper = self.depth.saturating_sub(1);
        let mut bounds = BTreeMap::new();
        for n in &self.nodes {
            let mut best = upper;
            while best > 0
                && Self::realized(&idx, n, best - 1, false)
                && Self::realized(&idx, n, best - 1, true)
            {
                best -= 1;
            }
            bounds.insert(n.clone(), best);
        }
        ClassifyVerdict::Consistent(Some(TreeWitness::Spinas(SpinasWitness { bounds })))
    }

    fn classify_spinas_with(&self, w: &SpinasWitness) -> Result<ClassifyVerdict, TreeError> {
        let idx = self.last_bit_index();
        for (node, &bound) in &w.bounds {
            if !self.nodes.contains(node) {
                return Err(TreeError::BadWitness(format!(
                    "witness names {} which is not a node",
                    node
                )));
            }
            if let Some((_, reason)) = self.spinas_node_ok(&idx, node, bound) {
                return Ok(ClassifyVerdict::Violated {
                    node: node.clone(),
                    reason,
                });
            }
        }
        Ok(ClassifyVerdict::Consistent(Some(TreeWitness::Spinas(
            w.clone(),
        ))))
    }

    /// Serialize in the `.tree` format.
    pub fn to_tree_format(&self, witness: Option<&TreeWitness>) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "tree {}", self.depth);
        for n in &self.nodes {
            let _ = writeln!(out, "{}", n);
        }
        match witness {
            Some(TreeWitness::Silver(w)) => {
                let free: Vec<String> = w.free.iter().map(|p| p.to_string()).collect();
                let _ = writeln!(out, "silver {} {}", w.pattern, free.join(","));
            }
            Some(TreeWitness::Spinas(w)) => {
                for (node, bound) in &w.bounds {
                    let _ = writeln!(out, "spinas {}={}", node, bound);
                }
            }
            None => {}
        }
        out
    }

    pub fn from_tree_format(text: &str) -> Result<(Self, Option<TreeWitness>), TreeError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| TreeError::BadFormat("empty tree file".into()))?;
        let depth: usize = header
            .strip_prefix("tree ")
            .and_then(|t| t.trim().parse().ok())
            .ok_or_else(|| TreeError::BadFormat("bad tree header".into()))?;
        let mut nodes = BTreeSet::new();
        let mut silver: Option<SilverWitness> = None;
        let mut spinas_bounds: BTreeMap<BitWord, usize> = BTreeMap::new();
        for line in lines {
            let line = line.trim();
            if let Some(rest) = line.strip_prefix("silver ") {
                let mut parts = rest.split_whitespace();
                let pattern: BitWord = parts
                    .next()
                    .ok_or_else(|| TreeError::BadFormat("missing silver pattern".into()))?
                    .parse()
                    .map_err(|e| TreeError::BadFormat(format!("{e}")))?;
                let free = match parts.next() {
                    None | Some("") => BTreeSet::new(),
                    Some(list) => list
                        .split(',')
                        .filter(|t| !t.is_empty())
                        .map(|t| {
                            t.parse::<usize>()
                                .map_err(|_| TreeError::BadFormat(format!("bad position {t}")))
                        })
                        .collect::<Result<_, _>>()?,
                };
                silver = Some(SilverWitness { pattern, free });
            } else if let Some(rest) = line.strip_prefix("spinas ") {
                let (node, bound) = rest
                    .split_once('=')
                    .ok_or_else(|| TreeError::BadFormat("bad spinas line".into()))?;
                let node: BitWord = node
                    .trim()
                    .parse()
                    .map_err(|e| TreeError::BadFormat(format!("{e}")))?;
                let bound: usize = bound
                    .trim()
                    .parse()
                    .map_err(|_| TreeError::BadFormat("bad spinas bound".into()))?;
                spinas_bounds.insert(node, bound);
            } else {
                nodes.insert(
                    line.parse::<BitWord>()
                        .map_err(|e| TreeError::BadFormat(format!("{e}")))?,
                );
            }
        }
        let prefix = TreePrefix::new(depth, nodes)?;
        let witness = if let Some(s) = silver {
            Some(TreeWitness::Silver(s))
        } else if !spinas_bounds.is_empty() {
            Some(TreeWitness::Spinas(SpinasWitness {
                bounds: spinas_bounds,
            }))
        } else {
            None
        };
        Ok((prefix, witness))
    }
}

/// Smallest downward-closed prefix containing the given words.
pub fn downward_closure<'a>(words: impl IntoIterator<Item = &'a BitWord>) -> TreePrefix {
    let mut nodes = BTreeSet::new();
    let mut depth = 0;
    for w in words {
        depth = depth.max(w.len());
        for l in 0..=w.len() {
            nodes.insert(w.prefix(l));
        }
    }
    TreePrefix { depth, nodes }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TreeKind {
    Perfect,
    UniformlyPerfect,
    Silver,
    Spinas,
}

impl std::str::FromStr for TreeKind {
    type Err = TreeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "perfect" => Ok(TreeKind::Perfect),
            "uniformly-perfect" => Ok(TreeKind::UniformlyPerfect),
            "silver" => Ok(TreeKind::Silver),
            "spinas" => Ok(TreeKind::Spinas),
            _ => Err(TreeError::BadFormat(format!("unknown tree kind {s:?}"))),
        }
    }
}

/// Pattern-and-free-set witness for Silver prefixes: every node matches the
/// pattern off the free positions, and all free combinations are realized.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SilverWitness {
    pub pattern: BitWord,
    pub free: BTreeSet<usize>,
}

/// Per-node bounds past which every position realizes both bit values among
/// extensions inside the prefix.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpinasWitness {
    pub bounds: BTreeMap<BitWord, usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TreeWitness {
    Silver(SilverWitness),
    Spinas(SpinasWitness),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ClassifyVerdict {
    Consistent(Option<TreeWitness>),
    Violated { node: BitWord, reason: String },
}

impl ClassifyVerdict {
    pub fn is_consistent(&self) -> bool {
        matches!(self, ClassifyVerdict::Consistent(_))
    }
}

/// A level-indexed family of stems. Keys are branch label words; for the
/// complement-twin construction the even key positions choose between a stem
/// block and its bitwise complement, and the odd positions are free bits.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeSkeleton {
    pub levels: usize,
    pub stems: BTreeMap<BitWord, BitWord>,
    pub labels: Option<SkeletonLabels>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SkeletonLabels {
    /// Key bits alternate (complement choice, free bit) starting with a
    /// complement choice; `stages` is the number of stem blocks.
    ComplementInterleaved { stages: usize },
}

impl TreeSkeleton {
    pub fn new(levels: usize, stems: BTreeMap<BitWord, BitWord>) -> Self {
        TreeSkeleton {
            levels,
            stems,
            labels: None,
        }
    }

    /// Checks the two stem laws: each child stem extends its parent, and
    /// stems at the same level have equal length.
    pub fn validate(&self) -> Result<(), TreeError> {
        let mut level_len: BTreeMap<usize, usize> = BTreeMap::new();
        for (key, stem) in &self.stems {
            if let Some(expect) = level_len.get(&key.len()) {
                if *expect != stem.len() {
                    return Err(TreeError::BadLength(format!(
                        "stems at level {} have different lengths",
                        key.len()
                    )));
                }
            } else {
                level_len.insert(key.len(), stem.len());
            }
            if !key.is_empty() {
                let parent = key.prefix(key.len() - 1);
                if let Some(pstem) = self.stems.get(&parent) {
                    if !pstem.is_prefix_of(stem) {
                        return Err(TreeError::BadLength(format!(
                            "stem of {} does not extend its parent stem",
                            key
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn downward_closure(&self) -> TreePrefix {
        downward_closure(self.stems.values())
    }

    /// Stems at the deepest key level.
    pub fn leaf_stems(&self) -> Vec<BitWord> {
        self.stems
            .iter()
            .filter(|(k, _)| k.len() == self.levels)
            .map(|(_, v)| v.clone())
            .collect()
    }

    /// Every stem of a block-structured skeleton realizes both bit values at
    /// every position from its own end on: the next free bit splits, and
    /// both branches of every later block stay open. The witness therefore
    /// bounds each stem by its own length.
    pub fn stem_spinas_witness(&self) -> SpinasWitness {
        let bounds = self
            .stems
            .values()
            .map(|stem| (stem.clone(), stem.len()))
            .collect();
        SpinasWitness { bounds }
    }

    /// Fix every complement choice to its direct branch, keeping the free
    /// bits; the result is keyed by the free bits alone. A key ending on a
    /// complement choice and its parent map to the same free word; the
    /// longer key wins since its stem carries the following block.
    pub fn extract_silver_subtree(&self) -> Result<TreeSkeleton, TreeError> {
        let Some(SkeletonLabels::ComplementInterleaved { .. }) = self.labels else {
            return Err(TreeError::MissingLabels);
        };
        let mut chosen: BTreeMap<BitWord, (usize, BitWord)> = BTreeMap::new();
        for (key, stem) in &self.stems {
            if key.iter().step_by(2).any(|b| b) {
                continue;
            }
            let free: Vec<bool> = key.iter().skip(1).step_by(2).collect();
            let free = BitWord::from_bits(free);
            match chosen.get(&free) {
                Some((len, _)) if *len >= key.len() => {}
                _ => {
                    chosen.insert(free, (key.len(), stem.clone()));
                }
            }
        }
        let levels = chosen.keys().map(|k| k.len()).max().unwrap_or(0);
        let stems = chosen.into_iter().map(|(k, (_, s))| (k, s)).collect();
        let mut sub = TreeSkeleton::new(levels, stems);
        sub.labels = None;
        sub.validate()?;
        Ok(sub)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> BitWord {
        s.parse().unwrap()
    }

    fn set(words: &[&str]) -> BTreeSet<BitWord> {
        words.iter().map(|s| w(s)).collect()
    }

    #[test]
    fn closure_examples() {
        let p = downward_closure([w("01")].iter());
        assert_eq!(p.nodes(), &set(&["-", "0", "01"]));

        let full: Vec<BitWord> = (0..4).map(|i| BitWord::from_index(i, 2)).collect();
        let p = downward_closure(full.iter());
        assert_eq!(p.nodes().len(), 7);

        let p = downward_closure([w("00"), w("10")].iter());
        assert_eq!(p.nodes(), &set(&["-", "0", "1", "00", "10"]));
    }

    #[test]
    fn body_examples() {
        let caps = DepthCaps::default();
        let full: Vec<BitWord> = (0..4).map(|i| BitWord::from_index(i, 2)).collect();
        let p = downward_closure(full.iter());
        assert_eq!(
            p.body_at_depth(2, &caps).unwrap(),
            ClopenSet::full(Dim::One, 2, &caps).unwrap()
        );

        let p = downward_closure([w("00"), w("11")].iter());
        let body = p.body_at_depth(2, &caps).unwrap();
        assert_eq!(body.measure(), crate::dyadic::Dyadic::new(1, 1));

        let p = TreePrefix::new(0, BTreeSet::new()).unwrap();
        assert!(p.body_at_depth(0, &caps).unwrap().is_set_empty());
    }

    #[test]
    fn classify_full_is_silver() {
        let full: Vec<BitWord> = (0..8).map(|i| BitWord::from_index(i, 3)).collect();
        let p = downward_closure(full.iter());
        match p.classify(TreeKind::Silver, None).unwrap() {
            ClassifyVerdict::Consistent(Some(TreeWitness::Silver(sw))) => {
                assert_eq!(sw.free, [0usize, 1, 2].into_iter().collect());
            }
            v => panic!("expected consistent silver, got {v:?}"),
        }
    }

    #[test]
    fn classify_two_branch_prefix() {
        // {-, 0, 1, 00, 11}: uniformly perfect but not Silver.
        let p = downward_closure([w("00"), w("11")].iter());
        assert!(p
            .classify(TreeKind::UniformlyPerfect, None)
            .unwrap()
            .is_consistent());
        match p.classify(TreeKind::Silver, None).unwrap() {
            ClassifyVerdict::Violated { .. } => {}
            v => panic!("expected silver violation, got {v:?}"),
        }
    }

    #[test]
    fn classify_perfect_and_uniform() {
        let p = downward_closure([w("00"), w("01")].iter());
        assert!(p.classify(TreeKind::Perfect, None).unwrap().is_consistent());
        assert!(p
            .classify(TreeKind::UniformlyPerfect, None)
            .unwrap()
            .is_consistent());

        let p = downward_closure([w("00"), w("01"), w("10")].iter());
        match p.classify(TreeKind::UniformlyPerfect, None).unwrap() {
            ClassifyVerdict::Violated { node, .. } => assert_eq!(node, w("1")),
            v => panic!("expected violation at node 1, got {v:?}"),
        }
    }

    #[test]
    fn silver_implies_uniformly_perfect() {
        // property over a few induced Silver prefixes
        for (pattern, free) in [("000", vec![0]), ("010", vec![1, 2]), ("111", vec![0, 2])] {
            let pattern = w(pattern);
            let free: BTreeSet<usize> = free.into_iter().collect();
            let mut words = Vec::new();
            for i in 0..1usize << pattern.len() {
                let cand = BitWord::from_index(i, pattern.len());
                if (0..pattern.len())
                    .all(|p| free.contains(&p) || cand.bit(p) == pattern.bit(p))
                {
                    words.push(cand);
                }
            }
            let p = downward_closure(words.iter());
            assert!(p.classify(TreeKind::Silver, None).unwrap().is_consistent());
            assert!(p
                .classify(TreeKind::UniformlyPerfect, None)
                .unwrap()
                .is_consistent());
        }
    }

    #[test]
    fn verdicts_stable_under_full_extension() {
        let p = downward_closure([w("00"), w("11")].iter());
        // extend every leaf with full binary continuation one level deeper
        let mut words = Vec::new();
        for leaf in p.body_words(2).unwrap() {
            words.push(leaf.append_bit(false));
            words.push(leaf.append_bit(true));
        }
        let q = downward_closure(words.iter());
        for kind in [TreeKind::Silver, TreeKind::UniformlyPerfect, TreeKind::Perfect] {
            assert_eq!(
                p.classify(kind, None).unwrap().is_consistent(),
                q.classify(kind, None).unwrap().is_consistent(),
                "verdict changed for {kind:?}"
            );
        }
    }

    #[test]
    fn spinas_witness_checks() {
        let full: Vec<BitWord> = (0..8).map(|i| BitWord::from_index(i, 3)).collect();
        let p = downward_closure(full.iter());
        let mut bounds = BTreeMap::new();
        bounds.insert(BitWord::empty(), 0usize);
        let v = p
            .classify(
                TreeKind::Spinas,
                Some(&TreeWitness::Spinas(SpinasWitness { bounds })),
            )
            .unwrap();
        assert!(v.is_consistent());

        // a single-branch prefix realizes only one value everywhere
        let p = downward_closure([w("000")].iter());
        let mut bounds = BTreeMap::new();
        bounds.insert(BitWord::empty(), 0usize);
        let v = p
            .classify(
                TreeKind::Spinas,
                Some(&TreeWitness::Spinas(SpinasWitness { bounds })),
            )
            .unwrap();
        assert!(!v.is_consistent());
    }

    #[test]
    fn extract_silver_from_interleaved() {
        // one stage: block (1), then a free bit
        let mut stems = BTreeMap::new();
        stems.insert(BitWord::empty(), BitWord::empty());
        stems.insert(w("0"), w("1")); // direct block
        stems.insert(w("1"), w("0")); // complemented block
        stems.insert(w("00"), w("10"));
        stems.insert(w("01"), w("11"));
        stems.insert(w("10"), w("00"));
        stems.insert(w("11"), w("01"));
        let mut sk = TreeSkeleton::new(2, stems);
        sk.labels = Some(SkeletonLabels::ComplementInterleaved { stages: 1 });
        let silver = sk.extract_silver_subtree().unwrap();
        let leaf_set: BTreeSet<BitWord> = silver.stems.values().cloned().collect();
        assert!(leaf_set.contains(&w("1")));
        let closure = downward_closure(silver.stems.values());
        let verdict = closure.classify(TreeKind::Silver, None).unwrap();
        match verdict {
            ClassifyVerdict::Consistent(Some(TreeWitness::Silver(sw))) => {
                assert_eq!(sw.free, [1usize].into_iter().collect());
                assert!(sw.pattern.bit(0));
            }
            v => panic!("expected silver witness, got {v:?}"),
        }
        // subset law: extracted stems are stems of the full skeleton
        let full_stems: BTreeSet<BitWord> = sk.stems.values().cloned().collect();
        for s in silver.stems.values() {
            assert!(full_stems.contains(s));
        }
    }

    #[test]
    fn extract_needs_labels() {
        let sk = TreeSkeleton::new(0, BTreeMap::new());
        assert!(matches!(
            sk.extract_silver_subtree(),
            Err(TreeError::MissingLabels)
        ));
    }

    #[test]
    fn tree_format_round_trip() {
        let p = downward_closure([w("00"), w("11")].iter());
        let text = p.to_tree_format(None);
        let (q, wit) = TreePrefix::from_tree_format(&text).unwrap();
        assert_eq!(p, q);
        assert!(wit.is_none());

        let bad = "tree 2\n-\n00\n";
        assert!(TreePrefix::from_tree_format(bad).is_err());
    }

    #[test]
    fn body_recovers_skeleton_words() {
        let mut stems = BTreeMap::new();
        stems.insert(BitWord::empty(), BitWord::empty());
        stems.insert(w("0"), w("00"));
        stems.insert(w("1"), w("10"));
        let sk = TreeSkeleton::new(1, stems);
        let p = sk.downward_closure();
        assert_eq!(p.body_words(2).unwrap(), set(&["00", "10"]));
    }
}
