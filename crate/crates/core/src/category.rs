//! Finite-stage execution of the category-case constructions: the Silver
//! inscription, the complement-twin variant whose tree hosts a Silver tree,
//! and the uniformly-perfect inscription modulo the diagonal.
//!
//! Each engine is a deterministic state machine over oracle queries. The
//! stage intersection of translated copies is never materialized: it is
//! realized by sequential shrinking in lexicographic branch order, so later
//! answers preserve all earlier rectangle inclusions.

use std::collections::BTreeMap;

use crate::bitword::{base_cylinder, BitWord};
use crate::certify::{
    Certificate, Parameters, QueryRec, SkeletonRec, StageRec, Summary, VARIANT_SILVER_CAT,
    VARIANT_SPINAS_CAT, VARIANT_UNIFORM_CAT,
};
use crate::clopen::{BitcoreError, DepthCaps};
use crate::largesets::{DenseOpenFamily, ExtensionOracle, FamilyOracle, LargeSetError};
use crate::trees::{SkeletonLabels, TreeError, TreeKind, TreeSkeleton, TreeWitness};

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error(transparent)]
    Oracle(#[from] LargeSetError),
    #[error(transparent)]
    Bitcore(#[from] BitcoreError),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("internal invariant broke: {0}")]
    Internal(String),
}

#[derive(Clone, Copy, Debug)]
pub struct CategoryConfig {
    pub stages: usize,
    pub caps: DepthCaps,
}

pub struct CategoryRun {
    pub skeleton: TreeSkeleton,
    pub stages: Vec<StageRec>,
    pub certificate: Certificate,
}

/// One inscription strategy; instances are selected by name at runtime.
pub trait CategoryInscriber: Sync {
    fn name(&self) -> &'static str;
    fn variant(&self) -> &'static str;
    fn inscribe(
        &self,
        family: &DenseOpenFamily,
        input_digest: &str,
        config: &CategoryConfig,
    ) -> Result<CategoryRun, EngineError>;
}

pub fn category_strategies() -> &'static [&'static dyn CategoryInscriber] {
    &[&SilverCategory, &SpinasCategory, &UniformCategory]
}

pub fn category_strategy(name: &str) -> Option<&'static dyn CategoryInscriber> {
    category_strategies()
        .iter()
        .copied()
        .find(|s| s.name() == name)
}

fn require_levels(family: &DenseOpenFamily, stages: usize) -> Result<(), EngineError> {
    if family.count() <= stages {
        return Err(EngineError::Precondition(format!(
            "the family presents {} levels but the run needs {}",
            family.count(),
            stages + 1
        )));
    }
    Ok(())
}

fn record_query(
    queries: &mut Vec<QueryRec>,
    kind: &str,
    sigma_in: BitWord,
    rho_in: BitWord,
    sigma_out: &BitWord,
    rho_out: &BitWord,
) {
    queries.push(QueryRec {
        kind: kind.to_string(),
        sigma_in,
        rho_in,
        sigma_out: sigma_out.clone(),
        rho_out: rho_out.clone(),
    });
}

fn build_certificate(
    variant: &str,
    input_digest: &str,
    config: &CategoryConfig,
    stages: Vec<StageRec>,
    skeleton: &TreeSkeleton,
    tree_class: &str,
) -> Certificate {
    let final_depth = skeleton
        .stems
        .values()
        .map(|s| s.len())
        .max()
        .unwrap_or(0);
    let mut claims = BTreeMap::new();
    claims.insert(
        "dense_set".to_string(),
        "intersection over n of the union over m >= n of the recorded V_m cylinders".to_string(),
    );
    claims.insert("stems".to_string(), skeleton.stems.len().to_string());
    Certificate {
        variant: variant.to_string(),
        input_digest: input_digest.to_string(),
        parameters: Parameters {
            stages: config.stages,
        },
        stages,
        skeleton: SkeletonRec::from_skeleton(skeleton),
        summary: Summary {
            final_depth,
            tree_class: tree_class.to_string(),
            claims,
        },
    }
}

// ---------------------------------------------------------------------------
// Silver
// ---------------------------------------------------------------------------

pub struct SilverCategory;

impl SilverCategory {
    fn prefix(taus: &[BitWord], branch: &BitWord) -> BitWord {
        let mut out = BitWord::empty();
        for (k, bit) in branch.iter().enumerate() {
            out = out.concat(&taus[k]).append_bit(bit);
        }
        out
    }
}

impl CategoryInscriber for SilverCategory {
    fn name(&self) -> &'static str {
        "silver"
    }

    fn variant(&self) -> &'static str {
        VARIANT_SILVER_CAT
    }

    fn inscribe(
        &self,
        family: &DenseOpenFamily,
        input_digest: &str,
        config: &CategoryConfig,
    ) -> Result<CategoryRun, EngineError> {
        require_levels(family, config.stages)?;
        let oracle = FamilyOracle::new(family);
        let mut taus: Vec<BitWord> = Vec::new();
        let mut stage_recs = Vec::new();
        let mut prefix_len = 0usize;
        for n in 0..=config.stages {
            let base = base_cylinder(n);
            let mut alpha = BitWord::empty();
            let mut rho = base.clone();
            let mut queries = Vec::new();
            let mut w_chain = Vec::new();
            for i in 0..1usize << n {
                let branch = BitWord::from_index(i, n);
                let head = Self::prefix(&taus, &branch);
                let sigma_q = head.concat(&alpha);
                let (s_out, r_out) = oracle.extend(n, &sigma_q, &rho)?;
                if !sigma_q.is_prefix_of(&s_out) {
                    return Err(EngineError::Internal(
                        "oracle answer does not extend the query".into(),
                    ));
                }
                record_query(&mut queries, "c", sigma_q, rho.clone(), &s_out, &r_out);
                alpha = s_out.suffix_from(prefix_len);
                w_chain.push(r_out.clone());
                rho = r_out;
            }
            taus.push(alpha.clone());
            prefix_len += alpha.len() + 1;
            let mut rec = StageRec::empty(n);
            rec.base = Some(base);
            rec.tau = Some(alpha);
            rec.v = Some(rho);
            rec.queries = Some(queries);
            rec.w_chain = Some(w_chain);
            stage_recs.push(rec);
        }
        let mut stems = BTreeMap::new();
        for k in 0..=config.stages {
            for i in 0..1usize << k {
                let key = BitWord::from_index(i, k);
                stems.insert(key.clone(), Self::prefix(&taus, &key).concat(&taus[k]));
            }
        }
        let skeleton = TreeSkeleton::new(config.stages, stems);
        skeleton.validate()?;
        let closure = skeleton.downward_closure();
        if !closure.classify(TreeKind::Silver, None)?.is_consistent() {
            return Err(EngineError::Internal(
                "constructed skeleton fails the Silver recognizer".into(),
            ));
        }
        let certificate = build_certificate(
            self.variant(),
            input_digest,
            config,
            stage_recs.clone(),
            &skeleton,
            "silver",
        );
        Ok(CategoryRun {
            skeleton,
            stages: stage_recs,
            certificate,
        })
    }
}

// ---------------------------------------------------------------------------
// Complement-twin variant
// ---------------------------------------------------------------------------

pub struct SpinasCategory;

impl SpinasCategory {
    fn prefix(taus: &[BitWord], branch: &BitWord, twins: &BitWord) -> BitWord {
        let mut out = BitWord::empty();
        for (k, bit) in branch.iter().enumerate() {
            let block = if twins.bit(k) {
                taus[k].complement()
            } else {
                taus[k].clone()
            };
            out = out.concat(&block).append_bit(bit);
        }
        out
    }

    fn interleaved_stem(taus: &[BitWord], key: &BitWord) -> BitWord {
        let mut out = BitWord::empty();
        for (p, bit) in key.iter().enumerate() {
            if p % 2 == 0 {
                let block = if bit {
                    taus[p / 2].complement()
                } else {
                    taus[p / 2].clone()
                };
                out = out.concat(&block);
            } else {
                out = out.append_bit(bit);
            }
        }
        out
    }
}

impl CategoryInscriber for SpinasCategory {
    fn name(&self) -> &'static str {
        "spinas"
    }

    fn variant(&self) -> &'static str {
        VARIANT_SPINAS_CAT
    }

    fn inscribe(
        &self,
        family: &DenseOpenFamily,
        input_digest: &str,
        config: &CategoryConfig,
    ) -> Result<CategoryRun, EngineError> {
        require_levels(family, config.stages)?;
        let oracle = FamilyOracle::new(family);
        let mut taus: Vec<BitWord> = Vec::new();
        let mut stage_recs = Vec::new();
        let mut prefix_len = 0usize;
        for n in 0..=config.stages {
            let base = base_cylinder(n);
            let mut alpha = BitWord::empty();
            let mut rho = base.clone();
            let mut queries = Vec::new();
            let mut w_chain = Vec::new();
            for i in 0..1usize << n {
                let branch = BitWord::from_index(i, n);
                for j in 0..1usize << n {
                    let twins = BitWord::from_index(j, n);
                    let head = Self::prefix(&taus, &branch, &twins);
                    let sigma_q = head.concat(&alpha);
                    // two chained calls: extend, flip, extend, unflip
                    let (s1, r1) = oracle.extend(n, &sigma_q, &rho)?;
                    record_query(&mut queries, "c", sigma_q.clone(), rho.clone(), &s1, &r1);
                    let s1f = s1.flip_from(prefix_len);
                    let (s2, r2) = oracle.extend(n, &s1f, &r1)?;
                    record_query(&mut queries, "c", s1f, r1, &s2, &r2);
                    let s_final = s2.flip_from(prefix_len);
                    if !sigma_q.is_prefix_of(&s_final) {
                        return Err(EngineError::Internal(
                            "flip-symmetrized answer does not extend the query".into(),
                        ));
                    }
                    alpha = s_final.suffix_from(prefix_len);
                    w_chain.push(r2.clone());
                    rho = r2;
                }
            }
            taus.push(alpha.clone());
            prefix_len += alpha.len() + 1;
            let mut rec = StageRec::empty(n);
            rec.base = Some(base);
            rec.tau = Some(alpha);
            rec.v = Some(rho);
            rec.queries = Some(queries);
            rec.w_chain = Some(w_chain);
            stage_recs.push(rec);
        }
        // interleaved skeleton over keys of length <= 2 * stages + 1
        let mut stems = BTreeMap::new();
        let key_depth = 2 * config.stages + 1;
        for len in 0..=key_depth {
            for i in 0..1usize << len {
                let key = BitWord::from_index(i, len);
                stems.insert(key.clone(), Self::interleaved_stem(&taus, &key));
            }
        }
        let mut skeleton = TreeSkeleton::new(key_depth, stems);
        skeleton.labels = Some(SkeletonLabels::ComplementInterleaved {
            stages: config.stages + 1,
        });
        skeleton.validate()?;
        let silver = skeleton.extract_silver_subtree()?;
        if !silver
            .downward_closure()
            .classify(TreeKind::Silver, None)?
            .is_consistent()
        {
            return Err(EngineError::Internal(
                "extracted subtree fails the Silver recognizer".into(),
            ));
        }
        let witness = TreeWitness::Spinas(skeleton.stem_spinas_witness());
        if !skeleton
            .downward_closure()
            .classify(TreeKind::Spinas, Some(&witness))?
            .is_consistent()
        {
            return Err(EngineError::Internal(
                "constructed skeleton fails the Spinas recognizer".into(),
            ));
        }
        let certificate = build_certificate(
            self.variant(),
            input_digest,
            config,
            stage_recs.clone(),
            &skeleton,
            "spinas",
        );
        Ok(CategoryRun {
            skeleton,
            stages: stage_recs,
            certificate,
        })
    }
}

// ---------------------------------------------------------------------------
// Uniformly perfect, modulo the diagonal
// ---------------------------------------------------------------------------

/// Shrink a family of pairwise-incomparable, equal-length words so that every
/// ordered pair spans a rectangle inside the level set, then pad back to a
/// common length. Extensions only, so earlier inclusions survive later calls.
pub fn pairwise_shrink(
    oracle: &dyn ExtensionOracle,
    family: &[BitWord],
    level: usize,
) -> Result<(Vec<BitWord>, Vec<QueryRec>), EngineError> {
    if let Some(first) = family.first() {
        if family.iter().any(|w| w.len() != first.len()) {
            return Err(EngineError::Precondition(
                "pairwise shrink needs equal-length words".into(),
            ));
        }
    }
    for (i, a) in family.iter().enumerate() {
        for b in family.iter().skip(i + 1) {
            if a.compatible(b) {
                return Err(EngineError::Precondition(format!(
                    "family words {} and {} are comparable",
                    a, b
                )));
            }
        }
    }
    let mut members: Vec<BitWord> = family.to_vec();
    let mut queries = Vec::new();
    for s in 0..members.len() {
        for t in 0..members.len() {
            if s == t {
                continue;
            }
            let (a, b) = oracle.extend(level, &members[s], &members[t])?;
            record_query(
                &mut queries,
                "p",
                members[s].clone(),
                members[t].clone(),
                &a,
                &b,
            );
            members[s] = a;
            members[t] = b;
        }
    }
    let maxlen = members.iter().map(|w| w.len()).max().unwrap_or(0);
    for w in &mut members {
        while w.len() < maxlen {
            w.push(false);
        }
    }
    Ok((members, queries))
}

pub struct UniformCategory;

impl CategoryInscriber for UniformCategory {
    fn name(&self) -> &'static str {
        "uniform"
    }

    fn variant(&self) -> &'static str {
        VARIANT_UNIFORM_CAT
    }

    fn inscribe(
        &self,
        family: &DenseOpenFamily,
        input_digest: &str,
        config: &CategoryConfig,
    ) -> Result<CategoryRun, EngineError> {
        require_levels(family, config.stages)?;
        let oracle = FamilyOracle::new(family);
        let mut stems: BTreeMap<BitWord, BitWord> = BTreeMap::new();
        let mut stage_recs = Vec::new();

        // stage 0
        let base0 = base_cylinder(0);
        let (s0, v0) = oracle.extend(0, &BitWord::empty(), &base0)?;
        let mut queries0 = Vec::new();
        record_query(
            &mut queries0,
            "c",
            BitWord::empty(),
            base0.clone(),
            &s0,
            &v0,
        );
        stems.insert(BitWord::empty(), s0);
        let mut rec0 = StageRec::empty(0);
        rec0.base = Some(base0);
        rec0.v = Some(v0.clone());
        rec0.w_chain = Some(vec![v0]);
        rec0.queries = Some(queries0);
        stage_recs.push(rec0);

        for n in 1..=config.stages {
            let base = base_cylinder(n);
            let mut rho = base.clone();
            let mut queries = Vec::new();
            let mut w_chain = Vec::new();
            // descending W chain over the previous level in lexicographic order
            let prev_keys: Vec<BitWord> = stems
                .keys()
                .filter(|k| k.len() == n - 1)
                .cloned()
                .collect();
            let mut proposed: Vec<(BitWord, BitWord)> = Vec::new();
            for key in &prev_keys {
                for bit in [false, true] {
                    let seed = stems[key].append_bit(bit);
                    let (s_out, r_out) = oracle.extend(n, &seed, &rho)?;
                    record_query(&mut queries, "c", seed, rho.clone(), &s_out, &r_out);
                    w_chain.push(r_out.clone());
                    proposed.push((key.append_bit(bit), s_out));
                    rho = r_out;
                }
            }
            let v_n = rho;
            // equal lengths before the pairwise step
            let maxlen = proposed.iter().map(|(_, w)| w.len()).max().unwrap_or(0);
            let padded: Vec<BitWord> = proposed
                .iter()
                .map(|(_, w)| {
                    let mut w = w.clone();
                    while w.len() < maxlen {
                        w.push(false);
                    }
                    w
                })
                .collect();
            let (finals, pair_queries) = pairwise_shrink(&oracle, &padded, n)?;
            queries.extend(pair_queries);
            for ((key, _), stem) in proposed.iter().zip(finals) {
                stems.insert(key.clone(), stem);
            }
            let mut rec = StageRec::empty(n);
            rec.base = Some(base);
            rec.v = Some(v_n);
            rec.queries = Some(queries);
            rec.w_chain = Some(w_chain);
            stage_recs.push(rec);
        }

        let skeleton = TreeSkeleton::new(config.stages, stems);
        skeleton.validate()?;
        if !skeleton
            .downward_closure()
            .classify(TreeKind::UniformlyPerfect, None)?
            .is_consistent()
        {
            return Err(EngineError::Internal(
                "constructed skeleton fails the uniformly-perfect recognizer".into(),
            ));
        }
        let certificate = build_certificate(
            self.variant(),
            input_digest,
            config,
            stage_recs.clone(),
            &skeleton,
            "uniformly-perfect",
        );
        Ok(CategoryRun {
            skeleton,
            stages: stage_recs,
            certificate,
        })
    }
}
