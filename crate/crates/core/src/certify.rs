//! Certificate data model and the independent verifier.
//!
//! A certificate is a full stage-by-stage transcript of one construction
//! run. Verification re-derives every numbered condition from the
//! certificate and the instance files alone, in exact arithmetic, without
//! calling any engine code path. The serialization is canonical: identical
//! runs produce byte-identical text.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bitword::{base_cylinder, BitWord};
use crate::clopen::{ClopenRepr, ClopenSet, DepthCaps, Dim};
use crate::dyadic::{stage_epsilon, stage_retention, Dyadic, Ratio};
use crate::largesets::{DenseOpenFamily, Filtration, LargeSetError};
use crate::trees::{downward_closure, SkeletonLabels, TreeKind, TreeSkeleton};

pub const VARIANT_SILVER_CAT: &str = "silver-cat";
pub const VARIANT_SPINAS_CAT: &str = "spinas-cat";
pub const VARIANT_UNIFORM_CAT: &str = "uniform-cat";
pub const VARIANT_SILVER_MEAS: &str = "silver-meas";
pub const VARIANT_UNIFORM_MEAS: &str = "uniform-meas";

#[derive(Debug, thiserror::Error)]
pub enum CertifyError {
    #[error("digest mismatch: certificate {expected}, instance {actual}")]
    DigestMismatch { expected: String, actual: String },
    #[error("malformed certificate: {0}")]
    MalformedCertificate(String),
    #[error("unknown variant {0:?}")]
    UnknownVariant(String),
    #[error(transparent)]
    Instance(#[from] LargeSetError),
}

/// One oracle call with its answer, in execution order. `kind` is `c` for
/// the stage shrink chain and `p` for pairwise shrinking calls.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct QueryRec {
    pub kind: String,
    pub sigma_in: BitWord,
    pub rho_in: BitWord,
    pub sigma_out: BitWord,
    pub rho_out: BitWord,
}

/// Unified stage record; category runs fill the first group of fields,
/// measure runs the second.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct StageRec {
    pub n: usize,
    pub base: Option<BitWord>,
    pub tau: Option<BitWord>,
    pub v: Option<BitWord>,
    pub queries: Option<Vec<QueryRec>>,
    pub w_chain: Option<Vec<BitWord>>,
    pub big_n: Option<usize>,
    pub n_index: Option<usize>,
    pub epsilon: Option<Ratio>,
    pub sigma: Option<BTreeMap<BitWord, BitWord>>,
    pub h: Option<Vec<ClopenRepr>>,
    pub picks: Option<Vec<BitWord>>,
    pub r_measure: Option<Dyadic>,
}

impl StageRec {
    pub fn empty(n: usize) -> Self {
        StageRec {
            n,
            base: None,
            tau: None,
            v: None,
            queries: None,
            w_chain: None,
            big_n: None,
            n_index: None,
            epsilon: None,
            sigma: None,
            h: None,
            picks: None,
            r_measure: None,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct SkeletonRec {
    pub levels: usize,
    pub stems: BTreeMap<BitWord, BitWord>,
    pub labels: Option<SkeletonLabels>,
}

impl SkeletonRec {
    pub fn from_skeleton(s: &TreeSkeleton) -> Self {
        SkeletonRec {
            levels: s.levels,
            stems: s.stems.clone(),
            labels: s.labels,
        }
    }

    pub fn to_skeleton(&self) -> TreeSkeleton {
        let mut sk = TreeSkeleton::new(self.levels, self.stems.clone());
        sk.labels = self.labels;
        sk
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct Parameters {
    pub stages: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct Summary {
    pub final_depth: usize,
    pub tree_class: String,
    pub claims: BTreeMap<String, String>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct Certificate {
    pub variant: String,
    #[serde(rename = "input-digest")]
    pub input_digest: String,
    pub parameters: Parameters,
    pub stages: Vec<StageRec>,
    pub skeleton: SkeletonRec,
    pub summary: Summary,
}

impl Certificate {
    pub fn to_text(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("certificate serialization");
        s.push('\n');
        s
    }

    pub fn from_text(text: &str) -> Result<Self, CertifyError> {
        serde_json::from_str(text).map_err(|e| CertifyError::MalformedCertificate(e.to_string()))
    }
}

/// Content hash of an instance file.
pub fn digest(text: &str) -> String {
    let mut h = Sha256::new();
    h.update(text.as_bytes());
    let out = h.finalize();
    out.iter().map(|b| format!("{b:02x}")).collect()
}

/// A parsed instance file, as named by the certificate variant.
pub enum Instance {
    DenseOpen(DenseOpenFamily),
    Filtration(Filtration),
}

impl Instance {
    pub fn from_text(text: &str, caps: &DepthCaps) -> Result<Self, LargeSetError> {
        let header = text.lines().next().unwrap_or("");
        if header.starts_with("dof") {
            Ok(Instance::DenseOpen(DenseOpenFamily::from_dof(text)?))
        } else if header.starts_with("filt") {
            Ok(Instance::Filtration(Filtration::from_filt(text, caps)?))
        } else {
            Err(LargeSetError::BadFormat(
                "instance header is neither dof nor filt".into(),
            ))
        }
    }
}

/// Verification outcome: pass, or the first violated condition with exact
/// values in the detail.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerifyReport {
    pub pass: bool,
    pub failure: Option<Failure>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Failure {
    pub condition: String,
    pub stage: Option<usize>,
    pub detail: String,
}

impl VerifyReport {
    fn pass() -> Self {
        VerifyReport {
            pass: true,
            failure: None,
        }
    }

    fn fail(condition: &str, stage: Option<usize>, detail: String) -> Self {
        VerifyReport {
            pass: false,
            failure: Some(Failure {
                condition: condition.to_string(),
                stage,
                detail,
            }),
        }
    }
}

/// Per-variant condition checkers behind a common interface, found by the
/// certificate's variant name.
pub trait CertChecker: Sync {
    fn variant(&self) -> &'static str;
    fn check(&self, cert: &Certificate, instance: &Instance, caps: &DepthCaps) -> VerifyReport;
}

pub fn checkers() -> &'static [&'static dyn CertChecker] {
    &[
        &SilverCategoryChecker,
        &SpinasCategoryChecker,
        &UniformCategoryChecker,
        &SilverMeasureChecker,
        &UniformMeasureChecker,
    ]
}

pub fn checker_for(variant: &str) -> Option<&'static dyn CertChecker> {
    checkers().iter().copied().find(|c| c.variant() == variant)
}

/// Re-check every condition of a certificate against the instance text.
pub fn verify_certificate(
    cert: &Certificate,
    instance_text: &str,
    caps: &DepthCaps,
) -> Result<VerifyReport, CertifyError> {
    let actual = digest(instance_text);
    if actual != cert.input_digest {
        return Ok(VerifyReport::fail(
            "digest",
            None,
            format!("certificate {} vs instance {}", cert.input_digest, actual),
        ));
    }
    let instance = Instance::from_text(instance_text, caps)?;
    let checker = checker_for(&cert.variant)
        .ok_or_else(|| CertifyError::UnknownVariant(cert.variant.clone()))?;
    Ok(checker.check(cert, &instance, caps))
}

// ---------------------------------------------------------------------------
// shared helpers
// ---------------------------------------------------------------------------

macro_rules! require {
    ($cond:expr, $id:expr, $stage:expr, $($arg:tt)*) => {
        if !($cond) {
            return VerifyReport::fail($id, $stage, format!($($arg)*));
        }
    };
}

fn stage_field<'a, T>(
    value: &'a Option<T>,
    name: &str,
    n: usize,
) -> Result<&'a T, VerifyReport> {
    value.as_ref().ok_or_else(|| {
        VerifyReport::fail(
            "format",
            Some(n),
            format!("stage {} is missing field {}", n, name),
        )
    })
}

macro_rules! field {
    ($opt:expr, $name:expr, $n:expr) => {
        match stage_field($opt, $name, $n) {
            Ok(v) => v,
            Err(r) => return r,
        }
    };
}

/// The stem prefix tau_0 i_0 ... tau_{n-1} i_{n-1} of the direct-branch
/// constructions.
fn chain_prefix(taus: &[BitWord], branch: &BitWord) -> BitWord {
    let mut out = BitWord::empty();
    for (k, bit) in branch.iter().enumerate() {
        out = out.concat(&taus[k]).append_bit(bit);
    }
    out
}

/// As above, with each block replaced by its complement when the twin choice
/// says so.
fn twin_prefix(taus: &[BitWord], branch: &BitWord, twins: &BitWord) -> BitWord {
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

/// Interleaved-key stem: even positions pick a block or its complement, odd
/// positions append a free bit.
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

fn queries_replay(
    fam: &DenseOpenFamily,
    stage: &StageRec,
    caps: &DepthCaps,
) -> Result<(), VerifyReport> {
    let n = stage.n;
    let queries = match &stage.queries {
        Some(q) => q,
        None => return Ok(()),
    };
    let level = match fam.level_set(n, caps) {
        Ok(l) => l,
        Err(e) => {
            return Err(VerifyReport::fail(
                "replay",
                Some(n),
                format!("cannot present level {}: {}", n, e),
            ))
        }
    };
    let mut last_rho: Option<&BitWord> = None;
    for (qi, q) in queries.iter().enumerate() {
        if !q.sigma_in.is_prefix_of(&q.sigma_out) || !q.rho_in.is_prefix_of(&q.rho_out) {
            return Err(VerifyReport::fail(
                "replay",
                Some(n),
                format!("query {} answer does not extend its input", qi),
            ));
        }
        match level.contains_rectangle(&q.sigma_out, &q.rho_out) {
            Ok(true) => {}
            _ => {
                return Err(VerifyReport::fail(
                    "replay",
                    Some(n),
                    format!(
                        "query {} answer [{}]x[{}] escapes the level-{} set",
                        qi, q.sigma_out, q.rho_out, n
                    ),
                ))
            }
        }
        if q.kind == "c" {
            if let Some(prev) = last_rho {
                if !prev.is_prefix_of(&q.rho_out) {
                    return Err(VerifyReport::fail(
                        "chain",
                        Some(n),
                        format!("chain query {} does not shrink monotonically", qi),
                    ));
                }
            }
            last_rho = Some(&q.rho_out);
        }
    }
    Ok(())
}

fn expect_family(instance: &Instance) -> Result<&DenseOpenFamily, VerifyReport> {
    match instance {
        Instance::DenseOpen(f) => Ok(f),
        Instance::Filtration(_) => Err(VerifyReport::fail(
            "format",
            None,
            "category certificate given a filtration instance".into(),
        )),
    }
}

fn expect_filtration(instance: &Instance) -> Result<&Filtration, VerifyReport> {
    match instance {
        Instance::Filtration(f) => Ok(f),
        Instance::DenseOpen(_) => Err(VerifyReport::fail(
            "format",
            None,
            "measure certificate given a dense-open instance".into(),
        )),
    }
}

// ---------------------------------------------------------------------------
// category checkers
// ---------------------------------------------------------------------------

struct SilverCategoryChecker;

impl CertChecker for SilverCategoryChecker {
    fn variant(&self) -> &'static str {
        VARIANT_SILVER_CAT
    }

    fn check(&self, cert: &Certificate, instance: &Instance, caps: &DepthCaps) -> VerifyReport {
        let fam = match expect_family(instance) {
            Ok(f) => f,
            Err(r) => return r,
        };
        let stages = cert.parameters.stages;
        require!(
            cert.stages.len() == stages + 1,
            "format",
            None,
            "expected {} stage records, found {}",
            stages + 1,
            cert.stages.len()
        );
        let mut taus: Vec<BitWord> = Vec::new();
        for (k, stage) in cert.stages.iter().enumerate() {
            require!(stage.n == k, "format", Some(k), "stage index out of order");
            let base = field!(&stage.base, "base", k);
            let tau = field!(&stage.tau, "tau", k);
            let v = field!(&stage.v, "v", k);
            require!(
                *base == base_cylinder(k),
                "format",
                Some(k),
                "stage base {} is not the canonical cylinder {}",
                base,
                base_cylinder(k)
            );
            // condition (1): V_n inside S_n
            require!(
                base.is_prefix_of(v),
                "cond-1",
                Some(k),
                "V_{} = [{}] is not inside S_{} = [{}]",
                k,
                v,
                k,
                base
            );
            if let Err(r) = queries_replay(fam, stage, caps) {
                return r;
            }
            taus.push(tau.clone());
            // condition (2): every branch rectangle lies in U_k
            let level = match fam.level_set(k, caps) {
                Ok(l) => l,
                Err(e) => return VerifyReport::fail("format", Some(k), format!("{e}")),
            };
            for i in 0..1usize << k {
                let branch = BitWord::from_index(i, k);
                let stem = chain_prefix(&taus, &branch).concat(tau);
                match level.contains_rectangle(&stem, v) {
                    Ok(true) => {}
                    _ => {
                        return VerifyReport::fail(
                            "cond-2",
                            Some(k),
                            format!(
                                "[{}]x[{}] is not inside U_{} (branch {})",
                                stem, v, k, branch
                            ),
                        )
                    }
                }
            }
        }
        // skeleton consistency with the recorded tau sequence
        for (key, stem) in &cert.skeleton.stems {
            require!(
                key.len() <= stages,
                "skeleton",
                None,
                "skeleton key {} deeper than the run",
                key
            );
            let expect = chain_prefix(&taus, key).concat(&taus[key.len()]);
            require!(
                *stem == expect,
                "skeleton",
                None,
                "stem of {} is {} but the stage data gives {}",
                key,
                stem,
                expect
            );
        }
        for k in 0..=stages {
            let have = cert
                .skeleton
                .stems
                .keys()
                .filter(|key| key.len() == k)
                .count();
            require!(
                have == 1usize << k,
                "skeleton",
                None,
                "skeleton level {} has {} stems, expected {}",
                k,
                have,
                1usize << k
            );
        }
        // classification
        let closure = downward_closure(cert.skeleton.stems.values());
        match closure.classify(TreeKind::Silver, None) {
            Ok(v) if v.is_consistent() => {}
            Ok(_) => {
                return VerifyReport::fail(
                    "classification",
                    None,
                    "closure fails the Silver recognizer".into(),
                )
            }
            Err(e) => return VerifyReport::fail("classification", None, format!("{e}")),
        }
        VerifyReport::pass()
    }
}

struct SpinasCategoryChecker;

impl CertChecker for SpinasCategoryChecker {
    fn variant(&self) -> &'static str {
        VARIANT_SPINAS_CAT
    }

    fn check(&self, cert: &Certificate, instance: &Instance, caps: &DepthCaps) -> VerifyReport {
        let fam = match expect_family(instance) {
            Ok(f) => f,
            Err(r) => return r,
        };
        let stages = cert.parameters.stages;
        require!(
            cert.stages.len() == stages + 1,
            "format",
            None,
            "expected {} stage records, found {}",
            stages + 1,
            cert.stages.len()
        );
        let mut taus: Vec<BitWord> = Vec::new();
        for (k, stage) in cert.stages.iter().enumerate() {
            require!(stage.n == k, "format", Some(k), "stage index out of order");
            let base = field!(&stage.base, "base", k);
            let tau = field!(&stage.tau, "tau", k);
            let v = field!(&stage.v, "v", k);
            require!(
                *base == base_cylinder(k),
                "format",
                Some(k),
                "stage base mismatch"
            );
            require!(
                base.is_prefix_of(v),
                "cond-1",
                Some(k),
                "V_{} = [{}] is not inside S_{} = [{}]",
                k,
                v,
                k,
                base
            );
            if let Err(r) = queries_replay(fam, stage, caps) {
                return r;
            }
            taus.push(tau.clone());
            let level = match fam.level_set(k, caps) {
                Ok(l) => l,
                Err(e) => return VerifyReport::fail("format", Some(k), format!("{e}")),
            };
            // condition (2) over all branch / twin choices including the new block
            for i in 0..1usize << k {
                let branch = BitWord::from_index(i, k);
                for j in 0..1usize << k {
                    let twins = BitWord::from_index(j, k);
                    let prefix = twin_prefix(&taus, &branch, &twins);
                    for last in [false, true] {
                        let block = if last { tau.complement() } else { tau.clone() };
                        let stem = prefix.concat(&block);
                        match level.contains_rectangle(&stem, v) {
                            Ok(true) => {}
                            _ => {
                                return VerifyReport::fail(
                                    "cond-2",
                                    Some(k),
                                    format!(
                                        "[{}]x[{}] escapes U_{} (i={}, j={}, twin {})",
                                        stem, v, k, branch, twins, u8::from(last)
                                    ),
                                )
                            }
                        }
                    }
                }
            }
        }
        // skeleton: interleaved keys up to 2*stages+1
        require!(
            cert.skeleton.labels == Some(SkeletonLabels::ComplementInterleaved { stages: stages + 1 }),
            "skeleton",
            None,
            "spinas skeleton must carry complement-interleaved labels"
        );
        for (key, stem) in &cert.skeleton.stems {
            require!(
                key.len() <= 2 * stages + 1,
                "skeleton",
                None,
                "skeleton key {} deeper than the run",
                key
            );
            let expect = interleaved_stem(&taus, key);
            require!(
                *stem == expect,
                "skeleton",
                None,
                "stem of {} is {} but the stage data gives {}",
                key,
                stem,
                expect
            );
        }
        for len in 0..=2 * stages + 1 {
            let have = cert
                .skeleton
                .stems
                .keys()
                .filter(|key| key.len() == len)
                .count();
            require!(
                have == 1usize << len,
                "skeleton",
                None,
                "skeleton key level {} has {} stems, expected {}",
                len,
                have,
                1usize << len
            );
        }
        let skeleton = cert.skeleton.to_skeleton();
        // Silver subtree sits inside, and classifies Silver
        let silver = match skeleton.extract_silver_subtree() {
            Ok(s) => s,
            Err(e) => return VerifyReport::fail("skeleton", None, format!("{e}")),
        };
        let silver_closure = silver.downward_closure();
        match silver_closure.classify(TreeKind::Silver, None) {
            Ok(v) if v.is_consistent() => {}
            _ => {
                return VerifyReport::fail(
                    "classification",
                    None,
                    "extracted subtree fails the Silver recognizer".into(),
                )
            }
        }
        let full_closure = skeleton.downward_closure();
        let depth = full_closure.depth().min(silver_closure.depth());
        let sub_body = match silver_closure.body_words(depth) {
            Ok(b) => b,
            Err(e) => return VerifyReport::fail("classification", None, format!("{e}")),
        };
        let full_body = match full_closure.body_words(depth) {
            Ok(b) => b,
            Err(e) => return VerifyReport::fail("classification", None, format!("{e}")),
        };
        require!(
            sub_body.is_subset(&full_body),
            "classification",
            None,
            "Silver body escapes the host body at depth {}",
            depth
        );
        // the full closure validates the stem-derived bound map
        let witness = crate::trees::TreeWitness::Spinas(skeleton.stem_spinas_witness());
        match full_closure.classify(TreeKind::Spinas, Some(&witness)) {
            Ok(v) if v.is_consistent() => {}
            _ => {
                return VerifyReport::fail(
                    "classification",
                    None,
                    "closure fails the Spinas recognizer on the stem bound map".into(),
                )
            }
        }
        VerifyReport::pass()
    }
}

struct UniformCategoryChecker;

impl CertChecker for UniformCategoryChecker {
    fn variant(&self) -> &'static str {
        VARIANT_UNIFORM_CAT
    }

    fn check(&self, cert: &Certificate, instance: &Instance, caps: &DepthCaps) -> VerifyReport {
        let fam = match expect_family(instance) {
            Ok(f) => f,
            Err(r) => return r,
        };
        let stages = cert.parameters.stages;
        require!(
            cert.stages.len() == stages + 1,
            "format",
            None,
            "expected {} stage records, found {}",
            stages + 1,
            cert.stages.len()
        );
        // collect level stems from the skeleton
        let mut levels: Vec<Vec<(BitWord, BitWord)>> = vec![Vec::new(); stages + 1];
        for (key, stem) in &cert.skeleton.stems {
            require!(
                key.len() <= stages,
                "skeleton",
                None,
                "skeleton key {} deeper than the run",
                key
            );
            levels[key.len()].push((key.clone(), stem.clone()));
        }
        for (k, level) in levels.iter().enumerate() {
            require!(
                level.len() == 1usize << k,
                "skeleton",
                None,
                "level {} has {} stems, expected {}",
                k,
                level.len(),
                1usize << k
            );
        }
        let stem_of = |key: &BitWord| cert.skeleton.stems.get(key).cloned();
        for (k, stage) in cert.stages.iter().enumerate() {
            require!(stage.n == k, "format", Some(k), "stage index out of order");
            let base = field!(&stage.base, "base", k);
            let v = field!(&stage.v, "v", k);
            require!(
                *base == base_cylinder(k),
                "format",
                Some(k),
                "stage base mismatch"
            );
            // condition (iv)
            require!(
                base.is_prefix_of(v),
                "cond-iv",
                Some(k),
                "V_{} = [{}] is not inside B_{} = [{}]",
                k,
                v,
                k,
                base
            );
            if let Err(r) = queries_replay(fam, stage, caps) {
                return r;
            }
            if let Some(chain) = &stage.w_chain {
                for m in 1..chain.len() {
                    require!(
                        chain[m - 1].is_prefix_of(&chain[m]),
                        "chain",
                        Some(k),
                        "W chain is not descending at step {}",
                        m
                    );
                }
            }
            let level_set = match fam.level_set(k, caps) {
                Ok(l) => l,
                Err(e) => return VerifyReport::fail("format", Some(k), format!("{e}")),
            };
            let mut len_at_level: Option<usize> = None;
            for (key, stem) in &levels[k] {
                // condition (ii)
                match len_at_level {
                    None => len_at_level = Some(stem.len()),
                    Some(l) => require!(
                        l == stem.len(),
                        "cond-ii",
                        Some(k),
                        "stems at level {} have different lengths",
                        k
                    ),
                }
                // condition (i)
                if !key.is_empty() {
                    let parent = match stem_of(&key.prefix(key.len() - 1)) {
                        Some(p) => p,
                        None => {
                            return VerifyReport::fail(
                                "skeleton",
                                Some(k),
                                format!("missing parent stem of {}", key),
                            )
                        }
                    };
                    let want = parent.append_bit(key.bit(key.len() - 1));
                    require!(
                        want.is_prefix_of(stem),
                        "cond-i",
                        Some(k),
                        "stem of {} does not extend its parent's stem with the branch bit",
                        key
                    );
                }
                // condition (v)
                match level_set.contains_rectangle(stem, v) {
                    Ok(true) => {}
                    _ => {
                        return VerifyReport::fail(
                            "cond-v",
                            Some(k),
                            format!("[{}]x[{}] escapes U_{}", stem, v, k),
                        )
                    }
                }
            }
            // condition (iii): all ordered pairs
            for (ka, a) in &levels[k] {
                for (kb, b) in &levels[k] {
                    if ka == kb {
                        continue;
                    }
                    match level_set.contains_rectangle(a, b) {
                        Ok(true) => {}
                        _ => {
                            return VerifyReport::fail(
                                "cond-iii",
                                Some(k),
                                format!("[{}]x[{}] escapes U_{} (pair {}, {})", a, b, k, ka, kb),
                            )
                        }
                    }
                }
            }
            // coverage of the off-diagonal part of body x (V_k or body):
            // a V-cell pair is covered by (v), a distinct-stem pair by (iii);
            // both were just confirmed cellwise, and same-stem pairs are the
            // deferred-to-deeper-stage diagonal neighborhood.
            for (_, u) in &levels[k] {
                require!(
                    level_set.contains_rectangle(u, v).unwrap_or(false),
                    "coverage",
                    Some(k),
                    "body cell [{}] x V_{} escapes U_{}",
                    u,
                    k,
                    k
                );
            }
        }
        let closure = downward_closure(cert.skeleton.stems.values());
        match closure.classify(TreeKind::UniformlyPerfect, None) {
            Ok(v) if v.is_consistent() => {}
            _ => {
                return VerifyReport::fail(
                    "classification",
                    None,
                    "closure fails the uniformly-perfect recognizer".into(),
                )
            }
        }
        VerifyReport::pass()
    }
}

// ---------------------------------------------------------------------------
// measure checkers
// ---------------------------------------------------------------------------

struct MeasureStageData {
    big_n: usize,
    n_index: usize,
    epsilon: Ratio,
    sigma: BTreeMap<BitWord, BitWord>,
    h: Vec<ClopenSet>,
    picks: Vec<BitWord>,
}

fn measure_stage_data(
    stage: &StageRec,
    k: usize,
    caps: &DepthCaps,
) -> Result<MeasureStageData, VerifyReport> {
    let big_n = *stage_field(&stage.big_n, "big_n", k)?;
    let n_index = *stage_field(&stage.n_index, "n_index", k)?;
    let epsilon = *stage_field(&stage.epsilon, "epsilon", k)?;
    if epsilon != stage_epsilon(k as u32) {
        return Err(VerifyReport::fail(
            "format",
            Some(k),
            format!(
                "stage epsilon {} differs from the schedule value {}",
                epsilon,
                stage_epsilon(k as u32)
            ),
        ));
    }
    let sigma = stage_field(&stage.sigma, "sigma", k)?.clone();
    if sigma.len() != 1usize << k || sigma.keys().any(|t| t.len() != k) {
        return Err(VerifyReport::fail(
            "format",
            Some(k),
            format!("stage {} stem map is not indexed by all of 2^{}", k, k),
        ));
    }
    for stem in sigma.values() {
        if stem.len() != big_n {
            return Err(VerifyReport::fail(
                "format",
                Some(k),
                format!("stem {} does not have length N_{} = {}", stem, k, big_n),
            ));
        }
    }
    let h_reprs = stage_field(&stage.h, "h", k)?;
    if h_reprs.len() != k + 1 {
        return Err(VerifyReport::fail(
            "format",
            Some(k),
            format!("stage {} carries {} H sets, expected {}", k, h_reprs.len(), k + 1),
        ));
    }
    let mut h = Vec::with_capacity(h_reprs.len());
    for (j, repr) in h_reprs.iter().enumerate() {
        match repr.to_set(caps) {
            Ok(s) if s.dim() == Dim::One && s.depth() == big_n => h.push(s),
            Ok(_) => {
                return Err(VerifyReport::fail(
                    "format",
                    Some(k),
                    format!("H_{},{} has the wrong shape", j, k),
                ))
            }
            Err(e) => return Err(VerifyReport::fail("format", Some(k), format!("{e}"))),
        }
    }
    let picks = stage_field(&stage.picks, "picks", k)?.clone();
    Ok(MeasureStageData {
        big_n,
        n_index,
        epsilon,
        sigma,
        h,
        picks,
    })
}

fn bound_to_string(r: &Ratio) -> String {
    format!("{}", r)
}

struct SilverMeasureChecker;

impl CertChecker for SilverMeasureChecker {
    fn variant(&self) -> &'static str {
        VARIANT_SILVER_MEAS
    }

    fn check(&self, cert: &Certificate, instance: &Instance, caps: &DepthCaps) -> VerifyReport {
        check_measure_common(cert, instance, caps, MeasureVariant::Silver)
    }
}

struct UniformMeasureChecker;

impl CertChecker for UniformMeasureChecker {
    fn variant(&self) -> &'static str {
        VARIANT_UNIFORM_MEAS
    }

    fn check(&self, cert: &Certificate, instance: &Instance, caps: &DepthCaps) -> VerifyReport {
        check_measure_common(cert, instance, caps, MeasureVariant::Uniform)
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum MeasureVariant {
    Silver,
    Uniform,
}

/// Position of the first disagreement; the word length when equal.
fn split_depth(a: &BitWord, b: &BitWord) -> usize {
    let mut i = 0;
    while i < a.len() && i < b.len() {
        if a.bit(i) != b.bit(i) {
            return i;
        }
        i += 1;
    }
    a.len().min(b.len())
}

fn check_measure_common(
    cert: &Certificate,
    instance: &Instance,
    caps: &DepthCaps,
    variant: MeasureVariant,
) -> VerifyReport {
    let filt = match expect_filtration(instance) {
        Ok(f) => f,
        Err(r) => return r,
    };
    let stages = cert.parameters.stages;
    require!(
        cert.stages.len() == stages + 1,
        "format",
        None,
        "expected {} stage records, found {}",
        stages + 1,
        cert.stages.len()
    );
    let mut data: Vec<MeasureStageData> = Vec::new();
    for (k, stage) in cert.stages.iter().enumerate() {
        require!(stage.n == k, "format", Some(k), "stage index out of order");
        match measure_stage_data(stage, k, caps) {
            Ok(d) => data.push(d),
            Err(r) => return r,
        }
    }
    let n_indexes: Vec<usize> = data.iter().map(|d| d.n_index).collect();
    for k in 0..data.len() {
        require!(
            n_indexes[k] < filt.len(),
            "format",
            Some(k),
            "filtration index {} out of range",
            n_indexes[k]
        );
        if k > 0 {
            require!(
                n_indexes[k] > n_indexes[k - 1],
                "format",
                Some(k),
                "filtration indexes must increase"
            );
            require!(
                data[k].big_n > data[k - 1].big_n,
                "format",
                Some(k),
                "stage depths must increase"
            );
        }
    }
    require!(
        data[0].big_n == 0 && data[0].sigma.get(&BitWord::empty()) == Some(&BitWord::empty()),
        "format",
        Some(0),
        "stage 0 must carry the empty stem at depth 0"
    );

    for k in 0..data.len() {
        let d = &data[k];
        let eps = d.epsilon;
        // condition 3 part one: H_{k,k} is the full space
        let full = match ClopenSet::full(Dim::One, d.big_n, caps) {
            Ok(f) => f,
            Err(e) => return VerifyReport::fail("format", Some(k), format!("{e}")),
        };
        require!(
            d.h[k] == full,
            "cond-3",
            Some(k),
            "H_{},{} is not the full space",
            k,
            k
        );
        if k > 0 {
            let prev = &data[k - 1];
            // condition 1
            for (tau, stem) in &d.sigma {
                let parent = tau.prefix(k - 1);
                let pstem = match prev.sigma.get(&parent) {
                    Some(p) => p,
                    None => {
                        return VerifyReport::fail(
                            "format",
                            Some(k),
                            format!("missing parent stem for {}", tau),
                        )
                    }
                };
                match variant {
                    MeasureVariant::Silver => {
                        let want = pstem.append_bit(tau.bit(k - 1));
                        require!(
                            want.is_prefix_of(stem),
                            "cond-1",
                            Some(k),
                            "stem of {} does not extend {} with branch bit {}",
                            tau,
                            pstem,
                            u8::from(tau.bit(k - 1))
                        );
                    }
                    MeasureVariant::Uniform => {
                        require!(
                            pstem.is_prefix_of(stem),
                            "cond-1",
                            Some(k),
                            "stem of {} does not extend its parent stem",
                            tau
                        );
                    }
                }
            }
            if variant == MeasureVariant::Uniform {
                // children differ, and the split offset is uniform over tau
                let mut offset: Option<usize> = None;
                for tau in prev.sigma.keys() {
                    let s0 = &d.sigma[&tau.append_bit(false)];
                    let s1 = &d.sigma[&tau.append_bit(true)];
                    require!(
                        s0 != s1,
                        "cond-1",
                        Some(k),
                        "children of {} coincide",
                        tau
                    );
                    let sp = split_depth(s0, s1);
                    match offset {
                        None => offset = Some(sp),
                        Some(o) => require!(
                            o == sp,
                            "cond-2",
                            Some(k),
                            "split offset {} of {} differs from {}",
                            sp,
                            tau,
                            o
                        ),
                    }
                }
            } else {
                // Silver condition 2: shared tail above the branch bit
                let mut tail: Option<BitWord> = None;
                for stem in d.sigma.values() {
                    let t = stem.suffix_from(prev.big_n + 1);
                    match &tail {
                        None => tail = Some(t),
                        Some(expect) => require!(
                            *expect == t,
                            "cond-2",
                            Some(k),
                            "stem tails above position {} differ",
                            prev.big_n
                        ),
                    }
                }
                // and the branch bit at position N_{k-1} is the key bit
                for (tau, stem) in &d.sigma {
                    require!(
                        stem.bit(prev.big_n) == tau.bit(k - 1),
                        "cond-1",
                        Some(k),
                        "branch bit of {} at position {} is wrong",
                        tau,
                        prev.big_n
                    );
                }
            }
            // condition 3: retention and nesting of every tracked H
            for j in 0..k {
                let now = &d.h[j];
                let before = &prev.h[j];
                match now
                    .try_coarsen(prev.big_n)
                    .map(|c| c.is_subset_of(before, caps))
                {
                    Some(Ok(true)) => {}
                    _ => {
                        // fall back to refined inclusion
                        match now.is_subset_of(&match before.refine(d.big_n, caps) {
                            Ok(r) => r,
                            Err(e) => {
                                return VerifyReport::fail("cond-3", Some(k), format!("{e}"))
                            }
                        }, caps) {
                            Ok(true) => {}
                            _ => {
                                return VerifyReport::fail(
                                    "cond-3",
                                    Some(k),
                                    format!("H_{},{} is not inside H_{},{}", j, k, j, k - 1),
                                )
                            }
                        }
                    }
                }
                let lhs = now.measure().to_ratio();
                let rhs = stage_retention(k as u32 - 1)
                    .one_minus()
                    .mul(&before.measure().to_ratio());
                require!(
                    lhs > rhs,
                    "cond-3",
                    Some(k),
                    "measure(H_{},{}) = {} fails the retention bound {}",
                    j,
                    k,
                    now.measure(),
                    bound_to_string(&rhs)
                );
            }
            // picks reproduce the stems exactly
            match variant {
                MeasureVariant::Silver => {
                    require!(
                        d.picks.len() == 1,
                        "format",
                        Some(k),
                        "silver stage needs exactly one pick"
                    );
                    let x = &d.picks[0];
                    for (tau, stem) in &d.sigma {
                        let parent = prev.sigma[&tau.prefix(k - 1)].clone();
                        let want = x.add(&parent.append_bit(tau.bit(k - 1)));
                        require!(
                            *stem == want,
                            "cond-1",
                            Some(k),
                            "stem of {} is not the pick translated into its column",
                            tau
                        );
                    }
                }
                MeasureVariant::Uniform => {
                    require!(
                        d.picks.len() == 2,
                        "format",
                        Some(k),
                        "uniform stage needs a pick pair"
                    );
                    require!(
                        d.picks[0] != d.picks[1],
                        "cond-1",
                        Some(k),
                        "pick pair is diagonal"
                    );
                    for (tau, stem) in &d.sigma {
                        let parent = prev.sigma[&tau.prefix(k - 1)].clone();
                        let x = &d.picks[usize::from(tau.bit(k - 1))];
                        let want = x.add(&parent);
                        require!(
                            *stem == want,
                            "cond-1",
                            Some(k),
                            "stem of {} is not its pick translated into the column",
                            tau
                        );
                    }
                }
            }
        }
        // condition 4, exact per-cell form
        let cell_measure = Ratio::new(1, 1u128 << (2 * d.big_n));
        let bound4 = eps.square().one_minus().mul(&cell_measure);
        for (j, h) in d.h.iter().enumerate() {
            let f = filt.set(n_indexes[j]);
            for cell_idx in h.iter_cells() {
                let rho = h.cell_word(cell_idx);
                for stem in d.sigma.values() {
                    let m = match f.measure_within_rectangle(stem, &rho) {
                        Ok(m) => m,
                        Err(e) => return VerifyReport::fail("cond-4", Some(k), format!("{e}")),
                    };
                    require!(
                        m.to_ratio() > bound4,
                        "cond-4",
                        Some(k),
                        "measure(F_{} within [{}]x[{}]) = {} <= {}",
                        n_indexes[j],
                        stem,
                        rho,
                        m,
                        bound_to_string(&bound4)
                    );
                }
            }
        }
        // condition 5 for the uniform variant: all stem pairs
        if variant == MeasureVariant::Uniform {
            let bound5 = eps.one_minus().mul(&cell_measure);
            for (ta, sa) in &d.sigma {
                for (tb, sb) in &d.sigma {
                    let dist = split_depth(ta, tb);
                    let f = filt.set(n_indexes[dist]);
                    let m = match f.measure_within_rectangle(sa, sb) {
                        Ok(m) => m,
                        Err(e) => return VerifyReport::fail("cond-5", Some(k), format!("{e}")),
                    };
                    require!(
                        m.to_ratio() > bound5,
                        "cond-5",
                        Some(k),
                        "measure(([{}]x[{}]) within F_{}) = {} <= {}",
                        sa,
                        sb,
                        n_indexes[dist],
                        m,
                        bound_to_string(&bound5)
                    );
                }
            }
        }
    }
    // truncated product bound and final inclusions
    let last = &data[data.len() - 1];
    let kk = data.len() - 1;
    for j in 0..=kk {
        let mut product = Ratio::one();
        for k in j..kk {
            product = product.mul(&stage_retention(k as u32).one_minus());
        }
        let m = last.h[j].measure().to_ratio();
        require!(
            m >= product,
            "product-bound",
            Some(kk),
            "measure(H_{},{}) = {} below the truncated product {}",
            j,
            kk,
            last.h[j].measure(),
            bound_to_string(&product)
        );
    }
    for (j, h) in last.h.iter().enumerate().take(kk) {
        let f = filt.set(n_indexes[j]);
        for cell_idx in h.iter_cells() {
            let rho = h.cell_word(cell_idx);
            for stem in last.sigma.values() {
                match f.contains_rectangle(stem, &rho) {
                    Ok(true) => {}
                    _ => {
                        return VerifyReport::fail(
                            "final-inclusion",
                            Some(kk),
                            format!(
                                "[{}]x[{}] is not inside F_{} (j = {})",
                                stem, rho, n_indexes[j], j
                            ),
                        )
                    }
                }
            }
        }
    }
    // skeleton consistency and classification
    for (tau, stem) in &last.sigma {
        require!(
            cert.skeleton.stems.get(tau) == Some(stem),
            "skeleton",
            None,
            "skeleton stem of {} disagrees with the last stage",
            tau
        );
    }
    let closure = downward_closure(cert.skeleton.stems.values());
    let (kind, name) = match variant {
        MeasureVariant::Silver => (TreeKind::Silver, "Silver"),
        MeasureVariant::Uniform => (TreeKind::UniformlyPerfect, "uniformly-perfect"),
    };
    match closure.classify(kind, None) {
        Ok(v) if v.is_consistent() => {}
        _ => {
            return VerifyReport::fail(
                "classification",
                None,
                format!("closure fails the {name} recognizer"),
            )
        }
    }
    // step-1 symmetrized threshold, recomputed from the instance
    if variant == MeasureVariant::Uniform && data.len() > 1 {
        let f0 = filt.set(n_indexes[0]);
        let sym = match f0.symmetrize(caps) {
            Ok(s) => s,
            Err(e) => return VerifyReport::fail("cond-5", Some(1), format!("{e}")),
        };
        let bound = Ratio::new(14, 16);
        require!(
            sym.measure().to_ratio() > bound,
            "cond-5",
            Some(1),
            "symmetrized F_{} has measure {} <= 14/16",
            n_indexes[0],
            sym.measure()
        );
        if let Some(r) = cert.stages[1].r_measure {
            require!(
                r.to_ratio() > bound,
                "cond-5",
                Some(1),
                "recorded step-1 pair-set measure {} <= 14/16",
                r
            );
        }
    }
    VerifyReport::pass()
}
