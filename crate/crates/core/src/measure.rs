//! Exact finite-scale execution of the measure-case constructions: the
//! density-slice filter, the Silver inscription, and the uniformly-perfect
//! inscription modulo the diagonal.
//!
//! Closed sets are clopen sets at explicit depth, so the density-one machinery
//! collapses to exact cell counting: a slice qualifies when its row carries
//! enough cells, and every threshold below is an exact rational comparison.

use std::collections::BTreeMap;

use crate::bitword::BitWord;
use crate::certify::{
    Certificate, Parameters, SkeletonRec, StageRec, Summary, VARIANT_SILVER_MEAS,
    VARIANT_UNIFORM_MEAS,
};
use crate::clopen::{Axis, BitcoreError, ClopenRepr, ClopenSet, DepthCaps, Dim};
use crate::dyadic::{stage_epsilon, stage_retention, Ratio};
use crate::largesets::Filtration;
use crate::trees::{TreeError, TreeKind, TreeSkeleton};

#[derive(Debug, thiserror::Error)]
pub enum MeasureError {
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
    #[error("insufficient filtration at stage {stage}: {detail}")]
    InsufficientFiltration { stage: usize, detail: String },
    #[error("empty pick set at stage {stage}")]
    EmptyPick { stage: usize },
    #[error("no off-diagonal cell pair in the positive intersection")]
    NoOffDiagonalCell,
    #[error("bad length: {0}")]
    BadLength(String),
    #[error("internal invariant broke: {0}")]
    Internal(String),
    #[error(transparent)]
    Bitcore(#[from] BitcoreError),
    #[error(transparent)]
    Tree(#[from] TreeError),
}

/// Union of depth-`d` slices of `[sigma]` whose sections of `f` fill more
/// than a `1 - eps` share of `h`. Requires `f` inside `[sigma] x h` with
/// measure above `(1 - eps^2)` of the rectangle; the output then covers more
/// than a `1 - eps` share of `[sigma]`.
pub fn density_filter(
    f: &ClopenSet,
    sigma: &BitWord,
    h: &ClopenSet,
    eps: &Ratio,
    caps: &DepthCaps,
) -> Result<ClopenSet, MeasureError> {
    if f.dim() != Dim::Two || h.dim() != Dim::One {
        return Err(MeasureError::PreconditionFailed(
            "density filter needs a planar set and a line set".into(),
        ));
    }
    let depth = f.depth();
    if sigma.len() > depth || h.depth() > depth {
        return Err(MeasureError::BadLength(
            "sigma and h must live at or above the planar depth".into(),
        ));
    }
    let h_fine = h.refine(depth, caps)?;
    let rect = column_rectangle(sigma, &h_fine, caps)?;
    if !f.is_subset_of(&rect, caps)? {
        return Err(MeasureError::PreconditionFailed(format!(
            "the planar set escapes [{}] x H",
            sigma
        )));
    }
    let bound = eps.square().one_minus().mul(&rect.measure().to_ratio());
    if f.measure().to_ratio() <= bound {
        return Err(MeasureError::PreconditionFailed(format!(
            "measure {} is not above (1 - eps^2) of the rectangle, bound {}",
            f.measure(),
            bound
        )));
    }
    let h_measure = h_fine.measure().to_ratio();
    let slice_bound = eps.one_minus().mul(&h_measure);
    let mut out = ClopenSet::empty(Dim::One, depth, caps)?;
    let lo = sigma.to_index() << (depth - sigma.len());
    let hi = lo + (1usize << (depth - sigma.len()));
    for row in lo..hi {
        let w = BitWord::from_index(row, depth);
        let section = f.section(&w, Axis::Vertical)?;
        if section.measure().to_ratio() > slice_bound {
            out.insert_cylinder(&w)?;
        }
    }
    let out_bound = eps
        .one_minus()
        .mul(&Ratio::new(1, 1u128 << sigma.len()));
    if out.measure().to_ratio() <= out_bound {
        return Err(MeasureError::Internal(format!(
            "slice filter output measure {} at or below its guaranteed bound {}",
            out.measure(),
            out_bound
        )));
    }
    Ok(out)
}

/// Columns at depth `n` whose cell against `x|n` meets `f` with relative
/// density above `1 - delta`; the exact 0/1 dichotomy once `n` reaches the
/// presentation depth.
pub fn good_columns(
    f: &ClopenSet,
    x: &BitWord,
    n: usize,
    delta: &Ratio,
    caps: &DepthCaps,
) -> Result<ClopenSet, MeasureError> {
    if f.dim() != Dim::Two {
        return Err(MeasureError::PreconditionFailed(
            "good columns needs a planar set".into(),
        ));
    }
    if x.len() < n {
        return Err(MeasureError::BadLength(format!(
            "point resolution {} below the requested level {}",
            x.len(),
            n
        )));
    }
    let row = x.prefix(n);
    let bound = delta.one_minus().mul(&Ratio::new(1, 1u128 << (2 * n)));
    let mut out = ClopenSet::empty(Dim::One, n, caps)?;
    for col in 0..1usize << n {
        let tau = BitWord::from_index(col, n);
        let m = f.measure_within_rectangle(&row, &tau)?;
        if m.to_ratio() > bound {
            out.insert_cylinder(&tau)?;
        }
    }
    Ok(out)
}

/// Lexicographically least off-diagonal cell pair of `（x × x) ∩ r`. The
/// pair set must be swap-invariant.
pub fn symmetric_positive_pair(
    r: &ClopenSet,
    x: &ClopenSet,
    caps: &DepthCaps,
) -> Result<(BitWord, BitWord), MeasureError> {
    if r.dim() != Dim::Two || x.dim() != Dim::One {
        return Err(MeasureError::PreconditionFailed(
            "pair search needs a planar set and a line set".into(),
        ));
    }
    let depth = r.depth().max(x.depth());
    let r = r.refine(depth, caps)?;
    let x = x.refine(depth, caps)?;
    if r != r.swap()? {
        return Err(MeasureError::PreconditionFailed(
            "pair set is not swap-invariant".into(),
        ));
    }
    let cells: Vec<usize> = x.iter_cells().collect();
    for &a in &cells {
        for &b in &cells {
            if a != b && r.has_cell((a << depth) | b) {
                return Ok((
                    BitWord::from_index(a, depth),
                    BitWord::from_index(b, depth),
                ));
            }
        }
    }
    Err(MeasureError::NoOffDiagonalCell)
}

/// Rows extending `sigma` crossed with the cells of `h` (both at `h`'s depth).
fn column_rectangle(
    sigma: &BitWord,
    h: &ClopenSet,
    caps: &DepthCaps,
) -> Result<ClopenSet, MeasureError> {
    let depth = h.depth();
    if sigma.len() > depth {
        return Err(MeasureError::BadLength(
            "stem longer than the column depth".into(),
        ));
    }
    let mut out = ClopenSet::empty(Dim::Two, depth, caps)?;
    for col in h.iter_cells() {
        let tau = BitWord::from_index(col, depth);
        out.insert_rectangle(sigma, &tau)?;
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug)]
pub struct MeasureConfig {
    pub stages: usize,
    pub caps: DepthCaps,
}

pub struct MeasureRun {
    pub skeleton: TreeSkeleton,
    pub stages: Vec<StageRec>,
    pub certificate: Certificate,
}

pub trait MeasureInscriber: Sync {
    fn name(&self) -> &'static str;
    fn variant(&self) -> &'static str;
    fn inscribe(
        &self,
        filt: &Filtration,
        input_digest: &str,
        config: &MeasureConfig,
    ) -> Result<MeasureRun, MeasureError>;
}

pub fn measure_strategies() -> &'static [&'static dyn MeasureInscriber] {
    &[&SilverMeasure, &UniformMeasure]
}

pub fn measure_strategy(name: &str) -> Option<&'static dyn MeasureInscriber> {
    measure_strategies()
        .iter()
        .copied()
        .find(|s| s.name() == name)
}

/// Exact per-cell density demanded of a candidate filtration index: every
/// full-depth cell of every stem column carries relative density above
/// `1 - eps^2`.
fn per_cell_ok(
    f: &ClopenSet,
    stems: &[BitWord],
    depth: usize,
    eps: &Ratio,
) -> Result<bool, MeasureError> {
    let bound = eps
        .square()
        .one_minus()
        .mul(&Ratio::new(1, 1u128 << (2 * depth)));
    for stem in stems {
        for col in 0..1usize << depth {
            let rho = BitWord::from_index(col, depth);
            let m = f.measure_within_rectangle(stem, &rho)?;
            if m.to_ratio() <= bound {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Diagonal clause of the uniform variant's index pick.
fn diagonal_ok(
    f: &ClopenSet,
    stems: &[BitWord],
    depth: usize,
    eps: &Ratio,
) -> Result<bool, MeasureError> {
    let bound = eps
        .one_minus()
        .mul(&Ratio::new(1, 1u128 << (2 * depth)));
    for stem in stems {
        let m = f.measure_within_rectangle(stem, stem)?;
        if m.to_ratio() <= bound {
            return Ok(false);
        }
    }
    Ok(true)
}

fn least_index(
    filt: &Filtration,
    start: usize,
    stems: &[BitWord],
    depth: usize,
    eps: &Ratio,
    with_diagonal: bool,
    stage: usize,
) -> Result<usize, MeasureError> {
    for n in start..filt.len() {
        let f = filt.set(n);
        if per_cell_ok(f, stems, depth, eps)?
            && (!with_diagonal || diagonal_ok(f, stems, depth, eps)?)
        {
            return Ok(n);
        }
    }
    Err(MeasureError::InsufficientFiltration {
        stage,
        detail: format!(
            "no index from {} meets the per-cell density bound at depth {}",
            start, depth
        ),
    })
}

/// Position of the first disagreement; the common length when comparable.
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

struct MeasureState {
    big_n: usize,
    sigmas: BTreeMap<BitWord, BitWord>,
    h_sets: Vec<ClopenSet>,
    n_indexes: Vec<usize>,
}

fn stage_zero(
    filt: &Filtration,
    caps: &DepthCaps,
    with_diagonal: bool,
) -> Result<(MeasureState, StageRec), MeasureError> {
    let eps0 = stage_epsilon(0);
    let stems = vec![BitWord::empty()];
    let n0 = least_index(filt, 0, &stems, 0, &eps0, with_diagonal, 0)?;
    let full0 = ClopenSet::full(Dim::One, 0, caps)?;
    let mut sigmas = BTreeMap::new();
    sigmas.insert(BitWord::empty(), BitWord::empty());
    let mut rec = StageRec::empty(0);
    rec.big_n = Some(0);
    rec.n_index = Some(n0);
    rec.epsilon = Some(eps0);
    rec.sigma = Some(sigmas.clone());
    rec.h = Some(vec![ClopenRepr::from_set(&full0)]);
    rec.picks = Some(vec![]);
    Ok((
        MeasureState {
            big_n: 0,
            sigmas,
            h_sets: vec![full0],
            n_indexes: vec![n0],
        },
        rec,
    ))
}

/// The per-(tracked index, stem) slice filters, already intersected over the
/// tracked indexes.
fn slice_filters(
    filt: &Filtration,
    state: &MeasureState,
    d_work: usize,
    eps: &Ratio,
    stage: usize,
    caps: &DepthCaps,
) -> Result<BTreeMap<BitWord, ClopenSet>, MeasureError> {
    let mut out: BTreeMap<BitWord, ClopenSet> = BTreeMap::new();
    for (j, h) in state.h_sets.iter().enumerate() {
        let f_j = filt.set(state.n_indexes[j]).refine(d_work, caps)?;
        let h_fine = h.refine(d_work, caps)?;
        for (tau, stem) in &state.sigmas {
            let rect = column_rectangle(stem, &h_fine, caps)?;
            let fprime = f_j.intersect(&rect, caps)?;
            let x = density_filter(&fprime, stem, h, eps, caps).map_err(|e| match e {
                MeasureError::PreconditionFailed(d) => MeasureError::PreconditionFailed(format!(
                    "stage {stage}, tracked index {j}, stem {stem}: {d}"
                )),
                other => other,
            })?;
            match out.remove(tau) {
                None => {
                    out.insert(tau.clone(), x);
                }
                Some(prev) => {
                    out.insert(tau.clone(), prev.intersect(&x, caps)?);
                }
            }
        }
    }
    Ok(out)
}

/// Column intake for the next stage's tracked sets, one per previously
/// tracked index: the good-column sets of every child stem, intersected.
/// At the working depth the column dichotomy is exact, so the intake equals
/// the plain sections of the restricted closed sets.
fn next_h_sets(
    filt: &Filtration,
    state: &MeasureState,
    new_sigmas: &BTreeMap<BitWord, BitWord>,
    d_work: usize,
    stage: usize,
    caps: &DepthCaps,
) -> Result<Vec<ClopenSet>, MeasureError> {
    let delta = stage_epsilon(stage as u32).square();
    let mut out = Vec::new();
    for (j, h) in state.h_sets.iter().enumerate() {
        let f_j = filt.set(state.n_indexes[j]).refine(d_work, caps)?;
        let h_fine = h.refine(d_work, caps)?;
        let mut inter = ClopenSet::full(Dim::One, d_work, caps)?;
        for (tau, stem) in &state.sigmas {
            let rect = column_rectangle(stem, &h_fine, caps)?;
            let fprime = f_j.intersect(&rect, caps)?;
            for bit in [false, true] {
                let child = &new_sigmas[&tau.append_bit(bit)];
                let columns = good_columns(&fprime, child, d_work, &delta, caps)?;
                inter = inter.intersect(&columns, caps)?;
            }
        }
        let retention = stage_retention(stage as u32 - 1).one_minus();
        let bound = retention.mul(&h.measure().to_ratio());
        if inter.measure().to_ratio() <= bound {
            return Err(MeasureError::Internal(format!(
                "tracked set {} lost too much mass at stage {}: {} vs bound {}",
                j,
                stage,
                inter.measure(),
                bound
            )));
        }
        out.push(inter);
    }
    Ok(out)
}

fn build_measure_certificate(
    variant: &str,
    input_digest: &str,
    config: &MeasureConfig,
    stages: Vec<StageRec>,
    skeleton: &TreeSkeleton,
    tree_class: &str,
    state: &MeasureState,
) -> Certificate {
    let mut claims = BTreeMap::new();
    let measures: Vec<String> = state
        .h_sets
        .iter()
        .map(|h| h.measure().to_string())
        .collect();
    claims.insert("h_final_measures".to_string(), measures.join(","));
    claims.insert(
        "conull_set".to_string(),
        "union over j of the intersection over k >= j of the tracked column sets".to_string(),
    );
    Certificate {
        variant: variant.to_string(),
        input_digest: input_digest.to_string(),
        parameters: Parameters {
            stages: config.stages,
        },
        stages,
        skeleton: SkeletonRec::from_skeleton(skeleton),
        summary: Summary {
            final_depth: state.big_n,
            tree_class: tree_class.to_string(),
            claims,
        },
    }
}

// ---------------------------------------------------------------------------
// Silver
// ---------------------------------------------------------------------------

pub struct SilverMeasure;

impl MeasureInscriber for SilverMeasure {
    fn name(&self) -> &'static str {
        "silver"
    }

    fn variant(&self) -> &'static str {
        VARIANT_SILVER_MEAS
    }

    fn inscribe(
        &self,
        filt: &Filtration,
        input_digest: &str,
        config: &MeasureConfig,
    ) -> Result<MeasureRun, MeasureError> {
        let caps = &config.caps;
        let (mut state, rec0) = stage_zero(filt, caps, false)?;
        let mut stage_recs = vec![rec0];
        for k in 0..config.stages {
            let eps_k = stage_epsilon(k as u32);
            let d_work = (state.big_n + 1).max(filt.depth());
            let filters = slice_filters(filt, &state, d_work, &eps_k, k + 1, caps)?;
            // intersection of all child translates of the slice filters
            let mut big_x = ClopenSet::full(Dim::One, d_work, caps)?;
            for (tau, stem) in &state.sigmas {
                for bit in [false, true] {
                    let shifted = filters[tau].translate1(&stem.append_bit(bit))?;
                    big_x = big_x.intersect(&shifted, caps)?;
                }
            }
            let x = match big_x.iter_cells().next() {
                Some(idx) => BitWord::from_index(idx, d_work),
                None => return Err(MeasureError::EmptyPick { stage: k + 1 }),
            };
            if x.bit(state.big_n) {
                return Err(MeasureError::Internal(
                    "least pick does not branch low at the split position".into(),
                ));
            }
            let mut new_sigmas = BTreeMap::new();
            for (tau, stem) in &state.sigmas {
                for bit in [false, true] {
                    new_sigmas.insert(tau.append_bit(bit), x.add(&stem.append_bit(bit)));
                }
            }
            let mut h_next = next_h_sets(filt, &state, &new_sigmas, d_work, k + 1, caps)?;
            let stems: Vec<BitWord> = new_sigmas.values().cloned().collect();
            let n_next = least_index(
                filt,
                state.n_indexes[k] + 1,
                &stems,
                d_work,
                &stage_epsilon(k as u32 + 1),
                false,
                k + 1,
            )?;
            h_next.push(ClopenSet::full(Dim::One, d_work, caps)?);
            let mut rec = StageRec::empty(k + 1);
            rec.big_n = Some(d_work);
            rec.n_index = Some(n_next);
            rec.epsilon = Some(stage_epsilon(k as u32 + 1));
            rec.sigma = Some(new_sigmas.clone());
            rec.h = Some(h_next.iter().map(ClopenRepr::from_set).collect());
            rec.picks = Some(vec![x]);
            stage_recs.push(rec);
            state = MeasureState {
                big_n: d_work,
                sigmas: new_sigmas,
                h_sets: h_next,
                n_indexes: {
                    let mut v = state.n_indexes;
                    v.push(n_next);
                    v
                },
            };
        }
        let skeleton = TreeSkeleton::new(config.stages, state.sigmas.clone());
        skeleton.validate()?;
        if !skeleton
            .downward_closure()
            .classify(TreeKind::Silver, None)?
            .is_consistent()
        {
            return Err(MeasureError::Internal(
                "constructed skeleton fails the Silver recognizer".into(),
            ));
        }
        let certificate = build_measure_certificate(
            self.variant(),
            input_digest,
            config,
            stage_recs.clone(),
            &skeleton,
            "silver",
            &state,
        );
        Ok(MeasureRun {
            skeleton,
            stages: stage_recs,
            certificate,
        })
    }
}

// ---------------------------------------------------------------------------
// Uniformly perfect, modulo the diagonal
// ---------------------------------------------------------------------------

pub struct UniformMeasure;

impl MeasureInscriber for UniformMeasure {
    fn name(&self) -> &'static str {
        "uniform"
    }

    fn variant(&self) -> &'static str {
        VARIANT_UNIFORM_MEAS
    }

    fn inscribe(
        &self,
        filt: &Filtration,
        input_digest: &str,
        config: &MeasureConfig,
    ) -> Result<MeasureRun, MeasureError> {
        let caps = &config.caps;
        let (mut state, rec0) = stage_zero(filt, caps, true)?;
        let mut stage_recs = vec![rec0];
        for k in 0..config.stages {
            let eps_k = stage_epsilon(k as u32);
            let eps_next = stage_epsilon(k as u32 + 1);
            let d_work = (state.big_n + 1).max(filt.depth());
            let filters = slice_filters(filt, &state, d_work, &eps_k, k + 1, caps)?;
            let mut big_x = ClopenSet::full(Dim::One, d_work, caps)?;
            for (tau, stem) in &state.sigmas {
                let shifted = filters[tau].translate1(stem)?;
                big_x = big_x.intersect(&shifted, caps)?;
            }
            // pair demand set: intersection of the symmetrized translated
            // stem-pair portions of the tracked closed sets
            let mut pair_set = ClopenSet::full(Dim::Two, d_work, caps)?;
            for (ta, sa) in &state.sigmas {
                for (tb, sb) in &state.sigmas {
                    let dist = split_depth(ta, tb);
                    let f = filt.set(state.n_indexes[dist]).refine(d_work, caps)?;
                    let mut rect = ClopenSet::empty(Dim::Two, d_work, caps)?;
                    rect.insert_rectangle(sa, sb)?;
                    let term = f
                        .intersect(&rect, caps)?
                        .translate2(sa, sb)?
                        .symmetrize(caps)?;
                    pair_set = pair_set.intersect(&term, caps)?;
                }
            }
            if k == 0 {
                // sharper step-one bound for the symmetrized first set
                let bound = Ratio::new(14, 16);
                if pair_set.measure().to_ratio() <= bound {
                    return Err(MeasureError::Internal(format!(
                        "step-one symmetrized set has measure {} at or below 14/16",
                        pair_set.measure()
                    )));
                }
            }
            // pigeonhole: the squared pick set plus the pair set overfill
            // the ambient cylinder square
            let ambient = Ratio::new(1, 1u128 << (2 * state.big_n));
            let xx = big_x.measure().to_ratio().square();
            let rr = pair_set.measure().to_ratio();
            if xx.add(&rr) <= ambient {
                return Err(MeasureError::Internal(
                    "pigeonhole bound failed for the pick and pair sets".into(),
                ));
            }
            // same-branch demand: rows whose translated pair against every
            // distinct stem pair stays inside the tracked closed set
            let mut same_branch = ClopenSet::empty(Dim::One, d_work, caps)?;
            for y in 0..1usize << (d_work - state.big_n) {
                let yw = BitWord::from_index(y, d_work);
                let mut ok = true;
                'outer: for (ta, sa) in &state.sigmas {
                    for (tb, sb) in &state.sigmas {
                        if ta == tb {
                            continue;
                        }
                        let dist = split_depth(ta, tb);
                        let f = filt.set(state.n_indexes[dist]);
                        if !f.contains_rectangle(&yw.add(sa), &yw.add(sb))? {
                            ok = false;
                            break 'outer;
                        }
                    }
                }
                if ok {
                    same_branch.insert_cylinder(&yw)?;
                }
            }
            let pick_pool = big_x.intersect(&same_branch, caps)?;
            let (x0, x1) = symmetric_positive_pair(&pair_set, &pick_pool, caps)?;
            let mut new_sigmas = BTreeMap::new();
            for (tau, stem) in &state.sigmas {
                new_sigmas.insert(tau.append_bit(false), x0.add(stem));
                new_sigmas.insert(tau.append_bit(true), x1.add(stem));
            }
            // every distinct child pair already meets its tracked set
            for (ta, sa) in &new_sigmas {
                for (tb, sb) in &new_sigmas {
                    if ta == tb {
                        continue;
                    }
                    let dist = split_depth(ta, tb);
                    let f = filt.set(state.n_indexes[dist]);
                    let m = f.measure_within_rectangle(sa, sb)?;
                    let bound = eps_next
                        .one_minus()
                        .mul(&Ratio::new(1, 1u128 << (2 * d_work)));
                    if m.to_ratio() <= bound {
                        return Err(MeasureError::Internal(format!(
                            "child pair ({}, {}) misses its tracked set at stage {}",
                            sa,
                            sb,
                            k + 1
                        )));
                    }
                }
            }
            let mut h_next = next_h_sets(filt, &state, &new_sigmas, d_work, k + 1, caps)?;
            let stems: Vec<BitWord> = new_sigmas.values().cloned().collect();
            let n_next = least_index(
                filt,
                state.n_indexes[k] + 1,
                &stems,
                d_work,
                &eps_next,
                true,
                k + 1,
            )?;
            h_next.push(ClopenSet::full(Dim::One, d_work, caps)?);
            let mut rec = StageRec::empty(k + 1);
            rec.big_n = Some(d_work);
            rec.n_index = Some(n_next);
            rec.epsilon = Some(eps_next);
            rec.sigma = Some(new_sigmas.clone());
            rec.h = Some(h_next.iter().map(ClopenRepr::from_set).collect());
            rec.picks = Some(vec![x0, x1]);
            rec.r_measure = Some(pair_set.measure());
            stage_recs.push(rec);
            state = MeasureState {
                big_n: d_work,
                sigmas: new_sigmas,
                h_sets: h_next,
                n_indexes: {
                    let mut v = state.n_indexes;
                    v.push(n_next);
                    v
                },
            };
        }
        let skeleton = TreeSkeleton::new(config.stages, state.sigmas.clone());
        skeleton.validate()?;
        if !skeleton
            .downward_closure()
            .classify(TreeKind::UniformlyPerfect, None)?
            .is_consistent()
        {
            return Err(MeasureError::Internal(
                "constructed skeleton fails the uniformly-perfect recognizer".into(),
            ));
        }
        let certificate = build_measure_certificate(
            self.variant(),
            input_digest,
            config,
            stage_recs.clone(),
            &skeleton,
            "uniformly-perfect",
            &state,
        );
        Ok(MeasureRun {
            skeleton,
            stages: stage_recs,
            certificate,
        })
    }
}
