//! Pulse-sequence search as a mixed-integer program over a pruned
//! dictionary, and clean-Zeeman recovery from a zero-Zeeman sequence.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use pulseforge_milp::problem::{LinearProgram, SolverOptions};
use pulseforge_milp::{add_cardinality, solve_mip, Status, VarKind};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{spin_operators, Projector};
use crate::avgham::{verify, zeroth_order, AverageHamiltonianReport, PulseSequence};
use crate::error::{Error, Result};
use crate::groups::{class_key, qubit_words, qutrit_words, Alphabet, GeneratorWord, PrunedDictionary};
use crate::model::EnsembleModel;
use crate::{tol, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Target {
    /// Dipolar terms vanish; the Zeeman term keeps at least `beta_min` of
    /// its strength on every row of its support and nothing off it.
    DecoupleKeepZeeman,
    /// Dipolar and Zeeman terms both vanish.
    DecoupleZeroZeeman,
    /// Dipolar terms vanish and the Zeeman term is an exact multiple of the
    /// original.
    CleanZeeman,
}

impl Target {
    pub const ALL: [Target; 3] = [Target::DecoupleKeepZeeman, Target::DecoupleZeroZeeman, Target::CleanZeeman];

    pub fn name(self) -> &'static str {
        match self {
            Target::DecoupleKeepZeeman => "decouple-keep-zeeman",
            Target::DecoupleZeroZeeman => "decouple-zero-zeeman",
            Target::CleanZeeman => "clean-zeeman",
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Target {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Target::ALL.into_iter().find(|t| t.name() == s).ok_or_else(|| Error::Search(format!("unknown target {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchParams<T> {
    pub target: Target,
    /// Weight of the nonzero-count penalty.
    pub alpha: T,
    /// Smallest acceptable Zeeman strength per unit total weight.
    pub beta_min: T,
    /// Upper bound on each weight.
    pub weight_cap: u32,
    pub node_limit: usize,
    /// For the zero-Zeeman target, seed the solver with a solution built
    /// from sign-flipped pairs (see [`paired_start`]).
    pub paired_start: bool,
}

impl<T: Real> SearchParams<T> {
    pub fn new(target: Target) -> Self {
        Self {
            target,
            alpha: T::of(0.5),
            beta_min: T::of(1.0 / 6.0),
            weight_cap: 4,
            node_limit: 1_000_000,
            paired_start: true,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SearchProblem<T> {
    pub params: SearchParams<T>,
    pub lp: LinearProgram<T>,
    /// Number of weight columns (dictionary classes).
    pub columns: usize,
    /// Coefficient indices where the reference Zeeman projection is nonzero.
    pub zeeman_support: Vec<usize>,
    pub m_eq: usize,
    pub m_ub: usize,
    /// Rows dropped because every column and the target vanish there.
    pub rows_dropped: usize,
}

fn nonzero<T: Real>(x: T) -> bool {
    x.abs() > tol::<T>(1e-12)
}

/// Builds the integer program for `dict` against the reference Zeeman
/// projection `c_z` (same qudit dimension and spin count).
///
/// Dipolar and Zeeman coefficients form separate row blocks so that one
/// solution decouples every coupling strength at once.
pub fn assemble<T: Real>(dict: &PrunedDictionary<T>, c_z: &[T], params: &SearchParams<T>) -> Result<SearchProblem<T>> {
    if dict.is_empty() {
        return Err(Error::Search("empty dictionary".into()));
    }
    let nu = dict.len();
    let len = c_z.len();
    if dict.entries.iter().any(|e| e.zeeman.len() != len || e.dipolar.len() != len) {
        return Err(Error::DimensionMismatch { expected: len, found: dict.entries[0].zeeman.len() });
    }
    if params.weight_cap == 0 {
        return Err(Error::Search("weight cap must be positive".into()));
    }
    let keep_cols = |extra: usize| nu + extra;
    let extra = usize::from(params.target == Target::CleanZeeman);
    let ncols = keep_cols(extra);
    let mut lp = LinearProgram::new(vec![T::one(); nu]);
    lp.c.resize(ncols, T::zero());
    lp.lower.resize(ncols, T::zero());
    lp.upper.resize(ncols, T::infinity());
    lp.kinds.resize(ncols, VarKind::Continuous);
    let cap = T::of(params.weight_cap as f64);
    for j in 0..nu {
        lp.set_bounds(j, T::zero(), cap).set_kind(j, VarKind::Integer);
    }
    if extra == 1 {
        // Scale factor t ≥ 1 of the Zeeman term.
        lp.set_bounds(nu, T::one(), T::infinity());
    }
    let row = |f: &dyn Fn(usize) -> T| -> Vec<T> {
        let mut r: Vec<T> = (0..nu).map(f).collect();
        r.resize(ncols, T::zero());
        r
    };

    let mut dropped = 0;
    for r in 0..len {
        if dict.entries.iter().any(|e| nonzero(e.dipolar[r])) {
            lp.add_eq(row(&|k| dict.entries[k].dipolar[r]), T::zero());
        } else {
            dropped += 1;
        }
    }
    let support: Vec<usize> = (0..len).filter(|&r| nonzero(c_z[r])).collect();
    for r in 0..len {
        let used = dict.entries.iter().any(|e| nonzero(e.zeeman[r]));
        if !used && !support.contains(&r) {
            dropped += 1;
            continue;
        }
        let zrow = row(&|k| dict.entries[k].zeeman[r]);
        if !support.contains(&r) || params.target == Target::DecoupleZeroZeeman {
            lp.add_eq(zrow, T::zero());
            continue;
        }
        let s = c_z[r].signum();
        match params.target {
            Target::DecoupleKeepZeeman => {
                lp.add_ub(zrow.iter().map(|&v| -s * v).collect(), -c_z[r].abs());
                let br: Vec<T> = (0..ncols)
                    .map(|k| if k < nu { params.beta_min * c_z[r].abs() - s * zrow[k] } else { T::zero() })
                    .collect();
                lp.add_ub(br, T::zero());
            }
            Target::CleanZeeman => {
                let mut er = zrow;
                er[nu] = -c_z[r];
                lp.add_eq(er, T::zero());
            }
            Target::DecoupleZeroZeeman => unreachable!(),
        }
    }
    match params.target {
        Target::DecoupleZeroZeeman => {
            lp.add_ub(row(&|_| -T::one()), -T::one());
        }
        Target::CleanZeeman => {
            let mut r = row(&|_| params.beta_min);
            r[nu] = -T::one();
            lp.add_ub(r, T::zero());
        }
        Target::DecoupleKeepZeeman => {}
    }
    let lp = if params.alpha > T::zero() { add_cardinality(&lp, params.alpha, &vec![cap; nu])? } else { lp };
    Ok(SearchProblem {
        params: params.clone(),
        m_eq: lp.a_eq.len(),
        m_ub: lp.a_ub.len(),
        lp,
        columns: nu,
        zeeman_support: support,
        rows_dropped: dropped,
    })
}

#[derive(Clone, Debug)]
pub struct SearchResult<T> {
    pub status: Status,
    /// Weight per dictionary class (empty when nothing was found).
    pub weights: Vec<u32>,
    pub sequence: Option<PulseSequence<T>>,
    pub report: Option<AverageHamiltonianReport<T>>,
    pub objective: T,
    pub nodes_explored: usize,
}

impl<T: Real> SearchResult<T> {
    pub fn total_weight(&self) -> u32 {
        self.weights.iter().sum()
    }

    pub fn nonzero(&self) -> usize {
        self.weights.iter().filter(|&&w| w > 0).count()
    }
}

/// Solves the program, decodes the weights into frames and checks them
/// independently with the average-Hamiltonian code.
pub fn run_search<T: Real>(
    sp: &SearchProblem<T>,
    dict: &PrunedDictionary<T>,
    model: &EnsembleModel<T>,
) -> Result<SearchResult<T>> {
    let empty = |status, nodes| SearchResult {
        status,
        weights: Vec::new(),
        sequence: None,
        report: None,
        objective: T::nan(),
        nodes_explored: nodes,
    };
    if sp.zeeman_support.is_empty() && sp.params.target != Target::DecoupleZeroZeeman {
        // Nothing to keep: only the trivial sequence meets the rows.
        return Ok(empty(Status::Infeasible, 0));
    }
    let start = if sp.params.paired_start { paired_start(sp, dict)? } else { None };
    let opts = SolverOptions { node_limit: sp.params.node_limit, start, ..SolverOptions::default() };
    let sol = solve_mip(&sp.lp, &opts)?;
    if !sol.has_point() {
        return Ok(empty(sol.status, sol.nodes_explored));
    }
    let weights: Vec<u32> = sol.x[..sp.columns].iter().map(|v| v.round().to_u32().unwrap_or(0)).collect();
    let frames: Vec<(GeneratorWord, u32)> =
        dict.entries.iter().zip(&weights).filter(|(_, &w)| w > 0).map(|(e, &w)| (e.word.clone(), w)).collect();
    let label = format!("search-{}", sp.params.target);
    let seq = PulseSequence::from_words(dict.d, label, &frames)?;
    let report = verify(&seq, model, T::one())?;
    check_result(sp, &seq, &report, model)?;
    Ok(SearchResult {
        status: sol.status,
        weights,
        sequence: Some(seq),
        report: Some(report),
        objective: sol.objective,
        nodes_explored: sol.nodes_explored,
    })
}

/// Node budget of the pair-reduced program, which is small enough that
/// this is rarely reached.
const PAIRED_NODE_LIMIT: usize = 100_000;

/// Zero-Zeeman starting point from the pair-reduced problem.
///
/// Two classes whose Zeeman images are opposite and whose dipolar images
/// agree cancel the Zeeman term together at any common weight. Restricting
/// to such pairs leaves only the dipolar rows, a far smaller program whose
/// relaxation is much tighter. Its optimum lifts to a feasible point of the
/// full program that serves as the first incumbent. Returns `None` for
/// other targets or when no pair combination decouples.
pub fn paired_start<T: Real>(sp: &SearchProblem<T>, dict: &PrunedDictionary<T>) -> Result<Option<Vec<T>>> {
    if sp.params.target != Target::DecoupleZeroZeeman {
        return Ok(None);
    }
    let mut by_image: HashMap<Vec<i64>, usize> = HashMap::new();
    for (j, e) in dict.entries.iter().enumerate() {
        by_image.entry(class_key(&e.zeeman, &e.dipolar)).or_insert(j);
    }
    // One pair per distinct dipolar image suffices.
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    let mut seen_dipolar = HashSet::new();
    for (a, e) in dict.entries.iter().enumerate() {
        let flipped: Vec<T> = e.zeeman.iter().map(|&v| -v).collect();
        let Some(&b) = by_image.get(&class_key(&flipped, &e.dipolar)) else { continue };
        if b > a && seen_dipolar.insert(class_key(&[], &e.dipolar)) {
            pairs.push((a, b));
        }
    }
    if pairs.is_empty() {
        return Ok(None);
    }
    let two = T::of(2.0);
    let mut lp = LinearProgram::new(vec![two; pairs.len()]);
    let len = dict.entries[0].dipolar.len();
    for r in 0..len {
        let row: Vec<T> = pairs.iter().map(|&(a, _)| two * dict.entries[a].dipolar[r]).collect();
        if row.iter().any(|&v| nonzero(v)) {
            lp.add_eq(row, T::zero());
        }
    }
    lp.add_ub(vec![-two; pairs.len()], -T::one());
    let cap = T::of(sp.params.weight_cap as f64);
    for k in 0..pairs.len() {
        lp.set_bounds(k, T::zero(), cap).set_kind(k, VarKind::Integer);
    }
    let lp = if sp.params.alpha > T::zero() {
        add_cardinality(&lp, two * sp.params.alpha, &vec![cap; pairs.len()])?
    } else {
        lp
    };
    let sol = solve_mip(&lp, &SolverOptions { node_limit: PAIRED_NODE_LIMIT, ..SolverOptions::default() })?;
    if !sol.has_point() {
        return Ok(None);
    }
    let mut x = vec![T::zero(); sp.lp.num_vars()];
    let with_card = sp.lp.num_vars() > sp.columns;
    for (k, &(a, b)) in pairs.iter().enumerate() {
        let m = sol.x[k].round();
        if m > T::zero() {
            for j in [a, b] {
                x[j] = m;
                if with_card {
                    x[sp.columns + j] = T::one();
                }
            }
        }
    }
    Ok(Some(x))
}

fn check_result<T: Real>(
    sp: &SearchProblem<T>,
    seq: &PulseSequence<T>,
    report: &AverageHamiltonianReport<T>,
    model: &EnsembleModel<T>,
) -> Result<()> {
    let eps = tol::<T>(1e-9);
    if report.dipolar_residual >= eps {
        return Err(Error::Verification(format!("dipolar residual {}", report.dipolar_residual)));
    }
    let hz = model.build_zeeman()?;
    let proj = Projector::new(model.d, model.n)?;
    let avg = proj.project(&zeroth_order(seq, &hz, model.n)?)?.coeffs;
    let cz = proj.project(&hz)?.coeffs;
    match sp.params.target {
        Target::DecoupleZeroZeeman => {
            if let Some(v) = avg.iter().find(|v| v.abs() >= eps) {
                return Err(Error::Verification(format!("Zeeman coefficient {v} survives")));
            }
        }
        Target::DecoupleKeepZeeman => {
            for (r, (&a, &z)) in avg.iter().zip(&cz).enumerate() {
                let ok = if nonzero(z) { z.signum() * a >= sp.params.beta_min * z.abs() - eps } else { a.abs() < eps };
                if !ok {
                    return Err(Error::Verification(format!("Zeeman row {r}: {a} against target {z}")));
                }
            }
        }
        Target::CleanZeeman => {
            if !report.clean_zeeman || report.zeeman_strength < sp.params.beta_min - eps {
                return Err(Error::Verification(format!(
                    "not clean (beta {}, clean {})",
                    report.zeeman_strength, report.clean_zeeman
                )));
            }
        }
    }
    Ok(())
}

/// Which member of a ± pair survives.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairState {
    KeepFirst,
    KeepSecond,
    KeepBoth,
}

impl PairState {
    const ORDER: [PairState; 3] = [PairState::KeepFirst, PairState::KeepSecond, PairState::KeepBoth];
}

#[derive(Clone, Debug, Default)]
pub struct RecoveryOptions {
    /// Use these pair states instead of searching.
    pub pair_states: Option<Vec<PairState>>,
    /// Use this rotation if it is among the valid ones; otherwise the valid
    /// rotation with the lowest dictionary index is used.
    pub preferred_rotation: Option<GeneratorWord>,
}

#[derive(Clone, Debug)]
pub struct Recovery<T> {
    pub sequence: PulseSequence<T>,
    pub pair_states: Vec<PairState>,
    /// Frame indices of the input that survive, in order.
    pub kept_frames: Vec<usize>,
    pub rotation: GeneratorWord,
    /// Every dictionary word that maps the surviving average onto S_z.
    pub valid_rotations: Vec<GeneratorWord>,
    pub report: AverageHamiltonianReport<T>,
}

/// For a frame, the basis index `j` and sign with `U†S_zU = ±σ_j`.
fn signed_axis<T: Real>(
    proj: &Projector<T>,
    sz: &crate::algebra::Operator<T>,
    u: &crate::algebra::Operator<T>,
) -> Option<(usize, bool)> {
    let c = proj.project(&sz.conjugate_by(u)).ok()?.coeffs;
    let eps = tol::<T>(1e-9);
    let mut hit = None;
    for (j, &v) in c.iter().enumerate() {
        if v.abs() < eps {
            continue;
        }
        if hit.is_some() || (v.abs() - T::one()).abs() > eps {
            return None;
        }
        hit = Some((j, v > T::zero()));
    }
    hit
}

/// Turns a zero-Zeeman sequence whose frames send S_z to ± pairs of basis
/// operators into a clean-Zeeman one: drop one member of some pairs
/// (doubling the survivor), maximize how many pairs stay unbalanced, then
/// right-multiply every frame by a dictionary word that rotates the
/// surviving average onto S_z.
pub fn recover_clean_zeeman<T: Real>(seq: &PulseSequence<T>, opts: &RecoveryOptions) -> Result<Recovery<T>> {
    let d = seq.d;
    let single = Projector::<T>::new(d, 1)?;
    let (_, _, sz) = spin_operators::<T>(d)?;
    let axes: Vec<(usize, bool)> = seq
        .frames
        .iter()
        .enumerate()
        .map(|(k, f)| {
            signed_axis(&single, &sz, &f.unitary)
                .ok_or_else(|| Error::Search(format!("frame {k} does not send S_z to a signed basis operator")))
        })
        .collect::<Result<_>>()?;

    // Pair frames that share an axis with opposite signs.
    let mut pairs: Vec<(usize, usize, usize)> = Vec::new();
    let mut used = vec![false; axes.len()];
    for a in 0..axes.len() {
        if used[a] {
            continue;
        }
        let b = (a + 1..axes.len())
            .find(|&b| !used[b] && axes[b].0 == axes[a].0 && axes[b].1 != axes[a].1)
            .ok_or_else(|| Error::Search(format!("frame {a} has no opposite-sign partner")))?;
        used[a] = true;
        used[b] = true;
        pairs.push((a, b, axes[a].0));
    }

    let states: Vec<Vec<PairState>> = match &opts.pair_states {
        Some(s) if s.len() == pairs.len() => vec![s.clone()],
        Some(s) => return Err(Error::Search(format!("{} pair states for {} pairs", s.len(), pairs.len()))),
        None => {
            let p = pairs.len();
            let mut all: Vec<Vec<PairState>> = (0..3usize.pow(p as u32))
                .map(|mut code| {
                    let mut v = vec![PairState::KeepBoth; p];
                    for slot in v.iter_mut().rev() {
                        *slot = PairState::ORDER[code % 3];
                        code /= 3;
                    }
                    v
                })
                .collect();
            let on = |s: &Vec<PairState>| s.iter().filter(|&&x| x != PairState::KeepBoth).count();
            all.sort_by_key(|s| std::cmp::Reverse(on(s)));
            all.retain(|s| on(s) > 0);
            all
        }
    };

    let words: Vec<GeneratorWord> = if d == 2 { qubit_words().collect() } else { qutrit_words().collect() };
    let alphabet = Alphabet::<T>::new(d)?;
    // Action of each word on the single-spin basis: row a is the projection of U†σ_aU.
    let basis = crate::algebra::pauli_basis::<T>(d)?;
    let actions: Vec<Vec<Vec<T>>> = words
        .par_iter()
        .map(|w| {
            let u = alphabet.evaluate(w)?;
            basis.elements.iter().map(|b| Ok(single.project(&b.conjugate_by(&u))?.coeffs)).collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let target = single.project(&sz)?.coeffs;
    let tnorm2: T = target.iter().map(|&v| v * v).sum();

    let pair_model = EnsembleModel::<T>::unit_pair(d)?;
    let hdd = pair_model.build_dipolar()?;
    let eps = tol::<T>(1e-9);

    for state in states {
        let mut frames: Vec<(usize, u32)> = Vec::new();
        for (&(a, b, _), &s) in pairs.iter().zip(&state) {
            let (wa, wb) = (seq.frames[a].weight, seq.frames[b].weight);
            match s {
                PairState::KeepFirst => frames.push((a, wa + wb)),
                PairState::KeepSecond => frames.push((b, wa + wb)),
                PairState::KeepBoth => {
                    frames.push((a, wa));
                    frames.push((b, wb));
                }
            }
        }
        frames.sort_unstable();
        let trial = PulseSequence::from_unitaries(
            d,
            seq.label.clone(),
            frames.iter().map(|&(k, w)| (seq.frames[k].unitary.clone(), w)).collect(),
        )?;
        if zeroth_order(&trial, &hdd, 2)?.max_abs() >= eps {
            continue;
        }
        // Surviving single-spin Zeeman direction.
        let mut avg = vec![T::zero(); target.len()];
        for &(k, w) in &frames {
            let (j, plus) = axes[k];
            avg[j] += if plus { T::of(w as f64) } else { -T::of(w as f64) };
        }
        let valid: Vec<usize> = actions
            .par_iter()
            .enumerate()
            .filter(|(_, act)| {
                let mut img = vec![T::zero(); target.len()];
                for (a, &ca) in avg.iter().enumerate() {
                    if ca != T::zero() {
                        for (o, &v) in img.iter_mut().zip(&act[a]) {
                            *o += ca * v;
                        }
                    }
                }
                let ratio = img.iter().zip(&target).map(|(&a, &b)| a * b).sum::<T>() / tnorm2;
                ratio > eps && img.iter().zip(&target).all(|(&a, &b)| (a - ratio * b).abs() < eps)
            })
            .map(|(i, _)| i)
            .collect();
        if valid.is_empty() {
            continue;
        }
        let valid_rotations: Vec<GeneratorWord> = valid.iter().map(|&i| words[i].clone()).collect();
        let rotation = match &opts.preferred_rotation {
            Some(p) => {
                let pu = alphabet.evaluate(p)?;
                let hit = valid.iter().any(|&i| {
                    alphabet
                        .evaluate(&words[i])
                        .map(|u| u.canonical_phase().max_abs_diff(&pu.canonical_phase()) < eps)
                        .unwrap_or(false)
                });
                if !hit {
                    return Err(Error::Search(format!("rotation {p} does not map the surviving terms onto S_z")));
                }
                p.clone()
            }
            None => valid_rotations[0].clone(),
        };
        let kept: Vec<usize> = frames.iter().map(|&(k, _)| k).collect();
        let base = PulseSequence {
            d,
            label: format!("{}-recovered", seq.label),
            frames: frames.iter().map(|&(k, w)| crate::avgham::Frame { weight: w, ..seq.frames[k].clone() }).collect(),
        };
        let sequence = base.rotated(&rotation, base.label.clone())?;
        let report = verify(&sequence, &pair_model, T::one())?;
        if !report.clean_zeeman {
            return Err(Error::Verification("recovered sequence is not clean".into()));
        }
        return Ok(Recovery { sequence, pair_states: state, kept_frames: kept, rotation, valid_rotations, report });
    }
    Err(Error::NoRecoveryRotation)
}

/// Whether `rotation` maps the Zeeman average of `seq` onto a positive
/// multiple of S_z.
pub fn rotation_recovers<T: Real>(seq: &PulseSequence<T>, rotation: &GeneratorWord) -> Result<bool> {
    let m = EnsembleModel::<T>::new(seq.d, 1)?.with_gamma_bz(T::one());
    let rotated = seq.rotated(rotation, seq.label.clone())?;
    let avg = zeroth_order(&rotated, &m.build_zeeman()?, 1)?;
    let (beta, clean) = crate::avgham::zeeman_strength(&avg, &m)?;
    let sz = m.total_sz()?;
    let positive = Projector::new(seq.d, 1)?.project(&avg)?.dot(&Projector::new(seq.d, 1)?.project(&sz)?) > T::zero();
    Ok(clean && beta > T::zero() && positive)
}
