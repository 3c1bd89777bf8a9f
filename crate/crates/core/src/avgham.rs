//! Toggling frames and the first two average-Hamiltonian terms.

use serde::{Deserialize, Serialize};

use crate::algebra::{c, check_qudit, collective, Operator, Projector};
use crate::error::{Error, Result};
use crate::groups::{Alphabet, GeneratorWord};
use crate::model::EnsembleModel;
use crate::{tol, Real};

/// One toggling frame `U_k` held for `weight` base intervals.
#[derive(Clone, Debug, PartialEq)]
pub struct Frame<T> {
    pub word: Option<GeneratorWord>,
    pub unitary: Operator<T>,
    pub weight: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PulseSequence<T> {
    pub d: usize,
    pub label: String,
    pub frames: Vec<Frame<T>>,
}

impl<T: Real> PulseSequence<T> {
    pub fn from_words(d: usize, label: impl Into<String>, frames: &[(GeneratorWord, u32)]) -> Result<Self> {
        let a = Alphabet::<T>::new(d)?;
        let frames = frames
            .iter()
            .map(|(w, k)| Ok(Frame { word: Some(w.clone()), unitary: a.evaluate(w)?, weight: *k }))
            .collect::<Result<Vec<_>>>()?;
        Self::from_frames(d, label, frames)
    }

    pub fn from_unitaries(d: usize, label: impl Into<String>, frames: Vec<(Operator<T>, u32)>) -> Result<Self> {
        let frames = frames.into_iter().map(|(u, k)| Frame { word: None, unitary: u, weight: k }).collect();
        Self::from_frames(d, label, frames)
    }

    fn from_frames(d: usize, label: impl Into<String>, frames: Vec<Frame<T>>) -> Result<Self> {
        check_qudit(d)?;
        if frames.is_empty() {
            return Err(Error::InvalidSequence("a sequence needs at least one frame".into()));
        }
        for (k, f) in frames.iter().enumerate() {
            if f.weight == 0 {
                return Err(Error::InvalidSequence(format!("frame {k} has zero weight")));
            }
            if f.unitary.dim() != d {
                return Err(Error::DimensionMismatch { expected: d, found: f.unitary.dim() });
            }
            if !f.unitary.is_unitary(tol(1e-9)) {
                return Err(Error::InvalidSequence(format!("frame {k} is not unitary")));
            }
        }
        Ok(Self { d, label: label.into(), frames })
    }

    pub fn total_weight(&self) -> u32 {
        self.frames.iter().map(|f| f.weight).sum()
    }

    pub fn weights(&self) -> Vec<u32> {
        self.frames.iter().map(|f| f.weight).collect()
    }

    /// Every frame multiplied on the right by `r`.
    pub fn rotated(&self, r: &GeneratorWord, label: impl Into<String>) -> Result<Self> {
        let a = Alphabet::<T>::new(self.d)?;
        let ru = a.evaluate(r)?;
        let frames = self
            .frames
            .iter()
            .map(|f| Frame { word: f.word.as_ref().map(|w| w.then(r)), unitary: &f.unitary * &ru, weight: f.weight })
            .collect();
        Self::from_frames(self.d, label, frames)
    }

    /// `(U_k⊗…⊗U_k)† H (U_k⊗…⊗U_k)` for each frame.
    pub fn toggled(&self, h: &Operator<T>, n: usize) -> Result<Vec<Operator<T>>> {
        let dim = self.d.pow(n as u32);
        if h.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: h.dim() });
        }
        Ok(self.frames.iter().map(|f| h.conjugate_by(&collective(&f.unitary, n))).collect())
    }
}

/// Pulses between frames: `P_0 = U_0`, `P_k = U_k U_{k−1}†`, then the
/// closing pulse `U_last†`.
pub fn frames_to_pulses<T: Real>(seq: &PulseSequence<T>) -> Vec<Operator<T>> {
    let mut out = Vec::with_capacity(seq.frames.len() + 1);
    let mut prev = Operator::identity(seq.d);
    for f in &seq.frames {
        out.push(&f.unitary * &prev.adjoint());
        prev = f.unitary.clone();
    }
    out.push(prev.adjoint());
    out
}

/// `H̄⁽⁰⁾ = Σ w_k H̃_k / Σ w_k`.
pub fn zeroth_order<T: Real>(seq: &PulseSequence<T>, h: &Operator<T>, n: usize) -> Result<Operator<T>> {
    let toggled = seq.toggled(h, n)?;
    let mut acc = Operator::zeros(h.dim());
    for (f, ht) in seq.frames.iter().zip(&toggled) {
        acc = &acc + &ht.scale_real(T::of(f.weight as f64));
    }
    Ok(acc.scale_real(T::one() / T::of(seq.total_weight() as f64)))
}

/// `H̄⁽¹⁾ = (−i/2t_c) Σ_k Σ_{l<k} [H̃_k τ_k, H̃_l τ_l]` with `τ_k = w_k τ`.
pub fn first_order<T: Real>(seq: &PulseSequence<T>, h: &Operator<T>, n: usize, tau: T) -> Result<Operator<T>> {
    let toggled = seq.toggled(h, n)?;
    let mut earlier = Operator::zeros(h.dim());
    let mut acc = Operator::zeros(h.dim());
    for (f, ht) in seq.frames.iter().zip(&toggled) {
        let term = ht.scale_real(tau * T::of(f.weight as f64));
        acc = &acc + &term.commutator(&earlier);
        earlier = &earlier + &term;
    }
    let tc = tau * T::of(seq.total_weight() as f64);
    Ok(acc.scale(c::<T>(0.0, -1.0) / (T::of(2.0) * tc)))
}

/// Zeeman strength β of an average Hamiltonian and whether it is clean.
///
/// A result proportional to `H_Z` reports the magnitude of the factor and is
/// clean. Otherwise β is `|cos|` of the angle between the projections of
/// `havg` and `H_Z`. A vanishing average gives `(0, false)`.
pub fn zeeman_strength<T: Real>(havg: &Operator<T>, model: &EnsembleModel<T>) -> Result<(T, bool)> {
    let proj = Projector::new(model.d, model.n)?;
    let cz = proj.project(&model.build_zeeman()?)?;
    let ca = proj.project(havg)?;
    let nz = cz.norm();
    let na = ca.norm();
    if nz == T::zero() {
        return Err(Error::InvalidModel("reference Zeeman term is zero".into()));
    }
    if na <= tol::<T>(1e-12) * nz {
        return Ok((T::zero(), false));
    }
    let dot = ca.dot(&cz);
    let ratio = dot / (nz * nz);
    let orth = ca.coeffs.iter().zip(&cz.coeffs).map(|(&a, &z)| (a - ratio * z).powi(2)).sum::<T>().sqrt();
    if orth < tol::<T>(1e-9) * nz && ratio.abs() > tol::<T>(1e-12) {
        return Ok((ratio.abs(), true));
    }
    Ok(((dot / (na * nz)).abs(), false))
}

#[derive(Clone, Debug)]
pub struct AverageHamiltonianReport<T> {
    pub label: String,
    pub h0_avg: Operator<T>,
    pub h1_avg: Operator<T>,
    /// Max-norm of the dipolar part of `H̄⁽⁰⁾`.
    pub dipolar_residual: T,
    pub zeeman_strength: T,
    pub clean_zeeman: bool,
    /// β·Σw_k.
    pub beta_prime: T,
}

/// Serializable digest of a report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub label: String,
    pub beta: f64,
    pub clean: bool,
    pub dipolar_residual: f64,
    pub beta_prime: f64,
    pub h0_coeffs: Vec<f64>,
    pub h1_norm: f64,
}

impl<T: Real> AverageHamiltonianReport<T> {
    pub fn summary(&self, d: usize, n: usize) -> Result<ReportSummary> {
        let f = |x: T| x.to_f64().unwrap_or(f64::NAN);
        let coeffs = Projector::new(d, n)?.project(&self.h0_avg)?.coeffs;
        Ok(ReportSummary {
            label: self.label.clone(),
            beta: f(self.zeeman_strength),
            clean: self.clean_zeeman,
            dipolar_residual: f(self.dipolar_residual),
            beta_prime: f(self.beta_prime),
            h0_coeffs: coeffs.into_iter().map(f).collect(),
            h1_norm: f(self.h1_avg.max_abs()),
        })
    }
}

/// Full average-Hamiltonian check of `seq` against `model` with base
/// interval `tau` for the first-order term.
///
/// β comes from the Zeeman part alone; the clean flag also requires the
/// dipolar part of `H̄⁽⁰⁾` to vanish.
pub fn verify<T: Real>(
    seq: &PulseSequence<T>,
    model: &EnsembleModel<T>,
    tau: T,
) -> Result<AverageHamiltonianReport<T>> {
    if seq.d != model.d {
        return Err(Error::DimensionMismatch { expected: model.d, found: seq.d });
    }
    let hz = model.build_zeeman()?;
    let hdd = model.build_dipolar()?;
    let z0 = zeroth_order(seq, &hz, model.n)?;
    let d0 = zeroth_order(seq, &hdd, model.n)?;
    let h = &hz + &hdd;
    let h1 = first_order(seq, &h, model.n, tau)?;
    let dipolar_residual = d0.max_abs();
    let (beta, clean) = zeeman_strength(&z0, model)?;
    Ok(AverageHamiltonianReport {
        label: seq.label.clone(),
        h0_avg: &z0 + &d0,
        h1_avg: h1,
        dipolar_residual,
        zeeman_strength: beta,
        clean_zeeman: clean && dipolar_residual < tol(1e-9),
        beta_prime: beta * T::of(seq.total_weight() as f64),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn whh4() -> PulseSequence<f64> {
        let w = |v, k| GeneratorWord::from_triples(&[(v, k, 1)]);
        PulseSequence::from_words(2, "whh4", &[(w(0, 0), 1), (w(0, 1), 1), (w(2, 1), 2), (w(0, 1), 1), (w(0, 0), 1)])
            .unwrap()
    }

    #[test]
    fn identity_frames_give_identity_pulses() {
        let s = PulseSequence::<f64>::from_words(3, "id", &vec![(GeneratorWord::identity(), 2); 3]).unwrap();
        for p in frames_to_pulses(&s) {
            assert!(p.max_abs_diff(&Operator::identity(3)) < 1e-15);
        }
    }

    #[test]
    fn pulses_compose_to_identity() {
        let s = whh4();
        let total = frames_to_pulses(&s).iter().fold(Operator::identity(2), |acc, p| p * &acc);
        assert!(total.canonical_phase().max_abs_diff(&Operator::identity(2)) < 1e-12);
    }

    #[test]
    fn whh4_zeroth_order() {
        let m = EnsembleModel::<f64>::pair(2, 1.0).unwrap();
        let s = whh4();
        assert!(zeroth_order(&s, &m.build_dipolar().unwrap(), 2).unwrap().max_abs() < 1e-12);
        let z = zeroth_order(&s, &m.build_zeeman().unwrap(), 2).unwrap();
        let (sx, sy, sz) = crate::algebra::spin_operators::<f64>(2).unwrap();
        let one = &(&sx + &sy) + &sz;
        let id = Operator::identity(2);
        let want = (&one.kron(&id) + &id.kron(&one)).scale_real(m.gamma_bz / 3.0);
        assert!(z.max_abs_diff(&want) < 1e-12);
        let (b, clean) = zeeman_strength(&z, &m).unwrap();
        assert!((b - 1.0 / 3f64.sqrt()).abs() < 1e-12 && !clean);
    }

    #[test]
    fn single_identity_frame_is_trivial() {
        let m = EnsembleModel::<f64>::pair(3, 0.7).unwrap();
        let s = PulseSequence::<f64>::from_words(3, "id", &[(GeneratorWord::identity(), 1)]).unwrap();
        let h = m.hamiltonian().unwrap();
        assert!(zeroth_order(&s, &h, 2).unwrap().max_abs_diff(&h) < 1e-12);
        assert_eq!(first_order(&s, &h, 2, 1.0).unwrap().max_abs(), 0.0);
        let r = verify(&s, &m, 1.0).unwrap();
        assert!(!r.clean_zeeman && (r.zeeman_strength - 1.0).abs() < 1e-12);
    }

    #[test]
    fn commuting_frames_have_no_first_order() {
        let m = EnsembleModel::<f64>::pair(2, 0.0).unwrap();
        let z = GeneratorWord::from_triples(&[(1, 0, 1)]);
        let s = PulseSequence::<f64>::from_words(2, "zz", &[(GeneratorWord::identity(), 1), (z, 3)]).unwrap();
        assert!(first_order(&s, &m.build_zeeman().unwrap(), 2, 1.0).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn zero_average_is_not_clean() {
        let m = EnsembleModel::<f64>::pair(2, 1.0).unwrap();
        assert_eq!(zeeman_strength(&Operator::zeros(4), &m).unwrap(), (0.0, false));
    }

    #[test]
    fn rejects_bad_frames() {
        assert!(PulseSequence::<f64>::from_words(2, "x", &[]).is_err());
        assert!(PulseSequence::<f64>::from_words(2, "x", &[(GeneratorWord::identity(), 0)]).is_err());
        let not_unitary = Operator::<f64>::diag(&[1.0, 2.0]);
        assert!(PulseSequence::from_unitaries(2, "x", vec![(not_unitary, 1)]).is_err());
    }
}
