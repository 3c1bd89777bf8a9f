//! Stroboscopic Ramsey simulation with delta pulses, ensemble averaging over
//! sampled couplings, and the discrete spectrum of the resulting trace.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::num_complex::Complex as Cf;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::algebra::{c, collective, tensor, Operator, C};
use crate::avgham::PulseSequence;
use crate::error::{Error, Result};
use crate::model::{CouplingDistribution, EnsembleModel};
use crate::Real;

/// Initial superposition and matching coherence readout.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    /// `(|0⟩+|1⟩)/√2` on a spin-1/2, read out with σ_x.
    Qubit,
    /// Spin-1 levels m=+1 and m=0, read out with λ_1.
    Sq,
    /// Spin-1 levels m=+1 and m=−1, read out with λ_3. Precesses at twice
    /// the single-quantum rate.
    Dq,
}

impl Basis {
    pub fn name(self) -> &'static str {
        match self {
            Basis::Qubit => "qubit",
            Basis::Sq => "sq",
            Basis::Dq => "dq",
        }
    }

    pub fn dim(self) -> usize {
        match self {
            Basis::Qubit => 2,
            Basis::Sq | Basis::Dq => 3,
        }
    }

    /// The two levels in superposition.
    fn levels(self) -> (usize, usize) {
        match self {
            Basis::Qubit | Basis::Sq => (0, 1),
            Basis::Dq => (0, 2),
        }
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Basis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [Basis::Qubit, Basis::Sq, Basis::Dq]
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown basis {s:?}")))
    }
}

#[derive(Clone, Debug)]
pub struct SimConfig<T> {
    /// Spin count, γB_z and (when `coupling` is `None`) fixed couplings.
    pub model: EnsembleModel<T>,
    /// `None` runs free precession with one interval of `tau` per cycle.
    pub sequence: Option<PulseSequence<T>>,
    pub basis: Basis,
    /// Base interval; frame k lasts `w_k·tau`.
    pub tau: T,
    /// Number of stroboscopic points, including t = 0.
    pub cycles: usize,
    pub samples: usize,
    pub seed: u64,
    /// Draw every pairwise coupling per sample; `None` keeps the model's.
    pub coupling: Option<CouplingDistribution<T>>,
}

impl<T: Real> SimConfig<T> {
    /// Two spins, 256 cycles, 10⁴ samples with the default coupling
    /// distribution, and the default interval for `sequence`.
    pub fn new(basis: Basis, sequence: Option<PulseSequence<T>>) -> Result<Self> {
        let model = EnsembleModel::new(basis.dim(), 2)?;
        let tau = default_tau(sequence.as_ref(), &model)?;
        Ok(Self {
            model,
            sequence,
            basis,
            tau,
            cycles: 256,
            samples: 10_000,
            seed: 0,
            coupling: Some(CouplingDistribution::default()),
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if self.cycles < 2 {
            return Err(Error::InvalidConfig("cycles must be at least 2".into()));
        }
        if self.samples == 0 {
            return Err(Error::InvalidConfig("samples must be at least 1".into()));
        }
        if !(self.tau > T::zero()) || !self.tau.is_finite() {
            return Err(Error::InvalidConfig(format!("tau must be positive, got {}", self.tau)));
        }
        if self.basis.dim() != self.model.d {
            return Err(Error::InvalidConfig(format!(
                "basis {} needs d = {}, model has d = {}",
                self.basis,
                self.basis.dim(),
                self.model.d
            )));
        }
        if let Some(s) = &self.sequence {
            if s.d != self.model.d {
                return Err(Error::DimensionMismatch { expected: self.model.d, found: s.d });
            }
        }
        Ok(())
    }

    /// `t_c = τ·Σw_k`, or `τ` without a sequence.
    pub fn cycle_time(&self) -> T {
        self.tau * T::of(self.sequence.as_ref().map_or(1, |s| s.total_weight()) as f64)
    }
}

/// Interval giving twenty stroboscopic points per fringe of the engineered
/// Zeeman term: `ω_0·t_c·β = 2π/20`. Sequences that cancel the Zeeman term
/// use β = 1.
pub fn default_tau<T: Real>(sequence: Option<&PulseSequence<T>>, model: &EnsembleModel<T>) -> Result<T> {
    let (weight, beta) = match sequence {
        None => (1, T::one()),
        Some(s) => {
            let single = EnsembleModel::new(s.d, 1)?.with_gamma_bz(T::one());
            let avg = crate::avgham::zeroth_order(s, &single.build_zeeman()?, 1)?;
            let (beta, _) = crate::avgham::zeeman_strength(&avg, &single)?;
            (s.total_weight(), if beta > T::of(1e-9) { beta } else { T::one() })
        }
    };
    let omega0 = model.gamma_bz.abs();
    if !(omega0 > T::zero()) {
        return Err(Error::InvalidConfig("gamma_bz must be nonzero to pick a default tau".into()));
    }
    let tc = T::of(2.0 * std::f64::consts::PI / 20.0) / (omega0 * beta);
    Ok(tc / T::of(weight as f64))
}

/// Propagator over one cycle, `Π_k W_k† e^{−iH w_k τ} W_k` with frame 0
/// acting first and `W_k = U_k⊗…⊗U_k`. The closing pulse returns to the
/// lab frame, so this is the lab-frame evolution over `t_c`.
pub fn cycle_unitary<T: Real>(
    seq: Option<&PulseSequence<T>>,
    h: &Operator<T>,
    n: usize,
    tau: T,
) -> Result<Operator<T>> {
    let (values, v) = h.eigh();
    let vdag = v.adjoint();
    let evolve = |t: T| {
        let vd = Operator::from_fn(h.dim(), |i, j| v.get(i, j) * C::from_polar(T::one(), -values[j] * t));
        &vd * &vdag
    };
    let Some(seq) = seq else {
        return Ok(evolve(tau));
    };
    if seq.d.pow(n as u32) != h.dim() {
        return Err(Error::DimensionMismatch { expected: h.dim(), found: seq.d.pow(n as u32) });
    }
    let mut u = Operator::identity(h.dim());
    for f in &seq.frames {
        let w = collective(&f.unitary, n);
        let step = &(&w.adjoint() * &evolve(tau * T::of(f.weight as f64))) * &w;
        u = &step * &u;
    }
    Ok(u)
}

/// `M^k` by repeated squaring.
pub fn power<T: Real>(m: &Operator<T>, mut k: usize) -> Operator<T> {
    let mut base = m.clone();
    let mut acc = Operator::identity(m.dim());
    while k > 0 {
        if k & 1 == 1 {
            acc = &acc * &base;
        }
        base = &base * &base;
        k >>= 1;
    }
    acc
}

/// Product state with every spin in the basis superposition.
pub fn initial_state<T: Real>(basis: Basis, n: usize) -> Vec<C<T>> {
    let d = basis.dim();
    let (a, b) = basis.levels();
    let amp = T::one() / T::of(2.0).sqrt();
    let single: Vec<C<T>> =
        (0..d).map(|k| if k == a || k == b { C::new(amp, T::zero()) } else { c(0.0, 0.0) }).collect();
    let mut psi = vec![c::<T>(1.0, 0.0)];
    for _ in 0..n {
        psi = psi.iter().flat_map(|&p| single.iter().map(move |&s| p * s)).collect();
    }
    psi
}

/// Mean over spins of the coherence operator between the basis levels;
/// equals 1 on the initial state.
pub fn readout<T: Real>(basis: Basis, n: usize) -> Result<Operator<T>> {
    let d = basis.dim();
    let (a, b) = basis.levels();
    let x = Operator::from_fn(d, |i, j| if (i, j) == (a, b) || (i, j) == (b, a) { c(1.0, 0.0) } else { c(0.0, 0.0) });
    let id = Operator::identity(d);
    let mut out = Operator::zeros(d.pow(n as u32));
    for site in 0..n {
        let factors: Vec<Operator<T>> = (0..n).map(|k| if k == site { x.clone() } else { id.clone() }).collect();
        out = &out + &tensor(&factors)?;
    }
    Ok(out.scale_real(T::one() / T::of(n as f64)))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Trace<T> {
    pub times: Vec<T>,
    pub signal: Vec<T>,
    pub basis: Basis,
    pub label: String,
    pub tau: T,
    pub cycle_time: T,
    /// Reference frequency ω_0 = γB_z for spectra.
    pub omega0: T,
    pub samples: usize,
    pub seed: u64,
}

/// The model with couplings drawn for sample `index`.
fn sample_model<T: Real>(cfg: &SimConfig<T>, index: usize) -> EnsembleModel<T> {
    let mut m = cfg.model.clone();
    if let Some(dist) = &cfg.coupling {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(index as u64);
        for i in 0..m.n {
            for j in i + 1..m.n {
                m.set_coupling(i, j, dist.sample(&mut rng));
            }
        }
    }
    m
}

fn run_sample<T: Real>(cfg: &SimConfig<T>, index: usize, psi0: &[C<T>], obs: &Operator<T>) -> Result<Vec<T>> {
    let m = sample_model(cfg, index);
    let u = cycle_unitary(cfg.sequence.as_ref(), &m.hamiltonian()?, m.n, cfg.tau)?;
    let mut psi = psi0.to_vec();
    let mut out = Vec::with_capacity(cfg.cycles);
    for k in 0..cfg.cycles {
        out.push(obs.expectation(&psi).re);
        if k + 1 < cfg.cycles {
            psi = u.apply(&psi);
        }
    }
    Ok(out)
}

/// Ensemble-averaged stroboscopic readout. Samples run in parallel, each on
/// its own generator stream, and are summed in sample order with Kahan
/// compensation, so the result does not depend on the thread count.
pub fn ramsey<T: Real>(cfg: &SimConfig<T>) -> Result<Trace<T>> {
    cfg.validate()?;
    let n = cfg.model.n;
    let psi0 = initial_state::<T>(cfg.basis, n);
    let obs = readout::<T>(cfg.basis, n)?;
    let draws = if cfg.coupling.is_some() { cfg.samples } else { 1 };
    let per_sample: Vec<Vec<T>> =
        (0..draws).into_par_iter().map(|i| run_sample(cfg, i, &psi0, &obs)).collect::<Result<_>>()?;

    let mut sum = vec![T::zero(); cfg.cycles];
    let mut comp = vec![T::zero(); cfg.cycles];
    for s in &per_sample {
        for k in 0..cfg.cycles {
            let y = s[k] - comp[k];
            let t = sum[k] + y;
            comp[k] = (t - sum[k]) - y;
            sum[k] = t;
        }
    }
    let scale = T::one() / T::of(draws as f64);
    let tc = cfg.cycle_time();
    Ok(Trace {
        times: (0..cfg.cycles).map(|k| tc * T::of(k as f64)).collect(),
        signal: sum.into_iter().map(|v| v * scale).collect(),
        basis: cfg.basis,
        label: cfg.sequence.as_ref().map_or_else(|| "free".to_string(), |s| s.label.clone()),
        tau: cfg.tau,
        cycle_time: tc,
        omega0: cfg.model.gamma_bz.abs(),
        samples: draws,
        seed: cfg.seed,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Spectrum<T> {
    /// ω/ω_0 for each bin, from 0 up to the Nyquist frequency.
    pub freqs: Vec<T>,
    pub magnitudes: Vec<T>,
}

impl<T: Real> Spectrum<T> {
    /// Spacing of `freqs`.
    pub fn bin_width(&self) -> T {
        self.freqs[1] - self.freqs[0]
    }

    /// Index of the largest magnitude, lowest index on ties.
    pub fn peak(&self) -> usize {
        let mut best = 0;
        for (k, &m) in self.magnitudes.iter().enumerate() {
            if m > self.magnitudes[best] {
                best = k;
            }
        }
        best
    }
}

/// Magnitude of the DFT of `signal` sampled every `dt`, zero-padded to four
/// times its length with the mean kept and no window. Frequencies are
/// reported as `2πf/omega0`.
pub fn spectrum_of<T: Real>(signal: &[T], dt: T, omega0: T) -> Result<Spectrum<T>> {
    if signal.len() < 8 {
        return Err(Error::InvalidConfig(format!("spectrum needs at least 8 points, got {}", signal.len())));
    }
    if !(dt > T::zero()) || !(omega0 > T::zero()) {
        return Err(Error::InvalidConfig("spectrum needs positive dt and omega0".into()));
    }
    let len = 4 * signal.len();
    let mut buf: Vec<Cf<f64>> = signal.iter().map(|v| Cf::new(v.to_f64().unwrap_or(f64::NAN), 0.0)).collect();
    buf.resize(len, Cf::new(0.0, 0.0));
    FftPlanner::<f64>::new().plan_fft_forward(len).process(&mut buf);
    let norm = 1.0 / signal.len() as f64;
    let df = 2.0 * std::f64::consts::PI
        / (len as f64 * dt.to_f64().unwrap_or(f64::NAN) * omega0.to_f64().unwrap_or(f64::NAN));
    let half = len / 2 + 1;
    Ok(Spectrum {
        freqs: (0..half).map(|k| T::of(k as f64 * df)).collect(),
        magnitudes: buf[..half].iter().map(|z| T::of(z.norm() * norm)).collect(),
    })
}

/// Spectrum of a trace on its stroboscopic grid.
pub fn spectrum<T: Real>(trace: &Trace<T>) -> Result<Spectrum<T>> {
    if trace.times.len() != trace.signal.len() {
        return Err(Error::DimensionMismatch { expected: trace.times.len(), found: trace.signal.len() });
    }
    if trace.times.len() < 2 {
        return Err(Error::InvalidConfig(format!("spectrum needs at least 8 points, got {}", trace.times.len())));
    }
    let dt = trace.times[1] - trace.times[0];
    let uneven = trace.times.windows(2).any(|w| ((w[1] - w[0]) - dt).abs() > dt * crate::tol::<T>(1e-9));
    if uneven {
        return Err(Error::InvalidConfig("spectrum needs a uniform time grid".into()));
    }
    spectrum_of(&trace.signal, dt, trace.omega0)
}

/// Largest state difference between `k` stepwise applications of the cycle
/// propagator and one application of its `k`-th power.
pub fn floquet_deviation<T: Real>(u: &Operator<T>, psi: &[C<T>], k: usize) -> T {
    let mut step = psi.to_vec();
    for _ in 0..k {
        step = u.apply(&step);
    }
    let direct = power(u, k).apply(psi);
    step.iter().zip(&direct).map(|(a, b)| (a - b).norm()).fold(T::zero(), T::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequences::load;
    use std::f64::consts::PI;

    fn fixed(basis: Basis, name: Option<&str>, j: f64) -> SimConfig<f64> {
        let seq = name.map(|n| load::<f64>(n).unwrap().seq);
        let mut cfg = SimConfig::new(basis, seq).unwrap();
        cfg.model.set_coupling(0, 1, j);
        cfg.coupling = None;
        cfg
    }

    #[test]
    fn free_zeeman_propagator_is_diagonal_phases() {
        let m = EnsembleModel::<f64>::new(3, 1).unwrap();
        let t = 0.37;
        let u = cycle_unitary(None, &m.build_zeeman().unwrap(), 1, t).unwrap();
        for (k, mz) in [1.0, 0.0, -1.0].into_iter().enumerate() {
            let want = C::from_polar(1.0, -2.0 * PI * mz * t);
            assert!((u.get(k, k) - want).norm() < 1e-12);
        }
        assert!(u.unitary_residual() < 1e-12);
    }

    #[test]
    fn free_qubit_precession_is_cosine() {
        let cfg = fixed(Basis::Qubit, None, 0.0);
        let tr = ramsey(&cfg).unwrap();
        assert_eq!(tr.signal.len(), 256);
        for (t, s) in tr.times.iter().zip(&tr.signal) {
            assert!((s - (2.0 * PI * t).cos()).abs() < 1e-9);
        }
    }

    #[test]
    fn dq_runs_twice_as_fast_as_sq() {
        let sq = ramsey(&fixed(Basis::Sq, None, 0.0)).unwrap();
        let dq = ramsey(&fixed(Basis::Dq, None, 0.0)).unwrap();
        for ((t, a), b) in sq.times.iter().zip(&sq.signal).zip(&dq.signal) {
            assert!((a - (2.0 * PI * t).cos()).abs() < 1e-9);
            assert!((b - (4.0 * PI * t).cos()).abs() < 1e-9);
        }
    }

    #[test]
    fn whh4_without_coupling_follows_tilted_precession() {
        let mut cfg = fixed(Basis::Qubit, Some("whh4"), 0.0);
        cfg.tau = 1e-4;
        let tr = ramsey(&cfg).unwrap();
        for (t, s) in tr.times.iter().zip(&tr.signal) {
            let want = 1.0 / 3.0 + 2.0 / 3.0 * (2.0 * PI * t / 3f64.sqrt()).cos();
            assert!((s - want).abs() < 1e-6, "t = {t}: {s} vs {want}");
        }
    }

    #[test]
    fn hord_qubit_phase_advances_at_one_third() {
        let seq = load::<f64>("hord-qubit-5").unwrap().seq;
        let m = EnsembleModel::<f64>::new(2, 1).unwrap();
        let tau = 1e-3;
        let u = cycle_unitary(Some(&seq), &m.build_zeeman().unwrap(), 1, tau).unwrap();
        // Unit determinant, so tr U = 2cos(φ/2) for eigenphase split φ.
        let split = 2.0 * (u.trace().re / 2.0).acos();
        let want = 2.0 * PI * tau * seq.total_weight() as f64 / 3.0;
        assert!((split / want - 1.0).abs() < 1e-6, "{split} vs {want}");
    }

    #[test]
    fn unitary_for_random_couplings() {
        let seq = load::<f64>("hord-qutrit-8").unwrap().seq;
        let cfg = SimConfig::new(Basis::Sq, Some(seq.clone())).unwrap();
        for i in 0..5 {
            let m = sample_model(&cfg, i);
            let u = cycle_unitary(Some(&seq), &m.hamiltonian().unwrap(), 2, cfg.tau).unwrap();
            assert!(u.unitary_residual() < 1e-12);
        }
    }

    #[test]
    fn floquet_power_matches_steps() {
        let seq = load::<f64>("hord-qutrit-8").unwrap().seq;
        let m = EnsembleModel::<f64>::pair(3, 0.3).unwrap();
        let u = cycle_unitary(Some(&seq), &m.hamiltonian().unwrap(), 2, 0.05).unwrap();
        let psi = initial_state::<f64>(Basis::Dq, 2);
        assert!(floquet_deviation(&u, &psi, 64) < 1e-9);
    }

    #[test]
    fn seeded_runs_repeat() {
        let mut cfg = SimConfig::<f64>::new(Basis::Qubit, None).unwrap();
        cfg.samples = 50;
        cfg.cycles = 16;
        let a = ramsey(&cfg).unwrap();
        let b = ramsey(&cfg).unwrap();
        assert_eq!(a.signal, b.signal);
        cfg.seed = 1;
        assert_ne!(ramsey(&cfg).unwrap().signal, a.signal);
        assert!(a.signal.iter().all(|s| s.abs() <= 1.0 + 1e-9));
    }

    #[test]
    fn cosine_spectrum_peaks_at_one() {
        let dt = 0.05;
        let sig: Vec<f64> = (0..256).map(|k| (2.0 * PI * k as f64 * dt).cos()).collect();
        let sp = spectrum_of(&sig, dt, 2.0 * PI).unwrap();
        let f = sp.freqs[sp.peak()];
        assert!((f - 1.0).abs() <= sp.bin_width(), "{f}");
        assert!(spectrum_of(&sig[..7], dt, 2.0 * PI).is_err());
    }

    #[test]
    fn config_validation() {
        let mut cfg = SimConfig::<f64>::new(Basis::Qubit, None).unwrap();
        cfg.cycles = 1;
        assert!(ramsey(&cfg).is_err());
        let mut cfg = SimConfig::<f64>::new(Basis::Qubit, None).unwrap();
        cfg.basis = Basis::Sq;
        assert!(ramsey(&cfg).is_err());
        let mut cfg = SimConfig::<f64>::new(Basis::Qubit, None).unwrap();
        cfg.tau = 0.0;
        assert!(ramsey(&cfg).is_err());
        assert_eq!("dq".parse::<Basis>().unwrap(), Basis::Dq);
    }
}
