//! Zeeman plus dipolar spin-ensemble Hamiltonian and the coupling-strength
//! distribution.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::algebra::{check_qudit, spin_operators, tensor, Operator};
use crate::error::{Error, Result};
use crate::Real;

/// Which part of `3S_zS_z − S·S` the dipolar term keeps.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DipolarForm {
    /// Drop matrix elements that change `Σ_i (S_z^i)²`. Those terms oscillate
    /// at the zero-field splitting of a spin-1 and vanish in its rotating
    /// frame. Identical to `Full` for spin-1/2.
    #[default]
    Secular,
    /// Keep every element of `3S_zS_z − S·S`.
    Full,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleModel<T> {
    pub d: usize,
    pub n: usize,
    /// γB_z in angular frequency units.
    pub gamma_bz: T,
    /// Symmetric n×n couplings J_ij, row-major, zero diagonal.
    pub couplings: Vec<T>,
    #[serde(default)]
    pub dipolar_form: DipolarForm,
}

impl<T: Real> EnsembleModel<T> {
    /// Uncoupled spins with γB_z = 2π.
    pub fn new(d: usize, n: usize) -> Result<Self> {
        check_qudit(d)?;
        if n == 0 {
            return Err(Error::InvalidModel("at least one spin required".into()));
        }
        Ok(Self {
            d,
            n,
            gamma_bz: T::of(2.0 * std::f64::consts::PI),
            couplings: vec![T::zero(); n * n],
            dipolar_form: DipolarForm::Secular,
        })
    }

    /// Two spins with coupling `j`.
    pub fn pair(d: usize, j: T) -> Result<Self> {
        let mut m = Self::new(d, 2)?;
        m.set_coupling(0, 1, j);
        Ok(m)
    }

    /// Two spins with γB_z = 1 and J = 1, the unit-free reference used for
    /// constraint rows and dictionary keys.
    pub fn unit_pair(d: usize) -> Result<Self> {
        let mut m = Self::pair(d, T::one())?;
        m.gamma_bz = T::one();
        Ok(m)
    }

    pub fn with_gamma_bz(mut self, g: T) -> Self {
        self.gamma_bz = g;
        self
    }

    pub fn with_form(mut self, form: DipolarForm) -> Self {
        self.dipolar_form = form;
        self
    }

    pub fn set_coupling(&mut self, i: usize, j: usize, v: T) {
        self.couplings[i * self.n + j] = v;
        self.couplings[j * self.n + i] = v;
    }

    pub fn coupling(&self, i: usize, j: usize) -> T {
        self.couplings[i * self.n + j]
    }

    pub fn space_dim(&self) -> usize {
        self.d.pow(self.n as u32)
    }

    pub fn validate(&self) -> Result<()> {
        check_qudit(self.d)?;
        if self.couplings.len() != self.n * self.n {
            return Err(Error::InvalidModel(format!(
                "expected {} couplings, found {}",
                self.n * self.n,
                self.couplings.len()
            )));
        }
        if !self.gamma_bz.is_finite() {
            return Err(Error::InvalidModel("gamma_bz must be finite".into()));
        }
        for i in 0..self.n {
            if self.coupling(i, i) != T::zero() {
                return Err(Error::InvalidModel(format!("J[{i}][{i}] must be zero")));
            }
            for j in 0..i {
                if self.coupling(i, j) != self.coupling(j, i) || !self.coupling(i, j).is_finite() {
                    return Err(Error::InvalidModel(format!("J[{i}][{j}] must be finite and symmetric")));
                }
            }
        }
        Ok(())
    }

    /// `op` on spin `site`, identity elsewhere.
    fn embed(&self, ops: &[(usize, &Operator<T>)]) -> Result<Operator<T>> {
        let id = Operator::identity(self.d);
        let factors: Vec<Operator<T>> = (0..self.n)
            .map(|k| ops.iter().find(|(s, _)| *s == k).map_or_else(|| id.clone(), |(_, o)| (*o).clone()))
            .collect();
        tensor(&factors)
    }

    /// `S_z^tot = Σ_i S_z^i`.
    pub fn total_sz(&self) -> Result<Operator<T>> {
        let (_, _, sz) = spin_operators::<T>(self.d)?;
        let mut out = Operator::zeros(self.space_dim());
        for i in 0..self.n {
            out = &out + &self.embed(&[(i, &sz)])?;
        }
        Ok(out)
    }

    /// `γB_z Σ_i S_z^i`.
    pub fn build_zeeman(&self) -> Result<Operator<T>> {
        self.validate()?;
        Ok(self.total_sz()?.scale_real(self.gamma_bz))
    }

    /// `Σ_{i<j} J_ij (3S_z^iS_z^j − S^i·S^j)`, restricted per `dipolar_form`.
    pub fn build_dipolar(&self) -> Result<Operator<T>> {
        self.validate()?;
        let (sx, sy, sz) = spin_operators::<T>(self.d)?;
        let mut out = Operator::zeros(self.space_dim());
        for i in 0..self.n {
            for j in i + 1..self.n {
                let jij = self.coupling(i, j);
                if jij == T::zero() {
                    continue;
                }
                let zz = self.embed(&[(i, &sz), (j, &sz)])?;
                let xx = self.embed(&[(i, &sx), (j, &sx)])?;
                let yy = self.embed(&[(i, &sy), (j, &sy)])?;
                let term = &(&zz.scale_real(T::of(2.0)) - &xx) - &yy;
                out = &out + &term.scale_real(jij);
            }
        }
        if self.dipolar_form == DipolarForm::Secular && self.d == 3 {
            let weight = |mut k: usize| {
                let mut w = 0;
                for _ in 0..self.n {
                    // Level 1 is m = 0; levels 0 and 2 have m² = 1.
                    w += usize::from(k % 3 != 1);
                    k /= 3;
                }
                w
            };
            let dim = self.space_dim();
            for r in 0..dim {
                for c in 0..dim {
                    if weight(r) != weight(c) {
                        out.set(r, c, Default::default());
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn hamiltonian(&self) -> Result<Operator<T>> {
        Ok(&self.build_zeeman()? + &self.build_dipolar()?)
    }
}

/// `P(J) = (Γ/J²)√(2/π) exp(−Γ²/2J²)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingDistribution<T> {
    pub gamma: T,
}

impl<T: Real> Default for CouplingDistribution<T> {
    fn default() -> Self {
        Self { gamma: T::of(2.0 * std::f64::consts::PI * 1e-2) }
    }
}

impl<T: Real> CouplingDistribution<T> {
    pub fn new(gamma: T) -> Result<Self> {
        if !(gamma > T::zero()) || !gamma.is_finite() {
            return Err(Error::InvalidModel(format!("Gamma must be positive, got {gamma}")));
        }
        Ok(Self { gamma })
    }

    /// `Γ/|X|` with X standard normal, which has density P(J).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        loop {
            let x: f64 = rng.sample::<f64, _>(StandardNormal).abs();
            if x >= 1e-12 {
                return self.gamma / T::of(x);
            }
        }
    }
}

/// One coupling drawn from a generator seeded with `seed`.
pub fn sample_coupling<T: Real>(dist: &CouplingDistribution<T>, seed: u64) -> T {
    dist.sample(&mut ChaCha8Rng::seed_from_u64(seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::project;

    #[test]
    fn zeeman_examples() {
        let m = EnsembleModel::<f64>::new(2, 1).unwrap();
        let h = m.build_zeeman().unwrap();
        let tau = 2.0 * std::f64::consts::PI;
        assert!(h.max_abs_diff(&Operator::diag(&[tau / 2.0, -tau / 2.0])) < 1e-12);

        let m = EnsembleModel::<f64>::new(3, 2).unwrap();
        let h = m.build_zeeman().unwrap();
        let ms = [1.0, 0.0, -1.0];
        for a in 0..3 {
            for b in 0..3 {
                assert!((h.get(a * 3 + b, a * 3 + b).re - tau * (ms[a] + ms[b])).abs() < 1e-12);
            }
        }
        let p = project(&h, 3, 2).unwrap();
        for (i, &v) in p.coeffs.iter().enumerate() {
            if v.abs() > 1e-12 {
                assert!([7 * 9, 8 * 9, 7, 8].contains(&i), "unexpected support {i}");
            }
        }
    }

    #[test]
    fn dipolar_pair_spectrum() {
        let m = EnsembleModel::<f64>::pair(2, 1.0).unwrap();
        let h = m.build_dipolar().unwrap();
        let (mut ev, _) = h.eigh();
        ev.sort_by(f64::total_cmp);
        let want = [-1.0, 0.0, 0.5, 0.5];
        for (a, b) in ev.iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
        let zero = EnsembleModel::<f64>::new(3, 2).unwrap().build_dipolar().unwrap();
        assert_eq!(zero.max_abs(), 0.0);
    }

    #[test]
    fn qubit_dipolar_axis_pattern() {
        let h = EnsembleModel::<f64>::pair(2, 1.0).unwrap().build_dipolar().unwrap();
        let p = project(&h, 2, 2).unwrap();
        let (xx, yy, zz) = (p.coeffs[5], p.coeffs[10], p.coeffs[15]);
        assert!((xx - yy).abs() < 1e-12 && (xx + zz / 2.0).abs() < 1e-12);
        assert!((xx + yy + zz).abs() < 1e-12);
        assert!((zz - 0.5).abs() < 1e-12);
    }

    #[test]
    fn forms_agree_for_qubits_and_differ_for_qutrits() {
        for d in [2, 3] {
            let s = EnsembleModel::<f64>::pair(d, 1.0).unwrap();
            let f = s.clone().with_form(DipolarForm::Full);
            let diff = s.build_dipolar().unwrap().max_abs_diff(&f.build_dipolar().unwrap());
            assert_eq!(diff < 1e-15, d == 2);
        }
    }

    #[test]
    fn validate_rejects_asymmetric_couplings() {
        let mut m = EnsembleModel::<f64>::new(2, 2).unwrap();
        m.couplings[1] = 1.0;
        assert!(m.validate().is_err());
        assert!(EnsembleModel::<f64>::new(5, 2).is_err());
        assert!(CouplingDistribution::<f64>::new(0.0).is_err());
    }

    #[test]
    fn sampling_is_seeded() {
        let d = CouplingDistribution::<f64>::default();
        assert_eq!(sample_coupling(&d, 9), sample_coupling(&d, 9));
        assert_ne!(sample_coupling(&d, 9), sample_coupling(&d, 10));
    }
}
