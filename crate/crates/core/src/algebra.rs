//! Dense complex operators, the generalized Pauli bases and the projection
//! map onto their tensor products.

use std::ops::{Add, Mul, Sub};

use nalgebra::DMatrix;
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Real;

pub type C<T> = Complex<T>;

/// Largest matrix side `tensor` will build.
pub const MAX_DIM: usize = 1 << 20;

#[inline]
pub(crate) fn c<T: Real>(re: f64, im: f64) -> C<T> {
    Complex::new(T::of(re), T::of(im))
}

/// Square complex matrix, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Operator<T> {
    dim: usize,
    entries: Vec<C<T>>,
}

impl<T: Real> Operator<T> {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, entries: vec![C::new(T::zero(), T::zero()); dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_fn(dim, |i, j| if i == j { C::new(T::one(), T::zero()) } else { C::new(T::zero(), T::zero()) })
    }

    pub fn from_fn(dim: usize, f: impl Fn(usize, usize) -> C<T>) -> Self {
        let entries = (0..dim * dim).map(|k| f(k / dim, k % dim)).collect();
        Self { dim, entries }
    }

    pub fn from_entries(dim: usize, entries: Vec<C<T>>) -> Result<Self> {
        if dim == 0 || entries.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, found: entries.len() });
        }
        Ok(Self { dim, entries })
    }

    pub fn diag(values: &[T]) -> Self {
        Self::from_fn(
            values.len(),
            |i, j| {
                if i == j {
                    C::new(values[i], T::zero())
                } else {
                    C::new(T::zero(), T::zero())
                }
            },
        )
    }

    pub(crate) fn from_f64(rows: &[[(f64, f64); 3]]) -> Self {
        Self::from_fn(rows.len(), |i, j| c(rows[i][j].0, rows[i][j].1))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[C<T>] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C<T> {
        self.entries[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: C<T>) {
        self.entries[i * self.dim + j] = v;
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self.get(j, i).conj())
    }

    pub fn scale(&self, s: C<T>) -> Self {
        Self { dim: self.dim, entries: self.entries.iter().map(|&v| v * s).collect() }
    }

    pub fn scale_real(&self, s: T) -> Self {
        Self { dim: self.dim, entries: self.entries.iter().map(|&v| v * s).collect() }
    }

    pub fn trace(&self) -> C<T> {
        (0..self.dim).map(|i| self.get(i, i)).fold(C::new(T::zero(), T::zero()), |a, b| a + b)
    }

    pub fn kron(&self, other: &Self) -> Self {
        let (a, b) = (self.dim, other.dim);
        Self::from_fn(a * b, |i, j| self.get(i / b, j / b) * other.get(i % b, j % b))
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> T {
        self.entries.iter().map(|v| v.norm()).fold(T::zero(), T::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!(self.dim, other.dim, "operator dimensions differ");
        self.entries.iter().zip(&other.entries).map(|(a, b)| (a - b).norm()).fold(T::zero(), T::max)
    }

    pub fn frobenius(&self) -> T {
        self.entries.iter().map(|v| v.norm_sqr()).sum::<T>().sqrt()
    }

    /// `max|M − M†|`.
    pub fn hermitian_residual(&self) -> T {
        self.max_abs_diff(&self.adjoint())
    }

    /// `max|U†U − I|`.
    pub fn unitary_residual(&self) -> T {
        (&self.adjoint() * self).max_abs_diff(&Self::identity(self.dim))
    }

    pub fn is_hermitian(&self, tol: T) -> bool {
        self.hermitian_residual() < tol
    }

    pub fn is_unitary(&self, tol: T) -> bool {
        self.unitary_residual() < tol
    }

    /// `U† M U`.
    pub fn conjugate_by(&self, u: &Self) -> Self {
        &(&u.adjoint() * self) * u
    }

    pub fn commutator(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }

    pub fn apply(&self, v: &[C<T>]) -> Vec<C<T>> {
        assert_eq!(v.len(), self.dim, "vector length differs from operator dimension");
        (0..self.dim)
            .map(|i| {
                let row = &self.entries[i * self.dim..(i + 1) * self.dim];
                row.iter().zip(v).fold(C::new(T::zero(), T::zero()), |acc, (&a, &x)| acc + a * x)
            })
            .collect()
    }

    /// `⟨v|M|v⟩`.
    pub fn expectation(&self, v: &[C<T>]) -> C<T> {
        let mv = self.apply(v);
        v.iter().zip(&mv).fold(C::new(T::zero(), T::zero()), |acc, (a, b)| acc + a.conj() * b)
    }

    /// Spectral decomposition of a Hermitian operator: ascending eigenvalues
    /// and the unitary whose columns are the eigenvectors.
    ///
    /// Runs in double precision regardless of `T`.
    pub fn eigh(&self) -> (Vec<T>, Self) {
        let n = self.dim;
        let m = DMatrix::<Complex<f64>>::from_fn(n, n, |i, j| {
            let v = self.get(i, j);
            Complex::new(v.re.to_f64().unwrap_or(f64::NAN), v.im.to_f64().unwrap_or(f64::NAN))
        });
        // Symmetrize so round-off in the input cannot leak into the solver.
        let m = (&m + m.adjoint()) * Complex::new(0.5, 0.0);
        let eig = m.symmetric_eigen();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&k| T::of(eig.eigenvalues[k])).collect();
        let vectors = Self::from_fn(n, |i, j| {
            let v = eig.eigenvectors[(i, order[j])];
            c(v.re, v.im)
        });
        (values, vectors)
    }

    /// `exp(−i·t·M)` for Hermitian `M`.
    pub fn exp_i_hermitian(&self, t: T) -> Self {
        let (values, v) = self.eigh();
        let phases: Vec<C<T>> = values.iter().map(|&l| C::from_polar(T::one(), -l * t)).collect();
        let vd = Self::from_fn(self.dim, |i, j| v.get(i, j) * phases[j]);
        &vd * &v.adjoint()
    }

    /// Multiplies by a phase so the first entry of largest magnitude is
    /// real and positive; equal-up-to-phase unitaries become equal.
    pub fn canonical_phase(&self) -> Self {
        let big = self.max_abs();
        let tol = big * T::of(1e-9);
        let Some(first) = self.entries.iter().find(|v| v.norm() > big - tol) else {
            return self.clone();
        };
        self.scale(first.conj() / first.norm())
    }
}

impl<T: Real> Mul for &Operator<T> {
    type Output = Operator<T>;

    fn mul(self, rhs: &Operator<T>) -> Operator<T> {
        assert_eq!(self.dim, rhs.dim, "operator dimensions differ");
        let n = self.dim;
        let mut out = Operator::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.entries[i * n + k];
                if a.re == T::zero() && a.im == T::zero() {
                    continue;
                }
                let row = &rhs.entries[k * n..(k + 1) * n];
                for (o, &b) in out.entries[i * n..(i + 1) * n].iter_mut().zip(row) {
                    *o += a * b;
                }
            }
        }
        out
    }
}

impl<T: Real> Add for &Operator<T> {
    type Output = Operator<T>;

    fn add(self, rhs: &Operator<T>) -> Operator<T> {
        assert_eq!(self.dim, rhs.dim, "operator dimensions differ");
        Operator { dim: self.dim, entries: self.entries.iter().zip(&rhs.entries).map(|(a, b)| a + b).collect() }
    }
}

impl<T: Real> Sub for &Operator<T> {
    type Output = Operator<T>;

    fn sub(self, rhs: &Operator<T>) -> Operator<T> {
        assert_eq!(self.dim, rhs.dim, "operator dimensions differ");
        Operator { dim: self.dim, entries: self.entries.iter().zip(&rhs.entries).map(|(a, b)| a - b).collect() }
    }
}

pub(crate) fn check_qudit(d: usize) -> Result<()> {
    match d {
        2 | 3 => Ok(()),
        _ => Err(Error::UnsupportedDimension(d)),
    }
}

/// Ordered generalized Pauli basis with `Tr(σ_j σ_k) = norm_const·δ_jk`.
#[derive(Clone, Debug)]
pub struct BasisSet<T> {
    pub d: usize,
    pub elements: Vec<Operator<T>>,
    pub norm_const: T,
}

const R: f64 = 0.0;

/// Identity, σ_x, σ_y, σ_z for d = 2; √(2/3)·I, λ_1..λ_8 for d = 3.
///
/// The Gell-Mann ordering groups each two-level subspace's x-, y- and
/// z-like generators: λ_1, λ_4, λ_7 act on levels (1,2); λ_2, λ_5 on (2,3);
/// λ_3, λ_6 on (1,3).
pub fn pauli_basis<T: Real>(d: usize) -> Result<BasisSet<T>> {
    check_qudit(d)?;
    let elements = if d == 2 {
        let m = |e: [[(f64, f64); 2]; 2]| Operator::from_fn(2, |i, j| c(e[i][j].0, e[i][j].1));
        vec![
            Operator::identity(2),
            m([[(R, R), (1., R)], [(1., R), (R, R)]]),
            m([[(R, R), (R, -1.)], [(R, 1.), (R, R)]]),
            m([[(1., R), (R, R)], [(R, R), (-1., R)]]),
        ]
    } else {
        let z = (R, R);
        let o = (1., R);
        let (mi, pi) = ((R, -1.), (R, 1.));
        let s3 = 3f64.sqrt();
        vec![
            Operator::identity(3).scale_real(T::of((2.0f64 / 3.0).sqrt())),
            Operator::from_f64(&[[z, o, z], [o, z, z], [z, z, z]]),
            Operator::from_f64(&[[z, z, z], [z, z, o], [z, o, z]]),
            Operator::from_f64(&[[z, z, o], [z, z, z], [o, z, z]]),
            Operator::from_f64(&[[z, mi, z], [pi, z, z], [z, z, z]]),
            Operator::from_f64(&[[z, z, z], [z, z, mi], [z, pi, z]]),
            Operator::from_f64(&[[z, z, mi], [z, z, z], [pi, z, z]]),
            Operator::diag(&[T::one(), -T::one(), T::zero()]),
            Operator::diag(&[T::of(1.0 / s3), T::of(1.0 / s3), T::of(-2.0 / s3)]),
        ]
    };
    Ok(BasisSet { d, elements, norm_const: T::of(2.0) })
}

/// Spin operators `(S_x, S_y, S_z)`: σ/2 for d = 2, spin-1 matrices for d = 3.
pub fn spin_operators<T: Real>(d: usize) -> Result<(Operator<T>, Operator<T>, Operator<T>)> {
    check_qudit(d)?;
    if d == 2 {
        let b = pauli_basis::<T>(2)?;
        let h = T::of(0.5);
        return Ok((b.elements[1].scale_real(h), b.elements[2].scale_real(h), b.elements[3].scale_real(h)));
    }
    let r = 0.5f64.sqrt();
    let z = (R, R);
    let sx = Operator::from_f64(&[[z, (r, R), z], [(r, R), z, (r, R)], [z, (r, R), z]]);
    let sy = Operator::from_f64(&[[z, (R, -r), z], [(R, r), z, (R, -r)], [z, (R, r), z]]);
    let sz = Operator::diag(&[T::one(), T::zero(), -T::one()]);
    Ok((sx, sy, sz))
}

/// Generators `(g_x, g_y, g_z)` of the k-th su(2) subalgebra of su(3):
/// `{λ_1, λ_4, λ_7}`, `{λ_2, λ_5, ζ}`, `{λ_3, λ_6, η}` with
/// `ζ = (√3λ_8 − λ_7)/2` and `η = (√3λ_8 + λ_7)/2`.
pub fn subalgebra_generators<T: Real>(k: usize) -> Result<(Operator<T>, Operator<T>, Operator<T>)> {
    let b = pauli_basis::<T>(3)?;
    let l = &b.elements;
    let s3 = T::of(3f64.sqrt());
    let half = T::of(0.5);
    match k {
        1 => Ok((l[1].clone(), l[4].clone(), l[7].clone())),
        2 => Ok((l[2].clone(), l[5].clone(), (&l[8].scale_real(s3) - &l[7]).scale_real(half))),
        3 => Ok((l[3].clone(), l[6].clone(), (&l[8].scale_real(s3) + &l[7]).scale_real(half))),
        _ => Err(Error::InvalidSubsystem(k)),
    }
}

/// Kronecker product, leftmost factor most significant.
pub fn tensor<T: Real>(ops: &[Operator<T>]) -> Result<Operator<T>> {
    let Some((first, rest)) = ops.split_first() else {
        return Err(Error::DimensionMismatch { expected: 1, found: 0 });
    };
    let dim = ops.iter().try_fold(1usize, |acc, o| acc.checked_mul(o.dim()));
    match dim {
        Some(d) if d <= MAX_DIM => {}
        Some(d) => return Err(Error::TooLarge(d)),
        None => return Err(Error::TooLarge(usize::MAX)),
    }
    Ok(rest.iter().fold(first.clone(), |acc, o| acc.kron(o)))
}

/// `U ⊗ U ⊗ … ⊗ U` with `n` factors.
pub fn collective<T: Real>(u: &Operator<T>, n: usize) -> Operator<T> {
    (1..n).fold(u.clone(), |acc, _| acc.kron(u))
}

/// Coefficients of an operator in the n-fold tensor basis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectionVector<T> {
    pub d: usize,
    pub n: usize,
    pub coeffs: Vec<T>,
    /// Largest imaginary part dropped from a coefficient.
    pub imag_residual: T,
}

impl<T: Real> ProjectionVector<T> {
    pub fn zeros(d: usize, n: usize) -> Self {
        Self { d, n, coeffs: vec![T::zero(); (d * d).pow(n as u32)], imag_residual: T::zero() }
    }

    pub fn dot(&self, other: &Self) -> T {
        self.coeffs.iter().zip(&other.coeffs).map(|(&a, &b)| a * b).sum()
    }

    pub fn norm(&self) -> T {
        self.dot(self).sqrt()
    }
}

/// Sparse tensor basis element: list of (row, col, value).
type Sparse<T> = Vec<(usize, usize, C<T>)>;

fn sparse_tensor_basis<T: Real>(d: usize, n: usize) -> Result<Vec<Sparse<T>>> {
    let basis = pauli_basis::<T>(d)?;
    let single: Vec<Sparse<T>> = basis
        .elements
        .iter()
        .map(|e| {
            let mut s = Vec::new();
            for i in 0..d {
                for j in 0..d {
                    let v = e.get(i, j);
                    if v.norm() > T::zero() {
                        s.push((i, j, v));
                    }
                }
            }
            s
        })
        .collect();
    let mut out: Vec<Sparse<T>> = vec![vec![(0, 0, C::new(T::one(), T::zero()))]];
    for _ in 0..n {
        let mut next = Vec::with_capacity(out.len() * single.len());
        for acc in &out {
            for s in &single {
                let mut t = Vec::with_capacity(acc.len() * s.len());
                for &(i, j, a) in acc {
                    for &(k, l, b) in s {
                        t.push((i * d + k, j * d + l, a * b));
                    }
                }
                next.push(t);
            }
        }
        out = next;
    }
    Ok(out)
}

/// Precomputed sparse tensor basis for repeated projections.
#[derive(Clone, Debug)]
pub struct Projector<T> {
    d: usize,
    n: usize,
    basis: Vec<Sparse<T>>,
    scale: T,
}

impl<T: Real> Projector<T> {
    pub fn new(d: usize, n: usize) -> Result<Self> {
        check_qudit(d)?;
        if n == 0 {
            return Err(Error::DimensionMismatch { expected: 1, found: 0 });
        }
        d.checked_pow(n as u32).filter(|&x| x <= MAX_DIM).ok_or(Error::TooLarge(usize::MAX))?;
        Ok(Self { d, n, basis: sparse_tensor_basis(d, n)?, scale: T::of(2f64.powi(n as i32)) })
    }

    pub fn space_dim(&self) -> usize {
        self.d.pow(self.n as u32)
    }

    /// Complex coefficients `Tr(M S_i)/2^n`; valid for any square `M`.
    pub fn project_complex(&self, m: &Operator<T>) -> Result<Vec<C<T>>> {
        if m.dim() != self.space_dim() {
            return Err(Error::DimensionMismatch { expected: self.space_dim(), found: m.dim() });
        }
        Ok(self
            .basis
            .iter()
            .map(|s| s.iter().fold(C::new(T::zero(), T::zero()), |acc, &(i, j, v)| acc + m.get(j, i) * v) / self.scale)
            .collect())
    }

    pub fn project(&self, m: &Operator<T>) -> Result<ProjectionVector<T>> {
        let z = self.project_complex(m)?;
        let imag_residual = z.iter().map(|v| v.im.abs()).fold(T::zero(), T::max);
        Ok(ProjectionVector { d: self.d, n: self.n, coeffs: z.iter().map(|v| v.re).collect(), imag_residual })
    }

    pub fn reconstruct_complex(&self, coeffs: &[C<T>]) -> Operator<T> {
        let mut out = Operator::zeros(self.space_dim());
        for (s, &cf) in self.basis.iter().zip(coeffs) {
            if cf.norm() == T::zero() {
                continue;
            }
            for &(i, j, v) in s {
                let cur = out.get(i, j);
                out.set(i, j, cur + v * cf);
            }
        }
        out
    }
}

/// Projection onto the n-fold tensor basis, `c_i = Tr(H S_i)/2^n`.
pub fn project<T: Real>(h: &Operator<T>, d: usize, n: usize) -> Result<ProjectionVector<T>> {
    Projector::new(d, n)?.project(h)
}

/// Inverse of [`project`]: `Σ c_i S_i`.
pub fn reconstruct<T: Real>(v: &ProjectionVector<T>) -> Result<Operator<T>> {
    let p = Projector::new(v.d, v.n)?;
    if v.coeffs.len() != p.basis.len() {
        return Err(Error::DimensionMismatch { expected: p.basis.len(), found: v.coeffs.len() });
    }
    let z: Vec<C<T>> = v.coeffs.iter().map(|&x| C::new(x, T::zero())).collect();
    Ok(p.reconstruct_complex(&z))
}

/// Mixed-radix index of a tensor basis element from per-factor indices.
pub fn tensor_index(d: usize, factors: &[usize]) -> usize {
    factors.iter().fold(0, |acc, &f| acc * d * d + f)
}
