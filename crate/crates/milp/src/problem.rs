//! Problem and solution types shared by the LP and MIP drivers.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{MilpError, Result};
use crate::scalar::Scalar;

/// Integrality mark of a variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarKind {
    Continuous,
    Integer,
    Binary,
}

impl VarKind {
    pub fn is_integral(self) -> bool {
        !matches!(self, VarKind::Continuous)
    }
}

/// `min c·x  s.t.  A_eq x = b_eq,  A_ub x <= b_ub,  lower <= x <= upper`.
///
/// Rows are stored densely. Infinite upper bounds serialize as `null`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar + Serialize", deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct LinearProgram<T> {
    pub c: Vec<T>,
    #[serde(default)]
    pub a_eq: Vec<Vec<T>>,
    #[serde(default)]
    pub b_eq: Vec<T>,
    #[serde(default)]
    pub a_ub: Vec<Vec<T>>,
    #[serde(default)]
    pub b_ub: Vec<T>,
    pub lower: Vec<T>,
    #[serde(serialize_with = "ser_bounds", deserialize_with = "de_bounds")]
    pub upper: Vec<T>,
    pub kinds: Vec<VarKind>,
}

fn ser_bounds<T: Scalar + Serialize, S: Serializer>(v: &[T], s: S) -> std::result::Result<S::Ok, S::Error> {
    let opt: Vec<Option<T>> = v.iter().map(|x| x.is_finite().then_some(*x)).collect();
    opt.serialize(s)
}

fn de_bounds<'de, T: Scalar + Deserialize<'de>, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<T>, D::Error> {
    let opt: Vec<Option<T>> = Vec::deserialize(d)?;
    Ok(opt.into_iter().map(|x| x.unwrap_or_else(T::infinity)).collect())
}

impl<T: Scalar> LinearProgram<T> {
    /// Continuous, nonnegative, unbounded-above variables with objective `c`.
    pub fn new(c: Vec<T>) -> Self {
        let n = c.len();
        Self {
            c,
            a_eq: Vec::new(),
            b_eq: Vec::new(),
            a_ub: Vec::new(),
            b_ub: Vec::new(),
            lower: vec![T::zero(); n],
            upper: vec![T::infinity(); n],
            kinds: vec![VarKind::Continuous; n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.c.len()
    }

    pub fn add_eq(&mut self, row: Vec<T>, rhs: T) -> &mut Self {
        self.a_eq.push(row);
        self.b_eq.push(rhs);
        self
    }

    pub fn add_ub(&mut self, row: Vec<T>, rhs: T) -> &mut Self {
        self.a_ub.push(row);
        self.b_ub.push(rhs);
        self
    }

    pub fn set_bounds(&mut self, index: usize, lower: T, upper: T) -> &mut Self {
        self.lower[index] = lower;
        self.upper[index] = upper;
        self
    }

    /// Marks a variable; `Binary` also clamps its bounds to `[0, 1]`.
    pub fn set_kind(&mut self, index: usize, kind: VarKind) -> &mut Self {
        self.kinds[index] = kind;
        if kind == VarKind::Binary {
            self.lower[index] = self.lower[index].max(T::zero());
            self.upper[index] = self.upper[index].min(T::one());
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        let check_len = |what: &str, len: usize| {
            if len == n {
                Ok(())
            } else {
                Err(MilpError::Dimension(format!("{what} has length {len}, expected {n}")))
            }
        };
        check_len("lower", self.lower.len())?;
        check_len("upper", self.upper.len())?;
        check_len("kinds", self.kinds.len())?;
        if self.a_eq.len() != self.b_eq.len() {
            return Err(MilpError::Dimension(format!(
                "{} equality rows but {} right-hand sides",
                self.a_eq.len(),
                self.b_eq.len()
            )));
        }
        if self.a_ub.len() != self.b_ub.len() {
            return Err(MilpError::Dimension(format!(
                "{} inequality rows but {} right-hand sides",
                self.a_ub.len(),
                self.b_ub.len()
            )));
        }
        for (i, row) in self.a_eq.iter().chain(self.a_ub.iter()).enumerate() {
            if row.len() != n {
                return Err(MilpError::Dimension(format!("row {i} has {} columns, expected {n}", row.len())));
            }
        }
        for j in 0..n {
            let (l, u) = (self.lower[j], self.upper[j]);
            if !l.is_finite() {
                return Err(MilpError::Bounds { index: j, reason: "lower bound must be finite".into() });
            }
            if u.is_nan() || l > u {
                return Err(MilpError::Bounds { index: j, reason: format!("lower {l} exceeds upper {u}") });
            }
        }
        Ok(())
    }

    pub fn objective(&self, x: &[T]) -> T {
        self.c.iter().zip(x).map(|(&c, &v)| c * v).sum()
    }

    /// Largest violation of any row, bound, or integrality mark.
    pub fn max_violation(&self, x: &[T]) -> T {
        let dot = |row: &[T]| row.iter().zip(x).map(|(&a, &v)| a * v).sum::<T>();
        let mut worst = T::zero();
        for (row, &b) in self.a_eq.iter().zip(&self.b_eq) {
            worst = worst.max((dot(row) - b).abs());
        }
        for (row, &b) in self.a_ub.iter().zip(&self.b_ub) {
            worst = worst.max(dot(row) - b);
        }
        for (j, &v) in x.iter().enumerate() {
            worst = worst.max(self.lower[j] - v).max(v - self.upper[j]);
        }
        worst
    }

    pub fn integrality_gap(&self, x: &[T]) -> T {
        x.iter()
            .zip(&self.kinds)
            .filter(|(_, k)| k.is_integral())
            .map(|(&v, _)| (v - v.round()).abs())
            .fold(T::zero(), T::max)
    }

    pub fn to_json(&self) -> Result<String>
    where
        T: Serialize,
    {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self>
    where
        T: for<'de> Deserialize<'de>,
    {
        let p: Self = serde_json::from_str(s)?;
        p.validate()?;
        Ok(p)
    }
}

/// Adds linking binaries `z_i` with `x_i - u_i z_i <= 0` and objective weight
/// `alpha` for the first `caps.len()` variables.
///
/// The resulting objective is `sum(c_i x_i) + alpha * sum(z_i)`; `z_i = 0`
/// forces `x_i = 0`, so the penalty counts the nonzero entries.
pub fn add_cardinality<T: Scalar>(p: &LinearProgram<T>, alpha: T, caps: &[T]) -> Result<LinearProgram<T>> {
    p.validate()?;
    let n = p.num_vars();
    let k = caps.len();
    if k > n {
        return Err(MilpError::Dimension(format!("{k} caps for {n} variables")));
    }
    for (i, &u) in caps.iter().enumerate() {
        if !(u > T::zero()) || !u.is_finite() {
            return Err(MilpError::NonPositiveCap(i));
        }
        if p.lower[i] < T::zero() {
            return Err(MilpError::Bounds { index: i, reason: "cardinality needs a nonnegative variable".into() });
        }
    }
    let widen = |row: &Vec<T>| {
        let mut r = row.clone();
        r.resize(n + k, T::zero());
        r
    };
    let mut out = LinearProgram {
        c: p.c.clone(),
        a_eq: p.a_eq.iter().map(widen).collect(),
        b_eq: p.b_eq.clone(),
        a_ub: p.a_ub.iter().map(widen).collect(),
        b_ub: p.b_ub.clone(),
        lower: p.lower.clone(),
        upper: p.upper.clone(),
        kinds: p.kinds.clone(),
    };
    out.c.extend(std::iter::repeat_n(alpha, k));
    out.lower.extend(std::iter::repeat_n(T::zero(), k));
    out.upper.extend(std::iter::repeat_n(T::one(), k));
    out.kinds.extend(std::iter::repeat_n(VarKind::Binary, k));
    for (i, &u) in caps.iter().enumerate() {
        out.upper[i] = out.upper[i].min(u);
        let mut row = vec![T::zero(); n + k];
        row[i] = T::one();
        row[n + i] = -u;
        out.add_ub(row, T::zero());
    }
    Ok(out)
}

/// Outcome of a solve.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    /// Branch-and-bound stopped at the node limit; `x` holds the incumbent if any.
    NodeLimit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Solution<T> {
    pub status: Status,
    pub x: Vec<T>,
    pub objective: T,
    /// Branch-and-bound LPs solved after the root relaxation.
    pub nodes_explored: usize,
}

impl<T: Scalar> Solution<T> {
    pub(crate) fn without_point(status: Status, nodes: usize) -> Self {
        Self { status, x: Vec::new(), objective: T::nan(), nodes_explored: nodes }
    }

    pub fn has_point(&self) -> bool {
        !self.x.is_empty()
    }
}

/// Entering-variable rule for the simplex.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pricing {
    /// Lowest eligible index every iteration.
    Bland,
    /// Most negative reduced cost, with randomized entering columns during
    /// long degenerate stretches.
    Dantzig,
}

#[derive(Clone, Debug)]
pub struct SolverOptions<T> {
    pub feas_tol: T,
    pub int_tol: T,
    pub node_limit: usize,
    pub max_vars: usize,
    pub pricing: Pricing,
    /// Depth-first dive from the root before best-first search, to find an
    /// incumbent early.
    pub dive: bool,
    /// Known point offered as the first incumbent if it is feasible.
    pub start: Option<Vec<T>>,
}

impl<T: Scalar> Default for SolverOptions<T> {
    fn default() -> Self {
        Self {
            feas_tol: T::default_feas_tol(),
            int_tol: T::default_int_tol(),
            node_limit: 1_000_000,
            max_vars: 2000,
            pricing: Pricing::Dantzig,
            dive: true,
            start: None,
        }
    }
}
