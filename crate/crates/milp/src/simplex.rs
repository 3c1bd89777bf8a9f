//! Two-phase primal simplex on a dense tableau with bounded variables.
//!
//! Every variable is shifted to a zero lower bound. Nonbasic variables sit at
//! zero or at their upper bound, and the ratio test allows bound flips, so
//! finite upper bounds never become explicit rows.

use crate::error::{MilpError, Result};
use crate::problem::{LinearProgram, Pricing, Solution, SolverOptions, Status};
use crate::scalar::Scalar;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Result of one relaxation solve over explicit bounds.
#[derive(Clone, Debug)]
pub(crate) struct LpOutcome<T> {
    pub status: Status,
    pub x: Vec<T>,
    pub objective: T,
}

/// Degenerate pivots in a row before Dantzig pricing switches to random
/// entering columns until the objective moves again.
const DEGENERATE_STREAK: usize = 50;

struct Tableau<T> {
    rows: usize,
    cols: usize,
    a: Vec<T>,
    value: Vec<T>,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    at_upper: Vec<bool>,
    upper: Vec<T>,
    blocked: Vec<bool>,
    d: Vec<T>,
}

enum Phase {
    Optimal,
    Unbounded,
}

impl<T: Scalar> Tableau<T> {
    #[inline]
    fn at(&self, i: usize, j: usize) -> T {
        self.a[i * self.cols + j]
    }

    fn reduced_costs(&mut self, cost: &[T]) {
        let mut d = cost.to_vec();
        for i in 0..self.rows {
            let cb = cost[self.basis[i]];
            if cb != T::zero() {
                let row = &self.a[i * self.cols..(i + 1) * self.cols];
                for (dj, &aij) in d.iter_mut().zip(row) {
                    *dj -= cb * aij;
                }
            }
        }
        for i in 0..self.rows {
            d[self.basis[i]] = T::zero();
        }
        self.d = d;
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let cols = self.cols;
        let p = self.at(r, q);
        for v in &mut self.a[r * cols..(r + 1) * cols] {
            *v /= p;
        }
        let (before, rest) = self.a.split_at_mut(r * cols);
        let (prow, after) = rest.split_at_mut(cols);
        for row in before.chunks_exact_mut(cols).chain(after.chunks_exact_mut(cols)) {
            let f = row[q];
            if f != T::zero() {
                for (x, &y) in row.iter_mut().zip(prow.iter()) {
                    *x -= f * y;
                }
                row[q] = T::zero();
            }
        }
        let f = self.d[q];
        if f != T::zero() {
            for (x, &y) in self.d.iter_mut().zip(prow.iter()) {
                *x -= f * y;
            }
            self.d[q] = T::zero();
        }
        let leaving = self.basis[r];
        self.is_basic[leaving] = false;
        self.is_basic[q] = true;
        self.basis[r] = q;
    }

    /// Uniform choice among improving columns. Used to break stalls, since
    /// a random walk over degenerate bases cannot cycle indefinitely.
    fn choose_random(&self, tol: T, rng: &mut ChaCha8Rng) -> Option<usize> {
        let candidates: Vec<usize> = (0..self.cols)
            .filter(|&j| !self.is_basic[j] && !self.blocked[j] && self.upper[j] > T::zero())
            .filter(|&j| (if self.at_upper[j] { self.d[j] } else { -self.d[j] }) > tol)
            .collect();
        if candidates.is_empty() {
            None
        } else {
            Some(candidates[rng.random_range(0..candidates.len())])
        }
    }

    fn choose_entering(&self, tol: T, bland: bool) -> Option<usize> {
        let mut best: Option<(usize, T)> = None;
        for j in 0..self.cols {
            if self.is_basic[j] || self.blocked[j] || self.upper[j] <= T::zero() {
                continue;
            }
            let dj = self.d[j];
            let gain = if self.at_upper[j] { dj } else { -dj };
            if gain > tol {
                if bland {
                    return Some(j);
                }
                if best.is_none_or(|(_, g)| gain > g) {
                    best = Some((j, gain));
                }
            }
        }
        best.map(|(j, _)| j)
    }

    fn iterate(&mut self, cost: &[T], opts: &SolverOptions<T>, limit: usize) -> Result<Phase> {
        let dtol = T::opt_tol();
        let ptol = T::pivot_tol();
        let slack = opts.feas_tol * T::of(0.01);
        let mut streak = 0usize;
        let bland = opts.pricing == Pricing::Bland;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut fresh = true;
        for it in 0..limit {
            if it % 64 == 63 {
                self.reduced_costs(cost);
                fresh = true;
            }
            let stalled = !bland && streak >= DEGENERATE_STREAK;
            let picked = if stalled { self.choose_random(dtol, &mut rng) } else { self.choose_entering(dtol, bland) };
            let q = match picked {
                Some(q) => q,
                None if fresh => return Ok(Phase::Optimal),
                None => {
                    // Recheck against exact reduced costs before stopping.
                    self.reduced_costs(cost);
                    match self.choose_entering(dtol, bland) {
                        Some(q) => q,
                        None => return Ok(Phase::Optimal),
                    }
                }
            };
            fresh = false;
            let dir = if self.at_upper[q] { -T::one() } else { T::one() };

            // Harris two-pass ratio test. Pass one finds the largest step
            // that keeps every basic variable within a small slack of its
            // bounds; pass two picks, among rows blocking before that step,
            // the largest pivot (or lowest index under Bland).
            let ratio = |i: usize, relax: T| -> Option<(T, bool)> {
                let alpha = self.at(i, q) * dir;
                let b = self.basis[i];
                if alpha > ptol {
                    Some(((self.value[i].max(T::zero()) + relax) / alpha, false))
                } else if alpha < -ptol && self.upper[b].is_finite() {
                    Some((((self.upper[b] - self.value[i]).max(T::zero()) + relax) / -alpha, true))
                } else {
                    None
                }
            };
            let mut bound = T::infinity();
            for i in 0..self.rows {
                if let Some((t, _)) = ratio(i, slack) {
                    bound = bound.min(t);
                }
            }
            let mut leave: Option<(usize, bool, T)> = None;
            if bound.is_finite() && !(self.upper[q] <= bound) {
                for i in 0..self.rows {
                    let Some((t, to_upper)) = ratio(i, T::zero()) else { continue };
                    if t > bound {
                        continue;
                    }
                    let better = match leave {
                        None => true,
                        Some((k, _, _)) => {
                            let (a, b) = (self.at(i, q).abs(), self.at(k, q).abs());
                            if bland {
                                self.basis[i] < self.basis[k]
                            } else {
                                a > b || (a == b && self.basis[i] < self.basis[k])
                            }
                        }
                    };
                    if better {
                        leave = Some((i, to_upper, t));
                    }
                }
            }
            let theta = match leave {
                Some((_, _, t)) => t,
                None => self.upper[q],
            };
            if !theta.is_finite() {
                return Ok(Phase::Unbounded);
            }
            if theta <= dtol {
                streak += 1;
            } else {
                streak = 0;
            }

            for i in 0..self.rows {
                let aiq = self.at(i, q);
                if aiq != T::zero() {
                    self.value[i] -= dir * theta * aiq;
                }
            }
            match leave {
                None => self.at_upper[q] = !self.at_upper[q],
                Some((r, to_upper, _)) => {
                    let entering = if dir > T::zero() { theta } else { self.upper[q] - theta };
                    let leaving = self.basis[r];
                    self.at_upper[leaving] = to_upper;
                    self.at_upper[q] = false;
                    self.value[r] = entering;
                    self.pivot(r, q);
                }
            }
        }
        Err(MilpError::IterationLimit(limit))
    }

    fn remove_row(&mut self, r: usize) {
        let cols = self.cols;
        self.a.drain(r * cols..(r + 1) * cols);
        self.value.remove(r);
        let b = self.basis.remove(r);
        self.is_basic[b] = false;
        self.rows -= 1;
    }

    fn column_values(&self) -> Vec<T> {
        let mut v: Vec<T> = (0..self.cols).map(|j| if self.at_upper[j] { self.upper[j] } else { T::zero() }).collect();
        for (i, &b) in self.basis.iter().enumerate() {
            v[b] = self.value[i];
        }
        v
    }
}

/// Solves the continuous relaxation of `p` with the given bound overrides.
pub(crate) fn solve_bounded<T: Scalar>(
    p: &LinearProgram<T>,
    lower: &[T],
    upper: &[T],
    opts: &SolverOptions<T>,
) -> Result<LpOutcome<T>> {
    let n = p.num_vars();
    let infeasible = || LpOutcome { status: Status::Infeasible, x: Vec::new(), objective: T::nan() };

    let mut span = Vec::with_capacity(n);
    for j in 0..n {
        let s = upper[j] - lower[j];
        if s < -opts.feas_tol {
            return Ok(infeasible());
        }
        span.push(s.max(T::zero()));
    }

    // Rows after shifting x = lower + y.
    struct Row<T> {
        coef: Vec<T>,
        rhs: T,
        slack: bool,
    }
    let shift = |row: &[T], b: T| b - row.iter().zip(lower).map(|(&a, &l)| a * l).sum::<T>();
    let mut rows: Vec<Row<T>> = Vec::new();
    for (row, &b) in p.a_ub.iter().zip(&p.b_ub) {
        rows.push(Row { coef: row.clone(), rhs: shift(row, b), slack: true });
    }
    for (row, &b) in p.a_eq.iter().zip(&p.b_eq) {
        rows.push(Row { coef: row.clone(), rhs: shift(row, b), slack: false });
    }
    let m = rows.len();
    let n_slack = p.a_ub.len();
    let needs_art: Vec<bool> = rows.iter().map(|r| !r.slack || r.rhs < T::zero()).collect();
    let n_art = needs_art.iter().filter(|&&b| b).count();
    let cols = n + n_slack + n_art;

    let mut a = vec![T::zero(); m * cols];
    let mut value = vec![T::zero(); m];
    let mut basis = vec![0; m];
    let mut art = n + n_slack;
    for (i, row) in rows.iter().enumerate() {
        let sign = if row.rhs < T::zero() { -T::one() } else { T::one() };
        let line = &mut a[i * cols..(i + 1) * cols];
        for (x, &c) in line.iter_mut().zip(&row.coef) {
            *x = sign * c;
        }
        if row.slack {
            line[n + i] = sign;
        }
        value[i] = sign * row.rhs;
        if needs_art[i] {
            line[art] = T::one();
            basis[i] = art;
            art += 1;
        } else {
            basis[i] = n + i;
        }
    }
    let mut upper_all = span;
    upper_all.extend(std::iter::repeat_n(T::infinity(), n_slack + n_art));
    let mut is_basic = vec![false; cols];
    for &b in &basis {
        is_basic[b] = true;
    }
    let mut t = Tableau {
        rows: m,
        cols,
        a,
        value,
        basis,
        is_basic,
        at_upper: vec![false; cols],
        upper: upper_all,
        blocked: vec![false; cols],
        d: Vec::new(),
    };
    let limit = 50 * (m + cols) + 1000;

    if n_art > 0 {
        let mut cost = vec![T::zero(); cols];
        for c in &mut cost[n + n_slack..] {
            *c = T::one();
        }
        t.reduced_costs(&cost);
        t.iterate(&cost, opts, limit)?;
        let scale = rows.iter().map(|r| r.rhs.abs()).fold(T::one(), T::max);
        let residual: T = t.basis.iter().zip(&t.value).filter(|(&b, _)| b >= n + n_slack).map(|(_, &v)| v).sum();
        if residual > opts.feas_tol * scale {
            return Ok(infeasible());
        }
        // Drive remaining artificials out of the basis, dropping redundant rows.
        let mut r = 0;
        while r < t.rows {
            if t.basis[r] < n + n_slack {
                r += 1;
                continue;
            }
            let q =
                (0..n + n_slack).filter(|&j| !t.is_basic[j] && t.at(r, j).abs() > T::pivot_tol()).max_by(|&a, &b| {
                    t.at(r, a).abs().partial_cmp(&t.at(r, b).abs()).unwrap_or(std::cmp::Ordering::Equal).then(b.cmp(&a))
                });
            match q {
                Some(q) => {
                    let v = if t.at_upper[q] { t.upper[q] } else { T::zero() };
                    let leaving = t.basis[r];
                    t.at_upper[leaving] = false;
                    t.at_upper[q] = false;
                    t.value[r] = v;
                    t.d = vec![T::zero(); cols];
                    t.pivot(r, q);
                    r += 1;
                }
                None => t.remove_row(r),
            }
        }
        for j in n + n_slack..cols {
            t.blocked[j] = true;
            t.upper[j] = T::zero();
        }
    }

    let mut cost = vec![T::zero(); cols];
    cost[..n].copy_from_slice(&p.c);
    t.reduced_costs(&cost);
    match t.iterate(&cost, opts, limit)? {
        Phase::Unbounded => Ok(LpOutcome { status: Status::Unbounded, x: Vec::new(), objective: -T::infinity() }),
        Phase::Optimal => {
            let y = t.column_values();
            let x: Vec<T> = (0..n).map(|j| lower[j] + y[j]).collect();
            let objective = p.objective(&x);
            Ok(LpOutcome { status: Status::Optimal, x, objective })
        }
    }
}

/// Solves the continuous relaxation, ignoring integrality marks.
pub fn solve_lp<T: Scalar>(p: &LinearProgram<T>, opts: &SolverOptions<T>) -> Result<Solution<T>> {
    p.validate()?;
    if p.num_vars() > opts.max_vars {
        return Err(MilpError::TooLarge(p.num_vars(), opts.max_vars));
    }
    let out = solve_bounded(p, &p.lower, &p.upper, opts)?;
    Ok(match out.status {
        Status::Optimal => Solution { status: Status::Optimal, x: out.x, objective: out.objective, nodes_explored: 0 },
        s => Solution::without_point(s, 0),
    })
}
