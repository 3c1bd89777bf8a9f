//! Best-first branch and bound over the simplex relaxation.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{MilpError, Result};
use crate::problem::{LinearProgram, Solution, SolverOptions, Status};
use crate::scalar::Scalar;
use crate::simplex::solve_bounded;

struct Node<T> {
    bound: T,
    id: usize,
    lower: Vec<T>,
    upper: Vec<T>,
}

// Min-heap order on (bound, id).
impl<T: Scalar> Ord for Node<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        other.bound.partial_cmp(&self.bound).unwrap_or(Ordering::Equal).then_with(|| other.id.cmp(&self.id))
    }
}
impl<T: Scalar> PartialOrd for Node<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: Scalar> PartialEq for Node<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<T: Scalar> Eq for Node<T> {}

struct Search<'a, T> {
    p: &'a LinearProgram<T>,
    opts: &'a SolverOptions<T>,
    granularity: Option<T>,
    best: Option<(T, Vec<T>)>,
    nodes: usize,
}

impl<T: Scalar> Search<'_, T> {
    /// Most fractional integer variable, lowest index on ties.
    fn branch_var(&self, x: &[T]) -> Option<usize> {
        let half = T::of(0.5);
        let mut pick: Option<(usize, T)> = None;
        for (j, &v) in x.iter().enumerate() {
            if !self.p.kinds[j].is_integral() {
                continue;
            }
            let f = v - v.floor();
            let dist = f.min(T::one() - f);
            if dist > self.opts.int_tol && pick.is_none_or(|(_, d)| dist > d) {
                pick = Some((j, dist));
                if dist >= half {
                    break;
                }
            }
        }
        pick.map(|(j, _)| j)
    }

    /// Tightens an LP bound using the known spacing of integral objective values.
    fn effective_bound(&self, obj: T) -> T {
        match self.granularity {
            Some(g) => ((obj - self.opts.feas_tol) / g).ceil() * g,
            None => obj,
        }
    }

    fn prunable(&self, bound: T) -> bool {
        match &self.best {
            Some((inc, _)) => bound >= *inc - self.opts.feas_tol,
            None => false,
        }
    }

    fn offer(&mut self, x: &[T]) {
        self.offer_rounded(x, T::round);
    }

    /// Rounding heuristics on an LP point: nearest, then upward.
    fn try_round(&mut self, x: &[T]) {
        self.offer_rounded(x, T::round);
        self.offer_rounded(x, |v| (v - self.opts.int_tol).ceil());
    }

    fn offer_rounded(&mut self, x: &[T], f: impl Fn(T) -> T) {
        let mut xr = x.to_vec();
        for (j, v) in xr.iter_mut().enumerate() {
            if self.p.kinds[j].is_integral() {
                *v = f(*v).max(self.p.lower[j]).min(self.p.upper[j]);
            }
        }
        if self.p.max_violation(&xr) > self.opts.feas_tol {
            return;
        }
        let obj = self.p.objective(&xr);
        if self.best.as_ref().is_none_or(|(b, _)| obj < *b - self.opts.feas_tol) {
            self.best = Some((obj, xr));
        }
    }

    fn solve(&mut self, lower: &[T], upper: &[T]) -> Result<Option<(T, Vec<T>)>> {
        let out = solve_bounded(self.p, lower, upper, self.opts)?;
        Ok(match out.status {
            Status::Optimal => Some((out.objective, out.x)),
            _ => None,
        })
    }

    /// Fractional integer variable closest to its ceiling, lowest index on ties.
    fn dive_var(&self, x: &[T]) -> Option<usize> {
        let mut pick: Option<(usize, T)> = None;
        for (j, &v) in x.iter().enumerate() {
            if !self.p.kinds[j].is_integral() {
                continue;
            }
            let f = v - v.floor();
            if f > self.opts.int_tol && f < T::one() - self.opts.int_tol && pick.is_none_or(|(_, g)| f < g) {
                pick = Some((j, f));
            }
        }
        pick.map(|(j, _)| j)
    }

    /// Depth-first plunge that rounds up the variable nearest its ceiling,
    /// falling back to rounding down once if that is infeasible.
    fn dive(&mut self, mut lower: Vec<T>, mut upper: Vec<T>, mut x: Vec<T>) -> Result<()> {
        while self.nodes < self.opts.node_limit {
            let Some(j) = self.dive_var(&x) else {
                self.offer(&x);
                return Ok(());
            };
            let v = x[j];
            self.try_round(&x);
            let mut next = None;
            for up in [false, true] {
                let (mut lo, mut hi) = (lower.clone(), upper.clone());
                if up {
                    lo[j] = v.ceil();
                } else {
                    hi[j] = v.floor();
                }
                self.nodes += 1;
                if let Some((obj, xs)) = self.solve(&lo, &hi)? {
                    if !self.prunable(self.effective_bound(obj)) {
                        next = Some((lo, hi, xs));
                        break;
                    }
                }
            }
            match next {
                Some((lo, hi, xs)) => {
                    lower = lo;
                    upper = hi;
                    x = xs;
                }
                None => return Ok(()),
            }
        }
        Ok(())
    }
}

/// Objective spacing when every objective term is an integer variable with
/// a coefficient on a common grid, used to round bounds up.
fn objective_granularity<T: Scalar>(p: &LinearProgram<T>) -> Option<T> {
    let mut g: Option<T> = None;
    for (j, &c) in p.c.iter().enumerate() {
        if c == T::zero() {
            continue;
        }
        if !p.kinds[j].is_integral() {
            return None;
        }
        // Accept coefficients on a grid of 1/k for small k.
        let (k, _) = (1..=8u32)
            .map(|k| {
                let s = c.abs() * T::of(k as f64);
                (k, s)
            })
            .find(|(_, s)| (*s - s.round()).abs() < T::of(1e-9) * s.abs().max(T::one()))?;
        let step = T::one() / T::of(k as f64);
        g = Some(match g {
            None => step,
            Some(h) => h.min(step),
        });
    }
    // Mixed grids (1/2 and 1/3) need the finer common step; keep it simple
    // and only trust the result when every coefficient is a multiple of it.
    let g = g?;
    p.c.iter()
        .all(|&c| {
            let s = c / g;
            (s - s.round()).abs() < T::of(1e-9) * s.abs().max(T::one())
        })
        .then_some(g)
}

/// Solves `p` honoring integrality marks.
pub fn solve_mip<T: Scalar>(p: &LinearProgram<T>, opts: &SolverOptions<T>) -> Result<Solution<T>> {
    p.validate()?;
    let n = p.num_vars();
    if n > opts.max_vars {
        return Err(MilpError::TooLarge(n, opts.max_vars));
    }
    let mut lower = p.lower.clone();
    let mut upper = p.upper.clone();
    for j in 0..n {
        if p.kinds[j].is_integral() {
            lower[j] = (lower[j] - opts.int_tol).ceil();
            upper[j] = (upper[j] + opts.int_tol).floor();
            if lower[j] > upper[j] {
                return Ok(Solution::without_point(Status::Infeasible, 0));
            }
        }
    }

    let mut s = Search { p, opts, granularity: objective_granularity(p), best: None, nodes: 0 };
    if let Some(x0) = opts.start.as_ref().filter(|x0| x0.len() == n) {
        s.offer(x0);
    }
    let root = solve_bounded(p, &lower, &upper, opts)?;
    match root.status {
        Status::Optimal => {}
        status => return Ok(Solution::without_point(status, 0)),
    }
    s.try_round(&root.x);
    if s.branch_var(&root.x).is_none() {
        s.offer(&root.x);
        if let Some((obj, x)) = s.best {
            return Ok(Solution { status: Status::Optimal, x, objective: obj, nodes_explored: 0 });
        }
    } else if opts.dive {
        s.dive(lower.clone(), upper.clone(), root.x.clone())?;
    }

    let mut heap = BinaryHeap::new();
    let mut next_id = 0usize;
    heap.push(Node { bound: s.effective_bound(root.objective), id: next_id, lower, upper });
    let mut first = true;
    let mut hit_limit = false;
    while let Some(node) = heap.pop() {
        if s.prunable(node.bound) {
            continue;
        }
        let (obj, x) = if first {
            first = false;
            (root.objective, root.x.clone())
        } else {
            if s.nodes >= opts.node_limit {
                hit_limit = true;
                break;
            }
            s.nodes += 1;
            match s.solve(&node.lower, &node.upper)? {
                Some(r) => r,
                None => continue,
            }
        };
        let bound = s.effective_bound(obj);
        if s.prunable(bound) {
            continue;
        }
        let Some(j) = s.branch_var(&x) else {
            s.offer(&x);
            continue;
        };
        s.try_round(&x);
        let v = x[j];
        let mut down_hi = node.upper.clone();
        down_hi[j] = v.floor();
        let mut up_lo = node.lower.clone();
        up_lo[j] = v.ceil();
        next_id += 1;
        heap.push(Node { bound, id: next_id, lower: node.lower.clone(), upper: down_hi });
        next_id += 1;
        heap.push(Node { bound, id: next_id, lower: up_lo, upper: node.upper });
    }

    Ok(match (s.best, hit_limit) {
        (Some((obj, x)), false) => Solution { status: Status::Optimal, x, objective: obj, nodes_explored: s.nodes },
        (Some((obj, x)), true) => Solution { status: Status::NodeLimit, x, objective: obj, nodes_explored: s.nodes },
        (None, true) => Solution::without_point(Status::NodeLimit, s.nodes),
        (None, false) => Solution::without_point(Status::Infeasible, s.nodes),
    })
}
