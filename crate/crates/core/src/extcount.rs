//! Budgeted bounds on linear-extension counts, in log2 space.
//!
//! Counts of 512-element samples approach 512! (about 2^3875), so everything
//! here works on log2 values: products become sums and the sums of the
//! minimal-element decomposition go through a max-shifted log-sum-exp. The
//! recursion mirrors the decomposition rules: an edgeless set contributes a
//! factorial exactly, a connected graph is decomposed by removing minimal
//! elements, and anything else splits into disjoint blocks combined with a
//! binomial factor. When the budget runs out a node falls back to the naive
//! `[1, n!]` envelope, so bounds degrade instead of failing.
//!
//! Budgets can be wall-clock, recursion-depth, or deterministic work units
//! (recursion entries). Wall-clock runs follow the protocol of timed
//! experiments and may overshoot; work units make reruns byte-identical,
//! which the command-line driver relies on.

use std::collections::HashMap;
use std::sync::RwLock;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::poset::Poset;

#[derive(Debug, Error)]
pub enum ExtCountError {
    #[error("k = {k} exceeds n = {n} in binomial")]
    ChooseOutOfRange { n: u64, k: u64 },

    #[error("log_sum_exp2 of an empty list")]
    EmptySum,
}

// ---------------------------------------------------------------------------
// Double-double helpers for the log-factorial table.
//
// log_choose promises 1e-9 absolute error up to n = 10^6, where log2(n!) is
// around 1.9e7; plain f64 accumulation loses that. Hi/lo pairs keep the
// accumulated error near one ulp of each term instead.
// ---------------------------------------------------------------------------

/// log2(e) split into hi and residual parts.
const LOG2_E_DD: (f64, f64) = (std::f64::consts::LOG2_E, 2.0355273740931033e-17);

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn fast_two_sum(a: f64, b: f64) -> (f64, f64) {
    // Requires |a| >= |b|.
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn dd_add(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    let (s, e) = two_sum(a.0, b.0);
    fast_two_sum(s, e + a.1 + b.1)
}

#[inline]
fn dd_neg(a: (f64, f64)) -> (f64, f64) {
    (-a.0, -a.1)
}

#[inline]
fn dd_mul_f64(a: (f64, f64), x: f64) -> (f64, f64) {
    let p = a.0 * x;
    let e = f64::mul_add(a.0, x, -p) + a.1 * x;
    fast_two_sum(p, e)
}

/// log2(i) as a double-double, from the libm natural log.
#[inline]
fn log2_dd(i: u64) -> (f64, f64) {
    dd_mul_f64(LOG2_E_DD, (i as f64).ln())
}

/// Cumulative log2-factorials, grown on demand. Entry `n` is log2(n!).
static LOG2_FACTORIALS: RwLock<Vec<(f64, f64)>> = RwLock::new(Vec::new());

/// Beyond this the table is not grown and a Stirling fallback applies; the
/// accuracy contract only covers n up to 10^6.
const TABLE_CAP: usize = 1 << 21;

fn log2_factorial_dd(n: usize) -> (f64, f64) {
    if n > TABLE_CAP {
        return (stirling_log2_factorial(n as f64), 0.0);
    }
    {
        let table = LOG2_FACTORIALS.read().expect("factorial table lock");
        if n < table.len() {
            return table[n];
        }
    }
    let mut table = LOG2_FACTORIALS.write().expect("factorial table lock");
    if table.is_empty() {
        table.push((0.0, 0.0)); // 0! = 1
    }
    let target = (n + 1).max(table.len() * 2).min(TABLE_CAP + 1);
    while table.len() < target {
        let i = table.len() as u64;
        let prev = *table.last().expect("nonempty");
        table.push(dd_add(prev, log2_dd(i)));
    }
    table[n]
}

fn stirling_log2_factorial(n: f64) -> f64 {
    if n < 2.0 {
        return 0.0;
    }
    let ln = n * n.ln() - n + 0.5 * (2.0 * std::f64::consts::PI * n).ln() + 1.0 / (12.0 * n)
        - 1.0 / (360.0 * n * n * n);
    ln * std::f64::consts::LOG2_E
}

/// log2(n!).
pub fn log2_factorial(n: usize) -> f64 {
    let (hi, lo) = log2_factorial_dd(n);
    hi + lo
}

/// log2 of the binomial coefficient C(n, k).
pub fn log_choose(n: u64, k: u64) -> Result<f64, ExtCountError> {
    if k > n {
        return Err(ExtCountError::ChooseOutOfRange { n, k });
    }
    let d = dd_add(
        log2_factorial_dd(n as usize),
        dd_neg(dd_add(
            log2_factorial_dd(k as usize),
            log2_factorial_dd((n - k) as usize),
        )),
    );
    Ok(d.0 + d.1)
}

/// log2 of an exact nonnegative integer, from its top mantissa bits.
pub fn log2_biguint(x: &num_bigint::BigUint) -> f64 {
    let bits = x.bits();
    if bits == 0 {
        return f64::NEG_INFINITY;
    }
    if bits <= 53 {
        let v: u64 = x.try_into().expect("fits in u64");
        (v as f64).log2()
    } else {
        let shift = bits - 53;
        let top: u64 = (x >> shift).try_into().expect("53 bits fit");
        (top as f64).log2() + shift as f64
    }
}

/// log2 of a sum of values given in log2 space, max-shifted for stability.
pub fn log_sum_exp2(values: &[f64]) -> Result<f64, ExtCountError> {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if values.is_empty() {
        return Err(ExtCountError::EmptySum);
    }
    if max == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    let sum: f64 = values.iter().map(|&v| (v - max).exp2()).sum();
    Ok(max + sum.log2())
}

// ---------------------------------------------------------------------------
// Budgets
// ---------------------------------------------------------------------------

/// Limits on one bounding run. At least one limit should be finite unless the
/// caller explicitly wants oracle-style exhaustive recursion.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    /// Wall-clock allowance. Checked on every recursive entry; the unwind
    /// after the deadline means real elapsed time will often overshoot.
    pub time_limit: Option<Duration>,
    /// Maximum recursion depth. Alone it fixes a single pass at that depth;
    /// combined with time or work it caps the iterative deepening.
    pub depth_limit: Option<u32>,
    /// Deterministic allowance in recursion entries. Reruns with equal work
    /// budgets produce identical bounds.
    pub work_limit: Option<u64>,
}

impl Budget {
    pub fn unbounded() -> Self {
        Budget {
            time_limit: None,
            depth_limit: None,
            work_limit: None,
        }
    }

    pub fn from_millis(ms: u64) -> Self {
        Budget {
            time_limit: Some(Duration::from_millis(ms)),
            depth_limit: None,
            work_limit: None,
        }
    }

    pub fn depth(depth: u32) -> Self {
        Budget {
            time_limit: None,
            depth_limit: Some(depth),
            work_limit: None,
        }
    }

    pub fn work(units: u64) -> Self {
        Budget {
            time_limit: None,
            depth_limit: None,
            work_limit: Some(units),
        }
    }

    pub fn is_unbounded(&self) -> bool {
        self.time_limit.is_none() && self.depth_limit.is_none() && self.work_limit.is_none()
    }

    /// Budget enlarged by `factor`, for re-estimation passes.
    pub fn scaled(&self, factor: u32) -> Self {
        Budget {
            time_limit: self
                .time_limit
                .map(|t| t.checked_mul(factor).unwrap_or(Duration::MAX)),
            depth_limit: self.depth_limit.map(|d| d.saturating_mul(factor)),
            work_limit: self.work_limit.map(|w| w.saturating_mul(factor as u64)),
        }
    }
}

/// Interval around a linear-extension count, in log2 space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundedCount {
    pub log2_lower: f64,
    pub log2_upper: f64,
    pub exact: bool,
}

impl BoundedCount {
    fn new(log2_lower: f64, log2_upper: f64) -> Self {
        debug_assert!(log2_lower <= log2_upper + 1e-9);
        let log2_lower = log2_lower.min(log2_upper).max(0.0);
        BoundedCount {
            log2_lower,
            log2_upper,
            exact: log2_lower == log2_upper,
        }
    }
}

// ---------------------------------------------------------------------------
// Bounding recursion
// ---------------------------------------------------------------------------

struct BoundCtx {
    und: Vec<Vec<usize>>,
    inn: Vec<Vec<usize>>,
    words: usize,
    deadline: Option<Instant>,
    work_limit: Option<u64>,
    work_used: u64,
    /// Exact sub-results keyed by member bitset; budget-independent, so they
    /// carry across deepening passes.
    memo: HashMap<Box<[u64]>, f64>,
    exhausted: bool,
}

impl BoundCtx {
    fn stopped(&mut self, depth: u32, cap: Option<u32>) -> bool {
        if let Some(cap) = cap {
            if depth >= cap {
                return true;
            }
        }
        if let Some(limit) = self.work_limit {
            if self.work_used > limit {
                self.exhausted = true;
                return true;
            }
        }
        if let Some(deadline) = self.deadline {
            if Instant::now() >= deadline {
                self.exhausted = true;
                return true;
            }
        }
        false
    }

    fn key(&self, members: &[usize]) -> Box<[u64]> {
        let mut words = vec![0u64; self.words];
        for &m in members {
            words[m / 64] |= 1 << (m % 64);
        }
        words.into_boxed_slice()
    }
}

/// Components of the induced undirected subgraph, as sorted member lists
/// ordered by smallest member.
fn subgraph_components(ctx: &BoundCtx, members: &[usize], in_set: &[bool]) -> Vec<Vec<usize>> {
    let mut seen: HashMap<usize, bool> = members.iter().map(|&m| (m, false)).collect();
    let mut components = Vec::new();
    for &start in members {
        if seen[&start] {
            continue;
        }
        let mut stack = vec![start];
        seen.insert(start, true);
        let mut comp = Vec::new();
        while let Some(v) = stack.pop() {
            comp.push(v);
            for &w in &ctx.und[v] {
                if in_set[w] && !seen[&w] {
                    seen.insert(w, true);
                    stack.push(w);
                }
            }
        }
        comp.sort_unstable();
        components.push(comp);
    }
    components
}

fn bounds_rec(
    ctx: &mut BoundCtx,
    members: &[usize],
    in_set: &mut Vec<bool>,
    depth: u32,
    cap: Option<u32>,
) -> (f64, f64) {
    ctx.work_used += 1;

    let key = ctx.key(members);
    if let Some(&exact) = ctx.memo.get(&key) {
        return (exact, exact);
    }

    let components = subgraph_components(ctx, members, in_set);
    let free: Vec<usize> = components
        .iter()
        .filter(|c| c.len() == 1)
        .map(|c| c[0])
        .collect();

    // Edgeless or empty: exact factorial, regardless of remaining budget.
    if free.len() == components.len() {
        let exact = log2_factorial(free.len());
        ctx.memo.insert(key, exact);
        return (exact, exact);
    }

    if ctx.stopped(depth, cap) {
        return (0.0, log2_factorial(members.len()));
    }

    let result = if components.len() == 1 {
        // Connected: sum bounds over minimal-element removals, ascending.
        let minimal: Vec<usize> = members
            .iter()
            .copied()
            .filter(|&v| !ctx.inn[v].iter().any(|&w| in_set[w]))
            .collect();
        let mut lows = Vec::with_capacity(minimal.len());
        let mut ups = Vec::with_capacity(minimal.len());
        for &v in &minimal {
            let rest: Vec<usize> = members.iter().copied().filter(|&m| m != v).collect();
            in_set[v] = false;
            let (l, u) = bounds_rec(ctx, &rest, in_set, depth + 1, cap);
            in_set[v] = true;
            lows.push(l);
            ups.push(u);
        }
        (
            log_sum_exp2(&lows).expect("minimal set nonempty"),
            log_sum_exp2(&ups).expect("minimal set nonempty"),
        )
    } else if !free.is_empty() {
        // Free vertices interleave as one factorial block.
        let k = free.len();
        let rest: Vec<usize> = members
            .iter()
            .copied()
            .filter(|m| !free.contains(m))
            .collect();
        for &v in &free {
            in_set[v] = false;
        }
        let (l2, u2) = bounds_rec(ctx, &rest, in_set, depth + 1, cap);
        for &v in &free {
            in_set[v] = true;
        }
        let c = log_choose(members.len() as u64, k as u64).expect("k <= n");
        let f = log2_factorial(k);
        (c + f + l2, c + f + u2)
    } else {
        // Split off the smallest component; it feeds the binomial factor
        // early while the recursion handles the remainder.
        let block = components
            .iter()
            .min_by_key(|c| (c.len(), c[0]))
            .expect("multiple components")
            .clone();
        let rest: Vec<usize> = members
            .iter()
            .copied()
            .filter(|m| !block.contains(m))
            .collect();
        for &v in &rest {
            in_set[v] = false;
        }
        let (l1, u1) = bounds_rec(ctx, &block, in_set, depth + 1, cap);
        for &v in &rest {
            in_set[v] = true;
        }
        for &v in &block {
            in_set[v] = false;
        }
        let (l2, u2) = bounds_rec(ctx, &rest, in_set, depth + 1, cap);
        for &v in &block {
            in_set[v] = true;
        }
        let c = log_choose(members.len() as u64, block.len() as u64).expect("k <= n");
        (c + l1 + l2, c + u1 + u2)
    };

    if result.0 == result.1 {
        ctx.memo.insert(key, result.0);
    }
    result
}

/// Lower and upper bounds on the number of linear extensions of `p`.
///
/// With an unbounded budget the recursion bottoms out at edgeless graphs and
/// the result is exact. Time- or work-limited budgets run depth-doubling
/// passes and return the tightest interval seen; a pure depth budget runs a
/// single pass at that depth.
pub fn bound_extensions(p: &Poset, budget: &Budget) -> BoundedCount {
    bound_extensions_stats(p, budget).0
}

/// Like [`bound_extensions`], also reporting recursion entries consumed.
/// Work counts are deterministic for depth- and work-limited budgets; the
/// search uses them as a reproducible clock.
pub fn bound_extensions_stats(p: &Poset, budget: &Budget) -> (BoundedCount, u64) {
    let n = p.len();
    let mut und = vec![Vec::new(); n];
    let mut inn = vec![Vec::new(); n];
    for (a, b) in p.edges() {
        und[a].push(b);
        und[b].push(a);
        inn[b].push(a);
    }
    let mut ctx = BoundCtx {
        und,
        inn,
        words: n.div_ceil(64).max(1),
        deadline: budget.time_limit.map(|t| Instant::now() + t),
        work_limit: budget.work_limit,
        work_used: 0,
        memo: HashMap::new(),
        exhausted: false,
    };
    let members: Vec<usize> = (0..n).collect();
    let mut in_set = vec![true; n];

    let deepening = budget.time_limit.is_some() || budget.work_limit.is_some();
    if !deepening {
        // Unbounded, or a fixed depth cap: one pass.
        let (l, u) = bounds_rec(&mut ctx, &members, &mut in_set, 0, budget.depth_limit);
        return (BoundedCount::new(l, u), ctx.work_used);
    }

    let mut best_lo = 0.0f64;
    let mut best_up = log2_factorial(n);
    let max_depth = budget.depth_limit.unwrap_or(u32::MAX).min(n.max(1) as u32);
    let mut cap = 1u32;
    loop {
        let (l, u) = bounds_rec(&mut ctx, &members, &mut in_set, 0, Some(cap));
        if l == u {
            return (BoundedCount::new(l, u), ctx.work_used);
        }
        best_lo = best_lo.max(l).min(best_up);
        best_up = best_up.min(u);
        if ctx.exhausted || cap >= max_depth {
            break;
        }
        cap = cap.saturating_mul(2).min(max_depth);
    }
    (BoundedCount::new(best_lo, best_up), ctx.work_used)
}
