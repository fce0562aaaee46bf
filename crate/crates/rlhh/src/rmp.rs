//! Restricted master problem in set-covering form over the current column
//! pool: LP relaxation by dense revised simplex, integer RMP by
//! branch-and-bound on the pool columns.

use std::collections::HashSet;
use std::time::{Duration, Instant};

use crate::labeling::Column;
use crate::net::PricingNetwork;
use crate::{Error, Result};

pub const FEAS_TOL: f64 = 1e-7;
pub const OPT_TOL: f64 = 1e-6;
const BIG_M: f64 = 1e7;
const BLAND_AFTER_DEGENERATE: usize = 500;

/// Insertion-ordered column pool with a duplicate filter keyed on the
/// covering set and the cost rounded at 1e-9.
#[derive(Debug, Clone)]
pub struct ColumnPool {
    pub num_rows: usize,
    pub columns: Vec<Column>,
    keys: HashSet<(Vec<u64>, i64)>,
}

fn column_key(col: &Column, num_rows: usize) -> (Vec<u64>, i64) {
    let mut bits = vec![0u64; num_rows.div_ceil(64)];
    for &v in &col.covered {
        bits[v / 64] |= 1 << (v % 64);
    }
    (bits, (col.cost / 1e-9).round() as i64)
}

impl ColumnPool {
    pub fn new(num_rows: usize) -> Self {
        ColumnPool {
            num_rows,
            columns: Vec::new(),
            keys: HashSet::new(),
        }
    }

    /// Append a column unless an identical (cover, cost) one is stored.
    pub fn add_column(&mut self, col: Column) -> Result<bool> {
        if col.covered.iter().any(|&v| v >= self.num_rows) {
            return Err(Error::InvalidArgument(
                "column covers a row outside the master problem".into(),
            ));
        }
        let key = column_key(&col, self.num_rows);
        if !self.keys.insert(key) {
            return Ok(false);
        }
        self.columns.push(col);
        Ok(true)
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }
}

/// One singleton column (source→v→sink) per customer/trip. Errors when some
/// task has no resource-feasible singleton route.
pub fn init_pool(net: &PricingNetwork) -> Result<ColumnPool> {
    let mut pool = ColumnPool::new(net.num_tasks);
    let zero: Vec<f64> = vec![0.0; net.num_tasks];
    let costs = net.modified_costs(&zero)?;
    for v in 0..net.num_tasks {
        let se = net
            .out_edges(net.source())
            .iter()
            .copied()
            .find(|&e| net.edges[e].head == v);
        let te = net
            .out_edges(v)
            .iter()
            .copied()
            .find(|&e| net.edges[e].head == net.sink());
        let (se, te) = match (se, te) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                return Err(Error::Infeasible(format!(
                    "task {v} lacks source or sink edge"
                )))
            }
        };
        if !singleton_feasible(net, se, te) {
            return Err(Error::Infeasible(format!(
                "task {v} has no feasible singleton route"
            )));
        }
        let col = Column {
            edges: vec![se, te],
            covered: vec![v],
            cost: costs[se] + costs[te],
            reduced_cost: 0.0,
        };
        pool.add_column(col)?;
    }
    Ok(pool)
}

fn singleton_feasible(net: &PricingNetwork, se: usize, te: usize) -> bool {
    let source = net.source();
    for r in 0..net.resources.len() {
        let mut t = net.windows[source][r].0;
        for (&ei, node) in [(&se, net.edges[se].head), (&te, net.edges[te].head)]
            .iter()
            .map(|(e, n)| (*e, *n))
        {
            t = (t + net.edges[ei].consumption[r]).max(net.windows[node][r].0);
            if t > net.windows[node][r].1 + 1e-9 {
                return false;
            }
        }
    }
    true
}

/// LP solution of the covering master over the pool.
#[derive(Debug, Clone)]
pub struct RmpState {
    /// Primal value per pool column (insertion order).
    pub primal: Vec<f64>,
    /// Covering-constraint duals, one per customer/trip.
    pub duals: Vec<f64>,
    pub objective: f64,
    /// Variable indices in the final basis (columns < pool size, then
    /// surplus, then artificials).
    pub basis: Vec<usize>,
    pub iterations: usize,
}

/// Solve min c x s.t. A x ≥ 1, x ≥ 0 over the pool columns.
pub fn solve_lp(pool: &ColumnPool) -> Result<RmpState> {
    let excluded = vec![false; pool.len()];
    let active = vec![true; pool.num_rows];
    solve_lp_subset(pool, &excluded, &active)
}

/// LP over a subset: `excluded` drops columns, `active_rows` keeps only the
/// still-uncovered covering constraints (branch-and-bound nodes fix columns
/// to one and delete the rows they cover).
pub fn solve_lp_subset(
    pool: &ColumnPool,
    excluded: &[bool],
    active_rows: &[bool],
) -> Result<RmpState> {
    let row_index: Vec<Option<usize>> = {
        let mut next = 0;
        active_rows
            .iter()
            .map(|&a| {
                if a {
                    let i = next;
                    next += 1;
                    Some(i)
                } else {
                    None
                }
            })
            .collect()
    };
    let m = row_index.iter().flatten().count();
    if m == 0 {
        return Ok(RmpState {
            primal: vec![0.0; pool.len()],
            duals: vec![0.0; pool.num_rows],
            objective: 0.0,
            basis: Vec::new(),
            iterations: 0,
        });
    }

    // Variable layout: pool columns, then m surplus, then m artificials.
    let n_cols = pool.len();
    let num_vars = n_cols + 2 * m;
    let col_rows: Vec<Vec<usize>> = pool
        .columns
        .iter()
        .map(|c| {
            c.covered
                .iter()
                .filter_map(|&v| row_index[v])
                .collect::<Vec<usize>>()
        })
        .collect();
    let cost = |j: usize| -> f64 {
        if j < n_cols {
            pool.columns[j].cost
        } else if j < n_cols + m {
            0.0
        } else {
            BIG_M
        }
    };

    // Dense column of variable j in row space.
    let fill_column = |j: usize, out: &mut [f64]| {
        out.iter_mut().for_each(|x| *x = 0.0);
        if j < n_cols {
            for &r in &col_rows[j] {
                out[r] = 1.0;
            }
        } else if j < n_cols + m {
            out[j - n_cols] = -1.0;
        } else {
            out[j - n_cols - m] = 1.0;
        }
    };

    let mut basis: Vec<usize> = (n_cols + m..n_cols + 2 * m).collect();
    let mut in_basis = vec![false; num_vars];
    for &b in &basis {
        in_basis[b] = true;
    }
    let mut binv = identity(m);
    let mut scratch = vec![0.0; m];
    let mut degenerate = 0usize;
    let mut iterations = 0usize;
    let max_iterations = 200 * (num_vars + m) + 5000;

    loop {
        iterations += 1;
        if iterations > max_iterations {
            return Err(Error::Lp(format!(
                "simplex exceeded {max_iterations} iterations"
            )));
        }
        // x_B = B⁻¹ b with b = 1.
        let xb: Vec<f64> = binv.iter().map(|row| row.iter().sum()).collect();
        // π = c_B B⁻¹.
        let mut pi = vec![0.0; m];
        for (i, &bj) in basis.iter().enumerate() {
            let cb = cost(bj);
            if cb != 0.0 {
                for r in 0..m {
                    pi[r] += cb * binv[i][r];
                }
            }
        }

        let reduced = |j: usize| -> f64 {
            if j < n_cols {
                cost(j) - col_rows[j].iter().map(|&r| pi[r]).sum::<f64>()
            } else if j < n_cols + m {
                pi[j - n_cols]
            } else {
                BIG_M - pi[j - n_cols - m]
            }
        };

        let bland = degenerate >= BLAND_AFTER_DEGENERATE;
        let mut entering: Option<(usize, f64)> = None;
        for j in 0..num_vars {
            if in_basis[j] || (j < n_cols && excluded[j]) {
                continue;
            }
            let d = reduced(j);
            if d < -OPT_TOL {
                if bland {
                    entering = Some((j, d));
                    break;
                }
                match entering {
                    Some((_, best)) if d >= best => {}
                    _ => entering = Some((j, d)),
                }
            }
        }

        let Some((enter, _)) = entering else {
            // Optimal; artificial variables must be out (or zero).
            for (i, &bj) in basis.iter().enumerate() {
                if bj >= n_cols + m && xb[i] > FEAS_TOL {
                    return Err(Error::Lp("master LP infeasible".into()));
                }
            }
            let mut primal = vec![0.0; n_cols];
            let mut objective = 0.0;
            for (i, &bj) in basis.iter().enumerate() {
                let v = xb[i].max(0.0);
                objective += cost(bj) * v;
                if bj < n_cols {
                    primal[bj] = v;
                }
            }
            let mut duals = vec![0.0; pool.num_rows];
            for (v, ri) in row_index.iter().enumerate() {
                if let Some(r) = ri {
                    duals[v] = pi[*r];
                }
            }
            return Ok(RmpState {
                primal,
                duals,
                objective,
                basis,
                iterations,
            });
        };

        fill_column(enter, &mut scratch);
        // w = B⁻¹ a_enter.
        let w: Vec<f64> = binv
            .iter()
            .map(|row| row.iter().zip(&scratch).map(|(a, b)| a * b).sum())
            .collect();

        let mut leave: Option<(usize, f64)> = None;
        for i in 0..m {
            if w[i] > FEAS_TOL {
                let ratio = xb[i] / w[i];
                match leave {
                    Some((li, best))
                        if ratio > best + 1e-12
                            || (ratio > best - 1e-12 && basis[i] >= basis[li]) => {}
                    _ => leave = Some((i, ratio)),
                }
            }
        }
        let Some((leave_row, theta)) = leave else {
            return Err(Error::Lp("master LP unbounded".into()));
        };
        if theta < 1e-10 {
            degenerate += 1;
        } else {
            degenerate = 0;
        }

        // Eta update of B⁻¹.
        let pivot = w[leave_row];
        for r in 0..m {
            binv[leave_row][r] /= pivot;
        }
        for i in 0..m {
            if i != leave_row && w[i] != 0.0 {
                let factor = w[i];
                for r in 0..m {
                    binv[i][r] -= factor * binv[leave_row][r];
                }
            }
        }
        in_basis[basis[leave_row]] = false;
        in_basis[enter] = true;
        basis[leave_row] = enter;
    }
}

fn identity(m: usize) -> Vec<Vec<f64>> {
    let mut out = vec![vec![0.0; m]; m];
    for (i, row) in out.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    out
}

#[derive(Debug, Clone)]
pub struct IrmpResult {
    pub objective: f64,
    /// Pool indices of the selected columns.
    pub selected: Vec<usize>,
    /// True iff the branch-and-bound tree was exhausted.
    pub optimal: bool,
}

struct BbNode {
    excluded: Vec<bool>,
    fixed_one: Vec<usize>,
    bound: f64,
}

/// Branch-and-bound over x_p ∈ {0,1}: branch on the most fractional column,
/// depth-first with a best-bound re-sort of the open list every 10,000 nodes.
pub fn solve_irmp(pool: &ColumnPool, time_limit: Duration) -> Result<IrmpResult> {
    let start = Instant::now();
    let num_rows = pool.num_rows;

    // The singleton columns are always a feasible integral fallback.
    let mut incumbent_cols: Vec<usize> = singleton_cover(pool)?;
    let mut incumbent_obj: f64 = incumbent_cols.iter().map(|&j| pool.columns[j].cost).sum();

    let mut open = vec![BbNode {
        excluded: vec![false; pool.len()],
        fixed_one: Vec::new(),
        bound: f64::NEG_INFINITY,
    }];
    let mut optimal = true;
    let mut nodes = 0usize;

    while let Some(node) = open.pop() {
        nodes += 1;
        if start.elapsed() > time_limit {
            optimal = false;
            break;
        }
        if nodes % 10_000 == 0 {
            // Best-bound restart: put the most promising node on top.
            open.sort_by(|a, b| b.bound.total_cmp(&a.bound));
        }
        if node.bound >= incumbent_obj - 1e-9 {
            continue;
        }
        let mut active = vec![true; num_rows];
        let mut fixed_cost = 0.0;
        for &j in &node.fixed_one {
            fixed_cost += pool.columns[j].cost;
            for &v in &pool.columns[j].covered {
                active[v] = false;
            }
        }
        let lp = match solve_lp_subset(pool, &node.excluded, &active) {
            Ok(lp) => lp,
            Err(Error::Lp(_)) => continue, // infeasible node
            Err(e) => return Err(e),
        };
        let bound = fixed_cost + lp.objective;
        if bound >= incumbent_obj - 1e-9 {
            continue;
        }
        // Most fractional variable.
        let frac = lp
            .primal
            .iter()
            .enumerate()
            .filter(|(_, &x)| x > OPT_TOL && x < 1.0 - OPT_TOL)
            .max_by(|(_, a), (_, b)| {
                let fa = a.min(1.0 - **a);
                let fb = b.min(1.0 - **b);
                fa.total_cmp(&fb)
            })
            .map(|(j, _)| j);
        match frac {
            None => {
                // Integral: round and record.
                let mut cols = node.fixed_one.clone();
                for (j, &x) in lp.primal.iter().enumerate() {
                    if x > 0.5 {
                        cols.push(j);
                    }
                }
                let obj: f64 = cols.iter().map(|&j| pool.columns[j].cost).sum();
                if obj < incumbent_obj {
                    incumbent_obj = obj;
                    incumbent_cols = cols;
                }
            }
            Some(j) => {
                let mut zero = BbNode {
                    excluded: node.excluded.clone(),
                    fixed_one: node.fixed_one.clone(),
                    bound,
                };
                zero.excluded[j] = true;
                let mut one = BbNode {
                    excluded: node.excluded,
                    fixed_one: node.fixed_one,
                    bound,
                };
                one.excluded[j] = true; // fixed, no longer a free variable
                one.fixed_one.push(j);
                open.push(zero);
                open.push(one); // dive on the x = 1 branch first
            }
        }
    }
    if !open.is_empty() {
        optimal = false;
    }
    incumbent_cols.sort_unstable();
    Ok(IrmpResult {
        objective: incumbent_obj,
        selected: incumbent_cols,
        optimal,
    })
}

fn singleton_cover(pool: &ColumnPool) -> Result<Vec<usize>> {
    let mut chosen = vec![None; pool.num_rows];
    for (j, col) in pool.columns.iter().enumerate() {
        if col.covered.len() == 1 && chosen[col.covered[0]].is_none() {
            chosen[col.covered[0]] = Some(j);
        }
    }
    chosen
        .into_iter()
        .enumerate()
        .map(|(v, j)| {
            j.ok_or_else(|| Error::Infeasible(format!("no singleton column for row {v}")))
        })
        .collect()
}
