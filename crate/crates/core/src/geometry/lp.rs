//! Dense two-phase simplex for the small LPs geometry needs:
//! feasibility, support functions, Chebyshev centers, redundancy tests.
//!
//! Problems here have a handful of free variables and at most a few dozen
//! constraints, so a plain dense tableau with Bland's rule (no cycling)
//! is the right tool. Free variables are split x = x+ - x-.

const PIVOT_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub enum LpResult {
    Optimal { x: Vec<f64>, value: f64 },
    Infeasible,
    Unbounded,
}

/// Maximize `objective . x` subject to `normal . x <= offset` for every
/// constraint, x free.
pub fn solve_lp(objective: &[f64], constraints: &[(Vec<f64>, f64)]) -> LpResult {
    let n = objective.len();
    let m = constraints.len();
    // columns: x+ (n), x- (n), slack (m), artificial (added below)
    let base_cols = 2 * n + m;
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut basis: Vec<usize> = Vec::with_capacity(m);
    let mut artificial_cols: Vec<usize> = Vec::new();
    let mut n_art = 0usize;

    for (i, (normal, offset)) in constraints.iter().enumerate() {
        debug_assert_eq!(normal.len(), n);
        let flip = *offset < 0.0;
        let s = if flip { -1.0 } else { 1.0 };
        let mut row = vec![0.0; base_cols + 1];
        for j in 0..n {
            row[j] = s * normal[j];
            row[n + j] = -s * normal[j];
        }
        row[2 * n + i] = s; // slack
        row[base_cols] = s * *offset;
        if flip {
            artificial_cols.push(base_cols + n_art);
            n_art += 1;
        }
        rows.push(row);
        basis.push(0); // fixed below
    }

    let ncols = base_cols + n_art;
    // widen rows for artificials and set the starting basis
    let mut art_iter = artificial_cols.iter();
    let mut next_art: Option<usize> = art_iter.next().copied();
    for (i, row) in rows.iter_mut().enumerate() {
        let rhs = row[base_cols];
        row.truncate(base_cols);
        row.resize(ncols, 0.0);
        row.push(rhs);
        let flipped = row[2 * n + i] < 0.0;
        if flipped {
            let a = next_art.expect("artificial bookkeeping");
            next_art = art_iter.next().copied();
            row[a] = 1.0;
            basis[i] = a;
        } else {
            basis[i] = 2 * n + i;
        }
    }

    let is_artificial = |j: usize| j >= base_cols;

    if n_art > 0 {
        // phase 1: maximize -sum(artificials)
        let mut c1 = vec![0.0; ncols];
        for j in base_cols..ncols {
            c1[j] = -1.0;
        }
        let mut r = price_out(&rows, &basis, &c1, ncols);
        if !iterate(&mut rows, &mut basis, &mut r, ncols, |_| true) {
            // phase 1 is bounded by 0; unboundedness signals numerical trouble
            return LpResult::Infeasible;
        }
        let value = -r[ncols];
        if value < -FEAS_TOL {
            return LpResult::Infeasible;
        }
        // drive leftover artificials out of the basis, dropping redundant rows
        let mut i = 0;
        while i < rows.len() {
            if is_artificial(basis[i]) {
                let pivot_col = (0..base_cols).find(|&j| rows[i][j].abs() > PIVOT_TOL);
                match pivot_col {
                    Some(j) => {
                        pivot(&mut rows, &mut vec![0.0; ncols + 1], i, j);
                        basis[i] = j;
                        i += 1;
                    }
                    None => {
                        rows.remove(i);
                        basis.remove(i);
                    }
                }
            } else {
                i += 1;
            }
        }
    }

    // phase 2
    let mut c2 = vec![0.0; ncols];
    for j in 0..n {
        c2[j] = objective[j];
        c2[n + j] = -objective[j];
    }
    let mut r = price_out(&rows, &basis, &c2, ncols);
    if !iterate(&mut rows, &mut basis, &mut r, ncols, |j| !is_artificial(j)) {
        return LpResult::Unbounded;
    }

    let mut y = vec![0.0; ncols];
    for (i, &b) in basis.iter().enumerate() {
        y[b] = rows[i][ncols];
    }
    let x: Vec<f64> = (0..n).map(|j| y[j] - y[n + j]).collect();
    LpResult::Optimal { x, value: -r[ncols] }
}

fn price_out(rows: &[Vec<f64>], basis: &[usize], c: &[f64], ncols: usize) -> Vec<f64> {
    let mut r = vec![0.0; ncols + 1];
    r[..ncols].copy_from_slice(c);
    for (i, &b) in basis.iter().enumerate() {
        let cb = c[b];
        if cb != 0.0 {
            for j in 0..=ncols {
                r[j] -= cb * rows[i][j];
            }
        }
    }
    r
}

/// Simplex iterations with Bland's rule. Returns false on unboundedness.
fn iterate(
    rows: &mut [Vec<f64>],
    basis: &mut [usize],
    r: &mut [f64],
    ncols: usize,
    allowed: impl Fn(usize) -> bool,
) -> bool {
    loop {
        let enter = (0..ncols).find(|&j| allowed(j) && r[j] > PIVOT_TOL);
        let enter = match enter {
            Some(j) => j,
            None => return true,
        };
        let mut leave: Option<usize> = None;
        let mut best_ratio = f64::INFINITY;
        for (i, row) in rows.iter().enumerate() {
            if row[enter] > PIVOT_TOL {
                let ratio = row[ncols] / row[enter];
                let better = ratio < best_ratio - PIVOT_TOL
                    || (ratio < best_ratio + PIVOT_TOL
                        && leave.map(|l| basis[i] < basis[l]).unwrap_or(true));
                if better {
                    best_ratio = ratio;
                    leave = Some(i);
                }
            }
        }
        let leave = match leave {
            Some(i) => i,
            None => return false,
        };
        pivot_full(rows, r, leave, enter);
        basis[leave] = enter;
    }
}

fn pivot_full(rows: &mut [Vec<f64>], r: &mut [f64], leave: usize, enter: usize) {
    let ncols = r.len() - 1;
    let piv = rows[leave][enter];
    for j in 0..=ncols {
        rows[leave][j] /= piv;
    }
    let leave_row = rows[leave].clone();
    for (i, row) in rows.iter_mut().enumerate() {
        if i != leave && row[enter].abs() > 0.0 {
            let f = row[enter];
            for j in 0..=ncols {
                row[j] -= f * leave_row[j];
            }
        }
    }
    let f = r[enter];
    if f.abs() > 0.0 {
        for j in 0..=ncols {
            r[j] -= f * leave_row[j];
        }
    }
}

fn pivot(rows: &mut Vec<Vec<f64>>, scratch: &mut Vec<f64>, leave: usize, enter: usize) {
    let _ = &scratch;
    let ncols = rows[0].len() - 1;
    let piv = rows[leave][enter];
    for j in 0..=ncols {
        rows[leave][j] /= piv;
    }
    let leave_row = rows[leave].clone();
    for (i, row) in rows.iter_mut().enumerate() {
        if i != leave {
            let f = row[enter];
            if f.abs() > 0.0 {
                for j in 0..=ncols {
                    row[j] -= f * leave_row[j];
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(v: &[f64], b: f64) -> (Vec<f64>, f64) {
        (v.to_vec(), b)
    }

    #[test]
    fn one_dimensional() {
        let r = solve_lp(&[1.0], &[c(&[1.0], 3.0), c(&[-1.0], 0.0)]);
        match r {
            LpResult::Optimal { x, value } => {
                assert_relative_eq!(x[0], 3.0, epsilon = 1e-9);
                assert_relative_eq!(value, 3.0, epsilon = 1e-9);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unit_square_corner() {
        let cons = vec![
            c(&[1.0, 0.0], 1.0),
            c(&[-1.0, 0.0], 0.0),
            c(&[0.0, 1.0], 1.0),
            c(&[0.0, -1.0], 0.0),
        ];
        match solve_lp(&[1.0, 1.0], &cons) {
            LpResult::Optimal { value, .. } => assert_relative_eq!(value, 2.0, epsilon = 1e-9),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn detects_infeasible() {
        let r = solve_lp(&[1.0], &[c(&[1.0], -1.0), c(&[-1.0], 0.0)]);
        assert_eq!(r, LpResult::Infeasible);
    }

    #[test]
    fn detects_unbounded() {
        let r = solve_lp(&[1.0], &[c(&[-1.0], 0.0)]);
        assert_eq!(r, LpResult::Unbounded);
    }

    #[test]
    fn chebyshev_of_square() {
        // vars (x, y, r): maximize r st x + r <= 1, -x + r <= 0, y + r <= 1, -y + r <= 0
        let cons = vec![
            c(&[1.0, 0.0, 1.0], 1.0),
            c(&[-1.0, 0.0, 1.0], 0.0),
            c(&[0.0, 1.0, 1.0], 1.0),
            c(&[0.0, -1.0, 1.0], 0.0),
        ];
        match solve_lp(&[0.0, 0.0, 1.0], &cons) {
            LpResult::Optimal { x, value } => {
                assert_relative_eq!(value, 0.5, epsilon = 1e-9);
                assert_relative_eq!(x[0], 0.5, epsilon = 1e-9);
                assert_relative_eq!(x[1], 0.5, epsilon = 1e-9);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn negative_offsets_need_phase_one() {
        // feasible region x in [2, 3]: -x <= -2 forces phase 1
        let r = solve_lp(&[-1.0], &[c(&[1.0], 3.0), c(&[-1.0], -2.0)]);
        match r {
            LpResult::Optimal { x, value } => {
                assert_relative_eq!(x[0], 2.0, epsilon = 1e-9);
                assert_relative_eq!(value, -2.0, epsilon = 1e-9);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn redundant_equality_like_rows() {
        // x <= 1, -x <= -1 pins x = 1 exactly
        let r = solve_lp(&[1.0], &[c(&[1.0], 1.0), c(&[-1.0], -1.0)]);
        match r {
            LpResult::Optimal { x, .. } => assert_relative_eq!(x[0], 1.0, epsilon = 1e-9),
            other => panic!("{other:?}"),
        }
    }
}
