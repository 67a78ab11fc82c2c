//! Dense two-phase simplex over an exact scalar.
//!
//! Solves `min c·x  s.t.  A·x = b, x ≥ 0`. Bland's rule makes the pivot
//! choice anti-cycling without tolerances, which together with exact
//! arithmetic gives deterministic, provably optimal results on the small
//! systems the heuristic produces.

use crate::scalar::CostValue;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LpResult<C> {
    Optimal { objective: C, solution: Vec<C> },
    Infeasible,
    Unbounded,
}

/// Minimizes `costs · x` subject to `rows · x = rhs`, `x ≥ 0`.
pub fn solve_min<C: CostValue>(costs: &[C], rows: &[Vec<C>], rhs: &[C]) -> LpResult<C> {
    let m = rows.len();
    let n = costs.len();
    debug_assert!(rows.iter().all(|r| r.len() == n));
    debug_assert_eq!(rhs.len(), m);
    let width = n + m + 1; // original vars, artificials, rhs

    // Constraint rows with rhs normalized nonnegative and one artificial
    // basic variable per row.
    let mut tab: Vec<Vec<C>> = Vec::with_capacity(m);
    for i in 0..m {
        let flip = rhs[i] < C::zero();
        let mut row: Vec<C> = Vec::with_capacity(width);
        for j in 0..n {
            row.push(if flip {
                -rows[i][j].clone()
            } else {
                rows[i][j].clone()
            });
        }
        for k in 0..m {
            row.push(if k == i { C::one() } else { C::zero() });
        }
        row.push(if flip {
            -rhs[i].clone()
        } else {
            rhs[i].clone()
        });
        tab.push(row);
    }
    let mut basis: Vec<usize> = (n..n + m).collect();

    // Phase 1: minimize the artificial sum. Reduced costs start as the
    // negated column sums; the objective cell holds -(current value).
    let mut obj: Vec<C> = vec![C::zero(); width];
    for row in &tab {
        for j in 0..n {
            obj[j] = obj[j].clone() - row[j].clone();
        }
        obj[width - 1] = obj[width - 1].clone() - row[width - 1].clone();
    }
    if pivot_loop(&mut tab, &mut obj, &mut basis, n + m).is_none() {
        return LpResult::Unbounded; // cannot happen: phase 1 is bounded below
    }
    if -obj[width - 1].clone() > C::zero() {
        return LpResult::Infeasible;
    }
    // Drive leftover artificials out of the basis; drop redundant rows.
    let mut i = 0;
    while i < tab.len() {
        if basis[i] >= n {
            if let Some(j) = (0..n).find(|&j| !tab[i][j].is_zero()) {
                pivot(&mut tab, &mut obj, &mut basis, i, j);
            } else {
                tab.remove(i);
                basis.remove(i);
                continue;
            }
        }
        i += 1;
    }

    // Phase 2: original objective, artificial columns locked out.
    let mut obj: Vec<C> = vec![C::zero(); width];
    for (j, cost) in costs.iter().enumerate() {
        obj[j] = cost.clone();
    }
    for (i, &b) in basis.iter().enumerate() {
        if costs[b].is_zero() {
            continue;
        }
        for j in 0..width {
            obj[j] = obj[j].clone() - costs[b].clone() * tab[i][j].clone();
        }
    }
    if pivot_loop(&mut tab, &mut obj, &mut basis, n).is_none() {
        return LpResult::Unbounded;
    }

    let mut solution = vec![C::zero(); n];
    for (i, &b) in basis.iter().enumerate() {
        if b < n {
            solution[b] = tab[i][width - 1].clone();
        }
    }
    let objective = -obj[width - 1].clone();
    LpResult::Optimal {
        objective,
        solution,
    }
}

/// Bland-rule simplex iterations. Columns `>= allowed` never enter the
/// basis. Returns `None` on an unbounded ray.
fn pivot_loop<C: CostValue>(
    tab: &mut Vec<Vec<C>>,
    obj: &mut Vec<C>,
    basis: &mut Vec<usize>,
    allowed: usize,
) -> Option<()> {
    let width = obj.len();
    loop {
        let entering = (0..allowed).find(|&j| obj[j] < C::zero());
        let Some(col) = entering else { return Some(()) };
        let mut pick: Option<(usize, C)> = None;
        for i in 0..tab.len() {
            if tab[i][col] <= C::zero() {
                continue;
            }
            let ratio = tab[i][width - 1].clone() / tab[i][col].clone();
            let better = match &pick {
                None => true,
                Some((pi, pr)) => ratio < *pr || (ratio == *pr && basis[i] < basis[*pi]),
            };
            if better {
                pick = Some((i, ratio));
            }
        }
        let (row, _) = pick?;
        pivot(tab, obj, basis, row, col);
    }
}

fn pivot<C: CostValue>(
    tab: &mut [Vec<C>],
    obj: &mut [C],
    basis: &mut [usize],
    row: usize,
    col: usize,
) {
    let width = obj.len();
    let p = tab[row][col].clone();
    for j in 0..width {
        tab[row][j] = tab[row][j].clone() / p.clone();
    }
    for i in 0..tab.len() {
        if i == row || tab[i][col].is_zero() {
            continue;
        }
        let factor = tab[i][col].clone();
        for j in 0..width {
            let delta = factor.clone() * tab[row][j].clone();
            tab[i][j] = tab[i][j].clone() - delta;
        }
    }
    if !obj[col].is_zero() {
        let factor = obj[col].clone();
        for j in 0..width {
            let delta = factor.clone() * tab[row][j].clone();
            obj[j] = obj[j].clone() - delta;
        }
    }
    basis[row] = col;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::CostValue;
    use crate::Rational;

    fn r(n: i64) -> Rational {
        Rational::ratio(n, 1)
    }

    #[test]
    fn simple_equality_system() {
        // min x0 + 2 x1  s.t.  x0 + x1 = 4, x0 - x1 = 0  →  x = (2, 2), obj 6
        let res = solve_min(
            &[r(1), r(2)],
            &[vec![r(1), r(1)], vec![r(1), r(-1)]],
            &[r(4), r(0)],
        );
        match res {
            LpResult::Optimal {
                objective,
                solution,
            } => {
                assert_eq!(objective, r(6));
                assert_eq!(solution, vec![r(2), r(2)]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn picks_cheaper_column() {
        // min 3 x0 + x1  s.t.  x0 + x1 = 5 → all weight on x1.
        let res = solve_min(&[r(3), r(1)], &[vec![r(1), r(1)]], &[r(5)]);
        match res {
            LpResult::Optimal {
                objective,
                solution,
            } => {
                assert_eq!(objective, r(5));
                assert_eq!(solution, vec![r(0), r(5)]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn detects_infeasibility() {
        // x0 = 1 and x0 = 2 cannot both hold.
        let res = solve_min(&[r(1)], &[vec![r(1)], vec![r(1)]], &[r(1), r(2)]);
        assert_eq!(res, LpResult::Infeasible);
        // x0 + x1 = -1 has no nonnegative solution.
        let res = solve_min(&[r(1), r(1)], &[vec![r(1), r(1)]], &[r(-1)]);
        assert_eq!(res, LpResult::Infeasible);
    }

    #[test]
    fn handles_redundant_rows() {
        // Duplicate constraint rows must not confuse phase 2.
        let res = solve_min(
            &[r(2), r(1)],
            &[vec![r(1), r(1)], vec![r(1), r(1)]],
            &[r(3), r(3)],
        );
        match res {
            LpResult::Optimal { objective, .. } => assert_eq!(objective, r(3)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn exact_fractional_optimum() {
        // min x0  s.t.  3 x0 = 1  →  x0 = 1/3.
        let res = solve_min(&[r(1)], &[vec![r(3)]], &[r(1)]);
        match res {
            LpResult::Optimal { objective, .. } => {
                assert_eq!(objective, Rational::ratio(1, 3));
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
