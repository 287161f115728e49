//! Exact two-phase simplex with Bland's anti-cycling rule.
//!
//! Every inf/sup over a polyhedral ball in this crate is an LP solved here,
//! so the solver never rounds: pivots are rational and the witness of an
//! optimal outcome satisfies its constraints with exact equality.

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::{dot, Q};

/// `minimize objective · x` subject to `a_ub x ≤ b_ub`, `a_eq x = b_eq`.
/// Variables are free unless flagged in `nonnegative`.
#[derive(Debug, Clone, Default)]
pub struct LpProblem {
    pub objective: Vec<Q>,
    pub a_ub: Vec<Vec<Q>>,
    pub b_ub: Vec<Q>,
    pub a_eq: Vec<Vec<Q>>,
    pub b_eq: Vec<Q>,
    pub nonnegative: Vec<bool>,
}

impl LpProblem {
    pub fn new(objective: Vec<Q>) -> Self {
        let n = objective.len();
        LpProblem { objective, nonnegative: vec![false; n], ..Default::default() }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn all_nonnegative(mut self) -> Self {
        self.nonnegative = vec![true; self.num_vars()];
        self
    }

    pub fn le(mut self, row: Vec<Q>, rhs: Q) -> Self {
        self.a_ub.push(row);
        self.b_ub.push(rhs);
        self
    }

    pub fn ge(self, row: Vec<Q>, rhs: Q) -> Self {
        let row = row.into_iter().map(|x| -x).collect();
        self.le(row, -rhs)
    }

    pub fn eq(mut self, row: Vec<Q>, rhs: Q) -> Self {
        self.a_eq.push(row);
        self.b_eq.push(rhs);
        self
    }

    fn check(&self) -> Result<()> {
        let n = self.num_vars();
        let bad = |what: &str| Err(Error::DimensionMismatch(format!("lp: {what}")));
        if self.nonnegative.len() != n {
            return bad("nonnegativity flags do not match variable count");
        }
        if self.a_ub.len() != self.b_ub.len() || self.a_eq.len() != self.b_eq.len() {
            return bad("constraint rows and right-hand sides differ in count");
        }
        if self.a_ub.iter().chain(&self.a_eq).any(|r| r.len() != n) {
            return bad("constraint row length differs from variable count");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { value: Q, witness: Vec<Q> },
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn value(&self) -> Option<&Q> {
        match self {
            LpOutcome::Optimal { value, .. } => Some(value),
            _ => None,
        }
    }

    pub fn witness(&self) -> Option<&[Q]> {
        match self {
            LpOutcome::Optimal { witness, .. } => Some(witness),
            _ => None,
        }
    }

    /// Re-checks an optimal witness against every constraint, exactly.
    pub fn verify(&self, p: &LpProblem) -> bool {
        let LpOutcome::Optimal { value, witness } = self else {
            return true;
        };
        witness.len() == p.num_vars()
            && dot(&p.objective, witness) == *value
            && p.a_ub.iter().zip(&p.b_ub).all(|(r, b)| dot(r, witness) <= *b)
            && p.a_eq.iter().zip(&p.b_eq).all(|(r, b)| dot(r, witness) == *b)
            && witness.iter().zip(&p.nonnegative).all(|(x, &nn)| !nn || !x.is_negative())
    }
}

struct Tableau {
    rows: Vec<Vec<Q>>,
    rhs: Vec<Q>,
    basis: Vec<usize>,
    /// Reduced costs of the current objective, plus the negated objective value.
    obj: Vec<Q>,
    obj_value: Q,
}

impl Tableau {
    fn set_objective(&mut self, cost: &[Q]) {
        let mut obj = cost.to_vec();
        let mut val = Q::zero();
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = &cost[b];
            if cb.is_zero() {
                continue;
            }
            for (o, a) in obj.iter_mut().zip(&self.rows[i]) {
                if !a.is_zero() {
                    *o -= cb * a;
                }
            }
            val += cb * &self.rhs[i];
        }
        self.obj = obj;
        self.obj_value = val;
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let inv = self.rows[r][c].recip();
        for a in self.rows[r].iter_mut() {
            if !a.is_zero() {
                *a *= &inv;
            }
        }
        self.rhs[r] *= &inv;
        let prow = std::mem::take(&mut self.rows[r]);
        let prhs = self.rhs[r].clone();
        for i in 0..self.rows.len() {
            if i == r {
                continue;
            }
            let f = self.rows[i][c].clone();
            if f.is_zero() {
                continue;
            }
            for (a, p) in self.rows[i].iter_mut().zip(&prow) {
                if !p.is_zero() {
                    *a -= &f * p;
                }
            }
            self.rhs[i] -= &f * &prhs;
        }
        let f = self.obj[c].clone();
        if !f.is_zero() {
            for (a, p) in self.obj.iter_mut().zip(&prow) {
                if !p.is_zero() {
                    *a -= &f * p;
                }
            }
            self.obj_value += &f * &prhs;
        }
        self.rows[r] = prow;
        self.basis[r] = c;
    }

    /// Runs Bland-rule pivots until optimal; `false` means unbounded.
    fn run(&mut self, allowed: &[bool]) -> bool {
        loop {
            let Some(c) = (0..self.obj.len()).find(|&j| allowed[j] && self.obj[j].is_negative())
            else {
                return true;
            };
            let mut best: Option<(usize, Q)> = None;
            for i in 0..self.rows.len() {
                let a = &self.rows[i][c];
                if !a.is_positive() {
                    continue;
                }
                let ratio = &self.rhs[i] / a;
                let better = match &best {
                    None => true,
                    Some((bi, br)) => {
                        ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi])
                    }
                };
                if better {
                    best = Some((i, ratio));
                }
            }
            match best {
                None => return false,
                Some((r, _)) => self.pivot(r, c),
            }
        }
    }
}

/// Solves `p` exactly. Deterministic: the same problem always takes the same pivots.
pub fn lp_solve(p: &LpProblem) -> Result<LpOutcome> {
    p.check()?;
    let n = p.num_vars();
    // Column layout: structural columns (free variables split into +/-), slacks, artificials.
    let mut col_of: Vec<(usize, Option<usize>)> = Vec::with_capacity(n);
    let mut ncols = 0;
    for &nn in &p.nonnegative {
        if nn {
            col_of.push((ncols, None));
            ncols += 1;
        } else {
            col_of.push((ncols, Some(ncols + 1)));
            ncols += 2;
        }
    }
    let nstruct = ncols;
    let m_ub = p.a_ub.len();
    let m = m_ub + p.a_eq.len();
    let nslack = m_ub;
    let first_art = nstruct + nslack;

    let mut rows: Vec<Vec<Q>> = Vec::with_capacity(m);
    let mut rhs = Vec::with_capacity(m);
    let mut needs_art = Vec::with_capacity(m);
    for (i, (r, b)) in p.a_ub.iter().zip(&p.b_ub).chain(p.a_eq.iter().zip(&p.b_eq)).enumerate() {
        let mut row = vec![Q::zero(); first_art];
        for (j, a) in r.iter().enumerate() {
            let (pos, neg) = col_of[j];
            row[pos] = a.clone();
            if let Some(neg) = neg {
                row[neg] = -a;
            }
        }
        let is_ub = i < m_ub;
        if is_ub {
            row[nstruct + i] = Q::from_integer(1.into());
        }
        let mut b = b.clone();
        let flip = b.is_negative();
        if flip {
            row.iter_mut().for_each(|x| *x = -x.clone());
            b = -b;
        }
        needs_art.push(!is_ub || flip);
        rows.push(row);
        rhs.push(b);
    }
    let nart = needs_art.iter().filter(|&&x| x).count();
    let total = first_art + nart;
    let mut basis = Vec::with_capacity(m);
    let mut k = first_art;
    for (i, row) in rows.iter_mut().enumerate() {
        row.resize(total, Q::zero());
        if needs_art[i] {
            row[k] = Q::from_integer(1.into());
            basis.push(k);
            k += 1;
        } else {
            basis.push(nstruct + i);
        }
    }
    let mut t = Tableau { rows, rhs, basis, obj: Vec::new(), obj_value: Q::zero() };

    if nart > 0 {
        let mut cost = vec![Q::zero(); total];
        cost[first_art..].iter_mut().for_each(|c| *c = Q::from_integer(1.into()));
        t.set_objective(&cost);
        let allowed = vec![true; total];
        t.run(&allowed);
        if t.obj_value.is_positive() {
            return Ok(LpOutcome::Infeasible);
        }
        // Drive zero-level artificials out of the basis; drop rows that are redundant.
        let mut i = 0;
        while i < t.rows.len() {
            if t.basis[i] >= first_art {
                match (0..first_art).find(|&j| !t.rows[i][j].is_zero()) {
                    Some(j) => t.pivot(i, j),
                    None => {
                        t.rows.remove(i);
                        t.rhs.remove(i);
                        t.basis.remove(i);
                        continue;
                    }
                }
            }
            i += 1;
        }
    }

    let mut cost = vec![Q::zero(); total];
    for (j, c) in p.objective.iter().enumerate() {
        let (pos, neg) = col_of[j];
        cost[pos] = c.clone();
        if let Some(neg) = neg {
            cost[neg] = -c;
        }
    }
    t.set_objective(&cost);
    let allowed: Vec<bool> = (0..total).map(|j| j < first_art).collect();
    if !t.run(&allowed) {
        return Ok(LpOutcome::Unbounded);
    }
    let mut col_val = vec![Q::zero(); total];
    for (i, &b) in t.basis.iter().enumerate() {
        col_val[b] = t.rhs[i].clone();
    }
    let witness: Vec<Q> = col_of
        .iter()
        .map(|&(pos, neg)| match neg {
            Some(neg) => &col_val[pos] - &col_val[neg],
            None => col_val[pos].clone(),
        })
        .collect();
    let value = dot(&p.objective, &witness);
    Ok(LpOutcome::Optimal { value, witness })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qf, qvec};

    #[test]
    fn corner_optimum() {
        let p = LpProblem::new(qvec(&[1, 1])).ge(qvec(&[1, 0]), q(1)).ge(qvec(&[0, 1]), q(2));
        let out = lp_solve(&p).unwrap();
        assert_eq!(out, LpOutcome::Optimal { value: q(3), witness: qvec(&[1, 2]) });
        assert!(out.verify(&p));
    }

    #[test]
    fn infeasible() {
        let p = LpProblem::new(qvec(&[1])).le(qvec(&[1]), q(0)).ge(qvec(&[1]), q(1));
        assert_eq!(lp_solve(&p).unwrap(), LpOutcome::Infeasible);
    }

    #[test]
    fn unbounded() {
        let p = LpProblem::new(qvec(&[-1])).ge(qvec(&[1]), q(0));
        assert_eq!(lp_solve(&p).unwrap(), LpOutcome::Unbounded);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let p = LpProblem::new(qvec(&[1, 1])).le(qvec(&[1]), q(0));
        assert!(matches!(lp_solve(&p), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn equalities_with_redundant_rows() {
        // x + y = 1 twice, minimize x - y with x, y >= 0.
        let p = LpProblem::new(qvec(&[1, -1]))
            .all_nonnegative()
            .eq(qvec(&[1, 1]), q(1))
            .eq(qvec(&[2, 2]), q(2));
        let out = lp_solve(&p).unwrap();
        assert_eq!(out.value(), Some(&q(-1)));
        assert!(out.verify(&p));
    }

    #[test]
    fn fractional_optimum() {
        // maximize x + y s.t. 2x + y <= 1, x + 3y <= 1.
        let p = LpProblem::new(qvec(&[-1, -1]))
            .le(qvec(&[2, 1]), q(1))
            .le(qvec(&[1, 3]), q(1));
        let out = lp_solve(&p).unwrap();
        assert_eq!(out.value(), Some(&qf(-3, 5)));
        assert_eq!(out.witness().unwrap(), &[qf(2, 5), qf(1, 5)]);
    }
}
