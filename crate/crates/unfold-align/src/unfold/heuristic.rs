//! Marking-equation lower bound on the remaining alignment cost.
//!
//! For a marking `m` of the extended product net, the cheapest completion
//! to the target marking is underestimated by relaxing reachability to
//! the state equation: minimize total firing cost over nonnegative
//! (fractional) firing counts `x` with `m + N·x = m_final`. Every real
//! firing sequence induces such an `x`, so the bound is admissible; it is
//! also consistent, since one extra firing changes `m` by exactly one
//! column of `N`.

use super::simplex::{solve_min, LpResult};
use crate::petri::{Marking, SystemNet};
use crate::product::{CostModel, MoveNet};
use crate::scalar::CostValue;
use std::collections::HashMap;

/// A heuristic value; `Infinite` marks markings the state equation
/// already proves unable to reach the target.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Bound<C> {
    Finite(C),
    Infinite,
}

impl<C: CostValue> Bound<C> {
    pub fn zero() -> Self {
        Bound::Finite(C::zero())
    }

    pub fn finite(&self) -> Option<&C> {
        match self {
            Bound::Finite(c) => Some(c),
            Bound::Infinite => None,
        }
    }
}

/// Reusable estimator for one net: incidence matrix, transition costs and
/// a per-marking result cache.
pub struct Estimator<C> {
    /// Incidence rows, one per place: `post(t,p) - pre(t,p)`.
    rows: Vec<Vec<C>>,
    costs: Vec<C>,
    target: Marking,
    n_places: usize,
    cache: HashMap<Marking, Bound<C>>,
}

impl<C: CostValue> Estimator<C> {
    /// Builds an estimator from any system net with per-transition costs;
    /// the target is the net's final marking.
    pub fn from_net(net: &SystemNet, costs: Vec<C>) -> Self {
        let n_places = net.n_places();
        let n_trans = net.n_transitions();
        let mut rows = vec![vec![C::zero(); n_trans]; n_places];
        for t in net.transitions() {
            for &p in net.pre_t(t) {
                let cell = &mut rows[p.index()][t.index()];
                *cell = cell.clone() - C::one();
            }
            for &p in net.post_t(t) {
                let cell = &mut rows[p.index()][t.index()];
                *cell = cell.clone() + C::one();
            }
        }
        Estimator {
            rows,
            costs,
            target: net.m_final().clone(),
            n_places,
            cache: HashMap::new(),
        }
    }

    pub fn new(spn: &MoveNet, cm: &CostModel<C>) -> Self {
        Self::from_net(&spn.net, spn.move_costs(cm))
    }

    /// Lower bound on the remaining cost from `m` to the final marking.
    pub fn estimate(&mut self, m: &Marking) -> Bound<C> {
        if let Some(hit) = self.cache.get(m) {
            return hit.clone();
        }
        let mut rhs = vec![C::zero(); self.n_places];
        for p in self.target.iter() {
            rhs[p.index()] = rhs[p.index()].clone() + C::one();
        }
        for p in m.iter() {
            rhs[p.index()] = rhs[p.index()].clone() - C::one();
        }
        let value = match solve_min(&self.costs, &self.rows, &rhs) {
            LpResult::Optimal { objective, .. } => Bound::Finite(objective),
            LpResult::Infeasible => Bound::Infinite,
            // Costs are nonnegative, so the relaxation is bounded below.
            LpResult::Unbounded => unreachable!("marking-equation LP cannot be unbounded"),
        };
        self.cache.insert(m.clone(), value.clone());
        value
    }
}

/// One-shot lower bound for a single marking of an extended product net.
pub fn estimate_remaining<C: CostValue>(spn: &MoveNet, m: &Marking, cm: &CostModel<C>) -> Bound<C> {
    Estimator::new(spn, cm).estimate(m)
}
