//! Queue orders over finite configurations.
//!
//! The cost order compares `(s(C), |C|, φ(C))` lexicographically, where
//! `φ(C)` lists the configuration's events by prefix insertion order. On
//! distinct configurations the third component always discriminates, so
//! the order is total there. The heuristic order puts `f = s + estimate`
//! in front and falls back to the cost order on ties.

use super::heuristic::Bound;
use super::prefix::Configuration;
use crate::scalar::CostValue;
use std::cmp::Ordering;
use std::sync::Arc;

/// Which order drives the unfolding queue.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrderKind {
    /// Adequate cost-based order.
    Cost,
    /// Semi-adequate order directed by the marking-equation bound.
    Heuristic,
}

/// A fully evaluated queue key. Under the cost order `f` mirrors `s`, so
/// one lexicographic comparison serves both orders.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct OrderKey<C> {
    pub f: Bound<C>,
    pub s: C,
    pub size: u32,
    pub phi: Arc<[u32]>,
}

impl<C: CostValue> OrderKey<C> {
    pub fn for_cost_order(cfg: &Configuration<C>) -> Self {
        OrderKey {
            f: Bound::Finite(cfg.cost().clone()),
            s: cfg.cost().clone(),
            size: cfg.len() as u32,
            phi: cfg.events_arc(),
        }
    }

    pub fn for_heuristic_order(cfg: &Configuration<C>, est: Bound<C>) -> Self {
        let f = match est {
            Bound::Finite(e) => Bound::Finite(cfg.cost().clone() + e),
            Bound::Infinite => Bound::Infinite,
        };
        OrderKey {
            f,
            s: cfg.cost().clone(),
            size: cfg.len() as u32,
            phi: cfg.events_arc(),
        }
    }
}

/// Cost-based comparison of two configurations: `(s, |C|, φ)`
/// lexicographically. `Equal` means all three keys tie, which on
/// distinct configurations cannot happen.
pub fn order_cost<C: CostValue>(a: &Configuration<C>, b: &Configuration<C>) -> Ordering {
    a.cost()
        .cmp(b.cost())
        .then_with(|| a.len().cmp(&b.len()))
        .then_with(|| a.events().cmp(b.events()))
}

/// Heuristic comparison: `f = s + est` first, then the cost order.
pub fn order_heuristic<C: CostValue>(
    a: &Configuration<C>,
    b: &Configuration<C>,
    est_a: &Bound<C>,
    est_b: &Bound<C>,
) -> Ordering {
    let fa = add_bound(a.cost(), est_a);
    let fb = add_bound(b.cost(), est_b);
    fa.cmp(&fb).then_with(|| order_cost(a, b))
}

fn add_bound<C: CostValue>(s: &C, est: &Bound<C>) -> Bound<C> {
    match est {
        Bound::Finite(e) => Bound::Finite(s.clone() + e.clone()),
        Bound::Infinite => Bound::Infinite,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;

    fn cfg(events: &[u32], cost: i64) -> Configuration<Rational> {
        Configuration::for_tests(events, Rational::ratio(cost, 1))
    }

    #[test]
    fn cheaper_configuration_wins_regardless_of_size() {
        let a = cfg(&[0, 1, 2, 3], 2);
        let b = cfg(&[4], 3);
        assert_eq!(order_cost(&a, &b), Ordering::Less);
    }

    #[test]
    fn equal_cost_smaller_size_wins() {
        let a = cfg(&[0, 1], 2);
        let b = cfg(&[2, 3, 4], 2);
        assert_eq!(order_cost(&a, &b), Ordering::Less);
    }

    #[test]
    fn equal_cost_and_size_fall_back_to_insertion_order() {
        let a = cfg(&[1, 4], 2);
        let b = cfg(&[2, 3], 2);
        assert_eq!(order_cost(&a, &b), Ordering::Less);
        assert_eq!(order_cost(&b, &a), Ordering::Greater);
    }

    #[test]
    fn heuristic_order_compares_f_first() {
        let a = cfg(&[0, 1, 2], 1); // f = 1 + 1/2
        let b = cfg(&[3], 2); // f = 2
        let ea = Bound::Finite(Rational::ratio(1, 2));
        let eb = Bound::Finite(Rational::ratio(0, 1));
        assert_eq!(order_heuristic(&a, &b, &ea, &eb), Ordering::Less);
        // Infinite estimate sinks below any finite one.
        assert_eq!(
            order_heuristic(&a, &b, &Bound::Infinite, &eb),
            Ordering::Greater
        );
    }

    #[test]
    fn zero_estimate_reduces_to_cost_order() {
        let pairs = [
            (cfg(&[0, 1], 2), cfg(&[2], 3)),
            (cfg(&[0], 1), cfg(&[1], 1)),
            (cfg(&[1, 4], 2), cfg(&[2, 3], 2)),
        ];
        let zero = Bound::<Rational>::zero();
        for (a, b) in pairs {
            assert_eq!(order_heuristic(&a, &b, &zero, &zero), order_cost(&a, &b));
        }
    }

    #[test]
    fn keys_sort_like_the_comparators() {
        let a = cfg(&[0, 2], 1);
        let b = cfg(&[1, 3], 1);
        let ka = OrderKey::for_cost_order(&a);
        let kb = OrderKey::for_cost_order(&b);
        assert_eq!(ka.cmp(&kb), order_cost(&a, &b));
    }
}
