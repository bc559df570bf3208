//! Table factors over discrete variables, row-major with the last scope
//! variable varying fastest.

use crate::graph::Network;

#[derive(Debug, Clone, PartialEq)]
pub struct Factor {
    scope: Vec<usize>,
    cards: Vec<usize>,
    values: Vec<f64>,
}

impl Factor {
    pub fn new(scope: Vec<usize>, cards: Vec<usize>, values: Vec<f64>) -> Self {
        assert_eq!(scope.len(), cards.len());
        assert_eq!(values.len(), cards.iter().product::<usize>());
        debug_assert!(values.iter().all(|&v| v >= 0.0));
        Factor { scope, cards, values }
    }

    pub fn scalar(value: f64) -> Self {
        Factor { scope: Vec::new(), cards: Vec::new(), values: vec![value] }
    }

    /// The CPT of `var` as a factor over (parents..., var).
    pub fn from_cpt(net: &Network, var: usize) -> Self {
        let mut scope = net.parents(var).to_vec();
        scope.push(var);
        let cards = scope.iter().map(|&v| net.cardinality(v)).collect();
        let values = net.cpt(var).table.iter().flatten().copied().collect();
        Factor::new(scope, cards, values)
    }

    pub fn scope(&self) -> &[usize] {
        &self.scope
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn contains(&self, var: usize) -> bool {
        self.scope.contains(&var)
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.cards.len()];
        for i in (0..self.cards.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.cards[i + 1];
        }
        strides
    }

    /// Fixes `var` to `state` and drops it from the scope.
    pub fn reduce(&self, var: usize, state: usize) -> Factor {
        let Some(pos) = self.scope.iter().position(|&v| v == var) else {
            return self.clone();
        };
        let strides = self.strides();
        let mut scope = self.scope.clone();
        let mut cards = self.cards.clone();
        scope.remove(pos);
        cards.remove(pos);
        let outer = self.values.len() / (self.cards[pos] * strides[pos]);
        let inner = strides[pos];
        let mut values = Vec::with_capacity(outer * inner);
        for o in 0..outer {
            let base = o * self.cards[pos] * inner + state * inner;
            values.extend_from_slice(&self.values[base..base + inner]);
        }
        Factor { scope, cards, values }
    }

    /// Sums `var` out of the factor.
    pub fn sum_out(&self, var: usize) -> Factor {
        let Some(pos) = self.scope.iter().position(|&v| v == var) else {
            return self.clone();
        };
        let strides = self.strides();
        let card = self.cards[pos];
        let inner = strides[pos];
        let outer = self.values.len() / (card * inner);
        let mut values = vec![0.0; outer * inner];
        for o in 0..outer {
            for s in 0..card {
                let base = (o * card + s) * inner;
                let dst = &mut values[o * inner..(o + 1) * inner];
                for (d, &x) in dst.iter_mut().zip(&self.values[base..base + inner]) {
                    *d += x;
                }
            }
        }
        let mut scope = self.scope.clone();
        let mut cards = self.cards.clone();
        scope.remove(pos);
        cards.remove(pos);
        Factor { scope, cards, values }
    }

    pub fn product(&self, other: &Factor) -> Factor {
        let mut scope = self.scope.clone();
        let mut cards = self.cards.clone();
        for (&v, &c) in other.scope.iter().zip(&other.cards) {
            if !scope.contains(&v) {
                scope.push(v);
                cards.push(c);
            }
        }
        let stride_in = |f: &Factor| -> Vec<usize> {
            let s = f.strides();
            scope
                .iter()
                .map(|v| f.scope.iter().position(|w| w == v).map_or(0, |i| s[i]))
                .collect()
        };
        let (sa, sb) = (stride_in(self), stride_in(other));
        let len: usize = cards.iter().product();
        let mut values = Vec::with_capacity(len);
        let mut digits = vec![0usize; cards.len()];
        let (mut ia, mut ib) = (0usize, 0usize);
        for _ in 0..len {
            values.push(self.values[ia] * other.values[ib]);
            // odometer increment, last variable fastest
            for d in (0..cards.len()).rev() {
                digits[d] += 1;
                ia += sa[d];
                ib += sb[d];
                if digits[d] < cards[d] {
                    break;
                }
                ia -= sa[d] * cards[d];
                ib -= sb[d] * cards[d];
                digits[d] = 0;
            }
        }
        Factor { scope, cards, values }
    }

    /// Reorders the scope to `order` (must be a permutation of the scope).
    pub fn permuted(&self, order: &[usize]) -> Factor {
        assert_eq!(order.len(), self.scope.len());
        if order == self.scope.as_slice() {
            return self.clone();
        }
        let target = Factor::new(
            order.to_vec(),
            order
                .iter()
                .map(|v| self.cards[self.scope.iter().position(|w| w == v).expect("permutation")])
                .collect(),
            vec![1.0; self.values.len()],
        );
        // product with an all-ones factor of the target scope yields the target layout
        let p = target.product(self);
        Factor { scope: p.scope, cards: p.cards, values: p.values }
    }

    pub fn normalized(&self) -> Option<Factor> {
        let z = self.total();
        if z <= 0.0 || !z.is_finite() {
            return None;
        }
        Some(Factor {
            scope: self.scope.clone(),
            cards: self.cards.clone(),
            values: self.values.iter().map(|v| v / z).collect(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_and_sum_out() {
        // f(A,B) * g(B,C)
        let f = Factor::new(vec![0, 1], vec![2, 2], vec![0.1, 0.9, 0.4, 0.6]);
        let g = Factor::new(vec![1, 2], vec![2, 3], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let h = f.product(&g);
        assert_eq!(h.scope(), &[0, 1, 2]);
        // h(a=1,b=0,c=2) = 0.4 * 3
        assert!((h.values()[2 * 3 + 2] - 1.2).abs() < 1e-15);
        let m = h.sum_out(1);
        assert_eq!(m.scope(), &[0, 2]);
        assert!((m.values()[0] - (0.1 * 1.0 + 0.9 * 4.0)).abs() < 1e-15);
    }

    #[test]
    fn reduce_picks_slice() {
        let f = Factor::new(vec![3, 5], vec![2, 3], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(f.reduce(5, 1).values(), &[2.0, 5.0]);
        assert_eq!(f.reduce(3, 1).values(), &[4.0, 5.0, 6.0]);
    }

    #[test]
    fn permute_round_trip() {
        let f = Factor::new(vec![0, 1], vec![2, 3], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let p = f.permuted(&[1, 0]);
        assert_eq!(p.values(), &[1.0, 4.0, 2.0, 5.0, 3.0, 6.0]);
        assert_eq!(p.permuted(&[0, 1]), f);
    }
}
