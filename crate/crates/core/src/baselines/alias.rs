use alloc::vec::Vec;

use crate::rng::SeededRng;

/// Walker/Vose alias table: O(n) construction, O(1) draws from a discrete
/// distribution given by non-negative weights.
#[derive(Clone, Debug)]
pub struct AliasTable {
    prob: Vec<f64>,
    alias: Vec<u32>,
    /// `(ceil(prob * 2^32), alias)` per column for 32-bit coins.
    cells: Vec<(u64, u32)>,
}

impl AliasTable {
    /// `weights` must be non-negative, finite and not all zero.
    pub fn new(weights: &[f64]) -> Self {
        let mut t = Self {
            prob: Vec::new(),
            alias: Vec::new(),
            cells: Vec::new(),
        };
        t.build_into(weights, &mut Vec::new(), &mut Vec::new());
        t
    }

    /// Builds into `self`, reusing the worklists.
    fn build_into(&mut self, weights: &[f64], small: &mut Vec<u32>, large: &mut Vec<u32>) {
        let n = weights.len();
        assert!(n > 0, "alias table needs at least one outcome");
        let total: f64 = weights.iter().sum();
        assert!(total > 0.0 && total.is_finite(), "alias weights must have a positive finite sum");
        self.prob.clear();
        self.alias.clear();
        self.prob.extend(weights.iter().map(|w| w * n as f64 / total));
        self.alias.extend(0..n as u32);
        small.clear();
        large.clear();
        for (i, &p) in self.prob.iter().enumerate() {
            if p < 1.0 {
                small.push(i as u32);
            } else {
                large.push(i as u32);
            }
        }
        while let (Some(&s), Some(&l)) = (small.last(), large.last()) {
            small.pop();
            self.alias[s as usize] = l;
            let rest = self.prob[l as usize] + self.prob[s as usize] - 1.0;
            self.prob[l as usize] = rest;
            if rest < 1.0 {
                large.pop();
                small.push(l);
            }
        }
        // leftovers are 1 up to rounding
        for &i in small.iter().chain(large.iter()) {
            self.prob[i as usize] = 1.0;
        }
        self.cells.clear();
        self.cells
            .extend(self.prob.iter().zip(&self.alias).map(|(p, a)| ((p * 4_294_967_296.0).ceil() as u64, *a)));
    }

    /// Like [`AliasTable::sample`] but spends a single 64-bit draw: the high
    /// half picks the column, the low half is the coin. Needs fewer than 2^32
    /// outcomes; the coin has 32-bit resolution.
    #[inline]
    pub fn sample_one_draw(&self, rng: &mut SeededRng) -> usize {
        self.sample_bits(rng.next_u64())
    }

    /// Draw driven by 64 caller-supplied uniform bits.
    #[inline]
    pub fn sample_bits(&self, x: u64) -> usize {
        let i = (((x >> 32) * self.cells.len() as u64) >> 32) as usize;
        let (threshold, alias) = self.cells[i];
        core::hint::select_unpredictable((x & 0xffff_ffff) < threshold, i, alias as usize)
    }

    pub fn len(&self) -> usize {
        self.prob.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prob.is_empty()
    }

    #[inline]
    pub fn sample(&self, rng: &mut SeededRng) -> usize {
        let i = rng.index(self.prob.len());
        if rng.unit_f64() < self.prob[i] {
            i
        } else {
            self.alias[i] as usize
        }
    }
}

/// One alias table per node over its neighbor weights, packed into flat
/// arrays aligned with the graph's CSR adjacency.
#[derive(Clone, Debug)]
pub struct NeighborAlias {
    offsets: Vec<usize>,
    prob: Vec<f64>,
    alias: Vec<u32>,
}

impl NeighborAlias {
    /// `offsets` has one entry per node plus a terminator; row `i` of
    /// `weights` is `weights[offsets[i]..offsets[i + 1]]`. Linear in the
    /// total number of entries.
    pub fn build(offsets: &[usize], weights: &[f64]) -> Self {
        let mut prob = Vec::with_capacity(weights.len());
        let mut alias = Vec::with_capacity(weights.len());
        let mut table = AliasTable {
            prob: Vec::new(),
            alias: Vec::new(),
            cells: Vec::new(),
        };
        let (mut small, mut large) = (Vec::new(), Vec::new());
        for w in offsets.windows(2) {
            let row = &weights[w[0]..w[1]];
            if row.is_empty() {
                continue;
            }
            table.build_into(row, &mut small, &mut large);
            prob.extend_from_slice(&table.prob);
            alias.extend_from_slice(&table.alias);
        }
        Self {
            offsets: offsets.to_vec(),
            prob,
            alias,
        }
    }

    /// Position of a sampled neighbor within row `node`; `None` for an empty row.
    #[inline]
    pub fn sample(&self, node: usize, rng: &mut SeededRng) -> Option<usize> {
        let start = self.offsets[node];
        let n = self.offsets[node + 1] - start;
        if n == 0 {
            return None;
        }
        let i = rng.index(n);
        if rng.unit_f64() < self.prob[start + i] {
            Some(i)
        } else {
            Some(self.alias[start + i] as usize)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn frequencies_follow_weights() {
        let w = [1.0, 2.0, 3.0, 4.0];
        let t = AliasTable::new(&w);
        let mut rng = SeededRng::new(9);
        let mut counts = [0usize; 4];
        let n = 200_000;
        for _ in 0..n {
            counts[t.sample(&mut rng)] += 1;
        }
        for (c, wi) in counts.iter().zip(w) {
            let expected = wi / 10.0;
            assert!((*c as f64 / n as f64 - expected).abs() < 0.005);
        }
    }

    #[test]
    fn one_draw_frequencies() {
        let t = AliasTable::new(&[3.0, 1.0, 0.0, 4.0]);
        let mut rng = SeededRng::new(5);
        let mut counts = [0usize; 4];
        let n = 200_000;
        for _ in 0..n {
            counts[t.sample_one_draw(&mut rng)] += 1;
        }
        assert_eq!(counts[2], 0);
        for (c, p) in counts.iter().zip([0.375, 0.125, 0.0, 0.5]) {
            assert!((*c as f64 / n as f64 - p).abs() < 0.005);
        }
    }

    #[test]
    fn zero_weight_never_drawn() {
        let t = AliasTable::new(&[0.0, 1.0, 0.0]);
        let mut rng = SeededRng::new(1);
        assert!((0..10_000).all(|_| t.sample(&mut rng) == 1));
    }

    #[test]
    fn packed_rows() {
        let offsets = vec![0, 2, 2, 3];
        let t = NeighborAlias::build(&offsets, &[1.0, 0.0, 5.0]);
        let mut rng = SeededRng::new(2);
        assert_eq!(t.sample(0, &mut rng), Some(0));
        assert_eq!(t.sample(1, &mut rng), None);
        assert_eq!(t.sample(2, &mut rng), Some(0));
    }
}
