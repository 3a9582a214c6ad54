//! Condition graphs and their path decompositions.
//!
//! For a set of target sums `F`, the condition graph on `[0, n-1]` joins
//! `k1` and `k2` whenever `k1 + k2` lies in `F` (a loop when `k1 == k2`).
//! No target is in `A+A` exactly when `A` is an independent set of it.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct ConditionGraph {
    n: usize,
    targets: Vec<usize>,
    adj: Vec<Vec<usize>>,
    looped: Vec<bool>,
}

/// A connected component laid out in walk order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    pub vertices: Vec<usize>,
    pub looped: Vec<bool>,
    pub cycle: bool,
}

impl Component {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn loop_count(&self) -> usize {
        self.looped.iter().filter(|&&l| l).count()
    }
}

impl ConditionGraph {
    pub fn build(n: usize, targets: &[usize]) -> Result<Self> {
        if n == 0 {
            return Err(Error::out_of_range("n", 0, ">= 1"));
        }
        let targets: Vec<usize> = targets.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
        let mut adj = vec![Vec::new(); n];
        let mut looped = vec![false; n];
        for &f in &targets {
            if f > 2 * n - 2 {
                return Err(Error::out_of_range("target sum", f, format!("0..={}", 2 * n - 2)));
            }
            for k1 in f.saturating_sub(n - 1)..=f / 2 {
                let k2 = f - k1;
                if k1 == k2 {
                    looped[k1] = true;
                } else {
                    adj[k1].push(k2);
                    adj[k2].push(k1);
                }
            }
        }
        Ok(ConditionGraph { n, targets, adj, looped })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn has_loop(&self, v: usize) -> bool {
        self.looped[v]
    }

    /// Edges `(k1, k2)` with `k1 <= k2`; loops appear as `(k, k)`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for v in 0..self.n {
            if self.looped[v] {
                out.push((v, v));
            }
            out.extend(self.adj[v].iter().filter(|&&w| w > v).map(|&w| (v, w)));
        }
        out
    }

    /// Components as paths or cycles. Fails if some vertex has degree above two.
    pub fn components(&self) -> Result<Vec<Component>> {
        if let Some(v) = (0..self.n).find(|&v| self.adj[v].len() > 2) {
            return Err(Error::NotAPath {
                vertex: v,
                degree: self.adj[v].len(),
            });
        }
        let mut seen = vec![false; self.n];
        let mut out = Vec::new();
        for start in 0..self.n {
            if seen[start] {
                continue;
            }
            let mut members = Vec::new();
            let mut queue = VecDeque::from([start]);
            seen[start] = true;
            while let Some(v) = queue.pop_front() {
                members.push(v);
                for &w in &self.adj[v] {
                    if !seen[w] {
                        seen[w] = true;
                        queue.push_back(w);
                    }
                }
            }
            let end = members.iter().copied().filter(|&v| self.adj[v].len() < 2).min();
            let cycle = end.is_none();
            let first = end.unwrap_or_else(|| *members.iter().min().unwrap());
            let mut order = Vec::with_capacity(members.len());
            let (mut prev, mut cur) = (usize::MAX, first);
            loop {
                order.push(cur);
                match self.adj[cur].iter().copied().find(|&w| w != prev && (order.len() < 2 || w != order[0])) {
                    Some(next) if order.len() < members.len() => {
                        prev = cur;
                        cur = next;
                    }
                    _ => break,
                }
            }
            debug_assert_eq!(order.len(), members.len());
            let looped = order.iter().map(|&v| self.looped[v]).collect();
            out.push(Component {
                vertices: order,
                looped,
                cycle,
            });
        }
        Ok(out)
    }
}

/// Multisets of plain path lengths and looped path lengths plus a count of
/// isolated vertices. A looped path's length counts the loop vertex.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PathDecomposition {
    plain: BTreeMap<usize, usize>,
    looped: BTreeMap<usize, usize>,
    isolated: usize,
}

impl PathDecomposition {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_plain(&mut self, len: usize, mult: usize) {
        match len {
            _ if mult == 0 => {}
            0 => {}
            1 => self.isolated += mult,
            _ => *self.plain.entry(len).or_default() += mult,
        }
    }

    pub fn add_looped(&mut self, len: usize, mult: usize) {
        if len > 0 && mult > 0 {
            *self.looped.entry(len).or_default() += mult;
        }
    }

    pub fn add_isolated(&mut self, count: usize) {
        self.isolated += count;
    }

    /// Plain path lengths (at least two vertices) with multiplicities.
    pub fn plain(&self) -> &BTreeMap<usize, usize> {
        &self.plain
    }

    pub fn looped(&self) -> &BTreeMap<usize, usize> {
        &self.looped
    }

    pub fn isolated(&self) -> usize {
        self.isolated
    }

    pub fn vertex_count(&self) -> usize {
        let paths: usize = self.plain.iter().map(|(l, m)| l * m).sum();
        let loops: usize = self.looped.iter().map(|(l, m)| l * m).sum();
        paths + loops + self.isolated
    }

    /// Decomposes a condition graph by component search. Every component
    /// must be a path carrying at most one loop, at one of its ends.
    pub fn from_graph(graph: &ConditionGraph) -> Result<Self> {
        let mut d = PathDecomposition::new();
        for comp in graph.components()? {
            if comp.cycle {
                return Err(Error::InvalidArgument(format!(
                    "component through vertex {} is a cycle",
                    comp.vertices[0]
                )));
            }
            match comp.loop_count() {
                0 => d.add_plain(comp.len(), 1),
                1 if comp.looped[0] || comp.looped[comp.len() - 1] => d.add_looped(comp.len(), 1),
                _ => {
                    return Err(Error::InvalidArgument(format!(
                        "component through vertex {} carries loops away from its ends",
                        comp.vertices[0]
                    )))
                }
            }
        }
        Ok(d)
    }
}

fn check_sum(n: usize, i: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::out_of_range("n", 0, ">= 1"));
    }
    if i > 2 * n - 2 {
        return Err(Error::out_of_range("i", i, format!("0..={}", 2 * n - 2)));
    }
    Ok(())
}

/// Decomposition of the condition graph for a single target sum.
pub fn decompose_single(n: usize, i: usize) -> Result<PathDecomposition> {
    check_sum(n, i)?;
    let i = if i > n - 1 { 2 * n - 2 - i } else { i };
    let mut d = PathDecomposition::new();
    if i % 2 == 1 {
        d.add_plain(2, i.div_ceil(2));
    } else {
        d.add_plain(2, i / 2);
        d.add_looped(1, 1);
    }
    d.add_isolated(n - i - 1);
    Ok(d)
}

/// Shape parameters of the two-target condition graph for `i < j <= n-1`.
///
/// There are `s` plain paths on `base_len` vertices and `s_prime` on
/// `base_len + 2`; `looped_low` / `looped_high` are the looped paths through
/// `i/2` and `j/2` (total vertex counts) when those are integers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairShape {
    pub base_len: usize,
    pub s: usize,
    pub s_prime: usize,
    pub looped_low: Option<usize>,
    pub looped_high: Option<usize>,
}

pub fn pair_shape(i: usize, j: usize) -> Result<PairShape> {
    if i >= j {
        return Err(Error::InvalidArgument(format!("need i < j, got i={i}, j={j}")));
    }
    let (i, j) = (i as i64, j as i64);
    let d = j - i;
    let ceil = |a: i64, b: i64| (a + b - 1) / b;
    let c = ceil(i + 1, d);
    let o = (i % 2 == 0).then(|| 2 * ceil(i / 2 + 1, d) - 1);
    let o2 = (j % 2 == 0).then(|| 2 * ceil(j / 2 + 1, d) - 2);
    let (s2, sp2) = match (o, o2) {
        (None, None) => (d * c - (i + 1), j + 1 - d * c),
        (Some(o), None) | (None, Some(o)) => ((d - 1) * c - (i + 1) + o, j - (d - 1) * c - o),
        (Some(o), Some(o2)) => ((d - 2) * c - (i + 1) + o + o2, j - 1 - (d - 2) * c - o - o2),
    };
    if s2 < 0 || sp2 < 0 || s2 % 2 != 0 || sp2 % 2 != 0 {
        return Err(Error::InvalidArgument(format!(
            "pair ({i}, {j}) has no consistent path shape"
        )));
    }
    Ok(PairShape {
        base_len: (2 * c) as usize,
        s: (s2 / 2) as usize,
        s_prime: (sp2 / 2) as usize,
        looped_low: o.map(|o| (o + 1) as usize),
        looped_high: o2.map(|o| (o + 1) as usize),
    })
}

/// Closed-form decomposition for two targets `i < j <= n-1`.
pub fn decompose_pair(n: usize, i: usize, j: usize) -> Result<PathDecomposition> {
    check_sum(n, j)?;
    if j > n - 1 {
        return Err(Error::out_of_range("j", j, format!("<= n-1 = {}", n - 1)));
    }
    let shape = pair_shape(i, j)?;
    let mut d = PathDecomposition::new();
    d.add_plain(shape.base_len, shape.s);
    d.add_plain(shape.base_len + 2, shape.s_prime);
    for len in [shape.looped_low, shape.looped_high].into_iter().flatten() {
        d.add_looped(len, 1);
    }
    d.add_isolated(n - 1 - j);
    if d.vertex_count() != n {
        return Err(Error::InvalidArgument(format!(
            "pair ({i}, {j}) decomposition covers {} of {n} vertices",
            d.vertex_count()
        )));
    }
    Ok(d)
}

/// Decomposition of the correlated condition graph for `F`.
///
/// The bipartite graph on `A`-copies and `B`-copies of `[0, n-1]` is a
/// two-strand cover of the ordinary condition graph: each plain path lifts
/// to a pair of plain paths of the same length ("accordion"), each looped
/// path of length `m` lifts to one plain path on `2m` vertices. The shape is
/// therefore described by the ordinary decomposition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AccordionDecomposition(pub PathDecomposition);

pub fn decompose_correlated(n: usize, targets: &[usize]) -> Result<AccordionDecomposition> {
    let g = ConditionGraph::build(n, targets)?;
    PathDecomposition::from_graph(&g).map(AccordionDecomposition)
}

/// The bipartite condition graph for `A+B`: vertex `2k` is `k` in `A`,
/// vertex `2k+1` is `k` in `B`, and `2k1` meets `2k2+1` when `k1+k2` is a target.
#[derive(Debug, Clone)]
pub struct BipartiteConditionGraph {
    adj: Vec<Vec<usize>>,
}

impl BipartiteConditionGraph {
    pub fn build(n: usize, targets: &[usize]) -> Result<Self> {
        let mut adj = vec![Vec::new(); 2 * n];
        for &f in targets {
            check_sum(n, f)?;
            for k1 in f.saturating_sub(n - 1)..=f.min(n - 1) {
                let k2 = f - k1;
                adj[2 * k1].push(2 * k2 + 1);
                adj[2 * k2 + 1].push(2 * k1);
            }
        }
        Ok(BipartiteConditionGraph { adj })
    }

    /// Sorted component sizes.
    pub fn component_sizes(&self) -> Vec<usize> {
        let mut seen = vec![false; self.adj.len()];
        let mut sizes = Vec::new();
        for s in 0..self.adj.len() {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            let mut stack = vec![s];
            let mut size = 0;
            while let Some(v) = stack.pop() {
                size += 1;
                for &w in &self.adj[v] {
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
            sizes.push(size);
        }
        sizes.sort_unstable();
        sizes
    }
}

impl AccordionDecomposition {
    /// Component sizes of the lifted bipartite graph, sorted.
    pub fn lifted_sizes(&self) -> Vec<usize> {
        let d = &self.0;
        let mut sizes = vec![1; 2 * d.isolated()];
        for (&len, &m) in d.plain() {
            sizes.extend(std::iter::repeat_n(len, 2 * m));
        }
        for (&len, &m) in d.looped() {
            sizes.extend(std::iter::repeat_n(2 * len, m));
        }
        sizes.sort_unstable();
        sizes
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn edges_for_single_target() {
        let g = ConditionGraph::build(5, &[4]).unwrap();
        assert_eq!(g.edges(), vec![(0, 4), (1, 3), (2, 2)]);
        let g = ConditionGraph::build(5, &[7]).unwrap();
        assert_eq!(g.edges(), vec![(3, 4)]);
    }

    #[test]
    fn rejects_bad_targets() {
        assert!(ConditionGraph::build(4, &[7]).is_err());
        assert!(ConditionGraph::build(0, &[]).is_err());
    }

    #[test]
    fn degree_three_is_rejected() {
        let g = ConditionGraph::build(8, &[5, 6, 7]).unwrap();
        assert!(matches!(g.components(), Err(Error::NotAPath { .. })));
    }

    #[test]
    fn pair_shape_example() {
        let d = decompose_pair(20, 5, 9).unwrap();
        assert_eq!(d.plain().get(&4), Some(&1));
        assert_eq!(d.plain().get(&6), Some(&1));
        assert!(d.looped().is_empty());
        assert_eq!(d.isolated(), 10);
    }

    #[test]
    fn pair_shape_even_odd() {
        let d = decompose_pair(5, 0, 1).unwrap();
        assert_eq!(d.looped().get(&2), Some(&1));
        assert_eq!(d.isolated(), 3);
    }

    #[test]
    fn single_matches_component_search() {
        for n in 1..=40 {
            for i in 0..=2 * n - 2 {
                let g = ConditionGraph::build(n, &[i]).unwrap();
                assert_eq!(decompose_single(n, i).unwrap(), PathDecomposition::from_graph(&g).unwrap(), "n={n} i={i}");
            }
        }
    }

    #[test]
    fn pair_closed_form_matches_component_search() {
        for n in 2..=60 {
            for j in 1..n {
                for i in 0..j {
                    let g = ConditionGraph::build(n, &[i, j]).unwrap();
                    let bfs = PathDecomposition::from_graph(&g).unwrap();
                    assert_eq!(decompose_pair(n, i, j).unwrap(), bfs, "n={n} i={i} j={j}");
                }
            }
        }
    }

    #[test]
    fn loops_never_share_a_path() {
        for n in 2..=40 {
            for j in 0..=2 * n - 2 {
                for i in 0..j {
                    let g = ConditionGraph::build(n, &[i, j]).unwrap();
                    for c in g.components().unwrap() {
                        assert!(!c.cycle);
                        assert!(c.loop_count() <= 1);
                    }
                }
            }
        }
    }

    #[test]
    fn correlated_lift_matches_bipartite_search() {
        for n in 1..=14 {
            for j in 0..=2 * n - 2 {
                for i in 0..=j {
                    let targets: Vec<usize> = if i == j { vec![i] } else { vec![i, j] };
                    let acc = decompose_correlated(n, &targets).unwrap();
                    let bip = BipartiteConditionGraph::build(n, &targets).unwrap();
                    assert_eq!(acc.lifted_sizes(), bip.component_sizes(), "n={n} F={targets:?}");
                }
            }
        }
    }

    proptest! {
        #[test]
        fn components_partition_vertices(n in 1usize..50, a in 0usize..100, b in 0usize..100) {
            let t: Vec<usize> = [a, b].iter().map(|x| x % (2 * n - 1)).collect();
            let g = ConditionGraph::build(n, &t).unwrap();
            let comps = g.components().unwrap();
            let mut all: Vec<usize> = comps.iter().flat_map(|c| c.vertices.clone()).collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
            for c in &comps {
                for w in c.vertices.windows(2) {
                    prop_assert!(g.neighbors(w[0]).contains(&w[1]));
                }
            }
        }

        #[test]
        fn decomposition_counts_every_vertex(n in 2usize..80, x in 0usize..1000, y in 0usize..1000) {
            let j = 1 + x % (n - 1);
            let i = y % j;
            prop_assert_eq!(decompose_pair(n, i, j).unwrap().vertex_count(), n);
        }
    }
}
