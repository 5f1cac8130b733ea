//! Fill-reducing ordering by recursive level-set nested dissection.
//!
//! A breadth-first level structure rooted at a pseudo-peripheral node splits
//! the graph at its median level; that level is a vertex separator and is
//! numbered after both halves. Small pieces are numbered in BFS order.

use super::SymmetricSparseOperator;

const LEAF_SIZE: usize = 48;

struct Graph<'a> {
    op: &'a SymmetricSparseOperator,
}

impl Graph<'_> {
    fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.op.row(v).0.iter().copied().filter(move |&w| w != v)
    }
}

struct Work {
    /// Subset id each node currently belongs to.
    part: Vec<u32>,
    level: Vec<u32>,
    next_id: u32,
}

/// BFS restricted to `part == id` from `start`. Returns the visited nodes in
/// order with their levels written into `work.level`.
fn bfs(g: &Graph, work: &mut Work, id: u32, start: usize, stamp: u32) -> Vec<usize> {
    let mut order = vec![start];
    work.level[start] = 0;
    work.part[start] = stamp;
    let mut head = 0;
    while head < order.len() {
        let v = order[head];
        head += 1;
        for w in g.neighbors(v) {
            if work.part[w] == id {
                work.part[w] = stamp;
                work.level[w] = work.level[v] + 1;
                order.push(w);
            }
        }
    }
    order
}

fn dissect(g: &Graph, work: &mut Work, nodes: Vec<usize>, id: u32, out: &mut Vec<usize>) {
    if nodes.is_empty() {
        return;
    }
    if nodes.len() <= LEAF_SIZE {
        out.extend(nodes);
        return;
    }
    // pseudo-peripheral root: restart from the last node reached twice
    let mut root = nodes[0];
    let mut order;
    let mut sweep = 0;
    loop {
        let tmp = work.next_id;
        work.next_id += 1;
        order = bfs(g, work, id, root, tmp);
        for &v in &order {
            work.part[v] = id;
        }
        sweep += 1;
        if sweep == 4 {
            break;
        }
        root = *order.last().unwrap();
    }

    if order.len() < nodes.len() {
        // disconnected: handle this component and the rest separately
        let comp_id = work.next_id;
        work.next_id += 1;
        for &v in &order {
            work.part[v] = comp_id;
        }
        let rest: Vec<usize> = nodes.into_iter().filter(|&v| work.part[v] == id).collect();
        dissect(g, work, order, comp_id, out);
        dissect(g, work, rest, id, out);
        return;
    }

    let depth = work.level[*order.last().unwrap()] as usize;
    if depth < 2 {
        out.extend(order);
        return;
    }
    let mut counts = vec![0usize; depth + 1];
    for &v in &order {
        counts[work.level[v] as usize] += 1;
    }
    let half = order.len() / 2;
    let mut acc = 0;
    let mut sep_level = 1;
    for (l, &c) in counts.iter().enumerate() {
        acc += c;
        if acc >= half {
            sep_level = l.clamp(1, depth - 1) as u32;
            break;
        }
    }
    let (low_id, high_id) = (work.next_id, work.next_id + 1);
    work.next_id += 2;
    let mut low = Vec::new();
    let mut high = Vec::new();
    let mut sep = Vec::new();
    for &v in &order {
        let l = work.level[v];
        if l < sep_level {
            low.push(v);
        } else if l > sep_level {
            high.push(v);
        } else {
            sep.push(v);
        }
    }
    // separator nodes with no neighbor above the separator join the lower half
    let mut thin_sep = Vec::with_capacity(sep.len());
    for v in sep {
        let touches_high = g.neighbors(v).any(|w| work.level[w] > sep_level && work.part[w] == id);
        if touches_high {
            thin_sep.push(v);
        } else {
            low.push(v);
        }
    }
    for &v in &low {
        work.part[v] = low_id;
    }
    for &v in &high {
        work.part[v] = high_id;
    }
    for &v in &thin_sep {
        work.part[v] = u32::MAX;
    }
    dissect(g, work, low, low_id, out);
    dissect(g, work, high, high_id, out);
    out.extend(thin_sep);
}

/// Returns `perm` with `perm[k]` = original index of the k-th pivot.
pub fn nested_dissection(op: &SymmetricSparseOperator) -> Vec<usize> {
    let n = op.dim();
    let g = Graph { op };
    let mut work = Work { part: vec![0; n], level: vec![0; n], next_id: 1 };
    let mut out = Vec::with_capacity(n);
    let nodes: Vec<usize> = (0..n).collect();
    dissect(&g, &mut work, nodes, 0, &mut out);
    debug_assert_eq!(out.len(), n);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn is_permutation(p: &[usize]) -> bool {
        let mut seen = vec![false; p.len()];
        p.iter().all(|&i| i < p.len() && !std::mem::replace(&mut seen[i], true))
    }

    fn grid(n: usize) -> SymmetricSparseOperator {
        let idx = |i: usize, j: usize| i * n + j;
        let mut t = Vec::new();
        for i in 0..n {
            for j in 0..n {
                t.push((idx(i, j), idx(i, j), 4.0));
                if i + 1 < n {
                    t.push((idx(i, j), idx(i + 1, j), -1.0));
                    t.push((idx(i + 1, j), idx(i, j), -1.0));
                }
                if j + 1 < n {
                    t.push((idx(i, j), idx(i, j + 1), -1.0));
                    t.push((idx(i, j + 1), idx(i, j), -1.0));
                }
            }
        }
        SymmetricSparseOperator::from_triplets(n * n, &t)
    }

    #[test]
    fn produces_permutation() {
        let p = nested_dissection(&grid(30));
        assert_eq!(p.len(), 900);
        assert!(is_permutation(&p));
    }

    #[test]
    fn handles_disconnected_graph() {
        let t: Vec<_> = (0..100).map(|i| (i, i, 1.0)).collect();
        let op = SymmetricSparseOperator::from_triplets(100, &t);
        assert!(is_permutation(&nested_dissection(&op)));
    }
}
