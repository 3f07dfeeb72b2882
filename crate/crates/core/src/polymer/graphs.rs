//! Graph combinatorics for the expansion: connected-graph and labeled-tree
//! enumeration, Ursell coefficients, spanning-tree counts, and the
//! tree-graph (stability) inequality checker.

use thiserror::Error;

/// Enumeration caps; counts grow superexponentially beyond these.
pub const CONNECTED_GRAPH_CAP: usize = 6;
pub const TREE_CAP: usize = 7;
pub const URSELL_CAP: usize = 5;

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("vertex count {n} above cap {cap} for {what}")]
    AboveCap {
        n: usize,
        cap: usize,
        what: &'static str,
    },
    #[error("vertex count must be >= 1")]
    Empty,
}

/// All unordered vertex pairs of {0..n}.
fn all_edges(n: usize) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            edges.push((u, v));
        }
    }
    edges
}

fn connected_from_edges(n: usize, edges: &[(usize, usize)]) -> bool {
    if n == 0 {
        return false;
    }
    let mut reach = 1u64;
    loop {
        let mut grew = false;
        for &(u, v) in edges {
            let bu = reach >> u & 1;
            let bv = reach >> v & 1;
            if bu != bv {
                reach |= 1 << u | 1 << v;
                grew = true;
            }
        }
        if !grew {
            break;
        }
    }
    reach.count_ones() as usize == n
}

/// Exhaustive, duplicate-free list of connected graphs on {0..n} (each graph
/// is its edge list), by filtering all edge subsets.
pub fn connected_graphs(n: usize) -> Result<Vec<Vec<(usize, usize)>>, GraphError> {
    if n == 0 {
        return Err(GraphError::Empty);
    }
    if n > CONNECTED_GRAPH_CAP {
        return Err(GraphError::AboveCap {
            n,
            cap: CONNECTED_GRAPH_CAP,
            what: "connected-graph enumeration",
        });
    }
    let edges = all_edges(n);
    let mut out = Vec::new();
    for mask in 0u32..(1 << edges.len()) {
        let subset: Vec<(usize, usize)> = edges
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, &e)| e)
            .collect();
        if connected_from_edges(n, &subset) {
            out.push(subset);
        }
    }
    Ok(out)
}

/// All labeled trees on {0..n} from Prüfer sequences.
pub fn trees(n: usize) -> Result<Vec<Vec<(usize, usize)>>, GraphError> {
    if n == 0 {
        return Err(GraphError::Empty);
    }
    if n > TREE_CAP {
        return Err(GraphError::AboveCap {
            n,
            cap: TREE_CAP,
            what: "tree enumeration",
        });
    }
    if n == 1 {
        return Ok(vec![vec![]]);
    }
    if n == 2 {
        return Ok(vec![vec![(0, 1)]]);
    }
    let len = n - 2;
    let total = (n as u64).pow(len as u32);
    let mut out = Vec::with_capacity(total as usize);
    for code in 0..total {
        let mut prufer = Vec::with_capacity(len);
        let mut c = code;
        for _ in 0..len {
            prufer.push((c % n as u64) as usize);
            c /= n as u64;
        }
        out.push(tree_from_prufer(n, &prufer));
    }
    Ok(out)
}

/// Decodes one Prüfer sequence into its tree's edge list.
pub fn tree_from_prufer(n: usize, prufer: &[usize]) -> Vec<(usize, usize)> {
    debug_assert_eq!(prufer.len() + 2, n);
    let mut degree = vec![1u32; n];
    for &a in prufer {
        degree[a] += 1;
    }
    let mut edges = Vec::with_capacity(n - 1);
    // Smallest-leaf-first decoding via a sorted set simulated by a scan;
    // n is tiny here.
    let mut deg = degree.clone();
    for &a in prufer {
        let leaf = (0..n).find(|&v| deg[v] == 1).unwrap();
        edges.push((leaf.min(a), leaf.max(a)));
        deg[leaf] = 0;
        deg[a] -= 1;
    }
    let rest: Vec<usize> = (0..n).filter(|&v| deg[v] == 1).collect();
    edges.push((rest[0].min(rest[1]), rest[0].max(rest[1])));
    edges
}

/// Number of labeled trees with the given incidence profile,
/// `(n-2)!/Π(d_i - 1)!`.
pub fn tree_count_for_profile(degrees: &[usize]) -> u64 {
    let n = degrees.len();
    debug_assert_eq!(degrees.iter().sum::<usize>(), 2 * n - 2);
    let fact = |k: usize| -> u64 { (1..=k as u64).product::<u64>().max(1) };
    let mut count = fact(n - 2);
    for &d in degrees {
        count /= fact(d - 1);
    }
    count
}

/// Number of spanning trees of the graph (matrix-tree theorem; the
/// determinant is an exact small integer here).
pub fn spanning_tree_count(n: usize, edges: &[(usize, usize)]) -> u64 {
    if n == 1 {
        return 1;
    }
    // Laplacian minor determinant.
    let dim = n - 1;
    let mut m = vec![vec![0.0_f64; dim]; dim];
    for &(u, v) in edges {
        if u < dim {
            m[u][u] += 1.0;
        }
        if v < dim {
            m[v][v] += 1.0;
        }
        if u < dim && v < dim {
            m[u][v] -= 1.0;
            m[v][u] -= 1.0;
        }
    }
    // Gaussian elimination with partial pivoting.
    let mut det = 1.0;
    for col in 0..dim {
        let pivot = (col..dim)
            .max_by(|&a, &b| m[a][col].abs().partial_cmp(&m[b][col].abs()).unwrap())
            .unwrap();
        if m[pivot][col].abs() < 1e-12 {
            return 0;
        }
        if pivot != col {
            m.swap(pivot, col);
            det = -det;
        }
        det *= m[col][col];
        for row in (col + 1)..dim {
            let f = m[row][col] / m[col][col];
            for k in col..dim {
                m[row][k] -= f * m[col][k];
            }
        }
    }
    det.round().max(0.0) as u64
}

/// Ursell coefficient of a collection of polymers given as cell bitmasks:
/// 1 for a single polymer, 0 when the overlap graph is disconnected,
/// otherwise the alternating sum `Σ_{f connected, spanning} (-1)^{|f|}`
/// over subgraphs of the overlap graph.
pub fn ursell_overlap(masks: &[u64]) -> Result<i64, GraphError> {
    let n = masks.len();
    if n == 0 {
        return Err(GraphError::Empty);
    }
    if n > URSELL_CAP {
        return Err(GraphError::AboveCap {
            n,
            cap: URSELL_CAP,
            what: "Ursell coefficient",
        });
    }
    if n == 1 {
        return Ok(1);
    }
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if masks[i] & masks[j] != 0 {
                edges.push((i, j));
            }
        }
    }
    if !connected_from_edges(n, &edges) {
        return Ok(0);
    }
    Ok(ursell_from_graph(n, &edges))
}

/// Alternating connected-subgraph sum for a connected overlap graph.
pub fn ursell_from_graph(n: usize, edges: &[(usize, usize)]) -> i64 {
    let mut acc = 0i64;
    for mask in 0u32..(1 << edges.len()) {
        let subset: Vec<(usize, usize)> = edges
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, &e)| e)
            .collect();
        if connected_from_edges(n, &subset) {
            acc += if subset.len() % 2 == 0 { 1 } else { -1 };
        }
    }
    acc
}

/// `Σ_{g connected, spanning {0..n}} Π_{{i,j} ∈ g} f(i,j)` by the
/// subset convolution `C(S) = T(S) - Σ C(S') T(S \ S')`, where
/// `T(S) = Π_{{i,j} ⊆ S} (1 + f(i,j))` sums over all subgraphs.
pub fn connected_product_sum(n: usize, f: &dyn Fn(usize, usize) -> f64) -> f64 {
    debug_assert!(n >= 1 && n <= 16);
    let full: u32 = (1 << n) - 1;
    let mut t = vec![1.0_f64; (full + 1) as usize];
    for s in 1..=full {
        let mut prod = 1.0;
        for i in 0..n {
            if s >> i & 1 == 0 {
                continue;
            }
            for j in (i + 1)..n {
                if s >> j & 1 == 1 {
                    prod *= 1.0 + f(i, j);
                }
            }
        }
        t[s as usize] = prod;
    }
    let mut c = vec![0.0_f64; (full + 1) as usize];
    for s in 1..=full {
        if s.count_ones() == 1 {
            c[s as usize] = 1.0; // empty product on a single vertex
            continue;
        }
        let v0 = s & s.wrapping_neg(); // lowest set bit
        let rest = s & !v0;
        let mut acc = t[s as usize];
        // Proper sub-subsets of `s` containing v0: iterate subsets of rest.
        let mut sub = rest;
        loop {
            sub = (sub - 1) & rest;
            let part = v0 | sub;
            if part != s {
                acc -= c[part as usize] * t[(s & !part) as usize];
            }
            if sub == 0 {
                break;
            }
        }
        c[s as usize] = acc;
    }
    if n == 1 {
        // A single vertex carries the empty graph with product 1; the
        // convention for activities needs the *link* sum, which is empty.
        return 1.0;
    }
    c[full as usize]
}

/// Both sides of the tree-graph inequality
/// `|Σ_{g∈G_R} Π (e^{-V_xy} - 1)| ≤ e^{Σ V_x} Σ_{τ∈T_R} Π |V_xy|`,
/// plus whether the stability hypothesis
/// `Σ_{x∈S} V_x + Σ_{{x,y}⊆S} V_xy ≥ 0` holds on every subset.
pub fn tree_graph_inequality(v_sites: &[f64], v_pairs: &[Vec<f64>]) -> (f64, f64, bool) {
    let n = v_sites.len();
    let lhs = connected_product_sum(n, &|i, j| (-v_pairs[i][j]).exp() - 1.0).abs();
    let tree_sum: f64 = trees(n)
        .expect("tree cap")
        .iter()
        .map(|t| t.iter().map(|&(u, v)| v_pairs[u][v].abs()).product::<f64>())
        .sum();
    let rhs = v_sites.iter().sum::<f64>().exp() * tree_sum;
    let mut stable = true;
    for mask in 1u32..(1 << n) {
        let mut acc = 0.0;
        for i in 0..n {
            if mask >> i & 1 == 0 {
                continue;
            }
            acc += v_sites[i];
            for j in (i + 1)..n {
                if mask >> j & 1 == 1 {
                    acc += v_pairs[i][j];
                }
            }
        }
        if acc < 0.0 {
            stable = false;
        }
    }
    (lhs, rhs, stable)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn connected_graph_counts() {
        assert_eq!(connected_graphs(2).unwrap().len(), 1);
        assert_eq!(connected_graphs(3).unwrap().len(), 4);
        assert_eq!(connected_graphs(4).unwrap().len(), 38);
        assert_eq!(connected_graphs(5).unwrap().len(), 728);
        assert!(connected_graphs(7).is_err());
    }

    #[test]
    fn tree_counts_match_cayley() {
        for n in 2..=7 {
            let ts = trees(n).unwrap();
            assert_eq!(ts.len() as u64, (n as u64).pow(n as u32 - 2));
            // Duplicate-free.
            let mut sorted: Vec<Vec<(usize, usize)>> = ts
                .iter()
                .map(|t| {
                    let mut e = t.clone();
                    e.sort();
                    e
                })
                .collect();
            sorted.sort();
            sorted.dedup();
            assert_eq!(sorted.len(), ts.len());
        }
        assert!(trees(8).is_err());
    }

    #[test]
    fn incidence_profile_counts() {
        // Exhaustive check of (n-2)!/Π(d_i-1)! for n ≤ 6.
        for n in 3..=6 {
            let ts = trees(n).unwrap();
            let mut by_profile: std::collections::HashMap<Vec<usize>, u64> =
                std::collections::HashMap::new();
            for t in &ts {
                let mut deg = vec![0usize; n];
                for &(u, v) in t {
                    deg[u] += 1;
                    deg[v] += 1;
                }
                *by_profile.entry(deg).or_insert(0) += 1;
            }
            for (profile, count) in by_profile {
                assert_eq!(
                    count,
                    tree_count_for_profile(&profile),
                    "profile {profile:?} at n = {n}"
                );
            }
        }
    }

    #[test]
    fn n_four_trees_are_sixteen() {
        assert_eq!(trees(4).unwrap().len(), 16);
    }

    #[test]
    fn spanning_tree_counts() {
        // Complete graphs: Cayley numbers.
        for n in 2..=6 {
            assert_eq!(
                spanning_tree_count(n, &all_edges(n)),
                (n as u64).pow(n as u32 - 2)
            );
        }
        // A path has exactly one spanning tree; a 4-cycle has 4.
        assert_eq!(spanning_tree_count(4, &[(0, 1), (1, 2), (2, 3)]), 1);
        assert_eq!(spanning_tree_count(4, &[(0, 1), (1, 2), (2, 3), (0, 3)]), 4);
    }

    #[test]
    fn ursell_values() {
        assert_eq!(ursell_overlap(&[0b1]).unwrap(), 1);
        // Two overlapping polymers: single edge, (-1)^1.
        assert_eq!(ursell_overlap(&[0b11, 0b10]).unwrap(), -1);
        // Disjoint supports.
        assert_eq!(ursell_overlap(&[0b01, 0b10]).unwrap(), 0);
        assert!(ursell_overlap(&[1; 6]).is_err());
    }

    #[test]
    fn ursell_bounded_by_spanning_trees() {
        // |φ^T| ≤ N(g) on random overlap graphs.
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..50 {
            let n = rng.gen_range(2..=5);
            let edges: Vec<(usize, usize)> = all_edges(n)
                .into_iter()
                .filter(|_| rng.gen_bool(0.6))
                .collect();
            if !connected_from_edges(n, &edges) {
                continue;
            }
            let u = ursell_from_graph(n, &edges);
            let nt = spanning_tree_count(n, &edges);
            assert!(
                u.unsigned_abs() <= nt,
                "|φ^T| = {} exceeds tree count {nt}",
                u.abs()
            );
        }
    }

    #[test]
    fn alternating_sum_over_all_graphs_telescopes() {
        // Σ over ALL subgraphs of the complete graph of (-1)^{|f|} is zero
        // for n ≥ 2 (it factors into (1-1)^{#edges}).
        for n in 2..=5 {
            let edges = all_edges(n);
            let mut acc = 0i64;
            for mask in 0u32..(1 << edges.len()) {
                acc += if mask.count_ones() % 2 == 0 { 1 } else { -1 };
            }
            assert_eq!(acc, 0);
        }
    }

    #[test]
    fn connected_product_sum_matches_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 2..=5 {
            let mut f = vec![vec![0.0; n]; n];
            for i in 0..n {
                for j in (i + 1)..n {
                    let v = rng.gen_range(-0.5..0.5);
                    f[i][j] = v;
                    f[j][i] = v;
                }
            }
            let dp = connected_product_sum(n, &|i, j| f[i][j]);
            let brute: f64 = connected_graphs(n)
                .unwrap()
                .iter()
                .map(|g| g.iter().map(|&(u, v)| f[u][v]).product::<f64>())
                .sum();
            assert!(
                (dp - brute).abs() <= 1e-12 * brute.abs().max(1.0),
                "n = {n}: {dp} vs {brute}"
            );
        }
    }

    #[test]
    fn tree_graph_inequality_on_random_stable_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..200 {
            let n = rng.gen_range(2..=5);
            let mut pairs = vec![vec![0.0_f64; n]; n];
            for i in 0..n {
                for j in (i + 1)..n {
                    let v = rng.gen_range(-0.8..0.8);
                    pairs[i][j] = v;
                    pairs[j][i] = v;
                }
            }
            // Sites large enough to guarantee stability on every subset.
            let sites: Vec<f64> = (0..n)
                .map(|i| {
                    (0..n)
                        .filter(|&j| j != i)
                        .map(|j| 0.5 * pairs[i.min(j)][i.max(j)].abs())
                        .sum::<f64>()
                        + rng.gen_range(0.0..0.3)
                })
                .collect();
            let (lhs, rhs, stable) = tree_graph_inequality(&sites, &pairs);
            assert!(stable);
            assert!(
                lhs <= rhs * (1.0 + 1e-12),
                "inequality violated: lhs = {lhs}, rhs = {rhs}"
            );
        }
    }
}
