//! Exact combinatorial reference answers used to validate the spectral routes.

use std::collections::VecDeque;

use super::CycleCounts;
use crate::error::{Error, Result};
use crate::graph::Graph;

/// Largest graph accepted by the cycle enumerator.
pub const MAX_ENUMERATION_NODES: usize = 64;

/// Counts simple 3-, 4- and 5-cycles by depth-first enumeration.
///
/// Each cycle is rooted at its smallest vertex and found once per direction.
pub fn count_cycles_bruteforce(g: &Graph) -> Result<CycleCounts> {
    if g.n() > MAX_ENUMERATION_NODES {
        return Err(Error::TooLarge { n: g.n(), max: MAX_ENUMERATION_NODES });
    }
    let mut counts = [0u64; 6];
    let mut path = Vec::with_capacity(5);
    for s in 0..g.n() {
        path.clear();
        path.push(s);
        extend(g, s, &mut path, &mut counts);
    }
    Ok(CycleCounts { c3: counts[3] / 2, c4: counts[4] / 2, c5: counts[5] / 2 })
}

fn extend(g: &Graph, root: usize, path: &mut Vec<usize>, counts: &mut [u64; 6]) {
    let last = *path.last().unwrap();
    for &w in g.neighbors(last) {
        if w == root && path.len() >= 3 {
            counts[path.len()] += 1;
        } else if w > root && path.len() < 5 && !path.contains(&w) {
            path.push(w);
            extend(g, root, path, counts);
            path.pop();
        }
    }
}

/// `diag(A^k)` by exact integer matrix powers.
pub fn matrix_power_diag(g: &Graph, k: u32) -> Vec<u64> {
    let n = g.n();
    let mut a = vec![0u64; n * n];
    for &(u, v) in g.edges() {
        a[u * n + v] = 1;
        a[v * n + u] = 1;
    }
    let mut p = vec![0u64; n * n];
    for i in 0..n {
        p[i * n + i] = 1;
    }
    for _ in 0..k {
        let mut next = vec![0u64; n * n];
        for i in 0..n {
            for l in 0..n {
                let x = p[i * n + l];
                if x == 0 {
                    continue;
                }
                for j in g.neighbors(l) {
                    next[i * n + j] = next[i * n + j].saturating_add(x);
                }
            }
        }
        p = next;
    }
    (0..n).map(|i| p[i * n + i]).collect()
}

/// BFS labels: `component[v]` and whether a proper 2-colouring exists.
fn bfs(g: &Graph) -> (Vec<usize>, bool) {
    let n = g.n();
    let mut comp = vec![usize::MAX; n];
    let mut color = vec![0u8; n];
    let mut two_colorable = true;
    let mut next = 0;
    for s in 0..n {
        if comp[s] != usize::MAX {
            continue;
        }
        comp[s] = next;
        let mut q = VecDeque::from([s]);
        while let Some(u) = q.pop_front() {
            for &w in g.neighbors(u) {
                if comp[w] == usize::MAX {
                    comp[w] = next;
                    color[w] = 1 - color[u];
                    q.push_back(w);
                } else if color[w] == color[u] {
                    two_colorable = false;
                }
            }
        }
        next += 1;
    }
    (comp, two_colorable)
}

pub fn bipartite_bfs(g: &Graph) -> bool {
    bfs(g).1
}

pub fn component_count_bfs(g: &Graph) -> usize {
    bfs(g).0.into_iter().max().map_or(0, |m| m + 1)
}

pub fn connected_bfs(g: &Graph) -> bool {
    component_count_bfs(g) == 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate, petersen, Family};

    #[test]
    fn known_cycle_counts() {
        let k4 = generate(Family::Complete { n: 4 }).unwrap();
        assert_eq!(count_cycles_bruteforce(&k4).unwrap(), CycleCounts { c3: 4, c4: 3, c5: 0 });
        let c5 = generate(Family::Cycle { n: 5 }).unwrap();
        assert_eq!(count_cycles_bruteforce(&c5).unwrap(), CycleCounts { c3: 0, c4: 0, c5: 1 });
        assert_eq!(count_cycles_bruteforce(&petersen()).unwrap(), CycleCounts { c3: 0, c4: 0, c5: 12 });
        let k5 = generate(Family::Complete { n: 5 }).unwrap();
        // C(5,3), 5*3, 4!/2
        assert_eq!(count_cycles_bruteforce(&k5).unwrap(), CycleCounts { c3: 10, c4: 15, c5: 12 });
    }

    #[test]
    fn too_large_rejected() {
        let g = generate(Family::Path { n: 65 }).unwrap();
        assert!(matches!(count_cycles_bruteforce(&g), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn walk_diagonal() {
        let c4 = generate(Family::Cycle { n: 4 }).unwrap();
        assert_eq!(matrix_power_diag(&c4, 2), vec![2; 4]);
        assert_eq!(matrix_power_diag(&c4, 3), vec![0; 4]);
        assert_eq!(matrix_power_diag(&c4, 0), vec![1; 4]);
    }

    #[test]
    fn bfs_flags() {
        assert!(bipartite_bfs(&generate(Family::Cycle { n: 6 }).unwrap()));
        assert!(!bipartite_bfs(&generate(Family::Cycle { n: 5 }).unwrap()));
        let two = Graph::new(4, &[(0, 1), (2, 3)], None).unwrap();
        assert_eq!(component_count_bfs(&two), 2);
        assert!(!connected_bfs(&two));
    }
}
