//! Structural classification of the support digraph of a stochastic matrix.
//!
//! Edge `i -> j` exists iff entry `(i, j)` is strictly positive. Strongly
//! connected components come from an iterative Tarjan pass; the recurrent
//! classes are the closed components (no edge leaves them), and the period of
//! each recurrent class is the gcd of `level[u] + 1 - level[v]` over its
//! internal edges, with levels taken from a BFS rooted inside the class.

use serde::{Deserialize, Serialize};

/// Validation mode for membership tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Irreducible and aperiodic (full membership in the ergodic class).
    Strict,
    /// Exactly one recurrent class, and that class is aperiodic.
    #[default]
    Relaxed,
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "strict" => Ok(Mode::Strict),
            "relaxed" => Ok(Mode::Relaxed),
            other => Err(format!("unknown mode `{other}` (expected strict|relaxed)")),
        }
    }
}

/// Classification record of a support digraph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Structure {
    pub irreducible: bool,
    pub aperiodic: bool,
    /// Closed communicating classes, each sorted, ordered by smallest state.
    pub recurrent_classes: Vec<Vec<usize>>,
    /// Period of each recurrent class, parallel to `recurrent_classes`.
    pub class_periods: Vec<usize>,
    /// Period of the unique recurrent class; absent when there are several.
    pub period: Option<usize>,
}

impl Structure {
    /// Irreducible and aperiodic.
    pub fn is_ergodic(&self) -> bool {
        self.irreducible && self.aperiodic
    }

    pub fn has_unique_stationary(&self) -> bool {
        self.recurrent_classes.len() == 1
    }

    pub fn satisfies(&self, mode: Mode) -> bool {
        match mode {
            Mode::Strict => self.is_ergodic(),
            Mode::Relaxed => self.has_unique_stationary() && self.aperiodic,
        }
    }
}

/// Classify the digraph given as adjacency lists.
pub fn classify_digraph(adj: &[Vec<usize>]) -> Structure {
    let n = adj.len();
    let (comp, ncomp) = tarjan_scc(adj);

    let mut closed = vec![true; ncomp];
    for (u, edges) in adj.iter().enumerate() {
        for &v in edges {
            if comp[u] != comp[v] {
                closed[comp[u]] = false;
            }
        }
    }

    let mut members: Vec<Vec<usize>> = vec![Vec::new(); ncomp];
    for (v, &c) in comp.iter().enumerate() {
        members[c].push(v);
    }

    let mut recurrent: Vec<Vec<usize>> = members
        .into_iter()
        .enumerate()
        .filter(|(c, _)| closed[*c])
        .map(|(_, m)| m)
        .collect();
    recurrent.sort_by_key(|m| m[0]);

    let class_periods: Vec<usize> = recurrent
        .iter()
        .map(|class| class_period(adj, class, &comp))
        .collect();

    let aperiodic = class_periods.iter().all(|&p| p == 1);
    let period = if recurrent.len() == 1 {
        Some(class_periods[0])
    } else {
        None
    };

    Structure {
        irreducible: ncomp == 1 && n > 0,
        aperiodic,
        recurrent_classes: recurrent,
        class_periods,
        period,
    }
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

fn class_period(adj: &[Vec<usize>], class: &[usize], comp: &[usize]) -> usize {
    let root = class[0];
    let cid = comp[root];
    let mut level = vec![usize::MAX; adj.len()];
    level[root] = 0;
    let mut queue = std::collections::VecDeque::from([root]);
    let mut g = 0usize;
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if comp[v] != cid {
                continue;
            }
            if level[v] == usize::MAX {
                level[v] = level[u] + 1;
                queue.push_back(v);
            } else {
                // BFS levels satisfy level[v] <= level[u] + 1 for any edge.
                g = gcd(g, level[u] + 1 - level[v]);
            }
        }
    }
    // A single state without a self-loop cannot be closed in a stochastic
    // matrix, so g == 0 only occurs for degenerate input.
    g.max(1)
}

/// Iterative Tarjan. Returns the component id of each vertex and the count.
fn tarjan_scc(adj: &[Vec<usize>]) -> (Vec<usize>, usize) {
    let n = adj.len();
    const UNSEEN: usize = usize::MAX;
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::with_capacity(n);
    let mut comp = vec![UNSEEN; n];
    let mut next_index = 0usize;
    let mut ncomp = 0usize;
    // (vertex, next edge position)
    let mut call: Vec<(usize, usize)> = Vec::new();

    for start in 0..n {
        if index[start] != UNSEEN {
            continue;
        }
        call.push((start, 0));
        index[start] = next_index;
        low[start] = next_index;
        next_index += 1;
        stack.push(start);
        on_stack[start] = true;

        while let Some(top) = call.last_mut() {
            let u = top.0;
            if top.1 < adj[u].len() {
                let v = adj[u][top.1];
                top.1 += 1;
                if index[v] == UNSEEN {
                    index[v] = next_index;
                    low[v] = next_index;
                    next_index += 1;
                    stack.push(v);
                    on_stack[v] = true;
                    call.push((v, 0));
                } else if on_stack[v] {
                    low[u] = low[u].min(index[v]);
                }
            } else {
                call.pop();
                if let Some(&(parent, _)) = call.last() {
                    low[parent] = low[parent].min(low[u]);
                }
                if low[u] == index[u] {
                    loop {
                        let w = stack.pop().expect("tarjan stack underflow");
                        on_stack[w] = false;
                        comp[w] = ncomp;
                        if w == u {
                            break;
                        }
                    }
                    ncomp += 1;
                }
            }
        }
    }
    (comp, ncomp)
}
