//! Head-array dependency trees.
//!
//! A tree over `n` nodes is a slice of parent links where `None` marks the
//! root. Helpers here are shared by annotated sentences and cloze questions.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("expected exactly one root, found {0}")]
    RootCount(usize),
    #[error("node {node} has head {head} outside 0..{len}")]
    HeadOutOfBounds { node: usize, head: usize, len: usize },
    #[error("head links not a tree (cycle through node {0})")]
    Cycle(usize),
}

/// Checks that `heads` forms a single rooted tree and returns the root.
pub fn check_tree(heads: &[Option<usize>]) -> Result<usize, TreeError> {
    let len = heads.len();
    let mut root = None;
    let mut roots = 0;
    for (node, head) in heads.iter().enumerate() {
        match *head {
            None => {
                roots += 1;
                root = Some(node);
            }
            Some(h) if h >= len => return Err(TreeError::HeadOutOfBounds { node, head: h, len }),
            Some(_) => {}
        }
    }
    if roots != 1 {
        return Err(TreeError::RootCount(roots));
    }
    // 0 = unvisited, 1 = on current path, 2 = reaches root
    let mut state = vec![0u8; len];
    for start in 0..len {
        let mut path = Vec::new();
        let mut cur = start;
        loop {
            match state[cur] {
                2 => break,
                1 => return Err(TreeError::Cycle(cur)),
                _ => {}
            }
            state[cur] = 1;
            path.push(cur);
            match heads[cur] {
                Some(h) => cur = h,
                None => break,
            }
        }
        for n in path {
            state[n] = 2;
        }
    }
    Ok(root.expect("one root counted"))
}

/// Children of every node, each list in ascending (surface) order.
pub fn children(heads: &[Option<usize>]) -> Vec<Vec<usize>> {
    let mut kids = vec![Vec::new(); heads.len()];
    for (node, head) in heads.iter().enumerate() {
        if let Some(h) = *head {
            kids[h].push(node);
        }
    }
    kids
}

/// All nodes of the subtree rooted at `node`, sorted.
pub fn subtree(kids: &[Vec<usize>], node: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut stack = vec![node];
    while let Some(n) = stack.pop() {
        out.push(n);
        stack.extend(kids[n].iter().copied());
    }
    out.sort_unstable();
    out
}

/// Distance from each node to the root. Assumes a valid tree.
pub fn depths(heads: &[Option<usize>]) -> Vec<usize> {
    let mut memo: Vec<Option<usize>> = vec![None; heads.len()];
    for start in 0..heads.len() {
        let mut path = Vec::new();
        let mut cur = start;
        let base = loop {
            if let Some(d) = memo[cur] {
                break d;
            }
            match heads[cur] {
                None => {
                    memo[cur] = Some(0);
                    break 0;
                }
                Some(h) => {
                    path.push(cur);
                    cur = h;
                }
            }
        };
        for (k, n) in path.iter().rev().enumerate() {
            memo[*n] = Some(base + k + 1);
        }
    }
    memo.into_iter().map(|d| d.unwrap_or(0)).collect()
}

/// Path from `node` up to the root, inclusive at both ends.
pub fn path_to_root(heads: &[Option<usize>], node: usize) -> Vec<usize> {
    let mut path = vec![node];
    let mut cur = node;
    while let Some(h) = heads[cur] {
        path.push(h);
        cur = h;
    }
    path
}
