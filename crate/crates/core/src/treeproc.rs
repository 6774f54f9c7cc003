//! The rooted random d-tree process and its pruning dynamics.
//!
//! A tree of depth `k` starts from the root face `[0, .., d-1]`; every face
//! at distance `l < k` from the root receives `Poisson(γ)` fresh cone
//! vertices. Pruning removes, simultaneously, every free face other than the
//! root together with the simplex containing it.

use std::ops::Range;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::Serialize;

use crate::complex::{Complex, Face, Simplex, Vertex};
use crate::sampler::{derive_trial_seed, rng_from_seed, TrialRng};

/// Above this rate Poisson draws switch from inversion to `rand_distr`.
const INVERSION_MAX_RATE: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeParams {
    pub d: usize,
    /// Depth: faces at distance `< k` from the root receive children.
    pub k: usize,
    pub gamma: f64,
    pub seed: u64,
}

/// One d-simplex of the tree: `parent_face ∪ {apex}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeNode {
    pub parent_face: u32,
    pub apex: Vertex,
    /// Distance of the parent face from the root.
    pub level: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct TreeFace {
    vertices: Face,
    level: u32,
    /// The node that created this face; `None` for the root or once that node is pruned.
    parent: Option<u32>,
    /// Nodes coned over this face; contiguous in node order.
    children: Range<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RootedTree {
    d: usize,
    faces: Vec<TreeFace>,
    nodes: Vec<TreeNode>,
    /// `node_faces[i * d .. (i+1) * d]`: faces of node `i` other than its parent face.
    node_faces: Vec<u32>,
    next_vertex: Vertex,
}

const ROOT: usize = 0;

/// Poisson draw by sequential-search inversion of one uniform.
pub fn poisson_inversion(rng: &mut impl Rng, gamma: f64) -> u32 {
    if gamma <= 0.0 {
        return 0;
    }
    if gamma > INVERSION_MAX_RATE {
        return Poisson::new(gamma).expect("positive rate").sample(rng) as u32;
    }
    let u: f64 = rng.random();
    let mut k = 0u32;
    let mut mass = (-gamma).exp();
    let mut cdf = mass;
    while u > cdf && mass > 0.0 {
        k += 1;
        mass *= gamma / k as f64;
        cdf += mass;
    }
    k
}

impl RootedTree {
    /// The bare root face `[0, .., d-1]`.
    pub fn root_only(d: usize) -> Self {
        RootedTree {
            d,
            faces: vec![TreeFace {
                vertices: Face::new(0..d as Vertex),
                level: 0,
                parent: None,
                children: 0..0,
            }],
            nodes: Vec::new(),
            node_faces: Vec::new(),
            next_vertex: d as Vertex,
        }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn root(&self) -> &Face {
        &self.faces[ROOT].vertices
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    /// Number of d-simplices.
    pub fn num_simplices(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_root_only(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Largest face level present.
    pub fn depth(&self) -> u32 {
        self.faces.iter().map(|f| f.level).max().unwrap_or(0)
    }

    pub fn simplex(&self, i: usize) -> Simplex {
        let node = self.nodes[i];
        self.faces[node.parent_face as usize].vertices.cone(node.apex)
    }

    /// Cones `count` fresh vertices over face `f`; `f`'s children must be the newest nodes.
    fn grow(&mut self, f: u32, count: u32, next: &mut Vec<u32>) {
        let start = self.nodes.len() as u32;
        let level = self.faces[f as usize].level;
        for _ in 0..count {
            let apex = self.next_vertex;
            self.next_vertex += 1;
            let id = self.nodes.len() as u32;
            self.nodes.push(TreeNode {
                parent_face: f,
                apex,
                level,
            });
            let base = self.faces[f as usize].vertices.clone();
            for &w in base.vertices() {
                let child = self.faces.len() as u32;
                self.faces.push(TreeFace {
                    vertices: base.swap_vertex(w, apex),
                    level: level + 1,
                    parent: Some(id),
                    children: 0..0,
                });
                self.node_faces.push(child);
                next.push(child);
            }
        }
        self.faces[f as usize].children = start..self.nodes.len() as u32;
    }

    fn faces_of_node(&self, i: usize) -> &[u32] {
        &self.node_faces[i * self.d..(i + 1) * self.d]
    }

    fn degrees(&self, alive: &[bool]) -> Vec<u32> {
        let mut degree = vec![0u32; self.faces.len()];
        for (i, node) in self.nodes.iter().enumerate() {
            if alive[i] {
                degree[node.parent_face as usize] += 1;
                for &f in self.faces_of_node(i) {
                    degree[f as usize] += 1;
                }
            }
        }
        degree
    }

    fn live_coface(&self, f: usize, alive: &[bool]) -> usize {
        let face = &self.faces[f];
        face.parent
            .map(|p| p as usize)
            .filter(|&p| alive[p])
            .or_else(|| face.children.clone().map(|c| c as usize).find(|&c| alive[c]))
            .expect("face of positive degree has a live coface")
    }

    /// Keeps the nodes flagged in `alive` and every face still in use.
    fn retain(&self, alive: &[bool]) -> RootedTree {
        let degree = self.degrees(alive);
        let mut face_map = vec![u32::MAX; self.faces.len()];
        let mut node_map = vec![u32::MAX; self.nodes.len()];
        let mut next_node = 0u32;
        for (i, &a) in alive.iter().enumerate() {
            if a {
                node_map[i] = next_node;
                next_node += 1;
            }
        }
        let mut faces = Vec::new();
        for (f, face) in self.faces.iter().enumerate() {
            if f != ROOT && degree[f] == 0 {
                continue;
            }
            face_map[f] = faces.len() as u32;
            let kept: Vec<u32> = face
                .children
                .clone()
                .filter(|&c| alive[c as usize])
                .map(|c| node_map[c as usize])
                .collect();
            let children = match (kept.first(), kept.last()) {
                (Some(&a), Some(&b)) => a..b + 1,
                _ => 0..0,
            };
            faces.push(TreeFace {
                vertices: face.vertices.clone(),
                level: face.level,
                parent: face.parent.filter(|&p| alive[p as usize]).map(|p| node_map[p as usize]),
                children,
            });
        }
        let mut nodes = Vec::with_capacity(next_node as usize);
        let mut node_faces = Vec::with_capacity(next_node as usize * self.d);
        for (i, node) in self.nodes.iter().enumerate() {
            if alive[i] {
                nodes.push(TreeNode {
                    parent_face: face_map[node.parent_face as usize],
                    ..*node
                });
                node_faces.extend(self.faces_of_node(i).iter().map(|&f| face_map[f as usize]));
            }
        }
        RootedTree {
            d: self.d,
            faces,
            nodes,
            node_faces,
            next_vertex: self.next_vertex,
        }
    }

    /// Number of pruning steps until only the root is left, by a round-tagged worklist.
    pub fn collapse_rounds(&self) -> usize {
        let mut alive = vec![true; self.nodes.len()];
        let mut degree = self.degrees(&alive);
        let mut frontier: Vec<u32> = (1..self.faces.len())
            .filter(|&f| degree[f] == 1)
            .map(|f| f as u32)
            .collect();
        let mut next = Vec::new();
        let mut doomed = Vec::new();
        let mut rounds = 0;
        while !frontier.is_empty() {
            doomed.clear();
            for &f in &frontier {
                if degree[f as usize] == 1 {
                    doomed.push(self.live_coface(f as usize, &alive));
                }
            }
            if doomed.is_empty() {
                break;
            }
            rounds += 1;
            next.clear();
            for &i in &doomed {
                if !alive[i] {
                    continue;
                }
                alive[i] = false;
                let parent = self.nodes[i].parent_face;
                for &g in std::iter::once(&parent).chain(self.faces_of_node(i)) {
                    let g = g as usize;
                    degree[g] -= 1;
                    if degree[g] == 1 && g != ROOT {
                        next.push(g as u32);
                    }
                }
            }
            std::mem::swap(&mut frontier, &mut next);
        }
        debug_assert!(alive.iter().all(|a| !a), "trees always prune to the root");
        rounds
    }

    /// The tree as a complex on `[next_vertex]`.
    pub fn to_complex(&self) -> Complex {
        let simplices = (0..self.nodes.len()).map(|i| self.simplex(i)).collect();
        Complex::new(self.next_vertex, self.d, simplices).expect("tree simplices are distinct")
    }
}

/// Samples `T_d(k, γ)`; vertex ids are allocated in creation order after the root's.
pub fn sample_tree(params: &TreeParams) -> RootedTree {
    assert!(params.d >= 1 && params.gamma >= 0.0);
    let mut rng = rng_from_seed(params.seed);
    let mut tree = RootedTree::root_only(params.d);
    let mut frontier = vec![ROOT as u32];
    let mut next = Vec::new();
    for _ in 0..params.k {
        next.clear();
        for &f in &frontier {
            let j = poisson_inversion(&mut rng, params.gamma);
            tree.grow(f, j, &mut next);
        }
        std::mem::swap(&mut frontier, &mut next);
        if frontier.is_empty() {
            break;
        }
    }
    tree
}

/// One pruning step.
pub fn prune(tree: &RootedTree) -> RootedTree {
    let all = vec![true; tree.nodes.len()];
    let degree = tree.degrees(&all);
    let mut alive = all.clone();
    for f in 1..tree.faces.len() {
        if degree[f] == 1 {
            alive[tree.live_coface(f, &all)] = false;
        }
    }
    tree.retain(&alive)
}

/// Whether at most `k` pruning steps leave only the root.
pub fn collapses_within(tree: &RootedTree, k: usize) -> bool {
    tree.collapse_rounds() <= k
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RhoEstimate {
    pub estimate: f64,
    pub standard_error: f64,
    pub trials: u64,
    pub successes: u64,
}

impl RhoEstimate {
    pub fn from_counts(successes: u64, trials: u64) -> Self {
        let estimate = successes as f64 / trials as f64;
        RhoEstimate {
            estimate,
            standard_error: (estimate * (1.0 - estimate) / trials as f64).sqrt(),
            trials,
            successes,
        }
    }
}

/// Whether a simplex lies within `budget` prunings of removal through its own
/// child faces; offspring are drawn only as far as the answer needs them.
fn simplex_clears(rng: &mut TrialRng, d: usize, gamma: f64, budget: usize) -> bool {
    budget > 0 && (0..d).any(|_| face_clears(rng, d, gamma, budget - 1))
}

/// Whether every simplex coned over a fresh face clears within `budget`.
fn face_clears(rng: &mut TrialRng, d: usize, gamma: f64, budget: usize) -> bool {
    let j = poisson_inversion(rng, gamma);
    (0..j).all(|_| simplex_clears(rng, d, gamma, budget))
}

/// One draw of the event `C_d(k+1, γ)`, sampled lazily.
///
/// A simplex on the root face can only go through one of its child faces,
/// and a child face frees up once all simplices below it are gone, so the
/// simplex goes within `b` steps iff some child face has every child gone
/// within `b - 1`. Every deeper simplex of a depth-`k+1` tree is gone after
/// `k` steps regardless, so the event is that each simplex on the root clears
/// within `k`. Agrees with [`collapses_within`] on materialized trees.
pub fn rho_trial(d: usize, k: usize, gamma: f64, seed: u64, trial: u64) -> bool {
    let mut rng = rng_from_seed(derive_trial_seed(seed, trial));
    face_clears(&mut rng, d, gamma, k)
}

/// Fraction of `T_d(k+1, γ)` draws that prune to the root within `k` steps.
pub fn estimate_rho(d: usize, k: usize, gamma: f64, trials: u64, seed: u64) -> RhoEstimate {
    assert!(trials >= 1);
    let successes = (0..trials).filter(|&t| rho_trial(d, k, gamma, seed, t)).count() as u64;
    RhoEstimate::from_counts(successes, trials)
}

/// [`estimate_rho`] by materializing each tree and pruning it literally.
pub fn estimate_rho_full(d: usize, k: usize, gamma: f64, trials: u64, seed: u64) -> RhoEstimate {
    assert!(trials >= 1);
    let successes = (0..trials)
        .filter(|&t| {
            let tree = sample_tree(&TreeParams {
                d,
                k: k + 1,
                gamma,
                seed: derive_trial_seed(seed, t),
            });
            collapses_within(&tree, k)
        })
        .count() as u64;
    RhoEstimate::from_counts(successes, trials)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collapse::{collapse_round_except, core};
    use crate::constants::rho_recursion;

    fn params(d: usize, k: usize, gamma: f64, seed: u64) -> TreeParams {
        TreeParams { d, k, gamma, seed }
    }

    /// Root plus one cone simplex.
    fn single(d: usize) -> RootedTree {
        let mut tree = RootedTree::root_only(d);
        tree.grow(0, 1, &mut Vec::new());
        tree
    }

    #[test]
    fn degenerate_trees() {
        assert!(sample_tree(&params(2, 5, 0.0, 1)).is_root_only());
        assert!(sample_tree(&params(2, 0, 4.0, 1)).is_root_only());
        let t = sample_tree(&params(3, 0, 4.0, 1));
        assert_eq!(t.root(), &Face::new([0, 1, 2]));
    }

    #[test]
    fn one_level_mean_is_gamma() {
        let runs = 10_000u64;
        let total: usize = (0..runs)
            .map(|t| sample_tree(&params(2, 1, 2.0, derive_trial_seed(5, t))).num_simplices())
            .sum();
        let mean = total as f64 / runs as f64;
        assert!((mean - 2.0).abs() <= 3.0 * (2.0 / runs as f64).sqrt(), "mean {mean}");
    }

    #[test]
    fn levels_and_vertices() {
        let tree = sample_tree(&params(2, 4, 1.5, 77));
        assert!(tree.depth() <= 4);
        let mut apexes: Vec<u32> = tree.nodes().iter().map(|n| n.apex).collect();
        apexes.sort_unstable();
        apexes.dedup();
        assert_eq!(apexes.len(), tree.num_simplices());
        for (i, node) in tree.nodes().iter().enumerate() {
            let face = &tree.faces[node.parent_face as usize];
            assert_eq!(face.level, node.level);
            assert!(tree.simplex(i).is_sorted());
        }
    }

    #[test]
    fn prune_examples() {
        let root = RootedTree::root_only(2);
        assert_eq!(prune(&root), root);
        let one = single(2);
        assert!(prune(&one).is_root_only());
        assert!(collapses_within(&root, 0));
        assert!(!collapses_within(&one, 0));
        assert!(collapses_within(&one, 1));
    }

    #[test]
    fn depth_bounds_prune_count() {
        for seed in 0..200 {
            let k = (seed % 4) as usize;
            let mut tree = sample_tree(&params(2, k + 1, 2.5, seed));
            let fast = tree.collapse_rounds();
            let mut steps = 0;
            while !tree.is_root_only() {
                tree = prune(&tree);
                steps += 1;
            }
            assert_eq!(steps, fast);
            assert!(steps <= k + 1);
        }
    }

    #[test]
    fn prune_matches_protected_collapse_round() {
        for seed in 0..100 {
            let d = 1 + (seed % 3) as usize;
            let tree = sample_tree(&params(d, 3, 1.8, seed));
            let root = tree.root().clone();
            let via_collapse = collapse_round_except(&tree.to_complex(), Some(&root));
            assert_eq!(prune(&tree).to_complex(), via_collapse);
        }
    }

    #[test]
    fn trees_are_collapsible() {
        for seed in 0..50 {
            let tree = sample_tree(&params(2, 4, 2.0, seed));
            assert!(core(&tree.to_complex()).collapsible);
        }
    }

    #[test]
    fn rho_estimates() {
        assert_eq!(estimate_rho(2, 3, 0.0, 100, 1).estimate, 1.0);

        let est = estimate_rho(2, 0, 1.5, 10_000, 3);
        assert!((est.estimate - (-1.5f64).exp()).abs() <= 3.0 * est.standard_error);

        let est = estimate_rho(2, 1, 1.0, 10_000, 4);
        let exact = rho_recursion(2, 1.0, 1).values[1];
        assert!((exact - 0.6706).abs() < 1e-4);
        assert!((est.estimate - exact).abs() <= 3.0 * est.standard_error);

        let est = estimate_rho(2, 5, 2.0, 10_000, 6);
        let exact = rho_recursion(2, 2.0, 5).values[5];
        assert!((est.estimate - exact).abs() <= 3.0 * est.standard_error);
    }

    /// The clearing recursion evaluated on a materialized tree.
    fn root_simplices_clear(tree: &RootedTree, k: usize) -> bool {
        fn simplex(tree: &RootedTree, i: usize, budget: usize) -> bool {
            budget > 0 && tree.faces_of_node(i).iter().any(|&f| face(tree, f as usize, budget - 1))
        }
        fn face(tree: &RootedTree, f: usize, budget: usize) -> bool {
            tree.faces[f].children.clone().all(|c| simplex(tree, c as usize, budget))
        }
        face(tree, ROOT, k)
    }

    #[test]
    fn clearing_recursion_matches_pruning() {
        for seed in 0..3000u64 {
            let d = 1 + (seed % 3) as usize;
            let k = (seed / 3 % 5) as usize;
            let gamma = [0.7, 1.5, 2.5, 3.5][(seed / 15 % 4) as usize];
            let tree = sample_tree(&params(d, k + 1, gamma, seed));
            assert_eq!(root_simplices_clear(&tree, k), collapses_within(&tree, k), "seed {seed}");
        }
    }

    #[test]
    fn lazy_and_full_estimates_agree() {
        for (k, gamma) in [(1, 1.0), (3, 2.0), (2, 3.0)] {
            let lazy = estimate_rho(2, k, gamma, 5000, 21);
            let full = estimate_rho_full(2, k, gamma, 5000, 22);
            let se = (lazy.standard_error.powi(2) + full.standard_error.powi(2)).sqrt();
            assert!((lazy.estimate - full.estimate).abs() <= 4.0 * se, "k={k} gamma={gamma}");
        }
        assert_eq!(estimate_rho_full(2, 2, 0.0, 10, 1).estimate, 1.0);
    }

    #[test]
    fn poisson_inversion_mean() {
        let mut rng = rng_from_seed(9);
        let n = 20_000;
        let sum: u64 = (0..n).map(|_| poisson_inversion(&mut rng, 3.3) as u64).sum();
        let mean = sum as f64 / n as f64;
        assert!((mean - 3.3).abs() <= 4.0 * (3.3 / n as f64).sqrt());
        assert_eq!(poisson_inversion(&mut rng, 0.0), 0);
        let big: u64 = (0..1000).map(|_| poisson_inversion(&mut rng, 50.0) as u64).sum();
        assert!((big as f64 / 1000.0 - 50.0).abs() < 1.5);
    }
}
