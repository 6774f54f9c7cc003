//! d-collapse: the simultaneous round operator `R`, the core `R_∞`, and
//! detection of `∂Δ_{d+1}` subcomplexes.

use rand::Rng;

use crate::complex::{Complex, Face, Incidence, Simplex, Vertex};
use crate::sampler::rng_from_seed;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoreResult {
    /// The simplices of `R_∞(Y)`.
    pub core: Complex,
    /// Simultaneous rounds until the fixpoint. For [`core_sequential`] this
    /// counts single-simplex removals instead.
    pub rounds: usize,
    pub collapsible: bool,
    /// `f_d` of the core.
    pub r: usize,
}

impl CoreResult {
    fn new(core: Complex, rounds: usize) -> Self {
        let r = core.f_d();
        CoreResult {
            core,
            rounds,
            collapsible: r == 0,
            r,
        }
    }
}

/// `R(Y)`: removes every free face together with the simplex containing it.
pub fn collapse_round(y: &Complex) -> Complex {
    collapse_round_except(y, None)
}

/// [`collapse_round`] with one face that is never treated as free.
pub fn collapse_round_except(y: &Complex, protected: Option<&Face>) -> Complex {
    let inc = Incidence::build(y);
    let protected = protected.and_then(|f| inc.face_id(f));
    let mut doomed = vec![false; y.f_d()];
    for f in 0..inc.num_faces() {
        if inc.degree[f] == 1 && Some(f) != protected {
            doomed[inc.cofaces(f)[0] as usize] = true;
        }
    }
    y.filtered(|s| !doomed[s])
}

/// Round-tagged worklist peel. Returns the surviving-simplex mask and the
/// number of simultaneous rounds that removed something.
fn peel_rounds(inc: &Incidence, m: usize, protected: Option<usize>) -> (Vec<bool>, usize) {
    let mut alive = vec![true; m];
    let mut degree = inc.degree.clone();
    let mut frontier: Vec<u32> = (0..inc.num_faces())
        .filter(|&f| degree[f] == 1 && Some(f) != protected)
        .map(|f| f as u32)
        .collect();
    let mut next = Vec::new();
    let mut doomed = Vec::new();
    let mut rounds = 0;

    while !frontier.is_empty() {
        // gather against the state at the start of the round
        doomed.clear();
        for &f in &frontier {
            let f = f as usize;
            if degree[f] != 1 {
                continue;
            }
            let s = *inc
                .cofaces(f)
                .iter()
                .find(|&&s| alive[s as usize])
                .expect("free face has a live coface");
            doomed.push(s);
        }
        if doomed.is_empty() {
            break;
        }
        rounds += 1;
        next.clear();
        for &s in &doomed {
            let s = s as usize;
            if !alive[s] {
                continue;
            }
            alive[s] = false;
            for &g in inc.faces_of_simplex(s) {
                let g = g as usize;
                degree[g] -= 1;
                if degree[g] == 1 && Some(g) != protected {
                    next.push(g as u32);
                }
            }
        }
        std::mem::swap(&mut frontier, &mut next);
    }
    (alive, rounds)
}

/// `R_∞(Y)` with the number of rounds `R` needed to reach it.
pub fn core(y: &Complex) -> CoreResult {
    let inc = Incidence::build(y);
    let (alive, rounds) = peel_rounds(&inc, y.f_d(), None);
    CoreResult::new(y.filtered(|s| alive[s]), rounds)
}

/// Peels one uniformly chosen free face at a time until none is left.
pub fn core_sequential(y: &Complex, order_seed: u64) -> CoreResult {
    const NONE: u32 = u32::MAX;
    let inc = Incidence::build(y);
    let nf = inc.num_faces();
    let mut rng = rng_from_seed(order_seed);
    let mut alive = vec![true; y.f_d()];
    let mut degree = inc.degree.clone();
    let mut pos = vec![NONE; nf];
    let mut free: Vec<u32> = Vec::new();

    fn insert(free: &mut Vec<u32>, pos: &mut [u32], f: usize) {
        pos[f] = free.len() as u32;
        free.push(f as u32);
    }
    fn remove(free: &mut Vec<u32>, pos: &mut [u32], f: usize) {
        let i = pos[f] as usize;
        let last = *free.last().unwrap();
        free.swap_remove(i);
        if last as usize != f {
            pos[last as usize] = i as u32;
        }
        pos[f] = NONE;
    }

    for f in 0..nf {
        if degree[f] == 1 {
            insert(&mut free, &mut pos, f);
        }
    }
    let mut removals = 0;
    while !free.is_empty() {
        let f = free[rng.random_range(0..free.len())] as usize;
        let s = *inc
            .cofaces(f)
            .iter()
            .find(|&&s| alive[s as usize])
            .expect("free face has a live coface") as usize;
        alive[s] = false;
        removals += 1;
        for &g in inc.faces_of_simplex(s) {
            let g = g as usize;
            if degree[g] == 1 {
                remove(&mut free, &mut pos, g);
            }
            degree[g] -= 1;
            if degree[g] == 1 {
                insert(&mut free, &mut pos, g);
            }
        }
    }
    CoreResult::new(y.filtered(|s| alive[s]), removals)
}

/// Vertex sets of the `∂Δ_{d+1}` copies in a complex, each sorted, in lexicographic order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BoundaryList(Vec<Vec<Vertex>>);

impl BoundaryList {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Vec<Vertex>> {
        self.0.iter()
    }

    pub fn as_slice(&self) -> &[Vec<Vertex>] {
        &self.0
    }

    /// Whether `s` lies in one of the listed boundaries.
    pub fn covers(&self, s: &Simplex) -> bool {
        self.0.iter().any(|set| s.is_subset_of(set))
    }
}

fn boundary_sets(y: &Complex, first_only: bool) -> Vec<Vec<Vertex>> {
    let inc = Incidence::build(y);
    let mut found: Vec<Vec<Vertex>> = Vec::new();
    let mut set: Vec<Vertex> = Vec::with_capacity(y.d() + 2);
    let mut sub: Vec<Vertex> = Vec::with_capacity(y.d() + 1);
    for (s, sigma) in y.iter().enumerate() {
        // any (d+2)-set containing sigma must also contain sigma - v0 + v
        let f0 = inc.faces_of_simplex(s)[0] as usize;
        for &t in inc.cofaces(f0) {
            if t as usize == s {
                continue;
            }
            let apex = *y.simplices()[t as usize]
                .vertices()
                .iter()
                .find(|&&v| !sigma.contains(v))
                .expect("distinct cofaces differ by one vertex");
            set.clear();
            set.extend_from_slice(sigma.vertices());
            let at = set.partition_point(|&v| v < apex);
            set.insert(at, apex);
            let all_present = (0..set.len()).all(|skip| {
                sub.clear();
                sub.extend(set.iter().enumerate().filter(|&(i, _)| i != skip).map(|(_, &v)| v));
                y.contains_vertices(&sub)
            });
            if all_present {
                found.push(set.clone());
                if first_only {
                    return found;
                }
            }
        }
    }
    found.sort_unstable();
    found.dedup();
    found
}

pub fn find_boundaries(y: &Complex) -> BoundaryList {
    BoundaryList(boundary_sets(y, false))
}

/// `Y ∈ F_{n,d}`: no `∂Δ_{d+1}` inside.
pub fn in_family_f(y: &Complex) -> bool {
    boundary_sets(y, true).is_empty()
}
