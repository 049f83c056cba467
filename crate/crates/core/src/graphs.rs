//! Half-edge combinatorics: flowers, matchings, multigraphs, automorphism
//! orders by orbit counting, and connectivity structure (bridges, 1PI
//! pieces, skeleton trees).
//!
//! A profile lists internal "flowers" (a vertex with i outgoing half-edges)
//! plus labeled external legs. A matching is a fixed-point-free involution
//! on the half-edge set; gluing along it produces a multigraph. The group
//! G = prod_i (S_{n_i} x S_i^{n_i}) of flower-preserving permutations acts
//! on matchings; |Aut(Gamma)| is the stabilizer order, computed as
//! |G| / #(matchings producing Gamma).

use crate::scalar::{factorial, Rat};
use num_bigint::BigInt;
use num_traits::One;
use std::collections::HashMap;

/// Internal flowers (one entry per vertex, valency each) plus labeled legs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowerProfile {
    /// Valency of each internal vertex, sorted ascending.
    pub valencies: Vec<usize>,
    pub external_legs: usize,
}

impl FlowerProfile {
    /// Build from a valency -> count map.
    pub fn from_counts(counts: &[(usize, usize)], external_legs: usize) -> Self {
        let mut valencies = Vec::new();
        for &(val, cnt) in counts {
            for _ in 0..cnt {
                valencies.push(val);
            }
        }
        valencies.sort_unstable();
        FlowerProfile { valencies, external_legs }
    }

    pub fn internal_half_edges(&self) -> usize {
        self.valencies.iter().sum()
    }

    pub fn total_half_edges(&self) -> usize {
        self.internal_half_edges() + self.external_legs
    }

    /// Vertex owning each half-edge index (internal half-edges first,
    /// flower by flower, then external legs).
    pub fn owner_table(&self) -> Vec<End> {
        let mut owners = Vec::with_capacity(self.total_half_edges());
        for (v, &val) in self.valencies.iter().enumerate() {
            for _ in 0..val {
                owners.push(End::Internal(v));
            }
        }
        for leg in 0..self.external_legs {
            owners.push(End::External(leg));
        }
        owners
    }

    /// |G| = prod_i i!^{n_i} n_i! for the flower-preserving group
    /// (external legs are labeled and contribute nothing).
    pub fn group_order(&self) -> BigInt {
        let mut acc = BigInt::one();
        let mut run_val = usize::MAX;
        let mut run_len = 0usize;
        for &v in self.valencies.iter().chain(std::iter::once(&usize::MAX)) {
            if v == run_val {
                run_len += 1;
            } else {
                if run_len > 0 {
                    acc *= factorial(run_len);
                }
                run_val = v;
                run_len = 1;
            }
        }
        for &v in &self.valencies {
            acc *= factorial(v);
        }
        acc
    }
}

/// An endpoint of an edge: an internal vertex or a labeled external leg.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum End {
    Internal(usize),
    External(usize),
}

impl End {
    fn code(&self, n_internal: usize) -> u32 {
        match self {
            End::Internal(v) => *v as u32,
            End::External(l) => (n_internal + l) as u32,
        }
    }
}

/// Matching = involution without fixed points, stored as partner table.
pub type Matching = Vec<usize>;

/// Enumerate all matchings of `0..total` in the deterministic order: the
/// smallest unmatched index is paired with each larger unmatched index in
/// increasing order, recursing. Returns false (and visits nothing) when
/// `total` is odd.
pub fn for_each_matching<F: FnMut(&Matching)>(total: usize, mut f: F) -> bool {
    if total % 2 != 0 {
        return false;
    }
    let mut partner: Matching = vec![usize::MAX; total];
    fn rec<F: FnMut(&Matching)>(partner: &mut Matching, f: &mut F) {
        let i = match partner.iter().position(|&p| p == usize::MAX) {
            None => {
                f(partner);
                return;
            }
            Some(i) => i,
        };
        for j in i + 1..partner.len() {
            if partner[j] == usize::MAX {
                partner[i] = j;
                partner[j] = i;
                rec(partner, f);
                partner[i] = usize::MAX;
                partner[j] = usize::MAX;
            }
        }
    }
    rec(&mut partner, &mut f);
    true
}

/// Count matchings without visiting them: (total-1)!!.
pub fn matching_count(total: usize) -> BigInt {
    if total % 2 != 0 {
        return BigInt::from(0u8);
    }
    crate::scalar::double_factorial(total as i64 - 1)
}

/// A multigraph with labeled external legs; loops and parallel edges allowed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Multigraph {
    /// Valency of each internal vertex (as built from its flower).
    pub valencies: Vec<usize>,
    pub external_legs: usize,
    /// Unordered edges as normalized (min, max) endpoint pairs, sorted.
    pub edges: Vec<(End, End)>,
}

impl Multigraph {
    pub fn new(valencies: Vec<usize>, external_legs: usize, mut edges: Vec<(End, End)>) -> Self {
        for e in &mut edges {
            if e.1 < e.0 {
                std::mem::swap(&mut e.0, &mut e.1);
            }
        }
        edges.sort_unstable();
        Multigraph { valencies, external_legs, edges }
    }

    /// Glue a matching of the profile's half-edges into a multigraph.
    pub fn from_matching(profile: &FlowerProfile, m: &Matching) -> Self {
        let owners = profile.owner_table();
        let mut edges = Vec::with_capacity(m.len() / 2);
        for (i, &j) in m.iter().enumerate() {
            if i < j {
                edges.push((owners[i], owners[j]));
            }
        }
        Multigraph::new(profile.valencies.clone(), profile.external_legs, edges)
    }

    /// Number of edges minus number of internal vertices (the loop number
    /// grading of the expansion).
    pub fn loop_grading(&self) -> isize {
        self.edges.len() as isize - self.valencies.len() as isize
    }

    /// First Betti number of the graph viewed with external legs included:
    /// edges - vertices + components.
    pub fn betti(&self) -> isize {
        let s = self.structure();
        self.edges.len() as isize - (self.valencies.len() + self.external_legs) as isize
            + s.component_count as isize
    }

    pub fn profile(&self) -> FlowerProfile {
        let mut valencies = self.valencies.clone();
        valencies.sort_unstable();
        FlowerProfile { valencies, external_legs: self.external_legs }
    }

    /// Isomorphism certificate: the lexicographically least edge list over
    /// all relabelings of internal vertices that preserve valency (external
    /// legs stay fixed). Two graphs over the same profile get equal
    /// certificates iff they are isomorphic.
    pub fn canonical_form(&self) -> Certificate {
        let n = self.valencies.len();
        // group vertices by valency; only same-valency vertices may swap
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&v| self.valencies[v]);
        let mut classes: Vec<Vec<usize>> = Vec::new();
        for &v in &order {
            match classes.last() {
                Some(c) if self.valencies[c[0]] == self.valencies[v] => {
                    classes.last_mut().unwrap().push(v)
                }
                _ => classes.push(vec![v]),
            }
        }
        let raw: Vec<(u32, u32)> =
            self.edges.iter().map(|e| (e.0.code(n), e.1.code(n))).collect();
        let mut best: Option<Vec<(u32, u32)>> = None;
        // iterate over the product of permutations of each class
        let mut perm: Vec<u32> = (0..(n + self.external_legs) as u32).collect();
        permute_classes(&classes, &mut |assignment| {
            for &(slot, v) in assignment {
                perm[v] = slot as u32;
            }
            let mut relabeled: Vec<(u32, u32)> = raw
                .iter()
                .map(|&(a, b)| {
                    let (x, y) = (perm[a as usize], perm[b as usize]);
                    (x.min(y), x.max(y))
                })
                .collect();
            relabeled.sort_unstable();
            if best.as_ref().map_or(true, |b| relabeled < *b) {
                best = Some(relabeled);
            }
        });
        Certificate {
            valencies: {
                let mut v = self.valencies.clone();
                v.sort_unstable();
                v
            },
            external_legs: self.external_legs,
            edges: best.unwrap_or_default(),
        }
    }

    /// Connectivity, bridges, 1PI flag and skeleton decomposition.
    pub fn structure(&self) -> Structure {
        let n_int = self.valencies.len();
        let n = n_int + self.external_legs;
        // adjacency with edge ids
        let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
        for (eid, e) in self.edges.iter().enumerate() {
            let a = e.0.code(n_int) as usize;
            let b = e.1.code(n_int) as usize;
            if a == b {
                continue; // self-loops are never bridges and do not affect connectivity
            }
            adj[a].push((b, eid));
            adj[b].push((a, eid));
        }
        // connected components over all vertices touched by the graph
        let mut comp = vec![usize::MAX; n];
        let mut n_comp = 0;
        for start in 0..n {
            if comp[start] != usize::MAX {
                continue;
            }
            comp[start] = n_comp;
            let mut stack = vec![start];
            while let Some(v) = stack.pop() {
                for &(w, _) in &adj[v] {
                    if comp[w] == usize::MAX {
                        comp[w] = n_comp;
                        stack.push(w);
                    }
                }
            }
            n_comp += 1;
        }
        // bridges by iterative DFS low-link, skipping the entering edge id
        let mut disc = vec![usize::MAX; n];
        let mut low = vec![0usize; n];
        let mut bridges: Vec<usize> = Vec::new();
        let mut timer = 0usize;
        for start in 0..n {
            if disc[start] != usize::MAX {
                continue;
            }
            // stack entries: (vertex, incoming edge id, next adjacency index)
            let mut stack: Vec<(usize, usize, usize)> = vec![(start, usize::MAX, 0)];
            disc[start] = timer;
            low[start] = timer;
            timer += 1;
            while let Some(&mut (v, in_eid, ref mut idx)) = stack.last_mut() {
                if *idx < adj[v].len() {
                    let (w, eid) = adj[v][*idx];
                    *idx += 1;
                    if eid == in_eid {
                        continue;
                    }
                    if disc[w] == usize::MAX {
                        disc[w] = timer;
                        low[w] = timer;
                        timer += 1;
                        stack.push((w, eid, 0));
                    } else {
                        low[v] = low[v].min(disc[w]);
                    }
                } else {
                    stack.pop();
                    if let Some(&mut (parent, _, _)) = stack.last_mut() {
                        low[parent] = low[parent].min(low[v]);
                        if low[v] > disc[parent] {
                            bridges.push(in_eid);
                        }
                    }
                }
            }
        }
        bridges.sort_unstable();

        let connected = n_comp == 1 && n > 0;
        // 1PI per convention: look at the amputated graph (drop external
        // legs and their edges). A single internal vertex is 1PI; an
        // edge between externals with no internal vertex is not.
        let is_1pi = if n_int == 0 {
            false
        } else if n_int == 1 {
            connected
        } else {
            let internal_bridge = bridges.iter().any(|&eid| {
                let e = &self.edges[eid];
                matches!((e.0, e.1), (End::Internal(_), End::Internal(_)))
            });
            connected && !internal_bridge
        };

        let skeleton = self.skeleton(&bridges);
        Structure {
            connected,
            component_count: n_comp,
            bridges,
            is_1pi,
            skeleton,
        }
    }

    fn skeleton(&self, bridges: &[usize]) -> SkeletonTree {
        let n_int = self.valencies.len();
        let n = n_int + self.external_legs;
        let is_bridge = {
            let mut b = vec![false; self.edges.len()];
            for &eid in bridges {
                b[eid] = true;
            }
            b
        };
        // components of the bridge-deleted graph
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (eid, e) in self.edges.iter().enumerate() {
            if is_bridge[eid] {
                continue;
            }
            let a = e.0.code(n_int) as usize;
            let b = e.1.code(n_int) as usize;
            if a != b {
                adj[a].push(b);
                adj[b].push(a);
            }
        }
        let mut piece = vec![usize::MAX; n];
        let mut pieces: Vec<SkeletonPiece> = Vec::new();
        for start in 0..n {
            if piece[start] != usize::MAX {
                continue;
            }
            let id = pieces.len();
            piece[start] = id;
            let mut members = vec![start];
            let mut stack = vec![start];
            while let Some(v) = stack.pop() {
                for &w in &adj[v] {
                    if piece[w] == usize::MAX {
                        piece[w] = id;
                        members.push(w);
                        stack.push(w);
                    }
                }
            }
            members.sort_unstable();
            pieces.push(SkeletonPiece { vertices: members, edges: Vec::new() });
        }
        for (eid, e) in self.edges.iter().enumerate() {
            if !is_bridge[eid] {
                let a = e.0.code(n_int) as usize;
                pieces[piece[a]].edges.push(eid);
            }
        }
        let tree_edges = bridges
            .iter()
            .map(|&eid| {
                let e = &self.edges[eid];
                (piece[e.0.code(n_int) as usize], piece[e.1.code(n_int) as usize], eid)
            })
            .collect();
        SkeletonTree { pieces, bridges: tree_edges }
    }
}

/// Canonical certificate; equality is graph isomorphism (fixing externals).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Certificate {
    pub valencies: Vec<usize>,
    pub external_legs: usize,
    pub edges: Vec<(u32, u32)>,
}

impl Certificate {
    /// Canonical edge-list text form, e.g. `3,3;1|0-1 0-1 0-1`.
    pub fn text(&self) -> String {
        let vals: Vec<String> = self.valencies.iter().map(|v| v.to_string()).collect();
        let edges: Vec<String> = self
            .edges
            .iter()
            .map(|&(a, b)| {
                let fmtend = |x: u32| {
                    if (x as usize) < self.valencies.len() {
                        format!("{}", x)
                    } else {
                        format!("e{}", x as usize - self.valencies.len())
                    }
                };
                format!("{}-{}", fmtend(a), fmtend(b))
            })
            .collect();
        format!("{};{}|{}", vals.join(","), self.external_legs, edges.join(" "))
    }
}

fn permute_classes<F: FnMut(&[(usize, usize)])>(classes: &[Vec<usize>], f: &mut F) {
    // Enumerate the product over classes of all bijections class -> class
    // slots; assignment pairs are (target slot, original vertex).
    fn rec<F: FnMut(&[(usize, usize)])>(
        classes: &[Vec<usize>],
        ci: usize,
        acc: &mut Vec<(usize, usize)>,
        f: &mut F,
    ) {
        if ci == classes.len() {
            f(acc);
            return;
        }
        let class = &classes[ci];
        let mut idx: Vec<usize> = (0..class.len()).collect();
        permutations(&mut idx, &mut |perm| {
            let base = acc.len();
            for (slot_i, &orig_i) in perm.iter().enumerate() {
                acc.push((class[slot_i], class[orig_i]));
            }
            rec(classes, ci + 1, acc, f);
            acc.truncate(base);
        });
    }
    let mut acc = Vec::new();
    rec(classes, 0, &mut acc, f);
}

/// Heap's algorithm over a scratch vector.
pub fn permutations<T: Clone, F: FnMut(&[T])>(items: &mut [T], f: &mut F) {
    fn heap<T: Clone, F: FnMut(&[T])>(k: usize, items: &mut [T], f: &mut F) {
        if k <= 1 {
            f(items);
            return;
        }
        for i in 0..k {
            heap(k - 1, items, f);
            if k % 2 == 0 {
                items.swap(i, k - 1);
            } else {
                items.swap(0, k - 1);
            }
        }
    }
    let n = items.len();
    heap(n, items, f);
}

#[derive(Debug, Clone)]
pub struct Structure {
    pub connected: bool,
    pub component_count: usize,
    /// Edge indices (into `Multigraph::edges`) that are bridges.
    pub bridges: Vec<usize>,
    pub is_1pi: bool,
    pub skeleton: SkeletonTree,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkeletonPiece {
    /// Vertex codes (internal index, or n_internal + leg for externals).
    pub vertices: Vec<usize>,
    /// Non-bridge edge ids contained in this piece.
    pub edges: Vec<usize>,
}

/// Tree of bridgeless pieces joined by the bridges of the source graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkeletonTree {
    pub pieces: Vec<SkeletonPiece>,
    /// (piece a, piece b, bridge edge id)
    pub bridges: Vec<(usize, usize, usize)>,
}

impl SkeletonTree {
    /// Rebuild the edge-id set of the source graph: every edge appears in
    /// exactly one piece or as exactly one tree bridge.
    pub fn reassembled_edge_ids(&self) -> Vec<usize> {
        let mut ids: Vec<usize> = self
            .pieces
            .iter()
            .flat_map(|p| p.edges.iter().copied())
            .chain(self.bridges.iter().map(|b| b.2))
            .collect();
        ids.sort_unstable();
        ids
    }
}

/// Census of the isomorphism classes produced by all matchings of a profile.
pub struct MatchingCensus {
    pub profile: FlowerProfile,
    /// canonical certificate -> (representative graph, number of matchings)
    pub classes: HashMap<Certificate, (Multigraph, BigInt)>,
    pub total_matchings: BigInt,
}

/// Enumerate all matchings of the profile and group them by isomorphism
/// class. |Aut| of each class is group_order / matching count.
pub fn matching_census(profile: &FlowerProfile) -> MatchingCensus {
    let total = profile.total_half_edges();
    let mut classes: HashMap<Certificate, (Multigraph, BigInt)> = HashMap::new();
    // cache: raw sorted edge list -> certificate (avoids re-minimizing)
    let mut canon_cache: HashMap<Vec<(End, End)>, Certificate> = HashMap::new();
    let mut count = BigInt::from(0u8);
    for_each_matching(total, |m| {
        count += 1u8;
        let g = Multigraph::from_matching(profile, m);
        let cert = canon_cache.entry(g.edges.clone()).or_insert_with(|| g.canonical_form()).clone();
        match classes.get_mut(&cert) {
            Some(entry) => entry.1 += 1u8,
            None => {
                classes.insert(cert, (g, BigInt::one()));
            }
        }
    });
    MatchingCensus { profile: profile.clone(), classes, total_matchings: count }
}

/// |Aut| of a multigraph, by the orbit count over matchings of its profile.
pub fn aut_order(g: &Multigraph) -> BigInt {
    let profile = g.profile();
    let census = matching_census(&profile);
    let cert = g.canonical_form();
    let (_, n_gamma) = census
        .classes
        .get(&cert)
        .expect("graph must be realizable by a matching of its own profile");
    profile.group_order() / n_gamma
}

/// Weighted count over isomorphism classes of graphs with `n` vertices and
/// `k` edges (all valencies allowed): sum over classes of 1/|Aut|, with
/// each |Aut| computed by stabilizer enumeration inside S_n x (S_2 wr S_k).
pub fn weighted_graph_count(n: usize, k: usize) -> Rat {
    if n == 0 {
        return if k == 0 { Rat::one() } else { Rat::from_integer(0.into()) };
    }
    // maps: each of the k edges has two endpoints mapped into n vertices
    let mut reps: HashMap<Vec<(u32, u32)>, Vec<(u32, u32)>> = HashMap::new();
    let total = n.pow(2 * k as u32);
    for code in 0..total {
        let mut c = code;
        let mut edges: Vec<(u32, u32)> = Vec::with_capacity(k);
        for _ in 0..k {
            let a = (c % n) as u32;
            c /= n;
            let b = (c % n) as u32;
            c /= n;
            edges.push((a.min(b), a.max(b)));
        }
        edges.sort_unstable();
        let canon = canonical_edge_multiset(&edges, n);
        reps.entry(canon).or_insert(edges);
    }
    let mut acc = Rat::from_integer(0.into());
    for (_, rep) in reps {
        let aut = edge_multiset_stabilizer_order(&rep, n, k);
        acc += Rat::new(BigInt::one(), aut);
    }
    acc
}

fn canonical_edge_multiset(edges: &[(u32, u32)], n: usize) -> Vec<(u32, u32)> {
    let mut best: Option<Vec<(u32, u32)>> = None;
    let mut perm: Vec<u32> = (0..n as u32).collect();
    permutations(&mut perm, &mut |p| {
        let mut relabeled: Vec<(u32, u32)> = edges
            .iter()
            .map(|&(a, b)| {
                let (x, y) = (p[a as usize], p[b as usize]);
                (x.min(y), x.max(y))
            })
            .collect();
        relabeled.sort_unstable();
        if best.as_ref().map_or(true, |b| relabeled < *b) {
            best = Some(relabeled);
        }
    });
    best.unwrap_or_default()
}

/// Order of the stabilizer of a half-edge-to-vertex map inside
/// S_n x (S_2 wr S_k), by direct enumeration (desk scale only).
fn edge_multiset_stabilizer_order(edges: &[(u32, u32)], n: usize, k: usize) -> BigInt {
    let mut stab = BigInt::from(0u8);
    let mut vperm: Vec<u32> = (0..n as u32).collect();
    permutations(&mut vperm, &mut |vp| {
        // edges after vertex relabeling, still as unordered pairs
        let mut relabeled: Vec<(u32, u32)> = edges
            .iter()
            .map(|&(a, b)| {
                let (x, y) = (vp[a as usize], vp[b as usize]);
                (x.min(y), x.max(y))
            })
            .collect();
        relabeled.sort_unstable();
        let mut sorted_orig = edges.to_vec();
        sorted_orig.sort_unstable();
        if relabeled != sorted_orig {
            return;
        }
        // count elements of S_2 wr S_k fixing the labeled map given this
        // vertex permutation: permutations of identical edges, times 2 per
        // flip-symmetric (loop) edge, times 2 per... precisely:
        // multiplicity! for each repeated unordered pair, and 2 for each loop.
        let mut contrib = BigInt::one();
        let mut i = 0;
        while i < relabeled.len() {
            let mut j = i;
            while j < relabeled.len() && relabeled[j] == relabeled[i] {
                j += 1;
            }
            contrib *= factorial(j - i);
            i = j;
        }
        for &(a, b) in &relabeled {
            if a == b {
                contrib *= 2u8;
            }
        }
        stab += contrib;
    });
    debug_assert_eq!(k, edges.len());
    stab
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, rat};
    use num_traits::ToPrimitive;

    fn profile(counts: &[(usize, usize)], legs: usize) -> FlowerProfile {
        FlowerProfile::from_counts(counts, legs)
    }

    #[test]
    fn matching_counts_double_factorial() {
        for k in 1..=8usize {
            let mut n = 0u64;
            for_each_matching(2 * k, |_| n += 1);
            assert_eq!(BigInt::from(n), matching_count(2 * k));
        }
        // odd set: flagged, no matchings
        let mut n = 0;
        assert!(!for_each_matching(5, |_| n += 1));
        assert_eq!(n, 0);
    }

    #[test]
    fn matching_order_deterministic() {
        let mut all: Vec<Matching> = Vec::new();
        for_each_matching(4, |m| all.push(m.clone()));
        assert_eq!(all.len(), 3);
        // first: (01)(23), then (02)(13), then (03)(12)
        assert_eq!(all[0], vec![1, 0, 3, 2]);
        assert_eq!(all[1], vec![2, 3, 0, 1]);
        assert_eq!(all[2], vec![3, 2, 1, 0]);
    }

    #[test]
    fn single_two_valent_flower_gives_loop() {
        let p = profile(&[(2, 1)], 0);
        let mut graphs = Vec::new();
        for_each_matching(p.total_half_edges(), |m| graphs.push(Multigraph::from_matching(&p, m)));
        assert_eq!(graphs.len(), 1);
        let g = &graphs[0];
        assert_eq!(g.edges, vec![(End::Internal(0), End::Internal(0))]);
        assert_eq!(g.loop_grading(), 0);
    }

    #[test]
    fn theta_graph_aut_is_12() {
        // two 3-valent vertices joined by three parallel edges
        let g = Multigraph::new(
            vec![3, 3],
            0,
            vec![
                (End::Internal(0), End::Internal(1)),
                (End::Internal(0), End::Internal(1)),
                (End::Internal(0), End::Internal(1)),
            ],
        );
        assert_eq!(aut_order(&g), BigInt::from(12));
        let s = g.structure();
        assert!(s.is_1pi);
        assert!(s.bridges.is_empty());
    }

    #[test]
    fn dumbbell_aut_is_8() {
        // two looped vertices joined by an edge
        let g = Multigraph::new(
            vec![3, 3],
            0,
            vec![
                (End::Internal(0), End::Internal(0)),
                (End::Internal(1), End::Internal(1)),
                (End::Internal(0), End::Internal(1)),
            ],
        );
        assert_eq!(aut_order(&g), BigInt::from(8));
        let s = g.structure();
        assert!(s.connected);
        assert_eq!(s.bridges.len(), 1);
        assert!(!s.is_1pi);
        // skeleton: two pieces joined by the bridge
        assert_eq!(s.skeleton.pieces.len(), 2);
        assert_eq!(s.skeleton.bridges.len(), 1);
    }

    #[test]
    fn leg_with_self_loop_aut_is_2() {
        // one 3-valent vertex, one external leg, one self-loop: flip symmetry
        let g = Multigraph::new(
            vec![3],
            1,
            vec![(End::Internal(0), End::Internal(0)), (End::Internal(0), End::External(0))],
        );
        assert_eq!(aut_order(&g), BigInt::from(2));
        assert!(g.structure().is_1pi); // single internal vertex
    }

    #[test]
    fn single_edge_between_legs_not_1pi() {
        let g = Multigraph::new(vec![], 2, vec![(End::External(0), End::External(1))]);
        assert!(!g.structure().is_1pi);
    }

    #[test]
    fn orbit_decomposition_identity() {
        // sum over classes of |G|/|Aut| = total number of matchings,
        // for every profile with <= 10 internal half-edges
        let profiles = [
            profile(&[(3, 2)], 0),
            profile(&[(4, 2)], 0),
            profile(&[(3, 2), (4, 1)], 0),
            profile(&[(4, 1)], 2),
            profile(&[(3, 3)], 1),
            profile(&[(1, 2), (2, 2)], 2),
        ];
        for p in &profiles {
            let census = matching_census(p);
            let total: BigInt = census.classes.values().map(|(_, c)| c.clone()).sum();
            assert_eq!(total, matching_count(p.total_half_edges()), "profile {:?}", p);
            // and each class size divides the group order
            for (g, cnt) in census.classes.values() {
                let go = p.group_order();
                assert_eq!(&go % cnt, BigInt::from(0u8), "graph {:?}", g.edges);
            }
        }
    }

    #[test]
    fn canonical_form_is_orbit_invariant() {
        // BFS closure of a matching under group generators lands entirely in
        // one certificate class; checked exhaustively on a small profile.
        let p = profile(&[(3, 2), (4, 1)], 0);
        let census = matching_census(&p);
        // breadth-first orbit of the first matching under generators:
        // swap the two 3-valent flowers, and transpositions inside flowers.
        let owners = p.owner_table();
        let mut start: Option<Matching> = None;
        for_each_matching(p.total_half_edges(), |m| {
            if start.is_none() {
                start = Some(m.clone());
            }
        });
        let start = start.unwrap();
        let mut gens: Vec<Vec<usize>> = Vec::new();
        let total = p.total_half_edges();
        // in-flower adjacent transpositions
        let mut flower_start = 0;
        for &v in &p.valencies {
            for off in 0..v.saturating_sub(1) {
                let mut t: Vec<usize> = (0..total).collect();
                t.swap(flower_start + off, flower_start + off + 1);
                gens.push(t);
            }
            flower_start += v;
        }
        // swap the two 3-valent flowers wholesale
        {
            let mut t: Vec<usize> = (0..total).collect();
            for off in 0..3 {
                t.swap(off, 3 + off);
            }
            gens.push(t);
        }
        let apply = |g: &Vec<usize>, m: &Matching| -> Matching {
            let mut out = vec![0usize; m.len()];
            for i in 0..m.len() {
                out[g[i]] = g[m[i]];
            }
            out
        };
        let mut seen = std::collections::HashSet::new();
        let mut queue = vec![start.clone()];
        seen.insert(start.clone());
        while let Some(m) = queue.pop() {
            for g in &gens {
                let next = apply(g, &m);
                if seen.insert(next.clone()) {
                    queue.push(next);
                }
            }
        }
        let cert0 = Multigraph::from_matching(&p, &start).canonical_form();
        for m in &seen {
            assert_eq!(Multigraph::from_matching(&p, m).canonical_form(), cert0);
        }
        // the orbit size must equal the census count for this class
        let (_, cnt) = census.classes.get(&cert0).unwrap();
        assert_eq!(BigInt::from(seen.len() as u64), cnt.clone());
        let _ = owners;
    }

    #[test]
    fn weighted_counts_match_closed_form() {
        // sum over classes of 1/|Aut| = n^{2k} / (2^k k! n!)
        for n in 1..=3usize {
            for k in 0..=4usize {
                let got = weighted_graph_count(n, k);
                let denom = Rat::from_integer(
                    BigInt::from(2u8).pow(k as u32) * factorial(k) * factorial(n),
                );
                let expect = Rat::from_integer(BigInt::from(n as u64).pow(2 * k as u32)) / denom;
                assert_eq!(got, expect, "n={} k={}", n, k);
            }
        }
        // spot values from the worked examples
        assert_eq!(weighted_graph_count(1, 1), rat(1, 2));
        assert_eq!(weighted_graph_count(1, 2), rat(1, 8));
        let _ = int(0);
    }

    #[test]
    fn skeleton_reassembly_round_trip() {
        // every connected graph from a modest profile reassembles exactly
        let p = profile(&[(3, 2), (1, 2)], 0);
        let census = matching_census(&p);
        for (g, _) in census.classes.values() {
            let s = g.structure();
            if !s.connected {
                continue;
            }
            let ids = s.skeleton.reassembled_edge_ids();
            let expect: Vec<usize> = (0..g.edges.len()).collect();
            assert_eq!(ids, expect, "graph {:?}", g.edges);
        }
    }

    #[test]
    fn fig6_style_profile_counts() {
        // two 3-valent + one 4-valent flower: 10 half-edges, 945 matchings
        let p = profile(&[(3, 2), (4, 1)], 0);
        assert_eq!(matching_count(p.total_half_edges()).to_u64(), Some(945));
        let census = matching_census(&p);
        let total: BigInt = census.classes.values().map(|(_, c)| c.clone()).sum();
        assert_eq!(total.to_u64(), Some(945));
    }
}
