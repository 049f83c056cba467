//! The expansion engine: partition function, correlators, connected sums,
//! tree and one-loop slices, and the effective action, all as exact series
//! in coupling multi-degrees and powers of hbar.
//!
//! Twin evaluation routes are kept deliberately separate: `Matching` mode
//! sums amplitudes over raw matchings weighted 1/(prod i!^{n_i} n_i!),
//! `Graph` mode sums once per isomorphism class weighted 1/|Aut|. They must
//! agree exactly.

use crate::gaussian::QuadraticForm;
use crate::graphs::{matching_census, End, FlowerProfile, Multigraph};
use crate::la::Mat;
use crate::scalar::{factorial, rat_to_f64, Rat, RatJson};
use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::collections::{BTreeMap, HashMap};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FeynError {
    #[error("quadratic form error: {0}")]
    Gauss(#[from] crate::gaussian::GaussError),
    #[error("tensor rank must equal the coupling valency")]
    RankMismatch,
    #[error("profile exceeds the half-edge budget ({0} half-edges)")]
    Budget(usize),
    #[error("series error: {0}")]
    Series(#[from] crate::series::SeriesError),
    #[error("legendre transform requires a convex sample / invertible quadratic part")]
    NotConvex,
}

/// Dense symmetric tensor of a given rank over R^dim.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTensor {
    pub dim: usize,
    pub rank: usize,
    table: Vec<Rat>,
}

impl SymTensor {
    /// Build from an arbitrary dense table (length dim^rank), symmetrizing.
    pub fn new(dim: usize, rank: usize, table: Vec<Rat>) -> Self {
        assert_eq!(table.len(), dim.pow(rank as u32));
        let mut sym = vec![Rat::zero(); table.len()];
        let mut idx = vec![0usize; rank];
        let mut perm_count = Rat::from_integer(factorial(rank));
        if rank == 0 {
            return SymTensor { dim, rank, table };
        }
        loop {
            // average over permutations of the index tuple
            let mut acc = Rat::zero();
            let mut perm: Vec<usize> = (0..rank).collect();
            let mut n_perms = 0usize;
            crate::graphs::permutations(&mut perm, &mut |p| {
                let mut flat = 0usize;
                for &k in p {
                    flat = flat * dim + idx[k];
                }
                acc += &table[flat];
                n_perms += 1;
            });
            let mut flat = 0usize;
            for &i in &idx {
                flat = flat * dim + i;
            }
            perm_count = Rat::from_integer(BigInt::from(n_perms as u64));
            sym[flat] = acc / &perm_count;
            // advance odometer
            let mut pos = rank;
            loop {
                if pos == 0 {
                    return SymTensor { dim, rank, table: sym };
                }
                pos -= 1;
                idx[pos] += 1;
                if idx[pos] < dim {
                    break;
                }
                idx[pos] = 0;
            }
        }
    }

    /// The monomial tensor whose full contraction is x_0^{a_0} ... :
    /// entries 1 exactly when the index multiset matches `powers`.
    pub fn monomial(dim: usize, powers: &[usize]) -> Self {
        let rank: usize = powers.iter().sum();
        let size = dim.pow(rank as u32);
        let mut table = vec![Rat::zero(); size];
        for flat in 0..size {
            let mut f = flat;
            let mut count = vec![0usize; dim];
            for _ in 0..rank {
                count[f % dim] += 1;
                f /= dim;
            }
            if count == powers {
                table[flat] = Rat::one();
            }
        }
        SymTensor { dim, rank, table }
    }

    pub fn get(&self, idx: &[usize]) -> &Rat {
        let mut flat = 0usize;
        for &i in idx {
            flat = flat * self.dim + i;
        }
        &self.table[flat]
    }

    pub fn set(&mut self, idx: &[usize], v: Rat) {
        let mut flat = 0usize;
        for &i in idx {
            flat = flat * self.dim + i;
        }
        self.table[flat] = v;
    }

    pub fn zero(dim: usize, rank: usize) -> Self {
        SymTensor { dim, rank, table: vec![Rat::zero(); dim.pow(rank as u32)] }
    }

    pub fn symmetrize(self) -> Self {
        SymTensor::new(self.dim, self.rank, self.table)
    }

    pub fn is_zero(&self) -> bool {
        self.table.iter().all(|v| v.is_zero())
    }

    /// Contract `k` slots with the vector `x`, returning a rank-(rank-k) tensor.
    pub fn contract_vec(&self, x: &[Rat], k: usize) -> SymTensor {
        assert!(k <= self.rank);
        let mut cur = self.clone();
        for _ in 0..k {
            let new_rank = cur.rank - 1;
            let mut out = SymTensor::zero(self.dim, new_rank);
            let outer = self.dim.pow(new_rank as u32);
            for flat in 0..outer {
                let mut acc = Rat::zero();
                for last in 0..self.dim {
                    if x[last].is_zero() {
                        continue;
                    }
                    acc += &cur.table[flat * self.dim + last] * &x[last];
                }
                out.table[flat] = acc;
            }
            cur = out;
        }
        cur
    }

    /// Full contraction with rank copies of x.
    pub fn apply(&self, x: &[Rat]) -> Rat {
        self.contract_vec(x, self.rank).table[0].clone()
    }
}

/// A coupled interaction term: g * B_i(x,...,x)/i!.
#[derive(Debug, Clone)]
pub struct Coupling {
    pub symbol: String,
    pub tensor: SymTensor,
}

/// S(x) = B(x,x)/2 - sum_i g_i B_i(x,...,x)/i!.
#[derive(Debug, Clone)]
pub struct Action {
    pub b: QuadraticForm<Rat>,
    /// valency -> coupling
    pub couplings: BTreeMap<usize, Coupling>,
}

impl Action {
    pub fn new(b: Mat<Rat>, couplings: Vec<(usize, &str, SymTensor)>) -> Result<Self, FeynError> {
        let b = QuadraticForm::new(b)?;
        let mut map = BTreeMap::new();
        for (valency, symbol, tensor) in couplings {
            if tensor.rank != valency || tensor.dim != b.dim() {
                return Err(FeynError::RankMismatch);
            }
            map.insert(valency, Coupling { symbol: symbol.to_string(), tensor: tensor.symmetrize() });
        }
        Ok(Action { b, couplings: map })
    }

    pub fn dim(&self) -> usize {
        self.b.dim()
    }
}

/// Multi-degree over coupling symbols plus the hbar exponent
/// (stored doubled so half-integer powers stay integral).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct ExpKey {
    pub degrees: BTreeMap<String, u32>,
    pub hbar2: i64,
}

impl ExpKey {
    pub fn unit() -> Self {
        ExpKey { degrees: BTreeMap::new(), hbar2: 0 }
    }

    pub fn single(symbol: &str, deg: u32, hbar2: i64) -> Self {
        let mut degrees = BTreeMap::new();
        if deg > 0 {
            degrees.insert(symbol.to_string(), deg);
        }
        ExpKey { degrees, hbar2 }
    }

    pub fn total_degree(&self) -> u32 {
        self.degrees.values().sum()
    }

    pub fn merge(&self, other: &Self) -> Self {
        let mut degrees = self.degrees.clone();
        for (s, d) in &other.degrees {
            *degrees.entry(s.clone()).or_insert(0) += d;
        }
        ExpKey { degrees, hbar2: self.hbar2 + other.hbar2 }
    }
}

/// Exact expansion: finitely many (multi-degree, hbar power) terms.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Expansion {
    pub terms: BTreeMap<ExpKey, Rat>,
}

impl Expansion {
    pub fn zero() -> Self {
        Expansion::default()
    }

    pub fn one() -> Self {
        let mut e = Expansion::default();
        e.terms.insert(ExpKey::unit(), Rat::one());
        e
    }

    pub fn add_term(&mut self, key: ExpKey, coeff: Rat) {
        if coeff.is_zero() {
            return;
        }
        let entry = self.terms.entry(key).or_insert_with(Rat::zero);
        *entry += coeff;
        if entry.is_zero() {
            // remove exact cancellations
            let dead: Vec<ExpKey> =
                self.terms.iter().filter(|(_, v)| v.is_zero()).map(|(k, _)| k.clone()).collect();
            for k in dead {
                self.terms.remove(&k);
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (k, v) in &other.terms {
            out.add_term(k.clone(), v.clone());
        }
        out
    }

    pub fn neg(&self) -> Self {
        Expansion { terms: self.terms.iter().map(|(k, v)| (k.clone(), -v)).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &Rat) -> Self {
        if c.is_zero() {
            return Expansion::zero();
        }
        Expansion { terms: self.terms.iter().map(|(k, v)| (k.clone(), v * c)).collect() }
    }

    pub fn mul(&self, other: &Self, degree_cap: u32) -> Self {
        let mut out = Expansion::zero();
        for (k1, v1) in &self.terms {
            for (k2, v2) in &other.terms {
                if k1.total_degree() + k2.total_degree() > degree_cap {
                    continue;
                }
                out.add_term(k1.merge(k2), v1 * v2);
            }
        }
        out
    }

    /// log of an expansion with constant term 1 (in the coupling filtration).
    pub fn log(&self, degree_cap: u32) -> Self {
        let mut t = self.clone();
        let unit = ExpKey::unit();
        assert_eq!(t.terms.get(&unit), Some(&Rat::one()), "log needs constant term 1");
        t.terms.remove(&unit);
        // log(1+T) = sum (-1)^{k+1} T^k / k
        let mut out = Expansion::zero();
        let mut power = Expansion::one();
        for k in 1..=degree_cap.max(1) {
            power = power.mul(&t, degree_cap);
            if power.terms.is_empty() {
                break;
            }
            let sign = if k % 2 == 1 { Rat::one() } else { -Rat::one() };
            out = out.add(&power.scale(&(sign / Rat::from_integer(BigInt::from(k)))));
        }
        out
    }

    /// exp of an expansion with zero constant term.
    pub fn exp(&self, degree_cap: u32) -> Self {
        assert!(self.terms.get(&ExpKey::unit()).is_none(), "exp needs zero constant term");
        let mut out = Expansion::one();
        let mut power = Expansion::one();
        let mut kfact = Rat::one();
        for k in 1..=degree_cap.max(1) {
            power = power.mul(self, degree_cap);
            if power.terms.is_empty() {
                break;
            }
            kfact *= Rat::from_integer(BigInt::from(k));
            out = out.add(&power.scale(&kfact.recip()));
        }
        out
    }

    /// Restrict to terms with the given hbar2 grading.
    pub fn slice_hbar2(&self, hbar2: i64) -> Self {
        Expansion {
            terms: self
                .terms
                .iter()
                .filter(|(k, _)| k.hbar2 == hbar2)
                .map(|(k, v)| {
                    (ExpKey { degrees: k.degrees.clone(), hbar2: 0 }, v.clone())
                })
                .collect(),
        }
    }

    /// Keep only terms of total coupling degree <= cap.
    pub fn truncate_degree(&self, cap: u32) -> Self {
        Expansion {
            terms: self
                .terms
                .iter()
                .filter(|(k, _)| k.total_degree() <= cap)
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
        }
    }

    pub fn coeff(&self, key: &ExpKey) -> Rat {
        self.terms.get(key).cloned().unwrap_or_else(Rat::zero)
    }

    /// Every term must carry an even hbar2 (integral hbar power); the
    /// half-integral bookkeeping has to cancel in reported results.
    pub fn assert_integral_hbar(&self) {
        for k in self.terms.keys() {
            assert!(k.hbar2 % 2 == 0, "half-integral hbar power survived: {:?}", k);
        }
    }

    pub fn eval_f64(&self, couplings: &BTreeMap<String, f64>, hbar: f64) -> f64 {
        let mut acc = 0.0;
        for (k, v) in &self.terms {
            let mut t = rat_to_f64(v) * hbar.powf(k.hbar2 as f64 / 2.0);
            for (s, d) in &k.degrees {
                t *= couplings.get(s).copied().unwrap_or(0.0).powi(*d as i32);
            }
            acc += t;
        }
        acc
    }

    pub fn to_json(&self) -> serde_json::Value {
        let terms: Vec<serde_json::Value> = self
            .terms
            .iter()
            .map(|(k, v)| {
                serde_json::json!({
                    "degrees": k.degrees,
                    "hbar": { "num": k.hbar2.to_string(), "den": "2" },
                    "coeff": RatJson::from(v),
                })
            })
            .collect();
        serde_json::json!({ "terms": terms })
    }
}

/// Which route evaluates the diagram sums.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Matching,
    Graph,
}

/// Which graphs are kept in a sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Filter {
    All,
    Connected,
    /// no component may lack an external leg
    EveryComponentMarked,
    /// connected and 1PI (for the effective action)
    OneParticleIrreducible,
}

const HALF_EDGE_BUDGET: usize = 20;

/// Amplitude of a multigraph: contract vertex tensors along edges with
/// B^{-1}; external leg j carries covector `external[j]`.
fn amplitude(
    g: &Multigraph,
    tensors: &[&SymTensor],
    external: &[Vec<Rat>],
    c_inv: &Mat<Rat>,
) -> Rat {
    let dim = c_inv.n;
    let ne = g.edges.len();
    if ne == 0 {
        return Rat::one();
    }
    // fast integer path when all entries fit
    if let Some(v) = amplitude_i128(g, tensors, external, c_inv) {
        return v;
    }
    // exact rational odometer over index assignments per edge endpoint
    let mut total = Rat::zero();
    let mut assign = vec![0usize; 2 * ne];
    loop {
        // per-vertex collected indices
        let mut per_vertex: Vec<Vec<usize>> = vec![Vec::new(); g.valencies.len()];
        let mut term = Rat::one();
        for (e, edge) in g.edges.iter().enumerate() {
            let (a, b) = (assign[2 * e], assign[2 * e + 1]);
            term *= c_inv.at(a, b);
            for (end, idx) in [(edge.0, a), (edge.1, b)] {
                match end {
                    End::Internal(v) => per_vertex[v].push(idx),
                    End::External(l) => term *= &external[l][idx],
                }
            }
            if term.is_zero() {
                break;
            }
        }
        if !term.is_zero() {
            for (v, idxs) in per_vertex.iter().enumerate() {
                term *= tensors[v].get(idxs);
                if term.is_zero() {
                    break;
                }
            }
            total += term;
        }
        // odometer
        let mut pos = 2 * ne;
        loop {
            if pos == 0 {
                return total;
            }
            pos -= 1;
            assign[pos] += 1;
            if assign[pos] < dim {
                break;
            }
            assign[pos] = 0;
        }
    }
}

/// Integer fast path: exact i128 arithmetic over a common denominator.
fn amplitude_i128(
    g: &Multigraph,
    tensors: &[&SymTensor],
    external: &[Vec<Rat>],
    c_inv: &Mat<Rat>,
) -> Option<Rat> {
    let dim = c_inv.n;
    let ne = g.edges.len();
    if dim.pow(2 * ne as u32) > 40_000_000 {
        return None;
    }
    let scale_table = |vals: Vec<Rat>| -> Option<(Vec<i128>, BigInt)> {
        let mut denom = BigInt::one();
        for v in &vals {
            denom = num_integer::lcm(denom, v.denom().clone());
        }
        let ints: Option<Vec<i128>> = vals
            .iter()
            .map(|v| (v.numer() * &denom / v.denom()).to_i128())
            .collect();
        Some((ints?, denom))
    };
    let (ci, cden) = scale_table((0..dim * dim).map(|k| c_inv.a[k].clone()).collect())?;
    let mut tensor_ints: Vec<(Vec<i128>, BigInt)> = Vec::new();
    for t in tensors {
        tensor_ints.push(scale_table(t.table.clone())?);
    }
    let mut ext_ints: Vec<(Vec<i128>, BigInt)> = Vec::new();
    for l in external {
        ext_ints.push(scale_table(l.clone())?);
    }
    // crude magnitude bound to rule out overflow
    let max_c = ci.iter().map(|x| x.abs()).max().unwrap_or(0).max(1);
    let max_t: i128 = tensor_ints
        .iter()
        .chain(ext_ints.iter())
        .map(|(v, _)| v.iter().map(|x| x.abs()).max().unwrap_or(0))
        .max()
        .unwrap_or(0)
        .max(1);
    let factors = ne + g.valencies.len() + external.len();
    let log_bound = (ne as f64) * (max_c as f64).ln()
        + (factors as f64) * (max_t as f64).ln()
        + (dim as f64 * 2.0 * ne as f64).ln().max(0.0) * 1.0;
    if log_bound > 80.0 * std::f64::consts::LN_2 {
        return None;
    }
    let mut total: i128 = 0;
    let mut assign = vec![0usize; 2 * ne];
    let n_vertices = g.valencies.len();
    let mut per_vertex_flat = vec![0usize; n_vertices];
    loop {
        for f in per_vertex_flat.iter_mut() {
            *f = 0;
        }
        let mut term: i128 = 1;
        for (e, edge) in g.edges.iter().enumerate() {
            let (a, b) = (assign[2 * e], assign[2 * e + 1]);
            term *= ci[a * dim + b];
            if term == 0 {
                break;
            }
            for (end, idx) in [(edge.0, a), (edge.1, b)] {
                match end {
                    End::Internal(v) => per_vertex_flat[v] = per_vertex_flat[v] * dim + idx,
                    End::External(l) => term *= ext_ints[l].0[idx],
                }
            }
        }
        if term != 0 {
            for v in 0..n_vertices {
                term *= tensor_ints[v].0[per_vertex_flat[v]];
                if term == 0 {
                    break;
                }
            }
            total += term;
        }
        let mut pos = 2 * ne;
        let mut done = false;
        loop {
            if pos == 0 {
                done = true;
                break;
            }
            pos -= 1;
            assign[pos] += 1;
            if assign[pos] < dim {
                break;
            }
            assign[pos] = 0;
        }
        if done {
            break;
        }
    }
    // denominator: cden^ne * prod tensor/external denominators
    let mut denom = BigInt::one();
    for _ in 0..ne {
        denom *= &cden;
    }
    // NOTE: per-vertex tensor indices were collected in edge order; the
    // tensors are fully symmetric so order does not matter.
    for (_, d) in tensor_ints.iter() {
        denom *= d;
    }
    for (_, d) in ext_ints.iter() {
        denom *= d;
    }
    Some(Rat::new(BigInt::from(total), denom))
}

fn keeps(filter: Filter, g: &Multigraph) -> bool {
    match filter {
        Filter::All => true,
        Filter::Connected => g.structure().connected,
        Filter::EveryComponentMarked => every_component_has_external(g),
        Filter::OneParticleIrreducible => g.structure().is_1pi,
    }
}

/// True when every connected component of the graph contains at least one
/// external leg (vacuum components excluded).
pub fn every_component_has_external(g: &Multigraph) -> bool {
    if g.external_legs == 0 {
        return g.valencies.is_empty() && g.edges.is_empty();
    }
    // union-find over internal vertices and externals
    let n_int = g.valencies.len();
    let n = n_int + g.external_legs;
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut Vec<usize>, mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let code = |e: &End| match e {
        End::Internal(v) => *v,
        End::External(l) => n_int + l,
    };
    for e in &g.edges {
        let (a, b) = (code(&e.0), code(&e.1));
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra] = rb;
        }
    }
    let mut has_external = vec![false; n];
    for l in 0..g.external_legs {
        let r = find(&mut parent, n_int + l);
        has_external[r] = true;
    }
    for v in 0..n_int {
        let r = find(&mut parent, v);
        if !has_external[r] {
            return false;
        }
    }
    true
}

/// All coupling multi-degrees (n_i) with sum over the action's valencies
/// bounded by `max_total_degree`, excluding the empty profile.
fn profiles(action: &Action, max_total_degree: u32) -> Vec<BTreeMap<usize, u32>> {
    let valencies: Vec<usize> = action.couplings.keys().copied().collect();
    let mut out = Vec::new();
    fn rec(
        valencies: &[usize],
        pos: usize,
        remaining: u32,
        current: &mut BTreeMap<usize, u32>,
        out: &mut Vec<BTreeMap<usize, u32>>,
    ) {
        if pos == valencies.len() {
            if !current.is_empty() {
                out.push(current.clone());
            }
            return;
        }
        for n in 0..=remaining {
            if n > 0 {
                current.insert(valencies[pos], n);
            }
            rec(valencies, pos + 1, remaining - n, current, out);
            current.remove(&valencies[pos]);
        }
    }
    let mut cur = BTreeMap::new();
    rec(&valencies, 0, max_total_degree, &mut cur, &mut out);
    out
}

fn profile_key(action: &Action, counts: &BTreeMap<usize, u32>, n_legs: usize) -> ExpKey {
    let mut degrees = BTreeMap::new();
    let mut hbar2: i64 = 0;
    for (&valency, &n) in counts {
        let symbol = &action.couplings[&valency].symbol;
        *degrees.entry(symbol.clone()).or_insert(0) += n;
        hbar2 += n as i64 * (valency as i64 - 2);
    }
    hbar2 += n_legs as i64; // hbar^{N/2} from the rescaled insertions
    ExpKey { degrees, hbar2 }
}

/// Core diagram sum for one profile: returns sum over kept graphs of
/// F_Gamma/|Aut| (graph mode) or the identical matching-weighted value.
fn profile_sum(
    action: &Action,
    counts: &BTreeMap<usize, u32>,
    external: &[Vec<Rat>],
    mode: Mode,
    filter: Filter,
) -> Result<Rat, FeynError> {
    let mut count_pairs: Vec<(usize, usize)> =
        counts.iter().map(|(&v, &n)| (v, n as usize)).collect();
    count_pairs.sort_unstable();
    let profile = FlowerProfile::from_counts(&count_pairs, external.len());
    let total_he = profile.total_half_edges();
    if total_he > HALF_EDGE_BUDGET {
        return Err(FeynError::Budget(total_he));
    }
    if total_he % 2 != 0 {
        return Ok(Rat::zero());
    }
    let tensors: Vec<&SymTensor> =
        profile.valencies.iter().map(|v| &action.couplings[v].tensor).collect();
    let group_order = Rat::from_integer(profile.group_order());
    match mode {
        Mode::Graph => {
            let census = matching_census(&profile);
            let mut acc = Rat::zero();
            for (g, n_gamma) in census.classes.values() {
                if !keeps(filter, g) {
                    continue;
                }
                let amp = amplitude(g, &tensors, external, &action.b.inv);
                if amp.is_zero() {
                    continue;
                }
                // F/|Aut| = F * N_Gamma / |G|
                acc += amp * Rat::from_integer(n_gamma.clone()) / &group_order;
            }
            Ok(acc)
        }
        Mode::Matching => {
            // raw per-matching sum with amplitude memoized on the raw edge list
            let mut memo: HashMap<Vec<(End, End)>, Rat> = HashMap::new();
            let mut acc = Rat::zero();
            crate::graphs::for_each_matching(total_he, |m| {
                let g = Multigraph::from_matching(&profile, m);
                if !keeps(filter, &g) {
                    return;
                }
                let amp = memo
                    .entry(g.edges.clone())
                    .or_insert_with(|| amplitude(&g, &tensors, external, &action.b.inv));
                acc += &*amp;
            });
            Ok(acc / &group_order)
        }
    }
}

fn expansion_over_profiles(
    action: &Action,
    max_total_degree: u32,
    external: &[Vec<Rat>],
    mode: Mode,
    filter: Filter,
    include_empty: bool,
    skip_over_budget: bool,
) -> Result<Expansion, FeynError> {
    let mut out = Expansion::zero();
    if include_empty {
        if external.is_empty() {
            out.add_term(ExpKey::unit(), Rat::one());
        } else {
            // pure Wick term: matchings of the external legs only
            let empty_counts = BTreeMap::new();
            let v = profile_sum(action, &empty_counts, external, mode, filter)?;
            out.add_term(
                ExpKey { degrees: BTreeMap::new(), hbar2: external.len() as i64 },
                v,
            );
        }
    }
    for counts in profiles(action, max_total_degree) {
        let key = profile_key(action, &counts, external.len());
        match profile_sum(action, &counts, external, mode, filter) {
            Ok(v) => out.add_term(key, v),
            Err(FeynError::Budget(_)) if skip_over_budget => continue,
            Err(e) => return Err(e),
        }
    }
    out.assert_integral_hbar();
    Ok(out)
}

/// Z/Z_0 as an exact expansion over all diagrams (vacuum graphs included).
pub fn partition_expansion(
    action: &Action,
    max_total_degree: u32,
    mode: Mode,
) -> Result<Expansion, FeynError> {
    expansion_over_profiles(action, max_total_degree, &[], mode, Filter::All, true, false)
}

/// Like `partition_expansion`, but silently skips profiles beyond the
/// half-edge budget. The result is grading-complete only for keys whose
/// profiles fit in the budget; callers must query accordingly.
pub fn partition_expansion_within_budget(
    action: &Action,
    max_total_degree: u32,
    mode: Mode,
    half_edge_cap: usize,
) -> Result<Expansion, FeynError> {
    let mut out = Expansion::zero();
    out.add_term(ExpKey::unit(), Rat::one());
    for counts in profiles(action, max_total_degree) {
        let he: usize = counts.iter().map(|(&v, &n)| v * n as usize).sum();
        if he > half_edge_cap {
            continue;
        }
        let key = profile_key(action, &counts, 0);
        let v = profile_sum(action, &counts, &[], mode, Filter::All)?;
        out.add_term(key, v);
    }
    out.assert_integral_hbar();
    Ok(out)
}

/// N-point correlator expansion <l_1 ... l_N>; `normalized` restricts to
/// graphs with no vacuum components (the correlator divided by <empty>).
pub fn correlator_expansion(
    action: &Action,
    covectors: &[Vec<Rat>],
    max_total_degree: u32,
    mode: Mode,
    normalized: bool,
) -> Result<Expansion, FeynError> {
    let filter = if normalized { Filter::EveryComponentMarked } else { Filter::All };
    expansion_over_profiles(action, max_total_degree, covectors, mode, filter, true, false)
}

/// Sum over connected diagrams only; equals log of the partition expansion.
pub fn connected_expansion(
    action: &Action,
    max_total_degree: u32,
    mode: Mode,
) -> Result<Expansion, FeynError> {
    expansion_over_profiles(action, max_total_degree, &[], mode, Filter::Connected, false, false)
}

/// A formal vector in V with expansion coefficients: the critical point of
/// the action solved degree by degree from x = beta(x).
pub type VecExpansion = BTreeMap<ExpKey, Vec<Rat>>;

/// Generalized coupling list for tree solving: (valency, key carried by one
/// insertion, tensor). The plain action uses key = (g_i, hbar^0).
type GenCoupling = (usize, ExpKey, SymTensor);

fn vec_exp_add(a: &mut VecExpansion, key: ExpKey, v: Vec<Rat>) {
    if v.iter().all(|c| c.is_zero()) {
        return;
    }
    match a.get_mut(&key) {
        Some(existing) => {
            for (e, n) in existing.iter_mut().zip(v) {
                *e += n;
            }
        }
        None => {
            a.insert(key, v);
        }
    }
}

/// Solve x = beta(x) = sum_i key_i B^{-1} B_i(x,...,x,-)/(i-1)! degree by
/// degree in total coupling degree.
fn tree_fixed_point(
    b: &QuadraticForm<Rat>,
    couplings: &[GenCoupling],
    max_total_degree: u32,
) -> VecExpansion {
    let dim = b.dim();
    let mut x: VecExpansion = BTreeMap::new();
    for _round in 0..=max_total_degree {
        let mut next: VecExpansion = BTreeMap::new();
        for (valency, key, tensor) in couplings {
            if *valency == 0 {
                continue;
            }
            // B_i(x, ..., x, -)/(i-1)!: contract i-1 slots with x
            let k = valency - 1;
            // enumerate products of k factors from x (with the empty product
            // when k = 0)
            let mut partial: Vec<(ExpKey, SymTensor)> = vec![(key.clone(), tensor.clone())];
            for _ in 0..k {
                let mut grown: Vec<(ExpKey, SymTensor)> = Vec::new();
                for (pk, pt) in &partial {
                    for (xk, xv) in &x {
                        let nk = pk.merge(xk);
                        if nk.total_degree() > max_total_degree {
                            continue;
                        }
                        let nt = pt.contract_vec(xv, 1);
                        if nt.is_zero() {
                            continue;
                        }
                        merge_tensor_term(&mut grown, nk, nt);
                    }
                }
                partial = grown;
            }
            let fact = Rat::from_integer(factorial(k));
            for (pk, pt) in partial {
                // pt has rank 1: covector; apply B^{-1}
                let mut vec_out = vec![Rat::zero(); dim];
                for a in 0..dim {
                    let mut acc = Rat::zero();
                    for c in 0..dim {
                        acc += b.inv.at(a, c) * pt.get(&[c]);
                    }
                    vec_out[a] = acc / &fact;
                }
                vec_exp_add(&mut next, pk, vec_out);
            }
        }
        if next == x {
            break;
        }
        x = next;
    }
    x
}

fn merge_tensor_term(list: &mut Vec<(ExpKey, SymTensor)>, key: ExpKey, t: SymTensor) {
    for (k, existing) in list.iter_mut() {
        if *k == key {
            for (e, n) in existing.table.iter_mut().zip(&t.table) {
                *e += n;
            }
            return;
        }
    }
    list.push((key, t));
}

fn action_gen_couplings(action: &Action) -> Vec<GenCoupling> {
    action
        .couplings
        .iter()
        .map(|(&v, c)| (v, ExpKey::single(&c.symbol, 1, 0), c.tensor.clone()))
        .collect()
}

fn tree_level_general(
    b: &QuadraticForm<Rat>,
    couplings: &[GenCoupling],
    max_total_degree: u32,
) -> Expansion {
    let x0 = tree_fixed_point(b, couplings, max_total_degree);
    let dim = b.dim();
    // -S(x0) = -B(x0,x0)/2 + sum_i key_i B_i(x0...)/i!
    let mut out = Expansion::zero();
    for (k1, v1) in &x0 {
        for (k2, v2) in &x0 {
            let key = k1.merge(k2);
            if key.total_degree() > max_total_degree {
                continue;
            }
            let mut acc = Rat::zero();
            for a in 0..dim {
                for c in 0..dim {
                    acc += b.mat.at(a, c) * &v1[a] * &v2[c];
                }
            }
            out.add_term(key, -acc / crate::scalar::int(2));
        }
    }
    for (valency, key, tensor) in couplings {
        // key * B_i(x0,...,x0)/i!
        let mut partial: Vec<(ExpKey, SymTensor)> = vec![(key.clone(), tensor.clone())];
        for _ in 0..*valency {
            let mut grown: Vec<(ExpKey, SymTensor)> = Vec::new();
            for (pk, pt) in &partial {
                for (xk, xv) in &x0 {
                    let nk = pk.merge(xk);
                    if nk.total_degree() > max_total_degree {
                        continue;
                    }
                    let nt = pt.contract_vec(xv, 1);
                    merge_tensor_term(&mut grown, nk, nt);
                }
            }
            partial = grown;
        }
        let fact = Rat::from_integer(factorial(*valency));
        for (pk, pt) in partial {
            out.add_term(pk, pt.table[0].clone() / &fact);
        }
    }
    out
}

/// Tree approximation -S(x_0): the hbar^{-1} slice of the connected sum,
/// reported with hbar2 = -2 on every term.
pub fn tree_level(action: &Action, max_total_degree: u32) -> Expansion {
    let couplings = action_gen_couplings(action);
    let t = tree_level_general(&action.b, &couplings, max_total_degree);
    Expansion {
        terms: t
            .terms
            .into_iter()
            .map(|(k, v)| (ExpKey { degrees: k.degrees, hbar2: k.hbar2 - 2 }, v))
            .collect(),
    }
}

/// One-loop approximation (1/2) log det(B / S''(x_0)) as an exact expansion
/// (hbar^0 slice of the connected sum).
pub fn one_loop(action: &Action, max_total_degree: u32) -> Expansion {
    let couplings = action_gen_couplings(action);
    let x0 = tree_fixed_point(&action.b, &couplings, max_total_degree);
    let dim = action.dim();
    // K = B^{-1} * sum_i key_i B_i(x0,..,-,-)/(i-2)!  (valency >= 2... includes
    // lower valencies only if >= 2)
    // entries of K as expansions
    let mut k_mat: Vec<Expansion> = vec![Expansion::zero(); dim * dim];
    for (valency, key, tensor) in &couplings {
        if *valency < 2 {
            continue;
        }
        let k = valency - 2;
        let mut partial: Vec<(ExpKey, SymTensor)> = vec![(key.clone(), tensor.clone())];
        for _ in 0..k {
            let mut grown: Vec<(ExpKey, SymTensor)> = Vec::new();
            for (pk, pt) in &partial {
                for (xk, xv) in &x0 {
                    let nk = pk.merge(xk);
                    if nk.total_degree() > max_total_degree {
                        continue;
                    }
                    let nt = pt.contract_vec(xv, 1);
                    merge_tensor_term(&mut grown, nk, nt);
                }
            }
            partial = grown;
        }
        let fact = Rat::from_integer(factorial(k));
        for (pk, pt) in partial {
            // pt rank 2; K += B^{-1} pt / k!
            for a in 0..dim {
                for c in 0..dim {
                    let mut acc = Rat::zero();
                    for r in 0..dim {
                        acc += action.b.inv.at(a, r) * pt.get(&[r, c]);
                    }
                    k_mat[a * dim + c].add_term(pk.clone(), acc / &fact);
                }
            }
        }
    }
    // (1/2) log det(B/S'') = -(1/2) log det(1 - K) = (1/2) sum_j tr(K^j)/j
    let mut out = Expansion::zero();
    let mut power: Vec<Expansion> = {
        let mut id = vec![Expansion::zero(); dim * dim];
        for a in 0..dim {
            id[a * dim + a] = Expansion::one();
        }
        id
    };
    for j in 1..=max_total_degree.max(1) {
        // power = power * K
        let mut next = vec![Expansion::zero(); dim * dim];
        for a in 0..dim {
            for c in 0..dim {
                let mut acc = Expansion::zero();
                for r in 0..dim {
                    acc = acc.add(
                        &power[a * dim + r].mul(&k_mat[r * dim + c], max_total_degree),
                    );
                }
                next[a * dim + c] = acc;
            }
        }
        power = next;
        let mut trace = Expansion::zero();
        for a in 0..dim {
            trace = trace.add(&power[a * dim + a]);
        }
        if trace.terms.is_empty() {
            break;
        }
        out = out.add(&trace.scale(&(Rat::one() / crate::scalar::int(2 * j as i64))));
    }
    out
}

/// The effective action through `loop_cap` loops: for each leg count N a
/// tensor-valued expansion from 1PI graph sums (amputated externals).
pub struct EffectiveAction {
    pub b: Mat<Rat>,
    /// (N legs) -> list of (key, tensor): contribution key * B_N tensor,
    /// where key already carries the hbar grading hbar^{1 + ...}.
    pub vertex_terms: BTreeMap<usize, Vec<(ExpKey, SymTensor)>>,
}

pub fn effective_action(
    action: &Action,
    max_total_degree: u32,
    loop_cap: u32,
    n_max: usize,
) -> Result<EffectiveAction, FeynError> {
    let dim = action.dim();
    let mut vertex_terms: BTreeMap<usize, Vec<(ExpKey, SymTensor)>> = BTreeMap::new();
    for n_legs in 0..=n_max {
        for counts in profiles(action, max_total_degree) {
            let mut count_pairs: Vec<(usize, usize)> =
                counts.iter().map(|(&v, &n)| (v, n as usize)).collect();
            count_pairs.sort_unstable();
            let profile = FlowerProfile::from_counts(&count_pairs, n_legs);
            if profile.total_half_edges() > HALF_EDGE_BUDGET {
                continue; // graded contribution beyond the desk budget
            }
            if profile.total_half_edges() % 2 != 0 {
                continue;
            }
            let n_internal_he = profile.internal_half_edges();
            if n_internal_he < n_legs {
                continue;
            }
            // loop count of a connected graph with N amputated legs:
            // E_int - V + 1 with E_int = (sum valencies - N)/2
            let v_int = profile.valencies.len();
            let e_int = (n_internal_he - n_legs) / 2;
            if v_int == 0 {
                continue;
            }
            let loops = e_int as i64 - v_int as i64 + 1;
            if loops < 0 || loops as u32 > loop_cap {
                continue;
            }
            let census = matching_census(&profile);
            let group_order = Rat::from_integer(profile.group_order());
            let tensors: Vec<&SymTensor> =
                profile.valencies.iter().map(|v| &action.couplings[v].tensor).collect();
            // key: hbar * prod (g_i hbar^{i/2-1})^{n_i}; with the external
            // legs amputated the powers work out to hbar^{1+loops-1} per
            // graph, i.e. hbar2 = 2*loops for the B_N term.
            let mut key = ExpKey::unit();
            for (&valency, &n) in &counts {
                let symbol = &action.couplings[&valency].symbol;
                key = key.merge(&ExpKey::single(symbol, n, 0));
            }
            key.hbar2 = 2 * loops;
            let mut tensor_acc = SymTensor::zero(dim, n_legs);
            let mut any = false;
            for (g, n_gamma) in census.classes.values() {
                if !keeps(Filter::OneParticleIrreducible, g) {
                    continue;
                }
                // skip graphs where a leg pairs directly with another leg
                if g.edges.iter().any(|e| {
                    matches!((e.0, e.1), (End::External(_), End::External(_)))
                }) {
                    continue;
                }
                let weight = Rat::from_integer(n_gamma.clone()) / &group_order;
                // fill the amputated tensor entry by entry
                let mut idx = vec![0usize; n_legs];
                loop {
                    // externals pinned to basis covectors through B^{-1}B = 1:
                    // feed l_j = B e_{idx_j} so that B^{-1} l_j = e_{idx_j}
                    let ext: Vec<Vec<Rat>> = idx
                        .iter()
                        .map(|&k| (0..dim).map(|r| action.b.mat.at(r, k).clone()).collect())
                        .collect();
                    let amp = amplitude(g, &tensors, &ext, &action.b.inv);
                    if !amp.is_zero() {
                        let cur = tensor_acc.get(&idx).clone();
                        tensor_acc.set(&idx, cur + amp * &weight);
                        any = true;
                    }
                    // odometer over external indices
                    let mut pos = n_legs;
                    let mut done = false;
                    loop {
                        if pos == 0 {
                            done = true;
                            break;
                        }
                        pos -= 1;
                        idx[pos] += 1;
                        if idx[pos] < dim {
                            break;
                        }
                        idx[pos] = 0;
                    }
                    if done {
                        break;
                    }
                }
            }
            if any {
                vertex_terms
                    .entry(n_legs)
                    .or_default()
                    .push((key, tensor_acc.symmetrize()));
            }
        }
    }
    Ok(EffectiveAction { b: action.b.mat.clone(), vertex_terms })
}

impl EffectiveAction {
    /// Tree-level of the effective action: must reproduce the connected
    /// expansion of the original action ("the classical answer for the
    /// effective action is the quantum answer").
    pub fn tree_level(&self, max_total_degree: u32) -> Expansion {
        let b = QuadraticForm::new(self.b.clone()).expect("valid B");
        let mut couplings: Vec<GenCoupling> = Vec::new();
        for (&n, terms) in &self.vertex_terms {
            for (key, tensor) in terms {
                couplings.push((n, key.clone(), tensor.clone()));
            }
        }
        let t = tree_level_general(&b, &couplings, max_total_degree);
        // the classical slice sits at hbar^{-1}: shift the grading
        Expansion {
            terms: t
                .terms
                .into_iter()
                .map(|(k, v)| (ExpKey { degrees: k.degrees, hbar2: k.hbar2 - 2 }, v))
                .collect(),
        }
    }

    /// Evaluate S_eff(x) at numeric couplings and hbar (d = 1 only).
    pub fn eval_1d(&self, couplings: &BTreeMap<String, f64>, hbar: f64, x: f64) -> f64 {
        let b = rat_to_f64(self.b.at(0, 0));
        let mut s = b * x * x / 2.0;
        for (&n, terms) in &self.vertex_terms {
            let mut bn = 0.0;
            for (key, tensor) in terms {
                let mut t = rat_to_f64(&tensor.table[0]) * hbar.powf(key.hbar2 as f64 / 2.0);
                for (sym, d) in &key.degrees {
                    t *= couplings.get(sym).copied().unwrap_or(0.0).powi(*d as i32);
                }
                bn += t;
            }
            let nfact = rat_to_f64(&Rat::from_integer(factorial(n)));
            s -= bn * x.powi(n as i32) / nfact;
        }
        s
    }
}

/// Legendre transform of a 1-d series f with f(0)=f'(0)=0 and invertible
/// quadratic part: L(f)(p) = p x0 - f(x0) with f'(x0) = p, via reversion.
pub fn legendre_series(f: &crate::series::Series<Rat>) -> Result<crate::series::Series<Rat>, FeynError> {
    use crate::series::Series;
    if !f.coeff(0).is_zero() || !f.coeff(1).is_zero() || f.coeff(2).is_zero() {
        return Err(FeynError::NotConvex);
    }
    let fp = f.derivative();
    let x0 = fp.reversion()?; // x0(p)
    let p = Series::x(&f.var, x0.order());
    let l = p.mul(&x0).sub(&f.compose(&x0)?);
    Ok(l)
}

/// Numeric Legendre transform of a smooth sampled convex function:
/// maximizes p x - f(x) by golden-section on the sample range.
pub fn legendre_numeric(
    f: &dyn Fn(f64) -> f64,
    p: f64,
    lo: f64,
    hi: f64,
) -> Result<f64, FeynError> {
    // convexity probe on a grid
    let n = 64;
    let h = (hi - lo) / n as f64;
    for i in 1..n {
        let x = lo + i as f64 * h;
        let second = f(x + h) - 2.0 * f(x) + f(x - h);
        if second < -1e-9 * (1.0 + f(x).abs()) {
            return Err(FeynError::NotConvex);
        }
    }
    let g = |x: f64| p * x - f(x);
    // golden-section maximization
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let (mut c, mut d) = (b - phi * (b - a), a + phi * (b - a));
    for _ in 0..200 {
        if g(c) > g(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - phi * (b - a);
        d = a + phi * (b - a);
        if (b - a).abs() < 1e-14 {
            break;
        }
    }
    Ok(g(0.5 * (a + b)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, rat};

    fn d1_action(couplings: Vec<(usize, &str)>) -> Action {
        let b = Mat::from_rows(vec![vec![int(1)]]);
        let cpl = couplings
            .into_iter()
            .map(|(v, s)| (v, s, SymTensor::monomial(1, &[v])))
            .collect();
        Action::new(b, cpl).unwrap()
    }

    #[test]
    fn cubic_degree2_partition_coefficient() {
        // coefficient of g3^2 hbar^2... in Z/Z0: theta (1/12) + dumbbell (1/8)
        let action = d1_action(vec![(3, "g3")]);
        for mode in [Mode::Matching, Mode::Graph] {
            let z = partition_expansion(&action, 2, mode).unwrap();
            let key = ExpKey::single("g3", 2, 2);
            assert_eq!(z.coeff(&key), rat(5, 24), "{:?}", mode);
            // degree-1 term vanishes (odd half-edge count)
            assert_eq!(z.coeff(&ExpKey::single("g3", 1, 1)), int(0));
            assert_eq!(z.coeff(&ExpKey::unit()), int(1));
        }
    }

    #[test]
    fn zero_couplings_partition_is_one() {
        let action = d1_action(vec![]);
        let z = partition_expansion(&action, 3, Mode::Graph).unwrap();
        assert_eq!(z, Expansion::one());
    }

    #[test]
    fn treeexa_identity_through_matching_mode() {
        // with g_i = g, B_i = x^i for all i <= cap, the coefficient of g^n
        // at fixed hbar power collects sum over G(n,k) of 1/|Aut|
        // = n^{2k}/(2^k k! n!).
        let b = Mat::from_rows(vec![vec![int(1)]]);
        // represent each valency with its own tensor but one shared symbol
        let cpl: Vec<(usize, &str, SymTensor)> =
            (0..=8).map(|v| (v, "g", SymTensor::monomial(1, &[v]))).collect();
        let action = Action::new(b, cpl).unwrap();
        let z = partition_expansion_within_budget(&action, 3, Mode::Graph, 8).unwrap();
        for n in 1..=3u32 {
            for k in 0..=4usize {
                // hbar2 for n vertices and k edges: 2k - 2n; restrict to
                // graphs with k edges via the hbar grading
                let key = ExpKey::single("g", n, 2 * k as i64 - 2 * n as i64);
                let got = z.coeff(&key);
                let expect = crate::graphs::weighted_graph_count(n as usize, k);
                assert_eq!(got, expect, "n={} k={}", n, k);
            }
        }
    }

    #[test]
    fn free_two_point_correlator() {
        let action = d1_action(vec![]);
        let ell = vec![vec![int(1)], vec![int(1)]];
        let c = correlator_expansion(&action, &ell, 0, Mode::Graph, false).unwrap();
        // <l l> = hbar * B^{-1} = hbar
        let key = ExpKey { degrees: BTreeMap::new(), hbar2: 2 };
        assert_eq!(c.coeff(&key), int(1));
        // odd correlator vanishes
        let c3 = correlator_expansion(&action, &vec![vec![int(1)]; 3], 0, Mode::Graph, false)
            .unwrap();
        assert!(c3.terms.is_empty());
    }

    #[test]
    fn quartic_two_point_first_order_both_modes() {
        // <x^2> at order g4: tadpole with weight 1/2 plus disconnected
        // (vacuum 8-figure) x free line for the unnormalized correlator.
        let action = d1_action(vec![(4, "g4")]);
        let ell = vec![vec![int(1)], vec![int(1)]];
        let mm = correlator_expansion(&action, &ell, 1, Mode::Matching, false).unwrap();
        let gg = correlator_expansion(&action, &ell, 1, Mode::Graph, false).unwrap();
        assert_eq!(mm, gg);
        // order-g4 term: profile one 4-valent vertex + 2 legs: 15 matchings,
        // amplitude 1 each, weight 1/4! -> 15/24 = 5/8; hbar2 = 2 + 2
        let key = ExpKey::single("g4", 1, 4);
        assert_eq!(mm.coeff(&key), rat(5, 8));
        // normalized variant drops the vacuum 8-figure: tadpole (1/2) plus
        // nothing else with the free line... matchings where legs pair with
        // vertex: 12 of 15; weight 12/24 = 1/2
        let norm = correlator_expansion(&action, &ell, 1, Mode::Graph, true).unwrap();
        assert_eq!(norm.coeff(&key), rat(1, 2));
    }

    #[test]
    fn dual_modes_agree_d2_mixed_couplings() {
        // d = 2 with generic-ish B and cubic+quartic couplings, degree 3
        let b = Mat::from_rows(vec![vec![int(2), int(1)], vec![int(1), int(2)]]);
        let mut t3 = SymTensor::zero(2, 3);
        t3.set(&[0, 0, 0], int(1));
        t3.set(&[0, 0, 1], rat(1, 2));
        let t3 = t3.symmetrize();
        let mut t4 = SymTensor::zero(2, 4);
        t4.set(&[0, 0, 1, 1], int(1));
        t4.set(&[1, 1, 1, 1], int(2));
        let t4 = t4.symmetrize();
        let action = Action::new(b, vec![(3, "u", t3), (4, "w", t4)]).unwrap();
        let zm = partition_expansion(&action, 3, Mode::Matching).unwrap();
        let zg = partition_expansion(&action, 3, Mode::Graph).unwrap();
        assert_eq!(zm, zg);
        assert!(!zm.terms.is_empty());
    }

    #[test]
    fn connected_equals_log_partition() {
        let action = d1_action(vec![(3, "g3"), (4, "g4")]);
        let z = partition_expansion(&action, 4, Mode::Graph).unwrap();
        let w = connected_expansion(&action, 4, Mode::Graph).unwrap();
        assert_eq!(w, z.log(4));
        assert_eq!(w.exp(4), z);
        // cubic degree-2 connected coefficient is 5/24 (both graphs connected)
        assert_eq!(w.coeff(&ExpKey::single("g3", 2, 2)), rat(5, 24));
        // empty coupling case: log 1 = 0
        let empty = d1_action(vec![]);
        assert!(connected_expansion(&empty, 3, Mode::Graph).unwrap().terms.is_empty());
    }

    #[test]
    fn tree_level_matches_cayley_series() {
        // S = x^2/2 - g e^x (realized through valencies 1..=8):
        // -S(x0) = sum n^{n-2} g^n / n!
        let b = Mat::from_rows(vec![vec![int(1)]]);
        let cpl: Vec<(usize, &str, SymTensor)> =
            (0..=8).map(|v| (v, "g", SymTensor::monomial(1, &[v]))).collect();
        let action = Action::new(b, cpl).unwrap();
        let t = tree_level(&action, 8);
        for n in 1..=8u32 {
            let key = ExpKey::single("g", n, -2);
            let expect = Rat::from_integer(BigInt::from(n as u64).pow(n.saturating_sub(2)))
                / Rat::from_integer(factorial(n as usize));
            assert_eq!(t.coeff(&key), expect, "n={}", n);
        }
    }

    #[test]
    fn trivalent_tree_series() {
        // S = x^2/2 - g(x + x^3/6): -S(x0) = sum (2n-3)!! g^{2n} / (n+1)!
        let b = Mat::from_rows(vec![vec![int(1)]]);
        let action = Action::new(
            b,
            vec![
                (1, "g", SymTensor::monomial(1, &[1])),
                (3, "g", SymTensor::monomial(1, &[3])),
            ],
        )
        .unwrap();
        let t = tree_level(&action, 12);
        for n in 1..=6u32 {
            let key = ExpKey::single("g", 2 * n, -2);
            let expect = Rat::from_integer(crate::scalar::double_factorial(2 * n as i64 - 3))
                / Rat::from_integer(factorial(n as usize + 1));
            assert_eq!(t.coeff(&key), expect, "n={}", n);
        }
    }

    #[test]
    fn tree_and_one_loop_slice_connected_sum() {
        let action = d1_action(vec![(3, "g3")]);
        let w = connected_expansion(&action, 4, Mode::Graph).unwrap();
        let t = tree_level(&action, 4);
        let l = one_loop(&action, 4);
        assert_eq!(w.slice_hbar2(-2), t.slice_hbar2(-2));
        assert_eq!(w.slice_hbar2(0), l.slice_hbar2(0));
        // zero couplings: both vanish
        let empty = d1_action(vec![]);
        assert!(tree_level(&empty, 4).terms.is_empty());
        assert!(one_loop(&empty, 4).terms.is_empty());
    }

    #[test]
    fn effective_action_tree_equals_connected() {
        // cubic d=1 action through degree 3, loops <= 2
        let action = d1_action(vec![(3, "g")]);
        let eff = effective_action(&action, 4, 2, 4).unwrap();
        let tree_of_eff = eff.tree_level(3);
        let w = connected_expansion(&action, 3, Mode::Graph).unwrap();
        // compare on all keys present in either, through degree 3 and the
        // hbar window covered by loop_cap (hbar2 <= 2*loop_cap - 2)
        let mut keys: Vec<ExpKey> = w.terms.keys().cloned().collect();
        keys.extend(tree_of_eff.terms.keys().cloned());
        keys.sort();
        keys.dedup();
        for k in keys {
            if k.total_degree() > 3 || k.hbar2 > 2 {
                continue;
            }
            assert_eq!(tree_of_eff.coeff(&k), w.coeff(&k), "key {:?}", k);
        }
        // free action: effective action has no vertex terms
        let empty = d1_action(vec![]);
        let eff0 = effective_action(&empty, 3, 2, 4).unwrap();
        assert!(eff0.vertex_terms.is_empty());
    }

    #[test]
    fn legendre_series_examples() {
        use crate::series::Series;
        // f = a x^2/2 -> p^2/(2a)
        let mut f = Series::<Rat>::zero("x", 8);
        f.set_coeff(2, rat(3, 2)); // a = 3
        let l = legendre_series(&f).unwrap();
        assert_eq!(l.coeff(2), rat(1, 6));
        // f = x^2/2 self-dual
        let mut f2 = Series::<Rat>::zero("x", 8);
        f2.set_coeff(2, rat(1, 2));
        let l2 = legendre_series(&f2).unwrap();
        assert_eq!(l2.coeff(2), rat(1, 2));
        for e in 3..8 {
            assert_eq!(l2.coeff(e), int(0));
        }
        // f = x^2/2 + x^3/6 -> p^2/2 - p^3/6 + ...
        let mut f3 = f2.clone();
        f3.set_coeff(3, rat(1, 6));
        let l3 = legendre_series(&f3).unwrap();
        assert_eq!(l3.coeff(2), rat(1, 2));
        assert_eq!(l3.coeff(3), rat(-1, 6));
        // involutivity
        let back = legendre_series(&l3).unwrap();
        for e in 0..7 {
            assert_eq!(back.coeff(e), f3.coeff(e), "exp {}", e);
        }
    }

    #[test]
    fn hbar_grading_is_structural() {
        let action = d1_action(vec![(3, "g3"), (4, "g4")]);
        let z = partition_expansion(&action, 3, Mode::Graph).unwrap();
        for key in z.terms.keys() {
            let n3 = *key.degrees.get("g3").unwrap_or(&0) as i64;
            let n4 = *key.degrees.get("g4").unwrap_or(&0) as i64;
            assert_eq!(key.hbar2, n3 * (3 - 2) + n4 * (4 - 2));
        }
    }
}
