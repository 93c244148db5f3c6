//! Torsion criteria and the classifier of 3-adic images on isogeny-torsion
//! graphs.
//!
//! A query fixes a graph type and (optionally) the torsion subgroup at each
//! vertex. Candidate labels for each vertex come from the catalog and are cut
//! down by computed group theory: the number of stable lines equals the number
//! of incident 3-edges, a cyclic 9-isogeny exists exactly when the image is in
//! the Borel subgroup mod 9, and a rational point of order 3 or 9 exists
//! exactly when the image fixes such a vector. Along an edge of degree prime
//! to 3 the labels agree; along a 3-edge one label is the transform of the
//! other through the stable line of that edge. Rational-point results that
//! cannot be computed here enter as exclusions from a [`FactBase`].

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use crate::catalog::{label_cmp, Catalog, FULL_LABEL};
use crate::error::{Error, Result};
use crate::modmat::Mat2;
use crate::subgroup::{is_conjugate_into, Subgroup};
use crate::transform::{transform_image, IMAGE_MODULUS};

pub const FACTS: &str = include_str!("../data/facts.txt");
pub const ORACLE: &str = include_str!("../data/oracle.txt");

/// Labels whose occurrence as an image is open: no non-cuspidal non-CM
/// rational point of the curve is known, but none has been ruled out.
pub const CONDITIONAL_LABELS: &[&str] = &["27.243.12.1"];

/// Whether some vector of exact order `m` (a power of 3) is fixed by `g`.
pub fn has_rational_point_of_order(g: &Subgroup, m: u32) -> Result<bool> {
    g.fixes_vector_of_order(m)
}

/// Labels whose image forces a rational point of order 3.
pub fn three_torsion_label_set(c: &Catalog) -> Result<BTreeSet<String>> {
    torsion_label_set(c, 3)
}

/// Labels whose image forces a rational point of order `m`.
pub fn torsion_label_set(c: &Catalog, m: u32) -> Result<BTreeSet<String>> {
    let mut out = BTreeSet::new();
    for e in c.entries() {
        if e.modulus() % m == 0 && has_rational_point_of_order(e.group(), m)? {
            out.insert(e.label().to_string());
        }
    }
    Ok(out)
}

/// The Borel subgroup of upper triangular matrices mod `n`.
pub fn borel(n: u32) -> Subgroup {
    let mut gens = vec![Mat2::new(n, 1, 1, 0, 1), Mat2::minus_identity(n)];
    for u in crate::subgroup::unit_generators(n) {
        gens.push(Mat2::new(n, i64::from(u), 0, 0, 1));
        gens.push(Mat2::new(n, 1, 0, 0, i64::from(u)));
    }
    Subgroup::generate(&gens, n).expect("Borel generators are invertible")
}

// ---------------------------------------------------------------------------
// Graphs

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GraphType {
    L1,
    L2(u32),
    L3(u32),
    R4(u32),
    R6,
    T4,
    T6,
    T8,
    S,
}

impl GraphType {
    /// Every type of the taxonomy.
    pub fn all() -> Vec<GraphType> {
        let mut out = vec![GraphType::L1];
        out.extend([2, 3, 5, 7, 11, 13, 17, 37].map(GraphType::L2));
        out.extend([9, 25].map(GraphType::L3));
        out.extend([6, 10, 14, 15, 21].map(GraphType::R4));
        out.extend([GraphType::R6, GraphType::T4, GraphType::T6, GraphType::T8, GraphType::S]);
        out
    }

    /// Vertex count and edges `(u, v, prime)` with 0-based vertices.
    pub fn shape(&self) -> Shape {
        use GraphType::*;
        let (n, edges): (usize, Vec<(usize, usize, u32)>) = match *self {
            L1 => (1, vec![]),
            L2(p) => (2, vec![(0, 1, p)]),
            L3(d) => {
                let p = if d == 9 { 3 } else { 5 };
                (3, vec![(0, 1, p), (1, 2, p)])
            }
            R4(pq) => {
                let (p, q) = r4_primes(pq).expect("validated on construction");
                (4, vec![(0, 1, q), (0, 2, p), (1, 3, p), (2, 3, q)])
            }
            R6 => (6, vec![(0, 2, 3), (2, 4, 3), (1, 3, 3), (3, 5, 3), (0, 1, 2), (2, 3, 2), (4, 5, 2)]),
            T4 => (4, vec![(0, 1, 2), (0, 2, 2), (0, 3, 2)]),
            T6 => (6, vec![(0, 1, 2), (0, 2, 2), (0, 3, 2), (3, 4, 2), (3, 5, 2)]),
            T8 => (
                8,
                vec![(0, 1, 2), (0, 2, 2), (0, 3, 2), (3, 4, 2), (5, 3, 2), (5, 6, 2), (5, 7, 2)],
            ),
            S => (
                8,
                vec![
                    (0, 1, 3),
                    (0, 2, 2),
                    (0, 4, 2),
                    (0, 6, 2),
                    (2, 3, 3),
                    (4, 5, 3),
                    (6, 7, 3),
                    (1, 3, 2),
                    (1, 5, 2),
                    (1, 7, 2),
                ],
            ),
        };
        Shape::new(n, edges)
    }
}

/// `(p, q)` for `R4(pq)`: E1-E3 and E2-E4 have degree `p`, the others `q`.
fn r4_primes(pq: u32) -> Option<(u32, u32)> {
    match pq {
        6 => Some((3, 2)),
        10 => Some((2, 5)),
        14 => Some((2, 7)),
        15 => Some((3, 5)),
        21 => Some((3, 7)),
        _ => None,
    }
}

impl FromStr for GraphType {
    type Err = Error;

    fn from_str(s: &str) -> Result<GraphType> {
        let t = s.trim();
        let unknown = || Error::UnknownGraph(t.to_string());
        let simple = match t {
            "L1" => Some(GraphType::L1),
            "R6" => Some(GraphType::R6),
            "T4" => Some(GraphType::T4),
            "T6" => Some(GraphType::T6),
            "T8" => Some(GraphType::T8),
            "S" => Some(GraphType::S),
            _ => None,
        };
        if let Some(g) = simple {
            return Ok(g);
        }
        let (head, arg) = t.split_once('(').ok_or_else(unknown)?;
        let arg: u32 = arg.strip_suffix(')').ok_or_else(unknown)?.parse().map_err(|_| unknown())?;
        let g = match head {
            "L2" if [2, 3, 5, 7, 11, 13, 17, 37].contains(&arg) => GraphType::L2(arg),
            "L3" if arg == 9 || arg == 25 => GraphType::L3(arg),
            "R4" if r4_primes(arg).is_some() => GraphType::R4(arg),
            _ => return Err(unknown()),
        };
        Ok(g)
    }
}

impl fmt::Display for GraphType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphType::L1 => write!(f, "L1"),
            GraphType::L2(p) => write!(f, "L2({p})"),
            GraphType::L3(d) => write!(f, "L3({d})"),
            GraphType::R4(d) => write!(f, "R4({d})"),
            GraphType::R6 => write!(f, "R6"),
            GraphType::T4 => write!(f, "T4"),
            GraphType::T6 => write!(f, "T6"),
            GraphType::T8 => write!(f, "T8"),
            GraphType::S => write!(f, "S"),
        }
    }
}

/// An undirected graph with prime edge labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Shape {
    pub vertices: usize,
    pub edges: Vec<(usize, usize, u32)>,
    /// `degree[v][w]`: degree of the cyclic isogeny between `v` and `w`.
    degree: Vec<Vec<u64>>,
}

impl Shape {
    pub fn new(vertices: usize, edges: Vec<(usize, usize, u32)>) -> Shape {
        let degree = (0..vertices).map(|v| path_degrees(vertices, &edges, v)).collect();
        Shape { vertices, edges, degree }
    }

    /// Degree of the cyclic isogeny from `v` to `w` (product along a shortest path).
    pub fn isogeny_degree(&self, v: usize, w: usize) -> u64 {
        self.degree[v][w]
    }

    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = (usize, u32)> + '_ {
        self.edges.iter().filter_map(move |&(a, b, p)| {
            if a == v {
                Some((b, p))
            } else if b == v {
                Some((a, p))
            } else {
                None
            }
        })
    }

    pub fn edge_count(&self, v: usize, p: u32) -> usize {
        self.neighbors(v).filter(|&(_, q)| q == p).count()
    }

    pub fn edge_prime(&self, v: usize, w: usize) -> Option<u32> {
        self.neighbors(v).find(|&(x, _)| x == w).map(|(_, p)| p)
    }

    /// Degrees of all cyclic isogenies leaving `v`.
    pub fn degrees_from(&self, v: usize) -> BTreeSet<u64> {
        (0..self.vertices).filter(|&w| w != v).map(|w| self.degree[v][w]).collect()
    }

    /// Maps `pi` (vertex `i` to `pi[i]`) with `degree(pi[i], pi[j])` equal
    /// to the cyclic isogeny degree between `i` and `j` for all `i != j`.
    pub fn automorphisms_into(&self, degree: impl Fn(usize, usize) -> u64) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut perm: Vec<usize> = (0..self.vertices).collect();
        permutations(&mut perm, 0, &mut |pi| {
            let ok = (0..self.vertices)
                .all(|i| (0..self.vertices).all(|j| i == j || degree(pi[i], pi[j]) == self.degree[i][j]));
            if ok {
                out.push(pi.to_vec());
            }
        });
        out.sort();
        out
    }

    /// Vertex permutations preserving labelled edges.
    pub fn automorphisms(&self) -> Vec<Vec<usize>> {
        let mut edge_set: HashMap<(usize, usize), u32> = HashMap::new();
        for &(a, b, p) in &self.edges {
            edge_set.insert((a.min(b), a.max(b)), p);
        }
        let mut out = Vec::new();
        let mut perm: Vec<usize> = (0..self.vertices).collect();
        permutations(&mut perm, 0, &mut |pi| {
            let ok = self.edges.iter().all(|&(a, b, p)| {
                let (x, y) = (pi[a], pi[b]);
                edge_set.get(&(x.min(y), x.max(y))) == Some(&p)
            });
            if ok {
                out.push(pi.to_vec());
            }
        });
        out.sort();
        out
    }
}

fn permutations(items: &mut Vec<usize>, k: usize, visit: &mut dyn FnMut(&[usize])) {
    if k == items.len() {
        visit(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permutations(items, k + 1, visit);
        items.swap(k, i);
    }
}

/// Breadth-first products of edge primes from `start`.
fn path_degrees(n: usize, edges: &[(usize, usize, u32)], start: usize) -> Vec<u64> {
    let mut deg = vec![0u64; n];
    deg[start] = 1;
    let mut queue = std::collections::VecDeque::from([start]);
    while let Some(v) = queue.pop_front() {
        for &(a, b, p) in edges {
            let w = if a == v {
                b
            } else if b == v {
                a
            } else {
                continue;
            };
            if deg[w] == 0 {
                deg[w] = deg[v] * u64::from(p);
                queue.push_back(w);
            }
        }
    }
    deg
}

// ---------------------------------------------------------------------------
// Torsion

/// `Z/a x Z/b` with `a | b`; `a` is 1 or 2 over Q.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Torsion {
    pub a: u32,
    pub b: u32,
}

impl Torsion {
    pub const TRIVIAL: Torsion = Torsion { a: 1, b: 1 };

    pub fn order(&self) -> u32 {
        self.a * self.b
    }

    pub fn has_point_of_order(&self, m: u32) -> bool {
        self.b % m == 0
    }

    pub fn has_subgroup_of_order(&self, m: u32) -> bool {
        // subgroups of Z/a x Z/b have every order dividing ab
        self.order() % m == 0
    }
}

impl FromStr for Torsion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Torsion> {
        let t = s.trim();
        let bad = || Error::Torsion(format!("cannot parse torsion {t:?}"));
        let (a, b) = match t.split_once('x') {
            Some((a, b)) => (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?),
            None => (1, t.parse().map_err(|_| bad())?),
        };
        if a == 0 || b == 0 || b % a != 0 || a > 2 {
            return Err(bad());
        }
        let (a, b) = if a == 1 { (1, b) } else { (a, b) };
        // the structures Mazur's theorem allows
        let allowed = match a {
            1 => (1..=10).contains(&b) || b == 12,
            _ => [2, 4, 6, 8].contains(&b),
        };
        if !allowed {
            return Err(Error::Torsion(format!("{t} is not a torsion group of an elliptic curve over Q")));
        }
        Ok(Torsion { a, b })
    }
}

impl fmt::Display for Torsion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.a == 1 {
            write!(f, "{}", self.b)
        } else {
            write!(f, "{}x{}", self.a, self.b)
        }
    }
}

/// A graph type with the torsion at each vertex (`None` = unspecified).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GraphQuery {
    pub graph: GraphType,
    pub torsion: Vec<Option<Torsion>>,
}

impl GraphQuery {
    pub fn new(graph: GraphType, torsion: Vec<Option<Torsion>>) -> Result<GraphQuery> {
        let q = GraphQuery { graph, torsion };
        q.validate()?;
        Ok(q)
    }

    /// All torsion unspecified.
    pub fn unconstrained(graph: GraphType) -> GraphQuery {
        GraphQuery { graph, torsion: vec![None; graph.shape().vertices] }
    }

    /// Parses a comma separated torsion list; `*` leaves a vertex free.
    pub fn parse(graph: &str, torsion: &str) -> Result<GraphQuery> {
        let graph: GraphType = graph.parse()?;
        let torsion = if torsion.trim().is_empty() {
            vec![None; graph.shape().vertices]
        } else {
            torsion
                .split(',')
                .map(|t| match t.trim() {
                    "*" | "?" => Ok(None),
                    s => s.parse().map(Some),
                })
                .collect::<Result<Vec<_>>>()?
        };
        GraphQuery::new(graph, torsion)
    }

    /// The torsion list in the `parse` format.
    pub fn torsion_string(&self) -> String {
        self.torsion
            .iter()
            .map(|t| t.map_or_else(|| "*".to_string(), |t| t.to_string()))
            .collect::<Vec<_>>()
            .join(",")
    }

    /// Each torsion point of prime-power order `q^k` needs a cyclic
    /// `q^k`-isogeny from its vertex, and full 2-torsion needs three 2-edges.
    fn validate(&self) -> Result<()> {
        let shape = self.graph.shape();
        if self.torsion.len() != shape.vertices {
            return Err(Error::Torsion(format!(
                "{} has {} vertices but {} torsion groups were given",
                self.graph,
                shape.vertices,
                self.torsion.len()
            )));
        }
        for (v, t) in self.torsion.iter().enumerate() {
            let Some(t) = t else { continue };
            let degrees = shape.degrees_from(v);
            for (q, k) in prime_power_parts(t.b) {
                let need = u64::from(q.pow(k));
                if !degrees.contains(&need) {
                    return Err(Error::Torsion(format!(
                        "E{} has torsion {t} but no cyclic {need}-isogeny in {}",
                        v + 1,
                        self.graph
                    )));
                }
            }
            if t.a == 2 && shape.edge_count(v, 2) != 3 {
                return Err(Error::Torsion(format!(
                    "E{} has full 2-torsion but not three 2-isogenies in {}",
                    v + 1,
                    self.graph
                )));
            }
            if t.b % 2 == 1 && shape.edge_count(v, 2) > 0 {
                return Err(Error::Torsion(format!(
                    "E{} admits a 2-isogeny so its torsion has even order, got {t}",
                    v + 1
                )));
            }
        }
        Ok(())
    }
}

impl fmt::Display for GraphQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [{}]", self.graph, self.torsion_string())
    }
}

fn prime_power_parts(mut n: u32) -> Vec<(u32, u32)> {
    let mut out = Vec::new();
    let mut p = 2;
    while n > 1 {
        let mut k = 0;
        while n % p == 0 {
            n /= p;
            k += 1;
        }
        if k > 0 {
            out.push((p, k));
        }
        p += 1;
    }
    out
}

/// What a vertex is known to have, as matched against facts.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VertexStructure {
    pub torsion: Option<Torsion>,
    pub points: BTreeSet<u32>,
    pub subgroups: BTreeSet<u32>,
    pub isogenies: BTreeSet<u64>,
}

impl VertexStructure {
    fn of(query: &GraphQuery, shape: &Shape, v: usize) -> VertexStructure {
        let mut s = VertexStructure { torsion: query.torsion[v], ..Default::default() };
        if let Some(t) = s.torsion {
            for m in 2..=t.b {
                if t.has_point_of_order(m) {
                    s.points.insert(m);
                }
            }
            for m in 2..=t.order() {
                if t.has_subgroup_of_order(m) {
                    s.subgroups.insert(m);
                }
            }
        }
        // a rational 2-isogeny has a rational kernel point
        let two_edges = shape.edge_count(v, 2);
        if two_edges > 0 {
            s.points.insert(2);
            s.subgroups.insert(2);
        }
        if two_edges >= 2 {
            s.subgroups.insert(4);
        }
        s.isogenies = shape.degrees_from(v);
        s
    }

    pub fn has(&self, st: &Structure) -> bool {
        match st {
            Structure::Point(m) => self.points.contains(m),
            Structure::Subgroup(m) => self.subgroups.contains(m),
            Structure::Isogeny(d) => self.isogenies.contains(d),
            Structure::Torsion(t) => self.torsion == Some(*t),
        }
    }
}

// ---------------------------------------------------------------------------
// Facts

/// Which labels a fact speaks about.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Scope {
    /// Images conjugate into the group with this label.
    Sub(String),
    /// Exactly this label.
    Eq(String),
    /// Every label except these.
    AllBut(Vec<String>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Structure {
    Point(u32),
    Subgroup(u32),
    Isogeny(u64),
    Torsion(Torsion),
}

impl FromStr for Scope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Scope> {
        let (kind, arg) = s
            .trim()
            .split_once(':')
            .ok_or_else(|| Error::Facts(format!("scope {s:?} needs `kind:labels`")))?;
        let arg = arg.trim();
        match kind.trim() {
            "sub" => Ok(Scope::Sub(arg.to_string())),
            "eq" => Ok(Scope::Eq(arg.to_string())),
            "allbut" => Ok(Scope::AllBut(arg.split(',').map(|l| l.trim().to_string()).collect())),
            other => Err(Error::Facts(format!("unknown scope kind {other:?}"))),
        }
    }
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scope::Sub(l) => write!(f, "sub:{l}"),
            Scope::Eq(l) => write!(f, "eq:{l}"),
            Scope::AllBut(ls) => write!(f, "allbut:{}", ls.join(",")),
        }
    }
}

impl FromStr for Structure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Structure> {
        let (kind, arg) = s
            .trim()
            .split_once(':')
            .ok_or_else(|| Error::Facts(format!("structure {s:?} needs `kind:value`")))?;
        let num = || arg.trim().parse::<u32>().map_err(|_| Error::Facts(format!("bad value in {s:?}")));
        match kind.trim() {
            "point" => Ok(Structure::Point(num()?)),
            "subgroup" => Ok(Structure::Subgroup(num()?)),
            "isogeny" => Ok(Structure::Isogeny(u64::from(num()?))),
            "torsion" => Ok(Structure::Torsion(arg.parse()?)),
            other => Err(Error::Facts(format!("unknown structure kind {other:?}"))),
        }
    }
}

impl fmt::Display for Structure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Structure::Point(m) => write!(f, "point:{m}"),
            Structure::Subgroup(m) => write!(f, "subgroup:{m}"),
            Structure::Isogeny(d) => write!(f, "isogeny:{d}"),
            Structure::Torsion(t) => write!(f, "torsion:{t}"),
        }
    }
}

/// "Images in `scope` have no `structure`", with its source.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fact {
    pub scope: Scope,
    pub structure: Structure,
    pub citation: String,
}

#[derive(Debug, Clone, Default)]
pub struct FactBase {
    facts: Vec<Fact>,
}

impl FactBase {
    /// Parses `scope | structure | citation` lines; `#` starts a comment line.
    pub fn parse(text: &str) -> Result<FactBase> {
        let mut facts = Vec::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.splitn(3, '|').map(str::trim).collect();
            if fields.len() != 3 || fields[2].is_empty() {
                return Err(Error::Facts(format!(
                    "line {}: expected `scope | structure | citation` with a citation",
                    no + 1
                )));
            }
            facts.push(Fact {
                scope: fields[0].parse()?,
                structure: fields[1].parse()?,
                citation: fields[2].to_string(),
            });
        }
        Ok(FactBase { facts })
    }

    pub fn shipped() -> Result<FactBase> {
        FactBase::parse(FACTS)
    }

    pub fn empty() -> FactBase {
        FactBase::default()
    }

    pub fn facts(&self) -> &[Fact] {
        &self.facts
    }

    pub fn push(&mut self, fact: Fact) {
        self.facts.push(fact);
    }

    /// Every label a fact mentions must be in the catalog.
    pub fn validate(&self, catalog: &Catalog) -> Result<()> {
        for f in &self.facts {
            let labels: Vec<&String> = match &f.scope {
                Scope::Sub(l) | Scope::Eq(l) => vec![l],
                Scope::AllBut(ls) => ls.iter().collect(),
            };
            for l in labels {
                if catalog.get(l).is_none() {
                    return Err(Error::Facts(format!("fact `{}` names unknown label {l}", f.scope)));
                }
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Classification

/// One admissible assignment of labels to the vertices.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LabelTuple {
    pub labels: Vec<String>,
    pub conditional: bool,
}

impl LabelTuple {
    pub fn new(labels: Vec<String>) -> LabelTuple {
        let conditional = labels.iter().any(|l| CONDITIONAL_LABELS.contains(&l.as_str()));
        LabelTuple { labels, conditional }
    }
}

impl fmt::Display for LabelTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.labels.join(", "))?;
        if self.conditional {
            write!(f, " [conditional: no such rational point is known]")?;
        }
        Ok(())
    }
}

fn cmp_tuple(a: &[String], b: &[String]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        let c = label_cmp(x, y);
        if c != std::cmp::Ordering::Equal {
            return c;
        }
    }
    a.len().cmp(&b.len())
}

/// Group-theoretic data of one catalog label.
#[derive(Debug, Clone)]
pub struct LabelData {
    pub label: String,
    pub lines: usize,
    /// Output label of the transform through each stable line.
    pub outputs: Vec<Option<String>>,
    pub point3: bool,
    pub point9: bool,
    pub cyclic9: bool,
    /// Labels whose groups contain a conjugate of this one, itself included.
    pub contained_in: BTreeSet<String>,
}

/// Precomputed catalog data for classification.
#[derive(Debug, Clone)]
pub struct Classifier {
    labels: Vec<LabelData>,
    index: HashMap<String, usize>,
}

impl Classifier {
    pub fn new(catalog: &Catalog) -> Result<Classifier> {
        let b9 = borel(9).full_preimage(IMAGE_MODULUS)?;
        let entries: Vec<_> = catalog
            .entries()
            .iter()
            .filter(|e| e.modulus() == IMAGE_MODULUS)
            .collect();
        let mut labels = Vec::with_capacity(entries.len());
        for e in &entries {
            let g = e.group();
            let lines = g.stable_lines(3)?;
            let mut outputs = Vec::with_capacity(lines.len());
            for line in &lines {
                outputs.push(catalog.identify(&transform_image(g, line)?)?);
            }
            let contained_in = entries
                .iter()
                .filter(|h| is_conjugate_into(g, h.group()))
                .map(|h| h.label().to_string())
                .collect();
            labels.push(LabelData {
                label: e.label().to_string(),
                lines: lines.len(),
                outputs,
                point3: has_rational_point_of_order(g, 3)?,
                point9: has_rational_point_of_order(g, 9)?,
                cyclic9: is_conjugate_into(g, &b9),
                contained_in,
            });
        }
        let index = labels.iter().enumerate().map(|(i, d)| (d.label.clone(), i)).collect();
        Ok(Classifier { labels, index })
    }

    pub fn label_data(&self, label: &str) -> Option<&LabelData> {
        self.index.get(label).map(|&i| &self.labels[i])
    }

    pub fn labels(&self) -> impl Iterator<Item = &LabelData> {
        self.labels.iter()
    }

    /// Whether `label` is conjugate into `container`.
    pub fn is_contained(&self, label: &str, container: &str) -> bool {
        self.label_data(label).is_some_and(|d| d.contained_in.contains(container))
    }

    fn excluded(&self, d: &LabelData, s: &VertexStructure, facts: &FactBase) -> bool {
        facts.facts().iter().any(|f| {
            s.has(&f.structure)
                && match &f.scope {
                    Scope::Sub(x) => d.contained_in.contains(x),
                    Scope::Eq(x) => &d.label == x,
                    Scope::AllBut(xs) => !xs.contains(&d.label),
                }
        })
    }

    /// Labels allowed at vertex `v` before edges are considered.
    fn vertex_candidates(&self, q: &GraphQuery, shape: &Shape, v: usize, facts: &FactBase) -> Vec<usize> {
        let s = VertexStructure::of(q, shape, v);
        let three_edges = shape.edge_count(v, 3);
        let cyclic9 = s.isogenies.contains(&9);
        (0..self.labels.len())
            .filter(|&i| {
                let d = &self.labels[i];
                if d.lines != three_edges || d.cyclic9 != cyclic9 {
                    return false;
                }
                if let Some(t) = s.torsion {
                    if d.point3 != t.has_point_of_order(3) || d.point9 != t.has_point_of_order(9) {
                        return false;
                    }
                }
                !self.excluded(d, &s, facts)
            })
            .collect()
    }

    /// Whether the 3-neighbours of `v` can be matched to distinct stable
    /// lines of its label with the right transform outputs.
    fn three_edges_ok(&self, shape: &Shape, v: usize, assign: &[Option<usize>]) -> bool {
        let Some(lv) = assign[v] else { return true };
        let nbrs: Vec<usize> = shape.neighbors(v).filter(|&(_, p)| p == 3).map(|(w, _)| w).collect();
        if nbrs.iter().any(|&w| assign[w].is_none()) {
            return true;
        }
        let outs = &self.labels[lv].outputs;
        let want: Vec<&str> = nbrs.iter().map(|&w| self.labels[assign[w].unwrap()].label.as_str()).collect();
        let mut used = vec![false; outs.len()];
        match_lines(outs, &want, &mut used)
    }

    pub fn classify(&self, q: &GraphQuery, facts: &FactBase) -> Result<Vec<LabelTuple>> {
        q.validate()?;
        let shape = q.graph.shape();
        let domains: Vec<Vec<usize>> =
            (0..shape.vertices).map(|v| self.vertex_candidates(q, &shape, v, facts)).collect();
        let mut found: BTreeSet<Vec<usize>> = BTreeSet::new();
        let mut assign = vec![None; shape.vertices];
        self.search(&shape, &domains, 0, &mut assign, &mut found);

        let autos: Vec<Vec<usize>> = shape
            .automorphisms()
            .into_iter()
            .filter(|pi| (0..shape.vertices).all(|v| q.torsion[pi[v]] == q.torsion[v]))
            .collect();
        let mut out: Vec<Vec<String>> = Vec::new();
        for t in found {
            let labels: Vec<String> = t.iter().map(|&i| self.labels[i].label.clone()).collect();
            out.push(canonical(&labels, &autos));
        }
        out.sort_by(|a, b| cmp_tuple(a, b));
        out.dedup();
        Ok(out.into_iter().map(LabelTuple::new).collect())
    }

    fn search(
        &self,
        shape: &Shape,
        domains: &[Vec<usize>],
        v: usize,
        assign: &mut Vec<Option<usize>>,
        found: &mut BTreeSet<Vec<usize>>,
    ) {
        if v == shape.vertices {
            found.insert(assign.iter().map(|x| x.expect("assigned")).collect());
            return;
        }
        for &cand in &domains[v] {
            assign[v] = Some(cand);
            if self.consistent(shape, v, assign) {
                self.search(shape, domains, v + 1, assign, found);
            }
        }
        assign[v] = None;
    }

    /// Edge rules touching the newly assigned vertex `v`.
    fn consistent(&self, shape: &Shape, v: usize, assign: &[Option<usize>]) -> bool {
        for (w, p) in shape.neighbors(v) {
            let Some(lw) = assign[w] else { continue };
            if p != 3 && Some(lw) != assign[v] {
                return false;
            }
        }
        std::iter::once(v)
            .chain(shape.neighbors(v).filter(|&(_, p)| p == 3).map(|(w, _)| w))
            .all(|x| self.three_edges_ok(shape, x, assign))
    }

    /// Graph types (with every vertex free) whose classification mentions
    /// `label`, with the 1-based positions where it can occur.
    pub fn graphs_for_label(&self, label: &str, facts: &FactBase) -> Result<Vec<GraphOccurrence>> {
        if self.label_data(label).is_none() {
            return Err(Error::UnknownLabel(label.to_string()));
        }
        let mut out = Vec::new();
        for g in GraphType::all() {
            let q = GraphQuery::unconstrained(g);
            let tuples = self.classify(&q, facts)?;
            let autos = g.shape().automorphisms();
            let mut positions = BTreeSet::new();
            for t in &tuples {
                for pi in &autos {
                    for (v, &img) in pi.iter().enumerate() {
                        if t.labels[img] == label {
                            positions.insert(v + 1);
                        }
                    }
                }
            }
            if !positions.is_empty() {
                let conditional = CONDITIONAL_LABELS.contains(&label);
                out.push(GraphOccurrence { graph: g, positions, conditional });
            }
        }
        Ok(out)
    }
}

fn match_lines(outs: &[Option<String>], want: &[&str], used: &mut [bool]) -> bool {
    let Some((first, rest)) = want.split_first() else { return true };
    for i in 0..outs.len() {
        if !used[i] && outs[i].as_deref() == Some(*first) {
            used[i] = true;
            if match_lines(outs, rest, used) {
                used[i] = false;
                return true;
            }
            used[i] = false;
        }
    }
    false
}

/// Least relabelling of `labels` under the given vertex permutations.
pub fn canonical(labels: &[String], autos: &[Vec<usize>]) -> Vec<String> {
    let mut best = labels.to_vec();
    for pi in autos {
        let cand: Vec<String> = pi.iter().map(|&i| labels[i].clone()).collect();
        if cmp_tuple(&cand, &best) == std::cmp::Ordering::Less {
            best = cand;
        }
    }
    best
}

/// Automorphisms of the query graph that keep the given torsion in place.
pub fn torsion_automorphisms(q: &GraphQuery) -> Vec<Vec<usize>> {
    q.graph
        .shape()
        .automorphisms()
        .into_iter()
        .filter(|pi| (0..pi.len()).all(|v| q.torsion[pi[v]] == q.torsion[v]))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphOccurrence {
    pub graph: GraphType,
    pub positions: BTreeSet<usize>,
    pub conditional: bool,
}

impl fmt::Display for GraphOccurrence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pos: Vec<String> = self.positions.iter().map(|p| format!("E{p}")).collect();
        write!(f, "{} at {}", self.graph, pos.join(", "))?;
        if self.conditional {
            write!(f, " (conditional)")?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Oracle of printed tuples

/// A printed tuple for a query; `flag` marks rows known to disagree with the
/// computed classification.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleRow {
    pub query: GraphQuery,
    pub labels: Vec<String>,
    pub flag: Option<String>,
}

/// Parses `graph; torsion; labels[; note]` lines.
pub fn parse_oracle(text: &str) -> Result<Vec<OracleRow>> {
    let mut rows = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(';').map(str::trim).collect();
        if fields.len() < 3 || fields.len() > 4 {
            return Err(Error::Parse(format!("oracle line {}: expected 3 or 4 fields", no + 1)));
        }
        let query = GraphQuery::parse(fields[0], fields[1])?;
        let labels: Vec<String> = fields[2].split(',').map(|l| l.trim().to_string()).collect();
        if labels.len() != query.torsion.len() {
            return Err(Error::Parse(format!("oracle line {}: tuple length mismatch", no + 1)));
        }
        let flag = fields.get(3).filter(|s| !s.is_empty()).map(|s| s.to_string());
        rows.push(OracleRow { query, labels, flag });
    }
    Ok(rows)
}

/// Printed versus computed tuples for one query.
#[derive(Debug, Clone)]
pub struct OracleCheck {
    pub query: GraphQuery,
    pub printed: Vec<Vec<String>>,
    pub computed: Vec<LabelTuple>,
    /// Flagged printed rows with the computed tuple they most likely stand for.
    pub flagged: Vec<(Vec<String>, Option<Vec<String>>, String)>,
    pub missing: Vec<Vec<String>>,
    pub unexpected: Vec<Vec<String>>,
}

impl OracleCheck {
    pub fn passed(&self) -> bool {
        self.missing.is_empty()
            && self.unexpected.is_empty()
            && self.flagged.iter().all(|(_, m, _)| m.is_some())
    }
}

/// Compares the classification of every oracle query with its printed rows.
pub fn check_oracle(c: &Classifier, facts: &FactBase, rows: &[OracleRow]) -> Result<Vec<OracleCheck>> {
    let mut groups: Vec<(GraphQuery, Vec<&OracleRow>)> = Vec::new();
    for r in rows {
        match groups.iter_mut().find(|(q, _)| q == &r.query) {
            Some((_, v)) => v.push(r),
            None => groups.push((r.query.clone(), vec![r])),
        }
    }
    let mut out = Vec::new();
    for (query, rs) in groups {
        let computed = c.classify(&query, facts)?;
        let autos = torsion_automorphisms(&query);
        let mut pending: Vec<Vec<String>> = computed.iter().map(|t| t.labels.clone()).collect();
        let mut printed = Vec::new();
        let mut missing = Vec::new();
        let mut flagged_rows = Vec::new();
        for r in &rs {
            let canon = canonical(&r.labels, &autos);
            printed.push(canon.clone());
            if let Some(flag) = r.flag.as_ref().filter(|f| f.as_str() != "conditional") {
                flagged_rows.push((canon, flag.clone()));
                continue;
            }
            match pending.iter().position(|t| t == &canon) {
                Some(i) => {
                    pending.remove(i);
                }
                None => missing.push(canon),
            }
        }
        let mut flagged = Vec::new();
        for (canon, flag) in flagged_rows {
            // a flagged row stands for the computed tuple it differs from in one place
            let hit = pending.iter().position(|t| {
                autos.iter().any(|pi| {
                    let img: Vec<&String> = pi.iter().map(|&i| &t[i]).collect();
                    img.iter().zip(&canon).filter(|(a, b)| **a != *b).count() <= 1
                })
            });
            let matched = hit.map(|i| pending.remove(i));
            flagged.push((canon, matched, flag));
        }
        out.push(OracleCheck { query, printed, computed, flagged, missing, unexpected: pending });
    }
    Ok(out)
}

/// Counts of labels per graph type, for reports.
pub fn label_histogram(tuples: &[LabelTuple]) -> BTreeMap<String, usize> {
    let mut h = BTreeMap::new();
    for t in tuples {
        for l in &t.labels {
            *h.entry(l.clone()).or_insert(0) += 1;
        }
    }
    h
}

/// The label of the full group, for callers matching "maximal image".
pub fn full_label() -> &'static str {
    FULL_LABEL
}
