//! The combinatorial datum of a decorated bunch of chains.
//!
//! A bunch consists of two disjoint element sets E and F, a pairing ~ with
//! classes of size at most two, a symmetric relation - between E and F, a
//! partial order <= concentrated on the sides of each theta-class (theta is
//! the equivalence closure of -), and a convex subrelation <| of <=.  The
//! reflexive part of <| singles out the decorated elements Delta, which
//! carry D-level congruence constraints in representations.
//!
//! Input files may list generators for <= and <|; the loader closes both
//! transitively (and <| reflexively on its carrier) before validation, so
//! the reduction algorithm can query comparability directly.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::DbcError;

/// Raw, serializable form of a bunch (the JSON schema).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BunchSpec {
    #[serde(rename = "E")]
    pub e: Vec<String>,
    #[serde(rename = "F")]
    pub f: Vec<String>,
    #[serde(default)]
    pub sim: Vec<(String, String)>,
    #[serde(default)]
    pub dash: Vec<(String, String)>,
    #[serde(default)]
    pub le: Vec<(String, String)>,
    #[serde(default)]
    pub tri: Vec<(String, String)>,
}

/// A violation of the bunch axioms, reported as data.
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    DuplicateElement(String),
    SimClassTooLarge(String, String, String),
    DashNotCrossing(String, String),
    OrderNotConcentrated(String, String),
    OrderNotAntisymmetric(String, String),
    SideNotChain(String, String),
    DecorationNotSimClosed(String, String),
    DashCompletionViolation(String, String, String, String),
    ConvexityViolation(String, String, String),
    TriOutsideLe(String, String),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateElement(a) => write!(f, "duplicate element {a}"),
            Violation::SimClassTooLarge(a, b, c) => {
                write!(f, "sim class with more than two elements: {a}, {b}, {c}")
            }
            Violation::DashNotCrossing(a, b) => {
                write!(f, "dash {a} - {b} does not cross between E and F")
            }
            Violation::OrderNotConcentrated(a, b) => {
                write!(f, "{a} <= {b} crosses sides or theta-classes")
            }
            Violation::OrderNotAntisymmetric(a, b) => {
                write!(f, "{a} <= {b} and {b} <= {a} for distinct elements")
            }
            Violation::SideNotChain(a, b) => {
                write!(f, "{a} and {b} share a side of a theta-class but are incomparable")
            }
            Violation::DecorationNotSimClosed(a, b) => {
                write!(f, "{a} is decorated but its partner {b} is not")
            }
            Violation::DashCompletionViolation(x, y, xp, yp) => write!(
                f,
                "dash completion fails: {x} < {xp}, {y} < {yp} with {x}-{yp}, {xp}-{y}, {xp}-{yp} but no {x}-{y}"
            ),
            Violation::ConvexityViolation(x, y, z) => {
                write!(f, "convexity fails at {x} <= {y} <= {z} with {x} <| {z}")
            }
            Violation::TriOutsideLe(a, b) => write!(f, "{a} <| {b} is not inside <="),
        }
    }
}

/// The coefficient rings attached to ordered pairs of elements.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum CoeffRing {
    Zero,
    K,
    D,
    PD,
}

/// A validated decorated bunch of chains, indexed internally by element id.
#[derive(Clone, Debug)]
pub struct DecoratedBunch {
    names: Vec<String>,
    index: BTreeMap<String, usize>,
    in_e: Vec<bool>,
    partner: Vec<Option<usize>>,
    dash: BTreeSet<(usize, usize)>, // stored with the E element first
    le: Vec<Vec<bool>>,             // reflexive-transitive
    tri: Vec<Vec<bool>>,            // transitive; reflexive pairs mark Delta
    theta: Vec<usize>,
}

impl DecoratedBunch {
    /// Builds from a raw spec, closing <= and <| as documented.  The axioms
    /// are *not* enforced here; call [`DecoratedBunch::validate`].
    pub fn from_spec(spec: &BunchSpec) -> Result<Self, DbcError> {
        let mut names = vec![];
        let mut index = BTreeMap::new();
        let mut in_e = vec![];
        for (list, side) in [(&spec.e, true), (&spec.f, false)] {
            for n in list {
                if index.contains_key(n) {
                    return Err(DbcError::InvalidBunch(format!("duplicate element {n}")));
                }
                index.insert(n.clone(), names.len());
                names.push(n.clone());
                in_e.push(side);
            }
        }
        let look = |n: &String| -> Result<usize, DbcError> {
            index
                .get(n)
                .copied()
                .ok_or_else(|| DbcError::UnknownElement(n.clone()))
        };
        let n = names.len();
        let mut partner: Vec<Option<usize>> = vec![None; n];
        for (a, b) in &spec.sim {
            let (ia, ib) = (look(a)?, look(b)?);
            if ia == ib {
                continue;
            }
            for (x, y) in [(ia, ib), (ib, ia)] {
                match partner[x] {
                    None => partner[x] = Some(y),
                    Some(p) if p == y => {}
                    Some(p) => {
                        return Err(DbcError::InvalidBunch(format!(
                            "sim class of {} has more than two elements ({}, {})",
                            names[x], names[p], names[y]
                        )))
                    }
                }
            }
        }
        let mut dash = BTreeSet::new();
        for (a, b) in &spec.dash {
            let (ia, ib) = (look(a)?, look(b)?);
            let (e, f) = if in_e[ia] { (ia, ib) } else { (ib, ia) };
            dash.insert((e, f));
        }
        let mut le = vec![vec![false; n]; n];
        for i in 0..n {
            le[i][i] = true;
        }
        for (a, b) in &spec.le {
            le[look(a)?][look(b)?] = true;
        }
        let mut tri = vec![vec![false; n]; n];
        for (a, b) in &spec.tri {
            let (ia, ib) = (look(a)?, look(b)?);
            tri[ia][ib] = true;
            // convexity forces the reflexive pairs of any related elements
            tri[ia][ia] = true;
            tri[ib][ib] = true;
            le[ia][ib] = true;
        }
        close_transitive(&mut le);
        close_transitive(&mut tri);
        let theta = theta_classes(n, &dash);
        Ok(DecoratedBunch {
            names,
            index,
            in_e,
            partner,
            dash,
            le,
            tri,
            theta,
        })
    }

    pub fn to_spec(&self) -> BunchSpec {
        let n = self.names.len();
        let mut sim = vec![];
        for i in 0..n {
            if let Some(p) = self.partner[i] {
                if i < p {
                    sim.push((self.names[i].clone(), self.names[p].clone()));
                }
            }
        }
        let dash = self
            .dash
            .iter()
            .map(|&(e, f)| (self.names[e].clone(), self.names[f].clone()))
            .collect();
        let mut le = vec![];
        let mut tri = vec![];
        for i in 0..n {
            for j in 0..n {
                if i != j && self.le[i][j] {
                    le.push((self.names[i].clone(), self.names[j].clone()));
                }
                if self.tri[i][j] && (i != j || self.is_decorated_id(i)) {
                    tri.push((self.names[i].clone(), self.names[j].clone()));
                }
            }
        }
        BunchSpec {
            e: (0..n)
                .filter(|&i| self.in_e[i])
                .map(|i| self.names[i].clone())
                .collect(),
            f: (0..n)
                .filter(|&i| !self.in_e[i])
                .map(|i| self.names[i].clone())
                .collect(),
            sim,
            dash,
            le,
            tri,
        }
    }

    pub fn id(&self, name: &str) -> Result<usize, DbcError> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| DbcError::UnknownElement(name.to_string()))
    }

    pub fn name(&self, id: usize) -> &str {
        &self.names[id]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn element_names(&self) -> &[String] {
        &self.names
    }

    pub fn is_e_id(&self, i: usize) -> bool {
        self.in_e[i]
    }

    pub fn partner_id(&self, i: usize) -> Option<usize> {
        self.partner[i]
    }

    pub fn is_decorated_id(&self, i: usize) -> bool {
        self.tri[i][i]
    }

    pub fn le_id(&self, a: usize, b: usize) -> bool {
        self.le[a][b]
    }

    pub fn lt_id(&self, a: usize, b: usize) -> bool {
        a != b && self.le[a][b]
    }

    pub fn tri_id(&self, a: usize, b: usize) -> bool {
        self.tri[a][b]
    }

    /// Strict part of <= minus <| (the paper's "prec").
    pub fn prec_id(&self, a: usize, b: usize) -> bool {
        self.lt_id(a, b) && !self.tri[a][b]
    }

    pub fn parallel_id(&self, a: usize, b: usize) -> bool {
        self.in_e[a] == self.in_e[b]
    }

    pub fn has_dash_id(&self, a: usize, b: usize) -> bool {
        let (e, f) = if self.in_e[a] { (a, b) } else { (b, a) };
        self.dash.contains(&(e, f))
    }

    pub fn theta_id(&self, a: usize) -> usize {
        self.theta[a]
    }

    /// All pairs (e, f) with e in E, f in F and e - f; the index set of the
    /// block matrices of a representation.
    pub fn dash_pairs(&self) -> Vec<(usize, usize)> {
        self.dash.iter().cloned().collect()
    }

    pub fn dashes_of(&self, i: usize) -> Vec<usize> {
        self.dash
            .iter()
            .filter_map(|&(e, f)| {
                if e == i {
                    Some(f)
                } else if f == i {
                    Some(e)
                } else {
                    None
                }
            })
            .collect()
    }

    /// The <|-intervals: maximal subchains on which every strictly related
    /// pair lies in <|.  Non-decorated elements form singleton intervals.
    /// Intervals are returned per (theta-class, side), each interval sorted
    /// ascending by <=, and the list of intervals sorted ascending as well.
    pub fn tri_intervals(&self) -> Vec<Vec<String>> {
        self.tri_interval_ids()
            .into_iter()
            .map(|iv| iv.into_iter().map(|i| self.names[i].clone()).collect())
            .collect()
    }

    pub fn tri_interval_ids(&self) -> Vec<Vec<usize>> {
        let n = self.names.len();
        let mut out = vec![];
        let mut classes: BTreeMap<(usize, bool), Vec<usize>> = BTreeMap::new();
        for i in 0..n {
            classes.entry((self.theta[i], self.in_e[i])).or_default().push(i);
        }
        for (_, mut chain) in classes {
            // sort ascending by <=
            chain.sort_by(|&a, &b| {
                if a == b {
                    std::cmp::Ordering::Equal
                } else if self.le[a][b] {
                    std::cmp::Ordering::Less
                } else if self.le[b][a] {
                    std::cmp::Ordering::Greater
                } else {
                    // incomparable inside a chain is an axiom violation;
                    // order by id to stay deterministic
                    a.cmp(&b)
                }
            });
            let mut cur: Vec<usize> = vec![];
            for &x in &chain {
                let extend = match cur.last() {
                    Some(&prev) => self.tri[prev][x],
                    None => false,
                };
                if extend {
                    cur.push(x);
                } else {
                    if !cur.is_empty() {
                        out.push(std::mem::take(&mut cur));
                    }
                    cur.push(x);
                }
            }
            if !cur.is_empty() {
                out.push(cur);
            }
        }
        out
    }

    /// The interval containing a given element.
    pub fn interval_of(&self, i: usize) -> Vec<usize> {
        self.tri_interval_ids()
            .into_iter()
            .find(|iv| iv.contains(&i))
            .expect("element in some interval")
    }

    /// Checks all bunch axioms; an empty list means the bunch is valid.
    pub fn validate(&self) -> Vec<Violation> {
        let n = self.names.len();
        let mut out = vec![];
        let name = |i: usize| self.names[i].clone();
        // dash crosses sides
        for &(e, f) in &self.dash {
            if self.in_e[e] == self.in_e[f] {
                out.push(Violation::DashNotCrossing(name(e), name(f)));
            }
        }
        // order concentrated on sides of theta-classes; antisymmetric
        for a in 0..n {
            for b in 0..n {
                if a == b || !self.le[a][b] {
                    continue;
                }
                if self.le[b][a] {
                    if a < b {
                        out.push(Violation::OrderNotAntisymmetric(name(a), name(b)));
                    }
                    continue;
                }
                if self.in_e[a] != self.in_e[b] || self.theta[a] != self.theta[b] {
                    out.push(Violation::OrderNotConcentrated(name(a), name(b)));
                }
            }
        }
        // (i) each side of each theta-class is a chain
        for a in 0..n {
            for b in (a + 1)..n {
                if self.in_e[a] == self.in_e[b]
                    && self.theta[a] == self.theta[b]
                    && !self.le[a][b]
                    && !self.le[b][a]
                {
                    out.push(Violation::SideNotChain(name(a), name(b)));
                }
            }
        }
        // (ii) decoration is sim-closed
        for a in 0..n {
            if let Some(p) = self.partner[a] {
                if self.is_decorated_id(a) && !self.is_decorated_id(p) {
                    out.push(Violation::DecorationNotSimClosed(name(a), name(p)));
                }
            }
        }
        // (iii) dash completion
        for &(x, yp) in &self.dash {
            for &(xp, y) in &self.dash {
                if self.lt_id(x, xp) && self.lt_id(y, yp) && self.has_dash_id(xp, yp) {
                    let (e, f) = (x, y);
                    if !self.dash.contains(&(e, f)) {
                        out.push(Violation::DashCompletionViolation(
                            name(x),
                            name(y),
                            name(xp),
                            name(yp),
                        ));
                    }
                }
            }
        }
        // tri inside le, convexity
        for a in 0..n {
            for b in 0..n {
                if self.tri[a][b] && !self.le[a][b] {
                    out.push(Violation::TriOutsideLe(name(a), name(b)));
                }
            }
        }
        for a in 0..n {
            for c in 0..n {
                if a == c || !self.tri[a][c] {
                    continue;
                }
                for b in 0..n {
                    if b == a || b == c {
                        continue;
                    }
                    if self.le[a][b] && self.le[b][c] && (!self.tri[a][b] || !self.tri[b][c]) {
                        out.push(Violation::ConvexityViolation(name(a), name(b), name(c)));
                    }
                }
            }
        }
        out
    }

    /// The coefficient ring C(x, y) from the definition of the category.
    pub fn coefficient_ring(&self, x: &str, y: &str) -> Result<CoeffRing, DbcError> {
        let (a, b) = (self.id(x)?, self.id(y)?);
        Ok(self.coefficient_ring_id(a, b))
    }

    pub fn coefficient_ring_id(&self, x: usize, y: usize) -> CoeffRing {
        if x == y {
            return if self.is_decorated_id(x) {
                CoeffRing::D
            } else {
                CoeffRing::K
            };
        }
        if self.lt_id(y, x) {
            if self.tri[y][x] {
                CoeffRing::D
            } else {
                CoeffRing::K
            }
        } else if self.lt_id(x, y) {
            if self.tri[x][y] {
                CoeffRing::PD
            } else {
                CoeffRing::Zero
            }
        } else {
            CoeffRing::Zero
        }
    }

    /// The bimodule ring B(x, y): K iff x - y with x in F and y in E.
    pub fn bimodule_ring(&self, x: &str, y: &str) -> Result<CoeffRing, DbcError> {
        let (a, b) = (self.id(x)?, self.id(y)?);
        Ok(
            if !self.in_e[a] && self.in_e[b] && self.has_dash_id(a, b) {
                CoeffRing::K
            } else {
                CoeffRing::Zero
            },
        )
    }
}

fn close_transitive(m: &mut [Vec<bool>]) {
    let n = m.len();
    for k in 0..n {
        for i in 0..n {
            if m[i][k] {
                for j in 0..n {
                    if m[k][j] {
                        m[i][j] = true;
                    }
                }
            }
        }
    }
}

fn theta_classes(n: usize, dash: &BTreeSet<(usize, usize)>) -> Vec<usize> {
    // union-find over the dash relation
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for &(e, f) in dash {
        let (re, rf) = (find(&mut parent, e), find(&mut parent, f));
        if re != rf {
            parent[re] = rf;
        }
    }
    let mut label = BTreeMap::new();
    let mut out = vec![0; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        let next = label.len();
        out[i] = *label.entry(r).or_insert(next);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(
        e: &[&str],
        f: &[&str],
        sim: &[(&str, &str)],
        dash: &[(&str, &str)],
        le: &[(&str, &str)],
        tri: &[(&str, &str)],
    ) -> BunchSpec {
        let pair = |v: &[(&str, &str)]| {
            v.iter()
                .map(|(a, b)| (a.to_string(), b.to_string()))
                .collect()
        };
        BunchSpec {
            e: e.iter().map(|s| s.to_string()).collect(),
            f: f.iter().map(|s| s.to_string()).collect(),
            sim: pair(sim),
            dash: pair(dash),
            le: pair(le),
            tri: pair(tri),
        }
    }

    #[test]
    fn sim_class_too_large_rejected() {
        let s = spec(
            &["a", "b", "c"],
            &["w"],
            &[("a", "b"), ("b", "c")],
            &[],
            &[],
            &[],
        );
        assert!(DecoratedBunch::from_spec(&s).is_err());
    }

    #[test]
    fn convexity_violation_detected() {
        // x <= y <= z with x <| z but y detached from <|
        let s = spec(
            &["x", "y", "z"],
            &["w"],
            &[],
            &[("x", "w"), ("y", "w"), ("z", "w")],
            &[("x", "y"), ("y", "z")],
            &[("x", "z")],
        );
        let b = DecoratedBunch::from_spec(&s).unwrap();
        let v = b.validate();
        assert!(v
            .iter()
            .any(|x| matches!(x, Violation::ConvexityViolation(a, b, c)
                if a == "x" && b == "y" && c == "z")));
    }

    #[test]
    fn coefficient_rings() {
        // chain x1 <| x2 fully decorated; singleton non-decorated f-side
        let s = spec(
            &["x1", "x2"],
            &["f1", "f2"],
            &[],
            &[("x1", "f1"), ("x2", "f1")],
            &[],
            &[("x1", "x2")],
        );
        let b = DecoratedBunch::from_spec(&s).unwrap();
        assert_eq!(b.coefficient_ring("x1", "x1").unwrap(), CoeffRing::D);
        assert_eq!(b.coefficient_ring("f1", "f1").unwrap(), CoeffRing::K);
        // x1 <| x2: C(x1, x2) = pD, C(x2, x1) = D
        assert_eq!(b.coefficient_ring("x1", "x2").unwrap(), CoeffRing::PD);
        assert_eq!(b.coefficient_ring("x2", "x1").unwrap(), CoeffRing::D);
        // different theta classes: zero
        assert_eq!(b.coefficient_ring("x1", "f2").unwrap(), CoeffRing::Zero);
        // bimodule: K only from F to E along a dash
        assert_eq!(b.bimodule_ring("f1", "x1").unwrap(), CoeffRing::K);
        assert_eq!(b.bimodule_ring("x1", "f1").unwrap(), CoeffRing::Zero);
        assert_eq!(b.bimodule_ring("f2", "x1").unwrap(), CoeffRing::Zero);
    }

    #[test]
    fn antisymmetry_of_tables() {
        let s = spec(
            &["x1", "x2", "x3"],
            &["f"],
            &[],
            &[("x1", "f"), ("x2", "f"), ("x3", "f")],
            &[],
            &[("x1", "x2"), ("x2", "x3")],
        );
        let b = DecoratedBunch::from_spec(&s).unwrap();
        assert!(b.validate().is_empty());
        for x in ["x1", "x2", "x3"] {
            for y in ["x1", "x2", "x3"] {
                if x != y {
                    let c1 = b.coefficient_ring(x, y).unwrap();
                    let c2 = b.coefficient_ring(y, x).unwrap();
                    assert!(
                        (c1 == CoeffRing::PD) == (c2 == CoeffRing::D),
                        "pD/D antisymmetry"
                    );
                }
            }
        }
    }

    #[test]
    fn intervals() {
        // chain x1 <| x2 <| x3 (transitively closed): one interval
        let s = spec(
            &["x1", "x2", "x3"],
            &["f"],
            &[],
            &[("x1", "f"), ("x2", "f"), ("x3", "f")],
            &[],
            &[("x1", "x2"), ("x2", "x3")],
        );
        let b = DecoratedBunch::from_spec(&s).unwrap();
        let ivs = b.tri_intervals();
        assert!(ivs.contains(&vec![
            "x1".to_string(),
            "x2".to_string(),
            "x3".to_string()
        ]));
        // two decorated singletons separated by prec: two intervals
        let s = spec(
            &["a", "b"],
            &["f"],
            &[],
            &[("a", "f"), ("b", "f")],
            &[("a", "b")],
            &[("a", "a"), ("b", "b")],
        );
        let b = DecoratedBunch::from_spec(&s).unwrap();
        assert!(b.validate().is_empty());
        let ivs = b.tri_intervals();
        assert!(ivs.contains(&vec!["a".to_string()]));
        assert!(ivs.contains(&vec!["b".to_string()]));
    }

    #[test]
    fn json_round_trip() {
        let s = spec(
            &["x1"],
            &["f1"],
            &[],
            &[("x1", "f1")],
            &[],
            &[("x1", "x1")],
        );
        let b = DecoratedBunch::from_spec(&s).unwrap();
        let text = serde_json::to_string(&b.to_spec()).unwrap();
        let s2: BunchSpec = serde_json::from_str(&text).unwrap();
        let b2 = DecoratedBunch::from_spec(&s2).unwrap();
        assert_eq!(b.element_names(), b2.element_names());
        assert_eq!(b.is_decorated_id(0), b2.is_decorated_id(0));
    }
}
