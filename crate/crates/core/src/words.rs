//! Words and cycles over a decorated bunch of chains.
//!
//! A word is an alternating sequence x1 r1 x2 ... x_n where each connector
//! r_i is either ~ (linking the two members of a sim-class) or a decorated
//! dash -[d]- (linking a dash-related pair).  A cycle closes a cyclic word
//! with one more decorated dash.  Words and cycles parametrize the string
//! and band representations.
//!
//! Two words are equivalent when they differ by the elementary decoration
//! moves: at a non-decorated letter x_i carrying a dash r_i one may change
//! d_i by k, compensating at d_{i-2} with the sign fixed by whether x_i and
//! x_{i-1} lie on the same side.  The canonical form zeroes every such
//! adjustable decoration by a fixed descending sweep, which makes
//! equivalence decidable by literal comparison.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::bunch::DecoratedBunch;
use crate::error::DbcError;

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum Connector {
    Sim,
    Dash(i64),
}

impl Connector {
    pub fn is_dash(&self) -> bool {
        matches!(self, Connector::Dash(_))
    }
}

/// An open word.  Letters are element names of the ambient bunch.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct Word {
    pub letters: Vec<String>,
    pub connectors: Vec<Connector>,
}

/// A cycle (w, d): a cyclic word plus the closing dash decoration.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct Cycle {
    pub word: Word,
    pub d: i64,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Parity {
    Even,
    Odd,
}

#[derive(Clone, Debug, PartialEq)]
pub enum WordViolation {
    UnknownLetter(String),
    LengthMismatch,
    SimMismatch(String, String),
    DashMismatch(String, String),
    AlternationViolation(usize),
    EndConditionViolation(String),
    NotCyclic(String),
    OddLength(usize),
}

impl fmt::Display for WordViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WordViolation::UnknownLetter(x) => write!(f, "unknown letter {x}"),
            WordViolation::LengthMismatch => write!(f, "connector count must be length - 1"),
            WordViolation::SimMismatch(a, b) => write!(f, "{a} ~ {b} is not a sim pair"),
            WordViolation::DashMismatch(a, b) => write!(f, "{a} - {b} is not a dash pair"),
            WordViolation::AlternationViolation(i) => {
                write!(f, "connectors {i} and {} do not alternate", i + 1)
            }
            WordViolation::EndConditionViolation(x) => write!(
                f,
                "end letter {x} has a sim partner but is not joined to it"
            ),
            WordViolation::NotCyclic(m) => write!(f, "not a cyclic word: {m}"),
            WordViolation::OddLength(n) => write!(f, "cycle length {n} is odd"),
        }
    }
}

impl Word {
    pub fn single(letter: &str) -> Self {
        Word {
            letters: vec![letter.to_string()],
            connectors: vec![],
        }
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// The opposite word: reversal of letters and connectors.
    pub fn opposite(&self) -> Self {
        Word {
            letters: self.letters.iter().rev().cloned().collect(),
            connectors: self.connectors.iter().rev().cloned().collect(),
        }
    }
}

impl Cycle {
    pub fn len(&self) -> usize {
        self.word.len()
    }

    pub fn is_empty(&self) -> bool {
        self.word.is_empty()
    }

    /// The opposite cycle (w*, d).
    pub fn opposite(&self) -> Self {
        Cycle {
            word: self.word.opposite(),
            d: self.d,
        }
    }

    /// The full cyclic connector sequence r_1 ... r_n (closing last).
    pub fn all_connectors(&self) -> Vec<Connector> {
        let mut v = self.word.connectors.clone();
        v.push(Connector::Dash(self.d));
        v
    }
}

/// Checks the word axioms against a bunch; empty result means valid.
pub fn validate_word(b: &DecoratedBunch, w: &Word) -> Vec<WordViolation> {
    let mut out = vec![];
    if w.is_empty() {
        return out;
    }
    if w.connectors.len() + 1 != w.letters.len() {
        out.push(WordViolation::LengthMismatch);
        return out;
    }
    let mut ids = vec![];
    for l in &w.letters {
        match b.id(l) {
            Ok(i) => ids.push(Some(i)),
            Err(_) => {
                out.push(WordViolation::UnknownLetter(l.clone()));
                ids.push(None);
            }
        }
    }
    for (i, c) in w.connectors.iter().enumerate() {
        let (Some(a), Some(bb)) = (ids[i], ids[i + 1]) else {
            continue;
        };
        match c {
            Connector::Sim => {
                if b.partner_id(a) != Some(bb) {
                    out.push(WordViolation::SimMismatch(
                        w.letters[i].clone(),
                        w.letters[i + 1].clone(),
                    ));
                }
            }
            Connector::Dash(_) => {
                if !b.has_dash_id(a, bb) {
                    out.push(WordViolation::DashMismatch(
                        w.letters[i].clone(),
                        w.letters[i + 1].clone(),
                    ));
                }
            }
        }
    }
    for i in 0..w.connectors.len().saturating_sub(1) {
        if w.connectors[i].is_dash() == w.connectors[i + 1].is_dash() {
            out.push(WordViolation::AlternationViolation(i + 1));
        }
    }
    // end conditions
    if let Some(first) = ids[0] {
        if b.partner_id(first).is_some()
            && w.connectors.first().map_or(true, |c| c.is_dash())
        {
            out.push(WordViolation::EndConditionViolation(w.letters[0].clone()));
        }
    }
    if let Some(&last) = ids.last().unwrap_or(&None).as_ref() {
        if b.partner_id(last).is_some()
            && w.connectors.last().map_or(true, |c| c.is_dash())
        {
            out.push(WordViolation::EndConditionViolation(
                w.letters.last().unwrap().clone(),
            ));
        }
    }
    out
}

/// Checks the cycle axioms: the underlying word must be cyclic-valid.
pub fn validate_cycle(b: &DecoratedBunch, c: &Cycle) -> Vec<WordViolation> {
    let w = &c.word;
    let mut out = vec![];
    if w.len() < 2 {
        out.push(WordViolation::NotCyclic("length < 2".into()));
        return out;
    }
    if w.len() % 2 != 0 {
        out.push(WordViolation::OddLength(w.len()));
    }
    if w.connectors.len() + 1 != w.letters.len() {
        out.push(WordViolation::LengthMismatch);
        return out;
    }
    // interior checks, without the open-word end conditions
    let mut ids = vec![];
    for l in &w.letters {
        match b.id(l) {
            Ok(i) => ids.push(Some(i)),
            Err(_) => {
                out.push(WordViolation::UnknownLetter(l.clone()));
                ids.push(None);
            }
        }
    }
    for (i, conn) in w.connectors.iter().enumerate() {
        let (Some(a), Some(bb)) = (ids[i], ids[i + 1]) else {
            continue;
        };
        match conn {
            Connector::Sim => {
                if b.partner_id(a) != Some(bb) {
                    out.push(WordViolation::SimMismatch(
                        w.letters[i].clone(),
                        w.letters[i + 1].clone(),
                    ));
                }
            }
            Connector::Dash(_) => {
                if !b.has_dash_id(a, bb) {
                    out.push(WordViolation::DashMismatch(
                        w.letters[i].clone(),
                        w.letters[i + 1].clone(),
                    ));
                }
            }
        }
    }
    for i in 0..w.connectors.len().saturating_sub(1) {
        if w.connectors[i].is_dash() == w.connectors[i + 1].is_dash() {
            out.push(WordViolation::AlternationViolation(i + 1));
        }
    }
    if w.connectors.first().map_or(true, |c| c.is_dash()) {
        out.push(WordViolation::NotCyclic("first connector must be ~".into()));
    }
    if w.connectors.last().map_or(true, |c| c.is_dash()) {
        out.push(WordViolation::NotCyclic("last connector must be ~".into()));
    }
    if let (Some(first), Some(last)) = (ids[0], *ids.last().unwrap()) {
        if !b.has_dash_id(last, first) {
            out.push(WordViolation::NotCyclic(format!(
                "no closing dash {} - {}",
                w.letters.last().unwrap(),
                w.letters[0]
            )));
        }
    }
    out
}

/// True iff some letter of the cycle is decorated.
pub fn cycle_is_decorated(b: &DecoratedBunch, c: &Cycle) -> bool {
    c.word
        .letters
        .iter()
        .any(|l| b.id(l).map(|i| b.is_decorated_id(i)).unwrap_or(false))
}

/// The k-th shift of a cycle: rotation by 2k letters, with the displaced
/// decoration becoming the new closing one.  Returns the shifted cycle and
/// its parity (the count of parallel pairs (x_{2i+1}, x_{2i}) for i < k).
pub fn shift(b: &DecoratedBunch, c: &Cycle, k: usize) -> Result<(Cycle, Parity), DbcError> {
    let n = c.len();
    if n == 0 || 2 * k >= n {
        if k == 0 {
            return Ok((c.clone(), Parity::Even));
        }
        return Err(DbcError::BadShiftIndex(k, n));
    }
    if k == 0 {
        return Ok((c.clone(), Parity::Even));
    }
    let r = c.all_connectors(); // r[0] = r_1, ..., r[n-1] = r_n = closing
    let letters: Vec<String> = (0..n)
        .map(|i| c.word.letters[(2 * k + i) % n].clone())
        .collect();
    let connectors: Vec<Connector> = (0..n - 1).map(|i| r[(2 * k + i) % n]).collect();
    let Connector::Dash(new_d) = r[2 * k - 1] else {
        return Err(DbcError::InvalidWord(
            "shift seam is not a dash; cycle is malformed".into(),
        ));
    };
    // parity: count i in [0, k) with x_{2i+1} parallel to x_{2i}, indices mod n
    let mut m = 0usize;
    for i in 0..k {
        let a = c.word.letters[(2 * i) % n].clone(); // x_{2i+1} in 1-based
        let prev = if 2 * i == 0 {
            c.word.letters[n - 1].clone() // x_0 = x_n
        } else {
            c.word.letters[2 * i - 1].clone()
        };
        let (ia, ip) = (b.id(&a)?, b.id(&prev)?);
        if b.parallel_id(ia, ip) {
            m += 1;
        }
    }
    Ok((
        Cycle {
            word: Word {
                letters,
                connectors,
            },
            d: new_d,
        },
        if m % 2 == 0 { Parity::Even } else { Parity::Odd },
    ))
}

/// True iff the cycle is a power of a shorter cyclic word, decorations
/// included.
pub fn is_periodic(c: &Cycle) -> bool {
    let n = c.len();
    if n < 4 {
        return false;
    }
    let r = c.all_connectors();
    'period: for p in (2..n).step_by(2) {
        if n % p != 0 {
            continue;
        }
        for i in 0..n {
            if c.word.letters[i] != c.word.letters[(i + p) % n] || r[i] != r[(i + p) % n] {
                continue 'period;
            }
        }
        return true;
    }
    false
}

/// Canonical form of a word: every decoration attached to a non-decorated
/// letter is swept to zero, right to left, absorbing the compensation into
/// the next dash to the left.  Equivalent words have identical canonical
/// forms; the sweep itself is a composition of elementary moves.
pub fn canonicalize_word(b: &DecoratedBunch, w: &Word) -> Result<Word, DbcError> {
    let mut out = w.clone();
    let n = out.len();
    // dash positions in 1-based letter indexing: connector r_j sits at index j
    for j in (1..n).rev() {
        let Connector::Dash(dj) = out.connectors[j - 1] else {
            continue;
        };
        // the move lives at the letter x_j carrying the dash r_j
        let letter_j = b.id(&out.letters[j - 1])?;
        if b.is_decorated_id(letter_j) {
            continue;
        }
        if dj == 0 {
            continue;
        }
        if j >= 3 {
            // compensate at d_{j-2}
            let Connector::Dash(dj2) = out.connectors[j - 3] else {
                return Err(DbcError::InvalidWord("alternation broken in sweep".into()));
            };
            let prev = b.id(&out.letters[j - 2])?; // x_{j-1}
            let sign = if b.parallel_id(letter_j, prev) { 1 } else { -1 };
            // d_j += k with k = -d_j; d_{j-2} += sign * k
            out.connectors[j - 1] = Connector::Dash(0);
            out.connectors[j - 3] = Connector::Dash(dj2 - sign * dj);
        } else {
            // boundary moves are free
            out.connectors[j - 1] = Connector::Dash(0);
        }
    }
    Ok(out)
}

/// Canonical form of a cycle at a fixed rotation.  For non-decorated cycles
/// every decoration is zeroed (the standardized form).  For decorated ones
/// the descending sweep zeroes the dash at every non-decorated letter,
/// except that a wrap-around compensation onto another sweepable dash is
/// skipped to keep the sweep idempotent.
pub fn canonicalize_cycle(b: &DecoratedBunch, c: &Cycle) -> Result<Cycle, DbcError> {
    let n = c.len();
    if n == 0 {
        return Ok(c.clone());
    }
    if !cycle_is_decorated(b, c) {
        let mut out = c.clone();
        for conn in out.word.connectors.iter_mut() {
            if let Connector::Dash(_) = conn {
                *conn = Connector::Dash(0);
            }
        }
        out.d = 0;
        return Ok(out);
    }
    let mut r = c.all_connectors();
    // dash positions are the even 1-based indices 2, 4, ..., n
    let letter = |j: usize| -> Result<usize, DbcError> { b.id(&c.word.letters[j - 1]) };
    for j in (4..=n).rev().step_by(2) {
        let Connector::Dash(dj) = r[j - 1] else {
            continue;
        };
        if b.is_decorated_id(letter(j)?) || dj == 0 {
            continue;
        }
        let Connector::Dash(dj2) = r[j - 3] else {
            return Err(DbcError::InvalidWord("alternation broken in cycle".into()));
        };
        let sign = if b.parallel_id(letter(j)?, letter(j - 1)?) {
            1
        } else {
            -1
        };
        r[j - 1] = Connector::Dash(0);
        r[j - 3] = Connector::Dash(dj2 - sign * dj);
    }
    // the j = 2 move wraps onto d_n; apply it only if d_n is not itself
    // sweepable (its letter decorated), so re-zeroing cannot cascade
    if n >= 2 {
        if let Connector::Dash(d2) = r[1] {
            if d2 != 0 && !b.is_decorated_id(letter(2)?) && b.is_decorated_id(letter(n)?) {
                let Connector::Dash(dn) = r[n - 1] else {
                    return Err(DbcError::InvalidWord("closing connector missing".into()));
                };
                let sign = if b.parallel_id(letter(2)?, letter(1)?) {
                    1
                } else {
                    -1
                };
                r[1] = Connector::Dash(0);
                r[n - 1] = Connector::Dash(dn - sign * d2);
            }
        }
    }
    let Connector::Dash(new_d) = r[n - 1] else {
        return Err(DbcError::InvalidWord("closing connector missing".into()));
    };
    Ok(Cycle {
        word: Word {
            letters: c.word.letters.clone(),
            connectors: r[..n - 1].to_vec(),
        },
        d: new_d,
    })
}

/// Word equivalence: equal canonical forms, up to taking the opposite.
pub fn words_equivalent(b: &DecoratedBunch, w1: &Word, w2: &Word) -> Result<bool, DbcError> {
    let c1 = canonicalize_word(b, w1)?;
    if c1 == canonicalize_word(b, w2)? {
        return Ok(true);
    }
    Ok(c1 == canonicalize_word(b, &w2.opposite())?)
}

/// Cycle equivalence at a fixed rotation (the elementary-move equivalence
/// of decorated cycles).
pub fn cycles_equivalent_based(
    b: &DecoratedBunch,
    c1: &Cycle,
    c2: &Cycle,
) -> Result<bool, DbcError> {
    Ok(canonicalize_cycle(b, c1)? == canonicalize_cycle(b, c2)?)
}

/// Cycle equivalence quantified over all shifts and the opposite.
pub fn cycles_equivalent(b: &DecoratedBunch, c1: &Cycle, c2: &Cycle) -> Result<bool, DbcError> {
    if c1.len() != c2.len() {
        return Ok(false);
    }
    let n = c1.len();
    for k in 0..(n / 2).max(1) {
        let (s, _) = shift(b, c1, k)?;
        if cycles_equivalent_based(b, &s, c2)? || cycles_equivalent_based(b, &s, &c2.opposite())? {
            return Ok(true);
        }
    }
    Ok(false)
}

// ---------------------------------------------------------------------------
// Text syntax
// ---------------------------------------------------------------------------

/// Formats a word in the text grammar: `a ~ b -[2]- c`.
pub fn format_word(w: &Word) -> String {
    if w.is_empty() {
        return String::new();
    }
    let mut s = w.letters[0].clone();
    for (i, c) in w.connectors.iter().enumerate() {
        match c {
            Connector::Sim => s.push_str(" ~ "),
            Connector::Dash(d) => s.push_str(&format!(" -[{d}]- ")),
        }
        s.push_str(&w.letters[i + 1]);
    }
    s
}

/// Formats a cycle: `cycle( WORD ; d )`.
pub fn format_cycle(c: &Cycle) -> String {
    format!("cycle( {} ; {} )", format_word(&c.word), c.d)
}

/// Parses the word grammar.  Tokens are whitespace separated; connectors
/// are `~` and `-[INT]-`.
pub fn parse_word(text: &str) -> Result<Word, DbcError> {
    let tokens: Vec<&str> = text.split_whitespace().collect();
    if tokens.is_empty() {
        return Err(DbcError::Parse("empty word".into()));
    }
    let mut letters = vec![];
    let mut connectors = vec![];
    for (i, t) in tokens.iter().enumerate() {
        if i % 2 == 0 {
            letters.push(t.to_string());
        } else if *t == "~" {
            connectors.push(Connector::Sim);
        } else if t.starts_with("-[") && t.ends_with("]-") {
            let num = &t[2..t.len() - 2];
            let d: i64 = num
                .parse()
                .map_err(|_| DbcError::Parse(format!("bad dash decoration '{num}'")))?;
            connectors.push(Connector::Dash(d));
        } else {
            return Err(DbcError::Parse(format!("bad connector token '{t}'")));
        }
    }
    if letters.len() != connectors.len() + 1 {
        return Err(DbcError::Parse("word must end with a letter".into()));
    }
    Ok(Word {
        letters,
        connectors,
    })
}

/// Parses `cycle( WORD ; INT )`.
pub fn parse_cycle(text: &str) -> Result<Cycle, DbcError> {
    let t = text.trim();
    let inner = t
        .strip_prefix("cycle(")
        .and_then(|s| s.strip_suffix(')'))
        .ok_or_else(|| DbcError::Parse("expected cycle( ... ; d )".into()))?;
    let (wtext, dtext) = inner
        .rsplit_once(';')
        .ok_or_else(|| DbcError::Parse("expected ';' in cycle".into()))?;
    let d: i64 = dtext
        .trim()
        .parse()
        .map_err(|_| DbcError::Parse(format!("bad closing decoration '{}'", dtext.trim())))?;
    Ok(Cycle {
        word: parse_word(wtext)?,
        d,
    })
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", format_word(self))
    }
}

impl fmt::Display for Cycle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", format_cycle(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bunch::BunchSpec;

    /// The bunch of the smallest cusp problem: two decorated E elements
    /// paired by ~, two non-decorated F elements paired by ~, with dashes
    /// x - xi and y - eta.
    fn t23_bunch() -> DecoratedBunch {
        let spec: BunchSpec = serde_json::from_str(
            r#"{"E": ["x1_0", "y1_0"], "F": ["xi1", "eta1"],
                "sim": [["x1_0", "y1_0"], ["eta1", "xi1"]],
                "dash": [["x1_0", "xi1"], ["y1_0", "eta1"]],
                "le": [], "tri": [["x1_0", "x1_0"], ["y1_0", "y1_0"]]}"#,
        )
        .unwrap();
        let b = DecoratedBunch::from_spec(&spec).unwrap();
        assert!(b.validate().is_empty());
        b
    }

    #[test]
    fn parse_and_validate() {
        let b = t23_bunch();
        // the t = 0 discrete-series word: every partnered end enters via ~
        let w = parse_word("eta1 ~ xi1 -[0]- x1_0 ~ y1_0 -[0]- eta1 ~ xi1").unwrap();
        assert!(validate_word(&b, &w).is_empty());
        // a word entering a partnered letter through a dash end is invalid
        let bad_end = parse_word("xi1 -[0]- x1_0 ~ y1_0 -[0]- eta1").unwrap();
        assert!(validate_word(&b, &bad_end)
            .iter()
            .any(|v| matches!(v, WordViolation::EndConditionViolation(_))));
        // two consecutive sims: alternation violation
        let bad = Word {
            letters: vec!["xi1".into(), "eta1".into(), "xi1".into()],
            connectors: vec![Connector::Sim, Connector::Sim],
        };
        assert!(validate_word(&b, &bad)
            .iter()
            .any(|v| matches!(v, WordViolation::AlternationViolation(_))));
        // starting at a partnered letter with a dash: end condition violation
        let bad = parse_word("x1_0 -[0]- xi1").unwrap();
        assert!(validate_word(&b, &bad)
            .iter()
            .any(|v| matches!(v, WordViolation::EndConditionViolation(_))));
    }

    #[test]
    fn opposite_involution() {
        let w = parse_word("xi1 -[2]- x1_0 ~ y1_0 -[3]- eta1").unwrap();
        assert_eq!(w.opposite().opposite(), w);
        assert_eq!(Word::single("a").opposite(), Word::single("a"));
        let c = parse_cycle("cycle( y1_0 ~ x1_0 -[1]- xi1 ~ eta1 ; 2 )").unwrap();
        assert_eq!(c.opposite().opposite(), c);
        assert_eq!(c.opposite().d, c.d);
    }

    #[test]
    fn shift_and_parity() {
        let b = t23_bunch();
        // length-4 cycle: one shift possible
        let c = parse_cycle("cycle( y1_0 ~ x1_0 -[1]- xi1 ~ eta1 ; 2 )").unwrap();
        assert!(validate_cycle(&b, &c).is_empty());
        let (s, p) = shift(&b, &c, 1).unwrap();
        assert_eq!(s.word.letters, vec!["xi1", "eta1", "y1_0", "x1_0"]);
        assert_eq!(s.d, 1); // the interior decoration moved to the closing slot
        assert_eq!(s.word.connectors[1], Connector::Dash(2));
        // pair (x_1, x_0) = (y1_0, eta1): E against F, so not parallel
        assert_eq!(p, Parity::Even);
        assert!(validate_cycle(&b, &s).is_empty());
        assert!(shift(&b, &c, 2).is_err());
    }

    #[test]
    fn periodicity() {
        let b = t23_bunch();
        let c = parse_cycle(
            "cycle( y1_0 ~ x1_0 -[1]- xi1 ~ eta1 -[2]- y1_0 ~ x1_0 -[1]- xi1 ~ eta1 ; 2 )",
        )
        .unwrap();
        assert!(validate_cycle(&b, &c).is_empty());
        assert!(is_periodic(&c));
        let c2 = parse_cycle("cycle( y1_0 ~ x1_0 -[1]- xi1 ~ eta1 ; 2 )").unwrap();
        assert!(!is_periodic(&c2));
        // same letters, different decorations: not periodic
        let c3 = parse_cycle(
            "cycle( y1_0 ~ x1_0 -[1]- xi1 ~ eta1 -[2]- y1_0 ~ x1_0 -[5]- xi1 ~ eta1 ; 2 )",
        )
        .unwrap();
        assert!(!is_periodic(&c3));
    }

    #[test]
    fn canonicalize_cycle_moves() {
        let b = t23_bunch();
        // moves at the non-decorated letters xi1/eta1 shift value between
        // the dash after eta1 and the dash after x1_0 in step
        let c1 = parse_cycle("cycle( y1_0 ~ x1_0 -[0]- xi1 ~ eta1 ; -1 )").unwrap();
        let c2 = parse_cycle("cycle( y1_0 ~ x1_0 -[1]- xi1 ~ eta1 ; 0 )").unwrap();
        assert!(cycles_equivalent_based(&b, &c1, &c2).unwrap());
        let c3 = parse_cycle("cycle( y1_0 ~ x1_0 -[2]- xi1 ~ eta1 ; 0 )").unwrap();
        assert!(!cycles_equivalent_based(&b, &c1, &c3).unwrap());
        // idempotence
        let k = canonicalize_cycle(&b, &c1).unwrap();
        assert_eq!(canonicalize_cycle(&b, &k).unwrap(), k);
    }

    #[test]
    fn canonicalize_word_class_function() {
        let b = t23_bunch();
        // non-decorated letters: xi1, eta1.  Dashes at 1-based positions
        // 2, 4, 6 carry decorations 3, 5, 7.
        let w =
            parse_word("eta1 ~ xi1 -[3]- x1_0 ~ y1_0 -[5]- eta1 ~ xi1 -[7]- x1_0 ~ y1_0").unwrap();
        assert!(validate_word(&b, &w).is_empty());
        let c = canonicalize_word(&b, &w).unwrap();
        assert_eq!(canonicalize_word(&b, &c).unwrap(), c, "idempotent");
        // legal elementary move at j = 6 (letter xi1, non-decorated):
        // d_6 += 2 with d_4 += 2 (xi1 and eta1 are parallel)
        let mut w2 = w.clone();
        w2.connectors[5] = Connector::Dash(9);
        w2.connectors[3] = Connector::Dash(7);
        assert!(words_equivalent(&b, &w, &w2).unwrap());
        // an illegal decoration change is detected
        let mut w3 = w.clone();
        w3.connectors[5] = Connector::Dash(9);
        assert!(!words_equivalent(&b, &w, &w3).unwrap());
        // fully decorated word: unchanged
        let w3 = parse_word("x1_0 ~ y1_0").unwrap();
        assert_eq!(canonicalize_word(&b, &w3).unwrap(), w3);
    }

    #[test]
    fn equivalence_with_opposite() {
        let b = t23_bunch();
        let w = parse_word("xi1 -[0]- x1_0 ~ y1_0 -[4]- eta1").unwrap();
        assert!(words_equivalent(&b, &w, &w.opposite()).unwrap());
        let other = parse_word("xi1 -[0]- y1_0").unwrap();
        assert!(!words_equivalent(&b, &w, &other).unwrap());
    }

    #[test]
    fn text_round_trip() {
        let w = parse_word("a -[2]- b ~ c -[-3]- d").unwrap();
        assert_eq!(parse_word(&format_word(&w)).unwrap(), w);
        let c = Cycle { word: w, d: -7 };
        assert_eq!(parse_cycle(&format_cycle(&c)).unwrap(), c);
    }
}
