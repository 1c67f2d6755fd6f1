//! Representations of a decorated bunch of chains.
//!
//! A representation assigns a size m_x to every element (equal across each
//! sim-class) and a matrix M_xy over K of shape m_x by m_y to every dash
//! pair (x, y) with x in E, y in F.  Morphisms are given by diagonal blocks
//! S_x (over K, or over D with residue ties at decorated sim-pairs) and
//! off-diagonal blocks S_xy whose coefficient rings come from the order
//! data; isomorphism classes are generated by the transformations T1
//! (stripe changes of basis) and T2 (additions between comparable stripes,
//! with a z-factor when the addition runs against the <| order).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::sync::Arc;

use crate::bunch::{BunchSpec, CoeffRing, DecoratedBunch};
use crate::error::DbcError;
use crate::linalg::Matrix;
use crate::scalars::{parse_element, Field, FieldElement};

/// A block-matrix representation, dense over all dash pairs.
#[derive(Clone, Debug)]
pub struct Representation {
    pub bunch: Arc<DecoratedBunch>,
    pub field: Field,
    sizes: Vec<usize>,
    blocks: BTreeMap<(usize, usize), Matrix<FieldElement>>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum RepViolation {
    SizeMismatch(String, String),
    ShapeMismatch(String, String, usize, usize),
    IllegalBlock(String, String),
}

impl std::fmt::Display for RepViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RepViolation::SizeMismatch(a, b) => {
                write!(f, "sizes differ on the sim pair {a} ~ {b}")
            }
            RepViolation::ShapeMismatch(a, b, r, c) => {
                write!(f, "block ({a}, {b}) has shape {r}x{c} inconsistent with sizes")
            }
            RepViolation::IllegalBlock(a, b) => {
                write!(f, "block ({a}, {b}) does not sit on a dash pair")
            }
        }
    }
}

impl Representation {
    /// A representation with all sizes zero.
    pub fn empty(bunch: Arc<DecoratedBunch>, field: Field) -> Self {
        let n = bunch.len();
        let proto = FieldElement::zero(field);
        let mut blocks = BTreeMap::new();
        for (e, f) in bunch.dash_pairs() {
            blocks.insert((e, f), Matrix::zero(&proto, 0, 0));
        }
        Representation {
            bunch,
            field,
            sizes: vec![0; n],
            blocks,
        }
    }

    /// Zero representation with the given sizes (by element name).
    pub fn with_sizes(
        bunch: Arc<DecoratedBunch>,
        field: Field,
        sizes: &BTreeMap<String, usize>,
    ) -> Result<Self, DbcError> {
        let mut v = vec![0; bunch.len()];
        for (name, &s) in sizes {
            v[bunch.id(name)?] = s;
        }
        let mut rep = Representation {
            bunch: bunch.clone(),
            field,
            sizes: v,
            blocks: BTreeMap::new(),
        };
        let proto = FieldElement::zero(field);
        for (e, f) in bunch.dash_pairs() {
            rep.blocks
                .insert((e, f), Matrix::zero(&proto, rep.sizes[e], rep.sizes[f]));
        }
        Ok(rep)
    }

    pub fn size_id(&self, i: usize) -> usize {
        self.sizes[i]
    }

    pub fn size(&self, name: &str) -> Result<usize, DbcError> {
        Ok(self.sizes[self.bunch.id(name)?])
    }

    pub fn sizes_by_name(&self) -> BTreeMap<String, usize> {
        self.sizes
            .iter()
            .enumerate()
            .map(|(i, &s)| (self.bunch.name(i).to_string(), s))
            .collect()
    }

    pub fn total_size(&self) -> usize {
        self.sizes.iter().sum()
    }

    pub fn block_id(&self, e: usize, f: usize) -> &Matrix<FieldElement> {
        self.blocks.get(&(e, f)).expect("dash pair block")
    }

    pub fn block(&self, e: &str, f: &str) -> Result<&Matrix<FieldElement>, DbcError> {
        let (ie, fi) = (self.bunch.id(e)?, self.bunch.id(f)?);
        self.blocks
            .get(&(ie, fi))
            .ok_or_else(|| DbcError::InvalidRep(format!("no block ({e}, {f})")))
    }

    pub fn set_block_id(&mut self, e: usize, f: usize, m: Matrix<FieldElement>) {
        self.blocks.insert((e, f), m);
    }

    pub fn set_block(
        &mut self,
        e: &str,
        f: &str,
        m: Matrix<FieldElement>,
    ) -> Result<(), DbcError> {
        let (ie, fi) = (self.bunch.id(e)?, self.bunch.id(f)?);
        if !self.bunch.has_dash_id(ie, fi) {
            return Err(DbcError::InvalidRep(format!("({e}, {f}) is not a dash pair")));
        }
        self.blocks.insert((ie, fi), m);
        Ok(())
    }

    pub fn block_keys(&self) -> Vec<(usize, usize)> {
        self.blocks.keys().cloned().collect()
    }

    pub fn is_zero(&self) -> bool {
        self.blocks.values().all(|m| m.is_zero())
    }

    /// Checks the representation invariants.
    pub fn validate(&self) -> Vec<RepViolation> {
        let mut out = vec![];
        let b = &self.bunch;
        for i in 0..b.len() {
            if let Some(p) = b.partner_id(i) {
                if self.sizes[i] != self.sizes[p] && i < p {
                    out.push(RepViolation::SizeMismatch(
                        b.name(i).to_string(),
                        b.name(p).to_string(),
                    ));
                }
            }
        }
        for (&(e, f), m) in &self.blocks {
            if !b.has_dash_id(e, f) {
                out.push(RepViolation::IllegalBlock(
                    b.name(e).to_string(),
                    b.name(f).to_string(),
                ));
            } else if m.rows != self.sizes[e] || m.cols != self.sizes[f] {
                out.push(RepViolation::ShapeMismatch(
                    b.name(e).to_string(),
                    b.name(f).to_string(),
                    m.rows,
                    m.cols,
                ));
            }
        }
        out
    }

    /// Block-diagonal direct sum.
    pub fn direct_sum(&self, other: &Self) -> Result<Self, DbcError> {
        if self.bunch.as_ref().element_names() != other.bunch.as_ref().element_names()
            || self.field != other.field
        {
            return Err(DbcError::BunchMismatch);
        }
        let mut sizes = vec![0; self.sizes.len()];
        for i in 0..sizes.len() {
            sizes[i] = self.sizes[i] + other.sizes[i];
        }
        let proto = FieldElement::zero(self.field);
        let mut blocks = BTreeMap::new();
        for (&(e, f), m1) in &self.blocks {
            let m2 = other.block_id(e, f);
            let mut m = Matrix::zero(&proto, sizes[e], sizes[f]);
            m.set_block(0, 0, m1);
            m.set_block(m1.rows, m1.cols, m2);
            blocks.insert((e, f), m);
        }
        Ok(Representation {
            bunch: self.bunch.clone(),
            field: self.field,
            sizes,
            blocks,
        })
    }

    pub fn equals(&self, other: &Self) -> bool {
        self.sizes == other.sizes && self.blocks == other.blocks
    }
}

// ---------------------------------------------------------------------------
// Morphism data and verification
// ---------------------------------------------------------------------------

/// Morphism data between two representations: diagonal blocks S_x and
/// off-diagonal blocks S_xy for x < y or y <| x.  The z-factor of the
/// against-order components is stored inside the matrix (entries in z*D).
#[derive(Clone, Debug)]
pub struct MorphismData {
    pub diagonal: BTreeMap<usize, Matrix<FieldElement>>,
    pub offdiag: BTreeMap<(usize, usize), Matrix<FieldElement>>,
}

impl MorphismData {
    pub fn identity(rep: &Representation) -> Self {
        let proto = FieldElement::zero(rep.field);
        let mut diagonal = BTreeMap::new();
        for i in 0..rep.bunch.len() {
            diagonal.insert(i, Matrix::identity(&proto, rep.size_id(i)));
        }
        MorphismData {
            diagonal,
            offdiag: BTreeMap::new(),
        }
    }
}

/// The coefficient-ring constraint on an off-diagonal component.
fn offdiag_ring(b: &DecoratedBunch, x: usize, y: usize) -> Option<CoeffRing> {
    if x == y {
        return None;
    }
    if b.lt_id(x, y) {
        Some(if b.tri_id(x, y) {
            CoeffRing::D
        } else {
            CoeffRing::K
        })
    } else if b.tri_id(y, x) {
        Some(CoeffRing::PD)
    } else {
        None
    }
}

fn matrix_in_ring(m: &Matrix<FieldElement>, ring: CoeffRing) -> bool {
    match ring {
        CoeffRing::K => true,
        CoeffRing::D => m.all_in_d(),
        CoeffRing::PD => m
            .valuation()
            .finite()
            .map_or(true, |v| v >= 1),
        CoeffRing::Zero => m.is_zero(),
    }
}

/// Checks the shape and ring constraints of morphism data from M to N.
pub fn validate_morphism(
    s: &MorphismData,
    m: &Representation,
    n: &Representation,
) -> Result<(), DbcError> {
    let b = &m.bunch;
    for (&x, sx) in &s.diagonal {
        if sx.rows != n.size_id(x) || sx.cols != m.size_id(x) {
            return Err(DbcError::ShapeMismatch(format!(
                "S_{} is {}x{}, want {}x{}",
                b.name(x),
                sx.rows,
                sx.cols,
                n.size_id(x),
                m.size_id(x)
            )));
        }
        if b.is_decorated_id(x) && !sx.all_in_d() {
            return Err(DbcError::EConditionViolated(format!(
                "S_{} must be over D",
                b.name(x)
            )));
        }
        if let Some(p) = b.partner_id(x) {
            if let Some(sp) = s.diagonal.get(&p) {
                if b.is_decorated_id(x) {
                    if sx.residue_matrix()? != sp.residue_matrix()? {
                        return Err(DbcError::EConditionViolated(format!(
                            "residues of S_{} and S_{} differ",
                            b.name(x),
                            b.name(p)
                        )));
                    }
                } else if sx != sp {
                    return Err(DbcError::EConditionViolated(format!(
                        "S_{} and S_{} must be equal",
                        b.name(x),
                        b.name(p)
                    )));
                }
            }
        }
    }
    for (&(x, y), sxy) in &s.offdiag {
        let Some(ring) = offdiag_ring(b, x, y) else {
            return Err(DbcError::IllegalPair(format!(
                "no morphism component from {} to {}",
                b.name(y),
                b.name(x)
            )));
        };
        if sxy.rows != n.size_id(x) || sxy.cols != m.size_id(y) {
            return Err(DbcError::ShapeMismatch(format!(
                "S_{}{} has wrong shape",
                b.name(x),
                b.name(y)
            )));
        }
        if !matrix_in_ring(sxy, ring) {
            return Err(DbcError::EConditionViolated(format!(
                "S_{}{} violates its coefficient ring {:?}",
                b.name(x),
                b.name(y),
                ring
            )));
        }
    }
    Ok(())
}

/// Evaluates the morphism equation for every dash pair.  Ring and shape
/// violations are reported as errors before any evaluation.
pub fn is_morphism(
    s: &MorphismData,
    m: &Representation,
    n: &Representation,
) -> Result<bool, DbcError> {
    validate_morphism(s, m, n)?;
    let b = &m.bunch;
    let proto = FieldElement::zero(m.field);
    let zero_d = |r: usize, c: usize| Matrix::zero(&proto, r, c);
    for &(x, y) in &m.block_keys() {
        // LHS: S_x M_xy + sum over x' of S_xx' M_x'y
        let sx = s
            .diagonal
            .get(&x)
            .cloned()
            .unwrap_or_else(|| Matrix::identity(&proto, m.size_id(x)));
        let mut lhs = sx.mul(m.block_id(x, y));
        for (&(a, xp), sxp) in &s.offdiag {
            if a != x {
                continue;
            }
            if b.has_dash_id(xp, y) && b.is_e_id(xp) {
                lhs = lhs.add(&sxp.mul(m.block_id(xp, y)));
            }
        }
        // RHS: N_xy S_y + sum over y' of N_xy' S_y'y
        let sy = s
            .diagonal
            .get(&y)
            .cloned()
            .unwrap_or_else(|| Matrix::identity(&proto, m.size_id(y)));
        let mut rhs = n.block_id(x, y).mul(&sy);
        for (&(yp, c), syp) in &s.offdiag {
            if c != y {
                continue;
            }
            if !b.is_e_id(yp) && b.has_dash_id(x, yp) {
                rhs = rhs.add(&n.block_id(x, yp).mul(syp));
            }
        }
        let want_rows = n.size_id(x);
        let want_cols = m.size_id(y);
        let l = if lhs.rows == want_rows && lhs.cols == want_cols {
            lhs
        } else {
            zero_d(want_rows, want_cols)
        };
        if l != rhs {
            return Ok(false);
        }
    }
    Ok(true)
}

/// True iff the morphism data defines an isomorphism: every diagonal block
/// is square and invertible at the level the radical sees (over K for
/// non-decorated elements, invertible residue for decorated ones).
pub fn is_invertible_morphism(
    b: &DecoratedBunch,
    s: &MorphismData,
) -> Result<bool, DbcError> {
    for (&x, sx) in &s.diagonal {
        if !sx.is_square() {
            return Ok(false);
        }
        if b.is_decorated_id(x) {
            if !sx.is_d_invertible()? {
                return Ok(false);
            }
        } else if sx.rows > 0 && sx.invert().is_err() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Composition of morphism data (first t, then s), with products landing on
/// zero places dropped as the bimodule structure demands.
pub fn compose(
    b: &DecoratedBunch,
    s: &MorphismData,
    t: &MorphismData,
    sizes_mid: &dyn Fn(usize) -> usize,
) -> MorphismData {
    let legal = |x: usize, y: usize| offdiag_ring(b, x, y).is_some();
    let mut diagonal = BTreeMap::new();
    let get_diag = |m: &MorphismData, x: usize, rows: usize| {
        m.diagonal.get(&x).cloned().unwrap_or_else(|| {
            let proto = FieldElement::zero(crate::scalars::Field::Q);
            let _ = &proto;
            Matrix::identity(
                m.diagonal
                    .values()
                    .next()
                    .map(|mm| mm.proto())
                    .unwrap_or(&FieldElement::zero(crate::scalars::Field::Q)),
                rows,
            )
        })
    };
    let n = b.len();
    for x in 0..n {
        let sx = get_diag(s, x, sizes_mid(x));
        let tx = get_diag(t, x, sizes_mid(x));
        let mut acc = sx.mul(&tx);
        for (&(a, xp), sxp) in &s.offdiag {
            if a != x {
                continue;
            }
            if let Some(txp) = t.offdiag.get(&(xp, x)) {
                if legal(xp, x) {
                    acc = acc.add(&sxp.mul(txp));
                }
            }
        }
        diagonal.insert(x, acc);
    }
    let mut offdiag: BTreeMap<(usize, usize), Matrix<FieldElement>> = BTreeMap::new();
    let mut put = |key: (usize, usize), m: Matrix<FieldElement>| {
        offdiag
            .entry(key)
            .and_modify(|e| *e = e.add(&m))
            .or_insert(m);
    };
    for (&(x, y), txy) in &t.offdiag {
        let sx = get_diag(s, x, txy.rows);
        put((x, y), sx.mul(txy));
    }
    for (&(x, y), sxy) in &s.offdiag {
        let ty = get_diag(t, y, sxy.cols);
        put((x, y), sxy.mul(&ty));
    }
    for (&(x, xp), sxp) in &s.offdiag {
        for (&(a, y), txy) in &t.offdiag {
            if a != xp || x == y {
                continue;
            }
            if legal(x, y) {
                put((x, y), sxp.mul(txy));
            }
        }
    }
    MorphismData { diagonal, offdiag }
}

// ---------------------------------------------------------------------------
// Elementary transformations T1 / T2
// ---------------------------------------------------------------------------

/// A single admissible move, replayable and convertible to morphism data.
#[derive(Clone, Debug)]
pub enum Move {
    /// Change of basis of the named stripes; elements not listed act as the
    /// identity.  Must include both members of any touched sim-class.
    T1(BTreeMap<String, Matrix<FieldElement>>),
    /// Addition between comparable stripes with x < y: target x from
    /// source y over K (x prec y) or D (x <| y).
    T2a {
        x: String,
        y: String,
        s: Matrix<FieldElement>,
    },
    /// Against-the-order addition with y <| x: target x from source y,
    /// coefficient over D, the whole update multiplied by z.
    T2b {
        x: String,
        y: String,
        s: Matrix<FieldElement>,
    },
}

/// Applies a T1 change of basis: M_xy becomes S_x M_xy S_y^{-1}.
pub fn apply_t1(
    m: &Representation,
    s: &BTreeMap<String, Matrix<FieldElement>>,
) -> Result<Representation, DbcError> {
    let b = &m.bunch;
    let mut by_id: BTreeMap<usize, Matrix<FieldElement>> = BTreeMap::new();
    for (name, mat) in s {
        by_id.insert(b.id(name)?, mat.clone());
    }
    // e-conditions and invertibility
    for (&x, sx) in &by_id {
        if sx.rows != m.size_id(x) || !sx.is_square() {
            return Err(DbcError::ShapeMismatch(format!("S_{}", b.name(x))));
        }
        if b.is_decorated_id(x) {
            if !sx.is_d_invertible()? {
                return Err(DbcError::NotInvertible);
            }
        } else if sx.rows > 0 && sx.invert().is_err() {
            return Err(DbcError::NotInvertible);
        }
        if let Some(p) = b.partner_id(x) {
            let sp = by_id.get(&p).ok_or_else(|| {
                DbcError::EConditionViolated(format!(
                    "partner {} of {} missing from T1 data",
                    b.name(p),
                    b.name(x)
                ))
            })?;
            if b.is_decorated_id(x) {
                if sx.residue_matrix()? != sp.residue_matrix()? {
                    return Err(DbcError::EConditionViolated(format!(
                        "residues differ on pair {} ~ {}",
                        b.name(x),
                        b.name(p)
                    )));
                }
            } else if sx != sp {
                return Err(DbcError::EConditionViolated(format!(
                    "matrices differ on pair {} ~ {}",
                    b.name(x),
                    b.name(p)
                )));
            }
        }
    }
    let mut out = m.clone();
    for (e, f) in m.block_keys() {
        let mut blk = m.block_id(e, f).clone();
        if let Some(se) = by_id.get(&e) {
            blk = se.mul(&blk);
        }
        if let Some(sf) = by_id.get(&f) {
            blk = blk.mul(&sf.invert()?);
        }
        out.set_block_id(e, f, blk);
    }
    Ok(out)
}

/// Applies a T2 move.  `with_z` selects rule (b): the pair must satisfy
/// y <| x and the update is multiplied by z; otherwise rule (a) with x < y.
pub fn apply_t2(
    m: &Representation,
    x: &str,
    y: &str,
    s: &Matrix<FieldElement>,
    with_z: bool,
) -> Result<Representation, DbcError> {
    let b = &m.bunch;
    let (xi, yi) = (b.id(x)?, b.id(y)?);
    if b.parallel_id(xi, yi) == false || xi == yi {
        if xi == yi || b.is_e_id(xi) != b.is_e_id(yi) {
            return Err(DbcError::IllegalPair(format!("{x}, {y}")));
        }
    }
    if s.rows != m.size_id(xi) || s.cols != m.size_id(yi) {
        return Err(DbcError::ShapeMismatch(format!("S_{x}{y}")));
    }
    if with_z {
        if !b.tri_id(yi, xi) || xi == yi {
            return Err(DbcError::IllegalPair(format!(
                "rule (b) needs {y} <| {x}"
            )));
        }
        if !s.all_in_d() {
            return Err(DbcError::EConditionViolated(format!(
                "S_{x}{y} must be over D"
            )));
        }
    } else {
        if !b.lt_id(xi, yi) {
            return Err(DbcError::IllegalPair(format!("rule (a) needs {x} < {y}")));
        }
        if b.tri_id(xi, yi) && !s.all_in_d() {
            return Err(DbcError::EConditionViolated(format!(
                "S_{x}{y} must be over D for {x} <| {y}"
            )));
        }
    }
    let eff = if with_z { s.scale_z(1) } else { s.clone() };
    let mut out = m.clone();
    if b.is_e_id(xi) {
        // row update: M_xz += eff * M_yz on shared dashes
        for z in b.dashes_of(xi) {
            if b.has_dash_id(yi, z) {
                let updated = m.block_id(xi, z).add(&eff.mul(m.block_id(yi, z)));
                out.set_block_id(xi, z, updated);
            }
        }
    } else {
        // column update: M_zy += M_zx * eff on shared dashes
        for z in b.dashes_of(xi) {
            if b.has_dash_id(z, yi) {
                let updated = m.block_id(z, yi).add(&m.block_id(z, xi).mul(&eff));
                out.set_block_id(z, yi, updated);
            }
        }
    }
    Ok(out)
}

/// Applies a move, returning the transformed representation.
pub fn apply_move(m: &Representation, mv: &Move) -> Result<Representation, DbcError> {
    match mv {
        Move::T1(s) => apply_t1(m, s),
        Move::T2a { x, y, s } => apply_t2(m, x, y, s, false),
        Move::T2b { x, y, s } => apply_t2(m, x, y, s, true),
    }
}

/// The morphism data of a single move (from M to move(M)).
pub fn move_to_morphism(
    m: &Representation,
    mv: &Move,
) -> Result<MorphismData, DbcError> {
    let b = &m.bunch;
    let mut data = MorphismData::identity(m);
    match mv {
        Move::T1(s) => {
            for (name, mat) in s {
                data.diagonal.insert(b.id(name)?, mat.clone());
            }
        }
        Move::T2a { x, y, s } => {
            data.offdiag.insert((b.id(x)?, b.id(y)?), s.clone());
        }
        Move::T2b { x, y, s } => {
            data.offdiag
                .insert((b.id(x)?, b.id(y)?), s.scale_z(1));
        }
    }
    Ok(data)
}

// ---------------------------------------------------------------------------
// Random conjugation (the test harness)
// ---------------------------------------------------------------------------

/// Applies `steps` random legal moves drawn deterministically from the
/// seed; returns the transformed representation and the replayable log.
pub fn random_conjugate(
    m: &Representation,
    seed: u64,
    steps: usize,
) -> Result<(Representation, Vec<Move>), DbcError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = m.bunch.clone();
    let field = m.field;
    let proto = FieldElement::zero(field);
    let mut cur = m.clone();
    let mut log = vec![];

    // all legal ordered T2 pairs
    let mut t2a = vec![];
    let mut t2b = vec![];
    for x in 0..b.len() {
        for y in 0..b.len() {
            if x == y {
                continue;
            }
            if b.lt_id(x, y) {
                t2a.push((x, y));
            }
            if b.tri_id(y, x) && x != y {
                t2b.push((x, y));
            }
        }
    }
    let small = |rng: &mut ChaCha8Rng, in_d: bool| -> FieldElement {
        let c = rng.gen_range(-2i64..=2);
        let kind = rng.gen_range(0..3);
        let base = FieldElement::from_i64(field, c);
        match kind {
            0 => base,
            1 => base.mul(&FieldElement::z(field)),
            _ => {
                if in_d {
                    base
                } else {
                    base.mul(&FieldElement::z(field))
                }
            }
        }
    };

    let mut attempts = 0usize;
    while log.len() < steps && attempts < steps * 20 + 50 {
        attempts += 1;
        let kind = rng.gen_range(0..2);
        let mv = if kind == 0 {
            // T1 on a random sim-class with positive size
            let x = rng.gen_range(0..b.len());
            let sz = cur.size_id(x);
            if sz == 0 {
                continue;
            }
            let decorated = b.is_decorated_id(x);
            let mut s = Matrix::identity(&proto, sz);
            // a few elementary factors
            for _ in 0..rng.gen_range(1..3) {
                let i = rng.gen_range(0..sz);
                let j = rng.gen_range(0..sz);
                if i == j {
                    // unit scaling
                    let u = FieldElement::from_i64(field, *[1i64, 2, -1].get(rng.gen_range(0..3)).unwrap());
                    let mut d = Matrix::identity(&proto, sz);
                    d.set(i, i, u);
                    s = s.mul(&d);
                } else {
                    let mut e = Matrix::identity(&proto, sz);
                    e.set(i, j, small(&mut rng, decorated));
                    s = s.mul(&e);
                }
            }
            let mut map = BTreeMap::new();
            map.insert(b.name(x).to_string(), s.clone());
            if let Some(p) = b.partner_id(x) {
                if decorated {
                    // same residue, independent z-part
                    let mut sp = s.clone();
                    if sz > 0 {
                        let i = rng.gen_range(0..sz);
                        let j = rng.gen_range(0..sz);
                        let bump = FieldElement::from_i64(field, rng.gen_range(-2i64..=2))
                            .mul(&FieldElement::z(field));
                        let v = sp.get(i, j).add(&bump);
                        sp.set(i, j, v);
                    }
                    map.insert(b.name(p).to_string(), sp);
                } else {
                    map.insert(b.name(p).to_string(), s);
                }
            }
            Move::T1(map)
        } else if !t2a.is_empty() && rng.gen_bool(0.5) {
            let &(x, y) = &t2a[rng.gen_range(0..t2a.len())];
            let (rx, ry) = (cur.size_id(x), cur.size_id(y));
            if rx == 0 || ry == 0 {
                continue;
            }
            let need_d = b.tri_id(x, y);
            let mut s = Matrix::zero(&proto, rx, ry);
            for i in 0..rx {
                for j in 0..ry {
                    if rng.gen_bool(0.4) {
                        s.set(i, j, small(&mut rng, need_d));
                    }
                }
            }
            Move::T2a {
                x: b.name(x).to_string(),
                y: b.name(y).to_string(),
                s,
            }
        } else if !t2b.is_empty() {
            let &(x, y) = &t2b[rng.gen_range(0..t2b.len())];
            let (rx, ry) = (cur.size_id(x), cur.size_id(y));
            if rx == 0 || ry == 0 {
                continue;
            }
            let mut s = Matrix::zero(&proto, rx, ry);
            for i in 0..rx {
                for j in 0..ry {
                    if rng.gen_bool(0.5) {
                        s.set(i, j, small(&mut rng, true));
                    }
                }
            }
            Move::T2b {
                x: b.name(x).to_string(),
                y: b.name(y).to_string(),
                s,
            }
        } else {
            continue;
        };
        match apply_move(&cur, &mv) {
            Ok(next) => {
                cur = next;
                log.push(mv);
            }
            Err(_) => continue,
        }
    }
    Ok((cur, log))
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

/// Serializable form: sizes by name and matrices of element strings keyed
/// by "e|f".
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RepSpec {
    pub bunch: BunchSpec,
    pub sizes: BTreeMap<String, usize>,
    pub matrices: BTreeMap<String, Vec<Vec<String>>>,
}

impl Representation {
    pub fn to_spec(&self) -> RepSpec {
        let mut matrices = BTreeMap::new();
        for (&(e, f), m) in &self.blocks {
            let key = format!("{}|{}", self.bunch.name(e), self.bunch.name(f));
            let rows = (0..m.rows)
                .map(|i| (0..m.cols).map(|j| m.get(i, j).to_string()).collect())
                .collect();
            matrices.insert(key, rows);
        }
        RepSpec {
            bunch: self.bunch.to_spec(),
            sizes: self.sizes_by_name(),
            matrices,
        }
    }

    pub fn from_spec(spec: &RepSpec, field: Field) -> Result<Self, DbcError> {
        let bunch = Arc::new(DecoratedBunch::from_spec(&spec.bunch)?);
        let mut rep = Representation::with_sizes(bunch.clone(), field, &spec.sizes)?;
        let proto = FieldElement::zero(field);
        for (key, rows) in &spec.matrices {
            let (e, f) = key
                .split_once('|')
                .ok_or_else(|| DbcError::Parse(format!("bad matrix key '{key}'")))?;
            let (ie, fi) = (bunch.id(e)?, bunch.id(f)?);
            let (re, cf) = (rep.size_id(ie), rep.size_id(fi));
            if rows.len() != re || rows.iter().any(|r| r.len() != cf) {
                return Err(DbcError::ShapeMismatch(format!("matrix {key}")));
            }
            let mut m = Matrix::zero(&proto, re, cf);
            for (i, r) in rows.iter().enumerate() {
                for (j, s) in r.iter().enumerate() {
                    m.set(i, j, parse_element(field, s)?);
                }
            }
            rep.set_block(e, f, m)?;
        }
        Ok(rep)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t23() -> Arc<DecoratedBunch> {
        let spec: BunchSpec = serde_json::from_str(
            r#"{"E": ["x1_0", "y1_0"], "F": ["xi1", "eta1"],
                "sim": [["x1_0", "y1_0"], ["eta1", "xi1"]],
                "dash": [["x1_0", "xi1"], ["y1_0", "eta1"]],
                "le": [], "tri": [["x1_0", "x1_0"], ["y1_0", "y1_0"]]}"#,
        )
        .unwrap();
        Arc::new(DecoratedBunch::from_spec(&spec).unwrap())
    }

    fn fe(s: &str) -> FieldElement {
        parse_element(Field::Q, s).unwrap()
    }

    fn pair_rep(theta_u: &[&[&str]], theta_v: &[&[&str]]) -> Representation {
        let b = t23();
        let proto = FieldElement::zero(Field::Q);
        let rows = theta_u.len();
        let cols = if rows > 0 { theta_u[0].len() } else { 0 };
        let mut sizes = BTreeMap::new();
        sizes.insert("x1_0".to_string(), rows);
        sizes.insert("y1_0".to_string(), rows);
        sizes.insert("xi1".to_string(), cols);
        sizes.insert("eta1".to_string(), cols);
        let mut rep = Representation::with_sizes(b, Field::Q, &sizes).unwrap();
        let mk = |rows: &[&[&str]]| {
            Matrix::from_rows(
                &proto,
                rows.iter()
                    .map(|r| r.iter().map(|s| fe(s)).collect())
                    .collect(),
            )
        };
        rep.set_block("x1_0", "xi1", mk(theta_u)).unwrap();
        rep.set_block("y1_0", "eta1", mk(theta_v)).unwrap();
        rep
    }

    #[test]
    fn validate_rep_basics() {
        let b = t23();
        let empty = Representation::empty(b.clone(), Field::Q);
        assert!(empty.validate().is_empty());
        // size mismatch on a sim pair
        let mut sizes = BTreeMap::new();
        sizes.insert("x1_0".to_string(), 1);
        let rep = Representation::with_sizes(b, Field::Q, &sizes).unwrap();
        assert!(rep
            .validate()
            .iter()
            .any(|v| matches!(v, RepViolation::SizeMismatch(_, _))));
    }

    #[test]
    fn identity_is_morphism() {
        let m = pair_rep(&[&["z", "0"], &["1", "z^2"]], &[&["1", "z"], &["0", "3"]]);
        let id = MorphismData::identity(&m);
        assert!(is_morphism(&id, &m, &m).unwrap());
        assert!(is_invertible_morphism(&m.bunch, &id).unwrap());
    }

    #[test]
    fn t1_gives_morphism() {
        let m = pair_rep(&[&["z", "0"], &["1", "z^2"]], &[&["1", "z"], &["0", "3"]]);
        let proto = FieldElement::zero(Field::Q);
        // decorated pair x ~ y: equal residues, different z-parts
        let sx = Matrix::from_rows(
            &proto,
            vec![vec![fe("1"), fe("z")], vec![fe("0"), fe("1+z")]],
        );
        let sy = Matrix::from_rows(
            &proto,
            vec![vec![fe("1"), fe("0")], vec![fe("2*z"), fe("1")]],
        );
        // non-decorated pair xi ~ eta: equal matrices over K
        let t = Matrix::from_rows(
            &proto,
            vec![vec![fe("1"), fe("1/z")], vec![fe("0"), fe("2")]],
        );
        let mut map = BTreeMap::new();
        map.insert("x1_0".to_string(), sx.clone());
        map.insert("y1_0".to_string(), sy.clone());
        map.insert("xi1".to_string(), t.clone());
        map.insert("eta1".to_string(), t.clone());
        let out = apply_t1(&m, &map).unwrap();
        let mv = Move::T1(map);
        let s = move_to_morphism(&m, &mv).unwrap();
        assert!(is_morphism(&s, &m, &out).unwrap());
        // mismatched residues are rejected
        let mut bad = BTreeMap::new();
        bad.insert("x1_0".to_string(), sx);
        bad.insert(
            "y1_0".to_string(),
            Matrix::from_rows(&proto, vec![vec![fe("2"), fe("0")], vec![fe("0"), fe("1")]]),
        );
        bad.insert("xi1".to_string(), t.clone());
        bad.insert("eta1".to_string(), t);
        assert!(matches!(
            apply_t1(&m, &bad),
            Err(DbcError::EConditionViolated(_))
        ));
    }

    #[test]
    fn t2_on_chain() {
        // bunch with a decorated chain x1 <| x2 sharing a column class
        let spec: BunchSpec = serde_json::from_str(
            r#"{"E": ["x1", "x2"], "F": ["f"],
                "sim": [], "dash": [["x1", "f"], ["x2", "f"]],
                "le": [], "tri": [["x1", "x2"]]}"#,
        )
        .unwrap();
        let b = Arc::new(DecoratedBunch::from_spec(&spec).unwrap());
        let mut sizes = BTreeMap::new();
        sizes.insert("x1".to_string(), 1);
        sizes.insert("x2".to_string(), 1);
        sizes.insert("f".to_string(), 1);
        let proto = FieldElement::zero(Field::Q);
        let mut m = Representation::with_sizes(b.clone(), Field::Q, &sizes).unwrap();
        m.set_block("x1", "f", Matrix::from_rows(&proto, vec![vec![fe("z")]]))
            .unwrap();
        m.set_block("x2", "f", Matrix::from_rows(&proto, vec![vec![fe("1")]]))
            .unwrap();
        // rule (a): x1 <| x2, add over D: M_x1f += s * M_x2f
        let s = Matrix::from_rows(&proto, vec![vec![fe("3")]]);
        let out = apply_t2(&m, "x1", "x2", &s, false).unwrap();
        assert_eq!(*out.block("x1", "f").unwrap().get(0, 0), fe("3+z"));
        let mv = Move::T2a {
            x: "x1".into(),
            y: "x2".into(),
            s: s.clone(),
        };
        assert!(is_morphism(&move_to_morphism(&m, &mv).unwrap(), &m, &out).unwrap());
        // rule (b): x2 gets z * s * row(x1)
        let out = apply_t2(&m, "x2", "x1", &s, true).unwrap();
        assert_eq!(*out.block("x2", "f").unwrap().get(0, 0), fe("1+3*z^2"));
        let mv = Move::T2b {
            x: "x2".into(),
            y: "x1".into(),
            s: s.clone(),
        };
        assert!(is_morphism(&move_to_morphism(&m, &mv).unwrap(), &m, &out).unwrap());
        // rule (a) in the illegal direction is rejected
        assert!(apply_t2(&m, "x2", "x1", &s, false).is_err());
        // entry valuations rise on rule (b) targets
        assert!(
            out.block("x2", "f").unwrap().get(0, 0).sub(&fe("1")).valuation()
                >= crate::scalars::ExtendedInt::Finite(1)
        );
    }

    #[test]
    fn direct_sum_sizes_add() {
        let m = pair_rep(&[&["z"]], &[&["1"]]);
        let n = pair_rep(&[&["z^2"]], &[&["2"]]);
        let s = m.direct_sum(&n).unwrap();
        assert_eq!(s.size("x1_0").unwrap(), 2);
        assert_eq!(*s.block("x1_0", "xi1").unwrap().get(1, 1), fe("z^2"));
        assert!(s.block("x1_0", "xi1").unwrap().get(0, 1).is_zero());
        let empty = Representation::empty(m.bunch.clone(), Field::Q);
        assert!(m.direct_sum(&empty).unwrap().equals(&m));
    }

    #[test]
    fn random_conjugate_replay() {
        let m = pair_rep(&[&["z", "0"], &["0", "z^2"]], &[&["1", "0"], &["0", "3"]]);
        let (out, log) = random_conjugate(&m, 42, 12).unwrap();
        assert!(!log.is_empty());
        // replay gives the same result
        let mut cur = m.clone();
        for mv in &log {
            cur = apply_move(&cur, mv).unwrap();
        }
        assert!(cur.equals(&out));
        // every intermediate move is a genuine morphism
        let mut cur = m.clone();
        for mv in &log {
            let next = apply_move(&cur, mv).unwrap();
            let s = move_to_morphism(&cur, mv).unwrap();
            assert!(is_morphism(&s, &cur, &next).unwrap());
            assert!(is_invertible_morphism(&cur.bunch, &s).unwrap());
            cur = next;
        }
        // steps = 0 leaves the representation unchanged
        let (same, log0) = random_conjugate(&m, 1, 0).unwrap();
        assert!(log0.is_empty() && same.equals(&m));
    }

    #[test]
    fn radical_morphisms_are_singular() {
        let m = pair_rep(&[&["z"]], &[&["1"]]);
        let proto = FieldElement::zero(Field::Q);
        let mut s = MorphismData::identity(&m);
        // decorated diagonal with zero residue, non-decorated zero
        s.diagonal
            .insert(m.bunch.id("x1_0").unwrap(), Matrix::from_rows(&proto, vec![vec![fe("z")]]));
        s.diagonal
            .insert(m.bunch.id("y1_0").unwrap(), Matrix::from_rows(&proto, vec![vec![fe("z")]]));
        s.diagonal
            .insert(m.bunch.id("xi1").unwrap(), Matrix::from_rows(&proto, vec![vec![fe("0")]]));
        s.diagonal
            .insert(m.bunch.id("eta1").unwrap(), Matrix::from_rows(&proto, vec![vec![fe("0")]]));
        assert!(!is_invertible_morphism(&m.bunch, &s).unwrap());
    }

    #[test]
    fn rep_json_round_trip() {
        let m = pair_rep(&[&["z", "1/(1+z)"]], &[&["0", "z^2"]]);
        let text = serde_json::to_string(&m.to_spec()).unwrap();
        let spec: RepSpec = serde_json::from_str(&text).unwrap();
        let m2 = Representation::from_spec(&spec, Field::Q).unwrap();
        assert!(m.equals(&m2));
    }
}
