//! Exact matrix algebra over k, K and D.
//!
//! Everything the reduction algorithm needs: entry-wise valuations,
//! D-invertibility, kernels and ranks over arbitrary exact fields, the
//! elementary-divisor normal form (companion blocks of irreducible powers,
//! arranged as generalized Jordan blocks), the rational canonical form, and
//! the Fitting decomposition of a D-matrix into a residue-nilpotent and a
//! residue-invertible part.
//!
//! The normal forms are computed by Krylov chain extraction; the Smith form
//! of tI - M over k[t] is kept in the test suite as an independent oracle
//! for the invariant factors.

use std::fmt;

use crate::error::DbcError;
use crate::polys;
use crate::scalars::{BaseScalar, ExtendedInt, FieldElement, UniPoly};

/// Minimal ring interface shared by all exact scalars in the engine.
pub trait Ring: Clone + PartialEq + fmt::Debug + fmt::Display {
    fn zero_like(&self) -> Self;
    fn one_like(&self) -> Self;
    fn add_(&self, o: &Self) -> Self;
    fn sub_(&self, o: &Self) -> Self;
    fn neg_(&self) -> Self;
    fn mul_(&self, o: &Self) -> Self;
    fn is_zero_(&self) -> bool;
}

/// Rings with division by nonzero elements.
pub trait FieldRing: Ring {
    fn inv_(&self) -> Result<Self, DbcError>;
}

impl Ring for BaseScalar {
    fn zero_like(&self) -> Self {
        BaseScalar::zero(self.field())
    }
    fn one_like(&self) -> Self {
        BaseScalar::one(self.field())
    }
    fn add_(&self, o: &Self) -> Self {
        self.add(o)
    }
    fn sub_(&self, o: &Self) -> Self {
        self.sub(o)
    }
    fn neg_(&self) -> Self {
        self.neg()
    }
    fn mul_(&self, o: &Self) -> Self {
        self.mul(o)
    }
    fn is_zero_(&self) -> bool {
        self.is_zero()
    }
}

impl FieldRing for BaseScalar {
    fn inv_(&self) -> Result<Self, DbcError> {
        self.inv()
    }
}

impl Ring for FieldElement {
    fn zero_like(&self) -> Self {
        FieldElement::zero(self.field)
    }
    fn one_like(&self) -> Self {
        FieldElement::one(self.field)
    }
    fn add_(&self, o: &Self) -> Self {
        self.add(o)
    }
    fn sub_(&self, o: &Self) -> Self {
        self.sub(o)
    }
    fn neg_(&self) -> Self {
        self.neg()
    }
    fn mul_(&self, o: &Self) -> Self {
        self.mul(o)
    }
    fn is_zero_(&self) -> bool {
        self.is_zero()
    }
}

impl FieldRing for FieldElement {
    fn inv_(&self) -> Result<Self, DbcError> {
        self.inv()
    }
}

/// Dense rectangular matrix.  Empty shapes (0 x n, n x 0) are legal; a
/// prototype scalar is retained so zero/one of the right ring stay
/// available even for empty matrices.
#[derive(Clone, PartialEq, Debug)]
pub struct Matrix<T: Ring> {
    pub rows: usize,
    pub cols: usize,
    data: Vec<T>,
    proto: T,
}

impl<T: Ring> Matrix<T> {
    pub fn zero(proto: &T, rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![proto.zero_like(); rows * cols],
            proto: proto.zero_like(),
        }
    }

    pub fn identity(proto: &T, n: usize) -> Self {
        let mut m = Matrix::zero(proto, n, n);
        for i in 0..n {
            m.set(i, i, proto.one_like());
        }
        m
    }

    pub fn from_rows(proto: &T, rows: Vec<Vec<T>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |v| v.len());
        for row in &rows {
            assert_eq!(row.len(), c, "ragged rows");
        }
        Matrix {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
            proto: proto.zero_like(),
        }
    }

    pub fn from_fn(proto: &T, rows: usize, cols: usize, f: impl Fn(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix {
            rows,
            cols,
            data,
            proto: proto.zero_like(),
        }
    }

    pub fn proto(&self) -> &T {
        &self.proto
    }

    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.cols + j] = v;
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0 || self.cols == 0
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero_())
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn map<U: Ring>(&self, proto: &U, f: impl Fn(&T) -> U) -> Matrix<U> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
            proto: proto.zero_like(),
        }
    }

    pub fn transpose(&self) -> Self {
        Matrix::from_fn(&self.proto, self.cols, self.rows, |i, j| {
            self.get(j, i).clone()
        })
    }

    pub fn add(&self, o: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols), "shape mismatch");
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&o.data)
                .map(|(a, b)| a.add_(b))
                .collect(),
            proto: self.proto.clone(),
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> Self {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a.neg_()).collect(),
            proto: self.proto.clone(),
        }
    }

    pub fn mul(&self, o: &Self) -> Self {
        assert_eq!(self.cols, o.rows, "shape mismatch in mul");
        let mut out = Matrix::zero(&self.proto, self.rows, o.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero_() {
                    continue;
                }
                for j in 0..o.cols {
                    let b = o.get(k, j);
                    if b.is_zero_() {
                        continue;
                    }
                    let cur = out.get(i, j).add_(&a.mul_(b));
                    out.set(i, j, cur);
                }
            }
        }
        out
    }

    pub fn scale(&self, c: &T) -> Self {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a.mul_(c)).collect(),
            proto: self.proto.clone(),
        }
    }

    pub fn hstack(&self, o: &Self) -> Self {
        assert_eq!(self.rows, o.rows);
        Matrix::from_fn(&self.proto, self.rows, self.cols + o.cols, |i, j| {
            if j < self.cols {
                self.get(i, j).clone()
            } else {
                o.get(i, j - self.cols).clone()
            }
        })
    }

    pub fn vstack(&self, o: &Self) -> Self {
        assert_eq!(self.cols, o.cols);
        Matrix::from_fn(&self.proto, self.rows + o.rows, self.cols, |i, j| {
            if i < self.rows {
                self.get(i, j).clone()
            } else {
                o.get(i - self.rows, j).clone()
            }
        })
    }

    pub fn block_diag(proto: &T, blocks: &[Matrix<T>]) -> Self {
        let rows = blocks.iter().map(|b| b.rows).sum();
        let cols = blocks.iter().map(|b| b.cols).sum();
        let mut out = Matrix::zero(proto, rows, cols);
        let (mut i0, mut j0) = (0, 0);
        for b in blocks {
            out.set_block(i0, j0, b);
            i0 += b.rows;
            j0 += b.cols;
        }
        out
    }

    pub fn set_block(&mut self, i0: usize, j0: usize, b: &Matrix<T>) {
        for i in 0..b.rows {
            for j in 0..b.cols {
                self.set(i0 + i, j0 + j, b.get(i, j).clone());
            }
        }
    }

    pub fn select(&self, row_idx: &[usize], col_idx: &[usize]) -> Self {
        Matrix::from_fn(&self.proto, row_idx.len(), col_idx.len(), |i, j| {
            self.get(row_idx[i], col_idx[j]).clone()
        })
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn from_columns(proto: &T, rows: usize, cols: Vec<Vec<T>>) -> Self {
        let c = cols.len();
        Matrix::from_fn(proto, rows, c, |i, j| cols[j][i].clone())
    }

    /// row dst += c * row src
    pub fn row_op(&mut self, dst: usize, src: usize, c: &T) {
        for j in 0..self.cols {
            let v = self.get(dst, j).add_(&c.mul_(self.get(src, j)));
            self.set(dst, j, v);
        }
    }

    /// col dst += col src * c
    pub fn col_op(&mut self, dst: usize, src: usize, c: &T) {
        for i in 0..self.rows {
            let v = self.get(i, dst).add_(&self.get(i, src).mul_(c));
            self.set(i, dst, v);
        }
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            let x = self.get(a, j).clone();
            let y = self.get(b, j).clone();
            self.set(a, j, y);
            self.set(b, j, x);
        }
    }

    pub fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.rows {
            let x = self.get(i, a).clone();
            let y = self.get(i, b).clone();
            self.set(i, a, y);
            self.set(i, b, x);
        }
    }
}

impl<T: Ring> fmt::Display for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "[{}x{}]", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|j| self.get(i, j).to_string()).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Field algorithms: rref, rank, kernel, inverse
// ---------------------------------------------------------------------------

impl<T: FieldRing> Matrix<T> {
    /// Reduced row echelon form; returns the pivot column list.
    pub fn rref(&mut self) -> Vec<usize> {
        let mut pivots = vec![];
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            let Some(p) = (r..self.rows).find(|&i| !self.get(i, c).is_zero_()) else {
                continue;
            };
            self.swap_rows(r, p);
            let inv = self.get(r, c).inv_().expect("nonzero pivot");
            for j in 0..self.cols {
                let v = self.get(r, j).mul_(&inv);
                self.set(r, j, v);
            }
            for i in 0..self.rows {
                if i != r && !self.get(i, c).is_zero_() {
                    let c0 = self.get(i, c).neg_();
                    self.row_op(i, r, &c0);
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        m.rref().len()
    }

    /// Basis of the right kernel, as column vectors.
    pub fn kernel_basis(&self) -> Vec<Vec<T>> {
        let mut m = self.clone();
        let pivots = m.rref();
        let pivot_set: std::collections::HashSet<usize> = pivots.iter().cloned().collect();
        let mut out = vec![];
        for free in 0..self.cols {
            if pivot_set.contains(&free) {
                continue;
            }
            let mut v = vec![self.proto.zero_like(); self.cols];
            v[free] = self.proto.one_like();
            for (r, &pc) in pivots.iter().enumerate() {
                v[pc] = m.get(r, free).neg_();
            }
            out.push(v);
        }
        out
    }

    pub fn invert(&self) -> Result<Self, DbcError> {
        if !self.is_square() {
            return Err(DbcError::NotSquare(self.rows, self.cols));
        }
        let n = self.rows;
        let mut aug = self.hstack(&Matrix::identity(&self.proto, n));
        let pivots = aug.rref();
        if pivots.len() < n || pivots.iter().take(n).enumerate().any(|(i, &p)| p != i) {
            return Err(DbcError::NotInvertible);
        }
        Ok(Matrix::from_fn(&self.proto, n, n, |i, j| {
            aug.get(i, n + j).clone()
        }))
    }

    /// Solves self * x = b for a single column b; None when inconsistent.
    pub fn solve(&self, b: &[T]) -> Option<Vec<T>> {
        assert_eq!(b.len(), self.rows);
        let bm = Matrix::from_columns(&self.proto, self.rows, vec![b.to_vec()]);
        let mut aug = self.hstack(&bm);
        let pivots = aug.rref();
        if pivots.iter().any(|&p| p == self.cols) {
            return None;
        }
        let mut x = vec![self.proto.zero_like(); self.cols];
        for (r, &pc) in pivots.iter().enumerate() {
            x[pc] = aug.get(r, self.cols).clone();
        }
        Some(x)
    }
}

// ---------------------------------------------------------------------------
// K-specific: valuations, residues, D-invertibility
// ---------------------------------------------------------------------------

impl Matrix<FieldElement> {
    /// nu(A) = min over entries; infinity for empty or zero matrices.
    pub fn valuation(&self) -> ExtendedInt {
        let mut v = ExtendedInt::Infinity;
        for e in &self.data {
            v = v.min(e.valuation());
        }
        v
    }

    pub fn all_in_d(&self) -> bool {
        self.data.iter().all(|e| e.in_d())
    }

    pub fn residue_matrix(&self) -> Result<Matrix<BaseScalar>, DbcError> {
        let field = self.proto.field;
        let proto = BaseScalar::zero(field);
        let mut out = Matrix::zero(&proto, self.rows, self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(i, j, self.get(i, j).residue()?);
            }
        }
        Ok(out)
    }

    /// True iff all entries lie in D and the residue matrix is invertible
    /// over k; such a matrix has a two-sided inverse over D.
    pub fn is_d_invertible(&self) -> Result<bool, DbcError> {
        if !self.is_square() {
            return Err(DbcError::NotSquare(self.rows, self.cols));
        }
        if !self.all_in_d() {
            return Ok(false);
        }
        Ok(self.residue_matrix()?.rank() == self.rows)
    }

    /// Inverse of a D-invertible matrix; all entries of the result are in D.
    pub fn d_inverse(&self) -> Result<Self, DbcError> {
        if !self.is_d_invertible()? {
            return Err(DbcError::NotInvertible);
        }
        let inv = self.invert()?;
        debug_assert!(inv.all_in_d());
        Ok(inv)
    }

    /// Multiplies every entry by z^n.
    pub fn scale_z(&self, n: i64) -> Self {
        self.map(&self.proto, |e| e.shift(n))
    }

    /// Constant (degree-zero) lift of a residue matrix.
    pub fn lift_const(m: &Matrix<BaseScalar>) -> Self {
        let field = m.proto().field();
        let proto = FieldElement::zero(field);
        m.map(&proto, |c| FieldElement::from_base(c.clone()))
    }
}

/// matrix_valuation as a free function, mirroring the paper's nu(A).
pub fn matrix_valuation(m: &Matrix<FieldElement>) -> ExtendedInt {
    m.valuation()
}

// ---------------------------------------------------------------------------
// Generic univariate polynomials over any FieldRing scalar
// ---------------------------------------------------------------------------

/// Univariate polynomial with coefficients in an arbitrary exact field.
/// Used for annihilators and characteristic-polynomial work over both k and
/// K; `UniPoly` stays the k-specialized form used by the factorizer.
#[derive(Clone, PartialEq, Debug)]
pub struct GPoly<T: FieldRing> {
    pub coeffs: Vec<T>,
    proto: T,
}

impl<T: FieldRing> GPoly<T> {
    pub fn new(proto: &T, mut coeffs: Vec<T>) -> Self {
        while coeffs.last().map_or(false, |c| c.is_zero_()) {
            coeffs.pop();
        }
        GPoly {
            coeffs,
            proto: proto.zero_like(),
        }
    }

    pub fn zero(proto: &T) -> Self {
        GPoly::new(proto, vec![])
    }

    pub fn one(proto: &T) -> Self {
        GPoly::new(proto, vec![proto.one_like()])
    }

    pub fn var(proto: &T) -> Self {
        GPoly::new(proto, vec![proto.zero_like(), proto.one_like()])
    }

    pub fn proto(&self) -> &T {
        &self.proto
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        if self.is_zero() {
            None
        } else {
            Some(self.coeffs.len() - 1)
        }
    }

    pub fn coeff(&self, i: usize) -> T {
        self.coeffs
            .get(i)
            .cloned()
            .unwrap_or_else(|| self.proto.zero_like())
    }

    pub fn leading(&self) -> T {
        self.coeffs
            .last()
            .cloned()
            .unwrap_or_else(|| self.proto.zero_like())
    }

    pub fn add(&self, o: &Self) -> Self {
        let n = self.coeffs.len().max(o.coeffs.len());
        GPoly::new(
            &self.proto,
            (0..n).map(|i| self.coeff(i).add_(&o.coeff(i))).collect(),
        )
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> Self {
        GPoly::new(&self.proto, self.coeffs.iter().map(|c| c.neg_()).collect())
    }

    pub fn mul(&self, o: &Self) -> Self {
        if self.is_zero() || o.is_zero() {
            return GPoly::zero(&self.proto);
        }
        let mut coeffs = vec![self.proto.zero_like(); self.coeffs.len() + o.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in o.coeffs.iter().enumerate() {
                coeffs[i + j] = coeffs[i + j].add_(&a.mul_(b));
            }
        }
        GPoly::new(&self.proto, coeffs)
    }

    pub fn scale(&self, c: &T) -> Self {
        GPoly::new(&self.proto, self.coeffs.iter().map(|a| a.mul_(c)).collect())
    }

    pub fn monic(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        self.scale(&self.leading().inv_().unwrap())
    }

    pub fn div_rem(&self, div: &Self) -> Result<(Self, Self), DbcError> {
        if div.is_zero() {
            return Err(DbcError::DivisionByZero);
        }
        let mut rem = self.clone();
        let mut quo = GPoly::zero(&self.proto);
        let dinv = div.leading().inv_()?;
        let ddeg = div.degree().unwrap();
        while let Some(rdeg) = rem.degree() {
            if rdeg < ddeg {
                break;
            }
            let c = rem.leading().mul_(&dinv);
            let mut coeffs = vec![self.proto.zero_like(); rdeg - ddeg];
            coeffs.push(c);
            let term = GPoly::new(&self.proto, coeffs);
            quo = quo.add(&term);
            rem = rem.sub(&term.mul(div));
        }
        Ok((quo, rem))
    }

    pub fn gcd(&self, o: &Self) -> Self {
        let mut a = self.clone();
        let mut b = o.clone();
        while !b.is_zero() {
            let (_, r) = a.div_rem(&b).expect("gcd by nonzero");
            a = b;
            b = r;
        }
        if a.is_zero() {
            a
        } else {
            a.monic()
        }
    }

    pub fn pow(&self, e: usize) -> Self {
        let mut acc = GPoly::one(&self.proto);
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    /// Applies the polynomial to a square matrix.
    pub fn eval_matrix(&self, a: &Matrix<T>) -> Matrix<T> {
        let n = a.rows;
        let mut acc = Matrix::zero(&self.proto, n, n);
        for c in self.coeffs.iter().rev() {
            acc = acc.mul(a);
            for i in 0..n {
                let v = acc.get(i, i).add_(c);
                acc.set(i, i, v);
            }
        }
        acc
    }

    /// Applies the polynomial to a column vector under the action of A.
    pub fn eval_vector(&self, a: &Matrix<T>, v: &[T]) -> Vec<T> {
        let mut acc = vec![self.proto.zero_like(); v.len()];
        for c in self.coeffs.iter().rev() {
            // acc = A * acc + c * v
            let m = Matrix::from_columns(&self.proto, v.len(), vec![acc]);
            let av = a.mul(&m);
            acc = (0..v.len())
                .map(|i| av.get(i, 0).add_(&c.mul_(&v[i])))
                .collect();
        }
        acc
    }
}

impl GPoly<BaseScalar> {
    pub fn from_unipoly(p: &UniPoly) -> Self {
        let proto = BaseScalar::zero(p.field);
        GPoly::new(&proto, p.coeffs.clone())
    }

    pub fn to_unipoly(&self) -> UniPoly {
        UniPoly::new(self.proto.field(), self.coeffs.clone())
    }
}

impl GPoly<FieldElement> {
    /// Constant embedding of a residue polynomial into K[t].
    pub fn lift_const(p: &UniPoly) -> Self {
        let proto = FieldElement::zero(p.field);
        GPoly::new(
            &proto,
            p.coeffs
                .iter()
                .map(|c| FieldElement::from_base(c.clone()))
                .collect(),
        )
    }
}

// ---------------------------------------------------------------------------
// Canonical forms
// ---------------------------------------------------------------------------

/// Companion matrix of a monic polynomial: sub-diagonal 1s, negated
/// coefficients in the last column.
pub fn companion<T: FieldRing>(p: &GPoly<T>) -> Matrix<T> {
    let n = p.degree().expect("companion of nonzero poly");
    assert!(n >= 1, "companion of a constant");
    let pm = p.monic();
    let proto = p.proto().zero_like();
    Matrix::from_fn(&proto, n, n, |i, j| {
        if j + 1 == n {
            pm.coeff(i).neg_()
        } else if i == j + 1 {
            proto.one_like()
        } else {
            proto.zero_like()
        }
    })
}

/// Generalized Jordan block: an m x m grid of (deg phi)-sized blocks with
/// companion(phi) on the diagonal and a single 1 in the top-right corner of
/// each superdiagonal block.  For phi = t - c this is the classical Jordan
/// block J_m(c).
pub fn hypercompanion<T: FieldRing>(phi: &GPoly<T>, m: usize) -> Matrix<T> {
    let d = phi.degree().expect("nonzero phi");
    let proto = phi.proto().zero_like();
    let c = companion(phi);
    let mut out = Matrix::zero(&proto, m * d, m * d);
    for b in 0..m {
        out.set_block(b * d, b * d, &c);
        if b + 1 < m {
            out.set(b * d, (b + 1) * d + d - 1, proto.one_like());
        }
    }
    out
}

/// Smallest monic p with p(A)v = 0, by Krylov linear dependence.
pub fn annihilator<T: FieldRing>(a: &Matrix<T>, v: &[T]) -> GPoly<T> {
    let proto = a.proto().zero_like();
    let n = a.rows;
    let mut krylov: Vec<Vec<T>> = vec![v.to_vec()];
    loop {
        // test dependence of the last vector on the previous ones
        let cols = krylov.clone();
        let k = cols.len();
        let m = Matrix::from_columns(&proto, n, cols[..k - 1].to_vec());
        if k == 1 {
            if krylov[0].iter().all(|x| x.is_zero_()) {
                return GPoly::one(&proto);
            }
        } else if let Some(sol) = m.solve(&krylov[k - 1]) {
            // A^{k-1} v = sum sol_i A^i v
            let mut coeffs: Vec<T> = sol.iter().map(|c| c.neg_()).collect();
            coeffs.push(proto.one_like());
            return GPoly::new(&proto, coeffs);
        }
        // extend
        let last = Matrix::from_columns(&proto, n, vec![krylov.last().unwrap().clone()]);
        let next = a.mul(&last).column(0);
        krylov.push(next);
        assert!(krylov.len() <= n + 1, "Krylov chain too long");
    }
}

/// Minimal polynomial: lcm of the annihilators of the standard basis.
pub fn minimal_polynomial<T: FieldRing>(a: &Matrix<T>) -> GPoly<T> {
    let proto = a.proto().zero_like();
    let n = a.rows;
    let mut mu = GPoly::one(&proto);
    for i in 0..n {
        let mut v = vec![proto.zero_like(); n];
        v[i] = proto.one_like();
        let p = annihilator(a, &v);
        // lcm(mu, p)
        let g = mu.gcd(&p);
        mu = mu.mul(&p.div_rem(&g).unwrap().0).monic();
    }
    mu
}

/// One elementary-divisor block phi^m together with its hypercompanion shape.
#[derive(Clone, Debug, PartialEq)]
pub struct EdBlock<T: FieldRing> {
    pub phi: GPoly<T>,
    pub m: usize,
}

/// Transforms a square matrix over a field into its elementary-divisor
/// normal form: P^{-1} A P = direct sum of hypercompanion(phi_i, m_i).
/// `factor_fn` supplies irreducible factorization of monic polynomials.
pub fn elementary_divisor_form<T: FieldRing>(
    a: &Matrix<T>,
    factor_fn: &dyn Fn(&GPoly<T>) -> Result<Vec<(GPoly<T>, usize)>, DbcError>,
) -> Result<(Matrix<T>, Vec<EdBlock<T>>), DbcError> {
    if !a.is_square() {
        return Err(DbcError::NotSquare(a.rows, a.cols));
    }
    let proto = a.proto().zero_like();
    let n = a.rows;
    if n == 0 {
        return Ok((Matrix::zero(&proto, 0, 0), vec![]));
    }
    let mu = minimal_polynomial(a);
    let mut factors = factor_fn(&mu)?;
    factors.sort_by(|x, y| {
        x.0.degree()
            .cmp(&y.0.degree())
            .then_with(|| format!("{:?}", x.0.coeffs).cmp(&format!("{:?}", y.0.coeffs)))
    });

    let mut p_cols: Vec<Vec<T>> = vec![];
    let mut blocks: Vec<EdBlock<T>> = vec![];

    for (phi, e_max) in &factors {
        let d = phi.degree().unwrap();
        let npow = phi.eval_matrix(a);
        // kernel filtration of phi(A)^j
        let mut kernels: Vec<Matrix<T>> = vec![Matrix::zero(&proto, n, 0)]; // K_0 = 0
        let mut pw = Matrix::identity(&proto, n);
        for _ in 1..=*e_max {
            pw = pw.mul(&npow);
            let kb = pw.kernel_basis();
            kernels.push(Matrix::from_columns(&proto, n, kb));
        }
        // chains: (generator, length)
        let mut chains: Vec<(Vec<T>, usize)> = vec![];
        // `span` accumulates all claimed chunk vectors as columns
        let mut span: Vec<Vec<T>> = vec![];
        for m in (1..=*e_max).rev() {
            // vectors carried down from longer chains: phi(A)^{len-m} w
            let mut level_reps: Vec<Vec<T>> = vec![];
            for (w, len) in &chains {
                if *len > m {
                    let mut v = w.clone();
                    for _ in 0..(*len - m) {
                        let vm = Matrix::from_columns(&proto, n, vec![v]);
                        v = npow.mul(&vm).column(0);
                    }
                    level_reps.push(v);
                }
            }
            // candidate generators: basis of K_m
            let km = &kernels[m];
            let km1 = &kernels[m - 1];
            // base span: K_{m-1} + A-orbits of the carried vectors
            let mut base_cols: Vec<Vec<T>> = (0..km1.cols).map(|j| km1.column(j)).collect();
            for v in &level_reps {
                base_cols.extend(orbit(a, v, d));
            }
            for cand_j in 0..km.cols {
                let w = km.column(cand_j);
                let orb = orbit(a, &w, d);
                let before = rank_of(&proto, n, &base_cols);
                let mut test = base_cols.clone();
                test.extend(orb.clone());
                let after = rank_of(&proto, n, &test);
                if after == before + d {
                    base_cols = test;
                    chains.push((w, m));
                }
            }
            // remember claimed chunks for the final basis assembly
            span.clear();
        }
        // assemble basis chunks: per chain, phi(A)^j A^i w with j descending
        for (w, m) in &chains {
            let mut chunk: Vec<Vec<T>> = vec![];
            let mut base = w.clone();
            let mut layers: Vec<Vec<Vec<T>>> = vec![];
            for _ in 0..*m {
                layers.push(orbit(a, &base, d));
                let bm = Matrix::from_columns(&proto, n, vec![base]);
                base = npow.mul(&bm).column(0);
            }
            for layer in layers.into_iter().rev() {
                chunk.extend(layer);
            }
            p_cols.extend(chunk);
            blocks.push(EdBlock {
                phi: phi.clone(),
                m: *m,
            });
        }
    }

    let p = Matrix::from_columns(&proto, n, p_cols);
    if p.cols != n || p.rank() != n {
        return Err(DbcError::NoProgress(
            "elementary divisor basis is not complete".into(),
        ));
    }
    // verify the shape exactly
    let pi = p.invert()?;
    let nf = pi.mul(a).mul(&p);
    let expect = Matrix::block_diag(
        &proto,
        &blocks
            .iter()
            .map(|b| hypercompanion(&b.phi, b.m))
            .collect::<Vec<_>>(),
    );
    if nf != expect {
        return Err(DbcError::NoProgress(
            "elementary divisor form verification failed".into(),
        ));
    }
    Ok((p, blocks))
}

fn orbit<T: FieldRing>(a: &Matrix<T>, v: &[T], d: usize) -> Vec<Vec<T>> {
    let proto = a.proto().zero_like();
    let mut out = vec![v.to_vec()];
    for _ in 1..d {
        let m = Matrix::from_columns(&proto, v.len(), vec![out.last().unwrap().clone()]);
        out.push(a.mul(&m).column(0));
    }
    out
}

fn rank_of<T: FieldRing>(proto: &T, n: usize, cols: &[Vec<T>]) -> usize {
    if cols.is_empty() {
        return 0;
    }
    Matrix::from_columns(proto, n, cols.to_vec()).rank()
}

/// Rational canonical form over the residue field k: returns P over k with
/// P^{-1} M P equal to the direct sum of companion blocks of the invariant
/// factors, listed in ascending divisibility order.
pub fn rational_canonical_form(
    m: &Matrix<BaseScalar>,
) -> Result<(Matrix<BaseScalar>, Vec<UniPoly>), DbcError> {
    let proto = m.proto().zero_like();
    let factor_fn = |p: &GPoly<BaseScalar>| -> Result<Vec<(GPoly<BaseScalar>, usize)>, DbcError> {
        Ok(polys::factor(&p.to_unipoly())?
            .into_iter()
            .map(|(f, mul)| (GPoly::from_unipoly(&f), mul))
            .collect())
    };
    let (p_ed, blocks) = elementary_divisor_form(m, &factor_fn)?;

    // group elementary divisors into invariant factors
    use std::collections::BTreeMap;
    let mut by_phi: BTreeMap<String, (GPoly<BaseScalar>, Vec<(usize, usize)>)> = BTreeMap::new();
    // track, per phi, the (multiplicity m, block index) pairs
    for (bi, b) in blocks.iter().enumerate() {
        let key = format!("{:?}", b.phi.coeffs);
        by_phi
            .entry(key)
            .or_insert_with(|| (b.phi.clone(), vec![]))
            .1
            .push((b.m, bi));
    }
    for (_, (_, v)) in by_phi.iter_mut() {
        v.sort_by(|a, b| b.0.cmp(&a.0)); // descending multiplicity
    }
    let levels = by_phi.values().map(|(_, v)| v.len()).max().unwrap_or(0);

    // block start offsets inside the elementary-divisor basis
    let mut offsets = vec![0usize; blocks.len()];
    let mut acc = 0;
    for (i, b) in blocks.iter().enumerate() {
        offsets[i] = acc;
        acc += b.phi.degree().unwrap() * b.m;
    }

    let mut inv_factors: Vec<UniPoly> = vec![];
    let mut p_cols: Vec<Vec<BaseScalar>> = vec![];
    for level in 0..levels {
        // the level-th largest multiplicity of each phi combine into one factor
        let mut q = GPoly::one(&proto);
        let mut gen = vec![proto.zero_like(); m.rows];
        for (_, (phi, ms)) in by_phi.iter() {
            if let Some(&(mult, bi)) = ms.get(level) {
                q = q.mul(&phi.pow(mult));
                // chain generator: first column of that block inside P_ed
                let col = p_ed.column(offsets[bi] + phi.degree().unwrap() * mult - 1);
                // the generator of the cyclic chunk is the column with j = 0,
                // i = 0, which sits at the *end* of the chunk (j descending)
                let start = offsets[bi] + (mult - 1) * phi.degree().unwrap();
                let _ = col;
                let gcol = p_ed.column(start);
                for i in 0..m.rows {
                    gen[i] = gen[i].add_(&gcol[i]);
                }
            }
        }
        // Krylov basis of the combined generator
        let deg = q.degree().unwrap();
        let mut v = gen.clone();
        for _ in 0..deg {
            p_cols.push(v.clone());
            let vm = Matrix::from_columns(&proto, m.rows, vec![v]);
            v = m.mul(&vm).column(0);
        }
        inv_factors.push(q.to_unipoly());
    }
    // ascending divisibility: smallest degree first
    // (levels were built largest-first, so reverse both lists coherently)
    let mut order: Vec<usize> = (0..inv_factors.len()).collect();
    order.reverse();
    let mut factors_sorted = vec![];
    let mut cols_sorted: Vec<Vec<BaseScalar>> = vec![];
    let mut starts = vec![0usize; inv_factors.len()];
    let mut s = 0;
    for (i, q) in inv_factors.iter().enumerate() {
        starts[i] = s;
        s += q.degree().unwrap();
    }
    for &i in &order {
        factors_sorted.push(inv_factors[i].clone());
        let d = inv_factors[i].degree().unwrap();
        for j in 0..d {
            cols_sorted.push(p_cols[starts[i] + j].clone());
        }
    }
    let p = Matrix::from_columns(&proto, m.rows, cols_sorted);
    if m.rows > 0 && p.rank() != m.rows {
        return Err(DbcError::NoProgress(
            "rational canonical basis is singular".into(),
        ));
    }
    // verify
    if m.rows > 0 {
        let nf = p.invert()?.mul(m).mul(&p);
        let expect = Matrix::block_diag(
            &proto,
            &factors_sorted
                .iter()
                .map(|q| companion(&GPoly::from_unipoly(q)))
                .collect::<Vec<_>>(),
        );
        if nf != expect {
            return Err(DbcError::NoProgress(
                "rational canonical form verification failed".into(),
            ));
        }
    }
    Ok((p, factors_sorted))
}

/// Fitting decomposition of a square D-matrix: S1 * A * S2 = diag(A0, A1)
/// with residue(A0) nilpotent and residue(A1) invertible of size r, the
/// nilpotent part first.  S1 and S2 are D-invertible.
pub fn fitting_split(
    a: &Matrix<FieldElement>,
) -> Result<(Matrix<FieldElement>, Matrix<FieldElement>, usize), DbcError> {
    if !a.is_square() {
        return Err(DbcError::NotSquare(a.rows, a.cols));
    }
    if !a.all_in_d() {
        return Err(DbcError::NotOverD(format!("nu(A) = {}", a.valuation())));
    }
    let n = a.rows;
    let proto = a.proto().clone();
    if n == 0 {
        let e = Matrix::zero(&proto, 0, 0);
        return Ok((e.clone(), e, 0));
    }
    let abar = a.residue_matrix()?;
    let kproto = abar.proto().clone();
    // generalized kernel (nilpotent part) and stable image of the residue
    let mut pw = Matrix::identity(&kproto, n);
    for _ in 0..n {
        pw = pw.mul(&abar);
    }
    let ker = pw.kernel_basis(); // basis of the nilpotent summand
    let r = n - ker.len();
    // complement: image of abar^n, extracted by column rank selection
    let mut img_cols: Vec<Vec<BaseScalar>> = vec![];
    let mut cur: Vec<Vec<BaseScalar>> = ker.clone();
    for j in 0..n {
        let c = pw.column(j);
        let before = rank_of(&kproto, n, &cur);
        cur.push(c.clone());
        if rank_of(&kproto, n, &cur) > before {
            img_cols.push(c);
        } else {
            cur.pop();
        }
    }
    assert_eq!(img_cols.len(), r, "fitting: complement dimension mismatch");
    let mut cols = ker;
    cols.extend(img_cols);
    let pbar = Matrix::from_columns(&kproto, n, cols);
    let p = Matrix::<FieldElement>::lift_const(&pbar);
    let pinv = p.invert()?;
    let a1 = pinv.mul(a).mul(&p);
    // a1 = [[N, zB],[zC, U]] with U D-invertible of size r
    let top: Vec<usize> = (0..n - r).collect();
    let bot: Vec<usize> = (n - r..n).collect();
    let u = a1.select(&bot, &bot);
    let uinv = u.d_inverse()?;
    // column shot: kill the (bot, top) block
    let c21 = a1.select(&bot, &top);
    let v = uinv.mul(&c21); // over D; the z-factor is already inside c21
    let mut s2r = Matrix::identity(&proto, n);
    for (bi, &i) in bot.iter().enumerate() {
        for (tj, &j) in top.iter().enumerate() {
            s2r.set(i, j, v.get(bi, tj).neg());
        }
    }
    let a2 = a1.mul(&s2r);
    // row shot: kill the (top, bot) block
    let b12 = a2.select(&top, &bot);
    let u2 = a2.select(&bot, &bot);
    let w = b12.mul(&u2.d_inverse()?);
    let mut s1l = Matrix::identity(&proto, n);
    for (ti, &i) in top.iter().enumerate() {
        for (bj, &j) in bot.iter().enumerate() {
            s1l.set(i, j, w.get(ti, bj).neg());
        }
    }
    let a3 = s1l.mul(&a2);
    // final transforms
    let s1 = s1l.mul(&pinv);
    let s2 = p.mul(&s2r);
    debug_assert!(s1.is_d_invertible().unwrap_or(false));
    debug_assert!(s2.is_d_invertible().unwrap_or(false));
    // checks: block diagonal, residue(A0) nilpotent, residue(A1) invertible
    for &i in &top {
        for &j in &bot {
            if !a3.get(i, j).is_zero() || !a3.get(j, i).is_zero() {
                return Err(DbcError::NoProgress("fitting split not block diagonal".into()));
            }
        }
    }
    Ok((s1, s2, r))
}

/// Frobenius-block data produced by `companion_lift`.
#[derive(Clone, Debug)]
pub enum FrobeniusBlock {
    /// phi irreducible over k; the matrix is a D-lift whose residue is the
    /// generalized Jordan block of phi^m.
    Decorated {
        phi: UniPoly,
        m: usize,
        matrix: Matrix<FieldElement>,
    },
    /// phi irreducible over K; the matrix is the companion of phi^m over K.
    Plain {
        phi: GPoly<FieldElement>,
        m: usize,
        matrix: Matrix<FieldElement>,
    },
}

impl FrobeniusBlock {
    pub fn matrix(&self) -> &Matrix<FieldElement> {
        match self {
            FrobeniusBlock::Decorated { matrix, .. } => matrix,
            FrobeniusBlock::Plain { matrix, .. } => matrix,
        }
    }
}

/// Decorated-mode companion lift: the constant coefficient-wise lift of the
/// generalized Jordan block of phi(t)^m over k.  phi must be monic
/// irreducible and different from t.
pub fn companion_lift_decorated(phi: &UniPoly, m: usize) -> Result<FrobeniusBlock, DbcError> {
    if phi.degree() == Some(1) && phi.coeff(0).is_zero() {
        return Err(DbcError::PhiEqualsT);
    }
    if !phi.is_monic() {
        return Err(DbcError::BadPolynomial("phi must be monic".into()));
    }
    if !polys::is_irreducible(phi)? {
        return Err(DbcError::ReduciblePolynomial(phi.to_string()));
    }
    let g = GPoly::from_unipoly(phi);
    let hk = hypercompanion(&g, m);
    let matrix = Matrix::<FieldElement>::lift_const(&hk);
    Ok(FrobeniusBlock::Decorated {
        phi: phi.clone(),
        m,
        matrix,
    })
}

/// Plain-mode companion lift: the companion matrix of phi(t)^m over K.
/// Irreducibility over K is checked where the engine can decide it (degree
/// one, or constant coefficients checked over k).
pub fn companion_lift_plain(
    phi: &GPoly<FieldElement>,
    m: usize,
) -> Result<FrobeniusBlock, DbcError> {
    if phi.degree() == Some(1) && phi.coeff(0).is_zero() {
        return Err(DbcError::PhiEqualsT);
    }
    if phi.degree().map_or(true, |d| d == 0) {
        return Err(DbcError::BadPolynomial("phi must be non-constant".into()));
    }
    let all_const = phi
        .coeffs
        .iter()
        .all(|c| c.is_zero() || c.valuation() == ExtendedInt::Finite(0) && {
            let (n, d) = c.expand();
            n.degree() == Some(0) && d.degree() == Some(0)
        });
    if all_const {
        let field = phi.proto().field;
        let up = UniPoly::new(
            field,
            phi.coeffs.iter().map(|c| c.residue().unwrap()).collect(),
        );
        if !polys::is_irreducible(&up)? {
            return Err(DbcError::ReduciblePolynomial(up.to_string()));
        }
    }
    let pm = phi.monic().pow(m);
    let matrix = companion(&pm);
    Ok(FrobeniusBlock::Plain {
        phi: phi.clone(),
        m,
        matrix,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalars::Field;

    fn bs(f: Field, n: i64) -> BaseScalar {
        BaseScalar::from_i64(f, n)
    }

    fn kmat(f: Field, rows: &[&[i64]]) -> Matrix<BaseScalar> {
        let proto = BaseScalar::zero(f);
        Matrix::from_rows(
            &proto,
            rows.iter()
                .map(|r| r.iter().map(|&n| bs(f, n)).collect())
                .collect(),
        )
    }

    fn fe(text: &str) -> FieldElement {
        crate::scalars::parse_element(Field::Q, text).unwrap()
    }

    fn femat(rows: &[&[&str]]) -> Matrix<FieldElement> {
        let proto = FieldElement::zero(Field::Q);
        Matrix::from_rows(
            &proto,
            rows.iter()
                .map(|r| r.iter().map(|s| fe(s)).collect())
                .collect(),
        )
    }

    #[test]
    fn valuation_examples() {
        let m = femat(&[&["z", "z^2"], &["z^3", "0"]]);
        assert_eq!(m.valuation(), ExtendedInt::Finite(1));
        let e = Matrix::zero(&FieldElement::zero(Field::Q), 0, 0);
        assert_eq!(e.valuation(), ExtendedInt::Infinity);
        let m = femat(&[&["1/z"]]);
        assert_eq!(m.valuation(), ExtendedInt::Finite(-1));
    }

    #[test]
    fn d_invertibility() {
        assert!(femat(&[&["1+z", "z"], &["0", "2"]]).is_d_invertible().unwrap());
        assert!(!femat(&[&["z", "0"], &["0", "1"]]).is_d_invertible().unwrap());
        assert!(!femat(&[&["1/z"]]).is_d_invertible().unwrap());
        // D-invertible implies a two-sided inverse over D
        let m = femat(&[&["1+z", "z"], &["0", "2"]]);
        let inv = m.d_inverse().unwrap();
        assert!(inv.all_in_d());
        let id = Matrix::identity(&FieldElement::zero(Field::Q), 2);
        assert_eq!(m.mul(&inv), id);
        assert_eq!(inv.mul(&m), id);
    }

    #[test]
    fn rcf_zero_and_nilpotent() {
        let f = Field::Q;
        // zero 2x2: two companion blocks of t
        let (_, facs) = rational_canonical_form(&kmat(f, &[&[0, 0], &[0, 0]])).unwrap();
        assert_eq!(facs.len(), 2);
        assert!(facs.iter().all(|q| q.degree() == Some(1) && q.coeff(0).is_zero()));
        // [[0,1],[0,0]]: single companion block of t^2
        let (_, facs) = rational_canonical_form(&kmat(f, &[&[0, 1], &[0, 0]])).unwrap();
        assert_eq!(facs.len(), 1);
        assert_eq!(facs[0].degree(), Some(2));
        assert!(facs[0].coeff(0).is_zero() && facs[0].coeff(1).is_zero());
    }

    #[test]
    fn rcf_scalar_fp() {
        let f = Field::Fp(101);
        // diag(5, 5): two invariant factors t - 5
        let (p, facs) = rational_canonical_form(&kmat(f, &[&[5, 0], &[0, 5]])).unwrap();
        assert_eq!(facs.len(), 2);
        for q in &facs {
            assert_eq!(q.degree(), Some(1));
            assert_eq!(q.coeff(0), bs(f, -5));
        }
        assert_eq!(p.rank(), 2);
    }

    #[test]
    fn ed_form_jordan() {
        let f = Field::Q;
        // J_2(3) + eigenvalue 7: elementary divisors (t-3)^2, (t-7)
        let a = kmat(f, &[&[3, 1, 0], &[0, 3, 0], &[0, 0, 7]]);
        let factor_fn = |p: &GPoly<BaseScalar>| {
            Ok(polys::factor(&p.to_unipoly())?
                .into_iter()
                .map(|(g, m)| (GPoly::from_unipoly(&g), m))
                .collect())
        };
        let (p, blocks) = elementary_divisor_form(&a, &factor_fn).unwrap();
        assert_eq!(blocks.len(), 2);
        let total: usize = blocks.iter().map(|b| b.phi.degree().unwrap() * b.m).sum();
        assert_eq!(total, 3);
        assert_eq!(p.rank(), 3);
        assert!(blocks.iter().any(|b| b.m == 2));
    }

    #[test]
    fn fitting_examples() {
        // residue zero: r = 0
        let a = femat(&[&["z", "z^2"], &["z", "z"]]);
        let (_, _, r) = fitting_split(&a).unwrap();
        assert_eq!(r, 0);
        // identity: r = n
        let a = femat(&[&["1", "0"], &["0", "1"]]);
        let (_, _, r) = fitting_split(&a).unwrap();
        assert_eq!(r, 2);
        // [[0,1],[0,3]]: residue has rank 1 stable part
        let f = Field::Fp(101);
        let proto = FieldElement::zero(f);
        let a = Matrix::from_rows(
            &proto,
            vec![
                vec![FieldElement::zero(f), FieldElement::one(f)],
                vec![FieldElement::zero(f), FieldElement::from_i64(f, 3)],
            ],
        );
        let (s1, s2, r) = fitting_split(&a).unwrap();
        assert_eq!(r, 1);
        let d = s1.mul(&a).mul(&s2);
        // block diagonal with nilpotent-first ordering
        assert!(d.get(0, 1).is_zero() && d.get(1, 0).is_zero());
        assert!(d.get(0, 0).residue().unwrap().is_zero());
        assert!(!d.get(1, 1).residue().unwrap().is_zero());
    }

    #[test]
    fn companion_lift_examples() {
        let f = Field::Q;
        // (t - 4, m = 1, decorated) -> [4]
        let phi = UniPoly::new(f, vec![bs(f, -4), bs(f, 1)]);
        let b = companion_lift_decorated(&phi, 1).unwrap();
        assert_eq!(b.matrix().rows, 1);
        assert_eq!(*b.matrix().get(0, 0), fe("4"));
        // (t - 4, m = 2, decorated) -> J_2(4)
        let b = companion_lift_decorated(&phi, 2).unwrap();
        assert_eq!(*b.matrix().get(0, 0), fe("4"));
        assert_eq!(*b.matrix().get(0, 1), fe("1"));
        assert_eq!(*b.matrix().get(1, 1), fe("4"));
        assert!(b.matrix().get(1, 0).is_zero());
        // (t - 4, m = 2, plain) -> companion of t^2 - 8t + 16
        let proto = FieldElement::zero(f);
        let gphi = GPoly::new(&proto, vec![fe("-4"), fe("1")]);
        let b = companion_lift_plain(&gphi, 2).unwrap();
        assert_eq!(*b.matrix().get(0, 1), fe("-16"));
        assert_eq!(*b.matrix().get(1, 1), fe("8"));
        // (t, m = 1) -> PhiEqualsT
        let t = UniPoly::new(f, vec![bs(f, 0), bs(f, 1)]);
        assert!(matches!(
            companion_lift_decorated(&t, 1),
            Err(DbcError::PhiEqualsT)
        ));
        // reducible phi rejected
        let red = UniPoly::new(f, vec![bs(f, -1), bs(f, 0), bs(f, 1)]);
        assert!(matches!(
            companion_lift_decorated(&red, 1),
            Err(DbcError::ReduciblePolynomial(_))
        ));
    }
}
