//! Univariate polynomial factorization over the base field k.
//!
//! The reduction algorithm needs to split characteristic polynomials of
//! residue matrices into irreducible factors: each elementary divisor
//! phi(t)^m of an invertible residue block yields one band.  Over F_p this
//! is Cantor-Zassenhaus (distinct-degree plus equal-degree splitting); over
//! Q it is Yun's squarefree decomposition followed by rational root
//! extraction and Kronecker's method for the small degrees the engine
//! actually meets.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::DbcError;
use crate::scalars::{BaseScalar, Field, UniPoly};

/// Factors a nonzero polynomial into monic irreducible powers.  The unit in
/// front (the leading coefficient) is dropped; the returned factors are
/// monic and pairwise distinct, with their multiplicities.
pub fn factor(poly: &UniPoly) -> Result<Vec<(UniPoly, usize)>, DbcError> {
    if poly.is_zero() {
        return Err(DbcError::BadPolynomial("cannot factor zero".into()));
    }
    let f = poly.monic();
    if f.degree() == Some(0) {
        return Ok(vec![]);
    }
    let mut out: Vec<(UniPoly, usize)> = vec![];
    for (g, mult) in squarefree_decomposition(&f)? {
        for h in factor_squarefree(&g)? {
            merge(&mut out, h, mult);
        }
    }
    out.sort_by(|a, b| cmp_poly(&a.0, &b.0));
    Ok(out)
}

/// True iff the monic polynomial is irreducible over its field.
pub fn is_irreducible(poly: &UniPoly) -> Result<bool, DbcError> {
    if poly.degree().map_or(true, |d| d == 0) {
        return Ok(false);
    }
    let fs = factor(poly)?;
    Ok(fs.len() == 1 && fs[0].1 == 1)
}

fn merge(out: &mut Vec<(UniPoly, usize)>, f: UniPoly, mult: usize) {
    for (g, m) in out.iter_mut() {
        if *g == f {
            *m += mult;
            return;
        }
    }
    out.push((f, mult));
}

/// Deterministic ordering used to make factor lists reproducible.
pub fn cmp_poly(a: &UniPoly, b: &UniPoly) -> std::cmp::Ordering {
    a.coeffs
        .len()
        .cmp(&b.coeffs.len())
        .then_with(|| format!("{a}").cmp(&format!("{b}")))
}

/// Squarefree decomposition: returns monic squarefree g_i with multiplicity
/// m_i such that the input equals the product of g_i^{m_i}.
fn squarefree_decomposition(f: &UniPoly) -> Result<Vec<(UniPoly, usize)>, DbcError> {
    match f.field {
        Field::Q => Ok(yun(f)),
        Field::Fp(p) => squarefree_fp(f, p),
    }
}

fn yun(f: &UniPoly) -> Vec<(UniPoly, usize)> {
    let mut out = vec![];
    let df = f.derivative();
    let a0 = f.gcd(&df);
    let mut b = f.div_rem(&a0).unwrap().0;
    let mut c = df.div_rem(&a0).unwrap().0;
    let mut i = 1usize;
    while b.degree().map_or(false, |d| d > 0) {
        let d = c.sub(&b.derivative());
        let g = b.gcd(&d);
        if g.degree().map_or(false, |dg| dg > 0) {
            out.push((g.clone(), i));
        }
        b = b.div_rem(&g).unwrap().0;
        c = d.div_rem(&g).unwrap().0;
        i += 1;
    }
    out
}

fn squarefree_fp(f: &UniPoly, p: u64) -> Result<Vec<(UniPoly, usize)>, DbcError> {
    // standard char-p variant: strip p-th powers via the Frobenius on F_p
    let mut out = vec![];
    let df = f.derivative();
    if df.is_zero() {
        // f = g(x^p); over F_p the coefficients are fixed by Frobenius
        let g = pth_root(f, p);
        for (h, m) in squarefree_fp(&g, p)? {
            out.push((h, m * p as usize));
        }
        return Ok(out);
    }
    let a0 = f.gcd(&df);
    let mut w = f.div_rem(&a0).unwrap().0; // product of squarefree parts with p ∤ multiplicity
    let mut rest = a0;
    let mut i = 1usize;
    while w.degree().map_or(false, |d| d > 0) {
        let y = w.gcd(&rest);
        let fac = w.div_rem(&y).unwrap().0;
        if fac.degree().map_or(false, |d| d > 0) {
            out.push((fac, i));
        }
        w = y.clone();
        rest = rest.div_rem(&y).unwrap().0;
        i += 1;
    }
    if rest.degree().map_or(false, |d| d > 0) {
        let g = pth_root(&rest, p);
        for (h, m) in squarefree_fp(&g, p)? {
            merge(&mut out, h, m * p as usize);
        }
    }
    Ok(out)
}

fn pth_root(f: &UniPoly, p: u64) -> UniPoly {
    let mut coeffs = vec![];
    let mut i = 0usize;
    while i < f.coeffs.len() {
        coeffs.push(f.coeff(i));
        i += p as usize;
    }
    UniPoly::new(f.field, coeffs)
}

fn factor_squarefree(f: &UniPoly) -> Result<Vec<UniPoly>, DbcError> {
    match f.field {
        Field::Fp(p) => Ok(factor_squarefree_fp(f, p)),
        Field::Q => factor_squarefree_q(f),
    }
}

// ---------------------------------------------------------------------------
// F_p: Cantor-Zassenhaus
// ---------------------------------------------------------------------------

fn polymod_mul(a: &UniPoly, b: &UniPoly, m: &UniPoly) -> UniPoly {
    a.mul(b).div_rem(m).unwrap().1
}

fn polymod_pow(a: &UniPoly, e: &BigUint, m: &UniPoly) -> UniPoly {
    let mut acc = UniPoly::one(a.field);
    let mut base = a.div_rem(m).unwrap().1;
    let bits = e.bits();
    for i in 0..bits {
        if e.bit(i) {
            acc = polymod_mul(&acc, &base, m);
        }
        base = polymod_mul(&base, &base, m);
    }
    acc
}

fn factor_squarefree_fp(f: &UniPoly, p: u64) -> Vec<UniPoly> {
    let mut out = vec![];
    let x = UniPoly::monomial(BaseScalar::one(f.field), 1);
    // distinct-degree
    let mut rest = f.monic();
    let mut xq = x.clone(); // x^{p^d} mod rest, updated as d grows
    let mut d = 0usize;
    while rest.degree().map_or(false, |deg| deg > 0) {
        d += 1;
        if rest.degree().unwrap() < 2 * d {
            // what is left is irreducible
            out.push(rest.monic());
            break;
        }
        xq = polymod_pow(&xq, &BigUint::from(p), &rest);
        let g = rest.gcd(&xq.sub(&x));
        if g.degree().map_or(false, |dg| dg > 0) {
            // g = product of all irreducible factors of degree d
            split_equal_degree(&g, d, p, &mut out);
            rest = rest.div_rem(&g).unwrap().0;
            xq = xq.div_rem(&rest).unwrap().1;
        }
    }
    out
}

fn split_equal_degree(f: &UniPoly, d: usize, p: u64, out: &mut Vec<UniPoly>) {
    let deg = f.degree().unwrap();
    if deg == d {
        out.push(f.monic());
        return;
    }
    // (p^d - 1) / 2; p is odd by the field policy
    let e = (BigUint::from(p).pow(d as u32) - BigUint::one()) >> 1;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed ^ (deg as u64) << 16 ^ d as u64);
    loop {
        let coeffs: Vec<BaseScalar> = (0..deg)
            .map(|_| BaseScalar::from_i64(f.field, rng.gen_range(0..p) as i64))
            .collect();
        let a = UniPoly::new(f.field, coeffs);
        if a.degree().is_none() {
            continue;
        }
        let b = polymod_pow(&a, &e, f);
        let g = f.gcd(&b.sub(&UniPoly::one(f.field)));
        if let Some(dg) = g.degree() {
            if dg > 0 && dg < deg {
                split_equal_degree(&g, d, p, out);
                split_equal_degree(&f.div_rem(&g).unwrap().0, d, p, out);
                return;
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Q: rational roots + Kronecker for small degrees
// ---------------------------------------------------------------------------

fn rat(c: &BaseScalar) -> BigRational {
    match c {
        BaseScalar::Rat(r) => r.clone(),
        _ => unreachable!("Q factorization on F_p scalar"),
    }
}

/// Clears denominators and the content: returns integer coefficients of a
/// primitive polynomial proportional to the input.
fn primitive_int_coeffs(f: &UniPoly) -> Vec<BigInt> {
    let mut den = BigInt::one();
    for c in &f.coeffs {
        let r = rat(c);
        den = num_integer::lcm(den, r.denom().clone());
    }
    let ints: Vec<BigInt> = f
        .coeffs
        .iter()
        .map(|c| {
            let r = rat(c);
            r.numer() * (&den / r.denom())
        })
        .collect();
    let mut g = BigInt::zero();
    for c in &ints {
        g = num_integer::gcd(g, c.clone());
    }
    if g.is_zero() {
        return ints;
    }
    ints.into_iter().map(|c| c / &g).collect()
}

fn divisors(n: &BigInt, cap: usize) -> Option<Vec<BigInt>> {
    let n = n.abs();
    let nu = n.to_u64()?;
    if nu == 0 {
        return None;
    }
    let mut out = vec![];
    let mut d = 1u64;
    while d * d <= nu {
        if nu % d == 0 {
            out.push(BigInt::from(d));
            out.push(BigInt::from(nu / d));
            if out.len() > cap {
                return None;
            }
        }
        d += 1;
    }
    out.sort();
    out.dedup();
    Some(out)
}

fn factor_squarefree_q(f: &UniPoly) -> Result<Vec<UniPoly>, DbcError> {
    let mut out = vec![];
    let mut rest = f.monic();
    // rational roots first
    loop {
        let deg = match rest.degree() {
            None | Some(0) => break,
            Some(d) => d,
        };
        if deg == 1 {
            out.push(rest.monic());
            rest = UniPoly::one(f.field);
            break;
        }
        match find_rational_root(&rest) {
            Some(r) => {
                let lin = UniPoly::new(
                    f.field,
                    vec![BaseScalar::Rat(-r.clone()), BaseScalar::one(f.field)],
                );
                out.push(lin.clone());
                rest = rest.div_rem(&lin).unwrap().0;
            }
            None => break,
        }
    }
    if rest.degree().map_or(false, |d| d > 0) {
        kronecker(&rest, &mut out)?;
    }
    Ok(out)
}

fn find_rational_root(f: &UniPoly) -> Option<BigRational> {
    let ints = primitive_int_coeffs(f);
    let a0 = ints.first()?.clone();
    let an = ints.last()?.clone();
    if a0.is_zero() {
        return Some(BigRational::zero());
    }
    let ps = divisors(&a0, 4000)?;
    let qs = divisors(&an, 4000)?;
    for p in &ps {
        for q in &qs {
            for sign in [1i64, -1] {
                let cand = BigRational::new(p * BigInt::from(sign), q.clone());
                if f.eval(&BaseScalar::Rat(cand.clone())).is_zero() {
                    return Some(cand);
                }
            }
        }
    }
    None
}

/// Kronecker's interpolation method for the leftover non-linear part.  Only
/// small degrees are supported; larger inputs report an unsupported-case
/// error rather than running forever.
fn kronecker(f: &UniPoly, out: &mut Vec<UniPoly>) -> Result<(), DbcError> {
    let deg = f.degree().unwrap();
    if deg <= 1 {
        if deg == 1 {
            out.push(f.monic());
        }
        return Ok(());
    }
    if deg > 8 {
        return Err(DbcError::FactorizationUnsupported(format!(
            "degree {deg} over Q"
        )));
    }
    let ints = primitive_int_coeffs(f);
    let fi = UniPoly::new(
        f.field,
        ints.iter().map(|c| BaseScalar::Rat(BigRational::from(c.clone()))).collect(),
    );
    for d in 1..=deg / 2 {
        // sample points 0, 1, -1, 2, -2, ...
        let pts: Vec<i64> = (0..=d as i64)
            .map(|i| if i % 2 == 0 { i / 2 } else { -(i / 2) - 1 })
            .collect();
        let mut value_divisors: Vec<Vec<BigInt>> = vec![];
        let mut ok = true;
        for &pt in &pts {
            let v = fi.eval(&BaseScalar::Rat(BigRational::from(BigInt::from(pt))));
            let vi = rat(&v).to_integer();
            match divisors(&vi, 300) {
                Some(ds) => {
                    let mut signed: Vec<BigInt> = ds.iter().map(|x| -x).collect();
                    signed.extend(ds);
                    value_divisors.push(signed);
                }
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            return Err(DbcError::FactorizationUnsupported(
                "divisor enumeration overflow in Kronecker".into(),
            ));
        }
        // enumerate divisor tuples, interpolate a candidate of degree <= d
        let mut idx = vec![0usize; pts.len()];
        'outer: loop {
            let values: Vec<BigRational> = idx
                .iter()
                .zip(&value_divisors)
                .map(|(&i, ds)| BigRational::from(ds[i].clone()))
                .collect();
            if let Some(cand) = interpolate(f.field, &pts, &values) {
                if cand.degree() == Some(d) {
                    let candm = cand.monic();
                    let (q, r) = f.div_rem(&candm).unwrap();
                    if r.is_zero() {
                        // found a factor; recurse on both parts
                        kronecker_leaf(&candm, out)?;
                        kronecker(&q, out)?;
                        return Ok(());
                    }
                }
            }
            // advance the tuple
            let mut k = 0;
            loop {
                if k == idx.len() {
                    break 'outer;
                }
                idx[k] += 1;
                if idx[k] < value_divisors[k].len() {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
        }
    }
    // no factor of degree <= deg/2: irreducible
    out.push(f.monic());
    Ok(())
}

fn kronecker_leaf(f: &UniPoly, out: &mut Vec<UniPoly>) -> Result<(), DbcError> {
    // the candidate may itself be reducible
    let deg = f.degree().unwrap();
    if deg == 1 {
        out.push(f.clone());
        return Ok(());
    }
    kronecker(f, out)
}

fn interpolate(field: Field, pts: &[i64], values: &[BigRational]) -> Option<UniPoly> {
    // Lagrange interpolation over Q
    let mut acc = UniPoly::zero(field);
    for (i, &xi) in pts.iter().enumerate() {
        let mut basis = UniPoly::one(field);
        let mut denom = BigRational::one();
        for (j, &xj) in pts.iter().enumerate() {
            if i == j {
                continue;
            }
            basis = basis.mul(&UniPoly::new(
                field,
                vec![
                    BaseScalar::Rat(BigRational::from(BigInt::from(-xj))),
                    BaseScalar::one(field),
                ],
            ));
            denom *= BigRational::from(BigInt::from(xi - xj));
        }
        let coeff = &values[i] / denom;
        acc = acc.add(&basis.scale(&BaseScalar::Rat(coeff)));
    }
    Some(acc)
}

/// Monic reversal t^deg * phi(1/t), normalized to be monic again.  Used by
/// the odd-shift matching rule for bands.
pub fn monic_reversal(phi: &UniPoly) -> Result<UniPoly, DbcError> {
    if phi.is_zero() || !phi.coeff(0).is_zero() {
        let mut coeffs: Vec<BaseScalar> = phi.coeffs.clone();
        coeffs.reverse();
        let p = UniPoly::new(phi.field, coeffs);
        Ok(p.monic())
    } else {
        Err(DbcError::BadPolynomial(
            "cannot reverse a polynomial divisible by t".into(),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(field: Field, coeffs: &[i64]) -> UniPoly {
        UniPoly::new(
            field,
            coeffs.iter().map(|&c| BaseScalar::from_i64(field, c)).collect(),
        )
    }

    #[test]
    fn factor_fp_mixed() {
        let f = Field::Fp(101);
        // (t - 5)^2 * (t^2 + 1); t^2 + 1 is reducible mod 101 (101 = 1 mod 4)
        let a = poly(f, &[-5, 1]);
        let b = poly(f, &[1, 0, 1]);
        let prod = a.mul(&a).mul(&b);
        let fs = factor(&prod).unwrap();
        let total: usize = fs
            .iter()
            .map(|(g, m)| g.degree().unwrap() * m)
            .sum();
        assert_eq!(total, 4);
        assert!(fs.iter().any(|(g, m)| *m == 2 && *g == a));
        for (g, _) in &fs {
            assert!(is_irreducible(g).unwrap());
        }
    }

    #[test]
    fn factor_fp_irreducible_quadratic() {
        let f = Field::Fp(103); // 103 = 3 mod 4, so t^2 + 1 is irreducible
        let b = poly(f, &[1, 0, 1]);
        assert!(is_irreducible(&b).unwrap());
    }

    #[test]
    fn factor_q() {
        let f = Field::Q;
        // (t - 2)(t + 3)(t^2 + 1)
        let prod = poly(f, &[-2, 1]).mul(&poly(f, &[3, 1])).mul(&poly(f, &[1, 0, 1]));
        let fs = factor(&prod).unwrap();
        assert_eq!(fs.len(), 3);
        assert!(fs.iter().all(|(_, m)| *m == 1));
        assert!(fs.iter().any(|(g, _)| g.degree() == Some(2)));
    }

    #[test]
    fn factor_q_power() {
        let f = Field::Q;
        let a = poly(f, &[-1, 1]);
        let fs = factor(&a.mul(&a).mul(&a)).unwrap();
        assert_eq!(fs, vec![(a, 3)]);
    }

    #[test]
    fn reversal() {
        let f = Field::Q;
        // t - 2 reverses to t - 1/2
        let r = monic_reversal(&poly(f, &[-2, 1])).unwrap();
        let expect = UniPoly::new(
            f,
            vec![
                BaseScalar::from_ratio(f, -1, 2).unwrap(),
                BaseScalar::one(f),
            ],
        );
        assert_eq!(r, expect);
        assert!(monic_reversal(&poly(f, &[0, 1])).is_err());
    }
}
