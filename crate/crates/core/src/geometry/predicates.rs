//! Sign-exact geometric predicates.
//!
//! Each predicate first evaluates in f64 and accepts the result when the
//! magnitude clears a conservative relative-error bound; otherwise it
//! re-evaluates in exact rational arithmetic. The fallback makes
//! degenerate configurations (collinear triples, cocircular quadruples)
//! deterministic instead of rounding-dependent.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

type Pt = (f64, f64);

/// Conservative filter: trust an f64 determinant only when it exceeds this
/// fraction of the term-magnitude sum. True rounding error is below 1e-14
/// of the magnitude for these expression sizes.
const FILTER: f64 = 1e-12;

fn big(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite coordinate")
}

fn sign_big(v: &BigRational) -> i8 {
    if v.is_zero() {
        0
    } else if v > &BigRational::from_integer(BigInt::from(0)) {
        1
    } else {
        -1
    }
}

/// Sign of the cross product (b - a) x (c - a):
/// +1 when c lies left of the directed line a -> b (counter-clockwise),
/// 0 when collinear, -1 when right.
pub fn orient2d(a: Pt, b: Pt, c: Pt) -> i8 {
    let t1 = (b.0 - a.0) * (c.1 - a.1);
    let t2 = (b.1 - a.1) * (c.0 - a.0);
    let det = t1 - t2;
    let mag = t1.abs() + t2.abs();
    if det.abs() > mag * FILTER {
        return if det > 0.0 { 1 } else { -1 };
    }
    let (ax, ay) = (big(a.0), big(a.1));
    let (bx, by) = (big(b.0), big(b.1));
    let (cx, cy) = (big(c.0), big(c.1));
    let det = (&bx - &ax) * (&cy - &ay) - (&by - &ay) * (&cx - &ax);
    sign_big(&det)
}

/// Sign of the in-circle determinant for the counter-clockwise triangle
/// (a, b, c): +1 when d lies strictly inside the circumcircle, 0 when
/// cocircular, -1 when outside.
pub fn incircle(a: Pt, b: Pt, c: Pt, d: Pt) -> i8 {
    let adx = a.0 - d.0;
    let ady = a.1 - d.1;
    let bdx = b.0 - d.0;
    let bdy = b.1 - d.1;
    let cdx = c.0 - d.0;
    let cdy = c.1 - d.1;
    let ad2 = adx * adx + ady * ady;
    let bd2 = bdx * bdx + bdy * bdy;
    let cd2 = cdx * cdx + cdy * cdy;

    let t1 = adx * (bdy * cd2 - bd2 * cdy);
    let t2 = ady * (bdx * cd2 - bd2 * cdx);
    let t3 = ad2 * (bdx * cdy - bdy * cdx);
    let det = t1 - t2 + t3;
    let mag = adx.abs() * (bdy * cd2).abs().max((bd2 * cdy).abs())
        + ady.abs() * (bdx * cd2).abs().max((bd2 * cdx).abs())
        + ad2.abs() * (bdx * cdy).abs().max((bdy * cdx).abs());
    let mag = 2.0 * mag;
    if det.abs() > mag * FILTER {
        return if det > 0.0 { 1 } else { -1 };
    }

    let adx = big(a.0) - big(d.0);
    let ady = big(a.1) - big(d.1);
    let bdx = big(b.0) - big(d.0);
    let bdy = big(b.1) - big(d.1);
    let cdx = big(c.0) - big(d.0);
    let cdy = big(c.1) - big(d.1);
    let ad2 = &adx * &adx + &ady * &ady;
    let bd2 = &bdx * &bdx + &bdy * &bdy;
    let cd2 = &cdx * &cdx + &cdy * &cdy;
    let det = &adx * (&bdy * &cd2 - &bd2 * &cdy) - &ady * (&bdx * &cd2 - &bd2 * &cdx)
        + &ad2 * (&bdx * &cdy - &bdy * &cdx);
    sign_big(&det)
}

/// Sign of the dot product (a - c) . (b - c): +1 for an acute angle at c,
/// 0 for a right angle, -1 for obtuse.
pub fn dot_sign(a: Pt, b: Pt, c: Pt) -> i8 {
    let t1 = (a.0 - c.0) * (b.0 - c.0);
    let t2 = (a.1 - c.1) * (b.1 - c.1);
    let dot = t1 + t2;
    let mag = t1.abs() + t2.abs();
    if dot.abs() > mag * FILTER {
        return if dot > 0.0 { 1 } else { -1 };
    }
    let dot = (big(a.0) - big(c.0)) * (big(b.0) - big(c.0))
        + (big(a.1) - big(c.1)) * (big(b.1) - big(c.1));
    sign_big(&dot)
}
