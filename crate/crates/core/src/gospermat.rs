//! Gosper's 2x2 matrix products whose upper-right entries give both sides of
//! Clausen's identity `L(q) = sum_{n>=1} (1 + q^n)/(1 - q^n) q^(n^2)`.
//!
//! Every matrix has the shape `[[p, u], [0, 1]]`, so it is stored as `(p, u)`.

use std::ops::Mul;

use crate::error::{Error, Result};
use crate::identities::{IdentityReport, Point};
use crate::lambert::lambert_naive;
use crate::numerics::{BigReal, RealContext};
use crate::qcore::require_unit_disk;

#[derive(Clone, Debug, PartialEq)]
pub struct Mat2 {
    pub p: BigReal,
    pub u: BigReal,
}

impl Mat2 {
    pub fn identity(ctx: &RealContext) -> Self {
        Mat2 {
            p: ctx.one(),
            u: ctx.zero(),
        }
    }

    /// Largest entrywise absolute difference.
    pub fn distance(&self, other: &Mat2) -> BigReal {
        (&self.p - &other.p).abs().max((&self.u - &other.u).abs())
    }
}

impl Mul for &Mat2 {
    type Output = Mat2;

    fn mul(self, rhs: &Mat2) -> Mat2 {
        Mat2 {
            p: &self.p * &rhs.p,
            u: &(&self.p * &rhs.u) + &self.u,
        }
    }
}

/// A matrix index that may be the limit `infinity`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Index {
    Finite(u64),
    Infinite,
}

fn qpow(q: &BigReal, e: u64) -> BigReal {
    q.powi(e as i64)
}

fn check_q(q: &BigReal, ctx: &RealContext) -> Result<()> {
    require_unit_disk("q", q, ctx)
}

/// `K(k,n) = (q^(n+2k+1), q (1 - q^(2k+n)) / ((1 - q^k)(1 - q^(k+n))))`, and
/// `K(k,inf) = (0, q/(1 - q^k))`.
pub fn mat_k(k: u64, n: Index, q: &BigReal, ctx: &RealContext) -> Result<Mat2> {
    check_q(q, ctx)?;
    if k == 0 {
        return Err(Error::Domain("K(k,n) needs k >= 1".into()));
    }
    let one = ctx.one();
    let qk = qpow(q, k);
    Ok(match n {
        Index::Finite(n) => Mat2 {
            p: qpow(q, n + 2 * k + 1),
            u: &(q * &(&one - &qpow(q, 2 * k + n))) / &(&(&one - &qk) * &(&one - &qpow(q, k + n))),
        },
        Index::Infinite => Mat2 {
            p: ctx.zero(),
            u: q / &(&one - &qk),
        },
    })
}

/// `N(k,n) = (q^k, q/(1 - q^(k+n)))`, and `N(inf,n) = (0, q)`.
pub fn mat_n(k: Index, n: u64, q: &BigReal, ctx: &RealContext) -> Result<Mat2> {
    check_q(q, ctx)?;
    let one = ctx.one();
    Ok(match k {
        Index::Finite(0) => return Err(Error::Domain("N(k,n) needs k >= 1".into())),
        Index::Finite(k) => Mat2 {
            p: qpow(q, k),
            u: q / &(&one - &qpow(q, k + n)),
        },
        Index::Infinite => Mat2 {
            p: ctx.zero(),
            u: q.clone(),
        },
    })
}

/// Entrywise residual of `N(k,n) K(k,n+1) = K(k,n) N(k+1,n)`.
pub fn exchange_check(k: u64, n: u64, q: &BigReal, ctx: &RealContext) -> Result<BigReal> {
    let lhs = &mat_n(Index::Finite(k), n, q, ctx)? * &mat_k(k, Index::Finite(n + 1), q, ctx)?;
    let rhs = &mat_k(k, Index::Finite(n), q, ctx)? * &mat_n(Index::Finite(k + 1), n, q, ctx)?;
    Ok(lhs.distance(&rhs))
}

/// Contract for [`exchange_check`]: `10^(6 - working_digits)`.
pub fn exchange_tolerance(ctx: &RealContext) -> BigReal {
    ctx.pow10(6 - ctx.working_digits() as i64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProductSide {
    /// `prod_{n<M} N(1,n) * prod_{k=1..M} K(k,inf)`, tending to `L(q)`.
    Left,
    /// `prod_{k=1..M} K(k,0) * prod_{n<M} N(inf,n)`, tending to Clausen's sum.
    Right,
}

impl ProductSide {
    pub fn label(self) -> &'static str {
        match self {
            ProductSide::Left => "left",
            ProductSide::Right => "right",
        }
    }

    fn leading(self, i: u64, q: &BigReal, ctx: &RealContext) -> Result<Mat2> {
        match self {
            ProductSide::Left => mat_n(Index::Finite(1), i, q, ctx),
            ProductSide::Right => mat_k(i + 1, Index::Finite(0), q, ctx),
        }
    }

    fn trailing(self, i: u64, q: &BigReal, ctx: &RealContext) -> Result<Mat2> {
        match self {
            ProductSide::Left => mat_k(i + 1, Index::Infinite, q, ctx),
            ProductSide::Right => mat_n(Index::Infinite, i, q, ctx),
        }
    }
}

fn product(side: ProductSide, factors: u64, q: &BigReal, ctx: &RealContext) -> Result<(Mat2, Mat2)> {
    let mut lead = Mat2::identity(ctx);
    let mut trail = Mat2::identity(ctx);
    for i in 0..factors {
        lead = &lead * &side.leading(i, q, ctx)?;
    }
    for i in 0..factors {
        trail = &trail * &side.trailing(i, q, ctx)?;
    }
    Ok((lead, trail))
}

/// Upper-right entry of the `M`-factor product on `side`, multiplied left to right.
pub fn product_upper_right(side: ProductSide, factors: u64, q: &BigReal, ctx: &RealContext) -> Result<BigReal> {
    if factors == 0 {
        return Err(Error::InvalidArgument("factor count must be at least 1".into()));
    }
    if q.is_zero() {
        return Err(Error::Domain("q must be nonzero".into()));
    }
    let (lead, trail) = product(side, factors, q, ctx)?;
    Ok((&lead * &trail).u)
}

/// Smallest factor count whose leading product has `|p| < epsilon`; every
/// later factor contributes through `p`, so the remainder is below
/// `epsilon` times the bounded trailing entries.
pub fn converged_factors(side: ProductSide, q: &BigReal, ctx: &RealContext) -> Result<u64> {
    check_q(q, ctx)?;
    if q.is_zero() {
        return Err(Error::Domain("q must be nonzero".into()));
    }
    let mut lead = Mat2::identity(ctx);
    let mut m = 0;
    while lead.p.abs() >= *ctx.epsilon() {
        lead = &lead * &side.leading(m, q, ctx)?;
        m += 1;
    }
    Ok(m.max(1))
}

/// Exchange sweep over `(k, n)` in `[1,10] x [0,10]` and both products
/// against the naive Lambert sum, for each `q`. `factors = None` picks the
/// converged count per side.
pub fn verify(qs: &[BigReal], factors: Option<u64>, seed: i64, ctx: &RealContext) -> Result<IdentityReport> {
    let exchange_tol = exchange_tolerance(ctx);
    let product_tol = IdentityReport::threshold(ctx);
    let mut worst = ctx.zero();
    let mut worst_point = Point::new();
    let mut pass = true;
    let mut checks = 0u32;
    let mut record = |d: BigReal, point: Point, tol: &BigReal| {
        checks += 1;
        if d > *tol {
            pass = false;
        }
        if d > worst || worst_point == Point::new() {
            worst = d;
            worst_point = point;
        }
    };
    for q in qs {
        for k in 1..=10 {
            for n in 0..=10 {
                let d = exchange_check(k, n, q, ctx)?;
                let point = Point::new()
                    .with_real("q", q.clone())
                    .with_int("k", k as i64)
                    .with_int("n", n as i64);
                record(d, point, &exchange_tol);
            }
        }
        let target = lambert_naive(q, ctx)?.value;
        for side in [ProductSide::Left, ProductSide::Right] {
            let m = match factors {
                Some(m) => m,
                None => converged_factors(side, q, ctx)?,
            };
            let d = (&product_upper_right(side, m, q, ctx)? - &target).abs();
            let point = Point::new()
                .with_real("q", q.clone())
                .with_label("side", side.label())
                .with_int("factors", m as i64);
            record(d, point, &product_tol);
        }
    }
    Ok(IdentityReport {
        name: "gosper-matrix".into(),
        trials: checks,
        seed,
        target_digits: ctx.target_digits(),
        worst_deviation: worst,
        worst_point,
        pass,
    })
}

/// The `q` values swept by `verify --identity gosper-matrix`.
pub fn default_qs(ctx: &RealContext) -> Vec<BigReal> {
    ["3/10", "-3/10", "7/10"].iter().map(|s| ctx.parse(s).expect("literal")).collect()
}
