//! Lambert-type unilateral series, each through its defining sum and through
//! a theta-convergent transform.
//!
//! | series | defining sum | fast form |
//! |---|---|---|
//! | `sum_{n>=0} t^n / (1 - x q^n)` | [`series_qxt_lhs`] | [`series_qxt_rhs`], [`series_qxt_alt`] |
//! | `L(q) = sum_{n>=1} q^n / (1 - q^n)` | [`lambert_naive`] | [`lambert_theta`] |
//! | `L(x,q) = sum_{n>=1} x q^n / (1 - x q^n)` | [`glambert_lhs`] | [`glambert_theta`] |
//!
//! Negative `q` is accepted everywhere; decay declarations use `|q|`.

use crate::error::{Error, Result};
use crate::numerics::{BigReal, RealContext};
use crate::qcore::{
    pochhammer_envelope, product_envelope, require_unit_disk, sum_series, Decay, FnTerms, SeriesValue,
};

/// Number of leading indices inspected by the pole checks.
pub const POLE_SCAN: i64 = 64;

/// Parameters of `sum_{n>=0} t^n / (1 - x q^n)`.
#[derive(Clone, Debug, PartialEq)]
pub struct QxtParams {
    pub x: BigReal,
    pub t: BigReal,
    pub q: BigReal,
}

impl QxtParams {
    /// Validates `|q|, |x|, |t| < 1` and the pole distance of `1 - x q^n`,
    /// `1 - t q^n` over the first [`POLE_SCAN`] indices.
    pub fn new(x: BigReal, t: BigReal, q: BigReal, ctx: &RealContext) -> Result<Self> {
        require_unit_disk("q", &q, ctx)?;
        require_unit_disk("x", &x, ctx)?;
        require_unit_disk("t", &t, ctx)?;
        check_poles("x", &x, &q, 0, ctx)?;
        check_poles("t", &t, &q, 0, ctx)?;
        Ok(Self { x, t, q })
    }

    pub fn swapped(&self) -> Self {
        Self {
            x: self.t.clone(),
            t: self.x.clone(),
            q: self.q.clone(),
        }
    }
}

/// Rejects `|1 - v q^n| <= tolerance` for `n` in `first..first + POLE_SCAN`.
pub(crate) fn check_poles(
    name: &str,
    v: &BigReal,
    q: &BigReal,
    first: i64,
    ctx: &RealContext,
) -> Result<()> {
    let tolerance = ctx.pole_tolerance();
    let one = ctx.one();
    let mut vq = v * &q.powi(first);
    for n in first..first + POLE_SCAN {
        if (&one - &vq).abs() <= tolerance {
            return Err(Error::Pole(format!("1 - {name} q^{n} vanishes")));
        }
        vq = &vq * q;
    }
    Ok(())
}

/// `sum_{n>=0} t^n / (1 - x q^n)`, summed directly.
pub fn series_qxt_lhs(p: &QxtParams, ctx: &RealContext) -> Result<SeriesValue> {
    let one = ctx.one();
    let mut t_pow = ctx.one();
    let mut q_pow = ctx.one();
    let decay = Decay::geometric(p.t.clone()).with_envelope(product_envelope(&[&p.x], ctx), p.q.clone());
    let mut gen = FnTerms::new(decay, |_n| {
        let term = &t_pow / &(&one - &(&p.x * &q_pow));
        t_pow = &t_pow * &p.t;
        q_pow = &q_pow * &p.q;
        Ok(term)
    });
    Ok(sum_series(&mut gen, 0, ctx)?.tagged("naive"))
}

/// `sum_{n>=0} (1 - x t q^(2n)) / ((1 - x q^n)(1 - t q^n)) * (x t)^n q^(n^2)`.
pub fn series_qxt_rhs(p: &QxtParams, ctx: &RealContext) -> Result<SeriesValue> {
    let one = ctx.one();
    let xt = &p.x * &p.t;
    let q_sq = &p.q * &p.q;
    let mut q_pow = ctx.one();
    // weight_n = (x t)^n q^(n^2); step_n = q^(2n+1)
    let mut weight = ctx.one();
    let mut step = p.q.clone();
    let coeff = product_envelope(&[&xt, &p.x, &p.t], ctx);
    let decay = Decay::theta_with_factor(p.q.clone(), xt.clone()).with_envelope(coeff, p.q.clone());
    let mut gen = FnTerms::new(decay, |_n| {
        let num = &one - &(&xt * &(&q_pow * &q_pow));
        let den = &(&one - &(&p.x * &q_pow)) * &(&one - &(&p.t * &q_pow));
        let term = &(&num / &den) * &weight;
        weight = &(&weight * &xt) * &step;
        step = &step * &q_sq;
        q_pow = &q_pow * &p.q;
        Ok(term)
    });
    Ok(sum_series(&mut gen, 0, ctx)?.tagged("theta"))
}

/// `sum_{n>=0} (q;q)_n / ((x;q)_(n+1) (t;q)_(n+1)) * (-x t)^n q^((n^2-n)/2)`.
///
/// This is the specialization of Fine's second transformation; the summand
/// carries `(-x t)^n`.
pub fn series_qxt_alt(p: &QxtParams, ctx: &RealContext) -> Result<SeriesValue> {
    let one = ctx.one();
    let neg_xt = -(&p.x * &p.t);
    // ratio_n = (q;q)_n / ((x;q)_(n+1) (t;q)_(n+1))
    let mut ratio = &one / &(&(&one - &p.x) * &(&one - &p.t));
    // weight_n = (-x t)^n q^((n^2-n)/2)
    let mut weight = ctx.one();
    let mut q_pow = ctx.one();
    let decay = if p.q.is_zero() {
        Decay::geometric(ctx.zero())
    } else {
        let root = p.q.abs().sqrt();
        let factor = &neg_xt.abs() / &root;
        Decay::theta_with_factor(root, factor).with_envelope(pochhammer_envelope(&[&ctx.one(), &p.x, &p.t], &p.q, ctx), p.q.clone())
    };
    let mut gen = FnTerms::new(decay, |_n| {
        let term = &ratio * &weight;
        weight = &(&weight * &neg_xt) * &q_pow;
        q_pow = &q_pow * &p.q;
        let num = &one - &q_pow;
        let den = &(&one - &(&p.x * &q_pow)) * &(&one - &(&p.t * &q_pow));
        ratio = &(&ratio * &num) / &den;
        Ok(term)
    });
    Ok(sum_series(&mut gen, 0, ctx)?.tagged("alt"))
}

fn require_lambert_q(q: &BigReal, ctx: &RealContext) -> Result<()> {
    if q.is_zero() || q.abs() >= ctx.one() {
        return Err(Error::Domain("q outside (\u{2212}1,1) \\ {0}".into()));
    }
    Ok(())
}

/// Lambert series `sum_{n>=1} q^n / (1 - q^n)`, summed directly.
pub fn lambert_naive(q: &BigReal, ctx: &RealContext) -> Result<SeriesValue> {
    require_lambert_q(q, ctx)?;
    let one = ctx.one();
    let mut q_pow = ctx.one();
    let decay = Decay::geometric(q.clone()).with_envelope(product_envelope(&[&ctx.one()], ctx), q.clone());
    let mut gen = FnTerms::new(decay, |_n| {
        q_pow = &q_pow * q;
        Ok(&q_pow / &(&one - &q_pow))
    });
    Ok(sum_series(&mut gen, 1, ctx)?.tagged("naive"))
}

/// Clausen's form `sum_{n>=1} (1 + q^n) / (1 - q^n) * q^(n^2)`.
pub fn lambert_theta(q: &BigReal, ctx: &RealContext) -> Result<SeriesValue> {
    require_lambert_q(q, ctx)?;
    let one = ctx.one();
    let q_sq = q * q;
    let mut q_pow = ctx.one();
    let mut weight = ctx.one();
    let mut step = q.clone();
    let decay = Decay::theta(q.clone(), ctx).with_envelope(product_envelope(&[&one, &one], ctx), q.clone());
    let mut gen = FnTerms::new(decay, |_n| {
        q_pow = &q_pow * q;
        weight = &weight * &step;
        step = &step * &q_sq;
        Ok(&(&(&one + &q_pow) / &(&one - &q_pow)) * &weight)
    });
    Ok(sum_series(&mut gen, 1, ctx)?.tagged("theta"))
}

fn require_glambert(x: &BigReal, q: &BigReal, ctx: &RealContext) -> Result<()> {
    require_unit_disk("q", q, ctx)?;
    if (x * q).abs() >= ctx.one() {
        return Err(Error::Domain("|x q| must be below 1".into()));
    }
    check_poles("x", x, q, 1, ctx)
}

/// Generalized Lambert series `L(x,q) = sum_{n>=1} x q^n / (1 - x q^n)`.
pub fn glambert_lhs(x: &BigReal, q: &BigReal, ctx: &RealContext) -> Result<SeriesValue> {
    require_glambert(x, q, ctx)?;
    let one = ctx.one();
    let mut xq = x.clone();
    let decay = Decay::geometric(q.clone()).with_envelope(product_envelope(&[x], ctx), q.clone());
    let mut gen = FnTerms::new(decay, |_n| {
        xq = &xq * q;
        Ok(&xq / &(&one - &xq))
    });
    Ok(sum_series(&mut gen, 1, ctx)?.tagged("naive"))
}

/// `L(x,q) = sum_{n>=1} (1 - x q^(2n)) / ((1 - x q^n)(1 - q^n)) * x^n q^(n^2)`.
pub fn glambert_theta(x: &BigReal, q: &BigReal, ctx: &RealContext) -> Result<SeriesValue> {
    require_glambert(x, q, ctx)?;
    if (x.abs() * q.abs()) >= ctx.one() {
        return Err(Error::Domain("|x| must be below 1/|q|".into()));
    }
    let one = ctx.one();
    let q_sq = q * q;
    let mut q_pow = ctx.one();
    let mut weight = ctx.one();
    let mut step = q.clone();
    let coeff = product_envelope(&[x, x, &one], ctx);
    let decay = Decay::theta_with_factor(q.clone(), x.clone()).with_envelope(coeff, q.clone());
    let mut gen = FnTerms::new(decay, |_n| {
        q_pow = &q_pow * q;
        weight = &(&weight * x) * &step;
        step = &step * &q_sq;
        let num = &one - &(x * &(&q_pow * &q_pow));
        let den = &(&one - &(x * &q_pow)) * &(&one - &q_pow);
        Ok(&(&num / &den) * &weight)
    });
    Ok(sum_series(&mut gen, 1, ctx)?.tagged("theta"))
}

/// Fine's function `F(a,b;t) = sum_{n>=0} (aq;q)_n / (bq;q)_n * t^n`.
pub fn fine_f(
    a: &BigReal,
    b: &BigReal,
    t: &BigReal,
    q: &BigReal,
    ctx: &RealContext,
) -> Result<SeriesValue> {
    require_unit_disk("q", q, ctx)?;
    require_unit_disk("t", t, ctx)?;
    check_poles("b", b, q, 1, ctx)?;
    let one = ctx.one();
    let mut ratio = ctx.one();
    let mut t_pow = ctx.one();
    let mut q_pow = ctx.one();
    let coeff = pochhammer_envelope(&[a, b], q, ctx);
    let decay = Decay::geometric(t.clone()).with_envelope(coeff, q.clone());
    let mut gen = FnTerms::new(decay, |_n| {
        let term = &ratio * &t_pow;
        q_pow = &q_pow * q;
        ratio = &(&ratio * &(&one - &(a * &q_pow))) / &(&one - &(b * &q_pow));
        t_pow = &t_pow * t;
        Ok(term)
    });
    Ok(sum_series(&mut gen, 0, ctx)?.tagged("naive"))
}
