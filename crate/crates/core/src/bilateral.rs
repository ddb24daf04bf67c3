//! The Jordan–Kronecker function `f(x,t) = sum_{n in Z} t^n / (1 - x q^n)`
//! and three theta-convergent expansions of it.
//!
//! Negative-index summands are evaluated with `q^m` multiplied through
//! numerator and denominator, so no term ever forms `q^-m`.

use crate::error::{Error, Result};
use crate::lambert::POLE_SCAN;
use crate::numerics::{BigReal, RealContext};
use crate::qcore::{pole_sum_envelope, product_envelope, sum_bilateral, Decay, FnTerms, SeriesValue};

/// Parameters of `f(x,t)` with `0 < |q| < |x|, |t| < 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct BilateralParams {
    pub x: BigReal,
    pub t: BigReal,
    pub q: BigReal,
}

impl BilateralParams {
    pub fn new(x: BigReal, t: BigReal, q: BigReal, ctx: &RealContext) -> Result<Self> {
        let one = ctx.one();
        let abs_q = q.abs();
        if abs_q.is_zero() {
            return Err(Error::Domain("q must be nonzero".into()));
        }
        for (name, v) in [("x", &x), ("t", &t)] {
            let abs_v = v.abs();
            if abs_v >= one {
                return Err(Error::Domain(format!("{name} outside (\u{2212}1,1)")));
            }
            if abs_v <= abs_q {
                return Err(Error::Domain(format!("|{name}| must exceed |q|")));
            }
        }
        let tolerance = ctx.pole_tolerance();
        for (name, v) in [("x", &x), ("t", &t)] {
            let mut q_pow = ctx.one();
            for k in 0..=POLE_SCAN {
                if (&one - &(v * &q_pow)).abs() <= tolerance || (&q_pow - v).abs() <= tolerance {
                    return Err(Error::Pole(format!("{name} is within tolerance of q^\u{b1}{k}")));
                }
                q_pow = &q_pow * &q;
            }
        }
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

/// Running powers for the positive side (`q^n`, `(x t)^n q^(n^2)`) or, with
/// inverted `xt`, the negative side (`q^m`, `q^(m^2) / (x t)^m`).
struct ThetaWeights {
    q: BigReal,
    q_sq: BigReal,
    xt: BigReal,
    q_pow: BigReal,
    weight: BigReal,
    step: BigReal,
}

impl ThetaWeights {
    fn new(q: &BigReal, xt: BigReal, ctx: &RealContext) -> Self {
        Self {
            q: q.clone(),
            q_sq: q * q,
            xt,
            q_pow: ctx.one(),
            weight: ctx.one(),
            step: q.clone(),
        }
    }

    /// Advances to the next index and returns `(q^n, weight_n)`.
    fn advance(&mut self) -> (&BigReal, &BigReal) {
        self.q_pow = &self.q_pow * &self.q;
        self.weight = &(&self.weight * &self.xt) * &self.step;
        self.step = &self.step * &self.q_sq;
        (&self.q_pow, &self.weight)
    }
}

fn pole_pair_envelopes(p: &BilateralParams, ctx: &RealContext) -> (BigReal, BigReal) {
    // negative side: brackets in q^m / x and q^m / t
    (
        pole_sum_envelope(&[&p.x, &p.t], &p.q, ctx),
        pole_sum_envelope(&[&p.x.recip(), &p.t.recip()], &p.q, ctx),
    )
}

/// Sums a theta form given its summand as a function of `(q^n, weight)` on
/// the positive side and `(q^m, weight)` on the negative side.
fn theta_form<P, N>(
    p: &BilateralParams,
    center: BigReal,
    envelopes: (BigReal, BigReal),
    positive: P,
    negative: N,
    tag: &str,
    ctx: &RealContext,
) -> Result<SeriesValue>
where
    P: Fn(&BigReal, &BigReal) -> BigReal,
    N: Fn(&BigReal, &BigReal) -> BigReal,
{
    let xt = &p.x * &p.t;
    let inv_xt = xt.recip();
    let mut up_w = ThetaWeights::new(&p.q, xt.clone(), ctx);
    let mut down_w = ThetaWeights::new(&p.q, inv_xt.clone(), ctx);
    let (up_env, down_env) = envelopes;
    let up_decay = Decay::theta_with_factor(p.q.clone(), xt).with_envelope(up_env, p.q.clone());
    let down_decay = Decay::theta_with_factor(p.q.clone(), inv_xt).with_envelope(down_env, p.q.clone());
    let mut upper = FnTerms::new(up_decay, |_n| {
        let (q_pow, weight) = up_w.advance();
        Ok(positive(q_pow, weight))
    });
    let mut lower = FnTerms::new(down_decay, |_m| {
        let (q_pow, weight) = down_w.advance();
        Ok(negative(q_pow, weight))
    });
    Ok(sum_bilateral(center, &mut upper, &mut lower, ctx)?.tagged(tag))
}

/// `sum_{n in Z} t^n / (1 - x q^n)`.
pub fn jordan_direct(p: &BilateralParams, ctx: &RealContext) -> Result<SeriesValue> {
    let one = ctx.one();
    let center = &one / &(&one - &p.x);
    let mut t_pow = ctx.one();
    let mut q_pow = ctx.one();
    let up_decay = Decay::geometric(p.t.clone()).with_envelope(product_envelope(&[&p.x], ctx), p.q.clone());
    let mut upper = FnTerms::new(up_decay, |_n| {
        t_pow = &t_pow * &p.t;
        q_pow = &q_pow * &p.q;
        Ok(&t_pow / &(&one - &(&p.x * &q_pow)))
    });
    // t^-m / (1 - x q^-m) = (q/t)^m / (q^m - x)
    let q_over_t = &p.q / &p.t;
    let mut ratio_pow = ctx.one();
    let mut q_pow_neg = ctx.one();
    let down_decay = Decay::geometric(q_over_t.clone()).with_envelope(product_envelope(&[&p.x.recip()], ctx), p.q.clone());
    let mut lower = FnTerms::new(down_decay, |_m| {
        ratio_pow = &ratio_pow * &q_over_t;
        q_pow_neg = &q_pow_neg * &p.q;
        Ok(&ratio_pow / &(&q_pow_neg - &p.x))
    });
    Ok(sum_bilateral(center, &mut upper, &mut lower, ctx)?.tagged("direct"))
}

/// `sum_{n in Z} (1 - x t q^(2n)) / ((1 - x q^n)(1 - t q^n)) * (x t)^n q^(n^2)`.
pub fn jordan_theta(p: &BilateralParams, ctx: &RealContext) -> Result<SeriesValue> {
    let one = ctx.one();
    let (x, t) = (&p.x, &p.t);
    let xt = x * t;
    let center = &(&one - &xt) / &(&(&one - x) * &(&one - t));
    let envelopes = (
        product_envelope(&[&xt, x, t], ctx),
        product_envelope(&[&xt.recip(), &x.recip(), &t.recip()], ctx),
    );
    theta_form(
        p,
        center,
        envelopes,
        |qn, w| {
            let num = &one - &(&xt * &(qn * qn));
            let den = &(&one - &(x * qn)) * &(&one - &(t * qn));
            &(&num / &den) * w
        },
        |qm, w| {
            let num = &(qm * qm) - &xt;
            let den = &(qm - x) * &(qm - t);
            &(&num / &den) * w
        },
        "theta",
        ctx,
    )
}

/// `sum_{n in Z} q^(n^2) x^n t^n (1 + x q^n/(1 - x q^n) + t q^n/(1 - t q^n))`.
pub fn jordan_form1(p: &BilateralParams, ctx: &RealContext) -> Result<SeriesValue> {
    let one = ctx.one();
    let (x, t) = (&p.x, &p.t);
    let center = &(&one + &(x / &(&one - x))) + &(t / &(&one - t));
    theta_form(
        p,
        center,
        pole_pair_envelopes(p, ctx),
        |qn, w| {
            let xq = x * qn;
            let tq = t * qn;
            let bracket = &(&one + &(&xq / &(&one - &xq))) + &(&tq / &(&one - &tq));
            &bracket * w
        },
        |qm, w| {
            let bracket = &(&one + &(x / &(qm - x))) + &(t / &(qm - t));
            &bracket * w
        },
        "form1",
        ctx,
    )
}

/// `sum_{n in Z} q^(n^2) x^n t^n (-1 + 1/(1 - x q^n) + 1/(1 - t q^n))`.
pub fn jordan_form2(p: &BilateralParams, ctx: &RealContext) -> Result<SeriesValue> {
    let one = ctx.one();
    let (x, t) = (&p.x, &p.t);
    let center = &(&(&one / &(&one - x)) + &(&one / &(&one - t))) - &one;
    theta_form(
        p,
        center,
        pole_pair_envelopes(p, ctx),
        |qn, w| {
            let bracket = &(&(&one / &(&one - &(x * qn))) + &(&one / &(&one - &(t * qn)))) - &one;
            &bracket * w
        },
        |qm, w| {
            let bracket = &(&(qm / &(qm - x)) + &(qm / &(qm - t))) - &one;
            &bracket * w
        },
        "form2",
        ctx,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::make_context;

    fn params(c: &RealContext, x: &str, t: &str, q: &str) -> BilateralParams {
        BilateralParams::new(
            c.parse(x).unwrap(),
            c.parse(t).unwrap(),
            c.parse(q).unwrap(),
            c,
        )
        .unwrap()
    }

    fn close(a: &BigReal, b: &BigReal, tol: &BigReal) -> bool {
        (a - b).abs() <= *tol
    }

    #[test]
    fn reference_value() {
        // mpmath two-sided nsum at 45 digits
        let c = make_context(30).unwrap();
        let p = params(&c, "0.5", "0.6", "0.2");
        let expected = c.parse("2.10994149296804891703842572036032195192081134").unwrap();
        let tol = c.epsilon() * &c.int(2);
        for f in [jordan_direct, jordan_theta, jordan_form1, jordan_form2] {
            let v = f(&p, &c).unwrap();
            assert!(close(&v.value, &expected, &tol), "{}: {}", v.method_tag, v.value);
        }
    }

    #[test]
    fn symmetric_in_x_and_t() {
        let c = make_context(30).unwrap();
        let p = params(&c, "0.5", "0.6", "0.2");
        let tol = c.epsilon() * &c.int(2);
        for f in [jordan_direct, jordan_theta, jordan_form1, jordan_form2] {
            let a = f(&p, &c).unwrap().value;
            let b = f(&p.swapped(), &c).unwrap().value;
            assert!(close(&a, &b, &tol));
        }
    }

    #[test]
    fn center_term_of_theta_form() {
        let c = make_context(30).unwrap();
        let p = params(&c, "0.5", "0.5", "0.25");
        let one = c.one();
        let center = (&one - &(&p.x * &p.t)) / ((&one - &p.x) * (&one - &p.t));
        assert_eq!(center, c.int(3));
        let tol = c.epsilon() * &c.int(2);
        assert!(close(
            &jordan_direct(&p, &c).unwrap().value,
            &jordan_theta(&p, &c).unwrap().value,
            &tol
        ));
    }

    #[test]
    fn negative_parameters() {
        let c = make_context(30).unwrap();
        let p = params(&c, "-0.4", "0.7", "-0.15");
        let tol = c.epsilon() * &c.int(2);
        let direct = jordan_direct(&p, &c).unwrap().value;
        for f in [jordan_theta, jordan_form1, jordan_form2] {
            assert!(close(&f(&p, &c).unwrap().value, &direct, &tol));
        }
    }

    #[test]
    fn form_brackets_agree_termwise() {
        let c = make_context(30).unwrap();
        let one = c.one();
        let x = c.parse("0.4").unwrap();
        let t = c.parse("0.7").unwrap();
        let q = c.parse("0.15").unwrap();
        let bound = c.pow10(-(c.working_digits() as i64) + 4);
        let mut qn = c.one();
        for _ in 0..20 {
            qn = &qn * &q;
            let xq = &x * &qn;
            let tq = &t * &qn;
            let b1 = &one + &(&xq / &(&one - &xq)) + &tq / &(&one - &tq);
            let b2 = &one / &(&one - &xq) + &one / &(&one - &tq) - &one;
            assert!((b1 - b2).abs() <= bound);
        }
    }

    #[test]
    fn domain_violations() {
        let c = make_context(30).unwrap();
        let r = |s: &str| c.parse(s).unwrap();
        assert!(matches!(
            BilateralParams::new(r("0.5"), r("0.1"), r("0.2"), &c),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            BilateralParams::new(r("0.5"), r("0.5"), r("0"), &c),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            BilateralParams::new(r("1"), r("0.5"), r("0.2"), &c),
            Err(Error::Domain(_))
        ));
    }
}
