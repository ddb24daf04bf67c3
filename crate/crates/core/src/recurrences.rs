//! Horadam sequences `f_n = m1 f_(n-1) + m2 f_(n-2)` with `f_0 = 0`,
//! `f_1 = 1`, and the sum of their reciprocals by several routes.

use std::sync::Mutex;

use dashu_int::ops::UnsignedAbs;
use dashu_int::IBig;
use dashu_ratio::RBig;

use crate::error::{Error, Result};
use crate::lambert::{glambert_theta, lambert_theta};
use crate::numerics::{BigReal, RealContext};
use crate::qcore::{certified, sum_series, theta3, Decay, FnTerms, SeriesValue};

/// Largest `|beta / alpha|` accepted by the fast route.
const MAX_ROOT_RATIO: &str = "0.999999";

#[derive(Debug)]
pub struct HoradamSequence {
    m1: i64,
    m2: i64,
    terms: Mutex<Vec<IBig>>,
}

impl Clone for HoradamSequence {
    fn clone(&self) -> Self {
        Self {
            m1: self.m1,
            m2: self.m2,
            terms: Mutex::new(self.terms.lock().unwrap().clone()),
        }
    }
}

impl HoradamSequence {
    pub fn new(m1: i64, m2: i64) -> Result<Self> {
        if m1 < 1 {
            return Err(Error::Domain(format!("m1 = {m1} must be at least 1")));
        }
        if m2 == 0 {
            return Err(Error::Domain("m2 must be nonzero".into()));
        }
        let delta = m1 as i128 * m1 as i128 + 4 * m2 as i128;
        if delta <= 0 {
            return Err(Error::Domain(format!("discriminant m1^2 + 4 m2 = {delta} must be positive")));
        }
        Ok(Self {
            m1,
            m2,
            terms: Mutex::new(vec![IBig::ZERO, IBig::ONE]),
        })
    }

    pub fn fibonacci() -> Self {
        Self::new(1, 1).expect("(1,1) is a valid sequence")
    }

    pub fn m1(&self) -> i64 {
        self.m1
    }

    pub fn m2(&self) -> i64 {
        self.m2
    }

    pub fn delta(&self) -> i64 {
        self.m1 * self.m1 + 4 * self.m2
    }

    pub fn is_fibonacci(&self) -> bool {
        self.m1 == 1 && self.m2 == 1
    }

    /// Roots `(alpha, beta)` of `z^2 - m1 z - m2`, `alpha > beta`.
    pub fn roots(&self, ctx: &RealContext) -> (BigReal, BigReal) {
        let root = ctx.int(self.delta()).sqrt();
        let m1 = ctx.int(self.m1);
        let two = ctx.int(2);
        (&(&m1 + &root) / &two, &(&m1 - &root) / &two)
    }

    /// Exact `f_n`, extending the shared cache as needed.
    pub fn term(&self, n: usize) -> IBig {
        let mut terms = self.terms.lock().unwrap();
        let (m1, m2) = (IBig::from(self.m1), IBig::from(self.m2));
        while terms.len() <= n {
            let k = terms.len();
            let next = &m1 * &terms[k - 1] + &m2 * &terms[k - 2];
            terms.push(next);
        }
        terms[n].clone()
    }
}

pub fn horadam_term(seq: &HoradamSequence, n: usize) -> IBig {
    seq.term(n)
}

/// Exact Fibonacci numbers `F_n` and the Lucas numbers `G_n = 2 F_(n-1) + F_n`.
#[derive(Clone, Debug)]
pub struct FibState {
    fib: Vec<IBig>,
}

impl Default for FibState {
    fn default() -> Self {
        Self {
            fib: vec![IBig::ZERO, IBig::ONE],
        }
    }
}

impl FibState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn fib(&mut self, n: usize) -> IBig {
        while self.fib.len() <= n {
            let k = self.fib.len();
            let next = &self.fib[k - 1] + &self.fib[k - 2];
            self.fib.push(next);
        }
        self.fib[n].clone()
    }

    pub fn lucas(&mut self, n: usize) -> Result<IBig> {
        if n == 0 {
            return Err(Error::InvalidArgument("G_n is defined for n >= 1".into()));
        }
        Ok(IBig::from(2) * self.fib(n - 1) + self.fib(n))
    }
}

pub fn lucas_g(n: usize) -> Result<IBig> {
    FibState::new().lucas(n)
}

/// `sum_{n>=1} 1/f_n`, summed directly.
pub fn recip_sum_naive(seq: &HoradamSequence, ctx: &RealContext) -> Result<SeriesValue> {
    let (alpha, beta) = seq.roots(ctx);
    let margin = ctx.parse("1.001")?;
    let ratio = &margin / &alpha;
    // 1/f_n = (alpha - beta) alpha^-n / (1 - (beta/alpha)^n)
    let decay = Decay::geometric(ratio).with_envelope(ctx.int(2), &beta / &alpha);
    let one = ctx.one();
    let (m1, m2) = (IBig::from(seq.m1), IBig::from(seq.m2));
    let mut prev = IBig::ZERO;
    let mut cur = IBig::ONE;
    let mut gen = FnTerms::new(decay, |n| {
        if n > 1 {
            let next = &m1 * &cur + &m2 * &prev;
            prev = std::mem::replace(&mut cur, next);
        }
        if cur == IBig::ZERO {
            return Err(Error::Pole(format!("f_{n} = 0")));
        }
        Ok(&one / &ctx.from_ibig(&cur))
    });
    Ok(sum_series(&mut gen, 1, ctx)?.tagged("naive"))
}

/// `sum_{n>=1} 1/f_n = (alpha - beta) (1/(alpha - 1) + L(1/alpha, beta/alpha))`.
pub fn recip_sum_fast(seq: &HoradamSequence, ctx: &RealContext) -> Result<SeriesValue> {
    let (alpha, beta) = seq.roots(ctx);
    if alpha <= ctx.one() {
        return Err(Error::Domain("alpha must exceed 1".into()));
    }
    if (&beta / &alpha).abs() >= ctx.parse(MAX_ROOT_RATIO)? {
        return Err(Error::Domain("|beta/alpha| too close to 1".into()));
    }
    let value = certified(ctx, |c| {
        let (alpha, beta) = seq.roots(c);
        let one = c.one();
        let l = glambert_theta(&alpha.recip(), &(&beta / &alpha), c)?;
        let head = SeriesValue::exact(&one / &(&alpha - &one), c, "theta");
        Ok(head.combine(&l, "theta").scaled(&(&alpha - &beta)))
    })?;
    Ok(value.tagged("theta"))
}

/// Which Lucas factor closes the denominator product in [`fib_recip_gosper_with`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GosperDenominator {
    /// `G_1 G_3 ... G_(2n+1)`.
    Corrected,
    /// `G_1 G_3 ... G_(2n-1)`, empty at `n = 0`.
    Uncorrected,
}

/// Exact summand `n` of Gosper's series for the reciprocal Fibonacci constant,
/// given the running Lucas product.
fn gosper_term(fib: &mut FibState, n: usize, lucas_product: &IBig) -> RBig {
    let sign_negative = matches!(n % 4, 2 | 3);
    let inner = if n % 2 == 0 {
        fib.fib(4 * n + 3) + fib.fib(2 * n + 2)
    } else {
        fib.fib(4 * n + 3) - fib.fib(2 * n + 2)
    };
    let den = fib.fib(2 * n + 1) * fib.fib(2 * n + 2) * lucas_product;
    let r = RBig::from_parts(inner, den.unsigned_abs());
    if sign_negative {
        -r
    } else {
        r
    }
}

/// Exact partial sums over `n = 0..count`, yielding `(sum, last term)`.
fn gosper_partial(count: usize, variant: GosperDenominator) -> (RBig, RBig) {
    let mut fib = FibState::new();
    let mut product = IBig::ONE;
    let mut sum = RBig::ZERO;
    let mut last = RBig::ZERO;
    for n in 0..count {
        match variant {
            GosperDenominator::Corrected => product *= fib.lucas(2 * n + 1).unwrap(),
            GosperDenominator::Uncorrected if n > 0 => product *= fib.lucas(2 * n - 1).unwrap(),
            GosperDenominator::Uncorrected => {}
        }
        last = gosper_term(&mut fib, n, &product);
        sum += &last;
    }
    (sum, last)
}

fn rational_to_real(r: &RBig, ctx: &RealContext) -> Result<BigReal> {
    ctx.ratio(r.numerator(), &IBig::from(r.denominator().clone()))
}

/// Partial sum of Gosper's series with `count >= 1` terms, computed exactly
/// and rounded once. The tail bound is the magnitude of the last term.
pub fn fib_recip_gosper(count: usize, ctx: &RealContext) -> Result<SeriesValue> {
    fib_recip_gosper_with(count, GosperDenominator::Corrected, ctx)
}

pub fn fib_recip_gosper_with(
    count: usize,
    variant: GosperDenominator,
    ctx: &RealContext,
) -> Result<SeriesValue> {
    if count == 0 {
        return Err(Error::InvalidArgument("at least one term is required".into()));
    }
    let (sum, last) = gosper_partial(count, variant);
    let value = rational_to_real(&sum, ctx)?;
    let ulp = ctx.pow10(1 - ctx.working_digits() as i64);
    let tail_bound = &rational_to_real(&last, ctx)?.abs() + &(&ulp * &value.abs());
    Ok(SeriesValue {
        value,
        terms_used: count as u64,
        tail_bound,
        method_tag: "gosper".into(),
    })
}

/// Gosper's series with as many terms as needed for `ctx`: terms shrink
/// faster than geometrically, so stopping once one drops below
/// `epsilon / 4` leaves a tail far below the last term.
pub fn fib_recip_gosper_auto(ctx: &RealContext) -> Result<SeriesValue> {
    let quarter = ctx.epsilon() / &ctx.int(4);
    let mut fib = FibState::new();
    let mut product = IBig::ONE;
    let mut sum = RBig::ZERO;
    let mut n = 0;
    loop {
        product *= fib.lucas(2 * n + 1)?;
        let term = gosper_term(&mut fib, n, &product);
        sum += &term;
        n += 1;
        let magnitude = rational_to_real(&term, ctx)?.abs();
        if magnitude < quarter {
            let value = rational_to_real(&sum, ctx)?;
            let ulp = ctx.pow10(1 - ctx.working_digits() as i64);
            let tail_bound = &magnitude + &(&ulp * &value.abs());
            return Ok(SeriesValue {
                value,
                terms_used: n as u64,
                tail_bound,
                method_tag: "gosper".into(),
            });
        }
    }
}

fn fib_beta(ctx: &RealContext) -> BigReal {
    HoradamSequence::fibonacci().roots(ctx).1
}

/// `sum_{n>=1} 1/F_(2n) = sqrt(5) (L(beta^2) - L(beta^4))`.
pub fn fib_even_theta(ctx: &RealContext) -> Result<SeriesValue> {
    certified(ctx, |c| {
        let beta_sq = fib_beta(c).square();
        let a = lambert_theta(&beta_sq, c)?;
        let b = lambert_theta(&beta_sq.square(), c)?.scaled(&-c.one());
        Ok(a.combine(&b, "theta").scaled(&c.int(5).sqrt()))
    })
}

/// `sum_{n>=1} 1/F_(2n-1) = (sqrt(5)/4) (theta3(beta^2)^2 - theta3(beta)^2)`.
pub fn fib_odd_theta(ctx: &RealContext) -> Result<SeriesValue> {
    certified(ctx, |c| {
        let beta = fib_beta(c);
        let a = theta3(&beta.square(), c)?;
        let b = theta3(&beta, c)?;
        let a_sq = a.product(&a, "theta");
        let b_sq = b.product(&b, "theta").scaled(&-c.one());
        let scale = &c.int(5).sqrt() / &c.int(4);
        Ok(a_sq.combine(&b_sq, "theta").scaled(&scale))
    })
}

/// `sum_{n>=1} beta^(n(n+1)) / (1 - beta^(2n))`, times `sqrt(5)` when
/// `apply_root5`. Only the scaled variant equals `sum 1/F_(2n)`.
pub fn fib_even_alt(apply_root5: bool, ctx: &RealContext) -> Result<SeriesValue> {
    certified(ctx, |c| {
        let beta = fib_beta(c);
        let beta_sq = beta.square();
        let one = c.one();
        // beta^(n(n+1)) advances by beta^(2n)
        let mut weight = c.one();
        let mut beta_2n = c.one();
        let decay = Decay::theta_with_factor(beta.clone(), beta.clone()).with_envelope(c.int(2), beta_sq.clone());
        let mut gen = FnTerms::new(decay, |_n| {
            beta_2n = &beta_2n * &beta_sq;
            weight = &weight * &beta_2n;
            Ok(&weight / &(&one - &beta_2n))
        });
        let sum = sum_series(&mut gen, 1, c)?;
        Ok(if apply_root5 { sum.scaled(&c.int(5).sqrt()) } else { sum })
    })
    .map(|v| v.tagged("alt"))
}

/// `sum_{n>=1} 1/F_(2n-1) = -sqrt(5) beta (sum_{n>=0} beta^(2n(n+1)))^2`.
pub fn fib_odd_alt(ctx: &RealContext) -> Result<SeriesValue> {
    certified(ctx, |c| {
        let beta = fib_beta(c);
        let beta_sq = beta.square();
        let beta_4 = beta_sq.square();
        // beta^(2n(n+1)) advances by beta^(4(n+1))
        let mut weight = c.one();
        let mut step = beta_4.clone();
        let mut gen = FnTerms::new(Decay::theta_with_factor(beta_sq.clone(), beta_sq.clone()), |_n| {
            let term = weight.clone();
            weight = &weight * &step;
            step = &step * &beta_4;
            Ok(term)
        });
        let inner = sum_series(&mut gen, 0, c)?;
        let scale = -(&c.int(5).sqrt() * &beta);
        Ok(inner.product(&inner, "alt").scaled(&scale))
    })
    .map(|v| v.tagged("alt"))
}
