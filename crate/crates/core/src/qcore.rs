//! q-Pochhammer symbols, the theta constant and the truncated-summation engine.
//!
//! Every unilateral series in the crate is driven through [`sum_series`]; the
//! two-sided Jordan-Kronecker sums use [`sum_bilateral`]. A [`TermGenerator`]
//! declares how its terms decay and the engine turns that declaration into a
//! stopping rule with a certified tail bound.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{BigReal, RealContext};

/// Indices inspected before the divergence guard starts counting.
pub const BURN_IN: u64 = 16;
/// Consecutive decay violations that abort a summation.
pub const MAX_VIOLATIONS: u32 = 64;
/// Every summation evaluates at least this many terms.
pub const MIN_TERMS: u64 = 2;
/// Hard cap on terms per summation.
pub const MAX_TERMS: u64 = 2_000_000;
/// Consecutive exact zeros after which the remaining tail is taken as zero.
pub const ZERO_RUN: u32 = 8;

/// Result of a truncated summation or product.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeriesValue {
    #[serde(serialize_with = "ser_plain")]
    pub value: BigReal,
    pub terms_used: u64,
    #[serde(serialize_with = "ser_sci")]
    pub tail_bound: BigReal,
    pub method_tag: String,
}

fn ser_plain<S: serde::Serializer>(v: &BigReal, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

fn ser_sci<S: serde::Serializer>(v: &BigReal, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_scientific(6))
}

impl SeriesValue {
    pub fn exact(value: BigReal, ctx: &RealContext, method_tag: &str) -> Self {
        Self {
            value,
            terms_used: 0,
            tail_bound: ctx.zero(),
            method_tag: method_tag.to_string(),
        }
    }

    pub fn tagged(mut self, method_tag: &str) -> Self {
        self.method_tag = method_tag.to_string();
        self
    }

    /// `scale * self`, with the bound scaled by `|scale|`.
    pub fn scaled(mut self, scale: &BigReal) -> Self {
        self.value = &self.value * scale;
        self.tail_bound = &self.tail_bound * &scale.abs();
        self
    }

    /// Product of two evaluated pieces with first-order bound propagation.
    pub fn product(&self, other: &SeriesValue, method_tag: &str) -> Self {
        let bound = &(&(&self.value.abs() * &other.tail_bound)
            + &(&other.value.abs() * &self.tail_bound))
            + &(&self.tail_bound * &other.tail_bound);
        Self {
            value: &self.value * &other.value,
            terms_used: self.terms_used + other.terms_used,
            tail_bound: bound,
            method_tag: method_tag.to_string(),
        }
    }

    /// Quotient of two evaluated pieces; fails when the divisor's bound
    /// does not exclude zero.
    pub fn quotient(&self, other: &SeriesValue, method_tag: &str) -> Result<Self> {
        let margin = &other.value.abs() - &other.tail_bound;
        if margin.is_negative() || margin.is_zero() {
            return Err(Error::Pole(format!("divisor {} not separated from zero", other.method_tag)));
        }
        let value = &self.value / &other.value;
        let bound = &(&self.tail_bound + &(&value.abs() * &other.tail_bound)) / &margin;
        Ok(Self {
            value,
            terms_used: self.terms_used + other.terms_used,
            tail_bound: bound,
            method_tag: method_tag.to_string(),
        })
    }

    /// Sum of two evaluated pieces; bounds and term counts add.
    pub fn combine(&self, other: &SeriesValue, method_tag: &str) -> Self {
        Self {
            value: &self.value + &other.value,
            terms_used: self.terms_used + other.terms_used,
            tail_bound: &self.tail_bound + &other.tail_bound,
            method_tag: method_tag.to_string(),
        }
    }
}

/// Evaluates a composite of certified pieces, raising the inner target until
/// the propagated bound is within `epsilon` of `ctx`, then rounds to `ctx`.
pub fn certified<F>(ctx: &RealContext, mut eval: F) -> Result<SeriesValue>
where
    F: FnMut(&RealContext) -> Result<SeriesValue>,
{
    let mut extra = 0u32;
    loop {
        let inner = ctx.refined(extra);
        let v = eval(&inner)?;
        if v.tail_bound <= *ctx.epsilon() {
            let ulp = ctx.pow10(1 - ctx.working_digits() as i64);
            let rounding = &ulp * &v.value.abs();
            return Ok(SeriesValue {
                value: v.value.in_context(ctx),
                terms_used: v.terms_used,
                tail_bound: (&v.tail_bound + &rounding).in_context(ctx),
                method_tag: v.method_tag,
            });
        }
        if extra >= MAX_REFINEMENT {
            return Err(Error::PrecisionLoss(format!(
                "composite bound {} after {extra} extra digits",
                v.tail_bound.to_scientific(3)
            )));
        }
        let excess = (&v.tail_bound / ctx.epsilon()).to_f64().log10().ceil();
        extra = (extra + excess.max(1.0) as u32 + 2).min(MAX_REFINEMENT);
    }
}

/// Largest number of extra target digits [`certified`] will try.
pub const MAX_REFINEMENT: u32 = 400;

/// Declared eventual decay of a term sequence.
///
/// A term is a pure weight (geometric or theta) times a slowly varying
/// factor `A_n`. The optional envelope bounds how far that factor can grow
/// beyond index `n`: `sup_{m>n} |A_m / A_n| <= 1 / (1 - coeff * base^n)`.
#[derive(Clone, Debug)]
pub struct Decay {
    law: Law,
    envelope: Option<(BigReal, BigReal)>,
}

#[derive(Clone, Debug)]
enum Law {
    /// `|w_{n+1}| <= ratio * |w_n|`.
    Geometric { ratio: BigReal },
    /// `|w_n| = C * factor^n * base^(n^2)`, so the step ratio from `n` to
    /// `n + 1` is `factor * base^(2n + 1)`.
    Theta { base: BigReal, factor: BigReal },
}

impl Decay {
    pub fn geometric(ratio: BigReal) -> Self {
        Self::from_law(Law::Geometric { ratio: ratio.abs() })
    }

    pub fn theta(base: BigReal, ctx: &RealContext) -> Self {
        Self::theta_with_factor(base, ctx.one())
    }

    pub fn theta_with_factor(base: BigReal, factor: BigReal) -> Self {
        Self::from_law(Law::Theta {
            base: base.abs(),
            factor: factor.abs(),
        })
    }

    fn from_law(law: Law) -> Self {
        Self { law, envelope: None }
    }

    /// Declares the envelope `1 / (1 - coeff * base^n)` on the non-weight factor.
    ///
    /// For `A_n = prod_i (1 - a_i q^(k_i n))^(+-1)` with `k_i >= 1`, the
    /// coefficient `2 sum |a_i|` with base `|q|` is valid.
    pub fn with_envelope(mut self, coeff: BigReal, base: BigReal) -> Self {
        self.envelope = Some((coeff.abs(), base.abs()));
        self
    }

    fn label(&self) -> &'static str {
        match self.law {
            Law::Geometric { .. } => "geometric",
            Law::Theta { .. } => "theta",
        }
    }

    /// Declared ratio `|w_{n+1}| / |w_n|` of the pure weight.
    fn step_ratio(&self, n: i64) -> BigReal {
        match &self.law {
            Law::Geometric { ratio } => ratio.clone(),
            Law::Theta { base, factor } => factor * &base.powi(2 * n.max(0) + 1),
        }
    }

    /// Growth allowance for the factor beyond `n`; `None` while unbounded.
    fn envelope_at(&self, n: i64, one: &BigReal) -> Option<BigReal> {
        match &self.envelope {
            None => Some(one.clone()),
            Some((coeff, base)) => {
                let w = coeff * &base.powi(n.max(0));
                (w < *one).then(|| one / &(one - &w))
            }
        }
    }
}

/// Envelope coefficient for `A_n = prod_i (1 - a_i q^(k_i n))^(+-1)` with
/// `k_i >= 1`: each factor moves by at most `1 / (1 - 2 |a_i| |q|^n)` beyond
/// `n`, giving `2 sum |a_i|` with base `|q|`.
pub fn product_envelope(coeffs: &[&BigReal], ctx: &RealContext) -> BigReal {
    &ctx.int(2) * &abs_total(coeffs, ctx)
}

/// Envelope coefficient for a running product whose factor `j > n` is at
/// most `1 / (1 - s |q|^j)`, e.g. a ratio of q-Pochhammer symbols with
/// coefficients summing to `s` in absolute value. The growth beyond `n` is
/// then at most `1 / (1 - c |q|^n)` with `c = s |q| / (1 - |q|)`.
pub fn pochhammer_envelope(coeffs: &[&BigReal], q: &BigReal, ctx: &RealContext) -> BigReal {
    let qa = q.abs();
    &(&abs_total(coeffs, ctx) * &qa) / &(&ctx.one() - &qa)
}

/// Envelope coefficient for `c0 + sum_i 1/(1 - a_i q^(k_i n))` (or its
/// `a q^n / (1 - a q^n)` variants), `c0 + 1` nonzero, from the first index
/// whose `|q|^n` is `first`: the bracket differs from its limit by at most
/// `s_n = sum |a_i| |q|^n / (1 - max |a_i| first)` and so moves by at most
/// `1 / (1 - 2 s_n)`.
pub fn pole_sum_envelope(coeffs: &[&BigReal], first: &BigReal, ctx: &RealContext) -> BigReal {
    let widest = coeffs.iter().fold(ctx.zero(), |m, a| m.max(a.abs()));
    &product_envelope(coeffs, ctx) / &(&ctx.one() - &(&widest * &first.abs()))
}

fn abs_total(coeffs: &[&BigReal], ctx: &RealContext) -> BigReal {
    coeffs.iter().fold(ctx.zero(), |acc, a| &acc + &a.abs())
}

/// Source of summands.
///
/// The engines call [`TermGenerator::term`] with strictly increasing `n`, one
/// index at a time, so implementations may keep running products.
pub trait TermGenerator {
    fn decay(&self) -> &Decay;
    fn term(&mut self, n: i64) -> Result<BigReal>;
}

/// A generator built from a decay declaration and a closure.
pub struct FnTerms<F> {
    decay: Decay,
    f: F,
}

impl<F: FnMut(i64) -> Result<BigReal>> FnTerms<F> {
    pub fn new(decay: Decay, f: F) -> Self {
        Self { decay, f }
    }
}

impl<F: FnMut(i64) -> Result<BigReal>> TermGenerator for FnTerms<F> {
    fn decay(&self) -> &Decay {
        &self.decay
    }

    fn term(&mut self, n: i64) -> Result<BigReal> {
        (self.f)(n)
    }
}

/// Per-direction bookkeeping shared by the unilateral and bilateral engines.
struct TailTracker {
    terms: u64,
    prev_abs: Option<BigReal>,
    violations: u32,
    abs_sum: BigReal,
    max_partial: BigReal,
    bound: Option<BigReal>,
    seen_nonzero: bool,
    zero_run: u32,
    one: BigReal,
}

impl TailTracker {
    fn new(ctx: &RealContext) -> Self {
        Self {
            one: ctx.one(),
            terms: 0,
            prev_abs: None,
            violations: 0,
            abs_sum: ctx.zero(),
            max_partial: ctx.zero(),
            bound: None,
            seen_nonzero: false,
            zero_run: 0,
        }
    }

    /// Records `term` at index `n` and refreshes the truncation bound for the remaining tail.
    fn push(&mut self, decay: &Decay, n: i64, term: &BigReal, partial: &BigReal) -> Result<()> {
        self.terms += 1;
        let magnitude = term.abs();
        self.abs_sum = &self.abs_sum + &magnitude;
        let partial_abs = partial.abs();
        if partial_abs > self.max_partial {
            self.max_partial = partial_abs;
        }

        let steps = self.terms - 1;
        let observed = match &self.prev_abs {
            Some(prev) if !prev.is_zero() && !magnitude.is_zero() => Some(&magnitude / prev),
            _ => None,
        };
        if let Some(obs) = &observed {
            let declared_prev = decay.step_ratio(n - 1);
            if steps >= BURN_IN && *obs > &declared_prev + &declared_prev {
                self.violations += 1;
                if self.violations >= MAX_VIOLATIONS {
                    return Err(Error::Divergence(format!(
                        "terms exceed the declared {} decay for {MAX_VIOLATIONS} consecutive indices (last index {n})",
                        decay.label()
                    )));
                }
            } else {
                self.violations = 0;
            }
        }

        let declared = decay.step_ratio(n);
        let rho = match observed {
            Some(obs) => declared.max(obs),
            None => declared,
        };
        let one = &self.one;
        self.bound = if magnitude.is_zero() {
            // an isolated zero says nothing about later terms: the previous
            // bound already covers them, and only a run of zeros longer than
            // a summand's factors can vanish at once means the weight is gone
            self.zero_run += 1;
            if self.zero_run >= ZERO_RUN {
                Some(magnitude.clone())
            } else if self.seen_nonzero {
                self.bound.take()
            } else {
                None
            }
        } else if rho < *one {
            decay
                .envelope_at(n, one)
                .map(|k| &(&(&magnitude * &rho) / &(one - &rho)) * &k)
        } else {
            None
        };
        if !magnitude.is_zero() {
            self.seen_nonzero = true;
            self.zero_run = 0;
        }
        self.prev_abs = Some(magnitude);
        Ok(())
    }

    fn converged(&self, budget: &BigReal) -> bool {
        self.terms >= MIN_TERMS && matches!(&self.bound, Some(b) if b < budget)
    }

    /// Worst-case accumulated rounding error: each term carries a relative
    /// error of a few ulps per index (running products) and each partial sum
    /// one ulp of the largest partial sum.
    fn rounding_allowance(&self, ctx: &RealContext) -> BigReal {
        let ulp = ctx.pow10(1 - ctx.working_digits() as i64);
        let n = ctx.int(self.terms as i64 + 1);
        &(&ulp * &n) * &(&(&ctx.int(3) * &self.abs_sum) + &self.max_partial)
    }
}

fn certify(
    truncation: BigReal,
    allowance: BigReal,
    ctx: &RealContext,
) -> Result<BigReal> {
    let bound = truncation + allowance;
    if bound > *ctx.epsilon() {
        return Err(Error::PrecisionLoss(format!(
            "error bound {} exceeds epsilon {}",
            bound.to_scientific(3),
            ctx.epsilon().to_scientific(1)
        )));
    }
    Ok(bound)
}

/// Sums `gen` from `start_index` upwards until the certified tail bound drops
/// below `epsilon / 2`.
pub fn sum_series<G: TermGenerator + ?Sized>(
    gen: &mut G,
    start_index: i64,
    ctx: &RealContext,
) -> Result<SeriesValue> {
    let budget = ctx.epsilon() / &ctx.int(2);
    let mut tracker = TailTracker::new(ctx);
    let mut sum = ctx.zero();
    let mut n = start_index;
    loop {
        let term = gen.term(n)?;
        sum = &sum + &term;
        tracker.push(gen.decay(), n, &term, &sum)?;
        if tracker.converged(&budget) {
            break;
        }
        if tracker.terms >= MAX_TERMS {
            return Err(Error::Divergence(format!("no convergence after {MAX_TERMS} terms")));
        }
        n += 1;
    }
    let truncation = tracker.bound.clone().expect("converged implies a bound");
    let tail_bound = certify(truncation, tracker.rounding_allowance(ctx), ctx)?;
    Ok(SeriesValue {
        value: sum,
        terms_used: tracker.terms,
        tail_bound,
        method_tag: gen.decay().label().to_string(),
    })
}

/// Sums a two-sided series `sum_{n in Z}` in the order `0, +1, -1, +2, -2, ...`.
///
/// `center` supplies the `n = 0` term, `upper` is queried at `n = 1, 2, ...`
/// and `lower` at `m = 1, 2, ...` for the index `n = -m`. Each side stops once
/// its own tail bound is below `epsilon / 4`.
pub fn sum_bilateral<U, L>(
    center: BigReal,
    upper: &mut U,
    lower: &mut L,
    ctx: &RealContext,
) -> Result<SeriesValue>
where
    U: TermGenerator + ?Sized,
    L: TermGenerator + ?Sized,
{
    let budget = ctx.epsilon() / &ctx.int(4);
    let mut up = TailTracker::new(ctx);
    let mut down = TailTracker::new(ctx);
    let mut sum = center.clone();
    let mut max_partial = sum.abs();
    let center_abs = center.abs();
    let mut k: i64 = 1;
    while !(up.converged(&budget) && down.converged(&budget)) {
        if !up.converged(&budget) {
            let term = upper.term(k)?;
            sum = &sum + &term;
            up.push(upper.decay(), k, &term, &sum)?;
        }
        if !down.converged(&budget) {
            let term = lower.term(k)?;
            sum = &sum + &term;
            down.push(lower.decay(), k, &term, &sum)?;
        }
        if sum.abs() > max_partial {
            max_partial = sum.abs();
        }
        if up.terms + down.terms >= MAX_TERMS {
            return Err(Error::Divergence(format!("no convergence after {MAX_TERMS} terms")));
        }
        k += 1;
    }
    let truncation = up.bound.clone().unwrap() + down.bound.clone().unwrap();
    up.max_partial = max_partial.clone();
    down.max_partial = max_partial;
    up.abs_sum = &up.abs_sum + &center_abs;
    let allowance = up.rounding_allowance(ctx) + down.rounding_allowance(ctx);
    let tail_bound = certify(truncation, allowance, ctx)?;
    Ok(SeriesValue {
        value: sum,
        terms_used: 1 + up.terms + down.terms,
        tail_bound,
        method_tag: "bilateral".to_string(),
    })
}

/// Finite q-Pochhammer symbol `(a;q)_n = (1-a)(1-aq)...(1-aq^(n-1))`.
pub fn qpochhammer_n(a: &BigReal, q: &BigReal, n: u64, ctx: &RealContext) -> BigReal {
    let one = ctx.one();
    let mut product = ctx.one();
    let mut aq = a.clone();
    for _ in 0..n {
        product = &product * &(&one - &aq);
        aq = &aq * q;
    }
    product
}

pub(crate) fn require_unit_disk(name: &str, v: &BigReal, ctx: &RealContext) -> Result<()> {
    if v.abs() >= ctx.one() {
        return Err(Error::Domain(format!("{name} outside (\u{2212}1,1)")));
    }
    Ok(())
}

/// Infinite product `(a;q)_inf` truncated once `|a| |q|^N < epsilon / 4` and
/// the logarithmic tail estimate certifies the remainder.
pub fn qpochhammer_inf(a: &BigReal, q: &BigReal, ctx: &RealContext) -> Result<SeriesValue> {
    require_unit_disk("q", q, ctx)?;
    let one = ctx.one();
    let two = ctx.int(2);
    let quarter_eps = ctx.epsilon() / &ctx.int(4);
    let half_eps = ctx.epsilon() / &two;
    let half = &one / &two;
    let abs_q = q.abs();
    let one_minus_q = &one - &abs_q;

    let mut product = ctx.one();
    let mut aq = a.clone();
    let mut factors: u64 = 0;
    let mut abs_factor_sum = ctx.zero();
    loop {
        let magnitude = aq.abs();
        if magnitude < quarter_eps && factors >= 1 {
            // log(1-u) <= 2|u| for |u| <= 1/2, and |e^d - 1| <= 2|d| for |d| <= 1
            let log_tail = &(&two * &magnitude) / &one_minus_q;
            if log_tail <= half {
                let bound = &(&two * &product.abs()) * &log_tail;
                if bound < half_eps {
                    let ulp = ctx.pow10(1 - ctx.working_digits() as i64);
                    let rounding = &(&ulp * &ctx.int(factors as i64 + 1))
                        * &(&product.abs() * &(&two + &abs_factor_sum));
                    let tail_bound = certify(bound, rounding, ctx)?;
                    return Ok(SeriesValue {
                        value: product,
                        terms_used: factors,
                        tail_bound,
                        method_tag: "product".to_string(),
                    });
                }
            }
        }
        let factor = &one - &aq;
        if factor.is_zero() {
            return Ok(SeriesValue::exact(ctx.zero(), ctx, "product"));
        }
        product = &product * &factor;
        abs_factor_sum = &abs_factor_sum + &one;
        aq = &aq * q;
        factors += 1;
        if factors >= MAX_TERMS {
            return Err(Error::Divergence("infinite product did not converge".into()));
        }
    }
}

/// Jacobi theta constant `1 + 2 sum_{n>=1} q^(n^2)`.
pub fn theta3(q: &BigReal, ctx: &RealContext) -> Result<SeriesValue> {
    require_unit_disk("q", q, ctx)?;
    let two = ctx.int(2);
    let q_sq = q * q;
    // q^(n^2) = q^((n-1)^2) * q^(2n-1)
    let mut power = ctx.one();
    let mut step = q.clone();
    let mut gen = FnTerms::new(Decay::theta(q.clone(), ctx), move |_n| {
        power = &power * &step;
        step = &step * &q_sq;
        Ok(&two * &power)
    });
    let tail = sum_series(&mut gen, 1, ctx)?;
    Ok(SeriesValue {
        value: &ctx.one() + &tail.value,
        terms_used: tail.terms_used,
        tail_bound: tail.tail_bound,
        method_tag: "theta".to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::make_context;

    fn ctx30() -> RealContext {
        make_context(30).unwrap()
    }

    fn close(a: &BigReal, b: &BigReal, tol: &BigReal) -> bool {
        (a - b).abs() <= *tol
    }

    #[test]
    fn pochhammer_finite() {
        let c = ctx30();
        let half = c.parse("0.5").unwrap();
        assert_eq!(qpochhammer_n(&half, &half, 0, &c), c.one());
        assert_eq!(qpochhammer_n(&half, &half, 2, &c), c.parse("0.375").unwrap());
        assert!(qpochhammer_n(&c.one(), &half, 3, &c).is_zero());
        let a = c.parse("0.3").unwrap();
        let q = c.parse("-0.7").unwrap();
        for n in 0..20u64 {
            let next = qpochhammer_n(&a, &q, n + 1, &c);
            let step = qpochhammer_n(&a, &q, n, &c) * (c.one() - &a * &q.powi(n as i64));
            assert!(close(&next, &step, &c.pow10(-39)));
        }
    }

    #[test]
    fn pochhammer_infinite() {
        let c = ctx30();
        let half = c.parse("0.5").unwrap();
        let zero = qpochhammer_inf(&c.zero(), &half, &c).unwrap();
        assert_eq!(zero.value, c.one());
        let v = qpochhammer_inf(&half, &half, &c).unwrap();
        // direct product at 50 digits until the factors are 1 to 10^-60
        let c50 = make_context(50).unwrap();
        let h = c50.parse("0.5").unwrap();
        let mut oracle = c50.one();
        let mut p = h.clone();
        while p > c50.pow10(-60) {
            oracle = &oracle * &(c50.one() - &p);
            p = &p * &h;
        }
        assert!(close(&v.value, &oracle.in_context(&c), &c.pow10(-30)));
        assert!(v.value.to_string().starts_with("0.288788095"));
        assert!(v.tail_bound <= *c.epsilon());
        assert!(matches!(
            qpochhammer_inf(&half, &c.one(), &c),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn theta3_values() {
        let c = ctx30();
        let t0 = theta3(&c.zero(), &c).unwrap();
        assert_eq!(t0.value, c.one());
        let t = theta3(&c.parse("0.1").unwrap(), &c).unwrap();
        // 1 + 2(10^-1 + 10^-4 + 10^-9 + 10^-16 + 10^-25 + 10^-36)
        let mut digits = vec![b'0'; 40];
        for k in [1usize, 4, 9, 16, 25, 36] {
            digits[k - 1] = b'2';
        }
        let expected = c.parse(&format!("1.{}", String::from_utf8(digits).unwrap())).unwrap();
        assert!(close(&t.value, &expected, c.epsilon()), "{} vs {}", t.value, expected);
        assert!(theta3(&c.parse("-1").unwrap(), &c).is_err());
    }

    #[test]
    fn engine_zero_and_geometric() {
        let c = ctx30();
        let mut zero = FnTerms::new(Decay::geometric(c.parse("0.5").unwrap()), |_| Ok(c.zero()));
        let v = sum_series(&mut zero, 0, &c).unwrap();
        assert!(v.value.is_zero());
        assert_eq!(v.terms_used, u64::from(ZERO_RUN));

        let half = c.parse("0.5").unwrap();
        let mut geo = FnTerms::new(Decay::geometric(half.clone()), |n| Ok(half.powi(n)));
        let v = sum_series(&mut geo, 1, &c).unwrap();
        assert!(close(&v.value, &c.one(), c.epsilon()));
        assert!(v.tail_bound <= *c.epsilon());
        // geometric term-count law
        let law = (30.0 * std::f64::consts::LN_10 / 2f64.ln()).ceil() as u64 + 4;
        assert!(v.terms_used <= law, "{} > {law}", v.terms_used);
    }

    #[test]
    fn isolated_zero_does_not_end_the_sum() {
        let c = ctx30();
        let half = c.parse("0.5").unwrap();
        // a factor vanishing at n = 1 only
        let mut gen = FnTerms::new(Decay::geometric(half.clone()), |n| {
            Ok(if n == 1 { c.zero() } else { half.powi(n) })
        });
        let v = sum_series(&mut gen, 0, &c).unwrap();
        assert!(close(&v.value, &c.parse("1.5").unwrap(), c.epsilon()));
        assert!(v.terms_used > 90);
    }

    #[test]
    fn envelope_widens_the_bound() {
        let c = ctx30();
        let q = c.parse("-0.9").unwrap();
        let one = c.one();
        let mut plain_pow = c.one();
        let mut plain = FnTerms::new(Decay::geometric(q.clone()), |_| {
            plain_pow = &plain_pow * &q;
            Ok(&plain_pow / &(&one - &plain_pow))
        });
        let mut wide_pow = c.one();
        let decay = Decay::geometric(q.clone()).with_envelope(product_envelope(&[&one], &c), q.clone());
        let mut wide = FnTerms::new(decay, |_| {
            wide_pow = &wide_pow * &q;
            Ok(&wide_pow / &(&one - &wide_pow))
        });
        let a = sum_series(&mut plain, 1, &c).unwrap();
        let b = sum_series(&mut wide, 1, &c).unwrap();
        assert!(b.terms_used >= a.terms_used);
        assert!(close(&a.value, &b.value, &(c.epsilon() * &c.int(2))));
    }

    #[test]
    fn engine_theta_sum() {
        let c = ctx30();
        let half = c.parse("0.5").unwrap();
        let mut gen = FnTerms::new(Decay::theta(half.clone(), &c), |n| Ok(half.powi(n * n)));
        let v = sum_series(&mut gen, 1, &c).unwrap();
        // sum_{n=1}^{12} 2^-(n^2) computed with exact rationals at 45 digits
        let c45 = make_context(45).unwrap();
        let mut oracle = c45.zero();
        for n in 1..=12i64 {
            oracle = oracle + c45.one() / c45.int(2).powi(n * n);
        }
        assert!(close(&v.value, &oracle.in_context(&c), &c.pow10(-30)));
        assert!(v.value.to_string().starts_with("0.564468"));
        assert!(v.terms_used <= 10);
    }

    #[test]
    fn engine_detects_divergence() {
        let c = ctx30();
        let declared = c.parse("0.1").unwrap();
        let mut gen = FnTerms::new(Decay::geometric(declared), |_| Ok(c.one()));
        assert!(matches!(sum_series(&mut gen, 0, &c), Err(Error::Divergence(_))));
    }

    #[test]
    fn bilateral_geometric_sides() {
        let c = ctx30();
        let half = c.parse("0.5").unwrap();
        let third = c.parse("1/3").unwrap();
        let mut up = FnTerms::new(Decay::geometric(half.clone()), |n| Ok(half.powi(n)));
        let mut down = FnTerms::new(Decay::geometric(third.clone()), |m| Ok(third.powi(m)));
        let v = sum_bilateral(c.one(), &mut up, &mut down, &c).unwrap();
        // 1 + 1 + 1/2
        assert!(close(&v.value, &c.parse("2.5").unwrap(), c.epsilon()));
    }
}
