//! Registry of q-series identities, each given as two or more independently
//! evaluated sides, and a sampling checker that certifies their agreement.

use std::fmt;

use rayon::prelude::*;
use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};

use crate::bilateral::{jordan_direct, jordan_form1, jordan_form2, jordan_theta, BilateralParams};
use crate::error::{Error, Result};
use crate::lambert::{fine_f, series_qxt_lhs, QxtParams};
use crate::numerics::{BigReal, RealContext};
use crate::qcore::{
    certified, pochhammer_envelope, pole_sum_envelope, product_envelope, qpochhammer_inf, require_unit_disk,
    sum_series, Decay, FnTerms, SeriesValue,
};

/// Resampling attempts per trial before the domain is declared degenerate.
pub const MAX_ATTEMPTS: u32 = 1000;

/// Extra guard digits tried, in order, when a side reports precision loss.
const GUARD_LADDER: [u32; 3] = [0, 20, 45];

/// 64-bit linear congruential generator used for parameter sampling.
#[derive(Clone, Debug)]
pub struct Lcg(u64);

impl Lcg {
    pub const MULTIPLIER: u64 = 6364136223846793005;
    pub const INCREMENT: u64 = 1442695040888963407;

    pub fn new(seed: u64) -> Self {
        Lcg(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_mul(Self::MULTIPLIER).wrapping_add(Self::INCREMENT);
        self.0
    }

    /// Top 53 bits scaled onto `0..span`.
    fn below(&mut self, span: u128) -> u128 {
        ((self.next_u64() >> 11) as u128 * span) >> 53
    }

    /// A 12-digit decimal drawn uniformly from `[-0.9, 0.9]`.
    pub fn next_unit(&mut self, ctx: &RealContext) -> BigReal {
        let v = self.below(1_800_000_000_001) as i64 - 900_000_000_000;
        BigReal::from_parts(v.into(), -12, ctx)
    }

    /// An integer drawn uniformly from `lo..=hi`.
    pub fn next_int(&mut self, lo: i64, hi: i64) -> i64 {
        lo + self.below((hi - lo + 1) as u128) as i64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParamDomain {
    /// `[-0.9, 0.9]`.
    Unit,
    /// `[-0.9, 0.9]` without zero.
    NonZeroUnit,
    /// Integers in `lo..=hi`.
    Integer { lo: i64, hi: i64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ParamSpec {
    pub name: &'static str,
    pub domain: ParamDomain,
}

const fn unit(name: &'static str) -> ParamSpec {
    ParamSpec { name, domain: ParamDomain::Unit }
}

const fn nonzero(name: &'static str) -> ParamSpec {
    ParamSpec { name, domain: ParamDomain::NonZeroUnit }
}

const fn integer(name: &'static str, lo: i64, hi: i64) -> ParamSpec {
    ParamSpec { name, domain: ParamDomain::Integer { lo, hi } }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ParamValue {
    Real(BigReal),
    Int(i64),
    Label(&'static str),
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Real(v) => write!(f, "{v}"),
            ParamValue::Int(v) => write!(f, "{v}"),
            ParamValue::Label(v) => f.write_str(v),
        }
    }
}

/// A parameter assignment, kept in schema order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Point(Vec<(&'static str, ParamValue)>);

impl Point {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_real(mut self, name: &'static str, value: BigReal) -> Self {
        self.0.push((name, ParamValue::Real(value)));
        self
    }

    pub fn with_int(mut self, name: &'static str, value: i64) -> Self {
        self.0.push((name, ParamValue::Int(value)));
        self
    }

    pub fn with_label(mut self, name: &'static str, value: &'static str) -> Self {
        self.0.push((name, ParamValue::Label(value)));
        self
    }

    pub fn get(&self, name: &str) -> Option<&ParamValue> {
        self.0.iter().find(|(n, _)| *n == name).map(|(_, v)| v)
    }

    /// # Panics
    /// If `name` is missing or integer-valued; evaluators only read their own schema.
    pub fn real(&self, name: &str) -> &BigReal {
        match self.get(name) {
            Some(ParamValue::Real(v)) => v,
            _ => panic!("point has no real parameter {name}"),
        }
    }

    /// # Panics
    /// If `name` is missing or real-valued.
    pub fn int(&self, name: &str) -> i64 {
        match self.get(name) {
            Some(ParamValue::Int(v)) => *v,
            _ => panic!("point has no integer parameter {name}"),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&'static str, &ParamValue)> {
        self.0.iter().map(|(n, v)| (*n, v))
    }

    fn in_context(&self, ctx: &RealContext) -> Self {
        Point(
            self.0
                .iter()
                .map(|(n, v)| {
                    let v = match v {
                        ParamValue::Real(r) => ParamValue::Real(r.in_context(ctx)),
                        other => other.clone(),
                    };
                    (*n, v)
                })
                .collect(),
        )
    }
}

impl Serialize for Point {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for (name, value) in &self.0 {
            map.serialize_entry(name, &value.to_string())?;
        }
        map.end()
    }
}

pub type SideFn = fn(&Point, &RealContext) -> Result<SeriesValue>;

#[derive(Clone, Copy)]
pub struct Side {
    pub label: &'static str,
    pub eval: SideFn,
}

impl fmt::Debug for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Side").field("label", &self.label).finish()
    }
}

/// One identity: a parameter schema and the sides that must agree.
#[derive(Clone, Debug)]
pub struct IdentityEntry {
    pub name: &'static str,
    pub description: &'static str,
    pub params: Vec<ParamSpec>,
    pub sides: Vec<Side>,
}

impl IdentityEntry {
    fn sample(&self, rng: &mut Lcg, ctx: &RealContext) -> Point {
        let mut point = Point::new();
        for spec in &self.params {
            point = match spec.domain {
                ParamDomain::Unit | ParamDomain::NonZeroUnit => {
                    point.with_real(spec.name, rng.next_unit(ctx))
                }
                ParamDomain::Integer { lo, hi } => point.with_int(spec.name, rng.next_int(lo, hi)),
            };
        }
        point
    }

    fn admissible(&self, point: &Point) -> bool {
        self.params.iter().all(|spec| match spec.domain {
            ParamDomain::NonZeroUnit => !point.real(spec.name).is_zero(),
            _ => true,
        })
    }

    /// Evaluates every side at `point`. Sides that lose precision are
    /// re-evaluated with more guard digits; the target stays the same.
    pub fn evaluate(&self, point: &Point, ctx: &RealContext) -> Result<Vec<SeriesValue>> {
        let mut last_err = None;
        for extra in GUARD_LADDER {
            let work = ctx.with_extra_guard(extra);
            let lifted = point.in_context(&work);
            match self
                .sides
                .iter()
                .map(|side| (side.eval)(&lifted, &work).map(|v| v.tagged(side.label)))
                .collect::<Result<Vec<_>>>()
            {
                Err(e @ Error::PrecisionLoss(_)) => last_err = Some(e),
                other => return other,
            }
        }
        Err(last_err.expect("guard ladder is non-empty"))
    }

    /// Largest pairwise absolute difference between the sides at `point`.
    pub fn deviation(&self, point: &Point, ctx: &RealContext) -> Result<BigReal> {
        let values = self.evaluate(point, ctx)?;
        let mut worst = ctx.zero();
        for (i, a) in values.iter().enumerate() {
            for b in &values[i + 1..] {
                let d = (&a.value - &b.value).abs();
                if d > worst {
                    worst = d;
                }
            }
        }
        Ok(worst.in_context(ctx))
    }
}

/// Outcome of [`check_identity`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentityReport {
    pub name: String,
    pub trials: u32,
    pub seed: i64,
    pub target_digits: u32,
    #[serde(serialize_with = "ser_deviation")]
    pub worst_deviation: BigReal,
    pub worst_point: Point,
    pub pass: bool,
}

fn ser_deviation<S: Serializer>(v: &BigReal, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_scientific(6))
}

impl IdentityReport {
    /// Pass threshold: four times the context epsilon.
    pub fn threshold(ctx: &RealContext) -> BigReal {
        ctx.epsilon() * &ctx.int(4)
    }

    pub fn recompute_pass(&self, ctx: &RealContext) -> bool {
        self.worst_deviation <= Self::threshold(ctx)
    }
}

pub fn registry() -> Vec<IdentityEntry> {
    let side = |label, eval| Side { label, eval };
    vec![
        IdentityEntry {
            name: "rogers-fine",
            description: "Rogers–Fine identity for (1-t) F(a,b;t)",
            params: vec![unit("a"), unit("b"), unit("t"), nonzero("q")],
            sides: vec![side("lhs", scaled_fine_f), side("rhs", rogers_fine_rhs)],
        },
        IdentityEntry {
            name: "symm",
            description: "sum t^n/(1 - x q^n) is symmetric in x and t",
            params: vec![unit("x"), unit("t"), nonzero("q")],
            sides: vec![side("lhs", symm_lhs), side("rhs", symm_rhs)],
        },
        IdentityEntry {
            name: "fine-12.2",
            description: "Fine's second transformation of (1-t) F(a,b;t)",
            params: vec![unit("a"), unit("b"), unit("t"), nonzero("q")],
            sides: vec![side("lhs", scaled_fine_f), side("rhs", fine_second_rhs)],
        },
        IdentityEntry {
            name: "fine-16.3",
            description: "Fine's expansion of F(a,b;t) over 1/(1 - t q^n)",
            params: vec![nonzero("a"), unit("b"), unit("t"), nonzero("q")],
            sides: vec![side("lhs", fine_f_side), side("rhs", fine_sixteen_rhs)],
        },
        IdentityEntry {
            name: "poch-symm",
            description: "sum t^n/(x;q)_(n+1) is symmetric in x and t",
            params: vec![unit("x"), unit("t"), nonzero("q")],
            sides: vec![side("lhs", poch_symm_lhs), side("rhs", poch_symm_rhs)],
        },
        IdentityEntry {
            name: "gosper-poch",
            description: "Gosper's product form of sum t^n/(x;q)_(n+1)",
            params: vec![unit("x"), unit("t"), nonzero("q")],
            sides: vec![side("lhs", gosper_poch_lhs), side("rhs", gosper_poch_rhs)],
        },
        IdentityEntry {
            name: "osler",
            description: "Osler–Hassen two-parameter Lambert relations",
            params: vec![
                unit("alpha"),
                unit("beta"),
                nonzero("q"),
                integer("a", 1, 4),
                integer("b", 0, 4),
                integer("c", 1, 4),
                integer("d", 0, 4),
            ],
            sides: vec![
                side("lhs", osler_lhs),
                side("rhs", osler_rhs),
                side("combined", osler_combined),
            ],
        },
        IdentityEntry {
            name: "osler-1111",
            description: "Osler–Hassen relations at a=b=c=d=1",
            params: vec![unit("x"), unit("t"), nonzero("q")],
            sides: vec![
                side("t-sum", osler1111_t_sum),
                side("x-sum", osler1111_x_sum),
                side("mixed-t", osler1111_mixed_t),
                side("mixed-x", osler1111_mixed_x),
                side("symmetric", osler1111_symmetric),
            ],
        },
        IdentityEntry {
            name: "knuth-wrench",
            description: "Knuth–Wrench transformation with a_n = x^n",
            params: vec![unit("x"), nonzero("q")],
            sides: vec![
                side("lhs", knuth_wrench_power_lhs),
                side("closed", knuth_wrench_power_closed),
                side("truncated", knuth_wrench_power_truncated),
            ],
        },
        IdentityEntry {
            name: "xq-swap",
            description: "sum x q^n/(1 - x q^n) = sum x^n/(1 - q^n)",
            params: vec![unit("x"), nonzero("q")],
            sides: vec![side("lhs", xq_swap_lhs), side("rhs", xq_swap_rhs)],
        },
        IdentityEntry {
            name: "jordan-forms",
            description: "bilateral Jordan–Kronecker function and its theta forms",
            params: vec![unit("x"), unit("t"), nonzero("q")],
            sides: vec![
                side("direct", |p, c| jordan_direct(&bilateral_params(p, c)?, c)),
                side("theta", |p, c| jordan_theta(&bilateral_params(p, c)?, c)),
                side("form1", |p, c| jordan_form1(&bilateral_params(p, c)?, c)),
                side("form2", |p, c| jordan_form2(&bilateral_params(p, c)?, c)),
            ],
        },
    ]
}

pub fn find_identity(name: &str) -> Result<IdentityEntry> {
    registry()
        .into_iter()
        .find(|e| e.name == name)
        .ok_or_else(|| Error::UnknownIdentity(name.to_string()))
}

/// Samples `trials` points and reports the worst pairwise deviation.
///
/// Trial `i` draws from an [`Lcg`] seeded with `seed + i`; points where a
/// side reports a pole or domain violation are redrawn whole.
pub fn check_identity(name: &str, trials: u32, seed: i64, ctx: &RealContext) -> Result<IdentityReport> {
    let entry = find_identity(name)?;
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let outcomes: Vec<Result<(BigReal, Point)>> = (0..trials)
        .into_par_iter()
        .map(|i| run_trial(&entry, seed.wrapping_add(i as i64) as u64, ctx))
        .collect();

    let mut worst: Option<(BigReal, Point)> = None;
    for outcome in outcomes {
        let (d, point) = outcome?;
        if worst.as_ref().map_or(true, |(w, _)| d > *w) {
            worst = Some((d, point));
        }
    }
    let (worst_deviation, worst_point) = worst.expect("trials >= 1");
    let pass = worst_deviation <= IdentityReport::threshold(ctx);
    Ok(IdentityReport {
        name: entry.name.to_string(),
        trials,
        seed,
        target_digits: ctx.target_digits(),
        worst_deviation,
        worst_point,
        pass,
    })
}

fn run_trial(entry: &IdentityEntry, seed: u64, ctx: &RealContext) -> Result<(BigReal, Point)> {
    let mut rng = Lcg::new(seed);
    for _ in 0..MAX_ATTEMPTS {
        let point = entry.sample(&mut rng, ctx);
        if !entry.admissible(&point) {
            continue;
        }
        match entry.deviation(&point, ctx) {
            Ok(d) => return Ok((d, point)),
            Err(Error::Pole(_) | Error::Domain(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::DegenerateDomain(format!(
        "{}: no admissible point in {MAX_ATTEMPTS} draws",
        entry.name
    )))
}

fn sum_terms<F>(decay: Decay, start: i64, ctx: &RealContext, f: F) -> Result<SeriesValue>
where
    F: FnMut(i64) -> Result<BigReal>,
{
    sum_series(&mut FnTerms::new(decay, f), start, ctx)
}

fn qxt(p: &Point, ctx: &RealContext) -> Result<QxtParams> {
    QxtParams::new(p.real("x").clone(), p.real("t").clone(), p.real("q").clone(), ctx)
}

fn bilateral_params(p: &Point, ctx: &RealContext) -> Result<BilateralParams> {
    BilateralParams::new(p.real("x").clone(), p.real("t").clone(), p.real("q").clone(), ctx)
}

fn fine_f_side(p: &Point, ctx: &RealContext) -> Result<SeriesValue> {
    fine_f(p.real("a"), p.real("b"), p.real("t"), p.real("q"), ctx)
}

fn scaled_fine_f(p: &Point, ctx: &RealContext) -> Result<SeriesValue> {
    Ok(fine_f_side(p, ctx)?.scaled(&(ctx.one() - p.real("t"))))
}

/// `sum_{n>=0} (aq;q)_n (atq/b;q)_n / ((bq;q)_n (tq;q)_n) (1 - a t q^(2n+1)) b^n t^n q^(n^2)`,
/// with `(atq/b;q)_n b^n` expanded as `prod_{k<n} (b - a t q^(k+1))`.
pub fn rogers_fine_rhs(p: &Point, ctx: &RealContext) -> Result<SeriesValue> {
    let (a, b, t, q) = (p.real("a"), p.real("b"), p.real("t"), p.real("q"));
    require_unit_disk("q", q, ctx)?;
    require_unit_disk("t", t, ctx)?;
    let one = ctx.one();
    let at = a * t;
    let q_sq = q * q;
    let (aa, ab, at_abs, aq) = (a.abs(), b.abs(), t.abs(), q.abs());
    let factor = &(&(&(&one + &(&aa * &aq)) * &(&ab + &(&(&aa * &at_abs) * &aq))) * &at_abs)
        * &(&(&one + &(&at.abs() * &aq)) / &(&(&(&one - &(&ab * &aq)) * &(&one - &(&at_abs * &aq))) * &(&one - &(&at.abs() * &aq))));
    let mut prefix = ctx.one();
    let mut q_pow = ctx.one(); // q^n
    let mut odd = q.clone(); // q^(2n+1)
    sum_terms(Decay::theta_with_factor(q.clone(), factor), 0, ctx, |_n| {
        let term = &prefix * &(&one - &(&at * &odd));
        let qn1 = &q_pow * q;
        let num = &(&(&one - &(a * &qn1)) * &(b - &(&at * &qn1))) * &(t * &odd);
        let den = &(&one - &(b * &qn1)) * &(&one - &(t * &qn1));
        if den.is_zero() {
            return Err(Error::Pole("1 - b q^n or 1 - t q^n vanishes".into()));
        }
        prefix = &(&prefix * &num) / &den;
        q_pow = qn1;
        odd = &odd * &q_sq;
        Ok(term)
    })
}

/// `sum_{n>=0} prod_{k<n}(a - b q^k) / ((bq;q)_n (tq;q)_n) (-t)^n q^((n^2+n)/2)`.
pub fn fine_second_rhs(p: &Point, ctx: &RealContext) -> Result<SeriesValue> {
    let (a, b, t, q) = (p.real("a"), p.real("b"), p.real("t"), p.real("q"));
    require_unit_disk("q", q, ctx)?;
    require_unit_disk("t", t, ctx)?;
    let one = ctx.one();
    let neg_t = -t.clone();
    let aq = q.abs();
    let root = aq.sqrt();
    let factor = &(&(&(&a.abs() + &b.abs()) * &t.abs()) * &root)
        / &(&(&one - &(&b.abs() * &aq)) * &(&one - &(&t.abs() * &aq)));
    let mut prefix = ctx.one();
    let mut q_pow = ctx.one();
    sum_terms(Decay::theta_with_factor(root, factor), 0, ctx, |_n| {
        let term = prefix.clone();
        let qn1 = &q_pow * q;
        let den = &(&one - &(b * &qn1)) * &(&one - &(t * &qn1));
        if den.is_zero() {
            return Err(Error::Pole("1 - b q^n or 1 - t q^n vanishes".into()));
        }
        prefix = &(&(&prefix * &(a - &(b * &q_pow))) * &(&neg_t * &qn1)) / &den;
        q_pow = qn1;
        Ok(term)
    })
}

/// `(aq;q)_inf / (bq;q)_inf * sum_{n>=0} prod_{k<n}(a - b q^k) q^n / ((q;q)_n (1 - t q^n))`.
pub fn fine_sixteen_rhs(p: &Point, ctx: &RealContext) -> Result<SeriesValue> {
    certified(ctx, |c| fine_sixteen_rhs_at(&p.in_context(c), c))
}

fn fine_sixteen_rhs_at(p: &Point, ctx: &RealContext) -> Result<SeriesValue> {
    let (a, b, t, q) = (p.real("a"), p.real("b"), p.real("t"), p.real("q"));
    require_unit_disk("q", q, ctx)?;
    require_unit_disk("t", t, ctx)?;
    if a.is_zero() {
        return Err(Error::Domain("a must be nonzero".into()));
    }
    let one = ctx.one();
    // term n is (a q)^n prod_{k<n} (1 - (b/a) q^k) / (1 - q^(k+1)) / (1 - t q^n);
    // factor k >= n is at most 1 / (1 - (|b/a| + |q|) |q|^k)
    let b_over_a = b / a;
    let running = &(&b_over_a.abs() + &q.abs()) / &(&one - &q.abs());
    let coeff = &running + &product_envelope(&[t], ctx);
    let decay = Decay::geometric(a * q).with_envelope(coeff, q.clone());
    let mut ratio = ctx.one();
    let mut q_pow = ctx.one();
    let series = sum_terms(decay, 0, ctx, |_n| {
        let den = &one - &(t * &q_pow);
        if den.is_zero() {
            return Err(Error::Pole("1 - t q^n vanishes".into()));
        }
        let term = &ratio / &den;
        let qn1 = &q_pow * q;
        ratio = &(&ratio * &(&(a - &(b * &q_pow)) * q)) / &(&one - &qn1);
        q_pow = qn1;
        Ok(term)
    })?;
    let top = qpochhammer_inf(&(a * q), q, ctx)?;
    let bottom = qpochhammer_inf(&(b * q), q, ctx)?;
    Ok(top.quotient(&bottom, "product")?.product(&series, "rhs"))
}

fn symm_lhs(p: &Point, ctx: &RealContext) -> Result<SeriesValue> {
    series_qxt_lhs(&qxt(p, ctx)?, ctx)
}

fn symm_rhs(p: &Point, ctx: &RealContext) -> Result<SeriesValue> {
    series_qxt_lhs(&qxt(p, ctx)?.swapped(), ctx)
}

/// `sum_{n>=0} t^n / (x;q)_(n+1)`.
pub fn pochhammer_sum(x: &BigReal, t: &BigReal, q: &BigReal, ctx: &RealContext) -> Result<SeriesValue> {
    require_unit_disk("q", q, ctx)?;
    require_unit_disk("x", x, ctx)?;
    require_unit_disk("t", t, ctx)?;
    let one = ctx.one();
    let mut term = &one / &(&one - x);
    let mut xq = x.clone();
    let decay = Decay::geometric(t.clone()).with_envelope(pochhammer_envelope(&[x], q, ctx), q.clone());
    sum_terms(decay, 0, ctx, |_n| {
        let current = term.clone();
        xq = &xq * q;
        term = &(&term * t) / &(&one - &xq);
        Ok(current)
    })
}

fn poch_symm_lhs(p: &Point, ctx: &RealContext) -> Result<SeriesValue> {
    pochhammer_sum(p.real("x"), p.real("t"), p.real("q"), ctx)
}

fn poch_symm_rhs(p: &Point, ctx: &RealContext) -> Result<SeriesValue> {
    pochhammer_sum(p.real("t"), p.real("x"), p.real("q"), ctx)
}

fn gosper_poch_lhs(p: &Point, ctx: &RealContext) -> Result<SeriesValue> {
    certified(ctx, |c| gosper_poch_lhs_at(&p.in_context(c), c))
}

fn gosper_poch_lhs_at(p: &Point, ctx: &RealContext) -> Result<SeriesValue> {
    let (x, t, q) = (p.real("x"), p.real("t"), p.real("q"));
    let sum = pochhammer_sum(x, t, q, ctx)?;
    let tx = qpochhammer_inf(t, q, ctx)?.product(&qpochhammer_inf(x, q, ctx)?, "product");
    let qq = qpochhammer_inf(q, q, ctx)?;
    Ok(tx.quotient(&qq, "product")?.product(&sum, "lhs"))
}

/// `sum_{n>=0} (t;q)_n (x;q)_n / (q;q)_n q^n`.
fn gosper_poch_rhs(p: &Point, ctx: &RealContext) -> Result<SeriesValue> {
    let (x, t, q) = (p.real("x"), p.real("t"), p.real("q"));
    require_unit_disk("q", q, ctx)?;
    let one = ctx.one();
    let mut term = ctx.one();
    let mut q_pow = ctx.one();
    // step n multiplies by (1 - t q^n)(1 - x q^n) q / (1 - q^(n+1)), whose
    // non-weight part is at most 1 / (1 - (|t| + |x| + |q|) |q|^n)
    let coeff = &(&(&t.abs() + &x.abs()) + &q.abs()) / &(&one - &q.abs());
    let decay = Decay::geometric(q.clone()).with_envelope(coeff, q.clone());
    sum_terms(decay, 0, ctx, |_n| {
        let current = term.clone();
        let qn1 = &q_pow * q;
        term = &(&(&(&term * &(&one - &(t * &q_pow))) * &(&one - &(x * &q_pow))) * q) / &(&one - &qn1);
        q_pow = qn1;
        Ok(current)
    })
}

/// `sum_{n>=0} alpha^n q^(d(an+b)) / (1 - beta q^(c(an+b)))`.
pub fn osler_sum(
    alpha: &BigReal,
    beta: &BigReal,
    q: &BigReal,
    [a, b, c, d]: [i64; 4],
    ctx: &RealContext,
) -> Result<SeriesValue> {
    require_unit_disk("q", q, ctx)?;
    require_osler_exponents([a, b, c, d])?;
    let one = ctx.one();
    let mut weight = q.powi(d * b);
    let step = alpha * &q.powi(d * a);
    let mut den_pow = q.powi(c * b);
    let den_step = q.powi(c * a);
    // c (a n + b) >= n
    let decay = Decay::geometric(step.clone()).with_envelope(product_envelope(&[beta], ctx), q.clone());
    sum_terms(decay, 0, ctx, |_n| {
        let den = &one - &(beta * &den_pow);
        if den.is_zero() {
            return Err(Error::Pole("1 - beta q^k vanishes".into()));
        }
        let term = &weight / &den;
        weight = &weight * &step;
        den_pow = &den_pow * &den_step;
        Ok(term)
    })
}

fn require_osler_exponents([a, b, c, d]: [i64; 4]) -> Result<()> {
    if a < 1 || c < 1 || b < 0 || d < 0 {
        return Err(Error::InvalidArgument("exponents need a, c >= 1 and b, d >= 0".into()));
    }
    Ok(())
}

fn osler_exponents(p: &Point) -> [i64; 4] {
    [p.int("a"), p.int("b"), p.int("c"), p.int("d")]
}

fn osler_lhs(p: &Point, ctx: &RealContext) -> Result<SeriesValue> {
    osler_sum(p.real("alpha"), p.real("beta"), p.real("q"), osler_exponents(p), ctx)
}

fn osler_rhs(p: &Point, ctx: &RealContext) -> Result<SeriesValue> {
    let [a, b, c, d] = osler_exponents(p);
    osler_sum(p.real("beta"), p.real("alpha"), p.real("q"), [c, d, a, b], ctx)
}

/// `sum_{n>=0} alpha^n beta^n q^((an+b)(cn+d)) [1/(1 - beta q^(c(an+b)))
///   + alpha q^(a(cn+d)) / (1 - alpha q^(a(cn+d)))]`.
pub fn osler_combined_sum(
    alpha: &BigReal,
    beta: &BigReal,
    q: &BigReal,
    [a, b, c, d]: [i64; 4],
    ctx: &RealContext,
) -> Result<SeriesValue> {
    require_unit_disk("q", q, ctx)?;
    require_osler_exponents([a, b, c, d])?;
    let one = ctx.one();
    let ab = alpha * beta;
    let base = q.powi(a * c);
    let factor = &ab * &q.powi(a * d + b * c);
    let mut weight = q.powi(b * d);
    let mut step = &ab * &q.powi(a * c + a * d + b * c);
    let step_step = q.powi(2 * a * c);
    let mut beta_pow = q.powi(c * b);
    let beta_step = q.powi(c * a);
    let mut alpha_pow = q.powi(a * d);
    let alpha_step = q.powi(a * c);
    let decay = Decay::theta_with_factor(base, factor)
        .with_envelope(pole_sum_envelope(&[alpha, beta], &one, ctx), q.clone());
    sum_terms(decay, 0, ctx, |_n| {
        let d1 = &one - &(beta * &beta_pow);
        let aq = alpha * &alpha_pow;
        let d2 = &one - &aq;
        if d1.is_zero() || d2.is_zero() {
            return Err(Error::Pole("Osler denominator vanishes".into()));
        }
        let term = &weight * &(&(&one / &d1) + &(&aq / &d2));
        weight = &weight * &step;
        step = &step * &step_step;
        beta_pow = &beta_pow * &beta_step;
        alpha_pow = &alpha_pow * &alpha_step;
        Ok(term)
    })
}

fn osler_combined(p: &Point, ctx: &RealContext) -> Result<SeriesValue> {
    osler_combined_sum(p.real("alpha"), p.real("beta"), p.real("q"), osler_exponents(p), ctx)
}

/// `t sum_{n>=1} x^n q^n / (1 - t q^n)`.
fn osler1111_single(x: &BigReal, t: &BigReal, q: &BigReal, ctx: &RealContext) -> Result<SeriesValue> {
    require_unit_disk("q", q, ctx)?;
    let one = ctx.one();
    let xq = x * q;
    let mut num = ctx.one();
    let mut q_pow = ctx.one();
    let decay = Decay::geometric(xq.clone()).with_envelope(product_envelope(&[t], ctx), q.clone());
    let sum = sum_terms(decay, 1, ctx, |_n| {
        num = &num * &xq;
        q_pow = &q_pow * q;
        Ok(&num / &(&one - &(t * &q_pow)))
    })?;
    Ok(sum.scaled(t))
}

/// `sum_{n>=1} (x t)^n q^(n^2) [1/(1 - t q^n) + x q^n / (1 - x q^n)]`.
fn osler1111_mixed(x: &BigReal, t: &BigReal, q: &BigReal, ctx: &RealContext) -> Result<SeriesValue> {
    require_unit_disk("q", q, ctx)?;
    let one = ctx.one();
    let xt = x * t;
    let q_sq = q * q;
    let mut weight = ctx.one();
    let mut step = q.clone();
    let mut q_pow = ctx.one();
    let decay = Decay::theta_with_factor(q.clone(), xt.clone()).with_envelope(pole_sum_envelope(&[t, x], q, ctx), q.clone());
    sum_terms(decay, 1, ctx, |_n| {
        weight = &(&weight * &xt) * &step;
        step = &step * &q_sq;
        q_pow = &q_pow * q;
        let xq = x * &q_pow;
        let bracket = &(&one / &(&one - &(t * &q_pow))) + &(&xq / &(&one - &xq));
        Ok(&weight * &bracket)
    })
}

fn osler1111_t_sum(p: &Point, ctx: &RealContext) -> Result<SeriesValue> {
    osler1111_single(p.real("x"), p.real("t"), p.real("q"), ctx)
}

fn osler1111_x_sum(p: &Point, ctx: &RealContext) -> Result<SeriesValue> {
    osler1111_single(p.real("t"), p.real("x"), p.real("q"), ctx)
}

fn osler1111_mixed_t(p: &Point, ctx: &RealContext) -> Result<SeriesValue> {
    osler1111_mixed(p.real("x"), p.real("t"), p.real("q"), ctx)
}

fn osler1111_mixed_x(p: &Point, ctx: &RealContext) -> Result<SeriesValue> {
    osler1111_mixed(p.real("t"), p.real("x"), p.real("q"), ctx)
}

/// `sum_{n>=1} (1 - x t q^(2n)) / ((1 - x q^n)(1 - t q^n)) (x t)^n q^(n^2)`.
fn osler1111_symmetric(p: &Point, ctx: &RealContext) -> Result<SeriesValue> {
    let (x, t, q) = (p.real("x"), p.real("t"), p.real("q"));
    require_unit_disk("q", q, ctx)?;
    let one = ctx.one();
    let xt = x * t;
    let q_sq = q * q;
    let mut weight = ctx.one();
    let mut step = q.clone();
    let mut q_pow = ctx.one();
    let decay = Decay::theta_with_factor(q.clone(), xt.clone()).with_envelope(product_envelope(&[&xt, x, t], ctx), q.clone());
    sum_terms(decay, 1, ctx, |_n| {
        weight = &(&weight * &xt) * &step;
        step = &step * &q_sq;
        q_pow = &q_pow * q;
        let num = &one - &(&xt * &(&q_pow * &q_pow));
        let den = &(&one - &(x * &q_pow)) * &(&one - &(t * &q_pow));
        Ok(&(&num / &den) * &weight)
    })
}

/// Coefficient sequence `a_n` for the Knuth–Wrench transformation, with
/// `|a_(n+1)| <= growth * |a_n|` eventually.
pub struct Coefficients<'a> {
    pub term: &'a (dyn Fn(i64, &RealContext) -> BigReal + Sync),
    pub growth: BigReal,
}

/// `sum_{n>=1} a_n q^n / (1 - q^n)`.
pub fn knuth_wrench_lhs(a: &Coefficients<'_>, q: &BigReal, ctx: &RealContext) -> Result<SeriesValue> {
    require_unit_disk("q", q, ctx)?;
    if q.is_zero() {
        return Ok(SeriesValue::exact(ctx.zero(), ctx, "naive"));
    }
    let one = ctx.one();
    let mut q_pow = ctx.one();
    let decay = Decay::geometric(&a.growth * q).with_envelope(product_envelope(&[&one], ctx), q.clone());
    Ok(sum_terms(decay, 1, ctx, |n| {
        q_pow = &q_pow * q;
        Ok(&(&(a.term)(n, ctx) * &q_pow) / &(&one - &q_pow))
    })?
    .tagged("naive"))
}

/// `sum_{n>=1} [a_n + sum_{k>=1} (a_n + a_(n+k)) q^(kn)] q^(n^2)`, each inner
/// sum truncated with its own certified bound. The `a_n` part of the inner
/// sum is geometric and taken in closed form.
pub fn knuth_wrench_rhs(a: &Coefficients<'_>, q: &BigReal, ctx: &RealContext) -> Result<SeriesValue> {
    require_unit_disk("q", q, ctx)?;
    if q.is_zero() {
        return Ok(SeriesValue::exact(ctx.zero(), ctx, "theta"));
    }
    if &a.growth * &q.abs() >= ctx.one() {
        return Err(Error::Domain("coefficient growth times |q| must be below 1".into()));
    }
    // inner bounds are weighted by |q|^(n^2) <= |q|, so ε/100 each keeps their sum below ε/10
    let inner_ctx = ctx.refined(2);
    let q_sq = q * q;
    let mut q_pow = ctx.one();
    let mut weight = ctx.one();
    let mut step = q.clone();
    let mut inner_bound = ctx.zero();
    let mut inner_terms = 0;
    // bracket / a_n = 1/(1 - q^n) + sum_k (a_(n+k)/a_n) q^(kn), a pole sum in (1, growth)
    let envelope = pole_sum_envelope(&[&ctx.one(), &a.growth], q, ctx);
    let decay = Decay::theta_with_factor(q.clone(), a.growth.clone()).with_envelope(envelope, q.clone());
    let outer = sum_terms(decay, 1, ctx, |n| {
        q_pow = &q_pow * q;
        weight = &weight * &step;
        step = &step * &q_sq;
        let a_n = (a.term)(n, &inner_ctx);
        let qn = q_pow.in_context(&inner_ctx);
        let mut qkn = inner_ctx.one();
        let inner = sum_terms(Decay::geometric(&a.growth * &qn), 1, &inner_ctx, |k| {
            qkn = &qkn * &qn;
            Ok(&(a.term)(n + k, &inner_ctx) * &qkn)
        })?;
        inner_bound = &inner_bound + &(&inner.tail_bound * &weight.abs());
        inner_terms += inner.terms_used;
        let geometric = &(&a_n * &qn) / &(&inner_ctx.one() - &qn);
        let bracket = (&(&a_n + &geometric) + &inner.value).in_context(ctx);
        Ok(&bracket * &weight)
    })?;
    Ok(SeriesValue {
        value: outer.value,
        terms_used: outer.terms_used + inner_terms,
        tail_bound: (&outer.tail_bound + &inner_bound).in_context(ctx),
        method_tag: "truncated".into(),
    })
}

fn power_coefficients<'a>(x: &'a BigReal, f: &'a (dyn Fn(i64, &RealContext) -> BigReal + Sync)) -> Coefficients<'a> {
    Coefficients {
        term: f,
        growth: x.abs(),
    }
}

fn knuth_wrench_power_lhs(p: &Point, ctx: &RealContext) -> Result<SeriesValue> {
    let x = p.real("x");
    let f = |n: i64, c: &RealContext| x.in_context(c).powi(n);
    knuth_wrench_lhs(&power_coefficients(x, &f), p.real("q"), ctx)
}

fn knuth_wrench_power_truncated(p: &Point, ctx: &RealContext) -> Result<SeriesValue> {
    let x = p.real("x");
    let f = |n: i64, c: &RealContext| x.in_context(c).powi(n);
    knuth_wrench_rhs(&power_coefficients(x, &f), p.real("q"), ctx)
}

/// `sum_{n>=1} [1/(1 - q^n) + x q^n / (1 - x q^n)] x^n q^(n^2)`.
fn knuth_wrench_power_closed(p: &Point, ctx: &RealContext) -> Result<SeriesValue> {
    let (x, q) = (p.real("x"), p.real("q"));
    require_unit_disk("q", q, ctx)?;
    let one = ctx.one();
    let q_sq = q * q;
    let mut q_pow = ctx.one();
    let mut weight = ctx.one();
    let mut step = q.clone();
    let decay = Decay::theta_with_factor(q.clone(), x.clone()).with_envelope(pole_sum_envelope(&[&one, x], q, ctx), q.clone());
    sum_terms(decay, 1, ctx, |_n| {
        q_pow = &q_pow * q;
        weight = &(&weight * x) * &step;
        step = &step * &q_sq;
        let xq = x * &q_pow;
        let bracket = &(&one / &(&one - &q_pow)) + &(&xq / &(&one - &xq));
        Ok(&bracket * &weight)
    })
}

/// `sum_{n>=0} x q^n / (1 - x q^n)`.
fn xq_swap_lhs(p: &Point, ctx: &RealContext) -> Result<SeriesValue> {
    let (x, q) = (p.real("x"), p.real("q"));
    require_unit_disk("q", q, ctx)?;
    require_unit_disk("x", x, ctx)?;
    let one = ctx.one();
    let mut xq = x.clone();
    let decay = Decay::geometric(q.clone()).with_envelope(product_envelope(&[x], ctx), q.clone());
    sum_terms(decay, 0, ctx, |_n| {
        let term = &xq / &(&one - &xq);
        xq = &xq * q;
        Ok(term)
    })
}

/// `sum_{n>=1} x^n / (1 - q^n)`.
fn xq_swap_rhs(p: &Point, ctx: &RealContext) -> Result<SeriesValue> {
    let (x, q) = (p.real("x"), p.real("q"));
    require_unit_disk("q", q, ctx)?;
    require_unit_disk("x", x, ctx)?;
    let one = ctx.one();
    let mut x_pow = ctx.one();
    let mut q_pow = ctx.one();
    let decay = Decay::geometric(x.clone()).with_envelope(product_envelope(&[&one], ctx), q.clone());
    sum_terms(decay, 1, ctx, |_n| {
        x_pow = &x_pow * x;
        q_pow = &q_pow * q;
        Ok(&x_pow / &(&one - &q_pow))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lambert::lambert_naive;
    use crate::numerics::make_context;

    fn real_point(c: &RealContext, pairs: &[(&'static str, &str)]) -> Point {
        pairs
            .iter()
            .fold(Point::new(), |p, (n, v)| p.with_real(n, c.parse(v).unwrap()))
    }

    #[test]
    fn lcg_sequence() {
        let mut rng = Lcg::new(0);
        assert_eq!(rng.next_u64(), 1442695040888963407);
        assert_eq!(rng.next_u64(), 1876011003808476466);
    }

    #[test]
    fn sampler_range_and_grid() {
        let c = make_context(30).unwrap();
        let mut rng = Lcg::new(42);
        let bound = c.parse("0.9").unwrap();
        for _ in 0..2000 {
            let v = rng.next_unit(&c);
            assert!(v.abs() <= bound);
            let (_, exp) = v.to_parts();
            assert!(exp >= -12);
            let k = rng.next_int(1, 4);
            assert!((1..=4).contains(&k));
        }
    }

    #[test]
    fn registry_names() {
        let names: Vec<_> = registry().iter().map(|e| e.name).collect();
        assert_eq!(
            names,
            [
                "rogers-fine",
                "symm",
                "fine-12.2",
                "fine-16.3",
                "poch-symm",
                "gosper-poch",
                "osler",
                "osler-1111",
                "knuth-wrench",
                "xq-swap",
                "jordan-forms"
            ]
        );
        for e in registry() {
            assert!(e.sides.len() >= 2, "{}", e.name);
        }
    }

    #[test]
    fn rogers_fine_collapses_at_a_equals_b() {
        let c = make_context(30).unwrap();
        let p = real_point(&c, &[("a", "0.35"), ("b", "0.35"), ("t", "-0.6"), ("q", "0.7")]);
        let tol = c.epsilon() * &c.int(2);
        for v in find_identity("rogers-fine").unwrap().evaluate(&p, &c).unwrap() {
            assert!((&v.value - &c.one()).abs() <= tol, "{}", v.value);
        }
    }

    #[test]
    fn fine_f_matches_rogers_fine_over_one_minus_t() {
        let c = make_context(30).unwrap();
        let p = real_point(&c, &[("a", "0.2"), ("b", "0.4"), ("t", "0.3"), ("q", "0.5")]);
        let f = fine_f_side(&p, &c).unwrap().value;
        let rhs = rogers_fine_rhs(&p, &c).unwrap().value / (c.one() - c.parse("0.3").unwrap());
        assert!((f - rhs).abs() <= c.epsilon() * &c.int(2));
    }

    #[test]
    fn fine_second_transformation_needs_b_over_a() {
        // With (b/q;q)_n in place of (b/a;q)_n the right side misses by about 0.05.
        let c = make_context(30).unwrap();
        let p = real_point(&c, &[("a", "0.2"), ("b", "0.4"), ("t", "0.3"), ("q", "0.5")]);
        let (a, b, t, q) = (p.real("a"), p.real("b"), p.real("t"), p.real("q"));
        let mut total = c.zero();
        for n in 0..80u64 {
            let num = crate::qcore::qpochhammer_n(&(b / q), q, n, &c);
            let den = crate::qcore::qpochhammer_n(&(b * q), q, n, &c)
                * crate::qcore::qpochhammer_n(&(t * q), q, n, &c);
            let n = n as i64;
            total = total + num / den * (-(a * t)).powi(n) * q.powi((n * n + n) / 2);
        }
        let lhs = scaled_fine_f(&p, &c).unwrap().value;
        assert!((&total - &lhs).abs() > c.parse("0.01").unwrap());
        let rhs = fine_second_rhs(&p, &c).unwrap().value;
        assert!((&rhs - &lhs).abs() <= c.epsilon() * &c.int(2), "{} vs {}", rhs, lhs);
    }

    #[test]
    fn osler_trivial_exponents_match_symm() {
        let c = make_context(30).unwrap();
        let (x, t, q) = ("0.45", "-0.7", "0.62");
        let osler = real_point(&c, &[("alpha", x), ("beta", t), ("q", q)])
            .with_int("a", 1)
            .with_int("b", 0)
            .with_int("c", 1)
            .with_int("d", 0);
        let symm = real_point(&c, &[("x", t), ("t", x), ("q", q)]);
        // alpha^n / (1 - beta q^n) is the qxt summand with x = beta, t = alpha
        let tol = c.epsilon() * &c.int(2);
        let d = osler_lhs(&osler, &c).unwrap().value - symm_lhs(&symm, &c).unwrap().value;
        assert!(d.abs() <= tol);
        let d = osler_rhs(&osler, &c).unwrap().value - symm_rhs(&symm, &c).unwrap().value;
        assert!(d.abs() <= tol);
    }

    #[test]
    fn osler_sides_agree_at_fixed_exponents() {
        let c = make_context(30).unwrap();
        let entry = find_identity("osler").unwrap();
        for [a, b, cc, d] in [[2, 1, 3, 0], [1, 1, 1, 1], [4, 0, 2, 3]] {
            let p = real_point(&c, &[("alpha", "0.5"), ("beta", "-0.3"), ("q", "0.6")])
                .with_int("a", a)
                .with_int("b", b)
                .with_int("c", cc)
                .with_int("d", d);
            assert!(entry.deviation(&p, &c).unwrap() <= c.epsilon() * &c.int(4));
        }
    }

    #[test]
    fn knuth_wrench_constant_sequence_is_lambert() {
        let c = make_context(30).unwrap();
        let one = |_: i64, c: &RealContext| c.one();
        let coeffs = Coefficients { term: &one, growth: c.one() };
        let tol = c.epsilon() * &c.int(4);
        for q in ["0.3", "-0.6", "0.85"] {
            let q = c.parse(q).unwrap();
            let l = lambert_naive(&q, &c).unwrap().value;
            assert!((knuth_wrench_lhs(&coeffs, &q, &c).unwrap().value - &l).abs() <= tol);
            assert!((knuth_wrench_rhs(&coeffs, &q, &c).unwrap().value - &l).abs() <= tol);
        }
    }

    #[test]
    fn knuth_wrench_divisor_sums() {
        // a_n = n gives sum sigma(n) q^n
        let c = make_context(30).unwrap();
        let n_seq = |n: i64, c: &RealContext| c.int(n);
        let coeffs = Coefficients { term: &n_seq, growth: c.parse("1.01").unwrap() };
        let q = c.parse("0.5").unwrap();
        let lhs = knuth_wrench_lhs(&coeffs, &q, &c).unwrap().value;
        let rhs = knuth_wrench_rhs(&coeffs, &q, &c).unwrap().value;
        assert!((&lhs - &rhs).abs() <= c.epsilon() * &c.int(4));
        let sigma = [1i64, 3, 4, 7, 6, 12, 8, 15, 13, 18];
        let mut head = c.zero();
        for (i, s) in sigma.iter().enumerate() {
            head = head + c.int(*s) * q.powi(i as i64 + 1);
        }
        // the remaining terms sum to less than sum_{n>10} n^2 2^-n < 0.2
        let gap = &lhs - &head;
        assert!(!gap.is_negative() && gap < c.parse("0.2").unwrap());
    }

    #[test]
    fn checks_are_deterministic() {
        let c = make_context(30).unwrap();
        let a = check_identity("symm", 12, 42, &c).unwrap();
        let b = check_identity("symm", 12, 42, &c).unwrap();
        assert_eq!(a, b);
        assert!(a.pass && a.recompute_pass(&c));
    }

    #[test]
    fn every_identity_passes_a_short_battery() {
        let c = make_context(30).unwrap();
        for e in registry() {
            let r = check_identity(e.name, 8, 7, &c).unwrap_or_else(|err| panic!("{}: {err}", e.name));
            assert!(r.pass, "{} deviates by {}", e.name, r.worst_deviation);
        }
    }

    #[test]
    fn unknown_and_invalid_requests() {
        let c = make_context(30).unwrap();
        assert!(matches!(check_identity("nope", 1, 0, &c), Err(Error::UnknownIdentity(_))));
        assert!(matches!(check_identity("symm", 0, 0, &c), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn report_json_uses_strings() {
        let c = make_context(30).unwrap();
        let r = check_identity("xq-swap", 2, 1, &c).unwrap();
        let json: serde_json::Value = serde_json::to_value(&r).unwrap();
        assert!(json["worst_deviation"].is_string());
        assert!(json["worst_point"]["x"].is_string());
        assert_eq!(json["pass"], serde_json::Value::Bool(true));
    }
}
