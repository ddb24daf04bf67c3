//! Side-by-side evaluation of a series by all of its methods, with term
//! counts and wall-clock timings.

use std::time::Instant;

use serde::Serialize;

use crate::error::Result;
use crate::identities::Point;
use crate::lambert::{
    glambert_lhs, glambert_theta, lambert_naive, lambert_theta, series_qxt_alt, series_qxt_lhs,
    series_qxt_rhs, QxtParams,
};
use crate::numerics::{format_real, BigReal, RealContext};
use crate::qcore::SeriesValue;

#[derive(Clone, Debug, PartialEq)]
pub enum BenchSeries {
    Lambert { q: BigReal },
    GLambert { x: BigReal, q: BigReal },
    Qxt { x: BigReal, t: BigReal, q: BigReal },
}

impl BenchSeries {
    pub fn name(&self) -> &'static str {
        match self {
            BenchSeries::Lambert { .. } => "lambert",
            BenchSeries::GLambert { .. } => "glambert",
            BenchSeries::Qxt { .. } => "qxt",
        }
    }

    pub fn params(&self) -> Point {
        match self {
            BenchSeries::Lambert { q } => Point::new().with_real("q", q.clone()),
            BenchSeries::GLambert { x, q } => Point::new().with_real("x", x.clone()).with_real("q", q.clone()),
            BenchSeries::Qxt { x, t, q } => Point::new()
                .with_real("x", x.clone())
                .with_real("t", t.clone())
                .with_real("q", q.clone()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MethodRecord {
    pub method_tag: String,
    pub terms_used: u64,
    pub elapsed_nanoseconds: u64,
    pub value: String,
    pub tail_bound: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchReport {
    pub series: String,
    pub params: Point,
    pub target_digits: u32,
    pub methods: Vec<MethodRecord>,
    /// Naive terms divided by the fewest terms of any other method.
    pub term_ratio: f64,
    /// Every pair of values agrees within `4 epsilon`.
    pub consistent: bool,
    #[serde(skip)]
    pub values: Vec<SeriesValue>,
}

impl BenchReport {
    pub fn terms(&self, method_tag: &str) -> Option<u64> {
        self.methods.iter().find(|m| m.method_tag == method_tag).map(|m| m.terms_used)
    }
}

type Method<'a> = Box<dyn Fn() -> Result<SeriesValue> + 'a>;

pub fn run_bench(series: &BenchSeries, ctx: &RealContext) -> Result<BenchReport> {
    let methods: Vec<Method> = match series {
        BenchSeries::Lambert { q } => vec![
            Box::new(move || lambert_naive(q, ctx)),
            Box::new(move || lambert_theta(q, ctx)),
        ],
        BenchSeries::GLambert { x, q } => vec![
            Box::new(move || glambert_lhs(x, q, ctx)),
            Box::new(move || glambert_theta(x, q, ctx)),
        ],
        BenchSeries::Qxt { x, t, q } => {
            let p = QxtParams::new(x.clone(), t.clone(), q.clone(), ctx)?;
            vec![
                Box::new({
                    let p = p.clone();
                    move || series_qxt_lhs(&p, ctx)
                }),
                Box::new({
                    let p = p.clone();
                    move || series_qxt_rhs(&p, ctx)
                }),
                Box::new(move || series_qxt_alt(&p, ctx)),
            ]
        }
    };

    let mut records = Vec::new();
    let mut values = Vec::new();
    for method in &methods {
        let start = Instant::now();
        let v = method()?;
        let elapsed = start.elapsed().as_nanos().min(u64::MAX as u128) as u64;
        records.push(MethodRecord {
            method_tag: v.method_tag.clone(),
            terms_used: v.terms_used,
            elapsed_nanoseconds: elapsed,
            value: format_real(&v.value, ctx),
            tail_bound: v.tail_bound.to_scientific(6),
        });
        values.push(v);
    }

    let tol = ctx.epsilon() * &ctx.int(4);
    let consistent = values
        .iter()
        .enumerate()
        .all(|(i, a)| values[i + 1..].iter().all(|b| (&a.value - &b.value).abs() <= tol));

    let naive = values[0].terms_used as f64;
    let fastest = values[1..].iter().map(|v| v.terms_used).min().unwrap_or(1).max(1) as f64;
    Ok(BenchReport {
        series: series.name().into(),
        params: series.params(),
        target_digits: ctx.target_digits(),
        methods: records,
        term_ratio: naive / fastest,
        consistent,
        values,
    })
}
