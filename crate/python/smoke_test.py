"""Quick end-to-end check of the Python bindings.

Build first:  pip install --no-build-isolation -e crates/python
Then run:     python python/smoke_test.py
"""
from fractions import Fraction

import mpmath

import lambertq as lq

mpmath.mp.dps = 60


def close(value, expected, digits):
    return abs(mpmath.mpf(str(value)) - expected) < mpmath.mpf(10) ** (2 - digits)


def main():
    half = lq.lambert(Fraction(1, 2), digits=40)
    oracle = mpmath.nsum(lambda n: 0.5**n / (1 - 0.5**n), [1, mpmath.inf])
    assert close(half, oracle, 40), half
    assert half.value == lq.lambert("0.5", digits=40, method="naive").value
    assert half.terms_used < lq.lambert("0.5", digits=40, method="naive").terms_used

    x, t, q = "0.3", "0.2", "0.5"
    vals = {m: lq.qxt(x, t, q, method=m).value for m in ("naive", "theta", "alt")}
    assert len(set(vals.values())) == 1, vals

    forms = {m: lq.bilateral("0.5", "0.6", "0.2", method=m).value for m in ("direct", "theta", "form1", "form2")}
    assert len(set(forms.values())) == 1, forms

    t3 = lq.theta3(-0.3, digits=12)
    assert str(t3) == "0.416160642609", t3

    fib = lq.HoradamSequence(1, 1)
    assert [fib.term(n) for n in range(1, 8)] == [1, 1, 2, 3, 5, 8, 13]
    sums = {m: fib.recip_sum(digits=30, method=m).value for m in ("naive", "horadam", "gosper", "split")}
    assert len(set(sums.values())) == 1 and sums["split"].startswith("3.35988566"), sums
    assert lq.recip_sum(2, 1, digits=10).value.startswith("1.84220")

    report = lq.check_identity("symm", trials=10, seed=7)
    assert report and report.passed and "q" in report.worst_point, report
    assert "gosper-matrix" in lq.identity_names()

    bench = lq.bench("lambert", "1/2", digits=100)
    assert bench["consistent"] and bench["term_ratio"] > 10

    for bad in (lambda: lq.lambert("1.5"), lambda: lq.lambert("0.5", digits=5), lambda: lq.recip_sum(2, 1, method="gosper")):
        try:
            bad()
        except ValueError:
            pass
        else:
            raise AssertionError("expected ValueError")

    print("smoke test ok:", half)


if __name__ == "__main__":
    main()
