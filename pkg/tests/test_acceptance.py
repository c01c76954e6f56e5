"""End-to-end acceptance criteria.

Each criterion prints one ``criterion N: PASS|FAIL`` line.  Run with
``pytest tests/test_acceptance.py -v`` or directly with
``python tests/test_acceptance.py``.
"""

import functools
import sys
import time

import pytest

from lpsections import verify


@functools.lru_cache(maxsize=None)
def _cross_polytope_values():
    return tuple(verify.cross_polytope_section_checks(samples=1_000_000, seed=0))


def _select(checks, *prefixes):
    return [c for c in checks if c.check_id.startswith(prefixes)]


def criterion_1():
    checks, seconds = verify.timed(verify.exact_checks, n_max=50)
    checks.append(verify.Check("exact/runtime-seconds", seconds, 1.0, None, seconds < 1.0))
    return checks


def criterion_2():
    return _select(_cross_polytope_values(), "b14/diag")


def criterion_3():
    return _select(_cross_polytope_values(), "b14/E")


def criterion_4():
    return verify.schur_section_checks(samples=100_000, seed=0)


def criterion_5():
    return verify.laplace_checks(samples=100_000, seed=0)


def criterion_6():
    return verify.detlab_checks(samples=200_000, seed=0)


def criterion_7():
    return verify.lewis_checks(count=100, seed=0)


def criterion_8():
    return verify.invariance_checks(count=20, samples=100_000, seed=0)


def criterion_9():
    return verify.projection_checks(count=10, samples=10_000, seed=0)


def criterion_10():
    return verify.decomposition_checks(count=100, samples=10_000, seed=0)


def criterion_11():
    return verify.meanwidth_checks(samples=100_000, seed=0)


def criterion_12():
    return verify.calibration_checks(samples=200_000, seed=0)


CRITERIA = {
    1: ("exact counterexample inequalities n=2..50 in under a second", criterion_1),
    2: ("|B_1^4 cap H_diag| = 1 within 2% (10^6 samples)", criterion_2),
    3: ("|B_1^4 cap E| = 4(3 sqrt2 - 4) within 2% and below 1", criterion_3),
    4: ("section volumes ordered along majorization chains", criterion_4),
    5: ("Gaussian Laplace transforms ordered; p=2 closed form", criterion_5),
    6: ("determinant expectations: scalar example and Wishart chains", criterion_6),
    7: ("Lewis solver on 100 random measures per p", criterion_7),
    8: ("linear invariance of section ratios and det(T)^(n-1) scaling", criterion_8),
    9: ("projection lower bound |K|^(n-1) with equality at e1", criterion_9),
    10: ("decomposition identities, 1-symmetric bodies, Loomis-Whitney", criterion_10),
    11: ("mean widths along chains", criterion_11),
    12: ("polar estimator calibration and the m=2 bound", criterion_12),
}


def evaluate(number):
    title, fn = CRITERIA[number]
    start = time.perf_counter()
    checks = fn()
    elapsed = time.perf_counter() - start
    failed = [c for c in checks if not c.passed]
    status = "PASS" if checks and not failed else "FAIL"
    line = f"criterion {number}: {status} ({len(checks) - len(failed)}/{len(checks)} checks, {elapsed:.1f}s) {title}"
    return line, failed


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number, capsys):
    line, failed = evaluate(number)
    with capsys.disabled():
        print("\n" + line)
        for c in failed:
            print(f"    failed: {c.check_id} lhs={c.lhs!r} rhs={c.rhs!r} sigma_slack={c.sigma_slack!r}")
    assert not failed, line


def main():
    ok = True
    for number in sorted(CRITERIA):
        line, failed = evaluate(number)
        print(line, flush=True)
        ok &= not failed
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
