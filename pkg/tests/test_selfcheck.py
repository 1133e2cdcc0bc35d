from toric_workbench.selfcheck import CheckResult, check_names, run_selfcheck


def test_every_check_passes():
    results = run_selfcheck(sizes=(3, 5), samples=4, seed=1)
    assert [r.name for r in results] == check_names()
    failed = [str(r) for r in results if not r.passed]
    assert not failed


def test_expected_checks_are_registered():
    names = set(check_names())
    assert {
        "syndrome parity",
        "stabilizer invariance",
        "commutation",
        "twist homomorphism",
        "all twists",
        "exact invariance",
        "neural invariance",
        "average pooling control",
        "blossom optimality",
        "decoded class equivariance",
    } <= names


def test_result_formatting():
    assert str(CheckResult("parity", True, "ok")) == "PASS parity: ok"
    assert str(CheckResult("parity", False, "bad")) == "FAIL parity: bad"
