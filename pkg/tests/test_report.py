import json
import math

import pytest

from circumnav import report
from circumnav.sim import random_scenario, run


def test_on_circle_estimator_exact():
    assert report.on_circle_estimator_error(1.2, (0.3, -0.7), samples=500, seed=4) <= 1e-9


def test_rotation_equivariance():
    assert report.rotation_equivariance_error(random_scenario(3, 0), samples=200, seed=1) <= 1e-12


def test_summary_is_json_safe():
    log = run(random_scenario(3, 2, t_end=0.5))
    s = report.summarize(log, report.invariant_checks(log))
    data = json.loads(json.dumps(s.to_dict()))
    assert data["settling_btilde"] == "inf"
    assert data["n"] == 3 and len(data["checks"]) == len(s.checks)
    assert data["lambda2"] == pytest.approx(1 - math.cos(2 * math.pi / 3))


def test_check_names_are_unique():
    log = run(random_scenario(4, 1, t_end=2.0))
    names = [c.name for c in report.invariant_checks(log)]
    assert len(names) == len(set(names))
    assert {"pe_certificate", "perturbation_bound", "zero_sum_separation", "xtilde_bounded"} <= set(names)
