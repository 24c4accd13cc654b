"""Smoke test for the transformloc Python module.

Build and install first:
    pip install --no-build-isolation -e crates/python
"""

import json
import math

import transformloc as tl


def main():
    pose = tl.Pose(0.0, 0.0, 0.0)
    moved = tl.step_amav(pose, 1.0, math.pi / 2)
    assert abs(moved.x1 - 1.0) < 1e-12 and abs(moved.phi - math.pi / 2) < 1e-12

    r, a = tl.predict_observation(pose, (0.5, 0.0))
    assert abs(r - 0.5) < 1e-12 and abs(a) < 1e-12
    assert tl.fov_contains(pose, (0.5, 0.0))
    assert not tl.fov_contains(pose, (-0.5, 0.0))
    jac = tl.jacobian(pose, (0.5, 0.0))
    assert abs(jac[0][0] - 1.0) < 1e-12 and abs(jac[1][1] - 2.0) < 1e-12

    prior = tl.Belief((0.5, 0.1), [[0.01, 0.0], [0.0, 0.01]])
    grown = tl.predict(prior, (0.2, 0.0))
    assert grown.trace() > prior.trace()
    post = tl.correct(grown, tl.predict_observation(pose, grown.mean), pose)
    assert post.trace() < grown.trace()

    groups = tl.assign_groups([(0.0, 0.0), (10.0, 0.0)], [(1.0, 0.0), (2.0, 0.0)])
    assert groups["owner"] == [0, 0]
    assert groups["fallback"] == [False, True]
    assert groups["groups"][1] == [0, 1]

    start = tl.Pose(6.0, 6.0, 0.0)
    beliefs = [tl.Belief.at_launch((6.8, 6.0), 0.05), tl.Belief.at_launch((5.0, 6.0), 0.01)]
    commands, cost = tl.plan_amav(start, beliefs, [(0.0, 0.0), (0.0, 0.0)], "delta = 2\nbeam_width = 20\n")
    assert len(commands) == 2 and cost < sum(b.trace() for b in beliefs) + 1.0

    config = "horizon = 60\nbeam_width = 10\n[amav]\ncount = 2\n[bmav]\ncount = 6\n"
    runs = {s: tl.simulate(config, s, seed=3) for s in ("transformloc", "dead_reckoning")}
    assert runs["dead_reckoning"].observation_count() == 0
    assert runs["transformloc"].observation_count() > 0
    metrics = json.loads(runs["transformloc"].metrics_json())
    assert set(metrics) >= {"ate_mean", "ate_p50", "ate_p95", "ate_cdf", "success", "xi_T"}
    assert len(runs["transformloc"].ate_series) == 6
    header = runs["transformloc"].trace_csv().splitlines()[0]
    assert header.startswith("t,entity_kind,entity_id")

    try:
        tl.simulate("delta = 0\n")
    except ValueError as e:
        assert "delta" in str(e)
    else:
        raise AssertionError("invalid config accepted")

    for s, run in runs.items():
        print(f"{s}: mean ATE {run.ate_mean:.4f} m, p95 {run.ate_p95:.4f} m")
    print("smoke test passed")


if __name__ == "__main__":
    main()
