import math

import pytest
from hypothesis import given, settings, strategies as st

from sabrs import envs
from sabrs.nhs import (DURATION, GOAL, GUARD, INVARIANT, ControlInput, HybridState, ModelError, NhsModel,
                       apply_jump, integrate_step, is_goal, load_document, propagate)


def one_mode(flow, dim, **extra):
    mode = {"name": "q", "dim": dim, "flow": flow}
    mode.update(extra)
    return NhsModel({"modes": [mode], "initial": {"mode": "q", "x": [0.0] * dim}})


CHARGING = envs.build_charging("cluttered")


# --- integration ---------------------------------------------------------------

def test_single_integrator_exact():
    m = one_mode({"id": "single_integrator", "params": {"n": 1}}, 1, control_box={"lo": [-1], "hi": [1]})
    assert integrate_step(m, HybridState(0, (0.0,)), (1.0,), 1.0) == (1.0,)


def test_exponential_growth():
    m = one_mode({"id": "linear", "params": {"A": [[1.0]], "B": [[0.0]]}}, 1, control_box={"lo": [0], "hi": [0]})
    x = (1.0,)
    for _ in range(100):
        x = integrate_step(m, HybridState(0, x), (0.0,), 0.01)
    assert abs(x[0] - math.e) <= 1e-5


def test_clock_advances_exactly():
    m = one_mode({"id": "stationary", "params": {"n": 0, "m": 1}}, 1, clocks={"global": [0]},
                 control_box={"lo": [0], "hi": [0]})
    assert integrate_step(m, HybridState(0, (3.0,)), (0.0,), 0.5) == (3.5,)


def test_unknown_flow_is_model_error():
    with pytest.raises(ModelError, match="flow"):
        one_mode({"id": "warp_drive"}, 1)


def test_step_must_be_positive():
    m = one_mode({"id": "single_integrator"}, 1, control_box={"lo": [-1], "hi": [1]})
    with pytest.raises(ValueError):
        integrate_step(m, HybridState(0, (0.0,)), (1.0,), 0.0)


# --- propagate -----------------------------------------------------------------

def test_puddle_crossing_gives_both_outcomes():
    s = HybridState(0, (3.8, 5.0, 0.0, 1.0, 0.0, 0.0))
    seg, outs = propagate(CHARGING, s, ControlInput((0.0, 0.0), 1.5))
    assert seg.event == GUARD and seg.nondeterministic
    assert [CHARGING.modes[o.state.mode].name for o in outs] == ["dry", "wet"]
    assert [o.target for o in outs] == [0, 1]
    wet = outs[1].state
    assert wet.x[5] == 0.0 and wet.x[:5] == outs[0].state.x[:5]
    assert 4.29 < wet.x[0] < 4.31  # disk of radius 0.3 reaches x = 4.6


def test_global_deadline_violation():
    s = HybridState(0, (1.5, 5.0, 0.0, 0.0, 119.0, 0.0))
    seg, outs = propagate(CHARGING, s, ControlInput((0.0, 0.0), 5.0))
    assert outs == [] and seg.event == INVARIANT
    assert seg.states[-1][4] > 120.0
    assert all(x[4] <= 120.0 for x in seg.states[:-1])


def test_quiet_propagation_has_one_outcome():
    s = HybridState(0, (1.5, 5.0, 0.0, 0.0, 0.0, 0.0))
    seg, outs = propagate(CHARGING, s, ControlInput((0.0, 0.0), 2.0))
    assert seg.event == DURATION and len(outs) == 1 and not outs[0].goal
    assert seg.times[0] == 0.0 and seg.end_time == 2.0
    assert all(b > a for a, b in zip(seg.times, seg.times[1:]))


def test_last_step_is_truncated_to_duration():
    s = HybridState(0, (1.5, 5.0, 0.0, 0.0, 0.0, 0.0))
    seg, _ = propagate(CHARGING, s, ControlInput((0.0, 0.0), 0.123))
    assert seg.end_time == 0.123 and seg.final[4] == pytest.approx(0.123, abs=1e-12)


def test_goal_is_absorbing():
    s = HybridState(0, (7.5, 5.0, 0.0, 1.0, 0.0, 0.0))
    seg, outs = propagate(CHARGING, s, ControlInput((0.0, 0.0), 2.0))
    assert seg.event == GOAL and len(outs) == 1 and outs[0].goal
    assert 8.3 <= outs[0].state.x[0] < 8.35


def test_record_false_keeps_endpoints_only():
    s = HybridState(0, (1.5, 5.0, 0.0, 0.5, 0.0, 0.0))
    full, o1 = propagate(CHARGING, s, ControlInput((0.3, 0.2), 1.7))
    short, o2 = propagate(CHARGING, s, ControlInput((0.3, 0.2), 1.7), record=False)
    assert o1 == o2 and len(short.states) == 2 and short.final == full.final


def test_guard_already_true_at_start_is_not_fired():
    # just jumped into dry while still touching the puddle
    s = HybridState(0, (4.35, 5.0, 0.0, 1.0, 10.0, 0.0))
    seg, outs = propagate(CHARGING, s, ControlInput((0.0, 0.0), 0.5))
    assert seg.event == DURATION and len(outs) == 1


def test_post_jump_invariant_violation_invalidates():
    doc = {
        "modes": [
            {"name": "a", "dim": 1, "flow": {"id": "single_integrator"}, "control_box": {"lo": [1], "hi": [1]},
             "bounds": {"lo": [0], "hi": [5]},
             "guards": [{"trigger": [{"cmp": {"dim": 0, "op": ">=", "value": 1}}], "targets": [{"mode": "a"}, {"mode": "b"}]}]},
            {"name": "b", "dim": 1, "flow": {"id": "single_integrator"}, "control_box": {"lo": [1], "hi": [1]},
             "invariant": [{"cmp": {"dim": 0, "op": "<=", "value": 0.5}}]},
        ],
        "initial": {"mode": "a", "x": [0.0]},
    }
    m = NhsModel(doc)
    seg, outs = propagate(m, m.initial, ControlInput((1.0,), 2.0))
    assert outs == [] and seg.event == INVARIANT and seg.guard == 0


# --- jumps and goal --------------------------------------------------------------

def test_identity_jump():
    doc = {"modes": [{"name": "a", "dim": 2, "flow": {"id": "stationary", "params": {"n": 2}},
                      "guards": [{"trigger": [], "targets": [{"mode": "a", "jump": {"id": "identity"}}]}]}],
           "initial": {"mode": "a", "x": [0, 0]}}
    assert apply_jump(NhsModel(doc), 0, 0, (1.0, 2.0)) == (1.0, 2.0)


def test_rescue_jump_resets_local_clock():
    m = envs.build_search_rescue(1)
    q1, q2 = m.mode_index["start"], m.mode_index["search_1"]
    assert apply_jump(m, q1, q2, (4.8, 8.0, 0.1, 1.0, 7.5, 7.5)) == (4.8, 8.0, 0.1, 1.0, 7.5, 0.0)


def test_projection_jump():
    doc = {"modes": [
        {"name": "big", "dim": 3, "flow": {"id": "stationary", "params": {"n": 3}},
         "guards": [{"trigger": [], "targets": [{"mode": "small", "jump": {"id": "projection", "params": {"keep": [0, 1]}}}]}]},
        {"name": "small", "dim": 2, "flow": {"id": "stationary", "params": {"n": 2}}},
    ], "initial": {"mode": "big", "x": [0, 0, 0]}}
    m = NhsModel(doc)
    assert apply_jump(m, 0, 1, (1.0, 2.0, 3.0)) == (1.0, 2.0)
    with pytest.raises(ModelError):
        apply_jump(m, 1, 0, (1.0, 2.0))


def test_goal_predicate_per_mode():
    x = (9.0, 5.0, 0.0, 0.0, 50.0, 0.0)
    assert is_goal(CHARGING, HybridState(CHARGING.mode_index["dry"], x))
    assert not is_goal(CHARGING, HybridState(CHARGING.mode_index["wet"], x))
    assert not is_goal(CHARGING, HybridState(CHARGING.mode_index["drying"], x))


# --- model validation ---------------------------------------------------------------

def test_model_errors_name_their_location(tmp_path):
    bad = tmp_path / "bad.yaml"
    bad.write_text("modes:\n  - name: a\n    dim: [1\n", encoding="utf-8")
    with pytest.raises(ModelError, match=r"bad.yaml:\d+:\d+"):
        load_document(bad)
    doc = CHARGING.to_dict()
    doc["modes"][0]["guards"][0]["targets"][1]["mode"] = "swamp"
    with pytest.raises(ModelError, match=r"modes\[0\].guards\[0\].targets\[1\].mode"):
        NhsModel(doc)
    doc = CHARGING.to_dict()
    doc["initial"]["x"] = [5.0, 2.0, 0, 0, 0, 0]  # inside the wall
    with pytest.raises(ModelError, match="invariant"):
        NhsModel(doc)
    doc = CHARGING.to_dict()
    doc["modes"][1]["control_box"]["lo"] = [2.0, -1.5]
    with pytest.raises(ModelError, match="control_box"):
        NhsModel(doc)


def test_yaml_round_trip(tmp_path):
    p = tmp_path / "m.yaml"
    CHARGING.dump(p)
    again = NhsModel.load(p)
    assert again.to_dict() == CHARGING.to_dict()
    assert again.edges == CHARGING.edges


# --- properties -------------------------------------------------------------------

controls = st.tuples(st.floats(-1, 1), st.floats(-1.5, 1.5), st.floats(0.01, 2.0))
starts = st.tuples(st.floats(0.5, 4.0), st.floats(0.5, 9.5), st.floats(-3, 3), st.floats(0, 1), st.floats(0, 100))


@settings(max_examples=60, deadline=None)
@given(starts, controls)
def test_propagation_is_deterministic_and_clocks_tick(start, ctl):
    x = start + (0.0,)
    s = HybridState(0, x)
    c = ControlInput(ctl[:2], ctl[2])
    seg1, out1 = propagate(CHARGING, s, c)
    seg2, out2 = propagate(CHARGING, s, c)
    assert seg1 == seg2 and out1 == out2
    for (t0, a), (t1, b) in zip(zip(seg1.times, seg1.states), zip(seg1.times[1:], seg1.states[1:])):
        assert b[4] - a[4] == pytest.approx(t1 - t0, abs=1e-9)
        assert b[5] >= a[5]
    expected = {GUARD: len(CHARGING.modes[0].guards[0].targets), GOAL: 1, DURATION: 1, INVARIANT: 0}
    assert len(out1) == expected[seg1.event]
    if seg1.event != INVARIANT:
        assert all(CHARGING.modes[0].invariant(x) for x in seg1.states)


def _crossing(h, start, u):
    doc = CHARGING.to_dict()
    doc["integrator"]["h"] = h
    m = NhsModel(doc)
    seg, _ = propagate(m, HybridState(0, start), ControlInput(u, 2.0))
    return m, seg


@settings(max_examples=40, deadline=None)
@given(st.floats(3.0, 3.9), st.floats(4.6, 5.4), st.floats(-0.3, 0.3), st.floats(0.5, 1.0), st.floats(-0.4, 0.4))
def test_guard_event_is_bracketed_and_converges(x0, y0, th, v, w):
    start = (x0, y0, th, v, 0.0, 0.0)
    m, seg = _crossing(0.05, start, (0.0, w))
    if seg.event != GUARD:
        return
    trig = m.modes[0].guards[seg.guard].trigger
    assert trig(seg.final)
    t_ev, t_prev, x_prev = seg.times[-1], seg.times[-2], seg.states[-2]
    back = t_ev - m.event_tol - t_prev
    earlier = x_prev if back <= 0 else integrate_step(m, HybridState(0, x_prev), (0.0, w), back)
    assert not trig(earlier)
    _, seg_half = _crossing(0.025, start, (0.0, w))
    assert seg_half.event == GUARD
    assert abs(seg_half.end_time - t_ev) <= m.event_tol
