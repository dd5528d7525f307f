from collections import deque

import pytest

import reference as ref
from isingperc import verify
from isingperc.events import has_crossing


def nearest_neighbour_crossing(cfg, rect, orientation, color):
    """Broken detector: 4-adjacency for both colours."""
    return _crossing_with(ref.as_dict(cfg), rect, orientation, color, ref.N4)


def swapped_crossing(cfg, rect, orientation, color):
    """Adjacencies exchanged; by colour symmetry still a valid duality."""
    return _crossing_with(ref.as_dict(cfg), rect, orientation, color, ref.N8 if color == 1 else ref.N4)


def _crossing_with(spins, rect, orientation, color, steps):
    allowed = ref.rect_sites(rect.x_lo, rect.x_hi, rect.y_lo, rect.y_hi)
    if orientation == "h":
        seeds = [(rect.x_lo, y) for y in range(rect.y_lo, rect.y_hi + 1)]
    else:
        seeds = [(x, rect.y_lo) for x in range(rect.x_lo, rect.x_hi + 1)]
    seen = {s for s in seeds if spins[s] == color}
    q = deque(seen)
    while q:
        x, y = q.popleft()
        for dx, dy in steps:
            t = (x + dx, y + dy)
            if t in allowed and t not in seen and spins[t] == color:
                seen.add(t)
                q.append(t)
    if orientation == "h":
        return any(x == rect.x_hi for x, _ in seen)
    return any(y == rect.y_hi for _, y in seen)


def test_exhaustive_duality_passes_with_the_real_detector():
    out = verify.duality_exhaustive(3, 3, crossing=has_crossing)
    assert out.passed and out.detail == "512 configs"


def test_swapped_adjacency_is_self_dual():
    assert verify.duality_exhaustive(3, 3, crossing=swapped_crossing).passed


def test_exhaustive_duality_catches_wrong_adjacency():
    out = verify.duality_exhaustive(3, 3, crossing=nearest_neighbour_crossing)
    assert not out.passed
    assert "counterexample" in out.detail
    rows = out.detail.split("counterexample ")[1].split("/")
    assert len(rows) == 3 and all(len(r) == 3 and set(r) <= {"+", "-"} for r in rows)


def test_quick_suite_passes_and_reports_lines():
    lines = []
    outcomes = verify.verify_suite("quick", report=lines.append)
    assert verify.first_failure(outcomes) is None
    assert len(lines) == len(verify.QUICK)
    assert all(line.startswith("PASS  ") for line in lines)


def test_first_failure():
    a = verify.CheckOutcome("a", True, "")
    b = verify.CheckOutcome("b", False, "boom")
    assert verify.first_failure([a, b, a]) is b
    assert b.line().startswith("FAIL  b: boom")


def test_bad_level():
    with pytest.raises(ValueError):
        verify.verify_suite("medium")


def test_sampled_duality():
    assert verify.duality_sampled(2000, nmax=33).passed


@pytest.mark.slow
def test_circuit_arm_duality_on_all_annulus_configs():
    assert verify.circuit_arm_duality().passed
