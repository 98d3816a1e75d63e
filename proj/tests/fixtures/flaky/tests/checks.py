import os

from calc import Counter, clamp, mean, scale


def test_clamp():
    assert clamp(5, 0, 3) == 3
    assert clamp(-1, 0, 3) == 0
    assert clamp(2, 0, 3) == 2


def test_mean():
    assert mean([1, 2, 3, 6]) == 3


def test_scale():
    assert scale([1, 2], 3) == [3, 6]


def test_counter():
    c = Counter(2)
    assert c.bump(3) == 5
    c.reset()
    assert c.value == 0


def test_flaky_clock():
    # Outcome alternates between runs: the counter lives outside the sandbox.
    path = os.environ["FLAKY_STATE"]
    n = 0
    if os.path.exists(path):
        with open(path) as fh:
            n = int(fh.read().strip() or "0")
    with open(path, "w") as fh:
        fh.write(str(n + 1))
    assert n % 2 == 0
