from inventory.stock import ColdStorage, Warehouse, audit, count_units, low_stock, restock_plan


def make():
    w = Warehouse("main")
    w.receive("bolt", 10)
    w.receive("nut", 3)
    w.receive("bolt", 2)
    return w


def test_receive_and_available():
    w = make()
    assert w.name == "main"
    assert w.available("bolt") == 12
    assert w.available("nut") == 3
    assert w.available("gear") == 0


def test_receive_rejects_zero():
    w = Warehouse("x")
    try:
        w.receive("bolt", 0)
    except ValueError:
        pass
    else:
        assert False, "expected ValueError"


def test_reserve_and_ship():
    w = make()
    assert w.reserve("bolt", 5) is True
    assert w.available("bolt") == 7
    assert w.reserve("nut", 4) is False
    assert w.reserve("nut", 3) is True
    assert w.ship("bolt") == 5
    assert w.levels["bolt"] == 7
    assert w.ship("gear") == 0


def test_cold_storage():
    c = ColdStorage("ice")
    assert c.name == "ice"
    assert c.max_temp == 4
    assert c.accepts(4)
    assert c.accepts(-29)
    assert not c.accepts(5)
    assert not c.accepts(-30)
    c.receive("fish", 2)
    assert c.available("fish") == 2


def test_low_stock():
    w = make()
    assert low_stock(w) == ["nut"]
    assert low_stock(w, threshold=13) == ["bolt", "nut"]


def test_restock_plan():
    w = make()
    assert restock_plan(w, 10) == {"nut": 7}
    assert restock_plan(w, 15) == {"bolt": 3, "nut": 12}


def test_audit():
    log = []
    with audit(log) as inner:
        inner.append("work")
    assert log == ["begin", "work", "end"]


def test_count_units():
    assert count_units(make()) == 15
    assert count_units(Warehouse("empty")) == 0
