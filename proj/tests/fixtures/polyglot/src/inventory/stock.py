"""Stock levels and reservations."""

from contextlib import contextmanager


class Warehouse:
    def __init__(self, name):
        self.name = name
        self.levels = {}
        self.reserved = {}

    def receive(self, sku, qty):
        if qty <= 0:
            raise ValueError("qty must be positive")
        self.levels[sku] = self.levels.get(sku, 0) + qty

    def available(self, sku):
        return self.levels.get(sku, 0) - self.reserved.get(sku, 0)

    def reserve(self, sku, qty):
        if self.available(sku) >= qty:
            self.reserved[sku] = self.reserved.get(sku, 0) + qty
            return True
        else:
            return False

    def ship(self, sku):
        qty = self.reserved.pop(sku, 0)
        self.levels[sku] = self.levels.get(sku, 0) - qty
        return qty


class ColdStorage(Warehouse):
    def __init__(self, name, max_temp=4):
        super().__init__(name)
        self.max_temp = max_temp

    def accepts(self, temp):
        return temp <= self.max_temp and temp > -30


def low_stock(warehouse, threshold=5):
    result = []
    for sku in sorted(warehouse.levels):
        if warehouse.available(sku) < threshold:
            result.append(sku)
    return result


def restock_plan(warehouse, target):
    plan = {}
    for sku in sorted(warehouse.levels):
        missing = target - warehouse.available(sku)
        if missing > 0:
            plan[sku] = missing
    return plan


@contextmanager
def audit(log):
    log.append("begin")
    try:
        yield log
    finally:
        log.append("end")


def count_units(warehouse):
    with audit([]) as log:
        total = 0
        for sku in warehouse.levels:
            total += warehouse.levels[sku]
        log.append(total)
    return total
