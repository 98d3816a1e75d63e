"""Price computations for inventory items."""

TAX_RATE_PERCENT = 8


class PricingError(ValueError):
    """Raised for invalid pricing input."""

    def __init__(self, message, code=400):
        super().__init__(message)
        self.code = code

    def describe(self):
        return f"{self.code}: {self.args[0]}"


def subtotal(items):
    total = 0
    for price, qty in items:
        if qty < 0:
            raise PricingError("negative quantity")
        total += price * qty
    return total


def apply_discount(amount, percent):
    if percent < 0 or percent > 100:
        raise PricingError("bad percent")
    return amount - amount * percent // 100


def with_tax(amount):
    return amount + amount * TAX_RATE_PERCENT // 100


def bulk_discount_percent(quantity):
    if quantity >= 100:
        return 15
    elif quantity >= 10:
        return 5
    else:
        return 0


def parse_price(text):
    try:
        value = int(text.strip())
    except ValueError:
        return None
    if value < 0:
        return None
    return value


class PriceBook:
    def __init__(self):
        self.prices = {}

    def set_price(self, sku, price):
        if price < 0:
            raise PricingError("negative price")
        self.prices[sku] = price

    def price_of(self, sku, default=None):
        return self.prices.get(sku, default)

    def total_for(self, order):
        total = 0
        for sku, qty in order.items():
            total += self.price_of(sku, 0) * qty
        return total
