from inventory.pricing import (
    PriceBook,
    PricingError,
    apply_discount,
    bulk_discount_percent,
    parse_price,
    subtotal,
    with_tax,
)


def test_subtotal():
    assert subtotal([(10, 2), (3, 5)]) == 35
    assert subtotal([]) == 0


def test_subtotal_rejects_negative():
    try:
        subtotal([(10, -1)])
    except PricingError as err:
        assert err.code == 400
    else:
        assert False, "expected PricingError"


def test_apply_discount():
    assert apply_discount(200, 10) == 180
    assert apply_discount(99, 0) == 99
    assert apply_discount(50, 100) == 0


def test_apply_discount_bounds():
    for bad in (-1, 101):
        try:
            apply_discount(100, bad)
        except PricingError:
            pass
        else:
            assert False, "expected PricingError"


def test_with_tax():
    assert with_tax(100) == 108
    assert with_tax(250) == 270


def test_bulk_discount_percent():
    assert bulk_discount_percent(1) == 0
    assert bulk_discount_percent(9) == 0
    assert bulk_discount_percent(10) == 5
    assert bulk_discount_percent(99) == 5
    assert bulk_discount_percent(100) == 15


def test_parse_price():
    assert parse_price(" 42 ") == 42
    assert parse_price("abc") is None
    assert parse_price("-3") is None
    assert parse_price("0") == 0


def test_pricing_error_describe():
    err = PricingError("boom", code=422)
    assert err.describe() == "422: boom"
    assert PricingError("x").describe() == "400: x"
    assert isinstance(err, ValueError)


def test_price_book():
    book = PriceBook()
    book.set_price("a", 3)
    book.set_price("b", 7)
    assert book.price_of("a") == 3
    assert book.price_of("zz") is None
    assert book.price_of("zz", 1) == 1
    assert book.total_for({"a": 2, "b": 1, "c": 5}) == 13


def test_price_book_rejects_negative():
    book = PriceBook()
    try:
        book.set_price("a", -1)
    except PricingError:
        pass
    else:
        assert False, "expected PricingError"
    assert book.price_of("a") is None
