from inventory.textfmt import format_row, format_table, pad_left, truncate


def test_pad_left():
    assert pad_left("ab", 4) == "  ab"
    assert pad_left("abcd", 2) == "abcd"
    assert pad_left("abc", 3) == "abc"


def test_format_row():
    assert format_row(["a", 1], [2, 3]) == " a |   1"


def test_format_table():
    table = format_table([["id", "name"], [1, "bolt"], [22, "x"]])
    assert table == "id | name\n 1 | bolt\n22 |    x"


def test_truncate():
    assert truncate("hello", 5) == "hello"
    assert truncate("hello world", 8) == "hello..."
    assert truncate("", 3) == ""
