"""Plain-text report formatting."""


def pad_left(text, width):
    if len(text) >= width:
        return text
    return " " * (width - len(text)) + text


def format_row(cells, widths):
    parts = []
    for cell, width in zip(cells, widths):
        parts.append(pad_left(str(cell), width))
    return " | ".join(parts)


def format_table(rows):
    widths = [0] * len(rows[0])
    for row in rows:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(str(cell)))
    lines = [format_row(row, widths) for row in rows]
    return "\n".join(lines)


def truncate(text, limit):
    if len(text) <= limit:
        return text
    return text[: limit - 3] + "..."
