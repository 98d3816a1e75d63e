import yamlish_frontmatter


def test_parse():
    assert yamlish_frontmatter.parse("a: 1") == {"a": 1}
