'use strict';

const assert = require('assert');
const { slugify, countWords, safeParse, repeatJoin } = require('../../js/strings.js');

test('slugify', () => {
  assert.strictEqual(slugify('  Hello World  '), 'hello-world');
  assert.strictEqual(slugify('a_b'), 'a-b');
});

test('countWords', () => {
  assert.strictEqual(countWords('one two  three'), 3);
  assert.strictEqual(countWords(''), 0);
});

test('safeParse', () => {
  assert.deepStrictEqual(safeParse('{"a":1}', null), { a: 1 });
  assert.strictEqual(safeParse('{bad', 'fb'), 'fb');
});

test('repeatJoin', () => {
  assert.strictEqual(repeatJoin('ab', 3, '-'), 'ab-ab-ab');
  assert.strictEqual(repeatJoin('x', 1, ','), 'x');
  assert.strictEqual(repeatJoin('x', 0, ','), '');
});
