'use strict';

const assert = require('assert');
const { Shape, Rect, clamp, distance, boundingBox } = require('../../js/geom.js');

test('shape defaults', () => {
  const s = new Shape('blob');
  assert.strictEqual(s.name, 'blob');
  assert.strictEqual(s.area(), 0);
  assert.strictEqual(s.describe(), 'blob with area 0');
});

test('rect area and perimeter', () => {
  const r = new Rect(3, 4);
  assert.strictEqual(r.name, 'rect');
  assert.strictEqual(r.area(), 12);
  assert.strictEqual(r.perimeter(), 14);
  assert.strictEqual(r.describe(), 'rect with area 12');
  assert.ok(r instanceof Shape);
});

test('clamp', () => {
  assert.strictEqual(clamp(5, 0, 10), 5);
  assert.strictEqual(clamp(-1, 0, 10), 0);
  assert.strictEqual(clamp(11, 0, 10), 10);
  assert.strictEqual(clamp(0, 0, 10), 0);
  assert.strictEqual(clamp(10, 0, 10), 10);
});

test('distance', () => {
  assert.strictEqual(distance({ x: 0, y: 0 }, { x: 3, y: 4 }), 5);
  assert.strictEqual(distance({ x: 1, y: 2 }, { x: 1, y: 2 }), 0);
  assert.strictEqual(distance({ x: 5, y: 0 }, { x: 2, y: 4 }), 5);
});

test('bounding box', () => {
  assert.deepStrictEqual(boundingBox([{ x: 2, y: 5 }, { x: -1, y: 7 }, { x: 4, y: 3 }]), { x: -1, y: 3 });
});
