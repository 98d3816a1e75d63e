'use strict';

class Shape {
  constructor(name) {
    this.name = name;
  }

  area() {
    return 0;
  }

  describe() {
    return this.name + ' with area ' + this.area();
  }
}

class Rect extends Shape {
  constructor(w, h) {
    super('rect');
    this.w = w;
    this.h = h;
  }

  area() {
    return this.w * this.h;
  }

  perimeter() {
    return 2 * (this.w + this.h);
  }
}

function clamp(value, lo, hi) {
  if (value < lo) {
    return lo;
  } else if (value > hi) {
    return hi;
  }
  return value;
}

function distance(a, b) {
  const dx = a.x - b.x;
  const dy = a.y - b.y;
  return Math.sqrt(dx * dx + dy * dy);
}

function boundingBox(points) {
  let minX = Infinity;
  let minY = Infinity;
  for (const p of points) {
    minX = Math.min(minX, p.x);
    minY = Math.min(minY, p.y);
  }
  return { x: minX, y: minY };
}

module.exports = { Shape, Rect, clamp, distance, boundingBox };
