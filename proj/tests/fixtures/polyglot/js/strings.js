'use strict';

function slugify(text) {
  return text.trim().toLowerCase().replace(/[^a-z0-9]+/g, '-');
}

function countWords(text) {
  let count = 0;
  for (const word of text.split(' ')) {
    if (word.length > 0) {
      count += 1;
    }
  }
  return count;
}

function safeParse(json, fallback) {
  try {
    return JSON.parse(json);
  } catch (err) {
    return fallback;
  }
}

function repeatJoin(word, times, sep) {
  const parts = [];
  for (let i = 0; i < times; i++) {
    parts.push(word);
  }
  return parts.join(sep);
}

module.exports = { slugify, countWords, safeParse, repeatJoin };
