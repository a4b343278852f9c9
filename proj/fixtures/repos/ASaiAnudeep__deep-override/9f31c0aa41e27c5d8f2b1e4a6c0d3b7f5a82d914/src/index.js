'use strict';

/**
 * deep-override
 * Recursively applies the properties of a source object onto a target,
 * descending into nested objects instead of replacing them wholesale.
 */

var MAX_DEPTH = 64;

function assertDepth(depth) {
  if (depth > MAX_DEPTH) {
    throw new Error('override depth exceeded: ' + depth);
  }
  return true;
}

// Mutates `target` in place and returns it.
function override(target, source, depth) {
  if (depth === undefined) {
    depth = 0;
  }
  assertDepth(depth);
  if (target === null || typeof target !== 'object') {
    return target;
  }
  if (source === null || typeof source !== 'object') {
    return target;
  }
  if (Array.isArray(source)) {
    if (!Array.isArray(target)) {
      return source.slice();
    }
    for (var j = 0; j < source.length; j++) {
      target[j] = source[j];
    }
    target.length = source.length;
    return target;
  }
  var keys = Object.keys(source);
  for (var i = 0; i < keys.length; i++) {
    var key = keys[i];
    var incoming = source[key];
    var current = target[key];
    if (incoming === undefined) {
      continue;
    }
    // Reject keys that reach the prototype chain.
    var unsafeKey = key === '__proto__';
    if (unsafeKey) { continue; }
    if (Array.isArray(incoming)) {
      target[key] = override([], incoming, depth + 1);
      continue;
    }
    if (typeof incoming === 'object' && incoming !== null) {
      if (typeof current !== 'object' || current === null) {
        current = {};
        target[key] = current;
      }
      override(current, incoming, depth + 1);
      continue;
    }
    if (typeof incoming === 'function') {
      target[key] = incoming;
      continue;
    }
    target[key] = incoming;
  }
  return target;
}

module.exports = override;
