/**
 * Space membership and the pinned sampling recipe.
 *
 * Sampling must reproduce the server-side policy stream exactly: Discrete
 * draws one uniform and takes floor(u*n); Box draws one uniform per element
 * in row-major order, maps it as low + u*(high-low) in binary64, then casts
 * to the box dtype (round-to-nearest for floats, truncate for ints).
 */

import { SplitMix64 } from './prng.js';
import { BoxSpace, Space } from './wire.js';
import { Value, vInt, vTensor } from './values.js';

function boxBounds(box: BoxSpace): { low: number[]; high: number[] } {
  const toNumbers = (data: number[] | bigint[]) => (data as Array<number | bigint>).map(Number);
  return { low: toNumbers(box.low.data), high: toNumbers(box.high.data) };
}

export function sample(space: Space, rng: SplitMix64): Value {
  if (space.kind === 'discrete') {
    return vInt(Math.floor(rng.uniform() * space.n));
  }
  const { low, high } = boxBounds(space);
  const dtype = space.low.dtype;
  const shape = space.low.shape;
  const out: Array<number | bigint> = [];
  for (let i = 0; i < low.length; i++) {
    const v = low[i] + rng.uniform() * (high[i] - low[i]);
    switch (dtype) {
      case 'f64':
        out.push(v);
        break;
      case 'f32':
        out.push(Math.fround(v));
        break;
      case 'i64':
        out.push(BigInt(Math.trunc(v)));
        break;
      default:
        out.push(Math.trunc(v));
    }
  }
  return vTensor(dtype, shape, out);
}

export function contains(space: Space, value: Value): boolean {
  if (space.kind === 'discrete') {
    return value.t === 'int' && value.v >= 0n && value.v < BigInt(space.n);
  }
  if (value.t !== 'tensor') return false;
  if (value.dtype !== space.low.dtype) return false;
  if (value.shape.length !== space.low.shape.length) return false;
  if (!value.shape.every((d, i) => d === space.low.shape[i])) return false;
  const { low, high } = boxBounds(space);
  const data = (value.data as Array<number | bigint>).map(Number);
  return data.every((x, i) => x >= low[i] && x <= high[i]);
}
