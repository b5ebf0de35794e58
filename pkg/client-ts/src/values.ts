/**
 * Value model mirroring the wire protocol's tagged union, plus the portable
 * JSON form used by the golden-file corpora.
 *
 * Int and i64 tensor elements are bigints (JSON numbers cannot carry 64-bit
 * integers); floats are plain numbers.
 */

export type Dtype = 'f32' | 'f64' | 'i32' | 'i64' | 'u8';

export const DTYPE_WIDTH: Record<Dtype, number> = {
  f32: 4,
  f64: 8,
  i32: 4,
  i64: 8,
  u8: 1,
};

export interface TensorValue {
  t: 'tensor';
  dtype: Dtype;
  shape: number[];
  /** Row-major elements; bigint[] iff dtype is i64. */
  data: number[] | bigint[];
}

export type Value =
  | { t: 'bool'; v: boolean }
  | { t: 'int'; v: bigint }
  | { t: 'float'; v: number }
  | { t: 'str'; v: string }
  | { t: 'bytes'; v: Uint8Array }
  | TensorValue
  | { t: 'list'; items: Value[] }
  | { t: 'map'; entries: Record<string, Value> };

export const vBool = (v: boolean): Value => ({ t: 'bool', v });
export const vInt = (v: bigint | number): Value => ({ t: 'int', v: BigInt(v) });
export const vFloat = (v: number): Value => ({ t: 'float', v });
export const vStr = (v: string): Value => ({ t: 'str', v });
export const vBytes = (v: Uint8Array): Value => ({ t: 'bytes', v });
export const vList = (items: Value[]): Value => ({ t: 'list', items });
export const vMap = (entries: Record<string, Value>): Value => ({ t: 'map', entries });

export function vTensor(dtype: Dtype, shape: number[], data: Array<number | bigint>): TensorValue {
  const count = shape.reduce((a, b) => a * b, 1);
  if (data.length !== count) {
    throw new RangeError(`tensor data length ${data.length} != product of shape ${count}`);
  }
  if (dtype === 'i64') {
    return { t: 'tensor', dtype, shape, data: data.map((x) => BigInt(x)) };
  }
  return { t: 'tensor', dtype, shape, data: data.map((x) => Number(x)) };
}

export function tensorElementCount(t: TensorValue): number {
  return t.shape.reduce((a, b) => a * b, 1);
}

function sameFloat(a: number, b: number): boolean {
  // bitwise: NaN equals NaN, +0 differs from -0
  const bufA = Buffer.alloc(8);
  const bufB = Buffer.alloc(8);
  bufA.writeDoubleLE(a);
  bufB.writeDoubleLE(b);
  return bufA.equals(bufB);
}

/** Exact structural equality (bitwise for floats and tensor payloads). */
export function valuesEqual(a: Value, b: Value): boolean {
  if (a.t !== b.t) return false;
  switch (a.t) {
    case 'bool':
    case 'str':
      return a.v === (b as typeof a).v;
    case 'int':
      return a.v === (b as typeof a).v;
    case 'float':
      return sameFloat(a.v, (b as typeof a).v);
    case 'bytes': {
      const other = (b as typeof a).v;
      return a.v.length === other.length && Buffer.from(a.v).equals(Buffer.from(other));
    }
    case 'tensor': {
      const o = b as TensorValue;
      if (a.dtype !== o.dtype || a.shape.length !== o.shape.length) return false;
      if (!a.shape.every((d, i) => d === o.shape[i])) return false;
      if (a.data.length !== o.data.length) return false;
      if (a.dtype === 'i64') {
        return (a.data as bigint[]).every((x, i) => x === (o.data as bigint[])[i]);
      }
      if (a.dtype === 'f32' || a.dtype === 'f64') {
        return (a.data as number[]).every((x, i) => sameFloat(x, (o.data as number[])[i]));
      }
      return (a.data as number[]).every((x, i) => x === (o.data as number[])[i]);
    }
    case 'list': {
      const o = b as { t: 'list'; items: Value[] };
      return a.items.length === o.items.length && a.items.every((x, i) => valuesEqual(x, o.items[i]));
    }
    case 'map': {
      const o = b as { t: 'map'; entries: Record<string, Value> };
      const ka = Object.keys(a.entries).sort();
      const kb = Object.keys(o.entries).sort();
      if (ka.length !== kb.length || !ka.every((k, i) => k === kb[i])) return false;
      return ka.every((k) => valuesEqual(a.entries[k], o.entries[k]));
    }
  }
}

/** Rebuild a Value from the corpus JSON description. */
export function fromPortable(obj: any): Value {
  switch (obj.t) {
    case 'bool':
      return vBool(Boolean(obj.v));
    case 'int':
      return vInt(BigInt(obj.v));
    case 'float':
      return vFloat(Number(obj.v));
    case 'str':
      return vStr(String(obj.v));
    case 'bytes':
      return vBytes(Uint8Array.from(Buffer.from(obj.hex, 'hex')));
    case 'tensor': {
      const data =
        obj.dtype === 'i64'
          ? (obj.data as Array<string | number>).map((x) => BigInt(x))
          : (obj.data as number[]);
      return vTensor(obj.dtype as Dtype, obj.shape as number[], data);
    }
    case 'list':
      return vList(obj.items.map(fromPortable));
    case 'map': {
      const entries: Record<string, Value> = {};
      for (const [k, v] of obj.entries as Array<[string, any]>) {
        entries[k] = fromPortable(v);
      }
      return vMap(entries);
    }
    default:
      throw new TypeError(`unknown portable tag ${obj.t}`);
  }
}
