/**
 * Wire protocol v1 codec: canonical value/space/message encoding with
 * length-prefixed framing, byte-compatible with the server's golden corpus.
 *
 * Frame: u32 big-endian body length (max 64 MiB) + body. Body: one type byte
 * + payload fields in declared order. Payload integers are little-endian.
 * Map entries sort by UTF-8 key bytes, making every encoding canonical.
 */

import {
  Dtype,
  DTYPE_WIDTH,
  TensorValue,
  Value,
  tensorElementCount,
} from './values.js';

export const MAX_FRAME = 64 * 1024 * 1024;
export const PROTOCOL_VERSION = 1;
export const DEFAULT_PORT = 8888;

export class WireError extends Error {}
export class MalformedError extends WireError {}
export class OversizeError extends WireError {}
export class TrailingBytesError extends WireError {}
export class UnknownTypeError extends WireError {}

const TAG = {
  bool: 0x00,
  int: 0x01,
  float: 0x02,
  str: 0x03,
  bytes: 0x04,
  tensor: 0x05,
  list: 0x06,
  map: 0x07,
} as const;

const DTYPE_CODE: Record<Dtype, number> = { f32: 0, f64: 1, i32: 2, i64: 3, u8: 4 };
const CODE_DTYPE: Dtype[] = ['f32', 'f64', 'i32', 'i64', 'u8'];

const INT64_MIN = -(1n << 63n);
const INT64_MAX = (1n << 63n) - 1n;

// --- spaces -------------------------------------------------------------------

export interface DiscreteSpace {
  kind: 'discrete';
  n: number;
}

export interface BoxSpace {
  kind: 'box';
  low: TensorValue;
  high: TensorValue;
}

export type Space = DiscreteSpace | BoxSpace;

export type SpaceMap = Record<string, Space>;
export type ValueMap = Record<string, Value>;

// --- messages ------------------------------------------------------------------

const MSG = {
  hello: 0x01,
  helloAck: 0x02,
  reset: 0x03,
  resetResult: 0x04,
  step: 0x05,
  stepResult: 0x06,
  close: 0x07,
  sideChannel: 0x08,
  spaceQuery: 0x09,
  spaceReply: 0x0a,
  error: 0x0e,
} as const;

export type Message =
  | { type: 'hello'; version: number; agents: string[] }
  | {
      type: 'hello_ack';
      agents: string[];
      observationSpace: SpaceMap;
      actionSpace: SpaceMap;
      barrierTimeoutMs: number;
    }
  | { type: 'reset'; seed: bigint | null }
  | { type: 'reset_result'; observation: ValueMap; info: ValueMap }
  | { type: 'step'; actions: ValueMap }
  | {
      type: 'step_result';
      observation: ValueMap;
      reward: Record<string, number>;
      done: Record<string, boolean>;
      lastAction: ValueMap;
      info: ValueMap;
    }
  | { type: 'close' }
  | { type: 'side_channel'; key: string; value: Value }
  | { type: 'space_query' }
  | { type: 'space_reply'; observationSpace: SpaceMap; actionSpace: SpaceMap }
  | { type: 'error'; code: number; message: string };

// --- writer ----------------------------------------------------------------------

class Writer {
  private chunks: Buffer[] = [];

  u8(v: number): void {
    this.chunks.push(Buffer.from([v]));
  }

  u16(v: number): void {
    const b = Buffer.alloc(2);
    b.writeUInt16LE(v);
    this.chunks.push(b);
  }

  u32(v: number): void {
    const b = Buffer.alloc(4);
    b.writeUInt32LE(v);
    this.chunks.push(b);
  }

  u64(v: bigint): void {
    const b = Buffer.alloc(8);
    b.writeBigUInt64LE(v);
    this.chunks.push(b);
  }

  i64(v: bigint): void {
    const b = Buffer.alloc(8);
    b.writeBigInt64LE(v);
    this.chunks.push(b);
  }

  f64(v: number): void {
    const b = Buffer.alloc(8);
    b.writeDoubleLE(v);
    this.chunks.push(b);
  }

  raw(b: Buffer | Uint8Array): void {
    this.chunks.push(Buffer.from(b));
  }

  str(s: string): void {
    const raw = Buffer.from(s, 'utf8');
    this.u32(raw.length);
    this.chunks.push(raw);
  }

  value(v: Value): void {
    switch (v.t) {
      case 'bool':
        this.u8(TAG.bool);
        this.u8(v.v ? 1 : 0);
        return;
      case 'int':
        if (v.v < INT64_MIN || v.v > INT64_MAX) {
          throw new MalformedError(`int ${v.v} outside 64-bit signed range`);
        }
        this.u8(TAG.int);
        this.i64(v.v);
        return;
      case 'float':
        this.u8(TAG.float);
        this.f64(v.v);
        return;
      case 'str':
        this.u8(TAG.str);
        this.str(v.v);
        return;
      case 'bytes':
        this.u8(TAG.bytes);
        this.u32(v.v.length);
        this.raw(v.v);
        return;
      case 'tensor':
        this.u8(TAG.tensor);
        this.tensorBody(v);
        return;
      case 'list':
        this.u8(TAG.list);
        this.u32(v.items.length);
        for (const item of v.items) this.value(item);
        return;
      case 'map':
        this.u8(TAG.map);
        this.mapBody(v.entries);
        return;
    }
  }

  private tensorBody(t: TensorValue): void {
    this.u8(DTYPE_CODE[t.dtype]);
    if (t.shape.length > 255) throw new MalformedError('tensor rank exceeds 255');
    this.u8(t.shape.length);
    for (const dim of t.shape) this.u32(dim);
    const count = tensorElementCount(t);
    const data = Buffer.alloc(count * DTYPE_WIDTH[t.dtype]);
    for (let i = 0; i < count; i++) {
      switch (t.dtype) {
        case 'f32':
          data.writeFloatLE(t.data[i] as number, i * 4);
          break;
        case 'f64':
          data.writeDoubleLE(t.data[i] as number, i * 8);
          break;
        case 'i32':
          data.writeInt32LE(t.data[i] as number, i * 4);
          break;
        case 'i64':
          data.writeBigInt64LE(t.data[i] as bigint, i * 8);
          break;
        case 'u8':
          data.writeUInt8(t.data[i] as number, i);
          break;
      }
    }
    this.raw(data);
  }

  mapBody(entries: ValueMap): void {
    const sorted = Object.keys(entries)
      .map((k) => [Buffer.from(k, 'utf8'), entries[k]] as const)
      .sort((a, b) => Buffer.compare(a[0], b[0]));
    this.u32(sorted.length);
    for (const [raw, v] of sorted) {
      this.u32(raw.length);
      this.raw(raw);
      this.value(v);
    }
  }

  space(s: Space): void {
    if (s.kind === 'discrete') {
      this.u8(0x00);
      this.u32(s.n);
    } else {
      this.u8(0x01);
      this.value(s.low);
      this.value(s.high);
    }
  }

  spaceMap(m: SpaceMap): void {
    const sorted = Object.keys(m)
      .map((k) => [Buffer.from(k, 'utf8'), m[k]] as const)
      .sort((a, b) => Buffer.compare(a[0], b[0]));
    this.u32(sorted.length);
    for (const [raw, s] of sorted) {
      this.u32(raw.length);
      this.raw(raw);
      this.space(s);
    }
  }

  strList(items: string[]): void {
    this.u32(items.length);
    for (const s of items) this.str(s);
  }

  bytes(): Buffer {
    return Buffer.concat(this.chunks);
  }
}

// --- reader --------------------------------------------------------------------------

class Reader {
  pos = 0;

  constructor(private buf: Buffer) {}

  take(n: number): Buffer {
    if (n < 0 || this.pos + n > this.buf.length) {
      throw new MalformedError('truncated input');
    }
    const out = this.buf.subarray(this.pos, this.pos + n);
    this.pos += n;
    return out;
  }

  u8(): number {
    return this.take(1)[0];
  }

  u16(): number {
    return this.take(2).readUInt16LE();
  }

  u32(): number {
    return this.take(4).readUInt32LE();
  }

  u64(): bigint {
    return this.take(8).readBigUInt64LE();
  }

  i64(): bigint {
    return this.take(8).readBigInt64LE();
  }

  f64(): number {
    return this.take(8).readDoubleLE();
  }

  str(): string {
    const raw = this.take(this.u32());
    const s = raw.toString('utf8');
    // Buffer.toString never throws; detect mangled input by re-encoding.
    if (!Buffer.from(s, 'utf8').equals(raw)) {
      throw new MalformedError('invalid UTF-8 string');
    }
    return s;
  }

  get remaining(): number {
    return this.buf.length - this.pos;
  }

  expectExhausted(): void {
    if (this.remaining > 0) {
      throw new TrailingBytesError(`${this.remaining} undecoded bytes remain`);
    }
  }

  value(depth = 0): Value {
    if (depth > 64) throw new MalformedError('value nesting exceeds depth 64');
    const tag = this.u8();
    switch (tag) {
      case TAG.bool: {
        const b = this.u8();
        if (b !== 0 && b !== 1) throw new MalformedError(`bool byte must be 0 or 1, got ${b}`);
        return { t: 'bool', v: b === 1 };
      }
      case TAG.int:
        return { t: 'int', v: this.i64() };
      case TAG.float:
        return { t: 'float', v: this.f64() };
      case TAG.str:
        return { t: 'str', v: this.str() };
      case TAG.bytes:
        return { t: 'bytes', v: Uint8Array.from(this.take(this.u32())) };
      case TAG.tensor:
        return this.tensorBody();
      case TAG.list: {
        const count = this.u32();
        if (count > this.remaining) throw new MalformedError('list count exceeds remaining bytes');
        const items: Value[] = [];
        for (let i = 0; i < count; i++) items.push(this.value(depth + 1));
        return { t: 'list', items };
      }
      case TAG.map:
        return { t: 'map', entries: this.mapBody(depth) };
      default:
        throw new MalformedError(`unknown value tag 0x${tag.toString(16)}`);
    }
  }

  private tensorBody(): TensorValue {
    const code = this.u8();
    const dtype = CODE_DTYPE[code];
    if (dtype === undefined) throw new MalformedError(`unknown tensor dtype code ${code}`);
    const rank = this.u8();
    const shape: number[] = [];
    let count = 1;
    for (let i = 0; i < rank; i++) {
      const dim = this.u32();
      shape.push(dim);
      count *= dim;
      if (count * DTYPE_WIDTH[dtype] > MAX_FRAME) {
        throw new MalformedError('tensor dimensions overflow the frame limit');
      }
    }
    const raw = this.take(count * DTYPE_WIDTH[dtype]);
    const data: Array<number | bigint> = [];
    for (let i = 0; i < count; i++) {
      switch (dtype) {
        case 'f32':
          data.push(raw.readFloatLE(i * 4));
          break;
        case 'f64':
          data.push(raw.readDoubleLE(i * 8));
          break;
        case 'i32':
          data.push(raw.readInt32LE(i * 4));
          break;
        case 'i64':
          data.push(raw.readBigInt64LE(i * 8));
          break;
        case 'u8':
          data.push(raw.readUInt8(i));
          break;
      }
    }
    return { t: 'tensor', dtype, shape, data: data as number[] | bigint[] };
  }

  mapBody(depth = 0): ValueMap {
    const count = this.u32();
    if (count > this.remaining) throw new MalformedError('map count exceeds remaining bytes');
    const entries: ValueMap = {};
    let prev: Buffer | null = null;
    for (let i = 0; i < count; i++) {
      const raw = Buffer.from(this.take(this.u32()));
      if (prev !== null && Buffer.compare(raw, prev) <= 0) {
        throw new MalformedError('map keys not in strictly ascending byte order');
      }
      prev = raw;
      entries[raw.toString('utf8')] = this.value(depth + 1);
    }
    return entries;
  }

  space(): Space {
    const kind = this.u8();
    if (kind === 0x00) {
      const n = this.u32();
      if (n < 1) throw new MalformedError('Discrete.n must be >= 1');
      return { kind: 'discrete', n };
    }
    if (kind === 0x01) {
      const low = this.value();
      const high = this.value();
      if (low.t !== 'tensor' || high.t !== 'tensor') {
        throw new MalformedError('Box bounds must be tensors');
      }
      return { kind: 'box', low, high };
    }
    throw new MalformedError(`unknown space kind 0x${kind.toString(16)}`);
  }

  spaceMap(): SpaceMap {
    const count = this.u32();
    if (count > this.remaining) throw new MalformedError('space map count exceeds remaining bytes');
    const out: SpaceMap = {};
    for (let i = 0; i < count; i++) {
      const key = this.take(this.u32()).toString('utf8');
      out[key] = this.space();
    }
    return out;
  }

  strList(): string[] {
    const count = this.u32();
    if (count > this.remaining) throw new MalformedError('string list count exceeds remaining bytes');
    const out: string[] = [];
    for (let i = 0; i < count; i++) out.push(this.str());
    return out;
  }
}

// --- public API ---------------------------------------------------------------------------

export function encodeValue(v: Value): Buffer {
  const w = new Writer();
  w.value(v);
  return w.bytes();
}

export function decodeValue(b: Buffer): Value {
  const r = new Reader(b);
  const v = r.value();
  r.expectExhausted();
  return v;
}

function typedFloatMap(m: ValueMap): Record<string, number> {
  const out: Record<string, number> = {};
  for (const [k, v] of Object.entries(m)) {
    if (v.t !== 'float') throw new MalformedError(`reward for ${k} is not a Float`);
    out[k] = v.v;
  }
  return out;
}

function typedBoolMap(m: ValueMap): Record<string, boolean> {
  const out: Record<string, boolean> = {};
  for (const [k, v] of Object.entries(m)) {
    if (v.t !== 'bool') throw new MalformedError(`done flag for ${k} is not a Bool`);
    out[k] = v.v;
  }
  return out;
}

export function encodeMessage(m: Message): Buffer {
  const w = new Writer();
  switch (m.type) {
    case 'hello':
      w.u8(MSG.hello);
      w.u16(m.version);
      w.strList(m.agents);
      break;
    case 'hello_ack':
      w.u8(MSG.helloAck);
      w.strList(m.agents);
      w.spaceMap(m.observationSpace);
      w.spaceMap(m.actionSpace);
      w.u32(m.barrierTimeoutMs);
      break;
    case 'reset':
      w.u8(MSG.reset);
      if (m.seed === null) {
        w.u8(0);
      } else {
        w.u8(1);
        w.u64(m.seed);
      }
      break;
    case 'reset_result':
      w.u8(MSG.resetResult);
      w.mapBody(m.observation);
      w.mapBody(m.info);
      break;
    case 'step':
      w.u8(MSG.step);
      w.mapBody(m.actions);
      break;
    case 'step_result': {
      w.u8(MSG.stepResult);
      w.mapBody(m.observation);
      const rewards: ValueMap = {};
      for (const [k, v] of Object.entries(m.reward)) rewards[k] = { t: 'float', v };
      w.mapBody(rewards);
      const dones: ValueMap = {};
      for (const [k, v] of Object.entries(m.done)) dones[k] = { t: 'bool', v };
      w.mapBody(dones);
      w.mapBody(m.lastAction);
      w.mapBody(m.info);
      break;
    }
    case 'close':
      w.u8(MSG.close);
      break;
    case 'side_channel':
      w.u8(MSG.sideChannel);
      w.str(m.key);
      w.value(m.value);
      break;
    case 'space_query':
      w.u8(MSG.spaceQuery);
      break;
    case 'space_reply':
      w.u8(MSG.spaceReply);
      w.spaceMap(m.observationSpace);
      w.spaceMap(m.actionSpace);
      break;
    case 'error':
      w.u8(MSG.error);
      w.u16(m.code);
      w.str(m.message);
      break;
  }
  const body = w.bytes();
  if (body.length > MAX_FRAME) {
    throw new OversizeError(`frame body of ${body.length} bytes exceeds ${MAX_FRAME}`);
  }
  const header = Buffer.alloc(4);
  header.writeUInt32BE(body.length);
  return Buffer.concat([header, body]);
}

function decodeBody(body: Buffer): Message {
  const r = new Reader(body);
  const mtype = r.u8();
  let msg: Message;
  switch (mtype) {
    case MSG.hello:
      msg = { type: 'hello', version: r.u16(), agents: r.strList() };
      break;
    case MSG.helloAck:
      msg = {
        type: 'hello_ack',
        agents: r.strList(),
        observationSpace: r.spaceMap(),
        actionSpace: r.spaceMap(),
        barrierTimeoutMs: r.u32(),
      };
      break;
    case MSG.reset: {
      const flag = r.u8();
      if (flag !== 0 && flag !== 1) throw new MalformedError('reset seed flag must be 0 or 1');
      msg = { type: 'reset', seed: flag === 1 ? r.u64() : null };
      break;
    }
    case MSG.resetResult:
      msg = { type: 'reset_result', observation: r.mapBody(), info: r.mapBody() };
      break;
    case MSG.step:
      msg = { type: 'step', actions: r.mapBody() };
      break;
    case MSG.stepResult:
      msg = {
        type: 'step_result',
        observation: r.mapBody(),
        reward: typedFloatMap(r.mapBody()),
        done: typedBoolMap(r.mapBody()),
        lastAction: r.mapBody(),
        info: r.mapBody(),
      };
      break;
    case MSG.close:
      msg = { type: 'close' };
      break;
    case MSG.sideChannel:
      msg = { type: 'side_channel', key: r.str(), value: r.value() };
      break;
    case MSG.spaceQuery:
      msg = { type: 'space_query' };
      break;
    case MSG.spaceReply:
      msg = { type: 'space_reply', observationSpace: r.spaceMap(), actionSpace: r.spaceMap() };
      break;
    case MSG.error:
      msg = { type: 'error', code: r.u16(), message: r.str() };
      break;
    default:
      throw new UnknownTypeError(`unknown message type 0x${mtype.toString(16)}`);
  }
  r.expectExhausted();
  return msg;
}

export function decodeMessage(frame: Buffer): Message {
  if (frame.length < 4) throw new MalformedError('frame shorter than its length prefix');
  const length = frame.readUInt32BE(0);
  if (length > MAX_FRAME) throw new OversizeError(`declared frame length ${length} exceeds ${MAX_FRAME}`);
  if (frame.length - 4 < length) throw new MalformedError('frame body truncated');
  if (frame.length - 4 > length) throw new TrailingBytesError('bytes beyond the declared frame length');
  if (length === 0) throw new MalformedError('empty frame body');
  return decodeBody(frame.subarray(4, 4 + length));
}

/** Incremental frame splitter; chunk boundaries never affect output. */
export class StreamDecoder {
  private buf: Buffer = Buffer.alloc(0);

  feed(data: Buffer): Message[] {
    this.buf = this.buf.length === 0 ? Buffer.from(data) : Buffer.concat([this.buf, data]);
    const out: Message[] = [];
    for (;;) {
      if (this.buf.length < 4) break;
      const length = this.buf.readUInt32BE(0);
      if (length > MAX_FRAME) throw new OversizeError(`declared frame length ${length} exceeds ${MAX_FRAME}`);
      if (this.buf.length < 4 + length) break;
      const body = this.buf.subarray(4, 4 + length);
      this.buf = Buffer.from(this.buf.subarray(4 + length));
      if (length === 0) throw new MalformedError('empty frame body');
      out.push(decodeBody(Buffer.from(body)));
    }
    return out;
  }

  eof(): void {
    if (this.buf.length > 0) {
      throw new MalformedError(`stream ended mid-frame with ${this.buf.length} bytes buffered`);
    }
  }
}
