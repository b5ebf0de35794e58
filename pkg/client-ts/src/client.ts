/**
 * Minimal client for a served environment: connect, reset, step, close, and
 * the side channel, with the same semantics as an in-process environment.
 *
 * One request may be in flight at a time (step blocks until the server's
 * barrier round completes); unsolicited broadcasts -- side-channel messages
 * and round aborts for rounds this client never joined -- are handled in the
 * background.
 */

import * as net from 'node:net';

import {
  ConfigError,
  ConnectionLostError,
  ConnectionRefusedError,
  EnvClosedError,
  ProtocolViolationError,
  ServerError,
} from './errors.js';
import {
  DEFAULT_PORT,
  Message,
  PROTOCOL_VERSION,
  SpaceMap,
  StreamDecoder,
  ValueMap,
  encodeMessage,
} from './wire.js';
import { Value } from './values.js';

export interface ConnectOptions {
  host?: string;
  port?: number;
  /** Agent ids to control; empty claims every agent the server advertises. */
  agents?: string[];
  connectTimeoutMs?: number;
  requestTimeoutMs?: number;
}

export interface ResetOutcome {
  observation: ValueMap;
  info: ValueMap;
}

export interface StepOutcome {
  observation: ValueMap;
  reward: Record<string, number>;
  done: Record<string, boolean>;
  lastAction: ValueMap;
  info: ValueMap;
}

export interface SideChannelMessage {
  key: string;
  value: Value;
}

type SideChannelHandler = (message: SideChannelMessage) => void;

interface Pending {
  resolve: (msg: Message) => void;
  reject: (err: Error) => void;
  timer: NodeJS.Timeout;
}

export class ClientEnv {
  readonly agents: string[];
  readonly allAgents: string[];
  readonly observationSpace: SpaceMap;
  readonly actionSpace: SpaceMap;
  readonly barrierTimeoutMs: number;

  private socket: net.Socket;
  private decoder = new StreamDecoder();
  private pending: Pending | null = null;
  private closed = false;
  private broken: string | null = null;
  private requestTimeoutMs: number;
  private handlers: Array<[string, SideChannelHandler]> = [];
  private defaultHandler: SideChannelHandler | null = null;
  private droppedCount = 0;

  private constructor(
    socket: net.Socket,
    ack: Extract<Message, { type: 'hello_ack' }>,
    requestTimeoutMs: number,
  ) {
    this.socket = socket;
    this.agents = ack.agents;
    this.observationSpace = ack.observationSpace;
    this.actionSpace = ack.actionSpace;
    this.allAgents = Object.keys(ack.observationSpace).sort();
    this.barrierTimeoutMs = ack.barrierTimeoutMs;
    this.requestTimeoutMs = requestTimeoutMs;

    socket.on('data', (data) => this.onData(data));
    socket.on('error', (err) => this.onBroken(`socket error: ${err.message}`));
    socket.on('close', () => this.onBroken('connection closed by server'));
  }

  static connect(options: ConnectOptions = {}): Promise<ClientEnv> {
    const host = options.host ?? '127.0.0.1';
    const port = options.port ?? Number(process.env.ENVLINK_PORT ?? DEFAULT_PORT);
    const connectTimeoutMs = options.connectTimeoutMs ?? 10_000;
    const requestTimeoutMs = options.requestTimeoutMs ?? 60_000;

    return new Promise((resolve, reject) => {
      const socket = net.connect({ host, port });
      socket.setNoDelay(true);
      const timer = setTimeout(() => {
        socket.destroy();
        reject(new ConnectionRefusedError(`cannot reach ${host}:${port} within ${connectTimeoutMs}ms`));
      }, connectTimeoutMs);
      const decoder = new StreamDecoder();

      const fail = (err: Error) => {
        clearTimeout(timer);
        socket.removeAllListeners();
        socket.destroy();
        reject(err);
      };

      socket.once('error', (err) => fail(new ConnectionRefusedError(`cannot reach ${host}:${port}: ${err.message}`)));
      socket.on('connect', () => {
        socket.write(
          encodeMessage({ type: 'hello', version: PROTOCOL_VERSION, agents: options.agents ?? [] }),
        );
      });
      socket.on('data', (data) => {
        let msgs: Message[];
        try {
          msgs = decoder.feed(data);
        } catch (err) {
          fail(new ConnectionLostError(`handshake failed: ${(err as Error).message}`));
          return;
        }
        if (msgs.length === 0) return;
        const reply = msgs[0];
        clearTimeout(timer);
        socket.removeAllListeners();
        if (reply.type === 'error') {
          socket.destroy();
          reject(new ServerError(reply.code, reply.message));
          return;
        }
        if (reply.type !== 'hello_ack') {
          socket.destroy();
          reject(new ProtocolViolationError(`expected HelloAck, got ${reply.type}`));
          return;
        }
        if (requestTimeoutMs <= reply.barrierTimeoutMs) {
          socket.destroy();
          reject(
            new ConfigError(
              `requestTimeoutMs (${requestTimeoutMs}) must exceed the server barrier timeout (${reply.barrierTimeoutMs}ms)`,
            ),
          );
          return;
        }
        resolve(new ClientEnv(socket, reply, requestTimeoutMs));
      });
    });
  }

  // -- inbound routing ----------------------------------------------------

  private onData(data: Buffer): void {
    let msgs: Message[];
    try {
      msgs = this.decoder.feed(data);
    } catch (err) {
      this.onBroken(`protocol violation from server: ${(err as Error).message}`);
      return;
    }
    for (const msg of msgs) {
      if (msg.type === 'side_channel') {
        this.dispatchSideChannel({ key: msg.key, value: msg.value });
        continue;
      }
      if (this.pending !== null) {
        const pending = this.pending;
        this.pending = null;
        clearTimeout(pending.timer);
        if (msg.type === 'error') {
          pending.reject(new ServerError(msg.code, msg.message));
        } else {
          pending.resolve(msg);
        }
      }
      // otherwise: an unsolicited round broadcast; nothing to do
    }
  }

  private onBroken(reason: string): void {
    if (this.broken === null) this.broken = reason;
    if (this.pending !== null) {
      const pending = this.pending;
      this.pending = null;
      clearTimeout(pending.timer);
      pending.reject(new ConnectionLostError(reason));
    }
  }

  private dispatchSideChannel(message: SideChannelMessage): void {
    let best: [string, SideChannelHandler] | null = null;
    for (const entry of this.handlers) {
      if (message.key.startsWith(entry[0])) {
        if (best === null || entry[0].length > best[0].length) best = entry;
      }
    }
    if (best !== null) {
      best[1](message);
    } else if (this.defaultHandler !== null) {
      this.defaultHandler(message);
    } else {
      this.droppedCount += 1;
    }
  }

  // -- request/reply ----------------------------------------------------------

  private request(msg: Message): Promise<Message> {
    if (this.closed) return Promise.reject(new EnvClosedError('client is closed'));
    if (this.broken !== null) return Promise.reject(new ConnectionLostError(this.broken));
    if (this.pending !== null) {
      return Promise.reject(new ProtocolViolationError('one request may be in flight at a time'));
    }
    return new Promise((resolve, reject) => {
      const timer = setTimeout(() => {
        this.pending = null;
        reject(new ConnectionLostError(`no reply within ${this.requestTimeoutMs}ms`));
      }, this.requestTimeoutMs);
      this.pending = { resolve, reject, timer };
      this.socket.write(encodeMessage(msg));
    });
  }

  async reset(seed: bigint | number | null = null): Promise<ResetOutcome> {
    const reply = await this.request({
      type: 'reset',
      seed: seed === null ? null : BigInt(seed),
    });
    if (reply.type !== 'reset_result') {
      throw new ProtocolViolationError(`expected ResetResult, got ${reply.type}`);
    }
    return { observation: reply.observation, info: reply.info };
  }

  async step(actions: ValueMap): Promise<StepOutcome> {
    const reply = await this.request({ type: 'step', actions });
    if (reply.type !== 'step_result') {
      throw new ProtocolViolationError(`expected StepResultMsg, got ${reply.type}`);
    }
    return {
      observation: reply.observation,
      reward: reply.reward,
      done: reply.done,
      lastAction: reply.lastAction,
      info: reply.info,
    };
  }

  async querySpaces(): Promise<{ observationSpace: SpaceMap; actionSpace: SpaceMap }> {
    const reply = await this.request({ type: 'space_query' });
    if (reply.type !== 'space_reply') {
      throw new ProtocolViolationError(`expected SpaceReply, got ${reply.type}`);
    }
    return { observationSpace: reply.observationSpace, actionSpace: reply.actionSpace };
  }

  // -- side channel -----------------------------------------------------------------

  sendSideChannel(key: string, value: Value): void {
    if (this.closed) throw new EnvClosedError('client is closed');
    if (key.length === 0) throw new ConfigError('side-channel key must be non-empty');
    if (!['bool', 'int', 'float', 'str', 'bytes'].includes(value.t)) {
      throw new ConfigError(`side-channel value must be a scalar tag, got ${value.t}`);
    }
    this.socket.write(encodeMessage({ type: 'side_channel', key, value }));
  }

  registerSideChannel(prefix: string, handler: SideChannelHandler): void {
    if (this.handlers.some(([p]) => p === prefix)) {
      throw new ConfigError(`prefix ${prefix} already registered`);
    }
    this.handlers.push([prefix, handler]);
  }

  setDefaultSideChannelHandler(handler: SideChannelHandler | null): void {
    this.defaultHandler = handler;
  }

  get dropped(): number {
    return this.droppedCount;
  }

  // -- lifecycle ---------------------------------------------------------------------

  async close(): Promise<void> {
    if (this.closed) return;
    this.closed = true;
    try {
      this.socket.write(encodeMessage({ type: 'close' }));
    } catch {
      // best effort
    }
    await new Promise<void>((resolve) => {
      this.socket.once('close', () => resolve());
      this.socket.end();
      setTimeout(() => {
        this.socket.destroy();
        resolve();
      }, 1000).unref();
    });
  }
}
