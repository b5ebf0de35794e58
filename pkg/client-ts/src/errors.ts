/** Client-side error taxonomy mirroring the server's wire codes. */

export class EnvlinkError extends Error {}

export class ConnectionRefusedError extends EnvlinkError {}
export class ConnectionLostError extends EnvlinkError {}
export class EnvClosedError extends EnvlinkError {}
export class ProtocolViolationError extends EnvlinkError {}
export class ConfigError extends EnvlinkError {}

/** Error reported by the server, carrying its protocol code. */
export class ServerError extends EnvlinkError {
  constructor(
    public readonly code: number,
    message: string,
  ) {
    super(message);
    this.name = SERVER_ERROR_NAMES[code] ?? `ServerError(${code})`;
  }
}

export const SERVER_ERROR_NAMES: Record<number, string> = {
  1: 'VersionMismatch',
  2: 'AgentTaken',
  3: 'UnknownAgent',
  4: 'NotOwner',
  5: 'BarrierTimeout',
  6: 'RoundAborted',
  7: 'ClientLost',
  8: 'Protocol',
  9: 'NotReset',
  10: 'EpisodeOver',
  11: 'MissingAgent',
  12: 'SpaceMismatch',
  13: 'EnvClosed',
  14: 'EnvError',
};
