export { SplitMix64 } from './prng.js';
export {
  ClientEnv,
  type ConnectOptions,
  type ResetOutcome,
  type StepOutcome,
  type SideChannelMessage,
} from './client.js';
export {
  ConfigError,
  ConnectionLostError,
  ConnectionRefusedError,
  EnvClosedError,
  EnvlinkError,
  ProtocolViolationError,
  ServerError,
  SERVER_ERROR_NAMES,
} from './errors.js';
export { contains, sample } from './spaces.js';
export {
  DEFAULT_PORT,
  MAX_FRAME,
  PROTOCOL_VERSION,
  StreamDecoder,
  decodeMessage,
  decodeValue,
  encodeMessage,
  encodeValue,
  MalformedError,
  OversizeError,
  TrailingBytesError,
  UnknownTypeError,
  WireError,
  type BoxSpace,
  type DiscreteSpace,
  type Message,
  type Space,
  type SpaceMap,
  type ValueMap,
} from './wire.js';
export {
  fromPortable,
  valuesEqual,
  vBool,
  vBytes,
  vFloat,
  vInt,
  vList,
  vMap,
  vStr,
  vTensor,
  type Dtype,
  type TensorValue,
  type Value,
} from './values.js';
