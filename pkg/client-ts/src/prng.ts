/**
 * SplitMix64, the pinned PRNG of the envlink determinism contract.
 *
 * The byte-level protocol does not depend on it, but seeded policies do:
 * reproducing a server-side rollout exactly requires this exact stream.
 */

const MASK64 = (1n << 64n) - 1n;
const GAMMA = 0x9e3779b97f4a7c15n;
const MIX1 = 0xbf58476d1ce4e5b9n;
const MIX2 = 0x94d049bb133111ebn;

export class SplitMix64 {
  private state: bigint;

  constructor(seed: bigint | number) {
    const s = typeof seed === 'number' ? BigInt(seed) : seed;
    if (s < 0n || s > MASK64) {
      throw new RangeError('seed must be an unsigned 64-bit integer');
    }
    this.state = s;
  }

  nextU64(): bigint {
    this.state = (this.state + GAMMA) & MASK64;
    let z = this.state;
    z = ((z ^ (z >> 30n)) * MIX1) & MASK64;
    z = ((z ^ (z >> 27n)) * MIX2) & MASK64;
    return (z ^ (z >> 31n)) & MASK64;
  }

  /** Uniform double in [0, 1): high 53 bits of the next output / 2^53. */
  uniform(): number {
    return Number(this.nextU64() >> 11n) * 2 ** -53;
  }
}
