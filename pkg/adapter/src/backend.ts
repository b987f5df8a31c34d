/**
 * Embedding backends. A backend vectorizes frames and prompt texts into a
 * shared latent space; the adapter only ever consumes cosine similarities.
 *
 * The mock backend serves injectable vectors from a JSON fixture, so the
 * whole adapter is testable without downloading model weights. Real
 * image-text models plug in behind the same interface.
 */

import { readFileSync } from 'node:fs';
import { basename } from 'node:path';

export interface EmbeddingBackend {
  readonly id: string;
  readonly dimension: number;
  /** When true, emitted vectors must be unit-norm (asserted per batch). */
  readonly normalizes: boolean;
  embedImage(framePath: string): Promise<number[]>;
  embedTexts(texts: string[]): Promise<number[][]>;
}

export function dot(u: number[], v: number[]): number {
  let acc = 0;
  for (let i = 0; i < u.length; i++) acc += u[i] * v[i];
  return acc;
}

export function norm(u: number[]): number {
  return Math.sqrt(dot(u, u));
}

/** Cosine similarity, clamped to [-1, 1] against rounding overshoot. */
export function cosine(u: number[], v: number[]): number {
  const denominator = norm(u) * norm(v);
  if (denominator === 0) throw new Error('cosine undefined for zero vectors');
  return Math.min(1, Math.max(-1, dot(u, v) / denominator));
}

export function assertUnitNorm(vectors: number[][], what: string): void {
  for (const vec of vectors) {
    const n = norm(vec);
    if (Math.abs(n - 1) > 1e-6) {
      throw new Error(`${what}: backend declared unit-norm output but |v| = ${n}`);
    }
  }
}

interface MockFixture {
  dimension: number;
  normalizes?: boolean;
  images: Record<string, number[]>;
  texts: Record<string, number[]>;
}

/**
 * Deterministic backend fed from a fixture: frame basenames and prompt texts
 * map to fixed vectors. Missing entries throw, which is exactly how per-frame
 * backend failures are simulated in tests.
 */
export class MockBackend implements EmbeddingBackend {
  readonly id = 'mock';
  readonly dimension: number;
  readonly normalizes: boolean;
  imageCalls = 0;
  textCalls = 0;

  constructor(private readonly fixture: MockFixture) {
    this.dimension = fixture.dimension;
    this.normalizes = fixture.normalizes ?? false;
    for (const [key, vec] of [...Object.entries(fixture.images), ...Object.entries(fixture.texts)]) {
      if (vec.length !== this.dimension) {
        throw new Error(`fixture vector for ${key} has length ${vec.length}, expected ${this.dimension}`);
      }
    }
  }

  static fromFile(path: string): MockBackend {
    return new MockBackend(JSON.parse(readFileSync(path, 'utf-8')) as MockFixture);
  }

  async embedImage(framePath: string): Promise<number[]> {
    this.imageCalls += 1;
    const vec = this.fixture.images[basename(framePath)];
    if (vec === undefined) throw new Error(`mock backend has no vector for ${basename(framePath)}`);
    return vec.slice();
  }

  async embedTexts(texts: string[]): Promise<number[][]> {
    this.textCalls += 1;
    return texts.map((text) => {
      const vec = this.fixture.texts[text];
      if (vec === undefined) throw new Error(`mock backend has no vector for prompt ${JSON.stringify(text)}`);
      return vec.slice();
    });
  }
}

export function createBackend(id: string, configPath?: string): EmbeddingBackend {
  if (id === 'mock') {
    if (!configPath) throw new Error('the mock backend needs --backend-config <vectors.json>');
    return MockBackend.fromFile(configPath);
  }
  throw new Error(`unknown backend ${JSON.stringify(id)}; available: mock`);
}
