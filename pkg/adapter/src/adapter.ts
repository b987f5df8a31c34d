/**
 * The conversion itself: embed every prompt once, embed frames, take cosines,
 * and emit the consumer's columnar similarity format. Per-frame backend
 * failures skip the row (the gap is recorded in the header); more than 10%
 * skipped aborts the run.
 */

import { writeFileSync } from 'node:fs';

import { EmbeddingBackend, assertUnitNorm, cosine } from './backend.js';
import { FrameBatch } from './frames.js';
import { Prompt, promptHash } from './prompts.js';

export const MAX_SKIP_FRACTION = 0.1;
const MAGIC = '# simstate similarity v1';

export interface EmitResult {
  content: string;
  rows: number;
  skipped: string[];
}

export interface EmitOptions {
  /** Extra header lines documenting preprocessing, `key: value` form. */
  preprocessing?: Record<string, string>;
  toolVersion?: string;
}

export async function embedAndEmit(
  batch: FrameBatch,
  prompts: Prompt[],
  backend: EmbeddingBackend,
  options: EmitOptions = {},
): Promise<EmitResult> {
  const textVectors = await backend.embedTexts(prompts.map((p) => p.text));
  if (textVectors.length !== prompts.length) {
    throw new Error(`backend returned ${textVectors.length} text vectors for ${prompts.length} prompts`);
  }
  if (backend.normalizes) assertUnitNorm(textVectors, 'prompt embeddings');

  const skipped: string[] = [];
  const rows: { t: number; values: number[] }[] = [];
  const settled = await Promise.all(
    batch.frames.map(async (frame) => {
      try {
        return { frame, vector: await backend.embedImage(frame.path) };
      } catch (err) {
        console.error(`warning: skipping ${frame.name}: ${(err as Error).message}`);
        return { frame, vector: null };
      }
    }),
  );
  // Rows are assembled in timestamp order no matter how embedding interleaved.
  for (const { frame, vector } of settled) {
    if (vector === null) {
      skipped.push(frame.name);
      continue;
    }
    if (backend.normalizes) assertUnitNorm([vector], `frame ${frame.name}`);
    rows.push({ t: frame.t, values: textVectors.map((q) => cosine(vector, q)) });
  }
  if (skipped.length > MAX_SKIP_FRACTION * batch.frames.length) {
    throw new Error(
      `backend failed on ${skipped.length} of ${batch.frames.length} frames (over ${MAX_SKIP_FRACTION * 100}%), aborting`,
    );
  }
  if (rows.length < 2) throw new Error('fewer than 2 frames embedded successfully');

  const lines: string[] = [MAGIC];
  lines.push(`# sample_rate_hz: ${batch.sampleRateHz}`);
  lines.push(`# n_prompts: ${prompts.length}`);
  lines.push(`# prompt_hash: ${promptHash(prompts)}`);
  lines.push('# has_time: true');
  const manifest = {
    command: 'embed',
    args: { backend: backend.id, dimension: backend.dimension, source: batch.sourceId },
    tool_version: options.toolVersion ?? '0.1.0',
  };
  lines.push(`# manifest: ${JSON.stringify(manifest)}`);
  lines.push(`# backend: ${backend.id} (dimension ${backend.dimension}, unit_norm ${backend.normalizes})`);
  for (const [key, value] of Object.entries(options.preprocessing ?? {})) {
    lines.push(`# preprocessing ${key}: ${value}`);
  }
  if (skipped.length > 0) {
    lines.push(`# skipped_frames: ${skipped.join(', ')}`);
  }
  for (const prompt of prompts) {
    lines.push(`# prompt: ${prompt.polarity > 0 ? '+1' : '-1'} ${prompt.text}`);
  }
  for (const row of rows) {
    lines.push([row.t, ...row.values].map(String).join('\t'));
  }
  return { content: lines.join('\n') + '\n', rows: rows.length, skipped };
}

export async function emitToFile(
  outPath: string,
  batch: FrameBatch,
  prompts: Prompt[],
  backend: EmbeddingBackend,
  options: EmitOptions = {},
): Promise<EmitResult> {
  const result = await embedAndEmit(batch, prompts, backend, options);
  writeFileSync(outPath, result.content, 'utf-8');
  return result;
}
