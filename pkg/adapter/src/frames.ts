/**
 * Frame enumeration. A recording is a directory of pre-cropped frames; the
 * time axis comes either from a frames.json manifest ([{file, t}]) or from a
 * fixed frame rate over the name-sorted listing. Region-of-interest cropping
 * happens upstream, before frames reach the adapter.
 */

import { existsSync, readFileSync, readdirSync, statSync } from 'node:fs';
import { join } from 'node:path';

export interface Frame {
  path: string;
  name: string;
  t: number;
}

export interface FrameBatch {
  sourceId: string;
  frames: Frame[];
  sampleRateHz: number;
}

const MANIFEST_NAME = 'frames.json';
const IMAGE_EXTENSIONS = new Set(['.png', '.jpg', '.jpeg', '.bmp', '.webp', '.tif', '.tiff']);

interface ManifestEntry {
  file: string;
  t: number;
}

function looksLikeImage(name: string): boolean {
  const dotAt = name.lastIndexOf('.');
  return dotAt > 0 && IMAGE_EXTENSIONS.has(name.slice(dotAt).toLowerCase());
}

export function loadFrameBatch(dir: string, fps?: number): FrameBatch {
  if (!existsSync(dir) || !statSync(dir).isDirectory()) {
    throw new Error(`frame input must be a directory of images: ${dir}`);
  }
  const manifestPath = join(dir, MANIFEST_NAME);
  let frames: Frame[];
  let rate: number;
  if (existsSync(manifestPath)) {
    const entries = JSON.parse(readFileSync(manifestPath, 'utf-8')) as ManifestEntry[];
    frames = entries.map((e) => ({ path: join(dir, e.file), name: e.file, t: e.t }));
    const spans = frames.slice(1).map((f, i) => f.t - frames[i].t);
    const median = spans.slice().sort((a, b) => a - b)[Math.floor(spans.length / 2)];
    rate = fps ?? (median > 0 ? 1 / median : NaN);
  } else {
    if (fps === undefined || !(fps > 0)) {
      throw new Error(`no ${MANIFEST_NAME} in ${dir}: pass --fps to assign uniform timestamps`);
    }
    const names = readdirSync(dir)
      .filter((n) => !n.startsWith('.') && looksLikeImage(n))
      .sort();
    frames = names.map((name, k) => ({ path: join(dir, name), name, t: k / fps }));
    rate = fps;
  }
  if (frames.length < 2) throw new Error(`need at least 2 frames, found ${frames.length}`);
  for (let i = 1; i < frames.length; i++) {
    if (!(frames[i].t > frames[i - 1].t)) {
      throw new Error(
        `frame timestamps must be strictly increasing (${frames[i - 1].name} -> ${frames[i].name})`,
      );
    }
  }
  if (!(rate > 0) || !Number.isFinite(rate)) {
    throw new Error('could not derive a positive sample rate; pass --fps');
  }
  return { sourceId: dir, frames, sampleRateHz: rate };
}
