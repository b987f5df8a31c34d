#!/usr/bin/env node
/**
 * simstate-adapter: frames + prompts -> similarity file.
 *
 *   simstate-adapter --input frames/ --prompts prompts.txt \
 *       --backend mock --backend-config vectors.json --out recording.sim
 *
 * Video inputs are out of scope: extract frames (and crop the region of
 * interest) upstream, then point --input at the frame directory.
 */

import { parseArgs } from 'node:util';
import { pathToFileURL } from 'node:url';

import { createBackend } from './backend.js';
import { emitToFile } from './adapter.js';
import { loadFrameBatch } from './frames.js';
import { readPromptFile } from './prompts.js';

const VERSION = '0.1.0';

const USAGE = `usage: simstate-adapter --input <frame dir> --prompts <file> --out <file>
                        [--backend mock] [--backend-config <vectors.json>]
                        [--fps <hz>]

Frame timestamps come from frames.json in the input directory ([{file, t}]),
or uniformly from --fps over the name-sorted listing.`;

export async function main(argv: string[]): Promise<number> {
  let args;
  try {
    args = parseArgs({
      args: argv,
      options: {
        input: { type: 'string' },
        prompts: { type: 'string' },
        out: { type: 'string' },
        backend: { type: 'string', default: 'mock' },
        'backend-config': { type: 'string' },
        fps: { type: 'string' },
        help: { type: 'boolean', default: false },
        version: { type: 'boolean', default: false },
      },
    }).values;
  } catch (err) {
    console.error((err as Error).message);
    console.error(USAGE);
    return 2;
  }
  if (args.help) {
    console.log(USAGE);
    return 0;
  }
  if (args.version) {
    console.log(`simstate-adapter ${VERSION}`);
    return 0;
  }
  if (!args.input || !args.prompts || !args.out) {
    console.error('missing required option(s): --input, --prompts, --out');
    console.error(USAGE);
    return 2;
  }
  try {
    const fps = args.fps === undefined ? undefined : Number(args.fps);
    const batch = loadFrameBatch(args.input, fps);
    const prompts = readPromptFile(args.prompts);
    const backend = createBackend(args.backend!, args['backend-config']);
    const result = await emitToFile(args.out, batch, prompts, backend, {
      toolVersion: VERSION,
      preprocessing: { cropping: 'input frames are consumed as-is (pre-cropped upstream)' },
    });
    console.log(
      `wrote ${args.out}: ${result.rows} rows x ${prompts.length} prompts` +
        (result.skipped.length ? `, skipped ${result.skipped.length} frames` : ''),
    );
    return 0;
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    return 2;
  }
}

if (process.argv[1] !== undefined && import.meta.url === pathToFileURL(process.argv[1]).href) {
  main(process.argv.slice(2)).then((code) => {
    process.exitCode = code;
  });
}
