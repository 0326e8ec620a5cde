#!/usr/bin/env node
import { constants } from "node:fs";
import { access, rename, unlink, writeFile } from "node:fs/promises";
import { realpathSync } from "node:fs";
import { pathToFileURL } from "node:url";

import { R2Client } from "./r2client.js";
import { buildReport } from "./report.js";

export const USAGE = "usage: r2adapter <binary> -o <report.json> [--timeout N] [--deep]";

export class UsageError extends Error {}

export interface AdapterConfig {
  binary: string;
  output: string;
  /** Full auto-analysis (aaa) instead of the basic pass (aa). */
  deep: boolean;
  /** Whole-run deadline in seconds; must be positive. */
  timeoutSec: number;
}

export function parseArgv(argv: string[]): AdapterConfig {
  let binary: string | undefined;
  let output: string | undefined;
  let deep = false;
  let timeoutSec = 60;

  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i]!;
    if (arg === "--deep") {
      deep = true;
    } else if (arg === "-o" || arg === "--output") {
      output = argv[++i];
      if (output === undefined) throw new UsageError(`${arg} needs a file path`);
    } else if (arg === "--timeout") {
      const raw = argv[++i];
      timeoutSec = raw === undefined ? NaN : Number(raw);
      if (!Number.isFinite(timeoutSec) || timeoutSec <= 0) {
        throw new UsageError("--timeout needs a positive number of seconds");
      }
    } else if (arg.startsWith("-")) {
      throw new UsageError(`unknown option ${arg}`);
    } else if (binary === undefined) {
      binary = arg;
    } else {
      throw new UsageError(`unexpected argument ${arg}`);
    }
  }

  if (binary === undefined) throw new UsageError("missing binary path");
  if (output === undefined) throw new UsageError("missing -o <report.json>");
  return { binary, output, deep, timeoutSec };
}

export async function run(config: AdapterConfig): Promise<void> {
  try {
    await access(config.binary, constants.R_OK);
  } catch {
    throw new Error(`cannot read binary: ${config.binary}`);
  }

  const r2 = await R2Client.open(config.binary, { deadlineMs: config.timeoutSec * 1000 });
  let report;
  try {
    report = await buildReport(r2, { deep: config.deep }, (line) =>
      console.error(`r2adapter: ${line}`),
    );
  } finally {
    await r2.close();
  }

  // Write the finished document next to the target and rename it into
  // place, so a timeout or crash never leaves a half-written report.
  const tmp = `${config.output}.tmp-${process.pid}`;
  try {
    await writeFile(tmp, JSON.stringify(report, null, 2) + "\n");
    await rename(tmp, config.output);
  } catch (err) {
    await unlink(tmp).catch(() => {});
    throw err;
  }

  const blockCount = report.functions.reduce((n, f) => n + f.blocks.length, 0);
  console.log(`wrote ${config.output} (${report.functions.length} functions, ${blockCount} blocks)`);
}

export async function main(argv: string[] = process.argv.slice(2)): Promise<number> {
  let config: AdapterConfig;
  try {
    config = parseArgv(argv);
  } catch (err) {
    console.error(`r2adapter: ${(err as Error).message}`);
    console.error(USAGE);
    return 2;
  }
  try {
    await run(config);
    return 0;
  } catch (err) {
    console.error(`r2adapter: error: ${(err as Error).message}`);
    return 1;
  }
}

const invokedAs = process.argv[1] ? pathToFileURL(realpathSync(process.argv[1])).href : "";
if (import.meta.url === invokedAs) {
  main().then((code) => process.exit(code));
}
