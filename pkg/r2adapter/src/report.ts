import type { R2Client } from "./r2client.js";

/** Longest instruction-type token the report schema accepts. */
export const INSN_TOKEN_MAX_LEN = 32;

export interface ReportBlock {
  offset: number;
  insn_types: string[];
}

export interface ReportFunction {
  name: string | null;
  offset: number;
  /** The disassembler's declared cyclomatic complexity; omitted when it gave none. */
  cc?: number;
  blocks: ReportBlock[];
  edges: Array<[number, number]>;
}

/** The JSON document consumed by libident's load_report. */
export interface AnalysisReport {
  architecture: string;
  endianness: "little" | "big";
  functions: ReportFunction[];
}

export interface ExtractOptions {
  /** Run full auto-analysis (aaa) instead of the basic pass (aa). */
  deep: boolean;
}

export type Logger = (line: string) => void;

/** Shapes of the radare2 JSON we rely on; every field is double-checked. */
interface R2Info {
  arch?: string;
  bits?: number;
  endian?: string;
}
interface R2Function {
  offset?: number;
  name?: string;
  cc?: number;
}
interface R2Block {
  addr?: number;
  jump?: number;
  fail?: number;
}
interface R2Insn {
  type?: string;
}

/**
 * Normalize a disassembler instruction-type field into a schema-legal token:
 * lowercased printable ASCII without the '|' join separator, at most
 * 32 characters, never empty.
 */
export function normalizeInsnType(raw: unknown): string {
  let out = "";
  for (const ch of String(raw ?? "").toLowerCase()) {
    const code = ch.charCodeAt(0);
    if (code >= 0x20 && code <= 0x7e && ch !== "|") out += ch;
  }
  out = out.trim().slice(0, INSN_TOKEN_MAX_LEN);
  return out === "" ? "unk" : out;
}

function mapArchitecture(info: R2Info): string {
  const arch = (info.arch ?? "").trim().toLowerCase();
  if (arch === "") return "unknown";
  // r2 reports 64-bit x86 as arch "x86", bits 64.
  if (arch === "x86" && info.bits === 64) return "x86_64";
  return arch;
}

function isOffset(value: unknown): value is number {
  return typeof value === "number" && Number.isSafeInteger(value) && value >= 0;
}

/**
 * Run the analysis pass and assemble the report: one entry per discovered
 * function with its basic blocks (as instruction-type sequences) and the
 * intra-function edges taken from each block's jump/fail successors.
 * Calls never create edges; successors outside the function are dropped.
 */
export async function buildReport(
  r2: R2Client,
  opts: ExtractOptions,
  log: Logger,
): Promise<AnalysisReport> {
  await r2.cmd(opts.deep ? "aaa" : "aa");

  const info = (await r2.cmdJson<R2Info | null>("iIj")) ?? {};
  let endianness: "little" | "big";
  if (info.endian === "little" || info.endian === "big") {
    endianness = info.endian;
  } else {
    endianness = "little";
    log(`unrecognized endianness ${JSON.stringify(info.endian)}; assuming little`);
  }

  const rawFunctions = (await r2.cmdJson<R2Function[] | null>("aflj")) ?? [];
  const seenOffsets = new Set<number>();
  const functions: ReportFunction[] = [];

  for (const fn of rawFunctions) {
    if (!isOffset(fn.offset)) {
      log(`skipping function with unusable offset ${JSON.stringify(fn.offset)}`);
      continue;
    }
    const offset = fn.offset;
    const label = fn.name ?? `0x${offset.toString(16)}`;
    if (seenOffsets.has(offset)) {
      log(`skipping ${label}: duplicate function offset 0x${offset.toString(16)}`);
      continue;
    }
    seenOffsets.add(offset);

    const func = await buildFunction(r2, offset, fn.name ?? null, fn.cc, label, log);
    if (func) functions.push(func);
  }

  functions.sort((a, b) => a.offset - b.offset);
  return { architecture: mapArchitecture(info), endianness, functions };
}

async function buildFunction(
  r2: R2Client,
  offset: number,
  name: string | null,
  rawCc: number | undefined,
  label: string,
  log: Logger,
): Promise<ReportFunction | null> {
  const rawBlocks = (await r2.cmdJson<R2Block[] | null>(`afbj @ ${offset}`)) ?? [];
  const blocks: ReportBlock[] = [];
  const successors: Array<[number, number]> = [];
  const blockOffsets = new Set<number>();

  for (const block of rawBlocks) {
    if (!isOffset(block.addr)) {
      log(`${label}: skipping block with unusable address ${JSON.stringify(block.addr)}`);
      continue;
    }
    if (blockOffsets.has(block.addr)) {
      log(`${label}: skipping duplicate block 0x${block.addr.toString(16)}`);
      continue;
    }
    const insns = (await r2.cmdJson<R2Insn[] | null>(`pdbj @ ${block.addr}`)) ?? [];
    if (insns.length === 0) {
      log(`${label}: dropping empty block 0x${block.addr.toString(16)}`);
      continue;
    }
    blockOffsets.add(block.addr);
    blocks.push({
      offset: block.addr,
      insn_types: insns.map((insn) => normalizeInsnType(insn.type)),
    });
    for (const target of [block.jump, block.fail]) {
      if (isOffset(target)) successors.push([block.addr, target]);
    }
  }

  if (blocks.length === 0) {
    log(`dropping ${label}: no non-empty basic blocks`);
    return null;
  }
  blocks.sort((a, b) => a.offset - b.offset);

  // Keep only successors that stay inside this function's block set.
  const edges: Array<[number, number]> = [];
  const seenEdges = new Set<string>();
  for (const [src, dst] of successors) {
    if (!blockOffsets.has(dst)) continue;
    const key = `${src}>${dst}`;
    if (seenEdges.has(key)) continue;
    seenEdges.add(key);
    edges.push([src, dst]);
  }
  edges.sort((a, b) => a[0] - b[0] || a[1] - b[1]);

  const declared =
    typeof rawCc === "number" && Number.isInteger(rawCc) && rawCc >= 1 ? rawCc : undefined;
  const computed = Math.max(1, edges.length - blocks.length + 2);
  if (declared !== undefined && declared !== computed) {
    log(
      `${label} (0x${offset.toString(16)}): inconsistent cc: declared ${declared}, ` +
        `edges - blocks + 2 gives ${computed}; keeping the declared value`,
    );
  }

  return {
    name,
    offset,
    ...(declared !== undefined ? { cc: declared } : {}),
    blocks,
    edges,
  };
}
