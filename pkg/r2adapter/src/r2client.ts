import { spawn, type ChildProcess } from "node:child_process";

/** The radare2 executable could not be started at all. */
export class R2NotFoundError extends Error {}

/** The session deadline fired before the analysis finished. */
export class R2TimeoutError extends Error {}

export interface R2OpenOptions {
  /** Executable to run; defaults to $R2ADAPTER_R2, then "r2". */
  r2Path?: string;
  /** Whole-session deadline in milliseconds. The process is killed when it fires. */
  deadlineMs: number;
}

interface Waiter {
  resolve: (out: string) => void;
  reject: (err: Error) => void;
}

/**
 * One radare2 process in quiet pipe mode (`r2 -q0 <binary>`).
 *
 * Protocol: r2 writes a single NUL byte once the session is ready, then
 * answers each newline-terminated command with its output followed by NUL.
 * Commands are answered strictly in order, so a FIFO of waiters suffices.
 */
export class R2Client {
  private buf: Buffer = Buffer.alloc(0);
  private pending: Waiter[] = [];
  private failure: Error | null = null;
  private timer: NodeJS.Timeout | null = null;

  private constructor(private readonly proc: ChildProcess) {}

  static open(binary: string, opts: R2OpenOptions): Promise<R2Client> {
    const r2Path = opts.r2Path ?? process.env.R2ADAPTER_R2 ?? "r2";
    // -q0: quiet pipe mode; -2: silence r2's own stderr chatter.
    const proc = spawn(r2Path, ["-q0", "-2", "--", binary], {
      stdio: ["pipe", "pipe", "inherit"],
    });
    const client = new R2Client(proc);

    proc.stdout!.on("data", (chunk: Buffer) => client.onData(chunk));
    proc.on("error", (err: NodeJS.ErrnoException) => {
      client.fail(
        err.code === "ENOENT"
          ? new R2NotFoundError(
              `radare2 executable not found: ${r2Path} (install radare2 or point R2ADAPTER_R2 at it)`,
            )
          : new Error(`failed to start ${r2Path}: ${err.message}`),
      );
    });
    proc.on("close", (code, signal) => {
      client.fail(new Error(`radare2 exited before answering (${signal ?? `code ${code}`})`));
    });

    client.timer = setTimeout(() => {
      client.fail(new R2TimeoutError(`radare2 analysis timed out after ${opts.deadlineMs / 1000}s`));
      proc.kill("SIGKILL");
    }, opts.deadlineMs);

    // The ready marker is a response like any other: an empty one.
    return client.expect().then(() => client);
  }

  /** Send one command and return its output with the trailing NUL stripped. */
  cmd(command: string): Promise<string> {
    if (this.failure) return Promise.reject(this.failure);
    const answer = this.expect();
    try {
      this.proc.stdin!.write(command + "\n");
    } catch (err) {
      this.fail(err as Error);
    }
    return answer;
  }

  /** Send one command and parse its output as JSON. */
  async cmdJson<T>(command: string): Promise<T> {
    const raw = (await this.cmd(command)).trim();
    // r2 occasionally lets a warning line precede the JSON payload.
    const start = raw.search(/[[{]/);
    try {
      return JSON.parse(start > 0 ? raw.slice(start) : raw || "null") as T;
    } catch {
      throw new Error(`radare2 returned invalid JSON for ${JSON.stringify(command)}`);
    }
  }

  /** Shut the session down; safe to call after a failure. */
  async close(): Promise<void> {
    if (this.timer) clearTimeout(this.timer);
    this.failure ??= new Error("radare2 session closed");
    if (this.proc.exitCode !== null || this.proc.signalCode !== null) return;
    const exited = new Promise<void>((res) => this.proc.once("close", () => res()));
    this.proc.stdin!.end();
    const grace = new Promise<void>((res) => setTimeout(res, 500));
    await Promise.race([exited, grace]);
    if (this.proc.exitCode === null && this.proc.signalCode === null) {
      this.proc.kill("SIGKILL");
      await exited;
    }
  }

  private onData(chunk: Buffer): void {
    this.buf = Buffer.concat([this.buf, chunk]);
    let nul: number;
    while ((nul = this.buf.indexOf(0)) >= 0) {
      const out = this.buf.subarray(0, nul).toString("utf8");
      this.buf = this.buf.subarray(nul + 1);
      this.pending.shift()?.resolve(out);
    }
  }

  /** First failure wins; everything in flight is rejected with it. */
  private fail(err: Error): void {
    this.failure ??= err;
    if (this.timer) clearTimeout(this.timer);
    for (const waiter of this.pending.splice(0)) waiter.reject(this.failure);
  }

  private expect(): Promise<string> {
    return new Promise((resolve, reject) => {
      if (this.failure) return reject(this.failure);
      this.pending.push({ resolve, reject });
    });
  }
}
