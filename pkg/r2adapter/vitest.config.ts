import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    // Every test shells out to node subprocesses; the real-r2 integration
    // test additionally compiles a fixture with gcc.
    testTimeout: 30_000,
    hookTimeout: 30_000,
  },
});
