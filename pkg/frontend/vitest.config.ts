import { defineConfig } from "vitest/config";

// Integration suites spawn a real triage service per file; keep files
// sequential so they never fight over CPU or ports.
export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    globalSetup: "tests/fixture/global-setup.ts",
    fileParallelism: false,
    testTimeout: 120_000,
    hookTimeout: 300_000,
  },
});
