import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["test/**/*.test.ts"],
    // each test drives the native CLI in a subprocess; allow for
    // interpreter startup and a few solves per test
    testTimeout: 180_000,
    hookTimeout: 60_000,
    fileParallelism: false,
  },
});
