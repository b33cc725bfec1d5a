import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    // Integration tests boot the Python service in a child process.
    testTimeout: 30_000,
    hookTimeout: 30_000,
  },
});
