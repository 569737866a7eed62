import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "node",
    testTimeout: 15_000,
    // the round-trip suite builds a study bundle via the python CLI in beforeAll
    hookTimeout: 180_000,
  },
});
