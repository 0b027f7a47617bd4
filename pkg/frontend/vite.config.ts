import { defineConfig } from "vite";

// Dev server proxies API calls to the local review service so the bundle can
// always use same-origin paths.
export default defineConfig({
  server: {
    proxy: {
      "/api": "http://127.0.0.1:7341",
    },
  },
  build: {
    outDir: "dist",
  },
  test: {
    environment: "jsdom",
    testTimeout: 20000,
    hookTimeout: 30000,
  },
});
