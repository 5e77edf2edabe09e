/** Boots the Python service for the test run and tears it down afterward. */

import { spawn } from "node:child_process";

import { SERVICE_PORT, SERVICE_URL } from "./config.js";

const STARTUP_TIMEOUT_MS = 30_000;

export default async function setup(): Promise<() => Promise<void>> {
  const python = process.env.PYTHON ?? "python3";
  const child = spawn(python, ["-m", "imgcritic.service", "--port", String(SERVICE_PORT)], {
    stdio: ["ignore", "ignore", "inherit"],
  });
  const failed = new Promise<never>((_, reject) => {
    child.on("error", (err) => reject(new Error(`failed to spawn service: ${err.message}`)));
    child.on("exit", (code) => reject(new Error(`service exited early with code ${code}`)));
  });

  const deadline = Date.now() + STARTUP_TIMEOUT_MS;
  const ready = (async () => {
    for (;;) {
      try {
        const res = await fetch(`${SERVICE_URL}/version`);
        if (res.ok) {
          return;
        }
      } catch {
        // not up yet
      }
      if (Date.now() > deadline) {
        throw new Error(`service did not come up on port ${SERVICE_PORT} within 30s`);
      }
      await new Promise((resolve) => setTimeout(resolve, 200));
    }
  })();

  try {
    await Promise.race([ready, failed]);
  } catch (err) {
    child.kill("SIGTERM");
    throw err;
  }
  child.removeAllListeners("exit");

  return async () => {
    child.kill("SIGTERM");
  };
}
