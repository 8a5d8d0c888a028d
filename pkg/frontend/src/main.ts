/** Boot: read the runtime config, then hand over to the shell. */

import { AppShell } from "./appshell.js";

interface RuntimeConfig {
  gatewayUrl?: string;
  registryUrl?: string;
}

async function loadConfig(): Promise<RuntimeConfig> {
  try {
    const response = await fetch("./config.json");
    if (!response.ok) return {};
    return (await response.json()) as RuntimeConfig;
  } catch {
    return {};
  }
}

async function boot(): Promise<void> {
  const config = await loadConfig();
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app element");
  const shell = new AppShell(root, { gatewayUrl: config.gatewayUrl });
  await shell.init();
}

void boot();
