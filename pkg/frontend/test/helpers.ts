import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import { ServiceClient } from "../src/api.js";
import fixtures from "./fixtures.json";

const here = dirname(fileURLToPath(import.meta.url));

/** Mount the real index.html markup into the jsdom document. */
export function mountMarkup(): void {
  const html = readFileSync(join(here, "..", "index.html"), "utf-8");
  const body = html.match(/<body>([\s\S]*)<\/body>/)?.[1] ?? "";
  document.body.innerHTML = body.replace(/<script[\s\S]*?<\/script>/g, "");
}

export function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

export interface FixtureFetch {
  fetchFn: (input: string, init?: RequestInit) => Promise<Response>;
  calls: Array<{ url: string; body: unknown }>;
}

/** A fetch stub that replays responses recorded from the real service. */
export function fixtureFetch(
  overrides: Partial<Record<string, () => Promise<Response>>> = {},
): FixtureFetch {
  const calls: Array<{ url: string; body: unknown }> = [];
  const fetchFn = async (input: string, init?: RequestInit): Promise<Response> => {
    const path = input.replace(fixtures.baseUrl, "");
    calls.push({
      url: path,
      body: init?.body ? JSON.parse(init.body as string) : null,
    });
    const override = overrides[path];
    if (override) return override();
    switch (path) {
      case "/health":
        return jsonResponse(fixtures.health);
      case "/model-card":
        return jsonResponse(fixtures.modelCard);
      case "/predict/location":
        return jsonResponse(fixtures.locationResponse);
      case "/predict/price":
        return jsonResponse(fixtures.priceResponse);
      default:
        return jsonResponse({ error: `not found: ${path}` }, 404);
    }
  };
  return { fetchFn, calls };
}

export function fixtureClient(
  overrides: Partial<Record<string, () => Promise<Response>>> = {},
): { client: ServiceClient; calls: FixtureFetch["calls"] } {
  const { fetchFn, calls } = fixtureFetch(overrides);
  return { client: new ServiceClient(fixtures.baseUrl, fetchFn), calls };
}

export { fixtures };
