// UI round-trip against recorded service fixtures (the secondary acceptance
// criterion): a fixed scenario form must display exactly the service's
// class distribution, highlight the argmax, and render identically on
// duplicate submission.

import { beforeEach, describe, expect, it } from "vitest";

import { initApp, type App } from "../src/app.js";
import { formatCurrency, formatPercent } from "../src/render.js";
import { ScenarioStore } from "../src/state.js";
import { fixtureClient, fixtures, jsonResponse, mountMarkup } from "./helpers.js";

function fillFixedScenario(): void {
  const req = fixtures.scenarioRequest;
  for (const box of document.querySelectorAll<HTMLInputElement>(
    "#genre-list input[name=genre]",
  )) {
    box.checked = req.genres.includes(box.value);
  }
  for (const chip of document.querySelectorAll<HTMLButtonElement>(
    "#day-chips .chip",
  )) {
    chip.classList.toggle("chip-active", chip.dataset.day === req.day);
  }
  (document.getElementById("venue-type") as HTMLSelectElement).value =
    String(req.venue_type);
  (document.getElementById("popularity") as HTMLInputElement).value =
    String(req.concert_popularity);
  (document.getElementById("playcount") as HTMLInputElement).value =
    String(req.playcount);
  (document.getElementById("market-heat") as HTMLInputElement).value =
    String(req.market_heat);
  (document.getElementById("venue-count") as HTMLInputElement).value =
    String(req.venue_concert_count);
  (document.getElementById("avg-price") as HTMLInputElement).value =
    String(req.average_price);
  (document.getElementById("scenario-label") as HTMLInputElement).value =
    "fixed scenario";
}

async function mountApp(
  overrides: Parameters<typeof fixtureClient>[0] = {},
): Promise<{ app: App; client: ReturnType<typeof fixtureClient>["client"];
             calls: ReturnType<typeof fixtureClient>["calls"] }> {
  mountMarkup();
  window.localStorage.clear();
  const { client, calls } = fixtureClient(overrides);
  const app = initApp(document, client, new ScenarioStore(window.localStorage));
  await app.ready;
  return { app, client, calls };
}

beforeEach(() => {
  document.body.innerHTML = "";
});

describe("fixed-scenario round trip", () => {
  it("sends exactly the fixture request body", async () => {
    const { app, calls } = await mountApp();
    fillFixedScenario();
    await app.submit();
    const post = calls.find((c) => c.url === "/predict/location");
    expect(post?.body).toEqual(fixtures.scenarioRequest);
  });

  it("displays exactly the service's distribution and highlights the argmax", async () => {
    const { app, client } = await mountApp();
    fillFixedScenario();
    await app.submit();

    const served = fixtures.locationResponse;
    const rendered = Array.from(
      document.querySelectorAll("#results [data-prob]"),
    ).map((el) => el.textContent);
    // every displayed number is the display-rounding of a served value
    expect(rendered).toEqual(served.probabilities.map((p) => formatPercent(p)));
    // and the served values came over the wire (client exchange log)
    const logged = client.log.find((e) => e.path === "/predict/location");
    expect((logged?.response as typeof served).probabilities).toEqual(
      served.probabilities,
    );

    // displayed percentages sum to 100% within display rounding
    const sum = rendered
      .map((text) => parseFloat((text ?? "0").replace("%", "")))
      .reduce((a, b) => a + b, 0);
    expect(Math.abs(sum - 100)).toBeLessThanOrEqual(0.3);

    const best = document.querySelector("#results .bar-best");
    expect(best?.getAttribute("data-class")).toBe(String(served.class));

    // the price panel shows the service's raw-scale estimate
    expect(
      document.querySelector('#results [data-role="price"]')?.textContent,
    ).toBe(formatCurrency(fixtures.priceResponse.price));
  });

  it("renders identical values on duplicate submission", async () => {
    const { app } = await mountApp();
    fillFixedScenario();
    await app.submit();
    const first = document.getElementById("results")!.innerHTML;
    await app.submit();
    expect(document.getElementById("results")!.innerHTML).toBe(first);
  });

  it("makes no network call when two days are selected", async () => {
    const { app, calls } = await mountApp();
    fillFixedScenario();
    document
      .querySelector<HTMLButtonElement>('#day-chips [data-day="Mon"]')!
      .classList.add("chip-active");
    const before = calls.filter((c) => c.url.startsWith("/predict")).length;
    await app.submit();
    expect(calls.filter((c) => c.url.startsWith("/predict")).length).toBe(before);
    expect(
      document.querySelector('[data-error-for="days"]')?.textContent,
    ).toMatch(/exactly one/);
  });

  it("discards stale responses via the request sequence number", async () => {
    let releaseFirst: (() => void) | null = null;
    let callCount = 0;
    const slowThenFast = () => {
      callCount += 1;
      if (callCount === 1) {
        return new Promise<Response>((resolve) => {
          releaseFirst = () =>
            resolve(
              jsonResponse({ probabilities: [1, 0, 0, 0, 0], class: 0 }),
            );
        });
      }
      return Promise.resolve(jsonResponse(fixtures.locationResponse));
    };
    const { app } = await mountApp({ "/predict/location": slowThenFast });
    fillFixedScenario();
    const first = app.submit(); // stale once the second submit begins
    const second = app.submit();
    await second;
    releaseFirst?.();
    await first;
    const best = document.querySelector("#results .bar-best");
    expect(best?.getAttribute("data-class")).toBe(
      String(fixtures.locationResponse.class),
    );
  });

  it("surfaces service errors verbatim and retries", async () => {
    const overrides: Parameters<typeof fixtureClient>[0] = {
      "/predict/location": () =>
        Promise.resolve(
          jsonResponse({ error: "unknown genre: 'polka'", field: "genres[0]" }, 400),
        ),
    };
    const { app } = await mountApp(overrides);
    fillFixedScenario();
    await app.submit();
    const panel = document.getElementById("error-panel")!;
    expect(panel.classList.contains("hidden")).toBe(false);
    expect(document.getElementById("error-text")!.textContent).toContain(
      "unknown genre: 'polka'",
    );
    // the service recovers; Retry resubmits the same form
    delete overrides["/predict/location"];
    document.getElementById("retry-btn")!.dispatchEvent(
      new MouseEvent("click", { bubbles: true, cancelable: true }),
    );
    await new Promise((r) => setTimeout(r, 0));
    expect(panel.classList.contains("hidden")).toBe(true);
    expect(document.querySelectorAll("#results [data-prob]")).toHaveLength(5);
  });

  it("saves scenarios for side-by-side comparison", async () => {
    const { app } = await mountApp();
    fillFixedScenario();
    await app.submit();
    app.saveCurrent();
    const cols = document.querySelectorAll("#compare thead th");
    expect(cols).toHaveLength(2); // corner + one scenario
    expect(document.getElementById("compare")!.textContent).toContain(
      "fixed scenario",
    );
    // highlighted cell in the compare table matches the served argmax
    const best = document.querySelector("#compare .cell-best");
    expect(best?.getAttribute("data-prob-cell")).toBe(
      String(fixtures.locationResponse.class),
    );
  });
});
