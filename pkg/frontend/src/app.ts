import { ServiceClient, ServiceError } from "./api.js";
import { buildRequest, validateForm, type FormState } from "./form.js";
import {
  classLabels,
  renderCompare,
  renderFieldErrors,
  renderResults,
} from "./render.js";
import { RequestSequencer, ScenarioStore } from "./state.js";
import { GENRES, DAYS, type ModelCard, type Scenario } from "./types.js";

export interface App {
  submit(): Promise<void>;
  saveCurrent(): void;
  readForm(): FormState;
  current(): Scenario | null;
  ready: Promise<void>;
}

function el<T extends HTMLElement>(doc: Document, id: string): T {
  const node = doc.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function buildGenreList(doc: Document, container: HTMLElement): void {
  container.innerHTML = GENRES.map(
    (g) => `
      <label class="genre-item">
        <input type="checkbox" name="genre" value="${g}" />
        <span>${g}</span>
      </label>`,
  ).join("");
  const pop = container.querySelector<HTMLInputElement>('input[value="pop"]');
  if (pop) pop.checked = true;
}

function buildDayChips(doc: Document, container: HTMLElement): void {
  container.innerHTML = DAYS.map(
    (d) => `<button type="button" class="chip" data-day="${d}">${d}</button>`,
  ).join("");
  for (const chip of container.querySelectorAll<HTMLButtonElement>(".chip")) {
    chip.addEventListener("click", () => chip.classList.toggle("chip-active"));
  }
  const sat = container.querySelector<HTMLButtonElement>('[data-day="Sat"]');
  if (sat) sat.classList.add("chip-active");
}

export function initApp(
  doc: Document,
  client: ServiceClient,
  store: ScenarioStore,
): App {
  const form = el<HTMLElement>(doc, "concert-form");
  const genreList = el<HTMLElement>(doc, "genre-list");
  const dayChips = el<HTMLElement>(doc, "day-chips");
  const results = el<HTMLElement>(doc, "results");
  const compare = el<HTMLElement>(doc, "compare");
  const errorPanel = el<HTMLElement>(doc, "error-panel");
  const errorText = el<HTMLElement>(doc, "error-text");

  buildGenreList(doc, genreList);
  buildDayChips(doc, dayChips);

  let card: ModelCard | null = null;
  let labels = classLabels(null);
  let tasks: string[] = ["location"];
  let currentScenario: Scenario | null = null;
  const sequencer = new RequestSequencer();

  const ready = (async () => {
    try {
      const health = await client.health();
      tasks = health.tasks ?? [health.task];
      card = await client.modelCard();
      labels = classLabels(card);
    } catch {
      // service unreachable at boot: the first submit will surface it
    }
    renderCompare(compare, store.list(), labels);
  })();

  function readForm(): FormState {
    const genres = Array.from(
      genreList.querySelectorAll<HTMLInputElement>("input[name=genre]:checked"),
    ).map((i) => i.value);
    const days = Array.from(
      dayChips.querySelectorAll<HTMLButtonElement>(".chip-active"),
    ).map((b) => b.dataset.day ?? "");
    const num = (id: string) =>
      Number(el<HTMLInputElement>(doc, id).value);
    return {
      genres,
      days,
      venueType: num("venue-type"),
      popularity: num("popularity"),
      playcount: num("playcount"),
      marketHeat: num("market-heat"),
      venueConcertCount: num("venue-count"),
      averagePrice: num("avg-price"),
    };
  }

  function showError(message: string): void {
    errorPanel.classList.remove("hidden");
    errorText.textContent = message;
  }

  function clearError(): void {
    errorPanel.classList.add("hidden");
    errorText.textContent = "";
  }

  async function submit(): Promise<void> {
    clearError();
    const state = readForm();
    const errors = validateForm(state);
    renderFieldErrors(form, errors);
    if (errors.length > 0) return; // invalid: no network call

    const request = buildRequest(state);
    const ticket = sequencer.begin();
    try {
      const location = tasks.includes("location")
        ? await client.predictLocation(request)
        : null;
      const price = tasks.includes("price")
        ? await client.predictPrice(request)
        : null;
      if (!sequencer.isCurrent(ticket)) return; // superseded: discard
      const labelInput = el<HTMLInputElement>(doc, "scenario-label");
      currentScenario = {
        label: labelInput.value.trim() || `scenario ${store.list().length + 1}`,
        request,
        location,
        price,
        timestamp: Date.now(),
      };
      renderResults(results, currentScenario, labels);
    } catch (err) {
      if (!sequencer.isCurrent(ticket)) return;
      if (err instanceof ServiceError) {
        const field = err.body.field ? ` (field: ${err.body.field})` : "";
        showError(`service error ${err.status}: ${err.body.error}${field}`);
      } else {
        showError(`request failed: ${(err as Error).message}`);
      }
    }
  }

  function saveCurrent(): void {
    if (!currentScenario) return; // nothing rendered yet
    store.save(currentScenario);
    renderCompare(compare, store.list(), labels);
  }

  el<HTMLButtonElement>(doc, "predict-btn").addEventListener("click", (ev) => {
    ev.preventDefault();
    void submit();
  });
  el<HTMLButtonElement>(doc, "save-btn").addEventListener("click", (ev) => {
    ev.preventDefault();
    saveCurrent();
  });
  el<HTMLButtonElement>(doc, "retry-btn").addEventListener("click", (ev) => {
    ev.preventDefault();
    void submit();
  });
  el<HTMLButtonElement>(doc, "clear-btn").addEventListener("click", (ev) => {
    ev.preventDefault();
    store.clear();
    renderCompare(compare, store.list(), labels);
  });

  return {
    submit,
    saveCurrent,
    readForm,
    current: () => currentScenario,
    ready,
  };
}
