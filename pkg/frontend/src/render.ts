import type { ModelCard, Scenario } from "./types.js";

export function formatPercent(value: number): string {
  return `${(value * 100).toFixed(1)}%`;
}

export function formatCurrency(value: number): string {
  return new Intl.NumberFormat("en-US", {
    style: "currency",
    currency: "USD",
    maximumFractionDigits: 2,
  }).format(value);
}

function compact(value: number): string {
  if (value >= 1000) return `${(value / 1000).toFixed(1)}k`;
  return value.toFixed(0);
}

/** Income-ordered class labels with their centroid economics, so "class 2"
 * is interpretable. Falls back to bare indices when the bundle carries no
 * city model. */
export function classLabels(card: ModelCard | null): string[] {
  const classes = card?.city_classes;
  if (!classes) {
    return [0, 1, 2, 3, 4].map((k) => `Class ${k}`);
  }
  return classes.map(
    (c) =>
      `Class ${c.class} · $${compact(c.income_per_capita)} income · ` +
      `${compact(c.population_density)}/mi²`,
  );
}

export function argmaxIndex(probabilities: number[]): number {
  let best = 0;
  for (let i = 1; i < probabilities.length; i++) {
    if (probabilities[i] > probabilities[best]) best = i;
  }
  return best;
}

/** Horizontal 5-bar chart of a class distribution; the argmax row carries
 * the `bar-best` class. Every rendered number is a service value. */
export function renderBars(
  root: HTMLElement,
  probabilities: number[],
  labels: string[],
  highlight: number,
): void {
  root.innerHTML = probabilities
    .map((p, i) => {
      const pct = Math.round(p * 1000) / 10;
      const best = i === highlight ? " bar-best" : "";
      return `
        <div class="bar-row${best}" data-class="${i}">
          <div class="bar-label">${labels[i] ?? `Class ${i}`}</div>
          <div class="bar-track">
            <div class="bar-fill" style="width:${pct}%"></div>
          </div>
          <div class="bar-value" data-prob="${i}">${formatPercent(p)}</div>
        </div>`;
    })
    .join("");
}

export function renderResults(
  root: HTMLElement,
  scenario: Scenario,
  labels: string[],
): void {
  const parts: string[] = [];
  if (scenario.location) {
    const best = scenario.location.class;
    parts.push(`
      <div class="result-block">
        <h3>Recommended city class: <span data-role="best-class">${labels[best] ?? `Class ${best}`}</span></h3>
        <div data-role="bars"></div>
      </div>`);
  }
  if (scenario.price) {
    const note =
      scenario.price.train_rmspe == null
        ? ""
        : ` <span class="note">(training RMSPE ${scenario.price.train_rmspe.toFixed(3)})</span>`;
    parts.push(`
      <div class="result-block">
        <h3>Estimated ticket price:
          <span data-role="price">${formatCurrency(scenario.price.price)}</span>${note}
        </h3>
      </div>`);
  }
  root.innerHTML = parts.join("");
  if (scenario.location) {
    const barsEl = root.querySelector<HTMLElement>('[data-role="bars"]');
    if (barsEl) {
      renderBars(barsEl, scenario.location.probabilities, labels,
                 scenario.location.class);
    }
  }
}

/** Side-by-side scenario columns; each column highlights its argmax class. */
export function renderCompare(
  root: HTMLElement,
  scenarios: Scenario[],
  labels: string[],
): void {
  if (scenarios.length === 0) {
    root.innerHTML = '<p class="note">No saved scenarios yet.</p>';
    return;
  }
  const header = scenarios
    .map((s) => `<th>${escapeHtml(s.label)}</th>`)
    .join("");
  const classRows = [0, 1, 2, 3, 4]
    .map((k) => {
      const cells = scenarios
        .map((s) => {
          if (!s.location) return "<td>—</td>";
          const p = s.location.probabilities[k];
          const best = s.location.class === k ? ' class="cell-best"' : "";
          return `<td${best} data-prob-cell="${k}">${formatPercent(p)}</td>`;
        })
        .join("");
      return `<tr><th>${labels[k] ?? `Class ${k}`}</th>${cells}</tr>`;
    })
    .join("");
  const priceCells = scenarios
    .map((s) => (s.price ? `<td>${formatCurrency(s.price.price)}</td>` : "<td>—</td>"))
    .join("");
  const dayCells = scenarios
    .map((s) => `<td>${escapeHtml(s.request.day)}</td>`)
    .join("");
  root.innerHTML = `
    <table class="compare">
      <thead><tr><th></th>${header}</tr></thead>
      <tbody>
        ${classRows}
        <tr><th>Price</th>${priceCells}</tr>
        <tr><th>Day</th>${dayCells}</tr>
      </tbody>
    </table>`;
}

export function renderFieldErrors(
  form: HTMLElement,
  errors: { field: string; message: string }[],
): void {
  for (const el of form.querySelectorAll<HTMLElement>("[data-error-for]")) {
    el.textContent = "";
  }
  for (const err of errors) {
    const slot = form.querySelector<HTMLElement>(
      `[data-error-for="${err.field}"]`,
    );
    if (slot) slot.textContent = err.message;
  }
}

function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}
