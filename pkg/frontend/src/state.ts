import type { Scenario } from "./types.js";

const STORAGE_KEY = "concertml.scenarios.v1";

/** Scenario history, persisted in browser storage only — the service stays
 * stateless. Storage is injected so tests can use a plain in-memory stub. */
export class ScenarioStore {
  constructor(private storage: Storage) {}

  list(): Scenario[] {
    const raw = this.storage.getItem(STORAGE_KEY);
    if (!raw) return [];
    try {
      const parsed = JSON.parse(raw);
      return Array.isArray(parsed) ? (parsed as Scenario[]) : [];
    } catch {
      return [];
    }
  }

  save(scenario: Scenario): void {
    const rest = this.list().filter((s) => s.label !== scenario.label);
    this.storage.setItem(STORAGE_KEY, JSON.stringify([...rest, scenario]));
  }

  remove(label: string): void {
    const rest = this.list().filter((s) => s.label !== label);
    this.storage.setItem(STORAGE_KEY, JSON.stringify(rest));
  }

  clear(): void {
    this.storage.removeItem(STORAGE_KEY);
  }
}

/** Monotone ticket counter: at most one in-flight request wins. A response
 * renders only if its ticket is still the latest, so stale responses from
 * superseded submissions are discarded. */
export class RequestSequencer {
  private current = 0;

  begin(): number {
    this.current += 1;
    return this.current;
  }

  isCurrent(ticket: number): boolean {
    return ticket === this.current;
  }
}
