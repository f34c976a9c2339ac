import type {
  HealthResponse,
  LocationPrediction,
  ModelCard,
  PredictRequest,
  PricePrediction,
  ServiceErrorBody,
} from "./types.js";

export class ServiceError extends Error {
  constructor(
    public status: number,
    public body: ServiceErrorBody,
  ) {
    super(body.error);
  }
}

export interface ExchangeLogEntry {
  path: string;
  request: unknown;
  response: unknown;
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

/**
 * Thin client over the inference endpoints. Every exchange is appended to
 * `log`, so tests can assert that displayed numbers came from a service
 * response and were never computed locally.
 */
export class ServiceClient {
  readonly log: ExchangeLogEntry[] = [];

  constructor(
    public baseUrl: string,
    private fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async getJson<T>(path: string): Promise<T> {
    const resp = await this.fetchFn(this.baseUrl + path);
    const body = await resp.json();
    if (!resp.ok) throw new ServiceError(resp.status, body);
    this.log.push({ path, request: null, response: body });
    return body as T;
  }

  private async postJson<T>(path: string, request: unknown): Promise<T> {
    const resp = await this.fetchFn(this.baseUrl + path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(request),
    });
    const body = await resp.json();
    if (!resp.ok) throw new ServiceError(resp.status, body);
    this.log.push({ path, request, response: body });
    return body as T;
  }

  health(): Promise<HealthResponse> {
    return this.getJson("/health");
  }

  modelCard(): Promise<ModelCard> {
    return this.getJson("/model-card");
  }

  predictLocation(request: PredictRequest): Promise<LocationPrediction> {
    return this.postJson("/predict/location", request);
  }

  predictPrice(request: PredictRequest): Promise<PricePrediction> {
    return this.postJson("/predict/price", request);
  }
}
