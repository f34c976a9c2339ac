// Contract types for the concertml inference service (docs/api.md).

export const GENRES = [
  "alternative", "blues", "classic-rock", "classical", "country",
  "electronic", "folk", "hip-hop", "hard-rock", "indie", "jazz", "latin",
  "punk", "pop", "rap", "reggae", "rnb", "rock", "soul", "techno",
] as const;

export const DAYS = ["Sun", "Mon", "Tue", "Wed", "Thu", "Fri", "Sat"] as const;

export type Genre = (typeof GENRES)[number];
export type Day = (typeof DAYS)[number];

export interface PredictRequest {
  genres: string[];
  day: string;
  venue_type: number;
  concert_popularity: number;
  playcount: number;
  market_heat: number;
  venue_concert_count: number;
  average_price: number;
}

export interface LocationPrediction {
  probabilities: number[]; // 5 entries summing to 1
  class: number; // argmax
}

export interface PricePrediction {
  price: number; // raw USD scale
  model_scale: number;
  train_rmspe: number | null;
}

export interface CityClassInfo {
  class: number;
  income_per_capita: number;
  population_density: number;
}

export interface ModelCard {
  task: string;
  format_version: number;
  metadata: Record<string, unknown>;
  feature_columns: string[];
  request_defaults: Record<string, number>;
  city_classes: CityClassInfo[] | null;
  secondary?: ModelCard | null;
}

export interface HealthResponse {
  status: string;
  format_version: number;
  task: string;
  tasks?: string[];
}

export interface ServiceErrorBody {
  error: string;
  field?: string;
}

/** One saved what-if configuration plus the responses it produced. */
export interface Scenario {
  label: string;
  request: PredictRequest;
  location: LocationPrediction | null;
  price: PricePrediction | null;
  timestamp: number; // epoch ms of the successful response
}
