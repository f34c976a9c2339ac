import { DAYS, GENRES, type PredictRequest } from "./types.js";

/** Raw form state: days is a chip set, so invalid multi-selections are
 * representable and must be rejected by validation before any request. */
export interface FormState {
  genres: string[];
  days: string[];
  venueType: number;
  popularity: number;
  playcount: number;
  marketHeat: number;
  venueConcertCount: number;
  averagePrice: number;
}

export interface FieldError {
  field: string;
  message: string;
}

export const DEFAULT_FORM: FormState = {
  genres: ["pop"],
  days: ["Sat"],
  venueType: 2,
  popularity: 0.5,
  playcount: 2_000_000,
  marketHeat: 300,
  venueConcertCount: 12,
  averagePrice: 150,
};

const GENRE_SET = new Set<string>(GENRES);
const DAY_SET = new Set<string>(DAYS);

export function validateForm(state: FormState): FieldError[] {
  const errors: FieldError[] = [];
  if (state.days.length !== 1) {
    errors.push({ field: "days", message: "pick exactly one performance day" });
  } else if (!DAY_SET.has(state.days[0])) {
    errors.push({ field: "days", message: `unknown day: ${state.days[0]}` });
  }
  for (const g of state.genres) {
    if (!GENRE_SET.has(g)) {
      errors.push({ field: "genres", message: `unknown genre: ${g}` });
    }
  }
  if (new Set(state.genres).size !== state.genres.length) {
    errors.push({ field: "genres", message: "duplicate genres" });
  }
  if (![1, 2, 3].includes(state.venueType)) {
    errors.push({ field: "venueType", message: "venue type must be 1, 2 or 3" });
  }
  if (!(state.popularity >= 0 && state.popularity <= 1)) {
    errors.push({ field: "popularity", message: "popularity must lie in [0, 1]" });
  }
  const positives: Array<[keyof FormState, string]> = [
    ["playcount", "playcount"],
    ["marketHeat", "marketHeat"],
    ["venueConcertCount", "venueConcertCount"],
    ["averagePrice", "averagePrice"],
  ];
  for (const [key, field] of positives) {
    const value = state[key] as number;
    if (!Number.isFinite(value) || value <= 0) {
      errors.push({ field, message: `${field} must be a positive number` });
    }
  }
  return errors;
}

/** Form state -> service request body. Throws if the form is invalid; the
 * app must validate first and never send a request with errors present. */
export function buildRequest(state: FormState): PredictRequest {
  const errors = validateForm(state);
  if (errors.length > 0) {
    throw new Error(`invalid form: ${errors.map((e) => e.field).join(", ")}`);
  }
  return {
    genres: [...state.genres],
    day: state.days[0],
    venue_type: state.venueType,
    concert_popularity: state.popularity,
    playcount: state.playcount,
    market_heat: state.marketHeat,
    venue_concert_count: state.venueConcertCount,
    average_price: state.averagePrice,
  };
}
