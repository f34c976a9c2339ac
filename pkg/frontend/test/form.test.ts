import { describe, expect, it } from "vitest";

import { DEFAULT_FORM, buildRequest, validateForm } from "../src/form.js";

describe("validateForm", () => {
  it("accepts the default form", () => {
    expect(validateForm(DEFAULT_FORM)).toEqual([]);
  });

  it("rejects two selected days and binds the error to the field", () => {
    const errors = validateForm({ ...DEFAULT_FORM, days: ["Fri", "Sat"] });
    expect(errors).toHaveLength(1);
    expect(errors[0].field).toBe("days");
  });

  it("rejects zero selected days", () => {
    expect(validateForm({ ...DEFAULT_FORM, days: [] })[0].field).toBe("days");
  });

  it("rejects venue types outside 1..3", () => {
    const errors = validateForm({ ...DEFAULT_FORM, venueType: 4 });
    expect(errors.map((e) => e.field)).toContain("venueType");
  });

  it("rejects out-of-range popularity and non-positive numbers", () => {
    expect(
      validateForm({ ...DEFAULT_FORM, popularity: 1.2 }).map((e) => e.field),
    ).toContain("popularity");
    expect(
      validateForm({ ...DEFAULT_FORM, averagePrice: 0 }).map((e) => e.field),
    ).toContain("averagePrice");
  });

  it("rejects unknown and duplicate genres", () => {
    expect(
      validateForm({ ...DEFAULT_FORM, genres: ["polka"] })[0].field,
    ).toBe("genres");
    expect(
      validateForm({ ...DEFAULT_FORM, genres: ["jazz", "jazz"] })[0].field,
    ).toBe("genres");
  });
});

describe("buildRequest", () => {
  it("maps the default form to the documented defaults", () => {
    expect(buildRequest(DEFAULT_FORM)).toEqual({
      genres: ["pop"],
      day: "Sat",
      venue_type: 2,
      concert_popularity: 0.5,
      playcount: 2_000_000,
      market_heat: 300,
      venue_concert_count: 12,
      average_price: 150,
    });
  });

  it("sets exactly the chosen flags (jazz + Saturday + venue 3)", () => {
    const request = buildRequest({
      ...DEFAULT_FORM,
      genres: ["jazz"],
      days: ["Sat"],
      venueType: 3,
    });
    expect(request.genres).toEqual(["jazz"]);
    expect(request.day).toBe("Sat");
    expect(request.venue_type).toBe(3);
  });

  it("throws on an invalid form instead of producing a request", () => {
    expect(() =>
      buildRequest({ ...DEFAULT_FORM, days: ["Fri", "Sat"] }),
    ).toThrow(/days/);
  });
});
