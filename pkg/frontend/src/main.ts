import { ServiceClient } from "./api.js";
import { initApp } from "./app.js";
import { ScenarioStore } from "./state.js";

// Same-origin by default (the service can host the UI directly); override
// with ?service=http://host:port when the UI is served elsewhere.
const params = new URLSearchParams(window.location.search);
const baseUrl = params.get("service") ?? "";

initApp(document, new ServiceClient(baseUrl), new ScenarioStore(window.localStorage));
