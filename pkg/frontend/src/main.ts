import { ApiClient } from "./api.js";
import { App } from "./app.js";

declare global {
  interface Window {
    LEAFLIFE_SERVICE_URL?: string;
  }
}

function serviceBaseUrl(): string {
  if (window.LEAFLIFE_SERVICE_URL) return window.LEAFLIFE_SERVICE_URL;
  const meta = document.querySelector('meta[name="leaflife-service-url"]');
  return meta?.getAttribute("content") ?? "";
}

const root = document.getElementById("app");
if (!root) throw new Error("missing #app element");
const app = new App(root, new ApiClient(serviceBaseUrl()));
void app.init();
