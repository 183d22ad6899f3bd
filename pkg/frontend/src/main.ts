/** Browser entry point. The API base URL defaults to the page's own
 * origin; point it elsewhere with `?api=http://127.0.0.1:8321`. */

import { createApp } from "./app.js";

const mount = document.getElementById("app");
if (mount === null) {
  throw new Error("missing #app mount point");
}
const baseUrl = new URLSearchParams(window.location.search).get("api") ?? "";
createApp(mount, {
  fetchFn: (url, init) => window.fetch(url, init),
  baseUrl,
});
