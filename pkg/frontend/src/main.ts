// Browser entry point: reads the server URL (query param, saved value, or
// same-origin default) and boots the shell.

import { startApp } from "./app.js";

const params = new URLSearchParams(window.location.search);
const saved = window.localStorage.getItem("trialcustody.server");
const serverUrl =
  params.get("server") ?? saved ?? `${window.location.protocol}//${window.location.hostname}:8350`;
window.localStorage.setItem("trialcustody.server", serverUrl);

startApp(document, document.getElementById("app")!, serverUrl, window.localStorage);
