import { ReviewApi } from "./api.js";
import { createApp } from "./app.js";

const params = new URLSearchParams(window.location.search);
const apiBase = params.get("api") ?? "http://127.0.0.1:8400";
const root = document.getElementById("app");
if (!root) throw new Error("missing #app mount point");
createApp(root, new ReviewApi(apiBase));
