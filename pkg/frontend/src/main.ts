import { ApiClient } from "./api";
import { mountApp } from "./app";

// Same-origin API: the service serves this bundle itself.
const root = document.getElementById("app");
if (root !== null) {
  mountApp(root, new ApiClient(""));
}
