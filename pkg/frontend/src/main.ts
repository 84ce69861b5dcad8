import { ApiClient, ApiError } from "./api.js";
import { submitterCaseList } from "./workspaces.js";

// Minimal single-page shell: paste a token, pick it up from the running
// service, and render the case list. Richer panels build on the pure view
// functions in workspaces.ts.

function el(tag: string, text = ""): HTMLElement {
  const node = document.createElement(tag);
  node.textContent = text;
  return node;
}

async function render(root: HTMLElement, client: ApiClient): Promise<void> {
  root.replaceChildren(el("h1", "Coordinated Flaw Disclosure"));
  try {
    const { cases } = await client.listCases();
    const list = el("ul");
    for (const row of submitterCaseList(cases)) {
      const item = el(
        "li",
        `${row.caseId} — ${row.state} [${row.badge}]` +
          (row.appealEnabled ? " (appealable)" : ""),
      );
      list.appendChild(item);
    }
    root.appendChild(cases.length ? list : el("p", "No cases yet."));
  } catch (err) {
    const message =
      err instanceof ApiError ? `${err.code}: ${err.message}` : String(err);
    root.appendChild(el("p", `Error — ${message}`));
  }
}

export function boot(): void {
  const root = document.getElementById("app");
  if (root === null) return;
  const form = el("form");
  const input = document.createElement("input");
  input.type = "password";
  input.placeholder = "access token";
  const button = el("button", "Sign in");
  form.append(input, button);
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const client = new ApiClient(window.location.origin, input.value);
    void render(root, client);
  });
  root.replaceChildren(el("h1", "Coordinated Flaw Disclosure"), form);
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  boot();
}
