/**
 * Scripted end-to-end walkthrough against the live service.
 *
 * Loads the bundled example problem through the file control, starts a
 * session, answers every query the way the backend's simulated oracle
 * (fault planted on formulas {3,4,5}) would, and checks that the final
 * panel shows exactly the oracle's outcome. The script itself comes from
 * the global setup, which ran the simulation in the backend; nothing here
 * re-derives diagnosis logic.
 */
import { afterEach, beforeEach, describe, expect, inject, it } from "vitest";
import { ApiClient } from "../src/api";
import { App, mountApp } from "../src/app";
import { toSymbols } from "../src/format";

const EX1_TEXT = inject("ex1Text");

async function waitFor<T>(probe: () => T | null | undefined, what: string, ms = 15_000): Promise<T> {
  const deadline = Date.now() + ms;
  for (;;) {
    const got = probe();
    if (got !== null && got !== undefined) return got;
    if (Date.now() > deadline) throw new Error(`timed out waiting for ${what}`);
    await new Promise((r) => setTimeout(r, 15));
  }
}

function textOf(root: HTMLElement, selector: string): string {
  const node = root.querySelector(selector);
  return node === null ? "" : (node.textContent ?? "");
}

describe("full session walkthrough", () => {
  let container: HTMLElement;
  let app: App;

  beforeEach(() => {
    container = document.createElement("div");
    document.body.append(container);
    app = mountApp(container, new ApiClient(inject("apiBase")));
  });

  afterEach(() => {
    app.unmount();
    container.remove();
  });

  it("drives ex1 from upload to the final diagnosis the oracle expects", async () => {
    const oracle = inject("oracle");
    expect(oracle.hit).toBe(true);
    expect(oracle.rounds).toBe(2); // two questions separate three candidates

    // load the example through the file control
    const fileInput = container.querySelector<HTMLInputElement>("#dpi-file");
    expect(fileInput).not.toBeNull();
    const file = new File([EX1_TEXT], "ex1.dpi", { type: "text/plain" });
    Object.defineProperty(fileInput, "files", { value: [file] });
    fileInput!.dispatchEvent(new Event("change", { bubbles: true }));
    await waitFor(
      () => (container.querySelector<HTMLTextAreaElement>("#dpi-text")?.value.includes("[KB]") ? true : null),
      "the editor to take the uploaded file"
    );

    container.querySelector<HTMLButtonElement>("#start-session")!.click();

    // three leading diagnoses, then the first query
    await waitFor(() => container.querySelector(".query-card"), "the first query");
    const rows = [...container.querySelectorAll(".diag")];
    expect(rows).toHaveLength(3);
    expect(rows.map((r) => r.querySelector(".diag-ids")?.textContent)).toEqual([
      "{1, 2, 5}",
      "{1, 3, 5}",
      "{3, 4, 5}",
    ]);

    // round 1: the query the oracle saw, with symbol rendering
    const shown1 = [...container.querySelectorAll(".query-formulas .formula")].map((n) => n.textContent ?? "");
    expect(shown1).toEqual(oracle.queries[0].map(toSymbols));
    expect(textOf(container, ".qp-summary")).toContain("eliminates 2 (D2, D3)");
    expect(textOf(container, ".qp-summary")).toContain("eliminates 1 (D1)");

    container.querySelector<HTMLButtonElement>(oracle.answers[0] ? "#answer-true" : "#answer-false")!.click();

    // the refuted side is struck out while round 2 is shown
    await waitFor(
      () => (textOf(container, ".query-card h2").includes("Round 2") ? true : null),
      "round 2"
    );
    const struck = [...container.querySelectorAll(".diag.out .diag-ids")].map((n) => n.textContent);
    expect(struck).toEqual(["{1, 2, 5}"]);

    const shown2 = [...container.querySelectorAll(".query-formulas .formula")].map((n) => n.textContent ?? "");
    expect(shown2).toEqual(oracle.queries[1].map(toSymbols));

    // round 2 answered with the keyboard, the session must stay drivable without a mouse
    document.dispatchEvent(new KeyboardEvent("keydown", { key: oracle.answers[1] ? "t" : "f", bubbles: true }));

    // final panel matches the simulated-oracle outcome
    await waitFor(() => container.querySelector(".final-card"), "the final panel");
    expect(textOf(container, ".final-head .diag-ids")).toBe(`{${oracle.final_ids.join(", ")}}`);
    const kept = [...container.querySelectorAll(".final-kept .formula")].map((n) => n.textContent ?? "");
    expect(kept).toEqual(oracle.repaired_kb.map(toSymbols));

    // history: one row per answered round, with the reasoner-free badge on each
    container.querySelector<HTMLButtonElement>("#tab-history")!.click();
    const table = await waitFor(() => container.querySelector(".history-table"), "the history table");
    const bodyRows = [...table.querySelectorAll("tbody tr")];
    expect(bodyRows).toHaveLength(oracle.rounds);
    for (const [i, tr] of bodyRows.entries()) {
      const cells = [...tr.querySelectorAll("td")];
      expect(cells[0]?.textContent).toBe(String(i + 1));
      expect(cells[2]?.textContent).toBe(oracle.answers[i] ? "true" : "false");
      expect(tr.querySelector(".badge.zero")?.textContent).toBe("reasoner calls: 0");
    }
    const queriesShown = bodyRows.map((tr) =>
      [...tr.querySelectorAll(".query-cell .formula")].map((n) => n.textContent ?? "")
    );
    expect(queriesShown).toEqual(oracle.queries.map((q) => q.map(toSymbols)));
  });

  it("rejects malformed text inline without leaving the form", async () => {
    const textarea = container.querySelector<HTMLTextAreaElement>("#dpi-text")!;
    textarea.value = "[KB]\nA -> (B\n[NEGATIVE]\nA\n";
    textarea.dispatchEvent(new Event("input", { bubbles: true }));
    container.querySelector<HTMLButtonElement>("#start-session")!.click();

    const error = await waitFor(() => container.querySelector(".setup-error"), "the inline error");
    expect(error.textContent ?? "").not.toBe("");
    // still on the setup screen, nothing transitioned
    expect(container.querySelector("#dpi-text")).not.toBeNull();
    expect(container.querySelector(".query-card")).toBeNull();
  });

  it("shows the insufficient-diagnoses warning when n is below 2", async () => {
    const textarea = container.querySelector<HTMLTextAreaElement>("#dpi-text")!;
    textarea.value = EX1_TEXT;
    textarea.dispatchEvent(new Event("input", { bubbles: true }));
    const slider = container.querySelector<HTMLInputElement>("#cfg-n")!;
    slider.value = "1";
    slider.dispatchEvent(new Event("input", { bubbles: true }));
    container.querySelector<HTMLButtonElement>("#start-session")!.click();

    const banner = await waitFor(() => container.querySelector(".banner.warning"), "the warning banner");
    expect(banner.textContent).toContain("insufficient diagnoses");
    // with a single candidate the session is already decided
    expect(container.querySelector(".final-card")).not.toBeNull();
  });
});
