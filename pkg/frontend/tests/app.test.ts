/**
 * View-level tests with a scripted fetch, no live backend. These pin the
 * client-side contract: inline 400s, the warning banner, the single
 * in-flight request rule, session-state messages for dead sessions, and the
 * keyboard path. Payload fixtures mirror the real service responses for the
 * bundled example.
 */
import { afterEach, beforeEach, describe, expect, it } from "vitest";
import type { AnswerOutcome, DiagnosisInfo, QueryInfo, SessionCreated } from "../src/api";
import { ApiClient } from "../src/api";
import { App, mountApp } from "../src/app";

const DIAGS: DiagnosisInfo[] = [
  { ids: [1, 2, 5], formulas: ["A -> B & L", "A -> F", "!H -> G & !A"], prob: 1 / 3 },
  { ids: [1, 3, 5], formulas: ["A -> B & L", "B | F -> H", "!H -> G & !A"], prob: 1 / 3 },
  { ids: [3, 4, 5], formulas: ["B | F -> H", "L -> H", "!H -> G & !A"], prob: 1 / 3 },
];

const CREATED: SessionCreated = { session_id: "fixture00", diagnoses: DIAGS, finished: false };

const QUERY1: QueryInfo = {
  round: 1,
  query: ["B | F -> H"],
  explicit: [3],
  implicit: [],
  qpartition: { dplus: [[1, 2, 5]], dminus: [[1, 3, 5], [3, 4, 5]], dzero: [] },
  measure_value: 0.0817,
  phase_timings: { p1: 0.42, p2: 0.05, p3: 0, p4: 0 },
  reasoner_calls: { p1: 0, p2: 0, p3: 0, p4: 0 },
};

const OUTCOME_TRUE: AnswerOutcome = {
  round: 1,
  eliminated: [[1, 3, 5], [3, 4, 5]],
  remaining: [DIAGS[0]],
  finished: true,
  final_diagnosis: { ids: [1, 2, 5], formulas: DIAGS[0].formulas, repaired_kb: ["B | F -> H", "L -> H"] },
  ambiguous: false,
};

type Handler = (init?: RequestInit) => Response | Promise<Response>;

interface RecordedCall {
  method: string;
  url: string;
  body: string | null;
}

function jsonRes(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

/** Install a scripted fetch; returns the call log. */
function stubFetch(routes: Array<[method: string, path: RegExp, handler: Handler]>): RecordedCall[] {
  const calls: RecordedCall[] = [];
  globalThis.fetch = (async (input: RequestInfo | URL, init?: RequestInit) => {
    const url = String(input);
    const method = init?.method ?? "GET";
    calls.push({ method, url, body: typeof init?.body === "string" ? init.body : null });
    for (const [m, pattern, handler] of routes) {
      if (m === method && pattern.test(url)) return handler(init);
    }
    throw new Error(`no route for ${method} ${url}`);
  }) as typeof fetch;
  return calls;
}

async function tick(times = 1): Promise<void> {
  for (let i = 0; i < times; i++) await new Promise((r) => setTimeout(r, 0));
}

async function waitFor<T>(probe: () => T | null | undefined, what: string): Promise<T> {
  const deadline = Date.now() + 5000;
  for (;;) {
    const got = probe();
    if (got !== null && got !== undefined) return got;
    if (Date.now() > deadline) throw new Error(`timed out waiting for ${what}`);
    await tick();
  }
}

describe("session views against a scripted backend", () => {
  let container: HTMLElement;
  let app: App;
  const realFetch = globalThis.fetch;

  beforeEach(() => {
    container = document.createElement("div");
    document.body.append(container);
  });

  afterEach(() => {
    app.unmount();
    container.remove();
    globalThis.fetch = realFetch;
  });

  function start(text = "[KB]\nA\n"): void {
    app = mountApp(container, new ApiClient(""));
    const textarea = container.querySelector<HTMLTextAreaElement>("#dpi-text")!;
    textarea.value = text;
    textarea.dispatchEvent(new Event("input", { bubbles: true }));
    container.querySelector<HTMLButtonElement>("#start-session")!.click();
  }

  it("renders a 400 inline and stays on the setup form", async () => {
    stubFetch([["POST", /\/sessions$/, () => jsonRes(400, { detail: "[KB] line 2: unexpected character ')'" })]]);
    start("[KB]\nA -> )B\n");

    const error = await waitFor(() => container.querySelector(".setup-error"), "inline error");
    expect(error.textContent).toContain("line 2");
    expect(container.querySelector("#dpi-text")).not.toBeNull();
    expect(container.querySelector(".query-card")).toBeNull();
  });

  it("shows warning banner and final card for a session born finished", async () => {
    const born: SessionCreated = {
      session_id: "fixture01",
      diagnoses: [DIAGS[0]],
      finished: true,
      warning: "insufficient diagnoses for querying",
      final_diagnosis: { ids: [1, 2, 5], formulas: DIAGS[0].formulas, repaired_kb: ["B | F -> H", "L -> H"] },
    };
    const calls = stubFetch([["POST", /\/sessions$/, () => jsonRes(200, born)]]);
    start();

    await waitFor(() => container.querySelector(".final-card"), "final card");
    expect(container.querySelector(".banner.warning")?.textContent).toContain("insufficient diagnoses");
    // no query was requested for a decided session
    expect(calls.filter((c) => c.url.includes("/query"))).toHaveLength(0);
  });

  it("keeps a second click inert while the answer request is in flight", async () => {
    let release!: (r: Response) => void;
    const gate = new Promise<Response>((r) => (release = r));
    const calls = stubFetch([
      ["POST", /\/sessions$/, () => jsonRes(200, CREATED)],
      ["GET", /\/query$/, () => jsonRes(200, QUERY1)],
      ["POST", /\/answer$/, () => gate],
    ]);
    start();

    await waitFor(() => container.querySelector("#answer-true"), "answer buttons");
    container.querySelector<HTMLButtonElement>("#answer-true")!.click();
    await tick();

    // in flight: both buttons disabled, a second click goes nowhere
    const yes = container.querySelector<HTMLButtonElement>("#answer-true")!;
    expect(yes.disabled).toBe(true);
    expect(container.querySelector<HTMLButtonElement>("#answer-false")!.disabled).toBe(true);
    yes.click();
    await tick();
    expect(calls.filter((c) => c.url.endsWith("/answer"))).toHaveLength(1);

    release(jsonRes(200, OUTCOME_TRUE));
    await waitFor(() => container.querySelector(".final-card"), "final card");
    expect(calls.filter((c) => c.url.endsWith("/answer"))).toHaveLength(1);
  });

  it("reports an expired session as a message instead of crashing", async () => {
    stubFetch([
      ["POST", /\/sessions$/, () => jsonRes(200, CREATED)],
      ["GET", /\/query$/, () => jsonRes(404, { detail: "unknown session id" })],
    ]);
    start();

    const note = await waitFor(() => container.querySelector(".banner.note"), "session-state message");
    expect(note.textContent).toContain("Start a new one");
    expect(container.querySelector(".query-card")).toBeNull();
  });

  it("answers with the keyboard", async () => {
    const calls = stubFetch([
      ["POST", /\/sessions$/, () => jsonRes(200, CREATED)],
      ["GET", /\/query$/, () => jsonRes(200, QUERY1)],
      ["POST", /\/answer$/, () => jsonRes(200, OUTCOME_TRUE)],
    ]);
    start();

    await waitFor(() => container.querySelector("#answer-true"), "answer buttons");
    document.dispatchEvent(new KeyboardEvent("keydown", { key: "t", bubbles: true }));

    await waitFor(() => container.querySelector(".final-card"), "final card");
    const answered = calls.find((c) => c.url.endsWith("/answer"));
    expect(answered?.body).toBe(JSON.stringify({ answer: true }));
    // the two refuted candidates are struck out on the way
    const struck = [...container.querySelectorAll(".diag.out .diag-ids")].map((n) => n.textContent);
    expect(struck).toEqual(["{1, 3, 5}", "{3, 4, 5}"]);
  });

  it("starting over keeps the pasted text and settings", async () => {
    stubFetch([
      ["POST", /\/sessions$/, () => jsonRes(200, CREATED)],
      ["GET", /\/query$/, () => jsonRes(200, QUERY1)],
    ]);
    start("[KB]\nA -> B\n");

    await waitFor(() => container.querySelector(".query-card"), "query view");
    container.querySelector<HTMLButtonElement>("#new-session")!.click();
    const textarea = await waitFor(() => container.querySelector<HTMLTextAreaElement>("#dpi-text"), "setup form");
    expect(textarea.value).toBe("[KB]\nA -> B\n");
  });
});
