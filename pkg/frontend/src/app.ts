/**
 * The session UI: setup form, query-and-answer loop, history table.
 *
 * All state is folded from server responses; the client never computes
 * diagnoses, partitions or eliminations on its own. Every user action maps
 * to at most one in-flight request (answers are authoritative only once the
 * server acked them, so there is no optimistic rendering to roll back).
 * Rendering is a full repaint of the root from the current state, which
 * keeps the DOM an honest projection of what the server said.
 */

import {
  ApiClient,
  ApiError,
  type AnswerOutcome,
  type DiagnosisInfo,
  type FinalDiagnosis,
  type QueryInfo,
  type SessionSettings,
  type TranscriptRow,
} from "./api";
import { idSetText, measureValueText, msText, probText, toSymbols } from "./format";

/** The bundled example problem, same as examples/ex1.dpi in the repo. */
export const EXAMPLE_DPI = `# Five-formula knowledge base with one negative test case.
# The KB is consistent on its own but entails A -> H, which the test case
# forbids, so something among formulas 1..5 is broken.
[REQUIREMENTS]
consistency
[KB]
A -> B & L
A -> F
B | F -> H
L -> H
!H -> G & !A
[BACKGROUND]
[NEGATIVE]
A -> H
`;

// ---------------------------------------------------------------------------
// state

interface DisplayRow {
  label: number; // 1-based, assigned at first appearance, stable for the session
  ids: number[];
  formulas: string[];
  prob: number;
  out: boolean; // struck out by the latest answer
}

type Tab = "query" | "history";

export interface AppState {
  screen: "setup" | "session";
  dpiText: string;
  settings: SessionSettings;
  setupError: string | null;
  sessionId: string | null;
  rows: DisplayRow[];
  warning: string | null;
  query: QueryInfo | null;
  final: FinalDiagnosis | null;
  ambiguous: boolean;
  note: string | null; // session-state messages (expired, finished, ...)
  tab: Tab;
  history: TranscriptRow[] | null;
  busy: boolean;
}

function freshState(): AppState {
  return {
    screen: "setup",
    dpiText: "",
    settings: { n: 3, measure: "ent", criterion: "card", enrich: false, sigma: 0.95 },
    setupError: null,
    sessionId: null,
    rows: [],
    warning: null,
    query: null,
    final: null,
    ambiguous: false,
    note: null,
    tab: "query",
    history: null,
    busy: false,
  };
}

function errText(err: unknown): string {
  if (err instanceof ApiError) return err.detail;
  return err instanceof Error ? err.message : String(err);
}

// ---------------------------------------------------------------------------
// tiny DOM builder

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  ...children: Array<Node | string>
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    if (key === "class") node.className = value;
    else node.setAttribute(key, value);
  }
  node.append(...children);
  return node;
}

function diagLabel(label: number): HTMLElement {
  const span = el("span", { class: "diag-label" }, "D");
  span.append(el("sub", {}, String(label)));
  return span;
}

// ---------------------------------------------------------------------------
// controller

export class App {
  readonly state: AppState = freshState();
  private labels = new Map<string, number>();
  private readonly onKey = (event: KeyboardEvent) => this.handleKey(event);

  constructor(
    private readonly root: HTMLElement,
    private readonly api: ApiClient
  ) {}

  mount(): void {
    document.addEventListener("keydown", this.onKey);
    this.render();
  }

  unmount(): void {
    document.removeEventListener("keydown", this.onKey);
    this.root.replaceChildren();
  }

  // ---- actions ------------------------------------------------------------

  /** Serializes user intents: while a request runs, everything else is a no-op. */
  private async withBusy(action: () => Promise<void>): Promise<void> {
    if (this.state.busy) return;
    this.state.busy = true;
    this.render();
    try {
      await action();
    } finally {
      this.state.busy = false;
      this.render();
    }
  }

  startSession(): Promise<void> {
    return this.withBusy(async () => {
      const s = this.state;
      s.setupError = null;
      try {
        const created = await this.api.createSession(s.dpiText, s.settings);
        this.labels.clear();
        s.screen = "session";
        s.tab = "query";
        s.sessionId = created.session_id;
        s.rows = created.diagnoses.map((d) => this.toRow(d));
        s.warning = created.warning ?? null;
        s.final = created.final_diagnosis ?? null;
        s.ambiguous = false;
        s.query = null;
        s.history = null;
        s.note = null;
        if (!created.finished) await this.fetchQuery();
      } catch (err) {
        s.setupError = errText(err); // stay on the form, 400 details render inline
      }
    });
  }

  answer(value: boolean): Promise<void> {
    return this.withBusy(async () => {
      const s = this.state;
      if (s.sessionId === null || s.query === null) return;
      try {
        const outcome = await this.api.postAnswer(s.sessionId, value);
        this.applyOutcome(outcome);
        this.render(); // show the strike-outs before the next round arrives
        if (!outcome.finished) await this.fetchQuery();
      } catch (err) {
        this.sessionTrouble(err);
      }
    });
  }

  showHistory(): Promise<void> {
    return this.withBusy(async () => {
      const s = this.state;
      s.tab = "history";
      if (s.sessionId === null) return;
      try {
        s.history = await this.api.getHistory(s.sessionId);
      } catch (err) {
        this.sessionTrouble(err);
      }
    });
  }

  showQuery(): void {
    if (this.state.busy) return;
    this.state.tab = "query";
    this.render();
  }

  newSession(): void {
    if (this.state.busy) return;
    const keep = this.state.dpiText;
    const settings = this.state.settings;
    Object.assign(this.state, freshState());
    this.state.dpiText = keep;
    this.state.settings = settings;
    this.labels.clear();
    this.render();
  }

  // ---- folding server responses in ----------------------------------------

  private toRow(d: DiagnosisInfo): DisplayRow {
    return { label: this.labelFor(d.ids), ids: d.ids, formulas: d.formulas, prob: d.prob, out: false };
  }

  private labelFor(ids: number[]): number {
    const key = ids.join(",");
    let label = this.labels.get(key);
    if (label === undefined) {
      label = this.labels.size + 1;
      this.labels.set(key, label);
    }
    return label;
  }

  private async fetchQuery(): Promise<void> {
    const s = this.state;
    if (s.sessionId === null) return;
    try {
      s.query = await this.api.getQuery(s.sessionId);
    } catch (err) {
      this.sessionTrouble(err);
    }
  }

  private applyOutcome(outcome: AnswerOutcome): void {
    const s = this.state;
    const gone = new Set(outcome.eliminated.map((ids) => ids.join(",")));
    const live = new Map(outcome.remaining.map((d) => [d.ids.join(","), d]));
    const next: DisplayRow[] = [];
    for (const row of s.rows) {
      if (row.out) continue; // struck in an earlier round, drop it now
      const key = row.ids.join(",");
      if (gone.has(key)) {
        next.push({ ...row, out: true });
      } else {
        const d = live.get(key);
        if (d !== undefined) {
          next.push({ ...row, prob: d.prob });
          live.delete(key);
        }
      }
    }
    // candidates that entered the leading set after the elimination
    for (const d of live.values()) {
      if (!next.some((r) => !r.out && r.ids.join(",") === d.ids.join(","))) next.push(this.toRow(d));
    }
    s.rows = next;
    s.query = null;
    if (outcome.finished) {
      s.final = outcome.final_diagnosis ?? null;
      s.ambiguous = outcome.ambiguous ?? false;
    }
  }

  private sessionTrouble(err: unknown): void {
    if (err instanceof ApiError && err.status === 404) {
      this.state.note = "The server no longer knows this session (expired or restarted). Start a new one.";
    } else {
      this.state.note = errText(err);
    }
  }

  private handleKey(event: KeyboardEvent): void {
    const target = event.target;
    if (target instanceof HTMLInputElement || target instanceof HTMLTextAreaElement || target instanceof HTMLSelectElement) {
      return;
    }
    const s = this.state;
    if (s.screen !== "session" || s.tab !== "query" || s.busy || s.final !== null || s.query === null) return;
    const key = event.key.toLowerCase();
    if (key === "t" || key === "y") void this.answer(true);
    else if (key === "f" || key === "n") void this.answer(false);
  }

  // ---- rendering -----------------------------------------------------------

  render(): void {
    this.root.replaceChildren(this.state.screen === "setup" ? this.renderSetup() : this.renderSession());
  }

  private renderSetup(): HTMLElement {
    const s = this.state;
    const wrap = el("div", { class: "screen setup" });
    wrap.append(
      el("h1", {}, "Knowledge base debugging"),
      el(
        "p",
        { class: "tagline" },
        "Load a problem file, then answer true/false questions until a single explanation of the faults remains."
      )
    );

    const card = el("div", { class: "card" });

    const fileInput = el("input", { type: "file", id: "dpi-file", accept: ".dpi,.txt,text/plain" });
    fileInput.addEventListener("change", () => {
      const file = fileInput.files && fileInput.files[0];
      if (!file) return;
      const reader = new FileReader();
      reader.onload = () => {
        s.dpiText = String(reader.result ?? "");
        this.render();
      };
      reader.readAsText(file);
    });

    const exampleBtn = el("button", { type: "button", id: "insert-example", class: "ghost" }, "insert example");
    exampleBtn.addEventListener("click", () => {
      s.dpiText = EXAMPLE_DPI;
      this.render();
    });

    const textarea = el("textarea", {
      id: "dpi-text",
      rows: "12",
      spellcheck: "false",
      placeholder: "[REQUIREMENTS]\nconsistency\n[KB]\nA -> B\n...\n[BACKGROUND]\n[NEGATIVE]\nA -> H",
    });
    textarea.value = s.dpiText;
    textarea.addEventListener("input", () => {
      s.dpiText = textarea.value; // no repaint needed, the textarea owns the caret
    });

    card.append(
      el("div", { class: "field-row" }, el("label", { for: "dpi-file" }, "Problem file"), fileInput, exampleBtn),
      textarea,
      this.renderSettings()
    );

    if (s.setupError !== null) {
      card.append(el("div", { class: "setup-error", role: "alert" }, s.setupError));
    }

    const start = el("button", { type: "button", id: "start-session", class: "primary" }, "Start session");
    if (s.busy) start.setAttribute("disabled", "");
    start.addEventListener("click", () => void this.startSession());
    card.append(el("div", { class: "actions" }, start));

    wrap.append(card);
    return wrap;
  }

  private renderSettings(): HTMLElement {
    const s = this.state;
    const grid = el("div", { class: "settings" });

    const nValue = el("span", { id: "cfg-n-value", class: "range-value" }, String(s.settings.n));
    const n = el("input", { type: "range", id: "cfg-n", min: "1", max: "12", step: "1", value: String(s.settings.n) });
    n.addEventListener("input", () => {
      s.settings.n = Number(n.value);
      nValue.textContent = n.value;
    });
    grid.append(field("cfg-n", "leading diagnoses n", el("span", {}, n, nValue)));

    const measure = el("select", { id: "cfg-measure" });
    measure.append(
      el("option", { value: "ent" }, "ENT, expected information gain"),
      el("option", { value: "spl" }, "SPL, worst-case split")
    );
    measure.value = s.settings.measure;
    measure.addEventListener("change", () => {
      s.settings.measure = measure.value as SessionSettings["measure"];
    });
    grid.append(field("cfg-measure", "measure", measure));

    const criterion = el("select", { id: "cfg-criterion" });
    criterion.append(
      el("option", { value: "card" }, "fewest formulas"),
      el("option", { value: "minsum" }, "lowest summed fault probability"),
      el("option", { value: "maxprob" }, "lowest maximum fault probability")
    );
    criterion.value = s.settings.criterion;
    criterion.addEventListener("change", () => {
      s.settings.criterion = criterion.value as SessionSettings["criterion"];
    });
    grid.append(field("cfg-criterion", "query preference", criterion));

    const sigma = el("input", {
      type: "number",
      id: "cfg-sigma",
      min: "0.5",
      max: "1",
      step: "0.01",
      value: String(s.settings.sigma),
    });
    sigma.addEventListener("change", () => {
      const v = Number(sigma.value);
      if (Number.isFinite(v)) s.settings.sigma = v;
    });
    grid.append(field("cfg-sigma", "stop threshold σ", sigma));

    const enrich = el("input", { type: "checkbox", id: "cfg-enrich" });
    enrich.checked = s.settings.enrich;
    enrich.addEventListener("change", () => {
      s.settings.enrich = enrich.checked;
    });
    const enrichWrap = el("label", { class: "check", for: "cfg-enrich" });
    enrichWrap.append(enrich, " widen with entailed statements, then minimize");
    grid.append(enrichWrap);

    return grid;
  }

  private renderSession(): HTMLElement {
    const s = this.state;
    const wrap = el("div", { class: "screen session" });

    const chips = el("div", { class: "chips" });
    chips.append(
      el("span", { class: "chip" }, s.settings.measure.toUpperCase()),
      el("span", { class: "chip" }, `n=${s.settings.n}`),
      el("span", { class: "chip" }, `σ=${s.settings.sigma}`),
      el("span", { class: "chip" }, s.settings.enrich ? "enriched" : "plain queries")
    );

    const newBtn = el("button", { type: "button", id: "new-session", class: "ghost" }, "new session");
    if (s.busy) newBtn.setAttribute("disabled", "");
    newBtn.addEventListener("click", () => this.newSession());

    const topbar = el("div", { class: "topbar" });
    topbar.append(
      el("div", {}, el("strong", {}, "Session "), el("code", {}, (s.sessionId ?? "").slice(0, 8)), chips),
      newBtn
    );
    wrap.append(topbar);

    const tabs = el("div", { class: "tabs", role: "tablist" });
    const tabQuery = el(
      "button",
      { type: "button", id: "tab-query", class: s.tab === "query" ? "tab active" : "tab", role: "tab" },
      "Query"
    );
    tabQuery.addEventListener("click", () => this.showQuery());
    const tabHistory = el(
      "button",
      { type: "button", id: "tab-history", class: s.tab === "history" ? "tab active" : "tab", role: "tab" },
      "History"
    );
    tabHistory.addEventListener("click", () => void this.showHistory());
    if (s.busy) {
      tabQuery.setAttribute("disabled", "");
      tabHistory.setAttribute("disabled", "");
    }
    tabs.append(tabQuery, tabHistory);
    wrap.append(tabs);

    if (s.warning !== null) wrap.append(el("div", { class: "banner warning" }, s.warning));
    if (s.note !== null) wrap.append(el("div", { class: "banner note" }, s.note));

    wrap.append(s.tab === "history" ? this.renderHistory() : this.renderMain());
    return wrap;
  }

  private renderMain(): HTMLElement {
    const s = this.state;
    const main = el("div", { class: "main" });

    const diag = el("section", { class: "card diagnoses" });
    diag.append(el("h2", {}, "Leading diagnoses"));
    for (const row of s.rows) {
      const item = el("div", { class: row.out ? "diag out" : "diag" });
      const head = el("div", { class: "diag-head" });
      head.append(
        diagLabel(row.label),
        el("span", { class: "diag-ids" }, idSetText(row.ids)),
        el("span", { class: "diag-prob" }, probText(row.prob))
      );
      if (row.out) head.append(el("span", { class: "diag-gone" }, "eliminated"));
      const formulas = el("div", { class: "diag-formulas" });
      for (const f of row.formulas) formulas.append(el("span", { class: "formula" }, toSymbols(f)));
      item.append(head, formulas);
      diag.append(item);
    }
    main.append(diag);

    if (s.final !== null) main.append(this.renderFinal(s.final));
    else if (s.query !== null) main.append(this.renderQuery(s.query));
    else if (s.note === null) main.append(el("section", { class: "card" }, el("p", { class: "loading" }, "computing the next query...")));

    return main;
  }

  private renderQuery(query: QueryInfo): HTMLElement {
    const s = this.state;
    const card = el("section", { class: "card query-card" });

    const head = el("div", { class: "query-head" });
    head.append(
      el("h2", {}, `Round ${query.round}`),
      el(
        "span",
        { class: "measure-chip", title: "measure value of the chosen partition" },
        `${s.settings.measure.toUpperCase()} ${measureValueText(query.measure_value)}`
      )
    );
    card.append(head, el("p", { class: "ask" }, "Does every statement below hold in the intended domain?"));

    const implicit = new Set(query.implicit);
    const list = el("ul", { class: "query-formulas" });
    for (const text of query.query) {
      const li = el("li", { class: "formula" }, toSymbols(text));
      if (implicit.has(text)) li.append(el("span", { class: "tag" }, "entailed"));
      list.append(li);
    }
    card.append(list);

    const plus = query.qpartition.dplus;
    const minus = query.qpartition.dminus;
    const summary = el("p", { class: "qp-summary" });
    summary.append(
      "Answering ",
      el("strong", {}, "true"),
      ` eliminates ${minus.length} (${minus.map((ids) => `D${this.labelFor(ids)}`).join(", ")}), `,
      el("strong", {}, "false"),
      ` eliminates ${plus.length} (${plus.map((ids) => `D${this.labelFor(ids)}`).join(", ")}).`
    );
    card.append(summary);

    const yes = el("button", { type: "button", id: "answer-true", class: "answer primary" }, "true in the intended domain");
    const no = el("button", { type: "button", id: "answer-false", class: "answer" }, "false");
    if (s.busy) {
      yes.setAttribute("disabled", "");
      no.setAttribute("disabled", "");
    }
    yes.addEventListener("click", () => void this.answer(true));
    no.addEventListener("click", () => void this.answer(false));
    card.append(el("div", { class: "actions" }, yes, no), el("p", { class: "hint" }, "keys: T = true, F = false"));
    return card;
  }

  private renderFinal(final: FinalDiagnosis): HTMLElement {
    const card = el("section", { class: "card final-card" });
    const head = el("div", { class: "final-head" });
    head.append(el("h2", {}, "Final diagnosis"), diagLabel(this.labelFor(final.ids)), el("span", { class: "diag-ids" }, idSetText(final.ids)));
    card.append(head);

    if (this.state.ambiguous) {
      card.append(
        el("div", { class: "banner warning" }, "More than one candidate cleared the stop threshold; showing the most probable one.")
      );
    }

    card.append(el("p", {}, "Formulas to retract or repair:"));
    const faulty = el("ul", { class: "final-faulty" });
    for (const f of final.formulas) faulty.append(el("li", { class: "formula" }, toSymbols(f)));
    card.append(faulty);

    card.append(el("h3", {}, "Repaired knowledge base (K ∖ D)"));
    const kept = el("ul", { class: "final-kept" });
    if (final.repaired_kb.length === 0) {
      kept.append(el("li", { class: "empty" }, "(no formulas remain)"));
    } else {
      for (const f of final.repaired_kb) kept.append(el("li", { class: "formula" }, toSymbols(f)));
    }
    card.append(kept);

    const again = el("button", { type: "button", id: "start-over", class: "ghost" }, "diagnose another KB");
    again.addEventListener("click", () => this.newSession());
    card.append(el("div", { class: "actions" }, again));
    return card;
  }

  private renderHistory(): HTMLElement {
    const s = this.state;
    const card = el("section", { class: "card history" });
    card.append(el("h2", {}, "Rounds so far"));

    if (s.history === null) {
      card.append(el("p", { class: "loading" }, "loading..."));
      return card;
    }
    if (s.history.length === 0) {
      card.append(el("p", { class: "empty" }, "No answered rounds yet."));
      return card;
    }

    const table = el("table", { class: "history-table" });
    const headRow = el("tr", {});
    for (const h of ["Round", "Query", "Answer", "Eliminated", "Score", "P1 ms", "P2 ms", "P3 ms", "P4 ms", "Reasoner"]) {
      headRow.append(el("th", {}, h));
    }
    table.append(el("thead", {}, headRow));

    const body = el("tbody", {});
    for (const row of s.history) {
      const tr = el("tr", {});
      tr.append(el("td", { class: "num" }, String(row.round)));

      const queryCell = el("td", { class: "query-cell" });
      for (const q of row.query) queryCell.append(el("div", { class: "formula" }, toSymbols(q)));
      tr.append(queryCell);

      tr.append(el("td", {}, row.answer ? "true" : "false"));

      const elim = el("td", { class: "elim-cell" });
      for (const ids of row.eliminated) elim.append(el("div", {}, idSetText(ids)));
      tr.append(elim);

      tr.append(el("td", { class: "num" }, measureValueText(row.measure_value)));
      for (const phase of ["p1", "p2", "p3", "p4"] as const) {
        tr.append(el("td", { class: "num" }, msText(row.timings_ms[phase])));
      }

      // the search and selection phases promise zero solver calls, make it visible
      const searchCalls = row.reasoner_calls.p1 + row.reasoner_calls.p2;
      const enrichCalls = row.reasoner_calls.p3 + row.reasoner_calls.p4;
      const badge = el(
        "span",
        { class: searchCalls === 0 ? "badge zero" : "badge hot" },
        `reasoner calls: ${searchCalls}`
      );
      const cell = el("td", {}, badge);
      if (enrichCalls > 0) cell.append(el("span", { class: "badge aux" }, `+${enrichCalls} enrichment`));
      tr.append(cell);

      body.append(tr);
    }
    table.append(body);
    card.append(el("div", { class: "table-scroll" }, table));
    return card;
  }
}

function field(id: string, label: string, control: HTMLElement): HTMLElement {
  const wrap = el("div", { class: "field" });
  wrap.append(el("label", { for: id }, label), control);
  return wrap;
}

export function mountApp(root: HTMLElement, api: ApiClient): App {
  const app = new App(root, api);
  app.mount();
  return app;
}
