/**
 * Typed client for the diagnosis session service.
 *
 * Four endpoints, one session id:
 *   POST /sessions              create a session from DPI text
 *   GET  /sessions/{id}/query   the pending query for the current round
 *   POST /sessions/{id}/answer  fold a true/false answer in
 *   GET  /sessions/{id}/history finished rounds
 *
 * The server computes everything; this file only moves JSON. Error bodies
 * carry a human-readable `detail` string which the views render as-is.
 */

export interface DiagnosisInfo {
  ids: number[];
  formulas: string[];
  prob: number;
}

export interface FinalDiagnosis {
  ids: number[];
  formulas: string[];
  repaired_kb: string[];
}

export interface SessionCreated {
  session_id: string;
  diagnoses: DiagnosisInfo[];
  finished: boolean;
  warning?: string;
  final_diagnosis?: FinalDiagnosis;
}

export interface QPartitionInfo {
  dplus: number[][];
  dminus: number[][];
  dzero: number[][];
}

export type PhaseKey = "p1" | "p2" | "p3" | "p4";

export interface QueryInfo {
  round: number;
  query: string[];
  explicit: number[];
  implicit: string[];
  qpartition: QPartitionInfo;
  measure_value: number;
  phase_timings: Record<PhaseKey, number>;
  reasoner_calls: Record<PhaseKey, number>;
}

export interface AnswerOutcome {
  round: number;
  eliminated: number[][];
  remaining: DiagnosisInfo[];
  finished: boolean;
  final_diagnosis?: FinalDiagnosis;
  ambiguous?: boolean;
}

export interface TranscriptRow {
  round: number;
  query: string[];
  qpartition: QPartitionInfo;
  answer: boolean;
  eliminated: number[][];
  measure_value: number;
  timings_ms: Record<PhaseKey, number>;
  reasoner_calls: Record<PhaseKey, number>;
}

/** The subset of server-side knobs the setup form exposes. */
export interface SessionSettings {
  n: number;
  measure: "ent" | "spl";
  criterion: "card" | "minsum" | "maxprob";
  enrich: boolean;
  sigma: number;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string
  ) {
    super(detail);
    this.name = "ApiError";
  }
}

export class ApiClient {
  /** base is "" when the bundle is served by the service itself. */
  constructor(private readonly base: string = "") {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let res: Response;
    try {
      res = await fetch(this.base + path, init);
    } catch {
      throw new ApiError(0, "cannot reach the session service");
    }
    if (!res.ok) {
      let detail = `request failed (HTTP ${res.status})`;
      try {
        const body = await res.json();
        if (body && typeof body.detail === "string") detail = body.detail;
      } catch {
        // non-JSON error body, keep the generic message
      }
      throw new ApiError(res.status, detail);
    }
    return res.json() as Promise<T>;
  }

  createSession(dpiText: string, settings: SessionSettings): Promise<SessionCreated> {
    return this.request<SessionCreated>("/sessions", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ dpi_text: dpiText, ...settings }),
    });
  }

  getQuery(sessionId: string): Promise<QueryInfo> {
    return this.request<QueryInfo>(`/sessions/${sessionId}/query`);
  }

  postAnswer(sessionId: string, answer: boolean): Promise<AnswerOutcome> {
    return this.request<AnswerOutcome>(`/sessions/${sessionId}/answer`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ answer }),
    });
  }

  getHistory(sessionId: string): Promise<TranscriptRow[]> {
    return this.request<TranscriptRow[]>(`/sessions/${sessionId}/history`);
  }
}
