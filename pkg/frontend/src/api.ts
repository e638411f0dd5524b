/**
 * Typed client for the review service HTTP API. The UI never computes
 * pipeline quantities itself; everything numeric (similarities, sweep rows,
 * thresholds) is fetched. See API.md for the endpoint contract.
 */

export interface ActivityPoint {
  t0: number;
  t1: number;
  v: number;
}

export interface SegmentRow {
  id: number;
  start_s: number;
  end_s: number;
  text: string;
  mean_vad: number;
  raw_speaker_label: string;
  outcome: string | null;
  sim_trainer: number | null;
  sim_trainee: number | null;
}

export interface AnchorInfo {
  id: string;
  role: string;
  start_s: number;
  end_s: number;
  label: string;
}

export interface TimelinePayload {
  surgery_id: string;
  duration_s: number;
  version: number;
  simulation: boolean;
  activity: ActivityPoint[];
  segments: SegmentRow[];
  anchors: AnchorInfo[];
}

export interface AnchorListPayload {
  version: number;
  min_anchors: number;
  counts: Record<string, number>;
  anchors: AnchorInfo[];
}

export interface MatrixPayload {
  version: number;
  labels: string[];
  matrix: number[][];
}

export interface SweepRow {
  threshold: number;
  precision: number | null;
  recall: number | null;
  plm: number | null;
  note: string | null;
}

export interface SweepPayload {
  version: number;
  rows: SweepRow[];
}

export interface ThresholdsPayload {
  version: number;
  vad_gate: number;
  sim_threshold: number;
  tolerance_s: number;
  context_k: number;
  min_anchors: number;
}

export interface DialogueTurnPayload {
  index: number;
  role: string;
  start_s: number;
  end_s: number;
  timestamp_label: string;
  text: string;
  override_note?: string;
}

export interface DialoguePayload {
  version: number;
  turns: DialogueTurnPayload[];
}

export interface JobPayload {
  id: string;
  status: "running" | "done" | "error";
  detail: unknown;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: unknown,
    message: string,
  ) {
    super(message);
  }
}

/** Stale version token: the server state moved on; reload before retrying. */
export class ConflictError extends ApiError {
  constructor(status: number, detail: unknown) {
    super(status, detail, "stale version token");
  }
}

async function parseError(response: Response): Promise<never> {
  let detail: unknown = null;
  try {
    detail = (await response.json()).detail;
  } catch {
    /* non-JSON error body */
  }
  if (response.status === 409) {
    throw new ConflictError(response.status, detail);
  }
  throw new ApiError(response.status, detail, `HTTP ${response.status}`);
}

export class ApiClient {
  constructor(private readonly baseUrl: string = "") {}

  private async get<T>(path: string): Promise<T> {
    const response = await fetch(this.baseUrl + path);
    if (!response.ok) await parseError(response);
    return (await response.json()) as T;
  }

  private async send<T>(method: string, path: string, body: unknown): Promise<T> {
    const response = await fetch(this.baseUrl + path, {
      method,
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!response.ok) await parseError(response);
    return (await response.json()) as T;
  }

  timeline(): Promise<TimelinePayload> {
    return this.get("/timeline");
  }

  anchors(): Promise<AnchorListPayload> {
    return this.get("/anchors");
  }

  addAnchor(req: {
    role: string;
    start_s: number;
    end_s: number;
    label: string;
    version: number;
  }): Promise<{ anchor_id: string; version: number }> {
    return this.send("POST", "/anchors", req);
  }

  removeAnchor(anchorId: string, version: number): Promise<{ version: number }> {
    return this.send("DELETE", `/anchors/${anchorId}`, { version });
  }

  refine(version: number, threshold?: number): Promise<{ job_id: string; version: number }> {
    return this.send("POST", "/refine", { version, threshold: threshold ?? null });
  }

  job(jobId: string): Promise<JobPayload> {
    return this.get(`/jobs/${jobId}`);
  }

  dialogue(): Promise<DialoguePayload> {
    return this.get("/dialogue");
  }

  similarityMatrix(): Promise<MatrixPayload> {
    return this.get("/similarity-matrix");
  }

  similaritySweep(): Promise<SweepPayload> {
    return this.get("/similarity-sweep");
  }

  thresholds(): Promise<ThresholdsPayload> {
    return this.get("/thresholds");
  }

  putThresholds(simThreshold: number, version: number): Promise<{ version: number }> {
    return this.send("PUT", "/thresholds", { sim_threshold: simThreshold, version });
  }

  overrideSegment(
    segmentId: number,
    role: string,
    note: string,
    version: number,
  ): Promise<{ version: number }> {
    return this.send("POST", `/segments/${segmentId}/override`, { role, note, version });
  }

  segmentAudioUrl(segmentId: number): string {
    return `${this.baseUrl}/segments/${segmentId}/audio`;
  }
}
