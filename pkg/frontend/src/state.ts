/**
 * Review-session state and mutation flow.
 *
 * One mutation is in flight at a time; every mutation carries the current
 * version token. A 409 means another writer (or an earlier retry that did
 * land) moved the state: we refetch everything and surface a notice instead
 * of retrying blindly, which keeps retries harmless.
 */

import {
  AnchorListPayload,
  ApiClient,
  ApiError,
  ConflictError,
  DialoguePayload,
  MatrixPayload,
  SweepPayload,
  ThresholdsPayload,
  TimelinePayload,
} from "./api.js";

export interface ReviewSnapshot {
  timeline: TimelinePayload | null;
  anchors: AnchorListPayload | null;
  matrix: MatrixPayload | null;
  sweep: SweepPayload | null;
  dialogue: DialoguePayload | null;
  thresholds: ThresholdsPayload | null;
  selectedSegment: number | null;
  thresholdDraft: number;
  busy: boolean;
  notice: string | null;
}

type Listener = (snapshot: ReviewSnapshot) => void;

export class ReviewStore {
  private snapshot: ReviewSnapshot = {
    timeline: null,
    anchors: null,
    matrix: null,
    sweep: null,
    dialogue: null,
    thresholds: null,
    selectedSegment: null,
    thresholdDraft: 0.2,
    busy: false,
    notice: null,
  };
  private listeners: Listener[] = [];
  private mutating = false;

  constructor(readonly api: ApiClient) {}

  get state(): ReviewSnapshot {
    return this.snapshot;
  }

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    listener(this.snapshot);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private patch(update: Partial<ReviewSnapshot>): void {
    this.snapshot = { ...this.snapshot, ...update };
    for (const listener of this.listeners) listener(this.snapshot);
  }

  get version(): number {
    return this.snapshot.timeline?.version ?? 0;
  }

  selectSegment(segmentId: number | null): void {
    this.patch({ selectedSegment: segmentId });
  }

  setThresholdDraft(value: number): void {
    this.patch({ thresholdDraft: value });
  }

  dismissNotice(): void {
    this.patch({ notice: null });
  }

  /** Fetch every read endpoint and replace the snapshot. */
  async refreshAll(): Promise<void> {
    const timeline = await this.api.timeline();
    const anchors = await this.api.anchors();
    const matrix = await this.api.similarityMatrix();
    const thresholds = await this.api.thresholds();
    const dialogue = await this.api.dialogue();
    let sweep: SweepPayload | null = null;
    try {
      sweep = await this.api.similaritySweep();
    } catch (error) {
      if (!(error instanceof ApiError) || error.status !== 422) throw error;
      // sweep is unavailable until anchors exist; not an error state
    }
    this.patch({
      timeline,
      anchors,
      matrix,
      sweep,
      thresholds,
      dialogue,
      thresholdDraft: thresholds.sim_threshold,
    });
  }

  /**
   * Run one mutation, serialized. On a stale version token the state is
   * reloaded and the user is asked to re-apply; other API errors surface as
   * inline notices.
   */
  private async mutate(action: () => Promise<void>): Promise<boolean> {
    if (this.mutating) {
      this.patch({ notice: "another change is still in progress" });
      return false;
    }
    this.mutating = true;
    this.patch({ busy: true, notice: null });
    try {
      await action();
      await this.refreshAll();
      return true;
    } catch (error) {
      if (error instanceof ConflictError) {
        await this.refreshAll();
        this.patch({ notice: "state changed elsewhere; reloaded — please re-apply" });
        return false;
      }
      if (error instanceof ApiError) {
        this.patch({ notice: describeApiError(error) });
        return false;
      }
      throw error;
    } finally {
      this.mutating = false;
      this.patch({ busy: false });
    }
  }

  addAnchor(role: string, startS: number, endS: number, label: string): Promise<boolean> {
    return this.mutate(async () => {
      await this.api.addAnchor({
        role,
        start_s: startS,
        end_s: endS,
        label,
        version: this.version,
      });
    });
  }

  removeAnchor(anchorId: string): Promise<boolean> {
    return this.mutate(async () => {
      await this.api.removeAnchor(anchorId, this.version);
    });
  }

  /** PUT the draft threshold, rerun refinement, and wait for the job. */
  applyThresholdAndRerun(): Promise<boolean> {
    return this.mutate(async () => {
      const draft = this.snapshot.thresholdDraft;
      const afterPut = await this.api.putThresholds(draft, this.version);
      const started = await this.api.refine(afterPut.version, draft);
      const job = await this.api.job(started.job_id);
      if (job.status === "error") {
        throw new ApiError(500, job.detail, `refinement failed: ${job.detail}`);
      }
    });
  }

  rerunRefinement(): Promise<boolean> {
    return this.mutate(async () => {
      const started = await this.api.refine(this.version);
      const job = await this.api.job(started.job_id);
      if (job.status === "error") {
        throw new ApiError(500, job.detail, `refinement failed: ${job.detail}`);
      }
    });
  }

  overrideRole(segmentId: number, role: string, note: string): Promise<boolean> {
    return this.mutate(async () => {
      await this.api.overrideSegment(segmentId, role, note, this.version);
    });
  }
}

function describeApiError(error: ApiError): string {
  const detail = error.detail as { message?: string } | string | null;
  if (typeof detail === "string") return detail;
  if (detail && typeof detail === "object" && detail.message) return detail.message;
  return error.message;
}

/** Roles still short of the required anchor count, e.g. ["trainer (3/5)"]. */
export function insufficientRoles(anchors: AnchorListPayload | null): string[] {
  if (!anchors) return [];
  const missing: string[] = [];
  for (const role of ["trainer", "trainee"]) {
    const have = anchors.counts[role] ?? 0;
    if (have < anchors.min_anchors) {
      missing.push(`${role} (${have}/${anchors.min_anchors})`);
    }
  }
  return missing;
}
