/** Typed client for the console service.  Every non-2xx response carries
 * {code, message, violations?}; ApiError surfaces it to the panels. */

import { SseParser } from "./sse.js";
import type {
  ApiErrorBody,
  EffectEvent,
  FeedbackItem,
  MappingDoc,
  MappingEntry,
  SceneInfo,
  TreeNode,
} from "./types.js";
import type { TrajectoryStep } from "./preview.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly body: ApiErrorBody,
  ) {
    super(body.message);
  }
}

async function parseError(response: Response): Promise<never> {
  let body: ApiErrorBody;
  try {
    body = (await response.json()) as ApiErrorBody;
  } catch {
    body = { code: "http_error", message: `${response.status} ${response.statusText}` };
  }
  throw new ApiError(response.status, body);
}

export class ConsoleApi {
  constructor(private readonly base: string = "") {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await fetch(this.base + path, init);
    if (!response.ok) {
      await parseError(response);
    }
    return (await response.json()) as T;
  }

  private post<T>(path: string, body: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  loadScene(scenePath: string): Promise<SceneInfo> {
    return this.post("/scene/load", { scene_path: scenePath });
  }

  getTree(): Promise<TreeNode> {
    return this.request("/scene/tree");
  }

  /** Raw text: the body is byte-identical to the mapping file. */
  async getMappingText(): Promise<string> {
    const response = await fetch(this.base + "/mapping");
    if (!response.ok) {
      await parseError(response);
    }
    return response.text();
  }

  putMapping(doc: MappingDoc): Promise<MappingDoc> {
    return this.request("/mapping", {
      method: "PUT",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(doc),
    });
  }

  addEntry(entry: MappingEntry): Promise<MappingDoc> {
    return this.post("/mapping/entries", entry);
  }

  deleteEntry(index: number): Promise<MappingDoc> {
    return this.request(`/mapping/entries/${index}`, { method: "DELETE" });
  }

  saveMapping(mappingPath: string): Promise<{ mapping_path: string; bytes: number }> {
    return this.post("/mapping/save", { mapping_path: mappingPath });
  }

  preview(entry: MappingEntry, trajectory: TrajectoryStep[]): Promise<EffectEvent[]> {
    return this.post("/preview", { ...entry, trajectory, ticks: trajectory.length });
  }

  attach(configPath: string): Promise<{ consumers: string[]; port: number }> {
    return this.post("/control/attach", { config_path: configPath });
  }

  detach(): Promise<{ detached: boolean }> {
    return this.post("/control/detach", {});
  }

  command(line: string): Promise<{ sent: string | null }> {
    return this.post("/control/command", { line });
  }

  /** Subscribe to the feedback stream; returns an abort handle.  Each frame
   * is one FeedbackItem. */
  streamFeedback(
    onItem: (item: FeedbackItem) => void,
    onEnd: (error?: unknown) => void,
  ): AbortController {
    const controller = new AbortController();
    const parser = new SseParser();
    const decoder = new TextDecoder();
    void (async () => {
      try {
        const response = await fetch(this.base + "/control/feedback", {
          signal: controller.signal,
        });
        if (!response.ok) {
          await parseError(response);
        }
        if (response.body === null) {
          throw new Error("feedback stream has no body");
        }
        const reader = response.body.getReader();
        for (;;) {
          const { done, value } = await reader.read();
          if (done) {
            break;
          }
          for (const payload of parser.push(decoder.decode(value, { stream: true }))) {
            onItem(JSON.parse(payload) as FeedbackItem);
          }
        }
        onEnd();
      } catch (error) {
        if (!controller.signal.aborted) {
          onEnd(error);
        } else {
          onEnd();
        }
      }
    })();
    return controller;
  }
}
