/** DOM wiring for the operator console.  All state transitions re-fetch
 * from the service; the pure modules under src/ carry the logic this file
 * only renders. */

import { ApiError, ConsoleApi } from "./api.js";
import {
  animateLine,
  gestureLine,
  loadLine,
  modeLine,
  tickLine,
  viewpointLine,
} from "./commands.js";
import { toRow } from "./feedback.js";
import {
  defaultForm,
  toEntry,
  validateForm,
  violationFields,
  type EffectKind,
  type EntryForm,
  type FieldErrors,
} from "./forms.js";
import { defaultTrajectory, forceBars, gainChart, swatchStrip } from "./preview.js";
import { assignableTargets, flattenTree, toggleCollapsed } from "./tree.js";
import type { FeedbackItem, TreeNode } from "./types.js";
import { clickToPickCommand, collectDots, fitView, worldToScreen } from "./viewport.js";

const api = new ConsoleApi();

interface UiState {
  tree: TreeNode | null;
  collapsed: Set<string>;
  selectedPath: string | null;
  form: EntryForm;
  formErrors: FieldErrors;
  banner: string[];
  entryCount: number;
  attached: boolean;
  consumers: string[];
  feedback: FeedbackItem[];
  stream: AbortController | null;
}

const state: UiState = {
  tree: null,
  collapsed: new Set(),
  selectedPath: null,
  form: defaultForm("audio"),
  formErrors: {},
  banner: [],
  entryCount: 0,
  attached: false,
  consumers: [],
  feedback: [],
  stream: null,
};

function el<T extends HTMLElement>(id: string): T {
  const found = document.getElementById(id);
  if (!found) {
    throw new Error(`missing element #${id}`);
  }
  return found as T;
}

function setBanner(messages: string[], isError = true): void {
  const banner = el<HTMLDivElement>("banner");
  banner.textContent = messages.join(" · ");
  banner.className = messages.length === 0 ? "banner" : isError ? "banner error" : "banner info";
}

async function guard(work: () => Promise<void>): Promise<void> {
  try {
    await work();
  } catch (error) {
    if (error instanceof ApiError) {
      if (error.body.violations) {
        const mapped = violationFields(error.body.violations);
        state.formErrors = mapped.fields;
        setBanner([error.body.message, ...mapped.banner]);
        renderForm();
      } else {
        setBanner([`${error.body.code}: ${error.body.message}`]);
      }
    } else {
      setBanner([String(error)]);
    }
  }
}

// --- scene tree ------------------------------------------------------------

async function refreshTree(): Promise<void> {
  state.tree = await api.getTree();
  renderTree();
  renderViewport();
  renderTargetOptions();
}

function renderTree(): void {
  const host = el<HTMLUListElement>("tree");
  host.textContent = "";
  if (!state.tree) {
    return;
  }
  for (const row of flattenTree(state.tree, state.collapsed)) {
    const item = document.createElement("li");
    item.style.paddingLeft = `${row.depth * 14}px`;
    item.classList.toggle("selected", row.path === state.selectedPath);

    const twist = document.createElement("span");
    twist.className = "twist";
    twist.textContent = row.hasChildren ? (row.collapsed ? "▸" : "▾") : "·";
    if (row.hasChildren) {
      twist.addEventListener("click", (event) => {
        event.stopPropagation();
        state.collapsed = toggleCollapsed(state.collapsed, row.path);
        renderTree();
      });
    }
    item.append(twist, ` ${row.label} `);

    const kind = document.createElement("span");
    kind.className = "kind";
    kind.textContent = row.kind;
    item.append(kind);

    if (row.mappedEffects.length > 0) {
      const badge = document.createElement("span");
      badge.className = "badge";
      badge.textContent = row.mappedEffects.map((i) => `#${i}`).join(" ");
      badge.title = "mapping entries targeting this node";
      item.append(" ", badge);
    }
    item.addEventListener("click", () => {
      state.selectedPath = row.path;
      state.form.target = row.path;
      renderTree();
      renderForm();
    });
    host.append(item);
  }
}

function renderTargetOptions(): void {
  const select = el<HTMLSelectElement>("form-target");
  const current = state.form.target;
  select.textContent = "";
  if (!state.tree) {
    return;
  }
  for (const path of assignableTargets(state.tree, state.form.kind)) {
    const option = document.createElement("option");
    option.value = path;
    option.textContent = path;
    option.selected = path === current;
    select.append(option);
  }
  if (select.selectedIndex < 0 && select.options.length > 0) {
    select.selectedIndex = 0;
  }
  state.form.target = select.value;
}

// --- mapping editor --------------------------------------------------------

const FIELD_IDS: [keyof EntryForm, string][] = [
  ["trigger", "form-trigger"],
  ["waveformKind", "form-waveform"],
  ["freqHz", "form-freq"],
  ["amp", "form-amp"],
  ["durationS", "form-duration"],
  ["filePath", "form-file"],
  ["refDistance", "form-ref"],
  ["rolloff", "form-rolloff"],
  ["maxDistance", "form-maxd"],
  ["fieldName", "form-field"],
  ["unit", "form-unit"],
  ["valuesCsv", "form-values"],
  ["valueMin", "form-vmin"],
  ["valueMax", "form-vmax"],
  ["forceMin", "form-fmin"],
  ["forceMax", "form-fmax"],
  ["colorCold", "form-cold"],
  ["colorHot", "form-hot"],
];

function readForm(): void {
  state.form.kind = el<HTMLSelectElement>("form-kind").value as EffectKind;
  state.form.target = el<HTMLSelectElement>("form-target").value;
  for (const [key, id] of FIELD_IDS) {
    const input = document.getElementById(id) as HTMLInputElement | HTMLSelectElement | null;
    if (input) {
      (state.form[key] as string) = input.value;
    }
  }
}

function renderForm(): void {
  el<HTMLSelectElement>("form-kind").value = state.form.kind;
  document.body.dataset.effectKind = state.form.kind;
  document.body.dataset.waveform = state.form.waveformKind;
  for (const [key, id] of FIELD_IDS) {
    const input = document.getElementById(id) as HTMLInputElement | HTMLSelectElement | null;
    if (input && input.value !== String(state.form[key])) {
      input.value = String(state.form[key]);
    }
    const errorHost = document.getElementById(`${id}-error`);
    if (errorHost) {
      errorHost.textContent = state.formErrors[key] ?? "";
    }
  }
  const targetError = document.getElementById("form-target-error");
  if (targetError) {
    targetError.textContent = state.formErrors.target ?? "";
  }
}

async function refreshMappingViews(): Promise<void> {
  const text = await api.getMappingText();
  el<HTMLPreElement>("mapping-text").textContent = text;
  const doc = JSON.parse(text) as { entries: unknown[] };
  state.entryCount = doc.entries.length;
  renderEntryList(text);
  await refreshTree();
}

function renderEntryList(mappingText: string): void {
  const host = el<HTMLUListElement>("entry-list");
  host.textContent = "";
  const doc = JSON.parse(mappingText) as {
    entries: { target: string; effect: { type: string; trigger?: string } }[];
  };
  doc.entries.forEach((entry, index) => {
    const item = document.createElement("li");
    item.textContent = `#${index} ${entry.effect.type} → ${entry.target} `;
    const remove = document.createElement("button");
    remove.textContent = "delete";
    remove.addEventListener("click", () =>
      guard(async () => {
        await api.deleteEntry(index);
        setBanner([]);
        await refreshMappingViews();
      }),
    );
    item.append(remove);
    host.append(item);
  });
}

function wireEditor(): void {
  el<HTMLSelectElement>("form-kind").addEventListener("change", () => {
    const kind = el<HTMLSelectElement>("form-kind").value as EffectKind;
    const target = state.form.target;
    state.form = defaultForm(kind);
    state.form.target = target;
    state.formErrors = {};
    renderTargetOptions();
    renderForm();
  });
  el<HTMLSelectElement>("form-waveform").addEventListener("change", () => {
    readForm();
    renderForm();
  });

  el<HTMLButtonElement>("assign").addEventListener("click", () =>
    guard(async () => {
      readForm();
      state.formErrors = validateForm(state.form);
      renderForm();
      if (Object.keys(state.formErrors).length > 0) {
        setBanner(["fix the highlighted fields"]);
        return;
      }
      await api.addEntry(toEntry(state.form));
      setBanner([]);
      await refreshMappingViews();
    }),
  );

  el<HTMLButtonElement>("preview").addEventListener("click", () =>
    guard(async () => {
      readForm();
      state.formErrors = validateForm(state.form);
      renderForm();
      if (Object.keys(state.formErrors).length > 0) {
        setBanner(["fix the highlighted fields before previewing"]);
        return;
      }
      const entry = toEntry(state.form);
      const origin = findOrigin(state.tree, entry.target) ?? [0, 0, 0];
      const events = await api.preview(entry, defaultTrajectory(entry.effect, origin));
      setBanner([]);
      renderPreview(entry.effect.type, events);
    }),
  );

  el<HTMLButtonElement>("save").addEventListener("click", () =>
    guard(async () => {
      const mappingPath = el<HTMLInputElement>("save-path").value.trim();
      const saved = await api.saveMapping(mappingPath);
      setBanner([`saved ${saved.mapping_path} (${saved.bytes} bytes)`], false);
    }),
  );
}

function findOrigin(
  tree: TreeNode | null,
  path: string,
): [number, number, number] | null {
  if (!tree) {
    return null;
  }
  if (tree.path === path) {
    return tree.world_origin;
  }
  for (const child of tree.children) {
    const hit = findOrigin(child, path);
    if (hit) {
      return hit;
    }
  }
  return null;
}

function renderPreview(kind: string, events: import("./types.js").EffectEvent[]): void {
  const chart = el<SVGSVGElement & HTMLElement>("preview-chart");
  const strip = el<HTMLDivElement>("preview-strip");
  chart.innerHTML = "";
  strip.textContent = "";
  el<HTMLDivElement>("preview-empty").hidden = events.length > 0;
  if (events.length === 0) {
    return;
  }
  if (kind === "audio") {
    const geometry = gainChart(events, 360, 120);
    const line = document.createElementNS("http://www.w3.org/2000/svg", "polyline");
    line.setAttribute("points", geometry.points);
    line.setAttribute("fill", "none");
    line.setAttribute("stroke", "#2b6cb0");
    line.setAttribute("stroke-width", "2");
    chart.append(line);
  } else if (kind === "visual") {
    for (const color of swatchStrip(events)) {
      const cell = document.createElement("span");
      cell.className = "swatch";
      cell.style.background = color;
      strip.append(cell);
    }
  } else {
    for (const fraction of forceBars(events)) {
      const bar = document.createElement("div");
      bar.className = "force-bar";
      const fill = document.createElement("div");
      fill.style.width = `${Math.round(fraction * 100)}%`;
      bar.append(fill);
      strip.append(bar);
    }
  }
}

// --- live control ----------------------------------------------------------

function setAttached(attached: boolean): void {
  state.attached = attached;
  document.body.dataset.attached = String(attached);
  el<HTMLDivElement>("control-banner").hidden = attached;
  for (const control of document.querySelectorAll<HTMLButtonElement>("[data-needs-session]")) {
    control.disabled = !attached;
  }
}

function appendFeedback(item: FeedbackItem): void {
  state.feedback.push(item);
  const table = el<HTMLTableSectionElement>("feedback-rows");
  const row = toRow(item);
  const tr = document.createElement("tr");
  for (const cell of [row.tick, row.consumer, row.type, row.path, row.param]) {
    const td = document.createElement("td");
    td.textContent = cell;
    tr.append(td);
  }
  table.append(tr);
  tr.scrollIntoView({ block: "nearest" });
}

function sendLine(line: string): void {
  void guard(async () => {
    await api.command(line);
    setBanner([]);
  });
}

function wireControls(): void {
  el<HTMLButtonElement>("attach").addEventListener("click", () =>
    guard(async () => {
      const configPath = el<HTMLInputElement>("config-path").value.trim();
      const session = await api.attach(configPath);
      state.consumers = session.consumers;
      setAttached(true);
      setBanner([`attached: ${session.consumers.join(", ")} on port ${session.port}`], false);
      state.stream = api.streamFeedback(appendFeedback, (error) => {
        if (error) {
          setBanner([`feedback stream closed: ${String(error)}`]);
        }
      });
    }),
  );
  el<HTMLButtonElement>("detach").addEventListener("click", () =>
    guard(async () => {
      state.stream?.abort();
      state.stream = null;
      await api.detach();
      setAttached(false);
    }),
  );

  el<HTMLButtonElement>("send-load").addEventListener("click", () => {
    const scene = el<HTMLInputElement>("load-scene").value.trim();
    const mapping = el<HTMLInputElement>("load-mapping").value.trim();
    sendLine(loadLine(scene, mapping));
  });
  el<HTMLButtonElement>("send-tick").addEventListener("click", () => sendLine(tickLine()));
  el<HTMLSelectElement>("mode-select").addEventListener("change", () => {
    sendLine(modeLine(Number(el<HTMLSelectElement>("mode-select").value)));
  });
  el<HTMLButtonElement>("send-viewpoint").addEventListener("click", () => {
    const read = (id: string) => Number(el<HTMLInputElement>(id).value);
    sendLine(
      viewpointLine(
        [read("vp-x"), read("vp-y"), read("vp-z")],
        [read("vp-qx"), read("vp-qy"), read("vp-qz"), read("vp-qw")],
      ),
    );
  });
  el<HTMLButtonElement>("send-point").addEventListener("click", () =>
    sendLine(gestureLine("point")),
  );
  el<HTMLButtonElement>("send-swipe").addEventListener("click", () =>
    sendLine(gestureLine("swipe")),
  );
  el<HTMLButtonElement>("send-animate").addEventListener("click", () => {
    const target = state.selectedPath;
    if (!target) {
      setBanner(["select a node to animate"]);
      return;
    }
    const rad = Number(el<HTMLInputElement>("animate-rad").value);
    sendLine(animateLine(target, [0, 0, 1], rad));
  });
}

// --- viewport --------------------------------------------------------------

function renderViewport(): void {
  const svg = el<SVGSVGElement & HTMLElement>("viewport");
  svg.innerHTML = "";
  if (!state.tree) {
    return;
  }
  const dots = collectDots(state.tree);
  const view = fitView(dots, 360, 280);
  for (const dot of dots) {
    const [cx, cy] = worldToScreen(view, dot.x, dot.y);
    const circle = document.createElementNS("http://www.w3.org/2000/svg", "circle");
    circle.setAttribute("cx", String(cx));
    circle.setAttribute("cy", String(cy));
    circle.setAttribute("r", dot.kind === "transform" ? "3" : "5");
    circle.setAttribute(
      "fill",
      dot.kind === "transform" ? "#cbd5e0" : dot.mapped ? "#dd6b20" : "#2b6cb0",
    );
    const title = document.createElementNS("http://www.w3.org/2000/svg", "title");
    title.textContent = dot.path;
    circle.append(title);
    svg.append(circle);
  }
  svg.onclick = (event) => {
    if (!state.attached) {
      setBanner(["attach a session before picking"]);
      return;
    }
    const rect = svg.getBoundingClientRect();
    sendLine(clickToPickCommand(view, event.clientX - rect.left, event.clientY - rect.top));
  };
}

// --- boot ------------------------------------------------------------------

function wireSceneLoad(): void {
  el<HTMLButtonElement>("scene-load").addEventListener("click", () =>
    guard(async () => {
      const scenePath = el<HTMLInputElement>("scene-path").value.trim();
      const info = await api.loadScene(scenePath);
      setBanner(
        [`loaded ${info.scene_path}: ${info.node_count} nodes, ${info.path_count} paths`],
        false,
      );
      state.collapsed = new Set();
      state.selectedPath = null;
      await refreshMappingViews();
    }),
  );
}

export function boot(): void {
  wireSceneLoad();
  wireEditor();
  wireControls();
  renderForm();
  setAttached(false);
}

if (typeof document !== "undefined" && document.getElementById("tree")) {
  boot();
}
