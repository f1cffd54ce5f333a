/** Shapes exchanged with the console service. */

export interface TreeNode {
  path: string;
  kind: string;
  world_origin: [number, number, number];
  mapped_effects: number[];
  children: TreeNode[];
}

export interface SceneInfo {
  scene_path: string;
  node_count: number;
  path_count: number;
}

export interface SineWaveform {
  sine: { freq_hz: number; amp: number; duration_s: number };
}

export interface FileWaveform {
  file: { path: string };
}

export interface AudioEffectSpec {
  type: "audio";
  trigger: "continuous" | "on_touch";
  waveform: SineWaveform | FileWaveform;
  ref_distance?: number;
  rolloff?: number;
  max_distance?: number;
}

export interface FieldEffectSpec {
  type: "haptic" | "visual";
  field_name: string;
  unit: string;
  values: number[];
  value_min: number;
  value_max: number;
  force_min?: number;
  force_max?: number;
  color_cold?: [number, number, number];
  color_hot?: [number, number, number];
}

export type EffectSpec = AudioEffectSpec | FieldEffectSpec;

export interface MappingEntry {
  target: string;
  effect: EffectSpec;
}

export interface MappingDoc {
  scene: string;
  entries: MappingEntry[];
}

export interface EffectEvent {
  tick: number;
  type: string;
  trigger: string;
  path: string;
  param: number;
  color?: [number, number, number];
  eye?: string;
  viewpoint?: [number, number, number];
}

export interface Violation {
  entry_index: number;
  code: string;
  message: string;
}

export interface ApiErrorBody {
  code: string;
  message: string;
  violations?: Violation[];
}

/** One row of relayed consumer feedback. */
export interface FeedbackItem {
  consumer: string;
  message: { type: string } & Record<string, unknown>;
}
