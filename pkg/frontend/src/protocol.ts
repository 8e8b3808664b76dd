// Wire types for the assessment service (see docs/protocol.md).
// The dashboard speaks only this public protocol.

export type Band = "green" | "yellow" | "orange" | "red";
export type Phase = "idle" | "calibrating" | "running" | "ended";

export interface Scores {
  me_inst: number;
  me_overall: number;
  stress: number;
  band: Band;
  stress_band: Band;
}

export interface Warning {
  at: number;
  from: Band;
  to: Band;
}

export interface FeedbackMessage {
  v: number;
  kind: "feedback";
  session: string;
  timestamp: number | null;
  server_time: number;
  phase: Phase;
  attention: Record<string, number>; // workstation id -> percent
  focus: number; // 0 = distracted
  facing: { theta: number; phi: number } | null;
  scores: Scores | null;
  contributions: Record<string, number> | null;
  counters: Record<string, number>;
  warnings: Warning[];
  snapshot: boolean;
}

export type InstructionKind = "next" | "check_back" | "back";

export type ControlAction =
  | { action: "start"; mode?: "sim" | "ingest"; frame_rate?: number; calibration?: number }
  | { action: "stop" }
  | { action: "instruction"; event: InstructionKind; steps?: number }
  | { action: "sim"; gaze_target?: number | "away"; proximity?: number; agitation?: string; noise_dBA?: number }
  | { action: "self_touch" };

export interface ControlReply {
  ok: boolean;
  error?: string;
  counters?: Record<string, number>;
  phase?: Phase;
}

export function encodeControl(action: ControlAction): string {
  return JSON.stringify(action);
}

export function decodeFeedback(text: string): FeedbackMessage | null {
  let obj: unknown;
  try {
    obj = JSON.parse(text);
  } catch {
    return null;
  }
  const msg = obj as FeedbackMessage;
  if (!msg || msg.kind !== "feedback" || typeof msg.v !== "number") {
    return null;
  }
  return msg;
}
