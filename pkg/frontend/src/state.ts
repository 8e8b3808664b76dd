// View state and its reducers. Rendering is a pure function of this
// state, so every transition lives here and nothing else mutates it.

import type { Band, FeedbackMessage } from "./protocol.js";

export const CHART_WINDOW_S = 180; // rolling three-minute score chart
export const STALE_AFTER_S = 2;
export const MAX_TOASTS = 5;

export interface ChartPoint {
  t: number; // server_time seconds
  meInst: number;
  stress: number;
  band: Band;
}

export interface Toast {
  id: string;
  text: string;
  band: Band;
}

export interface OperatorControls {
  gazeTarget: number | "away";
  agitation: "calm" | "elevated" | "high";
}

export interface ViewState {
  message: FeedbackMessage | null;
  connected: boolean;
  stale: boolean;
  lastMessageAt: number | null; // wall seconds
  toasts: Toast[];
  chart: ChartPoint[];
  controls: OperatorControls;
}

export function initialView(): ViewState {
  return {
    message: null,
    connected: false,
    stale: false,
    lastMessageAt: null,
    toasts: [],
    chart: [],
    controls: { gazeTarget: 1, agitation: "calm" },
  };
}

export function applyFeedback(state: ViewState, msg: FeedbackMessage, wallNow: number): ViewState {
  let chart = state.chart;
  if (msg.scores !== null) {
    const point: ChartPoint = {
      t: msg.server_time,
      meInst: msg.scores.me_inst,
      stress: msg.scores.stress,
      band: msg.scores.band,
    };
    chart = [...chart, point].filter((p) => p.t >= msg.server_time - CHART_WINDOW_S);
  }
  const fresh = msg.warnings.map((w) => ({
    id: `${w.at}:${w.from}>${w.to}`,
    text: `load rising: ${w.from} → ${w.to}`,
    band: w.to,
  }));
  const toasts = [...state.toasts, ...fresh].slice(-MAX_TOASTS);
  return { ...state, message: msg, stale: false, lastMessageAt: wallNow, toasts, chart };
}

export function checkStale(state: ViewState, wallNow: number): ViewState {
  if (state.lastMessageAt === null) {
    return state;
  }
  const stale = wallNow - state.lastMessageAt > STALE_AFTER_S;
  return stale === state.stale ? state : { ...state, stale };
}

export function setConnected(state: ViewState, connected: boolean): ViewState {
  return { ...state, connected };
}

export function dismissToast(state: ViewState, id: string): ViewState {
  return { ...state, toasts: state.toasts.filter((t) => t.id !== id) };
}

export function setControls(state: ViewState, controls: Partial<OperatorControls>): ViewState {
  return { ...state, controls: { ...state.controls, ...controls } };
}
