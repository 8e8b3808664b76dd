// Pure view: ViewState in, HTML out. No DOM reads, no clocks, no
// randomness — snapshot tests rely on that.

import type { Band } from "./protocol.js";
import type { ViewState } from "./state.js";

export const BAND_COLORS: Record<Band, string> = {
  green: "#2e9e4f",
  yellow: "#d9b91f",
  orange: "#e07b26",
  red: "#d13232",
};

const WEIGHT_SUM = 17.0; // default mental-effort weight total, for bar scale
const STRESS_SCALE = 2.0;

function pct(x: number): string {
  return `${Math.max(0, Math.min(100, x)).toFixed(1)}%`;
}

function scoreBar(label: string, value: number, scaled: number, band: Band): string {
  const width = pct(scaled * 100);
  const color = BAND_COLORS[band];
  return `
    <div class="score-row">
      <span class="score-label">${label}</span>
      <div class="bar-track">
        <div class="bar-fill band-${band}" style="width:${width};background:${color}"></div>
      </div>
      <span class="score-value">${value.toFixed(2)} <em class="band-name">${band}</em></span>
    </div>`;
}

function facingIndicator(facing: { theta: number; phi: number } | null): string {
  if (facing === null) {
    return `<svg class="facing" viewBox="-50 -50 100 100"><circle r="46" class="facing-ring"/><text y="5" class="facing-none">no pose</text></svg>`;
  }
  // project the facing direction on a 2D disc: straight at the camera = center
  const x = Math.sin(facing.theta) * 42;
  const y = -Math.sin(facing.phi) * 42;
  const deg = (facing.theta * 180) / Math.PI;
  return `
    <svg class="facing" viewBox="-50 -50 100 100">
      <circle r="46" class="facing-ring"/>
      <line x1="0" y1="0" x2="${x.toFixed(1)}" y2="${y.toFixed(1)}" class="facing-ray"/>
      <polygon points="0,-7 14,0 0,7" class="facing-head"
               transform="translate(${x.toFixed(1)},${y.toFixed(1)}) rotate(${deg.toFixed(1)})"/>
    </svg>`;
}

function attentionRows(attention: Record<string, number>, focus: number): string {
  const labels: Record<string, string> = { "1": "assembly", "2": "instructions", "3": "storage" };
  return Object.keys(attention)
    .sort()
    .map((id) => {
      const value = attention[id] ?? 0;
      const focused = String(focus) === id ? " focused" : "";
      return `
      <div class="attention-row${focused}" data-ws="${id}">
        <span class="ws-label">W${id} ${labels[id] ?? ""}</span>
        <div class="bar-track"><div class="bar-fill attention-fill" style="width:${pct(value)}"></div></div>
        <span class="ws-value">${value.toFixed(0)}%</span>
      </div>`;
    })
    .join("");
}

function chartSvg(state: ViewState): string {
  const points = state.chart;
  if (points.length < 2) {
    return `<svg class="chart" viewBox="0 0 360 80"><text x="10" y="45" class="chart-empty">collecting…</text></svg>`;
  }
  const t1 = points[points.length - 1]!.t;
  const t0 = t1 - 180;
  const toX = (t: number) => ((t - t0) / 180) * 360;
  const me = points
    .map((p) => `${toX(p.t).toFixed(1)},${(76 - Math.min(p.meInst / WEIGHT_SUM, 1) * 72).toFixed(1)}`)
    .join(" ");
  const stress = points
    .map((p) => `${toX(p.t).toFixed(1)},${(76 - Math.min(p.stress / STRESS_SCALE, 1) * 72).toFixed(1)}`)
    .join(" ");
  return `
    <svg class="chart" viewBox="0 0 360 80">
      <polyline points="${me}" class="chart-me"/>
      <polyline points="${stress}" class="chart-stress"/>
    </svg>`;
}

function toasts(state: ViewState): string {
  if (state.toasts.length === 0) {
    return "";
  }
  const items = state.toasts
    .map(
      (t) =>
        `<div class="toast band-${t.band}" style="border-color:${BAND_COLORS[t.band]}" data-toast="${t.id}">⚠ ${t.text}</div>`,
    )
    .join("");
  return `<div class="toasts">${items}</div>`;
}

function controls(state: ViewState): string {
  const gaze = state.controls.gazeTarget;
  const option = (value: string, label: string) =>
    `<option value="${value}"${String(gaze) === value ? " selected" : ""}>${label}</option>`;
  const agitation = ["calm", "elevated", "high"]
    .map(
      (level) =>
        `<button class="ctl agitation${state.controls.agitation === level ? " active" : ""}" data-action="agitation" data-level="${level}">${level}</button>`,
    )
    .join("");
  return `
    <div class="panel controls">
      <h2>operator</h2>
      <div class="ctl-row">
        <button class="ctl" data-action="instruction" data-event="next">next ▶</button>
        <button class="ctl" data-action="instruction" data-event="check_back">check back ↻</button>
        <button class="ctl" data-action="instruction" data-event="back" data-steps="2">back ×2</button>
      </div>
      <div class="ctl-row">
        <label>gaze
          <select class="ctl" data-action="gaze">
            ${option("1", "W1 assembly")}${option("2", "W2 instructions")}${option("3", "W3 storage")}${option("away", "away")}
          </select>
        </label>
        <button class="ctl" data-action="self_touch">self-touch</button>
      </div>
      <div class="ctl-row">${agitation}</div>
    </div>`;
}

export function render(state: ViewState): string {
  const msg = state.message;
  const phase = msg?.phase ?? "idle";
  const status = state.connected ? "connected" : "disconnected";
  const staleBanner = state.stale
    ? `<div class="stale-banner">feed stalled — showing last known state</div>`
    : "";
  const scores = msg?.scores ?? null;
  const bars =
    scores === null
      ? `<div class="score-row score-empty">no scores yet</div>`
      : scoreBar("mental effort", scores.me_inst, scores.me_inst / WEIGHT_SUM, scores.band) +
        scoreBar("stress level", scores.stress, scores.stress / STRESS_SCALE, scores.stress_band);
  return `
  <header class="top ${status}">
    <h1>assembly cognitive load</h1>
    <span class="phase">${phase}</span>
    <span class="conn">${status}</span>
  </header>
  ${staleBanner}
  ${toasts(state)}
  <main class="grid">
    <div class="panel">
      <h2>facing</h2>
      ${facingIndicator(msg?.facing ?? null)}
      <div class="focus-line">focus: ${msg === null || msg.focus === 0 ? "distracted" : `W${msg.focus}`}</div>
    </div>
    <div class="panel">
      <h2>attention</h2>
      ${msg === null ? `<div class="attention-empty">waiting for telemetry</div>` : attentionRows(msg.attention, msg.focus)}
    </div>
    <div class="panel scores">
      <h2>scores</h2>
      ${bars}
      ${chartSvg(state)}
    </div>
    ${controls(state)}
  </main>`;
}
