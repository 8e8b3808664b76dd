// Protocol-conformance round trip: the dashboard's own state and
// control modules drive a live service process through a scripted
// operator session and verify what the server accumulated.

import { spawn, ChildProcess } from "node:child_process";
import { afterAll, beforeAll, describe, expect, it } from "vitest";
import WebSocket from "ws";

import { OperatorPanel } from "../src/controls.js";
import { ControlReply, decodeFeedback, FeedbackMessage } from "../src/protocol.js";
import { applyFeedback, initialView, ViewState } from "../src/state.js";

const PORT = 8700 + (process.pid % 200);
const BASE = `http://127.0.0.1:${PORT}`;
const TIME_SCALE = 10; // sim seconds per wall second

let service: ChildProcess;
let control: WebSocket;
let feedback: WebSocket;

const controlReplies: ControlReply[] = [];
const feedbackLog: FeedbackMessage[] = [];
let view: ViewState = initialView();

function nextReply(timeoutMs = 5000): Promise<ControlReply> {
  return new Promise((resolve, reject) => {
    const started = Date.now();
    const poll = () => {
      const reply = controlReplies.shift();
      if (reply) {
        resolve(reply);
      } else if (Date.now() - started > timeoutMs) {
        reject(new Error("no control reply"));
      } else {
        setTimeout(poll, 10);
      }
    };
    poll();
  });
}

function simTime(): number {
  const last = feedbackLog[feedbackLog.length - 1];
  return last?.timestamp ?? 0;
}

async function waitForSimTime(target: number, timeoutMs = 20000): Promise<void> {
  const started = Date.now();
  while (simTime() < target) {
    if (Date.now() - started > timeoutMs) {
      throw new Error(`sim time stuck at ${simTime()} waiting for ${target}`);
    }
    await new Promise((r) => setTimeout(r, 25));
  }
}

beforeAll(async () => {
  service = spawn("python3", ["scripts/run-service.py", String(PORT), String(TIME_SCALE)], {
    stdio: ["ignore", "inherit", "inherit"],
  });
  const deadline = Date.now() + 20000;
  for (;;) {
    try {
      const res = await fetch(`${BASE}/healthz`);
      if (res.ok) break;
    } catch {
      /* not up yet */
    }
    if (Date.now() > deadline) throw new Error("service did not come up");
    await new Promise((r) => setTimeout(r, 200));
  }
  control = new WebSocket(`ws://127.0.0.1:${PORT}/control`);
  control.on("message", (data) => controlReplies.push(JSON.parse(String(data))));
  feedback = new WebSocket(`ws://127.0.0.1:${PORT}/feedback`);
  feedback.on("message", (data) => {
    const msg = decodeFeedback(String(data));
    if (msg) {
      feedbackLog.push(msg);
      view = applyFeedback(view, msg, Date.now() / 1000);
    }
  });
  await Promise.all([
    new Promise((r) => control.once("open", r)),
    new Promise((r) => feedback.once("open", r)),
  ]);
}, 30000);

afterAll(() => {
  control?.close();
  feedback?.close();
  service?.kill();
});

describe("scripted operator session", () => {
  it(
    "drives the service and sees the right counters, trace and toast",
    async () => {
      const panel = new OperatorPanel(
        (text) => control.send(text),
        () => control.readyState === WebSocket.OPEN,
      );

      expect(panel.operate({ action: "start", mode: "sim" })).toBe(true);
      expect((await nextReply()).ok).toBe(true);

      // let the simulated operator watch the assembly for a while
      await waitForSimTime(5.0);

      for (let i = 0; i < 3; i += 1) {
        panel.operate({ action: "instruction", event: "next" });
        expect((await nextReply()).ok).toBe(true);
      }
      panel.operate({ action: "instruction", event: "check_back" });
      expect((await nextReply()).ok).toBe(true);
      panel.operate({ action: "instruction", event: "back", steps: 2 });
      const backReply = await nextReply();
      expect(backReply.ok).toBe(true);
      expect(backReply.counters?.mistakes).toBe(1);

      // gaze away for ten simulated seconds
      panel.operate({ action: "sim", gaze_target: "away" });
      expect((await nextReply()).ok).toBe(true);
      const awayStart = simTime();
      await waitForSimTime(awayStart + 10.0);

      panel.operate({ action: "stop" });
      expect((await nextReply()).ok).toBe(true);

      // server-side counters of the scripted session
      const state = (await (await fetch(`${BASE}/state`)).json()) as FeedbackMessage;
      expect(state.counters.instructions_shown).toBe(3);
      expect(state.counters.instruction_checks).toBe(5);
      expect(state.counters.check_backs).toBe(1);
      expect(state.counters.mistakes).toBe(1);

      // concentration loss rises through the gaze-away window
      const away = feedbackLog.filter(
        (m) =>
          m.timestamp !== null &&
          m.timestamp > awayStart + 1.0 &&
          m.timestamp <= awayStart + 10.0 &&
          m.contributions !== null,
      );
      expect(away.length).toBeGreaterThan(3);
      const cl = away.map((m) => m.contributions!["concentration_loss"] ?? 0);
      expect(cl[cl.length - 1]!).toBeGreaterThan(cl[0]! + 0.05);
      const rising = cl.filter((v, i) => i > 0 && v >= cl[i - 1]! - 1e-9).length;
      expect(rising / (cl.length - 1)).toBeGreaterThan(0.9);

      // the band escalation produced exactly one warning toast
      expect(view.toasts).toHaveLength(1);
      expect(view.toasts[0]!.text).toContain("→");
      expect(panel.sent).toBe(8); // one wire message per scripted action
    },
    60000,
  );
});
