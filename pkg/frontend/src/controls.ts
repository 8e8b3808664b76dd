// Operator actions -> wire messages. One message per action, none while
// disconnected; the socket layer is injected so tests can count sends.

import { ControlAction, encodeControl } from "./protocol.js";

export type SendFn = (text: string) => void;

export class OperatorPanel {
  sent = 0;

  constructor(
    private readonly send: SendFn,
    private readonly isConnected: () => boolean,
  ) {}

  operate(action: ControlAction): boolean {
    if (!this.isConnected()) {
      return false;
    }
    this.send(encodeControl(action));
    this.sent += 1;
    return true;
  }
}

// Map a click/change inside the control panel to its action, if any.
export function actionFromElement(el: HTMLElement): ControlAction | null {
  const kind = el.dataset.action;
  if (kind === "instruction") {
    const event = el.dataset.event as "next" | "check_back" | "back" | undefined;
    if (!event) {
      return null;
    }
    const steps = el.dataset.steps ? Number(el.dataset.steps) : undefined;
    return steps === undefined ? { action: "instruction", event } : { action: "instruction", event, steps };
  }
  if (kind === "self_touch") {
    return { action: "self_touch" };
  }
  if (kind === "gaze") {
    const value = (el as HTMLSelectElement).value;
    return { action: "sim", gaze_target: value === "away" ? "away" : Number(value) };
  }
  if (kind === "agitation") {
    const level = el.dataset.level;
    return level ? { action: "sim", agitation: level } : null;
  }
  return null;
}
