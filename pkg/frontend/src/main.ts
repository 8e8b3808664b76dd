// Dashboard bootstrap: one rendering context, socket messages applied
// in arrival order, controls wired through the operator panel.

import { actionFromElement, OperatorPanel } from "./controls.js";
import { decodeFeedback } from "./protocol.js";
import { render } from "./render.js";
import {
  applyFeedback,
  checkStale,
  dismissToast,
  initialView,
  setConnected,
  setControls,
  ViewState,
} from "./state.js";
import { connectChannel, serviceUrl } from "./ws.js";

const root = document.getElementById("app")!;
let view: ViewState = initialView();

function update(next: ViewState): void {
  if (next !== view) {
    view = next;
    root.innerHTML = render(view);
  }
}

const control = connectChannel(
  serviceUrl("/control"),
  () => {}, // replies surface through the feedback stream
  (connected) => update(setConnected(view, connected)),
);

const panel = new OperatorPanel(
  (text) => control.send(text),
  () => control.connected,
);

connectChannel(
  serviceUrl("/feedback"),
  (text) => {
    const msg = decodeFeedback(text);
    if (msg !== null) {
      update(applyFeedback(view, msg, performance.now() / 1000));
    }
  },
  (connected) => {
    if (connected) {
      panel.operate({ action: "start", mode: "sim" });
    }
  },
);

setInterval(() => update(checkStale(view, performance.now() / 1000)), 500);

root.addEventListener("click", (ev) => {
  const el = (ev.target as HTMLElement).closest<HTMLElement>("[data-action],[data-toast]");
  if (!el) {
    return;
  }
  const toastId = el.dataset.toast;
  if (toastId) {
    update(dismissToast(view, toastId));
    return;
  }
  if (el.dataset.action === "gaze") {
    return; // selects emit on change, not click
  }
  const action = actionFromElement(el);
  if (action) {
    panel.operate(action);
    if (action.action === "sim" && action.agitation) {
      update(setControls(view, { agitation: action.agitation as never }));
    }
  }
});

root.addEventListener("change", (ev) => {
  const el = ev.target as HTMLElement;
  if (el.dataset.action !== "gaze") {
    return;
  }
  const action = actionFromElement(el);
  if (action && action.action === "sim") {
    panel.operate(action);
    update(setControls(view, { gazeTarget: action.gaze_target as never }));
  }
});

root.innerHTML = render(view);
