// Thin reconnecting WebSocket wrappers around the two service channels.

export interface Channel {
  send(text: string): void;
  readonly connected: boolean;
  close(): void;
}

export function connectChannel(
  url: string,
  onMessage: (text: string) => void,
  onStatus: (connected: boolean) => void,
): Channel {
  let ws: WebSocket;
  let closed = false;
  let attempts = 0;

  const open = () => {
    ws = new WebSocket(url);
    ws.onopen = () => {
      attempts = 0;
      onStatus(true);
    };
    ws.onmessage = (ev) => onMessage(String(ev.data));
    ws.onclose = () => {
      onStatus(false);
      if (!closed) {
        const backoff = Math.min(500 * 2 ** attempts, 8000);
        attempts += 1;
        setTimeout(open, backoff);
      }
    };
  };
  open();

  return {
    send: (text) => {
      if (ws.readyState === WebSocket.OPEN) {
        ws.send(text);
      }
    },
    get connected() {
      return ws.readyState === WebSocket.OPEN;
    },
    close: () => {
      closed = true;
      ws.close();
    },
  };
}

export function serviceUrl(path: string): string {
  const proto = location.protocol === "https:" ? "wss" : "ws";
  return `${proto}://${location.host}${path}`;
}
