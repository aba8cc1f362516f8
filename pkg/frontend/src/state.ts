/** Session-side state: serializes sends so a double submit cannot fire a
 *  second request while one is in flight. */

import { ApiClient, MessageResult } from "./api.js";

export interface Exchange {
  userText: string;
  result: MessageResult;
}

export class SessionController {
  readonly exchanges: Exchange[] = [];
  private inFlight = false;

  constructor(private api: ApiClient, readonly sessionId: string) {}

  get pending(): boolean {
    return this.inFlight;
  }

  /** Send a user message. Returns null (no request issued) when a send is
   *  already pending or the text is blank. */
  async send(text: string): Promise<MessageResult | null> {
    const trimmed = text.trim();
    if (this.inFlight || trimmed === "") {
      return null;
    }
    this.inFlight = true;
    try {
      const result = await this.api.sendMessage(this.sessionId, trimmed);
      this.exchanges.push({ userText: trimmed, result });
      return result;
    } finally {
      this.inFlight = false;
    }
  }
}
