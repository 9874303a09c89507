/**
 * Minimal scripted implementation of the service protocol, driven
 * through the client's Transport interface. Mimics the real server's
 * behavior: per-render shuffled key letters, silent advancement on
 * wrong login entries, verdict only at finalize.
 */

import type {
  ChallengeEntry,
  PortfolioRender,
  ServiceErrorBody,
  Transport,
} from "../src/api.js";

const ALPHABET = "abcd";

export interface FakePortfolio {
  id: string;
  category: string;
  keywords: string[]; // index i holds ordinal i + 1
}

export interface FakeCredential {
  sequence: { portfolioId: string; ordinal: number }[];
}

interface SessionState {
  mode: "register" | "login";
  step: number;
  currentPortfolio: string;
  visited: string[];
  entered: number[];
  letters: Map<string, number>;
  closed: boolean;
}

export function makePortfolios(n: number): FakePortfolio[] {
  return Array.from({ length: n }, (_, i) => ({
    id: `p${i + 1}`,
    category: `category ${i + 1}`,
    keywords: ALPHABET.split("").map((c) => `${c}word${i + 1}`),
  }));
}

export class FakeService {
  locked = false;
  readonly requests: { url: string; body?: string }[] = [];
  private sessions = new Map<string, SessionState>();
  private nextSession = 1;
  private rngState: number;

  constructor(
    private readonly portfolios: FakePortfolio[],
    private readonly credential: FakeCredential,
    seed = 42
  ) {
    this.rngState = seed >>> 0;
  }

  private rand(bound: number): number {
    // LCG is plenty for scripted tests
    this.rngState = (this.rngState * 1664525 + 1013904223) >>> 0;
    return this.rngState % bound;
  }

  private shuffleLetters(): Map<string, number> {
    const ordinals = ALPHABET.split("").map((_, i) => i + 1);
    for (let i = ordinals.length - 1; i > 0; i--) {
      const j = this.rand(i + 1);
      [ordinals[i], ordinals[j]] = [ordinals[j], ordinals[i]];
    }
    return new Map(ALPHABET.split("").map((c, i) => [c, ordinals[i]]));
  }

  private render(portfolioId: string, letters: Map<string, number>): PortfolioRender {
    const portfolio = this.portfolios.find((p) => p.id === portfolioId)!;
    const bySymbol = [...letters.entries()];
    const entries: ChallengeEntry[] = portfolio.keywords.map((keyword, index) => {
      const ordinal = index + 1;
      const symbol = bySymbol.find(([, o]) => o === ordinal)![0];
      return {
        keyword,
        ordinal,
        fact: `fact about ${keyword}`,
        image_url: `/assets/${portfolioId}-${ordinal}`,
        key_symbol: symbol,
      };
    });
    return { portfolio_id: portfolio.id, category: portfolio.category, entries };
  }

  private nextPortfolio(state: SessionState, ordinal: number): string {
    const candidates = this.portfolios
      .map((p) => p.id)
      .filter((id) => !state.visited.includes(id))
      .sort();
    return candidates[ordinal % candidates.length];
  }

  private challengeView(sessionId: string, state: SessionState) {
    return {
      session_id: sessionId,
      step: state.step,
      state: state.step >= this.credential.sequence.length ? "awaiting_finalize" : "challenge",
      portfolio:
        state.step >= this.credential.sequence.length
          ? null
          : this.render(state.currentPortfolio, state.letters),
      input: { type: "masked_char", length: 1 },
    };
  }

  private studyView(sessionId: string, state: SessionState) {
    const { portfolioId, ordinal } = this.credential.sequence[state.step];
    const render = this.render(portfolioId, state.letters);
    const entry = render.entries.find((e) => e.ordinal === ordinal)!;
    return {
      session_id: sessionId,
      step: state.step,
      total_steps: this.credential.sequence.length,
      keyword: entry.keyword,
      ordinal,
      fact: entry.fact,
      image_url: entry.image_url,
      portfolio: render,
    };
  }

  transport(): Transport {
    return async (url, init) => {
      this.requests.push({ url, body: init.body });
      const respond = (status: number, payload: unknown) => ({
        status,
        json: async () => payload,
      });
      const error = (status: number, body: ServiceErrorBody) => respond(status, body);
      const path = url.split("?")[0];
      const body = init.body ? JSON.parse(init.body) : {};

      if (path === "/login/start") {
        if (this.locked) {
          return error(423, { error: "locked_out", detail: "locked" });
        }
        const id = `s${this.nextSession++}`;
        const state: SessionState = {
          mode: "login",
          step: 0,
          currentPortfolio: this.credential.sequence[0].portfolioId,
          visited: [this.credential.sequence[0].portfolioId],
          entered: [],
          letters: this.shuffleLetters(),
          closed: false,
        };
        this.sessions.set(id, state);
        return respond(200, this.challengeView(id, state));
      }

      if (path === "/login/key") {
        const state = this.sessions.get(body.session_id);
        if (!state || state.closed) {
          return error(410, { error: "session_closed" });
        }
        const ordinal = state.letters.get(body.key);
        if (ordinal === undefined) {
          return error(422, { error: "invalid_symbol" });
        }
        state.entered.push(ordinal);
        state.step += 1;
        if (state.step < this.credential.sequence.length) {
          state.currentPortfolio = this.nextPortfolio(state, ordinal);
          state.visited.push(state.currentPortfolio);
          state.letters = this.shuffleLetters();
        }
        return respond(200, this.challengeView(body.session_id, state));
      }

      if (path === "/login/finalize") {
        const state = this.sessions.get(body.session_id);
        if (!state) {
          return error(410, { error: "session_closed" });
        }
        state.closed = true;
        const ok = this.credential.sequence.every(
          (part, i) =>
            state.visited[i] === part.portfolioId && state.entered[i] === part.ordinal
        );
        return ok
          ? respond(200, { result: "success" })
          : error(401, { result: "failure", error: "authentication_failed" });
      }

      if (path === "/register/start") {
        if (init.headers["X-Admin-Token"] !== "fake-admin") {
          return error(401, { error: "bad_admin_token" });
        }
        const id = `s${this.nextSession++}`;
        const state: SessionState = {
          mode: "register",
          step: 0,
          currentPortfolio: this.credential.sequence[0].portfolioId,
          visited: [],
          entered: [],
          letters: this.shuffleLetters(),
          closed: false,
        };
        this.sessions.set(id, state);
        return respond(200, { session_id: id, study: this.studyView(id, state) });
      }

      if (path === "/register/study") {
        const id = new URL(url, "http://x").searchParams.get("session_id")!;
        const state = this.sessions.get(id);
        if (!state || state.closed) {
          return error(410, { error: "session_closed" });
        }
        return respond(200, this.studyView(id, state));
      }

      if (path === "/register/key") {
        const state = this.sessions.get(body.session_id);
        if (!state || state.closed) {
          return error(410, { error: "session_closed" });
        }
        const ordinal = state.letters.get(body.key);
        if (ordinal === undefined) {
          return error(422, { error: "invalid_symbol" });
        }
        if (ordinal !== this.credential.sequence[state.step].ordinal) {
          return error(400, { error: "wrong_key", step: state.step });
        }
        state.step += 1;
        state.letters = this.shuffleLetters();
        if (state.step === this.credential.sequence.length) {
          state.closed = true;
          return respond(201, { state: "complete", step: state.step, study: null });
        }
        return respond(200, {
          state: "study",
          step: state.step,
          study: this.studyView(body.session_id, state),
        });
      }

      return error(404, { error: "not_found" });
    };
  }
}
